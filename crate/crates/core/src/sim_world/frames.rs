use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::{SimConfig, SimError};

/// Pose of a frame relative to a parent: `rotation` takes child coordinates
/// into parent coordinates and `translation` is the child origin in the
/// parent, including its height `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl BodyTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Body rotated by `roll`, `pitch`, `yaw` (ZYX order) at the given origin.
    pub fn from_euler(roll: f64, pitch: f64, yaw: f64, translation: Vector3<f64>) -> Self {
        Self {
            rotation: nalgebra::Rotation3::from_euler_angles(roll, pitch, yaw).into_inner(),
            translation,
        }
    }

    /// Orthonormal with determinant +1, to `1e-9`.
    pub fn validate(&self) -> Result<(), SimError> {
        let r = &self.rotation;
        if r.iter().any(|v| !v.is_finite()) || self.translation.iter().any(|v| !v.is_finite()) {
            return Err(SimError::InvalidRotation("non-finite entries".into()));
        }
        let residual = (r.transpose() * r - Matrix3::identity()).amax();
        if residual > 1e-9 {
            return Err(SimError::InvalidRotation(format!(
                "not orthonormal (max |R^T R - I| = {residual:e})"
            )));
        }
        let det = r.determinant();
        if (det - 1.0).abs() > 1e-9 {
            return Err(SimError::InvalidRotation(format!("determinant {det}, expected +1")));
        }
        Ok(())
    }
}

/// Footprint frame relative to the body: the inverse of the body rotation,
/// and the vertical drop `(0, 0, -z)` expressed in body coordinates.
pub fn project_base_footprint(tf: &BodyTransform) -> Result<BodyTransform, SimError> {
    tf.validate()?;
    let inverse = tf.rotation.transpose();
    Ok(BodyTransform {
        rotation: inverse,
        translation: inverse * Vector3::new(0.0, 0.0, -tf.translation.z),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct JoystickCommand {
    pub lx: f64,
    pub ly: f64,
    pub rx: f64,
    pub ry: f64,
}

/// Largest magnitude a stick axis may report; the joystick range is open.
pub const STICK_LIMIT: f64 = 1.0 - f64::EPSILON;

/// Left stick forward for `+x`, left stick right for `-y`, right stick right
/// for `-yaw`, each normalized by the configured velocity limit.
pub fn velocity_to_joystick(linear: Vector3<f64>, angular: Vector3<f64>, config: &SimConfig) -> JoystickCommand {
    let clamp = |v: f64| v.clamp(-STICK_LIMIT, STICK_LIMIT);
    JoystickCommand {
        lx: clamp(-linear.y / config.max_vy),
        ly: clamp(linear.x / config.max_vx),
        rx: clamp(-angular.z / config.max_wz),
        ry: 0.0,
    }
}
