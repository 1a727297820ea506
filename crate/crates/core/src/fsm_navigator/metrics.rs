use serde::{Deserialize, Serialize};

use super::mission::RunLog;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionReport {
    pub waypoints: usize,
    /// Includes operator-assisted arrivals.
    pub reached: usize,
    pub assisted: Vec<usize>,
    pub unreached: Vec<usize>,
    pub reachability_percent: f64,
    pub total_time: f64,
    pub median_time: Option<f64>,
    pub per_waypoint_time: Vec<f64>,
}

fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    })
}

pub fn mission_metrics(log: &RunLog) -> MissionReport {
    let waypoints = log.verdicts.len();
    let reached = log.verdicts.iter().filter(|v| v.reached).count();
    let per_waypoint_time: Vec<f64> = log.verdicts.iter().map(|v| v.duration).collect();
    MissionReport {
        waypoints,
        reached,
        assisted: log.verdicts.iter().filter(|v| v.assisted).map(|v| v.index).collect(),
        unreached: log.verdicts.iter().filter(|v| !v.reached).map(|v| v.index).collect(),
        reachability_percent: if waypoints == 0 {
            100.0
        } else {
            100.0 * reached as f64 / waypoints as f64
        },
        total_time: log.end_time,
        median_time: median(&per_waypoint_time),
        per_waypoint_time,
    }
}

impl MissionReport {
    /// Free-text remark for the observations column; waypoint numbers are one-based.
    pub fn observations(&self) -> String {
        let list = |v: &[usize]| v.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(", ");
        let mut parts = Vec::new();
        if !self.assisted.is_empty() {
            parts.push(format!(
                "Human assistance required at waypoint {}.",
                list(&self.assisted)
            ));
        }
        if !self.unreached.is_empty() {
            parts.push(format!("Waypoints {} unreachable.", list(&self.unreached)));
        }
        if parts.is_empty() {
            "-".to_string()
        } else {
            parts.join(" ")
        }
    }

    /// Aligned text table, one row per `(trial label, report)`.
    pub fn table(rows: &[(String, MissionReport)]) -> String {
        let header = [
            "Trial",
            "Waypoints",
            "Reached",
            "Reachability (%)",
            "Total time (s)",
            "Median time (s)",
            "Observations",
        ];
        let body: Vec<[String; 7]> = rows
            .iter()
            .map(|(label, r)| {
                [
                    label.clone(),
                    r.waypoints.to_string(),
                    r.reached.to_string(),
                    format!("{:.2}", r.reachability_percent),
                    format!("{:.2}", r.total_time),
                    r.median_time.map_or("-".to_string(), |m| format!("{m:.2}")),
                    r.observations(),
                ]
            })
            .collect();
        let mut widths = header.map(str::len);
        for row in &body {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let line = |cells: &[String]| {
            let mut s = String::new();
            for (i, (cell, w)) in cells.iter().zip(widths).enumerate() {
                if i + 1 == cells.len() {
                    s.push_str(cell);
                } else if i == 0 {
                    s.push_str(&format!("{cell:<w$}  "));
                } else {
                    s.push_str(&format!("{cell:>w$}  "));
                }
            }
            s.trim_end().to_string() + "\n"
        };
        let mut out = line(&header.map(String::from));
        for row in &body {
            out.push_str(&line(row));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fsm_navigator::{MissionOutcome, Pose2D, WaypointVerdict};

    fn log_with(reached: &[bool]) -> RunLog {
        RunLog {
            start: Pose2D::default(),
            events: Vec::new(),
            transitions: Vec::new(),
            verdicts: reached
                .iter()
                .enumerate()
                .map(|(index, &reached)| WaypointVerdict {
                    index,
                    goal: Pose2D::default(),
                    reached,
                    assisted: false,
                    attempts: 1,
                    timeouts: 0,
                    duration: 1.0 + index as f64,
                    goal_true_blocked: false,
                })
                .collect(),
            captures: Vec::new(),
            outcome: MissionOutcome::Completed,
            end_time: 42.0,
        }
    }

    #[test]
    fn reachability_examples() {
        let mut flags = vec![true; 23];
        for i in [3, 8, 15, 20] {
            flags[i] = false;
        }
        let r = mission_metrics(&log_with(&flags));
        assert_eq!(r.reached, 19);
        assert_eq!(format!("{:.2}", r.reachability_percent), "82.61");
        assert_eq!(r.unreached, vec![3, 8, 15, 20]);
        assert_eq!(mission_metrics(&log_with(&[true; 5])).reachability_percent, 100.0);
        assert_eq!(mission_metrics(&log_with(&[false; 4])).reachability_percent, 0.0);
    }

    #[test]
    fn median_and_times() {
        let r = mission_metrics(&log_with(&[true, true, true, true]));
        assert_eq!(r.per_waypoint_time, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(r.median_time, Some(2.5));
        assert_eq!(r.total_time, 42.0);
        assert_eq!(mission_metrics(&log_with(&[])).median_time, None);
    }

    #[test]
    fn table_is_aligned() {
        let mut a = mission_metrics(&log_with(&[true; 3]));
        a.assisted = vec![1];
        let b = mission_metrics(&log_with(&[true, false]));
        let text = MissionReport::table(&[("1".into(), a), ("2".into(), b)]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("Trial  Waypoints  Reached  Reachability (%)"));
        let col = lines[0].find("Observations").unwrap();
        assert_eq!(&lines[1][col..], "Human assistance required at waypoint 2.");
        assert_eq!(&lines[2][col..], "Waypoints 2 unreachable.");
        assert!(lines[2].contains(" 50.00 "));
    }
}
