//! Trajectory CSV, run summaries and SVG plots.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::scenario::{ReferenceLaw, Scenario};
use crate::sim::{formation_edges, Diagnostics, PlannerMode, Termination, TrajectoryLog};

/// Threshold on `‖q̇‖∞` and `‖∇Φ‖∞` for a run to count as converged.
pub const CONVERGENCE_THRESHOLD: f64 = 1e-3;

fn coord_name(robot_dim: usize, k: usize) -> String {
    match (robot_dim, k) {
        (2 | 3, 0) => "x".into(),
        (2 | 3, 1) => "y".into(),
        (3, 2) => "z".into(),
        _ => format!("q{k}"),
    }
}

/// `t`, then per robot its position coordinates followed by its velocity.
pub fn trajectory_csv(log: &TrajectoryLog) -> String {
    let n = log.robot_dim;
    let mut out = String::from("t");
    for id in &log.robots {
        for k in 0..n {
            let _ = write!(out, ",{}_{id}", coord_name(n, k));
        }
        for k in 0..n {
            let _ = write!(out, ",v{}_{id}", coord_name(n, k));
        }
    }
    out.push('\n');
    for (t, s) in log.times.iter().zip(&log.states) {
        let _ = write!(out, "{t}");
        for slot in 0..log.robots.len() {
            for k in 0..n {
                let _ = write!(out, ",{}", s.x[slot * n + k]);
            }
            for k in 0..n {
                let _ = write!(out, ",{}", s.xdot[slot * n + k]);
            }
        }
        out.push('\n');
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub threshold: f64,
    pub speed_converged: bool,
    pub gradient_converged: bool,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceComparison {
    pub law: ReferenceLaw,
    pub max_position_deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub mode: PlannerMode,
    pub dt: f64,
    pub t_final: f64,
    pub steps_completed: usize,
    pub termination: Termination,
    pub final_time: f64,
    pub final_diagnostics: Option<Diagnostics>,
    #[serde(with = "crate::sim::infinite_as_null")]
    pub min_distance: f64,
    pub max_edge_error: f64,
    pub max_lyapunov_increase: Option<f64>,
    pub goal_work: f64,
    pub convergence: Convergence,
    pub lyapunov: Vec<f64>,
    /// `null` where the distance is undefined (single robot).
    pub min_distance_series: Vec<Option<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceComparison>,
}

impl RunSummary {
    pub fn new(scenario: &Scenario, log: &TrajectoryLog) -> Self {
        let fin = log.final_diagnostics().cloned();
        let speed = fin
            .as_ref()
            .is_some_and(|d| d.max_speed < CONVERGENCE_THRESHOLD);
        let grad = fin
            .as_ref()
            .is_some_and(|d| d.potential_grad_norm < CONVERGENCE_THRESHOLD);
        Self {
            scenario: scenario.name.clone(),
            mode: scenario.sim.mode,
            dt: scenario.sim.dt,
            t_final: scenario.sim.t_final,
            steps_completed: log.steps_completed,
            termination: log.termination.clone(),
            final_time: log.times.last().copied().unwrap_or(0.0),
            final_diagnostics: fin,
            min_distance: log.min_distance,
            max_edge_error: log.max_edge_error(),
            max_lyapunov_increase: (log.max_lyapunov_increase_step.is_some())
                .then_some(log.max_lyapunov_increase),
            goal_work: log.goal_work,
            convergence: Convergence {
                threshold: CONVERGENCE_THRESHOLD,
                speed_converged: speed,
                gradient_converged: grad,
                converged: speed && grad && log.termination.is_completed(),
            },
            lyapunov: log.lyapunov.clone(),
            min_distance_series: log
                .diagnostics
                .iter()
                .map(|d| d.min_distance.is_finite().then_some(d.min_distance))
                .collect(),
            reference: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

/// Plot styling.
#[derive(Clone, Debug, PartialEq)]
pub struct PlotStyle {
    pub width: f64,
    pub height: f64,
    /// Number of formation snapshots drawn, including start and end.
    pub snapshots: usize,
    pub trajectory_color: &'static str,
    pub formation_color: &'static str,
    pub start_color: &'static str,
    pub goal_color: &'static str,
}

impl Default for PlotStyle {
    fn default() -> Self {
        Self {
            width: 640.0,
            height: 640.0,
            snapshots: 5,
            trajectory_color: "#f28e2b",
            formation_color: "#1f4e9c",
            start_color: "#4e79a7",
            goal_color: "#2ca02c",
        }
    }
}

struct Frame {
    min: [f64; 2],
    scale: f64,
    height: f64,
    pad: f64,
}

impl Frame {
    fn px(&self, p: [f64; 2]) -> (f64, f64) {
        (
            self.pad + (p[0] - self.min[0]) * self.scale,
            self.height - self.pad - (p[1] - self.min[1]) * self.scale,
        )
    }
}

fn star(cx: f64, cy: f64, r: f64) -> String {
    let mut pts = Vec::with_capacity(10);
    for k in 0..10 {
        let rad = if k % 2 == 0 { r } else { 0.45 * r };
        let th = -std::f64::consts::FRAC_PI_2 + k as f64 * std::f64::consts::PI / 5.0;
        pts.push(format!(
            "{:.2},{:.2}",
            cx + rad * th.cos(),
            cy + rad * th.sin()
        ));
    }
    pts.join(" ")
}

/// Planar trajectory plot: one polyline per robot, start markers, goal
/// stars and formation edges at evenly spaced samples. Output depends only
/// on the inputs.
pub fn emit_plot(scenario: &Scenario, log: &TrajectoryLog, style: &PlotStyle) -> String {
    let n = log.robot_dim;
    let planar = |s: &crate::rmp::State, slot: usize| -> [f64; 2] {
        [s.x[slot * n], if n > 1 { s.x[slot * n + 1] } else { 0.0 }]
    };
    let goals: Vec<[f64; 2]> = scenario
        .subtasks
        .iter()
        .filter_map(|s| s.policy.goal())
        .map(|g| [g[0], if g.len() > 1 { g[1] } else { 0.0 }])
        .collect();

    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    let mut grow = |p: [f64; 2]| {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    };
    for s in &log.states {
        for slot in 0..log.robots.len() {
            grow(planar(s, slot));
        }
    }
    goals.iter().for_each(|g| grow(*g));
    if !lo[0].is_finite() {
        lo = [-1.0, -1.0];
        hi = [1.0, 1.0];
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-6);
    let pad = 24.0;
    let frame = Frame {
        min: lo,
        scale: (style.width.min(style.height) - 2.0 * pad) / span,
        height: style.height,
        pad,
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = style.width,
        h = style.height
    );
    let _ = writeln!(svg, r#"<title>{}</title>"#, scenario.name);
    let _ = writeln!(
        svg,
        r##"<rect width="100%" height="100%" fill="#ffffff"/>"##
    );

    let edges = formation_edges(&scenario.subtasks);
    let k_max = log.states.len();
    if !edges.is_empty() && k_max > 0 {
        let shots = style.snapshots.max(2).min(k_max);
        let mut picked: Vec<usize> = (0..shots)
            .map(|i| {
                if shots == 1 {
                    0
                } else {
                    i * (k_max - 1) / (shots - 1)
                }
            })
            .collect();
        picked.dedup();
        for (rank, &k) in picked.iter().enumerate() {
            let opacity = 0.2 + 0.8 * (rank + 1) as f64 / picked.len() as f64;
            let _ = writeln!(
                svg,
                r#"<g class="formation" data-t="{:.3}" stroke="{}" stroke-opacity="{opacity:.3}" stroke-width="1.5">"#,
                log.times[k], style.formation_color
            );
            for &(i, j, _) in &edges {
                let (Some(a), Some(b)) = (
                    log.robots.iter().position(|r| *r == i),
                    log.robots.iter().position(|r| *r == j),
                ) else {
                    continue;
                };
                let (x1, y1) = frame.px(planar(&log.states[k], a));
                let (x2, y2) = frame.px(planar(&log.states[k], b));
                let _ = writeln!(
                    svg,
                    r#"  <line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}"/>"#
                );
            }
            let _ = writeln!(svg, "</g>");
        }
    }

    for (slot, id) in log.robots.iter().enumerate() {
        let pts: Vec<(f64, f64)> = log
            .states
            .iter()
            .map(|s| frame.px(planar(s, slot)))
            .collect();
        let moved = pts
            .iter()
            .any(|p| (p.0 - pts[0].0).abs() > 1e-9 || (p.1 - pts[0].1).abs() > 1e-9);
        if moved {
            let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            let _ = writeln!(
                svg,
                r#"<polyline class="trajectory" data-robot="{id}" fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
                style.trajectory_color,
                coords.join(" ")
            );
        }
        if let Some((x, y)) = pts.first() {
            let _ = writeln!(
                svg,
                r#"<circle class="start" data-robot="{id}" cx="{x:.2}" cy="{y:.2}" r="4" fill="{}"/>"#,
                style.start_color
            );
        }
    }
    for g in &goals {
        let (x, y) = frame.px(*g);
        let _ = writeln!(
            svg,
            r#"<polygon class="goal" points="{}" fill="{}"/>"#,
            star(x, y, 7.0),
            style.goal_color
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Writes `trajectory.csv`, `summary.json` and optionally `trajectory.svg`.
pub fn write_outputs(
    dir: &Path,
    scenario: &Scenario,
    log: &TrajectoryLog,
    summary: &RunSummary,
    plot: bool,
) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("trajectory.csv"), trajectory_csv(log))?;
    fs::write(dir.join("summary.json"), summary.to_json())?;
    if plot {
        fs::write(
            dir.join("trajectory.svg"),
            emit_plot(scenario, log, &PlotStyle::default()),
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rmp::State;
    use crate::sim::{run, SimConfig};
    use crate::team::RobotTeamSpec;
    use nalgebra::DVector;

    fn static_robot() -> (Scenario, TrajectoryLog) {
        let sc = Scenario::new(
            "one",
            RobotTeamSpec::planar(1).unwrap(),
            State::at_rest(DVector::from_column_slice(&[0.5, 0.5])),
            vec![],
        )
        .unwrap();
        let log = run(&sc, &SimConfig::new(0.1, 1.0)).unwrap();
        (sc, log)
    }

    #[test]
    fn csv_shape() {
        let (_, log) = static_robot();
        let csv = trajectory_csv(&log);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "t,x_1,y_1,vx_1,vy_1");
        assert_eq!(lines.len(), 1 + log.len());
        assert!(lines.iter().all(|l| l.split(',').count() == 5));
    }

    #[test]
    fn static_robot_is_one_dot() {
        let (sc, log) = static_robot();
        let svg = emit_plot(&sc, &log, &PlotStyle::default());
        assert_eq!(svg.matches("<circle").count(), 1);
        assert_eq!(svg.matches("<polyline").count(), 0);
        assert_eq!(svg, emit_plot(&sc, &log, &PlotStyle::default()));
    }

    #[test]
    fn summary_serializes() {
        let (sc, log) = static_robot();
        let s = RunSummary::new(&sc, &log);
        let back: RunSummary = serde_json::from_str(&s.to_json()).unwrap();
        assert_eq!(back, s);
        assert!(s.convergence.converged);
    }
}
