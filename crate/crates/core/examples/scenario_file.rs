//! A scenario written as JSON, loaded back, simulated, and written out as
//! CSV, summary and SVG.

use rmpflow::output::{write_outputs, RunSummary};
use rmpflow::{run, Result, RmpError, Scenario};

const SCENARIO: &str = r#"{
  "name": "square-to-goal",
  "metadata": { "description": "four robots keep a square while robot 1 is pulled to a goal" },
  "robots": [
    { "id": 1, "position": [0.0, 0.0] },
    { "id": 2, "position": [0.5, 0.0] },
    { "id": 3, "position": [0.5, 0.5] },
    { "id": 4, "position": [0.0, 0.5] }
  ],
  "subtasks": [
    { "participants": [1, 2], "kind": "dist_pres_a", "params": { "distance": 0.5, "c": 1.0, "alpha": 1.0, "eta": 2.0 } },
    { "participants": [2, 3], "kind": "dist_pres_a", "params": { "distance": 0.5, "c": 1.0, "alpha": 1.0, "eta": 2.0 } },
    { "participants": [3, 4], "kind": "dist_pres_a", "params": { "distance": 0.5, "c": 1.0, "alpha": 1.0, "eta": 2.0 } },
    { "participants": [1, 4], "kind": "dist_pres_a", "params": { "distance": 0.5, "c": 1.0, "alpha": 1.0, "eta": 2.0 } },
    { "participants": [1, 3], "kind": "dist_pres_a", "params": { "distance": 0.7071067811865476, "c": 1.0, "alpha": 1.0, "eta": 2.0 } },
    { "participants": [1], "kind": "goal_attractor_a", "params": { "goal": [-0.5, 0.5],
        "w_u": 10.0, "w_l": 1.0, "sigma": 0.1, "alpha": 10.0, "beta": 0.1, "eta": 1.0 } },
    { "participants": [1], "kind": "damper", "params": { "c": 0.01, "eta": 1.0 } },
    { "participants": [2], "kind": "damper", "params": { "c": 0.01, "eta": 1.0 } },
    { "participants": [3], "kind": "damper", "params": { "c": 0.01, "eta": 1.0 } },
    { "participants": [4], "kind": "damper", "params": { "c": 0.01, "eta": 1.0 } }
  ],
  "sim": { "dt": 0.01, "t_final": 30.0, "integrator": "rk4", "mode": "centralized", "cadence": 10 },
  "outputs": { "plot": true }
}"#;

fn main() -> Result<()> {
    let sc = Scenario::parse(SCENARIO, "square-to-goal.json")
        .map_err(|e| RmpError::Config(e.to_string()))?;
    println!(
        "{}: {} robots, {} subtasks",
        sc.name,
        sc.team.len(),
        sc.subtasks.len()
    );

    // Broken input points at the offending line.
    let broken = SCENARIO.replace("\"c\": 0.01", "\"c\": -0.01");
    if let Err(e) = Scenario::parse(&broken, "broken.json") {
        println!("rejected: {e}");
    }

    let log = run(&sc, &sc.sim)?;
    let summary = RunSummary::new(&sc, &log);
    let dir = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join(&sc.name));
    write_outputs(&dir, &sc, &log, &summary, sc.outputs.plot)
        .map_err(|e| RmpError::Config(format!("{}: {e}", dir.display())))?;
    println!(
        "{} steps, closest approach {:.3} m, final max edge error {:.2e}, converged: {}",
        log.steps_completed,
        log.min_distance,
        log.final_diagnostics()
            .map_or(f64::NAN, |d| d.max_edge_error()),
        summary.convergence.converged
    );
    println!("wrote {}", dir.display());
    Ok(())
}
