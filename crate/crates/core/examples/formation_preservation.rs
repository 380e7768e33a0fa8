//! Pentagon led to a goal by one robot, with RMPa and then RMPb edges.
//!
//! Writes `trajectory.svg` for each run under the directory given as the
//! first argument (default: the system temp dir).

use std::path::PathBuf;

use rmpflow::output::{emit_plot, PlotStyle};
use rmpflow::{run, Result, Scenario};

fn main() -> Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(std::env::temp_dir);
    let mut peaks = Vec::new();
    for name in ["fig3a", "fig3b"] {
        let sc = Scenario::builtin(name)?;
        let log = run(&sc, &sc.sim)?;
        println!("{name}: {}", sc.description().unwrap_or_default());
        println!("     t   edge err   leader-goal   max speed");
        let every = log.len() / 10;
        for (k, d) in log.diagnostics.iter().enumerate().step_by(every.max(1)) {
            println!(
                "{:6.1}   {:8.5}   {:11.5}   {:9.2e}",
                log.times[k],
                d.max_edge_error(),
                d.goal_distances[0],
                d.max_speed
            );
        }
        println!(
            "peak edge error {:.4}, {:?}\n",
            log.max_edge_error(),
            log.termination
        );
        peaks.push(log.max_edge_error());

        let path = out.join(format!("{name}.svg"));
        std::fs::write(&path, emit_plot(&sc, &log, &PlotStyle::default()))
            .map_err(|e| rmpflow::RmpError::Config(format!("{}: {e}", path.display())))?;
        println!("wrote {}", path.display());
    }
    println!("RMPa peak {:.4} vs RMPb peak {:.4}", peaks[0], peaks[1]);
    Ok(())
}
