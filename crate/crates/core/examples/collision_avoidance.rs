//! Three robots swap to antipodal goals through the same point, with
//! pairwise barrier leaves keeping them apart.

use rmpflow::{run, Result, Scenario};

fn main() -> Result<()> {
    for name in ["fig8-centralized", "fig8-decentralized"] {
        let sc = Scenario::builtin(name)?;
        let log = run(&sc, &sc.sim)?;
        let safety = 0.1;
        println!("{name} ({:?} planner)", sc.sim.mode);
        for (k, d) in log.diagnostics.iter().enumerate().step_by(log.len() / 8) {
            println!(
                "  t={:5.1}  min distance {:.4}  goals {:?}",
                log.times[k],
                d.min_distance,
                d.goal_distances
                    .iter()
                    .map(|g| format!("{g:.3}"))
                    .collect::<Vec<_>>()
            );
        }
        println!(
            "  closest approach {:.4} m (safety distance {safety}), {:?}",
            log.min_distance, log.termination
        );
    }
    Ok(())
}
