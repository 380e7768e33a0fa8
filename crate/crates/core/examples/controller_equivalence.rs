//! The RMP-tree with RMPb edges against the degree-normalized formation
//! controller, then original against degree-normalized potential controllers.

use rmpflow::oracle::{compare_trajectories, Normalization};
use rmpflow::sim::run_with;
use rmpflow::verify::{pentagon_graphs, settle};
use rmpflow::{run, Result, Scenario};

fn main() -> Result<()> {
    let sc = Scenario::builtin("fig7")?;
    let reference = sc
        .reference
        .clone()
        .expect("fig7 carries its reference controller");
    let rmp = run(&sc, &sc.sim)?;
    let baseline = run_with(&sc, &sc.sim, |s| sc.reference_accel(&reference, s))?;
    println!(
        "pentagon contraction over {:.1} s: max position deviation {:.3e} m",
        sc.sim.t_final,
        compare_trajectories(&rmp, &baseline)?
    );

    let start = sc.initial.clone();
    let original = pentagon_graphs(2.0, Normalization::Original)?;
    let normalized = pentagon_graphs(2.0, Normalization::DegreeNormalized)?;
    for ((name, g0), (_, g1)) in original.iter().zip(&normalized) {
        let a = settle(g0, &start, 0.01, 60.0)?;
        let b = settle(g1, &start, 0.01, 60.0)?;
        let la = g0.edge_lengths(&a.x);
        let lb = g1.edge_lengths(&b.x);
        let gap = la
            .iter()
            .zip(&lb)
            .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
        println!(
            "{name:>8} graph: |grad E| {:.1e} / {:.1e}, |v| {:.1e} / {:.1e}, edge length gap {gap:.1e}",
            g0.gradient(&a.x)?.amax(),
            g1.gradient(&b.x)?.amax(),
            a.xdot.amax(),
            b.xdot.amax()
        );
    }
    Ok(())
}
