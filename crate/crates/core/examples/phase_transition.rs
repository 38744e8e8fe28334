//! u_2 across dimensions: the dominant Hoeffding order moves from 1 to 2 as d grows.

use univ_lab::datagen::CoordinateLaw;
use univ_lab::experiments::{run, ExperimentKind, ExperimentSpec, MmdGrid, MuSpec, PhaseTransitionSpec, U2Grid};

fn main() -> univ_lab::Result<()> {
    let spec = ExperimentSpec::new(
        ExperimentKind::PhaseTransition(PhaseTransitionSpec {
            u2: Some(U2Grid {
                n: vec![50],
                d: vec![2, 20, 200, 2000],
                tau: vec![1.0],
                mu: vec![MuSpec::FirstAxis { norm: 1.0 }],
                coordinates: CoordinateLaw::Rademacher,
            }),
            mmd: Some(MmdGrid { d: vec![20], n2: vec![80], n1: None }),
        }),
        2000,
        1,
    );
    let table = run(&spec)?;
    for r in &table.rows {
        println!(
            "{:3} d = {:5}  M = {}  rho = {:.3}  KS(X,Z) = {:.3}  verdict = {:?}",
            r.study,
            r.d,
            r.dominant_order.unwrap_or(0),
            r.rho.unwrap_or(f64::NAN),
            r.distance.unwrap_or(f64::NAN),
            r.verdict
        );
    }
    Ok(())
}
