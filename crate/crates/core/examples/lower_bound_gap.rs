//! Gap between the heavy-tailed and Gaussian laws of p*_2 at t = -2 sigma_n.

use univ_lab::experiments::{run, ExperimentKind, ExperimentSpec, LowerBoundSpec};

fn main() -> univ_lab::Result<()> {
    let spec = ExperimentSpec::new(
        ExperimentKind::LowerBoundGap(LowerBoundSpec { n: vec![64, 256, 1024], nu: 3.0, sigma0: 1.0, m: 2, control: true }),
        20_000,
        3,
    );
    let t = run(&spec)?;
    for r in &t.rows {
        println!(
            "n = {:5}  G = {:.2e}  radius = {:.2e}  control = {:.2e}  rates [{:.3}, {:.3}]",
            r.n,
            r.distance.unwrap(),
            r.radius.unwrap(),
            r.distance_alt.unwrap(),
            r.bound_lower.unwrap(),
            r.bound_upper.unwrap()
        );
    }
    println!("log-log slope of G: {:.3}", t.rows[0].slope.unwrap());
    Ok(())
}
