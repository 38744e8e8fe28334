//! Plain versus centred bootstrap of u_2 under a strong and a null signal.

use univ_lab::datagen::CoordinateLaw;
use univ_lab::experiments::{run, BootstrapSpec, ExperimentKind, ExperimentSpec, MuSpec};

fn main() -> univ_lab::Result<()> {
    let spec = ExperimentSpec::new(
        ExperimentKind::BootstrapConsistency(BootstrapSpec {
            n: vec![200],
            d: vec![5],
            tau: vec![1.0],
            mu: vec![MuSpec::Equal { norm: 1.0 }, MuSpec::Zero],
            coordinates: CoordinateLaw::Gaussian,
            data_replications: 10,
            reference_b: None,
            consistent_threshold: 0.1,
        }),
        2000,
        2,
    );
    for r in run(&spec)?.rows {
        println!(
            "|mu| = {:.2}  {}  median KS = {:.3}  {:?}",
            r.mu_norm.unwrap(),
            r.study,
            r.distance.unwrap(),
            r.verdict
        );
    }
    Ok(())
}
