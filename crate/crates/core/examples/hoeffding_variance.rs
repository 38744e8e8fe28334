//! Exact variance of u_2 from its Hoeffding components and which order dominates.

use univ_lab::hoeffding::{rescaled_variances, ustat_variance_formula, variance_ratio};

fn main() -> univ_lab::Result<()> {
    let n = 100;
    // linear kernel with |mu| = 1, Sigma = I_d: sigma_1^2 = 1, sigma_2^2 = 2 + d
    for d in [1usize, 10, 100, 1000, 10_000] {
        let sigma2 = [1.0, 2.0 + d as f64];
        let var = ustat_variance_formula(n, 2, &sigma2)?;
        let resc = rescaled_variances(n, 2, &sigma2)?;
        let ratio = variance_ratio(n, 2, &sigma2, 1)?;
        println!(
            "d = {d:6}  Var u_2 = {var:.5}  rescaled = [{:.4}, {:.4}]  dominant order = {}",
            resc[0], resc[1], ratio.dominant
        );
    }
    Ok(())
}
