//! Heavy-tailed bivariate data and its moment-matched Gaussian surrogate.

use univ_lab::datagen::{gaussian_surrogate, sample_heavy_tailed_bivariate, GaussianMoments, HeavyTailParams};

fn main() -> univ_lab::Result<()> {
    let (nu, sigma0) = (3.0, 1.0);
    for n in [16, 256, 4096] {
        let h = HeavyTailParams::for_sample_size(nu, sigma0, n)?;
        // U has mass 1, mean 0 and variance sigma_n^2 by construction
        let (mass, mean, var) = h.analytic_moments();
        println!("n = {n:5}  sigma_n = {:.4}  mass {mass}  E U = {mean:.1e}  Var U = {var:.4}", h.sigma);
    }

    let x = sample_heavy_tailed_bivariate(nu, sigma0, 2, 1000, 42)?;
    let moments = GaussianMoments::empirical(&x)?;
    let z = gaussian_surrogate(&moments, 1000, 43)?;
    println!("data: {} x {}, surrogate: {} x {}", x.n(), x.d(), z.n(), z.d());
    println!("first data row {:?}", x.row(0));
    Ok(())
}
