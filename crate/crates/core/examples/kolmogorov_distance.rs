//! Replicated statistic under the model and under its Gaussian surrogate, compared
//! by Kolmogorov distance with a DKW radius.

use univ_lab::datagen::{CoordinateLaw, ModelSpec};
use univ_lab::empirics::{excess_kurtosis, kolmogorov_distance, replicate, Stage};
use univ_lab::StatisticSpec;

fn main() -> univ_lab::Result<()> {
    let model = ModelSpec::shift_scale(vec![0.0; 20], 1.0, CoordinateLaw::Rademacher);
    let stat = StatisticSpec::SimpleU2;
    let (n, b) = (30, 20_000);

    let x = replicate(&model, &stat, n, b, 1, Stage::Direct)?;
    let z = replicate(&model, &stat, n, b, 2, Stage::Surrogate)?;
    let ks = kolmogorov_distance(&x, &z, 0.05)?;
    println!("KS = {:.4}, radius = {:.4}, exceeds = {}", ks.distance, ks.dkw_radius, ks.exceeds_radius());

    let k = excess_kurtosis(&x.values)?;
    println!("excess kurtosis of u_2(X): {:.3} ± {:.3}", k.value, k.se);
    Ok(())
}
