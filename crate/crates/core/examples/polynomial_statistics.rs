//! The polynomial statistics on one data set: V/U-statistics, tensor forms, MMD.

use univ_lab::datagen::{sample_iid_matrix, ModelSpec};
use univ_lab::statistics::{complete_u, lm_norm_power, mmd_paired_u, mmd_u, simple_u2, simple_v2, tensor_v};
use univ_lab::{KernelSpec, SymmetricTensor};

fn main() -> univ_lab::Result<()> {
    let x = sample_iid_matrix(&ModelSpec::isotropic_gaussian(3), 40, 1)?;
    let y = sample_iid_matrix(&ModelSpec::isotropic_gaussian(3), 40, 2)?;

    println!("u_2(X)          = {:+.5}", simple_u2(&x)?);
    println!("v_2(X)          = {:+.5}", simple_v2(&x));
    println!("|sqrt(n) X̄|_4^4 = {:+.5}", lm_norm_power(&x, 4)?);

    // the identity tensor recovers v_2
    let eye = SymmetricTensor::diagonal(2, vec![1.0; 3])?;
    println!("<I, X̄ ⊗ X̄>     = {:+.5}", tensor_v(&x, &eye)?);

    let cubic = KernelSpec::PolynomialInner { degree: 1, offset: 0.0 };
    println!("complete u_3    = {:+.5}", complete_u(&x, &cubic, 3, 1_000_000)?);

    println!("MMD_u           = {:+.5}", mmd_u(&x, &y, &KernelSpec::LinearInner)?);
    println!("paired form     = {:+.5}", mmd_paired_u(&x, &y, &KernelSpec::LinearInner)?);
    Ok(())
}
