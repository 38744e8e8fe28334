//! Rate functionals of the universality bounds (absolute constants set to 1).

use univ_lab::bounds::{fourth_moment_bound, lower_upper_rates, thm_main_bound, BoundInputs};

fn main() -> univ_lab::Result<()> {
    for n in [1_000usize, 100_000, 10_000_000] {
        let r = lower_upper_rates(n, 2, 3.0)?;
        println!("n = {n:9}  lower = {:.4}  upper = {:.4}", r.lower, r.upper);
    }

    let n = 1000;
    let inp = BoundInputs {
        n,
        m: 2,
        nu: 3.0,
        sigma: 1.0,
        influence: vec![1.0 / (n as f64).sqrt(); n],
        t: 0.0,
        l2_residual: 0.0,
    };
    let main = thm_main_bound(&inp)?;
    println!("main bound: {} = {:.4} (capped {:.4})", main.formula, main.value, main.capped);

    let fm = fourth_moment_bound(2, 0.01)?;
    println!("fourth-moment bound at Kurt = 0.01: {:.4}", fm.value);
    Ok(())
}
