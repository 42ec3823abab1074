//! Steady state, spectral gap and the leading eigenvalue of the two-sided
//! generator for a pair of nearby parameter values.
//!
//!     cargo run --release --example steady_state_spectrum

use qcrb::liouvillian::{leading_eigenvalue, relaxation_time, spectral_gap, steady_state};
use qcrb::model::two_level;

fn main() -> qcrb::Result<()> {
    let m = two_level(0.0, 1.0, 0.5)?;
    let th = m.parameters().clone();
    let rho = steady_state(&m, &th)?;
    println!("ρ_ee = {:.12} (4/9 = {:.12})", rho[(1, 1)].re, 4.0 / 9.0);
    println!("ρ_ge = {:.6}", rho[(0, 1)]);
    println!("gap = {:.6}, relaxation time = {:.3}", spectral_gap(&m, &th)?, relaxation_time(&m, &th)?);

    // |⟨ψ(θ₂)|ψ(θ₁)⟩| decays as exp(T·Re λ_s) for long records
    for dk in [1e-3, 1e-2, 1e-1] {
        let t1 = th.with_value(2, 0.5 + dk);
        let t2 = th.with_value(2, 0.5 - dk);
        let s = leading_eigenvalue(&m, &t1, &t2)?;
        println!("κ ± {dk:e}: λ_s = {:.3e}, separation {:.3}", s.lambda_s, s.separation);
    }
    Ok(())
}
