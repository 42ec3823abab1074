//! Quantum Fisher information rates of the driven two-level atom across
//! detuning, for Δ, Ω and κ, plus the off-diagonal Ω–κ element.
//!
//!     cargo run --release --example two_level_qfi

use qcrb::model::two_level;
use qcrb::qfi::{qfi_rate, qfi_rate_matrix, StencilConfig};

fn main() -> qcrb::Result<()> {
    let s = StencilConfig::default();
    println!("{:>6} {:>10} {:>10} {:>10} {:>10}", "Δ", "I_ΔΔ", "I_ΩΩ", "I_κκ", "I_Ωκ");
    for k in 0..=12 {
        let delta = -3.0 + 0.5 * k as f64;
        let m = two_level(delta, 1.0, 0.5)?;
        let th = m.parameters();
        let d: Vec<f64> = (0..3).map(|a| qfi_rate(&m, th, a, a, &s).map(|e| e.value)).collect::<Result<_, _>>()?;
        let ok = qfi_rate(&m, th, 1, 2, &s)?.value;
        println!("{delta:>6.2} {:>10.5} {:>10.5} {:>10.5} {ok:>10.5}", d[0], d[1], d[2]);
    }

    // per-unit-time covariance bound for joint estimation of Ω and κ
    let m = two_level(0.5, 1.0, 0.5)?;
    let f = qfi_rate_matrix(&m, m.parameters(), &[1, 2], &s)?;
    let cov = f.covariance_bound(1.0)?;
    println!("\nΔ=0.5: Var(Ω)·T ≥ {:.4}, Var(κ)·T ≥ {:.4}", cov[0][0], cov[1][1]);
    Ok(())
}
