//! The renewal oracle: for the two-level atom every click resets the state,
//! so the counting Fisher information follows from the interval density.
//!
//!     cargo run --release --example waiting_time_oracle

use qcrb::trajectories::{waiting_time_moments, wtd_fisher_oracle, WtdOptions};

fn main() -> qcrb::Result<()> {
    let opts = WtdOptions::default();
    let (norm, mean) = waiting_time_moments(0.0, 1.0, 0.5, &opts)?;
    println!("∫w = {norm:.10}, E[τ] = {mean:.8} (1/(κρ_ee) = 4.5)");
    for delta in [0.0, 0.5, 1.0, 1.5] {
        let v: Vec<f64> = (0..3)
            .map(|a| wtd_fisher_oracle(delta, 1.0, 0.5, a, &opts).map(|e| e.value))
            .collect::<Result<_, _>>()?;
        println!("Δ={delta}: I_Δ {:.5}  I_Ω {:.5}  I_κ {:.5}", v[0], v[1], v[2]);
    }
    // larger detunings oscillate faster and need a finer grid
    let fine = WtdOptions { n_grid: 65536, ..opts };
    match wtd_fisher_oracle(3.0, 1.0, 0.5, 0, &opts) {
        Ok(e) => println!("Δ=3 default grid: {:.5}", e.value),
        Err(e) => println!("Δ=3 default grid: {}", e.name()),
    }
    println!("Δ=3 fine grid: {:.5}", wtd_fisher_oracle(3.0, 1.0, 0.5, 0, &fine)?.value);
    Ok(())
}
