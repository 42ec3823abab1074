//! Finite-time QFI. A closed qubit has no unique steady state, so its
//! information grows as T² and the rate method refuses it; the driven atom
//! grows linearly at the rate given by the eigenvalue method.
//!
//!     cargo run --release --example finite_time_qfi

use qcrb::algebra::ComplexMatrix;
use qcrb::model::{dephasing_qubit, two_level};
use qcrb::qfi::{finite_time_qfi, finite_time_slope, qfi_rate, StencilConfig};

fn main() -> qcrb::Result<()> {
    let s = StencilConfig::default();
    let q = dephasing_qubit(1.0)?;
    let th = q.parameters();
    let rho0 = q.initial_density(th)?;
    for t in [1.0, 3.0, 10.0, 30.0] {
        let i = finite_time_qfi(&q, th, &rho0, t, 0, 0, &s)?;
        println!("qubit T={t:>4}: I = {:>10.4}  T² = {:>8}", i.value, t * t);
    }
    match qfi_rate(&q, th, 0, 0, &s) {
        Err(e) => println!("qubit rate: {} ({e})", e.name()),
        Ok(e) => println!("qubit rate unexpectedly {}", e.value),
    }

    let m = two_level(1.0, 1.0, 0.5)?;
    let th = m.parameters();
    let g = ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]);
    for a in 0..3 {
        let rate = qfi_rate(&m, th, a, a, &s)?.value;
        let slope = finite_time_slope(&m, th, &g, 100.0, 200.0, a, a, &s)?.value;
        println!("atom {}: rate {rate:.6}, finite-time slope {slope:.6}", th.name(a));
    }
    Ok(())
}
