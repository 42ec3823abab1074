//! Monte-Carlo Fisher information of homodyne records. Unlike counting,
//! homodyne detection is sensitive to Δ at resonance.
//!
//!     cargo run --release --example homodyne_cfi

use qcrb::model::two_level;
use qcrb::qfi::{qfi_rate, StencilConfig};
use qcrb::trajectories::{cfi_rates, homodyne_step_bound, CfiConfig, Scheme};

fn main() -> qcrb::Result<()> {
    let m = two_level(0.0, 1.0, 0.5)?;
    let th = m.parameters();
    println!("largest admissible step: {:.2e}", homodyne_step_bound(&m, th)?);
    // short run for illustration; the built-in scan scenarios use 2000 records of T = 500
    let cfg = CfiConfig::new(Scheme::Homodyne { phi: 0.0, dt: None }, 200.0, 100, 7);
    let est = cfi_rates(&m, th, &[0, 1, 2], &cfg)?;
    for (a, e) in est.iter().enumerate() {
        let q = qfi_rate(&m, th, a, a, &StencilConfig::default())?.value;
        println!("{:>5}: CFI {:.4} ± {:.4}   QFI {q:.4}", th.name(a), e.value, e.std_error);
    }
    Ok(())
}
