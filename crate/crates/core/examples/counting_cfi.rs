//! Monte-Carlo Fisher information of photon-counting records, against the
//! quantum limit. At resonance counting is blind to the sign of Δ but
//! exhausts the information about Ω and κ.
//!
//!     cargo run --release --example counting_cfi

use qcrb::model::two_level;
use qcrb::qfi::{qfi_rate, StencilConfig};
use qcrb::trajectories::{cfi_rates, CfiConfig, Scheme};

fn main() -> qcrb::Result<()> {
    for delta in [0.0, 1.0] {
        let m = two_level(delta, 1.0, 0.5)?;
        let th = m.parameters();
        let cfg = CfiConfig::new(Scheme::Counting, 500.0, 1000, 2024);
        let est = cfi_rates(&m, th, &[0, 1, 2], &cfg)?;
        for (a, e) in est.iter().enumerate() {
            let q = qfi_rate(&m, th, a, a, &StencilConfig::default())?.value;
            println!(
                "Δ={delta} {:>5}: CFI {:.4} ± {:.4}   QFI {q:.4}   flags {:?}",
                th.name(a),
                e.value,
                e.std_error,
                e.meta.flags
            );
        }
    }
    Ok(())
}
