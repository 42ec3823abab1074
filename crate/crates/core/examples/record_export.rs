//! Simulating records, writing them as JSON and scoring them again after
//! reading them back.
//!
//!     cargo run --release --example record_export

use qcrb::liouvillian::steady_state;
use qcrb::model::two_level;
use qcrb::trajectories::{log_likelihood_counting, simulate_counting, simulate_homodyne, Record};

fn main() -> qcrb::Result<()> {
    let m = two_level(0.5, 1.0, 0.5)?;
    let th = m.parameters();
    let rho = steady_state(&m, th)?;
    let dir = std::env::temp_dir().join("qcrb-records");
    std::fs::create_dir_all(&dir)?;

    let counting = Record::Counting(simulate_counting(&m, th, &rho, 200.0, 80.0, 1)?);
    let homodyne = Record::Homodyne(simulate_homodyne(&m, th, &rho, 100.0, 80.0, 1e-3, 0.0, 1)?);
    for (name, rec) in [("counting.json", &counting), ("homodyne.json", &homodyne)] {
        let path = dir.join(name);
        std::fs::write(&path, rec.to_json())?;
        println!("wrote {}", path.display());
    }

    let back = Record::from_json(&std::fs::read_to_string(dir.join("counting.json"))?)?;
    let Record::Counting(rec) = back else { unreachable!() };
    println!("{} clicks in the window [{}, {}]", rec.jump_times.iter().filter(|&&t| t > rec.burn_in).count(), rec.burn_in, rec.t);
    for delta in [0.3, 0.5, 0.7] {
        let ll = log_likelihood_counting(&rec, &m, &th.with_value(0, delta))?;
        println!("  log-likelihood at Δ={delta}: {ll:.4}");
    }
    Ok(())
}
