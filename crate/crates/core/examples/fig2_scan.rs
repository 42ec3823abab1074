//! A reduced detuning scan through the library front end: QFI rate and the
//! counting and homodyne CFI for Δ on a coarse detuning grid. The full
//! scenario is `qcrb scan --config fig2-delta`.
//!
//!     cargo run --release --example fig2_scan

use qcrb::cli::{run, write_csv, GridSpec, RunConfig};

fn main() -> qcrb::Result<()> {
    let mut cfg = RunConfig::load("fig2-delta")?;
    cfg.grid = Some(GridSpec::parse("delta:-3:3:7")?);
    cfg.scheme.n_traj = Some(100);
    cfg.scheme.t = Some(100.0);
    let rows = run(&cfg)?;
    let names = cfg.model_spec()?.parameters().names().to_vec();
    write_csv(&mut std::io::stdout().lock(), &names, &rows)?;
    Ok(())
}
