//! Loading a model document: a driven qubit whose coherence also decays by
//! dephasing at rate γ. Matrix entries are affine in named parameters; the
//! `sqrt` transform places √γ inside the jump operator.
//!
//!     cargo run --release --example custom_model

use qcrb::model::{load_model, save_model};
use qcrb::qfi::{qfi_rate_matrix, StencilConfig};

const DOC: &str = r#"{
  "dimension": 2,
  "parameters": [{"name": "omega", "value": 1.0}, {"name": "kappa", "value": 0.5}, {"name": "gamma", "value": 0.2}],
  "hamiltonian": [
    [{}, {"terms": [{"param": "omega", "coeff_re": 0.5}]}],
    [{"terms": [{"param": "omega", "coeff_re": 0.5}]}, {}]
  ],
  "jumps": [
    [[{}, {"terms": [{"param": "kappa", "coeff_re": 1.0, "transform": "sqrt"}]}], [{}, {}]],
    [[{"terms": [{"param": "gamma", "coeff_re": -0.5, "transform": "sqrt"}]}, {}],
     [{}, {"terms": [{"param": "gamma", "coeff_re": 0.5, "transform": "sqrt"}]}]]
  ],
  "initial_state": "steady"
}"#;

fn main() -> qcrb::Result<()> {
    let m = load_model(DOC)?;
    assert_eq!(load_model(&save_model(&m))?, m);
    let th = m.parameters();
    let f = qfi_rate_matrix(&m, th, &[0, 1, 2], &StencilConfig::default())?;
    println!("QFI rate matrix over (Ω, κ, γ):");
    for row in f.values() {
        println!("  {}", row.iter().map(|v| format!("{v:>10.5}")).collect::<Vec<_>>().join(" "));
    }
    println!("eigenvalues: {:.5?}", f.eigenvalues()?);
    Ok(())
}
