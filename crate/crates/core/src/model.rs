//! Parameterized open quantum systems: Hamiltonian H(θ), jump operators
//! L_c(θ), initial state, and the first-order effect operators Ω_m(θ, δt).
//!
//! Basis convention for two-level systems is (|g⟩, |e⟩), excited state second.
//! Matrix entries depend on named parameters through a constant plus a sum of
//! `coeff · f(param)` terms, where `f` is the identity or a square root. The
//! square root is what lets a jump amplitude √κ be parameterized by the rate κ.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::algebra::{ComplexMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

/// Hamiltonians must satisfy H = H† to this absolute tolerance.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// δt·(‖H‖ + Σ‖L_c†L_c‖) must stay below this for first-order effect operators.
pub const EFFECT_STEP_BOUND: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector {
    names: Vec<String>,
    values: Vec<f64>,
}

impl ParameterVector {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>, values: Vec<f64>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.len() != values.len() {
            return Err(Error::SchemaError(format!(
                "{} parameter names but {} values",
                names.len(),
                values.len()
            )));
        }
        let mut seen = HashSet::new();
        for n in &names {
            if !seen.insert(n.as_str()) {
                return Err(Error::SchemaError(format!("duplicate parameter name `{n}`")));
            }
        }
        Ok(ParameterVector { names, values })
    }

    pub fn from_pairs(pairs: &[(&str, f64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|p| p.0), pairs.iter().map(|p| p.1).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown parameter `{name}`")))
    }

    pub fn get(&self, name: &str) -> Result<f64> {
        Ok(self.values[self.index_of(name)?])
    }

    pub fn with_value(&self, index: usize, value: f64) -> Self {
        let mut out = self.clone();
        out.values[index] = value;
        out
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let i = self.index_of(name)?;
        self.values[i] = value;
        Ok(())
    }

    /// Copy with `delta` added to component `index`.
    pub fn shifted(&self, index: usize, delta: f64) -> Self {
        let mut out = self.clone();
        out.values[index] += delta;
        out
    }

    pub fn same_layout(&self, other: &Self) -> bool {
        self.names == other.names
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Transform {
    #[default]
    Linear,
    Sqrt,
}

impl Transform {
    fn apply(self, x: f64, name: &str) -> Result<f64> {
        match self {
            Transform::Linear => Ok(x),
            Transform::Sqrt if x >= 0.0 => Ok(x.sqrt()),
            Transform::Sqrt => Err(Error::InvalidParameter(format!(
                "parameter `{name}` = {x} enters through a square root and must be ≥ 0"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub param: usize,
    pub coeff: C64,
    pub transform: Transform,
}

/// constant + Σ coeff · f(param)
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ParamEntry {
    pub constant: C64,
    pub terms: Vec<Term>,
}

impl ParamEntry {
    pub fn constant(c: C64) -> Self {
        ParamEntry { constant: c, terms: vec![] }
    }

    pub fn term(param: usize, coeff: C64, transform: Transform) -> Self {
        ParamEntry { constant: ZERO, terms: vec![Term { param, coeff, transform }] }
    }

    fn evaluate(&self, theta: &ParameterVector) -> Result<C64> {
        let mut z = self.constant;
        for t in &self.terms {
            z += t.coeff * t.transform.apply(theta.values[t.param], &theta.names[t.param])?;
        }
        Ok(z)
    }
}

/// Square matrix whose entries are parameterized.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamMatrix {
    dim: usize,
    entries: Vec<ParamEntry>,
}

impl ParamMatrix {
    pub fn zeros(dim: usize) -> Self {
        ParamMatrix { dim, entries: vec![ParamEntry::default(); dim * dim] }
    }

    pub fn from_constant(m: &ComplexMatrix) -> Self {
        assert!(m.is_square());
        ParamMatrix {
            dim: m.rows(),
            entries: m.as_slice().iter().map(|&z| ParamEntry::constant(z)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> &ParamEntry {
        &self.entries[i * self.dim + j]
    }

    pub fn entry_mut(&mut self, i: usize, j: usize) -> &mut ParamEntry {
        &mut self.entries[i * self.dim + j]
    }

    pub fn evaluate(&self, theta: &ParameterVector) -> Result<ComplexMatrix> {
        let data = self.entries.iter().map(|e| e.evaluate(theta)).collect::<Result<Vec<_>>>()?;
        Ok(ComplexMatrix::from_row_major(self.dim, self.dim, data))
    }

    pub fn depends_on(&self, param: usize) -> bool {
        self.entries.iter().any(|e| e.terms.iter().any(|t| t.param == param))
    }

    /// Constant part and one coefficient matrix per (parameter, transform).
    /// The parameterized matrix is Hermitian for every θ iff all are Hermitian.
    fn components(&self) -> Vec<ComplexMatrix> {
        let mut groups: BTreeMap<(usize, Transform), ComplexMatrix> = BTreeMap::new();
        let mut constant = ComplexMatrix::zeros(self.dim, self.dim);
        for (k, e) in self.entries.iter().enumerate() {
            let (i, j) = (k / self.dim, k % self.dim);
            constant[(i, j)] += e.constant;
            for t in &e.terms {
                let m = groups
                    .entry((t.param, t.transform))
                    .or_insert_with(|| ComplexMatrix::zeros(self.dim, self.dim));
                m[(i, j)] += t.coeff;
            }
        }
        std::iter::once(constant).chain(groups.into_values()).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialState {
    /// Stationary state of the Lindblad equation at the parameters in use.
    Steady,
    Pure(Vec<C64>),
    Density(ComplexMatrix),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    dimension: usize,
    parameters: ParameterVector,
    hamiltonian: ParamMatrix,
    jumps: Vec<ParamMatrix>,
    initial_state: InitialState,
}

impl ModelSpec {
    pub fn new(
        parameters: ParameterVector,
        hamiltonian: ParamMatrix,
        jumps: Vec<ParamMatrix>,
        initial_state: InitialState,
    ) -> Result<Self> {
        let dimension = hamiltonian.dim();
        if dimension == 0 {
            return Err(Error::DimensionMismatch("Hilbert dimension must be ≥ 1".into()));
        }
        for (c, j) in jumps.iter().enumerate() {
            if j.dim() != dimension {
                return Err(Error::DimensionMismatch(format!(
                    "jump operator {c} is {0}x{0}, Hamiltonian is {1}x{1}",
                    j.dim(),
                    dimension
                )));
            }
        }
        let n_params = parameters.len();
        for m in std::iter::once(&hamiltonian).chain(&jumps) {
            if m.entries.iter().any(|e| e.terms.iter().any(|t| t.param >= n_params)) {
                return Err(Error::SchemaError("matrix entry references an unknown parameter".into()));
            }
        }
        let deviation = hamiltonian.components().iter().map(|m| m.hermitian_deviation()).fold(0.0, f64::max);
        if deviation > HERMITIAN_TOL {
            return Err(Error::NonHermitianHamiltonian { deviation });
        }
        match &initial_state {
            InitialState::Steady => {}
            InitialState::Pure(v) if v.len() != dimension => {
                return Err(Error::DimensionMismatch(format!(
                    "pure initial state has length {}, dimension is {dimension}",
                    v.len()
                )))
            }
            InitialState::Pure(v) => {
                let n = crate::algebra::vec_norm(v);
                if (n - 1.0).abs() > 1e-10 {
                    return Err(Error::SchemaError(format!("pure initial state has norm {n}, expected 1")));
                }
            }
            InitialState::Density(rho) => {
                if rho.rows() != dimension || rho.cols() != dimension {
                    return Err(Error::DimensionMismatch(format!(
                        "initial density matrix is {}x{}, dimension is {dimension}",
                        rho.rows(),
                        rho.cols()
                    )));
                }
                if !rho.is_hermitian(1e-10) || (rho.trace() - ONE).norm() > 1e-10 {
                    return Err(Error::SchemaError("initial density matrix must be Hermitian with unit trace".into()));
                }
            }
        }
        Ok(ModelSpec { dimension, parameters, hamiltonian, jumps, initial_state })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Parameter template carrying the model's default values.
    pub fn parameters(&self) -> &ParameterVector {
        &self.parameters
    }

    pub fn param_index(&self, name: &str) -> Result<usize> {
        self.parameters.index_of(name)
    }

    pub fn n_jumps(&self) -> usize {
        self.jumps.len()
    }

    pub fn initial_state(&self) -> &InitialState {
        &self.initial_state
    }

    pub fn with_initial_state(&self, initial_state: InitialState) -> Result<Self> {
        Self::new(self.parameters.clone(), self.hamiltonian.clone(), self.jumps.clone(), initial_state)
    }

    /// Copy whose default parameter values are `theta`.
    pub fn with_parameters(&self, theta: &ParameterVector) -> Result<Self> {
        self.check(theta)?;
        let mut m = self.clone();
        m.parameters = theta.clone();
        Ok(m)
    }

    pub fn hamiltonian_template(&self) -> &ParamMatrix {
        &self.hamiltonian
    }

    pub fn jump_templates(&self) -> &[ParamMatrix] {
        &self.jumps
    }

    pub fn check(&self, theta: &ParameterVector) -> Result<()> {
        if !self.parameters.same_layout(theta) {
            return Err(Error::InvalidParameter(format!(
                "parameter vector {:?} does not match model parameters {:?}",
                theta.names(),
                self.parameters.names()
            )));
        }
        if let Some(v) = theta.values().iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite parameter value {v}")));
        }
        Ok(())
    }

    pub fn hamiltonian(&self, theta: &ParameterVector) -> Result<ComplexMatrix> {
        self.check(theta)?;
        self.hamiltonian.evaluate(theta)
    }

    pub fn jumps(&self, theta: &ParameterVector) -> Result<Vec<ComplexMatrix>> {
        self.check(theta)?;
        self.jumps.iter().map(|j| j.evaluate(theta)).collect()
    }

    /// H − (i/2) Σ L_c†L_c
    pub fn effective_hamiltonian(&self, theta: &ParameterVector) -> Result<ComplexMatrix> {
        let mut h = self.hamiltonian(theta)?;
        for l in self.jumps(theta)? {
            h = &h - &(&l.adjoint() * &l).scale(C64::new(0.0, 0.5));
        }
        Ok(h)
    }

    /// Initial density matrix at `theta`; `Steady` resolves to the stationary state.
    pub fn initial_density(&self, theta: &ParameterVector) -> Result<ComplexMatrix> {
        match &self.initial_state {
            InitialState::Steady => crate::liouvillian::steady_state(self, theta),
            InitialState::Pure(v) => Ok(ComplexMatrix::outer(v, v)),
            InitialState::Density(rho) => Ok(rho.clone()),
        }
    }
}

/// Driven two-level atom: H = Δ|e⟩⟨e| + Ω/2(|e⟩⟨g| + |g⟩⟨e|), L = √κ|g⟩⟨e|.
/// Parameters are named `delta`, `omega`, `kappa`; the initial state is steady.
pub fn two_level(delta: f64, omega: f64, kappa: f64) -> Result<ModelSpec> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidParameter(format!("decay rate κ must be > 0, got {kappa}")));
    }
    let params = ParameterVector::from_pairs(&[("delta", delta), ("omega", omega), ("kappa", kappa)])?;
    let mut h = ParamMatrix::zeros(2);
    *h.entry_mut(1, 1) = ParamEntry::term(0, ONE, Transform::Linear);
    *h.entry_mut(0, 1) = ParamEntry::term(1, C64::new(0.5, 0.0), Transform::Linear);
    *h.entry_mut(1, 0) = ParamEntry::term(1, C64::new(0.5, 0.0), Transform::Linear);
    let mut l = ParamMatrix::zeros(2);
    *l.entry_mut(0, 1) = ParamEntry::term(2, ONE, Transform::Sqrt);
    ModelSpec::new(params, h, vec![l], InitialState::Steady)
}

/// Closed qubit with H = θσ_z/2 started in (|g⟩ + |e⟩)/√2; parameter `theta`.
pub fn dephasing_qubit(theta: f64) -> Result<ModelSpec> {
    let params = ParameterVector::from_pairs(&[("theta", theta)])?;
    let mut h = ParamMatrix::zeros(2);
    *h.entry_mut(0, 0) = ParamEntry::term(0, C64::new(-0.5, 0.0), Transform::Linear);
    *h.entry_mut(1, 1) = ParamEntry::term(0, C64::new(0.5, 0.0), Transform::Linear);
    let amp = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    ModelSpec::new(params, h, vec![], InitialState::Pure(vec![amp, amp]))
}

/// Builtin model by name, with optional parameter overrides.
pub fn builtin(name: &str, overrides: &[(String, f64)]) -> Result<ModelSpec> {
    let base = match name {
        "two_level" => two_level(0.0, 1.0, 0.5)?,
        "dephasing_qubit" => dephasing_qubit(1.0)?,
        other => return Err(Error::SchemaError(format!("unknown builtin model `{other}`"))),
    };
    let mut theta = base.parameters().clone();
    for (k, v) in overrides {
        theta.set(k, *v).map_err(|_| Error::SchemaError(format!("builtin `{name}` has no parameter `{k}`")))?;
    }
    if name == "two_level" {
        two_level(theta.values()[0], theta.values()[1], theta.values()[2])
    } else {
        dephasing_qubit(theta.values()[0])
    }
}

/// Discrete no-jump and jump operators for one time step.
#[derive(Clone, Debug)]
pub struct EffectOperators {
    pub dt: f64,
    pub no_jump: ComplexMatrix,
    pub jumps: Vec<ComplexMatrix>,
}

impl EffectOperators {
    /// Ω₀ followed by Ω₁…Ω_C.
    pub fn all(&self) -> impl Iterator<Item = &ComplexMatrix> {
        std::iter::once(&self.no_jump).chain(&self.jumps)
    }

    pub fn outcomes(&self) -> usize {
        1 + self.jumps.len()
    }

    /// Σ_m Ω_m†Ω_m − 𝟙
    pub fn completeness_defect(&self) -> ComplexMatrix {
        let n = self.no_jump.rows();
        let mut sum = ComplexMatrix::zeros(n, n);
        for w in self.all() {
            sum += &(&w.adjoint() * w);
        }
        &sum - &ComplexMatrix::identity(n)
    }
}

/// Largest δt admitted by [`effect_operators`] at `theta`.
pub fn effect_step_bound(m: &ModelSpec, theta: &ParameterVector) -> Result<f64> {
    let h = m.hamiltonian(theta)?;
    let mut rate = h.operator_norm();
    for l in m.jumps(theta)? {
        rate += (&l.adjoint() * &l).operator_norm();
    }
    Ok(if rate == 0.0 { f64::INFINITY } else { EFFECT_STEP_BOUND / rate })
}

/// Ω₀ = 𝟙 − i(H − (i/2)ΣL_c†L_c)δt, Ω_c = L_c√δt.
pub fn effect_operators(m: &ModelSpec, theta: &ParameterVector, dt: f64) -> Result<EffectOperators> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("time step must be > 0, got {dt}")));
    }
    let bound = effect_step_bound(m, theta)?;
    if dt >= bound {
        return Err(Error::StepTooLarge { dt, bound });
    }
    let n = m.dimension();
    let h_eff = m.effective_hamiltonian(theta)?;
    let no_jump = &ComplexMatrix::identity(n) - &h_eff.scale(C64::new(0.0, dt));
    let jumps = m.jumps(theta)?.iter().map(|l| l.scale_real(dt.sqrt())).collect();
    Ok(EffectOperators { dt, no_jump, jumps })
}

// ---------------------------------------------------------------------------
// JSON model documents

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComplexDoc {
    re: f64,
    im: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermDoc {
    param: String,
    #[serde(default)]
    coeff_re: f64,
    #[serde(default)]
    coeff_im: f64,
    #[serde(default, skip_serializing_if = "is_linear")]
    transform: Transform,
}

fn is_linear(t: &Transform) -> bool {
    *t == Transform::Linear
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryDoc {
    #[serde(default)]
    re: f64,
    #[serde(default)]
    im: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    terms: Vec<TermDoc>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamDoc {
    name: String,
    value: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum InitialDoc {
    Token(String),
    Pure { pure: Vec<ComplexDoc> },
    Density { density: Vec<Vec<ComplexDoc>> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    dimension: usize,
    parameters: Vec<ParamDoc>,
    hamiltonian: Vec<Vec<EntryDoc>>,
    jumps: Vec<Vec<Vec<EntryDoc>>>,
    initial_state: InitialDoc,
}

fn matrix_from_doc(rows: &[Vec<EntryDoc>], dim: usize, params: &ParameterVector, what: &str) -> Result<ParamMatrix> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        let cols = rows.first().map_or(0, Vec::len);
        return Err(Error::DimensionMismatch(format!(
            "{what} is {}x{cols}, expected {dim}x{dim}",
            rows.len()
        )));
    }
    let mut m = ParamMatrix::zeros(dim);
    for (i, row) in rows.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            let terms = e
                .terms
                .iter()
                .map(|t| {
                    let param = params
                        .index_of(&t.param)
                        .map_err(|_| Error::SchemaError(format!("{what}[{i}][{j}] references unknown parameter `{}`", t.param)))?;
                    Ok(Term { param, coeff: C64::new(t.coeff_re, t.coeff_im), transform: t.transform })
                })
                .collect::<Result<Vec<_>>>()?;
            *m.entry_mut(i, j) = ParamEntry { constant: C64::new(e.re, e.im), terms };
        }
    }
    Ok(m)
}

fn matrix_to_doc(m: &ParamMatrix, params: &ParameterVector) -> Vec<Vec<EntryDoc>> {
    (0..m.dim())
        .map(|i| {
            (0..m.dim())
                .map(|j| {
                    let e = m.entry(i, j);
                    EntryDoc {
                        re: e.constant.re,
                        im: e.constant.im,
                        terms: e
                            .terms
                            .iter()
                            .map(|t| TermDoc {
                                param: params.name(t.param).to_string(),
                                coeff_re: t.coeff.re,
                                coeff_im: t.coeff.im,
                                transform: t.transform,
                            })
                            .collect(),
                    }
                })
                .collect()
        })
        .collect()
}

/// Parses a JSON model document.
pub fn load_model(config: &str) -> Result<ModelSpec> {
    let doc: ModelDoc = serde_json::from_str(config).map_err(|e| Error::SchemaError(e.to_string()))?;
    let params = ParameterVector::new(
        doc.parameters.iter().map(|p| p.name.clone()),
        doc.parameters.iter().map(|p| p.value).collect(),
    )?;
    let dim = doc.dimension;
    let h = matrix_from_doc(&doc.hamiltonian, dim, &params, "hamiltonian")?;
    let jumps = doc
        .jumps
        .iter()
        .enumerate()
        .map(|(c, j)| matrix_from_doc(j, dim, &params, &format!("jumps[{c}]")))
        .collect::<Result<Vec<_>>>()?;
    let initial = match doc.initial_state {
        InitialDoc::Token(t) if t == "steady" => InitialState::Steady,
        InitialDoc::Token(t) => return Err(Error::SchemaError(format!("unknown initial_state token `{t}`"))),
        InitialDoc::Pure { pure } => InitialState::Pure(pure.iter().map(|z| C64::new(z.re, z.im)).collect()),
        InitialDoc::Density { density } => {
            if density.len() != dim || density.iter().any(|r| r.len() != dim) {
                return Err(Error::DimensionMismatch(format!("initial density matrix must be {dim}x{dim}")));
            }
            let rows: Vec<Vec<C64>> =
                density.iter().map(|r| r.iter().map(|z| C64::new(z.re, z.im)).collect()).collect();
            InitialState::Density(ComplexMatrix::from_rows(&rows))
        }
    };
    ModelSpec::new(params, h, jumps, initial)
}

/// Serializes a model to the JSON document format read by [`load_model`].
pub fn save_model(m: &ModelSpec) -> String {
    let params = m.parameters();
    let doc = ModelDoc {
        dimension: m.dimension(),
        parameters: params
            .names()
            .iter()
            .zip(params.values())
            .map(|(n, &v)| ParamDoc { name: n.clone(), value: v })
            .collect(),
        hamiltonian: matrix_to_doc(&m.hamiltonian, params),
        jumps: m.jumps.iter().map(|j| matrix_to_doc(j, params)).collect(),
        initial_state: match &m.initial_state {
            InitialState::Steady => InitialDoc::Token("steady".into()),
            InitialState::Pure(v) => InitialDoc::Pure { pure: v.iter().map(|z| ComplexDoc { re: z.re, im: z.im }).collect() },
            InitialState::Density(rho) => InitialDoc::Density {
                density: (0..rho.rows())
                    .map(|i| rho.row(i).iter().map(|z| ComplexDoc { re: z.re, im: z.im }).collect())
                    .collect(),
            },
        },
    };
    serde_json::to_string_pretty(&doc).expect("model documents always serialize")
}
