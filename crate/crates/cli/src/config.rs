//! Experiment configuration: the JSON file format and its validated form.
//!
//! Complex numbers are `[re, im]` pairs (a bare number is read as real),
//! matrices are row-major nested lists, and every field is optional. Missing
//! fields fall back to the reference experiment: `ρ = diag(0.7, 0.3, 0)` on
//! `ℂ³`, the diagonal pinching, `h = ℂ²`, a seeded random Hamiltonian and
//! `τ = 2⁻², …, 2⁻⁹` at `t = 1`.

use std::path::Path;

use serde::Deserialize;

use qrwt_core::cocycle::{HamiltonianKind, HamiltonianSpec, Perturbation};
use qrwt_core::experiments::{dyadic_taus, reference_observable, reference_test_functions, reference_vectors, C3Params, Fixture};
use qrwt_core::linalg::real;
use qrwt_core::random::seeded;
use qrwt_core::walk_sim::{StepFunction, ORACLE_MAX_STEPS};
use qrwt_core::{CMatrix, CVector, Superoperator, C64};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("config is not valid JSON: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("config field `{field}`: {message}")]
    Field { field: String, message: String },
}

fn field_err(field: impl Into<String>, message: impl std::fmt::Display) -> ConfigError {
    ConfigError::Field { field: field.into(), message: message.to_string() }
}

#[derive(Deserialize, Clone, Copy, Debug)]
#[serde(untagged)]
pub enum Entry {
    Pair([f64; 2]),
    Real(f64),
}

impl Entry {
    fn value(self) -> C64 {
        match self {
            Entry::Pair([re, im]) => C64::new(re, im),
            Entry::Real(re) => real(re),
        }
    }
}

pub type MatrixJson = Vec<Vec<Entry>>;
pub type VectorJson = Vec<Entry>;

#[derive(Deserialize, Default, Debug)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub dim_h: Option<usize>,
    pub rho: Option<MatrixJson>,
    /// 1-based blocks of the support eigenbasis.
    pub blocks: Option<Vec<Vec<usize>>>,
    pub support_tol: Option<f64>,
    pub generator: Option<GeneratorJson>,
    pub f: Option<StepJson>,
    pub g: Option<StepJson>,
    pub observable: Option<MatrixJson>,
    pub u: Option<VectorJson>,
    pub v: Option<VectorJson>,
    pub taus: Option<Vec<f64>>,
    pub times: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub tolerances: Option<TolerancesJson>,
    pub noise: Option<NoiseJson>,
    pub example_c3: Option<C3Json>,
    pub oracle_steps: Option<usize>,
    pub lindblad_times: Option<Vec<f64>>,
}

#[derive(Deserialize, Debug)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum GeneratorJson {
    Hamiltonian {
        #[serde(default)]
        conjugation: bool,
        h_d: MatrixJson,
        h_o: MatrixJson,
        l: MatrixJson,
        h_times: MatrixJson,
        r: Option<PerturbationJson>,
    },
    RandomHamiltonian {
        #[serde(default)]
        conjugation: bool,
        #[serde(default)]
        with_r: bool,
    },
    RawF {
        #[serde(default)]
        conjugation: bool,
        f: MatrixJson,
    },
    /// `Ψ` given by its matrix on column-major vectorisations.
    Superoperator { matrix: MatrixJson },
    Trivial,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
pub struct PerturbationJson {
    pub r00: MatrixJson,
    pub rx0: MatrixJson,
    pub rxx: MatrixJson,
}

/// A step function whose values are coordinates in the `μ` basis.
#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
pub struct StepJson {
    pub breakpoints: Vec<f64>,
    pub values: Vec<VectorJson>,
}

#[derive(Deserialize, Default, Debug, Clone, Copy)]
#[serde(deny_unknown_fields)]
pub struct TolerancesJson {
    pub hp: Option<f64>,
    pub identity: Option<f64>,
    pub oracle: Option<f64>,
    pub lindblad: Option<f64>,
    pub choi: Option<f64>,
    pub max_abs_err: Option<f64>,
}

#[derive(Deserialize, Debug, Clone, Copy)]
#[serde(deny_unknown_fields)]
pub struct NoiseJson {
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub expected: Option<usize>,
}

#[derive(Deserialize, Default, Debug)]
#[serde(deny_unknown_fields)]
pub struct C3Json {
    pub lambda1: Option<f64>,
    pub b: Option<MatrixJson>,
    pub c: Option<MatrixJson>,
    pub g: Option<MatrixJson>,
    pub l: Option<MatrixJson>,
    pub m: Option<MatrixJson>,
    pub h: Option<MatrixJson>,
}

#[derive(Clone, Copy, Debug)]
pub struct Tolerances {
    pub hp: f64,
    pub identity: f64,
    pub oracle: f64,
    pub lindblad: f64,
    /// Lower bound on Choi eigenvalues.
    pub choi: f64,
    /// Optional cap on walk-versus-cocycle errors in `simulate`.
    pub max_abs_err: Option<f64>,
}

impl From<TolerancesJson> for Tolerances {
    fn from(t: TolerancesJson) -> Self {
        Self {
            hp: t.hp.unwrap_or(1e-10),
            identity: t.identity.unwrap_or(1e-11),
            oracle: t.oracle.unwrap_or(1e-12),
            lindblad: t.lindblad.unwrap_or(1e-10),
            choi: t.choi.unwrap_or(-1e-8),
            max_abs_err: t.max_abs_err,
        }
    }
}

#[derive(Clone, Debug)]
pub enum Generator {
    Hamiltonian { spec: HamiltonianSpec, kind: HamiltonianKind },
    RawF { f: CMatrix, kind: HamiltonianKind },
    Superoperator(Superoperator),
    Trivial,
}

impl Generator {
    pub fn label(&self) -> &'static str {
        match self {
            Generator::Hamiltonian { kind: HamiltonianKind::Right, .. } => "hamiltonian-right",
            Generator::Hamiltonian { kind: HamiltonianKind::Conjugation, .. } => "hamiltonian-conjugation",
            Generator::RawF { kind: HamiltonianKind::Right, .. } => "raw-f-right",
            Generator::RawF { kind: HamiltonianKind::Conjugation, .. } => "raw-f-conjugation",
            Generator::Superoperator(_) => "superoperator",
            Generator::Trivial => "trivial",
        }
    }
}

#[derive(Clone, Debug)]
pub struct C3Settings {
    pub lambda1: f64,
    pub params: C3Params,
}

/// A fully validated experiment.
#[derive(Clone, Debug)]
pub struct Config {
    pub fixture: Fixture,
    pub generator: Generator,
    pub a: CMatrix,
    pub u: CVector,
    pub v: CVector,
    pub f: StepFunction,
    pub g: StepFunction,
    pub taus: Vec<f64>,
    pub times: Vec<f64>,
    pub seed: u64,
    pub trials: usize,
    pub tol: Tolerances,
    pub noise: Option<NoiseJson>,
    pub c3: C3Settings,
    pub oracle_steps: Option<usize>,
    pub lindblad_times: Vec<f64>,
}

pub fn load(path: Option<&Path>) -> Result<ConfigFile, ConfigError> {
    match path {
        None => Ok(ConfigFile::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|source| ConfigError::Io { path: p.display().to_string(), source })?;
            Ok(serde_json::from_str(&text)?)
        }
    }
}

fn matrix(field: &str, m: &MatrixJson) -> Result<CMatrix, ConfigError> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Err(field_err(field, "matrix is empty"));
    }
    if let Some(i) = m.iter().position(|r| r.len() != cols) {
        return Err(field_err(field, format!("row {i} has {} entries, expected {cols}", m[i].len())));
    }
    Ok(CMatrix::from_fn(rows, cols, |i, j| m[i][j].value()))
}

fn square(field: &str, m: &MatrixJson, n: usize) -> Result<CMatrix, ConfigError> {
    let out = matrix(field, m)?;
    if out.shape() != (n, n) {
        return Err(field_err(field, format!("shape {:?}, expected ({n}, {n})", out.shape())));
    }
    Ok(out)
}

fn vector(field: &str, v: &VectorJson, n: usize) -> Result<CVector, ConfigError> {
    if v.len() != n {
        return Err(field_err(field, format!("length {}, expected {n}", v.len())));
    }
    Ok(CVector::from_iterator(n, v.iter().map(|e| e.value())))
}

fn step(field: &str, s: &StepJson, mu: &CMatrix) -> Result<StepFunction, ConfigError> {
    let values = s
        .values
        .iter()
        .enumerate()
        .map(|(i, coords)| Ok(mu * vector(&format!("{field}.values[{i}]"), coords, mu.ncols())?))
        .collect::<Result<Vec<_>, ConfigError>>()?;
    StepFunction::new(s.breakpoints.clone(), values).map_err(|e| field_err(field, e))
}

fn kind(conjugation: bool) -> HamiltonianKind {
    if conjugation {
        HamiltonianKind::Conjugation
    } else {
        HamiltonianKind::Right
    }
}

fn time_list(field: &str, ts: &[f64]) -> Result<(), ConfigError> {
    if ts.is_empty() {
        return Err(field_err(field, "list is empty"));
    }
    if let Some(t) = ts.iter().find(|t| !t.is_finite() || **t < 0.0) {
        return Err(field_err(field, format!("{t} is not a non-negative time")));
    }
    Ok(())
}

impl Config {
    /// Validates `file`; `seed` overrides the seed stored in the file.
    pub fn resolve(file: ConfigFile, seed: Option<u64>) -> Result<Self, ConfigError> {
        let seed = seed.or(file.seed).unwrap_or(0);
        let dim_h = file.dim_h.unwrap_or(2);
        if dim_h == 0 {
            return Err(field_err("dim_h", "must be positive"));
        }
        let rho = match &file.rho {
            Some(r) => {
                let m = matrix("rho", r)?;
                if !m.is_square() {
                    return Err(field_err("rho", "density matrix must be square"));
                }
                m
            }
            None => CMatrix::from_diagonal(&CVector::from_vec(vec![real(0.7), real(0.3), real(0.0)])),
        };
        let tol = file.support_tol.unwrap_or(qrwt_core::state_gns::DEFAULT_SUPPORT_TOL);
        let g = qrwt_core::state_gns::GnsData::build(rho, tol).map_err(|e| field_err("rho", e))?;
        let c = match &file.blocks {
            Some(b) => qrwt_core::cond_exp::CondExp::new(&g, b),
            None => qrwt_core::cond_exp::CondExp::diagonal(&g),
        }
        .map_err(|e| field_err("blocks", e))?;
        let fixture = Fixture { g, c, dim_h };
        let (g, c) = (&fixture.g, &fixture.c);
        let (n, k) = (g.n(), g.k());

        let generator = match &file.generator {
            None => Generator::Hamiltonian {
                spec: HamiltonianSpec::random(&mut seeded(seed), dim_h, g, c, false).map_err(|e| field_err("generator", e))?,
                kind: HamiltonianKind::Right,
            },
            Some(GeneratorJson::RandomHamiltonian { conjugation, with_r }) => Generator::Hamiltonian {
                spec: HamiltonianSpec::random(&mut seeded(seed), dim_h, g, c, *with_r).map_err(|e| field_err("generator", e))?,
                kind: kind(*conjugation),
            },
            Some(GeneratorJson::Hamiltonian { conjugation, h_d, h_o, l, h_times, r }) => {
                let r = match r {
                    Some(p) => Some(Perturbation {
                        r00: matrix("generator.r.r00", &p.r00)?,
                        rx0: matrix("generator.r.rx0", &p.rx0)?,
                        rxx: matrix("generator.r.rxx", &p.rxx)?,
                    }),
                    None => None,
                };
                let spec = HamiltonianSpec {
                    dim_h,
                    h_d: matrix("generator.h_d", h_d)?,
                    h_o: matrix("generator.h_o", h_o)?,
                    l: matrix("generator.l", l)?,
                    h_times: matrix("generator.h_times", h_times)?,
                    r,
                };
                spec.validate(g, c).map_err(|e| field_err("generator", e))?;
                Generator::Hamiltonian { spec, kind: kind(*conjugation) }
            }
            Some(GeneratorJson::RawF { conjugation, f }) => {
                Generator::RawF { f: square("generator.f", f, dim_h * n)?, kind: kind(*conjugation) }
            }
            Some(GeneratorJson::Superoperator { matrix: m }) => {
                let m = matrix("generator.matrix", m)?;
                let out = dim_h * n;
                Generator::Superoperator(
                    Superoperator::from_matrix((dim_h, dim_h), (out, out), m).map_err(|e| field_err("generator.matrix", e))?,
                )
            }
            Some(GeneratorJson::Trivial) => Generator::Trivial,
        };

        let (ref_f, ref_g) = reference_test_functions(g).map_err(|e| field_err("f", e))?;
        let mu = g.mu_basis().clone();
        let f = match &file.f {
            Some(s) => step("f", s, &mu)?,
            None if dim_h == 2 && n == 3 && k == 2 => ref_f,
            None => StepFunction::zero(g.khat_dim()),
        };
        let gf = match &file.g {
            Some(s) => step("g", s, &mu)?,
            None if dim_h == 2 && n == 3 && k == 2 => ref_g,
            None => StepFunction::zero(g.khat_dim()),
        };
        let (ref_u, ref_v) = reference_vectors();
        let a = match &file.observable {
            Some(m) => square("observable", m, dim_h)?,
            None if dim_h == 2 => reference_observable(),
            None => CMatrix::identity(dim_h, dim_h),
        };
        let unit = || CVector::from_fn(dim_h, |i, _| if i == 0 { real(1.0) } else { real(0.0) });
        let u = match &file.u {
            Some(x) => vector("u", x, dim_h)?,
            None if dim_h == 2 => ref_u,
            None => unit(),
        };
        let v = match &file.v {
            Some(x) => vector("v", x, dim_h)?,
            None if dim_h == 2 => ref_v,
            None => unit(),
        };

        let taus = file.taus.clone().unwrap_or_else(|| dyadic_taus(2, 9));
        if taus.is_empty() {
            return Err(field_err("taus", "list is empty"));
        }
        if let Some(t) = taus.iter().find(|t| !t.is_finite() || **t <= 0.0) {
            return Err(field_err("taus", format!("{t} is not a positive step")));
        }
        if taus.windows(2).any(|w| w[1] >= w[0]) {
            return Err(field_err("taus", "steps must be strictly decreasing"));
        }
        let times = file.times.clone().unwrap_or_else(|| vec![1.0]);
        time_list("times", &times)?;
        let lindblad_times = file.lindblad_times.clone().unwrap_or_else(|| vec![0.1, 1.0]);
        time_list("lindblad_times", &lindblad_times)?;

        if let Some(steps) = file.oracle_steps {
            if steps > ORACLE_MAX_STEPS {
                return Err(field_err(
                    "oracle_steps",
                    format!("the dense oracle is limited to {ORACLE_MAX_STEPS} steps, got {steps}"),
                ));
            }
        }

        let c3 = {
            let spec = file.example_c3.unwrap_or_default();
            let lambda1 = spec.lambda1.unwrap_or(0.7);
            if !(lambda1 > 0.0 && lambda1 < 1.0) {
                return Err(field_err("example_c3.lambda1", format!("{lambda1} is outside (0, 1)")));
            }
            let given = [&spec.b, &spec.c, &spec.g, &spec.l, &spec.m, &spec.h];
            let params = if given.iter().all(|m| m.is_none()) {
                C3Params::random(seed, dim_h)
            } else {
                let get = |name: &str, m: &Option<MatrixJson>| -> Result<CMatrix, ConfigError> {
                    let field = format!("example_c3.{name}");
                    match m {
                        Some(m) => square(&field, m, dim_h),
                        None => Err(field_err(field, "give all six coefficients or none")),
                    }
                };
                C3Params {
                    dim_h,
                    b: get("b", &spec.b)?,
                    c: get("c", &spec.c)?,
                    g: get("g", &spec.g)?,
                    l: get("l", &spec.l)?,
                    m: get("m", &spec.m)?,
                    h: get("h", &spec.h)?,
                }
            };
            C3Settings { lambda1, params }
        };

        Ok(Self {
            fixture,
            generator,
            a,
            u,
            v,
            f,
            g: gf,
            taus,
            times,
            seed,
            trials: file.trials.unwrap_or(8).max(1),
            tol: file.tolerances.unwrap_or_default().into(),
            noise: file.noise,
            c3,
            oracle_steps: file.oracle_steps,
            lindblad_times,
        })
    }
}
