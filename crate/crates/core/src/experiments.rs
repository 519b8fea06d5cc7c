//! Reusable fixtures and sweeps shared by the acceptance suite and the CLI.

use rayon::prelude::*;
use serde::Serialize;

use crate::cocycle::{
    cocycle_matrix_element, eh_generator, f_from_hamiltonian, hp_check, HamiltonianKind, HamiltonianSpec, HpBlocks,
    HpReport,
};
use crate::cond_exp::CondExp;
use crate::error::{Error, Result};
use crate::generators::{
    ampliation_map, effective_noise_count, limit_generator_multiplicative, limit_image, noise_bound, LimitGenerator,
    WalkGenerator,
};
use crate::linalg::{basis_vector, decap_exp, dyad, elementary, identity, kron, loglog_slope, real, slice, CMatrix, CVector, Superoperator, C64, I};
use crate::random::{random_hermitian, random_matrix, seeded};
use crate::state_gns::{GnsData, DEFAULT_SUPPORT_TOL};
use crate::walk_sim::{StepFunction, WalkRun};

/// Errors at or below this level make a sweep "flat": no slope is fitted.
pub const FLAT_TOL: f64 = 1e-12;
pub const MIN_SLOPE: f64 = 0.4;
/// Required reduction of the error between the coarsest and finest step.
pub const MIN_REDUCTION: f64 = 8.0;
pub const C3_TOL: f64 = 1e-10;

/// A state, its conditional expectation and the dimension of `h`.
#[derive(Clone, Debug)]
pub struct Fixture {
    pub g: GnsData,
    pub c: CondExp,
    pub dim_h: usize,
}

impl Fixture {
    /// `blocks = None` uses the diagonal pinching.
    pub fn new(rho: CMatrix, blocks: Option<&[Vec<usize>]>, dim_h: usize) -> Result<Self> {
        if dim_h == 0 {
            return Err(Error::InvalidArgument("dim h must be positive".into()));
        }
        let g = GnsData::build(rho, DEFAULT_SUPPORT_TOL)?;
        let c = match blocks {
            Some(b) => CondExp::new(&g, b)?,
            None => CondExp::diagonal(&g)?,
        };
        Ok(Self { g, c, dim_h })
    }

    /// `ρ = diag(0.7, 0.3, 0)` with the diagonal pinching on `h = ℂ²`.
    pub fn mixed() -> Self {
        Self::c3(0.7, 2).expect("fixed mixed fixture is valid")
    }

    /// `ρ = diag(λ₁, 1 − λ₁, 0)` with the diagonal pinching.
    pub fn c3(lambda1: f64, dim_h: usize) -> Result<Self> {
        if !(lambda1 > 0.0 && lambda1 < 1.0) {
            return Err(Error::InvalidArgument(format!("λ₁ must lie in (0, 1), got {lambda1}")));
        }
        let rho = CMatrix::from_diagonal(&CVector::from_vec(vec![real(lambda1), real(1.0 - lambda1), real(0.0)]));
        Self::new(rho, None, dim_h)
    }

    /// `ρ = |e₁⟩⟨e₁|` on `ℂ³` with `d₀ = id` on `h = ℂ²`.
    pub fn pure() -> Self {
        let e1 = basis_vector(3, 0);
        Self::new(dyad(&e1, &e1), Some(&[vec![1]]), 2).expect("fixed pure fixture is valid")
    }
}

/// Two-interval test functions with values in `μ`, deliberately off the dyadic mesh.
pub fn reference_test_functions(g: &GnsData) -> Result<(StepFunction, StepFunction)> {
    let mu = g.mu_basis();
    let dim = mu.ncols();
    let col = |i: usize| mu.column(i % dim).into_owned();
    let f1 = col(0) * real(0.6) + col(1) * C64::new(0.0, 0.4);
    let f2 = col(2) * real(-0.5) + col(3) * real(0.3);
    let g1 = col(1) * real(0.5) + col(3) * C64::new(0.2, -0.3);
    let g2 = col(0) * C64::new(0.0, -0.4) + col(2) * real(0.45);
    Ok((
        StepFunction::new(vec![0.0, 0.3, 0.85], vec![f1, f2])?,
        StepFunction::new(vec![0.0, 0.55, 1.2], vec![g1, g2])?,
    ))
}

/// A fixed non-normal observable on `ℂ²`.
pub fn reference_observable() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[real(1.0), real(2.0), real(0.0), C64::new(-0.5, 1.0)])
}

pub fn reference_vectors() -> (CVector, CVector) {
    (
        CVector::from_vec(vec![real(0.8), C64::new(0.0, 0.6)]),
        CVector::from_vec(vec![C64::new(0.6, 0.0), real(-0.8)]),
    )
}

/// The walk generators and their limit.
#[derive(Clone, Debug)]
pub enum WalkModel {
    /// `Φ(τ)` built from a scaled Hamiltonian.
    Hamiltonian { spec: HamiltonianSpec, kind: HamiltonianKind },
    /// `Φ(a) = a ⊗ I` with limit `ψ = 0`.
    Trivial,
}

impl WalkModel {
    pub fn walk_generator(&self, tau: f64, fx: &Fixture) -> Result<WalkGenerator> {
        match self {
            WalkModel::Hamiltonian { spec, kind: HamiltonianKind::Right } => spec.right_generator(tau, &fx.g),
            WalkModel::Hamiltonian { spec, kind: HamiltonianKind::Conjugation } => spec.conjugation_generator(tau, &fx.g),
            WalkModel::Trivial => WalkGenerator::explicit(ampliation_map(fx.dim_h, fx.g.n())),
        }
    }

    pub fn limit(&self, fx: &Fixture) -> Result<LimitGenerator> {
        match self {
            WalkModel::Hamiltonian { spec, kind } => {
                let (f, _) = f_from_hamiltonian(spec, &fx.g, &fx.c)?;
                match kind {
                    HamiltonianKind::Right => limit_generator_multiplicative(&f, spec.dim_h, &fx.g, &fx.c),
                    HamiltonianKind::Conjugation => Ok(eh_generator(&f, spec.dim_h, &fx.g, &fx.c)?.psi),
                }
            }
            WalkModel::Trivial => {
                let m = fx.dim_h * fx.g.khat_dim();
                LimitGenerator::from_psi(Superoperator::zero((fx.dim_h, fx.dim_h), (m, m)))
            }
        }
    }
}

/// Inputs of a matrix-element comparison.
#[derive(Clone, Debug)]
pub struct MatrixElementProblem {
    pub a: CMatrix,
    pub u: CVector,
    pub v: CVector,
    pub f: StepFunction,
    pub g: StepFunction,
}

impl MatrixElementProblem {
    pub fn reference(fx: &Fixture) -> Result<Self> {
        let (f, g) = reference_test_functions(&fx.g)?;
        let (u, v) = reference_vectors();
        Ok(Self { a: reference_observable(), u, v, f, g })
    }
}

/// One cell of a walk-versus-cocycle sweep.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct MatrixElementRow {
    pub tau: f64,
    pub t: f64,
    pub re: f64,
    pub im: f64,
    pub abs_err: f64,
    pub cocycle_re: f64,
    pub cocycle_im: f64,
}

/// Walk and cocycle matrix elements on the grid `taus × times`, row order `τ`-major.
pub fn walk_cocycle_sweep(
    model: &WalkModel,
    fx: &Fixture,
    problem: &MatrixElementProblem,
    taus: &[f64],
    times: &[f64],
) -> Result<Vec<MatrixElementRow>> {
    let psi = model.limit(fx)?;
    let limits: Vec<C64> = times
        .par_iter()
        .map(|&t| cocycle_matrix_element(&psi, &fx.g, &problem.a, &problem.u, &problem.v, &problem.f, &problem.g, t))
        .collect::<Result<_>>()?;
    let horizon = times.iter().copied().fold(0.0, f64::max);
    let per_tau: Vec<Vec<MatrixElementRow>> = taus
        .par_iter()
        .map(|&tau| {
            let w = model.walk_generator(tau, fx)?;
            let run = WalkRun::new(w.hat(&fx.g)?, fx.g.omega().clone(), tau, horizon)?;
            times
                .iter()
                .zip(&limits)
                .map(|(&t, &lim)| {
                    let walk = run.matrix_element(&problem.a, &problem.u, &problem.v, &problem.f, &problem.g, t)?;
                    Ok(MatrixElementRow {
                        tau,
                        t,
                        re: walk.re,
                        im: walk.im,
                        abs_err: (walk - lim).norm(),
                        cocycle_re: lim.re,
                        cocycle_im: lim.im,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(per_tau.into_iter().flatten().collect())
}

/// Convergence of a sequence of errors as `τ → 0`.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ConvergenceSummary {
    pub taus: Vec<f64>,
    pub errors: Vec<f64>,
    /// `None` when the sweep is flat.
    pub slope: Option<f64>,
    pub flat: bool,
    pub strictly_decreasing: bool,
    /// `e(τ_first) / e(τ_last)`.
    pub reduction: f64,
    pub passed: bool,
}

impl ConvergenceSummary {
    /// Passes when flat, or when the error drops by [`MIN_REDUCTION`] with slope at least [`MIN_SLOPE`].
    pub fn new(taus: &[f64], errors: &[f64]) -> Self {
        let max = errors.iter().copied().fold(0.0, f64::max);
        let flat = max <= FLAT_TOL;
        let slope = if flat { None } else { loglog_slope(taus, errors) };
        let strictly_decreasing = errors.windows(2).all(|w| w[1] < w[0]);
        let reduction = match (errors.first(), errors.last()) {
            (Some(&a), Some(&b)) if b > 0.0 => a / b,
            _ => f64::INFINITY,
        };
        let passed = flat || (reduction >= MIN_REDUCTION && slope.is_some_and(|s| s >= MIN_SLOPE));
        Self { taus: taus.to_vec(), errors: errors.to_vec(), slope, flat, strictly_decreasing, reduction, passed }
    }

    /// Whether the slope and monotonicity requirements for generator distances hold.
    pub fn monotone_pass(&self) -> bool {
        self.flat || (self.strictly_decreasing && self.slope.is_some_and(|s| s >= MIN_SLOPE))
    }
}

/// `τ = 2^{-lo}, …, 2^{-hi}`.
pub fn dyadic_taus(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|e| 2f64.powi(-e)).collect()
}

/// Errors at time `t` picked out of a sweep, one per `τ`.
pub fn errors_at(rows: &[MatrixElementRow], t: f64) -> (Vec<f64>, Vec<f64>) {
    rows.iter().filter(|r| r.t == t).map(|r| (r.tau, r.abs_err)).unzip()
}

/// Two standard negative controls: `K` shifted by a conditional-expectation-fixed
/// Hermitian term, and `V` scaled off the unitary group.
pub fn hp_negative_controls(blocks: &HpBlocks, fx: &Fixture, seed: u64) -> Result<[HpReport; 2]> {
    let mut rng = seeded(seed);
    let mut shifted = blocks.clone();
    let kdim = shifted.k.nrows();
    shifted.k += fx.c.apply_d0_amp(&random_hermitian(&mut rng, kdim))? * real(0.1);
    let mut scaled = blocks.clone();
    scaled.v *= real(1.1);
    let report = |b: &HpBlocks| -> Result<HpReport> {
        let f = b.fmat(&fx.g)?;
        hp_check(&limit_image(&f, &fx.g, &fx.c)?, &fx.g, Some((&f, &fx.c)))
    };
    Ok([report(&shifted)?, report(&scaled)?])
}

/// The operator coefficients of the three-dimensional example.
#[derive(Clone, Debug)]
pub struct C3Params {
    pub dim_h: usize,
    pub b: CMatrix,
    pub c: CMatrix,
    pub g: CMatrix,
    pub l: CMatrix,
    pub m: CMatrix,
    pub h: CMatrix,
}

impl C3Params {
    /// Hermitian `b`, `c`, `h` and arbitrary `g`, `l`, `m`.
    pub fn random(seed: u64, dim_h: usize) -> Self {
        let mut rng = seeded(seed);
        let s = real(0.5);
        Self {
            dim_h,
            b: random_hermitian(&mut rng, dim_h) * s,
            c: random_hermitian(&mut rng, dim_h) * s,
            g: random_matrix(&mut rng, dim_h, dim_h) * s,
            l: random_matrix(&mut rng, dim_h, dim_h) * s,
            m: random_matrix(&mut rng, dim_h, dim_h) * s,
            h: random_hermitian(&mut rng, dim_h) * s,
        }
    }

    /// `H_d = diag(b, c)`, `H_o = [[0, g*], [g, 0]]`, `L = [l m]`, `H_× = h`,
    /// written in the canonical eigen-coordinates of `g`.
    pub fn spec(&self, g: &GnsData) -> Result<HamiltonianSpec> {
        if (g.n(), g.k()) != (3, 2) {
            return Err(Error::Dimension("the example needs a rank-two state on ℂ³".into()));
        }
        let e = |r, c| elementary(2, 2, r, c);
        let id = identity(self.dim_h);
        let front = kron(&id, &g.k0_basis().rows(0, 2).into_owned());
        let back = kron(&id, &g.split().back().rows(2, 1).into_owned());
        let h_d = kron(&self.b, &e(0, 0)) + kron(&self.c, &e(1, 1));
        let h_o = kron(&self.g.adjoint(), &e(0, 1)) + kron(&self.g, &e(1, 0));
        let l = kron(&self.l, &elementary(1, 2, 0, 0)) + kron(&self.m, &elementary(1, 2, 0, 1));
        Ok(HamiltonianSpec {
            dim_h: self.dim_h,
            h_d: front.adjoint() * h_d * &front,
            h_o: front.adjoint() * h_o * &front,
            l: back.adjoint() * l * &front,
            h_times: back.adjoint() * &self.h * &back,
            r: None,
        })
    }

    /// The entries `F_pq` (0-based) written out entry by entry.
    pub fn expected_f(&self) -> Result<[[CMatrix; 3]; 3]> {
        let e1 = decap_exp(1, &self.h, -I)?;
        let e2 = decap_exp(2, &self.h, -I)?;
        let v = crate::linalg::Hermitian::new(self.h.clone())?.exp_scaled(-I);
        let id = identity(self.dim_h);
        let (b, c, g, l, m) = (&self.b, &self.c, &self.g, &self.l, &self.m);
        let half = real(0.5);
        Ok([
            [
                b * (-I) - g.adjoint() * g * half - l.adjoint() * &e2 * l,
                g.adjoint() * (-I),
                l.adjoint() * &e1 * (-I),
            ],
            [
                g * (-I),
                c * (-I) - g * g.adjoint() * half - m.adjoint() * &e2 * m,
                m.adjoint() * &e1 * (-I),
            ],
            [&e1 * l * (-I), &e1 * m * (-I), v - id],
        ])
    }
}

/// Outcome of the three-dimensional example.
#[derive(Clone, Debug, Serialize)]
pub struct C3Report {
    pub lambda: [f64; 2],
    pub dim_h: usize,
    /// Largest deviation of `F` from its entry-by-entry form.
    pub f_entry_residual: f64,
    /// How far the `(2,2)` entry moves if `½g*g` is used in place of `½gg*`.
    pub f22_gstar_g_deviation: f64,
    /// Vacuum–vacuum, creation, annihilation and gauge slice relations.
    pub slice_residuals: [f64; 4],
    pub hp_unitary: bool,
    pub noise_count: usize,
    pub noise_bound: usize,
    pub passed: bool,
}

pub const C3_EXPECTED_NOISES: usize = 10;

/// Builds `F` and `ψ` for the example and checks the displayed relations.
pub fn example_c3(lambda1: f64, params: &C3Params, trials: usize, seed: u64) -> Result<C3Report> {
    let fx = Fixture::c3(lambda1, params.dim_h)?;
    let (g, c) = (&fx.g, &fx.c);
    let (f, _) = f_from_hamiltonian(&params.spec(g)?, g, c)?;
    let entry = |p: usize, q: usize| slice(&f, &basis_vector(3, p), &basis_vector(3, q));

    let expected = params.expected_f()?;
    let mut f_entry_residual: f64 = 0.0;
    for (p, row) in expected.iter().enumerate() {
        for (q, want) in row.iter().enumerate() {
            f_entry_residual = f_entry_residual.max((entry(p, q)? - want).norm());
        }
    }
    let g_m = &params.g;
    let f22_gstar_g_deviation = ((g_m.adjoint() * g_m - g_m * g_m.adjoint()) * real(0.5)).norm();

    let lg = limit_generator_multiplicative(&f, params.dim_h, g, c)?;
    let lam = [lambda1, 1.0 - lambda1];
    let omega = g.omega();
    let bracket = |i: usize, j: usize| g.tensor_conj(&basis_vector(3, i), &basis_vector(3, j));
    let pairs = [(0, 1), (1, 0), (2, 0), (2, 1)];
    let mut rng = seeded(seed);
    let mut res = [0.0f64; 4];
    for _ in 0..trials.max(1) {
        let a = random_matrix(&mut rng, params.dim_h, params.dim_h);
        let image = lg.apply(&a)?;
        let vac = &a * (entry(0, 0)? * real(lam[0]) + entry(1, 1)? * real(lam[1]));
        res[0] = res[0].max((slice(&image, omega, omega)? - vac).norm());
        for &(i, j) in &pairs {
            let s = real(lam[j].sqrt());
            let creation = &a * entry(i, j)? * s;
            res[1] = res[1].max((slice(&image, &bracket(i, j), omega)? - creation).norm());
            let annihilation = &a * entry(j, i)? * s;
            res[2] = res[2].max((slice(&image, omega, &bracket(i, j))? - annihilation).norm());
        }
        for k in 0..2 {
            for l in 0..2 {
                let want = if k == l { &a * entry(2, 2)? } else { CMatrix::zeros(params.dim_h, params.dim_h) };
                res[3] = res[3].max((slice(&image, &bracket(2, k), &bracket(2, l))? - want).norm());
            }
        }
    }
    let hp = hp_check(lg.g_matrix().expect("multiplicative limit"), g, Some((&f, c)))?;
    let noise_count = effective_noise_count(&lg, g, trials, seed)?;
    let bound = noise_bound(g.n(), g.k(), c.rank_l())?;
    let passed = f_entry_residual <= C3_TOL
        && res.iter().all(|&r| r <= C3_TOL)
        && hp.passed()
        && noise_count == C3_EXPECTED_NOISES;
    Ok(C3Report {
        lambda: lam,
        dim_h: params.dim_h,
        f_entry_residual,
        f22_gstar_g_deviation,
        slice_residuals: res,
        hp_unitary: hp.unitary,
        noise_count,
        noise_bound: bound,
        passed,
    })
}
