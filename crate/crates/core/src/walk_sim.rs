//! The embedded discrete walk on toy Fock space.
//!
//! Matrix elements against exponential vectors reduce to products of sliced
//! maps `S^{x,y}(a) = E^{x̂} Φ̂(a) E_{ŷ}`, one per particle, followed by the
//! tail of inner products of the untouched particles. Slot `m` carries the
//! particle that interacts during `[mτ, (m+1)τ)`, and the recursion slices
//! the most recent slot first, so the walk is evaluated as
//! `S^{x₀,y₀} ∘ ⋯ ∘ S^{x_{n−1},y_{n−1}}` applied to `a`.

use crate::error::{Error, Result};
use crate::generators::{GeneratorKind, WalkGenerator};
use crate::linalg::{identity, kron, kron_vec, real, slice, unvec, vec_of, CMatrix, CVector, Superoperator, C64, ONE};

/// Slack used when converting a time to a step count so that `t = nτ`
/// computed in floating point lands on step `n`.
const STEP_SLACK: f64 = 1e-9;
/// Largest step count the dense oracle accepts.
pub const ORACLE_MAX_STEPS: usize = 3;
const UNITARITY_TOL: f64 = 1e-11;

/// A right-continuous piecewise-constant function `ℝ₊ → ℂ^d`, zero after the last breakpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct StepFunction {
    breakpoints: Vec<f64>,
    values: Vec<CVector>,
    dim: usize,
}

impl StepFunction {
    /// `values[i]` holds on `[breakpoints[i], breakpoints[i+1])`.
    pub fn new(breakpoints: Vec<f64>, values: Vec<CVector>) -> Result<Self> {
        if breakpoints.len() != values.len() + 1 {
            return Err(Error::InvalidArgument(format!(
                "{} breakpoints for {} values; expected one more breakpoint than values",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints[0] != 0.0 {
            return Err(Error::InvalidArgument("breakpoints must start at 0".into()));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) || breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidArgument("breakpoints must be finite and strictly increasing".into()));
        }
        let dim = values.first().map(|v| v.len()).unwrap_or(0);
        if values.iter().any(|v| v.len() != dim) {
            return Err(Error::Dimension("step function values have different lengths".into()));
        }
        Ok(Self { breakpoints, values, dim })
    }

    pub fn zero(dim: usize) -> Self {
        Self { breakpoints: vec![0.0], values: Vec::new(), dim }
    }

    /// `x` on `[0, end)`.
    pub fn constant(x: CVector, end: f64) -> Result<Self> {
        Self::new(vec![0.0, end], vec![x])
    }

    /// Value length; zero for the zero function built without a dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support_end(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[CVector] {
        &self.values
    }

    /// The value on the interval containing `t`.
    pub fn value_at(&self, t: f64) -> CVector {
        for (i, v) in self.values.iter().enumerate() {
            if t >= self.breakpoints[i] && t < self.breakpoints[i + 1] {
                return v.clone();
            }
        }
        CVector::zeros(self.dim)
    }

    /// Rejects values with a component along `omega`.
    pub fn check_orthogonal_to(&self, omega: &CVector) -> Result<()> {
        if self.dim != 0 && self.dim != omega.len() {
            return Err(Error::Dimension(format!("step function has values in ℂ^{}, expected ℂ^{}", self.dim, omega.len())));
        }
        for v in &self.values {
            let overlap = omega.dotc(v).norm();
            if overlap > 1e-12 * v.norm().max(1.0) {
                return Err(Error::InvalidArgument(format!("value has a vacuum component of size {overlap:.3e}")));
            }
        }
        Ok(())
    }

    /// Exact `∫_a^b f`.
    pub fn integral(&self, a: f64, b: f64) -> CVector {
        let mut acc = CVector::zeros(self.dim);
        for (i, v) in self.values.iter().enumerate() {
            let lo = self.breakpoints[i].max(a);
            let hi = self.breakpoints[i + 1].min(b);
            if hi > lo {
                acc += v * real(hi - lo);
            }
        }
        acc
    }

    /// `f(n;τ) = τ^{-1/2} ∫_{nτ}^{(n+1)τ} f` for `n < n_max`.
    pub fn dtau_coeffs(&self, tau: f64, n_max: usize) -> Result<Vec<CVector>> {
        if tau.is_nan() || tau <= 0.0 {
            return Err(Error::NonPositiveStep(tau));
        }
        let s = tau.powf(-0.5);
        Ok((0..n_max).map(|n| self.integral(n as f64 * tau, (n + 1) as f64 * tau) * real(s)).collect())
    }

    /// Number of steps of size `τ` needed to cover the support.
    pub fn steps_to_cover(&self, tau: f64) -> usize {
        (self.support_end() / tau - STEP_SLACK).ceil().max(0.0) as usize
    }

    /// Intervals on which both functions are constant, up to time `t`:
    /// `(start, end, f-value, g-value)`.
    pub fn common_pieces(f: &StepFunction, g: &StepFunction, t: f64) -> Vec<(f64, f64, CVector, CVector)> {
        let mut cuts: Vec<f64> = f.breakpoints.iter().chain(g.breakpoints.iter()).copied().filter(|&b| b < t).collect();
        cuts.push(0.0);
        cuts.push(t);
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup();
        cuts.windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                (w[0], w[1], f.value_at(mid), g.value_at(mid))
            })
            .collect()
    }

    /// `∫₀^∞ ⟨f, g⟩`.
    pub fn inner_integral(f: &StepFunction, g: &StepFunction) -> C64 {
        let end = f.support_end().max(g.support_end());
        Self::common_pieces(f, g, end).iter().map(|(a, b, x, y)| x.dotc(y) * (b - a)).sum()
    }

    /// `⟨ε(f), ε(g)⟩ = exp ∫⟨f, g⟩`.
    pub fn exp_inner(f: &StepFunction, g: &StepFunction) -> C64 {
        Self::inner_integral(f, g).exp()
    }
}

/// `n = ⌊t/τ⌋`, robust to rounding at the mesh points.
pub fn step_count(t: f64, tau: f64) -> Result<usize> {
    if tau.is_nan() || tau <= 0.0 {
        return Err(Error::NonPositiveStep(tau));
    }
    if t.is_nan() || t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    Ok((t / tau + STEP_SLACK).floor() as usize)
}

/// A walk generator `Φ̂` on `h ⊗ k̂` with its basis slices cached.
#[derive(Clone, Debug)]
pub struct WalkRun {
    dim_h: usize,
    dim_k: usize,
    tau: f64,
    horizon: f64,
    omega: CVector,
    phi_hat: Superoperator,
    /// `S_pq = E^{e_p} Φ̂(·) E_{e_q}` as `dim_h² × dim_h²` matrices, index `p·K + q`.
    slices: Vec<CMatrix>,
}

impl WalkRun {
    pub fn new(phi_hat: Superoperator, omega: CVector, tau: f64, horizon: f64) -> Result<Self> {
        if tau.is_nan() || tau <= 0.0 {
            return Err(Error::NonPositiveStep(tau));
        }
        if horizon.is_nan() || horizon < 0.0 {
            return Err(Error::NegativeTime(horizon));
        }
        let (dh, _) = phi_hat.in_shape();
        let (m, _) = phi_hat.out_shape();
        let dim_k = omega.len();
        if m != dh * dim_k {
            return Err(Error::Dimension(format!(
                "generator output has dimension {m}, expected {dh} × {dim_k}"
            )));
        }
        let mut slices = Vec::with_capacity(dim_k * dim_k);
        for p in 0..dim_k {
            for q in 0..dim_k {
                let mut s = CMatrix::zeros(dh * dh, dh * dh);
                for col in 0..dh * dh {
                    let image = unvec(&phi_hat.matrix().column(col).into_owned(), m, m);
                    let sl = image.view((p, q), (m - p, m - q)).into_owned();
                    // rows r·K + p, columns c·K + q
                    let block = CMatrix::from_fn(dh, dh, |r, c| sl[(r * dim_k, c * dim_k)]);
                    s.set_column(col, &vec_of(&block));
                }
                slices.push(s);
            }
        }
        Ok(Self { dim_h: dh, dim_k, tau, horizon, omega, phi_hat, slices })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dim_h(&self) -> usize {
        self.dim_h
    }

    pub fn phi_hat(&self) -> &Superoperator {
        &self.phi_hat
    }

    pub fn omega(&self) -> &CVector {
        &self.omega
    }

    /// Steps taken up to the horizon.
    pub fn n_steps(&self) -> usize {
        step_count(self.horizon, self.tau).unwrap_or(0)
    }

    /// `S^{x,y}` as a matrix on `vec(B(h))`, assembled from the cache.
    pub fn sliced_matrix(&self, x: &CVector, y: &CVector) -> Result<CMatrix> {
        if x.len() != self.dim_k || y.len() != self.dim_k {
            return Err(Error::Dimension(format!("slot vectors must lie in ℂ^{}", self.dim_k)));
        }
        let d2 = self.dim_h * self.dim_h;
        let mut out = CMatrix::zeros(d2, d2);
        for p in 0..self.dim_k {
            let xp = x[p].conj();
            if xp == C64::new(0.0, 0.0) {
                continue;
            }
            for q in 0..self.dim_k {
                let w = xp * y[q];
                if w != C64::new(0.0, 0.0) {
                    out += &self.slices[p * self.dim_k + q] * w;
                }
            }
        }
        Ok(out)
    }

    /// `S^{x,y}` computed directly from `Φ̂`, bypassing the cache.
    pub fn sliced_fresh(&self, x: &CVector, y: &CVector) -> Result<Superoperator> {
        crate::linalg::sliced_map(&self.phi_hat, x, y)
    }

    /// `⟨u ε(f), J_t(a) v ε(g)⟩` with unnormalised exponential vectors.
    #[allow(clippy::too_many_arguments)]
    pub fn matrix_element(
        &self,
        a: &CMatrix,
        u: &CVector,
        v: &CVector,
        f: &StepFunction,
        g: &StepFunction,
        t: f64,
    ) -> Result<C64> {
        let n = step_count(t, self.tau)?;
        let dh = self.dim_h;
        if a.shape() != (dh, dh) || u.len() != dh || v.len() != dh {
            return Err(Error::Dimension(format!("observable and vectors must live on ℂ^{dh}")));
        }
        for h in [f, g] {
            if h.dim() != 0 && h.dim() != self.dim_k {
                return Err(Error::Dimension(format!("test function values must lie in ℂ^{}", self.dim_k)));
            }
        }
        let total = n.max(f.steps_to_cover(self.tau)).max(g.steps_to_cover(self.tau));
        let xs = hats(f, self.tau, total, &self.omega)?;
        let ys = hats(g, self.tau, total, &self.omega)?;

        let mut b = vec_of(a);
        for m in (0..n).rev() {
            b = self.sliced_matrix(&xs[m], &ys[m])? * b;
        }
        let b = unvec(&b, dh, dh);
        let mut tail = ONE;
        for m in n..total {
            tail *= xs[m].dotc(&ys[m]);
        }
        Ok(u.dotc(&(b * v)) * tail)
    }
}

fn hats(f: &StepFunction, tau: f64, n: usize, omega: &CVector) -> Result<Vec<CVector>> {
    let coeffs = if f.dim() == 0 {
        vec![CVector::zeros(omega.len()); n]
    } else {
        f.dtau_coeffs(tau, n)?
    };
    Ok(coeffs.into_iter().map(|c| omega + c).collect())
}

/// `Φ̂^{(n)}(a)` as a dense operator on `h ⊗ k̂^{⊗n}`, the newest slot rightmost.
pub fn dense_walk_operator(phi_hat: &Superoperator, n: usize, a: &CMatrix) -> Result<CMatrix> {
    if n > ORACLE_MAX_STEPS {
        return Err(Error::InvalidArgument(format!("dense oracle supports at most {ORACLE_MAX_STEPS} steps, got {n}")));
    }
    if n == 0 {
        return Ok(a.clone());
    }
    let (dh, _) = phi_hat.in_shape();
    let (m, _) = phi_hat.out_shape();
    let k = m / dh;
    let t = phi_hat.apply(a)?;
    let mut acc: Option<CMatrix> = None;
    for p in 0..k {
        for q in 0..k {
            let tpq = slice(&t, &crate::linalg::basis_vector(k, p), &crate::linalg::basis_vector(k, q))?;
            let inner = dense_walk_operator(phi_hat, n - 1, &tpq)?;
            let term = kron(&inner, &crate::linalg::elementary(k, k, p, q));
            acc = Some(match acc {
                Some(s) => s + term,
                None => term,
            });
        }
    }
    Ok(acc.unwrap())
}

/// `⟨u ⊗ x₀ ⊗ ⋯ ⊗ x_{n−1}, Φ̂^{(n)}(a) v ⊗ y₀ ⊗ ⋯ ⊗ y_{n−1}⟩` by brute force.
pub fn dense_walk_oracle(
    phi_hat: &Superoperator,
    n: usize,
    a: &CMatrix,
    u: &CVector,
    v: &CVector,
    xs: &[CVector],
    ys: &[CVector],
) -> Result<C64> {
    if xs.len() < n || ys.len() < n {
        return Err(Error::InvalidArgument(format!("need {n} slot vectors on each side")));
    }
    let op = dense_walk_operator(phi_hat, n, a)?;
    let left = xs[..n].iter().fold(u.clone(), |acc, x| kron_vec(&acc, x));
    let right = ys[..n].iter().fold(v.clone(), |acc, y| kron_vec(&acc, y));
    Ok(left.dotc(&(op * right)))
}

/// The sliced recursion evaluated for explicit slot vectors, for comparison with the oracle.
pub fn recursive_walk_value(
    run: &WalkRun,
    a: &CMatrix,
    u: &CVector,
    v: &CVector,
    xs: &[CVector],
    ys: &[CVector],
) -> Result<C64> {
    let dh = run.dim_h;
    let mut b = vec_of(a);
    for m in (0..xs.len().min(ys.len())).rev() {
        b = run.sliced_matrix(&xs[m], &ys[m])? * b;
    }
    Ok(u.dotc(&(unvec(&b, dh, dh) * v)))
}

/// Whether the per-step operator of a Hamiltonian generator is unitary.
pub fn walk_unitarity_check(w: &WalkGenerator) -> Result<bool> {
    if !matches!(w.kind(), GeneratorKind::HamiltonianRight | GeneratorKind::HamiltonianConjugation) {
        return Err(Error::InvalidArgument(format!("{:?} generator has no per-step unitary", w.kind())));
    }
    let u = w.step_operator().expect("Hamiltonian generators carry their step operator");
    Ok(unitarity_defect(u) <= UNITARITY_TOL)
}

/// `max(‖UU* − I‖, ‖U*U − I‖)`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let id = identity(u.nrows());
    let a = (u * u.adjoint() - &id).norm();
    let b = (u.adjoint() * u - &id).norm();
    a.max(b)
}
