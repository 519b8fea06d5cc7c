//! State-preserving conditional expectations.
//!
//! `d₀` acts on `B(k₀)` written in the eigen-coordinates of the state, so
//! `ϱ₀(Z) = Σ λ_j Z_jj`. The extension `d(X) = F₀ d₀(F₀* X F₀) F₀*` lives on
//! `B(k)` and the ampliation `𝔼 = id ⊗ d` on `B(h ⊗ k)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{identity, CMatrix, Superoperator};
use crate::random::{random_matrix, seeded};
use crate::state_gns::GnsData;

/// Tolerance used by [`CondExp::validate`].
pub const VALIDATION_TOL: f64 = 1e-11;
const COMMUTE_TOL: f64 = 1e-10;
const RANK_TOL: f64 = 1e-10;
const CHOI_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct CondExp {
    n: usize,
    k: usize,
    /// Zero-based block partition of the `k₀` eigenbasis; empty for maps given directly.
    blocks: Vec<Vec<usize>>,
    d0: Superoperator,
    d: Superoperator,
    rank_l: usize,
}

impl CondExp {
    /// The pinching `d₀(Z) = Σ_b P_b Z P_b` for a partition given with 1-based indices.
    pub fn new(g: &GnsData, blocks: &[Vec<usize>]) -> Result<Self> {
        let k = g.k();
        let mut seen = vec![false; k];
        let mut zero_based = Vec::with_capacity(blocks.len());
        for block in blocks {
            if block.is_empty() {
                return Err(Error::InvalidPartition("empty block".into()));
            }
            let mut b = Vec::with_capacity(block.len());
            for &i in block {
                if i == 0 || i > k {
                    return Err(Error::InvalidPartition(format!("index {i} outside 1..={k}")));
                }
                if seen[i - 1] {
                    return Err(Error::InvalidPartition(format!("index {i} appears twice")));
                }
                seen[i - 1] = true;
                b.push(i - 1);
            }
            b.sort_unstable();
            zero_based.push(b);
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPartition(format!("index {} is not covered", missing + 1)));
        }

        for b in &zero_based {
            let p = block_projector(k, b);
            let comm = (&p * g.rho0() - g.rho0() * &p).norm();
            if comm > COMMUTE_TOL {
                return Err(Error::InvalidPartition(format!(
                    "block {:?} does not commute with the restricted state (residual {comm:.3e})",
                    b.iter().map(|i| i + 1).collect::<Vec<_>>()
                )));
            }
        }

        let projectors: Vec<CMatrix> = zero_based.iter().map(|b| block_projector(k, b)).collect();
        let d0 = Superoperator::from_fn((k, k), (k, k), |z| Ok(projectors.iter().map(|p| p * z * p).sum()))?;
        let rank_l = zero_based.iter().map(|b| b.len() * b.len()).sum();
        let mut c = Self::assemble(g, d0, rank_l)?;
        c.blocks = zero_based;
        Ok(c)
    }

    /// Every eigenvector in its own block: `d₀` keeps the diagonal.
    pub fn diagonal(g: &GnsData) -> Result<Self> {
        let blocks: Vec<Vec<usize>> = (1..=g.k()).map(|i| vec![i]).collect();
        Self::new(g, &blocks)
    }

    /// One block: `d₀ = id`.
    pub fn full(g: &GnsData) -> Result<Self> {
        Self::new(g, &[(1..=g.k()).collect()])
    }

    /// Wraps an arbitrary map on `B(ℂ^k)` without checking that it is a
    /// conditional expectation; use [`CondExp::validate`] to find out.
    pub fn from_superoperator(g: &GnsData, d0: Superoperator) -> Result<Self> {
        let k = g.k();
        if d0.in_shape() != (k, k) || d0.out_shape() != (k, k) {
            return Err(Error::Dimension(format!("d0 must act on {k}x{k} matrices")));
        }
        let rank = d0.rank(RANK_TOL);
        Self::assemble(g, d0, rank)
    }

    fn assemble(g: &GnsData, d0: Superoperator, rank_l: usize) -> Result<Self> {
        let f0 = g.k0_basis();
        let n = g.n();
        let d = Superoperator::from_fn((n, n), (n, n), |x| Ok(&f0 * d0.apply(&(f0.adjoint() * x * &f0))? * f0.adjoint()))?;
        Ok(Self { n, k: g.k(), blocks: Vec::new(), d0, d, rank_l })
    }

    /// The partition in 1-based indices (empty when built from a superoperator).
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        self.blocks.iter().map(|b| b.iter().map(|i| i + 1).collect()).collect()
    }

    pub fn rank_l(&self) -> usize {
        self.rank_l
    }

    pub fn d0(&self) -> &Superoperator {
        &self.d0
    }

    pub fn d(&self) -> &Superoperator {
        &self.d
    }

    pub fn apply_d0(&self, z: &CMatrix) -> Result<CMatrix> {
        self.d0.apply(z)
    }

    pub fn apply_d(&self, x: &CMatrix) -> Result<CMatrix> {
        self.d.apply(x)
    }

    /// `𝔼 = id ⊗ d` on `B(h ⊗ k)`.
    pub fn apply_amp(&self, t: &CMatrix) -> Result<CMatrix> {
        blockwise(&self.d, self.n, t)
    }

    /// `𝔼^⊥ = id − 𝔼`.
    pub fn apply_amp_perp(&self, t: &CMatrix) -> Result<CMatrix> {
        Ok(t - self.apply_amp(t)?)
    }

    /// `𝔼₀ = id ⊗ d₀` on `B(h ⊗ ℂ^k)`.
    pub fn apply_d0_amp(&self, t: &CMatrix) -> Result<CMatrix> {
        blockwise(&self.d0, self.k, t)
    }

    pub fn apply_d0_amp_perp(&self, t: &CMatrix) -> Result<CMatrix> {
        Ok(t - self.apply_d0_amp(t)?)
    }

    /// Checks the conditional-expectation axioms and state preservation on
    /// seeded random inputs.
    pub fn validate(&self, g: &GnsData, seed: u64) -> Result<CondExpReport> {
        let mut rng = seeded(seed);
        let (n, k) = (self.n, self.k);
        let d0m = self.d0.matrix();
        let idempotency = (d0m * d0m - d0m).norm();

        let mut self_adjointness: f64 = 0.0;
        let mut bimodule: f64 = 0.0;
        let mut state_preservation: f64 = 0.0;
        let mut kernel_identities: f64 = 0.0;
        for _ in 0..20 {
            let z = random_matrix(&mut rng, k, k);
            let w = random_matrix(&mut rng, k, k);
            let lhs = g.state0_value(&(self.apply_d0(&z)?.adjoint() * &w));
            let rhs = g.state0_value(&(z.adjoint() * self.apply_d0(&w)?));
            self_adjointness = self_adjointness.max((lhs - rhs).norm());

            let x = random_matrix(&mut rng, n, n);
            let y = random_matrix(&mut rng, n, n);
            let dx = self.apply_d(&x)?;
            let dy = self.apply_d(&y)?;
            let left = self.apply_d(&(&dx * &y))? - &dx * &dy;
            let right = self.apply_d(&(&x * &dy))? - &dx * &dy;
            bimodule = bimodule.max(left.norm()).max(right.norm());

            state_preservation = state_preservation.max((g.state_value(&dx) - g.state_value(&x)).norm());

            let dim_h = 2;
            let t = random_matrix(&mut rng, dim_h * n, dim_h * n);
            let p0 = g.p0_amp(dim_h);
            let q0 = g.p0_perp_amp(dim_h);
            let et = self.apply_amp(&t)?;
            let residuals = [
                (&p0 * &et - &et).norm(),
                (self.apply_amp(&(&p0 * &t))? - &et).norm(),
                (self.apply_amp(&(&t * &p0))? - &et).norm(),
                (&et * &p0 - &et).norm(),
                (&q0 * &et).norm(),
                self.apply_amp(&(&q0 * &t))?.norm(),
                self.apply_amp(&(&t * &q0))?.norm(),
                (&et * &q0).norm(),
                (self.apply_amp(&et)? - &et).norm(),
                (g.slice_state(&et)? - g.slice_state(&t)?).norm(),
            ];
            kernel_identities = residuals.iter().copied().fold(kernel_identities, f64::max);
        }

        let choi = self.d0.choi()?;
        let choi_h = (&choi + choi.adjoint()) * crate::linalg::real(0.5);
        let herm_defect = (&choi - &choi_h).norm();
        let choi_min_eigenvalue = if herm_defect > CHOI_TOL {
            f64::NEG_INFINITY
        } else {
            choi_h.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
        };

        let unit = (self.apply_d0(&identity(k))? - identity(k)).norm();

        Ok(CondExpReport {
            idempotent: idempotency <= VALIDATION_TOL,
            self_adjoint: self_adjointness <= VALIDATION_TOL,
            bimodule: bimodule <= VALIDATION_TOL,
            state_preserving: state_preservation <= VALIDATION_TOL,
            kernel_identities: kernel_identities <= VALIDATION_TOL,
            completely_positive: choi_min_eigenvalue >= -CHOI_TOL,
            unital: unit <= VALIDATION_TOL,
            idempotency_residual: idempotency,
            self_adjointness_residual: self_adjointness,
            bimodule_residual: bimodule,
            state_residual: state_preservation,
            kernel_residual: kernel_identities,
            choi_min_eigenvalue,
        })
    }
}

/// Outcome of [`CondExp::validate`].
#[derive(Clone, Debug, Serialize)]
pub struct CondExpReport {
    pub idempotent: bool,
    pub self_adjoint: bool,
    pub bimodule: bool,
    pub state_preserving: bool,
    pub kernel_identities: bool,
    pub completely_positive: bool,
    pub unital: bool,
    pub idempotency_residual: f64,
    pub self_adjointness_residual: f64,
    pub bimodule_residual: f64,
    pub state_residual: f64,
    pub kernel_residual: f64,
    pub choi_min_eigenvalue: f64,
}

impl CondExpReport {
    pub fn passed(&self) -> bool {
        self.idempotent
            && self.self_adjoint
            && self.bimodule
            && self.state_preserving
            && self.kernel_identities
            && self.completely_positive
            && self.unital
    }
}

fn block_projector(k: usize, block: &[usize]) -> CMatrix {
    let mut p = CMatrix::zeros(k, k);
    for &i in block {
        p[(i, i)] = crate::linalg::ONE;
    }
    p
}

/// Applies `id_h ⊗ map` to an operator on `h ⊗ ℂ^m` one `m×m` block at a time.
fn blockwise(map: &Superoperator, m: usize, t: &CMatrix) -> Result<CMatrix> {
    let dim = crate::linalg::ensure_square(t)?;
    if dim == 0 || dim % m != 0 {
        return Err(Error::Dimension(format!("operator dimension {dim} is not a multiple of {m}")));
    }
    let dh = dim / m;
    let mut out = CMatrix::zeros(dim, dim);
    for r in 0..dh {
        for c in 0..dh {
            let block = t.view((r * m, c * m), (m, m)).into_owned();
            out.view_mut((r * m, c * m), (m, m)).copy_from(&map.apply(&block)?);
        }
    }
    Ok(out)
}

/// `id_h ⊗ d` as a map on `B(h ⊗ ℂ^m)`, tabulated.
pub fn ampliated_superoperator(map: &Superoperator, dim_h: usize) -> Result<Superoperator> {
    let (m, _) = map.in_shape();
    let dim = dim_h * m;
    Superoperator::from_fn((dim, dim), (dim, dim), |t| blockwise(map, m, t))
}
