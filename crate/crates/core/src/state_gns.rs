//! Normal states on `B(k)` and their concrete GNS representation.
//!
//! The enlarged space is `k̂ = k ⊗ conj(k₀)` where `k₀` is the support of the
//! density matrix. `conj(k₀)` is coordinatised by the support eigenbasis
//! `e₁, …, e_k` of `ρ`, so the coordinate `(p, j)` of `u ⊗ conj(v)` is
//! `u_p · conj(⟨e_j, v⟩)` and index `(p, j)` sits at position `p·k + j`.
//! With this choice `π(X) = X ⊗ I_k` and `Ω = Σ_j √λ_j e_j ⊗ conj(e_j)`.

use crate::error::{Error, Result};
use crate::linalg::{
    ensure_square, gram_schmidt, identity, kron, real, slice, CMatrix, CVector, Hermitian, SubspaceSplit, C64,
    HERMITIAN_TOL, ONE, ZERO,
};

pub const DEFAULT_SUPPORT_TOL: f64 = 1e-10;

const TRACE_TOL: f64 = 1e-12;
const NEGATIVITY_TOL: f64 = 1e-12;
/// Eigenvalues closer than this are treated as one degenerate cluster.
const CLUSTER_TOL: f64 = 1e-9;

/// A particle-state density matrix with its canonically ordered spectral data.
#[derive(Clone, Debug)]
pub struct DensityState {
    rho: CMatrix,
    /// All eigenvalues, support first (descending), kernel last.
    eigenvalues: Vec<f64>,
    /// Unitary whose columns are the matching eigenvectors.
    eigenvectors: CMatrix,
    support_rank: usize,
    support_tol: f64,
}

impl DensityState {
    pub fn new(rho: CMatrix, support_tol: f64) -> Result<Self> {
        if support_tol.is_nan() || support_tol <= 0.0 {
            return Err(Error::InvalidArgument(format!("support_tol must be positive, got {support_tol}")));
        }
        let n = ensure_square(&rho)?;
        if n == 0 {
            return Err(Error::InvalidState("empty density matrix".into()));
        }
        let herm = Hermitian::new(rho.clone()).map_err(|e| match e {
            Error::NotHermitian(r) => Error::InvalidState(format!("not Hermitian (residual {r:.3e})")),
            other => other,
        })?;
        let trace = rho.trace();
        if (trace - ONE).norm() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace is {trace}, expected 1")));
        }
        let min = herm.eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
        if min < -NEGATIVITY_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }

        let (eigenvalues, eigenvectors, support_rank) = canonical_eigenbasis(&rho, &herm, support_tol);
        Ok(Self { rho, eigenvalues, eigenvectors, support_rank, support_tol })
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn rho(&self) -> &CMatrix {
        &self.rho
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    pub fn support_rank(&self) -> usize {
        self.support_rank
    }

    pub fn support_tol(&self) -> f64 {
        self.support_tol
    }

    pub fn support_eigenvalues(&self) -> &[f64] {
        &self.eigenvalues[..self.support_rank]
    }

    /// `tr(ρ X)`.
    pub fn expectation(&self, x: &CMatrix) -> C64 {
        (&self.rho * x).trace()
    }
}

/// Sorts the spectrum (support descending, then kernel) and fixes a basis of
/// each degenerate eigenspace by projecting the standard basis vectors in
/// order and orthonormalising. The result does not depend on the eigensolver's
/// choice of basis or phases.
fn canonical_eigenbasis(rho: &CMatrix, herm: &Hermitian, support_tol: f64) -> (Vec<f64>, CMatrix, usize) {
    let n = rho.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    let vals = herm.eigenvalues();
    order.sort_by(|&a, &b| vals[b].partial_cmp(&vals[a]).unwrap_or(std::cmp::Ordering::Equal));

    // Clusters of consecutive (descending) indices.
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &idx in &order {
        let in_support = vals[idx] > support_tol;
        match clusters.last_mut() {
            Some(last) => {
                let prev = vals[*last.last().unwrap()];
                let prev_support = prev > support_tol;
                let same = if in_support && prev_support {
                    (prev - vals[idx]).abs() <= CLUSTER_TOL
                } else {
                    !in_support && !prev_support
                };
                if same {
                    last.push(idx);
                } else {
                    clusters.push(vec![idx]);
                }
            }
            None => clusters.push(vec![idx]),
        }
    }

    let mut eigenvalues = Vec::with_capacity(n);
    let mut columns: Vec<CVector> = Vec::with_capacity(n);
    let mut support_rank = 0;
    for cluster in clusters {
        let v = CMatrix::from_columns(&cluster.iter().map(|&i| herm.eigenvectors().column(i)).collect::<Vec<_>>());
        let q = &v * v.adjoint();
        let candidates = (0..n).map(|i| q.column(i).into_owned());
        let mut found = gram_schmidt(&columns, candidates, 1e-8);
        found.truncate(cluster.len());
        for e in found {
            let lam = (e.adjoint() * rho * &e)[(0, 0)].re;
            if vals[cluster[0]] > support_tol {
                support_rank += 1;
            }
            eigenvalues.push(lam);
            columns.push(e);
        }
    }
    let eigenvectors = CMatrix::from_columns(&columns);
    (eigenvalues, eigenvectors, support_rank)
}

/// The concrete GNS triple of a normal state.
#[derive(Clone, Debug)]
pub struct GnsData {
    state: DensityState,
    split: SubspaceSplit,
    p0: CMatrix,
    rho0: CMatrix,
    omega: CVector,
    mu_basis: CMatrix,
}

impl GnsData {
    pub fn build(rho: CMatrix, support_tol: f64) -> Result<Self> {
        let state = DensityState::new(rho, support_tol)?;
        Self::from_state(state)
    }

    pub fn from_state(state: DensityState) -> Result<Self> {
        let n = state.dim();
        let k = state.support_rank();
        if k == 0 {
            return Err(Error::InvalidState("no eigenvalue exceeds support_tol".into()));
        }
        let split = SubspaceSplit::new(state.eigenvectors().clone(), k)?;
        let f0 = split.front();
        let p0 = &f0 * f0.adjoint();
        let rho0 = f0.adjoint() * state.rho() * &f0;

        let mut omega = CVector::zeros(n * k);
        for (j, &lam) in state.support_eigenvalues().iter().enumerate() {
            let s = lam.max(0.0).sqrt();
            for p in 0..n {
                omega[p * k + j] += f0[(p, j)] * s;
            }
        }
        let norm = omega.norm();
        omega /= real(norm);

        let candidates = (0..n * k).map(|idx| {
            let mut v = CVector::zeros(n * k);
            v[idx] = ONE;
            v
        });
        let mu = gram_schmidt(std::slice::from_ref(&omega), candidates, 1e-10);
        let mu_basis = if mu.is_empty() { CMatrix::zeros(n * k, 0) } else { CMatrix::from_columns(&mu) };

        Ok(Self { state, split, p0, rho0, omega, mu_basis })
    }

    pub fn state(&self) -> &DensityState {
        &self.state
    }

    /// `dim k = N`.
    pub fn n(&self) -> usize {
        self.state.dim()
    }

    /// `dim k₀`.
    pub fn k(&self) -> usize {
        self.state.support_rank()
    }

    /// `dim k̂ = N·k`.
    pub fn khat_dim(&self) -> usize {
        self.n() * self.k()
    }

    /// `k = k₀ ⊕ k₀^⊥` in the canonical eigenbasis.
    pub fn split(&self) -> &SubspaceSplit {
        &self.split
    }

    pub fn support_eigenvalues(&self) -> &[f64] {
        self.state.support_eigenvalues()
    }

    /// Columns spanning `k₀` (the support eigenvectors).
    pub fn k0_basis(&self) -> CMatrix {
        self.split.front()
    }

    pub fn p0(&self) -> &CMatrix {
        &self.p0
    }

    /// Faithful restriction `F₀* ρ F₀`, diagonal in the canonical basis.
    pub fn rho0(&self) -> &CMatrix {
        &self.rho0
    }

    pub fn omega(&self) -> &CVector {
        &self.omega
    }

    /// Orthonormal basis of `μ = (ℂΩ)^⊥` as columns.
    pub fn mu_basis(&self) -> &CMatrix {
        &self.mu_basis
    }

    /// `Ω + x`.
    pub fn hat(&self, x: &CVector) -> CVector {
        &self.omega + x
    }

    /// The vector `u ⊗ conj(v)` of `k̂` for `u ∈ k` and `v ∈ k₀` (given in `k` coordinates).
    pub fn tensor_conj(&self, u: &CVector, v: &CVector) -> CVector {
        let f0 = self.k0_basis();
        let coords = (f0.adjoint() * v).map(|z| z.conj());
        u.kronecker(&coords)
    }

    /// `ϱ(X) = ⟨Ω, π(X) Ω⟩ = Σ_j λ_j ⟨e_j, X e_j⟩`.
    pub fn state_value(&self, x: &CMatrix) -> C64 {
        let f0 = self.k0_basis();
        let mut acc = ZERO;
        for (j, &lam) in self.support_eigenvalues().iter().enumerate() {
            let e = f0.column(j);
            acc += (e.adjoint() * x * e)[(0, 0)] * lam;
        }
        acc
    }

    /// `ϱ₀(Z) = Σ_j λ_j Z_jj` for `Z` in eigen-coordinates of `k₀`.
    pub fn state0_value(&self, z: &CMatrix) -> C64 {
        self.support_eigenvalues().iter().enumerate().map(|(j, &lam)| z[(j, j)] * lam).sum()
    }

    fn check_x(&self, x: &CMatrix) -> Result<()> {
        if x.shape() != (self.n(), self.n()) {
            return Err(Error::Dimension(format!("expected a {0}x{0} operator on k, got {1:?}", self.n(), x.shape())));
        }
        Ok(())
    }

    fn dim_h_of(&self, t: &CMatrix, base: usize) -> Result<usize> {
        let m = ensure_square(t)?;
        if m == 0 || m % base != 0 {
            return Err(Error::Dimension(format!("operator dimension {m} is not a multiple of {base}")));
        }
        Ok(m / base)
    }

    /// `π(X) = X ⊗ I`.
    pub fn pi(&self, x: &CMatrix) -> Result<CMatrix> {
        self.check_x(x)?;
        Ok(kron(x, &identity(self.k())))
    }

    /// `[X] = π(X) Ω`.
    pub fn bracket(&self, x: &CMatrix) -> Result<CVector> {
        Ok(self.pi(x)? * &self.omega)
    }

    /// `π̃(T) = T ⊗ I` on `h ⊗ k̂`.
    pub fn ampliate(&self, t: &CMatrix) -> Result<CMatrix> {
        self.dim_h_of(t, self.n())?;
        Ok(kron(t, &identity(self.k())))
    }

    /// Slice map `𝔼_ϱ = id ⊗ ϱ : B(h ⊗ k) → B(h)`.
    pub fn slice_state(&self, t: &CMatrix) -> Result<CMatrix> {
        let dh = self.dim_h_of(t, self.n())?;
        let f0 = self.k0_basis();
        let mut out = CMatrix::zeros(dh, dh);
        for (j, &lam) in self.support_eigenvalues().iter().enumerate() {
            let e = f0.column(j).into_owned();
            out += slice(t, &e, &e)? * real(lam);
        }
        Ok(out)
    }

    /// `𝔼_ϱ₀ = id ⊗ ϱ₀ : B(h ⊗ ℂ^k) → B(h)` in eigen-coordinates.
    pub fn slice_state0(&self, t: &CMatrix) -> Result<CMatrix> {
        let k = self.k();
        let dh = self.dim_h_of(t, k)?;
        let mut out = CMatrix::zeros(dh, dh);
        for (j, &lam) in self.support_eigenvalues().iter().enumerate() {
            let e = crate::linalg::basis_vector(k, j);
            out += slice(t, &e, &e)? * real(lam);
        }
        Ok(out)
    }

    /// `Δ = id_h ⊗ (I − |Ω⟩⟨Ω|)`, the projection onto `h ⊗ μ`.
    pub fn delta(&self, dim_h: usize) -> CMatrix {
        let m = identity(self.khat_dim()) - &self.omega * self.omega.adjoint();
        kron(&identity(dim_h), &m)
    }

    pub fn delta_perp(&self, dim_h: usize) -> CMatrix {
        kron(&identity(dim_h), &(&self.omega * self.omega.adjoint()))
    }

    /// `P̃₀ = id_h ⊗ P₀`.
    pub fn p0_amp(&self, dim_h: usize) -> CMatrix {
        kron(&identity(dim_h), &self.p0)
    }

    pub fn p0_perp_amp(&self, dim_h: usize) -> CMatrix {
        kron(&identity(dim_h), &(identity(self.n()) - &self.p0))
    }
}

/// Hermiticity check used for density matrices assembled by callers.
pub fn is_hermitian(m: &CMatrix) -> bool {
    crate::linalg::hermitian_residual(m) <= HERMITIAN_TOL * m.norm().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{basis_vector, dyad, elementary};
    use crate::random::{random_matrix, random_vector, seeded, Rng64};

    fn diag(vals: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&CVector::from_iterator(vals.len(), vals.iter().map(|&v| real(v))))
    }

    fn example_gns() -> GnsData {
        GnsData::build(diag(&[0.7, 0.3, 0.0]), DEFAULT_SUPPORT_TOL).unwrap()
    }

    fn random_density(rng: &mut Rng64, n: usize, rank: usize) -> CMatrix {
        let a = random_matrix(rng, n, rank);
        let rho = &a * a.adjoint();
        let tr = rho.trace();
        let rho = rho / tr;
        (&rho + rho.adjoint()) * real(0.5)
    }

    #[test]
    fn example_state_omega_coordinates() {
        let g = example_gns();
        assert_eq!(g.k(), 2);
        assert_eq!(g.khat_dim(), 6);
        let e = |i| basis_vector(3, i);
        let expected =
            g.tensor_conj(&e(0), &e(0)) * real(0.7f64.sqrt()) + g.tensor_conj(&e(1), &e(1)) * real(0.3f64.sqrt());
        assert!((g.omega() - expected).norm() < 1e-14);
        // literally √λ_j on the diagonal pairs
        assert!((g.omega()[0] - real(0.7f64.sqrt())).norm() < 1e-14);
        assert!((g.omega()[3] - real(0.3f64.sqrt())).norm() < 1e-14);
    }

    #[test]
    fn pure_state_degenerates_to_vector_state() {
        let mut rng = seeded(20);
        let mut v = random_vector(&mut rng, 3);
        v /= real(v.norm());
        let g = GnsData::build(dyad(&v, &v), DEFAULT_SUPPORT_TOL).unwrap();
        assert_eq!(g.k(), 1);
        assert_eq!(g.khat_dim(), 3);
        assert!((g.omega() - g.tensor_conj(&v, &v)).norm() < 1e-12);
    }

    #[test]
    fn maximally_mixed_state() {
        let n = 3;
        let g = GnsData::build(identity(n) / real(n as f64), DEFAULT_SUPPORT_TOL).unwrap();
        assert_eq!(g.k(), n);
        // degenerate spectrum resolves to the standard basis
        assert!((g.k0_basis() - identity(n)).norm() < 1e-12);
        let mut expected = CVector::zeros(n * n);
        for j in 0..n {
            expected += g.tensor_conj(&basis_vector(n, j), &basis_vector(n, j));
        }
        expected /= real((n as f64).sqrt());
        assert!((g.omega() - expected).norm() < 1e-12);
    }

    #[test]
    fn build_rejects_invalid_input() {
        assert!(matches!(GnsData::build(diag(&[1.2, -0.2]), 1e-10), Err(Error::InvalidState(_))));
        assert!(matches!(GnsData::build(diag(&[0.5, 0.4]), 1e-10), Err(Error::InvalidState(_))));
        assert!(GnsData::build(diag(&[0.5, 0.5]), 0.0).is_err());
        let mut m = diag(&[0.5, 0.5]);
        m[(0, 1)] = ONE;
        assert!(matches!(GnsData::build(m, 1e-10), Err(Error::InvalidState(_))));
        assert!(GnsData::build(CMatrix::zeros(2, 3), 1e-10).is_err());
    }

    #[test]
    fn bracket_examples() {
        let g = example_gns();
        assert!((g.bracket(&identity(3)).unwrap() - g.omega()).norm() < 1e-14);
        let lam = [0.7f64, 0.3];
        for i in 0..3 {
            for j in 0..2 {
                let f = elementary(3, 3, i, j) * real(lam[j].powf(-0.5));
                let expected = g.tensor_conj(&basis_vector(3, i), &basis_vector(3, j));
                assert!((g.bracket(&f).unwrap() - expected).norm() < 1e-14);
            }
        }
        assert!(g.bracket(&identity(2)).is_err());
    }

    #[test]
    fn bracket_inner_products_reproduce_state() {
        let mut rng = seeded(21);
        let g = GnsData::build(random_density(&mut rng, 3, 2), DEFAULT_SUPPORT_TOL).unwrap();
        for _ in 0..10 {
            let x = random_matrix(&mut rng, 3, 3);
            let y = random_matrix(&mut rng, 3, 3);
            let lhs = g.bracket(&x).unwrap().dotc(&g.bracket(&y).unwrap());
            let rhs = g.state().expectation(&(x.adjoint() * &y));
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn state_reproduction_and_support_identity() {
        let mut rng = seeded(22);
        for rank in 1..=3 {
            let g = GnsData::build(random_density(&mut rng, 3, rank), DEFAULT_SUPPORT_TOL).unwrap();
            assert_eq!(g.k(), rank);
            for _ in 0..100 {
                let x = random_matrix(&mut rng, 3, 3);
                let via_omega = g.omega().dotc(&(g.pi(&x).unwrap() * g.omega()));
                let direct = g.state().expectation(&x);
                assert!((via_omega - direct).norm() < 1e-12);
                assert!((g.state_value(&(&x * g.p0())) - direct).norm() < 1e-12);
                assert!((g.state_value(&(g.p0() * &x)) - direct).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn omega_is_cyclic() {
        let mut rng = seeded(23);
        for rank in 1..=3 {
            let g = GnsData::build(random_density(&mut rng, 3, rank), DEFAULT_SUPPORT_TOL).unwrap();
            let vecs: Vec<CVector> = (0..3)
                .flat_map(|u| (0..3).map(move |v| (u, v)))
                .map(|(u, v)| g.bracket(&elementary(3, 3, u, v)).unwrap())
                .collect();
            let m = CMatrix::from_columns(&vecs);
            let gram = m.adjoint() * &m;
            let sv = gram.svd(false, false).singular_values;
            let rank_found = sv.iter().filter(|&&s| s > 1e-10).count();
            assert_eq!(rank_found, g.khat_dim());
        }
    }

    #[test]
    fn rho0_is_faithful_and_mu_completes_omega() {
        let mut rng = seeded(24);
        let g = GnsData::build(random_density(&mut rng, 4, 2), DEFAULT_SUPPORT_TOL).unwrap();
        let h = Hermitian::new(g.rho0().clone()).unwrap();
        let min = h.eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
        assert!(min > g.state().support_tol() / 2.0);
        assert!((g.rho0().trace() - ONE).norm() < 1e-12);
        assert!((g.p0() * g.p0() - g.p0()).norm() < 1e-12);
        assert!((g.p0().adjoint() - g.p0()).norm() < 1e-12);

        let mut cols = vec![g.omega().clone()];
        cols.extend(g.mu_basis().column_iter().map(|c| c.into_owned()));
        let all = CMatrix::from_columns(&cols);
        assert_eq!(all.ncols(), g.khat_dim());
        assert!((all.adjoint() * &all - identity(g.khat_dim())).norm() < 1e-12);
    }

    #[test]
    fn bracket_lies_in_mu_exactly_on_state_kernel() {
        let mut rng = seeded(25);
        let g = GnsData::build(random_density(&mut rng, 3, 2), DEFAULT_SUPPORT_TOL).unwrap();
        for _ in 0..20 {
            let x = random_matrix(&mut rng, 3, 3);
            let s = g.state_value(&x);
            let centred = &x - identity(3) * s;
            assert!(g.omega().dotc(&g.bracket(&centred).unwrap()).norm() <= 1e-12);
            assert!(g.state_value(&centred).norm() <= 1e-12);
            // generic X is not in the kernel, and its bracket has an Ω component
            assert!(s.norm() > 1e-6);
            assert!(g.omega().dotc(&g.bracket(&x).unwrap()).norm() > 1e-6);
        }
        // P₀^⊥ annihilates the bracket
        let q = identity(3) - g.p0();
        assert!(g.bracket(&q).unwrap().norm() < 1e-12);
    }

    #[test]
    fn ampliation_is_unital_homomorphism() {
        let mut rng = seeded(26);
        let g = GnsData::build(random_density(&mut rng, 3, 2), DEFAULT_SUPPORT_TOL).unwrap();
        assert_eq!(g.ampliate(&identity(6)).unwrap(), identity(12));
        let s = random_matrix(&mut rng, 6, 6);
        let t = random_matrix(&mut rng, 6, 6);
        let lhs = g.ampliate(&(&s * &t)).unwrap();
        let rhs = g.ampliate(&s).unwrap() * g.ampliate(&t).unwrap();
        assert!((lhs - rhs).norm() < 1e-12);
        assert!((g.ampliate(&s.adjoint()).unwrap() - g.ampliate(&s).unwrap().adjoint()).norm() < 1e-14);
        assert!(g.ampliate(&random_matrix(&mut rng, 5, 5)).is_err());

        let a = random_matrix(&mut rng, 2, 2);
        let x = random_matrix(&mut rng, 3, 3);
        let sl = slice(&g.ampliate(&kron(&a, &x)).unwrap(), g.omega(), g.omega()).unwrap();
        assert!((sl - &a * g.state_value(&x)).norm() < 1e-12);
    }

    #[test]
    fn slice_state_identities() {
        let mut rng = seeded(27);
        let g = GnsData::build(random_density(&mut rng, 3, 2), DEFAULT_SUPPORT_TOL).unwrap();
        let a = random_matrix(&mut rng, 2, 2);
        let x = random_matrix(&mut rng, 3, 3);
        let prod = g.slice_state(&kron(&a, &x)).unwrap();
        assert!((prod - &a * g.state().expectation(&x)).norm() < 1e-12);

        let p0 = g.p0_amp(2);
        for _ in 0..10 {
            let t = random_matrix(&mut rng, 6, 6);
            let base = g.slice_state(&t).unwrap();
            assert!((g.slice_state(&(&p0 * &t)).unwrap() - &base).norm() < 1e-12);
            assert!((g.slice_state(&(&t * &p0)).unwrap() - &base).norm() < 1e-12);

            let x = random_matrix(&mut rng, 3, 3);
            let y = random_matrix(&mut rng, 3, 3);
            let ix = kron(&identity(2), &x);
            let iy = kron(&identity(2), &y);
            let lhs = slice(&g.ampliate(&t).unwrap(), &g.bracket(&x).unwrap(), &g.bracket(&y).unwrap()).unwrap();
            let rhs = g.slice_state(&(ix.adjoint() * &t * iy)).unwrap();
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }
}
