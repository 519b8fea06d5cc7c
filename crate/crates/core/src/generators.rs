//! Walk generators, their block-dependent modification, the limit generator
//! `ψ` and noise counting.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::cond_exp::CondExp;
use crate::error::{Error, Result};
use crate::linalg::{ensure_square, identity, kron, real, slice, CMatrix, Superoperator};
use crate::random::{random_matrix, seeded};
use crate::state_gns::GnsData;

/// Relative threshold below which a noise coefficient block counts as zero.
pub const NOISE_REL_TOL: f64 = 1e-9;
const MULT_FORM_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorKind {
    /// `Φ(a) = (a ⊗ I) W` for a given matrix `W`.
    RawMatrix,
    /// `Φ(a) = (a ⊗ I) exp(−iτH)`.
    HamiltonianRight,
    /// `Φ(a) = exp(iτH) (a ⊗ I) exp(−iτH)`.
    HamiltonianConjugation,
    Explicit,
}

/// A walk generator `Φ : B(h) → B(h ⊗ k)`.
#[derive(Clone, Debug)]
pub struct WalkGenerator {
    dim_h: usize,
    n: usize,
    kind: GeneratorKind,
    phi: Superoperator,
    step: Option<CMatrix>,
}

impl WalkGenerator {
    /// `Φ(a) = (a ⊗ I_n) W`.
    pub fn right_multiplication(dim_h: usize, n: usize, w: CMatrix, kind: GeneratorKind) -> Result<Self> {
        if !matches!(kind, GeneratorKind::RawMatrix | GeneratorKind::HamiltonianRight) {
            return Err(Error::InvalidArgument(format!("{kind:?} is not a right-multiplication kind")));
        }
        let phi = right_multiplication_map(dim_h, &w)?;
        Ok(Self { dim_h, n, kind, phi, step: Some(w) })
    }

    /// `Φ(a) = U* (a ⊗ I_n) U`.
    pub fn conjugation(dim_h: usize, n: usize, u: CMatrix) -> Result<Self> {
        check_amplified(&u, dim_h * n)?;
        let id_n = identity(n);
        let phi = Superoperator::from_fn((dim_h, dim_h), (dim_h * n, dim_h * n), |a| {
            Ok(u.adjoint() * kron(a, &id_n) * &u)
        })?;
        Ok(Self { dim_h, n, kind: GeneratorKind::HamiltonianConjugation, phi, step: Some(u) })
    }

    pub fn explicit(phi: Superoperator) -> Result<Self> {
        let (dh, dh2) = phi.in_shape();
        let (m, m2) = phi.out_shape();
        if dh != dh2 || m != m2 || dh == 0 || m % dh != 0 {
            return Err(Error::Dimension(format!("{:?} → {:?} is not a map B(h) → B(h ⊗ k)", phi.in_shape(), phi.out_shape())));
        }
        Ok(Self { dim_h: dh, n: m / dh, kind: GeneratorKind::Explicit, phi, step: None })
    }

    pub fn dim_h(&self) -> usize {
        self.dim_h
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> GeneratorKind {
        self.kind
    }

    pub fn phi(&self) -> &Superoperator {
        &self.phi
    }

    /// The per-step matrix `W` or `U` for the matrix-based kinds.
    pub fn step_operator(&self) -> Option<&CMatrix> {
        self.step.as_ref()
    }

    /// `Φ′(a) = Φ(a) − a ⊗ I`.
    pub fn phi_prime(&self) -> Result<Superoperator> {
        self.phi.sub(&ampliation_map(self.dim_h, self.n))
    }

    /// `π̃ ∘ Φ`, a generator on `h ⊗ k̂`.
    pub fn hat(&self, g: &GnsData) -> Result<Superoperator> {
        if g.n() != self.n {
            return Err(Error::Dimension(format!("generator acts on ℂ^{}, state on ℂ^{}", self.n, g.n())));
        }
        let m = self.dim_h * g.khat_dim();
        Superoperator::from_fn((self.dim_h, self.dim_h), (m, m), |a| g.ampliate(&self.phi.apply(a)?))
    }
}

fn check_amplified(m: &CMatrix, dim: usize) -> Result<()> {
    if m.shape() != (dim, dim) {
        return Err(Error::Dimension(format!("expected a {dim}x{dim} operator, got {:?}", m.shape())));
    }
    Ok(())
}

fn dim_h_of(phi: &Superoperator) -> Result<(usize, usize)> {
    let (dh, _) = phi.in_shape();
    let (m, _) = phi.out_shape();
    if dh == 0 || m % dh != 0 {
        return Err(Error::Dimension(format!("{:?} → {:?} is not a map B(h) → B(h ⊗ k)", phi.in_shape(), phi.out_shape())));
    }
    Ok((dh, m / dh))
}

/// `a ↦ (a ⊗ I) W`.
pub fn right_multiplication_map(dim_h: usize, w: &CMatrix) -> Result<Superoperator> {
    let m = ensure_square(w)?;
    if dim_h == 0 || m % dim_h != 0 {
        return Err(Error::Dimension(format!("{m} is not a multiple of dim h = {dim_h}")));
    }
    let id = identity(m / dim_h);
    Superoperator::from_fn((dim_h, dim_h), (m, m), |a| Ok(kron(a, &id) * w))
}

/// `a ↦ a ⊗ I_n`.
pub fn ampliation_map(dim_h: usize, n: usize) -> Superoperator {
    let id = identity(n);
    Superoperator::from_fn((dim_h, dim_h), (dim_h * n, dim_h * n), |a| Ok(kron(a, &id)))
        .expect("shapes are consistent by construction")
}

fn check_tau(tau: f64) -> Result<()> {
    if tau.is_nan() || tau <= 0.0 {
        return Err(Error::NonPositiveStep(tau));
    }
    Ok(())
}

/// `f_{Φ,τ}` evaluated on one operator `Φ(a)`.
pub fn modify_image(phi_a: &CMatrix, a: &CMatrix, tau: f64, g: &GnsData, c: &CondExp) -> Result<CMatrix> {
    check_tau(tau)?;
    let dh = a.nrows();
    let p0 = g.p0_amp(dh);
    let q0 = g.p0_perp_amp(dh);
    let prime = phi_a - kron(a, &identity(g.n()));
    let s = tau.sqrt();
    let inner = c.apply_amp(&prime)? * real(1.0 / tau) + c.apply_amp_perp(&prime)? * real(1.0 / s);
    Ok(&p0 * inner * &p0 + (&p0 * phi_a * &q0 + &q0 * phi_a * &p0) * real(1.0 / s) + &q0 * prime * &q0)
}

/// The modification `f_{Φ,τ}` as a superoperator.
pub fn modify(phi: &Superoperator, tau: f64, g: &GnsData, c: &CondExp) -> Result<Superoperator> {
    check_tau(tau)?;
    let (dh, n) = dim_h_of(phi)?;
    if n != g.n() {
        return Err(Error::Dimension(format!("generator acts on ℂ^{n}, state on ℂ^{}", g.n())));
    }
    Superoperator::from_fn((dh, dh), phi.out_shape(), |a| modify_image(&phi.apply(a)?, a, tau, g, c))
}

/// The vacuum modification `(τ^{-1/2}Δ^⊥ + Δ)(Φ̂(a) − a ⊗ I)(τ^{-1/2}Δ^⊥ + Δ)`.
pub fn modify_vacuum(phi_hat: &Superoperator, tau: f64, g: &GnsData) -> Result<Superoperator> {
    check_tau(tau)?;
    let (dh, m) = dim_h_of(phi_hat)?;
    if m != g.khat_dim() {
        return Err(Error::Dimension(format!("generator acts on ℂ^{m}, expected the GNS space of dimension {}", g.khat_dim())));
    }
    let scale = g.delta_perp(dh) * real(tau.powf(-0.5)) + g.delta(dh);
    let id = identity(m);
    Superoperator::from_fn(phi_hat.in_shape(), phi_hat.out_shape(), |a| {
        Ok(&scale * (phi_hat.apply(a)? - kron(a, &id)) * &scale)
    })
}

/// Largest Frobenius residual of `(τ𝔼 + τ^{1/2}𝔼^⊥)(f_{Φ,τ}(a)) − Φ′(a) − (τ^{1/2} − 1)P̃₀^⊥Φ′(a)P̃₀^⊥`
/// over the matrix units `a` of `B(h)`.
pub fn check_cruc(phi: &Superoperator, tau: f64, g: &GnsData, c: &CondExp) -> Result<f64> {
    let modified = modify(phi, tau, g, c)?;
    let (dh, n) = dim_h_of(phi)?;
    let q0 = g.p0_perp_amp(dh);
    let s = tau.sqrt();
    let mut worst: f64 = 0.0;
    for i in 0..dh {
        for j in 0..dh {
            let a = crate::linalg::elementary(dh, dh, i, j);
            let fa = modified.apply(&a)?;
            let lhs = c.apply_amp(&fa)? * real(tau) + c.apply_amp_perp(&fa)? * real(s);
            let prime = phi.apply(&a)? - kron(&a, &identity(n));
            let rhs = &prime + &q0 * &prime * &q0 * real(s - 1.0);
            worst = worst.max((lhs - rhs).norm());
        }
    }
    Ok(worst)
}

/// The four-corner formula that turns an operator on `h ⊗ k` into one on
/// `h ⊗ k̂`; `ψ(a)` is its value at `Ψ(a)` and `G` its value at `F`.
pub fn limit_image(t: &CMatrix, g: &GnsData, c: &CondExp) -> Result<CMatrix> {
    let m = ensure_square(t)?;
    if m % g.n() != 0 {
        return Err(Error::Dimension(format!("operator dimension {m} is not a multiple of {}", g.n())));
    }
    let dh = m / g.n();
    let delta = g.delta(dh);
    let delta_perp = g.delta_perp(dh);
    let q0 = g.p0_perp_amp(dh);
    let full = g.ampliate(t)?;
    let off = g.ampliate(&c.apply_amp_perp(t)?)?;
    let corner = g.ampliate(&(&q0 * t * &q0))?;
    Ok(&delta_perp * full * &delta_perp
        + &delta_perp * &off * &delta
        + &delta * off * &delta_perp
        + &delta * corner * &delta)
}

/// The limit generator `ψ`, with `G` when `ψ(a) = (a ⊗ I)G`.
#[derive(Clone, Debug)]
pub struct LimitGenerator {
    psi: Superoperator,
    g_matrix: Option<CMatrix>,
}

impl LimitGenerator {
    pub fn psi(&self) -> &Superoperator {
        &self.psi
    }

    pub fn g_matrix(&self) -> Option<&CMatrix> {
        self.g_matrix.as_ref()
    }

    pub fn dim_h(&self) -> usize {
        self.psi.in_shape().0
    }

    pub fn apply(&self, a: &CMatrix) -> Result<CMatrix> {
        self.psi.apply(a)
    }

    /// Wraps a map `B(h) → B(h ⊗ k̂)` given directly.
    pub fn from_psi(psi: Superoperator) -> Result<Self> {
        dim_h_of(&psi)?;
        Ok(Self { psi, g_matrix: None })
    }

    /// Attaches a multiplication-form `G` with `ψ(a) = (a ⊗ I)G`.
    pub fn from_g(dim_h: usize, g_matrix: CMatrix) -> Result<Self> {
        let psi = right_multiplication_map(dim_h, &g_matrix)?;
        Ok(Self { psi, g_matrix: Some(g_matrix) })
    }
}

/// `ψ` built from a limit `Ψ : B(h) → B(h ⊗ k)`.
pub fn limit_generator(big_psi: &Superoperator, g: &GnsData, c: &CondExp) -> Result<LimitGenerator> {
    let (dh, n) = dim_h_of(big_psi)?;
    if n != g.n() {
        return Err(Error::Dimension(format!("Ψ acts into B(h ⊗ ℂ^{n}), state lives on ℂ^{}", g.n())));
    }
    let m = dh * g.khat_dim();
    let psi = Superoperator::from_fn((dh, dh), (m, m), |a| limit_image(&big_psi.apply(a)?, g, c))?;
    Ok(LimitGenerator { psi, g_matrix: None })
}

/// `ψ` for `Ψ(a) = (a ⊗ I)F`, emitting `G` and checking `ψ(a) = (a ⊗ I)G`
/// against the general formula.
pub fn limit_generator_multiplicative(f: &CMatrix, dim_h: usize, g: &GnsData, c: &CondExp) -> Result<LimitGenerator> {
    check_amplified(f, dim_h * g.n())?;
    let g_matrix = limit_image(f, g, c)?;
    let lg = LimitGenerator::from_g(dim_h, g_matrix)?;
    let general = limit_generator(&right_multiplication_map(dim_h, f)?, g, c)?;
    let residual = lg.psi.distance(&general.psi)?;
    let scale = general.psi.matrix().norm().max(1.0);
    if residual > MULT_FORM_TOL * scale {
        return Err(Error::IdentityViolated { what: "ψ(a) = (a ⊗ I)G".into(), residual });
    }
    Ok(lg)
}

/// `2(Nk − l) + (N − k)²k²`.
pub fn noise_bound(n: usize, k: usize, l: usize) -> Result<usize> {
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("need 1 ≤ k ≤ N, got k = {k}, N = {n}")));
    }
    if l == 0 || l > k * k {
        return Err(Error::InvalidArgument(format!("need 1 ≤ l ≤ k², got l = {l}, k = {k}")));
    }
    Ok(2 * (n * k - l) + (n - k) * (n - k) * k * k)
}

/// A direction of the noise count, in terms of the `μ` basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum NoiseDirection {
    Creation(usize),
    Annihilation(usize),
    Gauge(usize, usize),
}

/// The set of noise directions whose coefficient block of `ψ(a)` is nonzero
/// for at least one of `trials` seeded random `a`.
pub fn noise_directions(lg: &LimitGenerator, g: &GnsData, trials: usize, seed: u64) -> Result<BTreeSet<NoiseDirection>> {
    let dh = lg.dim_h();
    let omega = g.omega();
    let mu: Vec<_> = g.mu_basis().column_iter().map(|c| c.into_owned()).collect();
    let mut rng = seeded(seed);
    let mut found = BTreeSet::new();
    for _ in 0..trials.max(1) {
        let a = random_matrix(&mut rng, dh, dh);
        let image = lg.apply(&a)?;
        let thresh = NOISE_REL_TOL * image.norm();
        if image.norm() == 0.0 {
            continue;
        }
        for (i, m) in mu.iter().enumerate() {
            if slice(&image, m, omega)?.norm() > thresh {
                found.insert(NoiseDirection::Creation(i));
            }
            if slice(&image, omega, m)?.norm() > thresh {
                found.insert(NoiseDirection::Annihilation(i));
            }
            for (j, m2) in mu.iter().enumerate() {
                if slice(&image, m, m2)?.norm() > thresh {
                    found.insert(NoiseDirection::Gauge(i, j));
                }
            }
        }
    }
    Ok(found)
}

pub fn effective_noise_count(lg: &LimitGenerator, g: &GnsData, trials: usize, seed: u64) -> Result<usize> {
    Ok(noise_directions(lg, g, trials, seed)?.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{basis_vector, dyad, CVector};
    use crate::random::{random_vector, Rng64};
    use crate::state_gns::DEFAULT_SUPPORT_TOL;

    fn diag(vals: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&CVector::from_iterator(vals.len(), vals.iter().map(|&v| real(v))))
    }

    fn mixed() -> (GnsData, CondExp) {
        let g = GnsData::build(diag(&[0.7, 0.3, 0.0]), DEFAULT_SUPPORT_TOL).unwrap();
        let c = CondExp::diagonal(&g).unwrap();
        (g, c)
    }

    fn random_map(rng: &mut Rng64, dh: usize, m: usize) -> Superoperator {
        Superoperator::from_matrix((dh, dh), (m, m), random_matrix(rng, m * m, dh * dh)).unwrap()
    }

    #[test]
    fn trivial_generator_modifies_to_zero() {
        let (g, c) = mixed();
        let phi = ampliation_map(2, 3);
        for tau in [1.0, 0.3, 1e-3] {
            assert!(modify(&phi, tau, &g, &c).unwrap().matrix().norm() < 1e-14);
        }
        let hat = ampliation_map(2, 6);
        assert!(modify_vacuum(&hat, 0.1, &g).unwrap().matrix().norm() < 1e-14);
        assert_eq!(check_cruc(&phi, 0.3, &g, &c).unwrap(), 0.0);
    }

    #[test]
    fn non_positive_tau_is_rejected() {
        let (g, c) = mixed();
        let phi = ampliation_map(2, 3);
        assert_eq!(modify(&phi, 0.0, &g, &c).unwrap_err(), Error::NonPositiveStep(0.0));
        assert!(modify_vacuum(&ampliation_map(2, 6), -1.0, &g).is_err());
        assert!(check_cruc(&phi, f64::NAN, &g, &c).is_err());
    }

    #[test]
    fn faithful_state_modification() {
        let mut rng = seeded(40);
        let g = GnsData::build(diag(&[0.5, 0.3, 0.2]), DEFAULT_SUPPORT_TOL).unwrap();
        let c = CondExp::new(&g, &[vec![1, 2], vec![3]]).unwrap();
        let phi = random_map(&mut rng, 2, 6);
        let tau = 0.2;
        let f = modify(&phi, tau, &g, &c).unwrap();
        let prime = phi.sub(&ampliation_map(2, 3)).unwrap();
        let expected = Superoperator::from_fn((2, 2), (6, 6), |a| {
            let p = prime.apply(a)?;
            Ok(c.apply_amp(&p)? * real(1.0 / tau) + c.apply_amp_perp(&p)? * real(tau.powf(-0.5)))
        })
        .unwrap();
        assert!(f.distance(&expected).unwrap() < 1e-12);
    }

    #[test]
    fn pure_state_modification_matches_vacuum_form() {
        let mut rng = seeded(41);
        let mut v = random_vector(&mut rng, 3);
        v /= real(v.norm());
        let g = GnsData::build(dyad(&v, &v), DEFAULT_SUPPORT_TOL).unwrap();
        let c = CondExp::full(&g).unwrap();
        let phi = random_map(&mut rng, 2, 6);
        for tau in [1.0, 0.25, 0.01] {
            let lhs = modify(&phi, tau, &g, &c).unwrap();
            let rhs = modify_vacuum(&phi, tau, &g).unwrap();
            let scale = lhs.matrix().norm();
            assert!(lhs.distance(&rhs).unwrap() < 1e-12 * scale);
        }
    }

    #[test]
    fn vacuum_modification_at_unit_step_is_prime() {
        let mut rng = seeded(42);
        let (g, _) = mixed();
        let phi_hat = random_map(&mut rng, 2, 12);
        let expected = phi_hat.sub(&ampliation_map(2, 6)).unwrap();
        assert!(modify_vacuum(&phi_hat, 1.0, &g).unwrap().distance(&expected).unwrap() < 1e-13);
    }

    #[test]
    fn vacuum_corner_of_both_modifications_agree() {
        let mut rng = seeded(43);
        let (g, c) = mixed();
        let w = WalkGenerator::explicit(random_map(&mut rng, 2, 6)).unwrap();
        let hat = w.hat(&g).unwrap();
        for tau in [0.5, 0.05] {
            let vac = modify_vacuum(&hat, tau, &g).unwrap();
            let f = modify(w.phi(), tau, &g, &c).unwrap();
            for _ in 0..3 {
                let a = random_matrix(&mut rng, 2, 2);
                let lhs = slice(&vac.apply(&a).unwrap(), g.omega(), g.omega()).unwrap();
                let rhs = slice(&g.ampliate(&f.apply(&a).unwrap()).unwrap(), g.omega(), g.omega()).unwrap();
                assert!((&lhs - &rhs).norm() < 1e-10 * lhs.norm().max(1.0));
            }
        }
    }

    #[test]
    fn cruc_identity_holds() {
        let mut rng = seeded(44);
        let (g, c) = mixed();
        let phi = random_map(&mut rng, 2, 6);
        for (tau, tol) in [(1.0, 1e-12), (0.3, 1e-11), (0.01, 1e-11)] {
            let r = check_cruc(&phi, tau, &g, &c).unwrap();
            assert!(r <= tol, "tau {tau}: residual {r:e}");
        }
    }

    #[test]
    fn modification_is_linear_in_the_increment() {
        let mut rng = seeded(45);
        let (g, c) = mixed();
        let id = ampliation_map(2, 3);
        let p1 = random_map(&mut rng, 2, 6);
        let p2 = random_map(&mut rng, 2, 6);
        // Φ₁′ + Φ₂′ is the increment of Φ₁ + Φ₂ − id
        let combined = p1.add(&p2).unwrap().sub(&id).unwrap();
        let lhs = modify(&combined, 0.3, &g, &c).unwrap();
        let rhs = modify(&p1, 0.3, &g, &c).unwrap().add(&modify(&p2, 0.3, &g, &c).unwrap()).unwrap();
        assert!(lhs.distance(&rhs).unwrap() < 1e-12 * rhs.matrix().norm());
        let scaled = id.add(&p1.sub(&id).unwrap().scale(real(2.5))).unwrap();
        let lhs = modify(&scaled, 0.3, &g, &c).unwrap();
        let rhs = modify(&p1, 0.3, &g, &c).unwrap().scale(real(2.5));
        assert!(lhs.distance(&rhs).unwrap() < 1e-12 * rhs.matrix().norm());
    }

    #[test]
    fn zero_psi_gives_zero_limit() {
        let (g, c) = mixed();
        let lg = limit_generator(&Superoperator::zero((2, 2), (6, 6)), &g, &c).unwrap();
        assert_eq!(lg.psi().matrix().norm(), 0.0);
        assert_eq!(effective_noise_count(&lg, &g, 3, 1).unwrap(), 0);
    }

    /// `[X]` for `X ∈ ker ϱ` and the other vectors that appear in the slice identities.
    fn kernel_element(rng: &mut Rng64, g: &GnsData) -> CMatrix {
        let x = random_matrix(rng, g.n(), g.n());
        let s = g.state_value(&x);
        x - identity(g.n()) * s
    }

    #[test]
    fn slice_identities_of_limit_generator() {
        let mut rng = seeded(46);
        let g = GnsData::build(diag(&[0.6, 0.4, 0.0]), DEFAULT_SUPPORT_TOL).unwrap();
        for c in [CondExp::diagonal(&g).unwrap(), CondExp::full(&g).unwrap()] {
            let big_psi = random_map(&mut rng, 2, 6);
            let lg = limit_generator(&big_psi, &g, &c).unwrap();
            let q0 = identity(3) - g.p0();
            for _ in 0..5 {
                let a = random_matrix(&mut rng, 2, 2);
                let psi_a = lg.apply(&a).unwrap();
                let big = g.ampliate(&big_psi.apply(&a).unwrap()).unwrap();
                let x = kernel_element(&mut rng, &g);
                let y = kernel_element(&mut rng, &g);
                let dperp = |z: &CMatrix| z - c.apply_d(z).unwrap();
                let br = |z: &CMatrix| g.bracket(z).unwrap();
                let om = g.omega();
                let checks = [
                    (slice(&psi_a, om, om).unwrap(), g.slice_state(&big_psi.apply(&a).unwrap()).unwrap()),
                    (slice(&psi_a, om, &br(&y)).unwrap(), slice(&big, om, &br(&dperp(&y))).unwrap()),
                    (slice(&psi_a, &br(&x), om).unwrap(), slice(&big, &br(&dperp(&x)), om).unwrap()),
                    (slice(&psi_a, &br(&x), &br(&y)).unwrap(), slice(&big, &br(&(&q0 * &x)), &br(&(&q0 * &y))).unwrap()),
                ];
                for (lhs, rhs) in checks {
                    assert!((&lhs - &rhs).norm() < 1e-11, "{}", (lhs - rhs).norm());
                }
            }
        }
    }

    #[test]
    fn pure_state_limit_is_ampliated_psi() {
        let mut rng = seeded(47);
        let g = GnsData::build(dyad(&basis_vector(3, 1), &basis_vector(3, 1)), DEFAULT_SUPPORT_TOL).unwrap();
        let c = CondExp::full(&g).unwrap();
        let big_psi = random_map(&mut rng, 2, 6);
        let lg = limit_generator(&big_psi, &g, &c).unwrap();
        assert!(lg.psi().distance(&big_psi).unwrap() < 1e-12);
    }

    #[test]
    fn multiplicative_form_emits_g() {
        let mut rng = seeded(48);
        let (g, c) = mixed();
        let f = random_matrix(&mut rng, 6, 6);
        let lg = limit_generator_multiplicative(&f, 2, &g, &c).unwrap();
        let gm = lg.g_matrix().unwrap();
        let a = random_matrix(&mut rng, 2, 2);
        let expected = kron(&a, &identity(6)) * gm;
        assert!((lg.apply(&a).unwrap() - expected).norm() < 1e-12);
        assert!(limit_generator_multiplicative(&f, 3, &g, &c).is_err());
    }

    #[test]
    fn noise_bound_values() {
        assert_eq!(noise_bound(3, 2, 2).unwrap(), 12);
        for n in 1..=6 {
            assert_eq!(noise_bound(n, 1, 1).unwrap(), n * n - 1);
            for l in 1..=n * n {
                assert_eq!(noise_bound(n, n, l).unwrap(), 2 * (n * n - l));
            }
        }
        assert!(noise_bound(3, 0, 1).is_err());
        assert!(noise_bound(3, 4, 1).is_err());
        assert!(noise_bound(3, 2, 5).is_err());
        assert!(noise_bound(3, 2, 0).is_err());
    }

    #[test]
    fn thermalisation_dichotomy() {
        for n in 1..=6 {
            for k in 1..=n {
                for l in 1..=k * k {
                    let full = noise_bound(n, k, l).unwrap() == n * n * k * k - 1;
                    assert_eq!(full, k == 1, "N={n} k={k} l={l}");
                }
            }
        }
    }

    #[test]
    fn generic_faithful_limit_counts_up_to_bound() {
        let mut rng = seeded(49);
        let g = GnsData::build(diag(&[0.5, 0.3, 0.2]), DEFAULT_SUPPORT_TOL).unwrap();
        let c = CondExp::diagonal(&g).unwrap();
        let f = random_matrix(&mut rng, 6, 6);
        let lg = limit_generator_multiplicative(&f, 2, &g, &c).unwrap();
        let count = effective_noise_count(&lg, &g, 4, 9).unwrap();
        assert!(count <= noise_bound(3, 3, 3).unwrap());
        assert_eq!(count, 2 * (9 - 3));
    }
}
