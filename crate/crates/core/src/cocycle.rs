//! The limit dynamics: matrix elements of the cocycle `j^ψ` and of the
//! driving process `X_t`, Hudson–Parthasarathy certification, the generator
//! `F` of a scaled Hamiltonian, Evans–Hudson generators and the Lindblad
//! generator of the vacuum expectation semigroup.
//!
//! Block matrices are written in the canonical eigen-coordinates of
//! `k = k₀ ⊕ k₀^⊥`; [`crate::linalg::SubspaceSplit::assemble`] moves them back to `h ⊗ k`.

use rayon::prelude::*;
use serde::Serialize;

use crate::cond_exp::CondExp;
use crate::error::{Error, Result};
use crate::generators::{limit_generator, limit_image, modify, right_multiplication_map, LimitGenerator, WalkGenerator};
use crate::linalg::{
    decap_exp, ensure_square, hermitian_residual, identity, kron, real, slice, CMatrix, CVector, Hermitian,
    Superoperator, C64, I,
};
use crate::random::{random_hermitian, random_matrix, Rng64};
use crate::state_gns::GnsData;
use crate::walk_sim::StepFunction;

/// Frobenius tolerance for the isometry and co-isometry identities of `G`.
pub const HP_TOL: f64 = 1e-10;
/// Structural tolerance for Hamiltonian blocks.
pub const SPEC_TOL: f64 = 1e-12;
/// Relative tolerance for the Evans–Hudson identity for `ψ`.
pub const EH_TOL: f64 = 1e-11;
pub const LINDBLAD_TOL: f64 = 1e-10;

/// The τ^{1/2}-scaled perturbation blocks: `R₀⁰(τ) = τ^{1/2} r00`,
/// `R₀^×(τ) = τ^{1/2} rx0`, `R_×⁰ = R₀^×*` and `R_×^×(τ) = τ^{1/2} rxx`.
#[derive(Clone, Debug)]
pub struct Perturbation {
    pub r00: CMatrix,
    pub rx0: CMatrix,
    pub rxx: CMatrix,
}

/// The data of a total Hamiltonian `H_t(τ)` on `h ⊗ k`.
#[derive(Clone, Debug)]
pub struct HamiltonianSpec {
    pub dim_h: usize,
    pub h_d: CMatrix,
    pub h_o: CMatrix,
    /// `h ⊗ k₀ → h ⊗ k₀^⊥`.
    pub l: CMatrix,
    pub h_times: CMatrix,
    pub r: Option<Perturbation>,
}

fn check_shape(name: &str, m: &CMatrix, want: (usize, usize)) -> Result<()> {
    if m.shape() != want {
        return Err(Error::Dimension(format!("{name} has shape {:?}, expected {want:?}", m.shape())));
    }
    Ok(())
}

fn check_herm(name: &str, m: &CMatrix) -> Result<()> {
    let r = hermitian_residual(m);
    if r > SPEC_TOL * m.norm().max(1.0) {
        return Err(Error::InvalidArgument(format!("{name} is not Hermitian (residual {r:.3e})")));
    }
    Ok(())
}

impl HamiltonianSpec {
    pub fn validate(&self, g: &GnsData, c: &CondExp) -> Result<()> {
        let dh = self.dim_h;
        let (k, kx) = (g.k(), g.n() - g.k());
        check_shape("H_d", &self.h_d, (dh * k, dh * k))?;
        check_shape("H_o", &self.h_o, (dh * k, dh * k))?;
        check_shape("L", &self.l, (dh * kx, dh * k))?;
        check_shape("H_×", &self.h_times, (dh * kx, dh * kx))?;
        check_herm("H_d", &self.h_d)?;
        check_herm("H_o", &self.h_o)?;
        check_herm("H_×", &self.h_times)?;
        let off = c.apply_d0_amp_perp(&self.h_d)?.norm();
        if off > SPEC_TOL * self.h_d.norm().max(1.0) {
            return Err(Error::InvalidArgument(format!("H_d is not fixed by the conditional expectation (residual {off:.3e})")));
        }
        let diag = c.apply_d0_amp(&self.h_o)?.norm();
        if diag > SPEC_TOL * self.h_o.norm().max(1.0) {
            return Err(Error::InvalidArgument(format!("H_o has a diagonal part of size {diag:.3e}")));
        }
        if let Some(r) = &self.r {
            check_shape("R00", &r.r00, (dh * k, dh * k))?;
            check_shape("Rx0", &r.rx0, (dh * kx, dh * k))?;
            check_shape("Rxx", &r.rxx, (dh * kx, dh * kx))?;
            check_herm("R00", &r.r00)?;
            check_herm("Rxx", &r.rxx)?;
        }
        Ok(())
    }

    /// A generic spec with blocks of unit-order norm.
    pub fn random(rng: &mut Rng64, dim_h: usize, g: &GnsData, c: &CondExp, with_r: bool) -> Result<Self> {
        let (k, kx) = (g.k(), g.n() - g.k());
        let s = real(0.5);
        let hd = c.apply_d0_amp(&random_hermitian(rng, dim_h * k))? * s;
        let ho = c.apply_d0_amp_perp(&random_hermitian(rng, dim_h * k))? * s;
        let l = random_matrix(rng, dim_h * kx, dim_h * k) * s;
        let hx = random_hermitian(rng, dim_h * kx) * s;
        let r = with_r.then(|| Perturbation {
            r00: random_hermitian(rng, dim_h * k) * s,
            rx0: random_matrix(rng, dim_h * kx, dim_h * k) * s,
            rxx: random_hermitian(rng, dim_h * kx) * s,
        });
        Ok(Self { dim_h, h_d: hd, h_o: ho, l, h_times: hx, r })
    }

    pub fn without_perturbation(&self) -> Self {
        Self { r: None, ..self.clone() }
    }

    /// `H_t(τ)` on `h ⊗ k`.
    pub fn total(&self, tau: f64, g: &GnsData) -> Result<CMatrix> {
        if tau.is_nan() || tau <= 0.0 {
            return Err(Error::NonPositiveStep(tau));
        }
        let rt = tau.sqrt();
        let (is, it) = (real(1.0 / rt), real(1.0 / tau));
        let mut t00 = &self.h_d + &self.h_o * is;
        let mut tx0 = self.l.clone();
        let mut txx = self.h_times.clone();
        if let Some(r) = &self.r {
            t00 += &r.r00 * real(rt);
            tx0 += &r.rx0 * real(rt);
            txx += &r.rxx * real(rt);
        }
        let tx0 = tx0 * is;
        let t0x = tx0.adjoint();
        g.split().assemble(self.dim_h, &t00, &t0x, &tx0, &(txx * it))
    }

    /// `(a ⊗ I) exp(−iτH_t(τ))`.
    pub fn right_generator(&self, tau: f64, g: &GnsData) -> Result<WalkGenerator> {
        let u = self.step_unitary(tau, g)?;
        WalkGenerator::right_multiplication(self.dim_h, g.n(), u, crate::generators::GeneratorKind::HamiltonianRight)
    }

    /// `exp(iτH_t(τ)) (a ⊗ I) exp(−iτH_t(τ))`.
    pub fn conjugation_generator(&self, tau: f64, g: &GnsData) -> Result<WalkGenerator> {
        let u = self.step_unitary(tau, g)?;
        WalkGenerator::conjugation(self.dim_h, g.n(), u)
    }

    pub fn step_unitary(&self, tau: f64, g: &GnsData) -> Result<CMatrix> {
        let h = self.total(tau, g)? * real(tau);
        Ok(Hermitian::new(h)?.exp_scaled(-I))
    }
}

/// The blocks of `F` in the form
/// `[[−i(H_d + H_o) − ½K, −D*V], [D, V − I]]`.
#[derive(Clone, Debug)]
pub struct HpBlocks {
    pub dim_h: usize,
    pub h_d: CMatrix,
    pub h_o: CMatrix,
    pub k: CMatrix,
    pub d: CMatrix,
    pub v: CMatrix,
}

impl HpBlocks {
    pub fn fmat(&self, g: &GnsData) -> Result<CMatrix> {
        let t00 = (&self.h_d + &self.h_o) * (-I) - &self.k * real(0.5);
        let t0x = -(self.d.adjoint() * &self.v);
        let txx = &self.v - identity(self.v.nrows());
        g.split().assemble(self.dim_h, &t00, &t0x, &self.d, &txx)
    }

    /// `(i)` Hermitian `H_d`, `H_o`, `K` with the right `𝔼₀`-structure,
    /// `(ii)` `ϱ₀`-slice of `K` matching `H_o² + D*D`; returns the largest residual.
    pub fn structure_residual(&self, g: &GnsData, c: &CondExp) -> Result<f64> {
        let mut worst = hermitian_residual(&self.h_d)
            .max(hermitian_residual(&self.h_o))
            .max(hermitian_residual(&self.k));
        worst = worst.max(c.apply_d0_amp_perp(&self.h_d)?.norm());
        worst = worst.max(c.apply_d0_amp(&self.h_o)?.norm());
        worst = worst.max(c.apply_d0_amp_perp(&self.k)?.norm());
        let target = &self.h_o * &self.h_o + self.d.adjoint() * &self.d;
        worst = worst.max((g.slice_state0(&self.k)? - g.slice_state0(&target)?).norm());
        Ok(worst)
    }
}

fn exp_minus_i(h: &CMatrix) -> Result<CMatrix> {
    Ok(Hermitian::new(h.clone())?.exp_scaled(-I))
}

/// `F` of the limit `Ψ(a) = (a ⊗ I)F` for a scaled Hamiltonian, with the blocks
/// identifying it as a unitary Hudson–Parthasarathy generator.
pub fn f_from_hamiltonian(spec: &HamiltonianSpec, g: &GnsData, c: &CondExp) -> Result<(CMatrix, HpBlocks)> {
    spec.validate(g, c)?;
    let dh = spec.dim_h;
    let (hd, ho, l, hx) = (&spec.h_d, &spec.h_o, &spec.l, &spec.h_times);
    let e1 = decap_exp(1, hx, -I)?;
    let e2m = decap_exp(2, hx, -I)?;
    let e2p = decap_exp(2, hx, I)?;
    let v = exp_minus_i(hx)?;
    let ho2 = ho * ho;

    let quad = &ho2 * real(0.5) + l.adjoint() * &e2m * l;
    let f00 = (hd + ho) * (-I) - c.apply_d0_amp(&quad)?;
    let f0x = l.adjoint() * &e1 * (-I);
    let fx0 = &e1 * l * (-I);
    let fxx = &v - identity(v.nrows());
    let f = g.split().assemble(dh, &f00, &f0x, &fx0, &fxx)?;

    let h_d_prime = hd - c.apply_d0_amp(&(l.adjoint() * (&e2m - &e2p) * l))? * (I * 0.5);
    let k = c.apply_d0_amp(&(&ho2 + l.adjoint() * (&e2m + &e2p) * l))?;
    let blocks = HpBlocks { dim_h: dh, h_d: h_d_prime, h_o: ho.clone(), k, d: fx0, v };
    Ok((f, blocks))
}

/// Residuals and flags of the Hudson–Parthasarathy conditions.
#[derive(Clone, Debug, Serialize)]
pub struct HpReport {
    pub isometric: bool,
    pub coisometric: bool,
    pub unitary: bool,
    pub isometry_residual: f64,
    pub coisometry_residual: f64,
    pub blocks: Option<BlockConditions>,
}

/// The proof's reduction of the isometry condition to blocks of `F`.
#[derive(Clone, Debug, Serialize)]
pub struct BlockConditions {
    /// `‖B + B*‖`.
    pub b_skew: f64,
    /// `‖C + D*V‖`.
    pub c_match: f64,
    /// `‖𝔼_ϱ₀(A + A* + B*B + D*D)‖`.
    pub state_balance: f64,
    /// `‖V*V − I‖`.
    pub v_isometry: f64,
    /// `‖VV* − I‖`.
    pub v_coisometry: f64,
    /// `‖F₁‖`, `‖F₂‖`, `‖F₃‖`.
    pub f_norms: [f64; 3],
    /// Distance between `G + G* + G*ΔG` and its expression through `F₁`, `F₂`, `F₃`.
    pub decomposition_residual: f64,
    pub passed: bool,
}

impl HpReport {
    pub fn passed(&self) -> bool {
        self.unitary && self.blocks.as_ref().is_none_or(|b| b.passed)
    }
}

/// Checks `G + G* + G*ΔG = 0` and `G + G* + GΔG* = 0`; when `F` is given,
/// also evaluates the block conditions and `F₁`, `F₂`, `F₃`.
pub fn hp_check(gm: &CMatrix, g: &GnsData, f: Option<(&CMatrix, &CondExp)>) -> Result<HpReport> {
    let m = ensure_square(gm)?;
    let dh = m / g.khat_dim();
    if dh * g.khat_dim() != m {
        return Err(Error::Dimension(format!("G has dimension {m}, not a multiple of {}", g.khat_dim())));
    }
    let delta = g.delta(dh);
    let ga = gm.adjoint();
    let iso = gm + &ga + &ga * &delta * gm;
    let coiso = gm + &ga + gm * &delta * &ga;
    let isometry_residual = iso.norm();
    let coisometry_residual = coiso.norm();
    let blocks = match f {
        Some((f, c)) => Some(block_conditions(f, g, c, &iso)?),
        None => None,
    };
    let isometric = isometry_residual <= HP_TOL;
    let coisometric = coisometry_residual <= HP_TOL;
    Ok(HpReport {
        isometric,
        coisometric,
        unitary: isometric && coisometric,
        isometry_residual,
        coisometry_residual,
        blocks,
    })
}

fn block_conditions(f: &CMatrix, g: &GnsData, c: &CondExp, iso: &CMatrix) -> Result<BlockConditions> {
    let n = g.n();
    let dh = f.nrows() / n;
    let split = g.split();
    let p0 = g.p0_amp(dh);
    let q0 = g.p0_perp_amp(dh);
    let fa = f.adjoint();
    let ep = c.apply_amp_perp(f)?;
    let epa = c.apply_amp_perp(&fa)?;

    let f1 = c.apply_amp(&(f + &fa + &epa * &ep))?;
    let f2 = &p0 * (c.apply_amp_perp(&(f + &fa))? + &epa * &q0 * f * &q0);
    let f3 = &q0 * (f + &fa + &fa * &q0 * f) * &q0;

    let delta = g.delta(dh);
    let dperp = g.delta_perp(dh);
    let decomposition = &dperp * g.ampliate(&f1)? * &dperp
        + &dperp * g.ampliate(&f2)? * &delta
        + &delta * g.ampliate(&f2.adjoint())? * &dperp
        + &delta * g.ampliate(&f3)? * &delta;
    let decomposition_residual = (iso - decomposition).norm();

    let [f00, f0x, fx0, fxx] = split.blocks(f, dh)?;
    let a = c.apply_d0_amp(&f00)?;
    let b = c.apply_d0_amp_perp(&f00)?;
    let v = &fxx + identity(fxx.nrows());
    let b_skew = (&b + b.adjoint()).norm();
    let c_match = (&f0x + fx0.adjoint() * &v).norm();
    let balance = &a + a.adjoint() + b.adjoint() * &b + fx0.adjoint() * &fx0;
    let state_balance = g.slice_state0(&balance)?.norm();
    let id = identity(v.nrows());
    let v_isometry = (v.adjoint() * &v - &id).norm();
    let v_coisometry = (&v * v.adjoint() - &id).norm();
    let passed = [b_skew, c_match, state_balance, v_isometry].iter().all(|&r| r <= HP_TOL);
    Ok(BlockConditions {
        b_skew,
        c_match,
        state_balance,
        v_isometry,
        v_coisometry,
        f_norms: [f1.norm(), f2.norm(), f3.norm()],
        decomposition_residual,
        passed,
    })
}

fn check_time(t: f64) -> Result<()> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    Ok(())
}

fn test_function_dim(f: &StepFunction, khat: usize) -> Result<()> {
    if f.dim() != 0 && f.dim() != khat {
        return Err(Error::Dimension(format!("test function values lie in ℂ^{}, expected ℂ^{khat}", f.dim())));
    }
    Ok(())
}

fn pad(x: &CVector, khat: usize) -> CVector {
    if x.len() == khat {
        x.clone()
    } else {
        CVector::zeros(khat)
    }
}

/// `x_t = E^{ε(f)} X_t E_{ε(g)}` for the right Hudson–Parthasarathy equation driven by `G`.
pub fn hp_solve(gm: &CMatrix, g: &GnsData, f: &StepFunction, gf: &StepFunction, t: f64) -> Result<CMatrix> {
    check_time(t)?;
    let khat = g.khat_dim();
    test_function_dim(f, khat)?;
    test_function_dim(gf, khat)?;
    let m = ensure_square(gm)?;
    let dh = m / khat;
    if dh * khat != m {
        return Err(Error::Dimension(format!("G has dimension {m}, not a multiple of {khat}")));
    }
    let mut x = identity(dh) * StepFunction::exp_inner(f, gf);
    for (s0, s1, xv, yv) in StepFunction::common_pieces(f, gf, t) {
        let coeff = slice(gm, &g.hat(&pad(&xv, khat)), &g.hat(&pad(&yv, khat)))?;
        x = crate::linalg::mat_exp(&(coeff * real(s1 - s0)))? * x;
    }
    Ok(x)
}

/// `ψ^{x,y} : a ↦ E^{x̂} ψ(a) E_{ŷ}`.
pub fn sliced_generator(psi: &LimitGenerator, g: &GnsData, x: &CVector, y: &CVector) -> Result<Superoperator> {
    crate::linalg::sliced_map(psi.psi(), &g.hat(x), &g.hat(y))
}

/// `⟨u ε(f), j_t(a) v ε(g)⟩` for piecewise-constant `f`, `g`.
#[allow(clippy::too_many_arguments)]
pub fn cocycle_matrix_element(
    psi: &LimitGenerator,
    g: &GnsData,
    a: &CMatrix,
    u: &CVector,
    v: &CVector,
    f: &StepFunction,
    gf: &StepFunction,
    t: f64,
) -> Result<C64> {
    let b = cocycle_slice(psi, g, a, f, gf, t)?;
    if u.len() != b.nrows() || v.len() != b.ncols() {
        return Err(Error::Dimension(format!("vectors must lie in ℂ^{}", b.nrows())));
    }
    Ok(u.dotc(&(b * v)))
}

/// `k_t(a) = E^{ε(f)} j_t(a) E_{ε(g)}` as an operator on `h`.
pub fn cocycle_slice(psi: &LimitGenerator, g: &GnsData, a: &CMatrix, f: &StepFunction, gf: &StepFunction, t: f64) -> Result<CMatrix> {
    check_time(t)?;
    let khat = g.khat_dim();
    test_function_dim(f, khat)?;
    test_function_dim(gf, khat)?;
    let dh = psi.dim_h();
    if a.shape() != (dh, dh) {
        return Err(Error::Dimension(format!("observable must be {dh}x{dh}")));
    }
    let mut b = a.clone();
    for (s0, s1, xv, yv) in StepFunction::common_pieces(f, gf, t).into_iter().rev() {
        let gen = sliced_generator(psi, g, &pad(&xv, khat), &pad(&yv, khat))?;
        b = gen.exp(s1 - s0)?.apply(&b)?;
    }
    Ok(b * StepFunction::exp_inner(f, gf))
}

/// The Evans–Hudson limit built from `F`.
#[derive(Clone, Debug)]
pub struct EhGenerator {
    /// `Ψ : B(h) → B(h ⊗ k)`.
    pub big_psi: Superoperator,
    pub psi: LimitGenerator,
    pub g_matrix: CMatrix,
    /// Largest deviation of `ψ` from `(a ⊗ I)G + G*(a ⊗ I) + G*Δ(a ⊗ I)ΔG` over matrix units.
    pub eh_residual: f64,
}

/// The quadratic part `Υ(a)` of `Ψ(a)`.
pub fn upsilon(f: &CMatrix, a: &CMatrix, g: &GnsData, c: &CondExp) -> Result<CMatrix> {
    let dh = a.nrows();
    let amp = kron(a, &identity(g.n()));
    let p0 = g.p0_amp(dh);
    let q0 = g.p0_perp_amp(dh);
    let ep = c.apply_amp_perp(f)?;
    let fa = f.adjoint();
    let outer = &fa * &q0 * &amp * &q0 * f;
    Ok(c.apply_amp(&(ep.adjoint() * &amp * &ep))? + &outer - &p0 * &outer * &p0)
}

/// `Υ(a)` from the blocks of `F = [[X, Y], [Z, W]]`.
pub fn upsilon_blocks(f: &CMatrix, a: &CMatrix, g: &GnsData, c: &CondExp) -> Result<CMatrix> {
    let dh = a.nrows();
    let [x, _y, z, w] = g.split().blocks(f, dh)?;
    let a0 = kron(a, &identity(g.k()));
    let ax = kron(a, &identity(g.n() - g.k()));
    let xo = c.apply_d0_amp_perp(&x)?;
    let t00 = c.apply_d0_amp(&(xo.adjoint() * &a0 * &xo + z.adjoint() * &ax * &z))?;
    let t0x = z.adjoint() * &ax * &w;
    let tx0 = w.adjoint() * &ax * &z;
    let txx = w.adjoint() * &ax * &w;
    g.split().assemble(dh, &t00, &t0x, &tx0, &txx)
}

pub fn eh_generator(f: &CMatrix, dim_h: usize, g: &GnsData, c: &CondExp) -> Result<EhGenerator> {
    let n = g.n();
    if f.shape() != (dim_h * n, dim_h * n) {
        return Err(Error::Dimension(format!("F must act on h ⊗ ℂ^{n} of dimension {}", dim_h * n)));
    }
    let id_n = identity(n);
    let big_psi = Superoperator::from_fn((dim_h, dim_h), (dim_h * n, dim_h * n), |a| {
        let amp = kron(a, &id_n);
        Ok(&amp * f + f.adjoint() * &amp + upsilon(f, a, g, c)?)
    })?;
    let psi = limit_generator(&big_psi, g, c)?;
    let gm = limit_image(f, g, c)?;

    let id_k = identity(g.khat_dim());
    let delta = g.delta(dim_h);
    let ga = gm.adjoint();
    let expected = Superoperator::from_fn(psi.psi().in_shape(), psi.psi().out_shape(), |a| {
        let amp = kron(a, &id_k);
        Ok(&amp * &gm + &ga * &amp + &ga * &delta * &amp * &delta * &gm)
    })?;
    let eh_residual = psi.psi().distance(&expected)?;
    let scale = expected.matrix().norm().max(1.0);
    if eh_residual > EH_TOL * scale {
        return Err(Error::IdentityViolated { what: "ψ(a) = (a⊗I)G + G*(a⊗I) + G*Δ(a⊗I)ΔG".into(), residual: eh_residual });
    }
    Ok(EhGenerator { big_psi, psi, g_matrix: gm, eh_residual })
}

/// `L(a) = E^Ω ψ(a) E_Ω`.
pub fn lindblad(psi: &LimitGenerator, g: &GnsData) -> Result<Superoperator> {
    crate::linalg::sliced_map(psi.psi(), g.omega(), g.omega())
}

/// The closed form of the Lindblad generator of the Evans–Hudson limit of a
/// scaled Hamiltonian, written through its Hudson–Parthasarathy blocks.
pub fn lindblad_closed_form(blocks: &HpBlocks, g: &GnsData) -> Result<Superoperator> {
    let dh = blocks.dim_h;
    let kx = g.n() - g.k();
    let h_eff = g.slice_state0(&blocks.h_d)?;
    let dd = g.slice_state0(&(blocks.d.adjoint() * &blocks.d))?;
    let ho2 = g.slice_state0(&(&blocks.h_o * &blocks.h_o))?;
    let id_k = identity(g.k());
    let id_x = identity(kx);
    Superoperator::from_fn((dh, dh), (dh, dh), |a| {
        let comm = a * &h_eff - &h_eff * a;
        let anti = |m: &CMatrix| a * m + m * a;
        let jump_d = g.slice_state0(&(blocks.d.adjoint() * kron(a, &id_x) * &blocks.d))?;
        let jump_o = g.slice_state0(&(&blocks.h_o * kron(a, &id_k) * &blocks.h_o))?;
        Ok(comm * (-I) - anti(&dd) * real(0.5) + jump_d - anti(&ho2) * real(0.5) + jump_o)
    })
}

/// Smallest eigenvalue of the Hermitian part of the Choi matrix of `e^{tL}`.
pub fn choi_min_eigenvalue(l: &Superoperator, t: f64) -> Result<f64> {
    let choi = l.exp(t)?.choi()?;
    let herm = (&choi + choi.adjoint()) * real(0.5);
    Ok(Hermitian::new(herm)?.eigenvalues().iter().copied().fold(f64::INFINITY, f64::min))
}

/// Which walk generator a scaled Hamiltonian drives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HamiltonianKind {
    Right,
    Conjugation,
}

/// The limit `Ψ` of the modified walk generators.
pub fn limit_psi(spec: &HamiltonianSpec, kind: HamiltonianKind, g: &GnsData, c: &CondExp) -> Result<Superoperator> {
    let (f, _) = f_from_hamiltonian(spec, g, c)?;
    match kind {
        HamiltonianKind::Right => right_multiplication_map(spec.dim_h, &f),
        HamiltonianKind::Conjugation => Ok(eh_generator(&f, spec.dim_h, g, c)?.big_psi),
    }
}

/// `‖f_{Φ(τ),τ} − Ψ‖` for each `τ`, in input order.
pub fn generator_convergence(
    spec: &HamiltonianSpec,
    kind: HamiltonianKind,
    big_psi: &Superoperator,
    taus: &[f64],
    g: &GnsData,
    c: &CondExp,
) -> Result<Vec<f64>> {
    if taus.is_empty() {
        return Err(Error::InvalidArgument("empty τ list".into()));
    }
    if let Some(&bad) = taus.iter().find(|t| t.is_nan() || **t <= 0.0) {
        return Err(Error::NonPositiveStep(bad));
    }
    taus.par_iter()
        .map(|&tau| {
            let w = match kind {
                HamiltonianKind::Right => spec.right_generator(tau, g)?,
                HamiltonianKind::Conjugation => spec.conjugation_generator(tau, g)?,
            };
            modify(w.phi(), tau, g, c)?.distance(big_psi)
        })
        .collect()
}
