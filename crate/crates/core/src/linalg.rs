//! Dense complex linear algebra used throughout the crate.
//!
//! Tensor products always use the lexicographic index pairing of
//! [`nalgebra::Matrix::kronecker`]: the left factor carries the slow index,
//! so `(A ⊗ B)[(i, k), (j, l)] = A[i, j] · B[k, l]` with row `i · rows(B) + k`.
//! The system space `h` is always the leftmost factor.
//!
//! Operators are vectorised column by column (`vec(X)[i + j · rows] = X[i, j]`),
//! which matches nalgebra's storage order, so `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Tolerance applied to matrices that are required to be Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron_vec(u: &CVector, x: &CVector) -> CVector {
    u.kronecker(x)
}

/// The rank-one operator `|u⟩⟨v|`, i.e. `w ↦ ⟨v, w⟩ u`.
pub fn dyad(u: &CVector, v: &CVector) -> CMatrix {
    u * v.adjoint()
}

/// Elementary matrix with a single unit entry at `(i, j)`.
pub fn elementary(rows: usize, cols: usize, i: usize, j: usize) -> CMatrix {
    let mut m = CMatrix::zeros(rows, cols);
    m[(i, j)] = ONE;
    m
}

pub fn basis_vector(n: usize, i: usize) -> CVector {
    let mut v = CVector::zeros(n);
    v[i] = ONE;
    v
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.norm()
}

pub fn ensure_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    Ok(m.nrows())
}

/// Residual `‖A − A*‖_F`.
pub fn hermitian_residual(m: &CMatrix) -> f64 {
    (m - m.adjoint()).norm()
}

/// Checks Hermiticity relative to `max(1, ‖A‖_F)`.
pub fn ensure_hermitian(m: &CMatrix) -> Result<()> {
    ensure_square(m)?;
    let res = hermitian_residual(m);
    if res > HERMITIAN_TOL * m.norm().max(1.0) {
        return Err(Error::NotHermitian(res));
    }
    Ok(())
}

/// `E^x T E_y` for `T` acting on `H ⊗ K`, where `E_y u = u ⊗ y`.
///
/// Conjugate-linear in `x`, linear in `y`.
pub fn slice(t: &CMatrix, x: &CVector, y: &CVector) -> Result<CMatrix> {
    let k = x.len();
    if y.len() != k || k == 0 {
        return Err(Error::Dimension(format!(
            "slice vectors have lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    let n = ensure_square(t)?;
    if n % k != 0 {
        return Err(Error::Dimension(format!(
            "operator of dimension {n} is not on H ⊗ K with dim K = {k}"
        )));
    }
    let dh = n / k;
    let mut out = CMatrix::zeros(dh, dh);
    for i in 0..dh {
        for j in 0..dh {
            let mut acc = ZERO;
            for p in 0..k {
                let xp = x[p].conj();
                if xp == ZERO {
                    continue;
                }
                let mut row = ZERO;
                for q in 0..k {
                    row += t[(i * k + p, j * k + q)] * y[q];
                }
                acc += xp * row;
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// Column-stacked vectorisation.
pub fn vec_of(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

pub fn unvec(v: &CVector, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_column_slice(rows, cols, v.as_slice())
}

/// `e^z − 1` without cancellation for small `|z|`.
pub fn expm1(z: C64) -> C64 {
    let (x, y) = (z.re, z.im);
    let half_sin = (0.5 * y).sin();
    let re = x.exp_m1() * y.cos() - 2.0 * half_sin * half_sin;
    let im = x.exp() * y.sin();
    C64::new(re, im)
}

const DECAP_SERIES_RADIUS: f64 = 1e-3;
const DECAP_SERIES_TERMS: usize = 20;

/// Decapitated exponential `exp₁(z) = Σ_{n≥1} z^{n−1}/n! = (e^z − 1)/z`.
pub fn exp1(z: C64) -> C64 {
    if z.norm() < DECAP_SERIES_RADIUS {
        decap_series(z, 1)
    } else {
        expm1(z) / z
    }
}

/// Decapitated exponential `exp₂(z) = Σ_{n≥2} z^{n−2}/n! = (e^z − 1 − z)/z²`.
pub fn exp2(z: C64) -> C64 {
    if z.norm() < DECAP_SERIES_RADIUS {
        decap_series(z, 2)
    } else {
        (expm1(z) - z) / (z * z)
    }
}

fn decap_series(z: C64, order: usize) -> C64 {
    // term_n = z^{n-order} / n!, starting at n = order
    let mut fact = 1.0;
    for n in 2..=order {
        fact *= n as f64;
    }
    let mut term = real(1.0 / fact);
    let mut sum = term;
    for n in (order + 1)..(order + DECAP_SERIES_TERMS) {
        term = term * z / n as f64;
        sum += term;
    }
    sum
}

/// A Hermitian matrix together with its spectral decomposition.
#[derive(Clone, Debug)]
pub struct Hermitian {
    matrix: CMatrix,
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
}

impl Hermitian {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        ensure_hermitian(&matrix)?;
        let n = matrix.nrows();
        if n == 0 {
            return Ok(Self { matrix, eigenvalues: Vec::new(), eigenvectors: CMatrix::zeros(0, 0) });
        }
        let sym = (&matrix + matrix.adjoint()) * real(0.5);
        let eig = sym.symmetric_eigen();
        Ok(Self {
            matrix,
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
            eigenvectors: eig.eigenvectors,
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    /// `f(A) = V diag(f(λ)) V*`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            let fj = f(lam);
            for z in scaled.column_mut(j).iter_mut() {
                *z *= fj;
            }
        }
        scaled * v.adjoint()
    }

    /// `exp(z A)`.
    pub fn exp_scaled(&self, z: C64) -> CMatrix {
        self.map_spectrum(|lam| (z * lam).exp())
    }
}

/// `exp_order(coeff · A)` for Hermitian `A`, evaluated spectrally.
pub fn decap_exp(order: u8, a: &CMatrix, coeff: C64) -> Result<CMatrix> {
    let h = Hermitian::new(a.clone())?;
    match order {
        1 => Ok(h.map_spectrum(|lam| exp1(coeff * lam))),
        2 => Ok(h.map_spectrum(|lam| exp2(coeff * lam))),
        _ => Err(Error::InvalidArgument(format!("decapitated exponential order {order} (expected 1 or 2)"))),
    }
}

/// Padé(13) coefficients for scaling and squaring.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn one_norm(a: &CMatrix) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a degree-13 Padé approximant.
pub fn mat_exp(a: &CMatrix) -> Result<CMatrix> {
    let n = ensure_square(a)?;
    if n == 0 {
        return Ok(CMatrix::zeros(0, 0));
    }
    let norm = one_norm(a);
    let s = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    let a = a * real(2f64.powi(-s));
    let b = &PADE13;
    let id = identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * real(b[13]) + &a4 * real(b[11]) + &a2 * real(b[9]);
    let u = &a
        * (&a6 * u_inner + &a6 * real(b[7]) + &a4 * real(b[5]) + &a2 * real(b[3]) + &id * real(b[1]));
    let v_inner = &a6 * real(b[12]) + &a4 * real(b[10]) + &a2 * real(b[8]);
    let v = &a6 * v_inner + &a6 * real(b[6]) + &a4 * real(b[4]) + &a2 * real(b[2]) + &id * real(b[0]);
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .ok_or_else(|| Error::InvalidArgument("singular Padé denominator in mat_exp".into()))?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

/// A linear map between matrix spaces, stored as a matrix acting on
/// column-vectorised operators.
#[derive(Clone, Debug, PartialEq)]
pub struct Superoperator {
    in_shape: (usize, usize),
    out_shape: (usize, usize),
    matrix: CMatrix,
}

impl Superoperator {
    pub fn from_matrix(in_shape: (usize, usize), out_shape: (usize, usize), matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != out_shape.0 * out_shape.1 || matrix.ncols() != in_shape.0 * in_shape.1 {
            return Err(Error::Dimension(format!(
                "superoperator matrix is {}x{}, expected {}x{}",
                matrix.nrows(),
                matrix.ncols(),
                out_shape.0 * out_shape.1,
                in_shape.0 * in_shape.1
            )));
        }
        Ok(Self { in_shape, out_shape, matrix })
    }

    /// Tabulates `f` on the elementary matrices of the input space.
    pub fn from_fn<F>(in_shape: (usize, usize), out_shape: (usize, usize), mut f: F) -> Result<Self>
    where
        F: FnMut(&CMatrix) -> Result<CMatrix>,
    {
        let (ri, ci) = in_shape;
        let mut matrix = CMatrix::zeros(out_shape.0 * out_shape.1, ri * ci);
        for j in 0..ci {
            for i in 0..ri {
                let image = f(&elementary(ri, ci, i, j))?;
                if image.shape() != out_shape {
                    return Err(Error::Dimension(format!(
                        "map produced a {:?} operator, expected {:?}",
                        image.shape(),
                        out_shape
                    )));
                }
                matrix.set_column(i + j * ri, &vec_of(&image));
            }
        }
        Ok(Self { in_shape, out_shape, matrix })
    }

    pub fn zero(in_shape: (usize, usize), out_shape: (usize, usize)) -> Self {
        Self {
            in_shape,
            out_shape,
            matrix: CMatrix::zeros(out_shape.0 * out_shape.1, in_shape.0 * in_shape.1),
        }
    }

    /// Identity map on `B(ℂⁿ)`.
    pub fn identity(n: usize) -> Self {
        Self { in_shape: (n, n), out_shape: (n, n), matrix: identity(n * n) }
    }

    pub fn in_shape(&self) -> (usize, usize) {
        self.in_shape
    }

    pub fn out_shape(&self) -> (usize, usize) {
        self.out_shape
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn is_endomorphism(&self) -> bool {
        self.in_shape == self.out_shape
    }

    pub fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        if x.shape() != self.in_shape {
            return Err(Error::Dimension(format!(
                "superoperator expects {:?} input, got {:?}",
                self.in_shape,
                x.shape()
            )));
        }
        let out = &self.matrix * vec_of(x);
        Ok(unvec(&out, self.out_shape.0, self.out_shape.1))
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Superoperator) -> Result<Superoperator> {
        if inner.out_shape != self.in_shape {
            return Err(Error::Dimension(format!(
                "cannot compose: inner output {:?} vs outer input {:?}",
                inner.out_shape, self.in_shape
            )));
        }
        Ok(Self { in_shape: inner.in_shape, out_shape: self.out_shape, matrix: &self.matrix * &inner.matrix })
    }

    fn check_same_shape(&self, other: &Superoperator) -> Result<()> {
        if self.in_shape != other.in_shape || self.out_shape != other.out_shape {
            return Err(Error::Dimension(format!(
                "superoperator shapes differ: {:?}->{:?} vs {:?}->{:?}",
                self.in_shape, self.out_shape, other.in_shape, other.out_shape
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Superoperator) -> Result<Superoperator> {
        self.check_same_shape(other)?;
        Ok(Self { matrix: &self.matrix + &other.matrix, ..self.clone() })
    }

    pub fn sub(&self, other: &Superoperator) -> Result<Superoperator> {
        self.check_same_shape(other)?;
        Ok(Self { matrix: &self.matrix - &other.matrix, ..self.clone() })
    }

    pub fn scale(&self, z: C64) -> Superoperator {
        Self { matrix: &self.matrix * z, ..self.clone() }
    }

    /// `e^{tL}` for an endomorphic map.
    pub fn exp(&self, t: f64) -> Result<Superoperator> {
        if !self.is_endomorphism() {
            return Err(Error::Dimension(format!(
                "exponential of a non-endomorphic map {:?}->{:?}",
                self.in_shape, self.out_shape
            )));
        }
        Ok(Self { matrix: mat_exp(&(&self.matrix * real(t)))?, ..self.clone() })
    }

    /// Frobenius norm of the difference of the representing matrices.
    pub fn distance(&self, other: &Superoperator) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok((&self.matrix - &other.matrix).norm())
    }

    pub fn rank(&self, tol: f64) -> usize {
        if self.matrix.is_empty() {
            return 0;
        }
        let sv = self.matrix.clone().svd(false, false).singular_values;
        let max = sv.iter().copied().fold(0.0, f64::max);
        sv.iter().filter(|&&s| s > tol * max.max(1.0)).count()
    }

    /// Choi matrix `Σ_{ij} e_ij ⊗ Φ(e_ij)` of a map on square matrices.
    pub fn choi(&self) -> Result<CMatrix> {
        let (n, nc) = self.in_shape;
        let (m, mc) = self.out_shape;
        if n != nc || m != mc {
            return Err(Error::Dimension("Choi matrix needs square input and output spaces".into()));
        }
        let mut choi = CMatrix::zeros(n * m, n * m);
        for i in 0..n {
            for j in 0..n {
                let image = unvec(&self.matrix.column(i + j * n).into_owned(), m, m);
                choi.view_mut((i * m, j * m), (m, m)).copy_from(&image);
            }
        }
        Ok(choi)
    }
}

/// `E^x Φ(a) E_y` for every `a`, as a map `B(h) → B(h)`.
pub fn sliced_map(phi: &Superoperator, x: &CVector, y: &CVector) -> Result<Superoperator> {
    let (dh, _) = phi.in_shape();
    Superoperator::from_fn((dh, dh), (dh, dh), |a| slice(&phi.apply(a)?, x, y))
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 || ys.iter().any(|&y| y <= 0.0) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

/// Orthonormalises `candidates` against `against` and each other; vectors whose
/// residual norm falls below `tol` are dropped.
pub fn gram_schmidt(against: &[CVector], candidates: impl IntoIterator<Item = CVector>, tol: f64) -> Vec<CVector> {
    let mut basis: Vec<CVector> = against.to_vec();
    let skip = basis.len();
    for mut v in candidates {
        // two passes for numerical orthogonality
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dotc(&v);
                v -= b * proj;
            }
        }
        let n = v.norm();
        if n > tol {
            basis.push(v / real(n));
        }
    }
    basis.split_off(skip)
}

/// An ordered orthonormal basis of `ℂⁿ` split into a front block and a back block.
///
/// Operators on `h ⊗ ℂⁿ` are decomposed into the four blocks induced by
/// `ℂⁿ = front ⊕ back`, with `h` kept as the leftmost factor.
#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceSplit {
    basis: CMatrix,
    split: usize,
}

impl SubspaceSplit {
    pub fn new(basis: CMatrix, split: usize) -> Result<Self> {
        let n = ensure_square(&basis)?;
        if split > n {
            return Err(Error::Dimension(format!("split index {split} exceeds dimension {n}")));
        }
        let defect = (basis.adjoint() * &basis - identity(n)).norm();
        if defect > 1e-12 * (n.max(1) as f64) {
            return Err(Error::InvalidArgument(format!("basis is not orthonormal (defect {defect:.3e})")));
        }
        Ok(Self { basis, split })
    }

    pub fn total_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn front_dim(&self) -> usize {
        self.split
    }

    pub fn back_dim(&self) -> usize {
        self.total_dim() - self.split
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    /// Isometry `ℂ^front → ℂⁿ` whose columns are the front basis vectors.
    pub fn front(&self) -> CMatrix {
        self.basis.columns(0, self.split).into_owned()
    }

    pub fn back(&self) -> CMatrix {
        self.basis.columns(self.split, self.back_dim()).into_owned()
    }

    pub fn front_projector(&self) -> CMatrix {
        let f = self.front();
        &f * f.adjoint()
    }

    pub fn back_projector(&self) -> CMatrix {
        let b = self.back();
        &b * b.adjoint()
    }

    /// `id_h ⊗ front`.
    pub fn embed_front(&self, dim_h: usize) -> CMatrix {
        kron(&identity(dim_h), &self.front())
    }

    pub fn embed_back(&self, dim_h: usize) -> CMatrix {
        kron(&identity(dim_h), &self.back())
    }

    fn check_amplified(&self, t: &CMatrix, dim_h: usize) -> Result<()> {
        let n = dim_h * self.total_dim();
        if t.shape() != (n, n) {
            return Err(Error::Dimension(format!(
                "expected an operator on h ⊗ ℂ^{} of dimension {n}, got {:?}",
                self.total_dim(),
                t.shape()
            )));
        }
        Ok(())
    }

    /// `[T00, T0x, Tx0, Txx]`: front→front, back→front, front→back, back→back.
    pub fn blocks(&self, t: &CMatrix, dim_h: usize) -> Result<[CMatrix; 4]> {
        self.check_amplified(t, dim_h)?;
        let ef = self.embed_front(dim_h);
        let eb = self.embed_back(dim_h);
        let efa = ef.adjoint();
        let eba = eb.adjoint();
        Ok([&efa * t * &ef, &efa * t * &eb, &eba * t * &ef, &eba * t * &eb])
    }

    pub fn assemble(&self, dim_h: usize, t00: &CMatrix, t0x: &CMatrix, tx0: &CMatrix, txx: &CMatrix) -> Result<CMatrix> {
        let (nf, nb) = (dim_h * self.front_dim(), dim_h * self.back_dim());
        let shapes = [(t00, (nf, nf)), (t0x, (nf, nb)), (tx0, (nb, nf)), (txx, (nb, nb))];
        for (m, want) in shapes {
            if m.shape() != want {
                return Err(Error::Dimension(format!("block has shape {:?}, expected {want:?}", m.shape())));
            }
        }
        let ef = self.embed_front(dim_h);
        let eb = self.embed_back(dim_h);
        Ok(&ef * t00 * ef.adjoint() + &ef * t0x * eb.adjoint() + &eb * tx0 * ef.adjoint() + &eb * txx * eb.adjoint())
    }
}
