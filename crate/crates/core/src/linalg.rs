//! Dense symmetric linear algebra: eigendecompositions, spectral matrix
//! functions, first divided differences (Loewner matrices), Fréchet
//! derivatives via the Daleckiĭ–Kreĭn formula, and Lyapunov solves.
//!
//! Every SPD point carries its eigendecomposition `P = Q Λ Qᵀ` with the
//! eigenvalues sorted in descending order, so that all downstream geometry
//! reuses a single decomposition per iterate.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Relative eigenvalue gap below which divided differences switch to the
/// derivative at the midpoint.
pub const MERGE_TOL: f64 = 1e-9;

/// Symmetric `n × n` matrix. Construction always symmetrizes via `(M + Mᵀ)/2`,
/// so `m[(i, j)] == m[(j, i)]` holds bit-for-bit.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    pub fn new(m: DMatrix<f64>) -> Self {
        assert!(m.is_square(), "SymMatrix requires a square matrix");
        let n = m.nrows();
        let mut out = m;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (out[(i, j)] + out[(j, i)]);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        SymMatrix(out)
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize, usize) -> f64) -> Self {
        Self::new(DMatrix::from_fn(n, n, f))
    }

    pub fn zeros(n: usize) -> Self {
        SymMatrix(DMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix(DMatrix::identity(n, n))
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        SymMatrix(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    /// `Q · D · Qᵀ` for a diagonal given by `d`.
    pub fn from_spectral(q: &DMatrix<f64>, d: &[f64]) -> Self {
        let mut qd = q.clone();
        for (j, &dj) in d.iter().enumerate() {
            qd.column_mut(j).scale_mut(dj);
        }
        Self::new(qd * q.transpose())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn frobenius_inner(&self, other: &SymMatrix) -> f64 {
        self.0.dot(&other.0)
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn scale(&self, s: f64) -> SymMatrix {
        SymMatrix(&self.0 * s)
    }

    /// `Qᵀ · self · Q`: coordinates in the frame whose columns are `Q`.
    pub fn rotate_into(&self, q: &DMatrix<f64>) -> SymMatrix {
        SymMatrix::new(q.transpose() * &self.0 * q)
    }

    /// `Q · self · Qᵀ`.
    pub fn rotate_out(&self, q: &DMatrix<f64>) -> SymMatrix {
        SymMatrix::new(q * &self.0 * q.transpose())
    }

    /// Entrywise (Hadamard) product.
    pub fn hadamard(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix(self.0.component_mul(&other.0))
    }

    pub fn hadamard_matrix(&self, other: &DMatrix<f64>) -> SymMatrix {
        SymMatrix::new(self.0.component_mul(other))
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }
}

impl Add for &SymMatrix {
    type Output = SymMatrix;
    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &SymMatrix {
    type Output = SymMatrix;
    fn sub(self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 - &rhs.0)
    }
}

impl Add for SymMatrix {
    type Output = SymMatrix;
    fn add(self, rhs: SymMatrix) -> SymMatrix {
        SymMatrix(self.0 + rhs.0)
    }
}

impl Sub for SymMatrix {
    type Output = SymMatrix;
    fn sub(self, rhs: SymMatrix) -> SymMatrix {
        SymMatrix(self.0 - rhs.0)
    }
}

impl Mul<f64> for &SymMatrix {
    type Output = SymMatrix;
    fn mul(self, rhs: f64) -> SymMatrix {
        self.scale(rhs)
    }
}

impl Mul<f64> for SymMatrix {
    type Output = SymMatrix;
    fn mul(self, rhs: f64) -> SymMatrix {
        SymMatrix(self.0 * rhs)
    }
}

impl Neg for &SymMatrix {
    type Output = SymMatrix;
    fn neg(self) -> SymMatrix {
        SymMatrix(-&self.0)
    }
}

impl Neg for SymMatrix {
    type Output = SymMatrix;
    fn neg(self) -> SymMatrix {
        SymMatrix(-self.0)
    }
}

/// Eigendecomposition of a symmetric matrix, eigenvalues sorted descending.
///
/// Unlike [`SpdPoint`] the spectrum may have any sign; this is used for
/// `log P` and other intermediate symmetric matrices.
#[derive(Clone, Debug)]
pub struct SymEigen {
    q: DMatrix<f64>,
    values: Vec<f64>,
}

impl SymEigen {
    pub fn new(m: &SymMatrix) -> Self {
        let eig = nalgebra::SymmetricEigen::new(m.as_matrix().clone());
        Self::from_parts(eig.eigenvectors, eig.eigenvalues.as_slice().to_vec())
    }

    /// Build from an orthogonal `q` and matching eigenvalues (any order).
    pub fn from_parts(q: DMatrix<f64>, values: Vec<f64>) -> Self {
        assert_eq!(q.ncols(), values.len());
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
        let n = values.len();
        let mut sorted_q = DMatrix::zeros(q.nrows(), n);
        for (dst, &src) in order.iter().enumerate() {
            sorted_q.set_column(dst, &q.column(src));
        }
        let values = order.iter().map(|&i| values[i]).collect();
        SymEigen {
            q: sorted_q,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `Q · diag(f(λ)) · Qᵀ`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> Result<SymMatrix> {
        let mapped = self.map_values(f)?;
        Ok(SymMatrix::from_spectral(&self.q, &mapped))
    }

    /// The same eigenbasis with transformed eigenvalues.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<SymEigen> {
        let mapped = self.map_values(f)?;
        Ok(SymEigen::from_parts(self.q.clone(), mapped))
    }

    fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
        self.values
            .iter()
            .map(|&l| {
                let v = f(l);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::DomainError { value: l })
                }
            })
            .collect()
    }

    pub fn reconstruct(&self) -> SymMatrix {
        SymMatrix::from_spectral(&self.q, &self.values)
    }
}

/// A point on SPD(n): the matrix together with its cached eigendecomposition.
#[derive(Clone, Debug)]
pub struct SpdPoint {
    mat: SymMatrix,
    eig: SymEigen,
}

impl SpdPoint {
    /// Eigendecompose `m`, requiring strictly positive eigenvalues.
    pub fn new(m: SymMatrix) -> Result<Self> {
        eig_sym(&m)
    }

    pub fn identity(n: usize) -> Self {
        SpdPoint {
            mat: SymMatrix::identity(n),
            eig: SymEigen::from_parts(DMatrix::identity(n, n), vec![1.0; n]),
        }
    }

    /// Assemble `Q diag(λ) Qᵀ` from an orthogonal `q` and positive `lambda`.
    /// The supplied factors become the cached decomposition, exactly.
    pub fn from_eigen(q: DMatrix<f64>, lambda: Vec<f64>) -> Result<Self> {
        Self::from_sym_eigen(SymEigen::from_parts(q, lambda), 0.0)
    }

    pub(crate) fn from_sym_eigen(eig: SymEigen, floor: f64) -> Result<Self> {
        let min_eig = eig.values.last().copied().unwrap_or(f64::INFINITY);
        // NaN fails this comparison and is rejected as well.
        if !(min_eig > floor) || eig.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotPositiveDefinite { min_eig, floor });
        }
        Ok(SpdPoint {
            mat: eig.reconstruct(),
            eig,
        })
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn mat(&self) -> &SymMatrix {
        &self.mat
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.eig.q
    }

    /// Eigenvalues, sorted descending.
    pub fn lambda(&self) -> &[f64] {
        &self.eig.values
    }

    pub fn eigen(&self) -> &SymEigen {
        &self.eig
    }

    pub fn lambda_max(&self) -> f64 {
        self.eig.values[0]
    }

    pub fn lambda_min(&self) -> f64 {
        *self.eig.values.last().unwrap()
    }

    pub fn condition_number(&self) -> f64 {
        self.lambda_max() / self.lambda_min()
    }

    /// `P^s` for real `s`.
    pub fn powf(&self, s: f64) -> SymMatrix {
        matrix_function(self, |l| l.powf(s)).expect("positive spectrum")
    }

    /// `P^s` as an SPD point sharing this eigenbasis.
    pub fn powf_point(&self, s: f64) -> SpdPoint {
        let eig = self.eig.map(|l| l.powf(s)).expect("positive spectrum");
        SpdPoint {
            mat: eig.reconstruct(),
            eig,
        }
    }

    pub fn log(&self) -> SymMatrix {
        matrix_function(self, f64::ln).expect("positive spectrum")
    }

    /// Eigendecomposition of `log P` (same eigenvectors).
    pub fn log_eigen(&self) -> SymEigen {
        self.eig.map(f64::ln).expect("positive spectrum")
    }
}

/// Eigendecompose a symmetric matrix into an [`SpdPoint`], rejecting
/// spectra with `λ_min <= 0`.
pub fn eig_sym(m: &SymMatrix) -> Result<SpdPoint> {
    eig_sym_with_floor(m, 0.0)
}

pub fn eig_sym_with_floor(m: &SymMatrix, spd_floor: f64) -> Result<SpdPoint> {
    let eig = SymEigen::new(m);
    let min_eig = eig.values.last().copied().unwrap_or(f64::INFINITY);
    if !(min_eig > spd_floor) {
        return Err(Error::NotPositiveDefinite {
            min_eig,
            floor: spd_floor,
        });
    }
    Ok(SpdPoint {
        mat: m.clone(),
        eig,
    })
}

/// `f(P) = Q f(Λ) Qᵀ`.
pub fn matrix_function(p: &SpdPoint, f: impl Fn(f64) -> f64) -> Result<SymMatrix> {
    p.eig.apply(f)
}

/// Matrix of first divided differences `f^{[1]}(λ_i, λ_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LoewnerMatrix(DMatrix<f64>);

impl LoewnerMatrix {
    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }
}

#[inline]
pub(crate) fn is_merged(a: f64, b: f64, merge_tol: f64) -> bool {
    (a - b).abs() <= merge_tol * (a.abs() + b.abs())
}

/// Generic Loewner matrix: plain difference quotients, switching to
/// `f'((λ_i+λ_j)/2)` when `|λ_i − λ_j| <= merge_tol (|λ_i| + |λ_j|)`.
pub fn loewner(
    f: impl Fn(f64) -> f64,
    f_prime: impl Fn(f64) -> f64,
    lambda: &[f64],
    merge_tol: f64,
) -> Result<LoewnerMatrix> {
    let n = lambda.len();
    let fv: Vec<f64> = lambda.iter().map(|&l| f(l)).collect();
    for (&l, &v) in lambda.iter().zip(&fv) {
        if !v.is_finite() {
            return Err(Error::DomainError { value: l });
        }
    }
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let (a, b) = (lambda[i], lambda[j]);
            let v = if i == j || is_merged(a, b, merge_tol) {
                let m = 0.5 * (a + b);
                let d = f_prime(m);
                if !d.is_finite() {
                    return Err(Error::DomainError { value: m });
                }
                d
            } else {
                (fv[i] - fv[j]) / (a - b)
            };
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(LoewnerMatrix(out))
}

/// Fréchet derivative of the spectral function `f` at the matrix described by
/// `eig`, in direction `e`: `Q (F ⊙ QᵀEQ) Qᵀ`.
pub fn frechet_derivative(
    eig: &SymEigen,
    f: impl Fn(f64) -> f64,
    f_prime: impl Fn(f64) -> f64,
    e: &SymMatrix,
) -> Result<SymMatrix> {
    let lf = loewner(f, f_prime, eig.values(), MERGE_TOL)?;
    Ok(apply_in_eigenbasis(eig.q(), lf.as_matrix(), e))
}

/// `Q (K ⊙ QᵀEQ) Qᵀ` for an eigenbasis multiplier `K`.
pub(crate) fn apply_in_eigenbasis(q: &DMatrix<f64>, k: &DMatrix<f64>, e: &SymMatrix) -> SymMatrix {
    e.rotate_into(q).hadamard_matrix(k).rotate_out(q)
}

/// Solve `S M + M S = RHS` for symmetric `S`, with `M` SPD.
pub fn lyapunov_solve(m: &SpdPoint, rhs: &SymMatrix) -> SymMatrix {
    let lam = m.lambda();
    let r = rhs.rotate_into(m.q());
    let n = lam.len();
    let s = DMatrix::from_fn(n, n, |i, j| r.as_matrix()[(i, j)] / (lam[i] + lam[j]));
    SymMatrix::new(s).rotate_out(m.q())
}

/// Haar-distributed orthogonal matrix: QR of a standard Gaussian matrix with
/// the diagonal of `R` forced positive.
pub fn haar_orthogonal(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    haar_orthogonal_from(n, &mut rng)
}

pub fn haar_orthogonal_from<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    assert!(n >= 1);
    let g = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Thin SVD `G = U Σ Vᵀ` by one-sided (Hestenes) Jacobi rotations.
///
/// Singular values come out with high relative accuracy when `G = X D` with
/// `X` well conditioned and `D` diagonal, which is the shape of every factor
/// the exponential maps and distances build. Returned in no particular order.
pub fn jacobi_svd(g: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let (m, n) = g.shape();
    let mut w = g.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let tol = f64::EPSILON * m as f64;
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
                for i in 0..m {
                    let (x, y) = (w[(i, p)], w[(i, q)]);
                    a += x * x;
                    b += y * y;
                    c += x * y;
                }
                if c == 0.0 || c.abs() <= tol * (a * b).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (b - a) / (2.0 * c);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for i in 0..m {
                    let (x, y) = (w[(i, p)], w[(i, q)]);
                    w[(i, p)] = cs * x - sn * y;
                    w[(i, q)] = sn * x + cs * y;
                }
                for i in 0..n {
                    let (x, y) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = cs * x - sn * y;
                    v[(i, q)] = sn * x + cs * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    for (j, &s) in sigma.iter().enumerate() {
        if s > 0.0 {
            w.column_mut(j).scale_mut(1.0 / s);
        }
    }
    (w, sigma, v)
}

/// `(a^p − b^p)/(a − b)` for positive `a, b`, computed without cancellation.
pub(crate) fn dd_power(a: f64, b: f64, p: f64, merge_tol: f64) -> f64 {
    if is_merged(a, b, merge_tol) {
        let m = 0.5 * (a + b);
        return p * m.powf(p - 1.0);
    }
    let u = log_ratio(a, b);
    b.powf(p - 1.0) * (p * u).exp_m1() / u.exp_m1()
}

/// `(ln a − ln b)/(a − b)` for positive `a, b`, computed without cancellation.
pub(crate) fn dd_log(a: f64, b: f64, merge_tol: f64) -> f64 {
    if is_merged(a, b, merge_tol) {
        return 2.0 / (a + b);
    }
    log_ratio(a, b) / (a - b)
}

/// `ln(a/b)`, through `ln_1p` only where `a/b` is near 1.
fn log_ratio(a: f64, b: f64) -> f64 {
    let x = (a - b) / b;
    if x.abs() < 0.5 {
        x.ln_1p()
    } else {
        (a / b).ln()
    }
}

#[cfg(test)]
pub(crate) mod test_util {
    use super::*;
    use rand::Rng;

    pub fn rng(seed: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(seed)
    }

    pub fn random_sym<R: Rng>(n: usize, rng: &mut R) -> SymMatrix {
        SymMatrix::from_fn(n, |_, _| StandardNormal.sample(rng))
    }

    /// SPD matrix with log-uniform spectrum in `[1/spread, spread]`.
    pub fn random_spd<R: Rng>(n: usize, spread: f64, rng: &mut R) -> SpdPoint {
        let q = haar_orthogonal_from(n, rng);
        let lam: Vec<f64> = (0..n)
            .map(|_| spread.powf(rng.random_range(-1.0..1.0)))
            .collect();
        SpdPoint::from_eigen(q, lam).unwrap()
    }

    pub fn rel_err(a: &SymMatrix, b: &SymMatrix) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }
}
