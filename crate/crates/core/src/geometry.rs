//! Metric layer: the Alpha-Procrustes family `g^{(α)}` for every real `α`
//! (Log-Euclidean at `α = 0`, scaled Bures–Wasserstein at `α = 1/2`) and the
//! affine-invariant metric.
//!
//! All AP quantities are evaluated in the eigenbasis of `P`, where the metric
//! operator is diagonal. Writing `X̃ = QᵀXQ`, every metric handled here takes
//! the form
//!
//! ```text
//! g_P(X, Y) = Σ_{i,j} W_ij X̃_ij Ỹ_ij
//! ```
//!
//! with `W_ii = w_ii`, `W_ij = w_ij / 2` (AP) or `W_ij = 1/(λ_i λ_j)` (AI).
//! [`LocalMetric`] caches `W` so optimizers pay for one eigendecomposition
//! per iterate.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dd_log, dd_power, jacobi_svd, SpdPoint, SymEigen, SymMatrix, MERGE_TOL};

/// `I + Y` must have smallest eigenvalue above this for the AP exponential map.
pub const EXP_DOMAIN_EPS: f64 = 1e-12;

/// Selects a Riemannian metric on SPD(n).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MetricSpec {
    AlphaProcrustes { alpha: f64 },
    AffineInvariant,
}

impl MetricSpec {
    pub fn alpha(alpha: f64) -> Self {
        assert!(alpha.is_finite(), "alpha must be finite");
        MetricSpec::AlphaProcrustes { alpha }
    }

    pub fn log_euclidean() -> Self {
        Self::alpha(0.0)
    }

    pub fn bures_wasserstein() -> Self {
        Self::alpha(0.5)
    }

    /// `α` for the AP family, `None` for AI.
    pub fn alpha_value(&self) -> Option<f64> {
        match *self {
            MetricSpec::AlphaProcrustes { alpha } => Some(alpha),
            MetricSpec::AffineInvariant => None,
        }
    }

    /// Short label used in tables and file names: `ai`, `le`, `bw`, `a0.75`.
    pub fn slug(&self) -> String {
        match *self {
            MetricSpec::AffineInvariant => "ai".into(),
            MetricSpec::AlphaProcrustes { alpha: 0.0 } => "le".into(),
            MetricSpec::AlphaProcrustes { alpha: 0.5 } => "bw".into(),
            MetricSpec::AlphaProcrustes { alpha } => format!("a{alpha}"),
        }
    }
}

impl fmt::Display for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            MetricSpec::AffineInvariant => write!(f, "AI"),
            MetricSpec::AlphaProcrustes { alpha: 0.0 } => write!(f, "LE (alpha=0)"),
            MetricSpec::AlphaProcrustes { alpha: 0.5 } => write!(f, "BW (alpha=0.5)"),
            MetricSpec::AlphaProcrustes { alpha } => write!(f, "alpha={alpha}"),
        }
    }
}

impl FromStr for MetricSpec {
    type Err = Error;

    /// Accepts `ai`, `le`, `bw`, a bare number, `alpha=<x>` or `a<x>`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        let parsed = match t.as_str() {
            "ai" | "affine" | "affine-invariant" => return Ok(MetricSpec::AffineInvariant),
            "le" | "log-euclidean" => Some(0.0),
            "bw" | "bures-wasserstein" => Some(0.5),
            other => {
                let num = other
                    .strip_prefix("alpha=")
                    .or_else(|| other.strip_prefix('a'))
                    .unwrap_or(other);
                num.parse::<f64>().ok()
            }
        };
        match parsed {
            Some(a) if a.is_finite() => Ok(MetricSpec::alpha(a)),
            _ => Err(Error::InvalidConfig(format!("unrecognised metric `{s}`"))),
        }
    }
}

/// Spectral weights of the AP metric operator at `P`.
#[derive(Clone, Debug)]
pub struct MetricWeights {
    /// `w_ii`.
    pub w_diag: Vec<f64>,
    /// `w_ij` for `i < j`, in row-major lexicographic order.
    pub w_offdiag: Vec<f64>,
    pub basis_q: DMatrix<f64>,
}

impl MetricWeights {
    pub fn dim(&self) -> usize {
        self.w_diag.len()
    }

    pub fn offdiag(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        self.w_offdiag[offdiag_slot(self.dim(), i, j)]
    }

    /// Diagonal of `[M_α(P)]_{B_P}`: `(w_11, …, w_nn, ½w_12, …, ½w_{n−1,n})`.
    pub fn metric_matrix_diagonal(&self) -> Vec<f64> {
        self.w_diag
            .iter()
            .copied()
            .chain(self.w_offdiag.iter().map(|w| 0.5 * w))
            .collect()
    }

    fn eigen_weight_matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                self.w_diag[i]
            } else {
                0.5 * self.offdiag(i, j)
            }
        })
    }
}

/// `w_ii = λ_i^{2α−2}`; off-diagonal weights from the divided differences of
/// `t^{2α}` (or `log t` at `α = 0`).
pub fn metric_weights(p: &SpdPoint, alpha: f64) -> MetricWeights {
    let lam = p.lambda();
    let n = lam.len();
    let w_diag = lam.iter().map(|&l| l.powf(2.0 * alpha - 2.0)).collect();
    let mut w_offdiag = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (lam[i], lam[j]);
            let w = if alpha == 0.0 {
                let d = dd_log(a, b, MERGE_TOL);
                2.0 * d * d
            } else {
                let p2 = 2.0 * alpha;
                let d = dd_power(a, b, p2, MERGE_TOL);
                d * d / (alpha * alpha * (a.powf(p2) + b.powf(p2)))
            };
            w_offdiag.push(w);
        }
    }
    MetricWeights {
        w_diag,
        w_offdiag,
        basis_q: p.q().clone(),
    }
}

/// Eigenbasis coefficients `c_ij` of `L_{P,α}`.
pub fn l_coefficients(p: &SpdPoint, alpha: f64) -> DMatrix<f64> {
    let lam = p.lambda();
    let n = lam.len();
    DMatrix::from_fn(n, n, |i, j| {
        let (a, b) = (lam[i], lam[j]);
        if i == j {
            0.5 / a
        } else if alpha == 0.0 {
            0.5 * dd_log(a, b, MERGE_TOL)
        } else {
            let p2 = 2.0 * alpha;
            dd_power(a, b, p2, MERGE_TOL) / (p2 * (a.powf(p2) + b.powf(p2)))
        }
    })
}

/// `H = L_{P,α}(Y)`: the symmetric solution of
/// `Dexp(log P) ∘ Dlog(P^{2α}) [H P^{2α} + P^{2α} H] = Y`.
pub fn l_operator(p: &SpdPoint, alpha: f64, y: &SymMatrix) -> SymMatrix {
    let c = l_coefficients(p, alpha);
    y.rotate_into(p.q()).hadamard_matrix(&c).rotate_out(p.q())
}

/// Full `n × n` eigenbasis weight matrix `W` (see module docs).
pub fn eigen_weights(p: &SpdPoint, metric: MetricSpec) -> DMatrix<f64> {
    match metric {
        MetricSpec::AlphaProcrustes { alpha } => metric_weights(p, alpha).eigen_weight_matrix(),
        MetricSpec::AffineInvariant => {
            let lam = p.lambda();
            let n = lam.len();
            DMatrix::from_fn(n, n, |i, j| 1.0 / (lam[i] * lam[j]))
        }
    }
}

/// A metric frozen at a base point: eigenbasis, weights, and the operations
/// optimizers need, on both ambient and eigenbasis ("tilde") representations.
#[derive(Clone, Debug)]
pub struct LocalMetric<'a> {
    pub point: &'a SpdPoint,
    pub metric: MetricSpec,
    weights: DMatrix<f64>,
}

impl<'a> LocalMetric<'a> {
    pub fn new(point: &'a SpdPoint, metric: MetricSpec) -> Self {
        LocalMetric {
            point,
            metric,
            weights: eigen_weights(point, metric),
        }
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn to_tilde(&self, x: &SymMatrix) -> SymMatrix {
        x.rotate_into(self.point.q())
    }

    pub fn from_tilde(&self, xt: &SymMatrix) -> SymMatrix {
        xt.rotate_out(self.point.q())
    }

    pub fn inner_tilde(&self, xt: &SymMatrix, yt: &SymMatrix) -> f64 {
        self.weights
            .iter()
            .zip(xt.as_matrix().iter().zip(yt.as_matrix().iter()))
            .map(|(w, (x, y))| w * x * y)
            .sum()
    }

    pub fn norm_tilde(&self, xt: &SymMatrix) -> f64 {
        self.inner_tilde(xt, xt).max(0.0).sqrt()
    }

    /// Riesz representer of a Euclidean gradient given in the eigenbasis.
    pub fn gradient_tilde(&self, egrad_t: &SymMatrix) -> SymMatrix {
        SymMatrix::new(egrad_t.as_matrix().component_div(&self.weights))
    }

    pub fn inner(&self, x: &SymMatrix, y: &SymMatrix) -> f64 {
        self.inner_tilde(&self.to_tilde(x), &self.to_tilde(y))
    }

    pub fn gradient(&self, egrad: &SymMatrix) -> SymMatrix {
        self.from_tilde(&self.gradient_tilde(&self.to_tilde(egrad)))
    }
}

/// `g_P(X, Y)` for the selected metric.
pub fn metric_inner(p: &SpdPoint, metric: MetricSpec, x: &SymMatrix, y: &SymMatrix) -> f64 {
    LocalMetric::new(p, metric).inner(x, y)
}

/// The tangent vector `G` with `g_P(G, V) = ⟨egrad, V⟩_F` for all `V`.
pub fn riemannian_gradient(p: &SpdPoint, metric: MetricSpec, egrad: &SymMatrix) -> SymMatrix {
    match metric {
        MetricSpec::AffineInvariant => {
            let pm = p.mat().as_matrix();
            SymMatrix::new(pm * egrad.as_matrix() * pm)
        }
        MetricSpec::AlphaProcrustes { .. } => LocalMetric::new(p, metric).gradient(egrad),
    }
}

/// SPD point `(Q G)(Q G)ᵀ` raised to `power / 2`, from the left singular
/// system of `G`.
fn spd_from_factor(q: &DMatrix<f64>, g: &DMatrix<f64>, power: f64) -> Result<SpdPoint> {
    let (u, sigma, _) = jacobi_svd(g);
    let vals = sigma.iter().map(|&s| s.powf(power)).collect();
    SpdPoint::from_sym_eigen(SymEigen::from_parts(q * u, vals), 0.0)
}

/// Riemannian exponential map `Exp_P(X)`.
///
/// * `α ≠ 0`: `((I+Y) P^{2α} (I+Y))^{1/(2α)}` with `Y = L_{P,α}(2αX)`;
///   fails with [`Error::ExpDomainViolation`] unless `I + Y ≻ 0`.
/// * `α = 0`: `exp(log P + Dlog(P)[X])`.
/// * AI: `P^{1/2} exp(P^{−1/2} X P^{−1/2}) P^{1/2}`.
pub fn exp_map(p: &SpdPoint, metric: MetricSpec, x: &SymMatrix) -> Result<SpdPoint> {
    // the factorized paths below reproduce P only up to rounding
    if x.as_matrix().iter().all(|v| *v == 0.0) {
        return Ok(p.clone());
    }
    let n = p.dim();
    let q = p.q();
    let lam = p.lambda();
    match metric {
        MetricSpec::AlphaProcrustes { alpha } if alpha != 0.0 => {
            let yt = x
                .rotate_into(q)
                .hadamard_matrix(&l_coefficients(p, alpha))
                .scale(2.0 * alpha);
            let shifted = &SymMatrix::identity(n) + &yt;
            let min_eig = SymEigen::new(&shifted)
                .values()
                .last()
                .copied()
                .unwrap_or(1.0);
            if !(min_eig > EXP_DOMAIN_EPS) {
                return Err(Error::ExpDomainViolation { min_eig });
            }
            // G = (I + Ỹ) Λ^α, so (QG)(QG)ᵀ = (I+Y) P^{2α} (I+Y).
            let mut g = shifted.into_inner();
            for (j, &l) in lam.iter().enumerate() {
                g.column_mut(j).scale_mut(l.powf(alpha));
            }
            spd_from_factor(q, &g, 1.0 / alpha)
        }
        MetricSpec::AlphaProcrustes { .. } => {
            let dlog = DMatrix::from_fn(n, n, |i, j| dd_log(lam[i], lam[j], MERGE_TOL));
            let xt = x.rotate_into(q).hadamard_matrix(&dlog);
            let logl = SymMatrix::from_diagonal(&lam.iter().map(|l| l.ln()).collect::<Vec<_>>());
            let inner = (&logl + &xt).rotate_out(q);
            let eig = SymEigen::new(&inner).map(f64::exp)?;
            SpdPoint::from_sym_eigen(eig, 0.0)
        }
        MetricSpec::AffineInvariant => {
            let xt = x.rotate_into(q);
            let z = SymMatrix::from_fn(n, |i, j| {
                xt.as_matrix()[(i, j)] / (lam[i] * lam[j]).sqrt()
            });
            let ze = SymEigen::new(&z);
            // G = Λ^{1/2} V e^{μ/2}
            let mut g = ze.q().clone();
            for (j, &mu) in ze.values().iter().enumerate() {
                g.column_mut(j).scale_mut((0.5 * mu).exp());
            }
            for (i, &l) in lam.iter().enumerate() {
                g.row_mut(i).scale_mut(l.sqrt());
            }
            spd_from_factor(q, &g, 2.0)
        }
    }
}

/// Geodesic distance between `P` and `R`.
///
/// For `α ≠ 0` this evaluates
/// `(1/|α|) (tr(P^{2α} + R^{2α} − 2 (P^α R^{2α} P^α)^{1/2}))^{1/2}`
/// in its equivalent Procrustes form `min_U ‖P^α − R^α U‖_F / |α|`, which forms
/// the residual directly instead of cancelling traces.
pub fn distance(p: &SpdPoint, r: &SpdPoint, metric: MetricSpec) -> f64 {
    match metric {
        MetricSpec::AlphaProcrustes { alpha } if alpha != 0.0 => {
            let a = p.powf(alpha).into_inner();
            let b = r.powf(alpha).into_inner();
            let (u, _, v) = jacobi_svd(&(&b * &a));
            let w = u * v.transpose();
            (a - b * w).norm() / alpha.abs()
        }
        MetricSpec::AlphaProcrustes { .. } => (p.log() - r.log()).norm(),
        MetricSpec::AffineInvariant => {
            let lam = p.lambda();
            let rt = r.mat().rotate_into(p.q());
            let n = lam.len();
            let c = SymMatrix::from_fn(n, |i, j| {
                rt.as_matrix()[(i, j)] / (lam[i] * lam[j]).sqrt()
            });
            SymEigen::new(&c)
                .values()
                .iter()
                .map(|m| m.ln().powi(2))
                .sum::<f64>()
                .sqrt()
        }
    }
}

/// The trace closed form of the AP distance (`α ≠ 0`), argument clamped at 0.
pub fn distance_closed_form(p: &SpdPoint, r: &SpdPoint, alpha: f64) -> f64 {
    assert!(alpha != 0.0);
    let pa = p.powf(alpha);
    let r2a = r.powf(2.0 * alpha);
    let mid = SymMatrix::new(pa.as_matrix() * r2a.as_matrix() * pa.as_matrix());
    let root_trace: f64 = SymEigen::new(&mid)
        .values()
        .iter()
        .map(|v| v.max(0.0).sqrt())
        .sum();
    let arg = p.powf(2.0 * alpha).trace() + r2a.trace() - 2.0 * root_trace;
    arg.max(0.0).sqrt() / alpha.abs()
}

/// Coordinates in the eigen-adapted Frobenius-orthonormal basis `B_P`:
/// `n` diagonal slots then the `(i, j)`, `i < j`, slots in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentCoords(pub DVector<f64>);

impl TangentCoords {
    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn dot(&self, other: &TangentCoords) -> f64 {
        self.0.dot(&other.0)
    }
}

pub fn tangent_dim(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Index of the off-diagonal pair `(i, j)`, `i < j`, among off-diagonal slots.
pub fn offdiag_slot(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// Matrix position `(i, j)` of coordinate slot `k`.
pub fn coord_slot(n: usize, k: usize) -> (usize, usize) {
    if k < n {
        return (k, k);
    }
    let mut rest = k - n;
    for i in 0..n {
        let row = n - i - 1;
        if rest < row {
            return (i, i + 1 + rest);
        }
        rest -= row;
    }
    panic!("coordinate slot {k} out of range for n = {n}");
}

/// Coordinates of an eigenbasis-represented symmetric matrix.
pub fn tilde_to_coords(yt: &SymMatrix) -> TangentCoords {
    let n = yt.dim();
    let m = yt.as_matrix();
    let mut c = Vec::with_capacity(tangent_dim(n));
    c.extend((0..n).map(|i| m[(i, i)]));
    for i in 0..n {
        for j in (i + 1)..n {
            c.push(std::f64::consts::SQRT_2 * m[(i, j)]);
        }
    }
    TangentCoords(DVector::from_vec(c))
}

pub fn coords_to_tilde(n: usize, c: &TangentCoords) -> SymMatrix {
    assert_eq!(c.0.len(), tangent_dim(n));
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = c.0[i];
    }
    let mut k = n;
    for i in 0..n {
        for j in (i + 1)..n {
            let v = c.0[k] * std::f64::consts::FRAC_1_SQRT_2;
            m[(i, j)] = v;
            m[(j, i)] = v;
            k += 1;
        }
    }
    SymMatrix::new(m)
}

pub fn to_coords(p: &SpdPoint, y: &SymMatrix) -> TangentCoords {
    tilde_to_coords(&y.rotate_into(p.q()))
}

pub fn from_coords(p: &SpdPoint, c: &TangentCoords) -> SymMatrix {
    coords_to_tilde(p.dim(), c).rotate_out(p.q())
}

/// Basis element `Ê^{(k)}` of `B_P`.
pub fn basis_element(p: &SpdPoint, k: usize) -> SymMatrix {
    let d = tangent_dim(p.dim());
    let mut e = DVector::zeros(d);
    e[k] = 1.0;
    from_coords(p, &TangentCoords(e))
}
