//! The submersion `π_α(A) = (α² A Aᵀ)^{1/(2α)}` from invertible matrices onto
//! SPD(n), its differential, the horizontal projection, and a
//! finite-difference Riemannian Hessian built from horizontal lifts.
//!
//! The Hessian here is a test oracle: it costs `O(d)` Lyapunov solves and two
//! lifted-gradient evaluations per direction and is never used by solvers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{coords_to_tilde, tangent_dim, tilde_to_coords};
use crate::linalg::{frechet_derivative, jacobi_svd, lyapunov_solve, SpdPoint, SymEigen, SymMatrix};
use crate::problems::ObjectiveProblem;

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha == 0.0 || !alpha.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "submersion needs finite nonzero alpha, got {alpha}"
        )));
    }
    Ok(())
}

/// `π_α(A)`.
pub fn pi_alpha(a: &DMatrix<f64>, alpha: f64) -> Result<SpdPoint> {
    check_alpha(alpha)?;
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.ncols(),
        });
    }
    // α A = U Σ Vᵀ, so α² A Aᵀ = U Σ² Uᵀ.
    let (u, s, _) = jacobi_svd(&(a * alpha));
    let smax = s.iter().cloned().fold(0.0, f64::max);
    let smin = s.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(smin > smax * n as f64 * f64::EPSILON) {
        return Err(Error::SingularInput);
    }
    let vals = s.iter().map(|&x| x.powf(1.0 / alpha)).collect();
    SpdPoint::from_sym_eigen(SymEigen::from_parts(u, vals), 0.0)
}

/// `K = Dexp(log P) ∘ Dlog(P^{2α})`, a self-adjoint map on Sym(n).
fn k_operator(p: &SpdPoint, alpha: f64, e: &SymMatrix) -> Result<SymMatrix> {
    let p2a = p.eigen().map(|l| l.powf(2.0 * alpha))?;
    let dlog = frechet_derivative(&p2a, f64::ln, |t| 1.0 / t, e)?;
    frechet_derivative(&p.log_eigen(), f64::exp, f64::exp, &dlog)
}

fn sym_product(x: &DMatrix<f64>, a: &DMatrix<f64>) -> SymMatrix {
    let xa = x * a.transpose();
    SymMatrix::new(&xa + xa.transpose())
}

/// `Dπ_α(A)[X] = (α/2) K[X Aᵀ + A Xᵀ]` at `P = π_α(A)`.
pub fn d_pi_alpha(a: &DMatrix<f64>, alpha: f64, x: &DMatrix<f64>) -> Result<SymMatrix> {
    let p = pi_alpha(a, alpha)?;
    d_pi_at(&p, a, alpha, x)
}

fn d_pi_at(p: &SpdPoint, a: &DMatrix<f64>, alpha: f64, x: &DMatrix<f64>) -> Result<SymMatrix> {
    Ok(k_operator(p, alpha, &sym_product(x, a))?.scale(0.5 * alpha))
}

/// Frobenius-orthogonal projection onto the horizontal space `Sym(n)·A`:
/// `S_Z A` with `S_Z (AAᵀ) + (AAᵀ) S_Z = Z Aᵀ + A Zᵀ`.
pub fn horizontal_project(a: &DMatrix<f64>, z: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let gram = SpdPoint::new(SymMatrix::new(a * a.transpose())).map_err(|_| Error::SingularInput)?;
    if !(gram.lambda_min() > gram.lambda_max() * f64::EPSILON) {
        return Err(Error::SingularInput);
    }
    let s = lyapunov_solve(&gram, &sym_product(z, a));
    Ok(s.as_matrix() * a)
}

/// The symmetric representative `A₀ = P^α / α` of the fiber over `P`.
pub fn fiber_base(p: &SpdPoint, alpha: f64) -> DMatrix<f64> {
    p.powf(alpha).into_inner() / alpha
}

/// Horizontal lift of `X ∈ T_P SPD(n)` at `A`: the unique `S·A`, `S`
/// symmetric, with `Dπ_α(A)[S·A] = X`. Solved as a `d × d` linear system.
pub fn horizontal_lift(a: &DMatrix<f64>, alpha: f64, x: &SymMatrix) -> Result<DMatrix<f64>> {
    let p = pi_alpha(a, alpha)?;
    let n = p.dim();
    let d = tangent_dim(n);
    let mut sys = DMatrix::zeros(d, d);
    for k in 0..d {
        let mut e = DVector::zeros(d);
        e[k] = 1.0;
        let s = coords_to_tilde(n, &crate::geometry::TangentCoords(e));
        let img = d_pi_at(&p, a, alpha, &(s.as_matrix() * a))?;
        sys.set_column(k, &tilde_to_coords(&img).0);
    }
    let rhs = tilde_to_coords(x).0;
    let coeffs = sys.lu().solve(&rhs).ok_or(Error::SingularInput)?;
    let s = coords_to_tilde(n, &crate::geometry::TangentCoords(coeffs));
    Ok(s.as_matrix() * a)
}

/// Euclidean gradient of `f ∘ π_α` at `A`: `α K[∇f(π_α(A))] A`.
pub fn lifted_gradient(
    problem: &dyn ObjectiveProblem,
    a: &DMatrix<f64>,
    alpha: f64,
) -> Result<DMatrix<f64>> {
    let p = pi_alpha(a, alpha)?;
    let g = problem.egrad(p.mat());
    Ok(k_operator(&p, alpha, &g)?.as_matrix() * a * alpha)
}

/// Default relative finite-difference step of [`lifted_hessian_oracle`].
pub const ORACLE_REL_STEP: f64 = 1e-5;

/// `Hess f(P)[X] = Dπ_α(A₀)[P_H(D(∇f̃)(A₀)[X̃])]` with `A₀ = P^α/α`, `X̃` the
/// horizontal lift of `X`, and the directional derivative by central
/// differences.
pub fn lifted_hessian_oracle(
    problem: &dyn ObjectiveProblem,
    p: &SpdPoint,
    alpha: f64,
    x: &SymMatrix,
) -> Result<SymMatrix> {
    lifted_hessian_oracle_with_step(problem, p, alpha, x, ORACLE_REL_STEP)
}

/// As [`lifted_hessian_oracle`] with absolute step `rel_step · ‖A₀‖_F / ‖X̃‖_F`.
pub fn lifted_hessian_oracle_with_step(
    problem: &dyn ObjectiveProblem,
    p: &SpdPoint,
    alpha: f64,
    x: &SymMatrix,
    rel_step: f64,
) -> Result<SymMatrix> {
    check_alpha(alpha)?;
    let n = p.dim();
    if x.norm() == 0.0 {
        return Ok(SymMatrix::zeros(n));
    }
    let a0 = fiber_base(p, alpha);
    let xl = horizontal_lift(&a0, alpha, x)?;
    let h = rel_step * a0.norm() / xl.norm();
    let gp = lifted_gradient(problem, &(&a0 + &xl * h), alpha)?;
    let gm = lifted_gradient(problem, &(&a0 - &xl * h), alpha)?;
    let dgrad = (gp - gm) / (2.0 * h);
    let hor = horizontal_project(&a0, &dgrad)?;
    d_pi_at(p, &a0, alpha, &hor)
}
