//! Matrix representations of Euclidean and Riemannian Hessians in the
//! eigen-adapted basis `B_P`, and spectrum reports at critical points.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    coord_slot, coords_to_tilde, eigen_weights, tangent_dim, tilde_to_coords, MetricSpec,
    TangentCoords,
};
use crate::linalg::SpdPoint;
use crate::problems::ObjectiveProblem;

/// Gradient-norm threshold below which a point counts as critical.
pub const REPORT_GRAD_TOL: f64 = 1e-6;

/// `[∇²f(P)]_{kl} = ⟨Ê_k, ∇²f(P)[Ê_l]⟩_F`, symmetrized.
pub fn euclidean_hessian_matrix(problem: &dyn ObjectiveProblem, p: &SpdPoint) -> DMatrix<f64> {
    let n = p.dim();
    let d = tangent_dim(n);
    let op = problem.ehess_rotated(p.mat(), p.q());
    let mut h = DMatrix::zeros(d, d);
    for l in 0..d {
        let mut e = DVector::zeros(d);
        e[l] = 1.0;
        let col = tilde_to_coords(&op(&coords_to_tilde(n, &TangentCoords(e))));
        h.set_column(l, &col.0);
    }
    let ht = h.transpose();
    (h + ht) * 0.5
}

/// Diagonal of the metric operator in `B_P`.
pub fn metric_matrix_diagonal(p: &SpdPoint, metric: MetricSpec) -> Vec<f64> {
    let w = eigen_weights(p, metric);
    let n = p.dim();
    (0..tangent_dim(n))
        .map(|k| {
            let (i, j) = coord_slot(n, k);
            w[(i, j)]
        })
        .collect()
}

/// `[Hess] = [M]⁻¹ [∇²f]` together with its spectrum.
#[derive(Clone, Debug)]
pub struct RiemannianHessian {
    /// `[M]⁻¹ [∇²f]` (not symmetric in general).
    pub matrix: DMatrix<f64>,
    /// `[M]^{−1/2} [∇²f] [M]^{−1/2}`, similar to `matrix`.
    pub symmetrized: DMatrix<f64>,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
}

impl RiemannianHessian {
    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn lambda_max(&self) -> f64 {
        *self.eigenvalues.last().expect("nonempty spectrum")
    }
}

fn sorted_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Riemannian Hessian matrix at a (near-)critical point. The identity
/// `[Hess] = [M]⁻¹[∇²f]` ignores connection terms, which vanish with the
/// gradient.
pub fn riemannian_hessian_matrix(
    problem: &dyn ObjectiveProblem,
    p: &SpdPoint,
    metric: MetricSpec,
) -> RiemannianHessian {
    let h = euclidean_hessian_matrix(problem, p);
    let m = metric_matrix_diagonal(p, metric);
    let d = m.len();
    let matrix = DMatrix::from_fn(d, d, |k, l| h[(k, l)] / m[k]);
    let inv_sqrt: Vec<f64> = m.iter().map(|w| 1.0 / w.sqrt()).collect();
    let mut symmetrized = DMatrix::from_fn(d, d, |k, l| h[(k, l)] * inv_sqrt[k] * inv_sqrt[l]);
    let st = symmetrized.transpose();
    symmetrized = (symmetrized + st) * 0.5;
    let eigenvalues = sorted_eigenvalues(symmetrized.clone());
    RiemannianHessian {
        matrix,
        symmetrized,
        eigenvalues,
    }
}

/// Smoothness constants of the pulled-back cost, when known.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RtrConstants {
    pub beta_l2: f64,
    pub beta_h: f64,
    pub theta: f64,
}

/// Spectrum summary of the Riemannian Hessian at a minimizer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HessianReport {
    pub metric: String,
    /// Empty for the affine-invariant metric.
    pub alpha: Option<f64>,
    pub n: usize,
    pub kappa_p: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub kappa_hess: f64,
    /// Extreme eigenvalues of the Euclidean Hessian.
    pub mu_lower: f64,
    pub l_upper: f64,
    pub eta: f64,
    /// `max{|1 − ηλ_min|, |1 − ηλ_max|}`.
    pub rho_star: f64,
    pub c_alpha: Option<f64>,
}

impl HessianReport {
    /// `key=value` pairs in field order.
    pub fn to_record(&self) -> Vec<(&'static str, String)> {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        vec![
            ("metric", self.metric.clone()),
            ("alpha", opt(self.alpha)),
            ("n", self.n.to_string()),
            ("kappa_p", self.kappa_p.to_string()),
            ("lambda_min", self.lambda_min.to_string()),
            ("lambda_max", self.lambda_max.to_string()),
            ("kappa_hess", self.kappa_hess.to_string()),
            ("mu_lower", self.mu_lower.to_string()),
            ("l_upper", self.l_upper.to_string()),
            ("eta", self.eta.to_string()),
            ("rho_star", self.rho_star.to_string()),
            ("c_alpha", opt(self.c_alpha)),
        ]
    }
}

/// Lower bound on the local superlinear-rate constant of RTR.
pub fn rtr_rate_constant(mu: f64, l: f64, k: &RtrConstants) -> f64 {
    (k.beta_l2 / (mu * mu) + k.beta_h / mu) * l * l / mu + l.powf(1.0 + k.theta) / mu
}

pub fn contraction_factor(eta: f64, lambda_min: f64, lambda_max: f64) -> f64 {
    (1.0 - eta * lambda_min).abs().max((1.0 - eta * lambda_max).abs())
}

/// Fails with [`Error::NotCritical`] if `‖∇f(P*)‖_F > tol`.
pub fn check_critical(problem: &dyn ObjectiveProblem, p: &SpdPoint, tol: f64) -> Result<()> {
    let grad_norm = problem.egrad(p.mat()).norm();
    if grad_norm > tol {
        return Err(Error::NotCritical { grad_norm, tol });
    }
    Ok(())
}

pub fn spectrum_report(
    problem: &dyn ObjectiveProblem,
    p_star: &SpdPoint,
    metric: MetricSpec,
    eta: f64,
    constants: Option<RtrConstants>,
) -> Result<HessianReport> {
    check_critical(problem, p_star, REPORT_GRAD_TOL)?;
    let rh = riemannian_hessian_matrix(problem, p_star, metric);
    let euc = sorted_eigenvalues(euclidean_hessian_matrix(problem, p_star));
    let (lmin, lmax) = (rh.lambda_min(), rh.lambda_max());
    Ok(HessianReport {
        metric: metric.to_string(),
        alpha: metric.alpha_value(),
        n: p_star.dim(),
        kappa_p: p_star.condition_number(),
        lambda_min: lmin,
        lambda_max: lmax,
        kappa_hess: lmax / lmin,
        mu_lower: euc[0],
        l_upper: *euc.last().expect("nonempty spectrum"),
        eta,
        rho_star: contraction_factor(eta, lmin, lmax),
        c_alpha: constants.map(|k| rtr_rate_constant(lmin, lmax, &k)),
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2, "need at least two points");
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{basis_element, from_coords, metric_weights, to_coords};
    use crate::linalg::test_util::*;
    use crate::problems::{
        make_pstar, SpectrumRecipe, SpectrumStyle, SylvesterProblem, WlsProblem,
    };
    use crate::submersion::lifted_hessian_oracle;

    fn unit_wls(n: usize, kappa: f64, seed: u64) -> (WlsProblem, SpdPoint) {
        let ps = make_pstar(&SpectrumRecipe {
            n,
            kappa,
            style: SpectrumStyle::DecayFromOne,
            seed,
        })
        .unwrap();
        (WlsProblem::unit_weights(&ps), ps)
    }

    #[test]
    fn identity_euclidean_hessian() {
        let (prob, ps) = unit_wls(4, 10.0, 0);
        let h = euclidean_hessian_matrix(&prob, &ps);
        assert!((h - DMatrix::identity(10, 10)).norm() < 1e-12);
    }

    #[test]
    fn assembly_matches_basis_definition() {
        let mut r = rng(53);
        let a = random_spd(3, 5.0, &mut r);
        let b = random_spd(3, 5.0, &mut r);
        let ps = random_spd(3, 5.0, &mut r);
        let prob = SylvesterProblem::with_minimizer(a, b, &ps);
        let h = euclidean_hessian_matrix(&prob, &ps);
        for k in 0..6 {
            for l in 0..6 {
                let ek = basis_element(&ps, k);
                let el = basis_element(&ps, l);
                let want = ek.frobenius_inner(&prob.ehess(ps.mat(), &el));
                assert!((h[(k, l)] - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn wls_standard_basis_hessian() {
        let mut r = rng(50);
        let a = random_sym(3, &mut r);
        let b = random_sym(3, &mut r);
        let prob = WlsProblem::new(a.clone(), b).unwrap();
        let h = euclidean_hessian_matrix(&prob, &SpdPoint::identity(3));
        let am = a.as_matrix();
        let want: Vec<f64> = (0..6)
            .map(|k| {
                let (i, j) = coord_slot(3, k);
                am[(i, j)].powi(2)
            })
            .collect();
        assert!((h - DMatrix::from_diagonal(&DVector::from_vec(want))).norm() < 1e-12);
    }

    #[test]
    fn sylvester_hessian_bounds() {
        let mut r = rng(51);
        for n in 2..=6 {
            let a = random_spd(n, 5.0, &mut r);
            let b = random_spd(n, 5.0, &mut r);
            let ps = random_spd(n, 5.0, &mut r);
            let prob = SylvesterProblem::with_minimizer(a.clone(), b.clone(), &ps);
            let ev = sorted_eigenvalues(euclidean_hessian_matrix(&prob, &ps));
            let lo = a.lambda_min() + b.lambda_min();
            let hi = a.lambda_max() + b.lambda_max();
            assert!(ev[0] >= lo - 1e-10 && *ev.last().unwrap() <= hi + 1e-10);
        }
    }

    #[test]
    fn alpha_one_sandwich_small() {
        for &kappa in &[10.0, 1e4, 1e8] {
            let (prob, ps) = unit_wls(6, kappa, 1);
            let rh = riemannian_hessian_matrix(&prob, &ps, MetricSpec::alpha(1.0));
            assert!(rh.lambda_min() >= 1.0 - 1e-8 && rh.lambda_max() <= 2.0 + 1e-8);
        }
    }

    #[test]
    fn unit_wls_eigenvalues_are_inverse_weights() {
        let (prob, ps) = unit_wls(5, 100.0, 2);
        let w = metric_weights(&ps, 0.75);
        let mut want: Vec<f64> = w.metric_matrix_diagonal().iter().map(|v| 1.0 / v).collect();
        want.sort_by(f64::total_cmp);
        let rh = riemannian_hessian_matrix(&prob, &ps, MetricSpec::alpha(0.75));
        for (a, b) in rh.eigenvalues.iter().zip(&want) {
            assert!((a - b).abs() < 1e-10 * b);
        }
    }

    #[test]
    fn ai_identity() {
        let prob = WlsProblem::unit_weights(&SpdPoint::identity(3));
        let rh = riemannian_hessian_matrix(&prob, &SpdPoint::identity(3), MetricSpec::AffineInvariant);
        assert!((rh.matrix - DMatrix::identity(6, 6)).norm() < 1e-12);
    }

    #[test]
    fn degradation_bounds() {
        for &alpha in &[0.0, 0.5, 0.75, 1.25, 1.5] {
            for &kappa in &[10.0, 1e3] {
                let (prob, ps) = unit_wls(5, kappa, 3);
                let rh = riemannian_hessian_matrix(&prob, &ps, MetricSpec::alpha(alpha));
                let pw: Vec<f64> = ps.lambda().iter().map(|l| l.powf(2.0 * alpha - 2.0)).collect();
                let pmin = pw.iter().cloned().fold(f64::INFINITY, f64::min);
                let pmax = pw.iter().cloned().fold(0.0, f64::max);
                assert!(rh.lambda_max() >= 1.0 / pmin * (1.0 - 1e-10));
                assert!(rh.lambda_min() <= 1.0 / pmax * (1.0 + 1e-10));
            }
        }
    }

    #[test]
    fn matches_lifted_oracle() {
        let (prob, ps) = unit_wls(3, 10.0, 4);
        for &alpha in &[0.75, 1.0, 0.5] {
            let rh = riemannian_hessian_matrix(&prob, &ps, MetricSpec::alpha(alpha));
            let mut r = rng(52);
            let x = random_sym(3, &mut r);
            let c = to_coords(&ps, &x);
            let want = from_coords(&ps, &TangentCoords(&rh.matrix * &c.0));
            let got = lifted_hessian_oracle(&prob, &ps, alpha, &x).unwrap();
            assert!(rel_err(&got, &want) < 1e-5, "alpha {alpha}: {}", rel_err(&got, &want));
        }
    }

    #[test]
    fn report_fields() {
        let (prob, ps) = unit_wls(4, 100.0, 5);
        let rep = spectrum_report(&prob, &ps, MetricSpec::alpha(1.0), 0.5, None).unwrap();
        assert!(rep.kappa_hess >= 1.0);
        assert_eq!(rep.mu_lower, 1.0);
        assert!(rep.c_alpha.is_none());
        let eta = 1.0 / rep.lambda_max;
        let rep = spectrum_report(&prob, &ps, MetricSpec::alpha(1.0), eta, None).unwrap();
        assert!((rep.rho_star - (1.0 - rep.lambda_min / rep.lambda_max)).abs() < 1e-14);
        let k = RtrConstants {
            beta_l2: 1.0,
            beta_h: 1.0,
            theta: 1.0,
        };
        let rep = spectrum_report(&prob, &ps, MetricSpec::AffineInvariant, eta, Some(k)).unwrap();
        assert!(rep.alpha.is_none() && rep.c_alpha.unwrap() > 0.0);
        assert_eq!(rep.to_record().len(), 12);
    }

    #[test]
    fn report_refuses_noncritical() {
        let (prob, _) = unit_wls(3, 10.0, 6);
        let err = spectrum_report(&prob, &SpdPoint::identity(3), MetricSpec::alpha(1.0), 1.0, None);
        assert!(matches!(err, Err(Error::NotCritical { .. })));
    }

    #[test]
    fn slope_fit() {
        let x = [10.0, 100.0, 1000.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.5)).collect();
        assert!((fit_loglog_slope(&x, &y) - 1.5).abs() < 1e-12);
    }
}
