use serde::{Deserialize, Serialize};

use super::{evaluate, Recorder, RunTrace};
use crate::error::{Error, Result};
use crate::geometry::{exp_map, tangent_dim, LocalMetric, MetricSpec};
use crate::linalg::{SpdPoint, SymMatrix};
use crate::problems::ObjectiveProblem;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RtrConfig {
    pub delta0: f64,
    pub delta_max: f64,
    pub rho_accept: f64,
    pub rho_expand: f64,
    /// Ratio below which the radius contracts by a factor 4.
    pub rho_shrink: f64,
    pub tcg_kappa: f64,
    pub tcg_theta: f64,
    pub max_iters: usize,
    /// `None` means the manifold dimension `n(n+1)/2`.
    pub max_inner: Option<usize>,
    pub grad_tol: f64,
}

impl Default for RtrConfig {
    fn default() -> Self {
        RtrConfig {
            delta0: 1.0,
            delta_max: 100.0,
            rho_accept: 0.1,
            rho_expand: 0.75,
            rho_shrink: 0.25,
            tcg_kappa: 0.1,
            tcg_theta: 1.0,
            max_iters: 100,
            max_inner: None,
            grad_tol: 1e-6,
        }
    }
}

impl RtrConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.delta0 > 0.0
            && self.delta0 <= self.delta_max
            && self.rho_accept > 0.0
            && self.rho_accept < self.rho_expand
            && self.rho_expand < 1.0
            && self.rho_shrink > 0.0
            && self.rho_shrink < 1.0
            && self.tcg_kappa >= 0.0
            && self.tcg_theta > 0.0
            && self.grad_tol > 0.0;
        if !ok {
            return Err(Error::InvalidConfig(format!("invalid RTR configuration {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TcgStop {
    ResidualSmall,
    NegativeCurvature,
    Boundary,
    MaxInner,
}

#[derive(Clone, Copy, Debug)]
pub struct TcgParams {
    pub delta: f64,
    pub kappa: f64,
    pub theta: f64,
    pub max_inner: usize,
}

#[derive(Clone, Debug)]
pub struct TcgResult {
    pub eta: SymMatrix,
    pub h_eta: SymMatrix,
    pub inner_iters: usize,
    pub stop: TcgStop,
}

impl TcgResult {
    pub fn hit_boundary(&self) -> bool {
        matches!(self.stop, TcgStop::Boundary | TcgStop::NegativeCurvature)
    }
}

/// Value of `m(η) − f = ⟨g, η⟩ + ½⟨η, Hη⟩`.
fn model(inner: &dyn Fn(&SymMatrix, &SymMatrix) -> f64, g: &SymMatrix, eta: &SymMatrix, h_eta: &SymMatrix) -> f64 {
    inner(g, eta) + 0.5 * inner(eta, h_eta)
}

/// Minimizer of the model along `−g` within the trust region.
pub fn cauchy_point(
    grad: &SymMatrix,
    hess: &dyn Fn(&SymMatrix) -> SymMatrix,
    inner: &dyn Fn(&SymMatrix, &SymMatrix) -> f64,
    delta: f64,
) -> (SymMatrix, SymMatrix) {
    let gg = inner(grad, grad);
    let gnorm = gg.sqrt();
    if gnorm == 0.0 {
        return (grad.scale(0.0), grad.scale(0.0));
    }
    let hg = hess(grad);
    let ghg = inner(grad, &hg);
    let tau_max = delta / gnorm;
    let tau = if ghg > 0.0 { (gg / ghg).min(tau_max) } else { tau_max };
    (grad.scale(-tau), hg.scale(-tau))
}

/// Steihaug–Toint truncated conjugate gradient for
/// `min ⟨g, η⟩ + ½⟨η, Hη⟩` over `‖η‖ ≤ Δ`, in an arbitrary inner product.
pub fn truncated_cg(
    grad: &SymMatrix,
    hess: &dyn Fn(&SymMatrix) -> SymMatrix,
    inner: &dyn Fn(&SymMatrix, &SymMatrix) -> f64,
    params: &TcgParams,
) -> TcgResult {
    let delta2 = params.delta * params.delta;
    let mut eta = grad.scale(0.0);
    let mut h_eta = eta.clone();
    let mut r = grad.clone();
    let mut rr = inner(&r, &r);
    let r0 = rr.sqrt();
    let target = r0 * r0.powf(params.theta).min(params.kappa);
    let mut d = -&r;
    let (mut e_e, mut e_d, mut d_d) = (0.0, 0.0, rr);
    let mut stop = TcgStop::MaxInner;
    let mut j = 0;
    while j < params.max_inner {
        j += 1;
        let hd = hess(&d);
        let dhd = inner(&d, &hd);
        let alpha = rr / dhd;
        let e_e_new = e_e + 2.0 * alpha * e_d + alpha * alpha * d_d;
        if dhd <= 0.0 || e_e_new >= delta2 {
            let tau = (-e_d + (e_d * e_d + d_d * (delta2 - e_e)).max(0.0).sqrt()) / d_d;
            eta = &eta + &d.scale(tau);
            h_eta = &h_eta + &hd.scale(tau);
            stop = if dhd <= 0.0 {
                TcgStop::NegativeCurvature
            } else {
                TcgStop::Boundary
            };
            break;
        }
        e_e = e_e_new;
        eta = &eta + &d.scale(alpha);
        h_eta = &h_eta + &hd.scale(alpha);
        r = &r + &hd.scale(alpha);
        let rr_old = rr;
        rr = inner(&r, &r);
        if rr.sqrt() <= target {
            stop = TcgStop::ResidualSmall;
            break;
        }
        let beta = rr / rr_old;
        e_d = beta * (e_d + alpha * d_d);
        d_d = rr + beta * beta * d_d;
        d = &d.scale(beta) - &r;
    }
    // Rounding can push the CG iterate above the Cauchy model value.
    let (c, hc) = cauchy_point(grad, hess, inner, params.delta);
    if model(inner, grad, &c, &hc) < model(inner, grad, &eta, &h_eta) {
        let stop = if inner(&c, &c).sqrt() >= params.delta * (1.0 - 1e-12) {
            TcgStop::Boundary
        } else {
            stop
        };
        return TcgResult {
            eta: c,
            h_eta: hc,
            inner_iters: j,
            stop,
        };
    }
    TcgResult {
        eta,
        h_eta,
        inner_iters: j,
        stop,
    }
}

/// Riemannian trust-region method with a tCG inner solver. The model Hessian
/// is the Riesz representer of the Euclidean Hessian in the chosen metric.
pub fn rtr_solve(
    problem: &dyn ObjectiveProblem,
    metric: MetricSpec,
    p0: &SpdPoint,
    cfg: &RtrConfig,
    p_star: Option<&SpdPoint>,
) -> Result<RunTrace> {
    cfg.validate()?;
    let n = p0.dim();
    let max_inner = cfg.max_inner.unwrap_or(tangent_dim(n));
    let mut rec = Recorder::new(p_star, 1);
    let mut p = p0.clone();
    let (mut cost, mut eg) = evaluate(problem, &p);
    let mut delta = cfg.delta0;
    let mut k = 0;
    loop {
        let gnorm = eg.norm();
        rec.record(k, &p, cost, gnorm, false);
        if gnorm < cfg.grad_tol {
            return Ok(rec.finish(k, p, cost, gnorm, true));
        }
        if k == cfg.max_iters {
            return Ok(rec.finish(k, p, cost, gnorm, false));
        }

        let step = {
            let lm = LocalMetric::new(&p, metric);
            let gt = lm.gradient_tilde(&lm.to_tilde(&eg));
            let ehess = problem.ehess_rotated(p.mat(), p.q());
            let hess = |v: &SymMatrix| lm.gradient_tilde(&ehess(v));
            let inner = |a: &SymMatrix, b: &SymMatrix| lm.inner_tilde(a, b);
            let params = TcgParams {
                delta,
                kappa: cfg.tcg_kappa,
                theta: cfg.tcg_theta,
                max_inner,
            };
            let tcg = truncated_cg(&gt, &hess, &inner, &params);
            let decrease = -model(&inner, &gt, &tcg.eta, &tcg.h_eta);
            (lm.from_tilde(&tcg.eta), decrease, tcg.hit_boundary())
        };
        let (eta, model_decrease, boundary) = step;

        k += 1;
        match exp_map(&p, metric, &eta) {
            Err(Error::ExpDomainViolation { .. }) => {
                delta *= 0.25;
            }
            Err(e) => return Err(e),
            Ok(cand) => {
                let (c_cost, c_eg) = evaluate(problem, &cand);
                let reg = cost.abs().max(1.0) * f64::EPSILON * 1e3;
                let rho = (cost - c_cost + reg) / (model_decrease + reg);
                if !rho.is_finite() || rho < cfg.rho_shrink {
                    delta *= 0.25;
                } else if rho > cfg.rho_expand && boundary {
                    delta = (2.0 * delta).min(cfg.delta_max);
                }
                if rho.is_finite() && rho > cfg.rho_accept {
                    p = cand;
                    cost = c_cost;
                    eg = c_eg;
                }
            }
        }
        if delta < 1e-14 * cfg.delta_max {
            let gnorm = eg.norm();
            let trace = rec.finish(k, p, cost, gnorm, false);
            return Err(Error::StepFailure {
                iter: k,
                reason: format!("trust radius underflow ({delta:e})"),
                trace: Box::new(trace),
            });
        }
    }
}
