use serde::{Deserialize, Serialize};

use super::{evaluate, Recorder, RunTrace};
use crate::error::{Error, Result};
use crate::geometry::{exp_map, LocalMetric, MetricSpec};
use crate::hessian::spectrum_report;
use crate::linalg::SpdPoint;
use crate::problems::ObjectiveProblem;

/// Halvings allowed when a fixed step leaves the exponential-map domain.
const FIXED_DOMAIN_BACKTRACKS: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum StepRule {
    Fixed {
        eta: f64,
    },
    Armijo {
        initial: f64,
        shrink: f64,
        c1: f64,
        max_backtracks: usize,
    },
}

impl Default for StepRule {
    fn default() -> Self {
        StepRule::Armijo {
            initial: 1.0,
            shrink: 0.5,
            c1: 1e-4,
            max_backtracks: 30,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RsdConfig {
    pub step_rule: StepRule,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub record_every: usize,
}

impl Default for RsdConfig {
    fn default() -> Self {
        RsdConfig {
            step_rule: StepRule::default(),
            max_iters: 200,
            grad_tol: 1e-6,
            record_every: 1,
        }
    }
}

impl RsdConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = match self.step_rule {
            StepRule::Fixed { eta } => eta > 0.0 && eta.is_finite(),
            StepRule::Armijo {
                initial,
                shrink,
                c1,
                ..
            } => initial > 0.0 && shrink > 0.0 && shrink < 1.0 && c1 > 0.0 && c1 < 1.0,
        };
        if !ok || !(self.grad_tol > 0.0) {
            return Err(Error::InvalidConfig(format!("invalid RSD configuration {self:?}")));
        }
        Ok(())
    }
}

/// `P_{k+1} = Exp_{P_k}(−t_k grad f(P_k))`.
pub fn rsd_solve(
    problem: &dyn ObjectiveProblem,
    metric: MetricSpec,
    p0: &SpdPoint,
    cfg: &RsdConfig,
    p_star: Option<&SpdPoint>,
) -> Result<RunTrace> {
    cfg.validate()?;
    let mut rec = Recorder::new(p_star, cfg.record_every);
    let mut p = p0.clone();
    let (mut cost, mut eg) = evaluate(problem, &p);
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

        let lm = LocalMetric::new(&p, metric);
        let eg_t = lm.to_tilde(&eg);
        let gt = lm.gradient_tilde(&eg_t);
        let gg = eg_t.frobenius_inner(&gt);
        let dir = -lm.from_tilde(&gt);

        let (mut t, shrink, c1, max_bt) = match cfg.step_rule {
            StepRule::Fixed { eta } => (eta, 0.5, None, FIXED_DOMAIN_BACKTRACKS),
            StepRule::Armijo {
                initial,
                shrink,
                c1,
                max_backtracks,
            } => (initial, shrink, Some(c1), max_backtracks),
        };
        // Rounding floor on cost comparisons near convergence.
        let slack = 4.0 * f64::EPSILON * cost.abs();
        let mut accepted = None;
        let mut last_reason = String::new();
        for _ in 0..=max_bt {
            match exp_map(&p, metric, &(&dir * t)) {
                Err(Error::ExpDomainViolation { min_eig }) => {
                    last_reason = format!("exp-map domain violation (min eig {min_eig:e}) at step {t:e}");
                    t *= 0.5;
                }
                Err(e) => return Err(e),
                Ok(cand) => {
                    let c_cost = problem.cost(cand.mat());
                    match c1 {
                        None => {
                            accepted = Some((cand, c_cost));
                            break;
                        }
                        Some(c1) if c_cost <= cost - c1 * t * gg + slack => {
                            accepted = Some((cand, c_cost));
                            break;
                        }
                        Some(_) => {
                            last_reason = format!("no sufficient decrease down to step {t:e}");
                            t *= shrink;
                        }
                    }
                }
            }
        }
        let Some((next, next_cost)) = accepted else {
            let trace = rec.finish(k, p, cost, gnorm, false);
            return Err(Error::StepFailure {
                iter: k,
                reason: last_reason,
                trace: Box::new(trace),
            });
        };
        p = next;
        cost = next_cost;
        eg = problem.egrad(p.mat());
        k += 1;
    }
}

/// The step `η = 1/λ_max([Hess f(P*)])` used for fixed-step RSD.
pub fn make_step_rule_reference(
    metric: MetricSpec,
    problem: &dyn ObjectiveProblem,
    p_star: &SpdPoint,
) -> Result<f64> {
    let rep = spectrum_report(problem, p_star, metric, 1.0, None)?;
    Ok(1.0 / rep.lambda_max)
}
