//! Fixed-step descent on trace regression, with the step taken from the
//! Hessian spectrum at the noiseless minimizer.

use ap_manifold::geometry::MetricSpec;
use ap_manifold::optim::{make_step_rule_reference, StepRule};
use ap_manifold::problems::{make_instance, InstanceSpec, ProblemKind};
use ap_manifold::{rsd_solve, Result, RsdConfig, SpdPoint};

fn main() -> Result<()> {
    let n = 6;
    let mut spec = InstanceSpec::new(ProblemKind::TraceRegression, n, 10.0, 2);
    spec.sigma = 0.0;
    let inst = make_instance(&spec)?;
    let clean = inst.noiseless.as_ref().unwrap_or(&inst.problem);
    for metric in [MetricSpec::AffineInvariant, MetricSpec::bures_wasserstein(), MetricSpec::alpha(1.0)] {
        let eta = make_step_rule_reference(metric, clean, &inst.p_star)?;
        let cfg = RsdConfig {
            step_rule: StepRule::Fixed { eta },
            max_iters: 5000,
            ..RsdConfig::default()
        };
        let t = rsd_solve(clean, metric, &SpdPoint::identity(n), &cfg, Some(&inst.p_star))?;
        println!(
            "{:<4} eta {:.3e}: {} iters, converged {}, |P - P*|_F {:.2e}",
            metric.slug(),
            eta,
            t.iters,
            t.converged,
            t.final_dist().unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
