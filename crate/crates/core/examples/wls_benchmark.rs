//! Armijo steepest descent and trust regions on unit-weight least squares.

use ap_manifold::geometry::MetricSpec;
use ap_manifold::problems::{make_instance, InstanceSpec, ProblemKind};
use ap_manifold::{rsd_solve, rtr_solve, Result, RsdConfig, RtrConfig, SpdPoint};

fn main() -> Result<()> {
    let n = 20;
    for kappa in [10.0, 1e4] {
        let inst = make_instance(&InstanceSpec::new(ProblemKind::Wls, n, kappa, 0))?;
        let p0 = SpdPoint::identity(n);
        println!("kappa={kappa:e}");
        for metric in [MetricSpec::AffineInvariant, MetricSpec::bures_wasserstein(), MetricSpec::alpha(1.0)] {
            let rsd = rsd_solve(&inst.problem, metric, &p0, &RsdConfig::default(), Some(&inst.p_star))?;
            let rtr = rtr_solve(&inst.problem, metric, &p0, &RtrConfig::default(), Some(&inst.p_star))?;
            println!(
                "  {:<4} rsd {:>4} iters (converged {}), rtr {:>4} iters (converged {})",
                metric.slug(),
                rsd.iters,
                rsd.converged,
                rtr.iters,
                rtr.converged
            );
        }
    }
    Ok(())
}
