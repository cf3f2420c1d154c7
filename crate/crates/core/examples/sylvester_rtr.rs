//! Trust regions on the Sylvester-type objective `f(P) = tr(PAP) - tr(PC)`.

use ap_manifold::geometry::MetricSpec;
use ap_manifold::problems::{make_instance, InstanceSpec, ProblemKind, SpectrumStyle};
use ap_manifold::{rtr_solve, Result, RtrConfig, SpdPoint};

fn main() -> Result<()> {
    let n = 20;
    let spec = InstanceSpec::new(ProblemKind::Sylvester, n, 100.0, 1).with_spectrum(SpectrumStyle::centered());
    let inst = make_instance(&spec)?;
    let p0 = SpdPoint::identity(n);
    for metric in [
        MetricSpec::AffineInvariant,
        MetricSpec::log_euclidean(),
        MetricSpec::bures_wasserstein(),
        MetricSpec::alpha(1.0),
    ] {
        match rtr_solve(&inst.problem, metric, &p0, &RtrConfig::default(), Some(&inst.p_star)) {
            Ok(t) => println!(
                "{:<4} {:>4} iters, converged {}, |P - P*|_F {:.2e}",
                metric.slug(),
                t.iters,
                t.converged,
                t.final_dist().unwrap_or(f64::NAN)
            ),
            Err(e) => println!("{:<4} stopped: {e}", metric.slug()),
        }
    }
    Ok(())
}
