//! Riemannian Hessian conditioning at the minimizer of unit-weight least
//! squares as the condition number of the minimizer grows.

use ap_manifold::geometry::MetricSpec;
use ap_manifold::hessian::{fit_loglog_slope, spectrum_report};
use ap_manifold::problems::{make_pstar, SpectrumRecipe, SpectrumStyle, WlsProblem};
use ap_manifold::Result;

fn main() -> Result<()> {
    let kappas = [1e1, 1e2, 1e3, 1e4];
    for metric in [
        MetricSpec::AffineInvariant,
        MetricSpec::log_euclidean(),
        MetricSpec::bures_wasserstein(),
        MetricSpec::alpha(1.0),
        MetricSpec::alpha(1.5),
    ] {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for &kappa in &kappas {
            let ps = make_pstar(&SpectrumRecipe {
                n: 8,
                kappa,
                style: SpectrumStyle::DecayFromOne,
                seed: 0,
            })?;
            let rep = spectrum_report(&WlsProblem::unit_weights(&ps), &ps, metric, 1.0, None)?;
            xs.push(rep.kappa_p);
            ys.push(rep.kappa_hess);
        }
        let row: Vec<String> = ys.iter().map(|y| format!("{y:>10.3e}")).collect();
        println!("{:<6} {} slope {:.3}", metric.slug(), row.join(" "), fit_loglog_slope(&xs, &ys));
    }
    Ok(())
}
