//! Metrics, gradients, exponential maps and distances at one SPD point.

use ap_manifold::geometry::{metric_weights, MetricSpec};
use ap_manifold::linalg::{haar_orthogonal, SpdPoint, SymMatrix};
use ap_manifold::{distance, exp_map, metric_inner, riemannian_gradient, Result};

fn main() -> Result<()> {
    let p = SpdPoint::from_eigen(haar_orthogonal(3, 7), vec![4.0, 1.0, 0.25])?;
    let x = SymMatrix::from_fn(3, |i, j| if i == j { 0.1 } else { 0.05 * (i + j) as f64 });
    let egrad = SymMatrix::identity(3);

    let w = metric_weights(&p, 1.0);
    println!("alpha=1 weights: diag {:?}, w_01 {:.4}", w.w_diag, w.offdiag(0, 1));

    let metrics = [
        MetricSpec::log_euclidean(),
        MetricSpec::bures_wasserstein(),
        MetricSpec::alpha(1.0),
        MetricSpec::alpha(1.5),
        MetricSpec::AffineInvariant,
    ];
    println!("{:<6} {:>12} {:>12} {:>12}", "metric", "|X|_g", "|grad|_g", "d(P,Exp X)");
    for m in metrics {
        let q = exp_map(&p, m, &x)?;
        let grad = riemannian_gradient(&p, m, &egrad);
        println!(
            "{:<6} {:>12.6} {:>12.6} {:>12.6}",
            m.slug(),
            metric_inner(&p, m, &x, &x).sqrt(),
            metric_inner(&p, m, &grad, &grad).sqrt(),
            distance(&p, &q, m)
        );
    }
    Ok(())
}
