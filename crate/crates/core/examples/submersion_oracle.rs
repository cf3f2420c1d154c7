//! Compares the closed-form Riemannian Hessian with the finite-difference
//! oracle built on the quotient map `A -> (a^2 A A^T)^(1/(2a))`.

use ap_manifold::geometry::{basis_element, tangent_dim, to_coords, MetricSpec};
use ap_manifold::hessian::riemannian_hessian_matrix;
use ap_manifold::linalg::{haar_orthogonal, SpdPoint, SymMatrix};
use ap_manifold::problems::WlsProblem;
use ap_manifold::submersion::{fiber_base, lifted_hessian_oracle, pi_alpha};
use ap_manifold::Result;
use nalgebra::DMatrix;

fn main() -> Result<()> {
    let ps = SpdPoint::from_eigen(haar_orthogonal(3, 4), vec![3.0, 1.0, 0.5])?;
    let a = SymMatrix::from_fn(3, |i, j| 1.0 + 0.2 * (i * j) as f64);
    let problem = WlsProblem::new(a.clone(), a.hadamard(ps.mat()))?;
    for alpha in [0.5, 1.0, 1.5] {
        let back = pi_alpha(&fiber_base(&ps, alpha), alpha)?;
        let closed = riemannian_hessian_matrix(&problem, &ps, MetricSpec::alpha(alpha)).matrix;
        let d = tangent_dim(3);
        let mut oracle = DMatrix::zeros(d, d);
        for k in 0..d {
            let col = lifted_hessian_oracle(&problem, &ps, alpha, &basis_element(&ps, k))?;
            oracle.set_column(k, &to_coords(&ps, &col).0);
        }
        println!(
            "alpha={alpha}: fiber round trip {:.1e}, oracle deviation {:.2e}",
            (back.mat() - ps.mat()).norm(),
            (&oracle - &closed).norm() / closed.norm()
        );
    }
    Ok(())
}
