//! Benchmark objectives on SPD(n) and their instance generators.
//!
//! Random instances are drawn from ChaCha20 streams seeded with a `u64`;
//! Gaussian variates use `rand_distr::StandardNormal` (a ziggurat sampler).
//! The orthogonal factor of `P*` is always `haar_orthogonal(seed)`; all other
//! randomness (the coefficient bases, sensing vectors, noise) comes from
//! stream 1 of the same seed, so `P*` does not depend on the problem kind.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{haar_orthogonal, haar_orthogonal_from, SpdPoint, SymMatrix};

/// Cost, Euclidean gradient and Euclidean Hessian-vector product of a smooth
/// function on SPD(n), evaluated at any symmetric matrix.
pub trait ObjectiveProblem: Send + Sync {
    fn dim(&self) -> usize;
    fn cost(&self, p: &SymMatrix) -> f64;
    fn egrad(&self, p: &SymMatrix) -> SymMatrix;
    fn ehess(&self, p: &SymMatrix, u: &SymMatrix) -> SymMatrix;

    /// The Hessian-vector product expressed in the orthonormal basis `Q`:
    /// `Ũ ↦ Qᵀ ∇²f(P)[Q Ũ Qᵀ] Q`. Solvers call the returned closure many
    /// times per iterate, so implementations may precompute rotated data.
    fn ehess_rotated<'a>(&'a self, p: &'a SymMatrix, q: &'a DMatrix<f64>) -> HessOp<'a> {
        Box::new(move |ut| self.ehess(p, &ut.rotate_out(q)).rotate_into(q))
    }
}

pub type HessOp<'a> = Box<dyn Fn(&SymMatrix) -> SymMatrix + 'a>;

/// `f(P) = ½ ‖A ⊙ P − B‖²_F`.
#[derive(Clone, Debug)]
pub struct WlsProblem {
    pub a: SymMatrix,
    pub b: SymMatrix,
}

impl WlsProblem {
    pub fn new(a: SymMatrix, b: SymMatrix) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                got: b.dim(),
            });
        }
        Ok(WlsProblem { a, b })
    }

    /// All-ones weights with target `P*`: `f(P) = ½ ‖P − P*‖²_F`.
    pub fn unit_weights(p_star: &SpdPoint) -> Self {
        let n = p_star.dim();
        WlsProblem {
            a: SymMatrix::new(DMatrix::from_element(n, n, 1.0)),
            b: p_star.mat().clone(),
        }
    }

    fn residual(&self, p: &SymMatrix) -> SymMatrix {
        &self.a.hadamard(p) - &self.b
    }
}

impl ObjectiveProblem for WlsProblem {
    fn dim(&self) -> usize {
        self.a.dim()
    }

    fn cost(&self, p: &SymMatrix) -> f64 {
        0.5 * self.residual(p).norm().powi(2)
    }

    fn egrad(&self, p: &SymMatrix) -> SymMatrix {
        self.residual(p).hadamard(&self.a)
    }

    fn ehess(&self, _p: &SymMatrix, u: &SymMatrix) -> SymMatrix {
        u.hadamard(&self.a).hadamard(&self.a)
    }

    fn ehess_rotated<'a>(&'a self, p: &'a SymMatrix, q: &'a DMatrix<f64>) -> HessOp<'a> {
        if self.a.as_matrix().iter().all(|&w| w.abs() == 1.0) {
            return Box::new(|ut| ut.clone());
        }
        Box::new(move |ut| self.ehess(p, &ut.rotate_out(q)).rotate_into(q))
    }
}

/// `f(P) = (1/2m) Σ (a_iᵀ P a_i − y_i)²` with rank-one sensing `a_i a_iᵀ`.
#[derive(Clone, Debug)]
pub struct TraceRegressionProblem {
    /// `n × m`, one sensing vector per column.
    pub sensing: DMatrix<f64>,
    pub y: DVector<f64>,
}

impl TraceRegressionProblem {
    pub fn new(sensing: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if sensing.ncols() == 0 {
            return Err(Error::InvalidConfig("trace regression needs m >= 1".into()));
        }
        if sensing.ncols() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: sensing.ncols(),
                got: y.len(),
            });
        }
        Ok(TraceRegressionProblem { sensing, y })
    }

    pub fn samples(&self) -> usize {
        self.y.len()
    }

    fn quadratic_forms(&self, u: &SymMatrix) -> DVector<f64> {
        quadratic_forms(&self.sensing, u)
    }

    fn weighted_outer(&self, s: &DVector<f64>) -> SymMatrix {
        weighted_outer(&self.sensing, s)
    }
}

/// `a_iᵀ U a_i` for every column `a_i` of `sensing`.
fn quadratic_forms(sensing: &DMatrix<f64>, u: &SymMatrix) -> DVector<f64> {
    let ua = u.as_matrix() * sensing;
    DVector::from_iterator(
        sensing.ncols(),
        ua.column_iter()
            .zip(sensing.column_iter())
            .map(|(x, a)| x.dot(&a)),
    )
}

/// `(1/m) Σ s_i a_i a_iᵀ`.
fn weighted_outer(sensing: &DMatrix<f64>, s: &DVector<f64>) -> SymMatrix {
    let mut scaled = sensing.clone();
    for (mut col, &si) in scaled.column_iter_mut().zip(s.iter()) {
        col.scale_mut(si);
    }
    SymMatrix::new(scaled * sensing.transpose() / sensing.ncols() as f64)
}

impl ObjectiveProblem for TraceRegressionProblem {
    fn dim(&self) -> usize {
        self.sensing.nrows()
    }

    fn cost(&self, p: &SymMatrix) -> f64 {
        let r = self.quadratic_forms(p) - &self.y;
        r.norm_squared() / (2.0 * self.samples() as f64)
    }

    fn egrad(&self, p: &SymMatrix) -> SymMatrix {
        let r = self.quadratic_forms(p) - &self.y;
        self.weighted_outer(&r)
    }

    fn ehess(&self, _p: &SymMatrix, u: &SymMatrix) -> SymMatrix {
        self.weighted_outer(&self.quadratic_forms(u))
    }

    fn ehess_rotated<'a>(&'a self, _p: &'a SymMatrix, q: &'a DMatrix<f64>) -> HessOp<'a> {
        let rotated = q.transpose() * &self.sensing;
        Box::new(move |ut| weighted_outer(&rotated, &quadratic_forms(&rotated, ut)))
    }
}

/// `f(P) = ½ ⟨P, AP + PB⟩_F − ⟨C, P⟩_F` with `A, B` SPD.
///
/// On Sym(n) the gradient is the symmetric part of `AP + PB − C`.
#[derive(Clone, Debug)]
pub struct SylvesterProblem {
    pub a: SpdPoint,
    pub b: SpdPoint,
    pub c: SymMatrix,
}

impl SylvesterProblem {
    pub fn new(a: SpdPoint, b: SpdPoint, c: SymMatrix) -> Result<Self> {
        for got in [b.dim(), c.dim()] {
            if got != a.dim() {
                return Err(Error::DimensionMismatch {
                    expected: a.dim(),
                    got,
                });
            }
        }
        Ok(SylvesterProblem { a, b, c })
    }

    /// Coefficients `A, B` with `C = AP* + P*B`, so that `P*` is the minimizer.
    pub fn with_minimizer(a: SpdPoint, b: SpdPoint, p_star: &SpdPoint) -> Self {
        let c = sylvester_apply(&a, &b, p_star.mat());
        SylvesterProblem { a, b, c }
    }
}

/// Symmetric part of `AU + UB`.
fn sylvester_apply(a: &SpdPoint, b: &SpdPoint, u: &SymMatrix) -> SymMatrix {
    SymMatrix::new(a.mat().as_matrix() * u.as_matrix() + u.as_matrix() * b.mat().as_matrix())
}

impl ObjectiveProblem for SylvesterProblem {
    fn dim(&self) -> usize {
        self.a.dim()
    }

    fn cost(&self, p: &SymMatrix) -> f64 {
        let ap_pb = self.a.mat().as_matrix() * p.as_matrix() + p.as_matrix() * self.b.mat().as_matrix();
        0.5 * p.as_matrix().dot(&ap_pb) - self.c.frobenius_inner(p)
    }

    fn egrad(&self, p: &SymMatrix) -> SymMatrix {
        &sylvester_apply(&self.a, &self.b, p) - &self.c
    }

    fn ehess(&self, _p: &SymMatrix, u: &SymMatrix) -> SymMatrix {
        sylvester_apply(&self.a, &self.b, u)
    }

    fn ehess_rotated<'a>(&'a self, _p: &'a SymMatrix, q: &'a DMatrix<f64>) -> HessOp<'a> {
        let a = self.a.mat().rotate_into(q).into_inner();
        let b = self.b.mat().rotate_into(q).into_inner();
        Box::new(move |ut| SymMatrix::new(&a * ut.as_matrix() + ut.as_matrix() * &b))
    }
}

/// Any of the three benchmark objectives.
#[derive(Clone, Debug)]
pub enum Problem {
    Wls(WlsProblem),
    TraceRegression(TraceRegressionProblem),
    Sylvester(SylvesterProblem),
}

impl ObjectiveProblem for Problem {
    fn dim(&self) -> usize {
        match self {
            Problem::Wls(p) => p.dim(),
            Problem::TraceRegression(p) => p.dim(),
            Problem::Sylvester(p) => p.dim(),
        }
    }

    fn cost(&self, x: &SymMatrix) -> f64 {
        match self {
            Problem::Wls(p) => p.cost(x),
            Problem::TraceRegression(p) => p.cost(x),
            Problem::Sylvester(p) => p.cost(x),
        }
    }

    fn egrad(&self, x: &SymMatrix) -> SymMatrix {
        match self {
            Problem::Wls(p) => p.egrad(x),
            Problem::TraceRegression(p) => p.egrad(x),
            Problem::Sylvester(p) => p.egrad(x),
        }
    }

    fn ehess(&self, x: &SymMatrix, u: &SymMatrix) -> SymMatrix {
        match self {
            Problem::Wls(p) => p.ehess(x, u),
            Problem::TraceRegression(p) => p.ehess(x, u),
            Problem::Sylvester(p) => p.ehess(x, u),
        }
    }

    fn ehess_rotated<'a>(&'a self, x: &'a SymMatrix, q: &'a DMatrix<f64>) -> HessOp<'a> {
        match self {
            Problem::Wls(p) => p.ehess_rotated(x, q),
            Problem::TraceRegression(p) => p.ehess_rotated(x, q),
            Problem::Sylvester(p) => p.ehess_rotated(x, q),
        }
    }
}

/// Shape of the prescribed spectrum of `P*`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "style", rename_all = "snake_case")]
pub enum SpectrumStyle {
    /// `λ_i = κ^{−(i−1)/(n−1)}`: from 1 down to `1/κ`.
    DecayFromOne,
    /// `λ_i = c τ^{s/2 − s(i−1)/(n−1)}` with `τ = κ^{1/s}`, so `κ(P*) = τ^s = κ`.
    /// `center = 1, stretch = 1` gives the spectrum from `κ^{1/2}` to `κ^{−1/2}`.
    CenteredGeometric { center: f64, stretch: f64 },
}

impl SpectrumStyle {
    pub fn centered() -> Self {
        SpectrumStyle::CenteredGeometric {
            center: 1.0,
            stretch: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRecipe {
    pub n: usize,
    pub kappa: f64,
    pub style: SpectrumStyle,
    pub seed: u64,
}

impl SpectrumRecipe {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || !(self.kappa >= 1.0) || !self.kappa.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "spectrum needs n >= 1 and finite kappa >= 1 (n={}, kappa={})",
                self.n, self.kappa
            )));
        }
        if let SpectrumStyle::CenteredGeometric { center, stretch } = self.style {
            if !(center > 0.0) || !(stretch > 0.0) {
                return Err(Error::InvalidConfig("center and stretch must be positive".into()));
            }
        }
        Ok(())
    }

    /// Eigenvalues, descending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        geometric_spectrum(self.n, self.kappa, self.style)
    }
}

fn geometric_spectrum(n: usize, kappa: f64, style: SpectrumStyle) -> Vec<f64> {
    let frac = |i: usize| {
        if n == 1 {
            0.0
        } else {
            i as f64 / (n - 1) as f64
        }
    };
    let log_k = kappa.ln();
    (0..n)
        .map(|i| match style {
            SpectrumStyle::DecayFromOne => (-frac(i) * log_k).exp(),
            SpectrumStyle::CenteredGeometric { center, stretch } => {
                let log_tau = log_k / stretch;
                center * ((stretch / 2.0 - stretch * frac(i)) * log_tau).exp()
            }
        })
        .collect()
}

/// `P* = Q diag(λ) Qᵀ` with `Q = haar_orthogonal(n, seed)`.
pub fn make_pstar(recipe: &SpectrumRecipe) -> Result<SpdPoint> {
    recipe.validate()?;
    let q = haar_orthogonal(recipe.n, recipe.seed);
    SpdPoint::from_eigen(q, recipe.eigenvalues())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Wls,
    TraceRegression,
    Sylvester,
}

impl ProblemKind {
    pub fn slug(&self) -> &'static str {
        match self {
            ProblemKind::Wls => "wls",
            ProblemKind::TraceRegression => "trace",
            ProblemKind::Sylvester => "sylvester",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "wls" | "weighted_least_squares" => Ok(ProblemKind::Wls),
            "trace" | "trace_regression" => Ok(ProblemKind::TraceRegression),
            "sylvester" => Ok(ProblemKind::Sylvester),
            other => Err(Error::InvalidConfig(format!("unknown problem kind `{other}`"))),
        }
    }
}

/// Everything needed to regenerate an instance. This, not the matrices, is
/// the interchange format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub kind: ProblemKind,
    pub n: usize,
    pub kappa: f64,
    pub spectrum: SpectrumStyle,
    pub seed: u64,
    /// Sylvester coefficient condition numbers.
    pub kappa_a: f64,
    pub kappa_b: f64,
    /// Trace-regression sample count; `None` means `10 n`.
    pub samples: Option<usize>,
    /// Trace-regression noise multiplier `σ` (noise is `σ ε`, `ε ~ N(0, 0.01)`).
    pub sigma: f64,
}

impl InstanceSpec {
    pub fn new(kind: ProblemKind, n: usize, kappa: f64, seed: u64) -> Self {
        InstanceSpec {
            kind,
            n,
            kappa,
            spectrum: SpectrumStyle::DecayFromOne,
            seed,
            kappa_a: 30.0,
            kappa_b: 20.0,
            samples: None,
            sigma: 1.0,
        }
    }

    pub fn with_spectrum(mut self, style: SpectrumStyle) -> Self {
        self.spectrum = style;
        self
    }

    pub fn recipe(&self) -> SpectrumRecipe {
        SpectrumRecipe {
            n: self.n,
            kappa: self.kappa,
            style: self.spectrum,
            seed: self.seed,
        }
    }

    pub fn sample_count(&self) -> usize {
        self.samples.unwrap_or(10 * self.n)
    }

    /// One-line `key=value` record.
    pub fn to_record(&self) -> String {
        let spectrum = match self.spectrum {
            SpectrumStyle::DecayFromOne => "decay".to_string(),
            SpectrumStyle::CenteredGeometric { center, stretch } => {
                format!("centered center={center} stretch={stretch}")
            }
        };
        format!(
            "kind={} n={} kappa={} spectrum={} seed={} kappa_a={} kappa_b={} samples={} sigma={}",
            self.kind,
            self.n,
            self.kappa,
            spectrum,
            self.seed,
            self.kappa_a,
            self.kappa_b,
            self.sample_count(),
            self.sigma
        )
    }

    pub fn from_record(line: &str) -> Result<Self> {
        let mut spec = InstanceSpec::new(ProblemKind::Wls, 1, 1.0, 0);
        let (mut center, mut stretch, mut centered) = (1.0, 1.0, false);
        let bad = |k: &str, v: &str| Error::InvalidConfig(format!("bad record field {k}={v}"));
        for tok in line.split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("bad record token `{tok}`")))?;
            macro_rules! num {
                () => {
                    v.parse().map_err(|_| bad(k, v))?
                };
            }
            match k {
                "kind" => spec.kind = v.parse()?,
                "n" => spec.n = num!(),
                "kappa" => spec.kappa = num!(),
                "spectrum" => match v {
                    "decay" => centered = false,
                    "centered" => centered = true,
                    _ => return Err(bad(k, v)),
                },
                "center" => center = num!(),
                "stretch" => stretch = num!(),
                "seed" => spec.seed = num!(),
                "kappa_a" => spec.kappa_a = num!(),
                "kappa_b" => spec.kappa_b = num!(),
                "samples" => spec.samples = Some(num!()),
                "sigma" => spec.sigma = num!(),
                _ => return Err(Error::InvalidConfig(format!("unknown record key `{k}`"))),
            }
        }
        if centered {
            spec.spectrum = SpectrumStyle::CenteredGeometric { center, stretch };
        }
        Ok(spec)
    }
}

/// A generated problem with its known minimizer.
#[derive(Clone, Debug)]
pub struct Instance {
    pub spec: InstanceSpec,
    pub problem: Problem,
    pub p_star: SpdPoint,
    /// Trace regression only: the same sensing vectors with noiseless responses,
    /// for which `P*` is an exact minimizer.
    pub noiseless: Option<Problem>,
}

/// SPD matrix with eigenvalues geometric between 1 and `1/κ` in a Haar basis.
fn conditioned_spd<R: rand::Rng>(n: usize, kappa: f64, rng: &mut R) -> SpdPoint {
    let q = haar_orthogonal_from(n, rng);
    SpdPoint::from_eigen(q, geometric_spectrum(n, kappa, SpectrumStyle::DecayFromOne))
        .expect("positive spectrum")
}

pub fn make_instance(spec: &InstanceSpec) -> Result<Instance> {
    let p_star = make_pstar(&spec.recipe())?;
    let n = spec.n;
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    rng.set_stream(1);
    let (problem, noiseless) = match spec.kind {
        ProblemKind::Wls => (Problem::Wls(WlsProblem::unit_weights(&p_star)), None),
        ProblemKind::Sylvester => {
            if !(spec.kappa_a >= 1.0 && spec.kappa_b >= 1.0) {
                return Err(Error::InvalidConfig("kappa_a and kappa_b must be >= 1".into()));
            }
            let a = conditioned_spd(n, spec.kappa_a, &mut rng);
            let b = conditioned_spd(n, spec.kappa_b, &mut rng);
            (
                Problem::Sylvester(SylvesterProblem::with_minimizer(a, b, &p_star)),
                None,
            )
        }
        ProblemKind::TraceRegression => {
            let m = spec.sample_count();
            if m == 0 {
                return Err(Error::InvalidConfig("trace regression needs m >= 1".into()));
            }
            let sensing = DMatrix::from_fn(n, m, |_, _| StandardNormal.sample(&mut rng));
            let eps = Normal::new(0.0, 0.1).expect("valid normal");
            let clean = DVector::from_iterator(
                m,
                sensing.column_iter().map(|a| {
                    let pa = p_star.mat().as_matrix() * a;
                    a.dot(&pa)
                }),
            );
            let noisy = DVector::from_iterator(
                m,
                clean.iter().map(|&v| v + spec.sigma * eps.sample(&mut rng)),
            );
            let noisy = TraceRegressionProblem::new(sensing.clone(), noisy)?;
            let clean = TraceRegressionProblem::new(sensing, clean)?;
            (
                Problem::TraceRegression(noisy),
                Some(Problem::TraceRegression(clean)),
            )
        }
    };
    Ok(Instance {
        spec: spec.clone(),
        problem,
        p_star,
        noiseless,
    })
}
