//! Riemannian steepest descent and Riemannian trust-region solvers.
//!
//! Both solvers stop on the Euclidean criterion `‖∇f(P_k)‖_F < grad_tol`, so
//! runs under different metrics share one convergence certificate.

mod rsd;
mod rtr;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use rsd::{make_step_rule_reference, rsd_solve, RsdConfig, StepRule};
pub use rtr::{cauchy_point, rtr_solve, truncated_cg, RtrConfig, TcgParams, TcgResult, TcgStop};

use crate::linalg::SpdPoint;
use crate::problems::ObjectiveProblem;

/// One row of a convergence trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    pub cost: f64,
    pub egrad_norm: f64,
    /// `‖P_k − P*‖_F`, when `P*` was supplied.
    pub dist_pstar: Option<f64>,
    pub wall_ms: f64,
}

#[derive(Clone, Debug)]
pub struct RunTrace {
    pub records: Vec<IterRecord>,
    pub converged: bool,
    pub iters: usize,
    pub total_ms: f64,
    pub final_point: SpdPoint,
    pub final_grad: f64,
}

impl RunTrace {
    pub fn final_dist(&self) -> Option<f64> {
        self.records.last().and_then(|r| r.dist_pstar)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Rsd,
    Rtr,
}

impl OptimizerKind {
    pub fn slug(&self) -> &'static str {
        match self {
            OptimizerKind::Rsd => "rsd",
            OptimizerKind::Rtr => "rtr",
        }
    }
}

impl std::fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OptimizerKind::Rsd => "RSD",
            OptimizerKind::Rtr => "RTR",
        })
    }
}

impl std::str::FromStr for OptimizerKind {
    type Err = crate::error::Error;
    fn from_str(s: &str) -> crate::error::Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rsd" | "sd" => Ok(OptimizerKind::Rsd),
            "rtr" | "tr" => Ok(OptimizerKind::Rtr),
            other => Err(crate::error::Error::InvalidConfig(format!(
                "unknown optimizer `{other}`"
            ))),
        }
    }
}

/// Accumulates trace rows against a monotonic clock.
pub(crate) struct Recorder<'a> {
    start: Instant,
    p_star: Option<&'a SpdPoint>,
    records: Vec<IterRecord>,
    every: usize,
}

impl<'a> Recorder<'a> {
    pub(crate) fn new(p_star: Option<&'a SpdPoint>, every: usize) -> Self {
        Recorder {
            start: Instant::now(),
            p_star,
            records: Vec::new(),
            every: every.max(1),
        }
    }

    pub(crate) fn elapsed_ms(&self) -> f64 {
        self.start.elapsed().as_secs_f64() * 1e3
    }

    /// Records iteration `iter` if it falls on the sampling grid or `force` is set.
    pub(crate) fn record(&mut self, iter: usize, p: &SpdPoint, cost: f64, egrad_norm: f64, force: bool) {
        if !force && !iter.is_multiple_of(self.every) {
            return;
        }
        if self.records.last().is_some_and(|r| r.iter == iter) {
            return;
        }
        let dist_pstar = self.p_star.map(|ps| (p.mat() - ps.mat()).norm());
        let wall_ms = self.elapsed_ms();
        self.records.push(IterRecord {
            iter,
            cost,
            egrad_norm,
            dist_pstar,
            wall_ms,
        });
    }

    pub(crate) fn finish(
        mut self,
        iter: usize,
        p: SpdPoint,
        cost: f64,
        egrad_norm: f64,
        converged: bool,
    ) -> RunTrace {
        self.record(iter, &p, cost, egrad_norm, true);
        RunTrace {
            total_ms: self.elapsed_ms(),
            records: self.records,
            converged,
            iters: iter,
            final_point: p,
            final_grad: egrad_norm,
        }
    }
}

/// Cost and Euclidean gradient norm at `p`.
pub(crate) fn evaluate(problem: &dyn ObjectiveProblem, p: &SpdPoint) -> (f64, crate::linalg::SymMatrix) {
    (problem.cost(p.mat()), problem.egrad(p.mat()))
}
