use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, SweepConfig};
use super::plots::{emit_plots, PlotAxis, PlotSeries};
use super::tables::emit_tables;
use crate::error::{Error, Result};
use crate::geometry::MetricSpec;
use crate::linalg::SpdPoint;
use crate::optim::{rsd_solve, rtr_solve, IterRecord, OptimizerKind, RsdConfig, RtrConfig, RunTrace};
use crate::problems::{make_instance, InstanceSpec};

pub const TRACE_DIR: &str = "traces";
pub const PLOT_DIR: &str = "plots";
pub const SUMMARY_FILE: &str = "summary.csv";

/// One optimizer run: a generated instance, a metric and a solver setup.
#[derive(Clone, Debug)]
pub struct Cell {
    pub experiment: String,
    pub instance: InstanceSpec,
    pub optimizer: OptimizerKind,
    pub metric: MetricSpec,
    pub rsd: RsdConfig,
    pub rtr: RtrConfig,
}

impl Cell {
    pub fn trace_file(&self) -> String {
        trace_file_name(
            self.instance.kind.slug(),
            self.instance.n,
            self.optimizer.slug(),
            &self.metric.slug(),
            self.instance.kappa,
            self.instance.seed,
        )
    }
}

pub fn trace_file_name(problem: &str, n: usize, optimizer: &str, metric: &str, kappa: f64, seed: u64) -> String {
    format!("{problem}_n{n}_{optimizer}_{metric}_k{kappa:e}_s{seed}.csv")
}

/// Summary of one cell; the column order is the summary CSV schema.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub problem: String,
    pub optimizer: String,
    pub metric: String,
    pub alpha: Option<f64>,
    pub kappa: f64,
    pub n: usize,
    pub seed: u64,
    pub iters: usize,
    pub converged: bool,
    pub final_grad: f64,
    pub final_dist: Option<f64>,
    pub total_s: f64,
}

impl SummaryRow {
    pub fn trace_file(&self) -> String {
        trace_file_name(&self.problem, self.n, &self.optimizer, &self.metric, self.kappa, self.seed)
    }

    fn from_trace(cell: &Cell, trace: &RunTrace) -> Self {
        let mut row = Self::empty(cell);
        row.iters = trace.iters;
        row.converged = trace.converged;
        row.final_grad = trace.final_grad;
        row.final_dist = trace.final_dist();
        row.total_s = trace.total_ms / 1e3;
        row
    }

    fn empty(cell: &Cell) -> Self {
        SummaryRow {
            problem: cell.instance.kind.slug().into(),
            optimizer: cell.optimizer.slug().into(),
            metric: cell.metric.slug(),
            alpha: cell.metric.alpha_value(),
            kappa: cell.instance.kappa,
            n: cell.instance.n,
            seed: cell.instance.seed,
            iters: 0,
            converged: false,
            final_grad: f64::NAN,
            final_dist: None,
            total_s: 0.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CellOutcome {
    pub cell: Cell,
    pub row: SummaryRow,
    pub records: Vec<IterRecord>,
    /// Set when the solver aborted; the row then summarizes the partial trace.
    pub failure: Option<String>,
}

/// Expands an experiment into cells, ordered optimizer, metric, κ, seed.
pub fn expand_cells(cfg: &ExperimentConfig) -> Result<Vec<Cell>> {
    cfg.validate()?;
    let metrics = cfg.metric_specs()?;
    let (rsd, rtr) = (cfg.rsd_config(), cfg.rtr_config());
    let mut cells = Vec::new();
    for &optimizer in &cfg.optimizer.kinds {
        for &metric in &metrics {
            for &kappa in &cfg.kappas {
                for &seed in &cfg.seeds {
                    cells.push(Cell {
                        experiment: cfg.name.clone(),
                        instance: cfg.problem.instance(optimizer, kappa, seed),
                        optimizer,
                        metric,
                        rsd,
                        rtr,
                    });
                }
            }
        }
    }
    Ok(cells)
}

/// Runs one cell from `P₀ = I`. Solver errors become a failed outcome.
pub fn run_cell(cell: &Cell) -> CellOutcome {
    let solved = make_instance(&cell.instance).and_then(|inst| {
        let p0 = SpdPoint::identity(cell.instance.n);
        match cell.optimizer {
            OptimizerKind::Rsd => rsd_solve(&inst.problem, cell.metric, &p0, &cell.rsd, Some(&inst.p_star)),
            OptimizerKind::Rtr => rtr_solve(&inst.problem, cell.metric, &p0, &cell.rtr, Some(&inst.p_star)),
        }
    });
    match solved {
        Ok(trace) => CellOutcome {
            cell: cell.clone(),
            row: SummaryRow::from_trace(cell, &trace),
            records: trace.records,
            failure: None,
        },
        Err(Error::StepFailure { iter, reason, trace }) => CellOutcome {
            cell: cell.clone(),
            row: SummaryRow::from_trace(cell, &trace),
            records: trace.records,
            failure: Some(format!("step failure at iteration {iter}: {reason}")),
        },
        Err(e) => CellOutcome {
            cell: cell.clone(),
            row: SummaryRow::empty(cell),
            records: Vec::new(),
            failure: Some(e.to_string()),
        },
    }
}

pub fn write_trace(path: &Path, records: &[IterRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(["iter", "cost", "egrad_norm", "dist_pstar", "wall_ms"])?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<Vec<IterRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|rec| rec.map_err(Error::from)).collect()
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record([
        "problem",
        "optimizer",
        "metric",
        "alpha",
        "kappa",
        "n",
        "seed",
        "iters",
        "converged",
        "final_grad",
        "final_dist",
        "total_s",
    ])?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|rec| rec.map_err(Error::from)).collect()
}

/// Everything a sweep produced.
#[derive(Clone, Debug)]
pub struct SweepReport {
    pub out: PathBuf,
    pub outcomes: Vec<CellOutcome>,
    pub table_text: String,
}

impl SweepReport {
    pub fn rows(&self) -> Vec<SummaryRow> {
        self.outcomes.iter().map(|o| o.row.clone()).collect()
    }

    pub fn failures(&self) -> impl Iterator<Item = &CellOutcome> {
        self.outcomes.iter().filter(|o| o.failure.is_some())
    }

    pub fn find(&self, optimizer: OptimizerKind, metric: &str, kappa: f64) -> Option<&SummaryRow> {
        self.outcomes
            .iter()
            .map(|o| &o.row)
            .find(|r| r.optimizer == optimizer.slug() && r.metric == metric && r.kappa == kappa)
    }
}

/// Runs every cell of every experiment, then writes the summary, tables and plots.
///
/// Layout under `out`: `traces/*.csv`, `summary.csv`, `tables.txt`,
/// `tables.csv`, `failures.txt` (only when a cell failed), `plots/`.
pub fn run_sweep(cfg: &SweepConfig, out: &Path) -> Result<SweepReport> {
    cfg.validate()?;
    let mut cells = Vec::new();
    for e in &cfg.experiment {
        cells.extend(expand_cells(e)?);
    }
    let mut names = std::collections::HashSet::new();
    if let Some(c) = cells.iter().find(|c| !names.insert(c.trace_file())) {
        return Err(Error::InvalidConfig(format!("cell {} appears twice", c.trace_file())));
    }
    let trace_dir = out.join(TRACE_DIR);
    fs::create_dir_all(&trace_dir)?;

    let workers = cfg.workers.unwrap_or(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let outcomes: Vec<Result<CellOutcome>> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                let outcome = run_cell(cell);
                write_trace(&trace_dir.join(cell.trace_file()), &outcome.records)?;
                Ok(outcome)
            })
            .collect()
    });
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let rows: Vec<SummaryRow> = outcomes.iter().map(|o| o.row.clone()).collect();
    write_summary(&out.join(SUMMARY_FILE), &rows)?;
    let tables = emit_tables(&rows);
    fs::write(out.join("tables.txt"), &tables.text)?;
    fs::write(out.join("tables.csv"), &tables.csv)?;

    let failures: Vec<String> = outcomes
        .iter()
        .filter_map(|o| o.failure.as_ref().map(|f| format!("{}: {f}", o.cell.trace_file())))
        .collect();
    let failure_path = out.join("failures.txt");
    if failures.is_empty() {
        if failure_path.exists() {
            fs::remove_file(&failure_path)?;
        }
    } else {
        fs::write(&failure_path, failures.join("\n") + "\n")?;
    }

    let series: Vec<PlotSeries> = outcomes
        .iter()
        .map(|o| PlotSeries::from_row(&o.row, o.records.clone()))
        .collect();
    write_all_plots(&series, &out.join(PLOT_DIR))?;

    Ok(SweepReport {
        out: out.to_path_buf(),
        outcomes,
        table_text: tables.text,
    })
}

/// Emits one script per problem block and axis.
pub fn write_all_plots(series: &[PlotSeries], dir: &Path) -> Result<Vec<PathBuf>> {
    let mut scripts = Vec::new();
    for axis in [PlotAxis::DistVsIter, PlotAxis::GradVsIter, PlotAxis::CostVsIter] {
        scripts.extend(emit_plots(series, axis, dir)?);
    }
    Ok(scripts)
}

/// Rebuilds plots from a finished sweep directory.
pub fn replot(out: &Path) -> Result<Vec<PathBuf>> {
    let rows = read_summary(&out.join(SUMMARY_FILE))?;
    let series = rows
        .iter()
        .map(|row| Ok(PlotSeries::from_row(row, read_trace(&out.join(TRACE_DIR).join(row.trace_file()))?)))
        .collect::<Result<Vec<_>>>()?;
    write_all_plots(&series, &out.join(PLOT_DIR))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{OptimizerSection, ProblemSection};
    use crate::problems::ProblemKind;

    fn small(kind: ProblemKind, opt: OptimizerKind, metrics: &[&str]) -> ExperimentConfig {
        let mut problem = ProblemSection::new(kind);
        problem.n = Some(4);
        ExperimentConfig {
            name: "t".into(),
            problem,
            optimizer: OptimizerSection::new(vec![opt]),
            metrics: metrics.iter().map(|s| s.to_string()).collect(),
            kappas: vec![10.0],
            seeds: vec![0],
            grad_tol: 1e-6,
        }
    }

    fn sweep(e: ExperimentConfig) -> SweepConfig {
        SweepConfig {
            out: None,
            workers: Some(2),
            experiment: vec![e],
        }
    }

    #[test]
    fn cells_and_file_names() {
        let mut e = small(ProblemKind::Wls, OptimizerKind::Rsd, &["ai", "1"]);
        e.kappas = vec![10.0, 1e4];
        e.seeds = vec![0, 1];
        let cells = expand_cells(&e).unwrap();
        assert_eq!(cells.len(), 8);
        assert_eq!(cells[0].trace_file(), "wls_n4_rsd_ai_k1e1_s0.csv");
        assert_eq!(cells[7].trace_file(), "wls_n4_rsd_a1_k1e4_s1.csv");
    }

    #[test]
    fn trace_and_summary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let rep = run_sweep(&sweep(small(ProblemKind::Wls, OptimizerKind::Rsd, &["1"])), dir.path()).unwrap();
        let rows = read_summary(&dir.path().join(SUMMARY_FILE)).unwrap();
        assert_eq!(rows, rep.rows());
        let tr = read_trace(&dir.path().join(TRACE_DIR).join(rows[0].trace_file())).unwrap();
        assert_eq!(tr, rep.outcomes[0].records);
        let last = tr.last().unwrap();
        assert_eq!(last.iter, rows[0].iters);
        assert_eq!(last.egrad_norm, rows[0].final_grad);
        assert_eq!(last.dist_pstar, rows[0].final_dist);
        let header = fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap();
        assert!(header.starts_with(
            "problem,optimizer,metric,alpha,kappa,n,seed,iters,converged,final_grad,final_dist,total_s\n"
        ));
    }

    #[test]
    fn step_failure_is_isolated() {
        let mut e = small(ProblemKind::Wls, OptimizerKind::Rsd, &["1", "ai"]);
        e.optimizer.step = crate::optim::StepRule::Armijo {
            initial: 1.0,
            shrink: 0.5,
            c1: 1.0 - 1e-12,
            max_backtracks: 0,
        };
        let dir = tempfile::tempdir().unwrap();
        let rep = run_sweep(&sweep(e.clone()), dir.path()).unwrap();
        assert!(rep.failures().count() > 0);
        assert!(dir.path().join("failures.txt").exists());
        for o in &rep.outcomes {
            assert_eq!(o.row.iters, o.records.last().unwrap().iter);
        }
        // the failing cell does not perturb its neighbour
        e.metrics = vec!["1".into()];
        let dir2 = tempfile::tempdir().unwrap();
        let alone = run_sweep(&sweep(e), dir2.path()).unwrap();
        assert_eq!(alone.outcomes[0].row.iters, rep.outcomes[0].row.iters);
        assert_eq!(alone.outcomes[0].row.final_grad, rep.outcomes[0].row.final_grad);
    }
}
