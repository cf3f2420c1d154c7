use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::run::SummaryRow;
use crate::error::Result;
use crate::optim::IterRecord;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotAxis {
    /// `‖P_k − P*‖_F` against iteration.
    DistVsIter,
    /// `‖∇f(P_k)‖_F` against iteration.
    GradVsIter,
    CostVsIter,
}

impl PlotAxis {
    pub fn slug(&self) -> &'static str {
        match self {
            PlotAxis::DistVsIter => "dist",
            PlotAxis::GradVsIter => "grad",
            PlotAxis::CostVsIter => "cost",
        }
    }

    fn column(&self) -> usize {
        match self {
            PlotAxis::CostVsIter => 2,
            PlotAxis::GradVsIter => 3,
            PlotAxis::DistVsIter => 4,
        }
    }

    fn label(&self) -> &'static str {
        match self {
            PlotAxis::DistVsIter => "||P_k - P*||_F",
            PlotAxis::GradVsIter => "||grad f(P_k)||_F",
            PlotAxis::CostVsIter => "f(P_k)",
        }
    }
}

/// One convergence curve.
#[derive(Clone, Debug)]
pub struct PlotSeries {
    pub problem: String,
    pub n: usize,
    pub optimizer: String,
    pub metric: String,
    pub kappa: f64,
    pub seed: u64,
    pub records: Vec<IterRecord>,
}

impl PlotSeries {
    pub fn from_row(row: &SummaryRow, records: Vec<IterRecord>) -> Self {
        PlotSeries {
            problem: row.problem.clone(),
            n: row.n,
            optimizer: row.optimizer.clone(),
            metric: row.metric.clone(),
            kappa: row.kappa,
            seed: row.seed,
            records,
        }
    }

    fn data_file(&self) -> String {
        format!(
            "{}_n{}_{}_{}_k{:e}_s{}.dat",
            self.problem, self.n, self.optimizer, self.metric, self.kappa, self.seed
        )
    }

    fn has_dist(&self) -> bool {
        !self.records.is_empty() && self.records.iter().all(|r| r.dist_pstar.is_some())
    }
}

/// Whitespace-separated columns `iter cost egrad_norm dist_pstar`, `?` for missing.
pub fn series_data(s: &PlotSeries) -> String {
    let mut out = String::from("# iter cost egrad_norm dist_pstar\n");
    for r in &s.records {
        let dist = r.dist_pstar.map(|d| d.to_string()).unwrap_or_else(|| "?".into());
        let _ = writeln!(out, "{} {} {} {}", r.iter, r.cost, r.egrad_norm, dist);
    }
    out
}

fn push_unique<T: PartialEq + Clone>(v: &mut Vec<T>, x: &T) {
    if !v.contains(x) {
        v.push(x.clone());
    }
}

/// Writes data files and one gnuplot script per (problem, n) block, laid out
/// as one panel per (optimizer, κ): optimizers on rows, κ on columns. Only the
/// smallest seed of each cell is drawn. Returns the script paths.
pub fn emit_plots(series: &[PlotSeries], axis: PlotAxis, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut groups: Vec<(String, usize)> = Vec::new();
    for s in series {
        push_unique(&mut groups, &(s.problem.clone(), s.n));
    }
    let mut scripts = Vec::new();
    for (problem, n) in groups {
        let members: Vec<&PlotSeries> = series.iter().filter(|s| s.problem == problem && s.n == n).collect();
        let mut optimizers = Vec::new();
        let mut kappas: Vec<f64> = Vec::new();
        for s in &members {
            push_unique(&mut optimizers, &s.optimizer);
            push_unique(&mut kappas, &s.kappa);
        }
        let stem = format!("{problem}_n{n}_{}", axis.slug());
        let mut header = format!("# {problem} n={n}: {} against iteration\n", axis.label());
        let mut body = String::new();
        let mut panels: usize = 0;
        for opt in &optimizers {
            for &kappa in &kappas {
                let mut cell: Vec<&PlotSeries> = members
                    .iter()
                    .copied()
                    .filter(|s| &s.optimizer == opt && s.kappa == kappa)
                    .collect();
                if cell.is_empty() {
                    continue;
                }
                let min_seed = cell.iter().map(|s| s.seed).min().unwrap_or(0);
                cell.retain(|s| s.seed == min_seed);
                if axis == PlotAxis::DistVsIter && cell.iter().any(|s| !s.has_dist()) {
                    let _ = writeln!(
                        header,
                        "# warning: panel {} kappa={kappa:e} skipped, dist_pstar missing",
                        opt.to_uppercase()
                    );
                    continue;
                }
                panels += 1;
                let _ = writeln!(body, "set title '{} kappa={kappa:e}'", opt.to_uppercase());
                let curves: Vec<String> = cell
                    .iter()
                    .map(|s| {
                        format!(
                            "'{}' using 1:{} with lines lw 2 title '{}'",
                            s.data_file(),
                            axis.column(),
                            s.metric
                        )
                    })
                    .collect();
                let _ = writeln!(body, "plot {}", curves.join(", \\\n     "));
                for s in cell {
                    fs::write(dir.join(s.data_file()), series_data(s))?;
                }
            }
        }
        let cols = kappas.len().max(1);
        let rows = panels.div_ceil(cols).max(1);
        let mut script = header;
        let _ = writeln!(script, "set terminal pngcairo size {},{}", 480 * cols, 360 * rows);
        let _ = writeln!(script, "set output '{stem}.png'");
        let _ = writeln!(script, "set datafile missing '?'");
        if axis != PlotAxis::CostVsIter {
            let _ = writeln!(script, "set logscale y");
            let _ = writeln!(script, "set format y '10^{{%L}}'");
        }
        let _ = writeln!(script, "set xlabel 'iteration'");
        let _ = writeln!(script, "set ylabel '{}'", axis.label());
        let _ = writeln!(script, "set key outside right");
        let _ = writeln!(script, "set multiplot layout {rows},{cols}");
        script.push_str(&body);
        let _ = writeln!(script, "unset multiplot");
        let path = dir.join(format!("{stem}.gp"));
        fs::write(&path, script)?;
        scripts.push(path);
    }
    Ok(scripts)
}
