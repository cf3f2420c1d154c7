//! Experiment harness: TOML configs, concurrent sweeps, CSV traces, summary
//! tables, gnuplot scripts and Hessian-spectrum reports.
//!
//! Recorded wall times depend on the machine and are not comparable across
//! hosts.

pub mod config;
pub mod plots;
pub mod run;
pub mod spectrum;
pub mod tables;

pub use config::{ExperimentConfig, OptimizerSection, Overrides, ProblemSection, SweepConfig};
pub use plots::{emit_plots, PlotAxis, PlotSeries};
pub use run::{expand_cells, replot, run_cell, run_sweep, Cell, CellOutcome, SummaryRow, SweepReport};
pub use spectrum::{spectrum_sweep, SpectrumConfig, SpectrumTable};
pub use tables::{emit_tables, mark_best, BestMarks, Tables};
