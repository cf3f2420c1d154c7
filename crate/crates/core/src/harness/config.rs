use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::MetricSpec;
use crate::optim::{OptimizerKind, RsdConfig, RtrConfig, StepRule};
use crate::problems::{InstanceSpec, ProblemKind, SpectrumStyle};

pub const DEFAULT_GRAD_TOL: f64 = 1e-6;

/// Iteration budget used when the config does not set one.
pub fn default_budget(problem: ProblemKind, optimizer: OptimizerKind) -> usize {
    match (problem, optimizer) {
        (ProblemKind::Wls, _) => 200,
        (ProblemKind::TraceRegression, OptimizerKind::Rsd) => 800,
        (ProblemKind::TraceRegression, OptimizerKind::Rtr) => 400,
        (ProblemKind::Sylvester, OptimizerKind::Rsd) => 20000,
        (ProblemKind::Sylvester, OptimizerKind::Rtr) => 100,
    }
}

/// Dimension used when the config does not set one.
pub fn default_dimension(problem: ProblemKind) -> usize {
    match problem {
        ProblemKind::Wls => 50,
        ProblemKind::TraceRegression => 30,
        ProblemKind::Sylvester => 60,
    }
}

/// Spectrum of `P*` used when the config says `auto`.
pub fn default_spectrum(problem: ProblemKind, optimizer: OptimizerKind) -> SpectrumStyle {
    match (problem, optimizer) {
        (_, OptimizerKind::Rsd) => SpectrumStyle::DecayFromOne,
        (ProblemKind::Sylvester, OptimizerKind::Rtr) => SpectrumStyle::CenteredGeometric {
            center: 1.0,
            stretch: 1.5,
        },
        (_, OptimizerKind::Rtr) => SpectrumStyle::centered(),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumChoice {
    #[default]
    Auto,
    Decay,
    Centered,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub kind: ProblemKind,
    pub n: Option<usize>,
    #[serde(default)]
    pub spectrum: SpectrumChoice,
    /// Centered spectrum parameters; defaults depend on the problem.
    pub center: Option<f64>,
    pub stretch: Option<f64>,
    #[serde(default = "default_kappa_a")]
    pub kappa_a: f64,
    #[serde(default = "default_kappa_b")]
    pub kappa_b: f64,
    pub samples: Option<usize>,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
}

fn default_kappa_a() -> f64 {
    30.0
}
fn default_kappa_b() -> f64 {
    20.0
}
fn default_sigma() -> f64 {
    1.0
}

impl ProblemSection {
    pub fn new(kind: ProblemKind) -> Self {
        ProblemSection {
            kind,
            n: None,
            spectrum: SpectrumChoice::Auto,
            center: None,
            stretch: None,
            kappa_a: default_kappa_a(),
            kappa_b: default_kappa_b(),
            samples: None,
            sigma: default_sigma(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.n.unwrap_or_else(|| default_dimension(self.kind))
    }

    pub fn spectrum_for(&self, optimizer: OptimizerKind) -> SpectrumStyle {
        let auto = default_spectrum(self.kind, optimizer);
        let centered = |fallback: SpectrumStyle| {
            let (c0, s0) = match fallback {
                SpectrumStyle::CenteredGeometric { center, stretch } => (center, stretch),
                SpectrumStyle::DecayFromOne => (1.0, 1.0),
            };
            SpectrumStyle::CenteredGeometric {
                center: self.center.unwrap_or(c0),
                stretch: self.stretch.unwrap_or(s0),
            }
        };
        match self.spectrum {
            SpectrumChoice::Decay => SpectrumStyle::DecayFromOne,
            SpectrumChoice::Centered => centered(default_spectrum(self.kind, OptimizerKind::Rtr)),
            SpectrumChoice::Auto => match auto {
                SpectrumStyle::DecayFromOne => auto,
                c => centered(c),
            },
        }
    }

    pub fn instance(&self, optimizer: OptimizerKind, kappa: f64, seed: u64) -> InstanceSpec {
        let mut spec = InstanceSpec::new(self.kind, self.dimension(), kappa, seed)
            .with_spectrum(self.spectrum_for(optimizer));
        spec.kappa_a = self.kappa_a;
        spec.kappa_b = self.kappa_b;
        spec.samples = self.samples;
        spec.sigma = self.sigma;
        spec
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    pub kinds: Vec<OptimizerKind>,
    /// Overrides the per-problem default budget for every optimizer.
    pub max_iters: Option<usize>,
    #[serde(default)]
    pub step: StepRule,
    #[serde(default = "one")]
    pub record_every: usize,
    #[serde(default)]
    pub rtr: RtrConfig,
}

fn one() -> usize {
    1
}

impl OptimizerSection {
    pub fn new(kinds: Vec<OptimizerKind>) -> Self {
        OptimizerSection {
            kinds,
            max_iters: None,
            step: StepRule::default(),
            record_every: 1,
            rtr: RtrConfig::default(),
        }
    }
}

/// One block of runs: optimizers × metrics × κ × seeds on one problem family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub problem: ProblemSection,
    pub optimizer: OptimizerSection,
    pub metrics: Vec<String>,
    pub kappas: Vec<f64>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_grad_tol")]
    pub grad_tol: f64,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}
fn default_grad_tol() -> f64 {
    DEFAULT_GRAD_TOL
}

impl ExperimentConfig {
    pub fn metric_specs(&self) -> Result<Vec<MetricSpec>> {
        self.metrics.iter().map(|m| m.parse()).collect()
    }

    pub fn budget(&self, optimizer: OptimizerKind) -> usize {
        self.optimizer
            .max_iters
            .unwrap_or_else(|| default_budget(self.problem.kind, optimizer))
    }

    pub fn rsd_config(&self) -> RsdConfig {
        RsdConfig {
            step_rule: self.optimizer.step,
            max_iters: self.budget(OptimizerKind::Rsd),
            grad_tol: self.grad_tol,
            record_every: self.optimizer.record_every,
        }
    }

    pub fn rtr_config(&self) -> RtrConfig {
        RtrConfig {
            max_iters: self.budget(OptimizerKind::Rtr),
            grad_tol: self.grad_tol,
            ..self.optimizer.rtr
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(format!("experiment `{}`: {msg}", self.name)));
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return bad("name must be non-empty and use [A-Za-z0-9_-]".into());
        }
        if self.metrics.is_empty() {
            return bad("metric list is empty".into());
        }
        let metrics = self.metric_specs()?;
        let mut seen = HashSet::new();
        for m in &metrics {
            if !seen.insert(m.slug()) {
                return bad(format!("metric `{m}` listed twice"));
            }
        }
        if self.kappas.is_empty() {
            return bad("kappa list is empty".into());
        }
        if let Some(k) = self.kappas.iter().find(|k| !(**k >= 1.0 && k.is_finite())) {
            return bad(format!("kappa {k} must be finite and >= 1"));
        }
        if self.seeds.is_empty() {
            return bad("seed list is empty".into());
        }
        if self.optimizer.kinds.is_empty() {
            return bad("optimizer list is empty".into());
        }
        if !(self.grad_tol > 0.0) {
            return bad(format!("grad_tol {} must be positive", self.grad_tol));
        }
        if self.problem.dimension() == 0 {
            return bad("n must be positive".into());
        }
        for &kind in &self.optimizer.kinds {
            if self.budget(kind) == 0 {
                return bad(format!("{kind} budget must be positive"));
            }
            let spec = self.problem.instance(kind, self.kappas[0], self.seeds[0]);
            spec.recipe().validate()?;
        }
        self.rsd_config().validate()?;
        self.rtr_config().validate()?;
        Ok(())
    }
}

/// A list of experiments sharing an output directory and worker pool.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    #[serde(default)]
    pub experiment: Vec<ExperimentConfig>,
}

impl SweepConfig {
    /// Parses either a `[[experiment]]` list or a single top-level experiment.
    pub fn from_toml(text: &str) -> Result<Self> {
        let toml_err = |e: toml::de::Error| Error::InvalidConfig(format!("TOML: {e}"));
        let mut table: toml::Table = toml::from_str(text).map_err(toml_err)?;
        let cfg = if table.contains_key("experiment") {
            table.try_into::<SweepConfig>().map_err(toml_err)?
        } else {
            let mut top = toml::Table::new();
            for key in ["out", "workers"] {
                if let Some(v) = table.remove(key) {
                    top.insert(key.into(), v);
                }
            }
            let mut cfg: SweepConfig = top.try_into().map_err(toml_err)?;
            cfg.experiment = vec![table.try_into().map_err(toml_err)?];
            cfg
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.experiment.is_empty() {
            return Err(Error::InvalidConfig("no experiments configured".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidConfig("workers must be positive".into()));
        }
        let mut names = HashSet::new();
        for e in &self.experiment {
            e.validate()?;
            if !names.insert(&e.name) {
                return Err(Error::InvalidConfig(format!("experiment `{}` defined twice", e.name)));
            }
        }
        Ok(())
    }

    /// Applies command-line overrides and revalidates.
    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(out) = &o.out {
            self.out = Some(out.clone());
        }
        if let Some(w) = o.workers {
            self.workers = Some(w);
        }
        for e in &mut self.experiment {
            if let Some(seed) = o.seed {
                e.seeds = vec![seed];
            }
            if let Some(tol) = o.grad_tol {
                e.grad_tol = tol;
            }
            if let Some(k) = o.max_iters {
                e.optimizer.max_iters = Some(k);
            }
        }
        self.validate()
    }
}

/// Command-line overrides shared by the subcommands.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub grad_tol: Option<f64>,
    pub max_iters: Option<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE1: &str = r#"
name = "wls_sweep"
metrics = ["ai", "le", "bw", "0.75", "1", "1.25", "1.5"]
kappas = [10, 1e4]

[problem]
kind = "wls"

[optimizer]
kinds = ["rsd", "rtr"]
"#;

    #[test]
    fn single_experiment_defaults() {
        let cfg = SweepConfig::from_toml(TABLE1).unwrap();
        let e = &cfg.experiment[0];
        assert_eq!(e.problem.dimension(), 50);
        assert_eq!(e.seeds, vec![0]);
        assert_eq!(e.grad_tol, 1e-6);
        assert_eq!(e.budget(OptimizerKind::Rsd), 200);
        assert_eq!(e.rtr_config().max_iters, 200);
        assert_eq!(e.metric_specs().unwrap().len(), 7);
        assert_eq!(e.problem.spectrum_for(OptimizerKind::Rsd), SpectrumStyle::DecayFromOne);
        assert_eq!(e.problem.spectrum_for(OptimizerKind::Rtr), SpectrumStyle::centered());
    }

    #[test]
    fn per_problem_budgets() {
        use OptimizerKind::*;
        use ProblemKind::*;
        assert_eq!(default_budget(TraceRegression, Rsd), 800);
        assert_eq!(default_budget(TraceRegression, Rtr), 400);
        assert_eq!(default_budget(Sylvester, Rsd), 20000);
        assert_eq!(default_budget(Sylvester, Rtr), 100);
    }

    #[test]
    fn sweep_list_and_overrides() {
        let text = r#"
out = "results"
workers = 2

[[experiment]]
name = "a"
metrics = ["1"]
kappas = [10]
[experiment.problem]
kind = "sylvester"
n = 4
[experiment.optimizer]
kinds = ["rtr"]
rtr = { delta0 = 0.5 }

[[experiment]]
name = "b"
metrics = ["ai"]
kappas = [10]
seeds = [1, 2]
[experiment.problem]
kind = "trace_regression"
spectrum = "centered"
stretch = 2.0
[experiment.optimizer]
kinds = ["rsd"]
step = { rule = "fixed", eta = 0.1 }
"#;
        let mut cfg = SweepConfig::from_toml(text).unwrap();
        assert_eq!(cfg.workers, Some(2));
        assert_eq!(cfg.experiment[0].rtr_config().delta0, 0.5);
        assert_eq!(cfg.experiment[0].rtr_config().max_iters, 100);
        assert_eq!(
            cfg.experiment[1].problem.spectrum_for(OptimizerKind::Rsd),
            SpectrumStyle::CenteredGeometric { center: 1.0, stretch: 2.0 }
        );
        assert_eq!(cfg.experiment[1].rsd_config().step_rule, StepRule::Fixed { eta: 0.1 });
        cfg.apply(&Overrides {
            seed: Some(9),
            max_iters: Some(7),
            grad_tol: Some(1e-3),
            ..Overrides::default()
        })
        .unwrap();
        assert_eq!(cfg.experiment[1].seeds, vec![9]);
        assert_eq!(cfg.experiment[0].rtr_config().max_iters, 7);
        assert_eq!(cfg.experiment[1].rsd_config().grad_tol, 1e-3);
    }

    #[test]
    fn validation_errors() {
        let empty = TABLE1.replace(r#"["ai", "le", "bw", "0.75", "1", "1.25", "1.5"]"#, "[]");
        assert!(matches!(SweepConfig::from_toml(&empty), Err(Error::InvalidConfig(_))));
        let bad_kappa = TABLE1.replace("[10, 1e4]", "[0.5]");
        assert!(SweepConfig::from_toml(&bad_kappa).is_err());
        let bad_metric = TABLE1.replace("\"le\"", "\"hyperbolic\"");
        assert!(SweepConfig::from_toml(&bad_metric).is_err());
        let dup = TABLE1.replace("[\"ai\",", "[\"ai\", \"0.5\",");
        assert!(SweepConfig::from_toml(&dup).is_err());
        let unknown = format!("{TABLE1}\nbogus = 1\n");
        assert!(SweepConfig::from_toml(&unknown).is_err());
        let zero_budget = TABLE1.replace("kinds = [\"rsd\", \"rtr\"]", "kinds = [\"rsd\"]\nmax_iters = 0");
        assert!(SweepConfig::from_toml(&zero_budget).is_err());
        let mut cfg = SweepConfig::from_toml(TABLE1).unwrap();
        assert!(cfg
            .apply(&Overrides {
                grad_tol: Some(-1.0),
                ..Overrides::default()
            })
            .is_err());
    }
}
