use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ProblemSection;
use crate::error::{Error, Result};
use crate::geometry::MetricSpec;
use crate::hessian::{contraction_factor, fit_loglog_slope, spectrum_report, HessianReport};
use crate::optim::OptimizerKind;
use crate::problems::{make_instance, ProblemKind};

/// Hessian diagnostics over a κ sweep at the known minimizer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub problem: ProblemSection,
    pub metrics: Vec<String>,
    pub kappas: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    pub out: Option<std::path::PathBuf>,
}

impl SpectrumConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SpectrumConfig = toml::from_str(text).map_err(|e| Error::InvalidConfig(format!("TOML: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.metrics.is_empty() || self.kappas.is_empty() {
            return Err(Error::InvalidConfig("spectrum needs at least one metric and one kappa".into()));
        }
        for m in &self.metrics {
            m.parse::<MetricSpec>()?;
        }
        if let Some(k) = self.kappas.iter().find(|k| !(**k >= 1.0 && k.is_finite())) {
            return Err(Error::InvalidConfig(format!("kappa {k} must be finite and >= 1")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SpectrumTable {
    /// Reports in metric-major order, with `η = 1/λ_max`.
    pub reports: Vec<HessianReport>,
    /// Fitted slope of `ln κ_hess` against `ln κ(P*)` per metric; `None`
    /// with fewer than two distinct κ.
    pub slopes: Vec<(String, Option<f64>)>,
}

pub fn spectrum_sweep(cfg: &SpectrumConfig) -> Result<SpectrumTable> {
    cfg.validate()?;
    let mut reports = Vec::new();
    let mut slopes = Vec::new();
    for m in &cfg.metrics {
        let metric: MetricSpec = m.parse()?;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for &kappa in &cfg.kappas {
            let spec = cfg.problem.instance(OptimizerKind::Rsd, kappa, cfg.seed);
            let inst = make_instance(&spec)?;
            let problem = match (&inst.noiseless, spec.kind) {
                (Some(clean), ProblemKind::TraceRegression) => clean,
                _ => &inst.problem,
            };
            let mut rep = spectrum_report(problem, &inst.p_star, metric, 1.0, None)?;
            rep.eta = 1.0 / rep.lambda_max;
            rep.rho_star = contraction_factor(rep.eta, rep.lambda_min, rep.lambda_max);
            xs.push(rep.kappa_p);
            ys.push(rep.kappa_hess);
            reports.push(rep);
        }
        let distinct = xs.iter().any(|x| (x / xs[0] - 1.0).abs() > 1e-9);
        slopes.push((metric.slug(), distinct.then(|| fit_loglog_slope(&xs, &ys))));
    }
    Ok(SpectrumTable { reports, slopes })
}

impl SpectrumTable {
    pub fn text(&self) -> String {
        let mut out = format!(
            "{:<16} {:>10} {:>14} {:>14} {:>12}\n",
            "metric", "kappa_P", "lambda_min", "lambda_max", "kappa_hess"
        );
        for r in &self.reports {
            let _ = writeln!(
                out,
                "{:<16} {:>10.3e} {:>14.6e} {:>14.6e} {:>12.4e}",
                r.metric, r.kappa_p, r.lambda_min, r.lambda_max, r.kappa_hess
            );
        }
        out.push_str("\nlog-log slope of kappa_hess against kappa_P\n");
        for (m, s) in &self.slopes {
            match s {
                Some(s) => {
                    let _ = writeln!(out, "{m:<8} {s:.4}");
                }
                None => {
                    let _ = writeln!(out, "{m:<8} -");
                }
            }
        }
        out
    }

    pub fn csv(&self) -> String {
        let mut out = String::new();
        if let Some(first) = self.reports.first() {
            let keys: Vec<&str> = first.to_record().iter().map(|(k, _)| *k).collect();
            out.push_str(&keys.join(","));
            out.push('\n');
        }
        for r in &self.reports {
            let vals: Vec<String> = r.to_record().into_iter().map(|(_, v)| v).collect();
            out.push_str(&vals.join(","));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_hessian_sweep() {
        let cfg = SpectrumConfig::from_toml(
            r#"
metrics = ["1", "0.5", "ai"]
kappas = [10, 100, 1000]
[problem]
kind = "wls"
n = 6
"#,
        )
        .unwrap();
        let t = spectrum_sweep(&cfg).unwrap();
        assert_eq!(t.reports.len(), 9);
        for r in t.reports.iter().filter(|r| r.alpha == Some(1.0)) {
            assert!(r.lambda_min >= 1.0 - 1e-8 && r.lambda_max <= 2.0 + 1e-8);
            assert!((r.eta * r.lambda_max - 1.0).abs() < 1e-12);
        }
        let bw = t.slopes.iter().find(|(m, _)| m == "bw").unwrap().1.unwrap();
        assert!((bw - 1.0).abs() < 0.15, "slope {bw}");
        let ai = t.slopes.iter().find(|(m, _)| m == "ai").unwrap().1.unwrap();
        assert!((ai - 2.0).abs() < 0.15, "slope {ai}");
        assert!(t.text().contains("kappa_hess"));
        assert_eq!(t.csv().lines().count(), 10);
    }

    #[test]
    fn rejects_empty_lists() {
        let text = "metrics = []\nkappas = [10]\n[problem]\nkind = \"wls\"\n";
        assert!(SpectrumConfig::from_toml(text).is_err());
    }
}
