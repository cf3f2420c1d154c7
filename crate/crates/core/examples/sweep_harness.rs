//! Runs a small sweep from an inline config and prints the iteration table.

use ap_manifold::harness::{run_sweep, SweepConfig};
use ap_manifold::Result;

const CONFIG: &str = r#"
name = "demo"
metrics = ["ai", "bw", "1"]
kappas = [10, 1000]

[problem]
kind = "wls"
n = 10

[optimizer]
kinds = ["rsd", "rtr"]
"#;

fn main() -> Result<()> {
    let cfg = SweepConfig::from_toml(CONFIG)?;
    let out = std::env::temp_dir().join("ap_manifold_demo");
    let report = run_sweep(&cfg, &out)?;
    print!("{}", report.table_text);
    println!("traces, summary.csv, tables and gnuplot scripts in {}", out.display());
    Ok(())
}
