use std::fmt::Write as _;

use super::run::SummaryRow;

/// Best markers for one row within its (problem, n, optimizer, κ) block.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BestMarks {
    pub iters: bool,
    pub time: bool,
}

#[derive(Clone, Debug)]
pub struct Tables {
    pub text: String,
    pub csv: String,
    pub marks: Vec<BestMarks>,
}

fn block_key(r: &SummaryRow) -> (String, usize, String, u64) {
    (r.problem.clone(), r.n, r.optimizer.clone(), r.kappa.to_bits())
}

/// Marks the minimum iteration count and minimum time among converged rows
/// of each block. All tied minima are marked.
pub fn mark_best(rows: &[SummaryRow]) -> Vec<BestMarks> {
    let mut marks = vec![BestMarks::default(); rows.len()];
    for (i, r) in rows.iter().enumerate() {
        if !r.converged {
            continue;
        }
        let peers: Vec<&SummaryRow> = rows
            .iter()
            .filter(|o| o.converged && block_key(o) == block_key(r))
            .collect();
        marks[i].iters = peers.iter().all(|o| r.iters <= o.iters);
        marks[i].time = peers.iter().all(|o| r.total_s <= o.total_s);
    }
    marks
}

/// Renders one text block per (problem, n, optimizer) with a `#iter time`
/// column pair per κ, plus a long-format CSV. `*` marks the best iteration
/// count, `+` the best time, `(nc)` a run that did not converge.
pub fn emit_tables(rows: &[SummaryRow]) -> Tables {
    let marks = mark_best(rows);

    let mut csv = String::from("problem,n,optimizer,kappa,metric,seed,iters,time_s,converged,best_iters,best_time\n");
    for (r, m) in rows.iter().zip(&marks) {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.problem, r.n, r.optimizer, r.kappa, r.metric, r.seed, r.iters, r.total_s, r.converged, m.iters, m.time
        );
    }

    let mut text = String::new();
    let mut groups: Vec<(String, usize, String)> = Vec::new();
    for r in rows {
        let g = (r.problem.clone(), r.n, r.optimizer.clone());
        if !groups.contains(&g) {
            groups.push(g);
        }
    }
    for (problem, n, optimizer) in groups {
        let in_group = |r: &SummaryRow| r.problem == problem && r.n == n && r.optimizer == optimizer;
        let mut kappas: Vec<f64> = Vec::new();
        let mut metrics: Vec<String> = Vec::new();
        for r in rows.iter().filter(|r| in_group(r)) {
            if !kappas.contains(&r.kappa) {
                kappas.push(r.kappa);
            }
            if !metrics.contains(&r.metric) {
                metrics.push(r.metric.clone());
            }
        }
        let _ = writeln!(text, "{} n={} {}", problem, n, optimizer.to_uppercase());
        let mut header = format!("{:<8}", "metric");
        for k in &kappas {
            let _ = write!(header, " | {:^23}", format!("kappa={k:e}"));
        }
        let _ = writeln!(text, "{header}");
        let mut sub = format!("{:<8}", "");
        for _ in &kappas {
            let _ = write!(sub, " | {:>12} {:>10}", "#iter", "time(s)");
        }
        let _ = writeln!(text, "{sub}");
        for metric in &metrics {
            let mut line = format!("{metric:<8}");
            for &k in &kappas {
                let cell: Vec<(usize, &SummaryRow)> = rows
                    .iter()
                    .enumerate()
                    .filter(|(_, r)| in_group(r) && &r.metric == metric && r.kappa == k)
                    .collect();
                match cell.first() {
                    None => {
                        let _ = write!(line, " | {:>12} {:>10}", "-", "-");
                    }
                    Some(&(i, r)) => {
                        let iters = format!(
                            "{}{}{}",
                            r.iters,
                            if marks[i].iters { "*" } else { "" },
                            if r.converged { "" } else { " (nc)" }
                        );
                        let time = format!("{:.3}{}", r.total_s, if marks[i].time { "+" } else { "" });
                        let _ = write!(line, " | {iters:>12} {time:>10}");
                    }
                }
            }
            let _ = writeln!(text, "{line}");
        }
        let _ = writeln!(text);
    }
    Tables { text, csv, marks }
}
