use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use lagdiff::postprocess::convergence_order;
use lagdiff::Dim;
use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, ExperimentConfig, MeshSource};
use crate::experiment::{run_experiment, write_file, write_json, Errors, RunError, RunSummary, Timing};

/// One rung of a refinement ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rung {
    pub nodes: usize,
    pub tau: f64,
}

fn parse_value(s: &str) -> Option<f64> {
    match s.split_once('/') {
        Some((a, b)) => Some(a.trim().parse::<f64>().ok()? / b.trim().parse::<f64>().ok()?),
        None => s.trim().parse().ok(),
    }
}

/// Ladder file: one `N tau` pair per line (comma or whitespace separated,
/// `tau` may be a fraction such as `1/400`).
pub fn parse_ladder(text: &str) -> Result<Vec<Rung>, ConfigError> {
    let mut rungs = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|p| !p.is_empty()).collect();
        let bad = || ConfigError::new("ladder", format!("line {}: expected 'N tau', got '{line}'", k + 1));
        if parts.len() != 2 {
            return Err(bad());
        }
        let nodes = parts[0].parse::<usize>().map_err(|_| bad())?;
        let tau = parse_value(parts[1]).filter(|t| *t > 0.0).ok_or_else(bad)?;
        rungs.push(Rung { nodes, tau });
    }
    if rungs.is_empty() {
        return Err(ConfigError::new("ladder", "no rows"));
    }
    Ok(rungs)
}

/// Error columns with their observed orders; orders are `None` on the first row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub nodes_requested: usize,
    pub nodes: usize,
    pub tau: f64,
    pub errors: Option<Errors>,
    pub l2_order: Option<f64>,
    pub x0_order: Option<f64>,
    pub interface_order: Option<f64>,
    pub max_order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub rows: Vec<SweepRow>,
}

/// Config of rung `k`: the mesh gets the rung's node count, and disks become
/// members of the ring-doubling family started at the first rung.
pub fn rung_config(base: &ExperimentConfig, ladder: &[Rung], k: usize) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = base.clone();
    let rung = ladder[k];
    cfg.tau = rung.tau;
    cfg.mesh = match &base.mesh {
        MeshSource::Disk { radius, grading, base: b, .. } => MeshSource::Disk {
            radius: *radius,
            nodes: rung.nodes,
            grading: *grading,
            base: Some(b.unwrap_or(ladder[0].nodes)),
        },
        other => other
            .with_nodes(rung.nodes)
            .ok_or_else(|| ConfigError::new("mesh", format!("'{other}' cannot be refined by node count")))?,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn orders(rows: &[(usize, Option<f64>)], dim: Dim) -> Vec<Option<f64>> {
    let mut out = vec![None; rows.len()];
    for k in 1..rows.len() {
        if let (Some(a), Some(b)) = (rows[k - 1].1, rows[k].1) {
            out[k] = convergence_order(&[(rows[k - 1].0, a), (rows[k].0, b)], dim).ok().map(|o| o[0]);
        }
    }
    out
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

/// Runs every rung (each in its own thread and directory `rows/<k>`) and
/// writes convergence.csv and summary.json under `out`.
pub fn run_sweep(base: &ExperimentConfig, ladder: &[Rung], out: &Path) -> Result<SweepSummary, RunError> {
    let started = Instant::now();
    let configs = (0..ladder.len()).map(|k| rung_config(base, ladder, k)).collect::<Result<Vec<_>, _>>()?;
    let results: Vec<Result<RunSummary, RunError>> = std::thread::scope(|s| {
        let handles: Vec<_> = configs
            .iter()
            .enumerate()
            .map(|(k, cfg)| {
                let dir = out.join(format!("rows/{k}"));
                s.spawn(move || run_experiment(cfg, &dir))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep row panicked")).collect()
    });
    let summaries = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let dim = if base.dim == 1 { Dim::One } else { Dim::Two };
    let column = |f: fn(&Errors) -> Option<f64>| -> Vec<(usize, Option<f64>)> {
        summaries.iter().map(|s| (s.nodes, s.errors.as_ref().and_then(f))).collect()
    };
    let l2 = orders(&column(|e| Some(e.l2)), dim);
    let x0 = orders(&column(|e| e.x0), dim);
    let itf = orders(&column(|e| Some(e.interface)), dim);
    let mx = orders(&column(|e| Some(e.max)), dim);
    let rows: Vec<SweepRow> = summaries
        .iter()
        .enumerate()
        .map(|(k, s)| SweepRow {
            nodes_requested: ladder[k].nodes,
            nodes: s.nodes,
            tau: ladder[k].tau,
            errors: s.errors,
            l2_order: l2[k],
            x0_order: x0[k],
            interface_order: itf[k],
            max_order: mx[k],
        })
        .collect();
    let mut csv = String::from(
        "N,nodes,tau,l2_error,l2_order,x0_error,x0_order,interface_error,interface_order,max_error,max_order\n",
    );
    for r in &rows {
        let e = r.errors;
        let _ = writeln!(
            csv,
            "{},{},{:e},{},{},{},{},{},{},{},{}",
            r.nodes_requested,
            r.nodes,
            r.tau,
            cell(e.map(|e| e.l2)),
            cell(r.l2_order),
            cell(e.and_then(|e| e.x0)),
            cell(r.x0_order),
            cell(e.map(|e| e.interface)),
            cell(r.interface_order),
            cell(e.map(|e| e.max)),
            cell(r.max_order),
        );
    }
    write_file(&out.join("convergence.csv"), &csv)?;
    let summary = SweepSummary { rows };
    write_json(&out.join("summary.json"), &summary)?;
    write_json(&out.join("timing.json"), &Timing { wall_clock_seconds: started.elapsed().as_secs_f64() })?;
    Ok(summary)
}
