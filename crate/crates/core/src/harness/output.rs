use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::config::{ExperimentSpec, Method};
use super::run::{ExperimentResults, ResultRow};
use crate::channel::ScenarioConfig;
use crate::error::Result;

pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const METADATA_FILE: &str = "metadata.json";
pub const PATTERN_FILE: &str = "beampattern.csv";

/// Writes the result table. The column order is fixed: experiment, method,
/// sweep_value, seed, iteration, sum_rate_wc, rate_u1..rate_uK, qos_ok,
/// relax_level, wall_ms, then a trailing status column.
pub fn write_results<W: Write>(out: W, rows: &[ResultRow], n_users: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["experiment", "method", "sweep_value", "seed", "iteration", "sum_rate_wc"]
        .map(String::from)
        .to_vec();
    header.extend((1..=n_users).map(|k| format!("rate_u{k}")));
    header.extend(["qos_ok", "relax_level", "wall_ms", "status"].map(String::from));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.experiment.to_string(),
            r.method.to_string(),
            r.sweep_value.to_string(),
            r.seed.to_string(),
            r.iteration.to_string(),
            r.sum_rate_wc.to_string(),
        ];
        rec.extend(r.user_rates.iter().map(f64::to_string));
        rec.extend([
            r.qos_ok.to_string(),
            r.relax_level.to_string(),
            r.wall_ms.to_string(),
            r.status.clone(),
        ]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub experiment: String,
    pub method: Method,
    pub sweep_value: f64,
    pub iteration: Option<usize>,
    /// Successful runs.
    pub n: usize,
    pub mean_sum_rate_wc: f64,
    /// Sample standard deviation; 0 for a single run.
    pub std_sum_rate_wc: f64,
    /// Fraction of successful runs meeting every minimum rate.
    pub qos_fraction: f64,
    pub failures: usize,
}

fn mean_std(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    if x.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = x.iter().sum::<f64>() / n;
    let var = if x.len() > 1 {
        x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Mean and spread per (sweep value, method). Convergence runs are
/// summarized per iteration, each run holding its last value after it
/// stops; other experiments use each run's final row.
pub fn summarize(spec: &ExperimentSpec, results: &ExperimentResults) -> Vec<SummaryRow> {
    let convergence = spec.kind == super::config::ExperimentKind::Convergence;
    // (sweep index, method) -> seed -> rows in iteration order
    let mut groups: BTreeMap<(usize, Method), BTreeMap<usize, Vec<&ResultRow>>> = BTreeMap::new();
    for r in &results.rows {
        groups
            .entry((r.sweep_index, r.method))
            .or_default()
            .entry(r.seed)
            .or_default()
            .push(r);
    }
    let mut out = Vec::new();
    for ((sweep_index, method), seeds) in groups {
        let ok: Vec<&Vec<&ResultRow>> = seeds.values().filter(|rows| rows.iter().all(|r| r.is_ok())).collect();
        let failures = seeds.len() - ok.len();
        let last_iter = if convergence {
            ok.iter().map(|rows| rows.len()).max().unwrap_or(1) - 1
        } else {
            0
        };
        for it in 0..=last_iter {
            let picked: Vec<&ResultRow> = ok
                .iter()
                .map(|rows| if convergence { rows[it.min(rows.len() - 1)] } else { rows[rows.len() - 1] })
                .collect();
            let rates: Vec<f64> = picked.iter().map(|r| r.sum_rate_wc).collect();
            let (mean, std) = mean_std(&rates);
            let qos = picked.iter().filter(|r| r.qos_ok).count();
            out.push(SummaryRow {
                experiment: spec.kind.to_string(),
                method,
                sweep_value: spec.sweep[sweep_index],
                iteration: convergence.then_some(it),
                n: picked.len(),
                mean_sum_rate_wc: mean,
                std_sum_rate_wc: std,
                qos_fraction: if picked.is_empty() { f64::NAN } else { qos as f64 / picked.len() as f64 },
                failures,
            });
        }
    }
    out
}

pub fn write_summary<W: Write>(out: W, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_patterns<W: Write>(out: W, results: &ExperimentResults) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "method",
        "sweep_value",
        "seed",
        "array",
        "user",
        "elevation_deg",
        "azimuth_deg",
        "gain_db",
    ])?;
    for p in &results.patterns {
        let side = match p.side {
            super::run::ArraySide::Transmit => "transmit",
            super::run::ArraySide::Receive => "receive",
        };
        for (el, row) in p.elevations_deg.iter().zip(&p.gain_db) {
            for (az, g) in p.azimuths_deg.iter().zip(row) {
                w.write_record([
                    p.method.to_string(),
                    p.sweep_value.to_string(),
                    p.seed.to_string(),
                    side.to_string(),
                    (p.user + 1).to_string(),
                    el.to_string(),
                    az.to_string(),
                    g.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct Metadata<'a> {
    version: &'a str,
    master_seed: u64,
    seed_derivation: &'a str,
    eval_grid: [usize; 2],
    scenario: &'a ScenarioConfig,
    experiment: &'a ExperimentSpec,
    runs: usize,
    failed_runs: usize,
}

pub fn write_metadata<W: Write>(mut out: W, cfg: &ScenarioConfig, spec: &ExperimentSpec, results: &ExperimentResults) -> Result<()> {
    let seed_derivation = if spec.paired_sweeps {
        "ChaCha8 seeded with splitmix64(splitmix64(splitmix64(master_seed) ^ 0) ^ seed_index)"
    } else {
        "ChaCha8 seeded with splitmix64(splitmix64(splitmix64(master_seed) ^ sweep_index) ^ seed_index)"
    };
    let meta = Metadata {
        version: concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")),
        master_seed: cfg.master_seed,
        seed_derivation,
        eval_grid: [spec.eval_grid, spec.eval_grid],
        scenario: cfg,
        experiment: spec,
        runs: spec.sweep.len() * spec.num_seeds * spec.methods.len(),
        failed_runs: results.failures(),
    };
    serde_json::to_writer_pretty(&mut out, &meta)?;
    writeln!(out)?;
    Ok(())
}

/// Writes `results.csv`, `summary.csv`, `metadata.json` and, for
/// beampattern runs, `beampattern.csv` into `dir`.
pub fn write_outputs(dir: &Path, cfg: &ScenarioConfig, spec: &ExperimentSpec, results: &ExperimentResults) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let file = |name: &str| -> Result<std::io::BufWriter<std::fs::File>> {
        Ok(std::io::BufWriter::new(std::fs::File::create(dir.join(name))?))
    };
    write_results(file(RESULTS_FILE)?, &results.rows, cfg.n_users)?;
    write_summary(file(SUMMARY_FILE)?, &summarize(spec, results))?;
    write_metadata(file(METADATA_FILE)?, cfg, spec, results)?;
    if !results.patterns.is_empty() {
        write_patterns(file(PATTERN_FILE)?, results)?;
    }
    Ok(())
}
