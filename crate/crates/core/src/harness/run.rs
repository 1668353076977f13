//! Running a configured experiment and writing its CSV and JSON results.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{hex, ExperimentConfig};
use crate::error::{Error, Result};
use crate::exec::pool;
use crate::limit_engine::{evaluate_point, CurvePoint};

pub const CSV_HEADER: &str = "scenario,n,window_size,b_n,k,lambda_hat,lambda_stderr,tv,tv_stderr,bound_total,term_boundary,term_gamma,term_psi,term_xi,seed,config_hash";

/// Marker line closing the CSV of a run that stopped early.
pub const INCOMPLETE_MARKER: &str = "# incomplete";

pub const WORKERS_ENV: &str = "AMENPOIS_WORKERS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    #[serde(flatten)]
    pub point: CurvePoint,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub scenario: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub m_reps: u64,
    pub n_grid: Vec<usize>,
    pub complete: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub rows: Vec<ResultRow>,
    /// SHA-256 of the CSV bytes; wall times are not in the CSV.
    pub csv_sha256: String,
    pub wall_time_s: f64,
    pub config: ExperimentConfig,
}

impl ExperimentResult {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub result: ExperimentResult,
    pub csv: String,
    pub csv_path: Option<PathBuf>,
    pub json_path: Option<PathBuf>,
}

/// Worker count: the environment variable beats the flag, which beats
/// the number of available cores.
pub fn resolve_workers(env: Option<&str>, flag: Option<usize>) -> Result<usize> {
    if let Some(v) = env.map(str::trim).filter(|v| !v.is_empty()) {
        return match v.parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::Config(vec![format!("{WORKERS_ENV}: not a positive integer: {v:?}")])),
        };
    }
    match flag {
        Some(0) => Err(Error::Config(vec!["workers: must be positive".into()])),
        Some(n) => Ok(n),
        None => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn joined(v: &[f64]) -> String {
    v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(";")
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn csv_row(scenario: &str, p: &CurvePoint, seed: u64, hash: &str) -> String {
    let bound = match &p.bound {
        Some(b) => [b.total, b.term_boundary, b.term_gamma, b.term_psi_residue, b.term_xi_residue]
            .map(num)
            .join(","),
        None => ",,,,".to_string(),
    };
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        csv_field(scenario),
        p.n,
        p.window_size,
        p.b_n,
        p.lambda.len(),
        joined(&p.lambda),
        joined(&p.lambda_stderr),
        num(p.tv),
        num(p.tv_stderr),
        bound,
        seed,
        hash
    )
}

/// Runs every window in order on a pool of `workers` threads. A failing
/// window ends the run; the rows before it are kept and the result is
/// marked incomplete.
pub fn execute(config: &ExperimentConfig, workers: usize) -> Result<(ExperimentResult, String)> {
    config.validate()?;
    let hash = config.hash();
    let scenario = config.scenario();
    let pool = pool(workers)?;
    let started = Instant::now();
    let mut rows = Vec::new();
    let mut csv = String::new();
    writeln!(csv, "{CSV_HEADER}").unwrap();
    let mut error = None;
    for (i, &n) in config.n_grid.iter().enumerate() {
        let t = Instant::now();
        match pool.install(|| evaluate_point(&scenario, i, n, config.m_reps, config.master_seed)) {
            Ok(point) => {
                writeln!(csv, "{}", csv_row(&config.name, &point, config.master_seed, &hash)).unwrap();
                rows.push(ResultRow {
                    point,
                    wall_time_s: t.elapsed().as_secs_f64(),
                });
            }
            Err(e) => {
                error = Some(format!("n = {n}: {e}"));
                break;
            }
        }
    }
    if let Some(e) = &error {
        writeln!(
            csv,
            "{INCOMPLETE_MARKER}: {} of {} rows; seed {}; config_hash {hash}; {}",
            rows.len(),
            config.n_grid.len(),
            config.master_seed,
            e.replace('\n', " ")
        )
        .unwrap();
    }
    let result = ExperimentResult {
        scenario: config.name.clone(),
        config_hash: hash,
        master_seed: config.master_seed,
        m_reps: config.m_reps,
        n_grid: config.n_grid.clone(),
        complete: error.is_none(),
        error,
        rows,
        csv_sha256: hex(&Sha256::digest(csv.as_bytes())),
        wall_time_s: started.elapsed().as_secs_f64(),
        config: config.clone(),
    };
    Ok((result, csv))
}

/// Applies the options, runs, and writes `<stem>.csv` and `<stem>.json`
/// into the output directory. Files are written even when the run stops
/// early; check `result.complete`.
pub fn run(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutput> {
    let mut config = config.clone();
    if let Some(seed) = opts.seed {
        config.master_seed = seed;
    }
    let workers = resolve_workers(std::env::var(WORKERS_ENV).ok().as_deref(), opts.workers)?;
    let (result, csv) = execute(&config, workers)?;
    let dir = opts
        .out_dir
        .clone()
        .or_else(|| config.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)?;
    let csv_path = dir.join(format!("{}.csv", config.stem()));
    let json_path = dir.join(format!("{}.json", config.stem()));
    std::fs::write(&csv_path, &csv)?;
    std::fs::write(&json_path, serde_json::to_string_pretty(&result)?)?;
    Ok(RunOutput {
        result,
        csv,
        csv_path: Some(csv_path),
        json_path: Some(json_path),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_order() {
        let cols: Vec<_> = CSV_HEADER.split(',').collect();
        assert_eq!(cols.len(), 16);
        assert_eq!(cols[0], "scenario");
        assert_eq!(cols[9], "bound_total");
        assert_eq!(cols[15], "config_hash");
    }

    #[test]
    fn worker_resolution() {
        assert_eq!(resolve_workers(Some("3"), Some(8)).unwrap(), 3);
        assert_eq!(resolve_workers(None, Some(8)).unwrap(), 8);
        assert_eq!(resolve_workers(Some(" "), Some(2)).unwrap(), 2);
        assert!(resolve_workers(Some("zero"), Some(2)).is_err());
        assert!(resolve_workers(Some("0"), None).is_err());
        assert!(resolve_workers(None, Some(0)).is_err());
        assert!(resolve_workers(None, None).unwrap() >= 1);
    }

    #[test]
    fn quoting() {
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(joined(&[1.0, 0.25]), "1;0.25");
        assert_eq!(num(f64::INFINITY), "inf");
    }
}
