//! Benchmark suites: solve each listed instance and compare against a
//! brute-force baseline.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use adsignal::auction::RevenueEvaluator;
use adsignal::oracle::{exact_sm_opt, grid_opt};
use adsignal::rv::{enumerate_q_uniform_capped, Regime, DEFAULT_GRID_CAP};
use adsignal::signaling_lp::solve_over;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::instance_file::InstanceFile;
use crate::solve::{self, SolveOptions, SolverKind};

pub const DEFAULT_ORACLE_Q: usize = 100;

pub const HEADER: [&str; 9] = [
    "instance",
    "solver",
    "value",
    "oracle_value",
    "gap",
    "tolerance",
    "within_tolerance",
    "runtime_ms",
    "status",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    /// Optimum over `q`-uniform posteriors.
    Grid,
    /// Optimum over single-minded vertices.
    ExactSm,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteEntry {
    pub instance: String,
    pub solver: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    /// Largest acceptable `oracle_value − value`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suite {
    pub runs: Vec<SuiteEntry>,
}

impl Suite {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("cannot read suite {}", path.display()), e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("invalid suite: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub instance: String,
    pub solver: String,
    pub value: Option<f64>,
    pub oracle_value: Option<f64>,
    pub tolerance: f64,
    pub runtime_ms: f64,
    /// `None` on success, else the failure message.
    pub error: Option<String>,
}

impl BenchRow {
    pub fn gap(&self) -> Option<f64> {
        Some(self.oracle_value? - self.value?)
    }

    pub fn within_tolerance(&self) -> Option<bool> {
        self.gap().map(|g| g <= self.tolerance)
    }

    fn record(&self) -> Vec<String> {
        let num = |v: Option<f64>| v.map(|x| format!("{x:.9}")).unwrap_or_default();
        vec![
            self.instance.clone(),
            self.solver.clone(),
            num(self.value),
            num(self.oracle_value),
            num(self.gap()),
            format!("{}", self.tolerance),
            self.within_tolerance().map(|b| b.to_string()).unwrap_or_default(),
            format!("{:.3}", self.runtime_ms),
            match &self.error {
                None => "OK".to_string(),
                Some(msg) => format!("ERROR: {msg}"),
            },
        ]
    }
}

fn default_tolerance(kind: SolverKind, eps: f64) -> f64 {
    match kind {
        SolverKind::FixedM | SolverKind::FixedD => 1e-6,
        SolverKind::SingleMinded | SolverKind::Rv => eps,
    }
}

fn entry_options(entry: &SuiteEntry, seed: u64) -> CliResult<SolveOptions> {
    let mut opts = SolveOptions::default();
    if let Some(eps) = entry.eps {
        opts.eps = eps;
    }
    if let Some(regime) = &entry.regime {
        opts.regime = regime.parse::<Regime>()?;
    }
    opts.delta = entry.delta;
    opts.rv.seed = entry.seed.unwrap_or(seed);
    Ok(opts)
}

/// Baseline optimum, or `None` when the entry asks for none.
fn oracle_value(file: &InstanceFile, kind: SolverKind, entry: &SuiteEntry) -> CliResult<Option<f64>> {
    let oracle = entry.oracle.unwrap_or(if kind == SolverKind::SingleMinded {
        OracleKind::ExactSm
    } else {
        OracleKind::Grid
    });
    let q = entry.q.unwrap_or(DEFAULT_ORACLE_Q);
    match oracle {
        OracleKind::None => Ok(None),
        OracleKind::ExactSm => {
            let sm = file.single_minded()?.ok_or_else(|| {
                CliError::Validation("invalid oracle: exact-sm needs a single_minded block".into())
            })?;
            Ok(Some(exact_sm_opt(&file.instance()?, &sm)?))
        }
        OracleKind::Grid if file.has_distribution() => distribution_grid_opt(file, q).map(Some),
        OracleKind::Grid => Ok(Some(grid_opt(&file.instance()?, q)?)),
    }
}

/// Grid optimum of the exact expected revenue under a finite distribution.
fn distribution_grid_opt(file: &InstanceFile, q: usize) -> CliResult<f64> {
    let dist = file.distribution.as_ref().expect("caller checked");
    file.oracle()?;
    let grid = enumerate_q_uniform_capped::<f64>(file.prior.len(), q, DEFAULT_GRID_CAP)?;
    let mut evals: Vec<_> = dist
        .matrices
        .iter()
        .map(|mat| RevenueEvaluator::from_parts(mat, &file.lambdas))
        .collect();
    let revenues: Vec<f64> = grid
        .posteriors
        .iter()
        .map(|xi| {
            evals
                .iter_mut()
                .zip(&dist.probs)
                .map(|(e, p)| p * e.eval(xi.probs()))
                .sum()
        })
        .collect();
    Ok(solve_over(&file.prior, &grid.posteriors, &revenues)?.value)
}

fn run_entry(entry: &SuiteEntry, base: &Path, seed: u64) -> BenchRow {
    let start = Instant::now();
    let mut row = BenchRow {
        instance: entry.instance.clone(),
        solver: entry.solver.clone(),
        value: None,
        oracle_value: None,
        tolerance: f64::NAN,
        runtime_ms: 0.0,
        error: None,
    };
    let outcome = (|| -> CliResult<()> {
        let kind: SolverKind = entry.solver.parse()?;
        let opts = entry_options(entry, seed)?;
        row.tolerance = entry.tolerance.unwrap_or(default_tolerance(kind, opts.eps));
        let file = InstanceFile::load(&resolve(base, &entry.instance))?;
        let report = solve::run(&file, kind, &opts)?;
        row.value = Some(report.value);
        row.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
        row.oracle_value = oracle_value(&file, kind, entry)?;
        Ok(())
    })();
    if let Err(e) = outcome {
        row.error = Some(e.to_string());
        if row.runtime_ms == 0.0 {
            row.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
        }
    }
    row
}

fn resolve(base: &Path, rel: &str) -> PathBuf {
    let p = Path::new(rel);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Runs every entry in order. Failures are recorded in their row and never
/// abort the suite. Relative instance paths resolve against `base`.
pub fn run_suite(suite: &Suite, base: &Path, seed: u64) -> Vec<BenchRow> {
    suite.runs.iter().map(|e| run_entry(e, base, seed)).collect()
}

pub fn write_csv<W: Write>(rows: &[BenchRow], out: W) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| CliError::Validation(format!("csv output: {e}"));
    w.write_record(HEADER).map_err(io)?;
    for row in rows {
        w.write_record(row.record()).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io("csv output", e))
}
