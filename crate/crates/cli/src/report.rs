//! JSON solve reports.

use std::collections::BTreeMap;
use std::path::Path;

use adsignal::{consistency_residual, SolveReport};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Weights below this are dropped from reports.
pub const PRUNE_WEIGHT: f64 = 1e-12;

/// Largest prior mismatch a written report may have.
pub const MAX_RESIDUAL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomOut {
    pub weight: f64,
    pub posterior: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsOut {
    pub counters: BTreeMap<String, f64>,
    pub flags: Vec<String>,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub solver: String,
    pub value: f64,
    pub atoms: Vec<AtomOut>,
    pub diagnostics: DiagnosticsOut,
}

impl Report {
    /// Converts a solver result, pruning dust atoms and refusing schemes
    /// that do not reproduce `prior`.
    pub fn from_solve(report: &SolveReport, prior: &[f64]) -> CliResult<Self> {
        let residual = consistency_residual(&report.scheme, prior)?;
        if residual > MAX_RESIDUAL {
            return Err(CliError::Numerical(format!(
                "report: scheme residual {residual:e} against the prior exceeds {MAX_RESIDUAL:e}"
            )));
        }
        let atoms = report
            .scheme
            .atoms()
            .iter()
            .filter(|a| a.weight >= PRUNE_WEIGHT)
            .map(|a| {
                let total: f64 = a.posterior.probs().iter().sum();
                AtomOut {
                    weight: a.weight,
                    posterior: a.posterior.probs().iter().map(|p| p / total).collect(),
                }
            })
            .collect();
        let diag = &report.diagnostics;
        Ok(Self {
            solver: report.solver_id.to_string(),
            value: report.value,
            atoms,
            diagnostics: DiagnosticsOut {
                counters: diag.counters.clone(),
                flags: diag.flags.clone(),
                wall_time_ms: diag.wall_time.as_secs_f64() * 1e3,
            },
        })
    }

    /// `max_θ |Σ weight · posterior(θ) − prior(θ)|` of the written atoms.
    pub fn residual(&self, prior: &[f64]) -> f64 {
        prior
            .iter()
            .enumerate()
            .map(|(t, mu)| {
                let mean: f64 = self.atoms.iter().map(|a| a.weight * a.posterior[t]).sum();
                (mean - mu).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, self.to_json())
            .map_err(|e| CliError::io(format!("cannot write report {}", path.display()), e))
    }
}
