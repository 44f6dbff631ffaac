//! Dispatch from the command line to the solver families.

use adsignal::kv_exact::{solve_fixed_d, solve_fixed_m};
use adsignal::rv::{solve_rv, FixedValuations, Regime, RvOptions};
use adsignal::single_minded::solve_single_minded;
use adsignal::SolveReport;

use crate::error::{CliError, CliResult};
use crate::instance_file::InstanceFile;

pub const DEFAULT_EPS: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    FixedM,
    FixedD,
    SingleMinded,
    Rv,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::FixedM => "fixed-m",
            SolverKind::FixedD => "fixed-d",
            SolverKind::SingleMinded => "single-minded",
            SolverKind::Rv => "rv",
        }
    }
}

impl std::str::FromStr for SolverKind {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "fixed-m" => Ok(SolverKind::FixedM),
            "fixed-d" => Ok(SolverKind::FixedD),
            "single-minded" => Ok(SolverKind::SingleMinded),
            "rv" => Ok(SolverKind::Rv),
            other => Err(CliError::Validation(format!(
                "invalid solver: {other:?}; expected fixed-m, fixed-d, single-minded or rv"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub eps: f64,
    pub regime: Regime,
    /// Valuation lower bound for the bounded-away regime.
    pub delta: Option<f64>,
    pub rv: RvOptions,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            eps: DEFAULT_EPS,
            regime: Regime::FixedD,
            delta: None,
            rv: RvOptions::default(),
        }
    }
}

fn known_only(file: &InstanceFile, kind: SolverKind) -> CliResult<()> {
    if file.has_distribution() {
        return Err(CliError::Validation(format!(
            "invalid distribution: the {} solver needs known valuations; use rv",
            kind.name()
        )));
    }
    Ok(())
}

pub fn run(file: &InstanceFile, kind: SolverKind, opts: &SolveOptions) -> CliResult<SolveReport> {
    if kind != SolverKind::FixedM && kind != SolverKind::FixedD && !(opts.eps > 0.0) {
        return Err(CliError::Validation(format!("invalid eps: {} must be positive", opts.eps)));
    }
    let report = match kind {
        SolverKind::FixedM => {
            known_only(file, kind)?;
            solve_fixed_m(&file.instance()?)?
        }
        SolverKind::FixedD => {
            known_only(file, kind)?;
            solve_fixed_d(&file.instance()?)?
        }
        SolverKind::SingleMinded => {
            known_only(file, kind)?;
            let sm = file.single_minded()?.ok_or_else(|| {
                CliError::Validation(
                    "invalid single_minded: the single-minded solver needs a \"single_minded\" block"
                        .into(),
                )
            })?;
            solve_single_minded(&file.instance()?, &sm, opts.eps)?
        }
        SolverKind::Rv => {
            let shape = file.shape()?;
            if file.has_distribution() {
                let oracle = file.oracle()?;
                solve_rv(&oracle, &shape, opts.regime, opts.eps, opts.delta, &opts.rv)?
            } else {
                let instance = file.instance()?;
                let oracle = FixedValuations::new(instance.valuations().to_vec())?;
                solve_rv(&oracle, &shape, opts.regime, opts.eps, opts.delta, &opts.rv)?
            }
        }
    };
    Ok(report)
}
