//! Random valuations: the valuation matrix is drawn from a distribution
//! reachable only through samples. The solvers optimize over `q`-uniform
//! posteriors against the empirical distribution of enough samples.

mod empirical;
mod grid;
mod oracle;
mod schedule;

pub use empirical::{empirical_revenue, EmpiricalDistribution};
pub use grid::{enumerate_q_uniform, enumerate_q_uniform_capped, grid_size, QGrid, DEFAULT_GRID_CAP};
pub(crate) use grid::composition_posterior;
pub use oracle::{FiniteSupport, FixedValuations, Matrix, ProductBeta, ValuationOracle};
pub use schedule::{choose_q, required_samples, sample_bound, schedule, Regime, Schedule};

use std::time::Instant;

use rayon::prelude::*;

use crate::auction::{validate_lambdas, validate_prior, RevenueEvaluator};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::scheme::{check_consistency, Diagnostics, SignalingScheme, SolveReport};
use crate::signaling_lp;
use empirical::{check_shape, EmpiricalRevenue};

pub const SOLVER_ID: &str = "rv";

/// Default ceiling on the number of samples.
pub const DEFAULT_SAMPLE_CAP: usize = 1_000_000;

/// Slots and prior of a market whose valuations are random.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketShape<S> {
    pub lambdas: Vec<S>,
    pub prior: Vec<S>,
}

impl<S: Scalar> MarketShape<S> {
    pub fn new(lambdas: Vec<S>, prior: Vec<S>) -> Result<Self> {
        validate_lambdas(&lambdas)?;
        validate_prior(&prior)?;
        Ok(Self { lambdas, prior })
    }

    pub fn m(&self) -> usize {
        self.lambdas.len()
    }

    pub fn d(&self) -> usize {
        self.prior.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RvOptions {
    pub seed: u64,
    pub q_cap: usize,
    pub sample_cap: usize,
}

impl Default for RvOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            q_cap: DEFAULT_GRID_CAP,
            sample_cap: DEFAULT_SAMPLE_CAP,
        }
    }
}

/// Samples the oracle per the regime's schedule and returns the best
/// `q`-uniform scheme for the empirical distribution. The reported value
/// is the scheme's empirical revenue; when the oracle exposes its full
/// support, the exact expected revenue is recorded as `true_value`.
pub fn solve_rv<S: Scalar, O: ValuationOracle<S> + ?Sized>(
    oracle: &O,
    shape: &MarketShape<S>,
    regime: Regime,
    target: S,
    delta: Option<S>,
    options: &RvOptions,
) -> Result<SolveReport<S>> {
    let start = Instant::now();
    if oracle.d() != shape.d() {
        return Err(Error::dims("prior", oracle.d(), shape.d()));
    }
    let plan = schedule(
        regime,
        target.as_f64(),
        shape.m(),
        shape.d(),
        shape.lambdas[0].as_f64(),
        delta.map(Scalar::as_f64),
    )?;
    if plan.grid_size > options.q_cap as f64 {
        return Err(Error::TooLarge {
            what: "q-uniform grid",
            required: plan.grid_size,
            limit: options.q_cap as f64,
        });
    }
    if plan.samples > options.sample_cap as f64 {
        return Err(Error::TooLarge {
            what: "samples",
            required: plan.samples,
            limit: options.sample_cap as f64,
        });
    }
    let emp = EmpiricalDistribution::from_oracle(oracle, plan.samples as usize, options.seed)?;
    if let Some(delta) = delta.filter(|_| regime == Regime::BoundedAway) {
        let low = emp.min_entry();
        if low < delta {
            return Err(Error::invalid(
                "delta",
                format!("sampled valuation {low} is below the declared bound {delta}"),
            ));
        }
    }
    let mut report = solve_empirical_capped(&emp, shape, plan.q, options.q_cap)?;
    let diag = &mut report.diagnostics;
    diag.set("q", plan.q as f64);
    diag.set("grid_size", plan.grid_size);
    diag.set("samples", plan.samples);
    diag.set("accuracy", plan.accuracy);
    diag.set("tau", plan.tau);
    diag.set("alpha", plan.alpha);
    diag.set("rho", plan.rho);
    if let Some(support) = oracle.support() {
        let mut truth = S::zero();
        for (p, mat) in &support {
            let mut eval = RevenueEvaluator::from_parts(mat, &shape.lambdas);
            for atom in report.scheme.atoms() {
                truth += *p * atom.weight * eval.eval(atom.posterior.probs());
            }
        }
        diag.set("true_value", truth.as_f64());
    }
    diag.wall_time = start.elapsed();
    Ok(report)
}

/// Best scheme over `Ξ_q` against a fixed empirical distribution.
pub fn solve_empirical<S: Scalar>(
    emp: &EmpiricalDistribution<S>,
    shape: &MarketShape<S>,
    q: usize,
) -> Result<SolveReport<S>> {
    solve_empirical_capped(emp, shape, q, DEFAULT_GRID_CAP)
}

fn solve_empirical_capped<S: Scalar>(
    emp: &EmpiricalDistribution<S>,
    shape: &MarketShape<S>,
    q: usize,
    q_cap: usize,
) -> Result<SolveReport<S>> {
    let start = Instant::now();
    check_shape(emp, &shape.lambdas, shape.d())?;
    let grid = enumerate_q_uniform_capped::<S>(shape.d(), q, q_cap)?;
    let evaluator = EmpiricalRevenue::new(emp, &shape.lambdas);
    let revenues: Vec<S> = grid
        .posteriors
        .par_iter()
        .map_with(evaluator.clone(), |eval, xi| eval.eval(xi.probs()))
        .collect();
    let sol = signaling_lp::solve_over(&shape.prior, &grid.posteriors, &revenues)?;
    let scheme = signaling_lp::scheme_from_weights(&grid.posteriors, &sol.weights)?;
    let residual = check_consistency(&scheme, &shape.prior)?;
    let value = scheme_value(&scheme, evaluator);

    let mut diag = Diagnostics::default();
    diag.set("consistency_residual", residual.as_f64());
    diag.set("distinct_samples", emp.distinct() as f64);
    diag.set("lp_value", sol.value.as_f64());
    diag.set("lp_iterations", sol.iterations as f64);
    diag.wall_time = start.elapsed();
    Ok(SolveReport {
        scheme,
        value,
        solver_id: SOLVER_ID,
        diagnostics: diag,
    })
}

fn scheme_value<S: Scalar>(scheme: &SignalingScheme<S>, mut eval: EmpiricalRevenue<'_, S>) -> S {
    scheme
        .atoms()
        .iter()
        .map(|a| a.weight * eval.eval(a.posterior.probs()))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_state_has_nothing_to_signal() {
        let oracle = ProductBeta::new(vec![vec![(2.0, 2.0)]; 3], 0.0, 1.0).unwrap();
        let shape = MarketShape::new(vec![1.0], vec![1.0]).unwrap();
        let report = solve_rv(&oracle, &shape, Regime::FixedD, 0.5, None, &RvOptions::default())
            .unwrap();
        let emp = EmpiricalDistribution::from_oracle(&oracle, report.diagnostics.get("samples").unwrap() as usize, 0)
            .unwrap();
        let xi = crate::auction::Posterior::new(vec![1.0]).unwrap();
        let want = empirical_revenue(&emp, &shape.lambdas, &xi).unwrap();
        assert_abs_diff_eq!(report.value, want, epsilon = 1e-12);
    }

    #[test]
    fn caps_are_reported() {
        let oracle = FixedValuations::new(vec![vec![1.0, 0.0, 0.5], vec![0.0, 1.0, 0.5]]).unwrap();
        let shape = MarketShape::new(vec![1.0], vec![0.2, 0.3, 0.5]).unwrap();
        let opts = RvOptions {
            q_cap: 100,
            ..RvOptions::default()
        };
        let err = solve_rv(&oracle, &shape, Regime::FixedD, 0.3, None, &opts).unwrap_err();
        assert!(err.is_size_guard());
        let opts = RvOptions {
            sample_cap: 100,
            ..RvOptions::default()
        };
        let err = solve_rv(&oracle, &shape, Regime::FixedD, 0.3, None, &opts).unwrap_err();
        assert!(matches!(err, Error::TooLarge { what: "samples", .. }));
    }

    #[test]
    fn bounded_away_checks_samples() {
        let oracle = FixedValuations::new(vec![vec![0.2, 0.9], vec![0.6, 0.3]]).unwrap();
        let shape = MarketShape::new(vec![1.0], vec![0.5, 0.5]).unwrap();
        let opts = RvOptions::default();
        let err = solve_rv(&oracle, &shape, Regime::BoundedAway, 0.9, Some(0.5), &opts).unwrap_err();
        assert!(matches!(err, Error::Invalid { field: "delta", .. }));
    }
}
