//! Bisection over the dual objective, reduced primal solve, and recovery of
//! a consistent scheme from the relaxed solution.

use std::time::Instant;

use super::dp::DEFAULT_MAX_DP_GRID;
use super::ellipsoid::{self, Feasibility};
use super::{RelaxationConfig, SingleMindedStructure};
use crate::auction::{AuctionInstance, Posterior, RevenueEvaluator};
use crate::error::Result;
use crate::lp::{self, LinearProgram};
use crate::scalar::Scalar;
use crate::scheme::{Diagnostics, SolveReport};
use crate::signaling_lp;

pub const SOLVER_ID: &str = "single-minded";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FptasOptions {
    /// Ceiling on the separation oracle's grid steps per unit.
    pub max_dp_grid: usize,
}

impl Default for FptasOptions {
    fn default() -> Self {
        Self {
            max_dp_grid: DEFAULT_MAX_DP_GRID,
        }
    }
}

/// Bisection history of one solve.
#[derive(Debug, Clone, PartialEq)]
pub struct FptasTrace<S> {
    pub config: RelaxationConfig<S>,
    /// Tested thresholds with their outcome (true = feasible).
    pub steps: Vec<(S, bool)>,
    pub rho1: S,
    pub rho2: S,
    /// Columns of the reduced primal.
    pub columns: Vec<Posterior<S>>,
    /// Optimal value of the reduced relaxed primal.
    pub relaxed_value: S,
    /// True if the recovered weights were infeasible and the scheme was
    /// re-solved over the same columns instead.
    pub fallback: bool,
}

/// Additive approximation for single-minded bidders with target error
/// `target_eps`.
pub fn solve_single_minded<S: Scalar>(
    instance: &AuctionInstance<S>,
    sm: &SingleMindedStructure<S>,
    target_eps: S,
) -> Result<SolveReport<S>> {
    solve_single_minded_with(instance, sm, target_eps, &FptasOptions::default()).map(|r| r.0)
}

pub fn solve_single_minded_with<S: Scalar>(
    instance: &AuctionInstance<S>,
    sm: &SingleMindedStructure<S>,
    target_eps: S,
    options: &FptasOptions,
) -> Result<(SolveReport<S>, FptasTrace<S>)> {
    let start = Instant::now();
    sm.check_instance(instance)?;
    let d = sm.d();
    let m = instance.m();
    let config = RelaxationConfig::from_target(target_eps, d, m)?;
    let mut diag = Diagnostics::default();

    let mut rho1 = S::zero();
    let mut rho2 = instance.revenue_bound() + config.beta;
    let mut best_cuts: Vec<Posterior<S>> = Vec::new();
    let mut steps = Vec::new();
    while rho2 - rho1 > config.eta {
        let rho3 = S::lit(0.5) * (rho1 + rho2);
        let run = ellipsoid::run(instance, sm, rho3, &config, options.max_dp_grid)?;
        diag.add("ellipsoid_iterations", run.iterations as f64);
        diag.add("oracle_calls", run.oracle_calls as f64);
        if run.dp_capped {
            diag.flag("dp_grid_capped");
        }
        match run.outcome {
            Feasibility::Infeasible { cuts } => {
                rho1 = rho3;
                best_cuts = cuts;
                steps.push((rho3, false));
            }
            Feasibility::Feasible { exhausted, .. } => {
                if exhausted {
                    diag.flag("ellipsoid_exhausted");
                }
                rho2 = rho3;
                steps.push((rho3, true));
            }
        }
    }

    let mut columns = best_cuts;
    for theta in 0..d {
        let e = Posterior::degenerate(d, theta);
        if !columns.contains(&e) {
            columns.push(e);
        }
    }
    let mut evaluator = RevenueEvaluator::new(instance);
    let revenues: Vec<S> = columns.iter().map(|xi| evaluator.eval(xi.probs())).collect();
    let (gamma, relaxed_value) = solve_reduced(instance.prior(), &columns, &revenues, config.beta)?;

    let kappa = S::one() - S::count(d * m) / config.beta;
    let mut weights: Vec<S> = gamma.iter().map(|&g| g * kappa).collect();
    for theta in 0..d {
        let mass: S = columns
            .iter()
            .zip(&gamma)
            .map(|(xi, &g)| g * xi.probs()[theta])
            .sum();
        let k = columns
            .iter()
            .position(|xi| *xi == Posterior::degenerate(d, theta))
            .expect("degenerate columns are always present");
        weights[k] += instance.prior()[theta] - mass * kappa;
    }
    let floor = -S::lit(signaling_lp::PRUNE_WEIGHT);
    let fallback = weights.iter().any(|&w| w < floor);
    let scheme = if fallback {
        diag.flag("recovery_fallback");
        let sol = signaling_lp::solve_over(instance.prior(), &columns, &revenues)?;
        signaling_lp::scheme_from_weights(&columns, &sol.weights)?
    } else {
        signaling_lp::scheme_from_weights(&columns, &weights)?
    };

    diag.set("bisection_steps", steps.len() as f64);
    diag.set("columns", columns.len() as f64);
    diag.set("relaxed_value", relaxed_value.as_f64());
    diag.set("rho1", rho1.as_f64());
    diag.set("rho2", rho2.as_f64());
    diag.set("beta", config.beta.as_f64());
    diag.set("eta", config.eta.as_f64());
    diag.set("lambda_acc", config.lambda_acc.as_f64());
    diag.set("epsilon_dp", config.epsilon_dp.as_f64());
    let mut report = SolveReport::evaluate(instance, scheme, SOLVER_ID, diag)?;
    report.diagnostics.wall_time = start.elapsed();
    let trace = FptasTrace {
        config,
        steps,
        rho1,
        rho2,
        columns,
        relaxed_value,
        fallback,
    };
    Ok((report, trace))
}

/// Relaxed primal over `columns`: maximize `Σ γ r + β z` subject to
/// `Σ γ ξ(θ) − z >= μ_θ`, `Σ γ = 1`, `γ >= 0`, `z <= 0`.
fn solve_reduced<S: Scalar>(
    prior: &[S],
    columns: &[Posterior<S>],
    revenues: &[S],
    beta: S,
) -> Result<(Vec<S>, S)> {
    let k = columns.len();
    let mut objective = revenues.to_vec();
    objective.push(beta);
    let mut lp = LinearProgram::new(objective);
    lp.set_bounds(k, S::neg_infinity(), S::zero());
    for (theta, &mu) in prior.iter().enumerate() {
        let mut row: Vec<S> = columns.iter().map(|xi| xi.probs()[theta]).collect();
        row.push(-S::one());
        lp.add_ge(row, mu);
    }
    let mut ones = vec![S::one(); k];
    ones.push(S::zero());
    lp.add_eq(ones, S::one());
    let sol = lp::solve(&lp)?.require_optimal("reduced relaxed primal")?;
    let mut x = sol.x;
    x.truncate(k);
    Ok((x, sol.value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::consistency_residual;

    #[test]
    fn two_state_example() {
        let sm = SingleMindedStructure::new(vec![0, 1], vec![1.0, 1.0]).unwrap();
        let inst = sm.instance(vec![1.0], vec![0.5, 0.5]).unwrap();
        let (report, trace) =
            solve_single_minded_with(&inst, &sm, 0.05, &FptasOptions::default()).unwrap();
        assert!(report.value >= 0.45, "value {}", report.value);
        assert!(consistency_residual(&report.scheme, inst.prior()).unwrap() <= 1e-7);
        assert!(trace.rho2 - trace.rho1 <= trace.config.eta);
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for &(rho, feasible) in &trace.steps {
            if feasible {
                assert!(rho <= hi);
                hi = rho;
            } else {
                assert!(rho >= lo);
                lo = rho;
            }
        }
    }

    #[test]
    fn one_group_is_linear() {
        let sm = SingleMindedStructure::new(vec![0, 0, 0], vec![0.8, 0.4]).unwrap();
        let inst = sm.instance(vec![1.0], vec![0.3, 0.7]).unwrap();
        let report = solve_single_minded(&inst, &sm, 0.1).unwrap();
        assert!(report.value >= 0.8 * 0.3 - 0.1);
    }

    #[test]
    fn degenerate_prior() {
        let sm = SingleMindedStructure::new(vec![0, 0, 1], vec![0.6, 1.0]).unwrap();
        let inst = sm.instance(vec![1.0, 0.5], vec![1.0, 0.0]).unwrap();
        let report = solve_single_minded(&inst, &sm, 0.1).unwrap();
        let want = super::super::f_revenue(0.6, 2, &[1.0, 0.5]);
        assert!(report.value >= want - 0.1);
    }
}
