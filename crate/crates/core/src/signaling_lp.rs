//! The signaling LP over a finite candidate set of posteriors:
//! maximize `Σ γ(ξ) r(ξ)` subject to `Σ γ(ξ) ξ(θ) = μ_θ` for every state.
//! Summing the state rows gives `Σ γ(ξ) = 1`, so no explicit row is needed.

use crate::auction::{AuctionInstance, Posterior, RevenueEvaluator};
use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram};
use crate::scalar::Scalar;
use crate::scheme::SignalingScheme;

/// Weights below this are treated as numerical dust when building schemes.
pub const PRUNE_WEIGHT: f64 = 1e-12;

/// Optimal weights over a candidate set.
#[derive(Debug, Clone)]
pub struct CandidateSolution<S> {
    pub value: S,
    pub weights: Vec<S>,
    /// Multipliers of the state rows.
    pub duals: Vec<S>,
    pub iterations: usize,
}

/// Solves the signaling LP with externally supplied revenues `r(ξ)`.
pub fn solve_over<S: Scalar>(
    prior: &[S],
    posteriors: &[Posterior<S>],
    revenues: &[S],
) -> Result<CandidateSolution<S>> {
    if posteriors.len() != revenues.len() {
        return Err(Error::dims("candidate revenues", posteriors.len(), revenues.len()));
    }
    if posteriors.is_empty() {
        return Err(Error::invalid("candidates", "no posteriors to choose from"));
    }
    let d = prior.len();
    let mut lp = LinearProgram::new(revenues.to_vec());
    for theta in 0..d {
        let row = posteriors
            .iter()
            .map(|xi| {
                if xi.dim() != d {
                    return Err(Error::dims("candidate posterior", d, xi.dim()));
                }
                Ok(xi.probs()[theta])
            })
            .collect::<Result<Vec<S>>>()?;
        lp.add_eq(row, prior[theta]);
    }
    let sol = lp::solve(&lp)?.require_optimal("signaling LP")?;
    Ok(CandidateSolution {
        value: sol.value,
        weights: sol.x,
        duals: sol.duals,
        iterations: sol.iterations,
    })
}

/// Solves the signaling LP for `instance` with revenues computed exactly.
pub fn solve_for_instance<S: Scalar>(
    instance: &AuctionInstance<S>,
    posteriors: &[Posterior<S>],
) -> Result<CandidateSolution<S>> {
    let mut eval = RevenueEvaluator::new(instance);
    let revenues: Vec<S> = posteriors.iter().map(|xi| eval.eval(xi.probs())).collect();
    solve_over(instance.prior(), posteriors, &revenues)
}

/// Turns LP weights into a scheme, dropping dust weights.
pub fn scheme_from_weights<S: Scalar>(
    posteriors: &[Posterior<S>],
    weights: &[S],
) -> Result<SignalingScheme<S>> {
    let pairs = posteriors
        .iter()
        .zip(weights)
        .map(|(xi, &w)| (w, xi.clone()))
        .collect();
    SignalingScheme::from_weighted(pairs, S::lit(PRUNE_WEIGHT))
}
