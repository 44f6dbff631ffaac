//! Single-minded bidders: every bidder values exactly one state, and all
//! bidders interested in state `θ` value a click there at `δ_θ`.
//!
//! Optimal schemes only use posteriors that spread mass over a subset of
//! states so that every interested bidder ends up with the same expected
//! valuation. The approximation scheme searches over those posteriors
//! through the dual of a relaxed signaling LP, with an ellipsoid method
//! driven by an approximate dynamic-programming separation oracle.

mod dp;
mod ellipsoid;
mod fptas;

pub use dp::{dp_separation, Separation};
pub use ellipsoid::{ellipsoid_feasibility, EllipsoidRun, Feasibility};
pub use fptas::{solve_single_minded, solve_single_minded_with, FptasOptions, FptasTrace};

use crate::auction::{AuctionInstance, Posterior};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest number of states supported by the subset bitmasks.
pub const MAX_STATES: usize = 64;

/// Partition of bidders by the state they care about, plus per-state values.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleMindedStructure<S> {
    groups: Vec<usize>,
    deltas: Vec<S>,
}

impl<S: Scalar> SingleMindedStructure<S> {
    /// `groups[i]` is the state bidder `i` values; `deltas[θ]` is the common
    /// value in state `θ`, which must lie in `(0, 1]`.
    pub fn new(groups: Vec<usize>, deltas: Vec<S>) -> Result<Self> {
        let d = deltas.len();
        if d == 0 {
            return Err(Error::invalid("deltas", "at least one state is required"));
        }
        if d > MAX_STATES {
            return Err(Error::TooLarge {
                what: "single-minded states",
                required: d as f64,
                limit: MAX_STATES as f64,
            });
        }
        if groups.is_empty() {
            return Err(Error::invalid("groups", "at least one bidder is required"));
        }
        if let Some((i, &g)) = groups.iter().enumerate().find(|(_, &g)| g >= d) {
            return Err(Error::invalid(
                "groups",
                format!("bidder {i} is assigned to state {g}, but d = {d}"),
            ));
        }
        if let Some((k, &delta)) = deltas
            .iter()
            .enumerate()
            .find(|(_, &x)| !(x > S::zero() && x <= S::one()))
        {
            return Err(Error::invalid(
                "deltas",
                format!("δ[{k}] = {delta} must lie in (0, 1]"),
            ));
        }
        Ok(Self { groups, deltas })
    }

    pub fn groups(&self) -> &[usize] {
        &self.groups
    }

    pub fn deltas(&self) -> &[S] {
        &self.deltas
    }

    pub fn n(&self) -> usize {
        self.groups.len()
    }

    pub fn d(&self) -> usize {
        self.deltas.len()
    }

    /// `|N_θ|` for every state.
    pub fn group_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.d()];
        for &g in &self.groups {
            sizes[g] += 1;
        }
        sizes
    }

    /// `v_i(θ) = δ_θ` if bidder `i` is in group `θ`, else 0.
    pub fn induced_valuations(&self) -> Vec<Vec<S>> {
        self.groups
            .iter()
            .map(|&g| {
                let mut row = vec![S::zero(); self.d()];
                row[g] = self.deltas[g];
                row
            })
            .collect()
    }

    pub fn instance(&self, lambdas: Vec<S>, prior: Vec<S>) -> Result<AuctionInstance<S>> {
        if prior.len() != self.d() {
            return Err(Error::dims("prior", self.d(), prior.len()));
        }
        AuctionInstance::new(lambdas, prior, self.induced_valuations())
    }

    /// Checks that `instance` has exactly the valuations this structure induces.
    pub fn check_instance(&self, instance: &AuctionInstance<S>) -> Result<()> {
        if instance.n() != self.n() {
            return Err(Error::dims("single_minded.groups", instance.n(), self.n()));
        }
        if instance.d() != self.d() {
            return Err(Error::dims("single_minded.deltas", instance.d(), self.d()));
        }
        let tol = S::lit(1e-12);
        for (i, (row, want)) in instance
            .valuations()
            .iter()
            .zip(self.induced_valuations())
            .enumerate()
        {
            if crate::scalar::max_abs_diff(row, &want) > tol {
                return Err(Error::invalid(
                    "single_minded",
                    format!("bidder {i} valuations do not match its group and δ"),
                ));
            }
        }
        Ok(())
    }

    /// States in `mask`, ascending.
    pub(crate) fn states_of(mask: u64) -> impl Iterator<Item = usize> {
        (0..64).filter(move |&b| mask >> b & 1 == 1)
    }
}

/// The posterior on `subset` that equalizes `δ_θ ξ(θ)` across its states:
/// `ξ(θ) = (1/δ_θ) / Σ_{θ'∈S} 1/δ_θ'`.
pub fn sm_vertex<S: Scalar>(subset: &[usize], deltas: &[S]) -> Result<Posterior<S>> {
    if subset.is_empty() {
        return Err(Error::invalid("subset", "must contain at least one state"));
    }
    let d = deltas.len();
    let mut probs = vec![S::zero(); d];
    let mut total = S::zero();
    for &theta in subset {
        if theta >= d {
            return Err(Error::invalid("subset", format!("state {theta} out of range")));
        }
        let delta = deltas[theta];
        if !(delta > S::zero()) {
            return Err(Error::invalid("deltas", format!("δ[{theta}] must be positive")));
        }
        if probs[theta] == S::zero() {
            probs[theta] = S::one() / delta;
            total += probs[theta];
        }
    }
    probs.iter_mut().for_each(|p| *p /= total);
    Posterior::new(probs)
}

/// Revenue when `j` bidders share expected valuation `v` and everyone else
/// values zero: `v · Σ_{l=1}^{min(j−1, m)} l (λ_l − λ_{l+1})`.
pub fn f_revenue<S: Scalar>(v: S, j: usize, lambdas: &[S]) -> S {
    v * revenue_factors(lambdas)[j.min(lambdas.len() + 1)]
}

/// `F[j] = Σ_{l=1}^{min(j−1, m)} l (λ_l − λ_{l+1})` for `j = 0..=m+1`.
pub(crate) fn revenue_factors<S: Scalar>(lambdas: &[S]) -> Vec<S> {
    let weights = crate::auction::slot_weights(lambdas);
    let mut factors = vec![S::zero(); lambdas.len() + 2];
    for j in 2..factors.len() {
        factors[j] = factors[j - 1] + weights[j - 2];
    }
    factors
}

/// Parameters of the relaxed LP and its approximate solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxationConfig<S> {
    /// Penalty weight of the relaxation variable.
    pub beta: S,
    /// Bisection gap on the dual objective.
    pub eta: S,
    /// Additive accuracy requested from the separation oracle.
    pub lambda_acc: S,
    /// Grid step of the dynamic program.
    pub epsilon_dp: S,
}

impl<S: Scalar> RelaxationConfig<S> {
    pub fn new(beta: S, eta: S, lambda_acc: S, epsilon_dp: S) -> Result<Self> {
        for (name, v) in [
            ("beta", beta),
            ("eta", eta),
            ("lambda_acc", lambda_acc),
            ("epsilon_dp", epsilon_dp),
        ] {
            if !(v > S::zero()) || !v.is_finite() {
                return Err(Error::invalid(
                    "relaxation",
                    format!("{name} = {v} must be positive and finite"),
                ));
            }
        }
        Ok(Self {
            beta,
            eta,
            lambda_acc,
            epsilon_dp,
        })
    }

    /// Splits a target additive error evenly between the relaxation
    /// (`dm²/β`), the bisection gap, and the oracle accuracy, and picks the
    /// grid step so the oracle's error terms stay below its accuracy.
    pub fn from_target(target_eps: S, d: usize, m: usize) -> Result<Self> {
        if !(target_eps > S::zero()) {
            return Err(Error::invalid("eps", format!("{target_eps} must be positive")));
        }
        let three = S::lit(3.0);
        let (ds, ms) = (S::count(d), S::count(m));
        let beta = three * ds * ms * ms / target_eps;
        let lambda_acc = target_eps / three;
        Self::new(
            beta,
            target_eps / three,
            lambda_acc,
            Self::dp_step(lambda_acc, beta, d, m),
        )
    }

    /// Oracle-only configuration: grid step for accuracy `lambda_acc` when
    /// multipliers are bounded by `beta`.
    pub fn for_oracle(lambda_acc: S, beta: S, d: usize, m: usize) -> Result<Self> {
        Self::new(beta, lambda_acc, lambda_acc, Self::dp_step(lambda_acc, beta, d, m))
    }

    /// Largest step with `2εdm + d²βε + 2βdε <= λ`.
    fn dp_step(lambda_acc: S, beta: S, d: usize, m: usize) -> S {
        let (ds, ms) = (S::count(d), S::count(m));
        let two = S::lit(2.0);
        lambda_acc / (two * ds * ms + ds * ds * beta + two * beta * ds)
    }

    /// `c = ⌈1/ε⌉`, the number of grid steps per unit.
    pub fn grid_size(&self) -> usize {
        (S::one() / self.epsilon_dp).ceil().as_f64() as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn vertex_examples() {
        let p = sm_vertex(&[0], &[0.3, 0.8]).unwrap();
        assert_eq!(p.probs(), &[1.0, 0.0]);
        let p = sm_vertex(&[0, 1], &[1.0, 1.0]).unwrap();
        assert_eq!(p.probs(), &[0.5, 0.5]);
        let p = sm_vertex(&[0, 1], &[1.0, 0.5]).unwrap();
        assert_abs_diff_eq!(p.probs()[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.probs()[1], 2.0 / 3.0, epsilon = 1e-15);
        assert!(sm_vertex::<f64>(&[], &[1.0]).is_err());
    }

    #[test]
    fn f_revenue_examples() {
        let l = [1.0, 0.5];
        assert_eq!(f_revenue(0.7, 1, &l), 0.0);
        assert_eq!(f_revenue(0.7, 0, &l), 0.0);
        assert_abs_diff_eq!(f_revenue(0.5, 3, &l), 0.75, epsilon = 1e-15);
        assert_eq!(f_revenue(0.5, 3, &l), f_revenue(0.5, 10, &l));
    }

    #[test]
    fn structure_validation() {
        assert!(SingleMindedStructure::new(vec![0, 2], vec![1.0, 1.0]).is_err());
        assert!(matches!(
            SingleMindedStructure::new(vec![0, 1], vec![1.0, 0.0]),
            Err(Error::Invalid { field: "deltas", .. })
        ));
        let sm = SingleMindedStructure::new(vec![0, 1, 1], vec![0.5, 1.0]).unwrap();
        assert_eq!(sm.group_sizes(), vec![1, 2]);
        assert_eq!(
            sm.induced_valuations(),
            vec![vec![0.5, 0.0], vec![0.0, 1.0], vec![0.0, 1.0]]
        );
        let inst = sm.instance(vec![1.0], vec![0.5, 0.5]).unwrap();
        sm.check_instance(&inst).unwrap();
        let other = AuctionInstance::new(
            vec![1.0],
            vec![0.5, 0.5],
            vec![vec![0.5, 0.0], vec![0.0, 1.0], vec![0.0, 0.9]],
        )
        .unwrap();
        assert!(sm.check_instance(&other).is_err());
    }

    #[test]
    fn relaxation_schedule() {
        let c = RelaxationConfig::<f64>::from_target(0.05, 2, 1).unwrap();
        assert_abs_diff_eq!(c.beta, 120.0, epsilon = 1e-9);
        assert_abs_diff_eq!(c.eta, 0.05 / 3.0, epsilon = 1e-15);
        let bound = 2.0 * c.epsilon_dp * 2.0 + 4.0 * c.beta * c.epsilon_dp
            + 2.0 * c.beta * 2.0 * c.epsilon_dp;
        assert_abs_diff_eq!(bound, c.lambda_acc, epsilon = 1e-12);
        assert!(RelaxationConfig::<f64>::from_target(0.0, 2, 1).is_err());
    }
}
