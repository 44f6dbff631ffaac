//! Auction data and VCG mechanics: expected valuations under a posterior,
//! slot allocation, payments, and the revenue of a single posterior.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A Bayesian ad auction with known valuations.
///
/// `valuations[i][θ]` is bidder `i`'s value for a click in state `θ`.
/// Slots are ordered by click-through rate, highest first.
#[derive(Debug, Clone, PartialEq)]
pub struct AuctionInstance<S> {
    lambdas: Vec<S>,
    prior: Vec<S>,
    valuations: Vec<Vec<S>>,
}

impl<S: Scalar> AuctionInstance<S> {
    pub fn new(lambdas: Vec<S>, prior: Vec<S>, valuations: Vec<Vec<S>>) -> Result<Self> {
        validate_lambdas(&lambdas)?;
        validate_prior(&prior)?;
        validate_valuations(&valuations, prior.len(), "valuations")?;
        if lambdas.len() > valuations.len() {
            return Err(Error::invalid(
                "m",
                format!(
                    "{} slots exceed the {} bidders",
                    lambdas.len(),
                    valuations.len()
                ),
            ));
        }
        Ok(Self {
            lambdas,
            prior,
            valuations,
        })
    }

    /// Number of bidders.
    pub fn n(&self) -> usize {
        self.valuations.len()
    }

    /// Number of slots.
    pub fn m(&self) -> usize {
        self.lambdas.len()
    }

    /// Number of states of nature.
    pub fn d(&self) -> usize {
        self.prior.len()
    }

    pub fn lambdas(&self) -> &[S] {
        &self.lambdas
    }

    pub fn prior(&self) -> &[S] {
        &self.prior
    }

    pub fn valuations(&self) -> &[Vec<S>] {
        &self.valuations
    }

    /// Same bidders and slots under a different prior.
    pub fn with_prior(&self, prior: Vec<S>) -> Result<Self> {
        Self::new(self.lambdas.clone(), prior, self.valuations.clone())
    }

    /// Bidder count after appending zero-valuation dummies so that the
    /// bidder in position `m + 1` always exists.
    pub fn padded_n(&self) -> usize {
        self.n().max(self.m() + 1)
    }

    pub fn padded_valuations(&self) -> Vec<Vec<S>> {
        let mut rows = self.valuations.clone();
        rows.resize(self.padded_n(), vec![S::zero(); self.d()]);
        rows
    }

    /// Click-through rates with the virtual `λ_{m+1} = 0` appended.
    pub fn extended_lambdas(&self) -> Vec<S> {
        extend_lambdas(&self.lambdas)
    }

    /// `j · (λ_j − λ_{j+1})` for `j = 1..=m`: the weight of the
    /// `(j+1)`-th highest bid in the revenue.
    pub fn slot_weights(&self) -> Vec<S> {
        slot_weights(&self.lambdas)
    }

    /// Upper bound `λ_1 · m` on the revenue of any posterior.
    pub fn revenue_bound(&self) -> S {
        self.lambdas.first().copied().unwrap_or_else(S::zero) * S::count(self.m())
    }

    /// Expected valuation `ξᵀ v_i` of every bidder.
    pub fn expected_valuations(&self, xi: &Posterior<S>) -> Result<Vec<S>> {
        self.check_posterior(xi)?;
        Ok(self
            .valuations
            .iter()
            .map(|row| crate::scalar::dot(row, xi.probs()))
            .collect())
    }

    /// Mechanism revenue when every bidder reports their expected valuation
    /// under `xi`.
    pub fn revenue(&self, xi: &Posterior<S>) -> Result<S> {
        self.check_posterior(xi)?;
        Ok(RevenueEvaluator::new(self).eval(xi.probs()))
    }

    /// Padded bidder indices occupying positions `1..=m+1` when bids are
    /// sorted by expected valuation, ties broken by smaller index.
    /// Dummy bidders carry indices `n..`.
    pub fn top_ordering(&self, xi: &Posterior<S>) -> Result<Vec<usize>> {
        let mut bids = self.expected_valuations(xi)?;
        bids.resize(self.padded_n(), S::zero());
        let mut order = sorted_order(&bids);
        order.truncate(self.m() + 1);
        Ok(order)
    }

    pub(crate) fn check_posterior(&self, xi: &Posterior<S>) -> Result<()> {
        if xi.dim() != self.d() {
            return Err(Error::dims("posterior", self.d(), xi.dim()));
        }
        Ok(())
    }
}

pub(crate) fn extend_lambdas<S: Scalar>(lambdas: &[S]) -> Vec<S> {
    let mut ext = lambdas.to_vec();
    ext.push(S::zero());
    ext
}

pub(crate) fn slot_weights<S: Scalar>(lambdas: &[S]) -> Vec<S> {
    let ext = extend_lambdas(lambdas);
    (0..lambdas.len())
        .map(|j| S::count(j + 1) * (ext[j] - ext[j + 1]))
        .collect()
}

pub(crate) fn validate_lambdas<S: Scalar>(lambdas: &[S]) -> Result<()> {
    if lambdas.is_empty() {
        return Err(Error::invalid("lambdas", "at least one slot is required"));
    }
    for (j, &l) in lambdas.iter().enumerate() {
        if !(l >= S::zero() && l <= S::one()) {
            return Err(Error::invalid(
                "lambdas",
                format!("rate {j} = {l} is outside [0, 1]"),
            ));
        }
        if j > 0 && l > lambdas[j - 1] {
            return Err(Error::invalid(
                "lambdas",
                format!("rates must be non-increasing, but λ[{j}] = {l} > λ[{}]", j - 1),
            ));
        }
    }
    Ok(())
}

pub(crate) fn validate_prior<S: Scalar>(prior: &[S]) -> Result<()> {
    validate_distribution(prior, "prior", S::lit(S::PROB_TOL))
}

pub(crate) fn validate_distribution<S: Scalar>(
    probs: &[S],
    field: &'static str,
    tol: S,
) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::invalid(field, "must have at least one entry"));
    }
    for (k, &p) in probs.iter().enumerate() {
        if !(p >= S::zero()) || !p.is_finite() {
            return Err(Error::invalid(field, format!("entry {k} = {p} is negative")));
        }
    }
    let total: S = probs.iter().copied().sum();
    if (total - S::one()).abs() > tol {
        return Err(Error::invalid(
            field,
            format!("entries sum to {total}, expected 1"),
        ));
    }
    Ok(())
}

pub(crate) fn validate_valuations<S: Scalar>(
    rows: &[Vec<S>],
    d: usize,
    field: &'static str,
) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::invalid(field, "at least one bidder is required"));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != d {
            return Err(Error::invalid(
                field,
                format!("bidder {i} has {} entries, expected {d}", row.len()),
            ));
        }
        if let Some((k, v)) = row
            .iter()
            .enumerate()
            .find(|(_, &v)| !(v >= S::zero() && v <= S::one()))
        {
            return Err(Error::invalid(
                field,
                format!("entry ({i}, {k}) = {v} is outside [0, 1]"),
            ));
        }
    }
    Ok(())
}

/// A belief over states shared by all bidders after a public signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior<S> {
    probs: Vec<S>,
}

impl<S: Scalar> Posterior<S> {
    pub fn new(probs: Vec<S>) -> Result<Self> {
        validate_distribution(&probs, "posterior", S::lit(S::PROB_TOL))?;
        Ok(Self { probs })
    }

    /// Cleans numerical dust from an LP solution: clamps tiny negative
    /// entries and renormalizes.
    pub fn normalized(mut probs: Vec<S>) -> Result<Self> {
        let dust = S::lit(1e3 * S::FEAS_TOL);
        for p in probs.iter_mut() {
            if *p < S::zero() {
                if *p < -dust {
                    return Err(Error::invalid(
                        "posterior",
                        format!("entry {p} is negative"),
                    ));
                }
                *p = S::zero();
            }
        }
        let total: S = probs.iter().copied().sum();
        if !(total > S::zero()) {
            return Err(Error::invalid("posterior", "entries sum to zero"));
        }
        probs.iter_mut().for_each(|p| *p /= total);
        Ok(Self { probs })
    }

    /// All mass on state `theta`.
    pub fn degenerate(d: usize, theta: usize) -> Self {
        assert!(theta < d, "state {theta} out of range for d = {d}");
        let mut probs = vec![S::zero(); d];
        probs[theta] = S::one();
        Self { probs }
    }

    pub fn uniform(d: usize) -> Self {
        Self {
            probs: vec![S::one() / S::count(d); d],
        }
    }

    pub fn probs(&self) -> &[S] {
        &self.probs
    }

    pub fn dim(&self) -> usize {
        self.probs.len()
    }

    pub fn into_inner(self) -> Vec<S> {
        self.probs
    }
}

/// Allocation and payments of one VCG auction.
#[derive(Debug, Clone, PartialEq)]
pub struct VcgOutcome<S> {
    /// Real bidders sorted by bid, highest first; ties go to the smaller index.
    pub ordering: Vec<usize>,
    /// Payment charged for each of the `m` slots. A slot that no real bidder
    /// occupies is charged zero.
    pub payments: Vec<S>,
}

impl<S: Scalar> VcgOutcome<S> {
    /// Bidder holding `slot` (0-based), if a real bidder does.
    pub fn slot_holder(&self, slot: usize) -> Option<usize> {
        if slot < self.payments.len() {
            self.ordering.get(slot).copied()
        } else {
            None
        }
    }

    /// Payment of `bidder`; unallocated bidders pay nothing.
    pub fn payment_of(&self, bidder: usize) -> S {
        self.ordering
            .iter()
            .take(self.payments.len())
            .position(|&b| b == bidder)
            .map_or_else(S::zero, |slot| self.payments[slot])
    }

    pub fn total(&self) -> S {
        self.payments.iter().copied().sum()
    }
}

/// Runs the VCG mechanism on reported bids.
///
/// Bidders are ranked by bid; the holder of slot `k` pays
/// `Σ_{j=k+1}^{m+1} b_(j) (λ_{j-1} − λ_j)` with `λ_{m+1} = 0`, where
/// `b_(j)` is the `j`-th highest bid and missing bidders bid zero.
pub fn vcg_outcome<S: Scalar>(bids: &[S], lambdas: &[S]) -> Result<VcgOutcome<S>> {
    validate_lambdas(lambdas)?;
    if bids.is_empty() {
        return Err(Error::invalid("bids", "at least one bidder is required"));
    }
    if let Some((i, b)) = bids
        .iter()
        .enumerate()
        .find(|(_, &b)| !(b >= S::zero() && b <= S::one()))
    {
        return Err(Error::invalid("bids", format!("bid {i} = {b} is outside [0, 1]")));
    }
    let m = lambdas.len();
    let ordering = sorted_order(bids);
    let ext = extend_lambdas(lambdas);
    let ranked = |pos: usize| ordering.get(pos).map_or_else(S::zero, |&i| bids[i]);

    let mut payments = vec![S::zero(); m];
    for (slot, pay) in payments.iter_mut().enumerate() {
        if slot >= bids.len() {
            break;
        }
        // Positions slot+1 ..= m (0-based) are bidders j = slot+2 ..= m+1.
        *pay = (slot + 1..=m)
            .map(|pos| ranked(pos) * (ext[pos - 1] - ext[pos]))
            .sum();
    }
    Ok(VcgOutcome { ordering, payments })
}

/// Indices sorted by value, highest first, ties by index.
pub(crate) fn sorted_order<S: Scalar>(values: &[S]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[b]
            .partial_cmp(&values[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

/// Revenue of a bid vector given the per-position slot weights
/// `j · (λ_j − λ_{j+1})`.
///
/// `scratch` is reordered in place.
pub(crate) fn revenue_of_bids<S: Scalar>(scratch: &mut [S], weights: &[S]) -> S {
    let m = weights.len();
    let desc = |a: &S, b: &S| b.partial_cmp(a).unwrap_or(Ordering::Equal);
    let top = (m + 1).min(scratch.len());
    if scratch.len() > top {
        scratch.select_nth_unstable_by(top - 1, desc);
    }
    scratch[..top].sort_unstable_by(desc);
    weights
        .iter()
        .enumerate()
        .map(|(j, &w)| w * scratch.get(j + 1).copied().unwrap_or_else(S::zero))
        .sum()
}

/// Reusable revenue evaluation for many posteriors of one instance.
#[derive(Debug, Clone)]
pub struct RevenueEvaluator<'a, S> {
    valuations: &'a [Vec<S>],
    weights: Vec<S>,
    scratch: Vec<S>,
}

impl<'a, S: Scalar> RevenueEvaluator<'a, S> {
    pub fn new(instance: &'a AuctionInstance<S>) -> Self {
        Self::from_parts(&instance.valuations, instance.lambdas())
    }

    pub fn from_parts(valuations: &'a [Vec<S>], lambdas: &[S]) -> Self {
        Self {
            valuations,
            weights: slot_weights(lambdas),
            scratch: Vec::with_capacity(valuations.len()),
        }
    }

    /// Revenue at the posterior given by raw probabilities (length `d`).
    pub fn eval(&mut self, xi: &[S]) -> S {
        self.scratch.clear();
        self.scratch.extend(
            self.valuations
                .iter()
                .map(|row| crate::scalar::dot(row, xi)),
        );
        revenue_of_bids(&mut self.scratch, &self.weights)
    }
}
