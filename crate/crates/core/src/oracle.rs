//! Brute-force baselines: the signaling LP over a fine posterior grid, and
//! exhaustive search over single-minded vertices.

use rayon::prelude::*;

use itertools::Itertools;

use crate::auction::{slot_weights, AuctionInstance, Posterior, RevenueEvaluator};
use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram, LpStatus};
use crate::rv::{composition_posterior, enumerate_q_uniform_capped, grid_size};
use crate::scalar::Scalar;
use crate::signaling_lp;
use crate::single_minded::{sm_vertex, SingleMindedStructure};

/// Largest `d` accepted by the single-minded enumerations.
pub const MAX_ENUM_STATES: usize = 20;

/// Grids up to this size are solved as one LP; larger ones by column
/// generation.
pub const DIRECT_GRID_LIMIT: usize = 200_000;

/// Upper limit on the grid size for column generation.
pub const GRID_LIMIT: f64 = 1e12;

const PRICING_TOL: f64 = 1e-9;
const MAX_ROUNDS: usize = 20_000;
const MAX_PRICING_NODES: u64 = 50_000_000;

/// Result of [`grid_opt_detailed`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridOptimum<S> {
    pub value: S,
    /// Posteriors with positive weight in an optimal grid scheme.
    pub support: Vec<(S, Posterior<S>)>,
    /// Columns the final LP was solved over.
    pub columns: usize,
    /// Pricing rounds; zero when the grid was solved directly.
    pub rounds: usize,
}

/// Optimal revenue over posteriors that are multiples of `1/q`.
pub fn grid_opt<S: Scalar>(instance: &AuctionInstance<S>, q: usize) -> Result<S> {
    grid_opt_detailed(instance, q).map(|g| g.value)
}

pub fn grid_opt_detailed<S: Scalar>(instance: &AuctionInstance<S>, q: usize) -> Result<GridOptimum<S>> {
    let d = instance.d();
    if q == 0 {
        return Err(Error::invalid("q", "must be positive"));
    }
    let size = grid_size(d, q);
    if size <= DIRECT_GRID_LIMIT as f64 {
        let grid = enumerate_q_uniform_capped::<S>(d, q, DIRECT_GRID_LIMIT)?;
        let sol = signaling_lp::solve_for_instance(instance, &grid.posteriors)?;
        return Ok(GridOptimum {
            value: sol.value,
            support: support_of(&grid.posteriors, &sol.weights),
            columns: grid.posteriors.len(),
            rounds: 0,
        });
    }
    if size > GRID_LIMIT {
        return Err(Error::TooLarge {
            what: "q-uniform grid",
            required: size,
            limit: GRID_LIMIT,
        });
    }
    grid_opt_column_generation(instance, q)
}

fn support_of<S: Scalar>(columns: &[Posterior<S>], weights: &[S]) -> Vec<(S, Posterior<S>)> {
    columns
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > S::lit(signaling_lp::PRUNE_WEIGHT))
        .map(|(xi, &w)| (w, xi.clone()))
        .collect()
}

/// Grid optimum by column generation with exact pricing, regardless of the
/// grid size.
pub fn grid_opt_column_generation<S: Scalar>(instance: &AuctionInstance<S>, q: usize) -> Result<GridOptimum<S>> {
    let d = instance.d();
    let mut columns: Vec<Posterior<S>> = (0..d).map(|t| Posterior::degenerate(d, t)).collect();
    let mut evaluator = RevenueEvaluator::new(instance);
    let mut revenues: Vec<S> = columns.iter().map(|xi| evaluator.eval(xi.probs())).collect();
    let mut pricer = Pricer::new(instance, q);
    for round in 1..=MAX_ROUNDS {
        let sol = signaling_lp::solve_over(instance.prior(), &columns, &revenues)?;
        match pricer.price(&sol.duals)? {
            Some(parts) => {
                let xi = composition_posterior(&parts, q);
                if columns.contains(&xi) {
                    // The LP already prices this column at zero; the
                    // remaining gap is rounding noise.
                    return Ok(finish(columns, sol, round));
                }
                revenues.push(evaluator.eval(xi.probs()));
                columns.push(xi);
            }
            None => return Ok(finish(columns, sol, round)),
        }
    }
    Err(Error::Numerical {
        stage: "grid column generation",
        reason: format!("no convergence after {MAX_ROUNDS} rounds"),
    })
}

fn finish<S: Scalar>(
    columns: Vec<Posterior<S>>,
    sol: signaling_lp::CandidateSolution<S>,
    rounds: usize,
) -> GridOptimum<S> {
    GridOptimum {
        value: sol.value,
        support: support_of(&columns, &sol.weights),
        columns: columns.len(),
        rounds,
    }
}

/// Exact maximization of `Rev(V, k/q) − yᵀk/q` over compositions `k` of
/// `q`.
///
/// With non-negative slot weights `w_j`, the `(j+1)`-th highest bid is the
/// largest `min_{i∈A} b_i` over sets `A` of size `j+1`, so revenue is the
/// pointwise maximum over chains `A_1 ⊂ … ⊂ A_m` (`|A_j| = j+1`) of the
/// concave functions `Σ_j w_j min_{i∈A_j} b_i(ξ)`. Each chain is maximized
/// over the grid by branch and bound on the coordinates with LP bounds.
struct Pricer<'a, S> {
    instance: &'a AuctionInstance<S>,
    padded: Vec<Vec<S>>,
    weights: Vec<S>,
    chains: Vec<Vec<usize>>,
    q: usize,
    evaluator: RevenueEvaluator<'a, S>,
    nodes: u64,
}

impl<'a, S: Scalar> Pricer<'a, S> {
    fn new(instance: &'a AuctionInstance<S>, q: usize) -> Self {
        let padded = instance.padded_valuations();
        let m = instance.m();
        // A chain never needs more than m + 1 copies of the same row.
        let mut distinct: Vec<usize> = Vec::new();
        for (i, row) in padded.iter().enumerate() {
            if distinct.iter().filter(|&&k| padded[k] == *row).count() <= m {
                distinct.push(i);
            }
        }
        let mut chains = Vec::new();
        for pair in distinct.iter().copied().combinations(2) {
            let rest: Vec<usize> = distinct
                .iter()
                .copied()
                .filter(|i| !pair.contains(i))
                .collect();
            for tail in rest.into_iter().permutations(m - 1) {
                let mut chain = pair.clone();
                chain.extend(tail);
                chains.push(chain);
            }
        }
        Self {
            instance,
            padded,
            weights: slot_weights(instance.lambdas()),
            chains,
            q,
            evaluator: RevenueEvaluator::new(instance),
            nodes: 0,
        }
    }

    /// The composition with the largest reduced cost, if that exceeds the
    /// pricing tolerance.
    fn price(&mut self, duals: &[S]) -> Result<Option<Vec<usize>>> {
        let mut best = S::lit(PRICING_TOL);
        let mut best_parts = None;
        self.nodes = 0;
        for c in 0..self.chains.len() {
            self.search_chain(c, duals, &mut best, &mut best_parts)?;
        }
        Ok(best_parts)
    }

    fn reduced_cost(&mut self, parts: &[usize], duals: &[S]) -> S {
        let qs = S::count(self.q);
        let xi: Vec<S> = parts.iter().map(|&k| S::count(k) / qs).collect();
        self.evaluator.eval(&xi) - crate::scalar::dot(duals, &xi)
    }

    fn search_chain(
        &mut self,
        chain: usize,
        duals: &[S],
        best: &mut S,
        best_parts: &mut Option<Vec<usize>>,
    ) -> Result<()> {
        let d = self.instance.d();
        let q = self.q;
        let qs = S::count(q);
        let frac_tol = 1e-7;
        let mut stack = vec![(vec![0usize; d], vec![q; d])];
        while let Some((lo, hi)) = stack.pop() {
            self.nodes += 1;
            if self.nodes > MAX_PRICING_NODES {
                return Err(Error::TooLarge {
                    what: "grid pricing nodes",
                    required: self.nodes as f64,
                    limit: MAX_PRICING_NODES as f64,
                });
            }
            let lp = self.chain_lp(chain, duals, &lo, &hi);
            let sol = lp::solve(&lp)?;
            match sol.status {
                LpStatus::Optimal => {}
                LpStatus::Infeasible => continue,
                status => {
                    return Err(Error::Lp {
                        stage: "grid pricing",
                        status,
                    })
                }
            }
            if sol.value <= *best + S::lit(1e-12) {
                continue;
            }
            let scaled: Vec<f64> = sol.x[..d].iter().map(|&x| (x * qs).as_f64()).collect();
            let parts = round_composition(&scaled, &lo, &hi, q);
            let value = self.reduced_cost(&parts, duals);
            if value > *best {
                *best = value;
                *best_parts = Some(parts);
            }
            let branch = scaled
                .iter()
                .enumerate()
                .map(|(i, &k)| (i, (k - k.round()).abs()))
                .filter(|&(_, f)| f > frac_tol)
                .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
            if let Some((i, _)) = branch {
                let k = scaled[i];
                let (down, up) = (k.floor() as usize, k.ceil() as usize);
                if down >= lo[i] {
                    let mut h = hi.clone();
                    h[i] = down.min(hi[i]);
                    stack.push((lo.clone(), h));
                }
                if up <= hi[i] {
                    let mut l = lo;
                    l[i] = up.max(l[i]);
                    stack.push((l, hi));
                }
            }
        }
        Ok(())
    }

    /// `max Σ_j w_j u_j − yᵀξ` with `u_j <= b_i(ξ)` for the first `j+1`
    /// chain members, over the box `lo/q <= ξ <= hi/q` of the simplex.
    fn chain_lp(&self, chain: usize, duals: &[S], lo: &[usize], hi: &[usize]) -> LinearProgram<S> {
        let d = self.instance.d();
        let m = self.weights.len();
        let qs = S::count(self.q);
        let mut objective: Vec<S> = duals.iter().map(|&y| -y).collect();
        objective.extend_from_slice(&self.weights);
        let mut lp = LinearProgram::new(objective);
        for i in 0..d {
            lp.set_bounds(i, S::count(lo[i]) / qs, S::count(hi[i]) / qs);
        }
        let mut ones = vec![S::one(); d];
        ones.extend(std::iter::repeat_n(S::zero(), m));
        lp.add_eq(ones, S::one());
        let members = &self.chains[chain];
        for j in 0..m {
            for &bidder in &members[..j + 2] {
                let mut row: Vec<S> = self.padded[bidder].iter().map(|&v| -v).collect();
                row.extend(std::iter::repeat_n(S::zero(), m));
                row[d + j] = S::one();
                lp.add_le(row, S::zero());
            }
        }
        lp
    }
}

/// Rounds `k` (summing to `q`) to integers within `[lo, hi]` that still sum
/// to `q`, giving leftover units to the largest fractional parts.
fn round_composition(k: &[f64], lo: &[usize], hi: &[usize], q: usize) -> Vec<usize> {
    let mut parts: Vec<usize> = k
        .iter()
        .zip(lo.iter().zip(hi))
        .map(|(&x, (&l, &h))| (x.max(0.0).floor() as usize).clamp(l, h))
        .collect();
    let mut order: Vec<usize> = (0..k.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = k[a] - k[a].floor();
        let fb = k[b] - k[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    let mut total: usize = parts.iter().sum();
    while total < q {
        let before = total;
        for &i in &order {
            if total < q && parts[i] < hi[i] {
                parts[i] += 1;
                total += 1;
            }
        }
        if total == before {
            break;
        }
    }
    while total > q {
        let before = total;
        for &i in order.iter().rev() {
            if total > q && parts[i] > lo[i] {
                parts[i] -= 1;
                total -= 1;
            }
        }
        if total == before {
            break;
        }
    }
    parts
}

fn check_enum_size(d: usize) -> Result<()> {
    if d > MAX_ENUM_STATES {
        return Err(Error::TooLarge {
            what: "single-minded subset enumeration (states)",
            required: d as f64,
            limit: MAX_ENUM_STATES as f64,
        });
    }
    Ok(())
}

/// Every single-minded vertex, indexed by subset bitmask minus one.
pub fn sm_vertices<S: Scalar>(sm: &SingleMindedStructure<S>) -> Result<Vec<Posterior<S>>> {
    let d = sm.d();
    check_enum_size(d)?;
    (1u64..1 << d)
        .into_par_iter()
        .map(|mask| {
            let subset: Vec<usize> = (0..d).filter(|&b| mask >> b & 1 == 1).collect();
            sm_vertex(&subset, sm.deltas())
        })
        .collect()
}

/// Exact maximizer of `Rev(V, ξ) − yᵀξ` over single-minded vertices.
/// Ties go to the smallest subset bitmask.
pub fn exact_sm_separation<S: Scalar>(
    instance: &AuctionInstance<S>,
    sm: &SingleMindedStructure<S>,
    y: &[S],
) -> Result<(Posterior<S>, S)> {
    sm.check_instance(instance)?;
    let d = sm.d();
    if y.len() != d {
        return Err(Error::dims("dual point", d, y.len()));
    }
    let vertices = sm_vertices(sm)?;
    let evaluator = RevenueEvaluator::new(instance);
    let (k, value) = vertices
        .par_iter()
        .enumerate()
        .map_with(evaluator, |eval, (k, xi)| {
            (k, eval.eval(xi.probs()) - crate::scalar::dot(y, xi.probs()))
        })
        .reduce(
            || (usize::MAX, S::neg_infinity()),
            |a, b| {
                if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
                    b
                } else {
                    a
                }
            },
        );
    Ok((vertices[k].clone(), value))
}

/// Optimal revenue for single-minded bidders: the signaling LP over all
/// single-minded vertices.
pub fn exact_sm_opt<S: Scalar>(instance: &AuctionInstance<S>, sm: &SingleMindedStructure<S>) -> Result<S> {
    sm.check_instance(instance)?;
    let vertices = sm_vertices(sm)?;
    Ok(signaling_lp::solve_for_instance(instance, &vertices)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn identity() -> AuctionInstance<f64> {
        AuctionInstance::new(vec![1.0], vec![0.5, 0.5], vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap()
    }

    #[test]
    fn identity_instance_grid() {
        assert_abs_diff_eq!(grid_opt(&identity(), 200).unwrap(), 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(grid_opt(&identity(), 1).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn linear_revenue_grid() {
        let inst = AuctionInstance::new(
            vec![1.0],
            vec![0.25, 0.75],
            vec![vec![1.0, 0.5], vec![0.2, 0.1]],
        )
        .unwrap();
        let at_prior = inst.revenue(&Posterior::new(vec![0.25, 0.75]).unwrap()).unwrap();
        for q in [1, 4, 8] {
            assert_abs_diff_eq!(grid_opt(&inst, q).unwrap(), at_prior, epsilon = 1e-9);
        }
    }

    #[test]
    fn column_generation_matches_direct_lp() {
        let inst = AuctionInstance::new(
            vec![1.0, 0.6],
            vec![0.2, 0.3, 0.1, 0.4],
            vec![
                vec![0.9, 0.1, 0.4, 0.3],
                vec![0.2, 0.8, 0.5, 0.1],
                vec![0.3, 0.3, 0.9, 0.6],
                vec![0.7, 0.2, 0.1, 0.9],
            ],
        )
        .unwrap();
        let q = 12;
        let direct = grid_opt(&inst, q).unwrap();
        let cg = grid_opt_column_generation(&inst, q).unwrap();
        assert!(cg.rounds > 0);
        assert_abs_diff_eq!(cg.value, direct, epsilon = 1e-8);
    }

    #[test]
    fn sm_examples() {
        let sm = SingleMindedStructure::new(vec![0, 1], vec![1.0, 1.0]).unwrap();
        let inst = sm.instance(vec![1.0], vec![0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(exact_sm_opt(&inst, &sm).unwrap(), 0.5, epsilon = 1e-12);
        let (xi, v) = exact_sm_separation(&inst, &sm, &[0.0, 0.0]).unwrap();
        assert_eq!(xi.probs(), &[0.5, 0.5]);
        assert_abs_diff_eq!(v, 0.5, epsilon = 1e-15);

        let sm1 = SingleMindedStructure::new(vec![0, 0], vec![0.7]).unwrap();
        let inst1 = sm1.instance(vec![1.0], vec![1.0]).unwrap();
        let (xi, v) = exact_sm_separation(&inst1, &sm1, &[0.0]).unwrap();
        assert_eq!(xi.probs(), &[1.0]);
        assert_abs_diff_eq!(v, 0.7, epsilon = 1e-15);
    }

    #[test]
    fn sm_opt_scales_with_deltas() {
        let a = SingleMindedStructure::new(vec![0, 1, 1, 2], vec![0.9, 0.5, 0.7]).unwrap();
        let b = SingleMindedStructure::new(vec![0, 1, 1, 2], vec![0.45, 0.25, 0.35]).unwrap();
        let prior = vec![0.2, 0.5, 0.3];
        let va = exact_sm_opt(&a.instance(vec![1.0, 0.5], prior.clone()).unwrap(), &a).unwrap();
        let vb = exact_sm_opt(&b.instance(vec![1.0, 0.5], prior).unwrap(), &b).unwrap();
        assert_abs_diff_eq!(vb, 0.5 * va, epsilon = 1e-9);
    }

    #[test]
    fn enumeration_guard() {
        let sm = SingleMindedStructure::new(vec![0], vec![1.0; 21]).unwrap();
        assert!(sm_vertices(&sm).unwrap_err().is_size_guard());
    }
}
