//! Knapsack-style dynamic program for the separation problem
//! `max_ξ Rev(V, ξ) − Σ_θ y_θ ξ(θ)` over single-minded vertices.
//!
//! For a fixed common valuation `v`, taking state `θ` costs `⌊v/δ_θ⌋_E`
//! of a unit budget, contributes `|N_θ|` bidders at value `v`, and earns
//! `−y_θ v/δ_θ`. Each `v`-slice keeps, per bidder count, a Pareto front of
//! (cost, earnings) pairs in place of the dense `M(v, i, w, j)` table; the
//! slice optimum is the same.

use rayon::prelude::*;

use super::{revenue_factors, RelaxationConfig, SingleMindedStructure};
use crate::auction::{AuctionInstance, Posterior};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default ceiling on grid steps per unit, bounding the work per call.
pub const DEFAULT_MAX_DP_GRID: usize = 1 << 14;

/// Output of the separation oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct Separation<S> {
    pub posterior: Posterior<S>,
    /// States in the support of `posterior`, ascending.
    pub subset: Vec<usize>,
    /// Exact objective `Rev(V, ξ) − yᵀξ` of `posterior`.
    pub value: S,
    /// Best table entry `f(v, j) + M(v, d, w, j)`.
    pub dp_score: S,
    /// Grid steps per unit actually used.
    pub grid: usize,
    /// True when the grid was clamped to the configured ceiling.
    pub capped: bool,
}

#[derive(Debug, Clone, Copy)]
struct Entry<S> {
    cost: u32,
    earn: S,
    mask: u64,
}

struct Item<S> {
    inv_delta: S,
    gain: S,
    bidders: usize,
}

struct Workspace<S> {
    cur: Vec<Vec<Entry<S>>>,
    next: Vec<Vec<Entry<S>>>,
    tmp: Vec<Entry<S>>,
}

#[derive(Debug, Clone, Copy)]
struct SliceBest<S> {
    score: S,
    value: S,
    mask: u64,
}

impl<S: Scalar> SliceBest<S> {
    fn better(self, other: Self) -> Self {
        let pick_other = other.value > self.value
            || (other.value == self.value && other.mask != 0 && (self.mask == 0 || other.mask < self.mask));
        let mut out = if pick_other { other } else { self };
        out.score = self.score.max(other.score);
        out
    }
}

struct Problem<'a, S> {
    items: Vec<Item<S>>,
    factors: Vec<S>,
    jmax: usize,
    deltas: &'a [S],
    neg_y: Vec<S>,
}

impl<S: Scalar> Problem<'_, S> {
    /// Exact objective of the vertex supported on `mask`.
    fn exact(&self, mask: u64) -> S {
        let mut weight = S::zero();
        let mut earn = S::zero();
        let mut bidders = 0usize;
        for theta in SingleMindedStructure::<S>::states_of(mask) {
            let it = &self.items[theta];
            weight += it.inv_delta;
            earn += it.gain;
            bidders += it.bidders;
        }
        (self.factors[bidders.min(self.jmax)] + earn) / weight
    }

    fn slice(&self, ws: &mut Workspace<S>, v: S, c: usize) -> SliceBest<S> {
        let jmax = self.jmax;
        for front in ws.cur.iter_mut() {
            front.clear();
        }
        ws.cur[0].push(Entry {
            cost: 0,
            earn: S::zero(),
            mask: 0,
        });
        let cs = S::count(c);
        let fuzz = S::lit(1e-9);
        for (theta, item) in self.items.iter().enumerate() {
            let cost = (cs * v * item.inv_delta + fuzz).floor().as_f64();
            if cost > c as f64 {
                continue;
            }
            let cost = cost as u32;
            let earn = v * item.gain;
            let bit = 1u64 << theta;
            for target in 0..=jmax {
                ws.tmp.clear();
                ws.tmp.extend_from_slice(&ws.cur[target]);
                for src in 0..=jmax {
                    if (src + item.bidders).min(jmax) != target {
                        continue;
                    }
                    for e in &ws.cur[src] {
                        if e.cost + cost <= c as u32 {
                            ws.tmp.push(Entry {
                                cost: e.cost + cost,
                                earn: e.earn + earn,
                                mask: e.mask | bit,
                            });
                        }
                    }
                }
                ws.tmp.sort_unstable_by(|a, b| {
                    a.cost
                        .cmp(&b.cost)
                        .then(b.earn.partial_cmp(&a.earn).unwrap())
                        .then(a.mask.cmp(&b.mask))
                });
                let out = &mut ws.next[target];
                out.clear();
                let mut best = S::neg_infinity();
                for e in &ws.tmp {
                    if e.earn > best {
                        best = e.earn;
                        out.push(*e);
                    }
                }
            }
            std::mem::swap(&mut ws.cur, &mut ws.next);
        }
        let mut result = SliceBest {
            score: S::neg_infinity(),
            value: S::neg_infinity(),
            mask: 0,
        };
        for j in 0..=jmax {
            if let Some(e) = ws.cur[j].last() {
                if e.mask == 0 {
                    continue;
                }
                let score = v * self.factors[j] + e.earn;
                let candidate = SliceBest {
                    score,
                    value: self.exact(e.mask),
                    mask: e.mask,
                };
                result = result.better(candidate);
            }
        }
        result
    }
}

/// Approximate separation with the default grid ceiling.
pub fn dp_separation<S: Scalar>(
    instance: &AuctionInstance<S>,
    sm: &SingleMindedStructure<S>,
    y: &[S],
    config: &RelaxationConfig<S>,
) -> Result<Separation<S>> {
    dp_separation_with(instance, sm, y, config, DEFAULT_MAX_DP_GRID)
}

/// Approximate separation over single-minded vertices.
///
/// The grid resolution is the smaller of `⌈1/ε⌉` and the resolution that
/// suffices for the multipliers actually queried: since the selected subset
/// is re-evaluated exactly, discretization loses at most
/// `(m(2d+1) + 3d·max|y_θ|)/c`. The result is at least the optimum minus
/// `lambda_acc` unless the grid had to be clamped to `max_grid`.
pub fn dp_separation_with<S: Scalar>(
    instance: &AuctionInstance<S>,
    sm: &SingleMindedStructure<S>,
    y: &[S],
    config: &RelaxationConfig<S>,
    max_grid: usize,
) -> Result<Separation<S>> {
    let d = sm.d();
    if y.len() != d {
        return Err(Error::dims("dual point", d, y.len()));
    }
    let slack = S::lit(1e-9) * (S::one() + config.beta);
    if let Some((k, &v)) = y
        .iter()
        .enumerate()
        .find(|(_, &v)| v > slack || v < -config.beta - slack)
    {
        return Err(Error::invalid(
            "y",
            format!("y[{k}] = {v} is outside [−β, 0] with β = {}", config.beta),
        ));
    }
    let m = instance.m();
    let sizes = sm.group_sizes();
    let deltas = sm.deltas();
    let neg_y: Vec<S> = y.iter().map(|&v| (-v).max(S::zero())).collect();
    let problem = Problem {
        items: (0..d)
            .map(|theta| Item {
                inv_delta: S::one() / deltas[theta],
                gain: neg_y[theta] / deltas[theta],
                bidders: sizes[theta],
            })
            .collect(),
        factors: revenue_factors(instance.lambdas()),
        jmax: m + 1,
        deltas,
        neg_y,
    };

    let y_max = problem.neg_y.iter().fold(S::zero(), |a, &b| a.max(b));
    let adaptive = ((S::count(m * (2 * d + 1)) + S::count(3 * d) * y_max) / config.lambda_acc)
        .ceil()
        .as_f64();
    let wanted = (config.grid_size() as f64).min(adaptive).max(1.0);
    let capped = wanted > max_grid as f64;
    let c = if capped { max_grid } else { wanted as usize };

    // Singleton supports are always available.
    let mut best = SliceBest {
        score: S::neg_infinity(),
        value: S::neg_infinity(),
        mask: 0,
    };
    for theta in 0..d {
        let mask = 1u64 << theta;
        best = best.better(SliceBest {
            score: S::neg_infinity(),
            value: problem.exact(mask),
            mask,
        });
    }

    let grid = value_grid(problem.deltas, c);
    let jmax = problem.jmax;
    let from_slices = grid
        .par_iter()
        .map_init(
            || Workspace {
                cur: vec![Vec::new(); jmax + 1],
                next: vec![Vec::new(); jmax + 1],
                tmp: Vec::new(),
            },
            |ws, &v| problem.slice(ws, v, c),
        )
        .reduce(
            || SliceBest {
                score: S::neg_infinity(),
                value: S::neg_infinity(),
                mask: 0,
            },
            SliceBest::better,
        );
    best = best.better(from_slices);

    let subset: Vec<usize> = SingleMindedStructure::<S>::states_of(best.mask).collect();
    let posterior = super::sm_vertex(&subset, deltas)?;
    Ok(Separation {
        posterior,
        subset,
        value: best.value,
        dp_score: best.score,
        grid: c,
        capped,
    })
}

/// Candidate common valuations `G = ∪_θ {δ_θ i / c}`, restricted to the
/// range an optimal vertex can occupy: `v* >= min δ / d`, so its grid
/// floor is at least `min δ / d − max δ / c`.
fn value_grid<S: Scalar>(deltas: &[S], c: usize) -> Vec<S> {
    let d = deltas.len();
    let cs = S::count(c);
    let lo_delta = deltas.iter().copied().fold(S::infinity(), S::min);
    let hi_delta = deltas.iter().copied().fold(S::zero(), S::max);
    let lo = lo_delta / S::count(d) - hi_delta / cs;
    let mut grid = Vec::new();
    for &delta in deltas {
        let first = ((lo * cs / delta).ceil().as_f64()).max(1.0) as usize;
        for i in first..=c {
            grid.push(delta * S::count(i) / cs);
        }
    }
    grid.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup_by(|a, b| (*a - *b).abs() <= S::lit(1e-15));
    grid
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::single_minded::sm_vertex;

    fn two_state() -> (AuctionInstance<f64>, SingleMindedStructure<f64>) {
        let sm = SingleMindedStructure::new(vec![0, 1], vec![1.0, 1.0]).unwrap();
        let inst = sm.instance(vec![1.0], vec![0.5, 0.5]).unwrap();
        (inst, sm)
    }

    fn brute(inst: &AuctionInstance<f64>, sm: &SingleMindedStructure<f64>, y: &[f64]) -> f64 {
        let d = sm.d();
        (1u64..1 << d)
            .map(|mask| {
                let s: Vec<usize> = (0..d).filter(|&b| mask >> b & 1 == 1).collect();
                let xi = sm_vertex(&s, sm.deltas()).unwrap();
                inst.revenue(&xi).unwrap() - crate::scalar::dot(y, xi.probs())
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn zero_duals_pick_the_pooling_vertex() {
        let (inst, sm) = two_state();
        let cfg = RelaxationConfig::for_oracle(0.05, 1.0, 2, 1).unwrap();
        let sep = dp_separation(&inst, &sm, &[0.0, 0.0], &cfg).unwrap();
        assert!(sep.value >= 0.5 - 0.05);
        assert_eq!(sep.subset, vec![0, 1]);
        assert!((sep.value - brute(&inst, &sm, &[0.0, 0.0])).abs() < 1e-12);
    }

    #[test]
    fn no_revenue_without_competition() {
        let sm = SingleMindedStructure::new(vec![0], vec![0.8, 0.6]).unwrap();
        let inst = sm.instance(vec![1.0], vec![0.5, 0.5]).unwrap();
        let cfg = RelaxationConfig::for_oracle(0.1, 1.0, 2, 1).unwrap();
        let sep = dp_separation(&inst, &sm, &[0.0, 0.0], &cfg).unwrap();
        assert!(sep.value <= 0.1);
    }

    #[test]
    fn saturated_duals_reward_singletons() {
        let (inst, sm) = two_state();
        let beta = 2.0;
        let cfg = RelaxationConfig::for_oracle(0.05, beta, 2, 1).unwrap();
        let sep = dp_separation(&inst, &sm, &[-beta, -beta], &cfg).unwrap();
        assert!(sep.value >= beta - 0.05);
    }

    #[test]
    fn rejects_out_of_range_duals() {
        let (inst, sm) = two_state();
        let cfg = RelaxationConfig::for_oracle(0.05, 1.0, 2, 1).unwrap();
        assert!(dp_separation(&inst, &sm, &[0.5, 0.0], &cfg).is_err());
        assert!(dp_separation(&inst, &sm, &[-3.0, 0.0], &cfg).is_err());
        assert!(dp_separation(&inst, &sm, &[0.0], &cfg).is_err());
    }

    #[test]
    fn grid_respects_lower_range() {
        let g = value_grid(&[1.0, 0.5], 4);
        assert!(g.iter().all(|&v| v > 0.0 && v <= 1.0));
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(g.contains(&0.5) && g.contains(&1.0) && g.contains(&0.375));
    }

    #[test]
    fn clamped_grid_is_reported() {
        let (inst, sm) = two_state();
        let cfg = RelaxationConfig::for_oracle(1e-4, 1.0, 2, 1).unwrap();
        let sep = dp_separation_with(&inst, &sm, &[0.0, -0.3], &cfg, 64).unwrap();
        assert!(sep.capped);
        assert_eq!(sep.grid, 64);
    }
}
