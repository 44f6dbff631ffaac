//! Exact solvers for known valuations: the ordering LP for a fixed number of
//! slots and vertex enumeration for a fixed number of states.

use std::collections::BTreeMap;
use std::time::Instant;

use itertools::Itertools;
use rayon::prelude::*;

use crate::auction::{AuctionInstance, Posterior};
use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram};
use crate::scalar::Scalar;
use crate::scheme::{Diagnostics, SignalingScheme, SolveReport};
use crate::signaling_lp;

/// Variable budget of the ordering LP.
pub const MAX_ORDERING_VARS: f64 = 5e6;
/// Budget on hyperplane subsets examined by vertex enumeration.
pub const MAX_HYPERPLANE_SUBSETS: f64 = 1e7;
/// Max-norm tolerance under which two vertices are identified.
pub const VERTEX_DEDUP_TOL: f64 = 1e-9;

/// Posteriors where padded bidders' expected valuations follow `permutation`
/// (highest first): `ξᵀv_{π_1} >= ξᵀv_{π_2} >= ...`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OrderingRegion {
    pub permutation: Vec<usize>,
}

impl OrderingRegion {
    /// Whether `xi` satisfies every chain inequality within `tol`.
    pub fn contains<S: Scalar>(&self, padded: &[Vec<S>], xi: &[S], tol: S) -> bool {
        self.permutation.windows(2).all(|w| {
            crate::scalar::dot(&padded[w[0]], xi) + tol >= crate::scalar::dot(&padded[w[1]], xi)
        })
    }

    /// Whether `xi` is in the region of a full ordering of all padded
    /// bidders, i.e. this chain extends to every other bidder.
    pub fn contains_with_rest<S: Scalar>(&self, padded: &[Vec<S>], xi: &[S], tol: S) -> bool {
        if !self.contains(padded, xi, tol) {
            return false;
        }
        let Some(&last) = self.permutation.last() else {
            return true;
        };
        let floor = crate::scalar::dot(&padded[last], xi);
        (0..padded.len())
            .filter(|i| !self.permutation.contains(i))
            .all(|i| crate::scalar::dot(&padded[i], xi) <= floor + tol)
    }
}

/// Number of ordered `k`-tuples of distinct items out of `n`.
fn ordered_tuples(n: usize, k: usize) -> f64 {
    (0..k).map(|i| (n - i) as f64).product()
}

/// Optimal scheme via the LP over ordered `(m+1)`-tuples of padded bidders.
pub fn solve_fixed_m<S: Scalar>(instance: &AuctionInstance<S>) -> Result<SolveReport<S>> {
    let start = Instant::now();
    let m = instance.m();
    let d = instance.d();
    let padded = instance.padded_valuations();
    let n = padded.len();
    let vars = ordered_tuples(n, m + 1) * d as f64;
    if vars > MAX_ORDERING_VARS {
        return Err(Error::TooLarge {
            what: "ordering LP variables",
            required: vars,
            limit: MAX_ORDERING_VARS,
        });
    }

    let weights = instance.slot_weights();
    let tuples: Vec<Vec<usize>> = (0..n).permutations(m + 1).collect();
    let num_vars = tuples.len() * d;
    let var = |t: usize, theta: usize| t * d + theta;

    let mut objective = vec![S::zero(); num_vars];
    for (t, pi) in tuples.iter().enumerate() {
        for theta in 0..d {
            objective[var(t, theta)] = (0..m)
                .map(|j| weights[j] * padded[pi[j + 1]][theta])
                .sum();
        }
    }
    let mut lp = LinearProgram::new(objective);
    for theta in 0..d {
        let mut row = vec![S::zero(); num_vars];
        for t in 0..tuples.len() {
            row[var(t, theta)] = S::one();
        }
        lp.add_eq(row, instance.prior()[theta]);
    }
    let mut ordering_rows = 0usize;
    for (t, pi) in tuples.iter().enumerate() {
        for j in 0..m {
            let (hi, lo) = (&padded[pi[j]], &padded[pi[j + 1]]);
            if hi.iter().zip(lo).all(|(a, b)| a == b) {
                continue;
            }
            let mut row = vec![S::zero(); num_vars];
            for theta in 0..d {
                row[var(t, theta)] = hi[theta] - lo[theta];
            }
            lp.add_ge(row, S::zero());
            ordering_rows += 1;
        }
    }

    let sol = lp::solve(&lp)?.require_optimal("ordering LP")?;
    let mut pairs = Vec::new();
    for t in 0..tuples.len() {
        let x = &sol.x[t * d..(t + 1) * d];
        let gamma: S = x.iter().copied().sum();
        if gamma > S::lit(signaling_lp::PRUNE_WEIGHT) {
            pairs.push((gamma, Posterior::normalized(x.to_vec())?));
        }
    }
    let scheme = SignalingScheme::from_weighted(pairs, S::lit(signaling_lp::PRUNE_WEIGHT))?;

    let mut diag = Diagnostics::default();
    diag.set("tuples", tuples.len() as f64);
    diag.set("lp_variables", num_vars as f64);
    diag.set("ordering_rows", ordering_rows as f64);
    diag.set("lp_iterations", sol.iterations as f64);
    diag.set("lp_value", sol.value.as_f64());
    diag.wall_time = start.elapsed();
    SolveReport::evaluate(instance, scheme, "fixed-m", diag)
}

/// Merges atoms lying in the same ordering region of the top `m + 1`
/// padded bidders (ties broken by index). Revenue is linear on each region,
/// so the merged scheme earns the same.
pub fn merge_same_region<S: Scalar>(
    instance: &AuctionInstance<S>,
    scheme: &SignalingScheme<S>,
) -> Result<SignalingScheme<S>> {
    let mut groups: BTreeMap<Vec<usize>, (S, Vec<S>)> = BTreeMap::new();
    for atom in scheme.atoms() {
        let key = instance.top_ordering(&atom.posterior)?;
        let entry = groups
            .entry(key)
            .or_insert_with(|| (S::zero(), vec![S::zero(); instance.d()]));
        entry.0 += atom.weight;
        for (acc, &p) in entry.1.iter_mut().zip(atom.posterior.probs()) {
            *acc += atom.weight * p;
        }
    }
    let pairs = groups
        .into_values()
        .map(|(w, acc)| Ok((w, Posterior::normalized(acc)?)))
        .collect::<Result<Vec<_>>>()?;
    SignalingScheme::from_weighted(pairs, S::zero())
}

/// Distinct hyperplanes through the simplex that can bound an ordering
/// region: `ξᵀ(v_i − v_j) = 0` for bidder pairs and `ξ(θ) = 0` for states.
/// Each normal is scaled to unit max-norm with a positive leading entry.
fn candidate_hyperplanes<S: Scalar>(instance: &AuctionInstance<S>) -> Vec<Vec<S>> {
    let d = instance.d();
    let v = instance.valuations();
    let mut planes: Vec<Vec<S>> = Vec::new();
    let tol = S::lit(VERTEX_DEDUP_TOL);
    let mut push = |mut normal: Vec<S>| {
        let scale = normal.iter().fold(S::zero(), |a, &x| a.max(x.abs()));
        if scale <= tol {
            return;
        }
        let lead = normal.iter().copied().find(|x| x.abs() > tol).unwrap();
        let s = if lead < S::zero() { -scale } else { scale };
        normal.iter_mut().for_each(|x| *x /= s);
        if !planes
            .iter()
            .any(|p| crate::scalar::max_abs_diff(p, &normal) <= tol)
        {
            planes.push(normal);
        }
    };
    for theta in 0..d {
        let mut e = vec![S::zero(); d];
        e[theta] = S::one();
        push(e);
    }
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            push(v[i].iter().zip(&v[j]).map(|(&a, &b)| a - b).collect());
        }
    }
    planes
}

/// Solves `rows · ξ = 0` together with `Σ ξ = 1`; `None` if singular.
fn intersect<S: Scalar>(rows: &[&Vec<S>], d: usize) -> Option<Vec<S>> {
    let mut a: Vec<Vec<S>> = rows
        .iter()
        .map(|r| {
            let mut row = (*r).clone();
            row.push(S::zero());
            row
        })
        .collect();
    let mut ones = vec![S::one(); d];
    ones.push(S::one());
    a.push(ones);
    let pivot_tol = S::lit(1e-10);
    for c in 0..d {
        let p = (c..d).max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap())?;
        if a[p][c].abs() <= pivot_tol {
            return None;
        }
        a.swap(p, c);
        for i in 0..d {
            if i != c {
                let f = a[i][c] / a[c][c];
                if f != S::zero() {
                    for k in c..=d {
                        let sub = f * a[c][k];
                        a[i][k] -= sub;
                    }
                }
            }
        }
    }
    Some((0..d).map(|i| a[i][d] / a[i][i]).collect())
}

/// Every vertex of every ordering region: points of the simplex cut out by
/// `d − 1` independent candidate hyperplanes.
pub fn enumerate_region_vertices<S: Scalar>(
    instance: &AuctionInstance<S>,
) -> Result<Vec<Posterior<S>>> {
    let d = instance.d();
    if d == 1 {
        return Ok(vec![Posterior::degenerate(1, 0)]);
    }
    let planes = candidate_hyperplanes(instance);
    let subsets = binomial(planes.len(), d - 1);
    if subsets > MAX_HYPERPLANE_SUBSETS {
        return Err(Error::TooLarge {
            what: "hyperplane subsets",
            required: subsets,
            limit: MAX_HYPERPLANE_SUBSETS,
        });
    }
    let tol = S::lit(VERTEX_DEDUP_TOL);
    let mut points: Vec<Vec<S>> = Vec::new();
    for chunk in &(0..planes.len()).combinations(d - 1).chunks(4096) {
        let chunk: Vec<Vec<usize>> = chunk.collect();
        let found: Vec<Vec<S>> = chunk
            .par_iter()
            .filter_map(|idx| {
                let rows: Vec<&Vec<S>> = idx.iter().map(|&k| &planes[k]).collect();
                let xi = intersect(&rows, d)?;
                if xi.iter().any(|&x| x < -tol) {
                    return None;
                }
                let mut xi: Vec<S> = xi.into_iter().map(|x| x.max(S::zero())).collect();
                let total: S = xi.iter().copied().sum();
                xi.iter_mut().for_each(|x| *x /= total);
                Some(xi)
            })
            .collect();
        points.extend(found);
    }
    dedup_points(points, tol)
        .into_iter()
        .map(Posterior::new)
        .collect()
}

/// Sorts points lexicographically and drops those within `tol` (max-norm)
/// of an earlier one.
pub(crate) fn dedup_points<S: Scalar>(mut points: Vec<Vec<S>>, tol: S) -> Vec<Vec<S>> {
    points.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.partial_cmp(y).unwrap())
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut kept: Vec<Vec<S>> = Vec::with_capacity(points.len());
    for p in points {
        let dup = kept
            .iter()
            .rev()
            .take_while(|q| p[0] - q[0] <= tol)
            .any(|q| crate::scalar::max_abs_diff(q, &p) <= tol);
        if !dup {
            kept.push(p);
        }
    }
    kept
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Optimal scheme via the signaling LP over all ordering-region vertices.
pub fn solve_fixed_d<S: Scalar>(instance: &AuctionInstance<S>) -> Result<SolveReport<S>> {
    let start = Instant::now();
    let vertices = enumerate_region_vertices(instance)?;
    let sol = signaling_lp::solve_for_instance(instance, &vertices)?;
    let scheme = signaling_lp::scheme_from_weights(&vertices, &sol.weights)?;
    let mut diag = Diagnostics::default();
    diag.set("vertices", vertices.len() as f64);
    diag.set("lp_iterations", sol.iterations as f64);
    diag.set("lp_value", sol.value.as_f64());
    diag.wall_time = start.elapsed();
    SolveReport::evaluate(instance, scheme, "fixed-d", diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn identity() -> AuctionInstance<f64> {
        AuctionInstance::new(vec![1.0], vec![0.5, 0.5], vec![vec![1.0, 0.0], vec![0.0, 1.0]])
            .unwrap()
    }

    fn sorted_probs(v: &[Posterior<f64>]) -> Vec<Vec<f64>> {
        v.iter().map(|p| p.probs().to_vec()).collect()
    }

    #[test]
    fn fixed_m_identity_instance() {
        let r = solve_fixed_m(&identity()).unwrap();
        assert_abs_diff_eq!(r.value, 0.5, epsilon = 1e-9);
        assert_eq!(r.solver_id, "fixed-m");
    }

    #[test]
    fn identical_bidders_value_is_prior_mass() {
        let p = 0.37;
        let inst =
            AuctionInstance::new(vec![1.0], vec![p, 1.0 - p], vec![vec![1.0, 0.0], vec![1.0, 0.0]])
                .unwrap();
        assert_abs_diff_eq!(solve_fixed_m(&inst).unwrap().value, p, epsilon = 1e-9);
        assert_abs_diff_eq!(solve_fixed_d(&inst).unwrap().value, p, epsilon = 1e-9);
    }

    #[test]
    fn single_state_has_no_signaling() {
        let inst =
            AuctionInstance::new(vec![1.0, 0.3], vec![1.0], vec![vec![0.9], vec![0.5], vec![0.2]])
                .unwrap();
        let rev = inst.revenue(&Posterior::new(vec![1.0]).unwrap()).unwrap();
        assert_abs_diff_eq!(solve_fixed_m(&inst).unwrap().value, rev, epsilon = 1e-12);
        assert_abs_diff_eq!(solve_fixed_d(&inst).unwrap().value, rev, epsilon = 1e-12);
    }

    #[test]
    fn vertices_of_two_state_examples() {
        let inst = AuctionInstance::new(vec![1.0], vec![0.5, 0.5], vec![vec![0.2, 0.3], vec![0.5, 0.9]])
            .unwrap();
        assert_eq!(
            sorted_probs(&enumerate_region_vertices(&inst).unwrap()),
            vec![vec![0.0, 1.0], vec![1.0, 0.0]]
        );
        let v = enumerate_region_vertices(&identity()).unwrap();
        assert_eq!(v.len(), 3);
        assert!(v
            .iter()
            .any(|p| (p.probs()[0] - 0.5).abs() < 1e-12 && (p.probs()[1] - 0.5).abs() < 1e-12));
    }

    #[test]
    fn identical_rows_give_only_corners() {
        let inst = AuctionInstance::new(
            vec![1.0],
            vec![0.2, 0.3, 0.5],
            vec![vec![0.4, 0.7, 0.1]; 3],
        )
        .unwrap();
        let v = enumerate_region_vertices(&inst).unwrap();
        assert_eq!(v.len(), 3);
        assert!(v.iter().all(|p| p.probs().contains(&1.0)));
    }

    #[test]
    fn revelation_instance_beats_trivial_schemes() {
        let inst = AuctionInstance::new(
            vec![1.0],
            vec![0.5, 0.5],
            vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]],
        )
        .unwrap();
        let r = solve_fixed_d(&inst).unwrap();
        // Revealing θ1 earns 1 there; pooling earns 0.5.
        assert!(r.value >= 0.5 - 1e-9);
        let m = solve_fixed_m(&inst).unwrap();
        assert_abs_diff_eq!(r.value, m.value, epsilon = 1e-9);
    }

    #[test]
    fn region_merge_keeps_revenue() {
        let inst = identity();
        let s = SignalingScheme::new(vec![
            crate::scheme::Atom {
                weight: 0.5,
                posterior: Posterior::new(vec![0.3, 0.7]).unwrap(),
            },
            crate::scheme::Atom {
                weight: 0.5,
                posterior: Posterior::new(vec![0.7, 0.3]).unwrap(),
            },
        ])
        .unwrap();
        let merged = merge_same_region(&inst, &s).unwrap();
        assert_eq!(merged.len(), 2);
        let split = SignalingScheme::new(vec![
            crate::scheme::Atom {
                weight: 0.5,
                posterior: Posterior::new(vec![0.6, 0.4]).unwrap(),
            },
            crate::scheme::Atom {
                weight: 0.5,
                posterior: Posterior::new(vec![0.4, 0.6]).unwrap(),
            },
        ])
        .unwrap();
        let rev = crate::scheme::scheme_revenue(&inst, &split).unwrap();
        let merged = merge_same_region(&inst, &split).unwrap();
        assert_abs_diff_eq!(crate::scheme::scheme_revenue(&inst, &merged).unwrap(), rev, epsilon = 1e-12);
    }

    #[test]
    fn size_guard_reports_requirement() {
        let n = 40;
        let inst = AuctionInstance::new(
            vec![1.0, 0.9, 0.8, 0.7],
            vec![0.5, 0.5],
            vec![vec![0.5, 0.5]; n],
        )
        .unwrap();
        match solve_fixed_m(&inst) {
            Err(Error::TooLarge { required, .. }) => assert!(required > MAX_ORDERING_VARS),
            other => panic!("expected size guard, got {other:?}"),
        }
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(3, 5), 0.0);
        assert_eq!(binomial(62, 2), 1891.0);
    }
}
