//! Ellipsoid method on the dual feasibility system
//!
//! ```text
//! y <= 0,  Σ_θ y_θ >= −β,  Σ_θ y_θ μ_θ + t <= ρ,
//! t >= Rev(V, ξ) − yᵀξ   for every single-minded vertex ξ,
//! ```
//!
//! with the last family separated approximately by the dynamic program.

use super::dp::{dp_separation_with, DEFAULT_MAX_DP_GRID};
use super::{RelaxationConfig, SingleMindedStructure};
use crate::auction::{AuctionInstance, Posterior, RevenueEvaluator};
use crate::error::Result;
use crate::scalar::Scalar;

/// Outcome of one feasibility run.
#[derive(Debug, Clone, PartialEq)]
pub enum Feasibility<S> {
    /// A point passing every check was found, or the iteration cap ran out
    /// first (`exhausted`), which is treated as feasible.
    Feasible { point: Vec<S>, exhausted: bool },
    /// The localized volume fell below the resolution ball; `cuts` holds
    /// the posteriors whose constraints were used, in discovery order.
    Infeasible { cuts: Vec<Posterior<S>> },
}

impl<S> Feasibility<S> {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidRun<S> {
    pub outcome: Feasibility<S>,
    pub iterations: usize,
    pub oracle_calls: usize,
    pub max_iterations: usize,
    /// True if any separation call had its grid clamped.
    pub dp_capped: bool,
}

/// Runs the ellipsoid method for threshold `rho3`.
pub fn ellipsoid_feasibility<S: Scalar>(
    instance: &AuctionInstance<S>,
    sm: &SingleMindedStructure<S>,
    rho3: S,
    config: &RelaxationConfig<S>,
) -> Result<EllipsoidRun<S>> {
    sm.check_instance(instance)?;
    run(instance, sm, rho3, config, DEFAULT_MAX_DP_GRID)
}

/// Search region, starting ball and resolution for the `(y, t)` space.
pub(crate) struct Geometry<S> {
    pub center: Vec<S>,
    pub radius: S,
    pub resolution: S,
    pub max_iterations: usize,
}

pub(crate) fn geometry<S: Scalar>(d: usize, revenue_bound: S, config: &RelaxationConfig<S>) -> Geometry<S> {
    let n = d + 1;
    let half = S::lit(0.5);
    let beta = config.beta;
    let t_top = revenue_bound + beta;
    let mut center = vec![-beta * half; d];
    center.push(t_top * half);
    let half_diag = (S::count(d) * (beta * half).powi(2) + (t_top * half).powi(2)).sqrt();
    let resolution = config.eta / S::count(2 * n);
    let radius = half_diag + S::lit(2.0) * resolution;
    let nf = n as f64;
    let bound = 2.0 * nf * (nf + 1.0) * (radius / resolution).as_f64().ln();
    Geometry {
        center,
        radius,
        resolution,
        max_iterations: bound.ceil() as usize + n,
    }
}

pub(crate) fn run<S: Scalar>(
    instance: &AuctionInstance<S>,
    sm: &SingleMindedStructure<S>,
    rho3: S,
    config: &RelaxationConfig<S>,
    max_grid: usize,
) -> Result<EllipsoidRun<S>> {
    let d = sm.d();
    let n = d + 1;
    let prior = instance.prior();
    let geo = geometry(d, instance.revenue_bound(), config);
    let mut ell = Ellipsoid::ball(geo.center, geo.radius);
    let stop = S::count(n) * geo.resolution.ln();
    let mut evaluator = RevenueEvaluator::new(instance);
    let mut cuts: Vec<Posterior<S>> = Vec::new();
    let mut seen: Vec<Vec<usize>> = Vec::new();
    let mut oracle_calls = 0;
    let mut dp_capped = false;
    let mut a = vec![S::zero(); n];

    let infeasible = |cuts: Vec<Posterior<S>>, it, calls, capped| EllipsoidRun {
        outcome: Feasibility::Infeasible { cuts },
        iterations: it,
        oracle_calls: calls,
        max_iterations: geo.max_iterations,
        dp_capped: capped,
    };

    for iteration in 0..geo.max_iterations {
        if S::lit(0.5) * ell.log_det <= stop {
            return Ok(infeasible(cuts, iteration, oracle_calls, dp_capped));
        }
        let (y, t) = ell.center.split_at(d);
        let t = t[0];
        a.iter_mut().for_each(|v| *v = S::zero());
        let b;
        let (worst, &y_max) = y
            .iter()
            .enumerate()
            .max_by(|p, q| p.1.partial_cmp(q.1).unwrap())
            .unwrap();
        let y_sum: S = y.iter().copied().sum();
        let objective = crate::scalar::dot(y, prior) + t;
        if y_max > S::zero() {
            a[worst] = S::one();
            b = S::zero();
        } else if -y_sum > config.beta {
            a[..d].iter_mut().for_each(|v| *v = -S::one());
            b = config.beta;
        } else if objective > rho3 {
            a[..d].copy_from_slice(prior);
            a[d] = S::one();
            b = rho3;
        } else {
            let y_clamped: Vec<S> = y.iter().map(|&v| v.min(S::zero()).max(-config.beta)).collect();
            let sep = dp_separation_with(instance, sm, &y_clamped, config, max_grid)?;
            oracle_calls += 1;
            dp_capped |= sep.capped;
            if sep.value <= t {
                return Ok(EllipsoidRun {
                    outcome: Feasibility::Feasible {
                        point: ell.center.clone(),
                        exhausted: false,
                    },
                    iterations: iteration,
                    oracle_calls,
                    max_iterations: geo.max_iterations,
                    dp_capped,
                });
            }
            let xi = sep.posterior.probs();
            for (slot, &p) in a.iter_mut().zip(xi) {
                *slot = -p;
            }
            a[d] = -S::one();
            b = -evaluator.eval(xi);
            if !seen.contains(&sep.subset) {
                seen.push(sep.subset.clone());
                cuts.push(sep.posterior);
            }
        }
        if !ell.cut(&a, b) {
            return Ok(infeasible(cuts, iteration + 1, oracle_calls, dp_capped));
        }
    }
    Ok(EllipsoidRun {
        outcome: Feasibility::Feasible {
            point: ell.center.clone(),
            exhausted: true,
        },
        iterations: geo.max_iterations,
        oracle_calls,
        max_iterations: geo.max_iterations,
        dp_capped,
    })
}

/// `{x : (x − c)ᵀ P⁻¹ (x − c) <= 1}` with `P` stored densely.
struct Ellipsoid<S> {
    center: Vec<S>,
    shape: Vec<S>,
    log_det: S,
    pa: Vec<S>,
}

impl<S: Scalar> Ellipsoid<S> {
    fn ball(center: Vec<S>, radius: S) -> Self {
        let n = center.len();
        let mut shape = vec![S::zero(); n * n];
        for i in 0..n {
            shape[i * n + i] = radius * radius;
        }
        Self {
            log_det: S::count(2 * n) * radius.ln(),
            center,
            shape,
            pa: vec![S::zero(); n],
        }
    }

    /// Deep cut keeping `{x : aᵀx <= b}`. Returns false when the kept part
    /// is empty or the shape matrix has degenerated.
    fn cut(&mut self, a: &[S], b: S) -> bool {
        let n = self.center.len();
        for i in 0..n {
            self.pa[i] = (0..n).map(|j| self.shape[i * n + j] * a[j]).sum();
        }
        let apa: S = crate::scalar::dot(a, &self.pa);
        if !(apa > S::zero()) {
            return false;
        }
        let norm = apa.sqrt();
        let alpha = (crate::scalar::dot(a, &self.center) - b) / norm;
        if alpha >= S::one() {
            return false;
        }
        let nf = S::count(n);
        let one = S::one();
        let tau = (one + nf * alpha) / (nf + one);
        let sigma = S::lit(2.0) * (one + nf * alpha) / ((nf + one) * (one + alpha));
        let delta = nf * nf * (one - alpha * alpha) / (nf * nf - one);
        for i in 0..n {
            self.center[i] -= tau * self.pa[i] / norm;
        }
        for i in 0..n {
            for j in 0..n {
                let v = self.shape[i * n + j] - sigma * self.pa[i] * self.pa[j] / apa;
                self.shape[i * n + j] = delta * v;
            }
        }
        for i in 0..n {
            for j in 0..i {
                let avg = S::lit(0.5) * (self.shape[i * n + j] + self.shape[j * n + i]);
                self.shape[i * n + j] = avg;
                self.shape[j * n + i] = avg;
            }
        }
        self.log_det += nf * delta.ln() + (one - sigma).ln();
        self.log_det.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state() -> (AuctionInstance<f64>, SingleMindedStructure<f64>) {
        let sm = SingleMindedStructure::new(vec![0, 1], vec![1.0, 1.0]).unwrap();
        let inst = sm.instance(vec![1.0], vec![0.5, 0.5]).unwrap();
        (inst, sm)
    }

    #[test]
    fn slack_threshold_is_feasible() {
        let (inst, sm) = two_state();
        let cfg = RelaxationConfig::from_target(0.1, 2, 1).unwrap();
        let rho = 1.0 + cfg.beta + 1.0;
        let run = ellipsoid_feasibility(&inst, &sm, rho, &cfg).unwrap();
        match run.outcome {
            Feasibility::Feasible { exhausted, .. } => assert!(!exhausted),
            other => panic!("expected feasible, got {other:?}"),
        }
    }

    #[test]
    fn threshold_below_optimum_is_infeasible() {
        let (inst, sm) = two_state();
        let cfg = RelaxationConfig::from_target(0.1, 2, 1).unwrap();
        let run = ellipsoid_feasibility(&inst, &sm, 0.25, &cfg).unwrap();
        match run.outcome {
            Feasibility::Infeasible { cuts } => assert!(!cuts.is_empty()),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn negative_threshold_is_infeasible_without_revenue() {
        let sm = SingleMindedStructure::new(vec![0], vec![1.0, 1.0]).unwrap();
        let inst = sm.instance(vec![1.0], vec![0.5, 0.5]).unwrap();
        let cfg = RelaxationConfig::from_target(0.1, 2, 1).unwrap();
        let run = ellipsoid_feasibility(&inst, &sm, -1.0, &cfg).unwrap();
        assert!(!run.outcome.is_feasible());
    }

    #[test]
    fn cut_shrinks_volume() {
        let mut e = Ellipsoid::ball(vec![0.0, 0.0], 1.0);
        let before = e.log_det;
        assert!(e.cut(&[1.0, 0.0], 0.0));
        assert!(e.log_det < before);
        assert!(e.center[0] < 0.0);
        assert!(!e.cut(&[1.0, 0.0], -10.0));
    }
}
