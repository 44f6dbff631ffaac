//! Signaling schemes as distributions over posteriors, plus conversion to
//! and from per-state signal tables.

use std::collections::BTreeMap;
use std::time::Duration;

use crate::auction::{AuctionInstance, Posterior, RevenueEvaluator};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Weights must sum to one within this tolerance.
pub const WEIGHT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Atom<S> {
    pub weight: S,
    pub posterior: Posterior<S>,
}

/// A finite distribution over posteriors.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalingScheme<S> {
    atoms: Vec<Atom<S>>,
}

impl<S: Scalar> SignalingScheme<S> {
    pub fn new(atoms: Vec<Atom<S>>) -> Result<Self> {
        let first = atoms
            .first()
            .ok_or_else(|| Error::invalid("scheme", "needs at least one atom"))?;
        let d = first.posterior.dim();
        for (k, a) in atoms.iter().enumerate() {
            if !(a.weight > S::zero()) || !a.weight.is_finite() {
                return Err(Error::invalid(
                    "scheme",
                    format!("atom {k} has non-positive weight {}", a.weight),
                ));
            }
            if a.posterior.dim() != d {
                return Err(Error::dims("scheme atom", d, a.posterior.dim()));
            }
        }
        let total: S = atoms.iter().map(|a| a.weight).sum();
        if (total - S::one()).abs() > S::lit(WEIGHT_TOL).max(S::lit(S::PROB_TOL)) {
            return Err(Error::invalid(
                "scheme",
                format!("weights sum to {total}, expected 1"),
            ));
        }
        Ok(Self { atoms })
    }

    /// Builds a scheme from raw solver weights: drops weights at or below
    /// `prune`, renormalizes, and merges identical posteriors.
    pub fn from_weighted(pairs: Vec<(S, Posterior<S>)>, prune: S) -> Result<Self> {
        let kept: Vec<_> = pairs.into_iter().filter(|(w, _)| *w > prune).collect();
        let total: S = kept.iter().map(|(w, _)| *w).sum();
        if !(total > S::zero()) {
            return Err(Error::invalid("scheme", "all weights are zero"));
        }
        let atoms = kept
            .into_iter()
            .map(|(w, posterior)| Atom {
                weight: w / total,
                posterior,
            })
            .collect();
        Ok(Self::new(atoms)?.merge_duplicates(S::zero()))
    }

    /// The uninformative scheme: one atom at the prior.
    pub fn no_information(prior: &[S]) -> Result<Self> {
        Self::new(vec![Atom {
            weight: S::one(),
            posterior: Posterior::new(prior.to_vec())?,
        }])
    }

    /// Reveals the state: atom `e_θ` with weight `μ_θ` for every `μ_θ > 0`.
    pub fn full_revelation(prior: &[S]) -> Result<Self> {
        let d = prior.len();
        let atoms = prior
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > S::zero())
            .map(|(theta, &p)| Atom {
                weight: p,
                posterior: Posterior::degenerate(d, theta),
            })
            .collect();
        Self::new(atoms)
    }

    pub fn atoms(&self) -> &[Atom<S>] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].posterior.dim()
    }

    /// Mean posterior `Σ γ(ξ) ξ`.
    pub fn mean(&self) -> Vec<S> {
        let mut mean = vec![S::zero(); self.dim()];
        for a in &self.atoms {
            for (m, &p) in mean.iter_mut().zip(a.posterior.probs()) {
                *m += a.weight * p;
            }
        }
        mean
    }

    /// Combines atoms whose posteriors differ by at most `tol` in max-norm;
    /// the merged posterior is the weight-averaged one.
    pub fn merge_duplicates(self, tol: S) -> Self {
        let mut merged: Vec<(S, Vec<S>)> = Vec::with_capacity(self.atoms.len());
        for a in self.atoms {
            let probs = a.posterior.probs();
            if let Some((w, acc)) = merged.iter_mut().find(|(w, acc)| {
                acc.iter()
                    .zip(probs)
                    .all(|(&x, &y)| (x / *w - y).abs() <= tol)
            }) {
                *w += a.weight;
                for (x, &y) in acc.iter_mut().zip(probs) {
                    *x += a.weight * y;
                }
            } else {
                merged.push((a.weight, probs.iter().map(|&p| a.weight * p).collect()));
            }
        }
        let atoms = merged
            .into_iter()
            .map(|(w, acc)| Atom {
                weight: w,
                posterior: Posterior::normalized(acc)
                    .expect("weighted average of posteriors is a posterior"),
            })
            .collect();
        Self { atoms }
    }
}

/// `max_θ |Σ γ(ξ) ξ(θ) − μ_θ|`.
pub fn consistency_residual<S: Scalar>(scheme: &SignalingScheme<S>, prior: &[S]) -> Result<S> {
    if scheme.dim() != prior.len() {
        return Err(Error::dims("prior", scheme.dim(), prior.len()));
    }
    Ok(crate::scalar::max_abs_diff(&scheme.mean(), prior))
}

/// Fails with [`Error::Inconsistent`] when the residual exceeds the
/// acceptance tolerance of the scalar type.
pub fn check_consistency<S: Scalar>(scheme: &SignalingScheme<S>, prior: &[S]) -> Result<S> {
    let residual = consistency_residual(scheme, prior)?;
    if residual > S::lit(S::CONSISTENCY_TOL) {
        return Err(Error::Inconsistent {
            residual: residual.as_f64(),
            tolerance: S::CONSISTENCY_TOL,
        });
    }
    Ok(residual)
}

/// Expected revenue `Σ γ(ξ) Rev(V, ξ)` of a prior-consistent scheme.
pub fn scheme_revenue<S: Scalar>(
    instance: &AuctionInstance<S>,
    scheme: &SignalingScheme<S>,
) -> Result<S> {
    check_consistency(scheme, instance.prior())?;
    let mut eval = RevenueEvaluator::new(instance);
    Ok(scheme
        .atoms()
        .iter()
        .map(|a| a.weight * eval.eval(a.posterior.probs()))
        .sum())
}

/// Per-state signal probabilities `φ_θ(s)`, one column per atom.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalTable<S> {
    pub rows: Vec<Vec<S>>,
    /// States with zero prior mass; their rows are uniform placeholders.
    pub unreachable: Vec<usize>,
}

/// Expresses a scheme as the signal distribution the sender draws from in
/// each state: `φ_θ(s) = γ(ξ_s) ξ_s(θ) / μ_θ`.
pub fn export_signals<S: Scalar>(
    scheme: &SignalingScheme<S>,
    prior: &[S],
) -> Result<SignalTable<S>> {
    check_consistency(scheme, prior)?;
    let k = scheme.len();
    let mut rows = Vec::with_capacity(prior.len());
    let mut unreachable = Vec::new();
    for (theta, &mu) in prior.iter().enumerate() {
        if mu > S::zero() {
            let mut row: Vec<S> = scheme
                .atoms()
                .iter()
                .map(|a| a.weight * a.posterior.probs()[theta] / mu)
                .collect();
            // Absorb the consistency residual so each row is a distribution.
            let total: S = row.iter().copied().sum();
            row.iter_mut().for_each(|p| *p /= total);
            rows.push(row);
        } else {
            unreachable.push(theta);
            rows.push(vec![S::one() / S::count(k); k]);
        }
    }
    Ok(SignalTable { rows, unreachable })
}

/// Bayes-updates a signal table back into a scheme: signal `s` is sent with
/// probability `Σ_θ μ_θ φ_θ(s)` and induces `ξ_s(θ) ∝ μ_θ φ_θ(s)`.
/// Signals that are never sent are dropped.
pub fn reconstruct_scheme<S: Scalar>(
    table: &SignalTable<S>,
    prior: &[S],
) -> Result<SignalingScheme<S>> {
    if table.rows.len() != prior.len() {
        return Err(Error::dims("signal table", prior.len(), table.rows.len()));
    }
    let k = table.rows.first().map_or(0, Vec::len);
    let mut atoms = Vec::with_capacity(k);
    for s in 0..k {
        let joint: Vec<S> = prior
            .iter()
            .zip(&table.rows)
            .map(|(&mu, row)| mu * row[s])
            .collect();
        let weight: S = joint.iter().copied().sum();
        if weight > S::zero() {
            atoms.push(Atom {
                weight,
                posterior: Posterior::normalized(joint)?,
            });
        }
    }
    SignalingScheme::new(atoms)
}

/// Counters and timings collected by a solver run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub counters: BTreeMap<String, f64>,
    pub flags: Vec<String>,
    pub wall_time: Duration,
}

impl Diagnostics {
    pub fn set(&mut self, key: &str, value: impl Into<f64>) {
        self.counters.insert(key.to_owned(), value.into());
    }

    pub fn add(&mut self, key: &str, value: f64) {
        *self.counters.entry(key.to_owned()).or_insert(0.0) += value;
    }

    pub fn flag(&mut self, flag: impl Into<String>) {
        let flag = flag.into();
        if !self.flags.contains(&flag) {
            self.flags.push(flag);
        }
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.counters.get(key).copied()
    }
}

/// Output of every solver.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport<S> {
    pub scheme: SignalingScheme<S>,
    /// Expected revenue of `scheme`.
    pub value: S,
    pub solver_id: &'static str,
    pub diagnostics: Diagnostics,
}

impl<S: Scalar> SolveReport<S> {
    /// Builds a report whose value is the exact revenue of `scheme` on
    /// `instance`, recording the residual in the diagnostics.
    pub(crate) fn evaluate(
        instance: &AuctionInstance<S>,
        scheme: SignalingScheme<S>,
        solver_id: &'static str,
        mut diagnostics: Diagnostics,
    ) -> Result<Self> {
        let residual = check_consistency(&scheme, instance.prior())?;
        diagnostics.set("consistency_residual", residual.as_f64());
        let value = scheme_revenue(instance, &scheme)?;
        Ok(Self {
            scheme,
            value,
            solver_id,
            diagnostics,
        })
    }
}
