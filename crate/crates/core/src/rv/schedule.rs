//! Grid resolution and sample-size schedules of the three regimes.

use super::grid::grid_size;
use crate::error::{Error, Result};

/// Which structural assumption the parameters are tuned for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// Few states; additive error `ε`.
    FixedD,
    /// Few slots; additive error `ν`.
    FixedM,
    /// Valuations at least `δ > 0`; multiplicative loss `β`.
    BoundedAway,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::FixedD => "fixed-d",
            Regime::FixedM => "fixed-m",
            Regime::BoundedAway => "bounded-away",
        }
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed-d" => Ok(Regime::FixedD),
            "fixed-m" => Ok(Regime::FixedM),
            "bounded-away" => Ok(Regime::BoundedAway),
            other => Err(Error::invalid(
                "regime",
                format!("unknown regime {other:?}; expected fixed-d, fixed-m or bounded-away"),
            )),
        }
    }
}

fn positive(field: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("{v} must be positive")))
    }
}

/// Unrounded sample count `2(λ_1 m)²/τ² · ln(2/ρ)`.
pub fn sample_bound(rho: f64, tau: f64, lambda1: f64, m: usize) -> Result<f64> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::invalid("rho", format!("{rho} must lie in (0, 1)")));
    }
    positive("tau", tau)?;
    let scale = lambda1 * m as f64;
    Ok(2.0 * scale * scale / (tau * tau) * (2.0 / rho).ln())
}

/// Samples needed so the empirical revenue of every posterior in a fixed
/// set is within `τ` of its expectation with probability `1 − ρ` each.
pub fn required_samples(rho: f64, tau: f64, lambda1: f64, m: usize) -> Result<u64> {
    Ok(sample_bound(rho, tau, lambda1, m)?.ceil().max(1.0) as u64)
}

/// Grid resolution. `accuracy` is `λ` for [`Regime::FixedD`]
/// (`q = ⌈md/λ⌉`) and `η` otherwise (`q = ⌈ln((m+1)/η)/(2η²)⌉`).
pub fn choose_q(regime: Regime, accuracy: f64, m: usize, d: usize) -> Result<usize> {
    positive("accuracy", accuracy)?;
    let raw = match regime {
        Regime::FixedD => m as f64 * d as f64 / accuracy,
        Regime::FixedM | Regime::BoundedAway => {
            ((m as f64 + 1.0) / accuracy).ln() / (2.0 * accuracy * accuracy)
        }
    };
    // Accuracies like ε/3 are not exact in binary; without the guard
    // md/(0.3/3) would round up to 61.
    let q = (raw * (1.0 - 1e-12)).ceil();
    Ok(q.max(1.0) as usize)
}

/// Every parameter a regime derives from its target error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub regime: Regime,
    pub target: f64,
    /// `λ` (fixed-d) or `η` (otherwise).
    pub accuracy: f64,
    pub q: usize,
    /// `|Ξ_q|`.
    pub grid_size: f64,
    pub tau: f64,
    pub alpha: f64,
    pub rho: f64,
    /// Unrounded sample count; may exceed any practical budget.
    pub samples: f64,
}

/// Derives `(q, s)` and the intermediate constants for a regime.
///
/// `delta` is the valuation lower bound, required for
/// [`Regime::BoundedAway`] and ignored otherwise.
pub fn schedule(
    regime: Regime,
    target: f64,
    m: usize,
    d: usize,
    lambda1: f64,
    delta: Option<f64>,
) -> Result<Schedule> {
    positive("target error", target)?;
    if m == 0 || d == 0 {
        return Err(Error::invalid("shape", "need at least one slot and one state"));
    }
    let (accuracy, tau, alpha_num, divide_rho) = match regime {
        Regime::FixedD => (target / 3.0, target / 6.0, target / 3.0, true),
        Regime::FixedM => (
            target / (6.0 * m as f64),
            target / 3.0,
            target / 3.0,
            true,
        ),
        Regime::BoundedAway => {
            let delta = delta.ok_or_else(|| {
                Error::invalid("delta", "the bounded-away regime needs a lower bound δ")
            })?;
            if !(delta > 0.0 && delta <= 1.0) {
                return Err(Error::invalid("delta", format!("{delta} must lie in (0, 1]")));
            }
            if target >= 1.0 {
                return Err(Error::invalid("target error", "multiplicative loss must be below 1"));
            }
            let nu = target / 4.0;
            (
                delta * target / 2.0,
                nu * delta * lambda1,
                target / 4.0,
                false,
            )
        }
    };
    let q = choose_q(regime, accuracy, m, d)?;
    let size = grid_size(d, q);
    let alpha = alpha_num / size;
    let rho = if divide_rho { alpha / m as f64 } else { alpha };
    let samples = if lambda1 > 0.0 {
        sample_bound(rho, tau, lambda1, m)?.ceil().max(1.0)
    } else {
        1.0
    };
    Ok(Schedule {
        regime,
        target,
        accuracy,
        q,
        grid_size: size,
        tau,
        alpha,
        rho,
        samples,
    })
}
