//! Floating-point abstraction shared by every solver.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar the solvers are generic over: `f32` or `f64`.
///
/// Tolerances are attached to the type because single precision cannot meet
/// the double-precision thresholds used for LP feasibility and scheme
/// consistency.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Primal/dual feasibility tolerance of the simplex solver.
    const FEAS_TOL: f64;
    /// Smallest pivot magnitude accepted by the simplex.
    const PIVOT_TOL: f64;
    /// Probability vectors must sum to one within this tolerance.
    const PROB_TOL: f64;
    /// Maximum consistency residual accepted for solver output.
    const CONSISTENCY_TOL: f64;

    /// Converts an `f64` literal or parameter into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("scalar conversion from f64")
    }

    /// Converts a count into the scalar type.
    #[inline]
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("scalar conversion from usize")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    const FEAS_TOL: f64 = 1e-9;
    const PIVOT_TOL: f64 = 1e-11;
    const PROB_TOL: f64 = 1e-12;
    const CONSISTENCY_TOL: f64 = 1e-7;
}

impl Scalar for f32 {
    const FEAS_TOL: f64 = 1e-4;
    const PIVOT_TOL: f64 = 1e-6;
    const PROB_TOL: f64 = 1e-5;
    const CONSISTENCY_TOL: f64 = 1e-3;
}

/// Maximum absolute entrywise difference of two equally long slices.
pub fn max_abs_diff<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter()
        .zip(b)
        .fold(S::zero(), |acc, (&x, &y)| acc.max((x - y).abs()))
}

pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}
