//! Dense-row linear programs and a two-phase revised simplex solver.
//!
//! Problems are always maximizations:
//!
//! ```text
//! max  cᵀx
//! s.t. a_i x  = b_i   (equality rows)
//!      a_k x >= b_k   (inequality rows)
//!      l_j <= x_j <= u_j
//! ```
//!
//! Multipliers follow the Lagrangian convention `c = Aᵀy + r`: equality
//! duals are free and inequality duals are non-positive at optimality.

mod simplex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use simplex::SimplexOptions;

/// Termination status of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// The pivot budget ran out, typically from cycling or stalling.
    IterationLimit,
}

/// A single row `a · x (= or >=) rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint<S> {
    pub row: Vec<S>,
    pub rhs: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram<S> {
    objective: Vec<S>,
    eq: Vec<Constraint<S>>,
    ge: Vec<Constraint<S>>,
    bounds: Vec<(S, S)>,
}

impl<S: Scalar> LinearProgram<S> {
    /// A maximization of `objective · x` with every variable in `[0, ∞)`.
    pub fn new(objective: Vec<S>) -> Self {
        let n = objective.len();
        Self {
            objective,
            eq: Vec::new(),
            ge: Vec::new(),
            bounds: vec![(S::zero(), S::infinity()); n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn objective(&self) -> &[S] {
        &self.objective
    }

    pub fn eq_constraints(&self) -> &[Constraint<S>] {
        &self.eq
    }

    pub fn ge_constraints(&self) -> &[Constraint<S>] {
        &self.ge
    }

    pub fn bounds(&self) -> &[(S, S)] {
        &self.bounds
    }

    pub fn num_constraints(&self) -> usize {
        self.eq.len() + self.ge.len()
    }

    pub fn add_eq(&mut self, row: Vec<S>, rhs: S) -> &mut Self {
        self.eq.push(Constraint { row, rhs });
        self
    }

    pub fn add_ge(&mut self, row: Vec<S>, rhs: S) -> &mut Self {
        self.ge.push(Constraint { row, rhs });
        self
    }

    /// Stored as the negated `>=` row, so its dual carries the sign of that row.
    pub fn add_le(&mut self, row: Vec<S>, rhs: S) -> &mut Self {
        let row = row.into_iter().map(|a| -a).collect();
        self.add_ge(row, -rhs)
    }

    /// Sets `lo <= x_j <= hi`; either side may be infinite.
    pub fn set_bounds(&mut self, j: usize, lo: S, hi: S) -> &mut Self {
        self.bounds[j] = (lo, hi);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("objective", "coefficients must be finite"));
        }
        for c in self.eq.iter().chain(&self.ge) {
            if c.row.len() != n {
                return Err(Error::dims("constraint row", n, c.row.len()));
            }
            if !c.rhs.is_finite() || c.row.iter().any(|a| !a.is_finite()) {
                return Err(Error::invalid("constraint", "entries must be finite"));
            }
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi || lo == S::infinity() || hi == S::neg_infinity()
            {
                return Err(Error::invalid(
                    "bounds",
                    format!("variable {j} has empty range [{lo}, {hi}]"),
                ));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[S]) -> S {
        crate::scalar::dot(&self.objective, x)
    }

    /// Largest violation of any constraint or bound by `x`.
    pub fn primal_residual(&self, x: &[S]) -> S {
        let mut worst = S::zero();
        for c in &self.eq {
            worst = worst.max((crate::scalar::dot(&c.row, x) - c.rhs).abs());
        }
        for c in &self.ge {
            worst = worst.max(c.rhs - crate::scalar::dot(&c.row, x));
        }
        for (&xj, &(lo, hi)) in x.iter().zip(&self.bounds) {
            worst = worst.max(lo - xj).max(xj - hi);
        }
        worst
    }

    /// Reduced costs `c − Aᵀy` for multipliers ordered equality rows first.
    pub fn reduced_costs(&self, duals: &[S]) -> Vec<S> {
        let mut r = self.objective.clone();
        for (c, &y) in self.eq.iter().chain(&self.ge).zip(duals) {
            if y != S::zero() {
                for (rj, &a) in r.iter_mut().zip(&c.row) {
                    *rj -= y * a;
                }
            }
        }
        r
    }

    /// Upper bound on the optimum implied by multipliers `duals`
    /// (inequality entries must be non-positive): `bᵀy + Σ_j sup_{x_j} r_j x_j`.
    ///
    /// Reduced costs within `tol` of zero are treated as zero so that free
    /// variables do not turn rounding noise into an infinite bound.
    pub fn dual_objective(&self, duals: &[S], tol: S) -> S {
        let mut bound: S = self
            .eq
            .iter()
            .chain(&self.ge)
            .zip(duals)
            .map(|(c, &y)| c.rhs * y)
            .sum();
        for (&r, &(lo, hi)) in self.reduced_costs(duals).iter().zip(&self.bounds) {
            if r > tol {
                bound += r * hi;
            } else if r < -tol {
                bound += r * lo;
            }
        }
        bound
    }

    /// Largest complementary-slackness violation of a primal/dual pair.
    pub fn complementary_slackness(&self, x: &[S], duals: &[S]) -> S {
        let mut worst = S::zero();
        for (c, &y) in self.ge.iter().zip(&duals[self.eq.len()..]) {
            let slack = crate::scalar::dot(&c.row, x) - c.rhs;
            worst = worst.max((y * slack).abs());
            // Inequality multipliers must not be positive.
            worst = worst.max(y);
        }
        let r = self.reduced_costs(duals);
        for ((&rj, &xj), &(lo, hi)) in r.iter().zip(x).zip(&self.bounds) {
            let term = if rj > S::zero() {
                if hi.is_finite() {
                    rj * (hi - xj)
                } else {
                    rj
                }
            } else if lo.is_finite() {
                -rj * (xj - lo)
            } else {
                -rj
            };
            worst = worst.max(term.abs());
        }
        worst
    }

    /// Margin by which `w` proves infeasibility. `w` has one entry per row
    /// (equality rows first) with non-positive inequality entries, so every
    /// feasible `x` satisfies `wᵀAx <= wᵀb`. The returned value is
    /// `inf_{box} wᵀAx − wᵀb`; a positive margin certifies that no feasible
    /// point exists.
    pub fn farkas_margin(&self, w: &[S]) -> S {
        if w[self.eq.len()..].iter().any(|&v| v > S::zero()) {
            return S::neg_infinity();
        }
        let mut coef = vec![S::zero(); self.num_vars()];
        let mut wb = S::zero();
        for (c, &wi) in self.eq.iter().chain(&self.ge).zip(w) {
            wb += wi * c.rhs;
            for (cj, &a) in coef.iter_mut().zip(&c.row) {
                *cj += wi * a;
            }
        }
        let mut inf = S::zero();
        for (&cj, &(lo, hi)) in coef.iter().zip(&self.bounds) {
            if cj > S::zero() {
                inf += cj * lo;
            } else if cj < S::zero() {
                inf += cj * hi;
            }
        }
        inf - wb
    }
}

/// Result of [`solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<S> {
    pub status: LpStatus,
    /// Primal point; the last basic solution when not optimal.
    pub x: Vec<S>,
    pub value: S,
    /// One multiplier per constraint, equality rows first. Empty unless optimal.
    pub duals: Vec<S>,
    /// Infeasibility certificate in the format of [`LinearProgram::farkas_margin`].
    pub farkas: Option<Vec<S>>,
    pub iterations: usize,
}

impl<S: Scalar> LpSolution<S> {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// Turns any non-optimal status into an error labelled with `stage`.
    pub fn require_optimal(self, stage: &'static str) -> Result<Self> {
        if self.is_optimal() {
            Ok(self)
        } else {
            Err(Error::Lp {
                stage,
                status: self.status,
            })
        }
    }
}

/// Solves `lp` with default options.
pub fn solve<S: Scalar>(lp: &LinearProgram<S>) -> Result<LpSolution<S>> {
    solve_with(lp, &SimplexOptions::default())
}

pub fn solve_with<S: Scalar>(lp: &LinearProgram<S>, opts: &SimplexOptions) -> Result<LpSolution<S>> {
    lp.validate()?;
    simplex::solve(lp, opts)
}
