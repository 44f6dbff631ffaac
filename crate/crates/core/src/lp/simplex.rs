//! Two-phase revised simplex on an internal standard form
//! `A'x' = b', x' >= 0, b' >= 0` with an explicit dense basis inverse.

use super::{LinearProgram, LpSolution, LpStatus};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Tuning knobs of the simplex solver.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexOptions {
    /// Pivot budget shared by both phases; `None` scales with problem size.
    pub max_iterations: Option<usize>,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub degenerate_threshold: usize,
    /// Pivots between recomputations of the basis inverse.
    pub refactor_every: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iterations: None,
            degenerate_threshold: 50,
            refactor_every: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColKind {
    Structural,
    Slack,
    Artificial,
}

/// How an original variable maps onto non-negative internal columns.
#[derive(Debug, Clone, Copy)]
enum VarMap<S> {
    /// `x = lo + x'`
    Shift { col: usize, lo: S },
    /// `x = hi − x'`
    Flip { col: usize, hi: S },
    /// `x = x⁺ − x⁻`
    Split { pos: usize, neg: usize },
}

struct StandardForm<S> {
    rows: usize,
    cols: Vec<Vec<(usize, S)>>,
    kind: Vec<ColKind>,
    cost: Vec<S>,
    b: Vec<S>,
    /// `±1` applied to each row to make its right-hand side non-negative.
    row_sign: Vec<S>,
    maps: Vec<VarMap<S>>,
    initial_basis: Vec<usize>,
    /// Rows that belong to user constraints (the rest encode upper bounds).
    user_rows: usize,
}

impl<S: Scalar> StandardForm<S> {
    fn build(lp: &LinearProgram<S>) -> Self {
        let n = lp.num_vars();
        let mut cols: Vec<Vec<(usize, S)>> = Vec::new();
        let mut kind = Vec::new();
        let mut cost = Vec::new();
        let mut maps = Vec::with_capacity(n);
        // (structural column, sign) pairs per original variable.
        let mut parts: Vec<Vec<(usize, S)>> = Vec::with_capacity(n);
        let mut shift = vec![S::zero(); n];
        let mut upper_rows: Vec<(usize, S)> = Vec::new();

        for (j, &(lo, hi)) in lp.bounds.iter().enumerate() {
            let c = lp.objective[j];
            let next = cols.len();
            if lo.is_finite() {
                maps.push(VarMap::Shift { col: next, lo });
                parts.push(vec![(next, S::one())]);
                shift[j] = lo;
                cost.push(c);
                if hi.is_finite() {
                    upper_rows.push((next, hi - lo));
                }
            } else if hi.is_finite() {
                maps.push(VarMap::Flip { col: next, hi });
                parts.push(vec![(next, -S::one())]);
                shift[j] = hi;
                cost.push(-c);
            } else {
                maps.push(VarMap::Split {
                    pos: next,
                    neg: next + 1,
                });
                parts.push(vec![(next, S::one()), (next + 1, -S::one())]);
                cost.push(c);
                cost.push(-c);
                cols.push(Vec::new());
                kind.push(ColKind::Structural);
            }
            cols.push(Vec::new());
            kind.push(ColKind::Structural);
        }

        let user_rows = lp.eq.len() + lp.ge.len();
        let rows = user_rows + upper_rows.len();
        let mut b = Vec::with_capacity(rows);
        let mut row_sign = Vec::with_capacity(rows);
        let mut initial_basis = Vec::with_capacity(rows);

        let user = lp
            .eq
            .iter()
            .map(|c| (c, false))
            .chain(lp.ge.iter().map(|c| (c, true)));
        for (i, (con, is_ge)) in user.enumerate() {
            let rhs = con.rhs - crate::scalar::dot(&con.row, &shift);
            let sign = if rhs < S::zero() || (is_ge && rhs == S::zero()) {
                -S::one()
            } else {
                S::one()
            };
            for (j, &a) in con.row.iter().enumerate() {
                if a != S::zero() {
                    for &(col, s) in &parts[j] {
                        cols[col].push((i, sign * s * a));
                    }
                }
            }
            b.push(sign * rhs);
            row_sign.push(sign);
            if is_ge {
                // a x' − s = rhs; after flipping the slack enters with +1.
                cols.push(vec![(i, -sign)]);
                kind.push(ColKind::Slack);
                cost.push(S::zero());
                if sign < S::zero() {
                    initial_basis.push(cols.len() - 1);
                    continue;
                }
            }
            cols.push(vec![(i, S::one())]);
            kind.push(ColKind::Artificial);
            cost.push(S::zero());
            initial_basis.push(cols.len() - 1);
        }
        for (k, &(col, width)) in upper_rows.iter().enumerate() {
            let i = user_rows + k;
            cols[col].push((i, S::one()));
            cols.push(vec![(i, S::one())]);
            kind.push(ColKind::Slack);
            cost.push(S::zero());
            b.push(width);
            row_sign.push(S::one());
            initial_basis.push(cols.len() - 1);
        }

        Self {
            rows,
            cols,
            kind,
            cost,
            b,
            row_sign,
            maps,
            initial_basis,
            user_rows,
        }
    }
}

enum PhaseEnd {
    Optimal,
    Unbounded,
    IterationLimit,
}

struct Engine<'a, S> {
    sf: &'a StandardForm<S>,
    opts: &'a SimplexOptions,
    basis: Vec<usize>,
    /// Basis position of each column, `usize::MAX` when non-basic.
    position: Vec<usize>,
    /// Row-major `rows × rows` basis inverse.
    binv: Vec<S>,
    xb: Vec<S>,
    iterations: usize,
    max_iterations: usize,
    since_refactor: usize,
    feas_tol: S,
    dual_tol: S,
    pivot_tol: S,
}

impl<'a, S: Scalar> Engine<'a, S> {
    fn new(sf: &'a StandardForm<S>, opts: &'a SimplexOptions) -> Self {
        let m = sf.rows;
        let mut position = vec![usize::MAX; sf.cols.len()];
        for (r, &c) in sf.initial_basis.iter().enumerate() {
            position[c] = r;
        }
        let mut binv = vec![S::zero(); m * m];
        for r in 0..m {
            binv[r * m + r] = S::one();
        }
        let max_iterations = opts
            .max_iterations
            .unwrap_or(20_000 + 50 * (m + sf.cols.len()));
        Self {
            sf,
            opts,
            basis: sf.initial_basis.clone(),
            position,
            binv,
            xb: sf.b.clone(),
            iterations: 0,
            max_iterations,
            since_refactor: 0,
            feas_tol: S::lit(S::FEAS_TOL),
            dual_tol: S::lit(S::FEAS_TOL),
            pivot_tol: S::lit(S::PIVOT_TOL),
        }
    }

    fn duals(&self, cost: &[S]) -> Vec<S> {
        let m = self.sf.rows;
        let mut y = vec![S::zero(); m];
        for (r, &col) in self.basis.iter().enumerate() {
            let c = cost[col];
            if c != S::zero() {
                let row = &self.binv[r * m..(r + 1) * m];
                for (yk, &v) in y.iter_mut().zip(row) {
                    *yk += c * v;
                }
            }
        }
        y
    }

    fn reduced_cost(&self, cost: &[S], y: &[S], col: usize) -> S {
        cost[col]
            - self.sf.cols[col]
                .iter()
                .map(|&(r, a)| y[r] * a)
                .sum::<S>()
    }

    /// `B⁻¹ A_col`.
    fn ftran(&self, col: usize) -> Vec<S> {
        let m = self.sf.rows;
        let mut alpha = vec![S::zero(); m];
        for &(r, a) in &self.sf.cols[col] {
            for (i, al) in alpha.iter_mut().enumerate() {
                *al += self.binv[i * m + r] * a;
            }
        }
        alpha
    }

    fn pivot(&mut self, r: usize, col: usize, alpha: &[S]) {
        let m = self.sf.rows;
        let theta = self.xb[r] / alpha[r];
        for (i, x) in self.xb.iter_mut().enumerate() {
            if i != r {
                *x -= theta * alpha[i];
                if *x < S::zero() && *x > -self.feas_tol {
                    *x = S::zero();
                }
            }
        }
        self.xb[r] = theta;
        let inv = S::one() / alpha[r];
        for k in 0..m {
            self.binv[r * m + k] *= inv;
        }
        let (before, rest) = self.binv.split_at_mut(r * m);
        let (pivot_row, after) = rest.split_at_mut(m);
        for (i, row) in before
            .chunks_exact_mut(m)
            .chain(after.chunks_exact_mut(m))
            .enumerate()
        {
            let i = if i < r { i } else { i + 1 };
            let f = alpha[i];
            if f != S::zero() {
                for (v, &p) in row.iter_mut().zip(pivot_row.iter()) {
                    *v -= f * p;
                }
            }
        }
        self.position[self.basis[r]] = usize::MAX;
        self.basis[r] = col;
        self.position[col] = r;
        self.iterations += 1;
        self.since_refactor += 1;
    }

    /// Recomputes `B⁻¹` and `x_B` from scratch by Gauss–Jordan elimination.
    fn refactor(&mut self) -> Result<()> {
        let m = self.sf.rows;
        let mut a = vec![S::zero(); m * m];
        for (k, &col) in self.basis.iter().enumerate() {
            for &(r, v) in &self.sf.cols[col] {
                a[r * m + k] = v;
            }
        }
        let mut inv = vec![S::zero(); m * m];
        for r in 0..m {
            inv[r * m + r] = S::one();
        }
        for c in 0..m {
            let p = (c..m)
                .max_by(|&i, &j| a[i * m + c].abs().partial_cmp(&a[j * m + c].abs()).unwrap())
                .unwrap();
            if a[p * m + c].abs() <= self.pivot_tol {
                return Err(Error::Numerical {
                    stage: "simplex refactorization",
                    reason: "basis matrix became singular".into(),
                });
            }
            if p != c {
                for k in 0..m {
                    a.swap(p * m + k, c * m + k);
                    inv.swap(p * m + k, c * m + k);
                }
            }
            let d = S::one() / a[c * m + c];
            for k in 0..m {
                a[c * m + k] *= d;
                inv[c * m + k] *= d;
            }
            for i in 0..m {
                if i != c {
                    let f = a[i * m + c];
                    if f != S::zero() {
                        for k in 0..m {
                            let (av, iv) = (a[c * m + k], inv[c * m + k]);
                            a[i * m + k] -= f * av;
                            inv[i * m + k] -= f * iv;
                        }
                    }
                }
            }
        }
        // Row k of the inverse pairs with basis position k.
        self.binv = inv;
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            let mut x = crate::scalar::dot(row, &self.sf.b);
            if x < S::zero() && x > -self.feas_tol {
                x = S::zero();
            }
            self.xb[i] = x;
        }
        self.since_refactor = 0;
        Ok(())
    }

    fn run(&mut self, cost: &[S], phase_two: bool) -> Result<PhaseEnd> {
        let sf = self.sf;
        let mut degenerate_run = 0usize;
        let mut bland = false;
        loop {
            if self.since_refactor >= self.opts.refactor_every {
                self.refactor()?;
            }
            let y = self.duals(cost);
            let mut entering = None;
            let mut best = self.dual_tol;
            for col in 0..sf.cols.len() {
                if self.position[col] != usize::MAX
                    || (phase_two && sf.kind[col] == ColKind::Artificial)
                {
                    continue;
                }
                let d = self.reduced_cost(cost, &y, col);
                if d > best {
                    entering = Some(col);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(col) = entering else {
                return Ok(PhaseEnd::Optimal);
            };
            if self.iterations >= self.max_iterations {
                return Ok(PhaseEnd::IterationLimit);
            }

            let alpha = self.ftran(col);
            let mut leave: Option<(usize, S)> = None;
            for (i, &a) in alpha.iter().enumerate() {
                let blocking_artificial =
                    phase_two && sf.kind[self.basis[i]] == ColKind::Artificial;
                let ratio = if blocking_artificial && a.abs() > self.pivot_tol {
                    S::zero()
                } else if a > self.pivot_tol {
                    self.xb[i].max(S::zero()) / a
                } else {
                    continue;
                };
                let better = match leave {
                    None => true,
                    Some((r, best_ratio)) => {
                        let tie = S::lit(1e-12) * (S::one() + best_ratio.abs());
                        if ratio < best_ratio - tie {
                            true
                        } else if ratio <= best_ratio + tie {
                            if bland {
                                self.basis[i] < self.basis[r]
                            } else {
                                a.abs() > alpha[r].abs()
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((r, ratio)) = leave else {
                return Ok(PhaseEnd::Unbounded);
            };
            if ratio <= self.feas_tol {
                degenerate_run += 1;
                if degenerate_run >= self.opts.degenerate_threshold {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
                bland = false;
            }
            self.pivot(r, col, &alpha);
        }
    }

    /// Pivots zero-valued artificials out of the basis where a structural or
    /// slack column can replace them. Remaining ones sit on redundant rows.
    fn expel_artificials(&mut self) {
        let sf = self.sf;
        let m = sf.rows;
        for r in 0..m {
            if sf.kind[self.basis[r]] != ColKind::Artificial {
                continue;
            }
            let row = &self.binv[r * m..(r + 1) * m];
            let mut best: Option<(usize, S)> = None;
            for col in 0..sf.cols.len() {
                if self.position[col] != usize::MAX || sf.kind[col] == ColKind::Artificial {
                    continue;
                }
                let v: S = sf.cols[col].iter().map(|&(i, a)| row[i] * a).sum();
                if v.abs() > S::lit(1e3 * S::PIVOT_TOL) && best.is_none_or(|(_, b)| v.abs() > b) {
                    best = Some((col, v.abs()));
                }
            }
            if let Some((col, _)) = best {
                let alpha = self.ftran(col);
                self.xb[r] = S::zero();
                self.pivot(r, col, &alpha);
            }
        }
    }

    fn structural_values(&self) -> Vec<S> {
        let mut x = vec![S::zero(); self.sf.cols.len()];
        for (r, &col) in self.basis.iter().enumerate() {
            x[col] = self.xb[r].max(S::zero());
        }
        x
    }
}

pub(super) fn solve<S: Scalar>(lp: &LinearProgram<S>, opts: &SimplexOptions) -> Result<LpSolution<S>> {
    let sf = StandardForm::build(lp);
    let mut eng = Engine::new(&sf, opts);

    let finish = |eng: &Engine<S>, status: LpStatus, duals: Vec<S>, farkas: Option<Vec<S>>| {
        let xs = eng.structural_values();
        let x: Vec<S> = sf
            .maps
            .iter()
            .map(|m| match *m {
                VarMap::Shift { col, lo } => lo + xs[col],
                VarMap::Flip { col, hi } => hi - xs[col],
                VarMap::Split { pos, neg } => xs[pos] - xs[neg],
            })
            .collect();
        let value = lp.objective_value(&x);
        LpSolution {
            status,
            x,
            value,
            duals,
            farkas,
            iterations: eng.iterations,
        }
    };
    let user_duals = |y: &[S]| -> Vec<S> {
        y.iter()
            .zip(&sf.row_sign)
            .take(sf.user_rows)
            .map(|(&v, &s)| v * s)
            .collect()
    };

    let needs_phase_one = sf
        .initial_basis
        .iter()
        .any(|&c| sf.kind[c] == ColKind::Artificial);
    if needs_phase_one {
        let phase1_cost: Vec<S> = sf
            .kind
            .iter()
            .map(|k| {
                if *k == ColKind::Artificial {
                    -S::one()
                } else {
                    S::zero()
                }
            })
            .collect();
        match eng.run(&phase1_cost, false)? {
            PhaseEnd::Optimal => {}
            PhaseEnd::IterationLimit => {
                return Ok(finish(&eng, LpStatus::IterationLimit, Vec::new(), None));
            }
            PhaseEnd::Unbounded => {
                return Err(Error::Numerical {
                    stage: "simplex phase one",
                    reason: "auxiliary problem reported unbounded".into(),
                });
            }
        }
        eng.refactor()?;
        let infeasibility: S = eng
            .basis
            .iter()
            .zip(&eng.xb)
            .filter(|(&c, _)| sf.kind[c] == ColKind::Artificial)
            .map(|(_, &x)| x.max(S::zero()))
            .sum();
        let scale = S::one() + sf.b.iter().fold(S::zero(), |a, &b| a.max(b));
        if infeasibility > eng.feas_tol * scale {
            let y = eng.duals(&phase1_cost);
            let farkas = user_duals(&y);
            return Ok(finish(&eng, LpStatus::Infeasible, Vec::new(), Some(farkas)));
        }
        eng.expel_artificials();
        eng.refactor()?;
    }

    let status = match eng.run(&sf.cost, true)? {
        PhaseEnd::Optimal => LpStatus::Optimal,
        PhaseEnd::Unbounded => LpStatus::Unbounded,
        PhaseEnd::IterationLimit => LpStatus::IterationLimit,
    };
    if status != LpStatus::Optimal {
        return Ok(finish(&eng, status, Vec::new(), None));
    }
    eng.refactor()?;
    let y = eng.duals(&sf.cost);
    Ok(finish(&eng, status, user_duals(&y), None))
}
