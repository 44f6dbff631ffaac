//! Posteriors whose coordinates are multiples of `1/q`.

use crate::auction::Posterior;
use crate::error::{Error, Result};
use crate::kv_exact::binomial;
use crate::scalar::Scalar;

/// Default ceiling on the number of grid posteriors.
pub const DEFAULT_GRID_CAP: usize = 200_000;

/// All `q`-uniform posteriors in dimension `d`, in lexicographic order of
/// their numerators.
#[derive(Debug, Clone, PartialEq)]
pub struct QGrid<S> {
    pub d: usize,
    pub q: usize,
    pub posteriors: Vec<Posterior<S>>,
}

impl<S> QGrid<S> {
    pub fn len(&self) -> usize {
        self.posteriors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posteriors.is_empty()
    }
}

/// `C(q + d − 1, d − 1)`, as a float so huge grids can be reported.
pub fn grid_size(d: usize, q: usize) -> f64 {
    binomial(q + d - 1, d - 1)
}

pub fn enumerate_q_uniform<S: Scalar>(d: usize, q: usize) -> Result<QGrid<S>> {
    enumerate_q_uniform_capped(d, q, DEFAULT_GRID_CAP)
}

pub fn enumerate_q_uniform_capped<S: Scalar>(d: usize, q: usize, cap: usize) -> Result<QGrid<S>> {
    if d == 0 {
        return Err(Error::invalid("d", "at least one state is required"));
    }
    if q == 0 {
        return Err(Error::invalid("q", "must be positive"));
    }
    let size = grid_size(d, q);
    if size > cap as f64 {
        return Err(Error::TooLarge {
            what: "q-uniform grid",
            required: size,
            limit: cap as f64,
        });
    }
    let mut posteriors = Vec::with_capacity(size as usize);
    for_each_composition(d, q, |parts| {
        posteriors.push(composition_posterior(parts, q));
    });
    Ok(QGrid { d, q, posteriors })
}

/// Visits every composition of `q` into `d` non-negative parts in
/// lexicographic order.
pub(crate) fn for_each_composition(d: usize, q: usize, mut visit: impl FnMut(&[usize])) {
    let mut parts = vec![0usize; d];
    parts[d - 1] = q;
    loop {
        visit(&parts);
        // Next composition: find the rightmost position before the last
        // that can be increased, i.e. the one followed by remaining mass.
        let tail = parts[d - 1];
        if d == 1 {
            return;
        }
        let pos = if tail > 0 {
            d - 2
        } else {
            match (0..d - 1).rev().find(|&i| i + 1 < d - 1 && parts[i + 1] > 0) {
                Some(i) => i,
                None => return,
            }
        };
        if tail > 0 {
            parts[pos] += 1;
            parts[d - 1] -= 1;
        } else {
            // Carry: move everything after `pos` into the last slot.
            let moved = parts[pos + 1];
            parts[pos] += 1;
            parts[pos + 1] = 0;
            parts[d - 1] = moved - 1;
        }
    }
}

pub(crate) fn composition_posterior<S: Scalar>(parts: &[usize], q: usize) -> Posterior<S> {
    let qs = S::count(q);
    let probs = parts.iter().map(|&k| S::count(k) / qs).collect();
    Posterior::normalized(probs).expect("compositions are distributions")
}
