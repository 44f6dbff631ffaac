//! Sampling access to a distribution over valuation matrices.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};

use crate::auction::validate_valuations;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A valuation matrix: `matrix[i][θ]` is bidder `i`'s value in state `θ`.
pub type Matrix<S> = Vec<Vec<S>>;

/// Source of i.i.d. valuation matrices.
///
/// Callers seed one generator per sample index, so draws are reproducible
/// regardless of how they are scheduled across threads.
pub trait ValuationOracle<S>: Sync {
    fn n(&self) -> usize;
    fn d(&self) -> usize;
    fn sample(&self, rng: &mut ChaCha8Rng) -> Matrix<S>;

    /// The full distribution, when it is finite and known.
    fn support(&self) -> Option<Vec<(S, Matrix<S>)>> {
        None
    }
}

fn check_shape<S: Scalar>(matrix: &Matrix<S>, field: &'static str) -> Result<(usize, usize)> {
    let d = matrix.first().map_or(0, Vec::len);
    if d == 0 {
        return Err(Error::invalid(field, "matrices need at least one bidder and one state"));
    }
    validate_valuations(matrix, d, field)?;
    Ok((matrix.len(), d))
}

/// Always returns the same matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedValuations<S> {
    matrix: Matrix<S>,
}

impl<S: Scalar> FixedValuations<S> {
    pub fn new(matrix: Matrix<S>) -> Result<Self> {
        check_shape(&matrix, "valuations")?;
        Ok(Self { matrix })
    }
}

impl<S: Scalar> ValuationOracle<S> for FixedValuations<S> {
    fn n(&self) -> usize {
        self.matrix.len()
    }

    fn d(&self) -> usize {
        self.matrix[0].len()
    }

    fn sample(&self, _rng: &mut ChaCha8Rng) -> Matrix<S> {
        self.matrix.clone()
    }

    fn support(&self) -> Option<Vec<(S, Matrix<S>)>> {
        Some(vec![(S::one(), self.matrix.clone())])
    }
}

/// Finitely many matrices with given probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSupport<S> {
    matrices: Vec<Matrix<S>>,
    probs: Vec<S>,
    cumulative: Vec<f64>,
}

impl<S: Scalar> FiniteSupport<S> {
    pub fn new(matrices: Vec<Matrix<S>>, probs: Vec<S>) -> Result<Self> {
        if matrices.len() != probs.len() {
            return Err(Error::dims("distribution.probs", matrices.len(), probs.len()));
        }
        crate::auction::validate_distribution(&probs, "distribution.probs", S::lit(S::PROB_TOL))?;
        let first = matrices
            .first()
            .ok_or_else(|| Error::invalid("distribution.matrices", "no matrices given"))?;
        let (n, d) = check_shape(first, "distribution.matrices")?;
        for (k, mat) in matrices.iter().enumerate() {
            if mat.len() != n {
                return Err(Error::invalid(
                    "distribution.matrices",
                    format!("matrix {k} has {} bidders, expected {n}", mat.len()),
                ));
            }
            validate_valuations(mat, d, "distribution.matrices")?;
        }
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|p| {
                acc += p.as_f64();
                acc
            })
            .collect();
        Ok(Self {
            matrices,
            probs,
            cumulative,
        })
    }

    pub fn matrices(&self) -> &[Matrix<S>] {
        &self.matrices
    }

    pub fn probs(&self) -> &[S] {
        &self.probs
    }
}

impl<S: Scalar> ValuationOracle<S> for FiniteSupport<S> {
    fn n(&self) -> usize {
        self.matrices[0].len()
    }

    fn d(&self) -> usize {
        self.matrices[0][0].len()
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Matrix<S> {
        let total = *self.cumulative.last().unwrap();
        let u = rng.gen::<f64>() * total;
        let k = self
            .cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.matrices.len() - 1);
        self.matrices[k].clone()
    }

    fn support(&self) -> Option<Vec<(S, Matrix<S>)>> {
        Some(
            self.probs
                .iter()
                .copied()
                .zip(self.matrices.iter().cloned())
                .collect(),
        )
    }
}

/// Independent entries, `v_i(θ) = lo + (hi − lo) · Beta(a_iθ, b_iθ)`.
#[derive(Debug, Clone)]
pub struct ProductBeta<S> {
    params: Vec<Vec<(f64, f64)>>,
    lo: S,
    hi: S,
}

impl<S: Scalar> ProductBeta<S> {
    /// `params[i][θ] = (a, b)` shape parameters; values are rescaled into
    /// `[lo, hi] ⊆ [0, 1]`.
    pub fn new(params: Vec<Vec<(f64, f64)>>, lo: S, hi: S) -> Result<Self> {
        let d = params.first().map_or(0, Vec::len);
        if d == 0 {
            return Err(Error::invalid("beta parameters", "need at least one bidder and state"));
        }
        for (i, row) in params.iter().enumerate() {
            if row.len() != d {
                return Err(Error::invalid(
                    "beta parameters",
                    format!("bidder {i} has {} entries, expected {d}", row.len()),
                ));
            }
            if let Some(&(a, b)) = row.iter().find(|&&(a, b)| !(a > 0.0 && b > 0.0)) {
                return Err(Error::invalid(
                    "beta parameters",
                    format!("shape ({a}, {b}) must be positive"),
                ));
            }
        }
        if !(lo >= S::zero() && lo <= hi && hi <= S::one()) {
            return Err(Error::invalid("beta range", format!("[{lo}, {hi}] is not inside [0, 1]")));
        }
        Ok(Self { params, lo, hi })
    }
}

impl<S: Scalar> ValuationOracle<S> for ProductBeta<S> {
    fn n(&self) -> usize {
        self.params.len()
    }

    fn d(&self) -> usize {
        self.params[0].len()
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Matrix<S> {
        let width = self.hi - self.lo;
        self.params
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&(a, b)| {
                        let x = Beta::new(a, b).expect("validated shape").sample(rng);
                        (self.lo + width * S::lit(x)).max(self.lo).min(self.hi)
                    })
                    .collect()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn finite_support_frequencies() {
        let o = FiniteSupport::new(
            vec![vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]]],
            vec![0.25, 0.75],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let hits = (0..20_000)
            .filter(|_| o.sample(&mut rng)[0][0] == 1.0)
            .count();
        let freq = hits as f64 / 20_000.0;
        assert!((freq - 0.25).abs() < 0.02, "{freq}");
    }

    #[test]
    fn beta_samples_stay_in_range() {
        let o = ProductBeta::new(vec![vec![(2.0, 3.0); 3]; 2], 0.2, 0.9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let m = o.sample(&mut rng);
            assert!(m.iter().flatten().all(|&v| (0.2..=0.9).contains(&v)));
        }
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(FiniteSupport::new(vec![vec![vec![1.0]]], vec![0.5]).is_err());
        assert!(FiniteSupport::new(
            vec![vec![vec![1.0]], vec![vec![0.5], vec![0.5]]],
            vec![0.5, 0.5]
        )
        .is_err());
        assert!(FixedValuations::new(vec![vec![1.5_f64]]).is_err());
        assert!(ProductBeta::<f64>::new(vec![vec![(0.0, 1.0)]], 0.0, 1.0).is_err());
    }
}
