//! Empirical distribution of sampled valuation matrices.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::oracle::{Matrix, ValuationOracle};
use crate::auction::{validate_valuations, Posterior, RevenueEvaluator};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const CHUNK: usize = 4096;

/// Uniform distribution over `s` samples, stored as distinct matrices
/// with multiplicities in order of first appearance.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution<S> {
    n: usize,
    d: usize,
    matrices: Vec<Matrix<S>>,
    counts: Vec<u64>,
    total: u64,
}

fn key_of<S: Scalar>(matrix: &Matrix<S>) -> Vec<u64> {
    matrix.iter().flatten().map(|v| v.as_f64().to_bits()).collect()
}

impl<S: Scalar> EmpiricalDistribution<S> {
    pub fn from_samples(samples: Vec<Matrix<S>>) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| Error::invalid("samples", "at least one sample is required"))?;
        let (n, d) = (first.len(), first.first().map_or(0, Vec::len));
        if n == 0 || d == 0 {
            return Err(Error::invalid("samples", "matrices need at least one bidder and state"));
        }
        let mut out = Self {
            n,
            d,
            matrices: Vec::new(),
            counts: Vec::new(),
            total: 0,
        };
        let mut index = HashMap::new();
        for mat in samples {
            if mat.len() != n {
                return Err(Error::invalid(
                    "samples",
                    format!("sample has {} bidders, expected {n}", mat.len()),
                ));
            }
            validate_valuations(&mat, d, "samples")?;
            out.insert(&mut index, mat, 1);
        }
        Ok(out)
    }

    /// Draws `s` samples; sample `t` uses a generator seeded by `seed` on
    /// stream `t`, so the result does not depend on the thread count.
    pub fn from_oracle<O: ValuationOracle<S> + ?Sized>(oracle: &O, s: usize, seed: u64) -> Result<Self> {
        if s == 0 {
            return Err(Error::invalid("samples", "at least one sample is required"));
        }
        let (n, d) = (oracle.n(), oracle.d());
        let chunks: Vec<Vec<(Matrix<S>, u64)>> = (0..s.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                let mut local: Vec<(Matrix<S>, u64)> = Vec::new();
                let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
                for t in c * CHUNK..((c + 1) * CHUNK).min(s) {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(t as u64);
                    let mat = oracle.sample(&mut rng);
                    let key = key_of(&mat);
                    match index.get(&key) {
                        Some(&k) => local[k].1 += 1,
                        None => {
                            index.insert(key, local.len());
                            local.push((mat, 1));
                        }
                    }
                }
                local
            })
            .collect();
        let mut out = Self {
            n,
            d,
            matrices: Vec::new(),
            counts: Vec::new(),
            total: 0,
        };
        let mut index = HashMap::new();
        for (mat, count) in chunks.into_iter().flatten() {
            if mat.len() != n {
                return Err(Error::invalid("oracle", "sample has the wrong number of bidders"));
            }
            validate_valuations(&mat, d, "oracle sample")?;
            out.insert(&mut index, mat, count);
        }
        Ok(out)
    }

    fn insert(&mut self, index: &mut HashMap<Vec<u64>, usize>, mat: Matrix<S>, count: u64) {
        let key = key_of(&mat);
        match index.get(&key) {
            Some(&k) => self.counts[k] += count,
            None => {
                index.insert(key, self.matrices.len());
                self.matrices.push(mat);
                self.counts.push(count);
            }
        }
        self.total += count;
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Number of samples `s`.
    pub fn len(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn distinct(&self) -> usize {
        self.matrices.len()
    }

    pub fn matrices(&self) -> &[Matrix<S>] {
        &self.matrices
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// `P{V = matrices[k]}`.
    pub fn probability(&self, k: usize) -> S {
        S::lit(self.counts[k] as f64 / self.total as f64)
    }

    /// Smallest valuation entry over all samples.
    pub fn min_entry(&self) -> S {
        self.matrices
            .iter()
            .flatten()
            .flatten()
            .copied()
            .fold(S::infinity(), S::min)
    }
}

/// `(1/s) Σ_t Rev(V_t, ξ)`.
pub fn empirical_revenue<S: Scalar>(
    emp: &EmpiricalDistribution<S>,
    lambdas: &[S],
    xi: &Posterior<S>,
) -> Result<S> {
    check_shape(emp, lambdas, xi.dim())?;
    Ok(EmpiricalRevenue::new(emp, lambdas).eval(xi.probs()))
}

pub(crate) fn check_shape<S: Scalar>(
    emp: &EmpiricalDistribution<S>,
    lambdas: &[S],
    d: usize,
) -> Result<()> {
    if emp.is_empty() {
        return Err(Error::invalid("samples", "empirical distribution is empty"));
    }
    if d != emp.d() {
        return Err(Error::dims("posterior", emp.d(), d));
    }
    crate::auction::validate_lambdas(lambdas)?;
    if lambdas.len() > emp.n() {
        return Err(Error::invalid(
            "m",
            format!("{} slots exceed the {} bidders", lambdas.len(), emp.n()),
        ));
    }
    Ok(())
}

/// Reusable evaluator of the empirical revenue.
#[derive(Clone)]
pub(crate) struct EmpiricalRevenue<'a, S> {
    evaluators: Vec<RevenueEvaluator<'a, S>>,
    weights: Vec<S>,
}

impl<'a, S: Scalar> EmpiricalRevenue<'a, S> {
    pub fn new(emp: &'a EmpiricalDistribution<S>, lambdas: &[S]) -> Self {
        Self {
            evaluators: emp
                .matrices
                .iter()
                .map(|m| RevenueEvaluator::from_parts(m, lambdas))
                .collect(),
            weights: (0..emp.distinct()).map(|k| emp.probability(k)).collect(),
        }
    }

    pub fn eval(&mut self, xi: &[S]) -> S {
        self.evaluators
            .iter_mut()
            .zip(&self.weights)
            .map(|(e, &w)| w * e.eval(xi))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rv::oracle::FiniteSupport;
    use approx::assert_abs_diff_eq;

    fn va() -> Matrix<f64> {
        vec![vec![1.0, 0.0], vec![0.0, 1.0]]
    }

    fn vb() -> Matrix<f64> {
        vec![vec![0.5, 0.5], vec![0.2, 0.2]]
    }

    #[test]
    fn averages_revenue() {
        let xi = Posterior::new(vec![0.3, 0.7]).unwrap();
        let l = [1.0];
        let single = EmpiricalDistribution::from_samples(vec![va()]).unwrap();
        let twice = EmpiricalDistribution::from_samples(vec![va(), va()]).unwrap();
        assert_eq!(twice.distinct(), 1);
        assert_eq!(twice.len(), 2);
        let r1 = empirical_revenue(&single, &l, &xi).unwrap();
        assert_abs_diff_eq!(r1, 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(empirical_revenue(&twice, &l, &xi).unwrap(), r1, epsilon = 1e-15);
        let mixed = EmpiricalDistribution::from_samples(vec![va(), vb()]).unwrap();
        assert_abs_diff_eq!(
            empirical_revenue(&mixed, &l, &xi).unwrap(),
            (0.3 + 0.2) / 2.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn sampling_is_deterministic_and_counts_add_up() {
        let o = FiniteSupport::new(vec![va(), vb()], vec![0.5, 0.5]).unwrap();
        let a = EmpiricalDistribution::from_oracle(&o, 10_000, 9).unwrap();
        let b = EmpiricalDistribution::from_oracle(&o, 10_000, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.distinct(), 2);
        assert_eq!(a.counts().iter().sum::<u64>(), 10_000);
        let c = EmpiricalDistribution::from_oracle(&o, 10_000, 10).unwrap();
        assert_ne!(a.counts(), c.counts());
    }

    #[test]
    fn shape_errors() {
        assert!(EmpiricalDistribution::<f64>::from_samples(vec![]).is_err());
        let emp = EmpiricalDistribution::from_samples(vec![va()]).unwrap();
        let xi = Posterior::new(vec![1.0]).unwrap();
        assert!(empirical_revenue(&emp, &[1.0], &xi).is_err());
        let xi = Posterior::new(vec![0.5, 0.5]).unwrap();
        assert!(empirical_revenue(&emp, &[1.0, 1.0, 1.0], &xi).is_err());
    }
}
