//! Seeded random instance generators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CliError, CliResult};
use crate::instance_file::{DistributionSpec, InstanceFile, SingleMindedSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenKind {
    General,
    SingleMinded,
    FiniteDist,
}

impl std::str::FromStr for GenKind {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "general" => Ok(GenKind::General),
            "single-minded" => Ok(GenKind::SingleMinded),
            "finite-dist" => Ok(GenKind::FiniteDist),
            other => Err(CliError::Validation(format!(
                "invalid kind: {other:?}; expected general, single-minded or finite-dist"
            ))),
        }
    }
}

/// Sizes of a generated instance. `k` is the support size of a
/// finite distribution and is ignored by the other kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenSizes {
    pub n: usize,
    pub m: usize,
    pub d: usize,
    pub k: usize,
}

impl GenSizes {
    fn check(&self, kind: GenKind) -> CliResult<()> {
        for (name, v) in [("n", self.n), ("m", self.m), ("d", self.d)] {
            if v == 0 {
                return Err(CliError::Validation(format!("invalid {name}: must be positive")));
            }
        }
        if self.m > self.n {
            return Err(CliError::Validation(format!(
                "invalid m: {} slots exceed the {} bidders",
                self.m, self.n
            )));
        }
        if kind == GenKind::FiniteDist && self.k == 0 {
            return Err(CliError::Validation("invalid k: must be positive".into()));
        }
        if kind == GenKind::SingleMinded && self.d > 63 {
            return Err(CliError::Validation("invalid d: single-minded instances support at most 63 states".into()));
        }
        Ok(())
    }
}

pub fn generate(kind: GenKind, sizes: GenSizes, seed: u64) -> CliResult<InstanceFile> {
    sizes.check(kind)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let GenSizes { n, m, d, k } = sizes;
    let lambdas = random_lambdas(&mut rng, m);
    let prior = random_simplex(&mut rng, d);
    let file = match kind {
        GenKind::General => InstanceFile {
            m,
            lambdas,
            prior,
            valuations: Some(random_matrix(&mut rng, n, d)),
            single_minded: None,
            distribution: None,
        },
        GenKind::SingleMinded => {
            let groups: Vec<usize> = (0..n).map(|_| rng.gen_range(0..d)).collect();
            let deltas: Vec<f64> = (0..d).map(|_| rng.gen_range(0.05..=1.0)).collect();
            let valuations = groups
                .iter()
                .map(|&g| (0..d).map(|t| if t == g { deltas[t] } else { 0.0 }).collect())
                .collect();
            InstanceFile {
                m,
                lambdas,
                prior,
                valuations: Some(valuations),
                single_minded: Some(SingleMindedSpec { groups, deltas }),
                distribution: None,
            }
        }
        GenKind::FiniteDist => {
            let matrices = (0..k).map(|_| random_matrix(&mut rng, n, d)).collect();
            InstanceFile {
                m,
                lambdas,
                prior,
                valuations: None,
                single_minded: None,
                distribution: Some(DistributionSpec {
                    matrices,
                    probs: random_simplex(&mut rng, k),
                }),
            }
        }
    };
    file.validate()?;
    Ok(file)
}

/// Non-increasing rates in `(0, 1]` with the first slot always clicked.
fn random_lambdas(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let mut l: Vec<f64> = (0..m).map(|j| if j == 0 { 1.0 } else { rng.gen_range(0.1..1.0) }).collect();
    l[1..].sort_by(|a, b| b.total_cmp(a));
    l
}

fn random_simplex(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..d).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.gen::<f64>()).collect()).collect()
}
