#![allow(dead_code)]

use adsignal::{AuctionInstance, Posterior, SingleMindedStructure};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn simplex(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..d).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// Any point of the simplex, including faces.
pub fn posterior(rng: &mut ChaCha8Rng, d: usize) -> Posterior {
    let raw: Vec<f64> = (0..d)
        .map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen::<f64>() })
        .collect();
    if raw.iter().sum::<f64>() == 0.0 {
        return Posterior::degenerate(d, rng.gen_range(0..d));
    }
    Posterior::normalized(raw).unwrap()
}

pub fn lambdas(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let mut l: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();
    l.sort_by(|a, b| b.total_cmp(a));
    l
}

/// Random instance; `m` is clamped to `n`.
pub fn instance(seed: u64, n: usize, m: usize, d: usize) -> AuctionInstance {
    let m = m.min(n);
    let mut r = rng(seed);
    let lambdas = lambdas(&mut r, m);
    let prior = simplex(&mut r, d);
    let v = (0..n).map(|_| (0..d).map(|_| r.gen::<f64>()).collect()).collect();
    AuctionInstance::new(lambdas, prior, v).unwrap()
}

pub fn single_minded(seed: u64, n: usize, m: usize, d: usize) -> (AuctionInstance, SingleMindedStructure) {
    let m = m.min(n);
    let mut r = rng(seed);
    let lambdas = lambdas(&mut r, m);
    let prior = simplex(&mut r, d);
    let groups = (0..n).map(|_| r.gen_range(0..d)).collect();
    let deltas = (0..d).map(|_| r.gen_range(0.05..=1.0)).collect();
    let sm = SingleMindedStructure::new(groups, deltas).unwrap();
    let inst = sm.instance(lambdas, prior).unwrap();
    (inst, sm)
}

/// `C(a, b)` by the multiplicative formula.
pub fn choose(a: u64, b: u64) -> u64 {
    (1..=b).fold(1u64, |acc, i| acc * (a - b + i) / i)
}
