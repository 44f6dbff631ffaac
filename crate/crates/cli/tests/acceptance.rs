//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use adsignal::kv_exact::{merge_same_region, solve_fixed_d, solve_fixed_m};
use adsignal::oracle::{exact_sm_opt, exact_sm_separation, grid_opt, sm_vertices};
use adsignal::rv::{
    enumerate_q_uniform, required_samples, solve_rv, FiniteSupport, FixedValuations, MarketShape,
    Regime, RvOptions,
};
use adsignal::single_minded::{dp_separation, solve_single_minded, RelaxationConfig};
use adsignal::{consistency_residual, scheme_revenue, AuctionInstance, Posterior, SingleMindedStructure};
use adsignal_cli::gen::{generate, GenKind, GenSizes};
use adsignal_cli::{CliError, InstanceFile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion<'a> = (&'static str, Duration, Box<dyn Fn() -> Check + 'a>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn general(seed: u64, n: usize, m: usize, d: usize) -> AuctionInstance {
    let sizes = GenSizes { n, m: m.min(n), d, k: 0 };
    generate(GenKind::General, sizes, seed).unwrap().instance().unwrap()
}

fn single_minded(seed: u64, n: usize, m: usize, d: usize) -> (AuctionInstance, SingleMindedStructure) {
    let sizes = GenSizes { n, m: m.min(n), d, k: 0 };
    let file = generate(GenKind::SingleMinded, sizes, seed).unwrap();
    (file.instance().unwrap(), file.single_minded().unwrap().unwrap())
}

fn criterion1_instances() -> Vec<AuctionInstance> {
    (0..200u64)
        .map(|seed| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            let n = r.gen_range(1..=5);
            let m = r.gen_range(1..=2);
            let d = r.gen_range(1..=3);
            general(1000 + seed, n, m, d)
        })
        .collect()
}

fn cross_solver(instances: &[AuctionInstance]) -> Check {
    let mut worst_gap = 0.0f64;
    let mut worst_floor = f64::INFINITY;
    for (k, inst) in instances.iter().enumerate() {
        let a = solve_fixed_m(inst).map_err(|e| format!("instance {k}: {e}"))?.value;
        let b = solve_fixed_d(inst).map_err(|e| format!("instance {k}: {e}"))?.value;
        let floor = grid_opt(inst, 100).map_err(|e| format!("instance {k}: {e}"))?;
        worst_gap = worst_gap.max((a - b).abs());
        worst_floor = worst_floor.min(a.min(b) - floor);
        ensure((a - b).abs() <= 1e-6, || format!("instance {k}: fixed-m {a} vs fixed-d {b}"))?;
        ensure(a.min(b) >= floor - 1e-4, || format!("instance {k}: below grid optimum {floor}"))?;
    }
    Ok(format!(
        "{} instances, max |fixed-m − fixed-d| = {worst_gap:.1e}, min margin over grid = {worst_floor:.1e}",
        instances.len()
    ))
}

fn merge_regions(instances: &[AuctionInstance]) -> Check {
    let mut worst = 0.0f64;
    for (k, inst) in instances.iter().enumerate() {
        let report = solve_fixed_m(inst).map_err(|e| e.to_string())?;
        let merged = merge_same_region(inst, &report.scheme).map_err(|e| e.to_string())?;
        let before = scheme_revenue(inst, &report.scheme).map_err(|e| e.to_string())?;
        let after = scheme_revenue(inst, &merged).map_err(|e| e.to_string())?;
        worst = worst.max((before - after).abs());
        ensure((before - after).abs() <= 1e-9, || format!("instance {k}: {before} -> {after}"))?;
    }
    Ok(format!("max revenue change {worst:.1e}"))
}

fn vertex_characterization() -> Check {
    let mut vertices = 0;
    for seed in 0..50u64 {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let d = r.gen_range(1..=6);
        let n = r.gen_range(1..=6);
        let m = r.gen_range(1..=2);
        let (inst, sm) = single_minded(2000 + seed, n, m, d);
        let deltas = sm.deltas();
        for xi in sm_vertices(&sm).map_err(|e| e.to_string())? {
            vertices += 1;
            let support: Vec<usize> = (0..d).filter(|&t| xi.probs()[t] > 0.0).collect();
            ensure(!support.is_empty(), || format!("seed {seed}: empty support"))?;
            let total: f64 = xi.probs().iter().sum();
            ensure((total - 1.0).abs() <= 1e-12, || format!("seed {seed}: mass {total}"))?;
            let level = deltas[support[0]] * xi.probs()[support[0]];
            for &t in &support {
                let v = deltas[t] * xi.probs()[t];
                ensure((v - level).abs() <= 1e-12, || format!("seed {seed}: unequal δξ {v} vs {level}"))?;
            }
        }
        let opt = exact_sm_opt(&inst, &sm).map_err(|e| e.to_string())?;
        let grid = grid_opt(&inst, 200).map_err(|e| e.to_string())?;
        let slack = (inst.m() * d) as f64 / 200.0 + 1e-6;
        ensure(opt >= grid - slack, || format!("seed {seed}: vertex optimum {opt} < grid {grid}"))?;
    }
    Ok(format!("50 instances, {vertices} vertices checked"))
}

fn dp_oracle() -> Check {
    let mut worst = f64::INFINITY;
    for seed in 0..100u64 {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let d = r.gen_range(1..=10);
        let n = r.gen_range(1..=10);
        let m = r.gen_range(1..=3);
        let (inst, sm) = single_minded(3000 + seed, n, m, d);
        let beta = r.gen_range(0.1..=5.0);
        let y: Vec<f64> = (0..d).map(|_| -r.gen_range(0.0..=beta)).collect();
        let (_, exact) = exact_sm_separation(&inst, &sm, &y).map_err(|e| e.to_string())?;
        for lambda_acc in [0.1, 0.05] {
            let config = RelaxationConfig::for_oracle(lambda_acc, beta, d, inst.m()).map_err(|e| e.to_string())?;
            let sep = dp_separation(&inst, &sm, &y, &config).map_err(|e| e.to_string())?;
            worst = worst.min(sep.value - (exact - lambda_acc));
            ensure(sep.value >= exact - lambda_acc, || {
                format!("seed {seed}, λ = {lambda_acc}: dp {} vs exact {exact}", sep.value)
            })?;
        }
    }
    Ok(format!("100 instances, min slack {worst:.3e}"))
}

fn fptas() -> Check {
    let mut worst = f64::INFINITY;
    for seed in 0..30u64 {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let d = r.gen_range(1..=3);
        let n = r.gen_range(1..=4);
        let m = r.gen_range(1..=2);
        let (inst, sm) = single_minded(4000 + seed, n, m, d);
        let report = solve_single_minded(&inst, &sm, 0.05).map_err(|e| format!("seed {seed}: {e}"))?;
        let opt = exact_sm_opt(&inst, &sm).map_err(|e| e.to_string())?;
        let residual = consistency_residual(&report.scheme, inst.prior()).map_err(|e| e.to_string())?;
        worst = worst.min(report.value - (opt - 0.05));
        ensure(report.value >= opt - 0.05, || format!("seed {seed}: {} vs optimum {opt}", report.value))?;
        ensure(residual <= 1e-7, || format!("seed {seed}: residual {residual:e}"))?;
    }
    Ok(format!("30 instances, min slack {worst:.3e}"))
}

fn sample_schedule() -> Check {
    let table: [(f64, f64, f64, usize); 20] = [
        (0.01, 0.1, 1.0, 1),
        (0.01, 0.1, 1.0, 2),
        (0.05, 0.05, 0.5, 3),
        (0.1, 0.2, 1.0, 1),
        (0.001, 0.01, 1.0, 1),
        (0.5, 0.5, 1.0, 1),
        (1e-6, 0.05, 0.8, 2),
        (1e-4, 0.3, 0.9, 4),
        (0.2, 0.15, 0.3, 5),
        (0.02, 0.07, 1.0, 3),
        (0.3, 0.01, 0.1, 1),
        (1e-9, 0.2, 1.0, 2),
        (0.07, 0.11, 0.75, 2),
        (0.9, 1.0, 1.0, 1),
        (5e-5, 0.025, 0.6, 3),
        (0.015, 0.4, 1.0, 6),
        (0.25, 0.05, 0.2, 2),
        (3e-3, 0.125, 0.5, 4),
        (0.6, 0.08, 1.0, 1),
        (1e-3, 0.333, 0.95, 10),
    ];
    for &(rho, tau, lambda1, m) in &table {
        let reference = (2.0 * (lambda1 * m as f64).powi(2) / tau.powi(2) * (2.0 / rho).ln()).ceil();
        let got = required_samples(rho, tau, lambda1, m).map_err(|e| e.to_string())?;
        ensure(got as f64 == reference.max(1.0), || {
            format!("(ρ={rho}, τ={tau}, λ1={lambda1}, m={m}): {got} vs {reference}")
        })?;
    }
    Ok("20 parameter triples".into())
}

fn rv_solver() -> Check {
    let mut worst = f64::INFINITY;
    for k in 0..10u64 {
        let mut r = ChaCha8Rng::seed_from_u64(k);
        let d = r.gen_range(1..=3);
        let n = r.gen_range(1..=4);
        let m = r.gen_range(1..=2);
        let inst = general(5000 + k, n, m, d);
        let exact = solve_fixed_d(&inst).map_err(|e| e.to_string())?.value;
        let oracle = FixedValuations::new(inst.valuations().to_vec()).map_err(|e| e.to_string())?;
        let shape = MarketShape::new(inst.lambdas().to_vec(), inst.prior().to_vec()).map_err(|e| e.to_string())?;
        let mut total = 0.0;
        for seed in 0..20 {
            let opts = RvOptions { seed, ..RvOptions::default() };
            total += solve_rv(&oracle, &shape, Regime::FixedD, 0.3, None, &opts)
                .map_err(|e| format!("instance {k}: {e}"))?
                .value;
        }
        let mean = total / 20.0;
        worst = worst.min(mean - (exact - 0.3));
        ensure(mean >= exact - 0.3, || format!("instance {k}: mean {mean} vs exact {exact}"))?;
    }
    // Bidder 0 always wins, so revenue is bidder 1's expected value and
    // every consistent scheme earns 0.6 μ_0 + 0.4 μ_1.
    let matrices = vec![
        vec![vec![1.0, 1.0, 1.0], vec![0.9, 0.1, 0.5]],
        vec![vec![1.0, 1.0, 1.0], vec![0.3, 0.7, 0.5]],
    ];
    let prior = vec![0.2, 0.5, 0.3];
    let analytic: f64 = 0.2 * 0.6 + 0.5 * 0.4 + 0.3 * 0.5;
    let oracle = FiniteSupport::new(matrices, vec![0.5, 0.5]).map_err(|e| e.to_string())?;
    let shape = MarketShape::new(vec![1.0], prior).map_err(|e| e.to_string())?;
    let mut total = 0.0;
    for seed in 0..20 {
        let opts = RvOptions { seed, ..RvOptions::default() };
        total += solve_rv(&oracle, &shape, Regime::FixedD, 0.3, None, &opts).map_err(|e| e.to_string())?.value;
    }
    let mean = total / 20.0;
    ensure((mean - analytic).abs() <= 0.05, || format!("two-point mean {mean} vs {analytic}"))?;
    Ok(format!("min slack {worst:.3e}; two-point mean {mean:.4} vs {analytic:.4}"))
}

fn random_posterior(r: &mut ChaCha8Rng, d: usize) -> Posterior {
    let raw: Vec<f64> = (0..d).map(|_| if r.gen_bool(0.1) { 0.0 } else { r.gen::<f64>() }).collect();
    if raw.iter().sum::<f64>() == 0.0 {
        return Posterior::uniform(d);
    }
    Posterior::normalized(raw).unwrap()
}

fn lipschitz() -> Check {
    let mut r = ChaCha8Rng::seed_from_u64(8);
    let mut violations = 0;
    for k in 0..10_000u64 {
        let (n, m, d) = (r.gen_range(1..=6), r.gen_range(1..=3), r.gen_range(1..=5));
        let inst = general(6000 + k % 100, n, m, d);
        let (a, b) = (random_posterior(&mut r, d), random_posterior(&mut r, d));
        let sup = a.probs().iter().zip(b.probs()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let gap = (inst.revenue(&a).unwrap() - inst.revenue(&b).unwrap()).abs();
        if gap > (inst.m() * d) as f64 * sup + 1e-12 {
            violations += 1;
        }
    }
    ensure(violations == 0, || format!("{violations} violations"))?;
    Ok("10000 pairs, 0 violations".into())
}

fn binomial(a: u64, b: u64) -> u64 {
    (1..=b).fold(1u64, |acc, i| acc * (a - b + i) / i)
}

fn grid_identities() -> Check {
    for d in 1..=6usize {
        for q in 1..=12usize {
            let got = enumerate_q_uniform::<f64>(d, q).map_err(|e| e.to_string())?.len() as u64;
            let want = binomial((q + d - 1) as u64, (d - 1) as u64);
            ensure(got == want, || format!("d={d} q={q}: {got} vs {want}"))?;
        }
    }
    for seed in 0..20u64 {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let inst = general(7000 + seed, r.gen_range(1..=5), r.gen_range(1..=2), r.gen_range(2..=4));
        let mut last = f64::NEG_INFINITY;
        for q in [10, 20, 40, 80] {
            let v = grid_opt(&inst, q).map_err(|e| e.to_string())?;
            ensure(v >= last - 1e-9, || format!("seed {seed}: q={q} gives {v} < {last}"))?;
            last = v;
        }
    }
    Ok("cardinalities for d ≤ 6, q ≤ 12; monotone on 20 instances".into())
}

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

fn adsignal(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_adsignal"))
        .env_remove("ADSIGNAL_SEED")
        .args(args)
        .output()
        .expect("binary runs")
}

fn cli_contract() -> Check {
    let dir = std::env::temp_dir().join(format!("adsignal-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let path = |name: &str| dir.join(name).to_string_lossy().into_owned();

    for name in ["minmax.json", "sm2.json", "dist.json"] {
        let file = InstanceFile::load(&example(name)).map_err(|e| e.to_string())?;
        let again = InstanceFile::parse(&file.to_json()).map_err(|e| e.to_string())?;
        ensure(file == again, || format!("{name} does not round-trip"))?;
    }

    let minmax = example("minmax.json").to_string_lossy().into_owned();
    let out = adsignal(&["solve", "fixed-d", &minmax]);
    ensure(out.status.code() == Some(0), || "fixed-d on minmax did not exit 0".into())?;
    let report: adsignal_cli::Report = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    ensure((report.value - 0.5).abs() <= 1e-6, || format!("minmax value {}", report.value))?;

    let sm2 = example("sm2.json").to_string_lossy().into_owned();
    let out = adsignal(&["solve", "single-minded", "--eps", "0.05", &sm2]);
    let report: adsignal_cli::Report = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    ensure(report.value >= 0.45, || format!("sm2 value {}", report.value))?;

    std::fs::write(
        path("bad.json"),
        r#"{"m": 1, "lambdas": [1.0], "prior": [0.5, 0.4], "valuations": [[1.0, 0.0], [0.0, 1.0]]}"#,
    )
    .map_err(|e| e.to_string())?;
    let out = adsignal(&["solve", "fixed-d", &path("bad.json")]);
    ensure(out.status.code() == Some(2), || "bad prior did not exit 2".into())?;
    ensure(String::from_utf8_lossy(&out.stderr).contains("prior"), || "message does not name prior".into())?;
    let out = adsignal(&["solve", "rv", "--eps", "0.05", "--q-cap", "10", &minmax]);
    ensure(out.status.code() == Some(3), || "size guard did not exit 3".into())?;
    let numerical = CliError::from(adsignal::Error::Numerical { stage: "simplex", reason: "stalled".into() });
    ensure(numerical.exit_code() == 4, || "numerical failure does not map to 4".into())?;

    for file in ["a.json", "b.json"] {
        let out = adsignal(&["gen", "general", "--n", "4", "--m", "2", "--d", "3", "--seed", "7", "-o", &path(file)]);
        ensure(out.status.success(), || "gen failed".into())?;
    }
    let (a, b) = (std::fs::read(path("a.json")), std::fs::read(path("b.json")));
    ensure(a.map_err(|e| e.to_string())? == b.map_err(|e| e.to_string())?, || "gen is not deterministic".into())?;

    let out = adsignal(&["bench", &example("suite.json").to_string_lossy()]);
    ensure(out.status.success(), || "bench failed".into())?;
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    let headers = reader.headers().map_err(|e| e.to_string())?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (gap, tol, ok) = (col("gap"), col("tolerance"), col("within_tolerance"));
    let (Some(gap), Some(tol), Some(ok)) = (gap, tol, ok) else {
        return Err("bench CSV lacks gap columns".into());
    };
    let mut rows = 0;
    for rec in reader.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        rows += 1;
        let g: f64 = rec[gap].parse().map_err(|_| format!("row {rows}: gap {:?}", &rec[gap]))?;
        let t: f64 = rec[tol].parse().map_err(|_| format!("row {rows}: tolerance"))?;
        ensure(g <= t && &rec[ok] == "true", || format!("row {rows}: gap {g} over {t}"))?;
    }
    ensure(rows >= 3, || format!("only {rows} bench rows"))?;
    std::fs::remove_dir_all(&dir).ok();
    Ok(format!("{rows} bench rows within tolerance"))
}

fn main() {
    let instances = criterion1_instances();
    let criteria: Vec<Criterion<'_>> = vec![
        ("cross-solver exactness", Duration::from_secs(300), Box::new(|| cross_solver(&instances))),
        ("same-region merge", Duration::from_secs(300), Box::new(|| merge_regions(&instances))),
        ("single-minded vertices", Duration::from_secs(600), Box::new(vertex_characterization)),
        ("dp separation oracle", Duration::from_secs(600), Box::new(dp_oracle)),
        ("single-minded approximation", Duration::from_secs(1200), Box::new(fptas)),
        ("sample schedule", Duration::from_secs(60), Box::new(sample_schedule)),
        ("random valuations", Duration::from_secs(600), Box::new(rv_solver)),
        ("lipschitz bound", Duration::from_secs(60), Box::new(lipschitz)),
        ("grid identities", Duration::from_secs(600), Box::new(grid_identities)),
        ("cli contract", Duration::from_secs(60), Box::new(cli_contract)),
    ];
    let mut failed = 0;
    for (k, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let result = result.and_then(|msg| {
            if elapsed <= *budget {
                Ok(msg)
            } else {
                Err(format!("{msg}; took {elapsed:.1?}, budget {budget:?}"))
            }
        });
        match result {
            Ok(msg) => println!("criterion {:>2} PASS {name}: {msg} ({elapsed:.2?})", k + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {msg} ({elapsed:.2?})", k + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
