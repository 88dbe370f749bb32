//! End-to-end acceptance checks. Run with `--nocapture` to see the report.

mod common;

use std::collections::HashSet;
use std::time::{Duration, Instant};

use common::{close, monte_carlo_commute, oracle_gin, oracle_target_a, oracle_target_b};
use prior_rewire::cayley::{build_cayley, cayley_size};
use prior_rewire::harness::{resolve_workers, run_sweep, summarize, ExperimentConfig, SummaryRow};
use prior_rewire::nn::kernels::BnRunning;
use prior_rewire::nn::{loss_mse, GinModel, GraphBatch, Mode, ModelShape};
use prior_rewire::rewire::{
    aligned_cayley_placement, captured_pairs, random_cayley_placement, rewirer_base_only, RewirePlan, Rewirer,
};
use prior_rewire::spectral::{average_commute_time, commute_time, diameter, spectral_gap};
use prior_rewire::synthdata::{gen_dataset, procedural_topology, DatasetConfig, DatasetKind};
use prior_rewire::{Graph, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    id: u32,
    pass: bool,
    detail: String,
    elapsed: Duration,
}

fn check(id: u32, limit: Duration, f: impl FnOnce() -> (bool, String)) -> Outcome {
    let start = Instant::now();
    let (ok, detail) = f();
    let elapsed = start.elapsed();
    let in_time = elapsed <= limit;
    let detail = if in_time { detail } else { format!("{detail}; over time limit {limit:?}") };
    let o = Outcome {
        id,
        pass: ok && in_time,
        detail,
        elapsed,
    };
    println!(
        "criterion {:>2}: {} ({:.1}s) {}",
        o.id,
        if o.pass { "PASS" } else { "FAIL" },
        o.elapsed.as_secs_f64(),
        o.detail
    );
    o
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn enumerate_sl2(n: u64) -> u64 {
    let mut count = 0;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    if (a * d + n * n - b * c) % n == 1 % n {
                        count += 1;
                    }
                }
            }
        }
    }
    count
}

fn c1_size_formula() -> (bool, String) {
    let mut ok = true;
    let mut got = Vec::new();
    for n in 2..=8u32 {
        let formula = cayley_size(n as u64).unwrap() as u64;
        let brute = enumerate_sl2(n as u64);
        ok &= formula == brute;
        got.push(format!("{n}:{formula}/{brute}"));
    }
    ok &= (2..=5u64).map(|n| cayley_size(n).unwrap()).eq([6, 24, 48, 120]);
    (ok, got.join(" "))
}

fn c2_expanders() -> (bool, String) {
    let mut ok = true;
    let mut worst_gap = f64::INFINITY;
    for n in 3..=8u32 {
        let g = build_cayley(n).unwrap().graph;
        let v = g.num_nodes();
        let regular = (0..v).all(|u| g.neighbours(u).len() == 4);
        let gap = spectral_gap(&g);
        let diam = diameter(&g).unwrap();
        worst_gap = worst_gap.min(gap);
        ok &= g.is_connected() && regular && gap > 0.0 && (diam as f64) <= 4.0 * (v as f64).ln();
    }
    (ok, format!("min spectral gap {worst_gap:.4}"))
}

fn c3_commute_monte_carlo() -> (bool, String) {
    let cases = [
        ("K2", Graph::complete(2), 0, 1),
        ("3-path", Graph::path(3), 0, 2),
        ("4-cycle", Graph::cycle(4), 0, 2),
        ("5-star", Graph::new(5, [(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap(), 1, 2),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, (name, g, u, v)) in cases.iter().enumerate() {
        let exact = commute_time(g, *u, *v).unwrap();
        let mc = monte_carlo_commute(g, *u, *v, 100_000, 17 + i as u64);
        let rel = (mc - exact).abs() / exact;
        ok &= rel < 0.05;
        parts.push(format!("{name} {exact:.2} vs {mc:.2}"));
    }
    (ok, parts.join(", "))
}

fn c4_average_commute() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut wins = 0;
    for i in 0..50u64 {
        let g = procedural_topology(25, &mut rng);
        let plan = Rewirer::Cayley.plan(&g, 5, 0, i).unwrap();
        if average_commute_time(&plan.rewired).unwrap() < average_commute_time(&g).unwrap() {
            wins += 1;
        }
    }
    (wins >= 45, format!("{wins}/50 graphs improved"))
}

fn c5_alignment() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut aligned_sum, mut random_sum) = (0.0, 0.0);
    for _ in 0..50 {
        let n = rng.gen_range(20..=30);
        let g = procedural_topology(n, &mut rng);
        let pairs = g.pairs_at_distance(5).unwrap();
        aligned_sum += captured_pairs(&aligned_cayley_placement(&g, 5).unwrap(), &pairs) as f64;
        let mut total = 0usize;
        for seed in 0..100 {
            total += captured_pairs(&random_cayley_placement(n, rng.gen::<u64>() ^ seed).unwrap(), &pairs);
        }
        random_sum += total as f64 / 100.0;
    }
    let (a, r) = (aligned_sum / 50.0, random_sum / 50.0);
    (a > r, format!("aligned {a:.2} vs random {r:.2} pairs per graph"))
}

fn c6_targets() -> (bool, String) {
    let mut checked = 0;
    let mut ok = true;
    for kind in [DatasetKind::A, DatasetKind::B] {
        let mut cfg = DatasetConfig::defaults_for(kind);
        cfg.train_count = 900;
        cfg.eval_count = 100;
        cfg.seed = 6;
        cfg.c3 = 0.3;
        let data = gen_dataset(&cfg).unwrap();
        for s in data.train.iter().chain(&data.eval) {
            let x = s.values();
            let m = &s.meta;
            let want = match kind {
                DatasetKind::A => oracle_target_a(&s.graph, &x, m.c1, m.c2, m.c3, m.d),
                DatasetKind::B => oracle_target_b(&s.graph, &x, m.c1, m.c2),
            };
            ok &= close(s.target, want, 1e-12, 0.0);
            checked += 1;
        }
    }
    (ok && checked == 2000, format!("{checked} samples"))
}

fn c7_gradients() -> (bool, String) {
    let shape = ModelShape::new(1, 4, 2);
    let mut model = GinModel::new(shape, 7);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for p in model.params_mut() {
        *p += rng.gen_range(-0.3..0.3);
    }
    let g = Graph::new(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (1, 4)]).unwrap();
    let plan = Rewirer::Cayley.plan(&g, 2, 0, 1).unwrap();
    let x = Matrix::from_vec(6, 1, (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect());
    let batch = GraphBatch::from_parts(&[(&x, &plan)]).unwrap();
    let target = [0.4];
    let loss = |m: &GinModel| loss_mse(&m.forward(&batch, Mode::Train).unwrap().0, &target).unwrap();
    let (_, grads, _) = model.loss_and_grad(&batch, &target).unwrap();
    let h = 1e-5;
    let mut worst = 0.0f64;
    for i in 0..grads.len() {
        let mut plus = model.clone();
        plus.params_mut()[i] += h;
        let mut minus = model.clone();
        minus.params_mut()[i] -= h;
        let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
        let rel = (fd - grads[i]).abs() / fd.abs().max(grads[i].abs()).max(1e-8);
        if (fd - grads[i]).abs() > 1e-10 {
            worst = worst.max(rel);
        }
    }
    (worst <= 1e-4, format!("{} params, worst relative error {worst:.2e}", grads.len()))
}

fn c8_plain_gin() -> (bool, String) {
    let shape = ModelShape::new(2, 8, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for inst in 0..100u64 {
        let mut m = GinModel::new(shape, inst);
        for p in m.params_mut() {
            *p += rng.gen_range(-0.2..0.2);
        }
        let running = (0..shape.layers)
            .map(|_| BnRunning {
                mean: (0..shape.hidden).map(|_| rng.gen_range(-0.5..0.5)).collect(),
                var: (0..shape.hidden).map(|_| rng.gen_range(0.5..2.0)).collect(),
            })
            .collect();
        let m = GinModel::from_parts(shape, m.params().to_vec(), running).unwrap();
        let n = rng.gen_range(2..20);
        let g = procedural_topology(n, &mut rng);
        let plan: RewirePlan = rewirer_base_only(&g, shape.layers);
        let x = Matrix::from_vec(n, 2, (0..2 * n).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let batch = GraphBatch::from_parts(&[(&x, &plan)]).unwrap();
        let got = m.forward(&batch, Mode::Eval).unwrap().0[0];
        let want = oracle_gin(&m, &[(&x, &plan)], false)[0];
        worst = worst.max((got - want).abs() / want.abs().max(1.0));
    }
    (worst <= 1e-10, format!("worst relative difference {worst:.2e}"))
}

const DESK_REGIME: &str = "\
scale = 0.2
epoch_scale = 0.5
seeds = 0, 1, 2
standardize_targets = true
";

fn pair_sweep_config() -> ExperimentConfig {
    let text = format!("{DESK_REGIME}c1 = 1\nd = 5\nratios = 0.1\nc3_values = 0.2\nrewirers = base-graph-only, cayley, aligned-cayley\n");
    ExperimentConfig::parse(&text, DatasetKind::A).unwrap()
}

fn cluster_sweep_config() -> ExperimentConfig {
    let text = format!("{DESK_REGIME}ratios = 100\nrewirers = base-graph-only, cayley-clusters, fully-connected\n");
    ExperimentConfig::parse(&text, DatasetKind::B).unwrap()
}

fn row<'a>(rows: &'a [SummaryRow], r: Rewirer) -> &'a SummaryRow {
    rows.iter().find(|s| s.rewirer == r).unwrap()
}

fn c9_pair_sweep(dir: &std::path::Path) -> (bool, String) {
    let cfg = pair_sweep_config();
    assert_eq!(cfg.scaled_schedule().total_epochs, 100);
    let result = run_sweep(&cfg, resolve_workers(None), Some(dir)).unwrap();
    let s = summarize(&result).unwrap();
    let (b, c, a) = (
        row(&s, Rewirer::BaseGraphOnly),
        row(&s, Rewirer::Cayley),
        row(&s, Rewirer::AlignedCayley),
    );
    let ok = a.mean_mse < c.mean_mse && c.mean_mse < b.mean_mse && a.mean_ratio <= 0.8;
    (
        ok,
        format!(
            "mean mse base {:.4} cayley {:.4} aligned {:.4}; ratios cayley {:.3} aligned {:.3}",
            b.mean_mse, c.mean_mse, a.mean_mse, c.mean_ratio, a.mean_ratio
        ),
    )
}

fn c10_cluster_sweep() -> (bool, String) {
    let cfg = cluster_sweep_config();
    let result = run_sweep(&cfg, resolve_workers(None), None).unwrap();
    let s = summarize(&result).unwrap();
    let (cc, fc) = (row(&s, Rewirer::CayleyClusters), row(&s, Rewirer::FullyConnected));
    (
        cc.mean_ratio < 1.0 && fc.mean_ratio > 3.0,
        format!(
            "cayley-clusters ratio {:.3} (sd {:.3}), fully-connected ratio {:.3} (sd {:.3})",
            cc.mean_ratio, cc.sd_ratio, fc.mean_ratio, fc.sd_ratio
        ),
    )
}

fn c11_determinism(first: &std::path::Path, second: &std::path::Path) -> (bool, String) {
    run_sweep(&pair_sweep_config(), resolve_workers(None), Some(second)).unwrap();
    let a = std::fs::read(first.join("results.csv")).unwrap();
    let b = std::fs::read(second.join("results.csv")).unwrap();
    (a == b, format!("results.csv {} bytes, identical: {}", a.len(), a == b))
}

#[test]
fn acceptance() {
    let dirs = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let outcomes = vec![
        check(1, secs(1), c1_size_formula),
        check(2, secs(30), c2_expanders),
        check(3, secs(60), c3_commute_monte_carlo),
        check(4, secs(120), c4_average_commute),
        check(5, secs(300), c5_alignment),
        check(6, secs(60), c6_targets),
        check(7, secs(10), c7_gradients),
        check(8, secs(600), c8_plain_gin),
        check(9, secs(45 * 60), || c9_pair_sweep(dirs.0.path())),
        check(10, secs(45 * 60), c10_cluster_sweep),
        check(11, secs(45 * 60), || c11_determinism(dirs.0.path(), dirs.1.path())),
    ];
    let failed: HashSet<u32> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    let passed = outcomes.len() - failed.len();
    println!("acceptance: {passed}/{} criteria passed", outcomes.len());
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
