//! All six metrics against a naive double loop over explicit distances.

use genmetrics::metrics::{coverage, density, improved_precision, improved_recall, p_precision, p_recall};
use genmetrics::{evaluate, ChunkPlan, Family, MetricConfig};

mod common;
use common::{instance, naive, rel_err, Instance};

fn all_configs(k: usize, a: f64, plan: ChunkPlan) -> Vec<MetricConfig> {
    Family::ALL
        .iter()
        .map(|&f| MetricConfig::new(f).with_k(k).with_a(a).with_plan(plan))
        .collect()
}

#[test]
fn six_metrics_match_naive_reference() {
    let mut worst = 0.0f64;
    for seed in 0..200 {
        let Instance { real, fake, k, a } = instance(seed);
        let want = naive(&real, &fake, k, a);
        let cfg = MetricConfig::new(Family::Ipr).with_k(k).with_a(a);
        let got = [
            (improved_precision(&real, &fake, &cfg).unwrap(), want.ip, "ip"),
            (improved_recall(&real, &fake, &cfg).unwrap(), want.ir, "ir"),
            (density(&real, &fake, &cfg).unwrap(), want.density, "density"),
            (coverage(&real, &fake, &cfg).unwrap(), want.coverage, "coverage"),
            (p_precision(&real, &fake, &cfg).unwrap(), want.pp, "pp"),
            (p_recall(&real, &fake, &cfg).unwrap(), want.pr, "pr"),
        ];
        for (g, w, name) in got {
            let e = rel_err(g, w);
            worst = worst.max(e);
            assert!(e <= 1e-10, "seed {seed} {name}: {g} vs {w} (k={k})");
        }
        let fused = evaluate(&real, &fake, &all_configs(k, a, ChunkPlan::default())).unwrap();
        for (v, (fid, div)) in fused.iter().zip([(want.ip, want.ir), (want.density, want.coverage), (want.pp, want.pr)]) {
            assert!(rel_err(v.fidelity, fid) <= 1e-10, "seed {seed} fused {:?}", v.family);
            assert!(rel_err(v.diversity, div) <= 1e-10, "seed {seed} fused {:?}", v.family);
        }
    }
    println!("worst relative error over 200 instances: {worst:e}");
}

#[test]
fn chunking_and_threads_do_not_change_results() {
    let plans = [
        ChunkPlan::default(),
        ChunkPlan::unchunked(),
        ChunkPlan::new(1, 1).unwrap(),
        ChunkPlan::new(7, 5).unwrap(),
        ChunkPlan::new(64, 3).unwrap(),
    ];
    let pools: Vec<rayon::ThreadPool> = [1, 4]
        .iter()
        .map(|&t| rayon::ThreadPoolBuilder::new().num_threads(t).build().unwrap())
        .collect();
    for seed in 0..40 {
        let Instance { real, fake, k, a } = instance(1000 + seed);
        let reference = evaluate(&real, &fake, &all_configs(k, a, ChunkPlan::unchunked())).unwrap();
        for plan in plans {
            for pool in &pools {
                let got = pool.install(|| evaluate(&real, &fake, &all_configs(k, a, plan)).unwrap());
                for (g, r) in got.iter().zip(&reference) {
                    assert!((g.fidelity - r.fidelity).abs() <= 1e-9, "seed {seed} {plan:?}");
                    assert!((g.diversity - r.diversity).abs() <= 1e-9, "seed {seed} {plan:?}");
                }
            }
        }
    }
}
