//! Naive all-pairs reference for the six metrics, shared by test targets.
#![allow(dead_code)]

use genmetrics::synthlab::NormalStream;
use genmetrics::Embeddings;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn rows(set: &Embeddings) -> Vec<&[f64]> {
    (0..set.n()).map(|i| set.row(i)).collect()
}

fn kth_radii(set: &[&[f64]], k: usize) -> Vec<f64> {
    set.iter()
        .enumerate()
        .map(|(i, a)| {
            let mut d: Vec<f64> = set
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, b)| dist(a, b))
                .collect();
            d.sort_by(f64::total_cmp);
            d[k - 1]
        })
        .collect()
}

pub struct Naive {
    pub ip: f64,
    pub ir: f64,
    pub density: f64,
    pub coverage: f64,
    pub pp: f64,
    pub pr: f64,
}

fn precision(refs: &[&[f64]], queries: &[&[f64]], k: usize) -> f64 {
    let r = kth_radii(refs, k);
    let hits = queries
        .iter()
        .filter(|q| refs.iter().zip(&r).any(|(x, &rx)| dist(q, x) <= rx))
        .count();
    hits as f64 / queries.len() as f64
}

fn p_score(refs: &[&[f64]], queries: &[&[f64]], k: usize, a: f64) -> f64 {
    let nnd = kth_radii(refs, k);
    let big_r = a * nnd.iter().sum::<f64>() / nnd.len() as f64;
    let total: f64 = queries
        .iter()
        .map(|q| {
            let mut miss = 1.0;
            for x in refs {
                let d = dist(q, x);
                let p = if d == 0.0 {
                    1.0
                } else if d <= big_r {
                    1.0 - d / big_r
                } else {
                    0.0
                };
                miss *= 1.0 - p;
            }
            1.0 - miss
        })
        .sum();
    total / queries.len() as f64
}

pub fn naive(real: &Embeddings, fake: &Embeddings, k: usize, a: f64) -> Naive {
    let (x, y) = (rows(real), rows(fake));
    let rx = kth_radii(&x, k);
    let density = y
        .iter()
        .map(|q| x.iter().zip(&rx).filter(|(p, &r)| dist(q, p) <= r).count() as f64 / k as f64)
        .sum::<f64>()
        / y.len() as f64;
    let coverage = x
        .iter()
        .zip(&rx)
        .filter(|(p, &r)| y.iter().any(|q| dist(q, p) <= r))
        .count() as f64
        / x.len() as f64;
    Naive {
        ip: precision(&x, &y, k),
        ir: precision(&y, &x, k),
        density,
        coverage,
        pp: p_score(&x, &y, k, a),
        pr: p_score(&y, &x, k, a),
    }
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    if got == want {
        0.0
    } else {
        (got - want).abs() / want.abs().max(1e-300)
    }
}

pub struct Instance {
    pub real: Embeddings,
    pub fake: Embeddings,
    pub k: usize,
    pub a: f64,
}

/// Half of the instances live on a small integer lattice, so exact ties and
/// coincident points occur.
pub fn instance(seed: u64) -> Instance {
    let mut s = NormalStream::new(seed);
    let lattice = seed % 2 == 1;
    let dim = 1 + s.below(16);
    let n = 2 + s.below(127);
    let m = 2 + s.below(127);
    let k = 1 + s.below(n.min(m).min(9) - 1);
    let a = 0.5 + s.uniform() * 1.5;
    let shift = s.standard_normal();
    let mut draw = |count: usize, offset: f64| -> Embeddings {
        let data = (0..count * dim)
            .map(|_| {
                let v = offset + s.standard_normal();
                if lattice {
                    (v * 1.5).round()
                } else {
                    v
                }
            })
            .collect();
        Embeddings::new(data, count, dim, "x").unwrap()
    };
    let real = draw(n, 0.0);
    let fake = draw(m, shift);
    Instance { real, fake, k, a }
}
