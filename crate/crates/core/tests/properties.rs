use genmetrics::embed_io::{read_embeddings, write_embeddings};
use genmetrics::metrics::{improved_precision, improved_recall, p_precision, p_recall};
use genmetrics::scoring::{bsr_scores, csr_scores, dsr_scores, psr_scores};
use genmetrics::synthlab::{split_outliers, NormalStream};
use genmetrics::{
    evaluate, knn_radii, pairwise_block, ChunkPlan, Embeddings, Embeddings32, Error, Family, Format,
    MetricConfig, ThresholdRadius,
};
use proptest::prelude::*;

fn set(n: usize, dim: usize, values: Vec<f64>) -> Embeddings {
    Embeddings::new(values, n, dim, "p").unwrap()
}

/// A random set with `n` in `rows` and the given `dim`; entries in [-5, 5].
fn arb_set(rows: std::ops::Range<usize>, dim: usize) -> impl Strategy<Value = Embeddings> {
    rows.prop_flat_map(move |n| prop::collection::vec(-5.0..5.0f64, n * dim).prop_map(move |v| set(n, dim, v)))
}

/// Two sets sharing a dimension.
fn arb_pair(max_n: usize) -> impl Strategy<Value = (Embeddings, Embeddings)> {
    (1usize..9).prop_flat_map(move |dim| (arb_set(10..max_n, dim), arb_set(10..max_n, dim)))
}

/// Entries on a coarse lattice, so duplicates and exact ties are common.
fn arb_lattice_set(rows: std::ops::Range<usize>) -> impl Strategy<Value = Embeddings> {
    (1usize..5, rows).prop_flat_map(|(dim, n)| {
        prop::collection::vec(-2i32..3, n * dim).prop_map(move |v| set(n, dim, v.into_iter().map(f64::from).collect()))
    })
}

fn configs(k: usize) -> Vec<MetricConfig> {
    Family::ALL.iter().map(|&f| MetricConfig::new(f).with_k(k)).collect()
}

fn orthogonal(dim: usize, seed: u64) -> Vec<f64> {
    let mut s = NormalStream::new(seed);
    let mut q: Vec<Vec<f64>> = Vec::new();
    while q.len() < dim {
        let mut v: Vec<f64> = (0..dim).map(|_| s.standard_normal()).collect();
        for b in &q {
            let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            q.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    q.concat()
}

fn transform(x: &Embeddings, rot: &[f64], shift: &[f64]) -> Embeddings {
    let dim = x.dim();
    let data = (0..x.n())
        .flat_map(|i| {
            let row = x.row(i);
            (0..dim).map(move |c| (0..dim).map(|j| rot[c * dim + j] * row[j]).sum::<f64>() + shift[c])
        })
        .collect();
    set(x.n(), dim, data)
}

fn permute(x: &Embeddings, seed: u64) -> Embeddings {
    let mut idx: Vec<usize> = (0..x.n()).collect();
    NormalStream::new(seed).shuffle(&mut idx);
    x.select(&idx).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn save_load_is_bitwise(x in arb_set(1..40, 5), scale in prop::sample::select(vec![1.0, 1e-300, 1e300, 3e-310])) {
        let x = x.map(|_, v| v * scale).unwrap();
        for format in [Format::Npy, Format::RawBin] {
            let mut buf = Vec::new();
            write_embeddings(&mut buf, &x, format).unwrap();
            let back = read_embeddings(&mut buf.as_slice(), format).unwrap();
            prop_assert_eq!((back.n(), back.dim()), (x.n(), x.dim()));
            for (a, b) in back.as_slice().iter().zip(x.as_slice()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn f32_round_trip_is_bitwise(x in arb_set(1..20, 3)) {
        let x: Embeddings32 = x.cast();
        let mut buf = Vec::new();
        write_embeddings(&mut buf, &x, Format::Npy).unwrap();
        let back = read_embeddings(&mut buf.as_slice(), Format::Npy).unwrap();
        for (a, b) in back.as_slice().iter().zip(x.as_slice()) {
            prop_assert_eq!(*a as f32, *b);
        }
    }

    #[test]
    fn every_non_finite_injection_is_rejected(
        x in arb_set(1..30, 4),
        pos in any::<prop::sample::Index>(),
        bad in prop::sample::select(vec![f64::NAN, f64::INFINITY, f64::NEG_INFINITY]),
    ) {
        let at = pos.index(x.n() * 4);
        let mut data = x.as_slice().to_vec();
        data[at] = bad;
        let direct = Embeddings::new(data, x.n(), 4, "bad").unwrap_err();
        let is_reported = matches!(direct, Error::NonFinite { row, col } if row == at / 4 && col == at % 4);
        prop_assert!(is_reported);

        for format in [Format::Npy, Format::RawBin] {
            let mut buf = Vec::new();
            write_embeddings(&mut buf, &x, format).unwrap();
            let offset = buf.len() - x.n() * 4 * 8 + at * 8;
            buf[offset..offset + 8].copy_from_slice(&bad.to_le_bytes());
            let err = read_embeddings(&mut buf.as_slice(), format).unwrap_err();
            let is_reported = matches!(err, Error::NonFinite { row, col } if row == at / 4 && col == at % 4);
            prop_assert!(is_reported);
        }
    }

    #[test]
    fn pairwise_is_symmetric((a, b) in arb_pair(40)) {
        let ab = pairwise_block(&a, 0..a.n(), &b).unwrap();
        let ba = pairwise_block(&b, 0..b.n(), &a).unwrap();
        for i in 0..a.n() {
            for j in 0..b.n() {
                let (x, y) = (ab[i * b.n() + j], ba[j * a.n() + i]);
                prop_assert!((x - y).abs() <= 1e-12 * x.max(1.0), "{} vs {}", x, y);
            }
        }
    }

    #[test]
    fn radii_do_not_depend_on_chunking(x in arb_set(10..80, 6), rc in 1usize..20, cc in 1usize..20, k in 1usize..9) {
        let base = knn_radii(&x, k, ChunkPlan::unchunked()).unwrap();
        let chunked = knn_radii(&x, k, ChunkPlan::new(rc, cc).unwrap()).unwrap();
        for (a, b) in base.radii().iter().zip(chunked.radii()) {
            prop_assert!((a - b).abs() <= 1e-9 * a.max(1e-300));
        }
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let many = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let plan = ChunkPlan::new(rc, cc).unwrap();
        let r1 = one.install(|| knn_radii(&x, k, plan).unwrap());
        let r4 = many.install(|| knn_radii(&x, k, plan).unwrap());
        prop_assert_eq!(r1, r4);
    }

    #[test]
    fn radii_grow_with_k(x in arb_lattice_set(10..60)) {
        let mut prev = knn_radii(&x, 1, ChunkPlan::default()).unwrap();
        for k in 2..9 {
            let next = knn_radii(&x, k, ChunkPlan::default()).unwrap();
            for (a, b) in prev.radii().iter().zip(next.radii()) {
                prop_assert!(b >= a);
            }
            prev = next;
        }
    }

    #[test]
    fn radii_scale_with_the_data(x in arb_set(10..60, 7), c in 0.01..100.0f64, k in 1usize..6) {
        let scaled = x.map(|_, v| v * c).unwrap();
        let r = knn_radii(&x, k, ChunkPlan::default()).unwrap();
        let rs = knn_radii(&scaled, k, ChunkPlan::default()).unwrap();
        for (a, b) in r.radii().iter().zip(rs.radii()) {
            prop_assert!((b - c * a).abs() <= 1e-12 * c * a, "{} vs {}", b, c * a);
        }
    }

    #[test]
    fn psr_never_decreases_with_more_refs((q, refs) in arb_pair(40), extra in prop::collection::vec(-5.0..5.0f64, 8), r in 0.0..20.0f64) {
        let dim = refs.dim();
        let more = refs.concat(&set(1, dim, extra[..dim].to_vec())).unwrap();
        let r = ThresholdRadius::fixed(r).unwrap();
        let before = psr_scores(&q, &refs, &r, ChunkPlan::default()).unwrap();
        let after = psr_scores(&q, &more, &r, ChunkPlan::default()).unwrap();
        for (b, a) in before.scores.iter().zip(&after.scores) {
            prop_assert!(a >= b && (0.0..=1.0).contains(a));
        }
    }

    #[test]
    fn bsr_marks_exactly_the_positive_dsr((q, refs) in arb_pair(40), k in 1usize..9) {
        let radii = knn_radii(&refs, k, ChunkPlan::default()).unwrap();
        let bsr = bsr_scores(&q, &refs, &radii, ChunkPlan::default()).unwrap();
        let dsr = dsr_scores(&q, &refs, &radii, ChunkPlan::default()).unwrap();
        let bound = refs.n() as f64 / k as f64;
        for (b, d) in bsr.scores.iter().zip(&dsr.scores) {
            prop_assert_eq!(*b == 1.0, *d > 0.0);
            prop_assert!(*d >= 0.0 && *d <= bound);
        }
    }

    #[test]
    fn scores_ignore_translation((q, refs) in arb_pair(40), shift in prop::collection::vec(-10.0..10.0f64, 8), k in 1usize..6) {
        let dim = q.dim();
        let moved = |x: &Embeddings| x.map(|c, v| v + shift[c]).unwrap();
        let (q2, refs2) = (moved(&q), moved(&refs));
        let plan = ChunkPlan::default();
        let (r1, r2) = (knn_radii(&refs, k, plan).unwrap(), knn_radii(&refs2, k, plan).unwrap());
        let (t1, t2) = (
            ThresholdRadius::from_radii(&r1, 1.2, "a").unwrap(),
            ThresholdRadius::from_radii(&r2, 1.2, "b").unwrap(),
        );
        let pairs = [
            (bsr_scores(&q, &refs, &r1, plan).unwrap().scores, bsr_scores(&q2, &refs2, &r2, plan).unwrap().scores),
            (dsr_scores(&q, &refs, &r1, plan).unwrap().scores, dsr_scores(&q2, &refs2, &r2, plan).unwrap().scores),
            (csr_scores(&refs, &r1, &q, plan).unwrap().scores, csr_scores(&refs2, &r2, &q2, plan).unwrap().scores),
            (psr_scores(&q, &refs, &t1, plan).unwrap().scores, psr_scores(&q2, &refs2, &t2, plan).unwrap().scores),
        ];
        for (a, b) in pairs {
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-12, "dim {}: {} vs {}", dim, x, y);
            }
        }
    }

    #[test]
    fn metrics_stay_in_range((x, y) in arb_pair(50), k in 1usize..9) {
        for v in evaluate(&x, &y, &configs(k)).unwrap() {
            let fid_hi = if v.family == Family::Dc { x.n() as f64 / k as f64 } else { 1.0 };
            prop_assert!(v.fidelity >= 0.0 && v.fidelity <= fid_hi);
            prop_assert!(v.diversity >= 0.0 && v.diversity <= 1.0);
        }
    }

    #[test]
    fn identical_sets_score_one(x in prop_oneof![arb_set(10..60, 5), arb_lattice_set(10..60)], k in 1usize..9) {
        for v in evaluate(&x, &x, &configs(k)).unwrap() {
            if v.family != Family::Dc {
                prop_assert_eq!(v.fidelity, 1.0);
            }
            prop_assert_eq!(v.diversity, 1.0);
        }
    }

    #[test]
    fn recall_is_swapped_precision((x, y) in arb_pair(40), k in 1usize..9) {
        let cfg = MetricConfig::new(Family::Ipr).with_k(k);
        prop_assert_eq!(improved_recall(&x, &y, &cfg).unwrap(), improved_precision(&y, &x, &cfg).unwrap());
        prop_assert_eq!(p_recall(&x, &y, &cfg).unwrap(), p_precision(&y, &x, &cfg).unwrap());
    }

    #[test]
    fn metrics_ignore_rigid_motion((x, y) in arb_pair(40), seed in any::<u64>(), k in 1usize..6) {
        let dim = x.dim();
        let rot = orthogonal(dim, seed);
        let mut s = NormalStream::new(seed ^ 1);
        let shift: Vec<f64> = (0..dim).map(|_| 3.0 * s.standard_normal()).collect();
        let base = evaluate(&x, &y, &configs(k)).unwrap();
        let moved = evaluate(&transform(&x, &rot, &shift), &transform(&y, &rot, &shift), &configs(k)).unwrap();
        for (a, b) in base.iter().zip(&moved) {
            prop_assert!((a.fidelity - b.fidelity).abs() <= 1e-9, "{:?}", a.family);
            prop_assert!((a.diversity - b.diversity).abs() <= 1e-9, "{:?}", a.family);
        }
    }

    #[test]
    fn metrics_ignore_row_order((x, y) in arb_pair(40), seed in any::<u64>(), k in 1usize..6) {
        let base = evaluate(&x, &y, &configs(k)).unwrap();
        let shuffled = evaluate(&permute(&x, seed), &permute(&y, !seed), &configs(k)).unwrap();
        for (a, b) in base.iter().zip(&shuffled) {
            prop_assert!((a.fidelity - b.fidelity).abs() <= 1e-12, "{:?}", a.family);
            prop_assert!((a.diversity - b.diversity).abs() <= 1e-12, "{:?}", a.family);
        }
    }

    #[test]
    fn outlier_split_partitions(x in prop_oneof![arb_set(10..60, 3), arb_lattice_set(10..60)], ratio in 0.01..0.99f64, k in 1usize..5) {
        let s = split_outliers(&x, k, ratio, ChunkPlan::default()).unwrap();
        let mut all: Vec<usize> = s.inlier_indices.iter().chain(&s.outlier_indices).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..x.n()).collect::<Vec<_>>());
        prop_assert_eq!(s.outlier_indices.len(), (ratio * x.n() as f64 - 1e-9).ceil() as usize);
        let min_out = s.outlier_indices.iter().map(|&i| s.criterion[i]).fold(f64::INFINITY, f64::min);
        let max_in = s.inlier_indices.iter().map(|&i| s.criterion[i]).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(min_out >= max_in);
    }
}
