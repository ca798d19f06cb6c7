//! Dataset-level fidelity and diversity metrics.
//!
//! | family | fidelity            | diversity          | default k | a   |
//! |--------|---------------------|--------------------|-----------|-----|
//! | `ipr`  | improved precision  | improved recall    | 3         | -   |
//! | `dc`   | density             | coverage           | 5         | -   |
//! | `pppr` | P-precision         | P-recall           | 4         | 1.2 |

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::embed_io::EmbeddingSet;
use crate::error::{Error, Result};
use crate::nn::{knn_radii, knn_radii_multi, ChunkPlan, KnnRadii};
use crate::scalar::Scalar;
use crate::scoring::{
    bsr_scores, csr_scores, dsr_from_counts, dsr_scores, psr_scores, run_pass, threshold_radius,
    Pass, ThresholdRadius,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Ipr,
    Dc,
    Pppr,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Ipr, Family::Dc, Family::Pppr];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Ipr => "ipr",
            Family::Dc => "dc",
            Family::Pppr => "pppr",
        }
    }

    /// Short names of the (fidelity, diversity) pair.
    pub fn metric_names(self) -> (&'static str, &'static str) {
        match self {
            Family::Ipr => ("ip", "ir"),
            Family::Dc => ("density", "coverage"),
            Family::Pppr => ("pp", "pr"),
        }
    }

    pub fn default_k(self) -> usize {
        match self {
            Family::Ipr => 3,
            Family::Dc => 5,
            Family::Pppr => 4,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ipr" => Ok(Family::Ipr),
            "dc" => Ok(Family::Dc),
            "pppr" => Ok(Family::Pppr),
            other => Err(Error::InvalidParameter(format!(
                "unknown metric family {other:?} (expected ipr, dc or pppr)"
            ))),
        }
    }
}

/// Default threshold multiplier of the probabilistic family.
pub const DEFAULT_A: f64 = 1.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub family: Family,
    pub k: usize,
    /// Threshold multiplier; only read by the probabilistic family.
    pub a: f64,
    pub plan: ChunkPlan,
}

impl MetricConfig {
    pub fn new(family: Family) -> Self {
        Self {
            family,
            k: family.default_k(),
            a: DEFAULT_A,
            plan: ChunkPlan::default(),
        }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn with_a(mut self, a: f64) -> Self {
        self.a = a;
        self
    }

    pub fn with_plan(mut self, plan: ChunkPlan) -> Self {
        self.plan = plan;
        self
    }

    fn a_as<T: Scalar>(&self) -> T {
        T::of(self.a)
    }
}

fn checked_sets<T: Scalar>(real: &EmbeddingSet<T>, fake: &EmbeddingSet<T>) -> Result<()> {
    real.ensure_same_dim(fake)
}

/// Share of fake samples inside the union of real kNN balls.
pub fn improved_precision<T: Scalar>(
    real: &EmbeddingSet<T>,
    fake: &EmbeddingSet<T>,
    cfg: &MetricConfig,
) -> Result<T> {
    checked_sets(real, fake)?;
    let radii = knn_radii(real, cfg.k, cfg.plan)?;
    Ok(bsr_scores(fake, real, &radii, cfg.plan)?.mean())
}

/// Share of real samples inside the union of fake kNN balls.
pub fn improved_recall<T: Scalar>(
    real: &EmbeddingSet<T>,
    fake: &EmbeddingSet<T>,
    cfg: &MetricConfig,
) -> Result<T> {
    improved_precision(fake, real, cfg)
}

pub fn density<T: Scalar>(
    real: &EmbeddingSet<T>,
    fake: &EmbeddingSet<T>,
    cfg: &MetricConfig,
) -> Result<T> {
    checked_sets(real, fake)?;
    let radii = knn_radii(real, cfg.k, cfg.plan)?;
    Ok(dsr_scores(fake, real, &radii, cfg.plan)?.mean())
}

pub fn coverage<T: Scalar>(
    real: &EmbeddingSet<T>,
    fake: &EmbeddingSet<T>,
    cfg: &MetricConfig,
) -> Result<T> {
    checked_sets(real, fake)?;
    let radii = knn_radii(real, cfg.k, cfg.plan)?;
    Ok(csr_scores(real, &radii, fake, cfg.plan)?.mean())
}

pub fn p_precision<T: Scalar>(
    real: &EmbeddingSet<T>,
    fake: &EmbeddingSet<T>,
    cfg: &MetricConfig,
) -> Result<T> {
    checked_sets(real, fake)?;
    let r = threshold_radius(real, cfg.k, cfg.a_as(), cfg.plan)?;
    Ok(psr_scores(fake, real, &r, cfg.plan)?.mean())
}

pub fn p_recall<T: Scalar>(
    real: &EmbeddingSet<T>,
    fake: &EmbeddingSet<T>,
    cfg: &MetricConfig,
) -> Result<T> {
    p_precision(fake, real, cfg)
}

/// Harmonic mean of a fidelity and a diversity value; 0 when both are 0.
pub fn f1<T: Scalar>(fidelity: T, diversity: T) -> Result<T> {
    if !(fidelity >= T::zero()) || !(diversity >= T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "f1 needs non-negative inputs, got {fidelity} and {diversity}"
        )));
    }
    let sum = fidelity + diversity;
    if sum == T::zero() {
        return Ok(T::zero());
    }
    Ok(T::of(2.0) * fidelity * diversity / sum)
}

/// Fidelity and diversity of one family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricValues<T> {
    pub family: Family,
    pub fidelity: T,
    pub diversity: T,
}

/// Which half of each family to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sides {
    #[default]
    Both,
    Fidelity,
    Diversity,
}

impl Sides {
    fn fidelity(self) -> bool {
        self != Sides::Diversity
    }

    fn diversity(self) -> bool {
        self != Sides::Fidelity
    }
}

/// An embedding set with its kNN radii for a fixed list of `k`.
///
/// Lets one reference set be scored against many others without
/// recomputing its radii.
#[derive(Debug, Clone)]
pub struct PreparedSet<'a, T> {
    set: &'a EmbeddingSet<T>,
    radii: Vec<KnnRadii<T>>,
}

impl<'a, T: Scalar> PreparedSet<'a, T> {
    pub fn new(set: &'a EmbeddingSet<T>, ks: &[usize], plan: ChunkPlan) -> Result<Self> {
        let mut ks = ks.to_vec();
        ks.sort_unstable();
        ks.dedup();
        Ok(Self {
            set,
            radii: knn_radii_multi(set, &ks, plan)?,
        })
    }

    pub fn set(&self) -> &'a EmbeddingSet<T> {
        self.set
    }

    pub fn radii(&self, k: usize) -> Result<&KnnRadii<T>> {
        self.radii.iter().find(|r| r.k() == k).ok_or_else(|| {
            Error::InvalidParameter(format!("radii for k={k} were not prepared"))
        })
    }
}

/// The `k` values each side needs radii for, as `(real, fake)`.
pub fn required_ks(cfgs: &[MetricConfig], sides: Sides) -> (Vec<usize>, Vec<usize>) {
    let mut real = Vec::new();
    let mut fake = Vec::new();
    for cfg in cfgs {
        if sides.fidelity() || cfg.family == Family::Dc {
            real.push(cfg.k);
        }
        if sides.diversity() && cfg.family != Family::Dc {
            fake.push(cfg.k);
        }
    }
    for ks in [&mut real, &mut fake] {
        ks.sort_unstable();
        ks.dedup();
    }
    (real, fake)
}

/// Fidelity and diversity of one family; a side that was not requested is
/// `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialValues<T> {
    pub family: Family,
    pub k: usize,
    pub fidelity: Option<T>,
    pub diversity: Option<T>,
}

/// Evaluates several families on one (real, fake) pair.
///
/// All kNN radii of a set come from one scan, and all fake-vs-real and
/// real-vs-fake scores share one distance sweep each. The values are
/// bitwise identical to the single-metric functions.
pub fn evaluate<T: Scalar>(
    real: &EmbeddingSet<T>,
    fake: &EmbeddingSet<T>,
    cfgs: &[MetricConfig],
) -> Result<Vec<MetricValues<T>>> {
    checked_sets(real, fake)?;
    let plan = cfgs.first().map(|c| c.plan).unwrap_or_default();
    let (ks_real, ks_fake) = required_ks(cfgs, Sides::Both);
    let real = PreparedSet::new(real, &ks_real, plan)?;
    let fake = PreparedSet::new(fake, &ks_fake, plan)?;
    Ok(evaluate_prepared(&real, &fake, cfgs, Sides::Both)?
        .into_iter()
        .map(|v| MetricValues {
            family: v.family,
            fidelity: v.fidelity.expect("fidelity requested"),
            diversity: v.diversity.expect("diversity requested"),
        })
        .collect())
}

/// [`evaluate`] on sets whose radii are already known.
///
/// `real` needs radii for every `k` of [`required_ks`]`.0`, `fake` for `.1`.
pub fn evaluate_prepared<T: Scalar>(
    real: &PreparedSet<'_, T>,
    fake: &PreparedSet<'_, T>,
    cfgs: &[MetricConfig],
    sides: Sides,
) -> Result<Vec<PartialValues<T>>> {
    let (real_set, fake_set) = (real.set, fake.set);
    checked_sets(real_set, fake_set)?;
    let Some(first) = cfgs.first() else {
        return Ok(Vec::new());
    };
    let plan = first.plan;
    let (want_fid, want_div) = (sides.fidelity(), sides.diversity());

    let mut forward = Pass::default(); // fake queries, real references
    let mut backward = Pass::default(); // real queries, fake references
    enum Slot {
        Ipr(Option<usize>, Option<usize>),
        Dc(Option<usize>, Option<usize>, usize),
        Pppr(Option<usize>, Option<usize>),
    }
    fn push<X>(v: &mut Vec<X>, x: X) -> usize {
        v.push(x);
        v.len() - 1
    }
    let mut slots = Vec::with_capacity(cfgs.len());
    for cfg in cfgs {
        let a = cfg.a_as::<T>();
        let slot = match cfg.family {
            Family::Ipr => Slot::Ipr(
                want_fid.then(|| real.radii(cfg.k)).transpose()?.map(|r| push(&mut forward.balls, r)),
                want_div.then(|| fake.radii(cfg.k)).transpose()?.map(|r| push(&mut backward.balls, r)),
            ),
            Family::Dc => Slot::Dc(
                want_fid.then(|| real.radii(cfg.k)).transpose()?.map(|r| push(&mut forward.balls, r)),
                want_div
                    .then(|| real.radii(cfg.k))
                    .transpose()?
                    .map(|r| push(&mut backward.own_balls, r)),
                cfg.k,
            ),
            Family::Pppr => {
                let fwd = if want_fid {
                    let r = ThresholdRadius::from_radii(real.radii(cfg.k)?, a, real_set.label())?;
                    Some(push(&mut forward.thresholds, r.value()))
                } else {
                    None
                };
                let bwd = if want_div {
                    let r = ThresholdRadius::from_radii(fake.radii(cfg.k)?, a, fake_set.label())?;
                    Some(push(&mut backward.thresholds, r.value()))
                } else {
                    None
                };
                Slot::Pppr(fwd, bwd)
            }
        };
        slots.push(slot);
    }

    let fwd = want_fid.then(|| run_pass(fake_set, real_set, &forward, plan)).transpose()?;
    let bwd = want_div.then(|| run_pass(real_set, fake_set, &backward, plan)).transpose()?;

    fn mean<T: Scalar>(values: impl Iterator<Item = T>, n: usize) -> T {
        values.fold(T::zero(), |acc, s| acc + s) / T::from_count(n)
    }
    let hit = |c: bool| if c { T::one() } else { T::zero() };
    let (m, n) = (fake_set.n(), real_set.n());

    Ok(cfgs
        .iter()
        .zip(slots)
        .map(|(cfg, slot)| {
            let (fidelity, diversity) = match slot {
                Slot::Ipr(f, b) => (
                    f.map(|f| mean(fwd.as_ref().unwrap().counts[f].iter().map(|&c| hit(c > 0)), m)),
                    b.map(|b| mean(bwd.as_ref().unwrap().counts[b].iter().map(|&c| hit(c > 0)), n)),
                ),
                Slot::Dc(f, b, k) => (
                    f.map(|f| {
                        mean(dsr_from_counts::<T>(&fwd.as_ref().unwrap().counts[f], k).into_iter(), m)
                    }),
                    b.map(|b| mean(bwd.as_ref().unwrap().covered[b].iter().map(|&c| hit(c)), n)),
                ),
                Slot::Pppr(f, b) => (
                    f.map(|f| mean(fwd.as_ref().unwrap().psr[f].iter().copied(), m)),
                    b.map(|b| mean(bwd.as_ref().unwrap().psr[b].iter().copied(), n)),
                ),
            };
            PartialValues {
                family: cfg.family,
                k: cfg.k,
                fidelity,
                diversity,
            }
        })
        .collect())
}

/// Per-fake-sample disagreement between PSR and max-normalised DSR.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoringGap<T> {
    pub psr: Vec<T>,
    pub dsr_normalized: Vec<T>,
    /// `psr - dsr_normalized`.
    pub gap: Vec<T>,
    /// Fake indices by decreasing gap; ties keep index order.
    pub order: Vec<usize>,
}

pub fn scoring_gap<T: Scalar>(
    real: &EmbeddingSet<T>,
    fake: &EmbeddingSet<T>,
    cfg_pppr: &MetricConfig,
    cfg_dc: &MetricConfig,
) -> Result<ScoringGap<T>> {
    checked_sets(real, fake)?;
    let plan = cfg_pppr.plan;
    let (k_psr, k_dsr) = (cfg_pppr.k, cfg_dc.k);
    let mut ks = vec![k_psr, k_dsr];
    ks.dedup();
    let radii = knn_radii_multi(real, &ks, plan)?;
    let psr_radii = &radii[0];
    let dsr_radii = radii.last().unwrap();
    let threshold = ThresholdRadius::from_radii(psr_radii, cfg_pppr.a_as(), real.label())?;
    let pass = Pass {
        balls: vec![dsr_radii],
        thresholds: vec![threshold.value()],
        own_balls: Vec::new(),
    };
    let mut out = run_pass(fake, real, &pass, plan)?;
    let psr = out.psr.remove(0);
    let dsr: Vec<T> = dsr_from_counts(&out.counts[0], k_dsr);
    let max = dsr.iter().fold(T::zero(), |acc, &d| acc.max(d));
    let dsr_normalized: Vec<T> = if max > T::zero() {
        dsr.iter().map(|&d| d / max).collect()
    } else {
        vec![T::zero(); dsr.len()]
    };
    let gap: Vec<T> = psr.iter().zip(&dsr_normalized).map(|(&p, &d)| p - d).collect();
    let mut order: Vec<usize> = (0..gap.len()).collect();
    order.sort_by(|&i, &j| gap[j].partial_cmp(&gap[i]).unwrap_or(std::cmp::Ordering::Equal));
    Ok(ScoringGap {
        psr,
        dsr_normalized,
        gap,
        order,
    })
}

/// Metric values of one family together with the configuration that
/// produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub family: Family,
    pub fidelity: f64,
    pub diversity: f64,
    pub f1: f64,
    pub k: usize,
    /// Threshold multiplier; `None` outside the probabilistic family.
    pub a: Option<f64>,
    pub n_real: usize,
    pub n_fake: usize,
    pub seconds: f64,
}

impl MetricReport {
    fn from_values<T: Scalar>(
        values: MetricValues<T>,
        cfg: &MetricConfig,
        n_real: usize,
        n_fake: usize,
        seconds: f64,
    ) -> Result<Self> {
        let fidelity = values.fidelity.as_f64();
        let diversity = values.diversity.as_f64();
        Ok(Self {
            family: cfg.family,
            fidelity,
            diversity,
            f1: f1(fidelity, diversity)?,
            k: cfg.k,
            a: (cfg.family == Family::Pppr).then_some(cfg.a),
            n_real,
            n_fake,
            seconds,
        })
    }

    pub const CSV_HEADER: &'static str = "family,fidelity,diversity,f1,k,a,n_real,n_fake,seconds";

    /// JSON object with a fixed key order and 17 significant digits.
    pub fn to_json(&self) -> String {
        format!(
            "{{\"family\":\"{}\",\"fidelity\":{},\"diversity\":{},\"f1\":{},\"k\":{},\"a\":{},\"n_real\":{},\"n_fake\":{},\"seconds\":{}}}",
            self.family,
            fmt_g17(self.fidelity),
            fmt_g17(self.diversity),
            fmt_g17(self.f1),
            self.k,
            self.a.map_or_else(|| "null".to_owned(), fmt_g17),
            self.n_real,
            self.n_fake,
            fmt_g17(self.seconds),
        )
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.family,
            fmt_g17(self.fidelity),
            fmt_g17(self.diversity),
            fmt_g17(self.f1),
            self.k,
            self.a.map_or_else(String::new, fmt_g17),
            self.n_real,
            self.n_fake,
            fmt_g17(self.seconds),
        )
    }
}

/// Formats like C's `%.17g`: enough digits to round-trip any `f64`.
pub fn fmt_g17(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let digits = digits.trim_end_matches('0');
    if !(-5..17).contains(&exp) {
        let (head, tail) = digits.split_at(1);
        return if tail.is_empty() {
            format!("{sign}{head}e{exp}")
        } else {
            format!("{sign}{head}.{tail}e{exp}")
        };
    }
    if exp < 0 {
        let zeros = "0".repeat((-exp - 1) as usize);
        return format!("{sign}0.{zeros}{digits}");
    }
    let int_len = exp as usize + 1;
    if digits.len() <= int_len {
        format!("{sign}{digits}{}", "0".repeat(int_len - digits.len()))
    } else {
        let (int, frac) = digits.split_at(int_len);
        format!("{sign}{int}.{frac}")
    }
}

/// Computes the family's (fidelity, diversity) pair, F1 and wall time.
pub fn compute_report<T: Scalar>(
    real: &EmbeddingSet<T>,
    fake: &EmbeddingSet<T>,
    cfg: &MetricConfig,
) -> Result<MetricReport> {
    let start = Instant::now();
    let values = evaluate(real, fake, std::slice::from_ref(cfg))?.remove(0);
    let seconds = start.elapsed().as_secs_f64();
    MetricReport::from_values(values, cfg, real.n(), fake.n(), seconds)
}

/// Reports for several families from one fused evaluation; `seconds` is the
/// wall time of the whole evaluation.
pub fn compute_reports<T: Scalar>(
    real: &EmbeddingSet<T>,
    fake: &EmbeddingSet<T>,
    cfgs: &[MetricConfig],
) -> Result<Vec<MetricReport>> {
    let start = Instant::now();
    let values = evaluate(real, fake, cfgs)?;
    let seconds = start.elapsed().as_secs_f64();
    values
        .into_iter()
        .zip(cfgs)
        .map(|(v, cfg)| MetricReport::from_values(v, cfg, real.n(), fake.n(), seconds))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(points: &[f64]) -> EmbeddingSet<f64> {
        EmbeddingSet::new(points.to_vec(), points.len(), 1, "line").unwrap()
    }

    fn cfg(family: Family, k: usize) -> MetricConfig {
        MetricConfig::new(family).with_k(k)
    }

    #[test]
    fn defaults() {
        assert_eq!(MetricConfig::new(Family::Ipr).k, 3);
        assert_eq!(MetricConfig::new(Family::Dc).k, 5);
        let p = MetricConfig::new(Family::Pppr);
        assert_eq!((p.k, p.a), (4, 1.2));
    }

    #[test]
    fn hand_examples() {
        let x = line(&[0.0, 1.0, 3.0]);
        let c = cfg(Family::Ipr, 1);
        assert_eq!(improved_precision(&x, &line(&[0.5, 10.0]), &c).unwrap(), 0.5);
        assert_eq!(improved_recall(&line(&[0.5, 10.0]), &x, &c).unwrap(), 0.5);
        assert_eq!(density(&x, &line(&[0.5]), &cfg(Family::Dc, 1)).unwrap(), 2.0);
        assert_eq!(density(&x, &line(&[40.0]), &cfg(Family::Dc, 1)).unwrap(), 0.0);
        let cov = coverage(&x, &line(&[2.5]), &cfg(Family::Dc, 1)).unwrap();
        assert!((cov - 1.0 / 3.0).abs() < 1e-15);

        let pc = cfg(Family::Pppr, 1).with_a(2.0);
        let pp = p_precision(&line(&[0.0, 1.0]), &line(&[0.5]), &pc).unwrap();
        assert!((pp - 0.9375).abs() < 1e-15);
        let pr = p_recall(&line(&[0.5]), &line(&[0.0, 1.0]), &pc).unwrap();
        assert!((pr - 0.9375).abs() < 1e-15);
    }

    #[test]
    fn identity_is_one() {
        let x = line(&[0.0, 0.3, 1.0, 3.0, 3.5, 7.0]);
        for family in Family::ALL {
            let c = cfg(family, 2);
            let r = compute_report(&x, &x, &c).unwrap();
            assert_eq!(r.diversity, 1.0, "{family}");
            if family != Family::Dc {
                assert_eq!((r.fidelity, r.f1), (1.0, 1.0), "{family}");
            }
        }
    }

    #[test]
    fn f1_examples() {
        assert!((f1(0.681f64, 0.688).unwrap() - 0.684).abs() <= 0.001);
        assert_eq!(f1(0.3, 0.3).unwrap(), 0.3);
        assert_eq!(f1(0.0, 0.7).unwrap(), 0.0);
        assert_eq!(f1(0.0, 0.0).unwrap(), 0.0);
        assert!(f1(-0.1, 0.5).is_err());
        // Density can exceed one; the same formula applies.
        assert!((f1(1.52f64, 0.876).unwrap() - 1.112).abs() < 0.001);
    }

    #[test]
    fn gap_hand_instance() {
        // PSR with R = 2 * mean NND_1 = 2 * 4/3 and DSR with k = 1 balls.
        let x = line(&[0.0, 1.0, 3.0]);
        let y = line(&[0.5, 2.5]);
        let pc = cfg(Family::Pppr, 1).with_a(2.0);
        let dc = cfg(Family::Dc, 1);
        let g = scoring_gap(&x, &y, &pc, &dc).unwrap();
        let r = 8.0 / 3.0;
        let psr0 = 1.0 - (0.5 / r) * (0.5 / r) * (2.5 / r);
        let psr1 = 1.0 - (2.5 / r) * (1.5 / r) * (0.5 / r);
        // DSR: y0 in balls of 0 and 1 -> 2; y1 in ball of 3 only -> 1.
        let expected = [psr0 - 1.0, psr1 - 0.5];
        for (got, want) in g.gap.iter().zip(expected) {
            assert!((got - want).abs() < 1e-14, "{got} vs {want}");
        }
        assert_eq!(g.dsr_normalized, vec![1.0, 0.5]);
        assert_eq!(g.order, vec![1, 0]);
    }

    #[test]
    fn gap_on_disjoint_supports_is_zero() {
        let x = line(&[0.0, 1.0, 3.0]);
        let y = line(&[100.0, 200.0]);
        let g = scoring_gap(&x, &y, &cfg(Family::Pppr, 1), &cfg(Family::Dc, 1)).unwrap();
        assert_eq!(g.gap, vec![0.0, 0.0]);
        assert_eq!(g.order, vec![0, 1]);
    }

    #[test]
    fn report_json_key_order() {
        let x = line(&[0.0, 1.0, 3.0, 4.0]);
        let r = compute_report(&x, &x, &cfg(Family::Pppr, 1)).unwrap();
        let json = r.to_json();
        let keys = ["family", "fidelity", "diversity", "f1", "k", "a", "n_real", "n_fake", "seconds"];
        let mut last = 0;
        for key in keys {
            let pos = json.find(&format!("\"{key}\"")).unwrap();
            assert!(pos >= last, "{key} out of order in {json}");
            last = pos;
        }
        let back: MetricReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.fidelity, r.fidelity);
        assert_eq!(back.a, Some(1.2));
        let ipr = compute_report(&x, &x, &cfg(Family::Ipr, 1)).unwrap().to_json();
        assert!(ipr.contains("\"a\":null"));
    }

    #[test]
    fn g17_formatting() {
        assert_eq!(fmt_g17(1.0), "1");
        assert_eq!(fmt_g17(0.1), "0.10000000000000001");
        assert_eq!(fmt_g17(-2.5), "-2.5");
        assert_eq!(fmt_g17(1234.5), "1234.5");
        assert_eq!(fmt_g17(1e20), "1e20");
        assert_eq!(fmt_g17(1.5e-7), "1.4999999999999999e-7");
        assert_eq!(fmt_g17(0.0), "0");
        for x in [0.1, 1.0 / 3.0, 6.02e23, -1e-300, 123456789.123] {
            assert_eq!(fmt_g17(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn family_parsing() {
        assert_eq!("PPPR".parse::<Family>().unwrap(), Family::Pppr);
        assert!("fid".parse::<Family>().is_err());
    }
}
