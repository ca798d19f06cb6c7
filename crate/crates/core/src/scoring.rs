//! Per-sample scoring rules over kNN supports.
//!
//! * BSR: 1 if the query lies in at least one reference ball.
//! * DSR: number of reference balls holding the query, divided by `k`.
//! * CSR: 1 if a real sample's own ball holds at least one fake sample.
//! * PSR: `1 - prod_i (1 - p(d_i))`, with `p(d) = 1 - d/R` inside the global
//!   threshold radius `R` and 0 outside.
//!
//! Balls are closed (`d <= r`), so a query coinciding with a reference
//! sample always scores.

use crate::embed_io::EmbeddingSet;
use crate::error::{Error, Result};
use crate::nn::{knn_radii, scan_rows, ChunkPlan, KnnRadii};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    Bsr,
    Dsr,
    Csr,
    Psr,
}

/// Scores of one rule, one entry per scored sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector<T> {
    pub scores: Vec<T>,
    pub rule: Rule,
}

impl<T: Scalar> ScoreVector<T> {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Mean score, summed in index order.
    pub fn mean(&self) -> T {
        let sum = self.scores.iter().fold(T::zero(), |acc, &s| acc + s);
        sum / T::from_count(self.scores.len())
    }

    pub fn max(&self) -> T {
        self.scores.iter().fold(T::zero(), |acc, &s| acc.max(s))
    }
}

/// Global kernel width `R = a * mean(NND_k)` of a reference set.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdRadius<T> {
    value: T,
    a: T,
    k: usize,
    source: String,
}

impl<T: Scalar> ThresholdRadius<T> {
    pub fn from_radii(radii: &KnnRadii<T>, a: T, source: impl Into<String>) -> Result<Self> {
        check_multiplier(a)?;
        Ok(Self {
            value: a * radii.mean(),
            a,
            k: radii.k(),
            source: source.into(),
        })
    }

    /// A radius fixed by hand, bypassing the kNN average.
    pub fn fixed(value: T) -> Result<Self> {
        if !(value >= T::zero()) || !value.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "threshold radius must be finite and non-negative, got {value}"
            )));
        }
        Ok(Self {
            value,
            a: T::one(),
            k: 0,
            source: String::new(),
        })
    }

    pub fn value(&self) -> T {
        self.value
    }

    pub fn a(&self) -> T {
        self.a
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

fn check_multiplier<T: Scalar>(a: T) -> Result<()> {
    if !(a > T::zero()) || !a.is_finite() {
        return Err(Error::InvalidParameter(format!("multiplier a must be positive, got {a}")));
    }
    Ok(())
}

/// `R = a * mean NND_k` over `refs`.
pub fn threshold_radius<T: Scalar>(
    refs: &EmbeddingSet<T>,
    k: usize,
    a: T,
    plan: ChunkPlan,
) -> Result<ThresholdRadius<T>> {
    check_multiplier(a)?;
    let radii = knn_radii(refs, k, plan)?;
    ThresholdRadius::from_radii(&radii, a, refs.label())
}

#[inline(always)]
fn membership_unchecked<T: Scalar>(d: T, r: T) -> T {
    if d == T::zero() {
        T::one()
    } else if d <= r {
        T::one() - d / r
    } else {
        T::zero()
    }
}

/// Probability that a point at distance `d` belongs to the sub-support of a
/// reference sample: linear decay from 1 at `d = 0` to 0 at `d = r`.
///
/// With `r = 0` this is the exact-coincidence indicator.
pub fn membership_prob<T: Scalar>(d: T, r: T) -> Result<T> {
    if !(d >= T::zero()) {
        return Err(Error::InvalidParameter(format!("distance must be non-negative, got {d}")));
    }
    if !(r >= T::zero()) {
        return Err(Error::InvalidParameter(format!("radius must be non-negative, got {r}")));
    }
    Ok(membership_unchecked(d, r))
}

/// Work for one sweep of `queries x refs`. Every task shares the same
/// distance evaluations.
#[derive(Debug, Clone, Default)]
pub(crate) struct Pass<'a, T> {
    /// kNN radii of the reference set; yields per-query ball counts.
    pub balls: Vec<&'a KnnRadii<T>>,
    /// Threshold radii; yields per-query PSR.
    pub thresholds: Vec<T>,
    /// kNN radii of the query set; yields "own ball holds a reference".
    pub own_balls: Vec<&'a KnnRadii<T>>,
}

/// Per-task outputs, indexed `[task][query]`.
#[derive(Debug, Clone)]
pub(crate) struct PassOutput<T> {
    pub counts: Vec<Vec<u32>>,
    pub psr: Vec<Vec<T>>,
    pub covered: Vec<Vec<bool>>,
}

struct RowState<T> {
    counts: Vec<u32>,
    prods: Vec<T>,
    covered: Vec<bool>,
}

pub(crate) fn run_pass<T: Scalar>(
    queries: &EmbeddingSet<T>,
    refs: &EmbeddingSet<T>,
    pass: &Pass<'_, T>,
    plan: ChunkPlan,
) -> Result<PassOutput<T>> {
    queries.ensure_same_dim(refs)?;
    for radii in &pass.balls {
        check_len(radii.source_n(), refs.n())?;
    }
    for radii in &pass.own_balls {
        check_len(radii.source_n(), queries.n())?;
    }
    let balls: Vec<&[T]> = pass.balls.iter().map(|r| r.radii()).collect();
    let own: Vec<&[T]> = pass.own_balls.iter().map(|r| r.radii()).collect();
    let thresholds = &pass.thresholds;

    let rows = scan_rows(
        queries,
        refs,
        plan,
        |_| RowState {
            counts: vec![0; balls.len()],
            prods: vec![T::one(); thresholds.len()],
            covered: vec![false; own.len()],
        },
        |state, i, col0, dists| {
            for (t, radii) in balls.iter().enumerate() {
                let radii = &radii[col0..col0 + dists.len()];
                state.counts[t] += dists.iter().zip(radii).filter(|(d, r)| d <= r).count() as u32;
            }
            for (t, &r) in thresholds.iter().enumerate() {
                let prod = &mut state.prods[t];
                if *prod == T::zero() {
                    continue;
                }
                for &d in dists {
                    if d < r || d == T::zero() {
                        *prod = *prod * (T::one() - membership_unchecked(d, r));
                        if *prod == T::zero() {
                            break;
                        }
                    }
                }
            }
            for (t, radii) in own.iter().enumerate() {
                if !state.covered[t] {
                    let r = radii[i];
                    state.covered[t] = dists.iter().any(|&d| d <= r);
                }
            }
        },
    )?;

    let mut out = PassOutput {
        counts: vec![Vec::with_capacity(rows.len()); balls.len()],
        psr: vec![Vec::with_capacity(rows.len()); thresholds.len()],
        covered: vec![Vec::with_capacity(rows.len()); own.len()],
    };
    for row in rows {
        for (t, c) in row.counts.into_iter().enumerate() {
            out.counts[t].push(c);
        }
        for (t, p) in row.prods.into_iter().enumerate() {
            out.psr[t].push(T::one() - p);
        }
        for (t, c) in row.covered.into_iter().enumerate() {
            out.covered[t].push(c);
        }
    }
    Ok(out)
}

fn check_len(found: usize, expected: usize) -> Result<()> {
    if found != expected {
        return Err(Error::LengthMismatch { expected, found });
    }
    Ok(())
}

fn indicator<T: Scalar>(flag: bool) -> T {
    if flag {
        T::one()
    } else {
        T::zero()
    }
}

pub(crate) fn dsr_from_counts<T: Scalar>(counts: &[u32], k: usize) -> Vec<T> {
    let k = T::from_count(k);
    counts.iter().map(|&c| T::from_count(c as usize) / k).collect()
}

/// Binary scoring rule of each query against the balls of `refs`.
pub fn bsr_scores<T: Scalar>(
    queries: &EmbeddingSet<T>,
    refs: &EmbeddingSet<T>,
    radii: &KnnRadii<T>,
    plan: ChunkPlan,
) -> Result<ScoreVector<T>> {
    let pass = Pass {
        balls: vec![radii],
        ..Pass::default()
    };
    let out = run_pass(queries, refs, &pass, plan)?;
    Ok(ScoreVector {
        scores: out.counts[0].iter().map(|&c| indicator(c > 0)).collect(),
        rule: Rule::Bsr,
    })
}

/// Density scoring rule; `k` is taken from `radii`.
pub fn dsr_scores<T: Scalar>(
    queries: &EmbeddingSet<T>,
    refs: &EmbeddingSet<T>,
    radii: &KnnRadii<T>,
    plan: ChunkPlan,
) -> Result<ScoreVector<T>> {
    let pass = Pass {
        balls: vec![radii],
        ..Pass::default()
    };
    let out = run_pass(queries, refs, &pass, plan)?;
    Ok(ScoreVector {
        scores: dsr_from_counts(&out.counts[0], radii.k()),
        rule: Rule::Dsr,
    })
}

/// Coverage scoring rule: one score per real sample.
pub fn csr_scores<T: Scalar>(
    real: &EmbeddingSet<T>,
    real_radii: &KnnRadii<T>,
    fake: &EmbeddingSet<T>,
    plan: ChunkPlan,
) -> Result<ScoreVector<T>> {
    let pass = Pass {
        own_balls: vec![real_radii],
        ..Pass::default()
    };
    let out = run_pass(real, fake, &pass, plan)?;
    Ok(ScoreVector {
        scores: out.covered[0].iter().map(|&c| indicator(c)).collect(),
        rule: Rule::Csr,
    })
}

/// Probabilistic scoring rule of each query against `refs`.
pub fn psr_scores<T: Scalar>(
    queries: &EmbeddingSet<T>,
    refs: &EmbeddingSet<T>,
    threshold: &ThresholdRadius<T>,
    plan: ChunkPlan,
) -> Result<ScoreVector<T>> {
    let pass = Pass {
        thresholds: vec![threshold.value()],
        ..Pass::default()
    };
    let mut out = run_pass(queries, refs, &pass, plan)?;
    Ok(ScoreVector {
        scores: out.psr.remove(0),
        rule: Rule::Psr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(points: &[f64]) -> EmbeddingSet<f64> {
        EmbeddingSet::new(points.to_vec(), points.len(), 1, "line").unwrap()
    }

    fn plan() -> ChunkPlan {
        ChunkPlan::default()
    }

    fn radii(set: &EmbeddingSet<f64>, k: usize) -> KnnRadii<f64> {
        knn_radii(set, k, plan()).unwrap()
    }

    #[test]
    fn bsr_hand_examples() {
        let refs = line(&[0.0, 1.0, 3.0]);
        let r = radii(&refs, 1);
        let score = |q: f64| bsr_scores(&line(&[q]), &refs, &r, plan()).unwrap().scores[0];
        assert_eq!(score(1.0), 1.0);
        assert_eq!(score(5.0), 1.0); // |5 - 3| = 2 sits on the closed boundary
        assert_eq!(score(5.1), 0.0);
        assert_eq!(score(0.5), 1.0);
    }

    #[test]
    fn dsr_hand_examples() {
        let refs = line(&[0.0, 1.0, 3.0]);
        let r = radii(&refs, 1);
        let s = dsr_scores(&line(&[0.5, 50.0]), &refs, &r, plan()).unwrap();
        assert_eq!(s.scores, vec![2.0, 0.0]);
        assert_eq!(s.rule, Rule::Dsr);
        assert!(knn_radii(&line(&[1.0]), 1, plan()).is_err());
    }

    #[test]
    fn csr_hand_examples() {
        let real = line(&[0.0, 1.0, 3.0]);
        let r = radii(&real, 1);
        let s = |fake: &[f64]| csr_scores(&real, &r, &line(fake), plan()).unwrap().scores;
        assert_eq!(s(&[0.0, 1.0, 3.0]), vec![1.0, 1.0, 1.0]);
        assert_eq!(s(&[10.0]), vec![0.0, 0.0, 0.0]);
        assert_eq!(s(&[2.5]), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn membership_examples() {
        assert_eq!(membership_prob(0.0, 2.0).unwrap(), 1.0);
        assert_eq!(membership_prob(0.5, 2.0).unwrap(), 0.75);
        assert_eq!(membership_prob(2.5, 2.0).unwrap(), 0.0);
        assert_eq!(membership_prob(2.0, 2.0).unwrap(), 0.0);
        assert_eq!(membership_prob(0.0, 0.0).unwrap(), 1.0);
        assert_eq!(membership_prob(0.1, 0.0).unwrap(), 0.0);
        assert!(membership_prob(-0.1, 2.0).is_err());
        assert!(membership_prob(f64::NAN, 2.0).is_err());
    }

    #[test]
    fn threshold_examples() {
        let refs = line(&[0.0, 1.0, 3.0]);
        let r = threshold_radius(&refs, 1, 1.2, plan()).unwrap();
        assert!((r.value() - 1.6).abs() < 1e-15);
        assert_eq!((r.k(), r.a()), (1, 1.2));
        let same = line(&[2.0; 4]);
        assert_eq!(threshold_radius(&same, 2, 1.2, plan()).unwrap().value(), 0.0);
        assert!(threshold_radius(&refs, 1, 0.0, plan()).is_err());
        assert!(threshold_radius(&refs, 3, 1.2, plan()).is_err());
    }

    #[test]
    fn psr_hand_examples() {
        let refs = line(&[0.0, 1.0]);
        let r = ThresholdRadius::fixed(2.0).unwrap();
        let s = psr_scores(&line(&[0.5, 0.0, 7.0]), &refs, &r, plan()).unwrap();
        assert!((s.scores[0] - 0.9375).abs() < 1e-15);
        assert_eq!(s.scores[1], 1.0);
        assert_eq!(s.scores[2], 0.0);
    }

    #[test]
    fn psr_with_zero_radius_is_coincidence() {
        let refs = line(&[0.0, 1.0]);
        let r = ThresholdRadius::fixed(0.0).unwrap();
        let s = psr_scores(&line(&[1.0, 0.5]), &refs, &r, plan()).unwrap();
        assert_eq!(s.scores, vec![1.0, 0.0]);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let refs = line(&[0.0, 1.0, 3.0]);
        let other = radii(&line(&[0.0, 1.0]), 1);
        assert!(matches!(
            bsr_scores(&refs, &refs, &other, plan()),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(csr_scores(&refs, &other, &refs, plan()).is_err());
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let refs = line(&[0.0, 1.0, 3.0]);
        let q = EmbeddingSet::from_rows(&[[0.0, 0.0]], "q").unwrap();
        let r = radii(&refs, 1);
        assert!(matches!(
            dsr_scores(&q, &refs, &r, plan()),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
