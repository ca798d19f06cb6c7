//! Sweep protocols over synthetic Gaussians and outlier pools.
//!
//! Stream paths (first element is the experiment tag):
//!
//! | experiment  | path                        | draws                         |
//! |-------------|-----------------------------|-------------------------------|
//! | shift       | `[1, run, 0]`               | static set                    |
//! | shift       | `[1, run, 1]`               | outlier row                   |
//! | shift       | `[1, run, 2, g]`            | moving set at grid point `g`  |
//! | variance    | `[2, run, 0]`, `[2, run, 2, g]` | static / scaled set       |
//! | stability   | `[3, g, run, 0 or 1]`       | real / fake at `n_grid[g]`    |
//! | stability   | `[4, run, 0 or 1]`          | reference runs at `true_n`    |
//! | replacement | `[5, run, 0 or 1]`          | inlier positions / pool order |
//! | pools       | `[6, 0 or 1]`               | inlier / outlier samples      |

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::result::{mean_std, Series, SweepResult};
use super::rng::{derive_seed, NormalStream};
use super::split::{outlier_count, split_outliers};
use super::{linspace, sample_gaussian, GaussianSpec};
use crate::embed_io::EmbeddingSet;
use crate::error::{Error, Result};
use crate::metrics::{evaluate_prepared, required_ks, Family, MetricConfig, PartialValues, PreparedSet, Sides};

const TAG_SHIFT: u64 = 1;
const TAG_VARIANCE: u64 = 2;
const TAG_STABILITY: u64 = 3;
const TAG_STABILITY_TRUE: u64 = 4;
const TAG_REPLACEMENT: u64 = 5;
const TAG_POOLS: u64 = 6;

type Set = EmbeddingSet<f64>;

/// Which set of a shift sweep moves and which one carries the outlier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    /// Real `X ~ N(0, I)` (+ outlier) is fixed, fake `Y ~ N(u 1, I)` moves.
    #[default]
    Fidelity,
    /// Fake `Y ~ N(0, I)` (+ outlier) is fixed, real `X ~ N(u 1, I)` moves.
    Diversity,
}

fn default_configs() -> Vec<MetricConfig> {
    Family::ALL.iter().map(|&f| MetricConfig::new(f)).collect()
}

/// Mean-shift sweep, optionally with one outlier row in the fixed set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftSweep {
    pub u_grid: Vec<f64>,
    pub outlier_mean: Option<f64>,
    pub role: Role,
    pub n: usize,
    pub dim: usize,
    pub runs: usize,
    pub configs: Vec<MetricConfig>,
    pub sides: Sides,
    pub seed: u64,
}

impl ShiftSweep {
    /// 25 points over [-3, 3], one run, all families at their default k.
    pub fn new(n: usize, dim: usize, seed: u64) -> Self {
        Self {
            u_grid: linspace(-3.0, 3.0, 25),
            outlier_mean: None,
            role: Role::Fidelity,
            n,
            dim,
            runs: 1,
            configs: default_configs(),
            sides: Sides::Both,
            seed,
        }
    }
}

/// Scale sweep: real `X ~ N(0, I)`, fake `Y ~ N(0, v I)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceSweep {
    pub v_grid: Vec<f64>,
    pub n: usize,
    pub dim: usize,
    pub runs: usize,
    pub configs: Vec<MetricConfig>,
    pub sides: Sides,
    pub seed: u64,
}

impl VarianceSweep {
    /// 14 points over [0.2, 1.5].
    pub fn new(n: usize, dim: usize, seed: u64) -> Self {
        Self {
            v_grid: linspace(0.2, 1.5, 14),
            n,
            dim,
            runs: 1,
            configs: default_configs(),
            sides: Sides::Both,
            seed,
        }
    }
}

/// Bias and spread of every metric on identical Gaussians versus sample
/// size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityStudy {
    pub n_grid: Vec<usize>,
    pub runs: usize,
    pub dim: usize,
    pub configs: Vec<MetricConfig>,
    pub seed: u64,
    /// Sample size of the reference runs that estimate the true value.
    pub true_n: usize,
    pub true_runs: usize,
}

impl StabilityStudy {
    pub fn new(n_grid: Vec<usize>, runs: usize, dim: usize, seed: u64) -> Self {
        Self {
            n_grid,
            runs,
            dim,
            configs: default_configs(),
            seed,
            true_n: 50_000,
            true_runs: 50,
        }
    }
}

/// A shift sweep repeated for every `k` of `k_grid`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KAblation {
    pub k_grid: Vec<usize>,
    /// Families and grids are taken from here; its `k` values are replaced.
    pub sweep: ShiftSweep,
}

/// Which set of a replacement sweep receives the outliers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Replace {
    #[default]
    Real,
    Fake,
}

/// Gradual substitution of inliers by outliers.
#[derive(Debug, Clone)]
pub struct ReplacementSweep<'a> {
    pub inliers: &'a Set,
    pub outliers: &'a Set,
    /// The untouched set on the other side.
    pub other: &'a Set,
    pub counts: Vec<usize>,
    pub target: Replace,
    pub runs: usize,
    pub configs: Vec<MetricConfig>,
    pub sides: Sides,
    pub seed: u64,
}

fn validate_common(n: usize, dim: usize, runs: usize, grid_len: usize, configs: &[MetricConfig]) -> Result<()> {
    if n == 0 || dim == 0 {
        return Err(Error::Empty { n, dim });
    }
    if runs == 0 {
        return Err(Error::InvalidParameter("runs must be at least 1".into()));
    }
    if grid_len == 0 {
        return Err(Error::InvalidParameter("sweep grid is empty".into()));
    }
    if configs.is_empty() {
        return Err(Error::InvalidParameter("no metric family requested".into()));
    }
    let max_k = configs.iter().map(|c| c.k).max().unwrap_or(0);
    if n < max_k + 1 {
        return Err(Error::InvalidK { k: max_k, n });
    }
    Ok(())
}

fn finite_grid(name: &str, grid: &[f64]) -> Result<()> {
    match grid.iter().find(|v| !v.is_finite()) {
        Some(v) => Err(Error::InvalidParameter(format!("{name} grid holds non-finite value {v}"))),
        None => Ok(()),
    }
}

fn has_duplicate_family(configs: &[MetricConfig]) -> bool {
    configs
        .iter()
        .enumerate()
        .any(|(i, c)| configs[..i].iter().any(|d| d.family == c.family))
}

/// Collects `values[run][grid][cfg]` into one series per requested metric.
fn build_series(
    configs: &[MetricConfig],
    sides: Sides,
    tag_k: bool,
    values: &[Vec<Vec<PartialValues<f64>>>],
) -> Vec<Series> {
    let grid_len = values.first().map_or(0, Vec::len);
    let mut out = Vec::new();
    for (c, cfg) in configs.iter().enumerate() {
        let (fid_name, div_name) = cfg.family.metric_names();
        let k = tag_k.then_some(cfg.k);
        let pick: [(bool, &str, fn(&PartialValues<f64>) -> Option<f64>); 2] = [
            (sides != Sides::Diversity, fid_name, |v| v.fidelity),
            (sides != Sides::Fidelity, div_name, |v| v.diversity),
        ];
        for (wanted, name, get) in pick {
            if !wanted {
                continue;
            }
            let runs = (0..grid_len)
                .map(|g| values.iter().map(|run| get(&run[g][c]).expect("side computed")).collect())
                .collect();
            out.push(Series::from_runs(cfg.family, name, k, runs));
        }
    }
    out
}

/// Runs `values[run][grid][cfg]` for a fixed set (prepared once per run)
/// against one moving set per grid point.
fn fixed_vs_moving(
    runs: usize,
    grid_len: usize,
    configs: &[MetricConfig],
    sides: Sides,
    fixed_is_real: bool,
    fixed: impl Fn(u64) -> Result<Set> + Sync,
    moving: impl Fn(u64, u64) -> Result<Set> + Sync,
) -> Result<Vec<Vec<Vec<PartialValues<f64>>>>> {
    let plan = configs[0].plan;
    let (ks_real, ks_fake) = required_ks(configs, sides);
    let (ks_fixed, ks_moving) = if fixed_is_real {
        (ks_real, ks_fake)
    } else {
        (ks_fake, ks_real)
    };
    (0..runs as u64)
        .into_par_iter()
        .map(|r| {
            let fixed_set = fixed(r)?;
            let fixed_prep = PreparedSet::new(&fixed_set, &ks_fixed, plan)?;
            (0..grid_len as u64)
                .map(|g| {
                    let moving_set = moving(r, g)?;
                    let moving_prep = PreparedSet::new(&moving_set, &ks_moving, plan)?;
                    if fixed_is_real {
                        evaluate_prepared(&fixed_prep, &moving_prep, configs, sides)
                    } else {
                        evaluate_prepared(&moving_prep, &fixed_prep, configs, sides)
                    }
                })
                .collect()
        })
        .collect()
}

fn gaussian(n: usize, dim: usize, mean: f64, var: f64, seed: u64, path: &[u64]) -> Result<Set> {
    sample_gaussian(&GaussianSpec {
        n,
        dim,
        mean,
        var,
        seed: derive_seed(seed, path),
    })
}

fn shift_sweep_tagged(sweep: &ShiftSweep, tag_k: bool) -> Result<SweepResult> {
    validate_common(sweep.n, sweep.dim, sweep.runs, sweep.u_grid.len(), &sweep.configs)?;
    finite_grid("u", &sweep.u_grid)?;
    if let Some(m) = sweep.outlier_mean {
        finite_grid("outlier mean", &[m])?;
    }
    let (n, dim, seed) = (sweep.n, sweep.dim, sweep.seed);
    let values = fixed_vs_moving(
        sweep.runs,
        sweep.u_grid.len(),
        &sweep.configs,
        sweep.sides,
        sweep.role == Role::Fidelity,
        |r| {
            let base = gaussian(n, dim, 0.0, 1.0, seed, &[TAG_SHIFT, r, 0])?;
            match sweep.outlier_mean {
                Some(m) => base.concat(&gaussian(1, dim, m, 1.0, seed, &[TAG_SHIFT, r, 1])?),
                None => Ok(base),
            }
        },
        |r, g| gaussian(n, dim, sweep.u_grid[g as usize], 1.0, seed, &[TAG_SHIFT, r, 2, g]),
    )?;
    let result = SweepResult {
        axis_name: "u".into(),
        axis_values: sweep.u_grid.clone(),
        series: build_series(&sweep.configs, sweep.sides, tag_k, &values),
        seed,
        config: to_json(sweep)?,
    };
    result.check()?;
    Ok(result)
}

/// Metrics of a fixed standard Gaussian against `N(u 1, I)` for each `u`.
///
/// With `outlier_mean = Some(m)` one row from `N(m 1, I)` is appended to the
/// fixed set, which is the real set for [`Role::Fidelity`] and the fake set
/// for [`Role::Diversity`].
pub fn shift_sweep(sweep: &ShiftSweep) -> Result<SweepResult> {
    shift_sweep_tagged(sweep, has_duplicate_family(&sweep.configs))
}

/// Metrics of `N(0, I)` (real) against `N(0, v I)` (fake) for each `v`.
pub fn variance_sweep(sweep: &VarianceSweep) -> Result<SweepResult> {
    validate_common(sweep.n, sweep.dim, sweep.runs, sweep.v_grid.len(), &sweep.configs)?;
    finite_grid("v", &sweep.v_grid)?;
    if let Some(v) = sweep.v_grid.iter().find(|&&v| v <= 0.0) {
        return Err(Error::InvalidParameter(format!("variance must be positive, got {v}")));
    }
    let (n, dim, seed) = (sweep.n, sweep.dim, sweep.seed);
    let values = fixed_vs_moving(
        sweep.runs,
        sweep.v_grid.len(),
        &sweep.configs,
        sweep.sides,
        true,
        |r| gaussian(n, dim, 0.0, 1.0, seed, &[TAG_VARIANCE, r, 0]),
        |r, g| gaussian(n, dim, 0.0, sweep.v_grid[g as usize], seed, &[TAG_VARIANCE, r, 2, g]),
    )?;
    let result = SweepResult {
        axis_name: "v".into(),
        axis_values: sweep.v_grid.clone(),
        series: build_series(&sweep.configs, sweep.sides, has_duplicate_family(&sweep.configs), &values),
        seed,
        config: to_json(sweep)?,
    };
    result.check()?;
    Ok(result)
}

fn identical_pair(n: usize, dim: usize, seed: u64, path: &[u64], configs: &[MetricConfig]) -> Result<Vec<PartialValues<f64>>> {
    let mut real_path = path.to_vec();
    real_path.push(0);
    let mut fake_path = path.to_vec();
    fake_path.push(1);
    let real = gaussian(n, dim, 0.0, 1.0, seed, &real_path)?;
    let fake = gaussian(n, dim, 0.0, 1.0, seed, &fake_path)?;
    let plan = configs[0].plan;
    let (ks_real, ks_fake) = required_ks(configs, Sides::Both);
    let real = PreparedSet::new(&real, &ks_real, plan)?;
    let fake = PreparedSet::new(&fake, &ks_fake, plan)?;
    evaluate_prepared(&real, &fake, configs, Sides::Both)
}

/// Mean, standard deviation and bias of every metric on two independent
/// samples of `N(0, I)`, per sample size.
///
/// The true value of each metric is the average over `true_runs` pairs of
/// size `true_n`. Besides the metric series (mean, std and raw runs) the
/// result holds one `<metric>_bias` series per metric, `|mean - true|`;
/// the true values are stored under `config.true_values`.
pub fn stability_bias(study: &StabilityStudy) -> Result<SweepResult> {
    let min_n = study.n_grid.iter().copied().min().unwrap_or(0);
    validate_common(min_n.max(1), study.dim, study.runs, study.n_grid.len(), &study.configs)?;
    if min_n == 0 {
        return Err(Error::Empty { n: 0, dim: study.dim });
    }
    if study.runs < 2 {
        return Err(Error::InvalidParameter("stability needs at least 2 runs".into()));
    }
    validate_common(study.true_n, study.dim, study.true_runs, 1, &study.configs)?;
    let (dim, seed, configs) = (study.dim, study.seed, &study.configs);

    let cells: Vec<(usize, usize)> = (0..study.n_grid.len())
        .flat_map(|g| (0..study.runs).map(move |r| (g, r)))
        .collect();
    let flat = cells
        .par_iter()
        .map(|&(g, r)| identical_pair(study.n_grid[g], dim, seed, &[TAG_STABILITY, g as u64, r as u64], configs))
        .collect::<Result<Vec<_>>>()?;
    // values[run][grid][cfg]
    let values: Vec<Vec<Vec<PartialValues<f64>>>> = (0..study.runs)
        .map(|r| (0..study.n_grid.len()).map(|g| flat[g * study.runs + r].clone()).collect())
        .collect();

    let truth_runs = (0..study.true_runs as u64)
        .into_par_iter()
        .map(|r| identical_pair(study.true_n, dim, seed, &[TAG_STABILITY_TRUE, r], configs))
        .collect::<Result<Vec<_>>>()?;
    let truth_of = |c: usize, fidelity: bool| {
        let v: Vec<f64> = truth_runs
            .iter()
            .map(|run| if fidelity { run[c].fidelity } else { run[c].diversity }.expect("both sides"))
            .collect();
        mean_std(&v).0
    };

    let tag_k = has_duplicate_family(configs);
    let mut series = build_series(configs, Sides::Both, tag_k, &values);
    let mut true_values = serde_json::Map::new();
    let mut bias = Vec::new();
    for (c, cfg) in configs.iter().enumerate() {
        let names = cfg.family.metric_names();
        for (fidelity, name) in [(true, names.0), (false, names.1)] {
            let truth = truth_of(c, fidelity);
            let s = series
                .iter()
                .find(|s| s.family == cfg.family && s.metric == name && s.k == tag_k.then_some(cfg.k))
                .expect("series built for every metric");
            let key = match s.k {
                Some(k) => format!("{name}@k={k}"),
                None => name.to_owned(),
            };
            true_values.insert(key, serde_json::Value::from(truth));
            bias.push(Series {
                family: cfg.family,
                metric: format!("{name}_bias"),
                k: s.k,
                values: s.values.iter().map(|m| (m - truth).abs()).collect(),
                std: None,
                runs: None,
            });
        }
    }
    series.extend(bias);

    let mut config = to_json(study)?;
    config["true_values"] = serde_json::Value::Object(true_values);
    let result = SweepResult {
        axis_name: "n".into(),
        axis_values: study.n_grid.iter().map(|&n| n as f64).collect(),
        series,
        seed,
        config,
    };
    result.check()?;
    Ok(result)
}

/// [`shift_sweep`] once per `k`, sharing every sample and distance pass.
///
/// Each series carries its `k`. A single `k` gives the same values as a
/// shift sweep configured with that `k`.
pub fn k_ablation(ablation: &KAblation) -> Result<SweepResult> {
    if ablation.k_grid.is_empty() {
        return Err(Error::InvalidParameter("k grid is empty".into()));
    }
    let mut families: Vec<MetricConfig> = Vec::new();
    for cfg in &ablation.sweep.configs {
        if !families.iter().any(|f| f.family == cfg.family) {
            families.push(*cfg);
        }
    }
    let mut sweep = ablation.sweep.clone();
    sweep.configs = ablation
        .k_grid
        .iter()
        .flat_map(|&k| families.iter().map(move |cfg| cfg.with_k(k)))
        .collect();
    let mut result = shift_sweep_tagged(&sweep, true)?;
    result.config = to_json(ablation)?;
    Ok(result)
}

/// Metric increments, relative to zero replacements, when `c` inliers of
/// the target set are swapped for `c` outliers.
///
/// Per run the inlier positions and the pool order are shuffled once; the
/// first `c` of each are paired, so larger counts extend smaller ones.
pub fn replacement_sweep(sweep: &ReplacementSweep<'_>) -> Result<SweepResult> {
    let (inliers, outliers, other) = (sweep.inliers, sweep.outliers, sweep.other);
    inliers.ensure_same_dim(outliers)?;
    inliers.ensure_same_dim(other)?;
    let max_count = sweep.counts.iter().copied().max().unwrap_or(0);
    if max_count > outliers.n() || max_count > inliers.n() {
        return Err(Error::InvalidParameter(format!(
            "cannot replace {max_count} samples: {} inliers and {} outliers available",
            inliers.n(),
            outliers.n()
        )));
    }
    validate_common(inliers.n().min(other.n()), inliers.dim(), sweep.runs, sweep.counts.len(), &sweep.configs)?;

    let configs = &sweep.configs;
    let plan = configs[0].plan;
    let (ks_real, ks_fake) = required_ks(configs, sweep.sides);
    let target_is_real = sweep.target == Replace::Real;
    let (ks_target, ks_other) = if target_is_real {
        (ks_real, ks_fake)
    } else {
        (ks_fake, ks_real)
    };
    let other_prep = PreparedSet::new(other, &ks_other, plan)?;
    let score = |set: &Set| -> Result<Vec<PartialValues<f64>>> {
        let prep = PreparedSet::new(set, &ks_target, plan)?;
        if target_is_real {
            evaluate_prepared(&prep, &other_prep, configs, sweep.sides)
        } else {
            evaluate_prepared(&other_prep, &prep, configs, sweep.sides)
        }
    };
    let baseline = score(inliers)?;

    let values = (0..sweep.runs as u64)
        .into_par_iter()
        .map(|r| {
            let mut positions: Vec<usize> = (0..inliers.n()).collect();
            NormalStream::new(derive_seed(sweep.seed, &[TAG_REPLACEMENT, r, 0])).shuffle(&mut positions);
            let mut pool: Vec<usize> = (0..outliers.n()).collect();
            NormalStream::new(derive_seed(sweep.seed, &[TAG_REPLACEMENT, r, 1])).shuffle(&mut pool);
            sweep
                .counts
                .iter()
                .map(|&c| {
                    if c == 0 {
                        return Ok(baseline.clone());
                    }
                    let mut data = inliers.as_slice().to_vec();
                    let dim = inliers.dim();
                    for (&at, &from) in positions[..c].iter().zip(&pool[..c]) {
                        data[at * dim..(at + 1) * dim].copy_from_slice(outliers.row(from));
                    }
                    score(&EmbeddingSet::new(data, inliers.n(), dim, inliers.label())?)
                })
                .map(|v| v.map(|v| increments(&v, &baseline)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut config = serde_json::json!({
        "counts": sweep.counts,
        "target": sweep.target,
        "runs": sweep.runs,
        "configs": sweep.configs,
        "sides": sweep.sides,
        "n_inliers": inliers.n(),
        "n_outliers": outliers.n(),
        "n_other": other.n(),
    });
    let tag_k = has_duplicate_family(configs);
    let base_series = build_series(configs, sweep.sides, tag_k, &[vec![baseline]]);
    config["baseline"] = base_series
        .iter()
        .map(|s| (s.label(), serde_json::Value::from(s.values[0])))
        .collect::<serde_json::Map<_, _>>()
        .into();
    let result = SweepResult {
        axis_name: "count".into(),
        axis_values: sweep.counts.iter().map(|&c| c as f64).collect(),
        series: build_series(configs, sweep.sides, tag_k, &values),
        seed: sweep.seed,
        config,
    };
    result.check()?;
    Ok(result)
}

fn increments(values: &[PartialValues<f64>], baseline: &[PartialValues<f64>]) -> Vec<PartialValues<f64>> {
    values
        .iter()
        .zip(baseline)
        .map(|(v, b)| PartialValues {
            fidelity: v.fidelity.zip(b.fidelity).map(|(v, b)| v - b),
            diversity: v.diversity.zip(b.diversity).map(|(v, b)| v - b),
            ..*v
        })
        .collect()
}

/// Inlier and outlier pools for a replacement sweep.
///
/// Without `outlier_mean`, `n` samples of `N(0, I)` are split by their
/// k-NN distance at `ratio` (the tail of the same distribution). With
/// `outlier_mean = Some(m)` the inliers are `n - ceil(ratio n)` samples of
/// `N(0, I)` and the outliers `ceil(ratio n)` samples of `N(m 1, I)`.
pub fn synthetic_pools(
    n: usize,
    dim: usize,
    ratio: f64,
    k: usize,
    outlier_mean: Option<f64>,
    seed: u64,
) -> Result<(Set, Set)> {
    match outlier_mean {
        None => {
            let all = gaussian(n, dim, 0.0, 1.0, seed, &[TAG_POOLS, 0])?;
            let split = split_outliers(&all, k, ratio, Default::default())?;
            if split.outlier_indices.is_empty() {
                return Err(Error::InvalidParameter(format!("ratio {ratio} of {n} selects no outliers")));
            }
            Ok((
                all.select(&split.inlier_indices)?.with_label("inliers"),
                all.select(&split.outlier_indices)?.with_label("outliers"),
            ))
        }
        Some(m) => {
            if !(ratio > 0.0 && ratio < 1.0) {
                return Err(Error::InvalidParameter(format!("outlier ratio must lie in (0, 1), got {ratio}")));
            }
            let n_out = outlier_count(ratio, n);
            let inliers = gaussian(n - n_out, dim, 0.0, 1.0, seed, &[TAG_POOLS, 0])?;
            let outliers = gaussian(n_out, dim, m, 1.0, seed, &[TAG_POOLS, 1])?;
            Ok((inliers.with_label("inliers"), outliers.with_label("outliers")))
        }
    }
}

fn to_json<S: Serialize>(value: &S) -> Result<serde_json::Value> {
    serde_json::to_value(value).map_err(|e| Error::Format(e.to_string()))
}
