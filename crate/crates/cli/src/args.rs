use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use genmetrics::metrics::Sides;
use genmetrics::synthlab::{linspace, Role};
use genmetrics::{ChunkPlan, Family};

/// kNN fidelity and diversity metrics for embedding sets, plus seeded
/// synthetic experiments.
///
/// Exit status: 0 on success, 1 on usage errors, 2 on data errors.
#[derive(Debug, Parser)]
#[command(name = "genmetrics", version)]
pub struct Cli {
    /// Worker threads (default: all hardware threads).
    #[arg(long, global = true, env = "GENMETRICS_THREADS")]
    pub threads: Option<usize>,

    /// JSON object of flag values; explicit flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute metric reports for a real and a fake embedding file.
    Compute(ComputeArgs),
    /// Sweep the mean shift u of N(u 1, I) against N(0, I).
    SweepShift(ShiftArgs),
    /// Sweep the variance v of N(0, v I) against N(0, I).
    SweepVariance(VarianceArgs),
    /// Bias and spread of every metric on identical Gaussians per sample size.
    Stability(StabilityArgs),
    /// Repeat the shift sweep for several neighbourhood sizes.
    AblateK(AblateArgs),
    /// Split an embedding file into inliers and outliers by k-NN distance.
    Split(SplitArgs),
    /// Per-sample PSR, normalised DSR and their difference, sorted by the difference.
    Gap(GapArgs),
    /// Write a Gaussian sample to an embedding file.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SidesArg {
    Both,
    Fidelity,
    Diversity,
}

impl From<SidesArg> for Sides {
    fn from(s: SidesArg) -> Self {
        match s {
            SidesArg::Both => Sides::Both,
            SidesArg::Fidelity => Sides::Fidelity,
            SidesArg::Diversity => Sides::Diversity,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RoleArg {
    /// The outlier joins the real set; the fake set moves.
    Fidelity,
    /// The outlier joins the fake set; the real set moves.
    Diversity,
}

impl From<RoleArg> for Role {
    fn from(r: RoleArg) -> Self {
        match r {
            RoleArg::Fidelity => Role::Fidelity,
            RoleArg::Diversity => Role::Diversity,
        }
    }
}

/// Metric families and their parameters.
#[derive(Debug, Args)]
pub struct MetricArgs {
    /// Comma-separated families: ipr, dc, pppr or all.
    #[arg(long, visible_alias = "family", default_value = "all", value_parser = parse_families)]
    pub families: FamilyList,

    /// Neighbourhood size for every family (default: 3 for ipr, 5 for dc, 4 for pppr).
    #[arg(long)]
    pub k: Option<usize>,

    /// Threshold multiplier of the pppr family.
    #[arg(long, default_value_t = genmetrics::metrics::DEFAULT_A)]
    pub a: f64,
}

#[derive(Debug, Clone)]
pub struct FamilyList(pub Vec<Family>);

impl std::ops::Deref for FamilyList {
    type Target = [Family];

    fn deref(&self) -> &[Family] {
        &self.0
    }
}

fn parse_families(s: &str) -> Result<FamilyList, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim) {
        if part == "all" {
            out.extend(Family::ALL);
        } else {
            out.push(part.parse::<Family>().map_err(|e| e.to_string())?);
        }
    }
    out.dedup();
    if out.is_empty() {
        return Err("no family given".into());
    }
    Ok(FamilyList(out))
}

/// `ROWS`, `ROWSxCOLS` or `all`.
fn parse_chunk(s: &str) -> Result<ChunkPlan, String> {
    if s == "all" {
        return Ok(ChunkPlan::unchunked());
    }
    let (rows, cols) = match s.split_once('x') {
        Some((r, c)) => (r, Some(c)),
        None => (s, None),
    };
    let rows: usize = rows.parse().map_err(|_| format!("bad row chunk '{rows}'"))?;
    let cols = match cols {
        Some(c) => c.parse().map_err(|_| format!("bad column chunk '{c}'"))?,
        None => usize::MAX,
    };
    ChunkPlan::new(rows, cols).map_err(|e| e.to_string())
}

/// A float grid: `start:stop:count` (both ends included) or a comma list.
#[derive(Debug, Clone)]
pub struct Grid(pub Vec<f64>);

pub fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let grid = match parts.as_slice() {
        [start, stop, count] => {
            let start: f64 = start.parse().map_err(|_| format!("bad grid start '{start}'"))?;
            let stop: f64 = stop.parse().map_err(|_| format!("bad grid stop '{stop}'"))?;
            let count: usize = count.parse().map_err(|_| format!("bad grid count '{count}'"))?;
            linspace(start, stop, count)
        }
        [list] => list
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| format!("bad grid value '{v}'")))
            .collect::<Result<_, _>>()?,
        _ => return Err(format!("grid '{s}' is neither start:stop:count nor a comma list")),
    };
    if grid.is_empty() || grid.iter().any(|v| !v.is_finite()) {
        return Err(format!("grid '{s}' must hold finite values"));
    }
    Ok(Grid(grid))
}

/// Where and how a sweep result is written.
#[derive(Debug, Args)]
pub struct SweepOutput {
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Output format (default: json for *.json paths, csv otherwise).
    #[arg(long)]
    pub format: Option<OutputFormat>,
}

impl SweepOutput {
    pub fn resolved_format(&self) -> OutputFormat {
        self.format.unwrap_or_else(|| match self.out.as_deref().and_then(Path::extension) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => OutputFormat::Json,
            _ => OutputFormat::Csv,
        })
    }
}

#[derive(Debug, Args)]
pub struct SweepCommon {
    /// Samples per set.
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,

    #[arg(long, default_value_t = 64)]
    pub dim: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Repetitions per grid point; repeated series carry mean, std and raw runs.
    #[arg(long, default_value_t = 1)]
    pub runs: usize,

    /// Halves of each family to compute.
    #[arg(long, value_enum, default_value = "both")]
    pub sides: SidesArg,

    #[command(flatten)]
    pub metrics: MetricArgs,

    #[command(flatten)]
    pub output: SweepOutput,
}

#[derive(Debug, Args)]
pub struct ComputeArgs {
    /// Real embeddings (.npy or GMEB).
    pub real: PathBuf,

    /// Fake embeddings (.npy or GMEB).
    pub fake: PathBuf,

    #[command(flatten)]
    pub metrics: MetricArgs,

    /// Block size for distance evaluation: ROWS, ROWSxCOLS or all.
    #[arg(long, default_value = "1024", value_parser = parse_chunk)]
    pub chunk: ChunkPlan,

    /// json prints one object per line; csv prints a header and one row per family.
    #[arg(long, value_enum, default_value = "json")]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct ShiftArgs {
    /// Values of u, as start:stop:count or a comma list.
    #[arg(long, default_value = "-3:3:25", value_parser = parse_grid, allow_hyphen_values = true)]
    pub grid: Grid,

    /// Append one outlier drawn from N(m 1, I) to the fixed set.
    #[arg(long, value_name = "M", allow_hyphen_values = true)]
    pub outlier_mean: Option<f64>,

    #[arg(long, value_enum, default_value = "fidelity")]
    pub role: RoleArg,

    #[command(flatten)]
    pub common: SweepCommon,
}

#[derive(Debug, Args)]
pub struct VarianceArgs {
    /// Values of v, as start:stop:count or a comma list.
    #[arg(long, default_value = "0.2:1.5:14", value_parser = parse_grid)]
    pub grid: Grid,

    #[command(flatten)]
    pub common: SweepCommon,
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',', default_value = "1000,5000,10000")]
    pub n_grid: Vec<usize>,

    #[arg(long, default_value_t = 50)]
    pub runs: usize,

    #[arg(long, default_value_t = 64)]
    pub dim: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Sample size of the reference runs that estimate the true values.
    #[arg(long, default_value_t = 50_000)]
    pub true_n: usize,

    #[arg(long, default_value_t = 50)]
    pub true_runs: usize,

    #[command(flatten)]
    pub metrics: MetricArgs,

    #[command(flatten)]
    pub output: SweepOutput,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    /// Comma-separated neighbourhood sizes; replaces --k.
    #[arg(long, value_delimiter = ',', default_value = "2,3,5,8")]
    pub k_grid: Vec<usize>,

    /// Values of u, as start:stop:count or a comma list.
    #[arg(long, default_value = "-3:3:25", value_parser = parse_grid, allow_hyphen_values = true)]
    pub grid: Grid,

    /// Append one outlier drawn from N(m 1, I) to the fixed set.
    #[arg(long, value_name = "M", allow_hyphen_values = true)]
    pub outlier_mean: Option<f64>,

    #[arg(long, value_enum, default_value = "fidelity")]
    pub role: RoleArg,

    #[command(flatten)]
    pub common: SweepCommon,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Embedding file to split.
    pub embeddings: PathBuf,

    /// Neighbourhood size of the criterion (default: that of --family).
    #[arg(long)]
    pub k: Option<usize>,

    /// Family whose default k is used when --k is absent.
    #[arg(long, default_value = "pppr")]
    pub family: Family,

    /// Share of samples marked as outliers.
    #[arg(long, default_value_t = 0.05)]
    pub ratio: f64,

    #[arg(long)]
    pub out_inliers: PathBuf,

    #[arg(long)]
    pub out_outliers: PathBuf,

    /// Index manifest (JSON) path (default: stdout).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GapArgs {
    pub real: PathBuf,

    pub fake: PathBuf,

    /// Rows with the largest difference.
    #[arg(long)]
    pub top: Option<usize>,

    /// Rows with the smallest difference.
    #[arg(long)]
    pub bottom: Option<usize>,

    /// Neighbourhood size of the PSR threshold.
    #[arg(long, default_value_t = 4)]
    pub k: usize,

    #[arg(long, default_value_t = genmetrics::metrics::DEFAULT_A)]
    pub a: f64,

    /// Neighbourhood size of the DSR balls.
    #[arg(long, default_value_t = 5)]
    pub dc_k: usize,

    #[arg(long, default_value = "1024", value_parser = parse_chunk)]
    pub chunk: ChunkPlan,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub n: usize,

    #[arg(long)]
    pub dim: usize,

    /// Every coordinate of the mean.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub mean: f64,

    /// Per-coordinate variance.
    #[arg(long, default_value_t = 1.0)]
    pub var: f64,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Output path; .npy writes npy, anything else GMEB.
    #[arg(long)]
    pub out: PathBuf,
}
