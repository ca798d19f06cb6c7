mod args;
mod config;

use std::io::{self, Write};
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use genmetrics::embed_io::save_embeddings;
use genmetrics::metrics::scoring_gap;
use genmetrics::synthlab::{
    k_ablation, sample_gaussian, shift_sweep, split_outliers, stability_bias, variance_sweep,
    GaussianSpec, KAblation, ShiftSweep, StabilityStudy, SweepResult, VarianceSweep,
};
use genmetrics::{compute_reports, load_embeddings_auto, Embeddings, Family, Format, MetricConfig, MetricReport};

use args::{Command, ComputeArgs, GapArgs, MetricArgs, OutputFormat, SplitArgs, SweepOutput, SynthArgs};

/// Failure after the command line was accepted (bad data, I/O).
struct DataError(anyhow::Error);

fn main() -> ExitCode {
    let cli = match config::parse(std::env::args_os().collect()) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("genmetrics: cannot start {threads} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(DataError(e)) => {
            eprintln!("genmetrics: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<(), DataError> {
    let result = match command {
        Command::Compute(a) => compute(a),
        Command::SweepShift(a) => {
            let sweep = ShiftSweep {
                u_grid: a.grid.0,
                outlier_mean: a.outlier_mean,
                role: a.role.into(),
                n: a.common.n,
                dim: a.common.dim,
                runs: a.common.runs,
                configs: a.common.metrics.configs(),
                sides: a.common.sides.into(),
                seed: a.common.seed,
            };
            timed_sweep("sweep-shift", &a.common.output, || shift_sweep(&sweep))
        }
        Command::SweepVariance(a) => {
            let sweep = VarianceSweep {
                v_grid: a.grid.0,
                n: a.common.n,
                dim: a.common.dim,
                runs: a.common.runs,
                configs: a.common.metrics.configs(),
                sides: a.common.sides.into(),
                seed: a.common.seed,
            };
            timed_sweep("sweep-variance", &a.common.output, || variance_sweep(&sweep))
        }
        Command::Stability(a) => {
            let study = StabilityStudy {
                n_grid: a.n_grid,
                runs: a.runs,
                dim: a.dim,
                configs: a.metrics.configs(),
                seed: a.seed,
                true_n: a.true_n,
                true_runs: a.true_runs,
            };
            timed_sweep("stability", &a.output, || stability_bias(&study))
        }
        Command::AblateK(a) => {
            let ablation = KAblation {
                k_grid: a.k_grid,
                sweep: ShiftSweep {
                    u_grid: a.grid.0,
                    outlier_mean: a.outlier_mean,
                    role: a.role.into(),
                    n: a.common.n,
                    dim: a.common.dim,
                    runs: a.common.runs,
                    configs: a.common.metrics.configs(),
                    sides: a.common.sides.into(),
                    seed: a.common.seed,
                },
            };
            timed_sweep("ablate-k", &a.common.output, || k_ablation(&ablation))
        }
        Command::Split(a) => split(a),
        Command::Gap(a) => gap(a),
        Command::Synth(a) => synth(a),
    };
    result.map_err(DataError)
}

fn load(path: &Path) -> Result<Embeddings> {
    load_embeddings_auto(path).with_context(|| format!("cannot load {}", path.display()))
}

fn load_pair(real: &Path, fake: &Path) -> Result<(Embeddings, Embeddings)> {
    let (real, fake) = (load(real)?, load(fake)?);
    if real.dim() != fake.dim() {
        anyhow::bail!(
            "dimension mismatch: real set has dim {} but fake set has dim {}",
            real.dim(),
            fake.dim()
        );
    }
    Ok((real, fake))
}

fn compute(a: ComputeArgs) -> Result<()> {
    let (real, fake) = load_pair(&a.real, &a.fake)?;
    let mut cfgs = a.metrics.configs();
    for cfg in &mut cfgs {
        cfg.plan = a.chunk;
    }
    let reports = compute_reports(&real, &fake, &cfgs)?;
    let mut out = io::stdout().lock();
    match a.format {
        OutputFormat::Json => {
            for r in &reports {
                writeln!(out, "{}", r.to_json())?;
            }
        }
        OutputFormat::Csv => {
            writeln!(out, "{}", MetricReport::CSV_HEADER)?;
            for r in &reports {
                writeln!(out, "{}", r.to_csv_row())?;
            }
        }
    }
    Ok(())
}

fn timed_sweep(name: &str, output: &SweepOutput, run: impl FnOnce() -> genmetrics::Result<SweepResult>) -> Result<()> {
    let start = Instant::now();
    eprintln!("{name}: running");
    let result = run()?;
    let format = output.resolved_format();
    let payload = match format {
        OutputFormat::Csv => result.to_csv_string()?,
        OutputFormat::Json => result.to_json_string()? + "\n",
    };
    let target = match &output.out {
        Some(path) => {
            std::fs::write(path, payload).with_context(|| format!("cannot write {}", path.display()))?;
            path.display().to_string()
        }
        None => {
            io::stdout().lock().write_all(payload.as_bytes())?;
            "stdout".to_owned()
        }
    };
    eprintln!(
        "{name}: {} points x {} series -> {target} ({:.1}s)",
        result.axis_values.len(),
        result.series.len(),
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

fn save(set: &Embeddings, path: &Path) -> Result<()> {
    save_embeddings(set, path, Format::from_extension(path)).with_context(|| format!("cannot write {}", path.display()))
}

fn split(a: SplitArgs) -> Result<()> {
    let set = load(&a.embeddings)?;
    let k = a.k.unwrap_or_else(|| a.family.default_k());
    let s = split_outliers(&set, k, a.ratio, Default::default())?;
    save(&set.select(&s.inlier_indices)?, &a.out_inliers)?;
    // An empty set has no file representation.
    if s.outlier_indices.is_empty() {
        eprintln!("split: no outliers at ratio {}, {} not written", a.ratio, a.out_outliers.display());
    } else {
        save(&set.select(&s.outlier_indices)?, &a.out_outliers)?;
    }
    let manifest = serde_json::json!({
        "source": a.embeddings.display().to_string(),
        "n": set.n(),
        "k": k,
        "ratio": a.ratio,
        "inliers": a.out_inliers.display().to_string(),
        "outliers": a.out_outliers.display().to_string(),
        "inlier_indices": s.inlier_indices,
        "outlier_indices": s.outlier_indices,
    });
    let text = serde_json::to_string(&manifest)? + "\n";
    match &a.manifest {
        Some(path) => std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    eprintln!("split: {} inliers, {} outliers (k={k})", s.inlier_indices.len(), s.outlier_indices.len());
    Ok(())
}

fn gap(a: GapArgs) -> Result<()> {
    let (real, fake) = load_pair(&a.real, &a.fake)?;
    let pppr = MetricConfig::new(Family::Pppr).with_k(a.k).with_a(a.a).with_plan(a.chunk);
    let dc = MetricConfig::new(Family::Dc).with_k(a.dc_k).with_plan(a.chunk);
    let g = scoring_gap(&real, &fake, &pppr, &dc)?;
    let m = g.order.len();
    let rows: Vec<usize> = match (a.top, a.bottom) {
        (None, None) => g.order.clone(),
        (top, bottom) => {
            let top = top.unwrap_or(0).min(m);
            let bottom = bottom.unwrap_or(0).min(m - top);
            g.order[..top].iter().chain(&g.order[m - bottom..]).copied().collect()
        }
    };
    let mut out = io::stdout().lock();
    writeln!(out, "index,psr,dsr_normalized,gap")?;
    for i in rows {
        writeln!(
            out,
            "{i},{},{},{}",
            genmetrics::metrics::fmt_g17(g.psr[i]),
            genmetrics::metrics::fmt_g17(g.dsr_normalized[i]),
            genmetrics::metrics::fmt_g17(g.gap[i])
        )?;
    }
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    let spec = GaussianSpec {
        n: a.n,
        dim: a.dim,
        mean: a.mean,
        var: a.var,
        seed: a.seed,
    };
    let set = sample_gaussian(&spec)?;
    save(&set, &a.out)?;
    eprintln!("synth: {}x{} -> {}", set.n(), set.dim(), a.out.display());
    Ok(())
}

impl MetricArgs {
    fn configs(&self) -> Vec<MetricConfig> {
        self.families
            .iter()
            .map(|&f| {
                let mut cfg = MetricConfig::new(f).with_a(self.a);
                if let Some(k) = self.k {
                    cfg = cfg.with_k(k);
                }
                cfg
            })
            .collect()
    }
}
