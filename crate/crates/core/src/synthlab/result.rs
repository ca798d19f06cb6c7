use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{fmt_g17, Family};

/// One metric traced along the sweep axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub family: Family,
    /// `ip`, `ir`, `density`, `coverage`, `pp`, `pr`, or `<metric>_bias`.
    pub metric: String,
    /// Neighbourhood size, recorded when a sweep varies it.
    pub k: Option<usize>,
    /// Value per axis point (the mean when repeated).
    pub values: Vec<f64>,
    /// Sample standard deviation (n - 1) per axis point.
    pub std: Option<Vec<f64>>,
    /// Raw values, `runs[axis_index][run]`.
    pub runs: Option<Vec<Vec<f64>>>,
}

impl Series {
    pub(crate) fn from_runs(family: Family, metric: &str, k: Option<usize>, runs: Vec<Vec<f64>>) -> Self {
        if runs.iter().all(|r| r.len() == 1) {
            return Self {
                family,
                metric: metric.to_owned(),
                k,
                values: runs.iter().map(|r| r[0]).collect(),
                std: None,
                runs: None,
            };
        }
        let (values, std) = runs.iter().map(|r| mean_std(r)).unzip();
        Self {
            family,
            metric: metric.to_owned(),
            k,
            values,
            std: Some(std),
            runs: Some(runs),
        }
    }

    /// Metric label as written to CSV, e.g. `pp` or `pp@k=4`.
    pub fn label(&self) -> String {
        match self.k {
            Some(k) => format!("{}@k={k}", self.metric),
            None => self.metric.clone(),
        }
    }
}

/// Mean and sample standard deviation (n - 1 denominator; 0 for one value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Tabular output of a parameterised experiment.
///
/// CSV layout: `axis,family,metric,value`, plus `run,std` when any series
/// is repeated. Repeated series emit one row per run (`run` = index, `std`
/// empty) followed by a summary row with `run` = `mean` and the standard
/// deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis_name: String,
    pub axis_values: Vec<f64>,
    pub series: Vec<Series>,
    pub seed: u64,
    pub config: serde_json::Value,
}

impl SweepResult {
    pub fn series(&self, family: Family, metric: &str) -> Option<&Series> {
        self.series
            .iter()
            .find(|s| s.family == family && s.metric == metric)
    }

    pub fn series_k(&self, family: Family, metric: &str, k: usize) -> Option<&Series> {
        self.series
            .iter()
            .find(|s| s.family == family && s.metric == metric && s.k == Some(k))
    }

    pub(crate) fn check(&self) -> Result<()> {
        let len = self.axis_values.len();
        for s in &self.series {
            let mut lens = vec![s.values.len()];
            lens.extend(s.std.as_ref().map(Vec::len));
            lens.extend(s.runs.as_ref().map(Vec::len));
            if let Some(&bad) = lens.iter().find(|&&l| l != len) {
                return Err(Error::LengthMismatch {
                    expected: len,
                    found: bad,
                });
            }
        }
        Ok(())
    }

    pub fn has_runs(&self) -> bool {
        self.series.iter().any(|s| s.runs.is_some() || s.std.is_some())
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let with_runs = self.has_runs();
        let mut out = csv::Writer::from_writer(writer);
        let mut header = vec!["axis", "family", "metric", "value"];
        if with_runs {
            header.extend(["run", "std"]);
        }
        out.write_record(&header).map_err(csv_error)?;
        for s in &self.series {
            let label = s.label();
            for (i, &axis) in self.axis_values.iter().enumerate() {
                let base = [fmt_g17(axis), s.family.to_string(), label.clone()];
                if let Some(runs) = &s.runs {
                    for (r, &v) in runs[i].iter().enumerate() {
                        let mut row = base.to_vec();
                        row.extend([fmt_g17(v), r.to_string(), String::new()]);
                        out.write_record(&row).map_err(csv_error)?;
                    }
                }
                let mut row = base.to_vec();
                row.push(fmt_g17(s.values[i]));
                if with_runs {
                    match &s.std {
                        Some(std) => row.extend(["mean".to_owned(), fmt_g17(std[i])]),
                        None => row.extend([String::new(), String::new()]),
                    }
                }
                out.write_record(&row).map_err(csv_error)?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn to_json_string(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Format(format!("csv: {e}"))
}
