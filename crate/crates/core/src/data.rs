//! Series ingestion, min-max normalization, one-step supervised pairs,
//! chronological splits and training noise.

use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use rand_pcg::Pcg64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub timestamps: Option<Vec<String>>,
    pub columns: Vec<Column>,
    pub source: String,
    /// Rows dropped while loading because a selected cell was blank or not a number.
    pub dropped_rows: usize,
}

impl TimeSeries {
    pub fn from_columns(columns: Vec<Column>, source: impl Into<String>) -> Result<Self> {
        let len = columns.first().map_or(0, |c| c.values.len());
        if columns.iter().any(|c| c.values.len() != len) {
            return Err(Error::data("columns have different lengths"));
        }
        if len < 2 {
            return Err(Error::data(format!("series needs >= 2 rows, got {len}")));
        }
        Ok(TimeSeries {
            timestamps: None,
            columns,
            source: source.into(),
            dropped_rows: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.columns.first().map_or(0, |c| c.values.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.values.as_slice())
            .ok_or_else(|| Error::config(format!("no column named '{name}'")))
    }

    /// Rows `range` of every column.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.end > self.len() || range.len() < 2 {
            return Err(Error::data(format!(
                "slice {range:?} of a {}-row series",
                self.len()
            )));
        }
        Ok(TimeSeries {
            timestamps: self.timestamps.as_ref().map(|t| t[range.clone()].to_vec()),
            columns: self
                .columns
                .iter()
                .map(|c| Column {
                    name: c.name.clone(),
                    values: c.values[range.clone()].to_vec(),
                })
                .collect(),
            source: self.source.clone(),
            dropped_rows: self.dropped_rows,
        })
    }
}

/// Reads `target` and `features` (plus an optional timestamp column) from a
/// CSV file with a header row.
pub fn load_series(
    path: &Path,
    target: &str,
    features: &[String],
    timestamp: Option<&str>,
) -> Result<TimeSeries> {
    load_series_with_delimiter(path, target, features, timestamp, b',')
}

pub fn load_series_with_delimiter(
    path: &Path,
    target: &str,
    features: &[String],
    timestamp: Option<&str>,
    delimiter: u8,
) -> Result<TimeSeries> {
    let shown = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|e| Error::io(&shown, e))?;
    read_series(file, &shown, target, features, timestamp, delimiter)
}

/// Same as [`load_series_with_delimiter`] for CSV text from any reader;
/// `source` names it in messages.
pub fn read_series(
    input: impl std::io::Read,
    source: &str,
    target: &str,
    features: &[String],
    timestamp: Option<&str>,
    delimiter: u8,
) -> Result<TimeSeries> {
    let shown = source.to_string();
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| Error::data(format!("{shown}: {e}")))?
        .clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::config(format!("{shown} has no column '{name}'")))
    };
    let mut names = vec![target.to_string()];
    for f in features {
        if !names.contains(f) {
            names.push(f.clone());
        }
    }
    let idx: Vec<usize> = names.iter().map(|n| find(n)).collect::<Result<_>>()?;
    let ts_idx = timestamp.map(find).transpose()?;

    let mut values = vec![Vec::new(); names.len()];
    let mut stamps = Vec::new();
    let mut dropped = 0;
    for record in reader.records() {
        let record = record.map_err(|e| Error::data(format!("{shown}: {e}")))?;
        let row: Option<Vec<f64>> = idx
            .iter()
            .map(|&i| {
                record
                    .get(i)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .filter(|v| v.is_finite())
            })
            .collect();
        match row {
            Some(row) => {
                for (col, v) in values.iter_mut().zip(row) {
                    col.push(v);
                }
                if let Some(t) = ts_idx {
                    stamps.push(record.get(t).unwrap_or("").to_string());
                }
            }
            None => dropped += 1,
        }
    }
    if dropped > 0 {
        log::info!("{shown}: dropped {dropped} row(s) with missing or non-numeric values");
    }
    let usable = values[0].len();
    if usable < 2 {
        return Err(Error::data(format!(
            "{shown}: {usable} usable row(s), need at least 2"
        )));
    }
    Ok(TimeSeries {
        timestamps: ts_idx.map(|_| stamps),
        columns: names
            .into_iter()
            .zip(values)
            .map(|(name, values)| Column { name, values })
            .collect(),
        source: shown,
        dropped_rows: dropped,
    })
}

/// `y_t = 0.5 + 0.4 * amplitude * sin(2 pi t / period + phase)`.
pub fn synthetic_sine(n: usize, period: f64, phase: f64, amplitude: f64) -> Result<TimeSeries> {
    let values = (0..n)
        .map(|t| {
            0.5 + 0.4 * amplitude * (2.0 * std::f64::consts::PI * t as f64 / period + phase).sin()
        })
        .collect();
    TimeSeries::from_columns(
        vec![Column {
            name: "value".into(),
            values,
        }],
        format!("synthetic sine (period {period}, phase {phase}, amplitude {amplitude})"),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub min: f64,
    pub max: f64,
}

/// Per-column min and max, in the order the columns were fitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub columns: Vec<(String, ColumnStats)>,
}

impl NormStats {
    pub fn get(&self, column: &str) -> Result<ColumnStats> {
        self.columns
            .iter()
            .find(|(n, _)| n == column)
            .map(|(_, s)| *s)
            .ok_or_else(|| Error::usage(format!("no normalization stats for '{column}'")))
    }

    pub fn normalize(&self, column: &str, x: f64) -> Result<f64> {
        let s = self.get(column)?;
        Ok((x - s.min) / (s.max - s.min))
    }

    pub fn denormalize(&self, column: &str, v: f64) -> Result<f64> {
        let s = self.get(column)?;
        Ok(v * (s.max - s.min) + s.min)
    }
}

/// How many samples go to training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitSpec {
    Ratio(f64),
    Boundary(usize),
}

impl std::str::FromStr for SplitSpec {
    type Err = Error;

    /// `ratio:0.8` or `boundary:1825`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::config(format!("split must be ratio:R or boundary:N, got '{s}'"));
        match s.split_once(':') {
            Some(("ratio", r)) => Ok(SplitSpec::Ratio(r.parse().map_err(|_| bad())?)),
            Some(("boundary", n)) => Ok(SplitSpec::Boundary(n.parse().map_err(|_| bad())?)),
            _ => Err(bad()),
        }
    }
}

impl std::fmt::Display for SplitSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SplitSpec::Ratio(r) => write!(f, "ratio:{r}"),
            SplitSpec::Boundary(n) => write!(f, "boundary:{n}"),
        }
    }
}

impl SplitSpec {
    /// Number of training samples out of `n`; both sides must stay nonempty.
    pub fn train_len(self, n: usize) -> Result<usize> {
        let k = match self {
            SplitSpec::Ratio(r) => {
                if !(r > 0.0 && r < 1.0) {
                    return Err(Error::config(format!(
                        "split ratio must be in (0, 1), got {r}"
                    )));
                }
                (r * n as f64 + 1e-9).floor() as usize
            }
            SplitSpec::Boundary(b) => b,
        };
        if k == 0 || k >= n {
            return Err(Error::config(format!(
                "split {self} leaves an empty side of {n} samples"
            )));
        }
        Ok(k)
    }
}

/// Series rows that training samples touch. Only obtainable from a split, so
/// statistics cannot be fitted on test rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FitRange {
    end: usize,
}

impl FitRange {
    /// Rows `0..=n_train - 1 + shift` of a series of `series_len` rows, i.e.
    /// the inputs and labels of the training samples.
    pub fn training(series_len: usize, split: SplitSpec, shift: usize) -> Result<Self> {
        if series_len <= shift {
            return Err(Error::data(format!(
                "series of {series_len} rows is too short for shift {shift}"
            )));
        }
        let n_train = split.train_len(series_len - shift)?;
        Ok(FitRange {
            end: n_train + shift,
        })
    }

    /// Every row, for a series that has no held-out part.
    pub fn whole(series_len: usize) -> Self {
        FitRange { end: series_len }
    }

    pub fn range(self) -> std::ops::Range<usize> {
        0..self.end
    }
}

pub fn minmax_fit(series: &TimeSeries, columns: &[String], fit: FitRange) -> Result<NormStats> {
    if fit.end > series.len() {
        return Err(Error::usage("fit range exceeds the series"));
    }
    let columns = columns
        .iter()
        .map(|name| {
            let values = &series.column(name)?[fit.range()];
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if max <= min {
                return Err(Error::data(format!(
                    "column '{name}' is constant on the fit range; cannot normalize"
                )));
            }
            Ok((name.clone(), ColumnStats { min, max }))
        })
        .collect::<Result<_>>()?;
    Ok(NormStats { columns })
}

/// Normalizes every column that has stats; others are left untouched.
pub fn minmax_apply(series: &TimeSeries, stats: &NormStats) -> Result<TimeSeries> {
    let mut out = series.clone();
    for col in &mut out.columns {
        if let Ok(s) = stats.get(&col.name) {
            for v in &mut col.values {
                *v = (*v - s.min) / (s.max - s.min);
            }
        }
    }
    Ok(out)
}

pub fn minmax_invert(values: &[f64], stats: &NormStats, column: &str) -> Result<Vec<f64>> {
    values
        .iter()
        .map(|&v| stats.denormalize(column, v))
        .collect()
}

/// Feature vectors with their next-step target values.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset {
    /// Each entry clamped to [0, 1] for encoding.
    pub inputs: Vec<Vec<f64>>,
    /// Normalized but not clamped.
    pub labels: Vec<f64>,
    pub feature_names: Vec<String>,
    pub target: String,
}

impl WindowedDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    fn subset(&self, range: std::ops::Range<usize>) -> Self {
        WindowedDataset {
            inputs: self.inputs[range.clone()].to_vec(),
            labels: self.labels[range].to_vec(),
            feature_names: self.feature_names.clone(),
            target: self.target.clone(),
        }
    }

    /// Keeps only the most recent `n` samples.
    pub fn recent(&self, n: usize) -> Self {
        self.subset(self.len().saturating_sub(n)..self.len())
    }

    /// CSV with one column per feature and a trailing label column.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = self.feature_names.clone();
        header.push(format!("{}_next", self.target));
        w.write_record(&header).map_err(csv_err)?;
        for (x, y) in self.inputs.iter().zip(&self.labels) {
            let mut row: Vec<String> = x.iter().map(|v| v.to_string()).collect();
            row.push(y.to_string());
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("csv output", e))
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::data(format!("csv: {e}"))
}

/// Sample t takes `features` at row t and `target` at row t + shift.
pub fn make_supervised(
    series: &TimeSeries,
    target: &str,
    features: &[String],
    shift: usize,
) -> Result<WindowedDataset> {
    if shift == 0 || series.len() < shift + 1 {
        return Err(Error::data(format!(
            "series of {} rows is too short for shift {shift}",
            series.len()
        )));
    }
    let n = series.len() - shift;
    let target_col = series.column(target)?;
    let cols: Vec<&[f64]> = features
        .iter()
        .map(|f| series.column(f))
        .collect::<Result<_>>()?;
    let inputs = (0..n)
        .map(|t| cols.iter().map(|c| c[t].clamp(0.0, 1.0)).collect())
        .collect();
    Ok(WindowedDataset {
        inputs,
        labels: target_col[shift..].to_vec(),
        feature_names: features.to_vec(),
        target: target.to_string(),
    })
}

pub fn chronological_split(
    dataset: &WindowedDataset,
    split: SplitSpec,
) -> Result<(WindowedDataset, WindowedDataset)> {
    let k = split.train_len(dataset.len())?;
    Ok((dataset.subset(0..k), dataset.subset(k..dataset.len())))
}

/// Adds N(0, sigma^2) to every feature value, clamping back into [0, 1].
pub fn inject_noise(dataset: &WindowedDataset, sigma: f64, seed: u64) -> Result<WindowedDataset> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::config(format!(
            "noise sigma must be >= 0, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(dataset.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::config(e.to_string()))?;
    let mut rng = Pcg64::seed_from_u64(seed);
    let mut out = dataset.clone();
    for x in out.inputs.iter_mut().flatten() {
        *x = (*x + normal.sample(&mut rng)).clamp(0.0, 1.0);
    }
    Ok(out)
}

/// Everything needed to train and evaluate on one series.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub stats: NormStats,
    pub train: WindowedDataset,
    pub test: WindowedDataset,
}

/// Fit stats on the training rows, normalize, window with a one-step shift
/// and split chronologically.
pub fn prepare(
    series: &TimeSeries,
    target: &str,
    features: &[String],
    split: SplitSpec,
) -> Result<Prepared> {
    let fit = FitRange::training(series.len(), split, 1)?;
    let mut columns = vec![target.to_string()];
    columns.extend(features.iter().filter(|f| *f != target).cloned());
    let stats = minmax_fit(series, &columns, fit)?;
    let normalized = minmax_apply(series, &stats)?;
    let windows = make_supervised(&normalized, target, features, 1)?;
    let (train, test) = chronological_split(&windows, split)?;
    Ok(Prepared { stats, train, test })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_spec_parsing() {
        assert_eq!(
            "ratio:0.8".parse::<SplitSpec>().unwrap(),
            SplitSpec::Ratio(0.8)
        );
        assert_eq!(
            "boundary:1825".parse::<SplitSpec>().unwrap(),
            SplitSpec::Boundary(1825)
        );
        assert!("half".parse::<SplitSpec>().is_err());
        assert_eq!(SplitSpec::Ratio(0.8).train_len(10).unwrap(), 8);
        assert!(SplitSpec::Ratio(1.0).train_len(10).is_err());
        assert!(SplitSpec::Boundary(10).train_len(10).is_err());
    }

    #[test]
    fn fit_range_stops_at_last_training_label() {
        let fit = FitRange::training(11, SplitSpec::Ratio(0.8), 1).unwrap();
        assert_eq!(fit.range(), 0..9);
    }
}
