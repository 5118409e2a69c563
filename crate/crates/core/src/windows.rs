//! Supervised (lookback, horizon) pairs and chronological splits.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::Path;

/// One forecasting instance anchored at time `t`: `input` ends at the path
/// value at `t` and `target` holds the values at `t + 1 ..= t + H`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowPair {
    pub t: usize,
    pub input: Vec<f64>,
    pub target: Vec<f64>,
}

impl WindowPair {
    /// Last coordinate of the input window.
    pub fn last_input(&self) -> f64 {
        *self.input.last().expect("windows are non-empty")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub pairs: Vec<WindowPair>,
    pub lookback: usize,
    pub horizon: usize,
    pub stride: usize,
}

impl Dataset {
    /// Builds a dataset from pairs, checking shapes and anchor order.
    pub fn from_pairs(pairs: Vec<WindowPair>, lookback: usize, horizon: usize, stride: usize) -> Result<Self> {
        if lookback == 0 || horizon == 0 || stride == 0 {
            return Err(Error::InvalidConfig(format!(
                "lookback, horizon and stride must be >= 1 (got {lookback}, {horizon}, {stride})"
            )));
        }
        for (i, p) in pairs.iter().enumerate() {
            if p.input.len() != lookback || p.target.len() != horizon {
                return Err(Error::InvalidInput(format!(
                    "pair {i} has shape ({}, {}), expected ({lookback}, {horizon})",
                    p.input.len(),
                    p.target.len()
                )));
            }
            if i > 0 && pairs[i - 1].t >= p.t {
                return Err(Error::InvalidInput(format!(
                    "anchors must be strictly increasing (pair {i} at t={} after t={})",
                    p.t,
                    pairs[i - 1].t
                )));
            }
        }
        Ok(Dataset {
            pairs,
            lookback,
            horizon,
            stride,
        })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    fn slice(&self, range: std::ops::Range<usize>) -> Dataset {
        Dataset {
            pairs: self.pairs[range].to_vec(),
            lookback: self.lookback,
            horizon: self.horizon,
            stride: self.stride,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitDataset {
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
    pub fractions: [f64; 3],
}

/// Number of pairs `make_windows` produces for a path of length `len`.
pub fn window_count(len: usize, lookback: usize, horizon: usize, stride: usize) -> usize {
    if lookback == 0 || horizon == 0 || stride == 0 || len < lookback + horizon {
        return 0;
    }
    (len - lookback - horizon) / stride + 1
}

/// Cuts `path` into pairs anchored at `t = L-1, L-1+stride, ...` while
/// `t + H < len`.
pub fn make_windows(path: &Path, lookback: usize, horizon: usize, stride: usize) -> Result<Dataset> {
    make_windows_from(&path.values, lookback, horizon, stride, 0)
}

/// Same as [`make_windows`] over a raw slice, with anchors shifted by
/// `anchor_offset` (used to keep anchors increasing across concatenated
/// sessions).
pub fn make_windows_from(
    values: &[f64],
    lookback: usize,
    horizon: usize,
    stride: usize,
    anchor_offset: usize,
) -> Result<Dataset> {
    if lookback == 0 || horizon == 0 || stride == 0 {
        return Err(Error::InvalidConfig(format!(
            "lookback, horizon and stride must be >= 1 (got {lookback}, {horizon}, {stride})"
        )));
    }
    let len = values.len();
    if len < lookback + horizon {
        return Err(Error::InsufficientData(format!(
            "path of length {len} is shorter than lookback + horizon = {}",
            lookback + horizon
        )));
    }
    let pairs = (lookback - 1..len - horizon)
        .step_by(stride)
        .map(|t| WindowPair {
            t: t + anchor_offset,
            input: values[t + 1 - lookback..=t].to_vec(),
            target: values[t + 1..=t + horizon].to_vec(),
        })
        .collect();
    Ok(Dataset {
        pairs,
        lookback,
        horizon,
        stride,
    })
}

/// Splits in time order: `floor(f_train * N)` and `floor(f_val * N)` pairs,
/// remainder to test.
pub fn chrono_split(dataset: &Dataset, fractions: [f64; 3]) -> Result<SplitDataset> {
    if dataset.is_empty() {
        return Err(Error::InsufficientData("cannot split an empty dataset".into()));
    }
    if fractions.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
        return Err(Error::InvalidConfig(format!(
            "split fractions must be positive, got {fractions:?}"
        )));
    }
    let total: f64 = fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!(
            "split fractions must sum to 1, got {total}"
        )));
    }
    let n = dataset.len();
    let n_train = (fractions[0] * n as f64).floor() as usize;
    let n_val = ((fractions[1] * n as f64).floor() as usize).min(n - n_train);
    Ok(SplitDataset {
        train: dataset.slice(0..n_train),
        val: dataset.slice(n_train..n_train + n_val),
        test: dataset.slice(n_train + n_val..n),
        fractions,
    })
}

/// One row per pair: `t, input_0..input_{L-1}, target_0..target_{H-1}`.
pub fn write_dataset_csv<W: Write>(dataset: &Dataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((0..dataset.lookback).map(|i| format!("input_{i}")));
    header.extend((0..dataset.horizon).map(|h| format!("target_{h}")));
    w.write_record(&header)?;
    for p in &dataset.pairs {
        let mut row = vec![p.t.to_string()];
        row.extend(p.input.iter().chain(&p.target).map(|v| format!("{v:?}")));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<dataset csv>", e))?;
    Ok(())
}

pub fn read_dataset_csv<R: Read>(input: R) -> Result<Dataset> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers()?.clone();
    let lookback = headers.iter().filter(|h| h.starts_with("input_")).count();
    let horizon = headers.iter().filter(|h| h.starts_with("target_")).count();
    let mut pairs = Vec::new();
    for record in reader.records() {
        let record = record?;
        let num = |i: usize| -> Result<f64> {
            let s = record.get(i).unwrap_or("");
            s.parse()
                .map_err(|_| Error::InvalidInput(format!("bad number {s:?} in dataset csv")))
        };
        let t: usize = record
            .get(0)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::InvalidInput("bad anchor column".into()))?;
        let input = (1..=lookback).map(num).collect::<Result<Vec<_>>>()?;
        let target = (lookback + 1..=lookback + horizon).map(num).collect::<Result<Vec<_>>>()?;
        pairs.push(WindowPair { t, input, target });
    }
    let stride = match pairs.as_slice() {
        [a, b, ..] => b.t - a.t,
        _ => 1,
    };
    Dataset::from_pairs(pairs, lookback, horizon, stride.max(1))
}
