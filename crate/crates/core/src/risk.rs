//! Trajectory losses, empirical risks and the comparison statistics used to
//! contrast two predictors on the same evaluation windows.
//!
//! Per-window losses may be computed in parallel but are always collected in
//! window order and reduced sequentially, so every aggregate is bit-identical
//! across thread counts.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predictors::{Forecast, Forecaster};
use crate::windows::Dataset;

/// `sum_h (target_h - forecast_h)^2`.
pub fn traj_loss(target: &[f64], forecast: &Forecast) -> Result<f64> {
    let f = forecast.values();
    if target.len() != f.len() {
        return Err(Error::InvalidInput(format!(
            "target has length {} but forecast has length {}",
            target.len(),
            f.len()
        )));
    }
    Ok(target.iter().zip(f).map(|(y, p)| (y - p) * (y - p)).sum())
}

/// Losses of one predictor on every pair, in dataset order.
pub fn losses<F: Forecaster + ?Sized>(predictor: &F, dataset: &Dataset) -> Result<Vec<f64>> {
    dataset
        .pairs
        .par_iter()
        .map(|p| traj_loss(&p.target, &predictor.forecast(p.t, &p.input)?))
        .collect()
}

/// Sample mean with its standard error (`sd / sqrt(n)`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub n: usize,
}

impl Estimate {
    /// Mean and standard error of `xs`, summed left to right.
    pub fn from_samples(xs: &[f64]) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::InsufficientData("no samples to average".into()));
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let std_err = if xs.len() > 1 {
            let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
            (ss / (n - 1.0)).sqrt() / n.sqrt()
        } else {
            0.0
        };
        Ok(Estimate {
            mean,
            std_err,
            n: xs.len(),
        })
    }

    /// Standard error of a binomial proportion `mean` over `n` trials.
    pub fn proportion(successes: usize, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InsufficientData("no trials".into()));
        }
        let p = successes as f64 / n as f64;
        Ok(Estimate {
            mean: p,
            std_err: (p * (1.0 - p) / n as f64).sqrt(),
            n,
        })
    }
}

/// Mean trajectory loss of `predictor` over `dataset`.
pub fn empirical_risk<F: Forecaster + ?Sized>(predictor: &F, dataset: &Dataset) -> Result<f64> {
    Ok(risk_estimate(predictor, dataset)?.mean)
}

pub fn risk_estimate<F: Forecaster + ?Sized>(predictor: &F, dataset: &Dataset) -> Result<Estimate> {
    if dataset.is_empty() {
        return Err(Error::InsufficientData("empirical risk over an empty dataset".into()));
    }
    Estimate::from_samples(&losses(predictor, dataset)?)
}

/// Per-window losses of several predictors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub t: usize,
    pub loss_by_predictor: BTreeMap<String, f64>,
}

pub fn loss_records(columns: &[(String, Vec<f64>)], anchors: &[usize]) -> Result<Vec<LossRecord>> {
    for (label, col) in columns {
        if col.len() != anchors.len() {
            return Err(Error::InvalidInput(format!(
                "{label}: {} losses for {} windows",
                col.len(),
                anchors.len()
            )));
        }
    }
    Ok(anchors
        .iter()
        .enumerate()
        .map(|(i, &t)| LossRecord {
            t,
            loss_by_predictor: columns.iter().map(|(l, c)| (l.clone(), c[i])).collect(),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EcdfPoint {
    pub value: f64,
    pub fraction: f64,
}

/// Right-continuous ECDF `F(x) = #{l <= x} / N` evaluated at each distinct
/// loss value.
pub fn ecdf(losses: &[f64]) -> Result<Vec<EcdfPoint>> {
    if losses.is_empty() {
        return Err(Error::InsufficientData("ECDF of an empty sample".into()));
    }
    if let Some(bad) = losses.iter().find(|l| !l.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite loss {bad}")));
    }
    let mut sorted = losses.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out: Vec<EcdfPoint> = Vec::new();
    for (i, v) in sorted.iter().enumerate() {
        let fraction = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(p) if p.value == *v => p.fraction = fraction,
            _ => out.push(EcdfPoint { value: *v, fraction }),
        }
    }
    // (i + 1) / n with i + 1 == n is exactly 1.0
    Ok(out)
}

/// Head-to-head comparison of predictor `A` against predictor `B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub labels: [String; 2],
    pub mean_risk: BTreeMap<String, Estimate>,
    pub ecdf: BTreeMap<String, Vec<EcdfPoint>>,
    /// `log10(l_A / l_B)` over windows where both losses are positive.
    pub log10_ratios: Vec<f64>,
    /// Windows left out of `log10_ratios` because a loss was exactly zero.
    pub zero_loss_windows: usize,
    /// Fraction of windows with `l_A > l_B` (strict).
    pub win_rate_a_over_b: f64,
    pub tie_fraction: f64,
    /// `mean(l_A) / mean(l_B)`; absent when `mean(l_B) == 0`.
    pub risk_ratio_a_over_b: Option<f64>,
    pub n: usize,
}

pub fn compare_report(losses_a: &[f64], losses_b: &[f64], labels: [&str; 2]) -> Result<RiskReport> {
    if losses_a.len() != losses_b.len() {
        return Err(Error::InvalidInput(format!(
            "loss sequences differ in length ({} vs {})",
            losses_a.len(),
            losses_b.len()
        )));
    }
    if losses_a.is_empty() {
        return Err(Error::InsufficientData("nothing to compare".into()));
    }
    if labels[0] == labels[1] {
        return Err(Error::InvalidInput(format!("labels must differ, got {:?} twice", labels[0])));
    }
    if let Some(bad) = losses_a.iter().chain(losses_b).find(|l| !(l.is_finite() && **l >= 0.0)) {
        return Err(Error::InvalidInput(format!("losses must be finite and >= 0, got {bad}")));
    }
    let n = losses_a.len();
    let mut wins = 0usize;
    let mut ties = 0usize;
    let mut log10_ratios = Vec::with_capacity(n);
    let mut zero_loss_windows = 0usize;
    for (a, b) in losses_a.iter().zip(losses_b) {
        if a > b {
            wins += 1;
        } else if a == b {
            ties += 1;
        }
        if *a == 0.0 || *b == 0.0 {
            zero_loss_windows += 1;
        } else {
            log10_ratios.push((a / b).log10());
        }
    }
    let est_a = Estimate::from_samples(losses_a)?;
    let est_b = Estimate::from_samples(losses_b)?;
    let risk_ratio = (est_b.mean > 0.0).then(|| est_a.mean / est_b.mean);

    let [la, lb] = labels.map(str::to_string);
    Ok(RiskReport {
        mean_risk: BTreeMap::from([(la.clone(), est_a), (lb.clone(), est_b)]),
        ecdf: BTreeMap::from([(la.clone(), ecdf(losses_a)?), (lb.clone(), ecdf(losses_b)?)]),
        labels: [la, lb],
        log10_ratios,
        zero_loss_windows,
        win_rate_a_over_b: wins as f64 / n as f64,
        tie_fraction: ties as f64 / n as f64,
        risk_ratio_a_over_b: risk_ratio,
        n,
    })
}
