//! Monte-Carlo checks of the least-squares coefficient bounds, the tail
//! inequalities behind them, the interpolator/linear risk separation and ERM
//! consistency over a finite class.
//!
//! Each replication draws from its own stream keyed by
//! `(seed, check, grid point, replication)`, and replications are reduced in
//! index order, so every report is independent of thread count.
//!
//! Two variance scales appear throughout: `sigma^2` is the per-coordinate
//! noise variance of the design, while the self-normalised bounds use the
//! conditional variance bound of the scalar innovation `xi_i`, which is
//! `sigma^2 / H` (see [`DesignSpec::xi_variance_bound`]).

mod coeff;
mod design;
mod erm;
mod separation;
mod suite;
mod tails;

use rayon::prelude::*;

pub use coeff::{estimate_coeff_mse, CoeffMseCurve, CoeffMsePoint};
pub use design::{DesignSpec, NoiseModel, XDist};
pub use erm::{check_erm_consistency, coefficient_grid, ErmCurve, ErmPoint};
pub use separation::{check_risk_separation, SeparationCurve, SeparationPoint};
pub use suite::{
    verify_bounds, BoundReport, BoundsConfig, CheckOutcome, ErmConfig, SeparationConfig, RatioTailConfig, VnTailConfig,
    ERM_SELECTION_RATE, EXCESS_SLOPE_RANGE, MSE_SLOPE_RANGE, SEPARATION_TOL,
};
pub use tails::{check_ratio_tail, check_vn_tail, RatioTailPoint, VnTailPoint};

use crate::error::{Error, Result};

/// Number of standard errors allowed by every Monte-Carlo dominance check.
pub const SE_MULTIPLIER: f64 = 3.0;

/// Largest tolerated share of degenerate (`V_n = 0`) draws.
pub const MAX_REJECTION_RATE: f64 = 0.01;

/// Runs `draw(rep, attempt)` for every replication in parallel, redrawing
/// with a fresh attempt index whenever it returns `None`.
///
/// Returns the results in replication order and the number of rejected
/// draws; more than 1% rejections is a configuration error.
pub(crate) fn replicate<T, F>(reps: usize, draw: F) -> Result<(Vec<T>, usize)>
where
    T: Send,
    F: Fn(u64, u64) -> Option<T> + Sync,
{
    let max_attempts = ((reps as f64 * MAX_REJECTION_RATE).floor() as u64) + 1;
    let results: Vec<(Option<T>, u64)> = (0..reps as u64)
        .into_par_iter()
        .map(|rep| {
            let mut attempt = 0;
            loop {
                if let Some(v) = draw(rep, attempt) {
                    return (Some(v), attempt);
                }
                attempt += 1;
                if attempt > max_attempts {
                    return (None, attempt);
                }
            }
        })
        .collect();
    let rejected: u64 = results.iter().map(|(_, a)| *a).sum();
    if rejected as f64 > MAX_REJECTION_RATE * reps as f64 || results.iter().any(|(v, _)| v.is_none()) {
        return Err(Error::InvalidConfig(format!(
            "{rejected} degenerate design draws over {reps} replications exceeds the 1% limit"
        )));
    }
    Ok((results.into_iter().map(|(v, _)| v.expect("checked")).collect(), rejected as usize))
}

/// Stream index for replication `rep`, redraw `attempt`.
pub(crate) fn stream_index(rep: u64, attempt: u64) -> u64 {
    rep | (attempt << 40)
}

/// Least-squares slope of `ln y` on `ln n`. `None` unless every `y > 0` and
/// there are at least two distinct `n`.
pub fn loglog_slope(ns: &[usize], ys: &[f64]) -> Option<f64> {
    if ns.len() != ys.len() || ns.len() < 2 || ys.iter().any(|y| !(*y > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = ns.iter().map(|n| (*n as f64).ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// `sqrt(a^2 + b^2)` for two standard errors.
pub fn combined_se(a: f64, b: f64) -> f64 {
    a.hypot(b)
}

pub(crate) fn validate_grid(ns: &[usize], min: usize, what: &str) -> Result<()> {
    if ns.is_empty() {
        return Err(Error::InvalidConfig(format!("{what}: empty n grid")));
    }
    if let Some(n) = ns.iter().find(|n| **n < min) {
        return Err(Error::InvalidConfig(format!("{what}: n = {n} is below the minimum {min}")));
    }
    Ok(())
}
