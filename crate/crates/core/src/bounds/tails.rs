use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::design::{draw_moments, draw_v_n, DesignSpec};
use super::{combined_se, SE_MULTIPLIER};
use crate::error::{Error, Result};
use crate::risk::Estimate;
use crate::rng::{tag, StreamKey};

/// Lower-tail check `P(V_n <= b^2 (p - eta) n) <= exp(-2 eta^2 n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VnTailPoint {
    pub n: usize,
    pub eta: f64,
    pub b: f64,
    pub p: f64,
    pub threshold: f64,
    pub frequency: Estimate,
    pub bound: f64,
    /// The bound is `>= 1` and says nothing.
    pub vacuous: bool,
}

impl VnTailPoint {
    /// Frequency within 3 binomial standard errors of the bound. Vacuous
    /// points always hold.
    pub fn holds(&self) -> bool {
        self.vacuous || self.frequency.mean <= self.bound + SE_MULTIPLIER * self.binomial_se()
    }

    /// Binomial standard error evaluated at the bound, so that a zero observed
    /// frequency still carries a meaningful scale.
    pub fn binomial_se(&self) -> f64 {
        let p = self.frequency.mean.max(self.bound.min(1.0));
        (p * (1.0 - p) / self.frequency.n as f64).sqrt()
    }
}

pub fn check_vn_tail(design: &DesignSpec, n: usize, eta: f64, reps: usize, seed: u64) -> Result<VnTailPoint> {
    design.validate()?;
    if n == 0 {
        return Err(Error::InvalidConfig("n must be >= 1".into()));
    }
    if !(eta > 0.0 && eta < design.p) {
        return Err(Error::InvalidConfig(format!(
            "eta must lie in (0, p) = (0, {}), got {eta}",
            design.p
        )));
    }
    if reps < 1000 {
        return Err(Error::InvalidConfig(format!("V_n tail needs reps >= 1000, got {reps}")));
    }
    let threshold = design.b * design.b * (design.p - eta) * n as f64;
    // the event does not depend on eta, only the threshold does
    let lane = StreamKey::new(seed).lane(tag("bounds::vn_tail")).lane(n as u64);
    let hits: Vec<bool> = (0..reps as u64)
        .into_par_iter()
        .map(|rep| draw_v_n(design, n, &mut lane.rng(rep)) <= threshold)
        .collect();
    let count = hits.iter().filter(|h| **h).count();
    let bound = (-2.0 * eta * eta * n as f64).exp();
    Ok(VnTailPoint {
        n,
        eta,
        b: design.b,
        p: design.p,
        threshold,
        frequency: Estimate::proportion(count, reps)?,
        bound,
        vacuous: bound >= 1.0,
    })
}

/// Self-normalised tail `P(|M_n| / V_n >= t) <= 2 E[exp(-t^2 V_n / (2 sigma_xi^2))]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioTailPoint {
    pub t: f64,
    pub frequency: Estimate,
    /// Estimate of the right-hand side from an independent batch of `V_n`.
    pub bound: Estimate,
    pub vacuous: bool,
}

impl RatioTailPoint {
    pub fn holds(&self) -> bool {
        self.vacuous
            || self.frequency.mean
                <= self.bound.mean + SE_MULTIPLIER * combined_se(self.frequency.std_err, self.bound.std_err)
    }
}

pub fn check_ratio_tail(design: &DesignSpec, n: usize, t_grid: &[f64], reps: usize, seed: u64) -> Result<Vec<RatioTailPoint>> {
    design.validate()?;
    if n == 0 {
        return Err(Error::InvalidConfig("n must be >= 1".into()));
    }
    if t_grid.is_empty() || t_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::InvalidConfig(format!("t grid must be non-empty and >= 0, got {t_grid:?}")));
    }
    if reps < 1000 {
        return Err(Error::InvalidConfig(format!("ratio tail needs reps >= 1000, got {reps}")));
    }
    let sigma_sq = design.xi_variance_bound();
    if !(sigma_sq > 0.0) {
        return Err(Error::InvalidConfig("ratio tail needs sigma > 0".into()));
    }
    let key = StreamKey::new(seed).lane(tag("bounds::ratio_tail")).lane(n as u64);
    let lhs_lane = key.lane(tag("lhs"));
    let rhs_lane = key.lane(tag("rhs"));

    // |M_n| / V_n from the martingale decomposition, not from a fitted coefficient
    let ratios: Vec<f64> = (0..reps as u64)
        .into_par_iter()
        .map(|rep| {
            let m = draw_moments(design, n, &mut lhs_lane.rng(rep));
            m.m_n.abs() / m.v_n
        })
        .collect();
    let energies: Vec<f64> = (0..reps as u64)
        .into_par_iter()
        .map(|rep| draw_v_n(design, n, &mut rhs_lane.rng(rep)))
        .collect();

    t_grid
        .iter()
        .map(|&t| {
            let count = ratios.iter().filter(|r| **r >= t).count();
            let rhs: Vec<f64> = energies
                .iter()
                .map(|v| 2.0 * (-t * t * v / (2.0 * sigma_sq)).exp())
                .collect();
            let bound = Estimate::from_samples(&rhs)?;
            Ok(RatioTailPoint {
                t,
                frequency: Estimate::proportion(count, reps)?,
                vacuous: bound.mean >= 1.0,
                bound,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vn_tail_impossible_event() {
        // V_n >= n / 4 always, and the threshold is 0.25 * 0.5 * 50 = 6.25 < 12.5
        let p = check_vn_tail(&DesignSpec::default(), 50, 0.5, 2000, 3).unwrap();
        assert_eq!(p.frequency.mean, 0.0);
        assert!((p.bound - (-25f64).exp()).abs() < 1e-20);
        assert!(p.holds());
    }

    #[test]
    fn vn_tail_single_draw_is_reported() {
        let design = DesignSpec::default().with_small_ball(1.0, 0.5);
        let p = check_vn_tail(&design, 1, 0.49, 1000, 3).unwrap();
        assert!(!p.vacuous);
        assert!((0.0..=1.0).contains(&p.frequency.mean));
    }

    #[test]
    fn vn_tail_config_errors() {
        let d = DesignSpec::default().with_small_ball(1.0, 0.5);
        assert!(check_vn_tail(&d, 10, 0.5, 1000, 0).is_err());
        assert!(check_vn_tail(&d, 10, 0.0, 1000, 0).is_err());
        assert!(check_vn_tail(&d, 10, 0.1, 999, 0).is_err());
    }

    #[test]
    fn ratio_tail_at_zero_and_monotone() {
        let grid = [0.0, 0.001, 0.002, 0.004, 0.008, 0.05];
        let pts = check_ratio_tail(&DesignSpec::default(), 200, &grid, 2000, 5).unwrap();
        assert_eq!(pts[0].frequency.mean, 1.0);
        assert_eq!(pts[0].bound.mean, 2.0);
        assert!(pts[0].vacuous);
        for w in pts.windows(2) {
            assert!(w[1].frequency.mean <= w[0].frequency.mean);
        }
        assert!(pts.iter().all(RatioTailPoint::holds));
    }
}
