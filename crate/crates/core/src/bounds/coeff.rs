use serde::{Deserialize, Serialize};

use super::design::{draw_moments, DesignSpec};
use super::{combined_se, loglog_slope, replicate, stream_index, validate_grid, SE_MULTIPLIER};
use crate::error::{Error, Result};
use crate::predictors::linear_from_moments;
use crate::risk::Estimate;
use crate::rng::{tag, StreamKey};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffMsePoint {
    pub n: usize,
    /// Monte-Carlo estimate of `E[(a_hat - 1)^2]`.
    pub mse: Estimate,
    /// Monte-Carlo estimate of `E[1 / V_n]`.
    pub inv_v_n: Estimate,
    /// `4 * sigma_xi^2 * E[1 / V_n]`.
    pub bound: f64,
    pub bound_std_err: f64,
    pub rejected_draws: usize,
}

impl CoeffMsePoint {
    /// `mse <= bound + 3 * combined SE`.
    pub fn dominated(&self) -> bool {
        self.mse.mean <= self.bound + SE_MULTIPLIER * combined_se(self.mse.std_err, self.bound_std_err)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffMseCurve {
    pub points: Vec<CoeffMsePoint>,
    /// Slope of `ln mse` against `ln n`; absent when some estimate is zero.
    pub loglog_slope: Option<f64>,
    pub reps: usize,
    pub seed: u64,
}

/// For each `n`, fits the one-parameter least-squares coefficient on `reps`
/// fresh designs and averages `(a_hat - 1)^2` and `1 / V_n`.
pub fn estimate_coeff_mse(design: &DesignSpec, n_grid: &[usize], reps: usize, seed: u64) -> Result<CoeffMseCurve> {
    design.validate()?;
    validate_grid(n_grid, 2, "coefficient mse")?;
    if reps < 100 {
        return Err(Error::InvalidConfig(format!("coefficient mse needs reps >= 100, got {reps}")));
    }
    let key = StreamKey::new(seed).lane(tag("bounds::coeff_mse"));
    let scale = 4.0 * design.xi_variance_bound();
    let mut points = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let lane = key.lane(n as u64);
        let (draws, rejected) = replicate(reps, |rep, attempt| {
            let mut rng = lane.rng(stream_index(rep, attempt));
            let m = draw_moments(design, n, &mut rng);
            let fit = linear_from_moments(m.xy, m.v_n, design.horizon, n).ok()?;
            Some(((fit.a - 1.0).powi(2), 1.0 / m.v_n))
        })?;
        let sq: Vec<f64> = draws.iter().map(|d| d.0).collect();
        let inv: Vec<f64> = draws.iter().map(|d| d.1).collect();
        let mse = Estimate::from_samples(&sq)?;
        let inv_v_n = Estimate::from_samples(&inv)?;
        points.push(CoeffMsePoint {
            n,
            mse,
            inv_v_n,
            bound: scale * inv_v_n.mean,
            bound_std_err: scale * inv_v_n.std_err,
            rejected_draws: rejected,
        });
    }
    let ys: Vec<f64> = points.iter().map(|p| p.mse.mean).collect();
    Ok(CoeffMseCurve {
        loglog_slope: loglog_slope(n_grid, &ys),
        points,
        reps,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_design_recovers_exactly() {
        let design = DesignSpec::default().with_sigma(0.0);
        let curve = estimate_coeff_mse(&design, &[10, 20], 200, 1).unwrap();
        for p in &curve.points {
            // Y_i = x_i * 1_H gives sum x_i <Y_i, 1> = H * V_n up to rounding
            assert!(p.mse.mean < 1e-28, "{}", p.mse.mean);
            assert_eq!(p.bound, 0.0);
        }
    }

    #[test]
    fn doubling_n_halves_mse() {
        let design = DesignSpec::default();
        let curve = estimate_coeff_mse(&design, &[100, 200], 5000, 17).unwrap();
        let (a, b) = (&curve.points[0].mse, &curve.points[1].mse);
        // E[(a_hat-1)^2] = sigma_xi^2 E[1/V_n], so the n=200 value is half the n=100 value
        let se = combined_se(a.std_err / 2.0, b.std_err);
        assert!((a.mean / 2.0 - b.mean).abs() <= 3.0 * se, "{} vs {}", a.mean, b.mean);
        assert!(curve.points.iter().all(CoeffMsePoint::dominated));
    }

    #[test]
    fn config_errors() {
        let d = DesignSpec::default();
        assert!(estimate_coeff_mse(&d, &[1, 10], 200, 0).is_err());
        assert!(estimate_coeff_mse(&d, &[10], 50, 0).is_err());
        assert!(estimate_coeff_mse(&d, &[], 200, 0).is_err());
    }
}
