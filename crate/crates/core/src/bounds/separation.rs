use serde::{Deserialize, Serialize};

use super::design::DesignSpec;
use super::{loglog_slope, replicate, stream_index, validate_grid, SE_MULTIPLIER};
use crate::error::{Error, Result};
use crate::predictors::{fit_linear_one_param, NNIndex};
use crate::risk::Estimate;
use crate::rng::{tag, StreamKey, StreamRng};
use crate::windows::{Dataset, WindowPair};

/// Excess linear risk allowed at sample size `n`, as a multiple of `H sigma^2 / n`.
pub const LINEAR_EXCESS_FACTOR: f64 = 50.0;

/// Out-of-sample risks of the nearest-neighbour interpolator and the fitted
/// one-parameter predictor at one training size.
///
/// Every estimate averages per-replication test means, so its standard error
/// includes the variability of the training sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationPoint {
    pub n: usize,
    pub nn_risk: Estimate,
    /// `H (x(U) - x(X_{i*(U)}))^2` part of the interpolator loss.
    pub nn_design_term: Estimate,
    /// `||eps - eps_{i*(U)}||^2` part of the interpolator loss.
    pub nn_noise_term: Estimate,
    pub linear_risk: Estimate,
    /// Mean of `loss - ||eps||^2` on the test pairs: the excess over the
    /// noise floor with the test noise subtracted pair by pair.
    pub linear_excess: Estimate,
    pub mean_coefficient: Estimate,
    /// `H sigma^2`.
    pub noise_floor: f64,
    /// `2 H sigma^2`.
    pub interpolator_floor: f64,
    /// `H sigma^2 * 50 / n`.
    pub excess_bound: f64,
    pub rejected_draws: usize,
}

impl SeparationPoint {
    pub fn interpolator_floor_holds(&self) -> bool {
        self.nn_risk.mean >= self.interpolator_floor - SE_MULTIPLIER * self.nn_risk.std_err
    }

    pub fn excess_within_bound(&self) -> bool {
        self.linear_excess.mean <= self.excess_bound
    }

    /// Interpolator risk exceeds linear risk by at least `H sigma^2 (1 - tol)`.
    pub fn separated(&self, tol: f64) -> bool {
        self.nn_risk.mean - self.linear_risk.mean >= self.noise_floor * (1.0 - tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationCurve {
    pub points: Vec<SeparationPoint>,
    /// Log-log slope of the linear excess risk against `n`.
    pub excess_slope: Option<f64>,
    pub test_windows: usize,
    pub reps: usize,
    pub seed: u64,
}

struct RepOutcome {
    nn: f64,
    design: f64,
    noise: f64,
    linear: f64,
    excess: f64,
    a: f64,
}

fn draw_pair(design: &DesignSpec, rng: &mut StreamRng, eps: &mut [f64]) -> f64 {
    let x = design.x_dist.sample(rng);
    let mut noise = design.noise_source();
    noise.fill(rng, eps);
    x
}

fn one_replication(design: &DesignSpec, n: usize, test_windows: usize, rng: &mut StreamRng) -> Option<RepOutcome> {
    let h = design.horizon;
    let mut eps = vec![0.0; h];
    let mut train_noise = Vec::with_capacity(n * h);
    let mut pairs = Vec::with_capacity(n);
    for t in 0..n {
        let x = draw_pair(design, rng, &mut eps);
        train_noise.extend_from_slice(&eps);
        pairs.push(WindowPair {
            t,
            input: vec![x],
            target: eps.iter().map(|e| x + e).collect(),
        });
    }
    let train = Dataset::from_pairs(pairs, 1, h, 1).ok()?;
    let fit = fit_linear_one_param(&train).ok()?;
    let index = NNIndex::new(&train).ok()?;

    let mut sums = RepOutcome {
        nn: 0.0,
        design: 0.0,
        noise: 0.0,
        linear: 0.0,
        excess: 0.0,
        a: fit.a,
    };
    for _ in 0..test_windows {
        let x = draw_pair(design, rng, &mut eps);
        let i = index.nearest(&[x]).expect("one-dimensional query");
        let x_nn = index.input(i)[0];
        let y_nn = index.target(i);
        let e_nn = &train_noise[i * h..(i + 1) * h];
        let lin = fit.a * x;
        let mut nn_loss = 0.0;
        let mut lin_loss = 0.0;
        let mut noise_energy = 0.0;
        let mut noise_diff = 0.0;
        for k in 0..h {
            let y = x + eps[k];
            nn_loss += (y - y_nn[k]).powi(2);
            lin_loss += (y - lin).powi(2);
            noise_energy += eps[k] * eps[k];
            noise_diff += (eps[k] - e_nn[k]).powi(2);
        }
        sums.nn += nn_loss;
        sums.design += h as f64 * (x - x_nn).powi(2);
        sums.noise += noise_diff;
        sums.linear += lin_loss;
        sums.excess += lin_loss - noise_energy;
    }
    let m = test_windows as f64;
    sums.nn /= m;
    sums.design /= m;
    sums.noise /= m;
    sums.linear /= m;
    sums.excess /= m;
    Some(sums)
}

/// Simulates training sets `Y_i = x_i 1_H + eps_i` of each size in `n_grid`,
/// fits the interpolator and the linear predictor, and scores both on
/// `test_windows` fresh pairs per replication.
pub fn check_risk_separation(
    design: &DesignSpec,
    n_grid: &[usize],
    test_windows: usize,
    reps: usize,
    seed: u64,
) -> Result<SeparationCurve> {
    design.validate()?;
    design.require_gaussian("the risk comparison")?;
    validate_grid(n_grid, 1, "risk comparison")?;
    if test_windows < 1000 {
        return Err(Error::InvalidConfig(format!("need test_windows >= 1000, got {test_windows}")));
    }
    if reps < 2 {
        return Err(Error::InvalidConfig(format!("need reps >= 2, got {reps}")));
    }
    let key = StreamKey::new(seed).lane(tag("bounds::risk_separation"));
    let floor = design.noise_energy();
    let mut points = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let lane = key.lane(n as u64);
        let (outcomes, rejected) = replicate(reps, |rep, attempt| {
            one_replication(design, n, test_windows, &mut lane.rng(stream_index(rep, attempt)))
        })?;
        let est = |f: fn(&RepOutcome) -> f64| Estimate::from_samples(&outcomes.iter().map(f).collect::<Vec<_>>());
        points.push(SeparationPoint {
            n,
            nn_risk: est(|o| o.nn)?,
            nn_design_term: est(|o| o.design)?,
            nn_noise_term: est(|o| o.noise)?,
            linear_risk: est(|o| o.linear)?,
            linear_excess: est(|o| o.excess)?,
            mean_coefficient: est(|o| o.a)?,
            noise_floor: floor,
            interpolator_floor: 2.0 * floor,
            excess_bound: floor * LINEAR_EXCESS_FACTOR / n as f64,
            rejected_draws: rejected,
        });
    }
    let excess: Vec<f64> = points.iter().map(|p| p.linear_excess.mean).collect();
    Ok(SeparationCurve {
        excess_slope: loglog_slope(n_grid, &excess),
        points,
        test_windows,
        reps,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_risks() {
        let design = DesignSpec::default().with_sigma(0.0);
        let curve = check_risk_separation(&design, &[20], 1000, 3, 2).unwrap();
        let p = &curve.points[0];
        assert!(p.linear_risk.mean < 1e-25);
        assert_eq!(p.nn_noise_term.mean, 0.0);
        assert!(p.nn_design_term.mean > 0.0);
        assert!((p.nn_risk.mean - p.nn_design_term.mean).abs() < 1e-15);
    }

    #[test]
    fn interpolator_pays_double_noise() {
        let curve = check_risk_separation(&DesignSpec::default(), &[200], 2000, 10, 8).unwrap();
        let p = &curve.points[0];
        assert!(p.interpolator_floor_holds());
        assert!(p.separated(0.2));
        assert!(p.excess_within_bound());
        assert!(p.linear_risk.mean < p.nn_risk.mean);
    }

    #[test]
    fn config_errors() {
        let d = DesignSpec::default();
        assert!(check_risk_separation(&d, &[10], 999, 5, 0).is_err());
        assert!(check_risk_separation(&d, &[10], 1000, 1, 0).is_err());
        assert!(check_risk_separation(&d, &[], 1000, 5, 0).is_err());
    }
}
