use serde::{Deserialize, Serialize};

use super::design::{draw_moments, DesignSpec};
use super::{replicate, stream_index, validate_grid};
use crate::error::{Error, Result};
use crate::risk::Estimate;
use crate::rng::{tag, StreamKey};

/// `size` evenly spaced coefficients on `[0, 2]`; odd sizes contain 1.
pub fn coefficient_grid(size: usize) -> Result<Vec<f64>> {
    if size < 2 {
        return Err(Error::InvalidConfig(format!("class size must be >= 2, got {size}")));
    }
    Ok((0..size).map(|k| 2.0 * k as f64 / (size - 1) as f64).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErmPoint {
    pub n: usize,
    /// `sup_a |R_hat_n(f_a) - R(f_a)|`.
    pub delta: Estimate,
    /// `R(f_hat_n) - min_a R(f_a)`.
    pub regret: Estimate,
    /// Share of replications where ERM picked the population minimiser.
    pub selects_best: Estimate,
    /// Replications with `regret > 2 * delta`.
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErmCurve {
    pub coefficients: Vec<f64>,
    /// `R(f_a) = H sigma^2 + H (a - 1)^2 E[x^2]`.
    pub population_risks: Vec<f64>,
    pub best_index: usize,
    pub points: Vec<ErmPoint>,
    pub reps: usize,
    pub seed: u64,
}

impl ErmCurve {
    /// Mean `delta` strictly decreases and mean regret does not increase
    /// beyond 3 standard errors along the grid.
    pub fn decreasing(&self) -> bool {
        self.points.windows(2).all(|w| {
            w[1].delta.mean < w[0].delta.mean
                && w[1].regret.mean <= w[0].regret.mean + 3.0 * w[0].regret.std_err.hypot(w[1].regret.std_err)
        })
    }
}

/// First index of the smallest value.
fn argmin(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate() {
        if *x < xs[best] {
            best = i;
        }
    }
    best
}

/// Empirical risk minimisation over `{ u -> a x(u) 1_H : a in class }`
/// against the exact population risks of the design.
pub fn check_erm_consistency(design: &DesignSpec, class: &[f64], n_grid: &[usize], reps: usize, seed: u64) -> Result<ErmCurve> {
    design.validate()?;
    design.require_gaussian("ERM consistency")?;
    validate_grid(n_grid, 1, "ERM consistency")?;
    if class.is_empty() || class.iter().any(|a| !a.is_finite()) {
        return Err(Error::InvalidConfig("coefficient class must be non-empty and finite".into()));
    }
    if n_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig(format!("n grid must increase, got {n_grid:?}")));
    }
    if reps < 2 {
        return Err(Error::InvalidConfig(format!("need reps >= 2, got {reps}")));
    }
    let h = design.horizon as f64;
    let ex2 = design.x_dist.second_moment();
    let population: Vec<f64> = class
        .iter()
        .map(|a| design.noise_energy() + h * (a - 1.0).powi(2) * ex2)
        .collect();
    let best = argmin(&population);

    let key = StreamKey::new(seed).lane(tag("bounds::erm"));
    let mut points = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let lane = key.lane(n as u64);
        let (outcomes, _) = replicate(reps, |rep, attempt| {
            let m = draw_moments(design, n, &mut lane.rng(stream_index(rep, attempt)));
            // R_hat_n(f_a) = (sum ||Y||^2 - 2a sum x<Y,1> + a^2 H V_n) / n
            let empirical: Vec<f64> = class
                .iter()
                .map(|a| (m.yy - 2.0 * a * m.xy + a * a * h * m.v_n) / n as f64)
                .collect();
            let chosen = argmin(&empirical);
            let delta = empirical
                .iter()
                .zip(&population)
                .map(|(e, r)| (e - r).abs())
                .fold(0.0, f64::max);
            let regret = population[chosen] - population[best];
            Some((delta, regret, chosen == best))
        })?;
        let deltas: Vec<f64> = outcomes.iter().map(|o| o.0).collect();
        let regrets: Vec<f64> = outcomes.iter().map(|o| o.1).collect();
        let hits = outcomes.iter().filter(|o| o.2).count();
        points.push(ErmPoint {
            n,
            delta: Estimate::from_samples(&deltas)?,
            regret: Estimate::from_samples(&regrets)?,
            selects_best: Estimate::proportion(hits, reps)?,
            violations: outcomes.iter().filter(|o| o.1 > 2.0 * o.0).count(),
        });
    }
    Ok(ErmCurve {
        coefficients: class.to_vec(),
        population_risks: population,
        best_index: best,
        points,
        reps,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_point_grid() {
        assert_eq!(coefficient_grid(5).unwrap(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert!(coefficient_grid(1).is_err());
    }

    #[test]
    fn population_risk_formula() {
        let design = DesignSpec::default();
        let curve = check_erm_consistency(&design, &[0.0, 1.0], &[10], 10, 0).unwrap();
        // E[x^2] = (1.5^3 - 0.5^3) / 3 = 13/12 for U(0.5, 1.5)
        let expected0 = 5.0 * 0.01 + 5.0 * 13.0 / 12.0;
        assert!((curve.population_risks[0] - expected0).abs() < 1e-12);
        assert!((curve.population_risks[1] - 0.05).abs() < 1e-15);
        assert_eq!(curve.best_index, 1);
    }

    #[test]
    fn noiseless_large_n_has_no_regret() {
        let design = DesignSpec::default().with_sigma(0.0);
        let class = coefficient_grid(5).unwrap();
        let curve = check_erm_consistency(&design, &class, &[5000], 20, 1).unwrap();
        let p = &curve.points[0];
        assert_eq!(p.regret.mean, 0.0);
        assert_eq!(p.selects_best.mean, 1.0);
        assert_eq!(p.violations, 0);
    }

    #[test]
    fn deterministic_chain_holds_with_noise() {
        let design = DesignSpec::default().with_sigma(3.0);
        let class = coefficient_grid(5).unwrap();
        let curve = check_erm_consistency(&design, &class, &[5, 50, 500], 300, 2).unwrap();
        assert!(curve.points.iter().all(|p| p.violations == 0));
        assert!(curve.points[0].regret.mean > 0.0);
        assert!(curve.decreasing());
    }
}
