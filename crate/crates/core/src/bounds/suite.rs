use serde::{Deserialize, Serialize};

use super::coeff::{estimate_coeff_mse, CoeffMseCurve};
use super::design::DesignSpec;
use super::erm::{check_erm_consistency, coefficient_grid, ErmCurve};
use super::separation::{check_risk_separation, SeparationCurve};
use super::tails::{check_ratio_tail, check_vn_tail, RatioTailPoint, VnTailPoint};
use crate::error::Result;
use crate::rng::tag;

/// Accepted range for the log-log slope of the coefficient MSE.
pub const MSE_SLOPE_RANGE: (f64, f64) = (-1.35, -0.65);
/// Accepted range for the log-log slope of the linear excess risk.
pub const EXCESS_SLOPE_RANGE: (f64, f64) = (-1.4, -0.6);
/// Relative slack in the interpolator/linear separation `>= H sigma^2 (1 - tol)`.
pub const SEPARATION_TOL: f64 = 0.1;
/// Required frequency of selecting the best class member at the largest n.
pub const ERM_SELECTION_RATE: f64 = 0.99;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VnTailConfig {
    /// Small-ball pairs `(b, p)` certified by the design distribution.
    pub small_ball: Vec<(f64, f64)>,
    pub n_grid: Vec<usize>,
    pub eta_grid: Vec<f64>,
    pub reps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatioTailConfig {
    pub n: usize,
    pub t_grid: Vec<f64>,
    pub reps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparationConfig {
    pub n_grid: Vec<usize>,
    pub test_windows: usize,
    pub reps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErmConfig {
    pub class_size: usize,
    pub n_grid: Vec<usize>,
    pub reps: usize,
    /// Noise scale for this check; a larger value makes small-n mistakes visible.
    pub sigma: f64,
}

/// Declarative configuration of the full bound suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundsConfig {
    pub seed: u64,
    pub design: DesignSpec,
    pub mse_n_grid: Vec<usize>,
    pub mse_reps: usize,
    pub vn_tail: VnTailConfig,
    pub ratio_tail: RatioTailConfig,
    pub separation: SeparationConfig,
    pub erm: ErmConfig,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        BoundsConfig {
            seed: 20_240_601,
            design: DesignSpec::default(),
            mse_n_grid: vec![50, 100, 200, 400, 800],
            mse_reps: 5000,
            vn_tail: VnTailConfig {
                small_ball: vec![(0.5, 1.0), (1.0, 0.5)],
                n_grid: vec![1, 5, 10, 20, 50, 100],
                eta_grid: vec![0.05, 0.1, 0.2, 0.3, 0.45],
                reps: 10_000,
            },
            ratio_tail: RatioTailConfig {
                n: 200,
                t_grid: vec![0.0, 0.001, 0.002, 0.003, 0.004, 0.005, 0.006, 0.008, 0.01, 0.05],
                reps: 10_000,
            },
            separation: SeparationConfig {
                n_grid: vec![50, 100, 200, 400],
                test_windows: 2000,
                reps: 2000,
            },
            erm: ErmConfig {
                class_size: 5,
                n_grid: vec![10, 100, 1000, 10_000],
                reps: 200,
                sigma: 2.0,
            },
        }
    }
}

impl BoundsConfig {
    /// Missing fields take their default values.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| crate::error::Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// Small replication counts for smoke tests; still meets every minimum.
    pub fn quick() -> Self {
        let d = BoundsConfig::default();
        BoundsConfig {
            mse_n_grid: vec![50, 100, 200],
            mse_reps: 500,
            vn_tail: VnTailConfig {
                n_grid: vec![5, 20],
                eta_grid: vec![0.1, 0.3],
                reps: 1000,
                ..d.vn_tail
            },
            ratio_tail: RatioTailConfig {
                t_grid: vec![0.0, 0.002, 0.004, 0.008],
                reps: 1000,
                ..d.ratio_tail
            },
            separation: SeparationConfig {
                n_grid: vec![50, 200],
                test_windows: 1000,
                reps: 300,
            },
            erm: ErmConfig {
                n_grid: vec![10, 100, 1000],
                reps: 50,
                ..d.erm
            },
            ..d
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        CheckOutcome {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub seed: u64,
    pub design: DesignSpec,
    /// Per-coordinate noise variance `sigma^2`.
    pub sigma_coordinate_sq: f64,
    /// Conditional variance bound of `xi_i`, `sigma^2 / H`, used in the bounds.
    pub sigma_xi_sq: f64,
    pub coeff_mse: CoeffMseCurve,
    pub vn_tail: Vec<VnTailPoint>,
    pub ratio_tail: Vec<RatioTailPoint>,
    pub risk_separation: SeparationCurve,
    pub erm: ErmCurve,
    pub checks: Vec<CheckOutcome>,
}

impl BoundReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn in_range(x: Option<f64>, (lo, hi): (f64, f64)) -> bool {
    x.is_some_and(|s| (lo..=hi).contains(&s))
}

/// Runs every check of the suite and records pass/fail outcomes.
pub fn verify_bounds(config: &BoundsConfig) -> Result<BoundReport> {
    let design = config.design;
    design.validate()?;
    let seed = config.seed;

    let coeff_mse = estimate_coeff_mse(&design, &config.mse_n_grid, config.mse_reps, seed)?;

    let mut vn_tail = Vec::new();
    for (k, &(b, p)) in config.vn_tail.small_ball.iter().enumerate() {
        let d = design.with_small_ball(b, p);
        for &n in &config.vn_tail.n_grid {
            for &eta in config.vn_tail.eta_grid.iter().filter(|e| **e < p) {
                vn_tail.push(check_vn_tail(&d, n, eta, config.vn_tail.reps, seed ^ tag("vn") ^ k as u64)?);
            }
        }
    }

    let rt = &config.ratio_tail;
    let ratio_tail = check_ratio_tail(&design, rt.n, &rt.t_grid, rt.reps, seed)?;

    let pc = &config.separation;
    let risk_separation = check_risk_separation(&design, &pc.n_grid, pc.test_windows, pc.reps, seed)?;

    let ec = &config.erm;
    let class = coefficient_grid(ec.class_size)?;
    let erm = check_erm_consistency(&design.with_sigma(ec.sigma), &class, &ec.n_grid, ec.reps, seed)?;

    let mut checks = Vec::new();
    let undominated: Vec<usize> = coeff_mse
        .points
        .iter()
        .filter(|p| !p.dominated())
        .map(|p| p.n)
        .collect();
    checks.push(CheckOutcome::new(
        "coefficient_mse_dominated",
        undominated.is_empty(),
        format!("mse <= 4 sigma_xi^2 E[1/V_n] + 3 SE; failing n: {undominated:?}"),
    ));
    checks.push(CheckOutcome::new(
        "coefficient_mse_rate",
        in_range(coeff_mse.loglog_slope, MSE_SLOPE_RANGE),
        format!("log-log slope {:?} in {MSE_SLOPE_RANGE:?}", coeff_mse.loglog_slope),
    ));
    let asserted: Vec<&VnTailPoint> = vn_tail.iter().filter(|p| !p.vacuous).collect();
    checks.push(CheckOutcome::new(
        "vn_lower_tail",
        asserted.iter().all(|p| p.holds()),
        format!(
            "{} non-vacuous grid points, {} failing; {} vacuous points reported only",
            asserted.len(),
            asserted.iter().filter(|p| !p.holds()).count(),
            vn_tail.len() - asserted.len()
        ),
    ));
    let asserted: Vec<&RatioTailPoint> = ratio_tail.iter().filter(|p| !p.vacuous).collect();
    checks.push(CheckOutcome::new(
        "ratio_tail",
        asserted.iter().all(|p| p.holds()),
        format!(
            "{} non-vacuous t values, {} failing",
            asserted.len(),
            asserted.iter().filter(|p| !p.holds()).count()
        ),
    ));
    checks.push(CheckOutcome::new(
        "interpolator_floor",
        risk_separation.points.iter().all(|p| p.interpolator_floor_holds()),
        "nn risk >= 2 H sigma^2 - 3 SE at every n".into(),
    ));
    checks.push(CheckOutcome::new(
        "linear_excess_rate",
        in_range(risk_separation.excess_slope, EXCESS_SLOPE_RANGE),
        format!("log-log slope {:?} in {EXCESS_SLOPE_RANGE:?}", risk_separation.excess_slope),
    ));
    checks.push(CheckOutcome::new(
        "linear_excess_bound",
        risk_separation.points.iter().all(|p| p.excess_within_bound()),
        "linear excess <= H sigma^2 * 50 / n at every n".into(),
    ));
    checks.push(CheckOutcome::new(
        "separation",
        risk_separation.points.last().is_some_and(|p| p.separated(SEPARATION_TOL)),
        format!("nn - linear >= H sigma^2 (1 - {SEPARATION_TOL}) at the largest n"),
    ));
    let violations: usize = erm.points.iter().map(|p| p.violations).sum();
    checks.push(CheckOutcome::new(
        "erm_regret_chain",
        violations == 0,
        format!("{violations} replications with regret > 2 delta"),
    ));
    let last = erm.points.last().expect("validated grid");
    checks.push(CheckOutcome::new(
        "erm_consistency",
        erm.decreasing() && last.selects_best.mean >= ERM_SELECTION_RATE,
        format!(
            "delta decreasing and regret non-increasing along n; best coefficient selected in {} of replications at n = {} (need >= {ERM_SELECTION_RATE})",
            last.selects_best.mean, last.n
        ),
    ));

    Ok(BoundReport {
        seed,
        design,
        sigma_coordinate_sq: design.sigma * design.sigma,
        sigma_xi_sq: design.xi_variance_bound(),
        coeff_mse,
        vn_tail,
        ratio_tail,
        risk_separation,
        erm,
        checks,
    })
}
