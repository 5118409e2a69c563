use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// Distribution of the regressor `x_i = x(X_{t_i})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum XDist {
    UniformInterval { lo: f64, hi: f64 },
    /// `x = mu + s * |Z|` with `Z` standard normal.
    AbsGaussianShifted { mu: f64, s: f64 },
}

impl XDist {
    fn validate(&self) -> Result<()> {
        match *self {
            XDist::UniformInterval { lo, hi } if lo.is_finite() && hi.is_finite() && lo < hi => Ok(()),
            XDist::AbsGaussianShifted { mu, s } if mu.is_finite() && mu >= 0.0 && s.is_finite() && s > 0.0 => Ok(()),
            other => Err(Error::InvalidConfig(format!("invalid regressor distribution {other:?}"))),
        }
    }

    pub fn sample(&self, rng: &mut StreamRng) -> f64 {
        match *self {
            XDist::UniformInterval { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            XDist::AbsGaussianShifted { mu, s } => {
                let z: f64 = StandardNormal.sample(rng);
                mu + s * z.abs()
            }
        }
    }

    /// Exact `P(|x| >= b)`.
    pub fn small_ball_probability(&self, b: f64) -> f64 {
        match *self {
            XDist::UniformInterval { lo, hi } => {
                let upper = (hi - lo.max(b)).max(0.0);
                let lower = (hi.min(-b) - lo).max(0.0);
                ((upper + lower) / (hi - lo)).min(1.0)
            }
            XDist::AbsGaussianShifted { mu, s } => {
                if b <= mu {
                    1.0
                } else {
                    let std = Normal::new(0.0, 1.0).expect("standard normal");
                    2.0 * std.sf((b - mu) / s)
                }
            }
        }
    }

    /// Exact `E[x^2]`.
    pub fn second_moment(&self) -> f64 {
        match *self {
            XDist::UniformInterval { lo, hi } => (hi.powi(3) - lo.powi(3)) / (3.0 * (hi - lo)),
            XDist::AbsGaussianShifted { mu, s } => {
                mu * mu + 2.0 * mu * s * (2.0 / std::f64::consts::PI).sqrt() + s * s
            }
        }
    }
}

/// Law of the coordinate noise `eps_{i,h}`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum NoiseModel {
    /// iid `N(0, sigma^2)`.
    #[default]
    Gaussian,
    /// Gaussian with a clustered variance `v_{i+1} = min(omega + alpha * mean_h eps_{i,h}^2 + beta * v_i, sigma^2)`.
    Heteroskedastic { omega: f64, alpha: f64, beta: f64 },
}

/// Regression design `Y_i = x_i * 1_H + eps_i` with certified small-ball
/// constants `(b, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSpec {
    pub x_dist: XDist,
    pub b: f64,
    pub p: f64,
    /// Coordinate noise scale; the scalar innovation `xi_i` then has
    /// conditional variance at most `sigma^2 / H`.
    pub sigma: f64,
    pub horizon: usize,
    #[serde(default)]
    pub noise: NoiseModel,
}

impl Default for DesignSpec {
    /// `x ~ U(0.5, 1.5)`, `b = 0.5`, `p = 1`, `sigma = 0.1`, `H = 5`.
    fn default() -> Self {
        DesignSpec {
            x_dist: XDist::UniformInterval { lo: 0.5, hi: 1.5 },
            b: 0.5,
            p: 1.0,
            sigma: 0.1,
            horizon: 5,
            noise: NoiseModel::Gaussian,
        }
    }
}

impl DesignSpec {
    pub fn with_sigma(self, sigma: f64) -> Self {
        DesignSpec { sigma, ..self }
    }

    pub fn with_small_ball(self, b: f64, p: f64) -> Self {
        DesignSpec { b, p, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        self.x_dist.validate()?;
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::InvalidConfig(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidConfig("horizon must be >= 1".into()));
        }
        if !(self.b > 0.0 && self.p > 0.0 && self.p <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "small-ball constants need b > 0 and p in (0, 1], got b={}, p={}",
                self.b, self.p
            )));
        }
        let certified = self.x_dist.small_ball_probability(self.b);
        if certified + 1e-12 < self.p {
            return Err(Error::InvalidConfig(format!(
                "P(|x| >= {}) = {certified} is below the claimed p = {}",
                self.b, self.p
            )));
        }
        if let NoiseModel::Heteroskedastic { omega, alpha, beta } = self.noise {
            if !(omega > 0.0 && alpha >= 0.0 && beta >= 0.0 && alpha + beta < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "heteroskedastic noise needs omega > 0, alpha, beta >= 0, alpha + beta < 1 (got {omega}, {alpha}, {beta})"
                )));
            }
        }
        Ok(())
    }

    /// Conditional variance bound of `xi_i`.
    pub fn xi_variance_bound(&self) -> f64 {
        self.sigma * self.sigma / self.horizon as f64
    }

    /// `E ||eps||^2 = H sigma^2` for Gaussian noise.
    pub fn noise_energy(&self) -> f64 {
        self.horizon as f64 * self.sigma * self.sigma
    }

    pub(crate) fn require_gaussian(&self, what: &str) -> Result<()> {
        match self.noise {
            NoiseModel::Gaussian => Ok(()),
            NoiseModel::Heteroskedastic { .. } => Err(Error::InvalidConfig(format!(
                "{what} is only defined for homoskedastic Gaussian noise"
            ))),
        }
    }

    pub(crate) fn noise_source(&self) -> NoiseSource {
        let cap = self.sigma * self.sigma;
        let variance = match self.noise {
            NoiseModel::Gaussian => cap,
            NoiseModel::Heteroskedastic { omega, alpha, beta } => (omega / (1.0 - alpha - beta)).min(cap),
        };
        NoiseSource {
            model: self.noise,
            cap,
            variance,
        }
    }
}

/// Stateful noise generator for one replication.
pub(crate) struct NoiseSource {
    model: NoiseModel,
    cap: f64,
    variance: f64,
}

impl NoiseSource {
    /// Fills `out` with the noise vector of the next pair.
    pub(crate) fn fill(&mut self, rng: &mut StreamRng, out: &mut [f64]) {
        let sd = self.variance.sqrt();
        for e in out.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *e = sd * z;
        }
        if let NoiseModel::Heteroskedastic { omega, alpha, beta } = self.model {
            let energy = out.iter().map(|e| e * e).sum::<f64>() / out.len() as f64;
            self.variance = (omega + alpha * energy + beta * self.variance).min(self.cap);
        }
    }
}

/// One draw of `n` training pairs in sufficient-statistic form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct DesignMoments {
    /// `sum_i x_i <Y_i, 1_H>`
    pub xy: f64,
    /// `V_n = sum_i x_i^2`
    pub v_n: f64,
    /// `M_n = sum_i x_i xi_i`
    pub m_n: f64,
    /// `sum_i ||Y_i||^2`
    pub yy: f64,
}

pub(crate) fn draw_moments(design: &DesignSpec, n: usize, rng: &mut StreamRng) -> DesignMoments {
    let mut noise = design.noise_source();
    let mut eps = vec![0.0; design.horizon];
    let mut m = DesignMoments {
        xy: 0.0,
        v_n: 0.0,
        m_n: 0.0,
        yy: 0.0,
    };
    for _ in 0..n {
        let x = design.x_dist.sample(rng);
        noise.fill(rng, &mut eps);
        let mut y_sum = 0.0;
        let mut eps_sum = 0.0;
        for e in &eps {
            let y = x + e;
            y_sum += y;
            eps_sum += e;
            m.yy += y * y;
        }
        m.xy += x * y_sum;
        m.v_n += x * x;
        m.m_n += x * (eps_sum / design.horizon as f64);
    }
    m
}

/// Only the design energy `V_n`.
pub(crate) fn draw_v_n(design: &DesignSpec, n: usize, rng: &mut StreamRng) -> f64 {
    (0..n)
        .map(|_| {
            let x = design.x_dist.sample(rng);
            x * x
        })
        .sum()
}
