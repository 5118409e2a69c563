//! Seeded sample paths: martingale prices (constant or clustered volatility)
//! and signal-plus-noise processes with a deterministic trend/seasonal mean.
//!
//! Every path records the innovations actually drawn together with the
//! conditional mean they were added to, so downstream code can check oracle
//! identities exactly instead of statistically.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{tag, StreamKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessKind {
    GaussianRandomWalk,
    HeteroskedasticMartingale,
    StructuredSeasonal,
}

/// GARCH(1,1)-style recursion for the conditional variance of the increments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolParams {
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructureParams {
    pub amplitude: f64,
    pub period: u32,
    /// Drift per step.
    pub trend: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessModel {
    pub kind: ProcessKind,
    pub x0: f64,
    /// Per-step innovation scale.
    pub sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vol_params: Option<VolParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure_params: Option<StructureParams>,
    /// Cap on the conditional variance of the heteroskedastic kind.
    /// Defaults to `25 * sigma^2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance_cap: Option<f64>,
}

impl ProcessModel {
    pub fn random_walk(x0: f64, sigma: f64) -> Self {
        ProcessModel {
            kind: ProcessKind::GaussianRandomWalk,
            x0,
            sigma,
            vol_params: None,
            structure_params: None,
            variance_cap: None,
        }
    }

    pub fn heteroskedastic(x0: f64, sigma: f64, vol: VolParams) -> Self {
        ProcessModel {
            kind: ProcessKind::HeteroskedasticMartingale,
            vol_params: Some(vol),
            ..ProcessModel::random_walk(x0, sigma)
        }
    }

    pub fn structured(x0: f64, sigma: f64, structure: StructureParams) -> Self {
        ProcessModel {
            kind: ProcessKind::StructuredSeasonal,
            structure_params: Some(structure),
            ..ProcessModel::random_walk(x0, sigma)
        }
    }

    pub fn is_martingale(&self) -> bool {
        matches!(
            self.kind,
            ProcessKind::GaussianRandomWalk | ProcessKind::HeteroskedasticMartingale
        )
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidModel(m));
        if !self.x0.is_finite() {
            return bad(format!("x0 must be finite, got {}", self.x0));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be finite and >= 0, got {}", self.sigma));
        }
        match self.kind {
            ProcessKind::GaussianRandomWalk => Ok(()),
            ProcessKind::HeteroskedasticMartingale => {
                let Some(v) = self.vol_params else {
                    return bad("heteroskedastic kind requires vol_params".into());
                };
                if !(v.omega > 0.0) || v.alpha < 0.0 || v.beta < 0.0 {
                    return bad(format!(
                        "need omega > 0 and alpha, beta >= 0, got ({}, {}, {})",
                        v.omega, v.alpha, v.beta
                    ));
                }
                if !(v.alpha + v.beta < 1.0) {
                    return bad(format!("need alpha + beta < 1, got {}", v.alpha + v.beta));
                }
                if !(self.variance_cap() > 0.0) {
                    return bad("variance cap must be positive (set sigma > 0 or variance_cap)".into());
                }
                Ok(())
            }
            ProcessKind::StructuredSeasonal => {
                let Some(s) = self.structure_params else {
                    return bad("structured kind requires structure_params".into());
                };
                if s.period < 1 {
                    return bad("period must be >= 1".into());
                }
                if !(s.amplitude.is_finite() && s.trend.is_finite()) {
                    return bad("amplitude and trend must be finite".into());
                }
                Ok(())
            }
        }
    }

    pub fn variance_cap(&self) -> f64 {
        self.variance_cap.unwrap_or(25.0 * self.sigma * self.sigma)
    }

    /// Deterministic level `g(s) = x0 + trend * s + amplitude * sin(2 pi s / period)`
    /// of the structured kind. Returns `None` for the martingale kinds.
    pub fn structured_level(&self, s: usize) -> Option<f64> {
        let p = self.structure_params.filter(|_| self.kind == ProcessKind::StructuredSeasonal)?;
        let s = s as f64;
        Some(self.x0 + p.trend * s + p.amplitude * (2.0 * PI * s / p.period as f64).sin())
    }
}

/// A sampled or observed trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub values: Vec<f64>,
    /// `values[t + 1] - conditional_means[t]`, length `T - 1`.
    pub innovations: Option<Vec<f64>>,
    pub conditional_means: Option<Vec<f64>>,
    /// Conditional variance used to draw `innovations[t]` (heteroskedastic kind).
    pub conditional_variances: Option<Vec<f64>>,
    pub seed: u64,
    /// `None` for ingested data.
    pub model: Option<ProcessModel>,
}

impl Path {
    /// Wraps observed values without any generating model.
    pub fn observed(values: Vec<f64>) -> Self {
        Path {
            values,
            innovations: None,
            conditional_means: None,
            conditional_variances: None,
            seed: 0,
            model: None,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Draws a path of length `len` from `model`. A pure function of its
/// arguments.
pub fn simulate_path(model: &ProcessModel, len: usize, seed: u64) -> Result<Path> {
    if len < 2 {
        return Err(Error::InvalidLength(format!("path length must be >= 2, got {len}")));
    }
    model.validate()?;

    let mut rng = StreamKey::new(seed).lane(tag("sim::path")).rng(0);
    let steps = len - 1;
    let mut values = Vec::with_capacity(len);
    let mut innovations = Vec::with_capacity(steps);
    let mut means = Vec::with_capacity(steps);
    let mut variances = None;
    values.push(model.x0);

    match model.kind {
        ProcessKind::GaussianRandomWalk => {
            for t in 0..steps {
                let z: f64 = StandardNormal.sample(&mut rng);
                let eps = model.sigma * z;
                let mean = values[t];
                innovations.push(eps);
                means.push(mean);
                values.push(mean + eps);
            }
        }
        ProcessKind::HeteroskedasticMartingale => {
            let vol = model.vol_params.expect("validated");
            let cap = model.variance_cap();
            let mut v = (vol.omega / (1.0 - vol.alpha - vol.beta)).min(cap);
            let mut vs = Vec::with_capacity(steps);
            for t in 0..steps {
                let z: f64 = StandardNormal.sample(&mut rng);
                let eps = v.sqrt() * z;
                let mean = values[t];
                innovations.push(eps);
                means.push(mean);
                values.push(mean + eps);
                vs.push(v);
                v = (vol.omega + vol.alpha * eps * eps + vol.beta * v).min(cap);
            }
            variances = Some(vs);
        }
        ProcessKind::StructuredSeasonal => {
            for t in 0..steps {
                let z: f64 = StandardNormal.sample(&mut rng);
                let eps = model.sigma * z;
                let mean = model.structured_level(t + 1).expect("validated");
                innovations.push(eps);
                means.push(mean);
                values.push(mean + eps);
            }
        }
    }

    Ok(Path {
        values,
        innovations: Some(innovations),
        conditional_means: Some(means),
        conditional_variances: variances,
        seed,
        model: Some(model.clone()),
    })
}

/// First differences `R_{t+1} = X_{t+1} - X_t`.
///
/// For a martingale input the recorded innovations carry over unchanged and the
/// conditional means of the returns are identically zero. For other inputs the
/// innovations are kept and the conditional mean becomes
/// `conditional_means[t + 1] - values[t + 1]`.
pub fn path_to_returns(path: &Path) -> Result<Path> {
    let n = path.values.len();
    if n < 2 {
        return Err(Error::InvalidLength(format!(
            "need at least 2 values for returns, got {n}"
        )));
    }
    let values: Vec<f64> = path.values.windows(2).map(|w| w[1] - w[0]).collect();
    let martingale = path.model.as_ref().is_some_and(ProcessModel::is_martingale);

    let (innovations, conditional_means, conditional_variances) = match &path.innovations {
        Some(eps) if n >= 3 => {
            // return index s covers the step t = s + 1 of the level path
            let eps = eps[1..].to_vec();
            let means = if martingale {
                vec![0.0; n - 2]
            } else {
                match &path.conditional_means {
                    Some(m) => (0..n - 2).map(|s| m[s + 1] - path.values[s + 1]).collect(),
                    None => vec![0.0; n - 2],
                }
            };
            let vars = path.conditional_variances.as_ref().map(|v| v[1..].to_vec());
            (Some(eps), Some(means), vars)
        }
        _ => (None, None, None),
    };

    Ok(Path {
        values,
        innovations,
        conditional_means,
        conditional_variances,
        seed: path.seed,
        model: path.model.clone(),
    })
}

const CSV_HEADER: &str = "t,value,innovation,conditional_mean";

/// Writes `# model=<json> seed=<u64> T=<len>` followed by one row per time
/// index. Rows past the last innovation leave the innovation columns empty.
pub fn write_path_csv<W: Write>(path: &Path, mut out: W) -> Result<()> {
    let model = match &path.model {
        Some(m) => serde_json::to_string(m)?,
        None => "null".to_string(),
    };
    let io = |e| Error::io("<path csv>", e);
    writeln!(out, "# model={model} seed={} T={}", path.seed, path.values.len()).map_err(io)?;
    writeln!(out, "{CSV_HEADER}").map_err(io)?;
    for (t, v) in path.values.iter().enumerate() {
        let eps = path.innovations.as_ref().and_then(|e| e.get(t));
        let mean = path.conditional_means.as_ref().and_then(|m| m.get(t));
        let fmt = |x: Option<&f64>| x.map(|x| format!("{x:?}")).unwrap_or_default();
        writeln!(out, "{t},{v:?},{},{}", fmt(eps), fmt(mean)).map_err(io)?;
    }
    Ok(())
}

pub fn read_path_csv<R: BufRead>(input: R) -> Result<Path> {
    let mut lines = input.lines();
    let io = |e| Error::io("<path csv>", e);
    let first = lines
        .next()
        .transpose()
        .map_err(io)?
        .ok_or_else(|| Error::InsufficientData("empty path file".into()))?;
    let meta = first
        .strip_prefix("# model=")
        .ok_or_else(|| Error::InvalidInput("missing '# model=' header line".into()))?;
    let (model_json, rest) = meta
        .rsplit_once(" seed=")
        .ok_or_else(|| Error::InvalidInput("header line lacks seed".into()))?;
    let (seed, _len) = rest
        .split_once(" T=")
        .ok_or_else(|| Error::InvalidInput("header line lacks T".into()))?;
    let model: Option<ProcessModel> = serde_json::from_str(model_json)?;
    let seed: u64 = seed
        .parse()
        .map_err(|_| Error::InvalidInput(format!("bad seed {seed:?}")))?;

    let body: Vec<String> = lines.collect::<std::io::Result<_>>().map_err(io)?;
    let body = body.join("\n");
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let mut values = Vec::new();
    let mut eps = Vec::new();
    let mut means = Vec::new();
    for record in reader.records() {
        let record = record?;
        let parse = |i: usize| -> Result<Option<f64>> {
            let field = record.get(i).unwrap_or("");
            if field.is_empty() {
                return Ok(None);
            }
            field
                .parse()
                .map(Some)
                .map_err(|_| Error::InvalidInput(format!("bad number {field:?}")))
        };
        values.push(parse(1)?.ok_or_else(|| Error::InvalidInput("missing value".into()))?);
        if let Some(e) = parse(2)? {
            eps.push(e);
        }
        if let Some(m) = parse(3)? {
            means.push(m);
        }
    }
    let recorded = |v: Vec<f64>| (!v.is_empty()).then_some(v);
    Ok(Path {
        values,
        innovations: recorded(eps),
        conditional_means: recorded(means),
        conditional_variances: None,
        seed,
        model,
    })
}
