//! Hypothesis classes: flat and zero Bayes forecasts, the one-parameter
//! least-squares predictor `a * x(u) * 1_H`, exact nearest-neighbour
//! interpolators and the analytic conditional-mean oracle of simulated paths.
//!
//! `x(u)` is always the final coordinate of the input window.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{ProcessKind, ProcessModel};
use crate::windows::Dataset;

/// Forecast of the next `H` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forecast(pub Vec<f64>);

impl Forecast {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn horizon(&self) -> usize {
        self.0.len()
    }
}

fn last(window: &[f64]) -> Result<f64> {
    window
        .last()
        .copied()
        .ok_or_else(|| Error::InvalidInput("empty input window".into()))
}

fn check_horizon(horizon: usize) -> Result<()> {
    if horizon == 0 {
        return Err(Error::InvalidInput("horizon must be >= 1".into()));
    }
    Ok(())
}

/// Repeats the last observed value `horizon` times.
pub fn flat_forecast(window: &[f64], horizon: usize) -> Result<Forecast> {
    check_horizon(horizon)?;
    Ok(Forecast(vec![last(window)?; horizon]))
}

pub fn zero_forecast(horizon: usize) -> Result<Forecast> {
    check_horizon(horizon)?;
    Ok(Forecast(vec![0.0; horizon]))
}

/// Fitted member of the class `{ u -> a * x(u) * 1_H }`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearOneParam {
    pub a: f64,
    pub horizon: usize,
}

/// Closed-form least squares over the training pairs:
/// `a = sum_i x_i <Y_i, 1_H> / (H * sum_i x_i^2)`.
pub fn fit_linear_one_param(train: &Dataset) -> Result<LinearOneParam> {
    if train.is_empty() {
        return Err(Error::InsufficientData("cannot fit on an empty dataset".into()));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for pair in &train.pairs {
        let x = pair.last_input();
        num += x * pair.target.iter().sum::<f64>();
        den += x * x;
    }
    linear_from_moments(num, den, train.horizon, train.len())
}

/// Builds the estimator from `sum x_i <Y_i, 1>` and `V_n = sum x_i^2`.
pub(crate) fn linear_from_moments(num: f64, v_n: f64, horizon: usize, n: usize) -> Result<LinearOneParam> {
    if v_n == 0.0 {
        return Err(Error::DegenerateDesign { n });
    }
    let a = num / (horizon as f64 * v_n);
    if !a.is_finite() {
        return Err(Error::InvalidInput(format!("fitted coefficient is not finite ({a})")));
    }
    Ok(LinearOneParam { a, horizon })
}

pub fn linear_forecast(model: &LinearOneParam, window: &[f64]) -> Result<Forecast> {
    check_horizon(model.horizon)?;
    Ok(Forecast(vec![model.a * last(window)?; model.horizon]))
}

/// Training inputs and targets for exact nearest-neighbour search.
#[derive(Debug, Clone, PartialEq)]
pub struct NNIndex {
    lookback: usize,
    horizon: usize,
    /// Row-major `n x lookback`.
    inputs: Vec<f64>,
    /// Row-major `n x horizon`.
    targets: Vec<f64>,
}

impl NNIndex {
    pub fn new(train: &Dataset) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::InsufficientData("nearest-neighbour index needs at least one pair".into()));
        }
        let mut inputs = Vec::with_capacity(train.len() * train.lookback);
        let mut targets = Vec::with_capacity(train.len() * train.horizon);
        for p in &train.pairs {
            inputs.extend_from_slice(&p.input);
            targets.extend_from_slice(&p.target);
        }
        Ok(NNIndex {
            lookback: train.lookback,
            horizon: train.horizon,
            inputs,
            targets,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.len() / self.lookback
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn lookback(&self) -> usize {
        self.lookback
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.lookback..(i + 1) * self.lookback]
    }

    pub fn target(&self, i: usize) -> &[f64] {
        &self.targets[i * self.horizon..(i + 1) * self.horizon]
    }

    fn check_query(&self, query: &[f64]) -> Result<()> {
        if query.len() != self.lookback {
            return Err(Error::InvalidInput(format!(
                "query has length {}, index expects {}",
                query.len(),
                self.lookback
            )));
        }
        Ok(())
    }

    /// Position of the nearest training input in squared Euclidean distance.
    /// Ties go to the smallest position.
    pub fn nearest(&self, query: &[f64]) -> Result<usize> {
        self.check_query(query)?;
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, row) in self.inputs.chunks_exact(self.lookback).enumerate() {
            let d = sq_dist(row, query, best_d);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        Ok(best)
    }

    /// Positions of the `k` nearest inputs, closest first, ties by position.
    pub fn k_nearest(&self, query: &[f64], k: usize) -> Result<Vec<usize>> {
        self.check_query(query)?;
        if k == 0 {
            return Err(Error::InvalidInput("k must be >= 1".into()));
        }
        let k = k.min(self.len());
        // (distance, position), sorted ascending; lexicographic order breaks ties
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        for (i, row) in self.inputs.chunks_exact(self.lookback).enumerate() {
            let bound = if best.len() == k { best[k - 1].0 } else { f64::INFINITY };
            let d = sq_dist(row, query, bound);
            if best.len() < k || d < bound {
                let at = best.partition_point(|&(bd, _)| bd <= d);
                best.insert(at, (d, i));
                best.truncate(k);
            }
        }
        Ok(best.into_iter().map(|(_, i)| i).collect())
    }
}

/// Squared distance with early exit once the partial sum exceeds `bound`.
/// The returned value is exact whenever it is `<= bound`.
#[inline]
fn sq_dist(a: &[f64], b: &[f64], bound: f64) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
        if acc > bound {
            return acc;
        }
    }
    acc
}

/// Target of the single nearest training input.
pub fn nn_forecast(index: &NNIndex, window: &[f64]) -> Result<Forecast> {
    let i = index.nearest(window)?;
    Ok(Forecast(index.target(i).to_vec()))
}

/// Average target of the `k` nearest training inputs.
pub fn knn_forecast(index: &NNIndex, window: &[f64], k: usize) -> Result<Forecast> {
    let nearest = index.k_nearest(window, k)?;
    let mut out = vec![0.0; index.horizon];
    for &i in &nearest {
        for (o, y) in out.iter_mut().zip(index.target(i)) {
            *o += y;
        }
    }
    let k = nearest.len() as f64;
    out.iter_mut().for_each(|o| *o /= k);
    Ok(Forecast(out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMode {
    FlatMartingale,
    StructuredMean,
}

/// Conditional-mean forecast for a known generating model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSpec {
    pub model: ProcessModel,
    pub mode: OracleMode,
}

impl OracleSpec {
    pub fn new(model: ProcessModel, mode: OracleMode) -> Result<Self> {
        let spec = OracleSpec { model, mode };
        spec.validate()?;
        Ok(spec)
    }

    /// Oracle matching the kind of `model`.
    pub fn for_model(model: &ProcessModel) -> Result<Self> {
        let mode = if model.is_martingale() {
            OracleMode::FlatMartingale
        } else {
            OracleMode::StructuredMean
        };
        OracleSpec::new(model.clone(), mode)
    }

    fn validate(&self) -> Result<()> {
        match (self.mode, self.model.kind) {
            (OracleMode::StructuredMean, ProcessKind::StructuredSeasonal) if self.model.structure_params.is_some() => {
                Ok(())
            }
            (OracleMode::FlatMartingale, kind) if kind != ProcessKind::StructuredSeasonal => Ok(()),
            (mode, kind) => Err(Error::InvalidConfig(format!(
                "oracle mode {mode:?} does not match process kind {kind:?}"
            ))),
        }
    }
}

/// Bayes forecast at anchor `t`: flat for martingales, `(g(t+1), ..., g(t+H))`
/// for the structured kind.
pub fn oracle_forecast(spec: &OracleSpec, t: usize, window: &[f64], horizon: usize) -> Result<Forecast> {
    spec.validate()?;
    match spec.mode {
        OracleMode::FlatMartingale => flat_forecast(window, horizon),
        OracleMode::StructuredMean => {
            check_horizon(horizon)?;
            last(window)?;
            let values = (1..=horizon)
                .map(|h| spec.model.structured_level(t + h).expect("validated"))
                .collect();
            Ok(Forecast(values))
        }
    }
}

/// Anything that maps an anchored window to a forecast.
pub trait Forecaster: Sync {
    fn horizon(&self) -> usize;
    fn forecast(&self, t: usize, window: &[f64]) -> Result<Forecast>;
}

/// A fitted predictor from the supported families.
#[derive(Debug, Clone)]
pub enum Predictor {
    Flat { horizon: usize },
    Zero { horizon: usize },
    Linear(LinearOneParam),
    NearestNeighbor { index: NNIndex, k: usize },
    Oracle { spec: OracleSpec, horizon: usize },
}

impl Forecaster for Predictor {
    fn horizon(&self) -> usize {
        match self {
            Predictor::Flat { horizon } | Predictor::Zero { horizon } | Predictor::Oracle { horizon, .. } => *horizon,
            Predictor::Linear(m) => m.horizon,
            Predictor::NearestNeighbor { index, .. } => index.horizon(),
        }
    }

    fn forecast(&self, t: usize, window: &[f64]) -> Result<Forecast> {
        match self {
            Predictor::Flat { horizon } => flat_forecast(window, *horizon),
            Predictor::Zero { horizon } => zero_forecast(*horizon),
            Predictor::Linear(m) => linear_forecast(m, window),
            Predictor::NearestNeighbor { index, k: 1 } => nn_forecast(index, window),
            Predictor::NearestNeighbor { index, k } => knn_forecast(index, window, *k),
            Predictor::Oracle { spec, horizon } => oracle_forecast(spec, t, window, *horizon),
        }
    }
}

/// Which predictor to build, as named in experiment configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictorKind {
    Flat,
    Zero,
    Linear,
    Nn,
    Knn { k: usize },
    Oracle,
}

impl PredictorKind {
    pub fn label(&self) -> String {
        match self {
            PredictorKind::Flat => "flat".into(),
            PredictorKind::Zero => "zero".into(),
            PredictorKind::Linear => "linear".into(),
            PredictorKind::Nn => "nn".into(),
            PredictorKind::Knn { k } => format!("knn{k}"),
            PredictorKind::Oracle => "oracle".into(),
        }
    }

    /// Parses `flat`, `zero`, `linear`, `nn`, `knn<k>` or `oracle`.
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "flat" => PredictorKind::Flat,
            "zero" => PredictorKind::Zero,
            "linear" => PredictorKind::Linear,
            "nn" => PredictorKind::Nn,
            "oracle" => PredictorKind::Oracle,
            other => match other.strip_prefix("knn").map(str::parse::<usize>) {
                Some(Ok(k)) if k >= 1 => PredictorKind::Knn { k },
                _ => return Err(Error::InvalidConfig(format!("unknown predictor {other:?}"))),
            },
        })
    }

    /// Fits on `train`. The oracle needs the generating model.
    pub fn fit(&self, train: &Dataset, model: Option<&ProcessModel>) -> Result<Predictor> {
        let horizon = train.horizon;
        Ok(match *self {
            PredictorKind::Flat => Predictor::Flat { horizon },
            PredictorKind::Zero => Predictor::Zero { horizon },
            PredictorKind::Linear => Predictor::Linear(fit_linear_one_param(train)?),
            PredictorKind::Nn => Predictor::NearestNeighbor {
                index: NNIndex::new(train)?,
                k: 1,
            },
            PredictorKind::Knn { k } => Predictor::NearestNeighbor {
                index: NNIndex::new(train)?,
                k,
            },
            PredictorKind::Oracle => {
                let model = model.ok_or_else(|| {
                    Error::InvalidConfig("oracle predictor needs a simulated process".into())
                })?;
                Predictor::Oracle {
                    spec: OracleSpec::for_model(model)?,
                    horizon,
                }
            }
        })
    }
}

/// JSON document describing a fitted predictor. Nearest-neighbour predictors
/// refer to the CSV of their training dataset instead of embedding it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorDoc {
    pub kind: String,
    pub parameters: serde_json::Value,
    pub lookback: usize,
    pub horizon: usize,
}

impl Predictor {
    pub fn to_doc(&self, lookback: usize, dataset_ref: &str) -> PredictorDoc {
        use serde_json::json;
        let (kind, parameters) = match self {
            Predictor::Flat { .. } => ("flat", json!({})),
            Predictor::Zero { .. } => ("zero", json!({})),
            Predictor::Linear(m) => ("linear", json!({ "a": m.a })),
            Predictor::NearestNeighbor { index, k } => (
                "nn",
                json!({ "k": k, "dataset": dataset_ref, "n": index.len() }),
            ),
            Predictor::Oracle { spec, .. } => (
                "oracle",
                json!({ "mode": spec.mode, "model": spec.model }),
            ),
        };
        PredictorDoc {
            kind: kind.to_string(),
            parameters,
            lookback,
            horizon: self.horizon(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::StructureParams;
    use crate::windows::{Dataset, WindowPair};

    fn dataset(pairs: Vec<(Vec<f64>, Vec<f64>)>) -> Dataset {
        let lookback = pairs[0].0.len();
        let horizon = pairs[0].1.len();
        let pairs = pairs
            .into_iter()
            .enumerate()
            .map(|(t, (input, target))| WindowPair { t, input, target })
            .collect();
        Dataset::from_pairs(pairs, lookback, horizon, 1).unwrap()
    }

    #[test]
    fn flat_and_zero() {
        assert_eq!(flat_forecast(&[1.0, 2.0, 3.0], 2).unwrap().0, vec![3.0, 3.0]);
        assert_eq!(flat_forecast(&[5.0], 4).unwrap().0, vec![5.0; 4]);
        assert!(matches!(flat_forecast(&[], 2), Err(Error::InvalidInput(_))));
        assert_eq!(zero_forecast(3).unwrap().0, vec![0.0; 3]);
        assert!(matches!(zero_forecast(0), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn linear_fit_hand_value() {
        let d = dataset(vec![(vec![2.0], vec![3.0, 5.0])]);
        assert_eq!(fit_linear_one_param(&d).unwrap().a, 2.0);
    }

    #[test]
    fn linear_fit_noiseless_recovers_one() {
        let d = dataset(vec![
            (vec![0.0, 1.5], vec![1.5, 1.5, 1.5]),
            (vec![9.0, -2.0], vec![-2.0, -2.0, -2.0]),
            (vec![1.0, 0.25], vec![0.25, 0.25, 0.25]),
        ]);
        assert_eq!(fit_linear_one_param(&d).unwrap().a, 1.0);
    }

    #[test]
    fn linear_fit_degenerate() {
        let d = dataset(vec![(vec![3.0, 0.0], vec![1.0]), (vec![1.0, 0.0], vec![2.0])]);
        assert!(matches!(fit_linear_one_param(&d), Err(Error::DegenerateDesign { n: 2 })));
    }

    #[test]
    fn linear_forecast_values() {
        let one = LinearOneParam { a: 1.0, horizon: 3 };
        assert_eq!(linear_forecast(&one, &[1.0, 4.0]).unwrap(), flat_forecast(&[1.0, 4.0], 3).unwrap());
        let zero = LinearOneParam { a: 0.0, horizon: 2 };
        assert_eq!(linear_forecast(&zero, &[7.0]).unwrap().0, vec![0.0, 0.0]);
        let two = LinearOneParam { a: 2.0, horizon: 2 };
        assert_eq!(linear_forecast(&two, &[0.0, 1.5]).unwrap().0, vec![3.0, 3.0]);
        assert!(linear_forecast(&two, &[]).is_err());
    }

    #[test]
    fn nn_lookup() {
        let d = dataset(vec![(vec![0.0, 0.0], vec![1.0]), (vec![2.0, 2.0], vec![9.0])]);
        let idx = NNIndex::new(&d).unwrap();
        assert_eq!(nn_forecast(&idx, &[0.4, 0.4]).unwrap().0, vec![1.0]);
        assert_eq!(nn_forecast(&idx, &[2.0, 2.0]).unwrap().0, vec![9.0]);
        assert!(matches!(nn_forecast(&idx, &[1.0]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn nn_tie_takes_first() {
        let d = dataset(vec![
            (vec![5.0], vec![0.0]),
            (vec![1.0], vec![10.0]),
            (vec![1.0], vec![20.0]),
        ]);
        let idx = NNIndex::new(&d).unwrap();
        assert_eq!(nn_forecast(&idx, &[1.0]).unwrap().0, vec![10.0]);
        // equidistant neighbours on both sides
        assert_eq!(idx.nearest(&[3.0]).unwrap(), 0);
        assert_eq!(idx.k_nearest(&[1.0], 2).unwrap(), vec![1, 2]);
    }

    #[test]
    fn knn_averages() {
        let d = dataset(vec![
            (vec![0.0], vec![2.0]),
            (vec![1.0], vec![4.0]),
            (vec![10.0], vec![100.0]),
        ]);
        let idx = NNIndex::new(&d).unwrap();
        assert_eq!(knn_forecast(&idx, &[0.4], 2).unwrap().0, vec![3.0]);
        assert_eq!(knn_forecast(&idx, &[0.4], 1).unwrap(), nn_forecast(&idx, &[0.4]).unwrap());
        assert_eq!(idx.k_nearest(&[0.0], 10).unwrap().len(), 3);
    }

    #[test]
    fn oracle_modes() {
        let walk = ProcessModel::random_walk(1.0, 0.1);
        let spec = OracleSpec::for_model(&walk).unwrap();
        assert_eq!(spec.mode, OracleMode::FlatMartingale);
        assert_eq!(oracle_forecast(&spec, 9, &[1.0, 2.5], 3).unwrap().0, vec![2.5; 3]);

        let trend = ProcessModel::structured(
            0.0,
            0.0,
            StructureParams {
                amplitude: 0.0,
                period: 1,
                trend: 1.0,
            },
        );
        let spec = OracleSpec::for_model(&trend).unwrap();
        assert_eq!(oracle_forecast(&spec, 7, &[6.0, 7.0], 2).unwrap().0, vec![8.0, 9.0]);

        assert!(matches!(
            OracleSpec::new(walk, OracleMode::StructuredMean),
            Err(Error::InvalidConfig(_))
        ));
        assert!(OracleSpec::new(trend, OracleMode::FlatMartingale).is_err());
    }

    #[test]
    fn predictor_kind_parsing() {
        assert_eq!(PredictorKind::parse("knn5").unwrap(), PredictorKind::Knn { k: 5 });
        assert_eq!(PredictorKind::parse("nn").unwrap().label(), "nn");
        assert!(PredictorKind::parse("knn0").is_err());
        assert!(PredictorKind::parse("patchtst").is_err());
    }

    #[test]
    fn predictor_doc_json() {
        let p = Predictor::Linear(LinearOneParam { a: 0.5, horizon: 4 });
        let doc = p.to_doc(20, "train.csv");
        let text = serde_json::to_string(&doc).unwrap();
        assert_eq!(
            text,
            r#"{"kind":"linear","parameters":{"a":0.5},"lookback":20,"horizon":4}"#
        );
        let d = dataset(vec![(vec![0.0], vec![1.0])]);
        let nn = PredictorKind::Nn.fit(&d, None).unwrap();
        let doc = nn.to_doc(1, "train.csv");
        assert_eq!(doc.parameters["dataset"], "train.csv");
    }
}
