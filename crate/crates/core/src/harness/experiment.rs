use std::collections::BTreeMap;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Mode, Space};
use super::ingest::{ingest_ticks, sessionize, Sessionized};
use super::report::{emit_into, ArtifactDir, Manifest, Report};
use crate::error::{Error, Result};
use crate::predictors::{Predictor, PredictorDoc, PredictorKind};
use crate::risk::{compare_report, loss_records, losses, Estimate, LossRecord, RiskReport};
use crate::sim::{path_to_returns, simulate_path, write_path_csv, Path};
use crate::windows::{chrono_split, make_windows, make_windows_from, write_dataset_csv, Dataset, SplitDataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub total: usize,
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorSummary {
    pub test_risk: Estimate,
    pub fitted: PredictorDoc,
}

/// The JSON summary of a `run`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config_sha256: String,
    pub seed: u64,
    pub mode: Mode,
    pub space: Space,
    pub lookback: usize,
    pub horizon: usize,
    pub stride: usize,
    pub sizes: SplitSizes,
    pub dropped_days: usize,
    pub predictors: BTreeMap<String, PredictorSummary>,
    /// Predictor with the smallest test risk (first configured on ties).
    pub lowest_risk: String,
    pub comparison: RiskReport,
}

/// Source data behind a run.
#[derive(Debug, Clone)]
pub enum SourceData {
    Simulated { path: Path, windowed: Path },
    Ingested(Sessionized),
}

/// In-memory result of [`execute`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: ExperimentConfig,
    pub source: SourceData,
    pub split: SplitDataset,
    pub predictors: Vec<(String, Predictor)>,
    pub test_losses: Vec<LossRecord>,
    pub report: RunReport,
}

fn in_space(path: &Path, space: Space) -> Result<Path> {
    match space {
        Space::Price => Ok(path.clone()),
        Space::Returns => path_to_returns(path),
    }
}

fn build_dataset(config: &ExperimentConfig) -> Result<(SourceData, Dataset)> {
    let (l, h) = (config.lookback, config.horizon);
    match config.mode {
        Mode::Synthetic => {
            let syn = config.synthetic.as_ref().expect("validated");
            let path = simulate_path(&syn.process, syn.length, config.seed).map_err(|e| e.in_stage("simulate"))?;
            let windowed = in_space(&path, config.space)?;
            let stride = config.stride.unwrap_or(h);
            let dataset = make_windows(&windowed, l, h, stride).map_err(|e| e.in_stage("windows"))?;
            Ok((SourceData::Simulated { path, windowed }, dataset))
        }
        Mode::Ingest => {
            let ing = config.ingest.as_ref().expect("validated");
            let ticks = ingest_ticks(&ing.data_path, &ing.schema(), &ing.instrument).map_err(|e| e.in_stage("ingest"))?;
            let sessions = sessionize(&ticks, &ing.session()?).map_err(|e| e.in_stage("sessionize"))?;
            let grid = sessions.grid_len;
            let stride = config.stride.unwrap_or(grid);
            let mut pairs = Vec::new();
            for (k, s) in sessions.sessions.iter().enumerate() {
                let values = in_space(&Path::observed(s.values.clone()), config.space)?.values;
                let d = make_windows_from(&values, l, h, stride, k * grid).map_err(|e| e.in_stage("windows"))?;
                pairs.extend(d.pairs);
            }
            let dataset = Dataset::from_pairs(pairs, l, h, stride)?;
            Ok((SourceData::Ingested(sessions), dataset))
        }
    }
}

/// Runs the full pipeline in memory: data, windows, chronological split,
/// fitting on train, scoring on test, and the head-to-head comparison.
pub fn execute(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let kinds = config.predictor_kinds()?;
    if config.space == Space::Returns && kinds.contains(&PredictorKind::Oracle) {
        return Err(Error::InvalidConfig("the oracle predictor is defined on price windows only".into()));
    }
    let [label_a, label_b] = config.comparison()?;

    let (source, dataset) = build_dataset(config)?;
    let split = chrono_split(&dataset, config.split).map_err(|e| e.in_stage("split"))?;
    if split.train.is_empty() || split.test.is_empty() {
        return Err(Error::InsufficientData(format!(
            "split of {} windows leaves train={} test={}",
            dataset.len(),
            split.train.len(),
            split.test.len()
        ))
        .in_stage("split"));
    }

    let model = match &source {
        SourceData::Simulated { path, .. } => path.model.clone(),
        SourceData::Ingested(_) => None,
    };
    let predictors: Vec<(String, Predictor)> = kinds
        .iter()
        .map(|k| Ok((k.label(), k.fit(&split.train, model.as_ref())?)))
        .collect::<Result<_>>()
        .map_err(|e: Error| e.in_stage("fit"))?;

    let columns: Vec<(String, Vec<f64>)> = predictors
        .iter()
        .map(|(label, p)| Ok((label.clone(), losses(p, &split.test)?)))
        .collect::<Result<_>>()
        .map_err(|e: Error| e.in_stage("evaluate"))?;
    let anchors: Vec<usize> = split.test.pairs.iter().map(|p| p.t).collect();
    let test_losses = loss_records(&columns, &anchors)?;

    let column = |label: &str| &columns.iter().find(|(l, _)| l == label).expect("validated").1;
    let comparison = compare_report(column(&label_a), column(&label_b), [&label_a, &label_b])?;

    let mut summaries = BTreeMap::new();
    let mut lowest: Option<(String, f64)> = None;
    for ((label, predictor), (_, col)) in predictors.iter().zip(&columns) {
        let risk = Estimate::from_samples(col)?;
        if lowest.as_ref().is_none_or(|(_, best)| risk.mean < *best) {
            lowest = Some((label.clone(), risk.mean));
        }
        summaries.insert(
            label.clone(),
            PredictorSummary {
                test_risk: risk,
                fitted: predictor.to_doc(config.lookback, "train.csv"),
            },
        );
    }

    let report = RunReport {
        config_sha256: config.hash(),
        seed: config.seed,
        mode: config.mode,
        space: config.space,
        lookback: config.lookback,
        horizon: config.horizon,
        stride: dataset.stride,
        sizes: SplitSizes {
            total: dataset.len(),
            train: split.train.len(),
            val: split.val.len(),
            test: split.test.len(),
        },
        dropped_days: match &source {
            SourceData::Ingested(s) => s.dropped.len(),
            SourceData::Simulated { .. } => 0,
        },
        predictors: summaries,
        lowest_risk: lowest.expect("at least two predictors").0,
        comparison,
    };
    Ok(RunOutput {
        config: config.clone(),
        source,
        split,
        predictors,
        test_losses,
        report,
    })
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

/// `sessions.csv` (one row per retained day) and `dropped_days.csv`.
pub fn write_sessions(out: &mut ArtifactDir, s: &Sessionized) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["date".to_string()];
    header.extend((0..s.grid_len).map(|k| format!("p_{k}")));
    w.write_record(&header)?;
    for session in &s.sessions {
        let mut row = vec![session.date.clone()];
        row.extend(session.values.iter().map(|v| format!("{v:?}")));
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io(out.root(), e.into_error()))?;
    out.write("sessions.csv", &bytes)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["date", "coverage"])?;
    for d in &s.dropped {
        w.write_record([d.date.clone(), format!("{:?}", d.coverage)])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io(out.root(), e.into_error()))?;
    out.write("dropped_days.csv", &bytes)
}

/// Writes every artifact of a run plus `manifest.txt` into `dir`.
pub fn write_run(output: &RunOutput, dir: &FsPath) -> Result<Manifest> {
    let mut out = ArtifactDir::create(dir)?;
    match &output.source {
        SourceData::Simulated { path, windowed } => {
            out.write("path.csv", &csv_bytes(|b| write_path_csv(path, b))?)?;
            if output.config.space == Space::Returns {
                out.write("returns.csv", &csv_bytes(|b| write_path_csv(windowed, b))?)?;
            }
        }
        SourceData::Ingested(s) => write_sessions(&mut out, s)?,
    }
    for (name, part) in [("train.csv", &output.split.train), ("val.csv", &output.split.val), ("test.csv", &output.split.test)] {
        out.write(name, &csv_bytes(|b| write_dataset_csv(part, b))?)?;
    }
    for (label, p) in &output.predictors {
        let doc = p.to_doc(output.config.lookback, "train.csv");
        out.write(&format!("predictor_{label}.json"), &serde_json::to_vec_pretty(&doc)?)?;
    }

    let labels: Vec<&String> = output.predictors.iter().map(|(l, _)| l).collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string()];
    header.extend(labels.iter().map(|l| l.to_string()));
    w.write_record(&header)?;
    for rec in &output.test_losses {
        let mut row = vec![rec.t.to_string()];
        row.extend(labels.iter().map(|l| format!("{:?}", rec.loss_by_predictor[*l])));
        w.write_record(&row)?;
    }
    out.write("losses.csv", &w.into_inner().map_err(|e| Error::io(dir, e.into_error()))?)?;

    emit_into(&mut out, Report::Run(&output.report))?;
    out.finish(&[
        ("config_sha256", output.report.config_sha256.clone()),
        ("seed", output.report.seed.to_string()),
    ])
}

/// [`execute`] followed by [`write_run`].
pub fn run_experiment(config: &ExperimentConfig, dir: &FsPath) -> Result<RunReport> {
    let output = execute(config)?;
    write_run(&output, dir)?;
    Ok(output.report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml_str(text).unwrap()
    }

    #[test]
    fn flat_wins_on_martingale_prices() {
        let c = config(
            r#"
mode = "synthetic"
seed = 11
lookback = 20
horizon = 30
predictors = ["flat", "linear", "nn", "oracle"]
compare = ["nn", "flat"]
[synthetic]
length = 36049
process = { kind = "gaussian_random_walk", x0 = 1.0, sigma = 0.1 }
"#,
        );
        let out = execute(&c).unwrap();
        assert_eq!(out.report.sizes.total, 1200);
        assert_eq!(out.report.sizes.train, 840);
        let risk = |l: &str| out.report.predictors[l].test_risk.mean;
        assert!(risk("flat") < risk("nn"), "{} vs {}", risk("flat"), risk("nn"));
        assert_eq!(risk("flat"), risk("oracle"));
        assert!(out.report.comparison.win_rate_a_over_b > 0.5);
        // flat and oracle tie exactly; the first configured wins
        assert!(out.report.lowest_risk == "flat" || out.report.lowest_risk == "linear");
    }

    #[test]
    fn invalid_horizon_fails_before_work() {
        let c = config(
            r#"
mode = "synthetic"
lookback = 20
horizon = 0
[synthetic]
length = 1000000000
process = { kind = "gaussian_random_walk", x0 = 1.0, sigma = 0.1 }
"#,
        );
        assert!(matches!(execute(&c), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn stage_labels_on_data_errors() {
        let c = config(
            r#"
mode = "synthetic"
lookback = 20
horizon = 30
[synthetic]
length = 40
process = { kind = "gaussian_random_walk", x0 = 1.0, sigma = 0.1 }
"#,
        );
        let err = execute(&c).unwrap_err();
        assert!(err.to_string().starts_with("windows:"), "{err}");
    }
}
