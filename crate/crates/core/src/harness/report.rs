use std::fmt::Write as _;
use std::fs;
use std::path::{Path as FsPath, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::experiment::RunReport;
use crate::bounds::BoundReport;
use crate::error::{Error, Result};
use crate::risk::{EcdfPoint, Estimate, RiskReport};

/// What [`emit_report`] can write.
#[derive(Debug, Clone, Copy)]
pub enum Report<'a> {
    Risk(&'a RiskReport),
    Run(&'a RunReport),
    Bounds(&'a BoundReport),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub fields: Vec<(String, String)>,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn render(&self) -> String {
        let mut out = String::from("# trajrisk artifact manifest\n");
        for (k, v) in &self.fields {
            let _ = writeln!(out, "{k} {v}");
        }
        for e in &self.entries {
            let _ = writeln!(out, "sha256 {} {} {}", e.sha256, e.bytes, e.name);
        }
        out
    }
}

/// Output directory that records a checksum for every file written.
#[derive(Debug)]
pub struct ArtifactDir {
    root: PathBuf,
    entries: Vec<ManifestEntry>,
}

impl ArtifactDir {
    pub fn create(dir: &FsPath) -> Result<Self> {
        if dir.as_os_str().is_empty() {
            return Err(Error::io(
                dir,
                std::io::Error::new(std::io::ErrorKind::InvalidInput, "empty output directory"),
            ));
        }
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(ArtifactDir {
            root: dir.to_path_buf(),
            entries: Vec::new(),
        })
    }

    pub fn root(&self) -> &FsPath {
        &self.root
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(name);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.entries.retain(|e| e.name != name);
        self.entries.push(ManifestEntry {
            name: name.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
            bytes: bytes.len(),
        });
        Ok(())
    }

    /// Writes `manifest.txt` and returns its contents.
    pub fn finish(self, fields: &[(&str, String)]) -> Result<Manifest> {
        let mut all = vec![("version".to_string(), format!("trajrisk {}", env!("CARGO_PKG_VERSION")))];
        all.extend(fields.iter().map(|(k, v)| (k.to_string(), v.clone())));
        let manifest = Manifest {
            fields: all,
            entries: self.entries,
        };
        let path = self.root.join("manifest.txt");
        fs::write(&path, manifest.render()).map_err(|e| Error::io(&path, e))?;
        Ok(manifest)
    }
}

fn f(x: f64) -> String {
    format!("{x:?}")
}

fn opt(x: Option<f64>) -> String {
    x.map(f).unwrap_or_default()
}

struct Table(csv::Writer<Vec<u8>>);

impl Table {
    fn new(header: &[&str]) -> Result<Self> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        Ok(Table(w))
    }

    fn row(&mut self, cells: &[String]) -> Result<()> {
        Ok(self.0.write_record(cells)?)
    }

    fn bytes(self) -> Result<Vec<u8>> {
        self.0
            .into_inner()
            .map_err(|e| Error::io("<csv buffer>", e.into_error()))
    }
}

fn ecdf_csv(points: &[EcdfPoint]) -> Result<Vec<u8>> {
    let mut t = Table::new(&["loss", "fraction"])?;
    for p in points {
        t.row(&[f(p.value), f(p.fraction)])?;
    }
    t.bytes()
}

fn emit_risk(out: &mut ArtifactDir, r: &RiskReport) -> Result<()> {
    for (label, points) in &r.ecdf {
        out.write(&format!("ecdf_{label}.csv"), &ecdf_csv(points)?)?;
    }
    let mut t = Table::new(&["log10_ratio"])?;
    for x in &r.log10_ratios {
        t.row(&[f(*x)])?;
    }
    out.write("logratio.csv", &t.bytes()?)
}

fn est(e: &Estimate) -> [String; 2] {
    [f(e.mean), f(e.std_err)]
}

fn emit_bounds(out: &mut ArtifactDir, r: &BoundReport) -> Result<()> {
    let mut t = Table::new(&["n", "estimate", "std_err", "bound", "bound_std_err"])?;
    for p in &r.coeff_mse.points {
        let [m, s] = est(&p.mse);
        t.row(&[p.n.to_string(), m, s, f(p.bound), f(p.bound_std_err)])?;
    }
    out.write("curves.csv", &t.bytes()?)?;

    let mut t = Table::new(&["n", "b", "p", "eta", "threshold", "frequency", "std_err", "bound", "vacuous"])?;
    for p in &r.vn_tail {
        let [m, s] = est(&p.frequency);
        t.row(&[
            p.n.to_string(),
            f(p.b),
            f(p.p),
            f(p.eta),
            f(p.threshold),
            m,
            s,
            f(p.bound),
            p.vacuous.to_string(),
        ])?;
    }
    out.write("vn_tail.csv", &t.bytes()?)?;

    let mut t = Table::new(&["t", "frequency", "std_err", "bound", "bound_std_err", "vacuous"])?;
    for p in &r.ratio_tail {
        let [m, s] = est(&p.frequency);
        let [bm, bs] = est(&p.bound);
        t.row(&[f(p.t), m, s, bm, bs, p.vacuous.to_string()])?;
    }
    out.write("ratio_tail.csv", &t.bytes()?)?;

    let mut t = Table::new(&[
        "n",
        "nn_risk",
        "nn_risk_se",
        "linear_risk",
        "linear_risk_se",
        "linear_excess",
        "linear_excess_se",
        "excess_bound",
        "interpolator_floor",
        "noise_floor",
    ])?;
    for p in &r.risk_separation.points {
        let [a, b] = est(&p.nn_risk);
        let [c, d] = est(&p.linear_risk);
        let [e, g] = est(&p.linear_excess);
        t.row(&[
            p.n.to_string(),
            a,
            b,
            c,
            d,
            e,
            g,
            f(p.excess_bound),
            f(p.interpolator_floor),
            f(p.noise_floor),
        ])?;
    }
    out.write("risk_separation.csv", &t.bytes()?)?;

    let mut t = Table::new(&["n", "delta", "delta_se", "regret", "regret_se", "selects_best", "violations"])?;
    for p in &r.erm.points {
        let [a, b] = est(&p.delta);
        let [c, d] = est(&p.regret);
        t.row(&[p.n.to_string(), a, b, c, d, f(p.selects_best.mean), p.violations.to_string()])?;
    }
    out.write("erm.csv", &t.bytes()?)
}

/// Writes the report-specific artifacts (`summary.json` plus CSVs) into an
/// open artifact directory.
pub fn emit_into(out: &mut ArtifactDir, report: Report<'_>) -> Result<()> {
    match report {
        Report::Risk(r) => {
            out.write("summary.json", &serde_json::to_vec_pretty(r)?)?;
            emit_risk(out, r)
        }
        Report::Run(r) => {
            out.write("summary.json", &serde_json::to_vec_pretty(r)?)?;
            emit_risk(out, &r.comparison)
        }
        Report::Bounds(r) => {
            out.write("summary.json", &serde_json::to_vec_pretty(r)?)?;
            emit_bounds(out, r)
        }
    }
}

/// Writes `report` into `dir` along with `manifest.txt`.
pub fn emit_report(report: Report<'_>, dir: &FsPath) -> Result<Manifest> {
    let mut out = ArtifactDir::create(dir)?;
    emit_into(&mut out, report)?;
    let fields = match report {
        Report::Risk(_) => vec![],
        Report::Run(r) => vec![("config_sha256", r.config_sha256.clone()), ("seed", r.seed.to_string())],
        Report::Bounds(r) => vec![("seed", r.seed.to_string())],
    };
    out.finish(&fields)
}

/// Plain-text rendering of a `summary.json` of any report kind.
pub fn render_summary(json: &str) -> Result<String> {
    if let Ok(r) = serde_json::from_str::<RunReport>(json) {
        return Ok(render_run(&r));
    }
    if let Ok(r) = serde_json::from_str::<BoundReport>(json) {
        return Ok(render_bounds(&r));
    }
    let r: RiskReport = serde_json::from_str(json)?;
    Ok(render_risk(&r))
}

fn render_risk(r: &RiskReport) -> String {
    let [a, b] = &r.labels;
    let mut s = String::new();
    let _ = writeln!(s, "comparison {a} vs {b} over {} windows", r.n);
    for (label, e) in &r.mean_risk {
        let _ = writeln!(s, "  risk[{label}] = {:.6e} +/- {:.2e}", e.mean, e.std_err);
    }
    let _ = writeln!(s, "  P(l_{a} > l_{b}) = {:.4}  ties = {:.4}", r.win_rate_a_over_b, r.tie_fraction);
    let _ = writeln!(s, "  risk ratio {a}/{b} = {}", opt(r.risk_ratio_a_over_b));
    s
}

fn render_run(r: &RunReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "run seed={} config={}", r.seed, r.config_sha256);
    let _ = writeln!(
        s,
        "  {:?} data, {:?} space, L={} H={} stride={}",
        r.mode, r.space, r.lookback, r.horizon, r.stride
    );
    let _ = writeln!(
        s,
        "  windows: total={} train={} val={} test={} (dropped days: {})",
        r.sizes.total, r.sizes.train, r.sizes.val, r.sizes.test, r.dropped_days
    );
    for (label, p) in &r.predictors {
        let _ = writeln!(s, "  {label:<8} test risk {:.6e} +/- {:.2e}", p.test_risk.mean, p.test_risk.std_err);
    }
    let _ = writeln!(s, "  lowest risk: {}", r.lowest_risk);
    s.push_str(&render_risk(&r.comparison));
    s
}

fn render_bounds(r: &BoundReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "bounds seed={} sigma^2={} sigma_xi^2={}",
        r.seed, r.sigma_coordinate_sq, r.sigma_xi_sq
    );
    for c in &r.checks {
        let _ = writeln!(s, "  [{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    s
}
