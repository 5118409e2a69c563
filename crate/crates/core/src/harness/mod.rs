//! Experiment driver: configuration, data ingestion, the run pipeline and
//! artifact emission.

mod config;
mod experiment;
mod ingest;
mod report;

pub use config::{ExperimentConfig, IngestConfig, Mode, Space, SyntheticConfig};
pub use experiment::{execute, run_experiment, write_run, write_sessions, PredictorSummary, RunOutput, RunReport, SourceData, SplitSizes};
pub use ingest::{
    ingest_ticks, parse_timestamp, read_ticks, sessionize, DroppedDay, Session, SessionSpec, Sessionized, TickSchema,
    TickSeries,
};
pub use report::{emit_into, emit_report, render_summary, ArtifactDir, Manifest, ManifestEntry, Report};
