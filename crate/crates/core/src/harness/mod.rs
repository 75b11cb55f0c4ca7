//! Experiment engine behind the `dal` command line tool.

pub mod annotations;
pub mod bench;
pub mod config;
pub mod corpus;
pub mod experiment;
pub mod oracle;
pub mod regressor;
pub mod report;
pub mod stats;

pub use annotations::{parse_annotations, GtObject, ParseIssue, ParseOptions, ParseOutcome, Scene};
pub use bench::{run_benchmark, BenchConfig, BenchReport};
pub use config::HarnessConfig;
pub use corpus::{generate_corpus, CorpusConfig};
pub use experiment::{run_experiment, run_strategies, ExperimentConfig, Strategy};
pub use oracle::{mc_iou_oracle, run_iou_oracle, McEstimate, OracleConfig, OracleReport, Sampling};
pub use regressor::{synthetic_regressor, RegressorParams};
pub use report::{emit_report, read_report, ReportFormat};
pub use stats::{Histogram, ScatterSummary, StatsReport};
