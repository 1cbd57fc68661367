//! Config-driven experiments: run, persist, compare and plot.

pub mod analyze;
pub mod compare;
pub mod config;
pub mod plot;
pub mod run;
pub mod trace;

pub use analyze::{analyze_trace, TraceAnalysis};
pub use compare::{compare, summary_csv, summary_json, SummaryRow, Thresholds};
pub use config::{AlgorithmEntry, AnalysisConfig, ExperimentConfig, Format, OutputConfig};
pub use plot::{emit_plot_data, plot_series, Quantity, Scale};
pub use run::{run_experiment, run_to_dir, AlgorithmReport, RunArtifact, RunReport};
pub use trace::{read_trace_csv, write_trace_csv, TraceRecord};
