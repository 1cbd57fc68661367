use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hotune::harness::config::ExperimentConfig;
use hotune::harness::run::{read_trace_file, RunReport, REPORT_FILE};
use hotune::harness::{
    analyze_trace, compare, plot_series, run_to_dir, summary_csv, summary_json, Quantity, RunArtifact, Scale,
    Thresholds,
};
use hotune::Error;

#[derive(Parser)]
#[command(
    name = "hotune",
    version,
    about = "Online parameter identification with high-order tuners"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every algorithm of an experiment config and write traces and a report.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output root; the run is written to <DIR>/<name>/. Defaults to the
        /// config's output.directory, then $HOTUNE_OUT_DIR, then ./runs.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Excitation level, rate bound and envelope check for one trace.
    Analyze {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long = "delta-t")]
        delta_t: usize,
        /// Config that produced the trace. Defaults to the report.json next to it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
    },
    /// Summarize one or more run directories side by side.
    Compare {
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        #[arg(long = "eps-e")]
        eps_e: Option<f64>,
        #[arg(long = "eps-theta")]
        eps_theta: Option<f64>,
        /// Print JSON instead of CSV.
        #[arg(long)]
        json: bool,
    },
    /// Emit a two-column `k,<quantity>` series from a trace.
    Plot {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        quantity: Quantity,
        #[arg(long, default_value = "linear")]
        scale: Scale,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn sibling_report(trace: &Path) -> Result<RunReport, Error> {
    let path = trace.parent().unwrap_or(Path::new(".")).join(REPORT_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })?;
    Ok(serde_json::from_str(&text)?)
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { config, out } => {
            let config = ExperimentConfig::from_path(&config)?;
            let root = config.output_root(out.as_deref());
            let (artifact, dir) = run_to_dir(&config, &root)?;
            for (report, _) in artifact.runs() {
                let mut line = format!("{:<13} final ‖θ-θ*‖ = {:.3e}", report.label, report.final_param_err);
                if !report.violations.is_empty() {
                    line.push_str(&format!("  ({} hyperparameter violation(s))", report.violations.len()));
                }
                if let Some(rate) = &report.rate {
                    line.push_str(&format!("  μ = {:.3e}", rate.mu));
                }
                if let Some(env) = &report.envelope {
                    line.push_str(if env.holds {
                        "  envelope holds"
                    } else {
                        "  envelope violated"
                    });
                }
                println!("{line}");
            }
            println!("wrote {}", dir.display());
        }
        Command::Analyze {
            trace,
            delta_t,
            config,
            tolerance,
        } => {
            let records = read_trace_file(&trace)?;
            let (config, final_v) = match config {
                Some(path) => (ExperimentConfig::from_path(&path)?, None),
                None => {
                    let report = sibling_report(&trace)?;
                    let label = records.first().map(|r| r.algorithm.clone()).unwrap_or_default();
                    let final_v = report
                        .algorithms
                        .iter()
                        .find(|a| a.label == label)
                        .and_then(|a| a.final_v);
                    (report.config, final_v)
                }
            };
            let analysis = analyze_trace(&records, &config, delta_t, tolerance, final_v)?;
            println!("{}", serde_json::to_string_pretty(&analysis)?);
        }
        Command::Compare {
            runs,
            eps_e,
            eps_theta,
            json,
        } => {
            let artifacts = runs
                .iter()
                .map(|d| RunArtifact::load(d))
                .collect::<Result<Vec<_>, _>>()?;
            let rows = compare(&artifacts, Thresholds { eps_e, eps_theta })?;
            if json {
                println!("{}", summary_json(&rows)?);
            } else {
                print!("{}", summary_csv(&rows)?);
            }
        }
        Command::Plot {
            trace,
            quantity,
            scale,
            out,
        } => {
            let records = read_trace_file(&trace)?;
            let series = plot_series(&records, quantity, scale)?;
            match out {
                Some(path) => {
                    let file = std::fs::File::create(&path).map_err(|e| Error::Io {
                        path: path.clone(),
                        source: e,
                    })?;
                    hotune::harness::plot::write_plot_csv(std::io::BufWriter::new(file), &series, quantity)?;
                }
                None => hotune::harness::plot::write_plot_csv(std::io::stdout().lock(), &series, quantity)?,
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_divergence() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
