//! Command-line front end for the vehicle toolkit: compile behavior documents
//! into runnable configurations, simulate scenarios to CSV and SVG, replay the
//! canonical episodes against a circuit, minimize action tables, and evaluate
//! trajectory logs against scenario expectations.
//!
//! Exit codes: 0 when everything passed, 1 when a report contains a failing
//! property, 2 for usage, parse, or I/O errors. Artifacts are written through
//! a rename so a failing run never leaves a partial file behind.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use opportunist_core::actuation::ActionTable;
use opportunist_core::analysis::{behavior_properties, table_regression};
use opportunist_core::circuits::parse_circuit;
use opportunist_core::golden;
use opportunist_core::pipeline::{compile, SourceLoader, VehicleConfig};
use opportunist_core::sim::{records_from_csv, run, scenario_library, Scenario, TrajectoryLog};
use opportunist_core::snn::OutputLabel;

mod svg;

#[derive(Parser)]
#[command(name = "opportunist", version, about = "Spiking-circuit vehicle toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a behavior document into circuit, action-table, and trace artifacts.
    Compile {
        /// Path to the behavior document.
        spec: PathBuf,
        /// Directory the artifacts are written to.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run a scenario and write its trajectory log as CSV.
    Simulate {
        /// Library scenario name or path to a scenario file.
        scenario: String,
        /// Behavior document to pilot the vehicle (built-in when omitted).
        #[arg(long)]
        behavior: Option<PathBuf>,
        /// Directory the log (and plot) are written to.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Also write an SVG plot of both trajectories.
        #[arg(long)]
        plot: bool,
        /// Override the scenario's integration step.
        #[arg(long)]
        dt: Option<f64>,
        /// Override the per-decision wheel-speed nudge.
        #[arg(long)]
        delta: Option<f64>,
        /// Override the scenario length in ticks.
        #[arg(long)]
        duration: Option<u64>,
    },
    /// Replay the six canonical episodes against a circuit and check the golden counts.
    Regress {
        /// Circuit file path or built-in document name.
        circuit: String,
    },
    /// Minimize an action table into its sum-of-products law.
    Synth {
        /// Action-table file path or built-in document name.
        table: String,
    },
    /// Evaluate a CSV trajectory log against a scenario's expectations.
    Analyze {
        /// CSV log written by `simulate`.
        log: PathBuf,
        /// Library scenario name or path to the scenario file.
        scenario: String,
    },
}

/// Sources for `compile`: files beside the behavior document win, the
/// built-in documents back them up.
struct DirSources {
    dir: PathBuf,
}

impl SourceLoader for DirSources {
    fn load(&self, name: &str) -> Option<String> {
        let path = self.dir.join(name);
        if let Ok(text) = fs::read_to_string(&path) {
            return Some(text);
        }
        golden::by_name(name).map(str::to_string)
    }
}

/// Read a document from disk, falling back to the built-in set by name.
fn load_document(input: &str) -> Result<String> {
    let path = Path::new(input);
    if path.exists() {
        return fs::read_to_string(path).with_context(|| format!("reading {}", path.display()));
    }
    if let Some(text) = golden::by_name(input) {
        return Ok(text.to_string());
    }
    bail!("no file or built-in document named `{input}`");
}

fn load_scenario(input: &str) -> Result<Scenario> {
    let library = scenario_library();
    if let Some(scenario) = library.iter().find(|s| s.name == input) {
        return Ok(scenario.clone());
    }
    let path = Path::new(input);
    if path.exists() {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        return Scenario::parse(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()));
    }
    let names: Vec<&str> = library.iter().map(|s| s.name.as_str()).collect();
    bail!("unknown scenario `{input}`; library scenarios: {}", names.join(", "));
}

/// Write through a temporary sibling and rename, so failures leave nothing.
fn write_atomic(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, content).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

fn trace_report(config: &VehicleConfig) -> String {
    let mut out = format!("vehicle {}\n\n[classes]\n", config.name);
    for reaction in &config.reactions {
        let bits = config.signatures[&reaction.class];
        out.push_str(&format!(
            "{} bits {bits} command {}  # {}\n",
            reaction.class.code(),
            reaction.command,
            reaction.note
        ));
    }
    out.push_str("\n[outputs]\n");
    for label in OutputLabel::ALL {
        let entry = config.trace(label);
        let classes: Vec<&str> = entry.classes.iter().map(|c| c.code()).collect();
        out.push_str(&format!(
            "{} from {} set by {}\n",
            label.as_char(),
            entry.partition,
            classes.join(" ")
        ));
    }
    out.push_str("\n[rows]\n");
    if config.unused_rows.is_empty() {
        out.push_str("all rows claimed\n");
    } else {
        for row in &config.unused_rows {
            out.push_str(&format!("row {row} never wins an input\n"));
        }
    }
    out
}

fn cmd_compile(spec: &Path, out: &Path) -> Result<bool> {
    let text = fs::read_to_string(spec).with_context(|| format!("reading {}", spec.display()))?;
    let dir = spec.parent().unwrap_or(Path::new(".")).to_path_buf();
    let config = compile(&text, &DirSources { dir })
        .map_err(|e| anyhow::anyhow!("{}: {e}", spec.display()))?;

    let circuit_path = out.join(format!("{}.circuit", config.name));
    let actions_path = out.join(format!("{}.actions", config.name));
    let trace_path = out.join(format!("{}.trace.txt", config.name));
    write_atomic(&circuit_path, &config.circuit_text())?;
    write_atomic(&actions_path, &config.table.serialize())?;
    write_atomic(&trace_path, &trace_report(&config))?;
    println!("wrote {}", circuit_path.display());
    println!("wrote {}", actions_path.display());
    println!("wrote {}", trace_path.display());
    Ok(true)
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    scenario: &str,
    behavior: Option<&Path>,
    out: &Path,
    plot: bool,
    dt: Option<f64>,
    delta: Option<f64>,
    duration: Option<u64>,
) -> Result<bool> {
    let mut scenario = load_scenario(scenario)?;
    if let Some(dt) = dt {
        if !dt.is_finite() || dt <= 0.0 {
            bail!("--dt must be a positive number");
        }
        scenario.dt = dt;
    }
    if let Some(delta) = delta {
        if !delta.is_finite() || delta <= 0.0 {
            bail!("--delta must be a positive number");
        }
        scenario.control.delta = delta;
    }
    if let Some(duration) = duration {
        if duration == 0 {
            bail!("--duration must be at least one tick");
        }
        scenario.duration = duration;
    }

    let config = match behavior {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
            compile(&text, &DirSources { dir })
                .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?
        }
        None => compile(golden::OPPORTUNIST_BEHAVIOR, &opportunist_core::pipeline::EmbeddedSources)
            .expect("built-in behavior compiles"),
    };

    let log = run(&scenario, &config).map_err(|e| anyhow::anyhow!("simulating: {e}"))?;
    let csv_path = out.join(format!("{}.csv", scenario.name));
    write_atomic(&csv_path, &log.to_csv())?;
    println!("wrote {} ({} records, {} decisions)", csv_path.display(), log.records.len(), log.decisions.len());
    if plot {
        let svg_path = out.join(format!("{}.svg", scenario.name));
        write_atomic(&svg_path, &svg::plot(&log.records))?;
        println!("wrote {}", svg_path.display());
    }
    Ok(true)
}

fn cmd_regress(circuit: &str) -> Result<bool> {
    let text = load_document(circuit)?;
    let circuit = parse_circuit(&text).map_err(|e| anyhow::anyhow!("{circuit}: {e}"))?;
    let report = table_regression(&circuit);
    print!("{report}");
    Ok(report.all_pass())
}

fn cmd_synth(table: &str) -> Result<bool> {
    let text = load_document(table)?;
    let table = ActionTable::parse(&text).map_err(|e| anyhow::anyhow!("{table}: {e}"))?;
    let result = opportunist_core::actuation::synthesize(&table)
        .map_err(|e| anyhow::anyhow!("synthesizing `{}`: {e}", table.name))?;
    print!("{}", result.sop);
    for note in &result.overlaps {
        println!("note: {note}");
    }
    for row in &result.shadowed_rows {
        println!("warning: row {row} never wins an input");
    }
    Ok(true)
}

fn cmd_analyze(log: &Path, scenario: &str) -> Result<bool> {
    let text = fs::read_to_string(log).with_context(|| format!("reading {}", log.display()))?;
    let records = records_from_csv(&text).map_err(|e| anyhow::anyhow!("{}: {e}", log.display()))?;
    let scenario = load_scenario(scenario)?;
    let log = TrajectoryLog { scenario: scenario.name.clone(), records, decisions: Vec::new() };
    let report =
        behavior_properties(&log, &scenario).map_err(|e| anyhow::anyhow!("analyzing: {e}"))?;
    print!("{report}");
    Ok(report.all_pass())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Compile { spec, out } => cmd_compile(spec, out),
        Command::Simulate { scenario, behavior, out, plot, dt, delta, duration } => {
            cmd_simulate(scenario, behavior.as_deref(), out, *plot, *dt, *delta, *duration)
        }
        Command::Regress { circuit } => cmd_regress(circuit),
        Command::Synth { table } => cmd_synth(table),
        Command::Analyze { log, scenario } => cmd_analyze(log, scenario),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::from(2)
        }
    }
}
