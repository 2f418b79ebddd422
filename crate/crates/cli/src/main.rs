//! `nocsim`: run one interconnect simulation or a sweep grid from a TOML
//! description.
//!
//! Exit codes: 0 success, 2 config problems, 3 topology construction or
//! file problems, 4 traffic ingestion problems, 5 livelock guard tripped,
//! 1 anything else.

mod config;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nocsim::netsim::SimError;
use nocsim::report::{self, to_json_pretty};
use nocsim::routing::{dump_asp_csv, dump_ssp_csv};
use nocsim::routing_memory::dump_routing_memory;
use nocsim::runner::{self, RunError, RunOutcome, RunSpec, SweepSpec};

#[derive(Parser)]
#[command(
    name = "nocsim",
    version,
    about = "Cycle-accurate simulation of message-passing networks for parallel iterative decoders"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate one configuration and emit a JSON report.
    Run(RunArgs),
    /// Simulate a grid of configurations and emit a CSV table.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML run description.
    #[arg(long)]
    config: PathBuf,
    /// Override a config key, e.g. --set sim.routing=asp_ft. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Also write the single-row CSV table here.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Dump per-run artifacts (routing tables, traces, control words,
    /// delivery orders) into this directory. Needs
    /// sim.record_routing_trace = true.
    #[arg(long)]
    artifacts: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// TOML sweep description.
    #[arg(long)]
    config: PathBuf,
    /// Override a config key. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Write the CSV table here instead of stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Run grid points one at a time instead of concurrently. The rows are
    /// identical either way; this only trades wall time for quiet CPUs.
    #[arg(long)]
    serial: bool,
}

fn exit_code_for(e: &RunError) -> u8 {
    match e {
        RunError::Topology(_) => 3,
        RunError::Traffic(_) => 4,
        RunError::Sim(SimError::Traffic(_)) => 4,
        RunError::Sim(SimError::Livelock { .. }) => 5,
        RunError::BadSpec(_) => 2,
        _ => 1,
    }
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn load_spec<T: serde::de::DeserializeOwned>(
    path: &Path,
    sets: &[String],
) -> Result<T, config::ConfigError> {
    let mut value = config::load(path)?;
    config::apply_overrides(&mut value, sets)?;
    config::decode(value)
}

fn write_text(path: Option<&Path>, text: &str) -> io::Result<()> {
    match path {
        Some(p) => fs::write(p, text),
        None => io::stdout().lock().write_all(text.as_bytes()),
    }
}

fn write_artifacts(dir: &Path, out: &RunOutcome) -> Result<(), String> {
    let err = |e: &dyn std::fmt::Display| format!("cannot write artifacts: {e}");
    fs::create_dir_all(dir).map_err(|e| err(&e))?;

    let mut ssp = BufWriter::new(File::create(dir.join("ssp.csv")).map_err(|e| err(&e))?);
    dump_ssp_csv(&out.tables.ssp, &mut ssp).map_err(|e| err(&e))?;
    let mut asp = BufWriter::new(File::create(dir.join("asp.csv")).map_err(|e| err(&e))?);
    dump_asp_csv(&out.tables.asp, &mut asp).map_err(|e| err(&e))?;

    let mut depths = String::from("node,port,interleave,deinterleave\n");
    for node in 0..out.topology.nodes() {
        for port in 0..out.topology.ports() {
            depths.push_str(&format!(
                "{node},{port},{},{}\n",
                out.result.interleave.fifo_max[node][port],
                out.result.deinterleave.fifo_max[node][port],
            ));
        }
    }
    fs::write(dir.join("fifo_depths.csv"), depths).map_err(|e| err(&e))?;

    for (name, half) in [
        ("interleave", &out.result.interleave),
        ("deinterleave", &out.result.deinterleave),
    ] {
        let mut locs = String::new();
        for node in 0..out.topology.nodes() {
            let seq: Vec<String> = half
                .delivery_locations(node)
                .iter()
                .map(|l| l.to_string())
                .collect();
            locs.push_str(&format!("{node}: {}\n", seq.join(" ")));
        }
        fs::write(dir.join(format!("locations_{name}.txt")), locs).map_err(|e| err(&e))?;

        let trace = half
            .trace
            .as_ref()
            .ok_or_else(|| "artifact dump needs a recorded routing trace".to_string())?;
        let mut tr = String::from("cycle,node,in_port,out_port,dest\n");
        for e in trace {
            tr.push_str(&format!(
                "{},{},{},{},{}\n",
                e.cycle, e.node, e.in_port, e.out_port, e.dest
            ));
        }
        fs::write(dir.join(format!("trace_{name}.csv")), tr).map_err(|e| err(&e))?;

        let image = dump_routing_memory(trace, out.topology.nodes(), out.topology.ports())
            .map_err(|e| err(&e))?;
        let mut words = String::from("node,cycle,word\n");
        for node in 0..out.topology.nodes() {
            for w in &image.words[node] {
                words.push_str(&format!("{node},{},{}\n", w.cycle, image.render_word(w)));
            }
        }
        fs::write(dir.join(format!("routing_memory_{name}.csv")), words).map_err(|e| err(&e))?;
    }
    Ok(())
}

fn cmd_run(args: &RunArgs) -> ExitCode {
    let spec: RunSpec = match load_spec(&args.config, &args.set) {
        Ok(s) => s,
        Err(e) => return fail(2, e),
    };
    if args.artifacts.is_some() && !spec.sim.record_routing_trace {
        return fail(
            2,
            "--artifacts needs sim.record_routing_trace = true (try --set sim.record_routing_trace=true)",
        );
    }
    let out = match runner::execute(&spec) {
        Ok(o) => o,
        Err(e) => return fail(exit_code_for(&e), e),
    };
    eprintln!(
        "{} P={} D={}: interleave {} cycles, de-interleave {} cycles, {:.3} Mb/s (ideal {:.3})",
        out.report.topology.kind,
        out.report.topology.nodes,
        out.report.topology.degree,
        out.report.interleave.cycles,
        out.report.deinterleave.cycles,
        out.report.throughput.measured_bps / 1e6,
        out.report.throughput.ideal_bps / 1e6,
    );
    if let Err(e) = write_text(args.report.as_deref(), &to_json_pretty(&out.report)) {
        return fail(1, format!("cannot write report: {e}"));
    }
    if let Some(csv) = &args.csv {
        let mut buf = Vec::new();
        if let Err(e) = report::write_csv(&mut buf, std::slice::from_ref(&out.row)) {
            return fail(1, format!("cannot assemble CSV: {e}"));
        }
        if let Err(e) = fs::write(csv, buf) {
            return fail(1, format!("cannot write CSV: {e}"));
        }
    }
    if let Some(dir) = &args.artifacts {
        if let Err(e) = write_artifacts(dir, &out) {
            return fail(1, e);
        }
    }
    ExitCode::SUCCESS
}

fn cmd_sweep(args: &SweepArgs) -> ExitCode {
    let spec: SweepSpec = match load_spec(&args.config, &args.set) {
        Ok(s) => s,
        Err(e) => return fail(2, e),
    };
    let outcome = match runner::run_sweep(&spec, !args.serial) {
        Ok(o) => o,
        Err(e) => return fail(exit_code_for(&e), e),
    };
    for s in &outcome.skipped {
        eprintln!("skipped {} p={}: {}", s.family, s.p, s.reason);
    }
    let skips = outcome.skipped.len();
    eprintln!(
        "{} runs completed, {} grid point{} skipped",
        outcome.rows.len(),
        skips,
        if skips == 1 { "" } else { "s" }
    );
    let mut buf = Vec::new();
    if let Err(e) = report::write_csv(&mut buf, &outcome.rows) {
        return fail(1, format!("cannot assemble CSV: {e}"));
    }
    let text = String::from_utf8(buf).expect("CSV is UTF-8");
    if let Err(e) = write_text(args.csv.as_deref(), &text) {
        return fail(1, format!("cannot write CSV: {e}"));
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.cmd {
        Cmd::Run(args) => cmd_run(args),
        Cmd::Sweep(args) => cmd_sweep(args),
    }
}
