//! `genepat`: generate, classify, simulate and chart memory access traces.
//!
//! Every subcommand writes CSV (or SVG) to `--out` or stdout. Errors are
//! reported on stderr as a single `error,<kind>,<message>` line; the exit
//! status is 2 for parameter errors and 3 for malformed or unreadable input.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use genepat::trace::TraceFormat;
use genepat::{Error, PatternLabel};

#[derive(Debug, Parser)]
#[command(name = "genepat", version, about = "Memory access pattern toolkit")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// key=value configuration file shared by all stages.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Seed for the random generators.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Trace output format.
    #[arg(long, global = true, default_value = "text", value_parser = parse_format)]
    pub format: TraceFormat,
    /// Output file (a directory for `ptmap` and `report`). Defaults to stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

fn parse_format(s: &str) -> Result<TraceFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_label(s: &str) -> Result<PatternLabel, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic trace for one pattern or a mix of patterns.
    Gen(GenArgs),
    /// Label each window of a trace and print the pattern mix.
    Classify(ClassifyArgs),
    /// Run a trace through the cache hierarchy and print its counters.
    Simulate(TraceArg),
    /// Derive metrics from a counters CSV or by simulating a trace.
    Metrics(MetricsArgs),
    /// Suite centres, ordering and indifference curves from hotspot points.
    Ptmap(PtmapArgs),
    /// Policy recommendations for a pattern mix.
    Advise(AdviseArgs),
    /// Draw the pattern figure of a trace as SVG.
    Render(RenderArgs),
    /// Select hotspots from a program profile.
    Hotspots(HotspotsArgs),
    /// Run the whole pipeline over several traces.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Pattern to generate (P1..P6).
    #[arg(long, value_parser = parse_label, conflicts_with = "mix")]
    pub pattern: Option<PatternLabel>,
    /// Mixture such as `P2=0.25,P4=0.75`; each part uses that pattern's defaults.
    #[arg(long)]
    pub mix: Option<String>,
    /// Records in a mixed trace (default: sum of the parts' lengths).
    #[arg(long, requires = "mix")]
    pub total: Option<usize>,
    #[arg(long)]
    pub stride: Option<u64>,
    #[arg(long)]
    pub period: Option<u64>,
    #[arg(long)]
    pub n_outer: Option<u64>,
    #[arg(long)]
    pub footprint: Option<u64>,
    #[arg(long)]
    pub elem_count: Option<u64>,
    #[arg(long)]
    pub size: Option<u32>,
    #[arg(long)]
    pub base_addr: Option<u64>,
    /// read, write or rmw.
    #[arg(long)]
    pub op_mix: Option<String>,
    /// Skip the pattern's stride and footprint constraints.
    #[arg(long)]
    pub unchecked: bool,
}

#[derive(Debug, Args)]
pub struct TraceArg {
    /// Trace file (text or binary, detected automatically).
    pub trace: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    pub trace: PathBuf,
    /// Records per window (config key `window_len`).
    #[arg(long)]
    pub window: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Trace to simulate.
    #[arg(required_unless_present = "counters", conflicts_with = "counters")]
    pub trace: Option<PathBuf>,
    /// Counters CSV written by `simulate`.
    #[arg(long)]
    pub counters: Option<PathBuf>,
    /// Divide L2 prefetches by demand requests only.
    #[arg(long)]
    pub demand_only: bool,
}

#[derive(Debug, Args)]
pub struct PtmapArgs {
    /// CSV of `label,suite,l3_apc,ral`.
    pub points: PathBuf,
    /// Points per indifference curve.
    #[arg(long, default_value_t = 64)]
    pub curve_points: usize,
}

#[derive(Debug, Args)]
pub struct AdviseArgs {
    /// Mix file: `classify` output, a P1..P6 weight row, or `label,weight` rows.
    pub mix: PathBuf,
    /// Print only the CSV table.
    #[arg(long, conflicts_with = "text")]
    pub csv: bool,
    /// Print only the annotated text.
    #[arg(long)]
    pub text: bool,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    pub trace: PathBuf,
    #[arg(long, default_value_t = 800)]
    pub width: u32,
    #[arg(long, default_value_t = 500)]
    pub height: u32,
    #[arg(long, default_value_t = 20_000)]
    pub max_points: usize,
    /// Logarithmic axes.
    #[arg(long)]
    pub log: bool,
    #[arg(long)]
    pub title: Option<String>,
}

#[derive(Debug, Args)]
pub struct HotspotsArgs {
    /// Profile: a `TS= TP= DELTA=` header, then `segment_id,t,n[,source]` rows.
    pub profile: PathBuf,
    /// Threshold in percent, overriding the file's DELTA.
    #[arg(long)]
    pub delta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Trace files, optionally prefixed with a suite name: `SUITE=path`.
    #[arg(required = true)]
    pub inputs: Vec<String>,
    #[arg(long)]
    pub window: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("error,param,{first}");
            return ExitCode::from(2);
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error,{},{}", e.kind(), e.to_string().replace('\n', " "));
            ExitCode::from(match e {
                Error::Param(_) => 2,
                Error::Format { .. } | Error::Io(_) => 3,
            })
        }
    }
}
