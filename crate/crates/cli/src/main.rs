//! `strm`: check, optimize, run and benchmark stream specifications.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use strm_core::analysis::{infer_types, Provenance, TypedSpec};
use strm_core::gen::{generate, TraceConfig};
use strm_core::harness::{bench, equivalence_suite, Variant, PIPELINE_ROUNDS};
use strm_core::interp::{InterpError, Monitor, RunOptions, Trace};
use strm_core::ir::{parse_rational, Rational};
use strm_core::parser::{parse_spec, pretty};
use strm_core::passes::{run_pipeline, Pass};
use strm_core::trace::{read_trace, write_trace};

const EXIT_USER: u8 = 1;
const EXIT_INEQUIVALENT: u8 = 2;
const EXIT_FAULT: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "strm", version, about = "Optimizing compiler and reference interpreter for stream specifications")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    Spec,
    Report,
    Both,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and type-check a specification and print every stream's type.
    Check { spec: PathBuf },
    /// Run optimization passes and print the transformed specification.
    Optimize {
        spec: PathBuf,
        /// `all` or a comma-separated list of sccp, ptr, fr, cse, dse.
        #[arg(long, default_value = "all")]
        passes: String,
        #[arg(long, default_value_t = PIPELINE_ROUNDS)]
        max_rounds: usize,
        #[arg(long, value_enum, default_value = "spec")]
        emit: Emit,
        /// Print a JSON object instead of text.
        #[arg(long)]
        json: bool,
        /// Write to this file instead of standard output.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run a specification over a trace and print trigger observations.
    Run {
        spec: PathBuf,
        trace: PathBuf,
        /// Write evaluation statistics to this file.
        #[arg(long)]
        stats: Option<PathBuf>,
        /// Write statistics as JSON.
        #[arg(long)]
        json: bool,
        /// Last instant for periodic deadlines, in seconds.
        #[arg(long, value_parser = parse_duration)]
        end: Option<Rational>,
    },
    /// Compare the original and transformed specifications over a trace.
    Bench {
        spec: PathBuf,
        trace: PathBuf,
        #[arg(long, default_value = "all")]
        passes: String,
        #[arg(long, default_value_t = 10)]
        repeat: usize,
        #[arg(long)]
        json: bool,
    },
    /// Generate a pseudo-random trace for a specification.
    GenTrace {
        #[arg(long)]
        spec: PathBuf,
        #[command(flatten)]
        trace: TraceArgs,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Check that passes preserve observations over generated traces.
    Equiv {
        spec: PathBuf,
        #[arg(long, default_value = "all")]
        passes: String,
        /// Number of traces; seeds run from `--seed` upwards.
        #[arg(long, default_value_t = 100)]
        traces: u64,
        #[command(flatten)]
        trace: TraceArgs,
    },
}

#[derive(Debug, Clone, clap::Args)]
struct TraceArgs {
    /// Trace length in seconds (periodic timing).
    #[arg(long, value_parser = parse_duration, conflicts_with = "events")]
    duration: Option<Rational>,
    /// Number of events with random timing and coverage.
    #[arg(long)]
    events: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `name[,name]=period`: period of a group of inputs.
    #[arg(long = "rate", value_parser = parse_rate)]
    rates: Vec<(Vec<String>, Rational)>,
    /// `name=lo:hi`: uniform range of a numeric input.
    #[arg(long = "range", value_parser = parse_range)]
    ranges: Vec<(String, f64, f64)>,
    /// `name=p`: probability of `true` for a boolean input.
    #[arg(long = "bias", value_parser = parse_bias)]
    biases: Vec<(String, f64)>,
}

impl TraceArgs {
    /// `default_events` applies when neither `--duration` nor `--events` is given.
    fn config(&self, seed: u64, default_events: usize) -> TraceConfig {
        let mut cfg = match (self.duration, self.events) {
            (Some(d), _) => TraceConfig::periodic(d, seed),
            (None, n) => TraceConfig::random(n.unwrap_or(default_events), seed),
        };
        for (names, period) in &self.rates {
            let names: Vec<&str> = names.iter().map(String::as_str).collect();
            cfg = cfg.rate(&names, *period);
        }
        for (name, lo, hi) in &self.ranges {
            cfg = cfg.range(name, *lo, *hi);
        }
        for (name, p) in &self.biases {
            cfg.bias.insert(name.clone(), *p);
        }
        cfg
    }
}

/// `1s`, `100ms`, `250us` or plain seconds such as `0.5`.
fn parse_duration(text: &str) -> Result<Rational, String> {
    let text = text.trim();
    let (number, scale) = if let Some(n) = text.strip_suffix("ms") {
        (n, Rational::new(1, 1000))
    } else if let Some(n) = text.strip_suffix("us") {
        (n, Rational::new(1, 1_000_000))
    } else if let Some(n) = text.strip_suffix('s') {
        (n, Rational::from_integer(1))
    } else {
        (text, Rational::from_integer(1))
    };
    let value = parse_rational(number.trim()).ok_or_else(|| format!("invalid duration `{text}`"))?;
    Ok(value * scale)
}

fn split_assignment(text: &str) -> Result<(&str, &str), String> {
    text.split_once('=').ok_or_else(|| format!("expected `name=value`, got `{text}`"))
}

fn parse_rate(text: &str) -> Result<(Vec<String>, Rational), String> {
    let (names, period) = split_assignment(text)?;
    let names: Vec<String> = names.split(',').map(|n| n.trim().to_string()).filter(|n| !n.is_empty()).collect();
    if names.is_empty() {
        return Err(format!("no input named in `{text}`"));
    }
    Ok((names, parse_duration(period)?))
}

fn parse_range(text: &str) -> Result<(String, f64, f64), String> {
    let (name, range) = split_assignment(text)?;
    let (lo, hi) = range.split_once(':').ok_or_else(|| format!("expected `lo:hi`, got `{range}`"))?;
    let num = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("`{s}`: {e}"));
    Ok((name.trim().to_string(), num(lo)?, num(hi)?))
}

fn parse_bias(text: &str) -> Result<(String, f64), String> {
    let (name, p) = split_assignment(text)?;
    let p = p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}"))?;
    Ok((name.trim().to_string(), p))
}

/// A failed command: message and exit status.
struct Failure(u8, String);

impl Failure {
    fn user(message: impl std::fmt::Display) -> Self {
        Failure(EXIT_USER, message.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::user(format!("{}: {e}", path.display())))
}

fn write_output(path: Option<&Path>, text: &str) -> CmdResult {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::user(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| Failure::user(e))
        }
    }
}

fn load_spec(path: &Path) -> Result<TypedSpec, Failure> {
    let text = read_file(path)?;
    let spec = parse_spec(&text).map_err(|e| Failure::user(format!("{}:{e}", path.display())))?;
    infer_types(&spec).map_err(|e| Failure::user(format!("{}: {e}", path.display())))
}

fn load_trace(ts: &TypedSpec, path: &Path) -> Result<Trace, Failure> {
    let text = read_file(path)?;
    read_trace(ts.spec(), &text).map_err(|e| Failure::user(format!("{}: {e}", path.display())))
}

fn interp_failure(e: InterpError) -> Failure {
    match e {
        InterpError::Fault { .. } => Failure(EXIT_FAULT, e.to_string()),
        other => Failure::user(other),
    }
}

fn variants(passes: &[Pass]) -> Vec<Variant> {
    let mut v: Vec<Variant> = passes.iter().map(|&p| Variant::pass(p)).collect();
    if passes.len() > 1 {
        v.push(Variant::pipeline(passes));
    }
    v
}

fn cmd_check(path: &Path) -> CmdResult {
    let ts = load_spec(path)?;
    let spec = ts.spec();
    let mut out = String::new();
    let mark = |p: Provenance| if p == Provenance::Inferred { " (inferred)" } else { "" };
    for input in &spec.inputs {
        out.push_str(&format!("input {}: {} @{{{}}}\n", input.name, input.ty, input.name));
    }
    for (o, t) in spec.outputs.iter().zip(ts.output_types()) {
        out.push_str(&format!("output {}: {} {}{}\n", o.name, t.value_type, t.pacing, mark(t.provenance)));
    }
    for (i, t) in ts.trigger_types().iter().enumerate() {
        out.push_str(&format!("trigger#{i}: {} {}{}\n", t.value_type, t.pacing, mark(t.provenance)));
    }
    write_output(None, &out)
}

fn cmd_optimize(path: &Path, passes: &str, max_rounds: usize, emit: Emit, json: bool, out: Option<&Path>) -> CmdResult {
    let ts = load_spec(path)?;
    let passes = Pass::parse_list(passes).map_err(Failure::user)?;
    let (after, report) = run_pipeline(&ts, &passes, max_rounds).map_err(Failure::user)?;
    let text = pretty(after.spec());
    let rendered = if json {
        let mut obj = serde_json::Map::new();
        if emit != Emit::Report {
            obj.insert("spec".into(), text.into());
        }
        if emit != Emit::Spec {
            obj.insert("report".into(), serde_json::to_value(&report).map_err(Failure::user)?);
        }
        format!("{}\n", serde_json::Value::Object(obj))
    } else {
        match emit {
            Emit::Spec => text,
            Emit::Report => report.to_kv(),
            Emit::Both => {
                let comments: String = report.to_kv().lines().map(|l| format!("# {l}\n")).collect();
                format!("{text}\n{comments}")
            }
        }
    };
    write_output(out, &rendered)
}

fn cmd_run(spec: &Path, trace: &Path, stats: Option<&Path>, json: bool, end: Option<Rational>) -> CmdResult {
    let ts = load_spec(spec)?;
    let trace = load_trace(&ts, trace)?;
    let monitor = Monitor::new(&ts).map_err(interp_failure)?;
    let result = monitor.run(&trace, &RunOptions { end }).map_err(interp_failure)?;
    let lines: String = result.observations.iter().map(|o| format!("{o}\n")).collect();
    write_output(None, &lines)?;
    if let Some(path) = stats {
        let text = if json {
            format!("{}\n", serde_json::to_string(&result.stats).map_err(Failure::user)?)
        } else {
            result.stats.to_kv()
        };
        write_output(Some(path), &text)?;
    }
    Ok(())
}

fn cmd_bench(spec: &Path, trace: &Path, passes: &str, repeat: usize, json: bool) -> CmdResult {
    let ts = load_spec(spec)?;
    let trace = load_trace(&ts, trace)?;
    let passes = Pass::parse_list(passes).map_err(Failure::user)?;
    let report = bench(&ts, &trace, &variants(&passes), repeat).map_err(|e| match e {
        strm_core::harness::HarnessError::Interp(e) => interp_failure(e),
        other => Failure::user(other),
    })?;
    let text = if json { format!("{}\n", serde_json::to_string(&report).map_err(Failure::user)?) } else { report.to_kv() };
    write_output(None, &text)?;
    if report.identical {
        Ok(())
    } else {
        Err(Failure(EXIT_INEQUIVALENT, "transformed specification changed the observations".into()))
    }
}

fn cmd_gen_trace(spec: &Path, args: &TraceArgs, out: Option<&Path>) -> CmdResult {
    let ts = load_spec(spec)?;
    let trace = generate(ts.spec(), &args.config(args.seed, 10_000)).map_err(Failure::user)?;
    write_output(out, &write_trace(&trace).map_err(Failure::user)?)
}

fn cmd_equiv(spec: &Path, passes: &str, traces: u64, args: &TraceArgs) -> CmdResult {
    let ts = load_spec(spec)?;
    let passes = Pass::parse_list(passes).map_err(Failure::user)?;
    let seeds: Vec<u64> = (args.seed..args.seed + traces).collect();
    // Reject bad generator options before spreading work.
    generate(ts.spec(), &args.config(args.seed, 0)).map_err(Failure::user)?;
    let name = spec.display().to_string();
    let report = equivalence_suite(&[(&name, &ts)], &variants(&passes), &seeds, |ts, seed| {
        generate(ts.spec(), &args.config(seed, 10_000)).expect("validated options")
    })
    .map_err(Failure::user)?;
    let mut text = format!(
        "comparisons\t{}\nskipped\t{}\ndivergences\t{}\n",
        report.comparisons,
        report.skipped,
        report.failures.len()
    );
    for f in &report.failures {
        text.push_str(&format!("{f}\n"));
        if let Ok(prefix) = write_trace(&f.divergence.prefix) {
            text.push_str(&prefix);
        }
    }
    write_output(None, &text)?;
    if report.is_equivalent() {
        Ok(())
    } else {
        Err(Failure(EXIT_INEQUIVALENT, format!("{} divergences", report.failures.len())))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USER) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Check { spec } => cmd_check(spec),
        Command::Optimize { spec, passes, max_rounds, emit, json, out } => {
            cmd_optimize(spec, passes, *max_rounds, *emit, *json, out.as_deref())
        }
        Command::Run { spec, trace, stats, json, end } => cmd_run(spec, trace, stats.as_deref(), *json, *end),
        Command::Bench { spec, trace, passes, repeat, json } => cmd_bench(spec, trace, passes, *repeat, *json),
        Command::GenTrace { spec, trace, out } => cmd_gen_trace(spec, trace, out.as_deref()),
        Command::Equiv { spec, passes, traces, trace } => cmd_equiv(spec, passes, *traces, trace),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn durations() {
        assert_eq!(parse_duration("100ms"), Ok(Rational::new(1, 10)));
        assert_eq!(parse_duration("2s"), Ok(Rational::from_integer(2)));
        assert_eq!(parse_duration("0.25"), Ok(Rational::new(1, 4)));
        assert_eq!(parse_duration("10us"), Ok(Rational::new(1, 100_000)));
        assert!(parse_duration("fast").is_err());
    }

    #[test]
    fn rates_ranges_biases() {
        assert_eq!(parse_rate("lat,lon=10ms"), Ok((vec!["lat".into(), "lon".into()], Rational::new(1, 100))));
        assert!(parse_rate("=1s").is_err());
        assert_eq!(parse_range("x=-1:2.5"), Ok(("x".into(), -1.0, 2.5)));
        assert!(parse_range("x=1").is_err());
        assert_eq!(parse_bias("b=0.9"), Ok(("b".into(), 0.9)));
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
