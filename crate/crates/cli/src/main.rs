use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cmtsim::config::{Config, ConfigError};
use cmtsim::harness::figures::{self, Figure, FigureKind};
use cmtsim::harness::metrics::{events_csv, results_csv, summary_csv, trace_csv, trace_gnuplot};
use cmtsim::harness::{run_experiment, summarize, sweep};

#[derive(Parser)]
#[command(name = "cmtsim", version, about = "Multipath SCTP congestion-control simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single (scenario, algorithm, seed) point.
    Run(Common),
    /// Run the configured grid and write raw and summary CSVs.
    Sweep(Common),
    /// Run a single point and write the congestion-window trace.
    Trace(Common),
}

#[derive(Args)]
struct Common {
    /// Flat key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set cc.algo=cmt-berp`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Start from a figure preset (2, 3, 5, 6, 8 or 9).
    #[arg(long)]
    figure: Option<u32>,
    /// Worker threads for sweeps.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Directory for relative output paths.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

enum Failure {
    Config(String),
    Timeout(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Timeout(_) => 3,
            Failure::Io(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Timeout(m) | Failure::Io(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(format!("config error: {e}"))
    }
}

fn load(c: &Common) -> Result<(Config, Option<&'static Figure>), Failure> {
    let mut cfg = Config::default();
    let fig = match c.figure {
        Some(n) => {
            let f = figures::figure(n)
                .ok_or_else(|| Failure::Config(format!("config error: no preset for figure {n}")))?;
            f.apply(&mut cfg)?;
            Some(f)
        }
        None => None,
    };
    if let Some(path) = &c.config {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
        cfg.apply_text(&text)?;
    }
    for kv in &c.overrides {
        cfg.apply_override(kv)?;
    }
    cfg.validate()?;
    Ok((cfg, fig))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, Failure> {
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Failure::Io(format!("cannot create {}: {e}", parent.display())))?;
    }
    fs::write(&path, contents).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

fn with_suffix(name: &str, suffix: &str) -> String {
    match name.rsplit_once('.') {
        Some((stem, _)) => format!("{stem}{suffix}"),
        None => format!("{name}{suffix}"),
    }
}

fn cmd_run(c: &Common) -> Result<(), Failure> {
    let (cfg, _) = load(c)?;
    let s = &cfg.scenario;
    let seed = s.seeds[0];
    let r = run_experiment(&cfg, s.template, s.point(), cfg.cc.algo, seed, None);
    let csv = results_csv(std::slice::from_ref(&r.record));
    write(&c.out, &cfg.output.results_path, &csv)?;
    print!("{csv}");
    if r.record.timed_out {
        return Err(Failure::Timeout(format!("simulation hit the {} s time cap", s.time_cap)));
    }
    Ok(())
}

fn cmd_sweep(c: &Common) -> Result<(), Failure> {
    let (cfg, fig) = load(c)?;
    if let Some(f) = fig {
        if f.kind != FigureKind::Sweep {
            return Err(Failure::Config(format!(
                "config error: figure {} is a trace preset; use `trace`",
                f.number
            )));
        }
    }
    let records = sweep(&cfg, c.jobs.max(1));
    let rows = summarize(&records);
    write(&c.out, &cfg.output.results_path, &results_csv(&records))?;
    write(&c.out, &cfg.output.summary_path, &summary_csv(&rows))?;
    if let Some(f) = fig {
        let name = format!("fig{}.csv", f.number);
        write(&c.out, &name, &f.csv(&cfg.scenario.algos, &rows))?;
        let gp = f.gnuplot(&name, cfg.scenario.template, &cfg.scenario.algos);
        write(&c.out, &format!("fig{}.gp", f.number), &gp)?;
    }
    let failed = records.iter().filter(|r| r.timed_out).count();
    eprintln!("{} runs, {} timed out", records.len(), failed);
    if failed == records.len() {
        return Err(Failure::Timeout("every sweep point timed out".into()));
    }
    Ok(())
}

fn cmd_trace(c: &Common) -> Result<(), Failure> {
    let (cfg, fig) = load(c)?;
    if let Some(f) = fig {
        if f.kind != FigureKind::Trace {
            return Err(Failure::Config(format!(
                "config error: figure {} is a sweep preset; use `sweep`",
                f.number
            )));
        }
    }
    let s = &cfg.scenario;
    let r = run_experiment(&cfg, s.template, s.point(), cfg.cc.algo, s.seeds[0], Some(cfg.output.trace_interval));
    let name = &cfg.output.trace_path;
    write(&c.out, name, &trace_csv(&r.trace))?;
    write(&c.out, &with_suffix(name, "_events.csv"), &events_csv(&r.decreases))?;
    let file_name = Path::new(name).file_name().and_then(|n| n.to_str()).unwrap_or(name);
    let title = format!("{} on scenario {} at {}", cfg.cc.algo, s.template, s.point());
    let paths = r.record.paths.len();
    write(&c.out, &with_suffix(name, ".gp"), &trace_gnuplot(file_name, &title, paths))?;
    if r.record.timed_out {
        return Err(Failure::Timeout(format!("simulation hit the {} s time cap", s.time_cap)));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Run(c) => cmd_run(c),
        Command::Sweep(c) => cmd_sweep(c),
        Command::Trace(c) => cmd_trace(c),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("cmtsim: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
