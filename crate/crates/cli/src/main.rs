//! `dlphase` command-line driver.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{error, info};

use dlphase::config::{RunConfig, RUN_PAPER_DEFAULT};
use dlphase::extract::Case;
use dlphase::io::TraceFormat;
use dlphase::pipeline::{self, RunPaths, Selection};
use dlphase::Error;

#[derive(Parser, Debug)]
#[command(name = "dlphase", version, about = "Double-Λ phase-sensitive amplification: simulation, extraction and tomography")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthesize the signal, vacuum and reference homodyne bursts.
    Simulate(Common),
    /// Calibrate, extract quadrature records and bin them.
    Extract {
        #[command(flatten)]
        common: Common,
        /// Signal trace to read instead of the one in the run directory.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Re-bin existing records.
    Bin(Common),
    /// Reconstruct density matrices per bin and case.
    Reconstruct {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        select: Select,
    },
    /// Emit plot-ready tables from the reconstructions.
    Report(Common),
    /// Run every stage.
    Pipeline(Common),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// JSON config file or preset name.
    #[arg(long, default_value = RUN_PAPER_DEFAULT)]
    config: String,
    #[arg(long)]
    seed: Option<u64>,
    /// Run directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for the parallel stages.
    #[arg(long)]
    jobs: Option<usize>,
    /// Fock-space cutoff.
    #[arg(long)]
    cutoff: Option<usize>,
    #[arg(long)]
    n_bins: Option<usize>,
    /// 100 MHz sampling instead of the desk-scale rate.
    #[arg(long)]
    paper_scale: bool,
    /// Trace encoding written by `simulate`.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Bootstrap resamples per reconstruction (0 disables error bars).
    #[arg(long)]
    bootstrap: Option<usize>,
}

#[derive(Args, Debug, Clone, Default)]
struct Select {
    /// Comma-separated bin indices.
    #[arg(long, value_delimiter = ',')]
    bins: Option<Vec<usize>>,
    /// Comma-separated cases (`probe`, `dl`, `fwm`).
    #[arg(long, value_delimiter = ',', value_parser = parse_case)]
    cases: Option<Vec<Case>>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Format {
    Binary,
    Csv,
}

fn parse_case(s: &str) -> Result<Case, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl Common {
    fn resolve(&self, needs_seed: bool) -> Result<(RunConfig, RunPaths), Error> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = Some(seed);
        }
        if let Some(out) = &self.out {
            cfg.output = Some(out.clone());
        }
        if let Some(c) = self.cutoff {
            cfg.cutoff = c;
        }
        if let Some(n) = self.n_bins {
            cfg.n_bins = n;
        }
        if let Some(b) = self.bootstrap {
            cfg.bootstrap = b;
        }
        if self.paper_scale {
            cfg.set_paper_scale();
        }
        if let Some(f) = self.format {
            cfg.trace_format = match f {
                Format::Binary => TraceFormat::Binary,
                Format::Csv => TraceFormat::Csv,
            };
        }
        if needs_seed && cfg.seed.is_none() {
            return Err(Error::Config("--seed is required (or `seed` in the config)".into()));
        }
        cfg.validate()?;
        let root = cfg.output.clone().ok_or_else(|| Error::Config("--out is required (or `output` in the config)".into()))?;
        Ok((cfg, RunPaths::new(root)))
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let common = match &cli.command {
        Command::Simulate(c) | Command::Bin(c) | Command::Report(c) | Command::Pipeline(c) => c,
        Command::Extract { common, .. } | Command::Reconstruct { common, .. } => common,
    };
    if let Some(jobs) = common.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let needs_seed = matches!(cli.command, Command::Simulate(_) | Command::Pipeline(_));
    let (cfg, paths) = common.resolve(needs_seed)?;
    let mut out = std::io::stdout().lock();
    let _ = match &cli.command {
        Command::Simulate(_) => {
            let s = pipeline::simulate(&cfg, &paths)?;
            writeln!(out, "simulate samples={} scans={} sample_rate={} out={}", s.samples, s.scans, s.sample_rate, paths.root.display())
        }
        Command::Extract { trace, .. } => {
            let s = pipeline::extract(&cfg, &paths, trace.as_deref())?;
            writeln!(
                out,
                "extract shots={} records={} excluded_shots={} degenerate_dl={} scale={} vacuum_calibrated={}",
                s.shots, s.records, s.excluded_shots, s.degenerate_dl, s.scale, s.vacuum_calibrated
            )
        }
        Command::Bin(_) => {
            let rows = pipeline::rebin(&paths, cfg.n_bins)?;
            let counts: Vec<String> = rows.iter().map(|r| format!("{}:{}/{}/{}", r.bin_index, r.count_probe, r.count_dl, r.count_fwm)).collect();
            writeln!(out, "bin n_bins={} counts={}", rows.len(), counts.join(","))
        }
        Command::Reconstruct { select, .. } => {
            let selection = Selection { bins: select.bins.clone(), cases: select.cases.clone() };
            let reports = pipeline::reconstruct(&cfg, &paths, &selection)?;
            writeln!(out, "reconstruct reports={}", reports.len())
        }
        Command::Report(_) => {
            let s = pipeline::report(&cfg, &paths)?;
            writeln!(out, "report reports={} dir={}", s.reports, paths.figures_dir().display())
        }
        Command::Pipeline(_) => {
            let s = pipeline::run_all(&cfg, &paths)?;
            for l in &s.loci {
                info!(
                    "stage=summary case={} bins={} mean_radius={:.4} max_radius_deviation={:.4} center_offset={:.4}",
                    l.case, l.bins, l.mean_radius, l.max_radius_deviation, l.center_offset
                );
            }
            writeln!(out, "pipeline reports={} out={}", s.reports, paths.root.display())
        }
    };
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format(|buf, record| writeln!(buf, "level={} {}", record.level(), record.args()))
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("error=\"{e}\"");
            eprintln!("dlphase: {e}");
            if e.is_usage() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
