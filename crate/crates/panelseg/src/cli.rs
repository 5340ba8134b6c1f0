// SPDX-License-Identifier: MIT OR Apache-2.0

//! The `panelseg` command-line front end.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use panelseg_core::{DcMode, DetectorConfig, PanelData, WindowRule};
use serde::Serialize;

use crate::bootstrap::{substream, BootstrapThreshold};
use crate::detect::{detect, scale_panel, threshold_table};
use crate::error::{Error, Result};
use crate::io::{read_panel, write_panel_to};
use crate::report::{self, VERSION};
use crate::simgen::plan::{load_plan, parse_change, parse_mode, parse_window_rule, preset, write_table, PRESETS};
use crate::simgen::{gen_noise, gen_signal, run_experiment, ChangeTruth, NoiseModel, NoiseSpec, SignRule, SignalSpec};

#[derive(Debug, Parser)]
#[command(name = "panelseg", version, about = "Change-point detection in high-dimensional panels")]
pub struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "PANELSEG_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Detect change-points in a panel CSV (one series per row).
    Detect(DetectArgs),
    /// Print bootstrap test criteria for a panel.
    Threshold(ThresholdArgs),
    /// Write a simulated panel.
    Simulate(SimulateArgs),
    /// Run a Monte Carlo experiment from a preset or plan file.
    Benchmark(BenchmarkArgs),
}

#[derive(Debug, Args)]
pub struct DetectorFlags {
    /// `phi=<v>` or `combined[,gamma=<v>]`; defaults to combined with gamma = log n.
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<DcMode>,
    /// Overall significance level.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Bootstrap replicates.
    #[arg(long, default_value_t = 100)]
    pub boot_reps: usize,
    /// Trimming at each window end.
    #[arg(long, default_value_t = 5)]
    pub trim: usize,
    /// Depth of the scaling tree and of the Bonferroni adjustment.
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Use the overall level for every test.
    #[arg(long)]
    pub no_bonferroni: bool,
    /// Criterion for sub-windows: `pooled` over all window positions, or the per-replicate `max`.
    #[arg(long, value_parser = parse_window_rule, default_value = "pooled")]
    pub window_rule: WindowRule,
}

impl DetectorFlags {
    pub fn config(&self) -> DetectorConfig {
        DetectorConfig {
            mode: self.mode,
            alpha_star: self.alpha,
            boot_reps: self.boot_reps,
            trim: self.trim,
            depth: self.depth,
            seed: self.seed,
            bonferroni: !self.no_bonferroni,
            window_rule: self.window_rule,
        }
    }
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// JSON report path; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Write the full-length replicate statistics to this CSV.
    #[arg(long)]
    pub dump_boot: Option<PathBuf>,
    #[command(flatten)]
    pub detector: DetectorFlags,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Window lengths to report; the full length when absent.
    #[arg(long, value_delimiter = ',')]
    pub window: Vec<usize>,
    /// Write the replicate statistics of every reported window to this CSV.
    #[arg(long)]
    pub dump_boot: Option<PathBuf>,
    #[command(flatten)]
    pub detector: DetectorFlags,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModelArg {
    N1,
    N2,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SignsArg {
    Random,
    PerSeries,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "n1")]
    pub model: ModelArg,
    /// `rho` for n1, `rho_h` for n2.
    #[arg(long, default_value_t = 0.2)]
    pub rho: f64,
    #[arg(long)]
    pub n: usize,
    #[arg(long = "T")]
    pub t: usize,
    #[arg(long, default_value_t = 100)]
    pub burn_in: usize,
    /// `eta, m, delta`, e.g. `0.5T,0.4n,0.1`; repeat for several changes.
    #[arg(long)]
    pub change: Vec<String>,
    #[arg(long, default_value_t = crate::simgen::signal::DEFAULT_SPREAD)]
    pub spread: f64,
    #[arg(long, value_enum, default_value = "random")]
    pub signs: SignsArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Panel CSV path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the realised change-points as JSON.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Built-in plan: type1-n1, single, factor or multi.
    #[arg(long, conflicts_with = "plan")]
    pub preset: Option<String>,
    /// Plan file with `key = value` lines.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub boot_reps: Option<usize>,
    /// Metrics as rows and detectors as columns.
    #[arg(long)]
    pub paper_table: bool,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("panelseg: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = cli.threads {
        if k == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(k);
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("cannot start worker threads: {e}")))?;
    pool.install(|| match cli.command {
        Command::Detect(args) => cmd_detect(&args),
        Command::Threshold(args) => cmd_threshold(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Benchmark(args) => cmd_benchmark(&args),
    })
}

fn with_output(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<()> {
    let io_err = |path: &Path, source| Error::Io { path: path.to_owned(), source };
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| io_err(p, e))?;
            let mut out = BufWriter::new(file);
            f(&mut out).and_then(|()| out.flush()).map_err(|e| io_err(p, e))
        }
        None => {
            let stdout = io::stdout();
            let mut out = stdout.lock();
            f(&mut out).and_then(|()| out.flush()).map_err(|e| io_err(Path::new("<stdout>"), e))
        }
    }
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    with_output(path, |out| writeln!(out, "{text}"))
}

fn write_replicates(path: &Path, columns: &[(usize, &[f64])]) -> Result<()> {
    with_output(Some(path), |out| {
        writeln!(out, "window_len,replicate,stat")?;
        for (len, stats) in columns {
            for (l, s) in stats.iter().enumerate() {
                writeln!(out, "{len},{},{s:.16e}", l + 1)?;
            }
        }
        Ok(())
    })
}

fn cmd_detect(args: &DetectArgs) -> Result<()> {
    let panel = read_panel(&args.input)?;
    let config = args.detector.config();
    let detection = detect(&panel, &config)?;
    if let Some(path) = &args.dump_boot {
        write_replicates(path, &[(panel.n_times(), &detection.root_replicates)])?;
    }
    write_json(args.output.as_deref(), &report::build(&detection, &config, panel.n_series()))
}

#[derive(Serialize)]
struct ThresholdReport {
    version: &'static str,
    mode: String,
    alpha: f64,
    factor_number: usize,
    scales: Vec<f64>,
    thresholds: Vec<ThresholdEntry>,
}

#[derive(Serialize)]
struct ThresholdEntry {
    window_len: usize,
    quantile: f64,
}

fn cmd_threshold(args: &ThresholdArgs) -> Result<()> {
    let panel: PanelData = read_panel(&args.input)?;
    let config = args.detector.config();
    config.validate()?;
    let (n, t) = (panel.n_series(), panel.n_times());
    let mode = config.mode_for(n);
    let alpha = config.alpha_for(t);
    let (_, scaling) = scale_panel(&panel, config.depth_for(t))?;
    let mut table = threshold_table(&scaling, n, &[mode], &config)?;
    let windows = if args.window.is_empty() { vec![t] } else { args.window.clone() };
    let mut thresholds: Vec<BootstrapThreshold> = Vec::with_capacity(windows.len());
    for &len in &windows {
        if len == 0 || len > t {
            return Err(Error::Config(format!("--window {len} must lie in 1..={t}")));
        }
        thresholds.push(table.threshold(0, len, alpha)?);
    }
    if let Some(path) = &args.dump_boot {
        let cols: Vec<(usize, &[f64])> = thresholds.iter().map(|b| (b.window_len, b.replicate_stats.as_slice())).collect();
        write_replicates(path, &cols)?;
    }
    let report = ThresholdReport {
        version: VERSION,
        mode: mode.to_string(),
        alpha,
        factor_number: table.model().factor_number(),
        scales: scaling.scales(),
        thresholds: thresholds
            .iter()
            .map(|b| ThresholdEntry { window_len: b.window_len, quantile: b.quantile })
            .collect(),
    };
    write_json(args.output.as_deref(), &report)
}

#[derive(Serialize)]
struct TruthEntry {
    eta: usize,
    series: Vec<usize>,
    jumps: Vec<f64>,
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let model = match args.model {
        ModelArg::N1 => NoiseModel::N1 { rho: args.rho },
        ModelArg::N2 => NoiseModel::N2 { rho_h: args.rho },
    };
    let spec = NoiseSpec { model, n_series: args.n, n_times: args.t, burn_in: args.burn_in };
    let changes = args
        .change
        .iter()
        .map(|c| parse_change(c, args.n, args.t).map_err(|m| Error::Config(format!("--change: {m}"))))
        .collect::<Result<Vec<_>>>()?;
    let signs = match args.signs {
        SignsArg::Random => SignRule::Random,
        SignsArg::PerSeries => SignRule::PerSeries,
    };
    let signal_spec = SignalSpec { changes, spread: args.spread, signs };
    let noise = gen_noise(&spec, &mut substream(args.seed, 0))?;
    let (signal, truth) = gen_signal(&signal_spec, args.n, args.t, &mut substream(args.seed, 1))?;
    let values: Vec<f64> = noise.values().iter().zip(&signal).map(|(e, f)| e + f).collect();
    let panel = PanelData::new(args.n, args.t, values)?;
    with_output(args.out.as_deref(), |out| write_panel_to(out, &panel))?;
    if let Some(path) = &args.truth {
        let entries: Vec<TruthEntry> = truth
            .into_iter()
            .map(|ChangeTruth { eta, pi, jumps }| TruthEntry {
                eta,
                series: pi.into_iter().map(|j| j + 1).collect(),
                jumps,
            })
            .collect();
        write_json(Some(path), &entries)?;
    }
    Ok(())
}

fn cmd_benchmark(args: &BenchmarkArgs) -> Result<()> {
    let mut plan = match (&args.preset, &args.plan) {
        (Some(name), _) => preset(name).ok_or_else(|| {
            Error::Config(format!("unknown preset {name:?}; available: {}", PRESETS.join(", ")))
        })?,
        (None, Some(path)) => load_plan(path)?,
        (None, None) => return Err(Error::Config("benchmark needs --preset or --plan".into())),
    };
    if let Some(reps) = args.reps {
        plan.reps = reps;
    }
    if let Some(seed) = args.seed {
        plan.seed = seed;
    }
    if let Some(b) = args.boot_reps {
        plan.boot_reps = b;
    }
    plan.validate()?;
    let result = run_experiment(&plan)?;
    match args.format {
        FormatArg::Json => {
            #[derive(Serialize)]
            struct Wrapped<'a> {
                version: &'static str,
                #[serde(flatten)]
                result: &'a crate::simgen::ExperimentResult,
            }
            write_json(args.output.as_deref(), &Wrapped { version: VERSION, result: &result })
        }
        FormatArg::Csv => with_output(args.output.as_deref(), |out| write_table(out, &result, args.paper_table)),
    }
}
