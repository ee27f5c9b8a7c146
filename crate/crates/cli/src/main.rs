mod render;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use lrdbreak::asymptotics::validate_bandwidth_rule;
use lrdbreak::diagnostics::{self, DEFAULT_MAX_LAG, DEFAULT_WINDOW};
use lrdbreak::experiments::{rejection_table, McConfig, McStatistic};
use lrdbreak::pipeline::{load_series, write_values, ColumnSelector, InputError, Pipeline};
use lrdbreak::report::{run_segmentation, run_test, RunError, TestOptions, TOOL_NAME, TOOL_VERSION};
use lrdbreak::simulate::{farima_tail_variance, farima_truncation, simulate, Model, ProcessSpec, Source};
use lrdbreak::stats::DEFAULT_MIN_SEG;
use lrdbreak::BandwidthRule;

const REPORT_DIR_VAR: &str = "LRDBREAK_REPORT_DIR";

#[derive(Parser)]
#[command(name = "lrdbreak", version, about = "Change-point versus long-range dependence tests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Structured,
}

#[derive(clap::Args)]
struct Output {
    /// Write the report here instead of only printing it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(clap::Args)]
struct Input {
    /// CSV or plain text file, one observation per row.
    path: PathBuf,
    /// Transform chain such as `prices:log_returns_pct,demean,square`.
    #[arg(long, default_value = "levels")]
    pipeline: Pipeline,
    /// Column index (0-based) or header name.
    #[arg(long)]
    column: Option<ColumnSelector>,
}

impl Input {
    fn pipeline(&self) -> Pipeline {
        match &self.column {
            Some(c) => self.pipeline.clone().with_column(c.clone()),
            None => self.pipeline.clone(),
        }
    }
}

#[derive(clap::Args)]
struct Testing {
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Multiplier c in q(n) = floor(c log10 n).
    #[arg(long, default_value_t = 15.0)]
    bandwidth_mult: f64,
    #[arg(long, default_value_t = DEFAULT_MIN_SEG)]
    min_seg: usize,
}

impl Testing {
    fn options(&self) -> TestOptions {
        TestOptions {
            alpha: self.alpha,
            bandwidth: BandwidthRule::log10(self.bandwidth_mult),
            min_seg: self.min_seg,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// Two-regime GARCH(1,1) fitted to the Dow Jones returns.
    DowJonesGarch,
    /// LARCH with a = 0.03, b0 = 0.25, d = 0.35.
    Larch,
    Iid,
}

impl Preset {
    fn spec(self) -> ProcessSpec {
        match self {
            Preset::DowJonesGarch => ProcessSpec::dow_jones_garch(),
            Preset::Larch => ProcessSpec::long_memory_larch(),
            Preset::Iid => ProcessSpec::iid(1.0),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum McPreset {
    /// Size: squared two-regime GARCH returns.
    GarchSize,
    /// Power: squared LARCH returns.
    LarchPower,
}

#[derive(Subcommand)]
enum Command {
    /// Split test of a single change in mean against long memory.
    Test {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        testing: Testing,
        #[command(flatten)]
        output: Output,
    },
    /// Multistage segmentation with up to `--max-changes` change-points.
    Segment {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        testing: Testing,
        #[arg(long, default_value_t = 2)]
        max_changes: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Simulate a process from a JSON spec or a preset.
    Simulate {
        /// JSON process or change-point spec.
        spec: Option<PathBuf>,
        #[arg(long, conflicts_with = "spec")]
        preset: Option<Preset>,
        #[arg(long)]
        n: usize,
        /// Overrides the seed recorded in the spec.
        #[arg(long)]
        seed: Option<u64>,
        /// Values file; metadata goes to `<out>.meta.json`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo rejection rates.
    Mc {
        /// JSON experiment config.
        config: Option<PathBuf>,
        #[arg(long, conflicts_with = "config")]
        preset: Option<McPreset>,
        #[arg(long)]
        replications: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Levels to tabulate; repeat for several.
        #[arg(long)]
        alpha: Vec<f64>,
        #[command(flatten)]
        output: Output,
    },
    /// Autocorrelations and periodogram tables.
    Diag {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = DEFAULT_MAX_LAG)]
        max_lag: usize,
        #[arg(long, default_value_t = DEFAULT_WINDOW)]
        window: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Check a bandwidth rule against the growth conditions on a doubling grid.
    BandwidthCheck {
        #[arg(long, default_value_t = 15.0)]
        bandwidth_mult: f64,
        #[arg(long)]
        hurst: Option<f64>,
        #[arg(long, default_value_t = 1 << 40)]
        n_max: u64,
        #[command(flatten)]
        output: Output,
    },
}

/// Exit status 1: bad input; 2: the statistics could not be computed.
enum Failure {
    Input(String),
    Compute(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Compute(_) => 2,
        }
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Input(e) => Failure::Input(e.to_string()),
            RunError::Compute(e) => Failure::Compute(e.to_string()),
        }
    }
}

impl From<InputError> for Failure {
    fn from(e: InputError) -> Self {
        RunError::Input(e).into()
    }
}

impl From<lrdbreak::Error> for Failure {
    fn from(e: lrdbreak::Error) -> Self {
        if e.is_computational() {
            Failure::Compute(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

fn io_failure(path: &Path) -> impl FnOnce(io::Error) -> Failure + '_ {
    move |e| Failure::Input(format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (kind, msg) = match &f {
                Failure::Input(m) => ("input error", m),
                Failure::Compute(m) => ("computation error", m),
            };
            eprintln!("{TOOL_NAME}: {kind}: {msg}");
            ExitCode::from(f.code())
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Test { input, testing, output } => {
            let report = run_test(&input.path, &input.pipeline(), &testing.options())?;
            emit(&output, "test", Some(&input.path), &report, || report.render_text())
        }
        Command::Segment {
            input,
            testing,
            max_changes,
            output,
        } => {
            let report = run_segmentation(&input.path, &input.pipeline(), &testing.options(), max_changes)?;
            emit(&output, "segment", Some(&input.path), &report, || report.render_text())
        }
        Command::Simulate {
            spec,
            preset,
            n,
            seed,
            out,
        } => run_simulate(spec.as_deref(), preset, n, seed, &out),
        Command::Mc {
            config,
            preset,
            replications,
            seed,
            alpha,
            output,
        } => {
            let mut config = match (config, preset) {
                (Some(path), _) => {
                    let text = fs::read_to_string(&path).map_err(io_failure(&path))?;
                    serde_json::from_str::<McConfig>(&text)
                        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?
                }
                (None, Some(McPreset::GarchSize)) => McConfig::garch_size(300, 0),
                (None, Some(McPreset::LarchPower)) => McConfig::larch_power(300, 0),
                (None, None) => return Err(Failure::Input("give a config file or --preset".into())),
            };
            if let Some(r) = replications {
                config.replications = r;
            }
            if let Some(s) = seed {
                config.master_seed = s;
            }
            if !alpha.is_empty() {
                config.alphas = alpha;
            }
            let table = rejection_table(&config)?;
            let name = match config.statistic {
                McStatistic::SplitMax => "mc",
                McStatistic::Cusum => "mc_cusum",
            };
            emit(&output, name, None, &table, || render::rejection_table(&table))
        }
        Command::Diag {
            input,
            max_lag,
            window,
            output,
        } => {
            let x = load_series(&input.path, &input.pipeline())?;
            let d = diagnostics::diagnostics(&x, max_lag, window)?;
            emit(&output, "diag", Some(&input.path), &d, || render::diagnostics(&d))
        }
        Command::BandwidthCheck {
            bandwidth_mult,
            hurst,
            n_max,
            output,
        } => {
            let report = validate_bandwidth_rule(BandwidthRule::log10(bandwidth_mult), hurst, n_max)?;
            emit(&output, "bandwidth-check", None, &report, || render::bandwidth(&report))
        }
    }
}

/// Prints the report and writes it to `--out`, or to the report directory
/// when one is configured.
fn emit<T: Serialize>(
    output: &Output,
    command: &str,
    input: Option<&Path>,
    value: &T,
    text: impl FnOnce() -> String,
) -> Result<(), Failure> {
    let json = serde_json::to_string_pretty(value).expect("reports serialize");
    let body = match output.format {
        Format::Text => text(),
        Format::Structured => format!("{json}\n"),
    };
    let target = output.out.clone().or_else(|| {
        let dir = std::env::var_os(REPORT_DIR_VAR)?;
        let stem = input
            .and_then(|p| p.file_stem())
            .map(|s| format!("-{}", s.to_string_lossy()))
            .unwrap_or_default();
        let ext = match output.format {
            Format::Text => "txt",
            Format::Structured => "json",
        };
        Some(PathBuf::from(dir).join(format!("{command}{stem}.{ext}")))
    });
    if let Some(path) = target {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(io_failure(parent))?;
        }
        fs::write(&path, &body).map_err(io_failure(&path))?;
        log::info!("wrote {}", path.display());
    }
    let mut stdout = io::stdout().lock();
    let _ = stdout.write_all(body.as_bytes());
    Ok(())
}

#[derive(Serialize)]
struct SimulationMeta<'a> {
    tool: &'a str,
    version: &'a str,
    n: usize,
    seed: u64,
    source: &'a Source,
    /// Variance left out by truncating a FARIMA filter.
    #[serde(skip_serializing_if = "Option::is_none")]
    truncation_tail_variance: Option<f64>,
}

fn read_source(path: &Path) -> Result<Source, Failure> {
    let text = fs::read_to_string(path).map_err(io_failure(path))?;
    // A bare process spec is accepted as well as the tagged form.
    serde_json::from_str::<Source>(&text)
        .or_else(|_| serde_json::from_str::<ProcessSpec>(&text).map(Source::Process))
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn run_simulate(
    spec: Option<&Path>,
    preset: Option<Preset>,
    n: usize,
    seed: Option<u64>,
    out: &Path,
) -> Result<(), Failure> {
    let source = match (spec, preset) {
        (Some(path), _) => read_source(path)?,
        (None, Some(p)) => Source::Process(p.spec()),
        (None, None) => return Err(Failure::Input("give a spec file or --preset".into())),
    };
    let recorded = match &source {
        Source::Process(p) => p.seed,
        Source::ChangePoint(c) => c.innovation.seed,
    };
    let seed = seed.unwrap_or(recorded);
    let x = simulate(&source, n, seed)?;

    let tail = match &source {
        Source::Process(ProcessSpec {
            model: Model::Farima { d, truncation },
            ..
        }) => Some(farima_tail_variance(*d, truncation.unwrap_or_else(|| farima_truncation(n)))?),
        _ => None,
    };
    let meta = SimulationMeta {
        tool: TOOL_NAME,
        version: TOOL_VERSION,
        n,
        seed,
        source: &source,
        truncation_tail_variance: tail,
    };

    let file = fs::File::create(out).map_err(io_failure(out))?;
    write_values(io::BufWriter::new(file), &x).map_err(io_failure(out))?;
    let mut meta_path = out.as_os_str().to_owned();
    meta_path.push(".meta.json");
    let meta_path = PathBuf::from(meta_path);
    let json = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    fs::write(&meta_path, json + "\n").map_err(io_failure(&meta_path))?;
    Ok(())
}
