use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gapbench::settings::{load_settings, spec_from_settings, Settings};
use gapbench::{emit, read_records, run_experiment, summarize, write_summaries, BenchError, Format, GroupKey, Metric};

/// Compress and reconstruct signal segments with GAP, SGAP, OMMP or SOMMP.
///
/// Every flag can also be given through an environment variable
/// `GAPBENCH_<FLAG>` (for example `GAPBENCH_SEED=7`) or a `--config` file of
/// `key = value` lines. Precedence: flag, environment, config file.
#[derive(Parser)]
#[command(name = "gapbench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm over a compression-ratio grid.
    Run(RunArgs),
    /// Reduce a records file to boxplot rows.
    Summarize(SummarizeArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, env = "GAPBENCH_CONFIG")]
    config: Option<PathBuf>,
    /// gap, sgap, ommp or sommp.
    #[arg(long, env = "GAPBENCH_ALGORITHM")]
    algorithm: Option<String>,
    /// CSV recording or synth:<N>,<segments>,<channels>,<cosupport>.
    #[arg(long, env = "GAPBENCH_INPUT")]
    input: Option<String>,
    /// Comma-separated compression ratios n/N.
    #[arg(long, env = "GAPBENCH_CR")]
    cr: Option<String>,
    #[arg(long, env = "GAPBENCH_SEED")]
    seed: Option<String>,
    #[arg(long, env = "GAPBENCH_T")]
    t: Option<String>,
    #[arg(long, env = "GAPBENCH_LAMBDA")]
    lambda: Option<String>,
    #[arg(long, env = "GAPBENCH_ATOMS_PER_ITER")]
    atoms_per_iter: Option<String>,
    /// Relative residual at which OMMP/SOMMP stop.
    #[arg(long, env = "GAPBENCH_RESIDUAL_TOL")]
    residual_tol: Option<String>,
    #[arg(long, env = "GAPBENCH_WAVELET_ORDER")]
    wavelet_order: Option<String>,
    /// Report PRD in percent.
    #[arg(long, env = "GAPBENCH_PERCENT_PRD")]
    percent_prd: bool,
    /// Draw a new sensing matrix for every segment.
    #[arg(long, env = "GAPBENCH_PHI_PER_SEGMENT")]
    phi_per_segment: bool,
    /// csv or json.
    #[arg(long, env = "GAPBENCH_FORMAT")]
    format: Option<String>,
    /// Output directory.
    #[arg(long, env = "GAPBENCH_OUT")]
    out: Option<String>,
}

#[derive(Args)]
struct SummarizeArgs {
    #[arg(long, env = "GAPBENCH_RECORDS")]
    records: PathBuf,
    /// Comma-separated keys from cr, algorithm, channel.
    #[arg(long, env = "GAPBENCH_GROUP_BY", default_value = "cr,algorithm")]
    group_by: String,
    /// prd, iterations, wall_time or solve_count.
    #[arg(long, env = "GAPBENCH_METRIC", default_value = "prd")]
    metric: String,
    /// Output file; `.json` selects JSON.
    #[arg(long, env = "GAPBENCH_SUMMARY_OUT")]
    out: PathBuf,
}

impl RunArgs {
    fn settings(&self) -> Result<Settings, BenchError> {
        let mut s = match &self.config {
            Some(path) => load_settings(path)?,
            None => Settings::new(),
        };
        let pairs = [
            ("algorithm", &self.algorithm),
            ("input", &self.input),
            ("cr", &self.cr),
            ("seed", &self.seed),
            ("t", &self.t),
            ("lambda", &self.lambda),
            ("atoms-per-iter", &self.atoms_per_iter),
            ("residual-tol", &self.residual_tol),
            ("wavelet-order", &self.wavelet_order),
            ("format", &self.format),
            ("out", &self.out),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                s.insert(key.into(), v.clone());
            }
        }
        if self.percent_prd {
            s.insert("percent-prd".into(), "true".into());
        }
        if self.phi_per_segment {
            s.insert("phi-per-segment".into(), "true".into());
        }
        Ok(s)
    }
}

fn run(args: &RunArgs) -> Result<bool, BenchError> {
    let settings = args.settings()?;
    let spec = spec_from_settings(&settings)?;
    let format: Format = settings.get("format").map_or(Ok(Format::Csv), |f| f.parse())?;
    let outcome = run_experiment(&spec)?;
    if outcome.records.is_empty() {
        log::error!("no segment was reconstructed");
        return Ok(false);
    }
    let summaries = summarize(&outcome.records, &[GroupKey::Cr, GroupKey::Algorithm], Metric::Prd)?;
    let (records, summary) = emit(&outcome.records, &summaries, &spec.output_path, format)?;
    log::info!(
        "{} records -> {}, {} groups -> {}",
        outcome.records.len(),
        records.display(),
        summaries.len(),
        summary.display()
    );
    for f in &outcome.failures {
        eprintln!("failed: segment {} at cr {}: {}", f.segment, f.cr, f.message);
    }
    Ok(outcome.is_complete())
}

fn summarize_cmd(args: &SummarizeArgs) -> Result<bool, BenchError> {
    let keys = GroupKey::parse_list(&args.group_by)?;
    let metric: Metric = args.metric.parse()?;
    let records = read_records(&args.records)?;
    let summaries = summarize(&records, &keys, metric)?;
    write_summaries(&summaries, &args.out, Format::for_path(Path::new(&args.out)))?;
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => run(a),
        Command::Summarize(a) => summarize_cmd(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("gapbench: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 1 })
        }
    }
}
