//! Command-line front end: load a JSON experiment description, run it, and
//! leave a reproducible trail (CSV tables, SVG plots, a manifest with the
//! config digest) in the output directory.
//!
//! Exit codes: 0 success, 2 configuration/schema error, 3 numerical failure,
//! 4 completed with warnings under `--strict`.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, ValueEnum};

use qsymp::config::{load_config_str, ExperimentKind};
use qsymp::exec::{configure_threads, parallel_enabled};
use qsymp::output::{ensure_dir, sha256_hex, write_error_record, RunManifest};
use qsymp::runner::run;
use qsymp::QsympError;

#[derive(Clone, Copy, Debug, ValueEnum)]
#[value(rename_all = "kebab-case")]
enum Command {
    /// Mode table, H^{-1} norm, and a rational-dependence scan of the matrix.
    SpectralCheck,
    /// Enumerate fixed points / critical points in a box.
    FixedPoints,
    /// Box-counting density along a growing schedule of half-widths.
    ErgodicDensity,
    /// Smoothed Monte Carlo counting estimate along an ε schedule.
    KacRice,
    /// Exact surface-integral density over the singular level set.
    Coarea,
    /// Integrate one time-periodic Hamiltonian flow over a period.
    Flow,
    /// Fixed-point census and type balance for a planar annulus map.
    Pb2d,
    /// All three density estimators on one field, with their spread.
    Xval,
    /// Monte Carlo check that the period-one displacement averages to zero.
    MeanDisplacement,
}

impl From<Command> for ExperimentKind {
    fn from(cmd: Command) -> Self {
        match cmd {
            Command::SpectralCheck => ExperimentKind::SpectralCheck,
            Command::FixedPoints => ExperimentKind::FixedPoints,
            Command::ErgodicDensity => ExperimentKind::ErgodicDensity,
            Command::KacRice => ExperimentKind::KacRice,
            Command::Coarea => ExperimentKind::Coarea,
            Command::Flow => ExperimentKind::Flow,
            Command::Pb2d => ExperimentKind::Pb2d,
            Command::Xval => ExperimentKind::Xval,
            Command::MeanDisplacement => ExperimentKind::MeanDisplacement,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "qsymp",
    version,
    about = "Quasiperiodic twist maps: construction, fixed points, and density estimates"
)]
struct Cli {
    /// Experiment to run; must match the config's `experiment` field.
    #[arg(value_enum)]
    command: Command,

    /// JSON experiment description.
    #[arg(long)]
    config: PathBuf,

    /// Override the seed stored in the config.
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads for the data-parallel stages (default: all cores).
    #[arg(long)]
    threads: Option<usize>,

    /// Output directory (default: the config's out_dir, then ./qsymp_out).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Exit with code 4 when the run completes but reports warnings.
    #[arg(long)]
    strict: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let kind: ExperimentKind = cli.command.into();

    let raw_bytes = match std::fs::read(&cli.config) {
        Ok(bytes) => bytes,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", cli.config.display());
            return ExitCode::from(2);
        }
    };
    let config_digest = sha256_hex(&raw_bytes);
    let text = String::from_utf8_lossy(&raw_bytes);

    let out_dir = cli
        .out
        .clone()
        .or_else(|| {
            // Peek at out_dir without full validation so failures still leave
            // an error record where the config asked for one.
            serde_json::from_str::<serde_json::Value>(&text)
                .ok()
                .and_then(|v| v.get("out_dir")?.as_str().map(PathBuf::from))
        })
        .unwrap_or_else(|| PathBuf::from("qsymp_out"));

    let fail = |err: QsympError| -> ExitCode {
        eprintln!("error: {err}");
        if ensure_dir(&out_dir).is_ok() {
            if let Err(e) = write_error_record(&out_dir, &err) {
                eprintln!("error: cannot write error record: {e}");
            }
        }
        ExitCode::from(err.exit_code() as u8)
    };

    configure_threads(cli.threads);

    let resolved = match load_config_str(&text) {
        Ok(r) => r,
        Err(err) => return fail(err),
    };
    let seed = cli.seed.unwrap_or(resolved.raw.seed);

    let start = Instant::now();
    let outcome = match run(kind, &resolved, &out_dir, seed) {
        Ok(outcome) => outcome,
        Err(err) => return fail(err),
    };
    let wall_seconds = start.elapsed().as_secs_f64();

    let manifest = RunManifest {
        command: kind.name().to_string(),
        config_digest,
        seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        threads: cli.threads,
        parallel: parallel_enabled(),
        wall_seconds,
        warnings: outcome.warnings.clone(),
        outputs: outcome
            .outputs
            .iter()
            .map(|p| p.display().to_string())
            .collect(),
    };
    let manifest_path = out_dir.join("run_manifest.json");
    if let Err(err) = manifest.write(&manifest_path) {
        return fail(err);
    }

    for warning in &outcome.warnings {
        eprintln!("warning: {warning}");
    }
    for output in &outcome.outputs {
        println!("{}", output.display());
    }
    println!("{}", manifest_path.display());

    if cli.strict && !outcome.warnings.is_empty() {
        ExitCode::from(4)
    } else {
        ExitCode::SUCCESS
    }
}
