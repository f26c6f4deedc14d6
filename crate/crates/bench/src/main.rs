use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use osa_bench::experiment::OUTSIDE;
use osa_bench::{emit_csv, run_experiment, BenchError, ExperimentConfig, Mode};

/// Runs one experiment and writes its table as CSV.
#[derive(Debug, Parser)]
#[command(name = "osa-bench", version)]
struct Cli {
    mode: Mode,
    /// Experiment file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output CSV; defaults to the output directory, else stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the configured base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Directory for outputs without an explicit path.
    #[arg(long, env = "OSA_BENCH_OUT_DIR")]
    out_dir: Option<PathBuf>,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, BenchError> {
    let text = std::fs::read_to_string(&cli.config).map_err(|source| BenchError::Io {
        path: cli.config.clone(),
        source,
    })?;
    let mut cfg = ExperimentConfig::from_toml(&text)?;
    cfg.run.mode = cli.mode;
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<ExitCode, BenchError> {
    let cfg = load(cli)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.unwrap_or(0))
        .build()
        .expect("thread pool");
    let table = pool.install(|| run_experiment(&cfg))?;
    let stem = cli
        .config
        .file_stem()
        .map_or("experiment".into(), |s| s.to_string_lossy().into_owned());
    let target = cli.out.clone().or_else(|| cfg.run.out.clone()).or_else(|| {
        cli.out_dir
            .as_ref()
            .map(|d| d.join(format!("{stem}-{}.csv", cfg.run.mode.name())))
    });
    match target {
        Some(path) => emit_csv(&table, &path)?,
        None => print!("{}", table.to_csv()),
    }
    let misses = table
        .column("verdict")
        .map_or(0, |v| v.iter().filter(|c| **c == OUTSIDE).count());
    if misses > 0 {
        eprintln!(
            "{misses} of {} rows disagree with the analysis",
            table.rows.len()
        );
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
