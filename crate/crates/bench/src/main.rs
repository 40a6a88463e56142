use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use drmhe::ltv_model::{build_stacked, Window};
use drmhe::noise_lab::{build_sample_set, SamplingOptions};
use drmhe::sls_synthesis::{synthesize, RiskParams, SynthesisOptions};
use drmhe_bench::matrix_io::{read_linearization, write_matrix};
use drmhe_bench::results::emit_sweep;
use drmhe_bench::runner::prepare_corpus;
use drmhe_bench::{emit_results, run_benchmark, sweep_epsilon, BenchConfig, BenchError, Result};

#[derive(Parser)]
#[command(name = "drmhe", version, about = "Distributionally robust moving horizon estimation benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Configuration file (`key = value` lines); defaults apply otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seeds with a single seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the noise corpus and write it as CSV.
    GenCorpus {
        #[command(flatten)]
        common: Common,
        /// Output file (default `<output_dir>/seed-<s>/corpus.csv`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthesize the maps for one window from a linearization CSV.
    Synthesize {
        #[command(flatten)]
        common: Common,
        /// CSV with one row per transition and columns a{i}{j}, c{i}{j}.
        #[arg(long)]
        linearization: PathBuf,
        /// Corpus step of the first window transition.
        #[arg(long, default_value_t = 0)]
        start: usize,
        /// Radius (default: the first configured eps).
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Run all estimators and write per-step errors, totals and a summary.
    Benchmark {
        #[command(flatten)]
        common: Common,
    },
    /// Mean DR-MHE total over a list of radii.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated radii.
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
    },
}

fn load_config(common: &Common) -> Result<BenchConfig> {
    let config = match &common.config {
        Some(path) => BenchConfig::load(path)?,
        None => BenchConfig::default(),
    };
    Ok(match common.seed {
        Some(seed) => config.with_seed(seed),
        None => config,
    })
}

fn seed_dir(config: &BenchConfig, seed: u64) -> Result<PathBuf> {
    let dir = config.output_dir.join(format!("seed-{seed}"));
    std::fs::create_dir_all(&dir).map_err(|source| BenchError::Io {
        path: dir.clone(),
        source,
    })?;
    Ok(dir)
}

fn gen_corpus(config: &BenchConfig, out: Option<&Path>) -> Result<()> {
    for &seed in &config.seeds {
        let corpus = prepare_corpus(config, seed)?;
        let path = match out {
            Some(path) if config.seeds.len() == 1 => path.to_path_buf(),
            _ => seed_dir(config, seed)?.join("corpus.csv"),
        };
        corpus.write_csv(&path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn synthesize_window(config: &BenchConfig, linearization: &Path, start: usize, eps: Option<f64>) -> Result<()> {
    let system = read_linearization(linearization)?;
    if system.len() != config.smoothing + config.forecast {
        return Err(BenchError::Invalid(format!(
            "linearization has {} rows, the window needs T_s + T_f = {}",
            system.len(),
            config.smoothing + config.forecast
        )));
    }
    let window = Window::new(system.n(), system.p(), config.smoothing, config.forecast)?;
    let ops = build_stacked(&system, &window)?;
    let eps = eps.unwrap_or(config.eps[0]);
    let params = RiskParams::uniform(eps, &window)?.with_normalized_empirical(config.normalize_empirical);
    for &seed in &config.seeds {
        let corpus = prepare_corpus(config, seed)?;
        let sampling = SamplingOptions {
            initial_error: config.initial_error_policy,
            disturbance_scale: config.dt,
        };
        let samples = build_sample_set(&corpus, &window, start, &sampling)?;
        let result = synthesize(&ops, &samples, &params, &SynthesisOptions::default())?;
        let dir = seed_dir(config, seed)?;
        write_matrix(&result.maps.phi_v, &dir.join("phi_v.csv"))?;
        write_matrix(&result.maps.phi_w, &dir.join("phi_w.csv"))?;
        match &result.gain {
            Some(gain) => write_matrix(&gain.stacked, &dir.join("gain.csv"))?,
            None => println!("seed {seed}: the maps admit no observer gain; gain.csv not written"),
        }
        println!(
            "seed {seed}: risk {} achievability residual {:e} in {:.3} s -> {}",
            result.risk,
            result.maps.achievability_residual,
            result.timings.total.as_secs_f64(),
            dir.display()
        );
    }
    Ok(())
}

fn benchmark(config: &BenchConfig) -> Result<()> {
    for result in run_benchmark(config)? {
        let dir = seed_dir(config, result.seed)?;
        emit_results(&result, &dir)?;
        println!("seed {} ({:.1} s) -> {}", result.seed, result.wall_seconds, dir.display());
        for row in result.summary() {
            println!(
                "  {:<14} mean {:>9.4}  median {:>9.4}  +{:.2}%",
                row.method, row.mean, row.median, row.rel_increment_pct
            );
        }
        if result.is_flagged() {
            println!("  {} realization(s) aborted, see failures.csv", result.failures.len());
        }
    }
    Ok(())
}

fn sweep(config: &BenchConfig, eps: &[f64]) -> Result<()> {
    let points = sweep_epsilon(config, eps)?;
    std::fs::create_dir_all(&config.output_dir).map_err(|source| BenchError::Io {
        path: config.output_dir.clone(),
        source,
    })?;
    let path = config.output_dir.join("sweep.csv");
    emit_sweep(&points, &path)?;
    for (e, mean) in &points {
        println!("eps {e}: mean total {mean}");
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenCorpus { common, out } => gen_corpus(&load_config(&common)?, out.as_deref()),
        Command::Synthesize {
            common,
            linearization,
            start,
            eps,
        } => synthesize_window(&load_config(&common)?, &linearization, start, eps),
        Command::Benchmark { common } => benchmark(&load_config(&common)?),
        Command::Sweep { common, eps } => sweep(&load_config(&common)?, &eps),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
