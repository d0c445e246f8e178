use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use skelet_core::experiment::{
    oracle_best_subset, projector_csv, projector_error_experiment, run_sweep, ExperimentConfig, ProjectorConfig, CONFIG_HELP,
    PROJECTOR_HELP,
};
use skelet_core::testgen::{build_test_matrix, TestMatrixSpec};
use skelet_core::{Error, Matrix, Result};

#[derive(Parser)]
#[command(name = "skelet", version, about = "Column-skeleton low-rank approximation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Seeded Monte-Carlo sweep over algorithms, ranks and matrices.
    #[command(after_help = CONFIG_HELP)]
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (default: all cores). Output does not depend on it.
        #[arg(long)]
        workers: Option<usize>,
        /// Overrides the config's `seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Exhaustive best skeleton for a small matrix in `rows cols` text format.
    Oracle {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        k: usize,
    },
    /// Builds a structured test matrix from a `key = value` spec.
    #[command(after_help = "Spec keys: n, seed, alpha, subspace, delta, spectrum, rho, shelf_lengths, drop_factors, k0, values")]
    GenMatrix {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Element-wise projector error of RSVD on noisy and random subspaces.
    #[command(after_help = PROJECTOR_HELP)]
    ProjectorExp {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, body: &str) -> Result<()> {
    fs::write(path, body).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sweep { config, out, workers, seed } => {
            let mut cfg = ExperimentConfig::parse(&read(&config)?)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let result = run_sweep(&cfg, workers)?;
            write(&out, &result.to_csv())?;
            let rows: usize = result.blocks.iter().map(|b| b.records.len()).sum();
            log::info!("wrote {rows} trial rows to {}", out.display());
        }
        Command::Oracle { matrix, k } => {
            let file = fs::File::open(&matrix).map_err(|e| Error::Io(format!("{}: {e}", matrix.display())))?;
            let a = Matrix::read_text(BufReader::new(file))?;
            let o = oracle_best_subset(&a, k)?;
            println!("subsets   {}", o.subsets);
            println!("spectral  {:.6e}  columns {:?}", o.err_spectral, o.best_spectral);
            println!("frobenius {:.6e}  columns {:?}", o.err_frobenius, o.best_frobenius);
        }
        Command::GenMatrix { spec, out } => {
            let spec = TestMatrixSpec::from_kv(&read(&spec)?)?;
            let t = build_test_matrix(&spec)?;
            let file = fs::File::create(&out).map_err(|e| Error::Io(format!("{}: {e}", out.display())))?;
            let mut w = BufWriter::new(file);
            t.a.write_text(&mut w)?;
            w.flush()?;
            log::info!("{}x{} matrix written to {}", spec.n, spec.n, out.display());
        }
        Command::ProjectorExp { config, out } => {
            let cfg = ProjectorConfig::parse(&read(&config)?)?;
            let trials = projector_error_experiment(&cfg)?;
            write(&out, &projector_csv(&cfg, &trials))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
