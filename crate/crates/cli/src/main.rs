use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mmot_cli::{catalog, resolve, run, Overrides, EXIT_NOT_CONVERGED};

#[derive(Parser)]
#[command(name = "mmot", version, about = "Multi-marginal entropic optimal transport experiments")]
struct Cli {
    /// Worker threads (defaults to all cores)
    #[arg(long, global = true, env = "MMOT_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a config file or a bundled experiment by name
    Run {
        config: String,
        #[arg(long)]
        epsilon: Option<f64>,
        /// Cells per marginal grid
        #[arg(long)]
        grid_size: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// List bundled experiments
    List,
}

fn list() -> ExitCode {
    match catalog::listing() {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: cannot set up {t} threads: {e}");
            return ExitCode::from(1);
        }
    }
    let Some(Command::Run { config, epsilon, grid_size, tol, out_dir }) = cli.command else {
        return list();
    };
    let outcome = resolve(&config)
        .and_then(|mut cfg| cfg.apply(&Overrides { epsilon, grid_size, tol }).map(|_| cfg))
        .map_err(mmot_cli::RunError::from)
        .and_then(|cfg| run(&cfg, &out_dir));
    match outcome {
        Ok(art) => {
            println!("{}", art.summary);
            if art.converged {
                ExitCode::SUCCESS
            } else {
                eprintln!("warning: tolerance not reached; artifacts written to {}", art.report.display());
                ExitCode::from(EXIT_NOT_CONVERGED as u8)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
