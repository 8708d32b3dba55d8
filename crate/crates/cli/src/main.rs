use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use rayon::prelude::*;
use varexp_cli::{run, AppKind, RunConfig, RunOptions, EXIT_CONFIG};

/// Sub-supersolution solver for nonlocal p(x)-Laplacian problems.
#[derive(Parser, Debug)]
#[command(name = "varexp", version)]
struct Cli {
    /// Run configuration (TOML). Repeat to run several in parallel.
    #[arg(long = "config", required = true)]
    configs: Vec<PathBuf>,
    /// Output directory; with several configs, one subdirectory per config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the application selected in the config.
    #[arg(long)]
    app: Option<AppKind>,
    #[arg(long)]
    quiet: bool,
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into())
}

fn run_one(cli: &Cli, path: &Path) -> i32 {
    let cfg = match RunConfig::load(path) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            return EXIT_CONFIG;
        }
    };
    let out_dir = match (&cli.out, cli.configs.len()) {
        (Some(out), 1) => out.clone(),
        (Some(out), _) => out.join(stem(path)),
        (None, _) => cfg.output.dir.clone().unwrap_or_else(|| PathBuf::from("out").join(stem(path))),
    };
    let outcome = run(&cfg, &RunOptions { out_dir, app: cli.app, quiet: cli.quiet });
    let s = &outcome.summary;
    if let Some(msg) = &s.message {
        eprintln!("{}: {msg}", path.display());
    }
    if !cli.quiet {
        println!(
            "{}: {} ({} iterations, fp residual {:.3e}, exit {}) -> {}",
            path.display(),
            s.status,
            s.iterations,
            s.fp_residual,
            outcome.exit_code,
            outcome.out_dir.display()
        );
    }
    outcome.exit_code
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = std::env::var("VAREXP_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool");
    let codes: Vec<i32> = pool.install(|| cli.configs.par_iter().map(|p| run_one(&cli, p)).collect());
    ExitCode::from(codes.into_iter().max().unwrap_or(0) as u8)
}
