use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pfczm::config::RunConfig;
use pfczm::runner;
use pfczm::solver::Scenario;

/// Phase-field cohesive zone simulations of monotonic, cyclic and fatigue
/// crack growth.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation.
    Run {
        config: PathBuf,
        /// Output directory (overrides `output.dir`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the kf × Smax sweep of an LS4 configuration.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Parallel worker threads.
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Recompute the derived tables of a stored run directory.
    Postproc { dir: PathBuf },
    /// Check a configuration without running it.
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> pfczm::Result<()> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let dir = out.unwrap_or_else(|| cfg.output.dir.clone());
            let meta = runner::execute(&cfg, &dir)?;
            println!("mesh {} ({} nodes, {} elements)", meta.mesh_hash, meta.nodes, meta.elements);
            match cfg.program.scenario {
                Scenario::Ls1 | Scenario::Ls2 => println!("peak force {:.6e} N", meta.peak_force),
                Scenario::Ls3 | Scenario::Ls4 => match meta.cycles_to_failure {
                    Some(n) => println!("cycles to failure {n}"),
                    None => println!("no failure within the program"),
                },
            }
            if let Some(f) = &meta.failure {
                println!("failure at cycle {}, increment {}: {}", f.cycle, f.increment, f.reason);
            }
            println!("output in {}", dir.display());
        }
        Command::Sweep { config, out, workers } => {
            let cfg = RunConfig::load(&config)?;
            let dir = out.unwrap_or_else(|| cfg.output.dir.clone());
            let rows = runner::sweep(&cfg, &dir, workers)?;
            println!("{:>8} {:>6} {:>8}  status", "kf", "Smax", "N^f");
            for r in &rows {
                let n = r.row.cycles.map_or("-".to_string(), |n| n.to_string());
                println!("{:>8} {:>6} {:>8}  {}", r.row.kf, r.row.smax, n, r.status);
            }
            if rows.iter().any(|r| r.status != "ok") {
                return Err(pfczm::Error::Config("some sweep runs failed; see sweep.csv".into()));
            }
        }
        Command::Postproc { dir } => {
            runner::postprocess(&dir)?;
            println!("derived tables written to {}", dir.display());
        }
        Command::Validate { config } => {
            let cfg = RunConfig::load(&config)?;
            let mesh = cfg.build_mesh()?;
            cfg.boundary_spec()?.validate(&mesh)?;
            println!("{}: ok ({} nodes, {} elements)", config.display(), mesh.num_nodes(), mesh.num_elements());
        }
    }
    Ok(())
}
