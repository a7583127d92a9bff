use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use sparsenet::experiment::{self, config::Profile};
use sparsenet::spectral::{self, SpectralReport};
use sparsenet::topology::BipartiteTopology;

#[derive(Parser)]
#[command(
    name = "sparsenet",
    version,
    about = "Sparse neural networks on fixed bipartite topologies: sweeps, spectral analysis, training"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ProfileArg {
    /// Subsampled MNIST (1000/200 per class), 10 epochs
    Desk,
    /// Full MNIST, 50 epochs
    Paper,
}

impl From<ProfileArg> for Profile {
    fn from(p: ProfileArg) -> Profile {
        match p {
            ProfileArg::Desk => Profile::Desk,
            ProfileArg::Paper => Profile::Paper,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run (or resume) a construction x degree sweep from a TOML config
    Sweep {
        config: PathBuf,
        /// Output directory for results.csv and timings.csv
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Parallel training cells (0 = one per core)
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long, value_enum, default_value_t = ProfileArg::Desk)]
        profile: ProfileArg,
        #[arg(long, default_value_t = 42)]
        base_seed: u64,
        /// Discard a previous partial results.csv instead of resuming
        #[arg(long)]
        fresh: bool,
    },
    /// Print the spectral report of a topology edge-list file
    Analyze {
        topology: PathBuf,
        /// Also write the report as a CSV file here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a single network from a TOML config
    Train {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = ProfileArg::Desk)]
        profile: ProfileArg,
        /// Seed used when the config does not pin one
        #[arg(long, default_value_t = 42)]
        base_seed: u64,
    },
    /// Write figure tables and correlations from a sweep results.csv
    Report {
        results: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> sparsenet::Result<()> {
    match cli.command {
        Command::Sweep {
            config,
            out,
            workers,
            profile,
            base_seed,
            fresh,
        } => {
            let spec =
                experiment::config::load_sweep_spec(&config, profile.into(), base_seed, workers)?;
            if fresh {
                let path = out.join("results.csv");
                if path.exists() {
                    std::fs::remove_file(&path)?;
                }
            }
            let total = experiment::cells(&spec).len();
            println!(
                "sweep: {} constructions x {} degrees x {} repeats = {total} cells",
                spec.constructions.len(),
                spec.degrees.len(),
                spec.repeats
            );
            let rows = experiment::run_sweep(&spec, &out)?;
            let failed = rows.iter().filter(|r| !r.is_ok()).count();
            println!(
                "sweep: {} rows in {} ({failed} failed)",
                rows.len(),
                out.join("results.csv").display()
            );
            Ok(())
        }
        Command::Analyze { topology, out } => {
            let t = BipartiteTopology::read_edge_list_path(&topology)?;
            let report = spectral::analyze(&t)?;
            println!("{}", SpectralReport::CSV_HEADER);
            println!("{}", report.csv_row(&t));
            if let Some(path) = out {
                if let Some(parent) = path.parent() {
                    if !parent.as_os_str().is_empty() {
                        std::fs::create_dir_all(parent)?;
                    }
                }
                let mut f = std::fs::File::create(&path)?;
                report.write_csv(&t, &mut f)?;
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Train {
            config,
            out,
            profile,
            base_seed,
        } => {
            let spec = experiment::config::load_train_spec(&config, profile.into(), base_seed)?;
            let (record, _net) = experiment::run_single_train(&spec, &out)?;
            println!(
                "trained {} epochs: initial accuracy {:.4}, final accuracy {:.4} ({:.1}s)",
                record.epochs.len(),
                record.initial_accuracy,
                record.final_accuracy(),
                record.wall_seconds
            );
            for (l, (max, min, std)) in record.weight_stats.iter().enumerate() {
                println!("layer {l} weights: max {max:.5} min {min:.5} std {std:.5}");
            }
            Ok(())
        }
        Command::Report { results, out } => {
            let layers = experiment::layers_in_header(&results)?;
            let rows = experiment::read_results(&results, layers)?;
            std::fs::create_dir_all(&out)?;
            for (name, text) in experiment::figure_tables(&rows) {
                let path = out.join(&name);
                std::fs::write(&path, text)?;
                println!("wrote {}", path.display());
            }
            for band in experiment::correlation_report(&rows) {
                match band.r {
                    Some(r) => println!(
                        "k={}: pearson r = {r:.4} over {} runs",
                        band.k, band.samples
                    ),
                    None => println!("k={}: {} ({} runs)", band.k, band.flag, band.samples),
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
