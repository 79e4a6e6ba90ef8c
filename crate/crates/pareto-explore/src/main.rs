use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pareto_explore::error::{Error, Result};
use pareto_explore::{io, ExplorationConfig, Explorer, StopReason, WorldMap};

#[derive(Parser)]
#[command(
    name = "pareto-explore",
    version,
    about = "Autonomous exploration of an unknown 2D world: Bayesian Hilbert \
             mapping plus multi-objective Monte Carlo tree search planning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the exploration loop and write run artifacts.
    Run(RunArgs),
    /// Render one layer of a saved map CSV to a PGM image.
    Render(RenderArgs),
    /// Parse a config file and report whether it is valid.
    ValidateConfig {
        /// Config file to check.
        path: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` config file; missing keys take defaults.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if absent.
    #[arg(long)]
    out: PathBuf,
    /// Seed override; beats both PARETO_EXPLORE_SEED and the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Write map_NNNNN.pgm every N steps (0 disables); overrides the config.
    #[arg(long)]
    snapshot_every: Option<usize>,
    /// Also write the per-step search tree as tree_NNNNN.csv.
    #[arg(long)]
    dump_trees: bool,
}

#[derive(Args)]
struct RenderArgs {
    /// Layer to render.
    #[arg(long, value_enum)]
    layer: Layer,
    /// Map CSV produced by a run (map_final.csv).
    #[arg(long = "in", value_name = "CSV")]
    input: PathBuf,
    /// Output PGM path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy)]
enum Layer {
    /// Occupancy probability: white free, black occupied.
    Occupancy,
    /// Cell entropy scaled 0..ln2 into 0..255: white unknown.
    Entropy,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Render(args) => cmd_render(args),
        Command::ValidateConfig { path } => cmd_validate(&path),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn read_config(path: &Path) -> Result<ExplorationConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Format {
        what: "config file",
        message: format!("{}: {e}", path.display()),
    })?;
    ExplorationConfig::parse(&text)
}

/// Loads the world named by the config; relative paths resolve against the
/// config file's directory. `.pgm` worlds are images (dark pixels
/// occupied), anything else is parsed as ASCII art.
fn load_world(config_dir: &Path, config: &ExplorationConfig) -> Result<WorldMap> {
    let path = if config.world.is_absolute() {
        config.world.clone()
    } else {
        config_dir.join(&config.world)
    };
    let read_err = |e: std::io::Error| Error::World {
        path: path.clone(),
        message: e.to_string(),
    };
    let is_pgm = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
    if is_pgm {
        let bytes = std::fs::read(&path).map_err(read_err)?;
        let (width, height, pixels) = io::parse_pgm(&bytes)?;
        WorldMap::from_pixels(width, height, &pixels, config.world_cell_size)
    } else {
        let text = std::fs::read_to_string(&path).map_err(read_err)?;
        WorldMap::from_ascii(&text, config.world_cell_size)
    }
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let mut config = read_config(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    } else if let Some(v) = std::env::var_os("PARETO_EXPLORE_SEED") {
        let s = v.to_string_lossy();
        config.seed = s.trim().parse().map_err(|_| Error::Format {
            what: "PARETO_EXPLORE_SEED",
            message: format!("expected an unsigned integer, got {:?}", s.trim()),
        })?;
    }
    if let Some(n) = args.snapshot_every {
        config.snapshot_every = n;
    }
    let snapshot_every = config.snapshot_every;

    let config_dir = args.config.parent().unwrap_or(Path::new("."));
    let world = load_world(config_dir, &config)?;
    std::fs::create_dir_all(&args.out)?;

    let mut explorer = Explorer::new(config, world)?;
    let start_pose = explorer.pose();
    let mut records = Vec::new();
    while explorer.stop_reason().is_none() {
        let record = explorer.step()?;
        println!(
            "step {:>4}  entropy {:>10.3}  coverage {:.3}{}",
            record.step,
            record.total_entropy,
            record.coverage,
            if record.recovery { "  (recovery)" } else { "" }
        );
        if snapshot_every > 0 && record.step % snapshot_every == 0 {
            let db = explorer.db();
            let bytes = io::occupancy_pgm(db.grid(), db.probabilities());
            io::write_bytes(&args.out.join(format!("map_{:05}.pgm", record.step)), &bytes)?;
        }
        if args.dump_trees {
            if let Some(tree) = explorer.last_tree() {
                let path = args.out.join(format!("tree_{:05}.csv", record.step));
                io::write_bytes(&path, tree.to_csv().as_bytes())?;
            }
        }
        records.push(record);
    }

    let reason = match explorer.stop_reason().expect("loop exited without a stop reason") {
        StopReason::MaxSteps => "step limit reached",
        StopReason::EntropyTarget => "entropy target reached",
        StopReason::DynamicsSettled => "map dynamics settled",
    };
    println!("stopped after {} steps: {}", records.len(), reason);

    let db = explorer.db();
    io::write_bytes(&args.out.join("metrics.csv"), io::metrics_csv(&records).as_bytes())?;
    io::write_bytes(&args.out.join("timings.csv"), io::timings_csv(&records).as_bytes())?;
    io::write_bytes(
        &args.out.join("trajectory.csv"),
        io::trajectory_csv(start_pose, &records).as_bytes(),
    )?;
    io::write_bytes(&args.out.join("map_final.csv"), io::map_csv(db).as_bytes())?;
    io::write_bytes(
        &args.out.join("map_final.pgm"),
        &io::occupancy_pgm(db.grid(), db.probabilities()),
    )?;
    Ok(())
}

fn cmd_render(args: RenderArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.input).map_err(|e| Error::Format {
        what: "map csv",
        message: format!("{}: {e}", args.input.display()),
    })?;
    let db = io::parse_map_csv(&text)?;
    let bytes = match args.layer {
        Layer::Occupancy => io::occupancy_pgm(db.grid(), db.probabilities()),
        Layer::Entropy => io::entropy_pgm(db.grid(), db.probabilities()),
    };
    io::write_bytes(&args.out, &bytes)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_validate(path: &Path) -> Result<()> {
    let config = read_config(path)?;
    println!(
        "ok: {} (world {}, seed {}, budget {})",
        path.display(),
        config.world.display(),
        config.seed,
        config.budget
    );
    Ok(())
}
