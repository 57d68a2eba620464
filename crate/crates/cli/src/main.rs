use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use notfire::dynamics::{is_nash, DeviationScope, OptimizerRegistry, NASH_TOLERANCE};
use notfire::grid::{parse_text, Game, Neighborhood, PlayerPartition};
use notfire::lightning::LightningField;
use notfire::metrics;
use notfire::oned::{table_row, write_table_csv};
use notfire::runner::{
    self, cell_game, cell_params, run_cell, validate_and_load, ExperimentConfig, SweepCell,
};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "notfire",
    version,
    about = "Forest-fire planting games on a lattice"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Flat key = value experiment file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    edge: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Concurrent sweep cells (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, value_parser = ["4", "8"])]
    neighborhood: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the (m, c, v, seed) sweep and write its artifacts.
    Run,
    /// Emit the one-dimensional closed-form table as CSV.
    Oned {
        #[arg(long, value_delimiter = ',', default_values_t = [50, 99, 200, 399, 1000, 10000])]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.25, 0.5, 0.75, 0.9])]
        c: Vec<f64>,
    },
    /// Run the oracle suite, or certify a saved grid as an equilibrium.
    Verify {
        /// Grid snapshot (`1`/`0` rows) to check instead of the suite.
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long, default_value_t = 0.0)]
        cost: f64,
        /// Lightning spread; omit for uniform lightning.
        #[arg(long)]
        v: Option<f64>,
        #[arg(long, default_value = "single-flip", value_parser = ["single-flip", "exhaustive"])]
        scope: String,
    },
    /// Equilibrium welfare under randomly recentered lightning.
    Fragility {
        #[command(flatten)]
        cell: CellArgs,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Equilibrium welfare when players pay an extra fine per tree.
    Fines {
        #[command(flatten)]
        cell: CellArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.05])]
        penalties: Vec<f64>,
    },
}

#[derive(Args)]
struct CellArgs {
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 0.0)]
    c: f64,
    #[arg(long, default_value_t = 100.0)]
    v: f64,
}

fn load_config(g: &Global) -> anyhow::Result<ExperimentConfig> {
    let mut config = match &g.config {
        Some(path) => validate_and_load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(edge) = g.edge {
        config.set_edge(edge);
    }
    if let Some(seed) = g.seed {
        config.seeds = vec![seed];
    }
    if let Some(out) = &g.out {
        config.out = out.clone();
    }
    if let Some(w) = g.workers {
        config.workers = w;
    }
    if let Some(nb) = &g.neighborhood {
        config.neighborhood = nb.parse()?;
    }
    config.validate()?;
    Ok(config)
}

fn single_cell(config: &ExperimentConfig, args: &CellArgs) -> anyhow::Result<SweepCell> {
    let cell = SweepCell {
        m: args.m,
        c: args.c,
        v: args.v,
        seed: config.seeds[0],
    };
    let mut probe = config.clone();
    probe.m = vec![cell.m];
    probe.c = vec![cell.c];
    probe.v = vec![cell.v];
    probe.validate()?;
    Ok(cell)
}

fn print_json(value: &serde_json::Value) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn verify_grid(
    path: &Path,
    m: usize,
    cost: f64,
    v: Option<f64>,
    scope: &str,
    nb: Neighborhood,
) -> anyhow::Result<bool> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let config = parse_text(&text)?;
    let (w, h) = (config.width(), config.height());
    if w != h {
        bail!("grid {} is {w}x{h}, expected a square", path.display());
    }
    let field = match v {
        Some(v) => LightningField::gaussian(w, h, v, (0, 0))?,
        None => LightningField::uniform(w, h),
    };
    let game = Game::new(field, PlayerPartition::square(w, m)?, cost, nb)?;
    let scope = match scope {
        "exhaustive" => DeviationScope::Exhaustive,
        _ => DeviationScope::SingleFlip,
    };
    let report = is_nash(&game, &config, scope, NASH_TOLERANCE)?;
    print_json(&json!({
        "grid": path,
        "m": m,
        "cost": cost,
        "welfare": game.welfare(&config)?,
        "report": report,
    }))?;
    Ok(report.is_nash)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let registry = OptimizerRegistry::default();
    match cli.command {
        Command::Run => {
            let config = load_config(&cli.global)?;
            let report = runner::run_sweep(&config, &registry)?;
            print_json(&json!({
                "out": report.out,
                "runs": report.outcomes.len(),
                "summary": report.out.join("summary.csv"),
            }))?;
        }
        Command::Oned { n, c } => {
            let mut rows = Vec::new();
            for &n in &n {
                for &c in &c {
                    rows.push(table_row(n, c)?);
                }
            }
            match &cli.global.out {
                Some(dir) => {
                    std::fs::create_dir_all(dir)?;
                    let path = dir.join("oned.csv");
                    write_table_csv(&rows, std::fs::File::create(&path)?)?;
                }
                None => write_table_csv(&rows, std::io::stdout().lock())?,
            }
        }
        Command::Verify {
            grid,
            m,
            cost,
            v,
            scope,
        } => {
            let nb = match &cli.global.neighborhood {
                Some(nb) => nb.parse()?,
                None => Neighborhood::Four,
            };
            if let Some(path) = grid {
                if !verify_grid(&path, m, cost, v, &scope, nb)? {
                    bail!(Verification(format!(
                        "{} is not an equilibrium",
                        path.display()
                    )));
                }
            } else {
                let checks = notfire::verify::oracle_suite()?;
                let mut failed = 0;
                for c in &checks {
                    println!(
                        "{} {}: {}",
                        if c.passed { "PASS" } else { "FAIL" },
                        c.name,
                        c.detail
                    );
                    failed += usize::from(!c.passed);
                }
                if failed > 0 {
                    bail!(Verification(format!(
                        "{failed} of {} checks failed",
                        checks.len()
                    )));
                }
            }
        }
        Command::Fragility { cell, trials } => {
            let mut config = load_config(&cli.global)?;
            if let Some(t) = trials {
                config.fragility_trials = t;
            }
            if config.fragility_trials == 0 {
                bail!(notfire::Error::Parameter(
                    "fragility needs at least one trial".into()
                ));
            }
            config.fines.clear();
            let cell = single_cell(&config, &cell)?;
            let outcome = run_cell(&config, &cell, &registry)?;
            let f = outcome.fragility.expect("trials > 0");
            print_json(&json!({
                "cell": cell,
                "trials": config.fragility_trials,
                "baseline": f.baseline,
                "mean_shifted": f.mean_shifted,
                "ratio": f.ratio(),
                "shifted": f.shifted,
            }))?;
        }
        Command::Fines { cell, penalties } => {
            let config = load_config(&cli.global)?;
            let cell = single_cell(&config, &cell)?;
            let game = cell_game(&config, &cell)?;
            let params = cell_params(&config, &cell);
            let mut rows = Vec::new();
            for p in penalties {
                let f = metrics::fines_experiment(&game, p, &params, &registry)?;
                rows.push(json!({ "penalty": p, "welfare": f.welfare, "density": f.density }));
            }
            print_json(&json!({ "cell": cell, "fines": rows }))?;
        }
    }
    Ok(())
}

/// A verification that ran but did not pass.
#[derive(Debug)]
struct Verification(String);

impl std::fmt::Display for Verification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Verification {}

fn error_kind(err: &anyhow::Error) -> &'static str {
    if let Some(e) = err.downcast_ref::<notfire::Error>() {
        e.kind()
    } else if err.is::<Verification>() {
        "verification"
    } else if err.is::<std::io::Error>() {
        "io"
    } else {
        "error"
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let record =
                json!({ "error": { "kind": "usage", "message": e.to_string().trim_end() } });
            eprintln!("{record}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let record = json!({
                "error": {
                    "kind": error_kind(&err),
                    "message": format!("{err:#}"),
                }
            });
            eprintln!("{record}");
            ExitCode::FAILURE
        }
    }
}
