//! Parameter sweeps over `(m, c, v, seed)` and their on-disk artifacts.
//!
//! A sweep writes one directory per cell under `runs/` plus a top-level
//! `summary.csv` and `manifest.json`. Every cell draws from its own ChaCha
//! stream, derived from `(m, c, v)`, so results do not depend on the worker
//! count or on which other cells are part of the sweep.

mod config;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

pub use config::{
    feasible_player_counts, validate_and_load, ExperimentConfig, ScheduleOverride, DEFAULT_COSTS,
    DEFAULT_EDGE, DEFAULT_FRAGILITY_TRIALS, DEFAULT_VARIANCES,
};

use crate::dynamics::{best_response_dynamics, DynamicsParams, OptimizerRegistry, RunResult};
use crate::grid::{to_pgm, to_text, Game, PlayerPartition};
use crate::lightning::LightningField;
use crate::metrics::{
    cascade_distribution, fines_experiment, fragility_eval, measure, CascadeDistribution,
    Fragility, Measurements,
};
use crate::{sim_rng, Error, Result};

/// Stream purposes mixed into [`cell_stream`].
pub const DYNAMICS_STREAM: u64 = 0;
pub const FRAGILITY_STREAM: u64 = 1;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// ChaCha stream for one sweep cell and purpose.
pub fn cell_stream(m: usize, c: f64, v: f64, purpose: u64) -> u64 {
    [m as u64, c.to_bits(), v.to_bits(), purpose]
        .into_iter()
        .fold(0, |h, x| splitmix64(h ^ x))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepCell {
    pub m: usize,
    pub c: f64,
    pub v: f64,
    pub seed: u64,
}

impl SweepCell {
    /// `<m>_<c>_<v>_<seed>`.
    pub fn dir_name(&self) -> String {
        format!("{}_{}_{}_{}", self.m, self.c, self.v, self.seed)
    }
}

/// Cells in `(m, c, v, seed)` order, following each list's order.
pub fn sweep_cells(config: &ExperimentConfig) -> Vec<SweepCell> {
    let mut cells = Vec::new();
    for &m in &config.m {
        for &c in &config.c {
            for &v in &config.v {
                for &seed in &config.seeds {
                    cells.push(SweepCell { m, c, v, seed });
                }
            }
        }
    }
    cells
}

/// The game played in `cell`: Gaussian lightning centered at the top-left.
pub fn cell_game(config: &ExperimentConfig, cell: &SweepCell) -> Result<Game> {
    let field = LightningField::gaussian(config.edge, config.edge, cell.v, (0, 0))?;
    let partition = PlayerPartition::square(config.edge, cell.m)?;
    Game::new(field, partition, cell.c, config.neighborhood)
}

pub fn cell_params(config: &ExperimentConfig, cell: &SweepCell) -> DynamicsParams {
    let cells_per_player = config.edge * config.edge / cell.m;
    let mut params = DynamicsParams::for_players(cell.m, cells_per_player, cell.seed);
    if let Some(s) = config.schedule.get(&cell.m) {
        params.t_br = s.t_br;
        params.t_opt = s.t_opt;
    }
    if let Some(p) = config.p_player {
        params.p_player = p;
    }
    params.alpha = config.alpha;
    params.history = config.history;
    params.shuffle_players = config.shuffle_players;
    params.optimizer = config.optimizer.clone();
    params.stream = cell_stream(cell.m, cell.c, cell.v, DYNAMICS_STREAM);
    params
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FineSummary {
    pub penalty: f64,
    pub welfare: f64,
    pub density: f64,
}

#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub cell: SweepCell,
    pub run: RunResult,
    pub metrics: Measurements,
    pub cascade: CascadeDistribution,
    pub fragility: Option<Fragility>,
    pub fines: Vec<FineSummary>,
}

#[derive(Serialize)]
struct MetricsRecord<'a> {
    cell: &'a SweepCell,
    metrics: &'a Measurements,
    utilities: &'a [f64],
    welfare_trajectory: &'a [f64],
    fragility: Option<FragilityRecord<'a>>,
    fines: &'a [FineSummary],
    manifest: &'a crate::dynamics::RunManifest,
}

#[derive(Serialize)]
struct FragilityRecord<'a> {
    trials: usize,
    stream: u64,
    baseline: f64,
    mean_shifted: f64,
    ratio: Option<f64>,
    shifted: &'a [f64],
}

/// Runs dynamics, measurements, fragility and fines for one cell.
pub fn run_cell(
    config: &ExperimentConfig,
    cell: &SweepCell,
    registry: &OptimizerRegistry,
) -> Result<CellOutcome> {
    let game = cell_game(config, cell)?;
    let params = cell_params(config, cell);
    let run = best_response_dynamics(&game, &params, registry)?;
    let metrics = measure(&game, &run.config)?;
    let cascade = cascade_distribution(&run.config, &game.field, game.neighborhood)?;
    let fragility = if config.fragility_trials > 0 {
        let mut rng = sim_rng(
            cell.seed,
            cell_stream(cell.m, cell.c, cell.v, FRAGILITY_STREAM),
        );
        Some(fragility_eval(
            &run.config,
            &game.field,
            game.cost,
            game.neighborhood,
            config.fragility_trials,
            &mut rng,
        )?)
    } else {
        None
    };
    // fines share the dynamics stream, so a zero penalty replays the main run
    let fines = config
        .fines
        .iter()
        .map(|&p| {
            let f = fines_experiment(&game, p, &params, registry)?;
            Ok(FineSummary {
                penalty: p,
                welfare: f.welfare,
                density: f.density,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CellOutcome {
        cell: *cell,
        run,
        metrics,
        cascade,
        fragility,
        fines,
    })
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn write_with(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>,
) -> Result<()> {
    let mut w = create(path)?;
    f(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Writes `grid.txt`, `grid.pgm`, `metrics.json`, `ccdf.csv` and
/// `trace.csv` into `dir`.
pub fn write_cell(dir: &Path, outcome: &CellOutcome, fragility_trials: usize) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let config = &outcome.run.config;
    write_with(&dir.join("grid.txt"), |w| {
        w.write_all(to_text(config).as_bytes())
    })?;
    write_with(&dir.join("grid.pgm"), |w| w.write_all(&to_pgm(config)))?;
    write_with(&dir.join("ccdf.csv"), |w| outcome.cascade.write_csv(w))?;
    write_with(&dir.join("trace.csv"), |w| outcome.run.write_trace_csv(w))?;
    let c = &outcome.cell;
    let record = MetricsRecord {
        cell: c,
        metrics: &outcome.metrics,
        utilities: &outcome.run.utilities,
        welfare_trajectory: &outcome.run.welfare_trajectory,
        fragility: outcome.fragility.as_ref().map(|f| FragilityRecord {
            trials: fragility_trials,
            stream: cell_stream(c.m, c.c, c.v, FRAGILITY_STREAM),
            baseline: f.baseline,
            mean_shifted: f.mean_shifted,
            ratio: f.ratio(),
            shifted: &f.shifted,
        }),
        fines: &outcome.fines,
        manifest: &outcome.run.manifest,
    };
    let mut json = serde_json::to_string_pretty(&record)?;
    json.push('\n');
    write_with(&dir.join("metrics.json"), |w| w.write_all(json.as_bytes()))
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_summary_csv<W: Write>(
    outcomes: &[CellOutcome],
    fines: &[f64],
    mut out: W,
) -> std::io::Result<()> {
    write!(
        out,
        "m,c,v,seed,welfare,yield,density,C,C_by_player,centroid_x,centroid_y,\
         cascade_p90,fragility_baseline,fragility_mean"
    )?;
    for p in fines {
        write!(out, ",W_p{p}")?;
    }
    writeln!(out)?;
    for o in outcomes {
        let (c, m) = (&o.cell, &o.metrics);
        write!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            c.m,
            c.c,
            c.v,
            c.seed,
            m.welfare,
            m.yield_,
            m.density,
            m.fire_break_correlation,
            opt(m.fire_break_correlation_by_player),
            opt(m.empty_centroid.map(|p| p.0)),
            opt(m.empty_centroid.map(|p| p.1)),
            m.cascade_p90,
            opt(o.fragility.as_ref().map(|f| f.baseline)),
            opt(o.fragility.as_ref().map(|f| f.mean_shifted)),
        )?;
        for f in &o.fines {
            write!(out, ",{}", f.welfare)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepManifest<'a> {
    version: &'static str,
    config: &'a ExperimentConfig,
    stream_scheme: &'static str,
    runs: Vec<ManifestRun>,
}

#[derive(Serialize)]
struct ManifestRun {
    dir: String,
    #[serde(flatten)]
    cell: SweepCell,
    dynamics_stream: u64,
    fragility_stream: u64,
}

#[derive(Debug)]
pub struct SweepReport {
    pub out: PathBuf,
    pub outcomes: Vec<CellOutcome>,
}

/// Runs every cell of `config` on up to `config.workers` threads and writes
/// all artifacts under `config.out`.
pub fn run_sweep(config: &ExperimentConfig, registry: &OptimizerRegistry) -> Result<SweepReport> {
    config.validate()?;
    registry.get(&config.optimizer)?;
    let cells = sweep_cells(config);
    let runs_dir = config.out.join("runs");
    fs::create_dir_all(&runs_dir).map_err(|e| Error::io(&runs_dir, e))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let outcomes = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                let outcome = run_cell(config, cell, registry)?;
                write_cell(
                    &runs_dir.join(cell.dir_name()),
                    &outcome,
                    config.fragility_trials,
                )?;
                Ok(outcome)
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let summary = config.out.join("summary.csv");
    write_with(&summary, |w| write_summary_csv(&outcomes, &config.fines, w))?;

    let manifest = SweepManifest {
        version: env!("CARGO_PKG_VERSION"),
        config,
        stream_scheme: "ChaCha8 seeded with the run seed; stream = splitmix64 fold of \
                        (m, c bits, v bits, purpose), purpose 0 = dynamics, 1 = fragility",
        runs: cells
            .iter()
            .map(|c| ManifestRun {
                dir: format!("runs/{}", c.dir_name()),
                cell: *c,
                dynamics_stream: cell_stream(c.m, c.c, c.v, DYNAMICS_STREAM),
                fragility_stream: cell_stream(c.m, c.c, c.v, FRAGILITY_STREAM),
            })
            .collect(),
    };
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    let path = config.out.join("manifest.json");
    write_with(&path, |w| w.write_all(json.as_bytes()))?;

    Ok(SweepReport {
        out: config.out.clone(),
        outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_differ_by_cell_and_purpose() {
        let a = cell_stream(4, 0.0, 10.0, DYNAMICS_STREAM);
        assert_eq!(a, cell_stream(4, 0.0, 10.0, DYNAMICS_STREAM));
        assert_ne!(a, cell_stream(4, 0.0, 10.0, FRAGILITY_STREAM));
        assert_ne!(a, cell_stream(16, 0.0, 10.0, DYNAMICS_STREAM));
        assert_ne!(a, cell_stream(4, 0.25, 10.0, DYNAMICS_STREAM));
        assert_ne!(a, cell_stream(4, 0.0, 100.0, DYNAMICS_STREAM));
    }

    #[test]
    fn cells_follow_list_order() {
        let mut config = ExperimentConfig::for_edge(4);
        config.m = vec![1, 4];
        config.c = vec![0.0];
        config.v = vec![1.0, 10.0];
        config.seeds = vec![7, 8];
        let names: Vec<String> = sweep_cells(&config).iter().map(|c| c.dir_name()).collect();
        assert_eq!(
            names,
            [
                "1_0_1_7", "1_0_1_8", "1_0_10_7", "1_0_10_8", "4_0_1_7", "4_0_1_8", "4_0_10_7",
                "4_0_10_8"
            ]
        );
    }

    #[test]
    fn schedule_overrides_apply() {
        let mut config = ExperimentConfig::for_edge(8);
        config
            .schedule
            .insert(4, ScheduleOverride { t_br: 2, t_opt: 7 });
        let cell = SweepCell {
            m: 4,
            c: 0.0,
            v: 1.0,
            seed: 0,
        };
        let p = cell_params(&config, &cell);
        assert_eq!((p.t_br, p.t_opt), (2, 7));
        let p = cell_params(&config, &SweepCell { m: 1, ..cell });
        assert_eq!((p.t_br, p.t_opt), (1, 200));
    }

    #[test]
    fn zero_fine_replays_the_main_run() {
        let mut config = ExperimentConfig::for_edge(8);
        config.fines = vec![0.0, 0.05];
        config.fragility_trials = 3;
        let cell = SweepCell {
            m: 16,
            c: 0.1,
            v: 10.0,
            seed: 2,
        };
        let o = run_cell(&config, &cell, &OptimizerRegistry::default()).unwrap();
        assert_eq!(o.fines[0].welfare, o.metrics.welfare);
        assert_eq!(o.fragility.unwrap().shifted.len(), 3);
    }
}
