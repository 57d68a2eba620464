//! Equilibrium approximation by best-response dynamics.
//!
//! Starting from an empty grid, each outer round visits every player; with
//! probability `p_player` the player replaces its strategy by the output of
//! a best-response optimizer run against everyone else's current cells.
//! Optimizers are looked up by name in an [`OptimizerRegistry`];
//! sampled fictitious play (`"sfp"`) is the default.

mod optimizer;
mod sfp;

pub use optimizer::{BestResponse, ExhaustiveSearch, LocalSearch, OptimizerRegistry};
pub use sfp::{choose_actions, opt_sampled_fp, opt_sampled_fp_traced, SampledFictitiousPlay};

use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::grid::{Game, GridConfig, Neighborhood};
use crate::lightning::FieldKind;
use crate::{sim_rng, Error, Result};

/// Deviation gains at or below this are treated as zero when certifying
/// equilibria; exact ties otherwise flip on rounding noise.
pub const NASH_TOLERANCE: f64 = 1e-9;

/// Largest subgrid for which exhaustive deviation checks are allowed.
pub const EXHAUSTIVE_LIMIT: usize = 16;

/// Iteration counts for outer and inner loops by cells per player.
const SCHEDULE: [(usize, usize, usize); 6] = [
    (4096, 5, 120),
    (1024, 20, 80),
    (256, 20, 80),
    (64, 20, 80),
    (16, 40, 80),
    (4, 20, 35),
];

/// `(T_br, T_opt)` for `players` players owning `cells_per_player` cells
/// each. A single player always gets one optimization of 200 inner
/// iterations and single-cell players get 50 rounds of one iteration; in
/// between the row with the nearest cells-per-player on a log scale is used.
pub fn default_schedule(players: usize, cells_per_player: usize) -> (usize, usize) {
    if players <= 1 {
        return (1, 200);
    }
    if cells_per_player <= 1 {
        return (50, 1);
    }
    let target = (cells_per_player as f64).ln();
    let (_, t_br, t_opt) = SCHEDULE
        .iter()
        .copied()
        .min_by(|a, b| {
            let da = ((a.0 as f64).ln() - target).abs();
            let db = ((b.0 as f64).ln() - target).abs();
            da.total_cmp(&db)
        })
        .expect("schedule is non-empty");
    (t_br, t_opt)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsParams {
    /// Outer best-response rounds.
    pub t_br: usize,
    /// Probability a visited player re-optimizes.
    pub p_player: f64,
    /// Inner optimizer iterations.
    pub t_opt: usize,
    /// Per-cell update probability; `None` means `max(0.05, 1/N_i)`.
    pub p_cell: Option<f64>,
    /// Exploration probability in the reference draw.
    pub alpha: f64,
    /// History window length.
    pub history: usize,
    pub seed: u64,
    /// ChaCha stream the run draws from.
    pub stream: u64,
    /// Visit players in a freshly shuffled order each round.
    pub shuffle_players: bool,
    /// Registry name of the best-response optimizer.
    pub optimizer: String,
}

impl DynamicsParams {
    /// Defaults for a partition with `players` players of
    /// `cells_per_player` cells.
    pub fn for_players(players: usize, cells_per_player: usize, seed: u64) -> Self {
        let (t_br, t_opt) = default_schedule(players, cells_per_player);
        DynamicsParams {
            t_br,
            // a lone player has nothing to desynchronize from
            p_player: if players <= 1 { 1.0 } else { 0.9 },
            t_opt,
            p_cell: None,
            alpha: 0.0,
            history: 1,
            seed,
            stream: 0,
            shuffle_players: false,
            optimizer: SampledFictitiousPlay::NAME.to_string(),
        }
    }

    pub fn for_game(game: &Game, seed: u64) -> Self {
        Self::for_players(game.player_count(), game.partition.cells_per_player(), seed)
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::Parameter(format!(
                    "{name} must lie in [0, 1], got {p}"
                )))
            }
        };
        prob("p_player", self.p_player)?;
        prob("alpha", self.alpha)?;
        if let Some(p) = self.p_cell {
            prob("p_cell", p)?;
        }
        for (name, v) in [
            ("t_br", self.t_br),
            ("t_opt", self.t_opt),
            ("history", self.history),
        ] {
            if v == 0 {
                return Err(Error::Parameter(format!("{name} must be at least 1")));
            }
        }
        Ok(())
    }

    pub fn cell_probability(&self, cells_per_player: usize) -> f64 {
        self.p_cell
            .unwrap_or_else(|| f64::max(0.05, 1.0 / cells_per_player.max(1) as f64))
    }
}

/// One player visit in the outer loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub round: usize,
    pub player: usize,
    /// Whether the player re-optimized this visit.
    pub updated: bool,
    /// The player's utility right after the visit.
    pub utility: f64,
    /// Welfare at the end of the round; set on the round's last visit only.
    pub welfare: Option<f64>,
}

/// Everything needed to rerun a single dynamics run bit-exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub width: usize,
    pub height: usize,
    pub players: usize,
    pub cost: f64,
    pub field: FieldKind,
    pub neighborhood: Neighborhood,
    pub params: DynamicsParams,
    pub version: String,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub config: GridConfig,
    pub utilities: Vec<f64>,
    /// Welfare after each outer round.
    pub welfare_trajectory: Vec<f64>,
    pub trace: Vec<TraceRow>,
    pub manifest: RunManifest,
}

impl RunResult {
    pub fn welfare(&self) -> f64 {
        self.utilities.iter().sum()
    }

    /// Trace as CSV: `round,player,updated,utility,welfare`.
    pub fn write_trace_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "round,player,updated,utility,welfare")?;
        for row in &self.trace {
            let welfare = row.welfare.map(|w| w.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{}",
                row.round,
                row.player,
                u8::from(row.updated),
                row.utility,
                welfare
            )?;
        }
        Ok(())
    }
}

/// Runs best-response dynamics from the empty grid.
///
/// Randomness is drawn from a single stream in a fixed order: per round
/// (after an optional shuffle of the visit order) one uniform per visited
/// player, followed by whatever the optimizer draws when that player
/// re-optimizes.
pub fn best_response_dynamics(
    game: &Game,
    params: &DynamicsParams,
    registry: &OptimizerRegistry,
) -> Result<RunResult> {
    params.validate()?;
    let optimizer = registry.get(&params.optimizer)?;
    let shape = game.partition.shape();
    let mut rng = sim_rng(params.seed, params.stream);
    let mut config = GridConfig::empty(shape.width, shape.height);
    let mut order: Vec<usize> = (0..game.player_count()).collect();
    let mut trace = Vec::with_capacity(params.t_br * order.len());
    let mut welfare_trajectory = Vec::with_capacity(params.t_br);

    for round in 0..params.t_br {
        if params.shuffle_players {
            order.shuffle(&mut rng);
        }
        for &player in &order {
            let draw: f64 = rng.gen();
            let mut view = game.player_view(&config, player)?;
            let (updated, utility) = if draw <= params.p_player {
                let next = optimizer.respond(&mut view, game.cost, params, &mut rng)?;
                for (&g, &s) in view.cells().iter().zip(&next) {
                    config.set(g, s);
                }
                (true, view.utility(&next, game.cost))
            } else {
                let current = view.current().to_vec();
                (false, view.utility(&current, game.cost))
            };
            trace.push(TraceRow {
                round,
                player,
                updated,
                utility,
                welfare: None,
            });
        }
        let welfare = game.welfare(&config)?;
        welfare_trajectory.push(welfare);
        if let Some(last) = trace.last_mut() {
            last.welfare = Some(welfare);
        }
    }

    let utilities = game.player_utilities(&config)?;
    Ok(RunResult {
        manifest: RunManifest {
            width: shape.width,
            height: shape.height,
            players: game.player_count(),
            cost: game.cost,
            field: game.field.kind(),
            neighborhood: game.neighborhood,
            params: params.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
        config,
        utilities,
        welfare_trajectory,
        trace,
    })
}

/// Which unilateral deviations [`is_nash`] considers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeviationScope {
    /// Flip one of the player's cells.
    SingleFlip,
    /// Every alternative strategy; subgrids up to [`EXHAUSTIVE_LIMIT`] cells.
    Exhaustive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NashReport {
    pub is_nash: bool,
    /// Largest utility gain of any checked deviation (an epsilon certificate
    /// when non-positive).
    pub max_gain: f64,
    /// Player achieving `max_gain`.
    pub worst_player: Option<usize>,
    pub deviations_checked: u64,
}

/// Checks whether any in-scope unilateral deviation gains more than
/// `tolerance`.
pub fn is_nash(
    game: &Game,
    config: &GridConfig,
    scope: DeviationScope,
    tolerance: f64,
) -> Result<NashReport> {
    let n_i = game.partition.cells_per_player();
    if scope == DeviationScope::Exhaustive && n_i > EXHAUSTIVE_LIMIT {
        return Err(Error::Refused(format!(
            "exhaustive deviation check over 2^{n_i} strategies per player"
        )));
    }
    let mut max_gain = f64::NEG_INFINITY;
    let mut worst_player = None;
    let mut checked = 0u64;
    for player in 0..game.player_count() {
        let mut view = game.player_view(config, player)?;
        let mut own = view.current().to_vec();
        let base = view.utility(&own, game.cost);
        let mut consider = |gain: f64| {
            checked += 1;
            if gain > max_gain {
                max_gain = gain;
                worst_player = Some(player);
            }
        };
        match scope {
            DeviationScope::SingleFlip => {
                for j in 0..own.len() {
                    own[j] = !own[j];
                    consider(view.utility(&own, game.cost) - base);
                    own[j] = !own[j];
                }
            }
            DeviationScope::Exhaustive => {
                let current = own.clone();
                for mask in 0u32..(1u32 << n_i) {
                    for (j, s) in own.iter_mut().enumerate() {
                        *s = (mask >> j) & 1 == 1;
                    }
                    if own != current {
                        consider(view.utility(&own, game.cost) - base);
                    }
                }
            }
        }
    }
    Ok(NashReport {
        is_nash: max_gain <= tolerance,
        max_gain,
        worst_player,
        deviations_checked: checked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PlayerPartition;
    use crate::lightning::LightningField;

    fn per_cell_game(edge: usize, cost: f64) -> Game {
        Game::new(
            LightningField::uniform(edge, edge),
            PlayerPartition::per_cell(edge, edge),
            cost,
            Neighborhood::Four,
        )
        .unwrap()
    }

    #[test]
    fn schedule_rows() {
        assert_eq!(default_schedule(1, 16384), (1, 200));
        assert_eq!(default_schedule(4, 4096), (5, 120));
        assert_eq!(default_schedule(16, 1024), (20, 80));
        assert_eq!(default_schedule(1024, 16), (40, 80));
        assert_eq!(default_schedule(4096, 4), (20, 35));
        assert_eq!(default_schedule(16384, 1), (50, 1));
        assert_eq!(default_schedule(1, 1024), (1, 200));
        assert_eq!(default_schedule(1024, 1), (50, 1));
        assert_eq!(default_schedule(4, 65536), (5, 120));
    }

    #[test]
    fn defaults_and_validation() {
        let p = DynamicsParams::for_players(16, 1024, 7);
        assert_eq!((p.t_br, p.t_opt), (20, 80));
        assert_eq!(p.p_player, 0.9);
        assert_eq!(DynamicsParams::for_players(1, 1024, 7).p_player, 1.0);
        assert_eq!(p.alpha, 0.0);
        assert_eq!(p.history, 1);
        assert_eq!(p.cell_probability(1024), 0.05);
        assert_eq!(p.cell_probability(16), 1.0 / 16.0);
        assert_eq!(p.cell_probability(1), 1.0);
        p.validate().unwrap();

        let mut bad = p.clone();
        bad.p_player = 1.5;
        assert!(bad.validate().is_err());
        let mut bad = p.clone();
        bad.history = 0;
        assert!(bad.validate().is_err());
        let mut bad = p;
        bad.p_cell = Some(-0.1);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn nash_full_grid_zero_cost() {
        let game = per_cell_game(4, 0.0);
        let report = is_nash(
            &game,
            &GridConfig::full(4, 4),
            DeviationScope::SingleFlip,
            NASH_TOLERANCE,
        )
        .unwrap();
        assert!(report.is_nash);
        assert!(report.max_gain <= 1e-12);
        assert_eq!(report.deviations_checked, 16);
    }

    #[test]
    fn nash_one_empty_cell_zero_cost() {
        let game = per_cell_game(4, 0.0);
        let mut cfg = GridConfig::full(4, 4);
        cfg.set(5, false);
        assert!(
            is_nash(&game, &cfg, DeviationScope::SingleFlip, NASH_TOLERANCE)
                .unwrap()
                .is_nash
        );
    }

    #[test]
    fn two_empty_corners_are_not_nash() {
        let game = per_cell_game(3, 0.0);
        let mut cfg = GridConfig::full(3, 3);
        cfg.set_xy(0, 0, false);
        cfg.set_xy(2, 2, false);
        let report = is_nash(&game, &cfg, DeviationScope::SingleFlip, NASH_TOLERANCE).unwrap();
        assert!(!report.is_nash);
        // planting a corner joins the 7-cell ring: survival 1 - 8/9
        assert!((report.max_gain - 1.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn exhaustive_scope_is_refused_for_large_subgrids() {
        let game = Game::new(
            LightningField::uniform(8, 8),
            PlayerPartition::square(8, 1).unwrap(),
            0.0,
            Neighborhood::Four,
        )
        .unwrap();
        let err = is_nash(
            &game,
            &GridConfig::empty(8, 8),
            DeviationScope::Exhaustive,
            NASH_TOLERANCE,
        );
        assert!(matches!(err, Err(Error::Refused(_))));
    }

    #[test]
    fn exhaustive_scope_finds_block_deviations() {
        // 2x2 players on a 4x4 grid: empty grid is beaten by planting
        let game = Game::new(
            LightningField::uniform(4, 4),
            PlayerPartition::square(4, 4).unwrap(),
            0.0,
            Neighborhood::Four,
        )
        .unwrap();
        let report = is_nash(
            &game,
            &GridConfig::empty(4, 4),
            DeviationScope::Exhaustive,
            NASH_TOLERANCE,
        )
        .unwrap();
        assert!(!report.is_nash);
        assert_eq!(report.deviations_checked, 4 * 15);
    }

    #[test]
    fn unprofitable_planting_leaves_grid_empty() {
        for (m, cost) in [(1, 1.0), (4, 1.0), (64, 1.5)] {
            let game = Game::new(
                LightningField::gaussian(8, 8, 10.0, (0, 0)).unwrap(),
                PlayerPartition::square(8, m).unwrap(),
                cost,
                Neighborhood::Four,
            )
            .unwrap();
            let params = DynamicsParams::for_game(&game, 3);
            let run =
                best_response_dynamics(&game, &params, &OptimizerRegistry::default()).unwrap();
            assert_eq!(run.config.planted_count(), 0, "m={m} c={cost}");
        }
    }

    #[test]
    fn zero_cost_single_cell_players_fill_the_grid() {
        let game = per_cell_game(8, 0.0);
        let params = DynamicsParams::for_game(&game, 11);
        let run = best_response_dynamics(&game, &params, &OptimizerRegistry::default()).unwrap();
        assert!(run.config.planted_count() >= 63);
        assert!(
            is_nash(
                &game,
                &run.config,
                DeviationScope::SingleFlip,
                NASH_TOLERANCE
            )
            .unwrap()
            .is_nash
        );
        assert_eq!(run.welfare_trajectory.len(), params.t_br);
        assert_eq!(run.trace.len(), params.t_br * 64);
    }

    #[test]
    fn runs_are_deterministic() {
        let game = Game::new(
            LightningField::gaussian(8, 8, 10.0, (0, 0)).unwrap(),
            PlayerPartition::square(8, 4).unwrap(),
            0.1,
            Neighborhood::Four,
        )
        .unwrap();
        let mut params = DynamicsParams::for_game(&game, 5);
        let registry = OptimizerRegistry::default();
        let a = best_response_dynamics(&game, &params, &registry).unwrap();
        let b = best_response_dynamics(&game, &params, &registry).unwrap();
        assert_eq!(a.config, b.config);
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.welfare_trajectory, b.welfare_trajectory);

        params.shuffle_players = true;
        let c = best_response_dynamics(&game, &params, &registry).unwrap();
        let d = best_response_dynamics(&game, &params, &registry).unwrap();
        assert_eq!(c.trace, d.trace);
    }

    #[test]
    fn single_player_is_one_optimization() {
        let game = Game::new(
            LightningField::gaussian(8, 8, 10.0, (0, 0)).unwrap(),
            PlayerPartition::single(8, 8),
            0.0,
            Neighborhood::Four,
        )
        .unwrap();
        let params = DynamicsParams::for_game(&game, 1);
        assert_eq!(params.t_br, 1);
        let run = best_response_dynamics(&game, &params, &OptimizerRegistry::default()).unwrap();
        assert_eq!(run.trace.len(), 1);
        assert!((run.welfare() - run.welfare_trajectory[0]).abs() < 1e-12);
    }

    #[test]
    fn unknown_optimizer_is_an_error() {
        let game = per_cell_game(2, 0.0);
        let mut params = DynamicsParams::for_game(&game, 1);
        params.optimizer = "annealing".into();
        assert!(matches!(
            best_response_dynamics(&game, &params, &OptimizerRegistry::default()),
            Err(Error::UnknownOptimizer(_))
        ));
    }

    #[test]
    fn trace_csv_marks_round_welfare() {
        let game = per_cell_game(2, 0.0);
        let mut params = DynamicsParams::for_game(&game, 1);
        params.t_br = 2;
        let run = best_response_dynamics(&game, &params, &OptimizerRegistry::default()).unwrap();
        let mut buf = Vec::new();
        run.write_trace_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 8);
        assert!(lines[1].ends_with(','));
        assert!(!lines[4].ends_with(','));
    }
}
