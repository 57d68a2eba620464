//! Sampled fictitious play as a per-player best-response heuristic.
//!
//! Each of the player's cells acts as a sub-player sharing the player's
//! utility. Every inner iteration draws a reference strategy from the recent
//! history of candidates; a random subset of cells then switches to
//! whichever action is myopically better against that reference. The
//! resulting candidate replaces the incumbent only if it strictly improves
//! the player's utility.

use std::collections::VecDeque;

use rand::Rng;

use super::{BestResponse, DynamicsParams};
use crate::grid::PlayerView;
use crate::{Result, SimRng};

/// Reference strategy for the next inner iteration.
///
/// Per cell: a fair coin when `history` is empty or when the exploration
/// draw falls at or below `alpha`, otherwise the cell's value in a uniformly
/// drawn history entry. With `alpha == 0` no exploration draw is made, and a
/// single-entry history is copied without drawing an index.
pub fn choose_actions(
    cells: usize,
    alpha: f64,
    history: &VecDeque<Vec<bool>>,
    rng: &mut SimRng,
) -> Vec<bool> {
    (0..cells)
        .map(|j| {
            if history.is_empty() {
                return rng.gen::<bool>();
            }
            if alpha > 0.0 && rng.gen::<f64>() <= alpha {
                return rng.gen::<bool>();
            }
            let k = if history.len() == 1 {
                0
            } else {
                rng.gen_range(0..history.len())
            };
            history[k][j]
        })
        .collect()
}

/// Approximate best response of the view's player, starting from all-empty.
pub fn opt_sampled_fp(
    view: &mut PlayerView,
    cost: f64,
    params: &DynamicsParams,
    rng: &mut SimRng,
) -> Vec<bool> {
    run(view, cost, params, rng, None)
}

/// As [`opt_sampled_fp`], also returning the incumbent utility after every
/// inner iteration.
pub fn opt_sampled_fp_traced(
    view: &mut PlayerView,
    cost: f64,
    params: &DynamicsParams,
    rng: &mut SimRng,
) -> (Vec<bool>, Vec<f64>) {
    let mut trace = Vec::with_capacity(params.t_opt);
    let best = run(view, cost, params, rng, Some(&mut trace));
    (best, trace)
}

fn run(
    view: &mut PlayerView,
    cost: f64,
    params: &DynamicsParams,
    rng: &mut SimRng,
    mut trace: Option<&mut Vec<f64>>,
) -> Vec<bool> {
    let n = view.cell_count();
    let p_cell = params.cell_probability(n);
    let mut incumbent = vec![false; n];
    let mut incumbent_utility = view.utility(&incumbent, cost);
    let mut history: VecDeque<Vec<bool>> = VecDeque::with_capacity(params.history + 1);

    for _ in 0..params.t_opt {
        let reference = choose_actions(n, params.alpha, &history, rng);
        let mut candidate = incumbent.clone();
        let mut trial = reference.clone();
        for j in 0..n {
            let draw: f64 = rng.gen();
            if draw <= p_cell || n == 1 {
                trial[j] = true;
                let planted = view.utility(&trial, cost);
                trial[j] = false;
                let empty = view.utility(&trial, cost);
                trial[j] = reference[j];
                // ties go to empty
                candidate[j] = planted > empty;
            }
        }

        history.push_back(candidate.clone());
        if history.len() > params.history {
            history.pop_front();
        }

        if candidate != incumbent {
            let u = view.utility(&candidate, cost);
            if u > incumbent_utility {
                incumbent = candidate;
                incumbent_utility = u;
            }
        }
        if let Some(t) = trace.as_deref_mut() {
            t.push(incumbent_utility);
        }
    }
    incumbent
}

/// Registry entry for [`opt_sampled_fp`].
#[derive(Debug, Default, Clone, Copy)]
pub struct SampledFictitiousPlay;

impl SampledFictitiousPlay {
    pub const NAME: &'static str = "sfp";
}

impl BestResponse for SampledFictitiousPlay {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn describe(&self) -> &'static str {
        "sampled fictitious play over the player's cells"
    }

    fn respond(
        &self,
        view: &mut PlayerView,
        cost: f64,
        params: &DynamicsParams,
        rng: &mut SimRng,
    ) -> Result<Vec<bool>> {
        Ok(opt_sampled_fp(view, cost, params, rng))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Game, GridConfig, Neighborhood, PlayerPartition};
    use crate::lightning::LightningField;
    use crate::sim_rng;

    #[test]
    fn empty_history_draws_fair_coins() {
        let mut rng = sim_rng(1, 0);
        let draws = choose_actions(10_000, 0.0, &VecDeque::new(), &mut rng);
        let ones = draws.iter().filter(|&&b| b).count() as f64;
        // 4 sigma of Binomial(10000, 1/2)
        assert!((ones - 5000.0).abs() < 200.0, "{ones}");
    }

    #[test]
    fn single_history_entry_is_copied() {
        let mut rng = sim_rng(2, 0);
        let entry: Vec<bool> = (0..50).map(|j| j % 3 == 0).collect();
        let history = VecDeque::from(vec![entry.clone()]);
        assert_eq!(choose_actions(50, 0.0, &history, &mut rng), entry);
    }

    #[test]
    fn full_exploration_ignores_history() {
        let mut rng = sim_rng(3, 0);
        let history = VecDeque::from(vec![vec![true; 4000]]);
        let draws = choose_actions(4000, 1.0, &history, &mut rng);
        let ones = draws.iter().filter(|&&b| b).count();
        assert!((1800..2200).contains(&ones), "{ones}");
    }

    #[test]
    fn mixed_history_draws_from_entries() {
        let mut rng = sim_rng(4, 0);
        let history = VecDeque::from(vec![vec![true; 1000], vec![false; 1000]]);
        let draws = choose_actions(1000, 0.0, &history, &mut rng);
        let ones = draws.iter().filter(|&&b| b).count();
        assert!((400..600).contains(&ones), "{ones}");
    }

    #[test]
    fn single_cell_player_plays_its_myopic_best_response() {
        let field = LightningField::uniform(3, 3);
        let game = Game::new(
            field,
            PlayerPartition::per_cell(3, 3),
            0.0,
            Neighborhood::Four,
        )
        .unwrap();
        let mut cfg = GridConfig::full(3, 3);
        cfg.set(4, false);
        cfg.set(0, false);
        let params = DynamicsParams::for_game(&game, 0);
        // cell 4 would join the remaining 7 trees: survival 1/9 > 0
        let mut view = game.player_view(&cfg, 4).unwrap();
        assert_eq!(
            opt_sampled_fp(&mut view, 0.0, &params, &mut sim_rng(0, 0)),
            vec![true]
        );
        // under cost 0.5 the same move loses
        let mut view = game.player_view(&cfg, 4).unwrap();
        assert_eq!(
            opt_sampled_fp(&mut view, 0.5, &params, &mut sim_rng(0, 0)),
            vec![false]
        );
    }

    #[test]
    fn incumbent_never_gets_worse() {
        let game = Game::new(
            LightningField::gaussian(12, 12, 30.0, (0, 0)).unwrap(),
            PlayerPartition::single(12, 12),
            0.1,
            Neighborhood::Four,
        )
        .unwrap();
        let params = DynamicsParams::for_game(&game, 0);
        let mut view = game.player_view(&GridConfig::empty(12, 12), 0).unwrap();
        let (best, trace) = opt_sampled_fp_traced(&mut view, 0.1, &params, &mut sim_rng(9, 0));
        assert_eq!(trace.len(), params.t_opt);
        assert!(trace.windows(2).all(|w| w[1] >= w[0]));
        assert!((view.utility(&best, 0.1) - trace.last().unwrap()).abs() < 1e-12);
        assert!(*trace.last().unwrap() > 0.0);
    }
}
