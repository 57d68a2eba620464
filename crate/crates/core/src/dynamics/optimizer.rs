use super::{DynamicsParams, SampledFictitiousPlay, EXHAUSTIVE_LIMIT};
use crate::grid::PlayerView;
use crate::{Error, Result, SimRng};

/// A best-response heuristic for one player against fixed opponents.
pub trait BestResponse: Send + Sync {
    /// Registry key.
    fn name(&self) -> &'static str;

    fn describe(&self) -> &'static str;

    /// New strategy for `view`'s player, indexed like `view.cells()`.
    fn respond(
        &self,
        view: &mut PlayerView,
        cost: f64,
        params: &DynamicsParams,
        rng: &mut SimRng,
    ) -> Result<Vec<bool>>;
}

/// Best-response optimizers keyed by name.
pub struct OptimizerRegistry {
    entries: Vec<Box<dyn BestResponse>>,
}

impl OptimizerRegistry {
    pub fn empty() -> Self {
        OptimizerRegistry {
            entries: Vec::new(),
        }
    }

    /// `sfp`, `exhaustive` and `local-search`.
    pub fn with_builtins() -> Self {
        let mut reg = Self::empty();
        reg.register(Box::new(SampledFictitiousPlay));
        reg.register(Box::new(ExhaustiveSearch));
        reg.register(Box::new(LocalSearch));
        reg
    }

    /// Adds `optimizer`, replacing any entry with the same name.
    pub fn register(&mut self, optimizer: Box<dyn BestResponse>) {
        self.entries.retain(|e| e.name() != optimizer.name());
        self.entries.push(optimizer);
    }

    pub fn get(&self, name: &str) -> Result<&dyn BestResponse> {
        self.entries
            .iter()
            .find(|e| e.name() == name)
            .map(|e| e.as_ref())
            .ok_or_else(|| Error::UnknownOptimizer(name.to_string()))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name()).collect()
    }
}

impl Default for OptimizerRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl std::fmt::Debug for OptimizerRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.names()).finish()
    }
}

/// True best response by enumerating every strategy; refuses subgrids
/// larger than [`EXHAUSTIVE_LIMIT`] cells. Among equally good strategies the
/// one with the smallest bitmask (fewest, earliest trees) wins.
#[derive(Debug, Default, Clone, Copy)]
pub struct ExhaustiveSearch;

impl BestResponse for ExhaustiveSearch {
    fn name(&self) -> &'static str {
        "exhaustive"
    }

    fn describe(&self) -> &'static str {
        "enumerate all 2^N_i strategies (N_i <= 16)"
    }

    fn respond(
        &self,
        view: &mut PlayerView,
        cost: f64,
        _params: &DynamicsParams,
        _rng: &mut SimRng,
    ) -> Result<Vec<bool>> {
        let n = view.cell_count();
        if n > EXHAUSTIVE_LIMIT {
            return Err(Error::Refused(format!(
                "exhaustive best response over 2^{n} strategies"
            )));
        }
        let mut own = vec![false; n];
        let mut best = own.clone();
        let mut best_u = view.utility(&own, cost);
        for mask in 1u32..(1u32 << n) {
            for (j, s) in own.iter_mut().enumerate() {
                *s = (mask >> j) & 1 == 1;
            }
            let u = view.utility(&own, cost);
            if u > best_u {
                best_u = u;
                best.copy_from_slice(&own);
            }
        }
        Ok(best)
    }
}

/// Deterministic first-improvement hill climbing over single-cell flips,
/// starting from the player's current strategy. At most `t_opt` sweeps.
#[derive(Debug, Default, Clone, Copy)]
pub struct LocalSearch;

impl BestResponse for LocalSearch {
    fn name(&self) -> &'static str {
        "local-search"
    }

    fn describe(&self) -> &'static str {
        "single-flip hill climbing from the current strategy"
    }

    fn respond(
        &self,
        view: &mut PlayerView,
        cost: f64,
        params: &DynamicsParams,
        _rng: &mut SimRng,
    ) -> Result<Vec<bool>> {
        let mut own = view.current().to_vec();
        let mut u = view.utility(&own, cost);
        for _ in 0..params.t_opt {
            let mut improved = false;
            for j in 0..own.len() {
                own[j] = !own[j];
                let flipped = view.utility(&own, cost);
                if flipped > u {
                    u = flipped;
                    improved = true;
                } else {
                    own[j] = !own[j];
                }
            }
            if !improved {
                break;
            }
        }
        Ok(own)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{is_nash, DeviationScope, NASH_TOLERANCE};
    use crate::grid::{Game, GridConfig, Neighborhood, PlayerPartition};
    use crate::lightning::LightningField;
    use crate::sim_rng;

    struct AlwaysEmpty;

    impl BestResponse for AlwaysEmpty {
        fn name(&self) -> &'static str {
            "empty"
        }
        fn describe(&self) -> &'static str {
            "plant nothing"
        }
        fn respond(
            &self,
            view: &mut PlayerView,
            _cost: f64,
            _params: &DynamicsParams,
            _rng: &mut SimRng,
        ) -> Result<Vec<bool>> {
            Ok(vec![false; view.cell_count()])
        }
    }

    #[test]
    fn registry_lookup() {
        let mut reg = OptimizerRegistry::default();
        assert_eq!(reg.names(), vec!["sfp", "exhaustive", "local-search"]);
        assert!(reg.get("sfp").is_ok());
        assert!(matches!(reg.get("nope"), Err(Error::UnknownOptimizer(_))));
        reg.register(Box::new(AlwaysEmpty));
        assert_eq!(reg.get("empty").unwrap().describe(), "plant nothing");
        reg.register(Box::new(AlwaysEmpty));
        assert_eq!(reg.names().len(), 4);
    }

    fn game_4x4(cost: f64) -> Game {
        Game::new(
            LightningField::gaussian(4, 4, 4.0, (0, 0)).unwrap(),
            PlayerPartition::single(4, 4),
            cost,
            Neighborhood::Four,
        )
        .unwrap()
    }

    #[test]
    fn exhaustive_matches_brute_force_optimum() {
        let game = game_4x4(0.1);
        let mut best = f64::NEG_INFINITY;
        for mask in 0u64..(1 << 16) {
            let u = game
                .player_utility(&GridConfig::from_mask(4, 4, mask), 0)
                .unwrap();
            best = best.max(u);
        }
        let mut view = game.player_view(&GridConfig::empty(4, 4), 0).unwrap();
        let params = DynamicsParams::for_game(&game, 0);
        let s = ExhaustiveSearch
            .respond(&mut view, 0.1, &params, &mut sim_rng(0, 0))
            .unwrap();
        assert!((view.utility(&s, 0.1) - best).abs() < 1e-12);
    }

    #[test]
    fn exhaustive_refuses_large_players() {
        let game = Game::new(
            LightningField::uniform(5, 5),
            PlayerPartition::single(5, 5),
            0.0,
            Neighborhood::Four,
        )
        .unwrap();
        let mut view = game.player_view(&GridConfig::empty(5, 5), 0).unwrap();
        let params = DynamicsParams::for_game(&game, 0);
        assert!(ExhaustiveSearch
            .respond(&mut view, 0.0, &params, &mut sim_rng(0, 0))
            .is_err());
    }

    #[test]
    fn local_search_reaches_a_single_flip_optimum() {
        let game = game_4x4(0.05);
        let mut view = game.player_view(&GridConfig::empty(4, 4), 0).unwrap();
        let params = DynamicsParams::for_game(&game, 0);
        let s = LocalSearch
            .respond(&mut view, 0.05, &params, &mut sim_rng(0, 0))
            .unwrap();
        let cfg = GridConfig::from_cells(4, 4, s).unwrap();
        assert!(
            is_nash(&game, &cfg, DeviationScope::SingleFlip, NASH_TOLERANCE)
                .unwrap()
                .is_nash
        );
    }
}
