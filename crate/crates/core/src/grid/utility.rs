use std::collections::HashMap;

use super::{
    label_components, ComponentLabeling, GridConfig, Neighborhood, PlayerPartition, UnionFind,
};
use crate::lightning::LightningField;
use crate::{Error, Result};

/// Probability that the tree in cell `g` survives a strike: one minus the
/// lightning mass of its component.
pub fn survival_prob(labeling: &ComponentLabeling, g: usize) -> Result<f64> {
    match labeling.component_of(g) {
        Some(c) => Ok(1.0 - labeling.mass(c)),
        None => Err(Error::Precondition(format!(
            "survival probability requested for empty cell {g}"
        ))),
    }
}

/// Everything that fixes the payoffs of the planting game except the
/// configuration itself.
#[derive(Debug, Clone)]
pub struct Game {
    pub field: LightningField,
    pub partition: PlayerPartition,
    pub cost: f64,
    pub neighborhood: Neighborhood,
}

impl Game {
    pub fn new(
        field: LightningField,
        partition: PlayerPartition,
        cost: f64,
        neighborhood: Neighborhood,
    ) -> Result<Self> {
        if field.shape() != partition.shape() {
            return Err(Error::Config(format!(
                "lightning field is {}x{} but partition is {}x{}",
                field.shape().width,
                field.shape().height,
                partition.shape().width,
                partition.shape().height
            )));
        }
        if !cost.is_finite() || cost < 0.0 {
            return Err(Error::Parameter(format!(
                "planting cost must be finite and non-negative, got {cost}"
            )));
        }
        Ok(Game {
            field,
            partition,
            cost,
            neighborhood,
        })
    }

    /// Same game with players perceiving a different planting cost.
    pub fn with_cost(&self, cost: f64) -> Result<Self> {
        Game::new(
            self.field.clone(),
            self.partition.clone(),
            cost,
            self.neighborhood,
        )
    }

    pub fn player_count(&self) -> usize {
        self.partition.player_count()
    }

    pub fn labeling(&self, config: &GridConfig) -> Result<ComponentLabeling> {
        label_components(config, &self.field, self.neighborhood)
    }

    /// Exact expected utility of player `i`: yield minus planting cost over
    /// its own cells.
    pub fn player_utility(&self, config: &GridConfig, i: usize) -> Result<f64> {
        let labeling = self.labeling(config)?;
        Ok(self.utility_from_labeling(config, &labeling, i))
    }

    pub(crate) fn utility_from_labeling(
        &self,
        config: &GridConfig,
        labeling: &ComponentLabeling,
        i: usize,
    ) -> f64 {
        self.partition
            .cells_of(i)
            .into_iter()
            .filter(|&g| config.is_planted(g))
            .map(|g| {
                let comp = labeling.component_of(g).expect("planted cells are labeled");
                1.0 - labeling.mass(comp) - self.cost
            })
            .sum()
    }

    /// Utilities of all players from a single labeling, in player order.
    pub fn player_utilities(&self, config: &GridConfig) -> Result<Vec<f64>> {
        let labeling = self.labeling(config)?;
        Ok((0..self.player_count())
            .map(|i| self.utility_from_labeling(config, &labeling, i))
            .collect())
    }

    /// Sum of all player utilities.
    pub fn welfare(&self, config: &GridConfig) -> Result<f64> {
        Ok(self.player_utilities(config)?.iter().sum())
    }

    /// Local evaluator for player `i` against the rest of `config`.
    pub fn player_view(&self, config: &GridConfig, i: usize) -> Result<PlayerView> {
        PlayerView::new(self, config, i)
    }
}

/// Evaluates one player's utility for arbitrary choices on its own cells
/// while everyone else's cells stay as in the configuration the view was
/// built from.
///
/// The others' planted cells are labeled once. A candidate strategy is then
/// scored with a disjoint-set pass over the player's own cells plus the
/// outside components touching them, so each evaluation costs
/// `O(N_i + boundary)` instead of `O(N)`.
#[derive(Debug, Clone)]
pub struct PlayerView {
    player: usize,
    cells: Vec<usize>,
    p: Vec<f64>,
    // CSR adjacency: ids below `cells.len()` are own cells, the rest are
    // outside components offset by `cells.len()`
    adj_start: Vec<u32>,
    adj: Vec<u32>,
    outside_mass: Vec<f64>,
    current: Vec<bool>,
    uf: UnionFind,
    mass: Vec<f64>,
}

impl PlayerView {
    fn new(game: &Game, config: &GridConfig, player: usize) -> Result<Self> {
        config.check_shape(game.partition.shape(), "the partition")?;
        if player >= game.player_count() {
            return Err(Error::Precondition(format!(
                "player {player} out of range (m = {})",
                game.player_count()
            )));
        }
        let cells = game.partition.cells_of(player);
        let current: Vec<bool> = cells.iter().map(|&g| config.is_planted(g)).collect();

        let mut others = config.clone();
        for &g in &cells {
            others.set(g, false);
        }
        let outside = label_components(&others, &game.field, game.neighborhood)?;

        let shape = config.shape();
        let n = cells.len();
        let mut outside_index: HashMap<usize, u32> = HashMap::new();
        let mut outside_mass = Vec::new();
        let mut adj_start = Vec::with_capacity(n + 1);
        let mut adj = Vec::with_capacity(n * 2);
        for (j, &g) in cells.iter().enumerate() {
            adj_start.push(adj.len() as u32);
            for h in shape.neighbors(g, game.neighborhood) {
                if let Some(k) = game.partition.local_index(player, h) {
                    if k < j {
                        adj.push(k as u32);
                    }
                } else if let Some(comp) = outside.component_of(h) {
                    let next = outside_mass.len() as u32;
                    let e = *outside_index.entry(comp).or_insert_with(|| {
                        outside_mass.push(outside.mass(comp));
                        next
                    });
                    let node = n as u32 + e;
                    if !adj[adj_start[j] as usize..].contains(&node) {
                        adj.push(node);
                    }
                }
            }
        }
        adj_start.push(adj.len() as u32);

        Ok(PlayerView {
            player,
            p: cells.iter().map(|&g| game.field.p(g)).collect(),
            cells,
            adj_start,
            adj,
            outside_mass,
            current,
            uf: UnionFind::default(),
            mass: Vec::new(),
        })
    }

    pub fn player(&self) -> usize {
        self.player
    }

    /// Global indices of the player's cells, row-major within the subgrid.
    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    /// The player's strategy in the configuration the view was built from.
    pub fn current(&self) -> &[bool] {
        &self.current
    }

    /// Exact utility of playing `own` (indexed like [`Self::cells`]).
    pub fn utility(&mut self, own: &[bool], cost: f64) -> f64 {
        let n = self.cells.len();
        debug_assert_eq!(own.len(), n);
        let total = n + self.outside_mass.len();
        self.uf.reset(total);
        self.mass.clear();
        self.mass.extend(
            own.iter()
                .zip(&self.p)
                .map(|(&s, &p)| if s { p } else { 0.0 }),
        );
        self.mass.extend_from_slice(&self.outside_mass);

        for j in 0..n {
            if !own[j] {
                continue;
            }
            let (lo, hi) = (self.adj_start[j] as usize, self.adj_start[j + 1] as usize);
            for &node in &self.adj[lo..hi] {
                let node = node as usize;
                if node < n && !own[node] {
                    continue;
                }
                if let Some((root, absorbed)) = self.uf.union(j, node) {
                    self.mass[root] += self.mass[absorbed];
                }
            }
        }

        let mut u = 0.0;
        for (j, &planted) in own.iter().enumerate() {
            if planted {
                let r = self.uf.find(j);
                u += 1.0 - self.mass[r] - cost;
            }
        }
        u
    }
}
