//! Measurements on equilibrium configurations.
//!
//! Everything here is exact: expectations over the lightning strike are
//! computed from component masses, never sampled.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize, Serializer};

use crate::dynamics::{best_response_dynamics, DynamicsParams, OptimizerRegistry, RunResult};
use crate::grid::{label_components, Game, GridConfig, Neighborhood, PlayerPartition};
use crate::lightning::LightningField;
use crate::{Error, Result, SimRng};

/// Welfare computed globally from component sizes and masses, without a
/// partition: `sum over components of size * (1 - mass - cost)`.
pub fn welfare_of(
    config: &GridConfig,
    field: &LightningField,
    cost: f64,
    nb: Neighborhood,
) -> Result<f64> {
    let lab = label_components(config, field, nb)?;
    Ok(lab
        .sizes()
        .iter()
        .zip(lab.masses())
        .map(|(&size, &mass)| size as f64 * (1.0 - mass - cost))
        .sum())
}

/// Expected number of surviving trees.
pub fn yield_of(config: &GridConfig, field: &LightningField, nb: Neighborhood) -> Result<f64> {
    welfare_of(config, field, 0.0, nb)
}

/// Distribution of the number of trees burned by one strike.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeDistribution {
    /// Distinct cascade sizes, ascending. Contains 0 iff `includes_zero`.
    pub support: Vec<usize>,
    /// `Pr{X = x}` per support point.
    pub pmf: Vec<f64>,
    /// `Pr{X >= x}` per support point.
    pub ccdf: Vec<f64>,
    /// Whether strikes on empty cells carry mass.
    pub includes_zero: bool,
}

impl CascadeDistribution {
    /// `Pr{X >= x}` for any `x`.
    pub fn ccdf_at(&self, x: usize) -> f64 {
        match self.support.iter().position(|&s| s >= x) {
            Some(i) => self.ccdf[i],
            None => 0.0,
        }
    }

    pub fn pmf_at(&self, x: usize) -> f64 {
        self.support
            .iter()
            .position(|&s| s == x)
            .map_or(0.0, |i| self.pmf[i])
    }

    pub fn total_mass(&self) -> f64 {
        self.pmf.iter().sum()
    }

    /// `x,ccdf` rows for positive sizes, for log-log plotting.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x,ccdf")?;
        for (&x, &c) in self.support.iter().zip(&self.ccdf) {
            if x > 0 {
                writeln!(out, "{x},{c:e}")?;
            }
        }
        Ok(())
    }
}

/// Exact cascade-size distribution of a single strike.
pub fn cascade_distribution(
    config: &GridConfig,
    field: &LightningField,
    nb: Neighborhood,
) -> Result<CascadeDistribution> {
    let lab = label_components(config, field, nb)?;
    let mut by_size: BTreeMap<usize, f64> = BTreeMap::new();
    let zero: f64 = (0..config.len())
        .filter(|&g| !config.is_planted(g))
        .map(|g| field.p(g))
        .sum();
    let includes_zero = zero > 0.0;
    if includes_zero {
        by_size.insert(0, zero);
    }
    for (&size, &mass) in lab.sizes().iter().zip(lab.masses()) {
        *by_size.entry(size).or_insert(0.0) += mass;
    }
    let support: Vec<usize> = by_size.keys().copied().collect();
    let pmf: Vec<f64> = by_size.values().copied().collect();
    let mut ccdf = vec![0.0; pmf.len()];
    let mut tail = 0.0;
    for i in (0..pmf.len()).rev() {
        tail += pmf[i];
        ccdf[i] = tail;
    }
    Ok(CascadeDistribution {
        support,
        pmf,
        ccdf,
        includes_zero,
    })
}

// cumulative sums may land a few ulps short of q
const QUANTILE_SLACK: f64 = 1e-12;

fn check_quantile(q: f64) -> Result<()> {
    if q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "quantile must lie in (0, 1), got {q}"
        )))
    }
}

/// Smallest size `x` with `Pr{X <= x} >= q`, counting strikes on empty
/// cells as size-0 cascades.
pub fn cascade_percentile(dist: &CascadeDistribution, q: f64) -> Result<usize> {
    check_quantile(q)?;
    let mut cum = 0.0;
    for (&x, &p) in dist.support.iter().zip(&dist.pmf) {
        cum += p;
        if cum >= q - QUANTILE_SLACK {
            return Ok(x);
        }
    }
    Ok(dist.support.last().copied().unwrap_or(0))
}

/// Percentile of the cascade size given that lightning hits a tree.
/// `None` when no tree is planted.
pub fn cascade_percentile_given_tree(dist: &CascadeDistribution, q: f64) -> Result<Option<usize>> {
    check_quantile(q)?;
    let tree_mass: f64 = dist
        .support
        .iter()
        .zip(&dist.pmf)
        .filter(|(&x, _)| x > 0)
        .map(|(_, &p)| p)
        .sum();
    if tree_mass <= 0.0 {
        return Ok(None);
    }
    let mut cum = 0.0;
    let mut last = None;
    for (&x, &p) in dist.support.iter().zip(&dist.pmf) {
        if x == 0 {
            continue;
        }
        cum += p / tree_mass;
        last = Some(x);
        if cum >= q - QUANTILE_SLACK {
            return Ok(Some(x));
        }
    }
    Ok(last)
}

/// Ratio of the strike probability on empty cells to the empty fraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FireBreakCorrelation {
    Value(f64),
    /// Every cell is planted; the ratio is undefined.
    NoEmptyCells,
}

impl FireBreakCorrelation {
    pub fn value(self) -> Option<f64> {
        match self {
            FireBreakCorrelation::Value(v) => Some(v),
            FireBreakCorrelation::NoEmptyCells => None,
        }
    }
}

impl std::fmt::Display for FireBreakCorrelation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FireBreakCorrelation::Value(v) => write!(f, "{v}"),
            FireBreakCorrelation::NoEmptyCells => f.write_str("no-empty-cells"),
        }
    }
}

impl Serialize for FireBreakCorrelation {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            FireBreakCorrelation::Value(v) => s.serialize_f64(*v),
            FireBreakCorrelation::NoEmptyCells => s.serialize_str("no-empty-cells"),
        }
    }
}

/// `C = sum_g p_g (1 - s_g) / (1 - rho)`.
pub fn fire_break_correlation(
    config: &GridConfig,
    field: &LightningField,
) -> Result<FireBreakCorrelation> {
    config.check_shape(field.shape(), "the lightning field")?;
    let empty: Vec<usize> = (0..config.len())
        .filter(|&g| !config.is_planted(g))
        .collect();
    if empty.is_empty() {
        return Ok(FireBreakCorrelation::NoEmptyCells);
    }
    let hit_empty: f64 = empty.iter().map(|&g| field.p(g)).sum();
    let empty_fraction = empty.len() as f64 / config.len() as f64;
    Ok(FireBreakCorrelation::Value(hit_empty / empty_fraction))
}

/// Mean over subgrids of the within-subgrid C statistic, with each
/// subgrid's lightning renormalized to its own mass. Subgrids without empty
/// cells or without lightning mass are skipped; `None` if all are.
pub fn fire_break_correlation_by_player(
    config: &GridConfig,
    field: &LightningField,
    partition: &PlayerPartition,
) -> Result<Option<f64>> {
    config.check_shape(field.shape(), "the lightning field")?;
    config.check_shape(partition.shape(), "the partition")?;
    let mut total = 0.0;
    let mut counted = 0usize;
    for i in 0..partition.player_count() {
        let cells = partition.cells_of(i);
        let mass: f64 = cells.iter().map(|&g| field.p(g)).sum();
        let empty: Vec<usize> = cells
            .iter()
            .copied()
            .filter(|&g| !config.is_planted(g))
            .collect();
        if empty.is_empty() || mass <= 0.0 {
            continue;
        }
        let hit: f64 = empty.iter().map(|&g| field.p(g)).sum::<f64>() / mass;
        total += hit / (empty.len() as f64 / cells.len() as f64);
        counted += 1;
    }
    Ok((counted > 0).then(|| total / counted as f64))
}

/// Mean `(x, y)` cell coordinates of the empty cells; `None` if there are
/// none.
pub fn empty_centroid(config: &GridConfig) -> Option<(f64, f64)> {
    let shape = config.shape();
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
    for g in (0..config.len()).filter(|&g| !config.is_planted(g)) {
        let (x, y) = shape.coords(g);
        sx += x as f64;
        sy += y as f64;
        n += 1;
    }
    (n > 0).then(|| (sx / n as f64, sy / n as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fragility {
    /// Welfare under the original field.
    pub baseline: f64,
    /// Mean welfare after moving the lightning center.
    pub mean_shifted: f64,
    /// Welfare of every trial, in trial order.
    pub shifted: Vec<f64>,
}

impl Fragility {
    /// `mean_shifted / baseline`; `None` when the baseline is zero.
    pub fn ratio(&self) -> Option<f64> {
        (self.baseline != 0.0).then(|| self.mean_shifted / self.baseline)
    }
}

/// Holds `config` fixed and re-evaluates welfare under `trials` fields
/// recentered uniformly at random.
pub fn fragility_eval(
    config: &GridConfig,
    field: &LightningField,
    cost: f64,
    nb: Neighborhood,
    trials: usize,
    rng: &mut SimRng,
) -> Result<Fragility> {
    if trials == 0 {
        return Err(Error::Parameter(
            "fragility needs at least one trial".into(),
        ));
    }
    let baseline = welfare_of(config, field, cost, nb)?;
    let shifted = (0..trials)
        .map(|_| welfare_of(config, &field.recenter_random(rng), cost, nb))
        .collect::<Result<Vec<_>>>()?;
    let mean_shifted = shifted.iter().sum::<f64>() / trials as f64;
    Ok(Fragility {
        baseline,
        mean_shifted,
        shifted,
    })
}

#[derive(Debug, Clone)]
pub struct FineOutcome {
    pub penalty: f64,
    /// Welfare at the true cost of the configuration reached under the
    /// perceived cost `cost + penalty`.
    pub welfare: f64,
    pub density: f64,
    pub run: RunResult,
}

/// Runs the dynamics with players perceiving `game.cost + penalty` and
/// scores the outcome at the true cost `game.cost`.
pub fn fines_experiment(
    game: &Game,
    penalty: f64,
    params: &DynamicsParams,
    registry: &OptimizerRegistry,
) -> Result<FineOutcome> {
    if !penalty.is_finite() || penalty < 0.0 {
        return Err(Error::Parameter(format!(
            "penalty must be finite and non-negative, got {penalty}"
        )));
    }
    let perceived = game.with_cost(game.cost + penalty)?;
    let run = best_response_dynamics(&perceived, params, registry)?;
    let welfare = welfare_of(&run.config, &game.field, game.cost, game.neighborhood)?;
    Ok(FineOutcome {
        penalty,
        welfare,
        density: run.config.density(),
        run,
    })
}

/// Static measurements of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Measurements {
    pub welfare: f64,
    #[serde(rename = "yield")]
    pub yield_: f64,
    pub density: f64,
    pub planted: usize,
    pub components: usize,
    pub largest_component: usize,
    pub fire_break_correlation: FireBreakCorrelation,
    pub fire_break_correlation_by_player: Option<f64>,
    pub empty_centroid: Option<(f64, f64)>,
    pub cascade_p90: usize,
    pub cascade_p90_given_tree: Option<usize>,
}

pub fn measure(game: &Game, config: &GridConfig) -> Result<Measurements> {
    let lab = game.labeling(config)?;
    let dist = cascade_distribution(config, &game.field, game.neighborhood)?;
    Ok(Measurements {
        welfare: welfare_of(config, &game.field, game.cost, game.neighborhood)?,
        yield_: yield_of(config, &game.field, game.neighborhood)?,
        density: config.density(),
        planted: config.planted_count(),
        components: lab.component_count(),
        largest_component: lab.sizes().iter().copied().max().unwrap_or(0),
        fire_break_correlation: fire_break_correlation(config, &game.field)?,
        fire_break_correlation_by_player: fire_break_correlation_by_player(
            config,
            &game.field,
            &game.partition,
        )?,
        empty_centroid: empty_centroid(config),
        cascade_p90: cascade_percentile(&dist, 0.9)?,
        cascade_p90_given_tree: cascade_percentile_given_tree(&dist, 0.9)?,
    })
}
