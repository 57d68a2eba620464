//! Quick self-checks of the simulator against independent oracles.

use rand::Rng;
use serde::Serialize;

use crate::dynamics::{is_nash, DeviationScope, NASH_TOLERANCE};
use crate::grid::{label_components, Game, GridConfig, Neighborhood, PlayerPartition};
use crate::lightning::LightningField;
use crate::metrics::{fire_break_correlation, FireBreakCorrelation};
use crate::oned::{
    brute_force_optimal_pattern, equilibrium_k_bounds, line_game, optimal_k, uniform_profile,
};
use crate::{sim_rng, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name,
            passed,
            detail: detail.into(),
        }
    }
}

/// Component size of every planted cell by explicit stack flood fill; 0 for
/// empty cells.
pub fn flood_fill_sizes(config: &GridConfig, nb: Neighborhood) -> Vec<usize> {
    let shape = config.shape();
    let mut size = vec![0; config.len()];
    let mut seen = vec![false; config.len()];
    for start in 0..config.len() {
        if seen[start] || !config.is_planted(start) {
            continue;
        }
        let mut members = vec![start];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(g) = stack.pop() {
            for h in shape.neighbors(g, nb) {
                if !seen[h] && config.is_planted(h) {
                    seen[h] = true;
                    members.push(h);
                    stack.push(h);
                }
            }
        }
        for &g in &members {
            size[g] = members.len();
        }
    }
    size
}

fn random_config<R: Rng>(rng: &mut R, w: usize, h: usize, density: f64) -> GridConfig {
    let cells = (0..w * h).map(|_| rng.gen::<f64>() < density).collect();
    GridConfig::from_cells(w, h, cells).expect("length matches")
}

fn labeling_check() -> Result<Check> {
    let mut rng = sim_rng(11, 0);
    let mut mismatches = 0;
    for t in 0..300 {
        let (w, h) = (rng.gen_range(1..=10), rng.gen_range(1..=10));
        let density = rng.gen();
        let config = random_config(&mut rng, w, h, density);
        let nb = if t % 2 == 0 {
            Neighborhood::Four
        } else {
            Neighborhood::Eight
        };
        let lab = label_components(&config, &LightningField::uniform(w, h), nb)?;
        let oracle = flood_fill_sizes(&config, nb);
        for (g, &want) in oracle.iter().enumerate() {
            let got = lab.component_of(g).map_or(0, |c| lab.size(c));
            if got != want {
                mismatches += 1;
            }
        }
    }
    Ok(Check::new(
        "labeling-vs-flood-fill",
        mismatches == 0,
        format!("300 random grids, {mismatches} mismatched cells"),
    ))
}

fn welfare_check() -> Result<Check> {
    let mut rng = sim_rng(12, 0);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let density = rng.gen();
        let config = random_config(&mut rng, 8, 8, density);
        let field = LightningField::gaussian(8, 8, rng.gen_range(0.1..100.0), (0, 0))?;
        let cost = rng.gen_range(0.0..1.0);
        let mut values = Vec::new();
        for m in [1, 4, 16, 64] {
            let game = Game::new(
                field.clone(),
                PlayerPartition::square(8, m)?,
                cost,
                Neighborhood::Four,
            )?;
            values.push(game.welfare(&config)?);
        }
        for v in &values {
            worst = worst.max((v - values[0]).abs());
        }
    }
    Ok(Check::new(
        "welfare-partition-independence",
        worst <= 1e-9,
        format!("max spread {worst:e} over m in {{1,4,16,64}}"),
    ))
}

fn closed_form_check() -> Result<Check> {
    let mut failures = Vec::new();
    for n in [50, 99, 200, 399] {
        for c in [0.0, 0.25, 0.5] {
            let k = optimal_k(n, c)?.k;
            let b = brute_force_optimal_pattern(n, c)?.k as f64;
            if (k - b).abs() > 1.0 {
                failures.push(format!("N={n} c={c}: {b} vs {k:.3}"));
            }
        }
    }
    Ok(Check::new(
        "oned-closed-form",
        failures.is_empty(),
        if failures.is_empty() {
            "12 (N, c) pairs".into()
        } else {
            failures.join("; ")
        },
    ))
}

fn oned_nash_check() -> Result<Check> {
    let mut failures = Vec::new();
    let mut checked = 0;
    for n in 2..=30 {
        for c in [0.0, 0.5] {
            let Ok(bounds) = equilibrium_k_bounds(n, c) else {
                continue;
            };
            let game = line_game(n, c, true)?;
            for l in [1, 2] {
                for k in 1..=n {
                    let Some(profile) = uniform_profile(n, k, l) else {
                        continue;
                    };
                    if !bounds.contains(k, l) {
                        continue;
                    }
                    checked += 1;
                    if !is_nash(&game, &profile, DeviationScope::SingleFlip, NASH_TOLERANCE)?
                        .is_nash
                    {
                        failures.push(format!("N={n} c={c} k={k} l={l}"));
                    }
                }
            }
        }
    }
    Ok(Check::new(
        "oned-equilibria",
        failures.is_empty(),
        if failures.is_empty() {
            format!("{checked} uniform profiles")
        } else {
            failures.join("; ")
        },
    ))
}

fn uniform_c_check() -> Result<Check> {
    let mut rng = sim_rng(13, 0);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (w, h) = (rng.gen_range(1..=12), rng.gen_range(1..=12));
        let density = rng.gen();
        let config = random_config(&mut rng, w, h, density);
        if let FireBreakCorrelation::Value(c) =
            fire_break_correlation(&config, &LightningField::uniform(w, h))?
        {
            worst = worst.max((c - 1.0).abs());
        }
    }
    Ok(Check::new(
        "uniform-c-statistic",
        worst <= 1e-12,
        format!("max |C - 1| = {worst:e}"),
    ))
}

fn full_grid_check() -> Result<Check> {
    let game = Game::new(
        LightningField::gaussian(6, 6, 10.0, (0, 0))?,
        PlayerPartition::per_cell(6, 6),
        0.0,
        Neighborhood::Four,
    )?;
    let report = is_nash(
        &game,
        &GridConfig::full(6, 6),
        DeviationScope::SingleFlip,
        NASH_TOLERANCE,
    )?;
    Ok(Check::new(
        "full-grid-equilibrium",
        report.is_nash && game.welfare(&GridConfig::full(6, 6))?.abs() < 1e-12,
        format!("max gain {:e}", report.max_gain),
    ))
}

/// Runs every built-in check.
pub fn oracle_suite() -> Result<Vec<Check>> {
    Ok(vec![
        labeling_check()?,
        welfare_check()?,
        closed_form_check()?,
        oned_nash_check()?,
        uniform_c_check()?,
        full_grid_check()?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flood_fill_counts_rings() {
        let config = crate::grid::parse_text("111\n101\n111\n").unwrap();
        let sizes = flood_fill_sizes(&config, Neighborhood::Four);
        assert_eq!(sizes, vec![8, 8, 8, 8, 0, 8, 8, 8, 8]);
    }

    #[test]
    fn suite_passes() {
        for check in oracle_suite().unwrap() {
            assert!(check.passed, "{}: {}", check.name, check.detail);
        }
    }
}
