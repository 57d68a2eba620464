//! Closed forms for the one-dimensional line under uniform lightning.
//!
//! A pattern is a run of `k` planted cells followed by `l` empty cells,
//! repeated. With a single owner the best pattern has `l = 1` and welfare
//! `W(k) = N rho(k) (1 - k/N - c)` with `rho(k) = k / (k + 1)`. With one
//! player per cell, equilibria have `l` in `{1, 2}` and run lengths bounded
//! from above by `N(1 - c)`.

use std::io::Write;

use serde::{Serialize, Serializer};

use crate::grid::{Game, GridConfig, Neighborhood, PlayerPartition};
use crate::lightning::LightningField;
use crate::{Error, Result};

/// Line length, cost and a `(k, l)` pattern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OneDParams {
    pub n: usize,
    pub c: f64,
    pub k: usize,
    pub l: usize,
}

impl OneDParams {
    pub fn validate(&self) -> Result<()> {
        check_domain(self.n, self.c)?;
        if self.k < 1 || self.k > self.n {
            return Err(Error::Parameter(format!(
                "run length {} outside [1, {}]",
                self.k, self.n
            )));
        }
        if self.l < 1 {
            return Err(Error::Parameter("gap length must be at least 1".into()));
        }
        Ok(())
    }
}

/// `c` in `[0, 1 - 1/N)`.
fn check_domain(n: usize, c: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::Parameter("line length must be positive".into()));
    }
    if c.is_nan() || c < 0.0 || c >= 1.0 - 1.0 / n as f64 {
        return Err(Error::Parameter(format!(
            "cost {c} outside [0, 1 - 1/N) for N = {n}"
        )));
    }
    Ok(())
}

pub fn pattern_density(k: f64) -> f64 {
    k / (k + 1.0)
}

/// `N rho(k) (1 - k/N - c)` for a continuous run length `k` and gap 1.
pub fn pattern_welfare(n: usize, k: f64, c: f64) -> f64 {
    let n = n as f64;
    n * pattern_density(k) * (1.0 - k / n - c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimalK {
    pub k: f64,
    pub density: f64,
    pub welfare: f64,
}

/// Continuous maximizer `k* = sqrt(N(1-c) + 1) - 1` with its density and
/// welfare `rho(k*) (N(1-c) - sqrt(N(1-c) + 1) + 1)`.
pub fn optimal_k(n: usize, c: f64) -> Result<OptimalK> {
    check_domain(n, c)?;
    let x = n as f64 * (1.0 - c);
    let root = (x + 1.0).sqrt();
    let density = (root - 1.0) / root;
    Ok(OptimalK {
        k: root - 1.0,
        density,
        welfare: density * (x - root + 1.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BruteForceK {
    pub k: usize,
    pub welfare: f64,
    /// False when no run length yields positive welfare.
    pub plant: bool,
}

/// Integer argmax of [`pattern_welfare`] over `k` in `[1, N]`; ties keep the
/// smallest `k`.
pub fn brute_force_optimal_pattern(n: usize, c: f64) -> Result<BruteForceK> {
    if n == 0 || n > 10_000 {
        return Err(Error::Refused(format!(
            "brute force over N = {n} (limit 10000)"
        )));
    }
    let (k, welfare) = (1..=n).map(|k| (k, pattern_welfare(n, k as f64, c))).fold(
        (0, f64::NEG_INFINITY),
        |best, cur| if cur.1 > best.1 { cur } else { best },
    );
    Ok(BruteForceK {
        k,
        welfare,
        plant: welfare > 0.0,
    })
}

/// Run-length bounds for equilibria with one player per cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquilibriumBounds {
    /// `[N(1-c) - 1] / 2`, attained with single-cell gaps.
    pub lower: f64,
    /// `N(1-c)`.
    pub upper: f64,
    /// `N(1-c) - 1`, the lower bound when gaps have length 2.
    pub lower_double_gap: f64,
}

impl EquilibriumBounds {
    /// Admissible gap lengths.
    pub const GAPS: [usize; 2] = [1, 2];

    /// Lower bound on `k` for gap length `l`; `None` if `l` is not admissible.
    pub fn lower_for_gap(&self, l: usize) -> Option<f64> {
        match l {
            1 => Some(self.lower),
            2 => Some(self.lower_double_gap),
            _ => None,
        }
    }

    pub fn contains(&self, k: usize, l: usize) -> bool {
        self.lower_for_gap(l)
            .is_some_and(|lo| k as f64 >= lo && k as f64 <= self.upper)
    }
}

pub fn equilibrium_k_bounds(n: usize, c: f64) -> Result<EquilibriumBounds> {
    check_domain(n, c)?;
    let x = n as f64 * (1.0 - c);
    Ok(EquilibriumBounds {
        lower: (x - 1.0) / 2.0,
        upper: x,
        lower_double_gap: x - 1.0,
    })
}

/// A welfare ratio that may be unbounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ratio {
    Finite(f64),
    Unbounded,
}

impl Ratio {
    fn of(num: f64, den: f64, scale: f64) -> Ratio {
        if den.abs() <= 1e-9 * scale.max(1.0) || den < 0.0 {
            Ratio::Unbounded
        } else {
            Ratio::Finite(num / den)
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Ratio::Finite(v) => Some(v),
            Ratio::Unbounded => None,
        }
    }
}

impl std::fmt::Display for Ratio {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Ratio::Finite(v) => write!(f, "{v}"),
            Ratio::Unbounded => f.write_str("unbounded"),
        }
    }
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Ratio::Finite(v) => s.serialize_f64(*v),
            Ratio::Unbounded => s.serialize_str("unbounded"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EfficiencyRatios {
    /// Optimal welfare over the worst equilibrium (`k = N(1-c)`).
    pub price_of_anarchy: Ratio,
    /// Optimal welfare over the best equilibrium (`l = 1`, `k` at the lower
    /// bound).
    pub price_of_stability: Ratio,
}

pub fn efficiency_ratios(n: usize, c: f64) -> Result<EfficiencyRatios> {
    let opt = optimal_k(n, c)?;
    let bounds = equilibrium_k_bounds(n, c)?;
    let worst = pattern_welfare(n, bounds.upper, c);
    let best = pattern_welfare(n, bounds.lower, c);
    Ok(EfficiencyRatios {
        price_of_anarchy: Ratio::of(opt.welfare, worst, n as f64),
        price_of_stability: Ratio::of(opt.welfare, best, n as f64),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityComparison {
    /// Density of the best equilibrium, `(N(1-c) - 1) / (N(1-c) + 1)`.
    pub equilibrium: f64,
    /// Density at `k*`.
    pub optimal: f64,
    pub equilibrium_denser: bool,
}

pub fn density_comparison(n: usize, c: f64) -> Result<DensityComparison> {
    let opt = optimal_k(n, c)?;
    let x = n as f64 * (1.0 - c);
    let equilibrium = (x - 1.0) / (x + 1.0);
    Ok(DensityComparison {
        equilibrium,
        optimal: opt.density,
        equilibrium_denser: equilibrium > opt.density,
    })
}

/// `k` ones then `l` zeros, repeated from the left and cut at `n`.
pub fn periodic_line(n: usize, k: usize, l: usize) -> GridConfig {
    GridConfig::from_cells(n, 1, (0..n).map(|g| g % (k + l) < k).collect()).expect("length matches")
}

/// `r` runs of exactly `k` trees separated by gaps of `l`, when
/// `n = r k + (r - 1) l` for some `r >= 1`; no partial runs at the ends.
pub fn uniform_profile(n: usize, k: usize, l: usize) -> Option<GridConfig> {
    if k == 0 || k > n || !(n + l).is_multiple_of(k + l) {
        return None;
    }
    Some(periodic_line(n, k, l))
}

/// Uniform lightning on a `1 x n` line with the given player layout.
pub fn line_game(n: usize, c: f64, per_cell: bool) -> Result<Game> {
    let partition = if per_cell {
        PlayerPartition::per_cell(n, 1)
    } else {
        PlayerPartition::single(n, 1)
    };
    Game::new(
        LightningField::uniform(n, 1),
        partition,
        c,
        Neighborhood::Four,
    )
}

/// Best single-owner layout on a finite line among those with `r` runs
/// split as evenly as possible by single empty cells, evaluated exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteLineOptimum {
    pub runs: usize,
    /// Mean run length of the winning layout.
    pub mean_run: f64,
    pub welfare: f64,
    pub config: GridConfig,
}

pub fn finite_line_optimum(n: usize, c: f64) -> Result<FiniteLineOptimum> {
    check_domain(n, c)?;
    if n > 5_000 {
        return Err(Error::Refused(format!(
            "finite-line scan over N = {n} (limit 5000)"
        )));
    }
    let game = line_game(n, c, false)?;
    let mut best: Option<FiniteLineOptimum> = None;
    for runs in 1..=n.div_ceil(2) {
        let trees = n - (runs - 1);
        let (base, extra) = (trees / runs, trees % runs);
        let mut cells = Vec::with_capacity(n);
        for r in 0..runs {
            if r > 0 {
                cells.push(false);
            }
            let len = base + usize::from(r < extra);
            cells.extend(std::iter::repeat_n(true, len));
        }
        let config = GridConfig::from_cells(n, 1, cells)?;
        let welfare = game.welfare(&config)?;
        if best.as_ref().is_none_or(|b| welfare > b.welfare) {
            best = Some(FiniteLineOptimum {
                runs,
                mean_run: trees as f64 / runs as f64,
                welfare,
                config,
            });
        }
    }
    Ok(best.expect("at least one layout"))
}

/// One row of the summary table for `(N, c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TableRow {
    pub n: usize,
    pub c: f64,
    pub k_star: f64,
    /// `None` beyond the brute-force size limit.
    pub k_brute: Option<usize>,
    pub density_star: f64,
    pub welfare_star: f64,
    pub k_lo: f64,
    pub k_hi: f64,
    pub price_of_stability: Ratio,
}

pub fn table_row(n: usize, c: f64) -> Result<TableRow> {
    let opt = optimal_k(n, c)?;
    let k_brute = match brute_force_optimal_pattern(n, c) {
        Ok(b) => Some(b.k),
        Err(Error::Refused(_)) => None,
        Err(e) => return Err(e),
    };
    let bounds = equilibrium_k_bounds(n, c)?;
    Ok(TableRow {
        n,
        c,
        k_star: opt.k,
        k_brute,
        density_star: opt.density,
        welfare_star: opt.welfare,
        k_lo: bounds.lower,
        k_hi: bounds.upper,
        price_of_stability: efficiency_ratios(n, c)?.price_of_stability,
    })
}

pub fn write_table_csv<W: Write>(rows: &[TableRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "N,c,k_star,k_brute,rho_star,W_star,k_lo,k_hi,PoS")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.n,
            r.c,
            r.k_star,
            r.k_brute.map(|k| k.to_string()).unwrap_or_default(),
            r.density_star,
            r.welfare_star,
            r.k_lo,
            r.k_hi,
            r.price_of_stability
        )?;
    }
    Ok(())
}
