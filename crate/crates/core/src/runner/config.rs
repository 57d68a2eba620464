use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::dynamics::SampledFictitiousPlay;
use crate::grid::{is_power_of_four, Neighborhood, PlayerPartition};
use crate::{Error, Result};

pub const DEFAULT_EDGE: usize = 32;
pub const DEFAULT_COSTS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 0.9];
pub const DEFAULT_VARIANCES: [f64; 4] = [0.1, 1.0, 10.0, 100.0];
pub const DEFAULT_FRAGILITY_TRIALS: usize = 50;

/// `(T_br, T_opt)` forced for one player count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ScheduleOverride {
    pub t_br: usize,
    pub t_opt: usize,
}

/// A fully resolved sweep description.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub edge: usize,
    pub m: Vec<usize>,
    pub c: Vec<f64>,
    pub v: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Recenter trials per run; 0 skips the fragility experiment.
    pub fragility_trials: usize,
    /// Penalties for the fines experiment; empty skips it.
    pub fines: Vec<f64>,
    pub out: PathBuf,
    /// Concurrent sweep cells; 0 uses every core.
    pub workers: usize,
    pub neighborhood: Neighborhood,
    pub optimizer: String,
    pub shuffle_players: bool,
    /// `None` keeps the per-run default (0.9, or 1 for a single player).
    pub p_player: Option<f64>,
    pub alpha: f64,
    pub history: usize,
    /// Keyed by player count.
    pub schedule: BTreeMap<usize, ScheduleOverride>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig::for_edge(DEFAULT_EDGE)
    }
}

/// Every power of four whose square tiling divides an `edge x edge` grid.
pub fn feasible_player_counts(edge: usize) -> Vec<usize> {
    std::iter::successors(Some(1usize), |m| m.checked_mul(4))
        .take_while(|&m| m <= edge.saturating_mul(edge))
        .filter(|&m| PlayerPartition::square(edge, m).is_ok())
        .collect()
}

impl ExperimentConfig {
    pub fn for_edge(edge: usize) -> Self {
        ExperimentConfig {
            edge,
            m: feasible_player_counts(edge),
            c: DEFAULT_COSTS.to_vec(),
            v: DEFAULT_VARIANCES.to_vec(),
            seeds: vec![0],
            fragility_trials: DEFAULT_FRAGILITY_TRIALS,
            fines: Vec::new(),
            out: PathBuf::from("out"),
            workers: 0,
            neighborhood: Neighborhood::Four,
            optimizer: SampledFictitiousPlay::NAME.to_string(),
            shuffle_players: false,
            p_player: None,
            alpha: 0.0,
            history: 1,
            schedule: BTreeMap::new(),
        }
    }

    /// Changes the edge, resetting `m` to its default if it was never set
    /// explicitly.
    pub fn set_edge(&mut self, edge: usize) {
        if self.m == feasible_player_counts(self.edge) {
            self.m = feasible_player_counts(edge);
        }
        self.edge = edge;
    }

    pub fn validate(&self) -> Result<()> {
        if self.edge == 0 {
            return Err(Error::Config("edge must be positive".into()));
        }
        for &m in &self.m {
            if !is_power_of_four(m) {
                return Err(Error::Config(format!("m = {m} is not a power of 4")));
            }
            PlayerPartition::square(self.edge, m)?;
        }
        for (name, list) in [
            ("m", self.m.len()),
            ("c", self.c.len()),
            ("v", self.v.len()),
            ("seeds", self.seeds.len()),
        ] {
            if list == 0 {
                return Err(Error::Config(format!("`{name}` must not be empty")));
            }
        }
        for &c in &self.c {
            if !c.is_finite() || c < 0.0 {
                return Err(Error::Parameter(format!(
                    "cost {c} must be finite and non-negative"
                )));
            }
        }
        for &v in &self.v {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Parameter(format!(
                    "v = {v} must be finite and positive"
                )));
            }
        }
        for &p in &self.fines {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::Parameter(format!(
                    "fine {p} must be finite and non-negative"
                )));
            }
        }
        for (name, p) in [
            ("p_player", self.p_player.unwrap_or(0.0)),
            ("alpha", self.alpha),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Parameter(format!(
                    "{name} must lie in [0, 1], got {p}"
                )));
            }
        }
        if self.history == 0 {
            return Err(Error::Parameter("history must be at least 1".into()));
        }
        for (m, s) in &self.schedule {
            if s.t_br == 0 || s.t_opt == 0 {
                return Err(Error::Parameter(format!(
                    "schedule for m = {m} has a zero count"
                )));
            }
        }
        Ok(())
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        match key {
            "edge" => self.set_edge(parse_one(value)?),
            "m" => self.m = parse_list(value)?,
            "c" => self.c = parse_list(value)?,
            "v" => self.v = parse_list(value)?,
            "seed" | "seeds" => self.seeds = parse_list(value)?,
            "fragility_trials" => self.fragility_trials = parse_one(value)?,
            "fines" => self.fines = parse_list(value)?,
            "out" => self.out = PathBuf::from(value),
            "workers" => self.workers = parse_one(value)?,
            "neighborhood" => self.neighborhood = parse_one(value)?,
            "optimizer" => self.optimizer = value.to_string(),
            "shuffle_players" => self.shuffle_players = parse_one(value)?,
            "p_player" => self.p_player = Some(parse_one(value)?),
            "alpha" => self.alpha = parse_one(value)?,
            "history" => self.history = parse_one(value)?,
            "schedule" => {
                self.schedule.clear();
                for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    let parts: Vec<&str> = item.split(':').map(str::trim).collect();
                    let [m, t_br, t_opt] = parts[..] else {
                        return Err(format!("schedule entry `{item}` is not m:t_br:t_opt"));
                    };
                    self.schedule.insert(
                        parse_one(m)?,
                        ScheduleOverride {
                            t_br: parse_one(t_br)?,
                            t_opt: parse_one(t_opt)?,
                        },
                    );
                }
            }
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Parses flat `key = value` text. `#` starts a comment; lists are
    /// comma separated. Keys may repeat; the last one wins.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut config = ExperimentConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            config.set(key.trim(), value.trim()).map_err(err)?;
        }
        Ok(config)
    }
}

fn parse_one<T: FromStr>(value: &str) -> std::result::Result<T, String> {
    value
        .trim()
        .parse()
        .map_err(|_| format!("malformed value `{value}`"))
}

fn parse_list<T: FromStr>(value: &str) -> std::result::Result<Vec<T>, String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(parse_one)
        .collect()
}

/// Reads, parses and validates a config file.
pub fn validate_and_load(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let config = ExperimentConfig::parse(&text, path)?;
    config.validate()?;
    Ok(config)
}
