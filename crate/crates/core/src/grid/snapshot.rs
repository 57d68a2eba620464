//! Plain-text and PGM grid snapshots. Row-major, origin at the top-left.

use super::GridConfig;
use crate::{Error, Result};

/// One row per line, `1` planted and `0` empty, newline-terminated.
pub fn to_text(config: &GridConfig) -> String {
    let mut out = String::with_capacity(config.len() + config.height());
    for row in config.cells().chunks(config.width().max(1)) {
        out.extend(row.iter().map(|&c| if c { '1' } else { '0' }));
        out.push('\n');
    }
    out
}

/// Inverse of [`to_text`]. Blank lines are ignored; every row must have the
/// same width.
pub fn parse_text(text: &str) -> Result<GridConfig> {
    let mut width = None;
    let mut cells = Vec::new();
    let mut height = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if *width.get_or_insert(line.len()) != line.len() {
            return Err(Error::Config(format!(
                "grid row {} has {} cells, expected {}",
                lineno + 1,
                line.len(),
                width.unwrap()
            )));
        }
        for ch in line.chars() {
            cells.push(match ch {
                '1' => true,
                '0' => false,
                other => {
                    return Err(Error::Config(format!(
                        "grid row {} contains `{other}`",
                        lineno + 1
                    )))
                }
            });
        }
        height += 1;
    }
    let width = width.ok_or_else(|| Error::Config("grid text is empty".into()))?;
    GridConfig::from_cells(width, height, cells)
}

/// Binary PGM (P5) with planted cells at 255 and empty cells at 0.
pub fn to_pgm(config: &GridConfig) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", config.width(), config.height()).into_bytes();
    out.extend(config.cells().iter().map(|&c| if c { 255u8 } else { 0u8 }));
    out
}
