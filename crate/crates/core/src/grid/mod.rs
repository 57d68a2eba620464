//! Grid configurations, player partitions and exact utility evaluation.

mod components;
mod snapshot;
mod utility;

pub use components::{label_components, ComponentLabeling, UnionFind};
pub use snapshot::{parse_text, to_pgm, to_text};
pub use utility::{survival_prob, Game, PlayerView};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Which cells count as adjacent for fire spread.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Neighborhood {
    /// Up, down, left, right.
    #[default]
    #[serde(rename = "4")]
    Four,
    /// The four orthogonal neighbors plus the diagonals.
    #[serde(rename = "8")]
    Eight,
}

impl Neighborhood {
    const ORTHOGONAL: [(i64, i64); 4] = [(0, -1), (-1, 0), (1, 0), (0, 1)];
    const MOORE: [(i64, i64); 8] = [
        (-1, -1),
        (0, -1),
        (1, -1),
        (-1, 0),
        (1, 0),
        (-1, 1),
        (0, 1),
        (1, 1),
    ];

    fn offsets(self) -> &'static [(i64, i64)] {
        match self {
            Neighborhood::Four => &Self::ORTHOGONAL,
            Neighborhood::Eight => &Self::MOORE,
        }
    }

    pub fn degree(self) -> usize {
        self.offsets().len()
    }
}

impl std::str::FromStr for Neighborhood {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "4" => Ok(Neighborhood::Four),
            "8" => Ok(Neighborhood::Eight),
            other => Err(Error::Parameter(format!(
                "neighborhood must be 4 or 8, got `{other}`"
            ))),
        }
    }
}

impl std::fmt::Display for Neighborhood {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Neighborhood::Four => "4",
            Neighborhood::Eight => "8",
        })
    }
}

/// Width and height of a row-major lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridShape {
    pub width: usize,
    pub height: usize,
}

impl GridShape {
    pub fn new(width: usize, height: usize) -> Self {
        GridShape { width, height }
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.width, idx / self.width)
    }

    /// Neighbors of `idx` that lie inside the grid, in a fixed order.
    pub fn neighbors(&self, idx: usize, nb: Neighborhood) -> impl Iterator<Item = usize> + '_ {
        let (x, y) = self.coords(idx);
        let (w, h) = (self.width as i64, self.height as i64);
        nb.offsets().iter().filter_map(move |&(dx, dy)| {
            let nx = x as i64 + dx;
            let ny = y as i64 + dy;
            (nx >= 0 && ny >= 0 && nx < w && ny < h).then(|| self.index(nx as usize, ny as usize))
        })
    }
}

/// Planted/empty state of every cell: the joint strategy profile.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GridConfig {
    shape: GridShape,
    cells: Vec<bool>,
}

impl GridConfig {
    /// All cells empty.
    pub fn empty(width: usize, height: usize) -> Self {
        GridConfig {
            shape: GridShape::new(width, height),
            cells: vec![false; width * height],
        }
    }

    /// All cells planted.
    pub fn full(width: usize, height: usize) -> Self {
        GridConfig {
            shape: GridShape::new(width, height),
            cells: vec![true; width * height],
        }
    }

    pub fn from_cells(width: usize, height: usize, cells: Vec<bool>) -> Result<Self> {
        if cells.len() != width * height {
            return Err(Error::Config(format!(
                "{} cells given for a {width}x{height} grid",
                cells.len()
            )));
        }
        Ok(GridConfig {
            shape: GridShape::new(width, height),
            cells,
        })
    }

    /// Builds a configuration from the bits of `mask`, cell 0 = lowest bit.
    pub fn from_mask(width: usize, height: usize, mask: u64) -> Self {
        let n = width * height;
        assert!(n <= 64, "mask configurations are limited to 64 cells");
        let cells = (0..n).map(|g| (mask >> g) & 1 == 1).collect();
        GridConfig {
            shape: GridShape::new(width, height),
            cells,
        }
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    pub fn width(&self) -> usize {
        self.shape.width
    }

    pub fn height(&self) -> usize {
        self.shape.height
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    #[inline]
    pub fn is_planted(&self, idx: usize) -> bool {
        self.cells[idx]
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.cells[self.shape.index(x, y)]
    }

    pub fn set(&mut self, idx: usize, planted: bool) {
        self.cells[idx] = planted;
    }

    pub fn set_xy(&mut self, x: usize, y: usize, planted: bool) {
        let idx = self.shape.index(x, y);
        self.cells[idx] = planted;
    }

    pub fn planted_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    /// Fraction of planted cells.
    pub fn density(&self) -> f64 {
        if self.cells.is_empty() {
            return 0.0;
        }
        self.planted_count() as f64 / self.cells.len() as f64
    }

    pub(crate) fn check_shape(&self, shape: GridShape, what: &str) -> Result<()> {
        if self.shape != shape {
            return Err(Error::Config(format!(
                "grid is {}x{} but {what} is {}x{}",
                self.shape.width, self.shape.height, shape.width, shape.height
            )));
        }
        Ok(())
    }
}

/// Assignment of cells to players as identical rectangular tiles, numbered
/// row-major. The square power-of-four layout is built by [`Self::square`];
/// [`Self::tiled`] covers degenerate shapes such as a single line of cells.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerPartition {
    shape: GridShape,
    tile_width: usize,
    tile_height: usize,
}

impl PlayerPartition {
    /// Splits an `edge`×`edge` grid into `m` square subgrids.
    pub fn square(edge: usize, m: usize) -> Result<Self> {
        if edge == 0 {
            return Err(Error::Config("grid edge must be positive".into()));
        }
        if !is_power_of_four(m) {
            return Err(Error::Config(format!(
                "player count {m} is not a power of 4"
            )));
        }
        let per_axis = m.isqrt();
        if per_axis > edge || !edge.is_multiple_of(per_axis) {
            return Err(Error::Config(format!(
                "{m} players do not tile a {edge}x{edge} grid into integer subgrids"
            )));
        }
        let side = edge / per_axis;
        Ok(PlayerPartition {
            shape: GridShape::new(edge, edge),
            tile_width: side,
            tile_height: side,
        })
    }

    /// Splits a `width`×`height` grid into tiles of `tile_width`×`tile_height`.
    pub fn tiled(
        width: usize,
        height: usize,
        tile_width: usize,
        tile_height: usize,
    ) -> Result<Self> {
        if tile_width == 0
            || tile_height == 0
            || !width.is_multiple_of(tile_width)
            || !height.is_multiple_of(tile_height)
        {
            return Err(Error::Config(format!(
                "{tile_width}x{tile_height} tiles do not divide a {width}x{height} grid"
            )));
        }
        Ok(PlayerPartition {
            shape: GridShape::new(width, height),
            tile_width,
            tile_height,
        })
    }

    /// One player owning every cell.
    pub fn single(width: usize, height: usize) -> Self {
        PlayerPartition {
            shape: GridShape::new(width, height),
            tile_width: width,
            tile_height: height,
        }
    }

    /// One player per cell.
    pub fn per_cell(width: usize, height: usize) -> Self {
        PlayerPartition {
            shape: GridShape::new(width, height),
            tile_width: 1,
            tile_height: 1,
        }
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    fn tiles_x(&self) -> usize {
        self.shape.width / self.tile_width
    }

    pub fn player_count(&self) -> usize {
        self.tiles_x() * (self.shape.height / self.tile_height)
    }

    /// Edge length of a square subgrid (the tile width for rectangular tiles).
    pub fn side(&self) -> usize {
        self.tile_width
    }

    pub fn cells_per_player(&self) -> usize {
        self.tile_width * self.tile_height
    }

    pub fn owner(&self, idx: usize) -> usize {
        let (x, y) = self.shape.coords(idx);
        (y / self.tile_height) * self.tiles_x() + x / self.tile_width
    }

    /// Position of cell `g` within player `i`'s row-major cell list.
    pub fn local_index(&self, i: usize, g: usize) -> Option<usize> {
        let (x, y) = self.shape.coords(g);
        let x0 = (i % self.tiles_x()) * self.tile_width;
        let y0 = (i / self.tiles_x()) * self.tile_height;
        let inside = x >= x0 && x < x0 + self.tile_width && y >= y0 && y < y0 + self.tile_height;
        inside.then(|| (y - y0) * self.tile_width + (x - x0))
    }

    /// Cells of player `i`, row-major within the subgrid.
    pub fn cells_of(&self, i: usize) -> Vec<usize> {
        let x0 = (i % self.tiles_x()) * self.tile_width;
        let y0 = (i / self.tiles_x()) * self.tile_height;
        let mut out = Vec::with_capacity(self.cells_per_player());
        for y in y0..y0 + self.tile_height {
            for x in x0..x0 + self.tile_width {
                out.push(self.shape.index(x, y));
            }
        }
        out
    }
}

pub fn is_power_of_four(m: usize) -> bool {
    m.is_power_of_two() && m.trailing_zeros().is_multiple_of(2)
}
