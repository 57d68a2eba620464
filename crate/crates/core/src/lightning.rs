//! Lightning strike distributions over the grid.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::grid::GridShape;
use crate::{Error, Result};

/// How a field was built; enough to rebuild it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FieldKind {
    Uniform,
    /// Isotropic Gaussian with variance `N / v` per axis, renormalized over
    /// the grid.
    Gaussian {
        v: f64,
        center: (usize, usize),
    },
    /// Arbitrary user-supplied weights.
    Custom,
}

/// Per-cell strike probability, row-major, summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct LightningField {
    shape: GridShape,
    p: Vec<f64>,
    kind: FieldKind,
}

impl LightningField {
    /// Every cell equally likely.
    pub fn uniform(width: usize, height: usize) -> Self {
        let n = width * height;
        LightningField {
            shape: GridShape::new(width, height),
            p: vec![1.0 / n as f64; n],
            kind: FieldKind::Uniform,
        }
    }

    /// Truncated Gaussian centered on cell `center = (x, y)` with
    /// concentration `v`: the variance before truncation is `N / v`.
    ///
    /// The density is evaluated at integer cell coordinates and the
    /// truncation is a renormalization over the grid.
    pub fn gaussian(width: usize, height: usize, v: f64, center: (usize, usize)) -> Result<Self> {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::Parameter(format!(
                "concentration v must be positive and finite, got {v}"
            )));
        }
        if width == 0 || height == 0 {
            return Err(Error::Config(
                "lightning field needs a non-empty grid".into(),
            ));
        }
        if center.0 >= width || center.1 >= height {
            return Err(Error::Config(format!(
                "center {center:?} outside a {width}x{height} grid"
            )));
        }
        let shape = GridShape::new(width, height);
        let variance = shape.len() as f64 / v;
        let (cx, cy) = (center.0 as f64, center.1 as f64);
        let mut p: Vec<f64> = (0..shape.len())
            .map(|g| {
                let (x, y) = shape.coords(g);
                let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
                (-d2 / (2.0 * variance)).exp()
            })
            .collect();
        let total: f64 = p.iter().sum();
        for q in &mut p {
            *q /= total;
        }
        Ok(LightningField {
            shape,
            p,
            kind: FieldKind::Gaussian { v, center },
        })
    }

    /// Field proportional to non-negative `weights` (row-major).
    pub fn from_weights(width: usize, height: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != width * height || weights.is_empty() {
            return Err(Error::Config(format!(
                "{} weights given for a {width}x{height} grid",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Parameter(
                "weights must be finite and non-negative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::Parameter("weights sum to zero".into()));
        }
        Ok(LightningField {
            shape: GridShape::new(width, height),
            p: weights.into_iter().map(|w| w / total).collect(),
            kind: FieldKind::Custom,
        })
    }

    /// Rebuilds a field of the given kind on a `width`×`height` grid.
    pub fn from_kind(width: usize, height: usize, kind: FieldKind) -> Result<Self> {
        match kind {
            FieldKind::Uniform => Ok(Self::uniform(width, height)),
            FieldKind::Gaussian { v, center } => Self::gaussian(width, height, v, center),
            FieldKind::Custom => Err(Error::Config(
                "custom fields cannot be rebuilt from their kind".into(),
            )),
        }
    }

    /// Same field with the Gaussian center moved to a uniformly drawn cell.
    /// Uniform and custom fields are returned unchanged without consuming
    /// randomness.
    pub fn recenter_random<R: Rng + ?Sized>(&self, rng: &mut R) -> LightningField {
        match self.kind {
            FieldKind::Uniform | FieldKind::Custom => self.clone(),
            FieldKind::Gaussian { v, .. } => {
                let g = rng.gen_range(0..self.shape.len());
                let center = self.shape.coords(g);
                Self::gaussian(self.shape.width, self.shape.height, v, center)
                    .expect("parameters already validated")
            }
        }
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    #[inline]
    pub fn p(&self, g: usize) -> f64 {
        self.p[g]
    }

    pub fn center(&self) -> Option<(usize, usize)> {
        match self.kind {
            FieldKind::Gaussian { center, .. } => Some(center),
            FieldKind::Uniform | FieldKind::Custom => None,
        }
    }

    /// Writes `x,y,p` rows with a header line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x,y,p")?;
        for (g, p) in self.p.iter().enumerate() {
            let (x, y) = self.shape.coords(g);
            writeln!(out, "{x},{y},{p:e}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn sum(f: &LightningField) -> f64 {
        f.probabilities().iter().sum()
    }

    #[test]
    fn rejects_non_positive_concentration() {
        assert!(LightningField::gaussian(4, 4, 0.0, (0, 0)).is_err());
        assert!(LightningField::gaussian(4, 4, -1.0, (0, 0)).is_err());
        assert!(LightningField::gaussian(4, 4, f64::NAN, (0, 0)).is_err());
    }

    #[test]
    fn tiny_concentration_is_nearly_uniform() {
        let f = LightningField::gaussian(32, 32, 0.001, (0, 0)).unwrap();
        let max = f.probabilities().iter().cloned().fold(f64::MIN, f64::max);
        let min = f.probabilities().iter().cloned().fold(f64::MAX, f64::min);
        assert!(max / min < 1.01, "ratio {}", max / min);
    }

    #[test]
    fn normalized_for_every_concentration() {
        for v in [0.1, 1.0, 10.0, 100.0] {
            let f = LightningField::gaussian(32, 32, v, (0, 0)).unwrap();
            assert!((sum(&f) - 1.0).abs() < 1e-12);
            assert!(f.probabilities().iter().all(|&p| p >= 0.0));
        }
    }

    #[test]
    fn unit_concentration_spreads_over_the_grid() {
        let n = 128.0 * 128.0;
        let sigma: f64 = (n / 1.0f64).sqrt();
        assert_eq!(sigma, 128.0);
    }

    #[test]
    fn uniform_field() {
        let f = LightningField::uniform(4, 4);
        assert!(f.probabilities().iter().all(|&p| p == 1.0 / 16.0));
        assert_eq!(sum(&f), 1.0);
    }

    #[test]
    fn radial_monotonicity_and_symmetry() {
        let f = LightningField::gaussian(9, 7, 5.0, (3, 2)).unwrap();
        let shape = f.shape();
        let d2 = |g: usize| {
            let (x, y) = shape.coords(g);
            (x as i64 - 3).pow(2) + (y as i64 - 2).pow(2)
        };
        for a in 0..shape.len() {
            for b in 0..shape.len() {
                if d2(a) == d2(b) {
                    assert_eq!(f.p(a), f.p(b));
                } else if d2(a) < d2(b) {
                    assert!(f.p(a) >= f.p(b));
                }
            }
        }
    }

    #[test]
    fn recenter_single_cell_is_identity() {
        let f = LightningField::gaussian(1, 1, 10.0, (0, 0)).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        assert_eq!(f.recenter_random(&mut rng), f);
    }

    #[test]
    fn recenter_keeps_normalization_and_v() {
        let f = LightningField::gaussian(8, 8, 10.0, (0, 0)).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let g = f.recenter_random(&mut rng);
            assert!((sum(&g) - 1.0).abs() < 1e-12);
            assert!(matches!(g.kind(), FieldKind::Gaussian { v, .. } if v == 10.0));
        }
    }

    #[test]
    fn recenter_draws_centers_uniformly() {
        let f = LightningField::gaussian(8, 8, 10.0, (0, 0)).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let draws = 10_000;
        let mut counts = [0usize; 64];
        for _ in 0..draws {
            let (x, y) = f.recenter_random(&mut rng).center().unwrap();
            counts[y * 8 + x] += 1;
        }
        let p = 1.0 / 64.0;
        let mean = draws as f64 * p;
        let sd = (draws as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - mean).abs() <= 3.0 * sd + 1.0, "count {c}");
        }
    }

    #[test]
    fn uniform_recenter_is_noop() {
        let f = LightningField::uniform(5, 5);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        assert_eq!(f.recenter_random(&mut rng), f);
    }

    #[test]
    fn csv_has_one_row_per_cell() {
        let f = LightningField::uniform(2, 3);
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "x,y,p");
        assert_eq!(lines.len(), 7);
        assert!(lines[6].starts_with("1,2,"));
    }
}
