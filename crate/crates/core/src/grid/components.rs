use super::{GridConfig, Neighborhood};
use crate::lightning::LightningField;
use crate::Result;

/// Disjoint-set forest with union by size and path halving.
#[derive(Debug, Clone, Default)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        let mut uf = UnionFind::default();
        uf.reset(n);
        uf
    }

    /// Reinitializes to `n` singletons, reusing the allocation.
    pub fn reset(&mut self, n: usize) {
        self.parent.clear();
        self.parent.extend(0..n as u32);
        self.size.clear();
        self.size.resize(n, 1);
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    #[inline]
    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let grand = self.parent[self.parent[x] as usize];
            self.parent[x] = grand;
            x = grand as usize;
        }
        x
    }

    /// Merges the sets of `a` and `b`; returns `(root, absorbed)` when they
    /// were distinct.
    #[inline]
    pub fn union(&mut self, a: usize, b: usize) -> Option<(usize, usize)> {
        let mut ra = self.find(a);
        let mut rb = self.find(b);
        if ra == rb {
            return None;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra as u32;
        self.size[ra] += self.size[rb];
        Some((ra, rb))
    }

    pub fn set_size(&mut self, x: usize) -> usize {
        let r = self.find(x);
        self.size[r] as usize
    }
}

const UNLABELED: u32 = u32::MAX;

/// Connected components of the planted cells together with their size and
/// lightning mass.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentLabeling {
    labels: Vec<u32>,
    sizes: Vec<usize>,
    masses: Vec<f64>,
}

impl ComponentLabeling {
    pub fn component_count(&self) -> usize {
        self.sizes.len()
    }

    /// Component of cell `g`, `None` for empty cells. Components are
    /// numbered in order of their first cell in a row-major scan.
    #[inline]
    pub fn component_of(&self, g: usize) -> Option<usize> {
        match self.labels[g] {
            UNLABELED => None,
            l => Some(l as usize),
        }
    }

    pub fn size(&self, comp: usize) -> usize {
        self.sizes[comp]
    }

    pub fn mass(&self, comp: usize) -> f64 {
        self.masses[comp]
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn cell_count(&self) -> usize {
        self.labels.len()
    }
}

/// Labels the connected components of planted cells under `nb` adjacency.
pub fn label_components(
    config: &GridConfig,
    field: &LightningField,
    nb: Neighborhood,
) -> Result<ComponentLabeling> {
    config.check_shape(field.shape(), "the lightning field")?;
    let shape = config.shape();
    let n = shape.len();
    let mut uf = UnionFind::new(n);
    for g in 0..n {
        if !config.is_planted(g) {
            continue;
        }
        for h in shape.neighbors(g, nb) {
            // each undirected edge once
            if h < g && config.is_planted(h) {
                uf.union(g, h);
            }
        }
    }

    let mut root_label = vec![UNLABELED; n];
    let mut labels = vec![UNLABELED; n];
    let mut sizes = Vec::new();
    let mut masses = Vec::new();
    let p = field.probabilities();
    for g in 0..n {
        if !config.is_planted(g) {
            continue;
        }
        let r = uf.find(g);
        if root_label[r] == UNLABELED {
            root_label[r] = sizes.len() as u32;
            sizes.push(0);
            masses.push(0.0);
        }
        let l = root_label[r];
        labels[g] = l;
        sizes[l as usize] += 1;
        masses[l as usize] += p[g];
    }
    Ok(ComponentLabeling {
        labels,
        sizes,
        masses,
    })
}
