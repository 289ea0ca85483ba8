//! Uniform tensor grids in one or two dimensions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible node count per axis.
pub const MIN_NODES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, n: usize) -> Result<Self> {
        let a = Axis { min, max, n };
        a.validate()?;
        Ok(a)
    }

    fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return Err(Error::InvalidSpatialGrid(format!(
                "need finite min < max, got [{}, {}]",
                self.min, self.max
            )));
        }
        if self.n < MIN_NODES {
            return Err(Error::InvalidSpatialGrid(format!(
                "{} nodes, need at least {MIN_NODES}",
                self.n
            )));
        }
        Ok(())
    }

    pub fn h(&self) -> f64 {
        (self.max - self.min) / (self.n - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.max
        } else {
            self.min + i as f64 * self.h()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    pub fn length(&self) -> f64 {
        self.max - self.min
    }

    /// Fractional node index of `x`, `None` outside the axis.
    pub fn locate(&self, x: f64) -> Option<f64> {
        if x < self.min || x > self.max || !x.is_finite() {
            None
        } else {
            Some((x - self.min) / self.h())
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.min && x <= self.max
    }

    /// Nearest node index, clamped.
    pub fn nearest(&self, x: f64) -> usize {
        let s = ((x - self.min) / self.h()).round();
        s.clamp(0.0, (self.n - 1) as f64) as usize
    }
}

/// Tensor grid; axis 0 varies fastest in flat storage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Axis>", into = "Vec<Axis>")]
pub struct SpatialGrid {
    axes: Vec<Axis>,
}

impl SpatialGrid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::InvalidSpatialGrid(format!(
                "dimension {} not supported (1 or 2)",
                axes.len()
            )));
        }
        for a in &axes {
            a.validate()?;
        }
        Ok(Self { axes })
    }

    pub fn line(min: f64, max: f64, n: usize) -> Result<Self> {
        Self::new(vec![Axis::new(min, max, n)?])
    }

    pub fn plane(x: Axis, y: Axis) -> Result<Self> {
        Self::new(vec![x, y])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, i: usize) -> &Axis {
        &self.axes[i]
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.n).collect()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.n).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Stride of axis `i` in flat storage.
    pub fn stride(&self, i: usize) -> usize {
        self.axes[..i].iter().map(|a| a.n).product()
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter()
            .enumerate()
            .map(|(i, &j)| j * self.stride(i))
            .sum()
    }

    pub fn multi(&self, mut flat: usize) -> Vec<usize> {
        self.axes
            .iter()
            .map(|a| {
                let j = flat % a.n;
                flat /= a.n;
                j
            })
            .collect()
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi(flat)
            .iter()
            .zip(&self.axes)
            .map(|(&j, a)| a.node(j))
            .collect()
    }

    pub fn h_min(&self) -> f64 {
        self.axes.iter().map(Axis::h).fold(f64::INFINITY, f64::min)
    }

    pub fn h_max(&self) -> f64 {
        self.axes.iter().map(Axis::h).fold(0.0, f64::max)
    }

    /// Volume element `prod h_i`.
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(Axis::h).product()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim() && p.iter().zip(&self.axes).all(|(&x, a)| a.contains(x))
    }

    /// Calls `f(flat, point)` for every node in storage order.
    pub fn for_each_node(&self, mut f: impl FnMut(usize, &[f64])) {
        let mut p = vec![0.0; self.dim()];
        for flat in 0..self.len() {
            let mut rem = flat;
            for (i, a) in self.axes.iter().enumerate() {
                p[i] = a.node(rem % a.n);
                rem /= a.n;
            }
            f(flat, &p);
        }
    }
}

impl TryFrom<Vec<Axis>> for SpatialGrid {
    type Error = Error;
    fn try_from(a: Vec<Axis>) -> Result<Self> {
        Self::new(a)
    }
}

impl From<SpatialGrid> for Vec<Axis> {
    fn from(g: SpatialGrid) -> Self {
        g.axes
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_and_nodes() {
        let a = Axis::new(-1.0, 1.0, 65).unwrap();
        assert_eq!(a.h(), 2.0 / 64.0);
        assert_eq!(a.node(0), -1.0);
        assert_eq!(a.node(64), 1.0);
        assert_eq!(a.node(32), 0.0);
        assert_eq!(a.nearest(0.01), 32);
        assert!(Axis::new(1.0, 0.0, 100).is_err());
        assert!(Axis::new(0.0, 1.0, 10).is_err());
    }

    #[test]
    fn flat_indexing_roundtrip() {
        let g = SpatialGrid::plane(
            Axis::new(0.0, 1.0, 64).unwrap(),
            Axis::new(0.0, 2.0, 70).unwrap(),
        )
        .unwrap();
        assert_eq!(g.len(), 64 * 70);
        for flat in [0, 1, 63, 64, 1000, 64 * 70 - 1] {
            assert_eq!(g.flat(&g.multi(flat)), flat);
        }
        let mut count = 0;
        g.for_each_node(|flat, p| {
            assert_eq!(p, g.point(flat).as_slice());
            count += 1;
        });
        assert_eq!(count, g.len());
    }
}
