//! Grid-sampled generalized functions: one array per epsilon over a fixed
//! spatial grid.

mod dist;
mod points;
mod regularity;
pub mod stencil;

use num_complex::Complex64;
use rayon::prelude::*;

pub(crate) use dist::check_resolvable;
pub use dist::{embed, DistSpec, Orientation, SmoothFn, Term};
pub use points::{delta_kernel, kernel_pairing, point_value, support_of_point, GenPoint, Interp};
pub use regularity::{is_ginfty, GInftyReport};
pub use stencil::Boundary;

use crate::error::{Error, Result};
use crate::grid::SpatialGrid;
use crate::scale::EpsGrid;

#[derive(Clone, Debug, PartialEq)]
pub struct GridFn {
    grid: SpatialGrid,
    eps: EpsGrid,
    samples: Vec<Vec<Complex64>>,
}

impl GridFn {
    pub fn new(grid: SpatialGrid, eps: EpsGrid, samples: Vec<Vec<Complex64>>) -> Result<Self> {
        if samples.len() != eps.len() {
            return Err(Error::GridMismatch(format!(
                "{} sample arrays for {} epsilons",
                samples.len(),
                eps.len()
            )));
        }
        for (k, s) in samples.iter().enumerate() {
            if s.len() != grid.len() {
                return Err(Error::GridMismatch(format!(
                    "sample array {k} has {} values for {} nodes",
                    s.len(),
                    grid.len()
                )));
            }
            if let Some(i) = s.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(i));
            }
        }
        Ok(Self { grid, eps, samples })
    }

    /// Builds samples from `f(k, eps_k, x)`, in parallel over epsilons.
    pub fn from_fn<F>(grid: &SpatialGrid, eps: &EpsGrid, f: F) -> Result<Self>
    where
        F: Fn(usize, f64, &[f64]) -> Complex64 + Sync,
    {
        let samples = (0..eps.len())
            .into_par_iter()
            .map(|k| {
                let mut out = Vec::with_capacity(grid.len());
                grid.for_each_node(|_, p| out.push(f(k, eps.get(k), p)));
                out
            })
            .collect();
        Self::new(grid.clone(), eps.clone(), samples)
    }

    pub fn from_real_fn<F>(grid: &SpatialGrid, eps: &EpsGrid, f: F) -> Result<Self>
    where
        F: Fn(usize, f64, &[f64]) -> f64 + Sync,
    {
        Self::from_fn(grid, eps, |k, e, p| Complex64::new(f(k, e, p), 0.0))
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn eps(&self) -> &EpsGrid {
        &self.eps
    }

    pub fn samples(&self) -> &[Vec<Complex64>] {
        &self.samples
    }

    pub fn sample(&self, k: usize) -> &[Complex64] {
        &self.samples[k]
    }

    pub fn into_samples(self) -> Vec<Vec<Complex64>> {
        self.samples
    }

    fn check_compatible(&self, other: &GridFn) -> Result<()> {
        if self.grid != other.grid || !self.eps.same_as(&other.eps) {
            return Err(Error::GridMismatch(
                "generalized functions on different grids".into(),
            ));
        }
        Ok(())
    }

    pub fn zip_with(
        &self,
        other: &GridFn,
        f: impl Fn(Complex64, Complex64) -> Complex64 + Sync,
    ) -> Result<GridFn> {
        self.check_compatible(other)?;
        let samples = self
            .samples
            .par_iter()
            .zip(&other.samples)
            .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect())
            .collect();
        GridFn::new(self.grid.clone(), self.eps.clone(), samples)
    }

    pub fn mul(&self, other: &GridFn) -> Result<GridFn> {
        self.zip_with(other, |a, b| a * b)
    }

    /// `a u + b v`
    pub fn lincomb(&self, a: Complex64, other: &GridFn, b: Complex64) -> Result<GridFn> {
        self.zip_with(other, |x, y| a * x + b * y)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64 + Sync) -> Result<GridFn> {
        let samples = self
            .samples
            .par_iter()
            .map(|s| s.iter().map(|&v| f(v)).collect())
            .collect();
        GridFn::new(self.grid.clone(), self.eps.clone(), samples)
    }

    /// Keeps only the epsilons with the given indices.
    pub fn select(&self, idx: &[usize]) -> Result<GridFn> {
        let eps = EpsGrid::new(idx.iter().map(|&k| self.eps.get(k)).collect())?;
        let samples = idx.iter().map(|&k| self.samples[k].clone()).collect();
        GridFn::new(self.grid.clone(), eps, samples)
    }
}

/// Per-epsilon finite-difference derivative of order `order <= 4` along one
/// axis, second-order accurate.
pub fn derivative(u: &GridFn, axis: usize, order: usize, boundary: Boundary) -> Result<GridFn> {
    if order > stencil::MAX_ORDER {
        return Err(Error::InvalidParam {
            name: "order",
            reason: format!("{order} exceeds {}", stencil::MAX_ORDER),
        });
    }
    if axis >= u.grid.dim() {
        return Err(Error::InvalidParam {
            name: "axis",
            reason: format!("{axis} on a {}-dimensional grid", u.grid.dim()),
        });
    }
    if order == 0 {
        return Ok(u.clone());
    }
    let a = u.grid.axis(axis);
    let stride = u.grid.stride(axis);
    let samples = u
        .samples
        .iter()
        .map(|s| stencil::apply_axis(s, a.n, stride, a.h(), order, boundary))
        .collect();
    GridFn::new(u.grid.clone(), u.eps.clone(), samples)
}
