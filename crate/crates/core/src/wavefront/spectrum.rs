//! Windowed, zero-padded FFTs of one sample array.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::SpatialGrid;

/// Smallest `n >= m` whose prime factors are 2, 3 and 5.
pub(crate) fn smooth_len(m: usize) -> usize {
    let mut n = m.max(1);
    loop {
        let mut r = n;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return n;
        }
        n += 1;
    }
}

/// Cutoff restricted to its support box, with the FFT plans for the padded
/// window.
pub(crate) struct Window {
    /// First node index per axis.
    start: Vec<usize>,
    /// Window node counts per axis.
    size: Vec<usize>,
    /// Padded lengths per axis.
    pub padded: Vec<usize>,
    pub h: Vec<f64>,
    /// Cutoff values over the window, axis 0 fastest.
    weights: Vec<f64>,
    plans: Vec<Arc<dyn Fft<f64>>>,
}

impl Window {
    /// `phi` is the cutoff over the full grid; padding is at least `pad`
    /// times the support size per axis.
    pub fn new(grid: &SpatialGrid, phi: &[f64], pad: usize) -> Result<Self> {
        let dim = grid.dim();
        let mut lo = vec![usize::MAX; dim];
        let mut hi = vec![0usize; dim];
        for (flat, &v) in phi.iter().enumerate() {
            if v > 0.0 {
                for (i, &j) in grid.multi(flat).iter().enumerate() {
                    lo[i] = lo[i].min(j);
                    hi[i] = hi[i].max(j);
                }
            }
        }
        if lo[0] == usize::MAX {
            return Err(Error::Degenerate("cutoff vanishes on the grid".into()));
        }
        let size: Vec<usize> = lo.iter().zip(&hi).map(|(a, b)| b - a + 1).collect();
        let padded: Vec<usize> = size.iter().map(|&m| smooth_len(pad * m)).collect();
        let mut weights = Vec::with_capacity(size.iter().product());
        let n0 = grid.axis(0).n;
        match dim {
            1 => weights.extend_from_slice(&phi[lo[0]..=hi[0]]),
            _ => {
                for j in lo[1]..=hi[1] {
                    weights.extend_from_slice(&phi[j * n0 + lo[0]..=j * n0 + hi[0]]);
                }
            }
        }
        let mut planner = FftPlanner::new();
        let plans = padded
            .iter()
            .map(|&n| planner.plan_fft_forward(n))
            .collect();
        Ok(Window {
            start: lo,
            size,
            padded,
            h: grid.axes().iter().map(|a| a.h()).collect(),
            weights,
            plans,
        })
    }

    /// Angular frequency of padded bin `j` along `axis`.
    pub fn freq(&self, axis: usize, j: usize) -> f64 {
        let n = self.padded[axis];
        let jj = if j < n.div_ceil(2) {
            j as f64
        } else {
            j as f64 - n as f64
        };
        2.0 * std::f64::consts::PI * jj / (n as f64 * self.h[axis])
    }

    /// `|F(phi u)|` on the padded frequency grid, scaled by the cell volume.
    pub fn magnitudes(&self, grid: &SpatialGrid, data: &[Complex64]) -> Vec<f64> {
        let vol: f64 = self.h.iter().product();
        let n0 = grid.axis(0).n;
        let p0 = self.padded[0];
        let total: usize = self.padded.iter().product();
        let mut buf = vec![Complex64::new(0.0, 0.0); total];
        match self.size.len() {
            1 => {
                for i in 0..self.size[0] {
                    buf[i] = data[self.start[0] + i] * self.weights[i];
                }
                self.plans[0].process(&mut buf);
            }
            _ => {
                let (s0, s1) = (self.size[0], self.size[1]);
                for j in 0..s1 {
                    let src = (self.start[1] + j) * n0 + self.start[0];
                    for i in 0..s0 {
                        buf[j * p0 + i] = data[src + i] * self.weights[j * s0 + i];
                    }
                }
                // rows beyond s1 are zero and transform to zero
                self.plans[0].process(&mut buf[..s1 * p0]);
                let p1 = self.padded[1];
                let mut col = vec![Complex64::new(0.0, 0.0); p1];
                let mut scratch =
                    vec![Complex64::new(0.0, 0.0); self.plans[1].get_inplace_scratch_len()];
                for i in 0..p0 {
                    for (j, c) in col.iter_mut().enumerate() {
                        *c = buf[j * p0 + i];
                    }
                    self.plans[1].process_with_scratch(&mut col, &mut scratch);
                    for (j, c) in col.iter().enumerate() {
                        buf[j * p0 + i] = *c;
                    }
                }
            }
        }
        buf.iter().map(|v| v.norm() * vol).collect()
    }
}
