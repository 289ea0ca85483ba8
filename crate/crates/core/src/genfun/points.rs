//! Generalized points, point values, integral kernels and the delta kernel.

use std::collections::BTreeSet;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_resolvable, GridFn};
use crate::error::{Error, Result};
use crate::grid::{Axis, SpatialGrid};
use crate::mollifier::Mollifier;
use crate::scale::{EpsGrid, GenNumber, ScaleFn};

/// A point of R^d per epsilon.
#[derive(Clone, Debug, PartialEq)]
pub struct GenPoint {
    eps: EpsGrid,
    coords: Vec<Vec<f64>>,
    bounding_box: Option<Vec<(f64, f64)>>,
}

impl GenPoint {
    /// `bounding_box`, when given, declares the net compact and is checked.
    pub fn new(
        eps: EpsGrid,
        coords: Vec<Vec<f64>>,
        bounding_box: Option<Vec<(f64, f64)>>,
    ) -> Result<Self> {
        if coords.len() != eps.len() {
            return Err(Error::GridMismatch(format!(
                "{} coordinates for {} epsilons",
                coords.len(),
                eps.len()
            )));
        }
        let dim = coords.first().map_or(0, Vec::len);
        if dim == 0 || coords.iter().any(|c| c.len() != dim) {
            return Err(Error::InvalidParam {
                name: "coords",
                reason: "inconsistent or zero dimension".into(),
            });
        }
        for (k, c) in coords.iter().enumerate() {
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(k));
            }
            if let Some(b) = &bounding_box {
                if b.len() != dim || c.iter().zip(b).any(|(&x, &(lo, hi))| x < lo || x > hi) {
                    return Err(Error::OutOfDomain(format!(
                        "coordinate {k} leaves the declared bounding box"
                    )));
                }
            }
        }
        Ok(Self {
            eps,
            coords,
            bounding_box,
        })
    }

    pub fn from_fn(eps: &EpsGrid, f: impl Fn(f64) -> Vec<f64>) -> Result<Self> {
        Self::new(
            eps.clone(),
            eps.values().iter().map(|&e| f(e)).collect(),
            None,
        )
    }

    pub fn constant(eps: &EpsGrid, p: &[f64]) -> Result<Self> {
        let b = p.iter().map(|&x| (x, x)).collect();
        Self::new(eps.clone(), vec![p.to_vec(); eps.len()], Some(b))
    }

    pub fn with_box(self, b: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(self.eps, self.coords, Some(b))
    }

    pub fn eps(&self) -> &EpsGrid {
        &self.eps
    }

    pub fn coords(&self) -> &[Vec<f64>] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords[0].len()
    }

    pub fn is_compact(&self) -> bool {
        self.bounding_box.is_some()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interp {
    Linear,
    #[default]
    Cubic,
}

/// Lagrange weights for one axis: first node index and weights.
fn axis_weights(a: &Axis, x: f64, interp: Interp) -> Option<(usize, Vec<f64>)> {
    let s = a.locate(x)?;
    let width = match interp {
        Interp::Linear => 2,
        Interp::Cubic => 4,
    };
    let j = s.floor() as isize - (width as isize / 2 - 1);
    let start = j.clamp(0, (a.n - width) as isize) as usize;
    let t = s - start as f64;
    let w = (0..width)
        .map(|i| {
            (0..width)
                .filter(|&m| m != i)
                .map(|m| (t - m as f64) / (i as f64 - m as f64))
                .product()
        })
        .collect();
    Some((start, w))
}

fn interpolate(
    grid: &SpatialGrid,
    data: &[Complex64],
    p: &[f64],
    interp: Interp,
) -> Option<Complex64> {
    let per_axis: Option<Vec<(usize, Vec<f64>)>> = grid
        .axes()
        .iter()
        .zip(p)
        .map(|(a, &x)| axis_weights(a, x, interp))
        .collect();
    let per_axis = per_axis?;
    let mut acc = Complex64::new(0.0, 0.0);
    match per_axis.as_slice() {
        [(s0, w0)] => {
            for (i, &w) in w0.iter().enumerate() {
                acc += data[s0 + i] * w;
            }
        }
        [(s0, w0), (s1, w1)] => {
            let n0 = grid.axis(0).n;
            for (j, &wy) in w1.iter().enumerate() {
                for (i, &wx) in w0.iter().enumerate() {
                    acc += data[(s1 + j) * n0 + s0 + i] * (wx * wy);
                }
            }
        }
        _ => return None,
    }
    Some(acc)
}

/// `u_eps(x_eps)` by interpolation.
pub fn point_value(u: &GridFn, p: &GenPoint, interp: Interp) -> Result<GenNumber> {
    if !u.eps().same_as(p.eps()) {
        return Err(Error::GridMismatch(
            "point and function use different epsilons".into(),
        ));
    }
    if p.dim() != u.grid().dim() {
        return Err(Error::GridMismatch(
            "point dimension differs from grid".into(),
        ));
    }
    let values = p
        .coords()
        .iter()
        .enumerate()
        .map(|(k, c)| {
            interpolate(u.grid(), u.sample(k), c, interp).ok_or_else(|| {
                Error::OutOfDomain(format!("point {c:?} at eps[{k}] is off the grid"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    GenNumber::new(u.eps().clone(), values)
}

/// Cells of a uniform partition of `domain_box` (cell index per axis) hit by
/// the point net over the tail half of the epsilon grid.
pub fn support_of_point(
    p: &GenPoint,
    domain_box: &[(f64, f64)],
    cell_size: f64,
) -> Result<BTreeSet<Vec<usize>>> {
    if domain_box.len() != p.dim() || !(cell_size > 0.0) {
        return Err(Error::InvalidParam {
            name: "domain_box",
            reason: "dimension mismatch or nonpositive cell size".into(),
        });
    }
    if domain_box.iter().any(|(lo, hi)| !(lo < hi)) {
        return Err(Error::InvalidParam {
            name: "domain_box",
            reason: "empty interval".into(),
        });
    }
    let mut out = BTreeSet::new();
    for c in &p.coords()[p.eps().tail(0.5)] {
        let cell: Option<Vec<usize>> = c
            .iter()
            .zip(domain_box)
            .map(|(&x, &(lo, hi))| {
                if x < lo || x > hi {
                    return None;
                }
                let ncell = ((hi - lo) / cell_size).ceil().max(1.0) as usize;
                Some((((x - lo) / cell_size).floor() as usize).min(ncell - 1))
            })
            .collect();
        if let Some(cell) = cell {
            out.insert(cell);
        }
    }
    Ok(out)
}

fn trapezoid_weights(a: &Axis) -> Vec<f64> {
    let h = a.h();
    (0..a.n)
        .map(|i| if i == 0 || i + 1 == a.n { 0.5 * h } else { h })
        .collect()
}

/// Per-epsilon trapezoid quadrature of `int k_eps u_eps`.
pub fn kernel_pairing(k: &GridFn, u: &GridFn) -> Result<GenNumber> {
    if k.grid() != u.grid() || !k.eps().same_as(u.eps()) {
        return Err(Error::GridMismatch(
            "kernel and function grids differ".into(),
        ));
    }
    let grid = k.grid();
    let w: Vec<Vec<f64>> = grid.axes().iter().map(trapezoid_weights).collect();
    let n0 = grid.axis(0).n;
    let values = k
        .samples()
        .par_iter()
        .zip(u.samples())
        .map(|(ks, us)| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (flat, (&a, &b)) in ks.iter().zip(us).enumerate() {
                let mut wt = w[0][flat % n0];
                if w.len() == 2 {
                    wt *= w[1][flat / n0];
                }
                acc += a * b * wt;
            }
            acc
        })
        .collect();
    GenNumber::new(k.eps().clone(), values)
}

/// `v_eps(y) = rho^eps(x_eps - y)`, the kernel representing evaluation at a
/// generalized point.
pub fn delta_kernel(
    p: &GenPoint,
    mollifier: &Mollifier,
    scale: ScaleFn,
    grid: &SpatialGrid,
) -> Result<GridFn> {
    if p.dim() != grid.dim() {
        return Err(Error::GridMismatch(
            "point dimension differs from grid".into(),
        ));
    }
    let gammas = scale.gammas(p.eps())?;
    check_resolvable(p.eps(), &gammas, grid.h_max())?;
    GridFn::from_real_fn(grid, p.eps(), |k, _, y| {
        let g = gammas[k];
        p.coords()[k]
            .iter()
            .zip(y)
            .map(|(&x, &yy)| mollifier.scaled(g, x - yy))
            .product()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genfun::{embed, DistSpec, SmoothFn};
    use crate::scale::estimate_valuation;

    fn eps() -> EpsGrid {
        EpsGrid::dyadic(4, 24).unwrap()
    }

    #[test]
    fn point_values() {
        let g = SpatialGrid::line(-1.0, 1.0, 1001).unwrap();
        let e = eps();
        let u = GridFn::from_real_fn(&g, &e, |_, _, x| x[0]).unwrap();
        let p = GenPoint::from_fn(&e, |eps| vec![eps]).unwrap();
        let v = point_value(&u, &p, Interp::Cubic).unwrap();
        assert!((estimate_valuation(&v, 0.5).unwrap().b_hat - 1.0).abs() < 1e-6);

        let m = Mollifier::bump();
        let d = embed(&DistSpec::Delta { x0: 0.0 }, &m, ScaleFn::Log, &g, &e).unwrap();
        let v = point_value(&d, &GenPoint::constant(&e, &[0.0]).unwrap(), Interp::Cubic).unwrap();
        for (k, val) in v.values().iter().enumerate() {
            let oracle = -e.get(k).ln() * m.eval(0.0);
            assert!((val.re - oracle).abs() < 1e-12 * oracle);
        }
        let off = GenPoint::constant(&e, &[1.5]).unwrap();
        assert!(matches!(
            point_value(&d, &off, Interp::Cubic),
            Err(Error::OutOfDomain(_))
        ));
    }

    #[test]
    fn supports() {
        let e = eps();
        let h = 2.0 / 1023.0;
        let bx = [(-1.0, 1.0)];
        let p = GenPoint::from_fn(&e, |eps| vec![eps]).unwrap();
        let s = support_of_point(&p, &bx, 2.0 * h).unwrap();
        assert_eq!(s.len(), 1);
        let cell = s.iter().next().unwrap()[0];
        assert!(-1.0 + cell as f64 * 2.0 * h <= 0.0 && 0.0 < -1.0 + (cell + 1) as f64 * 2.0 * h);

        let alt = GenPoint::new(
            e.clone(),
            (0..e.len())
                .map(|k| vec![if k % 2 == 0 { 0.0 } else { 1.0 }])
                .collect(),
            None,
        )
        .unwrap();
        assert_eq!(support_of_point(&alt, &bx, 2.0 * h).unwrap().len(), 2);

        let far = GenPoint::from_fn(&e, |eps| vec![1.0 / eps]).unwrap();
        assert!(support_of_point(&far, &[(-10.0, 10.0)], 0.1)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn pairings() {
        let g = SpatialGrid::line(-1.0, 1.0, 1001).unwrap();
        let e = EpsGrid::dyadic(4, 14).unwrap();
        let m = Mollifier::bump();
        let one = GridFn::from_real_fn(&g, &e, |_, _, _| 1.0).unwrap();
        let d = embed(&DistSpec::Delta { x0: 0.0 }, &m, ScaleFn::Log, &g, &e).unwrap();
        let p = kernel_pairing(&one, &d).unwrap();
        assert!(p.values().iter().all(|v| (v.re - 1.0).abs() < 1e-8));

        let g01 = SpatialGrid::line(0.0, 1.0, 101).unwrap();
        let ke = GridFn::from_real_fn(&g01, &e, |_, eps, _| eps).unwrap();
        let u1 = GridFn::from_real_fn(&g01, &e, |_, _, _| 1.0).unwrap();
        let p = kernel_pairing(&ke, &u1).unwrap();
        assert!((estimate_valuation(&p, 0.5).unwrap().b_hat - 1.0).abs() < 1e-9);
    }

    #[test]
    fn delta_kernel_reproduces_point_values() {
        let g = SpatialGrid::line(-1.0, 1.0, 2001).unwrap();
        let e = EpsGrid::dyadic(4, 14).unwrap();
        let m = Mollifier::bump();
        let f = SmoothFn::Gaussian {
            center: 0.1,
            width: 0.4,
            amplitude: 1.0,
        };
        let x = |eps: f64| 0.2 + 0.1 * eps;
        let p = GenPoint::from_fn(&e, |eps| vec![x(eps)]).unwrap();
        let v = delta_kernel(&p, &m, ScaleFn::Log, &g).unwrap();
        let u = GridFn::from_real_fn(&g, &e, |_, _, y| f.eval(y[0])).unwrap();
        let pair = kernel_pairing(&v, &u).unwrap();
        for k in 0..e.len() {
            let gam = -e.get(k).ln();
            let err = (pair.values()[k].re - f.eval(x(e.get(k)))).abs();
            // second moment of rho times sup|f''| / 2
            assert!(err <= 0.2 * 6.25 / (gam * gam), "k={k} err={err}");
        }
        let c = GenPoint::constant(&e, &[0.0]).unwrap();
        let v = delta_kernel(&c, &m, ScaleFn::Log, &g).unwrap();
        let one = GridFn::from_real_fn(&g, &e, |_, _, _| 1.0).unwrap();
        let pair = kernel_pairing(&v, &one).unwrap();
        assert!(pair.values().iter().all(|z| (z.re - 1.0).abs() < 1e-10));
    }
}
