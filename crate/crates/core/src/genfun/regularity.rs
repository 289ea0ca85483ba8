//! The G-infinity test: one growth exponent for all derivatives.

use serde::Serialize;

use super::{derivative, Boundary, GridFn};
use crate::error::{Error, Result};
use crate::fit::line_fit;
use crate::scale::{estimate_valuation, GenNumber, TAIL_FRACTION};

#[derive(Clone, Debug, Serialize)]
pub struct GInftyReport {
    pub regular: bool,
    /// `-min v(alpha)` over the tested multi-indices.
    pub n_witness: f64,
    /// Least-squares slope of `v(alpha)` against `|alpha|`.
    pub slope: f64,
    /// `(alpha, v(alpha))`; infinite valuations (identically zero
    /// derivatives) are listed but left out of the slope.
    pub valuations: Vec<(Vec<usize>, f64)>,
}

fn multi_indices(dim: usize, alpha_max: usize) -> Vec<Vec<usize>> {
    match dim {
        1 => (0..=alpha_max).map(|a| vec![a]).collect(),
        _ => {
            let mut out = Vec::new();
            for total in 0..=alpha_max {
                for a0 in (0..=total).rev() {
                    let a1 = total - a0;
                    if a0 <= 4 && a1 <= 4 {
                        out.push(vec![a0, a1]);
                    }
                }
            }
            out
        }
    }
}

/// Valuations of `sup_region |d^alpha u_eps|` for all `|alpha| <= alpha_max`;
/// regular when they do not fall off with `|alpha|` faster than
/// `slope_tol`.
pub fn is_ginfty(
    u: &GridFn,
    region: &[(f64, f64)],
    alpha_max: usize,
    slope_tol: f64,
) -> Result<GInftyReport> {
    let grid = u.grid();
    if region.len() != grid.dim() {
        return Err(Error::InvalidParam {
            name: "region",
            reason: "dimension differs from grid".into(),
        });
    }
    if grid.dim() == 1 && alpha_max > 4 {
        return Err(Error::InvalidParam {
            name: "alpha_max",
            reason: format!("{alpha_max} exceeds the finite-difference limit 4"),
        });
    }
    let inside: Vec<Vec<usize>> = grid
        .axes()
        .iter()
        .zip(region)
        .map(|(a, &(lo, hi))| {
            (0..a.n)
                .filter(|&i| a.node(i) >= lo && a.node(i) <= hi)
                .collect()
        })
        .collect();
    if region
        .iter()
        .zip(grid.axes())
        .any(|(&(lo, hi), a)| lo < a.min || hi > a.max || lo > hi)
        || inside.iter().any(Vec::is_empty)
    {
        return Err(Error::OutOfDomain("region not inside the grid".into()));
    }
    let mut valuations = Vec::new();
    for alpha in multi_indices(grid.dim(), alpha_max) {
        let mut d = u.clone();
        for (axis, &order) in alpha.iter().enumerate() {
            d = derivative(&d, axis, order, Boundary::OneSided)?;
        }
        let sup: Vec<f64> = d
            .samples()
            .iter()
            .map(|s| {
                let mut m: f64 = 0.0;
                match inside.as_slice() {
                    [xs] => {
                        for &i in xs {
                            m = m.max(s[i].norm());
                        }
                    }
                    [xs, ys] => {
                        let n0 = grid.axis(0).n;
                        for &j in ys {
                            for &i in xs {
                                m = m.max(s[j * n0 + i].norm());
                            }
                        }
                    }
                    _ => unreachable!(),
                }
                m
            })
            .collect();
        let net = GenNumber::from_reals(u.eps(), &sup)?;
        valuations.push((alpha, estimate_valuation(&net, TAIL_FRACTION)?.b_hat));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = valuations
        .iter()
        .filter(|(_, v)| v.is_finite())
        .map(|(a, v)| (a.iter().sum::<usize>() as f64, *v))
        .unzip();
    let slope = line_fit(&xs, &ys).map_or(0.0, |f| f.slope);
    let n_witness = -ys.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(GInftyReport {
        regular: slope >= -slope_tol,
        n_witness: if n_witness.is_finite() {
            n_witness
        } else {
            0.0
        },
        slope,
        valuations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genfun::{embed, DistSpec, SmoothFn};
    use crate::grid::SpatialGrid;
    use crate::mollifier::Mollifier;
    use crate::scale::{EpsGrid, ScaleFn};

    #[test]
    fn smooth_is_regular() {
        let g = SpatialGrid::line(-1.0, 1.0, 513).unwrap();
        let e = EpsGrid::dyadic(4, 19).unwrap();
        let f = DistSpec::Smooth {
            f: SmoothFn::Sine {
                freq: 3.0,
                phase: 0.2,
                amplitude: 1.0,
            },
        };
        let u = embed(&f, &Mollifier::bump(), ScaleFn::Log, &g, &e).unwrap();
        let r = is_ginfty(&u, &[(-0.8, 0.8)], 4, 0.25).unwrap();
        assert!(r.regular);
        assert!(r.slope.abs() < 0.01, "{r:?}");
    }

    #[test]
    fn delta_regularity_depends_on_scale() {
        let m = Mollifier::bump();
        let d = DistSpec::Delta { x0: 0.0 };
        // log scale: valuations ~ -(1+a) * 0.08, slope well above -0.25
        let g = SpatialGrid::line(-1.0, 1.0, 1025).unwrap();
        let e = EpsGrid::dyadic(4, 19).unwrap();
        let u = embed(&d, &m, ScaleFn::Log, &g, &e).unwrap();
        let r = is_ginfty(&u, &[(-0.5, 0.5)], 4, 0.25).unwrap();
        assert!(r.regular, "{r:?}");

        // pow:1: sup |d^a rho^eps| = eps^-(1+a) sup |rho^(a)|
        let g = SpatialGrid::line(-1.0, 1.0, 8193).unwrap();
        let e = EpsGrid::geometric(0.25, 0.5f64.sqrt(), 8).unwrap();
        let u = embed(&d, &m, ScaleFn::Pow(1.0), &g, &e).unwrap();
        let r = is_ginfty(&u, &[(-0.5, 0.5)], 4, 0.25).unwrap();
        assert!(!r.regular);
        for (a, v) in &r.valuations {
            assert!((v + 1.0 + a[0] as f64).abs() < 0.25, "alpha {a:?}: {v}");
        }
    }
}
