//! Propagation of singularities along the Hamilton flow for smooth,
//! eps-independent coefficients.

use serde::{Deserialize, Serialize};

use super::{solve_slices, CauchySpec, Sampling};
use crate::bichar::{hamilton_flow, CoeffField};
use crate::error::{invalid, Result};
use crate::genfun::{embed, DistSpec, GridFn};
use crate::grid::{Axis, SpatialGrid};
use crate::mollifier::Mollifier;
use crate::scale::{EpsGrid, ScaleFn};
use crate::wavefront::{wf_scan, WfParams, WfReport};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagationSetup {
    pub x_axis: Axis,
    pub eps: EpsGrid,
    pub scale: ScaleFn,
    #[serde(default)]
    pub mollifier: Mollifier,
    pub wf: WfParams,
    /// Base points every `base_stride` nodes.
    #[serde(default = "one")]
    pub base_stride: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
}

fn one() -> usize {
    1
}

fn default_dt() -> f64 {
    1e-3
}

/// Contiguous run of singular base points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WfCluster {
    pub center: f64,
    pub lo: f64,
    pub hi: f64,
    /// Signs of the singular directions at the base point nearest the
    /// centre.
    pub directions: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagationSlice {
    pub t: f64,
    /// Flow images `(x, xi)` of the singular pairs of the initial datum.
    pub flow_points: Vec<(f64, f64)>,
    pub wf: Vec<WfCluster>,
    /// Every flow point has a cluster centre within 2 cells and vice versa.
    pub base_match: bool,
    /// Direction signs agree at matched points.
    pub direction_match: bool,
    pub max_offset_cells: f64,
}

fn clusters(r: &WfReport) -> Vec<WfCluster> {
    let nd = r.directions.len();
    let sing: Vec<bool> = (0..r.base_points.len())
        .map(|b| (0..nd).any(|d| r.entry(b, d).singular == Some(true)))
        .collect();
    let mut out = Vec::new();
    let mut b = 0;
    while b < sing.len() {
        if !sing[b] {
            b += 1;
            continue;
        }
        let start = b;
        while b < sing.len() && sing[b] {
            b += 1;
        }
        let (lo, hi) = (r.base_points[start][0], r.base_points[b - 1][0]);
        let center = 0.5 * (lo + hi);
        let near = (start..b)
            .min_by(|&i, &j| {
                (r.base_points[i][0] - center)
                    .abs()
                    .total_cmp(&(r.base_points[j][0] - center).abs())
            })
            .unwrap_or(start);
        let directions = (0..nd)
            .filter(|&d| r.entry(near, d).singular == Some(true))
            .map(|d| r.directions[d][0].signum())
            .collect();
        out.push(WfCluster {
            center,
            lo,
            hi,
            directions,
        });
    }
    out
}

fn scan(u: &GridFn, setup: &PropagationSetup) -> Result<Vec<WfCluster>> {
    let a = &setup.x_axis;
    let base: Vec<Vec<f64>> = (0..a.n)
        .step_by(setup.base_stride.max(1))
        .map(|i| a.node(i))
        .filter(|&x| x - setup.wf.r >= a.min && x + setup.wf.r <= a.max)
        .map(|x| vec![x])
        .collect();
    let r = wf_scan(u, &base, &[vec![1.0], vec![-1.0]], &setup.wf)?;
    Ok(clusters(&r))
}

/// Solves the Cauchy problem, scans time slices and compares with the
/// flow-out of the initial datum's singular pairs.
pub fn smooth_propagation_case(
    coeff: &CoeffField,
    g: &DistSpec,
    t_list: &[f64],
    setup: &PropagationSetup,
) -> Result<Vec<PropagationSlice>> {
    if matches!(
        coeff,
        CoeffField::Theta(_) | CoeffField::Linear | CoeffField::Affine { .. }
    ) {
        return Err(invalid(
            "coeff",
            "needs a smooth coefficient, constant for large |x|",
        ));
    }
    let line = SpatialGrid::new(vec![setup.x_axis])?;
    let g0 = embed(g, &setup.mollifier, setup.scale, &line, &setup.eps)?;
    let initial = scan(&g0, setup)?;
    let pairs: Vec<(f64, f64)> = initial
        .iter()
        .flat_map(|c| c.directions.iter().map(move |&d| (c.center, d)))
        .collect();
    let t_max = t_list.iter().copied().fold(0.0, f64::max).max(1e-3);
    let spec = CauchySpec {
        coeff: coeff.clone(),
        initial: g.clone(),
        mollifier: setup.mollifier.clone(),
        scale: setup.scale,
        grid: SpatialGrid::plane(setup.x_axis, Axis::new(0.0, t_max, 64)?)?,
        eps: setup.eps.clone(),
        sampling: Sampling::CellAverage,
        max_step: Some(setup.dt),
    };
    let slices = solve_slices(&spec, t_list)?;
    let h = setup.x_axis.h();
    let smallest = EpsGrid::new(vec![setup.eps.get(setup.eps.len() - 1)])?;
    let mut out = Vec::with_capacity(t_list.len());
    for (&t, u) in t_list.iter().zip(&slices) {
        let flow: Vec<(f64, f64)> = hamilton_flow(coeff, &smallest, t, &pairs, setup.dt)?
            .remove(0)
            .into_iter()
            .flatten()
            .collect();
        let wf = scan(u, setup)?;
        let mut base_match = true;
        let mut direction_match = true;
        let mut worst: f64 = 0.0;
        for &(x, xi) in &flow {
            match wf
                .iter()
                .min_by(|a, b| (a.center - x).abs().total_cmp(&(b.center - x).abs()))
            {
                Some(c) => {
                    let off = (c.center - x).abs() / h;
                    worst = worst.max(off);
                    base_match &= off <= 2.0;
                    direction_match &= c.directions.contains(&xi.signum());
                }
                None => {
                    base_match = false;
                    direction_match = false;
                }
            }
        }
        for c in &wf {
            let near = flow.iter().any(|&(x, _)| (c.center - x).abs() <= 2.0 * h);
            base_match &= near;
        }
        out.push(PropagationSlice {
            t,
            flow_points: flow,
            wf,
            base_match,
            direction_match,
            max_offset_cells: worst,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genfun::SmoothFn;

    fn setup() -> PropagationSetup {
        PropagationSetup {
            x_axis: Axis::new(-6.0, 4.0, 1024).unwrap(),
            eps: EpsGrid::dyadic(4, 24).unwrap(),
            scale: ScaleFn::Log,
            mollifier: Mollifier::bump(),
            wf: WfParams::new(0.5, vec![0, 2, 4, 6], ScaleFn::Log),
            base_stride: 2,
            dt: 1e-3,
        }
    }

    #[test]
    fn translation_case() {
        let s = smooth_propagation_case(
            &CoeffField::Constant { c: 1.0 },
            &DistSpec::Delta { x0: -3.0 },
            &[1.0, 2.0],
            &setup(),
        )
        .unwrap();
        for sl in &s {
            assert!(sl.base_match && sl.direction_match, "{sl:?}");
            assert_eq!(sl.wf.len(), 1);
            assert!((sl.wf[0].center - (-3.0 + sl.t)).abs() <= 2.0 * 10.0 / 1023.0);
        }
    }

    #[test]
    fn smooth_data_has_nothing() {
        let g = DistSpec::Smooth {
            f: SmoothFn::Gaussian {
                center: -3.0,
                width: 0.5,
                amplitude: 1.0,
            },
        };
        let s = smooth_propagation_case(&CoeffField::Bump, &g, &[1.0], &setup()).unwrap();
        assert!(s[0].flow_points.is_empty() && s[0].wf.is_empty() && s[0].base_match);
    }
}
