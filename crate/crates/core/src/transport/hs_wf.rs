//! Space-time wave front scan of the mollified-Heaviside problem, the
//! comparison with the bicharacteristic flow at the kink, and the
//! ellipticity cross-check at every singular pair.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{kink_facts, solve_characteristics, CauchySpec, KinkFacts, SolutionField, ThetaField};
use crate::error::{invalid, Result};
use crate::grid::{Axis, SpatialGrid};
use crate::mollifier::Mollifier;
use crate::scale::{EpsGrid, ScaleFn};
use crate::symbols::{micro_elliptic, EllipticityReport, SymbolFamily};
use crate::wavefront::{directions_2d, wf_scan, WfParams, WfReport};

/// Eps grid with `log(1/eps)` log-spaced over `[g_lo, g_hi]`.
pub fn log_gamma_grid(g_lo: f64, g_hi: f64, count: usize) -> Result<EpsGrid> {
    if !(g_lo > 0.0 && g_hi > g_lo) || count < 2 {
        return Err(invalid(
            "gamma range",
            format!("[{g_lo}, {g_hi}] x {count}"),
        ));
    }
    let last = (count - 1) as f64;
    EpsGrid::new(
        (0..count)
            .map(|k| (-(g_lo * (g_hi / g_lo).powf(k as f64 / last))).exp())
            .collect(),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HsScanSetup {
    pub s0: f64,
    pub x_axis: Axis,
    pub t_axis: Axis,
    pub eps: EpsGrid,
    pub scale: ScaleFn,
    #[serde(default)]
    pub mollifier: Mollifier,
    pub wf: WfParams,
    #[serde(default = "sixteen")]
    pub n_dirs: usize,
    /// Defaults to the lattice through the kink with spacing `wf.r`.
    #[serde(default)]
    pub base_points: Option<Vec<[f64; 2]>>,
    /// Slack of the flow cone `|xi| <= 2 |tau| + tol` on unit vectors.
    #[serde(default = "flow_tol")]
    pub flow_tol: f64,
    /// Bicharacteristic step.
    #[serde(default = "bichar_dt")]
    pub dt: f64,
}

fn sixteen() -> usize {
    16
}

fn flow_tol() -> f64 {
    0.05
}

fn bichar_dt() -> f64 {
    1e-3
}

impl HsScanSetup {
    /// 512 x 512 nodes on `[-2, 1] x [0, 3]`, 15 eps with gamma in [3, 8],
    /// r = 0.3, l = 1..4.
    pub fn standard(s0: f64) -> Result<Self> {
        Ok(HsScanSetup {
            s0,
            x_axis: Axis::new(-2.0, 1.0, 512)?,
            t_axis: Axis::new(0.0, 3.0, 512)?,
            eps: log_gamma_grid(3.0, 8.0, 15)?,
            scale: ScaleFn::Log,
            mollifier: Mollifier::bump(),
            wf: WfParams::new(0.3, vec![1, 2, 3, 4], ScaleFn::Log),
            n_dirs: 16,
            base_points: None,
            flow_tol: flow_tol(),
            dt: bichar_dt(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_dirs < 4 || self.n_dirs % 4 != 0 {
            return Err(invalid(
                "n_dirs",
                format!("{} is not a positive multiple of 4", self.n_dirs),
            ));
        }
        if !(self.s0 > 0.5 && self.s0.is_finite()) {
            return Err(invalid("s0", format!("{} must exceed 0.5", self.s0)));
        }
        if !(self.flow_tol >= 0.0) {
            return Err(invalid(
                "flow_tol",
                format!("{} is negative", self.flow_tol),
            ));
        }
        if self.wf.scale != self.scale {
            return Err(invalid("wf.scale", "must equal the problem scale"));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<SpatialGrid> {
        SpatialGrid::plane(self.x_axis, self.t_axis)
    }

    pub fn cauchy(&self) -> Result<CauchySpec> {
        let mut spec =
            CauchySpec::hurd_sattinger(self.s0, self.scale, self.grid()?, self.eps.clone());
        spec.mollifier = self.mollifier.clone();
        if let super::CoeffField::Theta(th) = &mut spec.coeff {
            th.mollifier = self.mollifier.clone();
        }
        Ok(spec)
    }

    pub fn theta(&self) -> ThetaField {
        ThetaField {
            mollifier: self.mollifier.clone(),
            scale: self.scale,
        }
    }

    /// Base points `(k r, s0 + j r)` whose cutoff fits the box. Points off
    /// the limit singular set are kept only at distance >= 2r from it, so
    /// the mollified set stays out of their cutoffs on the eps tail.
    pub fn lattice(&self) -> Vec<[f64; 2]> {
        let r = self.wf.r;
        let fits = |a: &Axis, c: f64| {
            let slack = 1e-9 * (1.0 + a.min.abs().max(a.max.abs()));
            c - r >= a.min - slack && c + r <= a.max + slack
        };
        let range = |a: &Axis, c0: f64| {
            let lo = ((a.min + r - c0) / r).ceil() as i64 - 1;
            let hi = ((a.max - r - c0) / r).floor() as i64 + 1;
            (lo..=hi)
                .map(move |k| c0 + k as f64 * r)
                .filter(|&c| fits(a, c))
                .collect::<Vec<f64>>()
        };
        let xs = range(&self.x_axis, 0.0);
        let ts = range(&self.t_axis, self.s0);
        let tol = 1e-6 * r;
        ts.iter()
            .flat_map(|&t| xs.iter().map(move |&x| [x, t]))
            .filter(|&p| {
                region(p, self.s0, tol) != Region::Other
                    || singular_set_distance(p, self.s0) >= 2.0 * r - tol
            })
            .collect()
    }

    pub fn points(&self) -> Vec<[f64; 2]> {
        self.base_points.clone().unwrap_or_else(|| self.lattice())
    }
}

/// Where a base point sits relative to the limit singular set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    /// `t = x + s0, x < 0`
    Incoming,
    /// `(0, s0)`
    Kink,
    /// `x = 0, t > s0`
    Stuck,
    Other,
}

fn region(p: [f64; 2], s0: f64, tol: f64) -> Region {
    let [x, t] = p;
    if x.abs() <= tol && (t - s0).abs() <= tol {
        Region::Kink
    } else if x < -tol && (t - x - s0).abs() <= tol {
        Region::Incoming
    } else if x.abs() <= tol && t > s0 + tol {
        Region::Stuck
    } else {
        Region::Other
    }
}

/// Distance to `{t = x + s0, x <= 0} U {x = 0, t >= s0}`.
fn singular_set_distance(p: [f64; 2], s0: f64) -> f64 {
    let [x, t] = p;
    // incoming ray from the kink along -(1, 1)/sqrt2
    let along = ((-x) + (s0 - t)) / 2f64.sqrt();
    let d_in = if along <= 0.0 {
        x.hypot(t - s0)
    } else {
        (x - t + s0).abs() / 2f64.sqrt()
    };
    let d_up = if t >= s0 { x.abs() } else { x.hypot(t - s0) };
    d_in.min(d_up)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HsWfScan {
    pub setup: HsScanSetup,
    pub report: WfReport,
    pub regions: Vec<Region>,
    pub mass_drift: f64,
}

pub fn hs_wf_scan(setup: &HsScanSetup) -> Result<(SolutionField, HsWfScan)> {
    setup.validate()?;
    let sol = solve_characteristics(&setup.cauchy()?)?;
    let scan = hs_wf_scan_on(&sol, setup)?;
    Ok((sol, scan))
}

/// Scan of an already computed solution.
pub fn hs_wf_scan_on(sol: &SolutionField, setup: &HsScanSetup) -> Result<HsWfScan> {
    setup.validate()?;
    let pts = setup.points();
    if pts.is_empty() {
        return Err(invalid("base_points", "no base point fits the box"));
    }
    let base: Vec<Vec<f64>> = pts.iter().map(|p| p.to_vec()).collect();
    let report = wf_scan(&sol.field, &base, &directions_2d(setup.n_dirs), &setup.wf)?;
    let tol = 0.5 * sol.field.grid().h_max();
    Ok(HsWfScan {
        setup: setup.clone(),
        regions: pts.iter().map(|&p| region(p, setup.s0, tol)).collect(),
        report,
        mass_drift: sol.mass_drift,
    })
}

fn angle_of(d: &[f64]) -> f64 {
    d[1].atan2(d[0]).rem_euclid(2.0 * PI)
}

/// Angle between the lines spanned by `a` and `b`, in `[0, pi/2]`.
fn line_angle(a: &[f64], b: &[f64]) -> f64 {
    let cross = (a[0] * b[1] - a[1] * b[0]).abs();
    let dot = (a[0] * b[0] + a[1] * b[1]).abs();
    cross.atan2(dot)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointCheck {
    pub base: usize,
    pub x0: [f64; 2],
    pub singular: Vec<usize>,
    pub untested: usize,
    pub pass: bool,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionChecks {
    pub base_points: usize,
    pub directions: usize,
    pub step: f64,
    /// Incoming line: singular only within one step of the conormal `(1, -1)`.
    pub incoming: Vec<PointCheck>,
    pub incoming_pass: bool,
    pub kink: Option<PointCheck>,
    pub kink_required: usize,
    pub kink_pass: bool,
    /// Stuck line: singular at `(+-1, 0)`, regular at `(0, +-1)`.
    pub stuck: Vec<PointCheck>,
    pub stuck_pass: bool,
    /// Singular pairs at points off the limit singular set.
    pub other_singular: usize,
}

impl RegionChecks {
    pub fn pass(&self) -> bool {
        self.incoming_pass && self.kink_pass && self.stuck_pass
    }
}

pub fn region_checks(scan: &HsWfScan) -> RegionChecks {
    let r = &scan.report;
    let nd = r.directions.len();
    let step = 2.0 * PI / nd as f64;
    let conormal = [1.0, -1.0];
    let sing_of = |b: usize| -> (Vec<usize>, usize) {
        let s = (0..nd)
            .filter(|&d| r.entry(b, d).singular == Some(true))
            .collect();
        let u = (0..nd)
            .filter(|&d| r.entry(b, d).singular.is_none())
            .count();
        (s, u)
    };
    let point = |b: usize| -> [f64; 2] { [r.base_points[b][0], r.base_points[b][1]] };
    let mut incoming = Vec::new();
    let mut stuck = Vec::new();
    let mut kink = None;
    let mut other_singular = 0;
    let kink_required = nd - nd / 8;
    for (b, reg) in scan.regions.iter().enumerate() {
        let (singular, untested) = sing_of(b);
        match reg {
            Region::Incoming => {
                let off: Vec<usize> = singular
                    .iter()
                    .copied()
                    .filter(|&d| line_angle(&r.directions[d], &conormal) > step + 1e-9)
                    .collect();
                let pass = untested == 0 && off.is_empty();
                let note = if off.is_empty() {
                    String::new()
                } else {
                    format!("singular off the conormal at directions {off:?}")
                };
                incoming.push(PointCheck {
                    base: b,
                    x0: point(b),
                    singular,
                    untested,
                    pass,
                    note,
                });
            }
            Region::Kink => {
                let pass = untested == 0 && singular.len() >= kink_required;
                let note = format!("{} of {nd} directions singular", singular.len());
                kink = Some(PointCheck {
                    base: b,
                    x0: point(b),
                    singular,
                    untested,
                    pass,
                    note,
                });
            }
            Region::Stuck => {
                let (e, w, n, s) = (0, nd / 2, nd / 4, 3 * nd / 4);
                let is = |d: usize| singular.contains(&d);
                let mut bad = Vec::new();
                for d in [e, w] {
                    if !is(d) {
                        bad.push(format!(
                            "regular at {:.1} deg",
                            angle_of(&r.directions[d]).to_degrees()
                        ));
                    }
                }
                for d in [n, s] {
                    if is(d) {
                        bad.push(format!(
                            "singular at {:.1} deg",
                            angle_of(&r.directions[d]).to_degrees()
                        ));
                    }
                }
                let pass = untested == 0 && bad.is_empty();
                stuck.push(PointCheck {
                    base: b,
                    x0: point(b),
                    singular,
                    untested,
                    pass,
                    note: bad.join("; "),
                });
            }
            Region::Other => other_singular += singular.len(),
        }
    }
    RegionChecks {
        base_points: r.base_points.len(),
        directions: nd,
        step,
        incoming_pass: !incoming.is_empty() && incoming.iter().all(|c| c.pass),
        kink_pass: kink.as_ref().is_some_and(|c| c.pass),
        stuck_pass: !stuck.is_empty() && stuck.iter().all(|c| c.pass),
        incoming,
        kink,
        kink_required,
        stuck,
        other_singular,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowRow {
    pub angle_deg: f64,
    pub direction: [f64; 2],
    pub singular_at_kink: bool,
    /// Inside `|xi| <= 2 |tau| + tol`.
    pub in_flow_cone: bool,
    /// Within one angular step of a flow limit direction.
    pub near_flow: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowComparison {
    pub tol: f64,
    /// Normalized `(xi_eps(s0), tau0)` per eps and its antipode.
    pub flow_directions: Vec<[f64; 2]>,
    pub flow_in_cone: bool,
    pub rows: Vec<FlowRow>,
    /// Singular at the kink but outside the flow cone.
    pub deficient: usize,
}

impl FlowComparison {
    pub fn pass(&self, min_deficient: usize) -> bool {
        self.flow_in_cone && self.deficient >= min_deficient
    }
}

pub fn flow_vs_wf(scan: &HsWfScan, kink: &KinkFacts) -> Result<FlowComparison> {
    let tol = scan.setup.flow_tol;
    let in_cone = |d: &[f64; 2]| d[0].abs() <= 2.0 * d[1].abs() + tol;
    let mut flow_directions = Vec::new();
    for &xi in &kink.xi_at_s0 {
        let n = (xi * xi + kink.tau0 * kink.tau0).sqrt();
        if !(n.is_finite() && n > 0.0) {
            return Err(invalid("xi_at_s0", format!("{xi} is not usable")));
        }
        flow_directions.push([xi / n, kink.tau0 / n]);
        flow_directions.push([-xi / n, -kink.tau0 / n]);
    }
    let r = &scan.report;
    let nd = r.directions.len();
    let step = 2.0 * PI / nd as f64;
    let kb = scan.regions.iter().position(|&g| g == Region::Kink);
    let rows: Vec<FlowRow> = (0..nd)
        .map(|d| {
            let dir = [r.directions[d][0], r.directions[d][1]];
            let near_flow = flow_directions.iter().any(|f| {
                let cross = f[0] * dir[1] - f[1] * dir[0];
                let dot = f[0] * dir[0] + f[1] * dir[1];
                cross.abs().atan2(dot) <= step + 1e-9
            });
            FlowRow {
                angle_deg: angle_of(&dir).to_degrees(),
                direction: dir,
                singular_at_kink: kb.is_some_and(|b| r.entry(b, d).singular == Some(true)),
                in_flow_cone: in_cone(&dir),
                near_flow,
            }
        })
        .collect();
    Ok(FlowComparison {
        tol,
        flow_in_cone: flow_directions.iter().all(in_cone),
        deficient: rows
            .iter()
            .filter(|r| r.singular_at_kink && !r.in_flow_cone)
            .count(),
        flow_directions,
        rows,
    })
}

pub fn hs_kink(setup: &HsScanSetup) -> Result<KinkFacts> {
    kink_facts(&setup.theta(), setup.s0, &setup.eps, 1.0, setup.dt)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipticRow {
    pub base: usize,
    pub region: Region,
    pub x0: [f64; 2],
    pub direction: [f64; 2],
    pub elliptic: bool,
    pub report: EllipticityReport,
}

/// `micro_elliptic` of `tau + Theta xi` at every singular pair, on the
/// cutoff plateau and the scan's cone; elliptic rows are violations.
pub fn ellipticity_at_singular(scan: &HsWfScan) -> Result<Vec<EllipticRow>> {
    let s = &scan.setup;
    let sym = SymbolFamily::Transport { scale: s.scale };
    let band =
        s.wf.band
            .unwrap_or_else(|| crate::wavefront::default_band(&scan_grid(s)));
    let pairs: Vec<(usize, usize)> = (0..scan.report.base_points.len())
        .flat_map(|b| (0..scan.report.directions.len()).map(move |d| (b, d)))
        .filter(|&(b, d)| scan.report.entry(b, d).singular == Some(true))
        .collect();
    pairs
        .par_iter()
        .map(|&(b, d)| {
            let x0 = &scan.report.base_points[b];
            let dir = &scan.report.directions[d];
            let rep = micro_elliptic(&sym, &s.eps, x0, dir, 0.5 * s.wf.r, s.wf.theta, band)?;
            Ok(EllipticRow {
                base: b,
                region: scan.regions[b],
                x0: [x0[0], x0[1]],
                direction: [dir[0], dir[1]],
                elliptic: rep.elliptic,
                report: rep,
            })
        })
        .collect()
}

fn scan_grid(s: &HsScanSetup) -> SpatialGrid {
    // axes were validated when the setup was scanned
    SpatialGrid::plane(s.x_axis, s.t_axis).expect("validated axes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regions_and_lattice() {
        let s = HsScanSetup::standard(1.5).unwrap();
        let pts = s.lattice();
        assert!(pts.len() >= 12);
        let h = 3.0 / 511.0;
        let regs: Vec<Region> = pts.iter().map(|&p| region(p, 1.5, h)).collect();
        assert_eq!(regs.iter().filter(|&&r| r == Region::Kink).count(), 1);
        assert!(regs.iter().filter(|&&r| r == Region::Incoming).count() >= 3);
        assert!(regs.iter().filter(|&&r| r == Region::Stuck).count() >= 3);
        let grid = s.grid().unwrap();
        for p in &pts {
            crate::wavefront::cutoff(p, s.wf.r, &grid).unwrap();
        }
    }

    #[test]
    fn distances() {
        assert!((singular_set_distance([0.0, 1.5], 1.5)).abs() < 1e-12);
        assert!((singular_set_distance([-1.0, 0.5], 1.5)).abs() < 1e-12);
        assert!((singular_set_distance([0.4, 2.0], 1.5) - 0.4).abs() < 1e-12);
        assert!((singular_set_distance([0.3, 1.2], 1.5) - 0.3f64.hypot(0.3)).abs() < 1e-12);
        assert!((singular_set_distance([-1.0, 1.5], 1.5) - 1.0 / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn gamma_grid() {
        let e = log_gamma_grid(3.0, 8.0, 15).unwrap();
        assert_eq!(e.len(), 15);
        assert!((-e.get(0).ln() - 3.0).abs() < 1e-12);
        assert!((-e.get(14).ln() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn line_angles() {
        assert!(line_angle(&[1.0, -1.0], &[-1.0, 1.0]) < 1e-12);
        assert!((line_angle(&[1.0, 0.0], &[0.0, 1.0]) - PI / 2.0).abs() < 1e-12);
    }
}
