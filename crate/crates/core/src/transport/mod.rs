//! The transport problem `D_t u + D_x(a u) = 0` per eps, with the
//! mollified-Heaviside coefficient as the main case.

mod hs;
mod hs_wf;
mod propagation;
mod theta;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use hs::{find_t_eps, kink_facts, KinkFacts, SignConvention, TEps};
pub use hs_wf::{
    ellipticity_at_singular, flow_vs_wf, hs_kink, hs_wf_scan, hs_wf_scan_on, log_gamma_grid,
    region_checks, EllipticRow, FlowComparison, FlowRow, HsScanSetup, HsWfScan, PointCheck, Region,
    RegionChecks,
};
pub use propagation::{smooth_propagation_case, PropagationSetup, PropagationSlice, WfCluster};
pub use theta::{build_theta, ThetaField};

use crate::bichar::CoeffField;
use crate::error::{invalid, Error, Result};
use crate::genfun::{check_resolvable, DistSpec, GridFn};
use crate::grid::{Axis, SpatialGrid};
use crate::mollifier::Mollifier;
use crate::scale::{EpsGrid, ScaleFn};

/// How a solution value represents `u_eps` near a node.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// Point values `u(x_i, t)`.
    Point,
    /// Averages over `[x_i - h/2, x_i + h/2]`; keeps the mass of profiles
    /// narrower than a cell.
    #[default]
    CellAverage,
}

#[derive(Clone, Debug)]
pub struct CauchySpec {
    pub coeff: CoeffField,
    pub initial: DistSpec,
    pub mollifier: Mollifier,
    /// Scale of the initial datum's mollifier.
    pub scale: ScaleFn,
    /// Axis 0 is x, axis 1 is t starting at 0.
    pub grid: SpatialGrid,
    pub eps: EpsGrid,
    pub sampling: Sampling,
    /// Cap on the RK4 step of the characteristic traces.
    pub max_step: Option<f64>,
}

impl CauchySpec {
    /// `D_t u + Theta D_x u + Theta' u = 0`, `u(., 0) = delta(. + s0)`.
    pub fn hurd_sattinger(s0: f64, scale: ScaleFn, grid: SpatialGrid, eps: EpsGrid) -> Self {
        let mollifier = Mollifier::bump();
        CauchySpec {
            coeff: CoeffField::Theta(ThetaField {
                mollifier: mollifier.clone(),
                scale,
            }),
            initial: DistSpec::Delta { x0: -s0 },
            mollifier,
            scale,
            grid,
            eps,
            sampling: Sampling::CellAverage,
            max_step: None,
        }
    }

    pub fn x_axis(&self) -> &Axis {
        self.grid.axis(0)
    }

    pub fn t_axis(&self) -> &Axis {
        self.grid.axis(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.dim() != 2 {
            return Err(invalid("grid", "need a space-time (x, t) grid"));
        }
        if self.t_axis().min != 0.0 {
            return Err(invalid("grid", "time axis must start at 0"));
        }
        self.initial.validate()?;
        if self.initial.dim() != 1 {
            return Err(invalid("initial", "must be one-dimensional"));
        }
        let xa = self.x_axis();
        for x in self.initial.singular_support() {
            if !xa.contains(x) {
                return Err(Error::OutOfDomain(format!("initial singularity at {x}")));
            }
        }
        let gammas = self.scale.gammas(&self.eps)?;
        if self.initial.is_singular() {
            check_resolvable(&self.eps, &gammas, xa.h())?;
        }
        if let Some(s) = self.max_step {
            if !(s > 0.0) {
                return Err(invalid("max_step", format!("{s} is not positive")));
            }
        }
        Ok(())
    }

    /// RK4 step cap for eps: a twentieth of the coefficient's transition width.
    fn step_cap(&self, eps: f64) -> f64 {
        let natural = match self.coeff.constant_outside(eps) {
            Some(r) if r > 0.0 => 0.05 * r,
            _ => 0.05,
        };
        self.max_step.map_or(natural, |s| s.min(natural))
    }
}

#[derive(Clone, Debug)]
pub struct SolutionField {
    pub field: GridFn,
    pub solver: String,
    pub sampling: Sampling,
    /// Largest relative deviation of the mass from its initial value.
    pub mass_drift: f64,
}

/// Backward trace state: foot position and `int a_x` along the way.
fn back_step(c: &CoeffField, eps: f64, t: f64, z: f64, e: f64, h: f64) -> (f64, f64) {
    // d z/ds = -a(z, t - s), d E/ds = a_x(z, t - s)
    let f = |s: f64, z: f64| (-c.a(eps, z, t - s), c.a_x(eps, z, t - s));
    let k1 = f(0.0, z);
    let k2 = f(0.5 * h, z + 0.5 * h * k1.0);
    let k3 = f(0.5 * h, z + 0.5 * h * k2.0);
    let k4 = f(h, z + h * k3.0);
    (
        z + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        e + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    )
}

/// Feet `Phi_{-t_j}(x)` and exponents for all `t_j = j dt`, j = 0..nt.
fn march(c: &CoeffField, eps: f64, x: f64, dt: f64, nt: usize, cap: f64) -> Vec<(f64, f64)> {
    let sub = (dt / cap).ceil().max(1.0) as usize;
    let h = dt / sub as f64;
    let mut out = Vec::with_capacity(nt);
    let (mut z, mut e) = (x, 0.0);
    out.push((z, e));
    for _ in 1..nt {
        for _ in 0..sub {
            // autonomous: the time argument is irrelevant
            (z, e) = back_step(c, eps, 0.0, z, e, h);
        }
        out.push((z, e));
    }
    out
}

/// Foot and exponent of the characteristic through `(x, t)`.
fn trace(c: &CoeffField, eps: f64, x: f64, t: f64, cap: f64) -> (f64, f64) {
    if t == 0.0 {
        return (x, 0.0);
    }
    let n = (t / cap).ceil().max(1.0) as usize;
    let h = t / n as f64;
    let (mut z, mut e) = (x, 0.0);
    for i in 0..n {
        (z, e) = back_step(c, eps, t - i as f64 * h, z, e, h);
    }
    (z, e)
}

fn edges(a: &Axis) -> Vec<f64> {
    let h = a.h();
    (0..=a.n).map(|i| a.min + (i as f64 - 0.5) * h).collect()
}

fn mass(sampling: Sampling, h: f64, row: &[f64]) -> f64 {
    match sampling {
        Sampling::CellAverage => h * row.iter().sum::<f64>(),
        Sampling::Point => {
            let s: f64 = row.iter().sum();
            h * (s - 0.5 * (row[0] + row[row.len() - 1]))
        }
    }
}

fn drift(sampling: Sampling, xa: &Axis, rows: &[Vec<f64>]) -> f64 {
    let m0 = mass(sampling, xa.h(), &rows[0]);
    rows.iter()
        .map(|r| (mass(sampling, xa.h(), r) - m0).abs() / m0.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

/// One eps: rows `[t_j][x_i]` of the characteristic solution.
fn characteristic_rows(spec: &CauchySpec, k: usize, times: &[f64]) -> Vec<Vec<f64>> {
    let e = spec.eps.get(k);
    let g = spec.scale.eval(e);
    let (m, init, c) = (&spec.mollifier, &spec.initial, &spec.coeff);
    let cap = spec.step_cap(e);
    let xa = spec.x_axis();
    let uniform = times.len() > 1 && spec.coeff.time_independent() && {
        let dt = times[1] - times[0];
        times[0] == 0.0
            && times
                .windows(2)
                .all(|w| ((w[1] - w[0]) - dt).abs() < 1e-12 * (1.0 + w[1]))
    };
    let nt = times.len();
    let feet = |x: f64| -> Vec<(f64, f64)> {
        if uniform {
            march(c, e, x, times[1] - times[0], nt, cap)
        } else {
            times.iter().map(|&t| trace(c, e, x, t, cap)).collect()
        }
    };
    let mut rows = vec![vec![0.0; xa.n]; nt];
    match spec.sampling {
        Sampling::Point => {
            // rows are indexed by time first
            #[allow(clippy::needless_range_loop)]
            for i in 0..xa.n {
                for (j, (y, ex)) in feet(xa.node(i)).into_iter().enumerate() {
                    rows[j][i] = init.mollified(m, g, y) * (-ex).exp();
                }
            }
        }
        Sampling::CellAverage => {
            let h = xa.h();
            let mut prev: Option<Vec<(f64, f64)>> = None;
            for (i, x) in edges(xa).into_iter().enumerate() {
                let cur = feet(x);
                if let Some(p) = prev {
                    for j in 0..nt {
                        rows[j][i - 1] = init.mollified_integral(m, g, p[j].0, cur[j].0) / h;
                    }
                }
                prev = Some(cur);
            }
        }
    }
    rows
}

/// Back-traces every node (or cell edge) to `t = 0` by RK4.
pub fn solve_characteristics(spec: &CauchySpec) -> Result<SolutionField> {
    spec.validate()?;
    let times = spec.t_axis().nodes();
    let xa = spec.x_axis();
    let per_eps: Vec<(Vec<Complex64>, f64)> = (0..spec.eps.len())
        .into_par_iter()
        .map(|k| {
            let rows = characteristic_rows(spec, k, &times);
            let d = drift(spec.sampling, xa, &rows);
            (
                rows.into_iter()
                    .flatten()
                    .map(|v| Complex64::new(v, 0.0))
                    .collect(),
                d,
            )
        })
        .collect();
    let mass_drift = per_eps.iter().map(|p| p.1).fold(0.0, f64::max);
    let field = GridFn::new(
        spec.grid.clone(),
        spec.eps.clone(),
        per_eps.into_iter().map(|p| p.0).collect(),
    )?;
    Ok(SolutionField {
        field,
        solver: "characteristics".into(),
        sampling: spec.sampling,
        mass_drift,
    })
}

/// Solution at the given times on the x-axis of `spec.grid`, one 1D field
/// per time.
pub fn solve_slices(spec: &CauchySpec, times: &[f64]) -> Result<Vec<GridFn>> {
    spec.validate()?;
    if times.iter().any(|&t| !(t >= 0.0 && t.is_finite())) {
        return Err(invalid("times", "must be nonnegative"));
    }
    let xa = spec.x_axis();
    let line = SpatialGrid::new(vec![*xa])?;
    let per_eps: Vec<Vec<Vec<f64>>> = (0..spec.eps.len())
        .into_par_iter()
        .map(|k| characteristic_rows(spec, k, times))
        .collect();
    (0..times.len())
        .map(|j| {
            let samples = per_eps
                .iter()
                .map(|rows| rows[j].iter().map(|&v| Complex64::new(v, 0.0)).collect())
                .collect();
            GridFn::new(line.clone(), spec.eps.clone(), samples)
        })
        .collect()
}

/// First-order upwind finite volumes for `u_t + (a u)_x = 0`; cells are
/// centred on the x nodes, inflow is zero.
pub fn solve_upwind(spec: &CauchySpec, cfl: f64) -> Result<SolutionField> {
    spec.validate()?;
    if !(cfl > 0.0 && cfl <= 0.9) {
        return Err(invalid("cfl", format!("{cfl} not in (0, 0.9]")));
    }
    let xa = *spec.x_axis();
    let times = spec.t_axis().nodes();
    let h = xa.h();
    let ed = edges(&xa);
    let per_eps: Vec<(Vec<Complex64>, f64)> = (0..spec.eps.len())
        .into_par_iter()
        .map(|k| {
            let e = spec.eps.get(k);
            let g = spec.scale.eval(e);
            let mut u: Vec<f64> = (0..xa.n)
                .map(|i| {
                    spec.initial
                        .mollified_integral(&spec.mollifier, g, ed[i], ed[i + 1])
                        / h
                })
                .collect();
            let mut rows = vec![u.clone()];
            let mut flux = vec![0.0; xa.n + 1];
            for w in times.windows(2) {
                let span = w[1] - w[0];
                let amax = ed
                    .iter()
                    .map(|&x| spec.coeff.a(e, x, w[0]).abs())
                    .fold(0.0, f64::max)
                    .max(1e-300);
                let n = (span * amax / (cfl * h)).ceil().max(1.0) as usize;
                let dt = span / n as f64;
                for s in 0..n {
                    let t = w[0] + s as f64 * dt;
                    for (f, (idx, &x)) in flux.iter_mut().zip(ed.iter().enumerate()) {
                        let a = spec.coeff.a(e, x, t);
                        let up = if a >= 0.0 {
                            idx.checked_sub(1).map_or(0.0, |i| u[i])
                        } else {
                            u.get(idx).copied().unwrap_or(0.0)
                        };
                        *f = a * up;
                    }
                    for i in 0..xa.n {
                        u[i] -= dt / h * (flux[i + 1] - flux[i]);
                    }
                }
                rows.push(u.clone());
            }
            let d = drift(Sampling::CellAverage, &xa, &rows);
            (
                rows.into_iter()
                    .flatten()
                    .map(|v| Complex64::new(v, 0.0))
                    .collect(),
                d,
            )
        })
        .collect();
    let mass_drift = per_eps.iter().map(|p| p.1).fold(0.0, f64::max);
    let field = GridFn::new(
        spec.grid.clone(),
        spec.eps.clone(),
        per_eps.into_iter().map(|p| p.0).collect(),
    )?;
    Ok(SolutionField {
        field,
        solver: format!("upwind, cfl {cfl}"),
        sampling: Sampling::CellAverage,
        mass_drift,
    })
}

/// Per eps, the largest over time slices of `h sum |u - v|`.
pub fn l1_distance(a: &SolutionField, b: &SolutionField) -> Result<Vec<f64>> {
    let (fa, fb) = (&a.field, &b.field);
    if fa.grid() != fb.grid() || !fa.eps().same_as(fb.eps()) {
        return Err(Error::GridMismatch("solutions on different grids".into()));
    }
    let xa = fa.grid().axis(0);
    Ok(fa
        .samples()
        .iter()
        .zip(fb.samples())
        .map(|(p, q)| {
            p.chunks(xa.n)
                .zip(q.chunks(xa.n))
                .map(|(r, s)| xa.h() * r.iter().zip(s).map(|(x, y)| (x - y).norm()).sum::<f64>())
                .fold(0.0, f64::max)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genfun::SmoothFn;

    fn st_grid(nx: usize, nt: usize) -> SpatialGrid {
        SpatialGrid::plane(
            Axis::new(-4.0, 2.0, nx).unwrap(),
            Axis::new(0.0, 3.0, nt).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn constant_coefficient_translates() {
        let g = SmoothFn::Gaussian {
            center: -3.0,
            width: 0.15,
            amplitude: 1.0,
        };
        let mut spec = CauchySpec::hurd_sattinger(
            1.5,
            ScaleFn::Log,
            st_grid(301, 121),
            EpsGrid::dyadic(4, 11).unwrap(),
        );
        spec.coeff = CoeffField::Constant { c: 1.0 };
        spec.initial = DistSpec::Smooth { f: g.clone() };
        spec.sampling = Sampling::Point;
        let sol = solve_characteristics(&spec).unwrap();
        let xa = spec.x_axis();
        let ta = spec.t_axis();
        let k = spec.eps.len() - 1;
        let gam = spec.scale.eval(spec.eps.get(k));
        for j in (0..ta.n).step_by(20) {
            for i in 0..xa.n {
                let want = DistSpec::Smooth { f: g.clone() }.mollified(
                    &spec.mollifier,
                    gam,
                    xa.node(i) - ta.node(j),
                );
                let got = sol.field.sample(k)[j * xa.n + i].re;
                assert!((got - want).abs() < 1e-12, "({i},{j}): {got} vs {want}");
            }
        }
        let up = solve_upwind(&spec, 0.9).unwrap();
        assert!(up.mass_drift < 1e-12, "{}", up.mass_drift);
        assert!(solve_upwind(&spec, 1.0).is_err());
    }

    #[test]
    fn hs_mass_and_translation() {
        let spec = CauchySpec::hurd_sattinger(
            1.5,
            ScaleFn::Log,
            st_grid(1201, 121),
            EpsGrid::dyadic(8, 20).unwrap(),
        );
        let sol = solve_characteristics(&spec).unwrap();
        assert!(sol.mass_drift < 1e-3, "{}", sol.mass_drift);
        // before the profile reaches the transition the peak moves at unit speed
        let xa = spec.x_axis();
        let ta = spec.t_axis();
        let k = spec.eps.len() - 1;
        for j in [0, 10, 20] {
            let t = ta.node(j);
            let row = &sol.field.sample(k)[j * xa.n..(j + 1) * xa.n];
            let imax = (0..xa.n)
                .max_by(|&a, &b| row[a].re.total_cmp(&row[b].re))
                .unwrap();
            assert!((xa.node(imax) - (t - 1.5)).abs() <= xa.h(), "t={t}");
        }
        // point values agree with cell averages while the profile is resolved
        let mut point = spec.clone();
        point.sampling = Sampling::Point;
        let pv = solve_characteristics(&point).unwrap();
        for j in [0, 10, 20] {
            for i in 0..xa.n {
                let (a, b) = (
                    pv.field.sample(k)[j * xa.n + i].re,
                    sol.field.sample(k)[j * xa.n + i].re,
                );
                assert!((a - b).abs() < 0.05 * (1.0 + b.abs()), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn upwind_cross_validation_improves_with_refinement() {
        let eps = EpsGrid::new(vec![0.1]).unwrap();
        let mut prev = f64::INFINITY;
        for n in [301, 601, 1201] {
            let grid = SpatialGrid::plane(
                Axis::new(-4.0, 2.0, n).unwrap(),
                Axis::new(0.0, 1.5, 64).unwrap(),
            )
            .unwrap();
            let mut spec = CauchySpec::hurd_sattinger(1.5, ScaleFn::Log, grid, eps.clone());
            spec.initial = DistSpec::Smooth {
                f: SmoothFn::Gaussian {
                    center: -1.5,
                    width: 0.4,
                    amplitude: 1.0,
                },
            };
            let a = solve_characteristics(&spec).unwrap();
            let b = solve_upwind(&spec, 0.9).unwrap();
            assert!(b.mass_drift < 1e-12);
            let d = l1_distance(&a, &b).unwrap()[0];
            assert!(d < prev, "{n}: {d} vs {prev}");
            prev = d;
        }
        assert!(prev < 0.05, "{prev}");
    }

    #[test]
    fn slices_match_full_solve() {
        let spec = CauchySpec::hurd_sattinger(
            1.5,
            ScaleFn::Log,
            st_grid(301, 121),
            EpsGrid::dyadic(6, 9).unwrap(),
        );
        let full = solve_characteristics(&spec).unwrap();
        let s = solve_slices(&spec, &[1.0, 2.0]).unwrap();
        let n = spec.x_axis().n;
        for (slice, j) in s.iter().zip([40, 80]) {
            for k in 0..4 {
                for i in 0..n {
                    let a = slice.sample(k)[i].re;
                    let b = full.field.sample(k)[j * n + i].re;
                    assert!((a - b).abs() < 1e-5 * (1.0 + b.abs()), "{a} vs {b}");
                }
            }
        }
    }
}
