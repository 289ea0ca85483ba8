//! Microlocal regularity at a growth scale and the generalized wave front
//! set scan.

mod spectrum;

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fit::line_fit;
use crate::genfun::GridFn;
use crate::grid::SpatialGrid;
use crate::scale::{EpsGrid, ScaleFn, TAIL_FRACTION};
use spectrum::Window;

/// Zero padding factor of the windowed transforms.
pub const PAD: usize = 4;
pub const DEFAULT_SLOPE_TOL: f64 = 0.25;
pub const DEFAULT_THETA: f64 = PI / 8.0;
pub const MAX_L: u32 = 8;
pub const NYQUIST_FRACTION: f64 = 0.8;
const MIN_L_VALUES: usize = 4;
const MIN_EPS: usize = 8;
const RAMP_B: f64 = 1.0;

fn planck(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if s >= 1.0 {
        return 1.0;
    }
    let f = |t: f64| (-RAMP_B / t).exp();
    let a = f(s);
    a / (a + f(1.0 - s))
}

fn check_support(x0: &[f64], r: f64, grid: &SpatialGrid) -> Result<()> {
    if x0.len() != grid.dim() {
        return Err(invalid("x0", "dimension differs from grid"));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid("r", format!("{r} is not positive")));
    }
    for (a, &c) in grid.axes().iter().zip(x0) {
        let slack = 1e-9 * (1.0 + a.min.abs().max(a.max.abs()));
        if c - r < a.min - slack || c + r > a.max + slack {
            return Err(Error::OutOfDomain(format!(
                "cutoff support [{}, {}] clipped by [{}, {}]",
                c - r,
                c + r,
                a.min,
                a.max
            )));
        }
    }
    Ok(())
}

/// Radial bump: 1 on `|x - x0| <= r/2`, 0 outside `|x - x0| < r`.
pub fn cutoff(x0: &[f64], r: f64, grid: &SpatialGrid) -> Result<Vec<f64>> {
    check_support(x0, r, grid)?;
    let mut out = Vec::with_capacity(grid.len());
    grid.for_each_node(|_, p| {
        let d = p
            .iter()
            .zip(x0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        out.push(planck((r - d) / (0.5 * r)));
    });
    Ok(out)
}

/// Default tested band: above four fundamental frequencies of the longest
/// axis, below 0.8 of the finest Nyquist frequency. Frequencies are further
/// clipped per axis to 0.8 of that axis's Nyquist frequency.
pub fn default_band(grid: &SpatialGrid) -> [f64; 2] {
    let l = grid.axes().iter().map(|a| a.length()).fold(0.0, f64::max);
    [8.0 * PI / l, NYQUIST_FRACTION * PI / grid.h_min()]
}

/// Per-axis alias guard on a frequency vector.
fn below_nyquist(grid: &SpatialGrid, k: &[f64]) -> bool {
    grid.axes()
        .iter()
        .zip(k)
        .all(|(a, v)| v.abs() <= NYQUIST_FRACTION * PI / a.h() * (1.0 + 1e-12))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeSpec {
    pub x0: Vec<f64>,
    pub r: f64,
    pub xi0: Vec<f64>,
    #[serde(default = "default_theta")]
    pub theta: f64,
    /// Defaults to [`default_band`].
    #[serde(default)]
    pub band: Option<[f64; 2]>,
}

fn default_theta() -> f64 {
    DEFAULT_THETA
}

impl ConeSpec {
    pub fn new(x0: Vec<f64>, r: f64, xi0: Vec<f64>) -> Self {
        ConeSpec {
            x0,
            r,
            xi0,
            theta: DEFAULT_THETA,
            band: None,
        }
    }

    pub fn band_on(&self, grid: &SpatialGrid) -> [f64; 2] {
        self.band.unwrap_or_else(|| default_band(grid))
    }

    pub fn validate(&self, grid: &SpatialGrid) -> Result<()> {
        check_support(&self.x0, self.r, grid)?;
        if self.xi0.len() != grid.dim() {
            return Err(invalid("xi0", "dimension differs from grid"));
        }
        let norm = self.xi0.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(invalid("xi0", format!("norm {norm} is not 1")));
        }
        if !(self.theta > 0.0 && self.theta < PI / 2.0) {
            return Err(invalid("theta", format!("{} not in (0, pi/2)", self.theta)));
        }
        let [lo, hi] = self.band_on(grid);
        let [min_lo, max_hi] = default_band(grid);
        let nyquist = max_hi / NYQUIST_FRACTION;
        if !(lo >= min_lo * (1.0 - 1e-12)) {
            return Err(invalid("band", format!("f_lo {lo} below {min_lo}")));
        }
        if !(hi <= nyquist * (1.0 + 1e-12)) {
            return Err(invalid(
                "band",
                format!("f_hi {hi} above Nyquist {nyquist}"),
            ));
        }
        if lo >= hi {
            return Err(invalid("band", format!("empty band [{lo}, {hi}]")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayProfile {
    pub l_values: Vec<u32>,
    pub eps: Vec<f64>,
    /// `s[k][j]`: sup over the cone band of `|F(phi u_eps_k)| (1+|xi|)^l_j`.
    pub s: Vec<Vec<f64>>,
    pub scale: ScaleFn,
}

fn check_l(l_values: &[u32]) -> Result<()> {
    if l_values.is_empty() || l_values.iter().any(|&l| l > MAX_L) {
        return Err(invalid(
            "l_values",
            format!("{l_values:?} not a nonempty subset of 0..={MAX_L}"),
        ));
    }
    Ok(())
}

/// Unit direction or error.
fn unit(v: &[f64]) -> Result<Vec<f64>> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(n > 0.0 && n.is_finite()) {
        return Err(invalid("direction", "zero or non-finite"));
    }
    Ok(v.iter().map(|x| x / n).collect())
}

/// Sup profiles `[dir][eps][l]` for several directions sharing one cutoff.
fn profiles(
    u: &GridFn,
    x0: &[f64],
    r: f64,
    dirs: &[Vec<f64>],
    theta: f64,
    band: [f64; 2],
    l_values: &[u32],
) -> Result<Vec<Vec<Vec<f64>>>> {
    let grid = u.grid();
    let phi = cutoff(x0, r, grid)?;
    let win = Window::new(grid, &phi, PAD)?;
    let cos_t = theta.cos() - 1e-12;
    // bins inside the band with their cone memberships and weights
    let mut bins: Vec<(usize, Vec<usize>, Vec<f64>)> = Vec::new();
    let mut hit = vec![false; dirs.len()];
    let total: usize = win.padded.iter().product();
    for flat in 0..total {
        let k: Vec<f64> = match win.padded.len() {
            1 => vec![win.freq(0, flat)],
            _ => vec![
                win.freq(0, flat % win.padded[0]),
                win.freq(1, flat / win.padded[0]),
            ],
        };
        let mag = k.iter().map(|v| v * v).sum::<f64>().sqrt();
        if mag < band[0] || mag > band[1] || !below_nyquist(grid, &k) {
            continue;
        }
        let members: Vec<usize> = dirs
            .iter()
            .enumerate()
            .filter(|(_, d)| d.iter().zip(&k).map(|(a, b)| a * b).sum::<f64>() >= cos_t * mag)
            .map(|(i, _)| i)
            .collect();
        if members.is_empty() {
            continue;
        }
        for &i in &members {
            hit[i] = true;
        }
        let w = l_values
            .iter()
            .map(|&l| (1.0 + mag).powi(l as i32))
            .collect();
        bins.push((flat, members, w));
    }
    if hit.iter().any(|h| !h) {
        return Err(Error::EmptyCone);
    }
    let per_eps: Vec<Vec<Vec<f64>>> = u
        .samples()
        .par_iter()
        .map(|data| {
            let mags = win.magnitudes(grid, data);
            let mut s = vec![vec![0.0; l_values.len()]; dirs.len()];
            for (flat, members, w) in &bins {
                let m = mags[*flat];
                for &i in members {
                    for (sj, wj) in s[i].iter_mut().zip(w) {
                        *sj = f64::max(*sj, m * wj);
                    }
                }
            }
            s
        })
        .collect();
    Ok((0..dirs.len())
        .map(|i| per_eps.iter().map(|s| s[i].clone()).collect())
        .collect())
}

pub fn cone_decay_profile(
    u: &GridFn,
    c: &ConeSpec,
    l_values: &[u32],
    scale: ScaleFn,
) -> Result<DecayProfile> {
    c.validate(u.grid())?;
    check_l(l_values)?;
    let dir = unit(&c.xi0)?;
    let mut p = profiles(
        u,
        &c.x0,
        c.r,
        &[dir],
        c.theta,
        c.band_on(u.grid()),
        l_values,
    )?;
    Ok(DecayProfile {
        l_values: l_values.to_vec(),
        eps: u.eps().values().to_vec(),
        s: p.remove(0),
        scale,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub regular: bool,
    /// Slope of `N(l)` against `l`.
    pub slope: f64,
    /// Growth exponent estimate per l-value.
    pub n_hat: Vec<f64>,
}

/// Per l: least-squares slope of `log s` against `log gamma` over the tail;
/// regular when those exponents do not grow with `l` faster than
/// `slope_tol`.
pub fn microlocal_verdict(p: &DecayProfile, scale: ScaleFn, slope_tol: f64) -> Result<Verdict> {
    if p.l_values.len() < MIN_L_VALUES {
        return Err(Error::TooFewPoints {
            need: MIN_L_VALUES,
            got: p.l_values.len(),
        });
    }
    if p.eps.len() < MIN_EPS {
        return Err(Error::TooFewPoints {
            need: MIN_EPS,
            got: p.eps.len(),
        });
    }
    if p.s.len() != p.eps.len() || p.s.iter().any(|r| r.len() != p.l_values.len()) {
        return Err(Error::GridMismatch("profile shape".into()));
    }
    if p.s.iter().flatten().all(|&v| v == 0.0) {
        return Ok(Verdict {
            regular: true,
            slope: 0.0,
            n_hat: vec![0.0; p.l_values.len()],
        });
    }
    let eps = EpsGrid::new(p.eps.clone())?;
    let gam = scale.gammas(&eps)?;
    let tail = eps.tail(TAIL_FRACTION);
    let mut n_hat = Vec::with_capacity(p.l_values.len());
    for j in 0..p.l_values.len() {
        let (xs, ys): (Vec<f64>, Vec<f64>) = tail
            .clone()
            .filter(|&k| p.s[k][j] > 0.0)
            .map(|k| (gam[k].ln(), p.s[k][j].ln()))
            .unzip();
        let fit = if xs.len() < 2 {
            None
        } else {
            line_fit(&xs, &ys)
        };
        match fit {
            Some(f) => n_hat.push(f.slope),
            None if xs.len() >= 2 => {
                return Err(Error::Degenerate(format!(
                    "scale {scale} is constant on the tail"
                )))
            }
            // vanishes on the tail
            None => n_hat.push(0.0),
        }
    }
    let ls: Vec<f64> = p.l_values.iter().map(|&l| l as f64).collect();
    let slope = line_fit(&ls, &n_hat)
        .ok_or_else(|| Error::Degenerate("l_values are all equal".into()))?
        .slope;
    Ok(Verdict {
        regular: slope <= slope_tol,
        slope,
        n_hat,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WfParams {
    pub r: f64,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default)]
    pub band: Option<[f64; 2]>,
    pub l_values: Vec<u32>,
    #[serde(default = "default_slope_tol")]
    pub slope_tol: f64,
    pub scale: ScaleFn,
    /// Re-test singular pairs with half the cutoff radius.
    #[serde(default = "yes")]
    pub retest: bool,
}

fn default_slope_tol() -> f64 {
    DEFAULT_SLOPE_TOL
}

fn yes() -> bool {
    true
}

impl WfParams {
    pub fn new(r: f64, l_values: Vec<u32>, scale: ScaleFn) -> Self {
        WfParams {
            r,
            theta: DEFAULT_THETA,
            band: None,
            l_values,
            slope_tol: DEFAULT_SLOPE_TOL,
            scale,
            retest: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WfEntry {
    pub x0: Vec<f64>,
    pub direction: Vec<f64>,
    /// `None` when the pair could not be tested; see `error`.
    pub singular: Option<bool>,
    pub slope: Option<f64>,
    pub n_hat: Vec<f64>,
    /// Slope of the half-radius re-test, when one was run.
    pub retest_slope: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WfReport {
    pub scale: String,
    pub base_points: Vec<Vec<f64>>,
    pub directions: Vec<Vec<f64>>,
    /// Base point major, direction minor.
    pub entries: Vec<WfEntry>,
}

impl WfReport {
    pub fn singular(&self) -> impl Iterator<Item = &WfEntry> {
        self.entries.iter().filter(|e| e.singular == Some(true))
    }

    pub fn entry(&self, base: usize, dir: usize) -> &WfEntry {
        &self.entries[base * self.directions.len() + dir]
    }
}

/// `n` unit vectors at angles `2 pi j / n`.
pub fn directions_2d(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|j| {
            let a = 2.0 * PI * j as f64 / n as f64;
            vec![a.cos(), a.sin()]
        })
        .collect()
}

fn verdicts_at(
    u: &GridFn,
    x0: &[f64],
    r: f64,
    dirs: &[Vec<f64>],
    params: &WfParams,
) -> Result<Vec<Verdict>> {
    let c = ConeSpec {
        x0: x0.to_vec(),
        r,
        xi0: dirs[0].clone(),
        theta: params.theta,
        band: params.band,
    };
    c.validate(u.grid())?;
    let band = c.band_on(u.grid());
    profiles(u, x0, r, dirs, params.theta, band, &params.l_values)?
        .into_iter()
        .map(|s| {
            let p = DecayProfile {
                l_values: params.l_values.clone(),
                eps: u.eps().values().to_vec(),
                s,
                scale: params.scale,
            };
            microlocal_verdict(&p, params.scale, params.slope_tol)
        })
        .collect()
}

/// Verdict for every (base point, direction) pair; a pair is singular only if
/// the half-radius re-test agrees.
pub fn wf_scan(
    u: &GridFn,
    base_points: &[Vec<f64>],
    directions: &[Vec<f64>],
    params: &WfParams,
) -> Result<WfReport> {
    check_l(&params.l_values)?;
    if directions.is_empty() {
        return Err(invalid("directions", "empty"));
    }
    let dirs: Vec<Vec<f64>> = directions.iter().map(|d| unit(d)).collect::<Result<_>>()?;
    if dirs.iter().any(|d| d.len() != u.grid().dim()) {
        return Err(invalid("directions", "dimension differs from grid"));
    }
    let mut entries = Vec::with_capacity(base_points.len() * dirs.len());
    for x0 in base_points {
        let blank = |d: &Vec<f64>| WfEntry {
            x0: x0.clone(),
            direction: d.clone(),
            singular: None,
            slope: None,
            n_hat: Vec::new(),
            retest_slope: None,
            error: None,
        };
        let first = match verdicts_at(u, x0, params.r, &dirs, params) {
            Ok(v) => v,
            Err(e) => {
                entries.extend(dirs.iter().map(|d| WfEntry {
                    error: Some(e.to_string()),
                    ..blank(d)
                }));
                continue;
            }
        };
        let flagged: Vec<usize> = (0..dirs.len()).filter(|&i| !first[i].regular).collect();
        let mut second: Vec<Option<std::result::Result<f64, String>>> = vec![None; dirs.len()];
        if params.retest && !flagged.is_empty() {
            let sub: Vec<Vec<f64>> = flagged.iter().map(|&i| dirs[i].clone()).collect();
            match verdicts_at(u, x0, 0.5 * params.r, &sub, params) {
                Ok(v) => {
                    for (&i, vi) in flagged.iter().zip(v) {
                        second[i] = Some(Ok(vi.slope));
                    }
                }
                Err(e) => {
                    for &i in &flagged {
                        second[i] = Some(Err(e.to_string()));
                    }
                }
            }
        }
        for (i, (d, v)) in dirs.iter().zip(first).enumerate() {
            let mut e = WfEntry {
                singular: Some(!v.regular),
                slope: Some(v.slope),
                n_hat: v.n_hat,
                ..blank(d)
            };
            match second[i].take() {
                Some(Ok(s2)) => {
                    e.retest_slope = Some(s2);
                    e.singular = Some(s2 > params.slope_tol);
                }
                Some(Err(err)) => e.error = Some(format!("half-radius re-test: {err}")),
                None => {}
            }
            entries.push(e);
        }
    }
    Ok(WfReport {
        scale: params.scale.to_string(),
        base_points: base_points.to_vec(),
        directions: dirs,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genfun::{embed, DistSpec, Orientation, SmoothFn};
    use crate::mollifier::Mollifier;

    fn line() -> SpatialGrid {
        SpatialGrid::line(-2.0, 2.0, 1024).unwrap()
    }

    fn eps() -> EpsGrid {
        EpsGrid::dyadic(4, 24).unwrap()
    }

    fn emb(d: &DistSpec) -> GridFn {
        embed(d, &Mollifier::bump(), ScaleFn::Log, &line(), &eps()).unwrap()
    }

    #[test]
    fn cutoff_shape() {
        let g = line();
        let phi = cutoff(&[0.0], 0.5, &g).unwrap();
        assert_eq!(phi[g.axis(0).nearest(0.0)], 1.0);
        assert_eq!(phi[g.axis(0).nearest(0.8)], 0.0);
        let integral: f64 = phi.iter().sum::<f64>() * g.axis(0).h();
        assert!(integral > 0.0 && integral <= 1.0);
        assert!(matches!(
            cutoff(&[1.8], 0.5, &g),
            Err(Error::OutOfDomain(_))
        ));
    }

    #[test]
    fn cone_validation() {
        let g = line();
        assert!(ConeSpec::new(vec![0.0], 0.5, vec![1.0])
            .validate(&g)
            .is_ok());
        assert!(ConeSpec::new(vec![0.0], 0.5, vec![2.0])
            .validate(&g)
            .is_err());
        let mut c = ConeSpec::new(vec![0.0], 0.5, vec![1.0]);
        c.band = Some([1.0, 100.0]);
        assert!(c.validate(&g).is_err());
        c.band = Some([10.0, 1e4]);
        assert!(c.validate(&g).is_err());
        c.band = None;
        c.theta = PI / 2.0;
        assert!(c.validate(&g).is_err());
    }

    #[test]
    fn delta_profile_grows_like_gamma_power() {
        let u = emb(&DistSpec::Delta { x0: 0.0 });
        let c = ConeSpec::new(vec![0.0], 0.5, vec![1.0]);
        let p = cone_decay_profile(&u, &c, &[0, 2, 4, 6], ScaleFn::Log).unwrap();
        let v = microlocal_verdict(&p, ScaleFn::Log, 0.25).unwrap();
        assert!(!v.regular);
        assert!((v.slope - 1.0).abs() < 0.4, "{v:?}");
        // monotone in l
        for row in &p.s {
            assert!(row.windows(2).all(|w| w[1] >= w[0]));
        }
        let far = ConeSpec::new(vec![1.0], 0.5, vec![-1.0]);
        let p = cone_decay_profile(&u, &far, &[0, 2, 4, 6], ScaleFn::Log).unwrap();
        let v = microlocal_verdict(&p, ScaleFn::Log, 0.25).unwrap();
        assert!(v.regular, "{v:?}");
    }

    #[test]
    fn scan_delta_and_heaviside() {
        let base: Vec<Vec<f64>> = (-3..=3).map(|i| vec![0.5 * i as f64]).collect();
        let dirs = vec![vec![1.0], vec![-1.0]];
        let params = WfParams::new(0.5, vec![0, 2, 4, 6], ScaleFn::Log);
        for d in [
            DistSpec::Delta { x0: 0.0 },
            DistSpec::Heaviside {
                x0: 0.0,
                orientation: Orientation::Right,
            },
        ] {
            let r = wf_scan(&emb(&d), &base, &dirs, &params).unwrap();
            for (b, x) in base.iter().enumerate() {
                for j in 0..2 {
                    let e = r.entry(b, j);
                    assert_eq!(e.singular, Some(x[0] == 0.0), "{d:?} at {x:?}: {e:?}");
                }
            }
        }
        let smooth = DistSpec::Smooth {
            f: SmoothFn::Sine {
                freq: 3.0,
                phase: 0.0,
                amplitude: 1.0,
            },
        };
        let r = wf_scan(&emb(&smooth), &base, &dirs, &params).unwrap();
        assert_eq!(r.singular().count(), 0);
    }

    #[test]
    fn clipped_pairs_are_recorded() {
        let u = emb(&DistSpec::Delta { x0: 0.0 });
        let params = WfParams::new(0.5, vec![0, 2, 4, 6], ScaleFn::Log);
        let r = wf_scan(&u, &[vec![1.9], vec![0.0]], &[vec![1.0]], &params).unwrap();
        assert!(r.entries[0].error.is_some() && r.entries[0].singular.is_none());
        assert_eq!(r.entries[1].singular, Some(true));
    }

    #[test]
    fn verdict_preconditions() {
        let p = DecayProfile {
            l_values: vec![0, 1, 2],
            eps: eps().values().to_vec(),
            s: vec![vec![1.0; 3]; 21],
            scale: ScaleFn::Log,
        };
        assert!(matches!(
            microlocal_verdict(&p, ScaleFn::Log, 0.25),
            Err(Error::TooFewPoints { .. })
        ));
        let p = DecayProfile {
            l_values: vec![0, 1, 2, 3],
            s: vec![vec![0.0; 4]; 21],
            ..p
        };
        let v = microlocal_verdict(&p, ScaleFn::Log, 0.25).unwrap();
        assert!(v.regular && v.slope == 0.0);
    }
}
