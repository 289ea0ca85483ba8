//! Slow-scale symbol nets: class membership, micro-ellipticity, left
//! quantization and the noncharacteristic regularity example.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::genfun::{is_ginfty, GInftyReport, GridFn};
use crate::grid::SpatialGrid;
use crate::mollifier::Mollifier;
use crate::scale::{is_slow_scale, EpsGrid, GenNumber, ScaleFn, FIT_TOL};
use crate::transport::ThetaField;

/// Closed-form symbol families `a_eps(x, xi)`.
#[derive(Clone, Debug, PartialEq)]
pub enum SymbolFamily {
    /// `<xi>`
    Bracket,
    /// `xi_1`
    Xi,
    /// `i xi_1`, the symbol of `d/dx`.
    IXi,
    /// `1 + c_eps x_1^2`
    OnePlusCx2 {
        c: ScaleFn,
    },
    /// `tau + Theta_eps(x) xi` on `(x, t; xi, tau)`.
    Transport {
        scale: ScaleFn,
    },
    Const {
        value: f64,
    },
    /// `w_eps a_eps`
    Weighted {
        weight: ScaleFn,
        inner: Box<SymbolFamily>,
    },
    Sum {
        terms: Vec<SymbolFamily>,
    },
}

fn bracket(xi: &[f64]) -> f64 {
    (1.0 + xi.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

impl SymbolFamily {
    pub fn order(&self) -> f64 {
        match self {
            SymbolFamily::Bracket
            | SymbolFamily::Xi
            | SymbolFamily::IXi
            | SymbolFamily::Transport { .. } => 1.0,
            SymbolFamily::OnePlusCx2 { .. } | SymbolFamily::Const { .. } => 0.0,
            SymbolFamily::Weighted { inner, .. } => inner.order(),
            SymbolFamily::Sum { terms } => terms
                .iter()
                .map(|t| t.order())
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// Required dimension, if fixed.
    pub fn dim(&self) -> Option<usize> {
        match self {
            SymbolFamily::Transport { .. } => Some(2),
            SymbolFamily::Weighted { inner, .. } => inner.dim(),
            SymbolFamily::Sum { terms } => terms.iter().find_map(|t| t.dim()),
            _ => None,
        }
    }

    pub fn x_independent(&self) -> bool {
        match self {
            SymbolFamily::OnePlusCx2 { .. } | SymbolFamily::Transport { .. } => false,
            SymbolFamily::Weighted { inner, .. } => inner.x_independent(),
            SymbolFamily::Sum { terms } => terms.iter().all(|t| t.x_independent()),
            _ => true,
        }
    }

    pub fn is_real(&self) -> bool {
        match self {
            SymbolFamily::IXi => false,
            SymbolFamily::Weighted { inner, .. } => inner.is_real(),
            SymbolFamily::Sum { terms } => terms.iter().all(|t| t.is_real()),
            _ => true,
        }
    }

    pub fn eval(&self, eps: f64, x: &[f64], xi: &[f64]) -> Complex64 {
        let re = |v: f64| Complex64::new(v, 0.0);
        match self {
            SymbolFamily::Bracket => re(bracket(xi)),
            SymbolFamily::Xi => re(xi[0]),
            SymbolFamily::IXi => Complex64::new(0.0, xi[0]),
            SymbolFamily::OnePlusCx2 { c } => re(1.0 + c.eval(eps) * x[0] * x[0]),
            SymbolFamily::Transport { scale } => {
                let th = ThetaField {
                    mollifier: Mollifier::bump(),
                    scale: *scale,
                };
                re(xi[1] + th.theta(eps, x[0]) * xi[0])
            }
            SymbolFamily::Const { value } => re(*value),
            SymbolFamily::Weighted { weight, inner } => inner.eval(eps, x, xi) * weight.eval(eps),
            SymbolFamily::Sum { terms } => terms.iter().map(|t| t.eval(eps, x, xi)).sum(),
        }
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        match self.dim() {
            Some(n) if n != d => Err(invalid(
                "symbol",
                format!("{self} needs dimension {n}, got {d}"),
            )),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for SymbolFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymbolFamily::Bracket => f.write_str("bracket"),
            SymbolFamily::Xi => f.write_str("xi"),
            SymbolFamily::IXi => f.write_str("multiplier:i*xi"),
            SymbolFamily::OnePlusCx2 { c } => write!(f, "1+c*x^2;c={c}"),
            SymbolFamily::Transport { scale } => write!(f, "transport:tau+theta*xi;scale={scale}"),
            SymbolFamily::Const { value } => write!(f, "const:{value}"),
            SymbolFamily::Weighted { weight, inner } => write!(f, "scaled:{weight}:{inner}"),
            SymbolFamily::Sum { terms } => {
                f.write_str("sum[")?;
                for (i, t) in terms.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" | ")?;
                    }
                    write!(f, "{t}")?;
                }
                f.write_str("]")
            }
        }
    }
}

fn param(rest: &str, key: &str) -> Result<ScaleFn> {
    match rest.strip_prefix(';') {
        None if rest.is_empty() => Ok(ScaleFn::Log),
        Some(p) => match p.split_once('=') {
            Some((k, v)) if k.trim() == key => v.trim().parse(),
            _ => Err(Error::Parse(format!("expected `{key}=<scale>`, got `{p}`"))),
        },
        None => Err(Error::Parse(format!("trailing `{rest}`"))),
    }
}

/// Splits on `|` at bracket depth zero.
fn split_top(s: &str) -> Result<Vec<&str>> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, ch) in s.char_indices() {
        match ch {
            '[' => depth += 1,
            ']' => depth -= 1,
            '|' if depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
        if depth < 0 {
            return Err(Error::Parse("unbalanced `]`".into()));
        }
    }
    if depth != 0 {
        return Err(Error::Parse("unbalanced `[`".into()));
    }
    out.push(&s[start..]);
    Ok(out)
}

fn parse_depth(s: &str, depth: usize) -> Result<SymbolFamily> {
    if depth > 8 {
        return Err(Error::Parse("symbol nested too deeply".into()));
    }
    let s = s.trim();
    if let Some(inner) = s.strip_prefix("sum[").and_then(|r| r.strip_suffix(']')) {
        let terms = split_top(inner)?
            .into_iter()
            .map(|t| parse_depth(t, depth + 1))
            .collect::<Result<Vec<_>>>()?;
        if terms.is_empty() {
            return Err(Error::Parse("empty sum".into()));
        }
        return Ok(SymbolFamily::Sum { terms });
    }
    if let Some(r) = s.strip_prefix("scaled:") {
        // the scale tag itself may contain one colon (`pow:p`, `const:c`)
        let mut parts = r.splitn(3, ':');
        let a = parts.next().unwrap_or("");
        let b = parts
            .next()
            .ok_or_else(|| Error::Parse(format!("bad scaled symbol `{s}`")))?;
        if let Ok(w) = a.parse::<ScaleFn>() {
            if !matches!(a, "pow" | "const") {
                let rest = &r[a.len() + 1..];
                return Ok(SymbolFamily::Weighted {
                    weight: w,
                    inner: Box::new(parse_depth(rest, depth + 1)?),
                });
            }
        }
        let tag = format!("{a}:{b}");
        let w: ScaleFn = tag.parse()?;
        let rest = parts
            .next()
            .ok_or_else(|| Error::Parse(format!("bad scaled symbol `{s}`")))?;
        return Ok(SymbolFamily::Weighted {
            weight: w,
            inner: Box::new(parse_depth(rest, depth + 1)?),
        });
    }
    if let Some(v) = s.strip_prefix("const:") {
        let value: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad constant `{v}`")))?;
        if !value.is_finite() {
            return Err(Error::Parse("non-finite constant".into()));
        }
        return Ok(SymbolFamily::Const { value });
    }
    if let Some(r) = s.strip_prefix("1+c*x^2") {
        return Ok(SymbolFamily::OnePlusCx2 { c: param(r, "c")? });
    }
    if let Some(r) = s.strip_prefix("transport:tau+theta*xi") {
        return Ok(SymbolFamily::Transport {
            scale: param(r, "scale")?,
        });
    }
    match s {
        "bracket" | "<xi>" => Ok(SymbolFamily::Bracket),
        "xi" => Ok(SymbolFamily::Xi),
        "multiplier:i*xi" | "i*xi" => Ok(SymbolFamily::IXi),
        "const" => Ok(SymbolFamily::Const { value: 1.0 }),
        _ => Err(Error::Parse(format!("unknown symbol `{s}`"))),
    }
}

impl FromStr for SymbolFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_depth(s, 0)
    }
}

impl Serialize for SymbolFamily {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SymbolFamily {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Mixed central difference; `orders[j]` counts derivatives in coordinate
/// `j` of the point `p = (x, xi)`.
fn mixed_diff(
    f: &dyn Fn(&[f64]) -> Complex64,
    p: &[f64],
    orders: &mut [usize],
    steps: &[f64],
) -> Complex64 {
    match orders.iter().position(|&o| o > 0) {
        None => f(p),
        Some(j) => {
            orders[j] -= 1;
            let mut q = p.to_vec();
            q[j] = p[j] + steps[j];
            let a = mixed_diff(f, &q, orders, steps);
            q[j] = p[j] - steps[j];
            let b = mixed_diff(f, &q, orders, steps);
            orders[j] += 1;
            (a - b) / (2.0 * steps[j])
        }
    }
}

fn multi_indices(d: usize, max: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![0; d]];
    for _ in 0..max {
        let mut next = out.clone();
        for a in &out {
            for j in 0..d {
                let mut b = a.clone();
                b[j] += 1;
                if !next.contains(&b) {
                    next.push(b);
                }
            }
        }
        out = next;
    }
    out
}

fn frequencies(d: usize, max_mag: f64) -> Vec<Vec<f64>> {
    let mags: Vec<f64> = std::iter::once(0.0)
        .chain((0..30).map(|i| 0.1 * (max_mag / 0.1).powf(i as f64 / 29.0)))
        .collect();
    let dirs: Vec<Vec<f64>> = match d {
        1 => vec![vec![1.0], vec![-1.0]],
        _ => (0..16)
            .map(|j| {
                let a = 2.0 * PI * j as f64 / 16.0;
                vec![a.cos(), a.sin()]
            })
            .collect(),
    };
    let mut out = Vec::new();
    for &m in &mags {
        for u in &dirs {
            out.push(u.iter().map(|c| c * m).collect());
            if m == 0.0 {
                break;
            }
        }
    }
    out
}

fn box_points(k: &[(f64, f64)], per_axis: usize) -> Vec<Vec<f64>> {
    let axis = |&(lo, hi): &(f64, f64)| -> Vec<f64> {
        (0..per_axis)
            .map(|i| lo + (hi - lo) * i as f64 / (per_axis - 1) as f64)
            .collect()
    };
    match k {
        [a] => axis(a).into_iter().map(|x| vec![x]).collect(),
        [a, b] => {
            let (xs, ys) = (axis(a), axis(b));
            ys.iter()
                .flat_map(|&y| xs.iter().map(move |&x| vec![x, y]))
                .collect()
        }
        _ => Vec::new(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolClassReport {
    pub in_class: bool,
    /// Pointwise max over the tested (alpha, beta) of the weighted sups,
    /// floored at 1.
    pub majorant: Vec<f64>,
}

/// Tests `sup_K <xi>^{-m+|alpha|} |d_xi^alpha d_x^beta a_eps| <= c w_eps`
/// with a common slow-scale `w`, by finite differences on a sample of
/// `K x R^d`.
pub fn check_symbol_class(
    a: &SymbolFamily,
    eps: &EpsGrid,
    k: &[(f64, f64)],
    alpha_max: usize,
    beta_max: usize,
) -> Result<SymbolClassReport> {
    let d = k.len();
    if d == 0 || d > 2 || k.iter().any(|&(lo, hi)| !(lo < hi)) {
        return Err(invalid("K", "need a nonempty box in dimension 1 or 2"));
    }
    a.check_dim(d)?;
    if alpha_max + beta_max > 4 {
        return Err(invalid("alpha_max", "total derivative order above 4"));
    }
    let m = a.order();
    let xs = box_points(k, if d == 1 { 41 } else { 13 });
    let xis = frequencies(d, 1e4);
    let alphas = multi_indices(d, alpha_max);
    let betas = multi_indices(d, beta_max);
    let majorant: Vec<f64> = eps
        .values()
        .par_iter()
        .map(|&e| {
            let f = |p: &[f64]| a.eval(e, &p[..d], &p[d..]);
            let mut sup: f64 = 1.0;
            for x in &xs {
                for xi in &xis {
                    let br = bracket(xi);
                    let mut p = x.clone();
                    p.extend_from_slice(xi);
                    let mut steps = vec![1e-3; d];
                    steps.extend(std::iter::repeat(1e-3 * br).take(d));
                    for al in &alphas {
                        for be in &betas {
                            let mut orders: Vec<usize> =
                                be.iter().chain(al.iter()).copied().collect();
                            let v = mixed_diff(&f, &p, &mut orders, &steps).norm();
                            let na: usize = al.iter().sum();
                            sup = sup.max(br.powf(-m + na as f64) * v);
                        }
                    }
                }
            }
            sup
        })
        .collect();
    let net = GenNumber::from_reals(eps, &majorant)?;
    Ok(SymbolClassReport {
        in_class: is_slow_scale(&net, FIT_TOL)?,
        majorant,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipticityReport {
    pub x0: Vec<f64>,
    pub xi0: Vec<f64>,
    pub u_radius: f64,
    pub cone_angle: f64,
    pub band: [f64; 2],
    /// Greedy witnesses per eps; `None` where no radius works.
    pub r: Vec<Option<f64>>,
    pub s: Vec<Option<f64>>,
    pub r_slow: bool,
    pub s_slow: bool,
    pub elliptic: bool,
    pub diagnostic: Option<String>,
}

/// Fits the smallest `r_eps` and the matching `s_eps` of the lower bound
/// `|a_eps| >= <xi>^m / s_eps` on `U x Gamma, |xi| >= r_eps` and tests both
/// for slow-scale growth.
pub fn micro_elliptic(
    a: &SymbolFamily,
    eps: &EpsGrid,
    x0: &[f64],
    xi0: &[f64],
    u_radius: f64,
    cone_angle: f64,
    band: [f64; 2],
) -> Result<EllipticityReport> {
    let d = x0.len();
    if d == 0 || d > 2 || xi0.len() != d {
        return Err(invalid("x0", "dimension must be 1 or 2 and match xi0"));
    }
    a.check_dim(d)?;
    if !(u_radius > 0.0) {
        return Err(invalid("u_radius", format!("{u_radius} is not positive")));
    }
    if !(cone_angle > 0.0 && cone_angle < PI / 2.0) {
        return Err(invalid(
            "cone_angle",
            format!("{cone_angle} not in (0, pi/2)"),
        ));
    }
    if !(band[0] > 0.0 && band[0] < band[1] && band[1].is_finite()) {
        return Err(invalid(
            "band",
            format!("{band:?} is not a positive interval"),
        ));
    }
    let n0 = xi0.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(n0 > 0.0) {
        return Err(invalid("xi0", "zero direction"));
    }
    let m = a.order();
    let region: Vec<(f64, f64)> = x0.iter().map(|&c| (c - u_radius, c + u_radius)).collect();
    let xs = box_points(&region, if d == 1 { 41 } else { 21 });
    let dirs: Vec<Vec<f64>> = match d {
        1 => vec![vec![xi0[0].signum()]],
        _ => {
            let phi = xi0[1].atan2(xi0[0]);
            (0..=16)
                .map(|j| {
                    let a = phi - cone_angle + 2.0 * cone_angle * j as f64 / 16.0;
                    vec![a.cos(), a.sin()]
                })
                .collect()
        }
    };
    let mags: Vec<f64> = (0..40)
        .map(|i| band[0] * (band[1] / band[0]).powf(i as f64 / 39.0))
        .collect();
    let real = a.is_real();
    // shell j: min |a| / <xi>^m, zero if a sign change is seen
    let per_eps: Vec<(Option<f64>, Option<f64>)> = eps
        .values()
        .par_iter()
        .map(|&e| {
            let q: Vec<f64> = mags
                .iter()
                .map(|&rho| {
                    let vals: Vec<Vec<f64>> = dirs
                        .iter()
                        .map(|u| {
                            let xi: Vec<f64> = u.iter().map(|c| c * rho).collect();
                            let w = bracket(&xi).powf(m);
                            xs.iter()
                                .map(|x| {
                                    let v = a.eval(e, x, &xi);
                                    if real {
                                        v.re / w
                                    } else {
                                        v.norm() / w
                                    }
                                })
                                .collect()
                        })
                        .collect();
                    let mut min = f64::INFINITY;
                    let mut sign_change = false;
                    let signs_differ =
                        |p: f64, q: f64| p == 0.0 || q == 0.0 || (p > 0.0) != (q > 0.0);
                    for (di, row) in vals.iter().enumerate() {
                        for (xi_idx, &v) in row.iter().enumerate() {
                            min = min.min(v.abs());
                            if real {
                                // neighbours in x along axis 0 and in direction
                                if xi_idx + 1 < row.len()
                                    && (xi_idx + 1) % if d == 1 { row.len() } else { 21 } != 0
                                {
                                    sign_change |= signs_differ(v, row[xi_idx + 1]);
                                }
                                if d == 2 && xi_idx + 21 < row.len() {
                                    sign_change |= signs_differ(v, row[xi_idx + 21]);
                                }
                                if di + 1 < vals.len() {
                                    sign_change |= signs_differ(v, vals[di + 1][xi_idx]);
                                }
                            }
                        }
                    }
                    if sign_change || min <= 1e-14 {
                        0.0
                    } else {
                        min
                    }
                })
                .collect();
            let mut start = None;
            for j in (0..q.len()).rev() {
                if q[j] > 0.0 {
                    start = Some(j);
                } else {
                    break;
                }
            }
            match start {
                None => (None, None),
                Some(j) => {
                    let qmin = q[j..].iter().copied().fold(f64::INFINITY, f64::min);
                    (Some(mags[j]), Some(1.0 / qmin))
                }
            }
        })
        .collect();
    let r: Vec<Option<f64>> = per_eps.iter().map(|p| p.0).collect();
    let s: Vec<Option<f64>> = per_eps.iter().map(|p| p.1).collect();
    let missing = r.iter().position(Option::is_none);
    let (r_slow, s_slow, diagnostic) = match missing {
        Some(k) => (
            false,
            false,
            Some(format!(
                "symbol vanishes on U x Gamma at every tested |xi| up to {} for eps = {:e}",
                band[1],
                eps.get(k)
            )),
        ),
        None => {
            let rn = GenNumber::from_reals(
                eps,
                &r.iter().map(|v| v.unwrap_or(1.0)).collect::<Vec<_>>(),
            )?;
            let sn = GenNumber::from_reals(
                eps,
                &s.iter().map(|v| v.unwrap_or(1.0)).collect::<Vec<_>>(),
            )?;
            (
                is_slow_scale(&rn, FIT_TOL)?,
                is_slow_scale(&sn, FIT_TOL)?,
                None,
            )
        }
    };
    Ok(EllipticityReport {
        x0: x0.to_vec(),
        xi0: xi0.to_vec(),
        u_radius,
        cone_angle,
        band,
        r,
        s,
        r_slow,
        s_slow,
        elliptic: r_slow && s_slow,
        diagnostic,
    })
}

fn signed_freq(j: usize, n: usize, h: f64) -> f64 {
    let m = if j < n.div_ceil(2) {
        j as f64
    } else {
        j as f64 - n as f64
    };
    2.0 * PI * m / (n as f64 * h)
}

/// Left quantization `sum_xi e^{i x xi} a(x, xi) u^(xi)` per eps over the
/// grid's discrete frequencies, truncated at 0.8 of Nyquist per axis.
pub fn quantize_apply(a: &SymbolFamily, u: &GridFn) -> Result<GridFn> {
    let grid = u.grid();
    let d = grid.dim();
    a.check_dim(d)?;
    let shape = grid.shape();
    let hs: Vec<f64> = grid.axes().iter().map(|ax| ax.h()).collect();
    let total = grid.len();
    // frequency vector per flat bin, None when truncated
    let freqs: Vec<Option<Vec<f64>>> = (0..total)
        .map(|flat| {
            let idx = grid.multi(flat);
            let k: Vec<f64> = (0..d)
                .map(|j| signed_freq(idx[j], shape[j], hs[j]))
                .collect();
            let keep = (0..d).all(|j| k[j].abs() <= 0.8 * PI / hs[j]);
            keep.then_some(k)
        })
        .collect();
    let mut planner = FftPlanner::new();
    let fwd: Vec<_> = shape.iter().map(|&n| planner.plan_fft_forward(n)).collect();
    let inv: Vec<_> = shape.iter().map(|&n| planner.plan_fft_inverse(n)).collect();
    let transform = |buf: &mut [Complex64], plans: &[std::sync::Arc<dyn rustfft::Fft<f64>>]| {
        plans[0].process(buf);
        if d == 2 {
            let (n0, n1) = (shape[0], shape[1]);
            let mut col = vec![Complex64::new(0.0, 0.0); n1];
            for i in 0..n0 {
                for (j, c) in col.iter_mut().enumerate() {
                    *c = buf[j * n0 + i];
                }
                plans[1].process(&mut col);
                for (j, c) in col.iter().enumerate() {
                    buf[j * n0 + i] = *c;
                }
            }
        }
    };
    let xi_indep = a.x_independent();
    let points: Vec<Vec<f64>> = (0..total).map(|f| grid.point(f)).collect();
    let samples: Vec<Vec<Complex64>> = u
        .eps()
        .values()
        .iter()
        .zip(u.samples())
        .map(|(&e, s)| {
            let mut hat = s.clone();
            transform(&mut hat, &fwd);
            let scale = 1.0 / total as f64;
            if xi_indep {
                let zero = vec![0.0; d];
                for (b, f) in hat.iter_mut().zip(&freqs) {
                    *b = match f {
                        Some(k) => *b * a.eval(e, &zero, k) * scale,
                        None => Complex64::new(0.0, 0.0),
                    };
                }
                transform(&mut hat, &inv);
                hat
            } else {
                // direct sum per x
                let kept: Vec<(usize, &Vec<f64>)> = freqs
                    .iter()
                    .enumerate()
                    .filter_map(|(b, f)| f.as_ref().map(|k| (b, k)))
                    .collect();
                points
                    .par_iter()
                    .enumerate()
                    .map(|(flat, x)| {
                        let idx = grid.multi(flat);
                        let mut acc = Complex64::new(0.0, 0.0);
                        for &(b, k) in &kept {
                            let bi = grid.multi(b);
                            let phase: f64 = (0..d)
                                .map(|j| 2.0 * PI * (idx[j] * bi[j]) as f64 / shape[j] as f64)
                                .sum();
                            acc += a.eval(e, x, k) * hat[b] * Complex64::from_polar(1.0, phase);
                        }
                        acc * scale
                    })
                    .collect()
            }
        })
        .collect();
    GridFn::new(grid.clone(), u.eps().clone(), samples)
}

#[derive(Clone, Debug, Serialize)]
pub struct NoncharReport {
    pub c: ScaleFn,
    pub regular: bool,
    pub ginfty: GInftyReport,
}

/// `u_eps = 1 / (1 + c_eps x^2)`, the solution of `p_eps u = 1` with
/// `p_eps = 1 + c_eps x^2`, tested for G-infinity regularity.
pub fn nonchar_example(
    c: ScaleFn,
    alpha_max: usize,
    grid: &SpatialGrid,
    eps: &EpsGrid,
    slope_tol: f64,
) -> Result<NoncharReport> {
    if grid.dim() != 1 {
        return Err(invalid("grid", "one-dimensional only"));
    }
    let cs: Vec<f64> = eps.values().iter().map(|&e| c.eval(e)).collect();
    if let Some(k) = cs.iter().position(|&v| !(v >= 0.0 && v.is_finite())) {
        return Err(Error::NotPositive {
            index: k,
            value: cs[k],
        });
    }
    let u = GridFn::from_real_fn(grid, eps, |k, _, x| 1.0 / (1.0 + cs[k] * x[0] * x[0]))?;
    let ax = grid.axis(0);
    let ginfty = is_ginfty(&u, &[(ax.min, ax.max)], alpha_max, slope_tol)?;
    Ok(NoncharReport {
        c,
        regular: ginfty.regular,
        ginfty,
    })
}

/// Default setting of the example: 8193 nodes on [-1, 1], eps = 2^-2..2^-16.
pub fn nonchar_default_setup() -> Result<(SpatialGrid, EpsGrid)> {
    Ok((SpatialGrid::line(-1.0, 1.0, 8193)?, EpsGrid::dyadic(2, 16)?))
}
