//! Epsilon grids, generalized numbers as sampled nets, valuations and
//! slow-scale classification.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fit::line_fit;

/// Minimum number of grid points for any valuation estimate.
pub const MIN_FIT_POINTS: usize = 8;

/// Default exponent tolerance for asymptotic comparisons.
pub const FIT_TOL: f64 = 0.05;

/// Default fraction of the grid (smallest epsilons) used by the fits.
pub const TAIL_FRACTION: f64 = 0.5;

/// Strictly decreasing regularization parameters in (0, 1].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EpsGrid {
    values: Arc<[f64]>,
}

impl EpsGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidEpsGrid("empty".into()));
        }
        for (k, &e) in values.iter().enumerate() {
            if !(e > 0.0 && e <= 1.0) {
                return Err(Error::InvalidEpsGrid(format!(
                    "eps[{k}] = {e} not in (0, 1]"
                )));
            }
            if k > 0 && e >= values[k - 1] {
                return Err(Error::InvalidEpsGrid(format!(
                    "not strictly decreasing at index {k}"
                )));
            }
        }
        Ok(Self {
            values: values.into(),
        })
    }

    /// `eps0 * ratio^k` for `k = 0..count`.
    pub fn geometric(eps0: f64, ratio: f64, count: usize) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(invalid("ratio", format!("{ratio} not in (0, 1)")));
        }
        if !(eps0 > 0.0 && eps0 <= 1.0) {
            return Err(invalid("eps0", format!("{eps0} not in (0, 1]")));
        }
        if count == 0 {
            return Err(invalid("count", "must be positive"));
        }
        Self::new((0..count).map(|k| eps0 * ratio.powi(k as i32)).collect())
    }

    /// `2^-k` for `k` in the inclusive range.
    pub fn dyadic(k_first: i32, k_last: i32) -> Result<Self> {
        Self::new((k_first..=k_last).map(|k| 2f64.powi(-k)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, k: usize) -> f64 {
        self.values[k]
    }

    /// Index window holding the smallest `ceil(fraction * len)` epsilons,
    /// never fewer than two.
    pub fn tail(&self, fraction: f64) -> Range<usize> {
        let n = self.len();
        let m = ((fraction * n as f64).ceil() as usize).clamp(2.min(n), n);
        n - m..n
    }

    pub fn same_as(&self, other: &EpsGrid) -> bool {
        Arc::ptr_eq(&self.values, &other.values) || self.values == other.values
    }
}

impl PartialEq for EpsGrid {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

impl TryFrom<Vec<f64>> for EpsGrid {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<EpsGrid> for Vec<f64> {
    fn from(g: EpsGrid) -> Self {
        g.values.to_vec()
    }
}

/// A complex value per grid epsilon.
#[derive(Clone, Debug, PartialEq)]
pub struct GenNumber {
    grid: EpsGrid,
    values: Vec<Complex64>,
}

impl GenNumber {
    pub fn new(grid: EpsGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} grid points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(k));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: &EpsGrid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = grid.values().iter().map(|&e| f(e)).collect();
        Self::new(grid.clone(), values)
    }

    pub fn real(grid: &EpsGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_fn(grid, |e| Complex64::new(f(e), 0.0))
    }

    pub fn from_reals(grid: &EpsGrid, values: &[f64]) -> Result<Self> {
        Self::new(
            grid.clone(),
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }

    pub fn zero(grid: &EpsGrid) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn grid(&self) -> &EpsGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn abs(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    pub fn re(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    fn zip_with(
        &self,
        other: &GenNumber,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<GenNumber> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch(
                "generalized numbers live on different epsilon grids".into(),
            ));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        GenNumber::new(self.grid.clone(), values)
    }

    pub fn checked_add(&self, other: &GenNumber) -> Result<GenNumber> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn checked_sub(&self, other: &GenNumber) -> Result<GenNumber> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn checked_mul(&self, other: &GenNumber) -> Result<GenNumber> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, c: Complex64) -> Result<GenNumber> {
        GenNumber::new(
            self.grid.clone(),
            self.values.iter().map(|&v| v * c).collect(),
        )
    }

    pub fn powi(&self, p: i32) -> Result<GenNumber> {
        GenNumber::new(
            self.grid.clone(),
            self.values.iter().map(|&v| v.powi(p)).collect(),
        )
    }

    pub fn map(&self, f: impl Fn(f64, Complex64) -> Complex64) -> Result<GenNumber> {
        let values = self
            .grid
            .values()
            .iter()
            .zip(&self.values)
            .map(|(&e, &v)| f(e, v))
            .collect();
        GenNumber::new(self.grid.clone(), values)
    }
}

/// `u_eps + v_eps` per epsilon.
pub fn gn_add(u: &GenNumber, v: &GenNumber) -> Result<GenNumber> {
    u.checked_add(v)
}

/// `u_eps * v_eps` per epsilon.
pub fn gn_mul(u: &GenNumber, v: &GenNumber) -> Result<GenNumber> {
    u.checked_mul(v)
}

/// Estimated exponent `b` with `|u_eps| = O(eps^b)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValuationEstimate {
    /// `f64::INFINITY` when the whole tail vanishes.
    pub b_hat: f64,
    /// RMS residual of the log-log fit.
    pub fit_residual: f64,
    pub window: Range<usize>,
    /// Exact zeros inside the window that were left out of the fit.
    pub excluded_zeros: usize,
}

impl ValuationEstimate {
    pub fn is_infinite(&self) -> bool {
        self.b_hat == f64::INFINITY
    }
}

fn check_tail(u: &GenNumber, tail_fraction: f64) -> Result<Range<usize>> {
    if u.len() < MIN_FIT_POINTS {
        return Err(Error::TooFewPoints {
            need: MIN_FIT_POINTS,
            got: u.len(),
        });
    }
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(invalid(
            "tail_fraction",
            format!("{tail_fraction} not in (0, 1]"),
        ));
    }
    Ok(u.grid.tail(tail_fraction))
}

/// Least-squares slope of `log|u|` against `log eps` over the tail window.
pub fn estimate_valuation(u: &GenNumber, tail_fraction: f64) -> Result<ValuationEstimate> {
    let window = check_tail(u, tail_fraction)?;
    let mut xs = Vec::with_capacity(window.len());
    let mut ys = Vec::with_capacity(window.len());
    for k in window.clone() {
        let a = u.values[k].norm();
        if a > 0.0 {
            xs.push(u.grid.get(k).ln());
            ys.push(a.ln());
        }
    }
    let excluded_zeros = window.len() - xs.len();
    let (b_hat, fit_residual) = match xs.len() {
        0 => (f64::INFINITY, 0.0),
        1 => (ys[0] / xs[0], 0.0),
        _ => {
            let f = line_fit(&xs, &ys).expect("distinct epsilons");
            (f.slope, f.rms)
        }
    };
    Ok(ValuationEstimate {
        b_hat,
        fit_residual,
        window,
        excluded_zeros,
    })
}

/// Valuation extrapolated to eps -> 0: local log-log slopes over the tail are
/// regressed on `1/|log eps|` and the intercept is returned. Logarithmic
/// factors, which bias a plain tail slope by `p/|log eps|`, drop out.
pub fn asymptotic_valuation(u: &GenNumber, tail_fraction: f64) -> Result<f64> {
    let window = check_tail(u, tail_fraction)?;
    let mut z = Vec::new();
    let mut sigma = Vec::new();
    for k in window.start..window.end - 1 {
        let (a, b) = (u.values[k].norm(), u.values[k + 1].norm());
        if a > 0.0 && b > 0.0 {
            let (la, lb) = (u.grid.get(k).ln(), u.grid.get(k + 1).ln());
            sigma.push((b.ln() - a.ln()) / (lb - la));
            z.push(2.0 / (la + lb).abs());
        }
    }
    if sigma.len() < 3 {
        return estimate_valuation(u, tail_fraction).map(|v| v.b_hat);
    }
    Ok(line_fit(&z, &sigma)
        .map(|f| f.intercept)
        .unwrap_or_else(|| sigma.iter().sum::<f64>() / sigma.len() as f64))
}

/// `exp(-b_hat)`, zero for an infinite valuation.
pub fn ultra_norm(u: &GenNumber) -> Result<f64> {
    let v = estimate_valuation(u, TAIL_FRACTION)?;
    Ok(if v.is_infinite() {
        0.0
    } else {
        (-v.b_hat).exp()
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetClass {
    Negligible,
    Moderate,
    Neither,
}

impl NetClass {
    pub fn is_moderate(self) -> bool {
        !matches!(self, NetClass::Neither)
    }
}

impl fmt::Display for NetClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NetClass::Negligible => "negligible",
            NetClass::Moderate => "moderate",
            NetClass::Neither => "neither",
        })
    }
}

pub fn classify(u: &GenNumber, n_max: u32, q_max: u32) -> Result<NetClass> {
    let b = estimate_valuation(u, TAIL_FRACTION)?.b_hat;
    Ok(if b >= q_max as f64 {
        NetClass::Negligible
    } else if b >= -(n_max as f64) {
        NetClass::Moderate
    } else {
        NetClass::Neither
    })
}

/// Membership in the strongly positive slow-scale nets: bounded below by a
/// positive constant and of valuation zero. The valuation is accepted when
/// either the plain tail slope or its extrapolation to eps -> 0 reaches
/// `-tol`; powers of `log(1/eps)` pass the second, bounded jumpy nets the
/// first, while any `eps^-a` with `a > tol` fails both.
pub fn is_slow_scale(w: &GenNumber, tol: f64) -> Result<bool> {
    for (k, v) in w.values().iter().enumerate() {
        if v.im != 0.0 || !(v.re > 0.0) {
            return Err(Error::NotPositive {
                index: k,
                value: v.re,
            });
        }
    }
    let plain = estimate_valuation(w, TAIL_FRACTION)?.b_hat;
    if plain >= -tol {
        return Ok(true);
    }
    Ok(asymptotic_valuation(w, TAIL_FRACTION)? >= -tol)
}

/// Growth scale `gamma_eps`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ScaleFn {
    /// `log(1/eps)`
    Log,
    /// `eps^-p`
    Pow(f64),
    /// fixed value
    Const(f64),
}

impl ScaleFn {
    pub fn eval(&self, eps: f64) -> f64 {
        match *self {
            ScaleFn::Log => -eps.ln(),
            ScaleFn::Pow(p) => eps.powf(-p),
            ScaleFn::Const(c) => c,
        }
    }

    /// Values on the grid, checked to be positive and nondecreasing as eps
    /// decreases.
    pub fn gammas(&self, eps: &EpsGrid) -> Result<Vec<f64>> {
        let g: Vec<f64> = eps.values().iter().map(|&e| self.eval(e)).collect();
        for (k, &v) in g.iter().enumerate() {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(
                    "scale",
                    format!("{self} gives {v} at eps[{k}] = {}", eps.get(k)),
                ));
            }
            if k > 0 && v < g[k - 1] {
                return Err(invalid("scale", format!("{self} decreases at eps[{k}]")));
            }
        }
        Ok(g)
    }

    pub fn net(&self, eps: &EpsGrid) -> Result<GenNumber> {
        GenNumber::real(eps, |e| self.eval(e))
    }

    pub fn is_const(&self) -> bool {
        matches!(self, ScaleFn::Const(_)) || matches!(self, ScaleFn::Pow(p) if *p == 0.0)
    }
}

impl fmt::Display for ScaleFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScaleFn::Log => f.write_str("log"),
            ScaleFn::Pow(p) => write!(f, "pow:{p}"),
            ScaleFn::Const(c) if *c == 1.0 => f.write_str("const"),
            ScaleFn::Const(c) => write!(f, "const:{c}"),
        }
    }
}

impl FromStr for ScaleFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let num = |t: &str| -> Result<f64> {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse(format!("bad number `{t}` in scale tag `{s}`")))
        };
        match s.split_once(':') {
            None if s == "log" => Ok(ScaleFn::Log),
            None if s == "const" => Ok(ScaleFn::Const(1.0)),
            Some(("pow", p)) => {
                let p = num(p)?;
                if p < 0.0 {
                    return Err(Error::Parse(format!("pow exponent must be >= 0 in `{s}`")));
                }
                Ok(ScaleFn::Pow(p))
            }
            Some(("const", c)) => {
                let c = num(c)?;
                if c <= 0.0 {
                    return Err(Error::Parse(format!("constant scale must be > 0 in `{s}`")));
                }
                Ok(ScaleFn::Const(c))
            }
            _ => Err(Error::Parse(format!(
                "unknown scale tag `{s}` (expected log, pow:p, const or const:c)"
            ))),
        }
    }
}

impl TryFrom<String> for ScaleFn {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ScaleFn> for String {
    fn from(s: ScaleFn) -> Self {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dyadic() -> EpsGrid {
        EpsGrid::dyadic(4, 24).unwrap()
    }

    #[test]
    fn geometric_grid() {
        let g = EpsGrid::geometric(0.5, 0.5, 3).unwrap();
        assert_eq!(g.values(), &[0.5, 0.25, 0.125]);
        let g = EpsGrid::geometric(1.0, 0.5, 8).unwrap();
        assert_eq!(*g.values().last().unwrap(), 1.0 / 128.0);
        assert!(EpsGrid::geometric(0.5, 1.5, 4).is_err());
        assert!(EpsGrid::geometric(1.5, 0.5, 4).is_err());
        assert!(EpsGrid::new(vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn tail_window() {
        let g = dyadic();
        assert_eq!(g.tail(0.5), 10..21);
        assert_eq!(g.tail(1.0), 0..21);
        assert_eq!(g.tail(1e-9), 19..21);
    }

    #[test]
    fn power_valuations() {
        let g = dyadic();
        let u = GenNumber::real(&g, |e| e * e).unwrap();
        assert!((estimate_valuation(&u, 0.5).unwrap().b_hat - 2.0).abs() < 1e-9);
        let u = GenNumber::real(&g, |e| 5.0 * e.powf(-1.5)).unwrap();
        assert!((estimate_valuation(&u, 0.5).unwrap().b_hat + 1.5).abs() < 1e-9);
    }

    #[test]
    fn sum_of_powers_against_scan() {
        let g = dyadic();
        let u = GenNumber::real(&g, |e| e * e + e.powi(3)).unwrap();
        let b = estimate_valuation(&u, 0.5).unwrap().b_hat;
        // largest b on a lattice with |u| <= C eps^b over the tail, C fixed by
        // the first tail point
        let t = g.tail(0.5);
        let mut best = f64::NEG_INFINITY;
        for i in 0..4000 {
            let bb = i as f64 * 1e-3;
            let c = u.abs()[t.start] / g.get(t.start).powf(bb);
            if t.clone()
                .all(|k| u.abs()[k] <= c * g.get(k).powf(bb) * (1.0 + 1e-12))
            {
                best = bb;
            }
        }
        assert!((best - 2.0).abs() < 0.05, "scan {best}");
        assert!((b - best).abs() < 0.05);
    }

    #[test]
    fn zeros_and_norms() {
        let g = dyadic();
        let z = GenNumber::zero(&g);
        let v = estimate_valuation(&z, 0.5).unwrap();
        assert!(v.is_infinite());
        assert_eq!(ultra_norm(&z).unwrap(), 0.0);
        let e = GenNumber::real(&g, |e| e).unwrap();
        assert!((ultra_norm(&e).unwrap() - (-1f64).exp()).abs() < 1e-12);
        let one = GenNumber::real(&g, |_| 1.0).unwrap();
        assert!((ultra_norm(&one).unwrap() - 1.0).abs() < 1e-12);

        let mut vals = e.values().to_vec();
        vals[15] = Complex64::new(0.0, 0.0);
        let holed = GenNumber::new(g.clone(), vals).unwrap();
        let v = estimate_valuation(&holed, 0.5).unwrap();
        assert_eq!(v.excluded_zeros, 1);
        assert!((v.b_hat - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ring_operations() {
        let g = dyadic();
        let e = GenNumber::real(&g, |e| e).unwrap();
        let e2 = GenNumber::real(&g, |e| e * e).unwrap();
        let val = |u: &GenNumber| estimate_valuation(u, 0.5).unwrap().b_hat;
        assert!((val(&gn_add(&e, &e2).unwrap()) - 1.0).abs() < 0.05);
        assert!((val(&gn_mul(&e, &e2).unwrap()) - 3.0).abs() < 1e-9);
        // eps - eps + eps^5 cancels exactly in f64 once eps < 2^-13
        let g12 = EpsGrid::dyadic(1, 12).unwrap();
        let e = GenNumber::real(&g12, |e| e).unwrap();
        let w = GenNumber::real(&g12, |e| -e + e.powi(5)).unwrap();
        assert!((val(&gn_add(&e, &w).unwrap()) - 5.0).abs() < 0.05);

        let other = EpsGrid::dyadic(3, 23).unwrap();
        let f = GenNumber::real(&other, |e| e).unwrap();
        assert!(matches!(gn_add(&e, &f), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn classification() {
        let g = dyadic();
        let u = GenNumber::real(&g, |e| e.powi(100)).unwrap();
        assert_eq!(classify(&u, 10, 20).unwrap(), NetClass::Negligible);
        let u = GenNumber::real(&g, |e| e.powi(-3)).unwrap();
        assert_eq!(classify(&u, 10, 20).unwrap(), NetClass::Moderate);
        // exp(1/eps) overflows on the dyadic grid; use a coarser one
        let g = EpsGrid::geometric(0.5, 0.8, 16).unwrap();
        let u = GenNumber::real(&g, |e| (1.0 / e).exp()).unwrap();
        assert_eq!(classify(&u, 10, 20).unwrap(), NetClass::Neither);
    }

    #[test]
    fn slow_scale_cases() {
        let g = dyadic();
        let check = |f: &dyn Fn(f64) -> f64| {
            is_slow_scale(&GenNumber::real(&g, f).unwrap(), FIT_TOL).unwrap()
        };
        assert!(check(&|e: f64| -e.ln() + 2.0));
        assert!(check(&|e: f64| e.ln().powi(2)));
        assert!(check(&|e: f64| e.ln().powi(5).abs()));
        assert!(check(&|_| 1.0));
        assert!(!check(&|e: f64| e.powf(-0.5)));
        assert!(!check(&|e: f64| e.powf(-0.3)));
        assert!(!check(&|e: f64| 1.0 / e));
        let neg = GenNumber::real(&g, |_| -1.0).unwrap();
        assert!(matches!(
            is_slow_scale(&neg, FIT_TOL),
            Err(Error::NotPositive { .. })
        ));
    }

    #[test]
    fn scale_tags() {
        assert_eq!("log".parse::<ScaleFn>().unwrap(), ScaleFn::Log);
        assert_eq!("pow:1.5".parse::<ScaleFn>().unwrap(), ScaleFn::Pow(1.5));
        assert_eq!("const".parse::<ScaleFn>().unwrap(), ScaleFn::Const(1.0));
        assert_eq!("const:2".parse::<ScaleFn>().unwrap(), ScaleFn::Const(2.0));
        for bad in ["", "pow", "pow:-1", "pow:x", "const:0", "logx", "pow:inf"] {
            assert!(bad.parse::<ScaleFn>().is_err(), "{bad}");
        }
        for s in [ScaleFn::Log, ScaleFn::Pow(0.25), ScaleFn::Const(3.0)] {
            assert_eq!(s.to_string().parse::<ScaleFn>().unwrap(), s);
        }
        let g = dyadic();
        assert!(ScaleFn::Log.gammas(&g).is_ok());
        assert!(ScaleFn::Log
            .gammas(&EpsGrid::new(vec![1.0, 0.5]).unwrap())
            .is_err());
    }
}
