//! Generalized bicharacteristics of `D_t + a(x, t) D_x + a_0` in one space
//! dimension: per-eps RK4 on the Hamilton system of `q1 = tau + a xi`.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scale::{is_slow_scale, EpsGrid, GenNumber, ScaleFn};
use crate::transport::ThetaField;

pub const BLOW_UP: f64 = 1e12;
pub const NULL_TOL: f64 = 1e-10;

type CustomFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// Real coefficient `a(x, t)` of a first-order operator, one closed-form
/// family per eps.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoeffField {
    Constant {
        c: f64,
    },
    /// `a(x) = x`
    Linear,
    /// `a(x) = slope x + offset`; a negative slope compresses and makes
    /// `xi` grow like `exp(-slope t)`.
    Affine {
        slope: f64,
        offset: f64,
    },
    /// `a(x) = 1 + exp(-x^2)`
    Bump,
    /// Hurd-Sattinger coefficient; `a_0 = Theta'`.
    Theta(ThetaField),
    /// `a(eps, x, t)`; derivatives by central differences.
    #[serde(skip)]
    Custom {
        name: String,
        f: CustomFn,
    },
}

impl fmt::Debug for CoeffField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoeffField::Constant { c } => write!(f, "Constant({c})"),
            CoeffField::Linear => f.write_str("Linear"),
            CoeffField::Affine { slope, offset } => write!(f, "Affine({slope}, {offset})"),
            CoeffField::Bump => f.write_str("Bump"),
            CoeffField::Theta(t) => write!(f, "Theta({})", t.scale),
            CoeffField::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

fn fd_step(x: f64) -> f64 {
    1e-5 * (1.0 + x.abs())
}

impl CoeffField {
    pub fn custom(
        name: impl Into<String>,
        f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        CoeffField::Custom {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn a(&self, eps: f64, x: f64, t: f64) -> f64 {
        match self {
            CoeffField::Constant { c } => *c,
            CoeffField::Linear => x,
            CoeffField::Affine { slope, offset } => slope * x + offset,
            CoeffField::Bump => 1.0 + (-x * x).exp(),
            CoeffField::Theta(th) => th.theta(eps, x),
            CoeffField::Custom { f, .. } => f(eps, x, t),
        }
    }

    pub fn a_x(&self, eps: f64, x: f64, t: f64) -> f64 {
        match self {
            CoeffField::Constant { .. } => 0.0,
            CoeffField::Linear => 1.0,
            CoeffField::Affine { slope, .. } => *slope,
            CoeffField::Bump => -2.0 * x * (-x * x).exp(),
            CoeffField::Theta(th) => th.theta_prime(eps, x),
            CoeffField::Custom { f, .. } => {
                let h = fd_step(x);
                (f(eps, x + h, t) - f(eps, x - h, t)) / (2.0 * h)
            }
        }
    }

    pub fn a_t(&self, eps: f64, x: f64, t: f64) -> f64 {
        match self {
            CoeffField::Custom { f, .. } => {
                let h = fd_step(t);
                (f(eps, x, t + h) - f(eps, x, t - h)) / (2.0 * h)
            }
            _ => 0.0,
        }
    }

    /// Zero-order term of the conservative form `D_t u + D_x(a u)`.
    pub fn a0(&self, eps: f64, x: f64, t: f64) -> f64 {
        self.a_x(eps, x, t)
    }

    pub fn analytic(&self) -> bool {
        !matches!(self, CoeffField::Custom { .. })
    }

    pub fn time_independent(&self) -> bool {
        self.analytic()
    }

    /// Radius beyond which the coefficient is constant, if any.
    pub fn constant_outside(&self, eps: f64) -> Option<f64> {
        match self {
            CoeffField::Constant { .. } => Some(0.0),
            CoeffField::Theta(th) => Some(1.0 / th.gamma(eps)),
            _ => None,
        }
    }

    /// Principal symbol `tau + a xi`.
    pub fn q1(&self, eps: f64, x: f64, t: f64, xi: f64, tau: f64) -> f64 {
        tau + self.a(eps, x, t) * xi
    }
}

/// `sup |a_x|` and `sup |a_0|` over `[lo, hi]` are `O(log 1/eps)`.
pub fn is_log_type(c: &CoeffField, eps: &EpsGrid, lo: f64, hi: f64, tol: f64) -> Result<bool> {
    if !(lo < hi) {
        return Err(invalid("range", format!("[{lo}, {hi}] is empty")));
    }
    let n = 4001;
    let sup: Vec<f64> = eps
        .values()
        .iter()
        .map(|&e| {
            let g = ScaleFn::Log.eval(e);
            let m = (0..n)
                .map(|i| {
                    let x = lo + (hi - lo) * i as f64 / (n - 1) as f64;
                    c.a_x(e, x, 0.0).abs().max(c.a0(e, x, 0.0).abs())
                })
                .fold(0.0, f64::max);
            // bounded iff O(log); the shift keeps it strongly positive
            1.0 + m / g
        })
        .collect();
    is_slow_scale(&GenNumber::from_reals(eps, &sup)?, tol)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BicharOptions {
    pub waive_nullity: bool,
    /// Also integrate at `dt/2` and record the largest difference.
    pub step_halving: bool,
}

impl Default for BicharOptions {
    fn default() -> Self {
        BicharOptions {
            waive_nullity: false,
            step_halving: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BicharCurve {
    pub eps: Vec<f64>,
    pub times: Vec<f64>,
    /// Per eps; shorter than `times` after a blow-up truncation.
    pub x: Vec<Vec<f64>>,
    pub xi: Vec<Vec<f64>>,
    pub tau: Vec<Vec<f64>>,
    pub x0: f64,
    pub xi0: f64,
    pub tau0: f64,
    pub dt: f64,
    /// Time at which `|xi|` passed the blow-up threshold.
    pub truncated_at: Vec<Option<f64>>,
    /// Max `|y_dt - y_{dt/2}|` over shared samples, per eps.
    pub halving_error: Vec<Option<f64>>,
    /// "analytic" or the finite-difference step rule.
    pub derivatives: String,
}

impl BicharCurve {
    pub fn truncated(&self) -> bool {
        self.truncated_at.iter().any(Option::is_some)
    }
}

type State = [f64; 3];

fn rhs(c: &CoeffField, eps: f64, t: f64, y: &State) -> State {
    let (x, xi) = (y[0], y[1]);
    [
        c.a(eps, x, t),
        -c.a_x(eps, x, t) * xi,
        -c.a_t(eps, x, t) * xi,
    ]
}

fn rk4_step(c: &CoeffField, eps: f64, t: f64, y: &State, dt: f64) -> State {
    let add = |y: &State, k: &State, s: f64| [y[0] + s * k[0], y[1] + s * k[1], y[2] + s * k[2]];
    let k1 = rhs(c, eps, t, y);
    let k2 = rhs(c, eps, t + 0.5 * dt, &add(y, &k1, 0.5 * dt));
    let k3 = rhs(c, eps, t + 0.5 * dt, &add(y, &k2, 0.5 * dt));
    let k4 = rhs(c, eps, t + dt, &add(y, &k3, dt));
    let mut out = *y;
    for i in 0..3 {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// RK4 trajectory with `steps` steps from `t0`; samples every `every` steps.
/// Returns samples and the truncation time.
fn trajectory(
    c: &CoeffField,
    eps: f64,
    y0: State,
    t0: f64,
    dt: f64,
    steps: usize,
    every: usize,
) -> (Vec<State>, Option<f64>) {
    let mut y = y0;
    let mut out = vec![y];
    for i in 0..steps {
        let t = t0 + i as f64 * dt;
        y = rk4_step(c, eps, t, &y, dt);
        if !(y[1].abs() <= BLOW_UP) || !y.iter().all(|v| v.is_finite()) {
            return (out, Some(t + dt));
        }
        if (i + 1) % every == 0 {
            out.push(y);
        }
    }
    (out, None)
}

fn step_count(t_span: (f64, f64), dt: f64) -> Result<usize> {
    let (t0, t1) = t_span;
    if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(invalid("t_span", format!("[{t0}, {t1}] is empty")));
    }
    if !(dt > 0.0) {
        return Err(invalid("dt", format!("{dt} is not positive")));
    }
    let n = ((t1 - t0) / dt).round().max(1.0);
    if ((t1 - t0) / n - dt).abs() > 1e-9 * dt {
        return Err(invalid("dt", format!("{dt} does not divide [{t0}, {t1}]")));
    }
    Ok(n as usize)
}

#[allow(clippy::too_many_arguments)]
pub fn integrate_bichar(
    c: &CoeffField,
    eps: &EpsGrid,
    x0: f64,
    xi0: f64,
    tau0: f64,
    t_span: (f64, f64),
    dt: f64,
    opts: BicharOptions,
) -> Result<BicharCurve> {
    let steps = step_count(t_span, dt)?;
    let dt = (t_span.1 - t_span.0) / steps as f64;
    if !opts.waive_nullity {
        for (k, &e) in eps.values().iter().enumerate() {
            let r = c.q1(e, x0, t_span.0, xi0, tau0).abs();
            if r > NULL_TOL * (1.0 + xi0.abs()) {
                return Err(Error::NotNull {
                    index: k,
                    residual: r,
                });
            }
        }
    }
    let y0 = [x0, xi0, tau0];
    let runs: Vec<_> = eps
        .values()
        .par_iter()
        .map(|&e| {
            let (ys, trunc) = trajectory(c, e, y0, t_span.0, dt, steps, 1);
            let halving = if opts.step_halving && trunc.is_none() {
                let (fine, tf) = trajectory(c, e, y0, t_span.0, 0.5 * dt, 2 * steps, 2);
                tf.is_none().then(|| {
                    ys.iter()
                        .zip(&fine)
                        .map(|(a, b)| (0..3).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max))
                        .fold(0.0, f64::max)
                })
            } else {
                None
            };
            (ys, trunc, halving)
        })
        .collect();
    let mut curve = BicharCurve {
        eps: eps.values().to_vec(),
        times: (0..=steps).map(|i| t_span.0 + i as f64 * dt).collect(),
        x: Vec::new(),
        xi: Vec::new(),
        tau: Vec::new(),
        x0,
        xi0,
        tau0,
        dt,
        truncated_at: Vec::new(),
        halving_error: Vec::new(),
        derivatives: if c.analytic() {
            "analytic".into()
        } else {
            "central differences, step 1e-5 (1 + |x|)".into()
        },
    };
    for (ys, trunc, halving) in runs {
        curve.x.push(ys.iter().map(|y| y[0]).collect());
        curve.xi.push(ys.iter().map(|y| y[1]).collect());
        curve.tau.push(ys.iter().map(|y| y[2]).collect());
        curve.truncated_at.push(trunc);
        curve.halving_error.push(halving);
    }
    Ok(curve)
}

/// Per eps: `max_t |tau + a(x, t) xi|` along the curve.
pub fn null_residual(b: &BicharCurve, c: &CoeffField) -> Vec<f64> {
    b.eps
        .iter()
        .enumerate()
        .map(|(k, &e)| {
            (0..b.x[k].len())
                .map(|i| {
                    c.q1(e, b.x[k][i], b.times[i], b.xi[k][i], b.tau[k][i])
                        .abs()
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Per eps, per point: the image, or `None` after truncation.
pub type FlowMap = Vec<Vec<Option<(f64, f64)>>>;

/// Image of `(x, xi)` points under the time-`t` Hamilton flow of
/// `p1 = a xi`, per eps. Truncated points come back as `None`.
pub fn hamilton_flow(
    c: &CoeffField,
    eps: &EpsGrid,
    t: f64,
    points: &[(f64, f64)],
    dt: f64,
) -> Result<FlowMap> {
    if t == 0.0 {
        return Ok(vec![points.iter().map(|&p| Some(p)).collect(); eps.len()]);
    }
    let steps = ((t.abs() / dt).ceil() as usize).max(1);
    let h = t / steps as f64;
    Ok(eps
        .values()
        .par_iter()
        .map(|&e| {
            points
                .iter()
                .map(|&(x, xi)| {
                    let (ys, trunc) = trajectory(c, e, [x, xi, 0.0], 0.0, h, steps, steps);
                    trunc
                        .is_none()
                        .then(|| (ys[ys.len() - 1][0], ys[ys.len() - 1][1]))
                })
                .collect()
        })
        .collect())
}

/// Ratio of successive step-halving differences at the end point; 16 for a
/// fourth-order method in its asymptotic range.
pub fn rk4_order_factor(
    c: &CoeffField,
    eps: f64,
    y0: (f64, f64, f64),
    t_end: f64,
    dt: f64,
) -> Result<f64> {
    let end = |h: f64| -> Result<State> {
        let n = step_count((0.0, t_end), h)?;
        let (ys, trunc) = trajectory(c, eps, [y0.0, y0.1, y0.2], 0.0, h, n, n);
        if trunc.is_some() {
            return Err(Error::Degenerate("trajectory truncated".into()));
        }
        Ok(ys[ys.len() - 1])
    };
    let (a, b, d) = (end(dt)?, end(dt / 2.0)?, end(dt / 4.0)?);
    let diff = |p: &State, q: &State| (0..3).map(|i| (p[i] - q[i]).abs()).fold(0.0, f64::max);
    let den = diff(&b, &d);
    if den == 0.0 {
        return Err(Error::Degenerate(
            "no discretization error to compare".into(),
        ));
    }
    Ok(diff(&a, &b) / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mollifier::Mollifier;

    fn eps() -> EpsGrid {
        EpsGrid::dyadic(4, 20).unwrap()
    }

    #[test]
    fn constant_field_is_a_straight_line() {
        let c = CoeffField::Constant { c: 1.0 };
        let b = integrate_bichar(
            &c,
            &eps(),
            -1.0,
            2.0,
            -2.0,
            (0.0, 2.0),
            0.01,
            BicharOptions::default(),
        )
        .unwrap();
        for k in 0..b.eps.len() {
            for (i, &t) in b.times.iter().enumerate() {
                assert!((b.x[k][i] - (-1.0 + t)).abs() < 1e-13);
                assert_eq!(b.xi[k][i], 2.0);
                assert_eq!(b.tau[k][i], -2.0);
            }
        }
        assert!(null_residual(&b, &c).iter().all(|&r| r <= 1e-12));
    }

    #[test]
    fn linear_field() {
        let c = CoeffField::Linear;
        let b = integrate_bichar(
            &c,
            &eps(),
            0.5,
            1.0,
            -0.5,
            (0.0, 1.0),
            1e-3,
            BicharOptions::default(),
        )
        .unwrap();
        let n = b.times.len() - 1;
        assert!((b.x[0][n] - 0.5 * 1f64.exp()).abs() < 1e-12);
        assert!((b.xi[0][n] - (-1f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn compressive_field_truncates() {
        let c = CoeffField::Affine {
            slope: -40.0,
            offset: 0.0,
        };
        let b = integrate_bichar(
            &c,
            &eps(),
            0.5,
            1.0,
            20.0,
            (0.0, 1.0),
            1e-3,
            BicharOptions::default(),
        )
        .unwrap();
        assert!(b.truncated());
        let t = b.truncated_at[0].unwrap();
        // |xi| = exp(40 t) passes 1e12 at t = ln(1e12) / 40
        assert!((t - BLOW_UP.ln() / 40.0).abs() < 2e-3, "{t}");
    }

    #[test]
    fn nullity_is_checked() {
        let c = CoeffField::Constant { c: 1.0 };
        let r = integrate_bichar(
            &c,
            &eps(),
            0.0,
            1.0,
            0.0,
            (0.0, 1.0),
            0.1,
            BicharOptions::default(),
        );
        assert!(matches!(r, Err(Error::NotNull { .. })));
        // waived: residual equals the perturbation
        let opts = BicharOptions {
            waive_nullity: true,
            ..Default::default()
        };
        let b = integrate_bichar(&c, &eps(), 0.0, 1.0, -1.0 + 0.3, (0.0, 1.0), 0.1, opts).unwrap();
        assert!(null_residual(&b, &c)
            .iter()
            .all(|&r| (r - 0.3).abs() < 1e-15));
    }

    #[test]
    fn hs_curve_conserves_theta_xi() {
        let th = ThetaField {
            mollifier: Mollifier::bump(),
            scale: ScaleFn::Log,
        };
        let c = CoeffField::Theta(th.clone());
        let b = integrate_bichar(
            &c,
            &eps(),
            -1.5,
            1.0,
            -1.0,
            (0.0, 3.0),
            1e-3,
            BicharOptions::default(),
        )
        .unwrap();
        assert!(!b.truncated());
        let r = null_residual(&b, &c);
        assert!(r.iter().all(|&v| v <= 1e-8), "{r:?}");
    }

    #[test]
    fn flow_properties() {
        let c = CoeffField::Bump;
        let e = EpsGrid::new(vec![0.1]).unwrap();
        let pts = [(0.0, 1.0), (-1.0, 2.0)];
        assert_eq!(
            hamilton_flow(&c, &e, 0.0, &pts, 1e-2).unwrap()[0][0],
            Some((0.0, 1.0))
        );
        let whole = hamilton_flow(&c, &e, 1.0, &pts, 1e-3).unwrap();
        let half = hamilton_flow(&c, &e, 0.5, &pts, 1e-3).unwrap();
        let mid: Vec<_> = half[0].iter().map(|p| p.unwrap()).collect();
        let twice = hamilton_flow(&c, &e, 0.5, &mid, 1e-3).unwrap();
        for (a, b) in whole[0].iter().zip(&twice[0]) {
            let (a, b) = (a.unwrap(), b.unwrap());
            assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
        }
        let f = rk4_order_factor(&c, 0.1, (0.0, 1.0, 0.0), 1.0, 0.1).unwrap();
        assert!((12.0..=20.0).contains(&f), "{f}");
        let k = CoeffField::Constant { c: 2.0 };
        let m = hamilton_flow(&k, &e, 1.5, &pts, 1e-2).unwrap();
        let (x, xi) = m[0][1].unwrap();
        assert!((x - 2.0).abs() < 1e-12 && xi == 2.0);
    }

    #[test]
    fn log_type() {
        let th = CoeffField::Theta(ThetaField {
            mollifier: Mollifier::bump(),
            scale: ScaleFn::Log,
        });
        assert!(is_log_type(&th, &eps(), -2.0, 2.0, 0.05).unwrap());
        let fast = CoeffField::Theta(ThetaField {
            mollifier: Mollifier::bump(),
            scale: ScaleFn::Pow(0.5),
        });
        assert!(!is_log_type(&fast, &eps(), -2.0, 2.0, 0.05).unwrap());
    }

    #[test]
    fn custom_fallback_matches_analytic() {
        let c = CoeffField::custom("bump", |_, x, _| 1.0 + (-x * x).exp());
        for x in [-1.0, 0.3, 2.0] {
            assert!((c.a_x(0.1, x, 0.0) - CoeffField::Bump.a_x(0.1, x, 0.0)).abs() < 1e-9);
        }
        assert!(!c.analytic());
    }
}
