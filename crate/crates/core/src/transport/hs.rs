//! Facts about the Hurd-Sattinger characteristics: the crossing time
//! `t_eps` and the growth of `xi_eps` past the kink.

use serde::{Deserialize, Serialize};

use super::ThetaField;
use crate::bichar::{integrate_bichar, null_residual, BicharOptions, CoeffField};
use crate::error::{invalid, Error, Result};
use crate::fit::line_fit;
use crate::scale::EpsGrid;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TEps {
    pub eps: Vec<f64>,
    pub gamma: Vec<f64>,
    pub t_eps: Vec<f64>,
    /// `x'(t_eps) = Theta_eps(x(t_eps))`.
    pub xdot: Vec<f64>,
    /// Fit `t_eps - s0 = c0 + C / gamma`.
    pub fit_c: f64,
    pub fit_c0: f64,
    pub fit_r2: f64,
    /// `t_eps` nonincreasing as eps decreases.
    pub monotone: bool,
}

fn rk4(f: &impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let k1 = f(x);
    let k2 = f(x + 0.5 * h * k1);
    let k3 = f(x + 0.5 * h * k2);
    let k4 = f(x + h * k3);
    x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Crossing time of `x' = f(x)` from `-s0` through 0 and `f` there; the
/// horizon on failure.
fn crossing(f: &impl Fn(f64) -> f64, s0: f64, dt: f64) -> std::result::Result<(f64, f64), f64> {
    let horizon = 10.0 * (s0 + 1.0);
    let (mut t, mut x) = (0.0, -s0);
    loop {
        let nx = rk4(f, x, dt);
        if nx >= 0.0 {
            break;
        }
        x = nx;
        t += dt;
        if t > horizon {
            return Err(horizon);
        }
    }
    let (mut lo, mut hi) = (0.0, dt);
    while hi - lo > 1e-16 * (1.0 + t) {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if rk4(f, x, mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let h = 0.5 * (lo + hi);
    Ok((t + h, f(rk4(f, x, h))))
}

/// Zero crossing time of `x' = Theta_eps(x)`, `x(0) = -s0`, per eps; the
/// last RK4 step is bisected in its length.
pub fn find_t_eps(theta: &ThetaField, s0: f64, eps: &EpsGrid, dt: f64) -> Result<TEps> {
    if !(s0 > 0.0 && s0.is_finite()) {
        return Err(invalid("s0", format!("{s0} is not positive")));
    }
    if !(dt > 0.0) {
        return Err(invalid("dt", format!("{dt} is not positive")));
    }
    let gamma = theta.scale.gammas(eps)?;
    let mut t_eps = Vec::with_capacity(eps.len());
    let mut xdot = Vec::with_capacity(eps.len());
    for (k, &e) in eps.values().iter().enumerate() {
        let (t, v) = crossing(&|x| theta.theta(e, x), s0, dt)
            .map_err(|horizon| Error::NoCrossing { index: k, horizon })?;
        t_eps.push(t);
        xdot.push(v);
    }
    let inv: Vec<f64> = gamma.iter().map(|g| 1.0 / g).collect();
    let dev: Vec<f64> = t_eps.iter().map(|t| t - s0).collect();
    let fit = line_fit(&inv, &dev);
    Ok(TEps {
        eps: eps.values().to_vec(),
        monotone: t_eps.windows(2).all(|w| w[1] <= w[0]),
        fit_c: fit.map_or(f64::NAN, |f| f.slope),
        fit_c0: fit.map_or(f64::NAN, |f| f.intercept),
        fit_r2: fit.map_or(f64::NAN, |f| f.r2),
        gamma,
        t_eps,
        xdot,
    })
}

/// One choice of `tau0` for the initial covector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignConvention {
    pub tau0: f64,
    pub max_null_residual: f64,
    pub xi_at_s0: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KinkFacts {
    pub s0: f64,
    pub xi0: f64,
    pub tau0: f64,
    pub t: TEps,
    /// Crossing time read off the bicharacteristic's x-component.
    pub t_cross_bichar: Vec<Option<f64>>,
    pub xi_at_s0: Vec<f64>,
    /// `|xi0| <= |xi_eps(s0)| <= 2 |tau0|` per eps.
    pub bound_holds: Vec<bool>,
    pub t_before: f64,
    pub xi_before: Vec<f64>,
    /// Largest eps below which `xi_eps(t_before) = xi0` exactly.
    pub threshold_before: Option<f64>,
    pub t_after: f64,
    pub xi_after: Vec<f64>,
    /// Largest eps below which `|xi_eps(t_after)| >= 10 |xi0|`.
    pub threshold_after: Option<f64>,
    pub null_residual: Vec<f64>,
    /// Null data (`tau0 = -xi0`) and the opposite sign.
    pub conventions: Vec<SignConvention>,
}

/// Largest eps such that `ok` holds for it and every smaller eps.
fn threshold(eps: &[f64], ok: &[bool]) -> Option<f64> {
    let mut out = None;
    for (k, &e) in eps.iter().enumerate().rev() {
        if !ok[k] {
            break;
        }
        out = Some(e);
    }
    out
}

fn index_of(times: &[f64], t: f64, dt: f64) -> Result<usize> {
    let i = (t / dt).round() as usize;
    match times.get(i) {
        Some(&ti) if (ti - t).abs() < 1e-9 => Ok(i),
        _ => Err(invalid("dt", format!("no sample at t = {t}"))),
    }
}

pub fn kink_facts(
    theta: &ThetaField,
    s0: f64,
    eps: &EpsGrid,
    xi0: f64,
    dt: f64,
) -> Result<KinkFacts> {
    if s0 <= 0.5 {
        return Err(invalid("s0", format!("{s0} must exceed 0.5")));
    }
    let t = find_t_eps(theta, s0, eps, dt)?;
    let c = CoeffField::Theta(theta.clone());
    let x0 = -s0;
    let t_end = s0 + 0.5;
    let run = |tau0: f64, waive: bool| {
        integrate_bichar(
            &c,
            eps,
            x0,
            xi0,
            tau0,
            (0.0, t_end),
            dt,
            BicharOptions {
                waive_nullity: waive,
                step_halving: false,
            },
        )
    };
    let tau0 = -theta.theta(eps.get(0), x0) * xi0;
    let curve = run(tau0, false)?;
    let (ib, is, ia) = (
        index_of(&curve.times, s0 - 0.5, curve.dt)?,
        index_of(&curve.times, s0, curve.dt)?,
        index_of(&curve.times, t_end, curve.dt)?,
    );
    let at = |i: usize| -> Vec<f64> {
        curve
            .xi
            .iter()
            .map(|xs| xs.get(i).copied().unwrap_or(f64::INFINITY))
            .collect()
    };
    let (xi_before, xi_at_s0, xi_after) = (at(ib), at(is), at(ia));
    let bound_holds = xi_at_s0
        .iter()
        .map(|x| x.abs() >= xi0.abs() && x.abs() <= 2.0 * tau0.abs())
        .collect();
    let ok_before: Vec<bool> = xi_before.iter().map(|&x| x == xi0).collect();
    let ok_after: Vec<bool> = xi_after
        .iter()
        .map(|x| x.abs() >= 10.0 * xi0.abs())
        .collect();
    let t_cross_bichar = curve
        .x
        .iter()
        .map(|xs| xs.iter().position(|&x| x >= 0.0).map(|i| curve.times[i]))
        .collect();
    let flipped = run(-tau0, true)?;
    let conventions = vec![
        SignConvention {
            tau0,
            max_null_residual: null_residual(&curve, &c).into_iter().fold(0.0, f64::max),
            xi_at_s0: xi_at_s0.clone(),
        },
        SignConvention {
            tau0: -tau0,
            max_null_residual: null_residual(&flipped, &c).into_iter().fold(0.0, f64::max),
            xi_at_s0: flipped
                .xi
                .iter()
                .map(|xs| xs.get(is).copied().unwrap_or(f64::INFINITY))
                .collect(),
        },
    ];
    Ok(KinkFacts {
        s0,
        xi0,
        tau0,
        t_cross_bichar,
        null_residual: null_residual(&curve, &c),
        threshold_before: threshold(eps.values(), &ok_before),
        threshold_after: threshold(eps.values(), &ok_after),
        t,
        xi_at_s0,
        bound_holds,
        t_before: s0 - 0.5,
        xi_before,
        t_after: t_end,
        xi_after,
        conventions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mollifier::Mollifier;
    use crate::scale::ScaleFn;

    fn theta() -> ThetaField {
        ThetaField {
            mollifier: Mollifier::bump(),
            scale: ScaleFn::Log,
        }
    }

    #[test]
    fn crossing_times() {
        let (t, v) = crossing(&|_| 1.0, 1.5, 1e-3).unwrap();
        assert!((t - 1.5).abs() < 1e-12 && v == 1.0);
        assert!(crossing(&|_| 0.0, 1.5, 0.1).is_err());
        let e = EpsGrid::dyadic(4, 11).unwrap();
        let t = find_t_eps(&theta(), 1.5, &e, 1e-3).unwrap();
        for (k, &g) in t.gamma.iter().enumerate() {
            // oracle: s0 - 1/g + (1/g) int_0^1 dz / P(z)
            let m = Mollifier::bump();
            let n = 20_000;
            let integral: f64 = (0..n)
                .map(|i| 1.0 / m.antideriv((i as f64 + 0.5) / n as f64))
                .sum::<f64>()
                / n as f64;
            let want = 1.5 - 1.0 / g + integral / g;
            assert!(
                (t.t_eps[k] - want).abs() < 1e-6,
                "k={k}: {} vs {want}",
                t.t_eps[k]
            );
            assert!((t.xdot[k] - 0.5).abs() < 1e-6);
        }
        assert!(t.monotone && t.fit_r2 > 0.999);
    }

    #[test]
    fn kink_thresholds() {
        let e = EpsGrid::dyadic(4, 20).unwrap();
        let f = kink_facts(&theta(), 1.5, &e, 1.0, 1e-3).unwrap();
        assert!(f.bound_holds.iter().all(|&b| b));
        assert!(f.threshold_before.is_some());
        assert!(f.threshold_after.is_some());
        assert!(f.null_residual.iter().all(|&r| r <= 1e-8));
        for (a, b) in f.t_cross_bichar.iter().zip(&f.t.t_eps) {
            assert!((a.unwrap() - b).abs() <= 2e-3);
        }
        assert!((f.conventions[1].max_null_residual - 2.0).abs() < 1e-8);
    }
}
