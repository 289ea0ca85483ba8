//! The normalized smooth bump and its antiderivative.

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 8-point Gauss-Legendre rule on [-1, 1] as (node, weight).
pub(crate) const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
];

/// Cells of the antiderivative table on [-1, 0].
const TABLE_CELLS: usize = 2048;

/// Trapezoid intervals for convolution quadrature; spectrally accurate
/// because the bump is flat to all orders at the ends.
const CONV_INTERVALS: usize = 256;

fn raw_bump(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - x * x)).exp()
    }
}

fn raw_bump_deriv(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        let d = 1.0 - x * x;
        raw_bump(x) * (-2.0 * x / (d * d))
    }
}

#[derive(Debug)]
struct Tables {
    norm: f64,
    /// `P` at the nodes `-1 + j/TABLE_CELLS`, j = 0..=TABLE_CELLS.
    cum: Vec<f64>,
    /// First moment `int_{-1}^x y rho(y) dy` at the same nodes.
    moment: Vec<f64>,
    /// (y, w) with `sum w = 1` approximating `int g(y) rho(y) dy`.
    conv: Vec<(f64, f64)>,
}

impl Tables {
    fn build() -> Self {
        let h = 1.0 / TABLE_CELLS as f64;
        let mut cum = Vec::with_capacity(TABLE_CELLS + 1);
        let mut moment = Vec::with_capacity(TABLE_CELLS + 1);
        let (mut acc, mut acc1) = (0.0, 0.0);
        cum.push(0.0);
        moment.push(0.0);
        for j in 0..TABLE_CELLS {
            let mid = -1.0 + (j as f64 + 0.5) * h;
            for &(t, w) in &GL8 {
                let y = mid + 0.5 * h * t;
                acc += 0.5 * h * w * raw_bump(y);
                acc1 += 0.5 * h * w * y * raw_bump(y);
            }
            cum.push(acc);
            moment.push(acc1);
        }
        // half mass doubled, so P(0) = 1/2 exactly
        let norm = 2.0 * acc;
        for c in cum.iter_mut().chain(moment.iter_mut()) {
            *c /= norm;
        }
        let mut conv: Vec<(f64, f64)> = (1..CONV_INTERVALS)
            .map(|i| {
                let y = -1.0 + 2.0 * i as f64 / CONV_INTERVALS as f64;
                (y, raw_bump(y))
            })
            .collect();
        let total: f64 = conv.iter().map(|c| c.1).sum();
        for c in &mut conv {
            c.1 /= total;
        }
        Tables {
            norm,
            cum,
            moment,
            conv,
        }
    }
}

/// Smooth even mollifier supported in [-1, 1] with unit mass. Only the
/// normalized bump `exp(-1/(1-x^2))` is provided.
#[derive(Clone, Debug)]
pub struct Mollifier {
    tables: Arc<Tables>,
}

impl Default for Mollifier {
    fn default() -> Self {
        Self::bump()
    }
}

impl PartialEq for Mollifier {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Mollifier {
    pub fn bump() -> Self {
        static TABLES: OnceLock<Arc<Tables>> = OnceLock::new();
        Mollifier {
            tables: TABLES.get_or_init(|| Arc::new(Tables::build())).clone(),
        }
    }

    /// Normalizing constant `int exp(-1/(1-x^2)) dx`.
    pub fn norm(&self) -> f64 {
        self.tables.norm
    }

    pub fn eval(&self, x: f64) -> f64 {
        raw_bump(x) / self.tables.norm
    }

    pub fn deriv(&self, x: f64) -> f64 {
        raw_bump_deriv(x) / self.tables.norm
    }

    /// `rho^eps(x) = gamma * rho(gamma * x)`.
    pub fn scaled(&self, gamma: f64, x: f64) -> f64 {
        gamma * self.eval(gamma * x)
    }

    pub fn scaled_deriv(&self, gamma: f64, x: f64) -> f64 {
        gamma * gamma * self.deriv(gamma * x)
    }

    /// `P(x) = int_{-1}^x rho`, by quintic Hermite interpolation of a
    /// Gauss-Legendre table; `P(x) + P(-x) = 1` holds exactly.
    pub fn antideriv(&self, x: f64) -> f64 {
        if x <= -1.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        if x > 0.0 {
            return 1.0 - self.antideriv_neg(-x);
        }
        self.antideriv_neg(x)
    }

    fn antideriv_neg(&self, x: f64) -> f64 {
        self.hermite(&self.tables.cum, x, |y| self.eval(y), |y| self.deriv(y))
    }

    /// `int_{-1}^x y rho(y) dy` for `x <= 0`.
    fn moment_neg(&self, x: f64) -> f64 {
        self.hermite(
            &self.tables.moment,
            x,
            |y| y * self.eval(y),
            |y| self.eval(y) + y * self.deriv(y),
        )
    }

    /// Quintic Hermite interpolation of a tabulated antiderivative on
    /// [-1, 0] given its first two derivatives.
    fn hermite(
        &self,
        table: &[f64],
        x: f64,
        d: impl Fn(f64) -> f64,
        dd: impl Fn(f64) -> f64,
    ) -> f64 {
        let n = TABLE_CELLS;
        let h = 1.0 / n as f64;
        let s = ((x + 1.0) * n as f64).max(0.0);
        let j = (s.floor() as usize).min(n - 1);
        let t = s - j as f64;
        let (x0, x1) = (-1.0 + j as f64 * h, -1.0 + (j + 1) as f64 * h);
        let (p0, p1) = (table[j], table[j + 1]);
        let (d0, d1) = (d(x0), d(x1));
        let (s0, s1) = (dd(x0), dd(x1));
        let (t2, t3) = (t * t, t * t * t);
        let (t4, t5) = (t3 * t, t3 * t2);
        let h00 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
        let h01 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
        let h10 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
        let h11 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
        let h20 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
        let h21 = 0.5 * (t3 - 2.0 * t4 + t5);
        p0 * h00 + p1 * h01 + h * (d0 * h10 + d1 * h11) + h * h * (s0 * h20 + s1 * h21)
    }

    /// `Q(x) = int_{-1}^x P = x P(x) - int_{-1}^x y rho(y) dy`; equals `x`
    /// for `x >= 1` since `rho` is even.
    pub fn antideriv2(&self, x: f64) -> f64 {
        if x <= -1.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return x;
        }
        // the first moment integrand is odd
        x * self.antideriv(x) - self.moment_neg(-x.abs())
    }

    /// Quadrature nodes `(y, w)` with `sum_i w_i g(y_i) ~ int g(y) rho(y) dy`.
    pub fn conv_nodes(&self) -> &[(f64, f64)] {
        &self.tables.conv
    }

    /// `(f * rho^eps)(x)` for a smooth `f`.
    pub fn convolve(&self, gamma: f64, x: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.conv_nodes()
            .iter()
            .map(|&(y, w)| w * f(x - y / gamma))
            .sum()
    }
}

impl fmt::Display for Mollifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("bump")
    }
}

impl FromStr for Mollifier {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "bump" => Ok(Mollifier::bump()),
            other => Err(Error::Parse(format!("unknown mollifier `{other}`"))),
        }
    }
}

impl Serialize for Mollifier {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str("bump")
    }
}

impl<'de> Deserialize<'de> for Mollifier {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn unit_mass_and_symmetry() {
        let m = Mollifier::bump();
        assert!((m.norm() - 0.443_993_816_168_079_4).abs() < 1e-13);
        let mass = simpson(|x| m.eval(x), -1.0, 1.0, 20_000);
        assert!((mass - 1.0).abs() < 1e-10);
        for i in 0..100 {
            let x = -1.2 + 0.024 * i as f64;
            assert_eq!(m.eval(x), m.eval(-x));
            assert!(m.eval(x) >= 0.0);
        }
    }

    #[test]
    fn antiderivative_matches_quadrature() {
        let m = Mollifier::bump();
        assert_eq!(m.antideriv(0.0), 0.5);
        assert_eq!(m.antideriv(-1.0), 0.0);
        assert_eq!(m.antideriv(1.5), 1.0);
        for i in 1..40 {
            let x = -1.0 + 0.05 * i as f64 + 0.0123;
            let q = simpson(|y| m.eval(y), -1.0, x, 20_000);
            assert!((m.antideriv(x) - q).abs() < 1e-11, "x={x}");
            assert!((m.antideriv(x) + m.antideriv(-x) - 1.0).abs() < 1e-15);
        }
        // derivative of the interpolant is rho
        for i in 0..50 {
            let x = -0.98 + 0.04 * i as f64;
            let d = (m.antideriv(x + 1e-6) - m.antideriv(x - 1e-6)) / 2e-6;
            assert!((d - m.eval(x)).abs() < 1e-8);
        }
    }

    #[test]
    fn second_antiderivative() {
        let m = Mollifier::bump();
        for i in 0..39 {
            let x = -0.95 + 0.05 * i as f64;
            let q = simpson(|y| m.antideriv(y), -1.0, x, 4000);
            assert!((m.antideriv2(x) - q).abs() < 1e-10, "x={x}");
        }
        assert_eq!(m.antideriv2(2.0), 2.0);
        assert!((m.antideriv2(0.999_999) - 0.999_999).abs() < 1e-9);
    }

    #[test]
    fn derivative_matches_difference() {
        let m = Mollifier::bump();
        for i in 0..50 {
            let x = -0.98 + 0.04 * i as f64;
            let d = (m.eval(x + 1e-6) - m.eval(x - 1e-6)) / 2e-6;
            assert!((d - m.deriv(x)).abs() < 1e-7);
        }
    }

    #[test]
    fn convolution_reproduces_polynomials_of_degree_one() {
        let m = Mollifier::bump();
        let v = m.convolve(3.0, 0.7, |x| 2.0 * x + 1.0);
        assert!((v - 2.4).abs() < 1e-13);
        // second moment: int y^2 rho, the O(gamma^-2) term
        let m2 = simpson(|y| y * y * m.eval(y), -1.0, 1.0, 20_000);
        let v = m.convolve(4.0, 0.0, |x| x * x);
        assert!((v - m2 / 16.0).abs() < 1e-12);
    }
}
