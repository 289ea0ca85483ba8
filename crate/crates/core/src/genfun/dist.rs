//! Distribution specifications and their mollifier embeddings.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use num_complex::Complex64;

use super::GridFn;
use crate::error::{Error, Result};
use crate::grid::SpatialGrid;
use crate::mollifier::{Mollifier, GL8};
use crate::scale::{EpsGrid, ScaleFn};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// 1 to the left of the jump.
    Left,
    /// 1 to the right of the jump.
    #[default]
    Right,
}

/// Smooth closed-form functions of one variable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SmoothFn {
    Gaussian {
        center: f64,
        width: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    Sine {
        freq: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `sum c_j x^j`
    Polynomial {
        coeffs: Vec<f64>,
    },
    Constant {
        value: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl SmoothFn {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            SmoothFn::Gaussian {
                center,
                width,
                amplitude,
            } => amplitude * (-((x - center) / width).powi(2)).exp(),
            SmoothFn::Sine {
                freq,
                phase,
                amplitude,
            } => amplitude * (freq * x + phase).sin(),
            SmoothFn::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c),
            SmoothFn::Constant { value } => *value,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            SmoothFn::Gaussian {
                center,
                width,
                amplitude,
            } => center.is_finite() && amplitude.is_finite() && width.is_finite() && *width > 0.0,
            SmoothFn::Sine {
                freq,
                phase,
                amplitude,
            } => freq.is_finite() && phase.is_finite() && amplitude.is_finite(),
            SmoothFn::Polynomial { coeffs } => {
                coeffs.len() <= 16 && coeffs.iter().all(|c| c.is_finite())
            }
            SmoothFn::Constant { value } => value.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Parse(format!("invalid smooth function {self:?}")))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub coef: f64,
    pub spec: DistSpec,
}

/// Distributions that can be embedded by convolution with the mollifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistSpec {
    Delta {
        x0: f64,
    },
    Heaviside {
        x0: f64,
        #[serde(default)]
        orientation: Orientation,
    },
    Smooth {
        f: SmoothFn,
    },
    Combination {
        terms: Vec<Term>,
    },
    /// Product of one-dimensional factors, one per axis.
    Tensor {
        factors: Vec<DistSpec>,
    },
}

const MAX_DEPTH: usize = 8;

impl DistSpec {
    pub fn from_json(s: &str) -> Result<Self> {
        let d: DistSpec = serde_json::from_str(s)?;
        d.validate()?;
        Ok(d)
    }

    /// Structural checks: finite parameters, bounded nesting, tensors only at
    /// the top level.
    pub fn validate(&self) -> Result<()> {
        self.validate_at(0, true)
    }

    fn validate_at(&self, depth: usize, top: bool) -> Result<()> {
        if depth > MAX_DEPTH {
            return Err(Error::Parse("distribution spec nested too deeply".into()));
        }
        match self {
            DistSpec::Delta { x0 } | DistSpec::Heaviside { x0, .. } if !x0.is_finite() => {
                Err(Error::Parse("non-finite location".into()))
            }
            DistSpec::Delta { .. } | DistSpec::Heaviside { .. } => Ok(()),
            DistSpec::Smooth { f } => f.validate(),
            DistSpec::Combination { terms } => {
                if terms.is_empty() {
                    return Err(Error::Parse("empty combination".into()));
                }
                for t in terms {
                    if !t.coef.is_finite() {
                        return Err(Error::Parse("non-finite coefficient".into()));
                    }
                    t.spec.validate_at(depth + 1, false)?;
                }
                Ok(())
            }
            DistSpec::Tensor { factors } => {
                if !top || factors.len() != 2 {
                    return Err(Error::Parse(
                        "tensor needs exactly two factors and must be outermost".into(),
                    ));
                }
                for f in factors {
                    f.validate_at(depth + 1, false)?;
                }
                Ok(())
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            DistSpec::Tensor { factors } => factors.len(),
            _ => 1,
        }
    }

    /// Whether a delta or jump occurs anywhere in the spec.
    pub fn is_singular(&self) -> bool {
        match self {
            DistSpec::Delta { .. } | DistSpec::Heaviside { .. } => true,
            DistSpec::Smooth { .. } => false,
            DistSpec::Combination { terms } => {
                terms.iter().any(|t| t.coef != 0.0 && t.spec.is_singular())
            }
            DistSpec::Tensor { factors } => factors.iter().any(DistSpec::is_singular),
        }
    }

    /// Locations of deltas and jumps of a one-dimensional spec (its
    /// singular support), sorted and deduplicated.
    pub fn singular_support(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.collect_singular(&mut out);
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    fn collect_singular(&self, out: &mut Vec<f64>) {
        match self {
            DistSpec::Delta { x0 } | DistSpec::Heaviside { x0, .. } => out.push(*x0),
            DistSpec::Smooth { .. } | DistSpec::Tensor { .. } => {}
            DistSpec::Combination { terms } => {
                for t in terms.iter().filter(|t| t.coef != 0.0) {
                    t.spec.collect_singular(out);
                }
            }
        }
    }

    /// `(spec * rho^eps)(x)` for a one-dimensional spec at scale `gamma`.
    pub fn mollified(&self, m: &Mollifier, gamma: f64, x: f64) -> f64 {
        match self {
            DistSpec::Delta { x0 } => m.scaled(gamma, x - x0),
            DistSpec::Heaviside { x0, orientation } => match orientation {
                Orientation::Right => m.antideriv(gamma * (x - x0)),
                Orientation::Left => m.antideriv(gamma * (x0 - x)),
            },
            DistSpec::Smooth { f } => m.convolve(gamma, x, |y| f.eval(y)),
            DistSpec::Combination { terms } => terms
                .iter()
                .map(|t| t.coef * t.spec.mollified(m, gamma, x))
                .sum(),
            DistSpec::Tensor { .. } => f64::NAN,
        }
    }

    /// `int_a^b (spec * rho^eps)` for a one-dimensional spec.
    pub fn mollified_integral(&self, m: &Mollifier, gamma: f64, a: f64, b: f64) -> f64 {
        match self {
            DistSpec::Delta { x0 } => m.antideriv(gamma * (b - x0)) - m.antideriv(gamma * (a - x0)),
            DistSpec::Heaviside { x0, orientation } => {
                let right =
                    (m.antideriv2(gamma * (b - x0)) - m.antideriv2(gamma * (a - x0))) / gamma;
                match orientation {
                    Orientation::Right => right,
                    Orientation::Left => (b - a) - right,
                }
            }
            DistSpec::Smooth { .. } => {
                let panels = (((b - a).abs() * gamma * 2.0).ceil() as usize).clamp(1, 10_000);
                let ph = (b - a) / panels as f64;
                let mut s = 0.0;
                for p in 0..panels {
                    let mid = a + (p as f64 + 0.5) * ph;
                    for &(t, w) in &GL8 {
                        s += 0.5 * ph * w * self.mollified(m, gamma, mid + 0.5 * ph * t);
                    }
                }
                s
            }
            DistSpec::Combination { terms } => terms
                .iter()
                .map(|t| t.coef * t.spec.mollified_integral(m, gamma, a, b))
                .sum(),
            DistSpec::Tensor { .. } => f64::NAN,
        }
    }
}

/// Checks `1/gamma_k >= 4 h` for every epsilon.
pub(crate) fn check_resolvable(eps: &EpsGrid, gammas: &[f64], h: f64) -> Result<()> {
    for (k, &g) in gammas.iter().enumerate() {
        if 1.0 / g < 4.0 * h {
            return Err(Error::Unresolved {
                index: k,
                eps: eps.get(k),
                width: 1.0 / g,
                limit: 4.0 * h,
            });
        }
    }
    Ok(())
}

/// Samples `spec * rho^eps` on the grid for every epsilon. Deltas and jumps
/// use closed forms; smooth parts use quadrature against the mollifier.
pub fn embed(
    spec: &DistSpec,
    mollifier: &Mollifier,
    scale: ScaleFn,
    grid: &SpatialGrid,
    eps: &EpsGrid,
) -> Result<GridFn> {
    spec.validate()?;
    if spec.dim() != grid.dim() {
        return Err(Error::GridMismatch(format!(
            "{}-dimensional spec on a {}-dimensional grid",
            spec.dim(),
            grid.dim()
        )));
    }
    let gammas = scale.gammas(eps)?;
    if spec.is_singular() {
        check_resolvable(eps, &gammas, grid.h_max())?;
    }
    let factors: Vec<&DistSpec> = match spec {
        DistSpec::Tensor { factors } => factors.iter().collect(),
        other => vec![other],
    };
    let samples: Vec<Vec<Complex64>> = gammas
        .par_iter()
        .map(|&g| {
            let per_axis: Vec<Vec<f64>> = factors
                .iter()
                .zip(grid.axes())
                .map(|(f, a)| {
                    (0..a.n)
                        .map(|i| f.mollified(mollifier, g, a.node(i)))
                        .collect()
                })
                .collect();
            let mut out = Vec::with_capacity(grid.len());
            match per_axis.as_slice() {
                [x] => out.extend(x.iter().map(|&v| Complex64::new(v, 0.0))),
                [x, y] => {
                    for &vy in y {
                        out.extend(x.iter().map(|&vx| Complex64::new(vx * vy, 0.0)));
                    }
                }
                _ => unreachable!("validated dimension"),
            }
            out
        })
        .collect();
    GridFn::new(grid.clone(), eps.clone(), samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_roundtrip_and_rejections() {
        let s = r#"{"type":"combination","terms":[{"coef":2.0,"spec":{"type":"delta","x0":0.5}},
            {"coef":1.0,"spec":{"type":"smooth","f":{"kind":"gaussian","center":0.0,"width":0.3}}}]}"#;
        let d = DistSpec::from_json(s).unwrap();
        assert_eq!(d.singular_support(), vec![0.5]);
        let back = serde_json::to_string(&d).unwrap();
        assert_eq!(DistSpec::from_json(&back).unwrap(), d);
        assert!(DistSpec::from_json(r#"{"type":"delta","x0":0,"extra":1}"#).is_err());
        assert!(DistSpec::from_json(r#"{"type":"combination","terms":[]}"#).is_err());
        assert!(DistSpec::from_json(
            r#"{"type":"combination","terms":[{"coef":1,"spec":{"type":"tensor","factors":[]}}]}"#
        )
        .is_err());
        assert!(DistSpec::from_json(
            r#"{"type":"smooth","f":{"kind":"gaussian","center":0,"width":0}}"#
        )
        .is_err());
    }

    #[test]
    fn heaviside_integral_matches_quadrature() {
        let m = Mollifier::bump();
        let h = DistSpec::Heaviside {
            x0: 0.1,
            orientation: Orientation::Left,
        };
        let g = 7.0;
        let (a, b) = (-0.3, 0.45);
        let n = 20_000;
        let dx = (b - a) / n as f64;
        let q: f64 = (0..n)
            .map(|i| h.mollified(&m, g, a + (i as f64 + 0.5) * dx) * dx)
            .sum();
        assert!((h.mollified_integral(&m, g, a, b) - q).abs() < 1e-8);
        let d = DistSpec::Delta { x0: 0.0 };
        assert!((d.mollified_integral(&m, g, -1.0, 1.0) - 1.0).abs() < 1e-15);
    }
}
