use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::mollifier::Mollifier;
use crate::scale::{EpsGrid, ScaleFn};

/// Mollified reversed Heaviside `Theta_eps = H(-.) * rho^eps`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaField {
    #[serde(default)]
    pub mollifier: Mollifier,
    pub scale: ScaleFn,
}

impl ThetaField {
    pub fn gamma(&self, eps: f64) -> f64 {
        self.scale.eval(eps)
    }

    pub fn theta(&self, eps: f64, x: f64) -> f64 {
        let g = self.gamma(eps);
        // 1 - P(g x) = P(-g x) keeps full relative accuracy near 0
        self.mollifier.antideriv(-g * x)
    }

    /// `Theta'_eps = -rho^eps`
    pub fn theta_prime(&self, eps: f64, x: f64) -> f64 {
        -self.mollifier.scaled(self.gamma(eps), x)
    }

    pub fn theta_second(&self, eps: f64, x: f64) -> f64 {
        -self.mollifier.scaled_deriv(self.gamma(eps), x)
    }
}

/// Theta field at the given scale; the scale must grow as eps decreases.
pub fn build_theta(mollifier: &Mollifier, scale: ScaleFn, eps: &EpsGrid) -> Result<ThetaField> {
    scale.gammas(eps)?;
    Ok(ThetaField {
        mollifier: mollifier.clone(),
        scale,
    })
}
