//! JSON experiment configuration. Parsing is complete and strict (unknown
//! keys rejected) before any computation starts.

use std::f64::consts::PI;
use std::path::PathBuf;

use colombeau::bichar::CoeffField;
use colombeau::scale::{FIT_TOL, TAIL_FRACTION};
use colombeau::symbols::SymbolFamily;
use colombeau::transport::{log_gamma_grid, HsScanSetup, PropagationSetup};
use colombeau::wavefront::WfParams;
use colombeau::{DistSpec, EpsGrid, Mollifier, ScaleFn, SpatialGrid};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EpsSpec {
    /// `eps_k = 2^-k`, `k = first..=last`
    Dyadic {
        first: i32,
        last: i32,
    },
    Geometric {
        eps0: f64,
        ratio: f64,
        count: usize,
    },
    /// `log(1/eps)` log-spaced over `[lo, hi]`
    LogGamma {
        lo: f64,
        hi: f64,
        count: usize,
    },
    Values(Vec<f64>),
}

impl EpsSpec {
    pub fn build(&self) -> colombeau::Result<EpsGrid> {
        match self {
            EpsSpec::Dyadic { first, last } => EpsGrid::dyadic(*first, *last),
            EpsSpec::Geometric { eps0, ratio, count } => EpsGrid::geometric(*eps0, *ratio, *count),
            EpsSpec::LogGamma { lo, hi, count } => log_gamma_grid(*lo, *hi, *count),
            EpsSpec::Values(v) => EpsGrid::new(v.clone()),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<EpsSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<ScaleFn>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mollifier: Option<Mollifier>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<SpatialGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub val: Option<ValConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wf: Option<WfConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hs: Option<HsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bichar: Option<BicharConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol: Option<SymbolConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prop: Option<PropConfig>,
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self, CliError> {
        serde_json::from_str(s).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn eps_grid(&self) -> Result<EpsGrid, CliError> {
        let spec = self
            .eps
            .as_ref()
            .ok_or_else(|| CliError::Config("missing `eps`".into()))?;
        Ok(spec.build()?)
    }

    pub fn scale_fn(&self) -> ScaleFn {
        self.scale.unwrap_or(ScaleFn::Log)
    }

    pub fn spatial_grid(&self) -> Result<SpatialGrid, CliError> {
        self.grid
            .clone()
            .ok_or_else(|| CliError::Config("missing `grid`".into()))
    }

    pub fn mollifier(&self) -> Mollifier {
        self.mollifier.clone().unwrap_or_default()
    }
}

fn tail() -> f64 {
    TAIL_FRACTION
}

fn fit_tol() -> f64 {
    FIT_TOL
}

fn b_tol() -> f64 {
    0.02
}

fn ten() -> u32 {
    10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetDecl {
    pub name: String,
    /// Expression in `eps`; `log` stands for `ln(1/eps)`.
    pub expr: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_slow: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValConfig {
    pub nets: Vec<NetDecl>,
    #[serde(default = "tail")]
    pub tail_fraction: f64,
    #[serde(default = "fit_tol")]
    pub slow_tol: f64,
    /// Tolerance of `expect_b` checks.
    #[serde(default = "b_tol")]
    pub b_tol: f64,
    /// Moderate when `b >= -n_max`, negligible when `b >= q_max`.
    #[serde(default = "ten")]
    pub n_max: u32,
    #[serde(default = "ten")]
    pub q_max: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WfInput {
    /// Mollifier embedding of a distribution on the top-level grid.
    Embed { spec: DistSpec },
    /// Solution of the mollified-Heaviside problem on the top-level (x, t)
    /// grid.
    HurdSattinger { s0: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WfConfig {
    pub input: WfInput,
    pub base_points: Vec<Vec<f64>>,
    /// Directions on the circle for 2-D grids; 1-D grids use +-1.
    #[serde(default = "sixteen")]
    pub n_dirs: usize,
    pub params: WfParams,
    /// Base points expected singular; all others are expected regular.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_singular: Option<Vec<Vec<f64>>>,
}

fn sixteen() -> usize {
    16
}

fn s0_default() -> f64 {
    1.5
}

fn yes() -> bool {
    true
}

fn heat_every() -> usize {
    4
}

fn bichar_every() -> usize {
    10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HsConfig {
    #[serde(default = "s0_default")]
    pub s0: f64,
    /// Full scan setup; defaults to the standard 512 x 512 setup at `s0`,
    /// with top-level `eps`, `scale` and 2-D `grid` applied when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub setup: Option<HsScanSetup>,
    #[serde(default = "yes")]
    pub ellipticity: bool,
    /// Persist every solution field as a grid-function directory.
    #[serde(default)]
    pub save_fields: bool,
    /// Heatmap for every k-th eps (and the last).
    #[serde(default = "heat_every")]
    pub heatmap_every: usize,
    /// Keep every k-th bicharacteristic sample in the CSV.
    #[serde(default = "bichar_every")]
    pub bichar_every: usize,
}

impl Default for HsConfig {
    fn default() -> Self {
        HsConfig {
            s0: s0_default(),
            setup: None,
            ellipticity: true,
            save_fields: false,
            heatmap_every: heat_every(),
            bichar_every: bichar_every(),
        }
    }
}

fn bichar_dt() -> f64 {
    1e-3
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BicharConfig {
    pub coeff: CoeffField,
    pub x0: f64,
    pub xi0: f64,
    /// Defaults to null data `-a(x0, 0) xi0` at the largest eps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau0: Option<f64>,
    pub t_end: f64,
    #[serde(default = "bichar_dt")]
    pub dt: f64,
    #[serde(default)]
    pub waive_nullity: bool,
    #[serde(default)]
    pub step_halving: bool,
    #[serde(default = "bichar_every")]
    pub every: usize,
}

fn cone() -> f64 {
    PI / 8.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassCheck {
    pub k: Vec<(f64, f64)>,
    pub alpha_max: usize,
    pub beta_max: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolConfig {
    pub symbol: SymbolFamily,
    pub x0: Vec<f64>,
    pub xi0: Vec<f64>,
    pub u_radius: f64,
    #[serde(default = "cone")]
    pub cone_angle: f64,
    pub band: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<ClassCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_elliptic: Option<bool>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropConfig {
    pub coeff: CoeffField,
    pub g: DistSpec,
    pub times: Vec<f64>,
    pub setup: PropagationSetup,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eps_specs() {
        let d: EpsSpec = serde_json::from_str(r#"{"dyadic": {"first": 2, "last": 5}}"#).unwrap();
        assert_eq!(d.build().unwrap().values(), &[0.25, 0.125, 0.0625, 0.03125]);
        let g: EpsSpec =
            serde_json::from_str(r#"{"log_gamma": {"lo": 1.0, "hi": 4.0, "count": 3}}"#).unwrap();
        let e = g.build().unwrap();
        assert!((e.get(1) - (-2f64).exp()).abs() < 1e-15);
        let v: EpsSpec = serde_json::from_str(r#"{"values": [0.5, 0.6]}"#).unwrap();
        assert!(v.build().is_err());
        assert!(
            serde_json::from_str::<EpsSpec>(r#"{"dyadic": {"first": 2, "last": 5, "x": 1}}"#)
                .is_err()
        );
    }

    #[test]
    fn strict_and_defaulted() {
        let c = ExperimentConfig::from_json(r#"{"val": {"nets": [{"name": "a", "expr": "eps"}]}}"#)
            .unwrap();
        let v = c.val.as_ref().unwrap();
        assert_eq!((v.tail_fraction, v.n_max, v.q_max), (TAIL_FRACTION, 10, 10));
        assert_eq!(c.scale_fn(), ScaleFn::Log);
        assert!(matches!(c.eps_grid(), Err(CliError::Config(_))));
        assert!(ExperimentConfig::from_json(r#"{"val": {"nets": [], "extra": 1}}"#).is_err());
        assert!(
            ExperimentConfig::from_json(r#"{"hs": {"s0": 1.5, "setup": {"s0": 1.5}}}"#).is_err()
        );
        let h = ExperimentConfig::from_json(r#"{"hs": {}}"#)
            .unwrap()
            .hs
            .unwrap();
        assert_eq!(h, HsConfig::default());
    }

    #[test]
    fn blocks_round_trip() {
        let text = r#"{
            "bichar": {"coeff": {"kind": "constant", "c": 1.0}, "x0": 0.0, "xi0": 1.0, "t_end": 1.0},
            "symbol": {"symbol": "bracket", "x0": [0.0], "xi0": [1.0], "u_radius": 0.1, "band": [1.0, 10.0]},
            "wf": {"input": {"kind": "hurd_sattinger", "s0": 1.5}, "base_points": [[0.0, 1.5]],
                   "params": {"r": 0.3, "l_values": [1, 2, 3, 4], "scale": "log"}}
        }"#;
        let c = ExperimentConfig::from_json(text).unwrap();
        let again = ExperimentConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(c.symbol, again.symbol);
        assert_eq!(c.wf, again.wf);
        assert_eq!(again.bichar.unwrap().dt, 1e-3);
    }
}
