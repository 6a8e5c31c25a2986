//! Experiment configuration: TOML sections layered over a preset.
//!
//! ```toml
//! [shape]
//! kind = "peanut"
//!
//! [forward]
//! k = 4.0
//!
//! [imaging]
//! delta = 0.3
//! mask_rows = [[1, 16]]
//! mask_cols = [[48, 64]]
//! ```
//!
//! Every key is optional; missing keys come from the preset, which defaults to
//! the star experiment.

use crate::geometry::{ParametricCurve, Point, ShapeKind};
use crate::imaging::{ApertureMask, GridSpec, Indicator};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot parse configuration: {0}")]
    Parse(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preset {
    #[default]
    Star,
    Peanut,
}

impl FromStr for Preset {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "star" | "default" => Ok(Preset::Star),
            "peanut" => Ok(Preset::Peanut),
            other => Err(format!("unknown preset `{other}` (expected star or peanut)")),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Star => "star",
            Preset::Peanut => "peanut",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeConfig {
    pub kind: ShapeKind,
    /// empty means the kind's defaults
    pub params: Vec<f64>,
    pub center: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForwardConfig {
    pub k: f64,
    pub n_dirs: usize,
    pub quad_nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImagingConfig {
    pub rho: f64,
    pub which: Indicator,
    pub delta: f64,
    pub seed: u64,
    /// inclusive 1-based ranges of zeroed receiver rows
    pub mask_rows: Vec<[usize; 2]>,
    /// inclusive 1-based ranges of zeroed source columns
    pub mask_cols: Vec<[usize; 2]>,
    pub grid: GridSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub decay_radius_min: f64,
    pub decay_radius_max: f64,
    pub decay_radius_count: usize,
    pub decay_samples: usize,
    /// direction count for the decay fits; must resolve `k · decay_radius_max`
    pub decay_dirs: usize,
    pub chain_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub matrix: String,
    pub oracle_matrix: String,
    pub grid_csv: String,
    /// empty disables the raster
    pub grid_pgm: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub shape: ShapeConfig,
    pub forward: ForwardConfig,
    pub imaging: ImagingConfig,
    pub verify: VerifyConfig,
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig::preset(Preset::Star)
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (key, value) in over {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, value) => {
                base.insert(key, value);
            }
        }
    }
}

impl ExperimentConfig {
    pub fn preset(preset: Preset) -> Self {
        let kind = match preset {
            Preset::Star => ShapeKind::Star,
            Preset::Peanut => ShapeKind::Peanut,
        };
        ExperimentConfig {
            shape: ShapeConfig {
                kind,
                params: kind.default_params(),
                center: [0.0, 0.0],
            },
            forward: ForwardConfig {
                k: 4.0,
                n_dirs: 64,
                quad_nodes: 128,
            },
            imaging: ImagingConfig {
                rho: 4.0,
                which: Indicator::Ip,
                delta: 0.0,
                seed: 0,
                mask_rows: Vec::new(),
                mask_cols: Vec::new(),
                grid: GridSpec::default(),
            },
            verify: VerifyConfig {
                decay_radius_min: 10.0,
                decay_radius_max: 100.0,
                decay_radius_count: 10,
                decay_samples: 32,
                decay_dirs: 1024,
                chain_points: 100,
            },
            output: OutputConfig {
                dir: PathBuf::from("out"),
                matrix: "farfield.txt".into(),
                oracle_matrix: "oracle.txt".into(),
                grid_csv: "grid.csv".into(),
                grid_pgm: "grid.pgm".into(),
            },
        }
    }

    /// Overlays TOML text on a preset.
    pub fn from_toml(text: &str, preset: Preset) -> Result<Self, ConfigError> {
        let mut over: toml::Table = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        // a new kind without params takes that kind's defaults, not the preset's
        if let Some(toml::Value::Table(shape)) = over.get_mut("shape") {
            if shape.contains_key("kind") && !shape.contains_key("params") {
                shape.insert("params".into(), toml::Value::Array(Vec::new()));
            }
        }
        let mut base = toml::Table::try_from(ExperimentConfig::preset(preset))
            .map_err(|e| ConfigError::Parse(e.to_string()))?;
        merge(&mut base, over);
        let cfg: ExperimentConfig = toml::Value::Table(base)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn curve(&self) -> Result<ParametricCurve, ConfigError> {
        ParametricCurve::with_center(self.shape.kind, &self.shape.params, self.shape.center)
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn mask(&self) -> ApertureMask {
        let expand = |ranges: &[[usize; 2]]| -> Vec<usize> { ranges.iter().flat_map(|[a, b]| *a..=*b).collect() };
        ApertureMask::new(expand(&self.imaging.mask_rows), expand(&self.imaging.mask_cols))
    }

    pub fn decay_radii(&self) -> Vec<f64> {
        let v = &self.verify;
        let count = v.decay_radius_count;
        let ratio = (v.decay_radius_max / v.decay_radius_min).ln();
        (0..count)
            .map(|i| v.decay_radius_min * (ratio * i as f64 / (count - 1) as f64).exp())
            .collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        let f = &self.forward;
        if !(f.k.is_finite() && f.k > 0.0) {
            return bad(format!("k must be positive, got {}", f.k));
        }
        if f.n_dirs < 4 {
            return bad(format!("n_dirs must be at least 4, got {}", f.n_dirs));
        }
        if f.quad_nodes < crate::forward::MIN_NODES || f.quad_nodes % 2 != 0 {
            return bad(format!(
                "quad_nodes must be even and at least {}, got {}",
                crate::forward::MIN_NODES,
                f.quad_nodes
            ));
        }
        self.curve()?;
        let im = &self.imaging;
        if !(im.rho.is_finite() && im.rho > 0.0) {
            return bad(format!("rho must be positive, got {}", im.rho));
        }
        if !(0.0..1.0).contains(&im.delta) {
            return bad(format!("delta must lie in [0, 1), got {}", im.delta));
        }
        if im.grid.validate().is_err() {
            return bad("grid needs a nonempty extent and at least 2 points per axis".into());
        }
        for [a, b] in im.mask_rows.iter().chain(&im.mask_cols) {
            if *a == 0 || a > b || *b > f.n_dirs {
                return bad(format!("mask range [{a}, {b}] outside 1..={}", f.n_dirs));
            }
        }
        let v = &self.verify;
        if !(v.decay_radius_min > 0.0 && v.decay_radius_max > v.decay_radius_min) || v.decay_radius_count < 2 {
            return bad("decay radii must satisfy 0 < min < max with at least 2 radii".into());
        }
        if v.decay_samples == 0 || v.chain_points == 0 || v.decay_dirs < 4 {
            return bad("decay_samples, chain_points and decay_dirs must be positive".into());
        }
        let o = &self.output;
        if o.matrix.is_empty() || o.grid_csv.is_empty() || o.oracle_matrix.is_empty() {
            return bad("output file names must not be empty".into());
        }
        Ok(())
    }
}
