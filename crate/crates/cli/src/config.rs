//! Run configuration: a TOML file with one section per input.
//!
//! ```toml
//! [operator]
//! preset = "momentum_interval"
//! n = 200
//!
//! [space]
//! points = [[-2.0, 1.0], [0.0, 1.0], [2.0, 1.0]]   # (phi, mu)
//!
//! [unitary]
//! value = "phase:0.0"
//!
//! [tolerances]
//! tol_rank = 1e-10
//! ```
//!
//! Relative paths are resolved against the directory holding the config
//! file.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use deficiency::bipartite::MeasureSpace;
use deficiency::extension::UnitaryParameter;
use deficiency::io::read_matrix;
use deficiency::operator::Preset;
use deficiency::{Tolerances, C64};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    MomentumInterval {
        n: usize,
    },
    LaplacianInterval {
        n: usize,
    },
    MatrixFile {
        matrix: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        constraints: Option<PathBuf>,
    },
}

impl OperatorSpec {
    pub fn preset(&self, base: &Path) -> Preset {
        match self {
            OperatorSpec::MomentumInterval { n } => Preset::MomentumInterval { n: *n },
            OperatorSpec::LaplacianInterval { n } => Preset::LaplacianInterval { n: *n },
            OperatorSpec::MatrixFile {
                matrix,
                constraints,
            } => Preset::MatrixFile {
                matrix: base.join(matrix),
                constraints: constraints.as_ref().map(|c| base.join(c)),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    /// `(φ_i, μ_i)` pairs.
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitarySpec {
    /// `phase:<θ>` or the path of a matrix file.
    pub value: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceSpec {
    pub tol_rank: f64,
    pub tol_zero: f64,
    pub tol_ortho: f64,
    pub tol_sym: f64,
    pub tol_boundary: f64,
}

impl Default for ToleranceSpec {
    fn default() -> Self {
        let t = Tolerances::default();
        Self {
            tol_rank: t.tol_rank,
            tol_zero: t.tol_zero,
            tol_ortho: t.tol_ortho,
            tol_sym: t.tol_sym,
            tol_boundary: t.tol_boundary,
        }
    }
}

impl From<ToleranceSpec> for Tolerances {
    fn from(t: ToleranceSpec) -> Self {
        Tolerances {
            tol_rank: t.tol_rank,
            tol_zero: t.tol_zero,
            tol_ortho: t.tol_ortho,
            tol_sym: t.tol_sym,
            tol_boundary: t.tol_boundary,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FramesSpec {
    /// Spectral parameters written as `a+bi`.
    pub z: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Number of equally spaced phases on `[0, 2π)`.
    pub phases: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub operator: OperatorSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator_b: Option<OperatorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unitary: Option<UnitarySpec>,
    #[serde(default)]
    pub tolerances: ToleranceSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames: Option<FramesSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
    /// Directory against which relative paths resolve.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self, CliError> {
        let mut cfg: RunConfig =
            toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))?;
        cfg.base_dir = base_dir.into();
        cfg.tolerances()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let base = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default();
        Self::parse(&text, base)
    }

    pub fn tolerances(&self) -> Result<Tolerances, CliError> {
        let t: Tolerances = self.tolerances.into();
        t.validate()?;
        Ok(t)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.base_dir.join(p)
    }

    pub fn space(&self) -> Result<MeasureSpace, CliError> {
        let spec = self
            .space
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [space] section".into()))?;
        Ok(MeasureSpace::new(&spec.points)?)
    }

    pub fn output_path(&self) -> Option<PathBuf> {
        self.output.as_ref().map(|o| self.resolve(&o.path))
    }
}

/// `phase:<θ>` or a matrix file path (relative to `base`).
pub fn parse_unitary(text: &str, base: &Path) -> Result<UnitaryParameter, CliError> {
    if let Some(theta) = text.strip_prefix("phase:") {
        let theta: f64 = theta
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("`{theta}` is not a phase")))?;
        if !theta.is_finite() {
            return Err(CliError::Config("phase must be finite".into()));
        }
        return Ok(UnitaryParameter::phase(theta));
    }
    let m = read_matrix(base.join(text))?;
    Ok(UnitaryParameter::new(m)?)
}

pub fn parse_complex(text: &str) -> Result<C64, CliError> {
    let z = C64::from_str(text.trim())
        .map_err(|_| CliError::Config(format!("`{text}` is not a complex number (use a+bi)")))?;
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(CliError::Config(format!("`{text}` is not finite")));
    }
    Ok(z)
}
