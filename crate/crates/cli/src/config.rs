//! Run configuration: one TOML file, every field defaulted, unknown keys rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wfgem::sim::Scheme;
use wfgem::verify::SuiteConfig;
use wfgem::{ParamSequence, SequenceRule, WFParams};

/// Invalid configuration or flags; reported with exit code 3.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn config_error(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; path `i` of a run uses stream `i` of this seed.
    pub seed: u64,
    /// Directory receiving CSV/JSON artifacts and `manifest.json`.
    pub out_dir: PathBuf,
    /// Worker threads (`None` = rayon default). Results do not depend on it.
    pub threads: Option<usize>,
    pub params: ParamsBlock,
    pub sequence: SequenceBlock,
    pub numerics: Numerics,
    pub suite: SuiteConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            out_dir: PathBuf::from("wfgem-out"),
            threads: None,
            params: ParamsBlock::default(),
            sequence: SequenceBlock::default(),
            numerics: Numerics::default(),
            suite: SuiteConfig::default(),
        }
    }
}

/// One-dimensional parameters `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsBlock {
    pub a: f64,
    pub b: f64,
}

impl Default for ParamsBlock {
    fn default() -> Self {
        Self { a: 0.5, b: 0.5 }
    }
}

/// A parameter sequence: a rule, or explicit entries that take precedence over it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SequenceBlock {
    pub rule: SequenceRule,
    /// Explicit `[{a, b}, …]` entries; the sequence is then finite.
    pub entries: Option<Vec<ParamsBlock>>,
    /// Number of coordinates evaluated or simulated.
    pub n: usize,
}

impl Default for SequenceBlock {
    fn default() -> Self {
        Self {
            rule: SequenceRule::TwoParameter {
                alpha: 0.5,
                theta: 1.0,
            },
            entries: None,
            n: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    /// Degree of the spectral basis.
    pub n_basis: usize,
    /// Points per axis of kernel grids.
    pub grid: usize,
    /// Times for kernel and constant tables.
    pub times: Vec<f64>,
    /// `r` values of the β(r) table.
    pub r: Vec<f64>,
    /// Simulation horizon.
    pub horizon: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub x0: f64,
    pub y0: f64,
    /// Harnack exponent `p > 1`.
    pub p: f64,
    pub scheme: Scheme,
    /// Number of GEM draws.
    pub count: usize,
    /// Record every `stride`-th step of GEM paths.
    pub stride: usize,
    pub kernel_tol: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            n_basis: 60,
            grid: 17,
            times: vec![0.1, 0.5, 1.0],
            r: vec![1e-3, 1e-2, 1e-1, 1.0],
            horizon: 1.0,
            dt: 1e-3,
            n_paths: 100,
            x0: 0.3,
            y0: 0.7,
            p: 2.0,
            scheme: Scheme::ProjectedEuler,
            count: 100,
            stride: 10,
            kernel_tol: wfgem::spectral::DEFAULT_KERNEL_TOL,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        toml::from_str(text).map_err(|e| config_error(e.to_string()))
    }

    pub fn wf_params(&self) -> anyhow::Result<WFParams> {
        WFParams::new(self.params.a, self.params.b).map_err(|e| config_error(format!("params: {e}")))
    }

    pub fn param_sequence(&self) -> anyhow::Result<ParamSequence> {
        let seq = match &self.sequence.entries {
            Some(entries) => entries
                .iter()
                .map(|p| WFParams::new(p.a, p.b))
                .collect::<wfgem::Result<Vec<_>>>()
                .and_then(ParamSequence::finite),
            None => ParamSequence::from_rule(self.sequence.rule, self.sequence.n.max(1)),
        };
        seq.map_err(|e| config_error(format!("sequence: {e}")))
    }

    /// Checks the numerics block; the core library validates the rest on use.
    pub fn validate(&self) -> anyhow::Result<()> {
        let n = &self.numerics;
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(config_error(format!("numerics.{name}: must be finite and > 0, got {v}")))
            }
        };
        positive("horizon", n.horizon)?;
        positive("dt", n.dt)?;
        positive("kernel_tol", n.kernel_tol)?;
        for &t in &n.times {
            positive("times", t)?;
        }
        for &r in &n.r {
            positive("r", r)?;
        }
        for (name, v) in [("x0", n.x0), ("y0", n.y0)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(config_error(format!("numerics.{name}: must lie in [0, 1], got {v}")));
            }
        }
        if !(n.p > 1.0 && n.p.is_finite()) {
            return Err(config_error(format!("numerics.p: must be > 1, got {}", n.p)));
        }
        if n.n_basis == 0 || n.grid < 2 || n.n_paths == 0 || n.count == 0 {
            return Err(config_error(
                "numerics: n_basis, n_paths and count must be >= 1 and grid >= 2",
            ));
        }
        if self.threads == Some(0) {
            return Err(config_error("threads: must be >= 1"));
        }
        Ok(())
    }
}
