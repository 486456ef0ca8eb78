//! Run configuration: a TOML file with `[model]`, `[bath]` and `[sim]` tables,
//! so every setting has a one-level dotted name such as `sim.delta`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tempo_core::bath::{BathConfig, SpectralDensity};
use tempo_core::engine::SimulationConfig;
use tempo_core::influence::TrotterMode;
use tempo_core::models::{build_spin_boson, build_two_spin, InitialState, Spin, SpinBosonSpec, TwoSpinSpec};
use tempo_core::tensor::TruncationPolicy;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error("invalid `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
}

fn invalid(key: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key, reason: reason.into() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    SpinBoson,
    TwoSpin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    SzMax,
    SxMax,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    Tempo,
    /// Dense augmented tensor, no truncation. Only for small `K`.
    Dense,
}

/// Accepts `0.5`, `1`, `"1/2"`, `"half"`, `"one"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpinValue {
    Number(f64),
    Text(String),
}

impl SpinValue {
    fn parse(&self) -> Result<Spin, ConfigError> {
        match self {
            SpinValue::Number(x) if *x == 0.5 => Ok(Spin::Half),
            SpinValue::Number(x) if *x == 1.0 => Ok(Spin::One),
            SpinValue::Text(s) if matches!(s.as_str(), "1/2" | "half" | "0.5") => Ok(Spin::Half),
            SpinValue::Text(s) if matches!(s.as_str(), "1" | "one") => Ok(Spin::One),
            other => Err(invalid("model.spin", format!("expected 1/2 or 1, got {other:?}"))),
        }
    }
}

fn default_spin() -> SpinValue {
    SpinValue::Text("1/2".into())
}

fn default_omega() -> f64 {
    1.0
}

fn default_initial() -> InitialKind {
    InitialKind::SzMax
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(rename = "type")]
    pub kind: ModelKind,
    #[serde(default = "default_spin")]
    pub spin: SpinValue,
    #[serde(default = "default_omega")]
    pub omega: f64,
    #[serde(default = "default_initial")]
    pub initial: InitialKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathSection {
    pub alpha: f64,
    pub omega_c: f64,
    #[serde(rename = "T", default)]
    pub temperature: f64,
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    pub separation: Option<f64>,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<u32>,
    /// Two-column `ω J(ω)` file replacing the Ohmic form (spin-boson only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectral_table: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_max: Option<f64>,
}

fn default_lambda_c() -> f64 {
    1e-7
}

fn default_reduce() -> bool {
    true
}

fn default_solver() -> Solver {
    Solver::Tempo
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub delta: f64,
    pub steps: usize,
    /// Memory length; absent means the whole history is kept.
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub memory_len: Option<usize>,
    #[serde(default = "default_lambda_c")]
    pub lambda_c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_bond: Option<usize>,
    #[serde(default)]
    pub mode: TrotterMode,
    #[serde(default = "default_reduce")]
    pub reduce: bool,
    #[serde(default = "default_solver")]
    pub solver: Solver,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blowup_threshold: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub bath: BathSection,
    pub sim: SimSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        let mut cfg = Self::from_toml(&text)?;
        // Relative table paths are taken from the config file's directory.
        if let (Some(table), Some(dir)) = (&cfg.bath.spectral_table, path.parent()) {
            if table.is_relative() {
                cfg.bath.spectral_table = Some(dir.join(table));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let finite = |key, x: f64| if x.is_finite() { Ok(()) } else { Err(invalid(key, format!("must be finite, got {x}"))) };
        finite("model.omega", self.model.omega)?;
        self.model.spin.parse()?;
        if !(self.bath.alpha >= 0.0) || !self.bath.alpha.is_finite() {
            return Err(invalid("bath.alpha", format!("must be ≥ 0, got {}", self.bath.alpha)));
        }
        if !(self.bath.omega_c > 0.0) || !self.bath.omega_c.is_finite() {
            return Err(invalid("bath.omega_c", format!("must be > 0, got {}", self.bath.omega_c)));
        }
        if !(self.bath.temperature >= 0.0) || !self.bath.temperature.is_finite() {
            return Err(invalid("bath.T", format!("must be ≥ 0, got {}", self.bath.temperature)));
        }
        if let Some(w) = self.bath.omega_max {
            if !(w > 0.0) {
                return Err(invalid("bath.omega_max", format!("must be > 0, got {w}")));
            }
        }
        if self.model.kind == ModelKind::TwoSpin {
            match self.bath.separation {
                Some(r) if r >= 0.0 => {}
                Some(r) => return Err(invalid("bath.R", format!("must be ≥ 0, got {r}"))),
                None => return Err(invalid("bath.R", "required for the two-spin model")),
            }
            match self.bath.dimension {
                Some(1..=3) => {}
                Some(d) => return Err(invalid("bath.D", format!("must be 1, 2 or 3, got {d}"))),
                None => return Err(invalid("bath.D", "required for the two-spin model")),
            }
            if self.bath.spectral_table.is_some() {
                return Err(invalid("bath.spectral_table", "only supported for the spin-boson model"));
            }
        }
        let sim = &self.sim;
        if !(sim.delta > 0.0) || !sim.delta.is_finite() {
            return Err(invalid("sim.delta", format!("must be > 0, got {}", sim.delta)));
        }
        if sim.steps == 0 {
            return Err(invalid("sim.steps", "must be ≥ 1"));
        }
        if sim.memory_len == Some(0) {
            return Err(invalid("sim.K", "must be ≥ 1"));
        }
        if !(0.0..1.0).contains(&sim.lambda_c) {
            return Err(invalid("sim.lambda_c", format!("must lie in [0, 1), got {}", sim.lambda_c)));
        }
        if sim.max_bond == Some(0) {
            return Err(invalid("sim.max_bond", "must be ≥ 1"));
        }
        if let Some(b) = sim.blowup_threshold {
            if !(b > 0.0) {
                return Err(invalid("sim.blowup_threshold", format!("must be > 0, got {b}")));
            }
        }
        Ok(())
    }

    /// Builds the engine configuration. Model-level rejections surface as
    /// [`ConfigError`] too, since they stem from the file's values.
    pub fn simulation(&self) -> Result<SimulationConfig, ConfigError> {
        self.validate()?;
        let model_err = |e: tempo_core::TempoError| ConfigError::Parse(e.to_string());
        let mut parts = match self.model.kind {
            ModelKind::SpinBoson => {
                let spec = SpinBosonSpec {
                    spin: self.model.spin.parse()?,
                    omega: self.model.omega,
                    alpha: self.bath.alpha,
                    omega_c: self.bath.omega_c,
                    temperature: self.bath.temperature,
                    initial: match self.model.initial {
                        InitialKind::SzMax => InitialState::SzMax,
                        InitialKind::SxMax => InitialState::SxMax,
                    },
                };
                build_spin_boson(&spec).map_err(model_err)?
            }
            ModelKind::TwoSpin => {
                let spec = TwoSpinSpec {
                    omega: self.model.omega,
                    alpha: self.bath.alpha,
                    omega_c: self.bath.omega_c,
                    temperature: self.bath.temperature,
                    separation: self.bath.separation.expect("validated"),
                    dimension: self.bath.dimension.expect("validated"),
                };
                build_two_spin(&spec).map_err(model_err)?
            }
        };
        if let Some(path) = &self.bath.spectral_table {
            parts.spectral_density = SpectralDensity::from_table_file(path)
                .map_err(|e| invalid("bath.spectral_table", e.to_string()))?;
        }
        parts.bath = BathConfig { omega_max: self.bath.omega_max, ..BathConfig::at_temperature(self.bath.temperature) };
        let mut cfg = parts.into_config(self.sim.delta, self.sim.steps);
        cfg.memory_len = self.sim.memory_len.unwrap_or(self.sim.steps);
        cfg.policy = TruncationPolicy { relative_cutoff: self.sim.lambda_c, max_bond: self.sim.max_bond };
        cfg.mode = self.sim.mode;
        cfg.reduce = self.sim.reduce;
        if let Some(b) = self.sim.blowup_threshold {
            cfg.blowup_threshold = b;
        }
        Ok(cfg)
    }

    /// Sets one swept parameter. A timestep sweep keeps the final time fixed.
    pub fn with_param(&self, param: SweepParam, value: f64) -> Result<Self, ConfigError> {
        let mut cfg = self.clone();
        match param {
            SweepParam::Alpha => cfg.bath.alpha = value,
            SweepParam::LambdaC => cfg.sim.lambda_c = value,
            SweepParam::K => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(invalid("sim.K", format!("sweep value {value} is not a positive integer")));
                }
                cfg.sim.memory_len = Some(value as usize);
            }
            SweepParam::Delta => {
                if !(value > 0.0) {
                    return Err(invalid("sim.delta", format!("sweep value {value} must be > 0")));
                }
                let t_final = self.sim.delta * self.sim.steps as f64;
                cfg.sim.delta = value;
                cfg.sim.steps = ((t_final / value).round() as usize).max(1);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Alpha,
    #[value(name = "K")]
    K,
    #[value(name = "lambda_c")]
    LambdaC,
    Delta,
}

impl SweepParam {
    pub fn key(self) -> &'static str {
        match self {
            SweepParam::Alpha => "alpha",
            SweepParam::K => "K",
            SweepParam::LambdaC => "lambda_c",
            SweepParam::Delta => "delta",
        }
    }
}
