use std::path::{Path, PathBuf};

use adaptive_fermions::circuit::CircuitParams;
use adaptive_fermions::classical::BarwParams;
use adaptive_fermions::scaling::CollapseMode;
use serde::{Deserialize, Serialize};

use crate::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Quantum,
    Classical,
    Barw,
}

fn default_steady_fraction() -> f64 {
    0.5
}

/// Grid of `(p, r)` points run with the base parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub points: Vec<[f64; 2]>,
    /// Steady-state values average the probe times with `t >= fraction * t_max`.
    #[serde(default = "default_steady_fraction")]
    pub steady_fraction: f64,
}

fn default_nu_par() -> f64 {
    3.22
}

/// A family of runs that differ in `L` (critical mode) or `p` (off-critical).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollapseConfig {
    pub mode: CollapseMode,
    pub p_c: f64,
    pub keys: Vec<f64>,
    pub theta: f64,
    pub z: f64,
    #[serde(default = "default_nu_par")]
    pub nu_par: f64,
    #[serde(default = "default_column")]
    pub column: String,
}

fn default_column() -> String {
    "rho_active".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub trajectories: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Bit-flip rate per step, classical mode only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<f64>,
    /// Region sizes as fractions of `L`, quantum mode only.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub entropy_cuts: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub circuit: Option<CircuitParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub barw: Option<BarwParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collapse: Option<CollapseConfig>,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| invalid(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.trajectories == 0 {
            return Err(invalid("trajectories must be at least 1"));
        }
        match self.mode {
            Mode::Quantum | Mode::Classical => {
                let c = self
                    .circuit
                    .as_ref()
                    .ok_or_else(|| invalid("quantum and classical modes need a [circuit] table"))?;
                if self.barw.is_some() {
                    return Err(invalid("[barw] is only valid in barw mode"));
                }
                c.validate()?;
            }
            Mode::Barw => {
                let b = self
                    .barw
                    .as_ref()
                    .ok_or_else(|| invalid("barw mode needs a [barw] table"))?;
                if self.circuit.is_some() {
                    return Err(invalid("[circuit] is not used in barw mode"));
                }
                b.validate()?;
            }
        }
        if let Some(noise) = self.noise {
            if self.mode != Mode::Classical {
                return Err(invalid("noise applies to classical mode only"));
            }
            if !(0.0..=1.0).contains(&noise) {
                return Err(invalid(format!("noise {noise} outside [0, 1]")));
            }
        }
        if !self.entropy_cuts.is_empty() && self.mode != Mode::Quantum {
            return Err(invalid("entropy_cuts apply to quantum mode only"));
        }
        if let Some(&f) = self.entropy_cuts.iter().find(|f| !(**f > 0.0 && **f < 1.0)) {
            return Err(invalid(format!("entropy cut {f} outside (0, 1)")));
        }
        if let Some(s) = &self.sweep {
            if self.mode == Mode::Barw {
                return Err(invalid("sweeps run quantum or classical circuits"));
            }
            if s.points.is_empty() {
                return Err(invalid("sweep grid is empty"));
            }
            if !(0.0..1.0).contains(&s.steady_fraction) {
                return Err(invalid("steady_fraction must lie in [0, 1)"));
            }
        }
        if let Some(c) = &self.collapse {
            if self.mode == Mode::Barw {
                return Err(invalid("collapses run quantum or classical circuits"));
            }
            if c.keys.len() < 2 {
                return Err(invalid("a collapse needs at least two keys"));
            }
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        match (&self.circuit, &self.barw) {
            (Some(c), _) => c.seed,
            (_, Some(b)) => b.seed,
            _ => 0,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        if let Some(c) = self.circuit.as_mut() {
            c.seed = seed;
        }
        if let Some(b) = self.barw.as_mut() {
            b.seed = seed;
        }
    }
}
