use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::EngineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    FixedStep,
    EventDriven,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::FixedStep => "fixed",
            Mode::EventDriven => "event",
        })
    }
}

impl FromStr for Mode {
    type Err = EngineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fixed" | "fixed_step" => Ok(Mode::FixedStep),
            "event" | "event_driven" => Ok(Mode::EventDriven),
            other => Err(EngineError::Config(format!("unknown mode `{other}`"))),
        }
    }
}

/// Clock and integration settings for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub base_frequency_hz: f64,
    /// Step size for fixed-step mode; ignored by the event-driven engine.
    pub dt_s: f64,
    pub duration_cycles: u64,
    pub mode: Mode,
    pub seed: u64,
}

impl SimConfig {
    /// `dt = T/1000`, the reference resolution.
    pub fn new(base_frequency_hz: f64, duration_cycles: u64, mode: Mode) -> Result<Self, EngineError> {
        let cfg = Self {
            base_frequency_hz,
            dt_s: 1.0 / (1000.0 * base_frequency_hz),
            duration_cycles,
            mode,
            seed: 0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_dt(mut self, dt_s: f64) -> Result<Self, EngineError> {
        self.dt_s = dt_s;
        self.validate()?;
        Ok(self)
    }

    pub fn period(&self) -> f64 {
        1.0 / self.base_frequency_hz
    }

    pub fn duration_s(&self) -> f64 {
        self.duration_cycles as f64 * self.period()
    }

    pub fn steps_per_cycle(&self) -> u64 {
        (self.period() / self.dt_s).round() as u64
    }

    /// Threshold slack in cycles for the configured mode.
    pub fn tolerance(&self) -> f64 {
        match self.mode {
            Mode::FixedStep => 0.5 / self.steps_per_cycle() as f64 + crate::neurons::EPS,
            Mode::EventDriven => crate::neurons::EPS,
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |m: String| Err(EngineError::Config(m));
        if !(self.base_frequency_hz.is_finite() && self.base_frequency_hz > 0.0) {
            return bad(format!("base frequency must be positive, got {}", self.base_frequency_hz));
        }
        if !(self.dt_s.is_finite() && self.dt_s > 0.0) {
            return bad(format!("dt must be positive, got {}", self.dt_s));
        }
        let ratio = self.period() / self.dt_s;
        if ratio < 1.0 - 1e-9 || (ratio - ratio.round()).abs() > 1e-9 * ratio {
            return bad(format!("dt = {} s does not divide the period {} s", self.dt_s, self.period()));
        }
        if self.duration_cycles == 0 {
            return bad("duration must be at least one cycle".into());
        }
        Ok(())
    }

    /// Parse a `key = value` file. Blank lines and `#` comments are skipped;
    /// missing keys keep the defaults of [`SimConfig::default`].
    pub fn parse(text: &str) -> Result<Self, EngineError> {
        let mut cfg = Self::default();
        let mut dt_given = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| EngineError::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let num = |v: &str| {
                v.parse::<f64>()
                    .map_err(|_| EngineError::Config(format!("line {}: bad number `{v}`", lineno + 1)))
            };
            let int = |v: &str| {
                v.parse::<u64>()
                    .map_err(|_| EngineError::Config(format!("line {}: bad integer `{v}`", lineno + 1)))
            };
            match key {
                "base_frequency_hz" => cfg.base_frequency_hz = num(value)?,
                "dt_s" => {
                    cfg.dt_s = num(value)?;
                    dt_given = true;
                }
                "duration_cycles" => cfg.duration_cycles = int(value)?,
                "mode" => cfg.mode = value.parse()?,
                "seed" => cfg.seed = int(value)?,
                other => return Err(EngineError::Config(format!("line {}: unknown key `{other}`", lineno + 1))),
            }
        }
        if !dt_given {
            cfg.dt_s = cfg.period() / 1000.0;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_kv(&self) -> String {
        format!(
            "base_frequency_hz = {}\ndt_s = {}\nduration_cycles = {}\nmode = {}\nseed = {}\n",
            self.base_frequency_hz, self.dt_s, self.duration_cycles, self.mode, self.seed
        )
    }
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            base_frequency_hz: 10.0,
            dt_s: 1e-4,
            duration_cycles: 8,
            mode: Mode::FixedStep,
            seed: 0,
        }
    }
}
