//! Simulation configuration and its flat `key = value` file format.
//!
//! ```text
//! # closed loop with averaged sampled measurements
//! m = 64
//! dt = 2.5e-4
//! t_end = 14
//! kappa = -0.5
//! mu = 0.95
//! control = sampled        # sampled | continuous
//! measurement = averaged   # averaged | point
//! h = 0.35
//! delta_bar = 0.25
//! ic = sinsin              # sinsin | bubble | zero
//! ic_amplitude = 0.236
//! p1 = 80.6354             # p1, p2, r, delta enable the V1 monitor
//! p2 = 5.145
//! r = 12.8
//! delta = 0.1
//! output_stride = 40
//! snapshots = 0, 1.4, 14
//! ```

use std::f64::consts::PI;
use std::str::FromStr;

use thiserror::Error;

use crate::field::{Field, FieldError, Grid2D, MeasurementMode, Partition};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {value}")]
    Value { key: String, value: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlMode {
    Continuous,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IcKind {
    /// `sin(pi x1) sin(pi x2)`: vanishes on the boundary, normal derivative does not.
    SinSin,
    /// `256 x1^2 (1-x1)^2 x2^2 (1-x2)^2`, peak 1, fully clamped.
    Bubble,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialCondition {
    pub kind: IcKind,
    pub amplitude: f64,
}

impl InitialCondition {
    pub fn field(&self, grid: Grid2D) -> Field {
        let a = self.amplitude;
        match self.kind {
            IcKind::SinSin => Field::clamped_from_fn(grid, |x, y| a * (PI * x).sin() * (PI * y).sin()),
            IcKind::Bubble => Field::clamped_from_fn(grid, |x, y| {
                a * 256.0 * (x * (1.0 - x)).powi(2) * (y * (1.0 - y)).powi(2)
            }),
            IcKind::Zero => Field::zeros(grid),
        }
    }
}

/// Weights of `V1 = p1 ||z||^2 + p2 ||lap z||^2 + r (t_{k+1} - t) int e^{2 delta (s-t)} ||z_s||^2 ds`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorWeights {
    pub p1: f64,
    pub p2: f64,
    pub r: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub m: usize,
    pub dt: f64,
    pub t_end: f64,
    pub kappa: f64,
    pub mu: f64,
    pub control: ControlMode,
    pub measurement: MeasurementMode,
    pub h: f64,
    pub delta_bar: f64,
    pub ic: InitialCondition,
    pub monitor: Option<MonitorWeights>,
    pub output_stride: usize,
    pub snapshots: Vec<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            m: 64,
            dt: 2.5e-4,
            t_end: 10.0,
            kappa: -0.5,
            mu: 0.95,
            control: ControlMode::Sampled,
            measurement: MeasurementMode::Averaged,
            h: 0.35,
            delta_bar: 0.25,
            ic: InitialCondition { kind: IcKind::SinSin, amplitude: 0.236 },
            monitor: None,
            output_stride: 40,
            snapshots: Vec::new(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::Value { key: key.into(), value: value.into() })
}

impl SimConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut c = SimConfig::default();
        let (mut p1, mut p2, mut r, mut delta) = (None, None, None, None);
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: n + 1,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            let (k, v) = (k.trim(), v.trim());
            match k {
                "m" => c.m = parse(k, v)?,
                "dt" => c.dt = parse(k, v)?,
                "t_end" => c.t_end = parse(k, v)?,
                "kappa" => c.kappa = parse(k, v)?,
                "mu" => c.mu = parse(k, v)?,
                "h" => c.h = parse(k, v)?,
                "delta_bar" => c.delta_bar = parse(k, v)?,
                "ic_amplitude" => c.ic.amplitude = parse(k, v)?,
                "output_stride" => c.output_stride = parse(k, v)?,
                "p1" => p1 = Some(parse(k, v)?),
                "p2" => p2 = Some(parse(k, v)?),
                "r" => r = Some(parse(k, v)?),
                "delta" => delta = Some(parse(k, v)?),
                "control" => {
                    c.control = match v {
                        "continuous" => ControlMode::Continuous,
                        "sampled" => ControlMode::Sampled,
                        _ => return Err(ConfigError::Value { key: k.into(), value: v.into() }),
                    }
                }
                "measurement" => {
                    c.measurement = match v {
                        "averaged" => MeasurementMode::Averaged,
                        "point" => MeasurementMode::Point,
                        _ => return Err(ConfigError::Value { key: k.into(), value: v.into() }),
                    }
                }
                "ic" => {
                    c.ic.kind = match v {
                        "sinsin" => IcKind::SinSin,
                        "bubble" => IcKind::Bubble,
                        "zero" => IcKind::Zero,
                        _ => return Err(ConfigError::Value { key: k.into(), value: v.into() }),
                    }
                }
                "snapshots" => {
                    c.snapshots = v
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(|s| parse(k, s))
                        .collect::<Result<_, _>>()?
                }
                _ => return Err(ConfigError::UnknownKey(k.into())),
            }
        }
        c.monitor = match (p1, p2, r, delta) {
            (None, None, None, None) => None,
            (Some(p1), Some(p2), r, delta) => Some(MonitorWeights {
                p1,
                p2,
                r: r.unwrap_or(0.0),
                delta: delta.unwrap_or(0.0),
            }),
            _ => return Err(ConfigError::Invalid("V1 monitor needs both p1 and p2".into())),
        };
        c.validate()?;
        Ok(c)
    }

    /// Number of time steps per sampling period.
    pub fn steps_per_sample(&self) -> usize {
        (self.h / self.dt).round() as usize
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn grid(&self) -> Result<Grid2D, ConfigError> {
        Ok(Grid2D::new(self.m)?)
    }

    pub fn partition(&self) -> Result<Partition, ConfigError> {
        Ok(Partition::new(self.delta_bar)?)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let grid = self.grid()?;
        self.partition()?.check_centered(&grid)?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(ConfigError::Invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(ConfigError::Invalid(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        if !(self.mu >= 0.0) || !self.kappa.is_finite() {
            return Err(ConfigError::Invalid("mu must be >= 0 and kappa finite".into()));
        }
        if self.control == ControlMode::Sampled {
            if !(self.h > 0.0) {
                return Err(ConfigError::Invalid(format!("h must be positive, got {}", self.h)));
            }
            let k = self.h / self.dt;
            if k.round() < 1.0 || (k - k.round()).abs() > 1e-9 * k.max(1.0) {
                return Err(ConfigError::Invalid(format!(
                    "h / dt must be a positive integer, got {k}"
                )));
            }
        }
        if let Some(w) = &self.monitor {
            if !(w.p1 > 0.0 && w.p2 > 0.0) || w.r < 0.0 || w.delta < 0.0 {
                return Err(ConfigError::Invalid("monitor needs p1, p2 > 0 and r, delta >= 0".into()));
            }
        }
        if self.output_stride == 0 {
            return Err(ConfigError::Invalid("output_stride must be >= 1".into()));
        }
        if !self.ic.amplitude.is_finite() {
            return Err(ConfigError::Invalid("ic_amplitude must be finite".into()));
        }
        for &t in &self.snapshots {
            if !(t >= 0.0 && t <= self.t_end + 0.5 * self.dt) {
                return Err(ConfigError::Invalid(format!("snapshot time {t} outside [0, t_end]")));
            }
        }
        Ok(())
    }
}
