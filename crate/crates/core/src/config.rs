//! TOML run configuration.
//!
//! ```toml
//! [physics]            # PhysicalParams; every key optional
//! n_atoms = 4
//! detuning = 2000.0
//!
//! [pulse]              # PulseEnvelope
//! family = "square"
//! amplitude = 40.0
//! duration = 1.0
//!
//! [grid]               # all keys optional
//! t_end = 1.0
//! dt = 1e-3
//!
//! [model]              # ModelFlags
//! tier = "two_level"
//!
//! [sweep]
//! parameter = "blockade_shift"
//! values = [0.0, 10.0, 100.0]            # or: range = { start = 0.0, stop = 1.0, num = 5 }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::params::{validate_params, ModelFlags, PhysicalParams, PulseEnvelope, SimulationGrid, Tier};
use crate::pulse::FreeParameter;

/// Names accepted by `[sweep] parameter`.
pub const SWEEP_PARAMETERS: [&str; 10] = [
    "n_atoms",
    "detuning",
    "rydberg_linewidth",
    "signal_coupling",
    "blockade_shift",
    "density",
    "length",
    "wavelength",
    "amplitude",
    "duration",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub physics: PhysicalParams,
    #[serde(default = "default_pulse")]
    pub pulse: PulseEnvelope,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub model: ModelFlags,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub design: DesignConfig,
    #[serde(default)]
    pub validate: ValidateConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_pulse() -> PulseEnvelope {
    PulseEnvelope::square(40.0, 1.0)
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            physics: PhysicalParams::default(),
            pulse: default_pulse(),
            grid: GridConfig::default(),
            model: ModelFlags::default(),
            sweep: None,
            design: DesignConfig::default(),
            validate: ValidateConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

/// Time window. Missing `t_end` means the envelope duration, missing `dt`
/// the model default step, missing `record_stride` about
/// [`DEFAULT_SAMPLES`] recorded points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub t_start: f64,
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub record_stride: Option<usize>,
}

pub const DEFAULT_SAMPLES: usize = 1000;

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            t_start: 0.0,
            t_end: None,
            dt: None,
            record_stride: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: String,
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    #[serde(default)]
    pub range: Option<SweepRange>,
}

/// `num` evenly spaced values from `start` to `stop` inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRange {
    pub start: f64,
    pub stop: f64,
    pub num: usize,
}

impl SweepConfig {
    pub fn values(&self) -> Result<Vec<f64>> {
        match (&self.values, &self.range) {
            (Some(v), None) => Ok(v.clone()),
            (None, Some(r)) => Ok(match r.num {
                0 => Vec::new(),
                1 => vec![r.start],
                n => (0..n)
                    .map(|i| r.start + (r.stop - r.start) * i as f64 / (n - 1) as f64)
                    .collect(),
            }),
            _ => Err(SimError::Config(
                "[sweep] needs exactly one of `values` or `range`".into(),
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DesignConfig {
    pub free_parameter: String,
    pub bracket: Option<(f64, f64)>,
    /// Pulse length bound (μs).
    pub lifetime: Option<f64>,
}

impl Default for DesignConfig {
    fn default() -> Self {
        DesignConfig {
            free_parameter: "duration".into(),
            bracket: None,
            lifetime: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidateConfig {
    pub max_deviation: f64,
    pub max_residual: f64,
    pub n_atoms_max: usize,
    /// Random drives per atom number.
    pub drives: usize,
    pub seed: u64,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        ValidateConfig {
            max_deviation: 1e-8,
            max_residual: 1e-10,
            n_atoms_max: 5,
            drives: 2,
            seed: 7,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
    pub trajectory: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: ".".into(),
            trajectory: true,
        }
    }
}

/// One run of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct PlannedRun {
    pub value: f64,
    pub physics: PhysicalParams,
    pub pulse: PulseEnvelope,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parse and validate a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let config: RunConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of(text, s.start));
        let message = e.message().trim();
        let message = match message.strip_prefix("unknown field") {
            Some(rest) => format!("unknown key{rest}"),
            None => message.to_string(),
        };
        SimError::Config(match line {
            Some(line) => format!("line {line}: {message}"),
            None => message,
        })
    })?;
    config.check()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

impl RunConfig {
    /// Structural checks plus [`validate_params`]; returns warnings.
    pub fn check(&self) -> Result<Vec<String>> {
        let mut errors = Vec::new();
        if let Some(sweep) = &self.sweep {
            if !SWEEP_PARAMETERS.contains(&sweep.parameter.as_str()) {
                errors.push(format!(
                    "sweep parameter `{}` is not one of {}",
                    sweep.parameter,
                    SWEEP_PARAMETERS.join(", ")
                ));
            }
            match sweep.values() {
                Ok(values) => {
                    if sweep.parameter == "n_atoms"
                        && values.iter().any(|v| *v < 1.0 || v.fract() != 0.0)
                    {
                        errors.push("n_atoms sweep values must be positive integers".into());
                    }
                }
                Err(e) => errors.push(e.to_string()),
            }
        }
        if let Err(e) = self.design.free_parameter.parse::<FreeParameter>() {
            errors.push(e.to_string());
        }
        if self.grid.record_stride == Some(0) {
            errors.push("grid.record_stride must be ≥ 1".into());
        }
        let report = validate_params(&self.physics, &self.model, Some(&self.pulse));
        errors.extend(report.errors);
        if errors.is_empty() {
            Ok(report.warnings)
        } else {
            Err(SimError::InvalidParams(errors))
        }
    }

    pub fn tier(&self) -> Tier {
        self.model.tier
    }

    pub fn free_parameter(&self) -> FreeParameter {
        self.design.free_parameter.parse().unwrap_or(FreeParameter::Duration)
    }

    /// Grid for a given envelope; `dt_default` fills a missing step.
    pub fn grid_for(&self, envelope: &PulseEnvelope, dt_default: f64) -> Result<SimulationGrid> {
        let t_end = self.grid.t_end.unwrap_or_else(|| envelope.duration());
        let dt = self.grid.dt.unwrap_or(dt_default);
        let grid = SimulationGrid::aligned(envelope, self.grid.t_start, t_end, dt, 1)?;
        let record_stride = self
            .grid
            .record_stride
            .unwrap_or_else(|| (grid.n_steps() / DEFAULT_SAMPLES).max(1));
        Ok(SimulationGrid { record_stride, ..grid })
    }

    /// Parameter sets of the sweep, in sweep order; empty without a `[sweep]`.
    pub fn planned_runs(&self) -> Result<Vec<PlannedRun>> {
        let Some(sweep) = &self.sweep else {
            return Ok(Vec::new());
        };
        sweep
            .values()?
            .into_iter()
            .map(|value| {
                let mut physics = self.physics.clone();
                let mut pulse = self.pulse.clone();
                match sweep.parameter.as_str() {
                    "n_atoms" => physics.n_atoms = value as usize,
                    "detuning" => physics.detuning = value,
                    "rydberg_linewidth" => physics.rydberg_linewidth = value,
                    "signal_coupling" => physics.signal_coupling = value,
                    "blockade_shift" => physics.blockade_shift = value,
                    "density" => physics.density = value,
                    "length" => physics.length = value,
                    "wavelength" => physics.wavelength = value,
                    "amplitude" => pulse = pulse.with_amplitude(value),
                    "duration" => pulse = pulse.with_duration(value),
                    other => {
                        return Err(SimError::Config(format!("unknown sweep parameter `{other}`")))
                    }
                }
                Ok(PlannedRun {
                    value,
                    physics,
                    pulse,
                })
            })
            .collect()
    }
}
