//! Physical constants of the ensemble, pump envelopes, time grids and model
//! flags shared by every model tier.
//!
//! Units: ħ = 1, rates and energies in rad/μs, times in μs, lengths in μm.

use std::f64::consts::TAU;
use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// Ensemble and field constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicalParams {
    /// Atom number N_a.
    pub n_atoms: usize,
    /// Pump detuning Δ = ω_r − ω_0 (rad/μs).
    pub detuning: f64,
    /// Natural linewidth Γ of the Rydberg level (rad/μs).
    pub rydberg_linewidth: f64,
    /// Single-mode coupling g_s of the forward signal mode (rad/μs).
    pub signal_coupling: f64,
    /// Uniform pairwise Rydberg–Rydberg level shift B (rad/μs).
    pub blockade_shift: f64,
    /// Atomic number density ρ (atoms/μm³).
    pub density: f64,
    /// Ensemble length L (μm).
    pub length: f64,
    /// Signal wavelength λ (μm).
    pub wavelength: f64,
    /// Absorb the accumulated Stark phase of the effective Rabi frequency.
    pub compensate_stark: bool,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        PhysicalParams {
            n_atoms: 100,
            detuning: 2000.0,
            rydberg_linewidth: 6.0,
            signal_coupling: 5.0,
            blockade_shift: 1.0e5,
            density: 1000.0,
            length: 8.0,
            wavelength: 0.5,
            compensate_stark: true,
        }
    }
}

impl PhysicalParams {
    /// Signal wavenumber k = 2π/λ (μm⁻¹).
    pub fn wavenumber(&self) -> f64 {
        TAU / self.wavelength
    }

    /// Dilute-ensemble figure k/ρ^(1/3); superradiance is absent when ≥ 1.
    pub fn dilution(&self) -> f64 {
        self.wavenumber() / self.density.cbrt()
    }

    pub fn check_detuning(&self) -> Result<()> {
        if self.detuning == 0.0 {
            Err(SimError::ZeroDetuning)
        } else {
            Ok(())
        }
    }
}

/// Time-dependent pump Rabi frequency Ω(t), spatially uniform over the ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PulseEnvelope {
    /// Constant `amplitude` on [0, duration].
    Square { amplitude: f64, duration: f64 },
    /// `amplitude·exp(−(t−center)²/(2·width²))`; `duration` sets the nominal window.
    Gaussian {
        amplitude: f64,
        duration: f64,
        center: f64,
        width: f64,
    },
    /// Linear interpolation of (time, re, im) samples; zero outside the sampled range.
    Table { samples: Vec<(f64, f64, f64)> },
}

impl PulseEnvelope {
    pub fn square(amplitude: f64, duration: f64) -> Self {
        PulseEnvelope::Square {
            amplitude,
            duration,
        }
    }

    pub fn gaussian(amplitude: f64, duration: f64, center: f64, width: f64) -> Self {
        PulseEnvelope::Gaussian {
            amplitude,
            duration,
            center,
            width,
        }
    }

    pub fn table(samples: impl IntoIterator<Item = (f64, C64)>) -> Self {
        PulseEnvelope::Table {
            samples: samples.into_iter().map(|(t, z)| (t, z.re, z.im)).collect(),
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            PulseEnvelope::Square { .. } => "square",
            PulseEnvelope::Gaussian { .. } => "gaussian",
            PulseEnvelope::Table { .. } => "table",
        }
    }

    /// Ω(t). Pure; out-of-range times give zero.
    pub fn sample(&self, t: f64) -> C64 {
        match *self {
            PulseEnvelope::Square {
                amplitude,
                duration,
            } => {
                if (0.0..=duration).contains(&t) {
                    C64::new(amplitude, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            }
            PulseEnvelope::Gaussian {
                amplitude,
                center,
                width,
                ..
            } => {
                let x = (t - center) / width;
                C64::new(amplitude * (-0.5 * x * x).exp(), 0.0)
            }
            PulseEnvelope::Table { ref samples } => sample_table(samples, t),
        }
    }

    /// Peak |Ω| over the envelope.
    pub fn peak(&self) -> f64 {
        match self {
            PulseEnvelope::Square { amplitude, .. } | PulseEnvelope::Gaussian { amplitude, .. } => {
                amplitude.abs()
            }
            PulseEnvelope::Table { samples } => samples
                .iter()
                .map(|&(_, re, im)| re.hypot(im))
                .fold(0.0, f64::max),
        }
    }

    /// Nominal pulse length T.
    pub fn duration(&self) -> f64 {
        match self {
            PulseEnvelope::Square { duration, .. } | PulseEnvelope::Gaussian { duration, .. } => {
                *duration
            }
            PulseEnvelope::Table { samples } => samples.last().map_or(0.0, |s| s.0),
        }
    }

    /// Times where the envelope is not smooth (support edges, table nodes).
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            PulseEnvelope::Square { duration, .. } => vec![0.0, *duration],
            PulseEnvelope::Gaussian { .. } => Vec::new(),
            PulseEnvelope::Table { samples } => samples.iter().map(|s| s.0).collect(),
        }
    }

    pub fn is_smooth(&self) -> bool {
        matches!(self, PulseEnvelope::Gaussian { .. })
    }

    /// Copy with the peak amplitude replaced (tables are rescaled).
    pub fn with_amplitude(&self, amplitude: f64) -> Self {
        match self.clone() {
            PulseEnvelope::Square { duration, .. } => PulseEnvelope::Square {
                amplitude,
                duration,
            },
            PulseEnvelope::Gaussian {
                duration,
                center,
                width,
                ..
            } => PulseEnvelope::Gaussian {
                amplitude,
                duration,
                center,
                width,
            },
            PulseEnvelope::Table { samples } => {
                let peak = self.peak();
                let scale = if peak > 0.0 { amplitude / peak } else { 0.0 };
                PulseEnvelope::Table {
                    samples: samples
                        .into_iter()
                        .map(|(t, re, im)| (t, re * scale, im * scale))
                        .collect(),
                }
            }
        }
    }

    /// Copy with the duration replaced. Gaussian and table envelopes are
    /// stretched in time so the shape is preserved.
    pub fn with_duration(&self, duration: f64) -> Self {
        let old = self.duration();
        let stretch = if old > 0.0 { duration / old } else { 1.0 };
        match self.clone() {
            PulseEnvelope::Square { amplitude, .. } => PulseEnvelope::Square {
                amplitude,
                duration,
            },
            PulseEnvelope::Gaussian {
                amplitude,
                center,
                width,
                ..
            } => PulseEnvelope::Gaussian {
                amplitude,
                duration,
                center: center * stretch,
                width: width * stretch,
            },
            PulseEnvelope::Table { samples } => PulseEnvelope::Table {
                samples: samples
                    .into_iter()
                    .map(|(t, re, im)| (t * stretch, re, im))
                    .collect(),
            },
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        match self {
            PulseEnvelope::Square {
                amplitude,
                duration,
            } => {
                check_amplitude(*amplitude)?;
                check_positive("duration", *duration)
            }
            PulseEnvelope::Gaussian {
                amplitude,
                duration,
                center,
                width,
            } => {
                check_amplitude(*amplitude)?;
                check_positive("duration", *duration)?;
                check_positive("width", *width)?;
                if !center.is_finite() {
                    return Err("center must be finite".into());
                }
                Ok(())
            }
            PulseEnvelope::Table { samples } => {
                if samples.is_empty() {
                    return Err("table envelope needs at least one sample".into());
                }
                if samples
                    .iter()
                    .any(|&(t, re, im)| !(t.is_finite() && re.is_finite() && im.is_finite()))
                {
                    return Err("table samples must be finite".into());
                }
                if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err("table sample times must be strictly increasing".into());
                }
                Ok(())
            }
        }
    }
}

fn check_amplitude(amplitude: f64) -> std::result::Result<(), String> {
    if !amplitude.is_finite() || amplitude < 0.0 {
        Err(format!("amplitude must be finite and ≥ 0, got {amplitude}"))
    } else {
        Ok(())
    }
}

fn check_positive(name: &str, value: f64) -> std::result::Result<(), String> {
    if !(value.is_finite() && value > 0.0) {
        Err(format!("{name} must be finite and > 0, got {value}"))
    } else {
        Ok(())
    }
}

fn sample_table(samples: &[(f64, f64, f64)], t: f64) -> C64 {
    let (first, last) = match (samples.first(), samples.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return C64::new(0.0, 0.0),
    };
    if !(first.0..=last.0).contains(&t) {
        return C64::new(0.0, 0.0);
    }
    // index of the first node strictly after t
    let hi = samples.partition_point(|s| s.0 <= t);
    if hi == 0 {
        return C64::new(first.1, first.2);
    }
    let (t0, re0, im0) = samples[hi - 1];
    if t == t0 || hi == samples.len() {
        return C64::new(re0, im0);
    }
    let (t1, re1, im1) = samples[hi];
    let frac = (t - t0) / (t1 - t0);
    C64::new(re0 + (re1 - re0) * frac, im0 + (im1 - im0) * frac)
}

/// Fixed-step time grid. The step actually taken is `span / n_steps`, which
/// never exceeds `dt`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub dt: f64,
    pub record_stride: usize,
}

impl SimulationGrid {
    pub fn new(t_start: f64, t_end: f64, dt: f64, record_stride: usize) -> Result<Self> {
        let grid = SimulationGrid {
            t_start,
            t_end,
            dt,
            record_stride,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Grid whose nodes include every breakpoint of a square envelope.
    ///
    /// The step is `duration / m` for the smallest `m` keeping it ≤ `dt_max`;
    /// `t_start` is moved down and `t_end` up to the nearest node.
    pub fn aligned(
        envelope: &PulseEnvelope,
        t_start: f64,
        t_end: f64,
        dt_max: f64,
        record_stride: usize,
    ) -> Result<Self> {
        let dt = match envelope {
            PulseEnvelope::Square { duration, .. } if *duration > 0.0 => {
                duration / (duration / dt_max - 1e-9).ceil().max(1.0)
            }
            _ => return SimulationGrid::new(t_start, t_end, dt_max, record_stride),
        };
        let lo = (t_start / dt + 1e-9).floor() * dt;
        let hi = (t_end / dt - 1e-9).ceil() * dt;
        SimulationGrid::new(lo, hi.max(lo + dt), dt, record_stride)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_start.is_finite() && self.t_end.is_finite()) {
            return Err(SimError::InvalidGrid("grid endpoints must be finite".into()));
        }
        if self.t_end <= self.t_start {
            return Err(SimError::InvalidGrid(format!(
                "t_end ({}) must exceed t_start ({})",
                self.t_end, self.t_start
            )));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(SimError::InvalidGrid(format!("dt must be > 0, got {}", self.dt)));
        }
        if (self.t_end - self.t_start) / self.dt < 1.0 - 1e-9 {
            return Err(SimError::InvalidGrid(
                "grid must contain at least one step".into(),
            ));
        }
        if self.record_stride == 0 {
            return Err(SimError::InvalidGrid("record_stride must be ≥ 1".into()));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        ((self.t_end - self.t_start) / self.dt - 1e-9).ceil().max(1.0) as usize
    }

    /// Step length actually used.
    pub fn step(&self) -> f64 {
        (self.t_end - self.t_start) / self.n_steps() as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.n_steps() {
            self.t_end
        } else {
            self.t_start + k as f64 * self.step()
        }
    }

    /// Same window with the step halved.
    pub fn refined(&self) -> Self {
        SimulationGrid {
            dt: self.step() / 2.0,
            record_stride: self.record_stride * 2,
            ..self.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Full,
    Raman,
    TwoLevel,
}

impl Tier {
    pub fn as_str(&self) -> &'static str {
        match self {
            Tier::Full => "full",
            Tier::Raman => "raman",
            Tier::TwoLevel => "two_level",
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Model tier and truncation. `None` caps mean "uncapped" (cap = N_a).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelFlags {
    pub tier: Tier,
    pub include_decay: bool,
    pub n_photon_max: usize,
    pub n_s_max: Option<usize>,
    pub n_r_max: Option<usize>,
}

impl Default for ModelFlags {
    fn default() -> Self {
        ModelFlags {
            tier: Tier::Full,
            include_decay: false,
            n_photon_max: 2,
            n_s_max: Some(2),
            n_r_max: Some(2),
        }
    }
}

impl ModelFlags {
    pub fn new(tier: Tier) -> Self {
        ModelFlags {
            tier,
            ..Default::default()
        }
    }

    pub fn uncapped(tier: Tier, n_photon_max: usize) -> Self {
        ModelFlags {
            tier,
            include_decay: false,
            n_photon_max,
            n_s_max: None,
            n_r_max: None,
        }
    }

    /// Caps resolved against the atom number.
    pub fn caps(&self, n_atoms: usize) -> Caps {
        let r_cap = match self.tier {
            Tier::Full => self.n_r_max.unwrap_or(n_atoms),
            Tier::Raman | Tier::TwoLevel => 0,
        };
        Caps {
            n_s_max: self.n_s_max.unwrap_or(n_atoms).min(n_atoms),
            n_r_max: r_cap.min(n_atoms),
            n_photon_max: self.n_photon_max,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Caps {
    pub n_s_max: usize,
    pub n_r_max: usize,
    pub n_photon_max: usize,
}

impl Caps {
    pub fn uncapped(n_atoms: usize, n_photon_max: usize) -> Self {
        Caps {
            n_s_max: n_atoms,
            n_r_max: n_atoms,
            n_photon_max,
        }
    }
}

/// Outcome of [`validate_params`]: hard errors abort model construction,
/// warnings are advisory.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn into_result(self) -> Result<Vec<String>> {
        if self.errors.is_empty() {
            Ok(self.warnings)
        } else {
            Err(SimError::InvalidParams(self.errors))
        }
    }
}

/// Ratio below which Δ/Γ or Δ/Ω_peak makes adiabatic elimination questionable.
pub const ADIABATIC_RATIO: f64 = 10.0;

pub fn validate_params(
    p: &PhysicalParams,
    flags: &ModelFlags,
    envelope: Option<&PulseEnvelope>,
) -> ValidationReport {
    let mut report = ValidationReport::default();
    let errors = &mut report.errors;

    if p.n_atoms < 1 {
        errors.push("n_atoms must be ≥ 1".into());
    }
    for (name, value) in [
        ("detuning", p.detuning),
        ("rydberg_linewidth", p.rydberg_linewidth),
        ("signal_coupling", p.signal_coupling),
        ("blockade_shift", p.blockade_shift),
        ("density", p.density),
        ("length", p.length),
        ("wavelength", p.wavelength),
    ] {
        if !value.is_finite() {
            errors.push(format!("{name} must be finite, got {value}"));
        }
    }
    for (name, value) in [
        ("rydberg_linewidth", p.rydberg_linewidth),
        ("signal_coupling", p.signal_coupling),
        ("blockade_shift", p.blockade_shift),
    ] {
        if value < 0.0 {
            errors.push(format!("{name} must be ≥ 0, got {value}"));
        }
    }
    for (name, value) in [
        ("density", p.density),
        ("length", p.length),
        ("wavelength", p.wavelength),
    ] {
        if value <= 0.0 {
            errors.push(format!("{name} must be > 0, got {value}"));
        }
    }
    if flags.n_photon_max < 1 {
        errors.push("n_photon_max must be ≥ 1".into());
    }
    if flags.tier != Tier::Full && p.detuning == 0.0 {
        errors.push(SimError::ZeroDetuning.to_string());
    }
    if let Some(env) = envelope {
        if let Err(msg) = env.validate() {
            errors.push(format!("envelope: {msg}"));
        }
    }

    let delta = p.detuning.abs();
    if delta < ADIABATIC_RATIO * p.rydberg_linewidth {
        report.warnings.push(format!(
            "|Δ| = {delta} < {ADIABATIC_RATIO}·Γ = {}: adiabatic elimination questionable",
            ADIABATIC_RATIO * p.rydberg_linewidth
        ));
    }
    if let Some(env) = envelope {
        let peak = env.peak();
        if delta < ADIABATIC_RATIO * peak {
            report.warnings.push(format!(
                "|Δ| = {delta} < {ADIABATIC_RATIO}·|Ω|peak = {}: adiabatic elimination questionable",
                ADIABATIC_RATIO * peak
            ));
        }
    }
    if p.density > 0.0 && p.wavelength > 0.0 && p.dilution() < 1.0 {
        report.warnings.push(format!(
            "k/ρ^(1/3) = {:.3} < 1: ensemble not dilute, superradiance expected",
            p.dilution()
        ));
    }
    report
}
