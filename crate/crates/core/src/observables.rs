//! Figures of merit extracted from trajectories and parameters.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64 as C64;

use crate::dynamics::{Sample, Trajectory};
use crate::error::{Result, SimError};
use crate::hamiltonian::HamiltonianModel;
use crate::hilbert::{overlap, BasisLabel, StateVector, SymmetricBasis};
use crate::params::{PhysicalParams, PulseEnvelope, SimulationGrid};
use crate::quadrature::abs_integral;

/// Σ|amplitude|² over labels satisfying `predicate`.
pub fn population(state: &StateVector, predicate: impl Fn(&BasisLabel) -> bool) -> f64 {
    sample_population(state.basis(), state.amplitudes(), predicate)
}

fn sample_population(basis: &SymmetricBasis, amplitudes: &[C64], predicate: impl Fn(&BasisLabel) -> bool) -> f64 {
    basis
        .labels()
        .iter()
        .zip(amplitudes)
        .filter(|(l, _)| predicate(l))
        .fold(0.0, |acc, (_, a)| acc + a.norm_sqr())
}

pub fn is_single_excitation(l: &BasisLabel) -> bool {
    l.n_s == 1 && l.n_ph == 1 && l.n_r == 0
}

pub fn is_double_signal(l: &BasisLabel) -> bool {
    l.n_s >= 2 || l.n_ph >= 2
}

fn max_over(traj: &Trajectory, predicate: impl Fn(&BasisLabel) -> bool + Copy) -> f64 {
    traj.samples()
        .iter()
        .map(|s| sample_population(traj.basis(), &s.amplitudes, predicate))
        .fold(0.0, f64::max)
}

/// P(n_s = 1, n_ph = 1, n_r = 0) at the final recorded time.
pub fn success_probability(traj: &Trajectory) -> f64 {
    sample_population(traj.basis(), &traj.last().amplitudes, is_single_excitation)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DoubleExcitation {
    /// max_t P(n_r ≥ 2).
    pub p_d: f64,
    /// Final P(n_s ≥ 2 or n_ph ≥ 2).
    pub double_signal: f64,
}

pub fn double_excitation_prob(traj: &Trajectory) -> DoubleExcitation {
    DoubleExcitation {
        p_d: max_over(traj, |l| l.n_r >= 2),
        double_signal: sample_population(traj.basis(), &traj.last().amplitudes, is_double_signal),
    }
}

/// max_t P(n_r = 1).
pub fn single_rydberg_max(traj: &Trajectory) -> f64 {
    max_over(traj, |l| l.n_r == 1)
}

/// |⟨target|state⟩|² / (‖target‖²·‖state‖²).
pub fn fidelity(state: &StateVector, target: &StateVector) -> Result<f64> {
    let denom = target.norm_sqr() * state.norm_sqr();
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok(overlap(target, state)?.norm_sqr() / denom)
}

/// Coherent-to-incoherent rate estimate R_sn = 3ρL/k², k = 2π/λ.
pub fn signal_to_noise(density: f64, length: f64, wavelength: f64) -> f64 {
    let k = TAU / wavelength;
    3.0 * density * length / (k * k)
}

/// Inversion area of the collective two-level model under the off-diagonal
/// coupling convention.
pub const INVERSION_AREA: f64 = PI / 2.0;

/// A = ∫ √N_a·|Ω′(τ)| dτ over the grid window.
pub fn pulse_area(env: &PulseEnvelope, p: &PhysicalParams, grid: &SimulationGrid) -> Result<f64> {
    p.check_detuning()?;
    let scale = (p.n_atoms as f64).sqrt() * (p.signal_coupling / p.detuning).abs();
    Ok(scale * abs_integral(env, grid.t_start, grid.t_end, grid.step()))
}

fn sin2_residual(samples: &[(f64, f64)], omega: f64) -> f64 {
    samples
        .iter()
        .map(|&(t, p)| {
            let r = p - (omega * t).sin().powi(2);
            r * r
        })
        .sum()
}

/// Frequency ω of a sin²(ωt) fit to the single-excitation population.
///
/// Needs at least two full oscillation periods (π/ω each) in the record.
pub fn fitted_collective_rabi(traj: &Trajectory) -> Result<f64> {
    let samples: Vec<(f64, f64)> = traj
        .samples()
        .iter()
        .map(|s: &Sample| {
            (
                s.time,
                sample_population(traj.basis(), &s.amplitudes, is_single_excitation),
            )
        })
        .collect();
    fit_sin_squared(&samples)
}

pub fn fit_sin_squared(samples: &[(f64, f64)]) -> Result<f64> {
    if samples.len() < 8 {
        return Err(SimError::FitFailed(format!(
            "only {} samples recorded",
            samples.len()
        )));
    }
    let mean = samples.iter().map(|s| s.1).sum::<f64>() / samples.len() as f64;
    let crossings = samples
        .windows(2)
        .filter(|w| (w[0].1 - mean) * (w[1].1 - mean) < 0.0)
        .count();
    // sin² crosses its mean twice per period
    let periods = crossings as f64 / 2.0;
    if periods < 2.0 {
        return Err(SimError::FitFailed(format!(
            "fewer than 2 oscillation periods recorded ({periods})"
        )));
    }
    let span = samples.last().unwrap().0 - samples[0].0;
    let guess = PI * periods / span;

    // coarse scan, then golden section around the best node
    let lo = 0.7 * guess;
    let hi = 1.3 * guess;
    let nodes = 4000;
    let step = (hi - lo) / nodes as f64;
    let best = (0..=nodes)
        .map(|k| lo + k as f64 * step)
        .min_by(|a, b| sin2_residual(samples, *a).total_cmp(&sin2_residual(samples, *b)))
        .unwrap();
    Ok(golden_section_min(
        |w| sin2_residual(samples, w),
        best - step,
        best + step,
        1e-14 * guess,
    ))
}

/// Minimizer of a unimodal function on [a, b].
pub fn golden_section_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Per-run summary.
#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    /// Final population of `(N−1, 1, 0; 1)`.
    pub success_probability: f64,
    pub fidelity: f64,
    /// p_d: trajectory maximum of P(n_r ≥ 2).
    pub double_excitation_max: f64,
    /// Final P(n_s ≥ 2 or n_ph ≥ 2).
    pub double_signal_probability: f64,
    /// Trajectory maximum of P(n_r = 1).
    pub p_1r_max: f64,
    /// 1 − final norm².
    pub loss_probability: f64,
    pub pulse_area: f64,
    pub rsn: f64,
    pub fitted_collective_rabi: Option<f64>,
    pub final_norm: f64,
    pub max_norm_deviation: f64,
}

impl RunReport {
    pub fn from_trajectory(traj: &Trajectory, model: &HamiltonianModel, grid: &SimulationGrid) -> Self {
        let p = model.params();
        let final_state = traj.final_state();
        let target_label = BasisLabel::single_excitation(p.n_atoms);
        let fid = match crate::hilbert::make_state(traj.basis(), target_label) {
            Ok(target) => fidelity(&final_state, &target).unwrap_or(0.0),
            Err(_) => 0.0,
        };
        let double = double_excitation_prob(traj);
        let fit = if matches!(model.envelope(), PulseEnvelope::Square { .. }) && p.compensate_stark {
            fitted_collective_rabi(traj).ok()
        } else {
            None
        };
        let final_norm = traj.last().norm;
        RunReport {
            success_probability: success_probability(traj),
            fidelity: fid,
            double_excitation_max: double.p_d,
            double_signal_probability: double.double_signal,
            p_1r_max: single_rydberg_max(traj),
            loss_probability: (1.0 - final_norm * final_norm).max(0.0),
            pulse_area: pulse_area(model.envelope(), p, grid).unwrap_or(f64::NAN),
            rsn: signal_to_noise(p.density, p.length, p.wavelength),
            fitted_collective_rabi: fit,
            final_norm,
            max_norm_deviation: traj.max_norm_deviation(),
        }
    }
}
