//! Fixed-step RK4 propagation of dψ/dt = −i·H(t)·ψ.

use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Result, SimError};
use crate::hamiltonian::HamiltonianModel;
use crate::hilbert::{StateVector, SymmetricBasis};
use crate::params::{SimulationGrid, Tier};

const ZERO: C64 = C64::new(0.0, 0.0);
const MINUS_I: C64 = C64::new(0.0, -1.0);

/// Norm excess that aborts a run.
pub const NORM_BLOWUP: f64 = 1e-6;

/// Anything that can produce `H(t)·ψ`.
pub trait Generator: Sync {
    fn dim(&self) -> usize;
    /// `out = H(t)·ψ` (overwrites `out`).
    fn apply(&self, t: f64, psi: &[C64], out: &mut [C64]);
}

impl Generator for HamiltonianModel {
    fn dim(&self) -> usize {
        HamiltonianModel::dim(self)
    }

    fn apply(&self, t: f64, psi: &[C64], out: &mut [C64]) {
        HamiltonianModel::apply(self, t, psi, out)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub time: f64,
    pub amplitudes: Vec<C64>,
    pub norm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegratorMeta {
    pub dt: f64,
    pub steps: usize,
    pub tier: Option<Tier>,
    pub reversed: bool,
}

/// Time-stamped states on a shared basis.
#[derive(Clone, Debug)]
pub struct Trajectory<B = SymmetricBasis> {
    basis: Arc<B>,
    samples: Vec<Sample>,
    meta: IntegratorMeta,
}

impl<B> Trajectory<B> {
    pub fn basis(&self) -> &Arc<B> {
        &self.basis
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn meta(&self) -> &IntegratorMeta {
        &self.meta
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.time)
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectories always hold the initial sample")
    }

    pub fn max_norm_deviation(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| (s.norm - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

impl Trajectory<SymmetricBasis> {
    pub fn state(&self, index: usize) -> StateVector {
        StateVector::new(self.basis.clone(), self.samples[index].amplitudes.clone())
            .expect("trajectory samples match their basis")
    }

    pub fn final_state(&self) -> StateVector {
        self.state(self.samples.len() - 1)
    }
}

/// Point strictly inside the current step, next to `t`, so envelope jumps on
/// grid nodes are seen from the side of the step being integrated.
fn inside(t: f64, toward: f64) -> f64 {
    let h = toward - t;
    let ulps = 64.0 * f64::EPSILON * (t.abs() + h.abs());
    let eps = (1e-9 * h.abs()).max(ulps).min(0.25 * h.abs());
    t + eps.copysign(h)
}

#[derive(Debug)]
struct Rk4Scratch {
    k: [Vec<C64>; 4],
    stage: Vec<C64>,
}

impl Rk4Scratch {
    fn new(n: usize) -> Self {
        Rk4Scratch {
            k: std::array::from_fn(|_| vec![ZERO; n]),
            stage: vec![ZERO; n],
        }
    }
}

fn rk4_step<G: Generator + ?Sized>(gen: &G, t: f64, h: f64, psi: &mut [C64], s: &mut Rk4Scratch) {
    let t_end = t + h;
    let mid = t + 0.5 * h;
    let [k1, k2, k3, k4] = &mut s.k;

    gen.apply(inside(t, t_end), psi, k1);
    for ((st, p), k) in s.stage.iter_mut().zip(psi.iter()).zip(k1.iter()) {
        *st = p + MINUS_I * 0.5 * h * k;
    }
    gen.apply(mid, &s.stage, k2);
    for ((st, p), k) in s.stage.iter_mut().zip(psi.iter()).zip(k2.iter()) {
        *st = p + MINUS_I * 0.5 * h * k;
    }
    gen.apply(mid, &s.stage, k3);
    for ((st, p), k) in s.stage.iter_mut().zip(psi.iter()).zip(k3.iter()) {
        *st = p + MINUS_I * h * k;
    }
    gen.apply(inside(t_end, t), &s.stage, k4);
    let w = MINUS_I * (h / 6.0);
    for i in 0..psi.len() {
        psi[i] += w * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

fn norm_of(psi: &[C64]) -> f64 {
    psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Integrates over `grid` (backwards when `reverse`), recording the state
/// every `record_stride` steps and at the final time.
pub fn integrate<G, B>(
    gen: &G,
    basis: Arc<B>,
    psi0: &[C64],
    grid: &SimulationGrid,
    reverse: bool,
    tier: Option<Tier>,
) -> Result<Trajectory<B>>
where
    G: Generator + ?Sized,
{
    grid.validate()?;
    if psi0.len() != gen.dim() {
        return Err(SimError::BasisMismatch(format!(
            "initial state of dimension {} for a generator of dimension {}",
            psi0.len(),
            gen.dim()
        )));
    }
    let n_steps = grid.n_steps();
    let h = if reverse { -grid.step() } else { grid.step() };
    let time_at = |k: usize| {
        if reverse {
            grid.time(n_steps - k)
        } else {
            grid.time(k)
        }
    };
    let mut psi = psi0.to_vec();
    let mut scratch = Rk4Scratch::new(psi.len());
    let mut samples = vec![Sample {
        time: time_at(0),
        amplitudes: psi.clone(),
        norm: norm_of(&psi),
    }];
    let start_norm = samples[0].norm;
    for k in 0..n_steps {
        let t = time_at(k);
        rk4_step(gen, t, h, &mut psi, &mut scratch);
        let norm = norm_of(&psi);
        if !norm.is_finite() || norm > start_norm * (1.0 + NORM_BLOWUP) {
            return Err(SimError::NormBlowUp {
                time: time_at(k + 1),
                norm,
                dt: h.abs(),
            });
        }
        if (k + 1) % grid.record_stride == 0 || k + 1 == n_steps {
            samples.push(Sample {
                time: time_at(k + 1),
                amplitudes: psi.clone(),
                norm,
            });
        }
    }
    Ok(Trajectory {
        basis,
        samples,
        meta: IntegratorMeta {
            dt: h.abs(),
            steps: n_steps,
            tier,
            reversed: reverse,
        },
    })
}

fn check_basis(model: &HamiltonianModel, psi0: &StateVector) -> Result<()> {
    if Arc::ptr_eq(model.basis(), psi0.basis()) || **model.basis() == **psi0.basis() {
        Ok(())
    } else {
        Err(SimError::BasisMismatch(
            "initial state and model use different bases".into(),
        ))
    }
}

pub fn propagate(model: &HamiltonianModel, psi0: &StateVector, grid: &SimulationGrid) -> Result<Trajectory> {
    check_basis(model, psi0)?;
    integrate(
        model,
        model.basis().clone(),
        psi0.amplitudes(),
        grid,
        false,
        Some(model.tier()),
    )
}

/// Propagates from `grid.t_end` back to `grid.t_start`.
pub fn propagate_reverse(
    model: &HamiltonianModel,
    psi_end: &StateVector,
    grid: &SimulationGrid,
) -> Result<Trajectory> {
    check_basis(model, psi_end)?;
    integrate(
        model,
        model.basis().clone(),
        psi_end.amplitudes(),
        grid,
        true,
        Some(model.tier()),
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    /// max |ψ_dt(t_end) − ψ_dt/2(t_end)|.
    pub estimate: f64,
    pub dt: f64,
    pub warning: Option<String>,
}

/// Envelope breakpoints inside the window that do not sit on a grid node.
pub fn off_grid_breakpoints(breakpoints: &[f64], grid: &SimulationGrid) -> Vec<f64> {
    let step = grid.step();
    breakpoints
        .iter()
        .copied()
        .filter(|&t| t > grid.t_start && t < grid.t_end)
        .filter(|&t| {
            let k = ((t - grid.t_start) / step).round();
            (grid.t_start + k * step - t).abs() > 1e-9 * step
        })
        .collect()
}

/// Final-state difference between runs at `dt` and `dt/2`.
pub fn convergence_check(
    model: &HamiltonianModel,
    psi0: &StateVector,
    grid: &SimulationGrid,
) -> Result<ConvergenceReport> {
    let coarse = propagate(model, psi0, grid)?;
    let fine = propagate(model, psi0, &grid.refined())?;
    let estimate = coarse
        .last()
        .amplitudes
        .iter()
        .zip(&fine.last().amplitudes)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let off = off_grid_breakpoints(&model.envelope().breakpoints(), grid);
    let warning = (!off.is_empty()).then(|| {
        format!(
            "non-smooth envelope: breakpoints {off:?} are off the grid, convergence degrades to first order"
        )
    });
    Ok(ConvergenceReport {
        estimate,
        dt: grid.step(),
        warning,
    })
}
