//! Python bindings for the blockade simulator.

use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use blockade_sim::config::load_config;
use blockade_sim::dynamics::{propagate, Trajectory as CoreTrajectory};
use blockade_sim::hamiltonian::HamiltonianModel;
use blockade_sim::hilbert::{self, make_state, BasisLabel};
use blockade_sim::observables::{self, RunReport};
use blockade_sim::params::{self, Caps, ModelFlags, Tier};
use blockade_sim::pulse::{self, DesignOptions, FreeParameter};
use blockade_sim::runner::{self, oracle_check, Command, RunOptions};
use blockade_sim::SimError;

fn py_err(e: SimError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_tier(s: &str) -> PyResult<Tier> {
    match s {
        "full" => Ok(Tier::Full),
        "raman" => Ok(Tier::Raman),
        "two_level" => Ok(Tier::TwoLevel),
        other => Err(PyValueError::new_err(format!(
            "tier must be full, raman or two_level, got {other}"
        ))),
    }
}

#[pyclass(name = "PhysicalParams", skip_from_py_object)]
#[derive(Clone)]
struct PyPhysicalParams {
    inner: params::PhysicalParams,
}

#[pymethods]
impl PyPhysicalParams {
    #[new]
    #[pyo3(signature = (n_atoms=100, detuning=2000.0, rydberg_linewidth=6.0, signal_coupling=5.0, blockade_shift=1e5, density=1000.0, length=8.0, wavelength=0.5, compensate_stark=true))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        n_atoms: usize,
        detuning: f64,
        rydberg_linewidth: f64,
        signal_coupling: f64,
        blockade_shift: f64,
        density: f64,
        length: f64,
        wavelength: f64,
        compensate_stark: bool,
    ) -> Self {
        PyPhysicalParams {
            inner: params::PhysicalParams {
                n_atoms,
                detuning,
                rydberg_linewidth,
                signal_coupling,
                blockade_shift,
                density,
                length,
                wavelength,
                compensate_stark,
            },
        }
    }

    #[getter]
    fn n_atoms(&self) -> usize {
        self.inner.n_atoms
    }
    #[getter]
    fn detuning(&self) -> f64 {
        self.inner.detuning
    }
    #[getter]
    fn signal_coupling(&self) -> f64 {
        self.inner.signal_coupling
    }
    #[getter]
    fn blockade_shift(&self) -> f64 {
        self.inner.blockade_shift
    }
    #[getter]
    fn rydberg_linewidth(&self) -> f64 {
        self.inner.rydberg_linewidth
    }
    #[getter]
    fn compensate_stark(&self) -> bool {
        self.inner.compensate_stark
    }

    /// Non-fatal warnings; raises ValueError on hard errors.
    #[pyo3(signature = (tier="full", pulse=None))]
    fn validate(&self, tier: &str, pulse: Option<PyRef<'_, PyPulseEnvelope>>) -> PyResult<Vec<String>> {
        let flags = ModelFlags::new(parse_tier(tier)?);
        params::validate_params(&self.inner, &flags, pulse.as_ref().map(|p| &p.inner))
            .into_result()
            .map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

#[pyclass(name = "PulseEnvelope", skip_from_py_object)]
#[derive(Clone)]
struct PyPulseEnvelope {
    inner: params::PulseEnvelope,
}

#[pymethods]
impl PyPulseEnvelope {
    #[staticmethod]
    fn square(amplitude: f64, duration: f64) -> Self {
        PyPulseEnvelope {
            inner: params::PulseEnvelope::square(amplitude, duration),
        }
    }

    #[staticmethod]
    fn gaussian(amplitude: f64, duration: f64, center: f64, width: f64) -> Self {
        PyPulseEnvelope {
            inner: params::PulseEnvelope::gaussian(amplitude, duration, center, width),
        }
    }

    /// Samples as (time, complex value) pairs.
    #[staticmethod]
    fn table(samples: Vec<(f64, Complex64)>) -> Self {
        PyPulseEnvelope {
            inner: params::PulseEnvelope::table(samples),
        }
    }

    fn sample(&self, t: f64) -> Complex64 {
        self.inner.sample(t)
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.inner.family()
    }

    #[getter]
    fn peak(&self) -> f64 {
        self.inner.peak()
    }

    #[getter]
    fn duration(&self) -> f64 {
        self.inner.duration()
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// Recorded populations of a propagation.
#[pyclass(name = "Trajectory")]
struct PyTrajectory {
    inner: CoreTrajectory,
    report: RunReport,
}

#[pymethods]
impl PyTrajectory {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.times().collect()
    }

    #[getter]
    fn labels(&self) -> Vec<(usize, usize, usize, usize)> {
        self.inner
            .basis()
            .labels()
            .iter()
            .map(|l| (l.n_g, l.n_s, l.n_r, l.n_ph))
            .collect()
    }

    /// Population history of one basis label (n_g, n_s, n_r, n_ph).
    fn population(&self, label: (usize, usize, usize, usize)) -> Vec<f64> {
        let target = BasisLabel::new(label.0, label.1, label.2, label.3);
        (0..self.inner.samples().len())
            .map(|i| observables::population(&self.inner.state(i), |l| *l == target))
            .collect()
    }

    /// Final amplitudes in basis order.
    fn final_amplitudes(&self) -> Vec<Complex64> {
        self.inner.last().amplitudes.clone()
    }

    #[getter]
    fn success_probability(&self) -> f64 {
        self.report.success_probability
    }

    #[getter]
    fn p_d(&self) -> f64 {
        self.report.double_excitation_max
    }

    fn report<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let r = &self.report;
        let d = PyDict::new(py);
        d.set_item("success_probability", r.success_probability)?;
        d.set_item("fidelity", r.fidelity)?;
        d.set_item("p_d", r.double_excitation_max)?;
        d.set_item("double_signal_probability", r.double_signal_probability)?;
        d.set_item("p_1r_max", r.p_1r_max)?;
        d.set_item("loss_probability", r.loss_probability)?;
        d.set_item("pulse_area", r.pulse_area)?;
        d.set_item("rsn", r.rsn)?;
        d.set_item("fitted_collective_rabi", r.fitted_collective_rabi)?;
        d.set_item("final_norm", r.final_norm)?;
        d.set_item("max_norm_deviation", r.max_norm_deviation)?;
        Ok(d)
    }

    fn __len__(&self) -> usize {
        self.inner.samples().len()
    }
}

/// Propagate from the ground state; `dt = None` uses the model default step.
#[pyfunction]
#[pyo3(signature = (params, pulse, tier="full", t_end=None, dt=None, record_stride=1, include_decay=false, n_photon_max=2, n_s_max=Some(2), n_r_max=Some(2)))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    py: Python<'_>,
    params: PyRef<'_, PyPhysicalParams>,
    pulse: PyRef<'_, PyPulseEnvelope>,
    tier: &str,
    t_end: Option<f64>,
    dt: Option<f64>,
    record_stride: usize,
    include_decay: bool,
    n_photon_max: usize,
    n_s_max: Option<usize>,
    n_r_max: Option<usize>,
) -> PyResult<PyTrajectory> {
    let flags = ModelFlags {
        tier: parse_tier(tier)?,
        include_decay,
        n_photon_max,
        n_s_max,
        n_r_max,
    };
    let p = params.inner.clone();
    let env = pulse.inner.clone();
    let t_end = t_end.unwrap_or_else(|| env.duration());
    py.detach(move || {
        let dt = match dt {
            Some(dt) => dt,
            None => {
                let coarse = params::SimulationGrid::aligned(&env, 0.0, t_end, t_end, 1)?;
                HamiltonianModel::new(&p, &flags, &env, &coarse)?.default_dt()
            }
        };
        let grid = params::SimulationGrid::aligned(&env, 0.0, t_end, dt, record_stride)?;
        let model = HamiltonianModel::new(&p, &flags, &env, &grid)?;
        let psi = make_state(model.basis(), BasisLabel::ground(p.n_atoms))?;
        let traj = propagate(&model, &psi, &grid)?;
        let report = RunReport::from_trajectory(&traj, &model, &grid);
        Ok(PyTrajectory { inner: traj, report })
    })
    .map_err(py_err)
}

/// Symmetric basis labels (n_g, n_s, n_r, n_ph) in engine order; `None` caps mean uncapped.
#[pyfunction]
#[pyo3(signature = (n_atoms, n_photon_max=2, n_s_max=None, n_r_max=None))]
fn enumerate_basis(
    n_atoms: usize,
    n_photon_max: usize,
    n_s_max: Option<usize>,
    n_r_max: Option<usize>,
) -> PyResult<Vec<(usize, usize, usize, usize)>> {
    let caps = Caps {
        n_s_max: n_s_max.unwrap_or(n_atoms),
        n_r_max: n_r_max.unwrap_or(n_atoms),
        n_photon_max,
    };
    let basis = hilbert::enumerate_basis(n_atoms, caps).map_err(py_err)?;
    Ok(basis.labels().iter().map(|l| (l.n_g, l.n_s, l.n_r, l.n_ph)).collect())
}

/// Hamiltonian at time t as a dense row-major matrix.
#[pyfunction]
#[pyo3(signature = (params, pulse, t, tier="full", n_photon_max=2, n_s_max=Some(2), n_r_max=Some(2)))]
fn hamiltonian(
    params: PyRef<'_, PyPhysicalParams>,
    pulse: PyRef<'_, PyPulseEnvelope>,
    t: f64,
    tier: &str,
    n_photon_max: usize,
    n_s_max: Option<usize>,
    n_r_max: Option<usize>,
) -> PyResult<Vec<Vec<Complex64>>> {
    let flags = ModelFlags {
        tier: parse_tier(tier)?,
        include_decay: false,
        n_photon_max,
        n_s_max,
        n_r_max,
    };
    let env = &pulse.inner;
    let t_end = env.duration().max(t);
    let grid = params::SimulationGrid::new(0.0, t_end, t_end, 1).map_err(py_err)?;
    let model = HamiltonianModel::new(&params.inner, &flags, env, &grid).map_err(py_err)?;
    Ok(model.assemble_hermitian(t).to_dense())
}

#[pyfunction]
fn effective_rabi(params: PyRef<'_, PyPhysicalParams>, pulse: PyRef<'_, PyPulseEnvelope>, t: f64) -> PyResult<Complex64> {
    let env = &pulse.inner;
    let t_end = env.duration().max(t).max(f64::MIN_POSITIVE);
    let grid = params::SimulationGrid::new(0.0, t_end, t_end, 1).map_err(py_err)?;
    blockade_sim::hamiltonian::effective_rabi(env, &params.inner, &grid, t).map_err(py_err)
}

#[pyfunction]
fn signal_to_noise(density: f64, length: f64, wavelength: f64) -> f64 {
    observables::signal_to_noise(density, length, wavelength)
}

/// π/2-area pulse in the two_level or raman tier.
#[pyfunction]
#[pyo3(signature = (pulse, params, free_parameter="duration", tier="two_level", bracket=None, dt=None, lifetime=None))]
#[allow(clippy::too_many_arguments)]
fn solve_pi_pulse<'py>(
    py: Python<'py>,
    pulse: PyRef<'_, PyPulseEnvelope>,
    params: PyRef<'_, PyPhysicalParams>,
    free_parameter: &str,
    tier: &str,
    bracket: Option<(f64, f64)>,
    dt: Option<f64>,
    lifetime: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let free: FreeParameter = free_parameter.parse().map_err(py_err)?;
    let flags = ModelFlags::new(parse_tier(tier)?);
    let opts = DesignOptions {
        bracket,
        dt,
        record_stride: 1,
        lifetime,
    };
    let base = pulse.inner.clone();
    let p = params.inner.clone();
    let sol = py
        .detach(move || pulse::solve_pi_pulse(&base, free, &p, &flags, &opts))
        .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("pulse", PyPulseEnvelope { inner: sol.envelope.clone() })?;
    d.set_item("free_value", sol.free_value)?;
    d.set_item("area", sol.area)?;
    d.set_item("transfer", sol.transfer)?;
    d.set_item("bisections", sol.bisections)?;
    d.set_item("refined", sol.refined)?;
    d.set_item("within_lifetime", sol.within_lifetime)?;
    d.set_item("warnings", sol.warnings)?;
    Ok(d)
}

type SweepRow = (f64, Option<f64>, Option<f64>);

/// (B, p_d, success_probability) rows sorted by B; failed rows carry None.
#[pyfunction]
#[pyo3(signature = (params, pulse, blockade_shifts, dt, n_photon_max=2, n_s_max=Some(2), n_r_max=Some(2)))]
#[allow(clippy::too_many_arguments)]
fn blockade_sweep(
    py: Python<'_>,
    params: PyRef<'_, PyPhysicalParams>,
    pulse: PyRef<'_, PyPulseEnvelope>,
    blockade_shifts: Vec<f64>,
    dt: f64,
    n_photon_max: usize,
    n_s_max: Option<usize>,
    n_r_max: Option<usize>,
) -> PyResult<Vec<SweepRow>> {
    let flags = ModelFlags {
        tier: Tier::Full,
        include_decay: false,
        n_photon_max,
        n_s_max,
        n_r_max,
    };
    let env = pulse.inner.clone();
    let p = params.inner.clone();
    let grid = params::SimulationGrid::aligned(&env, 0.0, env.duration(), dt, 1).map_err(py_err)?;
    let rows = py.detach(move || pulse::blockade_sweep(&p, &flags, &env, &grid, &blockade_shifts));
    Ok(rows
        .into_iter()
        .map(|r| match r.outcome {
            Ok(o) => (r.blockade_shift, Some(o.p_d), Some(o.success_probability)),
            Err(_) => (r.blockade_shift, None, None),
        })
        .collect())
}

/// Symmetric versus full-space propagation: (max_deviation, max_residual, max_outside_basis).
#[pyfunction]
#[pyo3(signature = (params, pulse, n_photon_max=2, dt=None))]
fn oracle_compare(
    py: Python<'_>,
    params: PyRef<'_, PyPhysicalParams>,
    pulse: PyRef<'_, PyPulseEnvelope>,
    n_photon_max: usize,
    dt: Option<f64>,
) -> PyResult<(f64, f64, f64)> {
    let p = params.inner.clone();
    let env = pulse.inner.clone();
    let cmp = py
        .detach(move || oracle_check(&p, &env, n_photon_max, false, dt))
        .map_err(py_err)?;
    Ok((cmp.max_deviation, cmp.max_residual, cmp.max_outside_basis))
}

/// Run a CLI subcommand on a config file; returns the exit code.
#[pyfunction]
#[pyo3(signature = (command, config, out=None, jobs=None, no_timestamp=false))]
fn run_command(
    py: Python<'_>,
    command: &str,
    config: PathBuf,
    out: Option<PathBuf>,
    jobs: Option<usize>,
    no_timestamp: bool,
) -> PyResult<i32> {
    let command = match command {
        "simulate" => Command::Simulate,
        "sweep" => Command::Sweep,
        "design-pulse" => Command::DesignPulse,
        "validate" => Command::Validate,
        "rsn" => Command::Rsn,
        other => return Err(PyValueError::new_err(format!("unknown command {other}"))),
    };
    let opts = RunOptions {
        out,
        jobs,
        no_timestamp,
    };
    let outcome = py
        .detach(move || load_config(&config).and_then(|c| runner::run(command, &c, &opts)))
        .map_err(py_err)?;
    Ok(outcome.exit_code)
}

#[pyfunction]
fn two_level_basis(n_atoms: usize) -> Vec<(usize, usize, usize, usize)> {
    let basis = hilbert::SymmetricBasis::two_level(n_atoms);
    basis.labels().iter().map(|l| (l.n_g, l.n_s, l.n_r, l.n_ph)).collect()
}

#[pymodule]
fn pyblockade(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPhysicalParams>()?;
    m.add_class::<PyPulseEnvelope>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_basis, m)?)?;
    m.add_function(wrap_pyfunction!(two_level_basis, m)?)?;
    m.add_function(wrap_pyfunction!(hamiltonian, m)?)?;
    m.add_function(wrap_pyfunction!(effective_rabi, m)?)?;
    m.add_function(wrap_pyfunction!(signal_to_noise, m)?)?;
    m.add_function(wrap_pyfunction!(solve_pi_pulse, m)?)?;
    m.add_function(wrap_pyfunction!(blockade_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_compare, m)?)?;
    m.add_function(wrap_pyfunction!(run_command, m)?)?;
    m.add("INVERSION_AREA", observables::INVERSION_AREA)?;
    Ok(())
}
