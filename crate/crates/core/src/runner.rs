//! Subcommand orchestration and CSV emission.
//!
//! Files written under the output directory:
//!
//! | command        | files                                  |
//! |----------------|----------------------------------------|
//! | `simulate`     | `report.csv`, `trajectory.csv`         |
//! | `sweep`        | `sweep.csv`                            |
//! | `design-pulse` | `design.csv`, `pulse.toml`             |
//! | `validate`     | `validate.csv`                         |
//! | `rsn`          | `rsn.csv`                              |
//!
//! Report columns are [`REPORT_COLUMNS`]; a sweep prepends a
//! `sweep_<parameter>` column. Trajectory columns are [`TRAJECTORY_COLUMNS`].

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{PlannedRun, RunConfig};
use crate::dynamics::{propagate, Trajectory};
use crate::error::{Result, SimError};
use crate::hamiltonian::HamiltonianModel;
use crate::hilbert::{enumerate_basis, make_state, BasisLabel, StateVector};
use crate::observables::{population, signal_to_noise, RunReport};
use crate::oracle::{compare, oracle_propagate, Comparison, OracleModel, ORACLE_MAX_ATOMS, ORACLE_MAX_PHOTONS};
use crate::params::{Caps, PhysicalParams, PulseEnvelope, SimulationGrid, Tier};
use crate::pulse::{solve_pi_pulse, DesignOptions};

pub const REPORT_COLUMNS: [&str; 13] = [
    "tier",
    "n_atoms",
    "success_probability",
    "fidelity",
    "p_d",
    "double_signal_probability",
    "p_1r_max",
    "loss_probability",
    "pulse_area",
    "rsn",
    "fitted_collective_rabi",
    "final_norm",
    "max_norm_deviation",
];

pub const TRAJECTORY_COLUMNS: [&str; 7] = [
    "time",
    "P_ground",
    "P_single",
    "P_r1",
    "P_r2plus",
    "P_double_signal",
    "norm",
];

pub const VALIDATE_COLUMNS: [&str; 5] = ["n_atoms", "drive", "max_deviation", "max_residual", "max_outside_basis"];

pub const DESIGN_COLUMNS: [&str; 10] = [
    "tier",
    "family",
    "free_parameter",
    "value",
    "amplitude",
    "duration",
    "area",
    "transfer",
    "bisections",
    "refined",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Sweep,
    DesignPulse,
    Validate,
    Rsn,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Sweep => "sweep",
            Command::DesignPulse => "design-pulse",
            Command::Validate => "validate",
            Command::Rsn => "rsn",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOptions {
    /// Overrides `[output] dir`.
    pub out: Option<PathBuf>,
    /// Worker threads; all processors when absent.
    pub jobs: Option<usize>,
    pub no_timestamp: bool,
}

/// Result of a subcommand that ran to completion.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outcome {
    pub exit_code: i32,
    pub files: Vec<PathBuf>,
    /// Lines for standard output.
    pub messages: Vec<String>,
    pub warnings: Vec<String>,
    /// Non-fatal per-row failures; they make the exit code 1.
    pub errors: Vec<String>,
}

/// CSV number: scientific notation, 16 significant digits.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        // prints -0 as 0
        format!("{:.15e}", x + 0.0)
    }
}

fn opt_num(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".into(), fmt_num)
}

pub fn report_row(tier: Tier, n_atoms: usize, r: &RunReport) -> Vec<String> {
    vec![
        tier.to_string(),
        n_atoms.to_string(),
        fmt_num(r.success_probability),
        fmt_num(r.fidelity),
        fmt_num(r.double_excitation_max),
        fmt_num(r.double_signal_probability),
        fmt_num(r.p_1r_max),
        fmt_num(r.loss_probability),
        fmt_num(r.pulse_area),
        fmt_num(r.rsn),
        opt_num(r.fitted_collective_rabi),
        fmt_num(r.final_norm),
        fmt_num(r.max_norm_deviation),
    ]
}

fn trajectory_row(time: f64, state: &StateVector) -> Vec<String> {
    let n = state.basis().n_atoms();
    let ground = BasisLabel::ground(n);
    let single = BasisLabel::single_excitation(n);
    [
        time,
        population(state, |l| *l == ground),
        population(state, |l| *l == single),
        population(state, |l| l.n_r == 1),
        population(state, |l| l.n_r >= 2),
        population(state, |l| l.n_s >= 2 || l.n_ph >= 2),
        state.norm(),
    ]
    .into_iter()
    .map(fmt_num)
    .collect()
}

fn timestamp_line(command: Command) -> String {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    format!(
        "# blockade-sim {} {} unix_time={secs}\n",
        env!("CARGO_PKG_VERSION"),
        command.as_str()
    )
}

struct CsvWriter {
    text: String,
}

impl CsvWriter {
    fn new(command: Command, opts: &RunOptions, header: &[&str]) -> Self {
        let mut text = String::new();
        if !opts.no_timestamp {
            text.push_str(&timestamp_line(command));
        }
        text.push_str(&header.join(","));
        text.push('\n');
        CsvWriter { text }
    }

    fn row(&mut self, cells: &[String]) {
        let _ = writeln!(self.text, "{}", cells.join(","));
    }

    fn write(self, path: &Path) -> Result<PathBuf> {
        fs::write(path, self.text).map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
        Ok(path.to_path_buf())
    }
}

fn output_dir(config: &RunConfig, opts: &RunOptions) -> Result<PathBuf> {
    let dir = opts.out.clone().unwrap_or_else(|| PathBuf::from(&config.output.dir));
    fs::create_dir_all(&dir).map_err(|e| SimError::Io(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| SimError::Config(format!("thread pool: {e}")))
}

/// One propagation with the config's tier, grid and flags.
pub struct SingleRun {
    pub report: RunReport,
    pub trajectory: Trajectory,
    pub grid: SimulationGrid,
}

pub fn simulate_one(config: &RunConfig, physics: &PhysicalParams, pulse: &PulseEnvelope) -> Result<SingleRun> {
    let flags = &config.model;
    crate::params::validate_params(physics, flags, Some(pulse)).into_result()?;
    let grid = match config.grid.dt {
        Some(dt) => config.grid_for(pulse, dt)?,
        None => {
            let span = config.grid.t_end.unwrap_or_else(|| pulse.duration()) - config.grid.t_start;
            let coarse = config.grid_for(pulse, span)?;
            let dt = HamiltonianModel::new(physics, flags, pulse, &coarse)?.default_dt();
            config.grid_for(pulse, dt)?
        }
    };
    let model = HamiltonianModel::new(physics, flags, pulse, &grid)?;
    let psi = make_state(model.basis(), BasisLabel::ground(physics.n_atoms))?;
    let trajectory = propagate(&model, &psi, &grid)?;
    let report = RunReport::from_trajectory(&trajectory, &model, &grid);
    Ok(SingleRun {
        report,
        trajectory,
        grid,
    })
}

pub fn run(command: Command, config: &RunConfig, opts: &RunOptions) -> Result<Outcome> {
    let mut outcome = Outcome {
        warnings: config.check()?,
        ..Default::default()
    };
    let dir = output_dir(config, opts)?;
    match command {
        Command::Simulate => simulate(config, opts, &dir, &mut outcome)?,
        Command::Sweep => sweep(config, opts, &dir, &mut outcome)?,
        Command::DesignPulse => design(config, opts, &dir, &mut outcome)?,
        Command::Validate => validate(config, opts, &dir, &mut outcome)?,
        Command::Rsn => rsn(config, opts, &dir, &mut outcome)?,
    }
    if !outcome.errors.is_empty() && outcome.exit_code == 0 {
        outcome.exit_code = 1;
    }
    Ok(outcome)
}

fn simulate(config: &RunConfig, opts: &RunOptions, dir: &Path, outcome: &mut Outcome) -> Result<()> {
    let run = simulate_one(config, &config.physics, &config.pulse)?;
    let mut report = CsvWriter::new(Command::Simulate, opts, &REPORT_COLUMNS);
    report.row(&report_row(config.tier(), config.physics.n_atoms, &run.report));
    outcome.files.push(report.write(&dir.join("report.csv"))?);
    if config.output.trajectory {
        let mut traj = CsvWriter::new(Command::Simulate, opts, &TRAJECTORY_COLUMNS);
        for (i, sample) in run.trajectory.samples().iter().enumerate() {
            traj.row(&trajectory_row(sample.time, &run.trajectory.state(i)));
        }
        outcome.files.push(traj.write(&dir.join("trajectory.csv"))?);
    }
    outcome.messages.push(format!(
        "success_probability = {}  p_d = {}  ({} steps, dt = {})",
        fmt_num(run.report.success_probability),
        fmt_num(run.report.double_excitation_max),
        run.grid.n_steps(),
        fmt_num(run.grid.step())
    ));
    Ok(())
}

fn sweep(config: &RunConfig, opts: &RunOptions, dir: &Path, outcome: &mut Outcome) -> Result<()> {
    let sweep = config
        .sweep
        .as_ref()
        .ok_or_else(|| SimError::Config("`sweep` needs a [sweep] section".into()))?;
    let runs = config.planned_runs()?;
    let results: Vec<Result<RunReport>> = pool(opts.jobs)?.install(|| {
        runs.par_iter()
            .map(|r: &PlannedRun| simulate_one(config, &r.physics, &r.pulse).map(|s| s.report))
            .collect()
    });
    let first = format!("sweep_{}", sweep.parameter);
    let mut header = vec![first.as_str()];
    header.extend(REPORT_COLUMNS);
    let mut csv = CsvWriter::new(Command::Sweep, opts, &header);
    for (run, result) in runs.iter().zip(&results) {
        let mut row = vec![fmt_num(run.value)];
        match result {
            Ok(report) => row.extend(report_row(config.tier(), run.physics.n_atoms, report)),
            Err(e) => {
                outcome.errors.push(format!("{} = {}: {e}", sweep.parameter, run.value));
                row.push(config.tier().to_string());
                row.push(run.physics.n_atoms.to_string());
                row.extend(std::iter::repeat_n("nan".to_string(), REPORT_COLUMNS.len() - 2));
            }
        }
        csv.row(&row);
    }
    outcome.files.push(csv.write(&dir.join("sweep.csv"))?);
    outcome.messages.push(format!("{} runs", runs.len()));
    Ok(())
}

#[derive(Serialize)]
struct PulseFragment<'a> {
    pulse: &'a PulseEnvelope,
}

fn design(config: &RunConfig, opts: &RunOptions, dir: &Path, outcome: &mut Outcome) -> Result<()> {
    let free = config.free_parameter();
    let options = DesignOptions {
        bracket: config.design.bracket,
        dt: config.grid.dt,
        record_stride: config.grid.record_stride.unwrap_or(1),
        lifetime: config.design.lifetime,
    };
    let sol = solve_pi_pulse(&config.pulse, free, &config.physics, &config.model, &options)?;
    outcome.warnings.extend(sol.warnings.iter().cloned());

    let fragment = toml::to_string(&PulseFragment { pulse: &sol.envelope })
        .map_err(|e| SimError::Config(format!("serializing pulse: {e}")))?;
    let toml_path = dir.join("pulse.toml");
    fs::write(&toml_path, &fragment).map_err(|e| SimError::Io(format!("{}: {e}", toml_path.display())))?;
    outcome.files.push(toml_path);

    let mut csv = CsvWriter::new(Command::DesignPulse, opts, &DESIGN_COLUMNS);
    csv.row(&[
        config.tier().to_string(),
        sol.envelope.family().to_string(),
        config.design.free_parameter.clone(),
        fmt_num(sol.free_value),
        fmt_num(sol.envelope.peak()),
        fmt_num(sol.envelope.duration()),
        fmt_num(sol.area),
        fmt_num(sol.transfer),
        sol.bisections.to_string(),
        sol.refined.to_string(),
    ]);
    outcome.files.push(csv.write(&dir.join("design.csv"))?);
    outcome.messages.push(fragment.trim_end().to_string());
    outcome.messages.push(format!("transfer = {}", fmt_num(sol.transfer)));
    Ok(())
}

/// Step in units of 1/‖H‖ for oracle comparisons; well inside RK4 stability.
pub const ORACLE_STEP_FACTOR: f64 = 0.1;
/// Approximate number of recorded samples per oracle comparison.
pub const ORACLE_SAMPLES: usize = 200;

/// Random smooth drive for the oracle comparison.
pub fn random_drive(base: &PulseEnvelope, rng: &mut impl Rng) -> PulseEnvelope {
    let t = base.duration();
    PulseEnvelope::gaussian(
        base.peak() * rng.gen_range(0.5..1.5),
        t,
        t * rng.gen_range(0.3..0.7),
        t * rng.gen_range(0.1..0.25),
    )
}

/// Symmetric (uncapped, full tier) versus full-space propagation of one drive.
pub fn oracle_check(physics: &PhysicalParams, drive: &PulseEnvelope, n_photon_max: usize, include_decay: bool, dt: Option<f64>) -> Result<Comparison> {
    let n = physics.n_atoms;
    let basis = std::sync::Arc::new(enumerate_basis(n, Caps::uncapped(n, n_photon_max))?);
    let coarse = SimulationGrid::new(0.0, drive.duration(), drive.duration(), 1)?;
    // both sides take identical RK4 steps, so equivalence does not need the
    // accuracy of the default step
    let dt = match dt {
        Some(dt) => dt,
        None => {
            let model = HamiltonianModel::with_basis(physics, Tier::Full, include_decay, basis.clone(), drive, &coarse)?;
            ORACLE_STEP_FACTOR / model.spectral_bound().max(1.0)
        }
    };
    let steps = SimulationGrid::new(0.0, drive.duration(), dt, 1)?.n_steps();
    let grid = SimulationGrid::new(0.0, drive.duration(), dt, (steps / ORACLE_SAMPLES).max(1))?;
    let model = HamiltonianModel::with_basis(physics, Tier::Full, include_decay, basis.clone(), drive, &grid)?;
    let psi = make_state(&basis, BasisLabel::ground(n))?;
    let sym = propagate(&model, &psi, &grid)?;
    let oracle = OracleModel::new(physics, drive, n_photon_max, include_decay)?;
    let full = oracle_propagate(&oracle, &oracle.basis().ground_state(), &grid)?;
    compare(&sym, &full)
}

fn validate(config: &RunConfig, opts: &RunOptions, dir: &Path, outcome: &mut Outcome) -> Result<()> {
    let v = &config.validate;
    if v.n_atoms_max > ORACLE_MAX_ATOMS {
        return Err(SimError::OracleLimit(format!(
            "validate.n_atoms_max = {} exceeds {ORACLE_MAX_ATOMS}",
            v.n_atoms_max
        )));
    }
    let n_ph = config.model.n_photon_max.min(ORACLE_MAX_PHOTONS);
    let cases: Vec<(usize, usize, PulseEnvelope)> = (1..=v.n_atoms_max)
        .flat_map(|n| (0..v.drives).map(move |d| (n, d)))
        .map(|(n, d)| {
            let mut rng = ChaCha8Rng::seed_from_u64(v.seed.wrapping_add((n * 1000 + d) as u64));
            (n, d, random_drive(&config.pulse, &mut rng))
        })
        .collect();
    let results: Vec<Result<Comparison>> = pool(opts.jobs)?.install(|| {
        cases
            .par_iter()
            .map(|(n, _, drive)| {
                let physics = PhysicalParams {
                    n_atoms: *n,
                    ..config.physics.clone()
                };
                oracle_check(&physics, drive, n_ph, config.model.include_decay, config.grid.dt)
            })
            .collect()
    });
    let mut csv = CsvWriter::new(Command::Validate, opts, &VALIDATE_COLUMNS);
    let (mut worst_dev, mut worst_res) = (0.0f64, 0.0f64);
    for ((n, d, _), result) in cases.iter().zip(results) {
        let cmp = result?;
        worst_dev = worst_dev.max(cmp.max_deviation);
        worst_res = worst_res.max(cmp.max_residual);
        csv.row(&[
            n.to_string(),
            d.to_string(),
            fmt_num(cmp.max_deviation),
            fmt_num(cmp.max_residual),
            fmt_num(cmp.max_outside_basis),
        ]);
        outcome.messages.push(format!(
            "N_a = {n} drive {d}: max_deviation = {}  max_residual = {}",
            fmt_num(cmp.max_deviation),
            fmt_num(cmp.max_residual)
        ));
    }
    outcome.files.push(csv.write(&dir.join("validate.csv"))?);
    let pass = worst_dev < v.max_deviation && worst_res < v.max_residual;
    outcome.messages.push(format!(
        "{}: max_deviation = {} (threshold {}), max_residual = {} (threshold {})",
        if pass { "PASS" } else { "FAIL" },
        fmt_num(worst_dev),
        fmt_num(v.max_deviation),
        fmt_num(worst_res),
        fmt_num(v.max_residual)
    ));
    if !pass {
        outcome.exit_code = 2;
    }
    Ok(())
}

fn rsn(config: &RunConfig, opts: &RunOptions, dir: &Path, outcome: &mut Outcome) -> Result<()> {
    let p = &config.physics;
    let value = signal_to_noise(p.density, p.length, p.wavelength);
    let mut csv = CsvWriter::new(Command::Rsn, opts, &["density", "length", "wavelength", "rsn"]);
    csv.row(&[fmt_num(p.density), fmt_num(p.length), fmt_num(p.wavelength), fmt_num(value)]);
    outcome.files.push(csv.write(&dir.join("rsn.csv"))?);
    outcome.messages.push(format!("R_sn = {}", fmt_num(value)));
    Ok(())
}
