//! Brute-force reference on the full 3^N ⊗ Fock tensor-product space.
//!
//! Builds the same physics as the full tier without assuming permutation
//! symmetry, so it can validate the Dicke reduction. Limited to N_a ≤ 6 and
//! n_photon_max ≤ 2.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::dynamics::{integrate, Generator, Trajectory};
use crate::error::{Result, SimError};
use crate::hamiltonian::HermitianPair;
use crate::hilbert::{BasisLabel, Level, StateVector, SymmetricBasis};
use crate::params::{PhysicalParams, PulseEnvelope, SimulationGrid};
use crate::sparse::SparseOperator;

pub const ORACLE_MAX_ATOMS: usize = 6;
pub const ORACLE_MAX_PHOTONS: usize = 2;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Per-atom configurations (base-3 code, atom i at digit i; g=0, s=1, r=2)
/// times photon number. Index = code·(n_photon_max+1) + n_ph.
#[derive(Clone, Debug, PartialEq)]
pub struct FullBasis {
    n_atoms: usize,
    n_photon_max: usize,
    configs: usize,
}

impl FullBasis {
    pub fn new(n_atoms: usize, n_photon_max: usize) -> Result<Self> {
        if n_atoms == 0 || n_atoms > ORACLE_MAX_ATOMS {
            return Err(SimError::OracleLimit(format!(
                "oracle supports 1..={ORACLE_MAX_ATOMS} atoms, got {n_atoms}"
            )));
        }
        if n_photon_max > ORACLE_MAX_PHOTONS {
            return Err(SimError::OracleLimit(format!(
                "oracle supports n_photon_max ≤ {ORACLE_MAX_PHOTONS}, got {n_photon_max}"
            )));
        }
        Ok(FullBasis {
            n_atoms,
            n_photon_max,
            configs: 3usize.pow(n_atoms as u32),
        })
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn n_photon_max(&self) -> usize {
        self.n_photon_max
    }

    pub fn len(&self) -> usize {
        self.configs * (self.n_photon_max + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn encode(&self, levels: &[Level], n_ph: usize) -> usize {
        assert_eq!(levels.len(), self.n_atoms);
        assert!(n_ph <= self.n_photon_max);
        let code = levels
            .iter()
            .rev()
            .fold(0, |acc, level| acc * 3 + level.index());
        code * (self.n_photon_max + 1) + n_ph
    }

    pub fn decode(&self, index: usize) -> (Vec<Level>, usize) {
        let photons = self.n_photon_max + 1;
        let mut code = index / photons;
        let levels = (0..self.n_atoms)
            .map(|_| {
                let level = Level::from_index(code % 3).unwrap();
                code /= 3;
                level
            })
            .collect();
        (levels, index % photons)
    }

    /// Occupation label of a product state.
    pub fn label(&self, index: usize) -> BasisLabel {
        let (levels, n_ph) = self.decode(index);
        let count = |lv: Level| levels.iter().filter(|&&l| l == lv).count();
        BasisLabel::new(count(Level::Ground), count(Level::Storage), count(Level::Rydberg), n_ph)
    }

    /// ⊗_i|g⟩ ⊗ |0_p⟩.
    pub fn ground_state(&self) -> Vec<C64> {
        let mut psi = vec![ZERO; self.len()];
        psi[0] = C64::new(1.0, 0.0);
        psi
    }
}

/// Full-space Hamiltonian with explicit per-atom sums and optional
/// per-pair blockade shifts.
#[derive(Clone, Debug)]
pub struct OracleModel {
    basis: Arc<FullBasis>,
    params: PhysicalParams,
    envelope: PulseEnvelope,
    diagonal: Vec<C64>,
    drive: HermitianPair,
    emission: HermitianPair,
}

impl OracleModel {
    /// Uniform blockade `params.blockade_shift` for every pair.
    pub fn new(params: &PhysicalParams, envelope: &PulseEnvelope, n_photon_max: usize, include_decay: bool) -> Result<Self> {
        let n = params.n_atoms;
        let shifts = vec![vec![params.blockade_shift; n]; n];
        OracleModel::with_pair_shifts(params, envelope, n_photon_max, include_decay, &shifts)
    }

    /// `pair_shifts[i][j]` (i < j used) replaces the uniform blockade.
    pub fn with_pair_shifts(
        params: &PhysicalParams,
        envelope: &PulseEnvelope,
        n_photon_max: usize,
        include_decay: bool,
        pair_shifts: &[Vec<f64>],
    ) -> Result<Self> {
        let basis = Arc::new(FullBasis::new(params.n_atoms, n_photon_max)?);
        let n = params.n_atoms;
        if pair_shifts.len() != n || pair_shifts.iter().any(|row| row.len() != n) {
            return Err(SimError::OracleLimit(format!(
                "pair shift matrix must be {n}×{n}"
            )));
        }
        let dim = basis.len();
        let mut diagonal = Vec::with_capacity(dim);
        let mut drive = Vec::new();
        let mut emission = Vec::new();
        for index in 0..dim {
            let (levels, n_ph) = basis.decode(index);
            let rydberg: Vec<usize> = (0..n).filter(|&i| levels[i] == Level::Rydberg).collect();
            let mut energy = params.detuning * rydberg.len() as f64;
            for (a, &i) in rydberg.iter().enumerate() {
                for &j in &rydberg[a + 1..] {
                    energy += pair_shifts[i][j];
                }
            }
            let loss = if include_decay {
                -0.5 * params.rydberg_linewidth * rydberg.len() as f64
            } else {
                0.0
            };
            diagonal.push(C64::new(energy, loss));

            for i in 0..n {
                let mut moved = levels.clone();
                match levels[i] {
                    // σ_rg^i
                    Level::Ground => {
                        moved[i] = Level::Rydberg;
                        drive.push((basis.encode(&moved, n_ph), index, C64::new(1.0, 0.0)));
                    }
                    // a† σ_sr^i
                    Level::Rydberg if n_ph < n_photon_max => {
                        moved[i] = Level::Storage;
                        let element = ((n_ph + 1) as f64).sqrt();
                        emission.push((basis.encode(&moved, n_ph + 1), index, C64::new(element, 0.0)));
                    }
                    _ => {}
                }
            }
        }
        Ok(OracleModel {
            basis,
            params: params.clone(),
            envelope: envelope.clone(),
            diagonal,
            drive: HermitianPair::new(SparseOperator::from_triplets(dim, drive)),
            emission: HermitianPair::new(SparseOperator::from_triplets(dim, emission)),
        })
    }

    pub fn basis(&self) -> &Arc<FullBasis> {
        &self.basis
    }

    pub fn drive_operator(&self) -> &SparseOperator {
        &self.drive.op
    }

    pub fn assemble(&self, t: f64) -> SparseOperator {
        SparseOperator::diagonal(self.diagonal.iter().copied())
            .add(&self.drive.assemble(self.envelope.sample(t)))
            .add(&self.emission.assemble(C64::new(self.params.signal_coupling, 0.0)))
    }
}

impl Generator for OracleModel {
    fn dim(&self) -> usize {
        self.basis.len()
    }

    fn apply(&self, t: f64, psi: &[C64], out: &mut [C64]) {
        for ((o, d), p) in out.iter_mut().zip(&self.diagonal).zip(psi) {
            *o = d * p;
        }
        self.drive.apply_add(self.envelope.sample(t), psi, out);
        self.emission
            .apply_add(C64::new(self.params.signal_coupling, 0.0), psi, out);
    }
}

/// Full-space H(t), uniform blockade.
pub fn oracle_build_h(p: &PhysicalParams, env: &PulseEnvelope, n_photon_max: usize, t: f64) -> Result<SparseOperator> {
    Ok(OracleModel::new(p, env, n_photon_max, false)?.assemble(t))
}

pub fn oracle_propagate(model: &OracleModel, psi0: &[C64], grid: &SimulationGrid) -> Result<Trajectory<FullBasis>> {
    integrate(model, model.basis.clone(), psi0, grid, false, None)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Symmetrized {
    pub state: StateVector,
    /// Squared norm orthogonal to the symmetric sector.
    pub residual: f64,
    /// Symmetric population on labels missing from the target basis.
    pub outside_basis: f64,
}

/// Projects a full-space state onto normalized Dicke combinations.
pub fn symmetrize(full: &FullBasis, amplitudes: &[C64], target: &Arc<SymmetricBasis>) -> Result<Symmetrized> {
    if amplitudes.len() != full.len() {
        return Err(SimError::BasisMismatch(format!(
            "{} amplitudes for a full basis of {}",
            amplitudes.len(),
            full.len()
        )));
    }
    if target.n_atoms() != full.n_atoms() {
        return Err(SimError::BasisMismatch(
            "symmetric and full bases disagree on N_a".into(),
        ));
    }
    let labels: Vec<BasisLabel> = (0..full.len()).map(|i| full.label(i)).collect();
    let mut sums: HashMap<BasisLabel, (C64, usize)> = HashMap::new();
    for (label, a) in labels.iter().zip(amplitudes) {
        let entry = sums.entry(*label).or_insert((ZERO, 0));
        entry.0 += a;
        entry.1 += 1;
    }
    let residual = labels
        .iter()
        .zip(amplitudes)
        .map(|(label, a)| {
            let (sum, count) = sums[label];
            (a - sum / count as f64).norm_sqr()
        })
        .sum();
    let mut state = StateVector::zeros(target.clone());
    let mut outside_basis = 0.0;
    for (label, (sum, count)) in &sums {
        let amp = sum / (*count as f64).sqrt();
        match target.index_of(label) {
            Some(i) => state.amplitudes_mut()[i] = amp,
            None => outside_basis += amp.norm_sqr(),
        }
    }
    Ok(Symmetrized {
        state,
        residual,
        outside_basis,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Comparison {
    pub max_deviation: f64,
    pub max_residual: f64,
    pub max_outside_basis: f64,
}

/// Sample-by-sample comparison of a symmetric and an oracle trajectory.
pub fn compare(symmetric: &Trajectory, oracle: &Trajectory<FullBasis>) -> Result<Comparison> {
    if symmetric.samples().len() != oracle.samples().len() {
        return Err(SimError::BasisMismatch(format!(
            "{} symmetric samples vs {} oracle samples",
            symmetric.samples().len(),
            oracle.samples().len()
        )));
    }
    let mut out = Comparison {
        max_deviation: 0.0,
        max_residual: 0.0,
        max_outside_basis: 0.0,
    };
    for (s, o) in symmetric.samples().iter().zip(oracle.samples()) {
        if (s.time - o.time).abs() > 1e-12 * (1.0 + s.time.abs()) {
            return Err(SimError::BasisMismatch(format!(
                "sample times differ: {} vs {}",
                s.time, o.time
            )));
        }
        let proj = symmetrize(oracle.basis(), &o.amplitudes, symmetric.basis())?;
        let dev = proj
            .state
            .amplitudes()
            .iter()
            .zip(&s.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        out.max_deviation = out.max_deviation.max(dev);
        out.max_residual = out.max_residual.max(proj.residual);
        out.max_outside_basis = out.max_outside_basis.max(proj.outside_basis);
    }
    Ok(out)
}
