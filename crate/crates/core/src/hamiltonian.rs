//! Time-dependent Hamiltonians for the three model tiers.
//!
//! * full: `H = Δ·N_r + B·D_block + [Ω(t)·T_rg + g_s·a†T_sr + h.c.]`
//! * raman: `H = −[Ω′(t)·a†T_sg + h.c.]`
//! * two-level: the raman Hamiltonian restricted to
//!   {|0_a,0_p⟩, S_s†a_s†|0_a,0_p⟩}, off-diagonal `−√N_a·Ω′(t)`.
//!
//! Every off-diagonal part is stored together with its adjoint, so the
//! assembled operator is Hermitian for all t (the optional decay term
//! `−i(Γ/2)·N_r` excepted).

use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Result, SimError};
use crate::hilbert::{
    blockade_diagonal, collective_transition, enumerate_basis, photon_ladder,
    rydberg_number_diagonal, BasisLabel, Ladder, Level, SymmetricBasis,
};
use crate::params::{ModelFlags, PhysicalParams, PulseEnvelope, SimulationGrid, Tier};
use crate::quadrature::CumulativeIntensity;
use crate::sparse::SparseOperator;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Ω′(t) = Ω(t)·(g_s/Δ)·e^{iφ(t)}, φ(t) = (1/Δ)∫₀ᵗ|Ω|².
#[derive(Clone, Debug)]
pub struct EffectiveRabi {
    envelope: PulseEnvelope,
    ratio: f64,
    detuning: f64,
    stark: Option<CumulativeIntensity>,
}

impl EffectiveRabi {
    /// `lo..hi` and `h` set the quadrature lattice for the Stark phase.
    pub fn new(env: &PulseEnvelope, p: &PhysicalParams, lo: f64, hi: f64, h: f64) -> Result<Self> {
        p.check_detuning()?;
        let stark = (!p.compensate_stark).then(|| CumulativeIntensity::new(env, lo, hi, h));
        Ok(EffectiveRabi {
            envelope: env.clone(),
            ratio: p.signal_coupling / p.detuning,
            detuning: p.detuning,
            stark,
        })
    }

    pub fn for_grid(env: &PulseEnvelope, p: &PhysicalParams, grid: &SimulationGrid) -> Result<Self> {
        EffectiveRabi::new(env, p, grid.t_start, grid.t_end, grid.step() / 2.0)
    }

    /// Accumulated Stark phase φ(t); zero when compensated.
    pub fn stark_phase(&self, t: f64) -> f64 {
        self.stark
            .as_ref()
            .map_or(0.0, |cum| cum.at(t) / self.detuning)
    }

    pub fn at(&self, t: f64) -> C64 {
        let bare = self.envelope.sample(t) * self.ratio;
        match self.stark {
            Some(_) => bare * C64::from_polar(1.0, self.stark_phase(t)),
            None => bare,
        }
    }

    /// |Ω′| at the envelope peak.
    pub fn peak(&self) -> f64 {
        self.envelope.peak() * self.ratio.abs()
    }
}

/// Ω′(t) evaluated with the Stark phase integrated on `grid`.
pub fn effective_rabi(env: &PulseEnvelope, p: &PhysicalParams, grid: &SimulationGrid, t: f64) -> Result<C64> {
    Ok(EffectiveRabi::for_grid(env, p, grid)?.at(t))
}

/// An off-diagonal operator stored with its adjoint.
#[derive(Clone, Debug)]
pub struct HermitianPair {
    pub op: SparseOperator,
    pub adjoint: SparseOperator,
}

impl HermitianPair {
    pub fn new(op: SparseOperator) -> Self {
        let adjoint = op.adjoint();
        HermitianPair { op, adjoint }
    }

    pub(crate) fn apply_add(&self, coeff: C64, x: &[C64], out: &mut [C64]) {
        if coeff != ZERO {
            self.op.apply_add(coeff, x, out);
            self.adjoint.apply_add(coeff.conj(), x, out);
        }
    }

    pub(crate) fn assemble(&self, coeff: C64) -> SparseOperator {
        self.op.scaled(coeff).add(&self.adjoint.scaled(coeff.conj()))
    }
}

#[derive(Clone, Debug)]
enum Coupling {
    /// Full tier: Ω(t) on T_rg, constant g_s on a†T_sr.
    Full {
        drive: HermitianPair,
        emission: HermitianPair,
    },
    /// Raman and two-level tiers: −Ω′(t) on a†T_sg.
    Raman {
        raman: HermitianPair,
        rabi: EffectiveRabi,
    },
}

/// Constant sparse parts plus the time-dependent coefficients attached to them.
#[derive(Clone, Debug)]
pub struct HamiltonianModel {
    tier: Tier,
    params: PhysicalParams,
    envelope: PulseEnvelope,
    basis: Arc<SymmetricBasis>,
    hermitian_diagonal: Vec<C64>,
    decay: Option<Vec<C64>>,
    coupling: Coupling,
}

/// Basis appropriate for a tier: capped Dicke space for full, no Rydberg
/// sector for raman, two labels for two-level.
pub fn basis_for(p: &PhysicalParams, flags: &ModelFlags) -> Result<Arc<SymmetricBasis>> {
    if p.n_atoms == 0 {
        return Err(SimError::InvalidParams(vec!["n_atoms must be ≥ 1".into()]));
    }
    Ok(Arc::new(match flags.tier {
        Tier::TwoLevel => SymmetricBasis::two_level(p.n_atoms),
        Tier::Full | Tier::Raman => enumerate_basis(p.n_atoms, flags.caps(p.n_atoms))?,
    }))
}

impl HamiltonianModel {
    /// Model on the tier's default basis, Stark phase integrated on `grid`.
    pub fn new(
        p: &PhysicalParams,
        flags: &ModelFlags,
        envelope: &PulseEnvelope,
        grid: &SimulationGrid,
    ) -> Result<Self> {
        let basis = basis_for(p, flags)?;
        HamiltonianModel::with_basis(p, flags.tier, flags.include_decay, basis, envelope, grid)
    }

    pub fn with_basis(
        p: &PhysicalParams,
        tier: Tier,
        include_decay: bool,
        basis: Arc<SymmetricBasis>,
        envelope: &PulseEnvelope,
        grid: &SimulationGrid,
    ) -> Result<Self> {
        if basis.n_atoms() != p.n_atoms {
            return Err(SimError::BasisMismatch(format!(
                "basis built for {} atoms, parameters have {}",
                basis.n_atoms(),
                p.n_atoms
            )));
        }
        let dim = basis.len();
        let (hermitian_diagonal, coupling) = match tier {
            Tier::Full => {
                let n_r = rydberg_number_diagonal(&basis);
                let pairs = blockade_diagonal(&basis);
                let diag = (0..dim)
                    .map(|i| p.detuning * n_r.get(i, i) + p.blockade_shift * pairs.get(i, i))
                    .collect();
                let drive = collective_transition(&basis, Level::Ground, Level::Rydberg);
                let emission = photon_ladder(&basis, Ladder::Create)
                    .matmul(&collective_transition(&basis, Level::Rydberg, Level::Storage));
                (
                    diag,
                    Coupling::Full {
                        drive: HermitianPair::new(drive),
                        emission: HermitianPair::new(emission),
                    },
                )
            }
            Tier::Raman | Tier::TwoLevel => {
                if tier == Tier::TwoLevel && dim != 2 {
                    return Err(SimError::BasisMismatch(
                        "two-level tier needs the two-label basis".into(),
                    ));
                }
                let rabi = EffectiveRabi::for_grid(envelope, p, grid)?;
                let raman = signal_raman_operator(&basis);
                (
                    vec![ZERO; dim],
                    Coupling::Raman {
                        raman: HermitianPair::new(raman),
                        rabi,
                    },
                )
            }
        };
        let decay = (include_decay && p.rydberg_linewidth > 0.0).then(|| {
            let gen = decay_generator(&basis, p.rydberg_linewidth);
            (0..dim).map(|i| gen.get(i, i)).collect()
        });
        Ok(HamiltonianModel {
            tier,
            params: p.clone(),
            envelope: envelope.clone(),
            basis,
            hermitian_diagonal,
            decay,
            coupling,
        })
    }

    pub fn tier(&self) -> Tier {
        self.tier
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn envelope(&self) -> &PulseEnvelope {
        &self.envelope
    }

    pub fn basis(&self) -> &Arc<SymmetricBasis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn has_decay(&self) -> bool {
        self.decay.is_some()
    }

    /// Ω′(t) for the raman and two-level tiers.
    pub fn effective_rabi(&self, t: f64) -> Option<C64> {
        match &self.coupling {
            Coupling::Raman { rabi, .. } => Some(rabi.at(t)),
            Coupling::Full { .. } => None,
        }
    }

    /// `out = H(t)·ψ`, decay included when enabled.
    pub fn apply(&self, t: f64, psi: &[C64], out: &mut [C64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.hermitian_diagonal[i] * psi[i];
        }
        if let Some(decay) = &self.decay {
            for (i, o) in out.iter_mut().enumerate() {
                *o += decay[i] * psi[i];
            }
        }
        match &self.coupling {
            Coupling::Full { drive, emission } => {
                drive.apply_add(self.envelope.sample(t), psi, out);
                emission.apply_add(C64::new(self.params.signal_coupling, 0.0), psi, out);
            }
            Coupling::Raman { raman, rabi } => {
                raman.apply_add(-rabi.at(t), psi, out);
            }
        }
    }

    /// Hermitian part of H(t) as an explicit sparse matrix.
    pub fn assemble_hermitian(&self, t: f64) -> SparseOperator {
        let diag = SparseOperator::diagonal(self.hermitian_diagonal.iter().copied());
        match &self.coupling {
            Coupling::Full { drive, emission } => diag
                .add(&drive.assemble(self.envelope.sample(t)))
                .add(&emission.assemble(C64::new(self.params.signal_coupling, 0.0))),
            Coupling::Raman { raman, rabi } => diag.add(&raman.assemble(-rabi.at(t))),
        }
    }

    /// H(t) including the decay generator when enabled.
    pub fn assemble(&self, t: f64) -> SparseOperator {
        let h = self.assemble_hermitian(t);
        match &self.decay {
            Some(d) => h.add(&SparseOperator::diagonal(d.iter().copied())),
            None => h,
        }
    }

    /// Gershgorin bound on the spectral radius of H over the pulse.
    pub fn spectral_bound(&self) -> f64 {
        let peak = C64::new(self.envelope.peak(), 0.0);
        let h = match &self.coupling {
            Coupling::Full { drive, emission } => SparseOperator::diagonal(self.hermitian_diagonal.iter().copied())
                .add(&drive.assemble(peak))
                .add(&emission.assemble(C64::new(self.params.signal_coupling, 0.0))),
            Coupling::Raman { raman, rabi } => raman.assemble(C64::new(rabi.peak(), 0.0)),
        };
        (0..h.dim())
            .map(|r| h.row(r).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Default RK4 step: 0.01 over the largest rate in the problem.
    pub fn default_dt(&self) -> f64 {
        0.01 / self.spectral_bound().max(1.0)
    }
}

/// a†T_sg built label by label, so it stays valid on bases that skip the
/// intermediate (n_s+1, n_ph) labels, such as the two-level basis.
fn signal_raman_operator(basis: &SymmetricBasis) -> SparseOperator {
    let triplets = basis.labels().iter().enumerate().filter_map(|(col, label)| {
        let moved = label.moved(Level::Ground, Level::Storage)?;
        let target = BasisLabel {
            n_ph: label.n_ph + 1,
            ..moved
        };
        let row = basis.index_of(&target)?;
        let element = ((label.n_g * (label.n_s + 1) * (label.n_ph + 1)) as f64).sqrt();
        Some((row, col, C64::new(element, 0.0)))
    });
    SparseOperator::from_triplets(basis.len(), triplets)
}

fn check_tier(model: &HamiltonianModel, tier: Tier) -> Result<()> {
    if model.tier == tier {
        Ok(())
    } else {
        Err(SimError::Unsupported(format!(
            "{tier} Hamiltonian requested from a {} model",
            model.tier
        )))
    }
}

pub fn build_full_h(model: &HamiltonianModel, t: f64) -> Result<SparseOperator> {
    check_tier(model, Tier::Full)?;
    Ok(model.assemble_hermitian(t))
}

pub fn build_raman_h(model: &HamiltonianModel, t: f64) -> Result<SparseOperator> {
    check_tier(model, Tier::Raman)?;
    Ok(model.assemble_hermitian(t))
}

/// 2×2 matrix on {|0_a,0_p⟩, S_s†a_s†|0_a,0_p⟩}.
pub fn build_two_level_h(model: &HamiltonianModel, t: f64) -> Result<[[C64; 2]; 2]> {
    check_tier(model, Tier::TwoLevel)?;
    let h = model.assemble_hermitian(t);
    Ok([[h.get(0, 0), h.get(0, 1)], [h.get(1, 0), h.get(1, 1)]])
}

/// −i(Γ/2)·N_r.
pub fn decay_generator(basis: &SymmetricBasis, linewidth: f64) -> SparseOperator {
    SparseOperator::diagonal(
        basis
            .labels()
            .iter()
            .map(|l| C64::new(0.0, -0.5 * linewidth * l.n_r as f64)),
    )
}
