//! Permutation-symmetric (Dicke) atomic basis tensored with a truncated
//! signal-photon Fock ladder, and the collective operators acting on it.
//!
//! A label (n_g, n_s, n_r; n_ph) stands for the normalized symmetric
//! superposition of all atomic configurations with those level occupations.
//! Collective operators are kept unnormalized: `T_{βα} = Σ_i |β⟩_i⟨α|`, so
//! `S_s† = T_sg/√N_a` and `S_r† = T_rg/√N_a`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Result, SimError};
use crate::params::Caps;
use crate::sparse::SparseOperator;

/// Default guard on the number of basis labels.
pub const DEFAULT_MAX_BASIS: usize = 2_000_000;

/// Basis-size guard, overridable through `BLOCKADE_SIM_MAX_BASIS`.
pub fn max_basis_size() -> usize {
    std::env::var("BLOCKADE_SIM_MAX_BASIS")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_BASIS)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    Ground,
    Storage,
    Rydberg,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Ground, Level::Storage, Level::Rydberg];

    pub fn index(self) -> usize {
        match self {
            Level::Ground => 0,
            Level::Storage => 1,
            Level::Rydberg => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Level> {
        Level::ALL.get(i).copied()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Ladder {
    Create,
    Annihilate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisLabel {
    pub n_g: usize,
    pub n_s: usize,
    pub n_r: usize,
    pub n_ph: usize,
}

impl BasisLabel {
    pub fn new(n_g: usize, n_s: usize, n_r: usize, n_ph: usize) -> Self {
        BasisLabel { n_g, n_s, n_r, n_ph }
    }

    /// Ensemble ground state with the signal mode in vacuum.
    pub fn ground(n_atoms: usize) -> Self {
        BasisLabel::new(n_atoms, 0, 0, 0)
    }

    /// S_s† a_s† |0_a, 0_p⟩.
    pub fn single_excitation(n_atoms: usize) -> Self {
        BasisLabel::new(n_atoms - 1, 1, 0, 1)
    }

    pub fn n_atoms(&self) -> usize {
        self.n_g + self.n_s + self.n_r
    }

    pub fn count(&self, level: Level) -> usize {
        match level {
            Level::Ground => self.n_g,
            Level::Storage => self.n_s,
            Level::Rydberg => self.n_r,
        }
    }

    fn count_mut(&mut self, level: Level) -> &mut usize {
        match level {
            Level::Ground => &mut self.n_g,
            Level::Storage => &mut self.n_s,
            Level::Rydberg => &mut self.n_r,
        }
    }

    /// Label with one atom moved from `from` to `to`, if any atom is in `from`.
    pub fn moved(&self, from: Level, to: Level) -> Option<BasisLabel> {
        if self.count(from) == 0 {
            return None;
        }
        let mut next = *self;
        *next.count_mut(from) -= 1;
        *next.count_mut(to) += 1;
        Some(next)
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{};{})", self.n_g, self.n_s, self.n_r, self.n_ph)
    }
}

/// Ordered label list with an exact inverse lookup.
#[derive(Clone, Debug)]
pub struct SymmetricBasis {
    n_atoms: usize,
    caps: Caps,
    labels: Vec<BasisLabel>,
    lookup: HashMap<BasisLabel, usize>,
}

impl PartialEq for SymmetricBasis {
    fn eq(&self, other: &Self) -> bool {
        self.n_atoms == other.n_atoms && self.labels == other.labels
    }
}

impl SymmetricBasis {
    fn from_labels(n_atoms: usize, caps: Caps, labels: Vec<BasisLabel>) -> Self {
        let lookup = labels.iter().enumerate().map(|(i, l)| (*l, i)).collect();
        SymmetricBasis {
            n_atoms,
            caps,
            labels,
            lookup,
        }
    }

    /// Two-label basis {|0_a,0_p⟩, S_s†a_s†|0_a,0_p⟩} of the collective two-level model.
    pub fn two_level(n_atoms: usize) -> Self {
        let caps = Caps {
            n_s_max: 1,
            n_r_max: 0,
            n_photon_max: 1,
        };
        SymmetricBasis::from_labels(
            n_atoms,
            caps,
            vec![
                BasisLabel::ground(n_atoms),
                BasisLabel::single_excitation(n_atoms),
            ],
        )
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn caps(&self) -> Caps {
        self.caps
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[BasisLabel] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> BasisLabel {
        self.labels[index]
    }

    pub fn index_of(&self, label: &BasisLabel) -> Option<usize> {
        self.lookup.get(label).copied()
    }

    fn diagonal_from(&self, f: impl Fn(&BasisLabel) -> f64) -> SparseOperator {
        SparseOperator::diagonal(self.labels.iter().map(|l| C64::new(f(l), 0.0)))
    }
}

/// Every admissible label, ordered lexicographically in (n_r, n_s, n_ph).
pub fn enumerate_basis(n_atoms: usize, caps: Caps) -> Result<SymmetricBasis> {
    enumerate_basis_with_limit(n_atoms, caps, max_basis_size())
}

pub fn enumerate_basis_with_limit(n_atoms: usize, caps: Caps, max_size: usize) -> Result<SymmetricBasis> {
    if n_atoms == 0 {
        return Err(SimError::InvalidParams(vec!["n_atoms must be ≥ 1".into()]));
    }
    let r_cap = caps.n_r_max.min(n_atoms);
    let s_cap = caps.n_s_max.min(n_atoms);
    let photons = caps.n_photon_max + 1;
    let atomic: usize = (0..=r_cap).map(|n_r| s_cap.min(n_atoms - n_r) + 1).sum();
    let size = atomic.saturating_mul(photons);
    if size > max_size {
        return Err(SimError::BasisTooLarge {
            size,
            max: max_size,
        });
    }
    let mut labels = Vec::with_capacity(size);
    for n_r in 0..=r_cap {
        for n_s in 0..=s_cap.min(n_atoms - n_r) {
            for n_ph in 0..photons {
                labels.push(BasisLabel::new(n_atoms - n_r - n_s, n_s, n_r, n_ph));
            }
        }
    }
    Ok(SymmetricBasis::from_labels(n_atoms, caps, labels))
}

/// Unnormalized `T = Σ_i |to⟩_i⟨from|`. Elements leaving the basis are dropped.
pub fn collective_transition(basis: &SymmetricBasis, from: Level, to: Level) -> SparseOperator {
    assert_ne!(from, to, "collective transition needs distinct levels");
    let triplets = basis.labels().iter().enumerate().filter_map(|(col, label)| {
        let target = label.moved(from, to)?;
        let row = basis.index_of(&target)?;
        let element = ((label.count(from) * (label.count(to) + 1)) as f64).sqrt();
        Some((row, col, C64::new(element, 0.0)))
    });
    SparseOperator::from_triplets(basis.len(), triplets)
}

/// Signal-mode a† (dropped at the photon cap) or a.
pub fn photon_ladder(basis: &SymmetricBasis, direction: Ladder) -> SparseOperator {
    let create = SparseOperator::from_triplets(
        basis.len(),
        basis.labels().iter().enumerate().filter_map(|(col, label)| {
            let target = BasisLabel {
                n_ph: label.n_ph + 1,
                ..*label
            };
            let row = basis.index_of(&target)?;
            Some((row, col, C64::new(((label.n_ph + 1) as f64).sqrt(), 0.0)))
        }),
    );
    match direction {
        Ladder::Create => create,
        Ladder::Annihilate => create.adjoint(),
    }
}

/// Σ_{i<j} σ_rr^i σ_rr^j: diagonal n_r(n_r−1)/2.
pub fn blockade_diagonal(basis: &SymmetricBasis) -> SparseOperator {
    basis.diagonal_from(|l| (l.n_r * l.n_r.saturating_sub(1) / 2) as f64)
}

/// Σ_i σ_rr^i: diagonal n_r.
pub fn rydberg_number_diagonal(basis: &SymmetricBasis) -> SparseOperator {
    basis.diagonal_from(|l| l.n_r as f64)
}

pub fn level_number_diagonal(basis: &SymmetricBasis, level: Level) -> SparseOperator {
    basis.diagonal_from(|l| l.count(level) as f64)
}

pub fn photon_number_diagonal(basis: &SymmetricBasis) -> SparseOperator {
    basis.diagonal_from(|l| l.n_ph as f64)
}

/// Complex amplitudes over a shared symmetric basis.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    basis: Arc<SymmetricBasis>,
    amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn new(basis: Arc<SymmetricBasis>, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != basis.len() {
            return Err(SimError::BasisMismatch(format!(
                "{} amplitudes for a basis of {} labels",
                amplitudes.len(),
                basis.len()
            )));
        }
        Ok(StateVector { basis, amplitudes })
    }

    pub fn zeros(basis: Arc<SymmetricBasis>) -> Self {
        let n = basis.len();
        StateVector {
            basis,
            amplitudes: vec![C64::new(0.0, 0.0); n],
        }
    }

    pub fn basis(&self) -> &Arc<SymmetricBasis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn amplitude(&self, label: &BasisLabel) -> C64 {
        self.basis
            .index_of(label)
            .map_or(C64::new(0.0, 0.0), |i| self.amplitudes[i])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    fn check_same_basis(&self, other: &StateVector) -> Result<()> {
        if Arc::ptr_eq(&self.basis, &other.basis) || *self.basis == *other.basis {
            Ok(())
        } else {
            Err(SimError::BasisMismatch("states live on different bases".into()))
        }
    }

    /// Plain-text form: one line `n_g n_s n_r n_ph re im` per nonzero amplitude.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (label, a) in self.basis.labels().iter().zip(&self.amplitudes) {
            if *a != C64::new(0.0, 0.0) {
                out.push_str(&format!(
                    "{} {} {} {} {:.17e} {:.17e}\n",
                    label.n_g, label.n_s, label.n_r, label.n_ph, a.re, a.im
                ));
            }
        }
        out
    }

    pub fn from_text(basis: Arc<SymmetricBasis>, text: &str) -> Result<Self> {
        let mut state = StateVector::zeros(basis);
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |what: &str| SimError::Config(format!("state line {}: {what}", lineno + 1));
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 6 {
                return Err(bad("expected `n_g n_s n_r n_ph re im`"));
            }
            let ints: Vec<usize> = fields[..4]
                .iter()
                .map(|f| usize::from_str(f))
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad("occupations must be nonnegative integers"))?;
            let re = f64::from_str(fields[4]).map_err(|_| bad("bad real part"))?;
            let im = f64::from_str(fields[5]).map_err(|_| bad("bad imaginary part"))?;
            let label = BasisLabel::new(ints[0], ints[1], ints[2], ints[3]);
            let idx = state
                .basis
                .index_of(&label)
                .ok_or_else(|| bad(&format!("label {label} not in basis")))?;
            state.amplitudes[idx] = C64::new(re, im);
        }
        Ok(state)
    }
}

/// Unit basis state.
pub fn make_state(basis: &Arc<SymmetricBasis>, label: BasisLabel) -> Result<StateVector> {
    let idx = basis
        .index_of(&label)
        .ok_or_else(|| SimError::BasisMismatch(format!("label {label} not in basis")))?;
    let mut state = StateVector::zeros(basis.clone());
    state.amplitudes[idx] = C64::new(1.0, 0.0);
    Ok(state)
}

/// ⟨a|b⟩, conjugating `a`.
pub fn overlap(a: &StateVector, b: &StateVector) -> Result<C64> {
    a.check_same_basis(b)?;
    Ok(a.amplitudes.iter().zip(&b.amplitudes).map(|(x, y)| x.conj() * y).sum())
}

pub fn apply(op: &SparseOperator, state: &StateVector) -> Result<StateVector> {
    if op.dim() != state.basis.len() {
        return Err(SimError::BasisMismatch(format!(
            "operator of dimension {} applied to a state of dimension {}",
            op.dim(),
            state.basis.len()
        )));
    }
    Ok(StateVector {
        basis: state.basis.clone(),
        amplitudes: op.matvec(&state.amplitudes),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn uncapped(n: usize, ph: usize) -> Arc<SymmetricBasis> {
        Arc::new(enumerate_basis(n, Caps::uncapped(n, ph)).unwrap())
    }

    #[test]
    fn basis_sizes() {
        assert_eq!(uncapped(1, 1).len(), 6);
        assert_eq!(uncapped(2, 0).len(), 6);
        let capped = enumerate_basis(
            100,
            Caps {
                n_s_max: 2,
                n_r_max: 2,
                n_photon_max: 2,
            },
        )
        .unwrap();
        assert_eq!(capped.len(), 27);
        for n in 1..8 {
            assert_eq!(uncapped(n, 0).len(), (n + 1) * (n + 2) / 2);
        }
    }

    #[test]
    fn ordering_is_lexicographic_in_r_s_ph() {
        let b = uncapped(1, 1);
        let order: Vec<(usize, usize, usize)> =
            b.labels().iter().map(|l| (l.n_r, l.n_s, l.n_ph)).collect();
        let mut sorted = order.clone();
        sorted.sort();
        assert_eq!(order, sorted);
        assert_eq!(b.label(0), BasisLabel::ground(1));
        for (i, l) in b.labels().iter().enumerate() {
            assert_eq!(b.index_of(l), Some(i));
        }
    }

    #[test]
    fn size_guard() {
        let err = enumerate_basis_with_limit(1000, Caps::uncapped(1000, 2), 10_000).unwrap_err();
        assert!(matches!(err, SimError::BasisTooLarge { .. }));
    }

    #[test]
    fn rydberg_transition_elements() {
        let b1 = uncapped(1, 0);
        let t = collective_transition(&b1, Level::Ground, Level::Rydberg);
        let from = b1.index_of(&BasisLabel::new(1, 0, 0, 0)).unwrap();
        let to = b1.index_of(&BasisLabel::new(0, 0, 1, 0)).unwrap();
        assert_eq!(t.get(to, from), C64::new(1.0, 0.0));

        let b2 = uncapped(2, 0);
        let t = collective_transition(&b2, Level::Ground, Level::Rydberg);
        let i200 = b2.index_of(&BasisLabel::new(2, 0, 0, 0)).unwrap();
        let i101 = b2.index_of(&BasisLabel::new(1, 0, 1, 0)).unwrap();
        let i002 = b2.index_of(&BasisLabel::new(0, 0, 2, 0)).unwrap();
        assert_relative_eq!(t.get(i101, i200).re, 2f64.sqrt());
        assert_relative_eq!(t.get(i002, i101).re, 2f64.sqrt());
    }

    #[test]
    fn truncation_drops_elements() {
        let b = enumerate_basis(
            3,
            Caps {
                n_s_max: 3,
                n_r_max: 1,
                n_photon_max: 0,
            },
        )
        .unwrap();
        let t = collective_transition(&b, Level::Ground, Level::Rydberg);
        let from = b.index_of(&BasisLabel::new(2, 0, 1, 0)).unwrap();
        assert!(t.triplets().all(|(_, c, _)| c != from));
    }

    #[test]
    fn photon_ladder_elements() {
        let b = uncapped(1, 2);
        let create = photon_ladder(&b, Ladder::Create);
        let i0 = b.index_of(&BasisLabel::new(1, 0, 0, 0)).unwrap();
        let i1 = b.index_of(&BasisLabel::new(1, 0, 0, 1)).unwrap();
        let i2 = b.index_of(&BasisLabel::new(1, 0, 0, 2)).unwrap();
        assert_eq!(create.get(i1, i0), C64::new(1.0, 0.0));
        assert_relative_eq!(create.get(i2, i1).re, 2f64.sqrt());
        let ann = photon_ladder(&b, Ladder::Annihilate);
        assert!(ann.triplets().all(|(_, c, _)| c != i0));
        // nothing created past the cap
        assert!(create.triplets().all(|(_, c, _)| c != i2));
    }

    #[test]
    fn diagonals() {
        let b = uncapped(3, 0);
        let block = blockade_diagonal(&b);
        let nr = rydberg_number_diagonal(&b);
        for (i, l) in b.labels().iter().enumerate() {
            let expect = match l.n_r {
                0 | 1 => 0.0,
                2 => 1.0,
                3 => 3.0,
                _ => unreachable!(),
            };
            assert_eq!(block.get(i, i).re, expect);
            assert_eq!(nr.get(i, i).re, l.n_r as f64);
        }
    }

    #[test]
    fn states_overlap_and_apply() {
        let b = uncapped(2, 0);
        let g = make_state(&b, BasisLabel::new(2, 0, 0, 0)).unwrap();
        let r = make_state(&b, BasisLabel::new(1, 0, 1, 0)).unwrap();
        assert_eq!(overlap(&g, &g).unwrap(), C64::new(1.0, 0.0));
        assert_eq!(overlap(&g, &r).unwrap(), C64::new(0.0, 0.0));
        let t = collective_transition(&b, Level::Ground, Level::Rydberg);
        let out = apply(&t, &g).unwrap();
        assert_relative_eq!(
            out.amplitude(&BasisLabel::new(1, 0, 1, 0)).re,
            2f64.sqrt(),
            epsilon = 1e-15
        );
        assert_relative_eq!(out.norm_sqr(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn overlap_rejects_foreign_basis() {
        let a = make_state(&uncapped(2, 0), BasisLabel::ground(2)).unwrap();
        let b = make_state(&uncapped(3, 0), BasisLabel::ground(3)).unwrap();
        assert!(overlap(&a, &b).is_err());
    }

    #[test]
    fn transitions_are_mutual_adjoints() {
        let b = uncapped(4, 2);
        for from in Level::ALL {
            for to in Level::ALL {
                if from == to {
                    continue;
                }
                let fwd = collective_transition(&b, from, to);
                let back = collective_transition(&b, to, from);
                assert_eq!(fwd.adjoint(), back, "{from:?} -> {to:?}");
            }
        }
    }

    #[test]
    fn storage_commutator_exhaustive() {
        for n in 1..=4 {
            let b = uncapped(n, 1);
            let t_gs = collective_transition(&b, Level::Storage, Level::Ground);
            let t_sg = collective_transition(&b, Level::Ground, Level::Storage);
            let comm = t_gs.commutator(&t_sg);
            for (i, l) in b.labels().iter().enumerate() {
                let expect = l.n_g as f64 - l.n_s as f64;
                for (j, l2) in b.labels().iter().enumerate() {
                    let want = if i == j { expect } else { 0.0 };
                    assert!(
                        (comm.get(j, i) - C64::new(want, 0.0)).norm() < 1e-12,
                        "N={n} {l} -> {l2}"
                    );
                }
            }
        }
    }

    #[test]
    fn doubly_excited_state_is_normalized() {
        for n in 2..=12 {
            let b = uncapped(n, 0);
            let t = collective_transition(&b, Level::Ground, Level::Rydberg);
            let g = make_state(&b, BasisLabel::ground(n)).unwrap();
            let twice = apply(&t, &apply(&t, &g).unwrap()).unwrap();
            let nf = n as f64;
            let scale = (nf / (2.0 * (nf - 1.0))).sqrt() / nf;
            let norm = twice.norm() * scale;
            assert_relative_eq!(norm, 1.0, epsilon = 1e-12);
            if n == 2 {
                let amp = twice.amplitude(&BasisLabel::new(0, 0, 2, 0)) * scale;
                assert_relative_eq!(amp.re, 1.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn text_round_trip() {
        let b = uncapped(2, 1);
        let mut s = StateVector::zeros(b.clone());
        s.amplitudes_mut()[3] = C64::new(0.25, -1.0 / 3.0);
        s.amplitudes_mut()[7] = C64::new(-1e-9, 2.0);
        let text = s.to_text();
        assert_eq!(text.lines().count(), 2);
        let back = StateVector::from_text(b, &text).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn enumeration_is_deterministic() {
        let caps = Caps {
            n_s_max: 3,
            n_r_max: 2,
            n_photon_max: 2,
        };
        assert_eq!(
            enumerate_basis(7, caps).unwrap().labels(),
            enumerate_basis(7, caps).unwrap().labels()
        );
    }
}
