use std::sync::Arc;

use blockade_sim::dynamics::propagate;
use blockade_sim::hamiltonian::HamiltonianModel;
use blockade_sim::hilbert::{enumerate_basis, make_state, BasisLabel, StateVector};
use blockade_sim::observables::population;
use blockade_sim::oracle::{oracle_propagate, symmetrize, OracleModel};
use blockade_sim::params::{Caps, ModelFlags, PhysicalParams, PulseEnvelope, SimulationGrid, Tier};
use blockade_sim::pulse::{blockade_sweep, solve_area, FreeParameter};
use proptest::prelude::*;

fn moderate(n: usize, delta: f64, g: f64, b: f64) -> PhysicalParams {
    PhysicalParams {
        n_atoms: n,
        detuning: delta,
        signal_coupling: g,
        blockade_shift: b,
        rydberg_linewidth: 0.0,
        ..Default::default()
    }
}

/// success, p_d, max P(n_r = 1), final P(n_s ≥ 2 or n_ph ≥ 2)
fn fields(states: &[StateVector]) -> [f64; 4] {
    let n = states[0].basis().n_atoms();
    let single = BasisLabel::single_excitation(n);
    let last = states.last().unwrap();
    let max_over = |f: &dyn Fn(&BasisLabel) -> bool| {
        states.iter().map(|s| population(s, f)).fold(0.0, f64::max)
    };
    [
        population(last, |l| *l == single),
        max_over(&|l| l.n_r >= 2),
        max_over(&|l| l.n_r == 1),
        population(last, |l| l.n_s >= 2 || l.n_ph >= 2),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn oracle_agrees_on_report_fields(
        n in 1usize..=3,
        amp in 5.0f64..25.0,
        center in 0.3f64..0.7,
        width in 0.08f64..0.2,
        delta in -150.0f64..150.0,
        g in 0.0f64..15.0,
        b in 0.0f64..300.0,
    ) {
        let p = moderate(n, delta, g, b);
        let env = PulseEnvelope::gaussian(amp, 1.0, center, width);
        let grid = SimulationGrid::new(0.0, 1.0, 2e-4, 50).unwrap();
        let basis = Arc::new(enumerate_basis(n, Caps::uncapped(n, 2)).unwrap());
        let model = HamiltonianModel::with_basis(&p, Tier::Full, false, basis.clone(), &env, &grid).unwrap();
        let psi = make_state(&basis, BasisLabel::ground(n)).unwrap();
        let traj = propagate(&model, &psi, &grid).unwrap();
        let sym: Vec<StateVector> = (0..traj.samples().len()).map(|i| traj.state(i)).collect();

        let oracle = OracleModel::new(&p, &env, 2, false).unwrap();
        let full = oracle_propagate(&oracle, &oracle.basis().ground_state(), &grid).unwrap();
        let projected: Vec<StateVector> = full
            .samples()
            .iter()
            .map(|s| {
                let proj = symmetrize(oracle.basis(), &s.amplitudes, &basis).unwrap();
                prop_assert!(proj.residual < 1e-10);
                Ok(proj.state)
            })
            .collect::<Result<_, TestCaseError>>()?;
        for (a, b) in fields(&sym).iter().zip(fields(&projected)) {
            prop_assert!((a - b).abs() < 1e-7, "{a} vs {b}");
        }
    }

    #[test]
    fn raman_tier_stays_out_of_rydberg_and_conserves_excitations(
        n in 1usize..=8,
        amp in 10.0f64..80.0,
        delta in 500.0f64..3000.0,
        g in 1.0f64..10.0,
    ) {
        let p = moderate(n, delta, g, 0.0);
        let env = PulseEnvelope::gaussian(amp, 2.0, 1.0, 0.4);
        let grid = SimulationGrid::new(0.0, 2.0, 1e-3, 100).unwrap();
        let flags = ModelFlags::uncapped(Tier::Raman, 2);
        let model = HamiltonianModel::new(&p, &flags, &env, &grid).unwrap();
        prop_assert!(model.basis().labels().iter().all(|l| l.n_r == 0));
        let psi = make_state(model.basis(), BasisLabel::ground(n)).unwrap();
        let traj = propagate(&model, &psi, &grid).unwrap();
        for i in 0..traj.samples().len() {
            let s = traj.state(i);
            // N_ph − N_s = 0 sector only
            let outside = population(&s, |l| l.n_ph != l.n_s);
            prop_assert!(outside < 1e-24, "{outside}");
        }
    }

    #[test]
    fn doubling_the_coupling_halves_the_duration(
        n in 1usize..=400,
        amp in 1.0f64..200.0,
        g in 0.5f64..20.0,
    ) {
        let p = PhysicalParams { n_atoms: n, signal_coupling: g, ..Default::default() };
        let t1 = solve_area(&PulseEnvelope::square(amp, 1.0), FreeParameter::Duration, &p, None).unwrap().0;
        let t2 = solve_area(&PulseEnvelope::square(2.0 * amp, 1.0), FreeParameter::Duration, &p, None).unwrap().0;
        prop_assert!((t1 / t2 - 2.0).abs() < 1e-8, "{t1} {t2}");
        let again = solve_area(&PulseEnvelope::square(amp, 1.0), FreeParameter::Duration, &p, None).unwrap();
        prop_assert_eq!(again.0, t1);
        prop_assert!(again.1 <= 200);
    }

    #[test]
    fn blockade_sweep_is_sorted(values in proptest::collection::vec(0.0f64..1e3, 0..5)) {
        let p = moderate(2, 0.0, 0.0, 0.0);
        let env = PulseEnvelope::square(1.0, 0.5);
        let grid = SimulationGrid::aligned(&env, 0.0, 0.5, 1e-4, 100).unwrap();
        let rows = blockade_sweep(&p, &ModelFlags::new(Tier::Full), &env, &grid, &values);
        prop_assert_eq!(rows.len(), values.len());
        prop_assert!(rows.windows(2).all(|w| w[0].blockade_shift <= w[1].blockade_shift));
        prop_assert!(rows.iter().all(|r| r.outcome.is_ok()));
    }
}
