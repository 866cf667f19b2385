use std::f64::consts::PI;

use becgate::retrieval::{
    build_initial_state, evolve, phase_factor_validation, retrieve, InitialConditionSpec,
    Integrator, MeanFieldState, RetrievalParams,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn params(ratio: f64, integrator: Integrator) -> RetrievalParams {
    let mut p =
        RetrievalParams::from_ratios(2.0 * PI * 0.6e9, ratio, 3.5, 2.0 * PI * 3.62e3, 1e6).unwrap();
    p.integrator = integrator;
    p
}

fn gauge(state: &MeanFieldState, phi: f64) -> MeanFieldState {
    let mut out = state.clone();
    let n_max = state.n_max as i64;
    for n in -n_max..=n_max {
        let g = Complex64::from_polar(1.0, n as f64 * phi);
        out.set_b(n, state.b(n) * g);
        out.set_c(n, state.c(n) * g);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn ladder_gauge_leaves_observables_alone(phi in -PI..PI, chi in 0.0..2.0 * PI) {
        let p = params(200.0, Integrator::AdiabaticElimination);
        let s = build_initial_state(&InitialConditionSpec::nominal().with_chi(chi), 6).unwrap();
        let tau = p.emission_timescale();
        let a = evolve(&s, &p, 4.0 * tau, tau).unwrap();
        let b = evolve(&gauge(&s, phi), &p, 4.0 * tau, tau).unwrap();
        for (x, y) in a.samples.iter().zip(&b.samples) {
            let (x, y) = (&x.state, &y.state);
            prop_assert!((x.a_d.norm() - y.a_d.norm()).abs() <= 1e-9 * x.a_d.norm().max(1e-12));
            prop_assert!((x.a_r.norm() - y.a_r.norm()).abs() <= 1e-9 * x.a_r.norm().max(1e-12));
            prop_assert!((x.n_d - y.n_d).abs() <= 1e-8 * x.n_d.max(1.0));
            prop_assert!((x.n_r - y.n_r).abs() <= 1e-8 * x.n_r.max(1.0));
        }
    }

    #[test]
    fn retrieved_light_is_two_pi_periodic_in_chi(chi in 0.0..2.0 * PI) {
        let p = params(3e3, Integrator::AdiabaticElimination);
        let spec = InitialConditionSpec::nominal();
        let a = retrieve(&build_initial_state(&spec.with_chi(chi), 6).unwrap(), &p).unwrap();
        let b = retrieve(&build_initial_state(&spec.with_chi(chi + 2.0 * PI), 6).unwrap(), &p).unwrap();
        prop_assert!((a.n_d - b.n_d).abs() <= 1e-8 * a.n_d);
    }
}

#[test]
fn identical_inputs_give_identical_trajectories() {
    for integrator in [Integrator::AdiabaticElimination, Integrator::StiffAdaptive] {
        let p = params(300.0, integrator);
        let s = build_initial_state(&InitialConditionSpec::nominal().with_chi(1.1), 6).unwrap();
        let tau = p.emission_timescale();
        let a = evolve(&s, &p, 3.0 * tau, 0.25 * tau).unwrap();
        let b = evolve(&s, &p, 3.0 * tau, 0.25 * tau).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a, b);
    }
}

#[test]
fn unity_phase_factors_hold_over_one_emission_timescale() {
    let p = params(3e3, Integrator::AdiabaticElimination);
    let spec = InitialConditionSpec::nominal().with_chi(0.4);
    let dev = phase_factor_validation(&spec, &p, 6, p.emission_timescale()).unwrap();
    assert!(dev < 1e-2, "relative deviation {dev}");
}

#[test]
fn retrieval_leaves_some_atoms_in_the_upper_state() {
    // the dark superposition of the ladder is not emptied by retrieval
    let p = params(3e3, Integrator::AdiabaticElimination);
    let s = build_initial_state(&InitialConditionSpec::nominal(), 6).unwrap();
    let end = retrieve(&s, &p).unwrap();
    assert!(
        end.population_2() > 1e-2 && end.population_2() < s.population_2(),
        "{} {}",
        end.population_2(),
        s.population_2()
    );
    assert!(
        (end.atom_norm() - s.atom_norm()).abs() < 1e-8,
        "{} {}",
        end.atom_norm(),
        s.atom_norm()
    );
}

#[test]
fn phase_factors_are_inert_without_recoil_or_detuning() {
    let mut p = params(300.0, Integrator::AdiabaticElimination);
    p.omega_r = 0.0;
    let spec = InitialConditionSpec::nominal().with_chi(0.4);
    let dev = phase_factor_validation(&spec, &p, 6, 2.0 * p.emission_timescale()).unwrap();
    assert_eq!(dev, 0.0);
}
