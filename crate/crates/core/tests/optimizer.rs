// Copyright 2026 ddopt Contributors
// SPDX-License-Identifier: Apache-2.0

use ddopt::decoherence::DEFAULT_TOL;
use ddopt::optimizer::{search_allocations, InitialGuess, Method};
use ddopt::{
    free_decay_gamma, gammas, nested_udd, optimize_allocation, optimize_locations, performance_phi,
    scan_m, Allocation, NoiseSpectrum, OptimizerConfig, Qubit, SpectrumTriple,
};

fn symmetric() -> OptimizerConfig {
    OptimizerConfig {
        symmetric: true,
        ..OptimizerConfig::default()
    }
}

fn alternating() -> Allocation {
    Allocation::new(8, vec![2, 4, 6, 8]).unwrap()
}

#[test]
fn local_noise_only_doubles_the_single_qubit_solution() {
    let t = SpectrumTriple::preset("t1_row5").unwrap();
    let r = optimize_locations(&alternating(), &t, &OptimizerConfig::default()).unwrap();
    assert!(r.ordering_valid);
    assert!(r.phi > 4e-11 && r.phi < 4e-9, "{:e}", r.phi);

    let (q1, q2): (Vec<_>, Vec<_>) = r
        .times
        .iter()
        .zip(&r.targets)
        .partition(|(_, q)| **q == Qubit::Q1);
    for ((a, _), (b, _)) in q1.iter().zip(&q2) {
        assert!((*a - *b).abs() < 1e-3, "{:?}", r.times);
    }
    for (t, expect) in q1.iter().map(|p| *p.0).zip([0.10, 0.35, 0.65, 0.90]) {
        assert!((t - expect).abs() < 0.01, "{:?}", r.times);
    }
}

#[test]
fn table_one_alternating_allocation() {
    let t = SpectrumTriple::preset("t1_row1").unwrap();
    let r = optimize_locations(&alternating(), &t, &OptimizerConfig::default()).unwrap();
    assert!(r.phi <= 9e-5, "{:e}", r.phi);
}

#[test]
fn empty_train() {
    let t = SpectrumTriple::preset("t2_row1").unwrap();
    let r = optimize_allocation(0, 0, &t, &OptimizerConfig::default()).unwrap();
    assert!(r.times.is_empty() && r.converged);
    let free = gammas(&ddopt::PulseSequence::empty(), &t, DEFAULT_TOL).unwrap();
    assert_eq!(r.phi, performance_phi(&free));
}

#[test]
fn table_two_two_pulse_allocation() {
    let t = SpectrumTriple::preset("t2_row1").unwrap();
    let s = search_allocations(8, 2, &t, &symmetric()).unwrap();
    assert_eq!(s.best.allocation.first_half(), vec![3]);
    assert!(s.best.phi <= 1.7e-4, "{:e}", s.best.phi);
    let nested = performance_phi(&gammas(&nested_udd(2, 2), &t, DEFAULT_TOL).unwrap());
    assert!(s.best.phi < nested);
}

#[test]
fn all_pulses_on_qubit_two_leave_qubit_one_free() {
    let t = SpectrumTriple::preset("t2_row1").unwrap();
    let r = optimize_allocation(8, 8, &t, &symmetric()).unwrap();
    let free = free_decay_gamma(&t.s1, DEFAULT_TOL).unwrap().value;
    assert_eq!(r.gammas.gamma1, free);
}

#[test]
fn table_five_twelve_pulses_two_on_qubit_two() {
    let t = SpectrumTriple::preset("t5_row1").unwrap();
    let r = optimize_allocation(12, 2, &t, &symmetric()).unwrap();
    assert_eq!(r.allocation.first_half(), vec![4]);
    assert!(r.phi <= 1e-5, "{:e}", r.phi);
}

#[test]
fn table_five_partition_preferences() {
    let t = SpectrumTriple::preset("t5_row1").unwrap();
    let eight = scan_m(8, &t, &symmetric()).unwrap();
    let phi = |m: usize| eight.results[m].as_ref().unwrap().phi;
    assert!(phi(2) < phi(4) && phi(2) < phi(6));
    assert!(eight.results[1].is_none());

    let four = scan_m(4, &t, &symmetric()).unwrap();
    assert!(four.results[0].as_ref().unwrap().phi < four.results[2].as_ref().unwrap().phi);
}

#[test]
fn silent_environment_costs_nothing() {
    let zero = SpectrumTriple::new(
        NoiseSpectrum::zero(),
        NoiseSpectrum::zero(),
        NoiseSpectrum::zero(),
    );
    let scan = scan_m(5, &zero, &OptimizerConfig::default()).unwrap();
    for r in scan.results.iter().flatten() {
        assert_eq!(r.phi, 0.0);
    }
}

#[test]
fn descent_never_loses_to_its_starting_points() {
    let t = SpectrumTriple::preset("t4_row1").unwrap();
    let cfg = OptimizerConfig {
        random_restarts: 2,
        seed: 11,
        ..OptimizerConfig::default()
    };
    let s = search_allocations(6, 2, &t, &cfg).unwrap();
    for r in &s.results {
        assert!(r.ordering_valid);
        for start in r.starts.iter().filter(|s| s.ordering_valid) {
            assert!(start.phi <= start.initial_phi);
            assert!(r.phi <= start.phi + 1e-15);
        }
    }
}

#[test]
fn optimum_beats_nested_udd_for_its_own_allocation() {
    for (preset, inner, outer) in [("t2_row1", 2, 2), ("t4_row1", 3, 3), ("t6_row1", 2, 2)] {
        let t = SpectrumTriple::preset(preset).unwrap();
        let seq = nested_udd(inner, outer);
        let nested = performance_phi(&gammas(&seq, &t, DEFAULT_TOL).unwrap());
        let cfg = OptimizerConfig {
            initial_guesses: vec![InitialGuess::NestedUdd],
            ..OptimizerConfig::default()
        };
        let r = optimize_locations(&seq.allocation(), &t, &cfg).unwrap();
        assert!(r.phi <= nested, "{preset}: {:e} vs {nested:e}", r.phi);
    }
}

#[test]
fn steepest_descent_also_improves() {
    let t = SpectrumTriple::preset("t2_row1").unwrap();
    let cfg = OptimizerConfig {
        method: Method::SteepestDescent,
        max_iterations: 200,
        ..OptimizerConfig::default()
    };
    let alloc = Allocation::new(4, vec![2]).unwrap();
    let r = optimize_locations(&alloc, &t, &cfg).unwrap();
    assert!(r.starts.iter().all(|s| s.phi <= s.initial_phi));
}

#[test]
fn identical_configuration_is_bitwise_reproducible() {
    let t = SpectrumTriple::preset("t3_row1").unwrap();
    let cfg = OptimizerConfig {
        random_restarts: 3,
        seed: 5,
        ..OptimizerConfig::default()
    };
    let a = search_allocations(5, 2, &t, &cfg).unwrap();
    let b = search_allocations(5, 2, &t, &cfg).unwrap();
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
}

#[test]
fn symmetric_mode_rejects_asymmetric_allocations() {
    let t = SpectrumTriple::preset("t2_row1").unwrap();
    let err =
        optimize_locations(&Allocation::new(4, vec![1]).unwrap(), &t, &symmetric()).unwrap_err();
    assert!(err.is_input_error());
}
