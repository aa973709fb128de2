// Copyright 2026 ddopt Contributors
// SPDX-License-Identifier: Apache-2.0

use ddopt::decoherence::DEFAULT_TOL;
use ddopt::mc_oracle::{
    compare, grid_check, sample_phases, simulate, simulate_with, synthesize, MonteCarloConfig,
    ORACLE_SCALE,
};
use ddopt::{
    gammas, nested_udd, NoiseSpectrum, Pulse, PulseSequence, Qubit, SpectrumTriple, TwoQubitState,
};
use num_complex::Complex64;

fn only_s1(s: NoiseSpectrum) -> SpectrumTriple {
    SpectrumTriple::new(s, NoiseSpectrum::zero(), NoiseSpectrum::zero())
}

#[test]
fn silent_spectrum_gives_silent_trajectory() {
    let t = synthesize(&NoiseSpectrum::zero(), 1e-3, 4).unwrap();
    assert_eq!(t.values.len(), 1001);
    assert!(t.values.iter().all(|&v| v == 0.0));
}

#[test]
fn synthesis_is_deterministic() {
    let s = NoiseSpectrum::lorentzian(1.0, 0.2).unwrap();
    assert_eq!(
        synthesize(&s, 2e-3, 9).unwrap(),
        synthesize(&s, 2e-3, 9).unwrap()
    );
    assert_ne!(
        synthesize(&s, 2e-3, 9).unwrap(),
        synthesize(&s, 2e-3, 10).unwrap()
    );
}

#[test]
fn sample_variance_matches_correlation_at_zero_lag() {
    let s = NoiseSpectrum::ohmic(1.0, 1.0).unwrap();
    let n = 10_000;
    let xs: Vec<f64> = (0..n)
        .map(|seed| synthesize(&s, 0.1, seed).unwrap().values[0])
        .collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    let g0 = s.correlation(0.0, ORACLE_SCALE).unwrap();
    let se = g0 * (2.0 / (n as f64 - 1.0)).sqrt();
    assert!(
        (var - g0).abs() < 3.0 * se,
        "var {var} vs g(0) {g0} (se {se})"
    );
}

#[test]
fn free_decay_matches_closed_form() {
    let triple = only_s1(NoiseSpectrum::ohmic(1.0, 1.0).unwrap());
    let r = simulate(
        &PulseSequence::empty(),
        &triple,
        10_000,
        1e-3,
        &TwoQubitState::equal(),
        1,
    )
    .unwrap();
    let g1 = r.empirical.values[0].unwrap();
    let se = r.empirical.errors[0].unwrap();
    // 2 Cin(1); the truncated series is exact to double precision.
    let oracle = 0.479_623_509_4;
    assert!((g1 - oracle).abs() < 3.0 * se, "{g1} ± {se}");
}

#[test]
fn ground_state_is_untouched() {
    let t = SpectrumTriple::preset("t2_row1").unwrap();
    let r = simulate(
        &nested_udd(2, 2),
        &t,
        200,
        1e-3,
        &TwoQubitState::basis00(),
        0,
    )
    .unwrap();
    for a in 0..4 {
        for b in 0..4 {
            let expect = if a == 0 && b == 0 { 1.0 } else { 0.0 };
            assert_eq!(r.density.get(a, b), Complex64::new(expect, 0.0));
        }
    }
    assert!(r.empirical.values.iter().all(Option::is_none));
}

#[test]
fn diagonal_keeps_initial_populations() {
    let n = (0.84f64).sqrt();
    let state = TwoQubitState::from_real([0.1 / n, 0.7 / n, -0.5 / n, 0.3 / n]).unwrap();
    let t = SpectrumTriple::preset("t4_row2").unwrap();
    let r = simulate(&nested_udd(2, 2), &t, 300, 1e-3, &state, 3).unwrap();
    for a in 0..4 {
        assert_eq!(r.density.get(a, a).re, state.amplitudes()[a].norm_sqr());
        assert_eq!(r.density.get(a, a).im, 0.0);
    }
}

#[test]
fn nested_udd_two_components_agree_with_analytic() {
    let t = SpectrumTriple::preset("t2_row1").unwrap();
    let seq = nested_udd(2, 2);
    let r = simulate(&seq, &t, 10_000, 1e-3, &TwoQubitState::equal(), 2).unwrap();
    let analytic = gammas(&seq, &t, DEFAULT_TOL).unwrap();
    let cmp = compare(&analytic, &r.empirical);
    assert!(cmp.pass, "z = {:?}", cmp.z);
}

#[test]
fn omitting_the_scale_correction_is_caught() {
    let t = SpectrumTriple::preset("t2_row1").unwrap();
    let seq =
        PulseSequence::new(vec![Pulse::new(0.3, Qubit::Q1), Pulse::new(0.7, Qubit::Q2)]).unwrap();
    let cfg = MonteCarloConfig {
        scale: ddopt::mc_oracle::NEGATIVE_CONTROL_SCALE,
        ..MonteCarloConfig::default()
    };
    let r = simulate_with(&seq, &t, &TwoQubitState::equal(), &cfg).unwrap();
    let cmp = compare(&gammas(&seq, &t, DEFAULT_TOL).unwrap(), &r.empirical);
    assert!(!cmp.pass);
    assert!(cmp.max_abs_z() > 3.0);
}

#[test]
fn identical_estimates_have_zero_z() {
    let t = SpectrumTriple::preset("t2_row1").unwrap();
    let r = simulate(&nested_udd(2, 2), &t, 500, 1e-3, &TwoQubitState::equal(), 0).unwrap();
    let exact = r.empirical.triple().unwrap();
    let cmp = compare(&exact, &r.empirical);
    assert!(cmp.z.iter().flatten().all(|&z| z == 0.0));
    assert!(cmp.pass);
}

#[test]
fn gaussian_phase_identity() {
    let t = SpectrumTriple::preset("t4_row2").unwrap();
    let seq = PulseSequence::new(vec![
        Pulse::new(0.25, Qubit::Q2),
        Pulse::new(0.75, Qubit::Q2),
    ])
    .unwrap();
    let cfg = MonteCarloConfig::default();
    let phases = sample_phases(&seq, &t, &cfg).unwrap();
    let n = phases.len() as f64;
    for i in 0..3 {
        let x: Vec<f64> = phases.iter().map(|p| p[i]).collect();
        let var = x.iter().map(|v| v * v).sum::<f64>() / n;
        let c: Vec<f64> = x.iter().map(|v| (2.0 * v).cos()).collect();
        let mean = c.iter().sum::<f64>() / n;
        let sd = (c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let expect = (-2.0 * var).exp();
        assert!(
            (mean - expect).abs() <= 3.0 * sd / n.sqrt() + 1e-12,
            "component {i}: {mean} vs {expect}"
        );
    }
}

#[test]
fn coincident_pair_cancels_per_trajectory() {
    let t = SpectrumTriple::preset("t2_row1").unwrap();
    let base =
        PulseSequence::new(vec![Pulse::new(0.2, Qubit::Q1), Pulse::new(0.6, Qubit::Q2)]).unwrap();
    let mut pulses = base.pulses().to_vec();
    pulses.push(Pulse::new(0.4137, Qubit::Q1));
    pulses.push(Pulse::new(0.4137, Qubit::Q1));
    let paired = PulseSequence::new(pulses).unwrap();
    let cfg = MonteCarloConfig {
        trajectories: 500,
        ..MonteCarloConfig::default()
    };
    let a = sample_phases(&base, &t, &cfg).unwrap();
    let b = sample_phases(&paired, &t, &cfg).unwrap();
    let h = cfg.grid_step;
    for (x, y) in a.iter().zip(&b) {
        for i in 0..3 {
            assert!((x[i] - y[i]).abs() <= h * h, "{x:?} vs {y:?}");
        }
    }
}

#[test]
fn grid_refinement_converges_to_analytic() {
    let t = SpectrumTriple::preset("t2_row1").unwrap();
    let seq = nested_udd(2, 2);
    let check = grid_check(&seq, &t, 1e-3, ORACLE_SCALE).unwrap();
    let analytic = gammas(&seq, &t, DEFAULT_TOL).unwrap().as_array();
    for i in 0..3 {
        assert!(
            (check.extrapolated[i] / analytic[i] - 1.0).abs() < 1e-6,
            "{check:?}"
        );
        assert!(check.relative_change[i] < 1e-3);
    }
}

#[test]
fn too_few_trajectories_is_an_input_error() {
    let t = SpectrumTriple::preset("t2_row1").unwrap();
    let err = simulate(
        &PulseSequence::empty(),
        &t,
        99,
        1e-3,
        &TwoQubitState::equal(),
        0,
    )
    .unwrap_err();
    assert!(err.is_input_error());
}
