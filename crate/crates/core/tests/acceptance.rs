// Copyright 2026 ddopt Contributors
// SPDX-License-Identifier: Apache-2.0

//! Acceptance criteria 1-8, one PASS/FAIL line each.
//!
//! Runs as a plain binary (`harness = false`) so the summary is printed on
//! every run. With `DDOPT_ACCEPTANCE_STRICT=1` it exits non-zero if any
//! criterion fails; otherwise failures are reported without stopping the
//! remaining test targets.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use ddopt::decoherence::{evaluate_layout, DEFAULT_TOL};
use ddopt::mc_oracle::{compare, simulate_with, MonteCarloConfig, NEGATIVE_CONTROL_SCALE};
use ddopt::optimizer::{ordering_valid, search_allocations};
use ddopt::reproduce::{
    nested_phi, run_row, select_rows, table_rows, RowKind, RowOutcome, TableId,
};
use ddopt::sequences::udd_times_extended;
use ddopt::{
    evolve, filter_value, free_decay_gamma, gammas, performance_phi, phi_gradient, FilterInput,
    GammaTriple, NoiseSpectrum, OptimizerConfig, Pulse, PulseSequence, Qubit, SpectrumTriple,
    TwoQubitState,
};
use nalgebra::{Complex, Matrix4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn row_line(o: &RowOutcome) -> String {
    format!(
        "{} b{} {}: phi {:.4e} table {:.3e} ({}) baseline {} ordinals {:?}/{:?} {}",
        o.table,
        o.block,
        o.row,
        o.phi,
        o.table_phi,
        o.tolerance,
        o.below_baseline.map_or("n/a".into(), |b| b.to_string()),
        o.locations,
        o.table_locations,
        if o.pass { "ok" } else { "FAIL" }
    )
}

/// Nested-UDD rows of Tables II-VI within 5%, under 10 s.
fn criterion_1() -> Verdict {
    let start = Instant::now();
    let cfg = OptimizerConfig::default();
    let mut failed = Vec::new();
    let mut count = 0;
    for table in [
        TableId::T2,
        TableId::T3,
        TableId::T4,
        TableId::T5,
        TableId::T6,
    ] {
        for row in select_rows(table, "nested").unwrap() {
            let o = run_row(&row, &cfg).unwrap();
            count += 1;
            if !o.pass {
                failed.push(row_line(&o));
            }
        }
    }
    let t = start.elapsed();
    let ok = failed.is_empty() && count >= 15 && t < Duration::from_secs(10);
    verdict(
        ok,
        format!(
            "{count} rows, {} outside 5%, {:.2}s {}",
            failed.len(),
            secs(t),
            failed.join("; ")
        ),
    )
}

/// Asymmetric 11-pulse nested UDD under Table V spectra.
fn criterion_2() -> Verdict {
    let start = Instant::now();
    let phi = nested_phi(3, 2, &SpectrumTriple::preset("t5_row1").unwrap()).unwrap();
    let t = start.elapsed();
    let ok = (phi / 0.517 - 1.0).abs() <= 0.05 && t < Duration::from_secs(1);
    verdict(ok, format!("phi {phi:.5} vs 0.517, {:.3}s", secs(t)))
}

/// `Cin(x)` by its power series.
fn cin_series(x: f64) -> f64 {
    let (mut sum, mut fact) = (0.0, 1.0);
    for k in 1..30 {
        let n = 2 * k;
        fact *= ((n - 1) * n) as f64;
        let term = x.powi(n) / (n as f64 * fact);
        sum += if k % 2 == 1 { term } else { -term };
    }
    sum
}

/// Free-decay closed forms to 1e-9.
fn criterion_3() -> Verdict {
    let start = Instant::now();
    let lor = free_decay_gamma(&NoiseSpectrum::lorentzian(1.0, 0.2).unwrap(), DEFAULT_TOL)
        .unwrap()
        .value;
    let ohm = free_decay_gamma(&NoiseSpectrum::ohmic(1.0, 1.0).unwrap(), DEFAULT_TOL)
        .unwrap()
        .value;
    let lor_ref = 0.2 * PI * (-1.0f64).exp();
    let ohm_ref = 4.0 * cin_series(1.0) / 2.0;
    let t = start.elapsed();
    let (dl, dohm) = ((lor - lor_ref).abs(), (ohm - ohm_ref).abs());
    verdict(
        dl < 1e-9 && dohm < 1e-9 && t < Duration::from_secs(1),
        format!(
            "lorentzian {lor:.12} (err {dl:.1e}), ohmic {ohm:.12} (err {dohm:.1e}), {:.3}s",
            secs(t)
        ),
    )
}

/// Optimized rows of Tables I, II and V with at most 12 pulses.
fn criterion_4(table_one: &mut Vec<RowOutcome>) -> Verdict {
    let cfg = OptimizerConfig::default();
    let mut lines = Vec::new();
    let mut ok = true;
    let start = Instant::now();
    for table in [TableId::T1, TableId::T2, TableId::T5] {
        for row in table_rows(table) {
            if row.kind != RowKind::Optimized || row.total > 12 {
                continue;
            }
            let t0 = Instant::now();
            let o = run_row(&row, &cfg).unwrap();
            let budget = if row.total <= 8 { 600 } else { 3600 };
            let in_time = t0.elapsed() < Duration::from_secs(budget);
            println!("    {} [{:.1}s]", row_line(&o), secs(t0.elapsed()));
            if !(o.pass && in_time) {
                ok = false;
                lines.push(row_line(&o));
            }
            if table == TableId::T1 {
                table_one.push(o);
            }
        }
    }
    verdict(
        ok,
        format!(
            "{:.0}s; failing rows: {}",
            secs(start.elapsed()),
            if lines.is_empty() {
                "none".into()
            } else {
                lines.join("; ")
            }
        ),
    )
}

/// Adding the weak nonlocal spectrum to the local-only optimum.
fn criterion_5(table_one: &[RowOutcome]) -> Verdict {
    let local_only = match table_one.iter().find(|o| o.row == "no nonlocal noise") {
        Some(o) => o.clone(),
        None => {
            let row = table_rows(TableId::T1)
                .into_iter()
                .find(|r| r.preset == "t1_row5")
                .unwrap();
            run_row(&row, &OptimizerConfig::default()).unwrap()
        }
    };
    let seq = local_only.sequence().unwrap();
    let weak = SpectrumTriple::preset("t1_row3").unwrap();
    let g = gammas(&seq, &weak, DEFAULT_TOL).unwrap();
    let with_nonlocal = performance_phi(&g);
    let free3 = free_decay_gamma(&weak.s3, DEFAULT_TOL).unwrap().value;
    let base_ok = local_only.phi > 4e-11 && local_only.phi < 4e-9;
    let degraded_ok = (1e-5..4.43e-4).contains(&with_nonlocal);
    verdict(
        base_ok && degraded_ok,
        format!(
            "phi {:.3e} -> {:.3e} (table ~4e-10 -> 4.43e-5); gamma3 {:.3e}, free decay {:.3e}",
            local_only.phi, with_nonlocal, g.gamma3, free3
        ),
    )
}

fn random_sequence(rng: &mut ChaCha8Rng, max_len: usize) -> PulseSequence {
    let n = rng.gen_range(0..=max_len);
    let pulses = (0..n)
        .map(|_| {
            let q = if rng.gen_bool(0.5) {
                Qubit::Q1
            } else {
                Qubit::Q2
            };
            Pulse::new(rng.gen_range(0.02..0.98), q)
        })
        .collect();
    PulseSequence::new(pulses).unwrap()
}

/// Always-on invariants.
fn criterion_6() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut issues: Vec<String> = Vec::new();
    let spectra = SpectrumTriple::preset("t2_row1").unwrap();

    // Filter zero at the origin and coincident-pair cancellation.
    for _ in 0..100 {
        let mut times: Vec<f64> = (0..rng.gen_range(0..10))
            .map(|_| rng.gen_range(0.01..0.99))
            .collect();
        times.sort_by(f64::total_cmp);
        let base = FilterInput::new(times.clone()).unwrap();
        if filter_value(&base, 0.0).unwrap().norm() != 0.0 {
            issues.push("y(0) != 0".into());
        }
        let extra = rng.gen_range(0.01..0.99);
        let mut paired = times;
        paired.extend([extra, extra]);
        paired.sort_by(f64::total_cmp);
        let paired = FilterInput::new(paired).unwrap();
        let x = rng.gen_range(0.0..50.0);
        let (a, b) = (base.value(x), paired.value(x));
        if (a - b).norm() > 1e-12 * (1.0 + a.norm()) {
            issues.push(format!("coincident pair changed y at x={x}"));
        }
    }

    // Reflection invariance of the exponents.
    for _ in 0..50 {
        let seq = random_sequence(&mut rng, 6);
        let a = gammas(&seq, &spectra, DEFAULT_TOL).unwrap().as_array();
        let b = gammas(&seq.reflect(), &spectra, DEFAULT_TOL)
            .unwrap()
            .as_array();
        if a.iter().zip(&b).any(|(x, y)| (x - y).abs() > 1e-10) {
            issues.push(format!("reflection changed gammas {a:?} vs {b:?}"));
        }
    }

    // UDD suppression order.
    for n in 1..=5 {
        let input = FilterInput::from_extended(&udd_times_extended(n)).unwrap();
        let pts: Vec<(f64, f64)> = (0..=20)
            .map(|k| {
                let x = 1e-3 * 10f64.powf(k as f64 / 20.0);
                (x.ln(), input.sq(x).ln())
            })
            .collect();
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / 21.0;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / 21.0;
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        let expect = 2.0 * (n as f64 + 1.0);
        if (slope / expect - 1.0).abs() >= 0.01 {
            issues.push(format!("UDD({n}) slope {slope}"));
        }
    }

    // Gradient against central differences.
    let mut cases = 0;
    while cases < 100 {
        let seq = random_sequence(&mut rng, 4);
        let times = seq.times();
        if times.is_empty() || times.windows(2).any(|w| w[1] - w[0] < 1e-4) {
            continue;
        }
        cases += 1;
        let targets = seq.targets();
        let grad = phi_gradient(&seq, &spectra, DEFAULT_TOL).unwrap();
        let scale = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        for j in 0..times.len() {
            let h = 1e-6;
            let mut up = times.clone();
            let mut dn = times.clone();
            up[j] += h;
            dn[j] -= h;
            let phi = |t: &[f64]| {
                evaluate_layout(t, &targets, &spectra, DEFAULT_TOL, false)
                    .unwrap()
                    .phi
            };
            let fd = (phi(&up) - phi(&dn)) / (2.0 * h);
            if scale > 0.0 && (fd - grad[j]).abs() / scale >= 1e-4 {
                issues.push(format!("gradient {} vs fd {fd}", grad[j]));
            }
        }
    }

    // Averaged density matrix and Φ range.
    for _ in 0..100 {
        let raw: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        let amp = |i: usize| num_complex::Complex64::new(raw[2 * i] / norm, raw[2 * i + 1] / norm);
        let state = TwoQubitState::new(amp(0), amp(1), amp(2), amp(3)).unwrap();
        let g = GammaTriple::new(
            rng.gen_range(0.0..4.0),
            rng.gen_range(0.0..4.0),
            rng.gen_range(0.0..4.0),
        );
        let rho = evolve(&state, &g);
        let m = Matrix4::from_fn(|a, b| Complex::new(rho.get(a, b).re, rho.get(a, b).im));
        let herm = (m - m.adjoint()).norm() < 1e-14;
        let psd = m.symmetric_eigenvalues().iter().all(|&e| e >= -1e-12);
        let trace = (rho.trace() - num_complex::Complex64::new(1.0, 0.0)).norm() < 1e-12;
        if !(herm && psd && trace) {
            issues.push(format!("density matrix invariants failed for {g:?}"));
        }
        let phi = performance_phi(&g);
        if !(0.0..=3.0).contains(&phi) {
            issues.push(format!("phi {phi} out of range"));
        }
    }

    let t = start.elapsed();
    issues.truncate(5);
    verdict(
        issues.is_empty() && t < Duration::from_secs(30),
        format!("{:.2}s {}", secs(t), issues.join("; ")),
    )
}

/// Monte Carlo agreement on 20 random short sequences plus the negative
/// control.
fn criterion_7() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let presets = ["t2_row1", "t2_row2", "t1_row2", "t1_row3"];
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for k in 0..20 {
        let seq = random_sequence(&mut rng, 4);
        let spectra = SpectrumTriple::preset(presets[k % presets.len()]).unwrap();
        let cfg = MonteCarloConfig {
            seed: k as u64,
            ..MonteCarloConfig::default()
        };
        let r = match simulate_with(&seq, &spectra, &TwoQubitState::equal(), &cfg) {
            Ok(r) => r,
            Err(e) => {
                failures.push(format!("#{k} {e}"));
                continue;
            }
        };
        let cmp = compare(&gammas(&seq, &spectra, DEFAULT_TOL).unwrap(), &r.empirical);
        worst = worst.max(cmp.max_abs_z());
        if !cmp.pass {
            failures.push(format!("#{k} z={:?}", cmp.z));
        }
    }

    let seq =
        PulseSequence::new(vec![Pulse::new(0.3, Qubit::Q1), Pulse::new(0.7, Qubit::Q2)]).unwrap();
    let spectra = SpectrumTriple::preset("t2_row1").unwrap();
    let cfg = MonteCarloConfig {
        scale: NEGATIVE_CONTROL_SCALE,
        ..MonteCarloConfig::default()
    };
    let r = simulate_with(&seq, &spectra, &TwoQubitState::equal(), &cfg).unwrap();
    let control = compare(&gammas(&seq, &spectra, DEFAULT_TOL).unwrap(), &r.empirical).max_abs_z();

    let t = start.elapsed();
    verdict(
        failures.is_empty() && control > 3.0 && t < Duration::from_secs(600),
        format!(
            "max |z| {worst:.2} over 20 sequences, negative control |z| {control:.1}, {:.1}s {}",
            secs(t),
            failures.join("; ")
        ),
    )
}

/// Ordering violations at 24 pulses surface and stay off the leaderboard.
fn criterion_8() -> Verdict {
    let start = Instant::now();
    let cfg = OptimizerConfig::default();
    let spectra = SpectrumTriple::preset("t6_row1").unwrap();
    let s = search_allocations(24, 1, &spectra, &cfg).unwrap();
    let flagged: Vec<_> = s
        .results
        .iter()
        .flat_map(|r| r.starts.iter().map(move |st| (r, st)))
        .filter(|(_, st)| st.converged && !st.ordering_valid)
        .collect();
    let leaderboard_clean = s
        .leaderboard
        .iter()
        .all(|r| r.ordering_valid && ordering_valid(&r.times, cfg.min_time_gap));
    // The reported result of an allocation with a flagged descent is never
    // that descent's endpoint, even when the endpoint had lower Φ.
    let excluded = flagged
        .iter()
        .all(|(r, _)| r.ordering_valid && ordering_valid(&r.times, cfg.min_time_gap));
    let lower = flagged.iter().filter(|(r, st)| st.phi < r.phi).count();
    let ok = !flagged.is_empty() && leaderboard_clean && excluded;
    verdict(
        ok,
        format!(
            "{} converged descents with broken ordering over {} allocations ({lower} below the reported phi), \
             all excluded: {excluded}, leaderboard valid: {leaderboard_clean}, {:.1}s",
            flagged.len(),
            s.results.len(),
            secs(start.elapsed())
        ),
    )
}

type Check = Box<dyn FnOnce(&mut Vec<RowOutcome>) -> Verdict>;

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let mut table_one = Vec::new();
    let checks: Vec<(usize, &str, Check)> = vec![
        (1, "nested-UDD rows", Box::new(|_| criterion_1())),
        (2, "asymmetric nested-UDD", Box::new(|_| criterion_2())),
        (3, "free-decay closed forms", Box::new(|_| criterion_3())),
        (4, "optimized rows", Box::new(criterion_4)),
        (
            5,
            "nonlocal-noise sensitivity",
            Box::new(|t1| criterion_5(t1)),
        ),
        (6, "property suites", Box::new(|_| criterion_6())),
        (7, "Monte Carlo agreement", Box::new(|_| criterion_7())),
        (8, "ordering pathology", Box::new(|_| criterion_8())),
    ];
    let mut results = Vec::new();
    for (n, name, check) in checks {
        let v = check(&mut table_one);
        println!(
            "criterion {n} ({name}): {} | {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        results.push((n, v.pass));
    }
    let failed: Vec<usize> = results.iter().filter(|r| !r.1).map(|r| r.0).collect();
    println!(
        "acceptance: {}/{} criteria passed{}",
        results.len() - failed.len(),
        results.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!("; failed {failed:?}")
        }
    );
    let strict = std::env::var("DDOPT_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if failed.is_empty() || !strict {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
