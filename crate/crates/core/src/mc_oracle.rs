// Copyright 2026 ddopt Contributors
// SPDX-License-Identifier: Apache-2.0

//! Monte Carlo check of the analytic decay exponents.
//!
//! Each noise source is synthesized as a finite sum of random-phase
//! sinusoids,
//!
//! ```text
//! f(t) = Σ_k σ_k [a_k cos(ω_k t) + b_k sin(ω_k t)],   a_k, b_k ~ N(0, 1)
//! ```
//!
//! with `ω_k` the Gauss-Kronrod nodes of panels covering the spectrum's
//! support and `σ_k² = scale · S(ω_k) · w_k`. The covariance of the process
//! is then the quadrature of `scale ∫ S(ω) cos(ωτ) dω`. With
//! `Γ_i = ∫ |y|² S_i / ω² dω` and coherences damped as `e^{-Γa-Γb}`, the
//! matching scale is [`ORACLE_SCALE`] `= 1/2`, since the switched phase
//! `F̃ = ∫ f s dt` must satisfy `2⟨F̃²⟩ = Γ`.
//!
//! The switched integral uses the trapezoid rule on a uniform grid, with
//! each panel split at the flip times and `f` at a flip taken from the
//! linear interpolant. Because the rule is linear in `f`, the simulation
//! folds it into per-mode weights once per sequence and draws only the
//! mode amplitudes per trajectory.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decoherence::{
    damping_pair, performance_phi, AveragedDensityMatrix, GammaTriple, TwoQubitState,
};
use crate::error::{Error, Result};
use crate::quadrature::{abscissae, partition, unit_weights, NODES};
use crate::sequences::PulseSequence;
use crate::spectra::{NoiseSpectrum, SpectrumTriple};

/// Covariance scale that makes the synthesized process consistent with the
/// analytic exponents.
pub const ORACLE_SCALE: f64 = 0.5;

/// Scale of the uncorrected `1/π` Fourier convention, used as a negative
/// control.
pub const NEGATIVE_CONTROL_SCALE: f64 = std::f64::consts::FRAC_1_PI;

pub const DEFAULT_GRID_STEP: f64 = 1e-3;

/// Frequencies are truncated at `MAX_PHASE_PER_STEP / h`, which keeps the
/// trapezoid error per mode near `(ωh)² / 12`.
pub const MAX_PHASE_PER_STEP: f64 = 0.1;

/// Width of the frequency panels carrying the modes.
pub const MODE_PANEL_WIDTH: f64 = 0.5;

pub const DEFAULT_BOOTSTRAP: usize = 200;

/// `|z|` above which a component fails [`compare`].
pub const Z_LIMIT: f64 = 3.0;

/// Sinusoidal modes of one synthesized process.
#[derive(Debug, Clone, PartialEq)]
pub struct Modes {
    frequencies: Vec<f64>,
    sigmas: Vec<f64>,
}

impl Modes {
    /// Modes for `spec` on a grid of step `grid_step`.
    pub fn new(spec: &NoiseSpectrum, scale: f64, grid_step: f64) -> Result<Self> {
        check_step(grid_step)?;
        if !(scale >= 0.0 && scale.is_finite()) {
            return Err(Error::input(format!(
                "covariance scale must be finite and >= 0, got {scale}"
            )));
        }
        if spec.is_zero() || scale == 0.0 {
            return Ok(Modes {
                frequencies: Vec::new(),
                sigmas: Vec::new(),
            });
        }
        let p = spec.low_frequency_exponent();
        if p <= -1.0 {
            return Err(Error::input(format!(
                "spectrum with low-frequency exponent {p} has no finite-variance stationary process"
            )));
        }
        let nyquist_cap = MAX_PHASE_PER_STEP / grid_step;
        let top = match spec.cutoff() {
            Some(c) => c.min(nyquist_cap),
            None => spec.integration_limit(0)?.min(nyquist_cap),
        };
        let mut panels = partition(0.0, top, MODE_PANEL_WIDTH);
        if p.fract() != 0.0 || p < 0.0 {
            // Grade the first panel towards the ω = 0 singularity.
            let (_, b) = panels[0];
            let mut graded: Vec<(f64, f64)> = (0..16)
                .map(|j| (b * 0.5f64.powi(j + 1), b * 0.5f64.powi(j)))
                .collect();
            graded.push((0.0, b * 0.5f64.powi(16)));
            graded.reverse();
            panels.splice(0..1, graded);
        }
        let w = unit_weights();
        let mut frequencies = Vec::with_capacity(panels.len() * NODES);
        let mut sigmas = Vec::with_capacity(panels.len() * NODES);
        for (a, b) in panels {
            let half = 0.5 * (b - a);
            for (x, wk) in abscissae(a, b).iter().zip(w) {
                let s = scale * spec.value(*x) * wk * half;
                if s > 0.0 {
                    frequencies.push(*x);
                    sigmas.push(s.sqrt());
                }
            }
        }
        Ok(Modes {
            frequencies,
            sigmas,
        })
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    /// Covariance of the synthesized process at lag `tau`.
    pub fn covariance(&self, tau: f64) -> f64 {
        self.frequencies
            .iter()
            .zip(&self.sigmas)
            .map(|(w, s)| s * s * (w * tau).cos())
            .sum()
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
        self.sigmas
            .iter()
            .map(|s| {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                (s * a, s * b)
            })
            .collect()
    }
}

fn check_step(h: f64) -> Result<()> {
    if h > 0.0 && h <= 0.1 {
        Ok(())
    } else {
        Err(Error::input(format!(
            "grid step must be in (0, 0.1], got {h}"
        )))
    }
}

/// Number of grid intervals on `[0, 1]` for a requested step.
fn intervals(h: f64) -> usize {
    (1.0 / h).round().max(1.0) as usize
}

/// One realization of a noise process sampled on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseTrajectory {
    /// Actual grid step, `1 / round(1 / h)`.
    pub step: f64,
    /// `f(n · step)` for `n = 0..=1/step`.
    pub values: Vec<f64>,
}

impl NoiseTrajectory {
    pub fn times(&self) -> Vec<f64> {
        (0..self.values.len())
            .map(|n| n as f64 * self.step)
            .collect()
    }

    /// `∫_0^1 f(t) s(t) dt` where `s` starts at `+1` and flips at `flips`.
    pub fn switched_integral(&self, flips: &[f64]) -> f64 {
        let w = switched_weights(self.values.len() - 1, flips);
        w.iter().zip(&self.values).map(|(a, b)| a * b).sum()
    }

    /// `F(t_n) = ∫_0^{t_n} f dt`, unswitched, by the trapezoid rule.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.values.len());
        out.push(0.0);
        for w in self.values.windows(2) {
            acc += 0.5 * self.step * (w[0] + w[1]);
            out.push(acc);
        }
        out
    }
}

/// Trapezoid weights `W_n` with `∫ f s dt ≈ Σ W_n f(t_n)` on `intervals`
/// uniform panels, splitting panels at the flip times.
pub fn switched_weights(intervals: usize, flips: &[f64]) -> Vec<f64> {
    let h = 1.0 / intervals as f64;
    let mut flips: Vec<f64> = flips.to_vec();
    flips.sort_by(f64::total_cmp);
    let mut w = vec![0.0; intervals + 1];
    let mut sign = 1.0;
    let mut next = 0;
    for n in 0..intervals {
        let t0 = n as f64 * h;
        let last = n + 1 == intervals;
        let t1 = if last { 1.0 } else { (n + 1) as f64 * h };
        let mut piece = |u: f64, v: f64, sign: f64| {
            let (lu, lv) = ((u - t0) / h, (v - t0) / h);
            w[n] += sign * (v - u) * ((1.0 - lu) + (1.0 - lv)) * 0.5;
            w[n + 1] += sign * (v - u) * (lu + lv) * 0.5;
        };
        let mut u = t0;
        while next < flips.len() && (flips[next] < t1 || last) {
            let cut = flips[next].clamp(u, t1);
            piece(u, cut, sign);
            u = cut;
            sign = -sign;
            next += 1;
        }
        piece(u, t1, sign);
    }
    w
}

/// Draw one realization of `spec` on a grid of step `grid_step`.
pub fn synthesize(spec: &NoiseSpectrum, grid_step: f64, seed: u64) -> Result<NoiseTrajectory> {
    synthesize_scaled(spec, grid_step, seed, ORACLE_SCALE)
}

/// [`synthesize`] with an explicit covariance scale.
pub fn synthesize_scaled(
    spec: &NoiseSpectrum,
    grid_step: f64,
    seed: u64,
    scale: f64,
) -> Result<NoiseTrajectory> {
    let modes = Modes::new(spec, scale, grid_step)?;
    let g = intervals(grid_step);
    let step = 1.0 / g as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps = modes.draw(&mut rng);
    let values = (0..=g)
        .map(|n| {
            let t = n as f64 * step;
            modes
                .frequencies
                .iter()
                .zip(&amps)
                .map(|(w, (a, b))| {
                    let (s, c) = (w * t).sin_cos();
                    a * c + b * s
                })
                .sum()
        })
        .collect();
    Ok(NoiseTrajectory { step, values })
}

/// Settings of [`simulate_with`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub trajectories: usize,
    pub grid_step: f64,
    pub seed: u64,
    pub scale: f64,
    pub bootstrap: usize,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        MonteCarloConfig {
            trajectories: 10_000,
            grid_step: DEFAULT_GRID_STEP,
            seed: 0,
            scale: ORACLE_SCALE,
            bootstrap: DEFAULT_BOOTSTRAP,
        }
    }
}

/// Exponent estimates from the simulated coherences.
///
/// Pairs are indexed `[Γ1+Γ2, Γ1+Γ3, Γ2+Γ3]`. A component is `None` when
/// the initial state has no coherence that resolves it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalGammas {
    pub values: [Option<f64>; 3],
    pub errors: [Option<f64>; 3],
    pub pair_sums: [Option<f64>; 3],
}

impl EmpiricalGammas {
    /// All three exponents, when available.
    pub fn triple(&self) -> Option<GammaTriple> {
        match self.values {
            [Some(a), Some(b), Some(c)] => Some(GammaTriple::new(a, b, c)),
            _ => None,
        }
    }

    /// Φ from the empirical exponents, when all three are available.
    pub fn phi(&self) -> Option<f64> {
        self.triple().map(|g| performance_phi(&g))
    }
}

/// Output of [`simulate`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub trajectories: usize,
    pub grid_step: f64,
    pub scale: f64,
    /// Trajectory average of `conj(ψ_a(t)) ψ_b(t)`.
    pub density: AveragedDensityMatrix,
    pub empirical: EmpiricalGammas,
}

/// Switched phases `(F̃1, F̃2, F̃3)` of every trajectory.
pub fn sample_phases(
    seq: &PulseSequence,
    spectra: &SpectrumTriple,
    cfg: &MonteCarloConfig,
) -> Result<Vec<[f64; 3]>> {
    check_step(cfg.grid_step)?;
    let g = intervals(cfg.grid_step);
    let step = 1.0 / g as f64;
    let proj = seq.projections();
    let flips = [&proj.q1, &proj.q2, &proj.all];
    let specs = [&spectra.s1, &spectra.s2, &spectra.s3];
    let mut banks = Vec::with_capacity(3);
    for i in 0..3 {
        let modes = Modes::new(specs[i], cfg.scale, cfg.grid_step)?;
        let w = switched_weights(g, flips[i]);
        // Per-mode weights of the switched trapezoid rule.
        let (cw, sw): (Vec<f64>, Vec<f64>) = modes
            .frequencies
            .iter()
            .map(|&om| {
                let (mut c, mut s) = (0.0, 0.0);
                for (n, wn) in w.iter().enumerate() {
                    let (sn, cn) = (om * n as f64 * step).sin_cos();
                    c += wn * cn;
                    s += wn * sn;
                }
                (c, s)
            })
            .unzip();
        banks.push((modes, cw, sw));
    }
    let seed = cfg.seed;
    Ok((0..cfg.trajectories)
        .into_par_iter()
        .map(|n| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(n as u64);
            let mut out = [0.0; 3];
            for (i, (modes, cw, sw)) in banks.iter().enumerate() {
                let amps = modes.draw(&mut rng);
                out[i] = amps
                    .iter()
                    .zip(cw.iter().zip(sw))
                    .map(|((a, b), (c, s))| a * c + b * s)
                    .sum();
            }
            out
        })
        .collect())
}

/// Phase `φ_a = z1 F̃1 + z2 F̃2 + z1 z2 F̃3` of basis state `a` (`|00>` = 0).
fn basis_phase(a: usize, f: &[f64; 3]) -> f64 {
    let z1 = if a < 2 { 1.0 } else { -1.0 };
    let z2 = if a.is_multiple_of(2) { 1.0 } else { -1.0 };
    z1 * f[0] + z2 * f[1] + z1 * z2 * f[2]
}

/// Simulate `trajectories` noise histories with the oracle scale.
pub fn simulate(
    seq: &PulseSequence,
    spectra: &SpectrumTriple,
    trajectories: usize,
    grid_step: f64,
    state: &TwoQubitState,
    seed: u64,
) -> Result<SimulationReport> {
    let cfg = MonteCarloConfig {
        trajectories,
        grid_step,
        seed,
        ..MonteCarloConfig::default()
    };
    simulate_with(seq, spectra, state, &cfg)
}

pub fn simulate_with(
    seq: &PulseSequence,
    spectra: &SpectrumTriple,
    state: &TwoQubitState,
    cfg: &MonteCarloConfig,
) -> Result<SimulationReport> {
    if cfg.trajectories < 100 {
        return Err(Error::input(format!(
            "need at least 100 trajectories, got {}",
            cfg.trajectories
        )));
    }
    let phases = sample_phases(seq, spectra, cfg)?;
    let n = phases.len() as f64;
    let psi = state.amplitudes();

    // Mean of e^{i(φa-φb)}, with the real part kept as 1 - mean(2 sin²(Δ/2)).
    let mut density = [[Complex64::new(0.0, 0.0); 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            let base = psi[a].conj() * psi[b];
            if a == b {
                density[a][b] = base;
                continue;
            }
            let (mut dsum, mut ssum) = (0.0, 0.0);
            for f in &phases {
                let d = basis_phase(a, f) - basis_phase(b, f);
                let h = (0.5 * d).sin();
                dsum += 2.0 * h * h;
                ssum += d.sin();
            }
            density[a][b] = base * Complex64::new(1.0 - dsum / n, ssum / n);
        }
    }

    // For each exponent pair, the coherence with the largest initial weight.
    let mut losses: [Option<Vec<f64>>; 3] = [None, None, None];
    for (k, slot) in losses.iter_mut().enumerate() {
        let want = [(0, 1), (0, 2), (1, 2)][k];
        let best = (0..4)
            .flat_map(|a| ((a + 1)..4).map(move |b| (a, b)))
            .filter(|&(a, b)| damping_pair(a, b) == Some(want))
            .map(|(a, b)| (a, b, (psi[a].conj() * psi[b]).norm()))
            .max_by(|x, y| x.2.total_cmp(&y.2))
            .expect("two elements per pair");
        if best.2 > 1e-14 {
            let (a, b) = (best.0, best.1);
            *slot = Some(
                phases
                    .iter()
                    .map(|f| {
                        let h = (0.5 * (basis_phase(a, f) - basis_phase(b, f))).sin();
                        2.0 * h * h
                    })
                    .collect(),
            );
        }
    }

    let full: Vec<usize> = (0..phases.len()).collect();
    let point = estimate(&losses, &full)?;
    let mut errors = [None; 3];
    if cfg.bootstrap >= 2 {
        let boots: Vec<[Option<f64>; 3]> = (0..cfg.bootstrap)
            .into_par_iter()
            .map(|b| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
                rng.set_stream(b as u64);
                let idx: Vec<usize> = (0..phases.len())
                    .map(|_| rng.gen_range(0..phases.len()))
                    .collect();
                estimate(&losses, &idx).map(|e| e.0).unwrap_or([None; 3])
            })
            .collect();
        for i in 0..3 {
            if point.0[i].is_none() {
                continue;
            }
            let xs: Vec<f64> = boots.iter().filter_map(|v| v[i]).collect();
            if xs.len() >= 2 {
                let m = xs.iter().sum::<f64>() / xs.len() as f64;
                let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
                errors[i] = Some(v.sqrt());
            }
        }
    }
    Ok(SimulationReport {
        trajectories: cfg.trajectories,
        grid_step: cfg.grid_step,
        scale: cfg.scale,
        density: AveragedDensityMatrix { data: density },
        empirical: EmpiricalGammas {
            values: point.0,
            errors,
            pair_sums: point.1,
        },
    })
}

/// Bias-corrected `P = -ln c - var / (2 N c²)` per pair, then the three
/// exponents, over the trajectories listed in `idx`.
#[allow(clippy::type_complexity)]
fn estimate(
    losses: &[Option<Vec<f64>>; 3],
    idx: &[usize],
) -> Result<([Option<f64>; 3], [Option<f64>; 3])> {
    let n = idx.len() as f64;
    let mut pairs = [None; 3];
    for (k, l) in losses.iter().enumerate() {
        let Some(l) = l else { continue };
        let mean = idx.iter().map(|&i| l[i]).sum::<f64>() / n;
        let var = idx.iter().map(|&i| (l[i] - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let c = 1.0 - mean;
        if !(c > 0.0) {
            return Err(Error::Numeric {
                message:
                    "mean coherence is not positive; decay too strong for this trajectory count"
                        .into(),
                estimate: c,
                achieved_error: (var / n).sqrt(),
            });
        }
        pairs[k] = Some(-(-mean).ln_1p() - var / (2.0 * n * c * c));
    }
    let gammas = match pairs {
        [Some(p12), Some(p13), Some(p23)] => [
            Some(0.5 * (p12 + p13 - p23)),
            Some(0.5 * (p12 + p23 - p13)),
            Some(0.5 * (p13 + p23 - p12)),
        ],
        _ => [None; 3],
    };
    Ok((gammas, pairs))
}

/// z-scores of the empirical exponents against analytic values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub analytic: [f64; 3],
    pub empirical: [Option<f64>; 3],
    pub errors: [Option<f64>; 3],
    pub z: [Option<f64>; 3],
    /// Every available `|z| <= Z_LIMIT`, and at least one available.
    pub pass: bool,
}

impl Comparison {
    pub fn max_abs_z(&self) -> f64 {
        self.z.iter().flatten().fold(0.0, |m, z| m.max(z.abs()))
    }
}

pub fn compare(analytic: &GammaTriple, empirical: &EmpiricalGammas) -> Comparison {
    let a = analytic.as_array();
    let mut z = [None; 3];
    for i in 0..3 {
        if let (Some(e), Some(s)) = (empirical.values[i], empirical.errors[i]) {
            let diff = e - a[i];
            z[i] = Some(if diff == 0.0 {
                0.0
            } else if s > 0.0 {
                diff / s
            } else {
                diff.signum() * f64::INFINITY
            });
        }
    }
    let pass = z.iter().any(Option::is_some) && z.iter().flatten().all(|v| v.abs() <= Z_LIMIT);
    Comparison {
        analytic: a,
        empirical: empirical.values,
        errors: empirical.errors,
        z,
        pass,
    }
}

/// Exponents of the discretized process itself, `2 Var(F̃_i)`, at step `h`
/// and `h/2`, with the Richardson extrapolation `(4 Γ(h/2) - Γ(h)) / 3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCheck {
    pub coarse: [f64; 3],
    pub fine: [f64; 3],
    pub extrapolated: [f64; 3],
    /// `|fine - coarse| / max(|fine|, tiny)` per component.
    pub relative_change: [f64; 3],
}

pub fn grid_check(
    seq: &PulseSequence,
    spectra: &SpectrumTriple,
    grid_step: f64,
    scale: f64,
) -> Result<GridCheck> {
    let coarse = process_gammas(seq, spectra, grid_step, scale)?;
    let fine = process_gammas(seq, spectra, 0.5 * grid_step, scale)?;
    let mut extrapolated = [0.0; 3];
    let mut relative_change = [0.0; 3];
    for i in 0..3 {
        extrapolated[i] = (4.0 * fine[i] - coarse[i]) / 3.0;
        relative_change[i] = (fine[i] - coarse[i]).abs() / fine[i].abs().max(f64::MIN_POSITIVE);
    }
    Ok(GridCheck {
        coarse,
        fine,
        extrapolated,
        relative_change,
    })
}

/// `2 Var(F̃_i) = 2 Σ_k σ_k² (C_k² + S_k²)` for the discretized process.
pub fn process_gammas(
    seq: &PulseSequence,
    spectra: &SpectrumTriple,
    grid_step: f64,
    scale: f64,
) -> Result<[f64; 3]> {
    check_step(grid_step)?;
    let g = intervals(grid_step);
    let step = 1.0 / g as f64;
    let proj = seq.projections();
    let flips = [&proj.q1, &proj.q2, &proj.all];
    let specs = [&spectra.s1, &spectra.s2, &spectra.s3];
    let mut out = [0.0; 3];
    for i in 0..3 {
        let modes = Modes::new(specs[i], scale, grid_step)?;
        let w = switched_weights(g, flips[i]);
        out[i] = 2.0
            * modes
                .frequencies
                .iter()
                .zip(&modes.sigmas)
                .map(|(&om, s)| {
                    let (mut c, mut sn) = (0.0, 0.0);
                    for (n, wn) in w.iter().enumerate() {
                        let (a, b) = (om * n as f64 * step).sin_cos();
                        c += wn * b;
                        sn += wn * a;
                    }
                    s * s * (c * c + sn * sn)
                })
                .sum::<f64>();
    }
    Ok(out)
}
