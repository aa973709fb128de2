// Copyright 2026 ddopt Contributors
// SPDX-License-Identifier: Apache-2.0

//! Decay exponents, the noise-averaged density matrix and the performance
//! function Φ.

use std::collections::HashMap;
use std::sync::Mutex;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{FilterInput, SERIES_LIMIT};
use crate::quadrature::{self, PanelEstimate, Tolerance, NODES};
use crate::sequences::{PulseSequence, Qubit};
use crate::spectra::{NoiseSpectrum, SpectrumTriple};

/// Default absolute tolerance per decay exponent.
pub const DEFAULT_TOL: f64 = 1e-13;

/// Relative accuracy floor: exponents of order one cannot be summed to an
/// absolute `1e-13` in double precision.
pub const RELATIVE_FLOOR: f64 = 1e-12;

/// Width of the initial panels below [`WIDE_PANELS_FROM`].
const NARROW_WIDTH: f64 = std::f64::consts::FRAC_PI_4;
/// Width of the initial panels in the far tail.
const WIDE_WIDTH: f64 = 2.0 * std::f64::consts::PI;
const WIDE_PANELS_FROM: f64 = 64.0;
/// Panels advanced by phasor recurrence between exact resyncs.
const RESYNC_EVERY: usize = 32;
/// Bisections allowed on top of the initial partition.
const EXTRA_PANELS: usize = 4000;

/// A decay exponent and its quadrature error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaEstimate {
    pub value: f64,
    pub error: f64,
}

/// The three decay exponents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaTriple {
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    /// Quadrature error estimates, in the same order.
    pub errors: [f64; 3],
}

impl GammaTriple {
    /// Exact exponents with no error attached.
    pub fn new(gamma1: f64, gamma2: f64, gamma3: f64) -> Self {
        GammaTriple {
            gamma1,
            gamma2,
            gamma3,
            errors: [0.0; 3],
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.gamma1, self.gamma2, self.gamma3]
    }
}

struct GammaPanel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    grad: Vec<f64>,
}

impl PanelEstimate for GammaPanel {
    fn bounds(&self) -> (f64, f64) {
        (self.a, self.b)
    }
    fn value(&self) -> f64 {
        self.value
    }
    fn error(&self) -> f64 {
        self.error
    }
}

/// Value and gradient of one exponent.
#[derive(Debug, Clone)]
pub struct GammaWithGradient {
    pub value: f64,
    pub error: f64,
    /// `∂Γ/∂δ_j` in the order of the filter times.
    pub gradient: Vec<f64>,
}

/// Evaluates panels of `∫ |y|² S / ω²` for one filter input.
struct Engine<'a> {
    input: &'a FilterInput,
    spec: &'a NoiseSpectrum,
    with_gradient: bool,
    /// Flip times followed by the end time 1.
    t: Vec<f64>,
    /// Matching weights.
    c: Vec<f64>,
    offsets: [f64; NODES],
}

impl<'a> Engine<'a> {
    fn new(input: &'a FilterInput, spec: &'a NoiseSpectrum, with_gradient: bool) -> Self {
        let mut t = input.times().to_vec();
        let mut c: Vec<f64> = (0..t.len()).map(FilterInput::coefficient).collect();
        t.push(1.0);
        c.push(input.end_coefficient());
        Engine {
            input,
            spec,
            with_gradient,
            t,
            c,
            offsets: quadrature::unit_offsets(),
        }
    }

    /// `count` consecutive panels of width `width` starting at `start`.
    fn run(&self, start: f64, width: f64, count: usize, out: &mut Vec<GammaPanel>) {
        let nt = self.t.len();
        let m = self.input.len();
        let h = 0.5 * width;
        let mut z = vec![Complex64::new(0.0, 0.0); NODES * nt];
        let ratio: Vec<Complex64> = self
            .t
            .iter()
            .map(|&t| Complex64::from_polar(1.0, width * t))
            .collect();
        let mut f = [0.0; NODES];
        let mut g = vec![0.0; NODES * m];
        for p in 0..count {
            let a = start + width * p as f64;
            let b = if p + 1 == count {
                start + width * count as f64
            } else {
                a + width
            };
            let c = a + h;
            if p % RESYNC_EVERY == 0 {
                for k in 0..NODES {
                    let x = c + h * self.offsets[k];
                    for (j, &t) in self.t.iter().enumerate() {
                        let (s, co) = (x * t).sin_cos();
                        z[k * nt + j] = Complex64::new(co, s);
                    }
                }
            } else {
                for k in 0..NODES {
                    for j in 0..nt {
                        z[k * nt + j] *= ratio[j];
                    }
                }
            }
            for k in 0..NODES {
                let x = c + h * self.offsets[k];
                let s = self.spec.value(x);
                if s == 0.0 {
                    f[k] = 0.0;
                    if self.with_gradient {
                        g[k * m..(k + 1) * m].iter_mut().for_each(|v| *v = 0.0);
                    }
                    continue;
                }
                let zk = &z[k * nt..(k + 1) * nt];
                let y = if x < SERIES_LIMIT {
                    self.input.value_series(x)
                } else {
                    let mut y = Complex64::new(1.0, 0.0);
                    for (zj, &cj) in zk.iter().zip(&self.c) {
                        y += zj * cj;
                    }
                    y
                };
                let w = s / (x * x);
                f[k] = y.norm_sqr() * w;
                if self.with_gradient {
                    let yc = y.conj();
                    let gw = -2.0 * x * w;
                    for j in 0..m {
                        g[k * m + j] = gw * self.c[j] * (yc * zk[j]).im;
                    }
                }
            }
            out.push(self.combine(a, b, &f, &g));
        }
    }

    fn combine(&self, a: f64, b: f64, f: &[f64; NODES], g: &[f64]) -> GammaPanel {
        let panel = quadrature::combine(a, b, f);
        let m = self.input.len();
        let mut grad = Vec::new();
        if self.with_gradient {
            let h = 0.5 * (b - a);
            let weights = quadrature::unit_weights();
            grad = vec![0.0; m];
            for (k, w) in weights.iter().enumerate() {
                for j in 0..m {
                    grad[j] += w * g[k * m + j];
                }
            }
            grad.iter_mut().for_each(|v| *v *= h);
        }
        GammaPanel {
            a,
            b,
            value: panel.value,
            error: panel.error,
            grad,
        }
    }

    fn single(&self, a: f64, b: f64) -> GammaPanel {
        let mut out = Vec::with_capacity(1);
        self.run(a, b - a, 1, &mut out);
        let mut p = out.pop().expect("one panel");
        p.b = b;
        p
    }
}

/// `Γ = ∫_0^Ω |y(ω)|² S(ω) / ω² dω` with its gradient in the filter times.
///
/// `Ω` is the hard cutoff or the certified truncation frequency. When
/// `S ~ ω^p` with `p <= -1` and the first moment of the switch function is
/// nonzero the integral diverges and `Γ = +∞` is returned.
pub fn gamma_with_gradient(
    input: &FilterInput,
    spec: &NoiseSpectrum,
    tol: f64,
    with_gradient: bool,
) -> Result<GammaWithGradient> {
    if !(tol > 0.0) {
        return Err(Error::input("tolerance must be positive"));
    }
    let m = input.len();
    let zeros = || {
        if with_gradient {
            vec![0.0; m]
        } else {
            Vec::new()
        }
    };
    if spec.is_zero() {
        return Ok(GammaWithGradient {
            value: 0.0,
            error: 0.0,
            gradient: zeros(),
        });
    }
    if spec.low_frequency_exponent() <= -1.0 && input.moments()[0].abs() > 1e-12 {
        return Ok(GammaWithGradient {
            value: f64::INFINITY,
            error: 0.0,
            gradient: zeros(),
        });
    }
    let omega = spec.integration_limit(m)?;
    let engine = Engine::new(input, spec, with_gradient);
    let mut panels = Vec::new();
    let narrow_end = omega.min(WIDE_PANELS_FROM);
    let n1 = (narrow_end / NARROW_WIDTH).ceil().max(1.0) as usize;
    engine.run(0.0, narrow_end / n1 as f64, n1, &mut panels);
    if let Some(last) = panels.last_mut() {
        last.b = narrow_end;
    }
    if omega > narrow_end {
        let n2 = ((omega - narrow_end) / WIDE_WIDTH).ceil().max(1.0) as usize;
        engine.run(
            narrow_end,
            (omega - narrow_end) / n2 as f64,
            n2,
            &mut panels,
        );
        if let Some(last) = panels.last_mut() {
            last.b = omega;
        }
    }
    let budget = panels.len() + EXTRA_PANELS;
    let tolerance = Tolerance {
        abs: tol,
        rel: RELATIVE_FLOOR,
    };
    let refined = quadrature::refine(panels, tolerance, budget, |a, b| engine.single(a, b));
    if !refined.converged {
        return Err(Error::Numeric {
            message: format!(
                "decay exponent for {m} flips did not reach tolerance {tol:e} within {budget} panels"
            ),
            estimate: refined.value,
            achieved_error: refined.error,
        });
    }
    let mut gradient = zeros();
    if with_gradient {
        for p in &refined.panels {
            for (g, v) in gradient.iter_mut().zip(&p.grad) {
                *g += v;
            }
        }
    }
    Ok(GammaWithGradient {
        value: refined.value.max(0.0),
        error: refined.error,
        gradient,
    })
}

/// `Γ = ∫ |y(ω)|² S(ω) / ω² dω` to absolute tolerance `tol` (or the
/// relative floor for large exponents).
pub fn gamma(input: &FilterInput, spec: &NoiseSpectrum, tol: f64) -> Result<GammaEstimate> {
    let g = gamma_with_gradient(input, spec, tol, false)?;
    Ok(GammaEstimate {
        value: g.value,
        error: g.error,
    })
}

/// Free-decay exponent `4 ∫ S(ω) sin²(ω/2) / ω² dω`.
pub fn free_decay_gamma(spec: &NoiseSpectrum, tol: f64) -> Result<GammaEstimate> {
    gamma(&FilterInput::empty(), spec, tol)
}

/// The three exponents of a pulse sequence.
pub fn gammas(seq: &PulseSequence, spectra: &SpectrumTriple, tol: f64) -> Result<GammaTriple> {
    let p = seq.projections();
    let g1 = gamma(&FilterInput::new(p.q1)?, &spectra.s1, tol)?;
    let g2 = gamma(&FilterInput::new(p.q2)?, &spectra.s2, tol)?;
    let g3 = gamma(&FilterInput::new(p.all)?, &spectra.s3, tol)?;
    Ok(GammaTriple {
        gamma1: g1.value,
        gamma2: g2.value,
        gamma3: g3.value,
        errors: [g1.error, g2.error, g3.error],
    })
}

#[inline]
fn survival(a: f64, b: f64) -> f64 {
    (-(a + b)).exp()
}

/// `Φ = 3 - (e^{-Γ1-Γ2} + e^{-Γ1-Γ3} + e^{-Γ2-Γ3})`.
///
/// Evaluated as `-Σ expm1(-Γa-Γb)` so that small Φ keeps full relative
/// precision.
pub fn performance_phi(g: &GammaTriple) -> f64 {
    let (a, b, c) = (g.gamma1, g.gamma2, g.gamma3);
    -((-(a + b)).exp_m1() + (-(a + c)).exp_m1() + (-(b + c)).exp_m1())
}

/// State-averaged trace fidelity, `1 - Φ/4`.
pub fn mean_fidelity(g: &GammaTriple) -> f64 {
    1.0 - performance_phi(g) / 4.0
}

/// Φ and its gradient for pulses given per ordinal.
#[derive(Debug, Clone)]
pub struct PhiEvaluation {
    pub gammas: GammaTriple,
    pub phi: f64,
    /// `∂Φ/∂t_k` per ordinal; empty unless requested.
    pub gradient: Vec<f64>,
}

/// Evaluate Φ for a pulse train given as per-ordinal times and targets.
///
/// Times need not be sorted: each switch function flips at its pulses in
/// ordinal order, which is how the optimizer moves pulses past each other.
pub fn evaluate_layout(
    times: &[f64],
    targets: &[Qubit],
    spectra: &SpectrumTriple,
    tol: f64,
    with_gradient: bool,
) -> Result<PhiEvaluation> {
    if times.len() != targets.len() {
        return Err(Error::input("times and targets differ in length"));
    }
    let idx1: Vec<usize> = (0..times.len())
        .filter(|&k| targets[k] == Qubit::Q1)
        .collect();
    let idx2: Vec<usize> = (0..times.len())
        .filter(|&k| targets[k] == Qubit::Q2)
        .collect();
    let pick = |idx: &[usize]| FilterInput::unordered(idx.iter().map(|&k| times[k]).collect());
    let r1 = gamma_with_gradient(&pick(&idx1)?, &spectra.s1, tol, with_gradient)?;
    let r2 = gamma_with_gradient(&pick(&idx2)?, &spectra.s2, tol, with_gradient)?;
    let r3 = gamma_with_gradient(
        &FilterInput::unordered(times.to_vec())?,
        &spectra.s3,
        tol,
        with_gradient,
    )?;
    let g = GammaTriple {
        gamma1: r1.value,
        gamma2: r2.value,
        gamma3: r3.value,
        errors: [r1.error, r2.error, r3.error],
    };
    let phi = performance_phi(&g);
    let mut gradient = Vec::new();
    if with_gradient {
        let e12 = survival(g.gamma1, g.gamma2);
        let e13 = survival(g.gamma1, g.gamma3);
        let e23 = survival(g.gamma2, g.gamma3);
        let (d1, d2, d3) = (e12 + e13, e12 + e23, e13 + e23);
        gradient = vec![0.0; times.len()];
        let mut add = |weight: f64, idx: &mut dyn Iterator<Item = usize>, grad: &[f64]| {
            if weight == 0.0 {
                return;
            }
            for (k, gk) in idx.zip(grad) {
                gradient[k] += weight * gk;
            }
        };
        add(d1, &mut idx1.iter().copied(), &r1.gradient);
        add(d2, &mut idx2.iter().copied(), &r2.gradient);
        add(d3, &mut (0..times.len()), &r3.gradient);
    }
    Ok(PhiEvaluation {
        gammas: g,
        phi,
        gradient,
    })
}

/// `∂Φ/∂δ_j` for every pulse of a sequence, in sequence order.
pub fn phi_gradient(seq: &PulseSequence, spectra: &SpectrumTriple, tol: f64) -> Result<Vec<f64>> {
    Ok(evaluate_layout(&seq.times(), &seq.targets(), spectra, tol, true)?.gradient)
}

/// Memoizes exponents of individual switch functions.
///
/// Keys are the exact bit patterns of the flip times plus the spectrum, so
/// hits return bitwise the value a fresh evaluation would.
#[derive(Debug, Default)]
pub struct GammaCache {
    map: Mutex<HashMap<(Vec<u64>, String, u64), GammaEstimate>>,
}

impl GammaCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn gamma(&self, times: &[f64], spec: &NoiseSpectrum, tol: f64) -> Result<GammaEstimate> {
        let key = (
            times.iter().map(|t| t.to_bits()).collect::<Vec<_>>(),
            serde_json::to_string(spec).expect("spectrum serializes"),
            tol.to_bits(),
        );
        if let Some(v) = self.map.lock().expect("cache lock").get(&key) {
            return Ok(*v);
        }
        let v = gamma(&FilterInput::unordered(times.to_vec())?, spec, tol)?;
        self.map.lock().expect("cache lock").insert(key, v);
        Ok(v)
    }

    /// Exponents of a per-ordinal layout, reusing cached projections.
    pub fn gammas_layout(
        &self,
        times: &[f64],
        targets: &[Qubit],
        spectra: &SpectrumTriple,
        tol: f64,
    ) -> Result<GammaTriple> {
        let pick = |q: Qubit| -> Vec<f64> {
            times
                .iter()
                .zip(targets)
                .filter(|(_, &t)| t == q)
                .map(|(&x, _)| x)
                .collect()
        };
        let g1 = self.gamma(&pick(Qubit::Q1), &spectra.s1, tol)?;
        let g2 = self.gamma(&pick(Qubit::Q2), &spectra.s2, tol)?;
        let g3 = self.gamma(times, &spectra.s3, tol)?;
        Ok(GammaTriple {
            gamma1: g1.value,
            gamma2: g2.value,
            gamma3: g3.value,
            errors: [g1.error, g2.error, g3.error],
        })
    }

    pub fn len(&self) -> usize {
        self.map.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Amplitudes of `|00>, |01>, |10>, |11>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitState {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub gamma_amp: Complex64,
    pub eta: Complex64,
}

impl TwoQubitState {
    /// Normalized state; the squared norm must be 1 within `1e-12`.
    pub fn new(
        alpha: Complex64,
        beta: Complex64,
        gamma_amp: Complex64,
        eta: Complex64,
    ) -> Result<Self> {
        let s = TwoQubitState {
            alpha,
            beta,
            gamma_amp,
            eta,
        };
        let norm: f64 = s.amplitudes().iter().map(|a| a.norm_sqr()).sum();
        if !((norm - 1.0).abs() <= 1e-12) {
            return Err(Error::input(format!("state norm² is {norm}, expected 1")));
        }
        Ok(s)
    }

    pub fn from_real(a: [f64; 4]) -> Result<Self> {
        let c = |x: f64| Complex64::new(x, 0.0);
        Self::new(c(a[0]), c(a[1]), c(a[2]), c(a[3]))
    }

    /// `(|00> + |11>) / √2`.
    pub fn bell() -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        Self::from_real([r, 0.0, 0.0, r]).expect("normalized")
    }

    /// Equal superposition of all four basis states.
    pub fn equal() -> Self {
        Self::from_real([0.5; 4]).expect("normalized")
    }

    /// `|00>`.
    pub fn basis00() -> Self {
        Self::from_real([1.0, 0.0, 0.0, 0.0]).expect("normalized")
    }

    /// Named presets: `bell`, `equal`, `basis00`.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "bell" => Ok(Self::bell()),
            "equal" => Ok(Self::equal()),
            "basis00" => Ok(Self::basis00()),
            _ => Err(Error::input(format!(
                "unknown state `{name}` (bell, equal, basis00)"
            ))),
        }
    }

    pub fn amplitudes(&self) -> [Complex64; 4] {
        [self.alpha, self.beta, self.gamma_amp, self.eta]
    }
}

/// Which exponents damp element `(a, b)` of the averaged density matrix.
///
/// Returns the pair as indices into `[Γ1, Γ2, Γ3]`, or `None` on the
/// diagonal.
pub fn damping_pair(a: usize, b: usize) -> Option<(usize, usize)> {
    match (a.min(b), a.max(b)) {
        (x, y) if x == y => None,
        (0, 1) | (2, 3) => Some((1, 2)),
        (0, 2) | (1, 3) => Some((0, 2)),
        (0, 3) | (1, 2) => Some((0, 1)),
        _ => unreachable!("indices are below 4"),
    }
}

/// The noise-averaged 4×4 density matrix, `ρ̄_ab = conj(ψ_a) ψ_b D_ab`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragedDensityMatrix {
    pub data: [[Complex64; 4]; 4],
}

impl AveragedDensityMatrix {
    pub fn trace(&self) -> Complex64 {
        (0..4).map(|i| self.data[i][i]).sum()
    }

    pub fn get(&self, a: usize, b: usize) -> Complex64 {
        self.data[a][b]
    }
}

/// Apply the pure-dephasing damping to `|ψ><ψ|`.
pub fn evolve(state: &TwoQubitState, g: &GammaTriple) -> AveragedDensityMatrix {
    let psi = state.amplitudes();
    let gs = g.as_array();
    let mut data = [[Complex64::new(0.0, 0.0); 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            let base = psi[a].conj() * psi[b];
            data[a][b] = match damping_pair(a, b) {
                None => base,
                Some((i, j)) => base * survival(gs[i], gs[j]),
            };
        }
    }
    AveragedDensityMatrix { data }
}

/// `Tr[ρ̄ ρ(0)]`.
pub fn trace_fidelity(rho: &AveragedDensityMatrix, state: &TwoQubitState) -> f64 {
    let psi = state.amplitudes();
    let mut acc = Complex64::new(0.0, 0.0);
    for a in 0..4 {
        for b in 0..4 {
            acc += rho.data[a][b] * (psi[b].conj() * psi[a]);
        }
    }
    acc.re
}
