// Copyright 2026 ddopt Contributors
// SPDX-License-Identifier: Apache-2.0

//! Adaptive Gauss–Kronrod quadrature.
//!
//! The integrators here work on an explicit list of panels. Callers choose
//! the initial partition (for oscillatory integrands, panel widths bounded
//! by a fraction of the shortest period), every panel is evaluated with the
//! 21-point Kronrod rule, and the panel with the largest error estimate is
//! bisected until the summed error meets the tolerance or the panel budget
//! runs out. Panels are kept sorted by abscissa and summed in that order, so
//! results depend only on the inputs and never on evaluation order.

use crate::error::{Error, Result};

/// Positive Kronrod abscissae on `[-1, 1]`, largest first; the last entry is the centre.
#[allow(clippy::excessive_precision)]
pub const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

/// Weights of the embedded 10-point Gauss rule (abscissae `XGK[1], XGK[3], ..`).
#[allow(clippy::excessive_precision)]
pub const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Weights of the 21-point Kronrod rule, matching `XGK`.
#[allow(clippy::excessive_precision)]
pub const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Number of abscissae in one panel.
pub const NODES: usize = 21;

/// Unit-interval offsets of the 21 abscissae in the order used by
/// [`combine`]: centre first, then `(-x_k, +x_k)` pairs following `XGK`.
pub fn unit_offsets() -> [f64; NODES] {
    let mut out = [0.0; NODES];
    for k in 0..10 {
        out[1 + 2 * k] = -XGK[k];
        out[2 + 2 * k] = XGK[k];
    }
    out
}

/// Kronrod weight (on `[-1, 1]`) of each abscissa in [`unit_offsets`] order.
pub fn unit_weights() -> [f64; NODES] {
    let mut out = [0.0; NODES];
    out[0] = WGK[10];
    for k in 0..10 {
        out[1 + 2 * k] = WGK[k];
        out[2 + 2 * k] = WGK[k];
    }
    out
}

/// Abscissae of the rule on `[a, b]` in [`unit_offsets`] order.
pub fn abscissae(a: f64, b: f64) -> [f64; NODES] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut out = [c; NODES];
    for k in 0..10 {
        out[1 + 2 * k] = c - h * XGK[k];
        out[2 + 2 * k] = c + h * XGK[k];
    }
    out
}

/// Result of applying the rule to one panel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel {
    pub a: f64,
    pub b: f64,
    pub value: f64,
    pub error: f64,
}

/// QUADPACK's error rescaling for the 21-point pair.
fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 {
            res_asc * scale
        } else {
            res_asc
        };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

/// Combine integrand samples taken at [`abscissae`] into a panel estimate.
pub fn combine(a: f64, b: f64, f: &[f64; NODES]) -> Panel {
    let h = 0.5 * (b - a);
    let fc = f[0];
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    let mut res_abs = (fc * WGK[10]).abs();
    for k in 0..10 {
        let (f1, f2) = (f[1 + 2 * k], f[2 + 2 * k]);
        kronrod += WGK[k] * (f1 + f2);
        res_abs += WGK[k] * (f1.abs() + f2.abs());
        if k % 2 == 1 {
            gauss += WG[k / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for k in 0..10 {
        res_asc += WGK[k] * ((f[1 + 2 * k] - mean).abs() + (f[2 + 2 * k] - mean).abs());
    }
    let value = kronrod * h;
    let error = rescale_error((kronrod - gauss) * h, res_abs * h.abs(), res_asc * h.abs());
    Panel { a, b, value, error }
}

/// Apply the 21-point rule to `f` on `[a, b]`.
pub fn gk21<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> Panel {
    let xs = abscissae(a, b);
    let mut fx = [0.0; NODES];
    for (v, &x) in fx.iter_mut().zip(xs.iter()) {
        *v = f(x);
    }
    combine(a, b, &fx)
}

/// Absolute/relative accuracy target: converged once the summed error is
/// below `max(abs, rel * |value|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub fn absolute(abs: f64) -> Self {
        Tolerance { abs, rel: 1e-12 }
    }

    pub fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

/// Something that covers an interval and carries a value and error estimate.
pub trait PanelEstimate {
    fn bounds(&self) -> (f64, f64);
    fn value(&self) -> f64;
    fn error(&self) -> f64;
}

impl PanelEstimate for Panel {
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

/// Outcome of [`refine`].
#[derive(Debug, Clone)]
pub struct Refined<P> {
    pub panels: Vec<P>,
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

/// Bisect the worst panel until the summed error meets `tol`.
///
/// `panels` must be sorted and contiguous. `eval` evaluates a fresh panel on
/// `[a, b]`. Ties in the error are broken by position so the refinement
/// sequence is deterministic.
pub fn refine<P, F>(
    mut panels: Vec<P>,
    tol: Tolerance,
    max_panels: usize,
    mut eval: F,
) -> Refined<P>
where
    P: PanelEstimate,
    F: FnMut(f64, f64) -> P,
{
    loop {
        let value = compensated_sum(panels.iter().map(|p| p.value()));
        let error = compensated_sum(panels.iter().map(|p| p.error()));
        if error <= tol.target(value) || !error.is_finite() && !value.is_finite() {
            return Refined {
                panels,
                value,
                error,
                converged: error <= tol.target(value),
            };
        }
        if panels.len() >= max_panels {
            return Refined {
                panels,
                value,
                error,
                converged: false,
            };
        }
        let mut worst = 0;
        for (i, p) in panels.iter().enumerate() {
            if p.error() > panels[worst].error() {
                worst = i;
            }
        }
        let (a, b) = panels[worst].bounds();
        let mid = 0.5 * (a + b);
        if !(mid > a && mid < b) || (b - a) <= 8.0 * f64::EPSILON * a.abs().max(b.abs()) {
            return Refined {
                panels,
                value,
                error,
                converged: false,
            };
        }
        let left = eval(a, mid);
        let right = eval(mid, b);
        panels.splice(worst..=worst, [left, right]);
    }
}

/// Split `[a, b]` into equal panels no wider than `max_width`.
pub fn partition(a: f64, b: f64, max_width: f64) -> Vec<(f64, f64)> {
    if b <= a {
        return Vec::new();
    }
    let n = ((b - a) / max_width).ceil().max(1.0) as usize;
    let w = (b - a) / n as f64;
    (0..n)
        .map(|i| {
            let lo = a + w * i as f64;
            let hi = if i + 1 == n {
                b
            } else {
                a + w * (i + 1) as f64
            };
            (lo, hi)
        })
        .collect()
}

/// Adaptive integral of `f` over `[a, b]` starting from panels of width at
/// most `max_width`.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    max_width: f64,
    tol: Tolerance,
    max_panels: usize,
) -> Result<(f64, f64)> {
    let initial: Vec<Panel> = partition(a, b, max_width)
        .into_iter()
        .map(|(lo, hi)| gk21(&mut f, lo, hi))
        .collect();
    let refined = refine(initial, tol, max_panels, |lo, hi| gk21(&mut f, lo, hi));
    if refined.converged {
        Ok((refined.value, refined.error))
    } else {
        Err(Error::Numeric {
            message: format!("adaptive quadrature on [{a}, {b}] did not converge"),
            estimate: refined.value,
            achieved_error: refined.error,
        })
    }
}

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut c = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Wynn's epsilon algorithm applied to a sequence of partial sums.
///
/// Returns the accelerated limit and an error estimate taken from the
/// spread of the last three diagonal estimates.
pub fn wynn_epsilon(partial_sums: &[f64]) -> (f64, f64) {
    let n = partial_sums.len();
    if n < 3 {
        let last = partial_sums.last().copied().unwrap_or(0.0);
        let prev = if n == 2 { partial_sums[0] } else { 0.0 };
        return (last, (last - prev).abs());
    }
    // eps[k] holds column k of the table for the current diagonal.
    let mut prev_col: Vec<f64> = vec![0.0; n + 1];
    let mut cur_col: Vec<f64> = partial_sums.to_vec();
    let mut estimates = vec![*partial_sums.last().unwrap()];
    let mut column = 0;
    while cur_col.len() > 1 {
        let mut next = Vec::with_capacity(cur_col.len() - 1);
        for i in 0..cur_col.len() - 1 {
            let diff = cur_col[i + 1] - cur_col[i];
            let base = if column == 0 { 0.0 } else { prev_col[i + 1] };
            if diff == 0.0 {
                next.push(f64::INFINITY);
            } else {
                next.push(base + 1.0 / diff);
            }
        }
        prev_col = cur_col;
        cur_col = next;
        column += 1;
        if column % 2 == 0 {
            match cur_col.last() {
                Some(v) if v.is_finite() => estimates.push(*v),
                _ => break,
            }
        }
    }
    let k = estimates.len();
    let best = estimates[k - 1];
    let err = if k >= 3 {
        (best - estimates[k - 2]).abs() + (best - estimates[k - 3]).abs()
    } else if k == 2 {
        (best - estimates[0]).abs()
    } else {
        let m = partial_sums.len();
        (partial_sums[m - 1] - partial_sums[m - 2]).abs()
    };
    (best, err)
}
