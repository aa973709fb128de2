// Copyright 2026 ddopt Contributors
// SPDX-License-Identifier: Apache-2.0

//! The filter function
//!
//! ```text
//! y_M(x) = 1 + (-1)^(M+1) e^{ix} + 2 Σ_{j=1..M} (-1)^j e^{ixδ_j}
//! ```
//!
//! of a switch function that flips at `δ_1..δ_M`, and its squared modulus
//! and gradient.
//!
//! For `x < SERIES_LIMIT` the value comes from the moment expansion
//! `y = Σ_{k>=1} μ_k (ix)^k / k!` with `μ_k = (-1)^(M+1) + 2 Σ_j (-1)^j δ_j^k`.
//! The moments are accumulated in double-double arithmetic, so low-order
//! cancellations (UDD makes `μ_1..μ_M` vanish) survive down to `x ~ 1e-3`
//! and below instead of drowning in rounding noise.

use num_complex::Complex64;

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::quadrature::compensated_sum;

/// Below this `x` the moment series is used.
pub const SERIES_LIMIT: f64 = 1.0;

/// Number of moments kept; the truncation error is below `(2M+2) / 25!`.
pub const SERIES_TERMS: usize = 24;

/// Flip times of one switch function.
///
/// Times are normally sorted. The optimizer also builds inputs whose times
/// are in pulse order but not sorted, since the sign of each term follows
/// its position in the list.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterInput {
    times: Vec<f64>,
    moments: Vec<f64>,
}

impl FilterInput {
    /// Sorted times strictly inside `(0, 1)`.
    pub fn new(times: Vec<f64>) -> Result<Self> {
        check_range(&times, true)?;
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::input("filter times must be sorted"));
        }
        Ok(Self::build(
            times.iter().map(|&t| Dd::from_f64(t)).collect(),
        ))
    }

    /// Times in `[0, 1]` in pulse order, sorted or not.
    pub fn unordered(times: Vec<f64>) -> Result<Self> {
        check_range(&times, false)?;
        Ok(Self::build(
            times.iter().map(|&t| Dd::from_f64(t)).collect(),
        ))
    }

    /// Times carried to double-double precision, e.g. from
    /// [`crate::sequences::udd_times_extended`].
    pub fn from_extended(times: &[Dd]) -> Result<Self> {
        let hi: Vec<f64> = times.iter().map(|d| d.hi).collect();
        check_range(&hi, true)?;
        if hi.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::input("filter times must be sorted"));
        }
        Ok(Self::build(times.to_vec()))
    }

    /// Times given as `hi + lo` pairs.
    pub fn with_residuals(hi: &[f64], lo: &[f64]) -> Result<Self> {
        if hi.len() != lo.len() {
            return Err(Error::input("residual list length mismatch"));
        }
        let ext: Vec<Dd> = hi.iter().zip(lo).map(|(&h, &l)| Dd::new(h, l)).collect();
        Self::from_extended(&ext)
    }

    pub fn empty() -> Self {
        Self::build(Vec::new())
    }

    fn build(ext: Vec<Dd>) -> Self {
        let m = ext.len();
        let edge = if m.is_multiple_of(2) { -1.0 } else { 1.0 };
        let mut powers = ext.clone();
        let mut moments = Vec::with_capacity(SERIES_TERMS);
        for _ in 0..SERIES_TERMS {
            let mut acc = Dd::from_f64(edge);
            for (j, p) in powers.iter().enumerate() {
                let term = p.mul_f64(2.0);
                acc = if j % 2 == 0 { acc - term } else { acc + term };
            }
            moments.push(acc.to_f64());
            for (p, t) in powers.iter_mut().zip(&ext) {
                *p = *p * *t;
            }
        }
        FilterInput {
            times: ext.iter().map(|d| d.hi).collect(),
            moments,
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `μ_k` for `k = 1..=SERIES_TERMS`.
    pub fn moments(&self) -> &[f64] {
        &self.moments
    }

    /// Sign/weight of the `j`-th flip (0-based): `2(-1)^(j+1)`.
    #[inline]
    pub fn coefficient(j: usize) -> f64 {
        if j.is_multiple_of(2) {
            -2.0
        } else {
            2.0
        }
    }

    /// Weight of the `e^{ix}` end term.
    #[inline]
    pub fn end_coefficient(&self) -> f64 {
        if self.times.len().is_multiple_of(2) {
            -1.0
        } else {
            1.0
        }
    }

    /// `y_M(x)` from the moment series.
    pub fn value_series(&self, x: f64) -> Complex64 {
        let mut re = 0.0;
        let mut im = 0.0;
        let mut power = 1.0;
        for (k, mu) in self.moments.iter().enumerate() {
            let k = k + 1;
            power *= x / k as f64;
            let term = mu * power;
            match k % 4 {
                1 => im += term,
                2 => re -= term,
                3 => im -= term,
                _ => re += term,
            }
        }
        Complex64::new(re, im)
    }

    /// `y_M(x)` by compensated summation of the `M + 2` phasors.
    pub fn value_direct(&self, x: f64) -> Complex64 {
        let (s, c) = x.sin_cos();
        let e = self.end_coefficient();
        let phasors = self.times.iter().enumerate().map(|(j, &t)| {
            let (s, c) = (x * t).sin_cos();
            let w = Self::coefficient(j);
            (w * c, w * s)
        });
        let terms: Vec<(f64, f64)> = [(1.0, 0.0), (e * c, e * s)]
            .into_iter()
            .chain(phasors)
            .collect();
        Complex64::new(
            compensated_sum(terms.iter().map(|t| t.0)),
            compensated_sum(terms.iter().map(|t| t.1)),
        )
    }

    /// `y_M(x)`.
    pub fn value(&self, x: f64) -> Complex64 {
        if x < SERIES_LIMIT {
            self.value_series(x)
        } else {
            self.value_direct(x)
        }
    }

    /// `|y_M(x)|²`.
    pub fn sq(&self, x: f64) -> f64 {
        self.value(x).norm_sqr()
    }

    /// `∂|y_M(x)|² / ∂δ_j = -2x c_j Im(conj(y) e^{ixδ_j})`.
    pub fn sq_gradient(&self, x: f64) -> Vec<f64> {
        let y = self.value(x).conj();
        self.times
            .iter()
            .enumerate()
            .map(|(j, &t)| {
                let (s, c) = (x * t).sin_cos();
                let prod = y * Complex64::new(c, s);
                -2.0 * x * Self::coefficient(j) * prod.im
            })
            .collect()
    }
}

fn check_range(times: &[f64], open: bool) -> Result<()> {
    for (i, &t) in times.iter().enumerate() {
        let ok = if open {
            t > 0.0 && t < 1.0
        } else {
            (0.0..=1.0).contains(&t)
        };
        if !(t.is_finite() && ok) {
            return Err(Error::input(format!(
                "filter time {} at index {i} is out of range",
                t
            )));
        }
    }
    Ok(())
}

/// `y_M(x)` for `x >= 0`.
pub fn filter_value(input: &FilterInput, x: f64) -> Result<Complex64> {
    check_x(x)?;
    Ok(input.value(x))
}

/// `|y_M(x)|²` for `x >= 0`.
pub fn filter_sq(input: &FilterInput, x: f64) -> Result<f64> {
    check_x(x)?;
    Ok(input.sq(x))
}

/// Gradient of `|y_M(x)|²` with respect to each flip time.
pub fn filter_sq_gradient(input: &FilterInput, x: f64) -> Result<Vec<f64>> {
    check_x(x)?;
    Ok(input.sq_gradient(x))
}

fn check_x(x: f64) -> Result<()> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(Error::input(format!(
            "x must be finite and non-negative, got {x}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn input(t: &[f64]) -> FilterInput {
        FilterInput::new(t.to_vec()).unwrap()
    }

    #[test]
    fn free_evolution_at_pi() {
        let y = filter_value(&FilterInput::empty(), PI).unwrap();
        assert_abs_diff_eq!(y.re, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(y.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn vanishes_at_origin() {
        for t in [&[][..], &[0.5], &[0.2, 0.9], &[0.1, 0.4, 0.41]] {
            assert_eq!(input(t).value(0.0), Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn two_pulse_hand_value() {
        let y = input(&[0.25, 0.75]).value(2.0 * PI);
        assert_abs_diff_eq!(y.re, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(y.im, -4.0, epsilon = 1e-14);
    }

    #[test]
    fn coincident_pair_matches_free_evolution() {
        let pair = input(&[0.3, 0.3]);
        let free = FilterInput::empty();
        for x in [0.01, 0.5, 1.0, 3.0, 17.0] {
            assert!((pair.value(x) - free.value(x)).norm() < 1e-14);
        }
    }

    #[test]
    fn squared_modulus_examples() {
        let free = FilterInput::empty();
        for x in [0.3, 1.7, 9.0] {
            assert_abs_diff_eq!(free.sq(x), 4.0 * (x / 2.0).sin().powi(2), epsilon = 1e-14);
        }
        assert_abs_diff_eq!(input(&[0.5]).sq(PI), 4.0, epsilon = 1e-14);
        assert_eq!(input(&[0.5]).sq(0.0), 0.0);
    }

    #[test]
    fn series_and_direct_agree_near_the_switch() {
        let f = input(&[0.1, 0.35, 0.4, 0.8]);
        for x in [0.5, 0.9, 0.999, 1.001] {
            let d = (f.value_series(x) - f.value_direct(x)).norm();
            assert!(d < 1e-15, "x={x}: {d:e}");
        }
    }

    #[test]
    fn gradient_examples() {
        assert_abs_diff_eq!(input(&[0.5]).sq_gradient(PI)[0], 0.0, epsilon = 1e-13);
        assert!(input(&[0.2, 0.6])
            .sq_gradient(0.0)
            .iter()
            .all(|&g| g == 0.0));
        let t = [0.25, 0.75];
        let g = input(&t).sq_gradient(1.0);
        let h = 1e-6;
        for j in 0..2 {
            let mut up = t;
            let mut dn = t;
            up[j] += h;
            dn[j] -= h;
            let fd = (input(&up).sq(1.0) - input(&dn).sq(1.0)) / (2.0 * h);
            assert!(
                (g[j] - fd).abs() <= 1e-6 * fd.abs().max(1e-12),
                "{} vs {}",
                g[j],
                fd
            );
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(FilterInput::new(vec![0.6, 0.5]).is_err());
        assert!(FilterInput::new(vec![0.0]).is_err());
        assert!(FilterInput::unordered(vec![0.6, 0.5]).is_ok());
        assert!(filter_sq(&FilterInput::empty(), -1.0).is_err());
    }
}
