// Copyright 2026 ddopt Contributors
// SPDX-License-Identifier: Apache-2.0

//! Parametric noise spectral densities.
//!
//! A [`NoiseSpectrum`] is `amplitude * kernel(ω) * Θ(cutoff - ω)` on `ω >= 0`.
//! The kernels are
//!
//! | family                  | kernel               |
//! |-------------------------|----------------------|
//! | `power_law(p)`          | `ω^p`                |
//! | `lorentzian(w)`         | `1 / (ω² + w²)`      |
//! | `constant`              | `1`                  |
//! | `super_ohmic_gaussian(p)` | `ω^p exp(-ω²)`     |
//!
//! The hard cutoff is inclusive: `S(cutoff)` is the kernel value and
//! `S(ω) = 0` for every `ω > cutoff`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{self, Tolerance};

/// Tail budget used when truncating spectra without a hard cutoff.
pub const TAIL_BOUND: f64 = 1e-12;

/// Largest truncation frequency accepted for spectra without a hard cutoff.
pub const MAX_SOFT_CUTOFF: f64 = 1e6;

/// Spectrum family and its shape parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    PowerLaw { exponent: f64 },
    Lorentzian { width: f64 },
    Constant,
    SuperOhmicGaussian { exponent: f64 },
}

impl Family {
    fn name(&self) -> &'static str {
        match self {
            Family::PowerLaw { .. } => "power_law",
            Family::Lorentzian { .. } => "lorentzian",
            Family::Constant => "constant",
            Family::SuperOhmicGaussian { .. } => "super_ohmic_gaussian",
        }
    }
}

/// One noise spectral density `S(ω)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpectrumConfig", into = "SpectrumConfig")]
pub struct NoiseSpectrum {
    family: Family,
    amplitude: f64,
    cutoff: Option<f64>,
    label: String,
}

impl NoiseSpectrum {
    /// Build and validate a spectrum.
    pub fn new(family: Family, amplitude: f64, cutoff: Option<f64>) -> Result<Self> {
        let spec = NoiseSpectrum {
            family,
            amplitude,
            cutoff,
            label: String::new(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn power_law(exponent: f64, amplitude: f64, cutoff: Option<f64>) -> Result<Self> {
        Self::new(Family::PowerLaw { exponent }, amplitude, cutoff)
    }

    /// `amplitude * ω Θ(cutoff - ω)`.
    pub fn ohmic(amplitude: f64, cutoff: f64) -> Result<Self> {
        Self::power_law(1.0, amplitude, Some(cutoff))
    }

    pub fn lorentzian(width: f64, amplitude: f64) -> Result<Self> {
        Self::new(Family::Lorentzian { width }, amplitude, None)
    }

    pub fn constant(amplitude: f64, cutoff: f64) -> Result<Self> {
        Self::new(Family::Constant, amplitude, Some(cutoff))
    }

    pub fn super_ohmic_gaussian(exponent: f64, amplitude: f64) -> Result<Self> {
        Self::new(Family::SuperOhmicGaussian { exponent }, amplitude, None)
    }

    /// The identically zero spectrum.
    pub fn zero() -> Self {
        NoiseSpectrum {
            family: Family::Constant,
            amplitude: 0.0,
            cutoff: Some(1.0),
            label: "none".into(),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn cutoff(&self) -> Option<f64> {
        self.cutoff
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// True when `S` vanishes identically.
    pub fn is_zero(&self) -> bool {
        self.amplitude == 0.0
    }

    fn validate(&self) -> Result<()> {
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return Err(Error::schema(
                "amplitude",
                "must be finite and non-negative",
            ));
        }
        if let Some(c) = self.cutoff {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::schema("cutoff", "must be finite and positive"));
            }
        }
        match self.family {
            Family::PowerLaw { exponent } | Family::SuperOhmicGaussian { exponent } => {
                if !exponent.is_finite() || exponent <= -3.0 {
                    return Err(Error::schema(
                        "exponent",
                        "must be finite and greater than -3",
                    ));
                }
                if matches!(self.family, Family::PowerLaw { .. })
                    && exponent >= 1.0
                    && self.cutoff.is_none()
                {
                    return Err(Error::schema(
                        "cutoff",
                        "power_law with exponent >= 1 requires a hard cutoff",
                    ));
                }
            }
            Family::Lorentzian { width } => {
                if !(width.is_finite() && width > 0.0) {
                    return Err(Error::schema("width", "must be finite and positive"));
                }
            }
            Family::Constant => {}
        }
        Ok(())
    }

    /// Exponent `p` of the leading small-ω behaviour `S ~ ω^p`.
    pub fn low_frequency_exponent(&self) -> f64 {
        match self.family {
            Family::PowerLaw { exponent } | Family::SuperOhmicGaussian { exponent } => exponent,
            Family::Lorentzian { .. } | Family::Constant => 0.0,
        }
    }

    /// Kernel times amplitude at `ω > 0`, ignoring the cutoff.
    #[inline]
    pub fn shape(&self, omega: f64) -> f64 {
        let k = match self.family {
            Family::PowerLaw { exponent } => pow(omega, exponent),
            Family::Lorentzian { width } => 1.0 / (omega * omega + width * width),
            Family::Constant => 1.0,
            Family::SuperOhmicGaussian { exponent } => {
                pow(omega, exponent) * (-omega * omega).exp()
            }
        };
        self.amplitude * k
    }

    /// `S(ω)` without input checks. Returns 0 outside the support.
    #[inline]
    pub fn value(&self, omega: f64) -> f64 {
        if omega < 0.0 || self.amplitude == 0.0 {
            return 0.0;
        }
        if let Some(c) = self.cutoff {
            if omega > c {
                return 0.0;
            }
        }
        if omega == 0.0 {
            let p = self.low_frequency_exponent();
            let limit = match self.family {
                Family::Lorentzian { width } => 1.0 / (width * width),
                _ if p > 0.0 => 0.0,
                _ if p == 0.0 => 1.0,
                _ => f64::INFINITY,
            };
            return self.amplitude * limit;
        }
        self.shape(omega)
    }

    /// Evaluate `S(ω)`.
    pub fn evaluate(&self, omega: f64) -> Result<f64> {
        if !omega.is_finite() {
            return Err(Error::input(format!(
                "frequency must be finite, got {omega}"
            )));
        }
        Ok(self.value(omega))
    }

    /// Upper integration limit for `∫ |y_M|² S / ω² dω`.
    ///
    /// With a hard cutoff this is the cutoff. Otherwise it is the smallest
    /// frequency `Ω` (on a coarse grid) for which the analytic bound
    /// `(2M+2)² ∫_Ω^∞ S/ω² dω` is below [`TAIL_BOUND`].
    pub fn integration_limit(&self, pulses: usize) -> Result<f64> {
        if let Some(c) = self.cutoff {
            return Ok(c);
        }
        let peak = (2.0 * pulses as f64 + 2.0).powi(2);
        let budget = TAIL_BOUND / (peak * self.amplitude.max(f64::MIN_POSITIVE));
        let omega = match self.family {
            // ∫_Ω^∞ dω / (ω²(ω²+w²)) <= 1 / (3Ω³)
            Family::Lorentzian { .. } => (1.0 / (3.0 * budget)).cbrt(),
            // ∫_Ω^∞ ω^(p-2) dω = Ω^(p-1) / (1-p)
            Family::PowerLaw { exponent } => {
                let q = 1.0 - exponent;
                (1.0 / (budget * q)).powf(1.0 / q)
            }
            Family::Constant => 1.0 / budget,
            Family::SuperOhmicGaussian { exponent } => {
                // ln(ω^q e^{-ω²}) is concave for ω >= 1 when q >= -2, so the
                // tangent at Ω bounds the tail by f(Ω) / (2Ω - q/Ω).
                let q = exponent - 2.0;
                let mut omega = (1.0 + q.abs().sqrt()).max(1.0);
                loop {
                    let slope = 2.0 * omega - q / omega;
                    let tail = pow(omega, q) * (-omega * omega).exp() / slope;
                    if slope > 0.0 && tail < budget {
                        break omega;
                    }
                    omega += 0.25;
                }
            }
        };
        if !(omega.is_finite() && omega <= MAX_SOFT_CUTOFF) {
            return Err(Error::Numeric {
                message: format!(
                    "spectrum `{}` decays too slowly for certified truncation (needs Ω = {omega:e})",
                    self.family.name()
                ),
                estimate: f64::NAN,
                achieved_error: f64::INFINITY,
            });
        }
        Ok(omega)
    }

    /// `scale * ∫_0^∞ S(ω) cos(ωτ) dω`.
    pub fn correlation(&self, tau: f64, scale: f64) -> Result<f64> {
        if !tau.is_finite() || !scale.is_finite() {
            return Err(Error::input("tau and scale must be finite"));
        }
        if self.is_zero() || scale == 0.0 {
            return Ok(0.0);
        }
        let tau = tau.abs();
        let p = self.low_frequency_exponent();
        if p <= -1.0 {
            return Err(Error::Numeric {
                message: format!("correlation diverges at ω = 0 for exponent {p}"),
                estimate: f64::INFINITY,
                achieved_error: f64::INFINITY,
            });
        }
        let tol = Tolerance {
            abs: 1e-13,
            rel: 1e-11,
        };
        let budget = 20_000;
        let integrand = |w: f64| self.value(w) * (w * tau).cos();
        let value = match self.cutoff {
            Some(c) => {
                let width = if tau > 0.0 {
                    (std::f64::consts::FRAC_PI_2 / tau).min(c)
                } else {
                    c
                };
                quadrature::integrate(integrand, 0.0, c, width, tol, budget)?.0
            }
            None => match self.family {
                Family::Lorentzian { .. } | Family::SuperOhmicGaussian { .. } => {
                    self.infinite_correlation(tau, tol, budget)?
                }
                _ => {
                    return Err(Error::Numeric {
                        message: format!(
                            "correlation of `{}` without a cutoff does not converge",
                            self.family.name()
                        ),
                        estimate: f64::NAN,
                        achieved_error: f64::INFINITY,
                    })
                }
            },
        };
        Ok(scale * value)
    }

    fn infinite_correlation(&self, tau: f64, tol: Tolerance, budget: usize) -> Result<f64> {
        if tau == 0.0 {
            // ∫_0^1 S + ∫_0^1 S(1/v) / v² dv
            let head = quadrature::integrate(|w| self.value(w), 0.0, 1.0, 0.25, tol, budget)?.0;
            let tail = quadrature::integrate(
                |v| {
                    let s = self.value(1.0 / v);
                    if s == 0.0 {
                        0.0
                    } else {
                        s / (v * v)
                    }
                },
                0.0,
                1.0,
                0.25,
                tol,
                budget,
            )?
            .0;
            return Ok(head + tail);
        }
        // Half-period pieces form an alternating series; accelerate it.
        let half = std::f64::consts::PI / tau;
        let integrand = |w: f64| self.value(w) * (w * tau).cos();
        let mut partial = Vec::new();
        let mut sum = 0.0;
        let mut best = (f64::NAN, f64::INFINITY);
        for k in 0..200 {
            let a = k as f64 * half;
            let b = a + half;
            let width = half.min(0.5);
            sum += quadrature::integrate(integrand, a, b, width, tol, budget)?.0;
            partial.push(sum);
            if partial.len() >= 6 {
                let (v, e) = quadrature::wynn_epsilon(&partial);
                best = (v, e);
                if e <= tol.target(v) {
                    return Ok(v);
                }
            }
        }
        Err(Error::Numeric {
            message: "correlation tail series did not converge".into(),
            estimate: best.0,
            achieved_error: best.1,
        })
    }
}

#[inline]
fn pow(x: f64, p: f64) -> f64 {
    if p == 1.0 {
        x
    } else if p == 0.0 {
        1.0
    } else if p == -1.0 {
        1.0 / x
    } else if p.fract() == 0.0 && p.abs() <= 16.0 {
        x.powi(p as i32)
    } else {
        x.powf(p)
    }
}

/// Local spectra for each qubit plus the nonlocal coupling spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTriple {
    pub s1: NoiseSpectrum,
    pub s2: NoiseSpectrum,
    pub s3: NoiseSpectrum,
}

impl SpectrumTriple {
    pub fn new(s1: NoiseSpectrum, s2: NoiseSpectrum, s3: NoiseSpectrum) -> Self {
        SpectrumTriple { s1, s2, s3 }
    }

    /// Parse `{"s1": .., "s2": .., "s3": ..}`; schema errors name the
    /// offending field with its parent key, e.g. `s3.amplitude`.
    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            s1: SpectrumConfig,
            s2: SpectrumConfig,
            s3: SpectrumConfig,
        }
        let raw: Raw = serde_json::from_str(text)?;
        let conv = |key: &str, c: SpectrumConfig| {
            NoiseSpectrum::try_from(c).map_err(|e| match e {
                Error::Schema { field, message } => {
                    Error::schema(format!("{key}.{field}"), message)
                }
                other => other,
            })
        };
        Ok(SpectrumTriple {
            s1: conv("s1", raw.s1)?,
            s2: conv("s2", raw.s2)?,
            s3: conv("s3", raw.s3)?,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spectra serialize")
    }

    /// All three spectra vanish.
    pub fn is_zero(&self) -> bool {
        self.s1.is_zero() && self.s2.is_zero() && self.s3.is_zero()
    }

    /// Built-in spectrum sets, keyed `t<table>_row<block>`.
    pub fn preset(name: &str) -> Result<Self> {
        let ohm = |a: f64, c: f64| NoiseSpectrum::ohmic(a, c).expect("valid preset");
        let lor = || NoiseSpectrum::lorentzian(1.0, 0.2).expect("valid preset");
        let local = || ohm(1.0, 1.0);
        let t = |s1, s2, s3| SpectrumTriple::new(s1, s2, s3);
        let triple = match name {
            "t1_row1" | "t2_row1" => t(local(), local(), ohm(2.0, 2.0)),
            "t1_row2" | "t2_row2" | "t6_row1" => t(local(), local(), ohm(0.5, 0.5)),
            "t1_row3" => t(local(), local(), ohm(0.1, 0.1)),
            "t1_row4" | "t4_row2" => t(local(), local(), lor()),
            "t1_row5" => t(local(), local(), NoiseSpectrum::zero()),
            "t3_row1" | "t6_row2" => t(ohm(1.0, 5.0), ohm(1.0, 5.0), ohm(1.0, 3.0)),
            "t3_row2" => {
                let f =
                    |c: f64| NoiseSpectrum::power_law(-1.0, 1.0, Some(c)).expect("valid preset");
                t(f(10.0), f(10.0), f(5.0))
            }
            "t4_row1" => {
                let g = |p: f64| NoiseSpectrum::super_ohmic_gaussian(p, 1.0).expect("valid preset");
                t(g(3.0), g(3.0), g(1.0))
            }
            "t4_row3" => t(lor(), lor(), local()),
            "t5_row1" => {
                let c = |a: f64| NoiseSpectrum::constant(a, a).expect("valid preset");
                t(c(10.0), c(0.1), c(0.05))
            }
            _ => {
                return Err(Error::input(format!(
                    "unknown spectrum preset `{name}` (known: {})",
                    PRESETS.join(", ")
                )))
            }
        };
        Ok(triple)
    }
}

/// Names accepted by [`SpectrumTriple::preset`].
pub const PRESETS: &[&str] = &[
    "t1_row1", "t1_row2", "t1_row3", "t1_row4", "t1_row5", "t2_row1", "t2_row2", "t3_row1",
    "t3_row2", "t4_row1", "t4_row2", "t4_row3", "t5_row1", "t6_row1", "t6_row2",
];

/// Wire form of a spectrum.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpectrumConfig {
    family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    width: Option<f64>,
    amplitude: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cutoff: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

impl TryFrom<SpectrumConfig> for NoiseSpectrum {
    type Error = Error;

    fn try_from(c: SpectrumConfig) -> Result<Self> {
        let need = |v: Option<f64>, field: &str| {
            v.ok_or_else(|| Error::schema(field, format!("required for family `{}`", c.family)))
        };
        let family = match c.family.as_str() {
            "power_law" => Family::PowerLaw {
                exponent: need(c.exponent, "exponent")?,
            },
            "lorentzian" => Family::Lorentzian {
                width: need(c.width, "width")?,
            },
            "constant" => Family::Constant,
            "super_ohmic_gaussian" => Family::SuperOhmicGaussian {
                exponent: need(c.exponent, "exponent")?,
            },
            other => {
                return Err(Error::schema(
                    "family",
                    format!(
                        "unknown family `{other}` (expected power_law, lorentzian, constant or super_ohmic_gaussian)"
                    ),
                ))
            }
        };
        let spec = NoiseSpectrum::new(family, c.amplitude, c.cutoff)?;
        Ok(spec.with_label(c.label.unwrap_or_default()))
    }
}

impl From<NoiseSpectrum> for SpectrumConfig {
    fn from(s: NoiseSpectrum) -> Self {
        let (exponent, width) = match s.family {
            Family::PowerLaw { exponent } | Family::SuperOhmicGaussian { exponent } => {
                (Some(exponent), None)
            }
            Family::Lorentzian { width } => (None, Some(width)),
            Family::Constant => (None, None),
        };
        SpectrumConfig {
            family: s.family.name().to_string(),
            exponent,
            width,
            amplitude: s.amplitude,
            cutoff: s.cutoff,
            label: if s.label.is_empty() {
                None
            } else {
                Some(s.label)
            },
        }
    }
}

/// Parse one spectrum from JSON.
pub fn parse_spectrum(text: &str) -> Result<NoiseSpectrum> {
    let config: SpectrumConfig = serde_json::from_str(text)?;
    NoiseSpectrum::try_from(config)
}

/// Serialize one spectrum to JSON.
pub fn spectrum_to_json(spec: &NoiseSpectrum) -> String {
    serde_json::to_string(spec).expect("spectrum serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn evaluate_examples() {
        let s = NoiseSpectrum::ohmic(1.0, 1.0).unwrap();
        assert_eq!(s.evaluate(0.5).unwrap(), 0.5);
        assert_eq!(s.evaluate(1.5).unwrap(), 0.0);
        assert_eq!(s.evaluate(1.0).unwrap(), 1.0);
        assert_eq!(s.evaluate(-0.5).unwrap(), 0.0);
        let l = NoiseSpectrum::lorentzian(1.0, 0.2).unwrap();
        assert_eq!(l.evaluate(0.0).unwrap(), 0.2);
        let g = NoiseSpectrum::super_ohmic_gaussian(3.0, 1.0).unwrap();
        assert_relative_eq!(g.evaluate(1.0).unwrap(), (-1.0f64).exp(), epsilon = 1e-15);
        assert!(s.evaluate(f64::NAN).is_err());
    }

    #[test]
    fn parse_examples() {
        let s = parse_spectrum(r#"{"family":"power_law","exponent":1,"amplitude":2,"cutoff":2}"#)
            .unwrap();
        assert_eq!(s, NoiseSpectrum::ohmic(2.0, 2.0).unwrap());
        let l = parse_spectrum(r#"{"family":"lorentzian","width":1,"amplitude":0.2}"#).unwrap();
        assert_eq!(l.cutoff(), None);
        let err =
            parse_spectrum(r#"{"family":"power_law","exponent":1,"amplitude":-1}"#).unwrap_err();
        assert!(matches!(err, Error::Schema { ref field, .. } if field == "amplitude"));
        let err = parse_spectrum(r#"{"family":"pink","amplitude":1}"#).unwrap_err();
        assert!(matches!(err, Error::Schema { ref field, .. } if field == "family"));
        let err = parse_spectrum(r#"{"family":"constant","amplitude":1,"cutoff":0}"#).unwrap_err();
        assert!(matches!(err, Error::Schema { ref field, .. } if field == "cutoff"));
    }

    #[test]
    fn round_trip_through_json() {
        for name in PRESETS {
            let t = SpectrumTriple::preset(name).unwrap();
            let back = SpectrumTriple::from_json(&t.to_json()).unwrap();
            assert_eq!(t, back, "{name}");
        }
    }

    #[test]
    fn triple_errors_name_parent_field() {
        let text = r#"{"s1":{"family":"constant","amplitude":1,"cutoff":1},
                       "s2":{"family":"constant","amplitude":1,"cutoff":1},
                       "s3":{"family":"constant","amplitude":-1,"cutoff":1}}"#;
        let err = SpectrumTriple::from_json(text).unwrap_err();
        assert!(matches!(err, Error::Schema { ref field, .. } if field == "s3.amplitude"));
    }

    #[test]
    fn correlation_constant_at_zero_lag() {
        let c = NoiseSpectrum::constant(1.0, 3.0).unwrap();
        assert_relative_eq!(
            c.correlation(0.0, 1.0 / PI).unwrap(),
            3.0 / PI,
            epsilon = 1e-13
        );
    }

    #[test]
    fn lorentzian_correlation_matches_closed_form() {
        let l = NoiseSpectrum::lorentzian(1.0, 0.2).unwrap();
        for tau in [0.0, 0.3, 1.0, 2.5, -0.7] {
            let v = l.correlation(tau, 1.0 / PI).unwrap();
            let expect = 0.1 * (-tau.abs()).exp();
            assert!((v - expect).abs() < 1e-10, "tau {tau}: {v} vs {expect}");
        }
    }

    #[test]
    fn unbounded_correlations_are_rejected() {
        let c = NoiseSpectrum::power_law(0.0, 1.0, None).unwrap();
        assert!(c.correlation(0.5, 1.0).is_err());
        let f = NoiseSpectrum::power_law(-1.0, 1.0, Some(10.0)).unwrap();
        assert!(f.correlation(0.0, 1.0).is_err());
    }

    #[test]
    fn lorentzian_truncation_bound_holds() {
        let l = NoiseSpectrum::lorentzian(1.0, 0.2).unwrap();
        let omega = l.integration_limit(8).unwrap();
        assert!(0.2 * 18.0f64.powi(2) / (3.0 * omega.powi(3)) <= TAIL_BOUND * 1.0000001);
        assert!(omega < 1e5);
    }

    #[test]
    fn slowly_decaying_spectrum_cannot_be_truncated() {
        let c = NoiseSpectrum::power_law(0.0, 1.0, None).unwrap();
        assert!(matches!(c.integration_limit(4), Err(Error::Numeric { .. })));
    }

    #[test]
    fn gaussian_truncation_is_modest() {
        let g = NoiseSpectrum::super_ohmic_gaussian(3.0, 1.0).unwrap();
        let omega = g.integration_limit(24).unwrap();
        assert!(omega > 4.0 && omega < 8.0, "{omega}");
    }

    #[test]
    fn power_law_without_cutoff_needs_small_exponent() {
        assert!(NoiseSpectrum::power_law(1.0, 1.0, None).is_err());
        assert!(NoiseSpectrum::power_law(-3.0, 1.0, Some(1.0)).is_err());
    }
}
