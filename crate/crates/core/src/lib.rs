// Copyright 2026 ddopt Contributors
// SPDX-License-Identifier: Apache-2.0

//! Filter-function analysis and pulse-timing optimization for two qubits
//! under pure dephasing.
//!
//! Each qubit sees its own classical Gaussian noise `f1`, `f2`, and the pair
//! shares a fluctuating coupling `f3 σz1 σz2`. Instantaneous π pulses on
//! either qubit flip the corresponding switch functions; the three decay
//! exponents
//!
//! ```text
//! Γ_i = ∫_0^∞ |y(ω)|² S_i(ω) / ω² dω
//! ```
//!
//! use the filter function of the qubit-1 pulses, the qubit-2 pulses and
//! the merged train respectively. The figure of merit is
//! `Φ = 3 - (e^{-Γ1-Γ2} + e^{-Γ1-Γ3} + e^{-Γ2-Γ3})`, four times the
//! state-averaged infidelity.
//!
//! Modules, bottom up: [`spectra`], [`sequences`], [`filters`],
//! [`decoherence`], [`optimizer`], [`mc_oracle`] and the table presets in
//! [`reproduce`].

pub mod dd;
pub mod decoherence;
pub mod error;
pub mod filters;
pub mod mc_oracle;
pub mod optimizer;
pub mod quadrature;
pub mod reproduce;
pub mod sequences;
pub mod spectra;

pub use decoherence::{
    evolve, free_decay_gamma, gamma, gammas, mean_fidelity, performance_phi, phi_gradient,
    trace_fidelity, AveragedDensityMatrix, GammaTriple, TwoQubitState,
};
pub use error::{Error, Result};
pub use filters::{filter_sq, filter_sq_gradient, filter_value, FilterInput};
pub use optimizer::{
    optimize_allocation, optimize_locations, scan_m, OptimizationResult, OptimizerConfig,
};
pub use sequences::{
    allocations, cpmg_times, equal_spaced, nested_udd, symmetrize, udd_times, Allocation, Pulse,
    PulseSequence, Qubit,
};
pub use spectra::{parse_spectrum, NoiseSpectrum, SpectrumTriple};
