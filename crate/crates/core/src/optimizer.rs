// Copyright 2026 ddopt Contributors
// SPDX-License-Identifier: Apache-2.0

//! Local minimization of Φ over pulse times, and the search over pulse
//! allocations.
//!
//! Pulses are tracked by ordinal: pulse `k` keeps its target and its sign in
//! the switch functions even if its time moves past a neighbour. Ordering is
//! not enforced during descent; each result reports whether the final times
//! are still in ordinal order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decoherence::{evaluate_layout, GammaCache, GammaTriple, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::sequences::{self, Allocation, PulseSequence, Qubit};
use crate::spectra::SpectrumTriple;

/// Search direction rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Negative projected gradient.
    SteepestDescent,
    /// BFGS inverse-Hessian direction, reset to steepest descent whenever
    /// it fails to point downhill.
    Bfgs,
}

/// Starting points for each allocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialGuess {
    EqualSpaced,
    NestedUdd,
    User,
}

impl InitialGuess {
    pub fn label(self) -> &'static str {
        match self {
            InitialGuess::EqualSpaced => "equal_spaced",
            InitialGuess::NestedUdd => "nested_udd",
            InitialGuess::User => "user",
        }
    }
}

/// Optimizer settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub max_iterations: usize,
    /// Converged once every projected gradient component is below this.
    pub gradient_tolerance: f64,
    /// Backtracking factor in `(0, 1)`.
    pub step_shrink: f64,
    /// Armijo constant in `(0, 1)`.
    pub sufficient_decrease: f64,
    /// Largest coordinate move of a trial step.
    pub max_step: f64,
    /// Smallest gap between consecutive ordinals for a valid ordering.
    pub min_time_gap: f64,
    /// Optimize the first half only and mirror it.
    pub symmetric: bool,
    pub initial_guesses: Vec<InitialGuess>,
    /// Per-ordinal times for [`InitialGuess::User`].
    pub user_guess: Option<Vec<f64>>,
    pub quadrature_tol: f64,
    pub seed: u64,
    pub method: Method,
    /// Extra starts from sorted uniform random times.
    pub random_restarts: usize,
    /// Times are clipped to `[clip_epsilon, 1 - clip_epsilon]`.
    pub clip_epsilon: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_iterations: 500,
            gradient_tolerance: 1e-9,
            step_shrink: 0.5,
            sufficient_decrease: 1e-4,
            max_step: 0.05,
            min_time_gap: 0.0,
            symmetric: false,
            initial_guesses: vec![InitialGuess::EqualSpaced, InitialGuess::NestedUdd],
            user_guess: None,
            quadrature_tol: DEFAULT_TOL,
            seed: 0,
            method: Method::Bfgs,
            random_restarts: 0,
            clip_epsilon: 1e-6,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        if self.max_iterations == 0 {
            return Err(Error::input("max_iterations must be at least 1"));
        }
        if !(self.gradient_tolerance > 0.0) || !(self.quadrature_tol > 0.0) {
            return Err(Error::input("tolerances must be positive"));
        }
        if !open_unit(self.step_shrink) || !open_unit(self.sufficient_decrease) {
            return Err(Error::input(
                "step_shrink and sufficient_decrease must lie in (0, 1)",
            ));
        }
        if !(self.max_step > 0.0) || !(self.min_time_gap >= 0.0) {
            return Err(Error::input(
                "max_step must be positive and min_time_gap non-negative",
            ));
        }
        if !(self.clip_epsilon > 0.0 && self.clip_epsilon < 0.25) {
            return Err(Error::input("clip_epsilon must lie in (0, 0.25)"));
        }
        if self.initial_guesses.is_empty() && self.random_restarts == 0 {
            return Err(Error::input("at least one initial guess is required"));
        }
        if self.initial_guesses.contains(&InitialGuess::User) && self.user_guess.is_none() {
            return Err(Error::input(
                "the user initial guess needs user_guess times",
            ));
        }
        Ok(())
    }
}

/// Outcome of one descent from one starting point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartRecord {
    pub guess: String,
    pub initial_phi: f64,
    pub phi: f64,
    pub converged: bool,
    pub ordering_valid: bool,
    pub iterations: usize,
}

/// Best result for one allocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub allocation: Allocation,
    /// Pulse times in ordinal order.
    pub times: Vec<f64>,
    pub targets: Vec<Qubit>,
    pub phi: f64,
    pub gammas: GammaTriple,
    pub converged: bool,
    pub ordering_valid: bool,
    pub initial_guess_used: String,
    pub iterations: usize,
    /// Largest projected gradient component at the returned point.
    pub gradient_max: f64,
    /// Every descent that was run, in start order.
    pub starts: Vec<StartRecord>,
}

impl OptimizationResult {
    /// The physical pulse sequence. Only meaningful when `ordering_valid`.
    pub fn sequence(&self) -> Result<PulseSequence> {
        PulseSequence::from_layout(&self.times, &self.targets)
    }

    /// `ordinal,t,qubit` rows for timing plots.
    pub fn timings_csv(&self) -> String {
        let mut out = String::from("index,t,qubit\n");
        for (k, (t, q)) in self.times.iter().zip(&self.targets).enumerate() {
            out.push_str(&format!("{},{},{}\n", k + 1, t, q.index()));
        }
        out
    }
}

/// True if `times` is non-decreasing with consecutive gaps of at least `gap`.
pub fn ordering_valid(times: &[f64], gap: f64) -> bool {
    times.windows(2).all(|w| w[1] - w[0] >= gap)
}

/// `(inner, outer)` with `(inner + 1)(outer + 1) = total + 1`, both at least
/// one, and `|inner - outer|` smallest (ties go to the larger inner layer).
pub fn nested_shape(total: usize) -> Option<(usize, usize)> {
    let n = total + 1;
    let mut best: Option<(usize, usize)> = None;
    for a in 2..n {
        if n.is_multiple_of(a) {
            let (inner, outer) = (n / a - 1, a - 1);
            if inner == 0 || outer == 0 {
                continue;
            }
            let better = match best {
                None => true,
                Some((bi, bo)) => {
                    let d = inner.abs_diff(outer);
                    let bd = bi.abs_diff(bo);
                    d < bd || (d == bd && inner > bi)
                }
            };
            if better {
                best = Some((inner, outer));
            }
        }
    }
    best
}

/// Sorted times of the nested-UDD guess for `total` pulses, or UDD(total)
/// when no two-layer shape fits.
pub fn nested_guess_times(total: usize) -> Vec<f64> {
    match nested_shape(total) {
        Some((inner, outer)) => sequences::nested_udd(inner, outer).times(),
        None => sequences::udd_times(total),
    }
}

/// Maps optimization variables to per-ordinal times.
struct Layout {
    total: usize,
    symmetric: bool,
    lower: f64,
    upper: f64,
}

impl Layout {
    fn new(total: usize, cfg: &OptimizerConfig) -> Self {
        Layout {
            total,
            symmetric: cfg.symmetric,
            lower: cfg.clip_epsilon,
            upper: if cfg.symmetric {
                0.5
            } else {
                1.0 - cfg.clip_epsilon
            },
        }
    }

    fn dim(&self) -> usize {
        if self.symmetric {
            self.total / 2
        } else {
            self.total
        }
    }

    fn expand(&self, u: &[f64]) -> Vec<f64> {
        if !self.symmetric {
            return u.to_vec();
        }
        let mut x = vec![0.5; self.total];
        for (k, &v) in u.iter().enumerate() {
            x[k] = v;
            x[self.total - 1 - k] = 1.0 - v;
        }
        x
    }

    fn reduce(&self, x: &[f64]) -> Vec<f64> {
        x[..self.dim()].to_vec()
    }

    fn pull_back(&self, gx: &[f64]) -> Vec<f64> {
        if !self.symmetric {
            return gx.to_vec();
        }
        (0..self.dim())
            .map(|k| gx[k] - gx[self.total - 1 - k])
            .collect()
    }

    fn clip(&self, u: &mut [f64]) {
        for v in u.iter_mut() {
            *v = v.clamp(self.lower, self.upper);
        }
    }

    /// Zero the components that would push a variable through its bound.
    fn project(&self, u: &[f64], g: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(g)
            .map(|(&v, &gk)| {
                if (v <= self.lower && gk > 0.0) || (v >= self.upper && gk < 0.0) {
                    0.0
                } else {
                    gk
                }
            })
            .collect()
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Descent {
    x: Vec<f64>,
    phi: f64,
    gammas: GammaTriple,
    gradient_max: f64,
    converged: bool,
    iterations: usize,
    /// Last iterate whose times were in ordinal order.
    last_valid: Option<(Vec<f64>, f64, GammaTriple, f64)>,
}

/// Iterations over which progress is measured for the stall stop.
const STALL_WINDOW: usize = 10;
/// Relative decrease of Φ over `STALL_WINDOW` iterations below which the
/// descent stops without claiming convergence.
const STALL_RELATIVE: f64 = 1e-13;

fn descend(
    x0: &[f64],
    targets: &[Qubit],
    spectra: &SpectrumTriple,
    cfg: &OptimizerConfig,
    layout: &Layout,
) -> Result<Descent> {
    let objective = |u: &[f64]| -> Result<(f64, Vec<f64>, GammaTriple)> {
        let x = layout.expand(u);
        let e = evaluate_layout(&x, targets, spectra, cfg.quadrature_tol, true)?;
        Ok((e.phi, layout.pull_back(&e.gradient), e.gammas))
    };
    let mut u = layout.reduce(x0);
    layout.clip(&mut u);
    let (mut f, mut g, mut gammas) = objective(&u)?;
    let n = u.len();
    let mut h_inv: Vec<f64> = identity(n);
    let mut fresh = true;
    let mut iterations = 0;
    let mut converged = false;
    let valid_now = |u: &[f64]| ordering_valid(&layout.expand(u), cfg.min_time_gap);
    let mut last_valid = None;
    let mut pg = layout.project(&u, &g);
    let mut history = vec![f];
    loop {
        if valid_now(&u) {
            last_valid = Some((layout.expand(&u), f, gammas, max_abs(&pg)));
        }
        if max_abs(&pg) <= cfg.gradient_tolerance {
            converged = true;
            break;
        }
        if iterations >= cfg.max_iterations {
            break;
        }
        let mut d: Vec<f64> = match cfg.method {
            Method::SteepestDescent => pg.iter().map(|v| -v).collect(),
            Method::Bfgs => mat_vec(&h_inv, &pg, n).into_iter().map(|v| -v).collect(),
        };
        if dot(&d, &pg) >= 0.0 {
            h_inv = identity(n);
            fresh = true;
            d = pg.iter().map(|v| -v).collect();
        }
        for (k, dk) in d.iter_mut().enumerate() {
            if (u[k] <= layout.lower && *dk < 0.0) || (u[k] >= layout.upper && *dk > 0.0) {
                *dk = 0.0;
            }
        }
        let dmax = max_abs(&d);
        if dmax == 0.0 {
            break;
        }
        let mut alpha = cfg.max_step / dmax;
        let accepted = loop {
            let mut trial: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + alpha * b).collect();
            layout.clip(&mut trial);
            let s: Vec<f64> = trial.iter().zip(&u).map(|(a, b)| a - b).collect();
            if max_abs(&s) == 0.0 {
                break None;
            }
            let (ft, gt, gam) = objective(&trial)?;
            if ft <= f + cfg.sufficient_decrease * dot(&g, &s) {
                break Some((trial, s, ft, gt, gam));
            }
            alpha *= cfg.step_shrink;
            if alpha * dmax < 1e-15 {
                break None;
            }
        };
        let Some((trial, s, ft, gt, gam)) = accepted else {
            break;
        };
        if cfg.method == Method::Bfgs {
            let y: Vec<f64> = gt.iter().zip(&g).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 1e-300 && sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
                if fresh {
                    let scale = sy / dot(&y, &y);
                    h_inv = identity(n).into_iter().map(|v| v * scale).collect();
                    fresh = false;
                }
                bfgs_update(&mut h_inv, &s, &y, sy, n);
            }
        }
        u = trial;
        f = ft;
        g = gt;
        gammas = gam;
        pg = layout.project(&u, &g);
        iterations += 1;
        history.push(f);
        if history.len() > STALL_WINDOW {
            let old = history[history.len() - 1 - STALL_WINDOW];
            if old - f <= STALL_RELATIVE * f.abs().max(f64::MIN_POSITIVE)
                && max_abs(&pg) > cfg.gradient_tolerance
            {
                break;
            }
        }
    }
    Ok(Descent {
        x: layout.expand(&u),
        phi: f,
        gammas,
        gradient_max: max_abs(&pg),
        converged,
        iterations,
        last_valid,
    })
}

fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

fn mat_vec(m: &[f64], v: &[f64], n: usize) -> Vec<f64> {
    (0..n).map(|i| dot(&m[i * n..(i + 1) * n], v)).collect()
}

/// `H <- (I - ρ s yᵀ) H (I - ρ y sᵀ) + ρ s sᵀ`.
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64, n: usize) {
    let rho = 1.0 / sy;
    let hy = mat_vec(h, y, n);
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] +=
                -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}

/// Minimize Φ over the times of a fixed allocation, from every configured
/// starting point, and keep the best.
pub fn optimize_locations(
    alloc: &Allocation,
    spectra: &SpectrumTriple,
    cfg: &OptimizerConfig,
) -> Result<OptimizationResult> {
    optimize_with_cache(alloc, spectra, cfg, &GammaCache::new(), 0)
}

fn starting_points(
    alloc: &Allocation,
    cfg: &OptimizerConfig,
    index: u64,
) -> Result<Vec<(String, Vec<f64>)>> {
    let total = alloc.total;
    let mut starts = Vec::new();
    for g in &cfg.initial_guesses {
        let times = match g {
            InitialGuess::EqualSpaced => {
                (1..=total).map(|j| j as f64 / (total + 1) as f64).collect()
            }
            InitialGuess::NestedUdd => nested_guess_times(total),
            InitialGuess::User => {
                let t = cfg.user_guess.clone().expect("validated");
                if t.len() != total {
                    return Err(Error::input(format!(
                        "user guess has {} times, allocation has {total}",
                        t.len()
                    )));
                }
                t
            }
        };
        starts.push((g.label().to_string(), times));
    }
    for r in 0..cfg.random_restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(index.wrapping_mul(1 << 20) + r as u64);
        let mut t: Vec<f64> = (0..total).map(|_| rng.gen_range(0.0..1.0)).collect();
        t.sort_by(f64::total_cmp);
        if cfg.symmetric {
            let layout = Layout::new(total, cfg);
            let mut u: Vec<f64> = t.iter().take(layout.dim()).map(|v| 0.5 * v).collect();
            u.sort_by(f64::total_cmp);
            t = layout.expand(&u);
        }
        starts.push((format!("random_{r}"), t));
    }
    Ok(starts)
}

fn optimize_with_cache(
    alloc: &Allocation,
    spectra: &SpectrumTriple,
    cfg: &OptimizerConfig,
    cache: &GammaCache,
    index: u64,
) -> Result<OptimizationResult> {
    cfg.validate()?;
    if cfg.symmetric && !alloc.is_symmetric() {
        return Err(Error::input(
            "symmetric mode requires a mirror-symmetric allocation",
        ));
    }
    let targets = alloc.targets();
    let layout = Layout::new(alloc.total, cfg);
    if alloc.total == 0 {
        let g = cache.gammas_layout(&[], &[], spectra, cfg.quadrature_tol)?;
        let phi = crate::decoherence::performance_phi(&g);
        return Ok(OptimizationResult {
            allocation: alloc.clone(),
            times: Vec::new(),
            targets,
            phi,
            gammas: g,
            converged: true,
            ordering_valid: true,
            initial_guess_used: cfg
                .initial_guesses
                .first()
                .map_or("none", |g| g.label())
                .to_string(),
            iterations: 0,
            gradient_max: 0.0,
            starts: Vec::new(),
        });
    }
    let mut records = Vec::new();
    let mut best_valid: Option<OptimizationResult> = None;
    let mut fallback: Option<OptimizationResult> = None;
    let better = |cand: &OptimizationResult, cur: &Option<OptimizationResult>| match cur {
        None => true,
        Some(c) => cand.phi < c.phi,
    };
    for (label, x0) in starting_points(alloc, cfg, index)? {
        let mut u0 = layout.reduce(&x0);
        layout.clip(&mut u0);
        let x0 = layout.expand(&u0);
        let initial = cache.gammas_layout(&x0, &targets, spectra, cfg.quadrature_tol)?;
        let initial_phi = crate::decoherence::performance_phi(&initial);
        let run = descend(&x0, &targets, spectra, cfg, &layout)?;
        let valid = ordering_valid(&run.x, cfg.min_time_gap);
        records.push(StartRecord {
            guess: label.clone(),
            initial_phi,
            phi: run.phi,
            converged: run.converged,
            ordering_valid: valid,
            iterations: run.iterations,
        });
        if valid {
            let cand = OptimizationResult {
                allocation: alloc.clone(),
                times: run.x,
                targets: targets.clone(),
                phi: run.phi,
                gammas: run.gammas,
                converged: run.converged,
                ordering_valid: true,
                initial_guess_used: label,
                iterations: run.iterations,
                gradient_max: run.gradient_max,
                starts: Vec::new(),
            };
            if better(&cand, &best_valid) {
                best_valid = Some(cand);
            }
        } else if let Some((x, phi, gammas, gmax)) = run.last_valid {
            let cand = OptimizationResult {
                allocation: alloc.clone(),
                times: x,
                targets: targets.clone(),
                phi,
                gammas,
                converged: false,
                ordering_valid: true,
                initial_guess_used: label,
                iterations: run.iterations,
                gradient_max: gmax,
                starts: Vec::new(),
            };
            if better(&cand, &fallback) {
                fallback = Some(cand);
            }
        }
    }
    let mut result = match (best_valid, fallback) {
        (Some(b), Some(f)) if f.phi < b.phi => f,
        (Some(b), _) => b,
        (None, Some(f)) => f,
        (None, None) => {
            return Err(Error::Numeric {
                message: "no start produced a correctly ordered sequence".into(),
                estimate: records.iter().map(|r| r.phi).fold(f64::INFINITY, f64::min),
                achieved_error: f64::NAN,
            })
        }
    };
    result.starts = records;
    Ok(result)
}

/// Every allocation tried for one `(total, m)`, with the ranking.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AllocationSearch {
    pub total: usize,
    pub m: usize,
    /// Best result; ties within `1e-12` go to the lexicographically
    /// smallest allocation.
    pub best: OptimizationResult,
    /// Up to ten best results, best first.
    pub leaderboard: Vec<OptimizationResult>,
    /// One result per allocation in enumeration order.
    pub results: Vec<OptimizationResult>,
    /// Descents whose final times left ordinal order.
    pub ordering_violations: usize,
}

/// Leaderboard length.
pub const LEADERBOARD: usize = 10;

/// Optimize every allocation of `m` pulses to qubit 2 (only mirror-symmetric
/// ones when `cfg.symmetric`) and rank them.
pub fn search_allocations(
    total: usize,
    m: usize,
    spectra: &SpectrumTriple,
    cfg: &OptimizerConfig,
) -> Result<AllocationSearch> {
    cfg.validate()?;
    let allocs: Vec<Allocation> = if cfg.symmetric {
        sequences::symmetric_allocations(total, m)?
    } else {
        sequences::allocations(total, m)?.collect()
    };
    if allocs.is_empty() {
        return Err(Error::input(format!(
            "no mirror-symmetric allocation puts {m} of {total} pulses on qubit 2"
        )));
    }
    let cache = GammaCache::new();
    let results: Vec<OptimizationResult> = allocs
        .par_iter()
        .enumerate()
        .map(|(i, a)| optimize_with_cache(a, spectra, cfg, &cache, i as u64))
        .collect::<Result<Vec<_>>>()?;
    let ordering_violations = results
        .iter()
        .flat_map(|r| &r.starts)
        .filter(|s| !s.ordering_valid)
        .count();
    let mut ranked: Vec<&OptimizationResult> =
        results.iter().filter(|r| r.ordering_valid).collect();
    ranked.sort_by(|a, b| {
        a.phi
            .total_cmp(&b.phi)
            .then_with(|| a.allocation.cmp(&b.allocation))
    });
    let mut best = ranked[0];
    for r in &ranked[1..] {
        if r.phi - ranked[0].phi <= 1e-12 && r.allocation < best.allocation {
            best = r;
        }
    }
    Ok(AllocationSearch {
        total,
        m,
        best: best.clone(),
        leaderboard: ranked
            .iter()
            .take(LEADERBOARD)
            .map(|r| (*r).clone())
            .collect(),
        results: results.clone(),
        ordering_violations,
    })
}

/// Best ordering-valid result over all allocations of `m` qubit-2 pulses.
pub fn optimize_allocation(
    total: usize,
    m: usize,
    spectra: &SpectrumTriple,
    cfg: &OptimizerConfig,
) -> Result<OptimizationResult> {
    Ok(search_allocations(total, m, spectra, cfg)?.best)
}

/// Results of [`scan_m`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MScan {
    /// Indexed by `m`; `None` where no allocation exists (odd `m` with an
    /// even total in symmetric mode).
    pub results: Vec<Option<OptimizationResult>>,
    /// `m` of the overall best result.
    pub best_m: usize,
}

/// [`optimize_allocation`] for every `m` in `0..=total`.
pub fn scan_m(total: usize, spectra: &SpectrumTriple, cfg: &OptimizerConfig) -> Result<MScan> {
    let mut results = Vec::with_capacity(total + 1);
    for m in 0..=total {
        let feasible = !cfg.symmetric || !sequences::symmetric_allocations(total, m)?.is_empty();
        results.push(if feasible {
            Some(optimize_allocation(total, m, spectra, cfg)?)
        } else {
            None
        });
    }
    let best_m = results
        .iter()
        .enumerate()
        .filter_map(|(m, r)| r.as_ref().map(|r| (m, r.phi)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|(m, _)| m)
        .expect("m = 0 is always feasible");
    Ok(MScan { results, best_m })
}
