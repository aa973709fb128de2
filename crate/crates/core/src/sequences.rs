// Copyright 2026 ddopt Contributors
// SPDX-License-Identifier: Apache-2.0

//! Two-qubit pulse sequences and the canonical timing families.

use serde::{Deserialize, Serialize};

use crate::dd::{self, Dd};
use crate::error::{Error, Result};

/// Which qubit a π pulse acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Qubit {
    Q1,
    Q2,
}

impl Qubit {
    pub fn index(self) -> u8 {
        match self {
            Qubit::Q1 => 1,
            Qubit::Q2 => 2,
        }
    }

    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            1 => Ok(Qubit::Q1),
            2 => Ok(Qubit::Q2),
            _ => Err(Error::input(format!("qubit must be 1 or 2, got {i}"))),
        }
    }
}

/// An instantaneous π pulse at normalized time `time`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pulse {
    pub time: f64,
    pub target: Qubit,
}

impl Pulse {
    pub fn new(time: f64, target: Qubit) -> Self {
        Pulse { time, target }
    }
}

/// A time-ordered list of pulses with every time strictly inside `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PulseSequence {
    pulses: Vec<Pulse>,
}

impl PulseSequence {
    /// Validate and sort. Ties are ordered Q1 before Q2, then by input order.
    pub fn new(mut pulses: Vec<Pulse>) -> Result<Self> {
        for (i, p) in pulses.iter().enumerate() {
            if !(p.time.is_finite() && p.time > 0.0 && p.time < 1.0) {
                return Err(Error::input(format!(
                    "pulse {} has time {} outside the open interval (0, 1)",
                    i + 1,
                    p.time
                )));
            }
        }
        pulses.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.target.cmp(&b.target)));
        Ok(PulseSequence { pulses })
    }

    pub fn empty() -> Self {
        PulseSequence::default()
    }

    /// Pair per-ordinal times with targets.
    pub fn from_layout(times: &[f64], targets: &[Qubit]) -> Result<Self> {
        if times.len() != targets.len() {
            return Err(Error::input("times and targets differ in length"));
        }
        Self::new(
            times
                .iter()
                .zip(targets)
                .map(|(&t, &q)| Pulse::new(t, q))
                .collect(),
        )
    }

    pub fn pulses(&self) -> &[Pulse] {
        &self.pulses
    }

    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.pulses.iter().map(|p| p.time).collect()
    }

    pub fn targets(&self) -> Vec<Qubit> {
        self.pulses.iter().map(|p| p.target).collect()
    }

    pub fn count(&self, q: Qubit) -> usize {
        self.pulses.iter().filter(|p| p.target == q).count()
    }

    /// 1-based ordinals of the Q2 pulses.
    pub fn q2_ordinals(&self) -> Vec<usize> {
        self.pulses
            .iter()
            .enumerate()
            .filter(|(_, p)| p.target == Qubit::Q2)
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// Q2 ordinals restricted to the first half, `j <= ceil(total / 2)`.
    pub fn first_half_q2_ordinals(&self) -> Vec<usize> {
        let half = self.len().div_ceil(2);
        self.q2_ordinals()
            .into_iter()
            .filter(|&j| j <= half)
            .collect()
    }

    pub fn allocation(&self) -> Allocation {
        Allocation {
            total: self.len(),
            q2_positions: self.q2_ordinals(),
        }
    }

    /// Mirror every pulse through `t = 1/2`, keeping targets.
    pub fn reflect(&self) -> PulseSequence {
        let mut pulses: Vec<Pulse> = self
            .pulses
            .iter()
            .rev()
            .map(|p| Pulse::new(1.0 - p.time, p.target))
            .collect();
        pulses.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.target.cmp(&b.target)));
        PulseSequence { pulses }
    }

    /// Switch-function flip times for qubit 1, qubit 2 and the product.
    pub fn projections(&self) -> Projections {
        let pick = |q: Qubit| {
            self.pulses
                .iter()
                .filter(|p| p.target == q)
                .map(|p| p.time)
                .collect()
        };
        Projections {
            q1: pick(Qubit::Q1),
            q2: pick(Qubit::Q2),
            all: self.times(),
        }
    }

    /// Parse `{"pulses": [{"t": .., "q": 1|2}, ..]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: SequenceFile = serde_json::from_str(text)?;
        let mut pulses = Vec::with_capacity(file.pulses.len());
        for (i, p) in file.pulses.iter().enumerate() {
            if !(p.t.is_finite() && p.t > 0.0 && p.t < 1.0) {
                return Err(Error::schema(
                    format!("pulses[{i}].t"),
                    format!("{} is outside (0, 1)", p.t),
                ));
            }
            let target = Qubit::from_index(p.q).map_err(|_| {
                Error::schema(format!("pulses[{i}].q"), format!("{} is not 1 or 2", p.q))
            })?;
            pulses.push(Pulse::new(p.t, target));
        }
        Self::new(pulses)
    }

    pub fn to_json(&self) -> String {
        let file = SequenceFile {
            pulses: self
                .pulses
                .iter()
                .map(|p| PulseWire {
                    t: p.time,
                    q: p.target.index(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("sequence serializes")
    }

    /// `index,t,qubit` rows with a header; index is 1-based.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,t,qubit\n");
        for (i, p) in self.pulses.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", i + 1, p.time, p.target.index()));
        }
        out
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SequenceFile {
    pulses: Vec<PulseWire>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PulseWire {
    t: f64,
    q: u8,
}

/// Flip times of the three switch functions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Projections {
    pub q1: Vec<f64>,
    pub q2: Vec<f64>,
    pub all: Vec<f64>,
}

/// Which ordinals (1-based) of a `total`-pulse train act on qubit 2.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Allocation {
    pub total: usize,
    pub q2_positions: Vec<usize>,
}

impl Allocation {
    pub fn new(total: usize, mut q2_positions: Vec<usize>) -> Result<Self> {
        q2_positions.sort_unstable();
        if q2_positions.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::input("allocation positions must be distinct"));
        }
        if q2_positions.iter().any(|&j| j == 0 || j > total) {
            return Err(Error::input(format!(
                "allocation positions must lie in [1, {total}]"
            )));
        }
        Ok(Allocation {
            total,
            q2_positions,
        })
    }

    pub fn m(&self) -> usize {
        self.q2_positions.len()
    }

    pub fn n(&self) -> usize {
        self.total - self.m()
    }

    pub fn targets(&self) -> Vec<Qubit> {
        let mut t = vec![Qubit::Q1; self.total];
        for &j in &self.q2_positions {
            t[j - 1] = Qubit::Q2;
        }
        t
    }

    /// The allocation obtained by reversing the pulse train.
    pub fn mirrored(&self) -> Allocation {
        let mut q2: Vec<usize> = self
            .q2_positions
            .iter()
            .map(|&j| self.total + 1 - j)
            .collect();
        q2.sort_unstable();
        Allocation {
            total: self.total,
            q2_positions: q2,
        }
    }

    /// True when the allocation is its own mirror image.
    pub fn is_symmetric(&self) -> bool {
        self.mirrored() == *self
    }

    /// Q2 ordinals in the first half, `j <= ceil(total / 2)`.
    pub fn first_half(&self) -> Vec<usize> {
        let half = self.total.div_ceil(2);
        self.q2_positions
            .iter()
            .copied()
            .filter(|&j| j <= half)
            .collect()
    }
}

/// UDD timings `sin²(jπ / (2N + 2))`, `j = 1..N`.
pub fn udd_times(n: usize) -> Vec<f64> {
    udd_times_extended(n).into_iter().map(|d| d.hi).collect()
}

/// UDD timings to double-double precision.
pub fn udd_times_extended(n: usize) -> Vec<Dd> {
    let denom = (2 * n + 2) as f64;
    (1..=n)
        .map(|j| {
            let s = dd::PI.mul_f64(j as f64).div_f64(denom).sin();
            s * s
        })
        .collect()
}

/// CPMG timings `(2j - 1) / (2N)`, `j = 1..N`.
pub fn cpmg_times(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|j| (2 * j - 1) as f64 / (2 * n) as f64)
        .collect()
}

/// Two-layer nested UDD: `outer` UDD pulses on qubit 2, and an `inner`-pulse
/// UDD on qubit 1 inside each of the `outer + 1` intervals they define.
pub fn nested_udd(inner: usize, outer: usize) -> PulseSequence {
    let outer_times = udd_times(outer);
    let inner_times = udd_times(inner);
    let mut edges = Vec::with_capacity(outer + 2);
    edges.push(0.0);
    edges.extend_from_slice(&outer_times);
    edges.push(1.0);
    let mut pulses = Vec::with_capacity(outer + inner * (outer + 1));
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        pulses.extend(
            inner_times
                .iter()
                .map(|&u| Pulse::new(a + (b - a) * u, Qubit::Q1)),
        );
    }
    pulses.extend(outer_times.iter().map(|&t| Pulse::new(t, Qubit::Q2)));
    PulseSequence::new(pulses).expect("nested UDD times lie in (0, 1)")
}

/// `total` pulses at `j / (total + 1)` with targets from `alloc`.
pub fn equal_spaced(total: usize, alloc: &Allocation) -> Result<PulseSequence> {
    if alloc.total != total {
        return Err(Error::input(format!(
            "allocation is for {} pulses, expected {total}",
            alloc.total
        )));
    }
    let times: Vec<f64> = (1..=total).map(|j| j as f64 / (total + 1) as f64).collect();
    PulseSequence::from_layout(&times, &alloc.targets())
}

/// Complete a first half by mirroring each pulse to `1 - t`. A pulse at
/// exactly `0.5` is kept once.
pub fn symmetrize(first_half: &PulseSequence) -> Result<PulseSequence> {
    let mut pulses = Vec::with_capacity(2 * first_half.len());
    let mut centers = 0;
    for p in first_half.pulses() {
        if p.time > 0.5 {
            return Err(Error::input(format!(
                "pulse at {} lies beyond the midpoint",
                p.time
            )));
        }
        pulses.push(*p);
        if p.time == 0.5 {
            centers += 1;
        } else {
            pulses.push(Pulse::new(1.0 - p.time, p.target));
        }
    }
    if centers > 1 {
        return Err(Error::input("at most one pulse may sit at the midpoint"));
    }
    PulseSequence::new(pulses)
}

/// Binomial coefficient, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Every allocation of `m` qubit-2 pulses among `total`, lexicographic.
pub fn allocations(total: usize, m: usize) -> Result<Allocations> {
    if m > total {
        return Err(Error::input(format!("m = {m} exceeds total = {total}")));
    }
    Ok(Allocations {
        total,
        next: Some((1..=m).collect()),
    })
}

/// Iterator returned by [`allocations`].
#[derive(Debug, Clone)]
pub struct Allocations {
    total: usize,
    next: Option<Vec<usize>>,
}

impl Iterator for Allocations {
    type Item = Allocation;

    fn next(&mut self) -> Option<Allocation> {
        let current = self.next.take()?;
        let m = current.len();
        let mut succ = current.clone();
        let mut i = m;
        let mut advanced = false;
        while i > 0 {
            i -= 1;
            if succ[i] < self.total - (m - 1 - i) {
                succ[i] += 1;
                for k in i + 1..m {
                    succ[k] = succ[k - 1] + 1;
                }
                advanced = true;
                break;
            }
        }
        if advanced {
            self.next = Some(succ);
        }
        Some(Allocation {
            total: self.total,
            q2_positions: current,
        })
    }
}

/// Mirror-symmetric allocations, enumerated by their first halves.
///
/// With `h = total / 2` first-half slots this yields `C(h, m / 2)`
/// allocations. For odd `total` the centre pulse is on qubit 2 exactly when
/// `m` is odd; for even `total` an odd `m` admits no symmetric allocation and
/// the list is empty.
pub fn symmetric_allocations(total: usize, m: usize) -> Result<Vec<Allocation>> {
    if m > total {
        return Err(Error::input(format!("m = {m} exceeds total = {total}")));
    }
    let half = total / 2;
    let odd_total = total % 2 == 1;
    if m % 2 == 1 && !odd_total {
        return Ok(Vec::new());
    }
    let center = odd_total && m % 2 == 1;
    let out = allocations(half, m / 2)?
        .map(|a| {
            let mut q2 = a.q2_positions.clone();
            q2.extend(a.q2_positions.iter().map(|&j| total + 1 - j));
            if center {
                q2.push(half + 1);
            }
            q2.sort_unstable();
            Allocation {
                total,
                q2_positions: q2,
            }
        })
        .collect();
    Ok(out)
}
