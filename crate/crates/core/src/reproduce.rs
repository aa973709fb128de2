// Copyright 2026 ddopt Contributors
// SPDX-License-Identifier: Apache-2.0

//! Built-in rows of the six reference tables and a runner that checks each
//! row against its published value.
//!
//! Location columns follow the tables' own notation: Table I lists every
//! qubit-2 ordinal, the others list only the first-half ordinals of a
//! mirror-symmetric train. Optimized rows are searched in symmetric mode
//! except in Table I.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::decoherence::{gammas, performance_phi, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::optimizer::{search_allocations, OptimizationResult, OptimizerConfig};
use crate::sequences::{nested_udd, Allocation, PulseSequence, Qubit};
use crate::spectra::SpectrumTriple;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TableId {
    T1,
    T2,
    T3,
    T4,
    T5,
    T6,
}

impl TableId {
    pub const ALL: [TableId; 6] = [
        TableId::T1,
        TableId::T2,
        TableId::T3,
        TableId::T4,
        TableId::T5,
        TableId::T6,
    ];

    /// Whether location columns list first-half ordinals only.
    pub fn first_half_notation(self) -> bool {
        self != TableId::T1
    }
}

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for TableId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().trim_start_matches(['T', 't']);
        match t {
            "1" => Ok(TableId::T1),
            "2" => Ok(TableId::T2),
            "3" => Ok(TableId::T3),
            "4" => Ok(TableId::T4),
            "5" => Ok(TableId::T5),
            "6" => Ok(TableId::T6),
            _ => Err(Error::input(format!("unknown table `{s}` (T1..T6)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowKind {
    /// A fixed nested-UDD construction, no optimization.
    Nested,
    /// Best optimized allocation.
    Optimized,
}

impl RowKind {
    pub fn label(self) -> &'static str {
        match self {
            RowKind::Nested => "nested",
            RowKind::Optimized => "optimized",
        }
    }
}

/// One published row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub table: TableId,
    /// 1-based block (spectrum set) within the table.
    pub block: usize,
    /// Row label as printed, e.g. `nested-UDD(2)` or `C_8^2`.
    pub label: String,
    /// Spectrum preset name.
    pub preset: String,
    pub kind: RowKind,
    pub total: usize,
    /// Qubit-2 pulse counts searched; one entry except in Table I.
    pub ms: Vec<usize>,
    /// `(inner, outer)` for nested rows.
    pub nested: Option<(usize, usize)>,
    /// Nested-UDD construction with the same `(total, m)`, for optimized
    /// rows that have one.
    pub baseline: Option<(usize, usize)>,
    pub table_locations: Vec<usize>,
    pub table_phi: f64,
    /// Optimize under mirror symmetry.
    pub symmetric: bool,
}

impl TableRow {
    /// Short id used for row selection, e.g. `T2.1.C_8^2`.
    pub fn id(&self) -> String {
        format!("{}.{}.{}", self.table, self.block, self.label)
    }

    /// Accepted `phi / table_phi` band.
    pub fn tolerance(&self) -> Tolerance {
        match self.kind {
            RowKind::Nested => Tolerance::Relative(0.05),
            RowKind::Optimized if self.total <= 8 => Tolerance::AtMost(2.0),
            RowKind::Optimized => Tolerance::AtMost(100.0),
        }
    }

    /// Whether the winning ordinals must match the published ones.
    pub fn ordinals_required(&self) -> bool {
        self.kind == RowKind::Optimized
            && self.total == 8
            && matches!(self.table, TableId::T1 | TableId::T2)
    }
}

/// Acceptance band for a row's Φ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Tolerance {
    /// `|phi / reference - 1| <= r`.
    Relative(f64),
    /// `phi <= k * reference`.
    AtMost(f64),
}

impl Tolerance {
    pub fn accepts(self, phi: f64, reference: f64) -> bool {
        match self {
            Tolerance::Relative(r) => (phi / reference - 1.0).abs() <= r,
            Tolerance::AtMost(k) => phi <= k * reference,
        }
    }
}

impl fmt::Display for Tolerance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tolerance::Relative(r) => write!(f, "rel<={r}"),
            Tolerance::AtMost(k) => write!(f, "phi<={k}x"),
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn row(
    table: TableId,
    block: usize,
    label: &str,
    preset: &str,
    total: usize,
    ms: &[usize],
    nested: Option<(usize, usize)>,
    baseline: Option<(usize, usize)>,
    locations: &[usize],
    table_phi: f64,
) -> TableRow {
    TableRow {
        table,
        block,
        label: label.to_string(),
        preset: preset.to_string(),
        kind: if nested.is_some() {
            RowKind::Nested
        } else {
            RowKind::Optimized
        },
        total,
        ms: ms.to_vec(),
        nested,
        baseline,
        table_locations: locations.to_vec(),
        table_phi,
        symmetric: table != TableId::T1,
    }
}

/// Shared layout of Tables II-IV blocks: nested rows and optimized rows
/// with their nested baselines.
fn block(
    table: TableId,
    b: usize,
    preset: &str,
    rows: &[(&str, usize, usize, &[usize], f64)],
) -> Vec<TableRow> {
    rows.iter()
        .map(|&(label, total, m, loc, phi)| {
            let shape = match total {
                8 => (2, 2),
                15 => (3, 3),
                24 => (4, 4),
                _ => unreachable!("table blocks use 8, 15 or 24 pulses"),
            };
            if label.starts_with("nested") {
                row(
                    table,
                    b,
                    label,
                    preset,
                    total,
                    &[m],
                    Some(shape),
                    None,
                    loc,
                    phi,
                )
            } else {
                let baseline = (m == shape.1).then_some(shape);
                row(
                    table,
                    b,
                    label,
                    preset,
                    total,
                    &[m],
                    None,
                    baseline,
                    loc,
                    phi,
                )
            }
        })
        .collect()
}

/// Every built-in row of `table`.
pub fn table_rows(table: TableId) -> Vec<TableRow> {
    use TableId::*;
    match table {
        T1 => {
            let r = |label: &str, preset: &str, phi: f64| {
                row(
                    T1,
                    1,
                    label,
                    preset,
                    8,
                    &[2, 4],
                    None,
                    Some((2, 2)),
                    &[2, 4, 6, 8],
                    phi,
                )
            };
            vec![
                r("S3=2wTheta(2-w)", "t1_row1", 4.59e-5),
                r("S3=0.5wTheta(0.5-w)", "t1_row2", 4.59e-5),
                r("S3=0.1wTheta(0.1-w)", "t1_row3", 4.43e-5),
                r("S3=0.2/(w^2+1)", "t1_row4", 1.67e-3),
                r("no nonlocal noise", "t1_row5", 4.08e-10),
            ]
        }
        T2 => [
            block(
                T2,
                1,
                "t2_row1",
                &[
                    ("nested-UDD(2)", 8, 2, &[3], 7.32e-4),
                    ("C_8^2", 8, 2, &[3], 8.66e-5),
                    ("C_8^4", 8, 4, &[2, 4], 4.59e-5),
                    ("nested-UDD(3)", 15, 3, &[4, 8], 2.45e-6),
                    ("C_15^3", 15, 3, &[4, 8], 3.04e-7),
                    ("C_15^5", 15, 5, &[2, 5, 8], 6.14e-9),
                    ("C_15^9", 15, 9, &[1, 3, 5, 7, 8], 1.17e-10),
                ],
            ),
            block(
                T2,
                2,
                "t2_row2",
                &[
                    ("nested-UDD(2)", 8, 2, &[3], 3.26e-4),
                    ("C_8^2", 8, 2, &[3], 8.14e-5),
                    ("C_8^4", 8, 4, &[2, 4], 4.59e-5),
                    ("nested-UDD(3)", 15, 3, &[4, 8], 1.66e-6),
                    ("C_15^3", 15, 3, &[3, 8], 1.88e-7),
                    ("C_15^5", 15, 5, &[3, 5, 8], 7.06e-11),
                    ("C_15^9", 15, 9, &[1, 3, 4, 6, 8], 6.26e-10),
                ],
            ),
        ]
        .concat(),
        T3 => [
            block(
                T3,
                1,
                "t3_row1",
                &[
                    ("nested-UDD(2)", 8, 2, &[3], 1.55),
                    ("C_8^2", 8, 2, &[3], 0.80),
                    ("C_8^4", 8, 4, &[2, 4], 0.54),
                    ("nested-UDD(3)", 15, 3, &[4, 8], 0.36),
                    ("C_15^3", 15, 3, &[3, 8], 6.63e-2),
                    ("C_15^7", 15, 7, &[2, 4, 6, 8], 1.48e-6),
                ],
            ),
            block(
                T3,
                2,
                "t3_row2",
                &[
                    ("nested-UDD(2)", 8, 2, &[3], 0.61),
                    ("C_8^2", 8, 2, &[3], 0.60),
                    ("C_8^4", 8, 4, &[2, 4], 0.41),
                    ("nested-UDD(3)", 15, 3, &[4, 8], 0.32),
                    ("C_15^3", 15, 3, &[4, 8], 0.22),
                    ("C_15^7", 15, 7, &[2, 4, 6, 8], 9.96e-5),
                ],
            ),
        ]
        .concat(),
        T4 => [
            block(
                T4,
                1,
                "t4_row1",
                &[
                    ("nested-UDD(2)", 8, 2, &[3], 5.31e-3),
                    ("C_8^4", 8, 4, &[2, 4], 1.04e-3),
                    ("nested-UDD(3)", 15, 3, &[4, 8], 1.44e-4),
                    ("C_15^5", 15, 5, &[2, 5, 8], 5.25e-9),
                ],
            ),
            block(
                T4,
                2,
                "t4_row2",
                &[
                    ("nested-UDD(2)", 8, 2, &[3], 4.36e-3),
                    ("C_8^4", 8, 4, &[2, 4], 1.67e-3),
                    ("nested-UDD(3)", 15, 3, &[4, 8], 1.20e-3),
                    ("C_15^9", 15, 9, &[2, 4, 5, 7, 8], 4.74e-4),
                ],
            ),
            block(
                T4,
                3,
                "t4_row3",
                &[
                    ("nested-UDD(2)", 8, 2, &[3], 2.87e-2),
                    ("C_8^4", 8, 4, &[2, 4], 2.08e-2),
                    ("nested-UDD(3)", 15, 3, &[4, 8], 1.36e-2),
                    ("C_15^7", 15, 7, &[2, 4, 6, 8], 3.96e-3),
                ],
            ),
        ]
        .concat(),
        T5 => {
            let p = "t5_row1";
            let r = |label: &str,
                     total: usize,
                     m: usize,
                     base: Option<(usize, usize)>,
                     loc: &[usize],
                     phi: f64| {
                row(T5, 1, label, p, total, &[m], None, base, loc, phi)
            };
            vec![
                r("C_4^0", 4, 0, None, &[], 1.30),
                r("C_4^2", 4, 2, None, &[2], 2.00),
                r("C_8^0", 8, 0, None, &[], 2.00e-2),
                r("C_8^2", 8, 2, Some((2, 2)), &[3], 7.64e-3),
                r("C_8^4", 8, 4, None, &[1, 3], 1.30),
                r("C_8^6", 8, 6, None, &[1, 2, 4], 2.00),
                r("C_12^0", 12, 0, None, &[], 1.99e-2),
                r("C_12^2", 12, 2, Some((3, 2)), &[4], 1.57e-7),
                r("C_12^4", 12, 4, None, &[3, 5], 6.25e-6),
                r("C_12^6", 12, 6, None, &[2, 4, 6], 7.45e-3),
                r("C_12^8", 12, 8, None, &[1, 3, 4, 6], 1.29),
                row(
                    T5,
                    1,
                    "nested-UDD(3,2)",
                    p,
                    11,
                    &[2],
                    Some((3, 2)),
                    None,
                    &[],
                    0.517,
                ),
            ]
        }
        T6 => [
            block(
                T6,
                1,
                "t6_row1",
                &[
                    ("nested-UDD(4)", 24, 4, &[5, 10], 5.21e-9),
                    ("C_24^4", 24, 4, &[2, 9], 2.81e-10),
                    ("C_24^8", 24, 8, &[1, 3, 5, 11], 3.31e-11),
                    ("C_24^12", 24, 12, &[2, 4, 7, 8, 10, 12], 2.34e-11),
                ],
            ),
            block(
                T6,
                2,
                "t6_row2",
                &[
                    ("nested-UDD(4)", 24, 4, &[5, 10], 3.31e-2),
                    ("C_24^4", 24, 4, &[3, 9], 1.42e-3),
                    ("C_24^8", 24, 8, &[1, 3, 5, 10], 1.51e-7),
                    ("C_24^12", 24, 12, &[2, 4, 6, 9, 11, 12], 1.35e-7),
                ],
            ),
        ]
        .concat(),
    }
}

/// Rows of `table` picked by `selector`: `all`, `nested`, `optimized`, or a
/// comma-separated list of 1-based row indices or row labels.
pub fn select_rows(table: TableId, selector: &str) -> Result<Vec<TableRow>> {
    let rows = table_rows(table);
    match selector.trim() {
        "" | "all" => return Ok(rows),
        "nested" => {
            return Ok(rows
                .into_iter()
                .filter(|r| r.kind == RowKind::Nested)
                .collect())
        }
        "optimized" => {
            return Ok(rows
                .into_iter()
                .filter(|r| r.kind == RowKind::Optimized)
                .collect())
        }
        _ => {}
    }
    let mut out = Vec::new();
    for item in selector.split(',').map(str::trim) {
        let hit: Vec<&TableRow> = match item.parse::<usize>() {
            Ok(i) if i >= 1 && i <= rows.len() => vec![&rows[i - 1]],
            _ => rows
                .iter()
                .filter(|r| r.label == item || r.id() == item)
                .collect(),
        };
        if hit.is_empty() {
            return Err(Error::input(format!("table {table} has no row `{item}`")));
        }
        out.extend(hit.into_iter().cloned());
    }
    Ok(out)
}

/// Q2 ordinals of `alloc` in the notation of `table`.
pub fn table_notation(table: TableId, alloc: &Allocation) -> Vec<usize> {
    if table.first_half_notation() {
        alloc.first_half()
    } else {
        alloc.q2_positions.clone()
    }
}

/// Whether `alloc` reads as `listed` up to the symmetries of the problem:
/// time reversal always, and exchanging the qubits when `exchange` is set
/// (equal local spectra and `m = total / 2`).
pub fn ordinals_match(
    table: TableId,
    alloc: &Allocation,
    listed: &[usize],
    exchange: bool,
) -> bool {
    let mut variants = vec![alloc.clone(), alloc.mirrored()];
    if exchange && 2 * alloc.m() == alloc.total {
        let comp: Vec<usize> = (1..=alloc.total)
            .filter(|j| !alloc.q2_positions.contains(j))
            .collect();
        let comp = Allocation::new(alloc.total, comp).expect("complement of a valid allocation");
        variants.push(comp.mirrored());
        variants.push(comp);
    }
    variants.iter().any(|a| table_notation(table, a) == listed)
}

/// Outcome of one row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowOutcome {
    pub table: TableId,
    pub block: usize,
    pub row: String,
    pub kind: RowKind,
    pub total: usize,
    pub m: usize,
    pub table_locations: Vec<usize>,
    pub locations: Vec<usize>,
    pub table_phi: f64,
    pub phi: f64,
    pub tolerance: Tolerance,
    /// `phi / table_phi`.
    pub ratio: f64,
    pub value_ok: bool,
    pub baseline_phi: Option<f64>,
    /// `phi < baseline_phi`, where a baseline exists.
    pub below_baseline: Option<bool>,
    /// Mirror-equivalent ordinal match, where required.
    pub ordinals_match: Option<bool>,
    pub pass: bool,
    /// Pulse times of the reported sequence.
    pub times: Vec<f64>,
    pub targets: Vec<Qubit>,
    /// Descents whose final times left ordinal order.
    pub ordering_violations: usize,
}

impl RowOutcome {
    /// The reported pulse sequence.
    pub fn sequence(&self) -> Result<PulseSequence> {
        PulseSequence::from_layout(&self.times, &self.targets)
    }
}

/// Φ of a nested-UDD construction under a preset.
pub fn nested_phi(inner: usize, outer: usize, spectra: &SpectrumTriple) -> Result<f64> {
    Ok(performance_phi(&gammas(
        &nested_udd(inner, outer),
        spectra,
        DEFAULT_TOL,
    )?))
}

/// Evaluate one row. `cfg` supplies iteration limits, tolerances and seed;
/// the symmetry flag is taken from the row.
pub fn run_row(row: &TableRow, cfg: &OptimizerConfig) -> Result<RowOutcome> {
    let spectra = SpectrumTriple::preset(&row.preset)?;
    let tolerance = row.tolerance();
    let (phi, seq, m, violations) = match row.nested {
        Some((inner, outer)) => {
            let seq = nested_udd(inner, outer);
            let phi = performance_phi(&gammas(&seq, &spectra, DEFAULT_TOL)?);
            (phi, seq, outer, 0)
        }
        None => {
            let cfg = OptimizerConfig {
                symmetric: row.symmetric,
                ..cfg.clone()
            };
            let mut best: Option<(OptimizationResult, usize)> = None;
            let mut violations = 0;
            for &m in &row.ms {
                let search = search_allocations(row.total, m, &spectra, &cfg)?;
                violations += search.ordering_violations;
                if best.as_ref().is_none_or(|(b, _)| search.best.phi < b.phi) {
                    best = Some((search.best, m));
                }
            }
            let (r, m) = best.expect("at least one m per row");
            (r.phi, r.sequence()?, m, violations)
        }
    };
    let alloc = seq.allocation();
    let locations = table_notation(row.table, &alloc);
    let value_ok = tolerance.accepts(phi, row.table_phi);
    let baseline_phi = match row.baseline {
        Some((i, o)) => Some(nested_phi(i, o, &spectra)?),
        None => None,
    };
    let below_baseline = baseline_phi.map(|b| phi < b);
    let ordinals_match = row.ordinals_required().then(|| {
        ordinals_match(
            row.table,
            &alloc,
            &row.table_locations,
            spectra.s1 == spectra.s2,
        )
    });
    let pass = value_ok && below_baseline != Some(false) && ordinals_match != Some(false);
    Ok(RowOutcome {
        table: row.table,
        block: row.block,
        row: row.label.clone(),
        kind: row.kind,
        total: row.total,
        m,
        table_locations: row.table_locations.clone(),
        locations,
        table_phi: row.table_phi,
        phi,
        tolerance,
        ratio: phi / row.table_phi,
        value_ok,
        baseline_phi,
        below_baseline,
        ordinals_match,
        pass,
        times: seq.times(),
        targets: seq.targets(),
        ordering_violations: violations,
    })
}

/// Run several rows in order.
pub fn run_rows(rows: &[TableRow], cfg: &OptimizerConfig) -> Result<Vec<RowOutcome>> {
    rows.iter().map(|r| run_row(r, cfg)).collect()
}

pub const CSV_HEADER: &str = "table,block,row,kind,total,m,table_locations,locations,table_phi,phi,tolerance,pass,ratio,baseline_phi,below_baseline,ordinals_match";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn join(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

fn opt<T: fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// RFC-4180 CSV with a header row.
pub fn outcomes_csv(outcomes: &[RowOutcome]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for o in outcomes {
        let fields = [
            o.table.to_string(),
            o.block.to_string(),
            o.row.clone(),
            o.kind.label().to_string(),
            o.total.to_string(),
            o.m.to_string(),
            join(&o.table_locations),
            join(&o.locations),
            format!("{:.6e}", o.table_phi),
            format!("{:.6e}", o.phi),
            o.tolerance.to_string(),
            o.pass.to_string(),
            format!("{:.4}", o.ratio),
            opt(o.baseline_phi.map(|b| format!("{b:.6e}"))),
            opt(o.below_baseline),
            opt(o.ordinals_match),
        ];
        let line: Vec<String> = fields.iter().map(|f| csv_field(f)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_ids_parse() {
        assert_eq!("T3".parse::<TableId>().unwrap(), TableId::T3);
        assert_eq!("t6".parse::<TableId>().unwrap(), TableId::T6);
        assert!("T7".parse::<TableId>().is_err());
    }

    #[test]
    fn every_row_has_a_preset() {
        for t in TableId::ALL {
            for r in table_rows(t) {
                SpectrumTriple::preset(&r.preset).unwrap();
                assert!(r.table_phi > 0.0);
                assert!(r.ms.iter().all(|&m| m <= r.total));
            }
        }
    }

    #[test]
    fn nested_rows_list_their_own_ordinals() {
        for t in TableId::ALL {
            for r in table_rows(t)
                .iter()
                .filter(|r| r.kind == RowKind::Nested && !r.table_locations.is_empty())
            {
                let (i, o) = r.nested.unwrap();
                let alloc = nested_udd(i, o).allocation();
                assert_eq!(table_notation(t, &alloc), r.table_locations, "{}", r.id());
            }
        }
    }

    #[test]
    fn selection() {
        assert_eq!(select_rows(TableId::T2, "nested").unwrap().len(), 4);
        assert_eq!(select_rows(TableId::T2, "C_8^2").unwrap().len(), 2);
        assert_eq!(select_rows(TableId::T5, "1,3").unwrap()[1].label, "C_8^0");
        assert!(select_rows(TableId::T1, "bogus").is_err());
    }

    #[test]
    fn mirror_matching() {
        let a = Allocation::new(8, vec![1, 3, 5, 7]).unwrap();
        assert!(ordinals_match(TableId::T1, &a, &[2, 4, 6, 8], false));
        assert!(!ordinals_match(TableId::T1, &a, &[1, 3, 6, 8], true));
        let s = Allocation::new(8, vec![1, 3, 6, 8]).unwrap();
        assert!(!ordinals_match(TableId::T2, &s, &[2, 4], false));
        assert!(ordinals_match(TableId::T2, &s, &[2, 4], true));
        let two = Allocation::new(8, vec![3, 6]).unwrap();
        assert!(!ordinals_match(TableId::T2, &two, &[2], true));
    }

    #[test]
    fn csv_quotes_lists() {
        let rows = select_rows(TableId::T2, "1").unwrap();
        let out = run_rows(&rows, &OptimizerConfig::default()).unwrap();
        let csv = outcomes_csv(&out);
        let line = csv.lines().nth(1).unwrap();
        assert!(
            line.starts_with("T2,1,nested-UDD(2),nested,8,2,3,3,"),
            "{line}"
        );
        assert!(out[0].pass);
    }
}
