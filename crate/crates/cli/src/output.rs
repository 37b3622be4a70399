//! Rendering of reports as JSON, CSV or a p × k grid.
//!
//! JSON layouts (all carry `schema_version`):
//!
//! - `dims`: a [`DimensionReport`]: `p`, `truncation`, `unsound`,
//!   `cert_policy` and `rows`, one per k, each with `k`, `dim`, `bound`,
//!   `dim_mk_gammapm`, `match`, `candidate_count`, `per_block_dims` (class →
//!   rank), `certification` (`method`, `primes`, `blocks`), `soundness`
//!   ("SOUND" or "UNSOUND") and, with `--timings`, `wall_ms`.
//! - `table1`: `kmax`, `grid` (per p a list of cells for k = 1 up to
//!   max(kmax, 4), each with `k`, `dim` or null, `bound` or null,
//!   `computed`) and `reports`, the full `dims` objects.
//! - `cusps`: `p`, `relation`, `modulus`, `count`, `expected`,
//!   `refinement` (`multiplicities`, `nested`) and `classes` with
//!   `representative`, `size` and, with `--members`, `members`.
//! - `formulas`: `rows` with `p`, `k`, `dim_mk_gamma4`, `dim_mk_gammapm`,
//!   `dim_mk_gamma4p`, `bound`.
//! - `verify`: `p`, `kmax`, `passed` and `checks` with `name`, `status`
//!   ("pass", "fail" or "skip") and `detail`.
//!
//! CSV output is RFC 4180 with a header row; the columns follow the JSON
//! field names, flattened.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use x4p_core::cusps::{cusp_classes, expected_count, refinement, CuspRelation, CuspVector};
use x4p_core::formulas::{conjecture_bound, dim_mk_gamma4, dim_mk_gamma4p, dim_mk_gammapm};
use x4p_core::report::{DimensionRow, SCHEMA_VERSION};
use x4p_core::DimensionReport;

use crate::verify::VerifyReport;
use crate::{CliError, Format};

fn json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError {
        code: crate::EXIT_CONFIG,
        message: e.to_string(),
    })?;
    s.push('\n');
    Ok(s)
}

fn csv_text(header: &[&str], records: Vec<Vec<String>>) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError {
        code: crate::EXIT_CONFIG,
        message: e.to_string(),
    };
    w.write_record(header).map_err(fail)?;
    for r in records {
        w.write_record(&r).map_err(fail)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError {
        code: crate::EXIT_CONFIG,
        message: e.to_string(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map_or(String::new(), |v| v.to_string())
}

fn blocks_field(blocks: &BTreeMap<u64, usize>) -> String {
    blocks
        .iter()
        .map(|(c, r)| format!("{c}:{r}"))
        .collect::<Vec<_>>()
        .join(";")
}

const DIMS_HEADER: [&str; 13] = [
    "p",
    "k",
    "dim",
    "bound",
    "dim_mk_gammapm",
    "match",
    "candidate_count",
    "per_block_dims",
    "certification",
    "primes",
    "soundness",
    "truncation",
    "wall_ms",
];

fn dims_record(report: &DimensionReport, row: &DimensionRow) -> Vec<String> {
    vec![
        report.p.to_string(),
        row.k.to_string(),
        row.dim.to_string(),
        opt(row.bound),
        opt(row.dim_mk_gammapm),
        opt(row.matches),
        row.candidate_count.to_string(),
        blocks_field(&row.per_block_dims),
        row.certification.method.clone(),
        row.certification
            .primes
            .iter()
            .map(u64::to_string)
            .collect::<Vec<_>>()
            .join(";"),
        row.soundness.marker().into(),
        report.truncation.to_string(),
        opt(row.wall_ms),
    ]
}

/// One grid cell: "dim (bound)", "dim" for k = 1, "?" when not computed.
fn cell(report: &DimensionReport, k: u32) -> String {
    match report.row(k) {
        None => "?".into(),
        Some(row) => match row.bound {
            Some(b) => format!("{} ({b})", row.dim),
            None => row.dim.to_string(),
        },
    }
}

fn grid_text(reports: &[DimensionReport], kmax: u32) -> String {
    let mut header = vec!["p".to_string()];
    header.extend((1..=kmax).map(|k| format!("k={k}")));
    let unsound = reports.iter().any(|r| r.unsound);
    let mut lines: Vec<Vec<String>> = vec![header];
    for r in reports {
        let mut line = vec![r.p.to_string()];
        line.extend((1..=kmax).map(|k| cell(r, k)));
        if unsound {
            line.push(if r.unsound { "UNSOUND".into() } else { String::new() });
        }
        lines.push(line);
    }
    let cols = lines.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            lines
                .iter()
                .filter_map(|l| l.get(c))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for line in &lines {
        let cells: Vec<String> = line
            .iter()
            .enumerate()
            .map(|(c, s)| format!("{s:>w$}", w = widths[c]))
            .collect();
        let _ = writeln!(out, "{}", cells.join(" | ").trim_end());
    }
    out
}

pub fn dims(report: &DimensionReport, format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => json(report),
        Format::Csv => csv_text(
            &DIMS_HEADER,
            report.rows.iter().map(|r| dims_record(report, r)).collect(),
        ),
        Format::Table => Ok(grid_text(std::slice::from_ref(report), report.rows.len() as u32)),
    }
}

#[derive(Serialize)]
struct GridCell {
    k: u32,
    dim: Option<usize>,
    bound: Option<u64>,
    computed: bool,
}

#[derive(Serialize)]
struct GridRow {
    p: u64,
    cells: Vec<GridCell>,
}

#[derive(Serialize)]
struct Table1Json<'a> {
    schema_version: u32,
    kmax: u32,
    grid: Vec<GridRow>,
    reports: &'a [DimensionReport],
}

/// Grid width: the table always shows k = 1..4.
pub const TABLE1_COLUMNS: u32 = 4;

pub fn table1(reports: &[DimensionReport], kmax: u32, format: Format) -> Result<String, CliError> {
    let columns = kmax.max(TABLE1_COLUMNS);
    let bound = |p: u64, k: u32| -> Result<Option<u64>, CliError> {
        Ok(if k >= 2 {
            Some(conjecture_bound(p, k as u64)?)
        } else {
            None
        })
    };
    match format {
        Format::Json => {
            let mut grid = Vec::new();
            for r in reports {
                let mut cells = Vec::new();
                for k in 1..=columns {
                    cells.push(GridCell {
                        k,
                        dim: r.row(k).map(|row| row.dim),
                        bound: bound(r.p, k)?,
                        computed: r.row(k).is_some(),
                    });
                }
                grid.push(GridRow { p: r.p, cells });
            }
            json(&Table1Json {
                schema_version: SCHEMA_VERSION,
                kmax,
                grid,
                reports,
            })
        }
        Format::Csv => {
            let mut records = Vec::new();
            for r in reports {
                for k in 1..=columns {
                    records.push(match r.row(k) {
                        Some(row) => dims_record(r, row),
                        None => {
                            let mut rec = vec![String::new(); DIMS_HEADER.len()];
                            rec[0] = r.p.to_string();
                            rec[1] = k.to_string();
                            rec[2] = "?".into();
                            rec[3] = opt(bound(r.p, k)?);
                            rec
                        }
                    });
                }
            }
            csv_text(&DIMS_HEADER, records)
        }
        Format::Table => Ok(grid_text(reports, columns)),
    }
}

#[derive(Serialize)]
struct ClassJson {
    representative: CuspVector,
    size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    members: Option<Vec<CuspVector>>,
}

#[derive(Serialize)]
struct RefinementJson {
    /// number of ≈-classes inside a ∼-class → how many ∼-classes
    multiplicities: BTreeMap<usize, usize>,
    nested: bool,
}

#[derive(Serialize)]
struct CuspsJson {
    schema_version: u32,
    p: u64,
    relation: CuspRelation,
    modulus: u64,
    count: usize,
    expected: u64,
    refinement: RefinementJson,
    classes: Vec<ClassJson>,
}

pub fn cusps(p: u64, relation: CuspRelation, members: bool, format: Format) -> Result<String, CliError> {
    let table = cusp_classes(p, relation)?;
    let (multiplicities, nested) = refinement(p)?;
    match format {
        Format::Json => json(&CuspsJson {
            schema_version: SCHEMA_VERSION,
            p,
            relation,
            modulus: table.modulus,
            count: table.count(),
            expected: expected_count(p, relation),
            refinement: RefinementJson { multiplicities, nested },
            classes: table
                .classes
                .iter()
                .map(|c| ClassJson {
                    representative: c[0],
                    size: c.len(),
                    members: members.then(|| c.clone()),
                })
                .collect(),
        }),
        Format::Csv => csv_text(
            &["index", "a", "c", "size"],
            table
                .classes
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    vec![
                        i.to_string(),
                        c[0].a.to_string(),
                        c[0].c.to_string(),
                        c.len().to_string(),
                    ]
                })
                .collect(),
        ),
        Format::Table => {
            let mut out = String::new();
            let _ = writeln!(
                out,
                "p = {p}, relation {relation:?}: {} classes (expected {})",
                table.count(),
                expected_count(p, relation)
            );
            let mult: Vec<String> = multiplicities.iter().map(|(m, n)| format!("{m} x{n}")).collect();
            let _ = writeln!(
                out,
                "approx classes per sim class: {}; nested: {nested}",
                mult.join(", ")
            );
            for (i, c) in table.classes.iter().enumerate() {
                let _ = writeln!(out, "{i:>4}  {}  size {}", c[0], c.len());
            }
            Ok(out)
        }
    }
}

#[derive(Serialize)]
struct FormulaRow {
    p: u64,
    k: u32,
    dim_mk_gamma4: u64,
    dim_mk_gammapm: u64,
    dim_mk_gamma4p: u64,
    bound: u64,
}

#[derive(Serialize)]
struct FormulasJson {
    schema_version: u32,
    rows: Vec<FormulaRow>,
}

pub fn formulas(p_list: &[u64], kmax: u32, format: Format) -> Result<String, CliError> {
    let mut rows = Vec::new();
    for &p in p_list {
        for k in 2..=kmax.max(2) {
            let k64 = k as u64;
            rows.push(FormulaRow {
                p,
                k,
                dim_mk_gamma4: dim_mk_gamma4(k64),
                dim_mk_gammapm: dim_mk_gammapm(p, k64)?,
                dim_mk_gamma4p: dim_mk_gamma4p(p, k64)?,
                bound: conjecture_bound(p, k64)?,
            });
        }
    }
    let header = ["p", "k", "dim_mk_gamma4", "dim_mk_gammapm", "dim_mk_gamma4p", "bound"];
    let records = || -> Vec<Vec<String>> {
        rows.iter()
            .map(|r| {
                vec![
                    r.p.to_string(),
                    r.k.to_string(),
                    r.dim_mk_gamma4.to_string(),
                    r.dim_mk_gammapm.to_string(),
                    r.dim_mk_gamma4p.to_string(),
                    r.bound.to_string(),
                ]
            })
            .collect()
    };
    match format {
        Format::Json => json(&FormulasJson {
            schema_version: SCHEMA_VERSION,
            rows,
        }),
        Format::Csv => csv_text(&header, records()),
        Format::Table => {
            let mut out = String::new();
            let _ = writeln!(out, "{}", header.join("\t"));
            for r in records() {
                let _ = writeln!(out, "{}", r.join("\t"));
            }
            Ok(out)
        }
    }
}

pub fn verify(report: &VerifyReport, format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => json(report),
        Format::Csv => csv_text(
            &["name", "status", "detail"],
            report
                .checks
                .iter()
                .map(|c| vec![c.name.clone(), c.status.label().into(), c.detail.clone()])
                .collect(),
        ),
        Format::Table => {
            let mut out = String::new();
            for c in &report.checks {
                let _ = writeln!(out, "{} {}: {}", c.status.label().to_uppercase(), c.name, c.detail);
            }
            let verdict = if report.passed {
                "all checks PASS"
            } else {
                "some checks FAIL"
            };
            let _ = writeln!(out, "p = {}, kmax = {}: {verdict}", report.p, report.kmax);
            Ok(out)
        }
    }
}
