//! `rk_coefficients.csv` parsing and normalization.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mixture::{RkCoefficientTable, RkPairCoefficients, RkTerm};

const HEADER: [&str; 5] = ["comp_a", "comp_b", "j", "A_j", "B_j"];

/// Parsed table plus the normalization warnings it accumulated.
#[derive(Debug)]
pub struct RkParseOutcome {
    pub table: RkCoefficientTable,
    pub warnings: Vec<String>,
}

/// Reads a coefficient table. Pairs stated in non-canonical order are
/// normalized (ids swapped, even-`j` terms sign-flipped for the
/// `(x_a - x_b)` convention) with a warning; a pair stated in both orders
/// must normalize to identical coefficients or parsing fails.
pub fn parse_rk_coefficients(path: &Path) -> Result<RkParseOutcome> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::parse(path, 0, format!("{other:?}")),
        })?;

    // Rows grouped by the pair exactly as stated, preserving statement order
    // so both-order conflicts are detected after normalization.
    let mut groups: BTreeMap<(String, String), Vec<(usize, RkTerm, u64)>> = BTreeMap::new();
    let mut first = true;

    for row in reader.records() {
        let row = row.map_err(|e| Error::parse(path, 0, e.to_string()))?;
        if first {
            let got: Vec<&str> = row.iter().map(str::trim).collect();
            if got != HEADER {
                return Err(Error::parse(path, 1, format!("bad header {got:?}, want {HEADER:?}")));
            }
            first = false;
            continue;
        }
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() != HEADER.len() {
            return Err(Error::parse(path, line, format!("{} fields, want {}", row.len(), HEADER.len())));
        }
        let comp_a = row[0].to_string();
        let comp_b = row[1].to_string();
        if comp_a.is_empty() || comp_b.is_empty() {
            return Err(Error::parse(path, line, "empty compound id"));
        }
        let j: usize = row[2]
            .parse()
            .map_err(|_| Error::parse(path, line, format!("j: bad integer {:?}", &row[2])))?;
        if j == 0 {
            return Err(Error::parse(path, line, "j must start at 1"));
        }
        let a: f64 = row[3]
            .parse()
            .map_err(|_| Error::parse(path, line, format!("A_j: bad number {:?}", &row[3])))?;
        let b: f64 = row[4]
            .parse()
            .map_err(|_| Error::parse(path, line, format!("B_j: bad number {:?}", &row[4])))?;
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::parse(path, line, "non-finite coefficient"));
        }
        groups
            .entry((comp_a, comp_b))
            .or_default()
            .push((j, RkTerm { a, b }, line));
    }
    if first {
        return Err(Error::parse(path, 0, "empty file, want header row"));
    }

    let mut table = RkCoefficientTable::new();
    let mut warnings = Vec::new();
    for ((first_id, second_id), mut rows) in groups {
        rows.sort_by_key(|&(j, _, _)| j);
        for w in rows.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::parse(
                    path,
                    w[1].2,
                    format!("pair ({first_id}, {second_id}): duplicate term j={}", w[1].0),
                ));
            }
        }
        let first_line = rows[0].2;
        for (pos, &(j, _, line)) in rows.iter().enumerate() {
            if j != pos + 1 {
                return Err(Error::parse(
                    path,
                    line,
                    format!("pair ({first_id}, {second_id}): j sequence has a gap before j={j}"),
                ));
            }
        }
        let terms: Vec<RkTerm> = rows.iter().map(|&(_, t, _)| t).collect();
        let (pair, swapped) = RkPairCoefficients::from_any_order(&first_id, &second_id, terms)
            .map_err(|e| Error::parse(path, first_line, e.to_string()))?;
        if swapped {
            warnings.push(format!(
                "{}: pair ({first_id}, {second_id}) normalized to ({}, {}); even-j terms sign-flipped \
                 to keep the (x_a - x_b) convention with x_a the lexicographically smaller id",
                path.display(),
                pair.comp_a(),
                pair.comp_b(),
            ));
        }
        table.insert(pair).map_err(|e| Error::parse(path, first_line, e.to_string()))?;
    }

    Ok(RkParseOutcome { table, warnings })
}

/// Writes a table in canonical order: rows sorted by pair then `j`.
/// Re-parsing the output produces the identical table, warning-free.
pub fn write_rk_coefficients(table: &RkCoefficientTable, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(&HEADER.join(","));
    out.push('\n');
    for pair in table.iter() {
        for (i, term) in pair.terms().iter().enumerate() {
            out.push_str(&format!("{},{},{},{},{}\n", pair.comp_a(), pair.comp_b(), i + 1, term.a, term.b));
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
