//! Plain-text instance files and seeded random instances.
//!
//! The format is the vertex count `n` on the first line followed by `n` rows
//! of `n` whitespace-separated integers. `inf`, `-` and `∞` stand for an
//! infinite entry; the diagonal must be infinite. LF and CRLF line endings
//! are both accepted.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::InstanceError;
use crate::matrix::{is_inf, Cost, CostMatrix, INF};

fn parse_token(tok: &str) -> Option<Cost> {
    match tok {
        "inf" | "INF" | "Inf" | "-" | "∞" => Some(INF),
        _ => tok.parse().ok(),
    }
}

/// Whitespace-separated tokens of a line with their 1-based columns.
fn tokens(line: &str) -> impl Iterator<Item = (usize, &str)> {
    line.split_ascii_whitespace().map(move |t| {
        let offset = t.as_ptr() as usize - line.as_ptr() as usize;
        (line[..offset].chars().count() + 1, t)
    })
}

pub fn parse_matrix(text: &str) -> Result<CostMatrix, InstanceError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty());

    let (header_line, header) = lines.next().ok_or(InstanceError::Parse {
        line: 1,
        column: 1,
        message: "empty input, expected the vertex count".into(),
    })?;
    let mut head = tokens(header);
    let (col, tok) = head.next().expect("line is not blank");
    let n: usize = tok.parse().map_err(|_| InstanceError::Parse {
        line: header_line,
        column: col,
        message: format!("expected the vertex count, found {tok:?}"),
    })?;
    if let Some((col, tok)) = head.next() {
        return Err(InstanceError::Parse {
            line: header_line,
            column: col,
            message: format!("unexpected token {tok:?} after the vertex count"),
        });
    }

    let mut entries = Vec::with_capacity(n * n);
    let mut rows = 0;
    for (line_no, line) in lines {
        if rows == n {
            return Err(InstanceError::NonSquare(format!(
                "line {line_no}: more than {n} rows"
            )));
        }
        let before = entries.len();
        for (col, tok) in tokens(line) {
            let v = parse_token(tok).ok_or_else(|| InstanceError::Parse {
                line: line_no,
                column: col,
                message: format!("expected an integer or inf, found {tok:?}"),
            })?;
            let k = entries.len() - before;
            if k == rows && !is_inf(v) {
                return Err(InstanceError::DiagonalNotInf {
                    line: line_no,
                    row: rows + 1,
                });
            }
            entries.push(v);
        }
        let got = entries.len() - before;
        if got != n {
            return Err(InstanceError::NonSquare(format!(
                "line {line_no}: row {} has {got} entries, expected {n}",
                rows + 1
            )));
        }
        rows += 1;
    }
    if rows != n {
        return Err(InstanceError::NonSquare(format!(
            "found {rows} rows, expected {n}"
        )));
    }
    Ok(CostMatrix::new(n, entries)?)
}

/// Renders `m` in the instance format, one row per line, `inf` on the
/// diagonal.
pub fn render_matrix(m: &CostMatrix) -> String {
    let n = m.n();
    let mut out = format!("{n}\n");
    for i in 0..n {
        let row: Vec<String> = m
            .row(i)
            .iter()
            .map(|&c| if is_inf(c) { "inf".to_string() } else { c.to_string() })
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Uniform integer costs in `1..=max_cost`, drawn row by row from ChaCha8
/// seeded with `seed`.
pub fn gen_instance(n: usize, max_cost: Cost, seed: u64) -> CostMatrix {
    assert!(n >= 2, "need at least 2 vertices");
    assert!(max_cost >= 1, "max_cost must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            entries.push(if i == j { INF } else { rng.gen_range(1..=max_cost) });
        }
    }
    CostMatrix::new(n, entries).expect("generated entries are in range")
}

/// SHA-256 of the rendered matrix, lowercase hex.
pub fn checksum(m: &CostMatrix) -> String {
    let digest = Sha256::digest(render_matrix(m).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
