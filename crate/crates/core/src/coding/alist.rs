//! MacKay alist text format.
//!
//! ```text
//! n m
//! max_col_degree max_row_degree
//! <n column degrees>
//! <m row degrees>
//! <n lines: 1-based check indices per column, zero padded>
//! <m lines: 1-based variable indices per row, zero padded>
//! ```

use std::fmt::Write as _;

use crate::error::{Error, Result};

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Alist {
        line,
        msg: msg.into(),
    }
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next_numbers(&mut self) -> Result<Vec<usize>> {
        for (i, line) in self.inner.by_ref() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            self.last = i + 1;
            return line
                .split_whitespace()
                .map(|t| {
                    t.parse()
                        .map_err(|_| err(i + 1, format!("not a nonnegative integer: {t}")))
                })
                .collect();
        }
        Err(err(self.last + 1, "unexpected end of file"))
    }

    fn expect(&mut self, count: usize, what: &str) -> Result<Vec<usize>> {
        let v = self.next_numbers()?;
        if v.len() != count {
            return Err(err(
                self.last,
                format!("expected {count} {what}, found {}", v.len()),
            ));
        }
        Ok(v)
    }

    /// One adjacency line: exactly `degree` nonzero 1-based indices, then optional zero padding.
    fn adjacency(&mut self, degree: usize, bound: usize, what: &str) -> Result<Vec<u32>> {
        let v = self.next_numbers()?;
        let line = self.last;
        let (entries, padding) = v.split_at(v.iter().position(|&x| x == 0).unwrap_or(v.len()));
        if padding.iter().any(|&x| x != 0) {
            return Err(err(line, "nonzero entry after zero padding"));
        }
        if entries.len() != degree {
            return Err(err(
                line,
                format!("{what} lists {} entries but declares degree {degree}", entries.len()),
            ));
        }
        entries
            .iter()
            .map(|&x| {
                if x > bound {
                    Err(err(line, format!("index {x} out of range 1..={bound}")))
                } else {
                    Ok((x - 1) as u32)
                }
            })
            .collect()
    }
}

pub(super) fn parse(text: &str) -> Result<(usize, Vec<Vec<u32>>)> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    let dims = lines.expect(2, "dimensions")?;
    let (n, m) = (dims[0], dims[1]);
    if n == 0 || m == 0 {
        return Err(err(lines.last, "zero dimension"));
    }
    let maxd = lines.expect(2, "maximum degrees")?;
    let col_deg = lines.expect(n, "column degrees")?;
    let row_deg = lines.expect(m, "row degrees")?;
    if col_deg.iter().max() != Some(&maxd[0]) || row_deg.iter().max() != Some(&maxd[1]) {
        return Err(err(2, "maximum degrees disagree with the degree lists"));
    }
    if col_deg.iter().sum::<usize>() != row_deg.iter().sum::<usize>() {
        return Err(err(4, "column and row degrees have different totals"));
    }
    let mut cols = Vec::with_capacity(n);
    for (j, &d) in col_deg.iter().enumerate() {
        cols.push(lines.adjacency(d, m, &format!("column {}", j + 1))?);
    }
    let mut rows = Vec::with_capacity(m);
    for (i, &d) in row_deg.iter().enumerate() {
        rows.push(lines.adjacency(d, n, &format!("row {}", i + 1))?);
    }
    for (j, col) in cols.iter().enumerate() {
        for &c in col {
            if !rows[c as usize].contains(&(j as u32)) {
                return Err(err(
                    lines.last,
                    format!("column {} lists row {} but not vice versa", j + 1, c + 1),
                ));
            }
        }
    }
    Ok((n, rows))
}

pub(super) fn write(n: usize, checks: &[Vec<u32>], vars: &[Vec<u32>]) -> String {
    let maxc = vars.iter().map(Vec::len).max().unwrap_or(0);
    let maxr = checks.iter().map(Vec::len).max().unwrap_or(0);
    let mut out = format!("{n} {}\n{maxc} {maxr}\n", checks.len());
    let join = |it: &mut dyn Iterator<Item = usize>| {
        it.map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
    };
    let _ = writeln!(out, "{}", join(&mut vars.iter().map(Vec::len)));
    let _ = writeln!(out, "{}", join(&mut checks.iter().map(Vec::len)));
    for (list, width) in vars.iter().map(|v| (v, maxc)).chain(checks.iter().map(|c| (c, maxr))) {
        let mut idx: Vec<usize> = list.iter().map(|&x| x as usize + 1).collect();
        idx.resize(width, 0);
        let _ = writeln!(out, "{}", join(&mut idx.into_iter()));
    }
    out
}
