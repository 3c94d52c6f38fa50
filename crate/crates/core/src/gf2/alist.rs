//! MacKay alist text format.
//!
//! ```text
//! N M
//! max_col_degree max_row_degree
//! <N column degrees>
//! <M row degrees>
//! <N lines: 1-based row indices of each column, 0-padded>
//! <M lines: 1-based column indices of each row, 0-padded>
//! ```
//!
//! Indices are 1-based on disk and 0-based in memory. Zero entries are
//! padding and are skipped when reading. Blank lines are tolerated.

use std::fmt::Write;

use super::ParityCheckMatrix;
use crate::{Error, Result};

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate(),
            last: 0,
        }
    }

    /// Next non-blank line as parsed integers, with its 1-based line number.
    fn next_numbers(&mut self, what: &str) -> Result<(usize, Vec<usize>)> {
        for (i, line) in self.inner.by_ref() {
            self.last = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let numbers = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<usize>().map_err(|_| Error::Alist {
                        line: i + 1,
                        msg: format!("`{tok}` is not a non-negative integer"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok((i + 1, numbers));
        }
        Err(Error::Alist {
            line: self.last + 1,
            msg: format!("unexpected end of input, expected {what}"),
        })
    }

    fn expect_count(&mut self, what: &str, count: usize) -> Result<(usize, Vec<usize>)> {
        let (line, numbers) = self.next_numbers(what)?;
        if numbers.len() != count {
            return Err(Error::Alist {
                line,
                msg: format!("expected {count} values for {what}, found {}", numbers.len()),
            });
        }
        Ok((line, numbers))
    }
}

/// Reads one adjacency block (`count` lines, each listing `degrees[i]`
/// nonzero 1-based indices bounded by `limit`).
fn read_block(
    lines: &mut Lines<'_>,
    what: &str,
    degrees: &[usize],
    max_degree: usize,
    limit: usize,
) -> Result<Vec<Vec<usize>>> {
    let mut lists = Vec::with_capacity(degrees.len());
    for (i, &degree) in degrees.iter().enumerate() {
        let (line, numbers) = lines.next_numbers(what)?;
        if numbers.len() > max_degree.max(degree) {
            return Err(Error::Alist {
                line,
                msg: format!("{} entries exceed maximum degree {max_degree}", numbers.len()),
            });
        }
        let mut list = Vec::with_capacity(degree);
        for &v in &numbers {
            match v {
                0 => continue,
                v if v > limit => {
                    return Err(Error::Alist {
                        line,
                        msg: format!("index {v} out of range 1..={limit}"),
                    })
                }
                v => list.push(v - 1),
            }
        }
        if list.len() != degree {
            return Err(Error::Alist {
                line,
                msg: format!(
                    "{what} {} declares degree {degree} but lists {} indices",
                    i + 1,
                    list.len()
                ),
            });
        }
        list.sort_unstable();
        if list.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Alist {
                line,
                msg: format!("{what} {} repeats an index", i + 1),
            });
        }
        lists.push(list);
    }
    Ok(lists)
}

pub fn load_alist(text: &str) -> Result<ParityCheckMatrix> {
    let mut lines = Lines::new(text);
    let (line, dims) = lines.expect_count("header `N M`", 2)?;
    let (n_cols, n_rows) = (dims[0], dims[1]);
    if n_cols == 0 || n_rows == 0 {
        return Err(Error::Alist {
            line,
            msg: "matrix dimensions must be positive".into(),
        });
    }
    let (_, max) = lines.expect_count("maximum degrees", 2)?;
    let (max_col, max_row) = (max[0], max[1]);
    let (col_line, col_deg) = lines.expect_count("column degrees", n_cols)?;
    let (row_line, row_deg) = lines.expect_count("row degrees", n_rows)?;
    if col_deg.iter().any(|&d| d > max_col) {
        return Err(Error::Alist {
            line: col_line,
            msg: format!("column degree exceeds declared maximum {max_col}"),
        });
    }
    if row_deg.iter().any(|&d| d > max_row) {
        return Err(Error::Alist {
            line: row_line,
            msg: format!("row degree exceeds declared maximum {max_row}"),
        });
    }
    let cols = read_block(&mut lines, "column", &col_deg, max_col, n_rows)?;
    let rows = read_block(&mut lines, "row", &row_deg, max_row, n_cols)?;

    let mut from_cols: Vec<(usize, usize)> = cols
        .iter()
        .enumerate()
        .flat_map(|(n, c)| c.iter().map(move |&m| (m, n)))
        .collect();
    let mut from_rows: Vec<(usize, usize)> = rows
        .iter()
        .enumerate()
        .flat_map(|(m, r)| r.iter().map(move |&n| (m, n)))
        .collect();
    from_cols.sort_unstable();
    from_rows.sort_unstable();
    if from_cols != from_rows {
        return Err(Error::Alist {
            line: lines.last,
            msg: "row and column sections describe different edge sets".into(),
        });
    }
    ParityCheckMatrix::from_rows(n_cols, rows)
}

pub fn save_alist(h: &ParityCheckMatrix) -> String {
    let max_col = h.cols().iter().map(Vec::len).max().unwrap_or(0);
    let max_row = h.rows().iter().map(Vec::len).max().unwrap_or(0);
    let mut out = String::new();
    let join = |out: &mut String, values: &mut dyn Iterator<Item = usize>| {
        let line: Vec<String> = values.map(|v| v.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    };
    writeln!(out, "{} {}", h.n_cols(), h.n_rows()).unwrap();
    writeln!(out, "{max_col} {max_row}").unwrap();
    join(&mut out, &mut h.cols().iter().map(Vec::len));
    join(&mut out, &mut h.rows().iter().map(Vec::len));
    for col in h.cols() {
        join(
            &mut out,
            &mut col.iter().map(|m| m + 1).chain(std::iter::repeat(0)).take(max_col),
        );
    }
    for row in h.rows() {
        join(
            &mut out,
            &mut row.iter().map(|n| n + 1).chain(std::iter::repeat(0)).take(max_row),
        );
    }
    out
}
