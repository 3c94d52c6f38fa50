//! Degree distributions and progressive-edge-growth construction.

use std::collections::BTreeMap;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ParityCheckMatrix;
use crate::{Error, Result};

/// Node-degree multiplicities (degree -> number of nodes) for both sides of
/// the Tanner graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeDistribution {
    columns: BTreeMap<usize, usize>,
    rows: BTreeMap<usize, usize>,
}

fn edge_count(map: &BTreeMap<usize, usize>) -> usize {
    map.iter().map(|(d, c)| d * c).sum()
}

impl DegreeDistribution {
    pub fn new(columns: BTreeMap<usize, usize>, rows: BTreeMap<usize, usize>) -> Result<Self> {
        let dist = DegreeDistribution {
            columns: columns.into_iter().filter(|&(_, c)| c > 0).collect(),
            rows: rows.into_iter().filter(|&(_, c)| c > 0).collect(),
        };
        dist.validate()?;
        Ok(dist)
    }

    /// Column multiplicities as given; `n_rows` rows whose degrees differ by
    /// at most one.
    pub fn concentrated(columns: &[(usize, usize)], n_rows: usize) -> Result<Self> {
        let mut cols = BTreeMap::new();
        for &(d, c) in columns {
            *cols.entry(d).or_insert(0) += c;
        }
        if n_rows == 0 {
            return Err(Error::InfeasibleDistribution("no rows".into()));
        }
        let edges = edge_count(&cols);
        let (low, extra) = (edges / n_rows, edges % n_rows);
        let mut rows = BTreeMap::new();
        rows.insert(low, n_rows - extra);
        if extra > 0 {
            rows.insert(low + 1, extra);
        }
        Self::new(cols, rows)
    }

    pub fn from_degrees(
        columns: impl IntoIterator<Item = usize>,
        rows: impl IntoIterator<Item = usize>,
    ) -> Self {
        let tally = |it: &mut dyn Iterator<Item = usize>| {
            let mut map = BTreeMap::new();
            for d in it {
                *map.entry(d).or_insert(0) += 1;
            }
            map
        };
        DegreeDistribution {
            columns: tally(&mut columns.into_iter()),
            rows: tally(&mut rows.into_iter()),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.columns.is_empty() || self.rows.is_empty() {
            return Err(Error::InfeasibleDistribution("empty side".into()));
        }
        if self.columns.contains_key(&0) || self.rows.contains_key(&0) {
            return Err(Error::InfeasibleDistribution("degree-0 nodes".into()));
        }
        let (ce, re) = (edge_count(&self.columns), edge_count(&self.rows));
        if ce != re {
            return Err(Error::InfeasibleDistribution(format!(
                "column edges {ce} != row edges {re}"
            )));
        }
        let max_col = *self.columns.keys().next_back().unwrap();
        if max_col > self.n_rows() {
            return Err(Error::InfeasibleDistribution(format!(
                "column degree {max_col} exceeds {} rows",
                self.n_rows()
            )));
        }
        let max_row = *self.rows.keys().next_back().unwrap();
        if max_row > self.n_cols() {
            return Err(Error::InfeasibleDistribution(format!(
                "row degree {max_row} exceeds {} columns",
                self.n_cols()
            )));
        }
        Ok(())
    }

    pub fn columns(&self) -> &BTreeMap<usize, usize> {
        &self.columns
    }

    pub fn rows(&self) -> &BTreeMap<usize, usize> {
        &self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.values().sum()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.values().sum()
    }

    pub fn n_edges(&self) -> usize {
        edge_count(&self.columns)
    }

    /// One degree per column, ascending.
    fn column_sequence(&self) -> Vec<usize> {
        self.columns
            .iter()
            .flat_map(|(&d, &c)| std::iter::repeat_n(d, c))
            .collect()
    }
}

/// Length-independent description of an ensemble: a design rate plus column
/// degree fractions. Parsed from a small text format:
///
/// ```text
/// # comment
/// rate 0.2
/// col 3 0.9
/// col 8 0.1
/// ```
#[derive(Clone, Debug, PartialEq)]
pub struct DegreeTemplate {
    pub rate: f64,
    pub columns: Vec<(usize, f64)>,
}

impl DegreeTemplate {
    /// Column counts by largest-remainder rounding, `round(n(1-rate))` rows.
    pub fn instantiate(&self, n_cols: usize) -> Result<DegreeDistribution> {
        let total: f64 = self.columns.iter().map(|c| c.1).sum();
        if !(total > 0.0) {
            return Err(Error::InfeasibleDistribution("fractions sum to zero".into()));
        }
        let exact: Vec<f64> = self
            .columns
            .iter()
            .map(|&(_, f)| f / total * n_cols as f64)
            .collect();
        let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
        let mut short = n_cols - counts.iter().sum::<usize>();
        let mut order: Vec<usize> = (0..counts.len()).collect();
        order.sort_by(|&a, &b| {
            let (ra, rb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        for &i in order.iter().cycle() {
            if short == 0 {
                break;
            }
            counts[i] += 1;
            short -= 1;
        }
        let n_rows = (n_cols as f64 * (1.0 - self.rate)).round() as usize;
        let pairs: Vec<(usize, usize)> = self
            .columns
            .iter()
            .zip(counts)
            .map(|(&(d, _), c)| (d, c))
            .collect();
        DegreeDistribution::concentrated(&pairs, n_rows)
    }
}

impl FromStr for DegreeTemplate {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| {
            Error::InfeasibleDistribution(format!("line {line}: {msg}"))
        };
        let mut rate = None;
        let mut columns = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields.as_slice() {
                ["rate", r] => {
                    let r: f64 = r.parse().map_err(|_| bad(i + 1, "bad rate"))?;
                    if !(r > 0.0 && r < 1.0) {
                        return Err(bad(i + 1, "rate must lie in (0, 1)"));
                    }
                    rate = Some(r);
                }
                ["col", d, f] => {
                    let d: usize = d.parse().map_err(|_| bad(i + 1, "bad degree"))?;
                    let f: f64 = f.parse().map_err(|_| bad(i + 1, "bad fraction"))?;
                    if d == 0 || !(f >= 0.0) {
                        return Err(bad(i + 1, "degree must be >= 1 and fraction >= 0"));
                    }
                    columns.push((d, f));
                }
                _ => return Err(bad(i + 1, "expected `rate <r>` or `col <degree> <fraction>`")),
            }
        }
        let rate = rate.ok_or_else(|| bad(0, "missing `rate`"))?;
        if columns.is_empty() {
            return Err(bad(0, "no `col` entries"));
        }
        Ok(DegreeTemplate { rate, columns })
    }
}

/// Progressive edge growth: columns are processed in ascending degree order,
/// and each new edge goes to a row as far as possible from the column in the
/// current graph (an unreachable row if any), preferring the lowest current
/// row degree. Remaining ties are broken by a ChaCha8 stream seeded with
/// `seed`, so the result is a pure function of its inputs.
///
/// Column degrees are realized exactly. Row degrees follow from the
/// lowest-degree preference and are concentrated but not forced.
pub fn build_peg(dist: &DegreeDistribution, n_cols: usize, seed: u64) -> Result<ParityCheckMatrix> {
    if dist.n_cols() != n_cols {
        return Err(Error::InfeasibleDistribution(format!(
            "distribution has {} columns, asked for {n_cols}",
            dist.n_cols()
        )));
    }
    let n_rows = dist.n_rows();
    let degrees = dist.column_sequence();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut row_adj: Vec<Vec<usize>> = vec![Vec::new(); n_rows];
    let mut col_adj: Vec<Vec<usize>> = vec![Vec::new(); n_cols];
    let mut row_mark = vec![0u32; n_rows];
    let mut col_mark = vec![0u32; n_cols];
    let mut stamp = 0u32;
    let mut candidates = Vec::new();
    let mut frontier = Vec::new();
    let mut next = Vec::new();

    for (j, &degree) in degrees.iter().enumerate() {
        for k in 0..degree {
            candidates.clear();
            if k == 0 {
                candidates.extend(0..n_rows);
            } else {
                stamp += 1;
                col_mark[j] = stamp;
                frontier.clear();
                for &r in &col_adj[j] {
                    row_mark[r] = stamp;
                    frontier.push(r);
                }
                let mut reached = frontier.len();
                if reached == n_rows {
                    return Err(Error::InfeasibleDistribution(format!(
                        "column {j} already touches every row"
                    )));
                }
                loop {
                    next.clear();
                    for &r in &frontier {
                        for &c in &row_adj[r] {
                            if col_mark[c] == stamp {
                                continue;
                            }
                            col_mark[c] = stamp;
                            for &r2 in &col_adj[c] {
                                if row_mark[r2] != stamp {
                                    row_mark[r2] = stamp;
                                    next.push(r2);
                                }
                            }
                        }
                    }
                    if next.is_empty() {
                        candidates.extend((0..n_rows).filter(|&r| row_mark[r] != stamp));
                        break;
                    }
                    if reached + next.len() == n_rows {
                        candidates.extend_from_slice(&next);
                        break;
                    }
                    reached += next.len();
                    std::mem::swap(&mut frontier, &mut next);
                }
            }
            let min_deg = candidates.iter().map(|&r| row_adj[r].len()).min().unwrap();
            candidates.retain(|&r| row_adj[r].len() == min_deg);
            candidates.sort_unstable();
            let row = candidates[rng.gen_range(0..candidates.len())];
            row_adj[row].push(j);
            col_adj[j].push(row);
        }
    }
    ParityCheckMatrix::from_rows(n_cols, row_adj)
        .map_err(|e| Error::InfeasibleDistribution(e.to_string()))
}
