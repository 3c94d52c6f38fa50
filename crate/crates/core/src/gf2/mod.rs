//! Sparse binary parity-check matrices and syndrome algebra over GF(2).

mod alist;
mod peg;

use std::ops::Deref;

use crate::{Error, Result};

pub use alist::{load_alist, save_alist};
pub use peg::{build_peg, DegreeDistribution, DegreeTemplate};

/// A word over GF(2), one byte per bit holding 0 or 1.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct BitVector(Vec<u8>);

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        BitVector(vec![0; len])
    }

    pub fn get(&self, i: usize) -> u8 {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, bit: u8) {
        self.0[i] = bit & 1;
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i] ^= 1;
    }

    /// Hamming weight.
    pub fn weight(&self) -> usize {
        self.0.iter().map(|&b| b as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&b| b == 0)
    }

    /// Elementwise XOR. Panics if the lengths differ.
    pub fn xor(&self, other: &BitVector) -> BitVector {
        assert_eq!(self.len(), other.len(), "xor of unequal-length words");
        self.0.iter().zip(&other.0).map(|(a, b)| a ^ b).collect()
    }

    /// Positions where the two words differ.
    pub fn differences(&self, other: &BitVector) -> Vec<usize> {
        self.0
            .iter()
            .zip(&other.0)
            .enumerate()
            .filter(|(_, (a, b))| a != b)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.0
    }
}

impl Deref for BitVector {
    type Target = [u8];

    fn deref(&self) -> &[u8] {
        &self.0
    }
}

impl From<Vec<u8>> for BitVector {
    fn from(mut bits: Vec<u8>) -> Self {
        bits.iter_mut().for_each(|b| *b &= 1);
        BitVector(bits)
    }
}

impl From<&[u8]> for BitVector {
    fn from(bits: &[u8]) -> Self {
        bits.iter().copied().collect()
    }
}

impl FromIterator<u8> for BitVector {
    fn from_iter<I: IntoIterator<Item = u8>>(iter: I) -> Self {
        BitVector(iter.into_iter().map(|b| b & 1).collect())
    }
}

/// Sorted set of column indices drawn from `0..universe`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexSet {
    universe: usize,
    members: Vec<usize>,
}

impl IndexSet {
    pub fn new(universe: usize, members: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut members: Vec<usize> = members.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        if let Some(&last) = members.last() {
            if last >= universe {
                return Err(Error::IndexOutOfRange {
                    index: last,
                    limit: universe,
                });
            }
        }
        Ok(IndexSet { universe, members })
    }

    pub fn empty(universe: usize) -> Self {
        IndexSet {
            universe,
            members: Vec::new(),
        }
    }

    pub fn full(universe: usize) -> Self {
        IndexSet {
            universe,
            members: (0..universe).collect(),
        }
    }

    /// Builds the set `{ i : mask[i] }`.
    pub fn from_mask(mask: &[bool]) -> Self {
        IndexSet {
            universe: mask.len(),
            members: (0..mask.len()).filter(|&i| mask[i]).collect(),
        }
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.binary_search(&i).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.members
    }

    pub fn complement(&self) -> IndexSet {
        let mut mask = vec![true; self.universe];
        for &i in &self.members {
            mask[i] = false;
        }
        IndexSet::from_mask(&mask)
    }

    pub fn to_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.universe];
        for &i in &self.members {
            mask[i] = true;
        }
        mask
    }
}

/// Sparse binary `M x N` parity-check matrix with both row and column
/// adjacency.
///
/// Construction validates the matrix: indices in range, no repeated entries,
/// and every row and column of degree at least one. Once built the matrix is
/// immutable, so it can be shared freely between decoding threads.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParityCheckMatrix {
    n_rows: usize,
    n_cols: usize,
    rows: Vec<Vec<usize>>,
    cols: Vec<Vec<usize>>,
}

impl ParityCheckMatrix {
    /// Builds a matrix from per-row column lists (any order).
    pub fn from_rows(n_cols: usize, rows: Vec<Vec<usize>>) -> Result<Self> {
        let n_rows = rows.len();
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::InvalidMatrix(format!(
                "empty matrix ({n_rows} x {n_cols})"
            )));
        }
        let mut rows = rows;
        let mut cols = vec![Vec::new(); n_cols];
        for (m, row) in rows.iter_mut().enumerate() {
            row.sort_unstable();
            if let Some(w) = row.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::InvalidMatrix(format!(
                    "row {m} lists column {} twice",
                    w[0]
                )));
            }
            if row.is_empty() {
                return Err(Error::InvalidMatrix(format!("row {m} has degree 0")));
            }
            for &n in row.iter() {
                if n >= n_cols {
                    return Err(Error::IndexOutOfRange {
                        index: n,
                        limit: n_cols,
                    });
                }
                cols[n].push(m);
            }
        }
        if let Some(n) = cols.iter().position(|c| c.is_empty()) {
            return Err(Error::InvalidMatrix(format!("column {n} has degree 0")));
        }
        Ok(ParityCheckMatrix {
            n_rows,
            n_cols,
            rows,
            cols,
        })
    }

    /// Builds a matrix from `(row, col)` edges.
    pub fn from_edges(
        n_rows: usize,
        n_cols: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut rows = vec![Vec::new(); n_rows];
        for (m, n) in edges {
            if m >= n_rows {
                return Err(Error::IndexOutOfRange {
                    index: m,
                    limit: n_rows,
                });
            }
            rows[m].push(n);
        }
        Self::from_rows(n_cols, rows)
    }

    /// Builds a matrix from a dense 0/1 row-major description.
    pub fn from_dense(dense: &[&[u8]]) -> Result<Self> {
        let n_cols = dense.first().map_or(0, |r| r.len());
        let rows = dense
            .iter()
            .map(|r| (0..r.len()).filter(|&n| r[n] != 0).collect())
            .collect();
        Self::from_rows(n_cols, rows)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn n_edges(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Design rate `1 - M/N`.
    pub fn rate(&self) -> f64 {
        1.0 - self.n_rows as f64 / self.n_cols as f64
    }

    /// Sorted column indices of row `m`.
    pub fn row(&self, m: usize) -> &[usize] {
        &self.rows[m]
    }

    /// Sorted row indices of column `n`.
    pub fn col(&self, n: usize) -> &[usize] {
        &self.cols[n]
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn cols(&self) -> &[Vec<usize>] {
        &self.cols
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(m, r)| r.iter().map(move |&n| (m, n)))
    }

    fn check_word(&self, u: &[u8]) -> Result<()> {
        if u.len() != self.n_cols {
            return Err(Error::Dimension {
                what: "word",
                got: u.len(),
                expected: self.n_cols,
            });
        }
        Ok(())
    }

    fn row_parity(&self, m: usize, u: &[u8]) -> u8 {
        self.rows[m].iter().fold(0, |acc, &n| acc ^ u[n])
    }

    /// `s = u H^T`.
    pub fn syndrome(&self, u: &[u8]) -> Result<BitVector> {
        self.check_word(u)?;
        Ok((0..self.n_rows).map(|m| self.row_parity(m, u)).collect())
    }

    /// True iff `syndrome(u) == s`. Both lengths must match.
    pub fn satisfies(&self, u: &[u8], s: &[u8]) -> Result<bool> {
        self.check_word(u)?;
        self.check_syndrome(s)?;
        Ok((0..self.n_rows).all(|m| self.row_parity(m, u) == s[m]))
    }

    /// Number of rows whose parity disagrees with `s`.
    pub fn unsatisfied(&self, u: &[u8], s: &[u8]) -> Result<usize> {
        self.check_word(u)?;
        self.check_syndrome(s)?;
        Ok((0..self.n_rows)
            .filter(|&m| self.row_parity(m, u) != s[m])
            .count())
    }

    pub(crate) fn check_syndrome(&self, s: &[u8]) -> Result<()> {
        if s.len() != self.n_rows {
            return Err(Error::Dimension {
                what: "syndrome",
                got: s.len(),
                expected: self.n_rows,
            });
        }
        Ok(())
    }

    fn check_set(&self, set: &IndexSet) -> Result<()> {
        if set.universe() != self.n_cols {
            return Err(Error::Dimension {
                what: "index set universe",
                got: set.universe(),
                expected: self.n_cols,
            });
        }
        Ok(())
    }

    /// Syndrome of `u` using only the columns in `keep`, i.e. `u_keep H_keep^T`.
    pub fn restricted_syndrome(&self, u: &[u8], keep: &IndexSet) -> Result<BitVector> {
        self.check_word(u)?;
        self.check_set(keep)?;
        let mut s = BitVector::zeros(self.n_rows);
        for n in keep.iter() {
            if u[n] == 1 {
                for &m in &self.cols[n] {
                    s.flip(m);
                }
            }
        }
        Ok(s)
    }

    /// For each row, how many of its columns lie in `subset`.
    pub fn row_weights_within(&self, subset: &IndexSet) -> Result<Vec<usize>> {
        self.check_set(subset)?;
        let mut weights = vec![0; self.n_rows];
        for n in subset.iter() {
            for &m in &self.cols[n] {
                weights[m] += 1;
            }
        }
        Ok(weights)
    }

    /// True if the columns in `subset` are linearly independent over GF(2),
    /// i.e. no nonzero word supported on `subset` has a zero syndrome.
    pub fn columns_independent(&self, subset: &IndexSet) -> Result<bool> {
        self.check_set(subset)?;
        let r = subset.len();
        if r == 0 {
            return Ok(true);
        }
        let mut local = vec![usize::MAX; self.n_cols];
        for (k, n) in subset.iter().enumerate() {
            local[n] = k;
        }
        // one bit-packed row per check that touches the subset
        let words = r.div_ceil(64);
        let mut touched = vec![false; self.n_rows];
        let mut rows: Vec<Vec<u64>> = Vec::new();
        for n in subset.iter() {
            for &m in &self.cols[n] {
                if touched[m] {
                    continue;
                }
                touched[m] = true;
                let mut bits = vec![0u64; words];
                for &c in &self.rows[m] {
                    let k = local[c];
                    if k != usize::MAX {
                        bits[k / 64] |= 1 << (k % 64);
                    }
                }
                rows.push(bits);
            }
        }
        if rows.len() < r {
            return Ok(false);
        }
        let mut rank = 0;
        for k in 0..r {
            let (w, bit) = (k / 64, 1u64 << (k % 64));
            let Some(pivot) = (rank..rows.len()).find(|&i| rows[i][w] & bit != 0) else {
                return Ok(false);
            };
            rows.swap(rank, pivot);
            let (head, tail) = rows.split_at_mut(rank + 1);
            let p = &head[rank];
            for row in tail.iter_mut().filter(|row| row[w] & bit != 0) {
                for (x, y) in row[w..].iter_mut().zip(&p[w..]) {
                    *x ^= y;
                }
            }
            rank += 1;
        }
        Ok(true)
    }

    /// True if some pair of columns shares two or more rows.
    pub fn has_four_cycle(&self) -> bool {
        let mut seen = vec![usize::MAX; self.n_cols];
        for n in 0..self.n_cols {
            for &m in &self.cols[n] {
                for &k in &self.rows[m] {
                    if k > n {
                        if seen[k] == n {
                            return true;
                        }
                        seen[k] = n;
                    }
                }
            }
        }
        false
    }

    /// Observed column/row degree multiplicities.
    pub fn degree_distribution(&self) -> DegreeDistribution {
        DegreeDistribution::from_degrees(
            self.cols.iter().map(Vec::len),
            self.rows.iter().map(Vec::len),
        )
    }
}

/// The 4 x 6 matrix used by the peeling examples.
#[cfg(test)]
pub(crate) fn peel_example() -> ParityCheckMatrix {
    ParityCheckMatrix::from_rows(
        6,
        vec![vec![0, 1, 4], vec![1, 2, 5], vec![0, 3, 5], vec![2, 3, 4]],
    )
    .unwrap()
}
