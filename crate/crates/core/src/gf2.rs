//! Dense GF(2) vectors and matrices.
//!
//! Bits are packed little-endian into `u64` words, row-major for matrices.
//! Every external rendering is a plain `0`/`1` string, so the packing never
//! leaks into files or reports.

use std::fmt;

use crate::error::{Error, Result};

const WORD: usize = 64;

/// Largest rank whose row span [`BitMatrix::row_span`] will enumerate.
pub const MAX_SPAN_RANK: usize = 24;

fn words_for(len: usize) -> usize {
    len.div_ceil(WORD)
}

/// A fixed-length vector over GF(2). Bits past `len` are always zero.
///
/// Ordering is by length, then lexicographic on the `0`/`1` string.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        assert!(len > 0, "bit vectors must be non-empty");
        BitVector {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut v = Self::zeros(len);
        v.words.iter_mut().for_each(|w| *w = !0);
        v.clear_tail();
        v
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let bits: Vec<bool> = bits.into_iter().collect();
        let mut v = Self::zeros(bits.len());
        for (i, b) in bits.into_iter().enumerate() {
            if b {
                v.set(i, true);
            }
        }
        v
    }

    /// Vector of length `len` with ones exactly at `positions`.
    pub fn from_positions(len: usize, positions: impl IntoIterator<Item = usize>) -> Self {
        let mut v = Self::zeros(len);
        for p in positions {
            v.set(p, true);
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Positions of the set bits in increasing order.
    pub fn ones_positions(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.weight());
        for (wi, &w) in self.words.iter().enumerate() {
            let mut w = w;
            while w != 0 {
                let t = w.trailing_zeros() as usize;
                out.push(wi * WORD + t);
                w &= w - 1;
            }
        }
        out
    }

    pub fn xor(&self, other: &BitVector) -> Result<BitVector> {
        if self.len != other.len {
            return Err(Error::Dimension(format!(
                "cannot add vectors of lengths {} and {}",
                self.len, other.len
            )));
        }
        let mut out = self.clone();
        out.xor_assign_unchecked(other);
        Ok(out)
    }

    /// In-place XOR; caller guarantees equal lengths.
    #[inline]
    pub(crate) fn xor_assign_unchecked(&mut self, other: &BitVector) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= *b;
        }
    }

    pub fn complement(&self) -> BitVector {
        let mut out = self.clone();
        out.words.iter_mut().for_each(|w| *w = !*w);
        out.clear_tail();
        out
    }

    /// Number of positions where both vectors are one.
    pub fn and_weight(&self, other: &BitVector) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    /// `out[i] = self[perm[i]]`.
    pub fn permuted(&self, perm: &[usize]) -> BitVector {
        assert_eq!(perm.len(), self.len);
        let mut out = BitVector::zeros(self.len);
        for (i, &p) in perm.iter().enumerate() {
            if self.get(p) {
                out.set(i, true);
            }
        }
        out
    }

    fn clear_tail(&mut self) {
        let rem = self.len % WORD;
        if rem != 0 {
            let last = self.words.len() - 1;
            self.words[last] &= (1u64 << rem) - 1;
        }
    }

    pub fn parse(s: &str) -> Result<BitVector> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::parse(1, 1, "empty bit string"));
        }
        let mut bits = Vec::with_capacity(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                other => return Err(Error::parse(1, i + 1, format!("unexpected character `{other}`"))),
            }
        }
        Ok(BitVector::from_bits(bits))
    }
}

impl Ord for BitVector {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.len.cmp(&other.len).then_with(|| {
            for (a, b) in self.words.iter().zip(&other.words) {
                let d = a ^ b;
                if d != 0 {
                    let low = d & d.wrapping_neg();
                    return (a & low).cmp(&(b & low));
                }
            }
            std::cmp::Ordering::Equal
        })
    }
}

impl PartialOrd for BitVector {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({self})")
    }
}

/// Dense row-major matrix over GF(2).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BitVector>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        BitMatrix {
            rows,
            cols,
            data: (0..rows).map(|_| BitVector::zeros(cols)).collect(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn all_ones(rows: usize, cols: usize) -> Self {
        BitMatrix {
            rows,
            cols,
            data: (0..rows).map(|_| BitVector::ones(cols)).collect(),
        }
    }

    pub fn from_rows(rows: Vec<BitVector>) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::Dimension("matrix needs at least one row".into()));
        };
        let cols = first.len();
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != cols) {
            return Err(Error::Dimension(format!(
                "row {i} has length {} but row 0 has length {cols}",
                r.len()
            )));
        }
        Ok(BitMatrix {
            rows: rows.len(),
            cols,
            data: rows,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &BitVector {
        &self.data[i]
    }

    pub fn row_vectors(&self) -> &[BitVector] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        self.data[r].get(c)
    }

    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        self.data[r].set(c, value)
    }

    pub fn row_sums(&self) -> Vec<usize> {
        self.data.iter().map(BitVector::weight).collect()
    }

    pub fn col_sums(&self) -> Vec<usize> {
        let mut sums = vec![0; self.cols];
        for r in &self.data {
            for c in r.ones_positions() {
                sums[c] += 1;
            }
        }
        sums
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.rows);
        for (r, row) in self.data.iter().enumerate() {
            for c in row.ones_positions() {
                t.set(c, r, true);
            }
        }
        t
    }

    /// `A + J`: every entry flipped.
    pub fn complement(&self) -> BitMatrix {
        BitMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(BitVector::complement).collect(),
        }
    }

    /// The matrix `M` with `M[i][j] = self[row_perm[i]][col_perm[j]]`.
    pub fn permuted(&self, row_perm: &[usize], col_perm: &[usize]) -> BitMatrix {
        assert_eq!(row_perm.len(), self.rows);
        assert_eq!(col_perm.len(), self.cols);
        BitMatrix {
            rows: self.rows,
            cols: self.cols,
            data: row_perm
                .iter()
                .map(|&r| self.data[r].permuted(col_perm))
                .collect(),
        }
    }

    /// Rank over GF(2). Works on a copy; `self` is untouched.
    pub fn rank2(&self) -> usize {
        reduced_basis(&self.data).len()
    }

    /// Echelon basis of the row span.
    pub fn basis(&self) -> Vec<BitVector> {
        reduced_basis(&self.data)
    }

    /// Every GF(2) combination of the rows, sorted, without duplicates.
    pub fn row_span(&self) -> Result<Vec<BitVector>> {
        let basis = self.enumerable_basis()?;
        let mut out = Vec::with_capacity(1 << basis.len());
        gray_walk(&basis, self.cols, |v| out.push(v.clone()));
        out.sort();
        Ok(out)
    }

    /// Weight distribution of the row span: entry `w` counts span vectors of weight `w`.
    pub fn span_weight_distribution(&self) -> Result<Vec<u64>> {
        let basis = self.enumerable_basis()?;
        let mut dist = vec![0u64; self.cols + 1];
        gray_walk(&basis, self.cols, |v| dist[v.weight()] += 1);
        Ok(dist)
    }

    fn enumerable_basis(&self) -> Result<Vec<BitVector>> {
        if self.cols == 0 {
            return Err(Error::Dimension("matrix has no columns".into()));
        }
        let basis = reduced_basis(&self.data);
        if basis.len() > MAX_SPAN_RANK {
            return Err(Error::Feasibility(format!(
                "row span of rank {} has 2^{} vectors (limit rank {MAX_SPAN_RANK})",
                basis.len(),
                basis.len()
            )));
        }
        Ok(basis)
    }

    /// Text form: `rows cols` then one `0`/`1` string per row.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.rows, self.cols);
        for r in &self.data {
            s.push_str(&r.to_string());
            s.push('\n');
        }
        s
    }

    pub fn parse_text(text: &str) -> Result<BitMatrix> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (hl, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, 1, "missing `rows cols` header"))?;
        let dims: Vec<&str> = header.split_whitespace().collect();
        if dims.len() != 2 {
            return Err(Error::parse(hl + 1, 1, "header must be `rows cols`"));
        }
        let parse_dim = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::parse(hl + 1, 1, format!("bad dimension `{s}`")))
        };
        let (rows, cols) = (parse_dim(dims[0])?, parse_dim(dims[1])?);
        if rows == 0 || cols == 0 {
            return Err(Error::parse(hl + 1, 1, "dimensions must be positive"));
        }
        let mut data = Vec::with_capacity(rows);
        for (ln, line) in lines {
            let v = BitVector::parse(line).map_err(|e| match e {
                Error::Parse { column, message, .. } => Error::parse(ln + 1, column, message),
                other => other,
            })?;
            if v.len() != cols {
                return Err(Error::parse(
                    ln + 1,
                    1,
                    format!("row has {} bits, expected {cols}", v.len()),
                ));
            }
            data.push(v);
        }
        if data.len() != rows {
            return Err(Error::parse(
                hl + 1,
                1,
                format!("header promises {rows} rows, found {}", data.len()),
            ));
        }
        Ok(BitMatrix { rows, cols, data })
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.rows, self.cols)?;
        for r in &self.data {
            writeln!(f, "  {r}")?;
        }
        Ok(())
    }
}

/// Row-echelon basis of the span of `rows`.
fn reduced_basis(rows: &[BitVector]) -> Vec<BitVector> {
    let mut work: Vec<BitVector> = rows.to_vec();
    let Some(first) = work.first() else {
        return Vec::new();
    };
    let cols = first.len();
    let mut rank = 0;
    for col in 0..cols {
        if rank == work.len() {
            break;
        }
        let Some(pivot) = (rank..work.len()).find(|&r| work[r].get(col)) else {
            continue;
        };
        work.swap(rank, pivot);
        let (head, tail) = work.split_at_mut(rank + 1);
        let p = &head[rank];
        for r in tail.iter_mut() {
            if r.get(col) {
                r.xor_assign_unchecked(p);
            }
        }
        rank += 1;
    }
    work.truncate(rank);
    work
}

/// Visit all `2^basis.len()` span vectors in Gray-code order.
fn gray_walk(basis: &[BitVector], len: usize, mut visit: impl FnMut(&BitVector)) {
    let mut cur = BitVector::zeros(len);
    visit(&cur);
    let total: u64 = 1 << basis.len();
    for i in 1..total {
        cur.xor_assign_unchecked(&basis[i.trailing_zeros() as usize]);
        visit(&cur);
    }
}

/// Basis of the first-order Reed-Muller code RM(1, m), as an `(m+1) x 2^m` matrix.
///
/// Row `i` (1-based, `i <= m`) consists of `2^i` alternating runs of `2^(m-i)`
/// zeros and ones, starting with zeros; the last row is all ones.
pub fn rm1_basis(m: usize) -> Result<BitMatrix> {
    if m == 0 {
        return Err(Error::Parameter("RM(1, m) needs m >= 1".into()));
    }
    if m > 30 {
        return Err(Error::Feasibility(format!("RM(1, {m}) has length 2^{m}")));
    }
    let n = 1usize << m;
    let mut rows = Vec::with_capacity(m + 1);
    for i in 1..=m {
        rows.push(BitVector::from_bits((0..n).map(|p| (p >> (m - i)) & 1 == 1)));
    }
    rows.push(BitVector::ones(n));
    BitMatrix::from_rows(rows)
}

/// Walsh-Hadamard coefficients `W(a) = sum_x (-1)^(f(x) + a.x)` of a Boolean function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalshSpectrum {
    pub coefficients: Vec<i64>,
}

impl WalshSpectrum {
    pub fn num_vars(&self) -> usize {
        self.coefficients.len().trailing_zeros() as usize
    }

    pub fn energy(&self) -> i64 {
        self.coefficients.iter().map(|c| c * c).sum()
    }
}

fn log2_exact(len: usize) -> Result<usize> {
    if len.is_power_of_two() {
        Ok(len.trailing_zeros() as usize)
    } else {
        Err(Error::Dimension(format!(
            "truth table length {len} is not a power of two"
        )))
    }
}

pub fn walsh_spectrum(f: &BitVector) -> Result<WalshSpectrum> {
    log2_exact(f.len())?;
    let mut c: Vec<i64> = (0..f.len())
        .map(|i| if f.get(i) { -1 } else { 1 })
        .collect();
    let mut h = 1;
    while h < c.len() {
        for block in c.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
    Ok(WalshSpectrum { coefficients: c })
}

/// True iff every Walsh coefficient has magnitude `2^(m/2)`.
///
/// Only defined for truth tables of even, positive log-length; anything else
/// is a dimension error rather than `false`.
pub fn is_bent(f: &BitVector) -> Result<bool> {
    let m = log2_exact(f.len())?;
    if m == 0 || m % 2 == 1 {
        return Err(Error::Dimension(format!(
            "bentness needs an even, positive number of variables, got {m}"
        )));
    }
    let target = 1i64 << (m / 2);
    Ok(walsh_spectrum(f)?
        .coefficients
        .iter()
        .all(|c| c.abs() == target))
}
