//! Difference sets, their developments, and the symmetric difference property.

use std::collections::HashSet;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gf2::{is_bent, BitMatrix, BitVector};
use crate::group::FiniteGroup;

/// Largest `C(v, k)` that [`enumerate_difference_sets`] will scan.
pub const MAX_SUBSETS: u128 = 10_000_000;

/// A verified `(v, k, lambda)` difference set.
#[derive(Clone, Debug)]
pub struct DifferenceSet {
    group: Arc<FiniteGroup>,
    members: Vec<usize>,
    v: usize,
    k: usize,
    lambda: usize,
}

impl PartialEq for DifferenceSet {
    fn eq(&self, other: &Self) -> bool {
        self.members == other.members && *self.group == *other.group
    }
}

impl DifferenceSet {
    pub fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    /// Member indices, sorted.
    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn params(&self) -> (usize, usize, usize) {
        (self.v, self.k, self.lambda)
    }

    pub fn contains(&self, a: usize) -> bool {
        self.members.binary_search(&a).is_ok()
    }

    /// Indicator vector over the group's element order.
    pub fn indicator(&self) -> BitVector {
        BitVector::from_positions(self.v, self.members.iter().copied())
    }

    pub fn member_words(&self) -> Vec<String> {
        self.members
            .iter()
            .map(|&m| self.group.element_name(m))
            .collect()
    }
}

/// Count how often each element occurs as `d1 * d2^-1` with `d1 != d2`.
fn quotient_counts(g: &FiniteGroup, members: &[usize]) -> Vec<usize> {
    let mut counts = vec![0usize; g.order()];
    let inverses: Vec<usize> = members.iter().map(|&d| g.inv(d)).collect();
    for &d1 in members {
        for (&d2, &d2inv) in members.iter().zip(&inverses) {
            if d1 != d2 {
                counts[g.mul(d1, d2inv)] += 1;
            }
        }
    }
    counts
}

pub fn verify_difference_set(g: &Arc<FiniteGroup>, members: &[usize]) -> Result<DifferenceSet> {
    if members.is_empty() {
        return Err(Error::Parameter("difference set must be non-empty".into()));
    }
    if let Some(&bad) = members.iter().find(|&&m| m >= g.order()) {
        return Err(Error::Parameter(format!(
            "element index {bad} is outside {} (order {})",
            g.label(),
            g.order()
        )));
    }
    let mut sorted = members.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let counts = quotient_counts(g, &sorted);
    let lambda = counts.get(1).copied().unwrap_or(0);
    if let Some(bad) = (2..g.order()).find(|&e| counts[e] != lambda) {
        return Err(Error::NotDifferenceSet {
            first_element: g.element_name(1),
            first_count: lambda,
            second_element: g.element_name(bad),
            second_count: counts[bad],
        });
    }
    let (v, k) = (g.order(), sorted.len());
    if k * (k - 1) != lambda * (v - 1) {
        return Err(Error::Internal(format!(
            "counting identity k(k-1) = lambda(v-1) fails for ({v},{k},{lambda})"
        )));
    }
    Ok(DifferenceSet {
        group: g.clone(),
        members: sorted,
        v,
        k,
        lambda,
    })
}

/// An element of the integral group ring, one coefficient per group element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignedGroupRingElement {
    pub group: Arc<FiniteGroup>,
    pub coeffs: Vec<i64>,
}

impl SignedGroupRingElement {
    /// The `+1/-1` encoding of a subset: `-1` on members, `+1` elsewhere.
    pub fn signed_indicator(g: &Arc<FiniteGroup>, members: &[usize]) -> Self {
        let mut coeffs = vec![1i64; g.order()];
        for &m in members {
            coeffs[m] = -1;
        }
        SignedGroupRingElement {
            group: g.clone(),
            coeffs,
        }
    }

    /// Group-ring product `self * other`.
    pub fn mul(&self, other: &SignedGroupRingElement) -> SignedGroupRingElement {
        let g = &self.group;
        let mut coeffs = vec![0i64; g.order()];
        for (a, &ca) in self.coeffs.iter().enumerate() {
            if ca == 0 {
                continue;
            }
            for (b, &cb) in other.coeffs.iter().enumerate() {
                coeffs[g.mul(a, b)] += ca * cb;
            }
        }
        SignedGroupRingElement {
            group: g.clone(),
            coeffs,
        }
    }

    /// `sum c_g g^-1`.
    pub fn inverted(&self) -> SignedGroupRingElement {
        let mut coeffs = vec![0i64; self.coeffs.len()];
        for (a, &c) in self.coeffs.iter().enumerate() {
            coeffs[self.group.inv(a)] = c;
        }
        SignedGroupRingElement {
            group: self.group.clone(),
            coeffs,
        }
    }

    /// True when the element is `c * identity` for the given `c`.
    pub fn is_scalar(&self, c: i64) -> bool {
        self.coeffs[0] == c && self.coeffs[1..].iter().all(|&x| x == 0)
    }
}

/// `D * D^(-1)` in the signed encoding; equals `|G|` times the identity for a
/// difference set in a 2-group of square order.
pub fn signed_autocorrelation(g: &Arc<FiniteGroup>, members: &[usize]) -> SignedGroupRingElement {
    let d = SignedGroupRingElement::signed_indicator(g, members);
    d.mul(&d.inverted())
}

/// The design whose blocks are the left translates `gD`.
#[derive(Clone, Debug)]
pub struct Development {
    pub ds: DifferenceSet,
    /// Row `g` has ones at the columns of `gD`; rows and columns follow the group's element order.
    pub matrix: BitMatrix,
}

pub fn develop(ds: &DifferenceSet) -> Development {
    let g = &ds.group;
    let v = g.order();
    let rows = (0..v)
        .map(|a| BitVector::from_positions(v, ds.members.iter().map(|&d| g.mul(a, d))))
        .collect();
    Development {
        ds: ds.clone(),
        matrix: BitMatrix::from_rows(rows).expect("group of positive order"),
    }
}

pub fn complement_design(dev: &Development) -> BitMatrix {
    dev.matrix.complement()
}

pub fn two_rank(dev: &Development) -> usize {
    dev.matrix.rank2()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdpMethod {
    TripleScan,
    RankScreen,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SdpWitness {
    /// Row indices `i < j < k`.
    pub rows: (usize, usize, usize),
    /// `r_i + r_j + r_k`, which is neither a row nor a row complement.
    pub sum: BitVector,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SdpReport {
    pub holds: bool,
    pub witness: Option<SdpWitness>,
    pub method: SdpMethod,
}

/// Symmetric difference property by scanning every triple of distinct rows.
///
/// The reported witness is the lexicographically least failing triple.
pub fn has_sdp(dev: &Development) -> SdpReport {
    matrix_has_sdp(&dev.matrix)
}

pub fn matrix_has_sdp(m: &BitMatrix) -> SdpReport {
    let rows = m.row_vectors();
    let mut lookup: HashSet<&[u64]> = HashSet::with_capacity(2 * rows.len());
    let complements: Vec<BitVector> = rows.iter().map(BitVector::complement).collect();
    for r in rows.iter().chain(&complements) {
        lookup.insert(r.words());
    }
    let n = rows.len();
    let witness = (0..n).into_par_iter().find_map_first(|i| {
        let mut sum = rows[i].clone();
        for j in i + 1..n {
            sum.xor_assign_unchecked(&rows[j]);
            for k in j + 1..n {
                sum.xor_assign_unchecked(&rows[k]);
                let ok = lookup.contains(sum.words());
                if !ok {
                    return Some(SdpWitness {
                        rows: (i, j, k),
                        sum,
                    });
                }
                sum.xor_assign_unchecked(&rows[k]);
            }
            sum.xor_assign_unchecked(&rows[j]);
        }
        None
    });
    SdpReport {
        holds: witness.is_none(),
        witness,
        method: SdpMethod::TripleScan,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RankScreen {
    pub rank: usize,
    /// `2n + 2` when the design has `2^(2n)` points.
    pub minimal_rank: Option<usize>,
}

impl RankScreen {
    /// Necessary condition only; never a verdict on its own.
    pub fn passes(&self) -> bool {
        self.minimal_rank == Some(self.rank)
    }
}

pub fn rank_screen(m: &BitMatrix) -> RankScreen {
    let v = m.rows();
    let minimal_rank = (v.is_power_of_two() && v.trailing_zeros().is_multiple_of(2) && v > 1)
        .then(|| v.trailing_zeros() as usize + 2);
    RankScreen {
        rank: m.rank2(),
        minimal_rank,
    }
}

/// True if every row is a bent function (the length must be an even power of two).
pub fn rows_all_bent(m: &BitMatrix) -> Result<bool> {
    for r in m.row_vectors() {
        if !is_bent(r)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Incidence matrix `-1/2 ((J - 2I)^(x n) - J)` of the symplectic design on `4^n` points.
///
/// `J` in the outer subtraction is the all-ones matrix of full size `4^n`.
pub fn symplectic_matrix(n: usize) -> Result<BitMatrix> {
    if !(1..=5).contains(&n) {
        return Err(Error::Parameter(format!(
            "symplectic matrix needs 1 <= n <= 5, got {n}"
        )));
    }
    let base: [[i64; 4]; 4] = std::array::from_fn(|i| std::array::from_fn(|j| if i == j { -1 } else { 1 }));
    let mut k: Vec<Vec<i64>> = vec![vec![1]];
    for _ in 0..n {
        let size = k.len();
        let mut next = vec![vec![0i64; size * 4]; size * 4];
        for (i, row) in k.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                for (bi, brow) in base.iter().enumerate() {
                    for (bj, &b) in brow.iter().enumerate() {
                        next[i * 4 + bi][j * 4 + bj] = x * b;
                    }
                }
            }
        }
        k = next;
    }
    let size = k.len();
    let mut m = BitMatrix::zeros(size, size);
    for (i, row) in k.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            let doubled = -(x - 1);
            match doubled {
                0 => {}
                2 => m.set(i, j, true),
                other => {
                    return Err(Error::Internal(format!(
                        "symplectic entry ({i},{j}) is {other}/2, not 0 or 1"
                    )))
                }
            }
        }
    }
    Ok(m)
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k.min(n));
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Every `k`-subset of `g` that is a difference set, in lexicographic member order.
pub fn enumerate_difference_sets(g: &Arc<FiniteGroup>, k: usize) -> Result<Vec<DifferenceSet>> {
    let v = g.order();
    if k == 0 || k > v {
        return Err(Error::Parameter(format!("k = {k} is not in 1..={v}")));
    }
    let subsets = binomial(v, k);
    if subsets > MAX_SUBSETS {
        return Err(Error::Feasibility(format!(
            "C({v},{k}) = {subsets} subsets exceed {MAX_SUBSETS}"
        )));
    }
    if v == 1 {
        return Ok(vec![verify_difference_set(g, &[0])?]);
    }
    if !(k * (k - 1)).is_multiple_of(v - 1) {
        return Ok(Vec::new());
    }
    let lambda = k * (k - 1) / (v - 1);
    let mut state = SubsetSearch {
        g,
        k,
        lambda,
        counts: vec![0; v],
        chosen: Vec::with_capacity(k),
        found: Vec::new(),
    };
    state.extend(0);
    state
        .found
        .into_iter()
        .map(|m| verify_difference_set(g, &m))
        .collect()
}

struct SubsetSearch<'a> {
    g: &'a FiniteGroup,
    k: usize,
    lambda: usize,
    counts: Vec<usize>,
    chosen: Vec<usize>,
    found: Vec<Vec<usize>>,
}

impl SubsetSearch<'_> {
    /// Quotients between `x` and the chosen elements, both orders.
    fn quotients(&self, x: usize) -> Vec<usize> {
        let g = self.g;
        let mut q = Vec::with_capacity(2 * self.chosen.len());
        for &c in &self.chosen {
            q.push(g.mul(x, g.inv(c)));
            q.push(g.mul(c, g.inv(x)));
        }
        q
    }

    fn extend(&mut self, start: usize) {
        if self.chosen.len() == self.k {
            self.found.push(self.chosen.clone());
            return;
        }
        let remaining = self.k - self.chosen.len();
        for x in start..=self.g.order() - remaining {
            let q = self.quotients(x);
            for &e in &q {
                self.counts[e] += 1;
            }
            if q.iter().all(|&e| self.counts[e] <= self.lambda) {
                self.chosen.push(x);
                self.extend(x + 1);
                self.chosen.pop();
            }
            for &e in &q {
                self.counts[e] -= 1;
            }
        }
    }
}

/// Menon parameters `(k, lambda)` for `v = 2^(2n)` points.
pub fn menon_params(v: usize) -> Result<(usize, usize)> {
    if v < 4 || !v.is_power_of_two() || v.trailing_zeros() % 2 == 1 {
        return Err(Error::Parameter(format!(
            "{v} is not an even power of two greater than 1"
        )));
    }
    let n = v.trailing_zeros() / 2;
    let k = (1usize << (2 * n - 1)) - (1usize << (n - 1));
    let lambda = (1usize << (2 * n - 2)) - (1usize << (n - 1));
    debug_assert_eq!(k * (k - 1), lambda * (v - 1));
    Ok((k, lambda))
}
