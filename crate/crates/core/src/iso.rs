//! Design isomorphism: invariants, witness search, classification.
//!
//! A witness `(P, Q)` for the pair `(A, B)` satisfies
//! `A[i][j] = B[row_perm[i]][col_perm[j]]` for every entry.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gf2::{BitMatrix, BitVector};
use crate::product::xor_product_matrix;

/// Largest design for which the full triple spectrum is computed.
pub const MAX_TRIPLE_SPECTRUM_POINTS: usize = 1024;
/// Default backtracking budget per pair.
pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;
/// Largest code dimension for which Schur powers are formed.
pub const MAX_SCHUR_RANK: usize = 24;
/// Up to this many blocks the rooted profiles are taken over every root block.
pub const MAX_ALL_ROOTS_BLOCKS: usize = 64;

/// `(dim C, dim C*C, dim C*C*C)` for a binary code `C`.
pub type SchurDims = (usize, usize, usize);
/// Multiset of `(subset size, Schur dims of the code punctured on the subset)`.
pub type LocalProfile = Vec<((usize, SchurDims), u64)>;
/// Multiset over root blocks of their local profiles.
pub type RootedProfile = Vec<(LocalProfile, u64)>;

/// Permutation-invariant fingerprint of an incidence matrix.
///
/// Optional fields are skipped when either side lacks them, so fingerprints
/// built with different options can still be compared.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DesignInvariant {
    pub points: usize,
    pub blocks: usize,
    pub two_rank: usize,
    /// `(weight, count)` over the row span; `None` when the span is too large to enumerate.
    pub code_weight_enumerator: Option<Vec<(usize, u64)>>,
    /// `(|B_i + B_j + B_k|, count)` over all triples of distinct rows; `None` above
    /// [`MAX_TRIPLE_SPECTRUM_POINTS`] rows.
    pub triple_spectrum: Option<Vec<(usize, u64)>>,
    /// Schur powers of the row code.
    pub schur_dims: Option<SchurDims>,
    /// For a root block `B`, the code punctured on `B ∩ B'` for every other block `B'`.
    pub block_pair_profile: Option<RootedProfile>,
    /// For a root block `B`, the code punctured on `B ∩ B' ∩ B''` for every pair of other
    /// blocks; the cube dimension is not taken here and reads 0.
    pub block_triple_profile: Option<RootedProfile>,
}

/// Field names in the order [`DesignInvariant::first_difference`] checks them.
pub const INVARIANT_FIELDS: [&str; 7] = [
    "dimensions",
    "two_rank",
    "code_weight_enumerator",
    "triple_spectrum",
    "schur_dims",
    "block_pair_profile",
    "block_triple_profile",
];

fn differ<T: PartialEq>(a: &Option<T>, b: &Option<T>) -> bool {
    matches!((a, b), (Some(x), Some(y)) if x != y)
}

impl DesignInvariant {
    /// Name of the first field on which two fingerprints disagree.
    pub fn first_difference(&self, other: &DesignInvariant) -> Option<&'static str> {
        if (self.points, self.blocks) != (other.points, other.blocks) {
            Some("dimensions")
        } else if self.two_rank != other.two_rank {
            Some("two_rank")
        } else if differ(&self.code_weight_enumerator, &other.code_weight_enumerator) {
            Some("code_weight_enumerator")
        } else if differ(&self.triple_spectrum, &other.triple_spectrum) {
            Some("triple_spectrum")
        } else if differ(&self.schur_dims, &other.schur_dims) {
            Some("schur_dims")
        } else if differ(&self.block_pair_profile, &other.block_pair_profile) {
            Some("block_pair_profile")
        } else if differ(&self.block_triple_profile, &other.block_triple_profile) {
            Some("block_triple_profile")
        } else {
            None
        }
    }

    /// True when no present field separates the two.
    pub fn compatible(&self, other: &DesignInvariant) -> bool {
        self.first_difference(other).is_none()
    }
}

/// Knobs shared by invariants, search and classification.
#[derive(Clone, Copy, Debug)]
pub struct IsoOptions {
    pub budget: u64,
    /// Caller asserts every design's automorphism group is transitive on
    /// blocks (true for group developments). Lets rooted profiles use a
    /// single root and the search fix the first block's image.
    pub block_transitive: bool,
    /// Compute the rooted profiles at all.
    pub rooted_profiles: bool,
    /// Colour block pairs and point pairs by local code keys during refinement.
    pub pair_colours: bool,
}

impl Default for IsoOptions {
    fn default() -> Self {
        IsoOptions {
            budget: DEFAULT_NODE_BUDGET,
            block_transitive: false,
            rooted_profiles: true,
            pair_colours: true,
        }
    }
}

impl IsoOptions {
    pub fn for_developments() -> Self {
        IsoOptions {
            block_transitive: true,
            ..IsoOptions::default()
        }
    }
}

pub fn invariants(m: &BitMatrix) -> DesignInvariant {
    invariants_with(m, &IsoOptions::default())
}

pub fn invariants_with(m: &BitMatrix, opts: &IsoOptions) -> DesignInvariant {
    let code_weight_enumerator = m.span_weight_distribution().ok().map(|dist| {
        dist.into_iter()
            .enumerate()
            .filter(|&(_, c)| c > 0)
            .collect()
    });
    let basis = m.basis();
    let small = basis.len() <= MAX_SCHUR_RANK;
    let words: Vec<Vec<u64>> = basis.iter().map(|b| b.words().to_vec()).collect();
    let code = CodeColumns::new(&basis, m.cols());
    let roots: Option<Vec<usize>> = if !opts.rooted_profiles || !small || m.rows() < 3 {
        None
    } else if m.rows() <= MAX_ALL_ROOTS_BLOCKS {
        Some((0..m.rows()).collect())
    } else if opts.block_transitive {
        Some(vec![0])
    } else {
        None
    };
    let scale = |roots: &[usize]| (m.rows() / roots.len()) as u64;
    DesignInvariant {
        points: m.cols(),
        blocks: m.rows(),
        two_rank: basis.len(),
        code_weight_enumerator,
        triple_spectrum: (m.rows() <= MAX_TRIPLE_SPECTRUM_POINTS).then(|| triple_spectrum(m)),
        schur_dims: small.then(|| schur_dims(&words)),
        block_pair_profile: roots
            .as_ref()
            .map(|r| rooted(r, scale(r), |i| pair_profile(m, &code, i))),
        block_triple_profile: roots
            .as_ref()
            .map(|r| rooted(r, scale(r), |i| triple_profile(m, &code, i))),
    }
}

fn rooted(roots: &[usize], scale: u64, f: impl Fn(usize) -> LocalProfile + Sync) -> RootedProfile {
    let per_root: Vec<LocalProfile> = roots.par_iter().map(|&i| f(i)).collect();
    let mut acc: BTreeMap<LocalProfile, u64> = BTreeMap::new();
    for p in per_root {
        *acc.entry(p).or_default() += scale;
    }
    acc.into_iter().collect()
}

fn triple_spectrum(m: &BitMatrix) -> Vec<(usize, u64)> {
    let rows = m.row_vectors();
    let n = rows.len();
    let width = m.cols() + 1;
    let counts = (0..n)
        .into_par_iter()
        .fold(
            || vec![0u64; width],
            |mut acc, i| {
                let ri = rows[i].words();
                let mut pair = vec![0u64; ri.len()];
                for j in i + 1..n {
                    for (p, (a, b)) in pair.iter_mut().zip(ri.iter().zip(rows[j].words())) {
                        *p = a ^ b;
                    }
                    for rk in &rows[j + 1..] {
                        let w: u32 = pair
                            .iter()
                            .zip(rk.words())
                            .map(|(p, c)| (p ^ c).count_ones())
                            .sum();
                        acc[w as usize] += 1;
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; width],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    counts
        .into_iter()
        .enumerate()
        .filter(|&(_, c)| c > 0)
        .collect()
}

/// Incremental echelon form over packed words; each stored row is reduced
/// against the earlier ones, pivot = lowest set bit.
#[derive(Default)]
struct Echelon {
    rows: Vec<(usize, Vec<u64>)>,
}

impl Echelon {
    fn insert(&mut self, mut v: Vec<u64>) -> bool {
        for (p, r) in &self.rows {
            if v[p / 64] >> (p % 64) & 1 == 1 {
                v.iter_mut().zip(r).for_each(|(a, b)| *a ^= b);
            }
        }
        match v.iter().position(|&w| w != 0) {
            Some(i) => {
                let p = i * 64 + v[i].trailing_zeros() as usize;
                self.rows.push((p, v));
                true
            }
            None => false,
        }
    }

    fn len(&self) -> usize {
        self.rows.len()
    }
}

fn and(a: &[u64], b: &[u64]) -> Vec<u64> {
    a.iter().zip(b).map(|(x, y)| x & y).collect()
}

/// Schur-power dimensions of the span of `gens` (packed words of one length).
fn schur_dims(gens: &[Vec<u64>]) -> SchurDims {
    let Some(first) = gens.first() else {
        return (0, 0, 0);
    };
    if first.len() == 1 {
        let small: Vec<u64> = gens.iter().map(|g| g[0]).collect();
        return schur_dims_word(&small, true);
    }
    let width: usize = (0..first.len())
        .map(|w| gens.iter().fold(0u64, |a, g| a | g[w]).count_ones() as usize)
        .sum();
    let mut e1 = Echelon::default();
    let b1: Vec<&Vec<u64>> = gens.iter().filter(|g| e1.insert((*g).clone())).collect();
    let mut e2 = Echelon::default();
    let mut b2: Vec<Vec<u64>> = Vec::new();
    for i in 0..b1.len() {
        for j in i..b1.len() {
            let p = and(b1[i], b1[j]);
            if e2.insert(p.clone()) {
                b2.push(p);
            }
        }
    }
    let mut e3 = Echelon::default();
    'outer: for x in &b2 {
        for y in &b1 {
            e3.insert(and(x, y));
            if e3.len() == width {
                break 'outer;
            }
        }
    }
    (e1.len(), e2.len(), e3.len())
}

/// Single-word version of [`schur_dims`]; pivots are kept in a 64-slot table.
/// With `cube` unset the third component is left at 0.
fn schur_dims_word(gens: &[u64], cube: bool) -> SchurDims {
    struct Basis {
        by_pivot: [u64; 64],
        len: usize,
    }
    impl Basis {
        fn new() -> Self {
            Basis { by_pivot: [0; 64], len: 0 }
        }
        fn insert(&mut self, mut v: u64) -> bool {
            while v != 0 {
                let p = v.trailing_zeros() as usize;
                if self.by_pivot[p] == 0 {
                    self.by_pivot[p] = v;
                    self.len += 1;
                    return true;
                }
                v ^= self.by_pivot[p];
            }
            false
        }
    }
    let width = gens.iter().fold(0u64, |a, &g| a | g).count_ones() as usize;
    let mut e1 = Basis::new();
    let b1: Vec<u64> = gens.iter().copied().filter(|&g| e1.insert(g)).collect();
    let mut e2 = Basis::new();
    let mut b2 = Vec::new();
    for i in 0..b1.len() {
        for j in i..b1.len() {
            let p = b1[i] & b1[j];
            if e2.insert(p) {
                b2.push(p);
            }
        }
    }
    let mut e3 = Basis::new();
    if !cube {
        return (e1.len, e2.len, 0);
    }
    'outer: for &x in &b2 {
        for &y in &b1 {
            e3.insert(x & y);
            if e3.len == width {
                break 'outer;
            }
        }
    }
    (e1.len, e2.len, e3.len)
}

/// Restrict each basis vector to `positions`, packing the result.
fn puncture(basis: &[BitVector], positions: &[usize]) -> Vec<Vec<u64>> {
    let words = positions.len().div_ceil(64).max(1);
    basis
        .iter()
        .map(|b| {
            let mut out = vec![0u64; words];
            for (k, &p) in positions.iter().enumerate() {
                if b.get(p) {
                    out[k / 64] |= 1 << (k % 64);
                }
            }
            out
        })
        .collect()
}

/// Basis of the row code with, per point, the mask of basis vectors that contain it.
struct CodeColumns<'a> {
    basis: &'a [BitVector],
    masks: Vec<u32>,
}

impl<'a> CodeColumns<'a> {
    fn new(basis: &'a [BitVector], points: usize) -> Self {
        let mut masks = vec![0u32; points];
        for (i, b) in basis.iter().enumerate() {
            for p in b.ones_positions() {
                masks[p] |= 1 << i;
            }
        }
        CodeColumns { basis, masks }
    }

    /// Key of the code punctured on the intersection of `rows`.
    fn local_key(&self, rows: &[&BitVector], cube: bool) -> (usize, SchurDims) {
        let words = rows[0].words().len();
        let mut gens = [0u64; MAX_SCHUR_RANK];
        let mut n = 0usize;
        let mut positions = Vec::new();
        for w in 0..words {
            let mut x = rows.iter().fold(u64::MAX, |acc, r| acc & r.words()[w]);
            while x != 0 {
                let p = w * 64 + x.trailing_zeros() as usize;
                x &= x - 1;
                if n < 64 {
                    let mut c = self.masks[p];
                    while c != 0 {
                        gens[c.trailing_zeros() as usize] |= 1 << n;
                        c &= c - 1;
                    }
                }
                positions.push(p);
                n += 1;
            }
        }
        if n <= 64 {
            (n, schur_dims_word(&gens[..self.basis.len()], cube))
        } else {
            let (d1, d2, d3) = schur_dims(&puncture(self.basis, &positions));
            (n, (d1, d2, if cube { d3 } else { 0 }))
        }
    }
}

fn tally(keys: impl Iterator<Item = (usize, SchurDims)>) -> LocalProfile {
    let mut acc: BTreeMap<(usize, SchurDims), u64> = BTreeMap::new();
    for k in keys {
        *acc.entry(k).or_default() += 1;
    }
    acc.into_iter().collect()
}

fn pair_profile(m: &BitMatrix, code: &CodeColumns, root: usize) -> LocalProfile {
    let r0 = m.row(root);
    tally(
        (0..m.rows())
            .filter(|&j| j != root)
            .map(|j| code.local_key(&[r0, m.row(j)], true)),
    )
}

fn triple_profile(m: &BitMatrix, code: &CodeColumns, root: usize) -> LocalProfile {
    let r0 = m.row(root);
    let others: Vec<usize> = (0..m.rows()).filter(|&j| j != root).collect();
    let keys: Vec<LocalProfile> = (0..others.len())
        .into_par_iter()
        .map(|a| {
            let ra = m.row(others[a]);
            tally(others[a + 1..].iter().map(|&b| code.local_key(&[r0, ra, m.row(b)], false)))
        })
        .collect();
    let mut acc: BTreeMap<(usize, SchurDims), u64> = BTreeMap::new();
    for part in keys {
        for (k, c) in part {
            *acc.entry(k).or_default() += c;
        }
    }
    acc.into_iter().collect()
}

/// Row and column permutations carrying `b` onto `a`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IsoWitness {
    pub row_perm: Vec<usize>,
    pub col_perm: Vec<usize>,
}

impl IsoWitness {
    pub fn identity(rows: usize, cols: usize) -> IsoWitness {
        IsoWitness {
            row_perm: (0..rows).collect(),
            col_perm: (0..cols).collect(),
        }
    }

    /// Checks `a[i][j] == b[row_perm[i]][col_perm[j]]` everywhere.
    pub fn verify(&self, a: &BitMatrix, b: &BitMatrix) -> bool {
        (a.rows(), a.cols()) == (b.rows(), b.cols())
            && is_perm(&self.row_perm, a.rows())
            && is_perm(&self.col_perm, a.cols())
            && b.permuted(&self.row_perm, &self.col_perm) == *a
    }

    /// Witness for `(a, c)` from this one for `(a, b)` and `next` for `(b, c)`.
    pub fn then(&self, next: &IsoWitness) -> IsoWitness {
        IsoWitness {
            row_perm: self.row_perm.iter().map(|&i| next.row_perm[i]).collect(),
            col_perm: self.col_perm.iter().map(|&j| next.col_perm[j]).collect(),
        }
    }

    /// Witness for `(b, a)`.
    pub fn inverse(&self) -> IsoWitness {
        let inv = |p: &[usize]| {
            let mut out = vec![0; p.len()];
            for (i, &x) in p.iter().enumerate() {
                out[x] = i;
            }
            out
        };
        IsoWitness {
            row_perm: inv(&self.row_perm),
            col_perm: inv(&self.col_perm),
        }
    }
}

fn is_perm(p: &[usize], n: usize) -> bool {
    let mut seen = vec![false; n];
    p.len() == n && p.iter().all(|&x| x < n && !std::mem::replace(&mut seen[x], true))
}

/// Witness induced by a point bijection `point_map` (column `j` of `a` goes
/// to column `point_map[j]` of `b`), if it carries every block of `a` onto a
/// block of `b`.
pub fn witness_from_point_map(a: &BitMatrix, b: &BitMatrix, point_map: &[usize]) -> Option<IsoWitness> {
    if (a.rows(), a.cols()) != (b.rows(), b.cols()) || !is_perm(point_map, a.cols()) {
        return None;
    }
    let index: HashMap<&BitVector, usize> = b.row_vectors().iter().enumerate().map(|(i, r)| (r, i)).collect();
    let mut row_perm = Vec::with_capacity(a.rows());
    for i in 0..a.rows() {
        let image = BitVector::from_positions(a.cols(), a.row(i).ones_positions().into_iter().map(|j| point_map[j]));
        row_perm.push(*index.get(&image)?);
    }
    let w = IsoWitness {
        row_perm,
        col_perm: point_map.to_vec(),
    };
    w.verify(a, b).then_some(w)
}

/// Lift factor witnesses to the product layout of [`xor_product_matrix`]:
/// block-diagonal copies of `w1`, then `w2` acting on whole blocks. The
/// composite is re-verified against the two product matrices; a failure is an
/// internal fault.
pub fn product_iso_witness(
    (a1, b1, w1): (&BitMatrix, &BitMatrix, &IsoWitness),
    (a2, b2, w2): (&BitMatrix, &BitMatrix, &IsoWitness),
) -> Result<IsoWitness> {
    if !w1.verify(a1, b1) || !w2.verify(a2, b2) {
        return Err(Error::Parameter("factor witness does not verify".into()));
    }
    let lift = |p1: &[usize], p2: &[usize]| -> IsoWitness {
        let (n1, n2) = (p1.len(), p2.len());
        let diag: Vec<usize> = (0..n1 * n2).map(|x| (x / n1) * n1 + p1[x % n1]).collect();
        let blocks: Vec<usize> = (0..n1 * n2).map(|x| p2[x / n1] * n1 + x % n1).collect();
        IsoWitness { row_perm: diag, col_perm: blocks }
    };
    let rows = lift(&w1.row_perm, &w2.row_perm);
    let cols = lift(&w1.col_perm, &w2.col_perm);
    let first = IsoWitness { row_perm: rows.row_perm, col_perm: cols.row_perm };
    let second = IsoWitness { row_perm: rows.col_perm, col_perm: cols.col_perm };
    let w = first.then(&second);
    let (a, b) = (xor_product_matrix(a1, a2), xor_product_matrix(b1, b2));
    if !w.verify(&a, &b) {
        return Err(Error::Internal("lifted product witness failed re-verification".into()));
    }
    Ok(w)
}

/// Why a pair was declared non-isomorphic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NonIsoReason {
    /// Named fingerprint field differs.
    Invariant(&'static str),
    /// The search tree was exhausted without a match.
    SearchExhausted { nodes: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IsoVerdict {
    Isomorphic(IsoWitness),
    NotIsomorphic(NonIsoReason),
    /// Budget ran out before the search could decide.
    Indeterminate { nodes: u64 },
}

impl IsoVerdict {
    pub fn witness(&self) -> Option<&IsoWitness> {
        match self {
            IsoVerdict::Isomorphic(w) => Some(w),
            _ => None,
        }
    }
}

/// Full test: fingerprint filter, then refinement search.
pub fn are_isomorphic(a: &BitMatrix, b: &BitMatrix, opts: &IsoOptions) -> Result<IsoVerdict> {
    check_dims(a, b)?;
    if a == b {
        return Ok(IsoVerdict::Isomorphic(IsoWitness::identity(a.rows(), a.cols())));
    }
    let (ia, ib) = (invariants_with(a, opts), invariants_with(b, opts));
    if let Some(field) = ia.first_difference(&ib) {
        return Ok(IsoVerdict::NotIsomorphic(NonIsoReason::Invariant(field)));
    }
    search_isomorphism(a, b, opts)
}

fn check_dims(a: &BitMatrix, b: &BitMatrix) -> Result<()> {
    if (a.rows(), a.cols()) != (b.rows(), b.cols()) {
        return Err(Error::Dimension(format!(
            "{}x{} vs {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    Ok(())
}

/// Refinement search only, no fingerprint filter.
pub fn search_isomorphism(a: &BitMatrix, b: &BitMatrix, opts: &IsoOptions) -> Result<IsoVerdict> {
    check_dims(a, b)?;
    if let Some(w) = same_row_set(a, b) {
        return Ok(IsoVerdict::Isomorphic(w));
    }
    let (ga, gb) = (Incidence::new(a, opts.pair_colours), Incidence::new(b, opts.pair_colours));
    search_prepared(a, &ga, b, &gb, opts)
}

fn search_prepared(a: &BitMatrix, ga: &Incidence, b: &BitMatrix, gb: &Incidence, opts: &IsoOptions) -> Result<IsoVerdict> {
    let mut s = Search {
        ga,
        gb,
        nodes: 0,
        budget: opts.budget,
        transitive_root: opts.block_transitive,
    };
    let (mut pa, mut pb) = (Partition::sides(ga), Partition::sides(gb));
    let outcome = if refine(ga, &mut pa) != refine(gb, &mut pb) || pa.cells != pb.cells {
        Ok(None)
    } else {
        s.descend(&pa, &pb, 0)
    };
    Ok(match outcome {
        Err(Exhausted) => IsoVerdict::Indeterminate { nodes: s.nodes },
        Ok(None) => IsoVerdict::NotIsomorphic(NonIsoReason::SearchExhausted { nodes: s.nodes }),
        Ok(Some(map)) => {
            let r = a.rows();
            let w = IsoWitness {
                row_perm: map[..r].to_vec(),
                col_perm: map[r..].iter().map(|&x| x - r).collect(),
            };
            if !w.verify(a, b) {
                return Err(Error::Internal("search produced an invalid witness".into()));
            }
            IsoVerdict::Isomorphic(w)
        }
    })
}

/// Cheap case: `b` is `a` with rows reordered.
fn same_row_set(a: &BitMatrix, b: &BitMatrix) -> Option<IsoWitness> {
    let cols: Vec<usize> = (0..a.cols()).collect();
    witness_from_point_map(a, b, &cols)
}

struct Exhausted;

struct Search<'a> {
    ga: &'a Incidence,
    gb: &'a Incidence,
    nodes: u64,
    budget: u64,
    transitive_root: bool,
}

impl Search<'_> {
    /// `pa`, `pb` are equitable and matched cell for cell.
    fn descend(&mut self, pa: &Partition, pb: &Partition, depth: usize) -> std::result::Result<Option<Vec<usize>>, Exhausted> {
        let Some(cell) = pa.target_cell() else {
            return Ok(self.leaf(pa, pb));
        };
        let va = pa.members(cell)[0];
        let mut qa = pa.clone();
        let ta = qa.individualize(va) ^ refine(self.ga, &mut qa);
        let mut candidates = pb.members(cell);
        if depth == 0 && self.transitive_root && va < self.ga.rows {
            candidates.truncate(1);
        }
        for vb in candidates {
            self.nodes += 1;
            if self.nodes > self.budget {
                return Err(Exhausted);
            }
            let mut qb = pb.clone();
            let tb = qb.individualize(vb) ^ refine(self.gb, &mut qb);
            if ta != tb || qa.cells != qb.cells {
                continue;
            }
            if let Some(found) = self.descend(&qa, &qb, depth + 1)? {
                return Ok(Some(found));
            }
        }
        Ok(None)
    }

    fn leaf(&self, pa: &Partition, pb: &Partition) -> Option<Vec<usize>> {
        let n = pa.cell_of.len();
        let mut by_cell = vec![0usize; n];
        for v in 0..n {
            by_cell[pb.cell_of[v] as usize] = v;
        }
        let map: Vec<usize> = (0..n).map(|v| by_cell[pa.cell_of[v] as usize]).collect();
        let ok = (0..self.ga.rows).all(|i| {
            let mut img: Vec<u32> = self.ga.adj[i].iter().map(|&u| map[u as usize] as u32).collect();
            img.sort_unstable();
            let mut target = self.gb.adj[map[i]].clone();
            target.sort_unstable();
            img == target
        });
        ok.then_some(map)
    }
}

/// One isomorphism class found by [`classify`].
#[derive(Clone, Debug)]
pub struct DesignClass {
    /// Input index of the first member seen.
    pub representative: usize,
    /// Input indices, ascending, representative included.
    pub members: Vec<usize>,
    /// `(member, w)` with `w.verify(representative, member)`.
    pub witnesses: Vec<(usize, IsoWitness)>,
    pub invariant: DesignInvariant,
}

impl DesignClass {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn two_rank(&self) -> usize {
        self.invariant.two_rank
    }
}

/// A pair the search could not decide within budget.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnresolvedPair {
    pub design: usize,
    pub representative: usize,
    pub nodes: u64,
}

#[derive(Clone, Debug)]
pub struct ClassificationReport {
    pub classes: Vec<DesignClass>,
    pub unresolved: Vec<UnresolvedPair>,
}

impl ClassificationReport {
    pub fn is_resolved(&self) -> bool {
        self.unresolved.is_empty()
    }

    /// Class index of each input design.
    pub fn class_of(&self) -> Vec<usize> {
        let n = self.classes.iter().map(|c| c.members.len()).sum();
        let mut out = vec![0; n];
        for (ci, c) in self.classes.iter().enumerate() {
            for &m in &c.members {
                out[m] = ci;
            }
        }
        out
    }

    /// First fingerprint field separating classes `a` and `b`, if any.
    pub fn separating_field(&self, a: usize, b: usize) -> Option<&'static str> {
        self.classes[a].invariant.first_difference(&self.classes[b].invariant)
    }
}

/// Sort designs into isomorphism classes. Each design is checked against the
/// existing representatives in order: fingerprint filter, then `hint`, then
/// refinement search. Undecided pairs are listed in the report and the design
/// opens its own class.
pub fn classify_with_hint(
    designs: &[BitMatrix],
    opts: &IsoOptions,
    hint: &(dyn Fn(usize, usize) -> Option<IsoWitness> + Sync),
) -> Result<ClassificationReport> {
    if let Some(first) = designs.first() {
        for d in designs {
            check_dims(first, d)?;
        }
    }
    let invs: Vec<DesignInvariant> = designs.par_iter().map(|m| invariants_with(m, opts)).collect();
    let mut incidences: HashMap<usize, Incidence> = HashMap::new();
    let mut classes: Vec<DesignClass> = Vec::new();
    let mut unresolved = Vec::new();
    for (i, m) in designs.iter().enumerate() {
        let mut placed = false;
        for class in classes.iter_mut() {
            let r = class.representative;
            if !invs[r].compatible(&invs[i]) {
                continue;
            }
            let verdict = match hint(r, i).filter(|w| w.verify(&designs[r], m)) {
                Some(w) => IsoVerdict::Isomorphic(w),
                None => {
                    for k in [r, i] {
                        incidences
                            .entry(k)
                            .or_insert_with(|| Incidence::new(&designs[k], opts.pair_colours));
                    }
                    search_prepared(&designs[r], &incidences[&r], m, &incidences[&i], opts)?
                }
            };
            match verdict {
                IsoVerdict::Isomorphic(w) => {
                    class.members.push(i);
                    class.witnesses.push((i, w));
                    placed = true;
                    break;
                }
                IsoVerdict::NotIsomorphic(_) => {}
                IsoVerdict::Indeterminate { nodes } => unresolved.push(UnresolvedPair {
                    design: i,
                    representative: r,
                    nodes,
                }),
            }
        }
        if !placed {
            classes.push(DesignClass {
                representative: i,
                members: vec![i],
                witnesses: vec![(i, IsoWitness::identity(m.rows(), m.cols()))],
                invariant: invs[i].clone(),
            });
        }
        incidences.retain(|k, _| classes.iter().any(|c| c.representative == *k));
    }
    Ok(ClassificationReport { classes, unresolved })
}

pub fn classify(designs: &[BitMatrix], opts: &IsoOptions) -> Result<ClassificationReport> {
    classify_with_hint(designs, opts, &|_, _| None)
}

/// Bipartite incidence structure: vertices `0..rows` are blocks, `rows..rows+cols` are points.
#[derive(Clone, Debug)]
struct Incidence {
    rows: usize,
    adj: Vec<Vec<u32>>,
    /// Colours of block pairs and of point pairs, row-major, when enabled.
    block_pairs: Option<Vec<u64>>,
    point_pairs: Option<Vec<u64>>,
}

impl Incidence {
    fn new(m: &BitMatrix, pair_colours: bool) -> Incidence {
        let (r, c) = (m.rows(), m.cols());
        let mut adj = vec![Vec::new(); r + c];
        for i in 0..r {
            for j in m.row(i).ones_positions() {
                adj[i].push((r + j) as u32);
                adj[r + j].push(i as u32);
            }
        }
        let (block_pairs, point_pairs) = if pair_colours {
            (pair_colour_matrix(m), pair_colour_matrix(&m.transpose()))
        } else {
            (None, None)
        };
        Incidence {
            rows: r,
            adj,
            block_pairs,
            point_pairs,
        }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }
}

/// Colour of each row pair: hash of the Schur key of the row code punctured
/// on the pair's intersection. `None` when the code is too large.
fn pair_colour_matrix(m: &BitMatrix) -> Option<Vec<u64>> {
    let basis = m.basis();
    if basis.len() > MAX_SCHUR_RANK {
        return None;
    }
    let code = CodeColumns::new(&basis, m.cols());
    let n = m.rows();
    let upper: Vec<Vec<u64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| {
                    let (size, (d1, d2, _)) = code.local_key(&[m.row(i), m.row(j)], false);
                    mix(((size as u64) << 32) ^ ((d1 as u64) << 16) ^ d2 as u64)
                })
                .collect()
        })
        .collect();
    let mut out = vec![0u64; n * n];
    for i in 0..n {
        for (off, &c) in upper[i].iter().enumerate() {
            let j = i + 1 + off;
            out[i * n + j] = c;
            out[j * n + i] = c;
        }
    }
    Some(out)
}

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Ordered partition of the vertices; `cell_of[v]` is the position of v's cell.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Partition {
    cell_of: Vec<u32>,
    cells: usize,
}

impl Partition {
    /// Blocks in cell 0, points in cell 1.
    fn sides(g: &Incidence) -> Partition {
        let cell_of = (0..g.len()).map(|v| u32::from(v >= g.rows)).collect();
        Partition {
            cell_of,
            cells: if g.rows == 0 || g.rows == g.len() { 1 } else { 2 },
        }
    }

    /// Regroup by `(cell, key)`; new cells are ordered by that pair. Returns a
    /// hash of the split pattern.
    fn regroup(&mut self, keys: &[u64]) -> u64 {
        let mut order: Vec<u32> = (0..self.cell_of.len() as u32).collect();
        order.sort_unstable_by_key(|&v| (self.cell_of[v as usize], keys[v as usize], v));
        let mut trace = 0u64;
        let mut next = 0u32;
        let mut prev: Option<(u32, u64)> = None;
        let mut run = 0u64;
        for &v in &order {
            let k = (self.cell_of[v as usize], keys[v as usize]);
            if prev != Some(k) {
                if let Some((c, s)) = prev {
                    trace = mix(trace ^ mix(((c as u64) << 32) ^ s) ^ run);
                    next += 1;
                }
                prev = Some(k);
                run = 0;
            }
            run += 1;
            self.cell_of[v as usize] = next;
        }
        if let Some((c, s)) = prev {
            trace = mix(trace ^ mix(((c as u64) << 32) ^ s) ^ run);
        }
        self.cells = next as usize + 1;
        trace
    }

    /// Split `v` off its cell, placing the singleton first.
    fn individualize(&mut self, v: usize) -> u64 {
        let keys: Vec<u64> = (0..self.cell_of.len()).map(|u| u64::from(u != v)).collect();
        self.regroup(&keys)
    }

    /// Vertices of cell `c`, ascending.
    fn members(&self, c: u32) -> Vec<usize> {
        (0..self.cell_of.len()).filter(|&v| self.cell_of[v] == c).collect()
    }

    /// First smallest cell with more than one vertex.
    fn target_cell(&self) -> Option<u32> {
        let mut sizes = vec![0usize; self.cells];
        for &c in &self.cell_of {
            sizes[c as usize] += 1;
        }
        sizes
            .iter()
            .enumerate()
            .filter(|(_, &s)| s > 1)
            .min_by_key(|&(i, &s)| (s, i))
            .map(|(i, _)| i as u32)
    }
}

/// Colour refinement to the coarsest equitable partition. Returns a trace
/// hash; two structures whose traces differ cannot be matched.
fn refine(g: &Incidence, p: &mut Partition) -> u64 {
    let mut trace = mix(p.cells as u64);
    let mut keys = vec![0u64; g.len()];
    loop {
        for (v, nbrs) in g.adj.iter().enumerate() {
            let mut s = 0u64;
            for &u in nbrs {
                s = s.wrapping_add(mix(p.cell_of[u as usize] as u64 + 0x51ed));
            }
            keys[v] = mix(s);
        }
        let sides = [(0, g.rows, &g.block_pairs), (g.rows, g.len(), &g.point_pairs)];
        for (lo, hi, colours) in sides {
            let Some(colours) = colours else { continue };
            let n = hi - lo;
            for i in 0..n {
                let row = &colours[i * n..(i + 1) * n];
                let mut s = 0u64;
                for (j, &c) in row.iter().enumerate() {
                    s = s.wrapping_add(mix(c ^ ((p.cell_of[lo + j] as u64) << 40)));
                }
                keys[lo + i] = mix(keys[lo + i] ^ s);
            }
        }
        let before = p.cells;
        trace = mix(trace ^ p.regroup(&keys));
        if p.cells == before {
            return trace;
        }
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{builtin_catalog, find_entry, parse_ds_line};
    use crate::design::{develop, symplectic_matrix};
    use crate::product::{product_ds, ProductSpec};
    use proptest::prelude::*;
    use rand::{seq::SliceRandom, Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dev(line: &str) -> BitMatrix {
        develop(&parse_ds_line(line, 1).unwrap()).matrix
    }

    fn shuffle(m: &BitMatrix, rng: &mut ChaCha8Rng) -> (BitMatrix, IsoWitness) {
        let mut rp: Vec<usize> = (0..m.rows()).collect();
        let mut cp: Vec<usize> = (0..m.cols()).collect();
        rp.shuffle(rng);
        cp.shuffle(rng);
        // shuffled[i][j] = m[rp[i]][cp[j]], so (shuffled, m) has witness (rp, cp)
        (m.permuted(&rp, &cp), IsoWitness { row_perm: rp, col_perm: cp })
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for pos in 0..n {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }

    /// Oracle: try every column permutation and compare sorted row multisets.
    fn brute_isomorphic(a: &BitMatrix, b: &BitMatrix) -> bool {
        let sorted = |m: &BitMatrix| {
            let mut r = m.row_vectors().to_vec();
            r.sort();
            r
        };
        let target = sorted(a);
        let rows: Vec<usize> = (0..b.rows()).collect();
        permutations(a.cols())
            .iter()
            .any(|cp| sorted(&b.permuted(&rows, cp)) == target)
    }

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize, density: f64) -> BitMatrix {
        let rows = (0..r)
            .map(|_| BitVector::from_bits((0..c).map(|_| rng.gen_bool(density)).collect::<Vec<_>>()))
            .collect();
        BitMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn planted_shuffle_is_found_and_verified() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = dev("C8xC2 | 1, x, x^2, x^5, y, x^6*y");
        let (b, planted) = shuffle(&a, &mut rng);
        assert!(planted.verify(&b, &a));
        let verdict = are_isomorphic(&a, &b, &IsoOptions::for_developments()).unwrap();
        let w = verdict.witness().expect("isomorphic");
        assert!(w.verify(&a, &b));
        assert!(w.inverse().verify(&b, &a));
    }

    #[test]
    fn fano_planes_agree_with_oracle() {
        let a = dev("C7 | x, x^2, x^4");
        let b = dev("C7 | x^3, x^5, x^6");
        assert!(brute_isomorphic(&a, &b));
        let w = are_isomorphic(&a, &b, &IsoOptions::default()).unwrap();
        assert!(w.witness().unwrap().verify(&a, &b));
        // the complement of a plane is a (7,4,2) design and cannot match
        let c = a.complement();
        assert!(matches!(
            are_isomorphic(&a, &c, &IsoOptions::default()).unwrap(),
            IsoVerdict::NotIsomorphic(_)
        ));
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = dev("C7 | x, x^2, x^4");
        let b = dev("C4 | 1");
        assert!(matches!(are_isomorphic(&a, &b, &IsoOptions::default()), Err(Error::Dimension(_))));
    }

    #[test]
    fn trivial_product_matches_symplectic_two() {
        let t = parse_ds_line("C2xC2 | 1", 1).unwrap();
        let p = develop(&product_ds(&ProductSpec::direct(&t, &t)).unwrap()).matrix;
        let s = symplectic_matrix(2).unwrap();
        let v = are_isomorphic(&p, &s, &IsoOptions::default()).unwrap();
        assert!(v.witness().unwrap().verify(&p, &s));
    }

    #[test]
    fn xor_product_is_the_direct_development() {
        let d1 = parse_ds_line("C4 | 1", 1).unwrap();
        let d2 = parse_ds_line("C8xC2 | 1, x, x^2, x^5, y, x^6*y", 1).unwrap();
        let direct = develop(&product_ds(&ProductSpec::direct(&d1, &d2)).unwrap()).matrix;
        let xor = xor_product_matrix(&develop(&d1).matrix, &develop(&d2).matrix);
        // rows and columns of both follow the same (a, b) -> b*|G1| + a layout
        assert_eq!(direct, xor);
        for g in 0..64 {
            for h in 0..64 {
                let (a, b) = (g % 4, g / 4);
                let (c, d) = (h % 4, h / 4);
                let dv = develop(&d1).matrix.get(a, c) ^ develop(&d2).matrix.get(b, d);
                assert_eq!(xor.get(g, h), dv);
            }
        }
    }

    #[test]
    fn product_witness_lifts_factor_witnesses() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a1 = dev("C4 | 1");
        let a2 = dev("C8xC2 | 1, x, x^2, x^5, y, x^6*y");
        let (b1, w1) = shuffle(&a1, &mut rng);
        let (b2, w2) = shuffle(&a2, &mut rng);
        let w = product_iso_witness((&b1, &a1, &w1), (&b2, &a2, &w2)).unwrap();
        assert!(w.verify(&xor_product_matrix(&b1, &b2), &xor_product_matrix(&a1, &a2)));
        let id = product_iso_witness(
            (&a1, &a1, &IsoWitness::identity(4, 4)),
            (&a2, &a2, &IsoWitness::identity(16, 16)),
        )
        .unwrap();
        assert_eq!(id, IsoWitness::identity(64, 64));
        assert!(matches!(
            product_iso_witness((&a1, &a1, &w1), (&a2, &a2, &w2)),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn invariants_survive_many_shuffles() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = develop(find_entry(&builtin_catalog().unwrap(), "C4xC4-product").unwrap().difference_set()).matrix;
        let base = invariants(&a);
        for _ in 0..100 {
            let (b, _) = shuffle(&a, &mut rng);
            assert_eq!(invariants(&b), base);
        }
    }

    #[test]
    fn classification_is_stable_under_input_shuffles() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let catalog = builtin_catalog().unwrap();
        let mut designs: Vec<BitMatrix> = ["C2^4-product", "C4xC4-product", "C8xC2-paper"]
            .iter()
            .map(|n| develop(find_entry(&catalog, n).unwrap().difference_set()).matrix)
            .collect();
        for i in 0..3 {
            let b = shuffle(&designs[i], &mut rng).0;
            designs.push(b);
        }
        let report = classify(&designs, &IsoOptions::default()).unwrap();
        assert!(report.is_resolved());
        let mut order: Vec<usize> = (0..designs.len()).collect();
        order.shuffle(&mut rng);
        let permuted: Vec<BitMatrix> = order.iter().map(|&i| designs[i].clone()).collect();
        let again = classify(&permuted, &IsoOptions::default()).unwrap();
        let sizes = |r: &ClassificationReport| {
            let mut s: Vec<usize> = r.classes.iter().map(DesignClass::size).collect();
            s.sort();
            s
        };
        assert_eq!(sizes(&report), sizes(&again));
        let (c1, c2) = (report.class_of(), again.class_of());
        for i in 0..designs.len() {
            for j in 0..designs.len() {
                let (pi, pj) = (order.iter().position(|&x| x == i).unwrap(), order.iter().position(|&x| x == j).unwrap());
                assert_eq!(c1[i] == c1[j], c2[pi] == c2[pj]);
            }
        }
        for class in &report.classes {
            for (m, w) in &class.witnesses {
                assert!(w.verify(&designs[class.representative], &designs[*m]));
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn verdict_matches_oracle(seed in any::<u64>(), r in 2usize..6, c in 2usize..6, twin in any::<bool>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_matrix(&mut rng, r, c, 0.5);
            let b = if twin { shuffle(&a, &mut rng).0 } else { random_matrix(&mut rng, r, c, 0.5) };
            let expected = brute_isomorphic(&a, &b);
            match are_isomorphic(&a, &b, &IsoOptions::default()).unwrap() {
                IsoVerdict::Isomorphic(w) => {
                    prop_assert!(expected);
                    prop_assert!(w.verify(&a, &b));
                }
                IsoVerdict::NotIsomorphic(_) => prop_assert!(!expected),
                IsoVerdict::Indeterminate { .. } => prop_assert!(false, "budget exhausted on a tiny input"),
            }
        }

        #[test]
        fn invariants_are_permutation_invariant(seed in any::<u64>(), r in 1usize..9, c in 1usize..9) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_matrix(&mut rng, r, c, 0.4);
            let (b, w) = shuffle(&a, &mut rng);
            prop_assert!(w.verify(&b, &a));
            prop_assert_eq!(invariants(&a), invariants(&b));
        }
    }
}
