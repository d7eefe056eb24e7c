//! Finite groups stored as multiplication tables.
//!
//! Every group is built from cyclic groups by direct and semi-direct
//! products. Elements of a product `G1 x G2` (or `N x| H`) are the pairs
//! `(a, b)`, stored at index `b * |G1| + a`, so consecutive index blocks are
//! the cosets `G1 x {g}`. Element names are exponent vectors over the
//! generators, read as the word `g1^e1 * g2^e2 * ...`.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Generator names for ordinary groups and for the acting factor of a semi-direct product.
const ACTING_NAMES: [&str; 8] = ["x", "y", "u", "v", "s", "t", "p", "q"];
/// Generator names for the normal factor of a semi-direct product.
const NORMAL_NAMES: [&str; 6] = ["z", "w", "a", "b", "c", "d"];

/// Largest group order whose automorphisms are enumerated by brute force.
pub const MAX_AUT_ORDER: usize = 64;
/// Cap on the generator-image search space for [`automorphisms`].
pub const MAX_AUT_CANDIDATES: u128 = 10_000_000;
/// Largest acting group accepted by [`homomorphisms_to_aut`].
pub const MAX_HOM_SOURCE_ORDER: usize = 256;
/// Cap on the number of candidate generator assignments in [`homomorphisms_to_aut`].
pub const MAX_HOM_CANDIDATES: u128 = 10_000_000;

fn default_names(alphabet: &[&str], count: usize, fallback: char) -> Vec<String> {
    (0..count)
        .map(|i| match alphabet.get(i) {
            Some(s) => (*s).to_string(),
            None => format!("{fallback}{}", i + 1),
        })
        .collect()
}

#[derive(Debug, Clone)]
pub enum FactorStructure {
    Direct(Arc<FiniteGroup>, Arc<FiniteGroup>),
    SemiDirect {
        normal: Arc<FiniteGroup>,
        acting: Arc<FiniteGroup>,
        phi: String,
    },
}

#[derive(Clone)]
pub struct FiniteGroup {
    order: usize,
    table: Vec<u32>,
    inverse: Vec<u32>,
    generators: Vec<usize>,
    generator_names: Vec<String>,
    generator_orders: Vec<usize>,
    exponents: Vec<Vec<u32>>,
    factors: Option<FactorStructure>,
    label: String,
}

impl fmt::Debug for FiniteGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FiniteGroup({}, order {})", self.label, self.order)
    }
}

impl PartialEq for FiniteGroup {
    fn eq(&self, other: &Self) -> bool {
        self.table == other.table && self.generators == other.generators
    }
}

impl Eq for FiniteGroup {}

impl FiniteGroup {
    fn assemble(
        table: Vec<u32>,
        generators: Vec<usize>,
        generator_names: Vec<String>,
        exponents: Vec<Vec<u32>>,
        factors: Option<FactorStructure>,
        label: String,
    ) -> FiniteGroup {
        let order = exponents.len();
        let mut inverse = vec![0u32; order];
        for a in 0..order {
            for b in 0..order {
                if table[a * order + b] == 0 {
                    inverse[a] = b as u32;
                    break;
                }
            }
        }
        let mut g = FiniteGroup {
            order,
            table,
            inverse,
            generator_orders: Vec::new(),
            generators,
            generator_names,
            exponents,
            factors,
            label,
        };
        g.generator_orders = g.generators.iter().map(|&x| g.element_order(x)).collect();
        g
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> usize {
        0
    }

    #[inline]
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a * self.order + b] as usize
    }

    #[inline]
    pub fn inv(&self, a: usize) -> usize {
        self.inverse[a] as usize
    }

    pub fn generators(&self) -> &[usize] {
        &self.generators
    }

    pub fn generator_names(&self) -> &[String] {
        &self.generator_names
    }

    pub fn generator_orders(&self) -> &[usize] {
        &self.generator_orders
    }

    /// Exponent vector of element `a` over the generators.
    pub fn exponents(&self, a: usize) -> &[u32] {
        &self.exponents[a]
    }

    pub fn factors(&self) -> Option<&FactorStructure> {
        self.factors.as_ref()
    }

    /// Canonical group spec string, parseable by [`parse_group_spec`].
    pub fn label(&self) -> &str {
        &self.label
    }

    /// Same multiplication table, ignoring names and provenance.
    pub fn same_table(&self, other: &FiniteGroup) -> bool {
        self.table == other.table
    }

    pub fn is_2_group(&self) -> bool {
        self.order.is_power_of_two()
    }

    pub fn is_abelian(&self) -> bool {
        (0..self.order).all(|a| (0..a).all(|b| self.mul(a, b) == self.mul(b, a)))
    }

    pub fn element_order(&self, a: usize) -> usize {
        assert!(a < self.order, "element {a} out of range");
        let mut k = 1;
        let mut x = a;
        while x != 0 {
            x = self.mul(x, a);
            k += 1;
        }
        k
    }

    pub fn pow(&self, a: usize, e: i64) -> usize {
        let base = if e < 0 { self.inv(a) } else { a };
        let mut out = 0;
        for _ in 0..e.unsigned_abs() {
            out = self.mul(out, base);
        }
        out
    }

    /// Element `g1^e1 * g2^e2 * ...`.
    pub fn from_exponents(&self, exps: &[u32]) -> usize {
        assert_eq!(exps.len(), self.generators.len());
        exps.iter()
            .zip(&self.generators)
            .fold(0, |acc, (&e, &g)| self.mul(acc, self.pow(g, e as i64)))
    }

    /// Render an element as a word such as `x^6*y`; the identity is `1`.
    pub fn element_name(&self, a: usize) -> String {
        let parts: Vec<String> = self.exponents[a]
            .iter()
            .zip(&self.generator_names)
            .filter(|(&e, _)| e != 0)
            .map(|(&e, n)| if e == 1 { n.clone() } else { format!("{n}^{e}") })
            .collect();
        if parts.is_empty() {
            "1".to_string()
        } else {
            parts.join("*")
        }
    }

    fn generator_index(&self, name: &str) -> Option<usize> {
        self.generator_names.iter().position(|n| n == name)
    }

    /// Parse a word like `x^6*y` (whitespace ignored, `1` for the identity).
    ///
    /// `line` and `col` locate the word in its source for error reporting.
    pub fn parse_word(&self, word: &str, line: usize, col: usize) -> Result<usize> {
        let compact: String = word.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(Error::parse(line, col, "empty element word"));
        }
        let mut acc = 0;
        for factor in compact.split('*') {
            if factor.is_empty() {
                return Err(Error::parse(line, col, format!("malformed word `{word}`")));
            }
            if factor == "1" {
                continue;
            }
            let (name, exp) = match factor.split_once('^') {
                Some((n, e)) => {
                    let e: i64 = e.parse().map_err(|_| {
                        Error::parse(line, col, format!("bad exponent `{e}` in `{word}`"))
                    })?;
                    (n, e)
                }
                None => (factor, 1),
            };
            let gi = self
                .generator_index(name)
                .ok_or_else(|| Error::UnknownGenerator {
                    name: name.to_string(),
                    line,
                    column: col,
                })?;
            acc = self.mul(acc, self.pow(self.generators[gi], exp));
        }
        Ok(acc)
    }

    /// Copy of the group with new generator names.
    pub fn renamed(&self, names: Vec<String>) -> FiniteGroup {
        assert_eq!(names.len(), self.generators.len());
        let mut g = self.clone();
        g.generator_names = names;
        g
    }

    /// Check the group axioms on the table: Latin square, identity, inverses,
    /// associativity (every triple up to order 64, 10^5 sampled triples above).
    pub fn check_axioms(&self) -> Result<()> {
        let v = self.order;
        let bad = |m: String| Err(Error::Internal(format!("{}: {m}", self.label)));
        let mut seen = vec![usize::MAX; v];
        for a in 0..v {
            for b in 0..v {
                let p = self.mul(a, b);
                if seen[p] == a {
                    return bad(format!("row {a} repeats element {p}"));
                }
                seen[p] = a;
            }
        }
        seen.iter_mut().for_each(|s| *s = usize::MAX);
        for b in 0..v {
            for a in 0..v {
                let p = self.mul(a, b);
                if seen[p] == b {
                    return bad(format!("column {b} repeats element {p}"));
                }
                seen[p] = b;
            }
        }
        for a in 0..v {
            if self.mul(0, a) != a || self.mul(a, 0) != a {
                return bad(format!("index 0 is not an identity for {a}"));
            }
            let i = self.inv(a);
            if self.mul(a, i) != 0 || self.mul(i, a) != 0 {
                return bad(format!("element {a} has no inverse"));
            }
        }
        let assoc = |a: usize, b: usize, c: usize| {
            self.mul(self.mul(a, b), c) == self.mul(a, self.mul(b, c))
        };
        if v <= 64 {
            for a in 0..v {
                for b in 0..v {
                    for c in 0..v {
                        if !assoc(a, b, c) {
                            return bad(format!("({a}{b}){c} != {a}({b}{c})"));
                        }
                    }
                }
            }
        } else {
            let mut state = 0x9e37_79b9_7f4a_7c15u64 ^ v as u64;
            for _ in 0..100_000 {
                let a = (splitmix(&mut state) % v as u64) as usize;
                let b = (splitmix(&mut state) % v as u64) as usize;
                let c = (splitmix(&mut state) % v as u64) as usize;
                if !assoc(a, b, c) {
                    return bad(format!("({a}{b}){c} != {a}({b}{c})"));
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn cyclic(n: usize) -> Result<Arc<FiniteGroup>> {
    if n == 0 {
        return Err(Error::Parameter("cyclic group order must be at least 1".into()));
    }
    let table = (0..n)
        .flat_map(|a| (0..n).map(move |b| ((a + b) % n) as u32))
        .collect();
    let (generators, names, exponents) = if n == 1 {
        (vec![], vec![], vec![vec![]])
    } else {
        (
            vec![1],
            default_names(&ACTING_NAMES, 1, 'g'),
            (0..n).map(|a| vec![a as u32]).collect(),
        )
    };
    Ok(Arc::new(FiniteGroup::assemble(
        table,
        generators,
        names,
        exponents,
        None,
        format!("C{n}"),
    )))
}

/// Pair `(a, b)` of `G1 x G2` lives at index `b * |G1| + a`.
#[inline]
pub fn pair_index(v1: usize, a: usize, b: usize) -> usize {
    b * v1 + a
}

fn product_layout(
    g1: &FiniteGroup,
    g2: &FiniteGroup,
) -> (Vec<usize>, Vec<Vec<u32>>) {
    let v1 = g1.order;
    let mut generators: Vec<usize> = g1.generators.clone();
    generators.extend(g2.generators.iter().map(|&b| pair_index(v1, 0, b)));
    let mut exponents = Vec::with_capacity(v1 * g2.order);
    for b in 0..g2.order {
        for a in 0..v1 {
            let mut e = g1.exponents[a].clone();
            e.extend_from_slice(&g2.exponents[b]);
            exponents.push(e);
        }
    }
    (generators, exponents)
}

pub fn direct_product(g1: &Arc<FiniteGroup>, g2: &Arc<FiniteGroup>) -> Arc<FiniteGroup> {
    let (v1, v2) = (g1.order, g2.order);
    let v = v1 * v2;
    let mut table = vec![0u32; v * v];
    for b1 in 0..v2 {
        for a1 in 0..v1 {
            let i = pair_index(v1, a1, b1);
            for b2 in 0..v2 {
                let b = g2.mul(b1, b2);
                for a2 in 0..v1 {
                    table[i * v + pair_index(v1, a2, b2)] = pair_index(v1, g1.mul(a1, a2), b) as u32;
                }
            }
        }
    }
    let (generators, exponents) = product_layout(g1, g2);
    let names = default_names(&ACTING_NAMES, generators.len(), 'g');
    let label = format!("{}x{}", g1.label, g2.label);
    Arc::new(FiniteGroup::assemble(
        table,
        generators,
        names,
        exponents,
        Some(FactorStructure::Direct(g1.clone(), g2.clone())),
        label,
    ))
}

/// `N x|_phi H` with `(n1, h1)(n2, h2) = (n1 * phi(h1)(n2), h1 * h2)`.
///
/// The generators of `N` are renamed `z, w, ...` and those of `H` keep `x, y, ...`.
pub fn semidirect_product(
    n: &Arc<FiniteGroup>,
    h: &Arc<FiniteGroup>,
    phi: &HomomorphismToAut,
) -> Result<Arc<FiniteGroup>> {
    if phi.source.table != h.table || phi.target.table != n.table {
        return Err(Error::Homomorphism(
            "homomorphism does not map the acting group into Aut of the normal group".into(),
        ));
    }
    phi.validate()?;
    let (vn, vh) = (n.order, h.order);
    let v = vn * vh;
    let mut table = vec![0u32; v * v];
    for h1 in 0..vh {
        let act = &phi.full_map[h1].perm;
        for n1 in 0..vn {
            let i = pair_index(vn, n1, h1);
            for h2 in 0..vh {
                let hh = h.mul(h1, h2);
                for n2 in 0..vn {
                    let nn = n.mul(n1, act[n2] as usize);
                    table[i * v + pair_index(vn, n2, h2)] = pair_index(vn, nn, hh) as u32;
                }
            }
        }
    }
    let (generators, exponents) = product_layout(n, h);
    let mut names = default_names(&NORMAL_NAMES, n.generators.len(), 'n');
    names.extend(default_names(&ACTING_NAMES, h.generators.len(), 'h'));
    let phi_label = phi.spec();
    let label = format!("SD({};{};{})", n.label, h.label, phi_label);
    Ok(Arc::new(FiniteGroup::assemble(
        table,
        generators,
        names,
        exponents,
        Some(FactorStructure::SemiDirect {
            normal: n.clone(),
            acting: h.clone(),
            phi: phi_label,
        }),
        label,
    )))
}

/// The normal factor as it is named inside a semi-direct product (`z, w, ...`).
pub fn as_normal_factor(n: &FiniteGroup) -> Arc<FiniteGroup> {
    Arc::new(n.renamed(default_names(&NORMAL_NAMES, n.generators.len(), 'n')))
}

/// A group automorphism given by its action on element indices.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Automorphism {
    pub perm: Vec<u32>,
}

impl Automorphism {
    pub fn identity(order: usize) -> Self {
        Automorphism {
            perm: (0..order as u32).collect(),
        }
    }

    #[inline]
    pub fn apply(&self, a: usize) -> usize {
        self.perm[a] as usize
    }

    /// `self o other`: apply `other` first.
    pub fn compose(&self, other: &Automorphism) -> Automorphism {
        Automorphism {
            perm: other.perm.iter().map(|&x| self.perm[x as usize]).collect(),
        }
    }

    pub fn inverse(&self) -> Automorphism {
        let mut inv = vec![0u32; self.perm.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            inv[p as usize] = i as u32;
        }
        Automorphism { perm: inv }
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &p)| i == p as usize)
    }

    pub fn order(&self) -> usize {
        let id = Automorphism::identity(self.perm.len());
        let mut k = 1;
        let mut cur = self.clone();
        while cur != id {
            cur = self.compose(&cur);
            k += 1;
        }
        k
    }

    /// Extend generator images to the whole group, rejecting maps that are not
    /// bijective homomorphisms.
    pub fn from_generator_images(g: &FiniteGroup, images: &[usize]) -> Result<Automorphism> {
        if images.len() != g.generators.len() {
            return Err(Error::Homomorphism(format!(
                "{} generator images given for {} generators",
                images.len(),
                g.generators.len()
            )));
        }
        let map = extend_images(g, images, images.len()).ok_or_else(|| {
            Error::Homomorphism(format!(
                "generator images {:?} do not extend to an automorphism of {}",
                images.iter().map(|&i| g.element_name(i)).collect::<Vec<_>>(),
                g.label
            ))
        })?;
        let aut = Automorphism { perm: map };
        if !aut.is_automorphism_of(g) {
            return Err(Error::Homomorphism(format!(
                "map is not an automorphism of {}",
                g.label
            )));
        }
        Ok(aut)
    }

    pub fn is_automorphism_of(&self, g: &FiniteGroup) -> bool {
        let v = g.order;
        if self.perm.len() != v || self.perm[0] != 0 {
            return false;
        }
        let mut hit = vec![false; v];
        for &p in &self.perm {
            if hit[p as usize] {
                return false;
            }
            hit[p as usize] = true;
        }
        (0..v).all(|a| {
            (0..v).all(|b| self.apply(g.mul(a, b)) == g.mul(self.apply(a), self.apply(b)))
        })
    }

    /// Images of the generators, e.g. `z->z^5,w->w`.
    pub fn spec(&self, g: &FiniteGroup) -> String {
        g.generators
            .iter()
            .zip(&g.generator_names)
            .map(|(&gen, name)| format!("{name}->{}", g.element_name(self.apply(gen))))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Closure of the partial map `g_j -> images[j]` (`j < assigned`) over the
/// subgroup those generators span. `None` if the map is inconsistent or not
/// injective. When every generator is assigned the result is a full permutation.
fn extend_images(g: &FiniteGroup, images: &[usize], assigned: usize) -> Option<Vec<u32>> {
    let v = g.order;
    let mut map = vec![u32::MAX; v];
    let mut used = vec![false; v];
    map[0] = 0;
    used[0] = true;
    let mut queue = VecDeque::from([0usize]);
    while let Some(e) = queue.pop_front() {
        let me = map[e] as usize;
        for j in 0..assigned {
            let t = g.mul(e, g.generators[j]);
            let img = g.mul(me, images[j]);
            if map[t] == u32::MAX {
                if used[img] {
                    return None;
                }
                used[img] = true;
                map[t] = img as u32;
                queue.push_back(t);
            } else if map[t] as usize != img {
                return None;
            }
        }
    }
    if assigned == images.len() && map.contains(&u32::MAX) {
        return None;
    }
    Some(map)
}

/// All automorphisms of `g`, sorted by permutation image.
pub fn automorphisms(g: &FiniteGroup) -> Result<Vec<Automorphism>> {
    if g.order > MAX_AUT_ORDER {
        return Err(Error::Feasibility(format!(
            "automorphism enumeration is limited to order {MAX_AUT_ORDER}, {} has order {}",
            g.label, g.order
        )));
    }
    let k = g.generators.len();
    let candidates: Vec<Vec<usize>> = g
        .generator_orders
        .iter()
        .map(|&o| (0..g.order).filter(|&a| g.element_order(a) == o).collect())
        .collect();
    let space: u128 = candidates.iter().map(|c| c.len() as u128).product();
    if space > MAX_AUT_CANDIDATES {
        return Err(Error::Feasibility(format!(
            "{} generator-image candidates for Aut({}) exceed {MAX_AUT_CANDIDATES}",
            space, g.label
        )));
    }
    let mut out = Vec::new();
    let mut images = vec![0usize; k];
    search_auts(g, &candidates, &mut images, 0, &mut out);
    for a in &out {
        if !a.is_automorphism_of(g) {
            return Err(Error::Internal(format!(
                "enumerated map {} is not an automorphism",
                a.spec(g)
            )));
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

fn search_auts(
    g: &FiniteGroup,
    candidates: &[Vec<usize>],
    images: &mut Vec<usize>,
    depth: usize,
    out: &mut Vec<Automorphism>,
) {
    if depth == images.len() {
        if let Some(perm) = extend_images(g, images, depth) {
            out.push(Automorphism { perm });
        }
        return;
    }
    for &c in &candidates[depth] {
        images[depth] = c;
        if extend_images(g, images, depth + 1).is_some() {
            search_auts(g, candidates, images, depth + 1, out);
        }
    }
}

/// A homomorphism `phi: H -> Aut(N)`, stored by generator images and extended
/// to every element of `H`.
#[derive(Clone, Debug)]
pub struct HomomorphismToAut {
    pub source: Arc<FiniteGroup>,
    pub target: Arc<FiniteGroup>,
    pub generator_images: Vec<Automorphism>,
    pub full_map: Vec<Automorphism>,
}

impl PartialEq for HomomorphismToAut {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source
            && self.target == other.target
            && self.generator_images == other.generator_images
    }
}

impl HomomorphismToAut {
    pub fn trivial(h: &Arc<FiniteGroup>, n: &Arc<FiniteGroup>) -> HomomorphismToAut {
        let id = Automorphism::identity(n.order);
        HomomorphismToAut {
            source: h.clone(),
            target: n.clone(),
            generator_images: vec![id.clone(); h.generators.len()],
            full_map: vec![id; h.order],
        }
    }

    /// Extend generator images over `H` and validate the homomorphism law.
    pub fn new(
        h: &Arc<FiniteGroup>,
        n: &Arc<FiniteGroup>,
        generator_images: Vec<Automorphism>,
    ) -> Result<HomomorphismToAut> {
        let phi = Self::extend(h, n, generator_images)?;
        phi.validate()?;
        Ok(phi)
    }

    fn extend(
        h: &Arc<FiniteGroup>,
        n: &Arc<FiniteGroup>,
        generator_images: Vec<Automorphism>,
    ) -> Result<HomomorphismToAut> {
        if generator_images.len() != h.generators.len() {
            return Err(Error::Homomorphism(format!(
                "{} generator images for {} generators of {}",
                generator_images.len(),
                h.generators.len(),
                h.label
            )));
        }
        for a in &generator_images {
            if !a.is_automorphism_of(n) {
                return Err(Error::Homomorphism(format!(
                    "generator image is not an automorphism of {}",
                    n.label
                )));
            }
        }
        let id = Automorphism::identity(n.order);
        let powers: Vec<Vec<Automorphism>> = generator_images
            .iter()
            .zip(&h.generator_orders)
            .map(|(a, &o)| {
                let mut p = vec![id.clone()];
                for i in 1..o {
                    p.push(a.compose(&p[i - 1]));
                }
                p
            })
            .collect();
        let full_map = (0..h.order)
            .map(|e| {
                h.exponents[e]
                    .iter()
                    .enumerate()
                    .fold(id.clone(), |acc, (j, &x)| acc.compose(&powers[j][x as usize]))
            })
            .collect();
        Ok(HomomorphismToAut {
            source: h.clone(),
            target: n.clone(),
            generator_images,
            full_map,
        })
    }

    /// `phi(h1 h2) = phi(h1) o phi(h2)`: every pair when `|H| <= 64`,
    /// generator-by-element above (which implies the full law).
    pub fn validate(&self) -> Result<()> {
        let h = &self.source;
        if !self.full_map[0].is_identity() {
            return Err(Error::Homomorphism("identity does not act trivially".into()));
        }
        let lefts: Vec<usize> = if h.order <= 64 {
            (0..h.order).collect()
        } else {
            h.generators.clone()
        };
        for &a in &lefts {
            for b in 0..h.order {
                if self.full_map[h.mul(a, b)] != self.full_map[a].compose(&self.full_map[b]) {
                    return Err(Error::Homomorphism(format!(
                        "phi({}*{}) != phi({}) o phi({}) for {}",
                        h.element_name(a),
                        h.element_name(b),
                        h.element_name(a),
                        h.element_name(b),
                        self.spec()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn is_trivial(&self) -> bool {
        self.generator_images.iter().all(Automorphism::is_identity)
    }

    /// Grammar form: `z->z^5,w->w` when `H` is cyclic, otherwise
    /// `x:z->...,w->.../y:z->...,w->...`.
    pub fn spec(&self) -> String {
        let n = as_normal_factor(&self.target);
        if self.source.generators.len() == 1 {
            return self.generator_images[0].spec(&n);
        }
        self.source
            .generator_names
            .iter()
            .zip(&self.generator_images)
            .map(|(hn, a)| format!("{hn}:{}", a.spec(&n)))
            .collect::<Vec<_>>()
            .join("/")
    }

    /// Table notation: `phi_x(z)=z^5, phi_x(w)=w; phi_y(z)=z, phi_y(w)=w`.
    pub fn phi_notation(&self) -> String {
        (0..self.generator_images.len())
            .map(|i| self.generator_notation(i))
            .collect::<Vec<_>>()
            .join("; ")
    }

    /// The action of the `i`-th generator of `H`, e.g. `phi_x(z)=z^5, phi_x(w)=w`.
    pub fn generator_notation(&self, i: usize) -> String {
        let n = as_normal_factor(&self.target);
        let hn = &self.source.generator_names[i];
        let a = &self.generator_images[i];
        n.generators
            .iter()
            .zip(&n.generator_names)
            .map(|(&g, gn)| format!("phi_{hn}({gn})={}", n.element_name(a.apply(g))))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// Every homomorphism `H -> Aut(N)`, in lexicographic order of generator images.
pub fn homomorphisms_to_aut(
    h: &Arc<FiniteGroup>,
    n: &Arc<FiniteGroup>,
) -> Result<Vec<HomomorphismToAut>> {
    if h.order > MAX_HOM_SOURCE_ORDER {
        return Err(Error::Feasibility(format!(
            "acting group order {} exceeds {MAX_HOM_SOURCE_ORDER}",
            h.order
        )));
    }
    let auts = automorphisms(n)?;
    let candidates: Vec<Vec<&Automorphism>> = h
        .generator_orders
        .iter()
        .map(|&o| auts.iter().filter(|a| o % a.order() == 0).collect())
        .collect();
    let space: u128 = candidates.iter().map(|c| c.len() as u128).product();
    if space > MAX_HOM_CANDIDATES {
        return Err(Error::Feasibility(format!(
            "{space} generator assignments exceed {MAX_HOM_CANDIDATES}"
        )));
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; candidates.len()];
    if candidates.iter().any(Vec::is_empty) {
        return Ok(out);
    }
    loop {
        let images: Vec<Automorphism> = idx
            .iter()
            .zip(&candidates)
            .map(|(&i, c)| c[i].clone())
            .collect();
        let phi = HomomorphismToAut::extend(h, n, images)?;
        if phi.validate().is_ok() {
            out.push(phi);
        }
        // odometer, last generator fastest
        let mut pos = idx.len();
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < candidates[pos].len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Parse a group spec: `C8`, `C2^4`, `C8xC2`, `(C4xC4)xC4`, `SD(C8xC2;C4;z->z^5,w->w)`.
///
/// Inside `SD(N;H;phi)` the generators of `N` are named `z, w, ...` and those of
/// `H` are `x, y, ...`. When `H` has several generators, `phi` lists one
/// section per generator, separated by `/`: `x:z->z^3,w->z^4*w/y:z->z,w->w`.
/// Generators of `N` that are not mentioned are fixed; generators of `H` that
/// are not mentioned act trivially.
pub fn parse_group_spec(spec: &str) -> Result<Arc<FiniteGroup>> {
    parse_group_at(spec, 1, 1)
}

pub(crate) fn parse_group_at(spec: &str, line: usize, col: usize) -> Result<Arc<FiniteGroup>> {
    let pieces = split_top(spec, 'x', line, col)?;
    let mut groups = Vec::with_capacity(pieces.len());
    for (offset, piece) in pieces {
        groups.push(parse_term(piece, line, col + offset)?);
    }
    let mut acc = groups[0].clone();
    for g in &groups[1..] {
        acc = direct_product(&acc, g);
    }
    Ok(acc)
}

/// Split at `sep` characters outside parentheses, keeping column offsets.
fn split_top(s: &str, sep: char, line: usize, col: usize) -> Result<Vec<(usize, &str)>> {
    let mut depth = 0i32;
    let mut start = 0;
    let mut out = Vec::new();
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return Err(Error::parse(line, col + i, "unbalanced `)`"));
                }
            }
            c if c == sep && depth == 0 => {
                out.push((start, &s[start..i]));
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(Error::parse(line, col + s.len(), "unbalanced `(`"));
    }
    out.push((start, &s[start..]));
    Ok(out)
}

fn parse_term(raw: &str, line: usize, col: usize) -> Result<Arc<FiniteGroup>> {
    let lead = raw.len() - raw.trim_start().len();
    let term = raw.trim();
    let col = col + lead;
    if term.is_empty() {
        return Err(Error::parse(line, col, "empty group term"));
    }
    if let Some(inner) = term.strip_prefix("SD(").and_then(|t| t.strip_suffix(')')) {
        let parts = split_top(inner, ';', line, col + 3)?;
        if parts.len() != 3 {
            return Err(Error::parse(line, col, "SD(...) needs `N;H;phi`"));
        }
        let base = col + 3;
        let n = parse_group_at(parts[0].1, line, base + parts[0].0)?;
        let h = parse_group_at(parts[1].1, line, base + parts[1].0)?;
        let n_named = as_normal_factor(&n);
        let phi = parse_phi(&h, &n_named, parts[2].1, line, base + parts[2].0)?;
        return semidirect_product(&n_named, &h, &phi);
    }
    if let Some(inner) = term.strip_prefix('(').and_then(|t| t.strip_suffix(')')) {
        return parse_group_at(inner, line, col + 1);
    }
    let Some(body) = term.strip_prefix('C') else {
        return Err(Error::parse(line, col, format!("expected `C<n>` or `SD(...)`, found `{term}`")));
    };
    let (n, power) = match body.split_once('^') {
        Some((n, p)) => (n, Some(p)),
        None => (body, None),
    };
    let n: usize = n
        .parse()
        .map_err(|_| Error::parse(line, col + 1, format!("bad cyclic order `{n}`")))?;
    if n == 0 {
        return Err(Error::parse(line, col + 1, "cyclic order must be positive"));
    }
    let power: usize = match power {
        Some(p) => p
            .parse()
            .ok()
            .filter(|&p| p >= 1)
            .ok_or_else(|| Error::parse(line, col, format!("bad power `{p}`")))?,
        None => 1,
    };
    let c = cyclic(n)?;
    let mut acc = c.clone();
    for _ in 1..power {
        acc = direct_product(&acc, &c);
    }
    if acc.order > 1024 {
        return Err(Error::Feasibility(format!("group order {} exceeds 1024", acc.order)));
    }
    Ok(acc)
}

/// Parse the `phi` part of `SD(N;H;phi)` against the already-named factors.
pub fn parse_phi(
    h: &Arc<FiniteGroup>,
    n: &Arc<FiniteGroup>,
    text: &str,
    line: usize,
    col: usize,
) -> Result<HomomorphismToAut> {
    let mut images = vec![Automorphism::identity(n.order); h.generators.len()];
    let text_trim = text.trim();
    if text_trim.is_empty() || text_trim == "1" {
        return HomomorphismToAut::new(h, n, images);
    }
    let sections = split_top(text, '/', line, col)?;
    for (off, section) in sections {
        let (gen_idx, body, body_off) = match section.split_once(':') {
            Some((hg, body)) => {
                let hg = hg.trim();
                let gi = h.generator_index(hg).ok_or_else(|| Error::UnknownGenerator {
                    name: hg.to_string(),
                    line,
                    column: col + off,
                })?;
                (gi, body, off + section.find(':').unwrap_or(0) + 1)
            }
            None => {
                if h.generators.len() != 1 {
                    return Err(Error::parse(
                        line,
                        col + off,
                        format!(
                            "{} has {} generators; prefix each section with `<generator>:`",
                            h.label,
                            h.generators.len()
                        ),
                    ));
                }
                (0, section, off)
            }
        };
        let mut gen_images: Vec<usize> = n.generators.clone();
        if body.trim().is_empty() || body.trim() == "1" {
            continue;
        }
        for (moff, mapping) in split_top(body, ',', line, col + body_off)? {
            let mcol = col + body_off + moff;
            let (from, to) = mapping
                .split_once("->")
                .ok_or_else(|| Error::parse(line, mcol, format!("expected `gen->word`, found `{}`", mapping.trim())))?;
            let from = from.trim();
            let gi = n.generator_index(from).ok_or_else(|| Error::UnknownGenerator {
                name: from.to_string(),
                line,
                column: mcol,
            })?;
            gen_images[gi] = n.parse_word(to, line, mcol)?;
        }
        images[gen_idx] = Automorphism::from_generator_images(n, &gen_images)?;
    }
    HomomorphismToAut::new(h, n, images)
}
