//! Product construction of difference sets in direct and semi-direct products.
//!
//! For `D1` in `G1` and `D2` in `G2` the product set is
//! `(D1 x (G2 - D2)) u ((G1 - D1) x D2)`, i.e. the pairs `(a, b)` with
//! exactly one of `a in D1`, `b in D2`. It is computed from membership alone,
//! so it is the same index set whichever twisting homomorphism is used.

use std::sync::Arc;

use crate::design::{develop, verify_difference_set, DifferenceSet};
use crate::gf2::{BitMatrix, BitVector};
use crate::error::{Error, Result};
use crate::group::{
    as_normal_factor, direct_product, pair_index, semidirect_product, FiniteGroup,
    HomomorphismToAut,
};

/// Factors of a product construction and the group it lives in.
#[derive(Clone, Debug)]
pub struct ProductSpec {
    pub d1: DifferenceSet,
    pub d2: DifferenceSet,
    /// `G2 -> Aut(G1)`; `None` for the direct product.
    pub phi: Option<HomomorphismToAut>,
    pub result_group: Arc<FiniteGroup>,
}

impl ProductSpec {
    pub fn direct(d1: &DifferenceSet, d2: &DifferenceSet) -> ProductSpec {
        ProductSpec {
            d1: d1.clone(),
            d2: d2.clone(),
            phi: None,
            result_group: direct_product(d1.group(), d2.group()),
        }
    }

    /// Product inside `G1 x|_phi G2`. `phi` must map `G2` into `Aut(G1)`.
    pub fn twisted(
        d1: &DifferenceSet,
        d2: &DifferenceSet,
        phi: HomomorphismToAut,
    ) -> Result<ProductSpec> {
        let n = as_normal_factor(d1.group());
        let result_group = semidirect_product(&n, d2.group(), &phi)?;
        Ok(ProductSpec {
            d1: d1.clone(),
            d2: d2.clone(),
            phi: Some(phi),
            result_group,
        })
    }

    pub fn is_twisted(&self) -> bool {
        self.phi.as_ref().is_some_and(|p| !p.is_trivial())
    }
}

/// Member indices of the product set in the `b * |G1| + a` layout.
pub fn product_members(d1: &DifferenceSet, d2: &DifferenceSet) -> Vec<usize> {
    let v1 = d1.group().order();
    let mut out = Vec::new();
    for b in 0..d2.group().order() {
        let in2 = d2.contains(b);
        for a in 0..v1 {
            if d1.contains(a) != in2 {
                out.push(pair_index(v1, a, b));
            }
        }
    }
    out
}

/// Build and verify the product difference set in the spec's group.
pub fn product_ds(spec: &ProductSpec) -> Result<DifferenceSet> {
    let members = product_members(&spec.d1, &spec.d2);
    verify_difference_set(&spec.result_group, &members).map_err(|e| {
        Error::Internal(format!(
            "product set is not a difference set in {}: {e}",
            spec.result_group.label()
        ))
    })
}

/// Every generator image of `phi` maps `D1` onto itself.
pub fn fixes_ds(phi: &HomomorphismToAut, d1: &DifferenceSet) -> bool {
    fixes_with(&phi.generator_images, d1)
}

/// The same condition checked on `phi(h)` for every `h`, not just generators.
pub fn fixes_ds_every_element(phi: &HomomorphismToAut, d1: &DifferenceSet) -> bool {
    fixes_with(&phi.full_map, d1)
}

fn fixes_with(auts: &[crate::group::Automorphism], d1: &DifferenceSet) -> bool {
    auts.iter()
        .all(|a| d1.members().iter().all(|&m| d1.contains(a.apply(m))))
}

/// Bit-identical incidence matrices for the twisted and the direct product.
pub fn developments_equal(twisted: &ProductSpec, direct: &ProductSpec) -> Result<bool> {
    if twisted.d1 != direct.d1 || twisted.d2 != direct.d2 {
        return Err(Error::Internal(
            "developments_equal needs the same factor sets on both sides".into(),
        ));
    }
    if direct.is_twisted() {
        return Err(Error::Internal(
            "the reference product must be untwisted".into(),
        ));
    }
    let (a, b) = (&twisted.result_group, &direct.result_group);
    if a.order() != b.order() || (0..a.order()).any(|e| a.exponents(e) != b.exponents(e)) {
        return Err(Error::Internal(
            "the two product groups do not share an element ordering".into(),
        ));
    }
    let ta = develop(&product_ds(twisted)?);
    let tb = develop(&product_ds(direct)?);
    Ok(ta.matrix == tb.matrix)
}

/// A group available as a factor in [`grouping_report`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupingFactor {
    pub name: String,
    pub order: usize,
    /// Whether the catalog holds a difference set with the property in this group.
    pub carries_sdp: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grouping {
    pub factors: Vec<String>,
    /// Every factor carries a cataloged SDP set.
    pub producing: bool,
    /// Names of the factors without a cataloged SDP set.
    pub blocking: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupingReport {
    pub v: usize,
    pub groupings: Vec<Grouping>,
    /// How the verdicts were obtained; never a proof.
    pub basis: &'static str,
}

fn is_even_power_of_two(v: usize) -> bool {
    v > 1 && v.is_power_of_two() && v.trailing_zeros().is_multiple_of(2)
}

/// Ordered ways to write `v` as a product of catalog group orders, each
/// flagged by whether the product construction can yield an SDP set.
///
/// Factors whose order is not an even power of two are skipped.
pub fn grouping_report(v: usize, catalog: &[GroupingFactor]) -> Result<GroupingReport> {
    if !is_even_power_of_two(v) {
        return Err(Error::Parameter(format!(
            "{v} is not an even power of two greater than 1"
        )));
    }
    let usable: Vec<&GroupingFactor> = catalog
        .iter()
        .filter(|f| is_even_power_of_two(f.order))
        .collect();
    let mut groupings = Vec::new();
    let mut current: Vec<&GroupingFactor> = Vec::new();
    collect_groupings(v, &usable, &mut current, &mut groupings);
    Ok(GroupingReport {
        v,
        groupings,
        basis: "catalog lookup + closure of the property under direct products",
    })
}

fn collect_groupings<'a>(
    remaining: usize,
    usable: &[&'a GroupingFactor],
    current: &mut Vec<&'a GroupingFactor>,
    out: &mut Vec<Grouping>,
) {
    if remaining == 1 {
        let blocking: Vec<String> = current
            .iter()
            .filter(|f| !f.carries_sdp)
            .map(|f| f.name.clone())
            .collect();
        out.push(Grouping {
            factors: current.iter().map(|f| f.name.clone()).collect(),
            producing: blocking.is_empty(),
            blocking,
        });
        return;
    }
    for f in usable {
        if remaining.is_multiple_of(f.order) {
            current.push(f);
            collect_groupings(remaining / f.order, usable, current, out);
            current.pop();
        }
    }
}

/// Incidence matrix of the product of two designs in the product layout:
/// entry `((a, b), (c, d))` at `(b*v1 + a, d*v1 + c)` is `a1[a][c] XOR a2[b][d]`.
/// For direct products this is the development of [`product_ds`].
pub fn xor_product_matrix(a1: &BitMatrix, a2: &BitMatrix) -> BitMatrix {
    let (r1, c1) = (a1.rows(), a1.cols());
    let (r2, c2) = (a2.rows(), a2.cols());
    let mut rows = Vec::with_capacity(r1 * r2);
    for b in 0..r2 {
        for a in 0..r1 {
            rows.push(BitVector::from_bits((0..c1 * c2).map(|col| {
                let (c, d) = (col % c1, col / c1);
                a1.get(a, c) ^ a2.get(b, d)
            })));
        }
    }
    BitMatrix::from_rows(rows).expect("non-empty factors")
}
