//! The twisted-product survey: every homomorphism `H -> Aut(N)` for fixed
//! difference sets, developed and classified.

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;

use crate::design::{develop, has_sdp, DifferenceSet, Development};
use crate::gf2::{BitMatrix, BitVector};
use crate::group::{as_normal_factor, automorphisms, homomorphisms_to_aut, pair_index, HomomorphismToAut};
use crate::iso::{classify_with_hint, witness_from_point_map, DesignInvariant, IsoOptions, IsoWitness, UnresolvedPair};
use crate::product::{product_ds, ProductSpec};
use crate::Result;

pub struct SurveyDesign {
    pub phi: HomomorphismToAut,
    pub spec: ProductSpec,
    pub development: Development,
}

pub struct SurveyClass {
    /// 1-based, in order of first appearance.
    pub id: usize,
    pub representative: usize,
    pub members: Vec<usize>,
    pub two_rank: usize,
    /// Live triple scan on the representative.
    pub sdp: bool,
    pub invariant: DesignInvariant,
    /// `(member, w)` with `w.verify(representative, member)`.
    pub witnesses: Vec<(usize, IsoWitness)>,
}

pub struct Survey {
    pub designs: Vec<SurveyDesign>,
    pub classes: Vec<SurveyClass>,
    pub unresolved: Vec<UnresolvedPair>,
}

impl Survey {
    pub fn is_resolved(&self) -> bool {
        self.unresolved.is_empty()
    }

    /// Distinct images of each acting generator over a class, in φ notation,
    /// e.g. `("x", ["phi_x(z)=z, phi_x(w)=w", ...])`.
    pub fn generator_images(&self, class: &SurveyClass) -> Vec<(String, Vec<String>)> {
        let Some(first) = class.members.first() else {
            return Vec::new();
        };
        let phi0 = &self.designs[*first].phi;
        let names = phi0.source.generator_names().to_vec();
        names
            .iter()
            .enumerate()
            .map(|(gi, name)| {
                let images: BTreeSet<String> = class
                    .members
                    .iter()
                    .map(|&m| self.designs[m].phi.generator_notation(gi))
                    .collect();
                (name.clone(), images.into_iter().collect())
            })
            .collect()
    }
}

/// Enumerate `H -> Aut(N)` for the groups of `d_n` and `d_h`, build every
/// twisted product development and classify them.
pub fn survey(d_n: &DifferenceSet, d_h: &DifferenceSet, opts: &IsoOptions) -> Result<Survey> {
    let n = as_normal_factor(d_n.group());
    let homs = homomorphisms_to_aut(d_h.group(), &n)?;
    let designs: Vec<SurveyDesign> = homs
        .into_par_iter()
        .map(|phi| {
            let spec = ProductSpec::twisted(d_n, d_h, phi.clone())?;
            let development = develop(&product_ds(&spec)?);
            Ok(SurveyDesign { phi, spec, development })
        })
        .collect::<Result<_>>()?;
    let matrices: Vec<BitMatrix> = designs.iter().map(|d| d.development.matrix.clone()).collect();
    let maps = FactorMaps::new(d_n, d_h)?;
    let hint = |r: usize, i: usize| maps.witness(&designs[r].development, &designs[i].development);
    let report = classify_with_hint(&matrices, opts, &hint)?;
    let classes = report
        .classes
        .into_iter()
        .enumerate()
        .map(|(k, c)| SurveyClass {
            id: k + 1,
            representative: c.representative,
            sdp: has_sdp(&designs[c.representative].development).holds,
            two_rank: c.invariant.two_rank,
            members: {
                let mut m = c.members;
                m.sort_unstable();
                m
            },
            invariant: c.invariant,
            witnesses: c.witnesses,
        })
        .collect();
    Ok(Survey {
        designs,
        classes,
        unresolved: report.unresolved,
    })
}

/// Point maps `(n, h) -> (alpha(n), beta(h))` for factor automorphisms.
struct FactorMaps {
    maps: Vec<Vec<usize>>,
}

impl FactorMaps {
    fn new(d_n: &DifferenceSet, d_h: &DifferenceSet) -> Result<FactorMaps> {
        let (n, h) = (d_n.group(), d_h.group());
        let (vn, vh) = (n.order(), h.order());
        let (auts_n, auts_h) = (automorphisms(n)?, automorphisms(h)?);
        let mut maps = Vec::with_capacity(auts_n.len() * auts_h.len());
        for alpha in &auts_n {
            for beta in &auts_h {
                let mut sigma = vec![0usize; vn * vh];
                for a in 0..vn {
                    for b in 0..vh {
                        sigma[pair_index(vn, a, b)] = pair_index(vn, alpha.apply(a), beta.apply(b));
                    }
                }
                maps.push(sigma);
            }
        }
        Ok(FactorMaps { maps })
    }

    /// First factor map carrying the blocks of `b` onto blocks of `a`, as a witness for `(a, b)`.
    fn witness(&self, a: &Development, b: &Development) -> Option<IsoWitness> {
        let (ma, mb) = (&a.matrix, &b.matrix);
        let rows_a: HashMap<&BitVector, usize> = ma.row_vectors().iter().enumerate().map(|(i, r)| (r, i)).collect();
        let first_b = mb.row(0).ones_positions();
        self.maps.iter().find_map(|sigma| {
            let image = BitVector::from_positions(ma.cols(), first_b.iter().map(|&x| sigma[x]));
            if !rows_a.contains_key(&image) {
                return None;
            }
            witness_from_point_map(mb, ma, sigma).map(|w| w.inverse())
        })
    }
}
