//! Symmetric designs from difference sets in 2-groups.
//!
//! The crate builds finite groups from cyclic factors, verifies difference
//! sets, develops them into incidence matrices, tests the symmetric
//! difference property, forms direct and semi-direct product constructions,
//! and classifies the resulting designs up to isomorphism.

pub mod error;
pub mod gf2;
pub mod design;
pub mod group;
pub mod iso;
pub mod catalog;
pub mod product;
pub mod survey;

pub use error::{Error, Result};
