//! Comparison functions that pin the invasion front from both sides.
//!
//! The pieces: [`vsub`] evolves a certified lower bound for v and locates the
//! space-time wedge where it dominates a prescribed exponential; [`usub`]
//! splices that credit into a time-decaying sub-solution for u whose leading
//! edge outruns the single-equation front; [`supersol`] caps everything with
//! a product-form super-solution travelling at any faster speed; and
//! [`certify`] runs the whole argument end to end against a live simulation,
//! reporting every inequality it checked.

pub mod certify;
pub mod supersol;
pub mod usub;
pub mod vsub;
