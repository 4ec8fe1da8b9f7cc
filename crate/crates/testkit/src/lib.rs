//! Generators for property tests and benchmarks.
//!
//! [`strategies`] holds proptest strategies over formulas, terms, sheets and
//! workbooks; [`synthetic`] is a seeded generator for large formula corpora;
//! [`checks`] holds property bodies usable outside `proptest!`.

pub mod checks;
pub mod strategies;
pub mod synthetic;
