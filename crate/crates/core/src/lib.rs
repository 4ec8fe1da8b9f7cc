pub mod address;
pub mod error;
pub mod formula;
pub mod grid;
pub mod harvest;
pub mod index;
pub mod service;
pub mod structure;
pub mod term;
pub mod unify;
pub mod xlsx;
