//! Maximum-likelihood reconstruction of density matrices from simulated
//! measurement records.
//!
//! The estimate is searched over lower-triangular factors `T` with
//! `ρ = T†T / Tr(T†T)`, which keeps every candidate Hermitian and positive
//! semidefinite. Supported measurement schemes: single-mode homodyne
//! detection with finite efficiency, two-mode single-LO homodyne detection,
//! spin-1/2 pairs measured along random directions, and single spins.

pub mod error;
pub mod estimate;
pub mod exec;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod povm;
pub mod report;
pub mod simulate;
pub mod states;
pub mod uncertainty;

pub use error::{Error, Result};
