//! Exact q-series toolkit for affine characters, coset string functions,
//! fermionic sums and small fusion-category checks.

pub mod affine;
pub mod characters;
pub mod error;
pub mod fusion;
pub mod matrix;
pub mod qseries;
pub mod rat;
pub mod ucpf;
pub mod verify;

pub use error::{QError, QResult};
pub use qseries::{EtaQuotientSpec, Monomial, MultiSeries, QSeries};
pub use rat::{Rat, RatS};
