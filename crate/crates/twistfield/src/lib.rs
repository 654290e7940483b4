//! Exact arithmetic for L-functions over rational function fields.
//!
//! This crate computes Dirichlet L-functions and twisted elliptic-curve
//! L-functions over F_q(t) for characters of prime order `ell`, extracts
//! analytic ranks exactly at the central point u = 1/q, and constructs
//! infinite families of vanishing twists of constant curves from a single
//! seed character.
//!
//! The main modules, bottom-up:
//!
//! - [`galois`] — finite fields F_{p^m}, univariate polynomial arithmetic,
//!   irreducibility, factorization, Frobenius orbits, norms.
//! - [`cyclotomic`] — exact arithmetic in Q(zeta_ell), the coefficient field
//!   of every L-polynomial here.
//! - [`characters`] — order-`ell` Dirichlet characters: residue symbols,
//!   evaluation, parity, enumeration, Gauss-sum signs.
//! - [`elliptic`] — reduction types, conductors, trace tables `a_f`, and
//!   point counting over residue fields.
//! - [`lfunction`] — assembly of L-polynomials, functional-equation signs
//!   and completion, analytic rank extraction.
//! - [`constant`] — constant curves: the product factorization of twists,
//!   the central-vanishing divisibility criterion, and trace searches.
//! - [`covers`] — ell-cyclic covers of P^1: plane models for every n_q,
//!   change-of-variable substitutions, and vanishing-family generation.
//! - [`sweep`] — parameter sweeps, rank histograms, CSV/JSON output, the
//!   resumable `a_f` cache, and the cross-module verification suites.
//!
//! Every computation that decides a rank is exact; floating point appears
//! only in complex embeddings used for cross-checks.
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod characters;
pub mod constant;
pub mod covers;
pub mod cyclotomic;
pub mod elliptic;
pub mod galois;
pub mod lfunction;
pub mod sweep;

pub use cyclotomic::CycNumber;
pub use galois::{multiplicative_order, FieldCtx, FieldElement, FieldPoly, Place};

/// Errors surfaced by the public operations.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("rejected: {0}")]
    Rejected(String),
    #[error("functional-equation sign is indeterminate: {0}")]
    IndeterminateSign(String),
    #[error("cache mismatch: {0}")]
    CacheMismatch(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
