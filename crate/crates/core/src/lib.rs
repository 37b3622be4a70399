//! Weight-1 modular forms pulled back from X(4) to X(4p).
//!
//! The crate builds exact integer q-expansions of the forms M, N, P on
//! Γ(4) and of their level-4p pullbacks, reduces the pullbacks to a basis
//! of the space V they span, and computes the dimensions of the spaces
//! W_k spanned by degree-k monomials in that basis. Every q-expansion is
//! supported on a single residue class mod 4p, so all rank computations
//! split into independent blocks.
//!
//! - [`series`]: truncated integer q-expansions on the grid q^(n/4p)
//! - [`generators`]: θ, φ, M, N, P and the 3(p+1) generators of V
//! - [`linalg`]: exact rank and kernels, multi-modular with a fraction-free oracle
//! - [`span`]: the degree recursion W_{k+1} = V·W_k and relation extraction
//! - [`cusps`], [`formulas`]: cusp class enumeration and closed-form dimensions
//! - [`report`], [`cache`]: dimension reports and the on-disk cache format

pub mod cache;
pub mod cusps;
pub mod error;
pub mod formulas;
pub mod generators;
pub mod linalg;
pub mod primes;
pub mod report;
pub mod series;
pub mod span;

pub use error::{Error, Result};
pub use generators::{Form, GeneratorLabel, GeneratorSet, Kind};
pub use linalg::{CertPolicy, IntMatrix, RankCertificate, RankMethod};
pub use report::DimensionReport;
pub use series::QExpansion;
pub use span::{GradedSpans, Monomial, SpanBasis, Truncation};
