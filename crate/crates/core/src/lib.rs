//! Exact-arithmetic toolkit for set-theoretical solutions of the pentagon
//! equation built from symmetrically factorizable matrix groups.
//!
//! Everything runs over arbitrary-precision rationals with exact equality:
//! the identities being verified are rational identities in the coordinates,
//! so random rational sampling with zero tolerance is a complete desk-scale
//! check (a rational identity holding on a Zariski-dense set of rational
//! points holds identically).
//!
//! The crate is organized as:
//!
//! * [`rational`] / [`matrix`]: exact scalars and dense matrices with
//!   fraction-free determinant and inverse,
//! * [`model`]: the three concrete group models behind one interface,
//! * [`factorize`]: symmetric factorization `g = g+ g-^{-1} = gbar-^{-1} gbar+`,
//!   conjugating elements and their normalization,
//! * [`maps`]: the map bundle (rho, sigma, i, j, k), the binary operations
//!   and the pair transformation whose composition law is verified,
//! * [`almost`]: the partial group structure rebuilt from an involutive j,
//! * [`dynkin`]: Cartan matrices, the diagram involution and the Cartan
//!   subalgebra splitting table,
//! * [`verify`]: seeded, shardable verification suites with JSON reports,
//! * [`cli`]: the `pentalab` command-line front end.

pub mod almost;
pub mod cli;
pub mod dynkin;
pub mod error;
pub mod factorize;
pub mod maps;
pub mod matrix;
pub mod model;
pub mod rational;
pub mod verify;

pub use almost::{AlmostGroup, AlmostGroupElement};
pub use error::{Error, Result};
pub use factorize::{Factorization, FactorizationContext, Theta};
pub use maps::PentagonSolution;
pub use matrix::RatMatrix;
pub use model::{GroupElement, GroupModel, SeedStream, DEFAULT_SAMPLE_BOUND};
pub use rational::Rational;
pub use verify::{Suite, SuiteReport, VerifyConfig};
