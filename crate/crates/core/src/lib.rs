//! Numerics for diagonal semigroup control systems on l^2.
//!
//! The crate evaluates the input map `Phi_t(u) = int_0^t e^{As} B u(s) ds`
//! for diagonal generators with scalar control sequences, decides
//! infinite-time admissibility through the resolvent criterion
//! `sum_k |b_k|^2 / |z - lambda_k|^2 <= M / Re z` with certified truncation
//! tails, and simulates the rank-one collocated feedback `A0 - BB*` together
//! with its stability diagnostics.
//!
//! Modules:
//! - [`spectral`]: generator families, truncation, perturbations, tails.
//! - [`mild`]: structured input signals and the input map `Phi_t`.
//! - [`criterion`]: criterion sums, `M` bounds and the sup search over C^+.
//! - [`feedback`]: the feedback operator, its resolvent, semigroup and
//!   stability reports.

pub mod criterion;
pub mod error;
pub mod feedback;
pub mod mild;
pub mod numeric;
pub mod spectral;

pub use error::{CoreError, Result};
pub use numeric::{SumWithTail, TailBound, TailSum};
