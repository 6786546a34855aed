//! Numerical machinery for elliptic beta integrals.
//!
//! The crate evaluates the special functions of elliptic hypergeometric
//! theory (theta, elliptic gamma, modified elliptic gamma, double sine),
//! builds the kernel and certificate functions of the beta-integral
//! families on the A_n and C_n root systems, integrates them over the
//! torus, the segment `[-omega3/2, omega3/2]` and the line `i*omega2*R`,
//! and verifies the functional equations behind the closed-form
//! evaluations at randomly sampled admissible points.
//!
//! Layout:
//! - [`special`]: base special functions and the `OmegaTriple`/`BaseSet`
//!   parametrization.
//! - [`kernels`]: kernel functions, proof certificates, domain validation
//!   and pole enumeration for every integral family.
//! - [`quadrature`]: torus/segment/line quadrature with grid doubling and
//!   deterministic reduction, closed-form right-hand sides, telescoping.
//! - [`identities`]: the randomized identity battery with seeded,
//!   reproducible reports.
//! - [`oracle`]: an independent extended-precision (double-double) direct
//!   product evaluator used to pin golden values. It shares no evaluation
//!   code with the fast path.
//! - [`fixtures`]: the golden-value fixture file with per-record checksums.

pub mod error;
pub mod fixtures;
pub mod identities;
pub mod kernels;
pub mod oracle;
pub mod quadrature;
pub mod special;
pub mod wire;

pub use error::{Error, Result};
pub use special::{BaseSet, OmegaTriple, Regime, TruncationPolicy};
