//! Cardinality-constrained portfolio selection with native cubic risk terms.
//!
//! The problem: pick exactly `K` of `n` assets minimizing
//!
//! ```text
//! f(x) = x' Sigma x - mu' x + sum_{(i,j,a)} c_ija * x_i * x_j * x_a,   x in {0,1}^n, sum x = K
//! ```
//!
//! where the cubic terms couple intra-sector asset pairs to a sector anchor.
//!
//! The crate provides:
//!
//! * [`instance`] — a seeded synthetic instance family (sector factor
//!   covariance, sector-correlated returns, anchored cubic terms) with an
//!   exact round-trip text format;
//! * [`model`] — the native objective, a bifurcation-well relaxation with
//!   analytic gradient and Hessian-vector products, and O(degree) swap
//!   deltas for exact-cardinality local search;
//! * [`hamd`] — the hybrid solver: batched second-order continuous dynamics
//!   with a transverse curvature force, restart-triggered top-K projection
//!   and K-swap polish, and an iterated-local-search finish;
//! * [`quad`] — Rosenberg quadratization of the cubic terms into an
//!   augmented QUBO with a cardinality penalty, for baseline solvers;
//! * [`baselines`] — simulated annealing and tabu search over the augmented
//!   QUBO with incremental energy deltas;
//! * [`diagnostics`] — decoded-feasibility audits of augmented states,
//!   a brute-force enumeration oracle, and a random-selection reference.
//!
//! All stochastic components are driven by seeded, stream-split ChaCha
//! generators ([`rng`]), so every run replays exactly for a given seed.

pub mod baselines;
pub mod budget;
pub mod diagnostics;
pub mod hamd;
pub mod instance;
pub mod model;
pub mod quad;
pub mod rng;

pub use budget::Budget;
pub use instance::{generate_instance, CubicTerm, InstanceError, PortfolioInstance};
pub use model::Portfolio;
