//! Reachability analysis for neural-network controlled systems via Taylor
//! model flowpipe construction.
//!
//! The crate is organized bottom-up:
//!
//! * [`interval`] — outward-rounded interval arithmetic;
//! * [`polynomial`] — sparse multivariate polynomials with truncation and
//!   conservative range bounding;
//! * [`taylor_model`] — Taylor models `(p, I)` and their closed operations;
//! * [`network`] — feedforward controller representation and file loader;
//! * [`bernstein`] — Bernstein interpolation of activation functions with
//!   sampled or Lipschitz-certified remainders;
//! * [`propagation`] — layer-by-layer Taylor model output enclosures for a
//!   network, with plain and symbolic-remainder variants;
//! * [`flowpipe`] — validated integration of polynomial ODEs by Picard
//!   iteration and contraction;
//! * [`verifier`] — closed-loop reachability over control steps, property
//!   verdicts, simulation, and containment checking.

pub mod bernstein;
pub mod flowpipe;
pub mod interval;
pub mod network;
pub mod polynomial;
pub mod propagation;
pub mod taylor_model;
pub mod verifier;

pub use interval::Interval;
pub use polynomial::{Domain, SparsePolynomial};
pub use taylor_model::{TMVector, TaylorModel};
