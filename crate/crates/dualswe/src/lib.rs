//! Structure-preserving finite-volume solvers for the inviscid rotating
//! shallow water equations on unstructured orthogonal dual meshes.
//!
//! The prognostic variables are the fluid thickness φ, the relative
//! vorticity ζ = ∇×u, and the divergence γ = ∇·u, all collocated at the
//! primal cell centers (a Z-grid placement). The mass flux φu is
//! represented through its Helmholtz potentials (ψ, χ), recovered from
//! (φ, ζ, γ) by a coupled self-adjoint elliptic solve. Two semi-discrete
//! schemes are provided:
//!
//! * an energy-conserving scheme built from skew-symmetric bilinear
//!   brackets, and
//! * an energy- and enstrophy-conserving scheme in which the ζζ bracket
//!   is replaced by an antisymmetrized trilinear bracket.
//!
//! Conservation follows from the skew-symmetry of the discrete brackets,
//! which in turn rests on a small set of exact discrete vector calculus
//! identities (adjoint remaps, integration by parts, curl∘grad = 0,
//! div∘grad⊥ = 0). Those identities are exported as a runnable
//! verification suite in [`verify`].

// Guards like `!(x > 0.0)` are deliberate: they treat NaN as a failure.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dispersion;
pub mod dynamics;
pub mod elliptic;
pub mod fields;
pub mod mesh;
pub mod ops;
pub mod rng;
pub mod timeloop;
pub mod verify;

mod error;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
