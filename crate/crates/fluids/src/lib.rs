//! Spectral tools for scale-invariant 2D flows reduced to profiles on the circle.
//!
//! When the vorticity of a 2D incompressible flow is radially homogeneous,
//! `omega(r, theta) = h(theta)`, the dynamics collapses onto a 1D transport
//! system on S^1 whose velocity is recovered from `h` by a Fourier-multiplier
//! Biot-Savart law. The same reduction applies to a family of generalized
//! surface quasi-geostrophic (SQG) scalars and to the De Gregorio /
//! Okamoto-Sakajo-Wunsch model family. This crate implements those reduced
//! models, the point-vortex dynamics they induce on a fundamental sector, and
//! the reconstruction of the full 2D fields from the 1D profiles.
//!
//! Module map:
//!
//! - [`circle_field`]: periodic scalar profiles with a cached spectral view
//!   and the shared spectral operators (derivative, Hilbert transform,
//!   `|nabla|^-1`, symmetry projection).
//! - [`kernels`]: closed-form and multiplier forms of the 1D Biot-Savart
//!   laws, their m-fold symmetrizations, and the stream solves `h -> H`,
//!   `g -> G`.
//! - [`euler1d`]: time integration of `dh/dt + 2 H dh/dtheta = 0` with
//!   pseudospectral and semi-Lagrangian steppers and a growth-diagnostic
//!   suite.
//! - [`pointvortex`]: point vortices on the quarter-circle sector, the gap
//!   system for three equal vortices, its Hamiltonian, and period detection.
//! - [`sqg1d`]: the homogeneous SQG profile equation, its leading-order
//!   approximation, the De Gregorio family, and a blow-up monitor.
//! - [`lift2d`]: evaluation of the reconstructed 2D fields, the symmetrized
//!   2D Biot-Savart kernel decay study, and a scale-weighted Hoelder norm
//!   estimator.
//! - [`harness`]: experiment configs, presets, curve fitting, run output
//!   (CSV trajectories and JSON manifests), and the CLI entry point.

pub mod circle_field;
pub mod euler1d;
pub mod harness;
pub mod interp;
pub mod kernels;
pub mod lift2d;
pub mod pointvortex;
pub mod sqg1d;

pub use circle_field::{CircleField, FieldError, SymmetrySpec};
