//! Solver for the atmospheric Ekman-layer boundary-value problem with
//! piecewise-constant eddy viscosity.
//!
//! The nondimensional governing equation is
//!
//! ```text
//! (K ψ')' − 2i (ψ − ψ_g) = 0,    ψ(0) = 0,    ψ(z) → ψ_g  as z → ∞,
//! ```
//!
//! where `ψ = u + iv` is the complex horizontal wind, `ψ_g` the geostrophic
//! wind and `K(z)` a step function taking the value `l_n²` on the n-th layer.
//! On each layer the solution is a pair of complex exponentials
//! `exp(±(1+i)(z − a_n)/l_n)` plus `ψ_g`; the 2N layer coefficients are fixed
//! by the bottom/far-field boundary conditions together with continuity of
//! `ψ` and of the flux `K ψ'` at every viscosity jump.
//!
//! Two independent solution routes are provided: a dense solve of the full
//! 2N×2N complex system ([`solver::LinearSystem`]) and an O(N) transfer-matrix
//! recursion ([`solver::solve_transfer`]). [`analysis::Solution`] evaluates
//! the wind profile, the rotation angle γ(z), the surface deflection angle
//! and hodograph samples; [`oracle`] holds closed-form and finite-difference
//! references used for validation, and [`verify`] bundles the cross-check
//! suite behind the CLI `verify` subcommand.
//!
//! ```
//! use ekman::analysis::Solution;
//! use ekman::profile::{GeostrophicWind, StepViscosity};
//! use ekman::solver::SolverChoice;
//!
//! let profile = StepViscosity::new(&[1.1], &[1.0, 0.0064]).unwrap();
//! let wind = GeostrophicWind::new(1.0, 0.0).unwrap();
//! let sol = Solution::solve(&profile, &wind, SolverChoice::Transfer).unwrap();
//! let gamma0 = sol.surface_deflection_angle().unwrap().to_degrees();
//! assert!(gamma0 > 45.0);
//! ```

#![allow(clippy::needless_range_loop)] // indexed loops read better in small-matrix math
#![allow(clippy::neg_cmp_op_on_partial_ord)] // negated comparisons reject NaN inputs

pub mod analysis;
pub mod oracle;
pub mod profile;
pub mod solver;
pub mod verify;

pub use analysis::{Solution, SpiralSample};
pub use profile::{GeostrophicWind, NondimScaling, StepViscosity};
pub use solver::{LayerCoefficients, LinearSystem, SolverChoice, UniquenessMargin};

/// Complex scalar used throughout.
pub type Complex = num_complex::Complex64;

/// `1 + i`, the root of the layer ODE `l² ψ'' = 2i (ψ − ψ_g)`.
pub(crate) const ONE_PLUS_I: Complex = Complex::new(1.0, 1.0);
