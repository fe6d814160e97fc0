//! Layer-coefficient solvers: dense elimination and transfer-matrix recursion.
//!
//! Both routes work in the anchored basis, where layer `n`'s exponentials are
//! written as `exp(±(1+i)(z − a_n)/l_n)` and the anchored coefficients
//! `Ã_{n,0} = A_{n,0} e^{(1+i)a_n/l_n}`, `Ã_{n,1} = A_{n,1} e^{−(1+i)a_n/l_n}`
//! stay of the order of the wind deficit at the layer's base. Raw-basis
//! coefficients are reconstructed only on demand and flagged when the anchor
//! factor overflows.
//!
//! The transfer route is the default: it is O(N) and mirrors the uniqueness
//! argument. The dense route serves as an independent cross-check and as the
//! fallback when the uniqueness margin is healthy but small.

mod dense;
mod transfer;

pub use dense::{assemble_dense_system, solve_dense, LinearSystem};
pub use transfer::{
    interface_transfer, solve_transfer, transfer_step, uniqueness_margin, ScaledMatrix2,
    TransferState, UniquenessMargin,
};

use crate::profile::{GeostrophicWind, ProfileError, StepViscosity};
use crate::{Complex, ONE_PLUS_I};
use thiserror::Error;

/// Relative uniqueness margin below which a solve reports a singularity.
pub const SINGULAR_MARGIN_FLOOR: f64 = 1e3 * f64::EPSILON;

/// Relative margin below which the transfer solve falls back to the dense
/// route for confirmation.
pub const MARGIN_WARN_THRESHOLD: f64 = 1e-10;

/// Largest acceptable relative residual of a dense solve.
pub const DENSE_RESIDUAL_LIMIT: f64 = 1e-10;

/// Largest acceptable scale-relative deviation between the two routes.
pub const CROSS_CHECK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error("uniqueness margin {relative:.3e} below floor {floor:.3e}: system numerically singular")]
    SingularMargin { relative: f64, floor: f64 },
    #[error("dense matrix numerically singular (condition estimate {condition:.3e})")]
    SingularMatrix { condition: f64 },
    #[error("dense residual {residual:.3e} exceeds {limit:.1e} (condition estimate {condition:.3e})")]
    ResidualTooLarge {
        residual: f64,
        limit: f64,
        condition: f64,
    },
    #[error("anchored exponential overflows for layer {layer}; use the transfer solver")]
    AssemblyOverflow { layer: usize },
    #[error("raw coefficient for layer {layer} overflows f64; anchored form retained")]
    CoefficientOverflow { layer: usize },
    #[error("transfer index {k} out of range 1..={max}")]
    IndexOutOfRange { k: usize, max: usize },
    #[error("dense/transfer cross-check failed: deviation {deviation:.3e} at scale {scale:.3e}")]
    CrossCheckMismatch { deviation: f64, scale: f64 },
}

/// Which column of the layer pair a matrix column refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Coefficient of `exp(+(1+i)(z−a_n)/l_n)`.
    Growing,
    /// Coefficient of `exp(−(1+i)(z−a_n)/l_n)`.
    Decaying,
}

/// Unknown ordering of the raw system: interleaved `(A_{n,0}, A_{n,1})`
/// pairs, with the top layer swapped to `(A_{N-1,1}, A_{N-1,0})`.
pub(crate) fn layout(n_layers: usize) -> Vec<(usize, Branch)> {
    let mut cols = Vec::with_capacity(2 * n_layers);
    for layer in 0..n_layers - 1 {
        cols.push((layer, Branch::Growing));
        cols.push((layer, Branch::Decaying));
    }
    cols.push((n_layers - 1, Branch::Decaying));
    cols.push((n_layers - 1, Branch::Growing));
    cols
}

/// One layer's anchored coefficient pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerPair {
    pub growing: Complex,
    pub decaying: Complex,
}

/// The 2N solved coefficients, stored in the anchored basis together with
/// the per-layer anchors and amplitudes needed to evaluate or de-anchor them.
///
/// The top layer's growing coefficient is exactly zero — the far-field
/// boundary condition is enforced as a hard constraint by both solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerCoefficients {
    layers: Vec<LayerPair>,
    anchors: Vec<f64>,
    amplitudes: Vec<f64>,
}

impl LayerCoefficients {
    pub(crate) fn from_anchored(layers: Vec<LayerPair>, profile: &StepViscosity) -> Self {
        debug_assert_eq!(layers.len(), profile.n_layers());
        let anchors = (0..profile.n_layers()).map(|n| profile.anchor(n)).collect();
        Self {
            layers,
            anchors,
            amplitudes: profile.amplitudes().to_vec(),
        }
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    /// Anchored pair `(Ã_{n,0}, Ã_{n,1})` of layer `n`.
    pub fn anchored(&self, n: usize) -> LayerPair {
        self.layers[n]
    }

    /// Anchor height `a_n` of layer `n`.
    pub fn anchor(&self, n: usize) -> f64 {
        self.anchors[n]
    }

    /// Amplitude `l_n` of layer `n`.
    pub fn amplitude(&self, n: usize) -> f64 {
        self.amplitudes[n]
    }

    /// Raw pair `(A_{n,0}, A_{n,1})` in the raw basis. Fails when the
    /// de-anchoring factor `exp((1+i)a_n/l_n)` overflows.
    pub fn raw(&self, n: usize) -> Result<LayerPair, SolverError> {
        let t = ONE_PLUS_I * self.anchors[n] / self.amplitudes[n];
        let growing = self.layers[n].growing * (-t).exp();
        let decaying = self.layers[n].decaying * t.exp();
        if growing.is_finite() && decaying.is_finite() {
            Ok(LayerPair { growing, decaying })
        } else {
            Err(SolverError::CoefficientOverflow { layer: n })
        }
    }

    /// `|Ã_{0,0} + Ã_{0,1} + ψ_g|`, the bottom boundary residual.
    pub fn boundary_residual(&self, psi_g: Complex) -> f64 {
        (self.layers[0].growing + self.layers[0].decaying + psi_g).norm()
    }

    /// Largest coefficient magnitude, the natural agreement scale.
    pub fn sup_norm(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|p| [p.growing.norm(), p.decaying.norm()])
            .fold(0.0, f64::max)
    }

    /// Scale-relative deviation from `other`: the largest coefficient
    /// difference divided by `max(sup_norm, scale)`. Components far below
    /// the scale carry no relative meaning in either route.
    pub fn deviation(&self, other: &Self, scale: f64) -> f64 {
        let denom = self.sup_norm().max(other.sup_norm()).max(scale);
        self.layers
            .iter()
            .zip(&other.layers)
            .flat_map(|(a, b)| {
                [
                    (a.growing - b.growing).norm(),
                    (a.decaying - b.decaying).norm(),
                ]
            })
            .fold(0.0, f64::max)
            / denom
    }
}

/// Solver selection for [`solve`] and `Solution::solve`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverChoice {
    /// Transfer recursion; falls back to the dense route on margin warnings.
    #[default]
    Transfer,
    /// Dense elimination only.
    Dense,
    /// Run both and fail unless they agree to [`CROSS_CHECK_TOLERANCE`].
    Both,
}

/// Which route produced a set of coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Transfer,
    Dense,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Transfer => "transfer",
            Provenance::Dense => "dense",
        }
    }
}

/// Solve for the layer coefficients with the chosen route.
pub fn solve(
    profile: &StepViscosity,
    wind: &GeostrophicWind,
    choice: SolverChoice,
) -> Result<(LayerCoefficients, Provenance), SolverError> {
    match choice {
        SolverChoice::Dense => {
            let system = assemble_dense_system(profile, wind)?;
            Ok((solve_dense(&system)?, Provenance::Dense))
        }
        SolverChoice::Transfer => {
            let margin = uniqueness_margin(profile);
            if !margin.is_singular() && margin.relative() < MARGIN_WARN_THRESHOLD {
                // margin healthy but small: prefer the pivoted dense solve
                if let Ok(system) = assemble_dense_system(profile, wind) {
                    if let Ok(coeffs) = solve_dense(&system) {
                        return Ok((coeffs, Provenance::Dense));
                    }
                }
            }
            Ok((solve_transfer(profile, wind)?, Provenance::Transfer))
        }
        SolverChoice::Both => {
            let transfer = solve_transfer(profile, wind)?;
            let system = assemble_dense_system(profile, wind)?;
            let dense = solve_dense(&system)?;
            let scale = wind.psi().norm();
            let deviation = transfer.deviation(&dense, scale);
            if deviation > CROSS_CHECK_TOLERANCE {
                return Err(SolverError::CrossCheckMismatch { deviation, scale });
            }
            Ok((transfer, Provenance::Transfer))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    #[test]
    fn classical_layer_coefficients() {
        let profile = StepViscosity::constant(1.0).unwrap();
        let wind = GeostrophicWind::new(1.0, 0.0).unwrap();
        let coeffs = solve_transfer(&profile, &wind).unwrap();
        assert_eq!(coeffs.anchored(0).growing, c(0.0, 0.0));
        assert_eq!(coeffs.anchored(0).decaying, c(-1.0, 0.0));
    }

    #[test]
    fn one_jump_matches_closed_form_coefficients() {
        // one-jump closed-form values at h=1, l=2, psi_g=1, computed
        // independently by direct complex arithmetic:
        //   A = -0.020015930995773548 - 0.03945820119917663 i
        //   B = -0.9799840690042264   + 0.03945820119917663 i
        //   D(anchored) = -0.12171529716047214 + 0.20747113314440385 i
        let profile = StepViscosity::new(&[1.0], &[1.0, 4.0]).unwrap();
        let wind = GeostrophicWind::new(1.0, 0.0).unwrap();
        let want_a = c(-0.020015930995773548, -0.03945820119917663);
        let want_b = c(-0.9799840690042264, 0.03945820119917663);
        let want_d = c(-0.12171529716047214, 0.20747113314440385);

        for (coeffs, label) in [
            (solve_transfer(&profile, &wind).unwrap(), "transfer"),
            (
                solve_dense(&assemble_dense_system(&profile, &wind).unwrap()).unwrap(),
                "dense",
            ),
        ] {
            let bottom = coeffs.anchored(0);
            let top = coeffs.anchored(1);
            assert!(
                (bottom.growing - want_a).norm() <= 1e-12,
                "{label}: A = {}",
                bottom.growing
            );
            assert!((bottom.decaying - want_b).norm() <= 1e-12, "{label}");
            assert!((top.decaying - want_d).norm() <= 1e-12, "{label}");
            assert_eq!(top.growing, c(0.0, 0.0), "{label}");
        }
    }

    #[test]
    fn transfer_single_layer_degenerate_product() {
        let profile = StepViscosity::constant(4.0).unwrap();
        let wind = GeostrophicWind::new(0.0, 2.0).unwrap();
        let coeffs = solve_transfer(&profile, &wind).unwrap();
        assert_eq!(coeffs.anchored(0).decaying, -wind.psi());
    }

    #[test]
    fn dense_transfer_agree_three_layers() {
        let profile = StepViscosity::new(&[0.8, 1.9], &[1.0, 2.89, 0.49]).unwrap();
        let wind = GeostrophicWind::new(1.0, -0.4).unwrap();
        let t = solve_transfer(&profile, &wind).unwrap();
        let d = solve_dense(&assemble_dense_system(&profile, &wind).unwrap()).unwrap();
        assert!(t.deviation(&d, wind.psi().norm()) <= 1e-12);
    }

    #[test]
    fn dense_transfer_agree_at_stretched_envelope() {
        // top jump at fifty decay lengths of the narrowest layer
        let wind = GeostrophicWind::new(1.0, 0.5).unwrap();
        for (jumps, ks) in [
            (vec![30.0, 50.0], vec![1.0, 4.0, 2.25]),
            (vec![10.0, 25.0, 50.0], vec![1.0, 1.69, 0.81, 1.21]),
            (vec![49.0, 50.0], vec![1.0, 1.96, 1.44]),
        ] {
            let profile = StepViscosity::new(&jumps, &ks).unwrap();
            let t = solve_transfer(&profile, &wind).unwrap();
            let d = solve_dense(&assemble_dense_system(&profile, &wind).unwrap()).unwrap();
            let dev = t.deviation(&d, wind.psi().norm());
            assert!(dev <= 1e-10, "jumps {jumps:?}: deviation {dev:.3e}");
        }
    }

    #[test]
    fn solver_types_are_shareable_across_threads() {
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<StepViscosity>();
        assert_send_sync::<GeostrophicWind>();
        assert_send_sync::<LayerCoefficients>();
        assert_send_sync::<LinearSystem>();
        assert_send_sync::<UniquenessMargin>();
    }

    #[test]
    fn boundary_rows_hold_as_constraints() {
        let profile = StepViscosity::new(&[0.6, 1.2, 2.5], &[1.0, 0.36, 1.96, 0.81]).unwrap();
        let wind = GeostrophicWind::new(-0.7, 1.1).unwrap();
        for (coeffs, _) in [
            solve(&profile, &wind, SolverChoice::Transfer).unwrap(),
            solve(&profile, &wind, SolverChoice::Dense).unwrap(),
        ] {
            assert!(coeffs.boundary_residual(wind.psi()) <= 1e-12 * wind.psi().norm());
            let top = coeffs.anchored(coeffs.n_layers() - 1);
            assert_eq!(top.growing, c(0.0, 0.0));
        }
    }

    #[test]
    fn raw_reconstruction_round_trip_and_overflow_flag() {
        let profile = StepViscosity::new(&[1.0], &[1.0, 4.0]).unwrap();
        let wind = GeostrophicWind::new(1.0, 0.0).unwrap();
        let coeffs = solve_transfer(&profile, &wind).unwrap();
        let raw = coeffs.raw(1).unwrap();
        // D = -0.34010182132202377 + 0.20397918005373605 i (raw basis)
        assert!((raw.decaying - c(-0.34010182132202377, 0.20397918005373605)).norm() <= 1e-13);

        let extreme = StepViscosity::new(&[2000.0], &[1.0, 4.0]).unwrap();
        let coeffs = solve_transfer(&extreme, &wind).unwrap();
        assert!(matches!(
            coeffs.raw(1),
            Err(SolverError::CoefficientOverflow { layer: 1 })
        ));
        // the anchored representation stays finite
        assert!(coeffs.anchored(1).decaying.is_finite());
    }

    #[test]
    fn both_choice_cross_checks() {
        let profile = StepViscosity::new(&[1.1], &[1.0, 0.0064]).unwrap();
        let wind = GeostrophicWind::new(1.0, 0.0).unwrap();
        let (_, provenance) = solve(&profile, &wind, SolverChoice::Both).unwrap();
        assert_eq!(provenance, Provenance::Transfer);
    }

    #[test]
    fn linearity_in_wind() {
        let profile = StepViscosity::new(&[0.9, 1.7], &[1.0, 2.25, 0.64]).unwrap();
        let base = GeostrophicWind::new(1.0, 0.0).unwrap();
        let c_factor = c(0.3, -1.8);
        let scaled = GeostrophicWind::from_complex(c_factor * base.psi()).unwrap();
        let a = solve_transfer(&profile, &base).unwrap();
        let b = solve_transfer(&profile, &scaled).unwrap();
        for n in 0..a.n_layers() {
            let (pa, pb) = (a.anchored(n), b.anchored(n));
            let scale = pb.decaying.norm().max(scaled.psi().norm());
            assert!((pa.growing * c_factor - pb.growing).norm() <= 1e-13 * scale);
            assert!((pa.decaying * c_factor - pb.decaying).norm() <= 1e-13 * scale);
        }
    }
}
