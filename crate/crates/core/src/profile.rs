//! Piecewise-constant eddy-viscosity profiles and physical scaling.

use crate::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Earth's rotation rate in rad/s.
pub const DEFAULT_ROTATION_RATE: f64 = 7.29e-5;

#[derive(Debug, Error, PartialEq)]
pub enum ProfileError {
    #[error("layer viscosity list is empty")]
    EmptyLayers,
    #[error("expected {expected} viscosity values for {jumps} jump points, got {got}")]
    CountMismatch {
        jumps: usize,
        expected: usize,
        got: usize,
    },
    #[error("viscosity values must be positive and finite, got {0}")]
    NonPositiveViscosity(f64),
    #[error("jump points must be strictly increasing and positive: {0} followed by {1}")]
    NonIncreasingJumps(f64, f64),
    #[error("jump point must be positive and finite, got {0}")]
    NonPositiveJump(f64),
    #[error("height must be nonnegative, got {0}")]
    NegativeHeight(f64),
    #[error("latitude must lie in (0, pi/2), got {0}")]
    LatitudeOutOfRange(f64),
    #[error("{name} must be positive and finite, got {value}")]
    NonPositiveScale { name: &'static str, value: f64 },
    #[error("geostrophic wind must be nonzero")]
    ZeroGeostrophicWind,
}

/// Step-function eddy viscosity `K(z) = l_n²` on the layer `(a_n, a_{n+1})`,
/// with `a_0 = 0` and `a_N = ∞` implicit.
///
/// Layers are parameterized internally by the amplitudes `l_n = √K_n`, the
/// natural length scale of each layer's exponential modes; the constructor
/// takes the physical viscosity values `K_n`. Adjacent layers always carry
/// distinct amplitudes: equal neighbours are merged at construction and the
/// merge count is kept as a diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepViscosity {
    jump_points: Vec<f64>,
    amplitudes: Vec<f64>,
    merged: usize,
}

impl StepViscosity {
    /// Build a profile from jump points `a_1 < … < a_{N-1}` and per-layer
    /// viscosity values `K_0, …, K_{N-1}` (one more value than jumps).
    ///
    /// Adjacent equal viscosities are merged into a single layer; the number
    /// of merges is reported by [`StepViscosity::merged_layers`].
    pub fn new(jump_points: &[f64], viscosities: &[f64]) -> Result<Self, ProfileError> {
        if viscosities.is_empty() {
            return Err(ProfileError::EmptyLayers);
        }
        if viscosities.len() != jump_points.len() + 1 {
            return Err(ProfileError::CountMismatch {
                jumps: jump_points.len(),
                expected: jump_points.len() + 1,
                got: viscosities.len(),
            });
        }
        for &k in viscosities {
            if !(k > 0.0) || !k.is_finite() {
                return Err(ProfileError::NonPositiveViscosity(k));
            }
        }
        if let Some(&a) = jump_points.first() {
            if !(a > 0.0) || !a.is_finite() {
                return Err(ProfileError::NonPositiveJump(a));
            }
        }
        for w in jump_points.windows(2) {
            if !w[1].is_finite() {
                return Err(ProfileError::NonPositiveJump(w[1]));
            }
            if w[1] <= w[0] {
                return Err(ProfileError::NonIncreasingJumps(w[0], w[1]));
            }
        }

        let mut jumps = Vec::with_capacity(jump_points.len());
        let mut amplitudes = Vec::with_capacity(viscosities.len());
        let mut merged = 0;
        amplitudes.push(viscosities[0].sqrt());
        for (i, &k) in viscosities[1..].iter().enumerate() {
            if k == viscosities[i] {
                // equal neighbours collapse into one layer; the jump vanishes
                merged += 1;
            } else {
                jumps.push(jump_points[i]);
                amplitudes.push(k.sqrt());
            }
        }
        Ok(Self {
            jump_points: jumps,
            amplitudes,
            merged,
        })
    }

    /// Constant-viscosity profile (the classical Ekman case for `k = 1`).
    pub fn constant(k: f64) -> Result<Self, ProfileError> {
        Self::new(&[], &[k])
    }

    /// One-jump profile with lower-layer viscosity 1 and upper-layer
    /// amplitude `l`, the configuration of the closed-form references.
    pub fn one_jump(h: f64, l: f64) -> Result<Self, ProfileError> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(ProfileError::NonPositiveJump(h));
        }
        if !(l > 0.0) || !l.is_finite() {
            return Err(ProfileError::NonPositiveViscosity(l * l));
        }
        Self::new(&[h], &[1.0, l * l])
    }

    /// Midpoint-sampled step approximation of a continuous viscosity.
    ///
    /// `[0, cap]` is split into `steps` equal intervals and each carries the
    /// viscosity at its midpoint; the last step extends to infinity, so the
    /// far field sees `k(cap − cap/(2·steps))`. With `steps = 1` this is the
    /// constant profile at the midpoint value.
    pub fn sample_midpoint(
        k: impl Fn(f64) -> f64,
        cap: f64,
        steps: usize,
    ) -> Result<Self, ProfileError> {
        if steps == 0 {
            return Err(ProfileError::EmptyLayers);
        }
        if !(cap > 0.0) || !cap.is_finite() {
            return Err(ProfileError::NonPositiveJump(cap));
        }
        let width = cap / steps as f64;
        let jumps: Vec<f64> = (1..steps).map(|j| j as f64 * width).collect();
        let viscosities: Vec<f64> = (0..steps)
            .map(|j| k((j as f64 + 0.5) * width))
            .collect();
        Self::new(&jumps, &viscosities)
    }

    /// Number of layers N (after merging).
    pub fn n_layers(&self) -> usize {
        self.amplitudes.len()
    }

    /// Jump heights `a_1, …, a_{N-1}`.
    pub fn jumps(&self) -> &[f64] {
        &self.jump_points
    }

    /// Layer amplitudes `l_0, …, l_{N-1}`.
    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    /// How many adjacent equal-viscosity layers were merged at construction.
    pub fn merged_layers(&self) -> usize {
        self.merged
    }

    /// Lower edge `a_n` of layer `n` (`a_0 = 0`).
    pub fn anchor(&self, n: usize) -> f64 {
        if n == 0 {
            0.0
        } else {
            self.jump_points[n - 1]
        }
    }

    /// Width of layer `n`; `None` for the unbounded top layer.
    pub fn width(&self, n: usize) -> Option<f64> {
        self.jump_points.get(n).map(|a| a - self.anchor(n))
    }

    /// Index of the layer containing `z`, attributing a jump point to the
    /// layer below it (left-value convention).
    pub fn layer_index(&self, z: f64) -> Result<usize, ProfileError> {
        if !(z >= 0.0) {
            return Err(ProfileError::NegativeHeight(z));
        }
        Ok(self.jump_points.partition_point(|&a| a < z))
    }

    /// Viscosity `K(z) = l_n²` for the layer containing `z`; at a jump point
    /// `a_n` exactly this returns the left-layer value `l_{n-1}²`.
    pub fn viscosity_at(&self, z: f64) -> Result<f64, ProfileError> {
        let n = self.layer_index(z)?;
        let l = self.amplitudes[n];
        Ok(l * l)
    }
}

/// Physical constants and the map between dimensional and nondimensional
/// variables: `K = 2ν / (f H*²)` and `z = Z / H*`, with `f = 2Ω sin θ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NondimScaling {
    latitude: f64,
    rotation_rate: f64,
    speed_scale: f64,
    height_scale: f64,
    viscosity_scale: f64,
}

impl NondimScaling {
    pub fn new(
        latitude: f64,
        rotation_rate: f64,
        speed_scale: f64,
        height_scale: f64,
        viscosity_scale: f64,
    ) -> Result<Self, ProfileError> {
        if !(latitude > 0.0 && latitude < std::f64::consts::FRAC_PI_2) {
            return Err(ProfileError::LatitudeOutOfRange(latitude));
        }
        for (name, value) in [
            ("rotation rate", rotation_rate),
            ("speed scale", speed_scale),
            ("height scale", height_scale),
            ("viscosity scale", viscosity_scale),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(ProfileError::NonPositiveScale { name, value });
            }
        }
        Ok(Self {
            latitude,
            rotation_rate,
            speed_scale,
            height_scale,
            viscosity_scale,
        })
    }

    /// Scaling with the default Earth rotation rate; the latitude must still
    /// be chosen by the caller.
    pub fn for_latitude(
        latitude: f64,
        speed_scale: f64,
        height_scale: f64,
        viscosity_scale: f64,
    ) -> Result<Self, ProfileError> {
        Self::new(
            latitude,
            DEFAULT_ROTATION_RATE,
            speed_scale,
            height_scale,
            viscosity_scale,
        )
    }

    pub fn latitude(&self) -> f64 {
        self.latitude
    }

    pub fn rotation_rate(&self) -> f64 {
        self.rotation_rate
    }

    pub fn speed_scale(&self) -> f64 {
        self.speed_scale
    }

    pub fn height_scale(&self) -> f64 {
        self.height_scale
    }

    pub fn viscosity_scale(&self) -> f64 {
        self.viscosity_scale
    }

    /// Coriolis parameter `f = 2Ω sin θ`.
    pub fn coriolis(&self) -> f64 {
        2.0 * self.rotation_rate * self.latitude.sin()
    }

    /// Map a dimensional eddy viscosity (m²/s) and height (m) to the
    /// nondimensional pair `(K, z)`.
    pub fn nondimensionalize(&self, viscosity: f64, height: f64) -> Result<(f64, f64), ProfileError> {
        if !(viscosity > 0.0) || !viscosity.is_finite() {
            return Err(ProfileError::NonPositiveScale {
                name: "dimensional viscosity",
                value: viscosity,
            });
        }
        if !(height >= 0.0) {
            return Err(ProfileError::NegativeHeight(height));
        }
        let f = self.coriolis();
        let k = 2.0 * viscosity / (f * self.height_scale * self.height_scale);
        Ok((k, height / self.height_scale))
    }

    /// Inverse of [`NondimScaling::nondimensionalize`].
    pub fn dimensionalize(&self, k: f64, z: f64) -> (f64, f64) {
        let f = self.coriolis();
        (
            k * f * self.height_scale * self.height_scale / 2.0,
            z * self.height_scale,
        )
    }
}

/// Nondimensional geostrophic wind `ψ_g = u_g + i v_g`, the far-field
/// boundary value. Must be nonzero: the rotation angle is measured
/// relative to it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeostrophicWind {
    psi: Complex,
}

impl GeostrophicWind {
    pub fn new(u_g: f64, v_g: f64) -> Result<Self, ProfileError> {
        Self::from_complex(Complex::new(u_g, v_g))
    }

    pub fn from_complex(psi: Complex) -> Result<Self, ProfileError> {
        if psi.norm() == 0.0 || !psi.is_finite() {
            return Err(ProfileError::ZeroGeostrophicWind);
        }
        Ok(Self { psi })
    }

    pub fn psi(&self) -> Complex {
        self.psi
    }
}
