//! Wind-profile evaluation: ψ(z), the rotation angle γ(z), the surface
//! deflection angle, hodograph sampling and the limiting-angle study.

use crate::profile::{GeostrophicWind, StepViscosity};
use crate::solver::{self, LayerCoefficients, Provenance, SolverChoice, SolverError};
use crate::{Complex, ONE_PLUS_I};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("height must be nonnegative, got {0}")]
    NegativeHeight(f64),
    #[error("z = {0} lies exactly on a viscosity jump; pick a side")]
    DerivativeAtJump(f64),
    #[error("surface derivative vanished; deflection angle undefined")]
    DegenerateSurfaceDerivative,
    #[error("invalid sampling range: z_max = {z_max}, count = {count}")]
    InvalidRange { z_max: f64, count: usize },
}

/// Side selector for one-sided derivatives at a viscosity jump.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Below,
    Above,
}

/// One evaluation point of the spiral.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpiralSample {
    /// Nondimensional height.
    pub z: f64,
    /// Complex velocity `u + iv`.
    pub psi: Complex,
    pub u: f64,
    pub v: f64,
    /// Angle relative to the geostrophic wind, radians in (−π, π].
    pub gamma: f64,
    /// `|ψ − ψ_g|`.
    pub deficit: f64,
}

/// A solved wind profile: the inputs, the layer coefficients and which
/// route produced them.
#[derive(Debug, Clone)]
pub struct Solution {
    profile: StepViscosity,
    wind: GeostrophicWind,
    coefficients: LayerCoefficients,
    provenance: Provenance,
}

impl Solution {
    /// Solve `profile`/`wind` with the chosen route and bind the result.
    pub fn solve(
        profile: &StepViscosity,
        wind: &GeostrophicWind,
        choice: SolverChoice,
    ) -> Result<Self, SolverError> {
        let (coefficients, provenance) = solver::solve(profile, wind, choice)?;
        Ok(Self {
            profile: profile.clone(),
            wind: *wind,
            coefficients,
            provenance,
        })
    }

    /// Bind externally produced coefficients. The caller is responsible for
    /// their consistency with `profile` and `wind`; residual checks stay
    /// available through [`crate::solver::LinearSystem::residual`].
    pub fn from_parts(
        profile: StepViscosity,
        wind: GeostrophicWind,
        coefficients: LayerCoefficients,
        provenance: Provenance,
    ) -> Self {
        Self {
            profile,
            wind,
            coefficients,
            provenance,
        }
    }

    pub fn profile(&self) -> &StepViscosity {
        &self.profile
    }

    pub fn wind(&self) -> &GeostrophicWind {
        &self.wind
    }

    pub fn coefficients(&self) -> &LayerCoefficients {
        &self.coefficients
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Default sampling top: last jump plus ten top-layer decay lengths.
    pub fn default_z_max(&self) -> f64 {
        let n = self.profile.n_layers();
        self.profile.anchor(n - 1) + 10.0 * self.profile.amplitudes()[n - 1]
    }

    /// ψ evaluated with layer `n`'s expression (no layer lookup).
    pub fn psi_in_layer(&self, n: usize, z: f64) -> Complex {
        let pair = self.coefficients.anchored(n);
        let t = ONE_PLUS_I * (z - self.coefficients.anchor(n)) / self.coefficients.amplitude(n);
        let zero = Complex::new(0.0, 0.0);
        let grow = if pair.growing == zero {
            zero
        } else {
            pair.growing * t.exp()
        };
        grow + pair.decaying * (-t).exp() + self.wind.psi()
    }

    /// Complex wind ψ(z). Continuous across jumps; the layer lookup uses the
    /// left-value convention, which evaluation cannot distinguish.
    pub fn psi(&self, z: f64) -> Result<Complex, AnalysisError> {
        let n = self.layer_below(z)?;
        Ok(self.psi_in_layer(n, z))
    }

    /// Analytic derivative ψ'(z). Errors on a jump point, where only
    /// one-sided values exist; see [`Solution::psi_prime_sided`].
    pub fn psi_prime(&self, z: f64) -> Result<Complex, AnalysisError> {
        if self.profile.jumps().contains(&z) {
            return Err(AnalysisError::DerivativeAtJump(z));
        }
        self.psi_prime_sided(z, Side::Below)
    }

    /// One-sided analytic derivative at `z`, attributing a jump point to the
    /// layer below or above it.
    pub fn psi_prime_sided(&self, z: f64, side: Side) -> Result<Complex, AnalysisError> {
        let n = match side {
            Side::Below => self.layer_below(z)?,
            Side::Above => {
                if !(z >= 0.0) {
                    return Err(AnalysisError::NegativeHeight(z));
                }
                self.profile.jumps().partition_point(|&a| a <= z)
            }
        };
        let pair = self.coefficients.anchored(n);
        let l = self.coefficients.amplitude(n);
        let t = ONE_PLUS_I * (z - self.coefficients.anchor(n)) / l;
        let zero = Complex::new(0.0, 0.0);
        let grow = if pair.growing == zero {
            zero
        } else {
            pair.growing * t.exp()
        };
        Ok(ONE_PLUS_I / l * (grow - pair.decaying * (-t).exp()))
    }

    /// Rotation angle γ(z) in radians, in (−π, π].
    ///
    /// For z > 0 this is the two-argument arctangent of ψ(z)/ψ_g; at z = 0
    /// the wind vanishes and the L'Hospital limit through ψ'(0) is used.
    pub fn angle(&self, z: f64) -> Result<f64, AnalysisError> {
        let ratio = if z == 0.0 {
            let slope = self.psi_prime_sided(0.0, Side::Above)?;
            if slope.norm() == 0.0 {
                return Err(AnalysisError::DegenerateSurfaceDerivative);
            }
            slope / self.wind.psi()
        } else {
            self.psi(z)? / self.wind.psi()
        };
        Ok(ratio.im.atan2(ratio.re))
    }

    /// Surface deflection angle γ₀ in radians.
    pub fn surface_deflection_angle(&self) -> Result<f64, AnalysisError> {
        self.angle(0.0)
    }

    /// `|ψ(z) − ψ_g|`.
    pub fn deficit(&self, z: f64) -> Result<f64, AnalysisError> {
        Ok((self.psi(z)? - self.wind.psi()).norm())
    }

    /// Uniform samples of the spiral on `[0, z_max]`.
    pub fn hodograph(&self, z_max: f64, count: usize) -> Result<Vec<SpiralSample>, AnalysisError> {
        if !(z_max > 0.0) || count < 2 {
            return Err(AnalysisError::InvalidRange { z_max, count });
        }
        (0..count)
            .map(|i| {
                let z = z_max * i as f64 / (count - 1) as f64;
                let psi = self.psi(z)?;
                Ok(SpiralSample {
                    z,
                    psi,
                    u: psi.re,
                    v: psi.im,
                    gamma: self.angle(z)?,
                    deficit: (psi - self.wind.psi()).norm(),
                })
            })
            .collect()
    }

    fn layer_below(&self, z: f64) -> Result<usize, AnalysisError> {
        self.profile
            .layer_index(z)
            .map_err(|_| AnalysisError::NegativeHeight(z))
    }
}

/// One evaluated point of a limiting sequence.
#[derive(Debug, Clone, Serialize)]
pub struct LimitPoint {
    pub l: f64,
    pub h: f64,
    pub gamma0_deg: f64,
    pub target_deg: f64,
    pub deviation: f64,
}

/// A parameter sequence approaching one of the limiting angles.
#[derive(Debug, Clone, Serialize)]
pub struct LimitSequence {
    pub name: String,
    /// "deg" for absolute angle deviations, "rel_tan" for the relative
    /// deviation of tan γ₀ from the reduced formula.
    pub metric: String,
    pub points: Vec<LimitPoint>,
    pub max_deviation: f64,
}

/// Report of the limiting-angle study.
#[derive(Debug, Clone, Serialize)]
pub struct LimitReport {
    pub sequences: Vec<LimitSequence>,
}

impl LimitReport {
    pub fn sequence(&self, name: &str) -> Option<&LimitSequence> {
        self.sequences.iter().find(|s| s.name == name)
    }
}

fn gamma0_deg(l: f64, h: f64) -> f64 {
    let profile = StepViscosity::one_jump(h, l).expect("valid one-jump parameters");
    let wind = GeostrophicWind::new(1.0, 0.0).expect("unit wind");
    let sol = Solution::solve(&profile, &wind, SolverChoice::Transfer).expect("solvable");
    sol.surface_deflection_angle()
        .expect("nondegenerate")
        .to_degrees()
}

/// Evaluate the deflection angle along the limiting parameter sequences.
///
/// Sequences (i)/(ii) hold `l` fixed and push the jump height to the
/// extremes, where the constant-viscosity 45° must reappear. Sequences
/// (iii)/(iv) follow the iterated limits toward 90° and 0° on coupled
/// finite paths; the achieved proximity at the endpoint is reported, not
/// asserted. Sequence (v) compares tan γ₀ against the reduced small-l
/// formula `(sinh 2h + sin 2h)/(sinh 2h − sin 2h)` at l = 1e-6, at jump
/// heights large enough that the finite-l correction `4 l cosh 2h` sits
/// below the comparison noise.
pub fn limit_angle_suite() -> LimitReport {
    let mut sequences = Vec::new();

    let angle_sequence = |name: &str, target: f64, pairs: &[(f64, f64)]| {
        let points: Vec<LimitPoint> = pairs
            .iter()
            .map(|&(l, h)| {
                let g = gamma0_deg(l, h);
                LimitPoint {
                    l,
                    h,
                    gamma0_deg: g,
                    target_deg: target,
                    deviation: (g - target).abs(),
                }
            })
            .collect();
        let max_deviation = points.iter().map(|p| p.deviation).fold(0.0, f64::max);
        LimitSequence {
            name: name.to_string(),
            metric: "deg".to_string(),
            points,
            max_deviation,
        }
    };

    sequences.push(angle_sequence(
        "h_to_zero_fixed_l",
        45.0,
        &[(1.0, 1e-6), (0.5, 1e-6), (5.0, 1e-6)],
    ));
    sequences.push(angle_sequence(
        "h_to_infinity_fixed_l",
        45.0,
        &[(1.0, 1e3), (0.5, 50.0), (5.0, 50.0)],
    ));
    sequences.push(angle_sequence(
        "l_to_zero_then_h_to_zero",
        90.0,
        &[(1e-2, 1e-1), (1e-3, 1e-2), (1e-4, 1e-3)],
    ));
    sequences.push(angle_sequence(
        "l_to_infinity_then_h_to_zero",
        0.0,
        &[(1e2, 1e-1), (1e3, 1e-2), (1e4, 1e-3)],
    ));

    let l_small = 1e-6;
    let points: Vec<LimitPoint> = [1.5, 2.0, 3.0]
        .iter()
        .map(|&h| {
            let g = gamma0_deg(l_small, h);
            let reduced =
                ((2.0 * h).sinh() + (2.0 * h).sin()) / ((2.0 * h).sinh() - (2.0 * h).sin());
            let rel = (g.to_radians().tan() - reduced).abs() / reduced.abs();
            LimitPoint {
                l: l_small,
                h,
                gamma0_deg: g,
                target_deg: reduced.atan().to_degrees(),
                deviation: rel,
            }
        })
        .collect();
    let max_deviation = points.iter().map(|p| p.deviation).fold(0.0, f64::max);
    sequences.push(LimitSequence {
        name: "small_l_reduced_formula".to_string(),
        metric: "rel_tan".to_string(),
        points,
        max_deviation,
    });

    LimitReport { sequences }
}
