//! Transfer-matrix solution route.
//!
//! Matching conditions at the interface `a_k` couple the coefficient pairs of
//! layers `k-1` and `k` through a 2×2 matrix `A_k⁻¹ B_k`. In the anchored
//! basis (each layer's exponentials written relative to its own lower edge)
//! that matrix depends only on the layer width and the two amplitudes:
//!
//! ```text
//! T_k = 1/(2 l_{k-1}) · [ Ê (l_{k-1}+l_k)   Ê (l_{k-1}−l_k) ]
//!                       [ E (l_{k-1}−l_k)   E (l_{k-1}+l_k) ],
//! E = exp((1+i) w_{k-1} / l_{k-1}),  Ê = 1/E,  w_{k-1} = a_k − a_{k-1}.
//! ```
//!
//! Chaining the matrices expresses every pair as a multiple of the top-layer
//! decaying coefficient; the bottom boundary condition then fixes that single
//! unknown provided `λ_{0,0} + λ_{0,1} ≠ 0` — the uniqueness margin. All
//! products are kept sup-normalized with the scale carried separately in log
//! space, so profiles with huge `width/amplitude` ratios never overflow.

use super::{LayerCoefficients, LayerPair, SolverError, SINGULAR_MARGIN_FLOOR};
use crate::profile::{GeostrophicWind, StepViscosity};
use crate::Complex;

/// A 2×2 complex matrix stored as `entries × exp(ln_scale)`.
#[derive(Debug, Clone, Copy)]
pub struct ScaledMatrix2 {
    entries: [[Complex; 2]; 2],
    ln_scale: f64,
}

impl ScaledMatrix2 {
    pub fn identity() -> Self {
        Self {
            entries: [
                [Complex::new(1.0, 0.0), Complex::new(0.0, 0.0)],
                [Complex::new(0.0, 0.0), Complex::new(1.0, 0.0)],
            ],
            ln_scale: 0.0,
        }
    }

    /// Scaled entries; their sup norm is kept at 1 by [`ScaledMatrix2::normalized`].
    pub fn entries(&self) -> &[[Complex; 2]; 2] {
        &self.entries
    }

    /// Natural log of the factor relating scaled entries to the true matrix.
    pub fn ln_scale(&self) -> f64 {
        self.ln_scale
    }

    /// The unscaled matrix. Overflows to infinity when `ln_scale` exceeds
    /// the double-precision range; intended for moderate profiles and tests.
    pub fn unscaled(&self) -> [[Complex; 2]; 2] {
        let s = self.ln_scale.exp();
        let mut out = self.entries;
        for row in &mut out {
            for e in row {
                *e *= s;
            }
        }
        out
    }

    /// Determinant of the true matrix (scale folded back in).
    pub fn determinant(&self) -> Complex {
        let m = &self.entries;
        (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * (2.0 * self.ln_scale).exp()
    }

    /// `self × rhs` with the product renormalized to sup norm 1.
    pub fn compose(&self, rhs: &Self) -> Self {
        let a = &self.entries;
        let b = &rhs.entries;
        let mut m = [[Complex::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Self {
            entries: m,
            ln_scale: self.ln_scale + rhs.ln_scale,
        }
        .normalized()
    }

    fn normalized(mut self) -> Self {
        let sup = self
            .entries
            .iter()
            .flatten()
            .map(|e| e.norm())
            .fold(0.0, f64::max);
        if sup > 0.0 && sup.is_finite() {
            for row in &mut self.entries {
                for e in row {
                    *e /= sup;
                }
            }
            self.ln_scale += sup.ln();
        }
        self
    }
}

/// Anchored interface matrix for a jump of width `width` from a layer with
/// amplitude `l_lower` up into one with amplitude `l_upper`.
///
/// When `l_lower == l_upper` the off-diagonal entries vanish identically:
/// the interface is transparent, which is why equal neighbours may be merged.
pub fn interface_transfer(l_lower: f64, l_upper: f64, width: f64) -> ScaledMatrix2 {
    let m = width / l_lower;
    let phase = Complex::from_polar(1.0, m);
    let decay2 = (-2.0 * m).exp();
    let sum = Complex::new(l_lower + l_upper, 0.0);
    let diff = Complex::new(l_lower - l_upper, 0.0);
    ScaledMatrix2 {
        entries: [
            [decay2 * phase.conj() * sum, decay2 * phase.conj() * diff],
            [phase * diff, phase * sum],
        ],
        // factored-out growth e^{w/l} and the 1/det factor 1/(2 l_lower)
        ln_scale: m - (2.0 * l_lower).ln(),
    }
    .normalized()
}

/// Interface matrix `A_k⁻¹ B_k` for the k-th jump of `profile`, `1 ≤ k ≤ N−1`.
pub fn transfer_step(profile: &StepViscosity, k: usize) -> Result<ScaledMatrix2, SolverError> {
    let n = profile.n_layers();
    if k == 0 || k >= n {
        return Err(SolverError::IndexOutOfRange {
            k,
            max: n.saturating_sub(1),
        });
    }
    let l = profile.amplitudes();
    let width = profile.anchor(k) - profile.anchor(k - 1);
    Ok(interface_transfer(l[k - 1], l[k], width))
}

/// Running product `A_1⁻¹B_1 ⋯ A_k⁻¹B_k`, sup-normalized at every step.
#[derive(Debug, Clone)]
pub struct TransferState {
    product: ScaledMatrix2,
    steps: usize,
}

impl TransferState {
    pub fn new() -> Self {
        Self {
            product: ScaledMatrix2::identity(),
            steps: 0,
        }
    }

    pub fn absorb(&mut self, step: &ScaledMatrix2) {
        self.product = self.product.compose(step);
        self.steps += 1;
    }

    pub fn product(&self) -> &ScaledMatrix2 {
        &self.product
    }

    pub fn steps(&self) -> usize {
        self.steps
    }
}

impl Default for TransferState {
    fn default() -> Self {
        Self::new()
    }
}

/// `|λ_{0,0} + λ_{0,1}|` as a structured magnitude.
///
/// `relative` is measured against the sup norm of the accumulated product,
/// which is the quantity compared to the singularity floor; the true
/// magnitude is `relative × exp(ln_scale)` and may exceed the f64 range.
#[derive(Debug, Clone, Copy)]
pub struct UniquenessMargin {
    relative: f64,
    ln_scale: f64,
}

impl UniquenessMargin {
    pub fn relative(&self) -> f64 {
        self.relative
    }

    pub fn ln_scale(&self) -> f64 {
        self.ln_scale
    }

    /// `|λ_{0,0} + λ_{0,1}|`; overflows to infinity for extreme profiles,
    /// use [`UniquenessMargin::log10`] when in doubt.
    pub fn value(&self) -> f64 {
        self.relative * self.ln_scale.exp()
    }

    pub fn log10(&self) -> f64 {
        self.relative.log10() + self.ln_scale * std::f64::consts::LOG10_E
    }

    pub fn is_singular(&self) -> bool {
        !(self.relative >= SINGULAR_MARGIN_FLOOR)
    }
}

/// Uniqueness margin `|λ_{0,0} + λ_{0,1}|` of a profile.
///
/// Positive for every valid profile with N ≤ 3, and for larger N with small
/// amplitude jumps; a relative margin below [`SINGULAR_MARGIN_FLOOR`] makes
/// the solve report a singularity instead of dividing by noise.
pub fn uniqueness_margin(profile: &StepViscosity) -> UniquenessMargin {
    let mut state = TransferState::new();
    for k in 1..profile.n_layers() {
        state.absorb(&transfer_step(profile, k).expect("k in range"));
    }
    margin_of(state.product(), profile)
}

fn margin_of(product: &ScaledMatrix2, profile: &StepViscosity) -> UniquenessMargin {
    let m = product.entries();
    let relative = (m[0][1] + m[1][1]).norm();
    let n = profile.n_layers();
    let top_anchor = profile.anchor(n - 1) / profile.amplitudes()[n - 1];
    UniquenessMargin {
        relative,
        // product scale plus the top-layer de-anchoring factor e^{-a/l}
        ln_scale: product.ln_scale() - top_anchor,
    }
}

/// Solve for the layer coefficients by the transfer-matrix recursion.
///
/// Builds the suffix products `S_k = T_{k+1} ⋯ T_{N-1}`, reads
/// `λ_{0,0} = [S_0]_{0,1}` and `λ_{0,1} = [S_0]_{1,1}`, sets the top-layer
/// decaying coefficient to `−ψ_g / (λ_{0,0} + λ_{0,1})` and back-substitutes
/// every lower layer from its suffix product.
pub fn solve_transfer(
    profile: &StepViscosity,
    wind: &GeostrophicWind,
) -> Result<LayerCoefficients, SolverError> {
    let n = profile.n_layers();
    let mut suffixes = vec![ScaledMatrix2::identity(); n];
    for k in (1..n).rev() {
        let step = transfer_step(profile, k)?;
        suffixes[k - 1] = step.compose(&suffixes[k]);
    }

    let margin = margin_of(&suffixes[0], profile);
    if margin.is_singular() {
        return Err(SolverError::SingularMargin {
            relative: margin.relative(),
            floor: SINGULAR_MARGIN_FLOOR,
        });
    }

    let m0 = suffixes[0].entries();
    let lambda_sum = m0[0][1] + m0[1][1];
    let psi_g = wind.psi();
    let base_scale = suffixes[0].ln_scale();

    let mut layers = Vec::with_capacity(n);
    for (k, suffix) in suffixes.iter().enumerate() {
        // Ã^{(k)} = S_k (0, Ã_{N-1,1})^T with the scale difference applied;
        // suffixes shrink relative to S_0 so the factor only ever decays.
        let rescale = (suffix.ln_scale() - base_scale).exp();
        let m = suffix.entries();
        let growing = if k == n - 1 {
            Complex::new(0.0, 0.0)
        } else {
            -psi_g * m[0][1] * rescale / lambda_sum
        };
        let decaying = -psi_g * m[1][1] * rescale / lambda_sum;
        layers.push(LayerPair { growing, decaying });
    }

    Ok(LayerCoefficients::from_anchored(layers, profile))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::StepViscosity;
    use crate::ONE_PLUS_I;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    /// Raw 2×2 inversion oracle: A_k⁻¹ B_k assembled by direct inversion
    /// of the interface matrices, then conjugated into the anchored basis.
    fn anchored_step_oracle(l0: f64, l1: f64, a_prev: f64, a_k: f64) -> [[Complex; 2]; 2] {
        let alpha = (ONE_PLUS_I * a_k / l0).exp();
        let beta = (ONE_PLUS_I * a_k / l1).exp();
        let a = [[alpha, 1.0 / alpha], [l0 * alpha, -l0 / alpha]];
        let b = [[beta, 1.0 / beta], [l1 * beta, -l1 / beta]];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        let inv = [
            [a[1][1] / det, -a[0][1] / det],
            [-a[1][0] / det, a[0][0] / det],
        ];
        let mut t = [[c(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                t[i][j] = inv[i][0] * b[0][j] + inv[i][1] * b[1][j];
            }
        }
        // anchor conjugation D_{k-1}^{-1} T D_k
        let d_prev = [(ONE_PLUS_I * a_prev / l0).exp(), (-ONE_PLUS_I * a_prev / l0).exp()];
        let d_k = [(-ONE_PLUS_I * a_k / l1).exp(), (ONE_PLUS_I * a_k / l1).exp()];
        for i in 0..2 {
            for j in 0..2 {
                t[i][j] = d_prev[i] * t[i][j] * d_k[j];
            }
        }
        t
    }

    #[test]
    fn step_matches_hand_inverted_product() {
        let profile = StepViscosity::new(&[1.0], &[1.0, 4.0]).unwrap();
        let step = transfer_step(&profile, 1).unwrap();
        let got = step.unscaled();
        let want = anchored_step_oracle(1.0, 2.0, 0.0, 1.0);
        for i in 0..2 {
            for j in 0..2 {
                assert!(
                    (got[i][j] - want[i][j]).norm() <= 1e-14 * want[i][j].norm().max(1.0),
                    "entry ({i},{j}): {} vs {}",
                    got[i][j],
                    want[i][j]
                );
            }
        }
    }

    #[test]
    fn equal_amplitudes_give_transparent_interface() {
        // evaluated on raw amplitudes, before any profile-level merging
        let t = interface_transfer(2.0, 2.0, 1.3);
        assert_eq!(t.entries()[0][1], c(0.0, 0.0));
        assert_eq!(t.entries()[1][0], c(0.0, 0.0));
    }

    #[test]
    fn scale_bookkeeping_round_trips() {
        let t = interface_transfer(1.0, 2.0, 1.0);
        let factor = t.ln_scale().exp();
        let unscaled = t.unscaled();
        for i in 0..2 {
            for j in 0..2 {
                let via_factor = t.entries()[i][j] * factor;
                assert!((via_factor - unscaled[i][j]).norm() <= 1e-14 * unscaled[i][j].norm());
            }
        }
    }

    #[test]
    fn step_determinant_is_amplitude_ratio() {
        // det(A_k⁻¹ B_k) = det(B_k)/det(A_k) = l_k / l_{k-1}
        let t = interface_transfer(0.7, 2.9, 1.7);
        let det = t.determinant();
        assert!((det - c(2.9 / 0.7, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn index_out_of_range_rejected() {
        let profile = StepViscosity::new(&[1.0], &[1.0, 4.0]).unwrap();
        assert!(matches!(
            transfer_step(&profile, 0),
            Err(SolverError::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            transfer_step(&profile, 2),
            Err(SolverError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn lambda_closed_forms_one_jump() {
        // one-jump lambda factors at a1=1, l0=1, l1=2, evaluated
        // independently with complex arithmetic:
        //   λ00 = -0.007891801568283164 + 0.11128560805410927 i
        //   λ01 =  2.170333554876254    + 1.1856586248204224 i
        let profile = StepViscosity::new(&[1.0], &[1.0, 4.0]).unwrap();
        let step = transfer_step(&profile, 1).unwrap();
        let scale = step.ln_scale().exp();
        let anchor = (-ONE_PLUS_I * 1.0 / 2.0).exp();
        let lam00 = step.entries()[0][1] * scale * anchor;
        let lam01 = step.entries()[1][1] * scale * anchor;
        let want00 = c(-0.007891801568283164, 0.11128560805410927);
        let want01 = c(2.170333554876254, 1.1856586248204224);
        assert!((lam00 - want00).norm() <= 1e-13 * want00.norm());
        assert!((lam01 - want01).norm() <= 1e-13 * want01.norm());
    }

    #[test]
    fn lambda_closed_forms_generic_one_jump() {
        // lambda00 = e^{-(1+i)a(l1+l0)/(l1 l0)} (l0-l1)/(2 l0)
        // lambda01 = e^{+(1+i)a(l1-l0)/(l1 l0)} (l1+l0)/(2 l0)
        for (a1, l0, l1) in [(0.7, 0.9, 2.3), (2.5, 1.4, 0.3), (1.2, 3.0, 3.1)] {
            let profile = StepViscosity::new(&[a1], &[l0 * l0, l1 * l1]).unwrap();
            let step = transfer_step(&profile, 1).unwrap();
            let scale = step.ln_scale().exp();
            let anchor = (-ONE_PLUS_I * a1 / l1).exp();
            let lam00 = step.entries()[0][1] * scale * anchor;
            let lam01 = step.entries()[1][1] * scale * anchor;
            let want00 =
                (-ONE_PLUS_I * a1 * (l1 + l0) / (l1 * l0)).exp() * (l0 - l1) / (2.0 * l0);
            let want01 = (ONE_PLUS_I * a1 * (l1 - l0) / (l1 * l0)).exp() * (l1 + l0) / (2.0 * l0);
            assert!((lam00 - want00).norm() <= 1e-13 * want00.norm(), "a1={a1}");
            assert!((lam01 - want01).norm() <= 1e-13 * want01.norm(), "a1={a1}");
        }
    }

    #[test]
    fn margin_one_jump_value() {
        // |λ00 + λ01| = 2.521550848116325 for a1=1, l = (1, 2)
        let profile = StepViscosity::new(&[1.0], &[1.0, 4.0]).unwrap();
        let margin = uniqueness_margin(&profile);
        assert!(!margin.is_singular());
        assert!((margin.value() - 2.521550848116325).abs() < 1e-13);
    }

    #[test]
    fn margin_single_layer_is_unity() {
        let profile = StepViscosity::constant(1.0).unwrap();
        let margin = uniqueness_margin(&profile);
        assert_eq!(margin.relative(), 1.0);
        assert_eq!(margin.value(), 1.0);
    }

    #[test]
    fn margin_survives_extreme_width() {
        // raw exponentials here would be e^{2000}; the scaled product must not
        let profile = StepViscosity::new(&[2000.0], &[1.0, 9.0]).unwrap();
        let margin = uniqueness_margin(&profile);
        assert!(margin.relative().is_finite());
        assert!(!margin.is_singular());
        assert!(margin.ln_scale() > 100.0);
    }

    #[test]
    fn transfer_state_tracks_product() {
        let profile = StepViscosity::new(&[0.5, 1.25], &[1.0, 4.0, 0.25]).unwrap();
        let mut state = TransferState::new();
        for k in 1..3 {
            state.absorb(&transfer_step(&profile, k).unwrap());
        }
        assert_eq!(state.steps(), 2);
        let direct = transfer_step(&profile, 1)
            .unwrap()
            .compose(&transfer_step(&profile, 2).unwrap());
        let a = state.product().unscaled();
        let b = direct.unscaled();
        for i in 0..2 {
            for j in 0..2 {
                assert!((a[i][j] - b[i][j]).norm() <= 1e-13 * b[i][j].norm().max(1.0));
            }
        }
    }
}
