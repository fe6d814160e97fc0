//! Independent references used to validate the solvers: the classical
//! constant-viscosity solution, the one-jump closed form, the
//! one-jump deflection formula, and a conservative finite-difference solve
//! of the boundary-value problem.
//!
//! None of these share code with the solver routes they check: the closed
//! forms are evaluated directly from their explicit expressions and the
//! finite-difference solve uses its own tridiagonal elimination.

use crate::profile::StepViscosity;
use crate::{Complex, ONE_PLUS_I};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("one-jump closed form requires h > 0, l > 0, l != 1 and psi_g != 0")]
    InvalidOneJump,
    #[error("closed-form denominator magnitude {0:.3e} below floor")]
    DenominatorUnderflow(f64),
    #[error("grid top {z_top} must reach a_last + 10 l_last = {required}")]
    GridTopTooLow { z_top: f64, required: f64 },
    #[error("need at least {required} grid points, got {got}")]
    TooFewPoints { required: usize, got: usize },
    #[error("cannot align {jumps} jump points on a {points}-point grid")]
    JumpNotRepresentable { jumps: usize, points: usize },
    #[error("finite-difference tridiagonal system singular at row {0}")]
    SingularTridiagonal(usize),
}

const DENOMINATOR_FLOOR: f64 = 1e-300;

/// The four closed-form coefficients of the one-jump solution with lower-layer
/// viscosity 1, jump at `h` and upper-layer amplitude `l`.
#[derive(Debug, Clone, Copy)]
pub struct OneJumpClosedForm {
    pub h: f64,
    pub l: f64,
    pub psi_g: Complex,
    /// Growing coefficient of the lower layer.
    pub a: Complex,
    /// Decaying coefficient of the lower layer.
    pub b: Complex,
    /// Growing coefficient of the upper layer, identically zero.
    pub c: Complex,
    /// Decaying coefficient of the upper layer (raw basis). Overflows
    /// for extreme `h/l`; `d_anchored` stays bounded.
    pub d: Complex,
    /// `D e^{−(1+i)h/l}`, the upper-layer coefficient in the anchored basis.
    pub d_anchored: Complex,
}

/// Evaluate the one-jump closed form.
///
/// The common denominator `1 + e^{(2+2i)h} − l + e^{(2+2i)h} l` is factored
/// as `e^{(2+2i)h} ((1+l) + (1−l) e^{−(2+2i)h})` so that only decaying
/// exponentials are ever formed.
pub fn one_jump_coefficients(
    h: f64,
    l: f64,
    psi_g: Complex,
) -> Result<OneJumpClosedForm, OracleError> {
    if !(h > 0.0) || !(l > 0.0) || l == 1.0 || psi_g.norm() == 0.0 {
        return Err(OracleError::InvalidOneJump);
    }
    let two_h = Complex::new(2.0, 2.0) * h;
    // denominator = e^{(2+2i)h} * den_anchored
    let den_anchored = Complex::new(1.0 + l, 0.0) + (1.0 - l) * (-two_h).exp();
    if den_anchored.norm() < DENOMINATOR_FLOOR {
        return Err(OracleError::DenominatorUnderflow(den_anchored.norm()));
    }
    let a = psi_g * (l - 1.0) * (-two_h).exp() / den_anchored;
    let b = -psi_g * (l + 1.0) / den_anchored;
    // D = -2 psi_g e^{(1+i)h + (1+i)h/l} / denominator
    let d_anchored = -2.0 * psi_g * (-ONE_PLUS_I * h).exp() / den_anchored;
    let d = d_anchored * (ONE_PLUS_I * h / l).exp();
    Ok(OneJumpClosedForm {
        h,
        l,
        psi_g,
        a,
        b,
        c: Complex::new(0.0, 0.0),
        d,
        d_anchored,
    })
}

/// Surface deflection angle of the one-jump profile, in radians:
///
/// ```text
/// tan γ₀ = ((1+l)² e^{2h} − (1−l)² e^{−2h} + 2(1−l²) sin 2h)
///        / ((1+l)² e^{2h} − (1−l)² e^{−2h} − 2(1−l²) sin 2h)
/// ```
///
/// evaluated with the common factor `e^{2h}` removed, and quadrant-fixed by
/// the two-argument arctangent (numerator and denominator are positive for
/// every valid pair, placing γ₀ in (0, π/2)).
pub fn one_jump_deflection(h: f64, l: f64) -> f64 {
    let sum2 = (1.0 + l) * (1.0 + l);
    let diff2 = (1.0 - l) * (1.0 - l);
    let cross = 2.0 * (1.0 - l * l) * (2.0 * h).sin() * (-2.0 * h).exp();
    let even = sum2 - diff2 * (-4.0 * h).exp();
    (even + cross).atan2(even - cross)
}

/// Ekman's constant-viscosity solution `ψ_g (1 − e^{−(1+i)z})`.
pub fn classical_ekman(z: f64, psi_g: Complex) -> Complex {
    psi_g * (Complex::new(1.0, 0.0) - (-ONE_PLUS_I * z).exp())
}

/// A finite-difference solution sampled on its grid.
#[derive(Debug, Clone)]
pub struct FdSolution {
    pub z: Vec<f64>,
    pub psi: Vec<Complex>,
}

/// Minimum accepted grid size.
pub const FD_MIN_POINTS: usize = 1000;

/// Solve `(K ψ')' − 2i(ψ − ψ_g) = 0` by a conservative vertex-centered
/// finite-difference scheme.
///
/// The grid is piecewise uniform with every viscosity jump placed exactly on
/// a cell face, so each cell lies inside one layer and `K` is evaluated
/// unambiguously at cell midpoints; the single flux value shared by the two
/// cells meeting at a jump makes the discrete flux exactly continuous there.
/// The top boundary uses the Robin closure
/// `ψ'(z_top) = −(1+i)/l_{N-1} (ψ(z_top) − ψ_g)`, exact for the decaying
/// top-layer mode, so the truncated domain does not bias convergence studies.
pub fn finite_difference_bvp(
    profile: &StepViscosity,
    psi_g: Complex,
    z_top: f64,
    n_points: usize,
) -> Result<FdSolution, OracleError> {
    let amps = profile.amplitudes();
    let n_layers = profile.n_layers();
    let last_jump = profile.anchor(n_layers - 1);
    let required = last_jump + 10.0 * amps[n_layers - 1];
    if !(z_top >= required) {
        return Err(OracleError::GridTopTooLow { z_top, required });
    }
    if n_points < FD_MIN_POINTS {
        return Err(OracleError::TooFewPoints {
            required: FD_MIN_POINTS,
            got: n_points,
        });
    }
    if n_points < 2 * n_layers {
        return Err(OracleError::JumpNotRepresentable {
            jumps: n_layers - 1,
            points: n_points,
        });
    }

    // piecewise-uniform grid with jumps as nodes
    let mut nodes = vec![0.0];
    let mut edges: Vec<f64> = (0..n_layers).map(|n| profile.anchor(n)).collect();
    edges.push(z_top);
    for seg in edges.windows(2) {
        let width = seg[1] - seg[0];
        let cells = ((width / z_top) * n_points as f64).round().max(2.0) as usize;
        for i in 1..=cells {
            nodes.push(seg[0] + width * i as f64 / cells as f64);
        }
    }
    let m = nodes.len();

    // K at cell midpoints (each cell stays within a single layer)
    let mut k_cell = Vec::with_capacity(m - 1);
    for w in nodes.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let layer = profile.layer_index(mid).expect("mid >= 0");
        k_cell.push(amps[layer] * amps[layer]);
    }

    let zero = Complex::new(0.0, 0.0);
    let two_i = Complex::new(0.0, 2.0);
    let mut lower = vec![zero; m];
    let mut diag = vec![zero; m];
    let mut upper = vec![zero; m];
    let mut rhs = vec![zero; m];

    diag[0] = Complex::new(1.0, 0.0); // psi(0) = 0

    for i in 1..m - 1 {
        let h_lo = nodes[i] - nodes[i - 1];
        let h_hi = nodes[i + 1] - nodes[i];
        let w = 0.5 * (h_lo + h_hi);
        let f_lo = Complex::new(k_cell[i - 1] / h_lo / w, 0.0);
        let f_hi = Complex::new(k_cell[i] / h_hi / w, 0.0);
        lower[i] = f_lo;
        upper[i] = f_hi;
        diag[i] = -(f_lo + f_hi) - two_i;
        rhs[i] = -two_i * psi_g;
    }

    // half control volume at the top with the exact-mode Robin flux
    let h_last = nodes[m - 1] - nodes[m - 2];
    let w = 0.5 * h_last;
    let f_lo = Complex::new(k_cell[m - 2] / h_last / w, 0.0);
    let robin = ONE_PLUS_I * amps[n_layers - 1] / w;
    lower[m - 1] = f_lo;
    diag[m - 1] = -f_lo - robin - two_i;
    rhs[m - 1] = -two_i * psi_g - robin * psi_g;

    let psi = thomas(&lower, &diag, &upper, &rhs)?;
    Ok(FdSolution { z: nodes, psi })
}

/// Tridiagonal elimination (Thomas algorithm).
fn thomas(
    lower: &[Complex],
    diag: &[Complex],
    upper: &[Complex],
    rhs: &[Complex],
) -> Result<Vec<Complex>, OracleError> {
    let m = diag.len();
    let mut c_prime = vec![Complex::new(0.0, 0.0); m];
    let mut d_prime = vec![Complex::new(0.0, 0.0); m];
    let mut denom = diag[0];
    if denom.norm() == 0.0 {
        return Err(OracleError::SingularTridiagonal(0));
    }
    c_prime[0] = upper[0] / denom;
    d_prime[0] = rhs[0] / denom;
    for i in 1..m {
        denom = diag[i] - lower[i] * c_prime[i - 1];
        if denom.norm() == 0.0 {
            return Err(OracleError::SingularTridiagonal(i));
        }
        if i < m - 1 {
            c_prime[i] = upper[i] / denom;
        }
        d_prime[i] = (rhs[i] - lower[i] * d_prime[i - 1]) / denom;
    }
    let mut x = d_prime;
    for i in (0..m - 1).rev() {
        let next = x[i + 1];
        x[i] -= c_prime[i] * next;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    const PSI_G: Complex = Complex::new(1.0, 0.0);

    #[test]
    fn closed_form_coefficients_at_h1_l2() {
        // frozen from independent complex arithmetic on the explicit formulas
        let cf = one_jump_coefficients(1.0, 2.0, PSI_G).unwrap();
        assert!((cf.a - c(-0.020015930995773548, -0.03945820119917663)).norm() <= 1e-16);
        assert!((cf.b - c(-0.9799840690042264, 0.03945820119917663)).norm() <= 1e-15);
        assert!((cf.d - c(-0.34010182132202377, 0.20397918005373605)).norm() <= 1e-15);
        assert_eq!(cf.c, c(0.0, 0.0));
    }

    #[test]
    fn boundary_identity_holds() {
        for (h, l) in [(0.3, 0.08), (1.0, 2.0), (2.7, 14.0), (5.0, 0.05)] {
            let cf = one_jump_coefficients(h, l, c(0.4, -1.3)).unwrap();
            assert!(
                (cf.a + cf.b + cf.psi_g).norm() <= 1e-13 * cf.psi_g.norm(),
                "h={h} l={l}"
            );
        }
    }

    #[test]
    fn matching_identities_hold() {
        // continuity: A e^{(1+i)h} + B e^{-(1+i)h} = D e^{-(1+i)h/l}
        // flux:       A e^{(1+i)h} - B e^{-(1+i)h} = -l D e^{-(1+i)h/l}
        for (h, l) in [(0.6, 0.3), (1.0, 2.0), (2.0, 5.0)] {
            let cf = one_jump_coefficients(h, l, PSI_G).unwrap();
            let up = (ONE_PLUS_I * h).exp();
            let down = (-ONE_PLUS_I * h).exp();
            let lhs_c = cf.a * up + cf.b * down;
            let lhs_f = cf.a * up - cf.b * down;
            let rhs = cf.d_anchored; // D e^{-(1+i)h/l}
            assert!((lhs_c - rhs).norm() <= 1e-13, "continuity h={h} l={l}");
            assert!((lhs_f + l * rhs).norm() <= 1e-13, "flux h={h} l={l}");
        }
    }

    #[test]
    fn invalid_one_jump_inputs() {
        assert!(one_jump_coefficients(0.0, 2.0, PSI_G).is_err());
        assert!(one_jump_coefficients(1.0, 1.0, PSI_G).is_err());
        assert!(one_jump_coefficients(1.0, -1.0, PSI_G).is_err());
        assert!(one_jump_coefficients(1.0, 2.0, c(0.0, 0.0)).is_err());
    }

    #[test]
    fn deflection_is_45_degrees_for_unit_amplitude() {
        for h in [1e-3, 0.35, 1.1, 7.0, 400.0, 1e3] {
            assert_eq!(one_jump_deflection(h, 1.0).to_degrees(), 45.0);
        }
    }

    #[test]
    fn deflection_brackets_45_degrees() {
        // Figure-1 parameter pairs: frozen reference angles in degrees
        let low = one_jump_deflection(1.1, 0.08).to_degrees();
        let high = one_jump_deflection(0.35, 5.0).to_degrees();
        assert!((low - 53.75457607263704).abs() < 1e-10);
        assert!((high - 19.403321516233216).abs() < 1e-10);
        assert!(low > 45.0 && high < 45.0);
    }

    #[test]
    fn small_l_reduction_matches_sinh_formula() {
        let h: f64 = 0.5;
        let reduced = ((2.0 * h).sinh() + (2.0 * h).sin()) / ((2.0 * h).sinh() - (2.0 * h).sin());
        let tan = one_jump_deflection(h, 1e-8).tan();
        assert!((tan - reduced).abs() <= 1e-6 * reduced.abs());
    }

    #[test]
    fn classical_solution_boundaries() {
        assert_eq!(classical_ekman(0.0, PSI_G), c(0.0, 0.0));
        assert!((classical_ekman(60.0, PSI_G) - PSI_G).norm() < 1e-25);
        let z = 6.0;
        let deficit = (classical_ekman(z, PSI_G) - PSI_G).norm();
        assert!((deficit - (-z).exp()).abs() < 1e-15);
    }

    #[test]
    fn fd_preconditions_enforced() {
        let profile = StepViscosity::new(&[1.0], &[1.0, 4.0]).unwrap();
        assert!(matches!(
            finite_difference_bvp(&profile, PSI_G, 5.0, 2000),
            Err(OracleError::GridTopTooLow { .. })
        ));
        assert!(matches!(
            finite_difference_bvp(&profile, PSI_G, 30.0, 100),
            Err(OracleError::TooFewPoints { .. })
        ));
    }

    #[test]
    fn fd_grid_contains_every_jump() {
        let profile = StepViscosity::new(&[0.7, 1.5], &[1.0, 2.25, 1.44]).unwrap();
        let fd = finite_difference_bvp(&profile, PSI_G, 14.0, 1500).unwrap();
        for &a in profile.jumps() {
            assert!(
                fd.z.contains(&a),
                "jump {a} missing from the grid"
            );
        }
    }

    #[test]
    fn fd_matches_classical_solution() {
        let profile = StepViscosity::constant(1.0).unwrap();
        let fd = finite_difference_bvp(&profile, PSI_G, 10.0, 4000).unwrap();
        let err = fd
            .z
            .iter()
            .zip(&fd.psi)
            .map(|(&z, &p)| (p - classical_ekman(z, PSI_G)).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "max deviation {err}");
    }

    #[test]
    fn fd_flux_telescopes_exactly() {
        // each interior flux is a single shared value, so summing the solved
        // balance equations leaves only the first and last cell fluxes
        let profile = StepViscosity::new(&[1.0], &[1.0, 4.0]).unwrap();
        let fd = finite_difference_bvp(&profile, PSI_G, 21.0, 2000).unwrap();
        let m = fd.z.len();
        let two_i = Complex::new(0.0, 2.0);
        let mut volume = Complex::new(0.0, 0.0);
        for i in 1..m - 1 {
            let w = 0.5 * (fd.z[i + 1] - fd.z[i - 1]);
            volume += two_i * (fd.psi[i] - PSI_G) * w;
        }
        let cell_flux = |j: usize| {
            let mid = 0.5 * (fd.z[j] + fd.z[j + 1]);
            let k = profile.viscosity_at(mid).unwrap();
            Complex::new(k, 0.0) * (fd.psi[j + 1] - fd.psi[j]) / (fd.z[j + 1] - fd.z[j])
        };
        let telescoped = cell_flux(m - 2) - cell_flux(0);
        assert!(
            (telescoped - volume).norm() <= 1e-10,
            "imbalance {}",
            (telescoped - volume).norm()
        );
    }
}
