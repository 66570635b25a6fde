//! Single-qubit information measures: Bures QFI in polar form, fidelity QFI,
//! classical Fisher information and equatorial measurement bases.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix};

/// Default finite-difference step for fidelity-based QFI.
pub const DEFAULT_DTHETA: f64 = 1e-5;

/// Probabilities at or below this are treated as zero.
pub const PROBABILITY_FLOOR: f64 = 1e-15;
const SINGULAR_DP: f64 = 1e-12;
const PURE_GAP: f64 = 1e-12;
const PURE_DR: f64 = 1e-8;

/// Off-diagonal element of the sensor state in polar form, `r e^{i phi}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coherence {
    pub r: f64,
    pub phi: f64,
}

impl Coherence {
    pub fn new(r: f64, phi: f64) -> Result<Self> {
        let c = Self { r, phi };
        c.validate()?;
        Ok(c)
    }

    pub fn from_complex(z: Complex64) -> Self {
        Self { r: z.norm(), phi: z.arg() }
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::from_polar(self.r, self.phi)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.r) || !self.phi.is_finite() {
            return Err(Error::InvalidCoherence(self.r));
        }
        Ok(())
    }

    /// The 2x2 density matrix `½[[1, r e^{-iΦ}], [r e^{iΦ}, 1]]`.
    ///
    /// Row/column 0 is the sensor's upper Z state; the coherence sits at (1, 0).
    pub fn density_matrix(self) -> ComplexMatrix {
        let off = self.to_complex() * 0.5;
        let half = Complex64::new(0.5, 0.0);
        ComplexMatrix::from_row_slice(2, 2, &[half, off.conj(), off, half])
    }
}

/// Derivatives of r and Φ with respect to the estimated frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherenceDerivative {
    pub dr_domega: f64,
    pub dphi_domega: f64,
}

/// Radial (length) and rotational (phase) parts of the QFI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QfiBreakdown {
    pub i_r: f64,
    pub i_phi: f64,
    pub total: f64,
}

impl QfiBreakdown {
    pub fn new(i_r: f64, i_phi: f64) -> Self {
        Self { i_r, i_phi, total: i_r + i_phi }
    }

    pub fn zero() -> Self {
        Self::new(0.0, 0.0)
    }
}

/// Measurement axis in the equatorial plane, measured from σx.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementBasis {
    alpha: f64,
}

impl MeasurementBasis {
    pub fn new(alpha: f64) -> Self {
        Self { alpha: canonical_angle(alpha) }
    }

    pub fn alpha(self) -> f64 {
        self.alpha
    }
}

/// How `fi_xy_basis` treats the radial derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum FiMode {
    /// Both dr and dΦ enter the outcome probabilities.
    #[default]
    Exact,
    /// Only the phase derivative is kept.
    RotationOnly,
}

/// Finite-difference scheme for fidelity-based QFI sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stencil {
    /// Fidelity between θ and θ + dθ.
    #[default]
    Forward,
    /// Fidelity between θ − dθ/2 and θ + dθ/2.
    Central,
    /// Central stencil extrapolated from steps dθ and dθ/2.
    Richardson,
}

/// Maps an angle onto (−π, π].
pub fn canonical_angle(x: f64) -> f64 {
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    if y <= -PI {
        y += 2.0 * PI;
    }
    y
}

/// Bures QFI of a qubit with equatorial Bloch vector of length r and angle Φ.
pub fn bures_qfi(c: Coherence, dc: CoherenceDerivative) -> Result<QfiBreakdown> {
    c.validate()?;
    let gap = 1.0 - c.r * c.r;
    let i_r = if gap < PURE_GAP {
        if dc.dr_domega.abs() >= PURE_DR {
            return Err(Error::DegenerateRadial { r: c.r, dr: dc.dr_domega });
        }
        0.0
    } else {
        dc.dr_domega * dc.dr_domega / gap
    };
    let i_phi = c.r * c.r * dc.dphi_domega * dc.dphi_domega;
    Ok(QfiBreakdown::new(i_r, i_phi))
}

/// QFI from the fidelity of two nearby states: `8(1 − F)/dθ² · t²`.
pub fn fidelity_qfi(
    rho_a: &ComplexMatrix,
    rho_b: &ComplexMatrix,
    dtheta: f64,
    t: f64,
) -> Result<f64> {
    if dtheta == 0.0 || !dtheta.is_finite() {
        return Err(Error::ZeroStep);
    }
    if rho_a.shape() != rho_b.shape() {
        return Err(Error::DimensionMismatch { left: rho_a.nrows(), right: rho_b.nrows() });
    }
    linalg::validate_density(rho_a)?;
    linalg::validate_density(rho_b)?;
    Ok(8.0 * linalg::infidelity(rho_a, rho_b) / (dtheta * dtheta) * t * t)
}

/// Evaluates `fidelity_qfi` on a one-parameter family with the chosen stencil.
pub fn fidelity_qfi_family<F>(
    family: F,
    theta: f64,
    dtheta: f64,
    t: f64,
    stencil: Stencil,
) -> Result<f64>
where
    F: Fn(f64) -> Result<ComplexMatrix>,
{
    let central = |h: f64| -> Result<f64> {
        fidelity_qfi(&family(theta - 0.5 * h)?, &family(theta + 0.5 * h)?, h, t)
    };
    match stencil {
        Stencil::Forward => fidelity_qfi(&family(theta)?, &family(theta + dtheta)?, dtheta, t),
        Stencil::Central => central(dtheta),
        Stencil::Richardson => {
            let coarse = central(dtheta)?;
            let fine = central(0.5 * dtheta)?;
            Ok((4.0 * fine - coarse) / 3.0)
        }
    }
}

/// Classical Fisher information of a discrete distribution.
pub fn classical_fi(p: &[f64], dp: &[f64]) -> Result<f64> {
    if p.len() != dp.len() {
        return Err(Error::DimensionMismatch { left: p.len(), right: dp.len() });
    }
    if p.iter().any(|&x| !(x >= -PROBABILITY_FLOOR) || !x.is_finite()) {
        return Err(Error::NotAProbabilityVector("negative or non-finite entry".into()));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::NotAProbabilityVector(format!("sums to {total}")));
    }
    let drift: f64 = dp.iter().sum();
    if drift.abs() > 1e-8 || dp.iter().any(|x| !x.is_finite()) {
        return Err(Error::NotAProbabilityVector(format!("derivatives sum to {drift}")));
    }
    let mut info = 0.0;
    for (index, (&pi, &dpi)) in p.iter().zip(dp).enumerate() {
        if pi > PROBABILITY_FLOOR {
            info += dpi * dpi / pi;
        } else if dpi.abs() > SINGULAR_DP {
            return Err(Error::InformationSingular { index, p: pi, dp: dpi });
        }
    }
    Ok(info)
}

/// Outcome probabilities and derivatives for a projective measurement along `basis`.
pub fn xy_outcomes(
    c: Coherence,
    dc: CoherenceDerivative,
    basis: MeasurementBasis,
) -> ([f64; 2], [f64; 2]) {
    let delta = basis.alpha() - c.phi;
    let (sin_d, cos_d) = delta.sin_cos();
    let p_plus = 0.5 * (1.0 + c.r * cos_d);
    let dp_plus = 0.5 * (dc.dr_domega * cos_d + c.r * sin_d * dc.dphi_domega);
    ([p_plus, 1.0 - p_plus], [dp_plus, -dp_plus])
}

/// Fisher information of a σ measurement at angle α in the X–Y plane.
///
/// Returns +∞ when an outcome has zero probability yet nonzero slope.
pub fn fi_xy_basis(
    c: Coherence,
    dc: CoherenceDerivative,
    basis: MeasurementBasis,
    mode: FiMode,
) -> f64 {
    let delta = basis.alpha() - c.phi;
    let (sin_d, cos_d) = delta.sin_cos();
    let slope = match mode {
        FiMode::Exact => dc.dr_domega * cos_d + c.r * sin_d * dc.dphi_domega,
        FiMode::RotationOnly => c.r * sin_d * dc.dphi_domega,
    };
    // 4 p+ p- = 1 - r² cos²Δ
    let denom = 1.0 - (c.r * cos_d).powi(2);
    if denom <= 4.0 * PROBABILITY_FLOOR {
        return if slope.abs() <= 2.0 * SINGULAR_DP { 0.0 } else { f64::INFINITY };
    }
    slope * slope / denom
}

/// α = Φ + π/2, which ignores the radial contribution.
pub fn optimal_measurement_angle(c: Coherence) -> MeasurementBasis {
    MeasurementBasis::new(c.phi + FRAC_PI_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn coh(r: f64, phi: f64) -> Coherence {
        Coherence::new(r, phi).unwrap()
    }

    fn der(dr: f64, dphi: f64) -> CoherenceDerivative {
        CoherenceDerivative { dr_domega: dr, dphi_domega: dphi }
    }

    #[test]
    fn bures_examples() {
        let q = bures_qfi(coh(0.5, 1.3), der(0.0, 2.0)).unwrap();
        assert_eq!((q.i_r, q.i_phi, q.total), (0.0, 1.0, 1.0));
        assert_eq!(bures_qfi(coh(0.3, 0.0), der(0.0, 0.0)).unwrap().total, 0.0);
        let q = bures_qfi(coh(0.6, 0.0), der(0.3, 1.5)).unwrap();
        assert_relative_eq!(q.i_r, 0.140625, max_relative = 1e-14);
        assert_relative_eq!(q.i_phi, 0.81, max_relative = 1e-14);
        assert_relative_eq!(q.total, 0.950625, max_relative = 1e-14);
    }

    #[test]
    fn bures_pure_limit() {
        let q = bures_qfi(coh(1.0, 0.0), der(1e-10, 3.0)).unwrap();
        assert_eq!(q.i_r, 0.0);
        assert_eq!(q.i_phi, 9.0);
        assert!(matches!(
            bures_qfi(coh(1.0, 0.0), der(0.1, 3.0)),
            Err(Error::DegenerateRadial { .. })
        ));
        assert!(matches!(Coherence::new(1.2, 0.0), Err(Error::InvalidCoherence(_))));
    }

    #[test]
    fn fidelity_qfi_identical_states_vanish() {
        let rho = coh(0.4, 0.1).density_matrix();
        // SVD roundoff only: ~ε² / dθ²
        assert!(fidelity_qfi(&rho, &rho, 1e-3, 2.0).unwrap().abs() < 1e-20);
    }

    #[test]
    fn fidelity_qfi_pure_small_angle() {
        // Pure states on the equator separated by dθ: 8(1 - cos(dθ/2))/dθ² → 1.
        let h = 1e-4;
        let a = coh(1.0, 0.3).density_matrix();
        let b = coh(1.0, 0.3 + h).density_matrix();
        let q = fidelity_qfi(&a, &b, h, 1.0).unwrap();
        assert!((q - 1.0).abs() < 1e-6, "{q}");
    }

    #[test]
    fn fidelity_qfi_rejects_bad_input() {
        let rho = coh(0.4, 0.1).density_matrix();
        assert_eq!(fidelity_qfi(&rho, &rho, 0.0, 1.0), Err(Error::ZeroStep));
        let big = ComplexMatrix::identity(3, 3) * Complex64::new(1.0 / 3.0, 0.0);
        assert!(matches!(
            fidelity_qfi(&rho, &big, 1e-3, 1.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn fidelity_qfi_converges_to_bures() {
        // r(θ) = 0.8 - 0.1 sin θ, Φ(θ) = 0.5 + 1.3 θ, t = 1.
        let family = |th: f64| Ok(coh(0.8 - 0.1 * th.sin(), 0.5 + 1.3 * th).density_matrix());
        let theta = 0.7;
        let exact = bures_qfi(
            coh(0.8 - 0.1 * f64::sin(theta), 0.5 + 1.3 * theta),
            der(-0.1 * f64::cos(theta), 1.3),
        )
        .unwrap()
        .total;
        for &h in &[1e-3, 1e-4] {
            let q = fidelity_qfi_family(family, theta, h, 1.0, Stencil::Forward).unwrap();
            assert!(((q - exact) / exact).abs() <= 10.0 * h, "h={h} q={q} exact={exact}");
        }
        let q = fidelity_qfi_family(family, theta, 1e-3, 1.0, Stencil::Richardson).unwrap();
        assert!(((q - exact) / exact).abs() < 1e-6);
    }

    #[test]
    fn classical_fi_examples() {
        assert_eq!(classical_fi(&[0.5, 0.5], &[0.0, 0.0]).unwrap(), 0.0);
        assert_relative_eq!(classical_fi(&[0.5, 0.5], &[0.1, -0.1]).unwrap(), 0.04, max_relative = 1e-14);
        assert!(matches!(
            classical_fi(&[0.6, 0.5], &[0.0, 0.0]),
            Err(Error::NotAProbabilityVector(_))
        ));
        assert!(matches!(
            classical_fi(&[1.0, 0.0], &[-0.1, 0.1]),
            Err(Error::InformationSingular { index: 1, .. })
        ));
        assert_eq!(classical_fi(&[1.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn fi_xy_examples() {
        let c = coh(0.7, 0.4);
        let d = der(0.0, 1.5);
        let best = fi_xy_basis(c, d, optimal_measurement_angle(c), FiMode::Exact);
        assert_relative_eq!(best, 0.49 * 2.25, max_relative = 1e-13);
        assert!(fi_xy_basis(c, d, MeasurementBasis::new(0.4), FiMode::Exact).abs() < 1e-25);
    }

    #[test]
    fn fi_xy_exact_matches_classical() {
        let c = coh(0.7, 0.3);
        let d = der(0.05, 1.2);
        let basis = MeasurementBasis::new(1.0);
        let (p, dp) = xy_outcomes(c, d, basis);
        let reference = classical_fi(&p, &dp).unwrap();
        assert_relative_eq!(fi_xy_basis(c, d, basis, FiMode::Exact), reference, max_relative = 1e-10);
    }

    #[test]
    fn optimal_angle_canonical() {
        assert_relative_eq!(optimal_measurement_angle(coh(0.5, 0.0)).alpha(), FRAC_PI_2);
        assert_relative_eq!(optimal_measurement_angle(coh(0.5, FRAC_PI_2)).alpha(), PI);
        assert_relative_eq!(MeasurementBasis::new(-PI).alpha(), PI);
        assert_relative_eq!(MeasurementBasis::new(7.0).alpha(), 7.0 - 2.0 * PI, epsilon = 1e-15);
    }

    #[test]
    fn rotation_only_optimum_beats_grid() {
        let c = coh(0.82, 0.61);
        let d = der(-0.2, 2.0);
        let best = fi_xy_basis(c, d, optimal_measurement_angle(c), FiMode::RotationOnly);
        assert_relative_eq!(best, c.r * c.r * 4.0, max_relative = 1e-13);
        for k in 0..720 {
            let alpha = -PI + (k as f64 + 0.5) * 2.0 * PI / 720.0;
            let fi = fi_xy_basis(c, d, MeasurementBasis::new(alpha), FiMode::RotationOnly);
            assert!(fi <= best * (1.0 + 1e-12));
        }
    }

    proptest! {
        #[test]
        fn total_is_exact_sum(r in 0.0..0.999f64, phi in -3.0..3.0f64, dr in -2.0..2.0f64, dphi in -5.0..5.0f64) {
            let q = bures_qfi(coh(r, phi), der(dr, dphi)).unwrap();
            prop_assert_eq!(q.total, q.i_r + q.i_phi);
            prop_assert!(q.i_r >= 0.0 && q.i_phi >= 0.0);
        }

        #[test]
        fn measurement_never_beats_qfi(r in 0.0..0.99f64, phi in -3.0..3.0f64, dr in -1.0..1.0f64, dphi in -4.0..4.0f64) {
            let c = coh(r, phi);
            let d = der(dr, dphi);
            let q = bures_qfi(c, d).unwrap().total;
            for k in 0..360 {
                let basis = MeasurementBasis::new(k as f64 * PI / 180.0);
                let fi = fi_xy_basis(c, d, basis, FiMode::Exact);
                prop_assert!(fi <= q + 1e-8, "fi={} q={}", fi, q);
            }
        }

        #[test]
        fn rotation_only_equals_exact_without_dr(r in 0.0..0.99f64, phi in -3.0..3.0f64, dphi in -4.0..4.0f64, alpha in -3.0..3.0f64) {
            let c = coh(r, phi);
            let d = der(0.0, dphi);
            let basis = MeasurementBasis::new(alpha);
            let a = fi_xy_basis(c, d, basis, FiMode::Exact);
            let b = fi_xy_basis(c, d, basis, FiMode::RotationOnly);
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }
}
