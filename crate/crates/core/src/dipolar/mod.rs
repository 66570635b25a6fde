//! Dipolar geometry: sample description, field moments and the integrals behind them.
//!
//! Lengths are nm, times μs and every field is carried as a coupling frequency
//! γ_e·B in rad/μs, with J in rad/μs·nm³.

pub mod harmonics;
pub mod integrals;
pub mod wigner;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
pub use harmonics::{coupling_g, dd_terms, y2, DipolarTerms, DipoleCoefficients, Direction};
pub use integrals::{dipolar_integral, IntegralMethod, IntegralSpec};
pub use wigner::wigner_d2;

/// Proton density of water used throughout, nm⁻³.
pub const WATER_DENSITY: f64 = 33.0;
/// Self-diffusion of water, nm²/μs.
pub const WATER_DIFFUSION: f64 = 2.3e3;
/// arccos(1/√3) rounded as usually quoted, 54.7°.
pub const MAGIC_ANGLE: f64 = 54.7 * PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Dipolar coupling constant μ₀γ_eγ_N/4π, rad/μs·nm³.
    pub j: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self { j: 0.49 }
    }
}

impl PhysicalConstants {
    pub fn validate(&self) -> Result<()> {
        ensure(self.j > 0.0 && self.j.is_finite(), || format!("J = {} must be positive", self.j))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleGeometry {
    /// NV depth below the surface, nm.
    pub depth: f64,
    /// Tilt of the NV axis from the surface normal, rad.
    pub alpha: f64,
    /// Nuclear number density, nm⁻³.
    pub density: f64,
    /// Diffusion coefficient, nm²/μs.
    pub diffusion: f64,
    /// Sample volume, nm³.
    pub volume: Option<f64>,
}

impl SampleGeometry {
    pub fn new(depth: f64, alpha: f64, density: f64, diffusion: f64, volume: Option<f64>) -> Result<Self> {
        let g = Self { depth, alpha, density, diffusion, volume };
        g.validate()?;
        Ok(g)
    }

    /// Water at the magic-angle tilt.
    pub fn water(depth: f64) -> Self {
        Self { depth, alpha: MAGIC_ANGLE, density: WATER_DENSITY, diffusion: WATER_DIFFUSION, volume: None }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.depth > 0.0 && self.depth.is_finite(), || format!("depth {} must be positive", self.depth))?;
        ensure(self.density > 0.0 && self.density.is_finite(), || {
            format!("density {} must be positive", self.density)
        })?;
        ensure(self.diffusion >= 0.0 && self.diffusion.is_finite(), || {
            format!("diffusion {} must be non-negative", self.diffusion)
        })?;
        ensure(self.alpha.is_finite(), || "tilt must be finite".into())?;
        if let Some(v) = self.volume {
            ensure(v > 0.0 && v.is_finite(), || format!("volume {v} must be positive"))?;
        }
        Ok(())
    }

    /// d²/D, or None without diffusion.
    pub fn tau_d(&self) -> Option<f64> {
        (self.diffusion > 0.0).then(|| self.depth * self.depth / self.diffusion)
    }

    /// V^{2/3}/D, or None without diffusion or volume.
    pub fn tau_v(&self) -> Option<f64> {
        match self.volume {
            Some(v) if self.diffusion > 0.0 => Some(v.powf(2.0 / 3.0) / self.diffusion),
            _ => None,
        }
    }

    pub fn volume_or_err(&self) -> Result<f64> {
        self.volume.ok_or(Error::MissingVolume)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldMoments {
    pub mean_field: f64,
    pub b_rms_sq: f64,
    pub f2: f64,
    pub udq_sq: f64,
    pub udc_sq: f64,
    pub third_moment: f64,
}

/// Angular factor of the second moment: π(35 − 3 cos 4α)/256.
pub fn f2(alpha: f64) -> f64 {
    PI * (35.0 - 3.0 * (4.0 * alpha).cos()) / 256.0
}

/// Signed mean field −πnJ sin 2α.
pub fn mean_field(geom: &SampleGeometry, c: PhysicalConstants) -> f64 {
    -PI * geom.density * c.j * (2.0 * geom.alpha).sin()
}

/// Mean field from n J (I₁^{(1)} + I₁^{(−1)}).
pub fn mean_field_from_integrals(
    geom: &SampleGeometry,
    c: PhysicalConstants,
    method: IntegralMethod,
) -> Result<f64> {
    let i = |m: i32| dipolar_integral(&IntegralSpec::new(&[m], *geom), method).map(|v| v.re);
    Ok(geom.density * c.j * (i(1)? + i(-1)?))
}

/// Second moment n J² f₂ / d³.
pub fn b_rms_sq(geom: &SampleGeometry, c: PhysicalConstants) -> f64 {
    geom.density * c.j * c.j * f2(geom.alpha) / geom.depth.powi(3)
}

/// Second moment from 2nJ²(I₂^{(1,1)} + I₂^{(−1,1)}).
pub fn b_rms_sq_from_integrals(
    geom: &SampleGeometry,
    c: PhysicalConstants,
    method: IntegralMethod,
) -> Result<f64> {
    let i = |ms: &[i32]| dipolar_integral(&IntegralSpec::new(ms, *geom), method).map(|v| v.re);
    Ok(2.0 * geom.density * c.j * c.j * (i(&[1, 1])? + i(&[-1, 1])?))
}

/// Closed forms of I₂^{(1,1)} and I₂^{(−1,1)} at tilt α, in units of d⁻³.
pub fn i2_closed_forms(alpha: f64) -> (f64, f64) {
    let (c2, c4) = ((2.0 * alpha).cos(), (4.0 * alpha).cos());
    let same = -3.0 * PI * (4.0 * c2 + c4 - 5.0) / 1024.0;
    let opposite = PI * (12.0 * c2 - 3.0 * c4 + 55.0) / 1024.0;
    (same, opposite)
}

/// Quantum (oscillating) and classical parts of the undriven second moment.
pub fn b_rms_undriven(geom: &SampleGeometry, c: PhysicalConstants) -> (f64, f64) {
    let (same, opposite) = i2_closed_forms(geom.alpha);
    let scale = geom.density * c.j * c.j / (PI * PI * geom.depth.powi(3));
    (8.0 * scale * same, 4.0 * scale * (opposite - same))
}

/// As [`b_rms_undriven`] but with the I₂ values taken from [`dipolar_integral`].
pub fn b_rms_undriven_from_integrals(
    geom: &SampleGeometry,
    c: PhysicalConstants,
    method: IntegralMethod,
) -> Result<(f64, f64)> {
    let i = |ms: &[i32]| dipolar_integral(&IntegralSpec::new(ms, *geom), method).map(|v| v.re);
    let (same, opposite) = (i(&[1, 1])?, i(&[1, -1])?);
    let scale = geom.density * c.j * c.j / (PI * PI);
    Ok((8.0 * scale * same, 4.0 * scale * (opposite - same)))
}

/// Third moment n∫g³ of the S_zI_x coupling: −πnJ³(270 sin 2α − 6 sin 6α)/(4004 d⁶).
pub fn third_moment_szix(geom: &SampleGeometry, c: PhysicalConstants) -> f64 {
    let a = geom.alpha;
    -PI * geom.density
        * c.j.powi(3)
        * (270.0 * (2.0 * a).sin() - 6.0 * (6.0 * a).sin())
        / (4004.0 * geom.depth.powi(6))
}

/// Third moment as n J³ Σ I₃^{(±1,±1,±1)} over all eight sign patterns.
pub fn third_moment_from_integrals(
    geom: &SampleGeometry,
    c: PhysicalConstants,
    method: IntegralMethod,
) -> Result<f64> {
    let mut sum = 0.0;
    for pattern in 0..8u32 {
        let ms: Vec<i32> = (0..3).map(|b| if pattern >> b & 1 == 1 { 1 } else { -1 }).collect();
        sum += dipolar_integral(&IntegralSpec::new(&ms, *geom), method)?.re;
    }
    Ok(geom.density * c.j.powi(3) * sum)
}

pub fn field_moments(geom: &SampleGeometry, c: PhysicalConstants) -> FieldMoments {
    let (udq_sq, udc_sq) = b_rms_undriven(geom, c);
    FieldMoments {
        mean_field: mean_field(geom, c),
        b_rms_sq: b_rms_sq(geom, c),
        f2: f2(geom.alpha),
        udq_sq,
        udc_sq,
        third_moment: third_moment_szix(geom, c),
    }
}
