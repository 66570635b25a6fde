//! Partially polarized nuclei: each spin starts in |↑_X⟩ with probability p.
//!
//! The polarized fraction behaves as before with the signal scaled by
//! pol = 2p − 1, while the Bernoulli variance 4p(1 − p) only dephases.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::dipolar::{self, PhysicalConstants, SampleGeometry};
use crate::error::{ensure, Error, Result};
use crate::qfi::{Coherence, CoherenceDerivative, QfiBreakdown};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarizationParams {
    /// Probability of |↑_X⟩.
    pub p: f64,
}

impl PolarizationParams {
    pub fn new(p: f64) -> Result<Self> {
        let out = Self { p };
        out.validate()?;
        Ok(out)
    }

    pub fn from_pol(pol: f64) -> Result<Self> {
        Self::new(0.5 * (1.0 + pol))
    }

    pub fn validate(&self) -> Result<()> {
        ensure((0.0..=1.0).contains(&self.p), || format!("p = {} outside [0, 1]", self.p))
    }

    pub fn pol(&self) -> f64 {
        2.0 * self.p - 1.0
    }

    pub fn bernoulli_variance(&self) -> f64 {
        4.0 * self.p * (1.0 - self.p)
    }
}

/// Single-nucleus factor cos 2G + i·pol·sin 2G·cos θ in polar form.
pub fn coherence_pol(g: f64, params: PolarizationParams, theta: f64) -> Result<Coherence> {
    params.validate()?;
    let two_g = 2.0 * g;
    if two_g.abs() >= std::f64::consts::FRAC_PI_2 {
        return Err(Error::BranchOverflow(two_g.abs()));
    }
    let pol = params.pol();
    let weight = params.bernoulli_variance() + pol * pol * theta.sin().powi(2);
    Ok(Coherence {
        r: (1.0 - weight * two_g.sin().powi(2)).max(0.0).sqrt(),
        phi: (pol * theta.cos() * two_g.tan()).atan(),
    })
}

/// Weak-coupling ensemble coherence for τ ≪ τ_D:
/// Φ = 2·pol·γ_e⟨B⟩τ cos θ, r = exp(−2γ_e²B_rms²τ²[(1 − pol²) + pol² sin²θ]).
pub fn ensemble_coherence_pol(
    geom: &SampleGeometry,
    c: PhysicalConstants,
    params: PolarizationParams,
    tau: f64,
    theta: f64,
) -> Coherence {
    let pol = params.pol();
    let b = dipolar::b_rms_sq(geom, c);
    let m = dipolar::mean_field(geom, c);
    let s2 = theta.sin().powi(2);
    Coherence {
        r: (-2.0 * b * tau * tau * ((1.0 - pol * pol) + pol * pol * s2)).exp(),
        phi: 2.0 * pol * m * tau * theta.cos(),
    }
}

/// ∂/∂ω_N of [`ensemble_coherence_pol`] with θ = ω_N t.
pub fn ensemble_coherence_derivative_pol(
    geom: &SampleGeometry,
    c: PhysicalConstants,
    params: PolarizationParams,
    tau: f64,
    t: f64,
    theta: f64,
) -> CoherenceDerivative {
    let pol = params.pol();
    let b = dipolar::b_rms_sq(geom, c);
    let m = dipolar::mean_field(geom, c);
    let (s, co) = theta.sin_cos();
    let r = ensemble_coherence_pol(geom, c, params, tau, theta).r;
    CoherenceDerivative {
        dr_domega: -4.0 * b * tau * tau * pol * pol * s * co * r * t,
        dphi_domega: -2.0 * pol * m * tau * s * t,
    }
}

/// Bures QFI of the ensemble coherence in the instantaneous regime.
pub fn qfi_pol(
    geom: &SampleGeometry,
    c: PhysicalConstants,
    params: PolarizationParams,
    tau: f64,
    t: f64,
    theta: f64,
) -> Result<QfiBreakdown> {
    geom.validate()?;
    params.validate()?;
    ensure(tau > 0.0 && tau.is_finite(), || format!("tau {tau} must be positive"))?;
    let pol = params.pol();
    let b = dipolar::b_rms_sq(geom, c);
    let m = dipolar::mean_field(geom, c);
    let (s, co) = theta.sin_cos();
    let exponent = 4.0 * b * tau * tau * ((1.0 - pol * pol) + pol * pol * s * s);
    let r2 = (-exponent).exp();
    let t2 = t * t;
    let i_phi = 4.0 * t2 * tau * tau * s * s * pol * pol * m * m * r2;
    let i_r = if exponent == 0.0 || s * co == 0.0 {
        0.0
    } else {
        16.0 * t2 * b * b * tau.powi(4) * pol.powi(4) * s * s * co * co * r2 / -(-exponent).exp_m1()
    };
    Ok(QfiBreakdown::new(i_r, i_phi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarizationStrategies {
    /// τ₁ = 1/(2γ_eB_rms), used with sin²θ = 1.
    pub tau1: f64,
    /// τ₂ = 1/(2γ_eB_rms·|pol sin θ|); infinite when pol sin θ = 0.
    pub tau2: f64,
    pub qfi1: f64,
    pub qfi2: f64,
}

/// The two strong-back-action operating points and their signal QFIs.
pub fn strategy_times(
    geom: &SampleGeometry,
    c: PhysicalConstants,
    params: PolarizationParams,
    theta: f64,
    t: f64,
) -> Result<PolarizationStrategies> {
    geom.validate()?;
    params.validate()?;
    let pol = params.pol();
    let b = dipolar::b_rms_sq(geom, c);
    let m = dipolar::mean_field(geom, c);
    let ratio = m * m / b;
    let tau1 = 1.0 / (2.0 * b.sqrt());
    let ps = (pol * theta.sin()).abs();
    let (tau2, qfi2) = if ps == 0.0 {
        (f64::INFINITY, 0.0)
    } else {
        let tau2 = tau1 / ps;
        let penalty = (-4.0 * b * tau2 * tau2 * (1.0 - pol * pol)).exp();
        (tau2, t * t / E * ratio * penalty)
    };
    Ok(PolarizationStrategies { tau1, tau2, qfi1: t * t / E * pol * pol * ratio, qfi2 })
}
