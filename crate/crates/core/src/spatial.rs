//! Driven nuclei with position-dependent coupling: signal, regime-dependent
//! decay, information content and the critical depth.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::dipolar::{self, PhysicalConstants, SampleGeometry};
use crate::error::{ensure, Error, Result};
use crate::qfi::{Coherence, CoherenceDerivative, QfiBreakdown};

/// Instantaneous regime applies up to this fraction of τ_D.
pub const INSTANTANEOUS_FRACTION: f64 = 0.1;
/// Effective-count constant in the finite-volume onset τ ≥ V/(c·D·d).
pub const FINITE_VOLUME_CONSTANT: f64 = 17.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayRegime {
    /// τ ≪ τ_D: nuclei frozen during the interaction window.
    Instantaneous,
    /// τ ≫ τ_D: motional narrowing, exponent linear in τ.
    DiffusionLimited,
    /// τ ≫ τ_V: every nucleus samples the whole volume.
    FiniteVolume,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegimeChoice {
    #[default]
    Auto,
    Fixed(DecayRegime),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialProtocolParams {
    pub geometry: SampleGeometry,
    pub tau: f64,
    pub t: f64,
    pub omega_n: f64,
    pub regime: RegimeChoice,
    pub constants: PhysicalConstants,
}

impl SpatialProtocolParams {
    pub fn new(geometry: SampleGeometry, tau: f64, t: f64, omega_n: f64) -> Self {
        Self { geometry, tau, t, omega_n, regime: RegimeChoice::Auto, constants: PhysicalConstants::default() }
    }

    pub fn with_regime(mut self, regime: DecayRegime) -> Self {
        self.regime = RegimeChoice::Fixed(regime);
        self
    }

    pub fn theta(&self) -> f64 {
        self.omega_n * self.t
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.constants.validate()?;
        ensure(self.tau >= 0.0 && self.t >= 0.0, || "tau and t must be non-negative".into())?;
        ensure(self.omega_n.is_finite(), || "omega_n must be finite".into())
    }

    /// The regime in force, resolving `Auto` from τ, τ_D and the volume.
    pub fn resolved_regime(&self) -> DecayRegime {
        match self.regime {
            RegimeChoice::Fixed(r) => r,
            RegimeChoice::Auto => auto_regime(&self.geometry, self.tau),
        }
    }
}

pub fn auto_regime(geom: &SampleGeometry, tau: f64) -> DecayRegime {
    let Some(tau_d) = geom.tau_d() else {
        return DecayRegime::Instantaneous;
    };
    if let Some(v) = geom.volume {
        if tau >= v / (FINITE_VOLUME_CONSTANT * geom.diffusion * geom.depth) {
            return DecayRegime::FiniteVolume;
        }
    }
    if tau <= INSTANTANEOUS_FRACTION * tau_d {
        DecayRegime::Instantaneous
    } else {
        DecayRegime::DiffusionLimited
    }
}

/// Φ = 2 γ_e⟨B⟩ τ cos θ.
pub fn signal_phase(p: &SpatialProtocolParams) -> f64 {
    2.0 * dipolar::mean_field(&p.geometry, p.constants) * p.tau * p.theta().cos()
}

/// κ in r = exp(−κ sin²θ) for the active regime.
pub fn decay_rate(p: &SpatialProtocolParams) -> Result<f64> {
    let b = dipolar::b_rms_sq(&p.geometry, p.constants);
    Ok(match p.resolved_regime() {
        DecayRegime::Instantaneous => 2.0 * b * p.tau * p.tau,
        DecayRegime::DiffusionLimited => {
            let tau_d = p.geometry.tau_d().ok_or_else(|| {
                Error::InvalidParameter("diffusion-limited decay needs D > 0".into())
            })?;
            2.0 * b * p.tau * tau_d
        }
        DecayRegime::FiniteVolume => {
            let v = p.geometry.volume_or_err()?;
            let m = dipolar::mean_field(&p.geometry, p.constants);
            2.0 * m * m * p.tau * p.tau / (p.geometry.density * v)
        }
    })
}

pub fn decay(p: &SpatialProtocolParams) -> Result<f64> {
    Ok((-decay_rate(p)? * p.theta().sin().powi(2)).exp())
}

pub fn coherence(p: &SpatialProtocolParams) -> Result<Coherence> {
    Ok(Coherence { r: decay(p)?, phi: signal_phase(p) })
}

/// Analytic dr/dω_N and dΦ/dω_N.
pub fn coherence_derivative(p: &SpatialProtocolParams) -> Result<CoherenceDerivative> {
    let kappa = decay_rate(p)?;
    let (s, c) = p.theta().sin_cos();
    let r = (-kappa * s * s).exp();
    let m = dipolar::mean_field(&p.geometry, p.constants);
    Ok(CoherenceDerivative {
        dr_domega: -2.0 * kappa * s * c * r * p.t,
        dphi_domega: -2.0 * m * p.tau * s * p.t,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialQfi {
    pub breakdown: QfiBreakdown,
    pub regime: DecayRegime,
    /// i_r / i_phi.
    pub noise_to_signal: f64,
    /// False when B_rms ≥ |⟨B⟩| and the second-moment truncation is unjustified.
    pub expansion_valid: bool,
}

pub fn qfi_spatial(p: &SpatialProtocolParams) -> Result<SpatialQfi> {
    p.validate()?;
    let kappa = decay_rate(p)?;
    let (s, c) = p.theta().sin_cos();
    let m = dipolar::mean_field(&p.geometry, p.constants);
    let b = dipolar::b_rms_sq(&p.geometry, p.constants);
    let t2 = p.t * p.t;
    let r2 = (-2.0 * kappa * s * s).exp();
    let i_phi = t2 * r2 * 4.0 * m * m * p.tau * p.tau * s * s;
    // (dr)²/(1 − r²) with s²/(1 − r²) evaluated through expm1
    let i_r = if s == 0.0 || kappa == 0.0 {
        0.0
    } else {
        t2 * 4.0 * kappa * kappa * c * c * r2 * s * s / -(-2.0 * kappa * s * s).exp_m1()
    };
    let noise_to_signal = if i_phi > 0.0 { i_r / i_phi } else { f64::INFINITY };
    Ok(SpatialQfi {
        breakdown: QfiBreakdown::new(i_r, i_phi),
        regime: p.resolved_regime(),
        noise_to_signal,
        expansion_valid: b.sqrt() < m.abs(),
    })
}

/// θ maximising the signal term: sin²θ = 1/(2κ), clamped to π/2.
pub fn optimal_theta_spatial(p: &SpatialProtocolParams) -> Result<f64> {
    let kappa = decay_rate(p)?;
    let target = 1.0 / (2.0 * kappa);
    Ok(if target >= 1.0 { FRAC_PI_2 } else { target.sqrt().asin() })
}

/// Depth at which pol·γ_eB_rms·T₂ = 1, from the d^{−3/2} scaling of B_rms.
pub fn critical_depth(
    geom: &SampleGeometry,
    c: PhysicalConstants,
    pol: f64,
    t2_nv: f64,
) -> Result<f64> {
    ensure(pol > 0.0 && pol <= 1.0, || format!("polarization {pol} outside (0, 1]"))?;
    ensure(t2_nv > 0.0, || format!("T2 {t2_nv} must be positive"))?;
    geom.validate()?;
    let b_ref = dipolar::b_rms_sq(geom, c).sqrt();
    Ok(geom.depth * (pol * b_ref * t2_nv).powf(2.0 / 3.0))
}

/// ⟨B⟩²/(B_rms² n d³) = π² sin²2α / f₂, the effective nuclear count per d³.
pub fn effective_count_factor(alpha: f64) -> f64 {
    PI * PI * (2.0 * alpha).sin().powi(2) / dipolar::f2(alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dipolar::MAGIC_ANGLE;
    use crate::qfi;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::E;

    fn water(d: f64) -> SampleGeometry {
        SampleGeometry::water(d)
    }

    #[test]
    fn signal_examples() {
        let untilted = SampleGeometry { alpha: 0.0, ..water(10.0) };
        assert_eq!(signal_phase(&SpatialProtocolParams::new(untilted, 1.0, 1.0, 0.3)), 0.0);
        let p = SpatialProtocolParams::new(water(10.0), 1.0, 1.0, FRAC_PI_2);
        assert!(signal_phase(&p).abs() < 1e-12);
        let p = SpatialProtocolParams::new(water(17.0), 1.0, 1.0, 0.0);
        assert!((signal_phase(&p).abs() - 96.0).abs() < 1.0);
    }

    #[test]
    fn decay_examples() {
        let g = water(10.0);
        let p = SpatialProtocolParams::new(g, 0.01, 1.0, 0.0).with_regime(DecayRegime::Instantaneous);
        assert_eq!(decay(&p).unwrap(), 1.0);
        let tau_d = g.tau_d().unwrap();
        let at = |regime| {
            decay(&SpatialProtocolParams::new(g, tau_d, 1.0, 0.8).with_regime(regime)).unwrap()
        };
        assert_eq!(at(DecayRegime::Instantaneous), at(DecayRegime::DiffusionLimited));
        let fv = SpatialProtocolParams::new(g, 1.0, 1.0, 0.8).with_regime(DecayRegime::FiniteVolume);
        assert_eq!(decay(&fv), Err(Error::MissingVolume));
    }

    #[test]
    fn auto_regime_thresholds() {
        let g = SampleGeometry { volume: Some(1e9), ..water(10.0) };
        let tau_d = g.tau_d().unwrap();
        assert_eq!(auto_regime(&g, 0.05 * tau_d), DecayRegime::Instantaneous);
        assert_eq!(auto_regime(&g, 2.0 * tau_d), DecayRegime::DiffusionLimited);
        let onset = 1e9 / (17.5 * g.diffusion * g.depth);
        assert_eq!(auto_regime(&g, onset), DecayRegime::FiniteVolume);
        let frozen = SampleGeometry { diffusion: 0.0, ..g };
        assert_eq!(auto_regime(&frozen, 1e6), DecayRegime::Instantaneous);
    }

    #[test]
    fn weak_back_action_limit() {
        let g = water(10.0);
        let p = SpatialProtocolParams::new(g, 0.5, 2.0, FRAC_PI_2 / 2.0).with_regime(DecayRegime::Instantaneous);
        let q = qfi_spatial(&p).unwrap();
        let m = dipolar::mean_field(&g, p.constants);
        let kappa = decay_rate(&p).unwrap();
        let expected = 4.0 * m * m * 0.25 * 4.0 * (-2.0 * kappa).exp();
        assert_relative_eq!(q.breakdown.i_phi, expected, max_relative = 1e-12);
        assert!(q.expansion_valid);
    }

    #[test]
    fn strong_back_action_optimum() {
        let g = water(3.0);
        let b = dipolar::b_rms_sq(&g, PhysicalConstants::default());
        let m = dipolar::mean_field(&g, PhysicalConstants::default());
        let tau = 30.0;
        let base = SpatialProtocolParams::new(g, tau, 1.0, 0.0).with_regime(DecayRegime::Instantaneous);
        let theta = optimal_theta_spatial(&base).unwrap();
        assert_relative_eq!(theta.sin().powi(2), 1.0 / (4.0 * b * tau * tau), max_relative = 1e-12);
        let q = qfi_spatial(&SpatialProtocolParams { omega_n: theta, ..base }).unwrap();
        assert_relative_eq!(q.breakdown.i_phi, m * m / (E * b), max_relative = 1e-12);
        let n_eff = effective_count_factor(g.alpha) * g.density * g.depth.powi(3) / E;
        assert_relative_eq!(q.breakdown.i_phi, n_eff, max_relative = 1e-12);

        let grid_best = (1..=1571)
            .map(|k| k as f64 * 1e-3)
            .max_by(|a, b| {
                let at = |th: f64| qfi_spatial(&SpatialProtocolParams { omega_n: th, ..base }).unwrap().breakdown.total;
                at(*a).total_cmp(&at(*b))
            })
            .unwrap();
        assert!((grid_best - theta).abs() < 2e-3, "{grid_best} vs {theta}");
    }

    #[test]
    fn long_time_optimum() {
        let g = water(5.0);
        let tau_d = g.tau_d().unwrap();
        let tau = 1e4;
        assert!(tau > 100.0 * tau_d);
        let c = PhysicalConstants::default();
        let (b, m) = (dipolar::b_rms_sq(&g, c), dipolar::mean_field(&g, c));
        let base = SpatialProtocolParams::new(g, tau, 1.0, 0.0).with_regime(DecayRegime::DiffusionLimited);
        let theta = optimal_theta_spatial(&base).unwrap();
        let q = qfi_spatial(&SpatialProtocolParams { omega_n: theta, ..base }).unwrap();
        assert_relative_eq!(q.breakdown.i_phi, m * m / (E * b) * tau / tau_d, max_relative = 1e-12);
    }

    #[test]
    fn finite_volume_optimum_is_n_over_e() {
        let v = 1e6;
        let g = SampleGeometry { volume: Some(v), ..water(10.0) };
        let base = SpatialProtocolParams::new(g, 100.0, 1.5, 0.0).with_regime(DecayRegime::FiniteVolume);
        let theta = optimal_theta_spatial(&base).unwrap();
        let q = qfi_spatial(&SpatialProtocolParams { omega_n: theta / 1.5, ..base }).unwrap();
        assert_relative_eq!(q.breakdown.i_phi, g.density * v / E * 1.5 * 1.5, max_relative = 1e-12);
    }

    #[test]
    fn qfi_matches_bures() {
        let g = SampleGeometry { volume: Some(1e7), ..water(8.0) };
        for regime in [DecayRegime::Instantaneous, DecayRegime::DiffusionLimited, DecayRegime::FiniteVolume] {
            let p = SpatialProtocolParams::new(g, 3.0, 1.2, 0.4).with_regime(regime);
            let q = qfi_spatial(&p).unwrap().breakdown;
            let b = qfi::bures_qfi(coherence(&p).unwrap(), coherence_derivative(&p).unwrap()).unwrap();
            assert_relative_eq!(q.i_phi, b.i_phi, max_relative = 1e-12);
            assert_relative_eq!(q.i_r, b.i_r, max_relative = 1e-9);
        }
    }

    #[test]
    fn critical_depth_values() {
        let c = PhysicalConstants::default();
        let g = water(10.0);
        let full = critical_depth(&g, c, 1.0, 1000.0).unwrap();
        assert!(((full - 140.0) / 140.0).abs() < 0.15, "{full}");
        let low = critical_depth(&g, c, 0.01, 1000.0).unwrap();
        assert!(((low - 6.5) / 6.5).abs() < 0.15, "{low}");
        assert_relative_eq!(low / full, 0.01f64.powf(2.0 / 3.0), max_relative = 1e-12);
        // self-consistency: pol γ_e B_rms(d_c) T₂ = 1
        let at_dc = dipolar::b_rms_sq(&SampleGeometry { depth: full, ..g }, c).sqrt() * 1000.0;
        assert_relative_eq!(at_dc, 1.0, max_relative = 1e-12);
        assert!(critical_depth(&g, c, 0.0, 1.0).is_err());
    }

    #[test]
    fn effective_count_constant() {
        let k = effective_count_factor(MAGIC_ANGLE);
        assert!((k - 19.1).abs() < 0.1, "{k}");
    }

    proptest! {
        #[test]
        fn decay_monotone_in_tau(tau in 0.01..100.0f64, dt in 0.0..10.0f64, theta in 0.0..3.1f64, which in 0usize..3) {
            let regime = [DecayRegime::Instantaneous, DecayRegime::DiffusionLimited, DecayRegime::FiniteVolume][which];
            let g = SampleGeometry { volume: Some(1e6), ..water(10.0) };
            let a = decay(&SpatialProtocolParams::new(g, tau, 1.0, theta).with_regime(regime)).unwrap();
            let b = decay(&SpatialProtocolParams::new(g, tau + dt, 1.0, theta).with_regime(regime)).unwrap();
            prop_assert!(b <= a);
        }

        #[test]
        fn noise_ratio_bounded(frac in 0.001..0.1f64, x in 0.0..1.0f64, d in 3.0..30.0f64) {
            // Instantaneous regime, θ between the optimum and π/2.
            let g = water(d);
            let c = PhysicalConstants::default();
            let (b, m) = (dipolar::b_rms_sq(&g, c), dipolar::mean_field(&g, c));
            let tau_d = g.tau_d().unwrap();
            let base = SpatialProtocolParams::new(g, frac * tau_d, 1.0, 0.0);
            prop_assert_eq!(base.resolved_regime(), DecayRegime::Instantaneous);
            let opt = optimal_theta_spatial(&base).unwrap();
            let p = SpatialProtocolParams { omega_n: opt + x * (FRAC_PI_2 - opt), ..base };
            let q = qfi_spatial(&p).unwrap();
            let bound = b / (m * m) * (4.0 * b * tau_d * tau_d).max(1.0);
            prop_assert!(q.noise_to_signal <= bound * (1.0 + 1e-9), "{} > {}", q.noise_to_signal, bound);
        }

        #[test]
        fn derivatives_match_finite_differences(tau in 0.1..20.0f64, theta in 0.05..3.0f64, which in 0usize..3) {
            let regime = [DecayRegime::Instantaneous, DecayRegime::DiffusionLimited, DecayRegime::FiniteVolume][which];
            let g = SampleGeometry { volume: Some(1e6), ..water(10.0) };
            let p = SpatialProtocolParams::new(g, tau, 1.0, theta).with_regime(regime);
            let h = 1e-6;
            let at = |dw: f64| coherence(&SpatialProtocolParams { omega_n: p.omega_n + dw, ..p }).unwrap();
            let (hi, lo) = (at(h), at(-h));
            let an = coherence_derivative(&p).unwrap();
            let fd_r = (hi.r - lo.r) / (2.0 * h);
            let fd_phi = (hi.phi - lo.phi) / (2.0 * h);
            prop_assert!((fd_r - an.dr_domega).abs() <= 1e-5 * an.dr_domega.abs().max(1e-4));
            prop_assert!((fd_phi - an.dphi_domega).abs() <= 1e-5 * an.dphi_domega.abs().max(1e-4));
        }
    }
}
