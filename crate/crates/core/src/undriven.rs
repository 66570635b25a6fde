//! Undriven nuclei probed through a π-pulse train.
//!
//! The sensor is flipped every τ_p, so it sees the nuclear field through the
//! ±1 square wave h(t) = sgn sin(ω_p t) with ω_p = π/τ_p. Only the harmonic of
//! h closest to ω_N survives the rotating-wave approximation, which scales
//! the accumulated mean-field phase by 2/π and splits the instantaneous
//! variance into an oscillating (entangling) and a constant (classical
//! dephasing) part.

use std::f64::consts::{E, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dipolar::{self, PhysicalConstants, SampleGeometry};
use crate::error::{ensure, Error, Result};
use crate::quadrature::Rule;

/// Highest odd harmonic kept by [`filter_overlap_s2`]. The neglected weight
/// Σ_{|k|>K} |a_k|² is below 4/(π²K).
pub const DEFAULT_MAX_HARMONIC: u32 = 999;

/// Gauss-Legendre order on each sub-interval of a harmonic window.
const WINDOW_ORDER: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Parity {
    Even,
    #[default]
    Odd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseTrain {
    /// Spacing between π pulses, μs.
    pub tau_p: f64,
    /// Parity of the pulse count; only affects a₀.
    pub parity: Parity,
    /// δω = ω_N − ω_p, rad/μs.
    pub delta_omega: f64,
}

impl PulseTrain {
    pub fn new(tau_p: f64, delta_omega: f64) -> Self {
        Self { tau_p, parity: Parity::Odd, delta_omega }
    }

    pub fn omega_p(&self) -> f64 {
        PI / self.tau_p
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.tau_p > 0.0 && self.tau_p.is_finite(), || {
            format!("pulse spacing {} must be positive", self.tau_p)
        })?;
        ensure(self.delta_omega.is_finite(), || "detuning must be finite".into())
    }

    /// True when |δω| < ω_p/10, where dropping the other harmonics is safe.
    pub fn detuning_is_small(&self) -> bool {
        self.delta_omega.abs() < 0.1 * self.omega_p()
    }
}

/// Fourier coefficient a_k of h(t) = Σ a_k e^{ikω_p t}.
pub fn pulse_fourier_coefficient(k: i64, parity: Parity) -> Complex64 {
    match k {
        0 => match parity {
            Parity::Odd => Complex64::new(0.0, 0.0),
            Parity::Even => Complex64::new(1.0, 0.0),
        },
        k if k % 2 == 0 => Complex64::new(0.0, 0.0),
        k => Complex64::new(0.0, -2.0 / (PI * k as f64)),
    }
}

/// Accumulated phase (2/π)·γ_e⟨B⟩·τ·sin(δω t).
pub fn signal_undriven(
    geom: &SampleGeometry,
    c: PhysicalConstants,
    pulse: &PulseTrain,
    tau: f64,
    t: f64,
) -> f64 {
    2.0 / PI * dipolar::mean_field(geom, c) * tau * (pulse.delta_omega * t).sin()
}

/// γ_e²C₂⁰(t) = udq·cos²(δω t) + udc.
pub fn c2_instant(geom: &SampleGeometry, c: PhysicalConstants, delta_omega: f64, t: f64) -> f64 {
    let (udq, udc) = dipolar::b_rms_undriven(geom, c);
    udq * (delta_omega * t).cos().powi(2) + udc
}

/// The same quantity written with cos(2δω t): ½udq·cos(2δω t) + ½udq + udc.
pub fn c2_instant_cos2(geom: &SampleGeometry, c: PhysicalConstants, delta_omega: f64, t: f64) -> f64 {
    let (udq, udc) = dipolar::b_rms_undriven(geom, c);
    0.5 * udq * (2.0 * delta_omega * t).cos() + 0.5 * udq + udc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UndrivenStrategy {
    /// Tune cos²(δω t) so the entangling part of the decay is order one.
    PeakEntanglement,
    /// Sit on cos²(δω t) = 1 and pick τ = 1/√C₂⁰(0).
    PeakSignal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UndrivenQfi {
    pub value: f64,
    /// Interaction time the strategy operates at, μs.
    pub tau: f64,
    /// Required cos²(δω t).
    pub cos2: f64,
    /// Smallest δω t ≥ 0 with that cos².
    pub detuning_phase: f64,
    /// False when B_rms ≥ |⟨B⟩| for the driven moments.
    pub expansion_valid: bool,
}

/// Strategy QFI from explicit moments: mean field `mean`, oscillating part
/// `udq` and constant part `udc` of γ_e²C₂⁰.
///
/// PeakEntanglement uses the given τ; PeakSignal chooses its own.
pub fn qfi_undriven_from_moments(
    mean: f64,
    udq: f64,
    udc: f64,
    tau: f64,
    t: f64,
    strategy: UndrivenStrategy,
) -> Result<UndrivenQfi> {
    ensure(udq + udc > 0.0, || "instantaneous variance must be positive".into())?;
    let (value, tau, cos2) = match strategy {
        UndrivenStrategy::PeakSignal => {
            let c0 = udq + udc;
            // (2/e)(⟨B⟩/B_rms)² with B_rms² = π² C₂⁰(0)/2
            (4.0 / (E * PI * PI) * mean * mean * t * t / c0, 1.0 / c0.sqrt(), 1.0)
        }
        UndrivenStrategy::PeakEntanglement => {
            ensure(tau > 0.0 && tau.is_finite(), || format!("tau {tau} must be positive"))?;
            if udq == 0.0 {
                return Err(Error::StrategyInfeasible(
                    "no oscillating decay component at this tilt".into(),
                ));
            }
            let cos2 = 1.0 / (udq.abs() * tau * tau);
            if cos2 > 1.0 {
                return Err(Error::StrategyInfeasible(format!(
                    "required cos²(δωt) = {cos2} exceeds 1; back-action is too weak at tau = {tau}"
                )));
            }
            let value = 4.0 / (PI * PI) * mean * mean * t * t / udq.abs()
                * (-udq.signum() - udc * tau * tau).exp();
            (value, tau, cos2)
        }
    };
    Ok(UndrivenQfi {
        value,
        tau,
        cos2,
        detuning_phase: cos2.sqrt().acos(),
        expansion_valid: true,
    })
}

pub fn qfi_undriven(
    geom: &SampleGeometry,
    c: PhysicalConstants,
    pulse: &PulseTrain,
    tau: f64,
    t: f64,
    strategy: UndrivenStrategy,
) -> Result<UndrivenQfi> {
    geom.validate()?;
    pulse.validate()?;
    let (udq, udc) = dipolar::b_rms_undriven(geom, c);
    let mean = dipolar::mean_field(geom, c);
    let mut out = qfi_undriven_from_moments(mean, udq, udc, tau, t, strategy)?;
    out.expansion_valid = dipolar::b_rms_sq(geom, c).sqrt() < mean.abs();
    Ok(out)
}

/// Power spectral density S(ω) of γ_e·B, with S(ω) = ∫C(t)e^{−iωt}dt.
pub trait SpectrumFunction: Sync {
    fn density(&self, omega: f64) -> f64;

    /// Interval outside which S vanishes, if known.
    fn support(&self) -> Option<(f64, f64)> {
        None
    }
}

impl<F: Fn(f64) -> f64 + Sync> SpectrumFunction for F {
    fn density(&self, omega: f64) -> f64 {
        self(omega)
    }
}

/// S(ω) = 2Γσ²/(Γ² + ω²), the transform of σ²e^{−Γ|t|}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lorentzian {
    pub variance: f64,
    pub rate: f64,
}

impl SpectrumFunction for Lorentzian {
    fn density(&self, omega: f64) -> f64 {
        2.0 * self.rate * self.variance / (self.rate * self.rate + omega * omega)
    }
}

/// A spectrum that is zero outside [lo, hi].
pub struct BandLimited<F> {
    pub f: F,
    pub lo: f64,
    pub hi: f64,
}

impl<F: Fn(f64) -> f64 + Sync> SpectrumFunction for BandLimited<F> {
    fn density(&self, omega: f64) -> f64 {
        if omega < self.lo || omega > self.hi {
            0.0
        } else {
            (self.f)(omega)
        }
    }

    fn support(&self) -> Option<(f64, f64)> {
        Some((self.lo, self.hi))
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// ∫₀^L e^{−iωt} dt.
fn segment(omega: f64, len: f64) -> Complex64 {
    Complex64::from_polar(len * sinc(0.5 * omega * len), -0.5 * omega * len)
}

/// H_τ(ω) = ∫₀^τ h(t) e^{−iωt} dt for the ±1 square wave starting at +1.
pub fn filter_transform(pulse: &PulseTrain, tau: f64, omega: f64) -> Complex64 {
    let tp = pulse.tau_p;
    let full = (tau / tp).floor();
    let m = full as u64;
    // Σ_{n<M} (−e^{−iωτ_p})ⁿ as a Dirichlet kernel in ψ = π − ωτ_p
    let psi = PI - omega * tp;
    let half = 0.5 * psi;
    let dirichlet = if half.sin().abs() < 1e-12 {
        full * (full * half).cos() / half.cos()
    } else {
        (full * half).sin() / half.sin()
    };
    let train = segment(omega, tp) * Complex64::from_polar(dirichlet, half * (full - 1.0));
    let rest = tau - full * tp;
    if rest <= 0.0 {
        return train;
    }
    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
    train + sign * Complex64::from_polar(1.0, -omega * full * tp) * segment(omega, rest)
}

/// |H_τ(ω)|²/τ; tends to 2π Σ|a_k|²δ(ω − kω_p) for τ ≫ τ_p.
pub fn filter_function(pulse: &PulseTrain, tau: f64, omega: f64) -> f64 {
    filter_transform(pulse, tau, omega).norm_sqr() / tau
}

/// s₂ = (τ/2π)∫|h_ω|² S(ω − δω − ω_p) dω with |h_ω|² = |H_τ(ω)|²/τ.
///
/// Equal to ∫∫h(t₁)h(t₂)C(t₁ − t₂)cos(Ω(t₁ − t₂)) over [0, τ]², Ω = δω + ω_p.
/// For τ ≫ τ_p and S smooth on the scale 1/τ it approaches
/// τ Σ_k |a_k|² S(kω_p − Ω) ≈ (4/π²) τ S(δω).
pub fn filter_overlap_s2(pulse: &PulseTrain, spectrum: &dyn SpectrumFunction, tau: f64) -> Result<f64> {
    filter_overlap_s2_with(pulse, spectrum, tau, DEFAULT_MAX_HARMONIC)
}

pub fn filter_overlap_s2_with(
    pulse: &PulseTrain,
    spectrum: &dyn SpectrumFunction,
    tau: f64,
    max_harmonic: u32,
) -> Result<f64> {
    pulse.validate()?;
    ensure(tau > 0.0 && tau.is_finite(), || format!("tau {tau} must be positive"))?;
    ensure(max_harmonic % 2 == 1, || "harmonic cutoff must be odd".into())?;
    let shift = pulse.delta_omega + pulse.omega_p();
    let wp = pulse.omega_p();
    let lobes = (tau / pulse.tau_p).ceil().max(1.0) as usize;

    let integrate = |lo: f64, hi: f64, pieces: usize| -> Result<f64> {
        let width = (hi - lo) / pieces as f64;
        let mut total = 0.0;
        for p in 0..pieces {
            let a = lo + p as f64 * width;
            let rule = Rule::gauss_legendre(WINDOW_ORDER, a, a + width)?;
            for (x, w) in rule.iter() {
                let s = spectrum.density(x - shift);
                if !(s.is_finite() && s >= 0.0) {
                    return Err(Error::NonIntegrableSpectrum(format!(
                        "S({}) = {s}",
                        x - shift
                    )));
                }
                total += w * filter_function(pulse, tau, x) * s;
            }
        }
        Ok(total)
    };

    let integral = if let Some((lo, hi)) = spectrum.support() {
        ensure(lo < hi && lo.is_finite() && hi.is_finite(), || {
            format!("support [{lo}, {hi}] is not a finite interval")
        })?;
        let (a, b) = (lo + shift, hi + shift);
        // resolve both the spectrum and the filter lobes
        let pieces = 256.max((4.0 * (b - a) * tau / (2.0 * PI)).ceil() as usize);
        integrate(a, b, pieces)?
    } else {
        let k_max = max_harmonic as i64;
        let windows: Vec<Result<f64>> = (-k_max..=k_max)
            .step_by(2)
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|k| {
                let centre = k as f64 * wp;
                integrate(centre - wp, centre + wp, 2 * lobes)
            })
            .collect();
        windows.into_iter().sum::<Result<f64>>()?
    };
    let value = tau * integral / (2.0 * PI);
    if !value.is_finite() {
        return Err(Error::NonIntegrableSpectrum("overlap integral diverged".into()));
    }
    Ok(value)
}

/// Short-time (τ ≪ τ_D) overlap with the correlations frozen at their
/// instantaneous values:
/// nJ²·¼[−I^{(−1,−1)}T₊² − I^{(1,1)}T₋² + I^{(−1,1)}|T₊|² + I^{(1,−1)}|T₋|²],
/// T± = ∫₀^τ h(t)e^{±iω_p t}dt.
pub fn filter_overlap_short_time(
    geom: &SampleGeometry,
    c: PhysicalConstants,
    pulse: &PulseTrain,
    tau: f64,
) -> Result<f64> {
    geom.validate()?;
    pulse.validate()?;
    ensure(tau > 0.0 && tau.is_finite(), || format!("tau {tau} must be positive"))?;
    let t_minus = filter_transform(pulse, tau, pulse.omega_p());
    let t_plus = t_minus.conj();
    let (same, opposite) = dipolar::i2_closed_forms(geom.alpha);
    let d3 = geom.depth.powi(3);
    let (same, opposite) = (same / d3, opposite / d3);
    let bracket = -same * t_plus * t_plus - same * t_minus * t_minus
        + opposite * t_plus.norm_sqr()
        + opposite * t_minus.norm_sqr();
    Ok(geom.density * c.j * c.j * 0.25 * bracket.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dipolar::MAGIC_ANGLE;
    use crate::spatial::{self, DecayRegime, SpatialProtocolParams};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const C: PhysicalConstants = PhysicalConstants { j: 0.49 };

    fn magic(depth: f64) -> SampleGeometry {
        SampleGeometry { alpha: MAGIC_ANGLE, ..SampleGeometry::water(depth) }
    }

    #[test]
    fn fourier_coefficients() {
        let a1 = pulse_fourier_coefficient(1, Parity::Odd);
        assert!((a1 - Complex64::new(0.0, -0.636_619_772_367_581_4)).norm() < 1e-15);
        assert_eq!(pulse_fourier_coefficient(2, Parity::Odd), Complex64::new(0.0, 0.0));
        assert_eq!(pulse_fourier_coefficient(0, Parity::Even), Complex64::new(1.0, 0.0));
        assert_eq!(pulse_fourier_coefficient(-3, Parity::Odd), -pulse_fourier_coefficient(3, Parity::Odd));
    }

    #[test]
    fn parseval_with_tail_bound() {
        for k_max in [11i64, 101, 1001] {
            let sum: f64 = (-k_max..=k_max).map(|k| pulse_fourier_coefficient(k, Parity::Odd).norm_sqr()).sum();
            assert!(sum < 1.0 && 1.0 - sum < 1.0 / k_max as f64, "K={k_max}: {sum}");
        }
    }

    #[test]
    fn coefficients_reconstruct_square_wave() {
        // time-domain projection of sgn sin(ω_p t) onto e^{ikω_p t}
        let pulse = PulseTrain::new(1.3, 0.0);
        let period = 2.0 * pulse.tau_p;
        for k in [-5i64, -1, 1, 2, 3, 7] {
            let transform = filter_transform(&pulse, period, k as f64 * pulse.omega_p()) / period;
            assert!((transform - pulse_fourier_coefficient(k, Parity::Odd)).norm() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn undriven_signal() {
        let g = magic(5.0);
        let pulse = PulseTrain::new(0.1, 0.02);
        assert_eq!(signal_undriven(&g, C, &pulse, 1.0, 0.0), 0.0);
        let flat = SampleGeometry { alpha: 0.0, ..g };
        assert!(signal_undriven(&flat, C, &pulse, 1.0, 10.0).abs() < 1e-12);
        // against the mean-field phase ⟨B⟩τ at sin(δωt) = 1
        let t = PI / 2.0 / pulse.delta_omega;
        let ratio = signal_undriven(&g, C, &pulse, 0.7, t) / (dipolar::mean_field(&g, C) * 0.7);
        assert_relative_eq!(ratio, 2.0 / PI, max_relative = 1e-14);
        // the driven Ramsey phase carries an extra 2
        let driven = spatial::signal_phase(&SpatialProtocolParams::new(g, 0.7, 1.0, 0.0));
        assert_relative_eq!(signal_undriven(&g, C, &pulse, 0.7, t) / driven, 1.0 / PI, max_relative = 1e-14);
    }

    #[test]
    fn c2_endpoints() {
        let g = magic(7.0);
        let b = dipolar::b_rms_sq(&g, C);
        assert_relative_eq!(c2_instant(&g, C, 0.3, 0.0), 2.0 / (PI * PI) * b, max_relative = 1e-12);
        let flat = SampleGeometry { alpha: 0.0, ..g };
        let expected = flat.density * C.j * C.j / (4.0 * PI * flat.depth.powi(3));
        for t in [0.0, 1.0, 2.5] {
            assert_relative_eq!(c2_instant(&flat, C, 0.3, t), expected, max_relative = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn c2_forms_agree_and_are_nonnegative(alpha in 0.0..PI, phase in -10.0..10.0f64) {
            let g = SampleGeometry { alpha, ..SampleGeometry::water(4.0) };
            let a = c2_instant(&g, C, phase, 1.0);
            let b = c2_instant_cos2(&g, C, phase, 1.0);
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
            prop_assert!(a >= 0.0);
        }

        #[test]
        fn strategies_never_negative(alpha in 0.0..FRAC_PI_2, tau in 1.0..1e3f64) {
            let g = SampleGeometry { alpha, ..SampleGeometry::water(20.0) };
            let pulse = PulseTrain::new(0.05, 1e-3);
            for s in [UndrivenStrategy::PeakSignal, UndrivenStrategy::PeakEntanglement] {
                match qfi_undriven(&g, C, &pulse, tau, 1.0, s) {
                    Ok(q) => prop_assert!(q.value >= 0.0 && (0.0..=1.0).contains(&q.cos2)),
                    Err(e) => prop_assert!(matches!(e, Error::StrategyInfeasible(_))),
                }
            }
        }
    }

    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn peak_signal_at_30nm() {
        let g = magic(30.0);
        let pulse = PulseTrain::new(0.05, 1e-3);
        let q = qfi_undriven(&g, C, &pulse, 0.0, 2.0, UndrivenStrategy::PeakSignal).unwrap();
        let b = dipolar::b_rms_sq(&g, C);
        let m = dipolar::mean_field(&g, C);
        assert_relative_eq!(q.tau, PI / (2.0f64.sqrt() * b.sqrt()), max_relative = 1e-12);
        assert_relative_eq!(q.value, 2.0 / E * m * m / b * 4.0, max_relative = 1e-12);
        assert!((q.tau - 183.0).abs() < 0.2 * 183.0, "tau = {}", q.tau);
        assert_eq!(q.detuning_phase, 0.0);
    }

    #[test]
    fn peak_entanglement_infeasible_for_short_tau() {
        let g = magic(30.0);
        let pulse = PulseTrain::new(0.05, 1e-3);
        let r = qfi_undriven(&g, C, &pulse, 1.0, 1.0, UndrivenStrategy::PeakEntanglement);
        assert!(matches!(r, Err(Error::StrategyInfeasible(_))));
        let flat = SampleGeometry { alpha: 0.0, ..g };
        let r = qfi_undriven(&flat, C, &pulse, 1e6, 1.0, UndrivenStrategy::PeakEntanglement);
        assert!(matches!(r, Err(Error::StrategyInfeasible(_))));
    }

    #[test]
    fn peak_entanglement_without_dephasing_matches_driven() {
        let g = magic(10.0);
        let (udq, _) = dipolar::b_rms_undriven(&g, C);
        let m = dipolar::mean_field(&g, C);
        let b = dipolar::b_rms_sq(&g, C);
        let tau = 3.0 / udq.sqrt();
        let t = 1.5;
        let q = qfi_undriven_from_moments(m, udq, 0.0, tau, t, UndrivenStrategy::PeakEntanglement).unwrap();
        let p = SpatialProtocolParams::new(g, tau, t, 0.0).with_regime(DecayRegime::Instantaneous);
        let theta = spatial::optimal_theta_spatial(&p).unwrap();
        let p = SpatialProtocolParams { omega_n: theta / t, ..p };
        let driven = spatial::qfi_spatial(&p).unwrap().breakdown.i_phi;
        // same scaling, rescaled by the share of the variance that entangles
        assert_relative_eq!(q.value, driven * 4.0 * b / (PI * PI * udq), max_relative = 1e-10);
    }

    /// ∫∫ h(t₁)h(t₂) f(t₁ − t₂) over [0, Mτ_p]², summed over segment pairs.
    fn double_integral(pulse: &PulseTrain, segments: i64, f: impl Fn(f64) -> f64) -> f64 {
        let l = pulse.tau_p;
        let half = Rule::gauss_legendre(48, 0.0, l).unwrap();
        (-(segments - 1)..segments)
            .map(|d| {
                let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
                let pairs = (segments - d.abs()) as f64;
                // triangular weight (L − |u|) over u ∈ [−L, L]
                let inner: f64 = half
                    .iter()
                    .map(|(u, w)| w * (l - u) * (f(d as f64 * l + u) + f(d as f64 * l - u)))
                    .sum();
                sign * pairs * inner
            })
            .sum()
    }

    #[test]
    fn zero_spectrum() {
        let pulse = PulseTrain::new(0.5, 0.01);
        let s = filter_overlap_s2_with(&pulse, &|_: f64| 0.0, 5.0, 51).unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn rejects_negative_spectrum() {
        let pulse = PulseTrain::new(0.5, 0.01);
        let r = filter_overlap_s2_with(&pulse, &|w: f64| -1.0 / (1.0 + w * w), 5.0, 11);
        assert!(matches!(r, Err(Error::NonIntegrableSpectrum(_))));
    }

    #[test]
    fn lorentzian_against_time_domain() {
        let pulse = PulseTrain::new(0.5, 0.05);
        let segments = 40;
        let tau = segments as f64 * pulse.tau_p;
        let spec = Lorentzian { variance: 0.3, rate: 0.4 };
        let omega = pulse.delta_omega + pulse.omega_p();
        let oracle = double_integral(&pulse, segments, |s| {
            spec.variance * (-spec.rate * s.abs()).exp() * (omega * s).cos()
        });
        let s2 = filter_overlap_s2(&pulse, &spec, tau).unwrap();
        assert!((s2 / oracle - 1.0).abs() < 1e-2, "{s2} vs {oracle}");
    }

    #[test]
    fn narrow_filter_limit() {
        // spectrum broad against 1/τ, narrow against ω_p
        let pulse = PulseTrain::new(0.1, 0.3);
        let tau = 4000.0 * pulse.tau_p;
        let spec = Lorentzian { variance: 1.0, rate: 0.5 };
        let s2 = filter_overlap_s2_with(&pulse, &spec, tau, 3).unwrap();
        let expected = 4.0 / (PI * PI) * tau * spec.density(pulse.delta_omega);
        assert!((s2 / expected - 1.0).abs() < 5e-3, "{s2} vs {expected}");
    }

    #[test]
    fn sifting_limit() {
        // a unit-weight bump much narrower than the filter lobes
        let pulse = PulseTrain::new(0.2, 0.05);
        let tau = 3.0;
        let (centre, width, weight) = (0.1, 1e-4, 2.5);
        let spec = BandLimited {
            f: move |w: f64| weight * (-0.5 * ((w - centre) / width).powi(2)).exp() / (width * (2.0 * PI).sqrt()),
            lo: centre - 10.0 * width,
            hi: centre + 10.0 * width,
        };
        let s2 = filter_overlap_s2(&pulse, &spec, tau).unwrap();
        let at = centre + pulse.delta_omega + pulse.omega_p();
        let expected = tau / (2.0 * PI) * weight * filter_function(&pulse, tau, at);
        assert_relative_eq!(s2, expected, max_relative = 1e-6);
    }

    #[test]
    fn short_time_endpoint() {
        let pulse = PulseTrain::new(0.02, 0.0);
        for (d, alpha) in [(3.0, 0.0), (10.0, MAGIC_ANGLE), (25.0, 1.2)] {
            let g = SampleGeometry { alpha, ..SampleGeometry::water(d) };
            let b = dipolar::b_rms_sq(&g, C);
            let whole = 50.0 * pulse.tau_p;
            let s = filter_overlap_short_time(&g, C, &pulse, whole).unwrap();
            assert_relative_eq!(s, b * whole * whole / (PI * PI), max_relative = 1e-10);
            let ragged = 5000.3 * pulse.tau_p;
            let s = filter_overlap_short_time(&g, C, &pulse, ragged).unwrap();
            assert_relative_eq!(s, b * ragged * ragged / (PI * PI), max_relative = 1e-3);
        }
    }

    #[test]
    fn short_time_matches_frozen_spectrum() {
        // a nearly static Lorentzian reproduces the frozen-correlation result
        let pulse = PulseTrain::new(0.5, 0.0);
        let segments = 8;
        let tau = segments as f64 * pulse.tau_p;
        let sigma2 = 1.7;
        let frozen = double_integral(&pulse, segments, |s| sigma2 * (pulse.omega_p() * s).cos());
        let a1 = 2.0 / PI;
        assert_relative_eq!(frozen, sigma2 * (a1 * tau).powi(2), max_relative = 1e-9);
    }
}
