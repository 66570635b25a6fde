//! Constant-coupling toy model: N nuclei each coupled with strength g to the sensor.

use std::f64::consts::{E, FRAC_PI_2};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::qfi::{Coherence, CoherenceDerivative, QfiBreakdown};

/// Largest nuclear count accepted by [`brute_force_coherence`].
pub const BRUTE_FORCE_MAX_NUCLEI: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimpleModelParams {
    pub n_nuclei: u32,
    /// Coupling, rad/μs.
    pub g: f64,
    /// Interaction window, μs.
    pub tau: f64,
    /// Free-evolution window, μs.
    pub t: f64,
    /// Larmor frequency being estimated, rad/μs.
    pub omega_n: f64,
    /// Sensor gap. Drops out in the interaction picture; kept for bookkeeping.
    pub omega_0: f64,
}

impl SimpleModelParams {
    pub fn new(n_nuclei: u32, g: f64, tau: f64, t: f64, omega_n: f64) -> Result<Self> {
        let p = Self { n_nuclei, g, tau, t, omega_n, omega_0: 0.0 };
        p.validate()?;
        Ok(p)
    }

    /// Parameters with t = 1 so that θ = ω_N.
    pub fn at_theta(n_nuclei: u32, g_tau: f64, theta: f64) -> Self {
        Self { n_nuclei, g: g_tau, tau: 1.0, t: 1.0, omega_n: theta, omega_0: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.n_nuclei >= 1, || "at least one nucleus is required".into())?;
        ensure(self.tau >= 0.0 && self.t >= 0.0, || "tau and t must be non-negative".into())?;
        ensure(
            [self.g, self.tau, self.t, self.omega_n].iter().all(|x| x.is_finite()),
            || "parameters must be finite".into(),
        )
    }

    pub fn theta(&self) -> f64 {
        self.omega_n * self.t
    }

    pub fn g_tau(&self) -> f64 {
        self.g * self.tau
    }

    fn n(&self) -> f64 {
        f64::from(self.n_nuclei)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Weak,
    Strong,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub back_action: f64,
    pub regime: Regime,
    pub theta_opt: f64,
}

/// Which closed form [`qfi_optimal`] used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalQfi {
    pub value: f64,
    pub regime: Regime,
    pub formula: &'static str,
}

/// Single-nucleus overlap factor cos 2gτ + i sin 2gτ cos θ.
fn spin_factor(p: &SimpleModelParams) -> Complex64 {
    let (s, c) = (2.0 * p.g_tau()).sin_cos();
    Complex64::new(c, s * p.theta().cos())
}

/// Exact coherence `z^N` in polar form, with Φ = N arg z (not wrapped).
pub fn coherence_exact(p: &SimpleModelParams) -> Coherence {
    let z = spin_factor(p);
    let n = p.n();
    // |z|^N via ln1p for stability when |z| is close to 1
    let (s, _) = (2.0 * p.g_tau()).sin_cos();
    let sin_theta = p.theta().sin();
    let w = -(s * sin_theta).powi(2);
    Coherence { r: (0.5 * n * w.ln_1p()).exp(), phi: n * z.arg() }
}

/// As [`coherence_exact`] but rejects |2gτ| ≥ π/2, where arg z leaves its principal branch.
pub fn coherence_exact_checked(p: &SimpleModelParams) -> Result<Coherence> {
    p.validate()?;
    let two_g_tau = (2.0 * p.g_tau()).abs();
    if two_g_tau >= FRAC_PI_2 {
        return Err(Error::BranchOverflow(two_g_tau));
    }
    Ok(coherence_exact(p))
}

pub fn coherence_weak(p: &SimpleModelParams) -> Coherence {
    let gt = p.g_tau();
    let theta = p.theta();
    Coherence {
        r: (-2.0 * p.n() * gt * gt * theta.sin().powi(2)).exp(),
        phi: 2.0 * p.n() * gt * theta.cos(),
    }
}

/// Analytic d r/dω_N and dΦ/dω_N of the exact coherence.
pub fn coherence_derivative(p: &SimpleModelParams) -> CoherenceDerivative {
    let (s, c) = (2.0 * p.g_tau()).sin_cos();
    let (st, ct) = p.theta().sin_cos();
    let n = p.n();
    let w = 1.0 - (s * st).powi(2);
    let dr_dtheta = -n * s * s * st * ct * w.powf(0.5 * n - 1.0);
    let dphi_dtheta = -n * c * s * st / w;
    CoherenceDerivative { dr_domega: p.t * dr_dtheta, dphi_domega: p.t * dphi_dtheta }
}

/// Weak-coupling probability of finding the sensor in the upper Y state.
pub fn prob_up_y(p: &SimpleModelParams) -> f64 {
    let c = coherence_weak(p);
    0.5 * (1.0 + c.r * c.phi.sin())
}

/// Upper-Y probability from the exact coherence: ½(1 + Im z^N).
pub fn prob_up_y_exact(p: &SimpleModelParams) -> f64 {
    let c = coherence_exact(p);
    0.5 * (1.0 + c.r * c.phi.sin())
}

/// d/dω_N of [`prob_up_y`].
pub fn prob_up_y_derivative(p: &SimpleModelParams) -> f64 {
    let c = coherence_weak(p);
    let gt = p.g_tau();
    let n = p.n();
    let (st, ct) = p.theta().sin_cos();
    let dr = c.r * (-4.0 * n * gt * gt * st * ct);
    let dphi = -2.0 * n * gt * st;
    0.5 * p.t * (dr * c.phi.sin() + c.r * c.phi.cos() * dphi)
}

/// d/dω_N of [`prob_up_y_exact`].
pub fn prob_up_y_exact_derivative(p: &SimpleModelParams) -> f64 {
    let c = coherence_exact(p);
    let d = coherence_derivative(p);
    0.5 * (d.dr_domega * c.phi.sin() + c.r * c.phi.cos() * d.dphi_domega)
}

/// Closed-form radial and rotational information of the exact coherence.
pub fn qfi_components(p: &SimpleModelParams) -> QfiBreakdown {
    let (s, c) = (2.0 * p.g_tau()).sin_cos();
    let (st, ct) = p.theta().sin_cos();
    let n = p.n();
    let x = (s * st).powi(2);
    let t2 = p.t * p.t;
    // w^{N-2} times the N² t² prefactor
    let decay = ((n - 2.0) * (-x).ln_1p()).exp();
    let i_phi = n * n * t2 * c * c * s * s * st * st * decay;
    // sin²θ / (1 - w^N) tends to 1/(N sin²2gτ) as θ → 0, but at exactly r = 1
    // the pure-state convention of `bures_qfi` (i_r = 0) applies.
    let ratio = if x == 0.0 { 0.0 } else { st * st / -(n * (-x).ln_1p()).exp_m1() };
    let i_r = n * n * t2 * ct * ct * s.powi(4) * decay * ratio;
    QfiBreakdown::new(i_r, i_phi)
}

pub fn optimal_theta(n_nuclei: u32, g_tau: f64) -> Result<RegimeReport> {
    ensure(n_nuclei >= 1, || "at least one nucleus is required".into())?;
    ensure(g_tau > 0.0 && 2.0 * g_tau < FRAC_PI_2, || {
        format!("g tau = {g_tau} must satisfy 0 < 2 g tau < pi/2")
    })?;
    let n = f64::from(n_nuclei);
    let strength = n * (2.0 * g_tau).sin().powi(2);
    let (regime, theta_opt) = if strength >= 1.0 {
        (Regime::Strong, (1.0 / strength).sqrt().asin())
    } else {
        (Regime::Weak, FRAC_PI_2)
    };
    Ok(RegimeReport { back_action: n * g_tau * g_tau, regime, theta_opt })
}

/// Regime-appropriate closed form for the best achievable QFI.
///
/// Weak: (2gτ)² N² t². Strong: N t²/e.
pub fn qfi_optimal(p: &SimpleModelParams) -> Result<OptimalQfi> {
    p.validate()?;
    let report = optimal_theta(p.n_nuclei, p.g_tau())?;
    let t2 = p.t * p.t;
    let n = p.n();
    Ok(match report.regime {
        Regime::Weak => {
            let phi = 2.0 * p.g_tau();
            OptimalQfi { value: phi * phi * n * n * t2, regime: Regime::Weak, formula: "phi^2 N^2 t^2" }
        }
        Regime::Strong => OptimalQfi { value: n * t2 / E, regime: Regime::Strong, formula: "N t^2 / e" },
    })
}

/// Statevector simulation of the full (N+1)-qubit protocol.
///
/// Qubit ordering puts the sensor on the most significant bit; nuclei start in
/// the upper X state, precess freely for t and then interact with the sensor via
/// H₁ = g σ_z ⊗ Σ_k σ_x^{(k)} for τ. H₁ is exponentiated through a dense
/// eigendecomposition of the assembled matrix.
pub fn brute_force_coherence(p: &SimpleModelParams) -> Result<Coherence> {
    p.validate()?;
    if p.n_nuclei > BRUTE_FORCE_MAX_NUCLEI {
        return Err(Error::DimensionTooLarge {
            requested: 1usize << (p.n_nuclei + 1),
            limit: 1usize << (BRUTE_FORCE_MAX_NUCLEI + 1),
        });
    }
    let n = p.n_nuclei as usize;
    let nuc_dim = 1usize << n;
    let dim = 2 * nuc_dim;

    let mut h1 = DMatrix::<f64>::zeros(dim, dim);
    for basis in 0..dim {
        let sensor_sign = if basis & nuc_dim == 0 { 1.0 } else { -1.0 };
        for k in 0..n {
            h1[(basis ^ (1 << k), basis)] += p.g * sensor_sign;
        }
    }
    let eig = h1.symmetric_eigen();

    let amp = (dim as f64).sqrt().recip();
    let theta = p.theta();
    let psi = DVector::<Complex64>::from_fn(dim, |basis, _| {
        let ups = (basis & (nuc_dim - 1)).count_zeros() as i64 - (usize::BITS as i64 - n as i64);
        let magnetisation = 2 * ups - n as i64;
        Complex64::from_polar(amp, -0.5 * theta * magnetisation as f64)
    });

    let vectors = eig.eigenvectors.map(|x| Complex64::new(x, 0.0));
    let mut coeffs = vectors.adjoint() * &psi;
    for (c, &lambda) in coeffs.iter_mut().zip(eig.eigenvalues.iter()) {
        *c *= Complex64::from_polar(1.0, -lambda * p.tau);
    }
    let evolved = vectors * coeffs;

    // ρ_S[1][0] = Σ_env ψ(↓, env) ψ(↑, env)*
    let rho_10: Complex64 = (0..nuc_dim)
        .map(|env| evolved[nuc_dim + env] * evolved[env].conj())
        .sum();
    Ok(Coherence::from_complex(rho_10 * 2.0))
}
