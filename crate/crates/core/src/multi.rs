//! M sensors coupled identically to N nuclei.
//!
//! The sensors' reduced state only depends on the Hamming weights of its
//! X-basis labels, so it lives on the (M+1)-dimensional symmetric subspace
//! spanned by |s⟩ = C(M,s)^{−1/2} Σ_{|x|=s} |x⟩.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::linalg::{self, ComplexMatrix};
use crate::qfi::{self, Stencil};

/// Largest M accepted by [`brute_force_multi`].
pub const MAX_BRUTE_FORCE_SENSORS: u32 = 10;
/// Largest M for which the signed Y-basis coefficients fit in i128.
pub const MAX_Y_BASIS_SENSORS: u32 = 120;
/// Up to this M binomials are formed exactly in u64.
const EXACT_BINOMIAL_LIMIT: u32 = 60;
/// Y-basis probabilities come out of a heavily cancelling sum (≈1e-13 absolute
/// error at M = 50); outcomes below this are indistinguishable from zero.
pub const Y_PROBABILITY_RESOLUTION: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiSensorParams {
    pub m_sensors: u32,
    pub n_nuclei: u32,
    pub g_tau: f64,
    pub theta: f64,
    pub t: f64,
}

impl MultiSensorParams {
    pub fn new(m_sensors: u32, n_nuclei: u32, g_tau: f64, theta: f64, t: f64) -> Result<Self> {
        let p = Self { m_sensors, n_nuclei, g_tau, theta, t };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.m_sensors >= 1, || "need at least one sensor".into())?;
        ensure(self.n_nuclei >= 1, || "need at least one nucleus".into())?;
        ensure(self.g_tau.is_finite() && self.theta.is_finite() && self.t.is_finite(), || {
            "parameters must be finite".into()
        })?;
        let two_g_tau = (2.0 * self.g_tau).abs();
        if two_g_tau >= FRAC_PI_2 {
            return Err(Error::BranchOverflow(two_g_tau));
        }
        Ok(())
    }

    pub fn with_theta(self, theta: f64) -> Self {
        Self { theta, ..self }
    }
}

/// Density matrix on the symmetric subspace, indexed by Hamming weight.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricState {
    pub matrix: ComplexMatrix,
}

impl SymmetricState {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        linalg::validate_density(&self.matrix)
    }

    pub fn spectrum(&self) -> Vec<f64> {
        linalg::spectrum(&self.matrix)
    }
}

fn binomial_u64(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

fn binomial_i128(n: u32, k: u32) -> i128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k) as i128;
    let n = n as i128;
    (0..k).fold(1i128, |acc, i| acc * (n - i) / (i + 1))
}

/// √(C(M, j)/2^M) for j = 0..=M.
///
/// Above M = 60 the log-weights are accumulated from the ratios
/// C(M, j+1)/C(M, j) and normalised by their sum, which avoids both overflow
/// and the drift of a log-factorial table.
pub fn binomial_weights(m: u32) -> Vec<f64> {
    if m <= EXACT_BINOMIAL_LIMIT {
        let scale = 0.5f64.powi(m as i32);
        return (0..=m as u64).map(|j| (binomial_u64(m as u64, j) as f64 * scale).sqrt()).collect();
    }
    let mf = m as f64;
    let mut logs = Vec::with_capacity(m as usize + 1);
    let mut acc = 0.0f64;
    logs.push(acc);
    for j in 0..m {
        acc += ((mf - j as f64) / (j as f64 + 1.0)).ln();
        logs.push(acc);
    }
    let peak = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = logs.iter().map(|l| (l - peak).exp()).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|x| (x / total).sqrt()).collect()
}

/// (cos x + i sin x cos θ)^N with x = 2gτd, through ln1p for the modulus.
fn power_factor(p: &MultiSensorParams, d: i64) -> Complex64 {
    let x = 2.0 * p.g_tau * d as f64;
    let (s, c) = x.sin_cos();
    let n = p.n_nuclei as f64;
    let modulus = (0.5 * n * (-(s * p.theta.sin()).powi(2)).ln_1p()).exp();
    let arg = (s * p.theta.cos()).atan2(c);
    Complex64::from_polar(modulus, n * arg)
}

/// θ-derivative of [`power_factor`]: N z^{N−1}·(−i sin x sin θ).
fn power_factor_dtheta(p: &MultiSensorParams, d: i64) -> Complex64 {
    let x = 2.0 * p.g_tau * d as f64;
    if d == 0 || x.sin() == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let s = x.sin();
    let n = p.n_nuclei;
    let lower = if n == 1 {
        Complex64::new(1.0, 0.0)
    } else {
        power_factor(&MultiSensorParams { n_nuclei: n - 1, ..*p }, d)
    };
    lower * Complex64::new(0.0, -s * p.theta.sin()) * n as f64
}

fn toeplitz(p: &MultiSensorParams, factor: impl Fn(&MultiSensorParams, i64) -> Complex64) -> ComplexMatrix {
    let m = p.m_sensors as usize;
    let w = binomial_weights(p.m_sensors);
    let diagonals: Vec<Complex64> = (-(m as i64)..=m as i64).map(|d| factor(p, d)).collect();
    ComplexMatrix::from_fn(m + 1, m + 1, |j, k| {
        let d = j as i64 - k as i64;
        diagonals[(d + m as i64) as usize] * (w[j] * w[k])
    })
}

/// ρ_{jk} = 2^{−M}√(C(M,j)C(M,k))·(cos 2gτ(j−k) + i sin 2gτ(j−k) cos θ)^N.
pub fn symmetric_rho(p: &MultiSensorParams) -> Result<SymmetricState> {
    p.validate()?;
    Ok(SymmetricState { matrix: toeplitz(p, power_factor) })
}

/// ∂ρ/∂θ on the symmetric subspace.
pub fn symmetric_rho_dtheta(p: &MultiSensorParams) -> Result<ComplexMatrix> {
    p.validate()?;
    Ok(toeplitz(p, power_factor_dtheta))
}

/// Fidelity QFI in ω_N units, `8(1 − F)/dθ²·t²` between nearby θ.
pub fn qfi_multi(p: &MultiSensorParams, dtheta: f64, stencil: Stencil) -> Result<f64> {
    p.validate()?;
    qfi::fidelity_qfi_family(
        |theta| symmetric_rho(&p.with_theta(theta)).map(|s| s.matrix),
        p.theta,
        dtheta,
        p.t,
        stencil,
    )
}

pub fn qfi_multi_sweep(p: &MultiSensorParams, thetas: &[f64], dtheta: f64, stencil: Stencil) -> Result<Vec<f64>> {
    thetas.par_iter().map(|&theta| qfi_multi(&p.with_theta(theta), dtheta, stencil)).collect()
}

/// a_{s,s_z} = Σ_k (−1)^k C(s_z,k) C(M−s_z, s−k), the signed count of weight-s
/// strings x with (−1)^{x·z} for a fixed z of weight s_z.
pub fn y_basis_coefficient(s: u32, s_z: u32, m: u32) -> Result<i128> {
    if s > m || s_z > m {
        return Err(Error::IndexOutOfRange(format!("s = {s}, s_z = {s_z} with M = {m}")));
    }
    if m > MAX_Y_BASIS_SENSORS {
        return Err(Error::DimensionTooLarge {
            requested: m as usize,
            limit: MAX_Y_BASIS_SENSORS as usize,
        });
    }
    let lo = (s + s_z).saturating_sub(m);
    let hi = s.min(s_z);
    Ok((lo..=hi)
        .map(|k| {
            let term = binomial_i128(s_z, k) * binomial_i128(m - s_z, s - k);
            if k % 2 == 0 { term } else { -term }
        })
        .sum())
}

/// Rows v_{s_z} with P_{s_z} = Σ_{jk} v_j ρ_{jk} v̄_k, already carrying the
/// multiplicity C(M, s_z) of the outcome class.
fn y_basis_vectors(m: u32) -> Result<Vec<Vec<Complex64>>> {
    let w = binomial_weights(m);
    let mut phases = vec![Complex64::new(1.0, 0.0); m as usize + 1];
    for j in 1..phases.len() {
        phases[j] = phases[j - 1] * Complex64::new(0.0, -1.0);
    }
    (0..=m)
        .map(|sz| {
            (0..=m)
                .map(|j| {
                    let a = y_basis_coefficient(j, sz, m)? as f64;
                    // √(C(M,s_z)/(2^M C(M,j))) = w_{s_z}/(w_j 2^{M/2})
                    let scale = w[sz as usize] / w[j as usize] * 0.5f64.powf(0.5 * m as f64);
                    Ok(phases[j as usize] * (a * scale))
                })
                .collect()
        })
        .collect()
}

fn quadratic_form(v: &[Complex64], rho: &ComplexMatrix) -> f64 {
    let mut total = Complex64::new(0.0, 0.0);
    for (j, vj) in v.iter().enumerate() {
        for (k, vk) in v.iter().enumerate() {
            total += vj * rho[(j, k)] * vk.conj();
        }
    }
    total.re
}

/// Probabilities of measuring s_z sensors in |↓_Y⟩, for s_z = 0..=M.
pub fn y_basis_probs(p: &MultiSensorParams) -> Result<Vec<f64>> {
    let rho = symmetric_rho(p)?;
    Ok(y_basis_vectors(p.m_sensors)?.iter().map(|v| quadratic_form(v, &rho.matrix)).collect())
}

/// ∂P_{s_z}/∂ω_N.
pub fn y_basis_probs_derivative(p: &MultiSensorParams) -> Result<Vec<f64>> {
    let drho = symmetric_rho_dtheta(p)?;
    Ok(y_basis_vectors(p.m_sensors)?
        .iter()
        .map(|v| quadratic_form(v, &drho) * p.t)
        .collect())
}

/// Classical Fisher information of the Y-basis measurement.
///
/// Outcomes with |P| below [`Y_PROBABILITY_RESOLUTION`] are dropped.
pub fn fi_y(p: &MultiSensorParams) -> Result<f64> {
    let (kept, dkept): (Vec<f64>, Vec<f64>) = y_basis_probs(p)?
        .into_iter()
        .zip(y_basis_probs_derivative(p)?)
        .filter(|(pr, _)| pr.abs() > Y_PROBABILITY_RESOLUTION)
        .unzip();
    qfi::classical_fi(&kept, &dkept)
}

pub fn fi_y_sweep(p: &MultiSensorParams, thetas: &[f64]) -> Result<Vec<f64>> {
    thetas.par_iter().map(|&theta| fi_y(&p.with_theta(theta))).collect()
}

/// Full 2^M × 2^M sensor state, ρ_{xy} = 2^{−M}(cos 2gτ(|x|−|y|) + i sin 2gτ(|x|−|y|) cos θ)^N.
pub fn brute_force_multi(p: &MultiSensorParams) -> Result<ComplexMatrix> {
    p.validate()?;
    if p.m_sensors > MAX_BRUTE_FORCE_SENSORS {
        return Err(Error::DimensionTooLarge {
            requested: 1usize << p.m_sensors.min(63),
            limit: 1 << MAX_BRUTE_FORCE_SENSORS,
        });
    }
    let dim = 1usize << p.m_sensors;
    let scale = 1.0 / dim as f64;
    // element-wise from the complex power, independent of the Toeplitz path
    let factor = |d: i64| {
        let x = 2.0 * p.g_tau * d as f64;
        Complex64::new(x.cos(), x.sin() * p.theta.cos()).powu(p.n_nuclei)
    };
    Ok(ComplexMatrix::from_fn(dim, dim, |x, y| {
        factor(x.count_ones() as i64 - y.count_ones() as i64) * scale
    }))
}

/// Isometry whose columns are the normalized symmetric states |s⟩, s = 0..=M.
pub fn symmetric_isometry(m: u32) -> ComplexMatrix {
    let dim = 1usize << m;
    let mut out = ComplexMatrix::zeros(dim, m as usize + 1);
    for x in 0..dim {
        out[(x, x.count_ones() as usize)] = Complex64::new(1.0, 0.0);
    }
    for mut col in out.column_iter_mut() {
        let norm = col.norm();
        col /= Complex64::new(norm, 0.0);
    }
    out
}

/// V†ρV: the full state restricted to the symmetric subspace.
pub fn project_symmetric(full: &ComplexMatrix, m: u32) -> Result<ComplexMatrix> {
    let dim = 1usize << m;
    if full.nrows() != dim {
        return Err(Error::DimensionMismatch { left: full.nrows(), right: dim });
    }
    let v = symmetric_isometry(m);
    Ok(v.adjoint() * full * &v)
}
