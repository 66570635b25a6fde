//! Half-space dipolar integrals I_k^{(m₁..m_k)} = ∫ d³r r^{-3k} Π ζ̃_{m_i} Y₂^{m_i}(r̂),
//! with r̂ expressed in the NV frame and the sample filling z ≥ d in the surface frame.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::harmonics::{y2_direction, zeta_tilde_of, Direction};
use super::wigner::wigner_d2;
use super::SampleGeometry;
use crate::error::{Error, Result};
use crate::quadrature::Rule;

pub const DEFAULT_QUADRATURE_ORDER: usize = 64;
pub const DEFAULT_PHI_POINTS: usize = 128;
/// Default order-1 cutoff, in units of the depth.
pub const DEFAULT_CUTOFF_DEPTHS: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntegralMethod {
    Analytic,
    Quadrature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralSpec {
    pub m_indices: Vec<i32>,
    pub geometry: SampleGeometry,
    /// Outer radius for the logarithmic order-1 integral, nm.
    pub radial_cutoff: Option<f64>,
    pub quadrature_order: usize,
    pub phi_points: usize,
}

impl IntegralSpec {
    /// Integral request with default quadrature and, for order 1, the default cutoff.
    pub fn new(m_indices: &[i32], geometry: SampleGeometry) -> Self {
        let radial_cutoff = (m_indices.len() == 1).then(|| DEFAULT_CUTOFF_DEPTHS * geometry.depth);
        Self {
            m_indices: m_indices.to_vec(),
            geometry,
            radial_cutoff,
            quadrature_order: DEFAULT_QUADRATURE_ORDER,
            phi_points: DEFAULT_PHI_POINTS,
        }
    }

    pub fn order(&self) -> usize {
        self.m_indices.len()
    }

    fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        if self.m_indices.is_empty() {
            return Err(Error::InvalidParameter("at least one harmonic index is required".into()));
        }
        if let Some(&bad) = self.m_indices.iter().find(|m| m.abs() > 2) {
            return Err(Error::BadIndex(bad));
        }
        if let Some(cut) = self.radial_cutoff {
            if !(cut > self.geometry.depth) {
                return Err(Error::InvalidParameter(format!(
                    "cutoff {cut} must exceed the depth {}",
                    self.geometry.depth
                )));
            }
        }
        Ok(())
    }
}

pub fn dipolar_integral(spec: &IntegralSpec, method: IntegralMethod) -> Result<Complex64> {
    spec.validate()?;
    match method {
        IntegralMethod::Analytic => analytic(spec).map(|v| Complex64::new(v, 0.0)),
        IntegralMethod::Quadrature => quadrature(spec),
    }
}

/// Untilted kernel K(m') for a sequence with Σm' = 0; zero otherwise.
///
/// The azimuthal integral kills every sequence with nonzero total m', and the
/// surviving values depend only on the multiset of |m'| up to a global sign.
fn untilted_kernel(ms: &[i32], depth: f64) -> Result<f64> {
    if ms.iter().sum::<i32>() != 0 {
        return Ok(0.0);
    }
    let mut sorted: Vec<i32> = ms.to_vec();
    if sorted.iter().filter(|&&m| m < 0).count() > sorted.iter().filter(|&&m| m > 0).count() {
        sorted.iter_mut().for_each(|m| *m = -*m);
    }
    sorted.sort_unstable();
    let d3 = depth.powi(3);
    let d6 = d3 * d3;
    Ok(match sorted.as_slice() {
        [0] => -4.0 * PI / 3.0,
        [0, 0] => PI / (4.0 * d3),
        [-1, 1] => PI / (16.0 * d3),
        [-2, 2] => PI / (64.0 * d3),
        [0, 0, 0] => -160.0 * PI / (1001.0 * d6),
        [-2, 0, 2] => -4.0 * PI / (3003.0 * d6),
        [-2, 1, 1] => -PI / (286.0 * d6),
        [-1, 0, 1] => -7.0 * PI / (429.0 * d6),
        other => return Err(Error::NoClosedForm(format!("untilted kernel {other:?}"))),
    })
}

/// Wigner-rotated combination of the untilted closed forms.
fn analytic(spec: &IntegralSpec) -> Result<f64> {
    let k = spec.order();
    if k > 3 {
        return Err(Error::NoClosedForm(format!("order {k} integrals")));
    }
    let d = wigner_d2(spec.geometry.alpha);
    let mut total = 0.0;
    let mut primes = vec![-2i32; k];
    loop {
        if primes.iter().sum::<i32>() == 0 {
            let weight: f64 = spec
                .m_indices
                .iter()
                .zip(&primes)
                .map(|(&m, &mp)| {
                    d[((m + 2) as usize, (mp + 2) as usize)] * zeta_tilde_of(m) / zeta_tilde_of(mp)
                })
                .product();
            if weight != 0.0 {
                total += weight * untilted_kernel(&primes, spec.geometry.depth)?;
            }
        }
        // odometer over {-2..2}^k
        let mut slot = 0;
        loop {
            if slot == k {
                return Ok(total);
            }
            if primes[slot] < 2 {
                primes[slot] += 1;
                break;
            }
            primes[slot] = -2;
            slot += 1;
        }
    }
}

/// Direct quadrature: exact radial integral, Gauss-Legendre in cos θ, trapezoid in φ.
///
/// Harmonics are evaluated at each sample point's NV-frame direction, so this
/// path does not share the Wigner algebra used by [`analytic`].
fn quadrature(spec: &IntegralSpec) -> Result<Complex64> {
    let k = spec.order();
    let depth = spec.geometry.depth;
    let alpha = spec.geometry.alpha;
    let azimuth = Rule::periodic(spec.phi_points)?;

    // Order 1 carries ln(R u / d); u = v⁴ smooths the log singularity at u = 0.
    let (nodes, radial): (Rule, Box<dyn Fn(f64) -> (f64, f64)>) = if k == 1 {
        let cutoff = spec.radial_cutoff.ok_or(Error::CutoffRequired)?;
        let log_ratio = (cutoff / depth).ln();
        (
            Rule::gauss_legendre(spec.quadrature_order, 0.0, 1.0)?,
            Box::new(move |v: f64| (v.powi(4), 4.0 * v.powi(3) * (log_ratio + 4.0 * v.ln()))),
        )
    } else {
        let power = 3 * (k as i32 - 1);
        let scale = f64::from(power) * depth.powi(power);
        (
            Rule::gauss_legendre(spec.quadrature_order, 0.0, 1.0)?,
            Box::new(move |u: f64| (u, u.powi(power) / scale)),
        )
    };

    let prefactor: f64 = spec.m_indices.iter().map(|&m| zeta_tilde_of(m)).product();
    let mut total = Complex64::new(0.0, 0.0);
    for (node, w_node) in nodes.iter() {
        let (u, radial_weight) = radial(node);
        if radial_weight == 0.0 {
            continue;
        }
        let sin_t = (1.0 - u * u).max(0.0).sqrt();
        let mut ring = Complex64::new(0.0, 0.0);
        for (phi, w_phi) in azimuth.iter() {
            let (sp, cp) = phi.sin_cos();
            let surface = Direction { x: sin_t * cp, y: sin_t * sp, z: u };
            let nv = surface.rotate_y(alpha);
            let mut product = Complex64::new(w_phi, 0.0);
            for &m in &spec.m_indices {
                product *= y2_direction(m, nv)?;
            }
            ring += product;
        }
        total += ring * (w_node * radial_weight);
    }
    Ok(total * prefactor)
}
