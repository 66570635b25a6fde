//! Rank-2 spherical harmonics and the angular-momentum split of the dipole coupling.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::PhysicalConstants;
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

/// Unit direction with polar angle measured from +z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Direction {
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self { x: st * cp, y: st * sp, z: ct }
    }

    /// Rotation about y by `alpha`, the map from surface-frame to NV-frame
    /// directions for an NV axis tilted by `alpha`.
    pub fn rotate_y(self, alpha: f64) -> Self {
        let (s, c) = alpha.sin_cos();
        Self { x: c * self.x + s * self.z, y: self.y, z: -s * self.x + c * self.z }
    }

    pub fn theta(self) -> f64 {
        self.z.clamp(-1.0, 1.0).acos()
    }

    pub fn phi(self) -> f64 {
        self.y.atan2(self.x)
    }
}

fn check_index(m: i32) -> Result<()> {
    if (-2..=2).contains(&m) {
        Ok(())
    } else {
        Err(Error::BadIndex(m))
    }
}

/// Y₂^m at a unit direction, with the Condon-Shortley phase.
pub fn y2_direction(m: i32, dir: Direction) -> Result<Complex64> {
    check_index(m)?;
    let c15 = (15.0 / (2.0 * PI)).sqrt();
    // sinθ e^{±iφ}
    let transverse = if m < 0 { Complex64::new(dir.x, -dir.y) } else { Complex64::new(dir.x, dir.y) };
    Ok(match m {
        0 => Complex64::new(0.25 * (5.0 / PI).sqrt() * (3.0 * dir.z * dir.z - 1.0), 0.0),
        1 | -1 => transverse * (-f64::from(m) * 0.5 * c15 * dir.z),
        _ => transverse * transverse * (0.25 * c15),
    })
}

pub fn y2(m: i32, theta: f64, phi: f64) -> Result<Complex64> {
    y2_direction(m, Direction::from_angles(theta, phi))
}

/// ζ_m and ζ̃_m for m = −2..2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DipoleCoefficients {
    pub zeta: [f64; 5],
    pub zeta_tilde: [f64; 5],
}

impl DipoleCoefficients {
    pub fn standard() -> Self {
        let mut zeta = [0.0; 5];
        let mut zeta_tilde = [0.0; 5];
        for m in -2..=2 {
            zeta[(m + 2) as usize] = zeta_of(m);
            zeta_tilde[(m + 2) as usize] = zeta_tilde_of(m);
        }
        Self { zeta, zeta_tilde }
    }

    pub fn zeta(&self, m: i32) -> Result<f64> {
        check_index(m)?;
        Ok(self.zeta[(m + 2) as usize])
    }

    pub fn zeta_tilde(&self, m: i32) -> Result<f64> {
        check_index(m)?;
        Ok(self.zeta_tilde[(m + 2) as usize])
    }
}

fn zeta_of(m: i32) -> f64 {
    match m.abs() {
        0 => -1.0,
        1 => 1.5,
        _ => -0.75,
    }
}

/// ζ̃_m; panics-free for |m| ≤ 2, callers validate the index.
pub(crate) fn zeta_tilde_of(m: i32) -> f64 {
    let base = match m.abs() {
        0 => -4.0 * (PI / 5.0).sqrt(),
        1 => 1.5 * 2.0 * (2.0 * PI / 15.0).sqrt(),
        _ => -0.75 * 4.0 * (2.0 * PI / 15.0).sqrt(),
    };
    if m < 0 && m % 2 != 0 {
        -base
    } else {
        base
    }
}

/// Scalar couplings of the six angular-momentum sectors, in units of J.
///
/// Operator pairing: A·S_zI_z, B·(S₊I₋ + S₋I₊), C·(S_zI₊ + I_zS₊),
/// D·(S_zI₋ + I_zS₋), E·S₊I₊, F·S₋I₋.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipolarTerms {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
    pub e: Complex64,
    pub f: Complex64,
}

pub fn dd_terms(theta: f64, phi: f64, r: f64) -> Result<DipolarTerms> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("distance {r} must be positive")));
    }
    let inv_r3 = r.powi(-3);
    let root_pi5 = 4.0 * (PI / 5.0).sqrt();
    let root_2pi15 = (2.0 * PI / 15.0).sqrt();
    let y = |m| y2(m, theta, phi);
    Ok(DipolarTerms {
        a: -root_pi5 * inv_r3 * y(0)?,
        b: 0.25 * root_pi5 * inv_r3 * y(0)?,
        c: -1.5 * inv_r3 * 2.0 * root_2pi15 * y(-1)?,
        d: 1.5 * inv_r3 * 2.0 * root_2pi15 * y(1)?,
        e: -0.75 * 4.0 * root_2pi15 * inv_r3 * y(-2)?,
        f: -0.75 * 4.0 * root_2pi15 * inv_r3 * y(2)?,
    })
}

/// Spin-½ operators on the ordered pair (S, I).
struct PairOperators {
    sz_iz: ComplexMatrix,
    flip_flop: ComplexMatrix,
    z_plus: ComplexMatrix,
    z_minus: ComplexMatrix,
    plus_plus: ComplexMatrix,
    minus_minus: ComplexMatrix,
}

fn spin_half() -> [ComplexMatrix; 3] {
    let h = |v: [f64; 4], im: bool| {
        ComplexMatrix::from_row_slice(
            2,
            2,
            &v.map(|x| if im { Complex64::new(0.0, 0.5 * x) } else { Complex64::new(0.5 * x, 0.0) }),
        )
    };
    [h([0.0, 1.0, 1.0, 0.0], false), h([0.0, -1.0, 1.0, 0.0], true), h([1.0, 0.0, 0.0, -1.0], false)]
}

fn pair_operators() -> PairOperators {
    let [sx, sy, sz] = spin_half();
    let id = ComplexMatrix::identity(2, 2);
    let i = Complex64::new(0.0, 1.0);
    let plus = &sx + &sy * i;
    let minus = &sx - &sy * i;
    let on_s = |m: &ComplexMatrix| m.kronecker(&id);
    let on_i = |m: &ComplexMatrix| id.kronecker(m);
    PairOperators {
        sz_iz: on_s(&sz) * on_i(&sz),
        flip_flop: on_s(&plus) * on_i(&minus) + on_s(&minus) * on_i(&plus),
        z_plus: on_s(&sz) * on_i(&plus) + on_i(&sz) * on_s(&plus),
        z_minus: on_s(&sz) * on_i(&minus) + on_i(&sz) * on_s(&minus),
        plus_plus: on_s(&plus) * on_i(&plus),
        minus_minus: on_s(&minus) * on_i(&minus),
    }
}

impl DipolarTerms {
    /// The 4×4 two-spin Hamiltonian H_DD/J assembled from the six sectors.
    pub fn operator_matrix(&self) -> ComplexMatrix {
        let ops = pair_operators();
        ops.sz_iz * self.a
            + ops.flip_flop * self.b
            + ops.z_plus * self.c
            + ops.z_minus * self.d
            + ops.plus_plus * self.e
            + ops.minus_minus * self.f
    }
}

/// −r⁻³(3(S·r̂)(I·r̂) − S·I) built directly from spin matrices.
pub fn dipolar_matrix(dir: Direction, r: f64) -> ComplexMatrix {
    let spins = spin_half();
    let id = ComplexMatrix::identity(2, 2);
    let n = [dir.x, dir.y, dir.z];
    let s: Vec<ComplexMatrix> = spins.iter().map(|m| m.kronecker(&id)).collect();
    let i: Vec<ComplexMatrix> = spins.iter().map(|m| id.kronecker(m)).collect();
    let s_dot_n: ComplexMatrix = (0..3).map(|k| &s[k] * Complex64::new(n[k], 0.0)).sum();
    let i_dot_n: ComplexMatrix = (0..3).map(|k| &i[k] * Complex64::new(n[k], 0.0)).sum();
    let s_dot_i: ComplexMatrix = (0..3).map(|k| &s[k] * &i[k]).sum();
    (s_dot_n * i_dot_n * Complex64::new(3.0, 0.0) - s_dot_i) * Complex64::new(-r.powi(-3), 0.0)
}

/// Secular S_zI_x coupling −3J r⁻³ sinθ cosθ cosφ.
pub fn coupling_g(r: f64, theta: f64, phi: f64, constants: PhysicalConstants) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("distance {r} must be positive")));
    }
    Ok(-3.0 * constants.j * r.powi(-3) * theta.sin() * theta.cos() * phi.cos())
}

/// The same coupling written as J r⁻³(ζ̃₁Y₂¹ + ζ̃₋₁Y₂⁻¹).
pub fn coupling_g_harmonic(r: f64, theta: f64, phi: f64, constants: PhysicalConstants) -> Result<f64> {
    let sum = zeta_tilde_of(1) * y2(1, theta, phi)? + zeta_tilde_of(-1) * y2(-1, theta, phi)?;
    Ok(constants.j * r.powi(-3) * sum.re)
}
