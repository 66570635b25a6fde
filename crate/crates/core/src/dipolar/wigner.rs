//! Rank-2 Wigner small-d matrix.

use nalgebra::Matrix5;

const FACTORIAL: [f64; 5] = [1.0, 1.0, 2.0, 6.0, 24.0];

/// d²_{m m'}(α) for rotation by α about y, indexed `[m + 2, m' + 2]`.
///
/// Uses Wigner's explicit sum; with this convention d²₀₀ = P₂(cos α) and
/// d²₁₀ = −√(3/2) sin α cos α.
pub fn wigner_d2(alpha: f64) -> Matrix5<f64> {
    let (s, c) = (0.5 * alpha).sin_cos();
    Matrix5::from_fn(|row, col| element(row as i32 - 2, col as i32 - 2, c, s))
}

pub fn wigner_d2_element(m: i32, m_prime: i32, alpha: f64) -> f64 {
    let (s, c) = (0.5 * alpha).sin_cos();
    element(m, m_prime, c, s)
}

fn element(m: i32, mp: i32, c: f64, s: f64) -> f64 {
    const J: i32 = 2;
    let fact = |k: i32| FACTORIAL[k as usize];
    let norm = (fact(J + m) * fact(J - m) * fact(J + mp) * fact(J - mp)).sqrt();
    let lo = 0.max(mp - m);
    let hi = (J + mp).min(J - m);
    (lo..=hi)
        .map(|k| {
            let sign = if (k + m - mp) % 2 == 0 { 1.0 } else { -1.0 };
            sign * c.powi(2 * J + mp - m - 2 * k) * s.powi(2 * k + m - mp)
                / (fact(J + mp - k) * fact(k) * fact(J - m - k) * fact(k + m - mp))
        })
        .sum::<f64>()
        * norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dipolar::harmonics::{y2_direction, Direction};
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn identity_at_zero() {
        assert!((wigner_d2(0.0) - Matrix5::identity()).norm() < 1e-15);
    }

    #[test]
    fn legendre_and_known_entries() {
        let d = wigner_d2(PI / 3.0);
        assert!((d[(2, 2)] + 0.125).abs() < 1e-15);
        let a = 0.4_f64;
        assert!((wigner_d2_element(1, 0, a) + (1.5f64).sqrt() * a.sin() * a.cos()).abs() < 1e-15);
        assert!((wigner_d2_element(2, 2, a) - ((1.0 + a.cos()) / 2.0).powi(2)).abs() < 1e-15);
    }

    #[test]
    fn rotates_harmonics() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let alpha = rng.random_range(-PI..PI);
            let dir = Direction::from_angles(rng.random_range(0.0..PI), rng.random_range(-PI..PI));
            // dir is expressed in the rotated frame; `rotated` is the same vector in the fixed frame.
            let rotated = dir.rotate_y(-alpha);
            let d = wigner_d2(alpha);
            for m in -2..=2 {
                let lhs = y2_direction(m, dir).unwrap();
                let rhs: Complex64 = (-2..=2)
                    .map(|mp| d[((m + 2) as usize, (mp + 2) as usize)] * y2_direction(mp, rotated).unwrap())
                    .sum();
                assert!((lhs - rhs).norm() < 1e-10, "m={m}");
            }
        }
    }

    proptest! {
        #[test]
        fn orthogonal(alpha in -10.0..10.0f64) {
            let d = wigner_d2(alpha);
            prop_assert!((d.transpose() * d - Matrix5::identity()).norm() < 1e-12);
        }
    }
}
