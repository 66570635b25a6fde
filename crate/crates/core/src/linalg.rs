//! Small dense helpers on complex Hermitian matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

/// Tolerances used when accepting a matrix as a density matrix.
pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const EIGEN_FLOOR: f64 = -1e-10;

/// Checks Hermiticity, unit trace and positivity within the floor.
pub fn validate_density(rho: &ComplexMatrix) -> Result<()> {
    if !rho.is_square() {
        return Err(Error::NotDensityMatrix(format!(
            "shape {}x{} is not square",
            rho.nrows(),
            rho.ncols()
        )));
    }
    let n = rho.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((rho[(i, j)] - rho[(j, i)].conj()).norm());
        }
    }
    if worst > HERMITIAN_TOL {
        return Err(Error::NotDensityMatrix(format!(
            "Hermiticity violated by {worst:e}"
        )));
    }
    let trace = rho.trace();
    if (trace.re - 1.0).abs() > TRACE_TOL || trace.im.abs() > TRACE_TOL {
        return Err(Error::NotDensityMatrix(format!("trace {trace} is not 1")));
    }
    let min_eig = hermitian_eigen(rho).0.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_eig < EIGEN_FLOOR {
        return Err(Error::NotDensityMatrix(format!(
            "eigenvalue {min_eig:e} below floor"
        )));
    }
    Ok(())
}

/// Eigenvalues (ascending) and eigenvectors of the Hermitian part of `m`.
pub fn hermitian_eigen(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = ComplexMatrix::from_fn(m.nrows(), m.ncols(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (values, vectors)
}

/// Principal square root with eigenvalues clamped at zero.
pub fn psd_sqrt(m: &ComplexMatrix) -> ComplexMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let n = m.nrows();
    let mut scaled = vectors.clone();
    for (c, &lambda) in values.iter().enumerate() {
        let root = lambda.max(0.0).sqrt();
        for r in 0..n {
            scaled[(r, c)] *= root;
        }
    }
    &scaled * vectors.adjoint()
}

/// Uhlmann fidelity Tr sqrt(sqrt(a) b sqrt(a)).
///
/// Evaluated as the trace norm of sqrt(a) sqrt(b). Singular values carry
/// absolute error of order machine epsilon, whereas square-rooting tiny
/// eigenvalues of sqrt(a) b sqrt(a) amplifies rounding to ~1e-8.
pub fn fidelity(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let product = psd_sqrt(a) * psd_sqrt(b);
    product.singular_values().iter().sum()
}

/// 1 − F(a, b) without cancellation against 1.
///
/// With A = √a, B = √b and U the polar factor maximising Re Tr(A B U),
/// ‖A − B U‖²_F = Tr a + Tr b − 2F = 2(1 − F) for unit-trace inputs. The residual is small for nearby states
/// and is stationary in U, so the result keeps full relative precision even
/// when 1 − F is near machine epsilon.
pub fn infidelity(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let (sa, sb) = (psd_sqrt(a), psd_sqrt(b));
    let svd = (&sa * &sb).svd(true, true);
    let (w, v_t) = (svd.u.expect("left vectors"), svd.v_t.expect("right vectors"));
    let u = v_t.adjoint() * w.adjoint();
    let residual = &sa - &sb * u;
    let norm_sq = |m: &ComplexMatrix| m.iter().map(|z| z.norm_sqr()).sum::<f64>();
    0.5 * norm_sq(&residual)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn spectrum(m: &ComplexMatrix) -> Vec<f64> {
    hermitian_eigen(m).0
}
