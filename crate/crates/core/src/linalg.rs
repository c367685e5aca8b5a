//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Dominant eigenpair of a Metzler matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PerronPair {
    pub eigenvalue: f64,
    /// Left eigenvector normalized to sum 1.
    pub left: Vec<f64>,
}

/// Eigenvalue of largest real part together with its left eigenvector.
///
/// The Perron property is checked after the fact: the eigenvalue must be
/// real and simple, and the left eigenvector must have one strict sign.
pub fn perron(m: &DMatrix<f64>) -> Result<PerronPair> {
    let n = m.nrows();
    if n == 0 || m.ncols() != n {
        return Err(Error::Domain("perron: matrix must be square and non-empty".into()));
    }
    if n == 1 {
        return Ok(PerronPair { eigenvalue: m[(0, 0)], left: vec![1.0] });
    }
    let eig = m.complex_eigenvalues();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig[b].re.total_cmp(&eig[a].re));
    let top = eig[idx[0]];
    let scale = m.amax().max(1.0);
    if top.im.abs() > 1e-9 * scale {
        return Err(Error::Numerical(format!("dominant eigenvalue is not real: {top}")));
    }
    let second = eig[idx[1]];
    if (top.re - second.re).abs() < 1e-12 * scale && second.im.abs() <= 1e-9 * scale {
        return Err(Error::Numerical("dominant eigenvalue is not simple".into()));
    }
    let lambda = top.re;
    let shifted = m.transpose() - DMatrix::identity(n, n) * lambda;
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| Error::Numerical("SVD failed".into()))?;
    let (imin, _) = svd.singular_values.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty");
    let v: Vec<f64> = v_t.row(imin).iter().copied().collect();
    let sum: f64 = v.iter().sum();
    if sum.abs() < 1e-300 {
        return Err(Error::Numerical("left eigenvector sums to zero".into()));
    }
    let left: Vec<f64> = v.iter().map(|x| x / sum).collect();
    if left.iter().any(|&x| x < -1e-10) {
        return Err(Error::Numerical("left Perron vector is not non-negative".into()));
    }
    Ok(PerronPair { eigenvalue: lambda, left })
}

/// Matrix exponential exp(t·A).
pub fn expm(a: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    (a * t).exp()
}

/// Largest eigenvalue of the symmetric part (A + Aᵀ)/2.
pub fn symmetric_part_max_eigenvalue(a: &DMatrix<f64>) -> f64 {
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Spectral abscissa: largest real part of the eigenvalues.
pub fn spectral_abscissa(a: &DMatrix<f64>) -> f64 {
    a.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

/// Solve A x = b by LU with partial pivoting.
pub fn solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    a.clone().lu().solve(b).ok_or_else(|| Error::Numerical("singular linear system".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perron_of_symmetric_generator() {
        let q = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0]);
        let p = perron(&q).unwrap();
        assert!(p.eigenvalue.abs() < 1e-12);
        assert!((p.left[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn expm_of_rotation_generator() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let e = expm(&a, std::f64::consts::FRAC_PI_2);
        assert!((e[(0, 1)] + 1.0).abs() < 1e-12);
        assert!(e[(0, 0)].abs() < 1e-12);
    }

    #[test]
    fn symmetric_part_of_canonical_planar_matrix() {
        let m = DMatrix::from_row_slice(2, 2, &[-1.0, -0.25, 4.0, -1.0]);
        assert!((symmetric_part_max_eigenvalue(&m) - 0.875).abs() < 1e-12);
        assert!((spectral_abscissa(&m) + 1.0).abs() < 1e-12);
    }
}
