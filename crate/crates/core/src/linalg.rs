//! Dense linear-algebra helpers shared across modules.
//!
//! Thin wrappers over nalgebra factorizations with the conventions used
//! throughout the crate: spectral norms are largest singular values,
//! symmetric eigenproblems symmetrize their input first, and nonsymmetric
//! spectra come from a real Schur form with an explicit iteration cap so
//! failures surface as errors instead of hangs.

use alloc::vec::Vec;
use nalgebra::{Complex, DMatrix, DVector};

/// Iteration cap for the implicit-QR Schur reduction.
const SCHUR_MAX_ITER: usize = 100_000;

/// Spectral norm (largest singular value). Zero for empty matrices.
pub(crate) fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone().singular_values()[0]
}

/// Eigenvalue range `(min, max)` of the symmetric part `(M + M^T) / 2`.
pub(crate) fn symmetric_eigen_range(m: &DMatrix<f64>) -> (f64, f64) {
    let sym = (m + m.transpose()) * 0.5;
    let eigs = sym.symmetric_eigen().eigenvalues;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &lambda in eigs.iter() {
        min = min.min(lambda);
        max = max.max(lambda);
    }
    (min, max)
}

/// Full complex spectrum of a square matrix via the real Schur form.
/// `None` when the QR iteration fails to converge.
pub(crate) fn complex_eigenvalues(m: &DMatrix<f64>) -> Option<Vec<Complex<f64>>> {
    if m.nrows() == 0 {
        return Some(Vec::new());
    }
    let schur = m.clone().try_schur(f64::EPSILON, SCHUR_MAX_ITER)?;
    Some(schur.complex_eigenvalues().iter().copied().collect())
}

/// Numerical rank: count of singular values above `tol` (absolute).
pub(crate) fn rank_with_tol(m: &DMatrix<f64>, tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    m.clone()
        .singular_values()
        .iter()
        .filter(|&&s| s > tol)
        .count()
}

/// Largest absolute entry. Zero for empty matrices.
pub(crate) fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, &x| acc.max(x.abs()))
}

/// Applies the block-expanded operator `(M ⊗ I_n)` to a stacked vector.
///
/// `x` holds `m.ncols()` blocks of length `n`; the result holds
/// `m.nrows()` blocks of length `n`.
pub(crate) fn block_apply(m: &DMatrix<f64>, x: &DVector<f64>, n: usize) -> DVector<f64> {
    let mut out = DVector::zeros(m.nrows() * n);
    block_apply_into(m, x, n, &mut out);
    out
}

/// Allocation-free form of [`block_apply`]; `out` must have length
/// `m.nrows() * n` and is overwritten.
pub(crate) fn block_apply_into(
    m: &DMatrix<f64>,
    x: &DVector<f64>,
    n: usize,
    out: &mut DVector<f64>,
) {
    debug_assert_eq!(x.len(), m.ncols() * n);
    debug_assert_eq!(out.len(), m.nrows() * n);
    out.fill(0.0);
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let c = m[(i, j)];
            if c != 0.0 {
                for d in 0..n {
                    out[i * n + d] += c * x[j * n + d];
                }
            }
        }
    }
}

/// Greedy multiset matching of two complex spectra: every value in `a`
/// must pair with a distinct value in `b` within distance `tol`.
pub(crate) fn spectra_match(a: &[Complex<f64>], b: &[Complex<f64>], tol: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut used = alloc::vec![false; b.len()];
    for &lam in a {
        let mut best: Option<(usize, f64)> = None;
        for (j, &mu) in b.iter().enumerate() {
            if used[j] {
                continue;
            }
            let d = (lam - mu).norm_sqr();
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        match best {
            Some((j, d)) if d <= tol * tol => used[j] = true,
            _ => return false,
        }
    }
    true
}

/// Sorts a complex spectrum by real part, then imaginary part.
pub(crate) fn sort_spectrum(eigs: &mut [Complex<f64>]) {
    eigs.sort_by(|p, q| {
        p.re.total_cmp(&q.re)
            .then_with(|| p.im.total_cmp(&q.im))
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_norm_matches_known_values() {
        let m = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, -4.0]);
        assert!((spectral_norm(&m) - 4.0).abs() < 1e-14);
        assert_eq!(spectral_norm(&DMatrix::<f64>::zeros(0, 3)), 0.0);
    }

    #[test]
    fn block_apply_equals_explicit_kronecker() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, -2.0, 0.5, 0.0, 3.0, -1.0]);
        let x = DVector::from_vec(alloc::vec![1.0, 2.0, -1.0, 0.0, 0.5, 4.0]);
        let n = 2;
        let kron = m.kronecker(&DMatrix::<f64>::identity(n, n));
        let expected = &kron * &x;
        let got = block_apply(&m, &x, n);
        assert!((got - expected).amax() < 1e-14);
    }

    #[test]
    fn spectra_match_pairs_conjugates() {
        let a = [Complex::new(1.0, 2.0), Complex::new(1.0, -2.0)];
        let b = [Complex::new(1.0, -2.0), Complex::new(1.0, 2.0 + 1e-12)];
        assert!(spectra_match(&a, &b, 1e-9));
        let c = [Complex::new(1.0, 2.0), Complex::new(1.0, 2.0)];
        assert!(!spectra_match(&a, &c, 1e-9));
    }

    #[test]
    fn rank_counts_above_tolerance() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(rank_with_tol(&m, 1e-8), 1);
    }
}
