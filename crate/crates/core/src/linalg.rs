//! Small dense complex linear algebra: inner products and a Cholesky-based
//! inverse for Hermitian positive-definite matrices. Matrices here are tiny
//! (per-sub-network Gram matrices), so everything is plain row-major `Vec`.

use num_complex::Complex64;

use crate::error::SimError;

/// Condition-number limit above which a Gram matrix is treated as rank
/// deficient.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Hermitian inner product `sum conj(a_i) * b_i`.
pub fn conj_dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        acc += x.conj() * y;
    }
    acc
}

/// Squared Euclidean norm of a complex vector.
pub fn norm_sq(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

/// Maximum absolute column sum (the induced 1-norm) of a row-major `n x n`
/// matrix.
fn one_norm(a: &[Complex64], n: usize) -> f64 {
    (0..n)
        .map(|j| (0..n).map(|i| a[i * n + j].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Invert a Hermitian positive-definite matrix via its Cholesky factor.
///
/// Returns the inverse and the 1-norm condition number estimate. Fails with
/// [`SimError::RankDeficient`] when a pivot collapses or the condition number
/// exceeds [`CONDITION_LIMIT`].
pub fn hermitian_inverse(a: &[Complex64], n: usize) -> Result<(Vec<Complex64>, f64), SimError> {
    assert_eq!(a.len(), n * n);
    let mut factor = vec![Complex64::new(0.0, 0.0); n * n];

    // Pivot breakdown scale: relative to the largest diagonal entry.
    let diag_max = (0..n).map(|i| a[i * n + i].re).fold(0.0, f64::max);
    let pivot_floor = diag_max * 1e-30 + f64::MIN_POSITIVE;

    for j in 0..n {
        for i in j..n {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= factor[i * n + k] * factor[j * n + k].conj();
            }
            if i == j {
                if sum.re <= pivot_floor {
                    return Err(SimError::RankDeficient {
                        cond: f64::INFINITY,
                        limit: CONDITION_LIMIT,
                    });
                }
                factor[j * n + j] = Complex64::new(sum.re.sqrt(), 0.0);
            } else {
                factor[i * n + j] = sum / factor[j * n + j];
            }
        }
    }

    // Columns of the inverse: solve L y = e_col, then L^H x = y.
    let mut inverse = vec![Complex64::new(0.0, 0.0); n * n];
    let mut work = vec![Complex64::new(0.0, 0.0); n];
    for col in 0..n {
        for x in work.iter_mut() {
            *x = Complex64::new(0.0, 0.0);
        }
        for i in 0..n {
            let mut sum = if i == col {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            for k in 0..i {
                sum -= factor[i * n + k] * work[k];
            }
            work[i] = sum / factor[i * n + i];
        }
        for i in (0..n).rev() {
            let mut sum = work[i];
            for k in (i + 1)..n {
                sum -= factor[k * n + i].conj() * work[k];
            }
            work[i] = sum / factor[i * n + i];
        }
        for i in 0..n {
            inverse[i * n + col] = work[i];
        }
    }

    let cond = one_norm(a, n) * one_norm(&inverse, n);
    if !cond.is_finite() || cond > CONDITION_LIMIT {
        return Err(SimError::RankDeficient {
            cond,
            limit: CONDITION_LIMIT,
        });
    }
    Ok((inverse, cond))
}
