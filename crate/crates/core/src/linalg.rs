//! Small dense symmetric positive-definite solver used by the regressions.

use crate::scalar::Scalar;

/// Solves `A x = b` for symmetric positive-definite `A` (row-major, `d x d`)
/// by Cholesky factorization. Returns `None` when a pivot is not positive
/// relative to the matrix scale, i.e. the system is numerically singular.
pub(crate) fn cholesky_solve<F: Scalar>(a: &[F], b: &[F], d: usize) -> Option<Vec<F>> {
    debug_assert_eq!(a.len(), d * d);
    debug_assert_eq!(b.len(), d);

    let scale = (0..d).map(|i| a[i * d + i].abs()).fold(F::zero(), F::max);
    let tol = F::epsilon() * F::of_usize(d.max(1)) * scale;

    let mut l = vec![F::zero(); d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut s = a[i * d + j];
            for k in 0..j {
                s = s - l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if !(s > tol) || !s.is_finite() {
                    return None;
                }
                l[i * d + i] = s.sqrt();
            } else {
                l[i * d + j] = s / l[j * d + j];
            }
        }
    }

    let mut y = vec![F::zero(); d];
    for i in 0..d {
        let mut s = b[i];
        for k in 0..i {
            s = s - l[i * d + k] * y[k];
        }
        y[i] = s / l[i * d + i];
    }
    let mut x = vec![F::zero(); d];
    for i in (0..d).rev() {
        let mut s = y[i];
        for k in i + 1..d {
            s = s - l[k * d + i] * x[k];
        }
        x[i] = s / l[i * d + i];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_spd_system() {
        let a = [4.0, 2.0, 0.6, 2.0, 5.0, 1.0, 0.6, 1.0, 3.0];
        let x_true = [1.0, -2.0, 0.5];
        let b: Vec<f64> = (0..3)
            .map(|i| (0..3).map(|j| a[i * 3 + j] * x_true[j]).sum())
            .collect();
        let x = cholesky_solve(&a, &b, 3).unwrap();
        for (u, v) in x.iter().zip(x_true) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_singular() {
        let a = [1.0, 1.0, 1.0, 1.0];
        assert!(cholesky_solve(&a, &[1.0, 1.0], 2).is_none());
        assert!(cholesky_solve(&[0.0f64], &[1.0], 1).is_none());
    }
}
