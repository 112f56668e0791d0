//! Dense Gaussian elimination with partial pivoting on row-major matrices.

use crate::scalar::Scalar;

/// Solves `a x = b` for square `a` (`n * n`, row-major). Returns `None` when a
/// pivot falls below `pivot_tol` times the largest entry of its column.
pub fn solve<T: Scalar>(a: &[T], b: &[T], pivot_tol: T) -> Option<Vec<T>> {
    let n = b.len();
    debug_assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let (piv, big) = (col..n)
            .map(|r| (r, m[r * n + col].abs()))
            .fold((col, T::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
        let scale = (0..n).fold(T::zero(), |acc, r| acc.max(a[r * n + col].abs()));
        if big <= pivot_tol * scale.max(T::one()) || big == T::zero() {
            return None;
        }
        if piv != col {
            for k in 0..n {
                m.swap(piv * n + k, col * n + k);
            }
            x.swap(piv, col);
        }
        let p = m[col * n + col];
        for r in col + 1..n {
            let f = m[r * n + col] / p;
            if f == T::zero() {
                continue;
            }
            for k in col..n {
                let v = m[col * n + k];
                m[r * n + k] -= f * v;
            }
            let v = x[col];
            x[r] -= f * v;
        }
    }
    for r in (0..n).rev() {
        let mut s = x[r];
        for k in r + 1..n {
            s -= m[r * n + k] * x[k];
        }
        x[r] = s / m[r * n + r];
    }
    Some(x)
}

/// Inverse of a square row-major matrix by Gauss-Jordan elimination.
pub fn invert<T: Scalar>(a: &[T], n: usize, pivot_tol: T) -> Option<Vec<T>> {
    debug_assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut inv = vec![T::zero(); n * n];
    for i in 0..n {
        inv[i * n + i] = T::one();
    }
    for col in 0..n {
        let (piv, big) = (col..n)
            .map(|r| (r, m[r * n + col].abs()))
            .fold((col, T::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
        if big <= pivot_tol {
            return None;
        }
        if piv != col {
            for k in 0..n {
                m.swap(piv * n + k, col * n + k);
                inv.swap(piv * n + k, col * n + k);
            }
        }
        let p = m[col * n + col];
        // Only the pivot row's nonzeros take part in the elimination, which
        // keeps sparse matrices cheap.
        let nz_m: Vec<usize> = (0..n).filter(|&k| m[col * n + k] != T::zero()).collect();
        let nz_inv: Vec<usize> = (0..n).filter(|&k| inv[col * n + k] != T::zero()).collect();
        for &k in &nz_m {
            m[col * n + k] /= p;
        }
        for &k in &nz_inv {
            inv[col * n + k] /= p;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m[r * n + col];
            if f == T::zero() {
                continue;
            }
            for &k in &nz_m {
                let mv = m[col * n + k];
                m[r * n + k] -= f * mv;
            }
            for &k in &nz_inv {
                let iv = inv[col * n + k];
                inv[r * n + k] -= f * iv;
            }
        }
    }
    Some(inv)
}
