//! Row-major matrix products backed by `matrixmultiply`.
//!
//! All three forms accumulate into `c` (beta = 1).

fn check(len: usize, rows: usize, cols: usize, what: &str) {
    assert!(
        len >= rows * cols,
        "{what}: buffer of {len} too small for {rows}x{cols}"
    );
}

/// `c[m,n] += a[m,k] · b[k,n]`
pub(crate) fn matmul_acc(a: &[f64], b: &[f64], c: &mut [f64], m: usize, k: usize, n: usize) {
    if m == 0 || k == 0 || n == 0 {
        return;
    }
    check(a.len(), m, k, "a");
    check(b.len(), k, n, "b");
    check(c.len(), m, n, "c");
    // SAFETY: extents checked above; all strides are row-major and in bounds.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            k as isize,
            1,
            b.as_ptr(),
            n as isize,
            1,
            1.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// `c[m,n] += a[k,m]ᵀ · b[k,n]`
pub(crate) fn matmul_tn_acc(a: &[f64], b: &[f64], c: &mut [f64], m: usize, k: usize, n: usize) {
    if m == 0 || k == 0 || n == 0 {
        return;
    }
    check(a.len(), k, m, "a");
    check(b.len(), k, n, "b");
    check(c.len(), m, n, "c");
    // SAFETY: `a` is read as its transpose via swapped strides; extents checked.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            1,
            m as isize,
            b.as_ptr(),
            n as isize,
            1,
            1.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// `c[m,n] += a[m,k] · b[n,k]ᵀ`
pub(crate) fn matmul_nt_acc(a: &[f64], b: &[f64], c: &mut [f64], m: usize, k: usize, n: usize) {
    if m == 0 || k == 0 || n == 0 {
        return;
    }
    check(a.len(), m, k, "a");
    check(b.len(), n, k, "b");
    check(c.len(), m, n, "c");
    // SAFETY: `b` is read as its transpose via swapped strides; extents checked.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            k as isize,
            1,
            b.as_ptr(),
            1,
            k as isize,
            1.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
        let mut c = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                for p in 0..k {
                    c[i * n + j] += a[i * k + p] * b[p * n + j];
                }
            }
        }
        c
    }

    fn transpose(x: &[f64], rows: usize, cols: usize) -> Vec<f64> {
        let mut t = vec![0.0; x.len()];
        for r in 0..rows {
            for c in 0..cols {
                t[c * rows + r] = x[r * cols + c];
            }
        }
        t
    }

    #[test]
    fn transposed_forms_agree_with_naive() {
        let (m, k, n) = (3, 5, 4);
        let a: Vec<f64> = (0..m * k).map(|i| i as f64 * 0.5 - 2.0).collect();
        let b: Vec<f64> = (0..k * n).map(|i| (i % 7) as f64 - 3.0).collect();
        let want = naive(&a, &b, m, k, n);

        let mut c = vec![0.0; m * n];
        matmul_acc(&a, &b, &mut c, m, k, n);
        assert_eq!(c, want);

        let mut c = vec![0.0; m * n];
        matmul_tn_acc(&transpose(&a, m, k), &b, &mut c, m, k, n);
        assert_eq!(c, want);

        let mut c = vec![0.0; m * n];
        matmul_nt_acc(&a, &transpose(&b, k, n), &mut c, m, k, n);
        assert_eq!(c, want);
    }
}
