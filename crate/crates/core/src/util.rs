//! Small numeric helpers.

/// Pairwise (fixed-tree) summation.
///
/// Every reduction of quadrature values in the crate goes through this
/// function so that results do not depend on traversal or thread order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        2 => v[0] + v[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
        }
    }
}

/// Pairwise sum of `f(i)` over `i in 0..n` without materializing a buffer.
pub fn pairwise_sum_by<F: Fn(usize) -> f64 + Copy>(n: usize, f: F) -> f64 {
    fn rec<F: Fn(usize) -> f64 + Copy>(lo: usize, hi: usize, f: F) -> f64 {
        match hi - lo {
            0 => 0.0,
            1 => f(lo),
            2 => f(lo) + f(lo + 1),
            _ => {
                let mid = lo + (hi - lo) / 2;
                rec(lo, mid, f) + rec(mid, hi, f)
            }
        }
    }
    rec(0, n, f)
}

/// Dot product with pairwise reduction.
pub fn pairwise_dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    pairwise_sum_by(a.len(), |i| a[i] * b[i])
}

/// Least-squares fit of `y = a + b x`; returns `(a, b, rms_residual)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    assert!(x.len() >= 2, "linear fit needs at least two points");
    let sx = pairwise_sum(x);
    let sy = pairwise_sum(y);
    let sxx = pairwise_dot(x, x);
    let sxy = pairwise_dot(x, y);
    let det = n * sxx - sx * sx;
    let b = (n * sxy - sx * sy) / det;
    let a = (sy - b * sx) / n;
    let mut ss = 0.0;
    for i in 0..x.len() {
        let r = y[i] - a - b * x[i];
        ss += r * r;
    }
    (a, b, (ss / n).sqrt())
}
