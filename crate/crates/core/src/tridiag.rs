/// Solves a tridiagonal system with the Thomas algorithm.
///
/// `lower[i]` multiplies `x[i-1]` in row `i` (so `lower[0]` is unused), and
/// `upper[i]` multiplies `x[i+1]` (`upper[n-1]` is unused). The solution
/// overwrites `rhs`. No pivoting: callers pass diagonally dominant systems.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    assert!(n >= 1 && lower.len() == n && upper.len() == n && rhs.len() == n);
    let mut c = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    rhs[0] /= diag[0];
    for i in 1..n {
        let denom = diag[i] - lower[i] * c[i - 1];
        c[i] = upper[i] / denom;
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
}
