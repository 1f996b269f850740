//! The change of variables `zeta = r / u(r)` that freezes the free boundary at
//! `zeta = 1`, and the radial reduction of the transformed equation.

use crate::error::{Error, Result};
use crate::interp::MonotoneCubic;

/// Uniform grid `zeta_i = i / m` on `[0, 1]`.
pub fn unit_grid(m: usize) -> Vec<f64> {
    (0..=m).map(|i| i as f64 / m as f64).collect()
}

/// Samples `v(zeta_i) = u(r_i)` where `r_i = zeta_i u(r_i)`.
///
/// `r`, `u`, `du` sample an admissible graph on `[0, xi]` with `u(xi) = xi`;
/// the map `r -> r / u(r)` is invertible as long as `|u_r| < 1`.
pub fn to_transformed(r: &[f64], u: &[f64], du: &[f64], m: usize) -> Result<Vec<f64>> {
    if let Some(i) = du.iter().position(|d| !(d.abs() < 1.0)) {
        return Err(Error::InversionFailure(format!(
            "|u_r| = {} >= 1 at r = {}",
            du[i].abs(),
            r[i]
        )));
    }
    if let Some(i) = u.iter().position(|&x| !(x > 0.0)) {
        return Err(Error::InversionFailure(format!(
            "u = {} is not positive at r = {}",
            u[i], r[i]
        )));
    }
    let xi = *r.last().unwrap();
    let graph = MonotoneCubic::from_hermite(r.to_vec(), u.to_vec(), du.to_vec())
        .map_err(|e| Error::InversionFailure(e.to_string()))?;
    let mut v = Vec::with_capacity(m + 1);
    for zeta in unit_grid(m) {
        // g(x) = x - zeta u(x) increases from -zeta u(0) to xi (1 - zeta)
        let g = |x: f64| {
            let (ux, dx) = graph.eval_with_slope(x);
            (x - zeta * ux, 1.0 - zeta * dx)
        };
        let (mut lo, mut hi) = (0.0, xi);
        let mut x = zeta * xi;
        for _ in 0..100 {
            let (gx, dg) = g(x);
            if gx == 0.0 {
                break;
            }
            if gx < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let newton = x - gx / dg;
            x = if dg > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo < 1e-15 * xi.max(1.0) || gx.abs() < 1e-15 * xi.max(1.0) {
                break;
            }
        }
        v.push(graph.eval(x));
    }
    Ok(v)
}

/// Recovers `(r_i, u_i)` from transformed samples: `r_i = zeta_i v_i`, `u_i = v_i`,
/// with `xi = v(1)`.
pub fn from_transformed(v: &[f64]) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let m = v.len() - 1;
    let r: Vec<f64> = v
        .iter()
        .enumerate()
        .map(|(i, &vi)| i as f64 / m as f64 * vi)
        .collect();
    if r.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InversionFailure(
            "r = zeta v is not increasing".into(),
        ));
    }
    Ok((r, v.to_vec(), v[m]))
}

/// Scalar coefficients of the radial transformed equation
///
/// ```text
/// v_t = diffusion * v_zz + source,   S = v + zeta v_z,
/// diffusion = 1 / (S^2 + v_z^2),
/// source = -2 v_z^2 / (v (S^2 + v_z^2)) + (N - 1) v_z / (zeta v^2).
/// ```
///
/// At `zeta = 0` (`v_z = 0`) this returns `(1 / v^2, 0)`; the tangential term
/// `(N - 1) v_z / zeta` then tends to `(N - 1) v_zz`, giving `v_t = N v_zz / v^2`,
/// which the solvers apply directly.
pub fn radial_coefficients(dim: usize, v: f64, v_z: f64, zeta: f64) -> Result<(f64, f64)> {
    let s = v + zeta * v_z;
    let diffusion = 1.0 / (s * s + v_z * v_z);
    if !(diffusion > 0.0) || !diffusion.is_finite() || !(s > 0.0) {
        return Err(Error::ParabolicityLoss {
            zeta,
            value: diffusion,
        });
    }
    let mut source = -2.0 * v_z * v_z * diffusion / v;
    if zeta > 0.0 {
        source += (dim - 1) as f64 * v_z / (zeta * v * v);
    }
    Ok((diffusion, source))
}

/// Mismatch in the transformed contact condition `(2 v_z + v) / v = (1 + k) / (1 - k)`
/// with `k = k(v(1))`. Zero exactly when `u_r = v_z / (v + v_z) = k` at the contact point.
pub fn boundary_residual(v1: f64, v_z1: f64, k: f64) -> f64 {
    (2.0 * v_z1 + v1) / v1 - (1.0 + k) / (1.0 - k)
}

/// Second-order one-sided `v_z` at the last node of a uniform grid.
pub fn one_sided_end_slope(v: &[f64], h: f64) -> f64 {
    let m = v.len() - 1;
    (3.0 * v[m] - 4.0 * v[m - 1] + v[m - 2]) / (2.0 * h)
}

/// `u_r = v_z / (v + zeta v_z)` at every node, with centered differences inside,
/// zero at the axis and the one-sided slope at `zeta = 1`.
pub fn reconstructed_slopes(v: &[f64]) -> Vec<f64> {
    let m = v.len() - 1;
    let h = 1.0 / m as f64;
    (0..=m)
        .map(|i| {
            let zeta = i as f64 * h;
            let w = if i == 0 {
                0.0
            } else if i == m {
                one_sided_end_slope(v, h)
            } else {
                (v[i + 1] - v[i - 1]) / (2.0 * h)
            };
            w / (v[i] + zeta * w)
        })
        .collect()
}
