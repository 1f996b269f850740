//! Shape-preserving piecewise cubic Hermite interpolation.

use crate::error::{invalid, Result};

/// Piecewise cubic Hermite interpolant whose node slopes are limited with the
/// Fritsch–Carlson conditions, so monotone data stay monotone between nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl MonotoneCubic {
    /// Builds the interpolant from values and slopes known at the nodes
    /// (slopes are clipped only where they would break monotonicity).
    pub fn from_hermite(x: Vec<f64>, y: Vec<f64>, dy: Vec<f64>) -> Result<Self> {
        check_nodes(&x, &y)?;
        if dy.len() != x.len() {
            return Err(invalid("dy", "slope count differs from node count"));
        }
        let mut m = dy;
        limit_slopes(&x, &y, &mut m);
        Ok(MonotoneCubic { x, y, m })
    }

    /// PCHIP: slopes from weighted harmonic means of the secants.
    pub fn pchip(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        check_nodes(&x, &y)?;
        let n = x.len();
        let delta: Vec<f64> = (0..n - 1)
            .map(|k| (y[k + 1] - y[k]) / (x[k + 1] - x[k]))
            .collect();
        let mut m = vec![0.0; n];
        if n == 2 {
            m[0] = delta[0];
            m[1] = delta[0];
        } else {
            for k in 1..n - 1 {
                if delta[k - 1] * delta[k] > 0.0 {
                    let h0 = x[k] - x[k - 1];
                    let h1 = x[k + 1] - x[k];
                    let w1 = 2.0 * h1 + h0;
                    let w2 = h1 + 2.0 * h0;
                    m[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
                }
            }
            m[0] = end_slope(x[1] - x[0], x[2] - x[1], delta[0], delta[1]);
            m[n - 1] = end_slope(
                x[n - 1] - x[n - 2],
                x[n - 2] - x[n - 3],
                delta[n - 2],
                delta[n - 3],
            );
        }
        limit_slopes(&x, &y, &mut m);
        Ok(MonotoneCubic { x, y, m })
    }

    pub fn x_min(&self) -> f64 {
        self.x[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.x.last().unwrap()
    }

    pub fn nodes(&self) -> (&[f64], &[f64]) {
        (&self.x, &self.y)
    }

    fn locate(&self, t: f64) -> usize {
        let n = self.x.len();
        self.x.partition_point(|&xi| xi <= t).clamp(1, n - 1) - 1
    }

    /// Value and first derivative at `t`; `t` outside the node range is
    /// extrapolated with the end cubic.
    pub fn eval_with_slope(&self, t: f64) -> (f64, f64) {
        let k = self.locate(t);
        let h = self.x[k + 1] - self.x[k];
        let s = (t - self.x[k]) / h;
        let (y0, y1, m0, m1) = (self.y[k], self.y[k + 1], self.m[k] * h, self.m[k + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let v = (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * m0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * m1;
        let d = (6.0 * s2 - 6.0 * s) * y0
            + (3.0 * s2 - 4.0 * s + 1.0) * m0
            + (-6.0 * s2 + 6.0 * s) * y1
            + (3.0 * s2 - 2.0 * s) * m1;
        (v, d / h)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_with_slope(t).0
    }
}

fn check_nodes(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() < 2 || x.len() != y.len() {
        return Err(invalid(
            "x",
            "need at least two nodes and matching value count",
        ));
    }
    if x.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("x", "nodes must be strictly increasing"));
    }
    Ok(())
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}

fn limit_slopes(x: &[f64], y: &[f64], m: &mut [f64]) {
    for k in 0..x.len() - 1 {
        let delta = (y[k + 1] - y[k]) / (x[k + 1] - x[k]);
        if delta == 0.0 {
            m[k] = 0.0;
            m[k + 1] = 0.0;
            continue;
        }
        if m[k] * delta < 0.0 {
            m[k] = 0.0;
        }
        if m[k + 1] * delta < 0.0 {
            m[k + 1] = 0.0;
        }
        let a = m[k] / delta;
        let b = m[k + 1] / delta;
        let r = a * a + b * b;
        if r > 9.0 {
            let tau = 3.0 / r.sqrt();
            m[k] = tau * a * delta;
            m[k + 1] = tau * b * delta;
        }
    }
}
