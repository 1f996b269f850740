//! Periodic contact-slope functions `k(u)`.

use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AngleKind {
    Constant {
        k: f64,
    },
    /// `k0 + (k_sup - k0) (1 + sin(2 pi u / period)) / 2`
    Sinusoid {
        k0: f64,
        k_sup: f64,
        period: f64,
    },
    /// Periodic monotone cubic through `(u, k)` samples covering one period.
    Tabulated {
        period: f64,
        u: Vec<f64>,
        k: Vec<f64>,
        slopes: Vec<f64>,
    },
}

/// An `eps`-periodic contact slope with cached extrema.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AngleFunction {
    #[serde(flatten)]
    kind: AngleKind,
    k0: f64,
    k_sup: f64,
}

fn check_range(name: &'static str, k: f64) -> Result<()> {
    if !(k > 0.0 && k < 1.0) {
        return Err(invalid(name, format!("slope {k} must lie in (0, 1)")));
    }
    Ok(())
}

impl AngleFunction {
    pub fn constant(k: f64) -> Result<Self> {
        check_range("k", k)?;
        Ok(AngleFunction {
            kind: AngleKind::Constant { k },
            k0: k,
            k_sup: k,
        })
    }

    pub fn sinusoid(k0: f64, k_sup: f64, period: f64) -> Result<Self> {
        check_range("k0", k0)?;
        check_range("k_sup", k_sup)?;
        if k_sup < k0 {
            return Err(invalid("k_sup", format!("{k_sup} is below k0 = {k0}")));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(invalid("period", format!("{period} must be positive")));
        }
        Ok(AngleFunction {
            kind: AngleKind::Sinusoid { k0, k_sup, period },
            k0,
            k_sup,
        })
    }

    /// Samples `u` must be strictly increasing inside `[0, period)`; the value at
    /// `u = period` is taken from the first sample.
    pub fn tabulated(period: f64, u: Vec<f64>, k: Vec<f64>) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(invalid("period", format!("{period} must be positive")));
        }
        if u.len() < 2 || u.len() != k.len() {
            return Err(invalid("samples", "need at least two (u, k) pairs"));
        }
        if u.windows(2).any(|w| !(w[1] > w[0])) || u[0] < 0.0 || *u.last().unwrap() >= period {
            return Err(invalid(
                "samples",
                "u must increase strictly inside [0, period)",
            ));
        }
        for &ki in &k {
            check_range("k", ki)?;
        }
        let slopes = periodic_slopes(period, &u, &k);
        let k0 = k.iter().cloned().fold(f64::INFINITY, f64::min);
        let k_sup = k.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Ok(AngleFunction {
            kind: AngleKind::Tabulated {
                period,
                u,
                k,
                slopes,
            },
            k0,
            k_sup,
        })
    }

    pub fn kind(&self) -> &AngleKind {
        &self.kind
    }

    pub fn k0(&self) -> f64 {
        self.k0
    }

    pub fn k_sup(&self) -> f64 {
        self.k_sup
    }

    /// `None` for a constant slope.
    pub fn period(&self) -> Option<f64> {
        match &self.kind {
            AngleKind::Constant { .. } => None,
            AngleKind::Sinusoid { period, .. } | AngleKind::Tabulated { period, .. } => {
                Some(*period)
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        self.k0 == self.k_sup
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.kind {
            AngleKind::Constant { k } => *k,
            AngleKind::Sinusoid { k0, k_sup, period } => {
                if k0 == k_sup {
                    return *k0;
                }
                let v = k0 + (k_sup - k0) * 0.5 * (1.0 + (2.0 * PI * x / period).sin());
                v.clamp(*k0, *k_sup)
            }
            AngleKind::Tabulated {
                period,
                u,
                k,
                slopes,
            } => {
                let s = x.rem_euclid(*period);
                let n = u.len();
                // segment j runs from node j to node j + 1 (wrapping)
                let j = match u.partition_point(|&ui| ui <= s) {
                    0 => n - 1,
                    p => p - 1,
                };
                let (x0, x1) = if j + 1 < n {
                    (u[j], u[j + 1])
                } else {
                    (u[n - 1], u[0] + period)
                };
                let s = if s < x0 { s + period } else { s };
                let (y0, y1) = (k[j], k[(j + 1) % n]);
                let (m0, m1) = (slopes[j], slopes[(j + 1) % n]);
                let h = x1 - x0;
                let t = (s - x0) / h;
                let t2 = t * t;
                let t3 = t2 * t;
                (2.0 * t3 - 3.0 * t2 + 1.0) * y0
                    + (t3 - 2.0 * t2 + t) * h * m0
                    + (-2.0 * t3 + 3.0 * t2) * y1
                    + (t3 - t2) * h * m1
            }
        }
    }

    /// Smallest `u >= from` with `k(u) = k0`, used to anchor barriers.
    pub fn next_minimum(&self, from: f64) -> f64 {
        match &self.kind {
            AngleKind::Constant { .. } => from,
            AngleKind::Sinusoid { k0, k_sup, period } => {
                if k0 == k_sup {
                    return from;
                }
                // sin = -1 at u = 3 period / 4 (mod period)
                let base = 0.75 * period;
                let m = ((from - base) / period).ceil();
                base + m * period
            }
            AngleKind::Tabulated { period, u, k, .. } => {
                let j = (0..u.len()).min_by(|&a, &b| k[a].total_cmp(&k[b])).unwrap();
                let m = ((from - u[j]) / period).ceil();
                u[j] + m * period
            }
        }
    }
}

/// Fritsch–Carlson slopes on a periodic sample, so the interpolant never leaves
/// the range of the samples.
fn periodic_slopes(period: f64, u: &[f64], k: &[f64]) -> Vec<f64> {
    let n = u.len();
    let gap = |j: usize| {
        if j + 1 < n {
            u[j + 1] - u[j]
        } else {
            u[0] + period - u[n - 1]
        }
    };
    let secant = |j: usize| (k[(j + 1) % n] - k[j]) / gap(j);
    (0..n)
        .map(|j| {
            let prev = (j + n - 1) % n;
            let (d0, d1) = (secant(prev), secant(j));
            if d0 * d1 <= 0.0 {
                0.0
            } else {
                let (h0, h1) = (gap(prev), gap(j));
                let w1 = 2.0 * h1 + h0;
                let w2 = h1 + 2.0 * h0;
                (w1 + w2) / (w1 / d0 + w2 / d1)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sinusoid_attains_both_extrema() {
        let a = AngleFunction::sinusoid(0.3, 0.6, 0.2).unwrap();
        assert!((a.eval(0.05) - 0.6).abs() < 1e-14);
        assert!((a.eval(0.15) - 0.3).abs() < 1e-14);
        assert_eq!(a.period(), Some(0.2));
        let m = a.next_minimum(0.33);
        assert!((0.33..0.53).contains(&m));
        assert!((a.eval(m) - 0.3).abs() < 1e-14);
    }

    #[test]
    fn degenerate_sinusoid_is_constant() {
        let a = AngleFunction::sinusoid(0.4, 0.4, 0.1).unwrap();
        assert!(a.is_constant());
        for x in [0.0, 0.013, 7.7] {
            assert_eq!(a.eval(x), 0.4);
        }
    }

    #[test]
    fn rejects_slopes_outside_the_unit_interval() {
        assert!(AngleFunction::constant(1.0).is_err());
        assert!(AngleFunction::sinusoid(0.3, 1.0, 0.1).is_err());
        assert!(AngleFunction::sinusoid(0.5, 0.3, 0.1).is_err());
        assert!(AngleFunction::sinusoid(0.3, 0.5, 0.0).is_err());
        assert!(AngleFunction::tabulated(1.0, vec![0.0, 0.5], vec![0.2, 1.2]).is_err());
        assert!(AngleFunction::tabulated(1.0, vec![0.0, 1.0], vec![0.2, 0.3]).is_err());
    }

    #[test]
    fn tabulated_interpolates_nodes_and_wraps() {
        let a = AngleFunction::tabulated(1.0, vec![0.0, 0.25, 0.5, 0.75], vec![0.3, 0.5, 0.6, 0.4])
            .unwrap();
        assert_eq!(a.k0(), 0.3);
        assert_eq!(a.k_sup(), 0.6);
        for (u, k) in [(0.0, 0.3), (0.25, 0.5), (0.5, 0.6), (0.75, 0.4)] {
            assert!((a.eval(u) - k).abs() < 1e-14);
            assert!((a.eval(u + 3.0) - k).abs() < 1e-12);
        }
        assert!((a.eval(0.999999) - 0.3).abs() < 1e-4);
        assert!((a.next_minimum(0.1) - 1.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn sinusoid_stays_in_range_and_is_periodic(k0 in 0.05f64..0.5, spread in 0.0f64..0.4, eps in 0.01f64..1.0, x in -50.0f64..50.0) {
            let a = AngleFunction::sinusoid(k0, k0 + spread, eps).unwrap();
            let v = a.eval(x);
            prop_assert!(v >= a.k0() && v <= a.k_sup());
            prop_assert!((a.eval(x + eps) - v).abs() < 1e-9);
        }

        #[test]
        fn tabulated_stays_in_range(ks in proptest::collection::vec(0.05f64..0.95, 3..12), x in -5.0f64..5.0) {
            let n = ks.len();
            let u: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
            let a = AngleFunction::tabulated(1.0, u, ks).unwrap();
            let v = a.eval(x);
            prop_assert!(v >= a.k0() - 1e-12 && v <= a.k_sup() + 1e-12);
        }
    }
}
