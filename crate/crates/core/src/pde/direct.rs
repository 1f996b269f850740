//! Front fixing in `s = r / xi(t)`: with `w(s, t) = u(s xi, t)`,
//!
//! ```text
//! w_t = w_ss / (xi^2 + w_s^2) + [(N - 1) / (s xi^2) + s xi' / xi] w_s,
//! w_s(0) = 0,  w_s(1) = xi k(w(1)),
//! ```
//!
//! and the contact point follows from differentiating `u(xi, t) = xi`:
//! `xi' = u_t(xi) / (1 - k)` with `u_t(xi) = u_rr / (1 + k^2) + (N - 1) k / xi`.
//! The explicit update of `xi` is corrected each step by the Newton shift
//! `(w(1) - xi) / (1 - k)` so that `u(xi) = xi` does not drift.

use serde::Serialize;

use super::{AdmissibleInitial, AngleFunction, Discretization, Snapshot};
use crate::error::{Error, Result};
use crate::interp::MonotoneCubic;
use crate::tridiag::solve_tridiagonal;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectState {
    pub t: f64,
    pub xi: f64,
    /// `w` on the uniform grid of `s in [0, 1]`.
    pub w: Vec<f64>,
    pub gradient_cap: f64,
}

impl DirectState {
    pub fn from_initial(
        initial: &AdmissibleInitial,
        grid: usize,
        gradient_cap: f64,
    ) -> Result<Self> {
        let graph =
            MonotoneCubic::from_hermite(initial.r.clone(), initial.u.clone(), initial.du.clone())?;
        let xi = initial.xi0;
        let w = (0..=grid)
            .map(|i| graph.eval(xi * i as f64 / grid as f64))
            .collect();
        Ok(DirectState {
            t: 0.0,
            xi,
            w,
            gradient_cap,
        })
    }

    fn grid(&self) -> usize {
        self.w.len() - 1
    }

    pub fn step(
        &self,
        dim: usize,
        angle: &AngleFunction,
        dt: f64,
        slack: f64,
    ) -> Result<(DirectState, f64)> {
        if dt == 0.0 {
            return Ok((self.clone(), f64::INFINITY));
        }
        let w = &self.w;
        let m = self.grid();
        let h = 1.0 / m as f64;
        let h2 = h * h;
        let n1 = (dim - 1) as f64;
        let xi = self.xi;

        let k = angle.eval(w[m]);
        let wss = (2.0 * w[m - 1] - 2.0 * w[m] + 2.0 * h * xi * k) / h2;
        let u_t = wss / (xi * xi) / (1.0 + k * k) + n1 * k / xi;
        let xi_new = xi + dt * u_t / (1.0 - k) + (w[m] - xi) / (1.0 - k);
        if !(xi_new > 0.0) {
            return Err(Error::StepRejected {
                t: self.t,
                dt,
                reason: format!("contact radius {xi_new}"),
            });
        }
        let speed = (xi_new - xi) / dt;
        let x2 = xi_new * xi_new;

        let mut lower = vec![0.0; m + 1];
        let mut diag = vec![0.0; m + 1];
        let mut upper = vec![0.0; m + 1];
        let mut rhs: Vec<f64> = w.iter().map(|x| x / dt).collect();
        let mut min_diffusion = f64::INFINITY;

        let a0 = dim as f64 / x2;
        min_diffusion = min_diffusion.min(1.0 / x2);
        diag[0] = 1.0 / dt + 2.0 * a0 / h2;
        upper[0] = -2.0 * a0 / h2;
        for i in 1..m {
            let s = i as f64 * h;
            let ws = (w[i + 1] - w[i - 1]) / (2.0 * h);
            let a = 1.0 / (x2 + ws * ws);
            let b = n1 / (s * x2) + s * speed / xi_new;
            min_diffusion = min_diffusion.min(a);
            lower[i] = -(a / h2 - b / (2.0 * h));
            diag[i] = 1.0 / dt + 2.0 * a / h2;
            upper[i] = -(a / h2 + b / (2.0 * h));
        }
        let ws = xi_new * k;
        let a = 1.0 / (x2 + ws * ws);
        let b = n1 / x2 + speed / xi_new;
        min_diffusion = min_diffusion.min(a);
        lower[m] = -2.0 * a / h2;
        diag[m] = 1.0 / dt + 2.0 * a / h2;
        rhs[m] += 2.0 * a * ws / h + b * ws;

        solve_tridiagonal(&lower, &diag, &upper, &mut rhs);
        let next = DirectState {
            t: self.t + dt,
            xi: xi_new,
            w: rhs,
            gradient_cap: self.gradient_cap,
        };
        next.check(slack)?;
        Ok((next, min_diffusion))
    }

    fn slopes(&self) -> Vec<f64> {
        let m = self.grid();
        let h = 1.0 / m as f64;
        let w = &self.w;
        (0..=m)
            .map(|i| {
                let ws = if i == 0 {
                    0.0
                } else if i == m {
                    (3.0 * w[m] - 4.0 * w[m - 1] + w[m - 2]) / (2.0 * h)
                } else {
                    (w[i + 1] - w[i - 1]) / (2.0 * h)
                };
                ws / self.xi
            })
            .collect()
    }

    pub fn check(&self, slack: f64) -> Result<()> {
        let reject = |reason: String| {
            Err(Error::StepRejected {
                t: self.t,
                dt: 0.0,
                reason,
            })
        };
        if let Some(i) = self.w.iter().position(|x| !(*x > 0.0)) {
            return reject(format!("u = {} at node {i}", self.w[i]));
        }
        let slopes = self.slopes();
        let (lo, hi) = slopes
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &s| {
                (a.min(s), b.max(s))
            });
        if !(hi <= self.gradient_cap + slack) || !(lo >= -slack) {
            return reject(format!(
                "u_r range [{lo}, {hi}] leaves [-{slack}, {} + {slack}]",
                self.gradient_cap
            ));
        }
        Ok(())
    }

    pub fn snapshot(&self) -> Snapshot {
        let m = self.grid();
        let r: Vec<f64> = (0..=m).map(|i| self.xi * i as f64 / m as f64).collect();
        let zeta = r.iter().zip(&self.w).map(|(x, u)| x / u).collect();
        Snapshot {
            t: self.t,
            xi: self.xi,
            zeta,
            v: self.w.clone(),
            r,
            u: self.w.clone(),
            u_r: self.slopes(),
        }
    }
}

impl Discretization for DirectState {
    fn t(&self) -> f64 {
        self.t
    }

    fn contact(&self) -> f64 {
        self.xi
    }

    fn values(&self) -> &[f64] {
        &self.w
    }

    fn advance(
        &self,
        dim: usize,
        angle: &AngleFunction,
        dt: f64,
        slack: f64,
    ) -> Result<(Self, f64)> {
        self.step(dim, angle, dt, slack)
    }

    fn snapshot(&self) -> Snapshot {
        DirectState::snapshot(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_step_is_identity() {
        let angle = AngleFunction::constant(0.4).unwrap();
        let s = DirectState {
            t: 1.0,
            xi: 1.0,
            w: vec![1.0; 20],
            gradient_cap: 0.4,
        };
        assert_eq!(s.step(1, &angle, 0.0, 1e-3).unwrap().0, s);
    }
}
