//! Semi-implicit finite differences for the transformed equation on `[0, 1]`.
//!
//! Interior nodes use backward Euler with the coefficients frozen at the old
//! state. The axis uses the symmetric ghost `v_{-1} = v_1` together with the
//! limit `v_t = N v_zz / v^2`. The contact condition `v_z(1) = kappa v(1)`,
//! `kappa = k / (1 - k)`, enters through the ghost
//! `v_{M+1} = v_{M-1} + 2 h kappa v_M` with `k` and `v_M` taken from the old
//! step, which keeps the linear system an M-matrix.

use serde::Serialize;

use super::transform::{
    from_transformed, one_sided_end_slope, reconstructed_slopes, to_transformed, unit_grid,
};
use super::{AdmissibleInitial, AngleFunction, Discretization, Snapshot};
use crate::error::{Error, Result};
use crate::tridiag::solve_tridiagonal;

/// Transformed unknown `v` on the uniform grid of `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowState {
    pub t: f64,
    pub v: Vec<f64>,
    /// `G = max(sup |u0'|, k_sup)`: the slope bound every state must respect.
    pub gradient_cap: f64,
}

impl FlowState {
    pub fn from_initial(
        initial: &AdmissibleInitial,
        grid: usize,
        gradient_cap: f64,
    ) -> Result<Self> {
        let v = to_transformed(&initial.r, &initial.u, &initial.du, grid)?;
        Ok(FlowState {
            t: 0.0,
            v,
            gradient_cap,
        })
    }

    /// Free-boundary radius `xi = v(1)`.
    pub fn xi(&self) -> f64 {
        *self.v.last().unwrap()
    }

    pub fn grid(&self) -> usize {
        self.v.len() - 1
    }

    /// One step of length `dt`; returns the new state and the smallest diffusion
    /// coefficient used. A zero step returns the state unchanged.
    pub fn step(
        &self,
        dim: usize,
        angle: &AngleFunction,
        dt: f64,
        slack: f64,
    ) -> Result<(FlowState, f64)> {
        if dt == 0.0 {
            return Ok((self.clone(), f64::INFINITY));
        }
        let v = &self.v;
        let m = self.grid();
        let h = 1.0 / m as f64;
        let h2 = h * h;
        let n1 = (dim - 1) as f64;
        let mut lower = vec![0.0; m + 1];
        let mut diag = vec![0.0; m + 1];
        let mut upper = vec![0.0; m + 1];
        let mut rhs: Vec<f64> = v.iter().map(|x| x / dt).collect();
        let mut min_diffusion = f64::INFINITY;

        let a0 = dim as f64 / (v[0] * v[0]);
        min_diffusion = min_diffusion.min(1.0 / (v[0] * v[0]));
        diag[0] = 1.0 / dt + 2.0 * a0 / h2;
        upper[0] = -2.0 * a0 / h2;

        let coefficients = |i: usize, w: f64| -> Result<(f64, f64)> {
            let zeta = i as f64 * h;
            let s = v[i] + zeta * w;
            let den = s * s + w * w;
            let a = 1.0 / den;
            if !(s > 0.0) || !(a > 0.0) || !a.is_finite() {
                return Err(Error::ParabolicityLoss { zeta, value: a });
            }
            // first-order coefficient multiplying v_z
            let b = n1 / (zeta * v[i] * v[i]) - 2.0 * w / (v[i] * den);
            Ok((a, b))
        };
        for i in 1..m {
            let w = (v[i + 1] - v[i - 1]) / (2.0 * h);
            let (a, b) = coefficients(i, w)?;
            min_diffusion = min_diffusion.min(a);
            lower[i] = -(a / h2 - b / (2.0 * h));
            diag[i] = 1.0 / dt + 2.0 * a / h2;
            upper[i] = -(a / h2 + b / (2.0 * h));
        }
        let k = angle.eval(v[m]);
        let kappa = k / (1.0 - k);
        let w = kappa * v[m];
        let (a, b) = coefficients(m, w)?;
        min_diffusion = min_diffusion.min(a);
        lower[m] = -2.0 * a / h2;
        diag[m] = 1.0 / dt + 2.0 * a / h2;
        rhs[m] += 2.0 * a * w / h + b * w;

        solve_tridiagonal(&lower, &diag, &upper, &mut rhs);
        let next = FlowState {
            t: self.t + dt,
            v: rhs,
            gradient_cap: self.gradient_cap,
        };
        next.check(slack)?;
        Ok((next, min_diffusion))
    }

    /// Positivity, invertibility and the slope bounds `-slack <= u_r <= G + slack`.
    pub fn check(&self, slack: f64) -> Result<()> {
        let reject = |reason: String| {
            Err(Error::StepRejected {
                t: self.t,
                dt: 0.0,
                reason,
            })
        };
        if let Some(i) = self.v.iter().position(|x| !(*x > 0.0)) {
            return reject(format!("v = {} at node {i}", self.v[i]));
        }
        if from_transformed(&self.v).is_err() {
            return reject("r = zeta v lost monotonicity".into());
        }
        let slopes = reconstructed_slopes(&self.v);
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

    /// Contact-condition mismatch with the one-sided end slope.
    pub fn boundary_mismatch(&self, angle: &AngleFunction) -> f64 {
        let m = self.grid();
        let w = one_sided_end_slope(&self.v, 1.0 / m as f64);
        super::boundary_residual(self.v[m], w, angle.eval(self.v[m]))
    }

    pub fn snapshot(&self) -> Snapshot {
        let m = self.grid();
        let zeta = unit_grid(m);
        let r: Vec<f64> = zeta.iter().zip(&self.v).map(|(z, v)| z * v).collect();
        Snapshot {
            t: self.t,
            xi: self.xi(),
            zeta,
            v: self.v.clone(),
            r,
            u: self.v.clone(),
            u_r: reconstructed_slopes(&self.v),
        }
    }
}

impl Discretization for FlowState {
    fn t(&self) -> f64 {
        self.t
    }

    fn contact(&self) -> f64 {
        self.xi()
    }

    fn values(&self) -> &[f64] {
        &self.v
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
        FlowState::snapshot(self)
    }
}
