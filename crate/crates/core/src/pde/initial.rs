//! Admissible initial graphs.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::pde::AngleFunction;
use crate::selfsimilar::SelfSimilarSolution;

/// A graph `u0` on `[0, xi0]` with `u0(xi0) = xi0`, sampled with its slope.
#[derive(Debug, Clone, Serialize)]
pub struct AdmissibleInitial {
    pub xi0: f64,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
}

/// Collar shape: `g(0) = 0`, `g'(0) = 1`, `g(1) = g'(1) = 0`.
fn collar(s: f64) -> (f64, f64) {
    let t = 1.0 - s;
    (s * t * t, t * (1.0 - 3.0 * s))
}

impl AdmissibleInitial {
    pub fn new(r: Vec<f64>, u: Vec<f64>, du: Vec<f64>) -> Result<Self> {
        if r.len() < 3 || r.len() != u.len() || r.len() != du.len() {
            return Err(invalid(
                "u0",
                "need at least three samples with matching lengths",
            ));
        }
        if r[0] != 0.0 || r.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("u0", "radii must start at 0 and increase"));
        }
        let xi0 = *r.last().unwrap();
        Ok(AdmissibleInitial { xi0, r, u, du })
    }

    /// The snapshot `U(., 0)` of a self-similar solution, with the boundary slope
    /// corrected inside a collar `[xi0 - width, xi0]` so that `u0'(xi0) = k(xi0)`:
    ///
    /// `u0 = U - dk * width * g((xi0 - r) / width)`, `dk = k(xi0) - U_r(xi0)`.
    ///
    /// The correction vanishes with its slope at the inner edge of the collar and
    /// has the sign of `-dk`, so `u0 <= U` whenever the angle exceeds the profile slope.
    pub fn from_self_similar(
        sol: &SelfSimilarSolution,
        angle: &AngleFunction,
        width: f64,
        samples: usize,
    ) -> Result<Self> {
        if samples < 8 {
            return Err(invalid("samples", "need at least 8 samples"));
        }
        let xi0 = sol.radius(0.0);
        if !(xi0 > 0.0) {
            return Err(invalid(
                "time_shift",
                "the self-similar snapshot has zero radius",
            ));
        }
        let dk = angle.eval(xi0) - sol.profile.slope;
        if dk != 0.0 && !(width > 0.0 && width <= xi0) {
            return Err(invalid(
                "collar",
                format!("width {width} must lie in (0, {xi0}]"),
            ));
        }
        let mut r = Vec::with_capacity(samples + 1);
        let mut u = Vec::with_capacity(samples + 1);
        let mut du = Vec::with_capacity(samples + 1);
        for i in 0..=samples {
            let x = if i == samples {
                xi0
            } else {
                xi0 * i as f64 / samples as f64
            };
            let (mut ux, mut dx) = sol.eval_with_slope(x, 0.0)?;
            if dk != 0.0 && x > xi0 - width {
                let (g, dg) = collar((xi0 - x) / width);
                ux -= dk * width * g;
                dx += dk * dg;
            }
            r.push(x);
            u.push(ux);
            du.push(if i == 0 { 0.0 } else { dx });
        }
        // pin the contact data exactly
        u[samples] = xi0;
        du[samples] = angle.eval(xi0);
        Ok(AdmissibleInitial { xi0, r, u, du })
    }

    pub fn sup_slope(&self) -> f64 {
        self.du.iter().fold(0.0, |m, d| m.max(d.abs()))
    }

    /// Checks positivity, the contact conditions and the slope bounds, with `tol`
    /// slack on the equalities.
    pub fn validate(&self, angle: &AngleFunction, tol: f64) -> Result<()> {
        let fail = |m: String| Err(Error::InvariantViolation(m));
        let n = self.r.len() - 1;
        if let Some(i) = self.u.iter().position(|&x| !(x > 0.0)) {
            return fail(format!("u0({}) = {} is not positive", self.r[i], self.u[i]));
        }
        if (self.u[n] - self.xi0).abs() > tol {
            return fail(format!("u0(xi0) = {} but xi0 = {}", self.u[n], self.xi0));
        }
        if self.du[0].abs() > tol {
            return fail(format!("u0'(0) = {}", self.du[0]));
        }
        if (self.du[n] - angle.eval(self.xi0)).abs() > tol {
            return fail(format!(
                "u0'(xi0) = {} but k(xi0) = {}",
                self.du[n],
                angle.eval(self.xi0)
            ));
        }
        if let Some(i) = self.du.iter().position(|d| !(d.abs() < 1.0)) {
            return fail(format!("|u0'| = {} at r = {}", self.du[i].abs(), self.r[i]));
        }
        if let Some(i) = self.du.iter().position(|&d| d < -tol) {
            return fail(format!("u0' = {} < 0 at r = {}", self.du[i], self.r[i]));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{default_eps_schedule, solve_profile, ProfileTolerances};
    use std::sync::Arc;

    fn solution(shift: f64) -> SelfSimilarSolution {
        let prof = solve_profile(
            1,
            0.3,
            &default_eps_schedule(),
            &ProfileTolerances::default(),
        )
        .unwrap();
        SelfSimilarSolution::new(Arc::new(prof), shift).unwrap()
    }

    #[test]
    fn collar_shape() {
        assert_eq!(collar(0.0), (0.0, 1.0));
        assert_eq!(collar(1.0), (0.0, 0.0));
    }

    #[test]
    fn exact_snapshot_is_admissible_for_its_own_slope() {
        let sol = solution(1.0);
        let angle = AngleFunction::constant(0.3).unwrap();
        let init = AdmissibleInitial::from_self_similar(&sol, &angle, 0.0, 200).unwrap();
        init.validate(&angle, 1e-8).unwrap();
        assert!((init.xi0 - sol.radius(0.0)).abs() < 1e-15);
    }

    #[test]
    fn collar_meets_the_angle_and_stays_below() {
        let sol = solution(1.5);
        let angle = AngleFunction::sinusoid(0.3, 0.6, 0.1).unwrap();
        let init = AdmissibleInitial::from_self_similar(&sol, &angle, 0.1, 400).unwrap();
        init.validate(&angle, 1e-8).unwrap();
        for (x, u) in init.r.iter().zip(&init.u) {
            assert!(*u <= sol.eval(*x, 0.0).unwrap() + 1e-12);
            if *x < init.xi0 - 0.1 {
                assert_eq!(*u, sol.eval(*x, 0.0).unwrap());
            }
        }
    }

    #[test]
    fn rejects_bad_graphs() {
        let angle = AngleFunction::constant(0.5).unwrap();
        let init = AdmissibleInitial::new(
            vec![0.0, 0.5, 1.0],
            vec![0.8, 0.9, 1.0],
            vec![0.0, 0.3, 0.5],
        )
        .unwrap();
        init.validate(&angle, 1e-12).unwrap();
        let steep = AdmissibleInitial::new(
            vec![0.0, 0.5, 1.0],
            vec![0.8, 0.9, 1.0],
            vec![0.0, 1.2, 0.5],
        )
        .unwrap();
        assert!(steep.validate(&angle, 1e-12).is_err());
        let off = AdmissibleInitial::new(
            vec![0.0, 0.5, 1.0],
            vec![0.8, 0.9, 1.1],
            vec![0.0, 0.3, 0.5],
        )
        .unwrap();
        assert!(off.validate(&angle, 1e-12).is_err());
        assert!(AdmissibleInitial::new(
            vec![0.1, 0.5, 1.0],
            vec![0.8, 0.9, 1.0],
            vec![0.0, 0.3, 0.5]
        )
        .is_err());
    }
}
