//! Self-similar solutions `U(r, t) = R * Phi(r / R)` with `R = sqrt(2 P (t + shift))`.

use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::profile::SelfSimilarProfile;

/// A member of the self-similar family, shifted in time.
#[derive(Debug, Clone)]
pub struct SelfSimilarSolution {
    pub profile: Arc<SelfSimilarProfile>,
    pub time_shift: f64,
}

impl SelfSimilarSolution {
    pub fn new(profile: Arc<SelfSimilarProfile>, time_shift: f64) -> Result<Self> {
        if !(time_shift >= 0.0 && time_shift.is_finite()) {
            return Err(invalid(
                "time_shift",
                format!("{time_shift} must be non-negative"),
            ));
        }
        Ok(SelfSimilarSolution {
            profile,
            time_shift,
        })
    }

    pub fn p(&self) -> f64 {
        self.profile.p
    }

    /// Free-boundary radius `sqrt(2 P (t + shift))`, where `U(R, t) = R`.
    pub fn radius(&self, t: f64) -> f64 {
        (2.0 * self.profile.p * (t + self.time_shift)).sqrt()
    }

    /// Largest radius at which the stored profile (with its extension) applies.
    pub fn reach(&self, t: f64) -> f64 {
        self.radius(t) * self.profile.z_max()
    }

    fn scaled(&self, r: f64, t: f64) -> Result<(f64, f64)> {
        if !(r >= 0.0) || !(t + self.time_shift > 0.0) {
            return Err(invalid(
                "r",
                format!("need r >= 0 and t + shift > 0, got r = {r}, t = {t}"),
            ));
        }
        let big_r = self.radius(t);
        let z = r / big_r;
        if z > self.profile.z_max() + 1e-12 {
            return Err(Error::OutOfRange {
                value: z,
                max: self.profile.z_max(),
            });
        }
        Ok((big_r, z.min(self.profile.z_max())))
    }

    /// `U(r, t)`.
    pub fn eval(&self, r: f64, t: f64) -> Result<f64> {
        let (big_r, z) = self.scaled(r, t)?;
        Ok(big_r * self.profile.eval(z)?.0)
    }

    /// `(U, U_r)` at `(r, t)`.
    pub fn eval_with_slope(&self, r: f64, t: f64) -> Result<(f64, f64)> {
        let (big_r, z) = self.scaled(r, t)?;
        let (f, df) = self.profile.eval(z)?;
        Ok((big_r * f, df))
    }

    /// `U_t = (P / R) (Phi - z Phi')`, positive because the profile is convex.
    pub fn time_derivative(&self, r: f64, t: f64) -> Result<f64> {
        let (big_r, z) = self.scaled(r, t)?;
        let (f, df) = self.profile.eval(z)?;
        Ok(self.profile.p / big_r * (f - z * df))
    }

    /// `U` continued linearly past the tabulated range with the end slope. Used
    /// where a comparison needs a value slightly beyond `R (1 + a)`.
    pub fn eval_extended(&self, r: f64, t: f64) -> Result<f64> {
        let reach = self.reach(t);
        if r <= reach {
            return self.eval(r, t);
        }
        let (u_end, slope) = self.eval_with_slope(reach, t)?;
        Ok(u_end + slope * (r - reach))
    }
}
