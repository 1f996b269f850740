//! The first-stage upper candidate `U1 + L1 eps^(1/2) (N t + r^2 / 2)`.

use crate::compare::Candidate;
use crate::error::{invalid, Error, Result};
use crate::selfsimilar::SelfSimilarSolution;

#[derive(Debug, Clone)]
pub struct UpperCandidate {
    /// `U1`, the self-similar solution for `k0` shifted by `s0`.
    pub base: SelfSimilarSolution,
    pub eps: f64,
    pub l1: f64,
}

impl UpperCandidate {
    /// Lower bound for `L1`: `(R1(0) + 4 M0 + 6 (N - 1) k0 (1 + 4 k0^2)) / R1(0)^2`
    /// with `M0 = max Phi''` on the tabulated range.
    pub fn l1_bound(base: &SelfSimilarSolution) -> f64 {
        let prof = &base.profile;
        let m0 = prof.phi_second.iter().cloned().fold(0.0, f64::max);
        let k0 = prof.slope;
        let r1 = base.radius(0.0);
        (r1 + 4.0 * m0 + 6.0 * (prof.dim - 1) as f64 * k0 * (1.0 + 4.0 * k0 * k0)) / (r1 * r1)
    }

    /// `L1 = margin * l1_bound` with `margin > 1`. Fails if the graph does not meet
    /// the cone at `t = 0`, which happens when `eps` is too large.
    pub fn new(base: SelfSimilarSolution, eps: f64, margin: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(invalid("eps", format!("{eps} must be positive")));
        }
        if !(margin > 1.0) {
            return Err(invalid("margin", format!("{margin} must exceed 1")));
        }
        let l1 = margin * Self::l1_bound(&base);
        let c = UpperCandidate { base, eps, l1 };
        c.contact(0.0)?;
        Ok(c)
    }

    fn bump(&self, r: f64, t: f64) -> f64 {
        let n = self.base.profile.dim as f64;
        self.l1 * self.eps.sqrt() * (n * t + 0.5 * r * r)
    }

    pub fn eval(&self, r: f64, t: f64) -> Result<f64> {
        Ok(self.base.eval_extended(r, t)? + self.bump(r, t))
    }

    /// The radius `eta(t)` where the candidate meets the cone, found by bisection on
    /// `[R1(t), reach(t)]`.
    pub fn contact(&self, t: f64) -> Result<f64> {
        let f = |r: f64| self.eval(r, t).map(|u| u - r);
        let (mut lo, mut hi) = (self.base.radius(t), self.base.reach(t));
        if !(f(hi)? < 0.0) {
            return Err(Error::NoConvergence(format!(
                "upper candidate does not meet the cone by r = {hi} at t = {t}"
            )));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid)? > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-14 * hi {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

impl Candidate for UpperCandidate {
    fn value(&self, r: f64, t: f64) -> f64 {
        self.eval(r, t)
            .expect("argument inside the tabulated range")
    }

    fn radius(&self, t: f64) -> f64 {
        self.contact(t).unwrap_or(f64::NAN)
    }
}
