//! Dormand–Prince 5(4) integrator with continuous extension and event location.
//!
//! The integrator works in either direction of the independent variable, which
//! the shooting code needs (profiles are integrated from `z = 1` towards `z = 0`).
//! Every accepted step keeps its dense-output coefficients so trajectories can be
//! resampled on arbitrary grids after the fact.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// continuous extension (Hairer & Wanner, contd5)
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Error control knobs for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step magnitude; the sign is taken from the integration direction.
    pub h_init: f64,
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
    /// Events are located to this accuracy in the independent variable.
    pub event_tol: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            rtol: 1e-11,
            atol: 1e-12,
            h_init: 1e-3,
            h_max: 0.05,
            h_min: 1e-14,
            max_steps: 200_000,
            event_tol: 1e-12,
        }
    }
}

/// One accepted step together with its interpolation polynomial.
#[derive(Debug, Clone)]
pub struct DenseSegment<const D: usize> {
    pub t0: f64,
    pub h: f64,
    coeff: [[f64; D]; 5],
}

impl<const D: usize> DenseSegment<D> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn contains(&self, t: f64) -> bool {
        let (lo, hi) = if self.h > 0.0 {
            (self.t0, self.t1())
        } else {
            (self.t1(), self.t0)
        };
        t >= lo && t <= hi
    }

    pub fn eval(&self, t: f64) -> [f64; D] {
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        let c = &self.coeff;
        std::array::from_fn(|i| {
            c[0][i] + s * (c[1][i] + s1 * (c[2][i] + s * (c[3][i] + s1 * c[4][i])))
        })
    }
}

/// An event function crossing zero inside an accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventHit<const D: usize> {
    pub index: usize,
    pub t: f64,
    pub y: [f64; D],
}

#[derive(Debug, Clone)]
pub struct Trajectory<const D: usize> {
    /// Accepted step endpoints, starting with the initial point.
    pub t: Vec<f64>,
    pub y: Vec<[f64; D]>,
    pub segments: Vec<DenseSegment<D>>,
    /// The first event that fired, if integration stopped early.
    pub event: Option<EventHit<D>>,
}

impl<const D: usize> Trajectory<D> {
    pub fn last(&self) -> (f64, [f64; D]) {
        match self.event {
            Some(hit) => (hit.t, hit.y),
            None => (*self.t.last().unwrap(), *self.y.last().unwrap()),
        }
    }

    /// Dense-output evaluation anywhere on the covered range.
    pub fn eval(&self, t: f64) -> Option<[f64; D]> {
        // segments are ordered along the integration direction
        let forward = self.segments.first().is_none_or(|s| s.h > 0.0);
        let idx = self
            .segments
            .partition_point(|s| if forward { s.t1() < t } else { s.t1() > t });
        self.segments
            .get(idx)
            .filter(|s| s.contains(t))
            .map(|s| s.eval(t))
    }
}

fn axpy<const D: usize>(y: &[f64; D], h: f64, terms: &[(f64, &[f64; D])]) -> [f64; D] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(a, k)| a * k[i]).sum::<f64>())
}

/// A scalar function of the state whose zeros stop integration.
pub type EventFn<'a, const D: usize> = dyn Fn(f64, &[f64; D]) -> f64 + 'a;

/// Integrates `y' = f(t, y)` from `t0` to `t_end` (either direction).
///
/// `events[j](t, y)` is monitored for sign changes; integration stops at the
/// first zero located, with the crossing placed to `ctl.event_tol`.
pub fn integrate<const D: usize, F>(
    f: F,
    t0: f64,
    y0: [f64; D],
    t_end: f64,
    ctl: &StepControl,
    events: &[&EventFn<'_, D>],
) -> Result<Trajectory<D>>
where
    F: Fn(f64, &[f64; D]) -> [f64; D],
{
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let mut traj = Trajectory {
        t: vec![t0],
        y: vec![y0],
        segments: Vec::new(),
        event: None,
    };
    if t_end == t0 {
        return Ok(traj);
    }
    let span = (t_end - t0).abs();
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let mut h = dir * ctl.h_init.min(span).min(ctl.h_max);
    let mut g_prev: Vec<f64> = events.iter().map(|g| g(t, &y)).collect();
    let mut last_rejected = false;

    for _ in 0..ctl.max_steps {
        if (t_end - t) * dir <= 0.0 {
            return Ok(traj);
        }
        let remaining = t_end - t;
        let mut hit_end = false;
        if (h - remaining) * dir >= 0.0 {
            h = remaining;
            hit_end = true;
        }

        let k2 = f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(
            t + C4 * h,
            &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = f(
            t + C5 * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            t + h,
            &axpy(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let y_new = axpy(
            &y,
            h,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let k7 = f(t + h, &y_new);

        let mut err2 = 0.0;
        let mut finite = true;
        for i in 0..D {
            let e =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sk = ctl.atol + ctl.rtol * y[i].abs().max(y_new[i].abs());
            err2 += (e / sk).powi(2);
            finite &= y_new[i].is_finite() && e.is_finite();
        }
        let err = (err2 / D as f64).sqrt();

        if !finite || err > 1.0 {
            let fac = if finite {
                (0.9 * err.powf(-0.2)).clamp(0.1, 0.9)
            } else {
                0.25
            };
            h *= fac;
            last_rejected = true;
            if h.abs() < ctl.h_min {
                return Err(Error::StepFailure {
                    t,
                    reason: format!("step size underflow (|h| < {})", ctl.h_min),
                });
            }
            continue;
        }

        let ydiff: [f64; D] = std::array::from_fn(|i| y_new[i] - y[i]);
        let bspl: [f64; D] = std::array::from_fn(|i| h * k1[i] - ydiff[i]);
        let seg = DenseSegment {
            t0: t,
            h,
            coeff: [
                y,
                ydiff,
                bspl,
                std::array::from_fn(|i| ydiff[i] - h * k7[i] - bspl[i]),
                std::array::from_fn(|i| {
                    h * (D1 * k1[i]
                        + D3 * k3[i]
                        + D4 * k4[i]
                        + D5 * k5[i]
                        + D6 * k6[i]
                        + D7 * k7[i])
                }),
            ],
        };
        let t_new = if hit_end { t_end } else { t + h };

        // event detection on the accepted step
        let g_new: Vec<f64> = events.iter().map(|g| g(t_new, &y_new)).collect();
        let mut first: Option<EventHit<D>> = None;
        for (j, g) in events.iter().enumerate() {
            if g_prev[j] != 0.0 && g_prev[j].signum() != g_new[j].signum() {
                let (mut a, mut b) = (t, t_new);
                let sa = g_prev[j].signum();
                while (b - a).abs() > ctl.event_tol {
                    let m = 0.5 * (a + b);
                    if g(m, &seg.eval(m)).signum() == sa {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                let te = if g_new[j] == 0.0 && b == t_new {
                    t_new
                } else {
                    0.5 * (a + b)
                };
                let earlier = first.is_none_or(|h0| (te - h0.t) * dir < 0.0);
                if earlier {
                    first = Some(EventHit {
                        index: j,
                        t: te,
                        y: seg.eval(te),
                    });
                }
            }
        }

        traj.segments.push(seg);
        traj.t.push(t_new);
        traj.y.push(y_new);
        if let Some(hit) = first {
            traj.event = Some(hit);
            return Ok(traj);
        }

        t = t_new;
        y = y_new;
        k1 = k7;
        g_prev = g_new;

        let mut fac = (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
        if last_rejected {
            fac = fac.min(1.0);
        }
        last_rejected = false;
        h = dir * (h.abs() * fac).min(ctl.h_max);
    }

    Err(Error::StepFailure {
        t,
        reason: format!("exceeded {} steps", ctl.max_steps),
    })
}
