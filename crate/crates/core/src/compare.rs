//! The graph order `w1 <= w2`, residual checks for lower and upper solutions, and
//! the stationary barrier used to block the contact point.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::interp::MonotoneCubic;
use crate::ode::{integrate, StepControl};
use crate::pde::{AngleFunction, Snapshot};
use crate::selfsimilar::SelfSimilarSolution;

/// A graph on `[0, xi]` that ends on the cone, `w(xi) = xi`.
#[derive(Debug, Clone)]
pub struct OrderedGraph {
    pub xi: f64,
    pub r: Vec<f64>,
    pub w: Vec<f64>,
    interp: MonotoneCubic,
}

impl OrderedGraph {
    pub fn new(r: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        if r.len() < 2 || r[0] != 0.0 {
            return Err(invalid("graph", "samples must start at r = 0"));
        }
        if w.iter().any(|x| !(*x > 0.0)) {
            return Err(invalid("graph", "values must be positive"));
        }
        let xi = *r.last().unwrap();
        let end = *w.last().unwrap();
        if (end - xi).abs() > 1e-9 * xi.max(1.0) {
            return Err(invalid("graph", format!("w(xi) = {end} but xi = {xi}")));
        }
        let interp = MonotoneCubic::pchip(r.clone(), w.clone())?;
        Ok(OrderedGraph { xi, r, w, interp })
    }

    pub fn from_snapshot(s: &Snapshot) -> Result<Self> {
        OrderedGraph::new(s.r.clone(), s.u.clone())
    }

    /// Samples `f` on `n` equal intervals of `[0, xi]`, pinning the end value to `xi`.
    pub fn from_fn(xi: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let r: Vec<f64> = (0..=n).map(|i| xi * i as f64 / n as f64).collect();
        let mut w: Vec<f64> = r.iter().map(|&x| f(x)).collect();
        w[n] = xi;
        OrderedGraph::new(r, w)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.interp.eval(x)
    }
}

/// Outcome of an order test, with the worst violation found.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderWitness {
    pub holds: bool,
    /// Largest `w1 - w2` on the common range (zero if none is positive).
    pub max_violation: f64,
    pub at_r: Option<f64>,
    /// `xi1 - xi2`; positive means the first graph reaches further.
    pub xi_excess: f64,
}

/// Tests `w1 <= w2`: `xi1 <= xi2` and `w1 <= w2` on `[0, xi1]`, up to `tol`.
///
/// Values are compared at the nodes of both graphs inside the common range and at
/// its right end.
pub fn preceq(w1: &OrderedGraph, w2: &OrderedGraph, tol: f64) -> OrderWitness {
    let end = w1.xi.min(w2.xi);
    let mut worst = 0.0;
    let mut at_r = None;
    let points =
        w1.r.iter()
            .chain(w2.r.iter())
            .cloned()
            .filter(|&x| x <= end)
            .chain(std::iter::once(end));
    for x in points {
        let gap = w1.eval(x) - w2.eval(x);
        if gap > worst {
            worst = gap;
            at_r = Some(x);
        }
    }
    let xi_excess = w1.xi - w2.xi;
    OrderWitness {
        holds: worst <= tol && xi_excess <= tol,
        max_violation: worst,
        at_r,
        xi_excess,
    }
}

/// A function of `(r, t)` together with its contact radius, as needed by the
/// residual checks. `value` must be defined slightly beyond `radius(t)`.
pub trait Candidate {
    fn value(&self, r: f64, t: f64) -> f64;
    fn radius(&self, t: f64) -> f64;
}

impl Candidate for SelfSimilarSolution {
    fn value(&self, r: f64, t: f64) -> f64 {
        self.eval_extended(r, t)
            .expect("argument inside the tabulated range")
    }

    fn radius(&self, t: f64) -> f64 {
        SelfSimilarSolution::radius(self, t)
    }
}

/// Largest positive parts of the interior and boundary defects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualReport {
    pub interior: f64,
    pub boundary: f64,
    /// Signed extremes before taking positive parts, for diagnostics.
    pub interior_signed: f64,
    pub boundary_signed: f64,
}

impl ResidualReport {
    pub fn is_valid(&self, tol: f64) -> bool {
        self.interior <= tol && self.boundary <= tol
    }
}

/// Interior defect `u_t - u_rr / (1 + u_r^2) - (N - 1) u_r / r` and boundary
/// defect `u_r - k(u)` at the contact point, by centered differences on a grid of
/// `n` intervals over `[0, radius(t)]`.
fn defects(
    c: &dyn Candidate,
    angle: &AngleFunction,
    dim: usize,
    t: f64,
    n: usize,
) -> (Vec<f64>, f64) {
    let eta = c.radius(t);
    let h = eta / n as f64;
    let dt = h;
    let n1 = (dim - 1) as f64;
    let interior = (1..n)
        .map(|i| {
            let r = i as f64 * h;
            let (um, u0, up) = (c.value(r - h, t), c.value(r, t), c.value(r + h, t));
            let ur = (up - um) / (2.0 * h);
            let urr = (up - 2.0 * u0 + um) / (h * h);
            let ut = (c.value(r, t + dt) - c.value(r, t - dt)) / (2.0 * dt);
            ut - urr / (1.0 + ur * ur) - n1 * ur / r
        })
        .collect();
    let ur =
        (3.0 * c.value(eta, t) - 4.0 * c.value(eta - h, t) + c.value(eta - 2.0 * h, t)) / (2.0 * h);
    (interior, ur - angle.eval(c.value(eta, t)))
}

fn report(values: impl Iterator<Item = (f64, f64)>) -> ResidualReport {
    let (mut i_max, mut b_max) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (i, b) in values {
        i_max = i_max.max(i);
        b_max = b_max.max(b);
    }
    ResidualReport {
        interior: i_max.max(0.0),
        boundary: b_max.max(0.0),
        interior_signed: i_max,
        boundary_signed: b_max,
    }
}

/// A lower solution has `u_t <= L u` inside and `u_r <= k(u)` at the contact point.
pub fn lower_solution_residual(
    c: &dyn Candidate,
    angle: &AngleFunction,
    dim: usize,
    times: &[f64],
    n: usize,
) -> ResidualReport {
    report(times.iter().map(|&t| {
        let (interior, boundary) = defects(c, angle, dim, t, n);
        (
            interior.into_iter().fold(f64::NEG_INFINITY, f64::max),
            boundary,
        )
    }))
}

/// An upper solution has `u_t >= L u` inside and `u_r >= k(u)` at the contact point.
pub fn upper_solution_residual(
    c: &dyn Candidate,
    angle: &AngleFunction,
    dim: usize,
    times: &[f64],
    n: usize,
) -> ResidualReport {
    report(times.iter().map(|&t| {
        let (interior, boundary) = defects(c, angle, dim, t, n);
        (
            interior
                .into_iter()
                .map(|d| -d)
                .fold(f64::NEG_INFINITY, f64::max),
            -boundary,
        )
    }))
}

/// Stationary solution of `v_rr / (1 + v_r^2) + (N - 1) v_r / r = 0` anchored at
/// `v(r*) = r*`, `v_r(r*) = k0`, sampled for decreasing `r`.
#[derive(Debug, Clone, Serialize)]
pub struct Barrier {
    pub r_star: f64,
    pub k0: f64,
    pub dim: usize,
    pub r: Vec<f64>,
    pub v: Vec<f64>,
    pub v_r: Vec<f64>,
    pub v_rr: Vec<f64>,
}

impl Barrier {
    /// `K = 2 (N - 1) k0 (1 + 4 k0^2)`, the bound on `-r v_rr` while `v_r <= 2 k0`.
    pub fn slope_constant(&self) -> f64 {
        2.0 * (self.dim - 1) as f64 * self.k0 * (1.0 + 4.0 * self.k0 * self.k0)
    }

    /// Smallest radius reached.
    pub fn r_min(&self) -> f64 {
        *self.r.last().unwrap()
    }

    /// `(v, v_r)` at `x` inside the sampled range.
    pub fn eval(&self, x: f64) -> Option<(f64, f64)> {
        if x > self.r_star || x < self.r_min() {
            return None;
        }
        // samples are decreasing in r
        let j = self
            .r
            .partition_point(|&ri| ri > x)
            .clamp(1, self.r.len() - 1);
        let (r0, r1) = (self.r[j - 1], self.r[j]);
        let h = r1 - r0;
        let s = (x - r0) / h;
        let (y0, y1, m0, m1) = (
            self.v[j - 1],
            self.v[j],
            self.v_r[j - 1] * h,
            self.v_r[j] * h,
        );
        let s2 = s * s;
        let s3 = s2 * s;
        let v = (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * m0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * m1;
        let d = ((6.0 * s2 - 6.0 * s) * y0
            + (3.0 * s2 - 4.0 * s + 1.0) * m0
            + (-6.0 * s2 + 6.0 * s) * y1
            + (3.0 * s2 - 2.0 * s) * m1)
            / h;
        Some((v, d))
    }
}

/// Integrates the barrier from `r*` towards the axis until `v_r = 2 k0` or
/// `r = r* / 4`. Samples `samples` equal steps of the covered range.
pub fn barrier_solve(r_star: f64, k0: f64, dim: usize, samples: usize) -> Result<Barrier> {
    if !(r_star > 0.0) {
        return Err(invalid("r_star", format!("{r_star} must be positive")));
    }
    if !(k0 > 0.0 && k0 < 1.0) {
        return Err(invalid("k0", format!("{k0} is not in (0, 1)")));
    }
    if dim < 1 || samples < 2 {
        return Err(invalid("dim", "need dim >= 1 and at least two samples"));
    }
    let floor = r_star / 4.0;
    let n1 = (dim - 1) as f64;
    if dim == 1 {
        let r: Vec<f64> = (0..=samples)
            .map(|i| r_star - (r_star - floor) * i as f64 / samples as f64)
            .collect();
        let v = r.iter().map(|&x| r_star + k0 * (x - r_star)).collect();
        let n = r.len();
        return Ok(Barrier {
            r_star,
            k0,
            dim,
            r,
            v,
            v_r: vec![k0; n],
            v_rr: vec![0.0; n],
        });
    }
    let rhs = move |r: f64, y: &[f64; 2]| [y[1], -(1.0 + y[1] * y[1]) * n1 * y[1] / r];
    let steep = |_: f64, y: &[f64; 2]| 2.0 * k0 - y[1];
    let ctl = StepControl {
        rtol: 1e-13,
        atol: 1e-14,
        h_init: 1e-4 * r_star,
        h_max: 0.01 * r_star,
        ..StepControl::default()
    };
    let traj = integrate(rhs, r_star, [r_star, k0], floor, &ctl, &[&steep])?;
    let end = traj.event.map_or(floor, |hit| hit.t);
    let mut r = Vec::with_capacity(samples + 1);
    let mut v = Vec::with_capacity(samples + 1);
    let mut v_r = Vec::with_capacity(samples + 1);
    let mut v_rr = Vec::with_capacity(samples + 1);
    for i in 0..=samples {
        let x = if i == samples {
            end
        } else {
            r_star - (r_star - end) * i as f64 / samples as f64
        };
        let y = match (i, traj.event) {
            (i, Some(hit)) if i == samples => hit.y,
            _ => traj.eval(x).unwrap_or_else(|| traj.last().1),
        };
        r.push(x);
        v.push(y[0]);
        v_r.push(y[1]);
        v_rr.push(rhs(x, &y)[1]);
    }
    Ok(Barrier {
        r_star,
        k0,
        dim,
        r,
        v,
        v_r,
        v_rr,
    })
}
