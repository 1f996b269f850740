//! The radially symmetric free-boundary flow
//!
//! ```text
//! u_t = u_rr / (1 + u_r^2) + (N - 1) u_r / r,   0 < r < xi(t),
//! u_r(0, t) = 0,  u(xi, t) = xi,  u_r(xi, t) = k(u(xi, t)),
//! ```
//!
//! solved either in the transformed variable `v(zeta, t) = u(zeta v, t)` on the
//! fixed interval `[0, 1]` ([`transformed`]) or by front fixing `s = r / xi(t)`
//! ([`direct`]), which serves as an independent cross-check.

pub mod angle;
pub mod direct;
pub mod initial;
pub mod transform;
pub mod transformed;

use serde::Serialize;

pub use angle::{AngleFunction, AngleKind};
pub use direct::DirectState;
pub use initial::AdmissibleInitial;
pub use transform::{boundary_residual, from_transformed, radial_coefficients, to_transformed};
pub use transformed::FlowState;

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Transformed,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum TimeStepping {
    Fixed {
        dt: f64,
    },
    /// Step grows by `growth` after each accepted step and halves on rejection.
    Adaptive {
        dt_init: f64,
        dt_min: f64,
        dt_max: f64,
        max_change: f64,
        growth: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Number of grid intervals on the fixed domain.
    pub grid: usize,
    pub stepping: TimeStepping,
    pub scheme: Scheme,
    /// The contact point may move by at most this fraction of the angle period per step.
    pub boundary_fraction: f64,
    /// Slack on the slope bounds `-slack <= u_r <= G + slack` checked after each step.
    pub gradient_slack: f64,
    pub max_steps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            grid: 200,
            stepping: TimeStepping::Adaptive {
                dt_init: 1e-4,
                dt_min: 1e-12,
                dt_max: 0.05,
                max_change: 2e-3,
                growth: 1.25,
            },
            scheme: Scheme::Transformed,
            boundary_fraction: 0.125,
            gradient_slack: 5e-3,
            max_steps: 10_000_000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid < 16 {
            return Err(invalid(
                "grid",
                format!("{} intervals; need at least 16", self.grid),
            ));
        }
        match self.stepping {
            TimeStepping::Fixed { dt } if !(dt > 0.0) => {
                return Err(invalid("dt", format!("{dt} must be positive")))
            }
            TimeStepping::Adaptive {
                dt_init,
                dt_min,
                dt_max,
                max_change,
                growth,
            } => {
                if !(dt_min > 0.0 && dt_min <= dt_init && dt_init <= dt_max) {
                    return Err(invalid("dt", "need 0 < dt_min <= dt_init <= dt_max"));
                }
                if !(max_change > 0.0) || !(growth >= 1.0) {
                    return Err(invalid(
                        "stepping",
                        "max_change must be positive and growth >= 1",
                    ));
                }
            }
            _ => {}
        }
        if !(self.boundary_fraction > 0.0) || !(self.gradient_slack >= 0.0) {
            return Err(invalid(
                "tolerances",
                "boundary_fraction must be positive and gradient_slack non-negative",
            ));
        }
        Ok(())
    }
}

/// The solution at one time in physical variables, shared by both schemes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub t: f64,
    pub xi: f64,
    pub zeta: Vec<f64>,
    pub v: Vec<f64>,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub u_r: Vec<f64>,
}

impl Snapshot {
    pub fn max_slope(&self) -> f64 {
        self.u_r.iter().fold(f64::NEG_INFINITY, |m, &d| m.max(d))
    }

    pub fn min_slope(&self) -> f64 {
        self.u_r.iter().fold(f64::INFINITY, |m, &d| m.min(d))
    }

    /// `u` at `x in [0, xi]` by monotone cubic interpolation of the nodes.
    pub fn interpolant(&self) -> Result<crate::interp::MonotoneCubic> {
        crate::interp::MonotoneCubic::from_hermite(self.r.clone(), self.u.clone(), self.u_r.clone())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EvolutionStats {
    pub steps: usize,
    pub rejected: usize,
    pub max_slope: f64,
    pub min_slope: f64,
    pub min_diffusion: f64,
    pub last_dt: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Evolution {
    pub snapshots: Vec<Snapshot>,
    pub stats: EvolutionStats,
}

impl Evolution {
    pub fn last(&self) -> &Snapshot {
        self.snapshots
            .last()
            .expect("an evolution always records the initial state")
    }
}

/// Common interface of the two discretizations.
pub(crate) trait Discretization: Sized {
    fn t(&self) -> f64;
    fn contact(&self) -> f64;
    fn values(&self) -> &[f64];
    fn advance(
        &self,
        dim: usize,
        angle: &AngleFunction,
        dt: f64,
        slack: f64,
    ) -> Result<(Self, f64)>;
    fn snapshot(&self) -> Snapshot;
}

/// Evolves `initial` to `t_end`, recording snapshots at `t = 0`, at each time in
/// `outputs` (clipped to `(0, t_end]`) and at `t_end`.
pub fn evolve(
    initial: &AdmissibleInitial,
    angle: &AngleFunction,
    dim: usize,
    config: &SolverConfig,
    t_end: f64,
    outputs: &[f64],
) -> Result<Evolution> {
    evolve_observed(initial, angle, dim, config, t_end, outputs, |_| {})
}

/// The direct front-fixing discretization; same contract as [`evolve`].
pub fn solve_direct(
    initial: &AdmissibleInitial,
    angle: &AngleFunction,
    dim: usize,
    config: &SolverConfig,
    t_end: f64,
    outputs: &[f64],
) -> Result<Evolution> {
    let config = SolverConfig {
        scheme: Scheme::Direct,
        ..*config
    };
    evolve(initial, angle, dim, &config, t_end, outputs)
}

/// Like [`evolve`], calling `observe` with the state after every accepted step
/// (and with the initial state).
pub fn evolve_observed<F: FnMut(&Snapshot)>(
    initial: &AdmissibleInitial,
    angle: &AngleFunction,
    dim: usize,
    config: &SolverConfig,
    t_end: f64,
    outputs: &[f64],
    observe: F,
) -> Result<Evolution> {
    config.validate()?;
    if dim < 1 {
        return Err(invalid("dim", "spatial dimension must be at least 1"));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(invalid("t_end", format!("{t_end} must be non-negative")));
    }
    let cap = initial.sup_slope().max(angle.k_sup());
    match config.scheme {
        Scheme::Transformed => run(
            FlowState::from_initial(initial, config.grid, cap)?,
            angle,
            dim,
            config,
            t_end,
            outputs,
            observe,
        ),
        Scheme::Direct => run(
            DirectState::from_initial(initial, config.grid, cap)?,
            angle,
            dim,
            config,
            t_end,
            outputs,
            observe,
        ),
    }
}

fn run<S: Discretization, F: FnMut(&Snapshot)>(
    mut state: S,
    angle: &AngleFunction,
    dim: usize,
    config: &SolverConfig,
    t_end: f64,
    outputs: &[f64],
    mut observe: F,
) -> Result<Evolution> {
    let mut marks: Vec<f64> = outputs
        .iter()
        .cloned()
        .filter(|&t| t > 0.0 && t < t_end)
        .collect();
    marks.push(t_end);
    marks.sort_by(f64::total_cmp);
    marks.dedup();

    let first = state.snapshot();
    observe(&first);
    let mut stats = EvolutionStats {
        max_slope: first.max_slope(),
        min_slope: first.min_slope(),
        min_diffusion: f64::INFINITY,
        ..Default::default()
    };
    let mut snapshots = vec![first];
    if t_end == 0.0 {
        return Ok(Evolution { snapshots, stats });
    }

    let (mut dt, adaptive) = match config.stepping {
        TimeStepping::Fixed { dt } => (dt, false),
        TimeStepping::Adaptive { dt_init, .. } => (dt_init, true),
    };
    let move_cap = angle.period().map(|p| config.boundary_fraction * p);
    let mut next = 0;
    while next < marks.len() {
        if stats.steps >= config.max_steps {
            return Err(Error::StepFailure {
                t: state.t(),
                reason: format!("exceeded {} steps", config.max_steps),
            });
        }
        let target = marks[next];
        let remaining = target - state.t();
        let lands = dt >= remaining * (1.0 - 1e-12);
        let h = if lands { remaining } else { dt };
        let attempt = state
            .advance(dim, angle, h, config.gradient_slack)
            .and_then(|(cand, diffusion)| {
                if let TimeStepping::Adaptive { max_change, .. } = config.stepping {
                    let moved = (cand.contact() - state.contact()).abs();
                    if let Some(cap) = move_cap {
                        if moved > cap {
                            return Err(Error::StepRejected {
                                t: state.t(),
                                dt: h,
                                reason: format!("contact moved {moved:e} > {cap:e}"),
                            });
                        }
                    }
                    let scale = state.values().iter().fold(0.0f64, |m, &x| m.max(x.abs()));
                    let change = cand
                        .values()
                        .iter()
                        .zip(state.values())
                        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                    if change > max_change * scale {
                        return Err(Error::StepRejected {
                            t: state.t(),
                            dt: h,
                            reason: format!("relative change {:e}", change / scale),
                        });
                    }
                }
                Ok((cand, diffusion))
            });
        match attempt {
            Ok((cand, diffusion)) => {
                state = cand;
                stats.steps += 1;
                stats.last_dt = h;
                stats.min_diffusion = stats.min_diffusion.min(diffusion);
                let snap = state.snapshot();
                stats.max_slope = stats.max_slope.max(snap.max_slope());
                stats.min_slope = stats.min_slope.min(snap.min_slope());
                observe(&snap);
                if lands {
                    snapshots.push(snap);
                    next += 1;
                }
                if let TimeStepping::Adaptive { growth, dt_max, .. } = config.stepping {
                    if !lands || h >= dt {
                        dt = (dt * growth).min(dt_max);
                    }
                }
            }
            Err(Error::StepRejected { t, reason, .. }) if adaptive => {
                stats.rejected += 1;
                dt = h * 0.5;
                if let TimeStepping::Adaptive { dt_min, .. } = config.stepping {
                    if dt < dt_min {
                        return Err(Error::StepRejected { t, dt, reason });
                    }
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(Evolution { snapshots, stats })
}
