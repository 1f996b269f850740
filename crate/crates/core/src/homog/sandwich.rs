//! Numerical sandwich: evolve data squeezed between two members of the
//! self-similar family for the angle minimum `k0` and track how far the flow
//! rises above the upper one.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::pde::{evolve_observed, AdmissibleInitial, AngleFunction, EvolutionStats, SolverConfig};
use crate::profile::{default_eps_schedule, solve_profile, ProfileTolerances, SelfSimilarProfile};
use crate::selfsimilar::SelfSimilarSolution;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SandwichConfig {
    pub solver: SolverConfig,
    /// The window is `min(window_coeff * eps^(-4/3), cap)`.
    pub window_coeff: f64,
    pub cap: f64,
    /// Spacing of the recorded series; the metrics themselves use every step.
    pub record_every: f64,
    /// Samples of the initial graph handed to the solver.
    pub samples: usize,
    pub profile: ProfileTolerances,
}

impl Default for SandwichConfig {
    fn default() -> Self {
        SandwichConfig {
            solver: SolverConfig::default(),
            window_coeff: 100.0,
            cap: 200.0,
            record_every: 0.5,
            samples: 2000,
            profile: ProfileTolerances::default(),
        }
    }
}

impl SandwichConfig {
    pub fn window(&self, eps: f64) -> f64 {
        (self.window_coeff * eps.powf(-4.0 / 3.0)).min(self.cap)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SandwichPoint {
    pub t: f64,
    pub xi: f64,
    pub lower_gap: f64,
    pub upper_gap: f64,
    pub excess: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SandwichReport {
    pub eps: f64,
    pub dim: usize,
    pub k0: f64,
    pub k_sup: f64,
    pub p: f64,
    pub t0: f64,
    pub s0: f64,
    pub window: f64,
    pub capped: bool,
    /// `max (U(., s0) - U(., t0))` over the initial support.
    pub initial_gap: f64,
    /// Time minimum of the lower gap; non-negative while `U(t + t0)` stays below.
    pub lower_gap_min: f64,
    pub upper_gap_max: f64,
    /// Time maximum of `max_r (u - U(r, t + s0))`.
    pub sup_error: f64,
    /// The same quantity at the end of the window.
    pub end_error: f64,
    pub series: Vec<SandwichPoint>,
    pub stats: EvolutionStats,
}

struct Metrics {
    lower_gap: f64,
    upper_gap: f64,
    excess: f64,
}

fn metrics(
    lower: &SelfSimilarSolution,
    upper: &SelfSimilarSolution,
    t: f64,
    xi: f64,
    r: &[f64],
    u: &[f64],
) -> Result<Metrics> {
    let r_lo = lower.radius(t);
    let mut lower_gap = xi - r_lo;
    let (mut upper_gap, mut excess) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (&x, &ux) in r.iter().zip(u) {
        let below = lower.eval_extended(x, t)?;
        if x <= xi.min(r_lo) {
            lower_gap = lower_gap.min(ux - below);
        }
        upper_gap = upper_gap.max(ux - below);
        excess = excess.max(ux - upper.eval_extended(x, t)?);
    }
    Ok(Metrics {
        lower_gap,
        upper_gap,
        excess,
    })
}

/// Runs one sandwich with `profile` for the slope `angle.k0()`.
///
/// The initial graph is `U(., s0)` with a boundary collar of width
/// `min(eps, R(s0) - R(t0))` that matches the contact slope, so it lies below
/// `U(., s0)` and above `U(., t0)`. Time `t` of the flow corresponds to `t + t0`
/// on the lower solution and `t + s0` on the upper one.
pub fn run_sandwich_with(
    profile: Arc<SelfSimilarProfile>,
    angle: &AngleFunction,
    t0: f64,
    s0: f64,
    config: &SandwichConfig,
) -> Result<SandwichReport> {
    let eps = angle
        .period()
        .ok_or_else(|| invalid("angle", "the sandwich needs a periodic angle"))?;
    if (profile.slope - angle.k0()).abs() > 1e-12 {
        return Err(invalid(
            "profile",
            format!("slope {} differs from k0 = {}", profile.slope, angle.k0()),
        ));
    }
    if !(t0 > 0.0 && s0 > t0) {
        return Err(invalid(
            "s0",
            format!("need 0 < t0 < s0, got t0 = {t0}, s0 = {s0}"),
        ));
    }
    if !(config.record_every > 0.0) {
        return Err(invalid("record_every", "must be positive"));
    }
    let dim = profile.dim;
    let p = profile.p;
    let lower = SelfSimilarSolution::new(profile.clone(), t0)?;
    let upper = SelfSimilarSolution::new(profile, s0)?;
    let width = eps.min(upper.radius(0.0) - lower.radius(0.0));
    let initial = AdmissibleInitial::from_self_similar(&upper, angle, width, config.samples)?;
    let initial_gap = initial
        .r
        .iter()
        .map(|&x| Ok(upper.eval(x, 0.0)? - lower.eval_extended(x, 0.0)?))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);

    let window = config.window(eps);
    let mut series = Vec::new();
    let (mut lower_gap_min, mut upper_gap_max, mut sup_error, mut end_error) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::NEG_INFINITY,
        f64::NAN,
    );
    let mut failure: Option<Error> = None;
    let mut next_record = 0.0;
    let evolution = evolve_observed(&initial, angle, dim, &config.solver, window, &[], |s| {
        if failure.is_some() {
            return;
        }
        match metrics(&lower, &upper, s.t, s.xi, &s.r, &s.u) {
            Ok(m) => {
                lower_gap_min = lower_gap_min.min(m.lower_gap);
                upper_gap_max = upper_gap_max.max(m.upper_gap);
                sup_error = sup_error.max(m.excess);
                end_error = m.excess;
                if s.t >= next_record || s.t >= window {
                    series.push(SandwichPoint {
                        t: s.t,
                        xi: s.xi,
                        lower_gap: m.lower_gap,
                        upper_gap: m.upper_gap,
                        excess: m.excess,
                    });
                    next_record = s.t + config.record_every;
                }
            }
            Err(e) => failure = Some(e),
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(SandwichReport {
        eps,
        dim,
        k0: angle.k0(),
        k_sup: angle.k_sup(),
        p,
        t0,
        s0,
        window,
        capped: window < config.window_coeff * eps.powf(-4.0 / 3.0),
        initial_gap,
        lower_gap_min,
        upper_gap_max,
        sup_error,
        end_error,
        series,
        stats: evolution.stats,
    })
}

/// [`run_sandwich_with`] after solving for the profile of `(dim, angle.k0())`.
pub fn run_sandwich(
    dim: usize,
    angle: &AngleFunction,
    t0: f64,
    s0: f64,
    config: &SandwichConfig,
) -> Result<SandwichReport> {
    let profile = solve_profile(dim, angle.k0(), &default_eps_schedule(), &config.profile)?;
    run_sandwich_with(Arc::new(profile), angle, t0, s0, config)
}

/// Sandwiches for the sinusoidal angles `k0 .. k_sup` of each period in `eps_list`,
/// run in parallel and returned in increasing `eps`.
pub fn sweep(
    dim: usize,
    k0: f64,
    k_sup: f64,
    eps_list: &[f64],
    t0: f64,
    s0: f64,
    config: &SandwichConfig,
) -> Result<Vec<SandwichReport>> {
    if eps_list.is_empty() {
        return Err(invalid("eps_list", "no periods given"));
    }
    let profile = Arc::new(solve_profile(
        dim,
        k0,
        &default_eps_schedule(),
        &config.profile,
    )?);
    let mut eps: Vec<f64> = eps_list.to_vec();
    eps.sort_by(f64::total_cmp);
    eps.par_iter()
        .map(|&e| {
            let angle = AngleFunction::sinusoid(k0, k_sup, e)?;
            run_sandwich_with(profile.clone(), &angle, t0, s0, config)
        })
        .collect()
}
