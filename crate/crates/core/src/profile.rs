//! Self-similar profiles of the radially symmetric flow.
//!
//! A self-similar solution `u = sqrt(2pt) * phi(r / sqrt(2pt))` reduces the flow to
//!
//! ```text
//! phi'' / (1 + phi'^2) = p (phi - z phi') - (N - 1) phi' / z,   0 < z < 1,
//! phi'(0) = 0,  phi(1) = 1,  phi'(1) = k,
//! ```
//!
//! an eigenvalue problem for `p`. The construction here follows the shooting
//! argument: regularize `1/z` to `1/(z + eps)`, shoot backwards from `z = 1`,
//! classify how the trajectory leaves the unit box, and bisect on `p` between a
//! parameter whose trajectory develops an interior critical point and one whose
//! slope stays positive down to the axis. The regularized eigenvalues `P_eps`
//! converge linearly as `eps -> 0`; the limit is extrapolated and then polished by
//! a Newton iteration on the unregularized problem integrated outward from the
//! axis, which is well conditioned because the singular mode decays in that
//! direction.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::interp::MonotoneCubic;
use crate::ode::{integrate, StepControl, Trajectory};

/// One regularized shooting problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileProblem {
    dim: usize,
    slope: f64,
    eps_reg: f64,
}

impl ProfileProblem {
    pub fn new(dim: usize, slope: f64, eps_reg: f64) -> Result<Self> {
        if dim < 1 {
            return Err(invalid("dim", "spatial dimension must be at least 1"));
        }
        check_slope(slope)?;
        if !(eps_reg > 0.0 && eps_reg < 1.0) {
            return Err(invalid("eps_reg", format!("{eps_reg} is not in (0, 1)")));
        }
        Ok(ProfileProblem {
            dim,
            slope,
            eps_reg,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    pub fn eps_reg(&self) -> f64 {
        self.eps_reg
    }

    fn rhs(&self, p: f64) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] {
        let n1 = (self.dim - 1) as f64;
        let eps = self.eps_reg;
        move |z, y| {
            let (phi, dphi) = (y[0], y[1]);
            [
                dphi,
                (1.0 + dphi * dphi) * (p * (phi - z * dphi) - n1 * dphi / (z + eps)),
            ]
        }
    }
}

fn check_slope(slope: f64) -> Result<()> {
    if !(slope > 0.0 && slope < 1.0) {
        return Err(invalid("slope", format!("{slope} is not in (0, 1)")));
    }
    Ok(())
}

/// Closed-form bracket for the eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BracketConstants {
    /// Every `p >= p1` produces an interior critical point.
    pub p1: f64,
    /// Every `p <= p2` keeps `phi'' < 0` along the trajectory.
    pub p2: f64,
}

impl BracketConstants {
    pub fn new(dim: usize, slope: f64) -> Self {
        let n1 = (dim - 1) as f64;
        BracketConstants {
            p1: (2.0 * slope.atan() + (slope + 4.0) * n1) / (1.0 - slope),
            p2: n1 * slope / 2.0,
        }
    }
}

pub fn bracket_constants(problem: &ProfileProblem) -> BracketConstants {
    BracketConstants::new(problem.dim, problem.slope)
}

/// Qualitative fate of a backward shooting trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Case {
    /// Interior critical point `z* in (0, 1)`.
    Case1,
    /// Reaches the axis with zero slope: the profile we want.
    Case2,
    /// Reaches the axis with positive slope.
    Case3,
    /// Touches the floor `phi = 0` with positive slope.
    Case4,
    /// The deciding quantity lies within tolerance of a classification boundary.
    Undetermined,
}

impl std::fmt::Display for Case {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Case::Case1 => "Case1",
            Case::Case2 => "Case2",
            Case::Case3 => "Case3",
            Case::Case4 => "Case4",
            Case::Undetermined => "CaseUndetermined",
        };
        f.write_str(s)
    }
}

/// Where a backward trajectory stopped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Termination {
    /// `phi'` vanished at `z > 0`.
    CriticalPoint { z: f64, phi: f64 },
    /// `phi` reached zero at `z > 0`.
    Floor { z: f64, phi_prime: f64 },
    /// The trajectory arrived at `z = 0` inside the box.
    Axis { phi: f64, phi_prime: f64 },
    /// `phi'` passed [`STEEP_SLOPE`] at `z > 0`: the graph turns vertical while
    /// still falling, so it leaves the box through the floor side.
    Steep { z: f64, phi: f64 },
}

/// Slope at which a backward trajectory is considered to have turned vertical.
pub const STEEP_SLOPE: f64 = 1e4;

/// Maps a trajectory end to its case label. Case 5 (`phi = phi' = 0` together)
/// cannot occur for a nontrivial solution and is never returned; a floor hit with
/// vanishing slope is reported as undetermined instead.
pub fn classify_case(end: &Termination, tol_classify: f64) -> Case {
    match *end {
        Termination::CriticalPoint { z, phi } => {
            if z <= tol_classify || !(phi > 0.0 && phi < 1.0) {
                Case::Undetermined
            } else {
                Case::Case1
            }
        }
        Termination::Steep { .. } => Case::Case4,
        Termination::Floor { phi_prime, .. } => {
            if phi_prime > tol_classify {
                Case::Case4
            } else {
                Case::Undetermined
            }
        }
        Termination::Axis { phi, phi_prime } => {
            if phi <= tol_classify || phi >= 1.0 {
                Case::Undetermined
            } else if phi_prime.abs() <= tol_classify {
                Case::Case2
            } else if phi_prime > 0.0 {
                Case::Case3
            } else {
                Case::Undetermined
            }
        }
    }
}

/// One backward integration of the regularized initial value problem.
#[derive(Debug, Clone, Serialize)]
pub struct ShootingOutcome {
    pub p: f64,
    pub case: Case,
    pub termination: Termination,
    /// Decreasing sample locations, starting at `z = 1`.
    pub z_samples: Vec<f64>,
    pub phi: Vec<f64>,
    pub phi_prime: Vec<f64>,
    pub critical_z: Option<f64>,
}

impl ShootingOutcome {
    fn from_trajectory(p: f64, traj: &Trajectory<2>, tol_classify: f64) -> Self {
        let termination = match traj.event {
            Some(hit) if hit.index == 0 => Termination::CriticalPoint {
                z: hit.t,
                phi: hit.y[0],
            },
            Some(hit) if hit.index == 2 => Termination::Steep {
                z: hit.t,
                phi: hit.y[0],
            },
            Some(hit) => Termination::Floor {
                z: hit.t,
                phi_prime: hit.y[1],
            },
            None => {
                let (_, y) = traj.last();
                Termination::Axis {
                    phi: y[0],
                    phi_prime: y[1],
                }
            }
        };
        let mut z_samples = traj.t.clone();
        let mut phi: Vec<f64> = traj.y.iter().map(|y| y[0]).collect();
        let mut phi_prime: Vec<f64> = traj.y.iter().map(|y| y[1]).collect();
        if let Some(hit) = traj.event {
            // the last accepted step overshoots the event; end the samples there
            z_samples.pop();
            phi.pop();
            phi_prime.pop();
            z_samples.push(hit.t);
            phi.push(hit.y[0]);
            phi_prime.push(hit.y[1]);
        }
        let critical_z = match termination {
            Termination::CriticalPoint { z, .. } => Some(z),
            _ => None,
        };
        ShootingOutcome {
            p,
            case: classify_case(&termination, tol_classify),
            termination,
            z_samples,
            phi,
            phi_prime,
            critical_z,
        }
    }
}

/// Knobs for shooting and bisection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShootingOptions {
    pub step: StepControl,
    pub tol_classify: f64,
    /// Bisection stops once the bracket is narrower than this.
    pub tol_p: f64,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        ShootingOptions {
            step: StepControl::default(),
            tol_classify: 1e-8,
            tol_p: 1e-10,
        }
    }
}

/// Integrates the regularized problem from `z = 1` (with `phi = 1`, `phi' = k`)
/// towards `z = 0`, stopping at the first critical point, floor contact, or the axis.
pub fn integrate_ivp(
    problem: &ProfileProblem,
    p: f64,
    opts: &ShootingOptions,
) -> Result<ShootingOutcome> {
    if !(p >= 0.0) {
        return Err(invalid(
            "p",
            format!("shooting parameter {p} must be non-negative"),
        ));
    }
    let critical = |_: f64, y: &[f64; 2]| y[1];
    let floor = |_: f64, y: &[f64; 2]| y[0];
    let steep = |_: f64, y: &[f64; 2]| STEEP_SLOPE - y[1];
    let traj = integrate(
        problem.rhs(p),
        1.0,
        [1.0, problem.slope],
        0.0,
        &opts.step,
        &[&critical, &floor, &steep],
    )?;
    Ok(ShootingOutcome::from_trajectory(
        p,
        &traj,
        opts.tol_classify,
    ))
}

/// Like [`integrate_ivp`] but, after an interior critical point, keeps
/// integrating until the trajectory leaves the closed unit box (through the top,
/// the floor, or the axis). The samples then cover the whole computed range.
pub fn trace_box_exit(
    problem: &ProfileProblem,
    p: f64,
    opts: &ShootingOptions,
) -> Result<ShootingOutcome> {
    let mut outcome = integrate_ivp(problem, p, opts)?;
    if let Termination::CriticalPoint { z, phi } = outcome.termination {
        if z > 0.0 {
            let top = |_: f64, y: &[f64; 2]| y[0] - 1.0;
            let floor = |_: f64, y: &[f64; 2]| y[0];
            let traj = integrate(
                problem.rhs(p),
                z,
                [phi, 0.0],
                0.0,
                &opts.step,
                &[&top, &floor],
            )?;
            let stop = traj.event.map(|hit| hit.t);
            for (&zi, yi) in traj.t.iter().zip(&traj.y).skip(1) {
                if stop.is_some_and(|s| zi < s) {
                    break;
                }
                outcome.z_samples.push(zi);
                outcome.phi.push(yi[0]);
                outcome.phi_prime.push(yi[1]);
            }
            if let Some(hit) = traj.event {
                outcome.z_samples.push(hit.t);
                outcome.phi.push(hit.y[0]);
                outcome.phi_prime.push(hit.y[1]);
            }
        }
    }
    Ok(outcome)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Lower,
    Upper,
    Hit,
}

fn side(outcome: &ShootingOutcome, tol: f64) -> Side {
    match outcome.case {
        Case::Case1 => Side::Upper,
        Case::Case2 => Side::Hit,
        Case::Case3 | Case::Case4 => Side::Lower,
        Case::Undetermined => match outcome.termination {
            // critical point squeezed onto the axis, or zero slope at the axis
            Termination::CriticalPoint { z, .. } if z <= tol => Side::Hit,
            Termination::Axis { phi_prime, .. } if phi_prime.abs() <= tol => Side::Hit,
            Termination::CriticalPoint { .. } => Side::Upper,
            _ => Side::Lower,
        },
    }
}

/// Bisects for the regularized eigenvalue over the default bracket
/// `[P2_eff, P1]`, where `P2_eff = 0` for `N = 1` and `P2` otherwise.
pub fn find_p(problem: &ProfileProblem, opts: &ShootingOptions) -> Result<(f64, ShootingOutcome)> {
    let b = bracket_constants(problem);
    let lo = if problem.dim == 1 { 0.0 } else { b.p2 };
    find_p_in(problem, (lo, b.p1), opts)
}

/// Bisection on an explicit bracket. The lower end must classify as Case 3/4
/// and the upper end as Case 1; the returned value is the midpoint of the final
/// bracket (or the first parameter that lands exactly in Case 2).
pub fn find_p_in(
    problem: &ProfileProblem,
    bracket: (f64, f64),
    opts: &ShootingOptions,
) -> Result<(f64, ShootingOutcome)> {
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) {
        return Err(invalid("bracket", format!("[{lo}, {hi}] is empty")));
    }
    let lo_out = integrate_ivp(problem, lo, opts)?;
    match side(&lo_out, opts.tol_classify) {
        Side::Lower => {}
        Side::Hit => return Ok((lo, lo_out)),
        Side::Upper => {
            return Err(Error::BracketFailure {
                p: lo,
                found: lo_out.case.to_string(),
                expected: "Case3 or Case4",
            })
        }
    }
    let hi_out = integrate_ivp(problem, hi, opts)?;
    match side(&hi_out, opts.tol_classify) {
        Side::Upper => {}
        Side::Hit => return Ok((hi, hi_out)),
        Side::Lower => {
            return Err(Error::BracketFailure {
                p: hi,
                found: hi_out.case.to_string(),
                expected: "Case1",
            })
        }
    }
    while hi - lo > opts.tol_p {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let out = integrate_ivp(problem, mid, opts)?;
        match side(&out, opts.tol_classify) {
            Side::Upper => hi = mid,
            Side::Lower => lo = mid,
            Side::Hit => return Ok((mid, out)),
        }
    }
    let mid = 0.5 * (lo + hi);
    let out = integrate_ivp(problem, mid, opts)?;
    Ok((mid, out))
}

/// The geometric regularization schedule `1e-2 * 2^-j`, `j = 0..=10`.
pub fn default_eps_schedule() -> Vec<f64> {
    (0..=10).map(|j| 1e-2 * 0.5f64.powi(j)).collect()
}

/// Tolerances for [`solve_profile`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileTolerances {
    pub shooting: ShootingOptions,
    /// Successive extrapolated eigenvalues must agree to this.
    pub p_settle: f64,
    /// The Newton-polished eigenvalue must agree with the extrapolated one to this.
    pub polish_agreement: f64,
    /// Residual tolerance of the Newton polish on `(phi(1) - 1, phi'(1) - k)`.
    pub polish_residual: f64,
    /// Sup of the pointwise ODE residual accepted on the interior grid.
    pub ode_residual: f64,
    /// Slack used when validating sign and range invariants at grid points.
    pub invariant_slack: f64,
    /// Number of grid intervals on `[0, 1]`.
    pub grid_intervals: usize,
    /// Upper limit for the extension `[1, 1 + a]`; must satisfy `(1 + a)^2 < 3/2`.
    pub max_extension: f64,
    /// Integrator settings for the polished profile.
    pub profile_step: StepControl,
}

impl Default for ProfileTolerances {
    fn default() -> Self {
        ProfileTolerances {
            shooting: ShootingOptions::default(),
            p_settle: 1e-7,
            polish_agreement: 1e-5,
            polish_residual: 1e-12,
            ode_residual: 1e-6,
            invariant_slack: 1e-9,
            grid_intervals: 2000,
            max_extension: 0.2,
            profile_step: StepControl {
                rtol: 1e-13,
                atol: 1e-14,
                h_init: 1e-4,
                h_max: 1e-2,
                ..StepControl::default()
            },
        }
    }
}

/// Solution of the self-similar eigenvalue problem sampled on a uniform grid.
///
/// The grid spans `[0, 1 + a]`: `z[..=unit_index]` covers `[0, 1]` and the
/// remaining nodes continue the same ODE past the contact point.
#[derive(Debug, Clone, Serialize)]
pub struct SelfSimilarProfile {
    pub dim: usize,
    pub slope: f64,
    /// The eigenvalue `P`.
    pub p: f64,
    pub z: Vec<f64>,
    pub phi: Vec<f64>,
    pub phi_prime: Vec<f64>,
    pub phi_second: Vec<f64>,
    pub unit_index: usize,
    /// Length `a` of the extension past `z = 1`.
    pub extension: f64,
    /// `(eps_reg, P_eps)` for every regularization that was solved.
    pub eps_history: Vec<(f64, f64)>,
    /// Richardson limit of the regularized eigenvalues.
    pub p_extrapolated: f64,
    #[serde(skip)]
    interp: MonotoneCubic,
}

fn limit_rhs(dim: usize, p: f64) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] {
    let n = dim as f64;
    move |z, y| [y[1], second_derivative(n, p, z, y[0], y[1])]
}

/// `phi''` from the unregularized equation; at `z = 0` (where `phi' = 0`) the
/// `phi'/z` term is replaced by its limit `phi''(0)`, giving `phi'' = p phi / N`.
fn second_derivative(n: f64, p: f64, z: f64, phi: f64, dphi: f64) -> f64 {
    if z == 0.0 {
        p * phi / n
    } else {
        (1.0 + dphi * dphi) * (p * (phi - z * dphi) - (n - 1.0) * dphi / z)
    }
}

/// Outward shot from the axis with `phi(0) = c`, `phi'(0) = 0`.
fn shoot_from_axis(
    dim: usize,
    c: f64,
    p: f64,
    z_end: f64,
    step: &StepControl,
) -> Result<Trajectory<2>> {
    integrate(limit_rhs(dim, p), 0.0, [c, 0.0], z_end, step, &[])
}

fn axis_mismatch(dim: usize, slope: f64, c: f64, p: f64, step: &StepControl) -> Result<[f64; 2]> {
    let traj = shoot_from_axis(dim, c, p, 1.0, step)?;
    let (_, y) = traj.last();
    Ok([y[0] - 1.0, y[1] - slope])
}

/// Newton iteration on `(phi(0), P)` for the unregularized problem.
fn polish(dim: usize, slope: f64, seed: (f64, f64), tol: &ProfileTolerances) -> Result<(f64, f64)> {
    let (mut c, mut p) = seed;
    let step = &tol.profile_step;
    for _ in 0..40 {
        let r = axis_mismatch(dim, slope, c, p, step)?;
        if r[0].abs().max(r[1].abs()) <= tol.polish_residual {
            return Ok((c, p));
        }
        let dc = 1e-6;
        let dp = 1e-6 * p.max(1.0);
        let rc_plus = axis_mismatch(dim, slope, c + dc, p, step)?;
        let rc_minus = axis_mismatch(dim, slope, c - dc, p, step)?;
        let rp_plus = axis_mismatch(dim, slope, c, p + dp, step)?;
        let rp_minus = axis_mismatch(dim, slope, c, p - dp, step)?;
        let j = [
            [
                (rc_plus[0] - rc_minus[0]) / (2.0 * dc),
                (rp_plus[0] - rp_minus[0]) / (2.0 * dp),
            ],
            [
                (rc_plus[1] - rc_minus[1]) / (2.0 * dc),
                (rp_plus[1] - rp_minus[1]) / (2.0 * dp),
            ],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            return Err(Error::NoConvergence(
                "singular Jacobian in profile polish".into(),
            ));
        }
        let step_c = (j[1][1] * r[0] - j[0][1] * r[1]) / det;
        let step_p = (-j[1][0] * r[0] + j[0][0] * r[1]) / det;
        c -= step_c;
        p -= step_p;
        if step_c.abs().max(step_p.abs()) < 1e-15 {
            break;
        }
    }
    let r = axis_mismatch(dim, slope, c, p, step)?;
    if r[0].abs().max(r[1].abs()) <= tol.polish_residual {
        Ok((c, p))
    } else {
        Err(Error::NoConvergence(format!(
            "profile polish stalled with boundary mismatch ({:e}, {:e})",
            r[0], r[1]
        )))
    }
}

/// Richardson extrapolation of the last regularized eigenvalues, assuming
/// `P_eps = P + O(eps)`; returns the accepted limit once two successive
/// extrapolants (or two raw values) agree to `settle`.
fn settle_eigenvalue(history: &[(f64, f64)], settle: f64) -> Option<f64> {
    let n = history.len();
    if n >= 2 {
        let (_, pa) = history[n - 2];
        let (_, pb) = history[n - 1];
        if (pb - pa).abs() < settle {
            return Some(pb);
        }
    }
    if n >= 3 {
        let rich = |i: usize| {
            let (ea, pa) = history[i];
            let (eb, pb) = history[i + 1];
            let q = eb / ea;
            (pb - q * pa) / (1.0 - q)
        };
        let r1 = rich(n - 3);
        let r2 = rich(n - 2);
        if (r2 - r1).abs() < settle {
            return Some(r2);
        }
    }
    None
}

/// Solves the self-similar eigenvalue problem for `(dim, slope)`.
///
/// Runs the regularized bisection for each `eps` in `eps_schedule` (decreasing)
/// until the extrapolated eigenvalue settles, polishes `(phi(0), P)` on the limit
/// equation, and samples the profile on `[0, 1 + a]`.
pub fn solve_profile(
    dim: usize,
    slope: f64,
    eps_schedule: &[f64],
    tol: &ProfileTolerances,
) -> Result<SelfSimilarProfile> {
    if dim < 1 {
        return Err(invalid("dim", "spatial dimension must be at least 1"));
    }
    check_slope(slope)?;
    if eps_schedule.len() < 2 {
        return Err(invalid("eps_schedule", "need at least two regularizations"));
    }
    if eps_schedule.windows(2).any(|w| !(w[1] < w[0]))
        || !(eps_schedule[0] < 1.0)
        || !(eps_schedule[eps_schedule.len() - 1] > 0.0)
    {
        return Err(invalid(
            "eps_schedule",
            "must be strictly decreasing inside (0, 1)",
        ));
    }
    if !((1.0 + tol.max_extension).powi(2) < 1.5) || tol.max_extension < 0.0 {
        return Err(invalid("max_extension", "need (1 + a)^2 < 3/2"));
    }

    let mut history = Vec::new();
    let mut accepted = None;
    let mut last_outcome = None;
    for &eps in eps_schedule {
        let problem = ProfileProblem::new(dim, slope, eps)?;
        let (p_eps, outcome) = find_p(&problem, &tol.shooting)?;
        history.push((eps, p_eps));
        last_outcome = Some(outcome);
        if let Some(p) = settle_eigenvalue(&history, tol.p_settle) {
            accepted = Some(p);
            break;
        }
    }
    let p_extrapolated = accepted.ok_or_else(|| {
        Error::NoConvergence(format!(
            "P_eps did not settle to {:e} over {} regularizations (last values {:?})",
            tol.p_settle,
            history.len(),
            &history[history.len().saturating_sub(3)..]
        ))
    })?;

    let outcome = last_outcome.expect("schedule is non-empty");
    let c_seed = match outcome.termination {
        Termination::Axis { phi, .. } => phi,
        _ => *outcome.phi.last().unwrap(),
    };
    let (c, p) = polish(dim, slope, (c_seed, p_extrapolated), tol)?;
    if (p - p_extrapolated).abs() > tol.polish_agreement {
        return Err(Error::NoConvergence(format!(
            "polished eigenvalue {p} disagrees with the regularized limit {p_extrapolated}"
        )));
    }

    let n = tol.grid_intervals;
    let h = 1.0 / n as f64;
    let n_ext = (tol.max_extension / h).floor() as usize;
    let z_end = (n + n_ext) as f64 * h;
    let traj = shoot_from_axis(dim, c, p, z_end, &tol.profile_step)?;
    let nf = dim as f64;
    let mut z = Vec::with_capacity(n + n_ext + 1);
    let mut phi = Vec::with_capacity(n + n_ext + 1);
    let mut phi_prime = Vec::with_capacity(n + n_ext + 1);
    let slope_cap = 0.5 * (1.0 + slope);
    for i in 0..=n + n_ext {
        let zi = i as f64 * h;
        let y = traj.eval(zi).ok_or_else(|| Error::StepFailure {
            t: zi,
            reason: "dense output does not cover the grid".into(),
        })?;
        // stop the extension where the slope bound for [1, 1 + a] would fail
        if i > n && y[1] > slope_cap {
            break;
        }
        z.push(zi);
        phi.push(y[0]);
        phi_prime.push(if i == 0 { 0.0 } else { y[1] });
    }
    let phi_second: Vec<f64> = z
        .iter()
        .zip(phi.iter().zip(&phi_prime))
        .map(|(&zi, (&f, &df))| second_derivative(nf, p, zi, f, df))
        .collect();
    let extension = (z.len() - 1 - n) as f64 * h;
    let interp = MonotoneCubic::from_hermite(z.clone(), phi.clone(), phi_prime.clone())?;

    let profile = SelfSimilarProfile {
        dim,
        slope,
        p,
        z,
        phi,
        phi_prime,
        phi_second,
        unit_index: n,
        extension,
        eps_history: history,
        p_extrapolated,
        interp,
    };
    profile.validate(tol)?;
    Ok(profile)
}

impl SelfSimilarProfile {
    /// Largest `z` the profile is tabulated on, `1 + a`.
    pub fn z_max(&self) -> f64 {
        *self.z.last().unwrap()
    }

    pub fn grid_step(&self) -> f64 {
        self.z[1] - self.z[0]
    }

    /// `phi(0)`.
    pub fn axis_height(&self) -> f64 {
        self.phi[0]
    }

    /// Smallest regularization solved.
    pub fn eps_floor(&self) -> f64 {
        self.eps_history.last().map_or(f64::NAN, |&(e, _)| e)
    }

    /// `(Phi, Phi')` at `z` via the monotone cubic through the grid.
    pub fn eval(&self, z: f64) -> Result<(f64, f64)> {
        if !(z >= 0.0 && z <= self.z_max() + 1e-12) {
            return Err(Error::OutOfRange {
                value: z,
                max: self.z_max(),
            });
        }
        Ok(self.interp.eval_with_slope(z))
    }

    /// `Phi''` at `z`, from the equation evaluated on the interpolated values.
    pub fn second(&self, z: f64) -> Result<f64> {
        let (f, df) = self.eval(z)?;
        Ok(second_derivative(
            self.dim as f64,
            self.p,
            z,
            f,
            if z == 0.0 { 0.0 } else { df },
        ))
    }

    /// Pointwise residual of the unregularized equation on the interior grid of
    /// `[0, 1]`, with `Phi''` from a fourth-order difference of the `Phi'` samples
    /// (independent of the stored `Phi''`).
    pub fn ode_residuals(&self) -> Vec<(f64, f64)> {
        let h = self.grid_step();
        let n = self.unit_index;
        let nf = self.dim as f64;
        (2..=n - 2)
            .map(|i| {
                let d = &self.phi_prime;
                let second = (-d[i + 2] + 8.0 * d[i + 1] - 8.0 * d[i - 1] + d[i - 2]) / (12.0 * h);
                let zi = self.z[i];
                let lhs = second / (1.0 + d[i] * d[i]);
                let rhs = self.p * (self.phi[i] - zi * d[i]) - (nf - 1.0) * d[i] / zi;
                (zi, lhs - rhs)
            })
            .collect()
    }

    pub fn ode_residual_sup(&self) -> f64 {
        self.ode_residuals()
            .iter()
            .fold(0.0, |m, &(_, r)| m.max(r.abs()))
    }

    /// Checks the sign, range, boundary and residual invariants on `[0, 1]`.
    pub fn validate(&self, tol: &ProfileTolerances) -> Result<()> {
        let s = tol.invariant_slack;
        let n = self.unit_index;
        let fail = |msg: String| Err(Error::InvariantViolation(msg));
        let b = BracketConstants::new(self.dim, self.slope);
        if !(self.p >= b.p2 - s && self.p <= b.p1 + s) {
            return fail(format!("P = {} outside [{}, {}]", self.p, b.p2, b.p1));
        }
        for i in 0..=n {
            let (f, df, d2) = (self.phi[i], self.phi_prime[i], self.phi_second[i]);
            if !(f > 0.0 && f <= 1.0 + s) {
                return fail(format!("Phi({}) = {f}", self.z[i]));
            }
            if !(df >= -s && df <= self.slope + s) {
                return fail(format!("Phi'({}) = {df}", self.z[i]));
            }
            if !(d2 >= -s) {
                return fail(format!("Phi''({}) = {d2}", self.z[i]));
            }
        }
        if (self.phi[n] - 1.0).abs() > 1e-10 || (self.phi_prime[n] - self.slope).abs() > 1e-8 {
            return fail(format!(
                "boundary data Phi(1) = {}, Phi'(1) = {}",
                self.phi[n], self.phi_prime[n]
            ));
        }
        let res = self.ode_residual_sup();
        if res > tol.ode_residual {
            return fail(format!(
                "ODE residual {res:e} exceeds {:e}",
                tol.ode_residual
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> ShootingOptions {
        ShootingOptions::default()
    }

    #[test]
    fn bracket_constants_match_closed_forms() {
        // direct evaluation of the printed formulas
        let b = BracketConstants::new(1, 0.5);
        assert_eq!(b.p2, 0.0);
        assert!((b.p1 - 2.0 * 0.5f64.atan() / 0.5).abs() < 1e-15);
        assert!((b.p1 - 1.854590436).abs() < 1e-9);
        let b = BracketConstants::new(2, 0.5);
        assert_eq!(b.p2, 0.25);
        assert!((b.p1 - 10.854590436).abs() < 1e-9);
        for k in [0.1, 0.37, 0.9] {
            assert_eq!(BracketConstants::new(1, k).p2, 0.0);
            for dim in 1..5 {
                let b = BracketConstants::new(dim, k);
                assert!(b.p2 <= b.p1);
            }
        }
    }

    #[test]
    fn problem_rejects_out_of_range_parameters() {
        assert!(ProfileProblem::new(0, 0.5, 0.1).is_err());
        assert!(ProfileProblem::new(2, 1.0, 0.1).is_err());
        assert!(ProfileProblem::new(2, 0.0, 0.1).is_err());
        assert!(ProfileProblem::new(2, 0.5, 1.0).is_err());
        assert!(ProfileProblem::new(2, 0.5, 0.0).is_err());
        assert!(ProfileProblem::new(2, 0.5, 0.5).is_ok());
    }

    #[test]
    fn flat_equation_gives_straight_line() {
        // N = 1, p = 0: phi'' = 0
        let problem = ProfileProblem::new(1, 0.5, 0.1).unwrap();
        let out = integrate_ivp(&problem, 0.0, &opts()).unwrap();
        assert_eq!(out.case, Case::Case3);
        match out.termination {
            Termination::Axis { phi, phi_prime } => {
                assert!((phi - 0.5).abs() < 1e-12);
                assert!((phi_prime - 0.5).abs() < 1e-12);
            }
            other => panic!("unexpected termination {other:?}"),
        }
        for (z, f) in out.z_samples.iter().zip(&out.phi) {
            assert!((f - (1.0 + 0.5 * (z - 1.0))).abs() < 1e-12);
        }
        assert_eq!(out.z_samples[0], 1.0);
        assert_eq!(out.phi[0], 1.0);
        assert_eq!(out.phi_prime[0], 0.5);
    }

    #[test]
    fn large_p_develops_a_critical_point() {
        let problem = ProfileProblem::new(1, 0.5, 0.1).unwrap();
        let b = bracket_constants(&problem);
        let out = integrate_ivp(&problem, 1.1 * b.p1, &opts()).unwrap();
        assert_eq!(out.case, Case::Case1);
        let z = out.critical_z.unwrap();
        assert!(z > 0.0 && z < 1.0);
    }

    #[test]
    fn small_p_stays_concave() {
        let problem = ProfileProblem::new(2, 0.5, 0.1).unwrap();
        let p = 0.5 * bracket_constants(&problem).p2;
        let out = integrate_ivp(&problem, p, &opts()).unwrap();
        assert!(matches!(out.case, Case::Case3 | Case::Case4));
        let rhs = problem.rhs(p);
        for ((&z, &f), &df) in out.z_samples.iter().zip(&out.phi).zip(&out.phi_prime) {
            assert!(rhs(z, &[f, df])[1] < 0.0, "phi'' >= 0 at z = {z}");
        }
    }

    #[test]
    fn classification_by_definition() {
        let tol = 1e-8;
        assert_eq!(
            classify_case(
                &Termination::Axis {
                    phi: 0.4,
                    phi_prime: 0.3
                },
                tol
            ),
            Case::Case3
        );
        assert_eq!(
            classify_case(&Termination::CriticalPoint { z: 0.5, phi: 0.6 }, tol),
            Case::Case1
        );
        assert_eq!(
            classify_case(
                &Termination::Axis {
                    phi: 0.55,
                    phi_prime: 1e-10
                },
                tol
            ),
            Case::Case2
        );
        assert_eq!(
            classify_case(
                &Termination::Floor {
                    z: 0.3,
                    phi_prime: 0.2
                },
                tol
            ),
            Case::Case4
        );
        // boundaries between cases
        assert_eq!(
            classify_case(
                &Termination::Floor {
                    z: 0.3,
                    phi_prime: 1e-12
                },
                tol
            ),
            Case::Undetermined
        );
        assert_eq!(
            classify_case(&Termination::CriticalPoint { z: 1e-10, phi: 0.6 }, tol),
            Case::Undetermined
        );
        assert_eq!(
            classify_case(
                &Termination::Axis {
                    phi: 1e-10,
                    phi_prime: 0.3
                },
                tol
            ),
            Case::Undetermined
        );
    }

    #[test]
    fn bisection_rejects_a_bad_bracket() {
        let problem = ProfileProblem::new(1, 0.5, 0.1).unwrap();
        let b = bracket_constants(&problem);
        let err = find_p_in(&problem, (1.5 * b.p1, 2.0 * b.p1), &opts()).unwrap_err();
        assert!(matches!(
            err,
            Error::BracketFailure {
                expected: "Case3 or Case4",
                ..
            }
        ));
        let err = find_p_in(&problem, (0.0, 1e-3), &opts()).unwrap_err();
        assert!(matches!(
            err,
            Error::BracketFailure {
                expected: "Case1",
                ..
            }
        ));
    }

    #[test]
    fn bisection_is_bitwise_deterministic() {
        let problem = ProfileProblem::new(2, 0.5, 0.05).unwrap();
        let (a, _) = find_p(&problem, &opts()).unwrap();
        let (b, _) = find_p(&problem, &opts()).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert!((0.25..=10.854590437).contains(&a));
    }

    #[test]
    fn critical_point_is_unique_on_the_traced_range() {
        for (dim, k) in [(1, 0.5), (2, 0.3), (3, 0.7)] {
            let problem = ProfileProblem::new(dim, k, 0.05).unwrap();
            let b = bracket_constants(&problem);
            let out = trace_box_exit(&problem, 1.5 * b.p1, &opts()).unwrap();
            let zc = out.critical_z.expect("Case 1 above P1");
            for (&z, &df) in out.z_samples.iter().zip(&out.phi_prime) {
                if z < zc - 1e-9 {
                    assert!(df < 0.0, "phi'({z}) = {df} for (N, k) = ({dim}, {k})");
                } else if z > zc + 1e-9 {
                    assert!(df > 0.0);
                }
            }
        }
    }

    #[test]
    fn richardson_settles_on_linear_sequences() {
        let hist: Vec<(f64, f64)> = (0..4)
            .map(|j| {
                let e = 1e-2 * 0.5f64.powi(j);
                (e, 1.5 + 3.0 * e)
            })
            .collect();
        let p = settle_eigenvalue(&hist[..3], 1e-12).unwrap();
        assert!((p - 1.5).abs() < 1e-13);
        assert!(settle_eigenvalue(&hist[..2], 1e-12).is_none());
    }

    #[test]
    fn profile_for_n1_satisfies_invariants() {
        let prof = solve_profile(
            1,
            0.5,
            &default_eps_schedule(),
            &ProfileTolerances::default(),
        )
        .unwrap();
        let n = prof.unit_index;
        assert!((prof.phi[n] - 1.0).abs() < 1e-10);
        for i in 1..n {
            assert!(prof.phi_prime[i] > 0.0 && prof.phi_prime[i] < 0.5);
        }
        // phi''(1) / (1 + k^2) = P (1 - k) when N = 1
        let expected = prof.p * 0.5 * (1.0 + 0.25);
        assert!((prof.phi_second[n] - expected).abs() < 1e-9);
        let h = prof.grid_step();
        let fd = (prof.phi_prime[n + 1] - prof.phi_prime[n - 1]) / (2.0 * h);
        assert!(
            (fd - expected).abs() < 1e-5,
            "fd = {fd}, expected = {expected}"
        );
        // the extension keeps the slope below (1 + k)/2
        assert!(prof.extension > 0.0);
        assert!(prof.phi_prime[n..].iter().all(|&d| d <= 0.75));
    }

    #[test]
    fn monotone_map_decreases_along_the_profile() {
        let prof = solve_profile(
            2,
            0.4,
            &default_eps_schedule(),
            &ProfileTolerances::default(),
        )
        .unwrap();
        let g: Vec<f64> = (0..=prof.unit_index)
            .map(|i| prof.p * (prof.phi[i] - prof.z[i] * prof.phi_prime[i]))
            .collect();
        assert!(g.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn solve_profile_validates_inputs() {
        let tol = ProfileTolerances::default();
        assert!(solve_profile(2, 0.5, &[0.01], &tol).is_err());
        assert!(solve_profile(2, 0.5, &[0.01, 0.02], &tol).is_err());
        assert!(solve_profile(2, 1.5, &default_eps_schedule(), &tol).is_err());
        let bad = ProfileTolerances {
            max_extension: 0.3,
            ..tol
        };
        assert!(solve_profile(2, 0.5, &default_eps_schedule(), &bad).is_err());
    }

    #[test]
    fn eval_rejects_arguments_past_the_extension() {
        let prof = solve_profile(
            1,
            0.3,
            &default_eps_schedule(),
            &ProfileTolerances::default(),
        )
        .unwrap();
        assert!(prof.eval(prof.z_max() + 0.01).is_err());
        assert!(prof.eval(-0.1).is_err());
        let (f, df) = prof.eval(1.0).unwrap();
        assert!((f - 1.0).abs() < 1e-10 && (df - 0.3).abs() < 1e-8);
    }
}
