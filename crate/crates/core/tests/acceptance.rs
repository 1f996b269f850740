//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero if any fail.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::sync::Arc;
use std::time::{Duration, Instant};

use cone_mcf::compare::{barrier_solve, preceq, OrderedGraph};
use cone_mcf::homog::schedule::{a_n, b_n, big_b_closed, verify_identities};
use cone_mcf::homog::{
    fit_reports, run_sandwich_with, sweep, ErrorMetric, SandwichConfig, SandwichReport,
};
use cone_mcf::io::{write_series_csv, write_sweep_csv};
use cone_mcf::pde::{
    evolve, solve_direct, AdmissibleInitial, AngleFunction, Evolution, SolverConfig, TimeStepping,
};
use cone_mcf::profile::{
    bracket_constants, classify_case, default_eps_schedule, find_p_in, integrate_ivp,
    solve_profile, Case, ProfileProblem, ProfileTolerances, SelfSimilarProfile,
};
use cone_mcf::SelfSimilarSolution;
use num_bigint::BigInt;
use num_rational::BigRational;

const DIMS: [usize; 3] = [1, 2, 3];
const SLOPES: [f64; 3] = [0.2, 0.5, 0.8];
const GRADIENT_SLACK: f64 = 5e-3;

struct Outcome {
    pass: bool,
    detail: String,
}

/// Slope bound record `(label, max u_r, min u_r, cap)` of every evolution.
type Gradients = Vec<(String, f64, f64, f64)>;

fn record(
    g: &mut Gradients,
    label: &str,
    evo: &Evolution,
    initial: &AdmissibleInitial,
    angle: &AngleFunction,
) {
    g.push((
        label.to_string(),
        evo.stats.max_slope,
        evo.stats.min_slope,
        initial.sup_slope().max(angle.k_sup()),
    ));
}

fn profiles() -> Vec<SelfSimilarProfile> {
    let tol = ProfileTolerances::default();
    let mut out = Vec::new();
    for &n in &DIMS {
        for &k in &SLOPES {
            out.push(solve_profile(n, k, &default_eps_schedule(), &tol).expect("profile"));
        }
    }
    out
}

fn criterion_1(profiles: &[SelfSimilarProfile], elapsed: Duration) -> Outcome {
    let opts = ProfileTolerances::default().shooting;
    let floor = *default_eps_schedule().last().unwrap();
    let mut fails = Vec::new();
    for p in profiles {
        let prob = ProfileProblem::new(p.dim, p.slope, floor).unwrap();
        let b = bracket_constants(&prob);
        let n1 = (p.dim - 1) as f64;
        let p1 = (2.0 * p.slope.atan() + (p.slope + 4.0) * n1) / (1.0 - p.slope);
        let p2 = n1 * p.slope / 2.0;
        let exact = b.p1 == p1 && b.p2 == p2;
        let inside = p.p >= p2 && p.p <= p1;
        let case_at = |p: f64| {
            integrate_ivp(&prob, p, &opts).map(|o| classify_case(&o.termination, opts.tol_classify))
        };
        let high = case_at(1.5 * p1);
        let low = case_at((p2 / 2.0).max(0.0));
        let high_ok = matches!(high, Ok(Case::Case1));
        let low_ok = matches!(low, Ok(Case::Case3) | Ok(Case::Case4));
        if !(exact && inside && high_ok && low_ok) {
            fails.push(format!(
                "(N={}, k={}): P={} in [{p2}, {p1}]={inside} high={high:?} low={low:?}",
                p.dim, p.slope, p.p
            ));
        }
    }
    let fast = elapsed < Duration::from_secs(10);
    Outcome {
        pass: fails.is_empty() && fast,
        detail: if fails.is_empty() {
            format!(
                "9 pairs bracketed and classified, {:.2} s",
                elapsed.as_secs_f64()
            )
        } else {
            fails.join("; ")
        },
    }
}

fn criterion_2(profiles: &[SelfSimilarProfile]) -> Outcome {
    let mut fails = Vec::new();
    let mut worst_res: f64 = 0.0;
    for p in profiles {
        let j = p.unit_index;
        let inner = 0..=j;
        let min_phi = p.phi[inner.clone()]
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        let max_phi = p.phi[inner.clone()]
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let slope_ok = p.phi_prime[inner.clone()]
            .iter()
            .all(|&d| d >= -1e-9 && d <= p.slope + 1e-9);
        let convex = p.phi_second[inner].iter().all(|&d| d >= -1e-9);
        let res = p.ode_residual_sup();
        worst_res = worst_res.max(res);
        let ok = min_phi > 0.0
            && max_phi <= 1.0 + 1e-9
            && slope_ok
            && convex
            && p.phi_prime[0].abs() <= 1e-6
            && (p.phi[j] - 1.0).abs() <= 1e-10
            && (p.phi_prime[j] - p.slope).abs() <= 1e-8
            && res <= 1e-6;
        if !ok {
            fails.push(format!(
                "(N={}, k={}): min={min_phi} max={max_phi} slope_ok={slope_ok} convex={convex} phi'(0)={} phi(1)-1={} phi'(1)-k={} res={res}",
                p.dim,
                p.slope,
                p.phi_prime[0],
                p.phi[j] - 1.0,
                p.phi_prime[j] - p.slope
            ));
        }
    }
    Outcome {
        pass: fails.is_empty(),
        detail: if fails.is_empty() {
            format!("all invariants hold, worst ODE residual {worst_res:e}")
        } else {
            fails.join("; ")
        },
    }
}

fn criterion_3(profiles: &[SelfSimilarProfile]) -> Outcome {
    let opts = ProfileTolerances::default().shooting;
    let floor = *default_eps_schedule().last().unwrap();
    let mut worst: f64 = 0.0;
    let mut fails = Vec::new();
    for p in profiles {
        let prob = ProfileProblem::new(p.dim, p.slope, floor).unwrap();
        let b = bracket_constants(&prob);
        let lo = if p.dim == 1 { 0.0 } else { b.p2 };
        let first = find_p_in(&prob, (lo, b.p1), &opts);
        let second = find_p_in(&prob, ((b.p2 / 2.0).max(0.0), 1.5 * b.p1), &opts);
        match (first, second) {
            (Ok((a, _)), Ok((c, _))) => {
                worst = worst.max((a - c).abs());
                if (a - c).abs() > 1e-6 {
                    fails.push(format!("(N={}, k={}): {a} vs {c}", p.dim, p.slope));
                }
            }
            (a, c) => fails.push(format!(
                "(N={}, k={}): {:?} / {:?}",
                p.dim,
                p.slope,
                a.err(),
                c.err()
            )),
        }
    }
    Outcome {
        pass: fails.is_empty(),
        detail: if fails.is_empty() {
            format!("largest disagreement {worst:e}")
        } else {
            fails.join("; ")
        },
    }
}

fn snapshot_error(evo: &Evolution, exact: &SelfSimilarSolution, t: f64) -> f64 {
    let s = evo.last();
    let mut err = (s.xi - exact.radius(t)).abs();
    for (&r, &u) in s.r.iter().zip(&s.u) {
        err = err.max((u - exact.eval_extended(r, t).unwrap()).abs());
    }
    err
}

struct Regression {
    errors: Vec<(usize, f64)>,
    spatial: Vec<f64>,
    temporal: Vec<f64>,
}

fn regression_setup(dim: usize, k: f64) -> (SelfSimilarSolution, AngleFunction, AdmissibleInitial) {
    let prof = solve_profile(
        dim,
        k,
        &default_eps_schedule(),
        &ProfileTolerances::default(),
    )
    .unwrap();
    let sol = SelfSimilarSolution::new(Arc::new(prof), 1.0).unwrap();
    let angle = AngleFunction::constant(k).unwrap();
    let initial = AdmissibleInitial::from_self_similar(&sol, &angle, 0.0, 2000).unwrap();
    (sol, angle, initial)
}

fn criterion_4(grads: &mut Gradients) -> Outcome {
    let start = Instant::now();
    let mut reg = Regression {
        errors: Vec::new(),
        spatial: Vec::new(),
        temporal: Vec::new(),
    };
    for dim in [1, 2] {
        let (sol, angle, initial) = regression_setup(dim, 0.5);
        let evo = evolve(&initial, &angle, dim, &SolverConfig::default(), 1.0, &[]).unwrap();
        record(
            grads,
            &format!("regression N={dim}"),
            &evo,
            &initial,
            &angle,
        );
        reg.errors.push((dim, snapshot_error(&evo, &sol, 1.0)));
    }
    let (sol, angle, initial) = regression_setup(2, 0.5);
    let run = |grid: usize, dt: f64| {
        let config = SolverConfig {
            grid,
            stepping: TimeStepping::Fixed { dt },
            ..SolverConfig::default()
        };
        let evo = evolve(&initial, &angle, 2, &config, 1.0, &[]).unwrap();
        snapshot_error(&evo, &sol, 1.0)
    };
    let space: Vec<f64> = [50, 100, 200].iter().map(|&m| run(m, 1e-4)).collect();
    let time: Vec<f64> = [0.02, 0.01, 0.005].iter().map(|&dt| run(400, dt)).collect();
    reg.spatial = space.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    reg.temporal = time.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let elapsed = start.elapsed();
    let err_ok = reg.errors.iter().all(|&(_, e)| e <= 5e-3);
    let space_ok = reg.spatial.iter().all(|&o| o >= 1.8);
    let time_ok = reg.temporal.iter().all(|&o| o >= 0.9);
    let fast = elapsed < Duration::from_secs(60);
    Outcome {
            pass: err_ok && space_ok && time_ok && fast,
            detail: format!(
                "errors {:?}, spatial errors {space:?} orders {:?}, temporal errors {time:?} orders {:?}, {:.2} s",
                reg.errors,
                reg.spatial,
                reg.temporal,
                elapsed.as_secs_f64()
            ),
        }
}

fn criterion_5(grads: &mut Gradients) -> Outcome {
    let start = Instant::now();
    let (sol, angle, initial) = regression_setup(2, 0.5);
    let config = SolverConfig::default();
    let a = evolve(&initial, &angle, 2, &config, 1.0, &[]).unwrap();
    let b = solve_direct(&initial, &angle, 2, &config, 1.0, &[]).unwrap();
    record(grads, "cross transformed", &a, &initial, &angle);
    record(grads, "cross direct", &b, &initial, &angle);
    let (ea, eb) = (snapshot_error(&a, &sol, 1.0), snapshot_error(&b, &sol, 1.0));
    let (sa, sb) = (a.last(), b.last());
    let ib = sb.interpolant().unwrap();
    let reach = sa.xi.min(sb.xi);
    let mut diff = (sa.xi - sb.xi).abs();
    for (&r, &u) in sa.r.iter().zip(&sa.u) {
        if r <= reach {
            diff = diff.max((u - ib.eval(r)).abs());
        }
    }
    let elapsed = start.elapsed();
    Outcome {
        pass: diff <= ea + eb && ea <= 5e-3 && eb <= 5e-3 && elapsed < Duration::from_secs(120),
        detail: format!(
            "difference {diff:e} against errors {ea:e} + {eb:e}, {:.2} s",
            elapsed.as_secs_f64()
        ),
    }
}

fn ordered_pair(
    dim: usize,
    angle: &AngleFunction,
    shifts: (f64, f64),
    label: &str,
    grads: &mut Gradients,
) -> (f64, bool) {
    let prof = Arc::new(
        solve_profile(
            dim,
            angle.k0(),
            &default_eps_schedule(),
            &ProfileTolerances::default(),
        )
        .unwrap(),
    );
    let lo = SelfSimilarSolution::new(prof.clone(), shifts.0).unwrap();
    let hi = SelfSimilarSolution::new(prof, shifts.1).unwrap();
    let gap = hi.radius(0.0) - lo.radius(0.0);
    let width = angle.period().unwrap_or(gap).min(gap);
    let a = AdmissibleInitial::from_self_similar(&lo, angle, width, 2000).unwrap();
    let b = AdmissibleInitial::from_self_similar(&hi, angle, width, 2000).unwrap();
    let ga = OrderedGraph::new(a.r.clone(), a.u.clone()).unwrap();
    let gb = OrderedGraph::new(b.r.clone(), b.u.clone()).unwrap();
    let initially = preceq(&ga, &gb, 0.0).holds;
    let marks: Vec<f64> = (1..=10).map(|i| 0.5 * i as f64).collect();
    let config = SolverConfig::default();
    let ea = evolve(&a, angle, dim, &config, 5.0, &marks).unwrap();
    let eb = evolve(&b, angle, dim, &config, 5.0, &marks).unwrap();
    record(grads, &format!("{label} lower"), &ea, &a, angle);
    record(grads, &format!("{label} upper"), &eb, &b, angle);
    let mut worst: f64 = 0.0;
    for (sa, sb) in ea.snapshots.iter().zip(&eb.snapshots) {
        assert_eq!(sa.t, sb.t);
        let w = preceq(
            &OrderedGraph::from_snapshot(sa).unwrap(),
            &OrderedGraph::from_snapshot(sb).unwrap(),
            0.0,
        );
        worst = worst.max(w.max_violation).max(w.xi_excess);
    }
    (worst, initially)
}

fn criterion_6(grads: &mut Gradients) -> Outcome {
    let mut order = Vec::new();
    let constant = AngleFunction::constant(0.5).unwrap();
    order.push((
        "constant N=2",
        ordered_pair(2, &constant, (1.0, 1.5), "order constant", grads),
    ));
    let wavy = AngleFunction::sinusoid(0.3, 0.6, 0.2).unwrap();
    order.push((
        "sinusoid N=1",
        ordered_pair(1, &wavy, (1.0, 1.5), "order sinusoid", grads),
    ));
    let order_ok = order
        .iter()
        .all(|(_, (v, init))| *init && *v <= GRADIENT_SLACK);
    let bad: Vec<&String> = grads
        .iter()
        .filter(|(_, hi, lo, cap)| !(hi.abs().max(lo.abs()) <= cap + GRADIENT_SLACK))
        .map(|g| &g.0)
        .collect();
    let margin = grads
        .iter()
        .map(|(_, hi, lo, cap)| hi.abs().max(lo.abs()) - cap)
        .fold(f64::NEG_INFINITY, f64::max);
    Outcome {
        pass: order_ok && bad.is_empty(),
        detail: format!(
            "{} runs, largest |u_r| excess over the bound {margin:e}, violations {bad:?}; order violations {:?}",
            grads.len(),
            order.iter().map(|(l, (v, init))| format!("{l}: {v:e} (ordered at t=0: {init})")).collect::<Vec<_>>()
        ),
    }
}

fn criterion_7() -> Outcome {
    let (r_star, k0) = (2.0, 0.5);
    let b = barrier_solve(r_star, k0, 2, 2000).unwrap();
    let k = b.slope_constant();
    let collar_end = (r_star / 2.0).max(b.r_min());
    let mut worst = f64::NEG_INFINITY;
    for (&r, &d) in b.r.iter().zip(&b.v_r) {
        if r >= collar_end {
            worst = worst.max(d - (k0 + k * (r_star.ln() - r.ln())));
        }
    }
    let line = barrier_solve(r_star, k0, 1, 2000).unwrap();
    let line_err = line
        .r
        .iter()
        .zip(&line.v)
        .map(|(r, v)| (v - (r_star + k0 * (r - r_star))).abs())
        .fold(0.0, f64::max);
    Outcome {
        pass: worst <= 1e-8 && line_err <= 1e-12 && k == 2.0,
        detail: format!("K={k}, max(v_r - bound) on [{collar_end}, {r_star}] = {worst:e}, N=1 line error {line_err:e}"),
    }
}

fn criterion_8() -> Outcome {
    let q = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
    let printed =
        a_n(2) == q(2, 7) && b_n(2) == q(3, 28) && a_n(3) == q(11, 31) && b_n(3) == q(9, 124);
    let ids = verify_identities(20);
    Outcome {
        pass: printed && ids.is_ok(),
        detail: format!(
            "printed values match: {printed}; identities n=1..20: {ids:?}; B_20 = {}",
            big_b_closed(20)
        ),
    }
}

fn sweep_config() -> SandwichConfig {
    SandwichConfig {
        cap: 200.0,
        ..SandwichConfig::default()
    }
}

fn criterion_9(grads: &mut Gradients) -> (Outcome, Vec<SandwichReport>) {
    let start = Instant::now();
    let reports = sweep(1, 0.3, 0.6, &[0.4, 0.2, 0.1], 1.0, 1.5, &sweep_config()).unwrap();
    let elapsed = start.elapsed();
    for r in &reports {
        grads.push((
            format!("sandwich eps={}", r.eps),
            r.stats.max_slope,
            r.stats.min_slope,
            0.6f64.max(r.k_sup),
        ));
    }
    let lower_ok = reports.iter().all(|r| r.lower_gap_min >= -5e-3);
    // reports come in increasing eps
    let decreasing = reports.windows(2).all(|w| w[0].sup_error < w[1].sup_error);
    let sup = fit_reports(&reports, ErrorMetric::Sup);
    let end = fit_reports(&reports, ErrorMetric::End);
    let slope_ok = matches!(&sup, Ok(f) if f.slope > 0.0);
    let table: Vec<String> = reports
        .iter()
        .map(|r| {
            format!(
                "eps={} T={} sup={:.4e} end={:.4e} lower_min={:.3e}",
                r.eps, r.window, r.sup_error, r.end_error, r.lower_gap_min
            )
        })
        .collect();
    (
        Outcome {
            pass: lower_ok && decreasing && slope_ok && elapsed < Duration::from_secs(900),
            detail: format!(
                "{}; fitted slope sup={:.4} end={:.4} (theoretical bound 1/6 = {:.4}), {:.2} s",
                table.join(", "),
                sup.as_ref().map_or(f64::NAN, |f| f.slope),
                end.as_ref().map_or(f64::NAN, |f| f.slope),
                1.0 / 6.0,
                elapsed.as_secs_f64()
            ),
        },
        reports,
    )
}

fn csv_bytes(r: &SandwichReport) -> Vec<u8> {
    let mut buf = Vec::new();
    write_sweep_csv(&mut buf, std::slice::from_ref(r)).unwrap();
    write_series_csv(&mut buf, r).unwrap();
    buf
}

fn criterion_10(reports: &[SandwichReport]) -> Outcome {
    let smallest = &reports[0];
    let prof = Arc::new(
        solve_profile(
            1,
            0.3,
            &default_eps_schedule(),
            &ProfileTolerances::default(),
        )
        .unwrap(),
    );
    let angle = AngleFunction::sinusoid(0.3, 0.6, smallest.eps).unwrap();
    let again = run_sandwich_with(prof, &angle, 1.0, 1.5, &sweep_config()).unwrap();
    let (a, b) = (csv_bytes(smallest), csv_bytes(&again));
    Outcome {
        pass: a == b,
        detail: format!(
            "eps={} rerun, {} bytes, identical: {}",
            smallest.eps,
            a.len(),
            a == b
        ),
    }
}

fn main() {
    let mut results: Vec<(usize, Outcome)> = Vec::new();
    let mut grads = Gradients::new();

    let start = Instant::now();
    let profs = profiles();
    results.push((1, criterion_1(&profs, start.elapsed())));
    results.push((2, criterion_2(&profs)));
    results.push((3, criterion_3(&profs)));
    results.push((4, criterion_4(&mut grads)));
    results.push((5, criterion_5(&mut grads)));
    results.push((7, criterion_7()));
    results.push((8, criterion_8()));
    let (c9, reports) = criterion_9(&mut grads);
    results.push((9, c9));
    results.push((10, criterion_10(&reports)));
    // gradients are collected from every run above
    results.push((6, criterion_6(&mut grads)));
    results.sort_by_key(|r| r.0);

    let mut failed = 0;
    for (n, o) in &results {
        println!(
            "criterion {n:>2} {}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        if !o.pass {
            failed += 1;
        }
    }
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
