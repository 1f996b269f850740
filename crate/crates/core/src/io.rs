//! Plain CSV export and the tabulated angle file format.
//!
//! Floats are written with `{}` (shortest round-trip form), so identical runs
//! produce identical bytes.

use std::io::{BufRead, Write};

use crate::compare::Barrier;
use crate::error::{Error, Result};
use crate::homog::{SandwichReport, Schedule};
use crate::pde::{AngleFunction, Snapshot};
use crate::profile::SelfSimilarProfile;

fn io_err(e: std::io::Error) -> Error {
    Error::Parse(format!("write failed: {e}"))
}

pub fn write_profile_csv<W: Write>(out: &mut W, p: &SelfSimilarProfile) -> Result<()> {
    writeln!(out, "z,Phi,Phi_prime,Phi_second").map_err(io_err)?;
    for i in 0..p.z.len() {
        writeln!(
            out,
            "{},{},{},{}",
            p.z[i], p.phi[i], p.phi_prime[i], p.phi_second[i]
        )
        .map_err(io_err)?;
    }
    Ok(())
}

pub fn write_snapshots_csv<W: Write>(out: &mut W, snaps: &[Snapshot]) -> Result<()> {
    writeln!(out, "t,zeta,v,r,u,u_r").map_err(io_err)?;
    for s in snaps {
        for i in 0..s.r.len() {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                s.t, s.zeta[i], s.v[i], s.r[i], s.u[i], s.u_r[i]
            )
            .map_err(io_err)?;
        }
    }
    Ok(())
}

pub fn write_sweep_csv<W: Write>(out: &mut W, reports: &[SandwichReport]) -> Result<()> {
    writeln!(out, "eps,T_window,sup_error,end_error,lower_gap_min").map_err(io_err)?;
    for r in reports {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.eps, r.window, r.sup_error, r.end_error, r.lower_gap_min
        )
        .map_err(io_err)?;
    }
    Ok(())
}

pub fn write_series_csv<W: Write>(out: &mut W, report: &SandwichReport) -> Result<()> {
    writeln!(out, "t,xi,lower_gap,upper_gap,excess").map_err(io_err)?;
    for p in &report.series {
        writeln!(
            out,
            "{},{},{},{},{}",
            p.t, p.xi, p.lower_gap, p.upper_gap, p.excess
        )
        .map_err(io_err)?;
    }
    Ok(())
}

pub fn write_schedule_csv<W: Write>(out: &mut W, rows: &[Schedule]) -> Result<()> {
    writeln!(out, "n,a_n,b_n,B_n,tau_n,T_n,S_n,curly_T_n,curly_S_n").map_err(io_err)?;
    for s in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            s.n, s.a_n, s.b_n, s.big_b_n, s.tau_n, s.t_n, s.s_n, s.curly_t_n, s.curly_s_n
        )
        .map_err(io_err)?;
    }
    Ok(())
}

pub fn write_barrier_csv<W: Write>(out: &mut W, b: &Barrier) -> Result<()> {
    writeln!(out, "r,v,v_r,v_rr").map_err(io_err)?;
    for i in 0..b.r.len() {
        writeln!(out, "{},{},{},{}", b.r[i], b.v[i], b.v_r[i], b.v_rr[i]).map_err(io_err)?;
    }
    Ok(())
}

/// Reads a tabulated angle:
///
/// ```text
/// # period=0.2
/// u,k
/// 0.0,0.3
/// 0.05,0.45
/// ```
///
/// The `u,k` header is optional; other `#` lines and blank lines are skipped.
pub fn read_angle_file<R: BufRead>(input: R) -> Result<AngleFunction> {
    let mut period = None;
    let (mut u, mut k) = (Vec::new(), Vec::new());
    for (n, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse(format!("line {}: {e}", n + 1)))?;
        let line = line.trim();
        if line.is_empty() || line.eq_ignore_ascii_case("u,k") {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(v) = rest.trim().strip_prefix("period=") {
                let p: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("line {}: bad period {v:?}", n + 1)))?;
                period = Some(p);
            }
            continue;
        }
        let mut fields = line.split(',').map(str::trim);
        let mut next = |what: &str| -> Result<f64> {
            let f = fields
                .next()
                .ok_or_else(|| Error::Parse(format!("line {}: missing {what}", n + 1)))?;
            f.parse()
                .map_err(|_| Error::Parse(format!("line {}: bad {what} {f:?}", n + 1)))
        };
        u.push(next("u")?);
        k.push(next("k")?);
        if fields.next().is_some() {
            return Err(Error::Parse(format!("line {}: expected two fields", n + 1)));
        }
    }
    let period = period.ok_or_else(|| Error::Parse("missing '# period=' header".into()))?;
    AngleFunction::tabulated(period, u, k)
}
