//! Log-log fits of sandwich errors against the period.

use serde::Serialize;

use super::sandwich::SandwichReport;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineFit {
    /// Fitted exponent of `eps`.
    pub slope: f64,
    pub intercept: f64,
    /// `log(err) - (intercept + slope log(eps))` per point.
    pub residuals: Vec<f64>,
}

/// Least squares fit of `log(err)` against `log(eps)`; needs at least three points.
pub fn fit_exponent(eps: &[f64], err: &[f64]) -> Result<LineFit> {
    if eps.len() != err.len() || eps.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "{} periods against {} errors",
            eps.len(),
            err.len()
        )));
    }
    if let Some(e) = err.iter().find(|&&e| !(e > 0.0)) {
        return Err(Error::DegenerateFit(format!("error {e} has no logarithm")));
    }
    if let Some(e) = eps.iter().find(|&&e| !(e > 0.0)) {
        return Err(Error::DegenerateFit(format!("period {e} has no logarithm")));
    }
    let x: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let y: Vec<f64> = err.iter().map(|e| e.ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if !(sxx > 1e-24) {
        return Err(Error::DegenerateFit("periods are not distinct".into()));
    }
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals = x
        .iter()
        .zip(&y)
        .map(|(a, b)| b - intercept - slope * a)
        .collect();
    Ok(LineFit {
        slope,
        intercept,
        residuals,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMetric {
    /// Time maximum over the window.
    Sup,
    /// Value at the end of the window.
    End,
}

pub fn fit_reports(reports: &[SandwichReport], metric: ErrorMetric) -> Result<LineFit> {
    let eps: Vec<f64> = reports.iter().map(|r| r.eps).collect();
    let err: Vec<f64> = reports
        .iter()
        .map(|r| match metric {
            ErrorMetric::Sup => r.sup_error,
            ErrorMetric::End => r.end_error,
        })
        .collect();
    fit_exponent(&eps, &err)
}
