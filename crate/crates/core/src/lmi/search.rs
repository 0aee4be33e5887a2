//! Largest sampling period with a verified certificate.

use super::assemble::Family;
use super::problem::LmiProblem;
use super::solver::{solve_feasibility, SolveOutcome, SolverOptions};
use super::verify::verify_certificate;
use super::{Certificate, LmiError};

/// A feasible sample found above an infeasible one during the scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanAnomaly {
    pub infeasible_h: f64,
    pub feasible_h: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxHReport {
    /// Largest bisection point that was verified feasible.
    pub h_star: f64,
    pub certificate: Certificate,
    pub bisection: Vec<(f64, bool)>,
    /// `(h, verified feasible)` on the uniform grid, empty when the scan is skipped.
    pub scan: Vec<(f64, bool)>,
    pub anomalies: Vec<ScanAnomaly>,
}

impl MaxHReport {
    /// Last feasible grid point before the first infeasible one.
    pub fn scan_h_star(&self) -> Option<f64> {
        let mut last = None;
        for &(h, ok) in &self.scan {
            if !ok {
                break;
            }
            last = Some(h);
        }
        last
    }
}

/// Solves at `h` and accepts only certificates that pass verification.
pub fn feasible_at(family: &Family, h: f64, opts: &SolverOptions) -> Result<Option<Certificate>, LmiError> {
    let fam = family.with_h(h)?;
    let prob = LmiProblem::compile(&fam)?;
    match solve_feasibility(&prob, opts) {
        SolveOutcome::Feasible { certificate, .. } => {
            let rep = verify_certificate(&fam, &certificate, opts.eps)?;
            Ok(rep.passed().then_some(certificate))
        }
        _ => Ok(None),
    }
}

pub fn max_h(
    family: &Family,
    h_lo: f64,
    h_hi: f64,
    tol: f64,
    scan: bool,
    opts: &SolverOptions,
) -> Result<MaxHReport, LmiError> {
    if !(tol > 0.0) || !(h_lo > 0.0) || !(h_hi > h_lo) {
        return Err(LmiError::Precondition(format!(
            "need 0 < h_lo < h_hi and tol > 0, got h_lo={h_lo}, h_hi={h_hi}, tol={tol}"
        )));
    }
    let mut certificate = feasible_at(family, h_lo, opts)?
        .ok_or_else(|| LmiError::Precondition(format!("not feasible at h_lo = {h_lo}")))?;
    if feasible_at(family, h_hi, opts)?.is_some() {
        return Err(LmiError::Precondition(format!("feasible at h_hi = {h_hi}")));
    }
    let (mut lo, mut hi) = (h_lo, h_hi);
    let mut bisection = Vec::new();
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let cert = feasible_at(family, mid, opts)?;
        bisection.push((mid, cert.is_some()));
        match cert {
            Some(c) => {
                lo = mid;
                certificate = c;
            }
            None => hi = mid,
        }
    }

    let mut grid = Vec::new();
    let mut anomalies = Vec::new();
    if scan {
        let steps = ((h_hi - h_lo) / tol).round() as usize;
        let mut first_infeasible: Option<f64> = None;
        for k in 0..=steps {
            let h = (h_lo + k as f64 * tol).min(h_hi);
            let ok = feasible_at(family, h, opts)?.is_some();
            grid.push((h, ok));
            match (ok, first_infeasible) {
                (false, None) => first_infeasible = Some(h),
                (true, Some(bad)) => anomalies.push(ScanAnomaly { infeasible_h: bad, feasible_h: h }),
                _ => {}
            }
        }
    }
    Ok(MaxHReport { h_star: lo, certificate, bisection, scan: grid, anomalies })
}
