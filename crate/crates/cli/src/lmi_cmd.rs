//! `lmi` subcommands and the certificate CSV line.

use std::io::Write;

use kse_core::lmi::search::max_h;
use kse_core::lmi::{
    solve_feasibility, verify_certificate, Certificate, ContinuousAvgParams, Family, Lambda2Mode, LmiProblem,
    SampledAvgParams, SampledPointParams, SolveOutcome, SolverOptions, ThetaBarVariant, VarId,
};

use crate::{CliError, Lambda2Arg, LmiArgs, LmiCommand, SampledProblem, ThetaBarArg};

pub const CSV_HEADER: &str = "status,h,p1,p2,r,gamma,eta,lambda1,lambda2,lambda3,beta1,beta2,beta3,max_eig_worst";

const CSV_VARS: [VarId; 11] = [
    VarId::P1,
    VarId::P2,
    VarId::R,
    VarId::Gamma,
    VarId::Eta,
    VarId::Lambda1,
    VarId::Lambda2,
    VarId::Lambda3,
    VarId::Beta1,
    VarId::Beta2,
    VarId::Beta3,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Problem {
    Prop1,
    Prop2,
    Thm1,
    Thm2,
}

impl From<SampledProblem> for Problem {
    fn from(p: SampledProblem) -> Self {
        match p {
            SampledProblem::Thm1 => Problem::Thm1,
            SampledProblem::Thm2 => Problem::Thm2,
        }
    }
}

pub fn family(problem: Problem, a: &LmiArgs) -> Result<Family, CliError> {
    let delta = a.delta.unwrap_or(if problem == Problem::Thm2 { 0.2 } else { 0.1 });
    let base = ContinuousAvgParams::new(a.mu, delta, a.kappa, a.delta_bar)?;
    Ok(match problem {
        Problem::Prop1 => Family::Prop1 { p: base, mu_free: a.mu_free },
        Problem::Prop2 => Family::Prop2 { p: base },
        Problem::Thm1 => Family::Thm1 { p: SampledAvgParams::new(base, a.h, a.c_bound)? },
        Problem::Thm2 => Family::Thm2 {
            p: SampledPointParams::new(SampledAvgParams::new(base, a.h, a.c_bound)?, a.delta1)?,
            theta_bar: match a.theta_bar {
                ThetaBarArg::Corrected => ThetaBarVariant::Corrected,
                ThetaBarArg::Verbatim => ThetaBarVariant::Verbatim,
            },
            lambda2: match a.lambda2 {
                Lambda2Arg::Free => Lambda2Mode::Free,
                Lambda2Arg::Nonnegative => Lambda2Mode::NonNegative,
            },
        },
    })
}

fn solver_options(eps: f64) -> Result<SolverOptions, CliError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(CliError::Usage(format!("--eps must be in (0, 1), got {eps}")));
    }
    Ok(SolverOptions { eps, ..SolverOptions::default() })
}

/// One row under [`CSV_HEADER`]; empty cells for variables the family lacks.
pub fn csv_line(status: &str, h: Option<f64>, cert: Option<&Certificate>, max_eig: Option<f64>) -> String {
    let num = |v: Option<f64>| v.map(|x| format!("{x:.12e}")).unwrap_or_default();
    let mut cells = vec![status.to_string(), num(h)];
    cells.extend(CSV_VARS.iter().map(|id| num(cert.and_then(|c| c.get(*id)))));
    cells.push(num(max_eig));
    cells.join(",")
}

/// Result of solving one family: status, verified certificate and worst eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveSummary {
    pub status: &'static str,
    pub certificate: Option<Certificate>,
    pub max_eig_worst: Option<f64>,
    pub detail: String,
}

pub fn solve_family(fam: &Family, eps: f64) -> Result<SolveSummary, CliError> {
    let opts = solver_options(eps)?;
    let prob = LmiProblem::compile(fam)?;
    Ok(match solve_feasibility(&prob, &opts) {
        SolveOutcome::Feasible { certificate, margin, newton_steps } => {
            let rep = verify_certificate(fam, &certificate, eps)?;
            let worst = rep.worst_max_eig();
            if rep.passed() {
                SolveSummary {
                    status: "feasible",
                    certificate: Some(certificate),
                    max_eig_worst: Some(worst),
                    detail: format!("margin {margin:.3e} after {newton_steps} Newton steps"),
                }
            } else {
                SolveSummary {
                    status: "unverified",
                    certificate: Some(certificate),
                    max_eig_worst: Some(worst),
                    detail: format!("verification failed: {}", rep.failures().join("; ")),
                }
            }
        }
        SolveOutcome::Infeasible { margin_bound, newton_steps } => SolveSummary {
            status: "infeasible",
            certificate: None,
            max_eig_worst: None,
            detail: format!("margin bound {margin_bound:.3e} after {newton_steps} Newton steps"),
        },
        SolveOutcome::NotConverged { reason, best_margin } => SolveSummary {
            status: "not_converged",
            certificate: None,
            max_eig_worst: None,
            detail: format!("{reason} (best margin {best_margin:.3e})"),
        },
    })
}

pub fn run(command: LmiCommand, out: &mut dyn Write) -> Result<u8, CliError> {
    let (problem, args) = match command {
        LmiCommand::Prop1(a) => (Problem::Prop1, a),
        LmiCommand::Prop2(a) => (Problem::Prop2, a),
        LmiCommand::Thm1(a) => (Problem::Thm1, a),
        LmiCommand::Thm2(a) => (Problem::Thm2, a),
        LmiCommand::MaxH(m) => return run_max_h(m.problem.into(), m.h_lo, m.h_hi, m.tol, !m.no_scan, &m.params, out),
    };
    if args.mu_free && problem != Problem::Prop1 {
        return Err(CliError::Usage("--mu-free applies to prop1 only".into()));
    }
    let fam = family(problem, &args)?;
    let s = solve_family(&fam, args.eps)?;
    writeln!(out, "{}: {} ({})", fam.name(), s.status, s.detail)?;
    writeln!(out, "{CSV_HEADER}")?;
    writeln!(out, "{}", csv_line(s.status, fam.h(), s.certificate.as_ref(), s.max_eig_worst))?;
    Ok(if s.status == "feasible" { 0 } else { 1 })
}

fn run_max_h(
    problem: Problem,
    h_lo: f64,
    h_hi: f64,
    tol: f64,
    scan: bool,
    args: &LmiArgs,
    out: &mut dyn Write,
) -> Result<u8, CliError> {
    let fam = family(problem, &LmiArgs { h: h_lo, ..args.clone() })?;
    let opts = solver_options(args.eps)?;
    let rep = max_h(&fam, h_lo, h_hi, tol, scan, &opts)?;
    writeln!(out, "{}: h* = {:.12} (bisection over [{h_lo}, {h_hi}], tol {tol})", fam.name(), rep.h_star)?;
    for (h, ok) in &rep.bisection {
        writeln!(out, "  h = {h:.12}: {}", if *ok { "feasible" } else { "infeasible" })?;
    }
    if scan {
        match rep.scan_h_star() {
            Some(h) => writeln!(out, "scan h* = {h:.12}")?,
            None => writeln!(out, "scan h* = none")?,
        }
        if rep.anomalies.is_empty() {
            writeln!(out, "monotonicity scan: no anomalies")?;
        }
        for a in &rep.anomalies {
            writeln!(out, "anomaly: infeasible at {:.12} but feasible at {:.12}", a.infeasible_h, a.feasible_h)?;
        }
    }
    let verified = verify_certificate(&fam.with_h(rep.h_star)?, &rep.certificate, args.eps)?;
    writeln!(out, "{CSV_HEADER}")?;
    writeln!(out, "{}", csv_line("feasible", Some(rep.h_star), Some(&rep.certificate), Some(verified.worst_max_eig())))?;
    Ok(0)
}
