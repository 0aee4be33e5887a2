//! Turnkey reference run: the two sampling bounds and two closed-loop simulations.

use std::io::{self, Write};
use std::time::Instant;

use kse_core::field::{c0_norm, MeasurementMode};
use kse_core::lmi::search::max_h;
use kse_core::lmi::{solve_feasibility, Certificate, LmiProblem, SolverOptions, VarId};
use kse_core::sim::{self, ControlMode, IcKind, InitialCondition, MonitorWeights, SimConfig, SimOutput};

use crate::lmi_cmd::{family, Problem};
use crate::{CliError, LmiArgs};

/// Published quadratic weights used to complete the remaining certificate variables.
pub const REFERENCE_P1: f64 = 80.6354;
pub const REFERENCE_P2: f64 = 5.145;
pub const REFERENCE_DELTA: f64 = 0.1;
pub const THM1_RANGE: (f64, f64) = (0.37, 0.41);
pub const THM2_RANGE: (f64, f64) = (0.35, 0.39);
pub const H_BRACKET: (f64, f64) = (0.3, 0.5);
pub const H_TOL: f64 = 0.005;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ReproduceOptions {
    /// Simulations at m = 32.
    pub quick: bool,
    /// Decay rate used by the averaged-measurement bound instead of 0.1.
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub name: &'static str,
    pub expected: String,
    pub observed: String,
    pub passed: bool,
    /// Set when the stage ran with parameters other than the reference ones.
    pub deviation: Option<String>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub stages: Vec<Stage>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.stages.iter().all(|s| s.passed)
    }

    pub fn first_failure(&self) -> Option<&Stage> {
        self.stages.iter().find(|s| !s.passed)
    }

    pub fn write_table(&self, out: &mut dyn Write) -> io::Result<()> {
        writeln!(out, "stage,result,expected,observed,deviation,seconds")?;
        for s in &self.stages {
            writeln!(
                out,
                "{},{},{},{},{},{:.3}",
                s.name,
                if s.passed { "pass" } else { "fail" },
                s.expected,
                s.observed,
                s.deviation.as_deref().unwrap_or(""),
                s.seconds
            )?;
        }
        Ok(())
    }
}

/// Completes the certificate with `p1`, `p2` fixed to the published values.
pub fn completion_at(h: f64, delta: f64) -> Result<Option<Certificate>, CliError> {
    let fam = family(Problem::Thm1, &LmiArgs { h, delta: Some(delta), ..LmiArgs::default() })?;
    let fixed = Certificate::new().with(VarId::P1, REFERENCE_P1).with(VarId::P2, REFERENCE_P2);
    let prob = LmiProblem::compile_with_fixed(&fam, &fixed)?;
    Ok(solve_feasibility(&prob, &SolverOptions::default()).certificate().cloned())
}

/// Reference closed-loop run: averaged sampled control from `0.236 sin sin`, t in [0, 14].
pub fn reference_sim_config(m: usize, h: f64, monitor: Option<MonitorWeights>) -> SimConfig {
    SimConfig {
        m,
        dt: 2.5e-4,
        t_end: 14.0,
        kappa: -0.5,
        mu: 0.95,
        control: ControlMode::Sampled,
        measurement: MeasurementMode::Averaged,
        h,
        delta_bar: 0.25,
        ic: InitialCondition { kind: IcKind::SinSin, amplitude: 0.236 },
        monitor,
        output_stride: 40,
        snapshots: vec![0.0, 1.4, 14.0],
    }
}

/// Monitor weights from the published completion at h = 0.35.
pub fn reference_monitor() -> Result<MonitorWeights, CliError> {
    let cert = completion_at(0.35, REFERENCE_DELTA)?
        .ok_or_else(|| CliError::Usage("no completion of the published weights at h = 0.35".into()))?;
    Ok(MonitorWeights {
        p1: REFERENCE_P1,
        p2: REFERENCE_P2,
        r: cert.get(VarId::R).unwrap_or(0.0),
        delta: REFERENCE_DELTA,
    })
}

fn snapshot_c0(out: &SimOutput, t: f64) -> Option<f64> {
    out.snapshots.iter().find(|(s, _)| (s - t).abs() < 1e-9).map(|(_, f)| c0_norm(f))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayCheck {
    pub v1_ratio: f64,
    pub c0_ratio: f64,
    pub passed: bool,
}

/// `V1(10) / V1(0) <= 1.2 e^-2` and `|z(14)|_C0 <= 1e-2 |z0|_C0`.
pub fn decay_check(out: &SimOutput) -> DecayCheck {
    let v0 = out.series.first().map_or(f64::NAN, |r| r.v1);
    let v10 = out.series.at(10.0).map_or(f64::NAN, |r| r.v1);
    let c00 = snapshot_c0(out, 0.0).unwrap_or(f64::NAN);
    let c014 = snapshot_c0(out, 14.0).unwrap_or(f64::NAN);
    let v1_ratio = v10 / v0;
    let c0_ratio = c014 / c00;
    DecayCheck {
        v1_ratio,
        c0_ratio,
        passed: !out.blowup && v1_ratio <= (-2.0f64).exp() * 1.2 && c0_ratio <= 1e-2,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundedCheck {
    pub sup_ratio: f64,
    pub final_ratio: f64,
    pub passed: bool,
}

/// No blow-up, `sup |z|_C0 <= 2 |z0|_C0` and `|z(T)|_C0 <= 1e-2 |z0|_C0`.
pub fn bounded_check(out: &SimOutput) -> BoundedCheck {
    let c00 = out.series.first().map_or(f64::NAN, |r| r.c0);
    let sup = out.series.rows.iter().map(|r| r.c0).fold(0.0, f64::max);
    let last = out.series.last().map_or(f64::NAN, |r| r.c0);
    let (sup_ratio, final_ratio) = (sup / c00, last / c00);
    BoundedCheck {
        sup_ratio,
        final_ratio,
        passed: !out.blowup && sup_ratio <= 2.0 && final_ratio <= 1e-2,
    }
}

fn bound_stage(
    name: &'static str,
    problem: Problem,
    delta: Option<f64>,
    range: (f64, f64),
    deviation: Option<String>,
) -> Result<Stage, CliError> {
    let start = Instant::now();
    let args = LmiArgs { h: H_BRACKET.0, delta, ..LmiArgs::default() };
    let fam = family(problem, &args)?;
    let rep = max_h(&fam, H_BRACKET.0, H_BRACKET.1, H_TOL, false, &SolverOptions::default());
    let (observed, passed) = match rep {
        Ok(r) => (format!("h*={:.12}", r.h_star), (range.0..=range.1).contains(&r.h_star)),
        Err(e) => (format!("no certificate ({e})"), false),
    };
    Ok(Stage {
        name,
        expected: format!("h* in [{}; {}]", range.0, range.1),
        observed,
        passed,
        deviation,
        seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn reproduce(opts: &ReproduceOptions, progress: &mut dyn Write) -> Result<Report, CliError> {
    let m = if opts.quick { 32 } else { 64 };
    // validate every stage's parameters before any compute starts
    if let Some(d) = opts.delta {
        family(Problem::Thm1, &LmiArgs { delta: Some(d), ..LmiArgs::default() })?;
    }
    reference_sim_config(m, 2.0, None).validate()?;

    let mut report = Report::default();
    let deviation = opts.delta.filter(|d| *d != REFERENCE_DELTA).map(|d| format!("delta={d}"));
    writeln!(progress, "# stage 1/4: averaged-measurement sampling bound")?;
    report.stages.push(bound_stage(
        "thm1_max_h",
        Problem::Thm1,
        Some(opts.delta.unwrap_or(REFERENCE_DELTA)),
        THM1_RANGE,
        deviation,
    )?);

    writeln!(progress, "# stage 2/4: point-measurement sampling bound")?;
    report.stages.push(bound_stage("thm2_max_h", Problem::Thm2, Some(0.2), THM2_RANGE, None)?);

    writeln!(progress, "# stage 3/4: closed loop at h = 0.35, m = {m}")?;
    let start = Instant::now();
    let out = sim::run(&reference_sim_config(m, 0.35, Some(reference_monitor()?)))?;
    let d = decay_check(&out);
    report.stages.push(Stage {
        name: "decay_h0.35",
        expected: format!("V1(10)/V1(0)<={:.6e}; c0(14)/c0(0)<=1e-2", (-2.0f64).exp() * 1.2),
        observed: format!("V1(10)/V1(0)={:.12e}; c0(14)/c0(0)={:.12e}", d.v1_ratio, d.c0_ratio),
        passed: d.passed,
        deviation: None,
        seconds: start.elapsed().as_secs_f64(),
    });

    writeln!(progress, "# stage 4/4: closed loop at h = 2.0, m = {m}")?;
    let start = Instant::now();
    let out = sim::run(&reference_sim_config(m, 2.0, None))?;
    let b = bounded_check(&out);
    report.stages.push(Stage {
        name: "bounded_h2.0",
        expected: "no blowup; sup c0/c0(0)<=2; c0(T)/c0(0)<=1e-2".into(),
        observed: format!("blowup={}; sup c0/c0(0)={:.12e}; c0(T)/c0(0)={:.12e}", out.blowup, b.sup_ratio, b.final_ratio),
        passed: b.passed,
        deviation: None,
        seconds: start.elapsed().as_secs_f64(),
    });
    Ok(report)
}
