//! One test per acceptance criterion. Each prints a single `PASS`/`FAIL` line
//! straight to stderr (visible without `--nocapture`) and then asserts.

use std::f64::consts::PI;
use std::io::Write;
use std::time::{Duration, Instant};

use kse_cli::lemmas::verify_lemmas;
use kse_cli::lmi_cmd::{family, solve_family, Problem};
use kse_cli::reproduce::{bounded_check, completion_at, decay_check, reference_monitor, reference_sim_config};
use kse_cli::{Lambda2Arg, LmiArgs, ThetaBarArg};
use kse_core::field::{biharmonic, c0_norm, d11, d22, dx1, dx1x2, inner, l2_sq, laplacian, region_integral, Field, Grid2D};
use kse_core::inequalities::{halanay_sigma, HalanayParams};
use kse_core::linalg::max_eigenvalue;
use kse_core::lmi::search::{feasible_at, max_h};
use kse_core::lmi::{verify_certificate, Certificate, Family, SolverOptions, DEFAULT_EPS};
use kse_core::sim::{self, ControlMode, IcKind, InitialCondition, SimConfig};

fn report(id: u32, title: &str, passed: bool, detail: &str) {
    let line = format!("[acceptance {id}] {} {title}: {detail}\n", if passed { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(passed, "criterion {id} ({title}) failed: {detail}");
}

fn args(h: f64) -> LmiArgs {
    LmiArgs { h, ..LmiArgs::default() }
}

fn thm2_args(h: f64, lambda2: Lambda2Arg) -> LmiArgs {
    LmiArgs { h, delta: Some(0.2), delta1: 0.15, lambda2, theta_bar: ThetaBarArg::Corrected, ..LmiArgs::default() }
}

fn status(problem: Problem, a: &LmiArgs) -> &'static str {
    solve_family(&family(problem, a).unwrap(), DEFAULT_EPS).unwrap().status
}

#[test]
fn criterion_1_averaged_sampling_bound() {
    let start = Instant::now();
    let s35 = status(Problem::Thm1, &args(0.35));
    let s39 = status(Problem::Thm1, &args(0.39));
    let s45 = status(Problem::Thm1, &args(0.45));
    let rep = max_h(&family(Problem::Thm1, &args(0.3)).unwrap(), 0.3, 0.5, 0.005, false, &SolverOptions::default());
    let elapsed = start.elapsed();
    let h_star = rep.as_ref().map(|r| r.h_star).unwrap_or(f64::NAN);
    let passed = s35 == "feasible"
        && s39 == "feasible"
        && s45 == "infeasible"
        && (0.37..=0.41).contains(&h_star)
        && elapsed < Duration::from_secs(10);
    let detail = format!(
        "h=0.35 {s35} (want feasible), h=0.39 {s39} (want feasible), h=0.45 {s45} (want infeasible), \
         h*={h_star:.6} (want [0.37, 0.41]), {:.2}s (want < 10s)",
        elapsed.as_secs_f64()
    );
    report(1, "averaged-measurement sampling bound", passed, &detail);
}

#[test]
fn criterion_2_point_sampling_bound() {
    let start = Instant::now();
    let fam = family(Problem::Thm2, &thm2_args(0.3, Lambda2Arg::Free)).unwrap();
    let rep = max_h(&fam, 0.3, 0.5, 0.005, false, &SolverOptions::default());
    let elapsed = start.elapsed();
    let h_star = rep.as_ref().map(|r| r.h_star).unwrap_or(f64::NAN);
    let passed = (0.35..=0.39).contains(&h_star) && elapsed < Duration::from_secs(10);
    let detail = format!("h*={h_star:.6} (want [0.35, 0.39]), {:.2}s (want < 10s)", elapsed.as_secs_f64());
    report(2, "point-measurement sampling bound", passed, &detail);
}

#[test]
fn criterion_3_certificate_round_trip() {
    let mut cases: Vec<(String, Family)> = Vec::new();
    for mu_free in [false, true] {
        let a = LmiArgs { mu_free, ..LmiArgs::default() };
        cases.push((format!("prop1(mu_free={mu_free})"), family(Problem::Prop1, &a).unwrap()));
    }
    for mu in [0.95, 2.0, 5.0] {
        cases.push((format!("prop2(mu={mu})"), family(Problem::Prop2, &LmiArgs { mu, ..LmiArgs::default() }).unwrap()));
    }
    for h in [0.1, 0.2, 0.3, 0.35, 0.38] {
        cases.push((format!("thm1(h={h})"), family(Problem::Thm1, &args(h)).unwrap()));
    }
    for h in [0.1, 0.2, 0.3, 0.35, 0.36] {
        for l2 in [Lambda2Arg::Free, Lambda2Arg::Nonnegative] {
            cases.push((format!("thm2(h={h},{l2:?})"), family(Problem::Thm2, &thm2_args(h, l2)).unwrap()));
        }
    }
    let mut worst = f64::NEG_INFINITY;
    let mut bad = Vec::new();
    let mut feasible = 0;
    for (name, fam) in &cases {
        let s = solve_family(fam, DEFAULT_EPS).unwrap();
        match s.status {
            "feasible" => {
                feasible += 1;
                let w = s.max_eig_worst.unwrap();
                worst = worst.max(w);
                if w > 1e-8 {
                    bad.push(name.clone());
                }
            }
            other => bad.push(format!("{name}:{other}")),
        }
    }
    let completion = completion_at(0.35, 0.1).unwrap();
    let fam35 = family(Problem::Thm1, &args(0.35)).unwrap();
    let completion_worst = completion
        .as_ref()
        .map(|c| verify_certificate(&fam35, c, DEFAULT_EPS).unwrap())
        .filter(|r| r.passed())
        .map(|r| r.worst_max_eig());
    let passed = bad.is_empty() && completion_worst.is_some_and(|w| w <= 1e-8);
    let detail = format!(
        "{feasible}/{} solves verified, worst max-eig {worst:.3e} (want <= 1e-8), failures {bad:?}; \
         published (p1, p2) completion at h=0.35: {}",
        cases.len(),
        completion_worst.map_or("none".to_string(), |w| format!("verified, worst max-eig {w:.3e}"))
    );
    report(3, "certificate round-trip", passed, &detail);
}

#[test]
fn criterion_4_closed_loop_decay() {
    let start = Instant::now();
    let cfg = reference_sim_config(64, 0.35, Some(reference_monitor().unwrap()));
    let out = sim::run(&cfg).unwrap();
    let d = decay_check(&out);
    let elapsed = start.elapsed();
    let passed = d.passed && elapsed < Duration::from_secs(600);
    let detail = format!(
        "V1(10)/V1(0)={:.3e} (want <= {:.4e}), c0(14)/c0(0)={:.3e} (want <= 1e-2), blowup={}, {:.1}s (want < 600s)",
        d.v1_ratio,
        (-2.0f64).exp() * 1.2,
        d.c0_ratio,
        out.blowup,
        elapsed.as_secs_f64()
    );
    report(4, "closed-loop decay at h=0.35", passed, &detail);
}

#[test]
fn criterion_5_large_sampling_period() {
    let start = Instant::now();
    let out = sim::run(&reference_sim_config(64, 2.0, None)).unwrap();
    let b = bounded_check(&out);
    let elapsed = start.elapsed();
    let passed = b.passed && elapsed < Duration::from_secs(600);
    let detail = format!(
        "sup c0/c0(0)={:.4} (want <= 2), c0(T)/c0(0)={:.3e} (want <= 1e-2), blowup={}, {:.1}s (want < 600s)",
        b.sup_ratio,
        b.final_ratio,
        out.blowup,
        elapsed.as_secs_f64()
    );
    report(5, "bounded and decaying at h=2.0", passed, &detail);
}

#[test]
fn criterion_6_inequality_batch() {
    let start = Instant::now();
    let rep = verify_lemmas(1, 200, 64, false).unwrap();
    let elapsed = start.elapsed();
    let worst = rep.checks.iter().min_by(|a, b| a.min_slack.total_cmp(&b.min_slack)).unwrap();
    let evaluations: usize = rep.checks.iter().map(|c| c.evaluations).sum();
    let passed = rep.passed()
        && rep.checks.iter().all(|c| c.min_slack >= 0.0 && c.evaluations > 0)
        && rep.invalid_weights_rejected
        && elapsed < Duration::from_secs(60);
    let detail = format!(
        "{evaluations} evaluations over {} checks, tightest {} margin+tol {:.3e} (want >= 0), \
         invalid weights rejected={}, {:.2}s (want < 60s)",
        rep.checks.len(),
        worst.name,
        worst.min_slack,
        rep.invalid_weights_rejected,
        elapsed.as_secs_f64()
    );
    report(6, "functional inequalities on 200 seeded fields", passed, &detail);
}

#[test]
fn criterion_7_halanay_rate() {
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for a in 0..5 {
        let delta = 0.05 + 0.1 * a as f64;
        for b in 0..4 {
            let delta1 = 2.0 * delta * (0.1 + 0.25 * b as f64);
            for c in 0..5 {
                let p = HalanayParams::new(delta, delta1, 0.1 + 0.5 * c as f64).unwrap();
                worst = worst.max(p.residual(halanay_sigma(&p)).abs());
                n += 1;
            }
        }
    }
    let mut anchor: f64 = 0.0;
    for (delta, delta1, h) in [(0.3, 0.0, 1.0), (0.1, 0.0, 5.0), (0.2, 0.15, 0.0), (0.5, 0.9, 0.0)] {
        let s = halanay_sigma(&HalanayParams::new(delta, delta1, h).unwrap());
        let want = if delta1 == 0.0 { delta } else { delta - 0.5 * delta1 };
        anchor = anchor.max((s - want).abs());
    }
    let passed = n == 100 && worst < 1e-12 && anchor <= 1e-12;
    let detail = format!("max residual {worst:.3e} over {n} points (want < 1e-12), anchor error {anchor:.3e} (want <= 1e-12)");
    report(7, "Halanay decay rate", passed, &detail);
}

fn poly(x: f64) -> f64 {
    (x * (1.0 - x)).powi(2)
}

fn poly2(x: f64) -> f64 {
    12.0 * x * x - 12.0 * x + 2.0
}

/// Max error at the nodes of the m = 16 grid that are two or more coarse cells inside.
fn coarse_point_error(f: &Field, exact: impl Fn(f64, f64) -> f64) -> f64 {
    let g = f.grid();
    let step = g.m() / 16;
    let mut e: f64 = 0.0;
    for ci in 2..=14 {
        for cj in 2..=14 {
            let (i, j) = (ci * step, cj * step);
            e = e.max((f.get(i, j) - exact(g.coord(i), g.coord(j))).abs());
        }
    }
    e
}

fn ratios(e: &[f64]) -> Vec<f64> {
    e.windows(2).map(|w| w[0] / w[1]).collect()
}

fn smooth_fields() -> Vec<Box<dyn Fn(f64, f64) -> f64>> {
    vec![
        Box::new(|x, y| 256.0 * poly(x) * poly(y)),
        Box::new(|x, y| 256.0 * poly(x) * poly(y) * (1.0 + x + 2.0 * y)),
        Box::new(|x, y| 512.0 * poly(x) * poly(y) * (3.0 * x - y).sin()),
        Box::new(|x, y| 256.0 * poly(x) * poly(y) * (x * x + (2.0 * y).cos())),
    ]
}

fn imex_ratio() -> f64 {
    let base = SimConfig {
        m: 16,
        dt: 1e-3,
        t_end: 1.0,
        kappa: -51.0,
        control: ControlMode::Continuous,
        ic: InitialCondition { kind: IcKind::Bubble, amplitude: 0.5 },
        output_stride: 50,
        ..SimConfig::default()
    };
    let z: Vec<Field> = [2e-3, 1e-3, 5e-4]
        .iter()
        .map(|&dt| sim::run(&SimConfig { dt, ..base.clone() }).unwrap().final_state.z)
        .collect();
    assert!(c0_norm(&z[2]) > 1e-3, "state decayed before t = 1");
    let dist = |a: &Field, b: &Field| l2_sq(&a.lin_comb(1.0, b, -1.0).unwrap()).sqrt();
    dist(&z[0], &z[1]) / dist(&z[1], &z[2])
}

#[test]
fn criterion_8_numerical_kernels() {
    let in_band = |r: &f64| (3.5..=4.5).contains(r);
    let bilap_exact = |x: f64, y: f64| 24.0 * poly(y) + 2.0 * poly2(x) * poly2(y) + 24.0 * poly(x);
    let bilap: Vec<f64> = [16usize, 32, 64]
        .iter()
        .map(|&m| {
            let f = Field::clamped_from_fn(Grid2D::new(m).unwrap(), |x, y| poly(x) * poly(y));
            coarse_point_error(&biharmonic(&f).unwrap(), bilap_exact)
        })
        .collect();
    let lap_exact = |x: f64, y: f64| -2.0 * PI * PI * (PI * x).sin() * (PI * y).sin();
    let lap: Vec<f64> = [16usize, 32, 64]
        .iter()
        .map(|&m| {
            let f = Field::clamped_from_fn(Grid2D::new(m).unwrap(), |x, y| (PI * x).sin() * (PI * y).sin());
            coarse_point_error(&laplacian(&f).unwrap(), lap_exact)
        })
        .collect();
    let (r_bilap, r_lap) = (ratios(&bilap), ratios(&lap));

    // the advective quadrature vanishes up to K dx^2
    let mut advective: f64 = 0.0;
    let mut mixed_ratio = Vec::new();
    for f in smooth_fields() {
        for m in [16usize, 32, 64, 128] {
            let g = Grid2D::new(m).unwrap();
            let z = Field::clamped_from_fn(g, &f);
            let q = region_integral(&z.mul(&z).unwrap().mul(&dx1(&z)).unwrap(), 0..=m, 0..=m);
            advective = advective.max(q.abs() / (g.dx() * g.dx()));
        }
        let gap: Vec<f64> = [16usize, 32, 64]
            .iter()
            .map(|&m| {
                let z = Field::clamped_from_fn(Grid2D::new(m).unwrap(), &f);
                l2_sq(&dx1x2(&z)) - inner(&d11(&z).unwrap(), &d22(&z).unwrap()).unwrap()
            })
            .collect();
        mixed_ratio.push(gap[1] / gap[2]);
    }
    let imex = imex_ratio();
    let passed = r_bilap.iter().all(in_band)
        && r_lap.iter().all(in_band)
        && advective <= 1.5
        && mixed_ratio.iter().all(in_band)
        && (1.7..=2.3).contains(&imex);
    let detail = format!(
        "biharmonic ratios {r_bilap:.3?}, laplacian ratios {r_lap:.3?} (want [3.5, 4.5]); \
         advective quadrature max |q|/dx^2 {advective:.3} (want <= 1.5); mixed-derivative gap ratios {mixed_ratio:.3?} \
         (want [3.5, 4.5]); IMEX ratio {imex:.3} (want [1.7, 2.3])"
    );
    report(8, "numerical kernels", passed, &detail);
}

fn state_block_eigs(fam: &Family, cert: &Certificate, z: f64) -> Vec<f64> {
    fam.blocks_at(cert, z)
        .unwrap()
        .into_iter()
        .filter(|b| b.label.contains("[z="))
        .map(|b| max_eigenvalue(&b.as_nsd()))
        .collect()
}

#[test]
fn criterion_9_vertex_sufficiency() {
    let opts = SolverOptions::default();
    let mut certified: Vec<(Family, Certificate)> = Vec::new();
    let mut push_bisection = |fam: Family| {
        let rep = max_h(&fam, 0.3, 0.5, 0.005, false, &opts).unwrap();
        for (h, ok) in rep.bisection {
            if ok {
                let f = fam.with_h(h).unwrap();
                let cert = feasible_at(&f, h, &opts).unwrap().unwrap();
                certified.push((f, cert));
            }
        }
    };
    push_bisection(family(Problem::Thm1, &args(0.3)).unwrap());
    push_bisection(family(Problem::Thm2, &thm2_args(0.3, Lambda2Arg::Free)).unwrap());
    push_bisection(family(Problem::Thm2, &thm2_args(0.3, Lambda2Arg::Nonnegative)).unwrap());

    let mut worst_excess = f64::NEG_INFINITY;
    let mut evaluations = 0;
    for (fam, cert) in &certified {
        assert!(verify_certificate(fam, cert, DEFAULT_EPS).unwrap().passed());
        let c = 2.0;
        let (hi, lo) = (state_block_eigs(fam, cert, c), state_block_eigs(fam, cert, -c));
        for k in 1..=50 {
            let z = -c + 2.0 * c * k as f64 / 51.0;
            for (e, (a, b)) in state_block_eigs(fam, cert, z).iter().zip(hi.iter().zip(&lo)) {
                worst_excess = worst_excess.max(e - a.max(*b));
                evaluations += 1;
            }
        }
    }
    let passed = !certified.is_empty() && worst_excess <= 1e-10;
    let detail = format!(
        "{} certificates, {evaluations} interior evaluations, max excess over vertex maximum {worst_excess:.3e} (want <= 1e-10)",
        certified.len()
    );
    report(9, "vertex sufficiency", passed, &detail);
}
