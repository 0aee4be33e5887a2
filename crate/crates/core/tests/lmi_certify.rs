use kse_core::linalg::max_eigenvalue;
use kse_core::lmi::assemble::assemble_prop1;
use kse_core::lmi::search::feasible_at;
use kse_core::lmi::*;
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

const EPS: f64 = 1e-6;

fn opts() -> SolverOptions {
    SolverOptions::default()
}

fn base(delta: f64) -> ContinuousAvgParams {
    ContinuousAvgParams::new(0.95, delta, -0.5, 0.25).unwrap()
}

fn thm1(h: f64) -> Family {
    Family::Thm1 { p: SampledAvgParams::new(base(0.1), h, 2.0).unwrap() }
}

fn thm2(h: f64, lambda2: Lambda2Mode) -> Family {
    let s = SampledAvgParams::new(base(0.2), h, 2.0).unwrap();
    Family::Thm2 {
        p: SampledPointParams::new(s, 0.15).unwrap(),
        theta_bar: ThetaBarVariant::Corrected,
        lambda2,
    }
}

fn solve(fam: &Family) -> SolveOutcome {
    solve_feasibility(&LmiProblem::compile(fam).unwrap(), &opts())
}

/// Eigenvalues through nalgebra's symmetric QR, independent of the Jacobi
/// routine used by the verifier.
fn qr_max_eig(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn scalar_margin_problem_is_feasible() {
    let id = DMatrix::<f64>::identity(2, 2);
    let c = AffineMatrixConstraint::new("x", DMatrix::zeros(2, 2), vec![(VarId::R, -&id)], true).unwrap();
    let prob = LmiProblem::new(vec![(VarId::R, Sign::Positive)], vec![c]);
    let out = solve_feasibility(&prob, &opts());
    let cert = out.certificate().expect("feasible").clone();
    assert!(cert.get(VarId::R).unwrap() >= EPS);
    assert!(verify_problem(&prob, &cert, EPS).unwrap().passed());
}

#[test]
fn contradictory_problem_is_infeasible() {
    let one = DMatrix::from_element(1, 1, 1.0);
    let lo = AffineMatrixConstraint::new("x<=-eps", DMatrix::from_element(1, 1, EPS), vec![(VarId::R, one.clone())], false).unwrap();
    let prob = LmiProblem::new(vec![(VarId::R, Sign::Positive)], vec![lo]);
    assert_eq!(solve_feasibility(&prob, &opts()).status(), "infeasible");
}

#[test]
fn prop1_grid_scan_oracle_agrees_with_solver() {
    let p = ContinuousAvgParams::new(0.95, 0.0, -0.5, 0.25).unwrap();
    let fam = Family::Prop1 { p, mu_free: true };
    let mut found = None;
    'scan: for mu in [0.25, 0.5, 1.0, 2.0, 4.0] {
        for l1 in [0.0, 0.5, 1.0, 2.0] {
            for l2 in [0.5, 1.0, 2.0, 5.0, 10.0, 20.0] {
                let v = Certificate::new().with(VarId::Mu, mu).with(VarId::Lambda1, l1).with(VarId::Lambda2, l2);
                let m = assemble_prop1(&p, &v, true).unwrap();
                if qr_max_eig(&m) <= 0.0 {
                    found = Some(v);
                    break 'scan;
                }
            }
        }
    }
    let v = found.expect("scan finds a feasible triple");
    assert!(verify_certificate(&fam, &v, 0.0).unwrap().passed());
    let out = solve(&fam);
    let cert = out.certificate().expect("solver agrees with the scan");
    assert!(verify_certificate(&fam, cert, EPS).unwrap().passed());
}

#[test]
fn prop1_feasibility_is_monotone_in_delta() {
    let flags: Vec<bool> = (0..=20)
        .map(|k| {
            let p = ContinuousAvgParams::new(0.95, 0.1 * k as f64, -0.5, 0.25).unwrap();
            solve(&Family::Prop1 { p, mu_free: false }).is_feasible()
        })
        .collect();
    assert!(flags[0] && flags[1], "{flags:?}");
    let first_bad = flags.iter().position(|f| !f).unwrap_or(flags.len());
    assert!(flags[first_bad..].iter().all(|f| !f), "{flags:?}");
}

#[test]
fn prop2_is_feasible_and_verified() {
    let mut any = false;
    for mu in [0.95, 2.0, 5.0] {
        let p = ContinuousAvgParams::new(mu, 0.1, -0.5, 0.25).unwrap();
        let fam = Family::Prop2 { p };
        if let Some(cert) = solve(&fam).certificate() {
            let rep = verify_certificate(&fam, cert, EPS).unwrap();
            assert!(rep.passed(), "{:?}", rep.failures());
            assert!(rep.worst_max_eig() <= 1e-8);
            any = true;
        }
    }
    assert!(any);
}

#[test]
fn thm1_reference_points() {
    for (h, want) in [(0.30, true), (0.35, true), (0.45, false), (0.50, false)] {
        let out = solve(&thm1(h));
        assert_eq!(out.is_feasible(), want, "h = {h}: {}", out.status());
        if let Some(c) = out.certificate() {
            let rep = verify_certificate(&thm1(h), c, EPS).unwrap();
            assert!(rep.passed() && rep.worst_max_eig() <= 1e-8, "{:?}", rep.failures());
        }
    }
}

#[test]
fn thm2_reference_points_in_both_lambda2_modes() {
    for mode in [Lambda2Mode::Free, Lambda2Mode::NonNegative] {
        let out = solve(&thm2(0.35, mode));
        let c = out.certificate().unwrap_or_else(|| panic!("{mode:?}: {}", out.status()));
        assert!(verify_certificate(&thm2(0.35, mode), c, EPS).unwrap().passed());
        assert!(!solve(&thm2(0.45, mode)).is_feasible());
    }
}

#[test]
fn reported_plant_weights_admit_a_completion() {
    let fixed = Certificate::new().with(VarId::P1, 80.6354).with(VarId::P2, 5.145);
    let fam = thm1(0.35);
    let prob = LmiProblem::compile_with_fixed(&fam, &fixed).unwrap();
    assert_eq!(prob.n_vars(), 5);
    let out = solve_feasibility(&prob, &opts());
    let cert = out.certificate().expect("completion exists");
    assert_eq!(cert.get(VarId::P1), Some(80.6354));
    let rep = verify_certificate(&fam, cert, EPS).unwrap();
    assert!(rep.passed(), "{:?}", rep.failures());
    let domain = rep.blocks.iter().find(|b| b.label == "domain").unwrap();
    assert!(domain.max_eig < 0.0);
}

#[test]
fn inflated_p2_breaks_a_certificate() {
    let fam = thm1(0.35);
    let mut cert = solve(&fam).certificate().unwrap().clone();
    cert.set(VarId::P2, 10.0 * cert.get(VarId::P2).unwrap());
    assert!(!verify_certificate(&fam, &cert, EPS).unwrap().passed());
}

#[test]
fn vertex_maximum_bounds_the_interior() {
    let fams = [thm1(0.35), thm1(0.38), thm2(0.35, Lambda2Mode::Free), thm2(0.36, Lambda2Mode::NonNegative)];
    for fam in fams {
        let cert = solve(&fam).certificate().unwrap().clone();
        assert!(verify_certificate(&fam, &cert, EPS).unwrap().passed());
        let state_blocks = |z: f64| -> Vec<(String, f64)> {
            fam.blocks_at(&cert, z)
                .unwrap()
                .into_iter()
                .filter(|b| b.label.contains("[z="))
                .map(|b| (b.label.split('[').next().unwrap().to_string(), max_eigenvalue(&b.as_nsd())))
                .collect()
        };
        let (hi, lo) = (state_blocks(2.0), state_blocks(-2.0));
        for k in 1..=50 {
            let z = -2.0 + 4.0 * k as f64 / 51.0;
            for ((name, e), (va, vb)) in state_blocks(z).iter().zip(hi.iter().zip(&lo)) {
                assert!(*e <= va.1.max(vb.1) + 1e-10, "{} {name} at z={z}", fam.name());
            }
        }
    }
}

#[test]
fn larger_decay_rate_shrinks_the_sampling_bound() {
    let fam = |delta: f64| Family::Thm1 { p: SampledAvgParams::new(base(delta), 0.1, 2.0).unwrap() };
    let slow = max_h(&fam(0.1), 0.1, 0.6, 0.01, false, &opts()).unwrap();
    let fast = max_h(&fam(0.5), 0.05, 0.6, 0.01, false, &opts()).unwrap();
    assert!(fast.h_star < slow.h_star, "{} vs {}", fast.h_star, slow.h_star);
}

#[test]
fn max_h_rejects_bad_brackets() {
    assert!(matches!(max_h(&thm1(0.3), 0.45, 0.5, 0.01, false, &opts()), Err(LmiError::Precondition(_))));
    assert!(matches!(max_h(&thm1(0.3), 0.3, 0.35, 0.01, false, &opts()), Err(LmiError::Precondition(_))));
    assert!(max_h(&thm1(0.3), 0.3, 0.5, 0.0, false, &opts()).is_err());
}

#[test]
fn every_bisection_certificate_verifies() {
    let rep = max_h(&thm2(0.3, Lambda2Mode::Free), 0.3, 0.45, 0.005, true, &opts()).unwrap();
    assert!(rep.anomalies.is_empty());
    let fam = thm2(rep.h_star, Lambda2Mode::Free);
    assert!(verify_certificate(&fam, &rep.certificate, EPS).unwrap().passed());
    for (h, ok) in &rep.bisection {
        assert_eq!(feasible_at(&fam, *h, &opts()).unwrap().is_some(), *ok);
    }
}

fn thm1_point() -> impl Strategy<Value = Certificate> {
    (0.01f64..50.0, 0.01f64..5.0, 0.1f64..100.0, 0.1f64..10.0, 0.0f64..5.0, 0.0f64..5.0, -5.0f64..5.0).prop_map(
        |(r, g, p1, p2, l1, l2, l3)| {
            Certificate::new()
                .with(VarId::R, r)
                .with(VarId::Gamma, g)
                .with(VarId::P1, p1)
                .with(VarId::P2, p2)
                .with(VarId::Lambda1, l1)
                .with(VarId::Lambda2, l2)
                .with(VarId::Lambda3, l3)
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn assembly_is_affine(v1 in thm1_point(), v2 in thm1_point(), a in 0.0f64..=1.0, z in -2.0f64..=2.0) {
        let fam = thm1(0.35);
        let mixed = fam.blocks_at(&v1.blend(&v2, a), z).unwrap();
        let b1 = fam.blocks_at(&v1, z).unwrap();
        let b2 = fam.blocks_at(&v2, z).unwrap();
        for ((m, x), y) in mixed.iter().zip(&b1).zip(&b2) {
            let want = &x.matrix * a + &y.matrix * (1.0 - a);
            let scale = 1.0 + want.abs().max();
            prop_assert!((&m.matrix - &want).abs().max() <= 1e-13 * scale, "{}", m.label);
            prop_assert_eq!(&m.matrix, &m.matrix.transpose());
        }
    }

    #[test]
    fn compiled_form_matches_direct_assembly(v in thm1_point()) {
        let fam = thm1(0.35);
        let prob = LmiProblem::compile(&fam).unwrap();
        for (c, b) in prob.constraints.iter().zip(fam.blocks(&v).unwrap()) {
            let d = (c.evaluate(&v) - b.as_nsd()).abs().max();
            prop_assert!(d <= 1e-10 * (1.0 + b.matrix.abs().max()), "{}", c.label);
        }
    }
}
