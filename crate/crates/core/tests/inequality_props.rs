use kse_core::field::{point_value, subdomain_mean, Field, Grid2D, Partition};
use kse_core::inequalities::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_coeffs(rng: &mut ChaCha8Rng) -> [[f64; MODE_CUTOFF]; MODE_CUTOFF] {
    std::array::from_fn(|k| {
        std::array::from_fn(|l| {
            let (k, l) = ((k + 1) as f64, (l + 1) as f64);
            rng.gen_range(-1.0..=1.0) / (k * k + l * l)
        })
    })
}

fn fields(seed: u64, count: usize, m: usize) -> Vec<Field> {
    let g = Grid2D::new(m).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| mode_sum_field(g, &random_coeffs(&mut rng))).collect()
}

#[test]
fn random_fields_satisfy_every_inequality() {
    let part = Partition::new(0.25).unwrap();
    let friedrich = [
        FriedrichWeights::equal(),
        FriedrichWeights::new(0.8, 0.1, 0.1).unwrap(),
        FriedrichWeights::new(0.2, 0.5, 0.3).unwrap(),
    ];
    let point = [
        PointBoundWeights::new(1.0, [3.0, 3.0, 3.0]).unwrap(),
        PointBoundWeights::new(1.0, [4.0, 4.0, 4.0]).unwrap(),
        PointBoundWeights::new(0.5, [2.0, 1.5, 6.0]).unwrap(),
    ];
    for f in fields(1, 200, 64) {
        let g = f.grid();
        assert!(check_wirtinger(&f).unwrap().holds());
        for gamma in [0.1, 1.0, 10.0] {
            let (bound, m) = sobolev2d_bound(&f, gamma).unwrap();
            assert!(m.holds(), "gamma {gamma}: bound {bound}, c0^2 {}", m.lhs);
        }
        let whole = Square::whole(&g);
        for w in &friedrich {
            assert!(check_friedrich(&f, &whole, w).unwrap().holds());
        }
        for &w in &point {
            assert!(check_point_bound(&f, &whole, &w).unwrap().holds());
        }
        for s in part.subdomains() {
            let mean = subdomain_mean(&f, &part, s).unwrap();
            assert!(check_poincare(&f.shifted(mean), &part, s).unwrap().holds());

            let centred = f.shifted(point_value(&f, &part, s).unwrap());
            for q in Square::quadrants(&g, &part, s).unwrap() {
                for &w in &point {
                    let m = check_point_bound(&centred, &q, &w).unwrap();
                    assert!(m.holds(), "subdomain {} {:?}: {m:?}", s.index, q.corner);
                }
                for w in &friedrich {
                    assert!(check_friedrich(&centred, &q, w).unwrap().holds());
                }
            }
        }
    }
}

#[test]
fn invalid_point_weights_are_rejected() {
    match PointBoundWeights::new(1.0, [1.0, 1.0, 1.0]) {
        Err(InequalityError::PointBoundWeights { min_eig }) => assert!((min_eig + 2.0).abs() < 1e-12),
        other => panic!("{other:?}"),
    }
    assert!(PointBoundWeights::new(1.0, [3.0, 3.0, 2.9]).is_err());
    assert!(PointBoundWeights::new(-1.0, [3.0, 3.0, 3.0]).is_err());
}

#[test]
fn poincare_first_neumann_mode_is_tight() {
    let g = Grid2D::new(128).unwrap();
    let part = Partition::new(0.25).unwrap();
    let s = part.subdomain(5);
    let x0 = s.x1_range.0;
    let f = Field::from_fn(g, |x, _| (std::f64::consts::PI * (x - x0) / 0.25).cos());
    let mean = subdomain_mean(&f, &part, s).unwrap();
    let m = check_poincare(&f.shifted(mean), &part, s).unwrap();
    assert!(m.holds());
    // one-directional mode: rhs = 2 * lhs for the isotropic constant
    assert!((m.rhs / m.lhs - 2.0).abs() < 5e-3, "{m:?}");
}

#[test]
fn halanay_on_parameter_grid() {
    let mut n = 0;
    for a in 0..5 {
        let delta = 0.05 + 0.1 * a as f64;
        for b in 0..4 {
            let delta1 = 2.0 * delta * (0.1 + 0.25 * b as f64);
            for c in 0..5 {
                let h = 0.1 + 0.5 * c as f64;
                let p = HalanayParams::new(delta, delta1, h).unwrap();
                let s = halanay_sigma(&p);
                assert!(p.residual(s).abs() < 1e-12, "{delta} {delta1} {h}");
                assert!(s > 0.0 && s <= delta - 0.5 * delta1 + 1e-15);
                n += 1;
            }
        }
    }
    assert_eq!(n, 100);
}

#[test]
fn halanay_is_monotone() {
    let s = |d: f64, d1: f64, h: f64| halanay_sigma(&HalanayParams::new(d, d1, h).unwrap());
    for k in 0..20 {
        let h = 0.05 * k as f64;
        assert!(s(0.2, 0.15, h + 0.05) < s(0.2, 0.15, h));
        assert!(s(0.2, 0.15 + 0.005 * k as f64, 0.37) >= s(0.2, 0.16 + 0.005 * k as f64, 0.37));
        assert!(s(0.2 + 0.01 * k as f64, 0.15, 0.37) < s(0.21 + 0.01 * k as f64, 0.15, 0.37));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn margins_scale_quadratically(seed in any::<u64>(), c in -4.0f64..4.0) {
        let f = &fields(seed, 1, 32)[0];
        let g = f.scaled(c);
        let c2 = c * c;
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()));
        let w = check_wirtinger(f).unwrap().margin();
        prop_assert!(close(check_wirtinger(&g).unwrap().margin(), c2 * w));
        let sq = Square::whole(&f.grid());
        let fw = FriedrichWeights::equal();
        prop_assert!(close(check_friedrich(&g, &sq, &fw).unwrap().margin(), c2 * check_friedrich(f, &sq, &fw).unwrap().margin()));
        let pw = PointBoundWeights::new(1.0, [3.0, 3.0, 3.0]).unwrap();
        prop_assert!(close(check_point_bound(&g, &sq, &pw).unwrap().margin(), c2 * check_point_bound(f, &sq, &pw).unwrap().margin()));
        let (_, s) = sobolev2d_bound(f, 1.0).unwrap();
        let (_, sg) = sobolev2d_bound(&g, 1.0).unwrap();
        prop_assert!(close(sg.margin(), c2 * s.margin()));
    }

    #[test]
    fn point_weights_with_negative_eigenvalue_are_rejected(eta in 0.1f64..5.0, b in prop::array::uniform3(0.01f64..10.0)) {
        let min_eig = kse_core::linalg::min_eigenvalue(&point_bound_matrix(eta, b));
        prop_assert_eq!(PointBoundWeights::new(eta, b).is_ok(), min_eig >= -1e-12);
    }
}
