//! Batch run of the functional inequalities on seeded random fields.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kse_core::field::{point_value, subdomain_mean, Field, Grid2D, Partition};
use kse_core::inequalities::{
    check_friedrich, check_point_bound, check_poincare, check_wirtinger, mode_sum_field, sobolev2d_bound,
    FriedrichWeights, Margin, PointBoundWeights, Square, MODE_CUTOFF,
};

use crate::CliError;

pub const FRIEDRICH_WEIGHTS: [(f64, f64, f64); 3] = [(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0), (0.8, 0.1, 0.1), (0.2, 0.5, 0.3)];
pub const POINT_WEIGHTS: [(f64, [f64; 3]); 3] = [(1.0, [3.0, 3.0, 3.0]), (1.0, [4.0, 4.0, 4.0]), (0.5, [2.0, 1.5, 6.0])];
pub const SOBOLEV_GAMMAS: [f64; 3] = [0.1, 1.0, 10.0];
/// A weight triple outside the admissible cone.
pub const INVALID_POINT_WEIGHTS: (f64, [f64; 3]) = (1.0, [1.0, 1.0, 1.0]);

/// Coefficients `U[-1, 1] / (k^2 + l^2)` for modes `k, l = 1..=MODE_CUTOFF`,
/// drawn row by row.
pub fn random_coefficients(rng: &mut ChaCha8Rng) -> [[f64; MODE_CUTOFF]; MODE_CUTOFF] {
    let mut c = [[0.0; MODE_CUTOFF]; MODE_CUTOFF];
    for (k, row) in c.iter_mut().enumerate() {
        for (l, v) in row.iter_mut().enumerate() {
            let n2 = ((k + 1) * (k + 1) + (l + 1) * (l + 1)) as f64;
            *v = rng.gen_range(-1.0..=1.0) / n2;
        }
    }
    c
}

pub fn random_fields(grid: Grid2D, seed: u64, count: usize) -> Vec<Field> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| mode_sum_field(grid, &random_coefficients(&mut rng))).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct InequalityCheck {
    pub name: String,
    pub evaluations: usize,
    pub min_margin: f64,
    /// Smallest `margin + tol`; negative means a violation.
    pub min_slack: f64,
    pub violations: usize,
}

impl InequalityCheck {
    fn new(name: String) -> Self {
        Self {
            name,
            evaluations: 0,
            min_margin: f64::INFINITY,
            min_slack: f64::INFINITY,
            violations: 0,
        }
    }

    fn record(&mut self, m: &Margin) {
        self.evaluations += 1;
        self.min_margin = self.min_margin.min(m.margin());
        self.min_slack = self.min_slack.min(m.margin() + m.tol);
        if !m.holds() {
            self.violations += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InequalityReport {
    pub seed: u64,
    pub count: usize,
    pub m: usize,
    pub zero: bool,
    pub checks: Vec<InequalityCheck>,
    pub invalid_weights_rejected: bool,
}

impl InequalityReport {
    pub fn passed(&self) -> bool {
        self.invalid_weights_rejected && self.checks.iter().all(|c| c.violations == 0)
    }

    pub fn write(&self, out: &mut dyn Write) -> io::Result<()> {
        let source = if self.zero { "zero" } else { "random" };
        writeln!(out, "# inequality checks: fields={source} seed={} count={} m={}", self.seed, self.count, self.m)?;
        writeln!(out, "check,evaluations,min_margin,min_margin_plus_tol,violations")?;
        for c in &self.checks {
            writeln!(
                out,
                "{},{},{:.12e},{:.12e},{}",
                c.name, c.evaluations, c.min_margin, c.min_slack, c.violations
            )?;
        }
        writeln!(out, "invalid_point_weights_rejected,{}", self.invalid_weights_rejected)?;
        writeln!(out, "result,{}", if self.passed() { "pass" } else { "fail" })
    }
}

fn fmt_triple(a: f64, b: f64, c: f64) -> String {
    format!("{a:.4}/{b:.4}/{c:.4}")
}

pub fn verify_lemmas(seed: u64, count: usize, m: usize, zero: bool) -> Result<InequalityReport, CliError> {
    if count == 0 {
        return Err(CliError::Usage("--count must be at least 1".into()));
    }
    let grid = Grid2D::new(m)?;
    let part = Partition::new(0.25)?;
    part.check_centered(&grid)?;

    let friedrich: Vec<FriedrichWeights> = FRIEDRICH_WEIGHTS
        .iter()
        .map(|&(a, b, c)| FriedrichWeights::new(a, b, c))
        .collect::<Result<_, _>>()?;
    let point: Vec<PointBoundWeights> = POINT_WEIGHTS
        .iter()
        .map(|&(eta, beta)| PointBoundWeights::new(eta, beta))
        .collect::<Result<_, _>>()?;

    let mut wirtinger = InequalityCheck::new("wirtinger".into());
    let mut poincare = InequalityCheck::new("poincare_subdomains".into());
    let mut fr_whole: Vec<InequalityCheck> = FRIEDRICH_WEIGHTS
        .iter()
        .map(|&(a, b, c)| InequalityCheck::new(format!("friedrich_whole({})", fmt_triple(a, b, c))))
        .collect();
    let mut fr_quad: Vec<InequalityCheck> = FRIEDRICH_WEIGHTS
        .iter()
        .map(|&(a, b, c)| InequalityCheck::new(format!("friedrich_quadrants({})", fmt_triple(a, b, c))))
        .collect();
    let mut pt_whole: Vec<InequalityCheck> = POINT_WEIGHTS
        .iter()
        .map(|(eta, b)| InequalityCheck::new(format!("point_bound_whole(eta={eta},beta={})", fmt_triple(b[0], b[1], b[2]))))
        .collect();
    let mut pt_quad: Vec<InequalityCheck> = POINT_WEIGHTS
        .iter()
        .map(|(eta, b)| InequalityCheck::new(format!("point_bound_quadrants(eta={eta},beta={})", fmt_triple(b[0], b[1], b[2]))))
        .collect();
    let mut sobolev: Vec<InequalityCheck> = SOBOLEV_GAMMAS
        .iter()
        .map(|g| InequalityCheck::new(format!("sobolev(gamma={g})")))
        .collect();

    let fields = if zero {
        vec![Field::zeros(grid); count]
    } else {
        random_fields(grid, seed, count)
    };
    let whole = Square::whole(&grid);
    for f in &fields {
        wirtinger.record(&check_wirtinger(f)?);
        for (g, c) in SOBOLEV_GAMMAS.iter().zip(&mut sobolev) {
            c.record(&sobolev2d_bound(f, *g)?.1);
        }
        for (w, c) in friedrich.iter().zip(&mut fr_whole) {
            c.record(&check_friedrich(f, &whole, w)?);
        }
        for (w, c) in point.iter().zip(&mut pt_whole) {
            c.record(&check_point_bound(f, &whole, w)?);
        }
        for s in part.subdomains() {
            let mean = subdomain_mean(f, &part, s)?;
            poincare.record(&check_poincare(&f.shifted(mean), &part, s)?);
            let centred = f.shifted(point_value(f, &part, s)?);
            for q in Square::quadrants(&grid, &part, s)? {
                for (w, c) in friedrich.iter().zip(&mut fr_quad) {
                    c.record(&check_friedrich(&centred, &q, w)?);
                }
                for (w, c) in point.iter().zip(&mut pt_quad) {
                    c.record(&check_point_bound(&centred, &q, w)?);
                }
            }
        }
    }

    let mut checks = vec![wirtinger, poincare];
    checks.extend(fr_whole);
    checks.extend(fr_quad);
    checks.extend(pt_whole);
    checks.extend(pt_quad);
    checks.extend(sobolev);
    let (eta, beta) = INVALID_POINT_WEIGHTS;
    Ok(InequalityReport {
        seed,
        count,
        m,
        zero,
        checks,
        invalid_weights_rejected: PointBoundWeights::new(eta, beta).is_err(),
    })
}
