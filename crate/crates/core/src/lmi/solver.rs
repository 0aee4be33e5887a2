//! Phase-I feasibility by a log-det barrier method.
//!
//! The solver maximizes a common margin `s` subject to
//! `G_k(x) + s I <= 0` for every matrix constraint and `x_i >= s` for every
//! positive variable, with `x_i >= 0` for non-negative variables, the box
//! `|x_i| <= bound` and the cap `s <= margin_cap`. The problem is declared
//! feasible as soon as a centered iterate reaches `s >= eps`, and
//! infeasible once the duality-gap bound shows `s* < eps`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::problem::LmiProblem;
use super::{Certificate, Sign};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub eps: f64,
    pub bound: f64,
    pub margin_cap: f64,
    pub t0: f64,
    pub growth: f64,
    pub t_max: f64,
    pub max_newton: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            eps: super::DEFAULT_EPS,
            bound: 1e4,
            margin_cap: 1.0,
            t0: 1.0,
            growth: 10.0,
            t_max: 1e14,
            max_newton: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveOutcome {
    Feasible {
        certificate: Certificate,
        /// Achieved common margin `s >= eps`.
        margin: f64,
        newton_steps: usize,
    },
    Infeasible {
        /// Upper bound on the best achievable margin.
        margin_bound: f64,
        newton_steps: usize,
    },
    NotConverged {
        reason: String,
        best_margin: f64,
    },
}

impl SolveOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, SolveOutcome::Feasible { .. })
    }

    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            SolveOutcome::Feasible { certificate, .. } => Some(certificate),
            _ => None,
        }
    }

    pub fn status(&self) -> &'static str {
        match self {
            SolveOutcome::Feasible { .. } => "feasible",
            SolveOutcome::Infeasible { .. } => "infeasible",
            SolveOutcome::NotConverged { .. } => "not_converged",
        }
    }
}

/// `S(y) = -(F0 + sum_i x_i F_i) - shift * s * I`, required positive definite.
struct BarrierBlock {
    f0: DMatrix<f64>,
    fx: Vec<Option<DMatrix<f64>>>,
    shift: f64,
}

impl BarrierBlock {
    fn scalar(n: usize, f0: f64, coeffs: &[(usize, f64)], shift: f64) -> Self {
        let mut fx = vec![None; n];
        for &(i, c) in coeffs {
            fx[i] = Some(DMatrix::from_element(1, 1, c));
        }
        Self { f0: DMatrix::from_element(1, 1, f0), fx, shift }
    }

    fn g(&self, y: &[f64]) -> DMatrix<f64> {
        let mut g = self.f0.clone();
        for (f, v) in self.fx.iter().zip(y) {
            if let Some(f) = f {
                g += f * *v;
            }
        }
        g
    }

    fn slack(&self, y: &[f64]) -> DMatrix<f64> {
        let n = self.fx.len();
        let mut s = -self.g(y);
        let shift = self.shift * y[n];
        for i in 0..s.nrows() {
            s[(i, i)] -= shift;
        }
        s
    }
}

struct Barrier {
    blocks: Vec<BarrierBlock>,
    n: usize,
    total_dim: usize,
}

struct Eval {
    f: f64,
    grad: DVector<f64>,
    hess: DMatrix<f64>,
}

impl Barrier {
    fn build(problem: &LmiProblem, opts: &SolverOptions) -> Self {
        let n = problem.n_vars();
        let index = |id| problem.vars.iter().position(|(v, _)| *v == id);
        let mut blocks = Vec::new();
        for c in &problem.constraints {
            let mut fx = vec![None; n];
            for (id, f) in &c.terms {
                if let Some(i) = index(*id) {
                    fx[i] = Some(f.clone());
                }
            }
            blocks.push(BarrierBlock { f0: c.f0.clone(), fx, shift: 1.0 });
        }
        for (i, (_, sign)) in problem.vars.iter().enumerate() {
            match sign {
                Sign::Positive => blocks.push(BarrierBlock::scalar(n, 0.0, &[(i, -1.0)], 1.0)),
                Sign::NonNegative => blocks.push(BarrierBlock::scalar(n, 0.0, &[(i, -1.0)], 0.0)),
                Sign::Free => {}
            }
            blocks.push(BarrierBlock::scalar(n, -opts.bound, &[(i, 1.0)], 0.0));
            blocks.push(BarrierBlock::scalar(n, -opts.bound, &[(i, -1.0)], 0.0));
        }
        blocks.push(BarrierBlock::scalar(n, -opts.margin_cap, &[], 1.0));
        let total_dim = blocks.iter().map(|b| b.f0.nrows()).sum();
        Self { blocks, n, total_dim }
    }

    /// Barrier value only; `None` outside the domain.
    fn value(&self, y: &[f64], t: f64) -> Option<f64> {
        let mut f = -t * y[self.n];
        for b in &self.blocks {
            let chol = b.slack(y).cholesky()?;
            f -= 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        }
        f.is_finite().then_some(f)
    }

    fn eval(&self, y: &[f64], t: f64) -> Option<Eval> {
        let dim = self.n + 1;
        let mut f = -t * y[self.n];
        let mut grad = DVector::zeros(dim);
        grad[self.n] = -t;
        let mut hess = DMatrix::zeros(dim, dim);
        for b in &self.blocks {
            let chol = b.slack(y).cholesky()?;
            f -= 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
            let sinv = chol.inverse();
            // M_i = S^{-1} dS/dy_i with dS/dx_i = -F_i and dS/ds = -shift I.
            let mut ms: Vec<(usize, DMatrix<f64>)> = Vec::new();
            for (i, fi) in b.fx.iter().enumerate() {
                if let Some(fi) = fi {
                    ms.push((i, -(&sinv * fi)));
                }
            }
            if b.shift != 0.0 {
                ms.push((self.n, &sinv * (-b.shift)));
            }
            for (a, (i, mi)) in ms.iter().enumerate() {
                grad[*i] -= mi.trace();
                for (j, mj) in ms.iter().skip(a) {
                    let v = (mi.component_mul(&mj.transpose())).sum();
                    hess[(*i, *j)] += v;
                    if i != j {
                        hess[(*j, *i)] += v;
                    }
                }
            }
        }
        f.is_finite().then_some(Eval { f, grad, hess })
    }

    fn initial_point(&self, problem: &LmiProblem) -> Vec<f64> {
        let mut y: Vec<f64> = problem
            .vars
            .iter()
            .map(|(_, s)| if *s == Sign::Free { 0.0 } else { 1.0 })
            .collect();
        y.push(0.0);
        let mut s0 = f64::INFINITY;
        for b in &self.blocks {
            if b.shift != 0.0 {
                let lmax = SymmetricEigen::new(b.g(&y)).eigenvalues.max();
                s0 = s0.min(-lmax / b.shift);
            }
        }
        y[self.n] = s0 - 1.0;
        y
    }
}

/// Searches for a point with common margin at least `opts.eps`.
pub fn solve_feasibility(problem: &LmiProblem, opts: &SolverOptions) -> SolveOutcome {
    let bar = Barrier::build(problem, opts);
    let n = bar.n;
    let mut y = bar.initial_point(problem);
    let mut t = opts.t0;
    let mut steps = 0usize;
    loop {
        // Centering.
        for _ in 0..opts.max_newton {
            let Some(e) = bar.eval(&y, t) else {
                return SolveOutcome::NotConverged {
                    reason: "iterate left the barrier domain".into(),
                    best_margin: y[n],
                };
            };
            let neg = -&e.grad;
            let d = match e.hess.clone().cholesky() {
                Some(c) => c.solve(&neg),
                None => match e.hess.clone().lu().solve(&neg) {
                    Some(d) => d,
                    None => {
                        return SolveOutcome::NotConverged {
                            reason: "singular Newton system".into(),
                            best_margin: y[n],
                        }
                    }
                },
            };
            steps += 1;
            let slope = e.grad.dot(&d);
            if -slope / 2.0 < 1e-10 {
                break;
            }
            let mut alpha = 1.0;
            let mut moved = false;
            while alpha > 1e-14 {
                let trial: Vec<f64> = y.iter().zip(d.iter()).map(|(a, b)| a + alpha * b).collect();
                if let Some(ft) = bar.value(&trial, t) {
                    if ft <= e.f + 0.25 * alpha * slope {
                        y = trial;
                        moved = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !moved {
                break;
            }
        }
        let s = y[n];
        if s >= opts.eps {
            return SolveOutcome::Feasible {
                certificate: problem.full_certificate(&y[..n]),
                margin: s,
                newton_steps: steps,
            };
        }
        let bound = s + bar.total_dim as f64 / t;
        if bound < opts.eps {
            return SolveOutcome::Infeasible { margin_bound: bound, newton_steps: steps };
        }
        t *= opts.growth;
        if t > opts.t_max {
            return SolveOutcome::NotConverged {
                reason: format!("margin {s:.3e} undecided against eps {:.1e}", opts.eps),
                best_margin: s,
            };
        }
    }
}
