//! Independent certificate check: matrices are re-assembled at the given
//! point and their spectra computed by cyclic Jacobi rotations.

use super::assemble::Family;
use super::problem::LmiProblem;
use super::{Certificate, LmiError, Sign, VarId};
use crate::linalg::jacobi_eigenvalues;

/// Round-off allowance on top of the margin.
pub const VERIFY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct BlockCheck {
    pub label: String,
    pub strict: bool,
    /// Largest eigenvalue of the condition in `<= 0` form.
    pub max_eig: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignCheck {
    pub var: VarId,
    pub sign: Sign,
    pub value: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub blocks: Vec<BlockCheck>,
    pub signs: Vec<SignCheck>,
    pub eps: f64,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.blocks.iter().all(|b| b.passed) && self.signs.iter().all(|s| s.passed)
    }

    /// Worst largest eigenvalue over all matrix conditions in `<= 0` form.
    pub fn worst_max_eig(&self) -> f64 {
        self.blocks.iter().map(|b| b.max_eig).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn failures(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .blocks
            .iter()
            .filter(|b| !b.passed)
            .map(|b| format!("{} (max eig {:.3e})", b.label, b.max_eig))
            .collect();
        out.extend(
            self.signs
                .iter()
                .filter(|s| !s.passed)
                .map(|s| format!("{} = {:.3e} violates {:?}", s.var, s.value, s.sign)),
        );
        out
    }
}

fn block_check(label: String, strict: bool, nsd: &nalgebra::DMatrix<f64>, eps: f64) -> BlockCheck {
    let max_eig = *jacobi_eigenvalues(nsd).last().expect("non-empty block");
    let limit = if strict { -eps + VERIFY_TOL } else { VERIFY_TOL };
    BlockCheck { label, strict, max_eig, passed: max_eig <= limit }
}

fn sign_checks(vars: &[(VarId, Sign)], v: &Certificate, eps: f64) -> Result<Vec<SignCheck>, LmiError> {
    vars.iter()
        .map(|&(var, sign)| {
            let value = v.require(var)?;
            let passed = match sign {
                Sign::Positive => value >= eps - VERIFY_TOL,
                Sign::NonNegative => value >= -VERIFY_TOL,
                Sign::Free => value.is_finite(),
            };
            Ok(SignCheck { var, sign, value, passed })
        })
        .collect()
}

/// Re-assembles every condition of `family` at `v` (both vertices for the
/// sampled problems).
pub fn verify_certificate(family: &Family, v: &Certificate, eps: f64) -> Result<VerifyReport, LmiError> {
    let blocks = family
        .blocks(v)?
        .into_iter()
        .map(|b| block_check(b.label.clone(), b.strict, &b.as_nsd(), eps))
        .collect();
    Ok(VerifyReport { blocks, signs: sign_checks(&family.variables(), v, eps)?, eps })
}

/// Checks the affine constraints of a compiled problem directly.
pub fn verify_problem(problem: &LmiProblem, v: &Certificate, eps: f64) -> Result<VerifyReport, LmiError> {
    let blocks = problem
        .constraints
        .iter()
        .map(|c| block_check(c.label.clone(), c.strict, &c.evaluate(v), eps))
        .collect();
    Ok(VerifyReport { blocks, signs: sign_checks(&problem.vars, v, eps)?, eps })
}
