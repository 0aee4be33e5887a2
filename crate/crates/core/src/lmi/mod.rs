//! Stability certificates as small linear matrix inequalities.
//!
//! [`assemble`] builds the named symmetric blocks of each condition directly
//! from a candidate [`Certificate`]; [`problem`] turns a family into affine
//! form by probing; [`solver`] searches for a strictly feasible point;
//! [`verify`] re-checks a point with an independent eigenvalue routine and
//! [`search`] bisects on the sampling period.

pub mod assemble;
pub mod problem;
pub mod search;
pub mod solver;
pub mod verify;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

pub use assemble::{
    Block, ContinuousAvgParams, Family, Lambda2Mode, SampledAvgParams, SampledPointParams,
    ThetaBarVariant,
};
pub use problem::{AffineMatrixConstraint, LmiProblem};
pub use search::{max_h, MaxHReport, ScanAnomaly};
pub use solver::{solve_feasibility, SolveOutcome, SolverOptions};
pub use verify::{verify_certificate, verify_problem, BlockCheck, VerifyReport};

/// Default strictness margin.
pub const DEFAULT_EPS: f64 = 1e-6;

/// Decision variables that can appear in any of the conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarId {
    R,
    Gamma,
    P1,
    P2,
    Eta,
    Lambda1,
    Lambda2,
    Lambda3,
    Beta1,
    Beta2,
    Beta3,
    Mu,
}

impl VarId {
    pub const ALL: [VarId; 12] = [
        VarId::R,
        VarId::Gamma,
        VarId::P1,
        VarId::P2,
        VarId::Eta,
        VarId::Lambda1,
        VarId::Lambda2,
        VarId::Lambda3,
        VarId::Beta1,
        VarId::Beta2,
        VarId::Beta3,
        VarId::Mu,
    ];

    pub fn name(self) -> &'static str {
        match self {
            VarId::R => "r",
            VarId::Gamma => "gamma",
            VarId::P1 => "p1",
            VarId::P2 => "p2",
            VarId::Eta => "eta",
            VarId::Lambda1 => "lambda1",
            VarId::Lambda2 => "lambda2",
            VarId::Lambda3 => "lambda3",
            VarId::Beta1 => "beta1",
            VarId::Beta2 => "beta2",
            VarId::Beta3 => "beta3",
            VarId::Mu => "mu",
        }
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Sign constraint attached to a decision variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    /// `x > 0`, realized as `x >= eps`.
    Positive,
    /// `x >= 0`.
    NonNegative,
    Free,
}

/// Assignment of values to decision variables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Certificate(pub BTreeMap<VarId, f64>);

impl Certificate {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, id: VarId, v: f64) -> Self {
        self.0.insert(id, v);
        self
    }

    pub fn set(&mut self, id: VarId, v: f64) {
        self.0.insert(id, v);
    }

    pub fn get(&self, id: VarId) -> Option<f64> {
        self.0.get(&id).copied()
    }

    pub fn require(&self, id: VarId) -> Result<f64, LmiError> {
        self.get(id).ok_or(LmiError::MissingVariable(id))
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, f64)> + '_ {
        self.0.iter().map(|(k, v)| (*k, *v))
    }

    /// `a * self + (1 - a) * other` over the union of keys (missing keys read as 0).
    pub fn blend(&self, other: &Certificate, a: f64) -> Certificate {
        let mut out = Certificate::new();
        for id in self.0.keys().chain(other.0.keys()) {
            let x = self.get(*id).unwrap_or(0.0);
            let y = other.get(*id).unwrap_or(0.0);
            out.set(*id, a * x + (1.0 - a) * y);
        }
        out
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LmiError {
    #[error("certificate is missing variable {0}")]
    MissingVariable(VarId),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("vertex value {z} is not +/-C with C = {c}")]
    BadVertex { z: f64, c: f64 },
    #[error("dimension mismatch in {0}")]
    Dimension(String),
    #[error("max-h precondition failed: {0}")]
    Precondition(String),
}

/// Slot names of the variable vectors behind each quadratic form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LmiBasis {
    Prop1,
    Prop2,
    Thm1Eta1,
    Thm1Eta2,
    Thm2Eta0,
    Thm2Eta1,
}

impl LmiBasis {
    pub fn slots(self) -> &'static [&'static str] {
        match self {
            LmiBasis::Prop1 => &["z", "lap_z", "f_j"],
            LmiBasis::Prop2 => &["z", "z_x1x1", "z_x2x2", "f_j"],
            LmiBasis::Thm1Eta1 => &["z_x1", "z_x2", "z_x1x1", "z_x2x2", "bilap_z", "z", "f_j"],
            LmiBasis::Thm1Eta2 => &["z_x1", "z_x2", "z_x1x1", "z_x2x2", "bilap_z", "z", "f_j", "g_j"],
            LmiBasis::Thm2Eta0 => &["z_x1", "z_x2", "z_x1x1", "z_x2x2", "bilap_z", "z", "rho"],
            LmiBasis::Thm2Eta1 => &["z_x1", "z_x2", "z_x1x1", "z_x2x2", "bilap_z", "z", "f_j", "rho"],
        }
    }

    pub fn len(self) -> usize {
        self.slots().len()
    }

    pub fn is_empty(self) -> bool {
        self.slots().is_empty()
    }
}
