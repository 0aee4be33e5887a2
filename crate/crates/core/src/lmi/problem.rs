//! Affine form `F0 + sum_i x_i F_i <= 0` of a family, obtained by probing the
//! direct assembly at the origin and at unit vectors.

use nalgebra::DMatrix;

use super::assemble::Family;
use super::{Certificate, LmiError, Sign, VarId};

#[derive(Debug, Clone, PartialEq)]
pub struct AffineMatrixConstraint {
    pub label: String,
    pub f0: DMatrix<f64>,
    pub terms: Vec<(VarId, DMatrix<f64>)>,
    /// Strict conditions must hold with margin `eps`.
    pub strict: bool,
}

impl AffineMatrixConstraint {
    pub fn new(label: impl Into<String>, f0: DMatrix<f64>, terms: Vec<(VarId, DMatrix<f64>)>, strict: bool) -> Result<Self, LmiError> {
        let label = label.into();
        let n = f0.nrows();
        let square = |m: &DMatrix<f64>| m.nrows() == n && m.ncols() == n;
        if !square(&f0) || !terms.iter().all(|(_, m)| square(m)) {
            return Err(LmiError::Dimension(label));
        }
        let sym = |m: &DMatrix<f64>| (m - m.transpose()).abs().max() <= 1e-14 * (1.0 + m.abs().max());
        if !sym(&f0) || !terms.iter().all(|(_, m)| sym(m)) {
            return Err(LmiError::Dimension(format!("{label} is not symmetric")));
        }
        Ok(Self { label, f0, terms, strict })
    }

    pub fn dim(&self) -> usize {
        self.f0.nrows()
    }

    /// `F0 + sum x_i F_i`; variables absent from `x` read as zero.
    pub fn evaluate(&self, x: &Certificate) -> DMatrix<f64> {
        let mut m = self.f0.clone();
        for (id, f) in &self.terms {
            if let Some(v) = x.get(*id) {
                m += f * v;
            }
        }
        m
    }
}

/// Decision variables, their signs, and affine `<= 0` constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiProblem {
    pub vars: Vec<(VarId, Sign)>,
    pub constraints: Vec<AffineMatrixConstraint>,
    /// Values substituted for variables that are not decided by the solver.
    pub fixed: Certificate,
    pub family: Option<Family>,
}

impl LmiProblem {
    pub fn new(vars: Vec<(VarId, Sign)>, constraints: Vec<AffineMatrixConstraint>) -> Self {
        Self { vars, constraints, fixed: Certificate::new(), family: None }
    }

    pub fn compile(family: &Family) -> Result<Self, LmiError> {
        Self::compile_with_fixed(family, &Certificate::new())
    }

    /// Compiles a family with some variables frozen at given values.
    pub fn compile_with_fixed(family: &Family, fixed: &Certificate) -> Result<Self, LmiError> {
        let vars: Vec<(VarId, Sign)> = family
            .variables()
            .into_iter()
            .filter(|(id, _)| fixed.get(*id).is_none())
            .collect();
        let mut base = fixed.clone();
        for (id, _) in &vars {
            base.set(*id, 0.0);
        }
        let b0 = family.blocks(&base)?;
        let mut terms: Vec<Vec<(VarId, DMatrix<f64>)>> = vec![Vec::new(); b0.len()];
        for (id, _) in &vars {
            let probe = base.clone().with(*id, 1.0);
            let bi = family.blocks(&probe)?;
            for (k, (a, b)) in bi.iter().zip(&b0).enumerate() {
                let d = a.as_nsd() - b.as_nsd();
                if d.iter().any(|v| *v != 0.0) {
                    terms[k].push((*id, d));
                }
            }
        }
        let constraints = b0
            .iter()
            .zip(terms)
            .map(|(b, t)| AffineMatrixConstraint::new(b.label.clone(), b.as_nsd(), t, b.strict))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { vars, constraints, fixed: fixed.clone(), family: Some(*family) })
    }

    pub fn n_vars(&self) -> usize {
        self.vars.len()
    }

    /// Merge solver output with the frozen values.
    pub fn full_certificate(&self, x: &[f64]) -> Certificate {
        let mut c = self.fixed.clone();
        for ((id, _), v) in self.vars.iter().zip(x) {
            c.set(*id, *v);
        }
        c
    }
}
