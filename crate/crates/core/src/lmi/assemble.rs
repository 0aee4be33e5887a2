//! Direct assembly of the certificate matrices from parameter values and a
//! candidate certificate. Entries are written once and mirrored, so every
//! returned matrix is exactly symmetric.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::{Certificate, LmiError, Sign, VarId};

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuousAvgParams {
    pub mu: f64,
    pub delta: f64,
    pub kappa: f64,
    pub delta_bar: f64,
}

impl ContinuousAvgParams {
    pub fn new(mu: f64, delta: f64, kappa: f64, delta_bar: f64) -> Result<Self, LmiError> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(LmiError::InvalidParameter(format!("mu must be positive, got {mu}")));
        }
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(LmiError::InvalidParameter(format!("delta must be >= 0, got {delta}")));
        }
        if !kappa.is_finite() {
            return Err(LmiError::InvalidParameter(format!("kappa must be finite, got {kappa}")));
        }
        if !(delta_bar > 0.0 && delta_bar <= 1.0) {
            return Err(LmiError::InvalidParameter(format!(
                "delta_bar must lie in (0, 1], got {delta_bar}"
            )));
        }
        Ok(Self { mu, delta, kappa, delta_bar })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledAvgParams {
    pub base: ContinuousAvgParams,
    pub h: f64,
    pub c_bound: f64,
}

impl SampledAvgParams {
    pub fn new(base: ContinuousAvgParams, h: f64, c_bound: f64) -> Result<Self, LmiError> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(LmiError::InvalidParameter(format!("h must be positive, got {h}")));
        }
        if !(c_bound > 0.0 && c_bound.is_finite()) {
            return Err(LmiError::InvalidParameter(format!("C must be positive, got {c_bound}")));
        }
        Ok(Self { base, h, c_bound })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledPointParams {
    pub sampled: SampledAvgParams,
    pub delta1: f64,
}

impl SampledPointParams {
    pub fn new(sampled: SampledAvgParams, delta1: f64) -> Result<Self, LmiError> {
        let delta = sampled.base.delta;
        if !(delta1 > 0.0 && delta1 < 2.0 * delta) {
            return Err(LmiError::InvalidParameter(format!(
                "delta1 must satisfy 0 < delta1 < 2 delta, got delta1={delta1}, delta={delta}"
            )));
        }
        Ok(Self { sampled, delta1 })
    }
}

/// Which `p` sits in the (1,1) entry of the 3x3 point-measurement coupling block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThetaBarVariant {
    /// `-delta1 * p1`: the coefficient of `||z(t_k)||^2` in the Halanay term.
    #[default]
    Corrected,
    /// `-delta1 * p2` as printed in the theorem statement.
    Verbatim,
}

/// Sign treatment of `lambda2` in the point-measurement sampled problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Lambda2Mode {
    /// Multiplier of an exact identity, so its sign is irrelevant.
    #[default]
    Free,
    NonNegative,
}

// ---------------------------------------------------------------------------
// Blocks
// ---------------------------------------------------------------------------

/// One named matrix condition: `matrix <= 0` (or `>= 0` when `positive`),
/// strict or not.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub label: String,
    pub matrix: DMatrix<f64>,
    pub positive: bool,
    pub strict: bool,
}

impl Block {
    fn neg(label: impl Into<String>, matrix: DMatrix<f64>, strict: bool) -> Self {
        Self { label: label.into(), matrix, positive: false, strict }
    }

    fn pos(label: impl Into<String>, matrix: DMatrix<f64>, strict: bool) -> Self {
        Self { label: label.into(), matrix, positive: true, strict }
    }

    /// The condition rewritten as `M <= 0`.
    pub fn as_nsd(&self) -> DMatrix<f64> {
        if self.positive {
            -&self.matrix
        } else {
            self.matrix.clone()
        }
    }
}

/// Symmetric builder with 1-based indices.
struct Sym(DMatrix<f64>);

impl Sym {
    fn new(n: usize) -> Self {
        Sym(DMatrix::zeros(n, n))
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.0[(i - 1, j - 1)] = v;
        self.0[(j - 1, i - 1)] = v;
    }

    fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

fn scalar(v: f64) -> DMatrix<f64> {
    DMatrix::from_element(1, 1, v)
}

/// `[[a, b], [b', c]]` with a scalar corner.
fn bordered(a: &DMatrix<f64>, b: &[f64], c: f64) -> DMatrix<f64> {
    let n = a.nrows();
    debug_assert_eq!(b.len(), n);
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m.view_mut((0, 0), (n, n)).copy_from(a);
    for (i, &v) in b.iter().enumerate() {
        m[(i, n)] = v;
        m[(n, i)] = v;
    }
    m[(n, n)] = c;
    m
}

fn point_weights(v: &Certificate) -> Result<DMatrix<f64>, LmiError> {
    let eta = v.require(VarId::Eta)?;
    let beta = [
        v.require(VarId::Beta1)?,
        v.require(VarId::Beta2)?,
        v.require(VarId::Beta3)?,
    ];
    Ok(crate::inequalities::point_bound_matrix(eta, beta))
}

fn domain_bound(v: &Certificate) -> Result<DMatrix<f64>, LmiError> {
    let p2 = v.require(VarId::P2)?;
    let gamma = v.require(VarId::Gamma)?;
    let mut m = Sym::new(2);
    m.set(1, 1, p2 - (1.0 + gamma) / (PI * PI));
    m.set(1, 2, 0.5_f64.sqrt());
    m.set(2, 2, gamma);
    Ok(m.into_inner())
}

// ---------------------------------------------------------------------------
// Continuous averaged
// ---------------------------------------------------------------------------

/// The 3x3 matrix `Upsilon`. With `mu_free` the gain is read from the certificate.
pub fn assemble_prop1(p: &ContinuousAvgParams, v: &Certificate, mu_free: bool) -> Result<DMatrix<f64>, LmiError> {
    let l1 = v.require(VarId::Lambda1)?;
    let l2 = v.require(VarId::Lambda2)?;
    let mu = if mu_free { v.require(VarId::Mu)? } else { p.mu };
    let db2 = p.delta_bar * p.delta_bar;
    let mut m = Sym::new(3);
    m.set(1, 1, -2.0 * mu + 2.0 * p.delta - l1 * PI * PI / 2.0);
    m.set(1, 2, -l1 / 2.0 - l2 * db2 / (PI * PI) - (1.0 - p.kappa));
    m.set(1, 3, mu);
    m.set(2, 2, -2.0);
    m.set(3, 3, -l2);
    Ok(m.into_inner())
}

// ---------------------------------------------------------------------------
// Continuous point
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct Prop2Blocks {
    pub first: f64,
    pub second: f64,
    pub lambda: DMatrix<f64>,
    pub point_weights: DMatrix<f64>,
}

pub fn assemble_prop2(p: &ContinuousAvgParams, v: &Certificate) -> Result<Prop2Blocks, LmiError> {
    let l1 = v.require(VarId::Lambda1)?;
    let l2 = v.require(VarId::Lambda2)?;
    let b1 = v.require(VarId::Beta1)?;
    let b2 = v.require(VarId::Beta2)?;
    let b3 = v.require(VarId::Beta3)?;
    let eta = v.require(VarId::Eta)?;
    let a2 = (p.delta_bar / PI).powi(2);
    let first = 2.0 * (1.0 - p.kappa) + b1 * a2 + l1 - l2;
    let second = -2.0 * p.kappa + b2 * a2 + l1 - l2;
    let mut m = Sym::new(4);
    m.set(1, 1, -2.0 * p.mu + 2.0 * p.delta - l1 * PI * PI / 2.0);
    m.set(1, 2, -l2 / 2.0);
    m.set(1, 3, -l2 / 2.0);
    m.set(1, 4, p.mu);
    m.set(2, 2, -2.0);
    m.set(2, 3, -2.0 + b3 / 2.0 * a2 * a2);
    m.set(3, 3, -2.0);
    m.set(4, 4, -eta);
    Ok(Prop2Blocks {
        first,
        second,
        lambda: m.into_inner(),
        point_weights: point_weights(v)?,
    })
}

// ---------------------------------------------------------------------------
// Sampled averaged
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct Thm1Blocks {
    pub xi1: DMatrix<f64>,
    pub xi2: DMatrix<f64>,
    pub domain: DMatrix<f64>,
}

impl Thm1Blocks {
    pub fn phi1(&self) -> DMatrix<f64> {
        self.xi1.view((0, 0), (7, 7)).into_owned()
    }
}

fn check_vertex(z: f64, c: f64) -> Result<(), LmiError> {
    if (z.abs() - c).abs() > 1e-12 * c {
        return Err(LmiError::BadVertex { z, c });
    }
    Ok(())
}

fn check_inside(z: f64, c: f64) -> Result<(), LmiError> {
    if !(z.abs() <= c * (1.0 + 1e-12)) {
        return Err(LmiError::BadVertex { z, c });
    }
    Ok(())
}

/// Border column shared by the sampled conditions.
fn sampling_column(p: &SampledAvgParams, r: f64, z: f64) -> [f64; 7] {
    let (h, k, mu) = (p.h, p.base.kappa, p.base.mu);
    let rh = r * h;
    [-rh * z, 0.0, -(1.0 - k) * rh, k * rh, -rh, -mu * rh, mu * rh]
}

/// `[[Phi, row'], [row, -r h e^{-2 delta h}]]` followed by the extended border.
fn sampled_pair(p: &SampledAvgParams, phi: &DMatrix<f64>, r: f64, p1: f64, p2: f64, z: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let (h, mu, delta) = (p.h, p.base.mu, p.base.delta);
    let col = sampling_column(p, r, z);
    let first = bordered(phi, &col, -r * h);
    let row = [0.0, 0.0, 0.0, 0.0, p2 * mu * h, p1 * mu * h, 0.0];
    let phi2 = bordered(phi, &row, -r * h * (-2.0 * delta * h).exp());
    let mut col2 = col.to_vec();
    col2.push(mu * r * h * h);
    let second = bordered(&phi2, &col2, -r * h);
    (first, second)
}

/// The blocks at an arbitrary `|z| <= C` (the conditions are affine in `z`).
pub fn thm1_blocks_at(p: &SampledAvgParams, v: &Certificate, z: f64) -> Result<Thm1Blocks, LmiError> {
    check_inside(z, p.c_bound)?;
    let r = v.require(VarId::R)?;
    let p1 = v.require(VarId::P1)?;
    let p2 = v.require(VarId::P2)?;
    let l1 = v.require(VarId::Lambda1)?;
    let l2 = v.require(VarId::Lambda2)?;
    let l3 = v.require(VarId::Lambda3)?;
    let ContinuousAvgParams { mu, delta, kappa: k, delta_bar } = p.base;
    let w = 2.0 * delta_bar * delta_bar / (PI * PI);
    let mut phi = Sym::new(7);
    phi.set(1, 1, 2.0 * p1 * (1.0 - k) + l1 + w * l2 - l3);
    phi.set(1, 5, -p2 * z);
    phi.set(2, 2, -2.0 * p1 * k + l1 + w * l2 - l3);
    phi.set(3, 3, -2.0 * p1 + 2.0 * delta * p2);
    phi.set(3, 4, 2.0 * delta * p2);
    phi.set(3, 5, -p2 * (1.0 - k));
    phi.set(3, 6, -l3 / 2.0);
    phi.set(4, 4, -2.0 * p1 + 2.0 * delta * p2);
    phi.set(4, 5, p2 * k);
    phi.set(4, 6, -l3 / 2.0);
    phi.set(5, 5, -2.0 * p2);
    phi.set(5, 6, -p2 * mu);
    phi.set(5, 7, p2 * mu);
    phi.set(6, 6, -2.0 * p1 * mu + 2.0 * delta * p1 - PI * PI / 2.0 * l1);
    phi.set(6, 7, p1 * mu);
    phi.set(7, 7, -l2);
    let (xi1, xi2) = sampled_pair(p, &phi.into_inner(), r, p1, p2, z);
    Ok(Thm1Blocks { xi1, xi2, domain: domain_bound(v)? })
}

/// Vertex assembly; `z_vertex` must be `+C` or `-C`.
pub fn assemble_thm1(p: &SampledAvgParams, v: &Certificate, z_vertex: f64) -> Result<Thm1Blocks, LmiError> {
    check_vertex(z_vertex, p.c_bound)?;
    thm1_blocks_at(p, v, z_vertex)
}

// ---------------------------------------------------------------------------
// Sampled point
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct Thm2Blocks {
    pub halanay: f64,
    pub theta_bar: DMatrix<f64>,
    pub domain: DMatrix<f64>,
    pub lambda1: DMatrix<f64>,
    pub lambda2: DMatrix<f64>,
    pub point_weights: DMatrix<f64>,
}

pub fn thm2_blocks_at(
    p: &SampledPointParams,
    v: &Certificate,
    z: f64,
    variant: ThetaBarVariant,
) -> Result<Thm2Blocks, LmiError> {
    let s = &p.sampled;
    check_inside(z, s.c_bound)?;
    let r = v.require(VarId::R)?;
    let p1 = v.require(VarId::P1)?;
    let p2 = v.require(VarId::P2)?;
    let eta = v.require(VarId::Eta)?;
    let l1 = v.require(VarId::Lambda1)?;
    let l2 = v.require(VarId::Lambda2)?;
    let b1 = v.require(VarId::Beta1)?;
    let b2 = v.require(VarId::Beta2)?;
    let b3 = v.require(VarId::Beta3)?;
    let ContinuousAvgParams { mu, delta, kappa: k, delta_bar } = s.base;
    let d1 = p.delta1;
    let a2 = (delta_bar / PI).powi(2);

    let halanay = -2.0 * d1 * p2 + b3 * a2 * a2;

    let mut tb = Sym::new(3);
    let corner = match variant {
        ThetaBarVariant::Corrected => p1,
        ThetaBarVariant::Verbatim => p2,
    };
    tb.set(1, 1, -d1 * corner);
    tb.set(1, 2, -b1 / 2.0 * a2);
    tb.set(1, 3, -b2 / 2.0 * a2);
    tb.set(2, 2, -d1 * p2);
    tb.set(3, 3, -d1 * p2);

    let mut th = Sym::new(7);
    th.set(1, 1, 2.0 * p1 * (1.0 - k) + l1 - l2);
    th.set(2, 2, -2.0 * p1 * k + l1 - l2);
    th.set(3, 3, -2.0 * p1 + 2.0 * delta * p2);
    th.set(3, 5, -p2 * (1.0 - k));
    th.set(3, 6, -l2 / 2.0);
    th.set(4, 4, -2.0 * p1 + 2.0 * delta * p2);
    th.set(4, 5, p2 * k);
    th.set(4, 6, -l2 / 2.0);
    th.set(5, 5, -2.0 * p2);
    th.set(5, 6, -p2 * mu);
    th.set(5, 7, p2 * mu);
    th.set(6, 6, -2.0 * p1 * mu + 2.0 * delta * p1 - PI * PI / 2.0 * l1);
    th.set(6, 7, p1 * mu);
    th.set(7, 7, -eta);
    let (lambda1, lambda2) = sampled_pair(s, &th.into_inner(), r, p1, p2, z);

    Ok(Thm2Blocks {
        halanay,
        theta_bar: tb.into_inner(),
        domain: domain_bound(v)?,
        lambda1,
        lambda2,
        point_weights: point_weights(v)?,
    })
}

pub fn assemble_thm2(
    p: &SampledPointParams,
    v: &Certificate,
    z_vertex: f64,
    variant: ThetaBarVariant,
) -> Result<Thm2Blocks, LmiError> {
    check_vertex(z_vertex, p.sampled.c_bound)?;
    thm2_blocks_at(p, v, z_vertex, variant)
}

// ---------------------------------------------------------------------------
// Families
// ---------------------------------------------------------------------------

/// A complete condition with its decision variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Prop1 { p: ContinuousAvgParams, mu_free: bool },
    Prop2 { p: ContinuousAvgParams },
    Thm1 { p: SampledAvgParams },
    Thm2 { p: SampledPointParams, theta_bar: ThetaBarVariant, lambda2: Lambda2Mode },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Prop1 { .. } => "prop1",
            Family::Prop2 { .. } => "prop2",
            Family::Thm1 { .. } => "thm1",
            Family::Thm2 { .. } => "thm2",
        }
    }

    pub fn variables(&self) -> Vec<(VarId, Sign)> {
        use Sign::*;
        use VarId::*;
        match self {
            Family::Prop1 { mu_free, .. } => {
                let mut v = vec![(Lambda1, NonNegative), (Lambda2, NonNegative)];
                if *mu_free {
                    v.push((Mu, Positive));
                }
                v
            }
            Family::Prop2 { .. } => vec![
                (Eta, Positive),
                (Lambda1, NonNegative),
                (Lambda2, Free),
                (Beta1, Positive),
                (Beta2, Positive),
                (Beta3, Positive),
            ],
            Family::Thm1 { .. } => vec![
                (R, Positive),
                (Gamma, Positive),
                (P1, Positive),
                (P2, Positive),
                (Lambda1, NonNegative),
                (Lambda2, NonNegative),
                (Lambda3, Free),
            ],
            Family::Thm2 { lambda2, .. } => vec![
                (R, Positive),
                (Gamma, Positive),
                (P1, Positive),
                (P2, Positive),
                (Eta, Positive),
                (Lambda1, NonNegative),
                (
                    Lambda2,
                    match lambda2 {
                        Lambda2Mode::Free => Free,
                        Lambda2Mode::NonNegative => NonNegative,
                    },
                ),
                (Beta1, Positive),
                (Beta2, Positive),
                (Beta3, Positive),
            ],
        }
    }

    pub fn h(&self) -> Option<f64> {
        match self {
            Family::Thm1 { p } => Some(p.h),
            Family::Thm2 { p, .. } => Some(p.sampled.h),
            _ => None,
        }
    }

    /// Same family at another sampling period.
    pub fn with_h(&self, h: f64) -> Result<Family, LmiError> {
        match *self {
            Family::Thm1 { p } => Ok(Family::Thm1 {
                p: SampledAvgParams::new(p.base, h, p.c_bound)?,
            }),
            Family::Thm2 { p, theta_bar, lambda2 } => Ok(Family::Thm2 {
                p: SampledPointParams::new(SampledAvgParams::new(p.sampled.base, h, p.sampled.c_bound)?, p.delta1)?,
                theta_bar,
                lambda2,
            }),
            _ => Err(LmiError::InvalidParameter(format!("{} has no sampling period", self.name()))),
        }
    }

    fn c_bound(&self) -> Option<f64> {
        match self {
            Family::Thm1 { p } => Some(p.c_bound),
            Family::Thm2 { p, .. } => Some(p.sampled.c_bound),
            _ => None,
        }
    }

    /// All conditions at the vertices `z = +/-C`.
    pub fn blocks(&self, v: &Certificate) -> Result<Vec<Block>, LmiError> {
        match self.c_bound() {
            Some(c) => {
                let mut out = self.blocks_at(v, c)?;
                out.extend(self.blocks_at(v, -c)?.into_iter().filter(|b| b.label.contains("[z=")));
                Ok(out)
            }
            None => self.blocks_at(v, 0.0),
        }
    }

    /// All conditions with the state-dependent blocks evaluated at `z`.
    /// `z` is ignored by the continuous families.
    pub fn blocks_at(&self, v: &Certificate, z: f64) -> Result<Vec<Block>, LmiError> {
        let tag = |name: &str| format!("{name}[z={z:+}]");
        match self {
            Family::Prop1 { p, mu_free } => Ok(vec![Block::neg("upsilon", assemble_prop1(p, v, *mu_free)?, false)]),
            Family::Prop2 { p } => {
                let b = assemble_prop2(p, v)?;
                Ok(vec![
                    Block::neg("x1_curvature", scalar(b.first), false),
                    Block::neg("x2_curvature", scalar(b.second), false),
                    Block::neg("lambda", b.lambda, false),
                    Block::pos("point_weights", b.point_weights, false),
                ])
            }
            Family::Thm1 { p } => {
                let b = thm1_blocks_at(p, v, z)?;
                Ok(vec![
                    Block::neg(tag("xi1"), b.xi1, true),
                    Block::neg(tag("xi2"), b.xi2, true),
                    Block::pos("domain", b.domain, true),
                ])
            }
            Family::Thm2 { p, theta_bar, .. } => {
                let b = thm2_blocks_at(p, v, z, *theta_bar)?;
                Ok(vec![
                    Block::neg("halanay", scalar(b.halanay), false),
                    Block::neg("theta_bar", b.theta_bar, false),
                    Block::pos("domain", b.domain, true),
                    Block::neg(tag("lambda1"), b.lambda1, true),
                    Block::neg(tag("lambda2"), b.lambda2, true),
                    Block::pos("point_weights", b.point_weights, false),
                ])
            }
        }
    }

    /// The zero certificate over this family's variables.
    pub fn zero_certificate(&self) -> Certificate {
        let mut c = Certificate::new();
        for (id, _) in self.variables() {
            c.set(id, 0.0);
        }
        c
    }
}
