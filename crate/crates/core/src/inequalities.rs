//! Discrete checks of the functional inequalities behind the stability
//! certificates, plus the Halanay decay-rate solver.
//!
//! Each `check_*` returns a [`Margin`]: bound side minus bounded side, with a
//! quadrature tolerance `10 dx^2 |bound|` that absorbs the O(dx^2) error of
//! the stencils and the trapezoidal rule.

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::field::{self, Field, FieldError, Grid2D, Partition, Subdomain};
use crate::linalg::min_eigenvalue;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InequalityError {
    #[error("Halanay parameters violate 0 <= delta1 < 2 delta, h >= 0 (delta={delta}, delta1={delta1}, h={h})")]
    Halanay { delta: f64, delta1: f64, h: f64 },
    #[error("Friedrich weights must be positive and sum to one, got ({0}, {1}, {2})")]
    FriedrichWeights(f64, f64, f64),
    #[error("point-bound weights violate diag(beta) >= eta * ones (min eigenvalue {min_eig})")]
    PointBoundWeights { min_eig: f64 },
    #[error("Sobolev parameter Gamma must be positive, got {0}")]
    Gamma(f64),
    #[error("field must vanish at the square's anchor corner, found {0}")]
    CornerNotZero(f64),
    #[error("field has non-zero mean {0} on the subdomain")]
    NonZeroMean(f64),
    #[error("square does not fit on the grid")]
    BadSquare,
    #[error(transparent)]
    Field(#[from] FieldError),
}

// ---------------------------------------------------------------------------
// Halanay
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalanayParams {
    delta: f64,
    delta1: f64,
    h: f64,
}

impl HalanayParams {
    /// `delta1 = 0` is admitted as the no-delay limit where `sigma = delta`.
    pub fn new(delta: f64, delta1: f64, h: f64) -> Result<Self, InequalityError> {
        let ok = delta > 0.0
            && delta.is_finite()
            && delta1 >= 0.0
            && delta1 < 2.0 * delta
            && h >= 0.0
            && h.is_finite();
        if !ok {
            return Err(InequalityError::Halanay { delta, delta1, h });
        }
        Ok(Self { delta, delta1, h })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn delta1(&self) -> f64 {
        self.delta1
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// `g(sigma) = sigma - delta + (delta1 / 2) e^{2 sigma h}`, strictly increasing.
    pub fn residual(&self, sigma: f64) -> f64 {
        sigma - self.delta + 0.5 * self.delta1 * (2.0 * sigma * self.h).exp()
    }
}

/// Unique root of `sigma = delta - (delta1/2) e^{2 sigma h}` in
/// `[0, delta - delta1/2]`, by bisection.
pub fn halanay_sigma(p: &HalanayParams) -> f64 {
    if p.delta1 == 0.0 {
        return p.delta;
    }
    if p.h == 0.0 {
        return p.delta - 0.5 * p.delta1;
    }
    let (mut lo, mut hi) = (0.0_f64, p.delta - 0.5 * p.delta1);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if p.residual(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if p.residual(lo).abs() <= p.residual(hi).abs() {
        lo
    } else {
        hi
    }
}

// ---------------------------------------------------------------------------
// Margins and regions
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Margin {
    /// The side that is bounded (e.g. `||f||^2`).
    pub lhs: f64,
    /// The bound.
    pub rhs: f64,
    pub tol: f64,
}

impl Margin {
    fn new(lhs: f64, rhs: f64, dx: f64) -> Self {
        Self {
            lhs,
            rhs,
            tol: 10.0 * dx * dx * rhs.abs(),
        }
    }

    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }

    pub fn holds(&self) -> bool {
        self.margin() >= -self.tol
    }
}

/// Corner of a [`Square`] at which the field is required to vanish.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corner {
    LowLow,
    LowHigh,
    HighLow,
    HighHigh,
}

/// Axis-aligned node square `[i0, i0+n] x [j0, j0+n]` with an anchor corner.
#[derive(Debug, Clone, PartialEq)]
pub struct Square {
    pub i0: usize,
    pub j0: usize,
    pub n: usize,
    pub corner: Corner,
}

impl Square {
    pub fn whole(grid: &Grid2D) -> Self {
        Self {
            i0: 0,
            j0: 0,
            n: grid.m(),
            corner: Corner::LowLow,
        }
    }

    /// The four quarter squares of `s`, each anchored at the subdomain center.
    pub fn quadrants(grid: &Grid2D, partition: &Partition, s: &Subdomain) -> Result<[Square; 4], FieldError> {
        let (ci, cj) = partition.center_node(grid, s)?;
        let half = grid.m() / partition.n_side() / 2;
        Ok([
            Square { i0: ci, j0: cj, n: half, corner: Corner::LowLow },
            Square { i0: ci - half, j0: cj, n: half, corner: Corner::HighLow },
            Square { i0: ci, j0: cj - half, n: half, corner: Corner::LowHigh },
            Square { i0: ci - half, j0: cj - half, n: half, corner: Corner::HighHigh },
        ])
    }

    fn ranges(&self) -> (RangeInclusive<usize>, RangeInclusive<usize>) {
        (self.i0..=self.i0 + self.n, self.j0..=self.j0 + self.n)
    }

    fn anchor(&self) -> (usize, usize) {
        match self.corner {
            Corner::LowLow => (self.i0, self.j0),
            Corner::LowHigh => (self.i0, self.j0 + self.n),
            Corner::HighLow => (self.i0 + self.n, self.j0),
            Corner::HighHigh => (self.i0 + self.n, self.j0 + self.n),
        }
    }

    pub fn side(&self, grid: &Grid2D) -> f64 {
        self.n as f64 * grid.dx()
    }
}

/// `L2` norms of a field and its first and mixed derivatives over a node region.
///
/// Derivatives are staggered differences: `f_x1` lives on horizontal edges,
/// `f_x2` on vertical edges and `f_x1x2` on cell centers. Edge sums use the
/// midpoint rule across and the trapezoidal rule along the edge direction, so
/// every norm is second-order accurate without needing normal derivatives at
/// the region boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionNorms {
    pub f: f64,
    pub fx1: f64,
    pub fx2: f64,
    pub fx1x2: f64,
}

impl RegionNorms {
    pub fn compute(f: &Field, is: RangeInclusive<usize>, js: RangeInclusive<usize>) -> Self {
        let dx = f.grid().dx();
        let (i0, i1, j0, j1) = (*is.start(), *is.end(), *js.start(), *js.end());
        let tw = |k: usize, lo: usize, hi: usize| if k == lo || k == hi { 0.5 } else { 1.0 };
        let mut fx1 = 0.0;
        for i in i0..i1 {
            for j in j0..=j1 {
                let d = f.get(i + 1, j) - f.get(i, j);
                fx1 += tw(j, j0, j1) * d * d;
            }
        }
        let mut fx2 = 0.0;
        for i in i0..=i1 {
            for j in j0..j1 {
                let d = f.get(i, j + 1) - f.get(i, j);
                fx2 += tw(i, i0, i1) * d * d;
            }
        }
        let mut fx1x2 = 0.0;
        for i in i0..i1 {
            for j in j0..j1 {
                let d = f.get(i + 1, j + 1) - f.get(i + 1, j) - f.get(i, j + 1) + f.get(i, j);
                fx1x2 += d * d;
            }
        }
        Self {
            f: field::region_l2_sq(f, is, js),
            fx1,
            fx2,
            fx1x2: fx1x2 / (dx * dx),
        }
    }

    pub fn whole(f: &Field) -> Self {
        let m = f.grid().m();
        Self::compute(f, 0..=m, 0..=m)
    }
}

// ---------------------------------------------------------------------------
// Weight types
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FriedrichWeights {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
}

impl FriedrichWeights {
    pub fn new(alpha1: f64, alpha2: f64, alpha3: f64) -> Result<Self, InequalityError> {
        let positive = alpha1 > 0.0 && alpha2 > 0.0 && alpha3 > 0.0;
        if !positive || (alpha1 + alpha2 + alpha3 - 1.0).abs() > 1e-12 {
            return Err(InequalityError::FriedrichWeights(alpha1, alpha2, alpha3));
        }
        Ok(Self { alpha1, alpha2, alpha3 })
    }

    pub fn equal() -> Self {
        Self::new(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0).expect("equal weights are valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointBoundWeights {
    pub eta: f64,
    pub beta: [f64; 3],
}

/// `diag(beta) - eta * ones(3, 3)`.
pub fn point_bound_matrix(eta: f64, beta: [f64; 3]) -> DMatrix<f64> {
    DMatrix::from_fn(3, 3, |i, j| if i == j { beta[i] - eta } else { -eta })
}

impl PointBoundWeights {
    pub fn new(eta: f64, beta: [f64; 3]) -> Result<Self, InequalityError> {
        let min_eig = min_eigenvalue(&point_bound_matrix(eta, beta));
        if !(eta > 0.0) || beta.iter().any(|&b| !(b > 0.0)) || min_eig < -1e-12 {
            return Err(InequalityError::PointBoundWeights { min_eig });
        }
        Ok(Self { eta, beta })
    }
}

// ---------------------------------------------------------------------------
// Checks
// ---------------------------------------------------------------------------

/// `||f||^2 <= ((L1^2 + L2^2) / pi^2) ||grad f||^2` on the unit square.
pub fn check_wirtinger(f: &Field) -> Result<Margin, InequalityError> {
    if !f.is_clamped() {
        return Err(FieldError::NotClamped.into());
    }
    let n = RegionNorms::whole(f);
    let rhs = (2.0 / (PI * PI)) * (n.fx1 + n.fx2);
    Ok(Margin::new(n.f, rhs, f.grid().dx()))
}

/// Poincare on one subdomain for a zero-mean restriction:
/// `∫_s f^2 <= (2 Δ^2 / pi^2) ∫_s |grad f|^2`.
pub fn check_poincare(f: &Field, partition: &Partition, s: &Subdomain) -> Result<Margin, InequalityError> {
    let (is, js) = partition.node_ranges(&f.grid(), s)?;
    let db = partition.delta_bar();
    let mean = field::region_integral(f, is.clone(), js.clone()) / (db * db);
    let scale = field::region_l2_sq(f, is.clone(), js.clone()).sqrt() / db;
    if mean.abs() > 1e-10 * scale.max(1e-300) && mean.abs() > 1e-14 {
        return Err(InequalityError::NonZeroMean(mean));
    }
    let n = RegionNorms::compute(f, is, js);
    let rhs = poincare_constant(db, db) * (n.fx1 + n.fx2);
    Ok(Margin::new(n.f, rhs, f.grid().dx()))
}

/// `(L1^2 + L2^2) / pi^2`.
pub fn poincare_constant(l1: f64, l2: f64) -> f64 {
    (l1 * l1 + l2 * l2) / (PI * PI)
}

fn square_norms(f: &Field, sq: &Square) -> Result<RegionNorms, InequalityError> {
    let g = f.grid();
    if sq.i0 + sq.n > g.m() || sq.j0 + sq.n > g.m() || sq.n == 0 {
        return Err(InequalityError::BadSquare);
    }
    let (ai, aj) = sq.anchor();
    let corner = f.get(ai, aj);
    if corner != 0.0 {
        return Err(InequalityError::CornerNotZero(corner));
    }
    let (is, js) = sq.ranges();
    Ok(RegionNorms::compute(f, is, js))
}

/// Friedrich's inequality on a square of side `l` with `f` vanishing at the anchor corner.
pub fn check_friedrich(f: &Field, sq: &Square, w: &FriedrichWeights) -> Result<Margin, InequalityError> {
    let n = square_norms(f, sq)?;
    let c = (2.0 * sq.side(&f.grid()) / PI).powi(2);
    let rhs = c * n.fx1 / w.alpha1 + c * n.fx2 / w.alpha2 + c * c * n.fx1x2 / w.alpha3;
    Ok(Margin::new(n.f, rhs, f.grid().dx()))
}

/// `eta ||f||^2 <= beta1 c ||f_x1||^2 + beta2 c ||f_x2||^2 + beta3 c^2 ||f_x1x2||^2`, `c = (2l/pi)^2`.
pub fn check_point_bound(f: &Field, sq: &Square, w: &PointBoundWeights) -> Result<Margin, InequalityError> {
    let n = square_norms(f, sq)?;
    let c = (2.0 * sq.side(&f.grid()) / PI).powi(2);
    let rhs = w.beta[0] * c * n.fx1 + w.beta[1] * c * n.fx2 + w.beta[2] * c * c * n.fx1x2;
    Ok(Margin::new(w.eta * n.f, rhs, f.grid().dx()))
}

/// 2D Sobolev bound on `||f||^2_{C0}`; returns the bound and its margin.
pub fn sobolev2d_bound(f: &Field, gamma: f64) -> Result<(f64, Margin), InequalityError> {
    if !(gamma > 0.0) {
        return Err(InequalityError::Gamma(gamma));
    }
    if !f.is_clamped() {
        return Err(FieldError::NotClamped.into());
    }
    let n = RegionNorms::whole(f);
    let bound = 0.5 * (1.0 + gamma) * (n.fx1 + n.fx2) + n.fx1x2 / gamma;
    let c0 = field::c0_norm(f);
    Ok((bound, Margin::new(c0 * c0, bound, f.grid().dx())))
}

/// Largest mode index in [`mode_sum_field`].
pub const MODE_CUTOFF: usize = 6;

/// `sum c[k-1][l-1] sin(k pi x1) sin(l pi x2)` over `k, l <= MODE_CUTOFF`.
pub fn mode_sum_field(grid: Grid2D, coeffs: &[[f64; MODE_CUTOFF]; MODE_CUTOFF]) -> Field {
    let m = grid.m();
    let x = |i: usize| grid.coord(i);
    // sin(k pi x_i) tabulated per axis
    let table: Vec<[f64; MODE_CUTOFF]> = (0..=m)
        .map(|i| std::array::from_fn(|k| ((k + 1) as f64 * PI * x(i)).sin()))
        .collect();
    let mut values = vec![0.0; grid.len()];
    for i in 1..m {
        for j in 1..m {
            let mut acc = 0.0;
            for (k, row) in coeffs.iter().enumerate() {
                for (l, c) in row.iter().enumerate() {
                    acc += c * table[i][k] * table[j][l];
                }
            }
            values[grid.idx(i, j)] = acc;
        }
    }
    Field::from_values(grid, values, true).expect("boundary nodes are zero")
}
