//! Scalar fields on the unit square with clamped boundary conditions.
//!
//! A [`Field`] stores nodal values on a uniform `(m+1) x (m+1)` grid,
//! row-major over `(i, j)` with `x1 = i/m`, `x2 = j/m`. A clamped field has
//! exactly zero boundary nodes; its zero normal derivative is encoded by
//! ghost reflection `z[-1] = z[1]` whenever a stencil reaches across the
//! boundary.

use std::io::{self, Write};
use std::ops::RangeInclusive;

use thiserror::Error;

/// Smallest grid the 13-point biharmonic stencil supports.
pub const MIN_INTERVALS: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("grid needs at least {MIN_INTERVALS} intervals per side, got {0}")]
    GridTooSmall(usize),
    #[error("operation requires a clamped field")]
    NotClamped,
    #[error("expected {expected} nodal values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value at node ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("clamped field has non-zero boundary value at node ({0}, {1})")]
    BoundaryNotZero(usize, usize),
    #[error("fields live on different grids ({0} vs {1} intervals)")]
    GridMismatch(usize, usize),
    #[error("subdomain side {0} does not tile the unit square")]
    BadSubdomainSide(f64),
    #[error("grid with {m} intervals is not aligned with {n_side} subdomains per side (need m divisible by {required})")]
    Misaligned { m: usize, n_side: usize, required: usize },
}

/// Uniform grid on `[0,1]^2` with `m` intervals per side.
///
/// The spacing is always derived as `1/m`; node coordinates are computed as
/// `i/m` so that the last node sits exactly on `1.0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid2D {
    m: usize,
}

impl Grid2D {
    pub fn new(m: usize) -> Result<Self, FieldError> {
        if m < MIN_INTERVALS {
            return Err(FieldError::GridTooSmall(m));
        }
        Ok(Self { m })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.m as f64
    }

    /// Nodes per side, `m + 1`.
    pub fn side(&self) -> usize {
        self.m + 1
    }

    pub fn len(&self) -> usize {
        self.side() * self.side()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.side() + j
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        i as f64 / self.m as f64
    }

    #[inline]
    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.m || j == self.m
    }

    /// Trapezoid weight of node index `i` along one axis of `range`.
    #[inline]
    fn trap_weight(i: usize, range: &RangeInclusive<usize>) -> f64 {
        if i == *range.start() || i == *range.end() {
            0.5
        } else {
            1.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid2D,
    values: Vec<f64>,
    clamped: bool,
}

impl Field {
    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
            clamped: true,
        }
    }

    /// Samples `f` at every node without touching the boundary.
    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.side() {
            for j in 0..grid.side() {
                values.push(f(grid.coord(i), grid.coord(j)));
            }
        }
        Self {
            grid,
            values,
            clamped: false,
        }
    }

    /// Samples `f` at interior nodes and pins every boundary node to zero.
    pub fn clamped_from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut field = Self::from_fn(grid, f);
        field.pin_boundary();
        field
    }

    pub fn from_values(grid: Grid2D, values: Vec<f64>, clamped: bool) -> Result<Self, FieldError> {
        if values.len() != grid.len() {
            return Err(FieldError::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        for i in 0..grid.side() {
            for j in 0..grid.side() {
                let v = values[grid.idx(i, j)];
                if !v.is_finite() {
                    return Err(FieldError::NonFinite(i, j));
                }
                if clamped && grid.is_boundary(i, j) && v != 0.0 {
                    return Err(FieldError::BoundaryNotZero(i, j));
                }
            }
        }
        Ok(Self {
            grid,
            values,
            clamped,
        })
    }

    pub(crate) fn from_raw(grid: Grid2D, values: Vec<f64>, clamped: bool) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self {
            grid,
            values,
            clamped,
        }
    }

    fn pin_boundary(&mut self) {
        let m = self.grid.m;
        for k in 0..=m {
            for idx in [
                self.grid.idx(0, k),
                self.grid.idx(m, k),
                self.grid.idx(k, 0),
                self.grid.idx(k, m),
            ] {
                self.values[idx] = 0.0;
            }
        }
        self.clamped = true;
    }

    pub fn grid(&self) -> Grid2D {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_clamped(&self) -> bool {
        self.clamped
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    /// Value with ghost reflection across the boundary (`-1 -> 1`, `m+1 -> m-1`).
    #[inline]
    fn reflected(&self, i: isize, j: isize) -> f64 {
        let m = self.grid.m as isize;
        let fold = |k: isize| -> usize {
            if k < 0 {
                (-k) as usize
            } else if k > m {
                (2 * m - k) as usize
            } else {
                k as usize
            }
        };
        self.get(fold(i), fold(j))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| c * v).collect(),
            clamped: self.clamped,
        }
    }

    /// `a * self + b * other`; the result is clamped iff both inputs are.
    pub fn lin_comb(&self, a: f64, other: &Field, b: f64) -> Result<Self, FieldError> {
        self.same_grid(other)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
            clamped: self.clamped && other.clamped,
        })
    }

    /// Pointwise product; clamped iff either factor is.
    pub fn mul(&self, other: &Field) -> Result<Self, FieldError> {
        self.same_grid(other)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| x * y)
                .collect(),
            clamped: self.clamped || other.clamped,
        })
    }

    /// Subtracts a constant everywhere. The result is never clamped.
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v - c).collect(),
            clamped: false,
        }
    }

    fn same_grid(&self, other: &Field) -> Result<(), FieldError> {
        if self.grid != other.grid {
            return Err(FieldError::GridMismatch(self.grid.m, other.grid.m));
        }
        Ok(())
    }

    fn require_clamped(&self) -> Result<(), FieldError> {
        if self.clamped {
            Ok(())
        } else {
            Err(FieldError::NotClamped)
        }
    }

    /// Writes the field dump: header `x1,x2,value`, row-major, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "x1,x2,value")?;
        for i in 0..self.grid.side() {
            for j in 0..self.grid.side() {
                writeln!(
                    w,
                    "{:.16e},{:.16e},{:.16e}",
                    self.grid.coord(i),
                    self.grid.coord(j),
                    self.get(i, j)
                )?;
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Stencil operators
// ---------------------------------------------------------------------------

/// 13-point biharmonic stencil, offsets `(di, dj)` and weights (times `dx^-4`).
pub const BIHARMONIC_STENCIL: [(isize, isize, f64); 13] = [
    (0, 0, 20.0),
    (1, 0, -8.0),
    (-1, 0, -8.0),
    (0, 1, -8.0),
    (0, -1, -8.0),
    (1, 1, 2.0),
    (1, -1, 2.0),
    (-1, 1, 2.0),
    (-1, -1, 2.0),
    (2, 0, 1.0),
    (-2, 0, 1.0),
    (0, 2, 1.0),
    (0, -2, 1.0),
];

/// Five-point Laplacian. Boundary nodes receive the ghost-reflected value
/// (`2 z_inward / dx^2` on edges, zero at corners). The output is not clamped.
pub fn laplacian(f: &Field) -> Result<Field, FieldError> {
    f.require_clamped()?;
    let g = f.grid;
    let inv = 1.0 / (g.dx() * g.dx());
    let mut out = vec![0.0; g.len()];
    for i in 0..g.side() {
        for j in 0..g.side() {
            let (ii, jj) = (i as isize, j as isize);
            let v = f.reflected(ii + 1, jj)
                + f.reflected(ii - 1, jj)
                + f.reflected(ii, jj + 1)
                + f.reflected(ii, jj - 1)
                - 4.0 * f.get(i, j);
            out[g.idx(i, j)] = v * inv;
        }
    }
    Ok(Field::from_raw(g, out, false))
}

/// Second differences along one axis at interior nodes (Dirichlet, boundary output 0).
pub fn d11(f: &Field) -> Result<Field, FieldError> {
    second_difference(f, 1, 0)
}

pub fn d22(f: &Field) -> Result<Field, FieldError> {
    second_difference(f, 0, 1)
}

fn second_difference(f: &Field, si: isize, sj: isize) -> Result<Field, FieldError> {
    f.require_clamped()?;
    let g = f.grid;
    let inv = 1.0 / (g.dx() * g.dx());
    let mut out = vec![0.0; g.len()];
    for i in 1..g.m {
        for j in 1..g.m {
            let (ii, jj) = (i as isize, j as isize);
            let v = f.reflected(ii + si, jj + sj) + f.reflected(ii - si, jj - sj) - 2.0 * f.get(i, j);
            out[g.idx(i, j)] = v * inv;
        }
    }
    Ok(Field::from_raw(g, out, false))
}

/// 13-point biharmonic on interior nodes; nodes next to the boundary read
/// ghost values `z[-1] = z[1]`. Boundary output nodes are zero.
pub fn biharmonic(f: &Field) -> Result<Field, FieldError> {
    f.require_clamped()?;
    let g = f.grid;
    if g.m < MIN_INTERVALS {
        return Err(FieldError::GridTooSmall(g.m));
    }
    let dx2 = g.dx() * g.dx();
    let inv = 1.0 / (dx2 * dx2);
    let mut out = vec![0.0; g.len()];
    for i in 1..g.m {
        for j in 1..g.m {
            let (ii, jj) = (i as isize, j as isize);
            let v: f64 = BIHARMONIC_STENCIL
                .iter()
                .map(|&(di, dj, w)| w * f.reflected(ii + di, jj + dj))
                .sum();
            out[g.idx(i, j)] = v * inv;
        }
    }
    Ok(Field::from_raw(g, out, false))
}

/// Central first difference in `x1`.
///
/// Clamped inputs use ghost reflection everywhere, so the output vanishes on
/// the boundary. Other inputs fall back to second-order one-sided
/// differences on the boundary.
pub fn dx1(f: &Field) -> Field {
    first_difference(f, true)
}

pub fn dx2(f: &Field) -> Field {
    first_difference(f, false)
}

fn first_difference(f: &Field, along_x1: bool) -> Field {
    let g = f.grid;
    let m = g.m;
    let h = g.dx();
    let mut out = vec![0.0; g.len()];
    let at = |a: usize, b: usize| if along_x1 { f.get(a, b) } else { f.get(b, a) };
    for a in 0..=m {
        for b in 0..=m {
            let v = if f.clamped || (a > 0 && a < m) {
                let (aa, bb) = (a as isize, b as isize);
                let (p, q) = if along_x1 {
                    (f.reflected(aa + 1, bb), f.reflected(aa - 1, bb))
                } else {
                    (f.reflected(bb, aa + 1), f.reflected(bb, aa - 1))
                };
                (p - q) / (2.0 * h)
            } else if a == 0 {
                (-3.0 * at(0, b) + 4.0 * at(1, b) - at(2, b)) / (2.0 * h)
            } else {
                (3.0 * at(m, b) - 4.0 * at(m - 1, b) + at(m - 2, b)) / (2.0 * h)
            };
            let idx = if along_x1 { g.idx(a, b) } else { g.idx(b, a) };
            out[idx] = v;
        }
    }
    Field::from_raw(g, out, false)
}

/// Mixed derivative `z_{x1 x2}`: four-point cross stencil with ghost
/// reflection for clamped inputs, composed one-sided differences otherwise.
pub fn dx1x2(f: &Field) -> Field {
    let g = f.grid;
    if !f.clamped {
        return dx2(&dx1(f));
    }
    let inv = 1.0 / (4.0 * g.dx() * g.dx());
    let mut out = vec![0.0; g.len()];
    for i in 0..g.side() {
        for j in 0..g.side() {
            let (ii, jj) = (i as isize, j as isize);
            let v = f.reflected(ii + 1, jj + 1) - f.reflected(ii + 1, jj - 1) - f.reflected(ii - 1, jj + 1)
                + f.reflected(ii - 1, jj - 1);
            out[g.idx(i, j)] = v * inv;
        }
    }
    Field::from_raw(g, out, false)
}

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

/// Trapezoidal integral of `f` over the node rectangle `is x js`.
pub fn region_integral(f: &Field, is: RangeInclusive<usize>, js: RangeInclusive<usize>) -> f64 {
    region_sum(f, &is, &js, |v| v)
}

/// Trapezoidal integral of `f^2` over the node rectangle `is x js`.
pub fn region_l2_sq(f: &Field, is: RangeInclusive<usize>, js: RangeInclusive<usize>) -> f64 {
    region_sum(f, &is, &js, |v| v * v)
}

fn region_sum(
    f: &Field,
    is: &RangeInclusive<usize>,
    js: &RangeInclusive<usize>,
    map: impl Fn(f64) -> f64,
) -> f64 {
    let g = f.grid;
    let mut acc = 0.0;
    for i in is.clone() {
        let wi = Grid2D::trap_weight(i, is);
        let mut row = 0.0;
        for j in js.clone() {
            row += Grid2D::trap_weight(j, js) * map(f.get(i, j));
        }
        acc += wi * row;
    }
    acc * g.dx() * g.dx()
}

/// `||f||^2_{L2}` by the trapezoidal rule over the whole square.
pub fn l2_sq(f: &Field) -> f64 {
    let m = f.grid.m;
    region_l2_sq(f, 0..=m, 0..=m)
}

/// `∫ f g` by the trapezoidal rule over the whole square.
pub fn inner(f: &Field, g: &Field) -> Result<f64, FieldError> {
    let p = f.mul(g)?;
    let m = f.grid.m;
    Ok(region_integral(&p, 0..=m, 0..=m))
}

/// Discrete `C^0` norm: max of `|f|` over all nodes.
pub fn c0_norm(f: &Field) -> f64 {
    f.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

// ---------------------------------------------------------------------------
// Subdomain partition
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementMode {
    Averaged,
    Point,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Subdomain {
    pub index: usize,
    /// Position of the square along `x1` and `x2`, in `0..n_side`.
    pub cell: (usize, usize),
    pub x1_range: (f64, f64),
    pub x2_range: (f64, f64),
    pub center: (f64, f64),
}

/// `N = n_side^2` squares of side `delta_bar` tiling the unit square.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    n_side: usize,
    subdomains: Vec<Subdomain>,
}

impl Partition {
    pub fn new(delta_bar: f64) -> Result<Self, FieldError> {
        if !(delta_bar > 0.0 && delta_bar <= 1.0) {
            return Err(FieldError::BadSubdomainSide(delta_bar));
        }
        let n = (1.0 / delta_bar).round();
        if (n * delta_bar - 1.0).abs() > 1e-12 {
            return Err(FieldError::BadSubdomainSide(delta_bar));
        }
        Ok(Self::with_side_count(n as usize))
    }

    pub fn with_side_count(n_side: usize) -> Self {
        assert!(n_side > 0, "partition needs at least one subdomain");
        let side = 1.0 / n_side as f64;
        let mut subdomains = Vec::with_capacity(n_side * n_side);
        for a in 0..n_side {
            for b in 0..n_side {
                let x1 = (a as f64 / n_side as f64, (a + 1) as f64 / n_side as f64);
                let x2 = (b as f64 / n_side as f64, (b + 1) as f64 / n_side as f64);
                subdomains.push(Subdomain {
                    index: a * n_side + b,
                    cell: (a, b),
                    x1_range: x1,
                    x2_range: x2,
                    center: (x1.0 + 0.5 * side, x2.0 + 0.5 * side),
                });
            }
        }
        Self { n_side, subdomains }
    }

    pub fn n_side(&self) -> usize {
        self.n_side
    }

    pub fn delta_bar(&self) -> f64 {
        1.0 / self.n_side as f64
    }

    pub fn len(&self) -> usize {
        self.subdomains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subdomains.is_empty()
    }

    pub fn subdomains(&self) -> &[Subdomain] {
        &self.subdomains
    }

    pub fn subdomain(&self, index: usize) -> &Subdomain {
        &self.subdomains[index]
    }

    /// Subdomain edges must lie on grid lines.
    pub fn check_aligned(&self, grid: &Grid2D) -> Result<(), FieldError> {
        if grid.m % self.n_side != 0 {
            return Err(FieldError::Misaligned {
                m: grid.m,
                n_side: self.n_side,
                required: self.n_side,
            });
        }
        Ok(())
    }

    /// Subdomain centers must be nodes.
    pub fn check_centered(&self, grid: &Grid2D) -> Result<(), FieldError> {
        if grid.m % (2 * self.n_side) != 0 {
            return Err(FieldError::Misaligned {
                m: grid.m,
                n_side: self.n_side,
                required: 2 * self.n_side,
            });
        }
        Ok(())
    }

    /// Closed node ranges covering `s`.
    pub fn node_ranges(
        &self,
        grid: &Grid2D,
        s: &Subdomain,
    ) -> Result<(RangeInclusive<usize>, RangeInclusive<usize>), FieldError> {
        self.check_aligned(grid)?;
        let cells = grid.m / self.n_side;
        let (a, b) = s.cell;
        Ok((a * cells..=(a + 1) * cells, b * cells..=(b + 1) * cells))
    }

    pub fn center_node(&self, grid: &Grid2D, s: &Subdomain) -> Result<(usize, usize), FieldError> {
        self.check_centered(grid)?;
        let cells = grid.m / self.n_side;
        let (a, b) = s.cell;
        Ok((a * cells + cells / 2, b * cells + cells / 2))
    }

    /// Subdomain owning node `(i, j)` under the half-open convention
    /// `[min, max)`, with the last row and column closed.
    pub fn owner(&self, grid: &Grid2D, i: usize, j: usize) -> usize {
        let cells = grid.m / self.n_side;
        let a = (i / cells).min(self.n_side - 1);
        let b = (j / cells).min(self.n_side - 1);
        a * self.n_side + b
    }

    /// Owner index of every node, row-major.
    pub fn owner_map(&self, grid: &Grid2D) -> Result<Vec<usize>, FieldError> {
        self.check_aligned(grid)?;
        let mut map = Vec::with_capacity(grid.len());
        for i in 0..grid.side() {
            for j in 0..grid.side() {
                map.push(self.owner(grid, i, j));
            }
        }
        Ok(map)
    }
}

/// Averaged measurement: trapezoidal integral over `s` divided by `|s|`.
pub fn subdomain_mean(f: &Field, partition: &Partition, s: &Subdomain) -> Result<f64, FieldError> {
    let (is, js) = partition.node_ranges(&f.grid, s)?;
    let area = partition.delta_bar() * partition.delta_bar();
    Ok(region_integral(f, is, js) / area)
}

/// Point measurement at the subdomain center node.
pub fn point_value(f: &Field, partition: &Partition, s: &Subdomain) -> Result<f64, FieldError> {
    let (i, j) = partition.center_node(&f.grid, s)?;
    Ok(f.get(i, j))
}

pub fn measure(
    f: &Field,
    partition: &Partition,
    s: &Subdomain,
    mode: MeasurementMode,
) -> Result<f64, FieldError> {
    match mode {
        MeasurementMode::Averaged => subdomain_mean(f, partition, s),
        MeasurementMode::Point => point_value(f, partition, s),
    }
}

/// Nodal values restricted to one subdomain's closed node rectangle.
#[derive(Debug, Clone, PartialEq)]
pub struct SubdomainField {
    pub i_range: RangeInclusive<usize>,
    pub j_range: RangeInclusive<usize>,
    /// Row-major over the local rectangle.
    pub values: Vec<f64>,
    dx: f64,
}

impl SubdomainField {
    fn width(&self) -> usize {
        self.j_range.end() - self.j_range.start() + 1
    }

    /// Value at global node `(i, j)`, which must lie in the rectangle.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let li = i - self.i_range.start();
        let lj = j - self.j_range.start();
        self.values[li * self.width() + lj]
    }

    pub fn integral(&self) -> f64 {
        let mut acc = 0.0;
        for i in self.i_range.clone() {
            let wi = Grid2D::trap_weight(i, &self.i_range);
            for j in self.j_range.clone() {
                acc += wi * Grid2D::trap_weight(j, &self.j_range) * self.get(i, j);
            }
        }
        acc * self.dx * self.dx
    }

    pub fn mean(&self) -> f64 {
        let li = (self.i_range.end() - self.i_range.start()) as f64 * self.dx;
        let lj = (self.j_range.end() - self.j_range.start()) as f64 * self.dx;
        self.integral() / (li * lj)
    }
}

/// `f_j = f - y_j` on the nodes of `s`, where `y_j` is the averaged or point
/// measurement of `f` on `s`.
pub fn residual_f_j(
    f: &Field,
    partition: &Partition,
    s: &Subdomain,
    mode: MeasurementMode,
) -> Result<SubdomainField, FieldError> {
    let y = measure(f, partition, s, mode)?;
    let (is, js) = partition.node_ranges(&f.grid, s)?;
    let mut values = Vec::new();
    for i in is.clone() {
        for j in js.clone() {
            values.push(f.get(i, j) - y);
        }
    }
    Ok(SubdomainField {
        i_range: is,
        j_range: js,
        values,
        dx: f.grid.dx(),
    })
}
