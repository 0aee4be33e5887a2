//! Semi-implicit stepper `(I + dt L) z+ = z - dt (z^2/2)_x1 + dt u` with
//! `L = bilap + (1 - kappa) D11 - kappa D22` on the interior nodes.

use crate::field::{Field, Grid2D, BIHARMONIC_STENCIL};
use crate::linalg::{BandCholesky, LinalgError, SymBand};

/// Interior unknowns are ordered `(i - 1) * (m - 1) + (j - 1)`.
fn unknown(m: usize, i: usize, j: usize) -> usize {
    (i - 1) * (m - 1) + (j - 1)
}

/// Banded matrix of `c * I + L`, with the clamped ghost reflection folded
/// into the boundary-adjacent rows.
pub fn operator_band(grid: Grid2D, kappa: f64, identity: f64, scale: f64) -> SymBand {
    let m = grid.m();
    let n = (m - 1) * (m - 1);
    let dx = grid.dx();
    let (dx2, dx4) = (dx * dx, dx * dx * dx * dx);
    let mut a = SymBand::zeros(n, 2 * (m - 1));
    let fold = |k: isize| -> Option<usize> {
        let mi = m as isize;
        let k = if k < 0 { -k } else if k > mi { 2 * mi - k } else { k };
        (k > 0 && k < mi).then_some(k as usize)
    };
    let mut row: Vec<(usize, f64)> = Vec::with_capacity(32);
    for i in 1..m {
        for j in 1..m {
            row.clear();
            let r = unknown(m, i, j);
            for &(di, dj, w) in BIHARMONIC_STENCIL.iter() {
                if let (Some(p), Some(q)) = (fold(i as isize + di), fold(j as isize + dj)) {
                    row.push((unknown(m, p, q), scale * w / dx4));
                }
            }
            let c1 = scale * (1.0 - kappa) / dx2;
            let c2 = -scale * kappa / dx2;
            row.push((r, -2.0 * c1 - 2.0 * c2 + identity));
            if i > 1 {
                row.push((unknown(m, i - 1, j), c1));
            }
            if i + 1 < m {
                row.push((unknown(m, i + 1, j), c1));
            }
            if j > 1 {
                row.push((unknown(m, i, j - 1), c2));
            }
            if j + 1 < m {
                row.push((unknown(m, i, j + 1), c2));
            }
            for &(c, v) in &row {
                if c <= r {
                    a.add(r, c, v);
                }
            }
        }
    }
    a
}

/// Factorized implicit operator, reused for every step of a run.
#[derive(Debug, Clone)]
pub struct Stepper {
    grid: Grid2D,
    dt: f64,
    chol: BandCholesky,
}

impl Stepper {
    pub fn new(grid: Grid2D, kappa: f64, dt: f64) -> Result<Self, LinalgError> {
        let chol = operator_band(grid, kappa, 1.0, dt).factorize()?;
        Ok(Self { grid, dt, chol })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// One step with the nodal control `u` (length `(m+1)^2`).
    pub fn step(&self, z: &Field, u: &[f64]) -> Field {
        let g = self.grid;
        let m = g.m();
        let dt = self.dt;
        let inv4dx = 1.0 / (4.0 * g.dx());
        let mut b = vec![0.0; (m - 1) * (m - 1)];
        for i in 1..m {
            for j in 1..m {
                let zp = z.get(i + 1, j);
                let zm = z.get(i - 1, j);
                let nl = (zp * zp - zm * zm) * inv4dx;
                b[unknown(m, i, j)] = z.get(i, j) - dt * nl + dt * u[g.idx(i, j)];
            }
        }
        self.chol
            .solve_in_place(&mut b)
            .expect("right-hand side sized to the factorization");
        let mut values = vec![0.0; g.len()];
        for i in 1..m {
            for j in 1..m {
                values[g.idx(i, j)] = b[unknown(m, i, j)];
            }
        }
        Field::from_raw(g, values, true)
    }
}
