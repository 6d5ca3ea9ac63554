//! Preconditioned conjugate gradients for the frozen-coefficient system
//! `Σ_f c_f/d_f² (x_P - x_nb) = r_P` on interior nodes, with zero
//! Dirichlet rows on the boundary.

use super::laplacian::FaceData;
use crate::geometry::DomainSpec;
use crate::{par, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preconditioner {
    Jacobi,
    /// Exact solves along each grid column (block Jacobi on x₂ lines).
    #[default]
    ColumnLines,
}

/// The five-point operator built from face coefficients.
///
/// Stencil weights are stored per node; a weight is zero when the neighbour
/// is a boundary node, so interior rows never read boundary entries.
#[derive(Debug, Clone)]
pub struct FaceOperator {
    domain: DomainSpec,
    diag: Vec<f64>,
    east: Vec<f64>,
    west: Vec<f64>,
    north: Vec<f64>,
    south: Vec<f64>,
    /// Column Thomas factors: `1/denominator` and the eliminated upper
    /// coefficient.
    inv_denom: Vec<f64>,
    upper: Vec<f64>,
}

impl FaceOperator {
    pub fn new(coeff: &FaceData) -> Self {
        let d = coeff.domain;
        let (s1, s2) = (1.0 / (d.dx1() * d.dx1()), 1.0 / (d.dx2() * d.dx2()));
        let n = d.len();
        let mut op = Self {
            domain: d,
            diag: vec![1.0; n],
            east: vec![0.0; n],
            west: vec![0.0; n],
            north: vec![0.0; n],
            south: vec![0.0; n],
            inv_denom: vec![1.0; n],
            upper: vec![0.0; n],
        };
        for j in 1..d.n2 - 1 {
            for i in 1..d.n1 - 1 {
                let k = d.idx(i, j);
                let (we, ww) = (coeff.e(i, j) * s1, coeff.e(i - 1, j) * s1);
                let (wn, ws) = (coeff.n(i, j) * s2, coeff.n(i, j - 1) * s2);
                op.diag[k] = we + ww + wn + ws;
                let inner = |i: usize, j: usize| !d.is_boundary(i, j);
                op.east[k] = if inner(i + 1, j) { we } else { 0.0 };
                op.west[k] = if inner(i - 1, j) { ww } else { 0.0 };
                op.north[k] = if inner(i, j + 1) { wn } else { 0.0 };
                op.south[k] = if inner(i, j - 1) { ws } else { 0.0 };
            }
        }
        // tridiagonal column systems: -south, diag, -north
        for i in 1..d.n1 - 1 {
            let mut prev_upper = 0.0;
            for j in 1..d.n2 - 1 {
                let k = d.idx(i, j);
                let denom = op.diag[k] - op.south[k] * prev_upper;
                op.inv_denom[k] = 1.0 / denom;
                op.upper[k] = op.north[k] / denom;
                prev_upper = op.upper[k];
            }
        }
        op
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    /// `out = A x`. Boundary rows act as the identity.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let d = self.domain;
        let n1 = d.n1;
        par::for_rows_mut(out, n1, |j, row| {
            if j == 0 || j + 1 == d.n2 {
                row.copy_from_slice(&x[j * n1..(j + 1) * n1]);
                return;
            }
            let base = j * n1;
            row[0] = x[base];
            row[n1 - 1] = x[base + n1 - 1];
            #[allow(clippy::needless_range_loop)]
            for i in 1..n1 - 1 {
                let k = base + i;
                row[i] = self.diag[k] * x[k]
                    - self.east[k] * x[k + 1]
                    - self.west[k] * x[k - 1]
                    - self.north[k] * x[k + n1]
                    - self.south[k] * x[k - n1];
            }
        });
    }

    fn precondition(&self, kind: Preconditioner, r: &[f64], z: &mut [f64]) {
        match kind {
            Preconditioner::Jacobi => par::fill(z, |k| r[k] / self.diag[k]),
            Preconditioner::ColumnLines => self.column_solve(r, z),
        }
    }

    /// Thomas sweeps along every interior column, advanced row by row so
    /// memory access stays contiguous.
    fn column_solve(&self, r: &[f64], z: &mut [f64]) {
        let d = self.domain;
        let n1 = d.n1;
        let last = d.n2 - 1;
        z[..n1].copy_from_slice(&r[..n1]);
        z[last * n1..].copy_from_slice(&r[last * n1..]);
        for j in 1..last {
            let base = j * n1;
            z[base] = r[base];
            z[base + n1 - 1] = r[base + n1 - 1];
            for k in base + 1..base + n1 - 1 {
                let carry = if j > 1 {
                    self.south[k] * z[k - n1]
                } else {
                    0.0
                };
                z[k] = (r[k] + carry) * self.inv_denom[k];
            }
        }
        for j in (1..last - 1).rev() {
            let base = j * n1;
            for k in base + 1..base + n1 - 1 {
                z[k] += self.upper[k] * z[k + n1];
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcgReport {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Solves `A x = b` from `x = 0` to `‖r‖₂ ≤ rel_tol ‖b‖₂`.
pub fn pcg(
    op: &FaceOperator,
    b: &[f64],
    rel_tol: f64,
    max_iter: usize,
    kind: Preconditioner,
) -> Result<(Vec<f64>, PcgReport)> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let bnorm = par::dot(b, b).sqrt();
    if bnorm == 0.0 {
        return Ok((
            x,
            PcgReport {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    op.precondition(kind, &r, &mut z);
    let mut p = z.clone();
    let mut q = vec![0.0; n];
    let mut rz = par::dot(&r, &z);
    let mut rel = 1.0;
    for it in 1..=max_iter {
        op.apply(&p, &mut q);
        let pq = par::dot(&p, &q);
        if !(pq > 0.0) {
            return Err(Error::SolverFailure {
                iterations: it,
                residual: rel,
            });
        }
        let alpha = rz / pq;
        par::for_each_mut(&mut x, |k, v| *v += alpha * p[k]);
        par::for_each_mut(&mut r, |k, v| *v -= alpha * q[k]);
        rel = par::dot(&r, &r).sqrt() / bnorm;
        if rel <= rel_tol {
            return Ok((
                x,
                PcgReport {
                    iterations: it,
                    relative_residual: rel,
                },
            ));
        }
        op.precondition(kind, &r, &mut z);
        let rz_new = par::dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        par::for_each_mut(&mut p, |k, v| *v = z[k] + beta * *v);
    }
    Err(Error::SolverFailure {
        iterations: max_iter,
        residual: rel,
    })
}
