//! Conjugate-gradient solves for `(shift·I − coef·Δ_h) u = b` on the
//! cell-centered grid, with boundary conditions folded into the stencil.

use crate::error::SolverError;
use crate::grid::{BoundarySpec, EdgeCondition, Grid2D, Quantity, ScalarField};

/// Symmetric five-point operator `shift·I − coef·Δ_h`.
#[derive(Debug, Clone)]
pub struct DiffusionOperator {
    grid: Grid2D,
    spec: BoundarySpec,
    kind: Quantity,
    shift: f64,
    coef: f64,
}

impl DiffusionOperator {
    pub fn new(
        grid: Grid2D,
        spec: BoundarySpec,
        kind: Quantity,
        shift: f64,
        coef: f64,
    ) -> Result<Self, SolverError> {
        spec.validate()?;
        if shift < 0.0 || coef < 0.0 {
            return Err(SolverError::Invalid(
                "diffusion operator needs nonnegative shift and coefficient".into(),
            ));
        }
        if shift == 0.0 && !spec.has_dirichlet() {
            return Err(SolverError::SingularSystem);
        }
        Ok(Self {
            grid,
            spec,
            kind,
            shift,
            coef,
        })
    }

    fn diagonal(&self) -> Vec<f64> {
        let g = self.grid;
        let (ix2, iy2) = (1.0 / (g.dx() * g.dx()), 1.0 / (g.dy() * g.dy()));
        let mut d = vec![0.0; g.len()];
        for j in 0..g.ny {
            for i in 0..g.nx {
                let mut s = 0.0;
                for (is_edge, cond, w) in self.neighbours(i, j, ix2, iy2) {
                    s += match (is_edge, cond) {
                        (false, _) | (true, EdgeCondition::Periodic) => w,
                        (true, EdgeCondition::Wall) => 0.0,
                        (true, _) => 2.0 * w,
                    };
                }
                d[g.idx(i, j)] = self.shift + self.coef * s;
            }
        }
        d
    }

    #[inline]
    fn neighbours(
        &self,
        i: usize,
        j: usize,
        ix2: f64,
        iy2: f64,
    ) -> [(bool, EdgeCondition, f64); 4] {
        let g = self.grid;
        [
            (i == 0, self.spec.left, ix2),
            (i == g.nx - 1, self.spec.right, ix2),
            (j == 0, self.spec.bottom, iy2),
            (j == g.ny - 1, self.spec.top, iy2),
        ]
    }

    /// `A u` with homogeneous boundary data.
    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        let g = self.grid;
        let (nx, ny) = (g.nx, g.ny);
        let (ix2, iy2) = (1.0 / (g.dx() * g.dx()), 1.0 / (g.dy() * g.dy()));
        for j in 0..ny {
            for i in 0..nx {
                let k = g.idx(i, j);
                let c = u[k];
                let nb = [
                    (
                        i == 0,
                        self.spec.left,
                        if i > 0 { k - 1 } else { k + nx - 1 },
                        ix2,
                    ),
                    (
                        i == nx - 1,
                        self.spec.right,
                        if i + 1 < nx { k + 1 } else { k + 1 - nx },
                        ix2,
                    ),
                    (
                        j == 0,
                        self.spec.bottom,
                        if j > 0 { k - nx } else { k + nx * (ny - 1) },
                        iy2,
                    ),
                    (
                        j == ny - 1,
                        self.spec.top,
                        if j + 1 < ny {
                            k + nx
                        } else {
                            k - nx * (ny - 1)
                        },
                        iy2,
                    ),
                ];
                let mut lap = 0.0;
                for (is_edge, cond, n, w) in nb {
                    lap += match (is_edge, cond) {
                        (false, _) | (true, EdgeCondition::Periodic) => (u[n] - c) * w,
                        (true, EdgeCondition::Wall) => 0.0,
                        (true, _) => -2.0 * c * w,
                    };
                }
                out[k] = self.shift * c - self.coef * lap;
            }
        }
    }

    /// Contribution of Dirichlet face values, moved to the right-hand side.
    pub fn boundary_rhs(&self) -> Vec<f64> {
        let g = self.grid;
        let (ix2, iy2) = (1.0 / (g.dx() * g.dx()), 1.0 / (g.dy() * g.dy()));
        let mut b = vec![0.0; g.len()];
        for j in 0..g.ny {
            for i in 0..g.nx {
                for (is_edge, cond, w) in self.neighbours(i, j, ix2, iy2) {
                    if is_edge {
                        if let Some(v) = cond.face_value(self.kind) {
                            b[g.idx(i, j)] += self.coef * 2.0 * v * w;
                        }
                    }
                }
            }
        }
        b
    }

    /// Solves `A u = rhs` (with the boundary data of the spec) by Jacobi-
    /// preconditioned CG starting from `guess`.
    pub fn solve(
        &self,
        rhs: &[f64],
        guess: Option<&[f64]>,
        rel_tol: f64,
    ) -> Result<ScalarField, SolverError> {
        let n = self.grid.len();
        if rhs.len() != n {
            return Err(SolverError::MeshMismatch(format!(
                "rhs has {} entries, grid has {n}",
                rhs.len()
            )));
        }
        let mut b = self.boundary_rhs();
        for (bk, r) in b.iter_mut().zip(rhs) {
            *bk += r;
        }
        let b_norm = norm(&b);
        let mut x = guess.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
        if b_norm == 0.0 && guess.is_none() {
            return Ok(ScalarField {
                grid: self.grid,
                values: x,
            });
        }
        let inv_diag: Vec<f64> = self.diagonal().iter().map(|d| 1.0 / d).collect();
        let mut ax = vec![0.0; n];
        self.apply(&x, &mut ax);
        let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let target = rel_tol * b_norm.max(f64::MIN_POSITIVE);
        let max_iter = 20 * n + 100;
        let mut ap = vec![0.0; n];
        for _ in 0..max_iter {
            if norm(&r) <= target {
                return Ok(ScalarField {
                    grid: self.grid,
                    values: x,
                });
            }
            self.apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if pap <= 0.0 {
                return Err(SolverError::SingularSystem);
            }
            let alpha = rz / pap;
            for k in 0..n {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
            for k in 0..n {
                z[k] = r[k] * inv_diag[k];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for k in 0..n {
                p[k] = z[k] + beta * p[k];
            }
        }
        Err(SolverError::NotConverged {
            what: "conjugate gradient",
            iterations: max_iter,
            residual: norm(&r) / b_norm,
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
