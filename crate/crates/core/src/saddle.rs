//! Direct solution of the velocity–pressure block system
//!
//! ```text
//! [ K     −c Bᵀ   0 ] [u]   [f]
//! [ −c B   0      m ] [p] = [−c g]
//! [ 0      mᵀ     0 ] [λ]   [0]
//! ```
//!
//! Dirichlet velocity dofs are eliminated (identity rows, zero columns) and the
//! appended multiplier `λ` pins the mean of the pressure to zero.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::error::{Error, Result};
use crate::fem::{CsrMatrix, MixedSpace, TripletBuilder};

pub const DEFAULT_LINEAR_TOL: f64 = 1e-12;

const MAX_REFINEMENT_STEPS: usize = 3;
/// Reciprocal condition estimates below this are treated as singular.
const SINGULAR_RCOND: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct SaddleSystem<'a> {
    /// Velocity block over all velocity dofs; Dirichlet rows/columns are ignored.
    pub velocity_block: CsrMatrix,
    /// Divergence operator `B` (pressure × velocity).
    pub coupling: &'a CsrMatrix,
    pub coupling_scale: f64,
    /// Mean-value row; `None` leaves the constant pressure mode free.
    pub mean: Option<&'a [f64]>,
    pub space: &'a MixedSpace,
    pub rhs_momentum: Vec<f64>,
    /// Target divergence `B u = g`.
    pub rhs_continuity: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaddleSolution {
    pub velocity: Vec<f64>,
    pub pressure: Vec<f64>,
    /// `‖b − A x‖ / ‖b‖` of the full block system.
    pub relative_residual: f64,
}

impl SaddleSystem<'_> {
    fn dims(&self) -> (usize, usize, usize) {
        let nv = self.space.velocity_dofs();
        let np = self.space.pressure_dofs();
        (nv, np, nv + np + usize::from(self.mean.is_some()))
    }

    fn validate(&self) -> Result<()> {
        let (nv, np, _) = self.dims();
        let ok = self.velocity_block.nrows() == nv
            && self.velocity_block.ncols() == nv
            && self.coupling.nrows() == np
            && self.coupling.ncols() == nv
            && self.rhs_momentum.len() == nv
            && self.rhs_continuity.len() == np
            && self.mean.is_none_or(|m| m.len() == np);
        if ok {
            Ok(())
        } else {
            Err(Error::Domain("inconsistent saddle-system dimensions".into()))
        }
    }

    /// The assembled block matrix and right-hand side.
    pub fn assemble(&self) -> Result<(CsrMatrix, Vec<f64>)> {
        self.validate()?;
        let (nv, np, n) = self.dims();
        let c = self.coupling_scale;
        let space = self.space;
        let mut t = TripletBuilder::with_capacity(n, n, self.velocity_block.nnz() + 2 * self.coupling.nnz() + 2 * np);
        for i in 0..nv {
            if space.is_dirichlet(i) {
                t.push(i, i, 1.0);
                continue;
            }
            for (j, v) in self.velocity_block.row(i) {
                if !space.is_dirichlet(j) {
                    t.push(i, j, v);
                }
            }
        }
        for (q, j, v) in self.coupling.triplets() {
            if !space.is_dirichlet(j) {
                t.push(j, nv + q, -c * v);
                t.push(nv + q, j, -c * v);
            }
        }
        if let Some(m) = self.mean {
            let lam = nv + np;
            for (q, &mq) in m.iter().enumerate() {
                t.push(nv + q, lam, mq);
                t.push(lam, nv + q, mq);
            }
        }
        let mut rhs = Vec::with_capacity(n);
        rhs.extend(
            self.rhs_momentum
                .iter()
                .enumerate()
                .map(|(i, &f)| if space.is_dirichlet(i) { 0.0 } else { f }),
        );
        rhs.extend(self.rhs_continuity.iter().map(|&g| -c * g));
        rhs.resize(n, 0.0);
        Ok((t.build(), rhs))
    }
}

pub fn solve(system: &SaddleSystem<'_>, tol: f64) -> Result<SaddleSolution> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("linear tolerance must be positive, got {tol}")));
    }
    let (nv, np, _) = system.dims();
    let (matrix, rhs) = system.assemble()?;
    let (x, relative_residual) = solve_sparse(&matrix, &rhs, tol)?;
    Ok(SaddleSolution {
        velocity: x[..nv].to_vec(),
        pressure: x[nv..nv + np].to_vec(),
        relative_residual,
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// LU factorisation of a square sparse matrix with partial pivoting.
pub struct SparseLu {
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
    n: usize,
}

impl SparseLu {
    pub fn factor(matrix: &CsrMatrix) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(Error::Domain("LU needs a square matrix".into()));
        }
        let triplets: Vec<Triplet<usize, usize, f64>> = matrix
            .triplets()
            .map(|(i, j, v)| Triplet::new(i, j, v))
            .collect();
        let csc = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| Error::Domain(format!("sparse matrix construction failed: {e:?}")))?;
        let lu = csc
            .sp_lu()
            .map_err(|e| Error::Singular(format!("LU factorisation failed: {e}")))?;
        Ok(Self { lu, n })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut m = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        self.lu.solve_in_place(&mut m);
        m.col_as_slice(0).to_vec()
    }

    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let mut m = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        self.lu.solve_transpose_in_place(&mut m);
        m.col_as_slice(0).to_vec()
    }

    /// Hager–Higham estimate of `‖A⁻¹‖₁`.
    pub fn inverse_norm1_estimate(&self) -> f64 {
        let n = self.n;
        let mut x = vec![1.0 / n as f64; n];
        let mut estimate = 0.0;
        for _ in 0..5 {
            let y = self.solve(&x);
            estimate = y.iter().map(|v| v.abs()).sum::<f64>();
            if !estimate.is_finite() {
                return f64::INFINITY;
            }
            let sign: Vec<f64> = y.iter().map(|&v| if v >= 0.0 { 1.0 } else { -1.0 }).collect();
            let z = self.solve_transpose(&sign);
            let (jmax, zmax) = z
                .iter()
                .enumerate()
                .fold((0, 0.0f64), |acc, (j, &v)| if v.abs() > acc.1 { (j, v.abs()) } else { acc });
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
            if zmax <= ztx {
                break;
            }
            x = vec![0.0; n];
            x[jmax] = 1.0;
        }
        estimate
    }
}

fn norm1(matrix: &CsrMatrix) -> f64 {
    let mut col = vec![0.0; matrix.ncols()];
    for (_, j, v) in matrix.triplets() {
        col[j] += v.abs();
    }
    col.into_iter().fold(0.0, f64::max)
}

/// Solves `A x = b` by sparse LU with iterative refinement. Returns the
/// solution and its relative residual.
pub fn solve_sparse(matrix: &CsrMatrix, rhs: &[f64], tol: f64) -> Result<(Vec<f64>, f64)> {
    let n = matrix.nrows();
    if rhs.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: rhs.len(),
        });
    }
    let lu = SparseLu::factor(matrix)?;
    let rcond = 1.0 / (norm1(matrix) * lu.inverse_norm1_estimate());
    if !(rcond >= SINGULAR_RCOND) {
        return Err(Error::Singular(format!(
            "reciprocal condition estimate {rcond:e} below {SINGULAR_RCOND:e}"
        )));
    }
    let bnorm = norm(rhs);
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], 0.0));
    }
    let mut x = lu.solve(rhs);
    let mut rel = f64::INFINITY;
    for step in 0..=MAX_REFINEMENT_STEPS {
        let ax = matrix.matvec(&x);
        let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        rel = norm(&r) / bnorm;
        if !rel.is_finite() {
            return Err(Error::Singular("non-finite solution".into()));
        }
        if rel <= 0.01 * tol || step == MAX_REFINEMENT_STEPS {
            break;
        }
        let dx = lu.solve(&r);
        x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);
    }
    if rel > tol {
        return Err(Error::LinearNonConvergence { achieved: rel, tol });
    }
    Ok((x, rel))
}
