//! Dense primal-dual interior-point solver for small semidefinite programs
//!
//! ```text
//!   maximize ⟨C, X⟩  subject to  ⟨A_k, X⟩ = b_k,  X ⪰ 0
//! ```
//!
//! Internally the problem is solved in minimization form with the HKM
//! search direction and Mehrotra predictor-corrector steps, starting from
//! the (infeasible) point X = Z = I, y = 0.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

fn lit<T: Real>(v: f64) -> T {
    T::from_f64(v).unwrap()
}

/// Sparse symmetric matrix: an entry `(i, j, v)` with `i ≠ j` sets both
/// `A[i][j]` and `A[j][i]` to `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSym<T> {
    pub entries: Vec<(usize, usize, T)>,
}

impl<T: Real> SparseSym<T> {
    pub fn new(entries: Vec<(usize, usize, T)>) -> Self {
        SparseSym { entries }
    }

    /// Matrix whose inner product with X is `X[i][j]`.
    pub fn selector(i: usize, j: usize) -> Self {
        if i == j {
            SparseSym::new(vec![(i, i, T::one())])
        } else {
            SparseSym::new(vec![(i, j, lit(0.5))])
        }
    }

    /// ⟨A, G⟩ for a (not necessarily symmetric) dense G.
    pub fn inner(&self, g: &Matrix<T>) -> T {
        self.entries.iter().fold(T::zero(), |acc, &(i, j, v)| {
            if i == j {
                acc + v * g[(i, i)]
            } else {
                acc + v * (g[(i, j)] + g[(j, i)])
            }
        })
    }

    /// `out += s·A`.
    pub fn add_to(&self, out: &mut Matrix<T>, s: T) {
        for &(i, j, v) in &self.entries {
            out[(i, j)] = out[(i, j)] + s * v;
            if i != j {
                out[(j, i)] = out[(j, i)] + s * v;
            }
        }
    }

    pub fn to_dense(&self, n: usize) -> Matrix<T> {
        let mut m = Matrix::zeros(n, n);
        self.add_to(&mut m, T::one());
        m
    }
}

#[derive(Debug, Clone)]
pub struct SdpProblem<T> {
    pub dim: usize,
    /// Symmetric objective matrix C (maximized).
    pub objective: Matrix<T>,
    pub constraints: Vec<SparseSym<T>>,
    pub rhs: Vec<T>,
}

#[derive(Debug, Clone, Copy)]
pub struct SdpOptions {
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for SdpOptions {
    fn default() -> Self {
        SdpOptions {
            max_iters: 200,
            tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SdpSolution<T> {
    /// Dual objective: an upper bound on the maximum.
    pub value: T,
    /// ⟨C, X⟩ at the returned primal point.
    pub primal_value: T,
    pub primal: Matrix<T>,
    /// Dual multipliers, one per constraint.
    pub dual: Vec<T>,
    /// Dual slack Z = Σ y_k A_k − C (minimization sign convention flipped back).
    pub dual_slack: Matrix<T>,
    /// `value − primal_value`.
    pub gap: T,
    pub primal_infeasibility: T,
    pub dual_infeasibility: T,
    pub iterations: usize,
}

struct Residuals<T> {
    rp: Vec<T>,
    rd: Matrix<T>,
    pobj: T,
    dobj: T,
}

fn residuals<T: Real>(p: &SdpProblem<T>, c_min: &Matrix<T>, x: &Matrix<T>, y: &[T], z: &Matrix<T>) -> Residuals<T> {
    let rp = p.constraints.iter().zip(&p.rhs).map(|(a, &b)| b - a.inner(x)).collect();
    let mut rd = c_min - z;
    for (a, &yk) in p.constraints.iter().zip(y) {
        a.add_to(&mut rd, -yk);
    }
    let pobj = c_min.inner(x);
    let dobj = p.rhs.iter().zip(y).fold(T::zero(), |acc, (&b, &yk)| acc + b * yk);
    Residuals { rp, rd, pobj, dobj }
}

/// Largest step in [0, 1] (times 0.98 when blocked) keeping `x + α·dx ⪰ 0`.
fn max_step<T: Real>(x: &Matrix<T>, dx: &Matrix<T>) -> T {
    let l = match x.cholesky() {
        Some(l) => l,
        None => return T::zero(),
    };
    let li = l.lower_inverse();
    let w = &(&li * dx) * &li.transpose();
    let lmin = w.min_eigenvalue();
    if lmin >= T::zero() {
        T::one()
    } else {
        (lit::<T>(0.98) * (-T::one() / lmin)).min(T::one())
    }
}

fn norm<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, &a| acc + a * a).sqrt()
}

/// Solves the SDP; fails with [`Error::SolverFailed`] if the tolerance is
/// not reached within `max_iters`.
pub fn solve<T: Real>(p: &SdpProblem<T>, opts: &SdpOptions) -> Result<SdpSolution<T>> {
    let n = p.dim;
    let m = p.constraints.len();
    let tol = lit::<T>(opts.tol);
    let c_min = p.objective.symmetrized().scale(-T::one());
    let b_norm = norm(&p.rhs);
    let c_norm = c_min.norm_fro();
    let nn = T::from_usize(n).unwrap();

    let mut x = Matrix::identity(n);
    let mut z = Matrix::identity(n);
    let mut y = vec![T::zero(); m];
    let mut best_bound = T::infinity();

    for iter in 0..=opts.max_iters {
        let r = residuals(p, &c_min, &x, &y, &z);
        let rel_gap = (r.pobj - r.dobj).abs() / (T::one() + r.pobj.abs() + r.dobj.abs());
        let pinf = norm(&r.rp) / (T::one() + b_norm);
        let dinf = r.rd.norm_fro() / (T::one() + c_norm);
        if dinf <= tol {
            best_bound = best_bound.min(-r.dobj);
        }
        // the reported gap is absolute, so stop on it
        if (r.pobj - r.dobj).abs() <= tol && pinf <= tol && dinf <= tol {
            let value = -r.dobj;
            let primal_value = -r.pobj;
            return Ok(SdpSolution {
                value,
                primal_value,
                primal: x,
                dual: y,
                dual_slack: z,
                gap: value - primal_value,
                primal_infeasibility: pinf,
                dual_infeasibility: dinf,
                iterations: iter,
            });
        }
        if iter == opts.max_iters {
            return Err(Error::SolverFailed {
                iterations: iter,
                best_bound: best_bound.as_f64(),
                gap: rel_gap.as_f64(),
            });
        }

        let mu = x.inner(&z) / nn;
        let z_inv = z.inverse_spd().ok_or(Error::SolverFailed {
            iterations: iter,
            best_bound: best_bound.as_f64(),
            gap: rel_gap.as_f64(),
        })?;

        // Schur complement M_ij = ⟨A_i, X A_j Z⁻¹⟩.
        let dense: Vec<Matrix<T>> = p.constraints.iter().map(|a| a.to_dense(n)).collect();
        let xa_zi: Vec<Matrix<T>> = dense.iter().map(|a| &(&x * a) * &z_inv).collect();
        let mut schur = Matrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                schur[(i, j)] = p.constraints[i].inner(&xa_zi[j]);
            }
        }
        let schur = schur.symmetrized();
        let chol = match schur.cholesky() {
            Some(l) => l,
            None => {
                let reg = lit::<T>(1e-14) * schur.max_abs().max(T::one());
                let shifted = &schur + &Matrix::identity(m).scale(reg);
                shifted.cholesky().ok_or(Error::SolverFailed {
                    iterations: iter,
                    best_bound: best_bound.as_f64(),
                    gap: rel_gap.as_f64(),
                })?
            }
        };
        let x_rd_zi = &(&x * &r.rd) * &z_inv;

        let direction = |rc: &Matrix<T>| -> (Matrix<T>, Vec<T>, Matrix<T>) {
            let rc_zi = rc * &z_inv;
            let rhs: Vec<T> = (0..m)
                .map(|i| r.rp[i] - p.constraints[i].inner(&rc_zi) + p.constraints[i].inner(&x_rd_zi))
                .collect();
            let dy = Matrix::cholesky_solve(&chol, &rhs);
            let mut dz = r.rd.clone();
            for (a, &d) in p.constraints.iter().zip(&dy) {
                a.add_to(&mut dz, -d);
            }
            let dx = (&(rc - &(&x * &dz)) * &z_inv).symmetrized();
            (dx, dy, dz)
        };

        // predictor
        let xz = &x * &z;
        let (dxa, _, dza) = direction(&xz.scale(-T::one()));
        let ap = max_step(&x, &dxa);
        let ad = max_step(&z, &dza);
        let mu_aff = x.add_scaled(&dxa, ap).inner(&z.add_scaled(&dza, ad)) / nn;
        let sigma = (mu_aff / mu).powi(3).min(T::one());

        // corrector
        let rc = &(&Matrix::identity(n).scale(sigma * mu) - &xz) - &(&dxa * &dza);
        let (dx, dy, dz) = direction(&rc);
        let ap = max_step(&x, &dx);
        let ad = max_step(&z, &dz);
        x = x.add_scaled(&dx, ap).symmetrized();
        z = z.add_scaled(&dz, ad).symmetrized();
        for (yk, d) in y.iter_mut().zip(&dy) {
            *yk = *yk + ad * *d;
        }
    }
    unreachable!("loop returns on the last iteration")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_eigenvalue_as_sdp() {
        // max ⟨C, X⟩ s.t. tr X = 1 is λ_max(C).
        let c: Matrix<f64> = Matrix::from_rows(&[vec![2.0, 1.0, 0.0], vec![1.0, 2.0, 0.5], vec![0.0, 0.5, -1.0]]);
        let lmax = c.symmetric_eigen().0[0];
        let p = SdpProblem {
            dim: 3,
            objective: c,
            constraints: vec![SparseSym::new(vec![(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)])],
            rhs: vec![1.0],
        };
        let s = solve(&p, &SdpOptions::default()).unwrap();
        assert!((s.value - lmax).abs() < 1e-6, "{} vs {}", s.value, lmax);
        assert!(s.primal.min_eigenvalue() > -1e-8);
        assert!(s.gap.abs() < 1e-6);
    }

    #[test]
    fn fixed_entry_objective() {
        // maximize X_00 subject to X_00 = 1.
        let mut c: Matrix<f64> = Matrix::zeros(2, 2);
        c[(0, 0)] = 1.0;
        let p = SdpProblem {
            dim: 2,
            objective: c,
            constraints: vec![SparseSym::selector(0, 0)],
            rhs: vec![1.0],
        };
        let s = solve(&p, &SdpOptions::default()).unwrap();
        assert!((s.value - 1.0).abs() < 1e-7);
    }

    #[test]
    fn correlation_bound() {
        // max X_01 over correlation matrices is 1.
        let mut c: Matrix<f64> = Matrix::zeros(2, 2);
        c[(0, 1)] = 0.5;
        c[(1, 0)] = 0.5;
        let p = SdpProblem {
            dim: 2,
            objective: c,
            constraints: vec![SparseSym::selector(0, 0), SparseSym::selector(1, 1)],
            rhs: vec![1.0, 1.0],
        };
        let s = solve(&p, &SdpOptions::default()).unwrap();
        assert!((s.value - 1.0).abs() < 1e-6);
    }

    #[test]
    fn reports_failure_when_iterations_exhausted() {
        let c = Matrix::from_rows(&[vec![1.0, 0.3], vec![0.3, 0.0]]);
        let p = SdpProblem {
            dim: 2,
            objective: c,
            constraints: vec![SparseSym::new(vec![(0, 0, 1.0), (1, 1, 1.0)])],
            rhs: vec![1.0],
        };
        let err = solve(
            &p,
            &SdpOptions {
                max_iters: 1,
                tol: 1e-12,
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::SolverFailed { .. }));
    }
}
