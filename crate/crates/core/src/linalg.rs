//! Sparse storage and iterative solvers used by the discrete operators.

use crate::par;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds an `n x n` matrix from triplets, summing duplicates in insertion order.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            rows[i].push((j, v));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in rows.iter_mut() {
            // stable sort keeps summation order fixed for equal columns
            row.sort_by_key(|&(j, _)| j);
            let mut last: Option<usize> = None;
            for &(j, v) in row.iter() {
                if last == Some(j) {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(j);
                    values.push(v);
                    last = Some(j);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[a..b]
            .iter()
            .copied()
            .zip(self.values[a..b].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        par::fill_indexed(y, |i| self.row(i).map(|(j, v)| v * x[j]).sum());
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    /// `xᵀ A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        (0..self.n)
            .map(|i| x[i] * self.row(i).map(|(j, v)| v * x[j]).sum::<f64>())
            .sum()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| self.get(j, i) == v))
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IterOptions {
    pub rtol: f64,
    pub max_iter: usize,
}

impl Default for IterOptions {
    fn default() -> Self {
        IterOptions {
            rtol: 1e-10,
            max_iter: 20_000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IterOutcome {
    pub iterations: usize,
    /// `‖b − A x‖ / ‖b‖` (Euclidean) at exit.
    pub rel_residual: f64,
    pub converged: bool,
}

/// Jacobi-preconditioned conjugate gradients for symmetric positive
/// (semi-)definite operators. For singular operators the right-hand side must
/// lie in the range; the solution is then determined up to the kernel.
pub fn pcg<A>(apply: A, inv_diag: &[f64], b: &[f64], x: &mut [f64], opts: IterOptions) -> IterOutcome
where
    A: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return IterOutcome {
            iterations: 0,
            rel_residual: 0.0,
            converged: true,
        };
    }
    let mut r = vec![0.0; n];
    apply(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z: Vec<f64> = r.iter().zip(inv_diag).map(|(a, d)| a * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut rel = norm2(&r) / bnorm;
    let mut it = 0;
    while rel > opts.rtol && it < opts.max_iter {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        axpy(alpha, &p, x);
        axpy(-alpha, &ap, &mut r);
        it += 1;
        // periodic true residual keeps the recurrence honest at tight tolerances
        if it % 50 == 0 {
            apply(x, &mut r);
            for i in 0..n {
                r[i] = b[i] - r[i];
            }
        }
        rel = norm2(&r) / bnorm;
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    apply(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    rel = norm2(&r) / bnorm;
    IterOutcome {
        iterations: it,
        rel_residual: rel,
        converged: rel <= opts.rtol,
    }
}

/// Preconditioned MINRES for symmetric (possibly indefinite) operators.
/// `inv_diag` must be positive.
pub fn minres<A>(apply: A, inv_diag: &[f64], b: &[f64], x: &mut [f64], opts: IterOptions) -> IterOutcome
where
    A: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return IterOutcome {
            iterations: 0,
            rel_residual: 0.0,
            converged: true,
        };
    }
    let mut r1 = vec![0.0; n];
    apply(x, &mut r1);
    for i in 0..n {
        r1[i] = b[i] - r1[i];
    }
    let mut y: Vec<f64> = r1.iter().zip(inv_diag).map(|(a, d)| a * d).collect();
    let beta1 = dot(&r1, &y).sqrt();
    let mut r2 = r1.clone();
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln, mut phibar) = (0.0, 0.0, beta1);
    let (mut cs, mut sn) = (-1.0f64, 0.0f64);
    let mut w = vec![0.0; n];
    let mut w1 = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut it = 0;
    while it < opts.max_iter && beta1 > 0.0 {
        it += 1;
        let s = 1.0 / beta;
        for i in 0..n {
            v[i] = s * y[i];
        }
        apply(&v, &mut y);
        if it >= 2 {
            axpy(-beta / oldb, &r1, &mut y);
        }
        let alfa = dot(&v, &y);
        axpy(-alfa / beta, &r2, &mut y);
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        for i in 0..n {
            y[i] = r2[i] * inv_diag[i];
        }
        oldb = beta;
        beta = dot(&r2, &y).max(0.0).sqrt();
        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;
        std::mem::swap(&mut w1, &mut w2);
        std::mem::swap(&mut w2, &mut w);
        for i in 0..n {
            w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) / gamma;
        }
        axpy(phi, &w, x);
        if phibar <= opts.rtol * beta1 || beta == 0.0 {
            break;
        }
    }
    let mut r = vec![0.0; n];
    apply(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let rel = norm2(&r) / bnorm;
    IterOutcome {
        iterations: it,
        rel_residual: rel,
        converged: rel <= opts.rtol.max(1e-14) * 10.0,
    }
}
