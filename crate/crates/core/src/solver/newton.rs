use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::IterateRecord;
use crate::error::Result;
use crate::functional::{self, Hessian, MfeParams};
use crate::linalg::{self, IterOptions};
use crate::operators::{DiscreteOperators, ScalarField};

/// Meshes up to this size use a dense eigendecomposition of the Hessian.
pub(crate) const DENSE_HESSIAN_LIMIT: usize = 1500;

const KERNEL_LIFT: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NewtonOptions {
    /// Target mass norm of the residual.
    pub tol: f64,
    pub max_iter: usize,
    /// Trust radius: steps are scaled so their largest entry is at most this.
    pub max_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-8,
            max_iter: 60,
            max_step: 2.0,
        }
    }
}

pub(crate) struct Direction {
    pub delta: Vec<f64>,
    pub morse_index: Option<usize>,
}

/// Solves `H δ = −g` on mean-zero fields, `g = M r`. With `saddle_free` the
/// dense route divides by `|μ|` instead of `μ`, which always gives a descent
/// direction; the iterative route ignores it.
pub(crate) fn newton_direction(
    ops: &DiscreteOperators,
    u: &ScalarField,
    p: &MfeParams,
    grad: &[f64],
    saddle_free: bool,
) -> Result<Direction> {
    let n = ops.n();
    let h = Hessian::at(ops, u, p);
    let mut delta;
    let mut morse_index = None;
    if n <= DENSE_HESSIAN_LIMIT {
        let s: Vec<f64> = ops.mass().iter().map(|m| 1.0 / m.sqrt()).collect();
        let mut a: DMatrix<f64> = h.to_dense();
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] *= s[i] * s[j];
            }
        }
        let eig = SymmetricEigen::new(a);
        let top = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let cut = 1e-10 * top;
        morse_index = Some(eig.eigenvalues.iter().filter(|&&v| v < -1e-8 * top).count());
        let b: Vec<f64> = grad.iter().zip(&s).map(|(g, s)| -g * s).collect();
        delta = vec![0.0; n];
        for (k, &mu) in eig.eigenvalues.iter().enumerate() {
            if mu.abs() <= cut {
                continue;
            }
            let col = eig.eigenvectors.column(k);
            let c: f64 = col.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() / if saddle_free { mu.abs() } else { mu };
            for i in 0..n {
                delta[i] += c * col[i];
            }
        }
        for i in 0..n {
            delta[i] *= s[i];
        }
    } else {
        // the rank-one term lifts the constants out of the kernel of H; for
        // b ⊥ 1 the solution is the mass-mean-zero Newton step
        let m = ops.mass();
        let b: Vec<f64> = grad.iter().map(|g| -g).collect();
        delta = vec![0.0; n];
        let jac = h.jacobi();
        let apply = |v: &[f64], o: &mut [f64]| {
            h.apply(v, o);
            let c = KERNEL_LIFT * linalg::dot(m, v);
            o.iter_mut().zip(m).for_each(|(o, m)| *o += c * m);
        };
        linalg::minres(
            apply,
            &jac,
            &b,
            &mut delta,
            IterOptions {
                rtol: 1e-10,
                max_iter: 20 * n,
            },
        );
    }
    let mean = linalg::dot(ops.mass(), &delta);
    delta.iter_mut().for_each(|d| *d -= mean);
    Ok(Direction { delta, morse_index })
}

pub(crate) fn cap_step(delta: &mut [f64], max_step: f64) {
    let sup = delta.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    if sup > max_step {
        let s = max_step / sup;
        delta.iter_mut().for_each(|d| *d *= s);
    }
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub u: ScalarField,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub morse_index: Option<usize>,
    pub log: Vec<IterateRecord>,
}

/// Damped Newton iteration on the residual. Steps are capped in the sup norm
/// and backtracked until the residual norm decreases; the Hessian may be
/// indefinite, so this converges to saddles as well as minima.
pub fn newton_solve(
    ops: &DiscreteOperators,
    p: &MfeParams,
    u0: &ScalarField,
    opts: &NewtonOptions,
) -> Result<NewtonOutcome> {
    let mut u = ops.project_mean_zero(u0);
    let mut r = functional::residual(ops, &u, p);
    let mut norm = ops.mass_norm(&r);
    let mut log = vec![IterateRecord {
        iteration: 0,
        energy: functional::energy(ops, &u, p),
        residual_norm: norm,
    }];
    let mut morse_index = None;
    let mut it = 0;
    while norm >= opts.tol && it < opts.max_iter {
        it += 1;
        let grad: Vec<f64> = r.values.iter().zip(ops.mass()).map(|(a, m)| a * m).collect();
        let dir = newton_direction(ops, &u, p, &grad, false)?;
        morse_index = dir.morse_index;
        let mut delta = dir.delta;
        cap_step(&mut delta, opts.max_step);
        let step = ops.field(delta);
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial = u.add_scaled(alpha, &step);
            let tr = functional::residual(ops, &trial, p);
            let tn = ops.mass_norm(&tr);
            if tn.is_finite() && tn <= (1.0 - 1e-4 * alpha) * norm {
                accepted = Some((trial, tr, tn));
                break;
            }
            alpha *= 0.5;
        }
        let Some((nu, nr, nn)) = accepted else {
            break;
        };
        u = nu;
        r = nr;
        norm = nn;
        log.push(IterateRecord {
            iteration: it,
            energy: functional::energy(ops, &u, p),
            residual_norm: norm,
        });
    }
    if norm < opts.tol && morse_index.is_some() && ops.n() <= DENSE_HESSIAN_LIMIT {
        let grad = vec![0.0; ops.n()];
        morse_index = newton_direction(ops, &u, p, &grad, false)?.morse_index;
    }
    Ok(NewtonOutcome {
        converged: norm < opts.tol,
        u,
        residual_norm: norm,
        iterations: it,
        morse_index,
        log,
    })
}
