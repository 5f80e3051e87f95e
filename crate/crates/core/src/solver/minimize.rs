use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::newton::{cap_step, newton_direction, DENSE_HESSIAN_LIMIT};
use super::{IterateRecord, SolveReport};
use crate::error::Result;
use crate::functional::{self, MfeParams};
use crate::linalg;
use crate::operators::{DiscreteOperators, ScalarField, ShiftedSolver};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DescentOptions {
    /// Target mass norm of the residual.
    pub tol: f64,
    pub max_iter: usize,
    pub newton_polish: bool,
    /// Residual norm below which Newton steps are tried.
    pub polish_below: f64,
    pub max_step: f64,
}

impl Default for DescentOptions {
    fn default() -> Self {
        DescentOptions {
            tol: 1e-8,
            max_iter: 5000,
            newton_polish: true,
            polish_below: 1e-2,
            max_step: 2.0,
        }
    }
}

const ARMIJO: f64 = 1e-4;
/// Below `polish_below`, stop when the residual has not halved over this many
/// iterations.
const STALL_WINDOW: usize = 50;

/// Gradient descent in the `H¹` metric with an Armijo line search on the
/// energy, finished by Newton steps that are accepted only when they lower
/// the energy. Every accepted iterate has strictly smaller energy.
pub fn minimize(
    ops: &DiscreteOperators,
    p: &MfeParams,
    u0: &ScalarField,
    opts: &DescentOptions,
) -> Result<SolveReport> {
    p.validate()?;
    ops.check(u0);
    let mut warnings = Vec::new();
    if p.rho1 >= 8.0 * PI || p.rho2 >= 8.0 * PI {
        warnings.push("minimization outside ρ₁, ρ₂ < 8π: the functional may be unbounded below".to_string());
    }
    let precond = ShiftedSolver::new(ops, 1.0)?;
    let mut u = ops.project_mean_zero(u0);
    let mut e = functional::energy(ops, &u, p);
    let mut r = functional::residual(ops, &u, p);
    let mut norm = ops.mass_norm(&r);
    let mut log = vec![IterateRecord {
        iteration: 0,
        energy: e,
        residual_norm: norm,
    }];
    let mut alpha: f64 = 1.0;
    let mut morse_index = None;
    let mut it = 0;
    while norm >= opts.tol && it < opts.max_iter {
        it += 1;
        let grad: Vec<f64> = r.values.iter().zip(ops.mass()).map(|(a, m)| a * m).collect();
        let mut next = None;
        if opts.newton_polish && norm < opts.polish_below {
            let dir = newton_direction(ops, &u, p, &grad, true)?;
            morse_index = dir.morse_index;
            let mut delta = dir.delta;
            cap_step(&mut delta, opts.max_step);
            let slope = linalg::dot(&grad, &delta);
            if slope < 0.0 {
                next = armijo(ops, p, &u, e, &ops.field(delta), slope, 1.0);
            }
        }
        if next.is_none() {
            let mut d = precond.solve(&grad)?;
            d.iter_mut().for_each(|x| *x = -*x);
            cap_step(&mut d, opts.max_step);
            let slope = linalg::dot(&grad, &d);
            alpha = (2.0 * alpha).min(1.0);
            next = armijo(ops, p, &u, e, &ops.field(d), slope, alpha);
            if let Some((_, _, a)) = &next {
                alpha = *a;
            }
        }
        let Some((nu, ne, _)) = next else {
            warnings.push(format!("line search stalled at residual {norm:.3e}"));
            break;
        };
        u = nu;
        e = ne;
        r = functional::residual(ops, &u, p);
        norm = ops.mass_norm(&r);
        log.push(IterateRecord {
            iteration: it,
            energy: e,
            residual_norm: norm,
        });
        if it >= STALL_WINDOW && norm > 0.5 * log[it - STALL_WINDOW].residual_norm && norm < opts.polish_below {
            warnings.push(format!("residual stalled at {norm:.3e} over {STALL_WINDOW} iterations"));
            break;
        }
    }
    let converged = norm < opts.tol;
    if !converged && it >= opts.max_iter {
        warnings.push(format!("iteration cap {} reached", opts.max_iter));
    }
    let mut report = SolveReport::build(ops, p, &u, opts.tol, it, converged, "minimize", log);
    if converged && opts.newton_polish && ops.n() <= DENSE_HESSIAN_LIMIT {
        morse_index = newton_direction(ops, &u, p, &vec![0.0; ops.n()], false)?.morse_index;
    }
    report.morse_index = morse_index;
    report.warnings = warnings;
    Ok(report)
}

/// Backtracking from `alpha` until `E(u + a d) ≤ E(u) + c a ⟨g, d⟩`. The
/// returned energy is `E(u)` plus the accurately computed change.
fn armijo(
    ops: &DiscreteOperators,
    p: &MfeParams,
    u: &ScalarField,
    e: f64,
    d: &ScalarField,
    slope: f64,
    mut alpha: f64,
) -> Option<(ScalarField, f64, f64)> {
    if !(slope < 0.0) {
        return None;
    }
    while alpha > 1e-14 {
        let step = d.scaled(alpha);
        let change = functional::energy_change(ops, u, &step, p);
        if change <= ARMIJO * alpha * slope && change < 0.0 {
            return Some((u.add_scaled(1.0, &step), e + change, alpha));
        }
        alpha *= 0.5;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::SurfaceMesh;

    #[test]
    fn pure_dirichlet_flows_to_constant() {
        let mesh = SurfaceMesh::unit_sphere(2).unwrap();
        let ops = DiscreteOperators::assemble(&mesh).unwrap();
        let u0 = ops.field((0..ops.n()).map(|i| (i as f64 * 0.3).sin()).collect());
        let rep = minimize(&ops, &MfeParams::new(0.0, 0.0), &u0, &DescentOptions::default()).unwrap();
        assert!(rep.converged);
        assert!(rep.trivial_flag);
        assert!(rep.energy.abs() < 1e-12);
        assert!(rep.residual_norm < 1e-8);
    }

    #[test]
    fn energy_log_is_monotone() {
        let mesh = SurfaceMesh::flat_torus(12, 12, 1.0).unwrap();
        let ops = DiscreteOperators::assemble(&mesh).unwrap();
        let u0 = ops.field((0..ops.n()).map(|i| 2.0 * (i as f64 * 0.11).cos()).collect());
        let rep = minimize(&ops, &MfeParams::new(15.0, 6.0), &u0, &DescentOptions::default()).unwrap();
        assert!(rep.converged, "{:?}", rep.warnings);
        for w in rep.log.windows(2) {
            assert!(w[1].energy <= w[0].energy);
        }
        let recomputed = functional::residual_norm(&ops, &rep.u, &rep.params);
        assert_eq!(recomputed, rep.residual_norm);
    }

    #[test]
    fn zero_start_does_not_move() {
        let mesh = SurfaceMesh::flat_torus(8, 8, 1.0).unwrap();
        let ops = DiscreteOperators::assemble(&mesh).unwrap();
        let rep = minimize(
            &ops,
            &MfeParams::new(40.0, 40.0),
            &ops.zeros(),
            &DescentOptions::default(),
        )
        .unwrap();
        assert_eq!(rep.iterations, 0);
        assert!(rep.u.values.iter().all(|&v| v == 0.0));
        assert!(!rep.warnings.is_empty());
    }
}
