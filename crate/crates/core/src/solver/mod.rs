//! Critical points of `II_ρ`: minimization, barycenter-seeded min-max with
//! continuation in `t`, and blow-up classification of solution families.

mod concentration;
mod minimize;
mod minmax;
mod newton;

use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

pub use concentration::{
    aitken, classify_concentration, Alternative, ConcentrationOptions, ConcentrationReport, FamilyMember, Masses,
    OneSidedRow, QuantizationRow, SplitRow,
};
pub use minimize::{minimize, DescentOptions};
pub use minmax::{
    calibrate, cone_point, continue_in_t, minmax_solve, sample_sigmas, Calibration, ContinuationReport, MinMaxConfig,
    MinMaxDiagnostics, StringOptions,
};
pub use newton::{newton_solve, NewtonOptions, NewtonOutcome};

use crate::functional::{self, MfeParams};
use crate::operators::{DiscreteOperators, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Subcritical,
    Supercritical,
    Boundary,
}

/// Position of `(ρ₁, ρ₂)` relative to the critical values `8kπ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RegimeInfo {
    pub regime: Regime,
    /// `k` with `ρ₁ ∈ (8kπ, 8(k+1)π)` and `ρ₂ < 4π`, when it exists.
    pub minmax_k: Option<usize>,
    /// Same with the roles of `ρ₁` and `ρ₂` exchanged (solve for `−u`).
    pub minmax_k_swapped: Option<usize>,
    pub rho2_below_4pi: bool,
    pub rho2_below_8pi: bool,
}

fn critical_multiple(rho: f64) -> Option<usize> {
    let q = rho / (8.0 * PI);
    let k = q.round();
    (k >= 1.0 && (q - k).abs() <= 1e-12 * q.max(1.0)).then_some(k as usize)
}

fn strip(rho: f64, other: f64) -> Option<usize> {
    if critical_multiple(rho).is_some() || other >= 4.0 * PI {
        return None;
    }
    let k = (rho / (8.0 * PI)).floor();
    (k >= 1.0).then_some(k as usize)
}

pub fn classify_regime(rho1: f64, rho2: f64) -> RegimeInfo {
    let regime = if critical_multiple(rho1).is_some() || critical_multiple(rho2).is_some() {
        Regime::Boundary
    } else if rho1 < 8.0 * PI && rho2 < 8.0 * PI {
        Regime::Subcritical
    } else {
        Regime::Supercritical
    };
    RegimeInfo {
        regime,
        minmax_k: strip(rho1, rho2),
        minmax_k_swapped: strip(rho2, rho1),
        rho2_below_4pi: rho2 < 4.0 * PI,
        rho2_below_8pi: rho2 < 8.0 * PI,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterateRecord {
    pub iteration: usize,
    pub energy: f64,
    pub residual_norm: f64,
}

/// Writes an iterate log as CSV.
pub fn write_iterate_csv(log: &[IterateRecord], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "iteration,energy,residual_norm")?;
    for r in log {
        writeln!(out, "{},{:e},{:e}", r.iteration, r.energy, r.residual_norm)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    /// Solution normalized so that `∫e^u = 1`.
    pub u: ScalarField,
    pub energy: f64,
    pub residual_norm: f64,
    pub tolerance: f64,
    pub iterations: usize,
    pub converged: bool,
    pub params: MfeParams,
    pub regime: Regime,
    pub k: Option<usize>,
    pub method: String,
    pub minmax_level: Option<f64>,
    pub minmax: Option<MinMaxDiagnostics>,
    /// `u` is within `1e-6` of a constant.
    pub trivial_flag: bool,
    /// Negative eigenvalues of the Hessian at `u`, when a dense solve ran.
    pub morse_index: Option<usize>,
    pub rho2_below_4pi: bool,
    pub rho2_below_8pi: bool,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub log: Vec<IterateRecord>,
}

impl SolveReport {
    /// Assembles a report around `u`, normalizing it and recomputing the
    /// energy and residual from the normalized field.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn build(
        ops: &DiscreteOperators,
        p: &MfeParams,
        u: &ScalarField,
        tolerance: f64,
        iterations: usize,
        converged: bool,
        method: &str,
        log: Vec<IterateRecord>,
    ) -> Self {
        let u = functional::normalize_exp(ops, u);
        let info = classify_regime(p.rho1, p.rho2);
        SolveReport {
            energy: functional::energy(ops, &u, p),
            residual_norm: functional::residual_norm(ops, &u, p),
            trivial_flag: u.max() - u.min() <= 1e-6,
            u,
            tolerance,
            iterations,
            converged,
            params: *p,
            regime: info.regime,
            k: None,
            method: method.to_string(),
            minmax_level: None,
            minmax: None,
            morse_index: None,
            rho2_below_4pi: info.rho2_below_4pi,
            rho2_below_8pi: info.rho2_below_8pi,
            warnings: Vec::new(),
            log,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regime_arithmetic() {
        let r = classify_regime(0.0, 0.0);
        assert_eq!(r.regime, Regime::Subcritical);
        assert_eq!(r.minmax_k, None);
        let r = classify_regime(10.0 * PI, 0.0);
        assert_eq!(r.regime, Regime::Supercritical);
        assert_eq!(r.minmax_k, Some(1));
        assert_eq!(classify_regime(8.0 * PI, 8.0 * PI).regime, Regime::Boundary);
        assert_eq!(classify_regime(16.0 * PI, 1.0).regime, Regime::Boundary);
        assert_eq!(classify_regime(20.0 * PI, 1.0).minmax_k, Some(2));
        let r = classify_regime(10.0 * PI, 5.0 * PI);
        assert_eq!(r.minmax_k, None);
        assert!(!r.rho2_below_4pi && r.rho2_below_8pi);
        assert_eq!(classify_regime(-3.0, 10.0 * PI).minmax_k_swapped, Some(1));
        assert_eq!(classify_regime(-3.0, -3.0).regime, Regime::Subcritical);
    }

    #[test]
    fn csv_log() {
        let log = vec![IterateRecord {
            iteration: 0,
            energy: 1.5,
            residual_norm: 0.25,
        }];
        let mut buf = Vec::new();
        write_iterate_csv(&log, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "iteration,energy,residual_norm\n0,1.5e0,2.5e-1\n"
        );
    }
}
