use serde::{Deserialize, Serialize};

use super::newton::{cap_step, newton_solve, NewtonOptions, NewtonOutcome};
use super::{classify_regime, IterateRecord, SolveReport};
use crate::barycenter::{self, BarycenterMeasure, BubbleScale};
use crate::error::{MfeError, Result};
use crate::functional::{self, MfeParams};
use crate::linalg;
use crate::operators::{DiscreteOperators, ScalarField, ShiftedSolver};
use crate::par;
use crate::surface::SurfaceMesh;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StringOptions {
    pub images: usize,
    pub max_iter: usize,
    /// Step length of the preconditioned flow.
    pub step: f64,
    /// Residual norm of the climbing image at which Newton takes over.
    pub switch_tol: f64,
}

impl Default for StringOptions {
    fn default() -> Self {
        StringOptions {
            images: 24,
            max_iter: 4000,
            step: 0.5,
            switch_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MinMaxConfig {
    pub k: usize,
    /// Fixed bubble scale; calibrated when absent.
    pub lambda_bar: Option<f64>,
    pub lambda_start: f64,
    pub lambda_growth: f64,
    /// Resolution guard on `λ̄ · h`.
    pub max_lambda_h: f64,
    pub sigma_samples: usize,
    /// Weights of multi-atom samples come from the grid `{j / weight_steps}`.
    pub weight_steps: usize,
    pub max_sigmas: usize,
    pub cone_s_steps: usize,
    /// Sublevel threshold; calibrated when absent.
    #[serde(rename = "L")]
    pub sublevel: Option<f64>,
    pub calibration_fields: usize,
    pub calibration_amplitude: f64,
    pub t0: f64,
    pub seed: u64,
    pub newton: NewtonOptions,
    pub string: StringOptions,
    /// Run even when `ρ` is outside the strip of `k`.
    pub allow_any_regime: bool,
}

impl Default for MinMaxConfig {
    fn default() -> Self {
        MinMaxConfig {
            k: 1,
            lambda_bar: None,
            lambda_start: 4.0,
            lambda_growth: 1.25,
            max_lambda_h: 10.0,
            sigma_samples: 8,
            weight_steps: 4,
            max_sigmas: 48,
            cone_s_steps: 41,
            sublevel: None,
            calibration_fields: 64,
            calibration_amplitude: 0.1,
            t0: 0.1,
            seed: 0,
            newton: NewtonOptions::default(),
            string: StringOptions::default(),
            allow_any_regime: false,
        }
    }
}

impl MinMaxConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(MfeError::invalid("k must be positive"));
        }
        if self.cone_s_steps < 2 || self.sigma_samples == 0 || self.string.images < 3 {
            return Err(MfeError::invalid("cone and string sizes are too small"));
        }
        if !(self.t0 > 0.0 && self.t0 <= 0.2) {
            return Err(MfeError::invalid("t0 must lie in (0, 0.2]"));
        }
        if self.sublevel.is_some_and(|l| !(l > 0.0)) {
            return Err(MfeError::invalid("L must be positive"));
        }
        if !(self.lambda_growth > 1.0 && self.lambda_start >= 1.0) {
            return Err(MfeError::invalid("lambda sweep must start at 1 or above and grow"));
        }
        if !(self.newton.tol > 0.0 && self.string.switch_tol > 0.0 && self.string.step > 0.0) {
            return Err(MfeError::invalid("tolerances and steps must be positive"));
        }
        Ok(())
    }
}

/// Calibrated sublevel `L` and bubble scale `λ̄`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Calibration {
    #[serde(rename = "L")]
    pub sublevel: f64,
    pub median_random_energy: f64,
    pub lambda_bar: f64,
    pub lambda_h: f64,
    /// Largest energy over the cone base `{φ_{σ,λ̄}}`.
    pub boundary_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinMaxDiagnostics {
    pub calibration: Calibration,
    pub sigma_count: usize,
    pub cone_s_steps: usize,
    /// Largest energy over the sampled cone.
    pub level: f64,
    pub level_sigma: BarycenterMeasure,
    pub level_s: f64,
    /// `boundary_max < −2L < −L/2 < level`.
    pub bracket_ok: bool,
    pub string_iterations: usize,
    pub string_energy: f64,
    pub string_residual: f64,
    pub path: String,
}

/// `s · φ_{σ,λ̄}`.
pub fn cone_point(mesh: &SurfaceMesh, sigma: &BarycenterMeasure, lambda_bar: f64, s: f64) -> Result<ScalarField> {
    if !(0.0..=1.0).contains(&s) {
        return Err(MfeError::invalid(format!("cone parameter {s} outside [0, 1]")));
    }
    sigma.check_vertices(mesh)?;
    if s == 0.0 {
        return Ok(ScalarField::zeros(mesh.id(), mesh.num_vertices()));
    }
    let phi = barycenter::test_function(mesh, sigma, BubbleScale::new(lambda_bar)?);
    Ok(if s == 1.0 { phi } else { phi.scaled(s) })
}

/// Samples of `Σ_k`: atoms drawn from a farthest-point sample, weights from a
/// coarse simplex grid with all weights positive.
pub fn sample_sigmas(
    mesh: &SurfaceMesh,
    k: usize,
    samples: usize,
    weight_steps: usize,
    max_sigmas: usize,
) -> Result<Vec<BarycenterMeasure>> {
    let points = mesh.farthest_point_sample(samples.max(k), 0);
    if points.len() < k {
        return Err(MfeError::invalid("mesh has fewer vertices than atoms"));
    }
    let mut weights: Vec<Vec<f64>> = Vec::new();
    compositions(weight_steps.max(k), k, &mut Vec::new(), &mut weights);
    let mut subsets: Vec<Vec<usize>> = Vec::new();
    choose(points.len(), k, 0, &mut Vec::new(), &mut subsets);
    let total = subsets.len() * weights.len();
    let stride = total.div_ceil(max_sigmas.max(1)).max(1);
    let mut out = Vec::new();
    for idx in (0..total).step_by(stride) {
        let (s, w) = (&subsets[idx / weights.len()], &weights[idx % weights.len()]);
        out.push(BarycenterMeasure::normalized(
            w.iter().zip(s).map(|(&w, &i)| (w, points[i])),
        )?);
    }
    Ok(out)
}

fn compositions(m: usize, parts: usize, cur: &mut Vec<f64>, out: &mut Vec<Vec<f64>>) {
    let used: usize = cur.iter().map(|&w| (w * m as f64).round() as usize).sum();
    if cur.len() + 1 == parts {
        cur.push((m - used) as f64 / m as f64);
        out.push(cur.clone());
        cur.pop();
        return;
    }
    let left = parts - cur.len() - 1;
    for j in 1..=(m - used - left) {
        cur.push(j as f64 / m as f64);
        compositions(m, parts, cur, out);
        cur.pop();
    }
}

fn choose(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cur.len() == k {
        out.push(cur.clone());
        return;
    }
    for i in start..n {
        cur.push(i);
        choose(n, k, i + 1, cur, out);
        cur.pop();
    }
}

/// Bubble base of the cone: sampled `σ` with their distance rows.
struct ConeBase {
    sigmas: Vec<BarycenterMeasure>,
    rows: Vec<Vec<Vec<f64>>>,
}

impl ConeBase {
    fn new(mesh: &SurfaceMesh, sigmas: Vec<BarycenterMeasure>) -> Self {
        let rows = sigmas.iter().map(|s| barycenter::atom_distances(mesh, s)).collect();
        ConeBase { sigmas, rows }
    }

    fn bubbles(&self, ops: &DiscreteOperators, lambda: f64) -> Vec<ScalarField> {
        self.sigmas
            .iter()
            .zip(&self.rows)
            .map(|(s, rows)| {
                let w: Vec<f64> = s.atoms().iter().map(|a| a.w).collect();
                ops.field(barycenter::bubble_values(&w, rows, lambda))
            })
            .collect()
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Calibrates `L = 10 · |median energy of random fields|` and sweeps `λ̄`
/// upward until every sampled cone base point has energy below `−2L`.
pub fn calibrate(
    mesh: &SurfaceMesh,
    ops: &DiscreteOperators,
    p: &MfeParams,
    cfg: &MinMaxConfig,
) -> Result<(Calibration, Vec<BarycenterMeasure>)> {
    cfg.validate()?;
    let sigmas = sample_sigmas(mesh, cfg.k, cfg.sigma_samples, cfg.weight_steps, cfg.max_sigmas)?;
    let base = ConeBase::new(mesh, sigmas);
    let cal = calibrate_base(mesh, ops, p, cfg, &base)?;
    Ok((cal, base.sigmas))
}

fn calibrate_base(
    mesh: &SurfaceMesh,
    ops: &DiscreteOperators,
    p: &MfeParams,
    cfg: &MinMaxConfig,
    base: &ConeBase,
) -> Result<Calibration> {
    let median_random_energy = if cfg.calibration_fields > 0 {
        let modes = ops.low_eigenpairs(31.min(ops.n()))?;
        let energies = par::map_range(cfg.calibration_fields, |i| {
            let mut rng = functional::seeded_rng(cfg.seed, i as u64);
            let u = functional::modal_field(ops, &modes[1..], cfg.calibration_amplitude, &mut rng);
            functional::energy(ops, &u, p)
        });
        median(energies)
    } else {
        f64::NAN
    };
    let sublevel = match cfg.sublevel {
        Some(l) => l,
        None => 10.0 * median_random_energy.abs(),
    };
    if !(sublevel > 0.0 && sublevel.is_finite()) {
        return Err(MfeError::invalid(format!("calibrated L = {sublevel} is not positive")));
    }
    let h = mesh.mean_edge_length();
    let boundary = |lambda: f64| {
        base.bubbles(ops, lambda)
            .iter()
            .map(|phi| functional::energy(ops, phi, p))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let mut lambda = cfg.lambda_bar.unwrap_or(cfg.lambda_start);
    loop {
        if lambda * h > cfg.max_lambda_h {
            return Err(MfeError::Guard(format!(
                "no λ̄ with λ̄·h ≤ {} brings the cone base below −2L = {:.4}",
                cfg.max_lambda_h,
                -2.0 * sublevel
            )));
        }
        let bmax = boundary(lambda);
        if bmax < -2.0 * sublevel || cfg.lambda_bar.is_some() {
            return Ok(Calibration {
                sublevel,
                median_random_energy,
                lambda_bar: lambda,
                lambda_h: lambda * h,
                boundary_max: bmax,
            });
        }
        lambda *= cfg.lambda_growth;
    }
}

struct ConeMax {
    level: f64,
    sigma: usize,
    s: f64,
}

fn cone_max(ops: &DiscreteOperators, p: &MfeParams, bubbles: &[ScalarField], steps: usize) -> ConeMax {
    let per_sigma = par::map_slice(bubbles, |phi| {
        let mut best = (f64::NEG_INFINITY, 0.0);
        for j in 0..steps {
            let s = j as f64 / (steps - 1) as f64;
            let e = functional::energy(ops, &phi.scaled(s), p);
            if e > best.0 {
                best = (e, s);
            }
        }
        best
    });
    let mut out = ConeMax {
        level: f64::NEG_INFINITY,
        sigma: 0,
        s: 0.0,
    };
    for (i, &(e, s)) in per_sigma.iter().enumerate() {
        if e > out.level {
            out = ConeMax { level: e, sigma: i, s };
        }
    }
    out
}

struct StringOutcome {
    u: ScalarField,
    energy: f64,
    residual_norm: f64,
    iterations: usize,
}

/// Climbing-image string between `start` and `end`, in the `H¹` metric.
fn climbing_string(
    ops: &DiscreteOperators,
    p: &MfeParams,
    start: &ScalarField,
    end: &ScalarField,
    opts: &StringOptions,
) -> Result<StringOutcome> {
    let precond = ShiftedSolver::new(ops, 1.0)?;
    let n_img = opts.images;
    let mut images: Vec<ScalarField> = (0..n_img)
        .map(|i| {
            let s = i as f64 / (n_img - 1) as f64;
            start.scaled(1.0 - s).add_scaled(s, end)
        })
        .collect();
    let g_norm = |d: &[f64]| -> f64 {
        let m: f64 = d.iter().zip(ops.mass()).map(|(x, m)| m * x * x).sum();
        (ops.stiffness().quadratic_form(d) + m).sqrt()
    };
    let mut it = 0;
    loop {
        let interior: Vec<usize> = (1..n_img - 1).collect();
        let evals = par::map_slice(&interior, |&i| {
            let r = functional::residual(ops, &images[i], p);
            let g: Vec<f64> = r.values.iter().zip(ops.mass()).map(|(a, m)| a * m).collect();
            (functional::energy(ops, &images[i], p), ops.mass_norm(&r), g)
        });
        let mut c = 0;
        for (j, e) in evals.iter().enumerate() {
            if e.0 > evals[c].0 {
                c = j;
            }
        }
        let ci = c + 1;
        if !evals[c].0.is_finite() {
            return Err(MfeError::numerical("string energies became non-finite", f64::NAN));
        }
        if evals[c].1 < opts.switch_tol || it >= opts.max_iter {
            return Ok(StringOutcome {
                u: images[ci].clone(),
                energy: evals[c].0,
                residual_norm: evals[c].1,
                iterations: it,
            });
        }
        it += 1;
        let steps: Vec<Result<Vec<f64>>> = par::map_slice(&evals, |e| precond.solve(&e.2));
        let mut tau: Vec<f64> = images[ci + 1]
            .values
            .iter()
            .zip(&images[ci - 1].values)
            .map(|(a, b)| a - b)
            .collect();
        let tn = g_norm(&tau);
        tau.iter_mut().for_each(|x| *x /= tn);
        for (j, step) in steps.into_iter().enumerate() {
            let mut d = step?;
            if j == c {
                let along = linalg::dot(&tau, &evals[j].2);
                linalg::axpy(-2.0 * along, &tau, &mut d);
            }
            d.iter_mut().for_each(|x| *x *= -opts.step);
            cap_step(&mut d, 0.5);
            linalg::axpy(1.0, &d, &mut images[j + 1].values);
        }
        // equal arc length in the H¹ metric on each side of the climbing image,
        // which stays where the flow put it
        let mut arc = vec![0.0];
        for i in 1..n_img {
            let d: Vec<f64> = images[i]
                .values
                .iter()
                .zip(&images[i - 1].values)
                .map(|(a, b)| a - b)
                .collect();
            arc.push(arc[i - 1] + g_norm(&d));
        }
        let old = images.clone();
        for (lo, hi) in [(0, ci), (ci, n_img - 1)] {
            let mut seg = lo;
            for i in lo + 1..hi {
                let target = arc[lo] + (arc[hi] - arc[lo]) * (i - lo) as f64 / (hi - lo) as f64;
                while seg + 1 < hi && arc[seg + 1] < target {
                    seg += 1;
                }
                let w = ((target - arc[seg]) / (arc[seg + 1] - arc[seg]).max(f64::MIN_POSITIVE)).clamp(0.0, 1.0);
                images[i] = old[seg].scaled(1.0 - w).add_scaled(w, &old[seg + 1]);
            }
        }
    }
}

struct Attempt {
    newton: NewtonOutcome,
    string: StringOutcome,
}

fn seek_saddle(ops: &DiscreteOperators, p: &MfeParams, end: &ScalarField, cfg: &MinMaxConfig) -> Result<Attempt> {
    let string = climbing_string(ops, p, &ops.zeros(), end, &cfg.string)?;
    let newton = newton_solve(ops, p, &string.u, &cfg.newton)?;
    Ok(Attempt { newton, string })
}

/// Min-max critical point for `ρ₁ ∈ (8kπ, 8(k+1)π)`, `ρ₂ < 4π`.
///
/// The sampled cone over `Σ_k` gives the level estimate and its top point
/// fixes the far end of a climbing string started at `0`; Newton on the
/// residual finishes from the climbing image. If Newton fails the same is
/// done at `t = 1 + t₀` and the solution is continued down to `t = 1`.
pub fn minmax_solve(
    mesh: &SurfaceMesh,
    ops: &DiscreteOperators,
    p: &MfeParams,
    cfg: &MinMaxConfig,
) -> Result<SolveReport> {
    p.validate()?;
    cfg.validate()?;
    let info = classify_regime(p.rho1, p.rho2);
    if info.minmax_k != Some(cfg.k) && info.minmax_k_swapped == Some(cfg.k) {
        // the equation is symmetric under u → −u with ρ₁ and ρ₂ exchanged
        let q = MfeParams {
            rho1: p.rho2,
            rho2: p.rho1,
            t: p.t,
        };
        let r = minmax_solve(mesh, ops, &q, cfg)?;
        let mut out = SolveReport::build(
            ops,
            p,
            &r.u.scaled(-1.0),
            r.tolerance,
            r.iterations,
            r.converged,
            "minmax",
            r.log,
        );
        out.k = r.k;
        out.minmax_level = r.minmax_level;
        out.minmax = r.minmax;
        out.morse_index = r.morse_index;
        out.warnings = r.warnings;
        out.warnings.push("solved for −u with ρ₁ and ρ₂ exchanged".to_string());
        return Ok(out);
    }
    let mut warnings = Vec::new();
    if info.minmax_k != Some(cfg.k) {
        let msg = format!(
            "ρ = ({}, {}) is outside the min-max strip for k = {}",
            p.rho1, p.rho2, cfg.k
        );
        if !cfg.allow_any_regime {
            return Err(MfeError::invalid(msg));
        }
        warnings.push(msg);
    }
    let sigmas = sample_sigmas(mesh, cfg.k, cfg.sigma_samples, cfg.weight_steps, cfg.max_sigmas)?;
    let base = ConeBase::new(mesh, sigmas);
    let cal = calibrate_base(mesh, ops, p, cfg, &base)?;
    let bubbles = base.bubbles(ops, cal.lambda_bar);
    let top = cone_max(ops, p, &bubbles, cfg.cone_s_steps);
    let l = cal.sublevel;
    let bracket_ok = cal.boundary_max < -2.0 * l && -0.5 * l < top.level;
    let end = &bubbles[top.sigma];

    let mut path = "string+newton".to_string();
    let mut attempt = seek_saddle(ops, p, end, cfg)?;
    let mut log = attempt.newton.log.clone();
    if !attempt.newton.converged {
        warnings.push(format!(
            "Newton stalled at residual {:.3e}; continuing from t = {}",
            attempt.newton.residual_norm,
            1.0 + cfg.t0
        ));
        path = "continuation".to_string();
        let hi = p.with_t(1.0 + cfg.t0);
        let first = seek_saddle(ops, &hi, end, cfg)?;
        if first.newton.converged {
            let grid = default_t_grid(cfg.t0);
            let chain = descend_in_t(ops, p, &first.newton.u, &grid[1..], &cfg.newton)?;
            if let Some(last) = chain.last().filter(|o| o.converged && chain.len() + 1 >= grid.len()) {
                log.extend(last.log.iter().copied());
                attempt = Attempt {
                    newton: last.clone(),
                    string: first.string,
                };
            }
        }
    }
    let newton = &attempt.newton;
    let mut report = SolveReport::build(
        ops,
        p,
        &newton.u,
        cfg.newton.tol,
        attempt.string.iterations + newton.iterations,
        newton.converged,
        "minmax",
        renumber(log),
    );
    report.k = Some(cfg.k);
    report.minmax_level = Some(top.level);
    report.morse_index = newton.morse_index;
    report.minmax = Some(MinMaxDiagnostics {
        calibration: cal,
        sigma_count: base.sigmas.len(),
        cone_s_steps: cfg.cone_s_steps,
        level: top.level,
        level_sigma: base.sigmas[top.sigma].clone(),
        level_s: top.s,
        bracket_ok,
        string_iterations: attempt.string.iterations,
        string_energy: attempt.string.energy,
        string_residual: attempt.string.residual_norm,
        path,
    });
    if report.trivial_flag {
        warnings.push("min-max iteration ended at a constant solution".to_string());
    }
    report.warnings = warnings;
    Ok(report)
}

fn renumber(mut log: Vec<IterateRecord>) -> Vec<IterateRecord> {
    for (i, r) in log.iter_mut().enumerate() {
        r.iteration = i;
    }
    log
}

/// `1 + t₀` down to `1` in four equal steps.
pub(crate) fn default_t_grid(t0: f64) -> Vec<f64> {
    (0..5).map(|i| 1.0 + t0 * (4 - i) as f64 / 4.0).collect()
}

/// Newton continuation through the given `t` values, warm-starting each
/// solve; a failed step is bisected once. Stops at the first failure.
fn descend_in_t(
    ops: &DiscreteOperators,
    p: &MfeParams,
    start: &ScalarField,
    ts: &[f64],
    opts: &NewtonOptions,
) -> Result<Vec<NewtonOutcome>> {
    let mut out: Vec<NewtonOutcome> = Vec::new();
    let mut prev_u = start.clone();
    let mut prev_t = f64::NAN;
    for &t in ts {
        let mut o = newton_solve(ops, &p.with_t(t), &prev_u, opts)?;
        if !o.converged && prev_t.is_finite() {
            let mid = newton_solve(ops, &p.with_t(0.5 * (prev_t + t)), &prev_u, opts)?;
            if mid.converged {
                o = newton_solve(ops, &p.with_t(t), &mid.u, opts)?;
            }
        }
        let ok = o.converged;
        prev_u = o.u.clone();
        prev_t = t;
        out.push(o);
        if !ok {
            break;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuationReport {
    pub t_grid: Vec<f64>,
    pub reports: Vec<SolveReport>,
    /// `α_{tρ}` on the fixed sampled cone, for every grid value.
    pub alpha: Vec<f64>,
    pub alpha_over_t: Vec<f64>,
    /// `α_{tρ}/t` non-increasing in `t` within `1e-6`.
    pub monotone_ok: bool,
    /// Every grid value produced a converged solution.
    pub complete: bool,
    pub calibration: Calibration,
}

/// Solves along a descending `t` grid ending at 1, warm-starting each value
/// from the previous solution, and records the min-max level estimates.
pub fn continue_in_t(
    mesh: &SurfaceMesh,
    ops: &DiscreteOperators,
    p: &MfeParams,
    cfg: &MinMaxConfig,
    t_grid: &[f64],
) -> Result<ContinuationReport> {
    p.validate()?;
    cfg.validate()?;
    if t_grid.is_empty() || t_grid.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(MfeError::invalid("t grid must be non-empty and strictly descending"));
    }
    if (t_grid.last().unwrap() - 1.0).abs() > 1e-12 {
        return Err(MfeError::invalid("t grid must end at 1"));
    }
    if t_grid.iter().any(|&t| (t - 1.0).abs() > cfg.t0 + 1e-12) {
        return Err(MfeError::invalid("t grid leaves [1 − t0, 1 + t0]"));
    }
    let sigmas = sample_sigmas(mesh, cfg.k, cfg.sigma_samples, cfg.weight_steps, cfg.max_sigmas)?;
    let base = ConeBase::new(mesh, sigmas);
    let cal = calibrate_base(mesh, ops, p, cfg, &base)?;
    let bubbles = base.bubbles(ops, cal.lambda_bar);
    let alpha: Vec<f64> = t_grid
        .iter()
        .map(|&t| cone_max(ops, &p.with_t(t), &bubbles, cfg.cone_s_steps).level)
        .collect();
    let alpha_over_t: Vec<f64> = alpha.iter().zip(t_grid).map(|(a, t)| a / t).collect();
    // descending t: α/t must not decrease along the grid
    let monotone_ok = alpha_over_t.windows(2).all(|w| w[1] >= w[0] - 1e-6);

    let p0 = p.with_t(t_grid[0]);
    let top = cone_max(ops, &p0, &bubbles, cfg.cone_s_steps);
    let first = seek_saddle(ops, &p0, &bubbles[top.sigma], cfg)?;
    let mut outcomes = vec![first.newton.clone()];
    if first.newton.converged && t_grid.len() > 1 {
        outcomes.extend(descend_in_t(ops, p, &first.newton.u, &t_grid[1..], &cfg.newton)?);
    }
    let reports: Vec<SolveReport> = outcomes
        .iter()
        .zip(t_grid)
        .map(|(o, &t)| {
            let pt = p.with_t(t);
            let mut r = SolveReport::build(
                ops,
                &pt,
                &o.u,
                cfg.newton.tol,
                o.iterations,
                o.converged,
                "continuation",
                o.log.clone(),
            );
            r.k = Some(cfg.k);
            r.morse_index = o.morse_index;
            r
        })
        .collect();
    let complete = reports.len() == t_grid.len() && reports.iter().all(|r| r.converged);
    Ok(ContinuationReport {
        t_grid: t_grid.to_vec(),
        reports,
        alpha,
        alpha_over_t,
        monotone_ok,
        complete,
        calibration: cal,
    })
}
