//! Formal barycenters `Σ_k`, bubble test functions and their asymptotics,
//! and the distance of a density to `Σ_k`.

mod transport;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub use transport::{KMedian, TransportMethod, EXACT_TRANSPORT_LIMIT};

use crate::error::{MfeError, Result};
use crate::operators::{DiscreteOperators, ScalarField};
use crate::par;
use crate::surface::{norm3, SurfaceMesh};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub w: f64,
    pub vertex: usize,
}

/// `σ = Σ tᵢ δ_{xᵢ}` with `tᵢ ≥ 0`, `Σ tᵢ = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarycenterMeasure {
    atoms: Vec<Atom>,
}

impl BarycenterMeasure {
    /// Builds a measure from `(weight, vertex)` pairs; repeated vertices are
    /// merged by adding their weights.
    pub fn new(atoms: impl IntoIterator<Item = (f64, usize)>) -> Result<Self> {
        let mut merged: Vec<Atom> = Vec::new();
        for (w, vertex) in atoms {
            if !(w.is_finite() && w >= 0.0) {
                return Err(MfeError::invalid(format!(
                    "atom weight {w} must be finite and non-negative"
                )));
            }
            match merged.iter_mut().find(|a| a.vertex == vertex) {
                Some(a) => a.w += w,
                None => merged.push(Atom { w, vertex }),
            }
        }
        if merged.is_empty() {
            return Err(MfeError::invalid("a barycenter needs at least one atom"));
        }
        let total: f64 = merged.iter().map(|a| a.w).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(MfeError::invalid(format!("atom weights sum to {total}, not 1")));
        }
        Ok(BarycenterMeasure { atoms: merged })
    }

    /// Like [`BarycenterMeasure::new`] but rescales positive weights to sum 1.
    pub fn normalized(atoms: impl IntoIterator<Item = (f64, usize)>) -> Result<Self> {
        let atoms: Vec<(f64, usize)> = atoms.into_iter().collect();
        let total: f64 = atoms.iter().map(|a| a.0).sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(MfeError::invalid("atom weights must have a positive finite sum"));
        }
        Self::new(atoms.into_iter().map(|(w, v)| (w / total, v)))
    }

    pub fn dirac(vertex: usize) -> Self {
        BarycenterMeasure {
            atoms: vec![Atom { w: 1.0, vertex }],
        }
    }

    /// Equal weights on the given vertices.
    pub fn uniform(vertices: &[usize]) -> Result<Self> {
        let w = 1.0 / vertices.len() as f64;
        Self::normalized(vertices.iter().map(|&v| (w, v)))
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn k(&self) -> usize {
        self.atoms.len()
    }

    pub fn check_vertices(&self, mesh: &SurfaceMesh) -> Result<()> {
        match self.atoms.iter().find(|a| a.vertex >= mesh.num_vertices()) {
            Some(a) => Err(MfeError::invalid(format!("atom vertex {} out of range", a.vertex))),
            None => Ok(()),
        }
    }

    /// `⟨σ, φ⟩ = Σ tᵢ φ(xᵢ)`.
    pub fn pair(&self, phi: &ScalarField) -> f64 {
        self.atoms.iter().map(|a| a.w * phi.values[a.vertex]).sum()
    }
}

/// Concentration scale `λ ≥ 1` of a bubble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BubbleScale(f64);

impl BubbleScale {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 1.0) {
            return Err(MfeError::invalid(format!("bubble scale {lambda} must be at least 1")));
        }
        Ok(BubbleScale(lambda))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Distances from every atom of `sigma` to every vertex.
pub fn atom_distances(mesh: &SurfaceMesh, sigma: &BarycenterMeasure) -> Vec<Vec<f64>> {
    sigma.atoms.iter().map(|a| mesh.distances_from(a.vertex)).collect()
}

pub(crate) fn bubble_values(weights: &[f64], rows: &[Vec<f64>], lambda: f64) -> Vec<f64> {
    let n = rows[0].len();
    let peak = 2.0 * lambda.ln() - PI.ln();
    let l2 = lambda * lambda;
    let log_w: Vec<f64> = weights.iter().map(|w| w.ln()).collect();
    par::map_range(n, |v| {
        if rows.len() == 1 {
            return peak + (log_w[0] - 2.0 * (l2 * rows[0][v] * rows[0][v]).ln_1p());
        }
        let terms = rows
            .iter()
            .zip(&log_w)
            .map(|(r, lw)| lw - 2.0 * (l2 * r[v] * r[v]).ln_1p());
        let top = terms.clone().fold(f64::NEG_INFINITY, f64::max);
        peak + top + terms.map(|x| (x - top).exp()).sum::<f64>().ln()
    })
}

/// `φ_{σ,λ}(y) = log Σ tᵢ (λ / (1 + λ² dᵢ(y)²))² − log π`.
pub fn test_function(mesh: &SurfaceMesh, sigma: &BarycenterMeasure, scale: BubbleScale) -> ScalarField {
    let rows = atom_distances(mesh, sigma);
    let w: Vec<f64> = sigma.atoms.iter().map(|a| a.w).collect();
    ScalarField::new(mesh.id(), bubble_values(&w, &rows, scale.get()))
}

/// Options for [`asymptotic_slopes`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SlopeOptions {
    /// Relative slack allowed in the pointwise gradient bounds on a mesh.
    pub mesh_tol: f64,
    /// `C` in `|∇φ| ≤ C λ`; the profile attains `2λ`.
    pub grad_const: f64,
    /// Largest admissible `λ_max · h`.
    pub max_lambda_h: f64,
}

impl Default for SlopeOptions {
    fn default() -> Self {
        SlopeOptions {
            mesh_tol: 0.25,
            grad_const: 2.0,
            max_lambda_h: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeRow {
    pub lambda: f64,
    pub mean: f64,
    pub log_exp: f64,
    pub log_neg_exp: f64,
    pub dirichlet: f64,
    pub max_grad: f64,
    pub grad_lambda_ok: bool,
    pub grad_dmin_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeReport {
    pub k: usize,
    pub rows: Vec<SlopeRow>,
    pub mean_slope: f64,
    pub neg_exp_slope: f64,
    pub pos_exp_spread: f64,
    pub dirichlet_coeff: f64,
    pub grad_bounds_ok: bool,
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Checks the grid against the resolution guard; returns `h`.
pub fn check_lambda_grid(mesh: &SurfaceMesh, grid: &[f64], max_lambda_h: f64) -> Result<f64> {
    if grid.len() < 2 {
        return Err(MfeError::invalid("lambda grid needs at least two values"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(MfeError::invalid("lambda grid must be strictly ascending"));
    }
    if !(grid[0] >= 1.0 && grid.iter().all(|l| l.is_finite())) {
        return Err(MfeError::invalid("lambda values must be finite and at least 1"));
    }
    let h = mesh.mean_edge_length();
    let top = *grid.last().unwrap();
    if top / grid[0] < 10.0 {
        return Err(MfeError::Guard(format!(
            "lambda grid spans {:.3} < one decade; slopes in log λ are not identifiable",
            top / grid[0]
        )));
    }
    if top * h > max_lambda_h {
        return Err(MfeError::Guard(format!(
            "bubble under-resolved: λ_max·h = {:.3} exceeds {max_lambda_h} (h = {h:.3e})",
            top * h
        )));
    }
    Ok(h)
}

/// Sweeps `λ` and fits the growth rates of the bubble's mean, exponential
/// integrals and Dirichlet energy against `log λ`.
pub fn asymptotic_slopes(
    mesh: &SurfaceMesh,
    ops: &DiscreteOperators,
    sigma: &BarycenterMeasure,
    grid: &[f64],
    opts: &SlopeOptions,
) -> Result<SlopeReport> {
    sigma.check_vertices(mesh)?;
    check_lambda_grid(mesh, grid, opts.max_lambda_h)?;
    let rows = atom_distances(mesh, sigma);
    let w: Vec<f64> = sigma.atoms.iter().map(|a| a.w).collect();
    let n = mesh.num_vertices();
    let dmin: Vec<f64> = (0..n)
        .map(|v| rows.iter().map(|r| r[v]).fold(f64::INFINITY, f64::min))
        .collect();
    // smallest distance to an atom over each closed face
    let face_dmin: Vec<f64> = mesh
        .faces()
        .iter()
        .map(|&[a, b, c]| {
            let near = dmin[a].min(dmin[b]).min(dmin[c]);
            let longest = [(a, b), (b, c), (c, a)]
                .iter()
                .map(|&(p, q)| norm3(mesh.edge_vector(p, q)))
                .fold(0.0, f64::max);
            (near - longest / 3f64.sqrt()).max(0.0)
        })
        .collect();
    let out_rows: Vec<SlopeRow> = grid
        .iter()
        .map(|&lambda| {
            let phi = ops.field(bubble_values(&w, &rows, lambda));
            let grads = par::map_range(mesh.num_faces(), |f| norm3(mesh.face_gradient(f, &phi.values)));
            let max_grad = grads.iter().copied().fold(0.0, f64::max);
            let slack = 1.0 + opts.mesh_tol;
            let grad_lambda_ok = max_grad <= opts.grad_const * lambda * slack;
            let grad_dmin_ok = grads
                .iter()
                .zip(&face_dmin)
                .all(|(&g, &d)| d == 0.0 || g * d <= 4.0 * slack);
            SlopeRow {
                lambda,
                mean: ops.mean(&phi),
                log_exp: crate::functional::log_mass_exp(ops.mass(), &phi.values, 1.0),
                log_neg_exp: crate::functional::log_mass_exp(ops.mass(), &phi.values, -1.0),
                dirichlet: ops.dirichlet(&phi),
                max_grad,
                grad_lambda_ok,
                grad_dmin_ok,
            }
        })
        .collect();
    let x: Vec<f64> = grid.iter().map(|l| l.ln()).collect();
    let col = |f: fn(&SlopeRow) -> f64| -> Vec<f64> { out_rows.iter().map(f).collect() };
    let pos = col(|r| r.log_exp);
    Ok(SlopeReport {
        k: sigma.k(),
        mean_slope: fit_slope(&x, &col(|r| r.mean)),
        neg_exp_slope: fit_slope(&x, &col(|r| r.log_neg_exp)),
        pos_exp_spread: pos.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            - pos.iter().copied().fold(f64::INFINITY, f64::min),
        dirichlet_coeff: fit_slope(&x, &col(|r| r.dirichlet)),
        grad_bounds_ok: out_rows.iter().all(|r| r.grad_lambda_ok && r.grad_dmin_ok),
        rows: out_rows,
    })
}

/// Vertex masses `mᵥ fᵥ` of a density, after validating `f ≥ 0`, `∫f = 1`.
fn density_masses(ops: &DiscreteOperators, f: &ScalarField) -> Result<Vec<f64>> {
    ops.check(f);
    if let Some(v) = f.values.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(MfeError::invalid(format!(
            "density is negative or non-finite at vertex {v}"
        )));
    }
    let a: Vec<f64> = f.values.iter().zip(ops.mass()).map(|(x, m)| x * m).collect();
    let total: f64 = a.iter().sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(MfeError::invalid(format!("density integrates to {total}, not 1")));
    }
    Ok(a)
}

/// Normalized density `e^u / ∫e^u` of a field.
pub fn exp_density(ops: &DiscreteOperators, u: &ScalarField) -> ScalarField {
    let (d1, _) = crate::functional::densities(ops, u);
    ops.field(d1)
}

/// Default clustering radius: this fraction of the diameter.
pub const DEFAULT_CLUSTER_FRACTION: f64 = 0.05;

/// Greedy geodesic-ball clustering of the density into at most `k` atoms.
///
/// Each round picks the vertex whose ball of radius `r_cluster` holds the most
/// remaining mass (lowest index on ties), records that mass as the atom
/// weight and removes the ball.
pub fn project_to_barycenters(
    mesh: &SurfaceMesh,
    ops: &DiscreteOperators,
    f: &ScalarField,
    k: usize,
    r_cluster: Option<f64>,
) -> Result<BarycenterMeasure> {
    if k == 0 {
        return Err(MfeError::invalid("k must be positive"));
    }
    let mut a = density_masses(ops, f)?;
    let r = r_cluster.unwrap_or(DEFAULT_CLUSTER_FRACTION * mesh.diameter());
    if !(r >= 0.0) {
        return Err(MfeError::invalid("cluster radius must be non-negative"));
    }
    let balls: Vec<Vec<usize>> = par::map_range(mesh.num_vertices(), |v| {
        mesh.ball(v, r).into_iter().map(|(u, _)| u).collect()
    });
    let mut atoms = Vec::new();
    for _ in 0..k {
        let held = par::map_slice(&balls, |b| b.iter().map(|&u| a[u]).sum::<f64>());
        let best = crate::surface::argmax(&held);
        if held[best] <= 0.0 {
            break;
        }
        atoms.push((held[best], best));
        for &u in &balls[best] {
            a[u] = 0.0;
        }
    }
    BarycenterMeasure::normalized(atoms)
}

/// Transport cost from a density to a fixed measure, with the method used.
pub fn transport_cost(
    mesh: &SurfaceMesh,
    ops: &DiscreteOperators,
    f: &ScalarField,
    sigma: &BarycenterMeasure,
) -> Result<(f64, TransportMethod)> {
    sigma.check_vertices(mesh)?;
    let a = density_masses(ops, f)?;
    let rows = atom_distances(mesh, sigma);
    let b: Vec<f64> = sigma.atoms.iter().map(|x| x.w).collect();
    Ok(fixed_weight_cost(mesh, &a, &b, &rows))
}

fn fixed_weight_cost(mesh: &SurfaceMesh, a: &[f64], b: &[f64], rows: &[Vec<f64>]) -> (f64, TransportMethod) {
    if a.len() <= EXACT_TRANSPORT_LIMIT || b.len() == 1 {
        (transport::exact(a, b, rows), TransportMethod::Exact)
    } else {
        (
            transport::entropic(a, b, rows, 0.01 * mesh.diameter(), 500),
            TransportMethod::Entropic,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceReport {
    pub k: usize,
    pub lower: f64,
    pub upper: f64,
    pub argmin: BarycenterMeasure,
    pub method: TransportMethod,
    pub candidates: usize,
    /// Transport cost to the projection output, with its own method.
    pub projection_cost: f64,
    pub projection_method: TransportMethod,
}

/// Reusable state for [`dist_to_barycenters`]: the eigenfunction part of the
/// lower-bound dictionary.
pub struct DistanceOracle<'a> {
    mesh: &'a SurfaceMesh,
    ops: &'a DiscreteOperators,
    eigenfunctions: Vec<ScalarField>,
    max_candidates: usize,
}

impl<'a> DistanceOracle<'a> {
    pub fn new(mesh: &'a SurfaceMesh, ops: &'a DiscreteOperators) -> Result<Self> {
        let count = 31.min(mesh.num_vertices());
        let eigenfunctions = ops
            .low_eigenpairs(count)?
            .into_iter()
            .skip(1)
            .map(|p| p.vector)
            .collect();
        Ok(DistanceOracle {
            mesh,
            ops,
            eigenfunctions,
            max_candidates: 24,
        })
    }

    /// Brackets the distance of `f` to `Σ_k`: `upper` is the transport cost
    /// to the best measure found, `lower` a certified dual value.
    pub fn evaluate(&self, f: &ScalarField, k: usize) -> Result<DistanceReport> {
        if k == 0 {
            return Err(MfeError::invalid("k must be positive"));
        }
        let (mesh, ops) = (self.mesh, self.ops);
        let a = density_masses(ops, f)?;
        let projection = project_to_barycenters(mesh, ops, f, k, None)?;

        // candidate atoms: the strongest local maxima of f, plus the projection atoms
        let mut maxima: Vec<usize> = (0..mesh.num_vertices())
            .filter(|&v| mesh.neighbors(v).all(|u| f.values[u] <= f.values[v]))
            .collect();
        maxima.sort_by(|&u, &v| f.values[v].total_cmp(&f.values[u]).then(u.cmp(&v)));
        maxima.truncate(self.max_candidates.max(4 * k));
        let mut cands = maxima;
        for atom in projection.atoms() {
            if !cands.contains(&atom.vertex) {
                cands.push(atom.vertex);
            }
        }
        let rows: Vec<Vec<f64>> = cands.iter().map(|&c| mesh.distances_from(c)).collect();
        let best = transport::k_median(&a, &rows, k);
        let argmin =
            BarycenterMeasure::normalized(best.chosen.iter().zip(&best.weights).map(|(&i, &w)| (w, cands[i])))?;
        let upper = best.cost;

        let proj_rows = atom_distances(mesh, &projection);
        let proj_w: Vec<f64> = projection.atoms().iter().map(|x| x.w).collect();
        let (projection_cost, projection_method) = fixed_weight_cost(mesh, &a, &proj_w, &proj_rows);

        let atom_rows: Vec<&Vec<f64>> = argmin
            .atoms()
            .iter()
            .map(|x| &rows[cands.iter().position(|&c| c == x.vertex).unwrap()])
            .collect();
        let diam = mesh.diameter();
        let mut dictionary: Vec<Vec<f64>> = self.eigenfunctions.iter().map(|e| e.values.clone()).collect();
        for row in &rows {
            dictionary.push(row.clone());
            for frac in [0.1, 0.25, 0.5] {
                let r = frac * diam;
                dictionary.push(row.iter().map(|&d| (1.0 - d / r).max(0.0)).collect());
            }
        }
        let values = par::map_slice(&dictionary, |phi| {
            let scale = self.c1_norm(phi).max(lipschitz_to_atoms(phi, &argmin, &atom_rows));
            if !(scale > 0.0) {
                return 0.0;
            }
            let integral: f64 = a.iter().zip(phi).map(|(m, p)| m * p).sum();
            let paired: f64 = argmin.atoms().iter().map(|x| x.w * phi[x.vertex]).sum();
            (integral - paired).abs() / scale
        });
        let lower = values.into_iter().fold(0.0, f64::max).min(upper);
        Ok(DistanceReport {
            k,
            lower,
            upper,
            argmin,
            method: TransportMethod::Exact,
            candidates: cands.len(),
            projection_cost,
            projection_method,
        })
    }

    /// `sup|φ − c| + sup|∇φ|` with `c` the midrange, which the pairing ignores.
    fn c1_norm(&self, phi: &[f64]) -> f64 {
        let hi = phi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = phi.iter().copied().fold(f64::INFINITY, f64::min);
        let grad = (0..self.mesh.num_faces())
            .map(|f| norm3(self.mesh.face_gradient(f, phi)))
            .fold(0.0, f64::max);
        0.5 * (hi - lo) + grad
    }
}

/// Largest `|φ(v) − φ(x)| / d(v, x)` over vertices `v` and atoms `x`.
fn lipschitz_to_atoms(phi: &[f64], sigma: &BarycenterMeasure, rows: &[&Vec<f64>]) -> f64 {
    let mut lip: f64 = 0.0;
    for (atom, row) in sigma.atoms().iter().zip(rows) {
        let px = phi[atom.vertex];
        for (v, &d) in row.iter().enumerate() {
            if d > 0.0 {
                lip = lip.max((phi[v] - px).abs() / d);
            }
        }
    }
    lip
}

/// One-shot form of [`DistanceOracle::evaluate`].
pub fn dist_to_barycenters(
    mesh: &SurfaceMesh,
    ops: &DiscreteOperators,
    f: &ScalarField,
    k: usize,
) -> Result<DistanceReport> {
    DistanceOracle::new(mesh, ops)?.evaluate(f, k)
}
