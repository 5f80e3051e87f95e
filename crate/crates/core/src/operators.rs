//! Discrete Laplace–Beltrami operator: cotangent stiffness, lumped mass,
//! mean-zero Poisson solves, Green columns and low eigenpairs.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{MfeError, Result};
use crate::linalg::{self, CsrMatrix, IterOptions};
use crate::par;
use crate::surface::{cross, dot3, norm3, MeshId, SurfaceMesh};

/// Meshes up to this size use dense factorizations for repeated solves.
pub const DENSE_LIMIT: usize = 2500;

/// Per-vertex values of a function on a mesh.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarField {
    pub values: Vec<f64>,
    pub mesh_id: MeshId,
}

impl ScalarField {
    pub fn new(mesh_id: MeshId, values: Vec<f64>) -> Self {
        ScalarField { values, mesh_id }
    }

    pub fn zeros(mesh_id: MeshId, n: usize) -> Self {
        Self::new(mesh_id, vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::new(self.mesh_id, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map(|v| s * v)
    }

    pub fn shifted(&self, c: f64) -> Self {
        self.map(|v| v + c)
    }

    /// `self + a * other`.
    pub fn add_scaled(&self, a: f64, other: &ScalarField) -> Self {
        assert_eq!(self.mesh_id, other.mesh_id, "fields live on different meshes");
        Self::new(
            self.mesh_id,
            self.values.iter().zip(&other.values).map(|(x, y)| x + a * y).collect(),
        )
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Cotangent stiffness matrix and lumped mass of a mesh.
#[derive(Debug, Clone)]
pub struct DiscreteOperators {
    mesh_id: MeshId,
    stiffness: CsrMatrix,
    mass: Vec<f64>,
    inv_diag: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GreenColumn {
    pub source: usize,
    pub values: ScalarField,
}

#[derive(Debug, Clone, Serialize)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: ScalarField,
}

/// Serializable summary of a computed spectrum.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<f64>,
    pub max_residual: f64,
}

fn cot(a: [f64; 3], b: [f64; 3]) -> f64 {
    dot3(a, b) / norm3(cross(a, b))
}

impl DiscreteOperators {
    /// Assembles cotangent stiffness and lumped (barycentric) mass.
    pub fn assemble(mesh: &SurfaceMesh) -> Result<Self> {
        let areas = mesh.face_areas();
        let mean_area = areas.iter().sum::<f64>() / areas.len() as f64;
        if let Some((f, &a)) = areas
            .iter()
            .enumerate()
            .find(|(_, &a)| !(a.is_finite() && a > 1e-14 * mean_area))
        {
            return Err(MfeError::DegenerateFace { face: f, area: a });
        }
        let per_face = par::map_slice(mesh.faces(), |&[a, b, c]| {
            let (ab, ac, bc) = (mesh.edge_vector(a, b), mesh.edge_vector(a, c), mesh.edge_vector(b, c));
            let neg = |v: [f64; 3]| [-v[0], -v[1], -v[2]];
            // half cotangent of the angle opposite each edge
            let w_ab = 0.5 * cot(neg(ac), neg(bc));
            let w_bc = 0.5 * cot(ab, ac);
            let w_ca = 0.5 * cot(neg(ab), bc);
            [(a, b, w_ab), (b, c, w_bc), (c, a, w_ca)]
        });
        let n = mesh.num_vertices();
        let mut triplets = Vec::with_capacity(per_face.len() * 6 + n);
        for edges in &per_face {
            for &(i, j, w) in edges {
                triplets.push((i, j, -w));
                triplets.push((j, i, -w));
            }
        }
        let offdiag = CsrMatrix::from_triplets(n, &triplets);
        for i in 0..n {
            let s: f64 = offdiag.row(i).map(|(_, v)| v).sum();
            triplets.push((i, i, -s));
        }
        let stiffness = CsrMatrix::from_triplets(n, &triplets);
        let inv_diag = stiffness
            .diagonal()
            .iter()
            .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
            .collect();
        Ok(DiscreteOperators {
            mesh_id: mesh.id(),
            stiffness,
            mass: mesh.vertex_areas().to_vec(),
            inv_diag,
        })
    }

    pub fn mesh_id(&self) -> MeshId {
        self.mesh_id
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn n(&self) -> usize {
        self.mass.len()
    }

    pub(crate) fn check(&self, u: &ScalarField) {
        assert_eq!(u.mesh_id, self.mesh_id, "field belongs to a different mesh");
    }

    pub fn field(&self, values: Vec<f64>) -> ScalarField {
        assert_eq!(values.len(), self.n());
        ScalarField::new(self.mesh_id, values)
    }

    pub fn zeros(&self) -> ScalarField {
        ScalarField::zeros(self.mesh_id, self.n())
    }

    /// Area-weighted average.
    pub fn mean(&self, u: &ScalarField) -> f64 {
        self.check(u);
        linalg::dot(&self.mass, &u.values)
    }

    /// `∫ u v dV` with the lumped mass.
    pub fn inner(&self, u: &ScalarField, v: &ScalarField) -> f64 {
        self.check(u);
        self.check(v);
        u.values
            .iter()
            .zip(&v.values)
            .zip(&self.mass)
            .map(|((a, b), m)| a * b * m)
            .sum()
    }

    pub fn mass_norm(&self, u: &ScalarField) -> f64 {
        self.inner(u, u).sqrt()
    }

    /// `∫ |∇u|² dV = uᵀ K u`.
    pub fn dirichlet(&self, u: &ScalarField) -> f64 {
        self.check(u);
        self.stiffness.quadratic_form(&u.values)
    }

    /// `M⁻¹ K u`, the discrete `−Δu` as a field.
    pub fn neg_laplacian(&self, u: &ScalarField) -> ScalarField {
        self.check(u);
        let ku = self.stiffness.mul(&u.values);
        self.field(ku.iter().zip(&self.mass).map(|(k, m)| k / m).collect())
    }

    pub fn project_mean_zero(&self, u: &ScalarField) -> ScalarField {
        u.shifted(-self.mean(u))
    }

    /// Solves `−Δu = f` for mean-zero `f`; the returned `u` has mean zero.
    pub fn solve_poisson(&self, f: &ScalarField) -> Result<ScalarField> {
        self.check(f);
        let mean = self.mean(f);
        if mean.abs() > 1e-10 {
            return Err(MfeError::invalid(format!(
                "Poisson data must have mean zero (mean = {mean:e})"
            )));
        }
        let b: Vec<f64> = f.values.iter().zip(&self.mass).map(|(v, m)| v * m).collect();
        let u = self.solve_stiffness(&b)?;
        Ok(self.field(u))
    }

    /// Solves `K u = b` for `b` with zero sum; returns the mass-mean-zero solution.
    pub(crate) fn solve_stiffness(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        let shift = b.iter().sum::<f64>() / n as f64;
        let b: Vec<f64> = b.iter().map(|v| v - shift).collect();
        let mut x = vec![0.0; n];
        let out = linalg::pcg(
            |v, o| self.stiffness.matvec(v, o),
            &self.inv_diag,
            &b,
            &mut x,
            IterOptions {
                rtol: 1e-10,
                max_iter: 50 * n + 1000,
            },
        );
        if !out.converged {
            return Err(MfeError::numerical("Poisson solve did not converge", out.rel_residual));
        }
        let m = linalg::dot(&self.mass, &x);
        x.iter_mut().for_each(|v| *v -= m);
        Ok(x)
    }

    /// Green function with pole at `x`: `−ΔG = δ_x − 1` weakly, mean zero.
    pub fn green_column(&self, x: usize) -> Result<GreenColumn> {
        if x >= self.n() {
            return Err(MfeError::invalid(format!("vertex {x} out of range")));
        }
        let mut b: Vec<f64> = self.mass.iter().map(|m| -m).collect();
        b[x] += 1.0;
        let g = self.solve_stiffness(&b)?;
        Ok(GreenColumn {
            source: x,
            values: self.field(g),
        })
    }

    /// Lowest `count` generalized eigenpairs of `(K, M)` in ascending order,
    /// mass-orthonormal.
    pub fn low_eigenpairs(&self, count: usize) -> Result<Vec<Eigenpair>> {
        let n = self.n();
        if count == 0 || count > n {
            return Err(MfeError::invalid(format!("eigenpair count {count} outside 1..={n}")));
        }
        let pairs = if n <= 600 || 4 * count >= n {
            self.dense_eigenpairs(count)
        } else {
            self.krylov_eigenpairs(count)?
        };
        Ok(pairs
            .into_iter()
            .map(|(value, mut v)| {
                canonical_sign(&mut v);
                Eigenpair {
                    value,
                    vector: self.field(v),
                }
            })
            .collect())
    }

    fn dense_eigenpairs(&self, count: usize) -> Vec<(f64, Vec<f64>)> {
        let n = self.n();
        let s: Vec<f64> = self.mass.iter().map(|m| 1.0 / m.sqrt()).collect();
        let mut a = self.stiffness.to_dense();
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] *= s[i] * s[j];
            }
        }
        let eig = SymmetricEigen::new(a);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        order
            .into_iter()
            .take(count)
            .map(|k| {
                let v = (0..n).map(|i| eig.eigenvectors[(i, k)] * s[i]).collect();
                (eig.eigenvalues[k].max(0.0), v)
            })
            .collect()
    }

    /// Block Krylov iteration on `M^{1/2} (K + σM)⁻¹ M^{1/2}` followed by
    /// Rayleigh–Ritz; the subspace grows until the requested pairs converge.
    fn krylov_eigenpairs(&self, count: usize) -> Result<Vec<(f64, Vec<f64>)>> {
        let n = self.n();
        let sigma = 1.0;
        let solver = ShiftedSolver::new(self, sigma)?;
        let sqrt_m: Vec<f64> = self.mass.iter().map(|m| m.sqrt()).collect();
        let op = |y: &Vec<f64>| -> Result<Vec<f64>> {
            let b: Vec<f64> = y.iter().zip(&sqrt_m).map(|(a, s)| a * s).collect();
            let x = solver.solve(&b)?;
            Ok(x.iter().zip(&sqrt_m).map(|(a, s)| a * s).collect())
        };
        let block = 8usize.min(n);
        let cap = n.min(12 * count + 160);
        let mut target = n.min(3 * count + 40).max(block);
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_e16e);
        let mut q: Vec<Vec<f64>> = Vec::new();
        let mut aq: Vec<Vec<f64>> = Vec::new();
        let mut pending: Vec<Vec<f64>> = (0..block)
            .map(|_| (0..n).map(|_| rng.random::<f64>() - 0.5).collect())
            .collect();
        let tol = 1e-10;
        loop {
            while q.len() < target {
                let fresh = orthonormalize_block(&q, std::mem::take(&mut pending));
                if fresh.is_empty() {
                    break;
                }
                let images = par::map_slice(&fresh, |v| op(v));
                let images: Vec<Vec<f64>> = images.into_iter().collect::<Result<_>>()?;
                pending = images.clone();
                q.extend(fresh);
                aq.extend(images);
            }
            let m = q.len();
            let h = DMatrix::from_fn(m, m, |i, j| {
                0.5 * (linalg::dot(&q[i], &aq[j]) + linalg::dot(&q[j], &aq[i]))
            });
            let eig = SymmetricEigen::new(h);
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
            let mut pairs = Vec::with_capacity(count);
            let mut worst: f64 = 0.0;
            for &k in order.iter().take(count) {
                let mu = eig.eigenvalues[k];
                let mut y = vec![0.0; n];
                for (j, qj) in q.iter().enumerate() {
                    linalg::axpy(eig.eigenvectors[(j, k)], qj, &mut y);
                }
                let nrm = linalg::norm2(&y);
                let phi: Vec<f64> = y.iter().zip(&sqrt_m).map(|(a, s)| a / (s * nrm)).collect();
                let lambda = (1.0 / mu - sigma).max(0.0);
                let kphi = self.stiffness.mul(&phi);
                let res = kphi
                    .iter()
                    .zip(&phi)
                    .zip(&self.mass)
                    .map(|((k, p), m)| (k - lambda * m * p).powi(2) / m)
                    .sum::<f64>()
                    .sqrt();
                worst = worst.max(res / lambda.max(1.0));
                pairs.push((lambda, phi));
            }
            if worst <= tol {
                return Ok(pairs);
            }
            if m >= cap || pending.is_empty() {
                if worst <= 1e-7 {
                    return Ok(pairs);
                }
                return Err(MfeError::numerical("eigenpairs did not converge", worst));
            }
            target = cap.min(m + 2 * block);
        }
    }
}

fn orthonormalize_block(basis: &[Vec<f64>], block: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for mut v in block {
        let before = linalg::norm2(&v);
        if before == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for b in basis.iter().chain(out.iter()) {
                let c = linalg::dot(b, &v);
                linalg::axpy(-c, b, &mut v);
            }
        }
        let after = linalg::norm2(&v);
        if after > 1e-10 * before {
            v.iter_mut().for_each(|x| *x /= after);
            out.push(v);
        }
    }
    out
}

fn canonical_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() * (1.0 + 1e-9) {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Repeated solves with `K + shift·M` (`shift > 0`): a dense Cholesky factor
/// on small meshes, Jacobi-preconditioned CG otherwise.
pub struct ShiftedSolver<'a> {
    ops: &'a DiscreteOperators,
    shift: f64,
    dense: Option<nalgebra::Cholesky<f64, nalgebra::Dyn>>,
    inv_diag: Vec<f64>,
}

impl<'a> ShiftedSolver<'a> {
    pub fn new(ops: &'a DiscreteOperators, shift: f64) -> Result<Self> {
        if !(shift > 0.0) {
            return Err(MfeError::invalid("shift must be positive"));
        }
        let n = ops.n();
        let diag = ops.stiffness.diagonal();
        let inv_diag = diag.iter().zip(&ops.mass).map(|(d, m)| 1.0 / (d + shift * m)).collect();
        let dense = if n <= DENSE_LIMIT {
            let mut a = ops.stiffness.to_dense();
            for i in 0..n {
                a[(i, i)] += shift * ops.mass[i];
            }
            Some(
                nalgebra::Cholesky::new(a)
                    .ok_or_else(|| MfeError::numerical("shifted stiffness not positive definite", f64::NAN))?,
            )
        } else {
            None
        };
        Ok(ShiftedSolver {
            ops,
            shift,
            dense,
            inv_diag,
        })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if let Some(ch) = &self.dense {
            let x = ch.solve(&nalgebra::DVector::from_column_slice(b));
            return Ok(x.as_slice().to_vec());
        }
        let mut x = vec![0.0; b.len()];
        let out = linalg::pcg(
            |v, o| {
                self.ops.stiffness.matvec(v, o);
                for i in 0..v.len() {
                    o[i] += self.shift * self.ops.mass[i] * v[i];
                }
            },
            &self.inv_diag,
            b,
            &mut x,
            IterOptions {
                rtol: 1e-13,
                max_iter: 50 * b.len() + 1000,
            },
        );
        // CG stagnates near 1e-11 on the larger meshes
        if out.rel_residual > 1e-9 {
            return Err(MfeError::numerical("shifted solve did not converge", out.rel_residual));
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn random_field(ops: &DiscreteOperators, seed: u64) -> ScalarField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ops.field((0..ops.n()).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect())
    }

    #[test]
    fn stiffness_invariants() {
        for mesh in [
            SurfaceMesh::unit_sphere(3).unwrap(),
            SurfaceMesh::flat_torus(9, 7, 1.7).unwrap(),
        ] {
            let ops = DiscreteOperators::assemble(&mesh).unwrap();
            assert!(ops.stiffness().is_symmetric());
            let k1 = ops.stiffness().mul(&vec![3.5; ops.n()]);
            assert!(k1.iter().all(|v| v.abs() < 1e-10));
            assert!((ops.mass().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for s in 0..5 {
                assert!(ops.dirichlet(&random_field(&ops, s)) >= 0.0);
            }
        }
    }

    #[test]
    fn torus_stiffness_is_five_point_stencil() {
        let t = SurfaceMesh::flat_torus(6, 6, 1.0).unwrap();
        let ops = DiscreteOperators::assemble(&t).unwrap();
        assert!((ops.stiffness().get(0, 0) - 4.0).abs() < 1e-12);
        assert!((ops.stiffness().get(0, 1) + 1.0).abs() < 1e-12);
        assert!(ops.stiffness().get(0, 7).abs() < 1e-12);
    }

    #[test]
    fn linear_patch_energy_is_exact() {
        // u = a x + b y restricted to a patch: the element energy equals |∇u|² · area
        let t = SurfaceMesh::flat_torus(10, 10, 1.0).unwrap();
        let (a, b) = (0.7, -1.3);
        let vals: Vec<f64> = t.vertices().iter().map(|p| a * p[0] + b * p[1]).collect();
        let f = 33; // interior cell, no seam crossing
        let [i, j, k] = t.faces()[f];
        let g = t.face_gradient(f, &vals);
        let area = t.face_areas()[f];
        // local element stiffness from cotangent weights
        let e = |p: usize, q: usize| t.edge_vector(p, q);
        let neg = |v: [f64; 3]| [-v[0], -v[1], -v[2]];
        let w_ij = 0.5 * cot(neg(e(i, k)), neg(e(j, k)));
        let w_jk = 0.5 * cot(e(i, j), e(i, k));
        let w_ki = 0.5 * cot(neg(e(i, j)), e(j, k));
        let energy = w_ij * (vals[i] - vals[j]).powi(2)
            + w_jk * (vals[j] - vals[k]).powi(2)
            + w_ki * (vals[k] - vals[i]).powi(2);
        assert!((energy - (g[0] * g[0] + g[1] * g[1]) * area).abs() < 1e-14);
        assert!((energy - (a * a + b * b) * area).abs() < 1e-14);
    }

    #[test]
    fn degenerate_face_is_named() {
        let verts = vec![[0.0, 0.0, 1.0], [1.0, 0.0, -0.3], [-0.5, 0.8, -0.3], [-0.5, -0.8, -0.3]];
        let faces = vec![[0, 1, 2], [0, 2, 3], [0, 3, 1], [1, 3, 2]];
        let mut mesh = SurfaceMesh::from_triangles(verts, faces).unwrap();
        assert!(DiscreteOperators::assemble(&mesh).is_ok());
        // move vertex 3 onto the segment between 1 and 2
        let mut v = mesh.vertices().to_vec();
        v[3] = [
            0.5 * (v[1][0] + v[2][0]),
            0.5 * (v[1][1] + v[2][1]),
            0.5 * (v[1][2] + v[2][2]),
        ];
        mesh = SurfaceMesh::from_triangles(v, mesh.faces().to_vec()).unwrap();
        match DiscreteOperators::assemble(&mesh) {
            Err(MfeError::DegenerateFace { face, .. }) => assert_eq!(face, 3),
            other => panic!("expected degenerate face error, got {other:?}"),
        }
    }

    #[test]
    fn poisson_contracts() {
        let m = SurfaceMesh::unit_sphere(3).unwrap();
        let ops = DiscreteOperators::assemble(&m).unwrap();
        let zero = ops.solve_poisson(&ops.zeros()).unwrap();
        assert!(zero.values.iter().all(|&v| v == 0.0));
        let f = random_field(&ops, 3);
        let f = ops.project_mean_zero(&f);
        let u = ops.solve_poisson(&f).unwrap();
        assert!(ops.mean(&u).abs() < 1e-10);
        let ku = ops.stiffness().mul(&u.values);
        let mf: Vec<f64> = f.values.iter().zip(ops.mass()).map(|(a, b)| a * b).collect();
        let r: Vec<f64> = ku.iter().zip(&mf).map(|(a, b)| a - b).collect();
        assert!(linalg::norm2(&r) <= 1e-10 * linalg::norm2(&mf) * 1.0001);
        let bad = f.shifted(1e-6);
        assert!(matches!(ops.solve_poisson(&bad), Err(MfeError::InvalidArgument(_))));
    }

    #[test]
    fn poisson_inverts_stiffness_on_mean_zero_fields() {
        let m = SurfaceMesh::flat_torus(12, 10, 1.3).unwrap();
        let ops = DiscreteOperators::assemble(&m).unwrap();
        let u = ops.project_mean_zero(&random_field(&ops, 11));
        let f = ops.neg_laplacian(&u);
        let back = ops.solve_poisson(&f).unwrap();
        let err = back
            .values
            .iter()
            .zip(&u.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-7, "{err}");
    }

    #[test]
    fn green_column_contracts() {
        let m = SurfaceMesh::unit_sphere(3).unwrap();
        let ops = DiscreteOperators::assemble(&m).unwrap();
        let g0 = ops.green_column(0).unwrap();
        let g7 = ops.green_column(77).unwrap();
        assert!(ops.mean(&g0.values).abs() < 1e-10);
        assert!((g0.values.values[77] - g7.values.values[0]).abs() < 1e-8);
        assert!(ops.green_column(10_000).is_err());
    }

    #[test]
    fn dense_spectrum_of_small_sphere() {
        let m = SurfaceMesh::unit_sphere(2).unwrap();
        let ops = DiscreteOperators::assemble(&m).unwrap();
        let pairs = ops.low_eigenpairs(4).unwrap();
        assert!(pairs[0].value.abs() < 1e-10);
        let c = &pairs[0].vector.values;
        assert!(c.iter().all(|&v| (v - c[0]).abs() < 1e-8));
        for p in &pairs[1..4] {
            assert!((p.value - 8.0 * PI).abs() / (8.0 * PI) < 0.05, "{}", p.value);
        }
        for i in 0..4 {
            for j in 0..4 {
                let ip = ops.inner(&pairs[i].vector, &pairs[j].vector);
                assert!((ip - if i == j { 1.0 } else { 0.0 }).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn krylov_matches_dense_route() {
        let m = SurfaceMesh::unit_sphere(3).unwrap();
        let ops = DiscreteOperators::assemble(&m).unwrap();
        let dense = ops.dense_eigenpairs(12);
        let kry = ops.krylov_eigenpairs(12).unwrap();
        for (d, k) in dense.iter().zip(&kry) {
            assert!((d.0 - k.0).abs() < 1e-8 * d.0.max(1.0), "{} vs {}", d.0, k.0);
        }
    }
}
