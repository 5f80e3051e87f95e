//! The functional `II_ρ`, its gradient and Hessian, exponential
//! normalization and Moser–Trudinger diagnostics.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{MfeError, Result};
use crate::linalg;
use crate::operators::{DiscreteOperators, Eigenpair, ScalarField};
use crate::surface::SurfaceMesh;

/// Mean field parameters `(ρ₁, ρ₂)` and the continuation scale `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MfeParams {
    pub rho1: f64,
    pub rho2: f64,
    pub t: f64,
}

impl MfeParams {
    pub fn new(rho1: f64, rho2: f64) -> Self {
        MfeParams { rho1, rho2, t: 1.0 }
    }

    pub fn with_t(self, t: f64) -> Self {
        MfeParams { t, ..self }
    }

    /// `(tρ₁, tρ₂)`.
    pub fn scaled(&self) -> (f64, f64) {
        (self.t * self.rho1, self.t * self.rho2)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho1.is_finite() && self.rho2.is_finite()) {
            return Err(MfeError::invalid("rho must be finite"));
        }
        if !(self.t.is_finite() && self.t > 0.0) {
            return Err(MfeError::invalid("t must be positive"));
        }
        Ok(())
    }
}

/// `log Σ mᵢ e^{s·vᵢ}` evaluated with a max shift. The sum is divided by the
/// computed total mass, so constants integrate exactly despite rounding in
/// the vertex areas.
pub fn log_mass_exp(mass: &[f64], values: &[f64], s: f64) -> f64 {
    let top = values.iter().map(|&v| s * v).fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return top;
    }
    let mut sum = 0.0;
    let mut total = 0.0;
    for (m, &v) in mass.iter().zip(values) {
        sum += m * (s * v - top).exp();
        total += m;
    }
    top + (sum / total).ln()
}

/// `log ∫ e^{u}` and `log ∫ e^{−u}`.
fn log_integrals(ops: &DiscreteOperators, u: &ScalarField) -> (f64, f64) {
    (
        log_mass_exp(ops.mass(), &u.values, 1.0),
        log_mass_exp(ops.mass(), &u.values, -1.0),
    )
}

/// `log ∫ e^{u − ū}`.
pub fn log_exp_centered(ops: &DiscreteOperators, u: &ScalarField) -> f64 {
    log_mass_exp(ops.mass(), &u.values, 1.0) - ops.mean(u)
}

/// `log ∫ e^{−(u − ū)}`.
pub fn log_neg_exp_centered(ops: &DiscreteOperators, u: &ScalarField) -> f64 {
    log_mass_exp(ops.mass(), &u.values, -1.0) + ops.mean(u)
}

/// Pieces of `II_{tρ}(u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyTerms {
    pub dirichlet: f64,
    pub log_exp: f64,
    pub log_neg_exp: f64,
    pub energy: f64,
}

pub fn energy_terms(ops: &DiscreteOperators, u: &ScalarField, p: &MfeParams) -> EnergyTerms {
    let (r1, r2) = p.scaled();
    let dirichlet = ops.dirichlet(u);
    let log_exp = log_exp_centered(ops, u);
    let log_neg_exp = log_neg_exp_centered(ops, u);
    let mut energy = 0.5 * dirichlet;
    if r1 != 0.0 {
        energy -= r1 * log_exp;
    }
    if r2 != 0.0 {
        energy -= r2 * log_neg_exp;
    }
    EnergyTerms {
        dirichlet,
        log_exp,
        log_neg_exp,
        energy,
    }
}

/// `½∫|∇u|² − tρ₁ log∫e^{u−ū} − tρ₂ log∫e^{−u+ū}`.
pub fn energy(ops: &DiscreteOperators, u: &ScalarField, p: &MfeParams) -> f64 {
    energy_terms(ops, u, p).energy
}

/// `II(u + d) − II(u)` computed from differences, so that changes far below
/// the rounding level of `II(u)` keep their sign.
pub fn energy_change(ops: &DiscreteOperators, u: &ScalarField, d: &ScalarField, p: &MfeParams) -> f64 {
    let (r1, r2) = p.scaled();
    let k = ops.stiffness();
    let ku = k.mul(&u.values);
    let mut change = crate::linalg::dot(&ku, &d.values) + 0.5 * k.quadratic_form(&d.values);
    let dm = ops.mean(d);
    let log_ratio = |s: f64| {
        let top = u.values.iter().map(|&v| s * v).fold(f64::NEG_INFINITY, f64::max);
        let mut num = 0.0;
        let mut den = 0.0;
        for ((&v, &dv), m) in u.values.iter().zip(&d.values).zip(ops.mass()) {
            let w = m * (s * v - top).exp();
            num += w * (s * dv).exp_m1();
            den += w;
        }
        (num / den).ln_1p()
    };
    if r1 != 0.0 {
        change -= r1 * (log_ratio(1.0) - dm);
    }
    if r2 != 0.0 {
        change -= r2 * (log_ratio(-1.0) + dm);
    }
    change
}

/// The two normalized densities `e^{u}/∫e^{u}` and `e^{−u}/∫e^{−u}`.
pub fn densities(ops: &DiscreteOperators, u: &ScalarField) -> (Vec<f64>, Vec<f64>) {
    let (l1, l2) = log_integrals(ops, u);
    (
        u.values.iter().map(|&v| (v - l1).exp()).collect(),
        u.values.iter().map(|&v| (-v - l2).exp()).collect(),
    )
}

/// Euler–Lagrange residual
/// `−Δu − tρ₁(e^u/∫e^u − 1) + tρ₂(e^{−u}/∫e^{−u} − 1)`, the mass-gradient of
/// [`energy`].
pub fn residual(ops: &DiscreteOperators, u: &ScalarField, p: &MfeParams) -> ScalarField {
    let (r1, r2) = p.scaled();
    let lap = ops.neg_laplacian(u);
    let (d1, d2) = densities(ops, u);
    ops.field(
        lap.values
            .iter()
            .zip(d1.iter().zip(&d2))
            .map(|(l, (a, b))| l - r1 * (a - 1.0) + r2 * (b - 1.0))
            .collect(),
    )
}

/// Mass norm of the residual.
pub fn residual_norm(ops: &DiscreteOperators, u: &ScalarField, p: &MfeParams) -> f64 {
    ops.mass_norm(&residual(ops, u, p))
}

/// `u − log∫e^u`, so that `∫e^{u'} = 1`. A field that is already normalized
/// up to rounding is returned unchanged.
pub fn normalize_exp(ops: &DiscreteOperators, u: &ScalarField) -> ScalarField {
    let l = log_mass_exp(ops.mass(), &u.values, 1.0);
    let scale = u.values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    if l.abs() <= 8.0 * f64::EPSILON * scale {
        return u.clone();
    }
    u.shifted(-l)
}

/// `∫ e^{−p u}`.
pub fn neg_exp_moment(ops: &DiscreteOperators, u: &ScalarField, p: f64) -> f64 {
    log_mass_exp(ops.mass(), &u.values, -p).exp()
}

/// Second variation of `II_{tρ}` at `u`, as an operator on vertex vectors.
///
/// `H = K − tρ₁(diag w₁ − w₁w₁ᵀ) − tρ₂(diag w₂ − w₂w₂ᵀ)` with
/// `wᵢ = M·densityᵢ`.
pub struct Hessian<'a> {
    ops: &'a DiscreteOperators,
    r1: f64,
    r2: f64,
    w1: Vec<f64>,
    w2: Vec<f64>,
}

impl<'a> Hessian<'a> {
    pub fn at(ops: &'a DiscreteOperators, u: &ScalarField, p: &MfeParams) -> Self {
        let (r1, r2) = p.scaled();
        let (d1, d2) = densities(ops, u);
        let m = ops.mass();
        Hessian {
            ops,
            r1,
            r2,
            w1: d1.iter().zip(m).map(|(d, m)| d * m).collect(),
            w2: d2.iter().zip(m).map(|(d, m)| d * m).collect(),
        }
    }

    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        self.ops.stiffness().matvec(v, out);
        let c1 = linalg::dot(&self.w1, v);
        let c2 = linalg::dot(&self.w2, v);
        for i in 0..v.len() {
            out[i] -= self.r1 * (self.w1[i] * v[i] - self.w1[i] * c1);
            out[i] -= self.r2 * (self.w2[i] * v[i] - self.w2[i] * c2);
        }
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut h = self.ops.stiffness().to_dense();
        let n = self.w1.len();
        for i in 0..n {
            h[(i, i)] -= self.r1 * self.w1[i] + self.r2 * self.w2[i];
            for j in 0..n {
                h[(i, j)] += self.r1 * self.w1[i] * self.w1[j] + self.r2 * self.w2[i] * self.w2[j];
            }
        }
        h
    }

    /// Diagonal of `H`, clamped to stay positive, for preconditioning.
    pub fn jacobi(&self) -> Vec<f64> {
        let k = self.ops.stiffness().diagonal();
        k.iter()
            .enumerate()
            .map(|(i, &d)| {
                let h = d - self.r1 * self.w1[i] * (1.0 - self.w1[i]) - self.r2 * self.w2[i] * (1.0 - self.w2[i]);
                1.0 / h.abs().max(0.1 * d).max(f64::MIN_POSITIVE)
            })
            .collect()
    }
}

/// Generator for the `index`-th draw of an experiment with the given seed;
/// independent of how draws are scheduled across threads.
pub fn seeded_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Random smooth field `a · Σ ξⱼ φⱼ / √λⱼ` over the given non-constant
/// eigenmodes, `ξⱼ` standard normal; each mode carries unit expected
/// Dirichlet energy before scaling.
pub fn modal_field(ops: &DiscreteOperators, modes: &[Eigenpair], amplitude: f64, rng: &mut impl Rng) -> ScalarField {
    let mut v = vec![0.0; ops.n()];
    for m in modes.iter().filter(|m| m.value > 1e-9) {
        let xi: f64 = rng.sample(StandardNormal);
        linalg::axpy(amplitude * xi / m.value.sqrt(), &m.vector.values, &mut v);
    }
    ops.field(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MtReport {
    pub lhs: f64,
    pub dirichlet: f64,
    /// `None` when `u` is constant.
    pub ratio: Option<f64>,
    pub offset: f64,
    pub constant: bool,
}

/// Compares `log∫e^{u−ū}` with `∫|∇u|²/(16π)`.
pub fn mt_check(ops: &DiscreteOperators, u: &ScalarField) -> MtReport {
    let lhs = log_exp_centered(ops, u);
    let dirichlet = ops.dirichlet(u);
    let constant = u.max() - u.min() <= 1e-14 * (1.0 + u.max().abs());
    let (lhs, dirichlet) = if constant { (0.0, 0.0) } else { (lhs, dirichlet) };
    let scaled = dirichlet / (16.0 * PI);
    MtReport {
        lhs,
        dirichlet,
        ratio: if constant { None } else { Some(lhs / scaled) },
        offset: lhs - scaled,
        constant,
    }
}

/// How a random modal field is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldScale {
    /// Multiply the draw by a fixed amplitude.
    Amplitude(f64),
    /// Rescale the draw to this Dirichlet energy.
    Dirichlet(f64),
}

impl FieldScale {
    pub fn validate(&self) -> Result<()> {
        match *self {
            FieldScale::Amplitude(a) | FieldScale::Dirichlet(a) if a > 0.0 && a.is_finite() => Ok(()),
            _ => Err(MfeError::invalid("field scale must be positive")),
        }
    }

    pub fn apply(&self, ops: &DiscreteOperators, u: ScalarField) -> ScalarField {
        match *self {
            FieldScale::Amplitude(a) => u.scaled(a),
            FieldScale::Dirichlet(d) => {
                let now = ops.dirichlet(&u);
                if now > 0.0 {
                    u.scaled((d / now).sqrt())
                } else {
                    u
                }
            }
        }
    }
}

/// Offsets of [`mt_check`] over seeded random fields.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MtSweep {
    pub count: usize,
    pub max_offset: f64,
    /// Maxima over the first and second half of the draws.
    pub half_max: [f64; 2],
    /// `|a − b| / max(|a|, |b|)` for the two half maxima.
    pub half_variation: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub finite: bool,
}

/// Draws `count` fields from `modes` with the given seed and scale and
/// records the largest MT offset.
pub fn mt_sweep(
    ops: &DiscreteOperators,
    modes: &[Eigenpair],
    count: usize,
    seed: u64,
    scale: FieldScale,
) -> Result<MtSweep> {
    scale.validate()?;
    if count < 2 {
        return Err(MfeError::invalid("an MT sweep needs at least two fields"));
    }
    let reports = crate::par::map_range(count, |i| {
        let mut rng = seeded_rng(seed, i as u64);
        mt_check(ops, &scale.apply(ops, modal_field(ops, modes, 1.0, &mut rng)))
    });
    let max = |r: &[MtReport]| r.iter().map(|r| r.offset).fold(f64::NEG_INFINITY, f64::max);
    let (a, b) = (max(&reports[..count / 2]), max(&reports[count / 2..]));
    let ratios = reports.iter().filter_map(|r| r.ratio);
    Ok(MtSweep {
        count,
        max_offset: a.max(b),
        half_max: [a, b],
        half_variation: (a - b).abs() / a.abs().max(b.abs()),
        min_ratio: ratios.clone().fold(f64::INFINITY, f64::min),
        max_ratio: ratios.fold(f64::NEG_INFINITY, f64::max),
        finite: reports.iter().all(|r| r.offset.is_finite()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImprovedMtReport {
    pub ell: usize,
    pub hypothesis_ok: bool,
    /// `∫_{Sᵢ}e^u / ∫e^u` per set.
    pub fractions: Vec<f64>,
    pub min_set_distance: f64,
    pub lhs: f64,
    pub rhs_coeff: f64,
    pub dirichlet: f64,
    /// `rhs_coeff·dirichlet − lhs`; absent when the hypothesis fails.
    pub slack: Option<f64>,
}

/// Evaluates the improved inequality
/// `ℓ log∫e^{u−ū} + log∫e^{−(u−ū)} ≤ C + ∫|∇u|²/(16π − ε̃)` for fields whose
/// exponential mass is spread over `ℓ` separated sets.
pub fn improved_mt_check(
    mesh: &SurfaceMesh,
    ops: &DiscreteOperators,
    u: &ScalarField,
    sets: &[Vec<usize>],
    gamma0: f64,
    eps_tilde: f64,
) -> Result<ImprovedMtReport> {
    let ell = sets.len();
    if ell == 0 {
        return Err(MfeError::invalid("at least one set is required"));
    }
    if !(gamma0 > 0.0 && gamma0 < 1.0 / ell as f64) {
        return Err(MfeError::invalid(format!("gamma0 must lie in (0, 1/{ell})")));
    }
    if !(eps_tilde > 0.0 && eps_tilde < 16.0 * PI) {
        return Err(MfeError::invalid("eps_tilde must lie in (0, 16π)"));
    }
    let n = ops.n();
    let mut owner = vec![usize::MAX; n];
    for (s, set) in sets.iter().enumerate() {
        if set.is_empty() {
            return Err(MfeError::invalid(format!("set {s} is empty")));
        }
        for &v in set {
            if v >= n {
                return Err(MfeError::invalid(format!("vertex {v} out of range")));
            }
            if owner[v] != usize::MAX && owner[v] != s {
                return Err(MfeError::invalid(format!(
                    "sets {} and {s} overlap at vertex {v}",
                    owner[v]
                )));
            }
            owner[v] = s;
        }
    }
    let mut min_set_distance = f64::INFINITY;
    for (s, set) in sets.iter().enumerate() {
        for &a in set {
            let d = mesh.distances_from(a);
            for (v, &o) in owner.iter().enumerate() {
                if o != usize::MAX && o > s {
                    min_set_distance = min_set_distance.min(d[v]);
                }
            }
        }
    }
    if ell == 1 {
        min_set_distance = f64::INFINITY;
    }
    let (d1, _) = densities(ops, u);
    let fractions: Vec<f64> = sets
        .iter()
        .map(|set| set.iter().map(|&v| ops.mass()[v] * d1[v]).sum())
        .collect();
    let hypothesis_ok = fractions.iter().all(|&f| f >= gamma0);
    let lhs = ell as f64 * log_exp_centered(ops, u) + log_neg_exp_centered(ops, u);
    let rhs_coeff = 1.0 / (16.0 * PI - eps_tilde);
    let dirichlet = ops.dirichlet(u);
    Ok(ImprovedMtReport {
        ell,
        hypothesis_ok,
        fractions,
        min_set_distance,
        lhs,
        rhs_coeff,
        dirichlet,
        slack: hypothesis_ok.then_some(rhs_coeff * dirichlet - lhs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (SurfaceMesh, DiscreteOperators) {
        let m = SurfaceMesh::unit_sphere(3).unwrap();
        let ops = DiscreteOperators::assemble(&m).unwrap();
        (m, ops)
    }

    fn rand_field(ops: &DiscreteOperators, rng: &mut ChaCha8Rng, amp: f64) -> ScalarField {
        ops.field((0..ops.n()).map(|_| amp * (rng.random::<f64>() * 2.0 - 1.0)).collect())
    }

    #[test]
    fn constants_have_zero_energy() {
        let (_, ops) = setup();
        let p = MfeParams::new(7.0, 3.0);
        let c = ops.zeros().shifted(4.2);
        assert!(energy(&ops, &c, &p).abs() < 1e-12);
        assert!(energy(&ops, &ops.zeros(), &p) == 0.0);
    }

    #[test]
    fn energy_change_matches_difference() {
        let (_, ops) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = MfeParams::new(20.0, 5.0);
        for _ in 0..5 {
            let u = rand_field(&ops, &mut rng, 2.0);
            let d = rand_field(&ops, &mut rng, 0.5);
            let direct = energy(&ops, &u.add_scaled(1.0, &d), &p) - energy(&ops, &u, &p);
            assert!((energy_change(&ops, &u, &d, &p) - direct).abs() < 1e-11 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn translation_invariance() {
        let (_, ops) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = MfeParams::new(20.0, 5.0);
        for _ in 0..10 {
            let u = rand_field(&ops, &mut rng, 3.0);
            let e = energy(&ops, &u, &p);
            let e2 = energy(&ops, &u.shifted(17.5), &p);
            assert!((e - e2).abs() <= 1e-12 * e.abs().max(1.0));
        }
    }

    #[test]
    fn no_overflow_for_large_fields() {
        let (_, ops) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = rand_field(&ops, &mut rng, 2000.0);
        let p = MfeParams::new(30.0, 30.0);
        assert!(energy(&ops, &u, &p).is_finite());
        assert!(residual(&ops, &u, &p).is_finite());
    }

    #[test]
    fn quadratic_behaviour_along_first_eigenfunction() {
        let (_, ops) = setup();
        let pairs = ops.low_eigenpairs(2).unwrap();
        let (lambda1, phi) = (pairs[1].value, &pairs[1].vector);
        let p = MfeParams::new(5.0, 2.0);
        let a = 1e-3;
        let u = phi.scaled(a);
        let expect = 0.5 * a * a * (lambda1 - 7.0) * ops.inner(phi, phi);
        let got = energy(&ops, &u, &p);
        assert!((got - expect).abs() < 10.0 * a.powi(3), "{got} vs {expect}");
    }

    #[test]
    fn residual_contracts() {
        let (_, ops) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = MfeParams::new(12.0, 4.0).with_t(1.1);
        assert!(residual(&ops, &ops.zeros(), &p).values.iter().all(|&r| r == 0.0));
        for _ in 0..10 {
            let u = rand_field(&ops, &mut rng, 2.0);
            let v = rand_field(&ops, &mut rng, 1.0);
            let r = residual(&ops, &u, &p);
            assert!(ops.mean(&r).abs() < 1e-10);
            let eps = 1e-5;
            let fd =
                (energy(&ops, &u.add_scaled(eps, &v), &p) - energy(&ops, &u.add_scaled(-eps, &v), &p)) / (2.0 * eps);
            let an = ops.inner(&r, &v);
            assert!((fd - an).abs() <= 1e-6 * an.abs().max(1e-3), "{fd} vs {an}");
        }
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let (_, ops) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = MfeParams::new(30.0, 9.0);
        let u = rand_field(&ops, &mut rng, 1.0);
        let v = rand_field(&ops, &mut rng, 1.0);
        let h = Hessian::at(&ops, &u, &p);
        let mut hv = vec![0.0; ops.n()];
        h.apply(&v.values, &mut hv);
        let eps = 1e-6;
        let gp = residual(&ops, &u.add_scaled(eps, &v), &p);
        let gm = residual(&ops, &u.add_scaled(-eps, &v), &p);
        for i in 0..ops.n() {
            let fd = (gp.values[i] - gm.values[i]) / (2.0 * eps) * ops.mass()[i];
            assert!(
                (fd - hv[i]).abs() < 1e-6 * (1.0 + hv[i].abs()),
                "{i}: {fd} vs {}",
                hv[i]
            );
        }
        let dense = h.to_dense();
        let dv = &dense * nalgebra::DVector::from_column_slice(&v.values);
        for i in 0..ops.n() {
            assert!((dv[i] - hv[i]).abs() < 1e-10 * (1.0 + hv[i].abs()));
        }
    }

    #[test]
    fn normalization_and_jensen() {
        let (_, ops) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(normalize_exp(&ops, &ops.zeros()).values, ops.zeros().values);
        for _ in 0..20 {
            let u = rand_field(&ops, &mut rng, 4.0);
            let n1 = normalize_exp(&ops, &u);
            let n2 = normalize_exp(&ops, &n1);
            assert!((log_mass_exp(ops.mass(), &n1.values, 1.0)).abs() < 1e-14);
            assert!(ops.mean(&n1) <= 1e-12);
            assert!(log_neg_exp_centered(&ops, &n1) >= -1e-12);
            assert!(n1.values.iter().zip(&n2.values).all(|(a, b)| (a - b).abs() < 1e-14));
        }
    }

    #[test]
    fn neg_exp_moment_contracts() {
        let (_, ops) = setup();
        assert!((neg_exp_moment(&ops, &ops.zeros(), 3.0) - 1.0).abs() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let u = normalize_exp(&ops, &rand_field(&ops, &mut rng, 2.0));
        assert!(u.min() <= 0.0);
        assert!(neg_exp_moment(&ops, &u, 1.0) <= neg_exp_moment(&ops, &u, 2.0));
    }

    #[test]
    fn mt_check_flags_constants() {
        let (_, ops) = setup();
        let r = mt_check(&ops, &ops.zeros());
        assert_eq!(r.lhs, 0.0);
        assert!(r.constant && r.ratio.is_none());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let r = mt_check(&ops, &rand_field(&ops, &mut rng, 1.0));
        assert!(!r.constant && r.ratio.is_some() && r.lhs > 0.0);
    }

    #[test]
    fn improved_mt_on_zero_and_overlap() {
        let (mesh, ops) = setup();
        let far = mesh.farthest_point_sample(2, 0);
        let ball = |c: usize| -> Vec<usize> {
            let d = mesh.distances_from(c);
            (0..mesh.num_vertices()).filter(|&v| d[v] < 0.1).collect()
        };
        let sets = vec![ball(far[0]), ball(far[1])];
        let r = improved_mt_check(&mesh, &ops, &ops.zeros(), &sets, 0.01, 1.0).unwrap();
        assert!(r.lhs.abs() < 1e-14);
        assert!(r.min_set_distance > 0.3);
        let overlapping = vec![ball(far[0]), ball(far[0])];
        assert!(matches!(
            improved_mt_check(&mesh, &ops, &ops.zeros(), &overlapping, 0.01, 1.0),
            Err(MfeError::InvalidArgument(_))
        ));
        assert!(improved_mt_check(&mesh, &ops, &ops.zeros(), &sets, 0.6, 1.0).is_err());
    }
}
