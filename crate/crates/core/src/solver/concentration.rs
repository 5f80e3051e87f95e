use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{MfeError, Result};
use crate::functional;
use crate::operators::{DiscreteOperators, ScalarField};
use crate::surface::SurfaceMesh;

/// One member of a family ordered by a blow-up parameter.
#[derive(Debug, Clone)]
pub struct FamilyMember {
    pub u: ScalarField,
    pub rho1: f64,
    pub rho2: f64,
    pub param: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConcentrationOptions {
    /// Peaks must exceed this many standard deviations of `u − ū`.
    pub threshold_sigmas: f64,
    /// Least growth of the local maximum across the family.
    pub growth_min: f64,
    /// Radius of the mass balls; `10h` when absent.
    pub r_mass: Option<f64>,
}

impl Default for ConcentrationOptions {
    fn default() -> Self {
        ConcentrationOptions {
            threshold_sigmas: 3.0,
            growth_min: 1.0,
            r_mass: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    Compactness,
    OneSided,
    TwoSided,
}

/// Local masses, aligned with `points_S1` and `points_S2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Masses {
    pub m1: Vec<f64>,
    pub m2: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantizationRow {
    pub vertex: usize,
    pub m1: f64,
    pub m2: f64,
    /// `(m₁ − m₂)² − 8π(m₁ + m₂)`.
    pub residual: f64,
}

/// Local mass at a point of only one of the two sets, against `8π`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OneSidedRow {
    pub vertex: usize,
    /// 1 for `S₁`, 2 for `S₂`.
    pub set: u8,
    pub mass: f64,
    /// `mass / 8π − 1`.
    pub relative_error: f64,
}

/// Splitting `u = v + w` of one member, with `v` mean-zero and
/// `−Δv = −ρ₂(e^{−u}/∫e^{−u} − 1)`. Then `e^u = e^v e^w` and `w` solves the
/// `ρ₁` equation with weight `e^v`; a bounded `v` means the `e^{−u}` side
/// stays regular while any blow-up is carried by `w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitRow {
    pub param: f64,
    pub v_sup: f64,
    pub w_oscillation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[allow(non_snake_case)]
pub struct ConcentrationReport {
    pub alternative: Alternative,
    pub points_S1: Vec<usize>,
    pub points_S2: Vec<usize>,
    pub masses: Masses,
    pub quantization_residual: Vec<QuantizationRow>,
    pub one_sided: Vec<OneSidedRow>,
    /// `ρᵢ` minus the masses of the detected points, last member.
    pub regular_mass: [f64; 2],
    pub r_mass: f64,
    pub family_len: usize,
    pub split: Vec<SplitRow>,
}

/// Aitken Δ² limit of the last three values; the last value when the
/// differences do not contract.
pub fn aitken(seq: &[f64]) -> f64 {
    let n = seq.len();
    let last = seq[n - 1];
    if n < 3 {
        return last;
    }
    let (a, b, c) = (seq[n - 3], seq[n - 2], seq[n - 1]);
    let (d1, d2) = (b - a, c - b);
    let denom = d2 - d1;
    if denom == 0.0 || d1 == 0.0 || (d2 / d1).abs() >= 1.0 {
        return last;
    }
    let lim = c - d2 * d2 / denom;
    if lim.is_finite() {
        lim
    } else {
        last
    }
}

fn split_row(ops: &DiscreteOperators, f: &FamilyMember) -> Result<SplitRow> {
    let v = if f.rho2 == 0.0 {
        ops.zeros()
    } else {
        let (_, d2) = functional::densities(ops, &f.u);
        ops.solve_poisson(&ops.field(d2.iter().map(|d| f.rho2 * (1.0 - d)).collect()))?
    };
    let w = f.u.add_scaled(-1.0, &v);
    Ok(SplitRow {
        param: f.param,
        v_sup: v.values.iter().fold(0.0f64, |m, x| m.max(x.abs())),
        w_oscillation: w.max() - w.min(),
    })
}

fn weighted_std(ops: &DiscreteOperators, v: &[f64]) -> f64 {
    let m = ops.mass();
    let total: f64 = m.iter().sum();
    let mean = v.iter().zip(m).map(|(x, w)| w * x).sum::<f64>() / total;
    (v.iter().zip(m).map(|(x, w)| w * (x - mean).powi(2)).sum::<f64>() / total).sqrt()
}

/// Peaks of `s·u` that stay above the threshold and grow across the family.
fn detect(
    mesh: &SurfaceMesh,
    ops: &DiscreteOperators,
    centered: &[Vec<f64>],
    opts: &ConcentrationOptions,
    r: f64,
) -> Vec<usize> {
    let last = centered.last().unwrap();
    let cut = opts.threshold_sigmas * weighted_std(ops, last);
    let mut cands: Vec<usize> = (0..last.len())
        .filter(|&v| last[v] > cut && mesh.neighbors(v).all(|w| last[w] <= last[v]))
        .collect();
    cands.sort_by(|&a, &b| last[b].total_cmp(&last[a]).then(a.cmp(&b)));
    let mut picked: Vec<usize> = Vec::new();
    for x in cands {
        if picked.iter().any(|&y| mesh.geodesic_distance(x, y) < r) {
            continue;
        }
        let ball = mesh.ball(x, r);
        let peaks: Vec<f64> = centered
            .iter()
            .map(|v| ball.iter().map(|&(i, _)| v[i]).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        let rising = peaks.windows(2).all(|w| w[1] >= w[0] - 1e-12);
        if rising && peaks[peaks.len() - 1] - peaks[0] >= opts.growth_min {
            picked.push(x);
        }
    }
    picked.sort_unstable();
    picked
}

/// `ρ · ∫_{B(x,r)} e^{s u} / ∫ e^{s u}` for each member, extrapolated.
fn local_mass(ops: &DiscreteOperators, family: &[FamilyMember], ball: &[(usize, f64)], side: usize) -> (f64, f64) {
    let m = ops.mass();
    let seq: Vec<f64> = family
        .iter()
        .map(|f| {
            let (d1, d2) = functional::densities(ops, &f.u);
            let (d, rho) = if side == 1 { (d1, f.rho1) } else { (d2, f.rho2) };
            let total: f64 = d.iter().zip(m).map(|(a, b)| a * b).sum();
            let inside: f64 = ball.iter().map(|&(i, _)| d[i] * m[i]).sum();
            rho * inside / total
        })
        .collect();
    (aitken(&seq), seq[seq.len() - 1])
}

/// Classifies a family by where `e^{u}` and `e^{−u}` concentrate.
///
/// `S₁` holds peaks of `u − ū` above `threshold_sigmas` standard deviations
/// at the last member whose local maximum is non-decreasing along the family
/// and grows by at least `growth_min`; `S₂` is the same for `−u`. Points of
/// `S₂` within `r_mass` of a point of `S₁` are identified with it. Masses are
/// taken on balls of radius `r_mass` and extrapolated by Aitken's Δ².
pub fn classify_concentration(
    mesh: &SurfaceMesh,
    ops: &DiscreteOperators,
    family: &[FamilyMember],
    opts: &ConcentrationOptions,
) -> Result<ConcentrationReport> {
    if family.len() < 3 {
        return Err(MfeError::invalid(format!(
            "family has {} members, at least 3 are needed for a trend",
            family.len()
        )));
    }
    if mesh.id() != ops.mesh_id() {
        return Err(MfeError::invalid("operators belong to a different mesh"));
    }
    for f in family {
        if f.u.mesh_id != ops.mesh_id() || f.u.len() != ops.n() {
            return Err(MfeError::invalid("family member lives on a different mesh"));
        }
        if !f.u.is_finite() || !f.rho1.is_finite() || !f.rho2.is_finite() {
            return Err(MfeError::invalid("family member is not finite"));
        }
    }
    if !(opts.threshold_sigmas > 0.0 && opts.growth_min >= 0.0) {
        return Err(MfeError::invalid("thresholds must be positive"));
    }
    let r = opts.r_mass.unwrap_or(10.0 * mesh.mean_edge_length());
    if !(r > 0.0 && r.is_finite()) {
        return Err(MfeError::invalid("r_mass must be positive"));
    }
    let centered = |s: f64| -> Vec<Vec<f64>> {
        family
            .iter()
            .map(|f| {
                let mean = ops.mean(&f.u);
                f.u.values.iter().map(|&x| s * (x - mean)).collect()
            })
            .collect()
    };
    let s1 = detect(mesh, ops, &centered(1.0), opts, r);
    let mut s2 = detect(mesh, ops, &centered(-1.0), opts, r);
    for y in s2.iter_mut() {
        if let Some(&x) = s1.iter().find(|&&x| mesh.geodesic_distance(x, *y) < r) {
            *y = x;
        }
    }
    s2.sort_unstable();
    s2.dedup();

    let last = family.last().unwrap();
    let mut m1 = Vec::new();
    let mut m2 = Vec::new();
    let mut captured = [0.0, 0.0];
    for &x in &s1 {
        let (m, now) = local_mass(ops, family, &mesh.ball(x, r), 1);
        m1.push(m);
        captured[0] += now;
    }
    for &y in &s2 {
        let (m, now) = local_mass(ops, family, &mesh.ball(y, r), 2);
        m2.push(m);
        captured[1] += now;
    }
    let mut quantization_residual = Vec::new();
    let mut one_sided = Vec::new();
    for (i, &x) in s1.iter().enumerate() {
        match s2.iter().position(|&y| y == x) {
            Some(j) => quantization_residual.push(QuantizationRow {
                vertex: x,
                m1: m1[i],
                m2: m2[j],
                residual: (m1[i] - m2[j]).powi(2) - 8.0 * PI * (m1[i] + m2[j]),
            }),
            None => one_sided.push(OneSidedRow {
                vertex: x,
                set: 1,
                mass: m1[i],
                relative_error: m1[i] / (8.0 * PI) - 1.0,
            }),
        }
    }
    for (j, &y) in s2.iter().enumerate() {
        if !s1.contains(&y) {
            one_sided.push(OneSidedRow {
                vertex: y,
                set: 2,
                mass: m2[j],
                relative_error: m2[j] / (8.0 * PI) - 1.0,
            });
        }
    }
    let alternative = match (s1.is_empty(), s2.is_empty()) {
        (true, true) => Alternative::Compactness,
        (false, false) => Alternative::TwoSided,
        _ => Alternative::OneSided,
    };
    Ok(ConcentrationReport {
        alternative,
        regular_mass: [last.rho1 - captured[0], last.rho2 - captured[1]],
        points_S1: s1,
        points_S2: s2,
        masses: Masses { m1, m2 },
        quantization_residual,
        one_sided,
        r_mass: r,
        family_len: family.len(),
        split: family.iter().map(|f| split_row(ops, f)).collect::<Result<_>>()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barycenter::{test_function, BarycenterMeasure, BubbleScale};

    fn bubble_family(mesh: &SurfaceMesh, ops: &DiscreteOperators, x: usize, lambdas: &[f64]) -> Vec<FamilyMember> {
        lambdas
            .iter()
            .map(|&l| FamilyMember {
                u: functional::normalize_exp(
                    ops,
                    &test_function(mesh, &BarycenterMeasure::dirac(x), BubbleScale::new(l).unwrap()),
                ),
                rho1: 8.0 * PI,
                rho2: 0.0,
                param: l,
            })
            .collect()
    }

    #[test]
    fn aitken_is_exact_on_geometric_sequences() {
        let s: Vec<f64> = (0..4).map(|i| 3.0 - 0.5f64.powi(i)).collect();
        assert!((aitken(&s) - 3.0).abs() < 1e-14);
        assert_eq!(aitken(&[1.0, 2.0, 4.0]), 4.0);
        assert_eq!(aitken(&[1.0, 1.0, 1.0]), 1.0);
    }

    #[test]
    fn short_family_is_rejected() {
        let mesh = SurfaceMesh::unit_sphere(2).unwrap();
        let ops = DiscreteOperators::assemble(&mesh).unwrap();
        let fam = bubble_family(&mesh, &ops, 0, &[50.0, 100.0]);
        let err = classify_concentration(&mesh, &ops, &fam, &ConcentrationOptions::default());
        assert!(matches!(err, Err(MfeError::InvalidArgument(_))));
    }

    #[test]
    fn single_bubble_is_one_sided() {
        let mesh = SurfaceMesh::unit_sphere(4).unwrap();
        let ops = DiscreteOperators::assemble(&mesh).unwrap();
        let fam = bubble_family(&mesh, &ops, 7, &[50.0, 100.0, 200.0]);
        let rep = classify_concentration(&mesh, &ops, &fam, &ConcentrationOptions::default()).unwrap();
        assert_eq!(rep.alternative, Alternative::OneSided);
        assert_eq!(rep.points_S1, vec![7]);
        assert!(rep.points_S2.is_empty() && rep.quantization_residual.is_empty());
        assert!(rep.split.iter().all(|s| s.v_sup == 0.0));
        assert!(rep.split[2].w_oscillation > rep.split[0].w_oscillation);
        assert!(rep.one_sided[0].relative_error.abs() < 0.05, "{:?}", rep.one_sided);
    }

    #[test]
    fn flat_family_is_compact() {
        let mesh = SurfaceMesh::unit_sphere(3).unwrap();
        let ops = DiscreteOperators::assemble(&mesh).unwrap();
        let modes = ops.low_eigenpairs(10).unwrap();
        let fam: Vec<FamilyMember> = (0..4)
            .map(|i| {
                let mut rng = functional::seeded_rng(3, i);
                FamilyMember {
                    u: functional::modal_field(&ops, &modes[1..], 1.0, &mut rng),
                    rho1: 4.0,
                    rho2: 4.0,
                    param: i as f64,
                }
            })
            .collect();
        let rep = classify_concentration(&mesh, &ops, &fam, &ConcentrationOptions::default()).unwrap();
        assert_eq!(rep.alternative, Alternative::Compactness);
        assert!(rep.masses.m1.is_empty() && rep.masses.m2.is_empty());
    }

    #[test]
    fn distant_pair_has_no_common_point() {
        let mesh = SurfaceMesh::unit_sphere(4).unwrap();
        let ops = DiscreteOperators::assemble(&mesh).unwrap();
        let d = mesh.distances_from(0);
        let far = crate::surface::argmax(&d);
        let fam: Vec<FamilyMember> = [50.0, 100.0, 200.0]
            .iter()
            .map(|&l| {
                let s = BubbleScale::new(l).unwrap();
                let u = test_function(&mesh, &BarycenterMeasure::dirac(0), s)
                    .add_scaled(-1.0, &test_function(&mesh, &BarycenterMeasure::dirac(far), s));
                FamilyMember {
                    u,
                    rho1: 8.0 * PI,
                    rho2: 8.0 * PI,
                    param: l,
                }
            })
            .collect();
        let rep = classify_concentration(&mesh, &ops, &fam, &ConcentrationOptions::default()).unwrap();
        assert_eq!(rep.alternative, Alternative::TwoSided);
        assert_eq!(rep.points_S1, vec![0]);
        assert_eq!(rep.points_S2, vec![far]);
        assert!(rep.quantization_residual.is_empty());
        assert_eq!(rep.one_sided.len(), 2);
        // e^{−u} concentrates too, so v is not bounded along the family
        assert!(rep.split[2].v_sup > rep.split[0].v_sup + 1.0, "{:?}", rep.split);
    }
}
