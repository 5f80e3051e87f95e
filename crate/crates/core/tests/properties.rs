use std::f64::consts::PI;
use std::sync::OnceLock;

use mfe_core::barycenter::{self, BarycenterMeasure, BubbleScale};
use mfe_core::cli::config::parse_rho;
use mfe_core::functional::{self, MfeParams};
use mfe_core::solver::{self, aitken};
use mfe_core::{DiscreteOperators, ScalarField, SurfaceMesh};
use proptest::prelude::*;

struct Fixture {
    mesh: SurfaceMesh,
    ops: DiscreteOperators,
}

impl std::fmt::Debug for Fixture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "mesh with {} vertices", self.mesh.num_vertices())
    }
}

fn sphere() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let mesh = SurfaceMesh::unit_sphere(2).unwrap();
        let ops = DiscreteOperators::assemble(&mesh).unwrap();
        Fixture { mesh, ops }
    })
}

fn torus() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let mesh = SurfaceMesh::flat_torus(9, 7, 1.3).unwrap();
        let ops = DiscreteOperators::assemble(&mesh).unwrap();
        Fixture { mesh, ops }
    })
}

fn field(f: &Fixture, seed: u64, amp: f64) -> ScalarField {
    let n = f.ops.n();
    let mut rng = functional::seeded_rng(seed, 0);
    use rand::Rng;
    f.ops
        .field((0..n).map(|_| amp * (2.0 * rng.random::<f64>() - 1.0)).collect())
}

fn fixtures() -> impl Strategy<Value = &'static Fixture> {
    any::<bool>().prop_map(|s| if s { sphere() } else { torus() })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn stiffness_is_psd_with_constant_kernel(fx in fixtures(), seed in any::<u64>(), c in -5.0f64..5.0) {
        let u = field(fx, seed, 3.0);
        prop_assert!(fx.ops.stiffness().quadratic_form(&u.values) >= -1e-12);
        let q = fx.ops.stiffness().quadratic_form(&u.shifted(c).values);
        prop_assert!((q - fx.ops.stiffness().quadratic_form(&u.values)).abs() < 1e-9 * q.abs().max(1.0));
    }

    #[test]
    fn energy_is_translation_invariant(fx in fixtures(), seed in any::<u64>(), c in -20.0f64..20.0,
                                        r1 in -30.0f64..60.0, r2 in -30.0f64..60.0) {
        let p = MfeParams::new(r1, r2);
        let u = field(fx, seed, 2.0);
        let e = functional::energy(&fx.ops, &u, &p);
        let e2 = functional::energy(&fx.ops, &u.shifted(c), &p);
        prop_assert!((e - e2).abs() <= 1e-11 * e.abs().max(1.0));
    }

    #[test]
    fn zero_is_always_critical(r1 in -100.0f64..100.0, r2 in -100.0f64..100.0, t in 0.5f64..1.5) {
        let fx = torus();
        let p = MfeParams::new(r1, r2).with_t(t);
        prop_assert_eq!(functional::residual_norm(&fx.ops, &fx.ops.zeros(), &p), 0.0);
        prop_assert_eq!(functional::energy(&fx.ops, &fx.ops.zeros(), &p), 0.0);
    }

    #[test]
    fn normalize_exp_is_idempotent(fx in fixtures(), seed in any::<u64>(), amp in 0.01f64..8.0) {
        let u = functional::normalize_exp(&fx.ops, &field(fx, seed, amp));
        let l = functional::log_mass_exp(fx.ops.mass(), &u.values, 1.0);
        prop_assert!(l.abs() < 1e-12);
        let again = functional::normalize_exp(&fx.ops, &u);
        prop_assert_eq!(again.values, u.values);
    }

    #[test]
    fn jensen_pair(fx in fixtures(), seed in any::<u64>(), amp in 0.01f64..8.0) {
        let u = functional::normalize_exp(&fx.ops, &field(fx, seed, amp));
        prop_assert!(fx.ops.mean(&u) <= 1e-13);
        prop_assert!(functional::log_neg_exp_centered(&fx.ops, &u) >= -1e-13);
    }

    #[test]
    fn t_identity(fx in fixtures(), seed in any::<u64>(), t in 0.5f64..1.5, dt in 0.01f64..0.5) {
        let u = field(fx, seed, 2.0);
        let p = MfeParams::new(10.0 * PI, 3.0);
        let t2 = t + dt;
        let lhs = functional::energy(&fx.ops, &u, &p.with_t(t)) / t - functional::energy(&fx.ops, &u, &p.with_t(t2)) / t2;
        let rhs = 0.5 * (1.0 / t - 1.0 / t2) * fx.ops.dirichlet(&u);
        prop_assert!((lhs - rhs).abs() < 1e-12 * rhs.abs().max(1.0));
    }

    #[test]
    fn mt_offset_on_sphere_is_nonpositive_for_small_fields(seed in any::<u64>(), amp in 0.001f64..0.3) {
        // the round sphere has the sharp constant zero up to discretization
        let fx = sphere();
        let r = functional::mt_check(&fx.ops, &field(fx, seed, amp));
        prop_assert!(r.offset <= 1e-3 * r.dirichlet.max(1e-12));
    }

    #[test]
    fn measures_are_normalized_and_merged(ws in prop::collection::vec(0.01f64..1.0, 1..6), v in 0usize..40) {
        let atoms: Vec<(f64, usize)> = ws.iter().enumerate().map(|(i, &w)| (w, (v + i / 2) % 42)).collect();
        let m = BarycenterMeasure::normalized(atoms).unwrap();
        let total: f64 = m.atoms().iter().map(|a| a.w).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        let mut vs: Vec<usize> = m.atoms().iter().map(|a| a.vertex).collect();
        let before = vs.len();
        vs.dedup();
        prop_assert_eq!(vs.len(), before);
    }

    #[test]
    fn distance_bracket_is_ordered(seed in 0u64..1000, k in 1usize..3) {
        let fx = sphere();
        let u = field(fx, seed, 2.0);
        let f = barycenter::exp_density(&fx.ops, &u);
        let r = barycenter::dist_to_barycenters(&fx.mesh, &fx.ops, &f, k).unwrap();
        prop_assert!(r.lower <= r.upper + 1e-12);
        prop_assert!(r.upper >= 0.0);
        let (cost, _) = barycenter::transport_cost(&fx.mesh, &fx.ops, &f, &r.argmin).unwrap();
        prop_assert!((cost - r.upper).abs() < 1e-9);
    }

    #[test]
    fn bubble_is_symmetric_under_rotation_of_weights(l in 1.0f64..300.0) {
        let fx = sphere();
        let pts = fx.mesh.farthest_point_sample(2, 0);
        let s = BubbleScale::new(l).unwrap();
        let a = barycenter::test_function(&fx.mesh, &BarycenterMeasure::uniform(&pts).unwrap(), s);
        let b = barycenter::test_function(&fx.mesh, &BarycenterMeasure::uniform(&[pts[1], pts[0]]).unwrap(), s);
        prop_assert_eq!(a.values, b.values);
    }

    #[test]
    fn regime_is_consistent(r1 in -50.0f64..200.0, r2 in -50.0f64..200.0) {
        let info = solver::classify_regime(r1, r2);
        if let Some(k) = info.minmax_k {
            prop_assert!(r1 > 8.0 * PI * k as f64 && r1 < 8.0 * PI * (k + 1) as f64 && r2 < 4.0 * PI);
        }
        prop_assert_eq!(info.minmax_k_swapped, solver::classify_regime(r2, r1).minmax_k);
    }

    #[test]
    fn rho_text_round_trip(c in -100.0f64..100.0) {
        prop_assert_eq!(parse_rho(&format!("{c}pi")).unwrap(), c * PI);
        prop_assert_eq!(parse_rho(&format!("{c}")).unwrap(), c);
    }

    #[test]
    fn aitken_recovers_geometric_limits(lim in -50.0f64..50.0, a in 0.1f64..10.0, q in 0.05f64..0.9) {
        let s: Vec<f64> = (0..3).map(|i| lim + a * q.powi(i)).collect();
        prop_assert!((aitken(&s) - lim).abs() < 1e-9 * (1.0 + lim.abs() + a));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn minimize_never_raises_energy(seed in any::<u64>(), r1 in 0.0f64..20.0, r2 in 0.0f64..20.0) {
        let fx = torus();
        let u0 = field(fx, seed, 1.0);
        let rep = solver::minimize(&fx.ops, &MfeParams::new(r1, r2), &u0, &solver::DescentOptions::default()).unwrap();
        for w in rep.log.windows(2) {
            prop_assert!(w[1].energy <= w[0].energy);
        }
        if rep.converged {
            prop_assert!(functional::residual_norm(&fx.ops, &rep.u, &rep.params) < 1.01 * rep.tolerance);
            prop_assert!(functional::log_mass_exp(fx.ops.mass(), &rep.u.values, 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn residual_is_the_energy_gradient(seed in any::<u64>(), r1 in -20.0f64..40.0, r2 in -20.0f64..40.0) {
        let fx = sphere();
        let p = MfeParams::new(r1, r2);
        let u = field(fx, seed, 1.5);
        let v = field(fx, seed.wrapping_add(1), 1.0);
        let h = 1e-5;
        let fd = (functional::energy(&fx.ops, &u.add_scaled(h, &v), &p)
            - functional::energy(&fx.ops, &u.add_scaled(-h, &v), &p)) / (2.0 * h);
        let r = functional::residual(&fx.ops, &u, &p);
        let an = fx.ops.inner(&r, &v);
        prop_assert!((fd - an).abs() <= 1e-6 * an.abs().max(fd.abs()).max(1e-3), "{} {}", fd, an);
    }
}
