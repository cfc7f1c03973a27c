use std::sync::{Arc, OnceLock};

use mono5_core::field::{fd_jacobian, Field, FieldKind, GaussianBump, Homogeneous, Rescaled, SharedField};
use mono5_core::functionals::scale_invariant_energy;
use mono5_core::grid::{build_sphere_samples, sphere_moment, BallGrid, SphereSamples};
use mono5_core::poly::{exponents_of_degree, Poly};
use mono5_core::projection::{ProjectionOptions, Projector};
use mono5_core::quadrature::{integrate_ball_fn, integrate_sphere, OriginCorrection};
use mono5_core::{Point, DIM};
use proptest::prelude::*;

fn sphere12() -> Arc<SphereSamples> {
    static S: OnceLock<Arc<SphereSamples>> = OnceLock::new();
    S.get_or_init(|| Arc::new(build_sphere_samples(12).unwrap())).clone()
}

fn projector() -> &'static Projector {
    static P: OnceLock<Projector> = OnceLock::new();
    P.get_or_init(|| {
        let opts = ProjectionOptions { level: 12, n_radial: 16, ..Default::default() };
        Projector::with_sphere(opts, sphere12()).unwrap()
    })
}

fn point() -> impl Strategy<Value = Point> {
    prop::array::uniform5(-1.0f64..1.0)
}

fn bump() -> impl Strategy<Value = GaussianBump> {
    (point(), 0.5f64..1.5, prop::array::uniform5(-0.3f64..0.3)).prop_map(|(amplitude, width, center)| GaussianBump {
        kind: FieldKind::Vector,
        amplitude,
        width,
        center,
    })
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sphere_rule_integrates_monomials(d in 0usize..=12, pick in 0usize..1000) {
        let exps = exponents_of_degree(d);
        let e = exps[pick % exps.len()];
        let s = sphere12();
        let got = integrate_sphere(&s, |x| Poly::monomial(e, 1.0).eval(x)).unwrap();
        let want = sphere_moment(&e);
        prop_assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "{:?}: {} vs {}", e, got, want);
    }

    #[test]
    fn ball_rule_integrates_polynomial_radial_powers(d in 0usize..=6, pick in 0usize..1000, radius in 0.2f64..3.0) {
        let exps = exponents_of_degree(d);
        let e = exps[pick % exps.len()];
        let g = BallGrid::with_default_cutoff(radius, 16, sphere12()).unwrap();
        let got = integrate_ball_fn(&g, OriginCorrection::Patch, |x| Poly::monomial(e, 1.0).eval(x)).unwrap();
        let want = sphere_moment(&e) * radius.powi(d as i32 + 5) / (d as f64 + 5.0);
        prop_assert!((got - want).abs() <= 1e-11 * want.abs().max(1.0));
    }

    #[test]
    fn finite_differences_match_analytic_jacobian(u in bump(), x in point()) {
        let exact = u.jacobian(&x).unwrap();
        let fd = fd_jacobian(&u, &x, 1e-4).unwrap();
        for i in 0..DIM {
            for k in 0..DIM {
                prop_assert!((exact[i][k] - fd[i][k]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn homogeneous_jacobian_matches_finite_differences(c in prop::array::uniform5(-1.0f64..1.0), x in point()) {
        let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assume!(n > 0.3);
        let zeta = std::array::from_fn(|i| Poly::coordinate((i + 1) % DIM).scaled(c[i]).add(&Poly::constant(c[(i + 2) % DIM])));
        let h = Homogeneous::new(zeta);
        let exact = h.jacobian(&x).unwrap();
        let fd = fd_jacobian(&h, &x, 1e-5).unwrap();
        for i in 0..DIM {
            for k in 0..DIM {
                prop_assert!((exact[i][k] - fd[i][k]).abs() < 1e-5 * (1.0 + exact[i][k].abs()));
            }
        }
    }

    #[test]
    fn energy_is_scale_invariant(u in bump(), lambda in 0.5f64..2.0) {
        let g = BallGrid::with_default_cutoff(1.0, 16, sphere12()).unwrap();
        let inner: SharedField = Arc::new(u);
        let scaled = Rescaled { inner: inner.clone(), lambda, amplitude_power: 1 };
        let r = 0.8;
        let a = scale_invariant_energy(&scaled, r, &g).unwrap();
        let b = scale_invariant_energy(inner.as_ref(), lambda * r, &g).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn projection_invariants(u in bump(), v in bump(), alpha in -2.0f64..2.0, radius in 0.5f64..1.5) {
        let p = projector();
        let pu = p.project(&u, radius).unwrap();
        let pv = p.project(&v, radius).unwrap();
        // Pythagoras
        prop_assert!((pu.projected_norm_sq + pu.error_sq - pu.energy).abs() <= 1e-8 * pu.energy);
        prop_assert!(pu.closeness >= 0.0 && pu.closeness <= 1.0 + 1e-12);
        // linearity
        let combo = mono5_core::field::Combination {
            terms: vec![(1.0, Arc::new(u.clone()) as SharedField), (alpha, Arc::new(v.clone()) as SharedField)],
        };
        let pc = p.project(&combo, radius).unwrap();
        let lin: Vec<f64> = pu.coefficients.iter().zip(&pv.coefficients).map(|(a, b)| a + alpha * b).collect();
        let scale = lin.iter().fold(1e-12f64, |m, x| m.max(x.abs()));
        prop_assert!(max_abs_diff(&pc.coefficients, &lin) <= 1e-8 * scale);
        // idempotence
        let again = p.project(&Homogeneous::new(pu.zeta_star.clone()), radius).unwrap();
        let scale = pu.coefficients.iter().fold(1e-12f64, |m, x| m.max(x.abs()));
        prop_assert!(max_abs_diff(&again.coefficients, &pu.coefficients) <= 1e-7 * scale);
        prop_assert!(again.closeness < 1e-10);
    }

    #[test]
    fn projection_is_scale_equivariant(u in bump(), lambda in 0.6f64..1.6) {
        let p = projector();
        let inner: SharedField = Arc::new(u);
        let scaled = Rescaled { inner: inner.clone(), lambda, amplitude_power: 1 };
        let a = p.project(&scaled, 0.7).unwrap();
        let b = p.project(inner.as_ref(), 0.7 * lambda).unwrap();
        let scale = b.coefficients.iter().fold(1e-12f64, |m, x| m.max(x.abs()));
        prop_assert!(max_abs_diff(&a.coefficients, &b.coefficients) <= 1e-7 * scale);
    }
}
