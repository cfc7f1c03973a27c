//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use mono5_core::field::{
    Combination, Constant, Field, FieldKind, FixtureSpec, GaussianBump, Homogeneous, SharedField, ZetaSpec,
};
use mono5_core::functionals::{ball_integrals, monotonicity_report, ProfileOptions};
use mono5_core::grid::{build_sphere_samples, BallGrid, SphereSamples};
use mono5_core::iteration::{
    check_recurrence_premise, iteration_bound, premise_limit, simulate_recurrence, threshold_constants,
    RecurrenceSpec,
};
use mono5_core::poly::{exponents_of_degree, Exponent, Poly, Term, VecPoly};
use mono5_core::pressure::{
    omega_from_zeta, reconstruct_xi, recover_pressure_periodic, spectral_div_div, spectral_neg_laplacian,
    DefectKind, TorusField, TorusGrid, XiOptions,
};
use mono5_core::projection::{ProjectionOptions, Projector};
use mono5_core::quadrature::{integrate_ball_fn, integrate_sphere, OriginCorrection};
use mono5_core::sphere::{
    convective_decomposition_defect, split_identity_defects, tangential_gradient, DimensionCoefficients,
    SphericalField,
};
use mono5_core::{Point, BALL_VOLUME, DIM, SPHERE_AREA};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn ensure(ok: bool, msg: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg)
    }
}

fn e(i: usize) -> Point {
    let mut v = [0.0; DIM];
    v[i] = 1.0;
    v
}

fn dotp(a: &Point, b: &Point) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sphere(level: usize) -> Arc<SphereSamples> {
    Arc::new(build_sphere_samples(level).unwrap())
}

fn ball(n_radial: usize, s: &Arc<SphereSamples>) -> BallGrid {
    BallGrid::with_default_cutoff(1.0, n_radial, Arc::clone(s)).unwrap()
}

// ---------------------------------------------------------------------------
// 1

fn quadrature_exactness() -> Outcome {
    let s = sphere(16);
    let g = ball(32, &s);
    let area = integrate_sphere(&s, |_| 1.0).map_err(|e| e.to_string())?;
    let quartic = integrate_sphere(&s, |x| x[0].powi(4)).map_err(|e| e.to_string())?;
    let vol = integrate_ball_fn(&g, OriginCorrection::Patch, |_| 1.0).map_err(|e| e.to_string())?;
    let errs = [
        rel(area, 8.0 * std::f64::consts::PI.powi(2) / 3.0),
        rel(vol, 8.0 * std::f64::consts::PI.powi(2) / 15.0),
        rel(quartic, 3.0 * SPHERE_AREA / 35.0),
    ];
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    ensure(worst < 1e-8, format!("worst relative error {worst:e}"))?;
    Ok(format!("area, volume, ∫σ1⁴ worst rel err {worst:.1e}"))
}

// ---------------------------------------------------------------------------
// 2

fn zeta_catalog() -> Vec<(&'static str, ZetaSpec)> {
    vec![
        ("e1", ZetaSpec::Constant(e(0))),
        ("sigma", ZetaSpec::Radial(1.0)),
        ("rotation12", ZetaSpec::Rotation([1, 2])),
        ("grad_sigma3", ZetaSpec::CoordinateGradient(3)),
        ("divfree_axis2", ZetaSpec::DivergenceFreeAxis(2)),
    ]
}

fn norm_identities() -> Outcome {
    let s = sphere(16);
    let g = ball(32, &s);
    let nm4 = DimensionCoefficients::N5.n_minus_4;
    let radius: f64 = 1.0;
    let mut worst: f64 = 0.0;
    for (name, spec) in zeta_catalog() {
        let zp = spec.to_vec_poly().map_err(|e| e.to_string())?;
        let zeta = SphericalField::vector_poly(zp.clone(), false);
        let h = Homogeneous::new(zp);
        let z2 = integrate_sphere(&s, |x| {
            let v = zeta.eval(x);
            dotp(&v, &v)
        })
        .map_err(|e| e.to_string())?;
        let grad2 = integrate_sphere(&s, |x| {
            zeta.tangential_jacobian(x).iter().flatten().map(|v| v * v).sum()
        })
        .map_err(|e| e.to_string())?;
        let l2 = integrate_ball_fn(&g, OriginCorrection::PowerLaw(-2.0), |x| {
            let v = h.value(x);
            dotp(&v, &v)
        })
        .map_err(|e| e.to_string())?;
        let dl2 = integrate_ball_fn(&g, OriginCorrection::PowerLaw(-4.0), |x| {
            h.jacobian(x).unwrap().iter().flatten().map(|v| v * v).sum()
        })
        .map_err(|e| e.to_string())?;
        let e1 = rel(l2, radius.powi(3) / 3.0 * z2);
        let e2 = rel(dl2, radius * (z2 + grad2) / nm4);
        if e1.max(e2) >= 1e-4 {
            return Err(format!("{name}: L² rel err {e1:e}, gradient rel err {e2:e}"));
        }
        worst = worst.max(e1).max(e2);
    }
    Ok(format!("5 profiles, worst rel err {worst:.1e}"))
}

// ---------------------------------------------------------------------------
// 3: exact coefficients for polynomial data, then quadrature on smooth fixtures

/// `Σ c r^k` as (k, c) pairs.
type Series = Vec<(i32, f64)>;

fn moment(exp: &Exponent) -> f64 {
    mono5_core::grid::sphere_moment(exp)
}

fn total(exp: &Exponent) -> i32 {
    exp.iter().map(|&a| a as i32).sum()
}

/// `∫_{B_r} p(x)|x|^s dx`.
fn ball_series(p: &Poly, s: i32) -> Series {
    p.terms()
        .iter()
        .map(|t| {
            let k = total(&t.exp) + s + 5;
            (k, t.coef * moment(&t.exp) / k as f64)
        })
        .collect()
}

/// `∫_{∂B_r} p(x)|x|^s dS`.
fn shell_series(p: &Poly, s: i32) -> Series {
    p.terms().iter().map(|t| (total(&t.exp) + s + 4, t.coef * moment(&t.exp))).collect()
}

fn ev(s: &Series, r: f64) -> f64 {
    s.iter().map(|(k, c)| c * r.powi(*k)).sum()
}

fn dev(s: &Series, r: f64) -> f64 {
    s.iter().map(|(k, c)| c * *k as f64 * r.powi(k - 1)).sum()
}

fn shift(s: &Series, by: i32, factor: f64) -> Series {
    s.iter().map(|(k, c)| (k + by, c * factor)).collect()
}

fn concat(parts: &[Series]) -> Series {
    parts.iter().flatten().cloned().collect()
}

struct ExactProfile {
    k: [Series; 6],
    shell: [Series; 2],
    a: Series,
}

fn exact_profile(u: &VecPoly, p: &Poly) -> ExactProfile {
    let x: Vec<Poly> = (0..DIM).map(Poly::coordinate).collect();
    let mut u2 = Poly::zero();
    let mut trans = Poly::zero();
    let mut g2 = Poly::zero();
    let mut ux = Poly::zero();
    let mut rho2 = Poly::zero();
    for i in 0..DIM {
        u2 = u2.add(&u[i].mul(&u[i]));
        ux = ux.add(&u[i].mul(&x[i]));
        rho2 = rho2.add(&x[i].mul(&x[i]));
        let mut radial = Poly::zero();
        for k in 0..DIM {
            let d = u[i].derivative(k);
            g2 = g2.add(&d.mul(&d));
            radial = radial.add(&x[k].mul(&d));
        }
        trans = trans.add(&u[i].mul(&radial));
    }
    let head = u2.scaled(0.5).add(p);
    let flux = head.mul(&ux);
    let k0 = ball_series(&trans, 0);
    let k1 = ball_series(&u2, 0);
    let k2 = ball_series(&flux, -1);
    let k3 = ball_series(&g2, 0);
    let weighted = rho2.mul(&g2);
    let k4 = ball_series(&u2.add(&trans.scaled(2.0)).add(&weighted), 0);
    let k5 = concat(&[shift(&k3, 2, 1.0), ball_series(&weighted, 0).iter().map(|(k, c)| (*k, -c)).collect()]);
    let shell = [shell_series(&trans.scaled(2.0), 0), shell_series(&flux, -1)];
    let a = concat(&[shift(&k0, -3, 1.0), shift(&k1, -3, 2.25), shift(&k2, -2, -1.0)]);
    ExactProfile {
        k: [k0, k1, k2, k3, k4, k5],
        shell,
        a,
    }
}

/// `(A', D/r + 2k2/r³ + T/r², [k0..k5])` at `r` from the exact series.
fn exact_identity(ex: &ExactProfile, r: f64) -> (f64, f64, [f64; 6]) {
    let k: [f64; 6] = std::array::from_fn(|i| ev(&ex.k[i], r));
    let r3 = r.powi(3);
    let q = 3.75 * k[1] / r3 + 0.25 * k[3] / r + 0.75 * k[5] / r3;
    let d = q + 0.75 * k[4] / r3;
    let t = ev(&ex.shell[0], r) / (2.0 * r) - k[3] - ev(&ex.shell[1], r);
    (dev(&ex.a, r), d / r + 2.0 * k[2] / r3 + t / (r * r), k)
}

fn random_poly(rng: &mut ChaCha8Rng, max_degree: usize, terms: usize) -> Poly {
    let mut p = Poly::zero();
    for _ in 0..terms {
        let d = rng.gen_range(0..=max_degree);
        let exps = exponents_of_degree(d);
        let exp = exps[rng.gen_range(0..exps.len())];
        p.add_term(exp, rng.gen_range(-1.0..1.0));
    }
    p
}

fn poly_field(u: &VecPoly) -> SharedField {
    let components: Vec<Vec<Term>> = u.iter().map(|p| p.terms()).collect();
    FixtureSpec::Polynomial { components }.build().unwrap()
}

fn scalar_field(p: &Poly) -> SharedField {
    FixtureSpec::ScalarPolynomial { terms: p.terms() }.build().unwrap()
}

fn monotonicity_identity() -> Outcome {
    let s = sphere(16);
    let g = ball(32, &s);
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    // symbolic oracle: exact identity and exact integrals vs quadrature
    let mut oracle_worst: f64 = 0.0;
    let mut quad_worst: f64 = 0.0;
    for _ in 0..4 {
        let u: VecPoly = std::array::from_fn(|_| random_poly(&mut rng, 3, 4));
        let p = random_poly(&mut rng, 2, 3);
        let ex = exact_profile(&u, &p);
        let (uf, pf) = (poly_field(&u), scalar_field(&p));
        for r in [0.5, 0.75, 1.0] {
            let (lhs, rhs, k) = exact_identity(&ex, r);
            oracle_worst = oracle_worst.max(rel(lhs, rhs).min((lhs - rhs).abs()));
            let b = ball_integrals(uf.as_ref(), pf.as_ref(), r, &g).map_err(|e| e.to_string())?;
            let got = [
                b.transport,
                b.kinetic,
                b.bernoulli_flux,
                b.dissipation,
                b.weighted_gradient,
                b.tapered_dissipation,
            ];
            for i in 0..6 {
                let scale = k[i].abs().max(1.0);
                quad_worst = quad_worst.max((got[i] - k[i]).abs() / scale);
            }
        }
    }
    ensure(oracle_worst < 1e-10, format!("exact identity defect {oracle_worst:e}"))?;
    ensure(quad_worst < 1e-8, format!("quadrature vs exact integrals {quad_worst:e}"))?;

    // hand-checked constant field
    let u = Constant {
        kind: FieldKind::Vector,
        value: e(0),
    };
    let zero = mono5_core::field::zero_scalar();
    let rep = monotonicity_report(&u, zero.as_ref(), 1.0, &g, ProfileOptions::default()).map_err(|e| e.to_string())?;
    let expected = 4.5 * BALL_VOLUME;
    ensure(
        (expected - 23.68705).abs() < 1e-5
            && rel(rep.a_prime, expected) < 1e-6
            && rel(rep.d, expected) < 1e-8
            && rep.t.abs() < 1e-10
            && rep.wp.abs() < 1e-10,
        format!("u=e1: A'={} D={} T={} wp={}", rep.a_prime, rep.d, rep.t, rep.wp),
    )?;

    // six smooth fixtures
    let fixtures: Vec<(&str, FixtureSpec, FixtureSpec)> = vec![
        (
            "constant",
            FixtureSpec::Constant { vector: [0.3, -1.0, 0.2, 0.0, 0.5] },
            FixtureSpec::ScalarConstant { value: 0.7 },
        ),
        (
            "linear_radial",
            FixtureSpec::LinearRadial,
            FixtureSpec::RadialPower { coef: -0.5, exponent: 2.0 },
        ),
        (
            "rotation",
            FixtureSpec::RotationPlane { i: 1, j: 3 },
            FixtureSpec::ScalarPolynomial {
                terms: vec![Term { exp: [2, 0, 0, 0, 0], coef: 0.5 }, Term { exp: [0, 0, 2, 0, 0], coef: 0.5 }],
            },
        ),
        (
            "gaussian",
            FixtureSpec::GaussianBump { amplitude: [1.0, 0.5, 0.0, -0.25, 0.0], width: 0.8, center: [0.1, 0.0, -0.2, 0.0, 0.05] },
            FixtureSpec::ScalarPolynomial { terms: vec![Term { exp: [1, 1, 0, 0, 0], coef: 0.3 }] },
        ),
        (
            "sine",
            FixtureSpec::SineMode { amplitude: [0.0, 1.0, 0.0, 0.0, 0.0], wave: [1, 0, 0, 1, 0], length: 4.0 },
            FixtureSpec::ScalarConstant { value: 0.0 },
        ),
        (
            "polynomial",
            FixtureSpec::Polynomial {
                components: vec![
                    vec![Term { exp: [0, 1, 1, 0, 0], coef: 1.0 }],
                    vec![Term { exp: [2, 0, 0, 0, 0], coef: -0.5 }],
                    vec![],
                    vec![Term { exp: [0, 0, 0, 0, 1], coef: 0.25 }, Term { exp: [0, 0, 0, 0, 0], coef: 1.0 }],
                    vec![Term { exp: [1, 0, 0, 1, 0], coef: 0.5 }],
                ],
            },
            FixtureSpec::ScalarPolynomial { terms: vec![Term { exp: [0, 0, 0, 3, 0], coef: 0.2 }] },
        ),
    ];
    let mut worst: f64 = 0.0;
    for (name, uspec, pspec) in fixtures {
        let (u, p) = (uspec.build().unwrap(), pspec.build().unwrap());
        for r in [0.5, 0.75, 1.0] {
            let rep = monotonicity_report(u.as_ref(), p.as_ref(), r, &g, ProfileOptions::default())
                .map_err(|e| format!("{name}: {e}"))?;
            if !(rep.identity_defect.abs() < 5e-4) {
                return Err(format!("{name} at r={r}: defect {:e}", rep.identity_defect));
            }
            worst = worst.max(rep.identity_defect.abs());
        }
    }
    Ok(format!(
        "oracle defect {oracle_worst:.1e}, integrals {quad_worst:.1e}, u=e1 A'(1)={expected:.5}, 6 fixtures worst {worst:.1e}"
    ))
}

// ---------------------------------------------------------------------------
// 4: projection against a dense least-squares oracle

/// Gauss–Legendre on `[0, r]` by Golub–Welsch.
fn golub_welsch(n: usize, r: f64) -> Vec<(f64, f64)> {
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = k as f64 / ((4 * k * k - 1) as f64).sqrt();
        j[(k - 1, k)] = b;
        j[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let mut out: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let x = eig.eigenvalues[k];
            let w = 2.0 * eig.eigenvectors[(0, k)].powi(2);
            (0.5 * r * (x + 1.0), 0.5 * r * w)
        })
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

fn mono_value(e: &Exponent, x: &Point) -> f64 {
    (0..DIM).map(|k| x[k].powi(e[k] as i32)).product()
}

fn mono_grad(e: &Exponent, x: &Point) -> Point {
    std::array::from_fn(|k| {
        if e[k] == 0 {
            0.0
        } else {
            let mut d = *e;
            d[k] -= 1;
            e[k] as f64 * mono_value(&d, x)
        }
    })
}

/// Minimiser of `‖u - h_ζ‖` over all polynomial `ζ` of degree ≤ 4, by ball
/// quadrature with central-difference gradients and a pseudo-inverse solve.
/// Returns `ζ` evaluated at the given points.
fn oracle_projection(u: &dyn Field, radius: f64, s: &SphereSamples, at: &[Point]) -> Vec<Point> {
    let basis: Vec<Exponent> = (0..=4).flat_map(exponents_of_degree).collect();
    let nb = basis.len();
    let radial = golub_welsch(40, radius);
    let fd = 1e-5;
    // sphere parts of the basis: value and tangential gradient
    let tangential = |e: &Exponent, x: &Point| -> (f64, Point) {
        let v = mono_value(e, x);
        let g = mono_grad(e, x);
        let n = dotp(&g, x);
        (v, std::array::from_fn(|k| g[k] - n * x[k]))
    };
    // Gram: radial factors of (1/R³)∫|x|^{-2} and (1/R)∫|x|^{-4}, numerically
    let c_l2: f64 = radial.iter().map(|(r, w)| w * r * r).sum::<f64>() / radius.powi(3);
    let c_grad: f64 = radial.iter().map(|(_, w)| w).sum::<f64>() / radius;
    let mut gram = DMatrix::<f64>::zeros(nb, nb);
    let mut load = DMatrix::<f64>::zeros(nb, DIM);
    for (x, w) in s.nodes.iter().zip(&s.weights) {
        let parts: Vec<(f64, Point)> = basis.iter().map(|e| tangential(e, x)).collect();
        for a in 0..nb {
            for b in a..nb {
                let (va, ga) = &parts[a];
                let (vb, gb) = &parts[b];
                let v = w * (c_l2 * va * vb + c_grad * (dotp(ga, gb) + va * vb));
                gram[(a, b)] += v;
                if a != b {
                    gram[(b, a)] += v;
                }
            }
        }
        // radial sums of u and ∇u along the ray
        let mut s0 = [0.0; DIM];
        let mut s1 = [[0.0; DIM]; DIM];
        for (r, wr) in &radial {
            let y = x.map(|c| c * r);
            let uv = u.value(&y);
            for i in 0..DIM {
                s0[i] += wr * r.powi(3) * uv[i] / radius.powi(3);
            }
            for k in 0..DIM {
                let mut yp = y;
                let mut ym = y;
                yp[k] += fd;
                ym[k] -= fd;
                let (up, um) = (u.value(&yp), u.value(&ym));
                for i in 0..DIM {
                    s1[i][k] += wr * r * r * (up[i] - um[i]) / (2.0 * fd) / radius;
                }
            }
        }
        // ∇h_φ = (∇_Sφ - φσ)/|x|²
        for (a, (va, ga)) in parts.iter().enumerate() {
            let dir: Point = std::array::from_fn(|k| ga[k] - va * x[k]);
            for i in 0..DIM {
                load[(a, i)] += w * (va * s0[i] + dotp(&s1[i], &dir));
            }
        }
    }
    let svd = gram.svd(true, true);
    let tol = 1e-11 * svd.singular_values.max();
    let coef = svd.solve(&load, tol).unwrap();
    at.iter()
        .map(|x| {
            std::array::from_fn(|i| (0..nb).map(|a| coef[(a, i)] * mono_value(&basis[a], x)).sum())
        })
        .collect()
}

fn max_node_diff(a: &[Point], b: &[Point]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max)
}

fn projection() -> Outcome {
    let s = sphere(16);
    let projector = Projector::with_sphere(ProjectionOptions::default(), Arc::clone(&s)).map_err(|e| e.to_string())?;
    let probe_nodes: Vec<Point> = s.nodes.iter().step_by(97).cloned().collect();
    let sample = |z: &VecPoly| -> Vec<Point> {
        probe_nodes.iter().map(|x| mono5_core::poly::vec_poly_eval(z, x)).collect()
    };

    let e1 = Constant {
        kind: FieldKind::Vector,
        value: e(0),
    };
    let res = projector.project(&e1, 1.0).map_err(|e| e.to_string())?;
    let mut expected = vec![[0.0; DIM]; probe_nodes.len()];
    for v in expected.iter_mut() {
        v[0] = 3.0 / 16.0;
    }
    let got = sample(&res.zeta_star);
    let err_e1 = max_node_diff(&got, &expected);
    ensure(err_e1 < 1e-4, format!("P[e1] off (3/16)e1 by {err_e1:e}"))?;
    let oracle_e1 = oracle_projection(&e1, 1.0, &s, &probe_nodes);
    let orc1 = max_node_diff(&got, &oracle_e1);
    ensure(orc1 < 1e-6, format!("P[e1] vs oracle {orc1:e}"))?;

    let bump = GaussianBump {
        kind: FieldKind::Vector,
        amplitude: [1.0, -0.5, 0.25, 0.0, 0.5],
        width: 0.7,
        center: [0.2, 0.0, -0.1, 0.3, 0.0],
    };
    let rb = projector.project(&bump, 1.0).map_err(|e| e.to_string())?;
    let orc2 = max_node_diff(&sample(&rb.zeta_star), &oracle_projection(&bump, 1.0, &s, &probe_nodes));
    ensure(orc2 < 1e-6, format!("P[bump] vs oracle {orc2:e}"))?;

    // invariants
    let tol = 1e-7;
    let pyth = rel(rb.projected_norm_sq + rb.error_sq, rb.energy);
    ensure(pyth < tol, format!("Pythagoras {pyth:e}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut orth: f64 = 0.0;
    let lnorm = rb.load.iter().map(|v| v * v).sum::<f64>().sqrt();
    for _ in 0..8 {
        let eta: Vec<f64> = (0..rb.load.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let enorm = eta.iter().map(|v| v * v).sum::<f64>().sqrt();
        let l: f64 = rb.load.iter().zip(&eta).map(|(a, b)| a * b).sum();
        orth = orth.max((l - projector.gram_form(&rb.coefficients, &eta)).abs() / (lnorm * enorm));
    }
    ensure(orth < tol, format!("orthogonality {orth:e}"))?;
    let hstar = Homogeneous::new(rb.zeta_star.clone());
    let again = projector.project(&hstar, 1.0).map_err(|e| e.to_string())?;
    let scale = sample(&rb.zeta_star).iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let idem = max_node_diff(&sample(&again.zeta_star), &sample(&rb.zeta_star)) / scale;
    ensure(idem < tol, format!("idempotence {idem:e}"))?;
    let combo = Combination {
        terms: vec![(2.0, Arc::new(bump.clone()) as SharedField), (-0.5, Arc::new(e1.clone()) as SharedField)],
    };
    let rc = projector.project(&combo, 1.0).map_err(|e| e.to_string())?;
    let lin = rc
        .coefficients
        .iter()
        .zip(rb.coefficients.iter().zip(&res.coefficients))
        .map(|(c, (b, a))| (c - (2.0 * b - 0.5 * a)).abs())
        .fold(0.0, f64::max)
        / rc.coefficients.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    ensure(lin < tol, format!("linearity {lin:e}"))?;
    let close = res.closeness;
    ensure((close - 0.76563).abs() < 1e-3, format!("closeness(e1) = {close}"))?;
    Ok(format!(
        "P[e1] err {err_e1:.1e}, oracle {:.1e}, invariants ≤ {:.1e}, closeness {close:.5}",
        orc1.max(orc2),
        pyth.max(orth).max(idem).max(lin)
    ))
}

// ---------------------------------------------------------------------------
// 5

fn tangential_gradient_poly(g: &Poly) -> VecPoly {
    let x: Vec<Poly> = (0..DIM).map(Poly::coordinate).collect();
    let mut radial = Poly::zero();
    for k in 0..DIM {
        radial = radial.add(&x[k].mul(&g.derivative(k)));
    }
    std::array::from_fn(|j| g.derivative(j).add(&x[j].mul(&radial).scaled(-1.0)))
}

fn euler_identities() -> Outcome {
    let s = sphere(16);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let g = random_poly(&mut rng, 2, 6);
        let mut v = tangential_gradient_poly(&g);
        for i in 0..DIM {
            for j in (i + 1)..DIM {
                let a = rng.gen_range(-1.0..1.0);
                v[i] = v[i].add(&Poly::coordinate(j).scaled(a));
                v[j] = v[j].add(&Poly::coordinate(i).scaled(-a));
            }
        }
        let field = SphericalField::vector_poly(v, true);
        let d = split_identity_defects(&field, &s).map_err(|e| e.to_string())?;
        worst = worst.max(d.d1.abs()).max(d.d2.abs());
    }
    ensure(worst < 1e-4, format!("split defects {worst:e}"))?;
    let v = tangential_gradient(&SphericalField::scalar_poly(Poly::coordinate(0))).map_err(|e| e.to_string())?;
    let d = split_identity_defects(&v, &s).map_err(|e| e.to_string())?;
    let ratio = d.d2_lhs / d.d2_rhs;
    ensure(
        (d.d2_lhs - 7.1298).abs() < 1e-4 && (ratio - 1.0).abs() < 1e-4,
        format!("eigenfield sides {} / {}", d.d2_lhs, d.d2_rhs),
    )?;
    let probes: Vec<Point> = s.nodes.iter().step_by(1601).cloned().collect();
    let mut conv: f64 = 0.0;
    for spec in [ZetaSpec::DivergenceFreeAxis(1), ZetaSpec::Rotation([2, 4]), ZetaSpec::CoordinateGradient(5)] {
        let zeta = SphericalField::vector_poly(spec.to_vec_poly().unwrap(), false);
        for r in [0.5, 1.0, 2.0] {
            conv = conv.max(convective_decomposition_defect(&zeta, &probes, r).map_err(|e| e.to_string())?);
        }
    }
    ensure(conv < 1e-5, format!("convective defect {conv:e}"))?;
    Ok(format!(
        "10 random pairs worst {worst:.1e}, eigenfield {:.6}/{:.6}, convective {conv:.1e}",
        d.d2_lhs, d.d2_rhs
    ))
}

// ---------------------------------------------------------------------------
// 6

fn pressure() -> Outcome {
    let length = 2.0 * std::f64::consts::PI;
    let grid = TorusGrid::new(length, 16).map_err(|e| e.to_string())?;
    let u = FixtureSpec::SineMode { amplitude: e(0), wave: [1, 0, 0, 0, 0], length }.build().unwrap();
    let samples = TorusField::sample(u.as_ref(), grid, 5).map_err(|e| e.to_string())?;
    let p = recover_pressure_periodic(&samples).map_err(|e| e.to_string())?;
    let mut perr: f64 = 0.0;
    for (idx, v) in p.channels[0].iter().enumerate() {
        let x = grid.point(idx);
        perr = perr.max((v - 0.5 * (4.0 * std::f64::consts::PI * x[0] / length).cos()).abs());
    }
    ensure(perr < 1e-10, format!("single-mode pressure err {perr:e}"))?;
    // a mixing field for the -Δ vs div div check
    let mixed = Combination {
        terms: vec![
            (1.0, u.clone()),
            (
                0.7,
                FixtureSpec::SineMode { amplitude: [0.0, 1.0, 0.0, -1.0, 0.0], wave: [1, 0, 2, 0, 1], length }
                    .build()
                    .unwrap(),
            ),
        ],
    };
    let ms = TorusField::sample(&mixed, grid, 5).map_err(|e| e.to_string())?;
    let mp = recover_pressure_periodic(&ms).map_err(|e| e.to_string())?;
    let lap = spectral_neg_laplacian(grid, &mp.channels[0]);
    let dd = spectral_div_div(&ms).map_err(|e| e.to_string())?;
    let eq = lap.iter().zip(&dd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ensure(eq < 1e-9, format!("-Δp vs div div {eq:e}"))?;

    // manufactured: ω = -(∇_S q - 2qσ) for a degree -2 pressure q(σ)/|x|²
    let s = sphere(12);
    let q = Poly::from_terms(&[
        Term { exp: [2, 0, 0, 0, 0], coef: 0.7 },
        Term { exp: [0, 1, 0, 1, 0], coef: -0.4 },
        Term { exp: [0, 0, 1, 0, 0], coef: 0.3 },
    ]);
    let qc = q.clone();
    let omega = SphericalField::vector_fn(
        move |x: &Point| {
            let g = qc.gradient(x);
            let n = dotp(&g, x);
            let v = qc.eval(x);
            std::array::from_fn(|k| -(g[k] - n * x[k]) + 2.0 * v * x[k])
        },
        false,
    );
    let opts = XiOptions::default();
    let rec = reconstruct_xi(&omega, &s, opts).map_err(|e| e.to_string())?;
    let q0 = q.eval(&opts.base);
    let xerr = rec
        .xi
        .iter()
        .zip(&s.nodes)
        .map(|(xi, x)| (xi + q.eval(x) - q0).abs())
        .fold(0.0, f64::max);
    ensure(
        xerr < 1e-5 && rec.radial_defect < 1e-5 && rec.warnings.is_empty(),
        format!("manufactured ξ err {xerr:e}, radial {:e}", rec.radial_defect),
    )?;
    let e1 = SphericalField::vector_poly(ZetaSpec::Constant(e(0)).to_vec_poly().unwrap(), false);
    let rec = reconstruct_xi(&omega_from_zeta(&e1).unwrap(), &s, opts).map_err(|e| e.to_string())?;
    ensure(
        (rec.radial_defect - 2.0).abs() < 1e-3 && rec.warnings.iter().any(|w| w.kind == DefectKind::Radial),
        format!("ζ=e1 radial defect {}", rec.radial_defect),
    )?;
    Ok(format!(
        "p err {perr:.1e}, -Δp vs divdiv {eq:.1e}, ξ err {xerr:.1e}, e1 radial defect {:.6}",
        rec.radial_defect
    ))
}

// ---------------------------------------------------------------------------
// 7

fn iteration() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut violations = 0;
    for _ in 0..1000 {
        let b = if rng.gen_bool(0.5) { 1.0 } else { rng.gen_range(0.1..10.0) };
        let f1 = rng.gen_range(0.05..20.0);
        let delta = premise_limit(b, f1) * rng.gen_range(0.01..=1.0);
        let spec = RecurrenceSpec { b, delta, f1, depth: rng.gen_range(1..120) };
        if !check_recurrence_premise(&spec) {
            return Err(format!("generated spec fails the premise: {spec:?}"));
        }
        let bound = iteration_bound(&spec).map_err(|e| e.to_string())?;
        let orbit = simulate_recurrence(&spec).map_err(|e| e.to_string())?;
        violations += orbit.iter().filter(|f| **f > bound).count();
    }
    ensure(violations == 0, format!("{violations} orbit values above the bound"))?;
    let fixed = simulate_recurrence(&RecurrenceSpec { b: 1.0, delta: 2f64.powf(-1.5), f1: 1.0, depth: 200 })
        .map_err(|e| e.to_string())?;
    let gap = (fixed[200] - 2.0).abs();
    ensure(gap < 1e-9, format!("fixed point gap {gap:e}"))?;
    let t = threshold_constants(16.0, 1.0).map_err(|e| e.to_string())?;
    ensure(
        t.delta1 == 128.0 && (t.delta2 - 0.353553).abs() < 1e-6 && (t.delta2 - 0.125f64.sqrt()).abs() < 1e-9
            && t.c0 == 256.0,
        format!("threshold(16,1) = {t:?}"),
    )?;
    let infeasible = threshold_constants(8.0, 1.0).map_err(|e| e.to_string())?;
    ensure(!infeasible.feasible, "m = 8C_E not flagged".into())?;
    Ok(format!("1000 specs, 0 violations; fixed point gap {gap:.1e} at depth 200; δ2 = {:.9}", t.delta2))
}

// ---------------------------------------------------------------------------
// 8

fn divergence_free_flux() -> Outcome {
    let s = sphere(16);
    let g = ball(32, &s);
    let mut fields: Vec<(String, SharedField)> = Vec::new();
    for spec in [ZetaSpec::DivergenceFreeAxis(1), ZetaSpec::DivergenceFreeAxis(4), ZetaSpec::Rotation([1, 5]), ZetaSpec::Constant(e(2))] {
        let name = format!("homogeneous {spec:?}");
        fields.push((name, Arc::new(Homogeneous::new(spec.to_vec_poly().unwrap()))));
    }
    fields.push(("constant".into(), FixtureSpec::Constant { vector: [1.0, 2.0, 0.0, -1.0, 0.5] }.build().unwrap()));
    fields.push(("rotation".into(), FixtureSpec::RotationPlane { i: 2, j: 3 }.build().unwrap()));
    fields.push((
        "sine".into(),
        FixtureSpec::SineMode { amplitude: e(1), wave: [1, 0, 1, 0, 0], length: 3.0 }.build().unwrap(),
    ));
    let mut worst: f64 = 0.0;
    for (name, h) in &fields {
        for radius in [0.5, 1.0] {
            let gr = g.with_radius(radius).unwrap();
            let flux = integrate_ball_fn(&gr, OriginCorrection::Patch, |x| {
                let n = dotp(x, x).sqrt();
                dotp(&h.value(x), x) / n
            })
            .map_err(|e| e.to_string())?;
            if !(flux.abs() < 1e-8) {
                return Err(format!("{name} at R={radius}: {flux:e}"));
            }
            worst = worst.max(flux.abs());
        }
    }
    Ok(format!("{} fields, worst |flux| {worst:.1e}", fields.len()))
}

// ---------------------------------------------------------------------------
// 9

fn run_cli(config: &Path, out: &Path, format: &str) -> (i32, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_mono5"))
        .args(["run", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--format", format])
        .output()
        .expect("binary runs");
    (o.status.code().unwrap_or(-1), String::from_utf8_lossy(&o.stderr).into_owned())
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn cli_determinism() -> Outcome {
    let reference = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/reference.json");
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    for format in ["csv", "json"] {
        let (a, b) = (tmp.path().join(format!("{format}_a")), tmp.path().join(format!("{format}_b")));
        let (ca, ea) = run_cli(&reference, &a, format);
        let (cb, _) = run_cli(&reference, &b, format);
        ensure(ca == 0 && cb == 0, format!("reference exit codes {ca}, {cb}: {ea}"))?;
        ensure(dir_bytes(&a) == dir_bytes(&b), format!("{format} outputs differ between runs"))?;
    }
    let write = |name: &str, text: &str| {
        let p = tmp.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    };
    let minimal = write(
        "minimal.json",
        r#"{"name": "minimal", "field": {"fixture": "constant", "vector": [1,0,0,0,0]}, "radii": [1.0], "outputs": ["profile"]}"#,
    );
    let (c0, _) = run_cli(&minimal, &tmp.path().join("m"), "csv");
    let rows = std::fs::read_to_string(tmp.path().join("m/minimal.profile.csv")).unwrap_or_default();
    let wp_zero = rows
        .lines()
        .nth(1)
        .and_then(|l| l.split(',').nth(5))
        .and_then(|v| v.parse::<f64>().ok())
        .is_some_and(|v| v.abs() < 1e-12);
    ensure(c0 == 0 && rows.lines().count() == 2 && wp_zero, format!("minimal: exit {c0}, rows {rows:?}"))?;
    let bad = write(
        "bad.json",
        r#"{"name": "bad", "field": {"fixture": "nosuchfield"}, "radii": [1.0], "outputs": ["profile"]}"#,
    );
    let (c2, e2) = run_cli(&bad, &tmp.path().join("b"), "csv");
    ensure(c2 == 2 && e2.contains("nosuchfield"), format!("bad fixture: exit {c2}, stderr {e2:?}"))?;
    let strict = write(
        "strict.json",
        r#"{"name": "strict", "field": {"fixture": "gaussian_bump", "amplitude": [1,0,0,0,0]},
            "radii": [0.5, 1.0], "resolution": {"n_radial": 16, "level": 8},
            "tolerances": {"identity_defect": 1e-30}, "outputs": ["profile"]}"#,
    );
    let (c1, e1) = run_cli(&strict, &tmp.path().join("s"), "csv");
    ensure(c1 == 1 && e1.contains("identity_defect"), format!("strict: exit {c1}, stderr {e1:?}"))?;
    Ok("byte-identical csv and json, exit codes 0/2/1 as expected".into())
}

// ---------------------------------------------------------------------------

fn main() {
    let criteria: [(&str, f64, fn() -> Outcome); 9] = [
        ("quadrature exactness", 5.0, quadrature_exactness),
        ("norm identities", 10.0, norm_identities),
        ("monotonicity identity", 60.0, monotonicity_identity),
        ("projection", 120.0, projection),
        ("euler identities", 60.0, euler_identities),
        ("pressure", 120.0, pressure),
        ("iteration lemmas", 10.0, iteration),
        ("divergence-free flux", 10.0, divergence_free_flux),
        ("cli determinism", 10.0, cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = run();
        let secs = t.elapsed().as_secs_f64();
        let outcome = match outcome {
            Ok(msg) if secs > *budget => Err(format!("{msg}; took {secs:.1}s, budget {budget}s")),
            other => other,
        };
        match outcome {
            Ok(msg) => println!("criterion {}: PASS {name} ({secs:.2}s): {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {}: FAIL {name} ({secs:.2}s): {msg}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
