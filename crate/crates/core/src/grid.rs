//! Quadrature geometries: product Gauss rules on `S^4` and radial
//! Gauss–Legendre rules on balls of `R^5`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{Point, DIM};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "gauss_legendre needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss rule for the weight `sqrt(1 - t²)` on `[-1, 1]` (Chebyshev of the
/// second kind), nodes ascending.
fn gauss_chebyshev_second(n: usize) -> (Vec<f64>, Vec<f64>) {
    let h = PI / (n as f64 + 1.0);
    let mut pairs: Vec<(f64, f64)> = (1..=n)
        .map(|k| {
            let a = k as f64 * h;
            (a.cos(), h * a.sin().powi(2))
        })
        .collect();
    pairs.reverse();
    pairs.into_iter().unzip()
}

/// Angle grid of the hyperspherical parametrization
/// `σ = (cos θ1, sin θ1 cos θ2, sin θ1 sin θ2 cos θ3,
///       sin θ1 sin θ2 sin θ3 cos φ, sin θ1 sin θ2 sin θ3 sin φ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleGrid {
    pub theta1: Vec<f64>,
    pub theta2: Vec<f64>,
    pub theta3: Vec<f64>,
    pub n_phi: usize,
}

/// Product quadrature on the unit sphere `S^4`.
#[derive(Debug, Clone)]
pub struct SphereSamples {
    pub level: usize,
    pub nodes: Vec<Point>,
    pub weights: Vec<f64>,
    pub param: AngleGrid,
}

/// Serializable summary of a [`SphereSamples`] rule; the rule is rebuilt
/// from `level` alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereDescriptor {
    pub level: usize,
    pub n_nodes: usize,
    pub n_polar: usize,
    pub n_phi: usize,
}

impl SphereSamples {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn descriptor(&self) -> SphereDescriptor {
        SphereDescriptor {
            level: self.level,
            n_nodes: self.nodes.len(),
            n_polar: self.param.theta1.len(),
            n_phi: self.param.n_phi,
        }
    }
}

/// Product rule on `S^4`, exact for polynomials of degree `≤ level` in `σ`.
///
/// `cos θ1` uses Gauss–Legendre with the `(1 - t²)` Jacobian folded into the
/// weights, `cos θ2` the Chebyshev-U rule for `sqrt(1 - t²)`, `cos θ3` plain
/// Gauss–Legendre and the azimuth `2·level` uniform points. Each polar rule
/// has `level/2 + 2` nodes.
pub fn build_sphere_samples(level: usize) -> Result<SphereSamples> {
    if level < 2 {
        return Err(Error::Resolution(format!(
            "sphere level must be at least 2, got {level}"
        )));
    }
    let n_polar = level / 2 + 2;
    let n_phi = 2 * level;
    let (t1, w1) = gauss_legendre(n_polar);
    let (t2, w2) = gauss_chebyshev_second(n_polar);
    let (t3, w3) = gauss_legendre(n_polar);
    let w_phi = 2.0 * PI / n_phi as f64;
    let phis: Vec<(f64, f64)> = (0..n_phi)
        .map(|k| {
            let phi = 2.0 * PI * k as f64 / n_phi as f64;
            (phi.cos(), phi.sin())
        })
        .collect();

    let capacity = n_polar * n_polar * n_polar * n_phi;
    let mut nodes = Vec::with_capacity(capacity);
    let mut weights = Vec::with_capacity(capacity);
    for (a, &c1) in t1.iter().enumerate() {
        let s1 = (1.0 - c1 * c1).sqrt();
        let wa = w1[a] * (1.0 - c1 * c1);
        for (b, &c2) in t2.iter().enumerate() {
            let s2 = (1.0 - c2 * c2).sqrt();
            let wb = w2[b];
            for (c, &c3) in t3.iter().enumerate() {
                let s3 = (1.0 - c3 * c3).sqrt();
                let wc = w3[c];
                for &(cp, sp) in &phis {
                    let mut x = [c1, s1 * c2, s1 * s2 * c3, s1 * s2 * s3 * cp, s1 * s2 * s3 * sp];
                    let n = crate::norm(&x);
                    for v in x.iter_mut() {
                        *v /= n;
                    }
                    nodes.push(x);
                    weights.push(wa * wb * wc * w_phi);
                }
            }
        }
    }
    let param = AngleGrid {
        theta1: t1.iter().map(|t| t.acos()).collect(),
        theta2: t2.iter().map(|t| t.acos()).collect(),
        theta3: t3.iter().map(|t| t.acos()).collect(),
        n_phi,
    };
    Ok(SphereSamples {
        level,
        nodes,
        weights,
        param,
    })
}

/// Number of Gauss points in the patch covering `(0, r_min)`.
pub const ORIGIN_PATCH_POINTS: usize = 8;

/// Default ratio `r_min / R`.
pub const DEFAULT_INNER_RATIO: f64 = 1e-3;

/// Radial Gauss rule on the annulus `r_min ≤ |x| ≤ R` times a sphere rule.
///
/// `radial_weights` already carry the `r⁴` measure factor. The separate
/// origin patch (Gauss points on `(0, r_min)`, also `r⁴`-weighted) is only
/// used by integrals that ask for an origin correction.
#[derive(Debug, Clone)]
pub struct BallGrid {
    pub outer_radius: f64,
    pub r_min: f64,
    pub radial_nodes: Vec<f64>,
    pub radial_weights: Vec<f64>,
    pub patch_nodes: Vec<f64>,
    pub patch_weights: Vec<f64>,
    pub n_radial: usize,
    pub sphere: Arc<SphereSamples>,
}

pub fn build_ball_grid(outer: f64, r_min: f64, n_radial: usize, level: usize) -> Result<BallGrid> {
    let sphere = Arc::new(build_sphere_samples(level)?);
    BallGrid::new(outer, r_min, n_radial, sphere)
}

/// Composite Gauss–Legendre rule: `n` points split into panels of at most 16.
fn composite_rule(a: f64, b: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let panels = n.div_ceil(16);
    let base = n / panels;
    let extra = n % panels;
    let width = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for p in 0..panels {
        let m = base + usize::from(p < extra);
        let (t, w) = gauss_legendre(m);
        let lo = a + p as f64 * width;
        for (ti, wi) in t.iter().zip(&w) {
            nodes.push(lo + 0.5 * width * (ti + 1.0));
            weights.push(0.5 * width * wi);
        }
    }
    (nodes, weights)
}

impl BallGrid {
    pub fn new(outer: f64, r_min: f64, n_radial: usize, sphere: Arc<SphereSamples>) -> Result<Self> {
        if !(r_min > 0.0) {
            return Err(Error::SingularOrigin(r_min));
        }
        if !(outer > r_min) || !outer.is_finite() {
            return Err(Error::Domain(format!(
                "outer radius {outer} must exceed r_min {r_min}"
            )));
        }
        if n_radial < 4 {
            return Err(Error::Resolution(format!(
                "n_radial must be at least 4, got {n_radial}"
            )));
        }
        let (radial_nodes, w) = composite_rule(r_min, outer, n_radial);
        let radial_weights = radial_nodes
            .iter()
            .zip(&w)
            .map(|(r, w)| w * r.powi(4))
            .collect();
        let (patch_nodes, pw) = composite_rule(0.0, r_min, ORIGIN_PATCH_POINTS);
        let patch_weights = patch_nodes
            .iter()
            .zip(&pw)
            .map(|(r, w)| w * r.powi(4))
            .collect();
        Ok(Self {
            outer_radius: outer,
            r_min,
            radial_nodes,
            radial_weights,
            patch_nodes,
            patch_weights,
            n_radial,
            sphere,
        })
    }

    /// Grid with default inner cutoff `r_min = 1e-3·R`.
    pub fn with_default_cutoff(outer: f64, n_radial: usize, sphere: Arc<SphereSamples>) -> Result<Self> {
        Self::new(outer, DEFAULT_INNER_RATIO * outer, n_radial, sphere)
    }

    /// Same resolution on the ball of radius `outer`, keeping `r_min / R`.
    pub fn with_radius(&self, outer: f64) -> Result<Self> {
        let ratio = self.r_min / self.outer_radius;
        Self::new(outer, ratio * outer, self.n_radial, Arc::clone(&self.sphere))
    }

    pub fn sphere(&self) -> &SphereSamples {
        &self.sphere
    }
}

/// Closed form `∫_{S^4} σ^α dσ` for a monomial exponent `α`.
///
/// Zero when any exponent is odd; otherwise
/// `|S^4| · Π (α_i - 1)!! / Π_{k < |α|/2} (5 + 2k)`.
pub fn sphere_moment(exp: &[u8; DIM]) -> f64 {
    if exp.iter().any(|a| a % 2 == 1) {
        return 0.0;
    }
    let mut num = 1.0;
    for &a in exp {
        let mut k = a as i64 - 1;
        while k > 1 {
            num *= k as f64;
            k -= 2;
        }
    }
    let half: usize = exp.iter().map(|&a| a as usize).sum::<usize>() / 2;
    let den: f64 = (0..half).map(|k| (DIM + 2 * k) as f64).product();
    crate::SPHERE_AREA * num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::exponents_of_degree;
    use crate::{BALL_VOLUME, SPHERE_AREA};

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(7);
        // exact up to degree 13
        let i12: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(12)).sum();
        assert!((i12 - 2.0 / 13.0).abs() < 1e-14);
        let i0: f64 = w.iter().sum();
        assert!((i0 - 2.0).abs() < 1e-14);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn chebyshev_second_kind_weights() {
        let (t, w) = gauss_chebyshev_second(5);
        let i0: f64 = w.iter().sum();
        assert!((i0 - PI / 2.0).abs() < 1e-14);
        let i2: f64 = t.iter().zip(&w).map(|(t, w)| w * t * t).sum();
        assert!((i2 - PI / 8.0).abs() < 1e-14);
    }

    #[test]
    fn sphere_nodes_are_unit_and_weights_positive() {
        let s = build_sphere_samples(8).unwrap();
        for x in &s.nodes {
            assert!((crate::norm(x) - 1.0).abs() < 1e-14);
        }
        assert!(s.weights.iter().all(|&w| w > 0.0));
        let total: f64 = s.weights.iter().sum();
        assert!((total - SPHERE_AREA).abs() < 1e-10);
    }

    #[test]
    fn level_below_two_is_rejected() {
        assert!(matches!(build_sphere_samples(1), Err(Error::Resolution(_))));
    }

    #[test]
    fn monomial_exactness_up_to_level() {
        let level = 8;
        let s = build_sphere_samples(level).unwrap();
        for d in 0..=level {
            for e in exponents_of_degree(d) {
                let q: f64 = s
                    .nodes
                    .iter()
                    .zip(&s.weights)
                    .map(|(x, w)| w * crate::poly::monomial_value(&e, x))
                    .sum();
                assert!((q - sphere_moment(&e)).abs() < 1e-9, "{e:?}: {q}");
            }
        }
    }

    #[test]
    fn ball_grid_errors() {
        let s = Arc::new(build_sphere_samples(4).unwrap());
        assert!(matches!(
            BallGrid::new(1.0, 0.0, 8, s.clone()),
            Err(Error::SingularOrigin(_))
        ));
        assert!(matches!(
            BallGrid::new(1.0, 2.0, 8, s.clone()),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            BallGrid::new(1.0, 0.1, 3, s),
            Err(Error::Resolution(_))
        ));
    }

    #[test]
    fn annulus_volume() {
        let g = build_ball_grid(1.0, 1e-3, 32, 8).unwrap();
        let radial: f64 = g.radial_weights.iter().sum();
        let sphere: f64 = g.sphere.weights.iter().sum();
        let expected = BALL_VOLUME * (1.0 - 1e-15);
        assert!((radial * sphere - expected).abs() < 1e-8);
        let patch: f64 = g.patch_weights.iter().sum();
        assert!((patch - 1e-15 / 5.0).abs() < 1e-25);
    }

    #[test]
    fn composite_rule_keeps_point_count() {
        for n in [4, 16, 17, 32, 33, 50] {
            let (x, w) = composite_rule(0.0, 1.0, n);
            assert_eq!(x.len(), n);
            let s: f64 = w.iter().sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
    }
}
