//! Functions on `S^4`, tangential calculus and the homogeneous Euler system.
//!
//! A [`SphericalField`] is either a closure or a list of polynomials. Either
//! way it is evaluated through its degree-0 extension `x ↦ ζ(x/|x|)`.
//! Tangential derivatives of closures use fourth-order central differences of
//! that extension followed by the projection `I - σσᵀ`; for polynomials the
//! same formula `∇p - σ(σ·∇p)` is applied exactly.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::SphereSamples;
use crate::poly::{Poly, VecPoly};
use crate::quadrature::integrate_sphere_multi;
use crate::{dot, norm, Jacobian, Point, DIM};

/// Step of the tangential difference stencil.
pub const SPHERE_FD_STEP: f64 = 1e-3;

type Closure = Arc<dyn Fn(&Point) -> Point + Send + Sync>;

#[derive(Clone)]
enum Repr {
    Poly(Vec<Poly>),
    Closure(Closure),
}

#[derive(Clone)]
pub struct SphericalField {
    repr: Repr,
    channels: usize,
    tangential: bool,
}

impl std::fmt::Debug for SphericalField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let repr = match &self.repr {
            Repr::Poly(_) => "polynomial",
            Repr::Closure(_) => "closure",
        };
        f.debug_struct("SphericalField")
            .field("repr", &repr)
            .field("channels", &self.channels)
            .field("tangential", &self.tangential)
            .finish()
    }
}

fn unit(x: &Point) -> Point {
    let r = norm(x);
    x.map(|v| v / r)
}

fn projector_apply(s: &Point, g: &Point) -> Point {
    let n = dot(s, g);
    std::array::from_fn(|j| g[j] - n * s[j])
}

/// `∇_S p` as a polynomial: `∂_j p - x_j Σ_k x_k ∂_k p`.
fn poly_tangential_gradient(p: &Poly) -> Vec<Poly> {
    let d: Vec<Poly> = (0..DIM).map(|k| p.derivative(k)).collect();
    let mut radial = Poly::zero();
    for (k, dk) in d.iter().enumerate() {
        radial = radial.add(&Poly::coordinate(k).mul(dk));
    }
    (0..DIM)
        .map(|j| d[j].add(&Poly::coordinate(j).mul(&radial).scaled(-1.0)))
        .collect()
}

fn poly_dot(a: &[Poly], b: &[Poly]) -> Poly {
    a.iter().zip(b).fold(Poly::zero(), |acc, (x, y)| acc.add(&x.mul(y)))
}

impl SphericalField {
    pub fn scalar_fn<F>(f: F) -> Self
    where
        F: Fn(&Point) -> f64 + Send + Sync + 'static,
    {
        Self {
            repr: Repr::Closure(Arc::new(move |s| {
                let mut v = [0.0; DIM];
                v[0] = f(s);
                v
            })),
            channels: 1,
            tangential: false,
        }
    }

    pub fn vector_fn<F>(f: F, tangential: bool) -> Self
    where
        F: Fn(&Point) -> Point + Send + Sync + 'static,
    {
        Self {
            repr: Repr::Closure(Arc::new(f)),
            channels: DIM,
            tangential,
        }
    }

    pub fn scalar_poly(p: Poly) -> Self {
        Self {
            repr: Repr::Poly(vec![p]),
            channels: 1,
            tangential: false,
        }
    }

    pub fn vector_poly(p: VecPoly, tangential: bool) -> Self {
        Self {
            repr: Repr::Poly(p.to_vec()),
            channels: DIM,
            tangential,
        }
    }

    pub fn constant_scalar(c: f64) -> Self {
        Self::scalar_poly(Poly::constant(c))
    }

    pub fn zero_vector() -> Self {
        Self::vector_poly(Default::default(), true)
    }

    /// The identity profile `σ ↦ σ`.
    pub fn sigma() -> Self {
        Self::vector_poly(std::array::from_fn(Poly::coordinate), false)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn is_scalar(&self) -> bool {
        self.channels == 1
    }

    pub fn is_tangential(&self) -> bool {
        self.tangential
    }

    /// Polynomial representation, when the field has one.
    pub fn polys(&self) -> Option<&[Poly]> {
        match &self.repr {
            Repr::Poly(p) => Some(p),
            Repr::Closure(_) => None,
        }
    }

    /// Value at `x/|x|`; scalars occupy slot 0.
    pub fn eval(&self, x: &Point) -> Point {
        let s = unit(x);
        match &self.repr {
            Repr::Poly(p) => {
                let mut v = [0.0; DIM];
                for (i, q) in p.iter().enumerate() {
                    v[i] = q.eval(&s);
                }
                v
            }
            Repr::Closure(f) => f(&s),
        }
    }

    pub fn eval_scalar(&self, x: &Point) -> f64 {
        self.eval(x)[0]
    }

    /// Node values, checked for finiteness.
    pub fn sample(&self, sphere: &SphereSamples) -> Result<Vec<Point>> {
        sphere
            .nodes
            .par_iter()
            .map(|s| {
                let v = self.eval(s);
                if v.iter().all(|c| c.is_finite()) {
                    Ok(v)
                } else {
                    Err(Error::Evaluation(format!("non-finite value {v:?} at node {s:?}")))
                }
            })
            .collect()
    }

    /// Largest `|σ·ζ(σ)|` over the nodes.
    pub fn max_normal_component(&self, sphere: &SphereSamples) -> Result<f64> {
        Ok(self
            .sample(sphere)?
            .iter()
            .zip(&sphere.nodes)
            .map(|(v, s)| dot(v, s).abs())
            .fold(0.0, f64::max))
    }

    /// Checks the tangency flag against node values.
    pub fn verify_tangential(&self, sphere: &SphereSamples, tol: f64) -> Result<()> {
        if !self.tangential {
            return Err(Error::Tangency("field is not flagged tangential".into()));
        }
        let m = self.max_normal_component(sphere)?;
        if m > tol {
            return Err(Error::Tangency(format!("normal component {m:e} exceeds {tol:e}")));
        }
        Ok(())
    }

    fn require_scalar(&self, op: &str) -> Result<()> {
        if self.is_scalar() {
            Ok(())
        } else {
            Err(Error::Evaluation(format!("{op} expects a scalar field")))
        }
    }

    fn require_vector(&self, op: &str) -> Result<()> {
        if self.is_scalar() {
            Err(Error::Evaluation(format!("{op} expects a vector field")))
        } else {
            Ok(())
        }
    }

    fn closure(&self) -> Closure {
        let me = self.clone();
        match &self.repr {
            Repr::Closure(f) => Arc::clone(f),
            Repr::Poly(_) => Arc::new(move |s| me.eval(s)),
        }
    }

    pub fn component(&self, i: usize) -> SphericalField {
        match &self.repr {
            Repr::Poly(p) => Self::scalar_poly(p.get(i).cloned().unwrap_or_default()),
            Repr::Closure(f) => {
                let f = Arc::clone(f);
                Self::scalar_fn(move |s| f(s)[i])
            }
        }
    }

    /// `α·self + β·other` (same channel count).
    pub fn lin_comb(&self, alpha: f64, other: &SphericalField, beta: f64) -> Result<SphericalField> {
        if self.channels != other.channels {
            return Err(Error::Evaluation("channel counts differ".into()));
        }
        let tangential = self.tangential && other.tangential;
        Ok(match (&self.repr, &other.repr) {
            (Repr::Poly(a), Repr::Poly(b)) => Self {
                repr: Repr::Poly(
                    a.iter()
                        .zip(b)
                        .map(|(x, y)| x.scaled(alpha).add(&y.scaled(beta)))
                        .collect(),
                ),
                channels: self.channels,
                tangential,
            },
            _ => {
                let (f, g) = (self.closure(), other.closure());
                Self {
                    repr: Repr::Closure(Arc::new(move |s| {
                        let (a, b) = (f(s), g(s));
                        std::array::from_fn(|i| alpha * a[i] + beta * b[i])
                    })),
                    channels: self.channels,
                    tangential,
                }
            }
        })
    }

    pub fn add(&self, other: &SphericalField) -> Result<SphericalField> {
        self.lin_comb(1.0, other, 1.0)
    }

    pub fn scaled(&self, c: f64) -> SphericalField {
        self.lin_comb(c, self, 0.0).expect("same channel count")
    }

    /// Scalar times field.
    pub fn times(&self, scalar: &SphericalField) -> Result<SphericalField> {
        scalar.require_scalar("multiplication")?;
        Ok(match (&self.repr, &scalar.repr) {
            (Repr::Poly(a), Repr::Poly(b)) => Self {
                repr: Repr::Poly(a.iter().map(|x| x.mul(&b[0])).collect()),
                channels: self.channels,
                tangential: self.tangential,
            },
            _ => {
                let (f, g) = (self.closure(), scalar.closure());
                let n = self.channels;
                Self {
                    repr: Repr::Closure(Arc::new(move |s| {
                        let c = g(s)[0];
                        let mut v = f(s);
                        for x in v.iter_mut().take(n) {
                            *x *= c;
                        }
                        v
                    })),
                    channels: self.channels,
                    tangential: self.tangential,
                }
            }
        })
    }

    /// Node-wise dot product of two vector fields.
    pub fn dot(&self, other: &SphericalField) -> Result<SphericalField> {
        self.require_vector("dot")?;
        other.require_vector("dot")?;
        Ok(match (&self.repr, &other.repr) {
            (Repr::Poly(a), Repr::Poly(b)) => Self::scalar_poly(poly_dot(a, b)),
            _ => {
                let (f, g) = (self.closure(), other.closure());
                Self::scalar_fn(move |s| dot(&f(s), &g(s)))
            }
        })
    }

    /// `f = σ·ζ`.
    pub fn normal_part(&self) -> Result<SphericalField> {
        self.dot(&SphericalField::sigma())
    }

    /// `v = ζ - (σ·ζ)σ`.
    pub fn tangential_part(&self) -> Result<SphericalField> {
        let f = self.normal_part()?;
        let mut v = self.lin_comb(1.0, &SphericalField::sigma().times(&f)?, -1.0)?;
        v.tangential = true;
        Ok(v)
    }

    /// `σ ↦ f(σ)σ` for a scalar `f`.
    pub fn radial_from(f: &SphericalField) -> Result<SphericalField> {
        SphericalField::sigma().times(f)
    }

    /// Row `i` holds `∇_{S^4} ζ^i` at `σ`.
    pub fn tangential_jacobian(&self, x: &Point) -> Jacobian {
        let s = unit(x);
        let mut jac = [[0.0; DIM]; DIM];
        match &self.repr {
            Repr::Poly(p) => {
                for (i, q) in p.iter().enumerate() {
                    jac[i] = projector_apply(&s, &q.gradient(&s));
                }
            }
            Repr::Closure(_) => {
                let h = SPHERE_FD_STEP;
                for k in 0..DIM {
                    let at = |t: f64| {
                        let mut y = s;
                        y[k] += t;
                        self.eval(&y)
                    };
                    let (p1, m1, p2, m2) = (at(h), at(-h), at(2.0 * h), at(-2.0 * h));
                    for i in 0..self.channels {
                        jac[i][k] = (8.0 * (p1[i] - m1[i]) - (p2[i] - m2[i])) / (12.0 * h);
                    }
                }
                for row in jac.iter_mut().take(self.channels) {
                    *row = projector_apply(&s, row);
                }
            }
        }
        jac
    }

    /// `w ↦ Σ_j v_j (∇_{S^4} w^i)_j` for each channel `i` of `self`.
    pub fn directional_derivative(&self, v: &SphericalField) -> Result<SphericalField> {
        v.require_vector("directional derivative")?;
        Ok(match (&self.repr, &v.repr) {
            (Repr::Poly(w), Repr::Poly(vp)) => Self {
                repr: Repr::Poly(
                    w.iter()
                        .map(|q| poly_dot(vp, &poly_tangential_gradient(q)))
                        .collect(),
                ),
                channels: self.channels,
                tangential: false,
            },
            _ => {
                let me = self.clone();
                let vv = v.clone();
                let n = self.channels;
                Self {
                    repr: Repr::Closure(Arc::new(move |s| {
                        let jac = me.tangential_jacobian(s);
                        let d = vv.eval(s);
                        let mut out = [0.0; DIM];
                        for i in 0..n {
                            out[i] = dot(&jac[i], &d);
                        }
                        out
                    })),
                    channels: self.channels,
                    tangential: false,
                }
            }
        })
    }

    /// Projection onto the tangent space, node-wise.
    pub fn project_tangential(&self) -> Result<SphericalField> {
        self.tangential_part()
    }
}

/// `∇_{S^4} f` of a scalar field.
pub fn tangential_gradient(f: &SphericalField) -> Result<SphericalField> {
    f.require_scalar("tangential gradient")?;
    Ok(match &f.repr {
        Repr::Poly(p) => {
            let g = poly_tangential_gradient(&p[0]);
            SphericalField {
                repr: Repr::Poly(g),
                channels: DIM,
                tangential: true,
            }
        }
        Repr::Closure(_) => {
            let f = f.clone();
            SphericalField::vector_fn(move |s| f.tangential_jacobian(s)[0], true)
        }
    })
}

/// `div_{S^4} v = Σ_i (∇_{S^4} v^i)_i` of a tangential field.
pub fn sphere_divergence(v: &SphericalField) -> Result<SphericalField> {
    v.require_vector("divergence")?;
    if !v.is_tangential() {
        return Err(Error::Tangency("sphere divergence needs a tangential field".into()));
    }
    Ok(match &v.repr {
        Repr::Poly(p) => {
            let mut div = Poly::zero();
            for (i, q) in p.iter().enumerate() {
                div = div.add(&poly_tangential_gradient(q)[i]);
            }
            SphericalField::scalar_poly(div)
        }
        Repr::Closure(_) => {
            let v = v.clone();
            SphericalField::scalar_fn(move |s| {
                let jac = v.tangential_jacobian(s);
                (0..DIM).map(|i| jac[i][i]).sum()
            })
        }
    })
}

/// `(N-2) f + div_{S^4} v` for `ζ = v + fσ`, i.e. `|x|^2 div(ζ(σ)/|x|)`.
pub fn homogeneous_divergence(zeta: &SphericalField) -> Result<SphericalField> {
    let f = zeta.normal_part()?;
    let v = zeta.tangential_part()?;
    f.scaled(DimensionCoefficients::N5.n_minus_2)
        .add(&sphere_divergence(&v)?)
}

/// The dimension-dependent coefficients of the spherical Euler system,
/// kept symbolic in `N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionCoefficients {
    pub n: f64,
    pub n_minus_2: f64,
    pub n_minus_4: f64,
    pub n_minus_5: f64,
    /// `(N - 2)/3`, the coefficient of `∫f^4` in the second split identity.
    pub split_quartic: f64,
}

impl DimensionCoefficients {
    pub const fn new(n: f64) -> Self {
        Self {
            n,
            n_minus_2: n - 2.0,
            n_minus_4: n - 4.0,
            n_minus_5: n - 5.0,
            split_quartic: (n - 2.0) / 3.0,
        }
    }

    pub const N5: DimensionCoefficients = DimensionCoefficients::new(5.0);
}

/// Velocity data `ζ = v + fσ` with pressure trace `p` of a homogeneous
/// stationary Euler field.
#[derive(Debug, Clone)]
pub struct EulerTriple {
    pub v: SphericalField,
    pub f: SphericalField,
    pub p: SphericalField,
}

impl EulerTriple {
    pub fn new(v: SphericalField, f: SphericalField, p: SphericalField) -> Result<Self> {
        v.require_vector("EulerTriple velocity")?;
        if !v.is_tangential() {
            return Err(Error::Tangency("EulerTriple velocity must be tangential".into()));
        }
        f.require_scalar("EulerTriple normal part")?;
        p.require_scalar("EulerTriple pressure")?;
        Ok(Self { v, f, p })
    }

    /// `H = |v|^2 + f^2 + 2p`.
    pub fn head(&self) -> Result<SphericalField> {
        bernoulli_head(&self.v, &self.f, &self.p)
    }
}

/// `|v|^2 + f^2 + 2p`.
pub fn bernoulli_head(
    v: &SphericalField,
    f: &SphericalField,
    p: &SphericalField,
) -> Result<SphericalField> {
    v.dot(v)?.add(&f.times(f)?)?.add(&p.scaled(2.0))
}

#[derive(Debug, Clone)]
pub struct EulerResiduals {
    /// `3f + div v`.
    pub r1: SphericalField,
    /// `v·∇f - H`.
    pub r2: SphericalField,
    /// `v·∇H - 2fH`.
    pub r3: SphericalField,
    /// Tangential part of `(v·∇)v` plus `∇p`.
    pub r4: SphericalField,
}

pub fn euler_residuals(t: &EulerTriple) -> Result<EulerResiduals> {
    let c = DimensionCoefficients::N5;
    let h = t.head()?;
    let r1 = t.f.scaled(c.n_minus_2).add(&sphere_divergence(&t.v)?)?;
    let r2 = t.f.directional_derivative(&t.v)?.lin_comb(1.0, &h, -1.0)?;
    let r3 = h
        .directional_derivative(&t.v)?
        .lin_comb(1.0, &h.times(&t.f)?, -2.0)?;
    let conv = t.v.directional_derivative(&t.v)?.tangential_part()?;
    let r4 = conv.add(&tangential_gradient(&t.p)?)?;
    Ok(EulerResiduals { r1, r2, r3, r4 })
}

/// Integrated defects of the two split identities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitDefects {
    /// `∫(v·∇f)H + ∫(div v) f H + ∫(v·∇H) f`.
    pub d1: f64,
    /// `d2_lhs - d2_rhs`.
    pub d2: f64,
    /// `∫(v·∇f) f^2`.
    pub d2_lhs: f64,
    /// `((N-2)/3) ∫ f^4`.
    pub d2_rhs: f64,
}

/// Evaluates both split identities with `f = -div v/(N-2)` and `H = v·∇f`.
pub fn split_identity_defects(v: &SphericalField, sphere: &SphereSamples) -> Result<SplitDefects> {
    let c = DimensionCoefficients::N5;
    let div = sphere_divergence(v)?;
    let f = div.scaled(-1.0 / c.n_minus_2);
    let vgf = f.directional_derivative(v)?;
    let h = vgf.clone();
    let vgh = h.directional_derivative(v)?;
    let [a, b, cc, lhs, quartic] = integrate_sphere_multi(sphere, |s| {
        let (fv, hv, dv) = (f.eval_scalar(s), h.eval_scalar(s), div.eval_scalar(s));
        let (vf, vh) = (vgf.eval_scalar(s), vgh.eval_scalar(s));
        Ok([vf * hv, dv * fv * hv, vh * fv, vf * fv * fv, fv.powi(4)])
    })?;
    let rhs = c.split_quartic * quartic;
    Ok(SplitDefects {
        d1: a + b + cc,
        d2: lhs - rhs,
        d2_lhs: lhs,
        d2_rhs: rhs,
    })
}

/// `∫_{S^4} v·∇g + ∫_{S^4} (div v) g`, zero on a closed manifold.
pub fn parts_identity_defect(
    v: &SphericalField,
    g: &SphericalField,
    sphere: &SphereSamples,
) -> Result<f64> {
    let vg = g.directional_derivative(v)?;
    let div = sphere_divergence(v)?;
    let [a, b] = integrate_sphere_multi(sphere, |s| {
        Ok([vg.eval_scalar(s), div.eval_scalar(s) * g.eval_scalar(s)])
    })?;
    Ok(a + b)
}

/// `(V·∇)V` of `V(x) = ζ(x/|x|)/|x|` by ambient central differences.
pub fn ambient_convective(zeta: &SphericalField, x: &Point, h: f64) -> Point {
    let field = |y: &Point| {
        let r = norm(y);
        zeta.eval(y).map(|c| c / r)
    };
    let v = field(x);
    let mut out = [0.0; DIM];
    for j in 0..DIM {
        let mut xp = *x;
        let mut xm = *x;
        xp[j] += h;
        xm[j] -= h;
        let (fp, fm) = (field(&xp), field(&xm));
        for i in 0..DIM {
            out[i] += v[j] * (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    out
}

/// `r^{-3}[(v·∇_S v)_T - |v|^2σ + σ(v·∇_S f) - f^2σ]` at `x = rσ`, with
/// `ζ = v + fσ`.
pub fn convective_decomposition(zeta: &SphericalField) -> Result<SphericalField> {
    let f = zeta.normal_part()?;
    let v = zeta.tangential_part()?;
    let conv = v.directional_derivative(&v)?.tangential_part()?;
    let normal = v
        .dot(&v)?
        .scaled(-1.0)
        .add(&f.directional_derivative(&v)?)?
        .lin_comb(1.0, &f.times(&f)?, -1.0)?;
    conv.add(&SphericalField::radial_from(&normal)?)
}

/// `max_probe |r(V·∇)V - r^{-2}[...]|` at radius `r`.
pub fn convective_decomposition_defect(zeta: &SphericalField, probes: &[Point], r: f64) -> Result<f64> {
    zeta.require_vector("convective decomposition")?;
    let rhs = convective_decomposition(zeta)?;
    let mut worst: f64 = 0.0;
    for s in probes {
        let s = unit(s);
        let x = s.map(|c| c * r);
        let lhs = ambient_convective(zeta, &x, 1e-4 * r.max(1.0));
        let right = rhs.eval(&s);
        for i in 0..DIM {
            let d = (r * lhs[i] - right[i] / (r * r)).abs();
            if !d.is_finite() {
                return Err(Error::Evaluation(format!("non-finite defect at {s:?}")));
            }
            worst = worst.max(d);
        }
    }
    Ok(worst)
}
