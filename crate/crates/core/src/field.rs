//! Field contract, the fixture catalog and ambient finite differences.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{self, Poly, Term, VecPoly};
use crate::{dot, norm, Jacobian, Point, DIM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Scalar,
    Vector,
}

/// Open annulus `inner < |x| < outer`; `inner = None` includes the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub inner: Option<f64>,
    pub outer: f64,
}

impl Domain {
    pub const WHOLE_SPACE: Domain = Domain {
        inner: None,
        outer: f64::INFINITY,
    };

    pub const PUNCTURED: Domain = Domain {
        inner: Some(0.0),
        outer: f64::INFINITY,
    };

    pub fn contains(&self, x: &Point) -> bool {
        let r = norm(x);
        r < self.outer && self.inner.is_none_or(|a| r > a)
    }

    /// Whether the closed ball of radius `h` around `x` lies inside.
    pub fn contains_ball(&self, x: &Point, h: f64) -> bool {
        let r = norm(x);
        r + h < self.outer && self.inner.is_none_or(|a| r - h > a)
    }

    pub fn intersect(&self, other: &Domain) -> Domain {
        let inner = match (self.inner, other.inner) {
            (None, b) => b,
            (a, None) => a,
            (Some(a), Some(b)) => Some(a.max(b)),
        };
        Domain {
            inner,
            outer: self.outer.min(other.outer),
        }
    }
}

/// A velocity (five components) or pressure (component 0) on a region of
/// `R^5`. Scalars return their value in slot 0 and their gradient in row 0.
pub trait Field: Send + Sync {
    fn kind(&self) -> FieldKind;

    fn value(&self, x: &Point) -> Point;

    /// Closed-form gradient when one is known.
    fn jacobian(&self, _x: &Point) -> Option<Jacobian> {
        None
    }

    fn domain(&self) -> Domain {
        Domain::WHOLE_SPACE
    }
}

pub type SharedField = Arc<dyn Field>;

/// Default finite-difference step `1e-4·max(1, |x|)`.
pub fn default_step(x: &Point) -> f64 {
    1e-4 * norm(x).max(1.0)
}

/// Second-order central differences of every component.
pub fn fd_jacobian(field: &dyn Field, x: &Point, h: f64) -> Result<Jacobian> {
    if !(h > 0.0) {
        return Err(Error::Domain(format!("finite-difference step must be positive, got {h}")));
    }
    if !field.domain().contains_ball(x, h) {
        return Err(Error::Domain(format!(
            "stencil of radius {h} around {x:?} leaves the field domain"
        )));
    }
    let mut jac = [[0.0; DIM]; DIM];
    for j in 0..DIM {
        let mut xp = *x;
        let mut xm = *x;
        xp[j] += h;
        xm[j] -= h;
        let fp = field.value(&xp);
        let fm = field.value(&xm);
        for i in 0..DIM {
            jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Gradient of `field` at `x`: the closed form when the field supplies one,
/// otherwise central differences with step `h` (default [`default_step`]).
pub fn ambient_gradient(field: &dyn Field, x: &Point, h: Option<f64>) -> Result<Jacobian> {
    if !field.domain().contains(x) {
        return Err(Error::Domain(format!("{x:?} is outside the field domain")));
    }
    if let Some(j) = field.jacobian(x) {
        return Ok(j);
    }
    fd_jacobian(field, x, h.unwrap_or_else(|| default_step(x)))
}

fn unit_and_radius(x: &Point) -> (Point, f64) {
    let r = norm(x);
    (x.map(|v| v / r), r)
}

/// Tangential gradient `(I - σσᵀ)∇p(σ)` of a polynomial restricted to the sphere.
pub fn poly_sphere_gradient(p: &Poly, sigma: &Point) -> Point {
    let g = p.gradient(sigma);
    let gn = dot(&g, sigma);
    std::array::from_fn(|j| g[j] - gn * sigma[j])
}

// ---------------------------------------------------------------------------
// Fixtures

#[derive(Debug, Clone)]
pub struct Constant {
    pub kind: FieldKind,
    pub value: Point,
}

impl Field for Constant {
    fn kind(&self) -> FieldKind {
        self.kind
    }
    fn value(&self, _x: &Point) -> Point {
        self.value
    }
    fn jacobian(&self, _x: &Point) -> Option<Jacobian> {
        Some([[0.0; DIM]; DIM])
    }
}

/// `u(x) = x`.
#[derive(Debug, Clone, Copy)]
pub struct LinearRadial;

impl Field for LinearRadial {
    fn kind(&self) -> FieldKind {
        FieldKind::Vector
    }
    fn value(&self, x: &Point) -> Point {
        *x
    }
    fn jacobian(&self, _x: &Point) -> Option<Jacobian> {
        Some(std::array::from_fn(|i| std::array::from_fn(|j| f64::from(u8::from(i == j)))))
    }
}

/// `u(x) = ζ(x/|x|)/|x|` with a polynomial profile `ζ`.
#[derive(Debug, Clone)]
pub struct Homogeneous {
    pub zeta: VecPoly,
}

impl Homogeneous {
    pub fn new(zeta: VecPoly) -> Self {
        Self { zeta }
    }
}

impl Field for Homogeneous {
    fn kind(&self) -> FieldKind {
        FieldKind::Vector
    }
    fn value(&self, x: &Point) -> Point {
        let (s, r) = unit_and_radius(x);
        std::array::from_fn(|i| self.zeta[i].eval(&s) / r)
    }
    /// `∂_j h^i = |x|^{-2}((∇_{S^4} ζ^i)_j - σ_j ζ^i)`.
    fn jacobian(&self, x: &Point) -> Option<Jacobian> {
        let (s, r) = unit_and_radius(x);
        let r2 = r * r;
        Some(std::array::from_fn(|i| {
            let (z, g) = self.zeta[i].value_and_gradient(&s);
            let n: f64 = (0..DIM).map(|k| g[k] * s[k]).sum();
            std::array::from_fn(|j| (g[j] - s[j] * n - s[j] * z) / r2)
        }))
    }
    fn domain(&self) -> Domain {
        Domain::PUNCTURED
    }
}

/// Rigid rotation in the `(i, j)` coordinate plane: `u^i = -x_j`, `u^j = x_i`.
#[derive(Debug, Clone, Copy)]
pub struct RotationPlane {
    pub i: usize,
    pub j: usize,
}

impl Field for RotationPlane {
    fn kind(&self) -> FieldKind {
        FieldKind::Vector
    }
    fn value(&self, x: &Point) -> Point {
        let mut u = [0.0; DIM];
        u[self.i] = -x[self.j];
        u[self.j] = x[self.i];
        u
    }
    fn jacobian(&self, _x: &Point) -> Option<Jacobian> {
        let mut jac = [[0.0; DIM]; DIM];
        jac[self.i][self.j] = -1.0;
        jac[self.j][self.i] = 1.0;
        Some(jac)
    }
}

/// Polynomial components; one component makes a scalar field.
#[derive(Debug, Clone)]
pub struct Polynomial {
    pub components: Vec<Poly>,
}

impl Field for Polynomial {
    fn kind(&self) -> FieldKind {
        if self.components.len() == 1 {
            FieldKind::Scalar
        } else {
            FieldKind::Vector
        }
    }
    fn value(&self, x: &Point) -> Point {
        let mut u = [0.0; DIM];
        for (i, p) in self.components.iter().enumerate() {
            u[i] = p.eval(x);
        }
        u
    }
    fn jacobian(&self, x: &Point) -> Option<Jacobian> {
        let mut jac = [[0.0; DIM]; DIM];
        for (i, p) in self.components.iter().enumerate() {
            jac[i] = p.gradient(x);
        }
        Some(jac)
    }
}

/// `u(x) = a·exp(-|x - c|²/w²)`; a scalar bump uses `a[0]`.
#[derive(Debug, Clone)]
pub struct GaussianBump {
    pub kind: FieldKind,
    pub amplitude: Point,
    pub width: f64,
    pub center: Point,
}

impl Field for GaussianBump {
    fn kind(&self) -> FieldKind {
        self.kind
    }
    fn value(&self, x: &Point) -> Point {
        let d: Point = std::array::from_fn(|k| x[k] - self.center[k]);
        let e = (-dot(&d, &d) / (self.width * self.width)).exp();
        self.amplitude.map(|a| a * e)
    }
    fn jacobian(&self, x: &Point) -> Option<Jacobian> {
        let d: Point = std::array::from_fn(|k| x[k] - self.center[k]);
        let w2 = self.width * self.width;
        let e = (-dot(&d, &d) / w2).exp();
        Some(std::array::from_fn(|i| {
            std::array::from_fn(|j| -2.0 * d[j] / w2 * self.amplitude[i] * e)
        }))
    }
}

/// Periodic mode `u(x) = a·sin(2π k·x / L)`.
#[derive(Debug, Clone)]
pub struct SineMode {
    pub amplitude: Point,
    pub wave: [i32; DIM],
    pub length: f64,
}

impl SineMode {
    fn wavevector(&self) -> Point {
        std::array::from_fn(|k| 2.0 * std::f64::consts::PI * self.wave[k] as f64 / self.length)
    }
}

impl Field for SineMode {
    fn kind(&self) -> FieldKind {
        FieldKind::Vector
    }
    fn value(&self, x: &Point) -> Point {
        let s = dot(&self.wavevector(), x).sin();
        self.amplitude.map(|a| a * s)
    }
    fn jacobian(&self, x: &Point) -> Option<Jacobian> {
        let k = self.wavevector();
        let c = dot(&k, x).cos();
        Some(std::array::from_fn(|i| std::array::from_fn(|j| self.amplitude[i] * k[j] * c)))
    }
}

/// Scalar `c·|x|^k`.
#[derive(Debug, Clone, Copy)]
pub struct RadialPower {
    pub coef: f64,
    pub exponent: f64,
}

impl Field for RadialPower {
    fn kind(&self) -> FieldKind {
        FieldKind::Scalar
    }
    fn value(&self, x: &Point) -> Point {
        let mut v = [0.0; DIM];
        v[0] = self.coef * norm(x).powf(self.exponent);
        v
    }
    fn jacobian(&self, x: &Point) -> Option<Jacobian> {
        let r = norm(x);
        let mut jac = [[0.0; DIM]; DIM];
        let c = self.coef * self.exponent * r.powf(self.exponent - 2.0);
        for j in 0..DIM {
            jac[0][j] = c * x[j];
        }
        Some(jac)
    }
    fn domain(&self) -> Domain {
        if self.exponent < 0.0 {
            Domain::PUNCTURED
        } else {
            Domain::WHOLE_SPACE
        }
    }
}

/// Scalar `p(x/|x|)·|x|^k` with a polynomial profile.
#[derive(Debug, Clone)]
pub struct HomogeneousScalar {
    pub profile: Poly,
    pub degree: f64,
}

impl Field for HomogeneousScalar {
    fn kind(&self) -> FieldKind {
        FieldKind::Scalar
    }
    fn value(&self, x: &Point) -> Point {
        let (s, r) = unit_and_radius(x);
        let mut v = [0.0; DIM];
        v[0] = self.profile.eval(&s) * r.powf(self.degree);
        v
    }
    /// `∇(p(σ) r^k) = r^{k-1}(∇_{S^4} p + k p σ)`.
    fn jacobian(&self, x: &Point) -> Option<Jacobian> {
        let (s, r) = unit_and_radius(x);
        let g = poly_sphere_gradient(&self.profile, &s);
        let p = self.profile.eval(&s);
        let f = r.powf(self.degree - 1.0);
        let mut jac = [[0.0; DIM]; DIM];
        for j in 0..DIM {
            jac[0][j] = f * (g[j] + self.degree * p * s[j]);
        }
        Some(jac)
    }
    fn domain(&self) -> Domain {
        Domain::PUNCTURED
    }
}

/// `u_λ(x) = λ^a u(λx)`; velocity scaling is `a = 1`, pressure `a = 2`.
#[derive(Clone)]
pub struct Rescaled {
    pub inner: SharedField,
    pub lambda: f64,
    pub amplitude_power: i32,
}

impl Field for Rescaled {
    fn kind(&self) -> FieldKind {
        self.inner.kind()
    }
    fn value(&self, x: &Point) -> Point {
        let a = self.lambda.powi(self.amplitude_power);
        self.inner.value(&x.map(|v| v * self.lambda)).map(|v| v * a)
    }
    fn jacobian(&self, x: &Point) -> Option<Jacobian> {
        let a = self.lambda.powi(self.amplitude_power + 1);
        self.inner
            .jacobian(&x.map(|v| v * self.lambda))
            .map(|j| j.map(|row| row.map(|v| v * a)))
    }
    fn domain(&self) -> Domain {
        let d = self.inner.domain();
        Domain {
            inner: d.inner.map(|a| a / self.lambda),
            outer: d.outer / self.lambda,
        }
    }
}

/// Linear combination `Σ c_k u_k` of fields of one kind.
#[derive(Clone)]
pub struct Combination {
    pub terms: Vec<(f64, SharedField)>,
}

impl Field for Combination {
    fn kind(&self) -> FieldKind {
        self.terms
            .first()
            .map_or(FieldKind::Vector, |(_, f)| f.kind())
    }
    fn value(&self, x: &Point) -> Point {
        let mut u = [0.0; DIM];
        for (c, f) in &self.terms {
            let v = f.value(x);
            for i in 0..DIM {
                u[i] += c * v[i];
            }
        }
        u
    }
    fn jacobian(&self, x: &Point) -> Option<Jacobian> {
        let mut jac = [[0.0; DIM]; DIM];
        for (c, f) in &self.terms {
            let j = f.jacobian(x)?;
            for i in 0..DIM {
                for k in 0..DIM {
                    jac[i][k] += c * j[i][k];
                }
            }
        }
        Some(jac)
    }
    fn domain(&self) -> Domain {
        self.terms
            .iter()
            .fold(Domain::WHOLE_SPACE, |d, (_, f)| d.intersect(&f.domain()))
    }
}

pub fn zero_scalar() -> SharedField {
    Arc::new(Constant {
        kind: FieldKind::Scalar,
        value: [0.0; DIM],
    })
}

pub fn zero_vector() -> SharedField {
    Arc::new(Constant {
        kind: FieldKind::Vector,
        value: [0.0; DIM],
    })
}

// ---------------------------------------------------------------------------
// Catalog

/// Profile `ζ` of a homogeneous fixture. Coordinate indices are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ZetaSpec {
    /// `ζ = v`.
    Constant(Point),
    /// `ζ = c·σ`.
    Radial(f64),
    /// `ζ = (.., -σ_j, .., σ_i, ..)` in the `(i, j)` plane.
    Rotation([usize; 2]),
    /// `ζ = ∇_{S^4} σ_k = e_k - σ_k σ`.
    CoordinateGradient(usize),
    /// Divergence-free `ζ = e_k + σ_k σ / 3`.
    DivergenceFreeAxis(usize),
    /// One list of terms per component.
    Polynomial(Vec<Vec<Term>>),
}

fn check_axis(k: usize) -> Result<usize> {
    if (1..=DIM).contains(&k) {
        Ok(k - 1)
    } else {
        Err(Error::Config(format!("coordinate index {k} outside 1..={DIM}")))
    }
}

impl ZetaSpec {
    pub fn to_vec_poly(&self) -> Result<VecPoly> {
        Ok(match self {
            ZetaSpec::Constant(v) => poly::constant_vec_poly(v),
            ZetaSpec::Radial(c) => poly::radial_vec_poly(*c),
            ZetaSpec::Rotation([i, j]) => {
                let (i, j) = (check_axis(*i)?, check_axis(*j)?);
                if i == j {
                    return Err(Error::Config("rotation plane needs two distinct axes".into()));
                }
                let mut z: VecPoly = Default::default();
                z[i] = Poly::coordinate(j).scaled(-1.0);
                z[j] = Poly::coordinate(i);
                z
            }
            ZetaSpec::CoordinateGradient(k) => {
                let k = check_axis(*k)?;
                let sk = Poly::coordinate(k);
                std::array::from_fn(|i| {
                    let base = if i == k { Poly::constant(1.0) } else { Poly::zero() };
                    base.add(&sk.mul(&Poly::coordinate(i)).scaled(-1.0))
                })
            }
            ZetaSpec::DivergenceFreeAxis(k) => {
                let k = check_axis(*k)?;
                let sk = Poly::coordinate(k);
                std::array::from_fn(|i| {
                    let base = if i == k { Poly::constant(1.0) } else { Poly::zero() };
                    base.add(&sk.mul(&Poly::coordinate(i)).scaled(1.0 / 3.0))
                })
            }
            ZetaSpec::Polynomial(components) => vec_poly_from_terms(components)?,
        })
    }
}

fn vec_poly_from_terms(components: &[Vec<Term>]) -> Result<VecPoly> {
    if components.len() != DIM {
        return Err(Error::Config(format!(
            "vector polynomial needs {DIM} components, got {}",
            components.len()
        )));
    }
    Ok(std::array::from_fn(|i| Poly::from_terms(&components[i])))
}

fn default_width() -> f64 {
    1.0
}

/// Every fixture the catalog knows, in its serialized form
/// `{"fixture": "<name>", ...params}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "fixture", rename_all = "snake_case", deny_unknown_fields)]
pub enum FixtureSpec {
    /// Constant vector `e`.
    Constant { vector: Point },
    /// `u = x`.
    LinearRadial,
    /// `u = ζ(σ)/|x|`.
    Homogeneous { zeta: ZetaSpec },
    /// Rotation in the plane of 1-based axes `i`, `j`.
    RotationPlane { i: usize, j: usize },
    /// Vector polynomial, one term list per component.
    Polynomial { components: Vec<Vec<Term>> },
    /// `a·exp(-|x - c|²/w²)`.
    GaussianBump {
        amplitude: Point,
        #[serde(default = "default_width")]
        width: f64,
        #[serde(default)]
        center: Point,
    },
    /// `a·sin(2π k·x / L)`.
    SineMode {
        amplitude: Point,
        wave: [i32; DIM],
        length: f64,
    },
    /// Scalar constant.
    ScalarConstant { value: f64 },
    /// Scalar polynomial.
    ScalarPolynomial { terms: Vec<Term> },
    /// Scalar `c·|x|^k`.
    RadialPower { coef: f64, exponent: f64 },
    /// Scalar `p(σ)·|x|^k`.
    HomogeneousScalar { profile: Vec<Term>, degree: f64 },
}

impl FixtureSpec {
    pub fn build(&self) -> Result<SharedField> {
        Ok(match self {
            FixtureSpec::Constant { vector } => Arc::new(Constant {
                kind: FieldKind::Vector,
                value: *vector,
            }),
            FixtureSpec::LinearRadial => Arc::new(LinearRadial),
            FixtureSpec::Homogeneous { zeta } => Arc::new(Homogeneous::new(zeta.to_vec_poly()?)),
            FixtureSpec::RotationPlane { i, j } => {
                let (i, j) = (check_axis(*i)?, check_axis(*j)?);
                if i == j {
                    return Err(Error::Config("rotation plane needs two distinct axes".into()));
                }
                Arc::new(RotationPlane { i, j })
            }
            FixtureSpec::Polynomial { components } => Arc::new(Polynomial {
                components: vec_poly_from_terms(components)?.to_vec(),
            }),
            FixtureSpec::GaussianBump {
                amplitude,
                width,
                center,
            } => {
                if !(*width > 0.0) {
                    return Err(Error::Config(format!("gaussian width must be positive, got {width}")));
                }
                Arc::new(GaussianBump {
                    kind: FieldKind::Vector,
                    amplitude: *amplitude,
                    width: *width,
                    center: *center,
                })
            }
            FixtureSpec::SineMode {
                amplitude,
                wave,
                length,
            } => {
                if !(*length > 0.0) {
                    return Err(Error::Config(format!("box length must be positive, got {length}")));
                }
                Arc::new(SineMode {
                    amplitude: *amplitude,
                    wave: *wave,
                    length: *length,
                })
            }
            FixtureSpec::ScalarConstant { value } => {
                let mut v = [0.0; DIM];
                v[0] = *value;
                Arc::new(Constant {
                    kind: FieldKind::Scalar,
                    value: v,
                })
            }
            FixtureSpec::ScalarPolynomial { terms } => Arc::new(Polynomial {
                components: vec![Poly::from_terms(terms)],
            }),
            FixtureSpec::RadialPower { coef, exponent } => Arc::new(RadialPower {
                coef: *coef,
                exponent: *exponent,
            }),
            FixtureSpec::HomogeneousScalar { profile, degree } => Arc::new(HomogeneousScalar {
                profile: Poly::from_terms(profile),
                degree: *degree,
            }),
        })
    }

    /// The profile `ζ` when the fixture is homogeneous of degree `-1`.
    pub fn zeta(&self) -> Option<Result<VecPoly>> {
        match self {
            FixtureSpec::Homogeneous { zeta } => Some(zeta.to_vec_poly()),
            _ => None,
        }
    }
}

/// Builds a catalog fixture from its name and a JSON object of parameters.
pub fn fixture_field(name: &str, params: &serde_json::Value) -> Result<SharedField> {
    let mut obj = match params {
        serde_json::Value::Object(m) => m.clone(),
        serde_json::Value::Null => serde_json::Map::new(),
        other => {
            return Err(Error::Config(format!(
                "fixture parameters must be an object, got {other}"
            )))
        }
    };
    obj.insert("fixture".into(), serde_json::Value::String(name.into()));
    let spec: FixtureSpec = serde_json::from_value(serde_json::Value::Object(obj))
        .map_err(|e| Error::Config(format!("fixture `{name}`: {e}")))?;
    spec.build()
}
