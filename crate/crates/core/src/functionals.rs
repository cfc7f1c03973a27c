//! Scale-invariant energy, the monotonicity quantities `A`, `D`, `Q`, `℘`,
//! the flux defect `T` and related integrals.
//!
//! With `σ = x/|x|` and all integrals over `B_r` unless marked,
//!
//! ```text
//! M = (1/r³)∫|u|² + (1/r)∫|∇u|²
//! A = (1/r³)∫u·(x·∇)u + (9/4r³)∫|u|² - (1/r²)∫(|u|²/2 + P) u·σ
//! D = (15/4r³)∫|u|² + (1/4r)∫|∇u|² + (3/4r³)∫|∇(|x|u)|² + (3/4r³)∫(r²-|x|²)|∇u|²
//! Q = D without the |∇(|x|u)|² term
//! ℘ = (1/r²)∫(|u|² + 2P) u·σ
//! T = (1/2r)∫_{∂B_r} x·∇|u|² - ∫|∇u|² - ∫_{∂B_r}(u·σ)(|u|²/2 + P)
//! ```
//!
//! and for every smooth pair `A' = D/r + (2/r³)∫(|u|²/2+P)u·σ + T/r²`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{default_step, fd_jacobian, Field, FieldKind};
use crate::grid::BallGrid;
use crate::quadrature::{integrate_ball_multi, integrate_shell_multi, OriginCorrection};
use crate::{dot, norm, Jacobian, Point, DIM};

/// Gradient of `field`, shrinking the difference step near an excluded
/// origin so the stencil stays in the domain.
pub fn gradient_at(field: &dyn Field, x: &Point) -> Result<Jacobian> {
    if let Some(j) = field.jacobian(x) {
        return Ok(j);
    }
    let mut h = default_step(x);
    if let Some(a) = field.domain().inner {
        h = h.min(0.5 * (norm(x) - a));
    }
    fd_jacobian(field, x, h)
}

fn check_ball(field: &dyn Field, r: f64, what: &str) -> Result<()> {
    let d = field.domain();
    if !(r > 0.0) || r >= d.outer {
        return Err(Error::Domain(format!("{what} is not defined on the ball of radius {r}")));
    }
    if d.inner.is_some_and(|a| a > 0.0) {
        return Err(Error::Domain(format!("{what} is undefined near the origin")));
    }
    Ok(())
}

fn check_pair(u: &dyn Field, p: &dyn Field, r: f64) -> Result<()> {
    if u.kind() != FieldKind::Vector {
        return Err(Error::Config("velocity must be a vector field".into()));
    }
    if p.kind() != FieldKind::Scalar {
        return Err(Error::Config("pressure must be a scalar field".into()));
    }
    check_ball(u, r, "velocity")?;
    check_ball(p, r, "pressure")
}

fn frob2(j: &Jacobian) -> f64 {
    j.iter().flatten().map(|v| v * v).sum()
}

/// `u·(x·∇)u`.
fn radial_transport(u: &Point, j: &Jacobian, x: &Point) -> f64 {
    (0..DIM).map(|i| u[i] * dot(&j[i], x)).sum()
}

/// Ball integrals behind every monotonicity quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallIntegrals {
    /// `∫u·(x·∇)u`
    pub transport: f64,
    /// `∫|u|²`
    pub kinetic: f64,
    /// `∫(|u|²/2 + P) u·σ`
    pub bernoulli_flux: f64,
    /// `∫|∇u|²`
    pub dissipation: f64,
    /// `∫|∇(|x|u)|²`
    pub weighted_gradient: f64,
    /// `∫(r² - |x|²)|∇u|²`
    pub tapered_dissipation: f64,
}

pub fn ball_integrals(u: &dyn Field, p: &dyn Field, r: f64, grid: &BallGrid) -> Result<BallIntegrals> {
    check_pair(u, p, r)?;
    let g = grid.with_radius(r)?;
    let [k0, k1, k2, k3, k4, k5] = integrate_ball_multi(&g, OriginCorrection::Patch, |x| {
        let uv = u.value(x);
        let j = gradient_at(u, x)?;
        let pv = p.value(x)[0];
        let rho = norm(x);
        let s = x.map(|c| c / rho);
        let u2 = dot(&uv, &uv);
        let g2 = frob2(&j);
        let mut k4 = 0.0;
        for i in 0..DIM {
            for k in 0..DIM {
                let d = s[k] * uv[i] + rho * j[i][k];
                k4 += d * d;
            }
        }
        Ok([
            radial_transport(&uv, &j, x),
            u2,
            (0.5 * u2 + pv) * dot(&uv, &s),
            g2,
            k4,
            (r * r - rho * rho) * g2,
        ])
    })?;
    Ok(BallIntegrals {
        transport: k0,
        kinetic: k1,
        bernoulli_flux: k2,
        dissipation: k3,
        weighted_gradient: k4,
        tapered_dissipation: k5,
    })
}

/// `M(R) = ∫_{B_R}(|u|²/R³ + |∇u|²/R)`.
pub fn scale_invariant_energy(u: &dyn Field, radius: f64, grid: &BallGrid) -> Result<f64> {
    check_ball(u, radius, "velocity")?;
    let g = grid.with_radius(radius)?;
    let [k, d] = integrate_ball_multi(&g, OriginCorrection::Patch, |x| {
        let uv = u.value(x);
        Ok([dot(&uv, &uv), frob2(&gradient_at(u, x)?)])
    })?;
    Ok(k / radius.powi(3) + d / radius)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantities {
    pub a: f64,
    pub d: f64,
    pub q: f64,
    pub wp: f64,
}

impl BallIntegrals {
    pub fn quantities(&self, r: f64) -> Quantities {
        let r2 = r * r;
        let r3 = r2 * r;
        let q = 3.75 * self.kinetic / r3 + 0.25 * self.dissipation / r + 0.75 * self.tapered_dissipation / r3;
        Quantities {
            a: self.transport / r3 + 2.25 * self.kinetic / r3 - self.bernoulli_flux / r2,
            d: q + 0.75 * self.weighted_gradient / r3,
            q,
            wp: 2.0 * self.bernoulli_flux / r2,
        }
    }

    pub fn energy(&self, r: f64) -> f64 {
        self.kinetic / r.powi(3) + self.dissipation / r
    }
}

pub fn monotonicity_quantities(u: &dyn Field, p: &dyn Field, r: f64, grid: &BallGrid) -> Result<Quantities> {
    Ok(ball_integrals(u, p, r, grid)?.quantities(r))
}

/// `A(r)` alone.
pub fn a_value(u: &dyn Field, p: &dyn Field, r: f64, grid: &BallGrid) -> Result<f64> {
    Ok(monotonicity_quantities(u, p, r, grid)?.a)
}

/// Sphere integrals `∫_{∂B_r} x·∇|u|²` and `∫_{∂B_r}(u·σ)(|u|²/2 + P)`.
fn shell_terms(u: &dyn Field, p: &dyn Field, r: f64, grid: &BallGrid) -> Result<[f64; 2]> {
    integrate_shell_multi(grid.sphere(), r, |x| {
        let uv = u.value(x);
        let j = gradient_at(u, x)?;
        let s = x.map(|c| c / r);
        let u2 = dot(&uv, &uv);
        Ok([
            2.0 * radial_transport(&uv, &j, x),
            dot(&uv, &s) * (0.5 * u2 + p.value(x)[0]),
        ])
    })
}

fn flux_defect_from(shell: [f64; 2], dissipation: f64, r: f64) -> f64 {
    shell[0] / (2.0 * r) - dissipation - shell[1]
}

/// `T(r)`.
pub fn flux_defect(u: &dyn Field, p: &dyn Field, r: f64, grid: &BallGrid) -> Result<f64> {
    let k = ball_integrals(u, p, r, grid)?;
    Ok(flux_defect_from(shell_terms(u, p, r, grid)?, k.dissipation, r))
}

/// Central difference `(A(r+dr) - A(r-dr))/(2dr)`; with `richardson` the
/// estimates at `dr` and `dr/2` are combined as `(4D(dr/2) - D(dr))/3`.
pub fn a_prime_fd(
    u: &dyn Field,
    p: &dyn Field,
    r: f64,
    dr: f64,
    grid: &BallGrid,
    richardson: bool,
) -> Result<f64> {
    if !(dr > 0.0) || dr >= r {
        return Err(Error::Domain(format!("radius step {dr} must lie in (0, {r})")));
    }
    let central = |h: f64| -> Result<f64> {
        Ok((a_value(u, p, r + h, grid)? - a_value(u, p, r - h, grid)?) / (2.0 * h))
    };
    let d1 = central(dr)?;
    if richardson {
        Ok((4.0 * central(0.5 * dr)? - d1) / 3.0)
    } else {
        Ok(d1)
    }
}

/// One row of a radial profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub r: f64,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    pub wp: f64,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "A_prime")]
    pub a_prime: f64,
    pub identity_defect: f64,
}

impl MonotonicityReport {
    pub const COLUMNS: [&'static str; 9] = ["r", "M", "A", "D", "Q", "wp", "T", "A_prime", "identity_defect"];

    pub fn values(&self) -> [f64; 9] {
        [
            self.r,
            self.m,
            self.a,
            self.d,
            self.q,
            self.wp,
            self.t,
            self.a_prime,
            self.identity_defect,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileOptions {
    /// `dr / r` for the derivative of `A`.
    pub relative_step: f64,
    pub richardson: bool,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self {
            relative_step: 1e-3,
            richardson: false,
        }
    }
}

/// `M, A, D, Q, ℘, T, A'` at `r` and the defect
/// `A' - D/r - (2/r³)∫(|u|²/2+P)u·σ - T/r²`.
pub fn monotonicity_report(
    u: &dyn Field,
    p: &dyn Field,
    r: f64,
    grid: &BallGrid,
    opts: ProfileOptions,
) -> Result<MonotonicityReport> {
    let k = ball_integrals(u, p, r, grid)?;
    let q = k.quantities(r);
    let t = flux_defect_from(shell_terms(u, p, r, grid)?, k.dissipation, r);
    let a_prime = a_prime_fd(u, p, r, opts.relative_step * r, grid, opts.richardson)?;
    let defect = a_prime - q.d / r - 2.0 * k.bernoulli_flux / r.powi(3) - t / (r * r);
    Ok(MonotonicityReport {
        r,
        m: k.energy(r),
        a: q.a,
        d: q.d,
        q: q.q,
        wp: q.wp,
        t,
        a_prime,
        identity_defect: defect,
    })
}

/// Reports at every radius, computed concurrently and returned in input order.
pub fn monotonicity_profile(
    u: &dyn Field,
    p: &dyn Field,
    radii: &[f64],
    grid: &BallGrid,
    opts: ProfileOptions,
) -> Result<Vec<MonotonicityReport>> {
    radii
        .par_iter()
        .map(|&r| monotonicity_report(u, p, r, grid, opts))
        .collect()
}

/// `∫_{B_r}(|u + (x·∇)u|² - |u|² - x·∇|u|² - |(x·∇)u|²)`.
pub fn completing_square_defect(u: &dyn Field, r: f64, grid: &BallGrid) -> Result<f64> {
    check_ball(u, r, "velocity")?;
    let g = grid.with_radius(r)?;
    let [v] = integrate_ball_multi(&g, OriginCorrection::Patch, |x| {
        let uv = u.value(x);
        let j = gradient_at(u, x)?;
        let xu: Point = std::array::from_fn(|i| dot(&j[i], x));
        let lhs: f64 = (0..DIM).map(|i| (uv[i] + xu[i]).powi(2)).sum();
        let rhs = dot(&uv, &uv) + 2.0 * dot(&uv, &xu) + dot(&xu, &xu);
        Ok([lhs - rhs])
    })?;
    Ok(v)
}

/// A smooth test function `φ` with its gradient and Laplacian.
pub trait TestFunction: Send + Sync {
    fn value(&self, x: &Point) -> f64;
    fn gradient(&self, x: &Point) -> Point;
    fn laplacian(&self, x: &Point) -> f64;
}

/// Spherically symmetric test functions given by a radial profile.
pub trait RadialTestFunction: Send + Sync {
    /// `(φ, φ', φ'')` at radius `rho`.
    fn profile(&self, rho: f64) -> (f64, f64, f64);
}

impl<T: RadialTestFunction> TestFunction for T {
    fn value(&self, x: &Point) -> f64 {
        self.profile(norm(x)).0
    }

    fn gradient(&self, x: &Point) -> Point {
        let rho = norm(x);
        if rho == 0.0 {
            return [0.0; DIM];
        }
        let d = self.profile(rho).1;
        x.map(|c| d * c / rho)
    }

    /// `φ'' + (4/ρ)φ'`, with the limit `5φ''(0)` at the origin.
    fn laplacian(&self, x: &Point) -> f64 {
        let rho = norm(x);
        let (_, d1, d2) = self.profile(rho);
        if rho == 0.0 {
            5.0 * d2
        } else {
            d2 + 4.0 * d1 / rho
        }
    }
}

/// `φ = 1` on `B_r`, `φ = 0` outside `B_{r+ε}`, joined by the quintic
/// smoothstep `1 - (10t³ - 15t⁴ + 6t⁵)` in `t = (|x| - r)/ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialCutoff {
    pub radius: f64,
    pub width: f64,
}

pub fn radial_cutoff(r: f64, eps: f64) -> Result<RadialCutoff> {
    if !(eps > 0.0) || !(r >= 0.0) {
        return Err(Error::Config(format!("cutoff needs r ≥ 0 and ε > 0, got r={r}, ε={eps}")));
    }
    Ok(RadialCutoff { radius: r, width: eps })
}

impl RadialTestFunction for RadialCutoff {
    fn profile(&self, rho: f64) -> (f64, f64, f64) {
        let t = (rho - self.radius) / self.width;
        if t <= 0.0 {
            return (1.0, 0.0, 0.0);
        }
        if t >= 1.0 {
            return (0.0, 0.0, 0.0);
        }
        let e = self.width;
        let s = t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
        let ds = 30.0 * t * t * (1.0 - t) * (1.0 - t);
        let dds = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t);
        (1.0 - s, -ds / e, -dds / (e * e))
    }
}

impl Field for RadialCutoff {
    fn kind(&self) -> FieldKind {
        FieldKind::Scalar
    }
    fn value(&self, x: &Point) -> Point {
        let mut v = [0.0; DIM];
        v[0] = TestFunction::value(self, x);
        v
    }
    fn jacobian(&self, x: &Point) -> Option<Jacobian> {
        let mut j = [[0.0; DIM]; DIM];
        j[0] = TestFunction::gradient(self, x);
        Some(j)
    }
}

/// `φ = (1 - |x|²/ρ²)^k` inside `B_ρ`, zero outside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolynomialBump {
    pub radius: f64,
    pub power: i32,
}

impl RadialTestFunction for PolynomialBump {
    fn profile(&self, rho: f64) -> (f64, f64, f64) {
        let q = 1.0 - (rho / self.radius).powi(2);
        if q <= 0.0 {
            return (0.0, 0.0, 0.0);
        }
        let k = self.power;
        let kf = f64::from(k);
        let a = 2.0 / (self.radius * self.radius);
        let d1 = -kf * a * rho * q.powi(k - 1);
        let d2 = -kf * a * q.powi(k - 1) + kf * f64::from(k - 1) * a * a * rho * rho * q.powi(k - 2);
        (q.powi(k), d1, d2)
    }
}

/// `μ(φ) = ∫{(|u|²/2 + P)(u·∇φ) + (|u|²/2)Δφ - φ|∇u|²}` over the grid ball.
pub fn energy_defect_residual(
    u: &dyn Field,
    p: &dyn Field,
    phi: &dyn TestFunction,
    grid: &BallGrid,
) -> Result<f64> {
    let outer = grid.outer_radius;
    check_pair(u, p, outer)?;
    let worst = grid
        .sphere()
        .nodes
        .iter()
        .map(|s| {
            let x = s.map(|c| c * outer);
            phi.value(&x).abs().max(norm(&phi.gradient(&x)))
        })
        .fold(0.0, f64::max);
    if worst > 1e-10 {
        return Err(Error::Support(format!(
            "|φ| + |∇φ| reaches {worst:e} on the sphere of radius {outer}"
        )));
    }
    let [v] = integrate_ball_multi(grid, OriginCorrection::Patch, |x| {
        let uv = u.value(x);
        let j = gradient_at(u, x)?;
        let half = 0.5 * dot(&uv, &uv);
        let gp = phi.gradient(x);
        Ok([(half + p.value(x)[0]) * dot(&uv, &gp) + half * phi.laplacian(x) - phi.value(x) * frob2(&j)])
    })?;
    Ok(v)
}

/// `∫_{B_R}(|u|³ + |p|^{3/2})`.
pub fn eps_regularity_quantity(u: &dyn Field, p: &dyn Field, radius: f64, grid: &BallGrid) -> Result<f64> {
    check_pair(u, p, radius)?;
    let g = grid.with_radius(radius)?;
    let [v] = integrate_ball_multi(&g, OriginCorrection::Patch, |x| {
        let uv = u.value(x);
        Ok([dot(&uv, &uv).powf(1.5) + p.value(x)[0].abs().powf(1.5)])
    })?;
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceTerms {
    /// `M(R)`.
    pub m_quarter: f64,
    /// `M(4R)`.
    pub m_whole: f64,
    /// `|(1/R²)∫_{B_{2R}}(|u|² + 2p) u·∇φ|`.
    pub cubic: f64,
}

/// `M(R)`, `M(4R)` and the cubic flux term against the standard cutoff
/// `φ = radial_cutoff(R, R)` (one on `B_R`, zero outside `B_{2R}`).
pub fn energy_recurrence_terms(u: &dyn Field, p: &dyn Field, radius: f64, grid: &BallGrid) -> Result<RecurrenceTerms> {
    check_pair(u, p, 4.0 * radius)?;
    let phi = radial_cutoff(radius, radius)?;
    let g = grid.with_radius(2.0 * radius)?;
    let [c] = integrate_ball_multi(&g, OriginCorrection::Patch, |x| {
        let uv = u.value(x);
        let gp = TestFunction::gradient(&phi, x);
        Ok([(dot(&uv, &uv) + 2.0 * p.value(x)[0]) * dot(&uv, &gp)])
    })?;
    Ok(RecurrenceTerms {
        m_quarter: scale_invariant_energy(u, radius, grid)?,
        m_whole: scale_invariant_energy(u, 4.0 * radius, grid)?,
        cubic: (c / (radius * radius)).abs(),
    })
}
