//! Numerical toolkit for the monotonicity-formula framework of stationary
//! Navier–Stokes in five space dimensions.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`] builds quadrature rules on `S^4` and on balls of `R^5`;
//! * [`field`] holds the field contract, the fixture catalog and finite
//!   differences;
//! * [`quadrature`] integrates over spheres, shells and balls with the
//!   measure `dx = r^4 dr dσ`;
//! * [`sphere`] provides tangential calculus on `S^4` and the homogeneous
//!   Euler system;
//! * [`functionals`] computes `M`, `A`, `D`, `Q`, `℘`, `T` and friends;
//! * [`projection`] projects onto fields of the form `ζ(x/|x|)/|x|`;
//! * [`pressure`] recovers pressures (periodic Riesz route and homogeneous
//!   reconstruction on the sphere);
//! * [`iteration`] evaluates the dyadic recurrence bounds and threshold
//!   constants.

pub mod cg;
pub mod error;
pub mod field;
pub mod functionals;
pub mod grid;
pub mod iteration;
pub mod poly;
pub mod pressure;
pub mod projection;
pub mod quadrature;
pub mod sphere;

pub use error::{Error, Result};

/// Ambient dimension. Every public operation is specialised to it.
pub const DIM: usize = 5;

/// A point (or vector) in `R^5`.
pub type Point = [f64; DIM];

/// Row `i` holds the gradient of component `i`: `jac[i][j] = ∂_j u^i`.
pub type Jacobian = [[f64; DIM]; DIM];

/// Surface area of the unit sphere `S^4`, `8π²/3`.
pub const SPHERE_AREA: f64 = 8.0 * std::f64::consts::PI * std::f64::consts::PI / 3.0;

/// Volume of the unit ball of `R^5`, `8π²/15`.
pub const BALL_VOLUME: f64 = SPHERE_AREA / 5.0;

pub(crate) fn dot(a: &Point, b: &Point) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &Point) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn scale(a: &Point, s: f64) -> Point {
    a.map(|x| x * s)
}
