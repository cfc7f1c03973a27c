//! Integrals over `S^4`, spheres `∂B_r` and balls, in the measure
//! `dx = r^4 dr dσ`.
//!
//! Sums are pairwise and evaluated in a fixed order; node-parallel work is
//! collected in order before reduction, so results do not depend on the
//! thread count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{BallGrid, SphereSamples};
use crate::{norm, scale, Point};

/// How the ball `B_{r_min}` excluded by the radial rule is treated.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum OriginCorrection {
    /// Integrate over the annulus only.
    None,
    /// The integrand is `|x|^k g(σ)` near the origin; add the exact
    /// contribution `r_min^5 / (k + 5) · ∫ f(r_min σ) dσ`.
    PowerLaw(f64),
    /// Gauss points on `(0, r_min)`.
    #[default]
    Patch,
}

/// Pairwise (cascade) summation.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        let mut s = 0.0;
        for v in values {
            s += v;
        }
        return s;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

fn pairwise_sum_arrays<const K: usize>(values: &[[f64; K]]) -> [f64; K] {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        let mut s = [0.0; K];
        for v in values {
            for k in 0..K {
                s[k] += v[k];
            }
        }
        return s;
    }
    let mid = values.len() / 2;
    let a = pairwise_sum_arrays(&values[..mid]);
    let b = pairwise_sum_arrays(&values[mid..]);
    std::array::from_fn(|k| a[k] + b[k])
}

fn check_finite<const K: usize>(v: &[f64; K], at: &Point) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Evaluation(format!("non-finite integrand {v:?} at {at:?}")))
    }
}

/// `Σ w_i f(r σ_i)` sequentially; the kernel of every ball integral.
fn shell_sum<const K: usize, F>(sphere: &SphereSamples, r: f64, f: &F) -> Result<[f64; K]>
where
    F: Fn(&Point) -> Result<[f64; K]>,
{
    let mut terms = Vec::with_capacity(sphere.len());
    for (s, w) in sphere.nodes.iter().zip(&sphere.weights) {
        let x = scale(s, r);
        let v = f(&x)?;
        check_finite(&v, &x)?;
        terms.push(v.map(|c| c * w));
    }
    Ok(pairwise_sum_arrays(&terms))
}

/// `Σ w_i f(σ_i)` for several integrands at once, node-parallel.
pub fn integrate_sphere_multi<const K: usize, F>(sphere: &SphereSamples, f: F) -> Result<[f64; K]>
where
    F: Fn(&Point) -> Result<[f64; K]> + Sync,
{
    let terms = sphere
        .nodes
        .par_iter()
        .zip(sphere.weights.par_iter())
        .map(|(s, w)| {
            let v = f(s)?;
            check_finite(&v, s)?;
            Ok(v.map(|c| c * w))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(pairwise_sum_arrays(&terms))
}

/// `∫_{S^4} f dσ`.
pub fn integrate_sphere<F>(sphere: &SphereSamples, f: F) -> Result<f64>
where
    F: Fn(&Point) -> f64 + Sync,
{
    integrate_sphere_multi(sphere, |s| Ok([f(s)])).map(|[v]| v)
}

/// `∫_{S^4} f dσ` for values already sampled at the nodes.
pub fn integrate_sphere_values(sphere: &SphereSamples, values: &[f64]) -> Result<f64> {
    if values.len() != sphere.len() {
        return Err(Error::Evaluation(format!(
            "{} samples for {} sphere nodes",
            values.len(),
            sphere.len()
        )));
    }
    let mut terms = Vec::with_capacity(values.len());
    for ((v, w), s) in values.iter().zip(&sphere.weights).zip(&sphere.nodes) {
        check_finite(&[*v], s)?;
        terms.push(v * w);
    }
    Ok(pairwise_sum(&terms))
}

/// `∫_{∂B_r} f dS = r^4 Σ w_i f(r σ_i)` for several integrands of `x`.
pub fn integrate_shell_multi<const K: usize, F>(sphere: &SphereSamples, r: f64, f: F) -> Result<[f64; K]>
where
    F: Fn(&Point) -> Result<[f64; K]> + Sync,
{
    let r4 = r.powi(4);
    integrate_sphere_multi(sphere, |s| f(&scale(s, r))).map(|v| v.map(|c| c * r4))
}

/// `∫_{∂B_r} f dS` for a scalar field (component 0).
pub fn integrate_shell(field: &dyn Field, r: f64, sphere: &SphereSamples) -> Result<f64> {
    let d = field.domain();
    if !(r > 0.0) || r >= d.outer || d.inner.is_some_and(|a| r <= a) {
        return Err(Error::Domain(format!("sphere of radius {r} is outside the field domain")));
    }
    integrate_shell_multi(sphere, r, |x| Ok([field.value(x)[0]])).map(|[v]| v)
}

/// `∫_{B_R} f dx` over the grid for several integrands of `x`.
///
/// Radial shells are evaluated in parallel, each summed pairwise, then
/// combined pairwise in radial order.
pub fn integrate_ball_multi<const K: usize, F>(
    grid: &BallGrid,
    correction: OriginCorrection,
    f: F,
) -> Result<[f64; K]>
where
    F: Fn(&Point) -> Result<[f64; K]> + Sync,
{
    let sphere = grid.sphere();
    let (nodes, weights): (Vec<f64>, Vec<f64>) = match correction {
        OriginCorrection::Patch => grid
            .patch_nodes
            .iter()
            .chain(&grid.radial_nodes)
            .zip(grid.patch_weights.iter().chain(&grid.radial_weights))
            .map(|(r, w)| (*r, *w))
            .unzip(),
        _ => (grid.radial_nodes.clone(), grid.radial_weights.clone()),
    };
    let mut shells = nodes
        .par_iter()
        .zip(weights.par_iter())
        .map(|(r, w)| shell_sum(sphere, *r, &f).map(|v| v.map(|c| c * w)))
        .collect::<Result<Vec<_>>>()?;
    if let OriginCorrection::PowerLaw(k) = correction {
        if !(k > -5.0) {
            return Err(Error::Domain(format!(
                "radial power {k} is not integrable at the origin in five dimensions"
            )));
        }
        let rm = grid.r_min;
        let c = rm.powi(5) / (k + 5.0);
        shells.insert(0, shell_sum(sphere, rm, &f)?.map(|v| v * c));
    }
    Ok(pairwise_sum_arrays(&shells))
}

/// `∫_{B_R} f dx` for a scalar field (component 0).
pub fn integrate_ball(field: &dyn Field, grid: &BallGrid, correction: OriginCorrection) -> Result<f64> {
    integrate_ball_multi(grid, correction, |x| Ok([field.value(x)[0]])).map(|[v]| v)
}

/// `∫_{B_R} f dx` for a scalar function of position.
pub fn integrate_ball_fn<F>(grid: &BallGrid, correction: OriginCorrection, f: F) -> Result<f64>
where
    F: Fn(&Point) -> f64 + Sync,
{
    integrate_ball_multi(grid, correction, |x| Ok([f(x)])).map(|[v]| v)
}

/// `∫_{r_min}^{R} (∫_{∂B_r} f dS) dr` evaluated shell by shell; used to
/// cross-check the product rule.
pub fn integrate_radially_of_shells<F>(grid: &BallGrid, f: F) -> Result<f64>
where
    F: Fn(&Point) -> f64 + Sync,
{
    let mut terms = Vec::with_capacity(grid.radial_nodes.len());
    for (r, w) in grid.radial_nodes.iter().zip(&grid.radial_weights) {
        let plain = w / r.powi(4);
        let shell = integrate_shell_multi(grid.sphere(), *r, |x| Ok([f(x)]))?[0];
        terms.push(plain * shell);
    }
    Ok(pairwise_sum(&terms))
}

/// Outward unit normal `x/|x|`.
pub fn radial_unit(x: &Point) -> Point {
    let r = norm(x);
    x.map(|v| v / r)
}
