//! Projection onto self-similar fields `h_ζ(x) = ζ(x/|x|)/|x|`.
//!
//! The inner product on `B_R` is
//! `⟨u, w⟩ = (1/R³)∫u·w + (1/R)∫∇u:∇w`. For self-similar fields it reduces
//! to the `R`-independent form
//!
//! ```text
//! ⟨h_ζ, h_η⟩ = (1/3)∫ζ·η + ∫(ζ·η + ∇_Sζ:∇_Sη)      (integrals over S^4)
//! ```
//!
//! using `|h|² r⁴ = r²|ζ|²` and `∂_j h^i = r^{-2}((∇_Sζ^i)_j - σ_j ζ^i)`.
//! Against a general `u` the same gradient formula gives
//!
//! ```text
//! ⟨u, h_η⟩ = ∫_{S^4} a·η + B:∇_Sη,
//! a = (1/R³)∫_0^R r³ u(rσ) dr - Gσ/R,   B = G/R,   G = ∫_0^R r² ∇u(rσ) dr.
//! ```
//!
//! `ζ` is sought in the span of the degree-`L` and degree-`L-1` monomials
//! restricted to the sphere (all spherical polynomials of degree ≤ `L`).
//! The basis is made `L²(S^4)`-orthonormal by a Cholesky factor of its mass
//! matrix; the normal equations are then solved by preconditioned CG.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::cg::pcg;
use crate::error::{Error, Result};
use crate::field::{Field, FieldKind};
use crate::functionals::{gradient_at, scale_invariant_energy};
use crate::grid::{BallGrid, SphereDescriptor, SphereSamples};
use crate::poly::{exponents_of_degree, Poly, VecPoly};
use crate::quadrature::integrate_sphere_multi;
use crate::sphere::SphericalField;
use crate::{dot, Jacobian, Point, DIM};

/// `(1/3)∫ζ·η + ∫(ζ·η + ∇_Sζ:∇_Sη)`.
pub fn gram_inner(zeta: &SphericalField, eta: &SphericalField, sphere: &SphereSamples) -> Result<f64> {
    let [v] = integrate_sphere_multi(sphere, |s| {
        let (a, b) = (zeta.eval(s), eta.eval(s));
        let (ja, jb) = (zeta.tangential_jacobian(s), eta.tangential_jacobian(s));
        let mut g = 0.0;
        for i in 0..DIM {
            g += dot(&ja[i], &jb[i]);
        }
        Ok([(4.0 / 3.0) * dot(&a, &b) + g])
    })?;
    Ok(v)
}

/// Node-wise radial moments of `u` on `B_R`.
#[derive(Debug, Clone)]
pub struct RadialMoments {
    pub radius: f64,
    /// `(1/R³)∫_0^R r³ u(rσ) dr`.
    pub l1: Vec<Point>,
    /// `∫_0^R r² ∇u(rσ) dr`, rows indexed by component.
    pub g: Vec<Jacobian>,
}

impl RadialMoments {
    /// `a = L1 - Gσ/R` at node `n`.
    pub fn a(&self, n: usize, sigma: &Point) -> Point {
        let g = &self.g[n];
        std::array::from_fn(|i| self.l1[n][i] - dot(&g[i], sigma) / self.radius)
    }

    /// `B = G/R` at node `n`.
    pub fn b(&self, n: usize) -> Jacobian {
        self.g[n].map(|row| row.map(|v| v / self.radius))
    }
}

/// Radial moments on the nodes of `grid`'s sphere, using its radial rule
/// plus the origin patch.
pub fn radial_moments(u: &dyn Field, radius: f64, grid: &BallGrid) -> Result<RadialMoments> {
    if u.kind() != FieldKind::Vector {
        return Err(Error::Config("projection needs a vector field".into()));
    }
    let d = u.domain();
    if !(radius > 0.0) || radius >= d.outer || d.inner.is_some_and(|a| a > 0.0) {
        return Err(Error::Domain(format!("field is not defined on the ball of radius {radius}")));
    }
    let g = grid.with_radius(radius)?;
    let radial: Vec<(f64, f64)> = g
        .patch_nodes
        .iter()
        .zip(&g.patch_weights)
        .chain(g.radial_nodes.iter().zip(&g.radial_weights))
        .map(|(r, w)| (*r, w / r.powi(4)))
        .collect();
    let r3 = radius.powi(3);
    let rows = g
        .sphere()
        .nodes
        .par_iter()
        .map(|s| {
            let mut l1 = [0.0; DIM];
            let mut gm = [[0.0; DIM]; DIM];
            for &(r, w) in &radial {
                let x = s.map(|c| c * r);
                let uv = u.value(&x);
                let j = gradient_at(u, &x)?;
                for i in 0..DIM {
                    l1[i] += w * r * r * r * uv[i];
                    for k in 0..DIM {
                        gm[i][k] += w * r * r * j[i][k];
                    }
                }
            }
            if l1.iter().chain(gm.iter().flatten()).any(|v| !v.is_finite()) {
                return Err(Error::Evaluation(format!("non-finite radial moment at {s:?}")));
            }
            Ok((l1.map(|v| v / r3), gm))
        })
        .collect::<Result<Vec<_>>>()?;
    let (l1, g): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    Ok(RadialMoments { radius, l1, g })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionOptions {
    /// Highest spherical polynomial degree `L` of the trial space.
    pub degree: usize,
    pub level: usize,
    pub n_radial: usize,
    pub tol: f64,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        Self {
            degree: 4,
            level: 16,
            n_radial: 32,
            tol: 1e-10,
        }
    }
}

/// Precomputed trial space: basis samples, orthonormalising transform and
/// the Gram operator.
pub struct Projector {
    sphere: Arc<SphereSamples>,
    grid: BallGrid,
    tol: f64,
    basis: Vec<Poly>,
    /// Orthonormal basis values, nodes × basis.
    values: DMatrix<f64>,
    /// Orthonormal basis tangential gradients, one matrix per direction.
    grads: Vec<DMatrix<f64>>,
    /// Monomial coefficients of the orthonormal basis (columns).
    transform: DMatrix<f64>,
    /// Scalar Gram block in the orthonormal basis.
    gram: DMatrix<f64>,
}

impl std::fmt::Debug for Projector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Projector")
            .field("nodes", &self.sphere.len())
            .field("basis", &self.basis.len())
            .finish()
    }
}

impl Projector {
    pub fn new(opts: ProjectionOptions) -> Result<Self> {
        let sphere = Arc::new(crate::grid::build_sphere_samples(opts.level)?);
        Self::with_sphere(opts, sphere)
    }

    pub fn with_sphere(opts: ProjectionOptions, sphere: Arc<SphereSamples>) -> Result<Self> {
        let l = opts.degree;
        if l == 0 {
            return Err(Error::Config("projection degree must be at least 1".into()));
        }
        if sphere.level < 2 * l + 2 {
            return Err(Error::Resolution(format!(
                "sphere level {} too low for degree {l}; need at least {}",
                sphere.level,
                2 * l + 2
            )));
        }
        let grid = BallGrid::with_default_cutoff(1.0, opts.n_radial, Arc::clone(&sphere))?;
        let basis: Vec<Poly> = exponents_of_degree(l)
            .into_iter()
            .chain(exponents_of_degree(l - 1))
            .map(|e| Poly::monomial(e, 1.0))
            .collect();
        let nb = basis.len();
        let nn = sphere.len();
        let mut phi = DMatrix::zeros(nn, nb);
        let mut psi = vec![DMatrix::zeros(nn, nb); DIM];
        for (a, p) in basis.iter().enumerate() {
            let sf = SphericalField::scalar_poly(p.clone());
            for (n, s) in sphere.nodes.iter().enumerate() {
                phi[(n, a)] = p.eval(s);
                let g = sf.tangential_jacobian(s)[0];
                for k in 0..DIM {
                    psi[k][(n, a)] = g[k];
                }
            }
        }
        let weighted = |m: &DMatrix<f64>| {
            let mut w = m.clone();
            for (n, wn) in sphere.weights.iter().enumerate() {
                w.row_mut(n).scale_mut(*wn);
            }
            w
        };
        let mass = phi.transpose() * weighted(&phi);
        let mut stiff = DMatrix::zeros(nb, nb);
        for m in &psi {
            stiff += m.transpose() * weighted(m);
        }
        let chol = mass.clone().cholesky().ok_or_else(|| {
            Error::Resolution("basis mass matrix is not positive definite at this level".into())
        })?;
        let l_inv = chol
            .l()
            .try_inverse()
            .ok_or_else(|| Error::Resolution("singular basis mass matrix".into()))?;
        let transform = l_inv.transpose();
        let values = &phi * &transform;
        let grads: Vec<_> = psi.iter().map(|m| m * &transform).collect();
        let gram = transform.transpose() * ((4.0 / 3.0) * &mass + &stiff) * &transform;
        Ok(Self {
            sphere,
            grid,
            tol: opts.tol,
            basis,
            values,
            grads,
            transform,
            gram,
        })
    }

    pub fn sphere(&self) -> &Arc<SphereSamples> {
        &self.sphere
    }

    pub fn grid(&self) -> &BallGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// CG iteration cap `10·√(unknowns)`.
    pub fn max_iters(&self) -> usize {
        (10.0 * ((DIM * self.dim()) as f64).sqrt()).ceil() as usize
    }

    /// Load vector `L(η_a)` for every component and orthonormal basis element.
    pub fn load(&self, m: &RadialMoments) -> Vec<f64> {
        let nb = self.dim();
        let mut b = vec![0.0; DIM * nb];
        let per_node: Vec<(Point, Jacobian)> = self
            .sphere
            .nodes
            .iter()
            .enumerate()
            .map(|(n, s)| (m.a(n, s), m.b(n)))
            .collect();
        for i in 0..DIM {
            for a in 0..nb {
                let terms: Vec<f64> = per_node
                    .iter()
                    .enumerate()
                    .map(|(n, (av, bm))| {
                        let mut t = av[i] * self.values[(n, a)];
                        for k in 0..DIM {
                            t += bm[i][k] * self.grads[k][(n, a)];
                        }
                        t * self.sphere.weights[n]
                    })
                    .collect();
                b[i * nb + a] = crate::quadrature::pairwise_sum(&terms);
            }
        }
        b
    }

    fn apply_gram(&self, v: &[f64], out: &mut [f64]) {
        let nb = self.dim();
        for i in 0..DIM {
            for a in 0..nb {
                let mut s = 0.0;
                for c in 0..nb {
                    s += self.gram[(a, c)] * v[i * nb + c];
                }
                out[i * nb + a] = s;
            }
        }
    }

    /// Gram-norm inner product of two coefficient vectors.
    pub fn gram_form(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut gx = vec![0.0; x.len()];
        self.apply_gram(x, &mut gx);
        gx.iter().zip(y).map(|(a, b)| a * b).sum()
    }

    /// `ζ` from orthonormal-basis coefficients.
    pub fn zeta_from_coefficients(&self, c: &[f64]) -> VecPoly {
        let nb = self.dim();
        std::array::from_fn(|i| {
            let mut p = Poly::zero();
            for a in 0..nb {
                let mono: f64 = (0..nb).map(|k| self.transform[(a, k)] * c[i * nb + k]).sum();
                p = p.add(&self.basis[a].scaled(mono));
            }
            p
        })
    }

    /// Orthonormal-basis coefficients of a polynomial profile (its
    /// `L²(S^4)` projection onto the trial space).
    pub fn coefficients_of(&self, zeta: &SphericalField) -> Result<Vec<f64>> {
        let nb = self.dim();
        let samples = zeta.sample(&self.sphere)?;
        let mut c = vec![0.0; DIM * nb];
        for i in 0..DIM {
            for a in 0..nb {
                let terms: Vec<f64> = samples
                    .iter()
                    .enumerate()
                    .map(|(n, v)| v[i] * self.values[(n, a)] * self.sphere.weights[n])
                    .collect();
                c[i * nb + a] = crate::quadrature::pairwise_sum(&terms);
            }
        }
        Ok(c)
    }

    pub fn project(&self, u: &dyn Field, radius: f64) -> Result<ProjectionResult> {
        let moments = radial_moments(u, radius, &self.grid)?;
        let b = self.load(&moments);
        let diag: Vec<f64> = (0..DIM)
            .flat_map(|_| (0..self.dim()).map(|a| self.gram[(a, a)]))
            .collect();
        let out = pcg(
            |v, o| self.apply_gram(v, o),
            &diag,
            &b,
            self.tol,
            self.max_iters(),
        )?;
        let energy = scale_invariant_energy(u, radius, &self.grid)?;
        let norm_sq = self.gram_form(&out.x, &out.x);
        let cross: f64 = out.x.iter().zip(&b).map(|(x, y)| x * y).sum();
        let error_sq = (energy - 2.0 * cross + norm_sq).max(0.0);
        let closeness = if energy > 0.0 { error_sq / energy } else { 0.0 };
        Ok(ProjectionResult {
            radius,
            zeta_star: self.zeta_from_coefficients(&out.x),
            coefficients: out.x,
            load: b,
            error_sq,
            energy,
            projected_norm_sq: norm_sq,
            closeness,
            cg_iters: out.iterations,
            residual: out.residual,
            sphere: Arc::clone(&self.sphere),
        })
    }

    /// `[(1/R³)∫|u - P_R u|² + (1/R)∫|∇u - ∇P_R u|²] / M(R)`.
    pub fn closeness_ratio(&self, u: &dyn Field, radius: f64) -> Result<f64> {
        let r = self.project(u, radius)?;
        if !(r.energy > 0.0) {
            return Err(Error::Degenerate(format!("M({radius}) = {} vanishes", r.energy)));
        }
        Ok(r.closeness)
    }
}

#[derive(Debug, Clone)]
pub struct ProjectionResult {
    pub radius: f64,
    pub zeta_star: VecPoly,
    /// Orthonormal-basis coefficients of `ζ*`, component-major.
    pub coefficients: Vec<f64>,
    /// `L(η)` for each orthonormal basis element.
    pub load: Vec<f64>,
    /// `‖u - h_{ζ*}‖²` in the scaled inner product.
    pub error_sq: f64,
    /// `M(R) = ‖u‖²`.
    pub energy: f64,
    /// `‖h_{ζ*}‖²`.
    pub projected_norm_sq: f64,
    pub closeness: f64,
    pub cg_iters: usize,
    pub residual: f64,
    pub sphere: Arc<SphereSamples>,
}

/// Serializable view: node values of `ζ*` with the sphere descriptor.
#[derive(Debug, Clone, Serialize)]
pub struct ProjectionSummary {
    pub radius: f64,
    pub error_sq: f64,
    pub energy: f64,
    pub closeness: f64,
    pub cg_iters: usize,
    pub residual: f64,
    pub sphere: SphereDescriptor,
    pub nodes: Vec<Point>,
    pub zeta_star: Vec<Point>,
}

impl ProjectionResult {
    pub fn zeta_field(&self) -> SphericalField {
        SphericalField::vector_poly(self.zeta_star.clone(), false)
    }

    pub fn summary(&self) -> Result<ProjectionSummary> {
        Ok(ProjectionSummary {
            radius: self.radius,
            error_sq: self.error_sq,
            energy: self.energy,
            closeness: self.closeness,
            cg_iters: self.cg_iters,
            residual: self.residual,
            sphere: self.sphere.descriptor(),
            nodes: self.sphere.nodes.clone(),
            zeta_star: self.zeta_field().sample(&self.sphere)?,
        })
    }
}

/// One-shot projection with default options.
pub fn project(u: &dyn Field, radius: f64) -> Result<ProjectionResult> {
    Projector::new(ProjectionOptions::default())?.project(u, radius)
}

/// One-shot closeness ratio with default options.
pub fn closeness_ratio(u: &dyn Field, radius: f64) -> Result<f64> {
    Projector::new(ProjectionOptions::default())?.closeness_ratio(u, radius)
}
