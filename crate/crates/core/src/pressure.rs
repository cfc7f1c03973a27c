//! Pressure recovery.
//!
//! Two routes: the periodic surrogate of the whole-space representation
//! `p = R_iR_j(u_iu_j)`, solved spectrally on a five-dimensional torus, and
//! the reconstruction of a degree `-2` homogeneous pressure `ξ(σ)/|x|²`
//! from `ω = |x|³(h·∇)h` by line integrals along great circles.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::SphereSamples;
use crate::sphere::SphericalField;
use crate::{dot, norm, Point, DIM};

/// Default cap on `n^5` samples per array.
pub const DEFAULT_SAMPLE_BUDGET: usize = 1 << 25;

/// Uniform periodic grid on `[0, L)^5`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusGrid {
    pub length: f64,
    pub n: usize,
}

impl TorusGrid {
    pub fn new(length: f64, n: usize) -> Result<Self> {
        Self::with_budget(length, n, DEFAULT_SAMPLE_BUDGET)
    }

    pub fn with_budget(length: f64, n: usize, budget: usize) -> Result<Self> {
        if n < 8 || n % 2 == 1 {
            return Err(Error::Config(format!("torus size must be even and at least 8, got {n}")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::Config(format!("torus length must be positive, got {length}")));
        }
        match n.checked_pow(DIM as u32) {
            Some(c) if c <= budget => Ok(Self { length, n }),
            _ => Err(Error::Config(format!(
                "{n}^5 samples exceed the budget of {budget}"
            ))),
        }
    }

    pub fn len(&self) -> usize {
        self.n.pow(DIM as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Multi-index of flat index `idx`, last axis fastest.
    pub fn index(&self, mut idx: usize) -> [usize; DIM] {
        let mut m = [0; DIM];
        for k in (0..DIM).rev() {
            m[k] = idx % self.n;
            idx /= self.n;
        }
        m
    }

    pub fn point(&self, idx: usize) -> Point {
        let h = self.length / self.n as f64;
        self.index(idx).map(|m| m as f64 * h)
    }

    /// Angular wavenumber `2πm/L` of FFT bin `m`, signed.
    fn wavenumber(&self, m: usize) -> f64 {
        let s = if m <= self.n / 2 {
            m as f64
        } else {
            m as f64 - self.n as f64
        };
        2.0 * std::f64::consts::PI * s / self.length
    }
}

/// Channels of samples on a torus grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusField {
    pub grid: TorusGrid,
    pub channels: Vec<Vec<f64>>,
}

impl TorusField {
    pub fn sample(field: &dyn Field, grid: TorusGrid, channels: usize) -> Result<Self> {
        let values: Vec<Point> = (0..grid.len())
            .into_par_iter()
            .map(|i| field.value(&grid.point(i)))
            .collect();
        let mut out = vec![vec![0.0; grid.len()]; channels];
        for (i, v) in values.iter().enumerate() {
            for c in 0..channels {
                if !v[c].is_finite() {
                    return Err(Error::Evaluation(format!("non-finite sample at {:?}", grid.point(i))));
                }
                out[c][i] = v[c];
            }
        }
        Ok(Self { grid, channels: out })
    }
}

fn fft_5d(data: &mut [Complex64], n: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    let total = data.len();
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..DIM {
        let stride = n.pow((DIM - 1 - axis) as u32);
        for start in 0..total {
            if (start / stride) % n != 0 {
                continue;
            }
            for k in 0..n {
                line[k] = data[start + k * stride];
            }
            fft.process(&mut line);
            for k in 0..n {
                data[start + k * stride] = line[k];
            }
        }
    }
    if inverse {
        let s = 1.0 / total as f64;
        for v in data.iter_mut() {
            *v *= s;
        }
    }
}

fn forward(values: &[f64], n: usize) -> Vec<Complex64> {
    let mut d: Vec<Complex64> = values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    fft_5d(&mut d, n, false);
    d
}

fn inverse_real(mut d: Vec<Complex64>, n: usize) -> Vec<f64> {
    fft_5d(&mut d, n, true);
    d.into_iter().map(|c| c.re).collect()
}

fn check_velocity(u: &TorusField) -> Result<()> {
    if u.channels.len() != DIM || u.channels.iter().any(|c| c.len() != u.grid.len()) {
        return Err(Error::Config("velocity samples need five full channels".into()));
    }
    if u.channels.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Evaluation("non-finite velocity sample".into()));
    }
    Ok(())
}

/// Accumulates `Σ_{ij} m(κ) κ_iκ_j (u_iu_j)^(κ)` with the Nyquist bin of
/// odd derivatives zeroed.
fn divdiv_hat(u: &TorusField, weight: impl Fn(f64) -> f64) -> Vec<Complex64> {
    let g = u.grid;
    let n = g.n;
    let mut acc = vec![Complex64::new(0.0, 0.0); g.len()];
    for i in 0..DIM {
        for j in i..DIM {
            let prod: Vec<f64> = u.channels[i]
                .iter()
                .zip(&u.channels[j])
                .map(|(a, b)| a * b)
                .collect();
            if prod.iter().all(|v| *v == 0.0) {
                continue;
            }
            let hat = forward(&prod, n);
            let mult = if i == j { 1.0 } else { 2.0 };
            for (idx, h) in hat.iter().enumerate() {
                let m = g.index(idx);
                if i != j && (m[i] == n / 2 || m[j] == n / 2) {
                    continue;
                }
                let k: Point = m.map(|mi| g.wavenumber(mi));
                let k2 = dot(&k, &k);
                acc[idx] += h * (mult * k[i] * k[j] * weight(k2));
            }
        }
    }
    acc
}

/// Mean-zero `p` with `p̂(κ) = -(κ_iκ_j/|κ|²)(u_iu_j)^(κ)`.
pub fn recover_pressure_periodic(u: &TorusField) -> Result<TorusField> {
    check_velocity(u)?;
    let hat = divdiv_hat(u, |k2| if k2 > 0.0 { -1.0 / k2 } else { 0.0 });
    Ok(TorusField {
        grid: u.grid,
        channels: vec![inverse_real(hat, u.grid.n)],
    })
}

/// `∂_i∂_j(u_iu_j)` spectrally.
pub fn spectral_div_div(u: &TorusField) -> Result<Vec<f64>> {
    check_velocity(u)?;
    // ∂_i∂_j ↦ -κ_iκ_j
    let hat = divdiv_hat(u, |_| -1.0);
    Ok(inverse_real(hat, u.grid.n))
}

/// `-Δp` spectrally.
pub fn spectral_neg_laplacian(grid: TorusGrid, p: &[f64]) -> Vec<f64> {
    let mut hat = forward(p, grid.n);
    for (idx, h) in hat.iter_mut().enumerate() {
        let k: Point = grid.index(idx).map(|m| grid.wavenumber(m));
        *h *= dot(&k, &k);
    }
    inverse_real(hat, grid.n)
}

/// Header of the binary array format: the `.bin` file holds `channels`
/// arrays of `n^5` little-endian `f64`, last axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusHeader {
    pub shape: [usize; DIM],
    pub channels: usize,
    pub length: f64,
    pub dtype: String,
    pub byte_order: String,
}

fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Writes `<path>` (binary) and `<path>.json` (header), each via a temporary
/// file and rename.
pub fn write_torus_field(path: &Path, field: &TorusField) -> Result<()> {
    let header = TorusHeader {
        shape: [field.grid.n; DIM],
        channels: field.channels.len(),
        length: field.grid.length,
        dtype: "f64".into(),
        byte_order: "little".into(),
    };
    let mut bytes = Vec::with_capacity(8 * field.grid.len() * field.channels.len());
    for c in &field.channels {
        for v in c {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    atomic_write(path, &bytes)?;
    let json = serde_json::to_vec_pretty(&header).map_err(|e| Error::Io(e.to_string()))?;
    atomic_write(&sidecar(path), &json)
}

pub fn read_torus_field(path: &Path) -> Result<TorusField> {
    let header: TorusHeader = serde_json::from_slice(&fs::read(sidecar(path))?)
        .map_err(|e| Error::Io(format!("bad header: {e}")))?;
    if header.dtype != "f64" || header.byte_order != "little" {
        return Err(Error::Io(format!("unsupported dtype {} / {}", header.dtype, header.byte_order)));
    }
    let n = header.shape[0];
    if header.shape.iter().any(|&s| s != n) {
        return Err(Error::Io("only cubic torus grids are supported".into()));
    }
    let grid = TorusGrid::new(header.length, n)?;
    let bytes = fs::read(path)?;
    if bytes.len() != 8 * grid.len() * header.channels {
        return Err(Error::Io(format!(
            "expected {} bytes, found {}",
            8 * grid.len() * header.channels,
            bytes.len()
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok(TorusField {
        grid,
        channels: values.chunks(grid.len()).map(<[f64]>::to_vec).collect(),
    })
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io(format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

/// `ω^i = Σ_j (∇_Sζ^i)_j ζ^j - (σ·ζ) ζ^i`, equal to `|x|³(h·∇)h` for
/// `h = ζ(σ)/|x|`.
pub fn omega_from_zeta(zeta: &SphericalField) -> Result<SphericalField> {
    let f = zeta.normal_part()?;
    zeta.directional_derivative(zeta)?
        .lin_comb(1.0, &zeta.times(&f)?, -1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiOptions {
    pub base: Point,
    pub panels: usize,
    pub loops: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for XiOptions {
    fn default() -> Self {
        Self {
            base: [0.0, 0.0, 0.0, 0.0, 1.0],
            panels: 256,
            loops: 16,
            seed: 0,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefectKind {
    /// Closed-loop circulation of `ω` does not vanish.
    Loop,
    /// `2ξ + ω·σ` is not constant.
    Radial,
}

/// `ω` is not the gradient data of a degree `-2` homogeneous pressure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonIntegrableWarning {
    pub kind: DefectKind,
    pub value: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct XiReconstruction {
    pub base: Point,
    /// `ξ` at the sphere nodes.
    pub xi: Vec<f64>,
    pub radial_defect: f64,
    pub loop_defect: f64,
    pub warnings: Vec<NonIntegrableWarning>,
}

/// Composite Simpson rule for `∫_0^1 f`.
fn simpson(panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    let m = if panels % 2 == 0 { panels } else { panels + 1 };
    let h = 1.0 / m as f64;
    let mut s = f(0.0) + f(1.0);
    for k in 1..m {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(k as f64 * h);
    }
    s * h / 3.0
}

/// `∫ γ̇·ω` along the minor great-circle arc from `a` to `b` (unit vectors,
/// not antipodal).
fn arc_integral(omega: &SphericalField, a: &Point, b: &Point, panels: usize) -> f64 {
    let c = dot(a, b).clamp(-1.0, 1.0);
    let alpha = c.acos();
    if alpha < 1e-14 {
        return 0.0;
    }
    let perp: Point = std::array::from_fn(|k| b[k] - c * a[k]);
    let pn = norm(&perp);
    let w = perp.map(|v| v / pn);
    simpson(panels, |t| {
        let (s, co) = (alpha * t).sin_cos();
        let g: Point = std::array::from_fn(|k| co * a[k] + s * w[k]);
        let gd: Point = std::array::from_fn(|k| alpha * (-s * a[k] + co * w[k]));
        dot(&gd, &omega.eval(&g))
    })
}

/// A fixed unit vector orthogonal to `base`, used to route paths to
/// (near-)antipodal points.
fn intermediate(base: &Point) -> Point {
    let mut best = 0;
    for k in 1..DIM {
        if base[k].abs() < base[best].abs() {
            best = k;
        }
    }
    let mut e = [0.0; DIM];
    e[best] = 1.0;
    let c = dot(&e, base);
    let v: Point = std::array::from_fn(|k| e[k] - c * base[k]);
    let n = norm(&v);
    v.map(|x| x / n)
}

/// `ξ(σ) = ∫ γ̇·ω` from `base` to `σ` along great circles, with defects.
pub fn reconstruct_xi(
    omega: &SphericalField,
    sphere: &SphereSamples,
    opts: XiOptions,
) -> Result<XiReconstruction> {
    let bn = norm(&opts.base);
    if !(bn > 0.0) || opts.panels == 0 {
        return Err(Error::Config("base point must be nonzero and panels positive".into()));
    }
    let base = opts.base.map(|v| v / bn);
    let mid = intermediate(&base);
    let xi_mid = arc_integral(omega, &base, &mid, opts.panels);
    let path_to = |s: &Point| {
        if dot(s, &base) < -1.0 + 1e-8 {
            xi_mid + arc_integral(omega, &mid, s, opts.panels)
        } else {
            arc_integral(omega, &base, s, opts.panels)
        }
    };
    let xi: Vec<f64> = sphere.nodes.par_iter().map(path_to).collect();
    let poles: Vec<Point> = (0..2 * DIM)
        .map(|k| {
            let mut e = [0.0; DIM];
            e[k % DIM] = if k < DIM { 1.0 } else { -1.0 };
            e
        })
        .collect();
    let xi_poles: Vec<f64> = poles.iter().map(path_to).collect();
    if xi.iter().chain(&xi_poles).any(|v| !v.is_finite()) {
        return Err(Error::Evaluation("non-finite line integral".into()));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (x, s) in xi.iter().zip(&sphere.nodes).chain(xi_poles.iter().zip(&poles)) {
        let v = 2.0 * x + dot(&omega.eval(s), s);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let radial_defect = hi - lo;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut loop_defect: f64 = 0.0;
    for _ in 0..opts.loops {
        let a = random_unit(&mut rng);
        let mut b = random_unit(&mut rng);
        let c = dot(&a, &b);
        b = std::array::from_fn(|k| b[k] - c * a[k]);
        let nb = norm(&b);
        let b = b.map(|v| v / nb);
        let two_pi = 2.0 * std::f64::consts::PI;
        let circ = simpson(opts.panels, |t| {
            let (s, co) = (two_pi * t).sin_cos();
            let g: Point = std::array::from_fn(|k| co * a[k] + s * b[k]);
            let gd: Point = std::array::from_fn(|k| two_pi * (-s * a[k] + co * b[k]));
            dot(&gd, &omega.eval(&g))
        });
        loop_defect = loop_defect.max(circ.abs());
    }

    let mut warnings = Vec::new();
    if loop_defect > opts.tol {
        warnings.push(NonIntegrableWarning {
            kind: DefectKind::Loop,
            value: loop_defect,
            tol: opts.tol,
        });
    }
    if radial_defect > opts.tol {
        warnings.push(NonIntegrableWarning {
            kind: DefectKind::Radial,
            value: radial_defect,
            tol: opts.tol,
        });
    }
    Ok(XiReconstruction {
        base,
        xi,
        radial_defect,
        loop_defect,
        warnings,
    })
}

fn random_unit(rng: &mut ChaCha8Rng) -> Point {
    loop {
        let v: Point = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let n = norm(&v);
        if n > 0.1 && n <= 1.0 {
            return v.map(|x| x / n);
        }
    }
}

/// Sphere samples shared across reconstructions.
pub type SharedSphere = Arc<SphereSamples>;
