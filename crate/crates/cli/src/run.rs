//! Executes a scenario and collects the report bundle.

use std::sync::Arc;

use mono5_core::field::{zero_scalar, FieldKind, FixtureSpec, SharedField};
use mono5_core::functionals::{monotonicity_profile, ProfileOptions};
use mono5_core::grid::{build_sphere_samples, BallGrid, SphereSamples};
use mono5_core::iteration::{iteration_bound, premise_limit, simulate_recurrence, threshold_constants};
use mono5_core::poly::Poly;
use mono5_core::pressure::{
    omega_from_zeta, reconstruct_xi, recover_pressure_periodic, spectral_div_div, spectral_neg_laplacian,
    TorusField, TorusGrid, XiOptions,
};
use mono5_core::projection::{ProjectionOptions, Projector};
use mono5_core::sphere::{convective_decomposition_defect, euler_residuals, split_identity_defects, EulerTriple, SphericalField};
use mono5_core::Point;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{OutputKind, PressureSpec, ScenarioConfig};
use crate::report::{
    EulerReport, InvariantFailure, IterateReport, PeriodicReport, PressureReport, ReportBundle, XiReport,
};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// Overrides the config seed.
    pub seed: Option<u64>,
    /// Multiplies every configured tolerance.
    pub tol_scale: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            seed: None,
            tol_scale: 1.0,
        }
    }
}

/// Number of random probes for the convective decomposition.
const CONVECTIVE_PROBES: usize = 16;

struct Ctx<'a> {
    cfg: &'a ScenarioConfig,
    tol_scale: f64,
    failures: Vec<InvariantFailure>,
}

impl Ctx<'_> {
    fn check(&mut self, key: &str, context: String, value: f64) {
        if let Some(tol) = self.cfg.tolerance(key, self.tol_scale) {
            if !(value.abs() <= tol) {
                self.failures.push(InvariantFailure {
                    check: key.to_string(),
                    context,
                    value,
                    tol,
                });
            }
        }
    }
}

fn zeta_of(cfg: &ScenarioConfig, what: &str) -> Result<SphericalField, CliError> {
    match cfg.field.zeta() {
        Some(z) => Ok(SphericalField::vector_poly(z?, false)),
        None => Err(CliError::Config(format!(
            "field: the {what} output needs a homogeneous fixture"
        ))),
    }
}

fn pressure_field(cfg: &ScenarioConfig) -> Result<SharedField, CliError> {
    match cfg.pressure_spec()? {
        PressureSpec::None => Ok(zero_scalar()),
        PressureSpec::Recover => Err(CliError::Config(
            "pressure: `recover` only feeds the pressure output; profile needs a scalar fixture or `none`".into(),
        )),
        PressureSpec::Fixture(spec) => {
            let p = spec.build()?;
            if p.kind() != FieldKind::Scalar {
                return Err(CliError::Config("pressure: fixture must be scalar".into()));
            }
            Ok(p)
        }
    }
}

/// Pressure trace on the sphere of a degree `-2` homogeneous pressure.
fn pressure_trace(cfg: &ScenarioConfig) -> Result<SphericalField, CliError> {
    match cfg.pressure_spec()? {
        PressureSpec::None => Ok(SphericalField::constant_scalar(0.0)),
        PressureSpec::Fixture(FixtureSpec::HomogeneousScalar { profile, degree }) if degree == -2.0 => {
            Ok(SphericalField::scalar_poly(Poly::from_terms(&profile)))
        }
        _ => Err(CliError::Config(
            "pressure: the euler output needs `none` or a homogeneous_scalar fixture of degree -2".into(),
        )),
    }
}

fn unit_probes(seed: u64, count: usize) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let g: Point = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let n = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > 0.1 && n <= 1.0 {
            out.push(g.map(|v| v / n));
        }
    }
    out
}

fn sup_norm(f: &SphericalField, sphere: &SphereSamples) -> Result<f64, CliError> {
    Ok(f.sample(sphere)?
        .iter()
        .map(|v| v.iter().map(|c| c * c).sum::<f64>().sqrt())
        .fold(0.0, f64::max))
}

/// Runs every requested output in a fixed order.
pub fn run_scenario(cfg: &ScenarioConfig, opts: RunOptions) -> Result<ReportBundle, CliError> {
    cfg.validate()?;
    let seed = opts.seed.unwrap_or(cfg.seed);
    let res = cfg.resolution;
    let mut ctx = Ctx {
        cfg,
        tol_scale: opts.tol_scale,
        failures: Vec::new(),
    };
    let mut bundle = ReportBundle {
        name: cfg.name.clone(),
        seed,
        ..Default::default()
    };
    let mut outputs = cfg.outputs.clone();
    outputs.sort();
    outputs.dedup();

    let needs_sphere = outputs
        .iter()
        .any(|o| matches!(o, OutputKind::Profile | OutputKind::Project | OutputKind::Euler | OutputKind::Pressure));
    let sphere = if needs_sphere {
        Some(Arc::new(build_sphere_samples(res.level)?))
    } else {
        None
    };

    for kind in outputs {
        match kind {
            OutputKind::Profile => {
                let u = cfg.field.build()?;
                let p = pressure_field(cfg)?;
                let grid = BallGrid::with_default_cutoff(1.0, res.n_radial, sphere.clone().unwrap())?;
                let rows = monotonicity_profile(u.as_ref(), p.as_ref(), &cfg.radii, &grid, ProfileOptions::default())?;
                for row in &rows {
                    ctx.check("identity_defect", format!("r={}", row.r), row.identity_defect);
                    ctx.check("q_bound", format!("r={}", row.r), (row.q - row.d - 0.25 * row.m).max(0.0));
                }
                bundle.profile = rows;
            }
            OutputKind::Project => {
                let u = cfg.field.build()?;
                let popts = ProjectionOptions {
                    level: res.level,
                    n_radial: res.n_radial,
                    ..Default::default()
                };
                let projector = Projector::with_sphere(popts, sphere.clone().unwrap())?;
                for &r in &cfg.radii {
                    let out = projector.project(u.as_ref(), r)?;
                    ctx.check("projection_residual", format!("r={r}"), out.residual);
                    bundle.projection.push(out.summary()?);
                }
            }
            OutputKind::Euler => {
                let sphere = sphere.as_deref().unwrap();
                let zeta = zeta_of(cfg, "euler")?;
                let trace = pressure_trace(cfg)?;
                let f = zeta.normal_part()?;
                let v = zeta.tangential_part()?;
                let triple = EulerTriple::new(v.clone(), f, trace)?;
                let r = euler_residuals(&triple)?;
                let residual_sup = [
                    sup_norm(&r.r1, sphere)?,
                    sup_norm(&r.r2, sphere)?,
                    sup_norm(&r.r3, sphere)?,
                    sup_norm(&r.r4, sphere)?,
                ];
                let split = split_identity_defects(&v, sphere)?;
                let probes = unit_probes(seed, CONVECTIVE_PROBES);
                let conv = convective_decomposition_defect(&zeta, &probes, 1.0)?;
                ctx.check("split_identity", "d1".into(), split.d1);
                ctx.check("split_identity", "d2".into(), split.d2);
                ctx.check("convective", "r=1".into(), conv);
                bundle.euler = Some(EulerReport {
                    residual_sup,
                    split_d1: split.d1,
                    split_d2: split.d2,
                    split_lhs: split.d2_lhs,
                    split_rhs: split.d2_rhs,
                    convective_defect: conv,
                    probes: probes.len(),
                });
            }
            OutputKind::Pressure => {
                let mut report = PressureReport::default();
                let spec = cfg.pressure_spec()?;
                if spec == PressureSpec::Recover {
                    let u = cfg.field.build()?;
                    if u.kind() != FieldKind::Vector {
                        return Err(CliError::Config("field: pressure recovery needs a vector fixture".into()));
                    }
                    let grid = TorusGrid::new(res.torus_length, res.n_torus)?;
                    let samples = TorusField::sample(u.as_ref(), grid, 5)?;
                    let p = recover_pressure_periodic(&samples)?;
                    let lap = spectral_neg_laplacian(grid, &p.channels[0]);
                    let dd = spectral_div_div(&samples)?;
                    let defect = lap.iter().zip(&dd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    ctx.check("pressure_equation", format!("n={}", res.n_torus), defect);
                    let values = &p.channels[0];
                    report.periodic = Some(PeriodicReport {
                        n: res.n_torus,
                        length: res.torus_length,
                        max_abs_p: values.iter().map(|v| v.abs()).fold(0.0, f64::max),
                        mean_p: mono5_core::quadrature::pairwise_sum(values) / values.len() as f64,
                        equation_defect: defect,
                        pressure: p,
                    });
                }
                if cfg.field.zeta().is_some() {
                    let zeta = zeta_of(cfg, "pressure")?;
                    let omega = omega_from_zeta(&zeta)?;
                    let xopts = XiOptions {
                        seed,
                        ..Default::default()
                    };
                    let xi = reconstruct_xi(&omega, sphere.as_deref().unwrap(), xopts)?;
                    ctx.check("xi_radial", "radial".into(), xi.radial_defect);
                    report.xi = Some(XiReport {
                        radial_defect: xi.radial_defect,
                        loop_defect: xi.loop_defect,
                        xi_min: xi.xi.iter().cloned().fold(f64::INFINITY, f64::min),
                        xi_max: xi.xi.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                        warnings: xi.warnings,
                    });
                }
                if report.periodic.is_none() && report.xi.is_none() {
                    return Err(CliError::Config(
                        "pressure: the pressure output needs pressure `recover` or a homogeneous field".into(),
                    ));
                }
                bundle.pressure = Some(report);
            }
            OutputKind::Iterate => {
                let spec = cfg.recurrence.expect("validated");
                let orbit = simulate_recurrence(&spec)?;
                let bound = iteration_bound(&spec)?;
                let sup = orbit.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                ctx.check("recurrence_bound", "sup - bound".into(), (sup - bound).max(0.0));
                bundle.iterate = Some(IterateReport {
                    spec,
                    premise_limit: premise_limit(spec.b, spec.f1),
                    bound,
                    sup,
                    orbit,
                });
            }
            OutputKind::Threshold => {
                let t = cfg.threshold.expect("validated");
                bundle.threshold = Some(threshold_constants(t.m, t.c_e)?);
            }
        }
    }
    bundle.failures = ctx.failures;
    Ok(bundle)
}
