//! The experiments a configuration can name.

use crate::config::{Experiment, ExperimentConfig};
use lightcone::error::Error;
use lightcone::fields::{AnalyticField, Support};
use lightcone::geometry::{norm, OddDimension};
use lightcone::identities::{
    adjoint_u, adjoint_u_bilinear, adjoint_u_isometry, adjoint_v, adjoint_v_bilinear, adjoint_v_isometry,
    evaluation_grid, invert_u_second, invert_v_second, isometry_u, isometry_v, mean_isometry, mean_v_crosscheck,
    outside_points, random_points, ray_points, reconstruct_first, reconstruct_mean, Grids, PointValue,
    ReconstructionReport,
};
use lightcone::radon::{build_radon_table, radon_invert, radon_isometry_residual, SGrid};
use lightcone::sphmean::SphereAverager;
use lightcone::trace::{trace_u_means, trace_u_radon, trace_v_means, trace_v_radon, TraceKind};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use std::time::Instant;

/// A named quantity compared with a tolerance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// One row of a sweep's convergence table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub level: usize,
    pub rel_err: f64,
    #[serde(skip)]
    pub runtime_s: f64,
}

/// Pointwise values: evaluation point, reference value and computed value.
#[derive(Clone, Debug, PartialEq)]
pub struct PointRow {
    pub x: Vec<f64>,
    pub truth: f64,
    pub reconstruction: f64,
}

/// Everything an experiment produces.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub experiment: Experiment,
    pub checks: Vec<Check>,
    /// Experiment-specific results for the report.
    pub results: Value,
    pub points: Vec<PointRow>,
    /// `(series, t, value)` samples, for example profiles along a ray.
    pub plot: Vec<(String, f64, f64)>,
    pub convergence: Vec<ConvergenceRow>,
    pub runtime_s: f64,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// The first check's value, used as the error of a sweep level.
    pub fn primary_error(&self) -> f64 {
        self.checks.first().map_or(0.0, |c| c.value)
    }
}

/// How an experiment failed to produce numbers.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid parameters: {0}")]
    Invalid(Error),
    #[error("numerical coverage: {0}")]
    Coverage(Error),
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::Coverage(_) | Error::Domain(_) => RunError::Coverage(e),
            other => RunError::Invalid(other),
        }
    }
}

/// Default tolerance of each check.
pub fn default_tolerance(experiment: Experiment, check: &str) -> f64 {
    use Experiment::*;
    match (experiment, check) {
        (RadonSelftest, "isometry") => 5e-3,
        (RadonSelftest, "inversion_l2") => 1e-2,
        (IsometryU | IsometryV, _) => 1e-2,
        (InvertUFirst | InvertVFirst, "rel_l2") => 2e-2,
        (AdjointU | AdjointV, "bilinear") => 5e-3,
        (AdjointU | AdjointV, "isometry") => 1e-2,
        (InvertUSecond | InvertVSecond, "rel_l2") => 3e-2,
        (MeanIsometry, "rel_err") => 2e-2,
        (MeanIsometry, "route_agreement") => 5e-3,
        (MeanInvert, "rel_l2") => 3e-2,
        (MeanInvert, "v_crosscheck") => 1e-2,
        (RouteXcheck, _) => 5e-4,
        (_, "outside") => 1e-3,
        _ => 0.0,
    }
}

struct Checks<'a> {
    config: &'a ExperimentConfig,
    experiment: Experiment,
    list: Vec<Check>,
}

impl Checks<'_> {
    fn add(&mut self, name: &str, value: f64) {
        let tolerance =
            self.config.tolerances.get(name).copied().unwrap_or_else(|| default_tolerance(self.experiment, name));
        self.list.push(Check { name: name.into(), value, tolerance, passed: value <= tolerance });
    }
}

/// Runs the experiment of `config`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Outcome, RunError> {
    match (config.experiment, &config.sweep) {
        (Experiment::Sweep, Some(spec)) => {
            let start = Instant::now();
            let mut rows = Vec::new();
            for &level in &spec.levels {
                let mut c = config.clone();
                c.experiment = spec.base;
                c.sweep = None;
                c.grids.sphere_level = level;
                c.grids.s_points = None;
                let outcome = run_single(&c, spec.base)?;
                rows.push(ConvergenceRow { level, rel_err: outcome.primary_error(), runtime_s: outcome.runtime_s });
            }
            let worst = rows
                .windows(2)
                .map(|w| if w[1].rel_err == 0.0 { 0.0 } else { w[1].rel_err / w[0].rel_err.max(1e-300) })
                .fold(0.0, f64::max);
            let tolerance = config.tolerances.get("growth").copied().unwrap_or(1.0 + spec.band);
            let checks = vec![Check { name: "growth".into(), value: worst, tolerance, passed: worst <= tolerance }];
            let plot = rows.iter().map(|r| ("rel_err".to_string(), r.level as f64, r.rel_err)).collect();
            Ok(Outcome {
                experiment: Experiment::Sweep,
                checks,
                results: json!({ "base": spec.base, "levels": rows }),
                points: vec![],
                plot,
                convergence: rows,
                runtime_s: start.elapsed().as_secs_f64(),
            })
        }
        (e, _) => run_single(config, e),
    }
}

fn run_single(config: &ExperimentConfig, experiment: Experiment) -> Result<Outcome, RunError> {
    let start = Instant::now();
    let grids = &config.grids;
    let dim = config.odd_dim();
    let f = config.field(0);
    let mut checks = Checks { config, experiment, list: vec![] };
    let mut points = vec![];
    let mut plot = vec![];
    let line = ray_samples(dim, &f);
    let results = match experiment {
        Experiment::RadonSelftest => {
            let (iso, rec) = radon_selftest(&f, grids)?;
            checks.add("isometry", iso.rel_err);
            checks.add("inversion_l2", rec.rel_l2_err);
            points = point_rows(&rec);
            plot = profile_plot(&rec);
            json!({ "isometry": iso, "inversion": summary(&rec) })
        }
        Experiment::IsometryU | Experiment::IsometryV => {
            let (report, kind) = if experiment == Experiment::IsometryU {
                (isometry_u(&f, grids)?, TraceKind::U)
            } else {
                (isometry_v(&f, grids)?, TraceKind::V)
            };
            checks.add("rel_err", report.rel_err);
            plot = trace_profile(&f, kind, grids, &line)?;
            json!({ "identity": report })
        }
        Experiment::InvertUFirst | Experiment::InvertVFirst => {
            let kind = if experiment == Experiment::InvertUFirst { TraceKind::U } else { TraceKind::V };
            let rec = reconstruct_first(kind, &f, &with_seed(grids, config))?;
            reconstruction_checks(&mut checks, &rec, &mut points, &mut plot);
            json!({ "reconstruction": summary(&rec) })
        }
        Experiment::AdjointU | Experiment::AdjointV => {
            let phi = config.field(1);
            let (bilinear, iso) = if experiment == Experiment::AdjointU {
                (adjoint_u_bilinear(&f, &phi, grids)?, adjoint_u_isometry(&phi, grids)?)
            } else {
                (adjoint_v_bilinear(&f, &phi, grids)?, adjoint_v_isometry(&phi, grids)?)
            };
            checks.add("bilinear", bilinear.rel_err);
            checks.add("isometry", iso.rel_err);
            let plane = grids.plane(dim)?;
            let phi_line = ray_samples(dim, &phi);
            let name = if experiment == Experiment::AdjointU { "adjoint_u" } else { "adjoint_v" };
            plot = phi_line
                .par_iter()
                .map(|(t, x)| {
                    let v = if experiment == Experiment::AdjointU { adjoint_u(&phi, x, &plane) } else { adjoint_v(&phi, x, &plane) };
                    v.map(|v| (name.to_string(), *t, v))
                })
                .collect::<Result<_, _>>()?;
            json!({ "bilinear": bilinear, "isometry": iso })
        }
        Experiment::InvertUSecond | Experiment::InvertVSecond => {
            let g = with_seed(grids, config);
            let rule = g.second_inversion_rule();
            let rec = if experiment == Experiment::InvertUSecond {
                invert_u_second(&f, &g, &rule)?
            } else {
                invert_v_second(&f, &g, &rule)?
            };
            reconstruction_checks(&mut checks, &rec, &mut points, &mut plot);
            json!({ "reconstruction": summary(&rec) })
        }
        Experiment::MeanIsometry => {
            let report = mean_isometry(&f, grids)?;
            checks.add("rel_err", report.rel_err);
            let agreement = report.extra.get("route_rel_diff").copied().unwrap_or(0.0);
            checks.add("route_agreement", agreement);
            plot = mean_profile(&f, grids, &line)?;
            json!({ "identity": report })
        }
        Experiment::MeanInvert => {
            let g = with_seed(grids, config);
            let rec = reconstruct_mean(&f, &g)?;
            reconstruction_checks(&mut checks, &rec, &mut points, &mut plot);
            let cross = if dim.n() == 3 {
                let report = mean_v_crosscheck(&f, &g)?;
                checks.add("v_crosscheck", report.rel_err);
                Some(report)
            } else {
                None
            };
            json!({ "reconstruction": summary(&rec), "v_crosscheck": cross })
        }
        Experiment::RouteXcheck => {
            let x = route_xcheck(&f, grids, config.points, config.seed)?;
            checks.add("u_agreement", x.u);
            checks.add("v_agreement", x.v);
            points = x.rows;
            json!({ "u_agreement": x.u, "v_agreement": x.v, "points": config.points })
        }
        Experiment::Sweep => unreachable!("sweeps are expanded by run_experiment"),
    };
    Ok(Outcome {
        experiment,
        checks: checks.list,
        results,
        points,
        plot,
        convergence: vec![],
        runtime_s: start.elapsed().as_secs_f64(),
    })
}

/// Random evaluation points take the configuration's seed.
fn with_seed(grids: &Grids, config: &ExperimentConfig) -> Grids {
    let mut g = grids.clone();
    if let lightcone::identities::EvalSet::Random { seed, .. } = &mut g.eval_set {
        *seed = config.seed;
    }
    g
}

#[derive(Serialize)]
struct Summary<'a> {
    name: &'a str,
    points: usize,
    max_abs_err: f64,
    rel_l2_err: f64,
    outside_rel: f64,
    weight_exponent: i32,
}

fn summary(rec: &ReconstructionReport) -> Summary<'_> {
    Summary {
        name: &rec.name,
        points: rec.points.len(),
        max_abs_err: rec.max_abs_err,
        rel_l2_err: rec.rel_l2_err,
        outside_rel: rec.outside_rel,
        weight_exponent: rec.weight_exponent,
    }
}

fn point_rows(rec: &ReconstructionReport) -> Vec<PointRow> {
    rec.points
        .iter()
        .map(|p: &PointValue| PointRow { x: p.x.clone(), truth: p.truth, reconstruction: p.reconstruction })
        .collect()
}

fn reconstruction_checks(
    checks: &mut Checks,
    rec: &ReconstructionReport,
    points: &mut Vec<PointRow>,
    plot: &mut Vec<(String, f64, f64)>,
) {
    checks.add("rel_l2", rec.rel_l2_err);
    checks.add("outside", rec.outside_rel);
    *points = point_rows(rec);
    *plot = profile_plot(rec);
}

/// Ray of [`ray_points`] as `(t, x)` pairs; empty for fields without support.
fn ray_samples(dim: OddDimension, f: &AnalyticField) -> Vec<(f64, Vec<f64>)> {
    match f.support() {
        Support::Annulus { inner, outer } => ray_points(dim, (inner, outer)).into_iter().map(|x| (norm(&x), x)).collect(),
        _ => vec![],
    }
}

fn profile_plot(rec: &ReconstructionReport) -> Vec<(String, f64, f64)> {
    let series = |name: &str, pick: fn(&PointValue) -> f64| {
        rec.profile.iter().map(move |p| (name.to_string(), norm(&p.x), pick(p))).collect::<Vec<_>>()
    };
    let mut out = series("truth", |p| p.truth);
    out.extend(series("reconstruction", |p| p.reconstruction));
    out
}

fn trace_profile(
    f: &AnalyticField,
    kind: TraceKind,
    grids: &Grids,
    line: &[(f64, Vec<f64>)],
) -> Result<Vec<(String, f64, f64)>, RunError> {
    let plane = grids.plane(f.dim())?;
    let name = match kind {
        TraceKind::U => "trace_u",
        TraceKind::V => "trace_v",
    };
    Ok(line
        .par_iter()
        .map(|(t, x)| {
            let v = match kind {
                TraceKind::U => trace_u_radon(f, x, &plane),
                TraceKind::V => trace_v_radon(f, x, &plane),
            };
            v.map(|v| (name.to_string(), *t, v))
        })
        .collect::<Result<_, _>>()?)
}

fn mean_profile(h: &AnalyticField, grids: &Grids, line: &[(f64, Vec<f64>)]) -> Result<Vec<(String, f64, f64)>, RunError> {
    let rule = grids.mean_rule(h.dim())?;
    Ok(line.iter().map(|(t, x)| ("mean_through_origin".to_string(), *t, rule.mean(h, x, norm(x)))).collect())
}

/// Isometry residual and inversion round trip of a Radon table on
/// `sphere × [−eb, eb]`, `e = grids.radon_extent`; the table holds two
/// derivatives beyond the inversion order for Hermite interpolation. Points
/// beyond the support are reported but not checked: the direction quadrature
/// leaves a residual of a few percent there at the reference level.
fn radon_selftest(
    f: &AnalyticField,
    grids: &Grids,
) -> Result<(lightcone::radon::Residual, ReconstructionReport), RunError> {
    let dim = f.dim();
    let Support::Annulus { inner, outer } = f.support() else {
        let empty = ReconstructionReport::from_points("radon_invert", vec![], 0, Support::Empty);
        return Ok((lightcone::radon::Residual::new(0.0, 0.0), empty));
    };
    let order = dim.n() + 1;
    let field = f.clone().with_max_order(order)?;
    let sphere = grids.sphere(dim)?;
    let count = grids.s_points.unwrap_or(8 * grids.sphere_level + 1);
    let half = grids.radon_extent * outer;
    if half < outer {
        return Err(RunError::Coverage(Error::Coverage(format!(
            "Radon table offsets end at {half} but the field is supported up to {outer}"
        ))));
    }
    let s_grid = SGrid::new(-half, half, count)?;
    let table = build_radon_table(&field, &sphere, s_grid, order, &grids.plane(dim)?)?;
    let iso = radon_isometry_residual(f, &table, &grids.volume_sphere(dim)?, &grids.radial(inner, outer)?)?;
    let mut pts = evaluation_grid(dim, (inner, outer), grids.eval_level, grids.eval_radii, 0)?;
    pts.extend(outside_points(dim, (inner, outer))?.into_iter().map(|x| (x, 0.0)));
    let values: Vec<PointValue> = pts
        .par_iter()
        .map(|(x, w)| {
            radon_invert(&table, x).map(|r| PointValue { x: x.clone(), truth: f.eval(x), reconstruction: r, weight: *w })
        })
        .collect::<Result<_, _>>()?;
    let profile: Vec<PointValue> = ray_points(dim, (inner, outer))
        .into_par_iter()
        .map(|x| radon_invert(&table, &x).map(|r| PointValue { truth: f.eval(&x), reconstruction: r, weight: 0.0, x }))
        .collect::<Result<_, _>>()?;
    let mut rec = ReconstructionReport::from_points("radon_invert", values, 0, f.support());
    rec.profile = profile;
    Ok((iso, rec))
}

struct RouteXcheck {
    u: f64,
    v: f64,
    rows: Vec<PointRow>,
}

/// Means route against Radon route for both traces at random points with
/// `1.2a ≤ |x| ≤ 1.25b`; agreement is `max|means − radon| / max|radon|`. The
/// pointwise rows hold the `U` values.
fn route_xcheck(f: &AnalyticField, grids: &Grids, count: usize, seed: u64) -> Result<RouteXcheck, RunError> {
    let dim = f.dim();
    let Support::Annulus { inner, outer } = f.support() else {
        return Ok(RouteXcheck { u: 0.0, v: 0.0, rows: vec![] });
    };
    let pts = random_points(dim, (1.2 * inner, 1.25 * outer), count, seed, 0);
    let zonal = grids.mean_rule(dim)?;
    let plane = grids.plane(dim)?;
    let step = grids.means_step(f);
    let values: Vec<[f64; 4]> = pts
        .par_iter()
        .map(|(x, _)| -> Result<[f64; 4], Error> {
            Ok([
                trace_u_radon(f, x, &plane)?,
                trace_u_means(f, x, &zonal, step)?,
                trace_v_radon(f, x, &plane)?,
                trace_v_means(f, x, &zonal, step)?,
            ])
        })
        .collect::<Result<_, _>>()?;
    let agreement = |r: usize, m: usize| {
        let scale = values.iter().map(|v| v[r].abs()).fold(0.0, f64::max);
        let diff = values.iter().map(|v| (v[m] - v[r]).abs()).fold(0.0, f64::max);
        if diff == 0.0 { 0.0 } else { diff / scale.max(1e-300) }
    };
    let mut rows = Vec::with_capacity(count);
    for (i, (x, _)) in pts.iter().enumerate() {
        rows.push(PointRow { x: x.clone(), truth: values[i][0], reconstruction: values[i][1] });
    }
    Ok(RouteXcheck { u: agreement(0, 1), v: agreement(2, 3), rows })
}
