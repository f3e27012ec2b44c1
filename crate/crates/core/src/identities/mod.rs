//! The identities relating fields to their light-cone traces: weighted `L²`
//! isometries, the first and second inversion formulas, the adjoint
//! operators and the isometry and inversion for means over spheres through
//! the origin.

mod adjoint;
mod inversion;
mod isometry;
mod mean;

pub use adjoint::{
    adjoint_u, adjoint_u_bilinear, adjoint_u_isometry, adjoint_v, adjoint_v_bilinear, adjoint_v_isometry,
    adjoint_u_tabulated, adjoint_v_tabulated, invert_u_second, invert_v_second, SecondInversionRule,
};
pub use inversion::{invert_u_first, invert_v_first, reconstruct_first, FdSpec};
pub use isometry::{isometry_u, isometry_v, trace_table, trace_table_with};
pub use mean::{invert_mean, mean_isometry, mean_trace_from_v, mean_v_crosscheck, reconstruct_mean};

use crate::error::{Error, Result};
use crate::fields::{AnalyticField, Support};
use crate::geometry::{build_sphere_quadrature, OddDimension, RadialRule, SphereQuadrature, MAX_DIM};
use crate::radon::{PlaneRule, SGrid};
use crate::sphmean::ZonalMeanRule;
use crate::sum::compensated_sum;
use crate::trace::{default_trace_grid, MeansStep, TraceRoute};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Both sides of an identity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err: f64,
    /// Further named quantities, such as a second route for the right side.
    #[serde(default)]
    pub extra: BTreeMap<String, f64>,
    pub grids: Grids,
}

/// `|lhs − rhs| / max(|lhs|, 10⁻³⁰⁰)`, and 0 when both sides vanish.
pub fn relative_error(lhs: f64, rhs: f64) -> f64 {
    if lhs == rhs {
        0.0
    } else {
        (lhs - rhs).abs() / lhs.abs().max(1e-300)
    }
}

impl IdentityReport {
    pub fn new(name: &str, lhs: f64, rhs: f64, grids: &Grids) -> Self {
        IdentityReport {
            name: name.to_string(),
            lhs,
            rhs,
            rel_err: relative_error(lhs, rhs),
            extra: BTreeMap::new(),
            grids: grids.clone(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.extra.insert(key.to_string(), value);
        self
    }
}

/// One evaluation point of a reconstruction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointValue {
    pub x: Vec<f64>,
    pub truth: f64,
    pub reconstruction: f64,
    /// Quadrature weight of the point in the weighted `L²` norm (0 for
    /// points outside the evaluation shell).
    pub weight: f64,
}

/// Pointwise and weighted `L²` errors of a reconstruction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub name: String,
    pub points: Vec<PointValue>,
    pub max_abs_err: f64,
    /// `‖rec − truth‖ / ‖truth‖` in the weighted norm.
    pub rel_l2_err: f64,
    /// `max |rec|` over points beyond twice the outer support radius,
    /// relative to `max |truth|`.
    pub outside_rel: f64,
    pub weight_exponent: i32,
    /// Values along the ray of [`ray_points`]; not part of the error norms.
    #[serde(default)]
    pub profile: Vec<PointValue>,
}

impl ReconstructionReport {
    pub fn from_points(name: &str, points: Vec<PointValue>, weight_exponent: i32, support: Support) -> Self {
        let max_abs_err = points.iter().map(|p| (p.reconstruction - p.truth).abs()).fold(0.0, f64::max);
        let num = compensated_sum(points.iter().map(|p| p.weight * (p.reconstruction - p.truth).powi(2)));
        let den = compensated_sum(points.iter().map(|p| p.weight * p.truth * p.truth));
        let rel_l2_err = if num == 0.0 { 0.0 } else { (num / den.max(1e-300)).sqrt() };
        let peak = points.iter().map(|p| p.truth.abs()).fold(0.0, f64::max);
        let outside = points
            .iter()
            .filter(|p| support.outer().is_some_and(|b| crate::geometry::norm(&p.x) > 2.0 * b))
            .map(|p| p.reconstruction.abs())
            .fold(0.0, f64::max);
        let outside_rel = if outside == 0.0 { 0.0 } else { outside / peak.max(1e-300) };
        ReconstructionReport {
            name: name.to_string(),
            points,
            max_abs_err,
            rel_l2_err,
            outside_rel,
            weight_exponent,
            profile: vec![],
        }
    }
}

/// Discretisation parameters shared by the identity checks. Fields missing
/// from a serialized form take their [`Grids::reference`] values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grids {
    /// Level of the direction rule of trace and Radon tables.
    pub sphere_level: usize,
    /// Offsets per table; defaults to `8·sphere_level + 1`.
    #[serde(default)]
    pub s_points: Option<usize>,
    /// Gauss–Legendre points in `ln r` on each hyperplane.
    pub plane_radial: usize,
    /// Level of the angular rule on each hyperplane.
    pub plane_angular: usize,
    /// Level of the sphere rule in volume integrals.
    pub volume_level: usize,
    /// Gauss–Legendre points per radial panel in volume integrals.
    pub volume_radial: usize,
    #[serde(default = "default_panels")]
    pub volume_panels: usize,
    /// Step of central differences in `s` applied to tabulated traces.
    pub fd_step: f64,
    /// Step of the nested `t`-differences of the means route; defaults to
    /// `10⁻³ × (support width)`.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub richardson: bool,
    /// Route used to tabulate traces.
    #[serde(default = "default_route")]
    pub trace_route: TraceRoute,
    /// Zonal rule for spherical means: points per panel, panels, ring level.
    #[serde(default = "default_mean_rule")]
    pub mean_rule: [usize; 3],
    /// 16-point Gauss–Legendre panels in `cos γ` of the direction rules
    /// aligned with the evaluation point (first inversion and mean inversion).
    #[serde(default = "default_aligned_panels")]
    pub aligned_panels: usize,
    /// Level of the `S^{n−2}` factor of the aligned direction rules.
    #[serde(default = "default_aligned_cross")]
    pub aligned_cross: usize,
    /// Hyperplane rule of the second inversion: Gauss–Legendre points in
    /// the radius and level of the angular rule.
    #[serde(default = "default_second_rule")]
    pub second_rule: [usize; 2],
    /// Radius mapped to the middle of the radial rule of the second inversion.
    #[serde(default = "default_second_scale")]
    pub second_scale: f64,
    /// Half-width of the offset grid of the Radon self-test in units of the
    /// outer support radius; below 1 the table misses part of the support.
    #[serde(default = "default_radon_extent")]
    pub radon_extent: f64,
    /// Points where reconstructions are compared with the field.
    #[serde(default)]
    pub eval_set: EvalSet,
    /// Level of the direction set of the evaluation grid.
    pub eval_level: usize,
    /// Radii of the evaluation grid.
    #[serde(default = "default_eval_radii")]
    pub eval_radii: usize,
}

/// Evaluation points of a reconstruction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EvalSet {
    /// `eval_radii` Gauss–Legendre radii on `[0.9a, 1.1b]` times the nodes
    /// of a sphere rule of level `eval_level`.
    #[default]
    Grid,
    /// `count` points uniformly distributed in the support annulus.
    Random { count: usize, seed: u64 },
}

fn default_panels() -> usize {
    4
}

fn default_radon_extent() -> f64 {
    1.2
}

fn default_route() -> TraceRoute {
    TraceRoute::Radon
}

fn default_mean_rule() -> [usize; 3] {
    [16, 8, 16]
}

fn default_second_rule() -> [usize; 2] {
    [128, 32]
}

fn default_second_scale() -> f64 {
    2.0
}

fn default_aligned_panels() -> usize {
    64
}

fn default_aligned_cross() -> usize {
    4
}

fn default_eval_radii() -> usize {
    10
}

impl Default for Grids {
    fn default() -> Self {
        Grids::reference()
    }
}

impl Grids {
    /// Reference resolution for `n = 3`.
    pub fn reference() -> Self {
        Grids {
            sphere_level: 16,
            s_points: None,
            plane_radial: 64,
            plane_angular: 16,
            volume_level: 24,
            volume_radial: 16,
            volume_panels: 4,
            fd_step: 1e-3,
            dt: None,
            richardson: false,
            trace_route: TraceRoute::Radon,
            mean_rule: default_mean_rule(),
            aligned_panels: default_aligned_panels(),
            aligned_cross: default_aligned_cross(),
            second_rule: default_second_rule(),
            second_scale: default_second_scale(),
            radon_extent: default_radon_extent(),
            eval_set: EvalSet::Grid,
            eval_level: 4,
            eval_radii: 10,
        }
    }

    /// Sphere levels, offset grid and volume rule doubled. The plane rule
    /// and steps are unchanged.
    pub fn refined(&self) -> Self {
        Grids {
            sphere_level: 2 * self.sphere_level,
            s_points: self.s_points.map(|p| 2 * p - 1),
            volume_level: 2 * self.volume_level,
            volume_radial: 2 * self.volume_radial,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("sphere_level", self.sphere_level),
            ("plane_radial", self.plane_radial),
            ("plane_angular", self.plane_angular),
            ("volume_level", self.volume_level),
            ("volume_radial", self.volume_radial),
            ("volume_panels", self.volume_panels),
            ("aligned_panels", self.aligned_panels),
            ("aligned_cross", self.aligned_cross),
            ("eval_level", self.eval_level),
            ("eval_radii", self.eval_radii),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::InvalidParameter(format!("grids.{name} must be positive")));
            }
        }
        if self.mean_rule.iter().any(|&v| v == 0) {
            return Err(Error::InvalidParameter("grids.mean_rule entries must be positive".into()));
        }
        if self.second_rule.iter().any(|&v| v == 0) {
            return Err(Error::InvalidParameter("grids.second_rule entries must be positive".into()));
        }
        if !(self.second_scale > 0.0) {
            return Err(Error::InvalidParameter("grids.second_scale must be positive".into()));
        }
        if !(self.radon_extent > 0.0) {
            return Err(Error::InvalidParameter("grids.radon_extent must be positive".into()));
        }
        if !(self.fd_step > 0.0) {
            return Err(Error::InvalidParameter("grids.fd_step must be positive".into()));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                return Err(Error::InvalidParameter("grids.dt must be positive".into()));
            }
        }
        if let EvalSet::Random { count: 0, .. } = self.eval_set {
            return Err(Error::InvalidParameter("grids.eval_set needs at least one random point".into()));
        }
        if let Some(p) = self.s_points {
            if p < 5 || p % 2 == 0 {
                return Err(Error::InvalidParameter("grids.s_points must be odd and at least 5".into()));
            }
        }
        Ok(())
    }

    pub fn sphere(&self, dim: OddDimension) -> Result<SphereQuadrature> {
        build_sphere_quadrature(dim, self.sphere_level)
    }

    pub fn volume_sphere(&self, dim: OddDimension) -> Result<SphereQuadrature> {
        build_sphere_quadrature(dim, self.volume_level)
    }

    pub fn plane(&self, dim: OddDimension) -> Result<PlaneRule> {
        PlaneRule::new(dim, self.plane_radial, self.plane_angular)
    }

    pub fn aligned_rule(&self, dim: OddDimension) -> Result<AlignedRule> {
        AlignedRule::new(dim, self.aligned_panels, self.aligned_cross)
    }

    pub fn second_inversion_rule(&self) -> SecondInversionRule {
        SecondInversionRule {
            radial: self.second_rule[0],
            angular_level: self.second_rule[1],
            scale: self.second_scale,
            step: self.fd_step,
        }
    }

    pub fn mean_rule(&self, dim: OddDimension) -> Result<ZonalMeanRule> {
        ZonalMeanRule::new(dim.n(), self.mean_rule[0], self.mean_rule[1], self.mean_rule[2])
    }

    pub fn means_step(&self, field: &AnalyticField) -> MeansStep {
        let mut step = MeansStep::default_for(field);
        if let Some(dt) = self.dt {
            step.dt = dt;
        }
        step.richardson = self.richardson;
        step
    }

    /// Symmetric offset grid covering the trace support of `field`.
    pub fn trace_grid(&self, field: &AnalyticField) -> Result<SGrid> {
        let mut g = default_trace_grid(self.sphere_level, field)?;
        if let EvalSet::Random { count: 0, .. } = self.eval_set {
            return Err(Error::InvalidParameter("grids.eval_set needs at least one random point".into()));
        }
        if let Some(p) = self.s_points {
            g.count = p;
        }
        Ok(g)
    }

    /// Radial rule over `[lo, hi]`.
    pub fn radial(&self, lo: f64, hi: f64) -> Result<RadialRule> {
        RadialRule::composite(lo, hi, self.volume_radial, self.volume_panels)
    }
}

/// Product rule on `S^{n−1}` with its polar axis along a given direction:
/// `θ = t·axis + √(1 − t²)·σ`, Gauss–Legendre in `t` (weight
/// `(1 − t²)^{(n−3)/2}` folded in) times a product rule for `σ ∈ S^{n−2}`
/// orthogonal to the axis. The `t` rule is composite, with 16 points per
/// panel.
///
/// Integrands of the inversion formulas at `x` depend on `θ` mostly through
/// `x·θ`, so polar nodes resolve their sharp features and the cross factor
/// only sees the smooth angular dependence of the field.
#[derive(Clone, Debug)]
pub struct AlignedRule {
    n: usize,
    t: Vec<f64>,
    tw: Vec<f64>,
    cross: SphereQuadrature,
}

impl AlignedRule {
    pub fn new(dim: OddDimension, panels: usize, cross_level: usize) -> Result<Self> {
        if panels == 0 {
            return Err(Error::InvalidParameter("aligned rule needs polar panels".into()));
        }
        let n = dim.n();
        let polar = RadialRule::composite(-1.0, 1.0, 16, panels)?;
        let tw = polar.nodes.iter().zip(&polar.weights).map(|(t, w)| w * (1.0 - t * t).powi((n as i32 - 3) / 2)).collect();
        Ok(AlignedRule { n, t: polar.nodes, tw, cross: SphereQuadrature::product(n - 1, cross_level)? })
    }

    pub fn len(&self) -> usize {
        self.t.len() * self.cross.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Nodes and weights for the unit vector `axis`.
    pub fn nodes(&self, axis: &[f64]) -> Vec<([f64; MAX_DIM], f64)> {
        let n = self.n;
        let frame = crate::geometry::complete_frame(axis);
        let mut out = Vec::with_capacity(self.len());
        for (&t, &tw) in self.t.iter().zip(&self.tw) {
            let rho = (1.0 - t * t).sqrt();
            for q in 0..self.cross.len() {
                let sigma = self.cross.node(q);
                let mut v = [0.0; MAX_DIM];
                for i in 0..n {
                    v[i] = t * axis[i];
                }
                for (e, s) in frame.iter().zip(sigma) {
                    for i in 0..n {
                        v[i] += rho * s * e[i];
                    }
                }
                out.push((v, tw * self.cross.weight(q)));
            }
        }
        out
    }
}

pub(crate) fn support_annulus(field: &AnalyticField) -> Result<Option<(f64, f64)>> {
    match field.support() {
        Support::Empty => Ok(None),
        Support::Annulus { inner, outer } => Ok(Some((inner, outer))),
        Support::Everywhere => Err(Error::Coverage("identity checks need a field with bounded support".into())),
    }
}

/// `10` Gauss–Legendre radii on `[0.9a, 1.1b]` times the nodes of a sphere
/// rule, with volume weights `wᵢ rᵢ^{n−1+p}`.
pub fn evaluation_grid(
    dim: OddDimension,
    support: (f64, f64),
    level: usize,
    radii: usize,
    weight_exponent: i32,
) -> Result<Vec<(Vec<f64>, f64)>> {
    let sphere = build_sphere_quadrature(dim, level)?;
    let radial = RadialRule::gauss_legendre(0.9 * support.0, 1.1 * support.1, radii)?;
    let n = dim.n();
    let mut out = Vec::with_capacity(sphere.len() * radial.len());
    for (&r, &wr) in radial.nodes.iter().zip(&radial.weights) {
        for j in 0..sphere.len() {
            let x: Vec<f64> = sphere.node(j).iter().map(|t| r * t).collect();
            out.push((x, wr * sphere.weight(j) * r.powi(n as i32 - 1 + weight_exponent)));
        }
    }
    Ok(out)
}

/// `count` points uniformly distributed in the annulus, with weights `|x|^p`
/// (equal volume weights, so relative errors are Monte Carlo estimates of
/// the weighted norms). Sampled by rejection from the enclosing cube.
pub fn random_points(
    dim: OddDimension,
    support: (f64, f64),
    count: usize,
    seed: u64,
    weight_exponent: i32,
) -> Vec<(Vec<f64>, f64)> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (a, b) = support;
    let n = dim.n();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-b..b)).collect();
        let r = crate::geometry::norm(&x);
        if r >= a && r <= b {
            out.push((x, r.powi(weight_exponent)));
        }
    }
    out
}

/// Points beyond twice the outer support radius.
pub fn outside_points(dim: OddDimension, support: (f64, f64)) -> Result<Vec<Vec<f64>>> {
    let sphere = build_sphere_quadrature(dim, 2)?;
    let mut out = Vec::new();
    for r in [2.2 * support.1, 3.0 * support.1] {
        for j in 0..sphere.len() {
            out.push(sphere.node(j).iter().map(|t| r * t).collect());
        }
    }
    Ok(out)
}

/// 32 points `t·u`, `u = (1, …, 1)/√n`, with `t` evenly spaced up to
/// `1.25b`.
pub fn ray_points(dim: OddDimension, support: (f64, f64)) -> Vec<Vec<f64>> {
    let n = dim.n();
    let u = 1.0 / (n as f64).sqrt();
    (1..=32).map(|i| vec![1.25 * support.1 * i as f64 / 32.0 * u; n]).collect()
}

/// Evaluates `rec` on the evaluation grid, the outside points and the
/// profile ray.
pub fn reconstruction_report<F>(
    name: &str,
    truth: &AnalyticField,
    grids: &Grids,
    weight_exponent: i32,
    rec: F,
) -> Result<ReconstructionReport>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let dim = truth.dim();
    let Some(support) = support_annulus(truth)? else {
        return Ok(ReconstructionReport::from_points(name, vec![], weight_exponent, Support::Empty));
    };
    let mut pts = match grids.eval_set {
        EvalSet::Grid => evaluation_grid(dim, support, grids.eval_level, grids.eval_radii, weight_exponent)?,
        EvalSet::Random { count, seed } => random_points(dim, support, count, seed, weight_exponent),
    };
    pts.extend(outside_points(dim, support)?.into_iter().map(|x| (x, 0.0)));
    let points: Vec<PointValue> = pts
        .par_iter()
        .map(|(x, w)| {
            Ok(PointValue { x: x.clone(), truth: truth.eval(x), reconstruction: rec(x)?, weight: *w })
        })
        .collect::<Result<_>>()?;
    let profile: Vec<PointValue> = ray_points(dim, support)
        .into_par_iter()
        .map(|x| Ok(PointValue { truth: truth.eval(&x), reconstruction: rec(&x)?, weight: 0.0, x }))
        .collect::<Result<_>>()?;
    let mut report = ReconstructionReport::from_points(name, points, weight_exponent, truth.support());
    report.profile = profile;
    Ok(report)
}

/// `∫ |x|^p a(x) b(x) dx` over the shell `[lo, hi]`, with `a` and `b`
/// evaluated at each quadrature point.
pub(crate) fn weighted_pairing<A, B>(
    dim: OddDimension,
    a: A,
    b: B,
    weight_exponent: i32,
    sphere: &SphereQuadrature,
    radial: &RadialRule,
) -> Result<f64>
where
    A: Fn(&[f64]) -> Result<f64> + Sync,
    B: Fn(&[f64]) -> Result<f64> + Sync,
{
    let n = dim.n();
    let per_dir: Vec<f64> = (0..sphere.len())
        .into_par_iter()
        .map(|j| -> Result<f64> {
            let theta = sphere.node(j);
            let mut x = [0.0; MAX_DIM];
            let mut terms = Vec::with_capacity(radial.len());
            for (&r, &w) in radial.nodes.iter().zip(&radial.weights) {
                for i in 0..n {
                    x[i] = r * theta[i];
                }
                let bv = b(&x[..n])?;
                let v = if bv == 0.0 { 0.0 } else { a(&x[..n])? * bv };
                terms.push(w * r.powi(weight_exponent + n as i32 - 1) * v);
            }
            Ok(sphere.weight(j) * compensated_sum(terms))
        })
        .collect::<Result<_>>()?;
    Ok(compensated_sum(per_dir))
}
