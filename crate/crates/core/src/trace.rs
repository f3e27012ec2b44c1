//! The light-cone traces `𝒰f(x) = u(x, |x|)` and `𝒱g(x) = v(x, |x|)` of the
//! wave equation with initial data `(f, 0)` and `(0, g)`.
//!
//! Each trace is computed two ways: from spherical means (the classical
//! odd-dimensional solution formula) and from the Radon transform of a
//! pullback of the data by the inversion map. Tables are stored in the
//! coordinate `s = 1/(2|x|)`, where every trace has compact support.

use crate::error::{Error, Result};
use crate::fd::{central_difference, nested_d, richardson};
use crate::fields::{inversion_pullback, AnalyticField, Support};
use crate::geometry::{norm, OddDimension, SphereQuadrature, MAX_DIM};
use crate::radon::{build_radon_table, radon_s_derivative, PlaneRule, SGrid};
use crate::sphmean::SphereAverager;
use crate::spline::{Interpolant, UniformQuinticHermite, UniformSpline};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TraceKind {
    U,
    V,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceRoute {
    Means,
    Radon,
}

/// Step for the nested `t`-differences of the means route.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeansStep {
    pub dt: f64,
    #[serde(default)]
    pub richardson: bool,
}

impl MeansStep {
    /// `dt = 10⁻³ × (support width)`, no extrapolation.
    pub fn default_for(field: &AnalyticField) -> Self {
        let width = match field.support() {
            Support::Annulus { inner, outer } => outer - inner,
            _ => 1.0,
        };
        MeansStep { dt: 1e-3 * width, richardson: false }
    }
}

fn sign(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn radius(x: &[f64]) -> Result<f64> {
    let r = norm(x);
    if r == 0.0 {
        return Err(Error::Domain("traces are not evaluated at the origin".into()));
    }
    Ok(r)
}

/// `F(X) = |X|^{1−n} f(X/|X|²)`.
pub fn u_pullback(f: &AnalyticField) -> AnalyticField {
    inversion_pullback(f, 1 - f.dim().n() as i32)
}

/// `G(X) = |X|^{−n−1} g(X/|X|²)`.
pub fn v_pullback(g: &AnalyticField) -> AnalyticField {
    inversion_pullback(g, -(g.dim().n() as i32) - 1)
}

fn means_route(
    h: &AnalyticField,
    x: &[f64],
    averager: &dyn SphereAverager,
    step: MeansStep,
    d_order: usize,
) -> Result<f64> {
    if h.support() == Support::Empty {
        return Ok(0.0);
    }
    let r = radius(x)?;
    let n = h.dim().n();
    let g = |t: f64| Ok(t.powi(n as i32 - 2) * averager.mean(h, x, t));
    let coarse = nested_d(&g, r, d_order, step.dt)?;
    if step.richardson {
        let fine = nested_d(&g, r, d_order, step.dt / 2.0)?;
        Ok(richardson(coarse, fine))
    } else {
        Ok(coarse)
    }
}

/// `𝒰f(x) = (√π/Γ(n/2))·t·Dᵐ(t^{n−2}ℳf(x, t))` at `t = |x|`, `D = (1/2t)∂ₜ`.
pub fn trace_u_means(f: &AnalyticField, x: &[f64], averager: &dyn SphereAverager, step: MeansStep) -> Result<f64> {
    let dim = f.dim();
    let r = radius(x)?;
    let c = PI.sqrt() / dim.gamma_half_n();
    Ok(c * r * means_route(f, x, averager, step, dim.m())?)
}

/// `𝒱g(x) = (√π/(2Γ(n/2)))·D^{m−1}(t^{n−2}ℳg(x, t))` at `t = |x|`.
pub fn trace_v_means(g: &AnalyticField, x: &[f64], averager: &dyn SphereAverager, step: MeansStep) -> Result<f64> {
    let dim = g.dim();
    let c = PI.sqrt() / (2.0 * dim.gamma_half_n());
    Ok(c * means_route(g, x, averager, step, dim.m() - 1)?)
}

fn unit_and_s(x: &[f64]) -> Result<([f64; MAX_DIM], f64)> {
    let r = radius(x)?;
    let mut theta = [0.0; MAX_DIM];
    for (t, v) in theta.iter_mut().zip(x) {
        *t = v / r;
    }
    Ok((theta, 1.0 / (2.0 * r)))
}

/// `𝒰f(θ/(2s)) = ((−1)^m sᵐ/(2πᵐ)) ∂ₛᵐ ℛF(θ, s)`.
pub fn trace_u_radon(f: &AnalyticField, x: &[f64], plane: &PlaneRule) -> Result<f64> {
    let dim = f.dim();
    let m = dim.m();
    let (theta, s) = unit_and_s(x)?;
    let d = radon_s_derivative(&u_pullback(f), &theta[..dim.n()], s, m, plane)?;
    Ok(sign(m) * s.powi(m as i32) / (2.0 * PI.powi(m as i32)) * d)
}

/// `𝒱g(θ/(2s)) = ((−1)^{m−1} sᵐ/(2πᵐ)) ∂ₛ^{m−1} ℛG(θ, s)`.
pub fn trace_v_radon(g: &AnalyticField, x: &[f64], plane: &PlaneRule) -> Result<f64> {
    let dim = g.dim();
    let m = dim.m();
    let (theta, s) = unit_and_s(x)?;
    let d = radon_s_derivative(&v_pullback(g), &theta[..dim.n()], s, m - 1, plane)?;
    Ok(sign(m - 1) * s.powi(m as i32) / (2.0 * PI.powi(m as i32)) * d)
}

/// `∂ᵣ(rᵐ·trace(rθ))` at `r = |x|` by a central difference of step `dr`.
pub fn trace_radial_derivative(
    dim: OddDimension,
    trace: impl Fn(&[f64]) -> Result<f64>,
    x: &[f64],
    dr: f64,
) -> Result<f64> {
    let r = radius(x)?;
    let m = dim.m() as i32;
    let n = dim.n();
    let mut p = [0.0; MAX_DIM];
    central_difference(
        |rr| {
            for i in 0..n {
                p[i] = x[i] * rr / r;
            }
            Ok(rr.powi(m) * trace(&p[..n])?)
        },
        r,
        1,
        dr,
    )
}

/// `∂ᵣ(rᵐ 𝒱g(rθ)) = ∂ₛᵐ ℛG(θ, s) / (4(−2π)ᵐ r²)`.
pub fn trace_v_radial_derivative_radon(g: &AnalyticField, x: &[f64], plane: &PlaneRule) -> Result<f64> {
    let dim = g.dim();
    let m = dim.m();
    let (theta, s) = unit_and_s(x)?;
    let r = 1.0 / (2.0 * s);
    let d = radon_s_derivative(&v_pullback(g), &theta[..dim.n()], s, m, plane)?;
    Ok(d / (4.0 * sign(m) * (2.0 * PI).powi(m as i32) * r * r))
}

/// A trace operator applied to an analytic field, evaluable pointwise.
#[derive(Clone)]
pub struct TraceField {
    kind: TraceKind,
    route: TraceRoute,
    source: AnalyticField,
    pullback: AnalyticField,
    plane: PlaneRule,
    averager: Arc<dyn SphereAverager + Send>,
    step: MeansStep,
}

impl std::fmt::Debug for TraceField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TraceField").field("kind", &self.kind).field("route", &self.route).finish()
    }
}

impl TraceField {
    pub fn new(
        kind: TraceKind,
        route: TraceRoute,
        source: AnalyticField,
        plane: PlaneRule,
        averager: Arc<dyn SphereAverager + Send>,
        step: MeansStep,
    ) -> Self {
        let pullback = match kind {
            TraceKind::U => u_pullback(&source),
            TraceKind::V => v_pullback(&source),
        };
        // the pullback is internal, so it may carry the extra orders tables use
        let order = match kind {
            TraceKind::U => source.dim().m(),
            TraceKind::V => source.dim().m() - 1,
        };
        let wanted = (order + TABULATED_DERIVATIVES).min(crate::jet::JET_CAPACITY - 1);
        let pullback = if wanted > pullback.max_order() {
            pullback.with_max_order(wanted).expect("order below jet capacity")
        } else {
            pullback
        };
        TraceField { kind, route, source, pullback, plane, averager, step }
    }

    pub fn kind(&self) -> TraceKind {
        self.kind
    }

    pub fn route(&self) -> TraceRoute {
        self.route
    }

    pub fn source(&self) -> &AnalyticField {
        &self.source
    }

    pub fn dim(&self) -> OddDimension {
        self.source.dim()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        match (self.kind, self.route) {
            (TraceKind::U, TraceRoute::Means) => trace_u_means(&self.source, x, &*self.averager, self.step),
            (TraceKind::V, TraceRoute::Means) => trace_v_means(&self.source, x, &*self.averager, self.step),
            (TraceKind::U, TraceRoute::Radon) => self.scaled_radon(x),
            (TraceKind::V, TraceRoute::Radon) => self.scaled_radon(x),
        }
    }

    fn scaled_radon(&self, x: &[f64]) -> Result<f64> {
        let (theta, s) = unit_and_s(x)?;
        let q = self.scaled(&theta[..self.dim().n()], s)?;
        Ok(s.powi(self.dim().m() as i32) * q)
    }

    fn radon_order(&self) -> usize {
        match self.kind {
            TraceKind::U => self.dim().m(),
            TraceKind::V => self.dim().m() - 1,
        }
    }

    fn radon_factor(&self) -> f64 {
        let m = self.dim().m();
        sign(self.radon_order()) / (2.0 * PI.powi(m as i32))
    }

    /// The smooth scaled trace `Q(θ, s) = s^{−m}·trace(θ/(2s))`, through its
    /// Radon form, which stays valid at `s ≤ 0`.
    pub fn scaled(&self, theta: &[f64], s: f64) -> Result<f64> {
        let d = radon_s_derivative(&self.pullback, theta, s, self.radon_order(), &self.plane)?;
        Ok(self.radon_factor() * d)
    }
}

/// What a [`TraceTable`] stores.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceQuantity {
    /// `Q = s^{−m} 𝒰f(θ/(2s))`
    U,
    /// `Q = s^{−m} 𝒱g(θ/(2s))`
    V,
    /// `Ψ = s^{−m−2} ψ(θ/(2s))` with `ψ = |x|^{−m}∂ᵣ(|x|ᵐ 𝒱g)`
    VRadial,
}

impl TraceQuantity {
    /// Power `p` with `trace(θ/(2s)) = s^p·Q(θ, s)`.
    pub fn power(&self, dim: OddDimension) -> i32 {
        match self {
            TraceQuantity::U | TraceQuantity::V => dim.m() as i32,
            TraceQuantity::VRadial => dim.m() as i32 + 2,
        }
    }

    /// `Q(−θ, −s) = parity·Q(θ, s)`.
    pub fn parity(&self, dim: OddDimension) -> f64 {
        match self {
            TraceQuantity::U | TraceQuantity::VRadial => sign(dim.m()),
            TraceQuantity::V => sign(dim.m() - 1),
        }
    }
}

/// A trace tabulated as `Q(θⱼ, s_k)` on a symmetric offset grid.
///
/// When the first and second `s`-derivatives are tabulated too (the Radon
/// route gets them exactly), each direction is interpolated by a quintic
/// Hermite interpolant; otherwise by a natural cubic spline.
#[derive(Clone, Debug)]
pub struct TraceTable {
    quantity: TraceQuantity,
    dim: OddDimension,
    sphere: SphereQuadrature,
    s_grid: SGrid,
    support_s: f64,
    values: Vec<f64>,
    /// `∂ₛ^o Q(θⱼ, s_k)` for `o = 1..=deriv_orders`, at `(j·count + k)·deriv_orders + o − 1`
    derivatives: Vec<f64>,
    deriv_orders: usize,
    splines: Vec<Interpolant>,
    field_digest: String,
}

fn support_s(field: &AnalyticField) -> Result<f64> {
    match field.support() {
        Support::Annulus { inner, .. } => Ok(1.0 / inner),
        Support::Empty => Ok(0.0),
        Support::Everywhere => Err(Error::Coverage("trace tables need a field with bounded support".into())),
    }
}

impl TraceTable {
    pub fn from_parts(
        quantity: TraceQuantity,
        dim: OddDimension,
        sphere: SphereQuadrature,
        s_grid: SGrid,
        support_s: f64,
        values: Vec<f64>,
        field_digest: String,
    ) -> Result<Self> {
        Self::from_parts_with_derivatives(quantity, dim, sphere, s_grid, support_s, values, Vec::new(), 0, field_digest)
    }

    /// As [`TraceTable::from_parts`], with `deriv_orders` tabulated
    /// `s`-derivatives per node.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts_with_derivatives(
        quantity: TraceQuantity,
        dim: OddDimension,
        sphere: SphereQuadrature,
        s_grid: SGrid,
        support_s: f64,
        values: Vec<f64>,
        derivatives: Vec<f64>,
        deriv_orders: usize,
        field_digest: String,
    ) -> Result<Self> {
        if !s_grid.is_symmetric() {
            return Err(Error::InvalidParameter("trace tables need an s-grid symmetric about 0".into()));
        }
        if s_grid.hi < support_s {
            return Err(Error::Coverage(format!(
                "s-grid ends at {} but the trace is supported up to s = {support_s}",
                s_grid.hi
            )));
        }
        if values.len() != sphere.len() * s_grid.count {
            return Err(Error::InvalidParameter("trace table value count does not match its grids".into()));
        }
        if derivatives.len() != values.len() * deriv_orders {
            return Err(Error::InvalidParameter("trace table derivative count does not match its grids".into()));
        }
        let ns = s_grid.count;
        let splines = (0..sphere.len())
            .map(|j| -> Result<Interpolant> {
                if deriv_orders >= 2 {
                    let data = (0..ns)
                        .map(|k| {
                            let base = (j * ns + k) * deriv_orders;
                            [values[j * ns + k], derivatives[base], derivatives[base + 1]]
                        })
                        .collect();
                    Ok(Interpolant::Quintic(UniformQuinticHermite::new(s_grid.lo, s_grid.step(), data)?))
                } else {
                    let col = values[j * ns..(j + 1) * ns].to_vec();
                    Ok(Interpolant::Cubic(UniformSpline::new(s_grid.lo, s_grid.step(), col)?))
                }
            })
            .collect::<Result<_>>()?;
        Ok(TraceTable {
            quantity,
            dim,
            sphere,
            s_grid,
            support_s,
            values,
            derivatives,
            deriv_orders,
            splines,
            field_digest,
        })
    }

    pub fn quantity(&self) -> TraceQuantity {
        self.quantity
    }

    pub fn dim(&self) -> OddDimension {
        self.dim
    }

    pub fn sphere(&self) -> &SphereQuadrature {
        &self.sphere
    }

    pub fn s_grid(&self) -> SGrid {
        self.s_grid
    }

    /// Offset beyond which the trace vanishes (`1/a` for support `[a, b]`).
    pub fn support_s(&self) -> f64 {
        self.support_s
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn field_digest(&self) -> &str {
        &self.field_digest
    }

    /// Number of tabulated `s`-derivatives per node (0 when only values are
    /// stored).
    pub fn deriv_orders(&self) -> usize {
        self.deriv_orders
    }

    pub fn derivatives(&self) -> &[f64] {
        &self.derivatives
    }

    /// Tabulated `∂ₛ^order Q(θⱼ, s_k)`; `order = 0` is the value.
    pub fn node_derivative(&self, j: usize, k: usize, order: usize) -> f64 {
        if order == 0 {
            return self.value(j, k);
        }
        assert!(order <= self.deriv_orders, "derivative order {order} is not tabulated");
        self.derivatives[(j * self.s_grid.count + k) * self.deriv_orders + order - 1]
    }

    #[inline]
    pub fn value(&self, j: usize, k: usize) -> f64 {
        self.values[j * self.s_grid.count + k]
    }

    /// `α·Q`, a table of the trace of `α` times the field.
    pub fn scaled_by(&self, alpha: f64) -> Result<Self> {
        TraceTable::from_parts_with_derivatives(
            self.quantity,
            self.dim,
            self.sphere.clone(),
            self.s_grid,
            self.support_s,
            self.values.iter().map(|v| alpha * v).collect(),
            self.derivatives.iter().map(|v| alpha * v).collect(),
            self.deriv_orders,
            format!("{}*{alpha:e}", self.field_digest),
        )
    }

    /// `Q(θⱼ, s)` by the spline in `s`; zero beyond the support.
    pub fn scaled(&self, j: usize, s: f64) -> Result<f64> {
        if s.abs() > self.support_s {
            return Ok(0.0);
        }
        self.splines[j].eval(s).ok_or_else(|| {
            Error::Coverage(format!("offset {s} outside the tabulated range [{}, {}]", self.s_grid.lo, self.s_grid.hi))
        })
    }

    /// `∂ₛQ(θⱼ, s)` from the spline.
    pub fn scaled_derivative(&self, j: usize, s: f64) -> Result<f64> {
        if s.abs() > self.support_s {
            return Ok(0.0);
        }
        self.splines[j].derivative(s).ok_or_else(|| Error::Coverage(format!("offset {s} outside the table")))
    }

    /// `Q(θ, s)` at an arbitrary unit vector by angular interpolation.
    pub fn scaled_interpolated(&self, theta: &[f64], s: f64) -> Result<f64> {
        if s.abs() > self.support_s {
            return Ok(0.0);
        }
        let stencil = self.sphere.stencil(theta);
        let mut acc = 0.0;
        for &(j, w) in &stencil.entries {
            acc += w * self.scaled(j, s)?;
        }
        Ok(acc)
    }

    fn node_index(&self, theta: &[f64]) -> Result<usize> {
        self.sphere
            .find_node(theta, 1e-12)
            .ok_or_else(|| Error::Coverage("direction is not a node of the tabulated sphere rule".into()))
    }

    /// The trace at `x`; `x/|x|` must be a tabulated direction.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let (theta, s) = unit_and_s(x)?;
        let j = self.node_index(&theta[..self.dim.n()])?;
        Ok(s.powi(self.quantity.power(self.dim)) * self.scaled(j, s)?)
    }

    /// The trace at `x` with angular interpolation between directions.
    pub fn eval_interpolated(&self, x: &[f64]) -> Result<f64> {
        let (theta, s) = unit_and_s(x)?;
        Ok(s.powi(self.quantity.power(self.dim)) * self.scaled_interpolated(&theta[..self.dim.n()], s)?)
    }

    /// `Ψ = −2∂ₛQ_V`: the table of `|x|^{−m}∂ᵣ(|x|ᵐ𝒱g)`.
    ///
    /// With three tabulated derivatives, `Ψ` and its first two derivatives are
    /// read off the table. Otherwise `Ψ` comes from central differences of
    /// step `h` of the interpolated `Q_V`.
    pub fn radial_derivative_table(&self, h: f64) -> Result<TraceTable> {
        if self.quantity != TraceQuantity::V {
            return Err(Error::InvalidParameter("radial derivative tables are built from V traces".into()));
        }
        let ns = self.s_grid.count;
        if self.deriv_orders >= 3 {
            let mut values = vec![0.0; self.values.len()];
            let mut derivs = vec![0.0; 2 * self.values.len()];
            for j in 0..self.sphere.len() {
                for k in 0..ns {
                    let i = j * ns + k;
                    values[i] = -2.0 * self.node_derivative(j, k, 1);
                    derivs[2 * i] = -2.0 * self.node_derivative(j, k, 2);
                    derivs[2 * i + 1] = -2.0 * self.node_derivative(j, k, 3);
                }
            }
            return TraceTable::from_parts_with_derivatives(
                TraceQuantity::VRadial,
                self.dim,
                self.sphere.clone(),
                self.s_grid,
                self.support_s,
                values,
                derivs,
                2,
                self.field_digest.clone(),
            );
        }
        let nodes = self.s_grid.nodes();
        let mut values = vec![0.0; self.values.len()];
        for j in 0..self.sphere.len() {
            for k in 0..ns {
                let s = nodes[k];
                let lo = (s - h).max(self.s_grid.lo);
                let hi = (s + h).min(self.s_grid.hi);
                let d = (self.scaled(j, hi)? - self.scaled(j, lo)?) / (hi - lo);
                values[j * ns + k] = -2.0 * d;
            }
        }
        TraceTable::from_parts(
            TraceQuantity::VRadial,
            self.dim,
            self.sphere.clone(),
            self.s_grid,
            self.support_s,
            values,
            self.field_digest.clone(),
        )
    }
}

/// `s`-derivatives stored with Radon-route tables: two for quintic Hermite
/// interpolation and a third for the radial derivative table of `V`.
const TABULATED_DERIVATIVES: usize = 3;

/// `2·(4·level) + 1` points on `[−1.05/a, 1.05/a]`.
pub fn default_trace_grid(level: usize, field: &AnalyticField) -> Result<SGrid> {
    let s = support_s(field)?.max(1e-3);
    Ok(SGrid { lo: -1.05 * s, hi: 1.05 * s, count: 8 * level + 1 })
}

/// Tabulates `Q` on `sphere × s_grid`.
///
/// The Radon route tabulates `∂ₛᵏℛ` of the pullback directly. The means
/// route evaluates the trace at `x = θ/(2s)` for `s > 0`, uses the Radon
/// route at `s = 0` (the point at infinity) and fills `s < 0` by parity.
pub fn tabulate_trace(trace: &TraceField, sphere: &SphereQuadrature, s_grid: SGrid) -> Result<TraceTable> {
    tabulate_trace_with(trace, sphere, s_grid, TABULATED_DERIVATIVES)
}

/// [`tabulate_trace`] storing at most `derivatives` exact `s`-derivatives
/// per node on the Radon route (0 gives a values-only table).
pub fn tabulate_trace_with(
    trace: &TraceField,
    sphere: &SphereQuadrature,
    s_grid: SGrid,
    derivatives: usize,
) -> Result<TraceTable> {
    let dim = trace.dim();
    let quantity = match trace.kind {
        TraceKind::U => TraceQuantity::U,
        TraceKind::V => TraceQuantity::V,
    };
    let ssup = support_s(&trace.source)?;
    if !s_grid.is_symmetric() {
        return Err(Error::InvalidParameter("trace tables need an s-grid symmetric about 0".into()));
    }
    if s_grid.hi < ssup {
        return Err(Error::Coverage(format!("s-grid ends at {} but the trace is supported up to s = {ssup}", s_grid.hi)));
    }
    let ns = s_grid.count;
    let values = match trace.route {
        TraceRoute::Radon => {
            let order = trace.radon_order();
            let extra = derivatives.min(TABULATED_DERIVATIVES).min(trace.pullback.max_order() - order);
            let table = build_radon_table(&trace.pullback, sphere, s_grid, order + extra, &trace.plane)?;
            let c = trace.radon_factor();
            let mut v = vec![0.0; sphere.len() * ns];
            let mut d = vec![0.0; sphere.len() * ns * extra];
            for j in 0..sphere.len() {
                for k in 0..ns {
                    let i = j * ns + k;
                    v[i] = c * table.value(j, k, order);
                    for o in 1..=extra {
                        d[i * extra + o - 1] = c * table.value(j, k, order + o);
                    }
                }
            }
            return TraceTable::from_parts_with_derivatives(
                quantity,
                dim,
                sphere.clone(),
                s_grid,
                ssup,
                v,
                d,
                extra,
                trace.source.digest(),
            );
        }
        TraceRoute::Means => {
            let nodes = s_grid.nodes();
            let n = dim.n();
            let power = quantity.power(dim);
            let rows: Vec<Vec<f64>> = (0..sphere.len())
                .into_par_iter()
                .map(|j| -> Result<Vec<f64>> {
                    let theta = sphere.node(j);
                    let mut row = vec![0.0; ns];
                    let mut x = [0.0; MAX_DIM];
                    for (k, &s) in nodes.iter().enumerate() {
                        if s <= 0.0 || s > ssup {
                            continue;
                        }
                        for i in 0..n {
                            x[i] = theta[i] / (2.0 * s);
                        }
                        row[k] = trace.eval(&x[..n])? / s.powi(power);
                    }
                    Ok(row)
                })
                .collect::<Result<_>>()?;
            let parity = quantity.parity(dim);
            let mut v = vec![0.0; sphere.len() * ns];
            let zero_k = ns / 2;
            for j in 0..sphere.len() {
                let ja = sphere.antipode(j);
                for k in 0..ns {
                    let s = nodes[k];
                    v[j * ns + k] = if s > 0.0 {
                        rows[j][k]
                    } else if s < 0.0 {
                        parity * rows[ja][ns - 1 - k]
                    } else {
                        0.0
                    };
                }
                if nodes[zero_k] == 0.0 {
                    v[j * ns + zero_k] = trace.scaled(sphere.node(j), 0.0)?;
                }
            }
            v
        }
    };
    TraceTable::from_parts(quantity, dim, sphere.clone(), s_grid, ssup, values, trace.source.digest())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{bump_profile, make_annular_bump, unit_polynomial, Monomial};
    use crate::sphmean::{radial_mean_oracle_3d, spherical_mean, ZonalMeanRule};
    use crate::geometry::build_sphere_quadrature;

    fn d3() -> OddDimension {
        OddDimension::new(3).unwrap()
    }

    #[test]
    fn kirchhoff_constant_for_three_dimensions() {
        assert!((PI.sqrt() / d3().gamma_half_n() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn zero_and_inner_region() {
        let zonal = ZonalMeanRule::new(3, 12, 4, 12).unwrap();
        let plane = PlaneRule::new(d3(), 24, 12).unwrap();
        let zero = AnalyticField::zero(d3());
        let step = MeansStep { dt: 1e-3, richardson: false };
        let x = [0.3, 0.9, -0.2];
        assert_eq!(trace_u_means(&zero, &x, &zonal, step).unwrap(), 0.0);
        assert_eq!(trace_u_radon(&zero, &x, &plane).unwrap(), 0.0);
        assert_eq!(trace_v_means(&zero, &x, &zonal, step).unwrap(), 0.0);
        assert_eq!(trace_v_radon(&zero, &x, &plane).unwrap(), 0.0);
        let f = make_annular_bump(d3(), 1.0, 2.0, unit_polynomial(d3())).unwrap();
        let inner = [0.2, 0.1, 0.3];
        assert!(trace_u_means(&f, &inner, &zonal, step).unwrap().abs() < 1e-12);
        assert_eq!(trace_u_radon(&f, &inner, &plane).unwrap(), 0.0);
        assert!(trace_u_radon(&f, &[0.0; 3], &plane).is_err());
    }

    #[test]
    fn v_means_is_radius_times_mean_in_three_dimensions() {
        let g = make_annular_bump(d3(), 1.0, 2.0, unit_polynomial(d3())).unwrap();
        let sphere = build_sphere_quadrature(d3(), 12).unwrap();
        let x = [0.4, 0.5, 0.6];
        let r = norm(&x);
        let v = trace_v_means(&g, &x, &sphere, MeansStep { dt: 1e-3, richardson: false }).unwrap();
        assert!((v - r * spherical_mean(&g, &x, r, &sphere)).abs() <= 1e-13);
    }

    #[test]
    fn kirchhoff_oracle_for_radial_data() {
        let f = make_annular_bump(d3(), 1.1, 1.9, unit_polynomial(d3())).unwrap();
        let zonal = ZonalMeanRule::new(3, 16, 8, 4).unwrap();
        let x = [0.8, 0.0, 0.0];
        let mean = |t: f64| radial_mean_oracle_3d(|r| bump_profile(1.1, 1.9, r), 0.8, t, 16, 64).unwrap();
        let dt = 1e-3;
        let d = |h: f64| ((0.8 + h) * mean(0.8 + h) - (0.8 - h) * mean(0.8 - h)) / (2.0 * h);
        let oracle = richardson(d(dt), d(dt / 2.0));
        let got = trace_u_means(&f, &x, &zonal, MeansStep { dt, richardson: true }).unwrap();
        assert!((got - oracle).abs() <= 1e-6 * oracle.abs(), "{got} vs {oracle}");
        // for radial data in three dimensions u(x, |x|) = B(2|x|)
        assert!((got - bump_profile(1.1, 1.9, 1.6)).abs() <= 1e-6 * got.abs());
        let v = trace_v_means(&f, &x, &zonal, MeansStep { dt, richardson: false }).unwrap();
        assert!((v - 0.8 * mean(0.8)).abs() <= 1e-8 * v.abs());
        // and v(x, |x|) = (1/2|x|) ∫₀^{2|x|} ρ B(ρ) dρ
        let closed = crate::geometry::RadialRule::composite(1.1, 1.6, 16, 32)
            .unwrap()
            .integrate(|r| r * bump_profile(1.1, 1.9, r))
            / 1.6;
        assert!((v - closed).abs() <= 1e-8 * v.abs());
    }

    #[test]
    fn routes_agree_on_a_few_points() {
        let f = make_annular_bump(
            d3(),
            0.5,
            2.0,
            vec![Monomial { coef: 1.0, powers: vec![0, 0, 0] }, Monomial { coef: 0.5, powers: vec![1, 1, 0] }],
        )
        .unwrap();
        let zonal = ZonalMeanRule::new(3, 16, 8, 16).unwrap();
        let plane = PlaneRule::new(d3(), 64, 24).unwrap();
        let step = MeansStep { dt: 1e-3, richardson: true };
        for x in [[0.5, 0.4, 0.3], [-1.0, 0.2, 0.9], [0.1, -2.2, 0.4]] {
            let a = trace_u_means(&f, &x, &zonal, step).unwrap();
            let b = trace_u_radon(&f, &x, &plane).unwrap();
            assert!((a - b).abs() <= 1e-5 * b.abs().max(1e-3), "U at {x:?}: {a} vs {b}");
            let a = trace_v_means(&f, &x, &zonal, step).unwrap();
            let b = trace_v_radon(&f, &x, &plane).unwrap();
            assert!((a - b).abs() <= 1e-5 * b.abs().max(1e-3), "V at {x:?}: {a} vs {b}");
        }
    }
}
