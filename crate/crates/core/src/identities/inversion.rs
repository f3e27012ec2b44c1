//! First inversion formulas: the field at `x` from `s`-derivatives of the
//! scaled trace at `s = x·θ/|x|²`, integrated over directions.

use super::isometry::trace_table;
use super::{reconstruction_report, AlignedRule, Grids, ReconstructionReport};
use crate::error::{Error, Result};
use crate::fd::central_difference;
use crate::fields::AnalyticField;
use crate::geometry::{dot, norm};
use crate::sum::KahanSum;
use crate::trace::{TraceKind, TraceQuantity, TraceTable};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Step of the central differences in `s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdSpec {
    pub step: f64,
}

impl FdSpec {
    pub fn new(step: f64) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::InvalidParameter(format!("finite-difference step {step} must be positive")));
        }
        Ok(FdSpec { step })
    }
}

/// `Σⱼ wⱼ ∂ₛᵏ Q(θⱼ, x·θⱼ/|x|²)` over a direction rule aligned with `x`,
/// with `Q` interpolated between the tabulated directions.
///
/// `Q` is smooth across `s = 0` (it is the Radon form of the trace), so the
/// central stencils never meet the singular factor `s^{−m}` of the raw trace.
fn direction_sum(table: &TraceTable, x: &[f64], rule: &AlignedRule, k: usize, fd: FdSpec) -> Result<f64> {
    let n = table.dim().n();
    if x.len() != n {
        return Err(Error::InvalidParameter("point and table dimensions differ".into()));
    }
    let r2 = dot(x, x);
    if r2 == 0.0 {
        return Err(Error::Domain("inversion formulas are not evaluated at the origin".into()));
    }
    let r = r2.sqrt();
    let axis: Vec<f64> = x.iter().map(|v| v / r).collect();
    let sphere = table.sphere();
    let mut acc = KahanSum::new();
    for (theta, w) in rule.nodes(&axis) {
        let s = dot(x, &theta[..n]) / r2;
        // the whole stencil lies beyond the support
        if s.abs() - 0.5 * k as f64 * fd.step > table.support_s() {
            continue;
        }
        let stencil = sphere.stencil(&theta[..n]);
        let q = |t: f64| -> Result<f64> {
            let mut v = 0.0;
            for &(j, c) in &stencil.entries {
                v += c * table.scaled(j, t)?;
            }
            Ok(v)
        };
        acc.add(w * central_difference(q, s, k, fd.step)?);
    }
    Ok(acc.value())
}

/// `f(x) = (1/((4π)ᵐ|x|^{2m})) ∫ ∂ₛᵐ(s^{−m}𝒰f(θ/(2s))) dθ` at `s = x·θ/|x|²`.
pub fn invert_u_first(table: &TraceTable, x: &[f64], rule: &AlignedRule, fd: FdSpec) -> Result<f64> {
    if table.quantity() != TraceQuantity::U {
        return Err(Error::InvalidParameter("first U inversion needs a U trace table".into()));
    }
    let m = table.dim().m();
    let sum = direction_sum(table, x, rule, m, fd)?;
    Ok(sum / ((4.0 * PI).powi(m as i32) * norm(x).powi(2 * m as i32)))
}

/// `g(x) = −(1/((4π)ᵐ|x|^{n+1})) ∫ ∂ₛ^{m+1}((s^{m−1}|s|)^{−1}𝒱g(θ/(2s))) dθ`.
///
/// Written in `Q_V = s^{−m}𝒱g(θ/(2s))`, the inner function is `Q_V` for
/// `s > 0` and, through the evenness of the solution in the cone direction,
/// the same smooth `Q_V` for `s < 0`.
pub fn invert_v_first(table: &TraceTable, x: &[f64], rule: &AlignedRule, fd: FdSpec) -> Result<f64> {
    if table.quantity() != TraceQuantity::V {
        return Err(Error::InvalidParameter("first V inversion needs a V trace table".into()));
    }
    let dim = table.dim();
    let m = dim.m();
    let sum = direction_sum(table, x, rule, m + 1, fd)?;
    Ok(-sum / ((4.0 * PI).powi(m as i32) * norm(x).powi(dim.n() as i32 + 1)))
}

/// Tabulates the trace of `field` and reconstructs it with the first
/// inversion formula on the evaluation grid. The weight is `|x|^{−2}` for
/// `U` and `|x|²` for `V`.
pub fn reconstruct_first(kind: TraceKind, field: &AnalyticField, grids: &Grids) -> Result<ReconstructionReport> {
    grids.validate()?;
    let fd = FdSpec::new(grids.fd_step)?;
    let (name, p) = match kind {
        TraceKind::U => ("invert_u_first", -2),
        TraceKind::V => ("invert_v_first", 2),
    };
    if super::support_annulus(field)?.is_none() {
        return reconstruction_report(name, field, grids, p, |_| Ok(0.0));
    }
    let table = trace_table(kind, field, grids)?;
    let rule = grids.aligned_rule(field.dim())?;
    reconstruction_report(name, field, grids, p, |x| match kind {
        TraceKind::U => invert_u_first(&table, x, &rule, fd),
        TraceKind::V => invert_v_first(&table, x, &rule, fd),
    })
}
