//! Weighted `L²` isometries of the trace operators.
//!
//! Right-hand sides are integrated in the offset `s = 1/(2r)`, where
//! `𝒰f(θ/(2s)) = sᵐ Q_U(θ, s)`. With `dx = r^{n−1} dr dθ` and
//! `dr = ds/(2s²)` the weights collapse: `2∫|𝒰f|²/|x|² dx = 2^{2−n}∫_ℝ∫ Q_U²`
//! (both half-lines contribute equally by parity).

use super::{support_annulus, Grids, IdentityReport};
use crate::error::Result;
use crate::fields::AnalyticField;
use crate::geometry::annulus_volume_integral;
use crate::radon::{build_radon_table, table_l2};
use crate::trace::{tabulate_trace_with, v_pullback, TraceField, TraceKind, TraceQuantity, TraceRoute, TraceTable};
use std::f64::consts::PI;
use std::sync::Arc;

/// Tabulates `Q = s^{−m}·trace(θ/(2s))` of `field` with the route and grids
/// of `grids`.
pub fn trace_table(kind: TraceKind, field: &AnalyticField, grids: &Grids) -> Result<TraceTable> {
    trace_table_with(kind, field, grids, 3)
}

/// [`trace_table`] storing at most `derivatives` tabulated `s`-derivatives.
pub fn trace_table_with(
    kind: TraceKind,
    field: &AnalyticField,
    grids: &Grids,
    derivatives: usize,
) -> Result<TraceTable> {
    let dim = field.dim();
    let trace = TraceField::new(
        kind,
        grids.trace_route,
        field.clone(),
        grids.plane(dim)?,
        Arc::new(grids.mean_rule(dim)?),
        grids.means_step(field),
    );
    tabulate_trace_with(&trace, &grids.sphere(dim)?, grids.trace_grid(field)?, derivatives)
}

fn trace_l2(table: &TraceTable) -> f64 {
    table_l2(table.sphere(), table.s_grid(), |j, k| table.value(j, k))
}

/// `∫|f|²/|x|² dx = 2∫|𝒰f|²/|x|² dx`.
pub fn isometry_u(f: &AnalyticField, grids: &Grids) -> Result<IdentityReport> {
    grids.validate()?;
    let Some((a, b)) = support_annulus(f)? else {
        return Ok(IdentityReport::new("isometry_u", 0.0, 0.0, grids));
    };
    let dim = f.dim();
    let lhs = annulus_volume_integral(f, -2, &grids.volume_sphere(dim)?, &grids.radial(a, b)?)?;
    let table = trace_table_with(TraceKind::U, f, grids, 0)?;
    let rhs = 2f64.powi(2 - dim.n() as i32) * trace_l2(&table);
    Ok(IdentityReport::new("isometry_u", lhs, rhs, grids))
}

/// `∫|x|²|g|² dx = 8∫|x|^{3−n}|∂ᵣ(|x|ᵐ𝒱g)|² dx`.
///
/// The right side is computed from the table of `Ψ = −2∂ₛQ_V` (central
/// differences of the tabulated `Q_V`), as `(4^{−m}/2)∫_ℝ∫Ψ²`. The value
/// `½(2π)^{−2m}∫_ℝ∫|∂ₛᵐℛG|²` from the Radon transform of the pullback `G`
/// is reported as `rhs_radon`.
pub fn isometry_v(g: &AnalyticField, grids: &Grids) -> Result<IdentityReport> {
    grids.validate()?;
    let Some((a, b)) = support_annulus(g)? else {
        return Ok(IdentityReport::new("isometry_v", 0.0, 0.0, grids).with("rhs_radon", 0.0));
    };
    let dim = g.dim();
    let m = dim.m();
    let lhs = annulus_volume_integral(g, 2, &grids.volume_sphere(dim)?, &grids.radial(a, b)?)?;
    let sphere = grids.sphere(dim)?;
    let s_grid = grids.trace_grid(g)?;
    let radon = build_radon_table(&v_pullback(g), &sphere, s_grid, m, &grids.plane(dim)?)?;
    let q_v = match grids.trace_route {
        TraceRoute::Radon => {
            let sign = if (m - 1) % 2 == 0 { 1.0 } else { -1.0 };
            let c = sign / (2.0 * PI.powi(m as i32));
            let ns = s_grid.count;
            let mut values = vec![0.0; sphere.len() * ns];
            for j in 0..sphere.len() {
                for k in 0..ns {
                    values[j * ns + k] = c * radon.value(j, k, m - 1);
                }
            }
            TraceTable::from_parts(TraceQuantity::V, dim, sphere.clone(), s_grid, 1.0 / a, values, g.digest())?
        }
        TraceRoute::Means => trace_table(TraceKind::V, g, grids)?,
    };
    let psi = q_v.radial_derivative_table(grids.fd_step)?;
    let rhs = 0.5 * 4f64.powi(-(m as i32)) * trace_l2(&psi);
    let rhs_radon = 0.5 * (2.0 * PI).powi(-2 * m as i32) * table_l2(&sphere, s_grid, |j, k| radon.value(j, k, m));
    Ok(IdentityReport::new("isometry_v", lhs, rhs, grids)
        .with("rhs_radon", rhs_radon)
        .with("route_rel_diff", super::relative_error(rhs, rhs_radon)))
}
