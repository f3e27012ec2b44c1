//! Adjoints of the trace operators in their weighted inner products and the
//! second inversion formulas `f = 2𝒰*𝒰f`, `g = 8𝒱*(|x|^{−m}∂ᵣ(|x|ᵐ𝒱g))`.

use super::isometry::trace_table;
use super::{reconstruction_report, support_annulus, weighted_pairing, Grids, IdentityReport, ReconstructionReport};
use crate::error::{Error, Result};
use crate::fd::binomial;
use crate::fields::{radial_power_scale, AnalyticField};
use crate::geometry::{complete_frame, gauss_legendre, norm, RadialRule, SphereQuadrature, MAX_DIM};
use crate::radon::{radon_s_derivative, PlaneRule};
use crate::sum::KahanSum;
use crate::trace::{trace_u_radon, trace_v_radial_derivative_radon, TraceKind, TraceQuantity, TraceTable};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

fn minus_two_pi_pow(m: usize) -> f64 {
    (-2.0 * PI).powi(m as i32)
}

fn unit(x: &[f64]) -> Result<(Vec<f64>, f64)> {
    let r = norm(x);
    if r == 0.0 {
        return Err(Error::Domain("adjoint operators are not evaluated at the origin".into()));
    }
    Ok((x.iter().map(|v| v / r).collect(), r))
}

/// `𝒰*φ(x) = (1/(2(−2π)ᵐ|x|^{m−1}))·∂ₛᵐℛφ_*(x/|x|, |x|/2)`, `φ_* = φ/|y|`.
pub fn adjoint_u(phi: &AnalyticField, x: &[f64], plane: &PlaneRule) -> Result<f64> {
    let m = phi.dim().m();
    let (theta, r) = unit(x)?;
    let d = radon_s_derivative(&radial_power_scale(phi, -1), &theta, r / 2.0, m, plane)?;
    Ok(d / (2.0 * minus_two_pi_pow(m) * r.powi(m as i32 - 1)))
}

/// `𝒱*φ(x) = (1/(4(−2π)ᵐ|x|^{m+1}))·∂ₛᵐℛφ^*(x/|x|, |x|/2)`, `φ^* = |y|φ`.
pub fn adjoint_v(phi: &AnalyticField, x: &[f64], plane: &PlaneRule) -> Result<f64> {
    let m = phi.dim().m();
    let (theta, r) = unit(x)?;
    let d = radon_s_derivative(&radial_power_scale(phi, 1), &theta, r / 2.0, m, plane)?;
    Ok(d / (4.0 * minus_two_pi_pow(m) * r.powi(m as i32 + 1)))
}

fn same_dim(a: &AnalyticField, b: &AnalyticField) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::InvalidParameter("fields of different dimensions".into()));
    }
    Ok(())
}

/// `⟨𝒰f, φ⟩ = ⟨f, 𝒰*φ⟩` in `L²(|x|^{−2})`. Each side is integrated over the
/// support of its cheap factor, with `𝒰f` from its Radon form.
pub fn adjoint_u_bilinear(f: &AnalyticField, phi: &AnalyticField, grids: &Grids) -> Result<IdentityReport> {
    same_dim(f, phi)?;
    let (Some((a, b)), Some((c, d))) = (support_annulus(f)?, support_annulus(phi)?) else {
        return Ok(IdentityReport::new("adjoint_u_bilinear", 0.0, 0.0, grids));
    };
    let dim = f.dim();
    let plane = grids.plane(dim)?;
    let sphere = grids.volume_sphere(dim)?;
    let lhs = weighted_pairing(dim, |x| trace_u_radon(f, x, &plane), |x| Ok(phi.eval(x)), -2, &sphere, &grids.radial(c, d)?)?;
    let rhs = weighted_pairing(dim, |x| adjoint_u(phi, x, &plane), |x| Ok(f.eval(x)), -2, &sphere, &grids.radial(a, b)?)?;
    Ok(IdentityReport::new("adjoint_u_bilinear", lhs, rhs, grids))
}

/// `⟨|x|^{−m}∂ᵣ(|x|ᵐ𝒱g), φ⟩ = ⟨g, 𝒱*φ⟩` in `L²(|x|²)`.
pub fn adjoint_v_bilinear(g: &AnalyticField, phi: &AnalyticField, grids: &Grids) -> Result<IdentityReport> {
    same_dim(g, phi)?;
    let (Some((a, b)), Some((c, d))) = (support_annulus(g)?, support_annulus(phi)?) else {
        return Ok(IdentityReport::new("adjoint_v_bilinear", 0.0, 0.0, grids));
    };
    let dim = g.dim();
    let m = dim.m() as i32;
    let plane = grids.plane(dim)?;
    let sphere = grids.volume_sphere(dim)?;
    let psi = |x: &[f64]| Ok(trace_v_radial_derivative_radon(g, x, &plane)? / norm(x).powi(m));
    let lhs = weighted_pairing(dim, psi, |x| Ok(phi.eval(x)), 2, &sphere, &grids.radial(c, d)?)?;
    let rhs = weighted_pairing(dim, |x| adjoint_v(phi, x, &plane), |x| Ok(g.eval(x)), 2, &sphere, &grids.radial(a, b)?)?;
    Ok(IdentityReport::new("adjoint_v_bilinear", lhs, rhs, grids))
}

/// Radial rule on `(0, 2d]` with a panel break at `2c`, where `∂ₛᵐℛ` of a
/// field supported in `[c, d]` stops being polynomial in `s`.
fn adjoint_radial(c: f64, d: f64, grids: &Grids) -> Result<RadialRule> {
    let inner = RadialRule::composite(0.0, 2.0 * c, grids.volume_radial, grids.volume_panels)?;
    let outer = RadialRule::composite(2.0 * c, 2.0 * d, grids.volume_radial, grids.volume_panels)?;
    let mut nodes = inner.nodes;
    nodes.extend(outer.nodes);
    let mut weights = inner.weights;
    weights.extend(outer.weights);
    Ok(RadialRule { lo: 0.0, hi: 2.0 * d, nodes, weights, order: grids.volume_radial })
}

fn adjoint_isometry(
    name: &str,
    phi: &AnalyticField,
    grids: &Grids,
    p: i32,
    factor: f64,
    adjoint: fn(&AnalyticField, &[f64], &PlaneRule) -> Result<f64>,
) -> Result<IdentityReport> {
    let Some((c, d)) = support_annulus(phi)? else {
        return Ok(IdentityReport::new(name, 0.0, 0.0, grids));
    };
    let dim = phi.dim();
    let plane = grids.plane(dim)?;
    let sphere = grids.volume_sphere(dim)?;
    let lhs = weighted_pairing(dim, |x| Ok(phi.eval(x)), |x| Ok(phi.eval(x)), p, &sphere, &grids.radial(c, d)?)?;
    let adj = |x: &[f64]| adjoint(phi, x, &plane);
    let rhs = factor * weighted_pairing(dim, adj, adj, p, &sphere, &adjoint_radial(c, d, grids)?)?;
    Ok(IdentityReport::new(name, lhs, rhs, grids))
}

/// `∫|φ|²/|x|² = 2∫|𝒰*φ|²/|x|²`.
pub fn adjoint_u_isometry(phi: &AnalyticField, grids: &Grids) -> Result<IdentityReport> {
    adjoint_isometry("adjoint_u_isometry", phi, grids, -2, 2.0, adjoint_u)
}

/// `∫|x|²|φ|² = 8∫|x|²|𝒱*φ|²`.
pub fn adjoint_v_isometry(phi: &AnalyticField, grids: &Grids) -> Result<IdentityReport> {
    adjoint_isometry("adjoint_v_isometry", phi, grids, 2, 8.0, adjoint_v)
}

/// Plane quadrature for adjoints of tabulated traces.
///
/// The plane `y·θ = s` is parametrised as `y = sθ + ρσ` with
/// `ρ = L·u/(1 − u)`, Gauss–Legendre in `u ∈ (0, 1)`, and a product rule for
/// `σ ∈ S^{n−2}`. The `m`-th derivative in `s` is a central difference of
/// step `step` taken under the integral at fixed `(ρ, σ)` nodes, so the
/// slowly decaying far field of the trace cancels before integration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SecondInversionRule {
    pub radial: usize,
    pub angular_level: usize,
    pub scale: f64,
    pub step: f64,
}

impl SecondInversionRule {
    pub fn validate(&self) -> Result<()> {
        if self.radial == 0 || self.angular_level == 0 {
            return Err(Error::InvalidParameter("second inversion rule needs positive node counts".into()));
        }
        if !(self.scale > 0.0) || !(self.step > 0.0) {
            return Err(Error::InvalidParameter("second inversion scale and step must be positive".into()));
        }
        Ok(())
    }
}

/// `φ` given by a trace table, `φ(y) = s_y^p·Q(ŷ, s_y)` with `s_y = 1/(2|y|)`.
fn tabulated(table: &TraceTable, y: &[f64], radial_power: i32) -> Result<f64> {
    let r = norm(y);
    let s = 0.5 / r;
    if s > table.support_s() {
        return Ok(0.0);
    }
    let mut theta = [0.0; MAX_DIM];
    for (t, v) in theta.iter_mut().zip(y) {
        *t = v / r;
    }
    let q = table.scaled_interpolated(&theta[..y.len()], s)?;
    Ok(r.powi(radial_power) * s.powi(table.quantity().power(table.dim())) * q)
}

struct PlaneNodes {
    rho: Vec<f64>,
    weights: Vec<f64>,
    cross: SphereQuadrature,
}

impl PlaneNodes {
    fn new(n: usize, rule: &SecondInversionRule) -> Result<Self> {
        rule.validate()?;
        let (u, w) = gauss_legendre(rule.radial);
        let mut rho = Vec::with_capacity(u.len());
        let mut weights = Vec::with_capacity(u.len());
        for (&ui, &wi) in u.iter().zip(&w) {
            let t = 0.5 * (ui + 1.0);
            let r = rule.scale * t / (1.0 - t);
            let jac = 0.5 * rule.scale / ((1.0 - t) * (1.0 - t));
            rho.push(r);
            weights.push(wi * jac * r.powi(n as i32 - 2));
        }
        Ok(PlaneNodes { rho, weights, cross: SphereQuadrature::product(n - 1, rule.angular_level)? })
    }
}

/// `∂ₛᵐ ∫_{y·θ=s} |y|^k φ(y) dy` at `s = |x|/2`, `θ = x/|x|`, for `φ` from a table.
fn tabulated_radon_derivative(
    table: &TraceTable,
    x: &[f64],
    radial_power: i32,
    rule: &SecondInversionRule,
    nodes: &PlaneNodes,
) -> Result<f64> {
    let n = table.dim().n();
    let m = table.dim().m();
    let (theta, r) = unit(x)?;
    let s0 = r / 2.0;
    let frame = complete_frame(&theta);
    let h = rule.step;
    let coeffs: Vec<(f64, f64)> = (0..=m)
        .map(|i| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            (sign * binomial(m, i), s0 + (m as f64 / 2.0 - i as f64) * h)
        })
        .collect();
    let mut acc = KahanSum::new();
    let mut y = [0.0; MAX_DIM];
    for q in 0..nodes.cross.len() {
        let sigma = nodes.cross.node(q);
        let mut dir = [0.0; MAX_DIM];
        for (e, sv) in frame.iter().zip(sigma) {
            for i in 0..n {
                dir[i] += sv * e[i];
            }
        }
        let mut ring = KahanSum::new();
        for (&rho, &w) in nodes.rho.iter().zip(&nodes.weights) {
            let mut diff = 0.0;
            for &(c, s) in &coeffs {
                for i in 0..n {
                    y[i] = s * theta[i] + rho * dir[i];
                }
                diff += c * tabulated(table, &y[..n], radial_power)?;
            }
            ring.add(w * diff);
        }
        acc.add(nodes.cross.weight(q) * ring.value());
    }
    Ok(acc.value() / h.powi(m as i32))
}

/// `𝒰*φ(x)` for `φ = 𝒰f` given by its table.
pub fn adjoint_u_tabulated(table: &TraceTable, x: &[f64], rule: &SecondInversionRule) -> Result<f64> {
    if table.quantity() != TraceQuantity::U {
        return Err(Error::InvalidParameter("the U adjoint is applied to a U trace table".into()));
    }
    let nodes = PlaneNodes::new(table.dim().n(), rule)?;
    adjoint_u_tabulated_with(table, x, rule, &nodes)
}

fn adjoint_u_tabulated_with(table: &TraceTable, x: &[f64], rule: &SecondInversionRule, nodes: &PlaneNodes) -> Result<f64> {
    let m = table.dim().m();
    let d = tabulated_radon_derivative(table, x, -1, rule, nodes)?;
    Ok(d / (2.0 * minus_two_pi_pow(m) * norm(x).powi(m as i32 - 1)))
}

/// `𝒱*ψ(x)` for `ψ = |x|^{−m}∂ᵣ(|x|ᵐ𝒱g)` given by its table.
pub fn adjoint_v_tabulated(table: &TraceTable, x: &[f64], rule: &SecondInversionRule) -> Result<f64> {
    if table.quantity() != TraceQuantity::VRadial {
        return Err(Error::InvalidParameter("the V adjoint is applied to a radial-derivative table".into()));
    }
    let nodes = PlaneNodes::new(table.dim().n(), rule)?;
    adjoint_v_tabulated_with(table, x, rule, &nodes)
}

fn adjoint_v_tabulated_with(table: &TraceTable, x: &[f64], rule: &SecondInversionRule, nodes: &PlaneNodes) -> Result<f64> {
    let m = table.dim().m();
    let d = tabulated_radon_derivative(table, x, 1, rule, nodes)?;
    Ok(d / (4.0 * minus_two_pi_pow(m) * norm(x).powi(m as i32 + 1)))
}

/// `f = 2𝒰*(𝒰f)` with `𝒰f` tabulated, on the evaluation grid.
pub fn invert_u_second(f: &AnalyticField, grids: &Grids, rule: &SecondInversionRule) -> Result<ReconstructionReport> {
    grids.validate()?;
    if support_annulus(f)?.is_none() {
        return reconstruction_report("invert_u_second", f, grids, -2, |_| Ok(0.0));
    }
    let table = trace_table(TraceKind::U, f, grids)?;
    let nodes = PlaneNodes::new(f.dim().n(), rule)?;
    reconstruction_report("invert_u_second", f, grids, -2, |x| {
        Ok(2.0 * adjoint_u_tabulated_with(&table, x, rule, &nodes)?)
    })
}

/// `g = 8𝒱*(|x|^{−m}∂ᵣ(|x|ᵐ𝒱g))` with the radial derivative tabulated by
/// central differences of the `V` table.
pub fn invert_v_second(g: &AnalyticField, grids: &Grids, rule: &SecondInversionRule) -> Result<ReconstructionReport> {
    grids.validate()?;
    if support_annulus(g)?.is_none() {
        return reconstruction_report("invert_v_second", g, grids, 2, |_| Ok(0.0));
    }
    let table = trace_table(TraceKind::V, g, grids)?.radial_derivative_table(grids.fd_step)?;
    let nodes = PlaneNodes::new(g.dim().n(), rule)?;
    reconstruction_report("invert_v_second", g, grids, 2, |x| {
        Ok(8.0 * adjoint_v_tabulated_with(&table, x, rule, &nodes)?)
    })
}
