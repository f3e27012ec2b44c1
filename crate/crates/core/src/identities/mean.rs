//! Isometry and inversion for the means over spheres through the origin,
//! `y ↦ ℳh(y, |y|)`.
//!
//! Along a ray `y = ρθ` put `K(θ, s) = ρ^{n−1}ℳh(y, |y|)` with `s = 1/(2ρ)`,
//! so that `ρ²∂_ρ = −½∂ₛ`. Evaluating the same expression at `s < 0`, that
//! is at `y = −θ/(2|s|)`, continues `K` smoothly through `s = 0`: it equals
//! `ℛH(θ, s)/ω_{n−1}` with `H(X) = |X|^{2−2n} h(X/|X|²)`.

use super::inversion::{invert_v_first, FdSpec};
use super::isometry::trace_table;
use super::{
    evaluation_grid, random_points, reconstruction_report, support_annulus, AlignedRule, EvalSet, Grids, IdentityReport,
    ReconstructionReport,
};
use crate::error::{Error, Result};
use crate::fd::central_difference;
use crate::fields::{inversion_pullback, AnalyticField};
use crate::geometry::{annulus_volume_integral, norm, sphere_area, MAX_DIM};
use crate::radon::{build_radon_table, table_l2};
use crate::sphmean::SphereAverager;
use crate::sum::{compensated_sum, KahanSum};
use crate::trace::{TraceKind, TraceQuantity, TraceTable};
use rayon::prelude::*;
use std::f64::consts::PI;

/// `K(θ, s) = (1/(2|s|))^{n−1}·mean(θ/(2s))`.
fn ray_function(mean: &dyn Fn(&[f64]) -> Result<f64>, theta: &[f64], s: f64) -> Result<f64> {
    let n = theta.len();
    let mut y = [0.0; MAX_DIM];
    for i in 0..n {
        y[i] = theta[i] / (2.0 * s);
    }
    Ok((0.5 / s.abs()).powi(n as i32 - 1) * mean(&y[..n])?)
}

/// `(ρ²∂_ρ)^k K = (−½)^k ∂ₛ^k K` by a central difference in `s`.
fn ray_derivative(mean: &dyn Fn(&[f64]) -> Result<f64>, theta: &[f64], s: f64, k: usize, fd: FdSpec) -> Result<f64> {
    let d = central_difference(|t| ray_function(mean, theta, t), s, k, fd.step)?;
    Ok((-0.5f64).powi(k as i32) * d)
}

/// `∫|x|^{2n−4}|h|² dx = (2π/Γ(n/2)²)∫|(ρ²∂_ρ)ᵐ(ρ^{n−1}ℳh(y, |y|))|²|y|^{−n−1} dy`.
///
/// `rhs` is the literal form: spherical means from the zonal rule of `grids`,
/// central differences in `s`, and `|y|^{−n−1}dy = 2 ds dθ` with
/// Gauss–Legendre nodes on `s ∈ (0, 1/a]`. `rhs_radon` replaces the means by
/// the Radon transform of `H` and integrates over the whole line.
pub fn mean_isometry(h: &AnalyticField, grids: &Grids) -> Result<IdentityReport> {
    grids.validate()?;
    let Some((a, b)) = support_annulus(h)? else {
        return Ok(IdentityReport::new("mean_isometry", 0.0, 0.0, grids).with("rhs_radon", 0.0));
    };
    let dim = h.dim();
    let n = dim.n();
    let m = dim.m();
    let gamma = dim.gamma_half_n();
    let c = 2.0 * PI / (gamma * gamma);
    let lhs = annulus_volume_integral(h, 2 * n as i32 - 4, &grids.volume_sphere(dim)?, &grids.radial(a, b)?)?;

    let sphere = grids.sphere(dim)?;
    let rule = grids.mean_rule(dim)?;
    let fd = FdSpec::new(grids.fd_step)?;
    let mean = |y: &[f64]| Ok(rule.mean(h, y, norm(y)));
    let s_rule = grids.radial(0.0, 1.0 / a)?;
    let per_dir: Vec<f64> = (0..sphere.len())
        .into_par_iter()
        .map(|j| -> Result<f64> {
            let theta = sphere.node(j);
            let mut acc = KahanSum::new();
            for (&s, &w) in s_rule.nodes.iter().zip(&s_rule.weights) {
                let d = ray_derivative(&mean, theta, s, m, fd)?;
                acc.add(w * d * d);
            }
            Ok(sphere.weight(j) * acc.value())
        })
        .collect::<Result<_>>()?;
    let rhs = c * 2.0 * compensated_sum(per_dir);

    let pullback = inversion_pullback(h, 2 - 2 * n as i32);
    let s_grid = grids.trace_grid(h)?;
    let table = build_radon_table(&pullback, &sphere, s_grid, m, &grids.plane(dim)?)?;
    let scale = 0.5f64.powi(m as i32) / dim.omega();
    let rhs_radon = c * scale * scale * table_l2(&sphere, s_grid, |j, k| table.value(j, k, m));
    Ok(IdentityReport::new("mean_isometry", lhs, rhs, grids)
        .with("rhs_radon", rhs_radon)
        .with("route_rel_diff", super::relative_error(rhs_radon, rhs)))
}

/// `h(x) = ((−1)ᵐω_{n−1}/(2π^{n−1}))|x|^{3−2n} ∫_{2y·x=|x|²} |y|^{−n}(ρ²∂_ρ)^{n−1}(ρ^{n−1}ℳh(y, |y|)) dS_y`
/// from `mean(y) = ℳh(y, |y|)`.
///
/// The hyperplane `2y·x = |x|²` is swept by the rays `y = ρθ`, `x·θ > 0`,
/// `ρ = |x|²/(2x·θ)`, which turns the integral into
/// `((−1)ᵐω_{n−1}/π^{n−1})|x|^{2−2n} ∫_{x·θ>0} (ρ²∂_ρ)^{n−1}(ρ^{n−1}ℳh) dθ`;
/// `θ` runs over the half of a rule aligned with `x`.
pub fn invert_mean(mean: &dyn Fn(&[f64]) -> Result<f64>, x: &[f64], rule: &AlignedRule, fd: FdSpec) -> Result<f64> {
    let n = x.len();
    let r = norm(x);
    if r == 0.0 {
        return Err(Error::Domain("mean inversion is not evaluated at the origin".into()));
    }
    let m = (n - 1) / 2;
    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
    let prefactor = sign * sphere_area(n) / PI.powi(n as i32 - 1) * r.powi(2 - 2 * n as i32);
    let axis: Vec<f64> = x.iter().map(|v| v / r).collect();
    let mut acc = KahanSum::new();
    for (theta, weight) in rule.nodes(&axis) {
        let t: f64 = theta[..n].iter().zip(&axis).map(|(a, b)| a * b).sum();
        if t <= 0.0 {
            continue;
        }
        acc.add(weight * ray_derivative(mean, &theta[..n], t / r, n - 1, fd)?);
    }
    Ok(prefactor * acc.value())
}

/// `ℳg(y, |y|) = 𝒱g(y)/|y|`, valid for `n = 3`, from a `V` table with
/// angular interpolation.
pub fn mean_trace_from_v(table: &TraceTable) -> Result<impl Fn(&[f64]) -> Result<f64> + Sync + '_> {
    if table.quantity() != TraceQuantity::V || table.dim().n() != 3 {
        return Err(Error::InvalidParameter("means from V traces need a three-dimensional V table".into()));
    }
    Ok(move |y: &[f64]| Ok(table.eval_interpolated(y)? / norm(y)))
}

/// Reconstructs `h` from its means through the origin (zonal rule of
/// `grids`) on the evaluation grid, weight `|x|^{2n−4}`.
pub fn reconstruct_mean(h: &AnalyticField, grids: &Grids) -> Result<ReconstructionReport> {
    grids.validate()?;
    let dim = h.dim();
    let p = 2 * dim.n() as i32 - 4;
    if support_annulus(h)?.is_none() {
        return reconstruction_report("invert_mean", h, grids, p, |_| Ok(0.0));
    }
    let rule = grids.mean_rule(dim)?;
    let aligned = grids.aligned_rule(dim)?;
    let fd = FdSpec::new(grids.fd_step)?;
    let mean = |y: &[f64]| Ok(rule.mean(h, y, norm(y)));
    reconstruction_report("invert_mean", h, grids, p, |x| invert_mean(&mean, x, &aligned, fd))
}


/// For `n = 3`, inverts the means `𝒱g(y)/|y|` read off a `V` table and
/// compares with the first `𝒱` inversion from the same table.
///
/// `lhs` and `rhs` are the `|x|²`-weighted L² norms of the two
/// reconstructions over the evaluation points and `rel_err` is the relative
/// L² norm of their difference.
pub fn mean_v_crosscheck(g: &AnalyticField, grids: &Grids) -> Result<IdentityReport> {
    grids.validate()?;
    if g.dim().n() != 3 {
        return Err(Error::InvalidDimension(g.dim().n()));
    }
    let Some(support) = support_annulus(g)? else {
        return Ok(IdentityReport::new("mean_v_crosscheck", 0.0, 0.0, grids));
    };
    let dim = g.dim();
    let table = trace_table(TraceKind::V, g, grids)?;
    let rule = grids.aligned_rule(dim)?;
    let fd = FdSpec::new(grids.fd_step)?;
    let means = mean_trace_from_v(&table)?;
    let pts = match grids.eval_set {
        EvalSet::Grid => evaluation_grid(dim, support, grids.eval_level, grids.eval_radii, 2)?,
        EvalSet::Random { count, seed } => random_points(dim, support, count, seed, 2),
    };
    let pairs: Vec<(f64, f64, f64)> = pts
        .par_iter()
        .map(|(x, w)| -> Result<(f64, f64, f64)> {
            Ok((*w, invert_mean(&means, x, &rule, fd)?, invert_v_first(&table, x, &rule, fd)?))
        })
        .collect::<Result<_>>()?;
    let sum = |f: &dyn Fn(&(f64, f64, f64)) -> f64| compensated_sum(pairs.iter().map(f).collect::<Vec<f64>>());
    let lhs = sum(&|(w, a, _)| w * a * a).sqrt();
    let rhs = sum(&|(w, _, b)| w * b * b).sqrt();
    let diff = sum(&|(w, a, b)| w * (a - b) * (a - b)).sqrt();
    let mut report = IdentityReport::new("mean_v_crosscheck", lhs, rhs, grids);
    report.rel_err = if rhs > 0.0 { diff / rhs } else { diff };
    Ok(report)
}
