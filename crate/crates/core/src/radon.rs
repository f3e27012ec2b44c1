//! The Radon transform `ℛh(θ, s) = ∫_{x·θ=s} h dS`, its `s`-derivatives and
//! tables of both on a (direction, offset) grid.

use crate::error::{Error, Result};
use crate::fields::{AnalyticField, RadialCache, Support};
use crate::geometry::{
    annulus_volume_integral, complete_frame, dot, norm, OddDimension, RadialRule, SphereQuadrature, MAX_DIM,
};
use crate::jet::JET_CAPACITY;
use crate::spline::{Interpolant, UniformQuinticHermite, UniformSpline};
use crate::sum::{compensated_sum, KahanSum};
use rayon::prelude::*;
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Quadrature on hyperplanes: Gauss–Legendre in `ln r`, `r = |x|` the distance
/// from the origin (clipped to the support annulus) times a product rule on the
/// unit sphere of the hyperplane.
#[derive(Clone, Debug)]
pub struct PlaneRule {
    radial_order: usize,
    radial_panels: usize,
    unit_nodes: Vec<f64>,
    unit_weights: Vec<f64>,
    cross: SphereQuadrature,
}

impl PlaneRule {
    /// `radial_order` points in `r` and the level-`angular_level` product rule
    /// on `S^{n−2}` (for `n = 3`, `2·angular_level` equispaced angles).
    pub fn new(dim: OddDimension, radial_order: usize, angular_level: usize) -> Result<Self> {
        Self::composite(dim, radial_order, 1, angular_level)
    }

    pub fn composite(dim: OddDimension, radial_order: usize, radial_panels: usize, angular_level: usize) -> Result<Self> {
        let unit = RadialRule::composite(0.0, 1.0, radial_order, radial_panels)?;
        Ok(PlaneRule {
            radial_order,
            radial_panels,
            unit_nodes: unit.nodes,
            unit_weights: unit.weights,
            cross: SphereQuadrature::product(dim.n() - 1, angular_level)?,
        })
    }

    pub fn radial_order(&self) -> usize {
        self.radial_order
    }

    pub fn radial_panels(&self) -> usize {
        self.radial_panels
    }

    pub fn angular_level(&self) -> usize {
        self.cross.level()
    }

    pub fn angular_len(&self) -> usize {
        self.cross.len()
    }
}

pub(crate) fn check_unit(theta: &[f64]) -> Result<()> {
    let l = norm(theta);
    if (l - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!("direction has norm {l}, expected 1")));
    }
    Ok(())
}

/// Precomputed embedding of the hyperplane sphere rule for one direction.
pub(crate) struct PlaneFrame {
    n: usize,
    theta: [f64; MAX_DIM],
    ring: Vec<[f64; MAX_DIM]>,
    ring_weights: Vec<f64>,
}

impl PlaneFrame {
    pub(crate) fn new(theta: &[f64], rule: &PlaneRule) -> Self {
        let n = theta.len();
        let frame = complete_frame(theta);
        let ring = (0..rule.cross.len())
            .map(|q| {
                let sigma = rule.cross.node(q);
                let mut v = [0.0; MAX_DIM];
                for (e, s) in frame.iter().zip(sigma) {
                    for i in 0..n {
                        v[i] += s * e[i];
                    }
                }
                v
            })
            .collect();
        let mut th = [0.0; MAX_DIM];
        th[..n].copy_from_slice(theta);
        PlaneFrame { n, theta: th, ring, ring_weights: rule.cross.weights().to_vec() }
    }
}

/// `[∂ₛ^k ℛh(θ, s)]` for `k < len`.
pub(crate) fn radon_jet_in_frame(
    h: &AnalyticField,
    pf: &PlaneFrame,
    s: f64,
    len: usize,
    rule: &PlaneRule,
) -> Result<[f64; JET_CAPACITY]> {
    let mut out = [0.0; JET_CAPACITY];
    let (a, b) = match h.support() {
        Support::Empty => return Ok(out),
        Support::Everywhere => {
            return Err(Error::Coverage("Radon transform of a field with unbounded support".into()))
        }
        Support::Annulus { inner, outer } => (inner, outer),
    };
    if s.abs() >= b {
        return Ok(out);
    }
    let n = pf.n;
    let lo = a.max(s.abs());
    // logarithmic radius: pullbacks by the inversion map are as smooth in
    // ln r as the original field, while they are compressed toward the inner
    // edge in r itself
    let log_width = (b / lo).ln();
    let half_power = (n as i32 - 3) / 2;
    let mut acc = [KahanSum::new(); JET_CAPACITY];
    let mut x = [0.0; MAX_DIM];
    let mut cache = RadialCache::new();
    for (&u, &w) in rule.unit_nodes.iter().zip(&rule.unit_weights) {
        cache.clear();
        let r = lo * (log_width * u).exp();
        // ρ^{n−2} dρ = (r² − s²)^{(n−3)/2} r dr
        let rho2 = (r - s) * (r + s);
        let rho = rho2.max(0.0).sqrt();
        let wr = w * log_width * r * r * rho2.powi(half_power);
        let mut ring = [KahanSum::new(); JET_CAPACITY];
        for (v, &wq) in pf.ring.iter().zip(&pf.ring_weights) {
            for i in 0..n {
                x[i] = s * pf.theta[i] + rho * v[i];
            }
            let jet = h.ring_line_jet(&x[..n], &pf.theta[..n], len, &mut cache);
            for (k, c) in jet.coeffs().iter().enumerate() {
                ring[k].add(wq * c);
            }
        }
        for k in 0..len {
            acc[k].add(wr * ring[k].value());
        }
    }
    let mut fact = 1.0;
    for k in 0..len {
        if k > 1 {
            fact *= k as f64;
        }
        out[k] = fact * acc[k].value();
    }
    Ok(out)
}

/// `∂ₛ^k ℛh(θ, s)` for `k = 0..=max_order`, using
/// `∂ₛ ℛh(θ, s) = ℛ((θ·∇)h)(θ, s)`.
pub fn radon_derivatives(
    h: &AnalyticField,
    theta: &[f64],
    s: f64,
    max_order: usize,
    rule: &PlaneRule,
) -> Result<Vec<f64>> {
    check_unit(theta)?;
    if theta.len() != h.dim().n() {
        return Err(Error::InvalidParameter("direction and field dimensions differ".into()));
    }
    if max_order > h.max_order() {
        return Err(Error::DerivativeOrder { requested: max_order, max: h.max_order() });
    }
    let pf = PlaneFrame::new(theta, rule);
    Ok(radon_jet_in_frame(h, &pf, s, max_order + 1, rule)?[..=max_order].to_vec())
}

/// `ℛh(θ, s)`; zero when `|s|` exceeds the outer support radius.
pub fn radon_point(h: &AnalyticField, theta: &[f64], s: f64, rule: &PlaneRule) -> Result<f64> {
    Ok(radon_derivatives(h, theta, s, 0, rule)?[0])
}

/// `∂ₛ^k ℛh(θ, s)`.
pub fn radon_s_derivative(h: &AnalyticField, theta: &[f64], s: f64, k: usize, rule: &PlaneRule) -> Result<f64> {
    Ok(radon_derivatives(h, theta, s, k, rule)?[k])
}

/// A uniform grid in the offset `s`, symmetric about zero when `lo = −hi`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SGrid {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl SGrid {
    pub fn new(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if count < 2 || !(hi > lo) {
            return Err(Error::InvalidParameter(format!("s-grid [{lo}, {hi}] with {count} points")));
        }
        Ok(SGrid { lo, hi, count })
    }

    /// `2·(4·level) + 1` points on `[−1.05·b, 1.05·b]`.
    pub fn default_for(level: usize, outer: f64) -> Self {
        SGrid { lo: -1.05 * outer, hi: 1.05 * outer, count: 8 * level + 1 }
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.count - 1) as f64
    }

    /// `k`-th node; a grid with `lo = −hi` satisfies `s(count−1−k) = −s(k)` exactly.
    pub fn node(&self, k: usize) -> f64 {
        let last = (self.count - 1) as f64;
        if self.lo == -self.hi {
            self.hi * ((2 * k) as f64 - last) / last
        } else {
            self.lo + (self.hi - self.lo) * k as f64 / last
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.count).map(|k| self.node(k)).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        self.lo == -self.hi
    }
}

/// Samples of `∂ₛ^order ℛh(θⱼ, s_k)` for `order = 0..=max_order`.
#[derive(Debug)]
pub struct RadonTable {
    dim: OddDimension,
    sphere: SphereQuadrature,
    s_grid: SGrid,
    max_order: usize,
    values: Vec<f64>,
    field_digest: String,
    support: Option<f64>,
    splines: Vec<OnceLock<Vec<Interpolant>>>,
}

impl RadonTable {
    pub fn from_parts(
        dim: OddDimension,
        sphere: SphereQuadrature,
        s_grid: SGrid,
        max_order: usize,
        values: Vec<f64>,
        field_digest: String,
    ) -> Result<Self> {
        if values.len() != sphere.len() * s_grid.count * (max_order + 1) {
            return Err(Error::InvalidParameter("table value count does not match its grids".into()));
        }
        if sphere.ambient_dim() != dim.n() {
            return Err(Error::InvalidParameter("table sphere and dimension differ".into()));
        }
        let splines = (0..=max_order).map(|_| OnceLock::new()).collect();
        Ok(RadonTable { dim, sphere, s_grid, max_order, values, field_digest, support: None, splines })
    }

    /// Records that the field vanishes for `|x| > outer`, so that the table
    /// may be read as zero for `|s| > outer` beyond its grid.
    pub fn with_support(mut self, outer: f64) -> Result<Self> {
        if !(outer >= 0.0) || self.s_grid.lo > -outer || self.s_grid.hi < outer {
            return Err(Error::InvalidParameter(format!("support radius {outer} is not covered by the s-grid")));
        }
        self.support = Some(outer);
        Ok(self)
    }

    pub fn support(&self) -> Option<f64> {
        self.support
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

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn field_digest(&self) -> &str {
        &self.field_digest
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn value(&self, j: usize, k: usize, order: usize) -> f64 {
        self.values[(j * self.s_grid.count + k) * (self.max_order + 1) + order]
    }

    fn splines_for(&self, order: usize) -> &[Interpolant] {
        let (lo, step) = (self.s_grid.lo, self.s_grid.step());
        self.splines[order].get_or_init(|| {
            (0..self.sphere.len())
                .map(|j| {
                    let ks = 0..self.s_grid.count;
                    if order + 2 <= self.max_order {
                        let data = ks.map(|k| [0, 1, 2].map(|d| self.value(j, k, order + d))).collect();
                        Interpolant::Quintic(UniformQuinticHermite::new(lo, step, data).expect("grid validated"))
                    } else {
                        let col = ks.map(|k| self.value(j, k, order)).collect();
                        Interpolant::Cubic(UniformSpline::new(lo, step, col).expect("grid validated"))
                    }
                })
                .collect()
        })
    }

    /// Interpolation of `∂ₛ^order ℛh(θⱼ, ·)` at `s`: quintic Hermite when the
    /// table holds two further derivatives, a cubic spline otherwise.
    pub fn interpolate(&self, j: usize, order: usize, s: f64) -> Result<f64> {
        if order > self.max_order {
            return Err(Error::DerivativeOrder { requested: order, max: self.max_order });
        }
        if self.support.is_some_and(|b| s.abs() > b) && (s < self.s_grid.lo || s > self.s_grid.hi) {
            return Ok(0.0);
        }
        self.splines_for(order)[j].eval(s).ok_or_else(|| {
            Error::Coverage(format!(
                "offset s = {s} outside the tabulated range [{}, {}]",
                self.s_grid.lo, self.s_grid.hi
            ))
        })
    }
}

/// Tabulates `∂ₛ^order ℛh` on `sphere × s_grid`; cells run in parallel.
pub fn build_radon_table(
    h: &AnalyticField,
    sphere: &SphereQuadrature,
    s_grid: SGrid,
    max_order: usize,
    rule: &PlaneRule,
) -> Result<RadonTable> {
    let n = h.dim().n();
    if sphere.ambient_dim() != n {
        return Err(Error::InvalidParameter("sphere rule and field dimensions differ".into()));
    }
    if max_order > h.max_order() {
        return Err(Error::DerivativeOrder { requested: max_order, max: h.max_order() });
    }
    let cols = max_order + 1;
    let ns = s_grid.count;
    let s_nodes = s_grid.nodes();
    // On a symmetric grid the antipodal row follows from
    // ∂ₛ^k ℛh(−θ, −s) = (−1)^k ∂ₛ^k ℛh(θ, s); only one row per pair is integrated.
    let symmetric = s_grid.is_symmetric();
    let computed: Vec<Option<Vec<f64>>> = (0..sphere.len())
        .into_par_iter()
        .map(|j| -> Result<Option<Vec<f64>>> {
            if symmetric && sphere.antipode(j) < j {
                return Ok(None);
            }
            let pf = PlaneFrame::new(sphere.node(j), rule);
            let mut row = vec![0.0; ns * cols];
            for (k, &s) in s_nodes.iter().enumerate() {
                let jet = radon_jet_in_frame(h, &pf, s, cols, rule)?;
                row[k * cols..(k + 1) * cols].copy_from_slice(&jet[..cols]);
            }
            Ok(Some(row))
        })
        .collect::<Result<_>>()?;
    let mut values = vec![0.0; sphere.len() * ns * cols];
    for j in 0..sphere.len() {
        let dst = j * ns * cols;
        if let Some(row) = &computed[j] {
            values[dst..dst + ns * cols].copy_from_slice(row);
        } else {
            let src = computed[sphere.antipode(j)].as_ref().expect("antipode computed");
            for k in 0..ns {
                for o in 0..cols {
                    let sign = if o % 2 == 0 { 1.0 } else { -1.0 };
                    values[dst + k * cols + o] = sign * src[(ns - 1 - k) * cols + o];
                }
            }
        }
    }
    let table = RadonTable::from_parts(h.dim(), sphere.clone(), s_grid, max_order, values, h.digest())?;
    match h.support() {
        Support::Annulus { outer, .. } if s_grid.lo <= -outer && s_grid.hi >= outer => table.with_support(outer),
        Support::Empty if s_grid.lo <= 0.0 && s_grid.hi >= 0.0 => table.with_support(0.0),
        _ => Ok(table),
    }
}

/// Both sides of an `L²` identity and their relative discrepancy.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Residual {
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err: f64,
}

impl Residual {
    pub fn new(lhs: f64, rhs: f64) -> Self {
        let rel_err = if lhs == rhs { 0.0 } else { (lhs - rhs).abs() / lhs.abs().max(1e-300) };
        Residual { lhs, rhs, rel_err }
    }
}

/// `∫∫ |values(j, k)|² ds dθ` by the sphere rule times the trapezoid rule in `s`.
pub(crate) fn table_l2(sphere: &SphereQuadrature, grid: SGrid, value: impl Fn(usize, usize) -> f64 + Sync) -> f64 {
    let step = grid.step();
    let per_dir: Vec<f64> = (0..sphere.len())
        .into_par_iter()
        .map(|j| {
            let col = (0..grid.count).map(|k| {
                let v = value(j, k);
                let w = if k == 0 || k + 1 == grid.count { 0.5 } else { 1.0 };
                w * v * v
            });
            sphere.weight(j) * step * compensated_sum(col.collect::<Vec<_>>())
        })
        .collect();
    compensated_sum(per_dir)
}

/// `∫|h|² dx` against `(1/(2(2π)^{n−1})) ∫∫ |∂ₛ^m ℛh|² ds dθ`, `m = (n−1)/2`.
pub fn radon_isometry_residual(
    h: &AnalyticField,
    table: &RadonTable,
    volume_sphere: &SphereQuadrature,
    radial: &RadialRule,
) -> Result<Residual> {
    let dim = table.dim();
    let m = dim.m();
    if table.max_order() < m {
        return Err(Error::DerivativeOrder { requested: m, max: table.max_order() });
    }
    let lhs = annulus_volume_integral(h, 0, volume_sphere, radial)?;
    let norm = 1.0 / (2.0 * (2.0 * PI).powi(dim.n() as i32 - 1));
    let rhs = norm * table_l2(table.sphere(), table.s_grid(), |j, k| table.value(j, k, m));
    Ok(Residual::new(lhs, rhs))
}

/// `h(x) = ((−1)^m/(2(2π)^{n−1})) ∫ ∂ₛ^{n−1} ℛh(θ, x·θ) dθ` from a table.
pub fn radon_invert(table: &RadonTable, x: &[f64]) -> Result<f64> {
    let dim = table.dim();
    let n = dim.n();
    if x.len() != n {
        return Err(Error::InvalidParameter("point and table dimensions differ".into()));
    }
    let sphere = table.sphere();
    let mut acc = KahanSum::new();
    for j in 0..sphere.len() {
        let s = dot(x, sphere.node(j));
        acc.add(sphere.weight(j) * table.interpolate(j, n - 1, s)?);
    }
    Ok(inversion_prefactor(dim) * acc.value())
}

/// Same formula with `∂ₛ^{n−1} ℛh` recomputed from the field.
pub fn radon_invert_analytic(h: &AnalyticField, sphere: &SphereQuadrature, x: &[f64], rule: &PlaneRule) -> Result<f64> {
    let dim = h.dim();
    let n = dim.n();
    let terms: Vec<f64> = (0..sphere.len())
        .map(|j| {
            let theta = sphere.node(j);
            radon_s_derivative(h, theta, dot(x, theta), n - 1, rule).map(|v| sphere.weight(j) * v)
        })
        .collect::<Result<_>>()?;
    Ok(inversion_prefactor(dim) * compensated_sum(terms))
}

fn inversion_prefactor(dim: OddDimension) -> f64 {
    let sign = if dim.m() % 2 == 0 { 1.0 } else { -1.0 };
    sign / (2.0 * (2.0 * PI).powi(dim.n() as i32 - 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{make_annular_bump, unit_polynomial, Monomial};
    use crate::geometry::build_sphere_quadrature;

    fn d3() -> OddDimension {
        OddDimension::new(3).unwrap()
    }

    fn field() -> AnalyticField {
        make_annular_bump(
            d3(),
            1.1,
            1.9,
            vec![Monomial { coef: 1.0, powers: vec![0, 0, 0] }, Monomial { coef: 0.5, powers: vec![1, 1, 0] }],
        )
        .unwrap()
    }

    #[test]
    fn support_and_zero_field() {
        let rule = PlaneRule::new(d3(), 24, 16).unwrap();
        let h = field();
        let th = [0.0, 0.6, 0.8];
        assert_eq!(radon_point(&h, &th, 1.95, &rule).unwrap(), 0.0);
        assert_eq!(radon_point(&h, &th, -2.5, &rule).unwrap(), 0.0);
        assert!(radon_point(&h, &th, 1.899, &rule).unwrap().abs() < 1e-12);
        assert_eq!(radon_point(&AnalyticField::zero(d3()), &th, 0.3, &rule).unwrap(), 0.0);
        assert!(radon_point(&h, &[1.0, 1.0, 0.0], 0.3, &rule).is_err());
        assert!(radon_s_derivative(&h, &th, 0.3, 4, &rule).is_err());
    }

    #[test]
    fn radial_field_matches_one_dimensional_formula() {
        // For radial h in n = 3, ℛh(θ, s) = 2π ∫_{|s|}^∞ r B(r) dr.
        let h = make_annular_bump(d3(), 1.1, 1.9, unit_polynomial(d3())).unwrap();
        let rule = PlaneRule::new(d3(), 64, 8).unwrap();
        for s in [0.0, 0.4, 1.3, -1.5] {
            let oracle = RadialRule::composite(f64::max(1.1, f64::abs(s)), 1.9, 16, 32)
                .unwrap()
                .integrate(|r| 2.0 * PI * r * crate::fields::bump_profile(1.1, 1.9, r));
            let got = radon_point(&h, &[0.0, 0.0, 1.0], s, &rule).unwrap();
            assert!((got - oracle).abs() < 1e-9 * oracle.abs().max(1e-3), "{s}: {got} vs {oracle}");
        }
    }

    #[test]
    fn s_derivative_matches_finite_difference() {
        let h = field();
        let rule = PlaneRule::new(d3(), 64, 32).unwrap();
        let th = [0.36, 0.48, 0.8];
        // inside (a, b) where ℛh is not polynomial in s
        let s = 1.4;
        let exact = radon_s_derivative(&h, &th, s, 1, &rule).unwrap();
        let fd = |step: f64| {
            (radon_point(&h, &th, s + step, &rule).unwrap() - radon_point(&h, &th, s - step, &rule).unwrap())
                / (2.0 * step)
        };
        let ratio = (fd(1e-2) - exact).abs() / (fd(5e-3) - exact).abs();
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn first_derivative_vanishes_at_zero_for_even_fields() {
        let h = make_annular_bump(
            d3(),
            1.0,
            2.0,
            vec![Monomial { coef: 1.0, powers: vec![0, 0, 0] }, Monomial { coef: 0.3, powers: vec![2, 0, 0] }],
        )
        .unwrap();
        let rule = PlaneRule::new(d3(), 32, 16).unwrap();
        let d = radon_s_derivative(&h, &[0.6, 0.0, 0.8], 0.0, 1, &rule).unwrap();
        assert!(d.abs() < 1e-10, "{d}");
    }

    #[test]
    fn table_symmetry_and_support() {
        let h = field();
        let sphere = build_sphere_quadrature(d3(), 4).unwrap();
        let rule = PlaneRule::new(d3(), 16, 8).unwrap();
        let grid = SGrid::default_for(4, 1.9);
        let table = build_radon_table(&h, &sphere, grid, 3, &rule).unwrap();
        for j in 0..sphere.len() {
            let ja = sphere.antipode(j);
            for k in 0..grid.count {
                let ka = grid.count - 1 - k;
                for order in 0..=3 {
                    let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
                    let a = table.value(j, k, order);
                    let b = table.value(ja, ka, order);
                    assert!((a - sign * b).abs() <= 1e-10 * a.abs().max(1.0));
                }
                if grid.node(k).abs() > 1.9 {
                    assert_eq!(table.value(j, k, 0), 0.0);
                }
            }
        }
        // the stored antipodal rows agree with direct integration at (−θ, −s)
        for j in [0, 5, 17] {
            let ja = sphere.antipode(j);
            let theta: Vec<f64> = sphere.node(ja).to_vec();
            for k in [3, 10, 20] {
                let direct = radon_derivatives(&h, &theta, grid.node(k), 3, &rule).unwrap();
                for order in 0..=3 {
                    let a = table.value(ja, k, order);
                    assert!((a - direct[order]).abs() <= 1e-10 * a.abs().max(1.0));
                }
            }
        }
        let zero = build_radon_table(&AnalyticField::zero(d3()), &sphere, grid, 3, &rule).unwrap();
        assert!(zero.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn grid_is_exactly_symmetric() {
        let g = SGrid::default_for(16, 1.9);
        assert_eq!(g.count, 129);
        for k in 0..g.count {
            assert_eq!(g.node(k), -g.node(g.count - 1 - k));
        }
        assert_eq!(g.node(64), 0.0);
    }
}
