//! Smooth test functions supported in annuli away from the origin, with
//! exact directional derivatives, and the inversion pullback and radial
//! power transforms.
//!
//! Fields are expression trees evaluated on [`Jet`]s, so a directional
//! derivative of any order up to the jet capacity is exact up to rounding,
//! including through pullbacks by the inversion map.

use crate::error::{Error, Result};
use crate::geometry::{OddDimension, MAX_DIM};
use crate::jet::{Jet, JET_CAPACITY};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::sync::Arc;

/// Where a field may be nonzero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Support {
    Empty,
    /// Debug fields such as constants; not admissible in volume integrals.
    Everywhere,
    /// `inner ≤ |x| ≤ outer` with `0 < inner < outer`.
    Annulus { inner: f64, outer: f64 },
}

impl Support {
    pub fn contains_radius(&self, r: f64) -> bool {
        match *self {
            Support::Empty => false,
            Support::Everywhere => true,
            Support::Annulus { inner, outer } => r >= inner && r <= outer,
        }
    }

    /// Outer radius, if bounded.
    pub fn outer(&self) -> Option<f64> {
        match *self {
            Support::Annulus { outer, .. } => Some(outer),
            Support::Empty => Some(0.0),
            Support::Everywhere => None,
        }
    }

    pub fn inner(&self) -> Option<f64> {
        match *self {
            Support::Annulus { inner, .. } => Some(inner),
            _ => None,
        }
    }
}

/// `coef · Π x_i^{powers[i]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial {
    pub coef: f64,
    pub powers: Vec<u32>,
}

#[derive(Debug)]
enum Expr {
    Zero,
    Constant(f64),
    Bump { a: f64, b: f64, terms: Vec<Monomial> },
    Scaled { alpha: f64, inner: Arc<Expr> },
    /// `|X|^k h(X/|X|²)`
    Pullback { k: i32, inner: Arc<Expr> },
    /// `|x|^k h(x)`
    RadialPower { k: i32, inner: Arc<Expr> },
    /// `h(Qᵀx)` with `Q` row-major `n × n`.
    Rotated { q: Vec<f64>, inner: Arc<Expr> },
}

/// Standard `C^∞` bump `exp(−1/(1−u²))`, `u = (2r − a − b)/(b − a)`, zero
/// outside `(a, b)`.
pub fn bump_profile(a: f64, b: f64, r: f64) -> f64 {
    if r <= a || r >= b {
        return 0.0;
    }
    let u = (2.0 * r - a - b) / (b - a);
    let w = 1.0 - u * u;
    let e = -1.0 / w;
    if e < -700.0 {
        0.0
    } else {
        e.exp()
    }
}

fn norm2_jet(x: &[Jet]) -> Jet {
    let mut acc = x[0] * x[0];
    for v in &x[1..] {
        acc = acc + *v * *v;
    }
    acc
}

/// Memo of radial factors for evaluations that share the jet of `|x|²`.
///
/// Points `x` with equal `|x|` and `x·dir` (a ring in a hyperplane normal to
/// `dir`) have the same jet of `|x + τ·dir|²`, so every factor depending only
/// on the norm is computed once per ring.
pub struct RadialCache {
    keys: [usize; RADIAL_CACHE_SLOTS],
    jets: [Jet; RADIAL_CACHE_SLOTS],
    len: usize,
}

const RADIAL_CACHE_SLOTS: usize = 8;

impl Default for RadialCache {
    fn default() -> Self {
        Self::new()
    }
}

impl RadialCache {
    pub fn new() -> Self {
        RadialCache { keys: [0; RADIAL_CACHE_SLOTS], jets: [Jet::zero(1); RADIAL_CACHE_SLOTS], len: 0 }
    }

    pub fn clear(&mut self) {
        self.len = 0;
    }

    #[inline]
    fn get_or(&mut self, key: usize, f: impl FnOnce() -> Jet) -> Jet {
        if let Some(i) = self.keys[..self.len].iter().position(|&k| k == key) {
            return self.jets[i];
        }
        let j = f();
        // deeply nested trees simply stop caching
        if self.len < RADIAL_CACHE_SLOTS {
            self.keys[self.len] = key;
            self.jets[self.len] = j;
            self.len += 1;
        }
        j
    }
}

impl Expr {
    fn key(&self, tag: usize) -> usize {
        (self as *const Expr as usize) * 4 + tag
    }

    /// `r2` is the jet of `|x|²` for the jet point `x`.
    fn eval(&self, x: &[Jet], r2: Jet, cache: &mut RadialCache) -> Jet {
        let len = x[0].len();
        match self {
            Expr::Zero => Jet::zero(len),
            Expr::Constant(c) => Jet::constant(*c, len),
            Expr::Bump { a, b, terms } => {
                let r2v = r2.value();
                if r2v <= a * a || r2v >= b * b {
                    return Jet::zero(len);
                }
                let bump = cache.get_or(self.key(0), || {
                    let r = r2.sqrt();
                    let u = r.scale(2.0 / (b - a)).add_scalar(-(a + b) / (b - a));
                    let w = (u * u).scale(-1.0).add_scalar(1.0);
                    if -1.0 / w.value() < -700.0 {
                        return Jet::zero(len);
                    }
                    w.recip().scale(-1.0).exp()
                });
                if bump.is_identically_zero() {
                    return bump;
                }
                let mut poly = Jet::zero(len);
                for t in terms {
                    let mut term = Jet::constant(t.coef, len);
                    for (xi, &p) in x.iter().zip(&t.powers) {
                        for _ in 0..p {
                            term = term * *xi;
                        }
                    }
                    poly = poly + term;
                }
                poly * bump
            }
            Expr::Scaled { alpha, inner } => inner.eval(x, r2, cache).scale(*alpha),
            Expr::Pullback { k, inner } => {
                if r2.value() == 0.0 {
                    return Jet::zero(len);
                }
                let inv = cache.get_or(self.key(0), || r2.recip());
                let mut y = [Jet::zero(len); MAX_DIM];
                for (yi, xi) in y.iter_mut().zip(x) {
                    *yi = *xi * inv;
                }
                let h = inner.eval(&y[..x.len()], inv, cache);
                if h.is_identically_zero() {
                    return h;
                }
                h * cache.get_or(self.key(1), || r2.pow_half(*k))
            }
            Expr::RadialPower { k, inner } => {
                let h = inner.eval(x, r2, cache);
                if h.is_identically_zero() {
                    return h;
                }
                h * cache.get_or(self.key(0), || r2.pow_half(*k))
            }
            Expr::Rotated { q, inner } => {
                let n = x.len();
                let mut y = [Jet::zero(len); MAX_DIM];
                for (i, yi) in y.iter_mut().enumerate().take(n) {
                    let mut acc = Jet::zero(len);
                    for (j, xj) in x.iter().enumerate() {
                        let qji = q[j * n + i];
                        if qji != 0.0 {
                            acc = acc + xj.scale(qji);
                        }
                    }
                    *yi = acc;
                }
                inner.eval(&y[..n], r2, cache)
            }
        }
    }
}

/// A smooth function on `ℝⁿ` with exact directional derivatives.
#[derive(Clone, Debug)]
pub struct AnalyticField {
    dim: OddDimension,
    expr: Arc<Expr>,
    support: Support,
    max_order: usize,
}

impl AnalyticField {
    pub fn zero(dim: OddDimension) -> Self {
        AnalyticField { dim, expr: Arc::new(Expr::Zero), support: Support::Empty, max_order: dim.n() }
    }

    /// Constant function; unbounded support, meant for normalisation checks.
    pub fn constant(dim: OddDimension, value: f64) -> Self {
        AnalyticField {
            dim,
            expr: Arc::new(Expr::Constant(value)),
            support: if value == 0.0 { Support::Empty } else { Support::Everywhere },
            max_order: dim.n(),
        }
    }

    pub fn dim(&self) -> OddDimension {
        self.dim
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// Raises the supported derivative order (up to the jet capacity).
    pub fn with_max_order(mut self, order: usize) -> Result<Self> {
        if order >= JET_CAPACITY {
            return Err(Error::DerivativeOrder { requested: order, max: JET_CAPACITY - 1 });
        }
        self.max_order = order;
        Ok(self)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut jx = [Jet::zero(1); MAX_DIM];
        for (j, v) in jx.iter_mut().zip(x) {
            *j = Jet::constant(*v, 1);
        }
        let jx = &jx[..x.len()];
        self.expr.eval(jx, norm2_jet(jx), &mut RadialCache::new()).value()
    }

    /// Evaluates on jet coordinates (a curve through ℝⁿ).
    pub fn eval_jet(&self, x: &[Jet]) -> Jet {
        self.expr.eval(x, norm2_jet(x), &mut RadialCache::new())
    }

    /// Taylor jet of `τ ↦ h(x + τ·dir)` with `orders + 1` coefficients.
    pub fn line_jet(&self, x: &[f64], dir: &[f64], orders: usize) -> Result<Jet> {
        if orders > self.max_order {
            return Err(Error::DerivativeOrder { requested: orders, max: self.max_order });
        }
        Ok(self.line_jet_unchecked(x, dir, orders + 1))
    }

    #[inline]
    pub(crate) fn line_jet_unchecked(&self, x: &[f64], dir: &[f64], len: usize) -> Jet {
        self.ring_line_jet(x, dir, len, &mut RadialCache::new())
    }

    /// Line jet reusing radial factors from `cache`. Every call sharing a
    /// cache must have the same `|x|`, `x·dir` and `|dir|`; clear it otherwise.
    #[inline]
    pub fn ring_line_jet(&self, x: &[f64], dir: &[f64], len: usize, cache: &mut RadialCache) -> Jet {
        let mut jx = [Jet::zero(len); MAX_DIM];
        let mut r2 = Jet::zero(len);
        let (mut xx, mut xd, mut dd) = (0.0, 0.0, 0.0);
        for i in 0..x.len() {
            jx[i] = Jet::variable(x[i], dir[i], len);
            xx += x[i] * x[i];
            xd += x[i] * dir[i];
            dd += dir[i] * dir[i];
        }
        // |x + τ·dir|² = |x|² + 2τ x·dir + τ²|dir|²
        r2 = r2.add_scalar(xx);
        r2.set_coeff(1, 2.0 * xd);
        r2.set_coeff(2, dd);
        self.expr.eval(&jx[..x.len()], r2, cache)
    }

    /// `(dir·∇)^k h(x)`.
    pub fn directional_derivative(&self, x: &[f64], dir: &[f64], k: usize) -> Result<f64> {
        Ok(self.line_jet(x, dir, k)?.derivative(k))
    }

    fn derived(&self, expr: Expr, support: Support) -> Self {
        AnalyticField { dim: self.dim, expr: Arc::new(expr), support, max_order: self.max_order }
    }

    /// `α·h`.
    pub fn scaled(&self, alpha: f64) -> Self {
        let support = if alpha == 0.0 { Support::Empty } else { self.support };
        self.derived(Expr::Scaled { alpha, inner: self.expr.clone() }, support)
    }

    /// `x ↦ h(Qᵀx)` for an orthogonal `n × n` matrix `Q` given row-major.
    pub fn rotated(&self, q: &[f64]) -> Result<Self> {
        let n = self.dim.n();
        if q.len() != n * n {
            return Err(Error::InvalidParameter(format!("rotation must have {} entries", n * n)));
        }
        Ok(self.derived(Expr::Rotated { q: q.to_vec(), inner: self.expr.clone() }, self.support))
    }

    /// Stable digest of the expression tree, used to tag serialized tables.
    pub fn digest(&self) -> String {
        let repr = format!("{:?}|{}|{}", self.expr, self.dim.n(), self.max_order);
        hex::encode(Sha256::digest(repr.as_bytes()))
    }
}

/// `f(x) = P(x)·B(|x|)` with `B` the standard bump on `[a, b]`.
pub fn make_annular_bump(dim: OddDimension, a: f64, b: f64, terms: Vec<Monomial>) -> Result<AnalyticField> {
    if !(a > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "inner radius a = {a} must be positive (support must avoid the origin)"
        )));
    }
    if !(b > a) || !b.is_finite() {
        return Err(Error::InvalidParameter(format!("outer radius b = {b} must exceed a = {a}")));
    }
    for t in &terms {
        if t.powers.len() != dim.n() {
            return Err(Error::InvalidParameter(format!(
                "monomial has {} exponents, expected {}",
                t.powers.len(),
                dim.n()
            )));
        }
    }
    let support = if terms.is_empty() || terms.iter().all(|t| t.coef == 0.0) {
        Support::Empty
    } else {
        Support::Annulus { inner: a, outer: b }
    };
    Ok(AnalyticField { dim, expr: Arc::new(Expr::Bump { a, b, terms }), support, max_order: dim.n() })
}

/// The polynomial `P ≡ 1`.
pub fn unit_polynomial(dim: OddDimension) -> Vec<Monomial> {
    vec![Monomial { coef: 1.0, powers: vec![0; dim.n()] }]
}

/// `H(X) = |X|^k h(X/|X|²)`; support `[a, b]` maps to `[1/b, 1/a]`.
pub fn inversion_pullback(h: &AnalyticField, k: i32) -> AnalyticField {
    let support = match h.support {
        Support::Annulus { inner, outer } => Support::Annulus { inner: 1.0 / outer, outer: 1.0 / inner },
        s => s,
    };
    h.derived(Expr::Pullback { k, inner: h.expr.clone() }, support)
}

/// `x ↦ |x|^k h(x)`.
pub fn radial_power_scale(h: &AnalyticField, k: i32) -> AnalyticField {
    if k == 0 {
        return h.clone();
    }
    h.derived(Expr::RadialPower { k, inner: h.expr.clone() }, h.support)
}

/// Serializable description of a field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub kind: FieldKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub terms: Vec<Monomial>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub scale: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transforms: Vec<FieldTransformSpec>,
}

fn one() -> f64 {
    1.0
}

fn is_one(v: &f64) -> bool {
    *v == 1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    AnnularBump,
    Zero,
    Constant,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldTransformSpec {
    InversionPullback(i32),
    RadialPower(i32),
}

impl FieldSpec {
    pub fn annular_bump(a: f64, b: f64, terms: Vec<Monomial>) -> Self {
        FieldSpec { kind: FieldKind::AnnularBump, a: Some(a), b: Some(b), terms, value: None, scale: 1.0, transforms: vec![] }
    }

    pub fn zero() -> Self {
        FieldSpec { kind: FieldKind::Zero, a: None, b: None, terms: vec![], value: None, scale: 1.0, transforms: vec![] }
    }

    pub fn build(&self, dim: OddDimension) -> Result<AnalyticField> {
        let base = match self.kind {
            FieldKind::Zero => AnalyticField::zero(dim),
            FieldKind::Constant => AnalyticField::constant(dim, self.value.unwrap_or(1.0)),
            FieldKind::AnnularBump => {
                let a = self.a.ok_or_else(|| Error::InvalidParameter("annular_bump needs `a`".into()))?;
                let b = self.b.ok_or_else(|| Error::InvalidParameter("annular_bump needs `b`".into()))?;
                let terms = if self.terms.is_empty() { unit_polynomial(dim) } else { self.terms.clone() };
                make_annular_bump(dim, a, b, terms)?
            }
        };
        let mut field = if self.scale == 1.0 { base } else { base.scaled(self.scale) };
        for t in &self.transforms {
            field = match *t {
                FieldTransformSpec::InversionPullback(k) => inversion_pullback(&field, k),
                FieldTransformSpec::RadialPower(k) => radial_power_scale(&field, k),
            };
        }
        Ok(field)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{annulus_volume_integral, build_sphere_quadrature, norm, RadialRule};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn d3() -> OddDimension {
        OddDimension::new(3).unwrap()
    }

    fn wavy(dim: OddDimension, a: f64, b: f64) -> AnalyticField {
        let n = dim.n();
        let mut p1 = vec![0; n];
        p1[0] = 1;
        let mut p2 = vec![0; n];
        p2[1] = 1;
        p2[2] = 1;
        make_annular_bump(
            dim,
            a,
            b,
            vec![
                Monomial { coef: 1.0, powers: vec![0; n] },
                Monomial { coef: 0.4, powers: p1 },
                Monomial { coef: -0.3, powers: p2 },
            ],
        )
        .unwrap()
    }

    fn random_point(rng: &mut ChaCha8Rng, r_lo: f64, r_hi: f64) -> Vec<f64> {
        let mut v: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let l = norm(&v);
        let r = rng.gen_range(r_lo..r_hi);
        v.iter_mut().for_each(|c| *c *= r / l);
        v
    }

    #[test]
    fn bump_examples() {
        let f = make_annular_bump(d3(), 1.1, 1.9, unit_polynomial(d3())).unwrap();
        assert_relative_eq!(f.eval(&[1.5, 0.0, 0.0]), (-1.0f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(f.eval(&[0.0, 0.9, 1.2]), 0.36787944117144233, max_relative = 1e-14);
        assert_eq!(f.eval(&[1.0, 0.0, 0.0]), 0.0);
        assert_eq!(f.eval(&[0.0, 0.0, 0.0]), 0.0);
        assert!(make_annular_bump(d3(), 0.0, 1.0, unit_polynomial(d3())).is_err());
        assert!(make_annular_bump(d3(), -1.0, 1.0, unit_polynomial(d3())).is_err());
    }

    #[test]
    fn first_derivative_matches_central_difference() {
        let f = wavy(d3(), 1.1, 1.9);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = 1e-4;
        for _ in 0..20 {
            let x = random_point(&mut rng, 1.25, 1.75);
            let d = random_point(&mut rng, 1.0, 1.0 + 1e-12);
            let exact = f.directional_derivative(&x, &d, 1).unwrap();
            let xp: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + h * b).collect();
            let xm: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a - h * b).collect();
            let fd = (f.eval(&xp) - f.eval(&xm)) / (2.0 * h);
            assert!((exact - fd).abs() < 1e-7, "{exact} vs {fd}");
        }
    }

    #[test]
    fn derivative_order_is_bounded() {
        let f = wavy(d3(), 1.1, 1.9);
        assert!(f.directional_derivative(&[1.5, 0.0, 0.0], &[1.0, 0.0, 0.0], 4).is_err());
        assert!(f.directional_derivative(&[1.5, 0.0, 0.0], &[1.0, 0.0, 0.0], 3).is_ok());
    }

    #[test]
    fn pullback_support_and_involution() {
        let h = wavy(d3(), 1.0, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for k in [-4, -2, 1, 2] {
            let big = inversion_pullback(&h, k);
            assert_eq!(big.support(), Support::Annulus { inner: 0.5, outer: 1.0 });
            for _ in 0..200 {
                let x = random_point(&mut rng, 0.01, 3.0);
                let r = norm(&x);
                if !(0.5..=1.0).contains(&r) {
                    assert_eq!(big.eval(&x), 0.0);
                }
            }
            // applying the same pullback twice gives back h
            let back = inversion_pullback(&big, k);
            for _ in 0..50 {
                let x = random_point(&mut rng, 0.9, 2.1);
                assert!((back.eval(&x) - h.eval(&x)).abs() <= 1e-12 * h.eval(&x).abs().max(1.0));
            }
        }
    }

    #[test]
    fn pullback_preserves_weighted_norm() {
        let dim = d3();
        let g = wavy(dim, 1.1, 1.9);
        let big_g = inversion_pullback(&g, -(dim.n() as i32) - 1);
        let sphere = build_sphere_quadrature(dim, 12).unwrap();
        let r1 = RadialRule::composite(1.1, 1.9, 16, 8).unwrap();
        let r2 = RadialRule::composite(1.0 / 1.9, 1.0 / 1.1, 16, 8).unwrap();
        let lhs = annulus_volume_integral(&big_g, 0, &sphere, &r2).unwrap();
        let rhs = annulus_volume_integral(&g, 2, &sphere, &r1).unwrap();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-8);
    }

    #[test]
    fn radial_power_examples() {
        let h = wavy(d3(), 1.0, 2.5);
        let x = [1.2, -1.6, 0.0];
        assert_eq!(radial_power_scale(&h, 0).eval(&x), h.eval(&x));
        let back = radial_power_scale(&radial_power_scale(&h, 1), -1);
        assert_relative_eq!(back.eval(&x), h.eval(&x), max_relative = 1e-14);
        assert_relative_eq!(radial_power_scale(&h, -1).eval(&x), h.eval(&x) / 2.0, max_relative = 1e-15);
    }

    #[test]
    fn transforms_commute_with_scaling() {
        let h = wavy(d3(), 1.0, 2.0);
        let x = [0.3, 0.5, -0.4];
        let a = inversion_pullback(&h.scaled(2.5), -2).eval(&x);
        let b = 2.5 * inversion_pullback(&h, -2).eval(&x);
        assert_relative_eq!(a, b, max_relative = 1e-15);
        let y = [1.3, 0.5, -0.4];
        let a = radial_power_scale(&h.scaled(-1.5), 1).eval(&y);
        let b = -1.5 * radial_power_scale(&h, 1).eval(&y);
        assert_relative_eq!(a, b, max_relative = 1e-15);
    }

    fn step_halving_ratio(f: &AnalyticField, x: &[f64], d: &[f64], k: usize, h: f64) -> f64 {
        let fd = |h: f64| -> f64 {
            let at = |t: f64| {
                let p: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + t * b).collect();
                f.eval(&p)
            };
            match k {
                1 => (at(h) - at(-h)) / (2.0 * h),
                _ => (at(h) - 2.0 * at(0.0) + at(-h)) / (h * h),
            }
        };
        let exact = f.directional_derivative(x, d, k).unwrap();
        (fd(h) - exact).abs() / (fd(h / 2.0) - exact).abs()
    }

    #[test]
    fn pullback_derivatives_converge_at_second_order() {
        let h = wavy(d3(), 1.1, 1.9);
        let big = inversion_pullback(&h, -2);
        let x = [0.41, -0.33, 0.38];
        let d = {
            let v = [0.2, 0.7, -0.5];
            let l = norm(&v);
            [v[0] / l, v[1] / l, v[2] / l]
        };
        for k in [1, 2] {
            let ratio = step_halving_ratio(&big, &x, &d, k, 4e-3);
            assert!((3.5..=4.5).contains(&ratio), "order {k}: ratio {ratio}");
        }
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec = FieldSpec {
            transforms: vec![FieldTransformSpec::InversionPullback(-2), FieldTransformSpec::RadialPower(1)],
            ..FieldSpec::annular_bump(1.1, 1.9, unit_polynomial(d3()))
        };
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"inversion_pullback\":-2"));
        let back: FieldSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
        assert!(serde_json::from_str::<FieldSpec>(r#"{"kind":"zero","bogus":1}"#).is_err());
        let bad = FieldSpec::annular_bump(0.0, 1.0, vec![]);
        assert!(bad.build(d3()).is_err());
    }
}
