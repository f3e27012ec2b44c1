//! Spherical means `ℳh(c, t)`, the average of `h` over the sphere of centre
//! `c` and radius `|t|`.

use crate::error::{Error, Result};
use crate::fields::{AnalyticField, Support};
use crate::geometry::{complete_frame, norm, sphere_area, RadialRule, SphereQuadrature, MAX_DIM};
use crate::sum::{compensated_sum, KahanSum};

/// `(1/ω) Σ wᵢ h(c + |t|θᵢ)`; `t = 0` returns `h(c)`.
pub fn spherical_mean(h: &AnalyticField, c: &[f64], t: f64, sphere: &SphereQuadrature) -> f64 {
    if t == 0.0 {
        return h.eval(c);
    }
    if h.support() == Support::Empty {
        return 0.0;
    }
    let n = c.len();
    let r = t.abs();
    let mut p = [0.0; MAX_DIM];
    let mut acc = KahanSum::new();
    for i in 0..sphere.len() {
        let theta = sphere.node(i);
        for k in 0..n {
            p[k] = c[k] + r * theta[k];
        }
        acc.add(sphere.weight(i) * h.eval(&p[..n]));
    }
    acc.value() / sphere.area()
}

/// `ℳh(x, |x|)`, the mean over the sphere through the origin centred at `x`.
pub fn mean_through_origin(h: &AnalyticField, x: &[f64], sphere: &SphereQuadrature) -> Result<f64> {
    let r = norm(x);
    if r == 0.0 {
        return Err(Error::Domain("sphere through the origin needs a nonzero centre".into()));
    }
    Ok(spherical_mean(h, x, r, sphere))
}

/// Radial oracle for `n = 3`:
/// `ℳh(c, t) = (1/(2|c|t)) ∫_{||c|−t|}^{|c|+t} r·profile(r) dr`,
/// integrated with `panels` Gauss–Legendre panels of `order` points.
pub fn radial_mean_oracle_3d(
    profile: impl Fn(f64) -> f64,
    c_norm: f64,
    t: f64,
    order: usize,
    panels: usize,
) -> Result<f64> {
    if !(c_norm > 0.0) || !(t > 0.0) {
        return Err(Error::InvalidParameter("radial oracle needs |c| > 0 and t > 0".into()));
    }
    let rule = RadialRule::composite((c_norm - t).abs(), c_norm + t, order, panels)?;
    Ok(rule.integrate(|r| r * profile(r)) / (2.0 * c_norm * t))
}

/// Computes spherical means.
pub trait SphereAverager: Sync {
    fn mean(&self, h: &AnalyticField, c: &[f64], t: f64) -> f64;
}

impl SphereAverager for SphereQuadrature {
    fn mean(&self, h: &AnalyticField, c: &[f64], t: f64) -> f64 {
        spherical_mean(h, c, t, self)
    }
}

/// Spherical means by a zonal rule aligned with the centre direction.
///
/// The sphere `|p − c| = t` is parametrised by the distance `u = |p|` from
/// the origin and a point of `S^{n−2}`; the `u`-range is clipped to the
/// support annulus of the field, so Gauss–Legendre nodes only fall where the
/// field lives.
#[derive(Clone, Debug)]
pub struct ZonalMeanRule {
    order: usize,
    panels: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    cross: SphereQuadrature,
    fallback: SphereQuadrature,
}

impl ZonalMeanRule {
    /// `panels` Gauss–Legendre panels of `order` points in `u`, and a product
    /// rule of the given level on the `(n−2)`-sphere of each zone.
    pub fn new(ambient: usize, order: usize, panels: usize, cross_level: usize) -> Result<Self> {
        let reference = RadialRule::composite(0.0, 1.0, order, panels)?;
        Ok(ZonalMeanRule {
            order,
            panels,
            nodes: reference.nodes,
            weights: reference.weights,
            cross: SphereQuadrature::product(ambient - 1, cross_level)?,
            fallback: SphereQuadrature::product(ambient, (order * panels).div_ceil(2).max(cross_level))?,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn panels(&self) -> usize {
        self.panels
    }
}

impl SphereAverager for ZonalMeanRule {
    fn mean(&self, h: &AnalyticField, c: &[f64], t: f64) -> f64 {
        if t == 0.0 {
            return h.eval(c);
        }
        let n = c.len();
        let t = t.abs();
        let cn = norm(c);
        let (lo, hi) = match h.support() {
            Support::Empty => return 0.0,
            Support::Everywhere => ((cn - t).abs(), cn + t),
            Support::Annulus { inner, outer } => ((cn - t).abs().max(inner), (cn + t).min(outer)),
        };
        if !(hi > lo) {
            return 0.0;
        }
        if cn < 1e-9 * t {
            return spherical_mean(h, c, t, &self.fallback);
        }
        let mut chat = [0.0; MAX_DIM];
        for k in 0..n {
            chat[k] = c[k] / cn;
        }
        let frame = complete_frame(&chat[..n]);
        let dmt = cn - t;
        let dpt = cn + t;
        let half_power = (n as i32 - 3) / 2;
        let mut p = [0.0; MAX_DIM];
        let mut total = KahanSum::new();
        for (&xi, &wi) in self.nodes.iter().zip(&self.weights) {
            let u = lo + (hi - lo) * xi;
            let w = wi * (hi - lo);
            let along = (u * u + dmt * dpt) / (2.0 * cn);
            let plus = (u * u - dmt * dmt) / (2.0 * cn);
            let minus = (dpt * dpt - u * u) / (2.0 * cn);
            let perp2 = (plus * minus).max(0.0);
            let perp = perp2.sqrt();
            // (1 − t'²)^{(n−3)/2} = (t²(1 − t'²))^{(n−3)/2} / t^{n−3}
            let jac = u / (cn * t) * (perp2 / (t * t)).powi(half_power);
            let ring = compensated_sum((0..self.cross.len()).map(|q| {
                let sigma = self.cross.node(q);
                for k in 0..n {
                    let mut v = along * chat[k];
                    for (e, s) in frame.iter().zip(sigma) {
                        v += perp * s * e[k];
                    }
                    p[k] = v;
                }
                self.cross.weight(q) * h.eval(&p[..n])
            }));
            total.add(w * jac * ring);
        }
        total.value() / sphere_area(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{bump_profile, make_annular_bump, unit_polynomial, Monomial};
    use crate::geometry::{build_sphere_quadrature, OddDimension};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn d3() -> OddDimension {
        OddDimension::new(3).unwrap()
    }

    #[test]
    fn trivial_means() {
        let sphere = build_sphere_quadrature(d3(), 6).unwrap();
        let zero = AnalyticField::zero(d3());
        assert_eq!(spherical_mean(&zero, &[1.0, 0.0, 0.0], 0.5, &sphere), 0.0);
        let one = AnalyticField::constant(d3(), 1.0);
        assert_relative_eq!(spherical_mean(&one, &[0.3, 0.2, 0.0], 0.7, &sphere), 1.0, max_relative = 1e-13);
        let zonal = ZonalMeanRule::new(3, 8, 2, 6).unwrap();
        assert_relative_eq!(zonal.mean(&one, &[0.3, 0.2, 0.0], 0.7), 1.0, max_relative = 1e-13);
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(radial_mean_oracle_3d(|_| 0.0, 1.0, 0.5, 8, 1).unwrap(), 0.0);
        assert_relative_eq!(radial_mean_oracle_3d(|_| 1.0, 2.0, 1.0, 4, 1).unwrap(), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn means_match_radial_oracle() {
        let h = make_annular_bump(d3(), 1.1, 1.9, unit_polynomial(d3())).unwrap();
        let sphere = build_sphere_quadrature(d3(), 256).unwrap();
        let zonal = ZonalMeanRule::new(3, 16, 8, 8).unwrap();
        let oracle = |c: f64, t: f64| radial_mean_oracle_3d(|r| bump_profile(1.1, 1.9, r), c, t, 16, 64).unwrap();
        let c = [1.5, 0.0, 0.0];
        let want = oracle(1.5, 0.7);
        assert!((spherical_mean(&h, &c, 0.7, &sphere) - want).abs() <= 1e-8 * want);
        assert!((zonal.mean(&h, &c, 0.7) - want).abs() <= 1e-9 * want);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let cn = rng.gen_range(0.4..2.0);
            let t = rng.gen_range(0.2..2.0);
            let want = oracle(cn, t);
            let c = [0.0, cn * 0.6, cn * 0.8];
            let got = zonal.mean(&h, &c, t);
            assert!((got - want).abs() <= 1e-8 * want.abs().max(1e-3), "{got} vs {want}");
        }
    }

    #[test]
    fn zonal_rule_matches_product_rule_for_nonradial_fields() {
        for n in [3, 5] {
            let dim = OddDimension::new(n).unwrap();
            let mut p = vec![0; n];
            p[0] = 2;
            p[1] = 1;
            let h = make_annular_bump(
                dim,
                0.8,
                1.6,
                vec![Monomial { coef: 1.0, powers: vec![0; n] }, Monomial { coef: 0.7, powers: p }],
            )
            .unwrap();
            let sphere = build_sphere_quadrature(dim, if n == 3 { 256 } else { 48 }).unwrap();
            let zonal = ZonalMeanRule::new(n, 16, 6, 16).unwrap();
            let mut c = vec![0.0; n];
            c[0] = 0.6;
            c[1] = -0.5;
            c[2] = 0.3;
            let a = spherical_mean(&h, &c, 1.0, &sphere);
            let b = zonal.mean(&h, &c, 1.0);
            assert!((a - b).abs() <= 1e-8 * b.abs(), "n={n}: {a} vs {b}");
        }
    }

    #[test]
    fn evenness_and_support() {
        let h = make_annular_bump(d3(), 1.0, 2.0, unit_polynomial(d3())).unwrap();
        let sphere = build_sphere_quadrature(d3(), 10).unwrap();
        let c = [0.9, 0.3, 0.1];
        assert_eq!(spherical_mean(&h, &c, 0.8, &sphere), spherical_mean(&h, &c, -0.8, &sphere));
        for k in 1..20 {
            let r = 0.49 * k as f64 / 20.0;
            let x = [r, 0.0, 0.0];
            assert_eq!(mean_through_origin(&h, &x, &sphere).unwrap(), 0.0);
        }
        assert!(mean_through_origin(&h, &[0.0; 3], &sphere).is_err());
    }

    #[test]
    fn product_rule_converges_to_oracle() {
        let h = make_annular_bump(d3(), 1.1, 1.9, unit_polynomial(d3())).unwrap();
        let want = radial_mean_oracle_3d(|r| bump_profile(1.1, 1.9, r), 1.5, 0.7, 16, 64).unwrap();
        let mut last = f64::INFINITY;
        for level in [8, 16, 32, 64] {
            let sphere = build_sphere_quadrature(d3(), level).unwrap();
            let err = (spherical_mean(&h, &[1.5, 0.0, 0.0], 0.7, &sphere) - want).abs();
            assert!(err <= last.max(1e-12), "level {level}: {err} > {last}");
            last = err;
        }
    }
}
