//! Dimensions, sphere quadrature, the inversion map and weighted volume
//! integrals in spherical coordinates.

mod quadrature;
mod volume;

pub use quadrature::{
    build_sphere_quadrature, gauss_legendre, RadialRule, SphereQuadrature, SphereStencil,
};
pub use volume::{annulus_volume_integral, weighted_volume_integral};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Largest ambient dimension handled with stack-allocated points.
pub const MAX_DIM: usize = 7;

/// An odd space dimension `n = 2m + 1 ≥ 3`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct OddDimension {
    n: usize,
}

impl OddDimension {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 || n % 2 == 0 || n > MAX_DIM {
            return Err(Error::InvalidDimension(n));
        }
        Ok(OddDimension { n })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// `m = (n − 1)/2`.
    #[inline]
    pub fn m(&self) -> usize {
        (self.n - 1) / 2
    }

    /// Surface area of the unit sphere `S^{n−1}`.
    pub fn omega(&self) -> f64 {
        sphere_area(self.n)
    }

    /// `Γ(n/2)`, exact recursion from `Γ(1/2) = √π`.
    pub fn gamma_half_n(&self) -> f64 {
        gamma_half(self.n)
    }
}

impl TryFrom<usize> for OddDimension {
    type Error = Error;
    fn try_from(n: usize) -> Result<Self> {
        OddDimension::new(n)
    }
}

impl From<OddDimension> for usize {
    fn from(d: OddDimension) -> usize {
        d.n
    }
}

/// `Γ(k/2)` for a positive integer `k`, by the half-integer recursion.
pub fn gamma_half(k: usize) -> f64 {
    assert!(k >= 1);
    let (mut g, mut arg) = if k % 2 == 0 { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
    let target = k as f64 / 2.0;
    while arg < target {
        g *= arg;
        arg += 1.0;
    }
    g
}

/// Surface area of `S^{d−1} ⊂ ℝ^d`: `2π^{d/2}/Γ(d/2)`.
pub fn sphere_area(d: usize) -> f64 {
    2.0 * PI.powf(d as f64 / 2.0) / gamma_half(d)
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// The inversion map `x ↦ x/|x|²`.
pub fn inversion_map(x: &[f64]) -> Result<Vec<f64>> {
    let r2 = dot(x, x);
    if r2 == 0.0 || !r2.is_finite() {
        return Err(Error::Domain("inversion map is undefined at the origin".into()));
    }
    Ok(x.iter().map(|v| v / r2).collect())
}

/// Orthonormal basis of `θ^⊥`, returned as `n − 1` rows of length `n`.
///
/// Coordinate axes are taken in order of increasing `|θ_k|` (ties broken by
/// index) and Gram–Schmidt orthogonalised against `θ`, so the frame is a
/// deterministic function of `θ`, identical for `θ` and `−θ`.
pub fn complete_frame(theta: &[f64]) -> Vec<[f64; MAX_DIM]> {
    let n = theta.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        theta[i]
            .abs()
            .partial_cmp(&theta[j].abs())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let mut frame: Vec<[f64; MAX_DIM]> = Vec::with_capacity(n - 1);
    for &axis in order.iter().take(n - 1) {
        let mut v = [0.0; MAX_DIM];
        v[axis] = 1.0;
        let p = theta[axis];
        for i in 0..n {
            v[i] -= p * theta[i];
        }
        for u in &frame {
            let d = dot(&v[..n], &u[..n]);
            for i in 0..n {
                v[i] -= d * u[i];
            }
        }
        let len = norm(&v[..n]);
        for c in v.iter_mut().take(n) {
            *c /= len;
        }
        frame.push(v);
    }
    frame
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_even_and_small_dimensions() {
        assert!(OddDimension::new(2).is_err());
        assert!(OddDimension::new(4).is_err());
        assert!(OddDimension::new(1).is_err());
        assert!(OddDimension::new(3).is_ok());
        assert!(OddDimension::new(5).is_ok());
    }

    #[test]
    fn sphere_areas() {
        let d3 = OddDimension::new(3).unwrap();
        assert_relative_eq!(d3.omega(), 4.0 * PI, max_relative = 1e-15);
        assert_relative_eq!(d3.gamma_half_n(), PI.sqrt() / 2.0, max_relative = 1e-15);
        let d5 = OddDimension::new(5).unwrap();
        assert_relative_eq!(d5.omega(), 8.0 * PI * PI / 3.0, max_relative = 1e-14);
        assert_relative_eq!(sphere_area(2), 2.0 * PI, max_relative = 1e-15);
        assert_relative_eq!(sphere_area(4), 2.0 * PI * PI, max_relative = 1e-15);
    }

    #[test]
    fn inversion_map_examples() {
        assert_eq!(inversion_map(&[2.0, 0.0, 0.0]).unwrap(), vec![0.5, 0.0, 0.0]);
        assert!(inversion_map(&[0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn inversion_map_is_an_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let y = inversion_map(&inversion_map(&x).unwrap()).unwrap();
            let scale = norm(&x);
            for (a, b) in x.iter().zip(&y) {
                assert!((a - b).abs() <= 1e-14 * scale.max(1.0), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn spheres_through_origin_map_to_planes() {
        let c = [1.0, 0.0, 0.0];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let mut d: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let l = norm(&d);
            d.iter_mut().for_each(|v| *v /= l);
            let x: Vec<f64> = (0..3).map(|i| c[i] + d[i]).collect();
            if norm(&x) < 1e-3 {
                continue;
            }
            let big_x = inversion_map(&x).unwrap();
            assert!((2.0 * dot(&big_x, &c) - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn frame_is_orthonormal_and_even() {
        let theta = [0.3, -0.8, 0.52];
        let l = norm(&theta);
        let theta: Vec<f64> = theta.iter().map(|v| v / l).collect();
        let f = complete_frame(&theta);
        let neg: Vec<f64> = theta.iter().map(|v| -v).collect();
        let g = complete_frame(&neg);
        for (i, u) in f.iter().enumerate() {
            assert!(dot(&u[..3], &theta).abs() < 1e-15);
            assert_relative_eq!(norm(&u[..3]), 1.0, max_relative = 1e-15);
            for w in f.iter().skip(i + 1) {
                assert!(dot(&u[..3], &w[..3]).abs() < 1e-15);
            }
            assert_eq!(u, &g[i]);
        }
    }
}
