use super::{quadrature::RadialRule, SphereQuadrature, MAX_DIM};
use crate::error::{Error, Result};
use crate::fields::{AnalyticField, Support};
use crate::sum::compensated_sum;
use rayon::prelude::*;

/// `∫ |x|^p F(x) dx` over the shell covered by `radial`, in spherical
/// coordinates `∫∫ r^{p+n−1} F(rθ) dr dθ`.
///
/// Sphere nodes are processed in parallel; the reduction runs in node order.
pub fn weighted_volume_integral<F>(
    integrand: F,
    weight_exponent: i32,
    sphere: &SphereQuadrature,
    radial: &RadialRule,
) -> f64
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let n = sphere.ambient_dim();
    let radial_weights: Vec<f64> = radial
        .nodes
        .iter()
        .zip(&radial.weights)
        .map(|(&r, &w)| w * r.powi(weight_exponent + n as i32 - 1))
        .collect();
    let per_dir: Vec<f64> = (0..sphere.len())
        .into_par_iter()
        .map(|j| {
            let theta = sphere.node(j);
            let mut x = [0.0; MAX_DIM];
            let vals = radial.nodes.iter().zip(&radial_weights).map(|(&r, &w)| {
                for i in 0..n {
                    x[i] = r * theta[i];
                }
                w * integrand(&x[..n])
            });
            sphere.weight(j) * compensated_sum(vals.collect::<Vec<_>>())
        })
        .collect();
    compensated_sum(per_dir)
}

/// `∫ |x|^p |h(x)|² dx`. The radial interval must cover the support of `h`.
pub fn annulus_volume_integral(
    field: &AnalyticField,
    weight_exponent: i32,
    sphere: &SphereQuadrature,
    radial: &RadialRule,
) -> Result<f64> {
    match field.support() {
        Support::Empty => return Ok(0.0),
        Support::Everywhere => {
            return Err(Error::Coverage(
                "field has unbounded support; a volume integral over a shell would truncate it"
                    .into(),
            ))
        }
        Support::Annulus { inner, outer } => {
            if radial.lo > inner || radial.hi < outer {
                return Err(Error::Coverage(format!(
                    "radial interval [{}, {}] does not cover the support [{inner}, {outer}]",
                    radial.lo, radial.hi
                )));
            }
        }
    }
    if sphere.ambient_dim() != field.dim().n() {
        return Err(Error::InvalidParameter("sphere rule and field dimensions differ".into()));
    }
    Ok(weighted_volume_integral(
        |x| {
            let v = field.eval(x);
            v * v
        },
        weight_exponent,
        sphere,
        radial,
    ))
}
