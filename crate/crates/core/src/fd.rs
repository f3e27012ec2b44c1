//! Central finite differences.

use crate::error::Result;

/// `C(k, i)` as a float.
pub fn binomial(k: usize, i: usize) -> f64 {
    let mut c = 1.0;
    for j in 0..i {
        c = c * (k - j) as f64 / (j + 1) as f64;
    }
    c
}

/// Second-order central approximation of `f^{(k)}(x)`:
/// `h^{−k} Σᵢ (−1)^i C(k, i) f(x + (k/2 − i)h)`.
pub fn central_difference(mut f: impl FnMut(f64) -> Result<f64>, x: f64, k: usize, h: f64) -> Result<f64> {
    if k == 0 {
        return f(x);
    }
    let mut acc = 0.0;
    for i in 0..=k {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let offset = (k as f64 / 2.0 - i as f64) * h;
        acc += sign * binomial(k, i) * f(x + offset)?;
    }
    Ok(acc / h.powi(k as i32))
}

/// `D^k g(t)` with `D = (1/2t)∂ₜ`, by `k` nested central differences of step `dt`.
pub fn nested_d(g: &dyn Fn(f64) -> Result<f64>, t: f64, k: usize, dt: f64) -> Result<f64> {
    if k == 0 {
        return g(t);
    }
    let plus = nested_d(g, t + dt, k - 1, dt)?;
    let minus = nested_d(g, t - dt, k - 1, dt)?;
    Ok((plus - minus) / (4.0 * t * dt))
}

/// Richardson extrapolation of a second-order quantity from steps `h` and `h/2`.
pub fn richardson(coarse: f64, fine: f64) -> f64 {
    (4.0 * fine - coarse) / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 2), 6.0);
        assert_eq!(binomial(5, 0), 1.0);
        assert_eq!(binomial(5, 5), 1.0);
    }

    #[test]
    fn central_differences_are_second_order() {
        for k in 1..=4 {
            let exact = |x: f64| match k % 4 {
                1 => x.cos(),
                2 => -x.sin(),
                3 => -x.cos(),
                _ => x.sin(),
            };
            let err = |h: f64| (central_difference(|x| Ok(x.sin()), 0.7, k, h).unwrap() - exact(0.7)).abs();
            let ratio = err(0.02) / err(0.01);
            assert!((3.5..=4.5).contains(&ratio), "k={k}: {ratio}");
        }
    }

    #[test]
    fn d_operator_differentiates_in_t_squared() {
        // g(t) = t⁶ = (t²)³ ⇒ D g = 3t⁴, D² g = 6t²
        let g = |t: f64| Ok(t.powi(6));
        let t = 1.3;
        assert!((nested_d(&g, t, 1, 1e-4).unwrap() - 3.0 * t.powi(4)).abs() < 1e-6);
        assert!((nested_d(&g, t, 2, 1e-3).unwrap() - 6.0 * t * t).abs() < 1e-4);
        let coarse = nested_d(&g, t, 2, 2e-2).unwrap();
        let fine = nested_d(&g, t, 2, 1e-2).unwrap();
        assert!((richardson(coarse, fine) - 6.0 * t * t).abs() < 1e-6);
    }
}
