//! Interpolation on uniform grids: natural cubic splines from values, and
//! quintic Hermite interpolation from values and two derivatives.

use crate::error::{Error, Result};

/// `C²` piecewise cubic through `(x0 + k·step, y_k)` with zero second
/// derivative at both ends.
#[derive(Clone, Debug)]
pub struct UniformSpline {
    x0: f64,
    step: f64,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl UniformSpline {
    pub fn new(x0: f64, step: f64, y: Vec<f64>) -> Result<Self> {
        let n = y.len();
        if n < 2 || !(step > 0.0) {
            return Err(Error::InvalidParameter("spline needs two or more points and a positive step".into()));
        }
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm for m_{k−1} + 4 m_k + m_{k+1} = 6 δ²y_k / step²
            let inner = n - 2;
            let mut c = vec![0.0; inner];
            let mut d = vec![0.0; inner];
            let scale = 6.0 / (step * step);
            for i in 0..inner {
                let rhs = scale * (y[i] - 2.0 * y[i + 1] + y[i + 2]);
                if i == 0 {
                    c[i] = 1.0 / 4.0;
                    d[i] = rhs / 4.0;
                } else {
                    let denom = 4.0 - c[i - 1];
                    c[i] = 1.0 / denom;
                    d[i] = (rhs - d[i - 1]) / denom;
                }
            }
            m[inner] = d[inner - 1];
            for i in (0..inner - 1).rev() {
                m[i + 1] = d[i] - c[i] * m[i + 2];
            }
        }
        Ok(UniformSpline { x0, step, y, m })
    }

    pub fn lo(&self) -> f64 {
        self.x0
    }

    pub fn hi(&self) -> f64 {
        self.x0 + self.step * (self.y.len() - 1) as f64
    }

    fn locate(&self, x: f64) -> Option<(usize, f64)> {
        let pos = (x - self.x0) / self.step;
        let last = (self.y.len() - 1) as f64;
        if !(pos >= -1e-9) || !(pos <= last + 1e-9) {
            return None;
        }
        let k = (pos.floor().max(0.0) as usize).min(self.y.len() - 2);
        Some((k, pos - k as f64))
    }

    /// Value at `x`, or `None` outside the grid.
    pub fn eval(&self, x: f64) -> Option<f64> {
        let (k, t) = self.locate(x)?;
        let h2 = self.step * self.step;
        let a = 1.0 - t;
        Some(
            a * self.y[k]
                + t * self.y[k + 1]
                + h2 / 6.0 * ((a * a * a - a) * self.m[k] + (t * t * t - t) * self.m[k + 1]),
        )
    }

    /// First derivative at `x`, or `None` outside the grid.
    pub fn derivative(&self, x: f64) -> Option<f64> {
        let (k, t) = self.locate(x)?;
        let a = 1.0 - t;
        Some(
            (self.y[k + 1] - self.y[k]) / self.step
                + self.step / 6.0 * (-(3.0 * a * a - 1.0) * self.m[k] + (3.0 * t * t - 1.0) * self.m[k + 1]),
        )
    }
}

/// `C²` piecewise quintic matching values, first and second derivatives at
/// the nodes `x0 + k·step`.
#[derive(Clone, Debug)]
pub struct UniformQuinticHermite {
    x0: f64,
    step: f64,
    /// `[y, y', y'']` per node
    data: Vec<[f64; 3]>,
}

impl UniformQuinticHermite {
    pub fn new(x0: f64, step: f64, data: Vec<[f64; 3]>) -> Result<Self> {
        if data.len() < 2 || !(step > 0.0) {
            return Err(Error::InvalidParameter("interpolant needs two or more points and a positive step".into()));
        }
        Ok(UniformQuinticHermite { x0, step, data })
    }

    fn locate(&self, x: f64) -> Option<(usize, f64)> {
        let pos = (x - self.x0) / self.step;
        let last = (self.data.len() - 1) as f64;
        if !(pos >= -1e-9) || !(pos <= last + 1e-9) {
            return None;
        }
        let k = (pos.floor().max(0.0) as usize).min(self.data.len() - 2);
        Some((k, pos - k as f64))
    }

    /// Monomial coefficients in the local variable `t ∈ [0, 1]` of cell `k`.
    fn cell(&self, k: usize) -> [f64; 6] {
        let h = self.step;
        let [p0, d0, s0] = self.data[k];
        let [p1, d1, s1] = self.data[k + 1];
        let (v0, v1) = (d0 * h, d1 * h);
        let (a0, a1) = (s0 * h * h, s1 * h * h);
        let big_a = p1 - (p0 + v0 + 0.5 * a0);
        let big_b = v1 - (v0 + a0);
        let big_c = a1 - a0;
        [
            p0,
            v0,
            0.5 * a0,
            10.0 * big_a - 4.0 * big_b + 0.5 * big_c,
            -15.0 * big_a + 7.0 * big_b - big_c,
            6.0 * big_a - 3.0 * big_b + 0.5 * big_c,
        ]
    }

    pub fn eval(&self, x: f64) -> Option<f64> {
        let (k, t) = self.locate(x)?;
        let c = self.cell(k);
        Some(c.iter().rev().fold(0.0, |acc, ci| acc * t + ci))
    }

    pub fn derivative(&self, x: f64) -> Option<f64> {
        let (k, t) = self.locate(x)?;
        let c = self.cell(k);
        let d = (1..6).rev().fold(0.0, |acc, i| acc * t + i as f64 * c[i]);
        Some(d / self.step)
    }
}

/// A one-dimensional interpolant of either kind.
#[derive(Clone, Debug)]
pub enum Interpolant {
    Cubic(UniformSpline),
    Quintic(UniformQuinticHermite),
}

impl Interpolant {
    pub fn eval(&self, x: f64) -> Option<f64> {
        match self {
            Interpolant::Cubic(s) => s.eval(x),
            Interpolant::Quintic(s) => s.eval(x),
        }
    }

    pub fn derivative(&self, x: f64) -> Option<f64> {
        match self {
            Interpolant::Cubic(s) => s.derivative(x),
            Interpolant::Quintic(s) => s.derivative(x),
        }
    }
}
