//! Truncated Taylor series ("jets") in a single variable.
//!
//! A jet of length `len` stores the coefficients `c[k]` of
//! `f(τ) = Σ c[k] τ^k` for `k < len`. Arithmetic on jets propagates exact
//! derivatives through compositions, which is how the analytic fields
//! deliver directional derivatives of any order.

use std::ops::{Add, Mul, Neg, Sub};

/// Maximum number of stored Taylor coefficients.
pub const JET_CAPACITY: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    c: [f64; JET_CAPACITY],
    len: usize,
}

impl Jet {
    pub fn constant(value: f64, len: usize) -> Self {
        assert!(len >= 1 && len <= JET_CAPACITY, "jet length {len} out of range");
        let mut c = [0.0; JET_CAPACITY];
        c[0] = value;
        Jet { c, len }
    }

    pub fn zero(len: usize) -> Self {
        Jet::constant(0.0, len)
    }

    /// The jet of `τ ↦ value + slope·τ`.
    pub fn variable(value: f64, slope: f64, len: usize) -> Self {
        let mut j = Jet::constant(value, len);
        if len > 1 {
            j.c[1] = slope;
        }
        j
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.c[0]
    }

    #[inline]
    pub fn coeff(&self, k: usize) -> f64 {
        if k < self.len {
            self.c[k]
        } else {
            0.0
        }
    }

    /// Sets coefficient `k`; ignored beyond the jet length.
    #[inline]
    pub fn set_coeff(&mut self, k: usize, v: f64) {
        if k < self.len {
            self.c[k] = v;
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c[..self.len]
    }

    /// k-th derivative at τ = 0, i.e. `k! · c[k]`.
    pub fn derivative(&self, k: usize) -> f64 {
        let mut fact = 1.0;
        for i in 2..=k {
            fact *= i as f64;
        }
        self.coeff(k) * fact
    }

    pub fn is_identically_zero(&self) -> bool {
        self.coeffs().iter().all(|&v| v == 0.0)
    }

    pub fn scale(mut self, alpha: f64) -> Self {
        for v in &mut self.c[..self.len] {
            *v *= alpha;
        }
        self
    }

    pub fn add_scalar(mut self, alpha: f64) -> Self {
        self.c[0] += alpha;
        self
    }

    pub fn recip(&self) -> Self {
        let a = &self.c;
        let mut b = [0.0; JET_CAPACITY];
        b[0] = 1.0 / a[0];
        for k in 1..self.len {
            let mut acc = 0.0;
            for i in 1..=k {
                acc += a[i] * b[k - i];
            }
            b[k] = -acc * b[0];
        }
        Jet { c: b, len: self.len }
    }

    pub fn exp(&self) -> Self {
        let a = &self.c;
        let mut e = [0.0; JET_CAPACITY];
        e[0] = a[0].exp();
        for k in 1..self.len {
            let mut acc = 0.0;
            for i in 1..=k {
                acc += i as f64 * a[i] * e[k - i];
            }
            e[k] = acc / k as f64;
        }
        Jet { c: e, len: self.len }
    }

    /// Square root; the constant term must be positive.
    pub fn sqrt(&self) -> Self {
        let a = &self.c;
        let mut s = [0.0; JET_CAPACITY];
        s[0] = a[0].sqrt();
        let two_s0 = 2.0 * s[0];
        for k in 1..self.len {
            let mut acc = a[k];
            for i in 1..k {
                acc -= s[i] * s[k - i];
            }
            s[k] = acc / two_s0;
        }
        Jet { c: s, len: self.len }
    }

    pub fn powi(&self, p: i32) -> Self {
        if p == 0 {
            return Jet::constant(1.0, self.len);
        }
        let base = if p < 0 { self.recip() } else { *self };
        let mut e = p.unsigned_abs();
        let mut acc = Jet::constant(1.0, self.len);
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * sq;
            }
            e >>= 1;
            if e > 0 {
                sq = sq * sq;
            }
        }
        acc
    }

    /// `self^(k/2)` for a jet with positive constant term (typically `|x|²`).
    pub fn pow_half(&self, k: i32) -> Self {
        if k % 2 == 0 {
            self.powi(k / 2)
        } else {
            self.sqrt() * self.powi((k - 1).div_euclid(2))
        }
    }
}

impl Add for Jet {
    type Output = Jet;
    #[inline]
    fn add(mut self, rhs: Jet) -> Jet {
        debug_assert_eq!(self.len, rhs.len);
        for k in 0..self.len {
            self.c[k] += rhs.c[k];
        }
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    #[inline]
    fn sub(mut self, rhs: Jet) -> Jet {
        debug_assert_eq!(self.len, rhs.len);
        for k in 0..self.len {
            self.c[k] -= rhs.c[k];
        }
        self
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    #[inline]
    fn mul(self, rhs: Jet) -> Jet {
        debug_assert_eq!(self.len, rhs.len);
        let mut out = [0.0; JET_CAPACITY];
        for k in 0..self.len {
            let mut acc = 0.0;
            for i in 0..=k {
                acc += self.c[i] * rhs.c[k - i];
            }
            out[k] = acc;
        }
        Jet { c: out, len: self.len }
    }
}
