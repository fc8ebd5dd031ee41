//! Truncated Taylor arithmetic.
//!
//! [`Jet2`] carries value, gradient and Hessian and is what expressions
//! evaluate to. [`Jet1`] carries value and gradient only; it is the scalar
//! type of constructed fields (frames, projectors, the dilation), whose
//! second derivatives would need third derivatives of the map.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Second-order jet in `n` directions. The Hessian is stored as the packed
/// upper triangle, row by row.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub gradient: Vec<f64>,
    hess: Vec<f64>,
}

#[inline]
fn packed_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

impl Jet2 {
    pub fn constant(value: f64, n: usize) -> Self {
        Jet2 {
            value,
            gradient: vec![0.0; n],
            hess: vec![0.0; n * (n + 1) / 2],
        }
    }

    pub fn variable(value: f64, index: usize, n: usize) -> Self {
        let mut j = Jet2::constant(value, n);
        j.gradient[index] = 1.0;
        j
    }

    pub fn dim(&self) -> usize {
        self.gradient.len()
    }

    pub fn hessian(&self, i: usize, j: usize) -> f64 {
        self.hess[packed_index(self.dim(), i, j)]
    }

    /// Dense symmetric Hessian, row-major.
    pub fn hessian_dense(&self) -> Vec<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = self.hessian(i, j);
            }
        }
        out
    }

    /// Drops the Hessian.
    pub fn to_jet1(&self) -> Jet1 {
        Jet1 {
            value: self.value,
            gradient: self.gradient.clone(),
        }
    }

    /// The first-order jet of the partial derivative in direction `i`.
    pub fn partial(&self, i: usize) -> Jet1 {
        let n = self.dim();
        Jet1 {
            value: self.gradient[i],
            gradient: (0..n).map(|j| self.hessian(i, j)).collect(),
        }
    }

    /// Chain rule for a scalar function with derivatives `d1`, `d2` at the value.
    fn compose(&self, value: f64, d1: f64, d2: f64) -> Jet2 {
        let n = self.dim();
        let mut hess = Vec::with_capacity(self.hess.len());
        for i in 0..n {
            for j in i..n {
                hess.push(
                    d1 * self.hess[packed_index(n, i, j)]
                        + d2 * self.gradient[i] * self.gradient[j],
                );
            }
        }
        Jet2 {
            value,
            gradient: self.gradient.iter().map(|g| d1 * g).collect(),
            hess,
        }
    }

    pub fn sin(&self) -> Jet2 {
        let (s, c) = self.value.sin_cos();
        self.compose(s, c, -s)
    }

    pub fn cos(&self) -> Jet2 {
        let (s, c) = self.value.sin_cos();
        self.compose(c, -s, -c)
    }

    pub fn exp(&self) -> Jet2 {
        let e = self.value.exp();
        self.compose(e, e, e)
    }

    pub fn ln(&self) -> Jet2 {
        let x = self.value;
        self.compose(x.ln(), 1.0 / x, -1.0 / (x * x))
    }

    pub fn sqrt(&self) -> Jet2 {
        let r = self.value.sqrt();
        self.compose(r, 0.5 / r, -0.25 / (r * self.value))
    }

    pub fn recip(&self) -> Jet2 {
        let x = self.value;
        self.compose(1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x))
    }

    pub fn powf(&self, c: f64) -> Jet2 {
        let x = self.value;
        if c == 0.0 {
            return Jet2::constant(1.0, self.dim());
        }
        let d1 = if c == 1.0 { 1.0 } else { c * x.powf(c - 1.0) };
        let d2 = if c == 1.0 {
            0.0
        } else if c == 2.0 {
            2.0
        } else {
            c * (c - 1.0) * x.powf(c - 2.0)
        };
        self.compose(x.powf(c), d1, d2)
    }

    pub fn scale(&self, s: f64) -> Jet2 {
        Jet2 {
            value: self.value * s,
            gradient: self.gradient.iter().map(|g| g * s).collect(),
            hess: self.hess.iter().map(|h| h * s).collect(),
        }
    }
}

impl Add for &Jet2 {
    type Output = Jet2;
    fn add(self, rhs: &Jet2) -> Jet2 {
        Jet2 {
            value: self.value + rhs.value,
            gradient: self
                .gradient
                .iter()
                .zip(&rhs.gradient)
                .map(|(a, b)| a + b)
                .collect(),
            hess: self
                .hess
                .iter()
                .zip(&rhs.hess)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &Jet2 {
    type Output = Jet2;
    fn sub(self, rhs: &Jet2) -> Jet2 {
        Jet2 {
            value: self.value - rhs.value,
            gradient: self
                .gradient
                .iter()
                .zip(&rhs.gradient)
                .map(|(a, b)| a - b)
                .collect(),
            hess: self
                .hess
                .iter()
                .zip(&rhs.hess)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: &Jet2) -> Jet2 {
        let n = self.dim();
        let (a, b) = (self, rhs);
        let mut hess = Vec::with_capacity(a.hess.len());
        for i in 0..n {
            for j in i..n {
                let k = packed_index(n, i, j);
                hess.push(
                    a.value * b.hess[k]
                        + b.value * a.hess[k]
                        + a.gradient[i] * b.gradient[j]
                        + a.gradient[j] * b.gradient[i],
                );
            }
        }
        Jet2 {
            value: a.value * b.value,
            gradient: a
                .gradient
                .iter()
                .zip(&b.gradient)
                .map(|(ga, gb)| a.value * gb + b.value * ga)
                .collect(),
            hess,
        }
    }
}

impl Div for &Jet2 {
    type Output = Jet2;
    fn div(self, rhs: &Jet2) -> Jet2 {
        self * &rhs.recip()
    }
}

impl Neg for &Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scale(-1.0)
    }
}

/// First-order jet: value and gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet1 {
    pub value: f64,
    pub gradient: Vec<f64>,
}

impl Jet1 {
    pub fn constant(value: f64, n: usize) -> Self {
        Jet1 {
            value,
            gradient: vec![0.0; n],
        }
    }

    pub fn zero(n: usize) -> Self {
        Jet1::constant(0.0, n)
    }

    pub fn dim(&self) -> usize {
        self.gradient.len()
    }

    /// Directional derivative along `v`.
    pub fn derivative_along(&self, v: &[f64]) -> f64 {
        self.gradient.iter().zip(v).map(|(g, x)| g * x).sum()
    }

    fn compose(&self, value: f64, d1: f64) -> Jet1 {
        Jet1 {
            value,
            gradient: self.gradient.iter().map(|g| d1 * g).collect(),
        }
    }

    pub fn sqrt(&self) -> Jet1 {
        let r = self.value.sqrt();
        self.compose(r, 0.5 / r)
    }

    pub fn ln(&self) -> Jet1 {
        self.compose(self.value.ln(), 1.0 / self.value)
    }

    pub fn recip(&self) -> Jet1 {
        let x = self.value;
        self.compose(1.0 / x, -1.0 / (x * x))
    }

    pub fn scale(&self, s: f64) -> Jet1 {
        self.compose(self.value * s, s)
    }

    /// `self += a * b`
    pub fn add_product(&mut self, a: &Jet1, b: &Jet1) {
        self.value += a.value * b.value;
        for ((s, ga), gb) in self.gradient.iter_mut().zip(&a.gradient).zip(&b.gradient) {
            *s += a.value * gb + b.value * ga;
        }
    }
}

impl Add for &Jet1 {
    type Output = Jet1;
    fn add(self, rhs: &Jet1) -> Jet1 {
        Jet1 {
            value: self.value + rhs.value,
            gradient: self
                .gradient
                .iter()
                .zip(&rhs.gradient)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &Jet1 {
    type Output = Jet1;
    fn sub(self, rhs: &Jet1) -> Jet1 {
        Jet1 {
            value: self.value - rhs.value,
            gradient: self
                .gradient
                .iter()
                .zip(&rhs.gradient)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &Jet1 {
    type Output = Jet1;
    fn mul(self, rhs: &Jet1) -> Jet1 {
        Jet1 {
            value: self.value * rhs.value,
            gradient: self
                .gradient
                .iter()
                .zip(&rhs.gradient)
                .map(|(a, b)| self.value * b + rhs.value * a)
                .collect(),
        }
    }
}

impl Div for &Jet1 {
    type Output = Jet1;
    fn div(self, rhs: &Jet1) -> Jet1 {
        self * &rhs.recip()
    }
}

impl Neg for &Jet1 {
    type Output = Jet1;
    fn neg(self) -> Jet1 {
        self.scale(-1.0)
    }
}
