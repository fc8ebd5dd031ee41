//! Jet-valued vectors and matrices, and vector fields that can be evaluated
//! to first order around a point.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::expr::ScalarExpr;
use crate::jet::Jet1;

use super::GeometryError;

/// Components of a vector field together with their first derivatives at a
/// point.
pub type FieldJet = Vec<Jet1>;

pub fn field_values(f: &[Jet1]) -> Vec<f64> {
    f.iter().map(|c| c.value).collect()
}

/// Field with constant coordinate components.
pub fn constant_field(v: &[f64], n: usize) -> FieldJet {
    v.iter().map(|&x| Jet1::constant(x, n)).collect()
}

/// Directional derivative of every component along `v`.
pub fn derivative_along(f: &[Jet1], v: &[f64]) -> Vec<f64> {
    f.iter().map(|c| c.derivative_along(v)).collect()
}

pub fn field_add(a: &[Jet1], b: &[Jet1]) -> FieldJet {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn field_sub(a: &[Jet1], b: &[Jet1]) -> FieldJet {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn field_scale(a: &[Jet1], s: &Jet1) -> FieldJet {
    a.iter().map(|x| x * s).collect()
}

/// `Σ c_k f_k` with constant coefficients.
pub fn field_combination(fields: &[FieldJet], coeffs: &[f64], n: usize, dim: usize) -> FieldJet {
    let mut out = vec![Jet1::zero(n); dim];
    for (f, &c) in fields.iter().zip(coeffs) {
        if c == 0.0 {
            continue;
        }
        for (o, x) in out.iter_mut().zip(f) {
            *o = &*o + &x.scale(c);
        }
    }
    out
}

/// Dense matrix of first-order jets.
#[derive(Clone, Debug, PartialEq)]
pub struct JetMat {
    rows: usize,
    cols: usize,
    /// number of jet directions
    n: usize,
    data: Vec<Jet1>,
}

impl JetMat {
    pub fn from_fn(
        rows: usize,
        cols: usize,
        n: usize,
        mut f: impl FnMut(usize, usize) -> Jet1,
    ) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        JetMat {
            rows,
            cols,
            n,
            data,
        }
    }

    pub fn zeros(rows: usize, cols: usize, n: usize) -> Self {
        JetMat::from_fn(rows, cols, n, |_, _| Jet1::zero(n))
    }

    pub fn identity(size: usize, n: usize) -> Self {
        JetMat::from_fn(size, size, n, |i, j| {
            Jet1::constant(if i == j { 1.0 } else { 0.0 }, n)
        })
    }

    pub fn constant(m: &DMatrix<f64>, n: usize) -> Self {
        JetMat::from_fn(m.nrows(), m.ncols(), n, |i, j| Jet1::constant(m[(i, j)], n))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn directions(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &Jet1 {
        &self.data[i * self.cols + j]
    }

    pub fn values(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).value)
    }

    /// Matrix of derivatives in jet direction `k`.
    pub fn derivative(&self, k: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).gradient[k])
    }

    fn from_parts(value: &DMatrix<f64>, derivs: &[DMatrix<f64>]) -> Self {
        let n = derivs.len();
        JetMat::from_fn(value.nrows(), value.ncols(), n, |i, j| Jet1 {
            value: value[(i, j)],
            gradient: derivs.iter().map(|d| d[(i, j)]).collect(),
        })
    }

    pub fn transpose(&self) -> Self {
        JetMat::from_fn(self.cols, self.rows, self.n, |i, j| self.get(j, i).clone())
    }

    pub fn mul(&self, rhs: &JetMat) -> Self {
        assert_eq!(self.cols, rhs.rows);
        let v = self.values() * rhs.values();
        let (a, b) = (self.values(), rhs.values());
        let derivs: Vec<_> = (0..self.n)
            .map(|k| self.derivative(k) * &b + &a * rhs.derivative(k))
            .collect();
        JetMat::from_parts(&v, &derivs)
    }

    pub fn mul_vec(&self, v: &[Jet1]) -> FieldJet {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = Jet1::zero(self.n);
                for (j, x) in v.iter().enumerate() {
                    acc.add_product(self.get(i, j), x);
                }
                acc
            })
            .collect()
    }

    pub fn add(&self, rhs: &JetMat) -> Self {
        JetMat::from_fn(self.rows, self.cols, self.n, |i, j| {
            self.get(i, j) + rhs.get(i, j)
        })
    }

    pub fn sub(&self, rhs: &JetMat) -> Self {
        JetMat::from_fn(self.rows, self.cols, self.n, |i, j| {
            self.get(i, j) - rhs.get(i, j)
        })
    }

    pub fn scale(&self, s: f64) -> Self {
        JetMat::from_fn(self.rows, self.cols, self.n, |i, j| self.get(i, j).scale(s))
    }

    /// Inverse using `d(A⁻¹) = -A⁻¹ dA A⁻¹`.
    pub fn inverse(&self) -> Option<Self> {
        let inv = self.values().try_inverse()?;
        let derivs: Vec<_> = (0..self.n)
            .map(|k| -(&inv * self.derivative(k) * &inv))
            .collect();
        Some(JetMat::from_parts(&inv, &derivs))
    }

    /// Bilinear form `uᵀ A v` as a jet.
    pub fn bilinear(&self, u: &[Jet1], v: &[Jet1]) -> Jet1 {
        let av = self.mul_vec(v);
        let mut acc = Jet1::zero(self.n);
        for (a, b) in u.iter().zip(&av) {
            acc.add_product(a, b);
        }
        acc
    }
}

/// Orthonormalises `seeds` against the metric `g`, in order, keeping vectors
/// whose residual norm exceeds `rel_tol` times their original norm. Stops
/// once `want` vectors are accepted. Each residual is projected twice.
pub fn gram_schmidt(g: &JetMat, seeds: &[FieldJet], want: usize, rel_tol: f64) -> Vec<FieldJet> {
    let mut basis: Vec<FieldJet> = Vec::with_capacity(want);
    for s in seeds {
        if basis.len() == want {
            break;
        }
        let seed_norm = g.bilinear(s, s).value.max(0.0).sqrt();
        if seed_norm == 0.0 {
            continue;
        }
        let mut r = s.clone();
        for _ in 0..2 {
            for e in &basis {
                let c = g.bilinear(e, &r);
                r = field_sub(&r, &field_scale(e, &c));
            }
        }
        let norm2 = g.bilinear(&r, &r);
        if norm2.value <= (rel_tol * seed_norm).powi(2) {
            continue;
        }
        let inv = norm2.sqrt().recip();
        basis.push(field_scale(&r, &inv));
    }
    basis
}

/// Projector `Σ e eᵀ g` onto the span of a `g`-orthonormal family.
pub fn projector(g: &JetMat, frame: &[FieldJet], dim: usize, n: usize) -> JetMat {
    // (e eᵀ g)_{ij} = e_i (g e)_j
    let mut p = JetMat::zeros(dim, dim, n);
    for e in frame {
        let ge = g.mul_vec(e);
        let outer = JetMat::from_fn(dim, dim, n, |i, j| &e[i] * &ge[j]);
        p = p.add(&outer);
    }
    p
}

type DerivedFn = dyn Fn(&[f64]) -> Result<FieldJet, GeometryError> + Send + Sync;

/// A vector field on a chart.
#[derive(Clone)]
pub enum VectorField {
    /// Components given as expressions.
    Components(Vec<ScalarExpr>),
    /// Computed field: returns component jets at any point.
    Derived(Arc<DerivedFn>),
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VectorField::Components(c) => f.debug_tuple("Components").field(c).finish(),
            VectorField::Derived(_) => f.write_str("Derived(..)"),
        }
    }
}

impl VectorField {
    pub fn derived(
        f: impl Fn(&[f64]) -> Result<FieldJet, GeometryError> + Send + Sync + 'static,
    ) -> Self {
        VectorField::Derived(Arc::new(f))
    }

    pub fn constant(v: Vec<f64>) -> Self {
        VectorField::Components(v.into_iter().map(ScalarExpr::Num).collect())
    }

    /// Coordinate field `∂_i` in a chart of dimension `dim`.
    pub fn coordinate(i: usize, dim: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        VectorField::constant(v)
    }

    pub fn jet(&self, p: &[f64]) -> Result<FieldJet, GeometryError> {
        match self {
            VectorField::Components(c) => c.iter().map(|e| Ok(e.eval_jet2(p)?.to_jet1())).collect(),
            VectorField::Derived(f) => f(p),
        }
    }
}
