//! Single-chart Riemannian and almost Hermitian manifolds.

pub mod field;
pub mod sampling;

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

use crate::expr::{EvalError, ScalarExpr};
use crate::jet::{Jet1, Jet2};

pub use field::{FieldJet, JetMat, VectorField};
pub use sampling::{ExcludedLocus, SampleDomain};

/// Largest supported chart dimension.
pub const MAX_DIM: usize = 16;

/// Ratio bound for positive definiteness: `λ_min > SPD_RATIO · λ_max`.
pub const SPD_RATIO: f64 = 1e-12;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("metric is not positive definite at the point (eigenvalues in [{min}, {max}])")]
    NotPositiveDefinite { min: f64, max: f64 },
    #[error("manifold has no almost complex structure")]
    MissingComplexStructure,
    #[error("almost complex structure needs an even dimension, got {0}")]
    OddDimension(usize),
    #[error("chart dimension must be in 1..={MAX_DIM}, got {0}")]
    BadDimension(usize),
    #[error("{what}: expected {expected} entries, got {got}")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{what} uses coordinate x{index} on a chart of dimension {dim}")]
    VariableOutOfRange {
        what: &'static str,
        index: usize,
        dim: usize,
    },
    #[error("point has {got} coordinates, chart has {dim}")]
    PointDimension { got: usize, dim: usize },
}

/// A manifold covered by one chart: metric components (upper triangle,
/// packed row by row), optional almost complex structure `J^i_j` (row-major,
/// `(JX)^i = J^i_j X^j`) and the region where points may be sampled.
#[derive(Clone, Debug)]
pub struct ChartedManifold {
    dim: usize,
    metric: Vec<ScalarExpr>,
    complex_structure: Option<Vec<ScalarExpr>>,
    domain: SampleDomain,
}

pub fn upper_index(dim: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * dim - i * (i + 1) / 2 + j
}

impl ChartedManifold {
    pub fn new(
        dim: usize,
        metric_upper: Vec<ScalarExpr>,
        complex_structure: Option<Vec<ScalarExpr>>,
        domain: SampleDomain,
    ) -> Result<Self, GeometryError> {
        if dim == 0 || dim > MAX_DIM {
            return Err(GeometryError::BadDimension(dim));
        }
        let expected = dim * (dim + 1) / 2;
        if metric_upper.len() != expected {
            return Err(GeometryError::Shape {
                what: "metric",
                expected,
                got: metric_upper.len(),
            });
        }
        check_vars("metric", &metric_upper, dim)?;
        if let Some(j) = &complex_structure {
            if !dim.is_multiple_of(2) {
                return Err(GeometryError::OddDimension(dim));
            }
            if j.len() != dim * dim {
                return Err(GeometryError::Shape {
                    what: "complex structure",
                    expected: dim * dim,
                    got: j.len(),
                });
            }
            check_vars("complex structure", j, dim)?;
        }
        if domain.bounds.len() != dim {
            return Err(GeometryError::Shape {
                what: "sample box",
                expected: dim,
                got: domain.bounds.len(),
            });
        }
        Ok(ChartedManifold {
            dim,
            metric: metric_upper,
            complex_structure,
            domain,
        })
    }

    /// Flat `R^dim` with the identity metric.
    pub fn euclidean(dim: usize) -> Self {
        let metric = (0..dim)
            .flat_map(|i| (i..dim).map(move |j| ScalarExpr::Num(if i == j { 1.0 } else { 0.0 })))
            .collect();
        ChartedManifold::new(dim, metric, None, SampleDomain::unbounded(dim))
            .expect("valid euclidean chart")
    }

    /// `J(a¹, a², …) = (−a², a¹, …, −a^{2m}, a^{2m−1})`, i.e. `J∂_{2k-1} = ∂_{2k}`.
    pub fn canonical_complex_structure(dim: usize) -> Vec<ScalarExpr> {
        let mut j = vec![ScalarExpr::Num(0.0); dim * dim];
        for k in (0..dim).step_by(2) {
            j[(k + 1) * dim + k] = ScalarExpr::Num(1.0);
            j[k * dim + k + 1] = ScalarExpr::Num(-1.0);
        }
        j
    }

    pub fn with_complex_structure(self, j: Vec<ScalarExpr>) -> Result<Self, GeometryError> {
        ChartedManifold::new(self.dim, self.metric, Some(j), self.domain)
    }

    pub fn with_domain(self, domain: SampleDomain) -> Result<Self, GeometryError> {
        ChartedManifold::new(self.dim, self.metric, self.complex_structure, domain)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> &SampleDomain {
        &self.domain
    }

    pub fn metric_exprs(&self) -> &[ScalarExpr] {
        &self.metric
    }

    pub fn complex_structure_exprs(&self) -> Option<&[ScalarExpr]> {
        self.complex_structure.as_deref()
    }

    pub fn has_complex_structure(&self) -> bool {
        self.complex_structure.is_some()
    }

    fn check_point(&self, p: &[f64]) -> Result<(), GeometryError> {
        if p.len() != self.dim {
            return Err(GeometryError::PointDimension {
                got: p.len(),
                dim: self.dim,
            });
        }
        Ok(())
    }

    /// Metric matrix at `p`, verified symmetric positive definite.
    pub fn metric_at(&self, p: &[f64]) -> Result<DMatrix<f64>, GeometryError> {
        self.check_point(p)?;
        let n = self.dim;
        let mut g = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.metric[upper_index(n, i, j)].eval(p)?;
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        check_spd(&g)?;
        Ok(g)
    }

    /// Second-order jets of all metric components, dense and mirrored.
    pub fn metric_jets(&self, p: &[f64]) -> Result<Vec<Jet2>, GeometryError> {
        self.check_point(p)?;
        let n = self.dim;
        let upper: Vec<Jet2> = self
            .metric
            .iter()
            .map(|e| e.eval_jet2(p))
            .collect::<Result<_, _>>()?;
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(upper[upper_index(n, i, j)].clone());
            }
        }
        let g = DMatrix::from_fn(n, n, |i, j| out[i * n + j].value);
        check_spd(&g)?;
        Ok(out)
    }

    pub fn metric_jet1(&self, p: &[f64]) -> Result<JetMat, GeometryError> {
        let n = self.dim;
        let jets = self.metric_jets(p)?;
        Ok(JetMat::from_fn(n, n, n, |i, j| jets[i * n + j].to_jet1()))
    }

    pub fn complex_structure_at(&self, p: &[f64]) -> Result<DMatrix<f64>, GeometryError> {
        self.check_point(p)?;
        let j = self
            .complex_structure
            .as_ref()
            .ok_or(GeometryError::MissingComplexStructure)?;
        let n = self.dim;
        let mut m = DMatrix::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                m[(r, c)] = j[r * n + c].eval(p)?;
            }
        }
        Ok(m)
    }

    pub fn complex_structure_jet1(&self, p: &[f64]) -> Result<JetMat, GeometryError> {
        self.check_point(p)?;
        let j = self
            .complex_structure
            .as_ref()
            .ok_or(GeometryError::MissingComplexStructure)?;
        let n = self.dim;
        let jets: Vec<Jet1> = j
            .iter()
            .map(|e| Ok(e.eval_jet2(p)?.to_jet1()))
            .collect::<Result<_, GeometryError>>()?;
        Ok(JetMat::from_fn(n, n, n, |r, c| jets[r * n + c].clone()))
    }

    /// Levi-Civita connection coefficients at `p`.
    pub fn christoffel(&self, p: &[f64]) -> Result<ConnectionCoefficients, GeometryError> {
        let jets = self.metric_jets(p)?;
        Ok(ConnectionCoefficients::from_metric_jets(p, self.dim, &jets))
    }

    /// Residuals of `J² = −I` and `g(JX, JY) = g(X, Y)` (max absolute entry).
    pub fn almost_hermitian_residuals(&self, p: &[f64]) -> Result<(f64, f64), GeometryError> {
        let j = self.complex_structure_at(p)?;
        let g = self.metric_at(p)?;
        let n = self.dim;
        let sq = &j * &j + DMatrix::identity(n, n);
        let compat = j.transpose() * &g * &j - &g;
        Ok((sq.abs().max(), compat.abs().max()))
    }

    /// `max_{i,j} |(∇_{∂i} J) ∂j|_g`, zero exactly when `J` is parallel.
    pub fn nabla_j_residual(&self, p: &[f64]) -> Result<f64, GeometryError> {
        let jm = self.complex_structure_jet1(p)?;
        let gamma = self.christoffel(p)?;
        let g = self.metric_at(p)?;
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                // (∇_i J)^k_j = ∂_i J^k_j + Γ^k_{il} J^l_j − J^k_l Γ^l_{ij}
                let v: Vec<f64> = (0..n)
                    .map(|k| {
                        let mut s = jm.get(k, j).gradient[i];
                        for l in 0..n {
                            s += gamma.get(k, i, l) * jm.get(l, j).value;
                            s -= jm.get(k, l).value * gamma.get(l, i, j);
                        }
                        s
                    })
                    .collect();
                worst = worst.max(norm(&g, &v));
            }
        }
        Ok(worst)
    }
}

fn check_vars(what: &'static str, exprs: &[ScalarExpr], dim: usize) -> Result<(), GeometryError> {
    for e in exprs {
        if let Some(i) = e.max_var() {
            if i >= dim {
                return Err(GeometryError::VariableOutOfRange {
                    what,
                    index: i + 1,
                    dim,
                });
            }
        }
    }
    Ok(())
}

fn check_spd(g: &DMatrix<f64>) -> Result<(), GeometryError> {
    let eig = SymmetricEigen::new(g.clone()).eigenvalues;
    let min = eig.min();
    let max = eig.max();
    if !(max > 0.0 && min > SPD_RATIO * max) {
        return Err(GeometryError::NotPositiveDefinite { min, max });
    }
    Ok(())
}

pub fn inner(g: &DMatrix<f64>, u: &[f64], v: &[f64]) -> f64 {
    let n = u.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += u[i] * g[(i, j)] * v[j];
        }
    }
    s
}

pub fn norm(g: &DMatrix<f64>, v: &[f64]) -> f64 {
    inner(g, v, v).max(0.0).sqrt()
}

/// `Γ^k_{ij}` at a point, symmetric in the lower indices.
#[derive(Clone, Debug, PartialEq)]
pub struct ConnectionCoefficients {
    pub point: Vec<f64>,
    dim: usize,
    gamma: Vec<f64>,
}

impl ConnectionCoefficients {
    /// `Γ^k_{ij} = ½ g^{kl}(∂_i g_{jl} + ∂_j g_{il} − ∂_l g_{ij})`, computed for
    /// `i ≤ j` and mirrored.
    pub fn from_metric_jets(p: &[f64], n: usize, g: &[Jet2]) -> Self {
        let gm = DMatrix::from_fn(n, n, |i, j| g[i * n + j].value);
        let ginv = gm
            .try_inverse()
            .expect("positive definite metric is invertible");
        let dg = |i: usize, j: usize, l: usize| g[i * n + j].gradient[l];
        let mut gamma = vec![0.0; n * n * n];
        for i in 0..n {
            for j in i..n {
                for k in 0..n {
                    let mut s = 0.0;
                    for l in 0..n {
                        s += ginv[(k, l)] * (dg(j, l, i) + dg(i, l, j) - dg(i, j, l));
                    }
                    gamma[(k * n + i) * n + j] = 0.5 * s;
                    gamma[(k * n + j) * n + i] = 0.5 * s;
                }
            }
        }
        ConnectionCoefficients {
            point: p.to_vec(),
            dim: n,
            gamma,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `Γ^k_{ij}`
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.gamma[(k * self.dim + i) * self.dim + j]
    }

    /// `Γ(u, v)^k = Γ^k_{ij} u^i v^j`
    pub fn contract(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let n = self.dim;
        (0..n)
            .map(|k| {
                let mut s = 0.0;
                for i in 0..n {
                    if u[i] == 0.0 {
                        continue;
                    }
                    for j in 0..n {
                        s += self.get(k, i, j) * u[i] * v[j];
                    }
                }
                s
            })
            .collect()
    }
}

/// `(∇_X Y)^k = X^i ∂_i Y^k + Γ^k_{ij} X^i Y^j` for a field given by its jets.
pub fn nabla_jet(gamma: &ConnectionCoefficients, x: &[f64], y: &[Jet1]) -> Vec<f64> {
    let yv = field::field_values(y);
    let dy = field::derivative_along(y, x);
    let g = gamma.contract(x, &yv);
    dy.iter().zip(g).map(|(a, b)| a + b).collect()
}

/// `[X, Y]^k = X^i ∂_i Y^k − Y^i ∂_i X^k`
pub fn bracket_jet(x: &[Jet1], y: &[Jet1]) -> Vec<f64> {
    let xv = field::field_values(x);
    let yv = field::field_values(y);
    let a = field::derivative_along(y, &xv);
    let b = field::derivative_along(x, &yv);
    a.iter().zip(b).map(|(u, v)| u - v).collect()
}

/// Covariant derivative `∇_X Y` at `p`.
pub fn covariant_derivative(
    m: &ChartedManifold,
    y: &VectorField,
    x: &[f64],
    p: &[f64],
) -> Result<Vec<f64>, GeometryError> {
    let gamma = m.christoffel(p)?;
    let yj = y.jet(p)?;
    Ok(nabla_jet(&gamma, x, &yj))
}

/// Lie bracket `[X, Y]` at `p`.
pub fn lie_bracket(x: &VectorField, y: &VectorField, p: &[f64]) -> Result<Vec<f64>, GeometryError> {
    Ok(bracket_jet(&x.jet(p)?, &y.jet(p)?))
}
