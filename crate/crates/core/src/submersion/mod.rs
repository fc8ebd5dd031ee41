//! Smooth maps between charts and everything attached to a submersion at a
//! point: splittings of the tangent space, the dilation, the `φ/ω/B/C`
//! decompositions, O'Neill tensors, second fundamental form and tension.

mod frame;
mod tensors;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::ScalarExpr;
use crate::geometry::{ChartedManifold, GeometryError};
use crate::jet::Jet2;

pub use frame::{FrameTolerances, LocalGeometry, Refinement, SplitFrame, StructuralResiduals};
pub use tensors::{Extension, GradLnLambda, Lemma1Residuals};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum SubmersionError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("map has {got} components, target dimension is {expected}")]
    ComponentCount { got: usize, expected: usize },
    #[error("map component {component} uses x{index}, source dimension is {dim}")]
    VariableOutOfRange {
        component: usize,
        index: usize,
        dim: usize,
    },
    #[error("target dimension {target_dim} exceeds source dimension {source_dim}")]
    TargetTooLarge {
        source_dim: usize,
        target_dim: usize,
    },
    #[error("critical point: Jacobian rank {rank} is below {expected}")]
    CriticalPoint { rank: usize, expected: usize },
    #[error("not horizontally conformal: residual {residual:.3e} exceeds {limit:.3e}")]
    NotConformal { residual: f64, limit: f64 },
    #[error("splitting ambiguous at {point:?}: singular value {value} is near the D1 threshold")]
    SplittingAmbiguous { point: Vec<f64>, value: f64 },
    #[error("not semi-invariant at {point:?}: P_V J P_V has singular value {value:.3e}")]
    NotSemiInvariant { point: Vec<f64>, value: f64 },
    #[error("invariant vertical distribution has odd dimension {0}")]
    OddInvariantDimension(usize),
    #[error("vector is not vertical (horizontal part {0:.3e})")]
    NotVertical(f64),
    #[error("vector is not horizontal (vertical part {0:.3e})")]
    NotHorizontal(f64),
    #[error("vector has {got} components, expected {expected}")]
    VectorLength { got: usize, expected: usize },
}

/// `F : M → N` given by one expression per target coordinate.
#[derive(Clone, Debug)]
pub struct SmoothMap {
    source: ChartedManifold,
    target: ChartedManifold,
    components: Vec<ScalarExpr>,
}

impl SmoothMap {
    pub fn new(
        source: ChartedManifold,
        target: ChartedManifold,
        components: Vec<ScalarExpr>,
    ) -> Result<Self, SubmersionError> {
        if components.len() != target.dim() {
            return Err(SubmersionError::ComponentCount {
                got: components.len(),
                expected: target.dim(),
            });
        }
        if target.dim() > source.dim() {
            return Err(SubmersionError::TargetTooLarge {
                source_dim: source.dim(),
                target_dim: target.dim(),
            });
        }
        for (a, c) in components.iter().enumerate() {
            if let Some(i) = c.max_var() {
                if i >= source.dim() {
                    return Err(SubmersionError::VariableOutOfRange {
                        component: a + 1,
                        index: i + 1,
                        dim: source.dim(),
                    });
                }
            }
        }
        Ok(SmoothMap {
            source,
            target,
            components,
        })
    }

    pub fn source(&self) -> &ChartedManifold {
        &self.source
    }

    pub fn target(&self) -> &ChartedManifold {
        &self.target
    }

    pub fn components(&self) -> &[ScalarExpr] {
        &self.components
    }

    /// Number of fiber directions, `dim M − dim N`.
    pub fn fiber_dim(&self) -> usize {
        self.source.dim() - self.target.dim()
    }

    pub fn eval(&self, p: &[f64]) -> Result<Vec<f64>, SubmersionError> {
        self.check_point(p)?;
        Ok(self
            .components
            .iter()
            .map(|c| c.eval(p))
            .collect::<Result<_, _>>()
            .map_err(GeometryError::from)?)
    }

    pub fn component_jets(&self, p: &[f64]) -> Result<Vec<Jet2>, SubmersionError> {
        self.check_point(p)?;
        Ok(self
            .components
            .iter()
            .map(|c| c.eval_jet2(p))
            .collect::<Result<_, _>>()
            .map_err(GeometryError::from)?)
    }

    fn check_point(&self, p: &[f64]) -> Result<(), SubmersionError> {
        if p.len() != self.source.dim() {
            return Err(GeometryError::PointDimension {
                got: p.len(),
                dim: self.source.dim(),
            }
            .into());
        }
        Ok(())
    }
}

/// Relative singular value below which the Jacobian is considered rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Jacobian `∂F^a/∂x^i` at `p`; fails at critical points.
pub fn jacobian(map: &SmoothMap, p: &[f64]) -> Result<DMatrix<f64>, SubmersionError> {
    let jets = map.component_jets(p)?;
    let n = map.source.dim();
    let jac = DMatrix::from_fn(jets.len(), n, |a, i| jets[a].gradient[i]);
    check_rank(&jac)?;
    Ok(jac)
}

pub(crate) fn check_rank(jac: &DMatrix<f64>) -> Result<(), SubmersionError> {
    let expected = jac.nrows();
    if expected == 0 {
        return Ok(());
    }
    let sv = jac.clone().svd(false, false).singular_values;
    let max = sv.max();
    let rank = sv
        .iter()
        .filter(|&&s| max > 0.0 && s > RANK_TOLERANCE * max)
        .count();
    if rank < expected {
        return Err(SubmersionError::CriticalPoint { rank, expected });
    }
    Ok(())
}

/// Builds the split frame at `p` with default tolerances.
pub fn split_frame(map: &SmoothMap, p: &[f64]) -> Result<SplitFrame, SubmersionError> {
    Ok(LocalGeometry::new(map, p)?.split_frame())
}

/// Per-point counts `(dim D1, dim D2, dim JD2, dim μ)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitDims {
    pub d1: usize,
    pub d2: usize,
    pub jd2: usize,
    pub mu: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::geometry::SampleDomain;

    fn flat(dim: usize) -> ChartedManifold {
        ChartedManifold::euclidean(dim)
            .with_domain(SampleDomain::cube(dim, -1.0, 1.0))
            .unwrap()
    }

    fn comps(exprs: &[&str], dim: usize) -> Vec<ScalarExpr> {
        exprs.iter().map(|e| parse(e, dim).unwrap()).collect()
    }

    #[test]
    fn jacobian_of_example_map() {
        let f = SmoothMap::new(
            flat(6),
            flat(2),
            comps(&["exp(x3)*cos(x5)", "exp(x3)*sin(x5)"], 6),
        )
        .unwrap();
        let t = std::f64::consts::FRAC_PI_6;
        let j = jacobian(&f, &[0.0, 0.0, 0.0, 0.0, t, 0.0]).unwrap();
        let expect = DMatrix::from_row_slice(
            2,
            6,
            &[
                0.0,
                0.0,
                t.cos(),
                0.0,
                -t.sin(),
                0.0,
                0.0,
                0.0,
                t.sin(),
                0.0,
                t.cos(),
                0.0,
            ],
        );
        assert!((j - expect).abs().max() < 1e-15);
    }

    #[test]
    fn jacobian_of_projection_and_critical_point() {
        let f = SmoothMap::new(flat(4), flat(2), comps(&["x1", "x2"], 4)).unwrap();
        let j = jacobian(&f, &[0.3, 0.1, -0.2, 0.5]).unwrap();
        assert_eq!(
            j,
            DMatrix::from_row_slice(2, 4, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0])
        );

        let g = SmoothMap::new(flat(2), flat(1), comps(&["x1*x2"], 2)).unwrap();
        let j = jacobian(&g, &[0.5, 0.25]).unwrap();
        assert_eq!(j, DMatrix::from_row_slice(1, 2, &[0.25, 0.5]));
        assert_eq!(
            jacobian(&g, &[0.0, 0.0]),
            Err(SubmersionError::CriticalPoint {
                rank: 0,
                expected: 1
            })
        );
    }

    #[test]
    fn map_validation() {
        assert!(matches!(
            SmoothMap::new(flat(2), flat(1), comps(&["x1", "x2"], 2)),
            Err(SubmersionError::ComponentCount {
                got: 2,
                expected: 1
            })
        ));
        assert!(matches!(
            SmoothMap::new(flat(2), flat(1), comps(&["x3"], 3)),
            Err(SubmersionError::VariableOutOfRange { index: 3, .. })
        ));
    }
}
