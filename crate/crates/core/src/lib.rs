//! Numerical engine for conformal semi-invariant submersions from almost
//! Hermitian manifolds: expression evaluation with second-order jets,
//! single-chart Riemannian geometry, the submersion machinery (splittings,
//! O'Neill tensors, second fundamental form) and pointwise checks of the
//! integrability, totally-geodesic and harmonicity characterizations.

pub mod expr;
pub mod geometry;
pub mod jet;
pub mod submersion;
pub mod theorems;

pub use expr::{parse, EvalError, ParseError, ParseErrorKind, ScalarExpr};
pub use geometry::{
    ChartedManifold, ConnectionCoefficients, GeometryError, SampleDomain, VectorField,
};
pub use jet::{Jet1, Jet2};
pub use submersion::{LocalGeometry, SmoothMap, SplitFrame, SubmersionError};
pub use theorems::{Check, CheckContext, ConditionReport, KahlerStatus, Verdict};
