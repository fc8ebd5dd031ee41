//! Two-sided pointwise checks of the characterization results for conformal
//! semi-invariant submersions.
//!
//! Every check produces a [`ConditionReport`]: side A is the definition-level
//! statement (brackets, covariant derivatives, second fundamental form), side
//! B the equivalent condition in terms of `T`, `A`, `φ`, `ω`, `B`, `C` and the
//! dilation. All verdicts are sampled: they describe the tested points only.

mod checks;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::submersion::{LocalGeometry, SmoothMap, SplitDims, SubmersionError};

/// Default tolerance for theorem residuals.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;
/// Default bound on `|∇J|` for a source to count as Kähler.
pub const DEFAULT_KAHLER_TOLERANCE: f64 = 1e-9;
/// Bound for the "parallel along" hypotheses of the corollaries.
pub const PARALLEL_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
    Skipped,
}

impl Verdict {
    /// `holds` below `tol`, `fails` above `10·tol`, `inconclusive` between.
    pub fn classify(residual: f64, tol: f64) -> Verdict {
        if residual < tol {
            Verdict::Holds
        } else if residual > 10.0 * tol {
            Verdict::Fails
        } else {
            Verdict::Inconclusive
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::Inconclusive => "inconclusive",
            Verdict::Skipped => "skipped",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One side of a condition at a point.
#[derive(Clone, Debug, PartialEq)]
pub enum Side {
    Value(f64),
    /// The quantifier ranges over an empty frame.
    Vacuous,
    Skipped(String),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionReport {
    pub name: String,
    pub point: Vec<f64>,
    pub residual_a: f64,
    pub residual_b: f64,
    pub verdict_a: Verdict,
    pub verdict_b: Verdict,
    pub agree: bool,
    pub tolerance: f64,
    pub inconclusive_band: (f64, f64),
    pub vacuous_a: bool,
    pub vacuous_b: bool,
    /// Largest mismatch between the two sides of the underlying identity,
    /// where the check has one.
    pub identity_gap: Option<f64>,
    pub skipped: Option<String>,
    pub note: Option<String>,
}

impl ConditionReport {
    pub fn new(name: &str, point: &[f64], tol: f64, a: Side, b: Side) -> Self {
        let mut skipped = None;
        let mut side = |s: Side| match s {
            Side::Value(r) => (r, Verdict::classify(r, tol), false),
            Side::Vacuous => (0.0, Verdict::Holds, true),
            Side::Skipped(reason) => {
                skipped.get_or_insert(reason);
                (0.0, Verdict::Skipped, false)
            }
        };
        let (residual_a, verdict_a, vacuous_a) = side(a);
        let (residual_b, verdict_b, vacuous_b) = side(b);
        let agree = !matches!(
            (verdict_a, verdict_b),
            (Verdict::Holds, Verdict::Fails) | (Verdict::Fails, Verdict::Holds)
        );
        ConditionReport {
            name: name.to_string(),
            point: point.to_vec(),
            residual_a,
            residual_b,
            verdict_a,
            verdict_b,
            agree,
            tolerance: tol,
            inconclusive_band: (tol, 10.0 * tol),
            vacuous_a,
            vacuous_b,
            identity_gap: None,
            skipped,
            note: None,
        }
    }

    pub fn skipped(name: &str, point: &[f64], tol: f64, reason: &str) -> Self {
        ConditionReport::new(
            name,
            point,
            tol,
            Side::Skipped(reason.to_string()),
            Side::Skipped(reason.to_string()),
        )
    }

    pub fn with_gap(mut self, gap: f64) -> Self {
        self.identity_gap = Some(gap);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn is_vacuous(&self) -> bool {
        self.vacuous_a || self.vacuous_b
    }

    /// Agreement, or a disagreement caused by an empty quantifier range.
    pub fn passes(&self) -> bool {
        self.agree || self.is_vacuous()
    }

    pub fn is_skipped(&self) -> bool {
        self.verdict_a == Verdict::Skipped || self.verdict_b == Verdict::Skipped
    }
}

/// `2m = dim D1`, `n = dim D2`, `2r = dim μ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DimensionBookkeeping {
    pub m: usize,
    pub n: usize,
    pub r: usize,
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum TheoremError {
    #[error(
        "dimension bookkeeping violated: dims {dims:?} for a map R^{source_dim} -> R^{target_dim}"
    )]
    Bookkeeping {
        dims: SplitDims,
        source_dim: usize,
        target_dim: usize,
    },
    #[error(transparent)]
    Submersion(#[from] SubmersionError),
}

impl DimensionBookkeeping {
    pub fn from_dims(dims: SplitDims, source: usize, target: usize) -> Result<Self, TheoremError> {
        let err = TheoremError::Bookkeeping {
            dims,
            source_dim: source,
            target_dim: target,
        };
        if !dims.d1.is_multiple_of(2) || !dims.mu.is_multiple_of(2) || dims.jd2 != dims.d2 {
            return Err(err);
        }
        let b = DimensionBookkeeping {
            m: dims.d1 / 2,
            n: dims.d2,
            r: dims.mu / 2,
        };
        if 2 * (b.m + b.n + b.r) != source || b.n + 2 * b.r != target {
            return Err(err);
        }
        Ok(b)
    }

    /// Fiber dimension `2m + n`.
    pub fn fiber_dim(&self) -> usize {
        2 * self.m + self.n
    }
}

/// Whether the source may be treated as Kähler at the tested points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KahlerStatus {
    Verified,
    NotKahler,
    NoComplexStructure,
}

impl KahlerStatus {
    pub fn unmet_reason(self) -> Option<&'static str> {
        match self {
            KahlerStatus::Verified => None,
            KahlerStatus::NotKahler => Some("hypothesis unmet: not Kähler"),
            KahlerStatus::NoComplexStructure => Some("no complex structure"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CheckContext {
    pub tol: f64,
    pub kahler: KahlerStatus,
    /// Only the definition-level sides are evaluated.
    pub machinery_only: bool,
}

impl CheckContext {
    pub fn new(tol: f64, kahler: KahlerStatus) -> Self {
        CheckContext {
            tol,
            kahler,
            machinery_only: false,
        }
    }
}

/// The checks, in report order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    D2Integrable,
    D1Integrability,
    HorizontalIntegrability,
    HomotheticCharacterization,
    HorizontalTotallyGeodesic,
    VerticalTotallyGeodesic,
    D1TotallyGeodesic,
    D2TotallyGeodesic,
    ProductTotalSpace,
    ProductFibers,
    TensionFormula,
    Harmonicity,
    Jd2MuTotallyGeodesic,
    TotallyGeodesicCharacterization,
    AntiHolomorphicIntegrability,
    AntiHolomorphicTotallyGeodesic,
    D2ParallelHomothety,
    MuParallelDilation,
}

impl Check {
    pub const ALL: [Check; 18] = [
        Check::D2Integrable,
        Check::D1Integrability,
        Check::HorizontalIntegrability,
        Check::HomotheticCharacterization,
        Check::HorizontalTotallyGeodesic,
        Check::VerticalTotallyGeodesic,
        Check::D1TotallyGeodesic,
        Check::D2TotallyGeodesic,
        Check::ProductTotalSpace,
        Check::ProductFibers,
        Check::TensionFormula,
        Check::Harmonicity,
        Check::Jd2MuTotallyGeodesic,
        Check::TotallyGeodesicCharacterization,
        Check::AntiHolomorphicIntegrability,
        Check::AntiHolomorphicTotallyGeodesic,
        Check::D2ParallelHomothety,
        Check::MuParallelDilation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::D2Integrable => "d2_integrable",
            Check::D1Integrability => "d1_integrability",
            Check::HorizontalIntegrability => "horizontal_integrability",
            Check::HomotheticCharacterization => "homothetic_characterization",
            Check::HorizontalTotallyGeodesic => "horizontal_totally_geodesic",
            Check::VerticalTotallyGeodesic => "vertical_totally_geodesic",
            Check::D1TotallyGeodesic => "d1_totally_geodesic",
            Check::D2TotallyGeodesic => "d2_totally_geodesic",
            Check::ProductTotalSpace => "product_total_space",
            Check::ProductFibers => "product_fibers",
            Check::TensionFormula => "tension_formula",
            Check::Harmonicity => "harmonicity",
            Check::Jd2MuTotallyGeodesic => "jd2_mu_totally_geodesic",
            Check::TotallyGeodesicCharacterization => "totally_geodesic_characterization",
            Check::AntiHolomorphicIntegrability => "anti_holomorphic_integrability",
            Check::AntiHolomorphicTotallyGeodesic => "anti_holomorphic_totally_geodesic",
            Check::D2ParallelHomothety => "d2_parallel_homothety",
            Check::MuParallelDilation => "mu_parallel_dilation",
        }
    }

    pub fn from_name(name: &str) -> Option<Check> {
        Check::ALL.into_iter().find(|c| c.name() == name)
    }

    /// Checks whose equivalence relies on `∇J = 0`.
    pub fn needs_kahler(self) -> bool {
        !matches!(
            self,
            Check::TensionFormula | Check::Harmonicity | Check::Jd2MuTotallyGeodesic
        )
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Evaluates one check at the point `geo` was built for.
pub fn check_at(
    check: Check,
    geo: &LocalGeometry,
    ctx: &CheckContext,
) -> Result<ConditionReport, TheoremError> {
    checks::evaluate(check, geo, ctx)
}

/// Evaluates one check at every point.
pub fn check_points(
    check: Check,
    map: &SmoothMap,
    points: &[Vec<f64>],
    ctx: &CheckContext,
) -> Result<Vec<ConditionReport>, TheoremError> {
    points
        .iter()
        .map(|p| {
            let geo = LocalGeometry::new(map, p)?;
            check_at(check, &geo, ctx)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_bands() {
        assert_eq!(Verdict::classify(9e-7, 1e-6), Verdict::Holds);
        assert_eq!(Verdict::classify(1e-6, 1e-6), Verdict::Inconclusive);
        assert_eq!(Verdict::classify(9.9e-6, 1e-6), Verdict::Inconclusive);
        assert_eq!(Verdict::classify(1.1e-5, 1e-6), Verdict::Fails);
        assert_eq!(Verdict::classify(f64::NAN, 1e-6), Verdict::Inconclusive);
    }

    #[test]
    fn agreement_rules() {
        let r = ConditionReport::new("x", &[0.0], 1e-6, Side::Value(0.0), Side::Value(1.0));
        assert!(!r.agree && !r.passes());
        let r = ConditionReport::new("x", &[0.0], 1e-6, Side::Value(0.0), Side::Value(5e-6));
        assert!(r.agree);
        let r = ConditionReport::new("x", &[0.0], 1e-6, Side::Value(1.0), Side::Vacuous);
        assert!(!r.agree && r.passes() && r.vacuous_b && r.verdict_b == Verdict::Holds);
        let r = ConditionReport::new(
            "x",
            &[0.0],
            1e-6,
            Side::Value(1.0),
            Side::Skipped("why".into()),
        );
        assert!(r.agree && r.is_skipped());
        assert_eq!(r.skipped.as_deref(), Some("why"));
    }

    #[test]
    fn bookkeeping() {
        let dims = SplitDims {
            d1: 2,
            d2: 2,
            jd2: 2,
            mu: 0,
        };
        let b = DimensionBookkeeping::from_dims(dims, 6, 2).unwrap();
        assert_eq!(b, DimensionBookkeeping { m: 1, n: 2, r: 0 });
        assert_eq!(b.fiber_dim(), 4);
        assert!(DimensionBookkeeping::from_dims(dims, 6, 3).is_err());
    }

    #[test]
    fn names_round_trip() {
        for c in Check::ALL {
            assert_eq!(Check::from_name(c.name()), Some(c));
        }
    }
}
