//! Evaluates a scene: sampling, structure detection, Kähler gate and checks.

use rayon::prelude::*;
use semisub_core::theorems::check_at;
use semisub_core::{Check, CheckContext, KahlerStatus, LocalGeometry};

use crate::report::{
    CheckSummary, Engine, KahlerSummary, PointResult, PointSummary, RunReport, StructureSummary,
    EXIT_DISAGREEMENT, EXIT_HYPOTHESIS, EXIT_OK, EXIT_STRUCTURAL,
};
use crate::scene::Scene;

/// Bound on frame, projector and splitting residuals.
pub const STRUCTURAL_TOLERANCE: f64 = 1e-9;
/// Bound on the conformal second fundamental form identities.
pub const LEMMA_TOLERANCE: f64 = 1e-7;
/// Bound on `J² + I` and on the compatibility of `J` with the metric.
pub const HERMITIAN_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub only: Option<Vec<Check>>,
    pub points: Option<usize>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    /// Report a non-Kähler source with exit code 0 instead of 5.
    pub allow_warnings: bool,
}

struct PointEval {
    summary: PointSummary,
    results: Vec<Result<PointResult, String>>,
}

pub fn run(scene: &Scene, opts: &RunOptions) -> RunReport {
    let count = opts.points.unwrap_or(scene.sampling.count);
    let seed = opts.seed.unwrap_or(scene.sampling.seed);
    let tol = opts.tol.unwrap_or(scene.tolerances.theorem);
    let checks: Vec<Check> = opts.only.clone().unwrap_or_else(|| Check::ALL.to_vec());
    let map = &scene.map;

    let sample = map.source().domain().sample(count, seed, |_| true);
    let points = sample.points;
    let mut failures = Vec::new();
    if points.len() < count {
        failures.push(format!(
            "sampler produced {} of {count} points ({} rejected)",
            points.len(),
            sample.rejected
        ));
    }

    let kahler = kahler_summary(scene, &points, &mut failures);
    let ctx = CheckContext {
        tol,
        kahler: kahler.status,
        machinery_only: scene.flags.machinery_only,
    };

    let evals: Vec<PointEval> = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| evaluate_point(scene, i, p, &checks, &ctx))
        .collect();

    let mut max_structural = 0.0f64;
    let mut max_lemma = 0.0f64;
    let mut dims = None;
    let mut dims_constant = true;
    for e in &evals {
        let s = &e.summary;
        if let Some(err) = &s.error {
            failures.push(format!("point {}: {err}", s.index));
            continue;
        }
        let structural = s.structural.unwrap_or(0.0);
        let lemma = s.lemma.unwrap_or(0.0);
        max_structural = max_structural.max(structural);
        max_lemma = max_lemma.max(lemma);
        if structural > STRUCTURAL_TOLERANCE {
            failures.push(format!(
                "point {}: structural residual {structural:.3e}",
                s.index
            ));
        }
        if lemma > LEMMA_TOLERANCE {
            failures.push(format!(
                "point {}: sff identity residual {lemma:.3e}",
                s.index
            ));
        }
        match (dims, s.dims) {
            (None, d) => dims = d,
            (Some(a), Some(b)) if a != b => dims_constant = false,
            _ => {}
        }
    }
    if !dims_constant {
        failures.push("splitting dimensions vary across points".into());
    }

    let mut summaries = Vec::with_capacity(checks.len());
    for (c, check) in checks.iter().enumerate() {
        let mut results = Vec::new();
        for e in &evals {
            match e.results.get(c) {
                Some(Ok(r)) => results.push(r.clone()),
                Some(Err(msg)) => failures.push(format!(
                    "point {}: {}: {msg}",
                    e.summary.index,
                    check.name()
                )),
                None => {}
            }
        }
        summaries.push(CheckSummary::from_results(check.name(), results));
    }

    let exit_code = if !failures.is_empty() {
        EXIT_STRUCTURAL
    } else if summaries.iter().any(|s| !s.all_pass()) {
        EXIT_DISAGREEMENT
    } else if kahler.status == KahlerStatus::NotKahler && !opts.allow_warnings {
        EXIT_HYPOTHESIS
    } else {
        EXIT_OK
    };

    RunReport {
        scene: scene.name.clone(),
        engine: Engine {
            name: "semisub".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed,
            points: count,
            tolerance: tol,
            kahler_tolerance: scene.tolerances.kahler,
            machinery_only: scene.flags.machinery_only,
            scope: "sampled".into(),
        },
        kahler,
        structure: StructureSummary {
            dims,
            dims_constant,
            max_structural,
            max_lemma,
            failures,
        },
        points: evals.into_iter().map(|e| e.summary).collect(),
        checks: summaries,
        exit_code,
    }
}

fn kahler_summary(scene: &Scene, points: &[Vec<f64>], failures: &mut Vec<String>) -> KahlerSummary {
    let src = scene.source();
    let mut summary = KahlerSummary {
        status: KahlerStatus::NoComplexStructure,
        expected: scene.flags.kahler_expected,
        square: 0.0,
        compatibility: 0.0,
        nabla_j: 0.0,
    };
    if !src.has_complex_structure() {
        if scene.flags.kahler_expected {
            failures.push("scene declares a Kähler source without a complex structure".into());
        }
        return summary;
    }
    let residuals: Vec<_> = points
        .par_iter()
        .map(|p| {
            let (sq, compat) = src.almost_hermitian_residuals(p)?;
            Ok::<_, semisub_core::GeometryError>((sq, compat, src.nabla_j_residual(p)?))
        })
        .collect();
    for (i, r) in residuals.into_iter().enumerate() {
        match r {
            Ok((sq, compat, nj)) => {
                summary.square = summary.square.max(sq);
                summary.compatibility = summary.compatibility.max(compat);
                summary.nabla_j = summary.nabla_j.max(nj);
            }
            Err(e) => failures.push(format!("point {i}: {e}")),
        }
    }
    if summary.square > HERMITIAN_TOLERANCE || summary.compatibility > HERMITIAN_TOLERANCE {
        failures.push(format!(
            "complex structure is not almost Hermitian (|J²+I| {:.3e}, |g(J·,J·)−g| {:.3e})",
            summary.square, summary.compatibility
        ));
    }
    let tol = scene.tolerances.kahler;
    summary.status = if summary.nabla_j < tol
        && summary.square <= HERMITIAN_TOLERANCE
        && summary.compatibility <= HERMITIAN_TOLERANCE
    {
        KahlerStatus::Verified
    } else {
        KahlerStatus::NotKahler
    };
    if summary.status == KahlerStatus::NotKahler && scene.flags.kahler_expected {
        failures.push(format!(
            "source declared Kähler but |∇J| reaches {:.3e}",
            summary.nabla_j
        ));
    }
    summary
}

fn evaluate_point(
    scene: &Scene,
    index: usize,
    p: &[f64],
    checks: &[Check],
    ctx: &CheckContext,
) -> PointEval {
    let mut summary = PointSummary {
        index,
        x: p.to_vec(),
        lambda: None,
        dims: None,
        structural: None,
        lemma: None,
        error: None,
    };
    let geo = match LocalGeometry::new(&scene.map, p) {
        Ok(g) => g,
        Err(e) => {
            summary.error = Some(e.to_string());
            return PointEval {
                summary,
                results: Vec::new(),
            };
        }
    };
    let r = &geo.residuals;
    let lam2 = geo.lambda_sq.value.max(1.0);
    let jac = geo.jac_values.abs().max().max(1.0);
    let structural = [
        r.orthonormality,
        r.projector_sum,
        r.d1_invariance,
        r.d2_anti_invariance,
        r.vertical_kernel / jac,
        r.pushed_orthogonality / lam2,
    ]
    .into_iter()
    .fold(0.0, f64::max);
    summary.lambda = Some(geo.lambda());
    summary.dims = geo.refinement().map(|_| geo.dims());
    summary.structural = Some(structural);
    summary.lemma = Some(geo.verify_lemma1().max());
    let results = checks
        .iter()
        .map(|&c| {
            check_at(c, &geo, ctx)
                .map(|r| PointResult::from_report(index, &r))
                .map_err(|e| e.to_string())
        })
        .collect();
    PointEval { summary, results }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::load_preset;

    fn quick(name: &str, n: usize) -> RunReport {
        let scene = load_preset(name).unwrap().unwrap();
        run(
            &scene,
            &RunOptions {
                points: Some(n),
                ..Default::default()
            },
        )
    }

    #[test]
    fn projection_is_clean() {
        let r = quick("linproj42", 10);
        assert_eq!(r.exit_code, EXIT_OK);
        assert_eq!(r.kahler.status, KahlerStatus::Verified);
        for c in &r.checks {
            assert!(
                c.max_residual_a <= 1e-12 && c.max_residual_b <= 1e-12,
                "{}",
                c.name
            );
        }
    }

    #[test]
    fn machinery_presets_skip_refinement_checks() {
        let r = quick("exp1", 10);
        assert_eq!(r.kahler.status, KahlerStatus::NoComplexStructure);
        assert!(r.structure.max_lemma < 1e-7);
        let d1 = r
            .checks
            .iter()
            .find(|c| c.name == "d1_integrability")
            .unwrap();
        assert_eq!(d1.skip_reasons, vec!["no complex structure".to_string()]);
        assert_eq!(r.exit_code, EXIT_OK);
    }

    #[test]
    fn example_reports_known_disagreement() {
        let r = quick("example33", 10);
        assert!(
            r.structure.failures.is_empty(),
            "{:?}",
            r.structure.failures
        );
        for p in &r.points {
            assert!((p.lambda.unwrap() - p.x[2].exp()).abs() < 1e-9 * p.x[2].exp());
        }
        let bad: Vec<&str> = r
            .checks
            .iter()
            .filter(|c| !c.all_pass())
            .map(|c| c.name.as_str())
            .collect();
        assert_eq!(
            bad,
            ["homothetic_characterization", "d2_parallel_homothety"]
        );
        assert_eq!(r.exit_code, EXIT_DISAGREEMENT);
    }

    #[test]
    fn filter_limits_checks() {
        let scene = load_preset("holo4").unwrap().unwrap();
        let opts = RunOptions {
            only: Some(vec![Check::TensionFormula]),
            points: Some(4),
            ..Default::default()
        };
        let r = run(&scene, &opts);
        assert_eq!(r.checks.len(), 1);
        assert_eq!(r.checks[0].evaluated, 4);
        assert_eq!(r.exit_code, EXIT_OK);
    }
}
