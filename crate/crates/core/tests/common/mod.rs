#![allow(dead_code)]

use semisub_core::geometry::ExcludedLocus;
use semisub_core::{parse, ChartedManifold, SampleDomain, ScalarExpr, SmoothMap};

pub struct Case {
    pub name: &'static str,
    pub map: SmoothMap,
    pub points: Vec<Vec<f64>>,
}

fn exprs(src: &[&str], dim: usize) -> Vec<ScalarExpr> {
    src.iter().map(|e| parse(e, dim).unwrap()).collect()
}

/// Diagonal metric as upper-packed expressions.
fn diagonal(diag: &[&str]) -> Vec<ScalarExpr> {
    let n = diag.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i..n {
            out.push(if i == j {
                parse(diag[i], n).unwrap()
            } else {
                ScalarExpr::Num(0.0)
            });
        }
    }
    out
}

fn kahler_flat(dim: usize, domain: SampleDomain) -> ChartedManifold {
    ChartedManifold::euclidean(dim)
        .with_complex_structure(ChartedManifold::canonical_complex_structure(dim))
        .unwrap()
        .with_domain(domain)
        .unwrap()
}

fn sample(map: &SmoothMap, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let out = map.source().domain().sample(count, seed, |p| {
        semisub_core::LocalGeometry::new(map, p).is_ok()
    });
    assert_eq!(out.points.len(), count);
    out.points
}

fn build(
    name: &'static str,
    src: ChartedManifold,
    tgt: ChartedManifold,
    comps: &[&str],
    count: usize,
) -> Case {
    let n = src.dim();
    let map = SmoothMap::new(src, tgt, exprs(comps, n)).unwrap();
    let points = sample(&map, count, 7);
    Case { name, map, points }
}

pub fn example33(count: usize) -> Case {
    let domain = SampleDomain::cube(6, -1.0, 1.0).with_exclusion(ExcludedLocus::Periodic {
        coord: 4,
        step: std::f64::consts::FRAC_PI_2,
        offset: 0.0,
    });
    build(
        "example33",
        kahler_flat(6, domain),
        ChartedManifold::euclidean(2),
        &["exp(x3)*cos(x5)", "exp(x3)*sin(x5)"],
        count,
    )
}

pub fn linproj42(count: usize) -> Case {
    build(
        "linproj42",
        kahler_flat(4, SampleDomain::cube(4, -1.0, 1.0)),
        ChartedManifold::euclidean(2),
        &["x1", "x2"],
        count,
    )
}

pub fn holo4(count: usize) -> Case {
    build(
        "holo4",
        kahler_flat(4, SampleDomain::cube(4, -1.0, 1.0)),
        ChartedManifold::euclidean(2),
        &["exp(x3)*cos(x4)", "exp(x3)*sin(x4)"],
        count,
    )
}

/// Inversion of `(x1, x2, x3, x5)`: conformal, `D2 = ker`, `μ` two-dimensional.
pub fn inv6(count: usize) -> Case {
    build(
        "inv6",
        kahler_flat(6, SampleDomain::cube(6, 0.5, 1.5)),
        ChartedManifold::euclidean(4),
        &[
            "x1/(x1^2+x2^2+x3^2+x5^2)",
            "x2/(x1^2+x2^2+x3^2+x5^2)",
            "x3/(x1^2+x2^2+x3^2+x5^2)",
            "x5/(x1^2+x2^2+x3^2+x5^2)",
        ],
        count,
    )
}

/// Curved Kähler product source, anti-invariant Riemannian submersion.
pub fn antiinv4(count: usize) -> Case {
    let src = ChartedManifold::new(
        4,
        diagonal(&["exp(0.6*x1)", "exp(0.6*x1)", "exp(-0.4*x3)", "exp(-0.4*x3)"]),
        Some(ChartedManifold::canonical_complex_structure(4)),
        SampleDomain::cube(4, -1.0, 1.0),
    )
    .unwrap();
    let tgt = ChartedManifold::new(
        2,
        diagonal(&["exp(0.6*x1)", "exp(-0.4*x2)"]),
        None,
        SampleDomain::unbounded(2),
    )
    .unwrap();
    build("antiinv4", src, tgt, &["x1", "x3"], count)
}

pub fn exp1(count: usize) -> Case {
    let src = ChartedManifold::euclidean(2)
        .with_domain(SampleDomain::cube(2, -1.0, 1.0))
        .unwrap();
    build(
        "exp1",
        src,
        ChartedManifold::euclidean(1),
        &["exp(x1)"],
        count,
    )
}

pub fn diag_x1sq(count: usize) -> Case {
    let mut domain = SampleDomain::cube(2, 1.0, 3.0);
    domain.bounds[1] = (-1.0, 1.0);
    let src = ChartedManifold::new(2, diagonal(&["1", "x1^2"]), None, domain).unwrap();
    build(
        "diag-x1sq",
        src,
        ChartedManifold::euclidean(1),
        &["x1"],
        count,
    )
}

pub fn kahler_cases(count: usize) -> Vec<Case> {
    vec![
        example33(count),
        linproj42(count),
        holo4(count),
        inv6(count),
        antiinv4(count),
    ]
}
