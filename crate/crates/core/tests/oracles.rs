mod common;

use nalgebra::DMatrix;
use semisub_core::{ChartedManifold, LocalGeometry, SmoothMap};

const H: f64 = 1e-5;

fn shifted(p: &[f64], k: usize, h: f64) -> Vec<f64> {
    let mut q = p.to_vec();
    q[k] += h;
    q
}

/// Christoffel symbols from central differences of the metric.
fn fd_christoffel(m: &ChartedManifold, p: &[f64]) -> Vec<f64> {
    let n = m.dim();
    let dg: Vec<DMatrix<f64>> = (0..n)
        .map(|k| {
            (m.metric_at(&shifted(p, k, H)).unwrap() - m.metric_at(&shifted(p, k, -H)).unwrap())
                / (2.0 * H)
        })
        .collect();
    let ginv = m.metric_at(p).unwrap().try_inverse().unwrap();
    let mut out = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                out[(k * n + i) * n + j] = 0.5
                    * (0..n)
                        .map(|l| ginv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]))
                        .sum::<f64>();
            }
        }
    }
    out
}

/// `∂i∂jF^a + Γ_N^a_bc ∂iF^b ∂jF^c − Γ_M^k_ij ∂kF^a` by finite differences.
fn fd_sff(map: &SmoothMap, p: &[f64], i: usize, j: usize) -> Vec<f64> {
    let n = map.source().dim();
    let nt = map.target().dim();
    let f = |q: &[f64]| map.eval(q).unwrap();
    let d1 = |q: &[f64], k: usize| -> Vec<f64> {
        let (a, b) = (f(&shifted(q, k, H)), f(&shifted(q, k, -H)));
        a.iter().zip(&b).map(|(x, y)| (x - y) / (2.0 * H)).collect()
    };
    let h2 = 1e-4;
    let dij: Vec<f64> = {
        let pp = f(&shifted(&shifted(p, i, h2), j, h2));
        let pm = f(&shifted(&shifted(p, i, h2), j, -h2));
        let mp = f(&shifted(&shifted(p, i, -h2), j, h2));
        let mm = f(&shifted(&shifted(p, i, -h2), j, -h2));
        (0..nt)
            .map(|a| (pp[a] - pm[a] - mp[a] + mm[a]) / (4.0 * h2 * h2))
            .collect()
    };
    let gm = fd_christoffel(map.source(), p);
    let gn = fd_christoffel(map.target(), &f(p));
    let (di, dj) = (d1(p, i), d1(p, j));
    let dk: Vec<Vec<f64>> = (0..n).map(|k| d1(p, k)).collect();
    (0..nt)
        .map(|a| {
            let mut s = dij[a];
            for b in 0..nt {
                for c in 0..nt {
                    s += gn[(a * nt + b) * nt + c] * di[b] * dj[c];
                }
            }
            for k in 0..n {
                s -= gm[(k * n + i) * n + j] * dk[k][a];
            }
            s
        })
        .collect()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let scale = b.iter().map(|x| x.abs()).fold(1.0, f64::max);
    diff / scale
}

fn all_cases() -> Vec<common::Case> {
    let mut v = common::kahler_cases(6);
    v.push(common::exp1(6));
    v.push(common::diag_x1sq(6));
    v
}

#[test]
fn christoffels_match_finite_differences() {
    for case in all_cases() {
        let m = case.map.source();
        let n = m.dim();
        for p in &case.points {
            let gamma = m.christoffel(p).unwrap();
            let auto: Vec<f64> = (0..n * n * n)
                .map(|idx| gamma.get(idx / (n * n), (idx / n) % n, idx % n))
                .collect();
            let fd = fd_christoffel(m, p);
            assert!(rel_err(&auto, &fd) < 1e-5, "{} at {p:?}", case.name);
        }
    }
}

#[test]
fn sff_components_match_finite_differences() {
    for case in all_cases() {
        let n = case.map.source().dim();
        for p in &case.points {
            let geo = LocalGeometry::new(&case.map, p).unwrap();
            let mut auto = Vec::new();
            let mut fd = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    let (ei, ej) = (unit(i, n), unit(j, n));
                    auto.extend(geo.sff(&ei, &ej));
                    fd.extend(fd_sff(&case.map, p, i, j));
                }
            }
            assert!(rel_err(&auto, &fd) < 1e-4, "{} at {p:?}", case.name);
        }
    }
}

fn unit(i: usize, n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

#[test]
fn exp1_hand_values() {
    let case = common::exp1(1);
    let geo = LocalGeometry::new(&case.map, &[0.0, 0.4]).unwrap();
    assert!((geo.sff(&unit(0, 2), &unit(0, 2))[0] - 1.0).abs() < 1e-9);
    assert!((geo.lambda() - 1.0).abs() < 1e-12);
    assert!(!geo.grad_ln_lambda().horizontally_homothetic);
}

#[test]
fn conformal_sff_identities_hold_on_every_preset() {
    for case in all_cases() {
        for p in &case.points {
            let geo = LocalGeometry::new(&case.map, p).unwrap();
            let r = geo.verify_lemma1();
            assert!(r.max() < 1e-7, "{} at {p:?}: {r:?}", case.name);
        }
    }
}

#[test]
fn example_dilation_is_exponential() {
    let case = common::example33(50);
    for p in &case.points {
        let geo = LocalGeometry::new(&case.map, p).unwrap();
        let expect = p[2].exp();
        assert!((geo.lambda() - expect).abs() / expect < 1e-9);
        let dims = geo.dims();
        assert_eq!((dims.d1, dims.d2, dims.jd2, dims.mu), (2, 2, 2, 0));
    }
}

#[test]
fn curved_fibers_have_expected_mean_curvature() {
    // Fibers of x1 under diag(1, x1^2) are circles of radius x1.
    let case = common::diag_x1sq(10);
    for p in &case.points {
        let geo = LocalGeometry::new(&case.map, p).unwrap();
        let mu = geo.fiber_mean_curvature();
        assert!((mu[0] + 1.0 / p[0]).abs() < 1e-10 && mu[1].abs() < 1e-10);
    }
}

#[test]
fn grad_ln_lambda_matches_finite_differences() {
    for case in all_cases() {
        for p in case.points.iter().take(10) {
            let geo = LocalGeometry::new(&case.map, p).unwrap();
            let n = p.len();
            let ln_lambda = |q: &[f64]| LocalGeometry::new(&case.map, q).unwrap().lambda().ln();
            let d: Vec<f64> = (0..n)
                .map(|k| (ln_lambda(&shifted(p, k, H)) - ln_lambda(&shifted(p, k, -H))) / (2.0 * H))
                .collect();
            let ginv = case
                .map
                .source()
                .metric_at(p)
                .unwrap()
                .try_inverse()
                .unwrap();
            let grad = &ginv * nalgebra::DVector::from_vec(d);
            let got = geo.grad_ln_lambda().full;
            for i in 0..n {
                assert!(
                    (got[i] - grad[i]).abs() < 1e-6,
                    "{} at {p:?}: {got:?} vs {grad:?}",
                    case.name
                );
            }
        }
    }
}
