mod common;

use std::sync::OnceLock;

use proptest::prelude::*;
use semisub_core::submersion::Extension;
use semisub_core::theorems::check_at;
use semisub_core::{Check, CheckContext, KahlerStatus, LocalGeometry, Verdict};

fn cases() -> &'static [common::Case] {
    static CASES: OnceLock<Vec<common::Case>> = OnceLock::new();
    CASES.get_or_init(|| common::kahler_cases(1))
}

/// A random valid point of a random preset plus three random vectors.
fn setup() -> impl Strategy<Value = (usize, Vec<f64>, [Vec<f64>; 3])> {
    (
        0..cases().len(),
        prop::collection::vec(0.0f64..1.0, 6),
        prop::collection::vec(-1.0f64..1.0, 18),
    )
        .prop_map(|(c, frac, raw)| {
            let case = &cases()[c];
            let n = case.map.source().dim();
            let p: Vec<f64> = case.map.source().domain().bounds[..n]
                .iter()
                .zip(&frac)
                .map(|(&(lo, hi), t)| lo + t * (hi - lo))
                .collect();
            let vecs = [
                raw[0..n].to_vec(),
                raw[6..6 + n].to_vec(),
                raw[12..12 + n].to_vec(),
            ];
            (c, p, vecs)
        })
}

fn geometry(c: usize, p: &[f64]) -> Option<LocalGeometry> {
    let case = &cases()[c];
    if !case.map.source().domain().contains(p) {
        return None;
    }
    LocalGeometry::new(&case.map, p).ok()
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn oneill_tensors_are_skew((c, p, [e, f, h]) in setup()) {
        let Some(geo) = geometry(c, &p) else { return Ok(()) };
        let t = geo.g(&geo.oneill_t(&e, &f), &h) + geo.g(&f, &geo.oneill_t(&e, &h));
        let a = geo.g(&geo.oneill_a(&e, &f), &h) + geo.g(&f, &geo.oneill_a(&e, &h));
        prop_assert!(t.abs() < 1e-8, "T: {t}");
        prop_assert!(a.abs() < 1e-8, "A: {a}");
    }

    #[test]
    fn sff_is_symmetric((c, p, [e, f, _]) in setup()) {
        let Some(geo) = geometry(c, &p) else { return Ok(()) };
        prop_assert!(close(&geo.sff(&e, &f), &geo.sff(&f, &e), 1e-8));
    }

    #[test]
    fn tensors_do_not_depend_on_extension((c, p, [e, f, _]) in setup()) {
        let Some(geo) = geometry(c, &p) else { return Ok(()) };
        prop_assert!(close(&geo.sff_with(&e, &f, Extension::Frame), &geo.sff_with(&e, &f, Extension::Coordinate), 1e-8));
        prop_assert!(close(&geo.oneill_t_with(&e, &f, Extension::Frame), &geo.oneill_t_with(&e, &f, Extension::Coordinate), 1e-8));
        prop_assert!(close(&geo.oneill_a_with(&e, &f, Extension::Frame), &geo.oneill_a_with(&e, &f, Extension::Coordinate), 1e-8));
    }

    #[test]
    fn projectors_split_the_tangent_space((c, p, [e, _, _]) in setup()) {
        let Some(geo) = geometry(c, &p) else { return Ok(()) };
        let r = geo.refinement().unwrap();
        let v = geo.vertical_part(&e);
        let h = geo.horizontal_part(&e);
        let sum_v: Vec<f64> = geo.apply_value(&r.p_d1, &e).iter().zip(geo.apply_value(&r.p_d2, &e)).map(|(a, b)| a + b).collect();
        let sum_h: Vec<f64> = geo.apply_value(&r.p_jd2, &e).iter().zip(geo.apply_value(&r.p_mu, &e)).map(|(a, b)| a + b).collect();
        prop_assert!(close(&sum_v, &v, 1e-9));
        prop_assert!(close(&sum_h, &h, 1e-9));
        let total: Vec<f64> = v.iter().zip(&h).map(|(a, b)| a + b).collect();
        prop_assert!(close(&total, &e, 1e-12));
    }

    #[test]
    fn complex_structure_respects_the_splitting((c, p, [e, _, _]) in setup()) {
        let Some(geo) = geometry(c, &p) else { return Ok(()) };
        let r = geo.refinement().unwrap();
        let x1 = geo.apply_value(&r.p_d1, &e);
        let jx1 = geo.j(&x1).unwrap();
        prop_assert!(geo.norm(&geo.apply_value(&r.p_d2, &jx1)) < 1e-9);
        prop_assert!(geo.norm(&geo.horizontal_part(&jx1)) < 1e-9);
        let x2 = geo.apply_value(&r.p_d2, &e);
        prop_assert!(geo.norm(&geo.vertical_part(&geo.j(&x2).unwrap())) < 1e-9);
        let (b, cc) = geo.bc_decompose(&geo.horizontal_part(&e)).unwrap();
        prop_assert!(geo.norm(&geo.apply_value(&r.p_d1, &b)) < 1e-9);
        prop_assert!(geo.norm(&geo.apply_value(&r.p_jd2, &cc)) < 1e-9);
    }

    #[test]
    fn derivatives_of_phi_and_omega((c, p, [e, _, _]) in setup()) {
        let Some(geo) = geometry(c, &p) else { return Ok(()) };
        let r = geo.refinement().unwrap();
        let v = geo.vertical_part(&e);
        let b = |x: &[f64]| geo.vertical_part(&geo.j(x).unwrap());
        let cop = |x: &[f64]| geo.horizontal_part(&geo.j(x).unwrap());
        for wf in &geo.vertical {
            let w: Vec<f64> = wf.iter().map(|j| j.value).collect();
            let jw = r.j.mul_vec(wf);
            let phi_w = geo.p_v.mul_vec(&jw);
            let omega_w = geo.p_h.mul_vec(&jw);
            let hat_w = geo.vertical_part(&geo.nabla(&v, wf));
            let tw = geo.oneill_t(&v, &w);
            let (phi_wv, omega_wv) = geo.phi_omega(&w).unwrap();

            let lhs5: Vec<f64> = geo.vertical_part(&geo.nabla(&v, &phi_w)).iter().zip(b(&hat_w)).map(|(x, y)| x - y).collect();
            let rhs5: Vec<f64> = b(&tw).iter().zip(geo.oneill_t(&v, &omega_wv)).map(|(x, y)| x - y).collect();
            prop_assert!(close(&lhs5, &rhs5, 1e-8), "{lhs5:?} vs {rhs5:?}");

            let lhs6: Vec<f64> = geo.horizontal_part(&geo.nabla(&v, &omega_w)).iter().zip(cop(&hat_w)).map(|(x, y)| x - y).collect();
            let rhs6: Vec<f64> = cop(&tw).iter().zip(geo.oneill_t(&v, &phi_wv)).map(|(x, y)| x - y).collect();
            prop_assert!(close(&lhs6, &rhs6, 1e-8), "{lhs6:?} vs {rhs6:?}");
        }
    }

    #[test]
    fn verdicts_are_monotone_in_tolerance((c, p, _) in setup(), k in 1.0f64..1e4) {
        let Some(geo) = geometry(c, &p) else { return Ok(()) };
        for check in Check::ALL {
            let tight = check_at(check, &geo, &CheckContext::new(1e-6, KahlerStatus::Verified)).unwrap();
            let loose = check_at(check, &geo, &CheckContext::new(1e-6 * k, KahlerStatus::Verified)).unwrap();
            for (t, l) in [(tight.verdict_a, loose.verdict_a), (tight.verdict_b, loose.verdict_b)] {
                prop_assert!(!(t == Verdict::Holds && l == Verdict::Fails), "{}", check.name());
            }
        }
    }
}
