use nalgebra::DMatrix;
use serde::Serialize;

use crate::geometry::field::{
    constant_field, field_values, gram_schmidt, projector, FieldJet, JetMat,
};
use crate::geometry::{inner, ConnectionCoefficients};
use crate::jet::Jet1;

use super::{check_rank, SmoothMap, SplitDims, SubmersionError};

/// Numerical thresholds used while building frames.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameTolerances {
    /// Conformality residual bound, relative to `λ²`.
    pub conformal: f64,
    /// Singular values of `P_V J P_V` at or above `1 − d1_threshold` span D1.
    pub d1_threshold: f64,
    /// Values within this band below the D1 threshold are ambiguous.
    pub ambiguity_band: f64,
    /// Singular values above this and outside the D1 band break semi-invariance.
    pub anti_invariant: f64,
    /// Gram–Schmidt drops residuals below this fraction of the seed norm.
    pub drop: f64,
}

impl Default for FrameTolerances {
    fn default() -> Self {
        FrameTolerances {
            conformal: 1e-8,
            d1_threshold: 1e-7,
            ambiguity_band: 1e-3,
            anti_invariant: 1e-9,
            drop: 1e-6,
        }
    }
}

/// Maximum deviations from the structural invariants at one point.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct StructuralResiduals {
    /// Gram matrix of vertical ∪ horizontal minus the identity.
    pub orthonormality: f64,
    /// `|F_* V|` over the vertical frame.
    pub vertical_kernel: f64,
    /// `|P_V + P_H − I|`.
    pub projector_sum: f64,
    /// Off-diagonal and diagonal spread of `g_N(F_* X_a, F_* X_b)`.
    pub conformality: f64,
    /// `|P_H J V|` for V in D1.
    pub d1_invariance: f64,
    /// `|P_V J W|` for W in D2.
    pub d2_anti_invariance: f64,
    /// `|g_N(F_* JW, F_* X)|` for W in D2, X in μ.
    pub pushed_orthogonality: f64,
}

/// Values of the adapted frames at a point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplitFrame {
    pub point: Vec<f64>,
    pub vertical: Vec<Vec<f64>>,
    pub horizontal: Vec<Vec<f64>>,
    pub d1: Vec<Vec<f64>>,
    pub d2: Vec<Vec<f64>>,
    pub jd2: Vec<Vec<f64>>,
    pub mu: Vec<Vec<f64>>,
    pub lambda: f64,
    pub lambda_sq_residual: f64,
    pub residuals: StructuralResiduals,
}

impl SplitFrame {
    pub fn dims(&self) -> SplitDims {
        SplitDims {
            d1: self.d1.len(),
            d2: self.d2.len(),
            jd2: self.jd2.len(),
            mu: self.mu.len(),
        }
    }
}

/// The refinement `ker F_* = D1 ⊕ D2`, `(ker F_*)^⊥ = J(D2) ⊕ μ` together with
/// the complex structure, available when the source carries one.
#[derive(Clone, Debug)]
pub struct Refinement {
    pub j: JetMat,
    pub j_values: DMatrix<f64>,
    pub d1: Vec<FieldJet>,
    pub d2: Vec<FieldJet>,
    pub jd2: Vec<FieldJet>,
    pub mu: Vec<FieldJet>,
    pub p_d1: JetMat,
    pub p_d2: JetMat,
    pub p_jd2: JetMat,
    pub p_mu: JetMat,
    /// Singular values of `g(V_a, J V_b)` over the vertical frame, descending.
    pub singular_values: Vec<f64>,
}

/// Everything needed to evaluate the submersion objects at one point. Frames
/// and projectors are first-order jets, so they can be differentiated once.
#[derive(Clone, Debug)]
pub struct LocalGeometry {
    pub point: Vec<f64>,
    pub image: Vec<f64>,
    pub g: JetMat,
    pub g_values: DMatrix<f64>,
    pub g_inv: JetMat,
    pub gamma: ConnectionCoefficients,
    pub jac: JetMat,
    pub jac_values: DMatrix<f64>,
    /// Target metric at `F(x)`, differentiated along the source.
    pub g_target: JetMat,
    pub g_target_values: DMatrix<f64>,
    pub gamma_target: ConnectionCoefficients,
    pub vertical: Vec<FieldJet>,
    pub horizontal: Vec<FieldJet>,
    pub p_v: JetMat,
    pub p_h: JetMat,
    pub p_v_values: DMatrix<f64>,
    pub p_h_values: DMatrix<f64>,
    pub lambda_sq: Jet1,
    pub residuals: StructuralResiduals,
    pub refinement: Option<Refinement>,
}

pub(crate) fn mat_vec(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum())
        .collect()
}

fn coordinate_seeds(p: &JetMat, g: &DMatrix<f64>, n: usize, drop: f64) -> Vec<FieldJet> {
    (0..n)
        .filter_map(|i| {
            let seed: FieldJet = (0..n).map(|r| p.get(r, i).clone()).collect();
            let v = field_values(&seed);
            let norm = inner(g, &v, &v).max(0.0).sqrt();
            (norm > drop * g[(i, i)].sqrt()).then_some(seed)
        })
        .collect()
}

impl LocalGeometry {
    pub fn new(map: &SmoothMap, p: &[f64]) -> Result<Self, SubmersionError> {
        LocalGeometry::with_tolerances(map, p, FrameTolerances::default())
    }

    pub fn with_tolerances(
        map: &SmoothMap,
        p: &[f64],
        tol: FrameTolerances,
    ) -> Result<Self, SubmersionError> {
        let source = map.source();
        let n = source.dim();
        let nt = map.target().dim();
        let k = n - nt;

        let comps = map.component_jets(p)?;
        let jac = JetMat::from_fn(nt, n, n, |a, i| comps[a].partial(i));
        let jac_values = jac.values();
        check_rank(&jac_values)?;
        let image: Vec<f64> = comps.iter().map(|c| c.value).collect();

        let g = source.metric_jet1(p)?;
        let g_values = g.values();
        let g_inv = g.inverse().expect("positive definite metric is invertible");
        let gamma = source.christoffel(p)?;

        let target_jets = map.target().metric_jets(&image)?;
        let g_target = JetMat::from_fn(nt, nt, n, |a, b| {
            let t = &target_jets[a * nt + b];
            Jet1 {
                value: t.value,
                gradient: (0..n)
                    .map(|i| (0..nt).map(|c| t.gradient[c] * jac_values[(c, i)]).sum())
                    .collect(),
            }
        });
        let g_target_values = g_target.values();
        let gamma_target = map.target().christoffel(&image)?;

        // horizontal seeds: metric gradients of the components
        let seeds: Vec<FieldJet> = (0..nt)
            .map(|a| {
                let row: FieldJet = (0..n).map(|i| jac.get(a, i).clone()).collect();
                g_inv.mul_vec(&row)
            })
            .collect();
        let horizontal = gram_schmidt(&g, &seeds, nt, tol.drop);
        if horizontal.len() < nt {
            return Err(SubmersionError::CriticalPoint {
                rank: horizontal.len(),
                expected: nt,
            });
        }
        let p_h = projector(&g, &horizontal, n, n);
        let p_v = JetMat::identity(n, n).sub(&p_h);
        let vertical = gram_schmidt(
            &g,
            &coordinate_seeds(&p_v, &g_values, n, tol.drop),
            k,
            tol.drop,
        );
        if vertical.len() < k {
            return Err(SubmersionError::CriticalPoint {
                rank: n - vertical.len(),
                expected: nt,
            });
        }

        // dilation
        let pushed: Vec<FieldJet> = horizontal.iter().map(|x| jac.mul_vec(x)).collect();
        let mut lambda_sq = Jet1::zero(n);
        for f in &pushed {
            lambda_sq = &lambda_sq + &g_target.bilinear(f, f);
        }
        let lambda_sq = lambda_sq.scale(1.0 / nt.max(1) as f64);
        let mut conformality = 0.0f64;
        for (a, fa) in pushed.iter().enumerate() {
            for (b, fb) in pushed.iter().enumerate() {
                let v = inner(&g_target_values, &field_values(fa), &field_values(fb));
                let d = if a == b { lambda_sq.value } else { 0.0 };
                conformality = conformality.max((v - d).abs());
            }
        }
        let limit = tol.conformal * lambda_sq.value;
        if nt > 0 && conformality > limit {
            return Err(SubmersionError::NotConformal {
                residual: conformality,
                limit,
            });
        }

        let p_v_values = p_v.values();
        let p_h_values = p_h.values();
        let mut residuals = StructuralResiduals {
            conformality,
            projector_sum: (&p_v_values + &p_h_values - DMatrix::identity(n, n))
                .abs()
                .max(),
            ..Default::default()
        };
        let all: Vec<Vec<f64>> = vertical
            .iter()
            .chain(&horizontal)
            .map(|f| field_values(f))
            .collect();
        for (a, u) in all.iter().enumerate() {
            for (b, v) in all.iter().enumerate() {
                let d = if a == b { 1.0 } else { 0.0 };
                residuals.orthonormality = residuals
                    .orthonormality
                    .max((inner(&g_values, u, v) - d).abs());
            }
        }
        for v in &vertical {
            let fv = mat_vec(&jac_values, &field_values(v));
            residuals.vertical_kernel = residuals
                .vertical_kernel
                .max(fv.iter().fold(0.0, |m, x| m.max(x.abs())));
        }

        let mut geo = LocalGeometry {
            point: p.to_vec(),
            image,
            g,
            g_values,
            g_inv,
            gamma,
            jac,
            jac_values,
            g_target,
            g_target_values,
            gamma_target,
            vertical,
            horizontal,
            p_v,
            p_h,
            p_v_values,
            p_h_values,
            lambda_sq,
            residuals,
            refinement: None,
        };
        if source.has_complex_structure() {
            let j = source.complex_structure_jet1(p)?;
            geo.refinement = Some(geo.refine(j, &tol)?);
        }
        Ok(geo)
    }

    fn refine(&mut self, j: JetMat, tol: &FrameTolerances) -> Result<Refinement, SubmersionError> {
        let n = self.dim();
        let nt = self.target_dim();
        let j_values = j.values();
        let k = self.vertical.len();

        let vv: Vec<Vec<f64>> = self.vertical.iter().map(|v| field_values(v)).collect();
        let q = DMatrix::from_fn(k, k, |a, b| {
            inner(&self.g_values, &vv[a], &mat_vec(&j_values, &vv[b]))
        });
        let mut singular_values: Vec<f64> = if k > 0 {
            q.svd(false, false)
                .singular_values
                .iter()
                .copied()
                .collect()
        } else {
            Vec::new()
        };
        singular_values.sort_by(|a, b| b.total_cmp(a));
        let mut d1_count = 0;
        for &s in &singular_values {
            if s >= 1.0 - tol.d1_threshold {
                d1_count += 1;
            } else if s >= 1.0 - tol.ambiguity_band {
                return Err(SubmersionError::SplittingAmbiguous {
                    point: self.point.clone(),
                    value: s,
                });
            } else if s > tol.anti_invariant {
                return Err(SubmersionError::NotSemiInvariant {
                    point: self.point.clone(),
                    value: s,
                });
            }
        }
        if d1_count % 2 != 0 {
            return Err(SubmersionError::OddInvariantDimension(d1_count));
        }
        let d2_count = k - d1_count;
        if d2_count > nt {
            return Err(SubmersionError::NotSemiInvariant {
                point: self.point.clone(),
                value: 0.0,
            });
        }

        // -(P_V J P_V)^2 is the projector onto D1 and depends smoothly on the point
        let qm = self.p_v.mul(&j).mul(&self.p_v);
        let p_d1 = qm.mul(&qm).scale(-1.0);
        let p_d2 = self.p_v.sub(&p_d1);
        let d1 = gram_schmidt(
            &self.g,
            &coordinate_seeds(&p_d1, &self.g_values, n, tol.drop),
            d1_count,
            tol.drop,
        );
        let d2 = gram_schmidt(
            &self.g,
            &coordinate_seeds(&p_d2, &self.g_values, n, tol.drop),
            d2_count,
            tol.drop,
        );
        let jd2_seeds: Vec<FieldJet> = d2.iter().map(|w| j.mul_vec(w)).collect();
        let jd2 = gram_schmidt(&self.g, &jd2_seeds, d2_count, tol.drop);
        let p_jd2 = projector(&self.g, &jd2, n, n);
        let p_mu = self.p_h.sub(&p_jd2);
        let mu = gram_schmidt(
            &self.g,
            &coordinate_seeds(&p_mu, &self.g_values, n, tol.drop),
            nt - d2_count,
            tol.drop,
        );
        if d1.len() != d1_count
            || d2.len() != d2_count
            || jd2.len() != d2_count
            || mu.len() != nt - d2_count
        {
            return Err(SubmersionError::SplittingAmbiguous {
                point: self.point.clone(),
                value: singular_values.get(d1_count).copied().unwrap_or(0.0),
            });
        }

        let r = &mut self.residuals;
        for v in &d1 {
            let jv = mat_vec(&j_values, &field_values(v));
            let h = mat_vec(&self.p_h_values, &jv);
            r.d1_invariance = r
                .d1_invariance
                .max(inner(&self.g_values, &h, &h).max(0.0).sqrt());
        }
        for w in &d2 {
            let jw = mat_vec(&j_values, &field_values(w));
            let v = mat_vec(&self.p_v_values, &jw);
            r.d2_anti_invariance = r
                .d2_anti_invariance
                .max(inner(&self.g_values, &v, &v).max(0.0).sqrt());
            let fjw = mat_vec(&self.jac_values, &jw);
            for x in &mu {
                let fx = mat_vec(&self.jac_values, &field_values(x));
                r.pushed_orthogonality = r
                    .pushed_orthogonality
                    .max(inner(&self.g_target_values, &fjw, &fx).abs());
            }
        }

        Ok(Refinement {
            j,
            j_values,
            d1,
            d2,
            jd2,
            mu,
            p_d1,
            p_d2,
            p_jd2,
            p_mu,
            singular_values,
        })
    }

    pub fn dim(&self) -> usize {
        self.point.len()
    }

    pub fn target_dim(&self) -> usize {
        self.image.len()
    }

    pub fn fiber_dim(&self) -> usize {
        self.vertical.len()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda_sq.value.sqrt()
    }

    pub fn refinement(&self) -> Option<&Refinement> {
        self.refinement.as_ref()
    }

    /// Counts of the refined distributions; zero when there is no complex structure.
    pub fn dims(&self) -> SplitDims {
        match &self.refinement {
            Some(r) => SplitDims {
                d1: r.d1.len(),
                d2: r.d2.len(),
                jd2: r.jd2.len(),
                mu: r.mu.len(),
            },
            None => SplitDims {
                d1: 0,
                d2: 0,
                jd2: 0,
                mu: 0,
            },
        }
    }

    pub fn split_frame(&self) -> SplitFrame {
        let vals = |fs: &[FieldJet]| fs.iter().map(|f| field_values(f)).collect::<Vec<_>>();
        let (d1, d2, jd2, mu) = match &self.refinement {
            Some(r) => (vals(&r.d1), vals(&r.d2), vals(&r.jd2), vals(&r.mu)),
            None => Default::default(),
        };
        SplitFrame {
            point: self.point.clone(),
            vertical: vals(&self.vertical),
            horizontal: vals(&self.horizontal),
            d1,
            d2,
            jd2,
            mu,
            lambda: self.lambda(),
            lambda_sq_residual: self.residuals.conformality,
            residuals: self.residuals.clone(),
        }
    }

    /// `g_M(u, v)` at the point.
    pub fn g(&self, u: &[f64], v: &[f64]) -> f64 {
        inner(&self.g_values, u, v)
    }

    pub fn norm(&self, v: &[f64]) -> f64 {
        self.g(v, v).max(0.0).sqrt()
    }

    /// `g_N(a, b)` at `F(p)`.
    pub fn g_target(&self, a: &[f64], b: &[f64]) -> f64 {
        inner(&self.g_target_values, a, b)
    }

    pub fn target_norm(&self, a: &[f64]) -> f64 {
        self.g_target(a, a).max(0.0).sqrt()
    }

    /// Vertical part `P_V v`.
    pub fn vertical_part(&self, v: &[f64]) -> Vec<f64> {
        mat_vec(&self.p_v_values, v)
    }

    /// Horizontal part `P_H v`.
    pub fn horizontal_part(&self, v: &[f64]) -> Vec<f64> {
        mat_vec(&self.p_h_values, v)
    }

    /// `F_* v`
    pub fn push(&self, v: &[f64]) -> Vec<f64> {
        mat_vec(&self.jac_values, v)
    }

    /// `F_*` applied to a field, as target components differentiable along the source.
    pub fn push_field(&self, f: &[Jet1]) -> FieldJet {
        self.jac.mul_vec(f)
    }

    /// Applies a jet matrix to a field.
    pub fn apply(&self, m: &JetMat, f: &[Jet1]) -> FieldJet {
        m.mul_vec(f)
    }

    /// Values of a jet matrix applied to a vector.
    pub fn apply_value(&self, m: &JetMat, v: &[f64]) -> Vec<f64> {
        mat_vec(&m.values(), v)
    }

    /// The whole orthonormal frame: vertical first, then horizontal.
    pub fn full_frame(&self) -> impl Iterator<Item = &FieldJet> {
        self.vertical.iter().chain(&self.horizontal)
    }

    /// Extends `v` to a field with constant coefficients in the full frame.
    pub fn extend(&self, v: &[f64]) -> FieldJet {
        let n = self.dim();
        let mut out = vec![Jet1::zero(n); n];
        for e in self.full_frame() {
            let c = self.g(&field_values(e), v);
            if c == 0.0 {
                continue;
            }
            for (o, x) in out.iter_mut().zip(e) {
                *o = &*o + &x.scale(c);
            }
        }
        out
    }

    /// Extends `v` with constant coordinate components.
    pub fn extend_coordinate(&self, v: &[f64]) -> FieldJet {
        constant_field(v, self.dim())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::geometry::{ChartedManifold, SampleDomain};

    fn example33() -> SmoothMap {
        let src = ChartedManifold::euclidean(6)
            .with_complex_structure(ChartedManifold::canonical_complex_structure(6))
            .unwrap()
            .with_domain(SampleDomain::cube(6, -1.0, 1.0))
            .unwrap();
        let tgt = ChartedManifold::euclidean(2);
        let comps = vec![
            parse("exp(x3)*cos(x5)", 6).unwrap(),
            parse("exp(x3)*sin(x5)", 6).unwrap(),
        ];
        SmoothMap::new(src, tgt, comps).unwrap()
    }

    fn in_span(frame: &[Vec<f64>], v: &[f64]) -> f64 {
        let mut r = v.to_vec();
        for e in frame {
            let c: f64 = e.iter().zip(v).map(|(a, b)| a * b).sum();
            for (x, y) in r.iter_mut().zip(e) {
                *x -= c * y;
            }
        }
        r.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    #[test]
    fn example_frame_at_ln2() {
        let p = [0.1, -0.3, 2f64.ln(), 0.4, 0.7, -0.2];
        let geo = LocalGeometry::new(&example33(), &p).unwrap();
        let f = geo.split_frame();
        assert!((f.lambda - 2.0).abs() < 1e-12);
        assert_eq!(
            f.dims(),
            SplitDims {
                d1: 2,
                d2: 2,
                jd2: 2,
                mu: 0
            }
        );
        let e = |i: usize| {
            let mut v = vec![0.0; 6];
            v[i] = 1.0;
            v
        };
        assert!(in_span(&f.d1, &e(0)) < 1e-12 && in_span(&f.d1, &e(1)) < 1e-12);
        assert!(in_span(&f.d2, &e(3)) < 1e-12 && in_span(&f.d2, &e(5)) < 1e-12);
        let r = &f.residuals;
        assert!(r.orthonormality < 1e-9 && r.vertical_kernel < 1e-9 && r.projector_sum < 1e-10);
        assert!(r.d1_invariance < 1e-9 && r.d2_anti_invariance < 1e-9);
        assert!(f.lambda_sq_residual < 1e-8 * 4.0);
    }

    #[test]
    fn holomorphic_projection() {
        let src = ChartedManifold::euclidean(4)
            .with_complex_structure(ChartedManifold::canonical_complex_structure(4))
            .unwrap();
        let map = SmoothMap::new(
            src,
            ChartedManifold::euclidean(2),
            vec![parse("x3", 4).unwrap(), parse("x4", 4).unwrap()],
        )
        .unwrap();
        let geo = LocalGeometry::new(&map, &[0.2, 0.3, 0.4, 0.5]).unwrap();
        assert_eq!(geo.lambda(), 1.0);
        assert_eq!(
            geo.dims(),
            SplitDims {
                d1: 2,
                d2: 0,
                jd2: 0,
                mu: 2
            }
        );
    }

    #[test]
    fn non_conformal_map_rejected() {
        let map = SmoothMap::new(
            ChartedManifold::euclidean(3),
            ChartedManifold::euclidean(2),
            vec![parse("x1", 3).unwrap(), parse("2*x2", 3).unwrap()],
        )
        .unwrap();
        assert!(matches!(
            LocalGeometry::new(&map, &[0.0, 0.0, 0.0]),
            Err(SubmersionError::NotConformal { .. })
        ));
    }

    #[test]
    fn slant_kernel_is_not_semi_invariant() {
        // kernel spanned by ∂3 and cos t ∂2 − sin t ∂4 style directions
        let src = ChartedManifold::euclidean(4)
            .with_complex_structure(ChartedManifold::canonical_complex_structure(4))
            .unwrap();
        let map = SmoothMap::new(
            src,
            ChartedManifold::euclidean(2),
            vec![
                parse("x1", 4).unwrap(),
                parse("0.6*x2 + 0.8*x4", 4).unwrap(),
            ],
        )
        .unwrap();
        assert!(matches!(
            LocalGeometry::new(&map, &[0.0; 4]),
            Err(SubmersionError::NotSemiInvariant { .. })
        ));
    }
}
