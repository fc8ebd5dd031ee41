use serde::Serialize;

use crate::geometry::field::{derivative_along, field_values, FieldJet};
use crate::geometry::{bracket_jet, nabla_jet};
use crate::jet::Jet1;

use super::frame::{mat_vec, LocalGeometry};
use super::SubmersionError;

/// How a tangent vector at the point is extended to a field before it is
/// differentiated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extension {
    /// Constant coefficients in the constructed orthonormal frame.
    Frame,
    /// Constant coordinate components.
    Coordinate,
}

/// `grad ln λ` and its splitting.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradLnLambda {
    pub full: Vec<f64>,
    pub horizontal: Vec<f64>,
    pub vertical: Vec<f64>,
    pub horizontally_homothetic: bool,
}

/// Residuals of the three second-fundamental-form identities of a
/// horizontally conformal submersion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Lemma1Residuals {
    /// horizontal pairs: `sff(X,Y)` against the dilation terms
    pub horizontal: f64,
    /// vertical pairs: `sff(V,W) + F_*(T_V W)`
    pub vertical: f64,
    /// mixed pairs: `sff(X,V) + F_*(A_X V)`
    pub mixed: f64,
}

impl Lemma1Residuals {
    pub fn max(&self) -> f64 {
        self.horizontal.max(self.vertical).max(self.mixed)
    }
}

/// `|H grad λ| / λ` below this counts as horizontally homothetic.
pub const HOMOTHETIC_TOLERANCE: f64 = 1e-8;

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

impl LocalGeometry {
    fn extend_with(&self, v: &[f64], ext: Extension) -> FieldJet {
        match ext {
            Extension::Frame => self.extend(v),
            Extension::Coordinate => self.extend_coordinate(v),
        }
    }

    /// `∇_X Y` for a field `Y` given by its jets.
    pub fn nabla(&self, x: &[f64], y: &[Jet1]) -> Vec<f64> {
        nabla_jet(&self.gamma, x, y)
    }

    /// `∇_X Y` with `Y` frame-extended.
    pub fn nabla_vec(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        self.nabla(x, &self.extend(y))
    }

    /// `[X, Y]` for two fields.
    pub fn bracket(&self, x: &[Jet1], y: &[Jet1]) -> Vec<f64> {
        bracket_jet(x, y)
    }

    /// Pullback connection `∇^F_X V` of a section `V` of `F^{-1}TN` given by
    /// target components differentiable along the source.
    pub fn nabla_pullback(&self, x: &[f64], v: &[Jet1]) -> Vec<f64> {
        let dv = derivative_along(v, x);
        let gv = self.gamma_target.contract(&self.push(x), &field_values(v));
        add(&dv, &gv)
    }

    /// `T_E G` with both arguments frame-extended.
    pub fn oneill_t(&self, e: &[f64], g: &[f64]) -> Vec<f64> {
        self.oneill_t_with(e, g, Extension::Frame)
    }

    /// `T_E G = H∇_{VE} VG + V∇_{VE} HG`
    pub fn oneill_t_with(&self, e: &[f64], g: &[f64], ext: Extension) -> Vec<f64> {
        let ve = self.vertical_part(e);
        let gf = self.extend_with(g, ext);
        let vg = self.p_v.mul_vec(&gf);
        let hg = self.p_h.mul_vec(&gf);
        add(
            &self.horizontal_part(&self.nabla(&ve, &vg)),
            &self.vertical_part(&self.nabla(&ve, &hg)),
        )
    }

    /// `A_E G` with both arguments frame-extended.
    pub fn oneill_a(&self, e: &[f64], g: &[f64]) -> Vec<f64> {
        self.oneill_a_with(e, g, Extension::Frame)
    }

    /// `A_E G = V∇_{HE} HG + H∇_{HE} VG`
    pub fn oneill_a_with(&self, e: &[f64], g: &[f64], ext: Extension) -> Vec<f64> {
        let he = self.horizontal_part(e);
        let gf = self.extend_with(g, ext);
        let vg = self.p_v.mul_vec(&gf);
        let hg = self.p_h.mul_vec(&gf);
        add(
            &self.vertical_part(&self.nabla(&he, &hg)),
            &self.horizontal_part(&self.nabla(&he, &vg)),
        )
    }

    /// `∇̂_V W = V∇_V W`
    pub fn nabla_hat(&self, v: &[f64], w: &[f64]) -> Vec<f64> {
        self.vertical_part(&self.nabla_vec(v, w))
    }

    /// Second fundamental form `(∇F_*)(X, Y)` for a field `Y`.
    pub fn sff_field(&self, x: &[f64], y: &[Jet1]) -> Vec<f64> {
        let fy = self.push_field(y);
        sub(&self.nabla_pullback(x, &fy), &self.push(&self.nabla(x, y)))
    }

    /// `(∇F_*)(X, Y)` with `Y` frame-extended.
    pub fn sff(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        self.sff_field(x, &self.extend(y))
    }

    pub fn sff_with(&self, x: &[f64], y: &[f64], ext: Extension) -> Vec<f64> {
        self.sff_field(x, &self.extend_with(y, ext))
    }

    /// Tension field: trace of the second fundamental form.
    pub fn tension(&self) -> Vec<f64> {
        let mut tau = vec![0.0; self.target_dim()];
        for e in self.full_frame() {
            tau = add(&tau, &self.sff_field(&field_values(e), e));
        }
        tau
    }

    /// Mean curvature `(1/k) Σ T_{V_i} V_i` of the fibers.
    pub fn fiber_mean_curvature(&self) -> Vec<f64> {
        let k = self.fiber_dim();
        let mut mu = vec![0.0; self.dim()];
        for v in &self.vertical {
            let vv = field_values(v);
            mu = add(&mu, &self.oneill_t(&vv, &vv));
        }
        if k > 0 {
            mu = scale(&mu, 1.0 / k as f64);
        }
        mu
    }

    /// `grad ln λ = g^{-1} d(½ ln λ²)`.
    pub fn grad_ln_lambda(&self) -> GradLnLambda {
        let d = self.lambda_sq.ln().scale(0.5).gradient;
        let full = mat_vec(&self.g_inv.values(), &d);
        let horizontal = self.horizontal_part(&full);
        let vertical = self.vertical_part(&full);
        let horizontally_homothetic = self.norm(&horizontal) < HOMOTHETIC_TOLERANCE;
        GradLnLambda {
            full,
            horizontal,
            vertical,
            horizontally_homothetic,
        }
    }

    /// Right-hand side of the horizontal identity:
    /// `X(ln λ) F_*Y + Y(ln λ) F_*X − g(X,Y) F_*(grad ln λ)`.
    pub fn sff_horizontal_rhs(&self, x: &[f64], y: &[f64], grad: &[f64]) -> Vec<f64> {
        let xl = self.g(x, grad);
        let yl = self.g(y, grad);
        let fx = self.push(x);
        let fy = self.push(y);
        let fg = self.push(grad);
        let gxy = self.g(x, y);
        (0..fx.len())
            .map(|a| xl * fy[a] + yl * fx[a] - gxy * fg[a])
            .collect()
    }

    pub fn verify_lemma1(&self) -> Lemma1Residuals {
        let grad = self.grad_ln_lambda().full;
        let hs: Vec<Vec<f64>> = self.horizontal.iter().map(|f| field_values(f)).collect();
        let vs: Vec<Vec<f64>> = self.vertical.iter().map(|f| field_values(f)).collect();
        let mut r = Lemma1Residuals {
            horizontal: 0.0,
            vertical: 0.0,
            mixed: 0.0,
        };
        for x in &hs {
            for y in &hs {
                let d = sub(&self.sff(x, y), &self.sff_horizontal_rhs(x, y, &grad));
                r.horizontal = r.horizontal.max(self.target_norm(&d));
            }
            for v in &vs {
                let d = add(&self.sff(x, v), &self.push(&self.oneill_a(x, v)));
                r.mixed = r.mixed.max(self.target_norm(&d));
            }
        }
        for v in &vs {
            for w in &vs {
                let d = add(&self.sff(v, w), &self.push(&self.oneill_t(v, w)));
                r.vertical = r.vertical.max(self.target_norm(&d));
            }
        }
        r
    }

    fn require_j(&self) -> Result<&super::Refinement, SubmersionError> {
        self.refinement.as_ref().ok_or(SubmersionError::Geometry(
            crate::geometry::GeometryError::MissingComplexStructure,
        ))
    }

    /// `J v` at the point.
    pub fn j(&self, v: &[f64]) -> Result<Vec<f64>, SubmersionError> {
        Ok(mat_vec(&self.require_j()?.j_values, v))
    }

    fn check_len(&self, v: &[f64]) -> Result<(), SubmersionError> {
        if v.len() != self.dim() {
            return Err(SubmersionError::VectorLength {
                got: v.len(),
                expected: self.dim(),
            });
        }
        Ok(())
    }

    /// `Jv = φv + ωv` for vertical `v`.
    pub fn phi_omega(&self, v: &[f64]) -> Result<(Vec<f64>, Vec<f64>), SubmersionError> {
        self.check_len(v)?;
        let off = self.norm(&self.horizontal_part(v));
        if off > 1e-9 * self.norm(v).max(1.0) {
            return Err(SubmersionError::NotVertical(off));
        }
        let jv = self.j(v)?;
        Ok((self.vertical_part(&jv), self.horizontal_part(&jv)))
    }

    /// `Jx = Bx + Cx` for horizontal `x`.
    pub fn bc_decompose(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>), SubmersionError> {
        self.check_len(x)?;
        let off = self.norm(&self.vertical_part(x));
        if off > 1e-9 * self.norm(x).max(1.0) {
            return Err(SubmersionError::NotHorizontal(off));
        }
        let jx = self.j(x)?;
        Ok((self.vertical_part(&jx), self.horizontal_part(&jx)))
    }
}

#[cfg(test)]
mod tests {
    use super::super::SmoothMap;
    use super::*;
    use crate::expr::parse;
    use crate::geometry::{ChartedManifold, SampleDomain};

    fn map(src: ChartedManifold, tgt: ChartedManifold, comps: &[&str]) -> SmoothMap {
        let n = src.dim();
        SmoothMap::new(
            src,
            tgt,
            comps.iter().map(|c| parse(c, n).unwrap()).collect(),
        )
        .unwrap()
    }

    fn e(i: usize, n: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    }

    fn example33() -> SmoothMap {
        let src = ChartedManifold::euclidean(6)
            .with_complex_structure(ChartedManifold::canonical_complex_structure(6))
            .unwrap();
        map(
            src,
            ChartedManifold::euclidean(2),
            &["exp(x3)*cos(x5)", "exp(x3)*sin(x5)"],
        )
    }

    #[test]
    fn exp1_sff_tension_and_lemma() {
        let m = map(
            ChartedManifold::euclidean(2),
            ChartedManifold::euclidean(1),
            &["exp(x1)"],
        );
        let geo = LocalGeometry::new(&m, &[0.0, 0.3]).unwrap();
        let s = geo.sff(&e(0, 2), &e(0, 2));
        assert!((s[0] - 1.0).abs() < 1e-12);
        assert!((geo.tension()[0] - 1.0).abs() < 1e-12);
        let gl = geo.grad_ln_lambda();
        assert!((gl.full[0] - 1.0).abs() < 1e-12 && gl.full[1].abs() < 1e-12);
        assert!(!gl.horizontally_homothetic);
        let rhs = geo.sff_horizontal_rhs(&e(0, 2), &e(0, 2), &gl.full);
        assert!((rhs[0] - 1.0).abs() < 1e-12);
        assert!(geo.verify_lemma1().max() < 1e-9);
    }

    #[test]
    fn example_tensors_vanish_where_expected() {
        let geo = LocalGeometry::new(&example33(), &[0.1, 0.2, 0.3, -0.4, 0.5, 0.6]).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let t = geo.oneill_t(&geo.vertical_part(&e(i, 6)), &e(j, 6));
                assert!(t.iter().all(|x| x.abs() < 1e-12));
                let th = geo.oneill_t(&geo.horizontal_part(&e(i, 6)), &e(j, 6));
                assert!(th.iter().all(|x| x.abs() < 1e-15));
            }
        }
        assert!(geo.tension().iter().all(|x| x.abs() < 1e-7));
        assert!(geo.fiber_mean_curvature().iter().all(|x| x.abs() < 1e-12));
        let gl = geo.grad_ln_lambda();
        assert!((gl.full[2] - 1.0).abs() < 1e-12);
        assert!(geo.verify_lemma1().max() < 1e-7);
    }

    #[test]
    fn example_phi_omega_and_bc() {
        let geo = LocalGeometry::new(&example33(), &[0.1, 0.2, 0.3, -0.4, 0.5, 0.6]).unwrap();
        let (phi, omega) = geo.phi_omega(&e(0, 6)).unwrap();
        assert!((phi[1] - 1.0).abs() < 1e-12 && omega.iter().all(|x| x.abs() < 1e-12));
        let (phi, omega) = geo.phi_omega(&e(3, 6)).unwrap();
        assert!(phi.iter().all(|x| x.abs() < 1e-12));
        let j4 = geo.j(&e(3, 6)).unwrap();
        assert!(omega.iter().zip(&j4).all(|(a, b)| (a - b).abs() < 1e-12));
        assert!(matches!(
            geo.phi_omega(&e(2, 6)),
            Err(SubmersionError::NotVertical(_))
        ));

        let x = geo.horizontal_part(&e(2, 6));
        let (b, c) = geo.bc_decompose(&x).unwrap();
        assert!(c.iter().all(|v| v.abs() < 1e-12));
        assert!((geo.norm(&b) - geo.norm(&x)).abs() < 1e-12);
        assert!(matches!(
            geo.bc_decompose(&e(0, 6)),
            Err(SubmersionError::NotHorizontal(_))
        ));
    }

    #[test]
    fn a_tensor_matches_half_bracket() {
        let geo = LocalGeometry::new(&example33(), &[0.1, 0.2, 0.3, -0.4, 0.5, 0.6]).unwrap();
        let (x1, x2) = (&geo.horizontal[0], &geo.horizontal[1]);
        let a = geo.oneill_a(&field_values(x1), &field_values(x2));
        let half = scale(&geo.vertical_part(&geo.bracket(x1, x2)), 0.5);
        assert!(sub(&geo.vertical_part(&a), &half)
            .iter()
            .all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn circle_fibers_mean_curvature() {
        let mut metric = Vec::new();
        metric.push(parse("1", 2).unwrap());
        metric.push(parse("0", 2).unwrap());
        metric.push(parse("x1^2", 2).unwrap());
        let src = ChartedManifold::new(2, metric, None, SampleDomain::cube(2, 1.0, 3.0)).unwrap();
        let m = map(src, ChartedManifold::euclidean(1), &["x1"]);
        let geo = LocalGeometry::new(&m, &[2.0, 0.0]).unwrap();
        let mu = geo.fiber_mean_curvature();
        assert!((mu[0] + 0.5).abs() < 1e-12 && mu[1].abs() < 1e-12);
    }
}
