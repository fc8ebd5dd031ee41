use nalgebra::DMatrix;

use crate::geometry::field::{field_values, FieldJet};
use crate::submersion::{LocalGeometry, Refinement};

use super::{
    Check, CheckContext, ConditionReport, DimensionBookkeeping, Side, TheoremError, Verdict,
    PARALLEL_TOLERANCE,
};

fn mv(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum())
        .collect()
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

fn values(fs: &[FieldJet]) -> Vec<Vec<f64>> {
    fs.iter().map(|f| field_values(f)).collect()
}

/// Running maximum over a quantifier range; empty ranges are vacuous.
#[derive(Default)]
struct Acc {
    max: f64,
    any: bool,
}

impl Acc {
    fn push(&mut self, v: f64) {
        self.any = true;
        if !(v <= self.max) {
            self.max = v;
        }
    }

    fn side(&self) -> Side {
        if self.any {
            Side::Value(self.max)
        } else {
            Side::Vacuous
        }
    }
}

/// Values and operators shared by the checks at one point.
struct Probe<'a> {
    geo: &'a LocalGeometry,
    r: &'a Refinement,
    lam: f64,
    lam2: f64,
    grad: Vec<f64>,
    p_d1: DMatrix<f64>,
    p_d2: DMatrix<f64>,
    p_mu: DMatrix<f64>,
    hor: Vec<Vec<f64>>,
    ver: Vec<Vec<f64>>,
    d1: Vec<Vec<f64>>,
    d2: Vec<Vec<f64>>,
    mu: Vec<Vec<f64>>,
}

impl<'a> Probe<'a> {
    fn new(geo: &'a LocalGeometry, r: &'a Refinement) -> Self {
        Probe {
            geo,
            r,
            lam: geo.lambda(),
            lam2: geo.lambda_sq.value,
            grad: geo.grad_ln_lambda().full,
            p_d1: r.p_d1.values(),
            p_d2: r.p_d2.values(),
            p_mu: r.p_mu.values(),
            hor: values(&geo.horizontal),
            ver: values(&geo.vertical),
            d1: values(&r.d1),
            d2: values(&r.d2),
            mu: values(&r.mu),
        }
    }

    fn j(&self, v: &[f64]) -> Vec<f64> {
        mv(&self.r.j_values, v)
    }

    /// `B` on horizontal vectors, `φ` on vertical ones.
    fn b(&self, v: &[f64]) -> Vec<f64> {
        self.geo.vertical_part(&self.j(v))
    }

    /// `C` on horizontal vectors, `ω` on vertical ones.
    fn c(&self, v: &[f64]) -> Vec<f64> {
        self.geo.horizontal_part(&self.j(v))
    }

    fn jf(&self, f: &FieldJet) -> FieldJet {
        self.r.j.mul_vec(f)
    }

    fn bf(&self, f: &FieldJet) -> FieldJet {
        self.geo.p_v.mul_vec(&self.jf(f))
    }

    fn cf(&self, f: &FieldJet) -> FieldJet {
        self.geo.p_h.mul_vec(&self.jf(f))
    }

    fn g(&self, u: &[f64], v: &[f64]) -> f64 {
        self.geo.g(u, v)
    }

    fn gn(&self, a: &[f64], b: &[f64]) -> f64 {
        self.geo.g_target(a, b)
    }

    fn norm(&self, v: &[f64]) -> f64 {
        self.geo.norm(v)
    }

    fn tnorm(&self, a: &[f64]) -> f64 {
        self.geo.target_norm(a)
    }

    /// `v(ln λ)`
    fn dl(&self, v: &[f64]) -> f64 {
        self.g(v, &self.grad)
    }

    /// `∇^F_X F_*Y` for a field `Y`.
    fn nabla_f(&self, x: &[f64], y: &FieldJet) -> Vec<f64> {
        self.geo.nabla_pullback(x, &self.geo.push_field(y))
    }

    /// Component of a target vector orthogonal to `F_*(μ)`.
    fn off_pushed_mu(&self, s: &[f64]) -> Vec<f64> {
        let mut out = s.to_vec();
        for m in &self.mu {
            let fm = self.geo.push(m);
            let c = self.gn(s, &fm) / self.lam2;
            out = sub(&out, &scale(&fm, c));
        }
        out
    }

    fn horizontal_homothety(&self) -> f64 {
        self.lam * self.norm(&self.geo.horizontal_part(&self.grad))
    }
}

fn gate(check: Check, ctx: &CheckContext, geo: &LocalGeometry) -> Option<String> {
    if geo.refinement.is_none() {
        return Some("no complex structure".into());
    }
    if check.needs_kahler() {
        if let Some(r) = ctx.kahler.unmet_reason() {
            return Some(r.into());
        }
    }
    if ctx.machinery_only {
        return Some("machinery-only".into());
    }
    None
}

pub(super) fn evaluate(
    check: Check,
    geo: &LocalGeometry,
    ctx: &CheckContext,
) -> Result<ConditionReport, TheoremError> {
    let tol = ctx.tol;
    let gated = gate(check, ctx, geo);
    let probe = geo.refinement().map(|r| Probe::new(geo, r));
    let name = check.name();
    let point = &geo.point;
    let report = match check {
        Check::TensionFormula => tension_formula(geo, tol)?,
        Check::Harmonicity => harmonicity(geo, gated.as_deref(), tol),
        Check::TotallyGeodesicCharacterization => {
            totally_geodesic(geo, probe.as_ref(), gated.as_deref(), tol)
        }
        Check::VerticalTotallyGeodesic => {
            vertical_totally_geodesic(geo, probe.as_ref(), gated.as_deref(), tol)
        }
        Check::HorizontalIntegrability => {
            horizontal_integrability(geo, probe.as_ref(), gated.as_deref(), tol)
        }
        Check::HorizontalTotallyGeodesic => {
            horizontal_totally_geodesic(geo, probe.as_ref(), gated.as_deref(), tol)
        }
        Check::ProductTotalSpace => combine(
            name,
            point,
            tol,
            &horizontal_totally_geodesic(geo, probe.as_ref(), gated.as_deref(), tol),
            &vertical_totally_geodesic(geo, probe.as_ref(), gated.as_deref(), tol),
        ),
        _ => {
            let Some(p) = probe.as_ref() else {
                return Ok(ConditionReport::skipped(
                    name,
                    point,
                    tol,
                    "no complex structure",
                ));
            };
            let g = gated.as_deref();
            match check {
                Check::D2Integrable => d2_integrable(p, g, tol),
                Check::D1Integrability => d1_integrability(p, g, tol),
                Check::HomotheticCharacterization => homothetic(p, g, tol),
                Check::D1TotallyGeodesic => d1_totally_geodesic(p, g, tol),
                Check::D2TotallyGeodesic => d2_totally_geodesic(p, g, tol),
                Check::ProductFibers => combine(
                    name,
                    point,
                    tol,
                    &d1_totally_geodesic(p, g, tol),
                    &d2_totally_geodesic(p, g, tol),
                ),
                Check::Jd2MuTotallyGeodesic => jd2_mu(p, g, tol),
                Check::AntiHolomorphicIntegrability => anti_holomorphic_integrability(p, g, tol),
                Check::AntiHolomorphicTotallyGeodesic => {
                    anti_holomorphic_totally_geodesic(p, g, tol)
                }
                Check::D2ParallelHomothety => d2_parallel_homothety(p, g, tol),
                Check::MuParallelDilation => mu_parallel_dilation(p, g, tol),
                _ => unreachable!("handled above"),
            }
        }
    };
    Ok(report)
}

fn side_of(r: &ConditionReport, a: bool) -> Side {
    let (res, verdict, vacuous) = if a {
        (r.residual_a, r.verdict_a, r.vacuous_a)
    } else {
        (r.residual_b, r.verdict_b, r.vacuous_b)
    };
    if verdict == Verdict::Skipped {
        Side::Skipped(r.skipped.clone().unwrap_or_default())
    } else if vacuous {
        Side::Vacuous
    } else {
        Side::Value(res)
    }
}

fn merge(x: Side, y: Side) -> Side {
    match (x, y) {
        (Side::Skipped(r), _) | (_, Side::Skipped(r)) => Side::Skipped(r),
        (Side::Vacuous, Side::Vacuous) => Side::Vacuous,
        (Side::Value(a), Side::Value(b)) => Side::Value(if a.is_nan() || a > b { a } else { b }),
        (Side::Value(a), Side::Vacuous) | (Side::Vacuous, Side::Value(a)) => Side::Value(a),
    }
}

/// Conjunction of two component checks.
fn combine(
    name: &str,
    point: &[f64],
    tol: f64,
    r1: &ConditionReport,
    r2: &ConditionReport,
) -> ConditionReport {
    let a = merge(side_of(r1, true), side_of(r2, true));
    let b = merge(side_of(r1, false), side_of(r2, false));
    let mut out = ConditionReport::new(name, point, tol, a, b);
    out.identity_gap = match (r1.identity_gap, r2.identity_gap) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, y) => x.or(y),
    };
    out.with_note(format!("conjunction of {} and {}", r1.name, r2.name))
}

fn report(check: Check, p: &Probe, tol: f64, a: Side, b: Side, gap: &Acc) -> ConditionReport {
    let r = ConditionReport::new(check.name(), &p.geo.point, tol, a, b);
    if gap.any {
        r.with_gap(gap.max)
    } else {
        r
    }
}

/// `D2` is always integrable: `[W_i, W_j]` has no component outside `D2`.
fn d2_integrable(p: &Probe, gated: Option<&str>, tol: f64) -> ConditionReport {
    let mut a = Acc::default();
    for wi in &p.r.d2 {
        for wj in &p.r.d2 {
            let br = p.geo.bracket(wi, wj);
            a.push(p.norm(&sub(&br, &mv(&p.p_d2, &br))));
        }
    }
    let b = match gated {
        Some(reason) => Side::Skipped(reason.into()),
        None if p.d2.is_empty() => Side::Vacuous,
        None => Side::Value(0.0),
    };
    report(Check::D2Integrable, p, tol, a.side(), b, &Acc::default())
        .with_note("condition B is the unconditional assertion")
}

/// `D1` integrable iff `(∇F_*)(Y,JX) − (∇F_*)(X,JY) ∈ F_*(μ)`.
fn d1_integrability(p: &Probe, gated: Option<&str>, tol: f64) -> ConditionReport {
    let vacuous = p.d1.is_empty() || p.d2.is_empty();
    let mut a = Acc::default();
    let mut b = Acc::default();
    let mut gap = Acc::default();
    if !vacuous {
        for (xf, x) in p.r.d1.iter().zip(&p.d1) {
            for (yf, y) in p.r.d1.iter().zip(&p.d1) {
                let br = p.geo.bracket(xf, yf);
                a.push(p.norm(&mv(&p.p_d2, &br)));
                if gated.is_some() {
                    continue;
                }
                let s = sub(&p.geo.sff(y, &p.j(x)), &p.geo.sff(x, &p.j(y)));
                b.push(p.tnorm(&p.off_pushed_mu(&s)) / p.lam);
                for z in &p.d2 {
                    let rhs = p.gn(&s, &p.geo.push(&p.j(z))) / p.lam2;
                    gap.push((p.g(&br, z) - rhs).abs());
                }
            }
        }
    }
    let b = match gated {
        Some(r) => Side::Skipped(r.into()),
        None => b.side(),
    };
    report(Check::D1Integrability, p, tol, a.side(), b, &gap)
}

fn horizontal_bracket_residual(geo: &LocalGeometry) -> Acc {
    let mut a = Acc::default();
    if geo.vertical.is_empty() {
        return a;
    }
    for xf in &geo.horizontal {
        for yf in &geo.horizontal {
            a.push(geo.norm(&geo.vertical_part(&geo.bracket(xf, yf))));
        }
    }
    a
}

/// Horizontal distribution integrable iff the `D1` part of
/// `A_Y ωBX − A_X ωBY − J A_X CY + J A_Y CX` vanishes and the `D2` identity
/// (sign-corrected, see checker docs) has vanishing right-hand side.
fn horizontal_integrability(
    geo: &LocalGeometry,
    probe: Option<&Probe>,
    gated: Option<&str>,
    tol: f64,
) -> ConditionReport {
    let check = Check::HorizontalIntegrability;
    let a = horizontal_bracket_residual(geo);
    let (Some(p), None) = (probe, gated) else {
        let reason = gated.unwrap_or("no complex structure");
        return ConditionReport::new(
            check.name(),
            &geo.point,
            tol,
            a.side(),
            Side::Skipped(reason.into()),
        );
    };
    let mut b = Acc::default();
    let mut gap = Acc::default();
    for (xf, x) in geo.horizontal.iter().zip(&p.hor) {
        for (yf, y) in geo.horizontal.iter().zip(&p.hor) {
            let br = geo.bracket(xf, yf);
            let (bx, by, cx, cy) = (p.b(x), p.b(y), p.c(x), p.c(y));
            let z37 = sub(
                &add(&geo.oneill_a(y, &p.c(&bx)), &p.j(&geo.oneill_a(y, &cx))),
                &add(&geo.oneill_a(x, &p.c(&by)), &p.j(&geo.oneill_a(x, &cy))),
            );
            b.push(p.norm(&mv(&p.p_d1, &z37)));
            for v in &p.d1 {
                gap.push((p.g(&br, v) - p.g(&z37, v)).abs());
            }
            let term = add(
                &sub(&geo.oneill_a(x, &by), &geo.oneill_a(y, &bx)),
                &add(
                    &sub(&scale(y, p.dl(&cx)), &scale(x, p.dl(&cy))),
                    &scale(&p.grad, 2.0 * p.g(x, &cy)),
                ),
            );
            let pull = sub(&p.nabla_f(x, &p.cf(yf)), &p.nabla_f(y, &p.cf(xf)));
            for w in &p.d2 {
                let jw = p.j(w);
                let rhs = p.g(&term, &jw) + p.gn(&pull, &geo.push(&jw)) / p.lam2;
                b.push(rhs.abs());
                gap.push((p.g(&br, w) - rhs).abs());
            }
        }
    }
    report(check, p, tol, a.side(), b.side(), &gap)
        .with_note("D1 condition read as 'has no D1 component'; D2 identity used with corrected sign of the pullback term")
}

/// Horizontally homothetic iff `λ² g(A_Y BX − A_X BY, JW) = g_N(∇^F_Y F_*CX − ∇^F_X F_*CY, F_*JW)`,
/// under integrability of the horizontal distribution.
fn homothetic(p: &Probe, gated: Option<&str>, tol: f64) -> ConditionReport {
    let check = Check::HomotheticCharacterization;
    let geo = p.geo;
    let a = Side::Value(p.horizontal_homothety());
    if let Some(r) = gated {
        return report(check, p, tol, a, Side::Skipped(r.into()), &Acc::default());
    }
    let hyp = horizontal_bracket_residual(geo);
    if hyp.any && hyp.max >= tol {
        return report(
            check,
            p,
            tol,
            a,
            Side::Skipped("hypothesis unmet: horizontal distribution not integrable".into()),
            &Acc::default(),
        )
        .with_note(format!("horizontal bracket residual {:.3e}", hyp.max));
    }
    let mut b = Acc::default();
    for (xf, x) in geo.horizontal.iter().zip(&p.hor) {
        for (yf, y) in geo.horizontal.iter().zip(&p.hor) {
            let ab = sub(&geo.oneill_a(y, &p.b(x)), &geo.oneill_a(x, &p.b(y)));
            let pull = sub(&p.nabla_f(y, &p.cf(xf)), &p.nabla_f(x, &p.cf(yf)));
            for w in &p.d2 {
                let jw = p.j(w);
                let lhs = p.lam2 * p.g(&ab, &jw);
                let rhs = p.gn(&pull, &geo.push(&jw));
                b.push((lhs - rhs).abs() / p.lam);
            }
        }
    }
    let r = report(check, p, tol, a, b.side(), &Acc::default());
    if p.mu.is_empty() {
        r.with_note("μ = 0: condition B carries no dilation term")
    } else {
        r
    }
}

/// Horizontal distribution totally geodesic iff `A_X CY + V∇_X BY ∈ D2` and the
/// `W`-identity has vanishing right-hand side.
fn horizontal_totally_geodesic(
    geo: &LocalGeometry,
    probe: Option<&Probe>,
    gated: Option<&str>,
    tol: f64,
) -> ConditionReport {
    let check = Check::HorizontalTotallyGeodesic;
    let mut a = Acc::default();
    if !geo.vertical.is_empty() {
        for x in values(&geo.horizontal) {
            for yf in &geo.horizontal {
                a.push(geo.norm(&geo.vertical_part(&geo.nabla(&x, yf))));
            }
        }
    }
    let (Some(p), None) = (probe, gated) else {
        let reason = gated.unwrap_or("no complex structure");
        return ConditionReport::new(
            check.name(),
            &geo.point,
            tol,
            a.side(),
            Side::Skipped(reason.into()),
        );
    };
    let mut b = Acc::default();
    let mut gap = Acc::default();
    for x in &p.hor {
        for (yf, y) in geo.horizontal.iter().zip(&p.hor) {
            let nv = geo.nabla(x, yf);
            let cy = p.c(y);
            let z = add(
                &geo.oneill_a(x, &cy),
                &geo.vertical_part(&geo.nabla(x, &p.bf(yf))),
            );
            b.push(p.norm(&mv(&p.p_d1, &z)));
            let phi_z = p.b(&z);
            for v in &p.d1 {
                gap.push((p.g(&nv, v) + p.g(&phi_z, v)).abs());
            }
            let term = add(
                &sub(&geo.oneill_a(x, &p.b(y)), &scale(x, p.dl(&cy))),
                &scale(&p.grad, p.g(x, &cy)),
            );
            for (wf, w) in p.r.d2.iter().zip(&p.d2) {
                let jw = p.j(w);
                let rhs = p.g(&term, &jw) - p.gn(&p.nabla_f(x, &p.jf(wf)), &geo.push(&cy)) / p.lam2;
                b.push(rhs.abs());
                gap.push((p.g(&nv, w) - rhs).abs());
            }
        }
    }
    report(check, p, tol, a.side(), b.side(), &gap)
}

/// Fibers totally geodesic iff the `μ`-identity has vanishing right-hand side
/// and `T_V ωU + ∇̂_V φU ∈ D1`.
fn vertical_totally_geodesic(
    geo: &LocalGeometry,
    probe: Option<&Probe>,
    gated: Option<&str>,
    tol: f64,
) -> ConditionReport {
    let check = Check::VerticalTotallyGeodesic;
    let mut a = Acc::default();
    for u in values(&geo.vertical) {
        for vf in &geo.vertical {
            a.push(geo.norm(&geo.horizontal_part(&geo.nabla(&u, vf))));
        }
    }
    let (Some(p), None) = (probe, gated) else {
        let reason = gated.unwrap_or("no complex structure");
        return ConditionReport::new(
            check.name(),
            &geo.point,
            tol,
            a.side(),
            Side::Skipped(reason.into()),
        );
    };
    let mut b = Acc::default();
    let mut gap = Acc::default();
    for (uf, u) in geo.vertical.iter().zip(&p.ver) {
        for (vf, v) in geo.vertical.iter().zip(&p.ver) {
            let nv = geo.nabla(u, vf);
            let (phi_u, om_u, phi_v, om_v) = (p.b(u), p.c(u), p.b(v), p.c(v));
            let vec = add(
                &add(&p.c(&geo.oneill_t(u, &phi_v)), &geo.oneill_a(&om_v, &phi_u)),
                &scale(&p.grad, p.g(&om_v, &om_u)),
            );
            let f_om_u = geo.push(&om_u);
            for (xf, x) in p.r.mu.iter().zip(&p.mu) {
                let rhs = -p.g(&vec, x) + p.gn(&p.nabla_f(&om_v, xf), &f_om_u) / p.lam2;
                b.push(rhs.abs());
                gap.push((p.g(&nv, x) - rhs).abs());
            }
            let z = add(
                &geo.oneill_t(v, &om_u),
                &geo.vertical_part(&geo.nabla(v, &p.bf(uf))),
            );
            b.push(p.norm(&mv(&p.p_d2, &z)));
            let om_z = p.c(&z);
            for w in &p.d2 {
                let jw = p.j(w);
                gap.push((p.g(&nv, &jw) + p.g(&om_z, &jw)).abs());
            }
        }
    }
    report(check, p, tol, a.side(), b.side(), &gap)
}

/// `D1` totally geodesic iff `(∇F_*)(X1,JY1) ∈ F_*(μ)` and
/// `λ^{-2} g_N((∇F_*)(X1,JY1), F_*CX) = g(Y1, T_{X1} ωBX)`.
fn d1_totally_geodesic(p: &Probe, gated: Option<&str>, tol: f64) -> ConditionReport {
    let geo = p.geo;
    let mut a = Acc::default();
    let mut b = Acc::default();
    let mut gap = Acc::default();
    for (x1, _) in p.d1.iter().zip(&p.r.d1) {
        for (y1f, y1) in p.r.d1.iter().zip(&p.d1) {
            let nv = geo.nabla(x1, y1f);
            a.push(p.norm(&sub(&nv, &mv(&p.p_d1, &nv))));
            if gated.is_some() {
                continue;
            }
            let s = geo.sff(x1, &p.j(y1));
            b.push(p.tnorm(&p.off_pushed_mu(&s)) / p.lam);
            for x2 in &p.d2 {
                let rhs = -p.gn(&s, &geo.push(&p.j(x2))) / p.lam2;
                gap.push((p.g(&nv, x2) - rhs).abs());
            }
            for x in &p.hor {
                let rhs = p.g(y1, &geo.oneill_t(x1, &p.c(&p.b(x))))
                    - p.gn(&s, &geo.push(&p.c(x))) / p.lam2;
                b.push(rhs.abs());
                gap.push((p.g(&nv, x) - rhs).abs());
            }
        }
    }
    let b = match gated {
        Some(r) => Side::Skipped(r.into()),
        None => b.side(),
    };
    report(Check::D1TotallyGeodesic, p, tol, a.side(), b, &gap)
}

/// `D2` totally geodesic iff `(∇F_*)(X2,JX1) ∈ F_*(μ)` and the `X`-identity
/// has vanishing right-hand side.
fn d2_totally_geodesic(p: &Probe, gated: Option<&str>, tol: f64) -> ConditionReport {
    let geo = p.geo;
    let mut a = Acc::default();
    let mut b = Acc::default();
    let mut gap = Acc::default();
    for (x2f, x2) in p.r.d2.iter().zip(&p.d2) {
        for (y2f, y2) in p.r.d2.iter().zip(&p.d2) {
            let nv = geo.nabla(x2, y2f);
            a.push(p.norm(&sub(&nv, &mv(&p.p_d2, &nv))));
            if gated.is_some() {
                continue;
            }
            let jy2 = p.j(y2);
            for x1 in &p.d1 {
                let s = geo.sff(x2, &p.j(x1));
                b.push(p.tnorm(&p.off_pushed_mu(&s)) / p.lam);
                let rhs = p.gn(&s, &geo.push(&jy2)) / p.lam2;
                gap.push((p.g(&nv, x1) - rhs).abs());
            }
            let pull = p.nabla_f(&jy2, &p.jf(x2f));
            let h_grad = geo.horizontal_part(&p.grad);
            for x in &p.hor {
                let jcx = p.j(&p.c(x));
                let rhs = p.g(y2, &p.b(&geo.oneill_t(x2, &p.b(x))))
                    + p.g(y2, x2) * p.g(&h_grad, &jcx)
                    + p.gn(&pull, &geo.push(&jcx)) / p.lam2;
                b.push(rhs.abs());
                gap.push((p.g(&nv, x) - rhs).abs());
            }
        }
    }
    let b = match gated {
        Some(r) => Side::Skipped(r.into()),
        None => b.side(),
    };
    report(Check::D2TotallyGeodesic, p, tol, a.side(), b, &gap)
}

/// `τ = −k F_*(μ^ker) + (2 − dim N) F_*(grad ln λ)`, `k` the fiber dimension.
fn tension_formula(geo: &LocalGeometry, tol: f64) -> Result<ConditionReport, TheoremError> {
    let (n, nt, k) = (geo.dim(), geo.target_dim(), geo.fiber_dim());
    let mut note = format!("k={k}, dim N={nt}");
    if geo.refinement.is_some() {
        let b = DimensionBookkeeping::from_dims(geo.dims(), n, nt)?;
        note = format!("m={}, n={}, r={}", b.m, b.n, b.r);
    }
    let tau = geo.tension();
    let rhs = tension_rhs(geo);
    let gap = geo.target_norm(&sub(&tau, &rhs));
    Ok(ConditionReport::new(
        Check::TensionFormula.name(),
        &geo.point,
        tol,
        Side::Value(geo.target_norm(&tau)),
        Side::Value(geo.target_norm(&rhs)),
    )
    .with_gap(gap)
    .with_note(note))
}

fn tension_rhs(geo: &LocalGeometry) -> Vec<f64> {
    let k = geo.fiber_dim() as f64;
    let nt = geo.target_dim() as f64;
    let mu = geo.push(&geo.fiber_mean_curvature());
    let gl = geo.push(&geo.grad_ln_lambda().full);
    add(&scale(&mu, -k), &scale(&gl, 2.0 - nt))
}

/// Harmonicity against minimal fibers and horizontal homothety.
fn harmonicity(geo: &LocalGeometry, gated: Option<&str>, tol: f64) -> ConditionReport {
    let tau = geo.target_norm(&geo.tension());
    let k = geo.fiber_dim() as f64;
    let mu = geo.fiber_mean_curvature();
    let grad = geo.grad_ln_lambda();
    let homothety = geo.lambda() * geo.norm(&grad.horizontal);
    let flags = format!(
        "harmonic={}, minimal={}, homothetic={}",
        Verdict::classify(tau, tol),
        Verdict::classify(geo.norm(&mu), tol),
        Verdict::classify(homothety, tol)
    );
    let b = match gated {
        Some(r) if r == "machinery-only" => Side::Skipped(r.into()),
        _ if geo.target_dim() == 2 => Side::Value(k * geo.target_norm(&geo.push(&mu))),
        _ => Side::Value(geo.target_norm(&tension_rhs(geo))),
    };
    let note = if geo.target_dim() == 2 {
        format!("dim N = 2: harmonic iff fibres minimal; {flags}")
    } else {
        format!("dim N != 2: statement lists three conditions but says 'any three imply the fourth'; checked through the tension formula; {flags}")
    };
    ConditionReport::new(
        Check::Harmonicity.name(),
        &geo.point,
        tol,
        Side::Value(tau),
        b,
    )
    .with_note(note)
}

/// `(∇F_*)(JU, X) = 0` for `U ∈ D2`, `X` horizontal, iff horizontally homothetic.
fn jd2_mu(p: &Probe, gated: Option<&str>, tol: f64) -> ConditionReport {
    let mut a = Acc::default();
    for u in &p.d2 {
        let ju = p.j(u);
        for x in &p.hor {
            a.push(p.tnorm(&p.geo.sff(&ju, x)));
        }
    }
    let b = match gated {
        Some(r) if r == "machinery-only" => Side::Skipped(r.into()),
        _ => Side::Value(p.horizontal_homothety()),
    };
    report(
        Check::Jd2MuTotallyGeodesic,
        p,
        tol,
        a.side(),
        b,
        &Acc::default(),
    )
}

/// Totally geodesic iff (a) `C T_U JV + ω∇̂_U JV = 0` on `D1`, (b)
/// `C H∇_U JW + ω T_U JW = 0`, (c) horizontally homothetic.
fn totally_geodesic(
    geo: &LocalGeometry,
    probe: Option<&Probe>,
    gated: Option<&str>,
    tol: f64,
) -> ConditionReport {
    let check = Check::TotallyGeodesicCharacterization;
    let frame: Vec<Vec<f64>> = geo.full_frame().map(|f| field_values(f)).collect();
    let mut a = Acc::default();
    for e in &frame {
        for f in &frame {
            a.push(geo.target_norm(&geo.sff(e, f)));
        }
    }
    let (Some(p), None) = (probe, gated) else {
        let reason = gated.unwrap_or("no complex structure");
        return ConditionReport::new(
            check.name(),
            &geo.point,
            tol,
            a.side(),
            Side::Skipped(reason.into()),
        );
    };
    let mut b = Acc::default();
    let mut gap = Acc::default();
    for u in &p.d1 {
        for (vf, v) in p.r.d1.iter().zip(&p.d1) {
            let jv = p.j(v);
            let z = add(
                &p.c(&geo.oneill_t(u, &jv)),
                &p.c(&geo.vertical_part(&geo.nabla(u, &p.jf(vf)))),
            );
            b.push(p.lam * p.norm(&z));
            gap.push(p.tnorm(&sub(&geo.sff(u, v), &geo.push(&z))));
        }
    }
    for u in &p.ver {
        for (wf, w) in p.r.d2.iter().zip(&p.d2) {
            let jw = p.j(w);
            let z = add(
                &p.c(&geo.horizontal_part(&geo.nabla(u, &p.jf(wf)))),
                &p.c(&geo.oneill_t(u, &jw)),
            );
            b.push(p.lam * p.norm(&z));
            gap.push(p.tnorm(&sub(&geo.sff(u, w), &geo.push(&z))));
        }
    }
    b.push(p.horizontal_homothety());
    report(check, p, tol, a.side(), b.side(), &gap)
        .with_note("conditions (a), (b) constrain D1xD1 and ker x D2 pairs; mixed vertical-horizontal pairs are not among them")
}

fn anti_holomorphic(p: &Probe) -> bool {
    p.mu.is_empty() && !p.d2.is_empty()
}

/// Anti-holomorphic case: horizontal distribution integrable iff
/// `g_N(F_*JW1, (∇F_*)(V,JW2)) = g_N(F_*JW2, (∇F_*)(V,JW1))`.
fn anti_holomorphic_integrability(p: &Probe, gated: Option<&str>, tol: f64) -> ConditionReport {
    let check = Check::AntiHolomorphicIntegrability;
    if !anti_holomorphic(p) {
        return ConditionReport::skipped(
            check.name(),
            &p.geo.point,
            tol,
            "hypothesis unmet: not anti-holomorphic",
        );
    }
    let a = horizontal_bracket_residual(p.geo).side();
    if let Some(r) = gated {
        return report(check, p, tol, a, Side::Skipped(r.into()), &Acc::default());
    }
    let mut b = Acc::default();
    for w1 in &p.d2 {
        let (jw1, fjw1) = (p.j(w1), p.geo.push(&p.j(w1)));
        for w2 in &p.d2 {
            let (jw2, fjw2) = (p.j(w2), p.geo.push(&p.j(w2)));
            for v in &p.ver {
                let d = p.gn(&fjw1, &p.geo.sff(v, &jw2)) - p.gn(&fjw2, &p.geo.sff(v, &jw1));
                b.push(d.abs() / p.lam2);
            }
        }
    }
    report(check, p, tol, a, b.side(), &Acc::default())
}

/// Anti-holomorphic case: horizontal distribution totally geodesic iff
/// `(∇F_*)(V, JW) ∈ F_*(μ)`.
fn anti_holomorphic_totally_geodesic(p: &Probe, gated: Option<&str>, tol: f64) -> ConditionReport {
    let check = Check::AntiHolomorphicTotallyGeodesic;
    if !anti_holomorphic(p) {
        return ConditionReport::skipped(
            check.name(),
            &p.geo.point,
            tol,
            "hypothesis unmet: not anti-holomorphic",
        );
    }
    let geo = p.geo;
    let mut a = Acc::default();
    if !geo.vertical.is_empty() {
        for x in &p.hor {
            for yf in &geo.horizontal {
                a.push(geo.norm(&geo.vertical_part(&geo.nabla(x, yf))));
            }
        }
    }
    if let Some(r) = gated {
        return report(
            check,
            p,
            tol,
            a.side(),
            Side::Skipped(r.into()),
            &Acc::default(),
        );
    }
    let mut b = Acc::default();
    for v in &p.ver {
        for w in &p.d2 {
            let s = geo.sff(v, &p.j(w));
            b.push(p.tnorm(&p.off_pushed_mu(&s)) / p.lam);
        }
    }
    report(check, p, tol, a.side(), b.side(), &Acc::default())
}

/// With `D2` parallel along the horizontal distribution: horizontally
/// homothetic iff `λ² g(A_X BY, JW) = g_N(∇^F_X F_*JW, F_*CY)`.
fn d2_parallel_homothety(p: &Probe, gated: Option<&str>, tol: f64) -> ConditionReport {
    let check = Check::D2ParallelHomothety;
    let geo = p.geo;
    let a = Side::Value(p.horizontal_homothety());
    if let Some(r) = gated {
        return report(check, p, tol, a, Side::Skipped(r.into()), &Acc::default());
    }
    let mut hyp = 0.0f64;
    for x in &p.hor {
        for wf in &p.r.d2 {
            let nw = geo.nabla(x, wf);
            hyp = hyp.max(p.norm(&sub(&nw, &mv(&p.p_d2, &nw))));
        }
    }
    if hyp >= PARALLEL_TOLERANCE {
        return report(
            check,
            p,
            tol,
            a,
            Side::Skipped(
                "hypothesis unmet: D2 not parallel along the horizontal distribution".into(),
            ),
            &Acc::default(),
        )
        .with_note(format!("parallelism residual {hyp:.3e}"));
    }
    let mut b = Acc::default();
    for x in &p.hor {
        for y in &p.hor {
            let aby = geo.oneill_a(x, &p.b(y));
            let fcy = geo.push(&p.c(y));
            for (wf, w) in p.r.d2.iter().zip(&p.d2) {
                let lhs = p.lam2 * p.g(&aby, &p.j(w));
                let rhs = p.gn(&p.nabla_f(x, &p.jf(wf)), &fcy);
                b.push((lhs - rhs).abs() / p.lam);
            }
        }
    }
    let r = report(check, p, tol, a, b.side(), &Acc::default())
        .with_note(format!("parallelism residual {hyp:.3e}"));
    if p.mu.is_empty() {
        r.with_note(format!(
            "parallelism residual {hyp:.3e}; μ = 0: condition B carries no dilation term"
        ))
    } else {
        r
    }
}

/// With `μ` parallel along the fibers: `λ` constant on `μ` iff
/// `λ² g(C T_U φV + A_{ωV} φU, X) = g_N(∇^F_{ωV} F_*X, F_*ωU)`.
fn mu_parallel_dilation(p: &Probe, gated: Option<&str>, tol: f64) -> ConditionReport {
    let check = Check::MuParallelDilation;
    let geo = p.geo;
    let a = if p.mu.is_empty() {
        Side::Vacuous
    } else {
        Side::Value(p.lam * p.norm(&mv(&p.p_mu, &p.grad)))
    };
    if let Some(r) = gated {
        return report(check, p, tol, a, Side::Skipped(r.into()), &Acc::default());
    }
    let mut hyp = 0.0f64;
    for u in &p.ver {
        for xf in &p.r.mu {
            let nx = geo.nabla(u, xf);
            hyp = hyp.max(p.norm(&sub(&nx, &mv(&p.p_mu, &nx))));
        }
    }
    if hyp >= PARALLEL_TOLERANCE {
        return report(
            check,
            p,
            tol,
            a,
            Side::Skipped("hypothesis unmet: μ not parallel along the fibers".into()),
            &Acc::default(),
        )
        .with_note(format!("parallelism residual {hyp:.3e}"));
    }
    let mut b = Acc::default();
    for u in &p.ver {
        for v in &p.ver {
            let (phi_u, om_u, phi_v, om_v) = (p.b(u), p.c(u), p.b(v), p.c(v));
            let vec = add(&p.c(&geo.oneill_t(u, &phi_v)), &geo.oneill_a(&om_v, &phi_u));
            let f_om_u = geo.push(&om_u);
            for (xf, x) in p.r.mu.iter().zip(&p.mu) {
                let lhs = p.lam2 * p.g(&vec, x);
                let rhs = p.gn(&p.nabla_f(&om_v, xf), &f_om_u);
                b.push((lhs - rhs).abs() / p.lam);
            }
        }
    }
    let r = report(check, p, tol, a, b.side(), &Acc::default());
    if p.d2.is_empty() {
        r.with_note(format!("parallelism residual {hyp:.3e}; D2 = 0: ω vanishes, condition B carries no dilation term"))
    } else {
        r.with_note(format!("parallelism residual {hyp:.3e}"))
    }
}
