//! Run reports: canonical JSON and a human-readable table.

use std::fmt::Write as _;

use semisub_core::submersion::SplitDims;
use semisub_core::{ConditionReport, KahlerStatus, Verdict};
use serde::{Deserialize, Serialize};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SCENE: i32 = 2;
pub const EXIT_STRUCTURAL: i32 = 3;
pub const EXIT_DISAGREEMENT: i32 = 4;
pub const EXIT_HYPOTHESIS: i32 = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Engine {
    pub name: String,
    pub version: String,
    pub seed: u64,
    pub points: usize,
    pub tolerance: f64,
    pub kahler_tolerance: f64,
    pub machinery_only: bool,
    /// Every verdict is a pointwise statement on these samples.
    pub scope: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KahlerSummary {
    pub status: KahlerStatus,
    pub expected: bool,
    /// Max `|J² + I|`.
    pub square: f64,
    /// Max `|g(J·,J·) − g|`.
    pub compatibility: f64,
    /// Max `|∇J|`.
    pub nabla_j: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub index: usize,
    pub x: Vec<f64>,
    pub lambda: Option<f64>,
    pub dims: Option<SplitDims>,
    /// Largest structural residual at the point.
    pub structural: Option<f64>,
    /// Max residual of the conformal second fundamental form identities.
    pub lemma: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureSummary {
    pub dims: Option<SplitDims>,
    pub dims_constant: bool,
    pub max_structural: f64,
    pub max_lemma: f64,
    pub failures: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictCounts {
    pub holds: usize,
    pub fails: usize,
    pub inconclusive: usize,
    pub skipped: usize,
}

impl VerdictCounts {
    fn add(&mut self, v: Verdict) {
        match v {
            Verdict::Holds => self.holds += 1,
            Verdict::Fails => self.fails += 1,
            Verdict::Inconclusive => self.inconclusive += 1,
            Verdict::Skipped => self.skipped += 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub index: usize,
    pub residual_a: f64,
    pub residual_b: f64,
    pub verdict_a: Verdict,
    pub verdict_b: Verdict,
    pub agree: bool,
    pub vacuous: bool,
    pub identity_gap: Option<f64>,
    pub skipped: Option<String>,
    pub note: Option<String>,
}

impl PointResult {
    pub fn from_report(index: usize, r: &ConditionReport) -> Self {
        PointResult {
            index,
            residual_a: r.residual_a,
            residual_b: r.residual_b,
            verdict_a: r.verdict_a,
            verdict_b: r.verdict_b,
            agree: r.agree,
            vacuous: r.is_vacuous(),
            identity_gap: r.identity_gap,
            skipped: r.skipped.clone(),
            note: r.note.clone(),
        }
    }

    pub fn passes(&self) -> bool {
        self.agree || self.vacuous
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub name: String,
    pub evaluated: usize,
    pub max_residual_a: f64,
    pub max_residual_b: f64,
    pub max_identity_gap: Option<f64>,
    pub verdicts_a: VerdictCounts,
    pub verdicts_b: VerdictCounts,
    pub agree: usize,
    pub vacuous: usize,
    /// Indices of points where one side holds and the other fails (non-vacuous).
    pub disagreements: Vec<usize>,
    pub skip_reasons: Vec<String>,
    pub results: Vec<PointResult>,
}

impl CheckSummary {
    /// Aggregates per-point results.
    pub fn from_results(name: &str, results: Vec<PointResult>) -> Self {
        let mut s = CheckSummary {
            name: name.to_string(),
            evaluated: results.len(),
            max_residual_a: 0.0,
            max_residual_b: 0.0,
            max_identity_gap: None,
            verdicts_a: VerdictCounts::default(),
            verdicts_b: VerdictCounts::default(),
            agree: 0,
            vacuous: 0,
            disagreements: Vec::new(),
            skip_reasons: Vec::new(),
            results: Vec::new(),
        };
        for r in &results {
            if r.verdict_a != Verdict::Skipped {
                s.max_residual_a = s.max_residual_a.max(r.residual_a);
            }
            if r.verdict_b != Verdict::Skipped {
                s.max_residual_b = s.max_residual_b.max(r.residual_b);
            }
            if let Some(g) = r.identity_gap {
                s.max_identity_gap = Some(s.max_identity_gap.map_or(g, |m: f64| m.max(g)));
            }
            s.verdicts_a.add(r.verdict_a);
            s.verdicts_b.add(r.verdict_b);
            s.agree += r.agree as usize;
            s.vacuous += r.vacuous as usize;
            if !r.passes() {
                s.disagreements.push(r.index);
            }
            if let Some(reason) = &r.skipped {
                if !s.skip_reasons.contains(reason) {
                    s.skip_reasons.push(reason.clone());
                }
            }
        }
        s.skip_reasons.sort();
        s.results = results;
        s
    }

    pub fn all_pass(&self) -> bool {
        self.disagreements.is_empty()
    }

    fn status(&self) -> &'static str {
        if !self.all_pass() {
            "DISAGREE"
        } else if self.evaluated > 0
            && self.verdicts_a.skipped == self.evaluated
            && self.verdicts_b.skipped == self.evaluated
        {
            "skipped"
        } else if self.vacuous == self.evaluated && self.evaluated > 0 {
            "vacuous"
        } else {
            "agree"
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scene: String,
    pub engine: Engine,
    pub kahler: KahlerSummary,
    pub structure: StructureSummary,
    pub points: Vec<PointSummary>,
    pub checks: Vec<CheckSummary>,
    pub exit_code: i32,
}

impl RunReport {
    /// Stable-key-order JSON; identical for identical inputs.
    pub fn to_canonical(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_canonical(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let e = &self.engine;
        let _ = writeln!(
            out,
            "scene {}  points {}  seed {}  tol {:.1e}  kahler {}{}",
            self.scene,
            e.points,
            e.seed,
            e.tolerance,
            kahler_label(self.kahler.status),
            if e.machinery_only {
                "  machinery-only"
            } else {
                ""
            }
        );
        let dims = match self.structure.dims {
            Some(d) => format!("d1={} d2={} jd2={} mu={}", d.d1, d.d2, d.jd2, d.mu),
            None => "n/a".into(),
        };
        let lambda: Vec<f64> = self.points.iter().filter_map(|p| p.lambda).collect();
        let (lo, hi) = lambda
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &l| {
                (a.min(l), b.max(l))
            });
        let _ = writeln!(
            out,
            "structure: dims {dims}{}  lambda in [{lo:.4}, {hi:.4}]  structural {:.1e}  sff identities {:.1e}",
            if self.structure.dims_constant { "" } else { " (varying)" },
            self.structure.max_structural,
            self.structure.max_lemma
        );
        for f in &self.structure.failures {
            let _ = writeln!(out, "  structural failure: {f}");
        }
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "{:<36} {:>10} {:>10} {:>10}  {:>13}  {:>13}  status",
            "check", "max res A", "max res B", "max gap", "A h/f/i/s", "B h/f/i/s"
        );
        for c in &self.checks {
            let gap = c
                .max_identity_gap
                .map_or("-".to_string(), |g| format!("{g:.2e}"));
            let _ = writeln!(
                out,
                "{:<36} {:>10.2e} {:>10.2e} {:>10}  {:>13}  {:>13}  {}",
                c.name,
                c.max_residual_a,
                c.max_residual_b,
                gap,
                counts(&c.verdicts_a),
                counts(&c.verdicts_b),
                c.status()
            );
            for reason in &c.skip_reasons {
                let _ = writeln!(out, "    skipped: {reason}");
            }
            if let Some(&i) = c.disagreements.first() {
                let r = c
                    .results
                    .iter()
                    .find(|r| r.index == i)
                    .expect("disagreement index present");
                let _ = writeln!(
                    out,
                    "    {} disagreement(s); first at point {i} {:?}: A {} ({:.3e}), B {} ({:.3e})",
                    c.disagreements.len(),
                    self.points[i].x,
                    r.verdict_a,
                    r.residual_a,
                    r.verdict_b,
                    r.residual_b
                );
            }
        }
        let _ = writeln!(out, "\nexit code {}", self.exit_code);
        out
    }
}

fn kahler_label(s: KahlerStatus) -> &'static str {
    match s {
        KahlerStatus::Verified => "verified",
        KahlerStatus::NotKahler => "not-kahler",
        KahlerStatus::NoComplexStructure => "none",
    }
}

fn counts(c: &VerdictCounts) -> String {
    format!("{}/{}/{}/{}", c.holds, c.fails, c.inconclusive, c.skipped)
}
