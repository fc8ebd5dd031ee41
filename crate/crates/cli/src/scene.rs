//! Line-oriented scene files.
//!
//! ```text
//! name = example
//! [source]
//! dim = 4
//! g = identity
//! J = canonical
//! [target]
//! dim = 2
//! g 1 1 = exp(x1)
//! [map]
//! F 1 = x1
//! F 2 = x3
//! [sampling]
//! box = -1 1
//! box x2 = 0.5 2
//! exclude x4 periodic pi/2 offset 0
//! exclude zero x1^2 + x2^2 - 1
//! count = 200
//! seed = 7
//! [tolerances]
//! theorem = 1e-6
//! kahler = 1e-9
//! [flags]
//! machinery_only
//! ```

use std::path::Path;

use semisub_core::geometry::ExcludedLocus;
use semisub_core::theorems::{DEFAULT_KAHLER_TOLERANCE, DEFAULT_TOLERANCE};
use semisub_core::{
    parse, ChartedManifold, GeometryError, SampleDomain, ScalarExpr, SmoothMap, SubmersionError,
};
use thiserror::Error;

pub const DEFAULT_COUNT: usize = 100;
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("[{section}] {source}")]
    Geometry {
        section: &'static str,
        #[source]
        source: GeometryError,
    },
    #[error("[map] {0}")]
    Map(#[from] SubmersionError),
}

#[derive(Clone, Debug)]
pub struct Sampling {
    pub count: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub theorem: f64,
    pub kahler: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            theorem: DEFAULT_TOLERANCE,
            kahler: DEFAULT_KAHLER_TOLERANCE,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Flags {
    /// The scene declares its source Kähler; a failing `∇J` test is then a structural error.
    pub kahler_expected: bool,
    /// Only definition-level residuals are evaluated.
    pub machinery_only: bool,
}

/// A fully validated scene.
#[derive(Clone, Debug)]
pub struct Scene {
    pub name: String,
    pub map: SmoothMap,
    pub sampling: Sampling,
    pub tolerances: Tolerances,
    pub flags: Flags,
}

impl Scene {
    pub fn source(&self) -> &ChartedManifold {
        self.map.source()
    }

    pub fn target(&self) -> &ChartedManifold {
        self.map.target()
    }
}

pub fn load_scene(path: &Path) -> Result<Scene, SceneError> {
    let text = std::fs::read_to_string(path).map_err(|source| SceneError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_scene(&text, &stem)
}

#[derive(Clone, Copy, Debug)]
struct Span<'a> {
    text: &'a str,
    line: usize,
    column: usize,
}

impl<'a> Span<'a> {
    fn error(&self, message: impl Into<String>) -> SceneError {
        SceneError::Syntax {
            line: self.line,
            column: self.column,
            message: message.into(),
        }
    }

    /// Whitespace-separated words, each with its own column.
    fn words(&self) -> Vec<Span<'a>> {
        let mut out = Vec::new();
        let mut start = None;
        for (i, ch) in self
            .text
            .char_indices()
            .chain(std::iter::once((self.text.len(), ' ')))
        {
            match (ch.is_whitespace(), start) {
                (false, None) => start = Some(i),
                (true, Some(s)) => {
                    out.push(self.sub(s, i));
                    start = None;
                }
                _ => {}
            }
        }
        out
    }

    fn sub(&self, from: usize, to: usize) -> Span<'a> {
        Span {
            text: &self.text[from..to],
            line: self.line,
            column: self.column + self.text[..from].chars().count(),
        }
    }

    fn trimmed(&self) -> Span<'a> {
        let lead = self.text.len() - self.text.trim_start().len();
        let end = self.text.trim_end().len();
        if end <= lead {
            return self.sub(lead, lead);
        }
        self.sub(lead, end)
    }

    fn split_assign(&self) -> Option<(Span<'a>, Span<'a>)> {
        let eq = self.text.find('=')?;
        Some((
            self.sub(0, eq).trimmed(),
            self.sub(eq + 1, self.text.len()).trimmed(),
        ))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Section {
    Top,
    Source,
    Target,
    Map,
    Sampling,
    Tolerances,
    Flags,
}

#[derive(Default)]
struct ManifoldSpec<'a> {
    dim: Option<(usize, Span<'a>)>,
    identity: Option<Span<'a>>,
    metric: Vec<(usize, usize, Span<'a>)>,
    canonical_j: Option<Span<'a>>,
    j: Vec<(usize, usize, Span<'a>)>,
}

enum BoxEntry<'a> {
    All(f64, f64),
    Coord(usize, f64, f64, Span<'a>),
}

enum Exclusion<'a> {
    Periodic {
        coord: usize,
        step: f64,
        offset: f64,
    },
    Zero(Span<'a>),
}

#[derive(Default)]
struct Raw<'a> {
    name: Option<String>,
    source: ManifoldSpec<'a>,
    target: ManifoldSpec<'a>,
    map: Vec<(usize, Span<'a>)>,
    boxes: Vec<BoxEntry<'a>>,
    exclusions: Vec<(Exclusion<'a>, Span<'a>)>,
    count: Option<usize>,
    seed: Option<u64>,
    tolerances: Tolerances,
    flags: Flags,
}

/// Parses scene text; `fallback_name` is used when the text has no `name` entry.
pub fn parse_scene(text: &str, fallback_name: &str) -> Result<Scene, SceneError> {
    let mut raw = Raw::default();
    let mut section = Section::Top;
    let mut last_line = Span {
        text: "",
        line: 1,
        column: 1,
    };
    for (i, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or("");
        let span = Span {
            text: content,
            line: i + 1,
            column: 1,
        }
        .trimmed();
        last_line = Span {
            text: "",
            line: i + 1,
            column: 1,
        };
        if span.text.is_empty() {
            continue;
        }
        if let Some(inner) = span.text.strip_prefix('[') {
            let Some(name) = inner.strip_suffix(']') else {
                return Err(span.error("unterminated section header"));
            };
            section = match name.trim() {
                "source" => Section::Source,
                "target" => Section::Target,
                "map" => Section::Map,
                "sampling" => Section::Sampling,
                "tolerances" => Section::Tolerances,
                "flags" => Section::Flags,
                other => return Err(span.error(format!("unknown section `[{other}]`"))),
            };
            continue;
        }
        match section {
            Section::Top => top_entry(&mut raw, span)?,
            Section::Source => manifold_entry(&mut raw.source, &mut raw.flags, span, true)?,
            Section::Target => manifold_entry(&mut raw.target, &mut raw.flags, span, false)?,
            Section::Map => map_entry(&mut raw, span)?,
            Section::Sampling => sampling_entry(&mut raw, span)?,
            Section::Tolerances => tolerance_entry(&mut raw, span)?,
            Section::Flags => flag_entry(&mut raw, span)?,
        }
    }
    build(raw, fallback_name, last_line)
}

fn expect_assign<'a>(span: Span<'a>) -> Result<(Span<'a>, Span<'a>), SceneError> {
    let (key, value) = span
        .split_assign()
        .ok_or_else(|| span.error("expected `key = value`"))?;
    if value.text.is_empty() {
        return Err(value.error("missing value after `=`"));
    }
    Ok((key, value))
}

fn top_entry(raw: &mut Raw, span: Span) -> Result<(), SceneError> {
    let (key, value) = expect_assign(span)?;
    match key.text {
        "name" => raw.name = Some(value.text.to_string()),
        _ => return Err(key.error(format!("unknown key `{}` outside a section", key.text))),
    }
    Ok(())
}

fn parse_usize(span: Span) -> Result<usize, SceneError> {
    span.text.parse().map_err(|_| {
        span.error(format!(
            "expected a positive integer, found `{}`",
            span.text
        ))
    })
}

fn parse_index(span: Span) -> Result<usize, SceneError> {
    match parse_usize(span)? {
        0 => Err(span.error("indices start at 1")),
        i => Ok(i - 1),
    }
}

fn parse_coord(span: Span) -> Result<usize, SceneError> {
    let digits = span.text.strip_prefix('x').ok_or_else(|| {
        span.error(format!(
            "expected a coordinate like `x1`, found `{}`",
            span.text
        ))
    })?;
    parse_index(span.sub(1, 1 + digits.len()))
}

/// A real constant: `1.5`, `-2`, `pi`, `pi/2`, `3*pi/4`, `-pi`.
pub fn parse_constant(text: &str) -> Option<f64> {
    let t = text.trim();
    let (sign, body) = match t.strip_prefix('-') {
        Some(rest) => (-1.0, rest.trim_start()),
        None => (1.0, t),
    };
    let Some(pos) = body.find("pi") else {
        return body
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(|v| sign * v);
    };
    let (before, after) = (&body[..pos], &body[pos + 2..]);
    let factor = match before.trim() {
        "" => 1.0,
        b => b.strip_suffix('*')?.trim().parse::<f64>().ok()?,
    };
    let divisor = match after.trim() {
        "" => 1.0,
        a => a.strip_prefix('/')?.trim().parse::<f64>().ok()?,
    };
    let v = sign * factor * std::f64::consts::PI / divisor;
    v.is_finite().then_some(v)
}

fn constant(span: Span) -> Result<f64, SceneError> {
    parse_constant(span.text)
        .ok_or_else(|| span.error(format!("expected a number, found `{}`", span.text)))
}

fn manifold_entry<'a>(
    spec: &mut ManifoldSpec<'a>,
    flags: &mut Flags,
    span: Span<'a>,
    is_source: bool,
) -> Result<(), SceneError> {
    let (key, value) = expect_assign(span)?;
    let words = key.words();
    match words.iter().map(|w| w.text).collect::<Vec<_>>().as_slice() {
        ["dim"] => {
            if spec.dim.is_some() {
                return Err(key.error("duplicate `dim`"));
            }
            let d = parse_usize(value)?;
            spec.dim = Some((d, value));
        }
        ["g"] => {
            if value.text != "identity" {
                return Err(value.error("expected `identity` or entries `g i j = <expr>`"));
            }
            spec.identity = Some(value);
        }
        ["g", _, _] => spec
            .metric
            .push((parse_index(words[1])?, parse_index(words[2])?, value)),
        ["J"] => {
            if value.text != "canonical" {
                return Err(value.error("expected `canonical` or entries `J i j = <expr>`"));
            }
            spec.canonical_j = Some(value);
        }
        ["J", _, _] => spec
            .j
            .push((parse_index(words[1])?, parse_index(words[2])?, value)),
        ["kahler"] if is_source => {
            flags.kahler_expected = match value.text {
                "true" => true,
                "false" => false,
                _ => return Err(value.error("expected `true` or `false`")),
            }
        }
        _ => return Err(key.error(format!("unknown key `{}`", key.text))),
    }
    Ok(())
}

fn map_entry<'a>(raw: &mut Raw<'a>, span: Span<'a>) -> Result<(), SceneError> {
    let (key, value) = expect_assign(span)?;
    let words = key.words();
    if words.len() != 2 || words[0].text != "F" {
        return Err(key.error("expected `F <component> = <expr>`"));
    }
    let a = parse_index(words[1])?;
    if raw.map.iter().any(|(b, _)| *b == a) {
        return Err(words[1].error(format!("duplicate component {}", a + 1)));
    }
    raw.map.push((a, value));
    Ok(())
}

fn sampling_entry<'a>(raw: &mut Raw<'a>, span: Span<'a>) -> Result<(), SceneError> {
    let first = span.words()[0];
    if first.text == "exclude" {
        let rest = span.sub(first.text.len(), span.text.len()).trimmed();
        let words = rest.words();
        if words.len() >= 2 && words[0].text == "zero" {
            let expr = rest.sub(words[1].column - rest.column, rest.text.len());
            raw.exclusions.push((Exclusion::Zero(expr), span));
            return Ok(());
        }
        let texts: Vec<&str> = words.iter().map(|w| w.text).collect();
        return match texts.as_slice() {
            [_, "periodic", _] | [_, "periodic", _, "offset", _] => {
                let coord = parse_coord(words[0])?;
                let step = constant(words[2])?;
                if step <= 0.0 {
                    return Err(words[2].error("period must be positive"));
                }
                let offset = if words.len() == 5 {
                    constant(words[4])?
                } else {
                    0.0
                };
                raw.exclusions.push((
                    Exclusion::Periodic {
                        coord,
                        step,
                        offset,
                    },
                    span,
                ));
                Ok(())
            }
            _ => Err(span.error(
                "expected `exclude x<k> periodic <step> [offset <c>]` or `exclude zero <expr>`",
            )),
        };
    }
    let (key, value) = expect_assign(span)?;
    let words = key.words();
    match words.iter().map(|w| w.text).collect::<Vec<_>>().as_slice() {
        ["box"] | ["box", _] => {
            let vals = value.words();
            if vals.len() != 2 {
                return Err(value.error("expected `<lo> <hi>`"));
            }
            let (lo, hi) = (constant(vals[0])?, constant(vals[1])?);
            if !(lo < hi) {
                return Err(value.error(format!("invalid box: lower bound {lo} is not below {hi}")));
            }
            raw.boxes.push(if words.len() == 1 {
                BoxEntry::All(lo, hi)
            } else {
                BoxEntry::Coord(parse_coord(words[1])?, lo, hi, value)
            });
        }
        ["count"] => {
            let c = parse_usize(value)?;
            if c == 0 {
                return Err(value.error("count must be positive"));
            }
            raw.count = Some(c);
        }
        ["seed"] => {
            let s: u64 = value.text.parse().map_err(|_| {
                value.error(format!(
                    "expected a positive integer, found `{}`",
                    value.text
                ))
            })?;
            if s == 0 {
                return Err(value.error("seed must be positive"));
            }
            raw.seed = Some(s);
        }
        _ => return Err(key.error(format!("unknown key `{}`", key.text))),
    }
    Ok(())
}

fn tolerance_entry(raw: &mut Raw, span: Span) -> Result<(), SceneError> {
    let (key, value) = expect_assign(span)?;
    let v = constant(value)?;
    if !(v > 0.0) {
        return Err(value.error("tolerance must be positive"));
    }
    match key.text {
        "theorem" => raw.tolerances.theorem = v,
        "kahler" => raw.tolerances.kahler = v,
        _ => return Err(key.error(format!("unknown tolerance `{}`", key.text))),
    }
    Ok(())
}

fn flag_entry(raw: &mut Raw, span: Span) -> Result<(), SceneError> {
    let (key, on) = match span.split_assign() {
        Some((k, v)) => (
            k,
            match v.text {
                "true" => true,
                "false" => false,
                _ => return Err(v.error("expected `true` or `false`")),
            },
        ),
        None => (span, true),
    };
    match key.text {
        "machinery_only" => raw.flags.machinery_only = on,
        _ => return Err(key.error(format!("unknown flag `{}`", key.text))),
    }
    Ok(())
}

fn expr(span: Span, dim: usize) -> Result<ScalarExpr, SceneError> {
    parse(span.text, dim).map_err(|e| SceneError::Syntax {
        line: span.line,
        column: span.column + e.column.saturating_sub(1),
        message: e.kind.to_string(),
    })
}

fn manifold(
    spec: ManifoldSpec,
    section: &'static str,
    at: Span,
    domain: Option<SampleDomain>,
) -> Result<ChartedManifold, SceneError> {
    let (dim, dim_span) = spec
        .dim
        .ok_or_else(|| at.error(format!("[{section}] is missing `dim`")))?;
    if dim == 0 || dim > semisub_core::geometry::MAX_DIM {
        return Err(dim_span.error(format!(
            "dimension must be between 1 and {}",
            semisub_core::geometry::MAX_DIM
        )));
    }
    let mut metric: Vec<Option<ScalarExpr>> = vec![None; dim * (dim + 1) / 2];
    if spec.identity.is_some() {
        metric = ChartedManifold::euclidean(dim)
            .metric_exprs()
            .iter()
            .cloned()
            .map(Some)
            .collect();
        if let Some((_, _, s)) = spec.metric.first() {
            return Err(s.error("`g = identity` cannot be combined with metric entries"));
        }
    }
    for (i, j, s) in &spec.metric {
        if *i >= dim || *j >= dim {
            return Err(s.error(format!("metric index out of range for dimension {dim}")));
        }
        let slot = semisub_core::geometry::upper_index(dim, *i, *j);
        if metric[slot].is_some() {
            return Err(s.error(format!(
                "duplicate metric entry ({}, {})",
                i.min(j) + 1,
                i.max(j) + 1
            )));
        }
        metric[slot] = Some(expr(*s, dim)?);
    }
    if spec.identity.is_none() {
        // Unspecified off-diagonal entries default to zero; diagonal entries are required.
        for i in 0..dim {
            if metric[semisub_core::geometry::upper_index(dim, i, i)].is_none() {
                return Err(at.error(format!(
                    "[{section}] metric entry g {0} {0} is missing",
                    i + 1
                )));
            }
        }
    }
    let metric = metric
        .into_iter()
        .map(|e| e.unwrap_or(ScalarExpr::Num(0.0)))
        .collect();

    let j = if let Some(s) = spec.canonical_j {
        if let Some((_, _, e)) = spec.j.first() {
            return Err(e.error("`J = canonical` cannot be combined with entries"));
        }
        if dim % 2 != 0 {
            return Err(s.error(format!(
                "canonical complex structure needs an even dimension, got {dim}"
            )));
        }
        Some(ChartedManifold::canonical_complex_structure(dim))
    } else if spec.j.is_empty() {
        None
    } else {
        let mut j = vec![None; dim * dim];
        for (a, b, s) in &spec.j {
            if *a >= dim || *b >= dim {
                return Err(s.error(format!("J index out of range for dimension {dim}")));
            }
            if j[a * dim + b].is_some() {
                return Err(s.error(format!("duplicate J entry ({}, {})", a + 1, b + 1)));
            }
            j[a * dim + b] = Some(expr(*s, dim)?);
        }
        Some(
            j.into_iter()
                .map(|e| e.unwrap_or(ScalarExpr::Num(0.0)))
                .collect(),
        )
    };
    let domain = domain.unwrap_or_else(|| SampleDomain::unbounded(dim));
    ChartedManifold::new(dim, metric, j, domain)
        .map_err(|source| SceneError::Geometry { section, source })
}

fn build(raw: Raw, fallback_name: &str, end: Span) -> Result<Scene, SceneError> {
    let src_dim = raw
        .source
        .dim
        .ok_or_else(|| end.error("[source] is missing `dim`"))?
        .0;
    let mut domain = SampleDomain::unbounded(src_dim);
    let mut has_box = vec![false; src_dim];
    for b in &raw.boxes {
        match *b {
            BoxEntry::All(lo, hi) => {
                domain.bounds = vec![(lo, hi); src_dim];
                has_box = vec![true; src_dim];
            }
            BoxEntry::Coord(k, lo, hi, s) => {
                if k >= src_dim {
                    return Err(s.error(format!(
                        "x{} is out of range for dimension {src_dim}",
                        k + 1
                    )));
                }
                domain.bounds[k] = (lo, hi);
                has_box[k] = true;
            }
        }
    }
    if let Some(k) = has_box.iter().position(|b| !b) {
        return Err(end.error(format!("[sampling] no box given for x{}", k + 1)));
    }
    for (ex, s) in &raw.exclusions {
        let locus = match ex {
            Exclusion::Periodic {
                coord,
                step,
                offset,
            } => {
                if *coord >= src_dim {
                    return Err(s.error(format!(
                        "x{} is out of range for dimension {src_dim}",
                        coord + 1
                    )));
                }
                ExcludedLocus::Periodic {
                    coord: *coord,
                    step: *step,
                    offset: *offset,
                }
            }
            Exclusion::Zero(e) => ExcludedLocus::ZeroSet(expr(*e, src_dim)?),
        };
        domain = domain.with_exclusion(locus);
    }
    let source = manifold(raw.source, "source", end, Some(domain))?;
    let target = manifold(raw.target, "target", end, None)?;
    let mut comps: Vec<Option<ScalarExpr>> = vec![None; target.dim()];
    for (a, s) in &raw.map {
        if *a >= target.dim() {
            return Err(s.error(format!(
                "component {} exceeds target dimension {}",
                a + 1,
                target.dim()
            )));
        }
        comps[*a] = Some(expr(*s, src_dim)?);
    }
    if let Some(a) = comps.iter().position(Option::is_none) {
        return Err(end.error(format!("[map] component F {} is missing", a + 1)));
    }
    let map = SmoothMap::new(
        source,
        target,
        comps.into_iter().map(Option::unwrap).collect(),
    )?;
    Ok(Scene {
        name: raw.name.unwrap_or_else(|| fallback_name.to_string()),
        map,
        sampling: Sampling {
            count: raw.count.unwrap_or(DEFAULT_COUNT),
            seed: raw.seed.unwrap_or(DEFAULT_SEED),
        },
        tolerances: raw.tolerances,
        flags: raw.flags,
    })
}
