//! Problem definition files.
//!
//! A definition is a TOML document:
//!
//! ```toml
//! dim = 2
//! mode = "generalized"          # or "lagrangian"
//! seed = 7                      # optional, default 0
//! samples = 100                 # optional, default 100
//! points = [[0, 1, 1, 0]]       # optional: x1..xn, y1..yn per point
//!
//! [lagrangian]                  # lagrangian mode
//! L = "(y1^2 + y2^2)/(x2^2)"
//!
//! [metric]                      # generalized mode, upper triangle
//! g11 = "1"                     # or g1_1 = ..., needed once n > 9
//! g12 = "0"
//! g22 = "1"
//!
//! [semispray]                   # generalized mode
//! G1 = "x1*y2"
//! G2 = "0"
//!
//! [domain]                      # sampling box, one interval per coordinate
//! x1 = [-1, 1]
//! x2 = [0.5, 2]
//! y1 = [-1, 1]
//! y2 = [-1, 1]
//!
//! [tolerances]                  # optional
//! algebraic = 1e-12
//! derived = 1e-9
//! ```
//!
//! When `points` is present the domain box is optional and sampling is off.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use semispray::geometry::{GLMetricField, LagrangeSpace, MetricField, SemisprayField, Spray};
use semispray::sampling::{sample_points, DomainBox};
use semispray::Point;

pub const DEFAULT_SAMPLES: usize = 100;
pub const DEFAULT_ALGEBRAIC: f64 = 1e-12;
pub const DEFAULT_DERIVED: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Lagrangian,
    Generalized,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDefinition {
    dim: usize,
    mode: Mode,
    seed: Option<u64>,
    samples: Option<usize>,
    points: Option<Vec<Vec<f64>>>,
    lagrangian: Option<RawLagrangian>,
    metric: Option<BTreeMap<String, String>>,
    semispray: Option<BTreeMap<String, String>>,
    domain: Option<BTreeMap<String, [f64; 2]>>,
    tolerances: Option<RawTolerances>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLagrangian {
    #[serde(rename = "L")]
    l: String,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    algebraic: Option<f64>,
    derived: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Identity-level checks.
    pub algebraic: f64,
    /// Checks through third derivatives and inversion.
    pub derived: f64,
}

/// The geometric data of a definition.
#[derive(Debug, Clone)]
pub enum Model {
    Lagrangian(LagrangeSpace),
    Generalized {
        metric: GLMetricField,
        spray: SemisprayField,
    },
}

impl Model {
    /// Runs `f` with the semispray and metric of the model. In Lagrangian
    /// mode these are the canonic semispray and `1/2 d2L/dy dy`.
    pub fn with_fields<T>(&self, f: impl FnOnce(&dyn Spray, &dyn MetricField) -> T) -> T {
        match self {
            Model::Lagrangian(l) => f(&l.canonic_spray(), l),
            Model::Generalized { metric, spray } => f(spray, metric),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProblemDefinition {
    pub dim: usize,
    pub model: Model,
    pub seed: u64,
    pub samples: usize,
    pub points: Option<Vec<Point>>,
    pub domain: Option<DomainBox>,
    pub tolerances: Tolerances,
}

/// Input or validation failure; maps to exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

macro_rules! input_err {
    ($($arg:tt)*) => { InputError(format!($($arg)*)) };
}

fn parse_index(text: &str, dim: usize) -> Option<usize> {
    let i: usize = text.parse().ok()?;
    (1..=dim).contains(&i).then_some(i - 1)
}

/// `gIJ` (single digits) or `gI_J`, one-based.
fn metric_key(key: &str, dim: usize) -> Option<(usize, usize)> {
    let rest = key.strip_prefix('g')?;
    let (i, j) = match rest.split_once('_') {
        Some((i, j)) => (parse_index(i, dim)?, parse_index(j, dim)?),
        None if rest.len() == 2 => (parse_index(&rest[..1], dim)?, parse_index(&rest[1..], dim)?),
        None => return None,
    };
    Some((i.min(j), i.max(j)))
}

pub fn parse_point(values: &[f64], dim: usize) -> Result<Point, InputError> {
    if values.len() != 2 * dim {
        return Err(input_err!(
            "a point needs {} coordinates (x1..x{dim}, y1..y{dim}), got {}",
            2 * dim,
            values.len()
        ));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(input_err!("point coordinates must be finite"));
    }
    Point::from_slots(values).map_err(|e| input_err!("{e}"))
}

/// Parses `"a,b,c,..."` into a point.
pub fn parse_point_text(text: &str, dim: usize) -> Result<Point, InputError> {
    let values = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| input_err!("not a number: {s:?}"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    parse_point(&values, dim)
}

impl ProblemDefinition {
    pub fn load(path: &Path) -> Result<Self, InputError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| input_err!("cannot read {}: {e}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, InputError> {
        let raw: RawDefinition = toml::from_str(text).map_err(|e| input_err!("{e}"))?;
        let dim = raw.dim;
        if dim == 0 {
            return Err(input_err!("dim must be at least 1"));
        }
        let expr_err = |what: &str, e: semispray::Error| input_err!("{what}: {e}");

        let model = match raw.mode {
            Mode::Lagrangian => {
                if raw.metric.is_some() || raw.semispray.is_some() {
                    return Err(input_err!(
                        "lagrangian mode takes only a [lagrangian] section"
                    ));
                }
                let l = raw
                    .lagrangian
                    .ok_or_else(|| input_err!("lagrangian mode needs [lagrangian] L = ..."))?;
                Model::Lagrangian(LagrangeSpace::parse(&l.l, dim).map_err(|e| expr_err("L", e))?)
            }
            Mode::Generalized => {
                if raw.lagrangian.is_some() {
                    return Err(input_err!(
                        "generalized mode takes [metric] and [semispray], not [lagrangian]"
                    ));
                }
                let metric = raw
                    .metric
                    .ok_or_else(|| input_err!("generalized mode needs a [metric] section"))?;
                let spray = raw
                    .semispray
                    .ok_or_else(|| input_err!("generalized mode needs a [semispray] section"))?;
                Model::Generalized {
                    metric: build_metric(&metric, dim)?,
                    spray: build_spray(&spray, dim)?,
                }
            }
        };

        let domain = raw.domain.map(|d| build_domain(&d, dim)).transpose()?;
        let points = raw
            .points
            .map(|ps| {
                ps.iter()
                    .map(|p| parse_point(p, dim))
                    .collect::<Result<Vec<_>, _>>()
            })
            .transpose()?;
        if points.is_none() && domain.is_none() {
            return Err(input_err!(
                "give either explicit points or a [domain] box to sample"
            ));
        }
        if let Some(ps) = &points {
            if ps.is_empty() {
                return Err(input_err!("points must not be empty"));
            }
        }

        let t = raw.tolerances.unwrap_or_default();
        let tolerances = Tolerances {
            algebraic: check_tolerance("algebraic", t.algebraic.unwrap_or(DEFAULT_ALGEBRAIC))?,
            derived: check_tolerance("derived", t.derived.unwrap_or(DEFAULT_DERIVED))?,
        };
        let samples = raw.samples.unwrap_or(DEFAULT_SAMPLES);
        if samples == 0 {
            return Err(input_err!("samples must be at least 1"));
        }
        Ok(Self {
            dim,
            model,
            seed: raw.seed.unwrap_or(0),
            samples,
            points,
            domain,
            tolerances,
        })
    }

    /// Explicit points if given, otherwise `samples` seeded points from the box.
    pub fn evaluation_points(&self) -> Vec<Point> {
        match (&self.points, &self.domain) {
            (Some(ps), _) => ps.clone(),
            (None, Some(d)) => sample_points(d, self.seed, self.samples),
            (None, None) => unreachable!("validated at parse time"),
        }
    }
}

pub fn check_tolerance(name: &str, v: f64) -> Result<f64, InputError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(input_err!("tolerance {name} must be positive, got {v}"))
    }
}

fn build_metric(
    entries: &BTreeMap<String, String>,
    dim: usize,
) -> Result<GLMetricField, InputError> {
    let mut upper: Vec<Option<&str>> = vec![None; dim * (dim + 1) / 2];
    let slot = |i: usize, j: usize| i * dim - i * (i + 1) / 2 + j;
    for (key, text) in entries {
        let (i, j) =
            metric_key(key, dim).ok_or_else(|| input_err!("[metric]: unknown key {key:?}"))?;
        let s = &mut upper[slot(i, j)];
        if s.is_some() {
            return Err(input_err!("[metric]: g{}{} given twice", i + 1, j + 1));
        }
        *s = Some(text);
    }
    let mut texts = Vec::with_capacity(upper.len());
    for i in 0..dim {
        for j in i..dim {
            let t = upper[slot(i, j)]
                .ok_or_else(|| input_err!("[metric]: missing g{}{}", i + 1, j + 1))?;
            texts.push(t);
        }
    }
    GLMetricField::parse(dim, &texts).map_err(|e| input_err!("[metric]: {e}"))
}

fn build_spray(
    entries: &BTreeMap<String, String>,
    dim: usize,
) -> Result<SemisprayField, InputError> {
    let mut coefficients: Vec<Option<&str>> = vec![None; dim];
    for (key, text) in entries {
        let i = key
            .strip_prefix('G')
            .and_then(|k| parse_index(k, dim))
            .ok_or_else(|| input_err!("[semispray]: unknown key {key:?}"))?;
        if coefficients[i].replace(text).is_some() {
            return Err(input_err!("[semispray]: G{} given twice", i + 1));
        }
    }
    let texts = coefficients
        .iter()
        .enumerate()
        .map(|(i, t)| t.ok_or_else(|| input_err!("[semispray]: missing G{}", i + 1)))
        .collect::<Result<Vec<_>, _>>()?;
    SemisprayField::parse(&texts).map_err(|e| input_err!("[semispray]: {e}"))
}

fn build_domain(entries: &BTreeMap<String, [f64; 2]>, dim: usize) -> Result<DomainBox, InputError> {
    let names: Vec<String> = ["x", "y"]
        .iter()
        .flat_map(|p| (1..=dim).map(move |i| format!("{p}{i}")))
        .collect();
    if let Some(extra) = entries.keys().find(|k| !names.contains(k)) {
        return Err(input_err!("[domain]: unknown key {extra:?}"));
    }
    let bounds = names
        .iter()
        .map(|key| {
            entries
                .get(key)
                .map(|&[lo, hi]| (lo, hi))
                .ok_or_else(|| input_err!("[domain]: missing interval for {key}"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    DomainBox::new(bounds).map_err(|e| input_err!("[domain]: {e}"))
}
