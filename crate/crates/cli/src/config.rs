//! Problem files.
//!
//! ```toml
//! [problem]
//! kind = "riccati"          # or "system3"
//! span = [0.0, 50.0]
//!
//! [coefficients]
//! a = "1"
//! b = "0"
//! c = "0"
//! d = "0"
//! e = "-0.1"
//!
//! [theorems]
//! list = ["T4.1"]
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use riccati_core::criteria::{ComparisonSpec, TheoremId};
use riccati_core::riccati::{DiscriminantMode, RiccatiCoefficients};
use riccati_core::transform::LinearSystem3;
use riccati_core::Expr;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Riccati,
    System3,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    problem: Option<RawProblem>,
    coefficients: Option<BTreeMap<String, toml::Value>>,
    comparison: Option<BTreeMap<String, RawComparison>>,
    #[serde(default)]
    numerics: RawNumerics,
    #[serde(default)]
    theorems: RawTheorems,
    #[serde(default)]
    initial: RawInitial,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    kind: Option<Kind>,
    name: Option<String>,
    span: Option<[f64; 2]>,
    horizon: Option<f64>,
    partition: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawComparison {
    formula: Option<String>,
    y0: Option<f64>,
    dy0: Option<f64>,
    coefficients: Option<BTreeMap<String, toml::Value>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNumerics {
    grid_n: Option<usize>,
    rtol: Option<f64>,
    atol: Option<f64>,
    condition_tol: Option<f64>,
    d_mode: Option<String>,
    lambda: Option<f64>,
    gamma: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTheorems {
    list: Option<Vec<String>>,
    strategies: Option<Vec<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    count: Option<usize>,
    points: Option<Vec<[f64; 2]>>,
    states: Option<Vec<[f64; 3]>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub enum Model {
    Riccati(RiccatiCoefficients),
    System3(LinearSystem3),
}

/// A validated problem file.
#[derive(Debug, Clone)]
pub struct ProblemConfig {
    pub name: String,
    pub kind: Kind,
    pub model: Model,
    pub span: (f64, f64),
    pub horizon: f64,
    pub partition: Option<Vec<f64>>,
    pub y1: Option<ComparisonSpec>,
    pub y2: Option<ComparisonSpec>,
    pub grid_n: usize,
    pub rtol: f64,
    pub atol: f64,
    pub condition_tol: f64,
    pub d_mode: DiscriminantMode,
    pub lambda: f64,
    pub gamma: Option<f64>,
    pub theorems: Vec<TheoremId>,
    pub strategies: Vec<TheoremId>,
    pub ic_count: usize,
    pub points: Vec<(f64, f64)>,
    pub states: Vec<[f64; 3]>,
    pub out_dir: PathBuf,
}

fn missing(key: &str) -> CliError {
    CliError::Input(format!("missing key `{key}`"))
}

fn formula(table: &BTreeMap<String, toml::Value>, section: &str, key: &str) -> Result<Expr, CliError> {
    let v = table.get(key).ok_or_else(|| missing(&format!("{section}.{key}")))?;
    let text = match v {
        toml::Value::String(s) => s.clone(),
        toml::Value::Float(x) => x.to_string(),
        toml::Value::Integer(i) => i.to_string(),
        other => {
            return Err(CliError::Input(format!(
                "`{section}.{key}` must be a formula string or number, got {}",
                other.type_str()
            )))
        }
    };
    Expr::parse(&text).map_err(|e| CliError::Input(format!("`{section}.{key}`: {e}")))
}

fn riccati_from(table: &BTreeMap<String, toml::Value>, section: &str) -> Result<RiccatiCoefficients, CliError> {
    let f = |k| formula(table, section, k);
    RiccatiCoefficients::new(f("a")?, f("b")?, f("c")?, f("d")?, f("e")?)
        .map_err(|e| CliError::Input(format!("`{section}`: {e}")))
}

fn system_from(table: &BTreeMap<String, toml::Value>) -> Result<LinearSystem3, CliError> {
    let mut rows: [[Expr; 3]; 3] = Default::default();
    for (j, row) in rows.iter_mut().enumerate() {
        for (k, cell) in row.iter_mut().enumerate() {
            *cell = formula(table, "coefficients", &format!("a{}{}", j + 1, k + 1))?;
        }
    }
    Ok(LinearSystem3::new(rows))
}

fn theorem_list(names: &[String], key: &str) -> Result<Vec<TheoremId>, CliError> {
    names
        .iter()
        .map(|n| {
            n.parse::<TheoremId>()
                .map_err(|e| CliError::Input(format!("`{key}`: {e}")))
        })
        .collect()
}

pub fn parse_d_mode(s: &str) -> Result<DiscriminantMode, CliError> {
    match s {
        "corrected" => Ok(DiscriminantMode::Corrected),
        "paper" | "paper_literal" => Ok(DiscriminantMode::PaperLiteral),
        other => Err(CliError::Input(format!(
            "unknown d_mode `{other}` (expected paper or corrected)"
        ))),
    }
}

impl ProblemConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("problem");
        Self::from_toml(&text, stem)
    }

    pub fn from_toml(text: &str, default_name: &str) -> Result<Self, CliError> {
        let raw: RawFile = toml::from_str(text).map_err(|e| CliError::Input(format!("invalid problem file: {e}")))?;
        let problem = raw.problem.ok_or_else(|| missing("problem"))?;
        let kind = problem.kind.ok_or_else(|| missing("problem.kind"))?;
        let span = problem.span.ok_or_else(|| missing("problem.span"))?;
        if !(span[0].is_finite() && span[1].is_finite() && span[0] < span[1]) {
            return Err(CliError::Input(format!(
                "`problem.span` must be a nonempty interval, got {span:?}"
            )));
        }
        let coeffs = raw.coefficients.ok_or_else(|| missing("coefficients"))?;
        let model = match kind {
            Kind::Riccati => Model::Riccati(riccati_from(&coeffs, "coefficients")?),
            Kind::System3 => Model::System3(system_from(&coeffs)?),
        };
        let comparison = |name: &str| -> Result<Option<ComparisonSpec>, CliError> {
            let Some(c) = raw.comparison.as_ref().and_then(|m| m.get(name)) else {
                return Ok(None);
            };
            let section = format!("comparison.{name}");
            let table = c
                .coefficients
                .as_ref()
                .ok_or_else(|| missing(&format!("{section}.coefficients")))?;
            let coefficients = riccati_from(table, &format!("{section}.coefficients"))?;
            match (&c.formula, c.y0, c.dy0) {
                (Some(f), None, None) => Ok(Some(ComparisonSpec::Formula {
                    y: Expr::parse(f).map_err(|e| CliError::Input(format!("`{section}.formula`: {e}")))?,
                    coefficients,
                })),
                (None, Some(y0), Some(dy0)) => Ok(Some(ComparisonSpec::Initial { y0, dy0, coefficients })),
                (None, _, None) => Err(missing(&format!("{section}.formula"))),
                (None, None, _) => Err(missing(&format!("{section}.y0"))),
                _ => Err(CliError::Input(format!(
                    "`{section}` takes either formula or y0/dy0, not both"
                ))),
            }
        };
        let y1 = comparison("y1")?;
        let y2 = comparison("y2")?;
        let n = raw.numerics;
        let defaults = match kind {
            Kind::Riccati => TheoremId::GLOBAL.to_vec(),
            Kind::System3 => vec![TheoremId::T5_1],
        };
        let theorems = match &raw.theorems.list {
            Some(l) => theorem_list(l, "theorems.list")?,
            None => defaults,
        };
        let strategies = match &raw.theorems.strategies {
            Some(l) => theorem_list(l, "theorems.strategies")?,
            None => TheoremId::GLOBAL.to_vec(),
        };
        Ok(ProblemConfig {
            name: problem.name.unwrap_or_else(|| default_name.to_string()),
            kind,
            model,
            span: (span[0], span[1]),
            horizon: problem.horizon.unwrap_or(span[1]),
            partition: problem.partition,
            y1,
            y2,
            grid_n: n.grid_n.unwrap_or(riccati_core::criteria::DEFAULT_GRID),
            rtol: n.rtol.unwrap_or(1e-10),
            atol: n.atol.unwrap_or(1e-12),
            condition_tol: n.condition_tol.unwrap_or(riccati_core::criteria::DEFAULT_TOL),
            d_mode: n.d_mode.as_deref().map(parse_d_mode).transpose()?.unwrap_or_default(),
            lambda: n.lambda.unwrap_or(0.0),
            gamma: n.gamma,
            theorems,
            strategies,
            ic_count: raw.initial.count.unwrap_or(20),
            points: raw
                .initial
                .points
                .unwrap_or_default()
                .into_iter()
                .map(|p| (p[0], p[1]))
                .collect(),
            states: raw.initial.states.unwrap_or_default(),
            out_dir: raw.output.dir.unwrap_or_else(|| PathBuf::from("out")),
        })
    }
}
