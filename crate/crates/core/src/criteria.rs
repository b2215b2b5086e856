//! Theorem hypotheses as grid evidence, and the certificates built from them.
//!
//! Every checkable hypothesis becomes a [`GridEvidence`]: a signed margin
//! sampled on a uniform grid where a nonnegative margin means the condition
//! holds. A [`Certificate`] collects the evidence for one theorem together
//! with the admissible initial conditions and the conclusions the harness
//! should observe when it integrates from them.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::grid::{scan_min, UniformGrid};
use crate::ode::{Options, Trajectory};
use crate::par::Execution;
use crate::quad::cumulative_simpson;
use crate::riccati::{
    mismatch_l, ratio_max, witness_residual, CoeffValues, DiscriminantMode, RiccatiCoefficients, Side,
};
use crate::transform::{eliminate_a13, reduce_system3, LinearSystem3};

pub const DEFAULT_GRID: usize = 2001;
pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_PARTITION: usize = 10;
/// Tolerance on the residual of a comparison solution given as a formula.
pub const FORMULA_RESIDUAL_TOL: f64 = 1e-8;
/// Note attached to certificates whose conclusion covers no solution.
pub const EMPTY_REGION_NOTE: &str = "admissible initial-condition region is empty; the conclusion is vacuous";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TheoremId {
    L2_1,
    T3_1,
    T3_2,
    T3_3,
    T4_1,
    T4_2,
    T4_3,
    T4_4,
    T4_5,
    T5_1,
}

impl TheoremId {
    pub const ALL: [TheoremId; 10] = [
        TheoremId::L2_1,
        TheoremId::T3_1,
        TheoremId::T3_2,
        TheoremId::T3_3,
        TheoremId::T4_1,
        TheoremId::T4_2,
        TheoremId::T4_3,
        TheoremId::T4_4,
        TheoremId::T4_5,
        TheoremId::T5_1,
    ];

    /// Global-solvability criteria tried for non-oscillation, in order.
    pub const GLOBAL: [TheoremId; 5] = [
        TheoremId::T4_1,
        TheoremId::T4_2,
        TheoremId::T4_3,
        TheoremId::T4_4,
        TheoremId::T4_5,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TheoremId::L2_1 => "L2.1",
            TheoremId::T3_1 => "T3.1",
            TheoremId::T3_2 => "T3.2",
            TheoremId::T3_3 => "T3.3",
            TheoremId::T4_1 => "T4.1",
            TheoremId::T4_2 => "T4.2",
            TheoremId::T4_3 => "T4.3",
            TheoremId::T4_4 => "T4.4",
            TheoremId::T4_5 => "T4.5",
            TheoremId::T5_1 => "T5.1",
        }
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TheoremId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase();
        TheoremId::ALL
            .into_iter()
            .find(|id| id.as_str() == norm)
            .ok_or_else(|| Error::UnsupportedTheorem(s.to_string()))
    }
}

impl Serialize for TheoremId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for TheoremId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// How a margin is judged against the tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `margin ≥ −tol`.
    NonNegative,
    /// `margin > tol`, for strict inequalities such as `a > 0`.
    Positive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEvidence {
    pub condition: String,
    pub relation: Relation,
    pub tolerance: f64,
    pub grid: UniformGrid,
    pub min_margin: f64,
    pub argmin: f64,
    pub first_violation: Option<f64>,
    pub pass: bool,
}

impl GridEvidence {
    fn judge(relation: Relation, margin: f64, tol: f64) -> bool {
        match relation {
            Relation::NonNegative => margin >= -tol,
            Relation::Positive => margin > tol,
        }
    }

    fn threshold(relation: Relation, tol: f64) -> f64 {
        match relation {
            Relation::NonNegative => -tol,
            // Smallest value strictly above tol.
            Relation::Positive => tol + f64::EPSILON * tol.abs().max(f64::MIN_POSITIVE),
        }
    }

    /// Scans a pointwise margin with refinement around the minimum.
    pub fn scan<F>(
        condition: impl Into<String>,
        relation: Relation,
        tol: f64,
        grid: &UniformGrid,
        exec: Execution,
        margin: F,
    ) -> Result<Self>
    where
        F: Fn(f64) -> Result<f64> + Sync + Send,
    {
        let r = scan_min(grid, exec, Self::threshold(relation, tol), margin)?;
        Ok(GridEvidence {
            condition: condition.into(),
            relation,
            tolerance: tol,
            grid: *grid,
            min_margin: r.min,
            argmin: r.argmin,
            first_violation: r.first_below,
            pass: Self::judge(relation, r.min, tol),
        })
    }

    /// Evidence from precomputed margins at the grid nodes.
    pub fn from_samples(
        condition: impl Into<String>,
        relation: Relation,
        tol: f64,
        grid: &UniformGrid,
        margins: &[f64],
    ) -> Self {
        let mut imin = 0;
        for (i, &m) in margins.iter().enumerate() {
            if m < margins[imin] || (m.is_nan() && !margins[imin].is_nan()) {
                imin = i;
            }
        }
        let min_margin = margins[imin];
        let first_violation = margins
            .iter()
            .position(|&m| !Self::judge(relation, m, tol))
            .map(|i| grid.at(i));
        GridEvidence {
            condition: condition.into(),
            relation,
            tolerance: tol,
            grid: *grid,
            min_margin,
            argmin: grid.at(imin),
            first_violation,
            pass: Self::judge(relation, min_margin, tol),
        }
    }

    /// A single number checked as a condition (grid of the whole span).
    pub fn scalar(condition: impl Into<String>, relation: Relation, tol: f64, grid: &UniformGrid, margin: f64) -> Self {
        let pass = Self::judge(relation, margin, tol);
        GridEvidence {
            condition: condition.into(),
            relation,
            tolerance: tol,
            grid: *grid,
            min_margin: margin,
            argmin: grid.start,
            first_violation: (!pass).then_some(grid.start),
            pass,
        }
    }

    fn refutes(&self) -> bool {
        !self.pass && self.min_margin < -10.0 * self.tolerance
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Certified,
    Refuted,
    Inconclusive,
}

/// Certified iff every evidence passes; refuted iff some evidence fails by
/// more than ten times its tolerance.
pub fn verdict_of(evidence: &[GridEvidence]) -> Verdict {
    if evidence.iter().all(|e| e.pass) {
        Verdict::Certified
    } else if evidence.iter().any(GridEvidence::refutes) {
        Verdict::Refuted
    } else {
        Verdict::Inconclusive
    }
}

/// A function of `t` used as a bound or comparison curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Reference {
    Const {
        value: f64,
    },
    Formula {
        y: Expr,
        dy: Expr,
    },
    /// `values[i]` on `(knots[i], knots[i+1]]`, and `values[0]` at `knots[0]`.
    Piecewise {
        knots: Vec<f64>,
        values: Vec<f64>,
    },
    /// A numerically integrated solution of a comparison equation.
    Solution {
        t1: f64,
        y0: f64,
        dy0: f64,
        coefficients: RiccatiCoefficients,
        #[serde(skip)]
        trajectory: Option<Arc<Trajectory>>,
    },
}

impl Reference {
    pub fn constant(value: f64) -> Self {
        Reference::Const { value }
    }

    pub fn formula(y: Expr) -> Result<Self> {
        let dy = y.derivative()?;
        Ok(Reference::Formula { y, dy })
    }

    /// `(r(t), r'(t))`.
    pub fn eval(&self, t: f64) -> Result<(f64, f64)> {
        match self {
            Reference::Const { value } => Ok((*value, 0.0)),
            Reference::Formula { y, dy } => Ok((y.eval(t)?, dy.eval(t)?)),
            Reference::Piecewise { knots, values } => {
                let i = knots[1..].partition_point(|&k| k < t).min(values.len() - 1);
                Ok((values[i], 0.0))
            }
            Reference::Solution { trajectory, .. } => {
                let tr = trajectory
                    .as_ref()
                    .ok_or_else(|| Error::InvalidArgument("comparison trajectory not attached".into()))?;
                let s = tr.sample(t)?;
                Ok((s[0], s[1]))
            }
        }
    }

    /// Right end of the span on which the reference is known.
    pub fn t_end(&self) -> f64 {
        match self {
            Reference::Solution {
                trajectory: Some(tr), ..
            } => tr.t_end(),
            _ => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    /// `≥ 0`
    Ge,
    /// `≤ 0`
    Le,
}

/// A sign condition on `ν` pairing the solution with a reference curve:
/// `ν(t, y, r, y', r')` when `solution_first`, else `ν(t, r, y, r', y')`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NuCondition {
    pub label: String,
    pub reference: Reference,
    pub solution_first: bool,
    pub sign: Sign,
}

impl NuCondition {
    fn new(label: &str, reference: Reference, solution_first: bool, sign: Sign) -> Self {
        NuCondition {
            label: label.to_string(),
            reference,
            solution_first,
            sign,
        }
    }

    pub fn nu(&self, cv: &CoeffValues, y: f64, dy: f64) -> Result<f64> {
        let (r, dr) = self.reference.eval(cv.t)?;
        Ok(if self.solution_first {
            cv.nu(y, r, dy, dr)
        } else {
            cv.nu(r, y, dr, dy)
        })
    }

    /// Signed margin: nonnegative when the condition holds.
    pub fn margin(&self, cv: &CoeffValues, y: f64, dy: f64) -> Result<f64> {
        let nu = self.nu(cv, y, dy)?;
        Ok(match self.sign {
            Sign::Ge => nu,
            Sign::Le => -nu,
        })
    }

    /// Interval of `y'` satisfying the condition at `(t, y)`.
    pub fn dy_interval(&self, cv: &CoeffValues, y: f64) -> Result<(f64, f64)> {
        // ν = s·(y' + base) with s = ±1.
        let (r, dr) = self.reference.eval(cv.t)?;
        let base = -dr + 1.5 * cv.a * (y * y - r * r) + cv.b * (y - r);
        let s = if self.solution_first { 1.0 } else { -1.0 };
        let want_nonneg = self.sign == Sign::Ge;
        Ok(if (s > 0.0) == want_nonneg {
            (-base, f64::INFINITY)
        } else {
            (f64::NEG_INFINITY, -base)
        })
    }
}

/// Initial conditions `(y(t0), y'(t0))` a theorem makes claims about.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdmissibleRegion {
    pub t0: f64,
    pub y_lo: f64,
    pub y_hi: f64,
    pub nu_conditions: Vec<NuCondition>,
}

impl AdmissibleRegion {
    /// Admissible `y'` for a given `y(t0)`, or `None` if empty.
    pub fn dy_interval(&self, co: &RiccatiCoefficients, y: f64) -> Result<Option<(f64, f64)>> {
        if !(y >= self.y_lo && y <= self.y_hi) {
            return Ok(None);
        }
        let cv = co.at(self.t0)?;
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for c in &self.nu_conditions {
            let (l, h) = c.dy_interval(&cv, y)?;
            lo = lo.max(l);
            hi = hi.min(h);
        }
        Ok((lo <= hi).then_some((lo, hi)))
    }

    /// Whether no `y(t0)` on a fine grid of `[y_lo, y_hi]` admits a slope.
    pub fn is_empty(&self, co: &RiccatiCoefficients) -> Result<bool> {
        if !(self.y_lo <= self.y_hi) {
            return Ok(true);
        }
        const PROBES: usize = 1001;
        for i in 0..PROBES {
            let y = if i + 1 == PROBES {
                self.y_hi
            } else {
                self.y_lo + (self.y_hi - self.y_lo) * i as f64 / (PROBES - 1) as f64
            };
            if self.dy_interval(co, y)?.is_some() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn contains(&self, co: &RiccatiCoefficients, y: f64, dy: f64, slack: f64) -> Result<bool> {
        Ok(match self.dy_interval(co, y)? {
            Some((lo, hi)) => dy >= lo - slack && dy <= hi + slack,
            None => false,
        })
    }
}

/// What the theorem asserts for admissible solutions on the span.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Conclusion {
    pub lower: Option<Reference>,
    pub upper: Option<Reference>,
    pub nu_conditions: Vec<NuCondition>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConstValue {
    Scalar(f64),
    List(Vec<f64>),
    Samples(Vec<[f64; 2]>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Attempt {
    pub theorem: TheoremId,
    pub verdict: Verdict,
    pub failed: Vec<String>,
}

/// Runtime data needed to verify a certificate; not serialized.
#[derive(Debug, Clone)]
pub struct CertContext {
    pub co: RiccatiCoefficients,
    pub system: Option<LinearSystem3>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Certificate {
    pub theorem: TheoremId,
    pub verdict: Verdict,
    pub span: (f64, f64),
    /// Criterion that certified a non-oscillation claim.
    pub strategy: Option<TheoremId>,
    pub evidence: Vec<GridEvidence>,
    /// Non-gating checks recorded for transparency.
    pub diagnostics: Vec<GridEvidence>,
    pub constants: BTreeMap<String, ConstValue>,
    pub admissible: Option<AdmissibleRegion>,
    pub conclusion: Option<Conclusion>,
    pub attempts: Vec<Attempt>,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub context: Option<Arc<CertContext>>,
}

impl Certificate {
    fn new(theorem: TheoremId, span: (f64, f64), co: &RiccatiCoefficients) -> Self {
        Certificate {
            theorem,
            verdict: Verdict::Inconclusive,
            span,
            strategy: None,
            evidence: Vec::new(),
            diagnostics: Vec::new(),
            constants: BTreeMap::new(),
            admissible: None,
            conclusion: None,
            attempts: Vec::new(),
            notes: Vec::new(),
            context: Some(Arc::new(CertContext {
                co: co.clone(),
                system: None,
            })),
        }
    }

    fn finish(mut self) -> Self {
        self.verdict = verdict_of(&self.evidence);
        self
    }

    pub fn failed_conditions(&self) -> Vec<String> {
        self.evidence
            .iter()
            .filter(|e| !e.pass)
            .map(|e| e.condition.clone())
            .collect()
    }

    pub fn has_empty_region(&self) -> bool {
        self.notes.iter().any(|n| n == EMPTY_REGION_NOTE)
    }

    pub fn coefficients(&self) -> Option<&RiccatiCoefficients> {
        self.context.as_ref().map(|c| &c.co)
    }
}

/// A comparison solution for the third-section theorems.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ComparisonSpec {
    /// Closed form `y(t)`; its residual in the comparison equation is checked.
    Formula { y: Expr, coefficients: RiccatiCoefficients },
    /// Initial values at the left end of the span; integrated.
    Initial {
        y0: f64,
        dy0: f64,
        coefficients: RiccatiCoefficients,
    },
}

impl ComparisonSpec {
    pub fn coefficients(&self) -> &RiccatiCoefficients {
        match self {
            ComparisonSpec::Formula { coefficients, .. } | ComparisonSpec::Initial { coefficients, .. } => coefficients,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CertifyParams {
    pub span: (f64, f64),
    pub grid_n: usize,
    pub tol: f64,
    pub d_mode: DiscriminantMode,
    /// `λ ≥ 0` of the constant witnesses.
    pub lambda: f64,
    /// Partition points for the piecewise criteria, including both ends.
    pub partition: Option<Vec<f64>>,
    pub gamma: Option<f64>,
    pub y1: Option<ComparisonSpec>,
    pub y2: Option<ComparisonSpec>,
    pub strategies: Vec<TheoremId>,
    pub ode: Options,
    #[serde(skip)]
    pub exec: Execution,
}

impl Default for CertifyParams {
    fn default() -> Self {
        CertifyParams {
            span: (0.0, 1.0),
            grid_n: DEFAULT_GRID,
            tol: DEFAULT_TOL,
            d_mode: DiscriminantMode::Corrected,
            lambda: 0.0,
            partition: None,
            gamma: None,
            y1: None,
            y2: None,
            strategies: TheoremId::GLOBAL.to_vec(),
            ode: Options::with_tol(1e-10, 1e-12),
            exec: Execution::default(),
        }
    }
}

impl CertifyParams {
    pub fn with_span(span: (f64, f64)) -> Self {
        CertifyParams {
            span,
            ..CertifyParams::default()
        }
    }

    pub fn grid(&self) -> Result<UniformGrid> {
        UniformGrid::new(self.span.0, self.span.1, self.grid_n.max(3) | 1)
    }

    fn partition_points(&self) -> Result<Vec<f64>> {
        let (a, b) = self.span;
        let pts = match &self.partition {
            Some(p) => p.clone(),
            None => (0..=DEFAULT_PARTITION)
                .map(|i| {
                    if i == DEFAULT_PARTITION {
                        b
                    } else {
                        a + (b - a) * i as f64 / DEFAULT_PARTITION as f64
                    }
                })
                .collect(),
        };
        let ok = pts.len() >= 2 && pts[0] == a && *pts.last().unwrap() == b && pts.windows(2).all(|w| w[0] < w[1]);
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "partition must increase strictly from {a} to {b}: {pts:?}"
            )));
        }
        Ok(pts)
    }
}

#[derive(Debug, Clone)]
pub enum Problem {
    Riccati(RiccatiCoefficients),
    System(LinearSystem3),
}

/// `a > 0` (or `a < 0` with `negative`) and `D ≥ 0`.
pub fn check_sign_conditions(
    co: &RiccatiCoefficients,
    grid: &UniformGrid,
    tol: f64,
    mode: DiscriminantMode,
    negative: bool,
    exec: Execution,
) -> Result<Vec<GridEvidence>> {
    let (label, s) = if negative { ("a < 0", -1.0) } else { ("a > 0", 1.0) };
    let a_ev = GridEvidence::scan(label, Relation::Positive, tol, grid, exec, |t| {
        Ok(s * co.a().eval(t)?)
    })?;
    let d_ev = d_evidence(co, grid, tol, mode, exec)?;
    Ok(vec![a_ev, d_ev])
}

fn d_label(mode: DiscriminantMode) -> &'static str {
    match mode {
        DiscriminantMode::Corrected => "D ≥ 0 (corrected)",
        DiscriminantMode::PaperLiteral => "D ≥ 0 (paper literal)",
    }
}

fn d_evidence(
    co: &RiccatiCoefficients,
    grid: &UniformGrid,
    tol: f64,
    mode: DiscriminantMode,
    exec: Execution,
) -> Result<GridEvidence> {
    GridEvidence::scan(d_label(mode), Relation::NonNegative, tol, grid, exec, |t| {
        Ok(co.at(t)?.disc_d(mode))
    })
}

/// Condition (4): where `a = 0`, `c = 3/2·a'` and `d ≥ b'`; elsewhere `D ≥ 0`.
pub fn branch_condition(
    co: &RiccatiCoefficients,
    grid: &UniformGrid,
    tol: f64,
    mode: DiscriminantMode,
    exec: Execution,
) -> Result<GridEvidence> {
    GridEvidence::scan(
        "a = 0 ⇒ c = 3/2·a', d ≥ b'; otherwise D ≥ 0",
        Relation::NonNegative,
        tol,
        grid,
        exec,
        |t| {
            let cv = co.at(t)?;
            Ok(if cv.a == 0.0 {
                (-(cv.c - 1.5 * cv.da).abs()).min(cv.d - cv.db)
            } else {
                cv.disc_d(mode)
            })
        },
    )
}

/// `sup (|c| + |d| + |e|)/a²` over the grid.
pub fn sup_ratio(co: &RiccatiCoefficients, grid: &UniformGrid, exec: Execution) -> Result<f64> {
    ratio_max(co, grid, exec)
}

/// `M_n = max over [t0, t_n]` for each partition point `t_n`, `n ≥ 1`.
pub fn sup_ratio_partition(
    co: &RiccatiCoefficients,
    partition: &[f64],
    points: usize,
    exec: Execution,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(partition.len() - 1);
    let mut running = f64::NEG_INFINITY;
    for w in partition.windows(2) {
        let g = UniformGrid::new(w[0], w[1], points)?;
        running = running.max(ratio_max(co, &g, exec)?);
        out.push(running);
    }
    Ok(out)
}

fn odd(n: usize) -> usize {
    n.max(3) | 1
}

/// Running value of `offset + ∫_{t0}^{t} exp(∫_{t0}^{τ} p)·(∫_{t0}^{τ} g) dτ`.
fn running_double_integral<P, G>(grid: &UniformGrid, exec: Execution, offset: f64, p: P, g: G) -> Result<Vec<f64>>
where
    P: Fn(f64) -> Result<f64> + Sync + Send,
    G: Fn(f64) -> Result<f64> + Sync + Send,
{
    let pg = grid.eval(exec, |t| Ok::<_, Error>((p(t)?, g(t)?)))?;
    let h = grid.step();
    let ps: Vec<f64> = pg.iter().map(|v| v.0).collect();
    let gs: Vec<f64> = pg.iter().map(|v| v.1).collect();
    let ip = cumulative_simpson(&ps, h);
    let ig = cumulative_simpson(&gs, h);
    let outer: Vec<f64> = ip.iter().zip(&ig).map(|(a, b)| a.exp() * b).collect();
    Ok(cumulative_simpson(&outer, h).into_iter().map(|v| offset + v).collect())
}

/// Nested integral condition with constant weight `M`:
/// `∫ exp(∫[3/2·M·a + b]) (∫ e) dτ` compared with zero for every `t`.
pub fn check_integral_condition(
    co: &RiccatiCoefficients,
    weight_const: f64,
    grid: &UniformGrid,
    sign: Sign,
    tol: f64,
    exec: Execution,
) -> Result<GridEvidence> {
    let values = running_double_integral(
        grid,
        exec,
        0.0,
        |t| {
            let cv = co.at(t)?;
            Ok(1.5 * weight_const * cv.a + cv.b)
        },
        |t| Ok(co.e().eval(t)?),
    )?;
    let (label, s) = match sign {
        Sign::Le => ("∫exp(∫[3/2·M·a + b])(∫e) ≤ 0", -1.0),
        Sign::Ge => ("∫exp(∫[3/2·M·a + b])(∫e) ≥ 0", 1.0),
    };
    let margins: Vec<f64> = values.iter().map(|v| s * v).collect();
    Ok(GridEvidence::from_samples(
        label,
        Relation::NonNegative,
        tol,
        grid,
        &margins,
    ))
}

/// The two roots of `c·y² + d·y + e` as expressions.
pub struct RhoConditions {
    pub rho_minus: Expr,
    pub rho_plus: Expr,
    pub evidence: Vec<GridEvidence>,
}

/// Builds `ρ±` and checks `c ≠ 0`, `d² − 4ce > 0` and the two running
/// integrals of `ρ'' + 3a·ρ·ρ' + a²·ρ³`.
pub fn rho_conditions(
    co: &RiccatiCoefficients,
    grid: &UniformGrid,
    tol: f64,
    exec: Execution,
) -> Result<RhoConditions> {
    let (c, d, e) = (co.c().clone(), co.d().clone(), co.e().clone());
    let disc = d.clone() * d.clone() - Expr::from(4.0) * c.clone() * e;
    let root = disc.clone().sqrt();
    let two_c = Expr::from(2.0) * c.clone();
    let rho_minus = (-d.clone() - root.clone()) / two_c.clone();
    let rho_plus = (-d + root) / two_c;

    let mut evidence = vec![
        GridEvidence::scan("c ≠ 0", Relation::Positive, tol, grid, exec, |t| Ok(c.eval(t)?.abs()))?,
        GridEvidence::scan("d² − 4ce > 0", Relation::Positive, tol, grid, exec, |t| {
            Ok(disc.eval(t)?)
        })?,
    ];
    if !evidence.iter().all(|e| e.pass) {
        return Ok(RhoConditions {
            rho_minus,
            rho_plus,
            evidence,
        });
    }
    for (rho, label, s) in [
        (&rho_minus, "∫[ρ−'' + 3a·ρ−·ρ−' + a²·ρ−³] ≤ 0", -1.0),
        (&rho_plus, "∫[ρ+'' + 3a·ρ+·ρ+' + a²·ρ+³] ≥ 0", 1.0),
    ] {
        let d1 = rho.derivative()?;
        let d2 = d1.derivative()?;
        let vals = grid.eval(exec, |t| -> Result<f64> {
            let a = co.a().eval(t)?;
            let r = rho.eval(t)?;
            Ok(d2.eval(t)? + 3.0 * a * r * d1.eval(t)? + a * a * r * r * r)
        })?;
        let running = cumulative_simpson(&vals, grid.step());
        let margins: Vec<f64> = running.iter().map(|v| s * v).collect();
        evidence.push(GridEvidence::from_samples(
            label,
            Relation::NonNegative,
            tol,
            grid,
            &margins,
        ));
    }
    Ok(RhoConditions {
        rho_minus,
        rho_plus,
        evidence,
    })
}

fn resolve_comparison(
    spec: &ComparisonSpec,
    name: &str,
    params: &CertifyParams,
    grid: &UniformGrid,
) -> Result<(Reference, GridEvidence)> {
    let (t1, t2) = params.span;
    match spec {
        ComparisonSpec::Formula { y, coefficients } => {
            let r = Reference::formula(y.clone())?;
            let ddy = y.derivative()?.derivative()?;
            let ev = GridEvidence::scan(
                format!("{name} solves its comparison equation"),
                Relation::NonNegative,
                FORMULA_RESIDUAL_TOL,
                grid,
                params.exec,
                |t| {
                    let (v, dv) = r.eval(t)?;
                    let cv = coefficients.at(t)?;
                    Ok(-(ddy.eval(t)? - cv.rhs(v, dv)).abs())
                },
            )?;
            Ok((r, ev))
        }
        ComparisonSpec::Initial { y0, dy0, coefficients } => {
            let tr = coefficients.solve(*y0, *dy0, (t1, t2), &params.ode)?;
            let reached = tr.t_end();
            let ev = GridEvidence::scalar(
                format!("{name} exists on the span"),
                Relation::NonNegative,
                0.0,
                grid,
                reached - t2,
            );
            Ok((
                Reference::Solution {
                    t1,
                    y0: *y0,
                    dy0: *dy0,
                    coefficients: coefficients.clone(),
                    trajectory: Some(Arc::new(tr)),
                },
                ev,
            ))
        }
    }
}

/// Checks the hypotheses of `theorem` for a Riccati problem.
pub fn certify(problem: &Problem, theorem: TheoremId, params: &CertifyParams) -> Result<Certificate> {
    match (problem, theorem) {
        (Problem::System(sys), TheoremId::T5_1) => certify_nonoscillation(sys, params),
        (Problem::Riccati(_), TheoremId::T5_1) => {
            Err(Error::InvalidArgument("T5.1 needs a linear system problem".into()))
        }
        (Problem::Riccati(co), id) => certify_riccati(co, id, params),
        (Problem::System(sys), id) => {
            let co = reduced(sys, params)?.1;
            let mut cert = certify_riccati(&co, id, params)?;
            cert.notes
                .push("checked on the Riccati equation reduced from the linear system".into());
            Ok(cert)
        }
    }
}

fn reduced(sys: &LinearSystem3, params: &CertifyParams) -> Result<(LinearSystem3, RiccatiCoefficients, Option<Expr>)> {
    let grid = params.grid()?;
    if sys.entry(1, 3).is_zero() {
        let co = reduce_system3(sys, &grid, params.exec)?;
        Ok((sys.clone(), co, None))
    } else {
        let (sys2, lambda) = eliminate_a13(sys, &grid, params.exec)?;
        let co = reduce_system3(&sys2, &grid, params.exec)?;
        Ok((sys2, co, Some(lambda)))
    }
}

fn certify_riccati(co: &RiccatiCoefficients, theorem: TheoremId, params: &CertifyParams) -> Result<Certificate> {
    let grid = params.grid()?;
    let mut cert = Certificate::new(theorem, params.span, co);
    if params.d_mode == DiscriminantMode::PaperLiteral {
        cert.notes
            .push("D evaluated with the printed formula; it does not imply Γ ≥ 0".into());
    }
    match theorem {
        TheoremId::L2_1 => lemma_21(co, params, &grid, &mut cert)?,
        TheoremId::T3_1 => theorem_31_32(co, params, &grid, &mut cert, Side::Upper)?,
        TheoremId::T3_2 => theorem_31_32(co, params, &grid, &mut cert, Side::Lower)?,
        TheoremId::T3_3 => theorem_33(co, params, &grid, &mut cert)?,
        TheoremId::T4_1 => theorem_41_42(co, params, &grid, &mut cert, Side::Upper)?,
        TheoremId::T4_2 => theorem_41_42(co, params, &grid, &mut cert, Side::Lower)?,
        TheoremId::T4_3 => theorem_43_44(co, params, &mut cert, Side::Upper)?,
        TheoremId::T4_4 => theorem_43_44(co, params, &mut cert, Side::Lower)?,
        TheoremId::T4_5 => theorem_45(co, params, &grid, &mut cert)?,
        TheoremId::T5_1 => unreachable!("handled by certify"),
    }
    if let Some(r) = &cert.admissible {
        if r.is_empty(co)? {
            cert.notes.push(EMPTY_REGION_NOTE.into());
        }
    }
    Ok(cert.finish())
}

fn lemma_21(co: &RiccatiCoefficients, p: &CertifyParams, grid: &UniformGrid, cert: &mut Certificate) -> Result<()> {
    cert.evidence.push(GridEvidence::scan(
        "a ≠ 0",
        Relation::Positive,
        p.tol,
        grid,
        p.exec,
        |t| Ok(co.a().eval(t)?.abs()),
    )?);
    cert.evidence.push(d_evidence(co, grid, p.tol, p.d_mode, p.exec)?);
    if p.d_mode == DiscriminantMode::PaperLiteral {
        cert.diagnostics
            .push(d_evidence(co, grid, p.tol, DiscriminantMode::Corrected, p.exec)?);
    }
    Ok(())
}

/// Witness `η = λ + M` (upper) or `ζ = −λ − M` (lower) and its residual
/// diagnostic.
fn witness(
    co: &RiccatiCoefficients,
    p: &CertifyParams,
    grid: &UniformGrid,
    side: Side,
    cert: &mut Certificate,
) -> Result<(f64, f64)> {
    let m = sup_ratio(co, grid, p.exec)?;
    let w = match side {
        Side::Upper => p.lambda + m,
        Side::Lower => -p.lambda - m,
    };
    let (res, at) = witness_residual(co, grid, w, side, p.exec)?;
    cert.diagnostics.push(GridEvidence {
        condition: format!("constant {w} solves the comparison inequality"),
        relation: Relation::NonNegative,
        tolerance: p.tol,
        grid: *grid,
        min_margin: res,
        argmin: at,
        first_violation: (res < -p.tol).then_some(at),
        pass: res >= -p.tol,
    });
    cert.constants.insert("M".into(), ConstValue::Scalar(m));
    cert.constants.insert("lambda".into(), ConstValue::Scalar(p.lambda));
    Ok((m, w))
}

fn theorem_31_32(
    co: &RiccatiCoefficients,
    p: &CertifyParams,
    grid: &UniformGrid,
    cert: &mut Certificate,
    side: Side,
) -> Result<()> {
    let spec = p.y1.as_ref().ok_or_else(|| Error::MissingComparison {
        theorem: cert.theorem.to_string(),
        name: "y1".into(),
    })?;
    cert.evidence
        .extend(check_sign_conditions(co, grid, p.tol, p.d_mode, false, p.exec)?);
    let (y1, exists) = resolve_comparison(spec, "y1", p, grid)?;
    cert.evidence.push(exists);
    let (_, w) = witness(co, p, grid, side, cert)?;
    let t1 = p.span.0;
    let (y1_t1, _) = y1.eval(t1)?;
    let gamma = p.gamma.unwrap_or(y1_t1);
    cert.constants.insert("gamma".into(), ConstValue::Scalar(gamma));
    cert.constants.insert("witness".into(), ConstValue::Scalar(w));
    let (label, s) = match side {
        Side::Upper => ("witness ≥ γ", 1.0),
        Side::Lower => ("witness ≤ γ", -1.0),
    };
    cert.evidence.push(GridEvidence::scalar(
        label,
        Relation::NonNegative,
        p.tol,
        grid,
        s * (w - gamma),
    ));

    let co1 = spec.coefficients();
    if y1.t_end() >= p.span.1 {
        let values = running_double_integral(
            grid,
            p.exec,
            gamma - y1_t1,
            |t| {
                let cv = co.at(t)?;
                Ok(1.5 * cv.a * (w + y1.eval(t)?.0) + cv.b)
            },
            |t| {
                let (v, dv) = y1.eval(t)?;
                Ok(mismatch_l(&co.at(t)?, &co1.at(t)?, v, dv))
            },
        )?;
        let label = match side {
            Side::Upper => "γ − y1(t1) + ∫exp(∫[3/2·a(η + y1) + b])(∫L) ≥ 0",
            Side::Lower => "γ − y1(t1) + ∫exp(∫[3/2·a(ζ + y1) + b])(∫L) ≤ 0",
        };
        let margins: Vec<f64> = values.iter().map(|v| s * v).collect();
        cert.evidence.push(GridEvidence::from_samples(
            label,
            Relation::NonNegative,
            p.tol,
            grid,
            &margins,
        ));
    }

    let sol = Reference::constant(w);
    let (lo, hi) = match side {
        Side::Upper => (gamma, w),
        Side::Lower => (w, gamma),
    };
    let sign = if side == Side::Upper { Sign::Ge } else { Sign::Le };
    let init_w = NuCondition::new("ν(t, witness, y, 0, y')", sol.clone(), false, sign);
    let init_y1 = NuCondition::new("ν(t, y, y1, y', y1')", y1.clone(), true, sign);
    cert.admissible = Some(AdmissibleRegion {
        t0: t1,
        y_lo: lo,
        y_hi: hi,
        nu_conditions: vec![init_w.clone(), init_y1.clone()],
    });
    cert.notes
        .push("strict initial ν inequality relaxed to its closure for sampling".into());
    let mut concl = vec![init_w];
    if y1.t_end() >= p.span.1 {
        // The extra ν conclusion needs ∫L with the matching sign.
        let vals = grid.eval(p.exec, |t| -> Result<f64> {
            let (v, dv) = y1.eval(t)?;
            Ok(mismatch_l(&co.at(t)?, &co1.at(t)?, v, dv))
        })?;
        let running = cumulative_simpson(&vals, grid.step());
        let margins: Vec<f64> = running.iter().map(|v| s * v).collect();
        let ev = GridEvidence::from_samples(
            if side == Side::Upper {
                "∫L(y1) ≥ 0"
            } else {
                "∫L(y1) ≤ 0"
            },
            Relation::NonNegative,
            p.tol,
            grid,
            &margins,
        );
        if ev.pass {
            concl.push(init_y1);
        }
        cert.diagnostics.push(ev);
    }
    let (lower, upper) = match side {
        Side::Upper => (y1, sol),
        Side::Lower => (sol, y1),
    };
    cert.conclusion = Some(Conclusion {
        lower: Some(lower),
        upper: Some(upper),
        nu_conditions: concl,
    });
    Ok(())
}

fn theorem_33(co: &RiccatiCoefficients, p: &CertifyParams, grid: &UniformGrid, cert: &mut Certificate) -> Result<()> {
    let missing = |name: &str| Error::MissingComparison {
        theorem: cert.theorem.to_string(),
        name: name.into(),
    };
    let s1 = p.y1.as_ref().ok_or_else(|| missing("y1"))?;
    let s2 = p.y2.as_ref().ok_or_else(|| missing("y2"))?;
    cert.evidence.push(branch_condition(co, grid, p.tol, p.d_mode, p.exec)?);
    let (y1, e1) = resolve_comparison(s1, "y1", p, grid)?;
    let (y2, e2) = resolve_comparison(s2, "y2", p, grid)?;
    cert.evidence.push(e1);
    cert.evidence.push(e2);
    if y1.t_end() >= p.span.1 && y2.t_end() >= p.span.1 {
        let (co1, co2) = (s1.coefficients(), s2.coefficients());
        let l = |y: &Reference, other: &RiccatiCoefficients| {
            let vals = grid.eval(p.exec, |t| -> Result<f64> {
                let (v, dv) = y.eval(t)?;
                Ok(mismatch_l(&co.at(t)?, &other.at(t)?, v, dv))
            })?;
            Ok::<_, Error>(cumulative_simpson(&vals, grid.step()))
        };
        cert.evidence.push(GridEvidence::from_samples(
            "∫L(y1) ≥ 0",
            Relation::NonNegative,
            p.tol,
            grid,
            &l(&y1, co1)?,
        ));
        cert.evidence.push(GridEvidence::scan(
            "y1 < y2",
            Relation::Positive,
            p.tol,
            grid,
            p.exec,
            |t| Ok(y2.eval(t)?.0 - y1.eval(t)?.0),
        )?);
        cert.evidence.push(GridEvidence::from_samples(
            "∫L1(y2) ≥ 0",
            Relation::NonNegative,
            p.tol,
            grid,
            &l(&y2, co2)?,
        ));
    }
    let t1 = p.span.0;
    let c1 = NuCondition::new("ν(t, y, y1, y', y1')", y1.clone(), true, Sign::Ge);
    let c2 = NuCondition::new("ν(t, y, y2, y', y2')", y2.clone(), true, Sign::Le);
    cert.admissible = Some(AdmissibleRegion {
        t0: t1,
        y_lo: y1.eval(t1)?.0,
        y_hi: y2.eval(t1)?.0,
        nu_conditions: vec![c1.clone(), c2.clone()],
    });
    cert.conclusion = Some(Conclusion {
        lower: Some(y1),
        upper: Some(y2),
        nu_conditions: vec![c1, c2],
    });
    Ok(())
}

fn theorem_41_42(
    co: &RiccatiCoefficients,
    p: &CertifyParams,
    grid: &UniformGrid,
    cert: &mut Certificate,
    side: Side,
) -> Result<()> {
    cert.evidence
        .extend(check_sign_conditions(co, grid, p.tol, p.d_mode, false, p.exec)?);
    let saved_lambda = p.lambda;
    let p0 = CertifyParams {
        lambda: 0.0,
        ..p.clone()
    };
    let (m, _) = witness(co, &p0, grid, side, cert)?;
    cert.constants.insert("lambda".into(), ConstValue::Scalar(0.0));
    let _ = saved_lambda;
    cert.evidence.push(GridEvidence::scalar(
        "M = sup (|c| + |d| + |e|)/a² < ∞",
        Relation::Positive,
        0.0,
        grid,
        1.0 / (1.0 + m),
    ));
    let t0 = p.span.0;
    match side {
        Side::Upper => {
            cert.evidence
                .push(check_integral_condition(co, m, grid, Sign::Le, p.tol, p.exec)?);
            let m_ref = Reference::constant(m);
            let zero = Reference::constant(0.0);
            let cm = NuCondition::new("ν(t, M, y, 0, y')", m_ref.clone(), false, Sign::Ge);
            let c0 = NuCondition::new("ν(t, 0, y, 0, y')", zero.clone(), false, Sign::Le);
            cert.admissible = Some(AdmissibleRegion {
                t0,
                y_lo: 0.0,
                y_hi: m,
                nu_conditions: vec![cm.clone(), c0.clone()],
            });
            cert.conclusion = Some(Conclusion {
                lower: Some(zero),
                upper: Some(m_ref),
                nu_conditions: vec![cm, c0],
            });
        }
        Side::Lower => {
            // The printed weight with the sign flipped gates; the printed
            // variant is kept as a diagnostic.
            cert.evidence
                .push(check_integral_condition(co, m, grid, Sign::Ge, p.tol, p.exec)?);
            cert.diagnostics
                .push(check_integral_condition(co, m, grid, Sign::Le, p.tol, p.exec)?);
            cert.notes.push(
                "paper-text ambiguous: the printed integral condition repeats the upper-bound case; its mirrored sign gates the verdict and the printed variant is a diagnostic".into(),
            );
            cert.notes.push("ν conditions use −M, the mirrored bound".into());
            let m_ref = Reference::constant(-m);
            let zero = Reference::constant(0.0);
            let cm = NuCondition::new("ν(t, −M, y, 0, y')", m_ref.clone(), false, Sign::Le);
            let c0 = NuCondition::new("ν(t, 0, y, 0, y')", zero.clone(), false, Sign::Ge);
            cert.admissible = Some(AdmissibleRegion {
                t0,
                y_lo: -m,
                y_hi: 0.0,
                nu_conditions: vec![cm.clone(), c0.clone()],
            });
            cert.conclusion = Some(Conclusion {
                lower: Some(m_ref),
                upper: Some(zero),
                nu_conditions: vec![cm, c0],
            });
        }
    }
    Ok(())
}

fn theorem_43_44(co: &RiccatiCoefficients, p: &CertifyParams, cert: &mut Certificate, side: Side) -> Result<()> {
    let grid = p.grid()?;
    let negative = side == Side::Lower;
    cert.evidence
        .extend(check_sign_conditions(co, &grid, p.tol, p.d_mode, negative, p.exec)?);
    if negative {
        cert.notes
            .push("paper-text ambiguous: a < 0 is required as printed".into());
    }
    let parts = p.partition_points()?;
    let n = parts.len() - 1;
    let per = odd((p.grid_n / n).max(201));
    let mn = sup_ratio_partition(co, &parts, per, p.exec)?;
    cert.constants
        .insert("partition".into(), ConstValue::List(parts.clone()));
    cert.constants.insert("M_n".into(), ConstValue::List(mn.clone()));

    let mut margins = Vec::new();
    let mut worst: Option<GridEvidence> = None;
    for k in 0..n {
        let g = UniformGrid::new(parts[k], parts[k + 1], per)?;
        let mk = mn[k];
        let s = if negative { -1.0 } else { 1.0 };
        let values = running_double_integral(
            &g,
            p.exec,
            0.0,
            |t| {
                let cv = co.at(t)?;
                Ok(s * (1.5 * cv.a * mk + cv.b))
            },
            |t| Ok(co.e().eval(t)?),
        )?;
        // ≤ 0 for the upper case, ≥ 0 for the lower one.
        let m: Vec<f64> = values.iter().map(|v| -s * v).collect();
        let label = if negative {
            "∫exp(−∫[3/2·a·M_{n+1} + b])(∫e) ≥ 0 on every subinterval"
        } else {
            "∫exp(∫[3/2·a·M_{n+1} + b])(∫e) ≤ 0 on every subinterval"
        };
        let ev = GridEvidence::from_samples(label, Relation::NonNegative, p.tol, &g, &m);
        if worst
            .as_ref()
            .is_none_or(|w| ev.min_margin < w.min_margin || (ev.min_margin.is_nan() && !w.min_margin.is_nan()))
        {
            worst = Some(ev.clone());
        }
        margins.push(ev);
    }
    let mut combined = worst.expect("partition has at least one subinterval");
    combined.first_violation = margins.iter().find_map(|e| e.first_violation);
    combined.grid = UniformGrid::new(p.span.0, p.span.1, n * (per - 1) + 1)?;
    combined.pass = margins.iter().all(|e| e.pass);
    cert.evidence.push(combined);

    let t0 = p.span.0;
    let s = if negative { -1.0 } else { 1.0 };
    let bound = Reference::Piecewise {
        knots: parts,
        values: mn.iter().map(|v| s * v).collect(),
    };
    let zero = Reference::constant(0.0);
    let (lo, hi, conds) = if negative {
        (
            -mn[0],
            0.0,
            vec![
                NuCondition::new("ν(t, y, 0, y', 0)", zero.clone(), true, Sign::Le),
                NuCondition::new("ν(t, −M_n, y, 0, y')", bound.clone(), false, Sign::Le),
            ],
        )
    } else {
        (
            0.0,
            mn[0],
            vec![
                NuCondition::new("ν(t, y, M_n, y', 0)", bound.clone(), true, Sign::Le),
                NuCondition::new("ν(t, y, 0, y', 0)", zero.clone(), true, Sign::Ge),
            ],
        )
    };
    cert.admissible = Some(AdmissibleRegion {
        t0,
        y_lo: lo,
        y_hi: hi,
        nu_conditions: conds.clone(),
    });
    let concl = if negative { conds } else { vec![conds[0].clone()] };
    let (lower, upper) = if negative { (bound, zero) } else { (zero, bound) };
    cert.conclusion = Some(Conclusion {
        lower: Some(lower),
        upper: Some(upper),
        nu_conditions: concl,
    });
    Ok(())
}

fn theorem_45(co: &RiccatiCoefficients, p: &CertifyParams, grid: &UniformGrid, cert: &mut Certificate) -> Result<()> {
    cert.evidence.push(branch_condition(co, grid, p.tol, p.d_mode, p.exec)?);
    let rc = rho_conditions(co, grid, p.tol, p.exec)?;
    cert.evidence.extend(rc.evidence);
    if !cert.evidence.iter().all(|e| e.pass) {
        return Ok(());
    }
    let rm = Reference::formula(rc.rho_minus.clone())?;
    let rp = Reference::formula(rc.rho_plus.clone())?;
    let samples = |r: &Reference| -> Result<Vec<[f64; 2]>> {
        (0..=10)
            .map(|i| {
                let t = p.span.0 + (p.span.1 - p.span.0) * i as f64 / 10.0;
                Ok([t, r.eval(t)?.0])
            })
            .collect()
    };
    cert.constants
        .insert("rho_minus".into(), ConstValue::Samples(samples(&rm)?));
    cert.constants
        .insert("rho_plus".into(), ConstValue::Samples(samples(&rp)?));
    cert.notes.push(format!("ρ− = {}, ρ+ = {}", rc.rho_minus, rc.rho_plus));
    let t0 = p.span.0;
    let c1 = NuCondition::new("ν(t, y, ρ−, y', ρ−')", rm.clone(), true, Sign::Ge);
    let c2 = NuCondition::new("ν(t, y, ρ+, y', ρ+')", rp.clone(), true, Sign::Le);
    cert.admissible = Some(AdmissibleRegion {
        t0,
        y_lo: rm.eval(t0)?.0,
        y_hi: rp.eval(t0)?.0,
        nu_conditions: vec![c1.clone(), c2.clone()],
    });
    cert.conclusion = Some(Conclusion {
        lower: Some(rm),
        upper: Some(rp),
        nu_conditions: vec![c1, c2],
    });
    Ok(())
}

/// Reduces the system to a Riccati equation and tries each strategy in
/// order; the first certified criterion wins. Failing every strategy is
/// inconclusive, never a refutation.
pub fn certify_nonoscillation(sys: &LinearSystem3, params: &CertifyParams) -> Result<Certificate> {
    let (sys2, co, lambda) = reduced(sys, params)?;
    let mut cert = Certificate::new(TheoremId::T5_1, params.span, &co);
    cert.context = Some(Arc::new(CertContext {
        co: co.clone(),
        system: Some(sys2),
    }));
    if let Some(l) = lambda {
        cert.notes.push(format!(
            "a13 eliminated with λ = {l}; checks run on the transformed system"
        ));
    }
    cert.notes.push(format!(
        "reduced coefficients: a = {}, b = {}, c = {}, d = {}, e = {}",
        co.a(),
        co.b(),
        co.c(),
        co.d(),
        co.e()
    ));
    for &id in &params.strategies {
        if !TheoremId::GLOBAL.contains(&id) {
            return Err(Error::UnsupportedTheorem(format!("{id} as a non-oscillation strategy")));
        }
        let c = certify_riccati(&co, id, params)?;
        let vacuous = c.has_empty_region();
        let mut failed = c.failed_conditions();
        if vacuous {
            failed.push(EMPTY_REGION_NOTE.into());
        }
        cert.attempts.push(Attempt {
            theorem: id,
            verdict: c.verdict,
            failed,
        });
        // A criterion that covers no solution says nothing about φ.
        if c.verdict == Verdict::Certified && !vacuous {
            cert.strategy = Some(id);
            cert.evidence = c.evidence;
            cert.diagnostics = c.diagnostics;
            cert.constants = c.constants;
            cert.admissible = c.admissible;
            cert.conclusion = c.conclusion;
            cert.notes.extend(c.notes);
            cert.verdict = Verdict::Certified;
            return Ok(cert);
        }
    }
    cert.verdict = Verdict::Inconclusive;
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(a: f64, b: f64) -> CertifyParams {
        CertifyParams {
            exec: Execution::Sequential,
            ..CertifyParams::with_span((a, b))
        }
    }

    #[test]
    fn theorem_ids_round_trip() {
        for id in TheoremId::ALL {
            assert_eq!(id.to_string().parse::<TheoremId>().unwrap(), id);
        }
        assert_eq!("t4.1".parse::<TheoremId>().unwrap(), TheoremId::T4_1);
        assert!(matches!("T9.9".parse::<TheoremId>(), Err(Error::UnsupportedTheorem(_))));
    }

    #[test]
    fn sign_condition_examples() {
        let p = params(0.0, 4.0);
        let g = p.grid().unwrap();
        let co = RiccatiCoefficients::constant(1.0, 0.0, 0.0, 0.0, 5.0);
        let ev = check_sign_conditions(&co, &g, 1e-9, DiscriminantMode::Corrected, false, p.exec).unwrap();
        assert_eq!(ev[0].min_margin, 1.0);
        assert_eq!(ev[1].min_margin, 0.0);
        assert!(ev.iter().all(|e| e.pass));
        let co = RiccatiCoefficients::constant(1.0, 0.0, 3.0, 1.0, 0.0);
        let ev = check_sign_conditions(&co, &g, 1e-9, DiscriminantMode::Corrected, false, p.exec).unwrap();
        assert!(!ev[1].pass);
        assert_eq!(ev[1].min_margin, -24.0);
        let co = RiccatiCoefficients::parse("sin(t)", "0", "0", "0", "0").unwrap();
        let g = UniformGrid::new(0.5, 4.0, 2001).unwrap();
        let ev = check_sign_conditions(&co, &g, 1e-9, DiscriminantMode::Corrected, false, p.exec).unwrap();
        assert!(!ev[0].pass);
        assert!((ev[0].first_violation.unwrap() - std::f64::consts::PI).abs() < 1e-9);
    }

    #[test]
    fn sup_ratio_examples() {
        let p = params(0.0, 10.0);
        let g = p.grid().unwrap();
        let co = RiccatiCoefficients::constant(1.0, 0.0, 0.0, 0.0, -0.1);
        assert!((sup_ratio(&co, &g, p.exec).unwrap() - 0.1).abs() < 1e-15);
        let co = RiccatiCoefficients::parse("1", "0", "sin(t)", "0", "0").unwrap();
        assert!((sup_ratio(&co, &g, p.exec).unwrap() - 1.0).abs() < 1e-4);
        let co = RiccatiCoefficients::parse("1", "0", "t*sin(t)", "0", "0").unwrap();
        let parts: Vec<f64> = (0..=10).map(|i| i as f64).collect();
        let mn = sup_ratio_partition(&co, &parts, 101, p.exec).unwrap();
        assert!(mn.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn integral_condition_examples() {
        let p = params(0.0, 20.0);
        let g = p.grid().unwrap();
        let zero = RiccatiCoefficients::constant(1.0, 0.0, 0.0, 0.0, 0.0);
        for s in [Sign::Le, Sign::Ge] {
            let ev = check_integral_condition(&zero, 0.1, &g, s, 1e-9, p.exec).unwrap();
            assert!(ev.pass && ev.min_margin == 0.0);
        }
        let neg = RiccatiCoefficients::constant(1.0, 0.0, 0.0, 0.0, -0.1);
        let ev = check_integral_condition(&neg, 0.1, &g, Sign::Le, 1e-9, p.exec).unwrap();
        assert!(ev.pass);
        let pos = RiccatiCoefficients::constant(1.0, 0.0, 0.0, 0.0, 0.1);
        let ev = check_integral_condition(&pos, 0.1, &g, Sign::Le, 1e-9, p.exec).unwrap();
        assert!(!ev.pass);
        assert!(ev.first_violation.unwrap() > 0.0 && ev.first_violation.unwrap() < 0.02);
    }

    #[test]
    fn rho_examples() {
        let p = params(0.0, 5.0);
        let g = p.grid().unwrap();
        let co = RiccatiCoefficients::constant(1.0, 0.0, 1.0, 0.0, -1.0);
        let rc = rho_conditions(&co, &g, 1e-9, p.exec).unwrap();
        assert_eq!(rc.rho_minus.eval(0.0).unwrap(), -1.0);
        assert_eq!(rc.rho_plus.eval(0.0).unwrap(), 1.0);
        assert!(rc.evidence.iter().all(|e| e.pass));
        let co = RiccatiCoefficients::constant(1.0, 0.0, 1.0, 0.0, 1.0);
        let rc = rho_conditions(&co, &g, 1e-9, p.exec).unwrap();
        assert!(!rc.evidence[1].pass);
    }

    #[test]
    fn t41_certifies_and_flips() {
        let p = params(0.0, 20.0);
        let co = RiccatiCoefficients::constant(1.0, 0.0, 0.0, 0.0, -0.1);
        let cert = certify(&Problem::Riccati(co.clone()), TheoremId::T4_1, &p).unwrap();
        assert_eq!(cert.verdict, Verdict::Certified, "{:?}", cert.failed_conditions());
        assert_eq!(cert.constants["M"], ConstValue::Scalar(0.1));
        let region = cert.admissible.as_ref().unwrap();
        assert_eq!((region.y_lo, region.y_hi), (0.0, 0.1));
        let (lo, hi) = region.dy_interval(&co, 0.05).unwrap().unwrap();
        assert!((lo + 0.00375).abs() < 1e-15 && (hi - 0.01125).abs() < 1e-15);
        let (lo, _) = region.dy_interval(&co, 0.0).unwrap().unwrap();
        assert_eq!(lo, 0.0);
        let (_, hi) = region.dy_interval(&co, 0.1).unwrap().unwrap();
        assert!(hi.abs() < 1e-16);

        let flipped = co.with_e(0.1.into());
        let cert = certify(&Problem::Riccati(flipped), TheoremId::T4_1, &p).unwrap();
        assert_eq!(cert.verdict, Verdict::Refuted);
    }

    #[test]
    fn t45_certifies() {
        let p = params(0.0, 50.0);
        let co = RiccatiCoefficients::constant(1.0, 0.0, 1.0, 0.0, -1.0);
        // min Γ = −1 here, so the corrected D refutes condition (4).
        let cert = certify(&Problem::Riccati(co.clone()), TheoremId::T4_5, &p).unwrap();
        assert_eq!(cert.verdict, Verdict::Refuted);
        assert_eq!(cert.evidence[0].min_margin, -4.0);
        let p = CertifyParams {
            d_mode: DiscriminantMode::PaperLiteral,
            ..p
        };
        let cert = certify(&Problem::Riccati(co), TheoremId::T4_5, &p).unwrap();
        assert_eq!(cert.verdict, Verdict::Certified, "{:?}", cert.failed_conditions());
        let r = cert.admissible.unwrap();
        assert_eq!((r.y_lo, r.y_hi), (-1.0, 1.0));
    }

    #[test]
    fn comparison_theorems_need_solutions() {
        let p = params(0.0, 1.0);
        let co = RiccatiCoefficients::constant(1.0, 0.0, 0.0, 0.0, 0.0);
        let err = certify(&Problem::Riccati(co), TheoremId::T3_1, &p).unwrap_err();
        assert!(matches!(err, Error::MissingComparison { .. }));
    }

    #[test]
    fn nonoscillation_strategies() {
        let p = params(0.0, 50.0);
        let sys = LinearSystem3::companion(0.0.into(), Expr::from(-0.1));
        let cert = certify_nonoscillation(&sys, &p).unwrap();
        assert_eq!(cert.verdict, Verdict::Certified);
        assert_eq!(cert.strategy, Some(TheoremId::T4_1));
        let sys = LinearSystem3::companion(0.0.into(), Expr::from(0.1));
        let cert = certify_nonoscillation(&sys, &p).unwrap();
        assert_eq!(cert.verdict, Verdict::Inconclusive);
        assert_eq!(cert.attempts.len(), 5);
        // The mirrored criterion holds but its region is empty when b = 0.
        let t42 = &cert.attempts[1];
        assert_eq!(t42.verdict, Verdict::Certified);
        assert_eq!(t42.failed, vec![EMPTY_REGION_NOTE.to_string()]);
        let mut sys = LinearSystem3::companion(0.0.into(), 0.0.into());
        sys.a[1][2] = Expr::parse("t - 1").unwrap();
        assert!(matches!(
            certify_nonoscillation(&sys, &p),
            Err(Error::Precondition { .. })
        ));
    }

    #[test]
    fn certificates_are_deterministic() {
        let co = RiccatiCoefficients::parse("1 + 0.1*sin(t)", "0.2", "0.1*cos(t)", "0.3", "-0.05").unwrap();
        let mut p = params(0.0, 10.0);
        let a = certify(&Problem::Riccati(co.clone()), TheoremId::T4_3, &p).unwrap();
        p.exec = Execution::Parallel;
        let b = certify(&Problem::Riccati(co), TheoremId::T4_3, &p).unwrap();
        assert_eq!(
            format!("{a:?}").replace("Parallel", "Sequential"),
            format!("{b:?}").replace("Parallel", "Sequential")
        );
    }
}
