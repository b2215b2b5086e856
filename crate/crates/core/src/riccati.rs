//! The Riccati equation as a first-order field, and its scalar functionals.
//!
//! Notation follows the equation
//! `y'' + 3a·y·y' + b·y' + a²·y³ + c·y² + d·y + e = 0`:
//!
//! * `ν(t,u,v,u1,v1) = (u1 − v1) + 3/2·a·(u² − v²) + b·(u − v)`
//! * `Γ(t,u,v) = a²(u² + uv + v²) + (c − 3/2·a')(u + v) − b' + d`
//! * `J(t,u,v) = (u − v)·Γ(t,u,v)`
//! * `L(t,u,v)`, the mismatch between two coefficient sets along `(u, v)`.
//!
//! Along a solution `y0` of the equation and a solution `y1` of the same
//! equation with other coefficients,
//! `ν(t) = ν(t1) − ∫J(y0, y1) + ∫L(y1, y1')`; [`identity_residual`] measures
//! how far two numerical trajectories are from satisfying it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Expr, ExprError};
use crate::grid::{scan_max, scan_min, UniformGrid};
use crate::ode::{self, Options, Trajectory, VectorField};
use crate::par::Execution;
use crate::quad::cumulative_simpson;

/// The coefficient quintuple with cached `a'` and `b'`.
#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiCoefficients {
    a: Expr,
    b: Expr,
    c: Expr,
    d: Expr,
    e: Expr,
    da: Expr,
    db: Expr,
}

#[derive(Serialize, Deserialize)]
struct CoefficientsRepr {
    a: Expr,
    b: Expr,
    c: Expr,
    d: Expr,
    e: Expr,
}

impl Serialize for RiccatiCoefficients {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CoefficientsRepr {
            a: self.a.clone(),
            b: self.b.clone(),
            c: self.c.clone(),
            d: self.d.clone(),
            e: self.e.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for RiccatiCoefficients {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = CoefficientsRepr::deserialize(d)?;
        RiccatiCoefficients::new(r.a, r.b, r.c, r.d, r.e).map_err(serde::de::Error::custom)
    }
}

impl RiccatiCoefficients {
    /// Fails if `a` or `b` is not differentiable.
    pub fn new(a: Expr, b: Expr, c: Expr, d: Expr, e: Expr) -> Result<Self, ExprError> {
        let da = a.derivative()?;
        let db = b.derivative()?;
        Ok(RiccatiCoefficients { a, b, c, d, e, da, db })
    }

    pub fn parse(a: &str, b: &str, c: &str, d: &str, e: &str) -> Result<Self, ExprError> {
        Self::new(
            Expr::parse(a)?,
            Expr::parse(b)?,
            Expr::parse(c)?,
            Expr::parse(d)?,
            Expr::parse(e)?,
        )
    }

    /// Constant coefficients.
    pub fn constant(a: f64, b: f64, c: f64, d: f64, e: f64) -> Self {
        Self::new(a.into(), b.into(), c.into(), d.into(), e.into()).expect("constants are differentiable")
    }

    pub fn a(&self) -> &Expr {
        &self.a
    }
    pub fn b(&self) -> &Expr {
        &self.b
    }
    pub fn c(&self) -> &Expr {
        &self.c
    }
    pub fn d(&self) -> &Expr {
        &self.d
    }
    pub fn e(&self) -> &Expr {
        &self.e
    }
    pub fn da(&self) -> &Expr {
        &self.da
    }
    pub fn db(&self) -> &Expr {
        &self.db
    }

    /// Same coefficients with `e` replaced.
    pub fn with_e(&self, e: Expr) -> Self {
        RiccatiCoefficients { e, ..self.clone() }
    }

    pub fn at(&self, t: f64) -> Result<CoeffValues, ExprError> {
        Ok(CoeffValues {
            t,
            a: self.a.eval(t)?,
            b: self.b.eval(t)?,
            c: self.c.eval(t)?,
            d: self.d.eval(t)?,
            e: self.e.eval(t)?,
            da: self.da.eval(t)?,
            db: self.db.eval(t)?,
        })
    }

    pub fn field(&self) -> RiccatiField<'_> {
        RiccatiField { co: self }
    }

    /// Integrates the equation from `(y0, dy0)` at `span.0`.
    pub fn solve(&self, y0: f64, dy0: f64, span: (f64, f64), opts: &Options) -> Result<Trajectory> {
        Ok(ode::integrate(&self.field(), &[y0, dy0], span, opts)?)
    }
}

/// Coefficient values at one `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoeffValues {
    pub t: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub da: f64,
    pub db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscriminantMode {
    /// `2(2c − 3a')² + a²(d − b')`, kept for comparison with the printed text.
    PaperLiteral,
    /// `12a²(d − b') − (2c − 3a')²`, the sign of `min Γ` times `12a²`.
    #[default]
    Corrected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Upper,
    Lower,
}

impl CoeffValues {
    /// `y'' = rhs(y, y')`.
    pub fn rhs(&self, y: f64, v: f64) -> f64 {
        -(3.0 * self.a * y * v + self.b * v + self.a * self.a * y * y * y + self.c * y * y + self.d * y + self.e)
    }

    pub fn nu(&self, u: f64, v: f64, u1: f64, v1: f64) -> f64 {
        // Each term flips sign exactly under (u, u1) <-> (v, v1).
        (u1 - v1) + 1.5 * self.a * (u * u - v * v) + self.b * (u - v)
    }

    pub fn gamma(&self, u: f64, v: f64) -> f64 {
        self.a * self.a * (u * u + u * v + v * v) + (self.c - 1.5 * self.da) * (u + v) - self.db + self.d
    }

    pub fn jfun(&self, u: f64, v: f64) -> f64 {
        (u - v) * self.gamma(u, v)
    }

    /// Global minimiser `u0 = v0` of `Γ(t,·,·)` and the minimum value.
    pub fn gamma_min(&self) -> Result<(f64, f64)> {
        if self.a == 0.0 {
            return Err(Error::degenerate("a", self.t));
        }
        let a2 = self.a * self.a;
        let k = 3.0 * self.da - 2.0 * self.c;
        Ok((k / (6.0 * a2), (self.d - self.db) - k * k / (12.0 * a2)))
    }

    pub fn disc_d(&self, mode: DiscriminantMode) -> f64 {
        let a2 = self.a * self.a;
        let k = 2.0 * self.c - 3.0 * self.da;
        match mode {
            DiscriminantMode::PaperLiteral => 2.0 * k * k + a2 * (self.d - self.db),
            DiscriminantMode::Corrected => 12.0 * a2 * (self.d - self.db) - k * k,
        }
    }

    /// `(|c| + |d| + |e|) / a²`.
    pub fn ratio(&self) -> Result<f64> {
        if self.a == 0.0 {
            return Err(Error::degenerate("a", self.t));
        }
        Ok((self.c.abs() + self.d.abs() + self.e.abs()) / (self.a * self.a))
    }

    /// Left side of the comparison inequality for a constant `η`
    /// (`η' = η'' = 0`).
    pub fn constant_inequality_lhs(&self, eta: f64) -> f64 {
        self.a * self.a * eta * eta * eta + self.c * eta * eta + self.d * eta + self.e
    }
}

/// `L` with `base` unsubscripted and `other` subscripted.
pub fn mismatch_l(base: &CoeffValues, other: &CoeffValues, u: f64, v: f64) -> f64 {
    3.0 * (other.a - base.a) * u * v
        + (other.b - base.b) * v
        + (other.a * other.a - base.a * base.a) * u * u * u
        + (other.c - base.c) * u * u
        + (other.d - base.d) * u
        + (other.e - base.e)
}

/// The equation as a field on `(y, y')`.
pub struct RiccatiField<'a> {
    co: &'a RiccatiCoefficients,
}

impl VectorField for RiccatiField<'_> {
    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), ExprError> {
        let cv = self.co.at(t)?;
        dy[0] = y[1];
        dy[1] = cv.rhs(y[0], y[1]);
        Ok(())
    }
}

/// Maximum of `(|c| + |d| + |e|)/a²` over `[t0, t1]` with one refinement
/// pass.
pub fn ratio_max(co: &RiccatiCoefficients, grid: &UniformGrid, exec: Execution) -> Result<f64> {
    let (m, _) = scan_max(grid, exec, |t| co.at(t)?.ratio())?;
    Ok(m)
}

/// Constant solution of the upper (lower) comparison inequality:
/// `±(λ + max (|c| + |d| + |e|)/a²)`.
pub fn constant_witness(
    co: &RiccatiCoefficients,
    grid: &UniformGrid,
    lambda: f64,
    side: Side,
    exec: Execution,
) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be >= 0, got {lambda}")));
    }
    let m = ratio_max(co, grid, exec)?;
    Ok(match side {
        Side::Upper => lambda + m,
        Side::Lower => -lambda - m,
    })
}

/// Smallest signed margin of a constant witness in its inequality: the
/// minimum of `lhs(η)` for the upper side, of `−lhs(ζ)` for the lower side.
/// Nonnegative means the constant really is a witness on the grid.
pub fn witness_residual(
    co: &RiccatiCoefficients,
    grid: &UniformGrid,
    value: f64,
    side: Side,
    exec: Execution,
) -> Result<(f64, f64)> {
    let sign = match side {
        Side::Upper => 1.0,
        Side::Lower => -1.0,
    };
    let r = scan_min(grid, exec, f64::NEG_INFINITY, |t| {
        Ok::<_, Error>(sign * co.at(t)?.constant_inequality_lhs(value))
    })?;
    Ok((r.min, r.argmin))
}

/// Residual of the integral identity sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityResidual {
    pub t: Vec<f64>,
    pub residual: Vec<f64>,
}

impl IdentityResidual {
    pub fn max_abs(&self) -> f64 {
        self.residual.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    /// Linear interpolation between grid samples.
    pub fn at(&self, t: f64) -> Option<f64> {
        let (first, last) = (*self.t.first()?, *self.t.last()?);
        if !(t >= first && t <= last) {
            return None;
        }
        let i = self.t.partition_point(|&s| s <= t).min(self.t.len() - 1);
        if i == 0 || self.t[i - 1] == t {
            return Some(self.residual[i.saturating_sub(1)]);
        }
        let (t0, t1) = (self.t[i - 1], self.t[i]);
        let w = (t - t0) / (t1 - t0);
        Some((1.0 - w) * self.residual[i - 1] + w * self.residual[i])
    }
}

/// Default number of samples for [`identity_residual`].
pub const IDENTITY_POINTS: usize = 4001;

/// Evaluates `ν(t) − ν(t1) + ∫J − ∫L` along two trajectories, where `traj0`
/// solves the equation with `co` and `traj1` the one with `co1`.
pub fn identity_residual(
    co: &RiccatiCoefficients,
    co1: &RiccatiCoefficients,
    traj0: &Trajectory,
    traj1: &Trajectory,
    t1: f64,
    points: usize,
    exec: Execution,
) -> Result<IdentityResidual> {
    let start_ok = |tr: &Trajectory| tr.t_start() <= t1 && tr.t_end() > t1;
    if !start_ok(traj0) || !start_ok(traj1) {
        return Err(Error::SpanMismatch(format!(
            "t1 = {t1} not inside [{}, {}] and [{}, {}]",
            traj0.t_start(),
            traj0.t_end(),
            traj1.t_start(),
            traj1.t_end()
        )));
    }
    if traj0.dim() != 2 || traj1.dim() != 2 {
        return Err(Error::SpanMismatch("trajectories must carry (y, y')".into()));
    }
    let end = traj0.t_end().min(traj1.t_end());
    let points = if points.is_multiple_of(2) { points + 1 } else { points };
    let grid = UniformGrid::new(t1, end, points)?;
    let samples = grid.eval(exec, |t| -> Result<[f64; 3]> {
        let s0 = traj0.sample(t)?;
        let s1 = traj1.sample(t)?;
        let cv = co.at(t)?;
        let cv1 = co1.at(t)?;
        Ok([
            cv.nu(s0[0], s1[0], s0[1], s1[1]),
            cv.jfun(s0[0], s1[0]),
            mismatch_l(&cv, &cv1, s1[0], s1[1]),
        ])
    })?;
    let h = grid.step();
    let col = |j: usize| samples.iter().map(|s| s[j]).collect::<Vec<_>>();
    let nu = col(0);
    let int_j = cumulative_simpson(&col(1), h);
    let int_l = cumulative_simpson(&col(2), h);
    let residual = (0..points).map(|k| nu[k] - nu[0] + int_j[k] - int_l[k]).collect();
    Ok(IdentityResidual {
        t: grid.nodes(),
        residual,
    })
}
