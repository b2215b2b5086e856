//! Exact reductions between the Riccati equation and linear systems.
//!
//! * Riccati ↔ canonical system `φ' = aψ, ψ' = Xχ, χ' = Yφ + Zψ + Wχ`
//!   through `ψ = yφ`.
//! * General 3×3 system with `a13 ≡ 0` → Riccati equation with
//!   `a = a12` and coefficients `A, C, F, E`.
//! * Elimination of `a13` by `ψ = η − λχ`, `λ = a13/a12`.
//!
//! Exponentials such as `X` and `φ` are carried as running logarithms inside
//! the integrated state, so their accuracy is controlled by the integrator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Expr, ExprError};
use crate::grid::{scan_max, scan_min, UniformGrid};
use crate::ode::{self, Options, Trajectory, VectorField};
use crate::par::Execution;
use crate::riccati::RiccatiCoefficients;

/// Tolerance for the identically-zero check on `a13`.
pub const A13_TOL: f64 = 1e-12;
/// Relative tolerance of the compatibility check `c = a' + a·b`.
pub const COMPAT_TOL: f64 = 1e-9;

/// Fails with [`Error::Degenerate`] unless `f` keeps one strict sign on the
/// grid.
pub fn check_nonvanishing(f: &Expr, grid: &UniformGrid, exec: Execution, what: &str) -> Result<f64> {
    let s0 = f.eval(grid.start)?;
    if s0 == 0.0 {
        return Err(Error::degenerate(what, grid.start));
    }
    let sign = s0.signum();
    let r = scan_min(grid, exec, f64::MIN_POSITIVE, |t| f.eval(t).map(|v| sign * v))?;
    match r.first_below {
        Some(t) => Err(Error::degenerate(what, t)),
        None => Ok(sign),
    }
}

/// The canonical linear system attached to a Riccati equation.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalSystem {
    t0: f64,
    a: Expr,
    /// `X'/X = a'/(2a) − c/(2a) − b/2`.
    log_x_rate: Expr,
    w: Expr,
    d: Expr,
    e: Expr,
}

/// Values of the canonical coefficients at one `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalValues {
    pub a: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub w: f64,
}

/// Builds the canonical system with `X(t0) = 1`.
///
/// The system reproduces the Riccati equation only when `c = a' + a·b`;
/// otherwise no choice of `X, W` matches the `y²` coefficient and a
/// precondition error is returned.
pub fn riccati_to_canonical(
    co: &RiccatiCoefficients,
    t0: f64,
    grid: &UniformGrid,
    exec: Execution,
) -> Result<CanonicalSystem> {
    check_nonvanishing(co.a(), grid, exec, "a")?;
    let (worst, at) = scan_max(grid, exec, |t| -> Result<f64> {
        let cv = co.at(t)?;
        let lhs = cv.da + cv.a * cv.b;
        Ok((cv.c - lhs).abs() / (1.0 + cv.c.abs()))
    })?;
    if worst > COMPAT_TOL {
        return Err(Error::precondition(
            "c = a' + a·b",
            format!("relative mismatch {worst:.3e} at t = {at}"),
        ));
    }
    let a = co.a().clone();
    let two_a = Expr::from(2.0) * a.clone();
    let log_x_rate = co.da().clone() / two_a.clone() - co.c().clone() / two_a - co.b().clone() / Expr::from(2.0);
    let w = -co.b().clone() - log_x_rate.clone();
    Ok(CanonicalSystem {
        t0,
        a,
        log_x_rate,
        w,
        d: co.d().clone(),
        e: co.e().clone(),
    })
}

impl CanonicalSystem {
    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn w(&self) -> &Expr {
        &self.w
    }

    pub fn log_x_rate(&self) -> &Expr {
        &self.log_x_rate
    }

    /// Coefficients at `t`, given `log X(t)`.
    pub fn values(&self, t: f64, log_x: f64) -> Result<CanonicalValues, ExprError> {
        let x = log_x.exp();
        Ok(CanonicalValues {
            a: self.a.eval(t)?,
            x,
            y: -self.e.eval(t)? / x,
            z: -self.d.eval(t)? / x,
            w: self.w.eval(t)?,
        })
    }

    /// Riccati coefficients `(b, c, d, e)` rebuilt from `X, Y, Z, W` at `t`.
    pub fn rebuilt(&self, t: f64, log_x: f64) -> Result<[f64; 4], ExprError> {
        let v = self.values(t, log_x)?;
        let rate = self.log_x_rate.eval(t)?;
        let da = self.a.derivative()?.eval(t)?;
        Ok([-(rate + v.w), da - v.a * rate - v.w * v.a, -v.x * v.z, -v.x * v.y])
    }

    /// `log X(t)`, integrated from `t0`.
    pub fn log_x(&self, t: f64, opts: &Options) -> Result<f64> {
        if t == self.t0 {
            return Ok(0.0);
        }
        let (lo, hi, sign) = if t > self.t0 {
            (self.t0, t, 1.0)
        } else {
            (t, self.t0, -1.0)
        };
        let rate = &self.log_x_rate;
        let f = ode::FnField::new(1, |s, _y: &[f64], dy: &mut [f64]| {
            dy[0] = rate.eval(s)?;
            Ok(())
        });
        let tr = ode::integrate(&f, &[0.0], (lo, hi), opts)?;
        Ok(sign * tr.last_state()[0])
    }

    pub fn field(&self) -> CanonicalField<'_> {
        CanonicalField { sys: self }
    }

    /// Integrates `(φ, ψ, χ)` from `t1`; the returned trajectory carries
    /// `log X` as a fourth component.
    pub fn solve(&self, state: [f64; 3], span: (f64, f64), opts: &Options) -> Result<Trajectory> {
        let g = self.log_x(span.0, opts)?;
        Ok(ode::integrate(
            &self.field(),
            &[state[0], state[1], state[2], g],
            span,
            opts,
        )?)
    }
}

/// Canonical system on `(φ, ψ, χ, log X)`.
pub struct CanonicalField<'a> {
    sys: &'a CanonicalSystem,
}

impl VectorField for CanonicalField<'_> {
    fn dim(&self) -> usize {
        4
    }

    fn eval(&self, t: f64, s: &[f64], ds: &mut [f64]) -> Result<(), ExprError> {
        let v = self.sys.values(t, s[3])?;
        ds[0] = v.a * s[1];
        ds[1] = v.x * s[2];
        ds[2] = v.y * s[0] + v.z * s[1] + v.w * s[2];
        ds[3] = self.sys.log_x_rate.eval(t)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum ChiRule {
    /// `χ = (y' + a·y²)·φ / X`.
    Canonical { a: Expr },
    /// `χ = (y' + a12·y² + B·y − a21)·φ / a23`.
    System { a12: Expr, b: Expr, a21: Expr, a23: Expr },
}

/// A Riccati solution lifted to `(φ, ψ, χ)`.
///
/// The underlying trajectory integrates `(y, y', log φ/φ1[, log X])`.
#[derive(Debug, Clone)]
pub struct Lift {
    traj: Trajectory,
    phi1: f64,
    chi: ChiRule,
}

impl Lift {
    pub fn trajectory(&self) -> &Trajectory {
        &self.traj
    }

    pub fn t_start(&self) -> f64 {
        self.traj.t_start()
    }

    pub fn t_end(&self) -> f64 {
        self.traj.t_end()
    }

    pub fn sample(&self, t: f64) -> Result<[f64; 3]> {
        let s = self.traj.sample(t)?;
        let (y, v) = (s[0], s[1]);
        let phi = self.phi1 * s[2].exp();
        let chi = match &self.chi {
            ChiRule::Canonical { a } => {
                let a = a.eval(t)?;
                (v + a * y * y) * phi / s[3].exp()
            }
            ChiRule::System { a12, b, a21, a23 } => {
                let q = v + a12.eval(t)? * y * y + b.eval(t)? * y - a21.eval(t)?;
                q * phi / a23.eval(t)?
            }
        };
        Ok([phi, y * phi, chi])
    }

    /// `log |φ(t)/φ1|`, which stays accurate where `φ` itself overflows
    /// relative comparisons.
    pub fn log_phi_ratio(&self, t: f64) -> Result<f64> {
        Ok(self.traj.sample(t)?[2])
    }
}

fn lift_start(ytraj: &Trajectory, t1: f64, phi1: f64) -> Result<(f64, f64)> {
    if !(phi1 != 0.0 && phi1.is_finite()) {
        return Err(Error::precondition("φ(t1) ≠ 0", format!("phi1 = {phi1}")));
    }
    if ytraj.dim() != 2 {
        return Err(Error::InvalidArgument("trajectory must carry (y, y')".into()));
    }
    if !(t1 >= ytraj.t_start() && t1 < ytraj.t_end()) {
        return Err(Error::SpanMismatch(format!(
            "t1 = {t1} outside [{}, {})",
            ytraj.t_start(),
            ytraj.t_end()
        )));
    }
    let s = ytraj.sample(t1)?;
    Ok((s[0], s[1]))
}

/// Lifts a Riccati solution to the canonical system from `t1` to the end
/// of `ytraj`.
pub fn lift_riccati_solution(
    co: &RiccatiCoefficients,
    canon: &CanonicalSystem,
    ytraj: &Trajectory,
    t1: f64,
    phi1: f64,
    opts: &Options,
) -> Result<Lift> {
    let (y1, v1) = lift_start(ytraj, t1, phi1)?;
    let g1 = canon.log_x(t1, opts)?;
    let rate = canon.log_x_rate();
    let field = ode::FnField::new(4, |t, s: &[f64], ds: &mut [f64]| {
        let cv = co.at(t)?;
        ds[0] = s[1];
        ds[1] = cv.rhs(s[0], s[1]);
        ds[2] = cv.a * s[0];
        ds[3] = rate.eval(t)?;
        Ok(())
    });
    let traj = ode::integrate(&field, &[y1, v1, 0.0, g1], (t1, ytraj.t_end()), opts)?;
    Ok(Lift {
        traj,
        phi1,
        chi: ChiRule::Canonical { a: co.a().clone() },
    })
}

/// A 3×3 linear system `(φ, ψ, χ)' = A(t)·(φ, ψ, χ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSystem3 {
    pub a: [[Expr; 3]; 3],
}

impl LinearSystem3 {
    pub fn new(a: [[Expr; 3]; 3]) -> Self {
        LinearSystem3 { a }
    }

    /// Parses entries given row by row.
    pub fn parse(rows: [[&str; 3]; 3]) -> Result<Self, ExprError> {
        let mut a: [[Expr; 3]; 3] = Default::default();
        for j in 0..3 {
            for k in 0..3 {
                a[j][k] = Expr::parse(rows[j][k])?;
            }
        }
        Ok(LinearSystem3 { a })
    }

    /// Companion system of `φ''' + p·φ' + q·φ = 0`.
    pub fn companion(p: Expr, q: Expr) -> Self {
        let z = || Expr::from(0.0);
        LinearSystem3 {
            a: [[z(), 1.0.into(), z()], [z(), z(), 1.0.into()], [-q, -p, z()]],
        }
    }

    /// Entry `a_jk` with one-based indices.
    pub fn entry(&self, j: usize, k: usize) -> &Expr {
        &self.a[j - 1][k - 1]
    }

    pub fn matrix_at(&self, t: f64) -> Result<[[f64; 3]; 3], ExprError> {
        let mut m = [[0.0; 3]; 3];
        for (row, src) in m.iter_mut().zip(&self.a) {
            for (x, e) in row.iter_mut().zip(src) {
                *x = e.eval(t)?;
            }
        }
        Ok(m)
    }

    pub fn field(&self) -> LinearField<'_> {
        LinearField { sys: self }
    }

    pub fn solve(&self, state: [f64; 3], span: (f64, f64), opts: &Options) -> Result<Trajectory> {
        Ok(ode::integrate(&self.field(), &state, span, opts)?)
    }
}

pub struct LinearField<'a> {
    sys: &'a LinearSystem3,
}

impl VectorField for LinearField<'_> {
    fn dim(&self) -> usize {
        3
    }

    fn eval(&self, t: f64, s: &[f64], ds: &mut [f64]) -> Result<(), ExprError> {
        let m = self.sys.matrix_at(t)?;
        for j in 0..3 {
            ds[j] = m[j][0] * s[0] + m[j][1] * s[1] + m[j][2] * s[2];
        }
        Ok(())
    }
}

fn differentiable(e: &Expr, name: &str) -> Result<Expr> {
    e.derivative()
        .map_err(|err| Error::precondition(format!("{name} continuously differentiable"), err.to_string()))
}

/// Reduces a system with `a13 ≡ 0` and `a23 ≠ 0` to the Riccati equation
/// with `a = a12`, `b = A`, `c = C`, `d = F`, `e = E`.
pub fn reduce_system3(sys: &LinearSystem3, grid: &UniformGrid, exec: Execution) -> Result<RiccatiCoefficients> {
    let e = |j, k| sys.entry(j, k).clone();
    let (worst, at) = scan_max(grid, exec, |t| sys.entry(1, 3).eval(t).map(f64::abs))?;
    if worst > A13_TOL {
        return Err(Error::precondition(
            "a13 ≡ 0",
            format!("|a13| = {worst:.3e} at t = {at}"),
        ));
    }
    check_nonvanishing(sys.entry(2, 3), grid, exec, "a23").map_err(|err| match err {
        Error::Degenerate { t, .. } => Error::precondition("a23 ≠ 0", format!("a23 vanishes near t = {t}")),
        other => other,
    })?;
    let b = e(1, 1) - e(2, 2);
    let a23 = e(2, 3);
    let da23 = differentiable(&a23, "a23")?;
    differentiable(&e(1, 2), "a12")?;
    differentiable(&b, "B = a11 − a22")?;
    let q = |f: Expr| f / a23.clone();
    let dq = |f: Expr, name: &str| differentiable(&q(f), name);

    let s = Expr::from(2.0) * e(1, 1) - e(2, 2) - e(3, 3);
    let cap_a = s.clone() - da23 / a23.clone();
    let cap_c = e(1, 2) * s + a23.clone() * dq(e(1, 2), "a12/a23")?;
    let cap_f =
        b.clone() * (e(1, 1) - e(3, 3)) - a23.clone() * e(3, 2) - e(1, 2) * e(2, 1) + a23.clone() * dq(b, "B/a23")?;
    let cap_e = (e(3, 3) - e(1, 1)) * e(2, 1) - a23.clone() * e(3, 1) - a23.clone() * dq(e(2, 1), "a21/a23")?;
    Ok(RiccatiCoefficients::new(e(1, 2), cap_a, cap_c, cap_f, cap_e)?)
}

/// Removes `a13` by `ψ = η − λχ`; returns the system in `(φ, η, χ)` and `λ`.
pub fn eliminate_a13(sys: &LinearSystem3, grid: &UniformGrid, exec: Execution) -> Result<(LinearSystem3, Expr)> {
    let e = |j, k| sys.entry(j, k).clone();
    if sys.entry(1, 3).is_zero() {
        return Ok((sys.clone(), Expr::from(0.0)));
    }
    check_nonvanishing(sys.entry(1, 2), grid, exec, "a12")?;
    let lambda = e(1, 3) / e(1, 2);
    let dlambda = differentiable(&lambda, "λ = a13/a12")?;
    let l = || lambda.clone();
    let out = [
        [e(1, 1), e(1, 2), Expr::from(0.0)],
        [
            e(2, 1) + l() * e(3, 1),
            e(2, 2) + l() * e(3, 2),
            e(2, 3) + dlambda + l() * e(3, 3) - l() * e(2, 2) - l() * l() * e(3, 2),
        ],
        [e(3, 1), e(3, 2), e(3, 3) - l() * e(3, 2)],
    ];
    Ok((LinearSystem3 { a: out }, lambda))
}

/// Lifts a solution of the reduced Riccati equation back to the system.
pub fn lift_sys3_solution(
    sys: &LinearSystem3,
    co: &RiccatiCoefficients,
    ytraj: &Trajectory,
    t1: f64,
    phi1: f64,
    opts: &Options,
) -> Result<Lift> {
    let (y1, v1) = lift_start(ytraj, t1, phi1)?;
    let (a11, a12) = (sys.entry(1, 1), sys.entry(1, 2));
    let field = ode::FnField::new(3, |t, s: &[f64], ds: &mut [f64]| {
        let cv = co.at(t)?;
        ds[0] = s[1];
        ds[1] = cv.rhs(s[0], s[1]);
        ds[2] = a11.eval(t)? + a12.eval(t)? * s[0];
        Ok(())
    });
    let traj = ode::integrate(&field, &[y1, v1, 0.0], (t1, ytraj.t_end()), opts)?;
    Ok(Lift {
        traj,
        phi1,
        chi: ChiRule::System {
            a12: a12.clone(),
            b: sys.entry(1, 1).clone() - sys.entry(2, 2).clone(),
            a21: sys.entry(2, 1).clone(),
            a23: sys.entry(2, 3).clone(),
        },
    })
}

/// Initial Riccati data `(y, y')` for a system state with `φ ≠ 0`.
pub fn sys3_state_to_riccati(sys: &LinearSystem3, t: f64, state: [f64; 3]) -> Result<(f64, f64)> {
    let [phi, psi, chi] = state;
    if phi == 0.0 {
        return Err(Error::precondition("φ(t1) ≠ 0", "phi = 0"));
    }
    let m = sys.matrix_at(t)?;
    let y = psi / phi;
    // χ/φ = (y' + a12 y² + B y − a21)/a23
    let dy = m[1][2] * chi / phi - m[0][1] * y * y - (m[0][0] - m[1][1]) * y + m[1][0];
    Ok((y, dy))
}

/// System state `(φ1, y·φ1, χ)` for Riccati data `(y, y')`.
pub fn riccati_to_sys3_state(sys: &LinearSystem3, t: f64, y: f64, dy: f64, phi1: f64) -> Result<[f64; 3]> {
    let m = sys.matrix_at(t)?;
    let q = dy + m[0][1] * y * y + (m[0][0] - m[1][1]) * y - m[1][0];
    Ok([phi1, y * phi1, q * phi1 / m[1][2]])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(a: f64, b: f64) -> UniformGrid {
        UniformGrid::new(a, b, 401).unwrap()
    }

    #[test]
    fn trivial_canonical_system() {
        let co = RiccatiCoefficients::constant(1.0, 0.0, 0.0, 0.0, 0.0);
        let cs = riccati_to_canonical(&co, 0.0, &grid(0.0, 5.0), Execution::Sequential).unwrap();
        let v = cs.values(2.0, cs.log_x(2.0, &Options::default()).unwrap()).unwrap();
        assert_eq!((v.x, v.y, v.z, v.w), (1.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn linear_term_enters_z_with_minus_sign() {
        let co = RiccatiCoefficients::constant(1.0, 0.0, 0.0, 1.0, 0.0);
        let cs = riccati_to_canonical(&co, 0.0, &grid(0.0, 5.0), Execution::Sequential).unwrap();
        let v = cs.values(1.0, 0.0).unwrap();
        assert_eq!((v.x, v.y, v.z, v.w), (1.0, 0.0, -1.0, 0.0));
    }

    #[test]
    fn incompatible_c_is_rejected() {
        let co = RiccatiCoefficients::constant(1.0, 0.0, 3.0, 1.0, 0.0);
        let err = riccati_to_canonical(&co, 0.0, &grid(0.0, 1.0), Execution::Sequential).unwrap_err();
        assert!(matches!(err, Error::Precondition { .. }), "{err}");
        let co = RiccatiCoefficients::parse("t", "0", "1", "0", "0").unwrap();
        let err = riccati_to_canonical(&co, 0.0, &grid(-1.0, 1.0), Execution::Sequential).unwrap_err();
        assert!(matches!(err, Error::Degenerate { .. }), "{err}");
    }

    #[test]
    fn rebuilt_coefficients_match() {
        // c = a' + a b
        let co =
            RiccatiCoefficients::parse("2 + sin(t)", "0.3*t", "cos(t) + (2 + sin(t))*0.3*t", "t^2", "exp(-t)").unwrap();
        let cs = riccati_to_canonical(&co, 0.0, &grid(0.0, 2.0), Execution::Parallel).unwrap();
        let opts = Options::with_tol(1e-12, 1e-12);
        for t in [0.0, 0.5, 1.3, 2.0] {
            let cv = co.at(t).unwrap();
            let r = cs.rebuilt(t, cs.log_x(t, &opts).unwrap()).unwrap();
            for (got, want) in r.iter().zip([cv.b, cv.c, cv.d, cv.e]) {
                assert!((got - want).abs() < 1e-8, "{t}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn lift_of_closed_form() {
        let co = RiccatiCoefficients::constant(1.0, 0.0, 0.0, 0.0, 0.0);
        let cs = riccati_to_canonical(&co, 0.0, &grid(0.0, 3.0), Execution::Sequential).unwrap();
        let opts = Options::with_tol(1e-11, 1e-12);
        let y = co.solve(0.0, 2.0, (0.0, 3.0), &opts).unwrap();
        let lift = lift_riccati_solution(&co, &cs, &y, 0.0, 1.0, &opts).unwrap();
        for t in [0.0, 0.7, 1.5, 3.0] {
            let [phi, psi, chi] = lift.sample(t).unwrap();
            assert!((phi - (1.0 + t * t)).abs() < 1e-8);
            assert!((psi - 2.0 * t).abs() < 1e-8);
            assert!((chi - 2.0).abs() < 1e-8);
        }
        assert!(lift_riccati_solution(&co, &cs, &y, 0.0, 0.0, &opts).is_err());
    }

    #[test]
    fn companion_reduces_to_expected_coefficients() {
        let sys = LinearSystem3::companion(Expr::parse("sin(t)").unwrap(), Expr::parse("t").unwrap());
        let co = reduce_system3(&sys, &grid(0.0, 3.0), Execution::Sequential).unwrap();
        for t in [0.0, 1.0, 2.5] {
            let cv = co.at(t).unwrap();
            assert_eq!(cv.a, 1.0);
            assert!(cv.b.abs() < 1e-12 && cv.c.abs() < 1e-12);
            assert!((cv.d - t.sin()).abs() < 1e-12);
            assert!((cv.e - t).abs() < 1e-12);
        }
    }

    #[test]
    fn reduction_preconditions() {
        let mut sys = LinearSystem3::companion(0.0.into(), 0.0.into());
        sys.a[1][2] = Expr::Var;
        let err = reduce_system3(&sys, &grid(-1.0, 1.0), Execution::Sequential).unwrap_err();
        assert!(
            matches!(&err, Error::Precondition { condition, .. } if condition.contains("a23")),
            "{err}"
        );
        let mut sys = LinearSystem3::companion(0.0.into(), 0.0.into());
        sys.a[0][2] = Expr::parse("1e-3*t").unwrap();
        let err = reduce_system3(&sys, &grid(0.0, 1.0), Execution::Sequential).unwrap_err();
        assert!(
            matches!(&err, Error::Precondition { condition, .. } if condition.contains("a13")),
            "{err}"
        );
        let mut sys = LinearSystem3::companion(0.0.into(), 0.0.into());
        sys.a[0][1] = Expr::parse("abs(t) + 1").unwrap();
        assert!(reduce_system3(&sys, &grid(0.0, 1.0), Execution::Sequential).is_err());
    }

    #[test]
    fn elimination_zeroes_a13() {
        let sys = LinearSystem3::parse([["0.1", "1", "2"], ["0", "0.2", "1"], ["-0.3", "0.5", "0"]]).unwrap();
        let (out, lambda) = eliminate_a13(&sys, &grid(0.0, 1.0), Execution::Sequential).unwrap();
        assert_eq!(lambda.eval(0.0).unwrap(), 2.0);
        assert!(out.entry(1, 3).is_zero());
        let (same, l0) = eliminate_a13(&out, &grid(0.0, 1.0), Execution::Sequential).unwrap();
        assert_eq!(same, out);
        assert!(l0.is_zero());
    }

    #[test]
    fn state_mapping_round_trip() {
        let sys = LinearSystem3::parse([["0.1", "1+t", "0"], ["t", "0.2", "2"], ["-0.3", "0.5", "t"]]).unwrap();
        let s = riccati_to_sys3_state(&sys, 0.4, 0.3, -1.2, 2.0).unwrap();
        let (y, dy) = sys3_state_to_riccati(&sys, 0.4, s).unwrap();
        assert!((y - 0.3).abs() < 1e-15 && (dy + 1.2).abs() < 1e-14);
    }
}
