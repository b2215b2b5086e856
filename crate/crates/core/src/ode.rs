//! Dormand–Prince 5(4) integrator with dense output and escape classification.
//!
//! Steps are controlled on the embedded fourth-order estimate with the usual
//! mixed tolerance `atol + rtol·|y|`. Each accepted step stores the five
//! coefficient vectors of the fourth-order continuous extension, so a
//! [`Trajectory`] can be sampled anywhere in its span.
//!
//! Integration stops early in two distinct ways. A state whose norm exceeds
//! `escape_threshold`, or a step-size collapse accompanied by steady norm
//! growth, is reported as [`Status::Escaped`]. A collapse without growth, or
//! running out of steps, is [`Status::Stalled`]: a numerical failure, not a
//! statement about the solution.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::ExprError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("invalid span [{start}, {end}]")]
    InvalidSpan { start: f64, end: f64 },
    #[error("tolerances must be positive (rtol = {rtol}, atol = {atol})")]
    InvalidTolerance { rtol: f64, atol: f64 },
    #[error("initial state has length {got}, field dimension is {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("t = {t} outside trajectory span [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },
    #[error("initial state is not finite")]
    NonFiniteInitial,
    #[error("vector field: {0}")]
    Field(#[from] ExprError),
}

/// Right-hand side `dy = F(t, y)` of a first-order system.
pub trait VectorField: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), ExprError>;
}

/// Adapts a closure into a [`VectorField`].
pub struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F> FnField<F>
where
    F: Fn(f64, &[f64], &mut [f64]) -> Result<(), ExprError> + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        FnField { dim, f }
    }
}

impl<F> VectorField for FnField<F>
where
    F: Fn(f64, &[f64], &mut [f64]) -> Result<(), ExprError> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), ExprError> {
        (self.f)(t, y, dy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Options {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on the step size; `None` means the span length.
    pub h_max: Option<f64>,
    /// Initial step; `None` picks one from the field.
    pub h_init: Option<f64>,
    pub escape_threshold: f64,
    /// Smallest admissible step relative to the span length.
    pub h_min_rel: f64,
    pub max_steps: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            rtol: 1e-8,
            atol: 1e-10,
            h_max: None,
            h_init: None,
            escape_threshold: 1e8,
            h_min_rel: 1e-12,
            max_steps: 1_000_000,
        }
    }
}

impl Options {
    pub fn with_tol(rtol: f64, atol: f64) -> Self {
        Options {
            rtol,
            atol,
            ..Options::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Status {
    Completed,
    /// `t_est` is the last accepted mesh point.
    Escaped {
        t_est: f64,
    },
    Stalled {
        t: f64,
    },
}

/// Dense numerical solution. Immutable once returned by [`integrate`].
#[derive(Debug, Clone)]
pub struct Trajectory {
    dim: usize,
    t: Vec<f64>,
    /// States, `dim` values per mesh point.
    y: Vec<f64>,
    /// Continuous-extension coefficients, `5·dim` values per step.
    cont: Vec<f64>,
    status: Status,
    requested_end: f64,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn mesh(&self) -> &[f64] {
        &self.t
    }

    pub fn steps(&self) -> usize {
        self.t.len() - 1
    }

    pub fn t_start(&self) -> f64 {
        self.t[0]
    }

    /// Right end of the covered span (the last accepted mesh point).
    pub fn t_end(&self) -> f64 {
        *self.t.last().expect("trajectory has at least one point")
    }

    pub fn requested_end(&self) -> f64 {
        self.requested_end
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.y[i * self.dim..(i + 1) * self.dim]
    }

    pub fn last_state(&self) -> &[f64] {
        self.state(self.t.len() - 1)
    }

    pub fn is_completed(&self) -> bool {
        self.status == Status::Completed
    }

    /// Dense-output value at `t`; stored states are returned exactly at mesh
    /// points.
    pub fn sample(&self, t: f64) -> Result<Vec<f64>, OdeError> {
        let mut out = vec![0.0; self.dim];
        self.sample_into(t, &mut out)?;
        Ok(out)
    }

    pub fn sample_into(&self, t: f64, out: &mut [f64]) -> Result<(), OdeError> {
        let (start, end) = (self.t_start(), self.t_end());
        if !(t >= start && t <= end) {
            return Err(OdeError::OutOfRange { t, start, end });
        }
        let i = self.t.partition_point(|&m| m <= t);
        // i is the first mesh point strictly greater than t.
        if i == 0 || self.t[i - 1] == t {
            let k = i.saturating_sub(1);
            out.copy_from_slice(self.state(k));
            return Ok(());
        }
        let step = i - 1;
        let (t0, t1) = (self.t[step], self.t[step + 1]);
        let s = (t - t0) / (t1 - t0);
        let s1 = 1.0 - s;
        let n = self.dim;
        let c = &self.cont[step * 5 * n..(step + 1) * 5 * n];
        for j in 0..n {
            let (c0, c1, c2, c3, c4) = (c[j], c[n + j], c[2 * n + j], c[3 * n + j], c[4 * n + j]);
            out[j] = c0 + s * (c1 + s1 * (c2 + s * (c3 + s1 * c4)));
        }
        Ok(())
    }

    /// Component `j` at `t`.
    pub fn component(&self, t: f64, j: usize) -> Result<f64, OdeError> {
        Ok(self.sample(t)?[j])
    }

    fn norm(&self, i: usize) -> f64 {
        norm(self.state(i))
    }
}

fn norm(y: &[f64]) -> f64 {
    y.iter().map(|v| v * v).sum::<f64>().sqrt()
}

// Dormand–Prince tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const GROWTH_WINDOW: usize = 5;

struct Stages {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    y_new: Vec<f64>,
}

impl Stages {
    fn new(n: usize) -> Self {
        Stages {
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
            y_new: vec![0.0; n],
        }
    }
}

/// Solves `y' = field(t, y)`, `y(span.0) = y0`, up to `span.1`.
///
/// Errors are reserved for bad input and for coefficient evaluation failures
/// inside the field. Early termination is reported through the trajectory
/// status.
pub fn integrate<F: VectorField + ?Sized>(
    field: &F,
    y0: &[f64],
    span: (f64, f64),
    opts: &Options,
) -> Result<Trajectory, OdeError> {
    let (ta, tb) = span;
    if !(ta.is_finite() && tb.is_finite() && ta < tb) {
        return Err(OdeError::InvalidSpan { start: ta, end: tb });
    }
    if !(opts.rtol > 0.0 && opts.atol > 0.0) {
        return Err(OdeError::InvalidTolerance {
            rtol: opts.rtol,
            atol: opts.atol,
        });
    }
    let n = field.dim();
    if y0.len() != n {
        return Err(OdeError::Dimension {
            expected: n,
            got: y0.len(),
        });
    }
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(OdeError::NonFiniteInitial);
    }

    let span_len = tb - ta;
    let h_min = opts.h_min_rel * span_len;
    let h_max = opts.h_max.unwrap_or(span_len).min(span_len);

    let mut traj = Trajectory {
        dim: n,
        t: vec![ta],
        y: y0.to_vec(),
        cont: Vec::new(),
        status: Status::Completed,
        requested_end: tb,
    };
    if norm(y0) > opts.escape_threshold {
        traj.status = Status::Escaped { t_est: ta };
        return Ok(traj);
    }

    let mut st = Stages::new(n);
    let mut t = ta;
    let mut y = y0.to_vec();
    field.eval(t, &y, &mut st.k[0])?;
    let mut h = match opts.h_init {
        Some(h) => h.min(h_max),
        None => initial_step(field, t, &y, &st.k[0], opts, h_max)?,
    };
    let mut rejected_last = false;
    let mut err_scratch = vec![0.0; n];

    loop {
        if t >= tb {
            return Ok(traj);
        }
        if traj.steps() >= opts.max_steps {
            traj.status = Status::Stalled { t };
            return Ok(traj);
        }
        let last = t + h >= tb || tb - (t + h) < h_min;
        let h_step = if last { tb - t } else { h };

        let err = try_step(field, t, &y, h_step, &mut st, opts, &mut err_scratch)?;
        let accept = err.is_finite() && err <= 1.0;
        if accept {
            let t_new = if last { tb } else { t + h_step };
            push_step(&mut traj, &y, h_step, &st);
            traj.t.push(t_new);
            traj.y.extend_from_slice(&st.y_new);
            t = t_new;
            y.copy_from_slice(&st.y_new);
            let k7 = st.k[6].clone();
            st.k[0].copy_from_slice(&k7);

            if norm(&y) > opts.escape_threshold {
                traj.status = Status::Escaped { t_est: t };
                return Ok(traj);
            }
        }

        let fac = if err.is_finite() {
            (SAFETY * err.max(1e-16).powf(-0.2)).clamp(FAC_MIN, FAC_MAX)
        } else {
            FAC_MIN
        };
        let fac = if rejected_last && accept { fac.min(1.0) } else { fac };
        rejected_last = !accept;
        h = (h_step * fac).min(h_max);

        if t < tb && h < h_min {
            traj.status = if norm_growing(&traj) {
                Status::Escaped { t_est: t }
            } else {
                Status::Stalled { t }
            };
            return Ok(traj);
        }
    }
}

/// Monotone norm growth over the last accepted steps.
fn norm_growing(traj: &Trajectory) -> bool {
    let k = traj.t.len();
    if k <= GROWTH_WINDOW {
        return false;
    }
    (k - GROWTH_WINDOW..k).all(|i| traj.norm(i) > traj.norm(i - 1))
}

fn initial_step<F: VectorField + ?Sized>(
    field: &F,
    t: f64,
    y: &[f64],
    f0: &[f64],
    opts: &Options,
    h_max: f64,
) -> Result<f64, OdeError> {
    let n = y.len();
    let sc: Vec<f64> = y.iter().map(|v| opts.atol + opts.rtol * v.abs()).collect();
    let rms = |v: &[f64]| (v.iter().zip(&sc).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / n as f64).sqrt();
    let d0 = rms(y);
    let d1 = rms(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(h_max);
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + h0 * b).collect();
    let mut f1 = vec![0.0; n];
    field.eval(t + h0, &y1, &mut f1)?;
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    let h = (100.0 * h0).min(h1).min(h_max);
    Ok(if h.is_finite() && h > 0.0 {
        h
    } else {
        1e-6_f64.min(h_max)
    })
}

/// Computes stages 2..7 and the new state; returns the scaled error norm
/// (infinite if anything overflowed).
fn try_step<F: VectorField + ?Sized>(
    field: &F,
    t: f64,
    y: &[f64],
    h: f64,
    st: &mut Stages,
    opts: &Options,
    err: &mut [f64],
) -> Result<f64, OdeError> {
    let n = y.len();
    let Stages { k, tmp, y_new } = st;
    macro_rules! stage {
        ($dst:expr, $c:expr, $( ($a:expr, $src:expr) ),+ ) => {{
            for j in 0..n {
                tmp[j] = y[j] + h * (0.0 $( + $a * k[$src][j] )+);
            }
            let (before, after) = k.split_at_mut($dst);
            let _ = before;
            field.eval(t + $c * h, tmp, &mut after[0])?;
        }};
    }
    stage!(1, C2, (A21, 0));
    stage!(2, C3, (A31, 0), (A32, 1));
    stage!(3, C4, (A41, 0), (A42, 1), (A43, 2));
    stage!(4, C5, (A51, 0), (A52, 1), (A53, 2), (A54, 3));
    stage!(5, 1.0, (A61, 0), (A62, 1), (A63, 2), (A64, 3), (A65, 4));
    for j in 0..n {
        y_new[j] = y[j] + h * (B1 * k[0][j] + B3 * k[2][j] + B4 * k[3][j] + B5 * k[4][j] + B6 * k[5][j]);
    }
    if y_new.iter().any(|v| !v.is_finite()) {
        return Ok(f64::INFINITY);
    }
    field.eval(t + h, y_new, &mut k[6])?;
    let mut acc = 0.0;
    for j in 0..n {
        err[j] = h * (E1 * k[0][j] + E3 * k[2][j] + E4 * k[3][j] + E5 * k[4][j] + E6 * k[5][j] + E7 * k[6][j]);
        let sc = opts.atol + opts.rtol * y[j].abs().max(y_new[j].abs());
        acc += (err[j] / sc).powi(2);
    }
    let e = (acc / n as f64).sqrt();
    Ok(if e.is_finite() { e } else { f64::INFINITY })
}

fn push_step(traj: &mut Trajectory, y: &[f64], h: f64, st: &Stages) {
    let n = y.len();
    let k = &st.k;
    let base = traj.cont.len();
    traj.cont.resize(base + 5 * n, 0.0);
    let c = &mut traj.cont[base..];
    for j in 0..n {
        let ydiff = st.y_new[j] - y[j];
        let bspl = h * k[0][j] - ydiff;
        c[j] = y[j];
        c[n + j] = ydiff;
        c[2 * n + j] = bspl;
        c[3 * n + j] = ydiff - h * k[6][j] - bspl;
        c[4 * n + j] = h * (D1 * k[0][j] + D3 * k[2][j] + D4 * k[3][j] + D5 * k[4][j] + D6 * k[5][j] + D7 * k[6][j]);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EscapeClass {
    FiniteEscape,
    HorizonReached,
    Stalled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EscapeReport {
    pub t_est: f64,
    pub norm_at_last_step: f64,
    pub classification: EscapeClass,
}

/// Classifies how `traj` ended relative to `horizon`.
///
/// A finite escape is only reported when the norm grew monotonically over
/// the last five accepted steps; an escaped status without that growth is
/// treated as a stall.
pub fn detect_escape(traj: &Trajectory, horizon: f64) -> EscapeReport {
    let last = traj.t.len() - 1;
    let norm_at_last_step = traj.norm(last);
    let t_est = traj.t_end().min(horizon);
    let classification = match traj.status {
        Status::Completed => EscapeClass::HorizonReached,
        _ if traj.t_end() >= horizon => EscapeClass::HorizonReached,
        Status::Escaped { .. } if norm_growing(traj) => EscapeClass::FiniteEscape,
        Status::Escaped { .. } | Status::Stalled { .. } => EscapeClass::Stalled,
    };
    EscapeReport {
        t_est,
        norm_at_last_step,
        classification,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[allow(clippy::type_complexity)]
    fn scalar<G>(g: G) -> FnField<impl Fn(f64, &[f64], &mut [f64]) -> Result<(), ExprError> + Sync>
    where
        G: Fn(f64, f64) -> f64 + Sync,
    {
        FnField::new(1, move |t, y: &[f64], dy: &mut [f64]| {
            dy[0] = g(t, y[0]);
            Ok(())
        })
    }

    #[test]
    fn exponential_growth() {
        let tr = integrate(&scalar(|_, y| y), &[1.0], (0.0, 1.0), &Options::default()).unwrap();
        assert!(tr.is_completed());
        assert!((tr.last_state()[0] - std::f64::consts::E).abs() < 1e-8);
        assert!((tr.sample(0.5).unwrap()[0] - 0.5f64.exp()).abs() < 1e-7);
    }

    #[test]
    fn blow_up_is_escape() {
        let tr = integrate(&scalar(|_, y| y * y), &[1.0], (0.0, 2.0), &Options::default()).unwrap();
        match tr.status() {
            Status::Escaped { t_est } => assert!((0.99..=1.01).contains(&t_est)),
            s => panic!("{s:?}"),
        }
        let rep = detect_escape(&tr, 2.0);
        assert_eq!(rep.classification, EscapeClass::FiniteEscape);
        assert!(rep.norm_at_last_step > 1e8);
    }

    #[test]
    fn zero_field_is_constant() {
        let tr = integrate(&scalar(|_, _| 0.0), &[3.5], (0.0, 10.0), &Options::default()).unwrap();
        assert!(tr.is_completed());
        for t in [0.0, 2.5, 7.7, 10.0] {
            assert_eq!(tr.sample(t).unwrap()[0], 3.5);
        }
    }

    #[test]
    fn decay_reaches_horizon() {
        let tr = integrate(&scalar(|_, y| -y), &[1.0], (0.0, 10.0), &Options::default()).unwrap();
        let rep = detect_escape(&tr, 10.0);
        assert_eq!(rep.classification, EscapeClass::HorizonReached);
        assert_eq!(rep.t_est, 10.0);
    }

    #[test]
    fn mesh_points_are_exact_and_out_of_range_errors() {
        let tr = integrate(&scalar(|t, y| t.cos() * y), &[1.0], (0.0, 3.0), &Options::default()).unwrap();
        for i in 0..tr.mesh().len() {
            assert_eq!(tr.sample(tr.mesh()[i]).unwrap()[0], tr.state(i)[0]);
        }
        assert!(matches!(tr.sample(3.1), Err(OdeError::OutOfRange { .. })));
        assert!(matches!(tr.sample(-1e-9), Err(OdeError::OutOfRange { .. })));
        assert!(tr.sample(f64::NAN).is_err());
    }

    #[test]
    fn input_validation() {
        let f = scalar(|_, y| y);
        assert!(matches!(
            integrate(&f, &[1.0], (1.0, 0.0), &Options::default()),
            Err(OdeError::InvalidSpan { .. })
        ));
        assert!(matches!(
            integrate(&f, &[1.0], (0.0, 1.0), &Options::with_tol(0.0, 1e-9)),
            Err(OdeError::InvalidTolerance { .. })
        ));
        assert!(matches!(
            integrate(&f, &[1.0, 2.0], (0.0, 1.0), &Options::default()),
            Err(OdeError::Dimension { .. })
        ));
    }

    #[test]
    fn field_errors_propagate() {
        let f = FnField::new(1, |t, _y: &[f64], dy: &mut [f64]| {
            if t > 0.5 {
                return Err(ExprError::Domain {
                    node: "log(0.5 - t)".into(),
                    t,
                });
            }
            dy[0] = 1.0;
            Ok(())
        });
        assert!(matches!(
            integrate(&f, &[0.0], (0.0, 1.0), &Options::default()),
            Err(OdeError::Field(_))
        ));
    }

    #[test]
    fn fixed_steps_show_fifth_order() {
        let f = scalar(|_, y| y);
        let err_at = |h: f64| {
            let opts = Options {
                rtol: 1e-3,
                atol: 1e-3,
                h_max: Some(h),
                h_init: Some(h),
                ..Options::default()
            };
            let tr = integrate(&f, &[1.0], (0.0, 1.0), &opts).unwrap();
            assert_eq!(tr.steps(), (1.0 / h).round() as usize);
            (tr.last_state()[0] - std::f64::consts::E).abs()
        };
        let (e1, e2) = (err_at(0.1), err_at(0.05));
        assert!(e1 / e2 >= 8.0, "{e1} {e2}");
    }

    #[test]
    fn stiff_problem_stalls_not_escapes() {
        // Bounded but violently oscillating: the controller cannot keep up
        // once the step floor is high.
        let f = scalar(|t, y| -1e9 * (y - (1e4 * t).sin()));
        let opts = Options {
            h_min_rel: 1e-6,
            ..Options::default()
        };
        let tr = integrate(&f, &[0.0], (0.0, 1.0), &opts).unwrap();
        assert!(matches!(tr.status(), Status::Stalled { .. }), "{:?}", tr.status());
        assert_eq!(detect_escape(&tr, 1.0).classification, EscapeClass::Stalled);
    }
}
