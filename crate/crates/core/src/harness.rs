//! Empirical checks of certified conclusions, and brute-force oracles.

use serde::{Deserialize, Serialize};

use crate::criteria::{Certificate, Reference, TheoremId, Verdict};
use crate::error::{Error, Result};
use crate::grid::UniformGrid;
use crate::ode::{detect_escape, EscapeClass, Options, Status, Trajectory};
use crate::par::{map_range, try_map_range, Execution};
use crate::quad::cumulative_simpson;
use crate::riccati::{CoeffValues, RiccatiCoefficients, Side};
use crate::transform::{lift_sys3_solution, riccati_to_sys3_state, LinearSystem3};

/// Uniform check points per trajectory, on top of the integrator mesh.
pub const CHECK_POINTS: usize = 2001;
/// Slack on the initial ν constraints of sampled ICs.
pub const IC_SLACK: f64 = 1e-12;
/// Relative agreement required between the direct and lifted `φ`.
pub const LIFT_REL_TOL: f64 = 1e-6;

/// Radical inverse of `i` in `base`; the Halton sequence component.
fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

fn lerp_interval(lo: f64, hi: f64, u: f64) -> f64 {
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => lo + (hi - lo) * u,
        (true, false) => lo + u,
        (false, true) => hi - u,
        (false, false) => u - 0.5,
    }
}

/// Deterministic low-discrepancy ICs covering the admissible region.
///
/// Uses the 2-D Halton sequence: the first coordinate places `y0`, the
/// second places `y0'` inside the admissible slope interval at that `y0`.
pub fn sample_admissible_ics(cert: &Certificate, count: usize) -> Result<Vec<(f64, f64)>> {
    if cert.verdict != Verdict::Certified {
        return Err(Error::InvalidArgument(format!(
            "{} certificate is {:?}, not certified",
            cert.theorem, cert.verdict
        )));
    }
    let region = cert
        .admissible
        .as_ref()
        .ok_or_else(|| Error::EmptyRegion(format!("{} has no admissible region", cert.theorem)))?;
    let co = context_co(cert)?;
    let mut out = Vec::with_capacity(count);
    let mut i = 1u64;
    while out.len() < count {
        if i > 100 * count as u64 + 100 {
            return Err(Error::EmptyRegion(format!(
                "found {} of {count} admissible ICs for {}",
                out.len(),
                cert.theorem
            )));
        }
        let y0 = lerp_interval(region.y_lo, region.y_hi, radical_inverse(i, 2));
        let u = radical_inverse(i, 3);
        i += 1;
        let Some((lo, hi)) = region.dy_interval(co, y0)? else {
            continue;
        };
        let dy0 = lerp_interval(lo, hi, u).clamp(lo, hi);
        let cv = co.at(region.t0)?;
        let mut ok = true;
        for c in &region.nu_conditions {
            ok &= c.margin(&cv, y0, dy0)? >= -IC_SLACK;
        }
        if ok {
            out.push((y0, dy0));
        }
    }
    Ok(out)
}

fn context_co(cert: &Certificate) -> Result<&RiccatiCoefficients> {
    cert.coefficients()
        .ok_or_else(|| Error::InvalidArgument("certificate has no runtime context".into()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyParams {
    pub horizon: f64,
    pub ode: Options,
    pub check_points: usize,
    #[serde(skip)]
    pub exec: Execution,
}

impl VerifyParams {
    pub fn new(horizon: f64, ode: Options) -> Self {
        VerifyParams {
            horizon,
            ode,
            check_points: CHECK_POINTS,
            exec: Execution::default(),
        }
    }

    /// `1e-6 + 10·(integration tolerance)`.
    pub fn slack(&self) -> f64 {
        1e-6 + 10.0 * self.ode.rtol.max(self.ode.atol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IcOutcome {
    BoundsHeld { min_margin: f64 },
    BoundsViolated { t: f64, margin: f64 },
    Escaped { t_est: f64 },
    Stalled { t: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NuOutcome {
    pub label: String,
    pub min_margin: f64,
    pub first_violation: Option<f64>,
    pub held: bool,
}

/// Direct integration of the linear system against the lifted solution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhiOutcome {
    pub min_phi: f64,
    pub argmin: f64,
    pub lift_max_rel_err: f64,
    pub held: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IcReport {
    pub y0: f64,
    pub dy0: f64,
    /// Non-admissible ICs are reported but excluded from the verdict.
    pub admissible: bool,
    pub outcome: IcOutcome,
    pub nu: Vec<NuOutcome>,
    pub phi: Option<PhiOutcome>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub theorem: TheoremId,
    pub strategy: Option<TheoremId>,
    pub horizon: f64,
    pub slack: f64,
    pub ics: Vec<IcReport>,
    pub pass: bool,
}

impl VerificationReport {
    /// Smallest bound margin over ICs that reached the horizon.
    pub fn min_bound_margin(&self) -> f64 {
        self.ics
            .iter()
            .filter(|r| r.admissible)
            .map(|r| match r.outcome {
                IcOutcome::BoundsHeld { min_margin } => min_margin,
                IcOutcome::BoundsViolated { margin, .. } => margin,
                _ => f64::NEG_INFINITY,
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn min_phi(&self) -> Option<f64> {
        self.ics
            .iter()
            .filter_map(|r| r.phi.as_ref().map(|p| p.min_phi))
            .reduce(f64::min)
    }
}

/// Sorted check times: the integrator mesh plus a uniform grid.
fn check_times(traj: &Trajectory, t0: f64, t_end: f64, points: usize) -> Result<Vec<f64>> {
    let mut ts: Vec<f64> = traj.mesh().iter().copied().filter(|&t| t >= t0 && t <= t_end).collect();
    if t_end > t0 {
        ts.extend(UniformGrid::new(t0, t_end, points.max(2))?.nodes());
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    Ok(ts)
}

/// Integrates from every IC and checks the certified conclusions.
///
/// Bounds and ν signs are asserted with [`VerifyParams::slack`]. Escape
/// before the horizon contradicts the global-existence claim. For a
/// non-oscillation certificate the gate is `φ > 0` for the directly
/// integrated system and agreement with the lift; the Riccati bounds of the
/// winning criterion are still reported.
pub fn verify_conclusion(cert: &Certificate, ics: &[(f64, f64)], params: &VerifyParams) -> Result<VerificationReport> {
    if cert.verdict != Verdict::Certified {
        return Err(Error::InvalidArgument(format!(
            "{} certificate is {:?}, not certified",
            cert.theorem, cert.verdict
        )));
    }
    let ctx = cert
        .context
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("certificate has no runtime context".into()))?;
    let region = cert
        .admissible
        .as_ref()
        .ok_or_else(|| Error::EmptyRegion(cert.theorem.to_string()))?;
    let concl = cert
        .conclusion
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument(format!("{} states no conclusion", cert.theorem)))?;
    let slack = params.slack();
    let t0 = region.t0;
    let system = if cert.theorem == TheoremId::T5_1 {
        Some(
            ctx.system
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("missing linear system".into()))?,
        )
    } else {
        None
    };
    // Comparison curves from integration are only known on the certified span.
    let refs_end = [&concl.lower, &concl.upper]
        .into_iter()
        .flatten()
        .chain(concl.nu_conditions.iter().map(|c| &c.reference))
        .map(Reference::t_end)
        .fold(params.horizon, f64::min);

    let reports = try_map_range(params.exec, ics.len(), |i| -> Result<IcReport> {
        let (y0, dy0) = ics[i];
        let admissible = region.contains(&ctx.co, y0, dy0, IC_SLACK)?;
        let traj = ctx.co.solve(y0, dy0, (t0, params.horizon), &params.ode)?;
        let reached = traj.t_end();
        let t_check = reached.min(refs_end);
        let times = check_times(&traj, t0, t_check, params.check_points)?;

        let mut bound_min = f64::INFINITY;
        let mut violation: Option<(f64, f64)> = None;
        let mut nu: Vec<NuOutcome> = concl
            .nu_conditions
            .iter()
            .map(|c| NuOutcome {
                label: c.label.clone(),
                min_margin: f64::INFINITY,
                first_violation: None,
                held: true,
            })
            .collect();
        let mut buf = [0.0; 2];
        for &t in &times {
            traj.sample_into(t, &mut buf)?;
            let (y, dy) = (buf[0], buf[1]);
            let mut m = f64::INFINITY;
            if let Some(lo) = &concl.lower {
                m = m.min(y - lo.eval(t)?.0);
            }
            if let Some(hi) = &concl.upper {
                m = m.min(hi.eval(t)?.0 - y);
            }
            if m < bound_min {
                bound_min = m;
            }
            if violation.is_none() && !(m >= -slack) {
                violation = Some((t, m));
            }
            let cv = ctx.co.at(t)?;
            for (c, o) in concl.nu_conditions.iter().zip(nu.iter_mut()) {
                let margin = c.margin(&cv, y, dy)?;
                o.min_margin = o.min_margin.min(margin);
                if o.first_violation.is_none() && !(margin >= -slack) {
                    o.first_violation = Some(t);
                    o.held = false;
                }
            }
        }

        let outcome = match traj.status() {
            Status::Completed => match violation {
                None => IcOutcome::BoundsHeld { min_margin: bound_min },
                Some((t, _)) => IcOutcome::BoundsViolated { t, margin: bound_min },
            },
            _ => match detect_escape(&traj, params.horizon).classification {
                EscapeClass::FiniteEscape => IcOutcome::Escaped {
                    t_est: detect_escape(&traj, params.horizon).t_est,
                },
                _ => IcOutcome::Stalled { t: reached },
            },
        };

        let phi = match system {
            Some(sys) if traj.is_completed() => Some(phi_check(sys, &ctx.co, &traj, t0, params)?),
            Some(_) => None,
            None => None,
        };
        let pass = match &phi {
            Some(p) => p.held,
            None if system.is_some() => false,
            None => matches!(outcome, IcOutcome::BoundsHeld { .. }) && nu.iter().all(|o| o.held),
        };
        Ok(IcReport {
            y0,
            dy0,
            admissible,
            outcome,
            nu,
            phi,
            pass,
        })
    })?;

    let pass = reports.iter().any(|r| r.admissible) && reports.iter().filter(|r| r.admissible).all(|r| r.pass);
    Ok(VerificationReport {
        theorem: cert.theorem,
        strategy: cert.strategy,
        horizon: params.horizon,
        slack,
        ics: reports,
        pass,
    })
}

fn phi_check(
    sys: &LinearSystem3,
    co: &RiccatiCoefficients,
    ytraj: &Trajectory,
    t0: f64,
    params: &VerifyParams,
) -> Result<PhiOutcome> {
    let s = ytraj.sample(t0)?;
    let state = riccati_to_sys3_state(sys, t0, s[0], s[1], 1.0)?;
    // Solutions of linear systems grow exponentially; only a true overflow
    // counts as escape here.
    let opts = Options {
        escape_threshold: f64::MAX,
        ..params.ode
    };
    let direct = sys.solve(state, (t0, params.horizon), &opts)?;
    let lift = lift_sys3_solution(sys, co, ytraj, t0, 1.0, &params.ode)?;
    let t_end = direct.t_end().min(lift.t_end());
    let times = check_times(&direct, t0, t_end, params.check_points)?;
    let mut min_phi = f64::INFINITY;
    let mut argmin = t0;
    let mut err: f64 = 0.0;
    for &t in &times {
        let phi = direct.component(t, 0)?;
        if phi < min_phi {
            min_phi = phi;
            argmin = t;
        }
        let lifted = lift.log_phi_ratio(t)?.exp();
        err = err.max((phi / lifted - 1.0).abs());
    }
    let held = direct.is_completed() && min_phi > 0.0 && err <= LIFT_REL_TOL;
    Ok(PhiOutcome {
        min_phi,
        argmin,
        lift_max_rel_err: err,
        held,
    })
}

/// Minimum of `Γ(t, ·, ·)` over `[−r, r]²` on an `n × n` grid, refined once
/// at ten times the density around the coarse argmin.
pub fn brute_force_gamma_min(cv: &CoeffValues, r: f64, n: usize, exec: Execution) -> f64 {
    let n = n.max(2);
    let h = 2.0 * r / (n - 1) as f64;
    let at = |i: usize| if i == n - 1 { r } else { -r + h * i as f64 };
    let rows = map_range(exec, n, |i| {
        let u = at(i);
        (0..n)
            .map(|j| (cv.gamma(u, at(j)), i, j))
            .fold((f64::INFINITY, 0, 0), |m, x| if x.0 < m.0 { x } else { m })
    });
    let (coarse, i, j) = rows
        .into_iter()
        .fold((f64::INFINITY, 0, 0), |m, x| if x.0 < m.0 { x } else { m });
    let (uc, vc) = (at(i), at(j));
    let fine = h / 10.0;
    let mut best = coarse;
    for p in -10..=10 {
        for q in -10..=10 {
            let u = (uc + p as f64 * fine).clamp(-r, r);
            let v = (vc + q as f64 * fine).clamp(-r, r);
            best = best.min(cv.gamma(u, v));
        }
    }
    best
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LemmaReport {
    pub comparison_min_margin: f64,
    pub nu_min_margin: f64,
    pub first_violation: Option<f64>,
    pub pass: bool,
}

/// Checks the comparison conclusions for a constant witness along `ytraj`:
/// `y ≤ η` with `ν(t, η, y, 0, y') ≥ 0` on the upper side, and
/// `ζ ≤ y` with `ν(t, ζ, y, 0, y') ≤ 0` on the lower side.
pub fn verify_lemma_23_24(
    co: &RiccatiCoefficients,
    witness: f64,
    ytraj: &Trajectory,
    side: Side,
    slack: f64,
) -> Result<LemmaReport> {
    let s = match side {
        Side::Upper => 1.0,
        Side::Lower => -1.0,
    };
    let margins = |t: f64| -> Result<(f64, f64)> {
        let st = ytraj.sample(t)?;
        let cv = co.at(t)?;
        Ok((s * (witness - st[0]), s * cv.nu(witness, st[0], 0.0, st[1])))
    };
    let t1 = ytraj.t_start();
    let (c0, n0) = margins(t1)?;
    if c0 < -slack || n0 < -slack {
        return Err(Error::Inadmissible(format!(
            "at t = {t1}: comparison margin {c0}, ν margin {n0} for witness {witness} ({side:?})"
        )));
    }
    let times = check_times(ytraj, t1, ytraj.t_end(), CHECK_POINTS)?;
    let (mut cmin, mut nmin, mut first) = (f64::INFINITY, f64::INFINITY, None);
    for t in times {
        let (c, n) = margins(t)?;
        cmin = cmin.min(c);
        nmin = nmin.min(n);
        if first.is_none() && (c < -slack || n < -slack) {
            first = Some(t);
        }
    }
    Ok(LemmaReport {
        comparison_min_margin: cmin,
        nu_min_margin: nmin,
        first_violation: first,
        pass: first.is_none(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContinuationReport {
    /// `min ∫ a·y` over the part of `[t1, t2)` the trajectory covers.
    pub f_min: f64,
    /// Whether the trajectory reached `t2` with `F` finite.
    pub bounded_below: bool,
    pub target: f64,
    pub continued_to: Option<f64>,
    pub pass: bool,
}

/// If `F = ∫ a·y` stays bounded below on `[t1, t2)`, the solution must
/// continue to at least `t2 + 0.1·(t2 − t1)`.
pub fn verify_lemma_22(
    co: &RiccatiCoefficients,
    ytraj: &Trajectory,
    t2: f64,
    opts: &Options,
) -> Result<ContinuationReport> {
    let t1 = ytraj.t_start();
    let end = ytraj.t_end().min(t2);
    let g = UniformGrid::new(t1, end, 4001)?;
    let vals: Vec<f64> = g
        .nodes()
        .into_iter()
        .map(|t| Ok(co.a().eval(t)? * ytraj.component(t, 0)?))
        .collect::<Result<_>>()?;
    let f = cumulative_simpson(&vals, g.step());
    let f_min = f.iter().copied().fold(0.0, f64::min);
    let bounded_below = ytraj.t_end() >= t2 && f_min.is_finite();
    let target = t2 + 0.1 * (t2 - t1);
    let (continued_to, pass) = if bounded_below {
        let s = ytraj.state(0);
        let tr = co.solve(s[0], s[1], (t1, target), opts)?;
        (Some(tr.t_end()), tr.is_completed())
    } else {
        (None, true)
    };
    Ok(ContinuationReport {
        f_min,
        bounded_below,
        target,
        continued_to,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::{certify, CertifyParams, Problem};

    #[test]
    fn halton_prefix() {
        let xs: Vec<f64> = (1..5).map(|i| radical_inverse(i, 2)).collect();
        assert_eq!(xs, vec![0.5, 0.25, 0.75, 0.125]);
        assert!((radical_inverse(1, 3) - 1.0 / 3.0).abs() < 1e-15);
    }

    fn t41(e: f64) -> Certificate {
        let co = RiccatiCoefficients::constant(1.0, 0.0, 0.0, 0.0, e);
        let p = CertifyParams {
            exec: Execution::Sequential,
            ..CertifyParams::with_span((0.0, 20.0))
        };
        certify(&Problem::Riccati(co), TheoremId::T4_1, &p).unwrap()
    }

    #[test]
    fn sampled_ics_are_admissible_and_deterministic() {
        let cert = t41(-0.1);
        let a = sample_admissible_ics(&cert, 20).unwrap();
        let b = sample_admissible_ics(&cert, 20).unwrap();
        assert_eq!(a, b);
        let co = cert.coefficients().unwrap();
        for (y, dy) in a {
            assert!((0.0..=0.1).contains(&y));
            assert!(cert.admissible.as_ref().unwrap().contains(co, y, dy, 0.0).unwrap());
        }
        assert!(sample_admissible_ics(&t41(0.1), 3).is_err());
    }

    #[test]
    fn inadmissible_ics_are_excluded() {
        let cert = t41(-0.1);
        let p = VerifyParams::new(5.0, Options::with_tol(1e-10, 1e-12));
        let rep = verify_conclusion(&cert, &[(0.6, 0.0), (0.05, 0.0)], &p).unwrap();
        assert!(!rep.ics[0].admissible);
        assert!(rep.ics[1].admissible);
    }

    #[test]
    fn gamma_oracle_examples() {
        let co = RiccatiCoefficients::constant(1.0, 0.0, 0.0, 1.0, 0.0);
        let v = brute_force_gamma_min(&co.at(0.0).unwrap(), 50.0, 1001, Execution::Sequential);
        assert!((v - 1.0).abs() < 1e-4);
        let co = RiccatiCoefficients::constant(1.0, 0.0, 3.0, 1.0, 0.0);
        let cv = co.at(0.0).unwrap();
        let v = brute_force_gamma_min(&cv, 50.0, 1001, Execution::Sequential);
        assert!((v + 2.0).abs() < 1e-3);
        assert!(v >= cv.gamma_min().unwrap().1 - 1e-9);
    }

    #[test]
    fn lemma_23_24_examples() {
        let co = RiccatiCoefficients::constant(1.0, 0.0, 0.0, 0.0, 0.0);
        let opts = Options::default();
        let zero = co.solve(0.0, 0.0, (0.0, 10.0), &opts).unwrap();
        assert!(verify_lemma_23_24(&co, 0.5, &zero, Side::Upper, 1e-9).unwrap().pass);
        let co = RiccatiCoefficients::constant(1.0, 0.0, 0.0, 0.0, 0.0);
        let y = co.solve(0.0, 1.0, (0.0, 1.0), &opts).unwrap();
        // ν(0, −0.1, 0, 0, 1) = −1 + 0.015 < 0 has the admissible sign; flip y'.
        assert!(verify_lemma_23_24(&co, -0.1, &y, Side::Lower, 1e-9).is_ok());
        let y = co.solve(0.0, -1.0, (0.0, 1.0), &opts).unwrap();
        assert!(matches!(
            verify_lemma_23_24(&co, -0.1, &y, Side::Lower, 1e-9),
            Err(Error::Inadmissible(_))
        ));
    }

    #[test]
    fn lemma_22_examples() {
        let co = RiccatiCoefficients::constant(1.0, 0.0, 0.0, 0.0, 0.0);
        let opts = Options::with_tol(1e-10, 1e-12);
        let y = co.solve(0.0, 2.0, (0.0, 3.0), &opts).unwrap();
        let r = verify_lemma_22(&co, &y, 3.0, &opts).unwrap();
        assert!(r.bounded_below && r.pass && r.f_min.abs() < 1e-9);
        let y = co.solve(-1.0, -1.0, (0.0, 1.0), &opts).unwrap();
        let r = verify_lemma_22(&co, &y, 1.0, &opts).unwrap();
        assert!(!r.bounded_below && r.pass);
    }
}
