//! `riccati` command-line front end.
//!
//! Exit codes: 0 success, 1 refuted or verification failure, 2 inconclusive,
//! 3 input error, 4 numerical failure.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use riccati_core::criteria::{certify, Certificate, CertifyParams, Problem, TheoremId, Verdict};
use riccati_core::harness::{sample_admissible_ics, verify_conclusion, IcOutcome, VerificationReport, VerifyParams};
use riccati_core::ode::{detect_escape, EscapeClass, EscapeReport, Options, Status, Trajectory};
use riccati_core::transform::riccati_to_sys3_state;
use riccati_core::{Error as CoreError, Execution, OdeError};
use serde::Serialize;
use thiserror::Error;

use crate::config::{parse_d_mode, Kind, Model, ProblemConfig};
use crate::output::Writer;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("output: {0}")]
    Output(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Output(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Ode(OdeError::Field(_)) | CoreError::Expr(_) => CliError::Input(e.to_string()),
            CoreError::Ode(_) => CliError::Numerical(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "riccati",
    version,
    about = "Certify and verify global solvability of second-order Riccati equations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate theorem hypotheses and write the condition evidence.
    Check(RunArgs),
    /// Produce certificates.
    Certify(RunArgs),
    /// Integrate from the initial conditions and write trajectory CSVs.
    Integrate(RunArgs),
    /// Certify, then check every certified conclusion by integration.
    Verify(RunArgs),
    /// Verify and write a human-readable summary.
    Report(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Problem file (TOML).
    pub problem: PathBuf,
    /// Grid points per span.
    #[arg(long = "grid")]
    pub grid: Option<usize>,
    /// Relative tolerance of the integrator.
    #[arg(long)]
    pub rtol: Option<f64>,
    /// Absolute tolerance of the integrator.
    #[arg(long)]
    pub atol: Option<f64>,
    /// Right end of the integration interval.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Theorem to check; repeatable. Overrides the problem file.
    #[arg(long = "theorem")]
    pub theorems: Vec<String>,
    /// Discriminant used for the Γ ≥ 0 condition.
    #[arg(long = "d-mode", value_parser = ["paper", "corrected"])]
    pub d_mode: Option<String>,
    /// Run without thread parallelism.
    #[arg(long)]
    pub sequential: bool,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Check(_) => "check",
            Command::Certify(_) => "certify",
            Command::Integrate(_) => "integrate",
            Command::Verify(_) => "verify",
            Command::Report(_) => "report",
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Command::Check(a)
            | Command::Certify(a)
            | Command::Integrate(a)
            | Command::Verify(a)
            | Command::Report(a) => a,
        }
    }
}

/// Runs one invocation and returns its exit code. Diagnostics go to stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli, &argv) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

struct Session {
    cfg: ProblemConfig,
    exec: Execution,
    out: Writer,
}

impl Session {
    fn open(args: &RunArgs) -> Result<Self, CliError> {
        let mut cfg = ProblemConfig::load(&args.problem)?;
        if let Some(n) = args.grid {
            cfg.grid_n = n;
        }
        if let Some(x) = args.rtol {
            cfg.rtol = x;
        }
        if let Some(x) = args.atol {
            cfg.atol = x;
        }
        if let Some(h) = args.horizon {
            cfg.horizon = h;
        }
        if let Some(d) = &args.out {
            cfg.out_dir = d.clone();
        }
        if !args.theorems.is_empty() {
            cfg.theorems = args
                .theorems
                .iter()
                .map(|s| s.parse::<TheoremId>())
                .collect::<Result<_, _>>()?;
        }
        if let Some(m) = &args.d_mode {
            cfg.d_mode = parse_d_mode(m)?;
        }
        if !(cfg.rtol > 0.0 && cfg.atol > 0.0) {
            return Err(CliError::Input("rtol and atol must be positive".into()));
        }
        if cfg.horizon.partial_cmp(&cfg.span.0) != Some(std::cmp::Ordering::Greater) {
            return Err(CliError::Input(format!(
                "horizon {} must exceed t0 = {}",
                cfg.horizon, cfg.span.0
            )));
        }
        let exec = if args.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        };
        let out = Writer::new(&cfg.out_dir)?;
        Ok(Session { cfg, exec, out })
    }

    fn ode(&self) -> Options {
        Options::with_tol(self.cfg.rtol, self.cfg.atol)
    }

    fn problem(&self) -> Problem {
        match &self.cfg.model {
            Model::Riccati(co) => Problem::Riccati(co.clone()),
            Model::System3(sys) => Problem::System(sys.clone()),
        }
    }

    fn params(&self) -> CertifyParams {
        let c = &self.cfg;
        CertifyParams {
            span: c.span,
            grid_n: c.grid_n,
            tol: c.condition_tol,
            d_mode: c.d_mode,
            lambda: c.lambda,
            partition: c.partition.clone(),
            gamma: c.gamma,
            y1: c.y1.clone(),
            y2: c.y2.clone(),
            strategies: c.strategies.clone(),
            ode: self.ode(),
            exec: self.exec,
        }
    }

    fn certify_all(&self) -> Result<Vec<Certificate>, CliError> {
        let problem = self.problem();
        let params = self.params();
        self.cfg
            .theorems
            .iter()
            .map(|&id| certify(&problem, id, &params).map_err(CliError::from))
            .collect()
    }

    fn verify_all(&self, certs: &[Certificate]) -> Result<Vec<VerificationReport>, CliError> {
        let vp = VerifyParams {
            exec: self.exec,
            ..VerifyParams::new(self.cfg.horizon, self.ode())
        };
        let mut out = Vec::new();
        for cert in certs.iter().filter(|c| c.verdict == Verdict::Certified) {
            if cert.has_empty_region() {
                eprintln!("note: {} not verified: admissible region is empty", cert.theorem);
                continue;
            }
            let ics = if self.cfg.points.is_empty() {
                sample_admissible_ics(cert, self.cfg.ic_count)?
            } else {
                self.cfg.points.clone()
            };
            out.push(verify_conclusion(cert, &ics, &vp)?);
        }
        Ok(out)
    }
}

/// 0 if some requested theorem certified, else 2 if any was inconclusive,
/// else 1.
fn certify_code(certs: &[Certificate]) -> i32 {
    if certs.iter().any(|c| c.verdict == Verdict::Certified) {
        0
    } else if certs.iter().any(|c| c.verdict == Verdict::Inconclusive) {
        2
    } else {
        1
    }
}

/// Certification code, downgraded when a certified conclusion did not hold.
fn verify_code(certs: &[Certificate], reports: &[VerificationReport]) -> i32 {
    let stalled = reports
        .iter()
        .flat_map(|r| &r.ics)
        .any(|ic| ic.admissible && matches!(ic.outcome, IcOutcome::Stalled { .. }));
    if reports.iter().any(|r| !r.pass) {
        if stalled {
            4
        } else {
            1
        }
    } else {
        certify_code(certs)
    }
}

#[derive(Serialize)]
struct RunMeta<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    problem: String,
    argv: Vec<String>,
    execution: Execution,
    unix_time: u64,
    exit_code: i32,
    outputs: &'a [String],
}

#[derive(Serialize)]
struct EvidenceSummary<'a> {
    theorem: TheoremId,
    verdict: Verdict,
    evidence: &'a [riccati_core::criteria::GridEvidence],
    diagnostics: &'a [riccati_core::criteria::GridEvidence],
}

#[derive(Serialize)]
struct IntegrationSummary {
    index: usize,
    initial: Vec<f64>,
    status: Status,
    escape: EscapeReport,
    steps: usize,
    file: String,
}

fn execute(cli: &Cli, argv: &[OsString]) -> Result<i32, CliError> {
    let args = cli.command.args();
    let mut s = Session::open(args)?;
    let code = match &cli.command {
        Command::Check(_) => {
            let certs = s.certify_all()?;
            let ev: Vec<_> = certs
                .iter()
                .map(|c| EvidenceSummary {
                    theorem: c.theorem,
                    verdict: c.verdict,
                    evidence: &c.evidence,
                    diagnostics: &c.diagnostics,
                })
                .collect();
            for c in &certs {
                for e in &c.evidence {
                    println!(
                        "{}  {:<5} {}  min margin {:e} at t = {}",
                        c.theorem,
                        if e.pass { "ok" } else { "FAIL" },
                        e.condition,
                        e.min_margin,
                        e.argmin
                    );
                }
            }
            s.out.json("evidence.json", &ev)?;
            certify_code(&certs)
        }
        Command::Certify(_) => {
            let certs = s.certify_all()?;
            print_verdicts(&certs);
            s.out.json("certificates.json", &certs)?;
            certify_code(&certs)
        }
        Command::Integrate(_) => integrate(&mut s)?,
        Command::Verify(_) | Command::Report(_) => {
            let certs = s.certify_all()?;
            let reports = s.verify_all(&certs)?;
            print_verdicts(&certs);
            for r in &reports {
                println!(
                    "{}  verification {}  min bound margin {:e}",
                    r.theorem,
                    if r.pass { "passed" } else { "FAILED" },
                    r.min_bound_margin()
                );
            }
            s.out.json("certificates.json", &certs)?;
            s.out.json("verification.json", &reports)?;
            if matches!(cli.command, Command::Report(_)) {
                let md = render_report(&s.cfg, &certs, &reports);
                s.out.bytes("report.md", md.as_bytes())?;
            }
            verify_code(&certs, &reports)
        }
    };
    let outputs = s.out.manifest().to_vec();
    let meta = RunMeta {
        tool: "riccati",
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name(),
        problem: args.problem.display().to_string(),
        argv: argv.iter().map(|a| a.to_string_lossy().into_owned()).collect(),
        execution: s.exec,
        unix_time: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        exit_code: code,
        outputs: &outputs,
    };
    s.out.json("run_meta.json", &meta)?;
    Ok(code)
}

fn print_verdicts(certs: &[Certificate]) {
    for c in certs {
        let extra = match c.strategy {
            Some(s) => format!(" via {s}"),
            None => String::new(),
        };
        let failed = c.failed_conditions();
        if failed.is_empty() {
            println!("{}  {:?}{extra}", c.theorem, c.verdict);
        } else {
            println!("{}  {:?}{extra}  failed: {}", c.theorem, c.verdict, failed.join("; "));
        }
    }
}

fn integrate(s: &mut Session) -> Result<i32, CliError> {
    let opts = s.ode();
    let span = (s.cfg.span.0, s.cfg.horizon);
    let mut runs: Vec<(Vec<f64>, Trajectory, &'static [&'static str])> = Vec::new();
    match (&s.cfg.model, s.cfg.kind) {
        (Model::Riccati(co), _) => {
            if s.cfg.points.is_empty() {
                return Err(CliError::Input("missing key `initial.points`".into()));
            }
            for &(y0, dy0) in &s.cfg.points {
                runs.push((vec![y0, dy0], co.solve(y0, dy0, span, &opts)?, &["t", "y", "dy"]));
            }
        }
        (Model::System3(sys), Kind::System3) => {
            let mut states = s.cfg.states.clone();
            for &(y0, dy0) in &s.cfg.points {
                states.push(riccati_to_sys3_state(sys, span.0, y0, dy0, 1.0)?);
            }
            if states.is_empty() {
                return Err(CliError::Input("missing key `initial.states`".into()));
            }
            let lin = Options {
                escape_threshold: f64::MAX,
                ..opts
            };
            for st in states {
                runs.push((st.to_vec(), sys.solve(st, span, &lin)?, &["t", "phi", "psi", "chi"]));
            }
        }
        _ => unreachable!("model matches kind"),
    }
    let mut summary = Vec::new();
    let mut stalled = false;
    for (i, (init, tr, header)) in runs.into_iter().enumerate() {
        let file = format!("trajectory_{i:03}.csv");
        let rows = tr.mesh().iter().enumerate().map(|(k, &t)| {
            let mut row = vec![t];
            row.extend_from_slice(tr.state(k));
            row
        });
        s.out.csv(&file, header, rows)?;
        let escape = detect_escape(&tr, span.1);
        stalled |= escape.classification == EscapeClass::Stalled;
        println!("{file}  {:?}  t_end = {}", escape.classification, tr.t_end());
        summary.push(IntegrationSummary {
            index: i,
            initial: init,
            status: tr.status(),
            escape,
            steps: tr.steps(),
            file,
        });
    }
    s.out.json("integration.json", &summary)?;
    Ok(if stalled { 4 } else { 0 })
}

fn render_report(cfg: &ProblemConfig, certs: &[Certificate], reports: &[VerificationReport]) -> String {
    use std::fmt::Write as _;
    let mut md = String::new();
    let _ = writeln!(md, "# {}\n", cfg.name);
    let _ = writeln!(
        md,
        "Span [{}, {}], horizon {}, grid {} points, condition tolerance {:e}, rtol {:e}, atol {:e}.\n",
        cfg.span.0, cfg.span.1, cfg.horizon, cfg.grid_n, cfg.condition_tol, cfg.rtol, cfg.atol
    );
    for c in certs {
        let _ = writeln!(md, "## {}: {:?}", c.theorem, c.verdict);
        if let Some(s) = c.strategy {
            let _ = writeln!(md, "\nCertified via {s}.");
        }
        let _ = writeln!(md, "\n| condition | pass | min margin | at t | first violation |");
        let _ = writeln!(md, "|---|---|---|---|---|");
        for e in &c.evidence {
            let fv = e.first_violation.map_or("-".to_string(), |t| t.to_string());
            let _ = writeln!(
                md,
                "| {} | {} | {:e} | {} | {} |",
                e.condition, e.pass, e.min_margin, e.argmin, fv
            );
        }
        for (k, v) in &c.constants {
            let _ = writeln!(md, "\n- {k}: {}", serde_json::to_string(v).unwrap_or_default());
        }
        for n in &c.notes {
            let _ = writeln!(md, "- note: {n}");
        }
        for a in &c.attempts {
            let _ = writeln!(md, "- tried {}: {:?} {}", a.theorem, a.verdict, a.failed.join("; "));
        }
        if let Some(r) = reports.iter().find(|r| r.theorem == c.theorem) {
            let held = r.ics.iter().filter(|ic| ic.admissible && ic.pass).count();
            let adm = r.ics.iter().filter(|ic| ic.admissible).count();
            let _ = writeln!(
                md,
                "\nVerification {}: {held}/{adm} admissible ICs held, min bound margin {:e}, slack {:e}.",
                if r.pass { "passed" } else { "FAILED" },
                r.min_bound_margin(),
                r.slack
            );
            if let Some(p) = r.min_phi() {
                let _ = writeln!(md, "Minimum φ over all ICs: {p:e}.");
            }
        }
        md.push('\n');
    }
    md
}
