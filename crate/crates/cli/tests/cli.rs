use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn riccati(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_riccati"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

#[test]
fn shipped_problems_certify_or_stay_inconclusive() {
    let dir = tempfile::tempdir().unwrap();
    let mut seen = 0;
    for entry in std::fs::read_dir(repo().join("problems")).unwrap() {
        let path = entry.unwrap().path();
        let out = riccati(&["certify", path.to_str().unwrap()], dir.path());
        let code = out.status.code().unwrap();
        assert!(
            code == 0 || code == 2,
            "{}: exit {code}\n{}",
            path.display(),
            String::from_utf8_lossy(&out.stderr)
        );
        seen += 1;
    }
    assert!(seen >= 4);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let t41 = repo().join("problems/t41_constant_forcing.toml");
    assert_eq!(
        riccati(&["certify", t41.to_str().unwrap()], dir.path()).status.code(),
        Some(0)
    );
    assert!(dir.path().join("certificates.json").exists());
    assert!(dir.path().join("run_meta.json").exists());

    let flipped = fixture("t41_positive_forcing.toml");
    assert_eq!(
        riccati(&["certify", flipped.to_str().unwrap()], dir.path())
            .status
            .code(),
        Some(1)
    );

    let out = riccati(&["certify", fixture("missing_a.toml").to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("coefficients.a"), "{err}");
    assert_eq!(err.lines().count(), 1);

    let out = riccati(&["certify", "/nonexistent.toml"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    let out = riccati(&["frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn machine_outputs_are_deterministic() {
    let t43 = repo().join("problems/t43_partitioned.toml");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    riccati(&["certify", t43.to_str().unwrap()], a.path());
    riccati(&["certify", t43.to_str().unwrap(), "--sequential"], b.path());
    let read = |d: &Path| std::fs::read(d.join("certificates.json")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
    let leftovers: Vec<_> = std::fs::read_dir(a.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().ends_with(".tmp"))
        .collect();
    assert!(leftovers.is_empty());
}

#[test]
fn flags_override_the_problem_file() {
    let dir = tempfile::tempdir().unwrap();
    let lemma = fixture("lemma21_discriminant.toml");
    let p = lemma.to_str().unwrap();
    // The printed discriminant accepts this instance; the corrected one does not.
    assert_eq!(riccati(&["check", p], dir.path()).status.code(), Some(1));
    assert_eq!(
        riccati(&["check", p, "--d-mode", "paper"], dir.path()).status.code(),
        Some(0)
    );
    let ev = std::fs::read_to_string(dir.path().join("evidence.json")).unwrap();
    assert!(ev.contains("paper literal"));

    let t41 = repo().join("problems/t41_constant_forcing.toml");
    let out = riccati(
        &[
            "certify",
            t41.to_str().unwrap(),
            "--theorem",
            "T4.5",
            "--theorem",
            "L2.1",
            "--grid",
            "501",
        ],
        dir.path(),
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("T4.5") && stdout.contains("L2.1"), "{stdout}");
}

#[test]
fn integrate_writes_plot_ready_csv() {
    let dir = tempfile::tempdir().unwrap();
    let problem = dir.path().join("blowup.toml");
    std::fs::write(
        &problem,
        "[problem]\nkind = \"riccati\"\nspan = [0.0, 2.0]\n[coefficients]\na = 1\nb = 0\nc = 0\nd = 0\ne = 0\n[initial]\npoints = [[-1.0, -1.0], [0.0, 2.0]]\n",
    )
    .unwrap();
    let out = riccati(&["integrate", problem.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("trajectory_000.csv")).unwrap();
    assert!(csv.starts_with("t,y,dy\n"));
    let summary = std::fs::read_to_string(dir.path().join("integration.json")).unwrap();
    assert!(summary.contains("finite_escape"));
    assert!(summary.contains("horizon_reached"));

    let sys = repo().join("problems/t51_companion.toml");
    let out = riccati(&["integrate", sys.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn report_summarises_verification() {
    let dir = tempfile::tempdir().unwrap();
    let sys = repo().join("problems/t51_companion.toml");
    let out = riccati(&["report", sys.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let md = std::fs::read_to_string(dir.path().join("report.md")).unwrap();
    assert!(md.contains("Certified via T4.1"));
    assert!(md.contains("Verification passed"));
}
