use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use splitting::report::parse_csv;
use splitting::Status;
use splitting_core::schemes::Scheme;

fn splitting(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_splitting")).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &[&str] = &["--problem", "quadratic1d", "--interior", "40", "--k-max", "2", "--tau-ref", "0.0003125"];

#[test]
fn list_names_every_problem_and_scheme() {
    let o = splitting(&["list"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for name in ["quadratic1d(m=5)", "integro1d", "stiff2d(M=100)", "strang-d", "m5b"] {
        assert!(text.contains(name), "{name} missing from\n{text}");
    }
}

#[test]
fn help_exits_zero_and_bad_usage_exits_one() {
    assert_eq!(splitting(&["--help"]).status.code(), Some(0));
    assert_eq!(splitting(&["converge", "--help"]).status.code(), Some(0));
    assert_eq!(splitting(&["frobnicate"]).status.code(), Some(1));
    let o = splitting(&["converge", "--problem", "nonsense"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("problem"));
    let o = splitting(&["run", "--problem", "quadratic1d", "--scheme", "m5a"]);
    assert_eq!(o.status.code(), Some(1), "missing --tau");
}

#[test]
fn config_errors_name_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.conf");
    fs::write(&path, "problem = quadratic1d\n# fine\nsubsteps = many\n").unwrap();
    let o = splitting(&["converge", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("bad.conf:3"), "{err}");

    fs::write(&path, "problem = quadratic1d\nwidth = 3\n").unwrap();
    let o = splitting(&["converge", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bad.conf:2: unknown key `width`"));
}

#[test]
fn run_dumps_the_final_state() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("state.csv");
    let o = splitting(&[
        "run", "--problem", "quadratic1d", "--interior", "30", "--scheme", "m5b", "--tau", "0.01", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("steps=10 diffusion_flows=10 reaction_flows=11"));
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,u");
    assert_eq!(lines.len(), 1 + 32);
    let last: Vec<f64> = lines[32].split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(last[0], 1.0);
    assert!(last[1] > 1.0);
}

#[test]
fn converge_writes_csv_and_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("report.csv");
    let plot = dir.path().join("report.dat");
    let mut args = vec!["converge", "--out", csv.to_str().unwrap(), "--plot", plot.to_str().unwrap()];
    args.extend_from_slice(SMALL);
    let o = splitting(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("scheme,tau,error,diffusion_flows,reaction_flows,status\n"));
    assert!(!text.contains('\r'));
    let rows = parse_csv(&text).unwrap();
    assert_eq!(rows.len(), 4 * 3);
    assert!(rows.iter().all(|r| r.status == Status::Ok));
    let m5b: Vec<_> = rows.iter().filter(|r| r.scheme == Scheme::StrangM5b).collect();
    assert_eq!((m5b[0].diffusion_flows, m5b[0].reaction_flows), (5, 6));
    let plot = fs::read_to_string(&plot).unwrap();
    assert!(plot.contains("# guide order 2"));
    assert!(plot.contains("# scheme m5a slope"));
}

fn converge_with_tiny_cap(dir: &Path, extra: &[&str]) -> Output {
    let csv = dir.join("r.csv");
    let mut args = vec!["converge", "--schemes", "strang,m5a", "--set", "corrector_cap=1e-3", "--out", csv.to_str().unwrap()];
    args.extend_from_slice(SMALL);
    args.extend_from_slice(extra);
    splitting(&args)
}

#[test]
fn failed_rows_exit_two_unless_allowed() {
    let dir = tempfile::tempdir().unwrap();
    let o = converge_with_tiny_cap(dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("failed: m5a tau=0.02 status=corrector-cap"), "{err}");
    let rows = parse_csv(&fs::read_to_string(dir.path().join("r.csv")).unwrap()).unwrap();
    assert!(rows.iter().any(|r| r.status == Status::CorrectorCap && r.error.is_none()));

    let o = converge_with_tiny_cap(dir.path(), &["--allow-failed-rows"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn command_line_overrides_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("c.conf");
    fs::write(&conf, "problem = integro1d\nschemes = m3\ninterior = 20\n").unwrap();
    let csv = dir.path().join("r.csv");
    let mut args = vec!["converge", "--config", conf.to_str().unwrap(), "--out", csv.to_str().unwrap(), "--schemes", "m5b"];
    args.extend_from_slice(SMALL);
    let o = splitting(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = parse_csv(&fs::read_to_string(&csv).unwrap()).unwrap();
    assert!(rows.iter().all(|r| r.scheme == Scheme::StrangM5b));
}

#[test]
fn selftest_passes() {
    let o = splitting(&["selftest"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().all(|l| l.starts_with("PASS ")));
}
