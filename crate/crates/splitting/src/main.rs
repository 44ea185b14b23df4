use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use splitting::config::{KeyValues, Settings};
use splitting::dump::state_to_text;
use splitting::report::{emit_report, to_csv, Format};
use splitting::{selftest, Error, Result, Sweep};
use splitting_core::problems::builtin_problems;
use splitting_core::schemes::{Integrator, Scheme};

/// Operator-splitting integrators for reaction-diffusion problems with
/// inhomogeneous boundary data.
#[derive(Parser, Debug)]
#[command(name = "splitting", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List built-in problems and schemes.
    List,
    /// Integrate one problem with one scheme and dump the final state.
    Run(Opts),
    /// Convergence sweep against an RK4 reference, written as CSV.
    Converge(Opts),
    /// Run the built-in oracle checks.
    Selftest,
}

#[derive(Args, Debug)]
struct Opts {
    /// `key = value` file; flags given here take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// quadratic1d, integro1d, stiff2d or stiff1d.
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    stiffness: Option<String>,
    #[arg(long)]
    interior: Option<String>,
    #[arg(long)]
    t_final: Option<String>,
    /// paper or desk.
    #[arg(long)]
    scale: Option<String>,
    #[arg(long)]
    scheme: Option<String>,
    /// Comma-separated scheme names.
    #[arg(long)]
    schemes: Option<String>,
    #[arg(long)]
    tau: Option<String>,
    /// Comma-separated step sizes.
    #[arg(long)]
    taus: Option<String>,
    #[arg(long)]
    k_min: Option<String>,
    #[arg(long)]
    k_max: Option<String>,
    #[arg(long)]
    tau_ref: Option<String>,
    /// true, false or auto.
    #[arg(long)]
    fused: Option<String>,
    #[arg(long)]
    substeps: Option<String>,
    /// auto, dense or krylov.
    #[arg(long)]
    backend: Option<String>,
    /// auto, harmonic, analytic or zero.
    #[arg(long)]
    extension: Option<String>,
    #[arg(long)]
    mg_tol: Option<String>,
    #[arg(long)]
    mg_cycles: Option<String>,
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Plot data file for `converge`.
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Exit with 0 even when some sweep rows failed.
    #[arg(long)]
    allow_failed_rows: bool,
    /// Any other configuration key, as KEY=VALUE.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Opts {
    fn settings(&self) -> Result<Settings> {
        let mut kv = match &self.config {
            Some(path) => KeyValues::load(path)?,
            None => KeyValues::default(),
        };
        let mut cli = KeyValues::default();
        for item in &self.set {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::usage(format!("--set expects KEY=VALUE, got `{item}`")))?;
            cli.set(k.trim(), v.trim(), "command line")?;
        }
        let flags = [
            ("problem", &self.problem),
            ("m", &self.m),
            ("stiffness", &self.stiffness),
            ("interior", &self.interior),
            ("t_final", &self.t_final),
            ("scale", &self.scale),
            ("scheme", &self.scheme),
            ("schemes", &self.schemes),
            ("tau", &self.tau),
            ("taus", &self.taus),
            ("k_min", &self.k_min),
            ("k_max", &self.k_max),
            ("tau_ref", &self.tau_ref),
            ("fused", &self.fused),
            ("substeps", &self.substeps),
            ("backend", &self.backend),
            ("extension", &self.extension),
            ("mg_tol", &self.mg_tol),
            ("mg_cycles", &self.mg_cycles),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cli.set(key, v.as_str(), "command line")?;
            }
        }
        if let Some(p) = &self.out {
            cli.set("out", p.display().to_string(), "command line")?;
        }
        if let Some(p) = &self.plot {
            cli.set("plot", p.display().to_string(), "command line")?;
        }
        if self.allow_failed_rows {
            cli.set("allow_failed_rows", "true", "command line")?;
        }
        kv.overlay(cli);
        Settings::resolve(&kv)
    }
}

fn write_out(path: Option<&PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn list() {
    println!("problems:");
    for p in builtin_problems() {
        let g = p.grid().map(|g| g.interior_count()).unwrap_or(0);
        let bcs: Vec<String> = p
            .boundary_spec()
            .kinds()
            .iter()
            .map(|(f, k)| format!("{f:?}={k:?}").to_ascii_lowercase())
            .collect();
        println!("  {:<22} {} unknowns, T={}, {}", p.label(), g, p.t_final, bcs.join(" "));
    }
    println!("schemes:");
    for s in Scheme::ALL {
        let note = if s.fusable() { " (fused by default)" } else { "" };
        println!("  {}{note}", s.name());
    }
}

fn run(opts: &Opts) -> Result<()> {
    let s = opts.settings()?;
    let [scheme] = s.schemes[..] else {
        return Err(Error::usage("`run` takes a single scheme (`--scheme`)"));
    };
    let tau = s.tau.ok_or_else(|| Error::usage("`run` needs a step size (`--tau`)"))?;
    let problem = s.problem.build()?;
    let cfg = s.sweep.scheme_config(scheme, tau, problem.t_final, problem.diffusion.dim());
    let traj = Integrator::new(&problem, cfg)?.run()?;
    eprintln!(
        "{} {} tau={} steps={} diffusion_flows={} reaction_flows={}",
        s.problem.label(),
        scheme,
        tau,
        traj.len() - 1,
        traj.counters.diffusion,
        traj.counters.reaction
    );
    if let Some(q) = traj.corrector_norms.iter().copied().reduce(f64::max) {
        let tr = traj.trace_errors.iter().copied().fold(0.0, f64::max);
        eprintln!("max |q|={q:.3e} max trace error={tr:.2e}");
    }
    write_out(s.out.as_ref(), &state_to_text(traj.last()))
}

fn converge(opts: &Opts) -> Result<()> {
    let s = opts.settings()?;
    let sweep = Sweep::prepare(&s.problem, &s.sweep)?;
    let reference = sweep.reference(&s.taus)?;
    let report = sweep.run(&s.schemes, &s.taus, &reference)?;
    match &s.out {
        Some(p) => emit_report(&report, Format::Csv, p)?,
        None => write_out(None, &to_csv(&report)?)?,
    }
    if let Some(p) = &s.plot {
        emit_report(&report, Format::PlotData, p)?;
    }
    for scheme in report.schemes() {
        match report.slope(scheme) {
            Some(p) => eprintln!("{:<8} slope {p:.3}", scheme.name()),
            None => eprintln!("{:<8} slope n/a", scheme.name()),
        }
    }
    let failures: Vec<_> = report.failures().collect();
    for (row, diag) in &failures {
        eprintln!(
            "failed: {} tau={} status={} {}",
            row.scheme,
            row.tau,
            row.status.name(),
            diag.message.as_deref().unwrap_or("")
        );
    }
    if !failures.is_empty() && !s.allow_failed_rows {
        return Err(Error::Report(format!("{} sweep row(s) failed", failures.len())));
    }
    Ok(())
}

fn run_selftest() -> Result<()> {
    let checks = selftest::run_all();
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(Error::Report(format!("{failed} check(s) failed")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::List => {
            list();
            Ok(())
        }
        Command::Run(o) => run(o),
        Command::Converge(o) => converge(o),
        Command::Selftest => run_selftest(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
