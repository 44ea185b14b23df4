//! Convergence reports and their CSV and plot-data forms.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use splitting_core::norm::fit_order;
use splitting_core::schemes::Scheme;

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 6] = ["scheme", "tau", "error", "diffusion_flows", "reaction_flows", "status"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Status {
    Ok,
    BlowUp,
    Unstable,
    CorrectorCap,
    Krylov,
    NonFinite,
    Failed,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::BlowUp => "blow-up",
            Status::Unstable => "unstable",
            Status::CorrectorCap => "corrector-cap",
            Status::Krylov => "krylov",
            Status::NonFinite => "non-finite",
            Status::Failed => "failed",
        }
    }

    pub fn of(err: &splitting_core::Error) -> Self {
        use splitting_core::Error as E;
        match err.root() {
            E::BlowUp { .. } => Status::BlowUp,
            E::Unstable { .. } => Status::Unstable,
            E::CorrectorTooLarge { .. } => Status::CorrectorCap,
            E::KrylovNotConverged { .. } => Status::Krylov,
            E::NonFinite => Status::NonFinite,
            _ => Status::Failed,
        }
    }
}

impl FromStr for Status {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Status::Ok,
            Status::BlowUp,
            Status::Unstable,
            Status::CorrectorCap,
            Status::Krylov,
            Status::NonFinite,
            Status::Failed,
        ]
        .into_iter()
        .find(|st| st.name() == s)
        .ok_or_else(|| Error::Report(format!("unknown status '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub scheme: Scheme,
    pub tau: f64,
    /// `None` for failed runs.
    pub error: Option<f64>,
    pub diffusion_flows: u64,
    pub reaction_flows: u64,
    pub status: Status,
}

impl Row {
    pub fn total_flows(&self) -> u64 {
        self.diffusion_flows + self.reaction_flows
    }

    pub fn is_ok(&self) -> bool {
        self.status == Status::Ok
    }
}

/// Per-run corrector diagnostics, kept alongside the rows.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Diagnostics {
    pub max_corrector: f64,
    pub max_trace_error: f64,
    /// Failure message of a failed run.
    pub message: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceReport {
    /// Run description as ordered `key = value` pairs.
    pub meta: Vec<(String, String)>,
    pub rows: Vec<Row>,
    pub diagnostics: Vec<Diagnostics>,
}

impl ConvergenceReport {
    pub fn schemes(&self) -> Vec<Scheme> {
        let mut out: Vec<Scheme> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.scheme) {
                out.push(r.scheme);
            }
        }
        out
    }

    pub fn rows_for(&self, scheme: Scheme) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(move |r| r.scheme == scheme)
    }

    pub fn row(&self, scheme: Scheme, tau: f64) -> Option<&Row> {
        self.rows_for(scheme).find(|r| (r.tau - tau).abs() <= 1e-12 * tau)
    }

    pub fn error(&self, scheme: Scheme, tau: f64) -> Option<f64> {
        self.row(scheme, tau).and_then(|r| r.error)
    }

    /// Least-squares order over the successful rows of `scheme`.
    pub fn slope(&self, scheme: Scheme) -> Option<f64> {
        let (taus, errs): (Vec<f64>, Vec<f64>) = self
            .rows_for(scheme)
            .filter(|r| r.is_ok())
            .filter_map(|r| r.error.map(|e| (r.tau, e)))
            .unzip();
        fit_order(&taus, &errs).ok()
    }

    pub fn failures(&self) -> impl Iterator<Item = (&Row, &Diagnostics)> {
        self.rows.iter().zip(&self.diagnostics).filter(|(r, _)| !r.is_ok())
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

/// C-style `%.16e`: seventeen significant digits and an exponent of at
/// least two digits.
pub fn format_sci(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.16e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

pub fn to_csv(report: &ConvergenceReport) -> Result<String> {
    if report.rows.is_empty() {
        return Err(Error::Report("no rows to emit".into()));
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Report(e.to_string());
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in &report.rows {
        w.write_record([
            r.scheme.name().to_string(),
            format_sci(r.tau),
            format_sci(r.error.unwrap_or(f64::NAN)),
            r.diffusion_flows.to_string(),
            r.reaction_flows.to_string(),
            r.status.name().to_string(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Report(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Report(e.to_string()))
}

pub fn parse_csv(text: &str) -> Result<Vec<Row>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = rd.headers().map_err(|e| Error::Report(e.to_string()))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Report(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for (line, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| Error::Report(e.to_string()))?;
        let bad = |what: &str| Error::Report(format!("row {}: bad {what}", line + 1));
        let num = |i: usize, what: &str| rec[i].parse::<f64>().map_err(|_| bad(what));
        let error = num(2, "error")?;
        rows.push(Row {
            scheme: rec[0].parse().map_err(|_| bad("scheme"))?,
            tau: num(1, "tau")?,
            error: (!error.is_nan()).then_some(error),
            diffusion_flows: rec[3].parse().map_err(|_| bad("diffusion_flows"))?,
            reaction_flows: rec[4].parse().map_err(|_| bad("reaction_flows"))?,
            status: rec[5].parse()?,
        });
    }
    Ok(rows)
}

/// Guide line `e₀ (τ/τ₀)^p` through the coarsest successful point.
pub fn guide_line(report: &ConvergenceReport, order: f64) -> Option<Vec<(f64, f64)>> {
    let ok: Vec<&Row> = report.rows.iter().filter(|r| r.is_ok() && r.error.is_some()).collect();
    let tau0 = ok.iter().map(|r| r.tau).fold(f64::NAN, f64::max);
    let e0 = ok
        .iter()
        .filter(|r| r.tau == tau0)
        .filter_map(|r| r.error)
        .fold(f64::NAN, f64::max);
    if !tau0.is_finite() || !e0.is_finite() {
        return None;
    }
    let mut taus: Vec<f64> = report.rows.iter().map(|r| r.tau).collect();
    taus.sort_by(|a, b| b.total_cmp(a));
    taus.dedup();
    Some(taus.into_iter().map(|t| (t, e0 * (t / tau0).powf(order))).collect())
}

/// Gnuplot-style blocks: one `(τ, error)` block per scheme followed by the
/// order one and two guide lines, separated by blank lines.
pub fn to_plotdata(report: &ConvergenceReport) -> Result<String> {
    if report.rows.is_empty() {
        return Err(Error::Report("no rows to emit".into()));
    }
    let mut out = String::new();
    for (k, v) in &report.meta {
        writeln!(out, "# {k} = {v}").unwrap();
    }
    for scheme in report.schemes() {
        out.push('\n');
        match report.slope(scheme) {
            Some(p) => writeln!(out, "# scheme {scheme} slope {p:.3}").unwrap(),
            None => writeln!(out, "# scheme {scheme}").unwrap(),
        }
        for r in report.rows_for(scheme) {
            match r.error {
                Some(e) if r.is_ok() => writeln!(out, "{} {}", format_sci(r.tau), format_sci(e)).unwrap(),
                _ => writeln!(out, "# {} {}", format_sci(r.tau), r.status.name()).unwrap(),
            }
        }
        out.push('\n');
    }
    for order in [1.0, 2.0] {
        if let Some(line) = guide_line(report, order) {
            writeln!(out, "\n# guide order {order}").unwrap();
            for (t, e) in line {
                writeln!(out, "{} {}", format_sci(t), format_sci(e)).unwrap();
            }
            out.push('\n');
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    PlotData,
}

/// Writes `report` to `path`; nothing is created when the report is empty.
pub fn emit_report(report: &ConvergenceReport, format: Format, path: &Path) -> Result<()> {
    let text = match format {
        Format::Csv => to_csv(report)?,
        Format::PlotData => to_plotdata(report)?,
    };
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
