//! Plain-text `key = value` configuration, one entry per line, `#` comments.
//!
//! Keys are case-insensitive and `-` is read as `_`. Later layers (command
//! line flags) override earlier ones (files).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use splitting_core::matfun::{Backend, KrylovParams, DEFAULT_DENSE_CAP};
use splitting_core::multigrid::SmootherConfig;
use splitting_core::problems::{ProblemSpec, Scale};
use splitting_core::schemes::{Extension, Scheme};

use crate::error::{Error, Result};
use crate::sweep::{BackendChoice, SweepOptions};

pub const KEYS: &[&str] = &[
    "problem",
    "m",
    "stiffness",
    "interior",
    "t_final",
    "scale",
    "scheme",
    "schemes",
    "tau",
    "taus",
    "k_min",
    "k_max",
    "tau_ref",
    "fused",
    "substeps",
    "backend",
    "dense_cap",
    "krylov_dim",
    "krylov_tol",
    "krylov_max_substeps",
    "extension",
    "mg_cycles",
    "mg_pre",
    "mg_post",
    "mg_damping",
    "mg_tol",
    "mg_max_cycles",
    "corrector_cap",
    "out",
    "plot",
    "allow_failed_rows",
];

#[derive(Clone, Debug, PartialEq, Eq)]
struct Entry {
    value: String,
    origin: String,
    line: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KeyValues {
    entries: BTreeMap<String, Entry>,
}

fn normalize(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

impl KeyValues {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut kv = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split_once('#').map_or(raw, |(before, _)| before).trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                origin: origin.into(),
                line: i + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = normalize(key);
            if !KEYS.contains(&key.as_str()) {
                return Err(Error::Config {
                    origin: origin.into(),
                    line: i + 1,
                    message: format!("unknown key `{key}`"),
                });
            }
            kv.entries.insert(
                key,
                Entry {
                    value: value.trim().to_string(),
                    origin: origin.into(),
                    line: i + 1,
                },
            );
        }
        Ok(kv)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>, origin: &str) -> Result<()> {
        let key = normalize(key);
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::usage(format!("unknown key `{key}`")));
        }
        self.entries.insert(
            key,
            Entry {
                value: value.into(),
                origin: origin.into(),
                line: 0,
            },
        );
        Ok(())
    }

    /// Entries of `other` replace those of `self`.
    pub fn overlay(&mut self, other: KeyValues) {
        self.entries.extend(other.entries);
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(&normalize(key)).map(|e| e.value.as_str())
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        let Some(e) = self.entries.get(key) else {
            return Ok(None);
        };
        e.value.parse::<T>().map(Some).map_err(|err| self.bad(key, e, &err.to_string()))
    }

    fn bad(&self, key: &str, e: &Entry, why: &str) -> Error {
        Error::Config {
            origin: e.origin.clone(),
            line: e.line,
            message: format!("invalid value `{}` for `{key}`: {why}", e.value),
        }
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        let Some(e) = self.entries.get(key) else {
            return Ok(None);
        };
        e.value
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<T>().map_err(|err| self.bad(key, e, &err.to_string())))
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }

    fn flag(&self, key: &str) -> Result<Option<bool>> {
        let Some(e) = self.entries.get(key) else {
            return Ok(None);
        };
        match e.value.to_ascii_lowercase().as_str() {
            "true" | "yes" | "1" | "on" => Ok(Some(true)),
            "false" | "no" | "0" | "off" => Ok(Some(false)),
            _ => Err(self.bad(key, e, "expected true or false")),
        }
    }

    fn entry(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }
}

/// Everything a `run` or `converge` invocation needs.
#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub problem: ProblemSpec,
    pub scale: Scale,
    pub schemes: Vec<Scheme>,
    /// Step sizes of the sweep.
    pub taus: Vec<f64>,
    /// Step of a single run.
    pub tau: Option<f64>,
    pub sweep: SweepOptions,
    pub out: Option<PathBuf>,
    pub plot: Option<PathBuf>,
    pub allow_failed_rows: bool,
}

fn problem_by_name(name: &str) -> Option<ProblemSpec> {
    match name.trim().to_ascii_lowercase().as_str() {
        "quadratic1d" => Some(ProblemSpec::quadratic1d(1.0)),
        "integro1d" => Some(ProblemSpec::integro1d()),
        "stiff2d" => Some(ProblemSpec::stiff2d(1.0)),
        "stiff1d" => Some(ProblemSpec::stiff1d(1.0)),
        _ => None,
    }
}

impl Settings {
    pub fn resolve(kv: &KeyValues) -> Result<Self> {
        let name = kv.get("problem").ok_or_else(|| Error::usage("no problem given (key `problem`)"))?;
        let mut problem = problem_by_name(name).ok_or_else(|| {
            let e = kv.entry("problem").expect("present");
            kv.bad("problem", e, "expected quadratic1d, integro1d, stiff2d or stiff1d")
        })?;
        let scale = kv.parsed::<Scale>("scale")?.unwrap_or(Scale::Paper);
        problem = problem.with_scale(scale);
        for key in ["m", "stiffness"] {
            if let Some(v) = kv.parsed::<f64>(key)? {
                problem = problem
                    .with_parameter(v)
                    .map_err(|err| kv.bad(key, kv.entry(key).expect("present"), &err.to_string()))?;
            }
        }
        if let Some(n) = kv.parsed::<usize>("interior")? {
            problem.interior = n;
        }
        if let Some(t) = kv.parsed::<f64>("t_final")? {
            problem.t_final = t;
        }

        let mut schemes = kv.list::<Scheme>("schemes")?.unwrap_or_else(|| {
            vec![Scheme::Strang, Scheme::StrangM3, Scheme::StrangM5a, Scheme::StrangM5b]
        });
        if let Some(s) = kv.parsed::<Scheme>("scheme")? {
            schemes = vec![s];
        }
        if schemes.is_empty() {
            return Err(Error::usage("empty scheme list"));
        }

        let mut taus = kv.list::<f64>("taus")?.unwrap_or_else(|| problem.sweep_steps());
        let k_min = kv.parsed::<usize>("k_min")?;
        let k_max = kv.parsed::<usize>("k_max")?;
        if k_min.is_some() || k_max.is_some() {
            let lo = k_min.unwrap_or(0);
            let hi = k_max.unwrap_or(taus.len().saturating_sub(1));
            if lo > hi || hi >= taus.len() {
                return Err(Error::usage(format!("step range k = {lo}..{hi} outside 0..{}", taus.len() - 1)));
            }
            taus = taus[lo..=hi].to_vec();
        }

        let dense_cap = kv.parsed::<usize>("dense_cap")?.unwrap_or(DEFAULT_DENSE_CAP);
        let defaults = KrylovParams::default();
        let krylov = KrylovParams {
            max_dim: kv.parsed("krylov_dim")?.unwrap_or(defaults.max_dim),
            tol: kv.parsed("krylov_tol")?.unwrap_or(defaults.tol),
            max_substeps: kv.parsed("krylov_max_substeps")?.unwrap_or(defaults.max_substeps),
        };
        let backend = match kv.get("backend").map(str::to_ascii_lowercase).as_deref() {
            None | Some("auto") => BackendChoice::Auto { dense_cap, krylov },
            Some("dense") => BackendChoice::Fixed(Backend::Dense { cap: dense_cap }),
            Some("krylov") => BackendChoice::Fixed(Backend::Krylov(krylov)),
            Some(_) => {
                let e = kv.entry("backend").expect("present");
                return Err(kv.bad("backend", e, "expected auto, dense or krylov"));
            }
        };

        let sm = SmootherConfig::default();
        let mg_tol = match kv.get("mg_tol").map(str::to_ascii_lowercase).as_deref() {
            None | Some("none") | Some("") => None,
            Some(_) => kv.parsed::<f64>("mg_tol")?,
        };
        let smoother = SmootherConfig {
            cycles: kv.parsed("mg_cycles")?.unwrap_or(sm.cycles),
            pre_sweeps: kv.parsed("mg_pre")?.unwrap_or(sm.pre_sweeps),
            post_sweeps: kv.parsed("mg_post")?.unwrap_or(sm.post_sweeps),
            damping: kv.parsed("mg_damping")?.unwrap_or(sm.damping),
            tol: mg_tol,
            max_cycles: kv.parsed("mg_max_cycles")?.unwrap_or(sm.max_cycles),
        };

        let fused = match kv.get("fused").map(str::to_ascii_lowercase).as_deref() {
            None | Some("auto") => None,
            Some(_) => kv.flag("fused")?,
        };

        let sweep = SweepOptions {
            scale,
            backend,
            substeps: kv.parsed("substeps")?.unwrap_or(5),
            extension: kv.parsed::<Extension>("extension")?.unwrap_or(Extension::Auto),
            smoother,
            corrector_cap: kv.parsed("corrector_cap")?.unwrap_or(splitting_core::corrector::DEFAULT_CAP),
            reference_step: kv.parsed("tau_ref")?,
            fused,
        };

        Ok(Self {
            problem,
            scale,
            schemes,
            taus,
            tau: kv.parsed("tau")?,
            sweep,
            out: kv.get("out").map(PathBuf::from),
            plot: kv.get("plot").map(PathBuf::from),
            allow_failed_rows: kv.flag("allow_failed_rows")?.unwrap_or(false),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_blank_lines_and_overrides() {
        let text = "# sweep\nproblem = quadratic1d\n\nm = 5   # stronger source\nschemes = m3, m5b\nmg-cycles = 4\n";
        let mut kv = KeyValues::parse(text, "test").unwrap();
        let s = Settings::resolve(&kv).unwrap();
        assert_eq!(s.problem.parameter(), Some(5.0));
        assert_eq!(s.schemes, vec![Scheme::StrangM3, Scheme::StrangM5b]);
        assert_eq!(s.sweep.smoother.cycles, 4);
        assert_eq!(s.taus.len(), 7);

        let mut cli = KeyValues::default();
        cli.set("m", "1", "cli").unwrap();
        cli.set("k-max", "3", "cli").unwrap();
        kv.overlay(cli);
        let s = Settings::resolve(&kv).unwrap();
        assert_eq!(s.problem.parameter(), Some(1.0));
        assert_eq!(s.taus.len(), 4);
    }

    #[test]
    fn errors_name_the_line() {
        let err = KeyValues::parse("problem = integro1d\ncolour = red\n", "f.conf").unwrap_err();
        assert_eq!(err.to_string(), "f.conf:2: unknown key `colour`");
        let kv = KeyValues::parse("problem = integro1d\nsubsteps = many\n", "f.conf").unwrap();
        let err = Settings::resolve(&kv).unwrap_err();
        assert!(err.to_string().starts_with("f.conf:2: invalid value `many`"), "{err}");
        assert_eq!(err.exit_code(), 1);
        assert!(KeyValues::parse("just words\n", "f").is_err());
    }

    #[test]
    fn scale_selects_desk_grid() {
        let kv = KeyValues::parse("problem = stiff2d\nstiffness = 100\nscale = desk\nk_min = 2\n", "t").unwrap();
        let s = Settings::resolve(&kv).unwrap();
        assert_eq!(s.problem.interior, 63);
        assert_eq!(s.taus.len(), 7);
        assert_eq!(s.taus[0], 0.025);
    }
}
