//! Run configuration and problem files.
//!
//! A problem file is a JSON object in one of three shapes:
//!
//! ```json
//! {"a": "-1", "b": "0.5", "c": "0.5", "psi1": "exp(t)", "psi2": "exp(t)", "exact": "exp(t)", "K": 3}
//! {"family_F": "t^2 + 1", "K": 4}
//! {"catalog": "exp1", "params": {"m": 0.7, "K": 5}}
//! ```
//!
//! `exact` is optional. A `-K` given on the command line overrides the file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use mfde_tau_core::problem::{catalog, family_from_f, CatalogParams, ProblemError};
use mfde_tau_core::{parse, MfdeProblem, PathChoice, SolverOptions};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ProblemFile {
    Explicit {
        a: String,
        b: String,
        c: String,
        psi1: String,
        psi2: String,
        #[serde(default)]
        exact: Option<String>,
        #[serde(rename = "K")]
        horizon: usize,
    },
    Family {
        #[serde(rename = "family_F")]
        family_f: String,
        #[serde(rename = "K")]
        horizon: usize,
    },
    Catalog {
        catalog: String,
        #[serde(default)]
        params: CatalogParams,
    },
}

impl ProblemFile {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| {
            CliError::config(format!(
                "{}: {e} (expected explicit coefficients, family_F or catalog)",
                path.display()
            ))
        })
    }

    pub fn build(&self, horizon: Option<usize>) -> Result<MfdeProblem, CliError> {
        Ok(match self {
            ProblemFile::Explicit {
                a,
                b,
                c,
                psi1,
                psi2,
                exact,
                horizon: k,
            } => MfdeProblem::from_strs(
                a,
                b,
                c,
                psi1,
                psi2,
                horizon.unwrap_or(*k),
                exact.as_deref(),
            )?,
            ProblemFile::Family {
                family_f,
                horizon: k,
            } => {
                let f = parse(family_f).map_err(|source| ProblemError::Parse {
                    what: "family_F".into(),
                    source,
                })?;
                family_from_f(&f, horizon.unwrap_or(*k))?
            }
            ProblemFile::Catalog {
                catalog: name,
                params,
            } => {
                let mut params = params.clone();
                if let Some(k) = horizon {
                    params.insert("K".into(), k as f64);
                }
                catalog(name, &params)?
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSource {
    Catalog { name: String, params: CatalogParams },
    File(PathBuf),
}

impl ProblemSource {
    /// Build the problem, with `horizon` overriding any `K` in the source.
    pub fn load(&self, horizon: Option<usize>) -> Result<MfdeProblem, CliError> {
        match self {
            ProblemSource::Catalog { name, params } => ProblemFile::Catalog {
                catalog: name.clone(),
                params: params.clone(),
            }
            .build(horizon),
            ProblemSource::File(path) => ProblemFile::read(path)?.build(horizon),
        }
    }
}

impl fmt::Display for ProblemSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemSource::Catalog { name, params } => {
                write!(f, "{name}")?;
                for (k, v) in params.iter().filter(|(k, _)| k.as_str() != "K") {
                    write!(f, " {k}={v}")?;
                }
                Ok(())
            }
            ProblemSource::File(path) => write!(f, "{}", path.display()),
        }
    }
}

/// `-d` is either a fixed degree or `n`, tying it to the approximation degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegreeSpec {
    Fixed(usize),
    MatchN,
}

impl DegreeSpec {
    pub fn resolve(self, n: usize) -> usize {
        match self {
            DegreeSpec::Fixed(d) => d,
            DegreeSpec::MatchN => n,
        }
    }
}

impl FromStr for DegreeSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "n" {
            return Ok(DegreeSpec::MatchN);
        }
        s.parse()
            .map(DegreeSpec::Fixed)
            .map_err(|_| format!("`{s}` is neither a degree nor `n`"))
    }
}

impl fmt::Display for DegreeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DegreeSpec::Fixed(d) => write!(f, "{d}"),
            DegreeSpec::MatchN => f.write_str("n"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub source: ProblemSource,
    /// Approximation degrees; exactly one outside sweeps.
    pub n: Vec<usize>,
    pub d: DegreeSpec,
    /// Horizons; empty means take `K` from the source.
    pub horizon: Vec<usize>,
    pub path: PathChoice,
    pub compare_paths: bool,
    pub equilibrate: bool,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub error_svg: Option<PathBuf>,
    /// Record wall-clock times in a `metadata` field of the JSON report.
    pub timing: bool,
}

impl RunConfig {
    pub fn new(source: ProblemSource, n: usize, d: DegreeSpec) -> Self {
        Self {
            source,
            n: vec![n],
            d,
            horizon: Vec::new(),
            path: PathChoice::Auto,
            compare_paths: false,
            equilibrate: true,
            out: None,
            csv: None,
            svg: None,
            error_svg: None,
            timing: false,
        }
    }

    pub fn options(&self, n: usize) -> SolverOptions {
        SolverOptions {
            n,
            d: self.d.resolve(n),
            path: self.path,
            equilibrate: self.equilibrate,
            compare_paths: self.compare_paths,
        }
    }

    /// The single `(n, K)` of a solve or plot run.
    pub fn single(&self) -> Result<(usize, Option<usize>), CliError> {
        let n = match self.n.as_slice() {
            [n] => *n,
            _ => return Err(CliError::config("expected a single -n")),
        };
        let k = match self.horizon.as_slice() {
            [] => None,
            [k] => Some(*k),
            _ => return Err(CliError::config("expected a single -K")),
        };
        check_cell(n, self.d.resolve(n), k)?;
        Ok((n, k))
    }

    pub fn validate_sweep(&self) -> Result<(), CliError> {
        if self.n.is_empty() {
            return Err(CliError::config("sweep needs at least one n"));
        }
        if self.horizon.is_empty() {
            return Err(CliError::config("sweep needs at least one K"));
        }
        if let Some(k) = self.horizon.iter().find(|&&k| k < 2) {
            return Err(CliError::config(format!("K = {k} is below 2")));
        }
        if let Some(n) = self.n.iter().find(|&&n| n < 1) {
            return Err(CliError::config(format!("n = {n} is below 1")));
        }
        Ok(())
    }
}

pub fn check_cell(n: usize, d: usize, horizon: Option<usize>) -> Result<(), CliError> {
    if n < 1 {
        return Err(CliError::config("n must be at least 1"));
    }
    if d > n {
        return Err(CliError::config(format!("d = {d} exceeds n = {n}")));
    }
    if let Some(k) = horizon.filter(|&k| k < 2) {
        return Err(CliError::config(format!("K = {k} is below 2")));
    }
    Ok(())
}

/// Parse `name=value` catalog parameters.
pub fn parse_params<'a>(
    pairs: impl IntoIterator<Item = &'a str>,
) -> Result<CatalogParams, CliError> {
    let mut out = BTreeMap::new();
    for pair in pairs {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("parameter `{pair}` is not name=value")))?;
        let v: f64 = v.trim().parse().map_err(|_| {
            CliError::config(format!("parameter `{k}` has non-numeric value `{v}`"))
        })?;
        out.insert(k.trim().to_string(), v);
    }
    Ok(out)
}
