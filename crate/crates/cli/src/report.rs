//! JSON and CSV reports.
//!
//! A solve report carries the step polynomials in the local variable
//! `s = t - k` (ascending coefficients), the tau values, solver diagnostics,
//! the perturbed-equation residual per step, errors against the exact
//! solution when one is known, and the path comparison when one ran.
//!
//! Sweep tables have the columns
//! `n,K,d,path,global_error,per_subinterval_errors,residual,cond_estimate,status`.
//! `per_subinterval_errors` lists the errors on `(k, k+1]` separated by `;`,
//! `residual` is the largest scaled perturbed residual and `status` is `ok`
//! or the failure message. Numbers print in shortest round-trip form, so a
//! table cell parses back to exactly the value in the JSON report.

use std::io::Write;

use mfde_tau_core::{SolveOutcome, SolverOptions};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepReport {
    pub interval: [usize; 2],
    pub coefficients: Vec<f64>,
    pub tau: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub residual: f64,
    pub relative_residual: f64,
    pub min_pivot: f64,
    pub cond_estimate: f64,
    pub refined: bool,
    pub perturbed_residual: Vec<f64>,
    pub perturbed_residual_scaled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorsReport {
    pub global: f64,
    pub per_subinterval: Vec<f64>,
    pub nodes_per_subinterval: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub path: Option<String>,
    pub max_coeff_diff: Option<f64>,
    pub max_value_diff: Option<f64>,
    pub coeff_diff: Vec<f64>,
    pub value_diff: Vec<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub total_seconds: f64,
    pub linear_solve_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub problem: String,
    #[serde(rename = "K")]
    pub horizon: usize,
    pub n: usize,
    pub d: usize,
    pub requested_path: String,
    pub path: String,
    pub order: usize,
    pub steps: Vec<StepReport>,
    pub diagnostics: DiagnosticsReport,
    pub errors: Option<ErrorsReport>,
    pub comparison: Option<ComparisonReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Metadata>,
}

impl SolveReport {
    pub fn new(problem: String, options: &SolverOptions, out: &SolveOutcome) -> Self {
        let sol = &out.solution;
        let steps = sol
            .steps
            .iter()
            .zip(&sol.taus)
            .enumerate()
            .map(|(k, (x, tau))| StepReport {
                interval: [k, k + 1],
                coefficients: x.coeffs().to_vec(),
                tau: tau.clone(),
            })
            .collect();
        let diag = &sol.diagnostics;
        let comparison = if out.companion.is_some() || out.companion_error.is_some() {
            Some(ComparisonReport {
                path: out.companion.as_ref().map(|c| c.path.name().to_string()),
                max_coeff_diff: out.comparison.as_ref().map(|c| c.max_coeff_diff()),
                max_value_diff: out.comparison.as_ref().map(|c| c.max_value_diff()),
                coeff_diff: out
                    .comparison
                    .as_ref()
                    .map_or_else(Vec::new, |c| c.coeff_diff.clone()),
                value_diff: out
                    .comparison
                    .as_ref()
                    .map_or_else(Vec::new, |c| c.value_diff.clone()),
                error: out.companion_error.clone(),
            })
        } else {
            None
        };
        Self {
            problem,
            horizon: out.disc.horizon,
            n: sol.n,
            d: sol.d,
            requested_path: options.path.name().to_string(),
            path: sol.path.name().to_string(),
            order: out.order,
            steps,
            diagnostics: DiagnosticsReport {
                residual: diag.residual,
                relative_residual: diag.relative_residual,
                min_pivot: diag.min_pivot,
                cond_estimate: diag.cond_estimate,
                refined: diag.refined,
                perturbed_residual: out.residual.residual.clone(),
                perturbed_residual_scaled: out.residual.max_relative(),
            },
            errors: out.errors.as_ref().map(|e| ErrorsReport {
                global: e.global,
                per_subinterval: e.per_step.clone(),
                nodes_per_subinterval: e.nodes_per_step,
            }),
            comparison,
            metadata: None,
        }
    }

    pub fn cell(&self) -> CellReport {
        CellReport {
            n: self.n,
            horizon: self.horizon,
            d: self.d,
            path: self.path.clone(),
            status: "ok".into(),
            global_error: self.errors.as_ref().map(|e| e.global),
            per_subinterval_errors: self
                .errors
                .as_ref()
                .map_or_else(Vec::new, |e| e.per_subinterval.clone()),
            residual: Some(self.diagnostics.perturbed_residual_scaled),
            cond_estimate: Some(self.diagnostics.cond_estimate),
        }
    }
}

/// One row of a sweep table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellReport {
    pub n: usize,
    #[serde(rename = "K")]
    pub horizon: usize,
    pub d: usize,
    pub path: String,
    pub status: String,
    pub global_error: Option<f64>,
    pub per_subinterval_errors: Vec<f64>,
    pub residual: Option<f64>,
    pub cond_estimate: Option<f64>,
}

impl CellReport {
    pub fn failed(n: usize, horizon: usize, d: usize, path: &str, message: String) -> Self {
        Self {
            n,
            horizon,
            d,
            path: path.to_string(),
            status: message,
            global_error: None,
            per_subinterval_errors: Vec::new(),
            residual: None,
            cond_estimate: None,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub problem: String,
    pub requested_path: String,
    pub cells: Vec<CellReport>,
}

pub const CSV_HEADER: [&str; 9] = [
    "n",
    "K",
    "d",
    "path",
    "global_error",
    "per_subinterval_errors",
    "residual",
    "cond_estimate",
    "status",
];

fn num(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

pub fn write_csv<W: Write>(w: W, cells: &[CellReport]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for c in cells {
        let errors = c
            .per_subinterval_errors
            .iter()
            .map(f64::to_string)
            .collect::<Vec<_>>()
            .join(";");
        out.write_record([
            c.n.to_string(),
            c.horizon.to_string(),
            c.d.to_string(),
            c.path.clone(),
            num(c.global_error),
            errors,
            num(c.residual),
            num(c.cond_estimate),
            c.status.clone(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}
