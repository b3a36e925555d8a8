//! Piecewise-polynomial solutions: extraction, evaluation and error checks.

use alloc::vec::Vec;

use crate::assemble::{AssemblyPath, PerturbationSpec, TauSystem};
use crate::expr::EvalError;
use crate::linalg::SolveDiagnostics;
use crate::poly::{ChebyshevDegreeError, Poly};
use crate::problem::{DiscretizedProblem, MfdeProblem};

/// Nodes per unit subinterval in error reports.
pub const NODES_PER_STEP: usize = 128;

/// Relative tolerance of the continuity links.
pub const CONTINUITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolutionError {
    #[error("solution vector has length {got}, system order is {want}")]
    Length { got: usize, want: usize },
    #[error("continuity violated at t = {knot}: left {left}, right {right}")]
    Continuity { knot: usize, left: f64, right: f64 },
    #[error("t = {0} is outside [-1, K]")]
    OutOfDomain(f64),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("problem has no analytic solution to compare with")]
    MissingExact,
    #[error("solutions have different shapes")]
    ShapeMismatch,
    #[error(transparent)]
    Chebyshev(#[from] ChebyshevDegreeError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TauSolution {
    /// `X_k` on `s in [0, 1]`, `n + 1` coefficients each.
    pub steps: Vec<Poly>,
    /// Tau parameters per step (`d + 2` for step 0, `d + 1` after).
    pub taus: Vec<Vec<f64>>,
    pub n: usize,
    pub d: usize,
    pub path: AssemblyPath,
    pub diagnostics: SolveDiagnostics,
}

fn l1(p: &Poly) -> f64 {
    p.coeffs().iter().map(|c| c.abs()).sum()
}

/// Route a solved vector into per-step coefficients and taus, then verify
/// continuity, including the links to both boundary functions.
pub fn extract(
    x: &[f64],
    sys: &TauSystem,
    disc: &DiscretizedProblem,
    diagnostics: SolveDiagnostics,
) -> Result<TauSolution, SolutionError> {
    let map = sys.map();
    if x.len() != sys.order() {
        return Err(SolutionError::Length {
            got: x.len(),
            want: sys.order(),
        });
    }
    let steps: Vec<Poly> = (0..map.steps)
        .map(|k| Poly::new((0..=map.n).map(|i| x[map.coeff(k, i)]).collect()))
        .collect();
    let taus = (0..map.steps)
        .map(|k| (0..map.tau_len(k)).map(|i| x[map.tau(k, i)]).collect())
        .collect();
    let sol = TauSolution {
        steps,
        taus,
        n: map.n,
        d: map.d,
        path: sys.path(),
        diagnostics,
    };
    for (knot, left, right) in sol.links(disc) {
        if (left - right).abs() > CONTINUITY_TOL * sol.link_scale(knot) {
            return Err(SolutionError::Continuity { knot, left, right });
        }
    }
    Ok(sol)
}

impl TauSolution {
    pub fn step_count(&self) -> usize {
        self.steps.len()
    }

    /// `(knot, left value, right value)` at `t = 0, 1, ..., K - 1`.
    pub fn links(&self, disc: &DiscretizedProblem) -> Vec<(usize, f64, f64)> {
        let last = self.steps.len();
        let mut out = Vec::with_capacity(last + 1);
        out.push((0, disc.lower_link(), self.steps[0].eval(0.0)));
        for k in 1..last {
            out.push((k, self.steps[k - 1].eval(1.0), self.steps[k].eval(0.0)));
        }
        out.push((last, self.steps[last - 1].eval(1.0), disc.upper_link()));
        out
    }

    /// `1 + sum |coeff|` over the steps meeting at `knot`. The link values
    /// cannot be resolved more finely than this in floating point.
    pub fn link_scale(&self, knot: usize) -> f64 {
        let left = knot
            .checked_sub(1)
            .and_then(|k| self.steps.get(k))
            .map_or(0.0, l1);
        let right = self.steps.get(knot).map_or(0.0, l1);
        1.0 + left.max(right)
    }

    /// `X_k` written in the original variable `t = s + k`.
    pub fn step_in_t(&self, k: usize) -> Poly {
        self.steps[k].compose_affine(1.0, -(k as f64))
    }

    pub fn tau_poly(&self, k: usize) -> Poly {
        Poly::new(self.taus[k].clone())
    }

    /// Value at `t in [-1, K]`: the boundary functions on `[-1, 0]` and
    /// `(K-1, K]`, `X_k(t - k)` on `(k, k+1]`.
    pub fn eval_at(&self, problem: &MfdeProblem, t: f64) -> Result<f64, SolutionError> {
        let last = self.steps.len() as f64;
        if !(-1.0..=last + 1.0).contains(&t) {
            return Err(SolutionError::OutOfDomain(t));
        }
        if t <= 0.0 {
            return Ok(problem.psi1.eval(t)?);
        }
        if t > last {
            return Ok(problem.psi2.eval(t)?);
        }
        let k = libm::ceil(t) as usize - 1;
        Ok(self.steps[k].eval(t - k as f64))
    }

    /// Errors against the analytic solution on `t = k + i/128`, `i = 1..=128`.
    pub fn error_report(&self, problem: &MfdeProblem) -> Result<ErrorReport, SolutionError> {
        let exact = problem.exact.as_ref().ok_or(SolutionError::MissingExact)?;
        let per_step = self
            .steps
            .iter()
            .enumerate()
            .map(|(k, x)| {
                (1..=NODES_PER_STEP).try_fold(0.0f64, |worst, i| {
                    let s = i as f64 / NODES_PER_STEP as f64;
                    let want = exact.eval(k as f64 + s)?;
                    Ok::<_, SolutionError>(worst.max((x.eval(s) - want).abs()))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ErrorReport::new(per_step))
    }

    /// Per step, the coefficients of
    /// `X_k' - a_k X_k - b_k X_{k-1} - c_k X_{k+1} - H_k`.
    pub fn perturbed_residual(
        &self,
        disc: &DiscretizedProblem,
    ) -> Result<PerturbedResidual, SolutionError> {
        let spec = PerturbationSpec::new(self.n, self.d)?;
        let last = self.steps.len();
        let mut residual = Vec::with_capacity(last);
        let mut scale = Vec::with_capacity(last);
        for (k, coeffs) in disc.steps.iter().enumerate() {
            let x = &self.steps[k];
            let prev = if k == 0 {
                &disc.lower
            } else {
                &self.steps[k - 1]
            };
            let next = if k + 1 == last {
                &disc.upper
            } else {
                &self.steps[k + 1]
            };
            let terms = [
                x.derivative(),
                &coeffs.a * x,
                &coeffs.b * prev,
                &coeffs.c * next,
                spec.perturbation(k, &self.taus[k]),
            ];
            let r = &(&(&(&terms[0] - &terms[1]) - &terms[2]) - &terms[3]) - &terms[4];
            residual.push(r.max_abs_coeff());
            scale.push(1.0 + terms.iter().map(Poly::max_abs_coeff).fold(0.0, f64::max));
        }
        Ok(PerturbedResidual { residual, scale })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    /// Max error on `(k, k+1]`.
    pub per_step: Vec<f64>,
    pub global: f64,
    pub nodes_per_step: usize,
}

impl ErrorReport {
    pub fn new(per_step: Vec<f64>) -> Self {
        let global = per_step.iter().copied().fold(0.0, f64::max);
        Self {
            per_step,
            global,
            nodes_per_step: NODES_PER_STEP,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedResidual {
    /// Max coefficient magnitude of the residual polynomial per step.
    pub residual: Vec<f64>,
    /// `1 +` the largest coefficient among the terms that were summed.
    pub scale: Vec<f64>,
}

impl PerturbedResidual {
    pub fn max(&self) -> f64 {
        self.residual.iter().copied().fold(0.0, f64::max)
    }

    /// Largest `residual / scale` over the steps.
    pub fn max_relative(&self) -> f64 {
        self.residual
            .iter()
            .zip(&self.scale)
            .map(|(r, s)| r / s)
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathComparison {
    /// Per step, `max_i |a_i - a'_i|`.
    pub coeff_diff: Vec<f64>,
    /// Per step, max difference of the two pieces on the error grid.
    pub value_diff: Vec<f64>,
}

impl PathComparison {
    pub fn max_coeff_diff(&self) -> f64 {
        self.coeff_diff.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_value_diff(&self) -> f64 {
        self.value_diff.iter().copied().fold(0.0, f64::max)
    }
}

pub fn compare_paths(a: &TauSolution, b: &TauSolution) -> Result<PathComparison, SolutionError> {
    if a.steps.len() != b.steps.len() || a.n != b.n {
        return Err(SolutionError::ShapeMismatch);
    }
    let mut coeff_diff = Vec::with_capacity(a.steps.len());
    let mut value_diff = Vec::with_capacity(a.steps.len());
    for (x, y) in a.steps.iter().zip(&b.steps) {
        coeff_diff.push((x - y).max_abs_coeff());
        value_diff.push(
            (1..=NODES_PER_STEP)
                .map(|i| {
                    let s = i as f64 / NODES_PER_STEP as f64;
                    (x.eval(s) - y.eval(s)).abs()
                })
                .fold(0.0, f64::max),
        );
    }
    Ok(PathComparison {
        coeff_diff,
        value_diff,
    })
}
