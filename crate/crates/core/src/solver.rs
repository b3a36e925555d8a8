//! One-call pipeline: discretize, assemble, solve, extract, report.

use alloc::string::{String, ToString};
use core::fmt;
use core::str::FromStr;

use crate::assemble::{
    assemble_canonical, assemble_direct, AssembleError, AssemblyPath, TauSystem,
};
use crate::linalg::{lu_solve, LinalgError};
use crate::problem::{discretize, DiscretizedProblem, MfdeProblem, ProblemError};
use crate::solution::{
    compare_paths, extract, ErrorReport, PathComparison, PerturbedResidual, SolutionError,
    TauSolution,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PathChoice {
    Direct,
    Canonical,
    /// Canonical when `d >= 1` and every leading coefficient of `a_k` is
    /// usable, direct otherwise.
    #[default]
    Auto,
}

impl PathChoice {
    pub fn name(self) -> &'static str {
        match self {
            PathChoice::Direct => "direct",
            PathChoice::Canonical => "canonical",
            PathChoice::Auto => "auto",
        }
    }
}

impl fmt::Display for PathChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown assembly path `{0}` (expected direct, canonical or auto)")]
pub struct ParsePathError(pub String);

impl FromStr for PathChoice {
    type Err = ParsePathError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "direct" => Ok(PathChoice::Direct),
            "canonical" => Ok(PathChoice::Canonical),
            "auto" => Ok(PathChoice::Auto),
            other => Err(ParsePathError(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub n: usize,
    pub d: usize,
    pub path: PathChoice,
    /// Scale every row to unit max-norm before factoring. Canonical
    /// systems are always equilibrated.
    pub equilibrate: bool,
    /// Also solve with the other assembly and compare.
    pub compare_paths: bool,
}

impl SolverOptions {
    pub fn new(n: usize, d: usize) -> Self {
        Self {
            n,
            d,
            path: PathChoice::Auto,
            equilibrate: true,
            compare_paths: false,
        }
    }

    pub fn with_path(mut self, path: PathChoice) -> Self {
        self.path = path;
        self
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Assemble(#[from] AssembleError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Solution(#[from] SolutionError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub solution: TauSolution,
    pub disc: DiscretizedProblem,
    pub order: usize,
    /// Present when the problem carries an analytic solution.
    pub errors: Option<ErrorReport>,
    pub residual: PerturbedResidual,
    /// The solve with the other assembly, when one ran.
    pub companion: Option<TauSolution>,
    pub comparison: Option<PathComparison>,
    /// Why the companion solve failed, if it did.
    pub companion_error: Option<String>,
}

/// The assembly `choice` resolves to for this discretization.
pub fn resolve_path(disc: &DiscretizedProblem, choice: PathChoice) -> AssemblyPath {
    match choice {
        PathChoice::Direct => AssemblyPath::Direct,
        PathChoice::Canonical if disc.d == 0 => AssemblyPath::Autonomous,
        PathChoice::Canonical => AssemblyPath::Canonical,
        PathChoice::Auto => {
            if disc.d >= 1 && disc.check_leading_coefficients().is_ok() {
                AssemblyPath::Canonical
            } else {
                AssemblyPath::Direct
            }
        }
    }
}

fn run(
    disc: &DiscretizedProblem,
    path: AssemblyPath,
    equilibrate: bool,
) -> Result<(TauSolution, TauSystem), SolveError> {
    let sys = match path {
        AssemblyPath::Direct => assemble_direct(disc)?,
        AssemblyPath::Canonical | AssemblyPath::Autonomous => {
            disc.check_leading_coefficients()?;
            assemble_canonical(disc)?
        }
    };
    let equilibrate = equilibrate || path != AssemblyPath::Direct;
    let (x, diag) = if equilibrate {
        lu_solve(&sys.equilibrated())?
    } else {
        lu_solve(&sys)?
    };
    let sol = extract(&x, &sys, disc, diag)?;
    Ok((sol, sys))
}

pub fn solve(problem: &MfdeProblem, options: &SolverOptions) -> Result<SolveOutcome, SolveError> {
    let disc = discretize(problem, options.n, options.d)?;
    let path = resolve_path(&disc, options.path);
    log::debug!(
        "n = {}, d = {}, K = {}: {path} assembly",
        disc.n,
        disc.d,
        disc.horizon
    );
    let (solution, sys) = run(&disc, path, options.equilibrate)?;

    let (mut companion, mut comparison, mut companion_error) = (None, None, None);
    if path != AssemblyPath::Direct || options.compare_paths {
        let other = if path == AssemblyPath::Direct {
            if disc.d == 0 {
                AssemblyPath::Autonomous
            } else {
                AssemblyPath::Canonical
            }
        } else {
            AssemblyPath::Direct
        };
        match run(&disc, other, options.equilibrate) {
            Ok((sol, _)) => {
                comparison = Some(compare_paths(&solution, &sol)?);
                companion = Some(sol);
            }
            Err(e) => {
                log::warn!("{other} assembly failed for comparison: {e}");
                companion_error = Some(e.to_string());
            }
        }
    }

    let errors = match problem.exact {
        Some(_) => Some(solution.error_report(problem)?),
        None => None,
    };
    let residual = solution.perturbed_residual(&disc)?;
    Ok(SolveOutcome {
        solution,
        order: sys.order(),
        disc,
        errors,
        residual,
        companion,
        comparison,
        companion_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{catalog, CatalogParams};

    fn params(pairs: &[(&str, f64)]) -> CatalogParams {
        pairs.iter().map(|(k, v)| (String::from(*k), *v)).collect()
    }

    #[test]
    fn path_names_round_trip() {
        for p in [PathChoice::Direct, PathChoice::Canonical, PathChoice::Auto] {
            assert_eq!(p.name().parse::<PathChoice>(), Ok(p));
        }
        assert!("sideways".parse::<PathChoice>().is_err());
        assert_eq!(PathChoice::default(), PathChoice::Auto);
    }

    #[test]
    fn auto_resolution() {
        let exp1 = catalog("exp1", &params(&[("K", 3.0), ("m", 0.7)])).unwrap();
        let exp2 = catalog("exp2", &params(&[("K", 3.0)])).unwrap();
        let d0 = discretize(&exp1, 7, 0).unwrap();
        assert_eq!(resolve_path(&d0, PathChoice::Auto), AssemblyPath::Direct);
        assert_eq!(
            resolve_path(&d0, PathChoice::Canonical),
            AssemblyPath::Autonomous
        );
        let flat = discretize(&exp1, 7, 2).unwrap();
        assert_eq!(resolve_path(&flat, PathChoice::Auto), AssemblyPath::Direct);
        let d3 = discretize(&exp2, 3, 3).unwrap();
        assert_eq!(resolve_path(&d3, PathChoice::Auto), AssemblyPath::Canonical);
        assert_eq!(resolve_path(&d3, PathChoice::Direct), AssemblyPath::Direct);
    }

    #[test]
    fn canonical_solves_carry_a_comparison() {
        let exp2 = catalog("exp2", &params(&[("K", 3.0)])).unwrap();
        let out = solve(&exp2, &SolverOptions::new(3, 3)).unwrap();
        assert_eq!(out.solution.path, AssemblyPath::Canonical);
        assert_eq!(out.order, 17);
        assert_eq!(out.companion.as_ref().unwrap().path, AssemblyPath::Direct);
        assert!(out.comparison.unwrap().max_value_diff().is_finite());
        assert!(out.errors.unwrap().global < 0.05);

        let direct = solve(
            &exp2,
            &SolverOptions::new(3, 3).with_path(PathChoice::Direct),
        )
        .unwrap();
        assert!(direct.companion.is_none());
        assert!(direct.residual.max_relative() <= 1e-9);
    }

    #[test]
    fn explicit_canonical_rejects_flat_operator() {
        let exp1 = catalog("exp1", &params(&[("K", 3.0), ("m", 0.7)])).unwrap();
        let err = solve(
            &exp1,
            &SolverOptions::new(7, 2).with_path(PathChoice::Canonical),
        )
        .unwrap_err();
        assert!(
            matches!(
                err,
                SolveError::Problem(ProblemError::LeadingCoefficient { .. })
            ),
            "{err}"
        );
    }

    #[test]
    fn problems_without_exact_solution_still_solve() {
        let p = MfdeProblem::from_strs("1", "-1", "0.5", "exp(t)", "1", 4, None).unwrap();
        let out = solve(&p, &SolverOptions::new(6, 1)).unwrap();
        assert!(out.errors.is_none());
        assert_eq!(out.solution.step_count(), 3);
    }
}
