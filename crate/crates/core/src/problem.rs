//! Boundary-value problems and their per-step polynomial data.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::expr::{parse, DiffError, EvalError, Expr, ParseDiagnostic};
use crate::poly::{interpolate, Poly};

/// Leading coefficients of `a_k` at or below this magnitude make the
/// canonical recursion unusable (it divides by them).
pub const LEADING_COEFFICIENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProblemError {
    #[error("K must be at least 2, got {0}")]
    Horizon(usize),
    #[error("invalid degrees n = {n}, d = {d} (need n >= 1 and 0 <= d <= n)")]
    Degrees { n: usize, d: usize },
    #[error("{what}: {source}")]
    Eval { what: String, source: EvalError },
    #[error("{what}: {source}")]
    Parse {
        what: String,
        source: ParseDiagnostic,
    },
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error("unknown experiment `{0}` (expected exp1..exp5)")]
    UnknownExperiment(String),
    #[error("experiment {experiment} needs parameter `{name}`")]
    MissingParameter {
        experiment: Experiment,
        name: &'static str,
    },
    #[error("parameter `{name}` = {value} is invalid: {reason}")]
    InvalidParameter {
        name: String,
        value: f64,
        reason: &'static str,
    },
    #[error(
        "leading coefficient of a_{step} is {value:e}; lower d or use d = 0 / the direct assembly"
    )]
    LeadingCoefficient { step: usize, value: f64 },
}

fn eval_err(what: &str) -> impl Fn(EvalError) -> ProblemError + '_ {
    move |source| ProblemError::Eval {
        what: what.to_string(),
        source,
    }
}

/// `x'(t) = a x(t) + b x(t-1) + c x(t+1)` on `(0, K-1]`, with `x = psi1` on
/// `[-1, 0]` and `x = psi2` on `(K-1, K]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MfdeProblem {
    pub a: Expr,
    pub b: Expr,
    pub c: Expr,
    pub psi1: Expr,
    pub psi2: Expr,
    /// `K`: the problem lives on `[-1, K]` and is solved on `(0, K - 1]`.
    pub horizon: usize,
    pub exact: Option<Expr>,
}

impl MfdeProblem {
    pub fn new(
        a: Expr,
        b: Expr,
        c: Expr,
        psi1: Expr,
        psi2: Expr,
        horizon: usize,
        exact: Option<Expr>,
    ) -> Result<Self, ProblemError> {
        if horizon < 2 {
            return Err(ProblemError::Horizon(horizon));
        }
        let k = horizon as f64;
        for i in 0..=32 {
            let frac = i as f64 / 32.0;
            psi1.eval(frac - 1.0).map_err(eval_err("psi1 on [-1, 0]"))?;
            psi2.eval(k - 1.0 + frac)
                .map_err(eval_err("psi2 on [K-1, K]"))?;
        }
        Ok(Self {
            a,
            b,
            c,
            psi1,
            psi2,
            horizon,
            exact,
        })
    }

    /// Parse every function from text.
    pub fn from_strs(
        a: &str,
        b: &str,
        c: &str,
        psi1: &str,
        psi2: &str,
        horizon: usize,
        exact: Option<&str>,
    ) -> Result<Self, ProblemError> {
        let parse_as = |what: &str, s: &str| {
            parse(s).map_err(|source| ProblemError::Parse {
                what: what.to_string(),
                source,
            })
        };
        let exact = exact.map(|s| parse_as("exact", s)).transpose()?;
        Self::new(
            parse_as("a", a)?,
            parse_as("b", b)?,
            parse_as("c", c)?,
            parse_as("psi1", psi1)?,
            parse_as("psi2", psi2)?,
            horizon,
            exact,
        )
    }

    /// Number of unit subintervals `(k, k+1]`, `k = 0..K-2`.
    pub fn step_count(&self) -> usize {
        self.horizon - 1
    }

    /// `|x'(t) - a x(t) - b x(t-1) - c x(t+1)|` for the analytic solution at
    /// each `t`; `None` when no analytic solution is attached.
    pub fn exact_equation_residual(&self, ts: &[f64]) -> Option<Result<Vec<f64>, ProblemError>> {
        let x = self.exact.as_ref()?;
        Some((|| {
            let dx = x.differentiate()?;
            ts.iter()
                .map(|&t| {
                    let e = eval_err("residual of the analytic solution");
                    let lhs = dx.eval(t).map_err(&e)?;
                    let rhs = self.a.eval(t).map_err(&e)? * x.eval(t).map_err(&e)?
                        + self.b.eval(t).map_err(&e)? * x.eval(t - 1.0).map_err(&e)?
                        + self.c.eval(t).map_err(&e)? * x.eval(t + 1.0).map_err(&e)?;
                    Ok((lhs - rhs).abs())
                })
                .collect()
        })())
    }
}

/// The family with known solution `x = e^F`: `a = F'`, `b(t) = -e^{F(t+1)}`,
/// `c(t) = e^{F(t-1)}`. Boundary functions are the solution itself.
pub fn family_from_f(f: &Expr, horizon: usize) -> Result<MfdeProblem, ProblemError> {
    let a = f.differentiate()?;
    let b = -Expr::exp(f.shifted(1.0));
    let c = Expr::exp(f.shifted(-1.0));
    let x = Expr::exp(f.clone());
    MfdeProblem::new(a, b, c, x.clone(), x.clone(), horizon, Some(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Experiment {
    Exp1,
    Exp2,
    Exp3,
    Exp4,
    Exp5,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::Exp1,
        Experiment::Exp2,
        Experiment::Exp3,
        Experiment::Exp4,
        Experiment::Exp5,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Exp1 => "exp1",
            Experiment::Exp2 => "exp2",
            Experiment::Exp3 => "exp3",
            Experiment::Exp4 => "exp4",
            Experiment::Exp5 => "exp5",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = ProblemError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| ProblemError::UnknownExperiment(s.to_string()))
    }
}

/// Numeric parameters of a catalog problem, keyed by name (`K`, `m`, ...).
pub type CatalogParams = BTreeMap<String, f64>;

/// Build one of the five reference problems.
///
/// Every experiment needs `K`. `exp1` needs the rate `m`. `exp5` accepts
/// `Vp`, `fp`, `m`, `fm` and defaults them to `1`, `3/(10 pi)`, `1/2`,
/// `1/(20 pi)`.
pub fn catalog(name: &str, params: &CatalogParams) -> Result<MfdeProblem, ProblemError> {
    let experiment: Experiment = name.parse()?;
    let get = |key: &'static str| {
        params
            .get(key)
            .copied()
            .ok_or(ProblemError::MissingParameter {
                experiment,
                name: key,
            })
    };
    let k_value = get("K")?;
    if libm::trunc(k_value) != k_value || k_value < 2.0 {
        return Err(ProblemError::InvalidParameter {
            name: "K".to_string(),
            value: k_value,
            reason: "must be an integer >= 2",
        });
    }
    let horizon = k_value as usize;
    let parse_known = |s: &str| parse(s).expect("catalog expressions are well formed");

    match experiment {
        Experiment::Exp1 => {
            let m = get("m")?;
            if m == 0.0 {
                return Err(ProblemError::InvalidParameter {
                    name: "m".to_string(),
                    value: m,
                    reason: "must be nonzero",
                });
            }
            family_from_f(&(Expr::Num(m) * Expr::Var), horizon)
        }
        Experiment::Exp2 => {
            let x = parse_known("t^3 - t^2 + t + 5");
            MfdeProblem::new(
                parse_known("(3*t^2 - 2*t + 1) / (t^3 - t^2 + t + 5)"),
                parse_known("-t^3 - 2*t^2 - 2*t - 6"),
                parse_known("t^3 - 4*t^2 + 6*t + 2"),
                x.clone(),
                x.clone(),
                horizon,
                Some(x),
            )
        }
        Experiment::Exp3 => {
            let x = parse_known("sin(t) + exp(-t) + 2");
            MfdeProblem::new(
                parse_known("(cos(t) - exp(-t)) / (sin(t) + exp(-t) + 2)"),
                parse_known("-sin(t + 1) - exp(-t - 1) - 2"),
                parse_known("sin(t - 1) + exp(-t + 1) + 2"),
                x.clone(),
                x.clone(),
                horizon,
                Some(x),
            )
        }
        Experiment::Exp4 => {
            let x = parse_known("exp(1 / sqrt(t + 2))");
            MfdeProblem::new(
                parse_known("-0.5 * (t + 2)^(-3/2)"),
                parse_known("-exp(1 / sqrt(t + 3))"),
                parse_known("exp(1 / sqrt(t + 1))"),
                x.clone(),
                x.clone(),
                horizon,
                Some(x),
            )
        }
        Experiment::Exp5 => {
            use core::f64::consts::PI;
            let or = |key: &'static str, default: f64| params.get(key).copied().unwrap_or(default);
            let vp = or("Vp", 1.0);
            let fp = or("fp", 3.0 / (10.0 * PI));
            let m = or("m", 0.5);
            let fm = or("fm", 1.0 / (20.0 * PI));
            let half = m * vp / 2.0;
            let v = parse_known(&format!(
                "{vp} * sin({} * t) + {half} * cos({} * t) - {half} * cos({} * t) + pi",
                2.0 * PI * fp,
                2.0 * PI * (fp - fm),
                2.0 * PI * (fp + fm),
            ));
            let mut problem = family_from_f(&Expr::ln(v.clone()), horizon)?;
            problem.psi1 = v.clone();
            problem.psi2 = v.clone();
            problem.exact = Some(v);
            Ok(problem)
        }
    }
}

/// Polynomial data of one step on `s in [0, 1]`, each with `d + 1` stored
/// coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCoefficients {
    pub a: Poly,
    pub b: Poly,
    pub c: Poly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedProblem {
    pub horizon: usize,
    /// Degree of every step solution `X_k`.
    pub n: usize,
    /// Common degree of `a_k`, `b_k`, `c_k`; `0` selects the autonomous form.
    pub d: usize,
    pub steps: Vec<StepCoefficients>,
    /// Coefficients of `x_{-1}(s) = psi1(s - 1)`, length `n + 1`.
    pub lower: Poly,
    /// Coefficients of `x_{K-1}(s) = psi2(s + K - 1)`, length `n + 1`.
    pub upper: Poly,
}

impl DiscretizedProblem {
    pub fn step_count(&self) -> usize {
        self.steps.len()
    }

    /// Fails unless `|alpha_d^{(k)}|` clears [`LEADING_COEFFICIENT_TOL`] for
    /// every step (for `d = 0`: unless every `a_k` is nonzero).
    pub fn check_leading_coefficients(&self) -> Result<(), ProblemError> {
        for (step, coeffs) in self.steps.iter().enumerate() {
            let value = coeffs.a.coeff(self.d);
            let bad = if self.d == 0 {
                value == 0.0
            } else {
                value.abs() <= LEADING_COEFFICIENT_TOL
            };
            if bad {
                return Err(ProblemError::LeadingCoefficient { step, value });
            }
        }
        Ok(())
    }

    /// Sum of the boundary coefficients, `x_{-1}(1) = psi1(0)`.
    pub fn lower_link(&self) -> f64 {
        self.lower.coeffs().iter().sum()
    }

    /// `x_{K-1}(0) = psi2(K - 1)`.
    pub fn upper_link(&self) -> f64 {
        self.upper.coeff(0)
    }
}

/// Degree-`degree` representation of `e(s + offset)` on `[0, 1]`: exact
/// rebasing when `e` is already such a polynomial, Chebyshev–Gauss
/// interpolation otherwise.
pub fn approximate(e: &Expr, offset: f64, degree: usize) -> Result<Poly, EvalError> {
    if let Some(p) = e.to_poly() {
        if p.degree().is_none_or(|deg| deg <= degree) {
            let trimmed = p.padded(p.degree().map_or(1, |deg| deg + 1));
            return Ok(trimmed.compose_affine(1.0, offset).padded(degree + 1));
        }
    }
    interpolate(|s| e.eval(s + offset), degree)
}

/// Per-step polynomial data for solution degree `n` and coefficient degree
/// `d`.
pub fn discretize(
    problem: &MfdeProblem,
    n: usize,
    d: usize,
) -> Result<DiscretizedProblem, ProblemError> {
    if n < 1 || d > n {
        return Err(ProblemError::Degrees { n, d });
    }
    let steps = (0..problem.step_count())
        .map(|k| {
            let offset = k as f64;
            Ok(StepCoefficients {
                a: approximate(&problem.a, offset, d).map_err(eval_err("a"))?,
                b: approximate(&problem.b, offset, d).map_err(eval_err("b"))?,
                c: approximate(&problem.c, offset, d).map_err(eval_err("c"))?,
            })
        })
        .collect::<Result<Vec<_>, ProblemError>>()?;
    let lower = approximate(&problem.psi1, -1.0, n).map_err(eval_err("psi1"))?;
    let upper =
        approximate(&problem.psi2, problem.horizon as f64 - 1.0, n).map_err(eval_err("psi2"))?;
    Ok(DiscretizedProblem {
        horizon: problem.horizon,
        n,
        d,
        steps,
        lower,
        upper,
    })
}
