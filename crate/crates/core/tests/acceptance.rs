//! Acceptance criteria. Runs without the libtest harness so every criterion
//! prints exactly one PASS/FAIL line; exits nonzero if any fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use mfde_tau_core::canonical::{apply_operator, autonomous_q, CanonicalTable};
use mfde_tau_core::poly::chebyshev_shifted;
use mfde_tau_core::problem::{catalog, family_from_f, CatalogParams};
use mfde_tau_core::solution::CONTINUITY_TOL;
use mfde_tau_core::{
    parse, solve, AssemblyPath, MfdeProblem, PathChoice, Poly, SolveOutcome, SolverOptions,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;

fn params(pairs: &[(&str, f64)]) -> CatalogParams {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), *v))
        .collect::<BTreeMap<_, _>>()
}

fn run(
    name: &str,
    pairs: &[(&str, f64)],
    n: usize,
    d: usize,
    path: PathChoice,
) -> Result<(SolveOutcome, Duration), String> {
    let p = catalog(name, &params(pairs)).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let out = solve(&p, &SolverOptions::new(n, d).with_path(path)).map_err(|e| e.to_string())?;
    Ok((out, start.elapsed()))
}

fn check(ok: bool, msg: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg)
    }
}

fn global(out: &SolveOutcome) -> f64 {
    out.errors
        .as_ref()
        .expect("catalog problems have exact solutions")
        .global
}

fn exp1_table() -> Outcome {
    let cells: [(f64, usize, usize, f64); 6] = [
        (0.7, 3, 9, 1e-8),
        (0.7, 3, 10, 1e-8),
        (0.7, 3, 11, 1e-8),
        (0.7, 3, 12, 1e-8),
        (0.7, 10, 10, 1e-6),
        (2.0, 3, 12, 1e-9),
    ];
    let mut notes = Vec::new();
    for (m, k, n, tol) in cells {
        let (out, time) = run("exp1", &[("K", k as f64), ("m", m)], n, 0, PathChoice::Auto)?;
        let err = global(&out);
        let cell = format!(
            "m={m} K={k} n={n}: {err:.3e} ({}, {:.0?})",
            out.solution.path, time
        );
        check(err <= tol, format!("{cell} exceeds {tol:e}"))?;
        check(time < Duration::from_secs(1), format!("{cell} too slow"))?;
        notes.push(cell);
    }
    Ok(notes.join("; "))
}

fn exp2_table() -> Outcome {
    let (out, _) = run("exp2", &[("K", 3.0)], 3, 3, PathChoice::Auto)?;
    check(
        out.solution.path == AssemblyPath::Canonical,
        format!("auto resolved to {}", out.solution.path),
    )?;
    let e = &out.errors.as_ref().unwrap().per_step;
    check(
        (5e-3..=1e-1).contains(&e[0]),
        format!("(0,1] error {:.3e}", e[0]),
    )?;
    check(
        (5e-3..=1.2e-1).contains(&e[1]),
        format!("(1,2] error {:.3e}", e[1]),
    )?;
    let x0 = out.solution.steps[0].coeffs();
    for (got, want) in x0.iter().zip([5.00, 0.99, -0.97, 1.00]) {
        check((got - want).abs() <= 0.05, format!("X_0 = {x0:?}"))?;
    }
    Ok(format!(
        "canonical: errors {:.3e}, {:.3e}; X_0 = [{:.3}, {:.3}, {:.3}, {:.3}]",
        e[0], e[1], x0[0], x0[1], x0[2], x0[3]
    ))
}

fn exp3_table() -> Outcome {
    let mut notes = Vec::new();
    for (n, reference) in [(8, 2.721e-4), (11, 2.553e-5)] {
        let (out, _) = run("exp3", &[("K", 5.0)], n, 8, PathChoice::Canonical)?;
        let report = out.errors.as_ref().unwrap();
        for (k, e) in report.per_step.iter().enumerate() {
            check(
                *e <= 5e-3,
                format!("n={n}: error {e:.3e} on ({k},{}]", k + 1),
            )?;
        }
        let ratio = report.global / reference;
        check(
            (1.0 / 50.0..=50.0).contains(&ratio),
            format!(
                "n={n}: global {:.3e} vs reference {reference:e}",
                report.global
            ),
        )?;
        notes.push(format!(
            "n={n}: global {:.3e} (reference {reference:.3e})",
            report.global
        ));
    }
    Ok(notes.join("; "))
}

fn exp4_long() -> Outcome {
    let (out, time) = run("exp4", &[("K", 29.0)], 10, 10, PathChoice::Auto)?;
    let err = global(&out);
    check(err <= 5e-3, format!("global {err:.3e}"))?;
    check(time < Duration::from_secs(30), format!("took {time:.1?}"))?;
    Ok(format!(
        "global {err:.3e} ({}, {time:.1?})",
        out.solution.path
    ))
}

fn exp5_large() -> Outcome {
    let (out, time) = run("exp5", &[("K", 101.0)], 7, 6, PathChoice::Auto)?;
    let err = global(&out);
    check(out.order == 1501, format!("order {}", out.order))?;
    check(err <= 1e-2, format!("global {err:.3e}"))?;
    check(time < Duration::from_secs(60), format!("took {time:.1?}"))?;
    Ok(format!(
        "order {}, global {err:.3e} ({}, {time:.1?})",
        out.order, out.solution.path
    ))
}

fn poly_text(coeffs: &[f64]) -> String {
    coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| format!("({c}) * t^{i}"))
        .collect::<Vec<_>>()
        .join(" + ")
}

fn random_poly(rng: &mut StdRng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-2.0..2.0)).collect()
}

fn direct_properties() -> Outcome {
    let mut rng = StdRng::seed_from_u64(2024);
    let mut worst_residual = 0.0f64;
    let mut worst_link = 0.0f64;
    for case in 0..50 {
        let k = rng.gen_range(2..=5usize);
        let d = rng.gen_range(1..=3usize);
        let n = rng.gen_range(d..=8usize);
        let mut a = random_poly(&mut rng, d + 1);
        if a[d].abs() < 0.5 {
            a[d] = if a[d] < 0.0 { -0.5 } else { 0.5 } + a[d];
        }
        let b = random_poly(&mut rng, d + 1);
        let c = random_poly(&mut rng, d + 1);
        let psi1 = random_poly(&mut rng, n + 1);
        let psi2 = random_poly(&mut rng, n + 1);
        let p = MfdeProblem::from_strs(
            &poly_text(&a),
            &poly_text(&b),
            &poly_text(&c),
            &poly_text(&psi1),
            &poly_text(&psi2),
            k,
            None,
        )
        .map_err(|e| e.to_string())?;
        let out = solve(&p, &SolverOptions::new(n, d).with_path(PathChoice::Direct))
            .map_err(|e| format!("case {case}: {e}"))?;
        check(
            out.order == (n + d + 1) * (k - 1) + k,
            format!("case {case}: order {}", out.order),
        )?;
        let rel = out.residual.max_relative();
        worst_residual = worst_residual.max(rel);
        check(
            rel <= 1e-9,
            format!("case {case}: perturbed residual {rel:e}"),
        )?;
        for (knot, left, right) in out.solution.links(&out.disc) {
            let gap = (left - right).abs() / out.solution.link_scale(knot);
            worst_link = worst_link.max(gap);
            check(
                gap <= CONTINUITY_TOL,
                format!("case {case}: link at {knot} off by {gap:e}"),
            )?;
        }
    }
    Ok(format!(
        "50 problems; worst scaled residual {worst_residual:.1e}, worst scaled link {worst_link:.1e}"
    ))
}

fn canonical_machinery() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    for case in 0..100 {
        let d = rng.gen_range(1..=3usize);
        let mut alpha: Vec<f64> = (0..=d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let lead = rng.gen_range(0.5..2.0);
        alpha[d] = if rng.gen_bool(0.5) { lead } else { -lead };
        let a = Poly::new(alpha);
        let table = CanonicalTable::build(0, &a, 10).map_err(|e| e.to_string())?;
        for m in 0..=10 {
            let q = table.entry(m);
            check(
                q.degree() == Some(m),
                format!("case {case}: Q_{} has degree {:?}", d + m, q.degree()),
            )?;
            let r = table.applied_residual(&a, m);
            let scale = 1.0 + q.max_abs_coeff() * (1.0 + a.max_abs_coeff()) * (d + m) as f64;
            for i in d..r.len() {
                check(
                    r.coeff(i).abs() <= 1e-9 * scale,
                    format!(
                        "case {case}, m={m}: residual has s^{i} coefficient {:e}",
                        r.coeff(i)
                    ),
                )?;
            }
        }
    }
    let mut worst = 0.0f64;
    for a in [-0.5, 0.5, 1.0, 2.0] {
        for m in 0..=10 {
            let q = autonomous_q(a, m).map_err(|e| e.to_string())?;
            let img = apply_operator(&Poly::constant(a), &q);
            let scale = 1.0 + q.max_abs_coeff() * a.abs().max(1.0);
            for i in 0..img.len().max(m + 1) {
                let want = if i == m { 1.0 } else { 0.0 };
                let off = (img.coeff(i) - want).abs() / scale;
                worst = worst.max(off);
                check(
                    off <= 1e-10,
                    format!("a={a}, m={m}: D[Q_m] off by {off:e} at s^{i}"),
                )?;
            }
        }
    }
    Ok(format!(
        "100 random operators; autonomous worst scaled defect {worst:.1e}"
    ))
}

fn chebyshev() -> Outcome {
    let mut worst = 0.0f64;
    for n in 0..=12usize {
        let t = chebyshev_shifted(n).map_err(|e| e.to_string())?;
        for i in 0..1000 {
            let s = i as f64 / 999.0;
            let want = (n as f64 * (2.0 * s - 1.0).clamp(-1.0, 1.0).acos()).cos();
            let off = (t.eval(s) - want).abs();
            worst = worst.max(off);
            check(off <= 1e-9, format!("T*_{n}({s}) off by {off:e}"))?;
        }
        if n >= 1 {
            let lead = t.coeff(n);
            check(
                lead == 2f64.powi(2 * n as i32 - 1),
                format!("T*_{n} leads with {lead}"),
            )?;
        }
    }
    Ok(format!(
        "n <= 12, worst deviation {worst:.1e}, leading coefficients exact"
    ))
}

fn dual_path() -> Outcome {
    let configs: [(&str, &[(&str, f64)], usize, usize); 5] = [
        ("exp1", &[("K", 3.0), ("m", 0.7)], 7, 0),
        ("exp2", &[("K", 3.0)], 3, 3),
        ("exp3", &[("K", 5.0)], 8, 8),
        ("exp4", &[("K", 3.0)], 10, 10),
        ("exp5", &[("K", 101.0)], 7, 6),
    ];
    let mut notes = Vec::new();
    for (name, pairs, n, d) in configs {
        let (out, _) = run(name, pairs, n, d, PathChoice::Canonical)?;
        let cmp = out
            .comparison
            .as_ref()
            .ok_or_else(|| format!("{name}: no comparison ({:?})", out.companion_error))?;
        let diff = cmp.max_value_diff();
        check(diff.is_finite(), format!("{name}: non-finite comparison"))?;
        if d == 0 {
            check(
                diff <= 1e-8,
                format!("{name}: autonomous paths differ by {diff:e}"),
            )?;
        }
        notes.push(format!("{name} {diff:.1e}"));
    }
    Ok(format!(
        "max value difference per experiment: {}",
        notes.join(", ")
    ))
}

fn generated_solutions() -> Outcome {
    let mut rng = StdRng::seed_from_u64(31);
    let mut forms: Vec<String> = (0..6)
        .map(|_| {
            let deg = rng.gen_range(0..=3usize);
            poly_text(
                &(0..=deg)
                    .map(|_| rng.gen_range(-0.3..0.3))
                    .collect::<Vec<_>>(),
            )
        })
        .collect();
    forms.extend(
        [
            "ln(t^3 - t^2 + t + 5)",
            "ln(sin(t) + exp(-t) + 2)",
            "1 / sqrt(t + 2)",
            "ln(sin(0.6 * t) + 0.25 * cos(0.5 * t) - 0.25 * cos(0.7 * t) + pi)",
        ]
        .map(String::from),
    );
    let mut worst = 0.0f64;
    for text in &forms {
        let f = parse(text).map_err(|e| e.to_string())?;
        let p = family_from_f(&f, 3).map_err(|e| e.to_string())?;
        let ts: Vec<f64> = (0..50).map(|_| rng.gen_range(0.0..2.0)).collect();
        let res = p
            .exact_equation_residual(&ts)
            .unwrap()
            .map_err(|e| e.to_string())?;
        let r = res.iter().copied().fold(0.0, f64::max);
        worst = worst.max(r);
        check(r <= 1e-9, format!("F = {text}: residual {r:e}"))?;
    }
    Ok(format!(
        "{} generators, worst residual {worst:.1e}",
        forms.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("exp1 error bands", exp1_table),
        ("exp2 errors and coefficients", exp2_table),
        ("exp3 per-step and global errors", exp3_table),
        ("exp4 on (0,28]", exp4_long),
        ("exp5 order and error", exp5_large),
        ("direct-path property suite", direct_properties),
        ("canonical machinery", canonical_machinery),
        ("shifted Chebyshev generation", chebyshev),
        ("dual-path report", dual_path),
        ("generated exact solutions", generated_solutions),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(f))
            .unwrap_or_else(|panic| Err(format!("panicked: {panic:?}")));
        match result {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
