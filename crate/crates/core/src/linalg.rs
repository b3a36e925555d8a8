//! Dense LU with partial pivoting, one step of iterative refinement and a
//! 1-norm condition estimate.

use alloc::vec;
use alloc::vec::Vec;

use crate::assemble::TauSystem;

/// Pivots below this fraction of `||A||_inf` count as singular.
pub const SINGULAR_PIVOT_RATIO: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix is singular to working precision at column {column} (pivot {pivot:e})")]
    Singular { column: usize, pivot: f64 },
    #[error("matrix or right-hand side contains non-finite entries")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveDiagnostics {
    /// `||Ax - b||_inf`.
    pub residual: f64,
    /// `||Ax - b||_inf / (||A||_inf ||x||_inf + ||b||_inf)`.
    pub relative_residual: f64,
    pub min_pivot: f64,
    /// Estimate of `||A||_1 ||A^{-1}||_1`.
    pub cond_estimate: f64,
    /// Whether the refinement step was kept.
    pub refined: bool,
    /// Wall-clock time of factor + solve; only measured with the `std`
    /// feature.
    pub elapsed: Option<core::time::Duration>,
}

/// `PA = LU`, stored compactly row-major.
#[derive(Debug, Clone)]
pub struct LuFactors {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
    min_pivot: f64,
}

fn inf_norm(a: &[f64], n: usize) -> f64 {
    a.chunks(n.max(1))
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn one_norm(a: &[f64], n: usize) -> f64 {
    let mut cols = vec![0.0; n];
    for row in a.chunks(n.max(1)) {
        for (c, v) in cols.iter_mut().zip(row) {
            *c += v.abs();
        }
    }
    cols.into_iter().fold(0.0, f64::max)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

impl LuFactors {
    pub fn factor(a: &[f64], n: usize) -> Result<Self, LinalgError> {
        assert_eq!(a.len(), n * n);
        if a.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        let threshold = SINGULAR_PIVOT_RATIO * inf_norm(a, n);
        let mut lu = a.to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut min_pivot = f64::INFINITY;
        for k in 0..n {
            let (p, pivot) =
                (k..n)
                    .map(|i| (i, lu[i * n + k].abs()))
                    .fold(
                        (k, -1.0),
                        |best, cur| if cur.1 > best.1 { cur } else { best },
                    );
            if !(pivot >= threshold) || pivot == 0.0 {
                return Err(LinalgError::Singular { column: k, pivot });
            }
            min_pivot = min_pivot.min(pivot);
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    lu.swap(p * n + j, k * n + j);
                }
            }
            let (head, tail) = lu.split_at_mut((k + 1) * n);
            let pivot_row = &head[k * n..];
            let diag = pivot_row[k];
            for row in tail.chunks_mut(n) {
                let factor = row[k] / diag;
                row[k] = factor;
                if factor != 0.0 {
                    for (x, &y) in row[k + 1..].iter_mut().zip(&pivot_row[k + 1..]) {
                        *x -= factor * y;
                    }
                }
            }
        }
        Ok(Self {
            n,
            lu,
            perm,
            min_pivot: if n == 0 { 0.0 } else { min_pivot },
        })
    }

    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    /// Solves `Ax = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s: f64 = row.iter().zip(&x[..i]).map(|(l, y)| l * y).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n..(i + 1) * n];
            let s: f64 = row[i + 1..]
                .iter()
                .zip(&x[i + 1..])
                .map(|(u, y)| u * y)
                .sum();
            x[i] = (x[i] - s) / row[i];
        }
        x
    }

    /// Solves `A^T x = b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        // U^T z = b, then L^T y = z, then x = P^T y.
        let mut z = b.to_vec();
        for i in 0..n {
            z[i] /= self.lu[i * n + i];
            let zi = z[i];
            for j in i + 1..n {
                z[j] -= self.lu[i * n + j] * zi;
            }
        }
        for i in (0..n).rev() {
            let zi = z[i];
            for j in 0..i {
                z[j] -= self.lu[i * n + j] * zi;
            }
        }
        let mut x = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = z[i];
        }
        x
    }

    /// Hager's estimate of `||A^{-1}||_1`.
    pub fn inverse_one_norm_estimate(&self) -> f64 {
        let n = self.n;
        if n == 0 {
            return 0.0;
        }
        let mut x = vec![1.0 / n as f64; n];
        let mut estimate = 0.0;
        for _ in 0..5 {
            let y = self.solve(&x);
            let norm: f64 = y.iter().map(|v| v.abs()).sum();
            if norm <= estimate {
                break;
            }
            estimate = norm;
            let sign: Vec<f64> = y
                .iter()
                .map(|&v| if v >= 0.0 { 1.0 } else { -1.0 })
                .collect();
            let z = self.solve_transpose(&sign);
            let (j, zmax) = z.iter().enumerate().fold((0, -1.0), |best, (i, v)| {
                if v.abs() > best.1 {
                    (i, v.abs())
                } else {
                    best
                }
            });
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
            if zmax <= ztx {
                break;
            }
            x = vec![0.0; n];
            x[j] = 1.0;
        }
        estimate
    }
}

fn residual(a: &[f64], n: usize, x: &[f64], b: &[f64]) -> Vec<f64> {
    a.chunks(n.max(1))
        .zip(b)
        .map(|(row, bi)| bi - row.iter().zip(x).map(|(p, q)| p * q).sum::<f64>())
        .take(n)
        .collect()
}

/// Solve a dense square system given as row-major `a` and `b`.
pub fn solve_dense(a: &[f64], b: &[f64]) -> Result<(Vec<f64>, SolveDiagnostics), LinalgError> {
    #[cfg(feature = "std")]
    let start = std::time::Instant::now();

    let n = b.len();
    if b.iter().any(|v| !v.is_finite()) {
        return Err(LinalgError::NonFinite);
    }
    let lu = LuFactors::factor(a, n)?;
    let mut x = lu.solve(b);
    let mut r = residual(a, n, &x, b);
    let correction = lu.solve(&r);
    let candidate: Vec<f64> = x.iter().zip(&correction).map(|(p, q)| p + q).collect();
    let r2 = residual(a, n, &candidate, b);
    let refined = max_abs(&r2) < max_abs(&r);
    if refined {
        x = candidate;
        r = r2;
    }
    let res = max_abs(&r);
    let denom = inf_norm(a, n) * max_abs(&x) + max_abs(b);
    let relative = if denom > 0.0 { res / denom } else { 0.0 };
    let cond = one_norm(a, n) * lu.inverse_one_norm_estimate();

    #[cfg(feature = "std")]
    let elapsed = Some(start.elapsed());
    #[cfg(not(feature = "std"))]
    let elapsed = None;

    let diag = SolveDiagnostics {
        residual: res,
        relative_residual: relative,
        min_pivot: lu.min_pivot(),
        cond_estimate: cond,
        refined,
        elapsed,
    };
    Ok((x, diag))
}

pub fn lu_solve(sys: &TauSystem) -> Result<(Vec<f64>, SolveDiagnostics), LinalgError> {
    solve_dense(sys.matrix(), sys.rhs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn identity() {
        let b = [1.0, -2.0, 3.5];
        let mut a = vec![0.0; 9];
        for i in 0..3 {
            a[i * 4] = 1.0;
        }
        let (x, d) = solve_dense(&a, &b).unwrap();
        assert_eq!(x, b);
        assert_eq!(d.relative_residual, 0.0);
        assert_eq!(d.min_pivot, 1.0);
        assert!((d.cond_estimate - 1.0).abs() < 1e-15);
    }

    #[test]
    fn diagonal() {
        let sys = TauSystem::from_dense(vec![2.0, 0.0, 0.0, 4.0], vec![2.0, 8.0]);
        let (x, d) = lu_solve(&sys).unwrap();
        assert_eq!(x, [1.0, 2.0]);
        assert!((d.cond_estimate - 2.0).abs() < 1e-15);
        assert_eq!(d.min_pivot, 2.0);
    }

    #[test]
    fn singular_reports_column() {
        let a = [1.0, 2.0, 0.0, 2.0, 4.0, 0.0, 0.0, 0.0, 1.0];
        match solve_dense(&a, &[1.0, 2.0, 3.0]) {
            Err(LinalgError::Singular { column, .. }) => assert_eq!(column, 1),
            other => panic!("{other:?}"),
        }
        let a = [1.0, 0.0, 0.0, 1e-14];
        assert!(matches!(
            solve_dense(&a, &[1.0, 1.0]),
            Err(LinalgError::Singular { column: 1, .. })
        ));
        assert_eq!(
            solve_dense(&[f64::NAN], &[1.0]).unwrap_err(),
            LinalgError::NonFinite
        );
    }

    fn random_system(rng: &mut impl Rng, n: usize) -> (Vec<f64>, Vec<f64>) {
        let mut a: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for i in 0..n {
            a[i * n + i] += n as f64 * 0.5;
        }
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        (a, x)
    }

    #[test]
    fn random_well_conditioned_systems() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(17);
        for n in [1, 2, 5, 20, 80, 200] {
            let (a, want) = random_system(&mut rng, n);
            let b: Vec<f64> = a
                .chunks(n)
                .map(|row| row.iter().zip(&want).map(|(p, q)| p * q).sum())
                .collect();
            let (x, d) = solve_dense(&a, &b).unwrap();
            let err = x
                .iter()
                .zip(&want)
                .map(|(p, q)| (p - q).abs())
                .fold(0.0, f64::max);
            assert!(err <= 1e-8 * max_abs(&want), "n={n}: {err:e}");
            // Hager's method bounds ||A^{-1}||_1 from below.
            assert!(d.cond_estimate > 0.0 && d.cond_estimate.is_finite());
            assert!(d.relative_residual < 1e-14);
        }
    }

    #[test]
    fn refinement_never_worsens_residual() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(23);
        for n in [3, 10, 40] {
            let (a, _) = random_system(&mut rng, n);
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let lu = LuFactors::factor(&a, n).unwrap();
            let plain = max_abs(&residual(&a, n, &lu.solve(&b), &b));
            let (_, d) = solve_dense(&a, &b).unwrap();
            assert!(d.residual <= plain);
        }
    }

    #[test]
    fn transpose_solve() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(29);
        let n = 12;
        let (a, want) = random_system(&mut rng, n);
        let b: Vec<f64> = (0..n)
            .map(|j| (0..n).map(|i| a[i * n + j] * want[i]).sum())
            .collect();
        let lu = LuFactors::factor(&a, n).unwrap();
        let x = lu.solve_transpose(&b);
        for (p, q) in x.iter().zip(&want) {
            assert!((p - q).abs() < 1e-10);
        }
    }

    #[test]
    fn condition_estimate_is_close_on_small_matrices() {
        // [[1, 1], [0, 1e-3]]: 1-norm 1.001, inverse [[1, -1000], [0, 1000]] with 1-norm 2000.
        let a = [1.0, 1.0, 0.0, 1e-3];
        let (_, d) = solve_dense(&a, &[1.0, 1.0]).unwrap();
        assert!((d.cond_estimate - 1.001 * 2000.0).abs() < 1e-6);
    }

    #[cfg(feature = "std")]
    #[test]
    fn timing_is_recorded() {
        let (_, d) = solve_dense(&[3.0], &[6.0]).unwrap();
        assert!(d.elapsed.is_some());
    }
}
