//! Dense power-basis polynomials on the reference interval `[0, 1]`.
//!
//! Every per-step quantity of the segmented Tau method (coefficient
//! functions, boundary data, step solutions, canonical polynomials) is a
//! polynomial in the local variable `s`, stored here in ascending powers.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

/// Coefficients below this fraction of the largest one are ignored by
/// [`Poly::degree`].
pub const DEGREE_TRIM_RATIO: f64 = 1e-14;

/// Largest degree for which every coefficient of `T*_n` is an integer that
/// a 64-bit float represents exactly.
pub const CHEBYSHEV_EXACT_DEGREE: usize = 25;

/// Hard cap accepted by [`chebyshev_shifted`].
pub const CHEBYSHEV_MAX_DEGREE: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("shifted Chebyshev degree {degree} exceeds the supported maximum {CHEBYSHEV_MAX_DEGREE}")]
pub struct ChebyshevDegreeError {
    pub degree: usize,
}

/// A real polynomial `c_0 + c_1 s + ... + c_N s^N`.
///
/// The stored length may exceed `degree() + 1`; trailing zeros are kept
/// because the assemblers index coefficients by a declared degree.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        debug_assert!(
            coeffs.iter().all(|c| c.is_finite()),
            "non-finite coefficient"
        );
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// `s^k`.
    pub fn monomial(k: usize) -> Self {
        let mut coeffs = vec![0.0; k + 1];
        coeffs[k] = 1.0;
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Coefficient of `s^i`, zero past the stored length.
    pub fn coeff(&self, i: usize) -> f64 {
        self.coeffs.get(i).copied().unwrap_or(0.0)
    }

    /// Number of stored coefficients.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    /// Index of the last coefficient that is not negligible relative to the
    /// largest one; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        let max = self.max_abs_coeff();
        if max == 0.0 {
            return None;
        }
        let cutoff = DEGREE_TRIM_RATIO * max;
        self.coeffs.iter().rposition(|c| c.abs() > cutoff)
    }

    pub fn is_zero(&self) -> bool {
        self.degree().is_none()
    }

    /// Copy with exactly `len` coefficients, zero-padding or truncating.
    pub fn padded(&self, len: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(len, 0.0);
        Self { coeffs }
    }

    /// Compensated Horner evaluation: the rounding error of each Horner
    /// step is carried in a second accumulator, so the result is as accurate
    /// as plain Horner in doubled working precision. Power-basis forms of
    /// `T*_n` cancel heavily for `n >= 10` without it.
    pub fn eval(&self, s: f64) -> f64 {
        let mut acc = 0.0;
        let mut err = 0.0;
        for &c in self.coeffs.iter().rev() {
            let (prod, prod_err) = two_product(acc, s);
            let (sum, sum_err) = two_sum(prod, c);
            acc = sum;
            err = err * s + (prod_err + sum_err);
        }
        acc + err
    }

    pub fn scale(&self, lambda: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * lambda).collect())
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero();
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| i as f64 * c)
                .collect(),
        )
    }

    /// `q(s) = p(alpha * s + beta)`, expanded exactly into powers of `s`.
    pub fn compose_affine(&self, alpha: f64, beta: f64) -> Self {
        let inner = Poly::new(vec![beta, alpha]);
        let mut out = Poly::zero();
        for &c in self.coeffs.iter().rev() {
            out = &(&out * &inner) + &Poly::constant(c);
        }
        // Keep the stored length so declared degrees survive rebasing.
        out.padded(self.coeffs.len())
    }
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let z = s - a;
    (s, (a - (s - z)) + (b - z))
}

/// Veltkamp split of `a` into two non-overlapping 26-bit halves.
fn split(a: f64) -> (f64, f64) {
    const FACTOR: f64 = 134_217_729.0; // 2^27 + 1
    let c = FACTOR * a;
    let hi = c - (c - a);
    (hi, a - hi)
}

/// Dekker's error-free product: `a * b = p + e` exactly.
fn two_product(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    (p, al * bl - (((p - ah * bh) - al * bh) - ah * bl))
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if *c == 0.0 {
                continue;
            }
            if !first {
                write!(f, " {} ", if *c < 0.0 { '-' } else { '+' })?;
            } else if *c < 0.0 {
                write!(f, "-")?;
            }
            first = false;
            let a = c.abs();
            match i {
                0 => write!(f, "{a}")?,
                1 => write!(f, "{a}*s")?,
                _ => write!(f, "{a}*s^{i}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..len).map(|i| self.coeff(i) + rhs.coeff(i)).collect())
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..len).map(|i| self.coeff(i) - rhs.coeff(i)).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.coeffs.is_empty() || rhs.coeffs.is_empty() {
            return Poly::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if *a == 0.0 {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(-1.0)
    }
}

impl From<Vec<f64>> for Poly {
    fn from(coeffs: Vec<f64>) -> Self {
        Poly::new(coeffs)
    }
}

/// Power-basis coefficients of the shifted Chebyshev polynomial `T*_n` on
/// `[0, 1]`, from `T*_{n+1} = 2(2s - 1) T*_n - T*_{n-1}`.
///
/// Above degree [`CHEBYSHEV_EXACT_DEGREE`] the coefficients are no longer
/// exact integers; a warning is logged.
pub fn chebyshev_shifted(n: usize) -> Result<Poly, ChebyshevDegreeError> {
    if n > CHEBYSHEV_MAX_DEGREE {
        return Err(ChebyshevDegreeError { degree: n });
    }
    if n > CHEBYSHEV_EXACT_DEGREE {
        log::warn!("T*_{n} coefficients exceed the exactly representable integer range");
    }
    let mut prev = Poly::constant(1.0);
    if n == 0 {
        return Ok(prev);
    }
    let step = Poly::new(vec![-2.0, 4.0]);
    let mut cur = Poly::new(vec![-1.0, 2.0]);
    for _ in 1..n {
        let next = &(&step * &cur) - &prev;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Chebyshev–Gauss nodes mapped to `[0, 1]`:
/// `s_i = (1 + cos((2i + 1) pi / (2d + 2))) / 2`, `i = 0..=d`.
pub fn chebyshev_gauss_nodes(d: usize) -> Vec<f64> {
    let denom = (2 * d + 2) as f64;
    (0..=d)
        .map(|i| 0.5 * (1.0 + libm::cos((2 * i + 1) as f64 * PI / denom)))
        .collect()
}

/// Degree-`<= d` interpolant of `f` at the Chebyshev–Gauss nodes, built in
/// Newton form and expanded into powers of `s`.
pub fn interpolate<E>(mut f: impl FnMut(f64) -> Result<f64, E>, d: usize) -> Result<Poly, E> {
    let nodes = chebyshev_gauss_nodes(d);
    let mut dd = Vec::with_capacity(nodes.len());
    for &s in &nodes {
        dd.push(f(s)?);
    }
    // In-place divided differences: dd[j] becomes f[s_0, ..., s_j].
    for level in 1..=d {
        for j in (level..=d).rev() {
            dd[j] = (dd[j] - dd[j - 1]) / (nodes[j] - nodes[j - level]);
        }
    }
    let mut out = Poly::constant(dd[d]);
    for j in (0..d).rev() {
        out = &(&out * &Poly::new(vec![-nodes[j], 1.0])) + &Poly::constant(dd[j]);
    }
    Ok(out.padded(d + 1))
}
