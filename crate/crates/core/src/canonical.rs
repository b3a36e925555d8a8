//! Canonical polynomials of the step operator `D[x] = x' - a_k x`.
//!
//! For `d = deg a_k >= 1` the first `d` canonical polynomials do not exist;
//! the table holds `Q_{d}, ..., Q_{d+n}`. For constant `a_k` (`d = 0`) every
//! `Q_m` exists and has the closed form in [`autonomous_q`].

use alloc::vec;
use alloc::vec::Vec;

use crate::poly::Poly;
use crate::problem::LEADING_COEFFICIENT_TOL;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum CanonicalError {
    #[error("leading coefficient {0:e} of a_k is too small to divide by")]
    LeadingCoefficient(f64),
    #[error("constant coefficient a = 0 has no canonical polynomials")]
    ZeroAutonomous,
}

/// `Q_{d+m}` for `m = 0..=n`, each stored with `n + 1` coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalTable {
    step: usize,
    d: usize,
    entries: Vec<Poly>,
    formula_residuals: Vec<Poly>,
}

/// `D[p] = p' - a p`.
pub fn apply_operator(a: &Poly, p: &Poly) -> Poly {
    &p.derivative() - &(a * p)
}

fn add_scaled(acc: &mut [f64], p: &Poly, factor: f64) {
    for (slot, &c) in acc.iter_mut().zip(p.coeffs()) {
        *slot += factor * c;
    }
}

impl CanonicalTable {
    /// Runs the recursion on the coefficients `alpha_0..alpha_d` of `a`
    /// (`d = a.len() - 1 >= 1`).
    pub fn build(step: usize, a: &Poly, n: usize) -> Result<Self, CanonicalError> {
        assert!(a.len() >= 2, "canonical table needs deg a >= 1");
        let d = a.len() - 1;
        let alpha = a.coeffs();
        let lead = alpha[d];
        if !(lead.abs() > LEADING_COEFFICIENT_TOL) {
            return Err(CanonicalError::LeadingCoefficient(lead));
        }
        let mut entries: Vec<Poly> = Vec::with_capacity(n + 1);
        for m in 0..=n {
            let mut acc = vec![0.0; n + 1];
            acc[m] = 1.0;
            if m <= d {
                for i in 0..m {
                    add_scaled(&mut acc, &entries[i], alpha[d - m + i]);
                }
            } else {
                // Q_{m-1} is entry m - 1 - d.
                add_scaled(&mut acc, &entries[m - 1 - d], -(m as f64));
                for i in 1..=d {
                    add_scaled(&mut acc, &entries[m - i], alpha[d - i]);
                }
            }
            entries.push(Poly::new(acc).scale(-1.0 / lead));
        }
        let formula_residuals = (0..=n).map(|m| formula_residual(a, m)).collect();
        Ok(Self {
            step,
            d,
            entries,
            formula_residuals,
        })
    }

    /// Table for constant `a`: entry `m` is `Q_m` from the closed form.
    pub fn autonomous(step: usize, a: f64, n: usize) -> Result<Self, CanonicalError> {
        let entries = (0..=n)
            .map(|m| autonomous_q(a, m).map(|q| q.padded(n + 1)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            step,
            d: 0,
            entries,
            formula_residuals: vec![Poly::new(vec![0.0; n + 1]); n + 1],
        })
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.entries.len() - 1
    }

    /// `Q_{d+m}`.
    pub fn entry(&self, m: usize) -> &Poly {
        &self.entries[m]
    }

    pub fn entries(&self) -> &[Poly] {
        &self.entries
    }

    /// `q_j^{(m)}`, the coefficient of `s^j` in `Q_{d+m}`.
    pub fn q(&self, j: usize, m: usize) -> f64 {
        self.entries[m].coeff(j)
    }

    /// The closed-form residual stored alongside entry `m`.
    pub fn formula_residual(&self, m: usize) -> &Poly {
        &self.formula_residuals[m]
    }

    /// `D[Q_{d+m}] - s^{d+m}` by applying the operator.
    pub fn applied_residual(&self, a: &Poly, m: usize) -> Poly {
        let p = self.d + m;
        let image = apply_operator(a, &self.entries[m]);
        &image - &Poly::monomial(p)
    }
}

/// The residual polynomial predicted for `Q_{d+m}` from the undefined
/// canonical polynomials alone: nonzero only for `m <= d`.
pub fn formula_residual(a: &Poly, m: usize) -> Poly {
    let d = a.len() - 1;
    let alpha = a.coeffs();
    let mut out = vec![0.0; d.max(1)];
    if m <= d && d >= 1 {
        if m >= 1 {
            out[m - 1] -= m as f64;
        }
        for i in 0..(d - m) {
            out[m + i] += alpha[i];
        }
    }
    Poly::new(out).scale(1.0 / alpha[d])
}

/// `Q_m(s) = -(m!/a) sum_{i=0}^m s^i / (a^{m-i} i!)`.
pub fn autonomous_q(a: f64, m: usize) -> Result<Poly, CanonicalError> {
    if a == 0.0 {
        return Err(CanonicalError::ZeroAutonomous);
    }
    // m!/(a^{m-i} i!) built downward from i = m.
    let mut coeffs = vec![0.0; m + 1];
    let mut term = 1.0;
    for i in (0..=m).rev() {
        coeffs[i] = -term / a;
        term *= i as f64 / a;
    }
    Ok(Poly::new(coeffs))
}

/// `D[s^m] = m s^{m-1} - sum_i alpha_i s^{m+i}`, of degree `m + d`.
pub fn generating_polynomial(a: &Poly, m: usize) -> Poly {
    let d = a.len() - 1;
    let mut coeffs = vec![0.0; m + d + 1];
    if m >= 1 {
        coeffs[m - 1] = m as f64;
    }
    for (i, &alpha) in a.coeffs().iter().enumerate() {
        coeffs[m + i] -= alpha;
    }
    Poly::new(coeffs)
}
