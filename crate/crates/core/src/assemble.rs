//! Assembly of the square Tau system.
//!
//! Unknowns: the coefficient blocks `a^{(0)}, ..., a^{(K-2)}` (each `n + 1`
//! long) followed by the tau blocks (`d + 2` for step 0, `d + 1` after).
//! Equations: per-step equations, then `K` continuity equations.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;

use crate::canonical::{CanonicalError, CanonicalTable};
use crate::poly::{chebyshev_shifted, ChebyshevDegreeError, Poly};
use crate::problem::DiscretizedProblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AssemblyPath {
    /// Equate power-basis coefficients of the perturbed equation.
    Direct,
    /// Expand each step in canonical polynomials (`d >= 1`).
    Canonical,
    /// Canonical expansion for constant coefficients (`d = 0`).
    Autonomous,
}

impl AssemblyPath {
    pub fn name(self) -> &'static str {
        match self {
            AssemblyPath::Direct => "direct",
            AssemblyPath::Canonical => "canonical",
            AssemblyPath::Autonomous => "autonomous",
        }
    }
}

impl core::fmt::Display for AssemblyPath {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AssembleError {
    #[error(transparent)]
    Chebyshev(#[from] ChebyshevDegreeError),
    #[error("step {step}: {source}")]
    Canonical { step: usize, source: CanonicalError },
    #[error("the autonomous assembly needs d = 0, got d = {0}")]
    NotAutonomous(usize),
}

/// Where a column of the system lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unknown {
    Coeff { step: usize, index: usize },
    Tau { step: usize, index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnknownMap {
    pub n: usize,
    pub d: usize,
    pub steps: usize,
}

impl UnknownMap {
    pub fn coeff_count(&self) -> usize {
        (self.n + 1) * self.steps
    }

    pub fn tau_len(&self, step: usize) -> usize {
        if step == 0 {
            self.d + 2
        } else {
            self.d + 1
        }
    }

    pub fn order(&self) -> usize {
        (self.n + self.d + 1) * self.steps + self.steps + 1
    }

    pub fn coeff(&self, step: usize, index: usize) -> usize {
        debug_assert!(step < self.steps && index <= self.n);
        step * (self.n + 1) + index
    }

    pub fn tau(&self, step: usize, index: usize) -> usize {
        debug_assert!(step < self.steps && index < self.tau_len(step));
        let start = if step == 0 {
            0
        } else {
            self.d + 2 + (step - 1) * (self.d + 1)
        };
        self.coeff_count() + start + index
    }

    pub fn locate(&self, column: usize) -> Option<Unknown> {
        if column < self.coeff_count() {
            return Some(Unknown::Coeff {
                step: column / (self.n + 1),
                index: column % (self.n + 1),
            });
        }
        let rest = column - self.coeff_count();
        if rest < self.d + 2 {
            return Some(Unknown::Tau {
                step: 0,
                index: rest,
            });
        }
        let rest = rest - (self.d + 2);
        let step = 1 + rest / (self.d + 1);
        (step < self.steps).then_some(Unknown::Tau {
            step,
            index: rest % (self.d + 1),
        })
    }
}

/// Degrees of the perturbation `H_k = tau_k(s) T*_m(s)`: `tau_0` has degree
/// `d + 1` against `T*_{n-1}`, later steps degree `d` against `T*_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSpec {
    n: usize,
    d: usize,
    first: Poly,
    rest: Poly,
}

impl PerturbationSpec {
    pub fn new(n: usize, d: usize) -> Result<Self, ChebyshevDegreeError> {
        Ok(Self {
            n,
            d,
            first: chebyshev_shifted(n - 1)?,
            rest: chebyshev_shifted(n)?,
        })
    }

    pub fn tau_degree(&self, step: usize) -> usize {
        if step == 0 {
            self.d + 1
        } else {
            self.d
        }
    }

    pub fn chebyshev_degree(&self, step: usize) -> usize {
        if step == 0 {
            self.n - 1
        } else {
            self.n
        }
    }

    pub fn chebyshev(&self, step: usize) -> &Poly {
        if step == 0 {
            &self.first
        } else {
            &self.rest
        }
    }

    /// Degree of every `H_k`.
    pub fn h_degree(&self) -> usize {
        self.n + self.d
    }

    pub fn perturbation(&self, step: usize, tau: &[f64]) -> Poly {
        &Poly::new(tau.to_vec()) * self.chebyshev(step)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TauSystem {
    matrix: Vec<f64>,
    rhs: Vec<f64>,
    map: UnknownMap,
    path: AssemblyPath,
}

impl TauSystem {
    fn zeros(map: UnknownMap, path: AssemblyPath) -> Self {
        let order = map.order();
        Self {
            matrix: vec![0.0; order * order],
            rhs: vec![0.0; order],
            map,
            path,
        }
    }

    /// Wrap an arbitrary square system; mostly useful for tests of the
    /// solver.
    pub fn from_dense(matrix: Vec<f64>, rhs: Vec<f64>) -> Self {
        let order = rhs.len();
        assert_eq!(
            matrix.len(),
            order * order,
            "matrix must be square and match rhs"
        );
        let map = UnknownMap {
            n: order.saturating_sub(1),
            d: 0,
            steps: 0,
        };
        Self {
            matrix,
            rhs,
            map,
            path: AssemblyPath::Direct,
        }
    }

    pub fn order(&self) -> usize {
        self.rhs.len()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.matrix[row * self.order() + col]
    }

    fn add(&mut self, row: usize, col: usize, value: f64) {
        let order = self.order();
        self.matrix[row * order + col] += value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let order = self.order();
        &self.matrix[row * order..(row + 1) * order]
    }

    /// Row-major entries.
    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn map(&self) -> &UnknownMap {
        &self.map
    }

    pub fn path(&self) -> AssemblyPath {
        self.path
    }

    /// The same system with every row (and its rhs entry) divided by the
    /// row's largest magnitude.
    pub fn equilibrated(&self) -> Self {
        let mut out = self.clone();
        let order = self.order();
        for r in 0..order {
            let row = &mut out.matrix[r * order..(r + 1) * order];
            let scale = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if scale > 0.0 {
                row.iter_mut().for_each(|v| *v /= scale);
                out.rhs[r] /= scale;
            }
        }
        out
    }

    /// `A` and `b` as CSV, one equation per line with `b` last.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for r in 0..self.order() {
            for v in self.row(r) {
                let _ = write!(out, "{v:e},");
            }
            let _ = writeln!(out, "{:e}", self.rhs[r]);
        }
        out
    }

    fn add_block(&mut self, row0: usize, col0: usize, block: &Block) {
        for i in 0..block.rows {
            for j in 0..block.cols {
                let v = block.get(i, j);
                if v != 0.0 {
                    self.add(row0 + i, col0 + j, v);
                }
            }
        }
    }

    fn add_rhs(&mut self, row0: usize, values: &[f64]) {
        for (slot, v) in self.rhs[row0..].iter_mut().zip(values) {
            *slot += v;
        }
    }

    /// The `K` continuity equations, in the last rows.
    fn add_continuity(&mut self, disc: &DiscretizedProblem) {
        let map = self.map;
        let n = map.n;
        let steps = map.steps;
        let base = self.order() - (steps + 1);
        self.add(base, map.coeff(0, 0), 1.0);
        self.rhs[base] = disc.lower_link();
        for k in 1..steps {
            for i in 0..=n {
                self.add(base + k, map.coeff(k - 1, i), 1.0);
            }
            self.add(base + k, map.coeff(k, 0), -1.0);
        }
        for i in 0..=n {
            self.add(base + steps, map.coeff(steps - 1, i), 1.0);
        }
        self.rhs[base + steps] = disc.upper_link();
    }
}

fn map_of(disc: &DiscretizedProblem) -> UnknownMap {
    UnknownMap {
        n: disc.n,
        d: disc.d,
        steps: disc.step_count(),
    }
}

/// For each step `k` and power `p = 0..=n+d`, the coefficient of `s^p` in
/// `X_k' - a_k X_k - b_k X_{k-1} - c_k X_{k+1} - H_k` equals zero; the
/// boundary pieces `X_{-1}`, `X_{K-1}` move to the right-hand side.
pub fn assemble_direct(disc: &DiscretizedProblem) -> Result<TauSystem, AssembleError> {
    let map = map_of(disc);
    let (n, d, steps) = (map.n, map.d, map.steps);
    let spec = PerturbationSpec::new(n, d)?;
    let mut sys = TauSystem::zeros(map, AssemblyPath::Direct);
    for (k, coeffs) in disc.steps.iter().enumerate() {
        let cheb = spec.chebyshev(k);
        for p in 0..=n + d {
            let row = k * (n + d + 1) + p;
            if p < n {
                sys.add(row, map.coeff(k, p + 1), (p + 1) as f64);
            }
            for i in p.saturating_sub(d)..=p.min(n) {
                let j = p - i;
                sys.add(row, map.coeff(k, i), -coeffs.a.coeff(j));
                let beta = coeffs.b.coeff(j);
                if k == 0 {
                    sys.rhs[row] += beta * disc.lower.coeff(i);
                } else {
                    sys.add(row, map.coeff(k - 1, i), -beta);
                }
                let gamma = coeffs.c.coeff(j);
                if k + 1 == steps {
                    sys.rhs[row] += gamma * disc.upper.coeff(i);
                } else {
                    sys.add(row, map.coeff(k + 1, i), -gamma);
                }
            }
            for i in 0..map.tau_len(k) {
                if p >= i {
                    let c = cheb.coeff(p - i);
                    if c != 0.0 {
                        sys.add(row, map.tau(k, i), -c);
                    }
                }
            }
        }
    }
    sys.add_continuity(disc);
    Ok(sys)
}

/// Canonical-polynomial assembly. For `d = 0` this is
/// [`assemble_autonomous`].
pub fn assemble_canonical(disc: &DiscretizedProblem) -> Result<TauSystem, AssembleError> {
    if disc.d == 0 {
        return assemble_autonomous(disc);
    }
    let tables = disc
        .steps
        .iter()
        .enumerate()
        .map(|(k, c)| {
            CanonicalTable::build(k, &c.a, disc.n)
                .map_err(|source| AssembleError::Canonical { step: k, source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    assemble_with_tables(disc, &tables, AssemblyPath::Canonical)
}

/// Canonical assembly for constant coefficients, using the closed-form
/// canonical polynomials. Rejects `a_k = 0`.
pub fn assemble_autonomous(disc: &DiscretizedProblem) -> Result<TauSystem, AssembleError> {
    if disc.d != 0 {
        return Err(AssembleError::NotAutonomous(disc.d));
    }
    let tables = disc
        .steps
        .iter()
        .enumerate()
        .map(|(k, c)| {
            CanonicalTable::autonomous(k, c.a.coeff(0), disc.n)
                .map_err(|source| AssembleError::Canonical { step: k, source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    assemble_with_tables(disc, &tables, AssemblyPath::Autonomous)
}

/// Dense `rows x cols` block; `set` takes 1-based indices, `get` 0-based.
struct Block {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Block {
    fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[(i - 1) * self.cols + (j - 1)] = v;
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// `-(self * x)` for a coefficient sequence `x`.
    fn neg_apply(&self, x: &Poly) -> Vec<f64> {
        (0..self.rows)
            .map(|i| {
                -(0..self.cols)
                    .map(|j| self.get(i, j) * x.coeff(j))
                    .sum::<f64>()
            })
            .collect()
    }
}

/// Coupling of `X_k` to a neighbour through `coef` (`beta_k` or `gamma_k`):
/// upper triangular, entry `(i, j)` is
/// `-sum_{l=0}^{min(d, j-i)} coef_{d-l} q_{i-1}^{(j-1-l)}`.
fn u_block(table: &CanonicalTable, coef: &Poly, n: usize, d: usize) -> Block {
    let mut b = Block::zeros(n + 1, n + 1);
    for j in 1..=n + 1 {
        for i in 1..=j {
            let top = d.min(j - i);
            let v: f64 = (0..=top)
                .map(|l| coef.coeff(d - l) * table.q(i - 1, j - 1 - l))
                .sum();
            b.set(i, j, -v);
        }
    }
    b
}

/// Tau columns of step 0 (`d + 2` of them, against `T*_{n-1}`): entry
/// `(i, j)` is `-sum_l C_{n-1-l} q_{i-1}^{(n-d+j-2-l)}` for
/// `l = 0..=n-d+j-i-1`, with `C_{-1} = 0`.
fn r_c_first(table: &CanonicalTable, cheb: &Poly, n: usize, d: usize) -> Block {
    let mut b = Block::zeros(n + 1, d + 2);
    for j in 1..=d + 2 {
        for i in 1..=(n + j - d - 1).min(n + 1) {
            let top = (n + j - d - i - 1).min(n - 1);
            let v: f64 = (0..=top)
                .map(|l| cheb.coeff(n - 1 - l) * table.q(i - 1, n + j - d - 2 - l))
                .sum();
            b.set(i, j, -v);
        }
    }
    b
}

/// Tau columns of step `k >= 1` (`d + 1`, against `T*_n`): entry `(i, j)` is
/// `-sum_{l=0}^{n-d+j-i} C_{n-l} q_{i-1}^{(n-d+j-1-l)}`.
fn r_c_step(table: &CanonicalTable, cheb: &Poly, n: usize, d: usize) -> Block {
    let mut b = Block::zeros(n + 1, d + 1);
    for j in 1..=d + 1 {
        for i in 1..=n + j - d {
            let v: f64 = (0..=n + j - d - i)
                .map(|l| cheb.coeff(n - l) * table.q(i - 1, n + j - d - 1 - l))
                .sum();
            b.set(i, j, -v);
        }
    }
    b
}

/// `d x cols` lower-triangular convolution block: entry `(i, j)` is
/// `coef_{i-j}` for `j <= i`. Gives the vanishing low-order coefficients.
fn low_block(coef: &Poly, d: usize, cols: usize) -> Block {
    let mut b = Block::zeros(d, cols);
    for i in 1..=d {
        for j in 1..=i.min(cols) {
            b.set(i, j, coef.coeff(i - j));
        }
    }
    b
}

fn assemble_with_tables(
    disc: &DiscretizedProblem,
    tables: &[CanonicalTable],
    path: AssemblyPath,
) -> Result<TauSystem, AssembleError> {
    let map = map_of(disc);
    let (n, d, steps) = (map.n, map.d, map.steps);
    let spec = PerturbationSpec::new(n, d)?;
    let mut sys = TauSystem::zeros(map, path);
    let low_base = map.coeff_count();
    for (k, (coeffs, table)) in disc.steps.iter().zip(tables).enumerate() {
        let band = k * (n + 1);
        let low = low_base + k * d;
        for i in 0..=n {
            sys.add(band + i, map.coeff(k, i), 1.0);
        }

        let u_beta = u_block(table, &coeffs.b, n, d);
        let r_beta = low_block(&coeffs.b, d, n + 1);
        if k == 0 {
            let u = u_beta.neg_apply(&disc.lower);
            sys.add_rhs(band, &u);
            let v = r_beta.neg_apply(&disc.lower);
            sys.add_rhs(low, &v);
        } else {
            sys.add_block(band, map.coeff(k - 1, 0), &u_beta);
            sys.add_block(low, map.coeff(k - 1, 0), &r_beta);
        }

        let u_gamma = u_block(table, &coeffs.c, n, d);
        let r_gamma = low_block(&coeffs.c, d, n + 1);
        if k + 1 == steps {
            let u = u_gamma.neg_apply(&disc.upper);
            sys.add_rhs(band, &u);
            let v = r_gamma.neg_apply(&disc.upper);
            sys.add_rhs(low, &v);
        } else {
            sys.add_block(band, map.coeff(k + 1, 0), &u_gamma);
            sys.add_block(low, map.coeff(k + 1, 0), &r_gamma);
        }

        let cheb = spec.chebyshev(k);
        let (r_c, r_c_low) = if k == 0 {
            (r_c_first(table, cheb, n, d), low_block(cheb, d, d + 2))
        } else {
            (r_c_step(table, cheb, n, d), low_block(cheb, d, d + 1))
        };
        sys.add_block(band, map.tau(k, 0), &r_c);
        sys.add_block(low, map.tau(k, 0), &r_c_low);
    }
    sys.add_continuity(disc);
    Ok(sys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{catalog, discretize, CatalogParams, StepCoefficients};
    use rand::{Rng, SeedableRng};

    fn params(pairs: &[(&str, f64)]) -> CatalogParams {
        pairs.iter().map(|(k, v)| (String::from(*k), *v)).collect()
    }

    fn random_disc(rng: &mut impl Rng, k: usize, n: usize, d: usize) -> DiscretizedProblem {
        let mut poly = |len: usize| Poly::new((0..len).map(|_| rng.gen_range(-2.0..2.0)).collect());
        let steps = (0..k - 1)
            .map(|_| {
                let mut a = poly(d + 1);
                let mut c = a.coeffs().to_vec();
                if d > 0 && c[d].abs() < 0.5 {
                    c[d] = 0.5_f64.copysign(c[d]);
                }
                a = Poly::new(c);
                StepCoefficients {
                    a,
                    b: poly(d + 1),
                    c: poly(d + 1),
                }
            })
            .collect();
        let lower = poly(n + 1);
        let upper = poly(n + 1);
        DiscretizedProblem {
            horizon: k,
            n,
            d,
            steps,
            lower,
            upper,
        }
    }

    /// Linear form `coeffs . x + constant`.
    #[derive(Clone)]
    struct Form {
        coeffs: Vec<f64>,
        constant: f64,
    }

    /// Builds the canonical system from scratch: express the right-hand
    /// side `r = b X_{k-1} + c X_{k+1} + H` as linear forms, then set
    /// `X_k = sum_m r_{d+m} Q_{d+m}` and `r_p = 0` for `p < d`.
    fn canonical_oracle(
        disc: &DiscretizedProblem,
        tables: &[CanonicalTable],
    ) -> (Vec<Vec<f64>>, Vec<f64>) {
        let map = map_of(disc);
        let (n, d, steps) = (map.n, map.d, map.steps);
        let order = map.order();
        let spec = PerturbationSpec::new(n, d).unwrap();
        let mut a = vec![vec![0.0; order]; order];
        let mut rhs = vec![0.0; order];
        for k in 0..steps {
            let sc = &disc.steps[k];
            let mut r = vec![
                Form {
                    coeffs: vec![0.0; order],
                    constant: 0.0
                };
                n + d + 1
            ];
            for (p, form) in r.iter_mut().enumerate() {
                for i in 0..=n.min(p) {
                    let j = p - i;
                    if k == 0 {
                        form.constant += sc.b.coeff(j) * disc.lower.coeff(i);
                    } else {
                        form.coeffs[map.coeff(k - 1, i)] += sc.b.coeff(j);
                    }
                    if k + 1 == steps {
                        form.constant += sc.c.coeff(j) * disc.upper.coeff(i);
                    } else {
                        form.coeffs[map.coeff(k + 1, i)] += sc.c.coeff(j);
                    }
                }
                for i in 0..map.tau_len(k).min(p + 1) {
                    form.coeffs[map.tau(k, i)] += spec.chebyshev(k).coeff(p - i);
                }
            }
            for i in 0..=n {
                let row = k * (n + 1) + i;
                a[row][map.coeff(k, i)] += 1.0;
                for m in 0..=n {
                    let q = tables[k].q(i, m);
                    for col in 0..order {
                        a[row][col] -= q * r[d + m].coeffs[col];
                    }
                    rhs[row] += q * r[d + m].constant;
                }
            }
            for p in 0..d {
                let row = map.coeff_count() + k * d + p;
                a[row] = r[p].coeffs.clone();
                rhs[row] = -r[p].constant;
            }
        }
        let sys = assemble_direct(disc).unwrap();
        for row in order - steps - 1..order {
            a[row] = sys.row(row).to_vec();
            rhs[row] = sys.rhs()[row];
        }
        (a, rhs)
    }

    fn tables_for(disc: &DiscretizedProblem) -> Vec<CanonicalTable> {
        disc.steps
            .iter()
            .enumerate()
            .map(|(k, c)| {
                if disc.d == 0 {
                    CanonicalTable::autonomous(k, c.a.coeff(0), disc.n).unwrap()
                } else {
                    CanonicalTable::build(k, &c.a, disc.n).unwrap()
                }
            })
            .collect()
    }

    fn assert_matches_oracle(disc: &DiscretizedProblem) {
        let sys = assemble_canonical(disc).unwrap();
        let (a, rhs) = canonical_oracle(disc, &tables_for(disc));
        let order = sys.order();
        for r in 0..order {
            let scale = 1.0 + a[r].iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for c in 0..order {
                assert!(
                    (sys.get(r, c) - a[r][c]).abs() <= 1e-12 * scale,
                    "n={} d={} K={} entry ({r},{c}): {} vs {}",
                    disc.n,
                    disc.d,
                    disc.horizon,
                    sys.get(r, c),
                    a[r][c]
                );
            }
            assert!((sys.rhs()[r] - rhs[r]).abs() <= 1e-12 * (1.0 + rhs[r].abs()) * scale);
        }
    }

    #[test]
    fn order_examples() {
        let map = UnknownMap {
            n: 3,
            d: 3,
            steps: 2,
        };
        assert_eq!(map.order(), 17);
        assert_eq!(map.coeff_count() + map.tau_len(0) + map.tau_len(1), 17);
        let map = UnknownMap {
            n: 9,
            d: 0,
            steps: 2,
        };
        assert_eq!(map.order(), 23);
        let map = UnknownMap {
            n: 7,
            d: 6,
            steps: 100,
        };
        assert_eq!(map.order(), 1501);
    }

    #[test]
    fn unknown_map_is_a_bijection() {
        for steps in 1..=9 {
            for n in 1..=12 {
                for d in 0..=n {
                    let map = UnknownMap { n, d, steps };
                    let mut seen = vec![false; map.order()];
                    for k in 0..steps {
                        for i in 0..=n {
                            let c = map.coeff(k, i);
                            assert!(!seen[c]);
                            seen[c] = true;
                            assert_eq!(map.locate(c), Some(Unknown::Coeff { step: k, index: i }));
                        }
                        for i in 0..map.tau_len(k) {
                            let c = map.tau(k, i);
                            assert!(!seen[c]);
                            seen[c] = true;
                            assert_eq!(map.locate(c), Some(Unknown::Tau { step: k, index: i }));
                        }
                    }
                    assert!(seen.iter().all(|&s| s));
                    assert_eq!(map.locate(map.order()), None);
                }
            }
        }
    }

    #[test]
    fn perturbation_degrees() {
        let spec = PerturbationSpec::new(5, 2).unwrap();
        assert_eq!((spec.tau_degree(0), spec.chebyshev_degree(0)), (3, 4));
        assert_eq!((spec.tau_degree(3), spec.chebyshev_degree(3)), (2, 5));
        for k in [0, 1] {
            let tau = vec![1.0; spec.tau_degree(k) + 1];
            assert_eq!(spec.perturbation(k, &tau).degree(), Some(spec.h_degree()));
        }
    }

    #[test]
    fn canonical_blocks_match_generic_expansion() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for (k, n, d) in [
            (2, 3, 3),
            (3, 3, 3),
            (3, 4, 3),
            (4, 5, 2),
            (3, 6, 1),
            (5, 8, 3),
            (3, 1, 1),
            (4, 6, 0),
            (2, 1, 0),
        ] {
            let disc = random_disc(&mut rng, k, n, d);
            assert_matches_oracle(&disc);
        }
    }

    #[test]
    fn continuity_rows_and_boundary_rhs() {
        let p = catalog("exp1", &params(&[("K", 3.0), ("m", 0.7)])).unwrap();
        let disc = discretize(&p, 7, 0).unwrap();
        let sys = assemble_canonical(&disc).unwrap();
        assert_eq!(sys.path(), AssemblyPath::Autonomous);
        let order = sys.order();
        let w = &sys.rhs()[order - 3..];
        assert!((w[0] - 1.0).abs() < 1e-9);
        assert_eq!(w[1], 0.0);
        assert!((w[2] - libm::exp(1.4)).abs() < 1e-9);
        // Each step's coefficient block appears in exactly two continuity rows.
        for k in 0..2 {
            let first: Vec<f64> = (order - 3..order).map(|r| sys.get(r, 8 * k)).collect();
            let nonzero = first.iter().filter(|v| **v != 0.0).count();
            assert_eq!(nonzero, 2);
            let rest: Vec<usize> = (order - 3..order)
                .filter(|&r| sys.get(r, 8 * k + 3) != 0.0)
                .collect();
            assert_eq!(rest, vec![order - 3 + k + 1]);
        }
    }

    #[test]
    fn low_rhs_starts_with_beta_times_boundary() {
        let p = catalog("exp2", &params(&[("K", 3.0)])).unwrap();
        let disc = discretize(&p, 3, 3).unwrap();
        let sys = assemble_canonical(&disc).unwrap();
        let first_low = sys.map().coeff_count();
        let want = -disc.steps[0].b.coeff(0) * disc.lower.coeff(0);
        assert!((sys.rhs()[first_low] - want).abs() <= 1e-12 * want.abs());
    }

    #[test]
    fn canonical_rejects_flat_leading_coefficient() {
        let p = catalog("exp1", &params(&[("K", 3.0), ("m", 0.7)])).unwrap();
        let disc = discretize(&p, 5, 2).unwrap();
        assert!(matches!(
            assemble_canonical(&disc),
            Err(AssembleError::Canonical { step: 0, .. })
        ));
        assert!(assemble_direct(&disc).is_ok());
        let disc = discretize(&p, 5, 1).unwrap();
        assert_eq!(
            assemble_autonomous(&disc),
            Err(AssembleError::NotAutonomous(1))
        );
    }

    #[test]
    fn zero_padding_reduces_cases() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        for (k, n, d) in [(3, 5, 3), (4, 4, 2)] {
            let padded = random_disc(&mut rng, k, n, d);
            let mut short = padded.clone();
            for (s, p) in short.steps.iter_mut().zip(&padded.steps) {
                s.c = Poly::new(p.c.coeffs()[..d].to_vec());
            }
            let mut explicit = short.clone();
            for s in explicit.steps.iter_mut() {
                s.c = s.c.padded(d + 1);
            }
            for assemble in [assemble_direct, assemble_canonical] {
                let a = assemble(&short).unwrap();
                let b = assemble(&explicit).unwrap();
                assert_eq!(a.matrix(), b.matrix());
                assert_eq!(a.rhs(), b.rhs());
            }
        }
    }

    #[test]
    fn equilibration_scales_rows() {
        let p = catalog("exp2", &params(&[("K", 3.0)])).unwrap();
        let disc = discretize(&p, 3, 3).unwrap();
        let sys = assemble_direct(&disc).unwrap();
        let eq = sys.equilibrated();
        for r in 0..eq.order() {
            let m = eq.row(r).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!((m - 1.0).abs() < 1e-15);
            let scale = sys.row(r).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(
                (eq.rhs()[r] * scale - sys.rhs()[r]).abs() <= 1e-14 * (1.0 + sys.rhs()[r].abs())
            );
        }
        let csv = sys.to_csv();
        assert_eq!(csv.lines().count(), 17);
        assert_eq!(csv.lines().next().unwrap().split(',').count(), 18);
    }

    #[test]
    fn direct_rows_vanish_on_polynomial_solution() {
        // x = 2 solves x' = -x + x(t - 1) with zero tau.
        let disc = DiscretizedProblem {
            horizon: 4,
            n: 3,
            d: 1,
            steps: vec![
                StepCoefficients {
                    a: Poly::new(vec![-1.0, 0.0]),
                    b: Poly::new(vec![1.0, 0.0]),
                    c: Poly::new(vec![0.0, 0.0])
                };
                3
            ],
            lower: Poly::new(vec![2.0, 0.0, 0.0, 0.0]),
            upper: Poly::new(vec![2.0, 0.0, 0.0, 0.0]),
        };
        let sys = assemble_direct(&disc).unwrap();
        let mut x = vec![0.0; sys.order()];
        for k in 0..3 {
            x[sys.map().coeff(k, 0)] = 2.0;
        }
        for r in 0..sys.order() {
            let lhs: f64 = sys.row(r).iter().zip(&x).map(|(a, b)| a * b).sum();
            assert!((lhs - sys.rhs()[r]).abs() < 1e-14, "row {r}");
        }
    }
}
