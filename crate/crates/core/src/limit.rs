//! Asymptotic gap endpoints as ε → 0.
//!
//! `A_j = α_j β_j² N_j / l_j`. The `B_j` are the roots of
//! `g(λ) = λ(l_0 + Σ_j A_j l_j / (β_j²(A_j − λ))) − γ`, equivalently the
//! eigenvalues of the arrow matrix `H_0^N` in the `l`-weighted inner product.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::ComponentStats;
use crate::linalg;
use crate::roots::{bisect, expand_until_sign};
use crate::scalar::{Real, Scalar};

/// Coupling constants `α_j, β_j` (per attached component) and `γ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingSpec<T> {
    pub alpha: Vec<T>,
    pub beta: Vec<T>,
    pub gamma: T,
}

impl<T: Scalar> CouplingSpec<T> {
    /// Checked constructor: `α_j ≠ 0`, `β_j ≠ 0`, all finite.
    pub fn new(alpha: Vec<T>, beta: Vec<T>, gamma: T) -> Result<Self> {
        let c = Self { alpha, beta, gamma };
        c.check()?;
        Ok(c)
    }

    /// `α = 0`, `β = 1`, `γ = 0`: attached components decouple from `Y_0`.
    /// Only meaningful for the fiber solver; the limit model rejects it.
    pub fn zero(m: usize) -> Self {
        Self { alpha: vec![T::zero(); m], beta: vec![T::one(); m], gamma: T::zero() }
    }

    pub fn m(&self) -> usize {
        self.alpha.len()
    }

    /// Lengths agree and every value is finite.
    pub fn check_finite(&self) -> Result<()> {
        if self.alpha.len() != self.beta.len() {
            return Err(Error::InvalidCouplings(format!(
                "alpha has {} entries but beta has {}",
                self.alpha.len(),
                self.beta.len()
            )));
        }
        let finite = self.alpha.iter().chain(&self.beta).chain([&self.gamma]).all(|x| x.is_finite_value());
        if !finite {
            return Err(Error::InvalidCouplings("coupling constants must be finite".into()));
        }
        Ok(())
    }

    /// [`check_finite`](Self::check_finite) plus `α_j ≠ 0`, `β_j ≠ 0`.
    pub fn check(&self) -> Result<()> {
        self.check_finite()?;
        if self.alpha.is_empty() {
            return Err(Error::InvalidCouplings("m must be positive".into()));
        }
        if let Some(j) = self.alpha.iter().position(|a| a.is_zero()) {
            return Err(Error::InvalidCouplings(format!("alpha_{} is zero", j + 1)));
        }
        if let Some(j) = self.beta.iter().position(|b| b.is_zero()) {
            return Err(Error::InvalidCouplings(format!("beta_{} is zero", j + 1)));
        }
        Ok(())
    }

    pub fn convert<U: Scalar>(&self) -> CouplingSpec<U> {
        let cv = |x: &T| U::from_f64(x.lossy_f64()).expect("finite coupling");
        CouplingSpec { alpha: self.alpha.iter().map(cv).collect(), beta: self.beta.iter().map(cv).collect(), gamma: cv(&self.gamma) }
    }
}

fn check_pair<T: Scalar>(stats: &ComponentStats<T>, c: &CouplingSpec<T>) -> Result<()> {
    c.check()?;
    if c.m() != stats.m() {
        return Err(Error::InvalidCouplings(format!(
            "couplings describe m = {} components but the decomposition has m = {}",
            c.m(),
            stats.m()
        )));
    }
    Ok(())
}

/// `A_j` sorted ascending. `perm[k]` is the 0-based component index of the
/// `k`-th smallest value, so `values[k] = A_{perm[k] + 1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SortedA<T> {
    pub values: Vec<T>,
    pub perm: Vec<usize>,
}

fn a_unsorted<T: Scalar>(stats: &ComponentStats<T>, c: &CouplingSpec<T>) -> Vec<T> {
    (0..c.m())
        .map(|j| c.alpha[j] * c.beta[j] * c.beta[j] * T::from_count(stats.n[j]) / stats.l[j + 1])
        .collect()
}

fn sort_with_perm<T: Scalar>(values: Vec<T>) -> SortedA<T> {
    let mut perm: Vec<usize> = (0..values.len()).collect();
    perm.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite A"));
    SortedA { values: perm.iter().map(|&j| values[j]).collect(), perm }
}

/// `tol_distinct = 10⁻¹² · max(1, max|A_j|)`, zero for exact scalars.
fn check_distinct<T: Scalar>(sorted: &SortedA<T>) -> Result<()> {
    let scale = sorted.values.iter().fold(T::one(), |acc, a| if a.abs() > acc { a.abs() } else { acc });
    let tol = T::tolerance(1e-12) * scale;
    for k in 1..sorted.values.len() {
        if sorted.values[k] - sorted.values[k - 1] <= tol {
            let (i, j) = (sorted.perm[k - 1], sorted.perm[k]);
            return Err(Error::DegenerateA {
                i: i.min(j) + 1,
                j: i.max(j) + 1,
                a_i: sorted.values[k - 1].lossy_f64(),
                a_j: sorted.values[k].lossy_f64(),
            });
        }
    }
    Ok(())
}

/// `A_j = α_j β_j² N_j / l_j`, sorted, with pairwise distinctness enforced.
pub fn limit_a<T: Scalar>(stats: &ComponentStats<T>, c: &CouplingSpec<T>) -> Result<SortedA<T>> {
    check_pair(stats, c)?;
    let sorted = sort_with_perm(a_unsorted(stats, c));
    check_distinct(&sorted)?;
    Ok(sorted)
}

/// Diagonal of the antiperiodic limit matrix, sorted. Read off the assembled
/// matrix rather than the closed form.
pub fn limit_a_antiperiodic<T: Scalar>(stats: &ComponentStats<T>, c: &CouplingSpec<T>) -> Result<Vec<T>> {
    let m = assemble_limit_matrix(stats, c)?;
    let mut diag: Vec<T> = (1..m.dim()).map(|j| m.entries[j][j]).collect();
    diag.sort_by(|a, b| a.partial_cmp(b).expect("finite A"));
    Ok(diag)
}

/// Arrow matrix `H_0^N`, self-adjoint in `⟨x, y⟩ = Σ l_j x_j ȳ_j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitMatrix<T> {
    pub entries: Vec<Vec<T>>,
    pub weights: Vec<T>,
}

impl<T: Scalar> LimitMatrix<T> {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// `max |l_i M_ik − l_k M_ki|`.
    pub fn weighted_symmetry_defect(&self) -> (usize, usize, T) {
        let mut worst = (0, 0, T::zero());
        for i in 0..self.dim() {
            for k in 0..i {
                let d = (self.weights[i] * self.entries[i][k] - self.weights[k] * self.entries[k][i]).abs();
                if d > worst.2 {
                    worst = (i, k, d);
                }
            }
        }
        worst
    }
}

pub fn assemble_limit_matrix<T: Scalar>(stats: &ComponentStats<T>, c: &CouplingSpec<T>) -> Result<LimitMatrix<T>> {
    check_pair(stats, c)?;
    let m = c.m();
    let l0 = stats.l[0];
    let mut entries = vec![vec![T::zero(); m + 1]; m + 1];
    let mut corner = c.gamma;
    for j in 0..m {
        let n = T::from_count(stats.n[j]);
        let lj = stats.l[j + 1];
        corner = corner + c.alpha[j] * n;
        entries[0][j + 1] = -(c.alpha[j] * c.beta[j] * n) / l0;
        entries[j + 1][0] = -(c.alpha[j] * c.beta[j] * n) / lj;
        entries[j + 1][j + 1] = c.alpha[j] * c.beta[j] * c.beta[j] * n / lj;
    }
    entries[0][0] = corner / l0;
    Ok(LimitMatrix { entries, weights: stats.l.clone() })
}

/// Eigenvalues of `M` in the weighted inner product, via the plain
/// symmetric matrix `D M D⁻¹` with `D = diag(√l)`.
pub fn limit_b_matrix<T: Real>(m: &LimitMatrix<T>) -> Result<Vec<T>> {
    let n = m.dim();
    let scale = m
        .entries
        .iter()
        .zip(&m.weights)
        .flat_map(|(row, &w)| row.iter().map(move |&x| (x * w).abs()))
        .fold(T::zero(), T::max);
    let (i, k, defect) = m.weighted_symmetry_defect();
    if defect > T::lit(1e-12) * scale.max(T::min_positive_value()) {
        return Err(Error::SymmetryViolation { i, k, defect: defect.lossy_f64() });
    }
    let root: Vec<T> = m.weights.iter().map(|w| w.sqrt()).collect();
    let mut s = vec![T::zero(); n * n];
    for r in 0..n {
        for col in 0..n {
            let upper = root[r] * m.entries[r][col] / root[col];
            let lower = root[col] * m.entries[col][r] / root[r];
            s[r * n + col] = (upper + lower) / T::lit(2.0);
        }
    }
    linalg::symmetric_eigenvalues(n, &s)
}

/// Secular roots are bisected until the bracket is `TOL_ROOT_ULPS` machine
/// epsilons wide relative to `max(1, |B|)`, well inside `1e-12`.
const TOL_ROOT_ULPS: f64 = 4.0;
const POLE_OFFSET: f64 = 1e-9;
const BOUND_EXPAND: usize = 200;

/// The secular function `g(λ)` for sorted `A` (with its permutation).
pub fn secular_g<T: Real>(stats: &ComponentStats<T>, c: &CouplingSpec<T>, a: &SortedA<T>, lambda: T) -> T {
    let mut inner = stats.l[0];
    for (k, &j) in a.perm.iter().enumerate() {
        let ak = a.values[k];
        inner += ak * stats.l[j + 1] / (c.beta[j] * c.beta[j] * (ak - lambda));
    }
    lambda * inner - c.gamma
}

/// The `m + 1` roots of `g`, one per interval cut out by the poles `A_j`.
pub fn limit_b_secular<T: Real>(stats: &ComponentStats<T>, c: &CouplingSpec<T>, a: &SortedA<T>) -> Result<Vec<T>> {
    check_pair(stats, c)?;
    let m = a.values.len();
    let g = |x: T| secular_g(stats, c, a, x);
    let rel = T::epsilon() * T::lit(TOL_ROOT_ULPS);
    let iters = 400;
    let mut roots = Vec::with_capacity(m + 1);

    let first = a.values[0];
    let last = a.values[m - 1];
    let near = |spacing: T| T::lit(POLE_OFFSET) * spacing.max(T::min_positive_value());
    let outer_gap = if m > 1 { a.values[1] - a.values[0] } else { T::one() };
    let lo = expand_until_sign(g, first, -T::one(), false, BOUND_EXPAND)
        .ok_or_else(|| Error::RootNotBracketed { interval: format!("(-inf, {})", first) })?;
    let hi = first - near(outer_gap.min(T::one()));
    roots.push(bracketed(&g, lo, hi, rel, iters, || format!("({lo}, {first})"))?);

    for k in 0..m.saturating_sub(1) {
        let (left, right) = (a.values[k], a.values[k + 1]);
        let off = near(right - left);
        roots.push(bracketed(&g, left + off, right - off, rel, iters, || format!("({left}, {right})"))?);
    }

    let last_gap = if m > 1 { a.values[m - 1] - a.values[m - 2] } else { T::one() };
    let lo = last + near(last_gap.min(T::one()));
    let hi = expand_until_sign(g, last, T::one(), true, BOUND_EXPAND)
        .ok_or_else(|| Error::RootNotBracketed { interval: format!("({last}, +inf)") })?;
    roots.push(bracketed(&g, lo, hi, rel, iters, || format!("({last}, {hi})"))?);
    Ok(roots)
}

fn bracketed<T: Real>(
    g: &impl Fn(T) -> T,
    lo: T,
    hi: T,
    rel: T,
    iters: usize,
    describe: impl Fn() -> String,
) -> Result<T> {
    let (glo, ghi) = (g(lo), g(hi));
    if !(glo.is_finite() && ghi.is_finite()) || (glo > T::zero()) == (ghi > T::zero()) && glo != T::zero() && ghi != T::zero() {
        return Err(Error::RootNotBracketed { interval: describe() });
    }
    Ok(bisect(g, lo, hi, rel, iters))
}

/// Strict alternation `B_0 < A_1 < B_1 < … < A_m < B_m`.
pub fn is_interlaced<T: PartialOrd>(a: &[T], b: &[T]) -> bool {
    if b.len() != a.len() + 1 {
        return false;
    }
    a.iter().enumerate().all(|(k, ak)| b[k] < *ak && *ak < b[k + 1])
}

/// Both endpoint families plus the cross-check between the two `B` routes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitEndpoints<T> {
    #[serde(rename = "A")]
    pub a: Vec<T>,
    #[serde(rename = "B")]
    pub b: Vec<T>,
    /// 1-based component of each sorted `A`.
    pub a_components: Vec<usize>,
    /// Matrix-route eigenvalues.
    pub b_matrix: Vec<T>,
    /// `max_j |B_j(secular) − B_j(matrix)| / max(1, |B_j|)`.
    pub oracle_discrepancy: T,
    pub interlaced: bool,
}

/// `A` from the closed form, `B` from the secular equation, cross-checked
/// against the matrix eigenvalues.
pub fn limit_endpoints<T: Real>(stats: &ComponentStats<T>, c: &CouplingSpec<T>) -> Result<LimitEndpoints<T>> {
    let a = limit_a(stats, c)?;
    let b = limit_b_secular(stats, c, &a)?;
    let b_matrix = limit_b_matrix(&assemble_limit_matrix(stats, c)?)?;
    let oracle_discrepancy = b
        .iter()
        .zip(&b_matrix)
        .map(|(x, y)| (*x - *y).abs() / T::one().max(x.abs()))
        .fold(T::zero(), T::max);
    let interlaced = is_interlaced(&a.values, &b);
    Ok(LimitEndpoints {
        a_components: a.perm.iter().map(|j| j + 1).collect(),
        a: a.values,
        b,
        b_matrix,
        oracle_discrepancy,
        interlaced,
    })
}
