//! Inverse design: couplings whose limit endpoints equal prescribed targets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::ComponentStats;
use crate::limit::CouplingSpec;
use crate::scalar::{Real, Scalar};

/// Prescribed `B̃_0 < Ã_1 < B̃_1 < … < Ã_m < B̃_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapTargets<T> {
    #[serde(rename = "A")]
    pub a: Vec<T>,
    #[serde(rename = "B")]
    pub b: Vec<T>,
}

impl<T: Scalar> GapTargets<T> {
    /// Checked constructor: strict interlacing and `Ã_j ≠ 0`.
    pub fn new(a: Vec<T>, b: Vec<T>) -> Result<Self> {
        let t = Self { a, b };
        t.check()?;
        Ok(t)
    }

    pub fn m(&self) -> usize {
        self.a.len()
    }

    fn check_interlacing(&self) -> Result<()> {
        if self.a.is_empty() || self.b.len() != self.a.len() + 1 {
            return Err(Error::InvalidTargets(format!(
                "need m >= 1 values A and m+1 values B (got {} and {})",
                self.a.len(),
                self.b.len()
            )));
        }
        if !self.a.iter().chain(&self.b).all(|x| x.is_finite_value()) {
            return Err(Error::InvalidTargets("targets must be finite".into()));
        }
        for (j, a) in self.a.iter().enumerate() {
            if !(self.b[j] < *a && *a < self.b[j + 1]) {
                return Err(Error::InvalidTargets(format!(
                    "interlacing fails around A_{}: need B_{} < A_{} < B_{}",
                    j + 1,
                    j,
                    j + 1,
                    j + 1
                )));
            }
        }
        Ok(())
    }

    pub fn check(&self) -> Result<()> {
        self.check_interlacing()?;
        if let Some(j) = self.a.iter().position(|a| a.is_zero()) {
            return Err(Error::InvalidTargets(format!("A_{} is zero; shift the targets first", j + 1)));
        }
        Ok(())
    }

    /// Every endpoint moved by `shift`.
    pub fn shifted(&self, shift: T) -> Self {
        Self { a: self.a.iter().map(|&x| x + shift).collect(), b: self.b.iter().map(|&x| x + shift).collect() }
    }
}

/// `r̃_j = ((B̃_j − Ã_j)/Ã_j) · ∏_{i≠j} (B̃_i − Ã_j)/(Ã_i − Ã_j)`, the product
/// taken over `i = 1..m` in index order. Exact for rational scalars.
pub fn weights_r<T: Scalar>(t: &GapTargets<T>) -> Result<Vec<T>> {
    t.check()?;
    let m = t.m();
    Ok((0..m)
        .map(|j| {
            let aj = t.a[j];
            (0..m)
                .filter(|&i| i != j)
                .fold((t.b[j + 1] - aj) / aj, |acc, i| acc * (t.b[i + 1] - aj) / (t.a[i] - aj))
        })
        .collect())
}

/// Above this `m` the product runs in (log-magnitude, sign) form.
const LOG_PRODUCT_THRESHOLD: usize = 8;

/// Floating-point `r̃_j`, overflow-safe for large `m`.
pub fn weights_r_real<T: Real>(t: &GapTargets<T>) -> Result<Vec<T>> {
    if t.m() <= LOG_PRODUCT_THRESHOLD {
        return weights_r(t);
    }
    t.check()?;
    let m = t.m();
    Ok((0..m)
        .map(|j| {
            let aj = t.a[j];
            let mut negative = false;
            let mut log_mag = T::zero();
            let mut push = |x: T| {
                negative ^= x < T::zero();
                log_mag += x.abs().ln();
            };
            push((t.b[j + 1] - aj) / aj);
            for i in (0..m).filter(|&i| i != j) {
                push(t.b[i + 1] - aj);
                push(T::one() / (t.a[i] - aj));
            }
            let mag = log_mag.exp();
            if negative {
                -mag
            } else {
                mag
            }
        })
        .collect())
}

/// Couplings `(α̃, β̃, γ̃)` reproducing the targets in the ε → 0 limit:
/// `α̃_j = r̃_j(Ã_j − B̃_0) l_0 / N_j`, `β̃_j = +√(Ã_j l_j / (r̃_j(Ã_j − B̃_0) l_0))`,
/// `γ̃ = B̃_0 (1 + Σ r̃_j) l_0`.
pub fn design<T: Real>(t: &GapTargets<T>, stats: &ComponentStats<T>) -> Result<CouplingSpec<T>> {
    let r = weights_r_real(t)?;
    if stats.m() != t.m() {
        return Err(Error::InvalidTargets(format!(
            "targets describe m = {} gaps but the decomposition has m = {}",
            t.m(),
            stats.m()
        )));
    }
    check_sign_invariant(t)?;
    let l0 = stats.l[0];
    let b0 = t.b[0];
    let mut alpha = Vec::with_capacity(t.m());
    let mut beta = Vec::with_capacity(t.m());
    for j in 0..t.m() {
        let weight = r[j] * (t.a[j] - b0);
        let radicand = t.a[j] * stats.l[j + 1] / (weight * l0);
        if !(radicand > T::zero()) {
            return Err(Error::NonpositiveRadicand { j: j + 1, value: radicand.lossy_f64() });
        }
        alpha.push(weight * l0 / T::from_count(stats.n[j]));
        beta.push(radicand.sqrt());
    }
    let gamma = b0 * (T::one() + r.iter().copied().sum::<T>()) * l0;
    CouplingSpec::new(alpha, beta, gamma)
}

/// `sign(B̃_i − Ã_j) = sign(Ã_i − Ã_j)` for `i ≠ j`, with `i` ranging over
/// `1..m`; holds for every interlaced target set.
fn check_sign_invariant<T: Scalar>(t: &GapTargets<T>) -> Result<()> {
    for j in 0..t.m() {
        for i in (0..t.m()).filter(|&i| i != j) {
            let lhs = t.b[i + 1] - t.a[j];
            let rhs = t.a[i] - t.a[j];
            if lhs.is_positive() != rhs.is_positive() {
                return Err(Error::InvalidTargets(format!("sign invariant fails for i = {}, j = {}", i + 1, j + 1)));
            }
        }
    }
    Ok(())
}

/// Constant spectral shift `γ̂` moving every `Ã_j` off zero.
///
/// `γ̂ = ½ · min` of the spacings adjacent to the zero target, halved again
/// while any shifted `Ã_j` is still zero. Returns `γ̂ = 0` and the unchanged
/// targets when no `Ã_j` vanishes.
pub fn shift_for_zero_target<T: Scalar>(t: &GapTargets<T>) -> Result<(T, GapTargets<T>)> {
    t.check_interlacing()?;
    let Some(j) = t.a.iter().position(|a| a.is_zero()) else {
        return Ok((T::zero(), t.clone()));
    };
    let two = T::one() + T::one();
    let spacing = {
        let below = t.a[j] - t.b[j];
        let above = t.b[j + 1] - t.a[j];
        if below < above {
            below
        } else {
            above
        }
    };
    let mut shift = spacing / two;
    for _ in 0..64 {
        let shifted = t.shifted(shift);
        if shifted.a.iter().all(|a| !a.is_zero()) {
            return Ok((shift, shifted));
        }
        shift = shift / two;
    }
    Err(Error::InvalidTargets("no admissible shift found".into()))
}
