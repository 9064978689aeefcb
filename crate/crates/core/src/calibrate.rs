//! Fixed-ε calibration of `α` so the right band endpoints `A_{k,ε}` hit the
//! targets `Ã_k` exactly, with `β̃` and `γ̃` held at their designed values.
//!
//! `F_k(α) = max_θ λ_k(θ)` is increasing in every `α_j`. Once the mixed box
//! corners bracket the targets, Gauss–Seidel sweeps of per-coordinate
//! bisection stay inside the box.

use serde::Serialize;

use crate::bands::{gap_endpoints, BandScanner, GapEndpoints};
use crate::design::GapTargets;
use crate::error::{Error, Result};
use crate::graph::{component_stats, ComponentStats};
use crate::limit::{limit_endpoints, CouplingSpec};
use crate::scalar::Real;

/// `𝒟 = Π_k [center_k − δ, center_k + δ]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationBox<T> {
    pub center: Vec<T>,
    pub half_width: T,
}

impl<T: Real> CalibrationBox<T> {
    /// Checked constructor: `δ > 0` and no coordinate interval contains zero.
    pub fn new(center: Vec<T>, half_width: T) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::InvalidBox("the box needs at least one coordinate".into()));
        }
        if !(half_width > T::zero()) || !half_width.is_finite() {
            return Err(Error::InvalidBox("half width must be positive and finite".into()));
        }
        if let Some(k) = center.iter().position(|c| !c.is_finite() || !(c.abs() > half_width)) {
            return Err(Error::InvalidBox(format!("coordinate {} of the box contains zero", k + 1)));
        }
        Ok(Self { center, half_width })
    }

    /// `δ = ¼ · min_k |center_k|`.
    pub fn around(center: Vec<T>) -> Result<Self> {
        let delta = center.iter().fold(T::infinity(), |acc, c| acc.min(c.abs())) * T::lit(0.25);
        Self::new(center, delta)
    }

    pub fn m(&self) -> usize {
        self.center.len()
    }

    pub fn lower(&self, k: usize) -> T {
        self.center[k] - self.half_width
    }

    pub fn upper(&self, k: usize) -> T {
        self.center[k] + self.half_width
    }

    pub fn contains(&self, alpha: &[T]) -> bool {
        alpha.len() == self.m() && (0..self.m()).all(|k| self.lower(k) <= alpha[k] && alpha[k] <= self.upper(k))
    }

    /// Coordinate `k` at its lower bound, every other coordinate at its upper.
    pub fn corner_minus(&self, k: usize) -> Vec<T> {
        (0..self.m()).map(|i| if i == k { self.lower(i) } else { self.upper(i) }).collect()
    }

    /// Coordinate `k` at its upper bound, every other coordinate at its lower.
    pub fn corner_plus(&self, k: usize) -> Vec<T> {
        (0..self.m()).map(|i| if i == k { self.upper(i) } else { self.lower(i) }).collect()
    }

    /// `A_j[α] < A_{j+1}[α]` for every `α` in the box. `A_j` is increasing in
    /// `α_j` alone, so it suffices to compare upper and lower faces.
    pub fn keeps_order(&self, beta: &[T], stats: &ComponentStats<T>) -> bool {
        let a = |j: usize, alpha: T| alpha * beta[j] * beta[j] * T::from_count(stats.n[j]) / stats.l[j + 1];
        (0..self.m().saturating_sub(1)).all(|j| a(j, self.upper(j)) < a(j + 1, self.lower(j + 1)))
    }

    fn with_half_width(&self, half_width: T) -> Result<Self> {
        Self::new(self.center.clone(), half_width)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationOptions<T> {
    /// Required `|F_k(α) − Ã_k|`.
    pub tol: T,
    pub max_sweeps: usize,
    /// Box doublings tried when the corners do not bracket the targets.
    pub max_expansions: usize,
}

impl<T: Real> Default for CalibrationOptions<T> {
    fn default() -> Self {
        Self { tol: T::lit(1e-6), max_sweeps: 50, max_expansions: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationReport<T> {
    pub alpha: Vec<T>,
    pub alpha_tilde: Vec<T>,
    pub beta: Vec<T>,
    pub gamma: T,
    pub epsilon: T,
    #[serde(rename = "box")]
    pub bounds: CalibrationBox<T>,
    /// `(F_k^-, F_k^+)` at the mixed corners of the final box.
    pub bracket: Vec<(T, T)>,
    pub sweeps: usize,
    /// Number of `F_k` evaluations.
    pub evaluations: usize,
    pub grid: Vec<usize>,
    /// `F_k(α) − Ã_k` on the calibration grid.
    pub residuals: Vec<T>,
    pub doubled_grid: Vec<usize>,
    /// `F_k(α) − Ã_k` on the doubled grid.
    pub doubled_residuals: Vec<T>,
    /// Gap endpoints of the calibrated operator on the calibration grid;
    /// `None` when fewer than `m` gaps open.
    pub endpoints: Option<GapEndpoints<T>>,
    /// `B_j[α]` of the limit problem at the calibrated `α`, `j = 0..m`.
    pub limit_b: Vec<T>,
    /// `B̃_j − B_{j,ε}`, `j = 0..m`, when the gaps are resolved.
    pub drift_b: Option<Vec<T>>,
}

impl<T: Real> CalibrationReport<T> {
    pub fn max_residual(&self) -> T {
        max_abs(&self.residuals)
    }

    pub fn max_doubled_residual(&self) -> T {
        max_abs(&self.doubled_residuals)
    }
}

fn max_abs<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, x| acc.max(x.abs()))
}

/// `F_k(α)` on `grid`, `k` 1-based.
pub fn band_edge_a<T: Real>(
    scanner: &BandScanner<T>,
    k: usize,
    alpha: &[T],
    beta: &[T],
    gamma: T,
    epsilon: T,
    grid: &[usize],
) -> Result<T> {
    let c = CouplingSpec::new(alpha.to_vec(), beta.to_vec(), gamma)?;
    scanner.band_max(&c, epsilon, k, grid)
}

/// Bisection steps allowed per coordinate solve.
const MAX_BISECTIONS: usize = 200;

struct Calibrator<'a, T> {
    scanner: &'a BandScanner<T>,
    beta: &'a [T],
    gamma: T,
    epsilon: T,
    grid: Vec<usize>,
    evaluations: usize,
}

impl<T: Real> Calibrator<'_, T> {
    fn f(&mut self, k: usize, alpha: &[T]) -> Result<T> {
        self.evaluations += 1;
        band_edge_a(self.scanner, k + 1, alpha, self.beta, self.gamma, self.epsilon, &self.grid)
    }

    /// Solves `F_k(…, x, …) = target` for coordinate `k` on `[lo, hi]`.
    fn solve_coordinate(&mut self, k: usize, alpha: &mut [T], lo: T, hi: T, target: T, tol: T) -> Result<()> {
        let (mut lo, mut hi) = (lo, hi);
        for _ in 0..MAX_BISECTIONS {
            let mid = (lo + hi) / T::lit(2.0);
            alpha[k] = mid;
            let r = self.f(k, alpha)? - target;
            if r.abs() <= tol {
                return Ok(());
            }
            if r < T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= T::epsilon() * T::lit(4.0) * mid.abs() {
                return Ok(());
            }
        }
        Ok(())
    }
}

/// Calibrates `α` within a box around the designed `α̃` so that
/// `|F_k(α) − Ã_k| ≤ tol` on the scanner's grid.
///
/// Without an explicit box, `δ = ¼ · min|α̃_k|`. The half width is halved
/// until the order of the `A_j` is preserved on the whole box, then doubled
/// (at most `max_expansions` times) until the mixed corners bracket every
/// target.
pub fn calibrate<T: Real>(
    scanner: &BandScanner<T>,
    targets: &GapTargets<T>,
    designed: &CouplingSpec<T>,
    epsilon: T,
    bounds: Option<CalibrationBox<T>>,
    options: &CalibrationOptions<T>,
) -> Result<CalibrationReport<T>> {
    targets.check()?;
    designed.check()?;
    let m = targets.m();
    if designed.m() != m {
        return Err(Error::InvalidTargets(format!("targets have m = {m}, couplings have m = {}", designed.m())));
    }
    if !(epsilon > T::zero()) {
        return Err(Error::InvalidScan("epsilon must be positive".into()));
    }
    if !(options.tol > T::zero()) || options.max_sweeps == 0 {
        return Err(Error::InvalidScan("tolerance and sweep count must be positive".into()));
    }
    let stats = component_stats(scanner.cell(), scanner.decomposition())?;
    if stats.m() != m {
        return Err(Error::InvalidTargets(format!("targets have m = {m}, decomposition has m = {}", stats.m())));
    }
    let mut bounds = match bounds {
        Some(b) if b.m() != m => return Err(Error::InvalidBox(format!("box has {} coordinates, need {m}", b.m()))),
        Some(b) => b,
        None => CalibrationBox::around(designed.alpha.clone())?,
    };
    for _ in 0..60 {
        if bounds.keeps_order(&designed.beta, &stats) {
            break;
        }
        bounds = bounds.with_half_width(bounds.half_width / T::lit(2.0))?;
    }
    if !bounds.keeps_order(&designed.beta, &stats) {
        return Err(Error::InvalidBox("no half width keeps the limit endpoints ordered".into()));
    }

    let mut cal = Calibrator {
        scanner,
        beta: &designed.beta,
        gamma: designed.gamma,
        epsilon,
        grid: scanner.config().grid.clone(),
        evaluations: 0,
    };

    let mut bracket = Vec::with_capacity(m);
    let mut expansions = 0;
    loop {
        bracket.clear();
        let mut failure = None;
        for k in 0..m {
            let lower = cal.f(k, &bounds.corner_minus(k))?;
            let upper = cal.f(k, &bounds.corner_plus(k))?;
            bracket.push((lower, upper));
            if failure.is_none() && !(lower < targets.a[k] && targets.a[k] < upper) {
                failure = Some(Error::BracketingFailed {
                    k: k + 1,
                    lower: lower.lossy_f64(),
                    target: targets.a[k].lossy_f64(),
                    upper: upper.lossy_f64(),
                });
            }
        }
        let Some(err) = failure else { break };
        if expansions == options.max_expansions {
            return Err(err);
        }
        let wider = bounds.with_half_width(bounds.half_width * T::lit(2.0));
        match wider {
            Ok(b) if b.keeps_order(&designed.beta, &stats) => bounds = b,
            _ => return Err(err),
        }
        expansions += 1;
    }

    let coordinate_tol = options.tol / T::lit(10.0);
    let mut alpha: Vec<T> = designed.alpha.clone();
    let mut residuals = vec![T::zero(); m];
    let mut sweeps = 0;
    while sweeps < options.max_sweeps {
        sweeps += 1;
        for k in 0..m {
            cal.solve_coordinate(k, &mut alpha, bounds.lower(k), bounds.upper(k), targets.a[k], coordinate_tol)?;
        }
        for k in 0..m {
            residuals[k] = cal.f(k, &alpha)? - targets.a[k];
        }
        if max_abs(&residuals) <= options.tol {
            break;
        }
    }
    if max_abs(&residuals) > options.tol {
        return Err(Error::NotConverged {
            sweeps,
            residual: max_abs(&residuals).lossy_f64(),
            alpha: alpha.iter().map(|a| a.lossy_f64()).collect(),
        });
    }

    let doubled_grid: Vec<usize> = cal.grid.iter().map(|g| 2 * g).collect();
    let mut doubled_residuals = Vec::with_capacity(m);
    for k in 0..m {
        let f = band_edge_a(scanner, k + 1, &alpha, &designed.beta, designed.gamma, epsilon, &doubled_grid)?;
        doubled_residuals.push(f - targets.a[k]);
    }
    let calibrated = CouplingSpec::new(alpha.clone(), designed.beta.clone(), designed.gamma)?;
    let endpoints = gap_endpoints(&scanner.bands(&calibrated, epsilon)?, m).ok();
    let limit_b = limit_endpoints(&stats, &calibrated)?.b;
    let drift_b = endpoints.as_ref().map(|e| {
        std::iter::once(e.b0).chain(e.b.iter().copied()).zip(&targets.b).map(|(b, &t)| t - b).collect()
    });

    Ok(CalibrationReport {
        alpha,
        alpha_tilde: designed.alpha.clone(),
        beta: designed.beta.clone(),
        gamma: designed.gamma,
        epsilon,
        bounds,
        bracket,
        sweeps,
        evaluations: cal.evaluations,
        grid: cal.grid,
        residuals,
        doubled_grid,
        doubled_residuals,
        endpoints,
        limit_b,
        drift_b,
    })
}
