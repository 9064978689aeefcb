//! Band functions over a θ-grid, spectral gaps and ε-convergence.
//!
//! Band `k` is `[min_θ λ_k(θ), max_θ λ_k(θ)]` over a uniform grid of the
//! torus that always contains `θ_p = (1, …, 1)` and `θ_a = (−1, …, −1)`.
//! Gaps are reported only below the window top `Λ₀/ε`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fiber::{Boundary, FiberSolver, VertexModel};
use crate::graph::{Decomposition, PeriodCell};
use crate::limit::{limit_endpoints, CouplingSpec, LimitEndpoints};
use crate::graph::component_stats;
use crate::scalar::Real;

/// Discretization and sampling parameters shared by every scan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScanConfig {
    /// Elements per unit length.
    pub mesh: usize,
    /// Two-mesh Richardson extrapolation of every eigenvalue.
    pub richardson: bool,
    /// Grid points per torus direction.
    pub grid: Vec<usize>,
    /// Number of bands computed.
    pub k_max: usize,
}

impl ScanConfig {
    /// 64 points for `n = 1`, 24 per direction otherwise; mesh 32 with
    /// Richardson extrapolation.
    pub fn for_dim(n: usize, k_max: usize) -> Self {
        let g = if n == 1 { 64 } else { 24 };
        Self { mesh: 32, richardson: true, grid: vec![g; n], k_max }
    }

    fn check(&self, n: usize) -> Result<()> {
        if self.grid.len() != n {
            return Err(Error::InvalidScan(format!("grid has {} directions, cell has {n}", self.grid.len())));
        }
        if self.grid.iter().any(|&g| g < 8) {
            return Err(Error::InvalidScan("at least 8 grid points per direction are required".into()));
        }
        if self.k_max == 0 {
            return Err(Error::InvalidScan("k_max must be positive".into()));
        }
        if self.mesh == 0 {
            return Err(Error::InvalidScan("mesh must be positive".into()));
        }
        Ok(())
    }
}

/// Grid points as fractions of a full turn: `φ = t/G` per direction, plus
/// `φ = ½` everywhere when some `G` is odd.
pub fn theta_grid<T: Real>(grid: &[usize]) -> Vec<Vec<T>> {
    let mut points: Vec<Vec<T>> = vec![Vec::new()];
    for &g in grid {
        points = points
            .into_iter()
            .flat_map(|prefix| {
                (0..g).map(move |t| {
                    let mut p = prefix.clone();
                    p.push(T::from_count(t) / T::from_count(g));
                    p
                })
            })
            .collect();
    }
    if grid.iter().any(|g| g % 2 == 1) {
        points.push(vec![T::lit(0.5); grid.len()]);
    }
    points
}

/// Indices of the points on the half-density grid (even `t` in every
/// direction), used for the resolution estimate.
fn coarse_indices(grid: &[usize]) -> Vec<usize> {
    let total: usize = grid.iter().product();
    (0..total)
        .filter(|&q| {
            let mut rem = q;
            let mut ok = true;
            for &g in grid.iter().rev() {
                ok &= (rem % g) % 2 == 0;
                rem /= g;
            }
            ok
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gap<T> {
    pub lower: T,
    pub upper: T,
    /// 1-based index of the band below.
    pub below_band: usize,
    /// 1-based index of the band above.
    pub above_band: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandStructure<T> {
    pub epsilon: T,
    pub k_max: usize,
    pub grid: Vec<usize>,
    /// Grid points in turns.
    pub theta: Vec<Vec<T>>,
    /// `eigenvalues[p][k]` = `λ_{k+1}` at `theta[p]`.
    pub eigenvalues: Vec<Vec<T>>,
    /// `[min, max]` per band.
    pub bands: Vec<(T, T)>,
    pub gaps: Vec<Gap<T>>,
    pub lambda0: T,
    /// `Λ₀/ε`.
    pub window_top: T,
    /// Per band, the larger change of either extremum between the half grid
    /// and the full grid.
    pub resolution: Vec<T>,
}

impl<T: Real> BandStructure<T> {
    fn from_samples(
        epsilon: T,
        k_max: usize,
        grid: Vec<usize>,
        theta: Vec<Vec<T>>,
        eigenvalues: Vec<Vec<T>>,
        lambda0: T,
    ) -> Self {
        let extrema = |idx: &mut dyn Iterator<Item = usize>| {
            let mut b = vec![(T::infinity(), T::neg_infinity()); k_max];
            for p in idx {
                for (k, &x) in eigenvalues[p].iter().enumerate() {
                    b[k].0 = b[k].0.min(x);
                    b[k].1 = b[k].1.max(x);
                }
            }
            b
        };
        let bands = extrema(&mut (0..eigenvalues.len()));
        let coarse = extrema(&mut coarse_indices(&grid).into_iter());
        let resolution =
            bands.iter().zip(&coarse).map(|(f, c)| (f.0 - c.0).abs().max((f.1 - c.1).abs())).collect();
        let window_top = lambda0 / epsilon;
        let tol_gap = T::lit(1e-9) * T::one().max(window_top.abs());
        let mut gaps = Vec::new();
        let mut top = T::neg_infinity();
        let mut top_band = 0;
        for k in 0..k_max {
            if k > 0 && bands[k].0 - top > tol_gap && top < window_top {
                gaps.push(Gap { lower: top, upper: bands[k].0, below_band: top_band + 1, above_band: k + 1 });
            }
            if bands[k].1 >= top {
                top = bands[k].1;
                top_band = k;
            }
        }
        Self { epsilon, k_max, grid, theta, eigenvalues, bands, gaps, lambda0, window_top, resolution }
    }
}

/// `B_{0,ε}`, `A_{j,ε}` and `B_{j,ε}` read off a band structure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapEndpoints<T> {
    pub b0: T,
    #[serde(rename = "A")]
    pub a: Vec<T>,
    /// `B_1, …, B_m`.
    #[serde(rename = "B")]
    pub b: Vec<T>,
}

/// Endpoints of the first `m` gaps; each gap `j` must separate bands `j`
/// and `j + 1` below the window top.
pub fn gap_endpoints<T: Real>(bs: &BandStructure<T>, m: usize) -> Result<GapEndpoints<T>> {
    if bs.k_max < m + 1 {
        return Err(Error::InvalidScan(format!("need at least {} bands for {m} gaps", m + 1)));
    }
    let found = (1..=m)
        .filter(|&j| bs.gaps.iter().any(|g| g.below_band == j && g.above_band == j + 1))
        .count();
    if found < m {
        return Err(Error::GapCountMismatch { expected: m, found, epsilon: bs.epsilon.lossy_f64() });
    }
    Ok(GapEndpoints {
        b0: bs.bands[0].0,
        a: (0..m).map(|j| bs.bands[j].1).collect(),
        b: (1..=m).map(|j| bs.bands[j].0).collect(),
    })
}

/// `Λ₀` with its ingredients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lambda0<T> {
    pub value: T,
    /// `λ_1` of the antiperiodic Laplacian on `Y_0`.
    pub skeleton_antiperiodic: T,
    /// `λ_2` of the Neumann Laplacian on each `Y_j`.
    pub attached_neumann: Vec<T>,
}

/// `Λ₀ = ½ · min(λ_1(Y_0, θ_a), λ_2(Y_1, N), …, λ_2(Y_m, N))`, all with
/// `ε = 1` and no couplings.
pub fn lambda0<T: Real>(cell: &PeriodCell<T>, d: &Decomposition, mesh: usize, richardson: bool) -> Result<Lambda0<T>> {
    let resolved = d.resolve(cell)?;
    let skeleton = cell.restrict(&resolved.edges_of(0))?;
    let y0 = FiberSolver::new(&skeleton, &VertexModel::Kirchhoff, T::one(), mesh, richardson)?
        .eigenvalues(&Boundary::antiperiodic(cell.dim()), 1)?[0];
    let mut attached = Vec::with_capacity(d.m);
    for j in 1..=d.m {
        let sub = cell.restrict(&resolved.edges_of(j))?;
        let ev = FiberSolver::new(&sub, &VertexModel::Kirchhoff, T::one(), mesh, richardson)?
            .eigenvalues(&Boundary::Neumann, 2)?;
        attached.push(ev[1]);
    }
    let value = attached.iter().fold(y0, |acc, &x| acc.min(x)) / T::lit(2.0);
    if !(value > T::zero()) {
        return Err(Error::NonpositiveLambda0(value.lossy_f64()));
    }
    Ok(Lambda0 { value, skeleton_antiperiodic: y0, attached_neumann: attached })
}

/// Band computations for one cell and decomposition, with `Λ₀` computed once.
#[derive(Debug, Clone)]
pub struct BandScanner<T> {
    cell: PeriodCell<T>,
    decomposition: Decomposition,
    config: ScanConfig,
    lambda0: Lambda0<T>,
}

impl<T: Real> BandScanner<T> {
    pub fn new(cell: PeriodCell<T>, decomposition: Decomposition, config: ScanConfig) -> Result<Self> {
        config.check(cell.dim())?;
        let lambda0 = lambda0(&cell, &decomposition, config.mesh, config.richardson)?;
        Ok(Self { cell, decomposition, config, lambda0 })
    }

    pub fn config(&self) -> &ScanConfig {
        &self.config
    }

    pub fn cell(&self) -> &PeriodCell<T> {
        &self.cell
    }

    pub fn decomposition(&self) -> &Decomposition {
        &self.decomposition
    }

    pub fn lambda0(&self) -> &Lambda0<T> {
        &self.lambda0
    }

    /// Solver for the coupled fiber operator at `epsilon`.
    pub fn solver(&self, couplings: &CouplingSpec<T>, epsilon: T) -> Result<FiberSolver<T>> {
        let model = VertexModel::coupled(&self.cell, &self.decomposition, couplings.clone())?;
        FiberSolver::new(&self.cell, &model, epsilon, self.config.mesh, self.config.richardson)
    }

    /// Lowest `k_max` eigenvalues at every grid point, in grid order.
    pub fn sweep(&self, solver: &FiberSolver<T>, theta: &[Vec<T>], k_max: usize) -> Result<Vec<Vec<T>>> {
        theta.par_iter().map(|phi| solver.eigenvalues(&Boundary::from_turns(phi), k_max)).collect()
    }

    pub fn bands(&self, couplings: &CouplingSpec<T>, epsilon: T) -> Result<BandStructure<T>> {
        self.bands_on_grid(couplings, epsilon, &self.config.grid)
    }

    pub fn bands_on_grid(&self, couplings: &CouplingSpec<T>, epsilon: T, grid: &[usize]) -> Result<BandStructure<T>> {
        let solver = self.solver(couplings, epsilon)?;
        let theta = theta_grid(grid);
        let eigenvalues = self.sweep(&solver, &theta, self.config.k_max)?;
        Ok(BandStructure::from_samples(epsilon, self.config.k_max, grid.to_vec(), theta, eigenvalues, self.lambda0.value))
    }

    /// `max_θ λ_k(θ)` over `grid` (right endpoint of band `k`, 1-based).
    pub fn band_max(&self, couplings: &CouplingSpec<T>, epsilon: T, k: usize, grid: &[usize]) -> Result<T> {
        let solver = self.solver(couplings, epsilon)?;
        let values = self.sweep(&solver, &theta_grid(grid), k)?;
        Ok(values.iter().map(|v| v[k - 1]).fold(T::neg_infinity(), T::max))
    }

    /// Neumann or Dirichlet comparison eigenvalues on the same mesh.
    pub fn comparison(&self, couplings: &CouplingSpec<T>, epsilon: T, boundary: &Boundary<T>) -> Result<Vec<T>> {
        self.solver(couplings, epsilon)?.eigenvalues(boundary, self.config.k_max)
    }

    pub fn convergence_study(&self, couplings: &CouplingSpec<T>, epsilons: &[T]) -> Result<ConvergenceReport<T>> {
        if epsilons.len() < 3 {
            return Err(Error::InvalidScan("a convergence study needs at least three epsilons".into()));
        }
        if epsilons.windows(2).any(|w| !(w[1] < w[0])) || epsilons.iter().any(|&e| !(e > T::zero())) {
            return Err(Error::InvalidScan("epsilons must be positive and strictly decreasing".into()));
        }
        let stats = component_stats(&self.cell, &self.decomposition)?;
        let limit = limit_endpoints(&stats, couplings)?;
        let m = stats.m();
        if self.config.k_max < m + 1 {
            return Err(Error::InvalidScan(format!("need k_max >= {} for {m} gaps", m + 1)));
        }
        // Limit values in component order → band order.
        let limit_a = limit.a.clone();
        let limit_b = limit.b.clone();
        let tol_one_sided = T::lit(1e-8) * T::one().max(limit_a[m - 1].abs());

        let mut rows = Vec::with_capacity(epsilons.len());
        for &eps in epsilons {
            let bs = self.bands(couplings, eps)?;
            let gap_count = bs.gaps.len();
            let row = match gap_endpoints(&bs, m) {
                Ok(ep) => {
                    let err_a: Vec<T> = (0..m).map(|j| limit_a[j] - ep.a[j]).collect();
                    let mut err_b = vec![limit_b[0] - ep.b0];
                    err_b.extend((0..m).map(|j| limit_b[j + 1] - ep.b[j]));
                    EpsilonRow { epsilon: eps, gap_count, endpoints: Some(ep), errors_a: Some(err_a), errors_b: Some(err_b), failure: None }
                }
                Err(e) => EpsilonRow { epsilon: eps, gap_count, endpoints: None, errors_a: None, errors_b: None, failure: Some(e.to_string()) },
            };
            rows.push(row);
        }

        let fit = |series: Vec<(T, T)>, reference: T| -> EndpointFit<T> {
            let floor = T::lit(EXACT_FLOOR) * T::one().max(reference.abs());
            let fitted_c = series.iter().map(|&(e, err)| err / e.sqrt()).fold(T::neg_infinity(), T::max);
            let usable: Vec<(T, T)> = series.iter().filter(|p| p.1 > floor).map(|&(e, err)| (e.ln(), err.ln())).collect();
            let rate = if usable.len() >= 2 { Some(least_squares_slope(&usable)) } else { None };
            let one_sided = series.iter().all(|p| p.1 >= -tol_one_sided);
            let monotone = series.windows(2).all(|w| w[1].1 <= w[0].1 + tol_one_sided);
            EndpointFit { rate, fitted_c, one_sided, monotone, exact: usable.len() < 2 }
        };
        let ok_rows: Vec<&EpsilonRow<T>> = rows.iter().filter(|r| r.failure.is_none()).collect();
        let fits_a = (0..m)
            .map(|j| fit(ok_rows.iter().map(|r| (r.epsilon, r.errors_a.as_ref().unwrap()[j])).collect(), limit_a[j]))
            .collect();
        let fits_b = (0..=m)
            .map(|j| fit(ok_rows.iter().map(|r| (r.epsilon, r.errors_b.as_ref().unwrap()[j])).collect(), limit_b[j]))
            .collect();
        Ok(ConvergenceReport { limit, rows, fits_a, fits_b, tol_one_sided })
    }
}

/// Errors below `EXACT_FLOOR · max(1, |limit|)` count as exact and are left
/// out of the log-log fit; the floor sits above the absolute resolution
/// `~EPS·‖K‖` of inertia bisection.
const EXACT_FLOOR: f64 = 1e-9;

fn least_squares_slope<T: Real>(points: &[(T, T)]) -> T {
    let n = T::from_count(points.len());
    let mx = points.iter().map(|p| p.0).sum::<T>() / n;
    let my = points.iter().map(|p| p.1).sum::<T>() / n;
    let sxy = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<T>();
    let sxx = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum::<T>();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonRow<T> {
    pub epsilon: T,
    pub gap_count: usize,
    pub endpoints: Option<GapEndpoints<T>>,
    /// `A_j − A_{j,ε}`.
    pub errors_a: Option<Vec<T>>,
    /// `B_j − B_{j,ε}` for `j = 0..m`.
    pub errors_b: Option<Vec<T>>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EndpointFit<T> {
    /// Least-squares slope of `log err` against `log ε`; `None` when fewer
    /// than two errors exceed the exactness floor.
    pub rate: Option<T>,
    /// `max err/√ε`.
    pub fitted_c: T,
    pub one_sided: bool,
    /// Errors nonincreasing as ε decreases.
    pub monotone: bool,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport<T> {
    pub limit: LimitEndpoints<T>,
    pub rows: Vec<EpsilonRow<T>>,
    pub fits_a: Vec<EndpointFit<T>>,
    pub fits_b: Vec<EndpointFit<T>>,
    pub tol_one_sided: T,
}

impl<T: Real> ConvergenceReport<T> {
    /// Smallest fitted rate over all endpoints that have one.
    pub fn min_rate(&self) -> Option<T> {
        self.fits_a.iter().chain(&self.fits_b).filter_map(|f| f.rate).reduce(T::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::twin_chain;
    use std::f64::consts::PI;

    /// Eight grid points alternating between two eigenvalue lists.
    fn synthetic(even: &[f64], odd: &[f64], lambda0: f64) -> BandStructure<f64> {
        let theta = theta_grid(&[8]);
        let eigenvalues = (0..8).map(|p| if p % 2 == 0 { even.to_vec() } else { odd.to_vec() }).collect();
        BandStructure::from_samples(1.0, even.len(), vec![8], theta, eigenvalues, lambda0)
    }

    #[test]
    fn grid_contains_distinguished_points() {
        let g: Vec<Vec<f64>> = theta_grid(&[8]);
        assert_eq!(g.len(), 8);
        assert!(g.contains(&vec![0.0]) && g.contains(&vec![0.5]));
        let odd: Vec<Vec<f64>> = theta_grid(&[9]);
        assert_eq!(odd.len(), 10);
        assert_eq!(odd.last().unwrap(), &vec![0.5]);
        let two: Vec<Vec<f64>> = theta_grid(&[8, 8]);
        assert_eq!(two.len(), 64);
        assert!(two.contains(&vec![0.5, 0.5]));
        assert_eq!(coarse_indices(&[8, 8]).len(), 16);
    }

    #[test]
    fn twin_chain_lambda0() {
        let (cell, d) = twin_chain::<f64>();
        let l0 = lambda0(&cell, &d, 32, true).unwrap();
        assert!((l0.skeleton_antiperiodic - PI * PI / 4.0).abs() < 1e-6);
        assert!((l0.attached_neumann[0] - PI * PI).abs() < 1e-5);
        assert!((l0.value - PI * PI / 8.0).abs() < 1e-6);
    }

    #[test]
    fn gaps_are_detected_between_bands() {
        let bs = synthetic(&[0.0, 2.0, 2.5], &[1.0, 3.0, 9.0], 4.0);
        assert_eq!(bs.resolution, vec![1.0, 1.0, 6.5]);
        assert_eq!(bs.bands, vec![(0.0, 1.0), (2.0, 3.0), (2.5, 9.0)]);
        assert_eq!(bs.gaps.len(), 1);
        assert_eq!(bs.gaps[0], Gap { lower: 1.0, upper: 2.0, below_band: 1, above_band: 2 });
        let ep = gap_endpoints(&bs, 1).unwrap();
        assert_eq!((ep.b0, ep.a[0], ep.b[0]), (0.0, 1.0, 2.0));
        assert!(matches!(gap_endpoints(&bs, 2), Err(Error::GapCountMismatch { .. })));
        let none = gap_endpoints(&bs, 0).unwrap();
        assert!(none.a.is_empty() && none.b.is_empty());
    }

    #[test]
    fn gaps_above_the_window_are_ignored() {
        let bs = synthetic(&[0.0, 5.0], &[1.0, 7.0], 0.5);
        assert!(bs.gaps.is_empty());
    }

    #[test]
    fn slope_of_exact_power_law() {
        let pts: Vec<(f64, f64)> = [0.1, 0.05, 0.025].iter().map(|&e: &f64| (e.ln(), (3.0 * e.powf(0.75)).ln())).collect();
        assert!((least_squares_slope(&pts) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn zero_couplings_band_starts_at_zero() {
        let (cell, d) = twin_chain::<f64>();
        let scanner = BandScanner::new(cell, d, ScanConfig { mesh: 16, richardson: false, grid: vec![8], k_max: 3 }).unwrap();
        let bs = scanner.bands(&CouplingSpec::zero(1), 1.0).unwrap();
        assert!(bs.bands[0].0.abs() < 1e-9);
    }
}
