//! Fiber operators on one period cell.
//!
//! Each edge carries `−ε⁻¹ d²/dx²`, discretized with piecewise-linear
//! elements and a consistent mass matrix. Vertices carry Kirchhoff, δ (at
//! `ṽ`) or δ′-type couplings; a vertex of `𝒱_j` holds two values, one seen by
//! `Y_0` edges and one seen by `Y_j` edges. Boundary pairs are glued with a
//! Floquet phase, left free (Neumann) or clamped (Dirichlet).
//!
//! Eigenvalues are found by inertia counting: every edge's interior chain is
//! eliminated exactly, leaving a small Hermitian matrix on the vertex values,
//! and Sylvester's law gives the number of eigenvalues below a shift. The
//! dense generalized eigenproblem ([`FiberProblem`]) is kept as a reference.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::graph::{validate_cell, Decomposition, PeriodCell, ResolvedDecomposition, Violation};
use crate::limit::CouplingSpec;
use crate::linalg::{self, CMatrix};
use crate::scalar::Real;

/// Boundary treatment of the paired boundary vertices.
#[derive(Debug, Clone, PartialEq)]
pub enum Boundary<T> {
    /// `u(w) = θ^i u(v)` for every pair `(v, w, i)`.
    Quasiperiodic(Vec<Complex<T>>),
    /// Pair constraints dropped.
    Neumann,
    /// Both paired values set to zero.
    Dirichlet,
}

impl<T: Real> Boundary<T> {
    /// `θ_p = (1, …, 1)`.
    pub fn periodic(dim: usize) -> Self {
        Boundary::Quasiperiodic(vec![Complex::new(T::one(), T::zero()); dim])
    }

    /// `θ_a = (−1, …, −1)`.
    pub fn antiperiodic(dim: usize) -> Self {
        Boundary::Quasiperiodic(vec![Complex::new(-T::one(), T::zero()); dim])
    }

    /// `θ_k = exp(2πi φ_k)`, with `φ_k` a fraction of a full turn.
    pub fn from_turns(phi: &[T]) -> Self {
        let two_pi = T::PI() + T::PI();
        Boundary::Quasiperiodic(phi.iter().map(|&p| Complex::from_polar(T::one(), two_pi * p)).collect())
    }

    /// Same boundary with every phase conjugated.
    pub fn conjugate(&self) -> Self {
        match self {
            Boundary::Quasiperiodic(t) => Boundary::Quasiperiodic(t.iter().map(|z| z.conj()).collect()),
            other => other.clone(),
        }
    }

    pub(crate) fn check(&self, dim: usize) -> Result<()> {
        if let Boundary::Quasiperiodic(theta) = self {
            if theta.len() != dim {
                return Err(Error::InvalidFiberSpec(format!(
                    "theta has {} components for a {dim}-periodic cell",
                    theta.len()
                )));
            }
            let tol = T::tolerance(1e-14) * T::lit(4.0);
            if let Some(k) = theta.iter().position(|z| !((z.norm() - T::one()).abs() <= tol)) {
                return Err(Error::InvalidFiberSpec(format!("theta_{} is not unimodular", k + 1)));
            }
        }
        Ok(())
    }

    /// `θ^i = ∏ θ_k^{i_k}`.
    pub(crate) fn phase(theta: &[Complex<T>], shift: &[i64]) -> Complex<T> {
        theta.iter().zip(shift).fold(Complex::new(T::one(), T::zero()), |acc, (z, &s)| {
            let base = if s < 0 { z.conj() } else { *z };
            acc * base.powu(s.unsigned_abs() as u32)
        })
    }
}

/// Vertex conditions used by the fiber operator.
#[derive(Debug, Clone, PartialEq)]
pub enum VertexModel<T> {
    /// Plain Laplacian: Kirchhoff conditions at every interior vertex.
    Kirchhoff,
    /// δ at `ṽ`, δ′-type at each `𝒱_j`, Kirchhoff elsewhere.
    Coupled { decomposition: ResolvedDecomposition, couplings: CouplingSpec<T> },
}

impl<T: Real> VertexModel<T> {
    /// Resolve `d` against `cell`. Couplings must be finite and match `m`;
    /// zero `α_j` is allowed (the attached component then decouples).
    pub fn coupled(cell: &PeriodCell<T>, d: &Decomposition, couplings: CouplingSpec<T>) -> Result<Self> {
        couplings.check_finite()?;
        if couplings.m() != d.m {
            return Err(Error::InvalidCouplings(format!(
                "couplings describe m = {} components but the decomposition has m = {}",
                couplings.m(),
                d.m
            )));
        }
        Ok(VertexModel::Coupled { decomposition: d.resolve(cell)?, couplings })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct EdgeLayout<T> {
    pub(crate) start: usize,
    pub(crate) end: usize,
    pub(crate) length: T,
    elements: usize,
    h: T,
    /// First interior node in the global node numbering.
    interior: usize,
    /// Per interior-chain mode: `cos(kπ/(p+1))` and `φ_k(1)²`.
    modes: Vec<(T, T)>,
}

/// Chain modes with `|μ_k|` below this fraction of the chain scale stay
/// uncondensed.
const MODE_KEEP: f64 = 1e-2;

fn chain_modes<T: Real>(p: usize) -> Vec<(T, T)> {
    let denom = T::from_count(p + 1);
    (1..=p)
        .map(|k| {
            let angle = T::PI() * T::from_count(k) / denom;
            let s = angle.sin();
            (angle.cos(), T::lit(2.0) * s * s / denom)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Penalty<T> {
    pub(crate) side0: usize,
    pub(crate) side_j: usize,
    pub(crate) alpha: T,
    pub(crate) beta: T,
}

/// Mesh and vertex bookkeeping for one cell, vertex model, ε and mesh size.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberModel<T> {
    lattice_dim: usize,
    epsilon: T,
    pub(crate) vertex_nodes: usize,
    interior_nodes: usize,
    pub(crate) edges: Vec<EdgeLayout<T>>,
    pub(crate) pairs: Vec<(usize, usize, Vec<i64>)>,
    pub(crate) penalties: Vec<Penalty<T>>,
    pub(crate) delta: Option<(usize, T)>,
    /// Largest stiffness diagonal, used for absolute tolerances.
    scale: T,
}

/// Elements on an edge of length `len`: `max(4, ⌈mesh·len⌉) · refine`.
pub fn elements_on_edge<T: Real>(len: T, mesh: usize, refine: usize) -> usize {
    let raw = (T::from_count(mesh) * len).ceil().to_usize().unwrap_or(usize::MAX / 4);
    raw.max(4) * refine
}

impl<T: Real> FiberModel<T> {
    pub fn new(cell: &PeriodCell<T>, model: &VertexModel<T>, epsilon: T, mesh: usize, refine: usize) -> Result<Self> {
        // A line is a legitimate fiber domain; only the structural invariants matter here.
        let mut report = validate_cell(cell);
        report.violations.retain(|v| *v != Violation::GraphIsLine);
        if !report.is_ok() {
            return Err(Error::InvalidCell(report.summary()));
        }
        if !(epsilon > T::zero()) || !epsilon.is_finite() {
            return Err(Error::InvalidFiberSpec("epsilon must be positive and finite".into()));
        }
        if mesh == 0 || refine == 0 {
            return Err(Error::InvalidFiberSpec("mesh density must be positive".into()));
        }

        let nv = cell.vertices().len();
        // Second node for every 𝒱_j vertex.
        let mut side_j_node = vec![None; nv];
        let mut vertex_nodes = nv;
        let (component, penalties_src, delta_src) = match model {
            VertexModel::Kirchhoff => (None, Vec::new(), None),
            VertexModel::Coupled { decomposition, couplings } => {
                if decomposition.component.len() != cell.edges().len() {
                    return Err(Error::InvalidDecomposition("decomposition does not match the cell".into()));
                }
                let mut pens = Vec::new();
                for (j, set) in decomposition.attachments.iter().enumerate() {
                    for &v in set {
                        side_j_node[v] = Some((vertex_nodes, j + 1));
                        pens.push((v, vertex_nodes, couplings.alpha[j], couplings.beta[j]));
                        vertex_nodes += 1;
                    }
                }
                (Some(&decomposition.component), pens, Some((decomposition.tilde_v, couplings.gamma)))
            }
        };
        let node_for = |v: usize, e: usize| match (side_j_node[v], component) {
            (Some((node, j)), Some(comp)) if comp[e] == j => node,
            _ => v,
        };

        let mut edges = Vec::with_capacity(cell.edges().len());
        let mut interior = vertex_nodes;
        let mut scale = T::zero();
        for (e, edge) in cell.edges().iter().enumerate() {
            let (a, b) = cell.edge_ends(e);
            let elements = elements_on_edge(edge.length, mesh, refine);
            let h = edge.length / T::from_count(elements);
            scale = scale.max(T::lit(2.0) / (epsilon * h));
            edges.push(EdgeLayout {
                start: node_for(a, e),
                end: node_for(b, e),
                length: edge.length,
                elements,
                h,
                interior,
                modes: chain_modes(elements - 1),
            });
            interior += elements - 1;
        }
        let pairs = cell
            .pair_ends()
            .iter()
            .zip(cell.boundary_pairs())
            .map(|(&(v, w), p)| (v, w, p.shift.clone()))
            .collect();
        let penalties = penalties_src
            .into_iter()
            .map(|(v, node, alpha, beta)| Penalty { side0: v, side_j: node, alpha, beta })
            .collect();
        Ok(Self {
            lattice_dim: cell.dim(),
            epsilon,
            vertex_nodes,
            interior_nodes: interior - vertex_nodes,
            edges,
            pairs,
            penalties,
            delta: delta_src,
            scale,
        })
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn lattice_dim(&self) -> usize {
        self.lattice_dim
    }

    /// Number of unknowns of the discrete problem under `b`.
    pub fn dofs(&self, b: &Boundary<T>) -> Result<usize> {
        Ok(self.dof_map(b)?.count + self.interior_nodes)
    }

    fn dof_map(&self, b: &Boundary<T>) -> Result<DofMap<T>> {
        b.check(self.lattice_dim)?;
        let one = Complex::new(T::one(), T::zero());
        #[derive(Clone, Copy)]
        enum Status<T> {
            Free,
            Alias(usize, Complex<T>),
            Removed,
        }
        let mut status = vec![Status::Free; self.vertex_nodes];
        for (v, w, shift) in &self.pairs {
            match b {
                Boundary::Quasiperiodic(theta) => status[*w] = Status::Alias(*v, Boundary::phase(theta, shift)),
                Boundary::Neumann => {}
                Boundary::Dirichlet => {
                    status[*v] = Status::Removed;
                    status[*w] = Status::Removed;
                }
            }
        }
        let mut dof = vec![None; self.vertex_nodes];
        let mut count = 0;
        for (node, s) in status.iter().enumerate() {
            if let Status::Free = s {
                dof[node] = Some((count, one));
                count += 1;
            }
        }
        for (node, s) in status.iter().enumerate() {
            if let Status::Alias(target, phase) = s {
                dof[node] = dof[*target].map(|(d, p)| (d, p * phase));
            }
        }
        Ok(DofMap { dof, count })
    }

    /// Dense stiffness and mass matrices.
    pub fn assemble(&self, b: &Boundary<T>) -> Result<FiberProblem<T>> {
        let map = self.dof_map(b)?;
        let n = map.count + self.interior_nodes;
        let mut k = CMatrix::zeros(n);
        let mut m = CMatrix::zeros(n);
        let one = Complex::new(T::one(), T::zero());
        let global = |node: usize| -> Option<(usize, Complex<T>)> {
            if node < self.vertex_nodes {
                map.dof[node]
            } else {
                Some((map.count + node - self.vertex_nodes, one))
            }
        };
        let six = T::lit(6.0);
        for edge in &self.edges {
            let stiff = T::one() / (self.epsilon * edge.h);
            let local_k = [[stiff, -stiff], [-stiff, stiff]];
            let local_m = [[T::lit(2.0) * edge.h / six, edge.h / six], [edge.h / six, T::lit(2.0) * edge.h / six]];
            for el in 0..edge.elements {
                let left = if el == 0 { edge.start } else { edge.interior + el - 1 };
                let right = if el + 1 == edge.elements { edge.end } else { edge.interior + el };
                let nodes = [global(left), global(right)];
                scatter(&mut k, &nodes, &local_k);
                scatter(&mut m, &nodes, &local_m);
            }
        }
        for p in &self.penalties {
            let ab = p.alpha * p.beta;
            let block = [[p.alpha, -ab], [-ab, ab * p.beta]];
            scatter(&mut k, &[global(p.side0), global(p.side_j)], &block);
        }
        if let Some((node, gamma)) = self.delta {
            scatter(&mut k, &[global(node)], &[[gamma]]);
        }
        Ok(FiberProblem { k, m })
    }

    /// Number of eigenvalues strictly below `sigma`.
    pub fn count_below(&self, b: &Boundary<T>, sigma: T) -> Result<usize> {
        let map = self.dof_map(b)?;
        self.count_with_map(&map, sigma)
    }

    fn count_with_map(&self, map: &DofMap<T>, sigma: T) -> Result<usize> {
        let mut negative = 0usize;
        let mut blocks = Vec::with_capacity(self.edges.len());
        // Near-singular chain modes kept as extra unknowns: (start coupling, end coupling, μ).
        let mut bordered = Vec::new();
        let two = T::lit(2.0);
        for edge in &self.edges {
            let h = edge.h;
            let eh = self.epsilon * h;
            let diag = two / eh - sigma * two * h / T::lit(3.0);
            let off = -T::one() / eh - sigma * h / T::lit(6.0);
            let end_diag = T::one() / eh - sigma * h / T::lit(3.0);
            let keep = T::lit(MODE_KEEP) * (diag.abs() + two * off.abs());
            let (mut same_s, mut same_e, mut cross) = (end_diag, end_diag, T::zero());
            for (k, &(cos_k, phi_sq)) in edge.modes.iter().enumerate() {
                let mu = diag + two * off * cos_k;
                // φ_k(p) = (−1)^k φ_k(1) for 0-based k.
                let parity = if k % 2 == 0 { T::one() } else { -T::one() };
                if mu.abs() <= keep {
                    let phi = phi_sq.sqrt();
                    bordered.push((edge.start, edge.end, off * phi, off * phi * parity, mu));
                } else {
                    if mu < T::zero() {
                        negative += 1;
                    }
                    let w = off * off * phi_sq / mu;
                    same_s -= w;
                    same_e -= w;
                    cross -= w * parity;
                }
            }
            blocks.push([[same_s, cross], [cross, same_e]]);
        }
        let n = map.count + bordered.len();
        if n == 0 {
            return Ok(negative);
        }
        let mut schur = CMatrix::zeros(n);
        for (edge, block) in self.edges.iter().zip(&blocks) {
            scatter(&mut schur, &[map.dof[edge.start], map.dof[edge.end]], block);
        }
        for pen in &self.penalties {
            let ab = pen.alpha * pen.beta;
            scatter(
                &mut schur,
                &[map.dof[pen.side0], map.dof[pen.side_j]],
                &[[pen.alpha, -ab], [-ab, ab * pen.beta]],
            );
        }
        if let Some((node, gamma)) = self.delta {
            scatter(&mut schur, &[map.dof[node]], &[[gamma]]);
        }
        for (i, &(start, end, c_start, c_end, mu)) in bordered.iter().enumerate() {
            let y = map.count + i;
            schur.add(y, y, Complex::new(mu, T::zero()));
            for (node, c) in [(start, c_start), (end, c_end)] {
                if let Some((d, phase)) = map.dof[node] {
                    let z = phase.conj() * c;
                    schur.add(d, y, z);
                    schur.add(y, d, z.conj());
                }
            }
        }
        let ev = linalg::hermitian_eigenvalues(&schur)?;
        negative += ev.iter().filter(|&&x| x < T::zero()).count();
        Ok(negative)
    }

    /// The `k_max` smallest eigenvalues, ascending with multiplicity, by
    /// bisection on the eigenvalue count.
    pub fn eigenvalues(&self, b: &Boundary<T>, k_max: usize) -> Result<Vec<T>> {
        let map = self.dof_map(b)?;
        let dim = map.count + self.interior_nodes;
        if k_max > dim {
            return Err(Error::TooManyEigenvalues { requested: k_max, dim });
        }
        let count = |s: T| self.count_with_map(&map, s);
        let mut lo = -T::one();
        let mut steps = 0;
        while count(lo)? > 0 {
            lo = lo + lo;
            steps += 1;
            if steps > 2000 || !lo.is_finite() {
                return Err(Error::EigensolverFailure { index: 0, residual: lo.lossy_f64() });
            }
        }
        let mut hi = T::one();
        steps = 0;
        while count(hi)? < k_max {
            hi = hi + hi;
            steps += 1;
            if steps > 2000 || !hi.is_finite() {
                return Err(Error::EigensolverFailure { index: k_max, residual: hi.lossy_f64() });
            }
        }
        let floor = T::epsilon() * T::lit(16.0);
        let mut out = Vec::with_capacity(k_max);
        let mut below = lo;
        for k in 1..=k_max {
            let (mut a, mut b) = (below, hi);
            for _ in 0..400 {
                let mid = a + (b - a) / T::lit(2.0);
                if b - a <= floor.max(T::lit(4.0) * T::epsilon() * a.abs().max(b.abs())) || mid <= a || mid >= b {
                    break;
                }
                if count(mid)? >= k {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            let value = a + (b - a) / T::lit(2.0);
            out.push(value);
            below = a;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
struct DofMap<T> {
    dof: Vec<Option<(usize, Complex<T>)>>,
    count: usize,
}

/// `A[d_a, d_b] += conj(p_a) · local[a][b] · p_b` over the present nodes.
fn scatter<T: Real, const N: usize>(a: &mut CMatrix<T>, nodes: &[Option<(usize, Complex<T>)>; N], local: &[[T; N]; N]) {
    for (i, ni) in nodes.iter().enumerate() {
        let Some((di, pi)) = ni else { continue };
        for (j, nj) in nodes.iter().enumerate() {
            let Some((dj, pj)) = nj else { continue };
            a.add(*di, *dj, pi.conj() * *pj * local[i][j]);
        }
    }
}

/// Dense discrete problem `K x = λ M x`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberProblem<T> {
    pub k: CMatrix<T>,
    pub m: CMatrix<T>,
}

impl<T: Real> FiberProblem<T> {
    pub fn dim(&self) -> usize {
        self.k.dim()
    }
}

/// Smallest `k_max` eigenvalues of the dense pencil, ascending.
pub fn fiber_eigenvalues<T: Real>(p: &FiberProblem<T>, k_max: usize) -> Result<Vec<T>> {
    if k_max > p.dim() {
        return Err(Error::TooManyEigenvalues { requested: k_max, dim: p.dim() });
    }
    let mut all = linalg::generalized_eigenvalues(&p.k, &p.m)?;
    all.truncate(k_max);
    Ok(all)
}

/// Fiber eigenvalues with optional two-mesh Richardson extrapolation
/// `(4 λ_{h/2} − λ_h) / 3`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberSolver<T> {
    coarse: FiberModel<T>,
    fine: Option<FiberModel<T>>,
}

impl<T: Real> FiberSolver<T> {
    pub fn new(cell: &PeriodCell<T>, model: &VertexModel<T>, epsilon: T, mesh: usize, richardson: bool) -> Result<Self> {
        let coarse = FiberModel::new(cell, model, epsilon, mesh, 1)?;
        let fine = if richardson { Some(FiberModel::new(cell, model, epsilon, mesh, 2)?) } else { None };
        Ok(Self { coarse, fine })
    }

    pub fn model(&self) -> &FiberModel<T> {
        &self.coarse
    }

    pub fn richardson(&self) -> bool {
        self.fine.is_some()
    }

    pub fn eigenvalues(&self, b: &Boundary<T>, k_max: usize) -> Result<Vec<T>> {
        let coarse = self.coarse.eigenvalues(b, k_max)?;
        match &self.fine {
            None => Ok(coarse),
            Some(fine) => {
                let fine = fine.eigenvalues(b, k_max)?;
                let mut out: Vec<T> =
                    fine.iter().zip(&coarse).map(|(&f, &c)| (T::lit(4.0) * f - c) / T::lit(3.0)).collect();
                out.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalue"));
                Ok(out)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::{line, twin_chain};
    use std::f64::consts::PI;

    fn dirichlet_line(len: f64, mesh: usize) -> FiberModel<f64> {
        FiberModel::new(&line(len), &VertexModel::Kirchhoff, 1.0, mesh, 1).unwrap()
    }

    #[test]
    fn constant_is_in_the_kernel() {
        let (cell, d) = twin_chain::<f64>();
        for model in [VertexModel::Kirchhoff, VertexModel::coupled(&cell, &d, CouplingSpec::zero(1)).unwrap()] {
            let fm = FiberModel::new(&cell, &model, 1.0, 8, 1).unwrap();
            let p = fm.assemble(&Boundary::periodic(1)).unwrap();
            let ones = vec![Complex::new(1.0, 0.0); p.dim()];
            let r = p.k.mul_vec(&ones);
            assert!(r.iter().all(|z| z.norm() < 1e-9), "{r:?}");
        }
    }

    #[test]
    fn assembled_matrices_are_hermitian() {
        let (cell, d) = twin_chain::<f64>();
        let c = CouplingSpec::new(vec![0.7], vec![-1.3], 0.4).unwrap();
        let fm = FiberModel::new(&cell, &VertexModel::coupled(&cell, &d, c).unwrap(), 0.3, 8, 1).unwrap();
        let p = fm.assemble(&Boundary::from_turns(&[0.17])).unwrap();
        assert!(p.k.hermitian_defect() <= 1e-12 * p.k.norm());
        assert!(p.m.hermitian_defect() <= 1e-12 * p.m.norm());
    }

    #[test]
    fn dirichlet_removes_only_boundary_dofs() {
        let (cell, _) = twin_chain::<f64>();
        let fm = FiberModel::new(&cell, &VertexModel::Kirchhoff, 1.0, 8, 1).unwrap();
        let per = fm.dofs(&Boundary::periodic(1)).unwrap();
        let dir = fm.dofs(&Boundary::Dirichlet).unwrap();
        let neu = fm.dofs(&Boundary::Neumann).unwrap();
        assert_eq!(per, dir + 1);
        assert_eq!(neu, per + 1);
    }

    #[test]
    fn inertia_matches_dense_solver() {
        let (cell, d) = twin_chain::<f64>();
        let c = CouplingSpec::new(vec![0.7], vec![-1.3], -0.4).unwrap();
        let model = VertexModel::coupled(&cell, &d, c).unwrap();
        let fm = FiberModel::new(&cell, &model, 0.2, 8, 1).unwrap();
        for b in [Boundary::from_turns(&[0.3]), Boundary::periodic(1), Boundary::Neumann, Boundary::Dirichlet] {
            let dense = fiber_eigenvalues(&fm.assemble(&b).unwrap(), 8).unwrap();
            let fast = fm.eigenvalues(&b, 8).unwrap();
            for (x, y) in dense.iter().zip(&fast) {
                assert!((x - y).abs() <= 1e-11 * x.abs().max(1.0), "{dense:?} vs {fast:?}");
            }
        }
    }

    #[test]
    fn single_edge_dirichlet_converges_quadratically() {
        let errs: Vec<f64> = [8, 16, 32]
            .iter()
            .map(|&mesh| dirichlet_line(PI, mesh).eigenvalues(&Boundary::Dirichlet, 1).unwrap()[0] - 1.0)
            .collect();
        assert!(errs.iter().all(|&e| e > 0.0));
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((ratio - 4.0).abs() < 0.5, "{errs:?}");
        }
    }

    #[test]
    fn epsilon_scaling_with_zero_couplings() {
        let (cell, d) = twin_chain::<f64>();
        let model = VertexModel::coupled(&cell, &d, CouplingSpec::zero(1)).unwrap();
        let b = Boundary::from_turns(&[0.21]);
        let one = FiberModel::new(&cell, &model, 1.0, 8, 1).unwrap().eigenvalues(&b, 6).unwrap();
        let half = FiberModel::new(&cell, &model, 0.5, 8, 1).unwrap().eigenvalues(&b, 6).unwrap();
        for (x, y) in one.iter().zip(&half) {
            assert!((2.0 * x - y).abs() <= 1e-9 * y.abs().max(1.0));
        }
    }

    #[test]
    fn conjugate_theta_gives_same_spectrum() {
        let (cell, d) = twin_chain::<f64>();
        let c = CouplingSpec::new(vec![0.5], vec![1.0], 0.2).unwrap();
        let fm = FiberModel::new(&cell, &VertexModel::coupled(&cell, &d, c).unwrap(), 0.1, 16, 1).unwrap();
        let b = Boundary::from_turns(&[0.37]);
        let x = fm.eigenvalues(&b, 5).unwrap();
        let y = fm.eigenvalues(&b.conjugate(), 5).unwrap();
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() <= 1e-10 * p.abs().max(1.0));
        }
    }

    #[test]
    fn richardson_improves_pi_squared() {
        let (cell, _) = twin_chain::<f64>();
        let raw = FiberSolver::new(&cell, &VertexModel::Kirchhoff, 1.0, 16, false).unwrap();
        let rich = FiberSolver::new(&cell, &VertexModel::Kirchhoff, 1.0, 16, true).unwrap();
        let b = Boundary::from_turns(&[0.25]);
        let target = PI * PI;
        let dist = |v: Vec<f64>| v.iter().map(|x| (x - target).abs()).fold(f64::INFINITY, f64::min);
        let e_raw = dist(raw.eigenvalues(&b, 6).unwrap());
        let e_rich = dist(rich.eigenvalues(&b, 6).unwrap());
        assert!(e_rich < e_raw / 20.0, "{e_raw} {e_rich}");
    }

    #[test]
    fn rejects_bad_specs() {
        let (cell, _) = twin_chain::<f64>();
        assert!(FiberModel::new(&cell, &VertexModel::Kirchhoff, 0.0, 8, 1).is_err());
        assert!(FiberModel::new(&cell, &VertexModel::Kirchhoff, 1.0, 0, 1).is_err());
        let fm = FiberModel::new(&cell, &VertexModel::Kirchhoff, 1.0, 8, 1).unwrap();
        let bad = Boundary::Quasiperiodic(vec![Complex::new(1.1, 0.0)]);
        assert!(matches!(fm.eigenvalues(&bad, 1), Err(Error::InvalidFiberSpec(_))));
        let wrong_dim = Boundary::Quasiperiodic(vec![Complex::new(1.0, 0.0); 2]);
        assert!(fm.eigenvalues(&wrong_dim, 1).is_err());
        assert!(matches!(fm.eigenvalues(&Boundary::periodic(1), 10_000), Err(Error::TooManyEigenvalues { .. })));
    }
}
