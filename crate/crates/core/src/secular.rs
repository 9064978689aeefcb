//! Secular determinant of the exact (undiscretized) fiber operator.
//!
//! On every edge `u = a·c(x) + b·s(x)` with `c = cos(kx)`, `s = sin(kx)/k`,
//! `k² = ελ` (hyperbolic for `λ < 0`). Vertex and pairing conditions give a
//! `2E × 2E` linear system in the `(a_e, b_e)`; its determinant vanishes
//! exactly at the fiber eigenvalues. Used only as an independent oracle for
//! the finite element solver.
//!
//! Derivatives are taken along the edge, pointing away from the vertex. At a
//! `𝒱_j` vertex the two sides satisfy
//! `Σ_{Y_0} ∂u = αε(u_0 − βu_j)` and `Σ_{Y_j} ∂u = −αβε(u_0 − βu_j)`,
//! which is what the quadratic form produces for any `β`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::fiber::{Boundary, FiberModel, VertexModel};
use crate::graph::PeriodCell;
use crate::linalg::{determinant, CMatrix};
use crate::roots::bisect;
use crate::scalar::Real;

/// Secular function for one cell, vertex model, ε and boundary treatment,
/// normalized by its value at a reference point below the spectrum.
#[derive(Debug, Clone)]
pub struct SecularOracle<T> {
    layout: FiberModel<T>,
    boundary: Boundary<T>,
    epsilon: T,
    reference: T,
    d_ref: Complex<T>,
}

/// Value and derivative coefficients of one edge end in the `(a, b)` basis.
#[derive(Clone, Copy)]
struct End<T> {
    col: usize,
    value: (T, T),
    deriv: (T, T),
}

impl<T: Real> SecularOracle<T> {
    pub fn new(cell: &PeriodCell<T>, model: &VertexModel<T>, epsilon: T, boundary: Boundary<T>) -> Result<Self> {
        let layout = FiberModel::new(cell, model, epsilon, 1, 1)?;
        boundary.check(cell.dim())?;
        let mut reference = -T::one();
        if let VertexModel::Coupled { decomposition, couplings } = model {
            let mut min_a: Option<T> = None;
            for j in 0..decomposition.m {
                if couplings.alpha[j] == T::zero() {
                    continue;
                }
                let l: T = decomposition
                    .edges_of(j + 1)
                    .iter()
                    .map(|&e| cell.edges()[e].length)
                    .fold(T::zero(), |acc, x| acc + x);
                let n = T::from_count(decomposition.attachments[j].len());
                let a = couplings.alpha[j] * couplings.beta[j] * couplings.beta[j] * n / l;
                min_a = Some(min_a.map_or(a, |m: T| m.min(a)));
            }
            if let Some(a) = min_a {
                reference = a - T::one();
            }
        }
        let mut oracle = Self { layout, boundary, epsilon, reference, d_ref: Complex::new(T::one(), T::zero()) };
        // Step down until the reference is clearly off the spectrum.
        let quarter = T::lit(0.25);
        for _ in 0..40 {
            let here = oracle.raw(oracle.reference).norm();
            let around = oracle.raw(oracle.reference - quarter).norm().max(oracle.raw(oracle.reference + quarter).norm());
            if here.is_finite() && here > T::lit(1e-8) * around {
                oracle.d_ref = oracle.raw(oracle.reference);
                return Ok(oracle);
            }
            oracle.reference = oracle.reference - T::lit(0.5);
        }
        Err(Error::EigensolverFailure { index: 0, residual: oracle.reference.lossy_f64() })
    }

    /// Point used for normalization.
    pub fn reference(&self) -> T {
        self.reference
    }

    fn ends(&self, lambda: T) -> Vec<(End<T>, End<T>)> {
        let z = self.epsilon * lambda;
        self.layout
            .edges
            .iter()
            .enumerate()
            .map(|(e, edge)| {
                let l = edge.length;
                let (c, s) = if z > T::zero() {
                    let k = z.sqrt();
                    ((k * l).cos(), (k * l).sin() / k)
                } else if z < T::zero() {
                    let q = (-z).sqrt();
                    ((q * l).cosh(), (q * l).sinh() / q)
                } else {
                    (T::one(), l)
                };
                let start = End { col: 2 * e, value: (T::one(), T::zero()), deriv: (T::zero(), T::one()) };
                let end = End { col: 2 * e, value: (c, s), deriv: (z * s, -c) };
                (start, end)
            })
            .collect()
    }

    /// Unnormalized determinant `D(λ)`.
    pub fn raw(&self, lambda: T) -> Complex<T> {
        let ends = self.ends(lambda);
        let n = 2 * ends.len();
        let mut by_node: Vec<Vec<End<T>>> = vec![Vec::new(); self.layout.vertex_nodes];
        for (edge, (s, e)) in self.layout.edges.iter().zip(&ends) {
            by_node[edge.start].push(*s);
            by_node[edge.end].push(*e);
        }
        let mut paired = vec![false; self.layout.vertex_nodes];
        for (v, w, _) in &self.layout.pairs {
            paired[*v] = true;
            paired[*w] = true;
        }
        let mut rows: Vec<Vec<Complex<T>>> = Vec::with_capacity(n);
        let zero_row = || vec![Complex::new(T::zero(), T::zero()); n];
        let add = |row: &mut Vec<Complex<T>>, end: &End<T>, coeffs: (T, T), scale: Complex<T>| {
            row[end.col] += scale * coeffs.0;
            row[end.col + 1] += scale * coeffs.1;
        };
        let one = Complex::new(T::one(), T::zero());
        let eps = self.epsilon;

        for node in 0..self.layout.vertex_nodes {
            if paired[node] || by_node[node].is_empty() {
                continue;
            }
            let group = &by_node[node];
            let first = group[0];
            for other in &group[1..] {
                let mut row = zero_row();
                add(&mut row, &first, first.value, one);
                add(&mut row, other, other.value, -one);
                rows.push(row);
            }
            let mut row = zero_row();
            for end in group {
                add(&mut row, end, end.deriv, one);
            }
            if let Some((dv, gamma)) = self.layout.delta {
                if dv == node {
                    add(&mut row, &first, first.value, Complex::new(-gamma * eps, T::zero()));
                }
            }
            for pen in &self.layout.penalties {
                let u0 = by_node[pen.side0][0];
                let uj = by_node[pen.side_j][0];
                let (a, b) = (pen.alpha * eps, pen.beta);
                if pen.side0 == node {
                    // − αε(u_0 − βu_j)
                    add(&mut row, &u0, u0.value, Complex::new(-a, T::zero()));
                    add(&mut row, &uj, uj.value, Complex::new(a * b, T::zero()));
                } else if pen.side_j == node {
                    // + αβε(u_0 − βu_j)
                    add(&mut row, &u0, u0.value, Complex::new(a * b, T::zero()));
                    add(&mut row, &uj, uj.value, Complex::new(-a * b * b, T::zero()));
                }
            }
            rows.push(row);
        }

        for (v, w, shift) in &self.layout.pairs {
            let ev = by_node[*v][0];
            let ew = by_node[*w][0];
            match &self.boundary {
                Boundary::Quasiperiodic(theta) => {
                    let phase = Boundary::phase(theta, shift);
                    let mut row = zero_row();
                    add(&mut row, &ew, ew.value, one);
                    add(&mut row, &ev, ev.value, -phase);
                    rows.push(row);
                    let mut row = zero_row();
                    add(&mut row, &ew, ew.deriv, one);
                    add(&mut row, &ev, ev.deriv, phase);
                    rows.push(row);
                }
                Boundary::Neumann | Boundary::Dirichlet => {
                    let dirichlet = matches!(self.boundary, Boundary::Dirichlet);
                    for end in [ev, ew] {
                        let mut row = zero_row();
                        add(&mut row, &end, if dirichlet { end.value } else { end.deriv }, one);
                        rows.push(row);
                    }
                }
            }
        }
        debug_assert_eq!(rows.len(), n);
        let mut m = CMatrix::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                m.set(i, j, x);
            }
        }
        determinant(m)
    }

    /// `D(λ) / D(λ_ref)`, which is real up to rounding.
    pub fn ratio(&self, lambda: T) -> Complex<T> {
        self.raw(lambda) / self.d_ref
    }

    /// Real part of [`ratio`](Self::ratio).
    pub fn value(&self, lambda: T) -> T {
        self.ratio(lambda).re
    }

    /// Sign changes of [`value`](Self::value) on `samples` uniform
    /// subintervals of `[lo, hi]`, refined by bisection. Zeros of even
    /// multiplicity are not detected.
    pub fn zeros(&self, lo: T, hi: T, samples: usize) -> Vec<T> {
        let step = (hi - lo) / T::from_count(samples.max(1));
        let mut out = Vec::new();
        let mut x0 = lo;
        let mut f0 = self.value(x0);
        for i in 1..=samples.max(1) {
            let x1 = lo + step * T::from_count(i);
            let f1 = self.value(x1);
            if f0 == T::zero() {
                out.push(x0);
            } else if f1 != T::zero() && (f0 < T::zero()) != (f1 < T::zero()) {
                out.push(bisect(|x| self.value(x), x0, x1, T::lit(1e-14), 200));
            }
            x0 = x1;
            f0 = f1;
        }
        out
    }
}

/// Convenience: `D(λ)/D(λ_ref)` for a one-off evaluation.
pub fn secular_value<T: Real>(
    cell: &PeriodCell<T>,
    model: &VertexModel<T>,
    epsilon: T,
    boundary: Boundary<T>,
    lambda: T,
) -> Result<T> {
    Ok(SecularOracle::new(cell, model, epsilon, boundary)?.value(lambda))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiber::FiberSolver;
    use crate::graph::fixtures::twin_chain;
    use crate::limit::CouplingSpec;
    use std::f64::consts::PI;

    #[test]
    fn zero_is_a_root_with_zero_couplings() {
        let (cell, d) = twin_chain::<f64>();
        let model = VertexModel::coupled(&cell, &d, CouplingSpec::zero(1)).unwrap();
        let v = secular_value(&cell, &model, 1.0, Boundary::periodic(1), 0.0).unwrap();
        assert!(v.abs() < 1e-12, "{v}");
        let k = secular_value(&cell, &VertexModel::Kirchhoff, 1.0, Boundary::periodic(1), 0.0).unwrap();
        assert!(k.abs() < 1e-12, "{k}");
    }

    #[test]
    fn negative_lambda_is_finite() {
        let (cell, _) = twin_chain::<f64>();
        let v = secular_value(&cell, &VertexModel::Kirchhoff, 1.0, Boundary::from_turns(&[0.2]), -1.0).unwrap();
        assert!(v.is_finite() && v.abs() > 1e-6);
    }

    #[test]
    fn pi_squared_root_in_kirchhoff_model() {
        let (cell, _) = twin_chain::<f64>();
        let o = SecularOracle::new(&cell, &VertexModel::Kirchhoff, 1.0, Boundary::from_turns(&[0.3])).unwrap();
        assert!(o.value(PI * PI).abs() < 1e-9);
    }

    #[test]
    fn ratio_is_real() {
        let (cell, d) = twin_chain::<f64>();
        let c = CouplingSpec::new(vec![0.8], vec![1.7], -0.3).unwrap();
        let model = VertexModel::coupled(&cell, &d, c).unwrap();
        let o = SecularOracle::new(&cell, &model, 0.3, Boundary::from_turns(&[0.27])).unwrap();
        for lambda in [-3.0, 0.5, 2.0, 7.5, 21.0] {
            let r = o.ratio(lambda);
            assert!(r.im.abs() <= 1e-9 * r.re.abs().max(1.0), "{lambda}: {r}");
        }
    }

    #[test]
    fn zeros_match_fem_with_beta_not_one() {
        let (cell, d) = twin_chain::<f64>();
        let c = CouplingSpec::new(vec![0.8], vec![1.7], -0.3).unwrap();
        let model = VertexModel::coupled(&cell, &d, c).unwrap();
        for b in [Boundary::from_turns(&[0.27]), Boundary::Neumann, Boundary::Dirichlet] {
            let o = SecularOracle::new(&cell, &model, 0.3, b.clone()).unwrap();
            let fem = FiberSolver::new(&cell, &model, 0.3, 64, true).unwrap().eigenvalues(&b, 5).unwrap();
            let hi = fem[4] + 1.0;
            let zeros = o.zeros(fem[0] - 2.0, hi, 4000);
            assert_eq!(zeros.len(), 5, "{zeros:?} vs {fem:?}");
            for (z, f) in zeros.iter().zip(&fem) {
                assert!((z - f).abs() <= 1e-6 * f.abs().max(1.0), "{zeros:?} vs {fem:?}");
            }
        }
    }
}
