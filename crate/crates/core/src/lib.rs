//! Floquet–Bloch band structures of periodic quantum graphs and inverse
//! design of δ/δ′ vertex couplings that open spectral gaps at prescribed
//! locations.
//!
//! The numerical core is generic over the scalar type: graph data, limit
//! endpoints and the design formulas accept `f32`, `f64` or `Rational64`;
//! eigenvalue computations need a floating-point [`Real`]. The aliases
//! below fix the two common instantiations.

pub mod bands;
pub mod calibrate;
pub mod design;
pub mod error;
pub mod fiber;
pub mod graph;
pub mod io;
pub mod limit;
pub mod linalg;
pub mod roots;
pub mod scalar;
pub mod secular;

use num_rational::Rational64;

pub use bands::{lambda0, gap_endpoints, BandScanner, BandStructure, ConvergenceReport, Gap, GapEndpoints, ScanConfig};
pub use calibrate::{band_edge_a, calibrate, CalibrationBox, CalibrationOptions, CalibrationReport};
pub use design::{design, shift_for_zero_target, weights_r, GapTargets};
pub use error::{Error, Result};
pub use fiber::{Boundary, FiberModel, FiberSolver, VertexModel};
pub use graph::{
    component_stats, tile_cell, tile_decomposition, validate_cell, validate_decomposition, BoundaryPair,
    ComponentStats, Decomposition, Edge, PeriodCell, ValidationReport, Vertex, VertexKind, Violation,
};
pub use io::{parse_spec, InputSpec};
pub use limit::{limit_a, limit_b_matrix, limit_b_secular, limit_endpoints, CouplingSpec, LimitEndpoints};
pub use scalar::{Real, Scalar};
pub use secular::SecularOracle;

pub type Cell = PeriodCell<f64>;
pub type ExactCell = PeriodCell<Rational64>;
pub type Couplings = CouplingSpec<f64>;
pub type ExactCouplings = CouplingSpec<Rational64>;
pub type Targets = GapTargets<f64>;
pub type ExactTargets = GapTargets<Rational64>;
pub type Stats = ComponentStats<f64>;
pub type ExactStats = ComponentStats<Rational64>;
pub type Scanner = BandScanner<f64>;
pub type Solver = FiberSolver<f64>;
