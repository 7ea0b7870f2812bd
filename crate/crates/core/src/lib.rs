//! Adaptive plane wave discontinuous Galerkin (PWDG) solver for the 2D
//! Helmholtz equation `Δu + κ² ε_r u = 0` with Dirichlet and impedance
//! boundary conditions.
//!
//! The numerical core is generic over the real scalar type ([`scalar::Real`],
//! implemented for `f32` and `f64`). The aliases at the crate root fix it to
//! `f64`.

pub mod assembly;
pub mod basis;
pub mod bessel;
pub mod dense;
pub mod driver;
pub mod estimator;
pub mod exact;
pub mod geometry;
pub mod mesh;
pub mod quadrature;
pub mod scalar;
pub mod solver;

use std::path::PathBuf;

pub use scalar::{Cplx, Real};

/// Errors reported by every module of the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("degenerate edge of zero length")]
    DegenerateEdge,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("unknown triangle id {0}")]
    UnknownTriangle(usize),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("numerically singular system (pivot {pivot:e} at column {column}, rcond estimate {rcond:e})")]
    Singular { column: usize, pivot: f64, rcond: f64 },
    #[error("solve rejected: relative residual {residual:e} exceeds {limit:e}")]
    Residual { residual: f64, limit: f64 },
    #[error("Bessel evaluation outside its domain: order {order}, argument {x}")]
    BesselDomain { order: f64, x: f64 },
    #[error("config error: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub type Vec2 = geometry::Vec2<f64>;
pub type Mesh = mesh::Mesh<f64>;
pub type Edge = mesh::Edge<f64>;
pub type MeshQuality = mesh::MeshQuality<f64>;
pub type TriangleRule = quadrature::TriangleRule<f64>;
pub type Complex64 = Cplx<f64>;
pub type PlaneWaveSpace = basis::PlaneWaveSpace<f64>;
pub type DGSystem = assembly::DGSystem<f64>;
pub type FluxParams = assembly::FluxParams<f64>;
pub type ProblemData = assembly::ProblemData<f64>;
pub type ExactSolution = exact::ExactSolution<f64>;
pub type IndicatorReport = estimator::IndicatorReport<f64>;
pub type Solution = solver::Solution<f64>;
