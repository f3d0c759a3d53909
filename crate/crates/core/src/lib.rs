//! Fragile Points Method (FPM) for 2D linear elasticity with an interface
//! debonding model.
//!
//! The domain is partitioned into polygonal subdomains, each owning one
//! Fragile Point. Trial functions are linear and discontinuous across
//! subdomain boundaries; their gradients come from a generalized finite
//! difference fit over the neighbouring points. Neighbouring subdomains are
//! glued weakly by an incomplete interior penalty (IIPG) numerical flux, and
//! that flux is scaled by a continuum damage variable so that cracks can
//! initiate and grow along any interior face without adding degrees of
//! freedom.
//!
//! Module map:
//! - [`model`]: partition, materials, mesh ingestion
//! - [`shapefun`]: support graph, gradient operator, shape/strain matrices
//! - [`interface`]: numerical flux and the damage law on interior faces
//! - [`assembly`]: global tangent, load vectors, weak Dirichlet terms
//! - [`solver`]: Newton-Raphson, peak-load search, crack growth
//! - [`post`]: notch toughness, fracture energy, exports

pub mod assembly;
pub mod error;
pub mod interface;
pub mod model;
pub mod post;
pub mod problem;
pub mod shapefun;
pub mod solver;
pub mod sparse;

pub use error::{Error, Result};
pub use interface::{FaceState, InterfaceState, PenaltyTensor, SofteningConstants};
pub use model::{
    AnalysisMode, BoundaryFace, InteriorFace, InterfaceMaterial, Material, Partition, Subdomain,
};
pub use post::NotchSpec;
pub use problem::{BcKind, BoundaryCondition, Component, Problem, ProblemOptions};
pub use shapefun::{ShapeTables, SupportGraph};
pub use solver::{
    Checkpoint, CrackEventRecord, CrackGrowthReport, LoadMonitor, PeakResult, Solver, SolverConfig,
    StepRecord, StepState,
};
