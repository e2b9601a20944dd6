//! Site-specific radio propagation from reconstructed indoor geometry.
//!
//! The crate covers the whole chain: frequency-dependent material models,
//! material-labeled triangle scenes, point-cloud to mesh reconstruction, a
//! shooting-and-bouncing-rays tracer with image-method refinement, and
//! comparison of simulated power-delay profiles against measurements.

// `!(x >= 0.0)` is used on purpose so NaN falls into the error branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod geometry;
pub mod materials;
pub mod ply;
pub mod recon;
pub mod scene;
pub mod tracer;
pub mod validation;

pub use geometry::Vec3;
pub use materials::{MaterialClass, MaterialTable};
pub use scene::{Scene, SceneError, TriMesh};
pub use tracer::{synthesize_pdp, trace, Pdp, PropPath, SimConfig, TraceResult, TracerError};
pub use validation::{compare_runs, extract_mpcs, match_mpcs, rmse, LinkPdp, MatchParams, MatchReport, Mpc};
