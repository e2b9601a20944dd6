//! Point cloud to RT mesh reconstruction.
//!
//! Stages, in order: reprojection gate and cluster filter ([`filter_outliers`]),
//! optional per-track fusion ([`fuse_tracks`]), planar patch extraction and
//! merging ([`fit_plane`], [`merge_planes`]), lattice triangulation with slab
//! extrusion ([`plane_mesh`]), and per-object material voting ([`vote_material`]).
//! [`build_rt_model`] chains them into a [`Scene`](crate::scene::Scene).

mod cloud;
mod filter;
mod fuse;
mod pipeline;
mod plane;
mod surface;
pub mod synth;
mod vote;

use thiserror::Error;

use crate::ply::PlyError;
use crate::scene::{ManifoldReport, SceneError};

pub use cloud::{PointCloud, RawPoint, SemanticClass};
pub use filter::{
    cluster_filter, filter_outliers, huber_weight, reprojection_gate, FilterConfig, FilterReport, HUBER_K,
};
pub use fuse::{fuse_observations, fuse_tracks, Observation};
pub use pipeline::{build_rt_model, InstanceReport, ReconConfig, ReconReport, RtModel};
pub use plane::{extract_patches, fit_plane, merge_planes, MergeConfig, PlanePrimitive};
pub use surface::{convex_hull_area, extrude_slab, lattice_surface, plane_mesh, project_to_plane};
pub use vote::{load_votes, parse_votes, vote_material, write_votes, FrameVote, VoteOutcome};

#[derive(Debug, Error)]
pub enum ReconError {
    #[error("point cloud: {0}")]
    InvalidCloud(String),
    #[error("point cloud is empty after {stage}")]
    EmptyCloud { stage: &'static str },
    #[error("all fusion weights are zero")]
    ZeroWeight,
    #[error("degenerate plane fit: {0}")]
    Degenerate(String),
    #[error("instances without material votes: {0:?}")]
    Unlabeled(Vec<u32>),
    #[error("non-planar instances without a supplied mesh: {0:?}")]
    MissingMesh(Vec<u32>),
    #[error("supplied mesh `{object}` is not watertight: {report:?}")]
    NonWatertight { object: String, report: ManifoldReport },
    #[error("votes: {0}")]
    Votes(String),
    #[error("reading {path}: {source}")]
    Ply { path: String, source: PlyError },
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
