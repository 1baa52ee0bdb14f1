//! Multi-view point clouds (MVPC): a surface representation made of N
//! grid-embedded, view-dependent point clouds, together with a geometric loss
//! over those grids, a direct gradient-descent fitter and the evaluation
//! metrics used to score reconstructions.
//!
//! The pipeline is:
//!
//! 1. [`sampler::sample_mvpc`] ray-casts a normalized triangle mesh into every
//!    view of a [`ViewRig`] to obtain a ground-truth [`Mvpc`].
//! 2. [`geoloss::GeoLoss`] evaluates point-wise, quasi-volume, multi-view
//!    consistency and visibility terms with analytic gradients.
//! 3. [`fitter::fit`] deforms a predicted MVPC toward the ground truth.
//! 4. [`metrics`] scores the result (voxel IoU, Chamfer distance, coverage).

pub mod camera;
pub mod error;
pub mod fitter;
pub mod geoloss;
pub mod gradcheck;
pub mod grid;
pub mod io;
pub mod kdtree;
pub mod mesh;
pub mod metrics;
pub mod raycast;
pub mod raster;
pub mod sampler;
pub mod shapes;

pub use camera::{make_rig, Projection, ViewCamera, ViewRig};
pub use error::{Error, Result};
pub use grid::{Mvpc, PointGridMap};
pub use mesh::{NormalMap, TriangleMesh, VertexTag};

/// 3D vector in normalized object space.
pub type Vec3 = nalgebra::Vector3<f64>;

/// 3D point in normalized object space. Stored as a plain vector so that
/// point differences and sums need no conversions.
pub type Point3 = Vec3;

/// Visibility threshold used to turn continuous visibilities into masks.
pub const VISIBILITY_THRESHOLD: f64 = 0.5;
