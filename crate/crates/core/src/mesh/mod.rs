//! Occupancy volumes from alpha stacks, marching cubes, smoothing and OBJ export.

pub mod marching;
pub mod obj;
pub mod occupancy;
pub mod smooth;

pub use marching::{marching_cubes, TriangleMesh};
pub use obj::{export_obj, obj_string, parse_obj, read_obj};
pub use occupancy::{build_occupancy, OccupancyVolume};
pub use smooth::laplacian_smooth;

/// Iso level used when none is given.
pub const DEFAULT_ISO: f64 = 0.5;
