//! Multiplane image (MPI) rendering toolkit.
//!
//! An MPI is one color image plus `L` alpha maps on fronto-parallel planes in front of a
//! canonical camera. This crate renders such stacks into new views (plane-induced
//! homography warp followed by front-to-back over compositing), differentiates the render
//! with respect to color and alpha, computes normals/shading and depth metrics, converts
//! depth maps to alpha stacks, extracts meshes with marching cubes, and stores MPIs on disk.
//! The `genstack` module holds forward-only toy versions of the generator-side formulas.

pub mod camera;
pub mod composite;
pub mod container;
pub mod error;
pub mod fdcheck;
pub mod genstack;
pub mod grad;
pub mod mesh;
pub mod mpi;
pub mod raster;
pub mod shading;
pub mod warp;

pub use camera::{CameraIntrinsics, CameraPose, PlaneGeometry};
pub use composite::{over_composite, render, CameraPair, RenderOutput};
pub use error::{Error, Result};
pub use mpi::{normalize_depth, place_planes_disparity, MultiplaneImage};
pub use raster::Image;
pub use warp::{Homography, WarpedPlane};
