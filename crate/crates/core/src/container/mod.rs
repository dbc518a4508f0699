//! On-disk MPI containers, camera trajectories and procedural test scenes.

pub mod manifest;
pub mod png;
pub mod synth;
pub mod trajectory;

pub use manifest::{load_container, load_mpi, read_manifest, save_mpi, Container, Manifest, PoseRecord};
pub use png::{read_png, write_png, BitDepth};
pub use synth::{synth_scene, SceneKind, SceneObject, SynthParams, SynthScene};
pub use trajectory::{OrbitSpec, Trajectory};
