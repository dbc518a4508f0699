//! Camera trajectory files: an ordered list of labeled target-to-canonical poses, plus the
//! orbit parameters that produced them when generated.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::manifest::PoseRecord;
use crate::camera::CameraPose;
use crate::error::{Error, Result};

pub const TRAJECTORY_FORMAT: &str = "mpi-trajectory";
pub const TRAJECTORY_VERSION: u32 = 1;

/// Evenly spaced look-at poses around a point on the optical axis. Angles in degrees.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitSpec {
    pub yaw_range: [f64; 2],
    pub pitch_range: [f64; 2],
    pub count: usize,
    pub center_depth: f64,
}

impl OrbitSpec {
    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::InvalidRange("orbit needs at least one pose".into()));
        }
        let ok = |r: [f64; 2]| r.iter().all(|v| v.is_finite() && v.abs() < 90.0) && r[0] <= r[1];
        if !ok(self.yaw_range) || !ok(self.pitch_range) {
            return Err(Error::InvalidRange(format!(
                "yaw {:?} / pitch {:?} must be ordered and within (-90, 90) degrees",
                self.yaw_range, self.pitch_range
            )));
        }
        if !(self.center_depth.is_finite() && self.center_depth > 0.0) {
            return Err(Error::InvalidRange(format!("center depth {}", self.center_depth)));
        }
        Ok(())
    }

    /// `(yaw, pitch)` in degrees for each pose; one pose sits at the range midpoints.
    pub fn angles(&self) -> Vec<(f64, f64)> {
        let lerp = |r: [f64; 2], t: f64| r[0] + (r[1] - r[0]) * t;
        (0..self.count)
            .map(|i| {
                let t = if self.count == 1 { 0.5 } else { i as f64 / (self.count - 1) as f64 };
                (lerp(self.yaw_range, t), lerp(self.pitch_range, t))
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabeledPose {
    pub label: String,
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrajectoryFile {
    format: String,
    version: u32,
    poses: Vec<LabeledPose>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    orbit: Option<OrbitSpec>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub poses: Vec<(String, CameraPose)>,
    pub orbit: Option<OrbitSpec>,
}

impl Trajectory {
    pub fn canonical() -> Self {
        Self {
            poses: vec![("canonical".into(), CameraPose::identity())],
            orbit: None,
        }
    }

    pub fn orbit(spec: OrbitSpec) -> Result<Self> {
        spec.validate()?;
        let width = (spec.count - 1).to_string().len().max(3);
        let poses = spec
            .angles()
            .into_iter()
            .enumerate()
            .map(|(i, (yaw, pitch))| {
                let pose = CameraPose::orbit(yaw.to_radians(), pitch.to_radians(), spec.center_depth);
                (format!("{i:0width$}"), pose)
            })
            .collect();
        Ok(Self {
            poses,
            orbit: Some(spec),
        })
    }

    pub fn to_json(&self) -> String {
        let file = TrajectoryFile {
            format: TRAJECTORY_FORMAT.into(),
            version: TRAJECTORY_VERSION,
            poses: self
                .poses
                .iter()
                .map(|(label, pose)| {
                    let r = PoseRecord::from(pose);
                    LabeledPose {
                        label: label.clone(),
                        rotation: r.rotation,
                        translation: r.translation,
                    }
                })
                .collect(),
            orbit: self.orbit,
        };
        serde_json::to_string_pretty(&file).expect("trajectory serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: TrajectoryFile = serde_json::from_str(text).map_err(|e| Error::Parse(format!("trajectory: {e}")))?;
        if file.format != TRAJECTORY_FORMAT || file.version != TRAJECTORY_VERSION {
            return Err(Error::Parse(format!(
                "trajectory format `{}` version {} not supported",
                file.format, file.version
            )));
        }
        if file.poses.is_empty() {
            return Err(Error::Parse("trajectory has no poses".into()));
        }
        let mut poses = Vec::with_capacity(file.poses.len());
        for p in &file.poses {
            let valid_label = !p.label.is_empty()
                && p.label.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
                && !p.label.starts_with('.');
            if !valid_label {
                return Err(Error::Parse(format!("pose label `{}` is not a safe file stem", p.label)));
            }
            if poses.iter().any(|(l, _)| l == &p.label) {
                return Err(Error::Parse(format!("duplicate pose label `{}`", p.label)));
            }
            let record = PoseRecord {
                rotation: p.rotation,
                translation: p.translation,
            };
            poses.push((p.label.clone(), CameraPose::try_from(&record)?));
        }
        if let Some(o) = &file.orbit {
            o.validate()?;
        }
        Ok(Self {
            poses,
            orbit: file.orbit,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
