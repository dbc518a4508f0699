//! MPI container directory:
//!
//! ```text
//! <dir>/manifest.json
//! <dir>/color.png            RGB, 8 or 16 bit
//! <dir>/alpha_000.png ...    grayscale, one per plane, same bit depth
//! <dir>/background.png       optional RGB color of the last plane
//! ```

use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::png::{read_png, write_png, BitDepth};
use crate::camera::{CameraIntrinsics, CameraPose};
use crate::error::{Error, Result};
use crate::mpi::MultiplaneImage;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONTAINER_FORMAT: &str = "mpi-container";
pub const CONTAINER_VERSION: u32 = 1;
pub const COLOR_FILE: &str = "color.png";
pub const BACKGROUND_FILE: &str = "background.png";

pub fn alpha_file_name(index: usize) -> String {
    format!("alpha_{index:03}.png")
}

/// Rigid transform as stored in JSON: row-major rotation and translation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseRecord {
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
}

impl From<&CameraPose> for PoseRecord {
    fn from(p: &CameraPose) -> Self {
        let r = p.rotation();
        let t = p.translation();
        Self {
            rotation: [0, 1, 2].map(|i| [r[(i, 0)], r[(i, 1)], r[(i, 2)]]),
            translation: [t.x, t.y, t.z],
        }
    }
}

impl TryFrom<&PoseRecord> for CameraPose {
    type Error = Error;

    fn try_from(p: &PoseRecord) -> Result<Self> {
        let r = Matrix3::from_fn(|i, j| p.rotation[i][j]);
        CameraPose::new(r, Vector3::from(p.translation))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub planes: usize,
    pub width: usize,
    pub height: usize,
    pub depths: Vec<f64>,
    pub near: f64,
    pub far: f64,
    pub intrinsics: CameraIntrinsics,
    pub canonical_pose: PoseRecord,
    pub bit_depth: BitDepth,
    pub color: String,
    pub alphas: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub background: Option<String>,
}

impl Manifest {
    pub fn describe(mpi: &MultiplaneImage, k: &CameraIntrinsics, bit_depth: BitDepth) -> Self {
        Self {
            format: CONTAINER_FORMAT.into(),
            version: CONTAINER_VERSION,
            planes: mpi.num_planes(),
            width: mpi.width(),
            height: mpi.height(),
            depths: mpi.depths().to_vec(),
            near: mpi.near(),
            far: mpi.far(),
            intrinsics: *k,
            canonical_pose: PoseRecord::from(&CameraPose::identity()),
            bit_depth,
            color: COLOR_FILE.into(),
            alphas: (0..mpi.num_planes()).map(alpha_file_name).collect(),
            background: mpi.background().map(|_| BACKGROUND_FILE.into()),
        }
    }

    /// Checks everything that can be checked without touching the image files.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Manifest(msg));
        if self.format != CONTAINER_FORMAT {
            return bad(format!("format `{}`, expected `{CONTAINER_FORMAT}`", self.format));
        }
        if self.version != CONTAINER_VERSION {
            return bad(format!("unsupported version {}", self.version));
        }
        if self.planes == 0 {
            return bad("plane count must be at least 1".into());
        }
        if self.depths.len() != self.planes {
            return bad(format!("{} depths for {} planes", self.depths.len(), self.planes));
        }
        if self.alphas.len() != self.planes {
            return bad(format!("{} alpha files for {} planes", self.alphas.len(), self.planes));
        }
        if self.intrinsics.width != self.width || self.intrinsics.height != self.height {
            return bad(format!(
                "intrinsics are {}x{}, images are {}x{}",
                self.intrinsics.width, self.intrinsics.height, self.width, self.height
            ));
        }
        self.intrinsics.validate()?;
        let names = std::iter::once(&self.color).chain(&self.alphas).chain(&self.background);
        for name in names {
            let p = Path::new(name);
            if p.is_absolute() || p.components().count() != 1 {
                return bad(format!("file name `{name}` must be a plain name inside the container"));
            }
        }
        if !CameraPose::try_from(&self.canonical_pose)?.is_identity() {
            return bad("canonical pose must be the identity".into());
        }
        Ok(())
    }
}

/// Loaded container contents.
#[derive(Clone, Debug, PartialEq)]
pub struct Container {
    pub mpi: MultiplaneImage,
    pub intrinsics: CameraIntrinsics,
    pub bit_depth: BitDepth,
}

pub fn save_mpi(mpi: &MultiplaneImage, k: &CameraIntrinsics, dir: &Path, bit_depth: BitDepth) -> Result<()> {
    mpi.validate()?;
    let manifest = Manifest::describe(mpi, k, bit_depth);
    manifest.validate()?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_png(&dir.join(&manifest.color), mpi.color(), bit_depth)?;
    for (name, alpha) in manifest.alphas.iter().zip(mpi.alphas()) {
        write_png(&dir.join(name), alpha, bit_depth)?;
    }
    if let (Some(name), Some(bg)) = (&manifest.background, mpi.background()) {
        write_png(&dir.join(name), bg, bit_depth)?;
    }
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    let path = dir.join(MANIFEST_FILE);
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    if !path.is_file() {
        return Err(Error::MissingFile(path));
    }
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
    manifest.validate()?;
    Ok(manifest)
}

pub fn load_container(dir: &Path) -> Result<Container> {
    let manifest = read_manifest(dir)?;
    let check_size = |name: &str, w: usize, h: usize| {
        if (w, h) != (manifest.width, manifest.height) {
            Err(Error::Manifest(format!(
                "{name} is {w}x{h}, manifest says {}x{}",
                manifest.width, manifest.height
            )))
        } else {
            Ok(())
        }
    };
    let (color, _) = read_png(&dir.join(&manifest.color), 3)?;
    check_size(&manifest.color, color.width(), color.height())?;
    let mut alphas = Vec::with_capacity(manifest.planes);
    for name in &manifest.alphas {
        let (a, _) = read_png(&dir.join(name), 1)?;
        check_size(name, a.width(), a.height())?;
        alphas.push(a);
    }
    let mut mpi = MultiplaneImage::new(color, alphas, manifest.depths.clone(), manifest.near, manifest.far)?;
    if let Some(name) = &manifest.background {
        let (bg, _) = read_png(&dir.join(name), 3)?;
        check_size(name, bg.width(), bg.height())?;
        mpi = mpi.with_background(bg)?;
    }
    Ok(Container {
        mpi,
        intrinsics: manifest.intrinsics,
        bit_depth: manifest.bit_depth,
    })
}

pub fn load_mpi(dir: &Path) -> Result<(MultiplaneImage, CameraIntrinsics)> {
    let c = load_container(dir)?;
    Ok((c.mpi, c.intrinsics))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mpi::place_planes_disparity;
    use crate::raster::Image;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_mpi(planes: usize, background: bool) -> (MultiplaneImage, CameraIntrinsics) {
        let mut rng = ChaCha8Rng::seed_from_u64(planes as u64);
        let (w, h) = (10, 6);
        let mut img = |c| Image::from_fn(w, h, c, |_, _, p| p.iter_mut().for_each(|v| *v = rng.random()));
        let color = img(3);
        let alphas = (0..planes).map(|_| img(1)).collect();
        let bg = img(3);
        let depths = place_planes_disparity(planes, 0.95, 1.12).unwrap();
        let mut mpi = MultiplaneImage::new(color, alphas, depths, 0.95, 1.12).unwrap();
        if background {
            mpi = mpi.with_background(bg).unwrap();
        }
        (mpi, CameraIntrinsics::from_fov(w, h, 12.0).unwrap())
    }

    fn assert_close(a: &MultiplaneImage, b: &MultiplaneImage, tol: f64) {
        assert_eq!(a.depths(), b.depths());
        assert_eq!((a.near(), a.far()), (b.near(), b.far()));
        assert!(a.color().max_abs_diff(b.color()) <= tol);
        for (x, y) in a.alphas().iter().zip(b.alphas()) {
            assert!(x.max_abs_diff(y) <= tol);
        }
        match (a.background(), b.background()) {
            (Some(x), Some(y)) => assert!(x.max_abs_diff(y) <= tol),
            (None, None) => {}
            _ => panic!("background presence differs"),
        }
    }

    #[test]
    fn round_trip_8_and_16_bit() {
        let dir = tempfile::tempdir().unwrap();
        let (mpi, k) = random_mpi(32, true);
        for depth in [BitDepth::Eight, BitDepth::Sixteen] {
            let d = dir.path().join(depth.bits().to_string());
            save_mpi(&mpi, &k, &d, depth).unwrap();
            let c = load_container(&d).unwrap();
            assert_eq!(c.intrinsics, k);
            assert_eq!(c.bit_depth, depth);
            assert_close(&c.mpi, &mpi, 1.0 / depth.max_value());
            // Depths survive bit for bit.
            let bits: Vec<u64> = c.mpi.depths().iter().map(|d| d.to_bits()).collect();
            let orig: Vec<u64> = mpi.depths().iter().map(|d| d.to_bits()).collect();
            assert_eq!(bits, orig);
        }
    }

    #[test]
    fn no_background_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let (mpi, k) = random_mpi(3, false);
        save_mpi(&mpi, &k, dir.path(), BitDepth::Eight).unwrap();
        let text = std::fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap();
        assert!(!text.contains("background"));
        assert!(load_mpi(dir.path()).unwrap().0.background().is_none());
    }

    fn edit_manifest(dir: &Path, f: impl FnOnce(&mut serde_json::Value)) {
        let path = dir.join(MANIFEST_FILE);
        let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        f(&mut v);
        std::fs::write(&path, serde_json::to_string(&v).unwrap()).unwrap();
    }

    fn saved(planes: usize) -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        let (mpi, k) = random_mpi(planes, false);
        save_mpi(&mpi, &k, dir.path(), BitDepth::Eight).unwrap();
        dir
    }

    #[test]
    fn shuffled_depths_are_rejected() {
        let dir = saved(4);
        edit_manifest(dir.path(), |v| {
            let d = v["depths"].as_array_mut().unwrap();
            d.swap(0, 2);
        });
        let err = load_mpi(dir.path()).unwrap_err();
        assert!(err.to_string().contains("strictly increasing"), "{err}");
    }

    #[test]
    fn plane_count_mismatch_is_rejected() {
        let dir = saved(4);
        edit_manifest(dir.path(), |v| v["planes"] = 5.into());
        assert!(matches!(load_mpi(dir.path()), Err(Error::Manifest(_))));

        let dir = saved(4);
        std::fs::remove_file(dir.path().join(alpha_file_name(3))).unwrap();
        assert!(matches!(load_mpi(dir.path()), Err(Error::MissingFile(_))));
    }

    #[test]
    fn manifest_fields_are_checked() {
        let cases: Vec<Box<dyn Fn(&mut serde_json::Value)>> = vec![
            Box::new(|v| v["format"] = "other".into()),
            Box::new(|v| v["version"] = 2.into()),
            Box::new(|v| v["bit_depth"] = 12.into()),
            Box::new(|v| v["width"] = 11.into()),
            Box::new(|v| v["color"] = "../color.png".into()),
            Box::new(|v| v["canonical_pose"]["translation"][0] = 0.5.into()),
            Box::new(|v| v["canonical_pose"]["rotation"][0][0] = 2.0.into()),
            Box::new(|v| v["near"] = 1.0.into()),
            Box::new(|v| v["extra"] = 1.into()),
            Box::new(|v| {
                v.as_object_mut().unwrap().remove("depths");
            }),
        ];
        for (i, f) in cases.iter().enumerate() {
            let dir = saved(3);
            edit_manifest(dir.path(), f);
            assert!(load_mpi(dir.path()).is_err(), "case {i} accepted");
        }
        let empty = tempfile::tempdir().unwrap();
        assert!(matches!(load_mpi(empty.path()), Err(Error::MissingFile(_))));
    }

    #[test]
    fn resized_alpha_file_is_rejected() {
        let dir = saved(2);
        write_png(&dir.path().join(alpha_file_name(1)), &Image::zeros(3, 3, 1), BitDepth::Eight).unwrap();
        assert!(matches!(load_mpi(dir.path()), Err(Error::Manifest(_))));
    }
}
