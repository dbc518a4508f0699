//! `mpi-render` command-line tool.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or input error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use mpi_render::container::{
    load_container, save_mpi, synth_scene, write_png, BitDepth, OrbitSpec, SceneKind, SynthParams, Trajectory,
};
use mpi_render::fdcheck::{render_gradcheck, FdConfig, GradCase};
use mpi_render::genstack::{ToyConfig, ToyGenerator};
use mpi_render::mesh::{build_occupancy, export_obj, laplacian_smooth, marching_cubes, DEFAULT_ISO};
use mpi_render::shading::{apply_shading, normal_map, LightAngles, ShadingParams};
use mpi_render::{render, CameraIntrinsics, CameraPair, CameraPose, Error};

#[derive(Parser, Debug)]
#[command(name = "mpi-render", version, about = "Render, inspect and generate multiplane images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render an MPI container along a trajectory (one PNG per pose, named by label).
    Render(RenderArgs),
    /// Write an orbit trajectory: evenly spaced look-at poses around the volume center.
    Orbit(OrbitArgs),
    /// Check analytic render gradients against central finite differences.
    Gradcheck(GradcheckArgs),
    /// Extract an OBJ mesh from the alpha occupancy with marching cubes.
    Mesh(MeshArgs),
    /// Write a procedural scene container.
    Synth(SynthArgs),
    /// Write a container produced by the seeded toy generator.
    Toygen(ToygenArgs),
}

fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    v.try_into().map_err(|_| "expected three comma-separated numbers".to_string())
}

fn parse_grid(s: &str) -> Result<[usize; 3], String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    v.try_into().map_err(|_| "expected X,Y,Z".to_string())
}

fn parse_bit_depth(s: &str) -> Result<BitDepth, String> {
    s.parse::<u8>().map_err(|e| e.to_string()).and_then(BitDepth::try_from)
}

#[derive(Args, Debug)]
struct RenderArgs {
    /// Container directory.
    #[arg(long)]
    mpi: PathBuf,
    /// Trajectory JSON; the canonical pose alone when omitted.
    #[arg(long)]
    trajectory: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Also write `<label>_depth.png` (16-bit) with a `<label>_depth.txt` min/max sidecar.
    #[arg(long)]
    depth: bool,
    /// Also write `<label>_normal.png`, normals mapped from [-1, 1] to [0, 1].
    #[arg(long)]
    normal: bool,
    /// Also write `<label>_shaded.png`: the color shaded in the canonical frame, then warped.
    #[arg(long)]
    shaded: bool,
    /// Ambient coefficient for --shaded.
    #[arg(long, default_value_t = 0.9)]
    ka: f64,
    /// Diffuse coefficient for --shaded.
    #[arg(long, default_value_t = 0.1)]
    kd: f64,
    /// Light horizontal angle in degrees (default 0).
    #[arg(long)]
    light_h: Option<f64>,
    /// Light vertical angle in degrees (default about 11.46, i.e. 0.2 rad).
    #[arg(long)]
    light_v: Option<f64>,
    /// Composite over this RGB color (`r,g,b` in [0, 1]) instead of black.
    #[arg(long, value_parser = parse_triple)]
    backdrop: Option<[f64; 3]>,
}

#[derive(Args, Debug)]
struct OrbitArgs {
    /// Yaw range in degrees: `min,max`.
    #[arg(long, default_value = "-10,10", value_parser = parse_range)]
    yaw: [f64; 2],
    /// Pitch range in degrees: `min,max`.
    #[arg(long, default_value = "0,0", value_parser = parse_range)]
    pitch: [f64; 2],
    #[arg(long, default_value_t = 9)]
    count: usize,
    /// Look-at depth; defaults to (near + far) / 2 of --mpi, or 1.035.
    #[arg(long)]
    center_depth: Option<f64>,
    /// Container whose depth range sets the default look-at depth.
    #[arg(long)]
    mpi: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn parse_range(s: &str) -> Result<[f64; 2], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    v.try_into().map_err(|_| "expected `min,max`".to_string())
}

#[derive(Args, Debug)]
struct GradcheckArgs {
    /// First seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of consecutive seeds.
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    #[arg(long, default_value_t = 8)]
    width: usize,
    #[arg(long, default_value_t = 8)]
    height: usize,
    #[arg(long, default_value_t = 4)]
    planes: usize,
    /// Relative error tolerance.
    #[arg(long, default_value_t = 1e-3)]
    tolerance: f64,
    /// Corrupt the analytic alpha gradients; the check must then fail.
    #[arg(long)]
    inject_bug: bool,
}

#[derive(Args, Debug)]
struct MeshArgs {
    #[arg(long)]
    mpi: PathBuf,
    /// Grid samples `X,Y,Z`; defaults to the image size by 2L.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<[usize; 3]>,
    #[arg(long, default_value_t = DEFAULT_ISO)]
    iso: f64,
    /// Laplacian smoothing iterations.
    #[arg(long, default_value_t = 0)]
    smooth: usize,
    #[arg(long, default_value_t = 0.5)]
    smooth_factor: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// layered-disks, checker-card or sphere-billboards.
    #[arg(long)]
    kind: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 128)]
    width: usize,
    #[arg(long, default_value_t = 128)]
    height: usize,
    #[arg(long, default_value_t = 32)]
    planes: usize,
    #[arg(long, default_value_t = 0.95)]
    near: f64,
    #[arg(long, default_value_t = 1.12)]
    far: f64,
    /// Horizontal field of view in degrees.
    #[arg(long, default_value_t = 30.0)]
    fov: f64,
    #[arg(long, default_value = "8", value_parser = parse_bit_depth)]
    bit_depth: BitDepth,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ToygenArgs {
    /// TOML file with generator settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    planes: Option<usize>,
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    alpha_resolution: Option<usize>,
    #[arg(long)]
    near: Option<f64>,
    #[arg(long)]
    far: Option<f64>,
    #[arg(long)]
    psi: Option<f64>,
    /// Weight seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Latent seed.
    #[arg(long, default_value_t = 0)]
    z_seed: u64,
    /// Horizontal field of view in degrees stored in the container.
    #[arg(long, default_value_t = 12.0)]
    fov: f64,
    #[arg(long, default_value = "8", value_parser = parse_bit_depth)]
    bit_depth: BitDepth,
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Verification(String),
    Input(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e)
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Render(a) => cmd_render(a),
        Command::Orbit(a) => cmd_orbit(a),
        Command::Gradcheck(a) => cmd_gradcheck(a),
        Command::Mesh(a) => cmd_mesh(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Toygen(a) => cmd_toygen(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn create_dir(dir: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn cmd_render(a: RenderArgs) -> CmdResult {
    let container = load_container(&a.mpi)?;
    let trajectory = match &a.trajectory {
        Some(p) => Trajectory::load(p)?,
        None => Trajectory::canonical(),
    };
    let light = LightAngles {
        horizontal: a.light_h.map_or(LightAngles::HORIZONTAL_MEAN, f64::to_radians),
        vertical: a.light_v.map_or(LightAngles::VERTICAL_MEAN, f64::to_radians),
    };
    let shading = ShadingParams::new(a.ka, a.kd, light.direction())?;
    create_dir(&a.out)?;
    let cams = CameraPair::same(container.intrinsics);
    // Shading acts on the shared color in the canonical frame; every view then warps the shaded MPI.
    let shaded_mpi = if a.shaded {
        let canonical = render(&container.mpi, &cams, &CameraPose::identity())?;
        let normals = normal_map(&canonical.depth, &cams.canonical);
        let color = apply_shading(container.mpi.color(), &normals, &shading)?;
        Some(container.mpi.with_color(color)?)
    } else {
        None
    };
    trajectory
        .poses
        .par_iter()
        .map(|(label, pose)| -> Result<(), Error> {
            let out = render(&container.mpi, &cams, pose)?;
            let color = match a.backdrop {
                Some(b) => out.over_backdrop(b),
                None => out.color.clone(),
            };
            write_png(&a.out.join(format!("{label}.png")), &color, BitDepth::Eight)?;
            if a.depth {
                let (lo, hi) = out.depth.data().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &d| {
                    (lo.min(d), hi.max(d))
                });
                let scale = if hi > lo { 1.0 / (hi - lo) } else { 0.0 };
                let normalized = out.depth.map(|d| (d - lo) * scale);
                write_png(&a.out.join(format!("{label}_depth.png")), &normalized, BitDepth::Sixteen)?;
                write_text(
                    &a.out.join(format!("{label}_depth.txt")),
                    &format!("min {lo}\nmax {hi}\n"),
                )?;
            }
            if a.normal {
                let vis = normal_map(&out.depth, &cams.target).map(|n| 0.5 * (n + 1.0));
                write_png(&a.out.join(format!("{label}_normal.png")), &vis, BitDepth::Eight)?;
            }
            if let Some(mpi) = &shaded_mpi {
                let lit = render(mpi, &cams, pose)?;
                let shaded = match a.backdrop {
                    Some(b) => lit.over_backdrop(b),
                    None => lit.color,
                };
                write_png(&a.out.join(format!("{label}_shaded.png")), &shaded, BitDepth::Eight)?;
            }
            Ok(())
        })
        .collect::<Result<Vec<()>, Error>>()?;
    println!("rendered {} view(s) into {}", trajectory.poses.len(), a.out.display());
    Ok(())
}

fn cmd_orbit(a: OrbitArgs) -> CmdResult {
    let center_depth = match (a.center_depth, &a.mpi) {
        (Some(d), _) => d,
        (None, Some(dir)) => {
            let c = load_container(dir)?;
            0.5 * (c.mpi.near() + c.mpi.far())
        }
        (None, None) => 1.035,
    };
    let t = Trajectory::orbit(OrbitSpec {
        yaw_range: a.yaw,
        pitch_range: a.pitch,
        count: a.count,
        center_depth,
    })?;
    t.save(&a.out)?;
    println!("wrote {} pose(s) to {}", t.poses.len(), a.out.display());
    Ok(())
}

fn cmd_gradcheck(a: GradcheckArgs) -> CmdResult {
    if a.width == 0 || a.height == 0 || a.planes == 0 || a.seeds == 0 {
        return Err(Error::InvalidConfig("sizes and seed count must be positive".into()).into());
    }
    let config = FdConfig {
        tolerance: a.tolerance,
        ..FdConfig::default()
    };
    let outcomes = (a.seed..a.seed + a.seeds)
        .into_par_iter()
        .map(|seed| {
            let case = GradCase {
                seed,
                width: a.width,
                height: a.height,
                planes: a.planes,
            };
            render_gradcheck(&case, &config, a.inject_bug)
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let names: Vec<String> = outcomes[0].tensors.iter().map(|t| t.name.clone()).collect();
    println!("{:<10} {:>8} {:>16}", "tensor", "params", "max rel error");
    for (i, name) in names.iter().enumerate() {
        let worst = outcomes.iter().map(|o| o.tensors[i].max_rel_error).fold(0.0, f64::max);
        let count: usize = outcomes.iter().map(|o| o.tensors[i].count).sum();
        let flag = if worst <= a.tolerance { "" } else { "  FAIL" };
        println!("{name:<10} {count:>8} {worst:>16.3e}{flag}");
    }
    for o in &outcomes {
        for e in o.report.failures().take(5) {
            println!(
                "seed {} param {}: analytic {:.6e} numeric {:.6e} rel {:.3e}",
                o.case.seed, e.index, e.analytic, e.numeric, e.rel_error
            );
        }
    }
    let total: usize = outcomes.iter().map(|o| o.report.failures().count()).sum();
    if total == 0 {
        println!("gradcheck passed: {} seed(s), tolerance {:e}", outcomes.len(), a.tolerance);
        Ok(())
    } else {
        Err(Failure::Verification(format!("{total} parameter(s) above tolerance {:e}", a.tolerance)))
    }
}

fn cmd_mesh(a: MeshArgs) -> CmdResult {
    if !(a.iso > 0.0 && a.iso < 1.0) {
        return Err(Error::InvalidRange(format!("iso {} must lie in (0, 1)", a.iso)).into());
    }
    let c = load_container(&a.mpi)?;
    let grid = a
        .grid
        .unwrap_or([c.mpi.width(), c.mpi.height(), (2 * c.mpi.num_planes()).max(2)]);
    let volume = build_occupancy(&c.mpi, &c.intrinsics, grid)?.padded();
    let mut mesh = marching_cubes(&volume, a.iso);
    if a.smooth > 0 {
        mesh = laplacian_smooth(&mesh, a.smooth, a.smooth_factor);
    }
    if mesh.is_empty() {
        eprintln!(
            "warning: no occupancy above iso {} (max {:.4}); writing an empty mesh",
            a.iso,
            volume.max_value()
        );
    }
    export_obj(&mesh, &a.out)?;
    println!(
        "wrote {} vertices, {} triangles to {}",
        mesh.vertices.len(),
        mesh.triangles.len(),
        a.out.display()
    );
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> CmdResult {
    let kind: SceneKind = a.kind.parse()?;
    let params = SynthParams {
        width: a.width,
        height: a.height,
        planes: a.planes,
        near: a.near,
        far: a.far,
        fov_deg: a.fov,
        ..SynthParams::default()
    };
    let scene = synth_scene(kind, &params, a.seed)?;
    save_mpi(&scene.mpi, &scene.intrinsics, &a.out, a.bit_depth)?;
    println!("wrote {kind} ({} planes) to {}", scene.mpi.num_planes(), a.out.display());
    Ok(())
}

fn cmd_toygen(a: ToygenArgs) -> CmdResult {
    let mut config = match &a.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| Error::Io {
                path: p.clone(),
                source,
            })?;
            ToyConfig::from_toml_str(&text)?
        }
        None => ToyConfig::default(),
    };
    if let Some(v) = a.planes {
        config.planes = v;
    }
    if let Some(v) = a.resolution {
        config.resolution = v;
        config.alpha_resolution = config.alpha_resolution.min(v);
    }
    if let Some(v) = a.alpha_resolution {
        config.alpha_resolution = v;
    }
    if let Some(v) = a.near {
        config.near = v;
    }
    if let Some(v) = a.far {
        config.far = v;
    }
    if let Some(v) = a.psi {
        config.psi = v;
    }
    if let Some(v) = a.seed {
        config.seed = v;
    }
    let generator = ToyGenerator::new(config.clone())?;
    let mpi = generator.generate(&generator.sample_latent(a.z_seed))?;
    let k = CameraIntrinsics::from_fov(config.resolution, config.resolution, a.fov)?;
    save_mpi(&mpi, &k, &a.out, a.bit_depth)?;
    write_text(&a.out.join("toygen.toml"), &config.to_toml_string())?;
    println!(
        "wrote toy MPI ({} planes, {}x{}) to {}",
        mpi.num_planes(),
        config.resolution,
        config.resolution,
        a.out.display()
    );
    Ok(())
}
