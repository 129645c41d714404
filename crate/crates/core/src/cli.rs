//! The `tangent` command-line tool.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::camnorm::{
    apply_pixel_map, make_target, normalize_camera, sample_shift, CameraIntrinsics,
};
use crate::error::{Error, ErrorKind, Result};
use crate::features::keypoints::{
    equirect_keypoints_to_sphere, format_keypoint_lines, parse_keypoint_lines, KeypointSource,
};
use crate::features::overlap::{directional_counts, fov_overlap_with, PoseRecord};
use crate::features::{
    covisible_count, keypoints_to_sphere, matching_metrics, Keypoint, MatchStats,
    OcclusionTolerance, Pose, PosedSphericalImage,
};
use crate::gnomonic::make_plane_specs;
use crate::icosphere::build_icosphere;
use crate::imageio::{
    load_equirect, load_raster, save_equirect, save_raster, ChannelKind, ChannelSemantics, Raster,
    DEFAULT_DEPTH_SCALE, DEFAULT_INVALID_DEPTH,
};
use crate::raster::{GridView, Interp};
use crate::resample::{from_tangent, to_tangent};
use crate::tangent_store::{
    face_file_name, load_meta, load_tangent_set, save_tangent_set, META_FILE,
};

#[derive(Debug, Parser)]
#[command(
    name = "tangent",
    version,
    about = "Tangent-image tools for spherical panoramas"
)]
pub struct Cli {
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true, env = "TANGENT_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Icosphere inspection.
    #[command(subcommand)]
    Icosphere(IcosphereCommand),
    /// Render an equirectangular PNG to a directory of tangent images.
    ToTangent(ToTangentArgs),
    /// Render a tangent-image directory back to an equirectangular PNG.
    FromTangent(FromTangentArgs),
    /// Resample a perspective image to the angular resolution of a spherical level.
    Camnorm(CamnormArgs),
    /// Keypoint utilities.
    #[command(subcommand)]
    Kp(KpCommand),
}

#[derive(Debug, Subcommand)]
pub enum IcosphereCommand {
    /// Print mesh statistics for one subdivision level.
    Info {
        #[arg(long)]
        level: u32,
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ChannelArgs {
    #[arg(long, default_value = "color8")]
    pub channels: ChannelKind,
    /// Meters per stored unit (depth16 only).
    #[arg(long, default_value_t = DEFAULT_DEPTH_SCALE)]
    pub depth_scale: f64,
    /// Stored value marking missing depth (depth16 only).
    #[arg(long, default_value_t = DEFAULT_INVALID_DEPTH)]
    pub invalid_value: u16,
}

impl ChannelArgs {
    fn semantics(&self) -> Result<ChannelSemantics> {
        match self.channels {
            ChannelKind::Depth16 => ChannelSemantics::depth(self.depth_scale, self.invalid_value),
            kind => Ok(ChannelSemantics::new(kind)),
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct ToTangentArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub base_level: u32,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub interp: Option<Interp>,
    /// Use nearest-neighbour sampling for depth channels.
    #[arg(long)]
    pub exact_depth: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub channel: ChannelArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct FromTangentArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub height: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct CamnormArgs {
    #[arg(long)]
    pub level: u32,
    #[arg(long)]
    pub fov_deg: f64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub intrinsics: PathBuf,
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub out_meta: PathBuf,
    #[arg(long, default_value = "bilinear")]
    pub interp: Interp,
    #[command(flatten)]
    #[serde(flatten)]
    pub channel: ChannelArgs,
}

#[derive(Debug, Subcommand)]
pub enum KpCommand {
    /// Place keypoints on the sphere, dropping tangent duplicates outside their owning face.
    ToSphere(KpToSphereArgs),
    /// Field-of-view overlap of two posed depth panoramas.
    FovOverlap(KpFovOverlapArgs),
    /// Aggregate matching statistics into PMR, MS and precision.
    Metrics(KpMetricsArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct KpToSphereArgs {
    /// JSON-lines keypoint file.
    #[arg(long)]
    pub input: PathBuf,
    /// Tangent-image directory whose meta.json supplies the levels.
    #[arg(long, conflicts_with_all = ["base_level", "source_level"])]
    pub tangent: Option<PathBuf>,
    #[arg(long, requires = "source_level")]
    pub base_level: Option<u32>,
    #[arg(long)]
    pub source_level: Option<u32>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct KpFovOverlapArgs {
    #[arg(long)]
    pub depth_a: PathBuf,
    #[arg(long)]
    pub pose_a: PathBuf,
    #[arg(long)]
    pub depth_b: PathBuf,
    #[arg(long)]
    pub pose_b: PathBuf,
    #[arg(long, default_value_t = DEFAULT_DEPTH_SCALE)]
    pub depth_scale: f64,
    #[arg(long, default_value_t = DEFAULT_INVALID_DEPTH)]
    pub invalid_value: u16,
    #[arg(long, default_value_t = 0.03)]
    pub relative_tolerance: f64,
    #[arg(long, default_value_t = 0.05)]
    pub absolute_tolerance: f64,
    /// Spherical keypoints of image a; adds the covisible count `n_left`.
    #[arg(long)]
    pub keypoints_a: Option<PathBuf>,
    /// Spherical keypoints of image b; adds the covisible count `n_right`.
    #[arg(long)]
    pub keypoints_b: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct KpMetricsArgs {
    #[arg(long)]
    pub stats: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

/// Record written next to every command's outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: Value,
    pub input_hashes: BTreeMap<String, String>,
    pub tool_version: String,
    pub wall_time_s: f64,
}

struct Run {
    command: &'static str,
    parameters: Value,
    input_hashes: BTreeMap<String, String>,
    started: Instant,
}

impl Run {
    fn new(command: &'static str, parameters: impl Serialize) -> Self {
        Run {
            command,
            parameters: serde_json::to_value(parameters).expect("parameters serialize"),
            input_hashes: BTreeMap::new(),
            started: Instant::now(),
        }
    }

    fn hash_file(&mut self, path: &Path) -> Result<()> {
        let bytes = read_bytes(path)?;
        self.input_hashes.insert(
            path.display().to_string(),
            hex::encode(Sha256::digest(&bytes)),
        );
        Ok(())
    }

    fn finish(self, path: &Path) -> Result<()> {
        let manifest = RunManifest {
            command: self.command.to_string(),
            parameters: self.parameters,
            input_hashes: self.input_hashes,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_s: self.started.elapsed().as_secs_f64(),
        };
        write_json(path, &manifest)
    }
}

/// `out.png` -> `out.png.manifest.json`.
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().map(OsString::from).unwrap_or_default();
    name.push(".manifest.json");
    output.with_file_name(name)
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    fs::read(path).map_err(|e| Error::Read {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = read_bytes(path)?;
    serde_json::from_slice(&bytes).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::Write {
            path: parent.to_path_buf(),
            detail: e.to_string(),
        })?;
    }
    fs::write(path, contents).map_err(|e| Error::Write {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    write_file(path, text.as_bytes())
}

fn print_json(value: &Value) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(
        out,
        "{}",
        serde_json::to_string_pretty(value).expect("value serializes")
    );
}

fn icosphere_info(level: u32, manifest: Option<&Path>) -> Result<()> {
    let run = Run::new("icosphere info", json!({ "level": level }));
    let sphere = build_icosphere(level)?;
    print_json(&json!({
        "level": level,
        "vertices": sphere.vertex_count(),
        "faces": sphere.face_count(),
        "edges": sphere.edge_count(),
        "vertex_resolution_deg": sphere.vertex_resolution().to_degrees(),
        "surface_area_ratio": sphere.surface_area_ratio(),
    }));
    match manifest {
        Some(path) => run.finish(path),
        None => Ok(()),
    }
}

fn cmd_to_tangent(args: &ToTangentArgs) -> Result<()> {
    let semantics = args.channel.semantics()?;
    let interp = match (
        args.interp,
        args.exact_depth && semantics.kind == ChannelKind::Depth16,
    ) {
        (Some(Interp::Bilinear), true) => {
            return Err(Error::invalid(
                "--exact-depth requires nearest interpolation",
            ))
        }
        (Some(i), _) => i,
        (None, exact) => semantics.default_interp(exact),
    };
    let mut run = Run::new("to-tangent", args);
    run.parameters["interp"] = json!(interp);
    run.hash_file(&args.input)?;
    let img = load_equirect(&args.input, &semantics)?;
    let set = to_tangent(&img, args.base_level, interp)?;
    save_tangent_set(&set, &args.out)?;
    run.finish(&args.out.join("manifest.json"))
}

fn cmd_from_tangent(args: &FromTangentArgs) -> Result<()> {
    if args.height < 2 || !args.height.is_power_of_two() {
        return Err(Error::HeightNotPowerOfTwo(args.height));
    }
    let mut run = Run::new("from-tangent", args);
    let meta_path = args.input.join(META_FILE);
    run.hash_file(&meta_path)?;
    let meta = load_meta(&args.input)?;
    // One digest over all faces keeps manifests small at high base levels.
    let mut faces = Sha256::new();
    for k in 0..meta.faces.len() {
        faces.update(read_bytes(&args.input.join(face_file_name(k)))?);
    }
    run.input_hashes.insert(
        args.input.join("face_*.png").display().to_string(),
        hex::encode(faces.finalize()),
    );
    let set = load_tangent_set(&args.input)?;
    let img = from_tangent(&set, args.height)?;
    save_equirect(&img, &args.out, &set.semantics)?;
    run.finish(&manifest_path(&args.out))
}

fn cmd_camnorm(args: &CamnormArgs) -> Result<()> {
    let mut run = Run::new("camnorm", args);
    run.hash_file(&args.intrinsics)?;
    run.hash_file(&args.image)?;
    let semantics = args.channel.semantics()?;
    let src: CameraIntrinsics = read_json(&args.intrinsics)?;
    src.validate()?;
    let raster = load_raster(&args.image, &semantics)?;
    if (raster.width, raster.height) != (src.width, src.height) {
        return Err(Error::invalid(format!(
            "image is {}x{} but intrinsics describe {}x{}",
            raster.width, raster.height, src.width, src.height
        )));
    }
    let target = make_target(args.level, args.fov_deg.to_radians())?;
    let shift = sample_shift(&src, &target, args.seed)?;
    let map = normalize_camera(&src, &target, shift)?;
    let view = GridView::new(
        &raster.samples,
        raster.height,
        raster.width,
        raster.channels,
    );
    let samples = apply_pixel_map(view, &map, args.interp);
    let out = Raster {
        height: map.target_height,
        width: map.target_width,
        channels: raster.channels,
        samples,
    };
    save_raster(&args.out, &out, &semantics)?;
    write_json(
        &args.out_meta,
        &json!({
            "source": src,
            "target": target.camera(),
            "angular_resolution": target.alpha,
            "fov_deg": target.fov.to_degrees(),
            "requested_fov_deg": target.requested_fov.to_degrees(),
            "shift": [shift.0, shift.1],
            "pixel_map": map,
        }),
    )?;
    run.finish(&manifest_path(&args.out))
}

fn cmd_kp_to_sphere(args: &KpToSphereArgs) -> Result<()> {
    let mut run = Run::new("kp to-sphere", args);
    run.hash_file(&args.input)?;
    let (base_level, source_level) = match (&args.tangent, args.base_level, args.source_level) {
        (Some(dir), _, _) => {
            run.hash_file(&dir.join(META_FILE))?;
            let meta = load_meta(dir)?;
            (Some(meta.base_level), meta.source_level)
        }
        (None, b, Some(s)) => (b, s),
        (None, _, None) => {
            return Err(Error::invalid("give --tangent or --source-level"));
        }
    };
    let text = String::from_utf8(read_bytes(&args.input)?).map_err(|e| Error::Format {
        path: args.input.clone(),
        detail: e.to_string(),
    })?;
    let kps = parse_keypoint_lines(&text)?;
    let (tangent, equirect): (Vec<Keypoint>, Vec<Keypoint>) = kps
        .into_iter()
        .partition(|k| matches!(k.source, KeypointSource::Tangent { .. }));
    let mut placed = Vec::new();
    if !tangent.is_empty() {
        let b = base_level.ok_or_else(|| Error::invalid("tangent keypoints need a base level"))?;
        let specs = make_plane_specs(&build_icosphere(b)?, source_level)?;
        placed.extend(keypoints_to_sphere(&tangent, &specs)?);
    }
    let height = 1usize
        .checked_shl(source_level + 1)
        .ok_or_else(|| Error::invalid(format!("source level {source_level} is too large")))?;
    placed.extend(equirect_keypoints_to_sphere(&equirect, height)?);
    write_file(&args.out, format_keypoint_lines(&placed).as_bytes())?;
    run.finish(&manifest_path(&args.out))
}

fn load_posed(
    depth: &Path,
    pose: &Path,
    semantics: &ChannelSemantics,
) -> Result<PosedSphericalImage> {
    let record: PoseRecord = read_json(pose)?;
    PosedSphericalImage::new(
        None,
        load_equirect(depth, semantics)?,
        Pose::try_from(&record)?,
    )
}

fn load_spherical_keypoints(path: &Path) -> Result<Vec<crate::gnomonic::SphericalCoord>> {
    let text = String::from_utf8(read_bytes(path)?).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })?;
    parse_keypoint_lines(&text)?
        .iter()
        .map(|k| {
            k.spherical.ok_or_else(|| Error::Format {
                path: path.to_path_buf(),
                detail: "keypoint without lat/lon; run `kp to-sphere` first".into(),
            })
        })
        .collect()
}

fn cmd_kp_fov_overlap(args: &KpFovOverlapArgs) -> Result<()> {
    let mut run = Run::new("kp fov-overlap", args);
    for p in [&args.depth_a, &args.pose_a, &args.depth_b, &args.pose_b] {
        run.hash_file(p)?;
    }
    for p in [&args.keypoints_a, &args.keypoints_b].into_iter().flatten() {
        run.hash_file(p)?;
    }
    let semantics = ChannelSemantics::depth(args.depth_scale, args.invalid_value)?;
    let tol = OcclusionTolerance {
        relative: args.relative_tolerance,
        absolute: args.absolute_tolerance,
    };
    if !(tol.relative >= 0.0 && tol.absolute >= 0.0) {
        return Err(Error::invalid("occlusion tolerances must be non-negative"));
    }
    let a = load_posed(&args.depth_a, &args.pose_a, &semantics)?;
    let b = load_posed(&args.depth_b, &args.pose_b, &semantics)?;
    let overlap = fov_overlap_with(&a, &b, &tol)?;
    let (vis_ab, valid_a) = directional_counts(&a, &b, &tol);
    let (vis_ba, valid_b) = directional_counts(&b, &a, &tol);
    let mut result = json!({
        "fov_overlap": overlap,
        "visible_a_in_b": vis_ab,
        "valid_a": valid_a,
        "visible_b_in_a": vis_ba,
        "valid_b": valid_b,
    });
    if let Some(p) = &args.keypoints_a {
        result["n_left"] = json!(covisible_count(&load_spherical_keypoints(p)?, &a, &b, &tol));
    }
    if let Some(p) = &args.keypoints_b {
        result["n_right"] = json!(covisible_count(&load_spherical_keypoints(p)?, &b, &a, &tol));
    }
    print_json(&result);
    match &args.manifest {
        Some(path) => run.finish(path),
        None => Ok(()),
    }
}

fn cmd_kp_metrics(args: &KpMetricsArgs) -> Result<()> {
    let mut run = Run::new("kp metrics", args);
    run.hash_file(&args.stats)?;
    let stats: Vec<MatchStats> = read_json(&args.stats)?;
    let m = matching_metrics(&stats)?;
    print_json(&json!({
        "pairs": m.pairs,
        "pmr": m.pmr,
        "ms": m.ms,
        "precision": m.precision,
        "pmr_percent": 100.0 * m.pmr,
        "ms_percent": 100.0 * m.ms,
        "precision_percent": 100.0 * m.precision,
    }));
    match &args.manifest {
        Some(path) => run.finish(path),
        None => Ok(()),
    }
}

pub fn execute(command: &Command) -> Result<()> {
    match command {
        Command::Icosphere(IcosphereCommand::Info { level, manifest }) => {
            icosphere_info(*level, manifest.as_deref())
        }
        Command::ToTangent(a) => cmd_to_tangent(a),
        Command::FromTangent(a) => cmd_from_tangent(a),
        Command::Camnorm(a) => cmd_camnorm(a),
        Command::Kp(KpCommand::ToSphere(a)) => cmd_kp_to_sphere(a),
        Command::Kp(KpCommand::FovOverlap(a)) => cmd_kp_fov_overlap(a),
        Command::Kp(KpCommand::Metrics(a)) => cmd_kp_metrics(a),
    }
}

/// Runs the parsed command on a pool of the requested size.
pub fn run(cli: &Cli) -> Result<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::invalid("--threads must be at least 1"));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::invalid(format!("cannot start thread pool: {e}")))?;
    pool.install(|| execute(&cli.command))
}

/// Machine-readable error report for stderr.
pub fn error_json(code: &str, message: &str, exit_code: i32) -> String {
    json!({ "code": code, "message": message, "exit_code": exit_code }).to_string()
}

/// Parses `args`, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind as K;
            if matches!(
                e.kind(),
                K::DisplayHelp | K::DisplayVersion | K::DisplayHelpOnMissingArgumentOrSubcommand
            ) {
                let _ = e.print();
                return 0;
            }
            let code = ErrorKind::InvalidArgument.exit_code();
            let message = e.render().to_string();
            eprintln!("{}", error_json("argument.invalid", message.trim(), code));
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            let code = e.kind().exit_code();
            eprintln!("{}", error_json(e.code(), &e.to_string(), code));
            code
        }
    }
}
