//! Acceptance checks shared by the acceptance target and the themed test files.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::Rotation3;
use rand::Rng;
use tangent_core::camnorm::{make_target, normalize_camera, sample_shift, CameraIntrinsics};
use tangent_core::features::{fov_overlap, matching_metrics, MatchStats};
use tangent_core::gnomonic::{
    gnomonic_forward, gnomonic_inverse, make_plane_specs, tangent_dim, SphericalCoord,
};
use tangent_core::icosphere::build_icosphere;
use tangent_core::imageio::ChannelSemantics;
use tangent_core::raster::{EquirectImage, Interp};
use tangent_core::resample::{from_tangent, to_tangent};

use super::scene::{pose, two_box_scene, Scene, Shape};
use super::*;

pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

pub fn mesh_counts() -> Outcome {
    let figure = [
        (0u32, 12usize, 20usize),
        (1, 42, 80),
        (5, 10_242, 20_480),
        (7, 163_842, 327_680),
        (8, 655_362, 1_310_720),
    ];
    let mut bad = Vec::new();
    let (_, through_8) = timed(|| {
        for level in 0..=8u32 {
            let s = build_icosphere(level).unwrap();
            if let Some(&(_, v, f)) = figure.iter().find(|(l, ..)| *l == level) {
                if (s.vertex_count(), s.face_count()) != (v, f) {
                    bad.push(format!(
                        "level {level}: {}/{}",
                        s.vertex_count(),
                        s.face_count()
                    ));
                }
            }
        }
    });
    let (counts10, level10) = timed(|| {
        let s = build_icosphere(10).unwrap();
        (s.vertex_count(), s.face_count(), s.edge_count())
    });
    let closed = (
        10 * 4usize.pow(10) + 2,
        20 * 4usize.pow(10),
        30 * 4usize.pow(10),
    );
    if counts10 != closed {
        bad.push(format!("level 10: {counts10:?} vs {closed:?}"));
    }
    let fast = through_8 < Duration::from_secs(30) && level10 < Duration::from_secs(300);
    Outcome::new(
        bad.is_empty() && fast,
        format!(
            "levels 0-8 in {:.2}s, level 10 ({} v, {} f) in {:.1}s{}",
            through_8.as_secs_f64(),
            counts10.0,
            counts10.1,
            level10.as_secs_f64(),
            if bad.is_empty() {
                String::new()
            } else {
                format!("; mismatches {bad:?}")
            }
        ),
    )
}

pub fn tangent_dimensions() -> Outcome {
    let dims = [(5, 0, 32), (7, 0, 128), (10, 1, 512)];
    let mut ok = dims
        .iter()
        .all(|&(s, b, d)| tangent_dim(s, b).unwrap() == d);
    let mut counts = Vec::new();
    for b in 0..=2u32 {
        let n = make_plane_specs(&build_icosphere(b).unwrap(), b + 3)
            .unwrap()
            .len();
        ok &= n == 20 * 4usize.pow(b);
        counts.push(n);
    }
    Outcome::new(ok, format!("dims 32/128/512 checked, counts {counts:?}"))
}

pub fn surface_area() -> Outcome {
    let ratios: Vec<f64> = (0..=7)
        .map(|b| build_icosphere(b).unwrap().surface_area_ratio())
        .collect();
    let closed = icosahedron_area_ratio();
    let base_ok = (ratios[0] - closed).abs() <= 1e-3 && (ratios[0] - 0.7619).abs() <= 1e-3;
    let increasing = ratios.windows(2).all(|w| w[1] > w[0]);
    let shrink: Vec<f64> = (0..=6)
        .map(|b| (1.0 - ratios[b]) / (1.0 - ratios[b + 1]))
        .collect();
    let shrink_ok = shrink.iter().all(|s| (3.5..=4.5).contains(s));
    let level3 = ratios[3] >= 0.995;
    Outcome::new(
        base_ok && increasing && shrink_ok && level3,
        format!(
            "ratio(0)={:.6} (closed form {closed:.6}), ratio(3)={:.6}, shrink {:?}",
            ratios[0],
            ratios[3],
            shrink
                .iter()
                .map(|s| (s * 1000.0).round() / 1000.0)
                .collect::<Vec<_>>()
        ),
    )
}

pub fn coverage() -> Outcome {
    let mut rng = rng(11);
    let mut violations = 0usize;
    let mut worst = 0f64;
    let mut total = 0usize;
    for b in 0..=2u32 {
        let sphere = build_icosphere(b).unwrap();
        let specs = make_plane_specs(&sphere, b + 4).unwrap();
        for (f, spec) in specs.iter().enumerate() {
            let [va, vb, vc] = sphere.face_vertices(f);
            let center = normalized_barycenter(&sphere, f);
            if angle(&center, &spec.center.to_vec()) > 1e-12 {
                violations += 1;
            }
            let cap = [va, vb, vc]
                .iter()
                .map(|v| angle(&center, v))
                .fold(0.0, f64::max);
            let (lat0, lon0) = to_lat_lon(&center);
            let mut kept = 0;
            while kept < 500 {
                let p = random_in_cap(&mut rng, &center, cap);
                if !in_spherical_triangle(&va, &vb, &vc, &p, 0.0) {
                    continue;
                }
                kept += 1;
                let (lat, lon) = to_lat_lon(&p);
                let (x, y) = trig_forward(lat0, lon0, lat, lon).unwrap();
                let reach = x.abs().max(y.abs()) / spec.half_extent;
                worst = worst.max(reach);
                if reach > 1.0 {
                    violations += 1;
                }
            }
            total += kept;
        }
    }
    Outcome::new(
        violations == 0,
        format!("{total} points, {violations} violations, max |coord|/half_extent = {worst:.4}"),
    )
}

pub fn gnomonic_round_trip() -> Outcome {
    let mut rng = rng(5);
    let pairs: Vec<(SphericalCoord, SphericalCoord)> = (0..1000)
        .map(|_| {
            let c = random_unit(&mut rng);
            let p = random_in_cap(&mut rng, &c, 60f64.to_radians());
            (SphericalCoord::from_vec(&c), SphericalCoord::from_vec(&p))
        })
        .collect();
    let (errors, elapsed) = timed(|| {
        pairs
            .iter()
            .map(|(c, p)| {
                let xy = gnomonic_forward(c, p).unwrap();
                gnomonic_inverse(c, xy)
                    .to_vec()
                    .cross(&p.to_vec())
                    .norm()
                    .asin()
            })
            .collect::<Vec<f64>>()
    });
    let worst = errors.iter().cloned().fold(0.0, f64::max);
    let oracle_gap = pairs
        .iter()
        .map(|(c, p)| {
            let (x, y) = gnomonic_forward(c, p).unwrap();
            let (ox, oy) = trig_forward(c.lat, c.lon, p.lat, p.lon).unwrap();
            (x - ox).abs().max((y - oy).abs())
        })
        .fold(0.0, f64::max);
    Outcome::new(
        worst < 1e-10 && oracle_gap < 1e-9 && elapsed < Duration::from_secs(1),
        format!(
            "max error {worst:.2e} rad, max gap to trig formulas {oracle_gap:.2e}, {:.1} ms",
            elapsed.as_secs_f64() * 1e3
        ),
    )
}

pub fn smooth_panorama(height: usize) -> EquirectImage {
    EquirectImage::from_fn(height, 3, ChannelSemantics::default(), |c, px| {
        px.copy_from_slice(&smooth_color(&c.to_vec()));
    })
    .unwrap()
}

pub fn resampling_round_trip() -> Outcome {
    let img = smooth_panorama(512);
    let (back, elapsed) = timed(|| {
        let set = to_tangent(&img, 1, Interp::Bilinear).unwrap();
        from_tangent(&set, 512).unwrap()
    });
    let sphere = build_icosphere(1).unwrap();
    let oracle = oracle_round_trip(img.samples(), 512, 3, &sphere, 8, icosahedron_edge_angle());
    let lib_psnr = psnr(img.samples(), back.samples(), 1.0);
    let oracle_psnr = psnr(img.samples(), &oracle, 1.0);
    let agreement = psnr(&oracle, back.samples(), 1.0);
    Outcome::new(
        lib_psnr >= 30.0 && oracle_psnr >= 30.0 && agreement >= 60.0 && elapsed < Duration::from_secs(10),
        format!(
            "PSNR {lib_psnr:.2} dB (oracle {oracle_psnr:.2} dB, library vs oracle {agreement:.1} dB), round trip {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

pub fn source_cameras() -> Vec<CameraIntrinsics> {
    let cam = |w, h, fx, fy, cx, cy| CameraIntrinsics {
        fx,
        fy,
        cx,
        cy,
        width: w,
        height: h,
    };
    vec![
        cam(640, 480, 500.0, 500.0, 320.0, 240.0),
        cam(640, 480, 450.0, 455.0, 310.5, 250.25),
        cam(1280, 720, 850.0, 850.0, 640.0, 360.0),
        cam(760, 1280, 800.0, 790.0, 370.0, 660.0),
    ]
}

pub fn camera_normalization() -> Outcome {
    let target = make_target(8, 45f64.to_radians()).unwrap();
    let cam = target.camera();
    let f = 128.0 / (2.0 * 22.5f64.to_radians().tan());
    let worked = target.out_dim == 128
        && (cam.width, cam.height) == (128, 128)
        && (cam.fx - f).abs() <= 1e-6 * f
        && (cam.fy - f).abs() <= 1e-6 * f;
    let cams = source_cameras();
    let mut outside = 0;
    for seed in 0..10_000u64 {
        let src = &cams[seed as usize % cams.len()];
        let shift = sample_shift(src, &target, seed).unwrap();
        let map = normalize_camera(src, &target, shift).unwrap();
        let tol = 1e-9 * src.width.max(src.height) as f64;
        let fits = |fs: f64, c: f64, size: usize, cs: f64, d: f64| {
            let lo = fs / cam.fx * (0.0 - cs) + c + d;
            let hi = fs / cam.fx * (128.0 - cs) + c + d;
            lo >= -tol && hi <= size as f64 + tol
        };
        let ok = fits(src.fx, src.cx, src.width, cam.cx, shift.0)
            && fits(src.fy, src.cy, src.height, cam.cy, shift.1)
            && map.footprint_inside(src, tol);
        if !ok {
            outside += 1;
        }
    }
    Outcome::new(
        worked && outside == 0,
        format!(
            "W'=H'={}, f'={:.6} (expected {f:.6}); {outside} of 10000 footprints outside",
            target.out_dim, cam.fx
        ),
    )
}

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/keypoints")
}

pub const TABLE: [(&str, [f64; 3]); 8] = [
    ("hard_equirect", [22.2, 8.2, 36.9]),
    ("hard_l0", [28.4, 11.1, 39.5]),
    ("hard_l1", [30.1, 11.7, 39.6]),
    ("hard_l2", [27.4, 10.9, 40.2]),
    ("easy_equirect", [26.3, 13.6, 46.0]),
    ("easy_l0", [32.4, 16.6, 46.4]),
    ("easy_l1", [34.6, 17.7, 47.5]),
    ("easy_l2", [31.9, 16.1, 46.5]),
];

pub fn metric_table() -> Outcome {
    let mut worst = 0f64;
    let mut rows = Vec::new();
    for (name, expected) in TABLE {
        let text = fs::read_to_string(fixture_dir().join(format!("{name}.json"))).unwrap();
        let stats: Vec<MatchStats> = serde_json::from_str(&text).unwrap();
        let m = matching_metrics(&stats).unwrap();
        let got = [100.0 * m.pmr, 100.0 * m.ms, 100.0 * m.precision];
        for (g, e) in got.iter().zip(expected) {
            worst = worst.max((g - e).abs());
        }
        rows.push(format!(
            "{name} ({:.1}, {:.1}, {:.1})",
            got[0], got[1], got[2]
        ));
    }
    Outcome::new(
        worst <= 0.5,
        format!("max deviation {worst:.3} points; {}", rows.join(", ")),
    )
}

pub fn fov_overlap_suite() -> Outcome {
    let scene = two_box_scene();
    let pa = pose(
        Rotation3::from_euler_angles(0.0, 0.0, 0.3).into_inner(),
        V3::new(-2.0, 0.3, 0.1),
    );
    let pb = pose(
        Rotation3::from_euler_angles(0.1, -0.05, -1.2).into_inner(),
        V3::new(2.2, -0.5, -0.2),
    );
    let h = 512;
    let a = scene.render(&pa, h);
    let identity = fov_overlap(&a, &a).unwrap();

    let dome = Scene {
        shapes: vec![Shape::Dome {
            center: V3::new(0.5, -0.25, 1.0),
            radius: 3.0,
        }],
    };
    let r1 = pose(
        Rotation3::from_euler_angles(0.2, 0.4, 1.1).into_inner(),
        V3::new(0.5, -0.25, 1.0),
    );
    let r2 = pose(
        Rotation3::from_euler_angles(-0.7, 0.1, 2.5).into_inner(),
        V3::new(0.5, -0.25, 1.0),
    );
    let rotated = fov_overlap(&dome.render(&r1, 128), &dome.render(&r2, 128)).unwrap();

    let b = scene.render(&pb, h);
    let measured = fov_overlap(&a, &b).unwrap();
    let oracle = 0.5 * (scene.visible_fraction(&pa, &pb, h) + scene.visible_fraction(&pb, &pa, h));
    Outcome::new(
        identity == 1.0 && (rotated - 1.0).abs() <= 1e-6 && (measured - oracle).abs() <= 1e-3,
        format!(
            "identity {identity}, rotation {rotated}, two-box {measured:.5} vs ray-cast {oracle:.5}"
        ),
    )
}

pub fn fov_trend() -> Outcome {
    let fovs: Vec<f64> = (0..=4u32)
        .map(|b| {
            let specs = make_plane_specs(&build_icosphere(b).unwrap(), 10).unwrap();
            let sum: f64 = specs.iter().map(|s| s.axis_fov()).sum();
            (sum / specs.len() as f64).to_degrees()
        })
        .collect();
    let ratios: Vec<f64> = fovs.windows(2).map(|w| w[1] / w[0]).collect();
    let ok =
        fovs.windows(2).all(|w| w[1] < w[0]) && ratios.iter().all(|r| (0.4..=0.65).contains(r));
    Outcome::new(
        ok,
        format!(
            "FOV {:?} deg (reference 73.1, 51.6, 31.5, 16.7, 8.4), ratios {:?}",
            fovs.iter()
                .map(|v| (v * 10.0).round() / 10.0)
                .collect::<Vec<_>>(),
            ratios
                .iter()
                .map(|v| (v * 1000.0).round() / 1000.0)
                .collect::<Vec<_>>()
        ),
    )
}

pub fn tangent_bin() -> &'static str {
    env!("CARGO_BIN_EXE_tangent")
}

/// Runs the CLI, returning `(exit code, stdout, stderr)`.
pub fn run_cli(args: &[&str], threads: Option<usize>) -> (i32, String, String) {
    let mut cmd = Command::new(tangent_bin());
    cmd.env_remove("TANGENT_THREADS");
    if let Some(n) = threads {
        cmd.arg("--threads").arg(n.to_string());
    }
    let out = cmd.args(args).output().expect("tangent binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

/// Writes a set of small CLI inputs into `dir`.
pub fn write_cli_inputs(dir: &Path) {
    use tangent_core::features::keypoints::format_keypoint_lines;
    use tangent_core::features::Keypoint;
    use tangent_core::imageio::{save_equirect, save_raster, ChannelKind, Raster};

    save_equirect(
        &smooth_panorama(128),
        &dir.join("pano.png"),
        &ChannelSemantics::default(),
    )
    .unwrap();

    let depth_sem = ChannelSemantics::new(ChannelKind::Depth16);
    let scene = two_box_scene();
    let poses = [
        pose(
            Rotation3::from_euler_angles(0.0, 0.0, 0.3).into_inner(),
            V3::new(-2.0, 0.3, 0.1),
        ),
        pose(
            Rotation3::from_euler_angles(0.1, -0.05, -1.2).into_inner(),
            V3::new(2.2, -0.5, -0.2),
        ),
    ];
    for (name, p) in ["a", "b"].iter().zip(&poses) {
        let posed = scene.render(p, 64);
        save_equirect(
            &posed.depth,
            &dir.join(format!("depth_{name}.png")),
            &depth_sem,
        )
        .unwrap();
        let m = p.rotation;
        let record = serde_json::json!({
            "rotation": [[m[(0, 0)], m[(0, 1)], m[(0, 2)]], [m[(1, 0)], m[(1, 1)], m[(1, 2)]], [m[(2, 0)], m[(2, 1)], m[(2, 2)]]],
            "translation": [p.translation.x, p.translation.y, p.translation.z],
        });
        fs::write(dir.join(format!("pose_{name}.json")), record.to_string()).unwrap();
    }

    let cam = &source_cameras()[0];
    fs::write(
        dir.join("intrinsics.json"),
        serde_json::to_string(cam).unwrap(),
    )
    .unwrap();
    let mut samples = vec![0f32; cam.width * cam.height * 3];
    for (i, px) in samples.chunks_exact_mut(3).enumerate() {
        let (r, c) = ((i / cam.width) as f64, (i % cam.width) as f64);
        px[0] = (0.5 + 0.4 * (c / 37.0).sin()) as f32;
        px[1] = (0.5 + 0.4 * (r / 23.0).cos()) as f32;
        px[2] = ((r + c) / (cam.width + cam.height) as f64) as f32;
    }
    let raster = Raster {
        height: cam.height,
        width: cam.width,
        channels: 3,
        samples,
    };
    save_raster(
        &dir.join("photo.png"),
        &raster,
        &ChannelSemantics::default(),
    )
    .unwrap();

    let mut rng = rng(3);
    let kps: Vec<Keypoint> = (0..400)
        .map(|_| {
            let mut k = Keypoint::on_face(
                rng.gen_range(0..80),
                rng.gen_range(-0.5..31.5),
                rng.gen_range(-0.5..31.5),
            );
            k.scale = rng.gen_range(1.0..4.0);
            k.orientation = rng.gen_range(-PI..PI);
            k.descriptor = (0..16).map(|_| rng.gen()).collect();
            k
        })
        .collect();
    fs::write(dir.join("keypoints.jsonl"), format_keypoint_lines(&kps)).unwrap();
}

/// Every CLI command's primary outputs, produced with the given thread count.
pub fn cli_outputs(
    inputs: &Path,
    out: &Path,
    threads: usize,
) -> Result<Vec<(String, Vec<u8>)>, String> {
    let p = |name: &str| inputs.join(name).display().to_string();
    let o = |name: &str| out.join(name).display().to_string();
    let fixture = fixture_dir().join("hard_l1.json").display().to_string();
    let runs: Vec<(&str, Vec<String>)> = vec![
        (
            "icosphere",
            vec![
                "icosphere".into(),
                "info".into(),
                "--level".into(),
                "4".into(),
            ],
        ),
        (
            "to-tangent",
            vec![
                "to-tangent".into(),
                "--input".into(),
                p("pano.png"),
                "--base-level".into(),
                "1".into(),
                "--out".into(),
                o("faces"),
            ],
        ),
        (
            "from-tangent",
            vec![
                "from-tangent".into(),
                "--in".into(),
                o("faces"),
                "--height".into(),
                "128".into(),
                "--out".into(),
                o("back.png"),
            ],
        ),
        (
            "camnorm",
            vec![
                "camnorm".into(),
                "--level".into(),
                "8".into(),
                "--fov-deg".into(),
                "45".into(),
                "--seed".into(),
                "17".into(),
                "--intrinsics".into(),
                p("intrinsics.json"),
                "--image".into(),
                p("photo.png"),
                "--out".into(),
                o("norm.png"),
                "--out-meta".into(),
                o("norm.json"),
            ],
        ),
        (
            "kp to-sphere",
            vec![
                "kp".into(),
                "to-sphere".into(),
                "--input".into(),
                p("keypoints.jsonl"),
                "--tangent".into(),
                o("faces"),
                "--out".into(),
                o("sphere.jsonl"),
            ],
        ),
        (
            "kp fov-overlap",
            vec![
                "kp".into(),
                "fov-overlap".into(),
                "--depth-a".into(),
                p("depth_a.png"),
                "--pose-a".into(),
                p("pose_a.json"),
                "--depth-b".into(),
                p("depth_b.png"),
                "--pose-b".into(),
                p("pose_b.json"),
                "--keypoints-a".into(),
                o("sphere.jsonl"),
            ],
        ),
        (
            "kp metrics",
            vec!["kp".into(), "metrics".into(), "--stats".into(), fixture],
        ),
    ];
    let mut outputs = Vec::new();
    for (name, args) in runs {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let (code, stdout, stderr) = run_cli(&args, Some(threads));
        if code != 0 {
            return Err(format!("{name} exited {code}: {stderr}"));
        }
        outputs.push((format!("{name} stdout"), stdout.into_bytes()));
    }
    let mut files: Vec<PathBuf> = fs::read_dir(out.join("faces"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.json")
        .collect();
    files.sort();
    files.extend(["back.png", "norm.png", "norm.json", "sphere.jsonl"].map(|n| out.join(n)));
    for f in files {
        let name = f.strip_prefix(out).unwrap().display().to_string();
        outputs.push((name, fs::read(&f).unwrap()));
    }
    Ok(outputs)
}

pub fn cli_determinism() -> Outcome {
    let inputs = tempfile::tempdir().unwrap();
    write_cli_inputs(inputs.path());
    let one = tempfile::tempdir().unwrap();
    let eight = tempfile::tempdir().unwrap();
    let (a, b) = match (
        cli_outputs(inputs.path(), one.path(), 1),
        cli_outputs(inputs.path(), eight.path(), 8),
    ) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return Outcome::new(false, e),
    };
    let differing: Vec<&str> = a
        .iter()
        .zip(&b)
        .filter(|(x, y)| x != y)
        .map(|(x, _)| x.0.as_str())
        .collect();
    Outcome::new(
        a.len() == b.len() && differing.is_empty(),
        format!(
            "{} outputs compared across 1 and 8 threads, differing: {differing:?}",
            a.len()
        ),
    )
}
