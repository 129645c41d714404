#![allow(dead_code)]

pub mod criteria;

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tangent_core::icosphere::Icosphere;

pub type V3 = Vector3<f64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_unit(rng: &mut impl Rng) -> V3 {
    loop {
        let v = V3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

pub fn random_in_cap(rng: &mut impl Rng, center: &V3, max_angle: f64) -> V3 {
    let cos_max = max_angle.cos();
    loop {
        let v = random_unit(rng);
        if v.dot(center) >= cos_max {
            return v;
        }
    }
}

pub fn to_lat_lon(v: &V3) -> (f64, f64) {
    (v.z.clamp(-1.0, 1.0).asin(), v.y.atan2(v.x))
}

pub fn from_lat_lon(lat: f64, lon: f64) -> V3 {
    V3::new(lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin())
}

pub fn angle(a: &V3, b: &V3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Textbook gnomonic forward projection in trigonometric form.
pub fn trig_forward(lat0: f64, lon0: f64, lat: f64, lon: f64) -> Option<(f64, f64)> {
    let dl = lon - lon0;
    let cos_c = lat0.sin() * lat.sin() + lat0.cos() * lat.cos() * dl.cos();
    if cos_c <= 0.0 {
        return None;
    }
    let x = lat.cos() * dl.sin() / cos_c;
    let y = (lat0.cos() * lat.sin() - lat0.sin() * lat.cos() * dl.cos()) / cos_c;
    Some((x, y))
}

/// Textbook gnomonic inverse projection in trigonometric form.
pub fn trig_inverse(lat0: f64, lon0: f64, x: f64, y: f64) -> (f64, f64) {
    let rho = x.hypot(y);
    if rho == 0.0 {
        return (lat0, lon0);
    }
    let c = rho.atan();
    let lat = (c.cos() * lat0.sin() + y * c.sin() * lat0.cos() / rho).asin();
    let lon = lon0 + (x * c.sin()).atan2(rho * lat0.cos() * c.cos() - y * lat0.sin() * c.sin());
    (lat, lon)
}

/// Whether `p` lies in the spherical triangle `abc` (counter-clockwise seen
/// from outside), allowing `eps` slack across each edge.
pub fn in_spherical_triangle(a: &V3, b: &V3, c: &V3, p: &V3, eps: f64) -> bool {
    a.cross(b).dot(p) >= -eps && b.cross(c).dot(p) >= -eps && c.cross(a).dot(p) >= -eps
}

pub fn containing_faces(sphere: &Icosphere, p: &V3, eps: f64) -> Vec<usize> {
    (0..sphere.face_count())
        .filter(|&f| {
            let [a, b, c] = sphere.face_vertices(f);
            in_spherical_triangle(&a, &b, &c, p, eps)
        })
        .collect()
}

/// Lowest-index face containing `p`.
pub fn brute_owner(sphere: &Icosphere, p: &V3) -> usize {
    (0..sphere.face_count())
        .find(|&f| {
            let [a, b, c] = sphere.face_vertices(f);
            in_spherical_triangle(&a, &b, &c, p, 1e-12)
        })
        .expect("every direction lies in some face")
}

pub fn normalized_barycenter(sphere: &Icosphere, f: usize) -> V3 {
    let [a, b, c] = sphere.face_vertices(f);
    (a + b + c).normalize()
}

/// Total area of the 20 planar faces of the unit-circumradius icosahedron over 4π.
pub fn icosahedron_area_ratio() -> f64 {
    let edge = 1.0 / (2.0 * PI / 5.0).sin();
    5.0 * 3f64.sqrt() * edge * edge / (4.0 * PI)
}

/// Angle between adjacent vertices of the regular icosahedron.
pub fn icosahedron_edge_angle() -> f64 {
    (1.0 / 5f64.sqrt()).acos()
}

/// Real part of `(a + ib)^n`, a degree-`n` harmonic polynomial.
fn harmonic(a: f64, b: f64, n: i32) -> f64 {
    a.hypot(b).powi(n) * (n as f64 * b.atan2(a)).cos()
}

/// Band-limited RGB test panorama: polynomials of the direction up to degree 48, in [0.05, 0.95].
pub fn smooth_color(v: &V3) -> [f32; 3] {
    let (x, y, z) = (v.x, v.y, v.z);
    let r = 0.5 + 0.15 * x * y + 0.1 * z * z * z + 0.15 * harmonic(x, y, 8);
    let g = 0.5 + 0.15 * (x * x - y * y) * z + 0.25 * harmonic(x, z, 24);
    let b = 0.5 + 0.1 * x * z + 0.3 * harmonic(y, z, 48);
    [r as f32, g as f32, b as f32]
}

pub fn equirect_center(row: usize, col: usize, h: usize) -> (f64, f64) {
    let w = 2 * h;
    let lat = PI * (0.5 - (row as f64 + 0.5) / h as f64);
    let lon = 2.0 * PI * ((col as f64 + 0.5) / w as f64 - 0.5);
    (lat, lon)
}

/// Bilinear lookup at continuous `(row, col)`; columns wrap when `wrap`, otherwise clamp.
pub fn bilinear(
    data: &[f32],
    h: usize,
    w: usize,
    ch: usize,
    row: f64,
    col: f64,
    wrap: bool,
    out: &mut [f32],
) {
    let r = row.clamp(0.0, (h - 1) as f64);
    let r0 = r.floor() as usize;
    let r1 = (r0 + 1).min(h - 1);
    let tr = r - r0 as f64;
    let (c0, c1, tc) = if wrap {
        let c = col.rem_euclid(w as f64);
        let c0 = (c.floor() as usize) % w;
        (c0, (c0 + 1) % w, c - c.floor())
    } else {
        let c = col.clamp(0.0, (w - 1) as f64);
        let c0 = c.floor() as usize;
        ((c0), (c0 + 1).min(w - 1), c - c0 as f64)
    };
    for k in 0..ch {
        let at = |rr: usize, cc: usize| data[(rr * w + cc) * ch + k] as f64;
        let top = at(r0, c0) * (1.0 - tc) + at(r0, c1) * tc;
        let bot = at(r1, c0) * (1.0 - tc) + at(r1, c1) * tc;
        out[k] = (top * (1.0 - tr) + bot * tr) as f32;
    }
}

pub fn equirect_row_col(lat: f64, lon: f64, h: usize) -> (f64, f64) {
    let w = 2 * h;
    let row = (FRAC_PI_2 - lat) / PI * h as f64 - 0.5;
    let col = (lon + PI) / (2.0 * PI) * w as f64 - 0.5;
    (row, col)
}

pub fn psnr(a: &[f32], b: &[f32], peak: f64) -> f64 {
    let mse = a
        .iter()
        .zip(b)
        .map(|(x, y)| (*x as f64 - *y as f64).powi(2))
        .sum::<f64>()
        / a.len() as f64;
    10.0 * (peak * peak / mse).log10()
}

/// Brute-force tangent-image round trip built from the trig formulas above:
/// render each face by inverse projection and bilinear lookup, then render back
/// by assigning every output pixel to the first face containing it.
///
/// `rv_prev` is the vertex resolution of the level below `sphere`.
pub fn oracle_round_trip(
    img: &[f32],
    h: usize,
    ch: usize,
    sphere: &Icosphere,
    source_level: u32,
    rv_prev: f64,
) -> Vec<f32> {
    let b = sphere.level();
    let d = 1usize << (source_level - b);
    let pitch = rv_prev / d as f64;
    let half = (d as f64 - 1.0) / (2.0 * d as f64) * rv_prev;
    let centers: Vec<(f64, f64)> = (0..sphere.face_count())
        .map(|f| to_lat_lon(&normalized_barycenter(sphere, f)))
        .collect();
    let faces: Vec<Vec<f32>> = centers
        .iter()
        .map(|&(lat0, lon0)| {
            let mut face = vec![0f32; d * d * ch];
            for r in 0..d {
                for c in 0..d {
                    let x = -half + c as f64 * pitch;
                    let y = half - r as f64 * pitch;
                    let (lat, lon) = trig_inverse(lat0, lon0, x, y);
                    let (row, col) = equirect_row_col(lat, lon, h);
                    let px = &mut face[(r * d + c) * ch..(r * d + c + 1) * ch];
                    bilinear(img, h, 2 * h, ch, row, col, true, px);
                }
            }
            face
        })
        .collect();
    let w = 2 * h;
    let mut out = vec![0f32; h * w * ch];
    for r in 0..h {
        for c in 0..w {
            let (lat, lon) = equirect_center(r, c, h);
            let f = brute_owner(sphere, &from_lat_lon(lat, lon));
            let (lat0, lon0) = centers[f];
            let (x, y) = trig_forward(lat0, lon0, lat, lon).expect("owned pixel is in front");
            let col = (x + half) / pitch;
            let row = (half - y) / pitch;
            let px = &mut out[(r * w + c) * ch..(r * w + c + 1) * ch];
            bilinear(&faces[f], d, d, ch, row, col, false, px);
        }
    }
    out
}
