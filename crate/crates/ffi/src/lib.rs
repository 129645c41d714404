//! C interface to `tangent-core`.
//!
//! Every fallible function returns a [`TangentStatus`]; on failure the stable
//! error code and message of the last error on the calling thread are available
//! through [`tangent_last_error_code`] and [`tangent_last_error_message`].
//! Objects are opaque handles released with their matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tangent_core::camnorm::make_target;
use tangent_core::error::{Error, ErrorKind};
use tangent_core::features::metrics::PairId;
use tangent_core::features::{matching_metrics, MatchStats};
use tangent_core::gnomonic::{self, gnomonic_forward, SphericalCoord};
use tangent_core::icosphere::{build_icosphere, FaceLocator, Icosphere, Vec3};
use tangent_core::imageio::{ChannelKind, ChannelSemantics};
use tangent_core::raster::{EquirectImage, Interp};
use tangent_core::resample::{from_tangent, to_tangent, TangentImageSet};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TangentStatus {
    Ok = 0,
    InvalidArgument = 1,
    Format = 2,
    Io = 3,
    ResourceLimit = 4,
    Validation = 5,
    Internal = 6,
    NullPointer = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TangentChannelKind {
    Color8 = 0,
    Color16 = 1,
    Label8 = 2,
    Depth16 = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TangentInterp {
    Bilinear = 0,
    Nearest = 1,
}

/// Opaque icosphere handle.
pub struct TangentIcosphere {
    sphere: Icosphere,
    locator: FaceLocator,
}

/// Opaque tangent-image set handle.
pub struct TangentSet {
    set: TangentImageSet,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TangentSetInfo {
    pub face_count: usize,
    pub dim: usize,
    pub channels: usize,
    pub base_level: u32,
    pub source_level: u32,
}

/// Tangent plane of one face; angles in radians.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TangentPlane {
    pub center_lat: f64,
    pub center_lon: f64,
    pub half_extent: f64,
    pub pitch: f64,
    pub dim: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TangentCamnormTarget {
    pub alpha: f64,
    pub fov: f64,
    pub focal: f64,
    pub out_dim: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TangentMatchStats {
    pub p: u64,
    pub f: u64,
    pub n_left: u64,
    pub n_right: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TangentMatchingMetrics {
    pub pmr: f64,
    pub ms: f64,
    pub precision: f64,
}

struct LastError {
    code: CString,
    message: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<LastError>> = const { RefCell::new(None) };
}

fn set_last_error(code: &str, message: &str) {
    let clean = |s: &str| CString::new(s.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = Some(LastError {
            code: clean(code),
            message: clean(message),
        })
    });
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

fn status_of(e: &Error) -> TangentStatus {
    match e.kind() {
        ErrorKind::InvalidArgument => TangentStatus::InvalidArgument,
        ErrorKind::Format => TangentStatus::Format,
        ErrorKind::Io => TangentStatus::Io,
        ErrorKind::ResourceLimit => TangentStatus::ResourceLimit,
        ErrorKind::Validation => TangentStatus::Validation,
        ErrorKind::Internal => TangentStatus::Internal,
    }
}

enum Failure {
    Core(Error),
    Null(&'static str),
    Buffer { needed: usize, given: usize },
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TangentStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TangentStatus::Ok,
        Ok(Err(Failure::Core(e))) => {
            set_last_error(e.code(), &e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Null(name))) => {
            set_last_error("argument.null", &format!("{name} is null"));
            TangentStatus::NullPointer
        }
        Ok(Err(Failure::Buffer { needed, given })) => {
            set_last_error(
                "argument.buffer",
                &format!("buffer holds {given} values, {needed} needed"),
            );
            TangentStatus::BufferTooSmall
        }
        Err(_) => {
            set_last_error("internal.panic", "panic inside tangent-core");
            TangentStatus::Panic
        }
    }
}

unsafe fn out_ref<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(name))
}

unsafe fn in_ref<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(name))
}

fn semantics_of(kind: TangentChannelKind) -> ChannelSemantics {
    ChannelSemantics::new(match kind {
        TangentChannelKind::Color8 => ChannelKind::Color8,
        TangentChannelKind::Color16 => ChannelKind::Color16,
        TangentChannelKind::Label8 => ChannelKind::Label8,
        TangentChannelKind::Depth16 => ChannelKind::Depth16,
    })
}

fn interp_of(i: TangentInterp) -> Interp {
    match i {
        TangentInterp::Bilinear => Interp::Bilinear,
        TangentInterp::Nearest => Interp::Nearest,
    }
}

/// Stable code string of the last error on this thread, or NULL.
/// Valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn tangent_last_error_code() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(ptr::null(), |e| e.code.as_ptr())
    })
}

/// Human-readable message of the last error on this thread, or NULL.
#[no_mangle]
pub extern "C" fn tangent_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(ptr::null(), |e| e.message.as_ptr())
    })
}

/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn tangent_icosphere_new(
    level: u32,
    out: *mut *mut TangentIcosphere,
) -> TangentStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let sphere = build_icosphere(level)?;
        let locator = FaceLocator::new(&sphere);
        *out = Box::into_raw(Box::new(TangentIcosphere { sphere, locator }));
        Ok(())
    })
}

/// # Safety
/// `handle` must be NULL or a pointer from [`tangent_icosphere_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tangent_icosphere_free(handle: *mut TangentIcosphere) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// # Safety
/// `handle` must be a live icosphere handle; each output pointer may be NULL.
#[no_mangle]
pub unsafe extern "C" fn tangent_icosphere_counts(
    handle: *const TangentIcosphere,
    vertices: *mut usize,
    faces: *mut usize,
    edges: *mut usize,
) -> TangentStatus {
    guard(|| {
        let s = &in_ref(handle, "handle")?.sphere;
        if let Some(v) = vertices.as_mut() {
            *v = s.vertex_count();
        }
        if let Some(f) = faces.as_mut() {
            *f = s.face_count();
        }
        if let Some(e) = edges.as_mut() {
            *e = s.edge_count();
        }
        Ok(())
    })
}

/// Mean angular distance between adjacent vertices, radians.
///
/// # Safety
/// `handle` must be a live icosphere handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tangent_icosphere_vertex_resolution(
    handle: *const TangentIcosphere,
    out: *mut f64,
) -> TangentStatus {
    guard(|| {
        *out_ref(out, "out")? = in_ref(handle, "handle")?.sphere.vertex_resolution();
        Ok(())
    })
}

/// # Safety
/// `handle` must be a live icosphere handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tangent_icosphere_surface_area_ratio(
    handle: *const TangentIcosphere,
    out: *mut f64,
) -> TangentStatus {
    guard(|| {
        *out_ref(out, "out")? = in_ref(handle, "handle")?.sphere.surface_area_ratio();
        Ok(())
    })
}

/// Face owning the unit direction `(x, y, z)`.
///
/// # Safety
/// `handle` must be a live icosphere handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tangent_icosphere_owning_face(
    handle: *const TangentIcosphere,
    x: f64,
    y: f64,
    z: f64,
    out: *mut usize,
) -> TangentStatus {
    guard(|| {
        let h = in_ref(handle, "handle")?;
        *out_ref(out, "out")? = h.locator.owning_face(&Vec3::new(x, y, z))?;
        Ok(())
    })
}

/// Side length of the tangent images for source level `s` and base level `b`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tangent_dim(
    source_level: u32,
    base_level: u32,
    out: *mut usize,
) -> TangentStatus {
    guard(|| {
        *out_ref(out, "out")? = gnomonic::tangent_dim(source_level, base_level)?;
        Ok(())
    })
}

/// Plane coordinates of `(lat, lon)` on the plane tangent at `(center_lat, center_lon)`.
///
/// # Safety
/// `x` and `y` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tangent_gnomonic_forward(
    center_lat: f64,
    center_lon: f64,
    lat: f64,
    lon: f64,
    x: *mut f64,
    y: *mut f64,
) -> TangentStatus {
    guard(|| {
        let x = out_ref(x, "x")?;
        let y = out_ref(y, "y")?;
        let c = SphericalCoord::new(center_lat, center_lon)?;
        let p = SphericalCoord::new(lat, lon)?;
        (*x, *y) = gnomonic_forward(&c, &p)?;
        Ok(())
    })
}

/// Renders an interleaved `height x 2*height x channels` float image to tangent planes.
///
/// # Safety
/// `data` must point to `2 * height * height * channels` readable floats and
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tangent_to_tangent(
    data: *const f32,
    height: usize,
    channels: usize,
    kind: TangentChannelKind,
    base_level: u32,
    interp: TangentInterp,
    out: *mut *mut TangentSet,
) -> TangentStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        if data.is_null() {
            return Err(Failure::Null("data"));
        }
        let len = height
            .checked_mul(2 * height)
            .and_then(|n| n.checked_mul(channels))
            .ok_or_else(|| Error::InvalidArgument("image size overflows".into()))?;
        let samples = std::slice::from_raw_parts(data, len).to_vec();
        let img = EquirectImage::new(height, 2 * height, channels, samples, semantics_of(kind))?;
        let set = to_tangent(&img, base_level, interp_of(interp))?;
        *out = Box::into_raw(Box::new(TangentSet { set }));
        Ok(())
    })
}

/// # Safety
/// `handle` must be NULL or a pointer from [`tangent_to_tangent`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tangent_set_free(handle: *mut TangentSet) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// # Safety
/// `handle` must be a live set handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tangent_set_info(
    handle: *const TangentSet,
    out: *mut TangentSetInfo,
) -> TangentStatus {
    guard(|| {
        let set = &in_ref(handle, "handle")?.set;
        *out_ref(out, "out")? = TangentSetInfo {
            face_count: set.len(),
            dim: set.dim(),
            channels: set.channels,
            base_level: set.provenance.base_level,
            source_level: set.provenance.source_level,
        };
        Ok(())
    })
}

/// # Safety
/// `handle` must be a live set handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tangent_set_plane(
    handle: *const TangentSet,
    face: usize,
    out: *mut TangentPlane,
) -> TangentStatus {
    guard(|| {
        let set = &in_ref(handle, "handle")?.set;
        let spec = set.specs.get(face).ok_or(Error::FaceIndex {
            index: face,
            count: set.len(),
        })?;
        *out_ref(out, "out")? = TangentPlane {
            center_lat: spec.center.lat,
            center_lon: spec.center.lon,
            half_extent: spec.half_extent,
            pitch: spec.pitch,
            dim: spec.dim,
        };
        Ok(())
    })
}

/// Copies face `face` (`dim * dim * channels` floats, row-major) into `out`.
///
/// # Safety
/// `handle` must be a live set handle and `out` must hold `len` writable floats.
#[no_mangle]
pub unsafe extern "C" fn tangent_set_face_data(
    handle: *const TangentSet,
    face: usize,
    out: *mut f32,
    len: usize,
) -> TangentStatus {
    guard(|| {
        let set = &in_ref(handle, "handle")?.set;
        let img = set.images.get(face).ok_or(Error::FaceIndex {
            index: face,
            count: set.len(),
        })?;
        copy_out(img, out, len)
    })
}

/// Renders the set back to a `height x 2*height` image written into `out`.
///
/// # Safety
/// `handle` must be a live set handle and `out` must hold `len` writable floats.
#[no_mangle]
pub unsafe extern "C" fn tangent_set_render(
    handle: *const TangentSet,
    height: usize,
    out: *mut f32,
    len: usize,
) -> TangentStatus {
    guard(|| {
        let set = &in_ref(handle, "handle")?.set;
        let img = from_tangent(set, height)?;
        copy_out(img.samples(), out, len)
    })
}

unsafe fn copy_out(src: &[f32], out: *mut f32, len: usize) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null("out"));
    }
    if len < src.len() {
        return Err(Failure::Buffer {
            needed: src.len(),
            given: len,
        });
    }
    ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    Ok(())
}

/// Normalized camera for a level-`s` sphere at field of view `fov` (radians).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tangent_camnorm_target(
    spherical_level: u32,
    fov: f64,
    out: *mut TangentCamnormTarget,
) -> TangentStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let t = make_target(spherical_level, fov)?;
        *out = TangentCamnormTarget {
            alpha: t.alpha,
            fov: t.fov,
            focal: t.camera().fx,
            out_dim: t.out_dim,
        };
        Ok(())
    })
}

/// Aggregates `count` per-pair statistics.
///
/// # Safety
/// `stats` must point to `count` readable records and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tangent_matching_metrics(
    stats: *const TangentMatchStats,
    count: usize,
    out: *mut TangentMatchingMetrics,
) -> TangentStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        if stats.is_null() && count > 0 {
            return Err(Failure::Null("stats"));
        }
        let raw = if count == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(stats, count)
        };
        let list: Vec<MatchStats> = raw
            .iter()
            .enumerate()
            .map(|(i, s)| MatchStats {
                pair_id: PairId::Number(i as u64),
                p: s.p,
                f: s.f,
                n_left: s.n_left,
                n_right: s.n_right,
            })
            .collect();
        let m = matching_metrics(&list)?;
        *out = TangentMatchingMetrics {
            pmr: m.pmr,
            ms: m.ms,
            precision: m.precision,
        };
        Ok(())
    })
}
