use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure category; drives process exit codes and FFI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorKind {
    InvalidArgument,
    Format,
    Io,
    ResourceLimit,
    Validation,
    Internal,
}

impl ErrorKind {
    /// Process exit status used by the CLI.
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::InvalidArgument => 2,
            ErrorKind::Format => 3,
            ErrorKind::Io => 4,
            ErrorKind::ResourceLimit => 5,
            ErrorKind::Validation => 6,
            ErrorKind::Internal => 70,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("subdivision level {level} exceeds the configured limit of {limit}")]
    LevelTooHigh { level: u32, limit: u32 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("source level {source_level} is below base level {base_level}")]
    SourceBelowBase { source_level: u32, base_level: u32 },

    #[error("direction is not a unit vector (norm {norm})")]
    NonUnitDirection { norm: f64 },

    #[error("point lies {angle_deg:.6} degrees from the projection center, outside the front hemisphere")]
    OutOfHemisphere { angle_deg: f64 },

    #[error("image is {width}x{height}; equirectangular input needs width == 2 * height")]
    Aspect { width: usize, height: usize },

    #[error("equirectangular height {0} is not a power of two >= 2")]
    HeightNotPowerOfTwo(usize),

    #[error("unsupported pixel layout in {path}: {detail}")]
    BitDepth { path: PathBuf, detail: String },

    #[error("malformed data in {path}: {detail}")]
    Format { path: PathBuf, detail: String },

    #[error("missing file {0}")]
    MissingFile(PathBuf),

    #[error("cannot read {path}: {detail}")]
    Read { path: PathBuf, detail: String },

    #[error("cannot write {path}: {detail}")]
    Write { path: PathBuf, detail: String },

    #[error("sample value {value} cannot be encoded as {kind}")]
    Unencodable { value: f64, kind: &'static str },

    #[error("face index {index} out of range for {count} faces")]
    FaceIndex { index: usize, count: usize },

    #[error("output pixel ({row}, {col}) maps to plane ({x:.6}, {y:.6}) outside the grid of face {face}")]
    CoverageViolation {
        row: usize,
        col: usize,
        face: usize,
        x: f64,
        y: f64,
    },

    #[error("principal-point shift {axis}={value} outside legal interval [{lo}, {hi}]")]
    ShiftOutOfRange {
        axis: char,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("source camera too narrow on axis {axis}: legal shift interval [{lo}, {hi}] is empty")]
    SourceTooNarrow { axis: char, lo: f64, hi: f64 },

    #[error("invalid match statistics for pair {pair_id}: {detail}")]
    InvalidEntry { pair_id: String, detail: String },

    #[error("FOV overlap undefined: {0}")]
    UndefinedOverlap(String),

    #[error("{0}")]
    Validation(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            LevelTooHigh { .. } => ErrorKind::ResourceLimit,
            InvalidArgument(_) | SourceBelowBase { .. } | HeightNotPowerOfTwo(_) => {
                ErrorKind::InvalidArgument
            }
            ShiftOutOfRange { .. } | SourceTooNarrow { .. } => ErrorKind::InvalidArgument,
            Aspect { .. } | BitDepth { .. } | Format { .. } | MissingFile(_) => ErrorKind::Format,
            Read { .. } | Write { .. } => ErrorKind::Io,
            CoverageViolation { .. } => ErrorKind::Internal,
            NonUnitDirection { .. }
            | OutOfHemisphere { .. }
            | Unencodable { .. }
            | FaceIndex { .. }
            | InvalidEntry { .. }
            | UndefinedOverlap(_)
            | Validation(_) => ErrorKind::Validation,
        }
    }

    /// Stable machine-readable identifier.
    pub fn code(&self) -> &'static str {
        use Error::*;
        match self {
            LevelTooHigh { .. } => "resource.level_limit",
            InvalidArgument(_) => "argument.invalid",
            SourceBelowBase { .. } => "argument.source_below_base",
            HeightNotPowerOfTwo(_) => "argument.height",
            NonUnitDirection { .. } => "validation.non_unit",
            OutOfHemisphere { .. } => "geometry.out_of_hemisphere",
            Aspect { .. } => "format.aspect",
            BitDepth { .. } => "format.bit_depth",
            Format { .. } => "format.malformed",
            MissingFile(_) => "format.missing_file",
            Read { .. } => "io.read",
            Write { .. } => "io.write",
            Unencodable { .. } => "range.unencodable",
            FaceIndex { .. } => "validation.face_index",
            CoverageViolation { .. } => "internal.coverage",
            ShiftOutOfRange { .. } => "argument.shift_range",
            SourceTooNarrow { .. } => "camnorm.source_too_narrow",
            InvalidEntry { .. } => "metrics.invalid_entry",
            UndefinedOverlap(_) => "overlap.undefined",
            Validation(_) => "validation.invalid",
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
