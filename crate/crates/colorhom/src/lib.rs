//! Shading-robust color correction via chromaticity homographies.
//!
//! A change of camera, illuminant, or shading acts on linear RGB as a 3×3
//! linear map plus per-surface brightness scalars. In the RGI representation
//! [R, G, R+G+B] the brightness scalars become homogeneous scale, so the
//! induced map on chromaticities is a plain 3×3 homography — fit it and the
//! shading nuisance drops out. This crate provides:
//!
//! - [`colorspace`]: linear RGB ↔ RGI/chromaticity, sRGB ↔ XYZ ↔ CIE Lab, ΔE;
//! - [`homography`]: canonical forms, conjugation-based construction from an
//!   RGB map, and normalized-DLT estimation from point pairs;
//! - [`als`]: alternating least squares for D·A·H ≈ B (shading + map);
//! - [`ransac`]: robust consensus estimation over 4-point samples;
//! - [`correction`]: the end-to-end fit → apply → ΔE evaluation protocol
//!   against plain least-squares correction;
//! - [`io`]: patch CSVs, PPM chart images, seeded synthetic instances;
//! - [`cli`]: the `colorhom` command-line tool.
//!
//! Everything is deterministic: randomness flows from explicit 64-bit seeds
//! through [`rng::Rng`], and emitted floats use shortest round-trip
//! formatting.

// `!(x > y)` guards are intentional: they reject NaN along with the
// out-of-range values, which `x <= y` would silently let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod als;
pub mod cli;
pub mod colorspace;
pub mod correction;
pub mod homography;
pub mod io;
pub mod patch;
pub mod ransac;
pub mod rng;

pub use als::{als_solve, solve_h, solve_shading, AlsConfig, AlsResult};
pub use colorspace::{delta_e, HomogeneousChromaticity, LabColor, LinearRGB};
pub use correction::{
    apply_correction, evaluate, fit_homography, fit_least_squares, quantile, shading_correct,
    ChartMeasurement, CorrectionMatrix, DeltaEStats, EvalReport, Method, MethodTag, Reference,
    Solver,
};
pub use homography::{
    apply, conjugate_construct, estimate_dlt, reprojection_error, Correspondence, ErrorMetric,
    Homography3,
};
pub use patch::PatchSet;
pub use ransac::{ransac_solve, RansacConfig, RansacResult};
pub use rng::Rng;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("black pixel has no chromaticity")]
    BlackPixel,
    #[error("point at infinity")]
    PointAtInfinity,
    #[error("maps to undefined point")]
    UndefinedPoint,
    #[error("rank-deficient linear map")]
    RankDeficient,
    #[error("degenerate configuration")]
    DegenerateConfiguration,
    #[error("no consensus")]
    NoConsensus,
    #[error("no progress")]
    NoProgress,
    #[error("protocol inputs incomplete")]
    ProtocolIncomplete,
    #[error("invalid gray reference")]
    InvalidGray,
    #[error("invalid 8-bit value")]
    Invalid8Bit,
    #[error("inset leaves no pixels")]
    InsetLeavesNoPixels,
    #[error("insufficient points: need {needed}, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
    #[error("insufficient population: k={k} exceeds n={n}")]
    InsufficientPopulation { n: usize, k: usize },
    #[error("unsupported image format {0:?}")]
    UnsupportedImageFormat(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    InvalidInput(String),
    #[error("{0}")]
    Io(String),
}

impl Error {
    /// CLI exit code class: 3 for solver/numerical failures, 2 for bad
    /// input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NoConsensus
            | Error::ProtocolIncomplete
            | Error::NoProgress
            | Error::RankDeficient
            | Error::DegenerateConfiguration
            | Error::UndefinedPoint => 3,
            _ => 2,
        }
    }
}
