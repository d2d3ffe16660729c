//! Color representations and conversions: linear RGB, RGI / homogeneous
//! chromaticity, sRGB, XYZ, CIE Lab, and the ΔE*ab metric.
//!
//! Everything here follows the library-wide row-vector convention: points are
//! rows and matrices act on the right, e.g. `[R G B]·C = [R, G, R+G+B]`.

use nalgebra::Matrix3;

use crate::Error;

/// Camera-linear RGB; channels are non-negative and unbounded above.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearRGB {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

impl LinearRGB {
    pub fn new(r: f64, g: f64, b: f64) -> Result<Self, Error> {
        if !(r >= 0.0 && g >= 0.0 && b >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "linear RGB channels must be non-negative, got ({r}, {g}, {b})"
            )));
        }
        Ok(LinearRGB { r, g, b })
    }
}

/// Homogeneous chromaticity triple; reads as the chromaticity (p/w, q/w).
///
/// The homogeneous scale is exactly where shading/intensity factors live, so
/// triples that differ by a nonzero scalar are the same chromaticity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneousChromaticity {
    pub p: f64,
    pub q: f64,
    pub w: f64,
}

impl HomogeneousChromaticity {
    pub fn new(p: f64, q: f64, w: f64) -> Result<Self, Error> {
        if p == 0.0 && q == 0.0 && w == 0.0 {
            return Err(Error::BlackPixel);
        }
        Ok(HomogeneousChromaticity { p, q, w })
    }
}

/// CIE 1976 L*a*b* value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabColor {
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

/// D65 reference white, 2° observer.
pub const D65: [f64; 3] = [0.95047, 1.0, 1.08883];

/// The RGI conversion matrix C with rows (1,0,1), (0,1,1), (0,0,1):
/// `[R G B]·C = [R, G, R+G+B]`. Determinant 1.
pub fn rgi_matrix_c() -> Matrix3<f64> {
    Matrix3::new(1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0)
}

/// Exact inverse of [`rgi_matrix_c`]: rows (1,0,-1), (0,1,-1), (0,0,1).
pub fn rgi_matrix_c_inv() -> Matrix3<f64> {
    Matrix3::new(1.0, 0.0, -1.0, 0.0, 1.0, -1.0, 0.0, 0.0, 1.0)
}

/// RGB → RGI homogeneous triple [R, G, R+G+B].
pub fn rgb_to_rgi(rgb: &LinearRGB) -> Result<HomogeneousChromaticity, Error> {
    if rgb.r == 0.0 && rgb.g == 0.0 && rgb.b == 0.0 {
        return Err(Error::BlackPixel);
    }
    Ok(HomogeneousChromaticity {
        p: rgb.r,
        q: rgb.g,
        w: rgb.r + rgb.g + rgb.b,
    })
}

/// RGB → (r, g) = (R, G)/(R+G+B).
pub fn rgb_to_chromaticity(rgb: &LinearRGB) -> Result<(f64, f64), Error> {
    let sum = rgb.r + rgb.g + rgb.b;
    if sum == 0.0 {
        return Err(Error::BlackPixel);
    }
    Ok((rgb.r / sum, rgb.g / sum))
}

/// Homogeneous triple → affine chromaticity (p/w, q/w).
pub fn dehomogenize(c: &HomogeneousChromaticity) -> Result<(f64, f64), Error> {
    let tol = 1e-12 * c.p.abs().max(c.q.abs()).max(1.0);
    if c.w.abs() <= tol {
        return Err(Error::PointAtInfinity);
    }
    Ok((c.p / c.w, c.q / c.w))
}

// sRGB D65 primaries (IEC 61966-2-1), stored row-form: xyz_row = rgb_row · M.
const LINEAR_TO_XYZ: [[f64; 3]; 3] = [
    [0.4124564, 0.2126729, 0.0193339],
    [0.3575761, 0.7151522, 0.1191920],
    [0.1804375, 0.0721750, 0.9503041],
];

// Inverse of LINEAR_TO_XYZ computed at f64 precision rather than the usual
// 7-digit published values, which are rounded independently of the forward
// matrix and would leave ~1e-7 of round-trip error.
const XYZ_TO_LINEAR: [[f64; 3]; 3] = [
    [3.2404548360214083, -0.9692663898756538, 0.05564341960421366],
    [-1.5371388501025751, 1.876010928842491, -0.20402585426769815],
    [-0.498531546868481, 0.04155608234667352, 1.057225162457929],
];

fn mul_row(v: [f64; 3], m: &[[f64; 3]; 3]) -> [f64; 3] {
    [
        v[0] * m[0][0] + v[1] * m[1][0] + v[2] * m[2][0],
        v[0] * m[0][1] + v[1] * m[1][1] + v[2] * m[2][1],
        v[0] * m[0][2] + v[1] * m[1][2] + v[2] * m[2][2],
    ]
}

/// sRGB transfer function, decode direction (gamma expansion).
pub fn srgb_decode(v: f64) -> f64 {
    if v <= 0.04045 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

/// sRGB transfer function, encode direction.
pub fn srgb_encode(v: f64) -> f64 {
    if v <= 0.0031308 {
        12.92 * v
    } else {
        1.055 * v.powf(1.0 / 2.4) - 0.055
    }
}

/// Linear RGB (sRGB primaries) → XYZ, D65.
pub fn linear_to_xyz(rgb: [f64; 3]) -> [f64; 3] {
    mul_row(rgb, &LINEAR_TO_XYZ)
}

/// XYZ → linear RGB (sRGB primaries), D65.
pub fn xyz_to_linear(xyz: [f64; 3]) -> [f64; 3] {
    mul_row(xyz, &XYZ_TO_LINEAR)
}

/// 8-bit sRGB triple → XYZ (gamma expansion, then the primaries matrix).
pub fn srgb_to_xyz(srgb8: [i64; 3]) -> Result<[f64; 3], Error> {
    for &v in &srgb8 {
        if !(0..=255).contains(&v) {
            return Err(Error::Invalid8Bit);
        }
    }
    let lin = [
        srgb_decode(srgb8[0] as f64 / 255.0),
        srgb_decode(srgb8[1] as f64 / 255.0),
        srgb_decode(srgb8[2] as f64 / 255.0),
    ];
    Ok(linear_to_xyz(lin))
}

const LAB_EPSILON: f64 = 216.0 / 24389.0;
const LAB_KAPPA: f64 = 24389.0 / 27.0;

fn lab_f(t: f64) -> f64 {
    if t > LAB_EPSILON {
        t.cbrt()
    } else {
        (LAB_KAPPA * t + 16.0) / 116.0
    }
}

/// XYZ → CIE Lab; negative XYZ components are clamped to 0, and the returned
/// flag reports whether any clamp happened.
pub fn xyz_to_lab_flagged(xyz: [f64; 3], white: [f64; 3]) -> (LabColor, bool) {
    let clamped = xyz.iter().any(|&v| v < 0.0);
    let fx = lab_f(xyz[0].max(0.0) / white[0]);
    let fy = lab_f(xyz[1].max(0.0) / white[1]);
    let fz = lab_f(xyz[2].max(0.0) / white[2]);
    let lab = LabColor {
        l: 116.0 * fy - 16.0,
        a: 500.0 * (fx - fy),
        b: 200.0 * (fy - fz),
    };
    (lab, clamped)
}

pub fn xyz_to_lab(xyz: [f64; 3], white: [f64; 3]) -> LabColor {
    xyz_to_lab_flagged(xyz, white).0
}

/// Inverse of [`xyz_to_lab`] for in-gamut values.
pub fn lab_to_xyz(lab: &LabColor, white: [f64; 3]) -> [f64; 3] {
    let fy = (lab.l + 16.0) / 116.0;
    let fx = fy + lab.a / 500.0;
    let fz = fy - lab.b / 200.0;
    let inv_f = |f: f64| {
        let f3 = f * f * f;
        if f3 > LAB_EPSILON {
            f3
        } else {
            (116.0 * f - 16.0) / LAB_KAPPA
        }
    };
    let yr = if lab.l > LAB_KAPPA * LAB_EPSILON {
        let t = (lab.l + 16.0) / 116.0;
        t * t * t
    } else {
        lab.l / LAB_KAPPA
    };
    [inv_f(fx) * white[0], yr * white[1], inv_f(fz) * white[2]]
}

/// ΔE*ab 1976: Euclidean distance in Lab.
pub fn delta_e(x: &LabColor, y: &LabColor) -> f64 {
    let dl = x.l - y.l;
    let da = x.a - y.a;
    let db = x.b - y.b;
    (dl * dl + da * da + db * db).sqrt()
}

/// Lab for a linear-RGB row under the module-wide D65 configuration.
pub fn linear_to_lab(rgb: [f64; 3]) -> LabColor {
    xyz_to_lab(linear_to_xyz(rgb), D65)
}
