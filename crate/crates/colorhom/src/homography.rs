//! 3×3 homographies on homogeneous chromaticities: representation, canonical
//! form, application, conjugation-based construction, and DLT estimation.
//!
//! Row-vector convention: a point `c` maps to `c·H`. A camera/illuminant
//! change acting on RGB as `ρ ↦ ρ·M` acts on RGI triples as the conjugated
//! homography `H = C⁻¹·M·C`; the homogeneous scale absorbs shading, so the
//! induced chromaticity map is shading-free.

use nalgebra::{DMatrix, Matrix3, RowVector3};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::colorspace::{
    dehomogenize, linear_to_lab, rgi_matrix_c, rgi_matrix_c_inv, HomogeneousChromaticity,
};
use crate::Error;

/// Full-rank 3×3 real matrix acting on homogeneous triples, up to scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Homography3(Matrix3<f64>);

impl Homography3 {
    /// Validates full rank: |det H| must exceed 1e-12·(‖H‖_F/√3)³ (the
    /// threshold is scale-free; equality holds at 1 for H = c·I).
    pub fn new(m: Matrix3<f64>) -> Result<Self, Error> {
        let scale = m.norm() / 3f64.sqrt();
        if !(m.determinant().abs() > 1e-12 * scale.powi(3)) {
            return Err(Error::RankDeficient);
        }
        Ok(Homography3(m))
    }

    pub fn identity() -> Self {
        Homography3(Matrix3::identity())
    }

    pub fn from_rows(rows: [[f64; 3]; 3]) -> Result<Self, Error> {
        Self::new(Matrix3::new(
            rows[0][0], rows[0][1], rows[0][2], rows[1][0], rows[1][1], rows[1][2], rows[2][0],
            rows[2][1], rows[2][2],
        ))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    /// Entries in row-major order.
    pub fn to_array(&self) -> [f64; 9] {
        let m = &self.0;
        [
            m[(0, 0)],
            m[(0, 1)],
            m[(0, 2)],
            m[(1, 0)],
            m[(1, 1)],
            m[(1, 2)],
            m[(2, 0)],
            m[(2, 1)],
            m[(2, 2)],
        ]
    }

    /// Canonical representative of the projective class: unit Frobenius norm,
    /// sign fixed so the largest-magnitude entry (first in row-major order on
    /// ties) is positive.
    pub fn canonical(&self) -> Homography3 {
        canonicalize(&self.0)
    }
}

/// Canonical form of an arbitrary (possibly rank-deficient) matrix; used for
/// scale-free comparisons.
pub fn canonicalize(m: &Matrix3<f64>) -> Homography3 {
    let mut c = m / m.norm();
    let mut best = 0.0;
    let mut flip = false;
    for r in 0..3 {
        for col in 0..3 {
            let v = c[(r, col)];
            if v.abs() > best {
                best = v.abs();
                flip = v < 0.0;
            }
        }
    }
    if flip {
        c = -c;
    }
    Homography3(c)
}

impl Serialize for Homography3 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_array().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Homography3 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = <[f64; 9]>::deserialize(d)?;
        Homography3::new(Matrix3::from_row_slice(&v)).map_err(D::Error::custom)
    }
}

/// A pair of corresponding homogeneous chromaticities.
#[derive(Debug, Clone, Copy)]
pub struct Correspondence {
    pub source: HomogeneousChromaticity,
    pub target: HomogeneousChromaticity,
}

/// Applies `h` to a homogeneous triple (row-vector product `c·H`).
pub fn apply(
    h: &Homography3,
    c: &HomogeneousChromaticity,
) -> Result<HomogeneousChromaticity, Error> {
    let row = RowVector3::new(c.p, c.q, c.w) * h.0;
    if row[0] == 0.0 && row[1] == 0.0 && row[2] == 0.0 {
        return Err(Error::UndefinedPoint);
    }
    Ok(HomogeneousChromaticity {
        p: row[0],
        q: row[1],
        w: row[2],
    })
}

/// Builds the chromaticity homography induced by a linear RGB map `ρ ↦ ρ·M`:
/// `H = C⁻¹·M·C`, returned in canonical form.
pub fn conjugate_construct(m: &Homography3) -> Homography3 {
    canonicalize(&(rgi_matrix_c_inv() * m.0 * rgi_matrix_c()))
}

/// Error measure for judging a fitted homography on a correspondence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorMetric {
    /// Euclidean distance between dehomogenized chromaticities.
    Chromaticity,
    /// ΔE between Lab values reconstructed at the target's intensity. Assumes
    /// correspondences carry RGI triples, whose third component is R+G+B.
    LabDeltaE,
}

/// Per-pair error of `h` on `pairs` under `metric`; pairs that map to or sit
/// at infinity get an infinite error instead of failing the whole batch.
pub fn reprojection_error(
    h: &Homography3,
    pairs: &[Correspondence],
    metric: ErrorMetric,
) -> Vec<f64> {
    pairs
        .iter()
        .map(|pair| {
            let mapped = match apply(h, &pair.source).and_then(|m| dehomogenize(&m)) {
                Ok(m) => m,
                Err(_) => return f64::INFINITY,
            };
            let target = match dehomogenize(&pair.target) {
                Ok(t) => t,
                Err(_) => return f64::INFINITY,
            };
            match metric {
                ErrorMetric::Chromaticity => {
                    ((mapped.0 - target.0).powi(2) + (mapped.1 - target.1).powi(2)).sqrt()
                }
                ErrorMetric::LabDeltaE => {
                    let intensity = pair.target.w;
                    if intensity <= 0.0 {
                        return f64::INFINITY;
                    }
                    let rgb_of = |(r, g): (f64, f64)| {
                        [r * intensity, g * intensity, (1.0 - r - g) * intensity]
                    };
                    crate::colorspace::delta_e(
                        &linear_to_lab(rgb_of(mapped)),
                        &linear_to_lab(rgb_of(target)),
                    )
                }
            }
        })
        .collect()
}

struct Normalization {
    n: Matrix3<f64>,
    n_inv: Matrix3<f64>,
    points: Vec<(f64, f64)>,
}

/// Hartley normalization: translate the centroid to the origin and scale the
/// mean radius to √2. Matrices are in row form (points multiply on the left).
fn hartley(points: &[(f64, f64)]) -> Normalization {
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let cy = points.iter().map(|p| p.1).sum::<f64>() / n;
    let radius = points
        .iter()
        .map(|p| ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt())
        .sum::<f64>()
        / n;
    let k = if radius > 0.0 {
        2f64.sqrt() / radius
    } else {
        1.0
    };
    Normalization {
        n: Matrix3::new(k, 0.0, 0.0, 0.0, k, 0.0, -k * cx, -k * cy, 1.0),
        n_inv: Matrix3::new(1.0 / k, 0.0, 0.0, 0.0, 1.0 / k, 0.0, cx, cy, 1.0),
        points: points
            .iter()
            .map(|p| ((p.0 - cx) * k, (p.1 - cy) * k))
            .collect(),
    }
}

/// DLT estimate from ≥4 correspondences: smallest singular vector of the
/// stacked 2n×9 design matrix, with Hartley normalization on both point sets.
/// Exactly interpolating for non-degenerate 4-point inputs.
pub fn estimate_dlt(pairs: &[Correspondence]) -> Result<Homography3, Error> {
    estimate_dlt_with(pairs, 10.0)
}

/// `estimate_dlt` with an explicit σ8/σ9 degeneracy ratio (default 10).
pub fn estimate_dlt_with(pairs: &[Correspondence], ratio_threshold: f64) -> Result<Homography3, Error> {
    if pairs.len() < 4 {
        return Err(Error::InsufficientPoints {
            needed: 4,
            got: pairs.len(),
        });
    }
    let src: Vec<(f64, f64)> = pairs
        .iter()
        .map(|p| dehomogenize(&p.source))
        .collect::<Result<_, _>>()?;
    let tgt: Vec<(f64, f64)> = pairs
        .iter()
        .map(|p| dehomogenize(&p.target))
        .collect::<Result<_, _>>()?;
    let ns = hartley(&src);
    let nt = hartley(&tgt);

    // Unknowns are the columns of H stacked: x = [h·1; h·2; h·3]. Each pair
    // contributes s·h1 − u·(s·h3) = 0 and s·h2 − v·(s·h3) = 0 for source row
    // s = (sx, sy, 1) and target (u, v). Padded with zero rows so the SVD
    // always carries the full 9-dimensional right-singular basis.
    let rows = (2 * pairs.len()).max(9);
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    for (i, (s, t)) in ns.points.iter().zip(&nt.points).enumerate() {
        let srow = [s.0, s.1, 1.0];
        for j in 0..3 {
            a[(2 * i, j)] = srow[j];
            a[(2 * i, 6 + j)] = -t.0 * srow[j];
            a[(2 * i + 1, 3 + j)] = srow[j];
            a[(2 * i + 1, 6 + j)] = -t.1 * srow[j];
        }
    }

    let svd = a.svd(false, true);
    let sv = &svd.singular_values;
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let mut order: Vec<usize> = (0..9).collect();
    order.sort_by(|&i, &j| sv[j].partial_cmp(&sv[i]).unwrap());
    // Degenerate when the design has a second near-zero singular value —
    // either σ8 sits within rounding noise of zero itself (the ratio below is
    // then meaningless), or it is not clearly separated from σ9.
    let ratio = sv[order[7]] / sv[order[8]];
    if sv[order[7]] <= sv[order[0]] * 1e-12 || !(ratio >= ratio_threshold) {
        return Err(Error::DegenerateConfiguration);
    }
    let x = vt.row(order[8]);
    let hn = Matrix3::new(x[0], x[3], x[6], x[1], x[4], x[7], x[2], x[5], x[8]);
    let h = ns.n * hn * nt.n_inv;
    Ok(canonicalize(&h))
}
