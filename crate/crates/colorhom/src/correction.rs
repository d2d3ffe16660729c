//! Color-correction pipeline: fit a 3×3 matrix on shading-contaminated
//! chart measurements, apply it to shading-corrected inputs, score in CIE
//! Lab.
//!
//! The homography fits discard the recovered shading — it is a per-scene
//! nuisance that must not transfer to new inputs. What remains is a scale
//! ambiguity (shading and map trade one global factor), resolved by the
//! least-squares rescale σ = ⟨obs·H, ref⟩/⟨obs·H, obs·H⟩, which minimizes
//! ‖obs·σH − ref‖_F over σ and reduces to σ = 1 on zero-shading data.

use nalgebra::Matrix3;
use serde::ser::{SerializeMap, SerializeStruct};
use serde::{Serialize, Serializer};
use std::fmt::Write as _;

use crate::als::{als_solve, AlsConfig, AlsResult};
use crate::colorspace::{delta_e, linear_to_lab, rgb_to_rgi, LabColor, LinearRGB};
use crate::homography::Correspondence;
use crate::patch::{PatchMatrix, PatchSet};
use crate::ransac::{ransac_solve, RansacConfig, RansacResult};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MethodTag {
    LeastSquares,
    HomographyAls,
    HomographyRansac,
}

impl MethodTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            MethodTag::LeastSquares => "least_squares",
            MethodTag::HomographyAls => "homography_als",
            MethodTag::HomographyRansac => "homography_ransac",
        }
    }
}

/// A fitted RGB→RGB correction map (row-vector convention: `rgb · m`).
#[derive(Debug, Clone)]
pub struct CorrectionMatrix {
    pub m: Matrix3<f64>,
    pub method: MethodTag,
    /// A least-squares step inside the fit saw a (near-)rank-deficient
    /// design and used the minimum-norm solution.
    pub rank_flagged: bool,
}

impl CorrectionMatrix {
    pub fn to_array(&self) -> [f64; 9] {
        let m = &self.m;
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
}

/// Chromaticity-homography solver choice for `fit_homography`.
#[derive(Debug, Clone)]
pub enum Solver {
    Als(AlsConfig),
    Ransac(RansacConfig),
}

/// Solver diagnostics from `fit_homography_detailed`.
#[derive(Debug, Clone)]
pub enum FitDetail {
    Als(AlsResult),
    Ransac {
        ransac: RansacResult,
        refit: AlsResult,
    },
}

fn same_rows(observed: &PatchSet, reference: &PatchSet) -> Result<(), Error> {
    if observed.len() != reference.len() {
        return Err(Error::InvalidInput(format!(
            "patch sets have {} and {} rows",
            observed.len(),
            reference.len()
        )));
    }
    Ok(())
}

fn lstsq(a: &PatchMatrix, b: &PatchMatrix) -> (Matrix3<f64>, bool) {
    let svd = a.clone_owned().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let flagged = !(smin > smax * 1e-10);
    let eps = (smax * 1e-13).max(f64::MIN_POSITIVE);
    let m = svd.solve(b, eps).expect("u and v_t were computed");
    (Matrix3::from(m), flagged)
}

/// Plain least-squares color correction: minimizes ‖observed·M − reference‖_F
/// with no shading model. Rank-deficient designs fall back to the
/// minimum-norm solution, reported via `rank_flagged`.
pub fn fit_least_squares(
    observed: &PatchSet,
    reference: &PatchSet,
) -> Result<CorrectionMatrix, Error> {
    same_rows(observed, reference)?;
    let (m, rank_flagged) = lstsq(observed.matrix(), reference.matrix());
    Ok(CorrectionMatrix {
        m,
        method: MethodTag::LeastSquares,
        rank_flagged,
    })
}

fn ls_rescale(observed: &PatchMatrix, reference: &PatchMatrix, h: &Matrix3<f64>) -> f64 {
    let p = observed * h;
    let den = p.dot(&p);
    let num = p.dot(reference);
    let sigma = num / den;
    if sigma.is_finite() && sigma != 0.0 {
        sigma
    } else {
        1.0
    }
}

/// RGI correspondences between two patch sets, for the RANSAC path.
/// Requires non-negative rows with no black (all-zero) patches.
pub fn correspondences(
    observed: &PatchSet,
    reference: &PatchSet,
) -> Result<Vec<Correspondence>, Error> {
    same_rows(observed, reference)?;
    observed
        .rows()
        .iter()
        .zip(reference.rows().iter())
        .map(|(o, r)| {
            let source = rgb_to_rgi(&LinearRGB::new(o[0], o[1], o[2])?)?;
            let target = rgb_to_rgi(&LinearRGB::new(r[0], r[1], r[2])?)?;
            Ok(Correspondence { source, target })
        })
        .collect()
}

/// Shading-robust fit. The ALS path solves D·observed·H ≈ reference and keeps
/// σH; the RANSAC path finds a consensus on the induced chromaticity
/// correspondences, then refits with ALS on the inlier rows.
pub fn fit_homography_detailed(
    observed: &PatchSet,
    reference: &PatchSet,
    solver: &Solver,
) -> Result<(CorrectionMatrix, FitDetail), Error> {
    same_rows(observed, reference)?;
    match solver {
        Solver::Als(cfg) => {
            let r = als_solve(observed, reference, cfg)?;
            let sigma = ls_rescale(observed.matrix(), reference.matrix(), r.h.matrix());
            let cm = CorrectionMatrix {
                m: r.h.matrix() * sigma,
                method: MethodTag::HomographyAls,
                rank_flagged: r.rank_flagged,
            };
            Ok((cm, FitDetail::Als(r)))
        }
        Solver::Ransac(cfg) => {
            let pairs = correspondences(observed, reference)?;
            let rr = ransac_solve(&pairs, cfg)?;
            let obs_in = observed.select(&rr.inlier_mask)?;
            let ref_in = reference.select(&rr.inlier_mask)?;
            let refit = als_solve(&obs_in, &ref_in, &AlsConfig::default())?;
            let sigma = ls_rescale(obs_in.matrix(), ref_in.matrix(), refit.h.matrix());
            let cm = CorrectionMatrix {
                m: refit.h.matrix() * sigma,
                method: MethodTag::HomographyRansac,
                rank_flagged: refit.rank_flagged,
            };
            Ok((cm, FitDetail::Ransac { ransac: rr, refit }))
        }
    }
}

pub fn fit_homography(
    observed: &PatchSet,
    reference: &PatchSet,
    solver: &Solver,
) -> Result<CorrectionMatrix, Error> {
    fit_homography_detailed(observed, reference, solver).map(|(cm, _)| cm)
}

/// Row-wise `rgbs·M`, clamping negative outputs at 0; the count of clamped
/// entries is returned alongside.
pub fn apply_matrix(m: &Matrix3<f64>, rgbs: &PatchSet) -> (PatchSet, usize) {
    let mut out = rgbs.matrix() * m;
    let mut clamped = 0usize;
    for v in out.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
            clamped += 1;
        }
    }
    (PatchSet::from_matrix(out), clamped)
}

pub fn apply_correction(cm: &CorrectionMatrix, rgbs: &PatchSet) -> (PatchSet, usize) {
    apply_matrix(&cm.m, rgbs)
}

/// Divides the chart by the gray-target image and renormalizes so the mean
/// row-sum matches the input chart's (the division removes shading but also
/// the exposure scale; the renormalization restores the latter).
pub fn shading_correct(chart: &PatchSet, gray: &PatchSet) -> Result<PatchSet, Error> {
    if chart.len() != gray.len() {
        return Err(Error::InvalidInput(format!(
            "patch sets have {} and {} rows",
            chart.len(),
            gray.len()
        )));
    }
    if gray.matrix().iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidGray);
    }
    let divided = chart.matrix().component_div(gray.matrix());
    let chart_sum: f64 = chart.matrix().iter().sum();
    let divided_sum: f64 = divided.iter().sum();
    let factor = if divided_sum > 0.0 {
        chart_sum / divided_sum
    } else {
        1.0
    };
    Ok(PatchSet::from_matrix(divided * factor))
}

/// Linear-interpolation quantile at position q·(n−1) on the sorted values
/// (the "inclusive" convention).
pub fn quantile(values: &[f64], q: f64) -> Result<f64, Error> {
    if values.is_empty() {
        return Err(Error::InvalidInput("no data".into()));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidInput("quantile fraction out of range".into()));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("non-finite value".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    if lo + 1 < v.len() {
        Ok(v[lo] + frac * (v[lo + 1] - v[lo]))
    } else {
        Ok(v[lo])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaEStats {
    pub mean: f64,
    pub median: f64,
    pub q95: f64,
    pub max: f64,
}

impl DeltaEStats {
    pub fn from_values(values: &[f64]) -> Result<Self, Error> {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let stats = DeltaEStats {
            mean,
            median: quantile(values, 0.5)?,
            q95: quantile(values, 0.95)?,
            max: quantile(values, 1.0)?,
        };
        debug_assert!(
            stats.mean <= stats.max && stats.median <= stats.max && stats.q95 <= stats.max
        );
        Ok(stats)
    }
}

/// Reference chart values: linear RGB rows or Lab triples.
#[derive(Debug, Clone)]
pub enum Reference {
    Linear(PatchSet),
    Lab(Vec<LabColor>),
}

impl Reference {
    pub fn len(&self) -> usize {
        match self {
            Reference::Linear(p) => p.len(),
            Reference::Lab(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Linear RGB rows; Lab references pass through XYZ and may land
    /// (slightly) outside [0,1] for out-of-gamut entries.
    pub fn as_linear(&self) -> Result<PatchSet, Error> {
        match self {
            Reference::Linear(p) => Ok(p.clone()),
            Reference::Lab(v) => {
                let rows: Vec<[f64; 3]> = v
                    .iter()
                    .map(|lab| {
                        crate::colorspace::xyz_to_linear(crate::colorspace::lab_to_xyz(
                            lab,
                            crate::colorspace::D65,
                        ))
                    })
                    .collect();
                PatchSet::from_rows(&rows)
            }
        }
    }

    pub fn as_lab(&self) -> Result<Vec<LabColor>, Error> {
        match self {
            Reference::Linear(p) => Ok(p.rows().iter().map(|r| linear_to_lab(*r)).collect()),
            Reference::Lab(v) => Ok(v.clone()),
        }
    }
}

/// One chart session: camera RGBs with shading, optionally their
/// gray-divided counterpart, and the reference target values.
#[derive(Debug, Clone)]
pub struct ChartMeasurement {
    pub observed: PatchSet,
    pub shading_corrected: Option<PatchSet>,
    pub reference: Reference,
}

impl ChartMeasurement {
    pub fn validate(&self) -> Result<(), Error> {
        let n = self.observed.len();
        if self.reference.len() != n
            || self.shading_corrected.as_ref().is_some_and(|s| s.len() != n)
        {
            return Err(Error::InvalidInput("patch sets must share row count".into()));
        }
        Ok(())
    }
}

/// Correction method selection for `evaluate`.
#[derive(Debug, Clone)]
pub enum Method {
    LeastSquares,
    HomographyAls(AlsConfig),
    HomographyRansac(RansacConfig),
}

impl Method {
    pub fn tag(&self) -> MethodTag {
        match self {
            Method::LeastSquares => MethodTag::LeastSquares,
            Method::HomographyAls(_) => MethodTag::HomographyAls,
            Method::HomographyRansac(_) => MethodTag::HomographyRansac,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvalEntry {
    pub tag: MethodTag,
    pub matrix: [f64; 9],
    pub stats: DeltaEStats,
    /// Negative corrected entries clamped before Lab scoring.
    pub clamped: usize,
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub entries: Vec<EvalEntry>,
}

struct EntryBody<'a>(&'a EvalEntry);

impl Serialize for EntryBody<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("EvalEntry", 3)?;
        st.serialize_field("delta_e", &self.0.stats)?;
        st.serialize_field("clamped", &self.0.clamped)?;
        st.serialize_field("matrix", &self.0.matrix)?;
        st.end()
    }
}

impl Serialize for EvalReport {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.entries.len()))?;
        for e in &self.entries {
            map.serialize_entry(e.tag.as_str(), &EntryBody(e))?;
        }
        map.end()
    }
}

impl EvalReport {
    pub fn get(&self, tag: MethodTag) -> Option<&EvalEntry> {
        self.entries.iter().find(|e| e.tag == tag)
    }

    /// Aligned table, one row per method: mean, median, 95%, max (ΔE), plus
    /// the clamp count.
    pub fn text_table(&self) -> String {
        let name_w = self
            .entries
            .iter()
            .map(|e| e.tag.as_str().len())
            .chain(["method".len()])
            .max()
            .unwrap();
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<name_w$}  {:>8} {:>8} {:>8} {:>8} {:>8}",
            "method", "mean", "median", "95%", "max", "clamped"
        );
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{:<name_w$}  {:>8.2} {:>8.2} {:>8.2} {:>8.2} {:>8}",
                e.tag.as_str(),
                e.stats.mean,
                e.stats.median,
                e.stats.q95,
                e.stats.max,
                e.clamped
            );
        }
        out
    }
}

/// The two-step protocol: fit each method on (observed, reference), apply
/// the matrix to the shading-corrected inputs, score ΔE against the
/// reference in Lab.
pub fn evaluate(measurement: &ChartMeasurement, methods: &[Method]) -> Result<EvalReport, Error> {
    measurement.validate()?;
    let sc = measurement
        .shading_corrected
        .as_ref()
        .ok_or(Error::ProtocolIncomplete)?;
    if methods.is_empty() {
        return Err(Error::InvalidInput("no methods requested".into()));
    }
    let ref_lin = measurement.reference.as_linear()?;
    let ref_lab = measurement.reference.as_lab()?;

    let mut entries = Vec::new();
    for method in methods {
        let cm = match method {
            Method::LeastSquares => fit_least_squares(&measurement.observed, &ref_lin)?,
            Method::HomographyAls(cfg) => {
                fit_homography(&measurement.observed, &ref_lin, &Solver::Als(cfg.clone()))?
            }
            Method::HomographyRansac(cfg) => {
                fit_homography(&measurement.observed, &ref_lin, &Solver::Ransac(cfg.clone()))?
            }
        };
        let (corrected, clamped) = apply_correction(&cm, sc);
        let des: Vec<f64> = corrected
            .rows()
            .iter()
            .zip(&ref_lab)
            .map(|(rgb, lab)| delta_e(&linear_to_lab(*rgb), lab))
            .collect();
        entries.push(EvalEntry {
            tag: cm.method,
            matrix: cm.to_array(),
            stats: DeltaEStats::from_values(&des)?,
            clamped,
        });
    }
    Ok(EvalReport { entries })
}
