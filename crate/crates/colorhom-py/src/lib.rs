//! Python bindings for the colorhom library (import as `colorhom`).
//!
//! Patch sets cross the boundary as lists of `[r, g, b]` rows, matrices as
//! 3×3 nested lists (row-major, row-vector convention: `rgb @ M`).

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use colorhom::als::{als_solve as als_solve_rs, AlsConfig, AlsResult};
use colorhom::correction::{
    apply_matrix as apply_matrix_rs, correspondences, evaluate as evaluate_rs,
    fit_homography as fit_homography_rs, fit_least_squares as fit_least_squares_rs,
    quantile as quantile_rs, shading_correct as shading_correct_rs, ChartMeasurement, Method,
    Reference, Solver,
};
use colorhom::colorspace::{
    delta_e as delta_e_rs, linear_to_lab as linear_to_lab_rs, srgb_to_xyz, xyz_to_lab, LabColor,
    D65,
};
use colorhom::homography::{
    canonicalize, conjugate_construct as conjugate_rs, estimate_dlt as estimate_dlt_rs,
    Correspondence, ErrorMetric, Homography3,
};
use colorhom::io::synth::{classic_chart as classic_chart_rs, generate_synthetic, MMode, SynthSpec};
use colorhom::patch::PatchSet;
use colorhom::ransac::{ransac_solve as ransac_solve_rs, RansacConfig};
use nalgebra::Matrix3;

type Rows = Vec<[f64; 3]>;
type Mat = [[f64; 3]; 3];

fn err(e: colorhom::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn patches(rows: &Rows) -> PyResult<PatchSet> {
    PatchSet::from_rows(rows).map_err(err)
}

fn to_mat(m: &Matrix3<f64>) -> Mat {
    [
        [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
        [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
        [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
    ]
}

fn from_mat(m: &Mat) -> Matrix3<f64> {
    Matrix3::new(
        m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
    )
}

fn metric_from(name: &str) -> PyResult<ErrorMetric> {
    match name {
        "chroma" => Ok(ErrorMetric::Chromaticity),
        "lab" => Ok(ErrorMetric::LabDeltaE),
        other => Err(PyValueError::new_err(format!("unknown metric {other:?}"))),
    }
}

fn ransac_config(
    trials: usize,
    threshold: Option<f64>,
    metric: &str,
    seed: u64,
) -> PyResult<RansacConfig> {
    let mut cfg = RansacConfig::for_metric(metric_from(metric)?);
    cfg.iterations = trials;
    cfg.seed = seed;
    if let Some(t) = threshold {
        cfg.inlier_threshold = t;
    }
    Ok(cfg)
}

/// ALS solution for D·A·H ≈ B.
#[pyclass(name = "AlsSolution")]
struct AlsSolution {
    inner: AlsResult,
}

#[pymethods]
impl AlsSolution {
    #[getter]
    fn h(&self) -> Mat {
        to_mat(self.inner.h.matrix())
    }

    #[getter]
    fn canonical_h(&self) -> Mat {
        to_mat(self.inner.canonical_h().matrix())
    }

    #[getter]
    fn d(&self) -> Vec<f64> {
        self.inner.d.clone()
    }

    #[getter]
    fn residuals(&self) -> Vec<f64> {
        self.inner.residuals.clone()
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    fn __repr__(&self) -> String {
        format!(
            "AlsSolution(iterations={}, converged={}, residual={})",
            self.inner.iterations,
            self.inner.converged,
            self.inner.residuals.last().copied().unwrap_or(f64::NAN)
        )
    }
}

/// RANSAC consensus solution on chromaticity correspondences.
#[pyclass(name = "RansacSolution")]
struct RansacSolution {
    h: Mat,
    #[pyo3(get)]
    inlier_mask: Vec<bool>,
    #[pyo3(get)]
    consensus_error: f64,
    #[pyo3(get)]
    trials_used: usize,
}

#[pymethods]
impl RansacSolution {
    #[getter]
    fn h(&self) -> Mat {
        self.h
    }

    fn __repr__(&self) -> String {
        let inliers = self.inlier_mask.iter().filter(|&&m| m).count();
        format!(
            "RansacSolution(inliers={}/{}, consensus_error={})",
            inliers,
            self.inlier_mask.len(),
            self.consensus_error
        )
    }
}

#[pyfunction]
#[pyo3(signature = (a, b, epsilon=1e-6, max_iterations=100, shading_floor=1e-8))]
fn als_solve(
    a: Rows,
    b: Rows,
    epsilon: f64,
    max_iterations: usize,
    shading_floor: f64,
) -> PyResult<AlsSolution> {
    let cfg = AlsConfig {
        epsilon,
        max_iterations,
        shading_floor,
    };
    let inner = als_solve_rs(&patches(&a)?, &patches(&b)?, &cfg).map_err(err)?;
    Ok(AlsSolution { inner })
}

#[pyfunction]
#[pyo3(signature = (observed, reference, trials=2000, threshold=None, metric="chroma", seed=0))]
fn ransac_solve(
    observed: Rows,
    reference: Rows,
    trials: usize,
    threshold: Option<f64>,
    metric: &str,
    seed: u64,
) -> PyResult<RansacSolution> {
    let cfg = ransac_config(trials, threshold, metric, seed)?;
    let pairs = correspondences(&patches(&observed)?, &patches(&reference)?).map_err(err)?;
    let r = ransac_solve_rs(&pairs, &cfg).map_err(err)?;
    Ok(RansacSolution {
        h: to_mat(r.h.matrix()),
        inlier_mask: r.inlier_mask,
        consensus_error: r.consensus_error,
        trials_used: r.trials_used,
    })
}

#[pyfunction]
fn fit_least_squares(observed: Rows, reference: Rows) -> PyResult<Mat> {
    let cm = fit_least_squares_rs(&patches(&observed)?, &patches(&reference)?).map_err(err)?;
    Ok(to_mat(&cm.m))
}

#[pyfunction]
#[pyo3(signature = (observed, reference, method="als", epsilon=1e-6, max_iterations=100,
                    trials=2000, threshold=None, metric="chroma", seed=0))]
#[allow(clippy::too_many_arguments)]
fn fit_homography(
    observed: Rows,
    reference: Rows,
    method: &str,
    epsilon: f64,
    max_iterations: usize,
    trials: usize,
    threshold: Option<f64>,
    metric: &str,
    seed: u64,
) -> PyResult<Mat> {
    let solver = match method {
        "als" => Solver::Als(AlsConfig {
            epsilon,
            max_iterations,
            ..AlsConfig::default()
        }),
        "ransac" => Solver::Ransac(ransac_config(trials, threshold, metric, seed)?),
        other => return Err(PyValueError::new_err(format!("unknown method {other:?}"))),
    };
    let cm = fit_homography_rs(&patches(&observed)?, &patches(&reference)?, &solver).map_err(err)?;
    Ok(to_mat(&cm.m))
}

/// Returns (corrected_rows, clamped_count); negative outputs clamp to 0.
#[pyfunction]
fn apply_matrix(matrix: Mat, rows: Rows) -> PyResult<(Rows, usize)> {
    let (out, clamped) = apply_matrix_rs(&from_mat(&matrix), &patches(&rows)?);
    Ok((out.rows(), clamped))
}

#[pyfunction]
fn shading_correct(chart: Rows, gray: Rows) -> PyResult<Rows> {
    Ok(shading_correct_rs(&patches(&chart)?, &patches(&gray)?)
        .map_err(err)?
        .rows())
}

#[pyfunction]
#[pyo3(signature = (observed, shading_corrected, reference, methods=vec!["ls".into(), "als".into()],
                    epsilon=1e-6, max_iterations=100, trials=2000, threshold=None,
                    metric="chroma", seed=0))]
#[allow(clippy::too_many_arguments)]
fn evaluate(
    py: Python<'_>,
    observed: Rows,
    shading_corrected: Rows,
    reference: Rows,
    methods: Vec<String>,
    epsilon: f64,
    max_iterations: usize,
    trials: usize,
    threshold: Option<f64>,
    metric: &str,
    seed: u64,
) -> PyResult<Py<PyDict>> {
    let als_cfg = AlsConfig {
        epsilon,
        max_iterations,
        ..AlsConfig::default()
    };
    let selected: Vec<Method> = methods
        .iter()
        .map(|m| match m.as_str() {
            "ls" => Ok(Method::LeastSquares),
            "als" => Ok(Method::HomographyAls(als_cfg.clone())),
            "ransac" => Ok(Method::HomographyRansac(ransac_config(
                trials, threshold, metric, seed,
            )?)),
            other => Err(PyValueError::new_err(format!("unknown method {other:?}"))),
        })
        .collect::<PyResult<_>>()?;
    let measurement = ChartMeasurement {
        observed: patches(&observed)?,
        shading_corrected: Some(patches(&shading_corrected)?),
        reference: Reference::Linear(patches(&reference)?),
    };
    let report = evaluate_rs(&measurement, &selected).map_err(err)?;

    let out = PyDict::new(py);
    for e in &report.entries {
        let entry = PyDict::new(py);
        entry.set_item("mean", e.stats.mean)?;
        entry.set_item("median", e.stats.median)?;
        entry.set_item("q95", e.stats.q95)?;
        entry.set_item("max", e.stats.max)?;
        entry.set_item("clamped", e.clamped)?;
        entry.set_item("matrix", to_mat(&Matrix3::from_row_slice(&e.matrix)))?;
        out.set_item(e.tag.as_str(), entry)?;
    }
    Ok(out.into())
}

#[pyfunction]
#[pyo3(signature = (seed=0, n_patches=24, shading_low=0.5, shading_high=1.5,
                    noise_sigma=0.0, m_mode="random-full-rank"))]
fn synth(
    py: Python<'_>,
    seed: u64,
    n_patches: usize,
    shading_low: f64,
    shading_high: f64,
    noise_sigma: f64,
    m_mode: &str,
) -> PyResult<Py<PyDict>> {
    let m_mode = match m_mode {
        "random-diagonal" => MMode::RandomDiagonal,
        "random-full-rank" => MMode::RandomFullRank,
        other => return Err(PyValueError::new_err(format!("unknown m_mode {other:?}"))),
    };
    let spec = SynthSpec {
        n_patches,
        shading_low,
        shading_high,
        noise_sigma,
        m_mode,
        seed,
    };
    let data = generate_synthetic(&spec).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("observed", data.measurement.observed.rows())?;
    out.set_item(
        "shading_corrected",
        data.measurement
            .shading_corrected
            .as_ref()
            .expect("synth always produces it")
            .rows(),
    )?;
    out.set_item(
        "reference",
        data.measurement.reference.as_linear().map_err(err)?.rows(),
    )?;
    out.set_item("m", to_mat(&data.truth.m))?;
    out.set_item("d", data.truth.d.clone())?;
    out.set_item("mode", data.truth.mode.as_str())?;
    out.set_item("seed", data.truth.seed)?;
    Ok(out.into())
}

/// Chromaticity homography induced by the RGB map `rgb @ M` (canonical form).
#[pyfunction]
fn conjugate_construct(m: Mat) -> PyResult<Mat> {
    let h = Homography3::new(from_mat(&m)).map_err(err)?;
    Ok(to_mat(conjugate_rs(&h).matrix()))
}

/// DLT homography from `[(source, target), ...]` homogeneous triples.
#[pyfunction]
fn estimate_dlt(pairs: Vec<([f64; 3], [f64; 3])>) -> PyResult<Mat> {
    let pairs: Vec<Correspondence> = pairs
        .iter()
        .map(|(s, t)| {
            Ok(Correspondence {
                source: colorhom::colorspace::HomogeneousChromaticity::new(s[0], s[1], s[2])
                    .map_err(err)?,
                target: colorhom::colorspace::HomogeneousChromaticity::new(t[0], t[1], t[2])
                    .map_err(err)?,
            })
        })
        .collect::<PyResult<_>>()?;
    Ok(to_mat(estimate_dlt_rs(&pairs).map_err(err)?.matrix()))
}

/// Unit-Frobenius, sign-fixed representative of a matrix's projective class.
#[pyfunction]
fn canonical(m: Mat) -> Mat {
    to_mat(canonicalize(&from_mat(&m)).matrix())
}

#[pyfunction]
fn srgb_to_lab(srgb8: [i64; 3]) -> PyResult<(f64, f64, f64)> {
    let xyz = srgb_to_xyz(srgb8).map_err(err)?;
    let lab = xyz_to_lab(xyz, D65);
    Ok((lab.l, lab.a, lab.b))
}

#[pyfunction]
fn linear_to_lab(rgb: [f64; 3]) -> (f64, f64, f64) {
    let lab = linear_to_lab_rs(rgb);
    (lab.l, lab.a, lab.b)
}

#[pyfunction]
fn delta_e(lab1: [f64; 3], lab2: [f64; 3]) -> f64 {
    let x = LabColor {
        l: lab1[0],
        a: lab1[1],
        b: lab1[2],
    };
    let y = LabColor {
        l: lab2[0],
        a: lab2[1],
        b: lab2[2],
    };
    delta_e_rs(&x, &y)
}

#[pyfunction]
fn quantile(values: Vec<f64>, q: f64) -> PyResult<f64> {
    quantile_rs(&values, q).map_err(err)
}

#[pyfunction]
fn classic_chart() -> Rows {
    classic_chart_rs().rows()
}

#[pymodule]
#[pyo3(name = "colorhom")]
fn colorhom_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<AlsSolution>()?;
    m.add_class::<RansacSolution>()?;
    m.add_function(wrap_pyfunction!(als_solve, m)?)?;
    m.add_function(wrap_pyfunction!(ransac_solve, m)?)?;
    m.add_function(wrap_pyfunction!(fit_least_squares, m)?)?;
    m.add_function(wrap_pyfunction!(fit_homography, m)?)?;
    m.add_function(wrap_pyfunction!(apply_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(shading_correct, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    m.add_function(wrap_pyfunction!(conjugate_construct, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_dlt, m)?)?;
    m.add_function(wrap_pyfunction!(canonical, m)?)?;
    m.add_function(wrap_pyfunction!(srgb_to_lab, m)?)?;
    m.add_function(wrap_pyfunction!(linear_to_lab, m)?)?;
    m.add_function(wrap_pyfunction!(delta_e, m)?)?;
    m.add_function(wrap_pyfunction!(quantile, m)?)?;
    m.add_function(wrap_pyfunction!(classic_chart, m)?)?;
    Ok(())
}
