//! Seeded synthetic chart instances: reference patches, a ground-truth
//! linear map M, per-patch shading, optional relative Gaussian noise.
//!
//! The observed chart is built backwards from the reference so the truth is
//! exact: shading_corrected = reference·M⁻¹, observed = D·shading_corrected.

use nalgebra::Matrix3;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::colorspace::srgb_decode;
use crate::correction::{ChartMeasurement, Reference};
use crate::patch::PatchSet;
use crate::rng::Rng;
use crate::Error;

/// The classic 24-patch chart (8-bit sRGB), linearized. Row-major: six
/// columns by four rows, ending in the gray ramp.
const CHART_SRGB8: [[u8; 3]; 24] = [
    [115, 82, 68],
    [194, 150, 130],
    [98, 122, 157],
    [87, 108, 67],
    [133, 128, 177],
    [103, 189, 170],
    [214, 126, 44],
    [80, 91, 166],
    [193, 90, 99],
    [94, 60, 108],
    [157, 188, 64],
    [224, 163, 46],
    [56, 61, 150],
    [70, 148, 73],
    [175, 54, 60],
    [231, 199, 31],
    [187, 86, 149],
    [8, 133, 161],
    [243, 243, 242],
    [200, 200, 200],
    [160, 160, 160],
    [122, 122, 121],
    [85, 85, 85],
    [52, 52, 52],
];

pub fn classic_chart() -> PatchSet {
    let rows: Vec<[f64; 3]> = CHART_SRGB8
        .iter()
        .map(|c| {
            [
                srgb_decode(c[0] as f64 / 255.0),
                srgb_decode(c[1] as f64 / 255.0),
                srgb_decode(c[2] as f64 / 255.0),
            ]
        })
        .collect();
    PatchSet::from_rows(&rows).expect("chart constants are valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MMode {
    /// Independent per-channel gains in [0.5, 2].
    RandomDiagonal,
    /// Diagonal in [0.7, 1.3] plus dense offsets in [−0.25, 0.25].
    RandomFullRank,
}

impl MMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            MMode::RandomDiagonal => "random-diagonal",
            MMode::RandomFullRank => "random-full-rank",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub n_patches: usize,
    pub shading_low: f64,
    pub shading_high: f64,
    /// Relative noise: observed entries are multiplied by 1 + σ·N(0,1).
    pub noise_sigma: f64,
    pub m_mode: MMode,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_patches: 24,
            shading_low: 0.5,
            shading_high: 1.5,
            noise_sigma: 0.0,
            m_mode: MMode::RandomFullRank,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), Error> {
        if self.n_patches < 4 {
            return Err(Error::InvalidInput("n_patches must be at least 4".into()));
        }
        if !(self.shading_low > 0.0 && self.shading_low <= self.shading_high) {
            return Err(Error::InvalidInput(
                "need 0 < shading_low <= shading_high".into(),
            ));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::InvalidInput("noise_sigma must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub m: Matrix3<f64>,
    pub d: Vec<f64>,
    pub seed: u64,
    pub mode: MMode,
}

impl Serialize for GroundTruth {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let m = &self.m;
        let rows: [f64; 9] = [
            m[(0, 0)],
            m[(0, 1)],
            m[(0, 2)],
            m[(1, 0)],
            m[(1, 1)],
            m[(1, 2)],
            m[(2, 0)],
            m[(2, 1)],
            m[(2, 2)],
        ];
        let mut st = s.serialize_struct("GroundTruth", 4)?;
        st.serialize_field("M", &rows)?;
        st.serialize_field("D", &self.d)?;
        st.serialize_field("seed", &self.seed)?;
        st.serialize_field("mode", self.mode.as_str())?;
        st.end()
    }
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub measurement: ChartMeasurement,
    pub truth: GroundTruth,
}

fn sample_m(rng: &mut Rng, mode: MMode) -> Matrix3<f64> {
    match mode {
        MMode::RandomDiagonal => Matrix3::from_diagonal(&nalgebra::Vector3::new(
            rng.uniform(0.5, 2.0),
            rng.uniform(0.5, 2.0),
            rng.uniform(0.5, 2.0),
        )),
        MMode::RandomFullRank => {
            let mut m = Matrix3::from_diagonal(&nalgebra::Vector3::new(
                rng.uniform(0.7, 1.3),
                rng.uniform(0.7, 1.3),
                rng.uniform(0.7, 1.3),
            ));
            for r in 0..3 {
                for c in 0..3 {
                    m[(r, c)] += rng.uniform(-0.25, 0.25);
                }
            }
            m
        }
    }
}

/// Deterministic synthetic instance for `spec.seed`. The reference rows are
/// uniform in [0.05, 0.95]³; M draws are rejected until |det M| ≥ 1e-3 and
/// all shading-corrected entries stay ≥ 1e-3.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<SynthData, Error> {
    spec.validate()?;
    let mut rng = Rng::new(spec.seed);

    let ref_rows: Vec<[f64; 3]> = (0..spec.n_patches)
        .map(|_| {
            [
                rng.uniform(0.05, 0.95),
                rng.uniform(0.05, 0.95),
                rng.uniform(0.05, 0.95),
            ]
        })
        .collect();
    let reference = PatchSet::from_rows(&ref_rows)?;

    let mut attempts = 0;
    let (m, sc) = loop {
        attempts += 1;
        if attempts > 1000 {
            return Err(Error::InvalidInput(
                "could not draw a well-conditioned ground-truth map".into(),
            ));
        }
        let m = sample_m(&mut rng, spec.m_mode);
        if m.determinant().abs() < 1e-3 {
            continue;
        }
        let inv = m.try_inverse().expect("determinant checked");
        let sc = reference.matrix() * inv;
        if sc.iter().all(|&v| v >= 1e-3) {
            break (m, sc);
        }
    };

    let d: Vec<f64> = (0..spec.n_patches)
        .map(|_| rng.uniform(spec.shading_low, spec.shading_high))
        .collect();
    let mut observed = sc.clone_owned();
    for (i, &di) in d.iter().enumerate() {
        observed.row_mut(i).scale_mut(di);
    }
    if spec.noise_sigma > 0.0 {
        for v in observed.iter_mut() {
            *v = (*v * (1.0 + spec.noise_sigma * rng.normal())).max(0.0);
        }
    }

    Ok(SynthData {
        measurement: ChartMeasurement {
            observed: PatchSet::from_matrix(observed),
            shading_corrected: Some(PatchSet::from_matrix(sc)),
            reference: Reference::Linear(reference),
        },
        truth: GroundTruth {
            m,
            d,
            seed: spec.seed,
            mode: spec.m_mode,
        },
    })
}
