//! Robust homography estimation: repeated 4-point DLT fits on random
//! samples, scored by a pluggable per-pair metric.
//!
//! Ranking is conventional: most inliers wins, ties go to the lower mean
//! inlier error, then to the earlier trial (so a parallel reduction would
//! stay deterministic). The winner is re-estimated on its full inlier set
//! and the refit is kept only when it does not worsen the mean inlier error.

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::homography::{estimate_dlt, reprojection_error, Correspondence, ErrorMetric, Homography3};
use crate::rng::{sample_indices, Rng};
use crate::Error;

#[derive(Debug, Clone)]
pub struct RansacConfig {
    pub iterations: usize,
    /// In metric units: chromaticity distance or ΔE.
    pub inlier_threshold: f64,
    pub metric: ErrorMetric,
    pub seed: u64,
    pub min_inliers: usize,
}

impl Default for RansacConfig {
    fn default() -> Self {
        RansacConfig::for_metric(ErrorMetric::Chromaticity)
    }
}

impl RansacConfig {
    /// Defaults with the customary threshold for the metric: 0.02 in
    /// chromaticity distance, 2.0 in ΔE.
    pub fn for_metric(metric: ErrorMetric) -> Self {
        let inlier_threshold = match metric {
            ErrorMetric::Chromaticity => 0.02,
            ErrorMetric::LabDeltaE => 2.0,
        };
        RansacConfig {
            iterations: 2000,
            inlier_threshold,
            metric,
            seed: 0,
            min_inliers: 4,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.iterations < 1 {
            return Err(Error::InvalidInput("iterations must be at least 1".into()));
        }
        if !(self.inlier_threshold > 0.0) {
            return Err(Error::InvalidInput("inlier_threshold must be positive".into()));
        }
        if self.min_inliers < 4 {
            return Err(Error::InvalidInput("min_inliers must be at least 4".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RansacResult {
    pub h: Homography3,
    /// Inliers of the winning trial's model.
    pub inlier_mask: Vec<bool>,
    /// Mean metric error of the returned model over the inlier mask.
    pub consensus_error: f64,
    /// Trials that produced a scorable (non-degenerate) model.
    pub trials_used: usize,
}

impl Serialize for RansacResult {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("RansacResult", 4)?;
        st.serialize_field("H", &self.h)?;
        st.serialize_field("consensus_error", &self.consensus_error)?;
        st.serialize_field("inlier_mask", &self.inlier_mask)?;
        st.serialize_field("trials_used", &self.trials_used)?;
        st.end()
    }
}

fn masked_mean(errs: &[f64], mask: &[bool]) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (e, &m) in errs.iter().zip(mask) {
        if m {
            sum += e;
            count += 1;
        }
    }
    sum / count as f64
}

struct Candidate {
    h: Homography3,
    mask: Vec<bool>,
    count: usize,
    mean: f64,
}

pub fn ransac_solve(pairs: &[Correspondence], cfg: &RansacConfig) -> Result<RansacResult, Error> {
    cfg.validate()?;
    let n = pairs.len();
    if n < 4 {
        return Err(Error::InsufficientPoints { needed: 4, got: n });
    }

    let mut rng = Rng::new(cfg.seed);
    let mut best: Option<Candidate> = None;
    let mut trials_used = 0usize;
    for _ in 0..cfg.iterations {
        let idx = sample_indices(&mut rng, n, 4)?;
        let sample: Vec<Correspondence> = idx.iter().map(|&i| pairs[i]).collect();
        let h = match estimate_dlt(&sample) {
            Ok(h) => h,
            Err(Error::DegenerateConfiguration) | Err(Error::PointAtInfinity) => continue,
            Err(e) => return Err(e),
        };
        trials_used += 1;

        let errs = reprojection_error(&h, pairs, cfg.metric);
        let mask: Vec<bool> = errs.iter().map(|&e| e <= cfg.inlier_threshold).collect();
        let count = mask.iter().filter(|&&m| m).count();
        if count < cfg.min_inliers {
            continue;
        }
        let mean = masked_mean(&errs, &mask);
        let wins = match &best {
            None => true,
            Some(b) => count > b.count || (count == b.count && mean < b.mean),
        };
        if wins {
            best = Some(Candidate { h, mask, count, mean });
        }
    }

    let best = best.ok_or(Error::NoConsensus)?;

    // Refit on the full inlier set; keep it only if it is no worse on the
    // same mask (guards rare conditioning flukes).
    let inlier_pairs: Vec<Correspondence> = pairs
        .iter()
        .zip(&best.mask)
        .filter(|(_, &m)| m)
        .map(|(p, _)| *p)
        .collect();
    let (h, consensus_error) = match estimate_dlt(&inlier_pairs) {
        Ok(refit) => {
            let errs = reprojection_error(&refit, pairs, cfg.metric);
            let mean = masked_mean(&errs, &best.mask);
            if mean <= best.mean {
                (refit, mean)
            } else {
                (best.h, best.mean)
            }
        }
        Err(_) => (best.h, best.mean),
    };

    Ok(RansacResult {
        h,
        inlier_mask: best.mask,
        consensus_error,
        trials_used,
    })
}
