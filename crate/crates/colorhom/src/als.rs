//! Alternating least squares for the shading-robust model D·A·H ≈ B.
//!
//! Alternates two exact minimizers: a per-row closed form for the diagonal
//! shading D, and an SVD least-squares solve for the 3×3 map H. Iterates
//! Aⁱ = Dⁱ·Aⁱ⁻¹·Hⁱ so the factors compose: D = ∏Dⁱ entrywise and
//! H = ∏Hⁱ right-multiplied in iteration order reproduce the final iterate
//! from the original A. The residual ‖DAH − B‖_F never increases because
//! each half-step is optimal given the other factor.

use nalgebra::Matrix3;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::homography::Homography3;
use crate::patch::{PatchMatrix, PatchSet};
use crate::Error;

pub type ShadingVector = Vec<f64>;

#[derive(Debug, Clone)]
pub struct AlsConfig {
    /// Stop when ‖Aⁱ − Aⁱ⁻¹‖_F drops below this.
    pub epsilon: f64,
    pub max_iterations: usize,
    /// Lower clamp for shading entries; the unconstrained per-row minimizer
    /// can go non-positive when aᵢ·bᵢ ≤ 0, but shading is physically positive.
    pub shading_floor: f64,
}

impl Default for AlsConfig {
    fn default() -> Self {
        AlsConfig {
            epsilon: 1e-6,
            max_iterations: 100,
            shading_floor: 1e-8,
        }
    }
}

impl AlsConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidInput("epsilon must be positive".into()));
        }
        if self.max_iterations < 1 {
            return Err(Error::InvalidInput("max_iterations must be at least 1".into()));
        }
        if !(self.shading_floor > 0.0) {
            return Err(Error::InvalidInput("shading_floor must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct AlsResult {
    /// Accumulated H (working copy; use `canonical_h` for comparisons).
    pub h: Homography3,
    pub d: ShadingVector,
    /// residuals[0] is the initial ‖A − B‖_F; entry i is ‖DAH − B‖_F after
    /// iteration i. Non-increasing.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Some H-step saw a (near-)rank-deficient design and fell back to the
    /// minimum-norm pseudo-inverse solution.
    pub rank_flagged: bool,
    /// Some shading row had a zero denominator and was pinned at the floor.
    pub zero_row_flagged: bool,
}

impl AlsResult {
    pub fn canonical_h(&self) -> Homography3 {
        self.h.canonical()
    }
}

impl Serialize for AlsResult {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("AlsResult", 5)?;
        st.serialize_field("H", &self.h)?;
        st.serialize_field("D", &self.d)?;
        st.serialize_field("residuals", &self.residuals)?;
        st.serialize_field("iterations", &self.iterations)?;
        st.serialize_field("converged", &self.converged)?;
        st.end()
    }
}

fn shading_of(a: &PatchMatrix, b: &PatchMatrix, floor: f64) -> (Vec<f64>, bool) {
    let mut flagged = false;
    let d = (0..a.nrows())
        .map(|i| {
            let ar = a.row(i);
            let den = ar.dot(&ar);
            if den == 0.0 {
                flagged = true;
                return floor;
            }
            (ar.dot(&b.row(i)) / den).max(floor)
        })
        .collect();
    (d, flagged)
}

fn h_of(da: &PatchMatrix, b: &PatchMatrix) -> (Matrix3<f64>, bool) {
    let svd = da.clone_owned().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let flagged = !(smin > smax * 1e-10);
    let eps = (smax * 1e-13).max(f64::MIN_POSITIVE);
    let h = svd.solve(b, eps).expect("u and v_t were computed");
    (Matrix3::from(h), flagged)
}

fn same_rows(a: &PatchSet, b: &PatchSet) -> Result<(), Error> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!(
            "patch sets have {} and {} rows",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// Per-row shading factors minimizing ‖diag(d)·a − b‖_F, clamped below at
/// `floor`. The boolean reports zero rows in `a` (their dᵢ is pinned at the
/// floor; the scaled row is zero either way).
pub fn solve_shading(a: &PatchSet, b: &PatchSet, floor: f64) -> Result<(ShadingVector, bool), Error> {
    same_rows(a, b)?;
    Ok(shading_of(a.matrix(), b.matrix(), floor))
}

/// Least-squares minimizer of ‖da·H − b‖_F via SVD (minimum-norm on rank
/// deficiency, which the boolean reports). Normal equations are never formed.
pub fn solve_h(da: &PatchSet, b: &PatchSet) -> Result<(Matrix3<f64>, bool), Error> {
    same_rows(da, b)?;
    Ok(h_of(da.matrix(), b.matrix()))
}

pub fn als_solve(a: &PatchSet, b: &PatchSet, cfg: &AlsConfig) -> Result<AlsResult, Error> {
    cfg.validate()?;
    same_rows(a, b)?;
    if a.len() < 4 {
        return Err(Error::InsufficientPoints {
            needed: 4,
            got: a.len(),
        });
    }

    let bm = b.matrix();
    let mut cur = a.matrix().clone_owned();
    let mut d_acc = vec![1.0; a.len()];
    let mut h_acc = Matrix3::identity();
    let mut residuals = vec![(&cur - bm).norm()];
    let mut rank_flagged = false;
    let mut zero_row_flagged = false;
    let mut iterations = 0;
    let mut converged = false;

    // Each step is a least-squares optimum, so the residual cannot increase
    // in exact arithmetic; allow rounding noise relative to the data scale
    // (‖B‖ term matters when the initial residual is 0 or near it).
    let slack = 1e-9 * residuals[0] + 1e-12 * bm.norm() + f64::MIN_POSITIVE;
    for it in 1..=cfg.max_iterations {
        let (d, zflag) = shading_of(&cur, bm, cfg.shading_floor);
        zero_row_flagged |= zflag;
        let mut da = cur.clone_owned();
        for (i, &di) in d.iter().enumerate() {
            da.row_mut(i).scale_mut(di);
        }
        let (h, rflag) = h_of(&da, bm);
        rank_flagged |= rflag;
        let next = da * h;

        let res = (&next - bm).norm();
        if it == 1 && res > residuals[0] + slack {
            return Err(Error::NoProgress);
        }
        debug_assert!(
            res <= residuals[it - 1] + slack,
            "residual increased: {} -> {res}",
            residuals[it - 1]
        );
        residuals.push(res);

        for (acc, di) in d_acc.iter_mut().zip(&d) {
            *acc *= di;
        }
        h_acc *= h;

        // accumulation consistency: diag(d_acc)·A·H_acc is the iterate
        #[cfg(debug_assertions)]
        {
            let mut recon = a.matrix().clone_owned();
            for (i, &di) in d_acc.iter().enumerate() {
                recon.row_mut(i).scale_mut(di);
            }
            let recon = recon * h_acc;
            debug_assert!((&recon - &next).norm() <= 1e-9 * (1.0 + next.norm()));
        }

        let delta = (&next - &cur).norm();
        cur = next;
        iterations = it;
        if delta < cfg.epsilon {
            converged = true;
            break;
        }
    }

    Ok(AlsResult {
        h: Homography3::new(h_acc)?,
        d: d_acc,
        residuals,
        iterations,
        converged,
        rank_flagged,
        zero_row_flagged,
    })
}
