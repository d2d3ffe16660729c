//! Patch sets: n×3 matrices of linear RGB rows, the common currency of the
//! solvers and the correction pipeline.

use nalgebra::{Dyn, OMatrix, U3};

use crate::Error;

pub type PatchMatrix = OMatrix<f64, Dyn, U3>;

/// An ordered set of linear RGB measurements, one patch per row.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchSet {
    m: PatchMatrix,
}

impl PatchSet {
    /// Requires at least one row and finite entries; individual solvers
    /// impose their own minimum row counts.
    pub fn from_rows(rows: &[[f64; 3]]) -> Result<Self, Error> {
        if rows.is_empty() {
            return Err(Error::InvalidInput("patch set has no rows".into()));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite patch value".into()));
        }
        let m = PatchMatrix::from_fn(rows.len(), |r, c| rows[r][c]);
        Ok(PatchSet { m })
    }

    pub(crate) fn from_matrix(m: PatchMatrix) -> Self {
        PatchSet { m }
    }

    pub fn len(&self) -> usize {
        self.m.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.m.nrows() == 0
    }

    pub fn row(&self, i: usize) -> [f64; 3] {
        [self.m[(i, 0)], self.m[(i, 1)], self.m[(i, 2)]]
    }

    pub fn rows(&self) -> Vec<[f64; 3]> {
        (0..self.len()).map(|i| self.row(i)).collect()
    }

    pub fn matrix(&self) -> &PatchMatrix {
        &self.m
    }

    /// Rows selected by `mask[i] == true`, preserving order.
    pub fn select(&self, mask: &[bool]) -> Result<PatchSet, Error> {
        if mask.len() != self.len() {
            return Err(Error::InvalidInput("mask length mismatch".into()));
        }
        let rows: Vec<[f64; 3]> = (0..self.len()).filter(|&i| mask[i]).map(|i| self.row(i)).collect();
        PatchSet::from_rows(&rows)
    }
}
