//! Lower-triangular two-time grids.

use serde::{Deserialize, Serialize};

/// How reads above the diagonal are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldKind {
    /// `X(i, j) = X(j, i)`.
    Symmetric,
    /// `X(i, j) = 0` for `j > i` and `X(i, i) = 1`.
    Causal,
}

/// A function of two grid times stored on `{(i, j) : j <= i}`.
///
/// Rows are contiguous: row `i` holds `X(i, 0..=i)` starting at offset
/// `i (i + 1) / 2`, so integrals over the earlier time of a fixed row are a
/// linear scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoTimeField {
    dt: f64,
    kind: FieldKind,
    rows: usize,
    data: Vec<f64>,
}

#[inline]
fn offset(i: usize) -> usize {
    i * (i + 1) / 2
}

impl TwoTimeField {
    pub fn new(dt: f64, kind: FieldKind) -> Self {
        Self {
            dt,
            kind,
            rows: 0,
            data: Vec::new(),
        }
    }

    /// Reserves room for `rows` rows up front.
    pub fn with_capacity(dt: f64, kind: FieldKind, rows: usize) -> Self {
        Self {
            dt,
            kind,
            rows: 0,
            data: Vec::with_capacity(offset(rows)),
        }
    }

    /// Bytes needed to store `rows` rows.
    pub fn bytes_for(rows: usize) -> u64 {
        offset(rows) as u64 * std::mem::size_of::<f64>() as u64
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    /// Number of completed rows.
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    /// Appends row `rows()`; `values` must have length `rows() + 1`.
    ///
    /// Causal fields have their diagonal forced to exactly 1.
    pub fn push_row(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.rows + 1, "row length must be index + 1");
        self.data.extend_from_slice(values);
        if self.kind == FieldKind::Causal {
            *self.data.last_mut().expect("row is non-empty") = 1.0;
        }
        self.rows += 1;
    }

    /// `X(i, 0..=i)`.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[offset(i)..offset(i + 1)]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[offset(i)..offset(i + 1)]
    }

    /// Reads `X(i, j)` for any pair of stored indices.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j <= i {
            self.data[offset(i) + j]
        } else {
            match self.kind {
                FieldKind::Symmetric => self.data[offset(j) + i],
                FieldKind::Causal => 0.0,
            }
        }
    }

    /// Writes `X(i, j)`; on symmetric fields `(j, i)` aliases the same slot.
    ///
    /// # Panics
    /// Writing above the diagonal of a causal field, or its diagonal.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let (a, b) = if j <= i { (i, j) } else { (j, i) };
        if self.kind == FieldKind::Causal {
            assert!(j < i, "causal fields are fixed on and above the diagonal");
        }
        self.data[offset(a) + b] = value;
    }

    /// Shortens the field to its first `rows` rows.
    pub fn truncate(&mut self, rows: usize) {
        if rows < self.rows {
            self.rows = rows;
            self.data.truncate(offset(rows));
        }
    }

    /// Raw lower-triangular storage.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Applies `f` to every stored entry.
    pub fn map_in_place(&mut self, f: impl Fn(f64) -> f64) {
        for v in &mut self.data {
            *v = f(*v);
        }
        if self.kind == FieldKind::Causal {
            for i in 0..self.rows {
                self.data[offset(i) + i] = 1.0;
            }
        }
    }

    /// Replaces the grid step, leaving values untouched.
    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }
}
