use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix used for assignment panels, outcomes and step
/// probabilities. Rows index units, columns index periods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid<T> {
    n_rows: usize,
    n_cols: usize,
    data: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn filled(n_rows: usize, n_cols: usize, value: T) -> Self {
        Self { n_rows, n_cols, data: vec![value; n_rows * n_cols] }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::Dimension("ragged rows in grid".into()));
        }
        Ok(Self { n_rows, n_cols, data: rows.into_iter().flatten().collect() })
    }
}

impl<T> Grid<T> {
    pub fn from_vec(n_rows: usize, n_cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != n_rows * n_cols {
            return Err(Error::Dimension(format!(
                "grid data length {} does not match {n_rows}x{n_cols}",
                data.len()
            )));
        }
        Ok(Self { n_rows, n_cols, data })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> &T {
        &self.data[row * self.n_cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: T) {
        self.data[row * self.n_cols + col] = value;
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[T] {
        &self.data[row * self.n_cols..(row + 1) * self.n_cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks_exact(self.n_cols.max(1))
    }

    pub fn values(&self) -> &[T] {
        &self.data
    }
}

impl Grid<f64> {
    pub fn mean(&self) -> f64 {
        crate::util::pairwise_sum(&self.data) / self.data.len() as f64
    }

    pub fn row_means(&self) -> Vec<f64> {
        self.rows().map(|r| crate::util::pairwise_sum(r) / r.len() as f64).collect()
    }

    pub fn col_means(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_cols];
        for r in self.rows() {
            for (acc, v) in out.iter_mut().zip(r) {
                *acc += v;
            }
        }
        for acc in &mut out {
            *acc /= self.n_rows as f64;
        }
        out
    }
}
