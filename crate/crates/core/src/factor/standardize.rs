//! Column z-scores of a sparse count matrix, kept implicit.
//!
//! A z-scored sparse column is dense (every zero becomes `-mean/sd`), so the
//! standardized matrix is represented as the sparse counts plus per-column
//! mean and standard deviation. Products with it are evaluated as
//! `X·S⁻¹·b − 1·(μᵀ·S⁻¹·b)`.

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{population_variance, CitationMatrix, JournalId};

#[derive(Debug, Clone)]
pub struct Standardized<'a> {
    matrix: &'a CitationMatrix,
    mean: Vec<f64>,
    sd: Vec<f64>,
}

/// Z-scores every citing column with population moments (divide by n).
pub fn standardize(m: &CitationMatrix) -> Result<Standardized<'_>> {
    let n = m.n_cases();
    let moments = m.column_moments();
    let mut degenerate = Vec::new();
    let mut mean = Vec::with_capacity(m.n_vars());
    let mut sd = Vec::with_capacity(m.n_vars());
    for (j, &(s, q)) in moments.iter().enumerate() {
        let var = population_variance(n, s, q);
        if var.is_nan() || var <= 0.0 {
            degenerate.push(m.variables()[j]);
        }
        mean.push(if n > 0 { s as f64 / n as f64 } else { 0.0 });
        sd.push(var.sqrt());
    }
    if !degenerate.is_empty() {
        return Err(Error::DegenerateVariables(degenerate));
    }
    Ok(Standardized {
        matrix: m,
        mean,
        sd,
    })
}

impl<'a> Standardized<'a> {
    pub fn matrix(&self) -> &'a CitationMatrix {
        self.matrix
    }

    pub fn n_cases(&self) -> usize {
        self.matrix.n_cases()
    }

    pub fn n_vars(&self) -> usize {
        self.matrix.n_vars()
    }

    pub fn variables(&self) -> &[JournalId] {
        self.matrix.variables()
    }

    pub fn means(&self) -> &[f64] {
        &self.mean
    }

    pub fn sds(&self) -> &[f64] {
        &self.sd
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        (self.matrix.get(i, j) as f64 - self.mean[j]) / self.sd[j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_cases()).map(|i| self.value(i, j)).collect()
    }

    /// Materializes the dense z-score matrix. Only for small inputs.
    pub fn to_dense(&self) -> Array2<f64> {
        let (n, p) = (self.n_cases(), self.n_vars());
        let mut z = Array2::zeros((n, p));
        for j in 0..p {
            let base = -self.mean[j] / self.sd[j];
            z.column_mut(j).fill(base);
        }
        for i in 0..n {
            for (j, c) in self.matrix.row(i) {
                z[[i, j]] = (c as f64 - self.mean[j]) / self.sd[j];
            }
        }
        z
    }

    /// `Z · x` for a length-p vector.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let scaled: Vec<f64> = x.iter().zip(&self.sd).map(|(v, s)| v / s).collect();
        let offset: f64 = scaled.iter().zip(&self.mean).map(|(v, m)| v * m).sum();
        (0..self.n_cases())
            .map(|i| {
                let mut acc = 0.0;
                for (j, c) in self.matrix.row(i) {
                    acc += c as f64 * scaled[j];
                }
                acc - offset
            })
            .collect()
    }

    /// `Zᵀ · w` for a length-n vector.
    pub fn apply_t(&self, w: &[f64]) -> Vec<f64> {
        let mut xt = vec![0.0; self.n_vars()];
        for (i, &wi) in w.iter().enumerate() {
            for (j, c) in self.matrix.row(i) {
                xt[j] += c as f64 * wi;
            }
        }
        let wsum: f64 = w.iter().sum();
        xt.iter()
            .zip(self.mean.iter().zip(&self.sd))
            .map(|(x, (m, s))| (x - m * wsum) / s)
            .collect()
    }

    /// `Z · B` for a p × k matrix, one case row at a time.
    pub fn multiply(&self, b: &Array2<f64>) -> Array2<f64> {
        let (p, k) = b.dim();
        assert_eq!(p, self.n_vars(), "coefficient rows must match variables");
        let mut scaled = b.clone();
        for (j, mut row) in scaled.rows_mut().into_iter().enumerate() {
            row.mapv_inplace(|v| v / self.sd[j]);
        }
        let mut offset = vec![0.0; k];
        for (j, row) in scaled.rows().into_iter().enumerate() {
            for (o, v) in offset.iter_mut().zip(row) {
                *o += self.mean[j] * v;
            }
        }
        let rows: Vec<Vec<f64>> = (0..self.n_cases())
            .into_par_iter()
            .map(|i| {
                let mut acc = vec![0.0; k];
                for (j, c) in self.matrix.row(i) {
                    let c = c as f64;
                    for (a, v) in acc.iter_mut().zip(scaled.row(j)) {
                        *a += c * v;
                    }
                }
                for (a, o) in acc.iter_mut().zip(&offset) {
                    *a -= o;
                }
                acc
            })
            .collect();
        let mut out = Array2::zeros((self.n_cases(), k));
        for (i, row) in rows.into_iter().enumerate() {
            for (f, v) in row.into_iter().enumerate() {
                out[[i, f]] = v;
            }
        }
        out
    }
}

/// Population z-scores of a dense column.
pub fn zscore(values: &[f64]) -> Result<Vec<f64>> {
    let n = values.len() as f64;
    if values.is_empty() {
        return Err(Error::domain("cannot standardize an empty column"));
    }
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if var.is_nan() || var <= 0.0 {
        return Err(Error::domain("cannot standardize a constant column"));
    }
    let sd = var.sqrt();
    Ok(values.iter().map(|v| (v - mean) / sd).collect())
}
