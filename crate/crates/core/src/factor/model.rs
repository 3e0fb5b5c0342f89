use std::collections::BTreeMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::JournalId;

/// Descending eigenvalues of a correlation matrix.
///
/// A spectrum is *complete* when it holds all `n_vars` eigenvalues; the
/// Krylov extraction route only computes the leading ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSpectrum {
    eigenvalues: Vec<f64>,
    explained: Vec<f64>,
    n_vars: usize,
}

impl EigenSpectrum {
    pub fn new(eigenvalues: Vec<f64>, n_vars: usize) -> Self {
        let explained = eigenvalues.iter().map(|l| l / n_vars as f64).collect();
        EigenSpectrum {
            eigenvalues,
            explained,
            n_vars,
        }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Share of total variance per eigenvalue (`λ / n_vars`).
    pub fn explained(&self) -> &[f64] {
        &self.explained
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.eigenvalues.len() == self.n_vars
    }

    pub fn truncated(&self, k: usize) -> Self {
        EigenSpectrum::new(self.eigenvalues[..k.min(self.len())].to_vec(), self.n_vars)
    }
}

/// Number of eigenvalues strictly greater than one.
pub fn kaiser_count(s: &EigenSpectrum) -> usize {
    s.eigenvalues().iter().filter(|&&l| l > 1.0).count()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScreeRow {
    pub rank: usize,
    pub eigenvalue: f64,
    pub explained: f64,
    pub cumulative: f64,
}

/// First `n` entries of the spectrum with running explained share.
pub fn scree(s: &EigenSpectrum, n: usize) -> Result<Vec<ScreeRow>> {
    if n > s.len() {
        return Err(Error::domain(format!(
            "scree of {n} entries requested from a spectrum of {}",
            s.len()
        )));
    }
    let mut cumulative = 0.0;
    Ok(s.eigenvalues()
        .iter()
        .zip(s.explained())
        .take(n)
        .enumerate()
        .map(|(i, (&eigenvalue, &explained))| {
            cumulative += explained;
            ScreeRow {
                rank: i + 1,
                eigenvalue,
                explained,
                cumulative,
            }
        })
        .collect())
}

/// Variables × factors loadings (correlations of variables with factors).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadingsMatrix {
    pub variables: Vec<JournalId>,
    pub values: Array2<f64>,
    pub rotated: bool,
}

impl LoadingsMatrix {
    pub fn k(&self) -> usize {
        self.values.ncols()
    }

    /// Row sums of squares.
    pub fn communalities(&self) -> Vec<f64> {
        self.values
            .rows()
            .into_iter()
            .map(|r| r.iter().map(|v| v * v).sum())
            .collect()
    }

    /// Column sums of squares; for unrotated loadings these are the eigenvalues.
    pub fn column_ss(&self) -> Vec<f64> {
        self.values
            .columns()
            .into_iter()
            .map(|c| c.iter().map(|v| v * v).sum())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarimaxRotation {
    pub kaiser_normalized: bool,
    pub sweeps: usize,
    pub converged: bool,
    /// Final raw varimax criterion on the (normalized) loadings.
    pub criterion: f64,
    /// k × k orthogonal transform: rotated = unrotated · transform.
    pub transform: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorModel {
    pub spectrum: EigenSpectrum,
    pub unrotated: LoadingsMatrix,
    /// Rotated loadings when `rotation` is set, otherwise equal to `unrotated`.
    pub loadings: LoadingsMatrix,
    pub rotation: Option<VarimaxRotation>,
    /// Variables × k; filled in by factor scoring.
    pub score_coefficients: Option<Array2<f64>>,
}

impl FactorModel {
    pub fn k(&self) -> usize {
        self.loadings.k()
    }

    pub fn variables(&self) -> &[JournalId] {
        &self.loadings.variables
    }

    pub fn is_rotated(&self) -> bool {
        self.rotation.is_some()
    }

    /// Leading k eigenvalues.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.spectrum.eigenvalues()[..self.k()]
    }

    /// Variance carried by each (possibly rotated) factor.
    pub fn factor_variance(&self) -> Vec<f64> {
        self.loadings.column_ss()
    }

    /// Factor indices (0-based) ordered by decreasing carried variance.
    pub fn dominant_factors(&self) -> Vec<usize> {
        let var = self.factor_variance();
        let mut idx: Vec<usize> = (0..var.len()).collect();
        idx.sort_by(|&a, &b| var[b].total_cmp(&var[a]).then(a.cmp(&b)));
        idx
    }
}

/// Cases × factors scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    pub cases: Vec<JournalId>,
    /// Display label per case (the id when unlabeled).
    pub labels: Vec<String>,
    pub values: Array2<f64>,
    pub rotated: bool,
    /// Ridge added to the correlation matrix before inversion, if any.
    pub ridge: Option<f64>,
}

impl ScoreMatrix {
    pub fn k(&self) -> usize {
        self.values.ncols()
    }

    pub fn n_cases(&self) -> usize {
        self.cases.len()
    }

    pub fn label_map(&self) -> BTreeMap<JournalId, String> {
        self.cases
            .iter()
            .copied()
            .zip(self.labels.iter().cloned())
            .collect()
    }

    pub fn case_index(&self, id: JournalId) -> Option<usize> {
        self.cases.iter().position(|&c| c == id)
    }
}
