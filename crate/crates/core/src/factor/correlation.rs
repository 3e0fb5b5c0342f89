//! Pearson correlation among citing variables.
//!
//! Counts are integers, so co-moments are accumulated exactly and the
//! centered numerator `n·Σxy − Σx·Σy` is formed in 128-bit arithmetic before
//! the single rounding to `f64`. The result is independent of summation
//! order and thread count.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{CitationMatrix, JournalId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    variables: Vec<JournalId>,
    values: Array2<f64>,
}

impl CorrelationMatrix {
    /// Wraps a square matrix; symmetry and the unit diagonal are checked by
    /// the consumers that rely on them.
    pub fn new(variables: Vec<JournalId>, values: Array2<f64>) -> Result<Self> {
        if values.nrows() != values.ncols() || values.nrows() != variables.len() {
            return Err(Error::domain(format!(
                "correlation matrix is {}x{} for {} variables",
                values.nrows(),
                values.ncols(),
                variables.len()
            )));
        }
        Ok(CorrelationMatrix { variables, values })
    }

    /// Convenience for tests and ad-hoc input: variables numbered `1..=p`.
    pub fn from_array(values: Array2<f64>) -> Result<Self> {
        let ids = (1..=values.nrows() as u64).map(JournalId).collect();
        Self::new(ids, values)
    }

    pub fn variables(&self) -> &[JournalId] {
        &self.variables
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.variables.len()
    }
}

pub fn correlation(m: &CitationMatrix) -> Result<CorrelationMatrix> {
    let n = m.n_cases() as i128;
    let p = m.n_vars();
    let moments = m.column_moments();
    let spread: Vec<i128> = moments
        .iter()
        .map(|&(s, q)| n * q as i128 - (s as i128) * (s as i128))
        .collect();
    let degenerate: Vec<JournalId> = spread
        .iter()
        .zip(m.variables())
        .filter(|(d, _)| **d <= 0)
        .map(|(_, id)| *id)
        .collect();
    if !degenerate.is_empty() {
        return Err(Error::DegenerateVariables(degenerate));
    }
    let root: Vec<f64> = spread.iter().map(|&d| (d as f64).sqrt()).collect();
    let columns = m.columns();

    // Upper triangle, one variable row per task.
    let upper: Vec<Vec<f64>> = (0..p)
        .into_par_iter()
        .map(|j| {
            let mut co = vec![0u128; p - j];
            for &(i, c) in &columns[j] {
                for (l, c2) in m.row(i) {
                    if l >= j {
                        co[l - j] += c as u128 * c2 as u128;
                    }
                }
            }
            let sj = moments[j].0 as i128;
            co.iter()
                .enumerate()
                .map(|(off, &sxy)| {
                    let l = j + off;
                    if off == 0 {
                        return 1.0;
                    }
                    let num = n * sxy as i128 - sj * moments[l].0 as i128;
                    (num as f64 / (root[j] * root[l])).clamp(-1.0, 1.0)
                })
                .collect()
        })
        .collect();

    let mut values = Array2::zeros((p, p));
    for (j, row) in upper.into_iter().enumerate() {
        for (off, r) in row.into_iter().enumerate() {
            values[[j, j + off]] = r;
            values[[j + off, j]] = r;
        }
    }
    CorrelationMatrix::new(m.variables().to_vec(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn matrix(rows: &[&[u64]]) -> CitationMatrix {
        let n = rows.len();
        let p = rows[0].len();
        let mut cells = Vec::new();
        for (i, r) in rows.iter().enumerate() {
            for (j, &c) in r.iter().enumerate() {
                if c > 0 {
                    cells.push((JournalId(i as u64 + 1), JournalId(j as u64 + 1), c));
                }
            }
        }
        CitationMatrix::from_cells(
            (1..=n as u64).map(JournalId),
            (1..=p as u64).map(JournalId),
            cells,
            BTreeMap::new(),
        )
        .unwrap()
    }

    #[test]
    fn proportional_and_opposite_columns() {
        // col 2 = 2 * col 1; col 3 = 4 - col 1
        let m = matrix(&[&[1, 2, 3], &[3, 6, 1], &[2, 4, 2], &[4, 8, 0]]);
        let r = correlation(&m).unwrap();
        let v = r.values();
        assert_eq!(v[[0, 0]], 1.0);
        assert!((v[[0, 1]] - 1.0).abs() < 1e-15);
        assert!((v[[0, 2]] + 1.0).abs() < 1e-15);
        assert_eq!(v[[1, 2]], v[[2, 1]]);
    }

    #[test]
    fn matches_pairwise_brute_force() {
        let m = matrix(&[
            &[0, 5, 1, 2],
            &[3, 0, 0, 7],
            &[1, 1, 4, 0],
            &[6, 2, 0, 1],
            &[0, 9, 3, 3],
        ]);
        let r = correlation(&m).unwrap();
        let cols: Vec<Vec<f64>> = (0..4)
            .map(|j| (0..5).map(|i| m.get(i, j) as f64).collect())
            .collect();
        for a in 0..4 {
            for b in 0..4 {
                let ma = cols[a].iter().sum::<f64>() / 5.0;
                let mb = cols[b].iter().sum::<f64>() / 5.0;
                let cov: f64 = cols[a]
                    .iter()
                    .zip(&cols[b])
                    .map(|(x, y)| (x - ma) * (y - mb))
                    .sum();
                let va: f64 = cols[a].iter().map(|x| (x - ma).powi(2)).sum();
                let vb: f64 = cols[b].iter().map(|y| (y - mb).powi(2)).sum();
                let want = cov / (va * vb).sqrt();
                assert!((r.values()[[a, b]] - want).abs() < 1e-12, "({a},{b})");
            }
        }
    }

    #[test]
    fn constant_column_is_degenerate() {
        let m = matrix(&[&[1, 2], &[1, 3]]);
        assert!(
            matches!(correlation(&m), Err(Error::DegenerateVariables(v)) if v == vec![JournalId(1)])
        );
    }
}
