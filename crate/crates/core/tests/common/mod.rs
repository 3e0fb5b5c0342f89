#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use factor_atlas::{CitationMatrix, JournalId};

pub fn ids(range: std::ops::Range<u64>) -> Vec<JournalId> {
    range.map(JournalId).collect()
}

/// Square matrix over journals `1..=n` from a dense count table.
pub fn square(counts: &[Vec<u64>]) -> CitationMatrix {
    let n = counts.len() as u64;
    let cells = counts.iter().enumerate().flat_map(|(i, row)| {
        row.iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(move |(j, &c)| (JournalId(i as u64 + 1), JournalId(j as u64 + 1), c))
    });
    CitationMatrix::from_cells(
        ids(1..n + 1),
        ids(1..n + 1),
        cells.collect::<Vec<_>>(),
        BTreeMap::new(),
    )
    .unwrap()
}

/// Cases `1..=rows`, variables `1001..=1000+cols`, roughly `density` filled.
pub fn random_matrix(
    rows: usize,
    cols: usize,
    density: f64,
    max: u64,
    seed: u64,
) -> CitationMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cells = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            if rng.random::<f64>() < density {
                cells.push((
                    JournalId(i as u64 + 1),
                    JournalId(1001 + j as u64),
                    rng.random_range(1..=max),
                ));
            }
        }
    }
    CitationMatrix::from_cells(
        ids(1..rows as u64 + 1),
        ids(1001..1001 + cols as u64),
        cells,
        BTreeMap::new(),
    )
    .unwrap()
}

pub fn dense(m: &CitationMatrix) -> Vec<Vec<u64>> {
    (0..m.n_cases())
        .map(|i| (0..m.n_vars()).map(|j| m.get(i, j)).collect())
        .collect()
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Population variance.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}
