//! Journal maps as data: cosine-similarity graphs and factor-score scatters.
//!
//! Cosines are taken on raw citation counts, not z-scores, so the maps show
//! the vector space of citation patterns rather than repeating the
//! correlation structure the factor model already uses.

mod pajek;
mod scatter;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use pajek::{export_pajek, parse_pajek, read_pajek, write_pajek};
pub use scatter::{scatter_scores, AxisRule, Scale, ScatterPoint, ScatterSeries};

use crate::error::{Error, Result};
use crate::matrix::{CitationMatrix, JournalId};

/// Which journals are compared, and by which profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Cited journals, compared by who cites them.
    #[default]
    CitedRows,
    /// Citing journals, compared by what they cite.
    CitingColumns,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pub ids: Vec<JournalId>,
    pub labels: Vec<String>,
    /// Symmetric, unit diagonal.
    pub values: Array2<f64>,
    /// Journals with an all-zero profile, left out.
    pub excluded_zero: Vec<JournalId>,
    pub orientation: Orientation,
}

impl SimilarityMatrix {
    /// Wraps an arbitrary symmetric similarity matrix.
    pub fn new(ids: Vec<JournalId>, labels: Vec<String>, values: Array2<f64>) -> Result<Self> {
        let n = ids.len();
        if labels.len() != n || values.dim() != (n, n) {
            return Err(Error::domain(format!(
                "{n} ids, {} labels and a {:?} matrix do not match",
                labels.len(),
                values.dim()
            )));
        }
        for i in 0..n {
            for j in 0..i {
                if values[[i, j]] != values[[j, i]] {
                    return Err(Error::domain(format!(
                        "similarity not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(SimilarityMatrix {
            ids,
            labels,
            values,
            excluded_zero: Vec::new(),
            orientation: Orientation::default(),
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn warnings(&self) -> Vec<String> {
        if self.excluded_zero.is_empty() {
            return Vec::new();
        }
        vec![format!(
            "{} journals with an all-zero profile excluded from the similarity matrix",
            self.excluded_zero.len()
        )]
    }
}

/// Cosine similarity between journal count profiles.
///
/// Dot products are accumulated exactly in integers; only the final
/// normalization is floating point.
pub fn cosine_similarity(m: &CitationMatrix, orientation: Orientation) -> SimilarityMatrix {
    let rows: Vec<Vec<(usize, u64)>> = (0..m.n_cases()).map(|i| m.row(i).collect()).collect();
    let cols = m.columns();
    let (ids, vectors, inverse) = match orientation {
        Orientation::CitedRows => (m.cases(), &rows, &cols),
        Orientation::CitingColumns => (m.variables(), &cols, &rows),
    };

    let keep: Vec<usize> = (0..ids.len()).filter(|&i| !vectors[i].is_empty()).collect();
    let excluded_zero = (0..ids.len())
        .filter(|&i| vectors[i].is_empty())
        .map(|i| ids[i])
        .collect();
    let mut slot = vec![usize::MAX; ids.len()];
    for (s, &i) in keep.iter().enumerate() {
        slot[i] = s;
    }
    let norms: Vec<f64> = keep
        .iter()
        .map(|&i| {
            let sq: u128 = vectors[i]
                .iter()
                .map(|&(_, c)| (c as u128) * (c as u128))
                .sum();
            (sq as f64).sqrt()
        })
        .collect();

    let n = keep.len();
    let rows_out: Vec<Vec<f64>> = keep
        .par_iter()
        .enumerate()
        .map(|(a, &i)| {
            let mut dots = vec![0u128; n];
            for &(j, c) in &vectors[i] {
                for &(other, d) in &inverse[j] {
                    let b = slot[other];
                    if b != usize::MAX {
                        dots[b] += (c as u128) * (d as u128);
                    }
                }
            }
            (0..n)
                .map(|b| {
                    if a == b {
                        1.0
                    } else {
                        (dots[b] as f64 / (norms[a] * norms[b])).min(1.0)
                    }
                })
                .collect()
        })
        .collect();
    let mut values = Array2::zeros((n, n));
    for (a, row) in rows_out.into_iter().enumerate() {
        for (b, v) in row.into_iter().enumerate() {
            values[[a, b]] = v;
        }
    }
    // The two triangles are computed from the same integers but divided in
    // a different order; force exact symmetry.
    for a in 0..n {
        for b in 0..a {
            values[[b, a]] = values[[a, b]];
        }
    }

    SimilarityMatrix {
        ids: keep.iter().map(|&i| ids[i]).collect(),
        labels: keep.iter().map(|&i| m.display_label(ids[i])).collect(),
        values,
        excluded_zero,
        orientation,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphNode {
    pub id: JournalId,
    pub label: String,
}

/// Undirected edge between node indices `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CosineGraph {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<Edge>,
    /// Unknown for graphs read back from a file.
    pub isolate_threshold: Option<f64>,
    pub edge_threshold: Option<f64>,
    /// Journals dropped as isolates.
    pub removed: Vec<JournalId>,
}

impl CosineGraph {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }
}

/// Drops isolates, then links every remaining pair at or above `edge_threshold`.
///
/// A node is an isolate when none of its off-diagonal similarities reaches
/// `isolate_threshold` in the unfiltered matrix.
pub fn build_graph(
    sim: &SimilarityMatrix,
    isolate_threshold: f64,
    edge_threshold: f64,
) -> Result<CosineGraph> {
    if !(0.0 <= isolate_threshold && isolate_threshold <= edge_threshold && edge_threshold <= 1.0) {
        return Err(Error::domain(format!(
            "thresholds must satisfy 0 <= isolate ({isolate_threshold}) <= edge ({edge_threshold}) <= 1"
        )));
    }
    let n = sim.len();
    let mut kept = Vec::with_capacity(n);
    let mut removed = Vec::new();
    for i in 0..n {
        let max = (0..n)
            .filter(|&j| j != i)
            .map(|j| sim.values[[i, j]])
            .fold(f64::NEG_INFINITY, f64::max);
        if max >= isolate_threshold {
            kept.push(i);
        } else {
            removed.push(sim.ids[i]);
        }
    }
    if kept.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let mut edges = Vec::new();
    for (a, &i) in kept.iter().enumerate() {
        for (b, &j) in kept.iter().enumerate().skip(a + 1) {
            let w = sim.values[[i, j]];
            if w >= edge_threshold {
                edges.push(Edge {
                    i: a,
                    j: b,
                    weight: w,
                });
            }
        }
    }
    Ok(CosineGraph {
        nodes: kept
            .iter()
            .map(|&i| GraphNode {
                id: sim.ids[i],
                label: sim.labels[i].clone(),
            })
            .collect(),
        edges,
        isolate_threshold: Some(isolate_threshold),
        edge_threshold: Some(edge_threshold),
        removed,
    })
}
