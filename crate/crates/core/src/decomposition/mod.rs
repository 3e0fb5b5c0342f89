//! From factor models to journal classifications.
//!
//! A factor is characterized by the variable with the highest loading and the
//! case with the highest score. The journals scoring strictly above zero on a
//! factor form its classification set, which can then be refactored on its
//! own ([`drill_down`]). Sets from one orthogonal model may overlap; nothing
//! here enforces a partition.

mod compare;
mod drill;
mod environment;

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

pub use compare::{compare_sets, ComparisonReport, PairJaccard, Region};
pub use drill::{drill_down, DecompositionNode, DrillOptions};
pub use environment::{local_environment, EnvironmentRule};

use crate::error::{Error, Result};
use crate::factor::{FactorModel, ScoreMatrix};
use crate::matrix::JournalId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopJournal {
    pub id: JournalId,
    pub label: String,
    pub value: f64,
    /// Another journal shares the maximum; the lowest id was chosen.
    pub tie: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorDesignation {
    /// 1-based factor rank.
    pub factor: usize,
    pub top_loading: TopJournal,
    pub top_score: TopJournal,
    pub n_positive_scores: usize,
    /// Cases with a score of exactly zero (neither in nor out).
    pub n_zero_scores: usize,
    /// Human-assigned name, if any.
    pub label: Option<String>,
}

/// One designation per factor: top-loading variable, top-scoring case and
/// the number of cases scoring above zero.
pub fn designate(
    model: &FactorModel,
    scores: &ScoreMatrix,
    labels: &BTreeMap<JournalId, String>,
) -> Result<Vec<FactorDesignation>> {
    if scores.k() != model.k() {
        return Err(Error::domain(format!(
            "scores have {} factors, model has {}",
            scores.k(),
            model.k()
        )));
    }
    let name = |id: JournalId| labels.get(&id).cloned().unwrap_or_else(|| id.to_string());
    let vars = model.variables();
    Ok((0..model.k())
        .map(|j| {
            let (li, ltie) = argmax_by_id(vars, model.loadings.values.column(j).iter().copied());
            let (si, stie) = argmax_by_id(&scores.cases, scores.values.column(j).iter().copied());
            let col = scores.values.column(j);
            FactorDesignation {
                factor: j + 1,
                top_loading: TopJournal {
                    id: vars[li],
                    label: name(vars[li]),
                    value: model.loadings.values[[li, j]],
                    tie: ltie,
                },
                top_score: TopJournal {
                    id: scores.cases[si],
                    label: labels
                        .get(&scores.cases[si])
                        .cloned()
                        .unwrap_or_else(|| scores.labels[si].clone()),
                    value: scores.values[[si, j]],
                    tie: stie,
                },
                n_positive_scores: col.iter().filter(|&&v| v > 0.0).count(),
                n_zero_scores: col.iter().filter(|&&v| v == 0.0).count(),
                label: None,
            }
        })
        .collect())
}

/// Index of the maximum; ties resolved to the smallest id.
fn argmax_by_id(ids: &[JournalId], values: impl Iterator<Item = f64>) -> (usize, bool) {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    let mut tie = false;
    for (i, v) in values.enumerate() {
        if v > best_val {
            best = i;
            best_val = v;
            tie = false;
        } else if v == best_val {
            tie = true;
            if ids[i] < ids[best] {
                best = i;
            }
        }
    }
    (best, tie)
}

/// Attaches human-assigned factor names (1-based factor index → name).
pub fn apply_factor_labels(
    designations: &mut [FactorDesignation],
    names: &BTreeMap<usize, String>,
) {
    for d in designations {
        if let Some(n) = names.get(&d.factor) {
            d.label = Some(n.clone());
        }
    }
}

/// Reads a `factor \t name` sidecar.
pub fn read_factor_labels<R: BufRead>(source: R) -> Result<BTreeMap<usize, String>> {
    let mut names = BTreeMap::new();
    for (n, line) in source.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let parsed = line
            .split_once('\t')
            .and_then(|(f, name)| Some((f.trim().parse::<usize>().ok()?, name.trim())));
        match parsed {
            Some((f, name)) if !name.is_empty() => {
                names.insert(f, name.to_string());
            }
            _ => {
                return Err(Error::Parse {
                    line: n + 1,
                    message: "expected `factor<TAB>name`".into(),
                })
            }
        }
    }
    Ok(names)
}

/// Writes designations as a TSV mirroring a factor summary table.
pub fn write_designations_tsv<W: Write>(ds: &[FactorDesignation], mut out: W) -> Result<()> {
    writeln!(
        out,
        "factor\tlabel\ttop_loading_id\ttop_loading_label\ttop_loading\t\
         top_score_id\ttop_score_label\ttop_score\tn_positive"
    )?;
    for d in ds {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            d.factor,
            d.label.as_deref().unwrap_or(""),
            d.top_loading.id,
            d.top_loading.label,
            d.top_loading.value,
            d.top_score.id,
            d.top_score.label,
            d.top_score.value,
            d.n_positive_scores
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Factor {
        /// 1-based factor index.
        factor: usize,
        rotated: bool,
        /// Free-form reference to the model (e.g. its file name).
        model: String,
    },
    External {
        source: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationSet {
    pub label: String,
    pub members: BTreeSet<JournalId>,
    pub provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct SetHeader {
    label: String,
    provenance: Provenance,
    size: usize,
}

impl ClassificationSet {
    pub fn external(label: impl Into<String>, members: BTreeSet<JournalId>) -> Result<Self> {
        let label = label.into();
        if members.is_empty() {
            return Err(Error::EmptySelection(format!(
                "set {label:?} has no members"
            )));
        }
        Ok(ClassificationSet {
            provenance: Provenance::External {
                source: label.clone(),
            },
            label,
            members,
        })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Newline-delimited ids after a `# {json}` provenance header.
    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        let header = SetHeader {
            label: self.label.clone(),
            provenance: self.provenance.clone(),
            size: self.members.len(),
        };
        writeln!(out, "# {}", serde_json::to_string(&header)?)?;
        for id in &self.members {
            writeln!(out, "{id}")?;
        }
        Ok(())
    }

    /// Reads a set file. A plain id list without header is accepted as an
    /// external set labeled `default_label`.
    pub fn read<R: BufRead>(source: R, default_label: &str) -> Result<Self> {
        let mut header: Option<SetHeader> = None;
        let mut members = BTreeSet::new();
        for (n, line) in source.lines().enumerate() {
            let line = line?;
            let text = line.trim();
            if text.is_empty() {
                continue;
            }
            if let Some(rest) = text.strip_prefix('#') {
                if n == 0 {
                    if let Ok(h) = serde_json::from_str::<SetHeader>(rest.trim()) {
                        header = Some(h);
                    }
                }
                continue;
            }
            let id = text.parse::<JournalId>().map_err(|e| Error::Parse {
                line: n + 1,
                message: format!("bad id {text:?}: {e}"),
            })?;
            members.insert(id);
        }
        match header {
            Some(h) => {
                if members.is_empty() {
                    return Err(Error::EmptySelection(format!(
                        "set {:?} has no members",
                        h.label
                    )));
                }
                Ok(ClassificationSet {
                    label: h.label,
                    members,
                    provenance: h.provenance,
                })
            }
            None => ClassificationSet::external(default_label, members),
        }
    }
}

/// Cases scoring strictly above zero on `factor` (1-based).
pub fn select_positive(
    scores: &ScoreMatrix,
    factor: usize,
    label: impl Into<String>,
) -> Result<ClassificationSet> {
    if factor == 0 || factor > scores.k() {
        return Err(Error::domain(format!(
            "factor {factor} out of range 1..={}",
            scores.k()
        )));
    }
    let label = label.into();
    let members: BTreeSet<JournalId> = scores
        .cases
        .iter()
        .zip(scores.values.column(factor - 1))
        .filter(|(_, &v)| v > 0.0)
        .map(|(&id, _)| id)
        .collect();
    if members.is_empty() {
        return Err(Error::EmptySelection(format!(
            "no case scores above zero on factor {factor}"
        )));
    }
    Ok(ClassificationSet {
        label,
        members,
        provenance: Provenance::Factor {
            factor,
            rotated: scores.rotated,
            model: String::new(),
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SizeStats {
    pub mean: f64,
    /// Sample (n − 1) standard deviation.
    pub sd: f64,
}

/// Mean and sample standard deviation of the positive-score counts.
pub fn size_stats(designations: &[FactorDesignation]) -> Result<SizeStats> {
    let counts: Vec<usize> = designations.iter().map(|d| d.n_positive_scores).collect();
    count_stats(&counts)
}

pub fn count_stats(counts: &[usize]) -> Result<SizeStats> {
    if counts.len() < 2 {
        return Err(Error::domain("size statistics need at least two factors"));
    }
    let n = counts.len() as f64;
    let mean = counts.iter().map(|&c| c as f64).sum::<f64>() / n;
    let ss: f64 = counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum();
    Ok(SizeStats {
        mean,
        sd: (ss / (n - 1.0)).sqrt(),
    })
}
