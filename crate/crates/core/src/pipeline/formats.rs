//! On-disk forms of factor results: TSV tables and a JSON model bundle.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor::{EigenSpectrum, FactorModel, LoadingsMatrix, ScoreMatrix};
use crate::matrix::JournalId;

/// Column prefix: `F` for rotated factors, `PC` for principal components.
fn factor_prefix(rotated: bool) -> &'static str {
    if rotated {
        "F"
    } else {
        "PC"
    }
}

pub fn write_eigenvalues_tsv<W: Write>(s: &EigenSpectrum, mut out: W) -> Result<()> {
    writeln!(out, "rank\teigenvalue\tpct\tcum_pct")?;
    let mut cum = 0.0;
    for (r, (&ev, &ex)) in s.eigenvalues().iter().zip(s.explained()).enumerate() {
        cum += ex * 100.0;
        writeln!(out, "{}\t{}\t{}\t{}", r + 1, ev, ex * 100.0, cum)?;
    }
    Ok(())
}

fn label_of(labels: &BTreeMap<JournalId, String>, id: JournalId) -> String {
    labels.get(&id).cloned().unwrap_or_else(|| id.to_string())
}

/// Complete loadings, variables × factors.
pub fn write_loadings_tsv<W: Write>(
    l: &LoadingsMatrix,
    labels: &BTreeMap<JournalId, String>,
    mut out: W,
) -> Result<()> {
    let p = factor_prefix(l.rotated);
    let head: Vec<String> = (1..=l.k()).map(|j| format!("{p}{j}")).collect();
    writeln!(out, "id\tlabel\t{}", head.join("\t"))?;
    for (i, &id) in l.variables.iter().enumerate() {
        let row: Vec<String> = l.values.row(i).iter().map(|v| v.to_string()).collect();
        writeln!(out, "{id}\t{}\t{}", label_of(labels, id), row.join("\t"))?;
    }
    Ok(())
}

/// Loadings for reading: rows grouped by their highest-loading factor and
/// sorted within groups, entries below `suppress_below` in magnitude blank.
pub fn write_loadings_text<W: Write>(
    l: &LoadingsMatrix,
    labels: &BTreeMap<JournalId, String>,
    suppress_below: f64,
    mut out: W,
) -> Result<()> {
    let k = l.k();
    let best = |i: usize| {
        let row = l.values.row(i);
        let j = (0..k).fold(0, |b, j| if row[j].abs() > row[b].abs() { j } else { b });
        (j, row[j].abs())
    };
    let mut order: Vec<usize> = (0..l.variables.len()).collect();
    order.sort_by(|&a, &b| {
        let (fa, va) = best(a);
        let (fb, vb) = best(b);
        fa.cmp(&fb).then(vb.total_cmp(&va)).then(a.cmp(&b))
    });
    let names: Vec<String> = l.variables.iter().map(|&id| label_of(labels, id)).collect();
    let width = names
        .iter()
        .map(|n| n.chars().count())
        .max()
        .unwrap_or(0)
        .clamp(8, 40);
    let p = factor_prefix(l.rotated);
    write!(out, "{:width$}", "")?;
    for j in 1..=k {
        write!(out, " {:>7}", format!("{p}{j}"))?;
    }
    writeln!(out)?;
    for i in order {
        let name: String = names[i].chars().take(width).collect();
        write!(out, "{name:width$}")?;
        for &v in l.values.row(i) {
            if v.abs() < suppress_below {
                write!(out, " {:>7}", "")?;
            } else {
                write!(out, " {v:>7.3}")?;
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn write_scores_tsv<W: Write>(s: &ScoreMatrix, mut out: W) -> Result<()> {
    let p = factor_prefix(s.rotated);
    let head: Vec<String> = (1..=s.k()).map(|j| format!("{p}{j}")).collect();
    writeln!(out, "id\tlabel\t{}", head.join("\t"))?;
    for (i, id) in s.cases.iter().enumerate() {
        let row: Vec<String> = s.values.row(i).iter().map(|v| v.to_string()).collect();
        writeln!(out, "{id}\t{}\t{}", s.labels[i], row.join("\t"))?;
    }
    Ok(())
}

/// Reads a scores table written by [`write_scores_tsv`].
pub fn read_scores_tsv<R: BufRead>(source: R) -> Result<ScoreMatrix> {
    let mut lines = source.lines().enumerate();
    let header = match lines.next() {
        Some((_, l)) => l?,
        None => return Err(Error::EmptyCorpus),
    };
    let cols: Vec<&str> = header.split('\t').collect();
    if cols.len() < 3 || cols[0] != "id" || cols[1] != "label" {
        return Err(Error::Parse {
            line: 1,
            message: "expected header `id<TAB>label<TAB>F1...`".into(),
        });
    }
    let k = cols.len() - 2;
    let rotated = cols[2].starts_with('F');
    let (mut cases, mut labels, mut values) = (Vec::new(), Vec::new(), Vec::new());
    for (n, line) in lines {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let bad = |message: String| Error::Parse {
            line: n + 1,
            message,
        };
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != k + 2 {
            return Err(bad(format!("expected {} fields, found {}", k + 2, f.len())));
        }
        cases.push(
            f[0].parse::<JournalId>()
                .map_err(|_| bad(format!("bad id `{}`", f[0])))?,
        );
        labels.push(f[1].to_string());
        for v in &f[2..] {
            values.push(
                v.parse::<f64>()
                    .map_err(|_| bad(format!("bad score `{v}`")))?,
            );
        }
    }
    let n = cases.len();
    Ok(ScoreMatrix {
        cases,
        labels,
        values: Array2::from_shape_vec((n, k), values).expect("row lengths checked"),
        rotated,
        ridge: None,
    })
}

const MODEL_FORMAT: &str = "factor-atlas-model/1";

/// A fitted model with its scores, the input to designation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub model: FactorModel,
    pub scores: Option<ScoreMatrix>,
    pub labels: BTreeMap<JournalId, String>,
}

impl ModelFile {
    pub fn new(
        model: FactorModel,
        scores: Option<ScoreMatrix>,
        labels: BTreeMap<JournalId, String>,
    ) -> Self {
        ModelFile {
            format: MODEL_FORMAT.into(),
            model,
            scores,
            labels,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)? + "\n")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let f: ModelFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if f.format != MODEL_FORMAT {
            return Err(Error::domain(format!(
                "unsupported model format `{}`",
                f.format
            )));
        }
        Ok(f)
    }
}
