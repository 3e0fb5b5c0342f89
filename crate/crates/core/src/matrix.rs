//! Aggregated journal-journal citation matrices.
//!
//! Rows are *cases* (journals in their cited role), columns are *variables*
//! (journals in their citing role). Cell `(i, j)` holds the number of
//! citations that articles in citing journal `j` give to cited journal `i`.
//! Absent cells are zeros. Storage is compressed by row with both axes in
//! ascending journal-id order, so every derived artifact is reproducible.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

/// Stable integer identity of a journal within a corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JournalId(pub u64);

impl fmt::Display for JournalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl std::str::FromStr for JournalId {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        s.trim().parse().map(JournalId)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JournalRecord {
    pub id: JournalId,
    pub label: String,
    pub is_citing: bool,
    pub is_cited: bool,
}

/// Sparse cases × variables count matrix with journal identities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixFile", into = "MatrixFile")]
pub struct CitationMatrix {
    cases: Vec<JournalId>,
    variables: Vec<JournalId>,
    labels: BTreeMap<JournalId, String>,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    counts: Vec<u64>,
    total: u64,
}

const MATRIX_FORMAT: &str = "factor-atlas-matrix/1";

/// On-disk form: explicit axes plus `(cited, citing, count)` triplets.
#[derive(Serialize, Deserialize)]
struct MatrixFile {
    format: String,
    cases: Vec<JournalId>,
    variables: Vec<JournalId>,
    #[serde(default)]
    labels: BTreeMap<JournalId, String>,
    cells: Vec<(JournalId, JournalId, u64)>,
}

impl From<CitationMatrix> for MatrixFile {
    fn from(m: CitationMatrix) -> Self {
        let cells = m.cells().collect();
        MatrixFile {
            format: MATRIX_FORMAT.to_string(),
            cases: m.cases,
            variables: m.variables,
            labels: m.labels,
            cells,
        }
    }
}

impl TryFrom<MatrixFile> for CitationMatrix {
    type Error = Error;

    fn try_from(f: MatrixFile) -> Result<Self> {
        if f.format != MATRIX_FORMAT {
            return Err(Error::domain(format!(
                "unsupported matrix format {:?}",
                f.format
            )));
        }
        CitationMatrix::from_cells(f.cases, f.variables, f.cells, f.labels)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IngestOptions {
    /// Zero the within-journal (self-citation) cells.
    pub drop_diagonal: bool,
}

impl CitationMatrix {
    /// Builds a matrix from explicit axes and cells.
    ///
    /// Axes are sorted and deduplicated. Every cell must reference journals on
    /// the axes, carry a count of at least one and appear only once.
    pub fn from_cells(
        cases: impl IntoIterator<Item = JournalId>,
        variables: impl IntoIterator<Item = JournalId>,
        cells: impl IntoIterator<Item = (JournalId, JournalId, u64)>,
        labels: BTreeMap<JournalId, String>,
    ) -> Result<Self> {
        let cases: Vec<JournalId> = cases
            .into_iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let variables: Vec<JournalId> = variables
            .into_iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if variables.len() > u32::MAX as usize {
            return Err(Error::domain("too many variables"));
        }
        let case_pos: HashMap<JournalId, usize> =
            cases.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let var_pos: HashMap<JournalId, u32> = variables
            .iter()
            .enumerate()
            .map(|(j, &id)| (id, j as u32))
            .collect();

        let mut rows: Vec<Vec<(u32, u64)>> = vec![Vec::new(); cases.len()];
        for (cited, citing, count) in cells {
            if count == 0 {
                return Err(Error::domain(format!(
                    "cell {cited} -> {citing} has count 0; counts must be >= 1"
                )));
            }
            let i = *case_pos
                .get(&cited)
                .ok_or_else(|| Error::NotFound(format!("case {cited}")))?;
            let j = *var_pos
                .get(&citing)
                .ok_or_else(|| Error::NotFound(format!("variable {citing}")))?;
            rows[i].push((j, count));
        }

        let mut row_ptr = Vec::with_capacity(cases.len() + 1);
        let mut col_idx = Vec::new();
        let mut counts = Vec::new();
        let mut total: u64 = 0;
        row_ptr.push(0);
        for (i, mut row) in rows.into_iter().enumerate() {
            row.sort_unstable_by_key(|&(j, _)| j);
            for w in row.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(Error::domain(format!(
                        "duplicate cell {} -> {}",
                        cases[i], variables[w[0].0 as usize]
                    )));
                }
            }
            for (j, c) in row {
                col_idx.push(j);
                counts.push(c);
                total = total
                    .checked_add(c)
                    .ok_or_else(|| Error::domain("total citation count overflows u64"))?;
            }
            row_ptr.push(col_idx.len());
        }

        Ok(CitationMatrix {
            cases,
            variables,
            labels,
            row_ptr,
            col_idx,
            counts,
            total,
        })
    }

    pub fn cases(&self) -> &[JournalId] {
        &self.cases
    }

    pub fn variables(&self) -> &[JournalId] {
        &self.variables
    }

    pub fn n_cases(&self) -> usize {
        self.cases.len()
    }

    pub fn n_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn n_links(&self) -> usize {
        self.counts.len()
    }

    pub fn total_citations(&self) -> u64 {
        self.total
    }

    pub fn labels(&self) -> &BTreeMap<JournalId, String> {
        &self.labels
    }

    pub fn label(&self, id: JournalId) -> Option<&str> {
        self.labels.get(&id).map(String::as_str)
    }

    /// The journal's label, or its id when unlabeled.
    pub fn display_label(&self, id: JournalId) -> String {
        self.label(id)
            .map_or_else(|| id.to_string(), str::to_string)
    }

    pub fn with_labels(mut self, labels: BTreeMap<JournalId, String>) -> Self {
        self.labels = labels;
        self
    }

    pub fn case_index(&self, id: JournalId) -> Option<usize> {
        self.cases.binary_search(&id).ok()
    }

    pub fn var_index(&self, id: JournalId) -> Option<usize> {
        self.variables.binary_search(&id).ok()
    }

    /// Nonzero cells of case row `i` as `(variable index, count)`, ascending.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, u64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()]
            .iter()
            .zip(&self.counts[span])
            .map(|(&j, &c)| (j as usize, c))
    }

    /// Count at `(case index, variable index)`.
    pub fn get(&self, i: usize, j: usize) -> u64 {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        let cols = &self.col_idx[span.clone()];
        match cols.binary_search(&(j as u32)) {
            Ok(pos) => self.counts[span.start + pos],
            Err(_) => 0,
        }
    }

    /// Count for a `(cited, citing)` journal pair; zero when either is absent.
    pub fn count(&self, cited: JournalId, citing: JournalId) -> u64 {
        match (self.case_index(cited), self.var_index(citing)) {
            (Some(i), Some(j)) => self.get(i, j),
            _ => 0,
        }
    }

    /// All nonzero cells as `(cited, citing, count)` in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (JournalId, JournalId, u64)> + '_ {
        (0..self.n_cases()).flat_map(move |i| {
            self.row(i)
                .map(move |(j, c)| (self.cases[i], self.variables[j], c))
        })
    }

    /// Column-major view: for each variable, its `(case index, count)` entries.
    pub fn columns(&self) -> Vec<Vec<(usize, u64)>> {
        let mut cols = vec![Vec::new(); self.n_vars()];
        for i in 0..self.n_cases() {
            for (j, c) in self.row(i) {
                cols[j].push((i, c));
            }
        }
        cols
    }

    pub fn row_total(&self, i: usize) -> u64 {
        self.row(i).map(|(_, c)| c).sum()
    }

    pub fn column_totals(&self) -> Vec<u64> {
        let mut totals = vec![0u64; self.n_vars()];
        for (&j, &c) in self.col_idx.iter().zip(&self.counts) {
            totals[j as usize] += c;
        }
        totals
    }

    /// Exact per-column `(Σx, Σx²)` over all cases.
    pub fn column_moments(&self) -> Vec<(u128, u128)> {
        let mut m = vec![(0u128, 0u128); self.n_vars()];
        for (&j, &c) in self.col_idx.iter().zip(&self.counts) {
            let c = c as u128;
            let e = &mut m[j as usize];
            e.0 += c;
            e.1 += c * c;
        }
        m
    }

    /// Journal records for the union of both axes.
    pub fn records(&self) -> Vec<JournalRecord> {
        let mut ids: BTreeMap<JournalId, (bool, bool)> = BTreeMap::new();
        for &id in &self.cases {
            ids.entry(id).or_default().1 = true;
        }
        for &id in &self.variables {
            ids.entry(id).or_default().0 = true;
        }
        ids.into_iter()
            .map(|(id, (is_citing, is_cited))| JournalRecord {
                id,
                label: self.display_label(id),
                is_citing,
                is_cited,
            })
            .collect()
    }

    /// Restricts both axes to the given journals. Ids not on an axis are ignored.
    pub fn restrict(&self, cases: &BTreeSet<JournalId>, variables: &BTreeSet<JournalId>) -> Self {
        let keep_cases: Vec<JournalId> = self
            .cases
            .iter()
            .copied()
            .filter(|id| cases.contains(id))
            .collect();
        let keep_vars: Vec<JournalId> = self
            .variables
            .iter()
            .copied()
            .filter(|id| variables.contains(id))
            .collect();
        let mut var_map = vec![u32::MAX; self.n_vars()];
        for (new, id) in keep_vars.iter().enumerate() {
            var_map[self.var_index(*id).expect("variable present")] = new as u32;
        }

        let mut row_ptr = Vec::with_capacity(keep_cases.len() + 1);
        let mut col_idx = Vec::new();
        let mut counts = Vec::new();
        let mut total = 0u64;
        row_ptr.push(0);
        for id in &keep_cases {
            let i = self.case_index(*id).expect("case present");
            for (j, c) in self.row(i) {
                let nj = var_map[j];
                if nj != u32::MAX {
                    col_idx.push(nj);
                    counts.push(c);
                    total += c;
                }
            }
            row_ptr.push(col_idx.len());
        }
        let labels = self
            .labels
            .iter()
            .filter(|(id, _)| cases.contains(id) || variables.contains(id))
            .map(|(id, l)| (*id, l.clone()))
            .collect();

        CitationMatrix {
            cases: keep_cases,
            variables: keep_vars,
            labels,
            row_ptr,
            col_idx,
            counts,
            total,
        }
    }

    /// Writes the matrix as a TSV edge list readable by [`ingest_edge_list`].
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# cited\tciting\tcount")?;
        for (cited, citing, c) in self.cells() {
            writeln!(out, "{cited}\t{citing}\t{c}")?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer(&mut w, self)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let r = BufReader::new(File::open(path)?);
        Ok(serde_json::from_reader(r)?)
    }
}

/// Reads a `cited \t citing \t count` edge list.
///
/// Blank lines and lines starting with `#` are skipped. Fields may be
/// separated by tabs or runs of spaces.
pub fn ingest_edge_list<R: BufRead>(
    source: R,
    labels: Option<&BTreeMap<JournalId, String>>,
    opts: IngestOptions,
) -> Result<CitationMatrix> {
    let mut seen: HashMap<(JournalId, JournalId), usize> = HashMap::new();
    let mut cells = Vec::new();
    let mut any = false;

    for (n, line) in source.lines().enumerate() {
        let line_no = n + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = text.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 3 fields, found {}", fields.len()),
            });
        }
        let parse_id = |s: &str, what: &str| {
            s.parse::<JournalId>().map_err(|e| Error::Parse {
                line: line_no,
                message: format!("bad {what} id {s:?}: {e}"),
            })
        };
        let cited = parse_id(fields[0], "cited")?;
        let citing = parse_id(fields[1], "citing")?;
        let count: i128 = fields[2].parse().map_err(|e| Error::Parse {
            line: line_no,
            message: format!("bad count {:?}: {e}", fields[2]),
        })?;
        if count < 1 {
            return Err(Error::domain(format!(
                "line {line_no}: count {count} is below 1"
            )));
        }
        let count = u64::try_from(count).map_err(|_| Error::Parse {
            line: line_no,
            message: format!("count {count} out of range"),
        })?;
        if seen.insert((cited, citing), line_no).is_some() {
            return Err(Error::DuplicateEdge {
                line: line_no,
                cited,
                citing,
            });
        }
        any = true;
        if opts.drop_diagonal && cited == citing {
            continue;
        }
        cells.push((cited, citing, count));
    }
    if !any || cells.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let cases: Vec<JournalId> = cells.iter().map(|c| c.0).collect();
    let variables: Vec<JournalId> = cells.iter().map(|c| c.1).collect();
    let labels = match labels {
        Some(map) => {
            let present: BTreeSet<JournalId> = cases.iter().chain(&variables).copied().collect();
            map.iter()
                .filter(|(id, _)| present.contains(id))
                .map(|(id, l)| (*id, l.clone()))
                .collect()
        }
        None => BTreeMap::new(),
    };
    CitationMatrix::from_cells(cases, variables, cells, labels)
}

/// Reads an `id \t label` table. The label is everything after the first tab.
pub fn read_labels<R: BufRead>(source: R) -> Result<BTreeMap<JournalId, String>> {
    let mut labels = BTreeMap::new();
    for (n, line) in source.lines().enumerate() {
        let line_no = n + 1;
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, label) = line.split_once('\t').ok_or_else(|| Error::Parse {
            line: line_no,
            message: "expected `id<TAB>label`".into(),
        })?;
        let id: JournalId = id.parse().map_err(|e| Error::Parse {
            line: line_no,
            message: format!("bad id {id:?}: {e}"),
        })?;
        let label = label.trim();
        if label.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                message: "empty label".into(),
            });
        }
        labels.insert(id, label.to_string());
    }
    Ok(labels)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixStats {
    pub n_cases: usize,
    pub n_vars: usize,
    pub n_links: usize,
    pub total_citations: u64,
    /// `n_links / (n_cases · n_vars)`.
    #[serde(serialize_with = "four_significant")]
    pub density: f64,
    /// Zero by convention when there are no links (see `no_links`).
    pub mean_per_link: f64,
    pub no_links: bool,
}

fn four_significant<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(round_significant(*x, 4))
}

pub(crate) fn round_significant(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let scale = 10f64.powi(digits - 1 - x.abs().log10().floor() as i32);
    (x * scale).round() / scale
}

pub fn compute_stats(m: &CitationMatrix) -> MatrixStats {
    let cells = m.n_cases() as f64 * m.n_vars() as f64;
    let n_links = m.n_links();
    MatrixStats {
        n_cases: m.n_cases(),
        n_vars: m.n_vars(),
        n_links,
        total_citations: m.total_citations(),
        density: if cells > 0.0 {
            n_links as f64 / cells
        } else {
            0.0
        },
        mean_per_link: if n_links > 0 {
            m.total_citations() as f64 / n_links as f64
        } else {
            0.0
        },
        no_links: n_links == 0,
    }
}

/// Population variance from exact integer moments over `n` cases.
pub(crate) fn population_variance(n: usize, sum: u128, sum_sq: u128) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as u128;
    // n·Σx² ≥ (Σx)² by Cauchy-Schwarz, so this never underflows.
    let num = n * sum_sq - sum * sum;
    num as f64 / (n * n) as f64
}

/// Population variance of a citing column over all cases (absent cells are 0).
pub fn column_variance(m: &CitationMatrix, v: JournalId) -> Result<f64> {
    let j = m
        .var_index(v)
        .ok_or_else(|| Error::NotFound(format!("variable {v}")))?;
    let (mut s, mut q) = (0u128, 0u128);
    for i in 0..m.n_cases() {
        let c = m.get(i, j) as u128;
        s += c;
        q += c * c;
    }
    Ok(population_variance(m.n_cases(), s, q))
}

pub fn column_variances(m: &CitationMatrix) -> Vec<f64> {
    m.column_moments()
        .into_iter()
        .map(|(s, q)| population_variance(m.n_cases(), s, q))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DroppedVariable {
    pub id: JournalId,
    pub variance: f64,
}

#[derive(Debug, Clone)]
pub struct Filtered {
    pub matrix: CitationMatrix,
    pub dropped: Vec<DroppedVariable>,
}

/// Keeps citing variables whose population variance is at least `threshold`.
pub fn filter_by_variance(m: &CitationMatrix, threshold: f64) -> Result<Filtered> {
    if threshold.is_nan() || threshold < 0.0 {
        return Err(Error::domain(format!(
            "variance threshold {threshold} must be >= 0"
        )));
    }
    let variances = column_variances(m);
    let mut keep = BTreeSet::new();
    let mut dropped = Vec::new();
    for (&id, &var) in m.variables().iter().zip(&variances) {
        if var >= threshold {
            keep.insert(id);
        } else {
            dropped.push(DroppedVariable { id, variance: var });
        }
    }
    if keep.is_empty() {
        return Err(Error::EmptySelection(format!(
            "no variable reaches variance {threshold}"
        )));
    }
    let cases: BTreeSet<JournalId> = m.cases().iter().copied().collect();
    Ok(Filtered {
        matrix: m.restrict(&cases, &keep),
        dropped,
    })
}

/// Writes a dropped-variable report as `id \t variance` TSV.
pub fn write_dropped_tsv<W: Write>(dropped: &[DroppedVariable], mut out: W) -> Result<()> {
    writeln!(out, "id\tvariance")?;
    for d in dropped {
        writeln!(out, "{}\t{}", d.id, d.variance)?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct Subset {
    pub matrix: CitationMatrix,
    /// Selected journals that are not citing variables of the parent.
    pub citing_less: Vec<JournalId>,
    /// Variables dropped because they are constant over the selected cases.
    pub zero_variance: Vec<JournalId>,
}

/// Restricts to `keep_cases`; the variables become the selected journals that
/// also cite, minus any column that is constant over the selection.
pub fn subset(m: &CitationMatrix, keep_cases: &BTreeSet<JournalId>) -> Result<Subset> {
    if keep_cases.is_empty() {
        return Err(Error::domain("subset selection is empty"));
    }
    if let Some(bad) = keep_cases.iter().find(|id| m.case_index(**id).is_none()) {
        return Err(Error::domain(format!(
            "journal {bad} is not a case of the matrix"
        )));
    }
    let citing_less: Vec<JournalId> = keep_cases
        .iter()
        .copied()
        .filter(|id| m.var_index(*id).is_none())
        .collect();
    let vars: BTreeSet<JournalId> = keep_cases
        .iter()
        .copied()
        .filter(|id| m.var_index(*id).is_some())
        .collect();
    let restricted = m.restrict(keep_cases, &vars);

    let variances = column_variances(&restricted);
    let mut keep_vars = BTreeSet::new();
    let mut zero_variance = Vec::new();
    for (&id, &var) in restricted.variables().iter().zip(&variances) {
        if var > 0.0 {
            keep_vars.insert(id);
        } else {
            zero_variance.push(id);
        }
    }
    if keep_vars.is_empty() {
        return Err(Error::DegenerateSubset(format!(
            "all {} variables are constant over the {} selected cases",
            restricted.n_vars(),
            keep_cases.len()
        )));
    }
    let matrix = if zero_variance.is_empty() {
        restricted
    } else {
        restricted.restrict(keep_cases, &keep_vars)
    };
    Ok(Subset {
        matrix,
        citing_less,
        zero_variance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u64]) -> Vec<JournalId> {
        v.iter().map(|&x| JournalId(x)).collect()
    }

    fn three_line() -> CitationMatrix {
        let src = "1\t2\t5\n2\t1\t2\n1\t1\t7\n";
        ingest_edge_list(src.as_bytes(), None, IngestOptions::default()).unwrap()
    }

    #[test]
    fn ingest_three_lines() {
        let m = three_line();
        assert_eq!(m.n_cases(), 2);
        assert_eq!(m.n_vars(), 2);
        assert_eq!(m.n_links(), 3);
        assert_eq!(m.total_citations(), 14);
        // diagonal retained
        assert_eq!(m.count(JournalId(1), JournalId(1)), 7);
    }

    #[test]
    fn ingest_accepts_single_citation() {
        let m =
            ingest_edge_list("# header\n3\t4\t1\n".as_bytes(), None, Default::default()).unwrap();
        assert_eq!(m.total_citations(), 1);
    }

    #[test]
    fn ingest_errors() {
        let zero = ingest_edge_list("1  2  0\n".as_bytes(), None, Default::default());
        assert!(matches!(zero, Err(Error::Domain(_))));
        let neg = ingest_edge_list("1\t2\t-4\n".as_bytes(), None, Default::default());
        assert!(matches!(neg, Err(Error::Domain(_))));

        let bad = ingest_edge_list("1\t2\t3\n1\t2\n".as_bytes(), None, Default::default());
        assert!(matches!(bad, Err(Error::Parse { line: 2, .. })));
        let frac = ingest_edge_list("1\t2\t2.5\n".as_bytes(), None, Default::default());
        assert!(matches!(frac, Err(Error::Parse { line: 1, .. })));

        let dup = ingest_edge_list("1\t2\t3\n\n1\t2\t4\n".as_bytes(), None, Default::default());
        assert!(matches!(dup, Err(Error::DuplicateEdge { line: 3, .. })));

        let empty = ingest_edge_list("# only a header\n\n".as_bytes(), None, Default::default());
        assert!(matches!(empty, Err(Error::EmptyCorpus)));
    }

    #[test]
    fn drop_diagonal_zeroes_self_citations() {
        let src = "1\t2\t5\n2\t1\t2\n1\t1\t7\n";
        let m = ingest_edge_list(
            src.as_bytes(),
            None,
            IngestOptions {
                drop_diagonal: true,
            },
        )
        .unwrap();
        assert_eq!(m.total_citations(), 7);
        assert_eq!(m.count(JournalId(1), JournalId(1)), 0);
    }

    #[test]
    fn labels_are_attached() {
        let labels = read_labels("1\tJ BIOL CHEM\n2\tP NATL ACAD SCI USA\n".as_bytes()).unwrap();
        let m =
            ingest_edge_list("1\t2\t3\n".as_bytes(), Some(&labels), Default::default()).unwrap();
        assert_eq!(m.label(JournalId(1)), Some("J BIOL CHEM"));
        let recs = m.records();
        assert_eq!(recs.len(), 2);
        assert!(recs[0].is_cited && !recs[0].is_citing);
        assert!(recs[1].is_citing && !recs[1].is_cited);
        assert!(read_labels("1\t \n".as_bytes()).is_err());
    }

    #[test]
    fn stats_of_three_line_matrix() {
        let s = compute_stats(&three_line());
        assert_eq!(s.n_links, 3);
        assert_eq!(s.total_citations, 14);
        assert!((s.mean_per_link - 14.0 / 3.0).abs() < 1e-12);
        assert!((s.density - 0.75).abs() < 1e-15);
        assert!(!s.no_links);
    }

    #[test]
    fn stats_of_empty_matrix_flagged() {
        let m = CitationMatrix::from_cells(ids(&[1]), ids(&[2]), vec![], BTreeMap::new()).unwrap();
        let s = compute_stats(&m);
        assert_eq!(s.mean_per_link, 0.0);
        assert!(s.no_links);
    }

    #[test]
    fn density_serialized_to_four_significant_digits() {
        assert_eq!(round_significant(0.028_783_1, 4), 0.02878);
        assert_eq!(round_significant(123_456.0, 4), 123_500.0);
    }

    #[test]
    fn column_variance_cases() {
        // column (0, 0, 4) over three cases
        let m = CitationMatrix::from_cells(
            ids(&[1, 2, 3]),
            ids(&[10, 11]),
            vec![
                (JournalId(3), JournalId(10), 4),
                (JournalId(1), JournalId(11), 2),
                (JournalId(2), JournalId(11), 2),
                (JournalId(3), JournalId(11), 2),
            ],
            BTreeMap::new(),
        )
        .unwrap();
        let v = column_variance(&m, JournalId(10)).unwrap();
        assert!((v - 32.0 / 9.0).abs() < 1e-12);
        // constant column equals its mean everywhere
        assert_eq!(column_variance(&m, JournalId(11)).unwrap(), 0.0);
        assert!(matches!(
            column_variance(&m, JournalId(99)),
            Err(Error::NotFound(_))
        ));
    }

    #[test]
    fn zero_column_has_zero_variance() {
        let m = CitationMatrix::from_cells(
            ids(&[1, 2]),
            ids(&[5, 6]),
            vec![(JournalId(1), JournalId(5), 3)],
            BTreeMap::new(),
        )
        .unwrap();
        assert_eq!(column_variance(&m, JournalId(6)).unwrap(), 0.0);
    }

    #[test]
    fn filter_threshold_zero_is_identity() {
        let m = three_line();
        let f = filter_by_variance(&m, 0.0).unwrap();
        assert_eq!(f.matrix, m);
        assert!(f.dropped.is_empty());
        assert!(filter_by_variance(&m, -1.0).is_err());
        assert!(matches!(
            filter_by_variance(&m, 1e9),
            Err(Error::EmptySelection(_))
        ));
    }

    #[test]
    fn subset_keeps_citing_members_only() {
        // 3 is cited but never cites
        let src = "1\t2\t5\n2\t1\t2\n1\t1\t7\n3\t1\t4\n3\t2\t1\n";
        let m = ingest_edge_list(src.as_bytes(), None, Default::default()).unwrap();
        let keep: BTreeSet<_> = ids(&[1, 2, 3]).into_iter().collect();
        let s = subset(&m, &keep).unwrap();
        assert_eq!(s.matrix.cases(), ids(&[1, 2, 3]).as_slice());
        assert_eq!(s.matrix.variables(), ids(&[1, 2]).as_slice());
        assert_eq!(s.citing_less, ids(&[3]));
        assert!(subset(&m, &BTreeSet::new()).is_err());
        let unknown: BTreeSet<_> = ids(&[42]).into_iter().collect();
        assert!(subset(&m, &unknown).is_err());
    }

    #[test]
    fn subset_drops_constant_columns() {
        let src = "1\t1\t3\n2\t1\t3\n1\t2\t1\n";
        let m = ingest_edge_list(src.as_bytes(), None, Default::default()).unwrap();
        let keep: BTreeSet<_> = ids(&[1, 2]).into_iter().collect();
        let s = subset(&m, &keep).unwrap();
        assert_eq!(s.zero_variance, ids(&[1]));
        assert_eq!(s.matrix.variables(), ids(&[2]).as_slice());

        let only: BTreeSet<_> = ids(&[2]).into_iter().collect();
        assert!(matches!(subset(&m, &only), Err(Error::DegenerateSubset(_))));
    }

    #[test]
    fn json_round_trip() {
        let m = three_line();
        let back = CitationMatrix::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        let mut buf = Vec::new();
        m.write_edge_list(&mut buf).unwrap();
        let again = ingest_edge_list(buf.as_slice(), None, Default::default()).unwrap();
        assert_eq!(again, m);
    }
}
