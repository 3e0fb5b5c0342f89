//! Planted block models with known classifications, and recovery scoring.
//!
//! Journal `i` cites journal `j` a Poisson number of times: `lambda_in`
//! within a block, `lambda_out` across blocks, and (for nested models)
//! `lambda_sub_in` within a sub-block.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor::{fit, FitOptions, FittedModel};
use crate::matrix::{CitationMatrix, JournalId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NestedSpec {
    pub n_sub_blocks: usize,
    pub lambda_sub_in: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub n_blocks: usize,
    pub journals_per_block: usize,
    pub lambda_in: f64,
    pub lambda_out: f64,
    pub nested: Option<NestedSpec>,
    pub seed: u64,
}

impl BlockSpec {
    pub fn new(
        n_blocks: usize,
        journals_per_block: usize,
        lambda_in: f64,
        lambda_out: f64,
        seed: u64,
    ) -> Self {
        BlockSpec {
            n_blocks,
            journals_per_block,
            lambda_in,
            lambda_out,
            nested: None,
            seed,
        }
    }

    pub fn n_journals(&self) -> usize {
        self.n_blocks * self.journals_per_block
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_blocks < 1 || self.journals_per_block < 2 {
            return Err(Error::domain(
                "need at least 1 block of at least 2 journals",
            ));
        }
        if !(self.lambda_out >= 0.0
            && self.lambda_in > self.lambda_out
            && self.lambda_in.is_finite())
        {
            return Err(Error::domain(format!(
                "intensities must satisfy lambda_in ({}) > lambda_out ({}) >= 0",
                self.lambda_in, self.lambda_out
            )));
        }
        if let Some(n) = self.nested {
            if n.n_sub_blocks < 2 || self.journals_per_block < 2 * n.n_sub_blocks {
                return Err(Error::domain(format!(
                    "{} sub-blocks cannot be cut from blocks of {} journals",
                    n.n_sub_blocks, self.journals_per_block
                )));
            }
            if !(n.lambda_sub_in > self.lambda_in && n.lambda_sub_in.is_finite()) {
                return Err(Error::domain("lambda_sub_in must exceed lambda_in"));
            }
        }
        Ok(())
    }
}

/// Planted classification, one entry per journal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedAssignment {
    pub journals: Vec<JournalId>,
    pub block: Vec<usize>,
    pub sub_block: Option<Vec<usize>>,
}

impl PlantedAssignment {
    pub fn n_blocks(&self) -> usize {
        self.block.iter().max().map_or(0, |b| b + 1)
    }

    pub fn block_of(&self) -> BTreeMap<JournalId, usize> {
        self.journals
            .iter()
            .copied()
            .zip(self.block.iter().copied())
            .collect()
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        match &self.sub_block {
            None => writeln!(out, "journal_id\tblock_index")?,
            Some(_) => writeln!(out, "journal_id\tblock_index\tsub_block_index")?,
        }
        for (n, (id, b)) in self.journals.iter().zip(&self.block).enumerate() {
            match &self.sub_block {
                None => writeln!(out, "{id}\t{b}")?,
                Some(s) => writeln!(out, "{id}\t{b}\t{}", s[n])?,
            }
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(source: R) -> Result<Self> {
        let mut journals = Vec::new();
        let mut block = Vec::new();
        let mut sub = Vec::new();
        for (n, line) in source.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty()
                || line.starts_with('#')
                || (n == 0 && line.starts_with("journal_id"))
            {
                continue;
            }
            let bad = || Error::Parse {
                line: n + 1,
                message: "expected `journal_id<TAB>block_index[<TAB>sub_block_index]`".into(),
            };
            let f: Vec<&str> = line.split('\t').collect();
            if !(2..=3).contains(&f.len()) {
                return Err(bad());
            }
            journals.push(f[0].parse().map_err(|_| bad())?);
            block.push(f[1].parse().map_err(|_| bad())?);
            if let Some(s) = f.get(2) {
                sub.push(s.parse().map_err(|_| bad())?);
            }
        }
        if journals.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let sub_block = match sub.len() {
            0 => None,
            n if n == journals.len() => Some(sub),
            _ => return Err(Error::domain("sub-block column present on some rows only")),
        };
        Ok(PlantedAssignment {
            journals,
            block,
            sub_block,
        })
    }
}

/// A sampler that handles a zero intensity (always 0).
struct Counts(Option<Poisson<f64>>);

impl Counts {
    fn new(lambda: f64) -> Result<Self> {
        if lambda == 0.0 {
            return Ok(Counts(None));
        }
        Poisson::new(lambda)
            .map(|p| Counts(Some(p)))
            .map_err(|e| Error::domain(format!("Poisson intensity {lambda}: {e}")))
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> u64 {
        self.0.as_ref().map_or(0, |p| p.sample(rng) as u64)
    }
}

/// Samples a block model. Journals are numbered 1..=N block by block; all
/// of them are both cases and variables.
pub fn generate_block_model(spec: &BlockSpec) -> Result<(CitationMatrix, PlantedAssignment)> {
    spec.validate()?;
    let n = spec.n_journals();
    let per = spec.journals_per_block;
    let block: Vec<usize> = (0..n).map(|i| i / per).collect();
    let sub_block = spec.nested.map(|ns| {
        (0..n)
            .map(|i| (i % per) * ns.n_sub_blocks / per)
            .collect::<Vec<_>>()
    });

    let out = Counts::new(spec.lambda_out)?;
    let inside = Counts::new(spec.lambda_in)?;
    let sub_inside = match spec.nested {
        Some(ns) => Some(Counts::new(ns.lambda_sub_in)?),
        None => None,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let ids: Vec<JournalId> = (1..=n as u64).map(JournalId).collect();
    let mut cells = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let dist = if block[i] != block[j] {
                &out
            } else {
                match (&sub_block, &sub_inside) {
                    (Some(s), Some(d)) if s[i] == s[j] => d,
                    _ => &inside,
                }
            };
            let c = dist.draw(&mut rng);
            if c > 0 {
                cells.push((ids[i], ids[j], c));
            }
        }
    }
    if cells.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let labels = (0..n)
        .map(|i| {
            let label = match &sub_block {
                Some(s) => format!("B{}.{}-{}", block[i] + 1, s[i] + 1, i % per + 1),
                None => format!("B{}-{}", block[i] + 1, i % per + 1),
            };
            (ids[i], label)
        })
        .collect();
    let m = CitationMatrix::from_cells(ids.clone(), ids.clone(), cells, labels)?;
    Ok((
        m,
        PlantedAssignment {
            journals: ids,
            block,
            sub_block,
        },
    ))
}

/// How a journal is assigned to a factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssignmentRule {
    /// Cited journal → factor with its highest score.
    #[default]
    Scores,
    /// Citing journal → factor with its highest loading.
    Loadings,
    /// Cited journal → factor with its highest positive score, among factors
    /// whose variance exceeds 1. Journals positive on none of them form one
    /// residual group (group `k`).
    Positive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub accuracy: f64,
    pub n_evaluated: usize,
    /// Planted block × assigned factor counts.
    pub confusion: Vec<Vec<usize>>,
    /// (block, 0-based factor) pairs of the best matching; group `k` is the
    /// residual group of [`AssignmentRule::Positive`].
    pub matching: Vec<(usize, usize)>,
    /// False when the matching was found greedily.
    pub exhaustive: bool,
}

/// Widest problem matched by trying every permutation.
pub const EXHAUSTIVE_LIMIT: usize = 8;

/// Scores assigned groups against planted ones under the best one-to-one
/// matching of groups to blocks.
pub fn score_assignment(
    planted: &[usize],
    assigned: &[usize],
    n_blocks: usize,
    n_groups: usize,
) -> Result<RecoveryReport> {
    if planted.len() != assigned.len() || planted.is_empty() {
        return Err(Error::domain(
            "planted and assigned labels must be non-empty and equally long",
        ));
    }
    let mut confusion = vec![vec![0usize; n_groups]; n_blocks];
    for (&b, &g) in planted.iter().zip(assigned) {
        if b >= n_blocks || g >= n_groups {
            return Err(Error::domain(format!("label ({b}, {g}) out of range")));
        }
        confusion[b][g] += 1;
    }
    let size = n_blocks.max(n_groups);
    let weight = |b: usize, g: usize| {
        if b < n_blocks && g < n_groups {
            confusion[b][g]
        } else {
            0
        }
    };

    let exhaustive = size <= EXHAUSTIVE_LIMIT;
    let pairs: Vec<(usize, usize)> = if exhaustive {
        let mut perm: Vec<usize> = (0..size).collect();
        let mut best = (0, perm.clone());
        permute(&mut perm, 0, &mut |p| {
            let s: usize = p.iter().enumerate().map(|(b, &g)| weight(b, g)).sum();
            if s > best.0 {
                best = (s, p.to_vec());
            }
        });
        best.1.into_iter().enumerate().collect()
    } else {
        let mut cells: Vec<(usize, usize, usize)> = (0..n_blocks)
            .flat_map(|b| (0..n_groups).map(move |g| (b, g)))
            .map(|(b, g)| (confusion[b][g], b, g))
            .collect();
        cells.sort_by(|x, y| y.0.cmp(&x.0).then((x.1, x.2).cmp(&(y.1, y.2))));
        let mut used_b = vec![false; n_blocks];
        let mut used_g = vec![false; n_groups];
        let mut out = Vec::new();
        for (_, b, g) in cells {
            if !used_b[b] && !used_g[g] {
                used_b[b] = true;
                used_g[g] = true;
                out.push((b, g));
            }
        }
        out.sort();
        out
    };
    let matching: Vec<(usize, usize)> = pairs
        .into_iter()
        .filter(|&(b, g)| b < n_blocks && g < n_groups)
        .collect();
    let hits: usize = matching.iter().map(|&(b, g)| confusion[b][g]).sum();
    Ok(RecoveryReport {
        accuracy: hits as f64 / planted.len() as f64,
        n_evaluated: planted.len(),
        confusion,
        matching,
        exhaustive,
    })
}

fn permute(p: &mut [usize], at: usize, visit: &mut impl FnMut(&[usize])) {
    if at == p.len() {
        visit(p);
        return;
    }
    for i in at..p.len() {
        p.swap(at, i);
        permute(p, at + 1, visit);
        p.swap(at, i);
    }
}

fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Assigns journals from an already fitted model and scores the result.
/// Journals of `truth` absent from the model are skipped.
pub fn evaluate_fitted(
    fitted: &FittedModel,
    truth: &PlantedAssignment,
    rule: AssignmentRule,
) -> Result<RecoveryReport> {
    let blocks = truth.block_of();
    let mut planted = Vec::new();
    let mut assigned = Vec::new();
    match rule {
        AssignmentRule::Scores => {
            let s = &fitted.scores;
            for (i, id) in s.cases.iter().enumerate() {
                if let Some(&b) = blocks.get(id) {
                    planted.push(b);
                    assigned.push(argmax(s.values.row(i).iter().copied()));
                }
            }
        }
        AssignmentRule::Loadings => {
            let l = &fitted.model.loadings;
            for (i, id) in l.variables.iter().enumerate() {
                if let Some(&b) = blocks.get(id) {
                    planted.push(b);
                    assigned.push(argmax(l.values.row(i).iter().copied()));
                }
            }
        }
        AssignmentRule::Positive => {
            let s = &fitted.scores;
            let k = fitted.model.k();
            let retained: Vec<usize> = fitted
                .model
                .factor_variance()
                .iter()
                .enumerate()
                .filter(|(_, &v)| v > 1.0)
                .map(|(j, _)| j)
                .collect();
            for (i, id) in s.cases.iter().enumerate() {
                if let Some(&b) = blocks.get(id) {
                    planted.push(b);
                    let best = retained
                        .iter()
                        .copied()
                        .filter(|&j| s.values[[i, j]] > 0.0)
                        .max_by(|&a, &b| s.values[[i, a]].total_cmp(&s.values[[i, b]]));
                    assigned.push(best.unwrap_or(k));
                }
            }
        }
    }
    if planted.is_empty() {
        return Err(Error::domain("no planted journal appears in the model"));
    }
    let groups = match rule {
        AssignmentRule::Positive => fitted.model.k() + 1,
        _ => fitted.model.k(),
    };
    score_assignment(&planted, &assigned, truth.n_blocks(), groups)
}

/// Fits a k-factor model (varimax when k ≥ 2) and scores recovery.
pub fn evaluate_recovery(
    m: &CitationMatrix,
    truth: &PlantedAssignment,
    k: usize,
    rule: AssignmentRule,
) -> Result<RecoveryReport> {
    let opts = FitOptions {
        rotate: k >= 2,
        ..FitOptions::with_k(k)
    };
    evaluate_fitted(&fit(m, &opts)?, truth, rule)
}
