use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;

use super::ClassificationSet;
use crate::error::{Error, Result};
use crate::matrix::JournalId;

/// A cell of the Venn partition: journals in exactly the listed sets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Region {
    /// Bit i set ⇔ member of set i.
    pub mask: u32,
    pub sets: Vec<String>,
    pub count: usize,
    pub members: Vec<JournalId>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairJaccard {
    pub a: String,
    pub b: String,
    pub intersection: usize,
    pub union: usize,
    pub jaccard: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SetSize {
    pub label: String,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub sets: Vec<SetSize>,
    pub union: usize,
    /// Non-empty regions, ordered by mask.
    pub regions: Vec<Region>,
    pub jaccard: Vec<PairJaccard>,
}

impl ComparisonReport {
    /// The region of journals in exactly the sets at `indices`.
    pub fn region(&self, indices: &[usize]) -> Option<&Region> {
        let mask = indices.iter().fold(0u32, |m, &i| m | (1 << i));
        self.regions.iter().find(|r| r.mask == mask)
    }

    /// Journals found only in set `i`.
    pub fn exclusive(&self, i: usize) -> usize {
        self.region(&[i]).map_or(0, |r| r.count)
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for (i, set) in self.sets.iter().enumerate() {
            let _ = writeln!(s, "set {}: {} ({} journals)", i + 1, set.label, set.size);
        }
        let _ = writeln!(s, "union: {} journals", self.union);
        for r in &self.regions {
            let _ = writeln!(s, "only in {{{}}}: {}", r.sets.join(", "), r.count);
        }
        for p in &self.jaccard {
            let _ = writeln!(s, "jaccard({}, {}) = {:.4}", p.a, p.b, p.jaccard);
        }
        s
    }
}

/// Venn partition and pairwise Jaccard indices of 2–5 sets.
pub fn compare_sets(sets: &[ClassificationSet]) -> Result<ComparisonReport> {
    if !(2..=5).contains(&sets.len()) {
        return Err(Error::domain(format!(
            "comparison takes 2 to 5 sets, got {}",
            sets.len()
        )));
    }
    let mut masks: BTreeMap<JournalId, u32> = BTreeMap::new();
    for (i, set) in sets.iter().enumerate() {
        for &id in &set.members {
            *masks.entry(id).or_default() |= 1 << i;
        }
    }
    let mut by_mask: BTreeMap<u32, Vec<JournalId>> = BTreeMap::new();
    for (id, mask) in &masks {
        by_mask.entry(*mask).or_default().push(*id);
    }
    let regions = by_mask
        .into_iter()
        .map(|(mask, members)| Region {
            mask,
            sets: (0..sets.len())
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| sets[i].label.clone())
                .collect(),
            count: members.len(),
            members,
        })
        .collect();

    let mut jaccard = Vec::new();
    for a in 0..sets.len() {
        for b in a + 1..sets.len() {
            let inter = sets[a].members.intersection(&sets[b].members).count();
            let union: BTreeSet<_> = sets[a].members.union(&sets[b].members).collect();
            jaccard.push(PairJaccard {
                a: sets[a].label.clone(),
                b: sets[b].label.clone(),
                intersection: inter,
                union: union.len(),
                jaccard: if union.is_empty() {
                    0.0
                } else {
                    inter as f64 / union.len() as f64
                },
            });
        }
    }

    Ok(ComparisonReport {
        sets: sets
            .iter()
            .map(|s| SetSize {
                label: s.label.clone(),
                size: s.members.len(),
            })
            .collect(),
        union: masks.len(),
        regions,
        jaccard,
    })
}
