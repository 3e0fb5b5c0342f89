use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{CitationMatrix, JournalId};

/// How the cited-side and citing-side thresholds combine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvironmentRule {
    #[default]
    Either,
    Both,
}

/// The citation environment of `seed`.
///
/// A journal `j` belongs when the citations it gives the seed exceed
/// `pct` of the seed's total cited, and/or the citations the seed gives it
/// exceed `pct` of the seed's total citing. `pct` is a fraction (0.005 for
/// half a percent). The seed is always included.
pub fn local_environment(
    m: &CitationMatrix,
    seed: JournalId,
    pct: f64,
    rule: EnvironmentRule,
) -> Result<CitationMatrix> {
    if !(0.0..=1.0).contains(&pct) {
        return Err(Error::domain(format!(
            "threshold fraction {pct} outside [0, 1]"
        )));
    }
    let (si, sj) = match (m.case_index(seed), m.var_index(seed)) {
        (Some(i), Some(j)) => (i, j),
        _ => {
            return Err(Error::NotFound(format!(
                "seed journal {seed} must be both cited and citing"
            )))
        }
    };
    let total_cited = m.row_total(si) as f64;
    let total_citing = m.column_totals()[sj] as f64;

    // citations each journal gives the seed (seed's row)
    let mut gives = std::collections::BTreeMap::new();
    for (j, c) in m.row(si) {
        gives.insert(m.variables()[j], c);
    }
    // citations the seed gives each journal (seed's column)
    let mut receives = std::collections::BTreeMap::new();
    for i in 0..m.n_cases() {
        let c = m.get(i, sj);
        if c > 0 {
            receives.insert(m.cases()[i], c);
        }
    }

    let mut members = BTreeSet::from([seed]);
    let candidates: BTreeSet<JournalId> = gives.keys().chain(receives.keys()).copied().collect();
    for id in candidates {
        let cited_side = gives.get(&id).copied().unwrap_or(0) as f64 > pct * total_cited;
        let citing_side = receives.get(&id).copied().unwrap_or(0) as f64 > pct * total_citing;
        let inside = match rule {
            EnvironmentRule::Either => cited_side || citing_side,
            EnvironmentRule::Both => cited_side && citing_side,
        };
        if inside {
            members.insert(id);
        }
    }
    if members.len() < 2 {
        return Err(Error::DegenerateEnvironment(seed));
    }
    Ok(m.restrict(&members, &members))
}
