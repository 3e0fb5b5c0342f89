use std::collections::BTreeSet;

use super::{designate, ClassificationSet, FactorDesignation, Provenance};
use crate::error::{Error, Result};
use crate::factor::{fit, FitOptions, FittedModel, ScoreMatrix};
use crate::matrix::{filter_by_variance, subset, CitationMatrix, JournalId};

/// One level of a top-down decomposition.
///
/// `matrix` keeps every citing variable available at this level so that
/// children can be cut from it; the model may have been fitted on a
/// variance-filtered view of it.
#[derive(Debug, Clone)]
pub struct DecompositionNode {
    pub level: usize,
    /// 1-based factor of the parent model this node was selected on.
    pub parent_factor: Option<usize>,
    pub set_label: Option<String>,
    pub matrix: CitationMatrix,
    pub fitted: Option<FittedModel>,
    pub designations: Vec<FactorDesignation>,
    /// Selected journals without citing data at the parent.
    pub citing_less: Vec<JournalId>,
    /// Variables dropped for being constant over the selection.
    pub zero_variance: Vec<JournalId>,
    pub children: Vec<DecompositionNode>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DrillOptions {
    pub fit: FitOptions,
    /// Variance filter applied before fitting (the matrix itself is kept whole).
    pub min_variance: Option<f64>,
}

impl DrillOptions {
    pub fn with_k(k: usize) -> Self {
        DrillOptions {
            fit: FitOptions::with_k(k),
            min_variance: None,
        }
    }
}

impl DecompositionNode {
    /// An unfitted root holding the whole corpus.
    pub fn root(matrix: CitationMatrix) -> Self {
        DecompositionNode {
            level: 0,
            parent_factor: None,
            set_label: None,
            matrix,
            fitted: None,
            designations: Vec::new(),
            citing_less: Vec::new(),
            zero_variance: Vec::new(),
            children: Vec::new(),
        }
    }

    /// A root with a fitted model.
    pub fn fit_root(matrix: CitationMatrix, opts: &DrillOptions) -> Result<Self> {
        let mut node = DecompositionNode::root(matrix);
        node.fit(opts)?;
        Ok(node)
    }

    pub fn fit(&mut self, opts: &DrillOptions) -> Result<()> {
        let fitted = match opts.min_variance {
            Some(t) => fit(
                &filter_by_variance(&self.matrix, t)?.matrix,
                &fitted_opts(opts),
            )?,
            None => fit(&self.matrix, &fitted_opts(opts))?,
        };
        self.designations = designate(&fitted.model, &fitted.scores, self.matrix.labels())?;
        self.fitted = Some(fitted);
        Ok(())
    }

    pub fn scores(&self) -> Option<&ScoreMatrix> {
        self.fitted.as_ref().map(|f| &f.scores)
    }
}

fn fitted_opts(opts: &DrillOptions) -> FitOptions {
    FitOptions {
        rotate: opts.fit.rotate && opts.fit.k >= 2,
        ..opts.fit
    }
}

/// Refits a k-factor model on the parent's cases in `set`.
pub fn drill_down(
    parent: &DecompositionNode,
    set: &ClassificationSet,
    opts: &DrillOptions,
) -> Result<DecompositionNode> {
    let k = opts.fit.k;
    if let Some(bad) = set
        .members
        .iter()
        .find(|id| parent.matrix.case_index(**id).is_none())
    {
        return Err(Error::domain(format!(
            "set member {bad} is not a case of the parent node"
        )));
    }
    if set.members.len() == parent.matrix.n_cases() {
        return Err(Error::domain(format!(
            "set {:?} holds every case of the parent; drilling would not narrow it",
            set.label
        )));
    }
    let keep: BTreeSet<JournalId> = set.members.clone();
    let cut = subset(&parent.matrix, &keep)?;
    if cut.matrix.n_cases() < k + 1 {
        return Err(Error::domain(format!(
            "{} cases cannot support a {k}-factor model",
            cut.matrix.n_cases()
        )));
    }
    if cut.matrix.n_vars() < 2 || k > cut.matrix.n_vars() {
        return Err(Error::domain(format!(
            "{} variables cannot support a {k}-factor model",
            cut.matrix.n_vars()
        )));
    }
    let parent_factor = match set.provenance {
        Provenance::Factor { factor, .. } => Some(factor),
        Provenance::External { .. } => None,
    };
    let mut node = DecompositionNode {
        level: parent.level + 1,
        parent_factor,
        set_label: Some(set.label.clone()),
        matrix: cut.matrix,
        fitted: None,
        designations: Vec::new(),
        citing_less: cut.citing_less,
        zero_variance: cut.zero_variance,
        children: Vec::new(),
    };
    node.fit(opts)?;
    Ok(node)
}
