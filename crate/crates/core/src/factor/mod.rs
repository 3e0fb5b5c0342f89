//! Principal component extraction, varimax rotation and factor scores.
//!
//! The citing journals are the variables being factored; the cited journals
//! are the cases that receive scores. [`fit`] chains the steps:
//! standardize → correlate → extract → rotate → score.

mod correlation;
pub(crate) mod eigen;
mod extract;
mod model;
mod scores;
mod standardize;
mod varimax;

use serde::{Deserialize, Serialize};

pub use correlation::{correlation, CorrelationMatrix};
pub use extract::{
    eigendecompose, eigendecompose_krylov, Extraction, FactorCount, KrylovOptions, NEGATIVE_FLOOR,
};
pub use model::{
    kaiser_count, scree, EigenSpectrum, FactorModel, LoadingsMatrix, ScoreMatrix, ScreeRow,
    VarimaxRotation,
};
pub use scores::{factor_scores, MAX_CONDITION, RIDGE};
pub use standardize::{standardize, zscore, Standardized};
pub use varimax::{varimax, varimax_criterion, VarimaxOptions, VarimaxResult};

use crate::error::Result;
use crate::matrix::CitationMatrix;

/// Which eigensolver path to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EigenRoute {
    /// Dense below [`DENSE_ROUTE_LIMIT`] variables, Krylov above.
    #[default]
    Auto,
    Dense,
    Krylov,
}

pub const DENSE_ROUTE_LIMIT: usize = 2000;

impl FactorModel {
    pub fn from_extraction(ex: &Extraction) -> Self {
        FactorModel {
            spectrum: ex.spectrum.clone(),
            unrotated: ex.loadings.clone(),
            loadings: ex.loadings.clone(),
            rotation: None,
            score_coefficients: None,
        }
    }

    /// Applies varimax to the unrotated loadings, replacing any earlier rotation.
    pub fn rotate(&mut self, opts: VarimaxOptions) -> Result<&VarimaxRotation> {
        let r = varimax(&self.unrotated.values, opts)?;
        self.loadings = LoadingsMatrix {
            variables: self.unrotated.variables.clone(),
            values: r.loadings,
            rotated: true,
        };
        self.score_coefficients = None;
        Ok(self.rotation.insert(VarimaxRotation {
            kaiser_normalized: opts.kaiser_normalize,
            sweeps: r.sweeps,
            converged: r.converged,
            criterion: r.criterion,
            transform: r.transform,
        }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub k: usize,
    pub rotate: bool,
    pub varimax: VarimaxOptions,
    pub route: EigenRoute,
    pub krylov_seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            k: 12,
            rotate: true,
            varimax: VarimaxOptions::default(),
            route: EigenRoute::Auto,
            krylov_seed: 0,
        }
    }
}

impl FitOptions {
    pub fn with_k(k: usize) -> Self {
        FitOptions {
            k,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct FittedModel {
    pub model: FactorModel,
    pub scores: ScoreMatrix,
    pub warnings: Vec<String>,
}

/// Extracts the first `opts.k` components by the configured route.
pub fn extract(
    z: &Standardized<'_>,
    corr: &CorrelationMatrix,
    opts: &FitOptions,
) -> Result<Extraction> {
    let dense = match opts.route {
        EigenRoute::Dense => true,
        EigenRoute::Krylov => false,
        EigenRoute::Auto => z.n_vars() <= DENSE_ROUTE_LIMIT,
    };
    if dense {
        eigendecompose(corr, FactorCount::First(opts.k))
    } else {
        eigendecompose_krylov(
            z,
            opts.k,
            KrylovOptions {
                seed: opts.krylov_seed,
                ..Default::default()
            },
        )
    }
}

/// Runs the full factor pipeline on a count matrix.
pub fn fit(m: &CitationMatrix, opts: &FitOptions) -> Result<FittedModel> {
    let z = standardize(m)?;
    let corr = correlation(m)?;
    let ex = extract(&z, &corr, opts)?;
    let mut model = FactorModel::from_extraction(&ex);
    let mut warnings = Vec::new();
    if opts.rotate {
        let rot = model.rotate(opts.varimax)?;
        if !rot.converged {
            warnings.push(format!(
                "varimax did not converge within {} sweeps",
                rot.sweeps
            ));
        }
    }
    let scores = factor_scores(&mut model, &z, &corr)?;
    if let Some(eps) = scores.ridge {
        warnings.push(format!(
            "correlation matrix ill-conditioned; ridge {eps:e} added before inversion"
        ));
    }
    Ok(FittedModel {
        model,
        scores,
        warnings,
    })
}
