//! Factor scores for cited journals.
//!
//! Unrotated principal components are scored exactly: column j of the
//! coefficient matrix is `aⱼ / λⱼ`, giving unit-variance, uncorrelated
//! scores. Rotated solutions use the regression method, `B = R⁻¹·Λ`, with a
//! small ridge on `R` when it is too ill-conditioned to invert.

use ndarray::Array2;

use super::correlation::CorrelationMatrix;
use super::eigen::{cholesky, cholesky_solve};
use super::model::{FactorModel, ScoreMatrix};
use super::standardize::Standardized;
use crate::error::{Error, Result};

/// Condition number above which the ridge is applied.
pub const MAX_CONDITION: f64 = 1e12;
pub const RIDGE: f64 = 1e-8;

pub fn factor_scores(
    model: &mut FactorModel,
    z: &Standardized<'_>,
    corr: &CorrelationMatrix,
) -> Result<ScoreMatrix> {
    if model.variables() != z.variables() || model.variables() != corr.variables() {
        return Err(Error::domain(
            "model, standardized data and correlation matrix must share one variable set",
        ));
    }
    let k = model.k();
    let (coefficients, ridge) = if model.is_rotated() {
        regression_coefficients(model, corr)?
    } else {
        let mut b = model.unrotated.values.clone();
        for (j, &lambda) in model.eigenvalues().iter().enumerate() {
            if lambda.is_nan() || lambda <= 0.0 {
                return Err(Error::Numerical(format!(
                    "component {} has eigenvalue {lambda}; extract fewer factors",
                    j + 1
                )));
            }
            b.column_mut(j).mapv_inplace(|v| v / lambda);
        }
        (b, None)
    };
    debug_assert_eq!(coefficients.ncols(), k);

    let values = z.multiply(&coefficients);
    model.score_coefficients = Some(coefficients);
    let m = z.matrix();
    Ok(ScoreMatrix {
        cases: m.cases().to_vec(),
        labels: m.cases().iter().map(|&id| m.display_label(id)).collect(),
        values,
        rotated: model.is_rotated(),
        ridge,
    })
}

fn regression_coefficients(
    model: &FactorModel,
    corr: &CorrelationMatrix,
) -> Result<(Array2<f64>, Option<f64>)> {
    let r = corr.values();
    let spectral_condition = if model.spectrum.is_complete() {
        let ev = model.spectrum.eigenvalues();
        let min = ev.last().copied().unwrap_or(0.0);
        Some(if min > 0.0 {
            ev[0] / min
        } else {
            f64::INFINITY
        })
    } else {
        None
    };

    let plain = match spectral_condition {
        Some(c) if c > MAX_CONDITION => None,
        _ => cholesky(r),
    };
    let factor = match plain {
        // Without the full spectrum, estimate conditioning from the pivots.
        Some(l) if spectral_condition.is_some() || pivot_condition(&l) <= MAX_CONDITION => {
            return Ok((cholesky_solve(&l, &model.loadings.values), None));
        }
        _ => {
            let mut ridged = r.clone();
            for i in 0..ridged.nrows() {
                ridged[[i, i]] += RIDGE;
            }
            cholesky(&ridged).ok_or_else(|| {
                Error::Numerical(
                    "correlation matrix is singular even with ridge; extract fewer factors".into(),
                )
            })?
        }
    };
    Ok((cholesky_solve(&factor, &model.loadings.values), Some(RIDGE)))
}

fn pivot_condition(l: &Array2<f64>) -> f64 {
    let d = l.diag();
    let max = d.iter().fold(0.0f64, |a, &b| a.max(b));
    let min = d.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    (max / min).powi(2)
}
