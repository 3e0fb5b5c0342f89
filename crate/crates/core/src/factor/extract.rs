//! Principal component extraction.
//!
//! Two routes produce the same eigenpairs. The dense route decomposes the
//! p × p correlation matrix and yields the full spectrum. The Krylov route
//! runs Lanczos with full reorthogonalization directly on the implicit
//! standardized matrix (operator `x ↦ Zᵀ·Z·x / n`) and yields only the
//! leading eigenpairs; it never forms the correlation matrix.
//!
//! Both finish identically: descending order, equal eigenvalues ordered by
//! the index of their eigenvector's first nonzero component, and each
//! eigenvector signed so its largest-magnitude entry is positive.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::correlation::CorrelationMatrix;
use super::eigen::{symmetric_eigen, tridiagonal_eigen};
use super::model::{EigenSpectrum, LoadingsMatrix};
use super::standardize::Standardized;
use crate::error::{Error, Result};
use crate::matrix::JournalId;

/// Eigenvalues in `(-NEGATIVE_FLOOR, 0)` are clamped to zero.
pub const NEGATIVE_FLOOR: f64 = 1e-9;
const SYMMETRY_TOL: f64 = 1e-10;
const DIAGONAL_TOL: f64 = 1e-8;
const TIE_TOL: f64 = 1e-12;
const NONZERO_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FactorCount {
    All,
    First(usize),
}

#[derive(Debug, Clone)]
pub struct Extraction {
    pub spectrum: EigenSpectrum,
    /// Unrotated loadings, p × k.
    pub loadings: LoadingsMatrix,
    /// Unit eigenvectors, p × k.
    pub eigenvectors: Array2<f64>,
}

pub fn eigendecompose(corr: &CorrelationMatrix, k: FactorCount) -> Result<Extraction> {
    let a = corr.values();
    let p = corr.n();
    let k = resolve_k(k, p)?;
    for i in 0..p {
        if !a[[i, i]].is_finite() || (a[[i, i]] - 1.0).abs() > DIAGONAL_TOL {
            return Err(Error::domain(format!(
                "diagonal entry {i} is {}, expected 1",
                a[[i, i]]
            )));
        }
        for j in 0..i {
            if !a[[i, j]].is_finite() || (a[[i, j]] - a[[j, i]]).abs() > SYMMETRY_TOL {
                return Err(Error::domain(format!(
                    "correlation matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    let eig = symmetric_eigen(a)?;
    finish(eig.values, eig.vectors, p, k, corr.variables().to_vec())
}

fn resolve_k(k: FactorCount, p: usize) -> Result<usize> {
    let k = match k {
        FactorCount::All => p,
        FactorCount::First(k) => k,
    };
    if k == 0 || k > p {
        return Err(Error::domain(format!(
            "factor count {k} must be between 1 and the {p} variables"
        )));
    }
    Ok(k)
}

/// Orders, clamps and signs raw eigenpairs, keeping the spectrum of all
/// supplied values and the loadings of the first `k`.
fn finish(
    values: Vec<f64>,
    vectors: Vec<Vec<f64>>,
    n_vars: usize,
    k: usize,
    variables: Vec<JournalId>,
) -> Result<Extraction> {
    let mut pairs: Vec<(f64, Vec<f64>)> = values.into_iter().zip(vectors).collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));

    // Equal eigenvalues: order by first nonzero component's position.
    let first_nonzero = |v: &[f64]| {
        v.iter()
            .position(|x| x.abs() > NONZERO_TOL)
            .unwrap_or(v.len())
    };
    let mut start = 0;
    while start < pairs.len() {
        let lead = pairs[start].0;
        let tol = TIE_TOL * lead.abs().max(1.0);
        let mut end = start + 1;
        while end < pairs.len() && (lead - pairs[end].0).abs() <= tol {
            end += 1;
        }
        if end - start > 1 {
            pairs[start..end].sort_by_key(|(_, v)| first_nonzero(v));
        }
        start = end;
    }

    for (lambda, v) in pairs.iter_mut() {
        if *lambda < 0.0 {
            if *lambda > -NEGATIVE_FLOOR {
                *lambda = 0.0;
            } else {
                return Err(Error::domain(format!(
                    "eigenvalue {lambda:e} is negative; input is not a correlation matrix"
                )));
            }
        }
        let mut big = 0;
        for (i, x) in v.iter().enumerate() {
            if x.abs() > v[big].abs() {
                big = i;
            }
        }
        if v[big] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }

    let p = variables.len();
    let mut eigenvectors = Array2::zeros((p, k));
    let mut loadings = Array2::zeros((p, k));
    for (j, (lambda, v)) in pairs.iter().take(k).enumerate() {
        let root = lambda.sqrt();
        for i in 0..p {
            eigenvectors[[i, j]] = v[i];
            loadings[[i, j]] = v[i] * root;
        }
    }
    let spectrum = EigenSpectrum::new(pairs.into_iter().map(|(l, _)| l).collect(), n_vars);
    Ok(Extraction {
        spectrum,
        loadings: LoadingsMatrix {
            variables,
            values: loadings,
            rotated: false,
        },
        eigenvectors,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct KrylovOptions {
    /// Ritz pairs are accepted when `β·|s_last| ≤ tol · max(λ₁, 1)`.
    pub tol: f64,
    /// Seed for the start vector.
    pub seed: u64,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        KrylovOptions {
            tol: 1e-12,
            seed: 0,
        }
    }
}

/// Leading `k` eigenpairs of the correlation structure of `z` by Lanczos.
///
/// The returned spectrum holds only the `k` computed eigenvalues.
pub fn eigendecompose_krylov(
    z: &Standardized<'_>,
    k: usize,
    opts: KrylovOptions,
) -> Result<Extraction> {
    let p = z.n_vars();
    let k = resolve_k(FactorCount::First(k), p)?;
    let n = z.n_cases() as f64;
    let op = |x: &[f64]| -> Vec<f64> {
        let zx = z.apply(x);
        z.apply_t(&zx).into_iter().map(|v| v / n).collect()
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();

    let mut q = random_unit(&mut rng, p, &basis)
        .ok_or_else(|| Error::Numerical("could not draw a Krylov start vector".into()))?;
    let mut check_at = (2 * k + 20).min(p);

    loop {
        let mut w = op(&q);
        let a = dot(&q, &w);
        basis.push(q);
        alpha.push(a);
        // Full reorthogonalization (twice) keeps the basis orthonormal.
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                axpy(-c, b, &mut w);
            }
        }
        let b = norm(&w);
        let m = basis.len();

        if m >= check_at || m == p {
            let eig = tridiagonal_eigen(&alpha, &beta)?;
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&x, &y| eig.values[y].total_cmp(&eig.values[x]));
            let scale = eig.values[order[0]].abs().max(1.0);
            let converged = m == p
                || order.iter().take(k).all(|&i| {
                    // vectors[i] is the i-th Ritz vector in the Lanczos basis
                    (b * eig.vectors[i][m - 1]).abs() <= opts.tol * scale
                });
            if converged {
                let mut values = Vec::with_capacity(k);
                let mut vectors = Vec::with_capacity(k);
                for &i in order.iter().take(k) {
                    let s = &eig.vectors[i];
                    let mut v = vec![0.0; p];
                    for (coef, q) in s.iter().zip(&basis) {
                        axpy(*coef, q, &mut v);
                    }
                    let nv = norm(&v);
                    v.iter_mut().for_each(|x| *x /= nv);
                    values.push(eig.values[i]);
                    vectors.push(v);
                }
                return finish(values, vectors, p, k, z.variables().to_vec());
            }
            check_at = (m + 10).min(p);
        }

        if b <= 1e-12 * alpha.iter().fold(1.0f64, |acc, v| acc.max(v.abs())) {
            // Invariant subspace found; restart orthogonal to it.
            beta.push(0.0);
            q = random_unit(&mut rng, p, &basis).ok_or(Error::NoConvergence { residual: b })?;
        } else {
            beta.push(b);
            q = w.into_iter().map(|x| x / b).collect();
        }
    }
}

fn random_unit(rng: &mut ChaCha8Rng, p: usize, basis: &[Vec<f64>]) -> Option<Vec<f64>> {
    for _ in 0..10 {
        let mut v: Vec<f64> = (0..p).map(|_| rng.random::<f64>() - 0.5).collect();
        for _ in 0..2 {
            for b in basis {
                let c = dot(b, &v);
                axpy(-c, b, &mut v);
            }
        }
        let nv = norm(&v);
        if nv > 1e-8 {
            v.iter_mut().for_each(|x| *x /= nv);
            return Some(v);
        }
    }
    None
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::model::{kaiser_count, scree};
    use ndarray::array;

    #[test]
    fn two_by_two() {
        let r = 0.6;
        let c = CorrelationMatrix::from_array(array![[1.0, r], [r, 1.0]]).unwrap();
        let ex = eigendecompose(&c, FactorCount::All).unwrap();
        let ev = ex.spectrum.eigenvalues();
        assert!((ev[0] - 1.6).abs() < 1e-14 && (ev[1] - 0.4).abs() < 1e-14);
        assert_eq!(kaiser_count(&ex.spectrum), 1);
        // largest component positive
        let col: Vec<f64> = ex.eigenvectors.column(0).to_vec();
        assert!(col.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn identity_spectrum() {
        let c = CorrelationMatrix::from_array(Array2::eye(4)).unwrap();
        let ex = eigendecompose(&c, FactorCount::All).unwrap();
        assert!(ex
            .spectrum
            .eigenvalues()
            .iter()
            .all(|&v| (v - 1.0).abs() < 1e-15));
        assert!(ex
            .spectrum
            .explained()
            .iter()
            .all(|&v| (v - 0.25).abs() < 1e-15));
        assert_eq!(kaiser_count(&ex.spectrum), 0);
        // tie order: e1, e2, e3, e4
        for j in 0..4 {
            assert_eq!(ex.eigenvectors[[j, j]], 1.0);
        }
        let s = scree(&ex.spectrum, 4).unwrap();
        let cum: Vec<f64> = s.iter().map(|r| r.cumulative).collect();
        for (got, want) in cum.iter().zip([0.25, 0.5, 0.75, 1.0]) {
            assert!((got - want).abs() < 1e-15);
        }
        assert!(scree(&ex.spectrum, 5).is_err());
    }

    #[test]
    fn rejects_bad_input() {
        let asym = CorrelationMatrix::from_array(array![[1.0, 0.2], [0.3, 1.0]]).unwrap();
        assert!(matches!(
            eigendecompose(&asym, FactorCount::All),
            Err(Error::Domain(_))
        ));
        let not_corr = CorrelationMatrix::from_array(array![[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert!(matches!(
            eigendecompose(&not_corr, FactorCount::All),
            Err(Error::Domain(_))
        ));
        let c = CorrelationMatrix::from_array(Array2::eye(3)).unwrap();
        assert!(eigendecompose(&c, FactorCount::First(0)).is_err());
        assert!(eigendecompose(&c, FactorCount::First(4)).is_err());
    }
}
