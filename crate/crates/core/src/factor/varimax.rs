//! Orthogonal varimax rotation by cyclic planar rotations.
//!
//! Each factor pair is rotated by the angle that exactly maximizes the raw
//! varimax criterion restricted to that plane, so the criterion never
//! decreases from one planar step to the next. Sweeps visit pairs in the
//! fixed order (0,1), (0,2), …, (k-2,k-1).

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarimaxOptions {
    pub kaiser_normalize: bool,
    /// Stop once a sweep improves the criterion by less than this.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for VarimaxOptions {
    fn default() -> Self {
        VarimaxOptions {
            kaiser_normalize: true,
            tol: 1e-6,
            max_sweeps: 100,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VarimaxResult {
    /// Rotated loadings, p × k (denormalized).
    pub loadings: Array2<f64>,
    /// rotated = input · transform.
    pub transform: Array2<f64>,
    pub sweeps: usize,
    pub converged: bool,
    pub criterion: f64,
    /// Criterion before the first sweep and after every sweep.
    pub history: Vec<f64>,
}

/// Raw varimax criterion `Σⱼ [ mean(bᵢⱼ⁴) − mean(bᵢⱼ²)² ]` over all rows.
pub fn varimax_criterion(b: &Array2<f64>) -> f64 {
    let p = b.nrows() as f64;
    if p == 0.0 {
        return 0.0;
    }
    b.columns()
        .into_iter()
        .map(|c| {
            let (s2, s4) = c
                .iter()
                .fold((0.0, 0.0), |(s2, s4), v| (s2 + v * v, s4 + v.powi(4)));
            s4 / p - (s2 / p).powi(2)
        })
        .sum()
}

pub fn varimax(loadings: &Array2<f64>, opts: VarimaxOptions) -> Result<VarimaxResult> {
    let (p, k) = loadings.dim();
    if k < 2 {
        return Err(Error::domain(format!(
            "varimax needs at least 2 factors, got {k}"
        )));
    }

    // Rows entering the criterion; zero-communality rows pass through.
    let mut weights = vec![1.0; p];
    let mut rows = Vec::with_capacity(p);
    for i in 0..p {
        let h: f64 = loadings.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
        if opts.kaiser_normalize {
            if h > 0.0 {
                weights[i] = h;
                rows.push(i);
            }
        } else {
            rows.push(i);
        }
    }
    let mut b = Array2::zeros((rows.len(), k));
    for (r, &i) in rows.iter().enumerate() {
        for j in 0..k {
            b[[r, j]] = loadings[[i, j]] / weights[i];
        }
    }
    let mut t = Array2::<f64>::eye(k);

    let mut criterion = varimax_criterion(&b);
    let mut history = vec![criterion];
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        for j in 0..k - 1 {
            for l in j + 1..k {
                let phi = planar_angle(&b, j, l);
                if phi != 0.0 {
                    rotate_columns(&mut b, j, l, phi);
                    rotate_columns(&mut t, j, l, phi);
                }
            }
        }
        let next = varimax_criterion(&b);
        history.push(next);
        let gain = next - criterion;
        criterion = next;
        if gain < opts.tol {
            converged = true;
            break;
        }
    }

    // Reflect columns so the heavy tail of each factor is positive. The plain
    // loading sum is no use here: a factor that singles out one group against
    // a diffuse rest sums to about zero.
    let mut rotated = loadings.dot(&t);
    for j in 0..k {
        let col = rotated.column(j);
        let sum: f64 = col.iter().map(|v| v.powi(3)).sum();
        let flip = if sum != 0.0 {
            sum < 0.0
        } else {
            let mut big = 0;
            for (i, v) in col.iter().enumerate() {
                if v.abs() > col[big].abs() {
                    big = i;
                }
            }
            p > 0 && col[big] < 0.0
        };
        if flip {
            rotated.column_mut(j).mapv_inplace(|v| -v);
            t.column_mut(j).mapv_inplace(|v| -v);
        }
    }

    Ok(VarimaxResult {
        loadings: rotated,
        transform: t,
        sweeps,
        converged,
        criterion,
        history,
    })
}

/// Angle maximizing the criterion in the plane of columns `j` and `l`.
fn planar_angle(b: &Array2<f64>, j: usize, l: usize) -> f64 {
    let p = b.nrows() as f64;
    let (mut a, mut bb, mut c, mut d) = (0.0, 0.0, 0.0, 0.0);
    for r in 0..b.nrows() {
        let x = b[[r, j]];
        let y = b[[r, l]];
        let u = x * x - y * y;
        let v = 2.0 * x * y;
        a += u;
        bb += v;
        c += u * u - v * v;
        d += 2.0 * u * v;
    }
    let num = d - 2.0 * a * bb / p;
    let den = c - (a * a - bb * bb) / p;
    if num == 0.0 && den >= 0.0 {
        return 0.0;
    }
    0.25 * num.atan2(den)
}

fn rotate_columns(m: &mut Array2<f64>, j: usize, l: usize, phi: f64) {
    let (s, c) = phi.sin_cos();
    for r in 0..m.nrows() {
        let x = m[[r, j]];
        let y = m[[r, l]];
        m[[r, j]] = c * x + s * y;
        m[[r, l]] = -s * x + c * y;
    }
}
