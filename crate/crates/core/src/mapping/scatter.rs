use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor::ScoreMatrix;
use crate::matrix::JournalId;

/// Whether the magnitude filter must hold on both axes or on either.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisRule {
    #[default]
    Both,
    Either,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    #[default]
    Linear,
    /// `sign(x)·log10|x|`; points with a coordinate in (0, 1] in magnitude
    /// are dropped and counted.
    SignedLog10,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub id: JournalId,
    pub label: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterSeries {
    /// 1-based factor on each axis.
    pub fx: usize,
    pub fy: usize,
    pub rotated: bool,
    pub min_abs: f64,
    pub axis_rule: AxisRule,
    pub scale: Scale,
    pub n_cases: usize,
    /// Cases failing the magnitude filter.
    pub n_below_threshold: usize,
    /// Cases dropped by the log scale's (0, 1] rule.
    pub n_log_excluded: usize,
    #[serde(skip)]
    pub points: Vec<ScatterPoint>,
}

impl ScatterSeries {
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "id\tlabel\tx\ty")?;
        for p in &self.points {
            writeln!(out, "{}\t{}\t{}\t{}", p.id, p.label, p.x, p.y)?;
        }
        Ok(())
    }

    /// Axes, thresholds, scale and exclusion counts as JSON.
    pub fn sidecar_json(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        v["n_points"] = self.points.len().into();
        v["transform"] = match self.scale {
            Scale::Linear => "identity",
            Scale::SignedLog10 => "sign(x)*log10(|x|)",
        }
        .into();
        Ok(serde_json::to_string_pretty(&v)? + "\n")
    }
}

fn passes(v: f64, min_abs: f64) -> bool {
    min_abs <= 0.0 || v.abs() > min_abs
}

fn signed_log10(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v.signum() * v.abs().log10()
    }
}

/// Scores of every case on factors `fx` and `fy` (1-based), filtered by
/// `|score| > min_abs` under `axis_rule` (`min_abs <= 0` keeps everything).
pub fn scatter_scores(
    scores: &ScoreMatrix,
    fx: usize,
    fy: usize,
    min_abs: f64,
    axis_rule: AxisRule,
    scale: Scale,
) -> Result<ScatterSeries> {
    let k = scores.k();
    if fx == 0 || fy == 0 || fx > k || fy > k {
        return Err(Error::domain(format!(
            "factors {fx} and {fy} must lie in 1..={k}"
        )));
    }
    if fx == fy {
        return Err(Error::domain("scatter axes must be different factors"));
    }
    let mut series = ScatterSeries {
        fx,
        fy,
        rotated: scores.rotated,
        min_abs,
        axis_rule,
        scale,
        n_cases: scores.n_cases(),
        n_below_threshold: 0,
        n_log_excluded: 0,
        points: Vec::new(),
    };
    for i in 0..scores.n_cases() {
        let x = scores.values[[i, fx - 1]];
        let y = scores.values[[i, fy - 1]];
        let keep = match axis_rule {
            AxisRule::Both => passes(x, min_abs) && passes(y, min_abs),
            AxisRule::Either => passes(x, min_abs) || passes(y, min_abs),
        };
        if !keep {
            series.n_below_threshold += 1;
            continue;
        }
        let (x, y) = match scale {
            Scale::Linear => (x, y),
            Scale::SignedLog10 => {
                let small = |v: f64| v != 0.0 && v.abs() <= 1.0;
                if small(x) || small(y) {
                    series.n_log_excluded += 1;
                    continue;
                }
                (signed_log10(x), signed_log10(y))
            }
        };
        series.points.push(ScatterPoint {
            id: scores.cases[i],
            label: scores.labels[i].clone(),
            x,
            y,
        });
    }
    Ok(series)
}
