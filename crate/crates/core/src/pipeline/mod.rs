//! Configuration and the staged end-to-end run.
//!
//! Stages run in order (ingest, filter, factor, rotate, score, designate,
//! select, map, then optionally drill and compare). Every artifact is written
//! under the output directory and hashed; `manifest.json` lists stages,
//! parameters, artifact hashes and warnings. Nothing in the manifest depends
//! on time or on absolute paths, so identical inputs give identical bytes.

mod formats;

use std::collections::BTreeSet;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub use formats::{
    read_scores_tsv, write_eigenvalues_tsv, write_loadings_text, write_loadings_tsv,
    write_scores_tsv, ModelFile,
};

use crate::decomposition::{
    compare_sets, designate, drill_down, select_positive, write_designations_tsv,
    ClassificationSet, DecompositionNode, DrillOptions,
};
use crate::error::{Error, Result};
use crate::factor::{
    correlation, extract, factor_scores, kaiser_count, standardize, EigenRoute, FactorModel,
    FitOptions, VarimaxOptions,
};
use crate::mapping::{
    build_graph, cosine_similarity, scatter_scores, write_pajek, AxisRule, Orientation, Scale,
};
use crate::matrix::{
    compute_stats, filter_by_variance, ingest_edge_list, read_labels, write_dropped_tsv,
    IngestOptions,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Edge list `cited<TAB>citing<TAB>count`.
    pub edges: PathBuf,
    /// Optional `id<TAB>label` file.
    pub labels: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub drop_diagonal: bool,
    /// Citing journals with population variance below this are not factored.
    pub variance_threshold: f64,
    pub k: usize,
    pub rotate: bool,
    /// Blank loadings below this magnitude in the text table.
    pub suppress_below: f64,
    /// 1-based factor whose positive-score set is selected, mapped and drilled.
    pub focus_factor: usize,
    pub isolate_cos: f64,
    pub edge_cos: f64,
    pub orientation: Orientation,
    pub scatter_fx: usize,
    pub scatter_fy: usize,
    pub scatter_min_abs: f64,
    pub scatter_axis_rule: AxisRule,
    pub scatter_log: bool,
    pub drill: bool,
    pub drill_k: usize,
    /// External set files compared against the selected set.
    pub compare: Vec<PathBuf>,
    pub route: EigenRoute,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            edges: PathBuf::from("edges.tsv"),
            labels: None,
            output_dir: PathBuf::from("out"),
            drop_diagonal: false,
            variance_threshold: 8.0,
            k: 12,
            rotate: true,
            suppress_below: 0.10,
            focus_factor: 1,
            isolate_cos: 0.2,
            edge_cos: 0.5,
            orientation: Orientation::CitedRows,
            scatter_fx: 1,
            scatter_fy: 2,
            scatter_min_abs: 10.0,
            scatter_axis_rule: AxisRule::Both,
            scatter_log: false,
            drill: false,
            drill_k: 12,
            compare: Vec::new(),
            route: EigenRoute::Auto,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.variance_threshold >= 0.0 && self.variance_threshold.is_finite()) {
            return bad(format!(
                "variance_threshold {} must be >= 0",
                self.variance_threshold
            ));
        }
        if self.k < 1 || self.drill_k < 1 {
            return bad("k and drill_k must be at least 1".into());
        }
        if !(0.0 <= self.isolate_cos && self.isolate_cos <= self.edge_cos && self.edge_cos <= 1.0) {
            return bad(format!(
                "need 0 <= isolate_cos ({}) <= edge_cos ({}) <= 1",
                self.isolate_cos, self.edge_cos
            ));
        }
        if [self.scatter_min_abs, self.suppress_below]
            .iter()
            .any(|v| v.is_nan() || *v < 0.0)
        {
            return bad("scatter_min_abs and suppress_below must be >= 0".into());
        }
        if self.focus_factor < 1 || self.scatter_fx < 1 || self.scatter_fy < 1 {
            return bad("factor indices are 1-based".into());
        }
        if self.scatter_fx == self.scatter_fy {
            return bad("scatter_fx and scatter_fy must differ".into());
        }
        if self.compare.len() > 4 {
            return bad("at most 4 external sets can be compared with the selection".into());
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    fn fit_options(&self, k: usize) -> FitOptions {
        FitOptions {
            k,
            rotate: self.rotate,
            varimax: VarimaxOptions::default(),
            route: self.route,
            krylov_seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageStatus {
    Ok,
    Skipped,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub status: StageStatus,
    pub params: Value,
    pub summary: Value,
    pub artifacts: Vec<Artifact>,
    pub warnings: Vec<String>,
    pub error: Option<String>,
}

const MANIFEST_FORMAT: &str = "factor-atlas-manifest/1";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub config: RunConfig,
    pub stages: Vec<StageRecord>,
    pub warnings: Vec<String>,
    pub complete: bool,
    /// Name of the stage that failed, if any.
    pub failed_stage: Option<String>,
}

impl Manifest {
    pub fn stage(&self, name: &str) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.name == name)
    }

    /// Every artifact path with its hash, in stage order.
    pub fn hashes(&self) -> Vec<(String, String)> {
        self.stages
            .iter()
            .flat_map(|s| {
                s.artifacts
                    .iter()
                    .map(|a| (a.path.clone(), a.sha256.clone()))
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

struct Run {
    dir: PathBuf,
    manifest: Manifest,
}

impl Run {
    fn write(&self, rec: &mut StageRecord, rel: &str, bytes: Vec<u8>) -> Result<()> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, &bytes)?;
        rec.artifacts.push(Artifact {
            path: rel.to_string(),
            sha256: sha256_hex(&bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    fn stage<T>(
        &mut self,
        name: &str,
        params: Value,
        body: impl FnOnce(&Run, &mut StageRecord) -> Result<T>,
    ) -> Result<T> {
        let mut rec = StageRecord {
            name: name.to_string(),
            status: StageStatus::Ok,
            params,
            summary: Value::Null,
            artifacts: Vec::new(),
            warnings: Vec::new(),
            error: None,
        };
        let out = body(self, &mut rec);
        if let Err(e) = &out {
            rec.status = StageStatus::Failed;
            rec.error = Some(e.to_string());
            self.manifest.failed_stage = Some(name.to_string());
        }
        let stage_warnings: Vec<String> = rec
            .warnings
            .iter()
            .map(|w| format!("{name}: {w}"))
            .collect();
        self.manifest.warnings.extend(stage_warnings);
        self.manifest.stages.push(rec);
        match out {
            Ok(v) => Ok(v),
            Err(e) => {
                self.save_manifest()?;
                Err(Error::Stage {
                    stage: name.to_string(),
                    source: Box::new(e),
                })
            }
        }
    }

    fn skip(&mut self, name: &str, reason: &str) {
        self.manifest.stages.push(StageRecord {
            name: name.to_string(),
            status: StageStatus::Skipped,
            params: Value::Null,
            summary: json!({ "reason": reason }),
            artifacts: Vec::new(),
            warnings: Vec::new(),
            error: None,
        });
    }

    fn save_manifest(&self) -> Result<()> {
        std::fs::write(self.dir.join(MANIFEST_FILE), self.manifest.to_json()?)?;
        Ok(())
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

fn to_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

/// Runs every stage, writing artifacts and `manifest.json` under
/// `cfg.output_dir`. On failure the partial manifest is still written and
/// the error names the stage.
pub fn run_pipeline(cfg: &RunConfig) -> Result<Manifest> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let mut run = Run {
        dir: cfg.output_dir.clone(),
        manifest: Manifest {
            format: MANIFEST_FORMAT.into(),
            config: cfg.clone(),
            stages: Vec::new(),
            warnings: Vec::new(),
            complete: false,
            failed_stage: None,
        },
    };

    let matrix = run.stage(
        "ingest",
        json!({ "edges": cfg.edges, "labels": cfg.labels, "drop_diagonal": cfg.drop_diagonal }),
        |r, rec| {
            let labels = match &cfg.labels {
                Some(p) => Some(read_labels(open(p)?)?),
                None => None,
            };
            let m = ingest_edge_list(
                open(&cfg.edges)?,
                labels.as_ref(),
                IngestOptions {
                    drop_diagonal: cfg.drop_diagonal,
                },
            )?;
            let stats = compute_stats(&m);
            r.write(rec, "matrix.json", m.to_json()?.into_bytes())?;
            r.write(
                rec,
                "stats.json",
                (serde_json::to_string_pretty(&stats)? + "\n").into_bytes(),
            )?;
            rec.summary = serde_json::to_value(&stats)?;
            Ok(m)
        },
    )?;

    let filtered = run.stage(
        "filter",
        json!({ "variance_threshold": cfg.variance_threshold }),
        |r, rec| {
            let f = filter_by_variance(&matrix, cfg.variance_threshold)?;
            r.write(rec, "filtered.json", f.matrix.to_json()?.into_bytes())?;
            r.write(
                rec,
                "dropped.tsv",
                to_bytes(|b| write_dropped_tsv(&f.dropped, b))?,
            )?;
            rec.summary = json!({ "kept": f.matrix.n_vars(), "dropped": f.dropped.len() });
            Ok(f.matrix)
        },
    )?;
    let labels = matrix.labels().clone();

    let opts = cfg.fit_options(cfg.k);
    let (z, corr, mut model) = run.stage(
        "factor",
        json!({ "k": cfg.k, "route": cfg.route, "seed": cfg.seed }),
        |r, rec| {
            let z = standardize(&filtered)?;
            let corr = correlation(&filtered)?;
            let ex = extract(&z, &corr, &opts)?;
            let model = FactorModel::from_extraction(&ex);
            r.write(
                rec,
                "eigenvalues.tsv",
                to_bytes(|b| write_eigenvalues_tsv(&model.spectrum, b))?,
            )?;
            r.write(
                rec,
                "loadings_unrotated.tsv",
                to_bytes(|b| write_loadings_tsv(&model.unrotated, &labels, b))?,
            )?;
            let ev = model.spectrum.eigenvalues();
            rec.summary = json!({
                "n_vars": filtered.n_vars(),
                "n_cases": filtered.n_cases(),
                "complete_spectrum": model.spectrum.is_complete(),
                "eigenvalues_above_1": kaiser_count(&model.spectrum),
                "eigenvalues_above_10": ev.iter().filter(|&&l| l > 10.0).count(),
            });
            Ok((z, corr, model))
        },
    )?;

    if cfg.rotate {
        run.stage(
            "rotate",
            json!({ "method": "varimax", "kaiser_normalize": opts.varimax.kaiser_normalize,
                    "tol": opts.varimax.tol, "max_sweeps": opts.varimax.max_sweeps }),
            |r, rec| {
                let rot = model.rotate(opts.varimax)?.clone();
                if !rot.converged {
                    rec.warnings.push(format!("varimax did not converge within {} sweeps", rot.sweeps));
                }
                r.write(rec, "loadings.tsv", to_bytes(|b| write_loadings_tsv(&model.loadings, &labels, b))?)?;
                r.write(
                    rec,
                    "loadings.txt",
                    to_bytes(|b| write_loadings_text(&model.loadings, &labels, cfg.suppress_below, b))?,
                )?;
                r.write(rec, "rotation.json", (serde_json::to_string_pretty(&rot)? + "\n").into_bytes())?;
                rec.summary = json!({ "sweeps": rot.sweeps, "converged": rot.converged, "criterion": rot.criterion });
                Ok(())
            },
        )?;
    } else {
        run.skip("rotate", "rotation disabled");
    }

    let scores = run.stage(
        "score",
        json!({ "method": if cfg.rotate { "regression" } else { "component" } }),
        |r, rec| {
            let s = factor_scores(&mut model, &z, &corr)?;
            if let Some(eps) = s.ridge {
                rec.warnings.push(format!(
                    "correlation matrix ill-conditioned; ridge {eps:e} added before inversion"
                ));
            }
            r.write(rec, "scores.tsv", to_bytes(|b| write_scores_tsv(&s, b))?)?;
            let bundle = ModelFile::new(model.clone(), Some(s.clone()), labels.clone());
            r.write(rec, "model.json", bundle.to_json()?.into_bytes())?;
            Ok(s)
        },
    )?;

    run.stage("designate", Value::Null, |r, rec| {
        let ds = designate(&model, &scores, &labels)?;
        let zeros: usize = ds.iter().map(|d| d.n_zero_scores).sum();
        if zeros > 0 {
            rec.warnings.push(format!(
                "{zeros} scores of exactly zero count as non-members"
            ));
        }
        r.write(
            rec,
            "designations.tsv",
            to_bytes(|b| write_designations_tsv(&ds, b))?,
        )?;
        rec.summary =
            json!({ "n_positive": ds.iter().map(|d| d.n_positive_scores).collect::<Vec<_>>() });
        Ok(())
    })?;

    let set_name = format!("set_F{}.txt", cfg.focus_factor);
    let selected = run.stage("select", json!({ "factor": cfg.focus_factor }), |r, rec| {
        let mut set = select_positive(&scores, cfg.focus_factor, format!("F{}", cfg.focus_factor))?;
        if let crate::decomposition::Provenance::Factor { model, .. } = &mut set.provenance {
            *model = "model.json".into();
        }
        r.write(rec, &set_name, to_bytes(|b| set.write(b))?)?;
        rec.summary = json!({ "size": set.len() });
        Ok(set)
    })?;

    run.stage(
        "map",
        json!({ "isolate_cos": cfg.isolate_cos, "edge_cos": cfg.edge_cos, "orientation": cfg.orientation,
                "scatter": { "fx": cfg.scatter_fx, "fy": cfg.scatter_fy, "min_abs": cfg.scatter_min_abs,
                             "axis_rule": cfg.scatter_axis_rule, "log": cfg.scatter_log } }),
        |r, rec| {
            let all_vars: BTreeSet<_> = matrix.variables().iter().copied().collect();
            let local = matrix.restrict(&selected.members, &all_vars);
            let sim = cosine_similarity(&local, cfg.orientation);
            rec.warnings.extend(sim.warnings());
            let g = build_graph(&sim, cfg.isolate_cos, cfg.edge_cos)?;
            r.write(rec, "map.net", to_bytes(|b| write_pajek(&g, b))?)?;
            let scale = if cfg.scatter_log { Scale::SignedLog10 } else { Scale::Linear };
            let sc = scatter_scores(&scores, cfg.scatter_fx, cfg.scatter_fy, cfg.scatter_min_abs, cfg.scatter_axis_rule, scale)?;
            if sc.n_log_excluded > 0 {
                rec.warnings.push(format!(
                    "{} points with a score in (0, 1] in magnitude left out of the log scatter",
                    sc.n_log_excluded
                ));
            }
            r.write(rec, "scatter.tsv", to_bytes(|b| sc.write_tsv(b))?)?;
            r.write(rec, "scatter.json", sc.sidecar_json()?.into_bytes())?;
            rec.summary = json!({
                "nodes": g.n_nodes(), "edges": g.n_edges(), "isolates_removed": g.removed.len(),
                "zero_profiles": sim.excluded_zero.len(), "scatter_points": sc.points.len(),
            });
            Ok(())
        },
    )?;

    if cfg.drill {
        run.stage("drill", json!({ "k": cfg.drill_k, "set": set_name }), |r, rec| {
            let root = DecompositionNode::root(matrix.clone());
            let child = drill_down(
                &root,
                &selected,
                &DrillOptions {
                    fit: cfg.fit_options(cfg.drill_k),
                    min_variance: None,
                },
            )?;
            let fitted = child.fitted.as_ref().expect("drill_down fits the child");
            rec.warnings.extend(fitted.warnings.iter().cloned());
            let m = &fitted.model;
            r.write(rec, "drill/eigenvalues.tsv", to_bytes(|b| write_eigenvalues_tsv(&m.spectrum, b))?)?;
            r.write(rec, "drill/loadings.tsv", to_bytes(|b| write_loadings_tsv(&m.loadings, &labels, b))?)?;
            r.write(rec, "drill/scores.tsv", to_bytes(|b| write_scores_tsv(&fitted.scores, b))?)?;
            r.write(rec, "drill/designations.tsv", to_bytes(|b| write_designations_tsv(&child.designations, b))?)?;
            let bundle = ModelFile::new(m.clone(), Some(fitted.scores.clone()), labels.clone());
            r.write(rec, "drill/model.json", bundle.to_json()?.into_bytes())?;
            rec.summary = json!({
                "n_cases": child.matrix.n_cases(),
                "n_vars": child.matrix.n_vars(),
                "citing_less": child.citing_less.len(),
                "zero_variance": child.zero_variance.len(),
                "eigenvalues_above_1": kaiser_count(&m.spectrum),
                "eigenvalues_above_10": m.spectrum.eigenvalues().iter().filter(|&&l| l > 10.0).count(),
                "n_positive": child.designations.iter().map(|d| d.n_positive_scores).collect::<Vec<_>>(),
            });
            Ok(())
        })?;
    } else {
        run.skip("drill", "drill disabled");
    }

    if cfg.compare.is_empty() {
        run.skip("compare", "no external sets");
    } else {
        run.stage("compare", json!({ "sets": cfg.compare }), |r, rec| {
            let mut sets = vec![selected.clone()];
            for p in &cfg.compare {
                let name = p
                    .file_stem()
                    .map_or("set".into(), |s| s.to_string_lossy().into_owned());
                sets.push(ClassificationSet::read(open(p)?, &name)?);
            }
            let report = compare_sets(&sets)?;
            r.write(
                rec,
                "compare.json",
                (serde_json::to_string_pretty(&report)? + "\n").into_bytes(),
            )?;
            r.write(rec, "compare.txt", report.summary().into_bytes())?;
            rec.summary = json!({ "union": report.union, "regions": report.regions.len() });
            Ok(())
        })?;
    }

    run.manifest.complete = true;
    run.save_manifest()?;
    Ok(run.manifest)
}
