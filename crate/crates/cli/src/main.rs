//! `factor-atlas`: journal classification from aggregated citation matrices.
//!
//! Every subcommand reads and writes plain files so the workflow can be run
//! step by step or all at once with `run`.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 data or domain
//! error, 4 numerical failure.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use factor_atlas::decomposition::{
    apply_factor_labels, compare_sets, designate, drill_down, local_environment,
    read_factor_labels, select_positive, write_designations_tsv, ClassificationSet,
    DecompositionNode, DrillOptions, EnvironmentRule, Provenance,
};
use factor_atlas::factor::{
    correlation, extract, factor_scores, kaiser_count, standardize, EigenRoute, FactorModel,
    FitOptions, VarimaxOptions,
};
use factor_atlas::mapping::{
    build_graph, cosine_similarity, export_pajek, scatter_scores, AxisRule, Orientation, Scale,
};
use factor_atlas::matrix::{
    compute_stats, filter_by_variance, ingest_edge_list, read_labels, write_dropped_tsv,
    IngestOptions,
};
use factor_atlas::pipeline::{
    read_scores_tsv, run_pipeline, write_eigenvalues_tsv, write_loadings_text, write_loadings_tsv,
    write_scores_tsv, ModelFile, RunConfig, MANIFEST_FILE,
};
use factor_atlas::synth::{
    evaluate_recovery, generate_block_model, AssignmentRule, BlockSpec, NestedSpec,
    PlantedAssignment,
};
use factor_atlas::{CitationMatrix, Error, ErrorKind, JournalId, Result};

#[derive(Parser)]
#[command(
    name = "factor-atlas",
    version,
    about = "Factor-analytic journal classification"
)]
struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true, env = "FACTOR_ATLAS_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read an edge list into a matrix file.
    Ingest {
        #[arg(long)]
        edges: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Drop self-citations.
        #[arg(long)]
        drop_diagonal: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print corpus statistics as JSON.
    Stats { matrix: PathBuf },
    /// Drop citing journals whose variance is below a threshold.
    Filter {
        matrix: PathBuf,
        #[arg(long, default_value_t = 8.0)]
        min_variance: f64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the dropped journals as TSV.
        #[arg(long)]
        dropped: Option<PathBuf>,
    },
    /// Extract (and rotate) a factor model.
    Factor {
        matrix: PathBuf,
        #[command(flatten)]
        fit: FitArgs,
        /// Also compute factor scores for the cited journals.
        #[arg(long)]
        scores: bool,
        /// Blank loadings below this magnitude in the text table.
        #[arg(long, default_value_t = 0.10)]
        suppress_below: f64,
        #[arg(long)]
        out_prefix: PathBuf,
    },
    /// Tabulate each factor's top journals and positive-score count.
    Designate {
        model: PathBuf,
        /// `factor<TAB>name` file with human-assigned factor names.
        #[arg(long)]
        names: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the journals scoring above zero on one factor.
    Select {
        scores: PathBuf,
        #[arg(long)]
        factor: usize,
        #[arg(long)]
        label: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Refactor the journals of a set.
    Drill {
        matrix: PathBuf,
        #[arg(long)]
        set: PathBuf,
        #[command(flatten)]
        fit: FitArgs,
        #[arg(long)]
        out_prefix: PathBuf,
    },
    /// Cut out the citation environment of one journal.
    Env {
        matrix: PathBuf,
        #[arg(long)]
        seed: JournalId,
        /// Threshold in percent of the seed's total cited / citing.
        #[arg(long, default_value_t = 0.5)]
        pct: f64,
        /// Require both thresholds instead of either.
        #[arg(long)]
        both: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a cosine-similarity journal map in Pajek format.
    Map {
        matrix: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        edge_cos: f64,
        #[arg(long, default_value_t = 0.2)]
        isolate_cos: f64,
        #[arg(long, value_enum, default_value_t = OrientationArg::Cited)]
        orientation: OrientationArg,
        /// Restrict the map to the cited journals of this set.
        #[arg(long)]
        set: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write two factors' scores as a filtered scatter series.
    Scatter {
        scores: PathBuf,
        #[arg(long, default_value_t = 1)]
        fx: usize,
        #[arg(long, default_value_t = 2)]
        fy: usize,
        #[arg(long, default_value_t = 10.0)]
        min_abs: f64,
        /// Keep points passing on either axis rather than both.
        #[arg(long)]
        either: bool,
        /// Signed log10 scale.
        #[arg(long)]
        log: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Venn regions and Jaccard indices of 2 to 5 sets.
    Compare {
        #[arg(num_args = 2..=5, required = true)]
        sets: Vec<PathBuf>,
        /// Write the full report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a planted block model.
    Synth {
        #[arg(long, default_value_t = 6)]
        blocks: usize,
        #[arg(long, default_value_t = 30)]
        size: usize,
        #[arg(long, default_value_t = 20.0)]
        lin: f64,
        #[arg(long, default_value_t = 0.5)]
        lout: f64,
        /// Split every block into this many sub-blocks.
        #[arg(long, requires = "lsub")]
        sub_blocks: Option<usize>,
        /// Within-sub-block intensity.
        #[arg(long, requires = "sub_blocks")]
        lsub: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// Also write the edge list.
        #[arg(long)]
        edges: Option<PathBuf>,
    },
    /// Score how well a k-factor model recovers planted blocks.
    Recover {
        matrix: PathBuf,
        truth: PathBuf,
        #[arg(long, default_value_t = 6)]
        k: usize,
        #[arg(long, value_enum, default_value_t = RuleArg::Scores)]
        rule: RuleArg,
    },
    /// Run the whole pipeline and write a manifest.
    Run(RunArgs),
}

#[derive(Args)]
struct FitArgs {
    #[arg(long, default_value_t = 12)]
    k: usize,
    #[arg(long, value_enum, default_value_t = RotateArg::Varimax)]
    rotate: RotateArg,
    #[arg(long, value_enum, default_value_t = RouteArg::Auto)]
    route: RouteArg,
    /// Seed of the Krylov start vector.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl FitArgs {
    fn options(&self) -> FitOptions {
        FitOptions {
            k: self.k,
            rotate: self.rotate == RotateArg::Varimax,
            varimax: VarimaxOptions::default(),
            route: self.route.into(),
            krylov_seed: self.seed,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// TOML config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    edges: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    variance_threshold: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    no_rotate: bool,
    #[arg(long)]
    focus_factor: Option<usize>,
    #[arg(long)]
    isolate_cos: Option<f64>,
    #[arg(long)]
    edge_cos: Option<f64>,
    #[arg(long)]
    scatter_min_abs: Option<f64>,
    #[arg(long)]
    drill: bool,
    #[arg(long)]
    drill_k: Option<usize>,
    /// External set to compare with the selection (repeatable).
    #[arg(long)]
    compare: Vec<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Print the effective config as TOML and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RotateArg {
    Varimax,
    None,
}

#[derive(Clone, Copy, ValueEnum)]
enum RouteArg {
    Auto,
    Dense,
    Krylov,
}

impl From<RouteArg> for EigenRoute {
    fn from(r: RouteArg) -> Self {
        match r {
            RouteArg::Auto => EigenRoute::Auto,
            RouteArg::Dense => EigenRoute::Dense,
            RouteArg::Krylov => EigenRoute::Krylov,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OrientationArg {
    Cited,
    Citing,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    Scores,
    Loadings,
    Positive,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot set up {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        // A closed pipe (`| head`) is not a failure.
        Err(Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        Error::Stage { source, .. } => exit_code(source),
        _ => match e.kind() {
            ErrorKind::Data => 3,
            ErrorKind::Numerical => 4,
        },
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// `PREFIX` + `suffix`, e.g. `out/chem` + `.scores.tsv`.
fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Ingest {
            edges,
            labels,
            drop_diagonal,
            out,
        } => {
            let labels = match labels {
                Some(p) => Some(read_labels(open(&p)?)?),
                None => None,
            };
            let m = ingest_edge_list(
                open(&edges)?,
                labels.as_ref(),
                IngestOptions { drop_diagonal },
            )?;
            m.save(&out)?;
            eprintln!(
                "{} cited x {} citing journals, {} links",
                m.n_cases(),
                m.n_vars(),
                m.n_links()
            );
        }
        Command::Stats { matrix } => {
            let m = CitationMatrix::load(&matrix)?;
            emit(&(serde_json::to_string_pretty(&compute_stats(&m))? + "\n"))?;
        }
        Command::Filter {
            matrix,
            min_variance,
            out,
            dropped,
        } => {
            let m = CitationMatrix::load(&matrix)?;
            let f = filter_by_variance(&m, min_variance)?;
            f.matrix.save(&out)?;
            if let Some(p) = dropped {
                let mut w = create(&p)?;
                write_dropped_tsv(&f.dropped, &mut w)?;
                w.flush()?;
            }
            eprintln!(
                "kept {} citing journals, dropped {}",
                f.matrix.n_vars(),
                f.dropped.len()
            );
        }
        Command::Factor {
            matrix,
            fit,
            scores,
            suppress_below,
            out_prefix,
        } => {
            let m = CitationMatrix::load(&matrix)?;
            let opts = fit.options();
            let z = standardize(&m)?;
            let corr = correlation(&m)?;
            let mut model = FactorModel::from_extraction(&extract(&z, &corr, &opts)?);
            if opts.rotate {
                let rot = model.rotate(opts.varimax)?;
                if !rot.converged {
                    eprintln!(
                        "warning: varimax did not converge within {} sweeps",
                        rot.sweeps
                    );
                }
            }
            let s = if scores {
                Some(factor_scores(&mut model, &z, &corr)?)
            } else {
                None
            };
            write_model(&model, s.as_ref(), m.labels(), suppress_below, &out_prefix)?;
            eprintln!(
                "{} components extracted; {} eigenvalues above 1",
                model.k(),
                kaiser_count(&model.spectrum)
            );
        }
        Command::Designate { model, names, out } => {
            let f = ModelFile::load(&model)?;
            let scores = f.scores.as_ref().ok_or_else(|| {
                Error::Domain("model file has no scores; rerun `factor` with --scores".into())
            })?;
            let mut ds = designate(&f.model, scores, &f.labels)?;
            if let Some(p) = names {
                apply_factor_labels(&mut ds, &read_factor_labels(open(&p)?)?);
            }
            match out {
                Some(p) => {
                    let mut w = create(&p)?;
                    write_designations_tsv(&ds, &mut w)?;
                    w.flush()?;
                }
                None => write_designations_tsv(&ds, io::stdout().lock())?,
            }
        }
        Command::Select {
            scores,
            factor,
            label,
            out,
        } => {
            let s = read_scores_tsv(open(&scores)?)?;
            let mut set =
                select_positive(&s, factor, label.unwrap_or_else(|| format!("F{factor}")))?;
            if let Provenance::Factor { model, .. } = &mut set.provenance {
                *model = scores.display().to_string();
            }
            let mut w = create(&out)?;
            set.write(&mut w)?;
            w.flush()?;
            eprintln!("{} journals score above zero on factor {factor}", set.len());
        }
        Command::Drill {
            matrix,
            set,
            fit,
            out_prefix,
        } => {
            let m = CitationMatrix::load(&matrix)?;
            let set = ClassificationSet::read(open(&set)?, &stem(&set))?;
            let root = DecompositionNode::root(m);
            let child = drill_down(
                &root,
                &set,
                &DrillOptions {
                    fit: fit.options(),
                    min_variance: None,
                },
            )?;
            let fitted = child.fitted.as_ref().expect("drill_down fits the child");
            for w in &fitted.warnings {
                eprintln!("warning: {w}");
            }
            write_model(
                &fitted.model,
                Some(&fitted.scores),
                root.matrix.labels(),
                0.10,
                &out_prefix,
            )?;
            let mut w = create(&with_suffix(&out_prefix, ".designations.tsv"))?;
            write_designations_tsv(&child.designations, &mut w)?;
            w.flush()?;
            eprintln!(
                "{} cases x {} citing journals ({} selected journals cite nothing here); {} eigenvalues above 1",
                child.matrix.n_cases(),
                child.matrix.n_vars(),
                child.citing_less.len(),
                kaiser_count(&fitted.model.spectrum)
            );
        }
        Command::Env {
            matrix,
            seed,
            pct,
            both,
            out,
        } => {
            let m = CitationMatrix::load(&matrix)?;
            let rule = if both {
                EnvironmentRule::Both
            } else {
                EnvironmentRule::Either
            };
            let env = local_environment(&m, seed, pct / 100.0, rule)?;
            env.save(&out)?;
            eprintln!(
                "{} journals in the environment of {seed}",
                env.n_cases().max(env.n_vars())
            );
        }
        Command::Map {
            matrix,
            edge_cos,
            isolate_cos,
            orientation,
            set,
            out,
        } => {
            let mut m = CitationMatrix::load(&matrix)?;
            if let Some(p) = set {
                let s = ClassificationSet::read(open(&p)?, &stem(&p))?;
                let vars = m.variables().iter().copied().collect();
                m = m.restrict(&s.members, &vars);
            }
            let orientation = match orientation {
                OrientationArg::Cited => Orientation::CitedRows,
                OrientationArg::Citing => Orientation::CitingColumns,
            };
            let sim = cosine_similarity(&m, orientation);
            for w in sim.warnings() {
                eprintln!("warning: {w}");
            }
            let g = build_graph(&sim, isolate_cos, edge_cos)?;
            export_pajek(&g, &out)?;
            eprintln!(
                "{} nodes, {} edges; {} isolates removed",
                g.n_nodes(),
                g.n_edges(),
                g.removed.len()
            );
        }
        Command::Scatter {
            scores,
            fx,
            fy,
            min_abs,
            either,
            log,
            out,
        } => {
            let s = read_scores_tsv(open(&scores)?)?;
            let rule = if either {
                AxisRule::Either
            } else {
                AxisRule::Both
            };
            let scale = if log {
                Scale::SignedLog10
            } else {
                Scale::Linear
            };
            let series = scatter_scores(&s, fx, fy, min_abs, rule, scale)?;
            let mut w = create(&out)?;
            series.write_tsv(&mut w)?;
            w.flush()?;
            std::fs::write(out.with_extension("json"), series.sidecar_json()?)?;
            if series.n_log_excluded > 0 {
                eprintln!(
                    "warning: {} points with a score in (0, 1] in magnitude left out of the log scale",
                    series.n_log_excluded
                );
            }
            eprintln!(
                "{} of {} journals plotted",
                series.points.len(),
                series.n_cases
            );
        }
        Command::Compare { sets, out } => {
            let sets = sets
                .iter()
                .map(|p| ClassificationSet::read(open(p)?, &stem(p)))
                .collect::<Result<Vec<_>>>()?;
            let report = compare_sets(&sets)?;
            if let Some(p) = out {
                std::fs::write(p, serde_json::to_string_pretty(&report)? + "\n")?;
            }
            emit(&report.summary())?;
        }
        Command::Synth {
            blocks,
            size,
            lin,
            lout,
            sub_blocks,
            lsub,
            seed,
            out,
            truth,
            edges,
        } => {
            let spec = BlockSpec {
                nested: sub_blocks
                    .zip(lsub)
                    .map(|(n_sub_blocks, lambda_sub_in)| NestedSpec {
                        n_sub_blocks,
                        lambda_sub_in,
                    }),
                ..BlockSpec::new(blocks, size, lin, lout, seed)
            };
            let (m, planted) = generate_block_model(&spec)?;
            m.save(&out)?;
            let mut w = create(&truth)?;
            planted.write_tsv(&mut w)?;
            w.flush()?;
            if let Some(p) = edges {
                let mut w = create(&p)?;
                m.write_edge_list(&mut w)?;
                w.flush()?;
            }
            eprintln!(
                "{} journals, {} citations",
                m.n_cases(),
                m.total_citations()
            );
        }
        Command::Recover {
            matrix,
            truth,
            k,
            rule,
        } => {
            let m = CitationMatrix::load(&matrix)?;
            let t = PlantedAssignment::read_tsv(open(&truth)?)?;
            let rule = match rule {
                RuleArg::Scores => AssignmentRule::Scores,
                RuleArg::Loadings => AssignmentRule::Loadings,
                RuleArg::Positive => AssignmentRule::Positive,
            };
            let report = evaluate_recovery(&m, &t, k, rule)?;
            emit(&(serde_json::to_string_pretty(&report)? + "\n"))?;
        }
        Command::Run(args) => {
            let cfg = run_config(&args)?;
            if args.print_config {
                emit(&cfg.to_toml()?)?;
                return Ok(());
            }
            let manifest = run_pipeline(&cfg).inspect_err(|_| {
                eprintln!(
                    "partial manifest written to {}",
                    cfg.output_dir.join(MANIFEST_FILE).display()
                );
            })?;
            for w in &manifest.warnings {
                eprintln!("warning: {w}");
            }
            eprintln!(
                "{} stages; manifest at {}",
                manifest.stages.len(),
                cfg.output_dir.join(MANIFEST_FILE).display()
            );
        }
    }
    Ok(())
}

fn emit(text: &str) -> Result<()> {
    let mut out = io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn stem(p: &Path) -> String {
    p.file_stem()
        .map_or_else(|| "set".into(), |s| s.to_string_lossy().into_owned())
}

fn write_model(
    model: &FactorModel,
    scores: Option<&factor_atlas::factor::ScoreMatrix>,
    labels: &std::collections::BTreeMap<JournalId, String>,
    suppress_below: f64,
    prefix: &Path,
) -> Result<()> {
    let mut w = create(&with_suffix(prefix, ".eigenvalues.tsv"))?;
    write_eigenvalues_tsv(&model.spectrum, &mut w)?;
    w.flush()?;
    let mut w = create(&with_suffix(prefix, ".loadings.tsv"))?;
    write_loadings_tsv(&model.loadings, labels, &mut w)?;
    w.flush()?;
    let mut w = create(&with_suffix(prefix, ".loadings.txt"))?;
    write_loadings_text(&model.loadings, labels, suppress_below, &mut w)?;
    w.flush()?;
    if let Some(s) = scores {
        let mut w = create(&with_suffix(prefix, ".scores.tsv"))?;
        write_scores_tsv(s, &mut w)?;
        w.flush()?;
    }
    ModelFile::new(model.clone(), scores.cloned(), labels.clone())
        .save(with_suffix(prefix, ".model.json"))?;
    Ok(())
}

fn run_config(a: &RunArgs) -> Result<RunConfig> {
    let mut cfg = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = &a.edges {
        cfg.edges = v.clone();
    }
    if let Some(v) = &a.labels {
        cfg.labels = Some(v.clone());
    }
    if let Some(v) = &a.out_dir {
        cfg.output_dir = v.clone();
    }
    if let Some(v) = a.variance_threshold {
        cfg.variance_threshold = v;
    }
    if let Some(v) = a.k {
        cfg.k = v;
    }
    if a.no_rotate {
        cfg.rotate = false;
    }
    if let Some(v) = a.focus_factor {
        cfg.focus_factor = v;
    }
    if let Some(v) = a.isolate_cos {
        cfg.isolate_cos = v;
    }
    if let Some(v) = a.edge_cos {
        cfg.edge_cos = v;
    }
    if let Some(v) = a.scatter_min_abs {
        cfg.scatter_min_abs = v;
    }
    if a.drill {
        cfg.drill = true;
    }
    if let Some(v) = a.drill_k {
        cfg.drill_k = v;
    }
    if !a.compare.is_empty() {
        cfg.compare = a.compare.clone();
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    cfg.validate()?;
    Ok(cfg)
}
