//! The `pedrisk` command line: staged commands that read a TOML config
//! and write stable artifacts under the output directory.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::config::{Partition, RunConfig};
use crate::dataset::{LabeledDataset, TargetKind};
use crate::ensemble::{grid_search_cells, write_leaderboard, ModelFile, ModelKind};
use crate::error::{Error, Result};
use crate::geo::{
    aggregate_districts, boundaries_to_geojson, export_choropleth, grid_districts, parse_boundaries, spatial_join,
    write_summaries, BoundaryLayout, Measure,
};
use crate::ingest::{
    generate_synthetic, parse_casualties, parse_collisions, write_casualties, write_collisions, CasualtyLayout,
    CasualtyRow, CollisionLayout, CollisionRecord, Field, SynthSpec,
};
use crate::metrics::{render_table, report, EvalReport};
use crate::pipeline::{prepare, Prepared};
use crate::resample::{smote, stratified_split, SplitResult};
use crate::shap::{explain_dataset, write_beeswarm, GlobalImportance};
use crate::targets::TargetTable;

#[derive(Debug, Parser)]
#[command(name = "pedrisk", version, about = "Pedestrian collision risk modelling toolkit")]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured target.
    #[arg(long, global = true)]
    pub target: Option<TargetKind>,
    /// Decision threshold for the active target.
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse, repair and label the inputs.
    Prep,
    /// Per-variable value counts.
    Describe,
    /// Fit baseline and tuned models and evaluate them on the test split.
    Train,
    /// Shapley attributions for a saved model.
    Explain {
        #[arg(long)]
        model: PathBuf,
    },
    /// Assign collisions to districts and export district summaries.
    Spatial {
        #[arg(long)]
        measure: Option<Measure>,
    },
    /// Write a synthetic dataset with planted effects plus a config for it.
    Synth {
        #[arg(long, default_value_t = 20_000)]
        rows: usize,
    },
}

/// Error plus the process exit code for it.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: Error,
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.error)
    }
}

pub mod exit {
    pub const CONFIG: i32 = 1;
    pub const INGEST: i32 = 2;
    pub const MODELING: i32 = 3;
    pub const EXPLAIN: i32 = 4;
    pub const SPATIAL: i32 = 5;
}

fn fail(code: i32) -> impl Fn(Error) -> Failure {
    move |error| Failure { code, error }
}

/// Stable artifact names under the output directory.
pub mod artifact {
    pub const COLLISIONS_CLEAN: &str = "collisions_clean.csv";
    pub const TARGETS: &str = "targets.csv";
    pub const IMPUTATION_LOG: &str = "imputation_log.json";
    pub const INVALID_SCAN: &str = "invalid_scan.json";
    pub const DROPPED_OUTLIERS: &str = "dropped_outliers.csv";
    pub const MARGINALS_JSON: &str = "marginals.json";
    pub const MARGINALS_CSV: &str = "marginals.csv";
    pub const DESCRIBE_DIR: &str = "describe";
    pub const SPLIT: &str = "split.csv";
    pub const REPORTS_TXT: &str = "reports.txt";
    pub const TRAIN_SUMMARY: &str = "train_summary.json";
    pub const SHAP_DIR: &str = "shap";
    pub const DISTRICT_SUMMARY: &str = "district_summary.csv";
    pub const CHOROPLETH: &str = "choropleth.geojson";
    pub const UNMATCHED: &str = "unmatched.csv";
    pub const SPATIAL_JOIN: &str = "spatial_join.json";
    pub const SYNTH_COLLISIONS: &str = "collisions.csv";
    pub const SYNTH_CASUALTIES: &str = "casualties.csv";
    pub const SYNTH_BOUNDARIES: &str = "boundaries.geojson";
    pub const SYNTH_TRUTH: &str = "truth.csv";
    pub const SYNTH_CONFIG: &str = "pedrisk.toml";

    pub fn model(kind: &str, stage: &str) -> String {
        format!("model_{kind}_{stage}.json")
    }

    pub fn report(kind: &str, stage: &str, ext: &str) -> String {
        format!("report_{kind}_{stage}.{ext}")
    }

    pub fn leaderboard(kind: &str) -> String {
        format!("leaderboard_{kind}.csv")
    }
}

/// Parses the config and runs the command, inside a dedicated thread pool
/// when `--threads` is given.
pub fn run(cli: Cli) -> std::result::Result<(), Failure> {
    match cli.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Failure { code: exit::CONFIG, error: Error::Config(e.to_string()) })?;
            pool.install(|| dispatch(&cli))
        }
        None => dispatch(&cli),
    }
}

fn dispatch(cli: &Cli) -> std::result::Result<(), Failure> {
    if let Command::Synth { rows } = cli.command {
        let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("synthetic"));
        return cmd_synth(&out, rows, cli.seed.unwrap_or(42)).map_err(fail(exit::INGEST));
    }
    let cfg = load_config(cli).map_err(fail(exit::CONFIG))?;
    match &cli.command {
        Command::Prep => cmd_prep(&cfg).map_err(fail(exit::INGEST)),
        Command::Describe => cmd_describe(&cfg).map_err(fail(exit::INGEST)),
        Command::Train => cmd_train(&cfg).map_err(fail(exit::MODELING)),
        Command::Explain { model } => cmd_explain(&cfg, model).map_err(fail(exit::EXPLAIN)),
        Command::Spatial { measure } => {
            let measure = measure.unwrap_or(cfg.spatial.measure);
            cmd_spatial(&cfg, measure).map_err(fail(exit::SPATIAL))
        }
        Command::Synth { .. } => unreachable!("handled above"),
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let path = cli.config.as_ref().ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(t) = cli.target {
        cfg.target = t;
    }
    if let Some(t) = cli.threshold {
        cfg.thresholds.insert(cfg.target, t);
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    cfg.validate()?;
    let needs_raw = matches!(cli.command, Command::Prep | Command::Describe);
    if needs_raw {
        cfg.check_inputs()?;
    }
    if matches!(cli.command, Command::Spatial { .. }) {
        match &cfg.input.boundaries {
            Some(b) if b.is_file() => {}
            Some(b) => return Err(Error::Config(format!("boundaries file {} does not exist", b.display()))),
            None => return Err(Error::Config("input.boundaries is not set".into())),
        }
    }
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
    Ok(cfg)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

fn read_raw(cfg: &RunConfig) -> Result<(Vec<CollisionRecord>, Vec<CasualtyRow>)> {
    let schema = cfg.schema();
    let c = &cfg.input.collisions;
    let collisions = parse_collisions(open(c)?, &c.display().to_string(), &schema, &cfg.input.collision_layout)?;
    let k = &cfg.input.casualties;
    let casualties = parse_casualties(open(k)?, &k.display().to_string(), &cfg.input.casualty_layout)?;
    Ok((collisions, casualties))
}

fn prepare_from_config(cfg: &RunConfig) -> Result<Prepared> {
    let (collisions, casualties) = read_raw(cfg)?;
    prepare(&collisions, &casualties, &cfg.schema(), &cfg.clean)
}

pub fn cmd_prep(cfg: &RunConfig) -> Result<()> {
    let p = prepare_from_config(cfg)?;
    let out = &cfg.output_dir;
    let schema = cfg.schema();
    write_collisions(
        create(&out.join(artifact::COLLISIONS_CLEAN))?,
        &p.collisions,
        &schema,
        &cfg.input.collision_layout,
    )?;
    p.targets.write_csv(create(&out.join(artifact::TARGETS))?)?;
    write_json(&out.join(artifact::IMPUTATION_LOG), &p.imputation)?;
    write_json(&out.join(artifact::INVALID_SCAN), &p.scan)?;
    let mut w = csv::Writer::from_writer(create(&out.join(artifact::DROPPED_OUTLIERS))?);
    w.write_record(["collision_id"])?;
    for id in &p.dropped_outliers {
        w.write_record([id])?;
    }
    w.flush().map_err(|e| Error::io(out, e))?;
    write_json(&out.join(artifact::MARGINALS_JSON), &p.marginals)?;

    let m = &p.marginals;
    let mut w = csv::Writer::from_writer(create(&out.join(artifact::MARGINALS_CSV))?);
    w.write_record(["variable", "level", "count"])?;
    let mut rows: Vec<(&str, &str, usize)> = vec![("collisions", "all", m.collisions)];
    for (name, counts) in [
        ("pedestrian", m.pedestrian),
        ("over_serious", m.over_serious),
        ("pedestrian_over_serious", m.pedestrian_over_serious),
    ] {
        rows.push((name, "0", counts[0]));
        rows.push((name, "1", counts[1]));
    }
    for (k, level) in ["fatal", "serious", "slight"].iter().enumerate() {
        rows.push(("collision_severity", level, m.worst_severity[k]));
    }
    for (k, level) in ["fatal", "serious", "slight"].iter().enumerate() {
        rows.push(("casualty_severity", level, m.casualty_severity[k]));
    }
    rows.push(("collisions_without_casualties", "all", m.collisions_without_casualties));
    for (v, l, c) in rows {
        w.write_record([v, l, &c.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(out, e))?;

    println!("collisions parsed: {}", p.scan.total_rows);
    println!("rows with invalid codes: {}", p.scan.affected_rows);
    println!("cells imputed: {}", p.imputation.iter().map(|l| l.replaced_count).sum::<usize>());
    println!("outliers dropped: {}", p.dropped_outliers.len());
    println!(
        "positives: pedestrian {} / over_serious {} / pedestrian_over_serious {}",
        m.pedestrian[1], m.over_serious[1], m.pedestrian_over_serious[1]
    );
    Ok(())
}

pub fn cmd_describe(cfg: &RunConfig) -> Result<()> {
    let p = prepare_from_config(cfg)?;
    let dir = cfg.output_dir.join(artifact::DESCRIBE_DIR);
    let mut summary = csv::Writer::from_writer(create(&dir.join("summary.csv"))?);
    summary.write_record(["variable", "count", "min", "mean", "max"])?;
    for &f in &cfg.describe.variables {
        let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
        for r in &p.collisions {
            *counts.entry(r.get(f)).or_default() += 1;
        }
        write_counts(&dir.join(format!("{}.csv", f.name())), counts.iter().map(|(k, v)| (k.to_string(), *v)))?;
        let n = p.collisions.len();
        let sum: i64 = p.collisions.iter().map(|r| r.get(f)).sum();
        let mean = if n == 0 { 0.0 } else { sum as f64 / n as f64 };
        summary.write_record([
            f.name().to_string(),
            n.to_string(),
            counts.keys().next().map_or(String::new(), |v| v.to_string()),
            format!("{mean:.4}"),
            counts.keys().next_back().map_or(String::new(), |v| v.to_string()),
        ])?;
    }
    summary.flush().map_err(|e| Error::io(&dir, e))?;
    let levels = ["1", "2", "3"];
    let m = &p.marginals;
    write_counts(
        &dir.join("collision_severity.csv"),
        levels.iter().zip(m.worst_severity).map(|(l, c)| (l.to_string(), c)),
    )?;
    write_counts(
        &dir.join("casualty_severity.csv"),
        levels.iter().zip(m.casualty_severity).map(|(l, c)| (l.to_string(), c)),
    )?;
    println!("described {} variables over {} collisions", cfg.describe.variables.len(), p.collisions.len());
    Ok(())
}

fn write_counts(path: &Path, rows: impl Iterator<Item = (String, usize)>) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["value", "count"])?;
    for (v, c) in rows {
        w.write_record([v, c.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Cleaned collisions and targets written by `prep`.
pub fn load_prepared(cfg: &RunConfig) -> Result<(Vec<CollisionRecord>, TargetTable)> {
    let path = cfg.output_dir.join(artifact::COLLISIONS_CLEAN);
    let collisions =
        parse_collisions(open(&path)?, &path.display().to_string(), &cfg.schema(), &cfg.input.collision_layout)?;
    let targets = TargetTable::read_csv(open(&cfg.output_dir.join(artifact::TARGETS))?)?;
    Ok((collisions, targets))
}

fn load_dataset(cfg: &RunConfig, target: TargetKind) -> Result<LabeledDataset> {
    let (collisions, targets) = load_prepared(cfg)?;
    crate::targets::encode(&collisions, &targets, target, &cfg.features, &cfg.schema())
}

#[derive(Serialize)]
struct KindSummary {
    kind: ModelKind,
    baseline_params: String,
    tuned_params: String,
    tuned_cell: usize,
    baseline_validation_score: Option<f64>,
    tuned_validation_score: Option<f64>,
    baseline_test_auc: f64,
    tuned_test_auc: f64,
}

#[derive(Serialize)]
struct TrainSummary {
    target: TargetKind,
    threshold: f64,
    seed: u64,
    train_rows: usize,
    test_rows: usize,
    train_class_counts: [usize; 2],
    test_class_counts: [usize; 2],
    smote_synthetic_rows: usize,
    models: Vec<KindSummary>,
}

pub fn cmd_train(cfg: &RunConfig) -> Result<()> {
    let target = cfg.target;
    let threshold = cfg.threshold_for(target);
    let data = load_dataset(cfg, target)?;
    let split = stratified_split(&data, cfg.split.test_fraction, cfg.seed)?;
    write_split(&cfg.output_dir.join(artifact::SPLIT), &data, &split)?;

    let smote_cfg = cfg.smote_config();
    let fit_data = match &smote_cfg {
        Some(s) => smote(&split.train, s)?.dataset,
        None => split.train.clone(),
    };
    let out = &cfg.output_dir;
    let mut columns: Vec<(String, EvalReport)> = Vec::new();
    let mut kinds = Vec::new();
    for &kind in &cfg.models.kinds {
        let name = kind.name();
        let base = cfg.model_config(kind);
        let spec = cfg.grid_spec(kind);
        // The baseline is cell 0, so the winner never scores below it.
        let mut cells = vec![base.clone()];
        cells.extend(spec.expand(&base));
        let grid = grid_search_cells(&split.train, cells, spec, smote_cfg.as_ref(), cfg.seed)?;
        write_leaderboard(create(&out.join(artifact::leaderboard(name)))?, kind, &grid.leaderboard)?;

        let mut aucs = Vec::new();
        for (stage, config) in [("baseline", &base), ("tuned", &grid.best)] {
            let model = config.fit(&fit_data, cfg.seed)?;
            let probs = model.predict(&split.test)?;
            let tag = format!("{name}_{stage}");
            let r = report(&split.test.labels, &probs, threshold, target, tag.clone())?;
            aucs.push(r.roc_auc);
            let file = ModelFile::new(model, target, data.feature_names().to_vec());
            write_text(&out.join(artifact::model(name, stage)), &(file.to_json()? + "\n"))?;
            write_json(&out.join(artifact::report(name, stage, "json")), &r)?;
            write_text(&out.join(artifact::report(name, stage, "txt")), &render_table(&[(&tag, &r)]))?;
            println!("{tag}: accuracy {:.2}% roc_auc {:.3}", r.accuracy * 100.0, r.roc_auc);
            columns.push((tag, r));
        }
        kinds.push(KindSummary {
            kind,
            baseline_params: base.describe(),
            tuned_params: grid.best.describe(),
            tuned_cell: grid.best_index,
            baseline_validation_score: grid.leaderboard[0].score,
            tuned_validation_score: grid.leaderboard[grid.best_index].score,
            baseline_test_auc: aucs[0],
            tuned_test_auc: aucs[1],
        });
    }
    let refs: Vec<(&str, &EvalReport)> = columns.iter().map(|(t, r)| (t.as_str(), r)).collect();
    write_text(&out.join(artifact::REPORTS_TXT), &render_table(&refs))?;
    write_json(
        &out.join(artifact::TRAIN_SUMMARY),
        &TrainSummary {
            target,
            threshold,
            seed: cfg.seed,
            train_rows: split.train.n_rows(),
            test_rows: split.test.n_rows(),
            train_class_counts: split.train.class_counts(),
            test_class_counts: split.test.class_counts(),
            smote_synthetic_rows: fit_data.n_rows() - split.train.n_rows(),
            models: kinds,
        },
    )
}

fn write_split(path: &Path, data: &LabeledDataset, split: &SplitResult) -> Result<()> {
    let mut part = vec![""; data.n_rows()];
    for &i in &split.train_indices {
        part[i] = "train";
    }
    for &i in &split.test_indices {
        part[i] = "test";
    }
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["row_id", "partition"])?;
    for (id, p) in data.row_ids.iter().zip(part) {
        w.write_record([id.as_str(), p])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `m` evenly spaced indices out of `n`.
fn spread(n: usize, m: usize) -> Vec<usize> {
    if m >= n {
        (0..n).collect()
    } else {
        (0..m).map(|i| i * n / m).collect()
    }
}

pub fn cmd_explain(cfg: &RunConfig, model_path: &Path) -> Result<()> {
    let file = ModelFile::load(model_path)?;
    let expected: Vec<String> = cfg.features.iter().map(|f| f.name().to_string()).collect();
    if file.feature_names != expected {
        return Err(Error::Config(format!(
            "model features {:?} differ from configured features {:?}",
            file.feature_names, expected
        )));
    }
    let data = load_dataset(cfg, file.target)?;
    let split = stratified_split(&data, cfg.split.test_fraction, cfg.seed)?;
    let part = match cfg.explain.rows {
        Partition::Test => split.test,
        Partition::Train => split.train,
    };
    let rows = spread(part.n_rows(), cfg.explain.max_rows.unwrap_or(usize::MAX));
    let sample = part.subset(&rows);
    let explanations = explain_dataset(&file.model, &sample)?;
    let importance = GlobalImportance::from_explanations(sample.feature_names(), &explanations);

    let stem = model_path.file_stem().and_then(|s| s.to_str()).unwrap_or("model");
    let dir = cfg.output_dir.join(artifact::SHAP_DIR);
    write_text(&dir.join(format!("{stem}_importance.json")), &(importance.to_json()? + "\n"))?;
    write_beeswarm(create(&dir.join(format!("{stem}_beeswarm.csv")))?, &sample, &explanations, &importance)?;
    write_json(&dir.join(format!("{stem}_explanations.json")), &explanations)?;
    println!(
        "explained {} rows; top features: {}",
        sample.n_rows(),
        importance.ranked_names()[..3.min(sample.n_features())].join(", ")
    );
    Ok(())
}

#[derive(Serialize)]
struct JoinStats<'a> {
    total: usize,
    matched: usize,
    unmatched: usize,
    without_coordinates: usize,
    match_rate: f64,
    bbox_share: f64,
    measure: &'a str,
    overlaps: &'a [(String, Vec<String>)],
}

pub fn cmd_spatial(cfg: &RunConfig, measure: Measure) -> Result<()> {
    let path = cfg.input.boundaries.as_ref().ok_or_else(|| Error::Config("input.boundaries is not set".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let polygons = parse_boundaries(&text, &cfg.input.boundary_layout)?;
    let (collisions, targets) = load_prepared(cfg)?;
    let join = spatial_join(&collisions, &polygons)?;
    if join.matched() + join.unmatched.len() != join.total() || join.total() != collisions.len() {
        return Err(Error::Geometry("join lost collisions".into()));
    }
    let summaries = aggregate_districts(&join, &targets, &polygons)?;
    let out = &cfg.output_dir;
    write_summaries(create(&out.join(artifact::DISTRICT_SUMMARY))?, &summaries)?;
    write_text(&out.join(artifact::CHOROPLETH), &(export_choropleth(&summaries, &polygons, measure)? + "\n"))?;
    let no_coords: std::collections::HashSet<&str> = join.without_coordinates.iter().map(String::as_str).collect();
    let mut w = csv::Writer::from_writer(create(&out.join(artifact::UNMATCHED))?);
    w.write_record(["collision_id", "reason"])?;
    for id in &join.unmatched {
        let reason = if no_coords.contains(id.as_str()) { "no_coordinates" } else { "outside_districts" };
        w.write_record([id.as_str(), reason])?;
    }
    w.flush().map_err(|e| Error::io(out, e))?;
    write_json(
        &out.join(artifact::SPATIAL_JOIN),
        &JoinStats {
            total: join.total(),
            matched: join.matched(),
            unmatched: join.unmatched.len(),
            without_coordinates: join.without_coordinates.len(),
            match_rate: join.match_rate(),
            bbox_share: join.bbox_share,
            measure: measure.name(),
            overlaps: &join.overlaps,
        },
    )?;
    println!(
        "matched {} + unmatched {} = {} collisions; match rate {:.2}%",
        join.matched(),
        join.unmatched.len(),
        join.total(),
        100.0 * join.match_rate()
    );
    Ok(())
}

/// Writes generated inputs, a 2×2 district grid covering them, the true
/// probabilities and a ready-to-run config.
pub fn cmd_synth(out: &Path, rows: usize, seed: u64) -> Result<()> {
    let spec = SynthSpec::default();
    let data = generate_synthetic(rows, seed, &spec);
    let schema = crate::ingest::default_schema();
    write_collisions(
        create(&out.join(artifact::SYNTH_COLLISIONS))?,
        &data.collisions,
        &schema,
        &CollisionLayout::default(),
    )?;
    write_casualties(create(&out.join(artifact::SYNTH_CASUALTIES))?, &data.casualties, &CasualtyLayout::default())?;
    let districts = grid_districts(spec.extent, 2, 2)?;
    write_text(
        &out.join(artifact::SYNTH_BOUNDARIES),
        &(boundaries_to_geojson(&districts, &BoundaryLayout::default())? + "\n"),
    )?;
    let mut w = csv::Writer::from_writer(create(&out.join(artifact::SYNTH_TRUTH))?);
    w.write_record(["collision_id", "severity_prob", "pedestrian_prob", "severe", "pedestrian"])?;
    for (i, r) in data.collisions.iter().enumerate() {
        w.write_record([
            r.collision_id.clone(),
            data.severity_prob[i].to_string(),
            data.pedestrian_prob[i].to_string(),
            data.severe[i].to_string(),
            data.pedestrian[i].to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(out, e))?;

    let mut cfg = RunConfig { seed, target: TargetKind::OverSerious, ..RunConfig::default() };
    cfg.output_dir = PathBuf::from("out");
    cfg.input.collisions = PathBuf::from(artifact::SYNTH_COLLISIONS);
    cfg.input.casualties = PathBuf::from(artifact::SYNTH_CASUALTIES);
    cfg.input.boundaries = Some(PathBuf::from(artifact::SYNTH_BOUNDARIES));
    cfg.features = Field::ALL.to_vec();
    write_text(&out.join(artifact::SYNTH_CONFIG), &cfg.to_toml()?)?;
    println!("wrote {rows} synthetic collisions to {}", out.display());
    Ok(())
}
