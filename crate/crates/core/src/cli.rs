//! Command line pipeline. Each subcommand reads and writes plain files
//! (CSV, JSON, SVG) so stages can be rerun, diffed, and handed to external
//! tools; given the same inputs and seeds every command reproduces its
//! artifacts byte for byte. Timing fields in provenance records are the one
//! exception.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::analysis::{instance_correlation, render_heatmap, HeatmapOptions};
use crate::classify::{
    evaluate_cv, ClassifierSpec, CvReport, Space, DEFAULT_KNN_K, DEFAULT_SGD_ALPHA,
    DEFAULT_SGD_EPOCHS,
};
use crate::embedding::{cattell_scree, EmbeddingModel, Normalization};
use crate::error::{Error, Result};
use crate::features::{feature_index, feature_matrix, FeatureMatrix};
use crate::problems::suite;
use crate::sampling::Sampler;
use crate::InstanceLabel;

/// Defaults and suite selection shared by the subcommands. Every field can be
/// overridden on the command line; the file is optional.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub functions: Vec<u32>,
    pub instances: Vec<u32>,
    pub dimension: usize,
    pub sampler: Sampler,
    pub sample_count: usize,
    pub replications: usize,
    /// Seed for feature runs. `features` refuses to run without a seed from
    /// either the config or `--seed`.
    pub base_seed: Option<u64>,
    /// Restrict the feature matrix to these schema names (all 38 if absent).
    pub features: Option<Vec<String>>,
    pub normalization: Normalization,
    pub space: Space,
    /// Rank sweep for embedded-space classification.
    pub ranks: Option<Vec<usize>>,
    pub classifier: ClassifierSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            functions: (1..=24).collect(),
            instances: (1..=5).collect(),
            dimension: 5,
            sampler: Sampler::Sobol,
            sample_count: 1250,
            replications: 100,
            base_seed: None,
            features: None,
            normalization: Normalization::MinMax,
            space: Space::Embedded,
            ranks: None,
            classifier: ClassifierSpec::Knn { k: DEFAULT_KNN_K },
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: RunConfig = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.functions.is_empty() {
            return Err(Error::InvalidArgument("config lists no functions".into()));
        }
        if self.instances.is_empty() {
            return Err(Error::InvalidArgument("config lists no instances".into()));
        }
        if let Some(names) = &self.features {
            for name in names {
                if feature_index(name).is_none() {
                    return Err(Error::SchemaMismatch(format!(
                        "config references unknown feature '{name}'"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "ela",
    version,
    about = "Landscape feature fingerprints for black-box benchmark suites"
)]
struct Cli {
    /// JSON config file with suite and pipeline defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample the suite and write the feature matrix with a provenance record.
    Features(FeaturesArgs),
    /// Fit the SVD embedding of a feature matrix; write model and fingerprints.
    Embed(EmbedArgs),
    /// Correlation matrix and heatmap over rows (instances) or columns (features).
    Correlate(CorrelateArgs),
    /// Sweep the embedding rank and tabulate low-rank approximation errors.
    Sensitivity(SensitivityArgs),
    /// Project external feature vectors through a saved embedding model.
    Project(ProjectArgs),
    /// Cross-validated problem classification from features or fingerprints.
    Classify(ClassifyArgs),
}

#[derive(Args, Debug)]
struct FeaturesArgs {
    /// Base seed for the sampling streams; required here or in the config.
    #[arg(long)]
    seed: Option<u64>,

    #[arg(long)]
    sampler: Option<Sampler>,

    /// Points per design.
    #[arg(long)]
    sample_count: Option<usize>,

    /// Independent designs whose features are aggregated by the median.
    #[arg(long)]
    replications: Option<usize>,

    #[arg(long)]
    dimension: Option<usize>,

    /// Comma separated schema names to keep (all 38 if absent).
    #[arg(long, value_delimiter = ',')]
    features: Option<Vec<String>>,

    /// Output matrix CSV.
    #[arg(long, default_value = "features.csv")]
    output: PathBuf,

    /// Provenance JSON; defaults to the output path with extension
    /// `provenance.json`.
    #[arg(long)]
    provenance: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EmbedArgs {
    /// Input feature matrix CSV.
    #[arg(long)]
    matrix: PathBuf,

    #[arg(long)]
    normalization: Option<Normalization>,

    /// Fingerprint rank; defaults to the full rank of the fitted model.
    #[arg(long)]
    rank: Option<usize>,

    /// Output model JSON.
    #[arg(long, default_value = "model.json")]
    model: PathBuf,

    /// Output fingerprint CSV.
    #[arg(long, default_value = "fingerprints.csv")]
    fingerprints: PathBuf,
}

#[derive(Args, Debug)]
struct CorrelateArgs {
    /// Input CSV: function_id, instance_id, then one column per vector entry.
    #[arg(long)]
    vectors: PathBuf,

    /// What to correlate: "instances" (rows) or "features" (columns).
    #[arg(long)]
    mode: CorrelationMode,

    /// Output correlation CSV.
    #[arg(long, default_value = "correlation.csv")]
    output: PathBuf,

    /// Output heatmap SVG; defaults to the output path with extension `svg`.
    #[arg(long)]
    svg: Option<PathBuf>,

    /// Gridline spacing in the heatmap; defaults to the per-function block
    /// size when instances form uniform runs.
    #[arg(long)]
    block: Option<usize>,
}

#[derive(Args, Debug)]
struct SensitivityArgs {
    /// Input feature matrix CSV.
    #[arg(long)]
    matrix: PathBuf,

    #[arg(long)]
    normalization: Option<Normalization>,

    /// Smallest rank in the sweep.
    #[arg(long, default_value_t = 6)]
    r_min: usize,

    /// Largest rank in the sweep; defaults to the full rank.
    #[arg(long)]
    r_max: Option<usize>,

    /// Output error table CSV.
    #[arg(long, default_value = "sensitivity.csv")]
    output: PathBuf,

    /// Output line plot SVG; defaults to the output path with extension `svg`.
    #[arg(long)]
    svg: Option<PathBuf>,

    /// Output spectrum summary JSON; defaults to the output path with
    /// extension `scree.json`.
    #[arg(long)]
    scree: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ProjectArgs {
    /// Saved embedding model JSON.
    #[arg(long)]
    model: PathBuf,

    /// External feature CSV; columns must cover the model schema.
    #[arg(long)]
    external: PathBuf,

    /// JSON object mapping raw column names to schema names.
    #[arg(long)]
    mapping: Option<PathBuf>,

    /// Fingerprint rank; defaults to the full rank of the model.
    #[arg(long)]
    rank: Option<usize>,

    /// Output fingerprint CSV for the external rows.
    #[arg(long, default_value = "projected.csv")]
    fingerprints: PathBuf,

    /// Output correlation CSV over training plus external fingerprints.
    #[arg(long, default_value = "combined_correlation.csv")]
    correlation: PathBuf,

    /// Output heatmap SVG; defaults to the correlation path with extension `svg`.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    /// Input feature matrix CSV.
    #[arg(long)]
    matrix: PathBuf,

    /// Representation: "original" or "embedded".
    #[arg(long)]
    space: Option<Space>,

    #[arg(long)]
    normalization: Option<Normalization>,

    /// Classifier name: "knn", "sgd", or "centroid".
    #[arg(long)]
    classifier: Option<String>,

    /// Neighbor count for knn.
    #[arg(long)]
    k: Option<usize>,

    /// Learning rate for sgd.
    #[arg(long)]
    alpha: Option<f64>,

    /// Epoch cap for sgd.
    #[arg(long)]
    epochs: Option<usize>,

    /// Shuffle seed for sgd.
    #[arg(long)]
    seed: Option<u64>,

    /// Comma separated rank sweep (embedded space only).
    #[arg(long, value_delimiter = ',')]
    ranks: Option<Vec<usize>>,

    /// Output report JSON (one entry per evaluated configuration).
    #[arg(long, default_value = "cv_report.json")]
    report: PathBuf,

    /// Output accuracy plot SVG; defaults to the report path with extension `svg`.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CorrelationMode {
    Instances,
    Features,
}

impl std::str::FromStr for CorrelationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "instances" => Ok(CorrelationMode::Instances),
            "features" => Ok(CorrelationMode::Features),
            other => Err(Error::Usage(format!(
                "unknown mode '{other}' (expected 'instances' or 'features')"
            ))),
        }
    }
}

/// Entry point used by the `ela` binary; returns the process exit code.
pub fn run() -> i32 {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .try_init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Features(args) => cmd_features(&config, &args),
        Command::Embed(args) => cmd_embed(&config, &args),
        Command::Correlate(args) => cmd_correlate(&args),
        Command::Sensitivity(args) => cmd_sensitivity(&config, &args),
        Command::Project(args) => cmd_project(&args),
        Command::Classify(args) => cmd_classify(&config, &args),
    }
}

#[derive(Serialize)]
struct FeatureProvenance {
    functions: Vec<u32>,
    instances: Vec<u32>,
    dimension: usize,
    sampler: String,
    sample_count: usize,
    replications: usize,
    base_seed: u64,
    /// Seed of each replication, identical across all instances.
    replication_seeds: Vec<u64>,
    rows: usize,
    columns: usize,
    wall_time_s: f64,
}

fn cmd_features(config: &RunConfig, args: &FeaturesArgs) -> Result<()> {
    let seed = args.seed.or(config.base_seed).ok_or_else(|| {
        Error::Usage("feature runs need an explicit seed: pass --seed or set base_seed".into())
    })?;
    let sampler = args.sampler.unwrap_or(config.sampler);
    let count = args.sample_count.unwrap_or(config.sample_count);
    let replications = args.replications.unwrap_or(config.replications);
    let dimension = args.dimension.unwrap_or(config.dimension);
    let subset = args.features.as_ref().or(config.features.as_ref());

    let problems = suite(&config.functions, &config.instances, dimension)?;
    let started = Instant::now();
    let mut matrix = feature_matrix(&problems, sampler, count, replications, seed)?;
    if let Some(names) = subset {
        matrix = matrix.subset(names)?;
    }
    let wall_time_s = started.elapsed().as_secs_f64();
    matrix.write_csv(&args.output)?;

    let provenance = FeatureProvenance {
        functions: config.functions.clone(),
        instances: config.instances.clone(),
        dimension,
        sampler: sampler.to_string(),
        sample_count: count,
        replications,
        base_seed: seed,
        replication_seeds: (0..replications)
            .map(|rep| seed + rep as u64 * count as u64)
            .collect(),
        rows: matrix.n_rows(),
        columns: matrix.n_columns(),
        wall_time_s,
    };
    let provenance_path = args
        .provenance
        .clone()
        .unwrap_or_else(|| args.output.with_extension("provenance.json"));
    write_json(&provenance_path, &provenance)?;

    println!(
        "wrote {}x{} feature matrix to {} in {:.1}s",
        matrix.n_rows(),
        matrix.n_columns(),
        args.output.display(),
        wall_time_s
    );
    Ok(())
}

fn cmd_embed(config: &RunConfig, args: &EmbedArgs) -> Result<()> {
    let x = FeatureMatrix::read_csv(&args.matrix, None)?;
    let normalization = args.normalization.unwrap_or(config.normalization);
    let model = EmbeddingModel::fit(&x, normalization)?;
    let rank = args.rank.unwrap_or_else(|| model.rank_full());
    model.save(&args.model)?;

    let mut rows = Array2::zeros((x.n_rows(), rank));
    for i in 0..x.n_rows() {
        let label = x.labels()[i].to_string();
        let fp = model.embed_row(x.row(i), rank, &label)?;
        rows.row_mut(i).assign(&fp.values());
    }
    write_vectors_csv(
        &args.fingerprints,
        x.labels(),
        &fingerprint_columns(rank),
        rows.view(),
    )?;

    println!(
        "fitted rank-{} embedding of a {}x{} matrix; model {}, fingerprints {}",
        rank,
        x.n_rows(),
        x.n_columns(),
        args.model.display(),
        args.fingerprints.display()
    );
    Ok(())
}

fn cmd_correlate(args: &CorrelateArgs) -> Result<()> {
    let (labels, columns, data) = read_vectors_csv(&args.vectors)?;
    let (corr, default_block) = match args.mode {
        CorrelationMode::Instances => {
            let names = labels.iter().map(|l| l.to_string()).collect();
            (
                instance_correlation(data.view(), names)?,
                uniform_block(&labels),
            )
        }
        CorrelationMode::Features => (instance_correlation(data.t(), columns)?, None),
    };
    corr.write_csv(&args.output)?;

    let svg = args
        .svg
        .clone()
        .unwrap_or_else(|| args.output.with_extension("svg"));
    let options = HeatmapOptions {
        block_size: args.block.or(default_block),
        ..HeatmapOptions::default()
    };
    render_heatmap(&corr, &svg, &options)?;

    println!(
        "wrote {0}x{0} correlation matrix to {1} and heatmap to {2}",
        corr.dim(),
        args.output.display(),
        svg.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct ScreeSummary {
    components: usize,
    singular_values: Vec<f64>,
}

fn cmd_sensitivity(config: &RunConfig, args: &SensitivityArgs) -> Result<()> {
    let x = FeatureMatrix::read_csv(&args.matrix, None)?;
    let normalization = args.normalization.unwrap_or(config.normalization);
    let model = EmbeddingModel::fit(&x, normalization)?;
    let r_max = args.r_max.unwrap_or_else(|| model.rank_full());
    if args.r_min == 0 || args.r_min > r_max || r_max > model.rank_full() {
        return Err(Error::Usage(format!(
            "rank sweep {}..={} does not fit 1..={}",
            args.r_min,
            r_max,
            model.rank_full()
        )));
    }

    let mut table = Vec::with_capacity(r_max - args.r_min + 1);
    for r in args.r_min..=r_max {
        table.push((r, model.low_rank_error(&x, r)?));
    }
    let mut csv = String::from("rank,error\n");
    for (r, err) in &table {
        csv.push_str(&format!("{r},{err}\n"));
    }
    std::fs::write(&args.output, csv)?;

    let svg = args
        .svg
        .clone()
        .unwrap_or_else(|| args.output.with_extension("svg"));
    let points: Vec<(f64, f64)> = table.iter().map(|&(r, e)| (r as f64, e)).collect();
    line_plot(&svg, &points, "rank", "Frobenius error")?;

    let sigma = model.singular_values();
    let components = cattell_scree(sigma.as_slice().unwrap_or(&sigma.to_vec()))?;
    let scree_path = args
        .scree
        .clone()
        .unwrap_or_else(|| args.output.with_extension("scree.json"));
    write_json(
        &scree_path,
        &ScreeSummary {
            components,
            singular_values: sigma.to_vec(),
        },
    )?;

    println!(
        "wrote {} rank sweep rows to {}; scree estimate: {} components",
        table.len(),
        args.output.display(),
        components
    );
    Ok(())
}

fn cmd_project(args: &ProjectArgs) -> Result<()> {
    let model = EmbeddingModel::load(&args.model)?;
    let mapping: Option<HashMap<String, String>> = match &args.mapping {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            Some(serde_json::from_str(&text)?)
        }
        None => None,
    };
    let external = FeatureMatrix::read_csv(&args.external, mapping.as_ref())?;
    let rank = args.rank.unwrap_or_else(|| model.rank_full());

    let mut projected = Array2::zeros((external.n_rows(), rank));
    for i in 0..external.n_rows() {
        let label = external.labels()[i].to_string();
        let fp = model.project_external(external.columns(), external.row(i), rank, &label)?;
        projected.row_mut(i).assign(&fp.values());
    }
    write_vectors_csv(
        &args.fingerprints,
        external.labels(),
        &fingerprint_columns(rank),
        projected.view(),
    )?;

    let n_train = model.row_labels().len();
    let mut combined = Array2::zeros((n_train + external.n_rows(), rank));
    for i in 0..n_train {
        for k in 0..rank {
            combined[[i, k]] = model.u()[[i, k]];
        }
    }
    for i in 0..external.n_rows() {
        combined.row_mut(n_train + i).assign(&projected.row(i));
    }
    let mut combined_labels: Vec<InstanceLabel> = model.row_labels().to_vec();
    combined_labels.extend_from_slice(external.labels());
    let names = combined_labels.iter().map(|l| l.to_string()).collect();
    let corr = instance_correlation(combined.view(), names)?;
    corr.write_csv(&args.correlation)?;

    let svg = args
        .svg
        .clone()
        .unwrap_or_else(|| args.correlation.with_extension("svg"));
    let options = HeatmapOptions {
        block_size: uniform_block(&combined_labels),
        ..HeatmapOptions::default()
    };
    render_heatmap(&corr, &svg, &options)?;

    println!(
        "projected {} external rows at rank {}; fingerprints {}, correlation {}",
        external.n_rows(),
        rank,
        args.fingerprints.display(),
        args.correlation.display()
    );
    Ok(())
}

fn cmd_classify(config: &RunConfig, args: &ClassifyArgs) -> Result<()> {
    let x = FeatureMatrix::read_csv(&args.matrix, None)?;
    let space = args.space.unwrap_or(config.space);
    let normalization = args.normalization.unwrap_or(config.normalization);
    let spec = resolve_classifier(args, config)?;
    let ranks = args.ranks.clone().or_else(|| config.ranks.clone());

    let reports: Vec<CvReport> = match (space, ranks) {
        (Space::Original, Some(_)) => {
            return Err(Error::Usage(
                "a rank sweep applies to the embedded space only".into(),
            ));
        }
        (Space::Original, None) => {
            vec![evaluate_cv(&x, space, None, normalization, &spec)?]
        }
        (Space::Embedded, None) => {
            vec![evaluate_cv(&x, space, None, normalization, &spec)?]
        }
        (Space::Embedded, Some(ranks)) => {
            if ranks.is_empty() {
                return Err(Error::Usage("the rank sweep is empty".into()));
            }
            let mut reports = Vec::with_capacity(ranks.len());
            for r in ranks {
                reports.push(evaluate_cv(&x, space, Some(r), normalization, &spec)?);
            }
            reports
        }
    };
    write_json(&args.report, &reports)?;

    let svg = args
        .svg
        .clone()
        .unwrap_or_else(|| args.report.with_extension("svg"));
    let points: Vec<(f64, f64)> = reports
        .iter()
        .map(|rep| {
            (
                rep.rank.unwrap_or(x.n_columns()) as f64,
                rep.mean_accuracy,
            )
        })
        .collect();
    line_plot(&svg, &points, "rank", "mean accuracy")?;

    for rep in &reports {
        println!(
            "{} space, rank {}, {}: mean accuracy {:.4}",
            rep.space,
            rep.rank
                .map_or_else(|| "full".to_string(), |r| r.to_string()),
            rep.classifier,
            rep.mean_accuracy
        );
    }
    println!("wrote {} reports to {}", reports.len(), args.report.display());
    Ok(())
}

fn resolve_classifier(args: &ClassifyArgs, config: &RunConfig) -> Result<ClassifierSpec> {
    let name = match &args.classifier {
        Some(name) => name.clone(),
        None => match &config.classifier {
            ClassifierSpec::Knn { .. } => "knn".to_string(),
            ClassifierSpec::Sgd { .. } => "sgd".to_string(),
            ClassifierSpec::Centroid => "centroid".to_string(),
        },
    };
    match name.as_str() {
        "knn" => {
            let config_k = match &config.classifier {
                ClassifierSpec::Knn { k } => Some(*k),
                _ => None,
            };
            Ok(ClassifierSpec::Knn {
                k: args.k.or(config_k).unwrap_or(DEFAULT_KNN_K),
            })
        }
        "sgd" => {
            let (config_alpha, config_epochs, config_seed) = match &config.classifier {
                ClassifierSpec::Sgd {
                    alpha,
                    epochs,
                    seed,
                } => (Some(*alpha), Some(*epochs), Some(*seed)),
                _ => (None, None, None),
            };
            Ok(ClassifierSpec::Sgd {
                alpha: args.alpha.or(config_alpha).unwrap_or(DEFAULT_SGD_ALPHA),
                epochs: args.epochs.or(config_epochs).unwrap_or(DEFAULT_SGD_EPOCHS),
                seed: args.seed.or(config_seed).unwrap_or(0),
            })
        }
        "centroid" => Ok(ClassifierSpec::Centroid),
        other => Err(Error::Usage(format!(
            "unknown classifier '{other}' (expected 'knn', 'sgd', or 'centroid')"
        ))),
    }
}

fn fingerprint_columns(rank: usize) -> Vec<String> {
    (1..=rank).map(|k| format!("z{k:02}")).collect()
}

/// Per-function block size when every function contributes the same number of
/// consecutive rows; `None` otherwise.
fn uniform_block(labels: &[InstanceLabel]) -> Option<usize> {
    let mut runs = Vec::new();
    let mut current: Option<(u32, usize)> = None;
    for label in labels {
        match &mut current {
            Some((fid, len)) if *fid == label.function_id => *len += 1,
            _ => {
                if let Some((_, len)) = current.take() {
                    runs.push(len);
                }
                current = Some((label.function_id, 1));
            }
        }
    }
    if let Some((_, len)) = current {
        runs.push(len);
    }
    if runs.len() >= 2 && runs.iter().all(|&len| len == runs[0]) {
        Some(runs[0])
    } else {
        None
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    std::fs::write(path, bytes)?;
    Ok(())
}

/// Write a labeled vector CSV: `function_id,instance_id` then one column per
/// entry, floats in shortest round-trip form.
fn write_vectors_csv(
    path: &Path,
    labels: &[InstanceLabel],
    columns: &[String],
    data: ArrayView2<'_, f64>,
) -> Result<()> {
    if labels.len() != data.nrows() || columns.len() != data.ncols() {
        return Err(Error::InvalidArgument(format!(
            "vector CSV shape mismatch: {} labels, {} columns, {}x{} data",
            labels.len(),
            columns.len(),
            data.nrows(),
            data.ncols()
        )));
    }
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = vec!["function_id".to_string(), "instance_id".to_string()];
    header.extend(columns.iter().cloned());
    writer.write_record(&header)?;
    for (label, row) in labels.iter().zip(data.rows()) {
        let mut record = vec![label.function_id.to_string(), label.instance_id.to_string()];
        record.extend(row.iter().map(|v| format!("{v}")));
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Read a labeled vector CSV with arbitrary column names (fingerprints or
/// feature subsets alike).
fn read_vectors_csv(path: &Path) -> Result<(Vec<InstanceLabel>, Vec<String>, Array2<f64>)> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.len() < 3
        || headers.get(0) != Some("function_id")
        || headers.get(1) != Some("instance_id")
    {
        return Err(Error::MalformedInput(format!(
            "{}: expected a header starting with function_id,instance_id and at least one value column",
            path.display()
        )));
    }
    let columns: Vec<String> = headers.iter().skip(2).map(|s| s.to_string()).collect();
    let mut seen = std::collections::HashSet::new();
    for name in &columns {
        if !seen.insert(name.as_str()) {
            return Err(Error::MalformedInput(format!(
                "{}: duplicate column '{name}'",
                path.display()
            )));
        }
    }

    let mut labels = Vec::new();
    let mut values = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let parse_id = |field: usize, what: &str| -> Result<u32> {
            record
                .get(field)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| {
                    Error::MalformedInput(format!(
                        "{}: row {}: bad {what}",
                        path.display(),
                        row + 2
                    ))
                })
        };
        labels.push(InstanceLabel::new(
            parse_id(0, "function_id")?,
            parse_id(1, "instance_id")?,
        ));
        for (j, name) in columns.iter().enumerate() {
            let field = record.get(j + 2).unwrap_or("");
            let value: f64 = field.parse().map_err(|_| {
                Error::MalformedInput(format!(
                    "{}: row {}: bad value '{field}' in column '{name}'",
                    path.display(),
                    row + 2
                ))
            })?;
            values.push(value);
        }
    }
    if labels.is_empty() {
        return Err(Error::MalformedInput(format!(
            "{}: no data rows",
            path.display()
        )));
    }
    let data = Array2::from_shape_vec((labels.len(), columns.len()), values)
        .map_err(|e| Error::MalformedInput(format!("{}: {e}", path.display())))?;
    Ok((labels, columns, data))
}

const PLOT_WIDTH: u32 = 640;
const PLOT_HEIGHT: u32 = 420;
const PLOT_MARGIN_LEFT: f64 = 90.0;
const PLOT_MARGIN_RIGHT: f64 = 24.0;
const PLOT_MARGIN_TOP: f64 = 24.0;
const PLOT_MARGIN_BOTTOM: f64 = 56.0;
const PLOT_LINE_COLOR: &str = "#2166ac";
const PLOT_AXIS_COLOR: &str = "#444444";

fn fmt_coord(v: f64) -> String {
    format!("{}", (v * 100.0).round() / 100.0)
}

fn fmt_tick(v: f64) -> String {
    if (v - v.round()).abs() < 1e-9 && v.abs() < 1e15 {
        return format!("{}", v.round());
    }
    let mut s = format!("{v:.4}");
    while s.ends_with('0') {
        s.pop();
    }
    if s.ends_with('.') {
        s.pop();
    }
    s
}

/// Minimal deterministic line plot: one series, five ticks per axis.
fn line_plot(path: &Path, points: &[(f64, f64)], x_label: &str, y_label: &str) -> Result<()> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("nothing to plot".into()));
    }
    for &(x, y) in points {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::InvalidArgument(
                "plot coordinates must be finite".into(),
            ));
        }
    }
    let (mut x0, mut x1) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(x, _)| {
            (lo.min(x), hi.max(x))
        });
    let (mut y0, mut y1) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, y)| {
            (lo.min(y), hi.max(y))
        });
    if x0 == x1 {
        x0 -= 1.0;
        x1 += 1.0;
    }
    if y0 == y1 {
        let pad = if y0 == 0.0 { 1.0 } else { y0.abs() * 0.05 };
        y0 -= pad;
        y1 += pad;
    }
    let plot_w = PLOT_WIDTH as f64 - PLOT_MARGIN_LEFT - PLOT_MARGIN_RIGHT;
    let plot_h = PLOT_HEIGHT as f64 - PLOT_MARGIN_TOP - PLOT_MARGIN_BOTTOM;
    let px = |x: f64| PLOT_MARGIN_LEFT + (x - x0) / (x1 - x0) * plot_w;
    let py = |y: f64| PLOT_MARGIN_TOP + plot_h - (y - y0) / (y1 - y0) * plot_h;

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{PLOT_WIDTH}\" height=\"{PLOT_HEIGHT}\" \
         viewBox=\"0 0 {PLOT_WIDTH} {PLOT_HEIGHT}\">\n\
         <rect width=\"{PLOT_WIDTH}\" height=\"{PLOT_HEIGHT}\" fill=\"#ffffff\"/>\n"
    );
    let x_axis_y = fmt_coord(PLOT_MARGIN_TOP + plot_h);
    svg.push_str(&format!(
        "<line x1=\"{l}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"{PLOT_AXIS_COLOR}\"/>\n\
         <line x1=\"{l}\" y1=\"{t}\" x2=\"{l}\" y2=\"{b}\" stroke=\"{PLOT_AXIS_COLOR}\"/>\n",
        l = fmt_coord(PLOT_MARGIN_LEFT),
        r = fmt_coord(PLOT_MARGIN_LEFT + plot_w),
        t = fmt_coord(PLOT_MARGIN_TOP),
        b = x_axis_y,
    ));

    for i in 0..5 {
        let frac = i as f64 / 4.0;
        let xv = x0 + frac * (x1 - x0);
        let yv = y0 + frac * (y1 - y0);
        let xp = fmt_coord(px(xv));
        let yp = fmt_coord(py(yv));
        svg.push_str(&format!(
            "<line x1=\"{xp}\" y1=\"{b}\" x2=\"{xp}\" y2=\"{b2}\" stroke=\"{PLOT_AXIS_COLOR}\"/>\n\
             <text x=\"{xp}\" y=\"{ty}\" font-size=\"11\" text-anchor=\"middle\" \
             font-family=\"monospace\">{}</text>\n",
            fmt_tick(xv),
            b = x_axis_y,
            b2 = fmt_coord(PLOT_MARGIN_TOP + plot_h + 5.0),
            ty = fmt_coord(PLOT_MARGIN_TOP + plot_h + 20.0),
        ));
        svg.push_str(&format!(
            "<line x1=\"{l}\" y1=\"{yp}\" x2=\"{l2}\" y2=\"{yp}\" stroke=\"{PLOT_AXIS_COLOR}\"/>\n\
             <text x=\"{tx}\" y=\"{typ}\" font-size=\"11\" text-anchor=\"end\" \
             font-family=\"monospace\">{}</text>\n",
            fmt_tick(yv),
            l = fmt_coord(PLOT_MARGIN_LEFT),
            l2 = fmt_coord(PLOT_MARGIN_LEFT - 5.0),
            tx = fmt_coord(PLOT_MARGIN_LEFT - 9.0),
            typ = fmt_coord(py(yv) + 4.0),
        ));
    }

    let coords: Vec<String> = points
        .iter()
        .map(|&(x, y)| format!("{},{}", fmt_coord(px(x)), fmt_coord(py(y))))
        .collect();
    if points.len() > 1 {
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{PLOT_LINE_COLOR}\" stroke-width=\"2\"/>\n",
            coords.join(" ")
        ));
    }
    for coord in &coords {
        let (cx, cy) = coord.split_once(',').unwrap_or(("0", "0"));
        svg.push_str(&format!(
            "<circle cx=\"{cx}\" cy=\"{cy}\" r=\"3\" fill=\"{PLOT_LINE_COLOR}\"/>\n"
        ));
    }

    svg.push_str(&format!(
        "<text x=\"{x}\" y=\"{y}\" font-size=\"12\" text-anchor=\"middle\" \
         font-family=\"monospace\">{x_label}</text>\n",
        x = fmt_coord(PLOT_MARGIN_LEFT + plot_w / 2.0),
        y = fmt_coord(PLOT_HEIGHT as f64 - 12.0),
    ));
    svg.push_str(&format!(
        "<text x=\"{x}\" y=\"{y}\" font-size=\"12\" text-anchor=\"middle\" \
         font-family=\"monospace\" transform=\"rotate(-90 {x} {y})\">{y_label}</text>\n",
        x = fmt_coord(18.0),
        y = fmt_coord(PLOT_MARGIN_TOP + plot_h / 2.0),
    ));
    svg.push_str("</svg>\n");
    std::fs::write(path, svg)?;
    Ok(())
}
