//! Cross-validated classification of problem identity from landscape
//! features.
//!
//! The protocol is stratified by instance: fold j holds out instance j of
//! every problem. Within a fold, min-max parameters and the SVD model are
//! fitted on training rows alone; test rows are scaled and projected with
//! those frozen parameters, never refitted.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use log::warn;
use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::{EmbeddingModel, Normalization};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::InstanceLabel;

/// Number of folds; equals the number of instances per problem.
pub const FOLD_COUNT: usize = 5;

pub const DEFAULT_KNN_K: usize = 4;
pub const DEFAULT_SGD_ALPHA: f64 = 0.01;
pub const DEFAULT_SGD_EPOCHS: usize = 1000;

const EARLY_STOP_WINDOW: usize = 10;
const EARLY_STOP_REL: f64 = 1e-6;

/// Which representation the classifier sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    Original,
    Embedded,
}

impl FromStr for Space {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "original" => Ok(Space::Original),
            "embedded" => Ok(Space::Embedded),
            other => Err(Error::Usage(format!(
                "unknown space '{other}' (expected original or embedded)"
            ))),
        }
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Space::Original => write!(f, "original"),
            Space::Embedded => write!(f, "embedded"),
        }
    }
}

/// Classifier choice with hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum ClassifierSpec {
    Knn { k: usize },
    Sgd { alpha: f64, epochs: usize, seed: u64 },
    Centroid,
}

impl fmt::Display for ClassifierSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassifierSpec::Knn { k } => write!(f, "knn(k={k})"),
            ClassifierSpec::Sgd {
                alpha,
                epochs,
                seed,
            } => write!(f, "sgd(alpha={alpha}, epochs={epochs}, seed={seed})"),
            ClassifierSpec::Centroid => write!(f, "centroid"),
        }
    }
}

/// Split row indices into [`FOLD_COUNT`] folds by instance id. Fold `j`
/// contains every row with instance id `j + 1`, so membership depends only
/// on labels, never on row order.
pub fn stratified_folds(labels: &[InstanceLabel]) -> Result<[Vec<usize>; FOLD_COUNT]> {
    let mut function_ids: Vec<u32> = labels.iter().map(|l| l.function_id).collect();
    function_ids.sort_unstable();
    function_ids.dedup();
    for &fid in &function_ids {
        for iid in 1..=FOLD_COUNT as u32 {
            let hits = labels
                .iter()
                .filter(|l| l.function_id == fid && l.instance_id == iid)
                .count();
            if hits != 1 {
                return Err(Error::InvalidArgument(format!(
                    "stratified folds need each problem to carry instances 1..={FOLD_COUNT} \
                     exactly once; function {fid} has {hits} rows for instance {iid}"
                )));
            }
        }
    }
    for l in labels {
        if l.instance_id == 0 || l.instance_id > FOLD_COUNT as u32 {
            return Err(Error::InvalidArgument(format!(
                "instance id {} of function {} outside 1..={FOLD_COUNT}",
                l.instance_id, l.function_id
            )));
        }
    }

    let mut folds: [Vec<usize>; FOLD_COUNT] = Default::default();
    for (row, l) in labels.iter().enumerate() {
        folds[(l.instance_id - 1) as usize].push(row);
    }
    Ok(folds)
}

/// Per-feature min-max scaling fitted on training rows only.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxScaler {
    params: Vec<(f64, f64)>,
}

impl MinMaxScaler {
    pub fn fit(train: ArrayView2<'_, f64>) -> Result<Self> {
        if train.nrows() < 2 {
            return Err(Error::InvalidArgument(
                "min-max scaling needs at least 2 training rows".into(),
            ));
        }
        let mut params = Vec::with_capacity(train.ncols());
        for j in 0..train.ncols() {
            let col = train.column(j);
            let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if lo == hi {
                warn!("training feature {j} has zero range; it maps to 0");
            }
            params.push((lo, hi));
        }
        Ok(MinMaxScaler { params })
    }

    pub fn params(&self) -> &[(f64, f64)] {
        &self.params
    }

    /// Scale any matrix with the fitted parameters. Values outside the
    /// training range land outside [0, 1]; that is intended, not clipped.
    pub fn apply(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.params.len() {
            return Err(Error::SchemaMismatch(format!(
                "{} columns, scaler fitted on {}",
                x.ncols(),
                self.params.len()
            )));
        }
        let mut out = Array2::<f64>::zeros(x.dim());
        for j in 0..x.ncols() {
            let (lo, hi) = self.params[j];
            let range = hi - lo;
            for i in 0..x.nrows() {
                out[[i, j]] = if range == 0.0 {
                    0.0
                } else {
                    (x[[i, j]] - lo) / range
                };
            }
        }
        Ok(out)
    }
}

fn euclidean(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// k-nearest-neighbour prediction with majority vote. Vote ties go to the
/// label with the smallest summed neighbour distance, then to the lowest
/// label.
pub fn knn_predict(
    train_x: ArrayView2<'_, f64>,
    train_y: &[u32],
    test_x: ArrayView2<'_, f64>,
    k: usize,
) -> Result<Vec<u32>> {
    if train_y.len() != train_x.nrows() {
        return Err(Error::InvalidArgument(format!(
            "{} labels for {} training rows",
            train_y.len(),
            train_x.nrows()
        )));
    }
    if k == 0 || k > train_x.nrows() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} outside 1..={} training rows",
            train_x.nrows()
        )));
    }
    if test_x.ncols() != train_x.ncols() {
        return Err(Error::SchemaMismatch(format!(
            "test width {} does not match train width {}",
            test_x.ncols(),
            train_x.ncols()
        )));
    }

    let mut predictions = Vec::with_capacity(test_x.nrows());
    for query in test_x.outer_iter() {
        let mut dists: Vec<(f64, usize)> = (0..train_x.nrows())
            .map(|i| (euclidean(query, train_x.row(i)), i))
            .collect();
        dists.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let neighbours = &dists[..k];

        let mut tally: Vec<(u32, usize, f64)> = Vec::new();
        for &(d, i) in neighbours {
            let label = train_y[i];
            match tally.iter_mut().find(|t| t.0 == label) {
                Some(t) => {
                    t.1 += 1;
                    t.2 += d;
                }
                None => tally.push((label, 1, d)),
            }
        }
        tally.sort_by(|a, b| {
            b.1.cmp(&a.1)
                .then(a.2.partial_cmp(&b.2).unwrap())
                .then(a.0.cmp(&b.0))
        });
        predictions.push(tally[0].0);
    }
    Ok(predictions)
}

/// One-vs-rest linear classifier trained with stochastic subgradient
/// descent on the hinge loss.
#[derive(Debug, Clone)]
pub struct LinearModel {
    classes: Vec<u32>,
    /// One row per class: feature weights followed by the bias term.
    weights: Array2<f64>,
}

impl LinearModel {
    pub fn classes(&self) -> &[u32] {
        &self.classes
    }

    pub fn weights(&self) -> ArrayView2<'_, f64> {
        self.weights.view()
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Vec<u32>> {
        let d = self.weights.ncols() - 1;
        if x.ncols() != d {
            return Err(Error::SchemaMismatch(format!(
                "{} columns, model trained on {d}",
                x.ncols()
            )));
        }
        let mut out = Vec::with_capacity(x.nrows());
        for row in x.outer_iter() {
            let mut best = 0usize;
            let mut best_score = f64::NEG_INFINITY;
            for (c, w) in self.weights.outer_iter().enumerate() {
                let score: f64 =
                    row.iter().zip(w.iter()).map(|(a, b)| a * b).sum::<f64>() + w[d];
                if score > best_score
                    || (score == best_score && self.classes[c] < self.classes[best])
                {
                    best = c;
                    best_score = score;
                }
            }
            out.push(self.classes[best]);
        }
        Ok(out)
    }
}

/// Train the one-vs-rest hinge model. Each binary problem runs `epochs`
/// passes over a seeded shuffle of the training rows and stops early once
/// its epoch loss stalls (relative change below 1e-6 across 10 epochs).
pub fn sgd_train(
    train_x: ArrayView2<'_, f64>,
    train_y: &[u32],
    alpha: f64,
    epochs: usize,
    seed: u64,
) -> Result<LinearModel> {
    if train_y.len() != train_x.nrows() {
        return Err(Error::InvalidArgument(format!(
            "{} labels for {} training rows",
            train_y.len(),
            train_x.nrows()
        )));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "learning rate {alpha} must be positive"
        )));
    }
    if epochs == 0 {
        return Err(Error::InvalidArgument("epochs must be at least 1".into()));
    }
    let mut classes: Vec<u32> = train_y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::InvalidArgument(
            "sgd training needs at least 2 classes".into(),
        ));
    }

    let n = train_x.nrows();
    let d = train_x.ncols();
    let mut weights = Array2::<f64>::zeros((classes.len(), d + 1));
    for (c, &class) in classes.iter().enumerate() {
        let targets: Vec<f64> = train_y
            .iter()
            .map(|&y| if y == class { 1.0 } else { -1.0 })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(c as u64));
        let mut order: Vec<usize> = (0..n).collect();
        let mut w = vec![0.0f64; d + 1];
        let mut recent: Vec<f64> = Vec::new();

        for _ in 0..epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                let row = train_x.row(i);
                let margin = targets[i]
                    * (row.iter().zip(w.iter()).map(|(a, b)| a * b).sum::<f64>() + w[d]);
                if margin < 1.0 {
                    for (wj, &xj) in w.iter_mut().zip(row.iter()) {
                        *wj += alpha * targets[i] * xj;
                    }
                    w[d] += alpha * targets[i];
                }
            }
            if w.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numerical(format!(
                    "sgd weights diverged for class {class}; try a smaller learning rate"
                )));
            }
            let loss: f64 = (0..n)
                .map(|i| {
                    let row = train_x.row(i);
                    let score =
                        row.iter().zip(w.iter()).map(|(a, b)| a * b).sum::<f64>() + w[d];
                    (1.0 - targets[i] * score).max(0.0)
                })
                .sum::<f64>()
                / n as f64;
            recent.push(loss);
            if loss == 0.0 {
                break;
            }
            if recent.len() > EARLY_STOP_WINDOW {
                let past = recent[recent.len() - 1 - EARLY_STOP_WINDOW];
                if (past - loss).abs() <= EARLY_STOP_REL * past.max(1e-12) {
                    break;
                }
            }
        }
        for (j, &v) in w.iter().enumerate() {
            weights[[c, j]] = v;
        }
    }
    Ok(LinearModel { classes, weights })
}

/// Class centroids with nearest-centroid prediction.
#[derive(Debug, Clone)]
pub struct CentroidModel {
    classes: Vec<u32>,
    centroids: Array2<f64>,
}

impl CentroidModel {
    pub fn fit(train_x: ArrayView2<'_, f64>, train_y: &[u32]) -> Result<Self> {
        if train_y.len() != train_x.nrows() {
            return Err(Error::InvalidArgument(format!(
                "{} labels for {} training rows",
                train_y.len(),
                train_x.nrows()
            )));
        }
        if train_x.nrows() == 0 {
            return Err(Error::InvalidArgument("no training rows".into()));
        }
        let mut classes: Vec<u32> = train_y.to_vec();
        classes.sort_unstable();
        classes.dedup();
        let mut centroids = Array2::<f64>::zeros((classes.len(), train_x.ncols()));
        for (c, &class) in classes.iter().enumerate() {
            let members: Vec<usize> = (0..train_x.nrows())
                .filter(|&i| train_y[i] == class)
                .collect();
            for &i in &members {
                for j in 0..train_x.ncols() {
                    centroids[[c, j]] += train_x[[i, j]];
                }
            }
            for j in 0..train_x.ncols() {
                centroids[[c, j]] /= members.len() as f64;
            }
        }
        Ok(CentroidModel { classes, centroids })
    }

    pub fn classes(&self) -> &[u32] {
        &self.classes
    }

    pub fn centroids(&self) -> ArrayView2<'_, f64> {
        self.centroids.view()
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Vec<u32>> {
        if x.ncols() != self.centroids.ncols() {
            return Err(Error::SchemaMismatch(format!(
                "{} columns, centroids have {}",
                x.ncols(),
                self.centroids.ncols()
            )));
        }
        let mut out = Vec::with_capacity(x.nrows());
        for row in x.outer_iter() {
            let mut best = 0usize;
            let mut best_dist = f64::INFINITY;
            for c in 0..self.classes.len() {
                let dist = euclidean(row, self.centroids.row(c));
                if dist < best_dist || (dist == best_dist && self.classes[c] < self.classes[best])
                {
                    best = c;
                    best_dist = dist;
                }
            }
            out.push(self.classes[best]);
        }
        Ok(out)
    }
}

fn classify(
    spec: &ClassifierSpec,
    train_x: ArrayView2<'_, f64>,
    train_y: &[u32],
    test_x: ArrayView2<'_, f64>,
) -> Result<Vec<u32>> {
    match spec {
        ClassifierSpec::Knn { k } => knn_predict(train_x, train_y, test_x, *k),
        ClassifierSpec::Sgd {
            alpha,
            epochs,
            seed,
        } => sgd_train(train_x, train_y, *alpha, *epochs, *seed)?.predict(test_x),
        ClassifierSpec::Centroid => CentroidModel::fit(train_x, train_y)?.predict(test_x),
    }
}

/// Scaling and projection fitted on one fold's training rows.
pub struct FoldTransforms {
    pub scaler: Option<MinMaxScaler>,
    pub embedding: Option<EmbeddingModel>,
}

/// Fit the per-fold transforms from training rows only. `fold` indexes the
/// held-out fold. Exposed separately so tests can assert that the fitted
/// parameters are untouched by whatever sits in the test rows.
pub fn fit_fold_transforms(
    x: &FeatureMatrix,
    folds: &[Vec<usize>; FOLD_COUNT],
    fold: usize,
    space: Space,
    rank: Option<usize>,
    normalization: Normalization,
) -> Result<FoldTransforms> {
    if fold >= FOLD_COUNT {
        return Err(Error::InvalidArgument(format!(
            "fold {fold} outside 0..{FOLD_COUNT}"
        )));
    }
    let train_idx: Vec<usize> = (0..FOLD_COUNT)
        .filter(|&j| j != fold)
        .flat_map(|j| folds[j].iter().copied())
        .collect();
    let train = x.select_rows(&train_idx)?;

    let scaler = match normalization {
        Normalization::None => None,
        Normalization::MinMax => Some(MinMaxScaler::fit(train.data())?),
    };
    let embedding = match space {
        Space::Original => {
            if rank.is_some() {
                return Err(Error::InvalidArgument(
                    "rank only applies to the embedded space".into(),
                ));
            }
            None
        }
        Space::Embedded => {
            let scaled = match &scaler {
                Some(s) => FeatureMatrix::new(
                    train.labels().to_vec(),
                    train.columns().to_vec(),
                    s.apply(train.data())?,
                )?,
                None => train,
            };
            let model = EmbeddingModel::fit(&scaled, Normalization::None)?;
            if let Some(r) = rank {
                if r == 0 || r > model.rank_full() {
                    return Err(Error::InvalidArgument(format!(
                        "rank {r} outside 1..={} for this fold's training matrix",
                        model.rank_full()
                    )));
                }
            }
            Some(model)
        }
    };
    Ok(FoldTransforms { scaler, embedding })
}

/// Cross-validation result for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub space: Space,
    pub normalization: Normalization,
    /// Embedding rank; `None` in the original space.
    pub rank: Option<usize>,
    pub classifier: ClassifierSpec,
    pub per_fold_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
}

/// Run the stratified instance-fold protocol for one configuration.
///
/// Per fold: fit min-max scaling on training rows when requested; in the
/// embedded space additionally fit the SVD on the (scaled) training rows
/// and map both sides to rank-`r` fingerprints; train the classifier;
/// score accuracy on the held-out instances.
pub fn evaluate_cv(
    x: &FeatureMatrix,
    space: Space,
    rank: Option<usize>,
    normalization: Normalization,
    spec: &ClassifierSpec,
) -> Result<CvReport> {
    let folds = stratified_folds(x.labels())?;
    let mut per_fold_accuracy = Vec::with_capacity(FOLD_COUNT);
    for fold in 0..FOLD_COUNT {
        let transforms = fit_fold_transforms(x, &folds, fold, space, rank, normalization)?;
        let train_idx: Vec<usize> = (0..FOLD_COUNT)
            .filter(|&j| j != fold)
            .flat_map(|j| folds[j].iter().copied())
            .collect();
        let test_idx = &folds[fold];

        let train = x.select_rows(&train_idx)?;
        let test = x.select_rows(test_idx)?;
        let (train_data, test_data) = match &transforms.scaler {
            Some(s) => (s.apply(train.data())?, s.apply(test.data())?),
            None => (train.data().to_owned(), test.data().to_owned()),
        };

        let (train_data, test_data) = match &transforms.embedding {
            Some(model) => {
                let r = rank.unwrap_or_else(|| model.rank_full());
                let mut train_f = Array2::<f64>::zeros((train_data.nrows(), r));
                for (i, row) in train_data.outer_iter().enumerate() {
                    let fp = model.embed_row(row, r, &train.labels()[i].to_string())?;
                    train_f.row_mut(i).assign(&fp.values());
                }
                let mut test_f = Array2::<f64>::zeros((test_data.nrows(), r));
                for (i, row) in test_data.outer_iter().enumerate() {
                    let fp = model.project_external(
                        x.columns(),
                        row,
                        r,
                        &test.labels()[i].to_string(),
                    )?;
                    test_f.row_mut(i).assign(&fp.values());
                }
                (train_f, test_f)
            }
            None => (train_data, test_data),
        };

        let train_y: Vec<u32> = train.labels().iter().map(|l| l.function_id).collect();
        let predicted = classify(spec, train_data.view(), &train_y, test_data.view())?;
        let correct = predicted
            .iter()
            .zip(test.labels())
            .filter(|(p, l)| **p == l.function_id)
            .count();
        per_fold_accuracy.push(correct as f64 / test_idx.len() as f64);
    }
    let mean_accuracy = per_fold_accuracy.iter().sum::<f64>() / FOLD_COUNT as f64;
    Ok(CvReport {
        space,
        normalization,
        rank,
        classifier: spec.clone(),
        per_fold_accuracy,
        mean_accuracy,
    })
}

/// Write one fold's train and test matrices as feature CSVs, so external
/// tooling can rerun the protocol with other classifiers.
pub fn write_fold_matrices(
    x: &FeatureMatrix,
    fold: usize,
    train_path: &Path,
    test_path: &Path,
) -> Result<()> {
    let folds = stratified_folds(x.labels())?;
    if fold >= FOLD_COUNT {
        return Err(Error::InvalidArgument(format!(
            "fold {fold} outside 0..{FOLD_COUNT}"
        )));
    }
    let train_idx: Vec<usize> = (0..FOLD_COUNT)
        .filter(|&j| j != fold)
        .flat_map(|j| folds[j].iter().copied())
        .collect();
    x.select_rows(&train_idx)?.write_csv(train_path)?;
    x.select_rows(&folds[fold])?.write_csv(test_path)?;
    Ok(())
}
