//! Landscape feature extraction: 38 features in five groups, computed per
//! design and aggregated over replicated designs by their median.

pub mod dispersion;
pub mod distr;
pub mod ic;
pub mod meta;
pub mod nbc;
mod stats;

use std::collections::HashMap;
use std::io::Write as _;
use std::path::Path;

use log::warn;
use ndarray::{Array2, ArrayView1, ArrayView2};
use once_cell::sync::Lazy;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::problems::ProblemInstance;
use crate::sampling::{build_design, Sample, Sampler};
use crate::InstanceLabel;

pub use dispersion::{dispersion, DispersionFeatures};
pub use distr::{distribution, DistrFeatures};
pub use ic::{information_content, IcFeatures};
pub use meta::{meta_model, MetaFeatures};
pub use nbc::{nearest_better_clustering, NbcFeatures};

/// Total number of features.
pub const FEATURE_COUNT: usize = 38;

/// Feature group, in schema order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureGroup {
    Dispersion,
    InformationContent,
    NearestBetter,
    MetaModel,
    Distribution,
}

#[derive(Debug, Clone)]
pub struct FeatureDef {
    pub name: &'static str,
    pub group: FeatureGroup,
}

static SCHEMA: Lazy<Vec<FeatureDef>> = Lazy::new(|| {
    let raw = include_str!("schema.tsv");
    let mut defs = Vec::new();
    for line in raw.lines() {
        if line.is_empty() {
            continue;
        }
        let (name, group) = line
            .split_once('\t')
            .expect("schema line must be name<TAB>group");
        let group = match group {
            "dispersion" => FeatureGroup::Dispersion,
            "information_content" => FeatureGroup::InformationContent,
            "nearest_better" => FeatureGroup::NearestBetter,
            "meta_model" => FeatureGroup::MetaModel,
            "distribution" => FeatureGroup::Distribution,
            other => panic!("unknown feature group '{other}'"),
        };
        defs.push(FeatureDef { name, group });
    }
    assert_eq!(defs.len(), FEATURE_COUNT, "schema must define 38 features");
    defs
});

/// The canonical feature schema: 38 named features in fixed order.
pub fn schema() -> &'static [FeatureDef] {
    &SCHEMA
}

/// Names only, in schema order.
pub fn feature_names() -> Vec<&'static str> {
    SCHEMA.iter().map(|d| d.name).collect()
}

/// Index of a feature name in the schema.
pub fn feature_index(name: &str) -> Option<usize> {
    SCHEMA.iter().position(|d| d.name == name)
}

/// All 38 features of one instance, in schema order.
#[derive(Debug, Clone)]
pub struct FeatureVector {
    label: InstanceLabel,
    values: [f64; FEATURE_COUNT],
}

impl FeatureVector {
    pub fn label(&self) -> InstanceLabel {
        self.label
    }

    pub fn values(&self) -> &[f64; FEATURE_COUNT] {
        &self.values
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        feature_index(name).map(|i| self.values[i])
    }
}

/// Compute all feature groups on one evaluated design.
pub fn compute_features(sample: &Sample) -> Result<FeatureVector> {
    let disp = dispersion::dispersion(sample)?;
    let ic = ic::information_content(sample)?;
    let nbc = nbc::nearest_better_clustering(sample)?;
    let meta = meta::meta_model(sample)?;
    let distr = distr::distribution(sample)?;

    let mut values = [0.0; FEATURE_COUNT];
    values[0..16].copy_from_slice(&disp.flatten());
    values[16..21].copy_from_slice(&ic.flatten());
    values[21..26].copy_from_slice(&nbc.flatten());
    values[26..35].copy_from_slice(&meta.flatten());
    values[35..38].copy_from_slice(&distr.flatten());

    if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!(
            "feature '{}' is not finite on {}",
            SCHEMA[bad].name,
            sample.label()
        )));
    }
    Ok(FeatureVector {
        label: sample.label(),
        values,
    })
}

/// Median of each feature over replicated designs.
///
/// Replication `i` uses seed `seed + i * count`; for Sobol designs the
/// replications therefore cover disjoint stretches of the sequence. A
/// replication whose feature computation fails is dropped with a warning;
/// more than half failing is an error.
pub fn feature_vector(
    instance: &ProblemInstance,
    sampler: Sampler,
    count: usize,
    replications: usize,
    seed: u64,
) -> Result<FeatureVector> {
    if replications == 0 {
        return Err(Error::InvalidArgument(
            "need at least one replication".into(),
        ));
    }
    let mut per_rep: Vec<[f64; FEATURE_COUNT]> = Vec::with_capacity(replications);
    for rep in 0..replications {
        let rep_seed = seed
            .checked_add(rep as u64 * count as u64)
            .ok_or_else(|| Error::InvalidArgument("replication seed overflow".into()))?;
        let result = build_design(instance, sampler, count, rep_seed)
            .and_then(|sample| compute_features(&sample));
        match result {
            Ok(v) => per_rep.push(v.values),
            Err(err) => {
                warn!(
                    "dropping replication {rep} of {}: {err}",
                    instance.label()
                );
            }
        }
    }
    if per_rep.len() * 2 <= replications {
        return Err(Error::DegenerateSample(format!(
            "{} of {replications} replications failed on {}",
            replications - per_rep.len(),
            instance.label()
        )));
    }

    let mut values = [0.0; FEATURE_COUNT];
    let mut column = Vec::with_capacity(per_rep.len());
    for (f, value) in values.iter_mut().enumerate() {
        column.clear();
        column.extend(per_rep.iter().map(|rep| rep[f]));
        *value = stats::median(&column);
    }
    Ok(FeatureVector {
        label: instance.label(),
        values,
    })
}

/// A labeled feature matrix: one row per instance, one column per feature.
/// Columns are always a subset of the schema, in schema order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    labels: Vec<InstanceLabel>,
    columns: Vec<String>,
    data: Array2<f64>,
}

impl FeatureMatrix {
    pub fn new(labels: Vec<InstanceLabel>, columns: Vec<String>, data: Array2<f64>) -> Result<Self> {
        if labels.len() != data.nrows() || columns.len() != data.ncols() {
            return Err(Error::InvalidArgument(format!(
                "matrix shape {:?} does not match {} labels x {} columns",
                data.dim(),
                labels.len(),
                columns.len()
            )));
        }
        Ok(Self {
            labels,
            columns,
            data,
        })
    }

    pub fn labels(&self) -> &[InstanceLabel] {
        &self.labels
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn data(&self) -> ArrayView2<'_, f64> {
        self.data.view()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.data.row(i)
    }

    pub fn n_rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_columns(&self) -> usize {
        self.data.ncols()
    }

    /// Pick out rows by index, in the order given.
    pub fn select_rows(&self, indices: &[usize]) -> Result<FeatureMatrix> {
        if indices.is_empty() {
            return Err(Error::InvalidArgument("row selection is empty".into()));
        }
        let mut labels = Vec::with_capacity(indices.len());
        let mut data = Array2::<f64>::zeros((indices.len(), self.n_columns()));
        for (new_r, &old_r) in indices.iter().enumerate() {
            if old_r >= self.n_rows() {
                return Err(Error::InvalidArgument(format!(
                    "row index {old_r} outside 0..{}",
                    self.n_rows()
                )));
            }
            labels.push(self.labels[old_r]);
            data.row_mut(new_r).assign(&self.data.row(old_r));
        }
        FeatureMatrix::new(labels, self.columns.clone(), data)
    }

    /// Restrict to a subset of feature columns. Requested names must exist
    /// in the schema and be present in this matrix; the result keeps schema
    /// order regardless of the request order.
    pub fn subset(&self, names: &[String]) -> Result<FeatureMatrix> {
        if names.is_empty() {
            return Err(Error::InvalidArgument("feature subset is empty".into()));
        }
        for name in names {
            if feature_index(name).is_none() {
                return Err(Error::SchemaMismatch(format!(
                    "'{name}' is not a schema feature"
                )));
            }
            if !self.columns.contains(name) {
                return Err(Error::SchemaMismatch(format!(
                    "'{name}' is not present in this matrix"
                )));
            }
        }
        let keep: Vec<usize> = self
            .columns
            .iter()
            .enumerate()
            .filter(|(_, c)| names.contains(c))
            .map(|(i, _)| i)
            .collect();
        let mut data = Array2::<f64>::zeros((self.n_rows(), keep.len()));
        for (new_c, &old_c) in keep.iter().enumerate() {
            data.column_mut(new_c).assign(&self.data.column(old_c));
        }
        FeatureMatrix::new(
            self.labels.clone(),
            keep.iter().map(|&i| self.columns[i].clone()).collect(),
            data,
        )
    }

    /// Write as CSV: `function_id,instance_id` followed by one column per
    /// feature. Floating point values use the shortest representation that
    /// round-trips, so write-read-write cycles are byte-identical.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        out.extend_from_slice(b"function_id,instance_id");
        for c in &self.columns {
            out.push(b',');
            out.extend_from_slice(c.as_bytes());
        }
        out.push(b'\n');
        for (r, label) in self.labels.iter().enumerate() {
            write!(out, "{},{}", label.function_id, label.instance_id)?;
            for c in 0..self.n_columns() {
                write!(out, ",{}", self.data[[r, c]])?;
            }
            out.push(b'\n');
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    /// Read a feature CSV. Every feature column must be a schema name,
    /// optionally after renaming through `mapping` (source name to schema
    /// name); columns are reordered into schema order.
    pub fn read_csv(path: &Path, mapping: Option<&HashMap<String, String>>) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)?;
        let headers = reader.headers()?.clone();
        if headers.len() < 3 {
            return Err(Error::SchemaMismatch(
                "feature CSV needs id columns plus at least one feature".into(),
            ));
        }
        let resolve = |raw: &str| -> String {
            match mapping.and_then(|m| m.get(raw)) {
                Some(mapped) => mapped.clone(),
                None => raw.to_string(),
            }
        };
        let id_cols: Vec<String> = headers.iter().take(2).map(resolve).collect();
        if id_cols[0] != "function_id" || id_cols[1] != "instance_id" {
            return Err(Error::SchemaMismatch(format!(
                "first columns must be function_id,instance_id (got {},{})",
                id_cols[0], id_cols[1]
            )));
        }

        // (schema position, raw record position, schema name), then sorted
        // into schema order.
        let mut feature_cols: Vec<(usize, usize, String)> = Vec::new();
        for (pos, raw) in headers.iter().enumerate().skip(2) {
            let name = resolve(raw);
            match feature_index(&name) {
                Some(idx) => feature_cols.push((idx, pos, name)),
                None => {
                    return Err(Error::SchemaMismatch(format!(
                        "column '{raw}' does not map to a schema feature"
                    )))
                }
            }
        }
        feature_cols.sort_by_key(|&(idx, _, _)| idx);
        for pair in feature_cols.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::SchemaMismatch(format!(
                    "feature '{}' appears more than once",
                    pair[0].2
                )));
            }
        }
        let source_pos: Vec<usize> = feature_cols.iter().map(|&(_, pos, _)| pos).collect();

        let mut labels = Vec::new();
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for record in reader.records() {
            let record = record?;
            let fid: u32 = record[0].parse().map_err(|_| {
                Error::MalformedInput(format!("bad function_id '{}'", &record[0]))
            })?;
            let iid: u32 = record[1].parse().map_err(|_| {
                Error::MalformedInput(format!("bad instance_id '{}'", &record[1]))
            })?;
            labels.push(InstanceLabel::new(fid, iid));
            let mut row = Vec::with_capacity(source_pos.len());
            for &p in &source_pos {
                let v: f64 = record[p].parse().map_err(|_| {
                    Error::MalformedInput(format!("bad feature value '{}'", &record[p]))
                })?;
                row.push(v);
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::MalformedInput("feature CSV has no rows".into()));
        }
        let mut data = Array2::<f64>::zeros((rows.len(), source_pos.len()));
        for (r, row) in rows.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                data[[r, c]] = v;
            }
        }
        FeatureMatrix::new(
            labels,
            feature_cols.into_iter().map(|(_, _, n)| n).collect(),
            data,
        )
    }
}

/// Compute the full feature matrix for a suite of instances, one row per
/// instance in suite order. Rows are computed in parallel; every instance
/// uses the same base seed, so designs are shared across instances.
pub fn feature_matrix(
    suite: &[ProblemInstance],
    sampler: Sampler,
    count: usize,
    replications: usize,
    seed: u64,
) -> Result<FeatureMatrix> {
    if suite.is_empty() {
        return Err(Error::InvalidArgument("suite is empty".into()));
    }
    let results: Vec<Result<FeatureVector>> = suite
        .par_iter()
        .map(|inst| feature_vector(inst, sampler, count, replications, seed))
        .collect();

    let mut labels = Vec::with_capacity(suite.len());
    let mut data = Array2::<f64>::zeros((suite.len(), FEATURE_COUNT));
    for (r, result) in results.into_iter().enumerate() {
        let v = result?;
        labels.push(v.label());
        for (c, &value) in v.values().iter().enumerate() {
            data[[r, c]] = value;
        }
    }
    FeatureMatrix::new(
        labels,
        feature_names().iter().map(|s| s.to_string()).collect(),
        data,
    )
}
