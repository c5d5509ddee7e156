//! SVD fingerprint embeddings.
//!
//! A model is fitted once on a feature matrix and then maps any feature
//! vector `p` into the decomposition's coordinate system via
//! `p_hat = inv(Sigma_r) V_r^T p`. Training rows land on the rows of `U`;
//! external rows are projected without ever influencing the fit.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use log::warn;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::linalg;
use crate::InstanceLabel;

const MODEL_FORMAT_VERSION: u32 = 1;
const CONDITION_WARN_RATIO: f64 = 1e-12;

/// Feature scaling applied before the decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    None,
    MinMax,
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Normalization::None),
            "minmax" => Ok(Normalization::MinMax),
            other => Err(Error::Usage(format!(
                "unknown normalization '{other}' (expected none or minmax)"
            ))),
        }
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Normalization::None => write!(f, "none"),
            Normalization::MinMax => write!(f, "minmax"),
        }
    }
}

/// An embedded feature vector: the first `rank()` coordinates of a point in
/// the model's singular-vector basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Fingerprint {
    label: String,
    values: Array1<f64>,
}

impl Fingerprint {
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn values(&self) -> ArrayView1<'_, f64> {
        self.values.view()
    }

    pub fn rank(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// A fitted thin SVD of a (optionally min-max scaled) feature matrix.
#[derive(Debug, Clone)]
pub struct EmbeddingModel {
    u: Array2<f64>,
    singular_values: Array1<f64>,
    v: Array2<f64>,
    normalization: Option<Vec<(f64, f64)>>,
    row_labels: Vec<InstanceLabel>,
    column_labels: Vec<String>,
}

impl EmbeddingModel {
    /// Fit the model: scale the matrix as requested, decompose it, and keep
    /// the scaling parameters so later projections see the same map.
    pub fn fit(x: &FeatureMatrix, normalization: Normalization) -> Result<Self> {
        if x.n_rows() < 2 {
            return Err(Error::InvalidArgument(format!(
                "embedding needs at least 2 rows, got {}",
                x.n_rows()
            )));
        }
        for (r, row) in x.data().outer_iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "non-finite feature '{}' on row {}",
                        x.columns()[c],
                        x.labels()[r]
                    )));
                }
            }
        }

        let params = match normalization {
            Normalization::None => None,
            Normalization::MinMax => {
                let mut params = Vec::with_capacity(x.n_columns());
                for c in 0..x.n_columns() {
                    let col = x.data().column(c).to_owned();
                    let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
                    let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    if lo == hi {
                        warn!(
                            "feature '{}' has zero range; it maps to 0 under min-max scaling",
                            x.columns()[c]
                        );
                    }
                    params.push((lo, hi));
                }
                Some(params)
            }
        };

        let scaled = apply_normalization(x.data(), params.as_deref());
        let svd = linalg::svd(scaled.view())?;
        Ok(EmbeddingModel {
            u: svd.u,
            singular_values: svd.singular_values,
            v: svd.v,
            normalization: params,
            row_labels: x.labels().to_vec(),
            column_labels: x.columns().to_vec(),
        })
    }

    pub fn rank_full(&self) -> usize {
        self.singular_values.len()
    }

    pub fn singular_values(&self) -> ArrayView1<'_, f64> {
        self.singular_values.view()
    }

    pub fn u(&self) -> ArrayView2<'_, f64> {
        self.u.view()
    }

    pub fn v(&self) -> ArrayView2<'_, f64> {
        self.v.view()
    }

    pub fn row_labels(&self) -> &[InstanceLabel] {
        &self.row_labels
    }

    pub fn column_labels(&self) -> &[String] {
        &self.column_labels
    }

    pub fn normalization(&self) -> Normalization {
        if self.normalization.is_some() {
            Normalization::MinMax
        } else {
            Normalization::None
        }
    }

    fn check_rank(&self, r: usize) -> Result<()> {
        if r == 0 || r > self.rank_full() {
            return Err(Error::InvalidArgument(format!(
                "rank {r} outside 1..={}",
                self.rank_full()
            )));
        }
        Ok(())
    }

    /// Embed one feature vector: `p_hat = inv(Sigma_r) V_r^T p_scaled`.
    pub fn embed_row(&self, p: ArrayView1<'_, f64>, r: usize, label: &str) -> Result<Fingerprint> {
        self.check_rank(r)?;
        if p.len() != self.column_labels.len() {
            return Err(Error::SchemaMismatch(format!(
                "feature vector has {} entries, model expects {}",
                p.len(),
                self.column_labels.len()
            )));
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "feature vector '{label}' has non-finite entries"
            )));
        }
        let sigma_r = self.singular_values[r - 1];
        if sigma_r == 0.0 {
            return Err(Error::RankDeficient(format!(
                "singular value {r} is zero; the embedding is not invertible at this rank"
            )));
        }
        if sigma_r < CONDITION_WARN_RATIO * self.singular_values[0] {
            warn!(
                "singular value {r} is {sigma_r:.3e}, below 1e-12 of the largest; \
                 fingerprint coordinates at this rank are ill-conditioned"
            );
        }

        let scaled = match &self.normalization {
            Some(params) => normalize_vector(p, params),
            None => p.to_owned(),
        };
        let mut values = Array1::<f64>::zeros(r);
        for k in 0..r {
            let dot = self.v.column(k).dot(&scaled);
            values[k] = dot / self.singular_values[k];
        }
        Ok(Fingerprint {
            label: label.to_string(),
            values,
        })
    }

    /// Project a row that was not part of the fit. The formula is exactly
    /// `embed_row`; the separate entry point takes the source column names
    /// so a schema drift between the external data and the model is caught
    /// here instead of producing silently misaligned coordinates.
    pub fn project_external(
        &self,
        columns: &[String],
        p: ArrayView1<'_, f64>,
        r: usize,
        label: &str,
    ) -> Result<Fingerprint> {
        if columns != self.column_labels.as_slice() {
            return Err(Error::SchemaMismatch(format!(
                "external columns do not match the model ({} vs {} features)",
                columns.len(),
                self.column_labels.len()
            )));
        }
        self.embed_row(p, r, label)
    }

    /// Frobenius norm of `X_scaled - U_r Sigma_r V_r^T`.
    pub fn low_rank_error(&self, x: &FeatureMatrix, r: usize) -> Result<f64> {
        self.check_rank(r)?;
        if x.labels() != self.row_labels.as_slice()
            || x.columns() != self.column_labels.as_slice()
        {
            return Err(Error::SchemaMismatch(
                "low-rank error is defined against the matrix the model was fitted on".into(),
            ));
        }
        let scaled = apply_normalization(x.data(), self.normalization.as_deref());
        let mut sum = 0.0;
        for i in 0..scaled.nrows() {
            for j in 0..scaled.ncols() {
                let mut approx = 0.0;
                for k in 0..r {
                    approx += self.u[[i, k]] * self.singular_values[k] * self.v[[j, k]];
                }
                let d = scaled[[i, j]] - approx;
                sum += d * d;
            }
        }
        Ok(sum.sqrt())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let doc = ModelDoc {
            format_version: MODEL_FORMAT_VERSION,
            normalization: self.normalization(),
            row_labels: self.row_labels.clone(),
            column_labels: self.column_labels.clone(),
            singular_values: self.singular_values.to_vec(),
            u: matrix_to_rows(&self.u),
            v: matrix_to_rows(&self.v),
            normalization_params: self
                .normalization
                .as_ref()
                .map(|p| p.iter().map(|&(lo, hi)| [lo, hi]).collect()),
        };
        let mut bytes = serde_json::to_vec_pretty(&doc)?;
        bytes.push(b'\n');
        std::fs::write(path, bytes)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        let doc: ModelDoc = serde_json::from_slice(&bytes)?;
        if doc.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::SchemaMismatch(format!(
                "unsupported model format version {}",
                doc.format_version
            )));
        }
        let rank = doc.singular_values.len();
        let u = rows_to_matrix(&doc.u, rank, "u")?;
        let v = rows_to_matrix(&doc.v, rank, "v")?;
        if u.nrows() != doc.row_labels.len() || v.nrows() != doc.column_labels.len() {
            return Err(Error::MalformedInput(
                "model labels do not match factor shapes".into(),
            ));
        }
        let normalization = match (doc.normalization, doc.normalization_params) {
            (Normalization::None, None) => None,
            (Normalization::MinMax, Some(p)) if p.len() == doc.column_labels.len() => {
                Some(p.iter().map(|&[lo, hi]| (lo, hi)).collect())
            }
            _ => {
                return Err(Error::MalformedInput(
                    "normalization parameters inconsistent with declared mode".into(),
                ))
            }
        };
        Ok(EmbeddingModel {
            u,
            singular_values: Array1::from_vec(doc.singular_values),
            v,
            normalization,
            row_labels: doc.row_labels,
            column_labels: doc.column_labels,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    format_version: u32,
    normalization: Normalization,
    row_labels: Vec<InstanceLabel>,
    column_labels: Vec<String>,
    singular_values: Vec<f64>,
    u: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    normalization_params: Option<Vec<[f64; 2]>>,
}

fn matrix_to_rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.outer_iter().map(|r| r.to_vec()).collect()
}

fn rows_to_matrix(rows: &[Vec<f64>], width: usize, name: &str) -> Result<Array2<f64>> {
    let mut out = Array2::<f64>::zeros((rows.len(), width));
    for (i, row) in rows.iter().enumerate() {
        if row.len() != width {
            return Err(Error::MalformedInput(format!(
                "factor '{name}' row {i} has {} entries, expected {width}",
                row.len()
            )));
        }
        for (j, &v) in row.iter().enumerate() {
            out[[i, j]] = v;
        }
    }
    Ok(out)
}

fn apply_normalization(x: ArrayView2<'_, f64>, params: Option<&[(f64, f64)]>) -> Array2<f64> {
    let Some(params) = params else {
        return x.to_owned();
    };
    let mut out = Array2::<f64>::zeros(x.dim());
    for j in 0..x.ncols() {
        let (lo, hi) = params[j];
        let range = hi - lo;
        for i in 0..x.nrows() {
            out[[i, j]] = if range == 0.0 {
                0.0
            } else {
                (x[[i, j]] - lo) / range
            };
        }
    }
    out
}

fn normalize_vector(p: ArrayView1<'_, f64>, params: &[(f64, f64)]) -> Array1<f64> {
    Array1::from_iter(p.iter().zip(params).map(|(&v, &(lo, hi))| {
        let range = hi - lo;
        if range == 0.0 {
            0.0
        } else {
            (v - lo) / range
        }
    }))
}

/// Non-graphical Cattell scree estimate on a singular value spectrum.
///
/// Works on the eigenvalue scale (squared singular values). Component `i`
/// (1-based, up to `p - 2`) is counted when its eigenvalue reaches the
/// "optimal coordinate": the value predicted at position `i` by the straight
/// line through the following eigenvalue and the last one. The estimate is
/// the number of counted components, never less than 1.
pub fn cattell_scree(singular_values: &[f64]) -> Result<usize> {
    let p = singular_values.len();
    if p < 3 {
        return Err(Error::InvalidArgument(format!(
            "scree estimation needs at least 3 singular values, got {p}"
        )));
    }
    if singular_values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidArgument(
            "singular values must be finite and nonnegative".into(),
        ));
    }
    let lambda: Vec<f64> = singular_values.iter().map(|s| s * s).collect();
    let hi = lambda.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = lambda.iter().cloned().fold(f64::INFINITY, f64::min);
    if hi - lo <= 1e-12 * hi.max(1e-300) {
        warn!("flat singular value spectrum has no elbow; returning 1 component");
        return Ok(1);
    }

    let last_x = p as f64;
    let last_y = lambda[p - 1];
    let mut count = 0;
    for idx in 0..p - 2 {
        let next_x = (idx + 2) as f64;
        let next_y = lambda[idx + 1];
        let slope = (last_y - next_y) / (last_x - next_x);
        let predicted = next_y + ((idx + 1) as f64 - next_x) * slope;
        if lambda[idx] >= predicted {
            count += 1;
        }
    }
    Ok(count.max(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::feature_names;
    use approx::assert_abs_diff_eq;
    use ndarray::Array2;
    use tempfile::tempdir;

    fn matrix(data: Array2<f64>) -> FeatureMatrix {
        let labels = (0..data.nrows())
            .map(|i| InstanceLabel::new(1, i as u32 + 1))
            .collect();
        let columns = feature_names()
            .iter()
            .take(data.ncols())
            .map(|s| s.to_string())
            .collect();
        FeatureMatrix::new(labels, columns, data).unwrap()
    }

    #[test]
    fn identity_matrix_gives_unit_spectrum_and_basis_fingerprints() {
        let x = matrix(Array2::eye(38));
        let model = EmbeddingModel::fit(&x, Normalization::None).unwrap();
        assert_eq!(model.rank_full(), 38);
        for &s in model.singular_values() {
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
        }
        for i in 0..38 {
            let fp = model.embed_row(x.row(i), 38, "row").unwrap();
            assert_eq!(fp.norm(), 1.0);
            for j in 0..38 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(fp.values()[j], expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn rank_one_matrix_has_one_nonzero_singular_value() {
        let mut data = Array2::<f64>::zeros((10, 5));
        for i in 0..10 {
            for j in 0..5 {
                data[[i, j]] = (i as f64 + 1.0) * (0.5 + j as f64);
            }
        }
        let model = EmbeddingModel::fit(&matrix(data), Normalization::None).unwrap();
        for k in 1..5 {
            assert!(model.singular_values()[k] <= 1e-10);
        }
    }

    #[test]
    fn exactly_singular_rank_is_rejected() {
        // A zero column survives the rotations untouched, so the smallest
        // singular value is exactly 0 rather than rounding noise.
        let mut data = Array2::<f64>::zeros((6, 3));
        for i in 0..6 {
            data[[i, 0]] = (i as f64 * 0.7).sin() + 1.5;
            data[[i, 1]] = i as f64 - 2.0;
        }
        let model = EmbeddingModel::fit(&matrix(data), Normalization::None).unwrap();
        assert_eq!(model.singular_values()[2], 0.0);
        assert!(matches!(
            model.embed_row(ndarray::Array1::zeros(3).view(), 3, "z"),
            Err(Error::RankDeficient(_))
        ));
        assert!(model
            .embed_row(ndarray::Array1::zeros(3).view(), 2, "z")
            .is_ok());
    }

    #[test]
    fn model_invariants_hold_on_a_generic_matrix() {
        let mut data = Array2::<f64>::zeros((12, 6));
        for i in 0..12 {
            for j in 0..6 {
                data[[i, j]] = ((3 + i * 7 + j * 11) as f64 * 0.137).sin() * (j as f64 + 1.0);
            }
        }
        let x = matrix(data.clone());
        let model = EmbeddingModel::fit(&x, Normalization::None).unwrap();

        let defect_u = crate::linalg::orthogonality_defect(model.u());
        let defect_v = crate::linalg::orthogonality_defect(model.v());
        assert!(defect_u < 1e-10, "U^T U defect {defect_u}");
        assert!(defect_v < 1e-10, "V^T V defect {defect_v}");
        for k in 1..model.rank_full() {
            assert!(model.singular_values()[k - 1] >= model.singular_values()[k]);
        }
        let err = model.low_rank_error(&x, model.rank_full()).unwrap();
        assert!(err < 1e-8, "full-rank reconstruction error {err}");
    }

    #[test]
    fn training_rows_embed_onto_u() {
        let mut data = Array2::<f64>::zeros((9, 4));
        for i in 0..9 {
            for j in 0..4 {
                data[[i, j]] = ((i * 5 + j * 3 + 1) as f64).sqrt() - (i as f64) * 0.2;
            }
        }
        let x = matrix(data);
        let model = EmbeddingModel::fit(&x, Normalization::None).unwrap();
        let r = model.rank_full();
        for i in 0..x.n_rows() {
            let fp = model.embed_row(x.row(i), r, "t").unwrap();
            assert!(fp.norm() <= 1.0 + 1e-10);
            for k in 0..r {
                assert_abs_diff_eq!(fp.values()[k], model.u()[[i, k]], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn embedding_is_linear_without_normalization() {
        let mut data = Array2::<f64>::zeros((8, 5));
        for i in 0..8 {
            for j in 0..5 {
                data[[i, j]] = ((i + 2 * j) as f64 * 0.31).cos() + i as f64 * 0.05;
            }
        }
        let x = matrix(data);
        let model = EmbeddingModel::fit(&x, Normalization::None).unwrap();
        let p = x.row(3).to_owned();
        let doubled = &p * 2.0;
        let f1 = model.embed_row(p.view(), 4, "p").unwrap();
        let f2 = model.embed_row(doubled.view(), 4, "2p").unwrap();
        for k in 0..4 {
            assert_abs_diff_eq!(f2.values()[k], 2.0 * f1.values()[k], epsilon = 1e-10);
        }
        let zero = model
            .embed_row(ndarray::Array1::zeros(5).view(), 4, "0")
            .unwrap();
        assert!(zero.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn minmax_scaling_is_stored_and_reapplied() {
        let mut data = Array2::<f64>::zeros((6, 3));
        for i in 0..6 {
            data[[i, 0]] = i as f64 * 10.0 - 20.0;
            data[[i, 1]] = 7.5;
            data[[i, 2]] = (i as f64).powi(2);
        }
        let x = matrix(data);
        let model = EmbeddingModel::fit(&x, Normalization::MinMax).unwrap();
        assert_eq!(model.normalization(), Normalization::MinMax);

        // The constant column contributes nothing: its scaled value is 0.
        let scaled = apply_normalization(x.data(), model.normalization.as_deref());
        assert!(scaled.column(1).iter().all(|&v| v == 0.0));
        assert_eq!(scaled.column(0)[0], 0.0);
        assert_eq!(scaled.column(0)[5], 1.0);

        // The zero column drops the effective rank to 2; projection of a
        // training row equals its embedding there.
        assert_eq!(model.singular_values()[2], 0.0);
        let a = model.embed_row(x.row(2), 2, "t").unwrap();
        let b = model
            .project_external(x.columns(), x.row(2), 2, "t")
            .unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn external_projection_checks_the_schema() {
        let x = matrix(Array2::eye(4));
        let model = EmbeddingModel::fit(&x, Normalization::None).unwrap();
        let wrong = vec!["a".to_string(), "b".to_string()];
        assert!(matches!(
            model.project_external(&wrong, ndarray::Array1::zeros(2).view(), 2, "w"),
            Err(Error::SchemaMismatch(_))
        ));
        assert!(matches!(
            model.embed_row(ndarray::Array1::zeros(3).view(), 2, "short"),
            Err(Error::SchemaMismatch(_))
        ));
    }

    #[test]
    fn low_rank_error_matches_the_singular_value_tail() {
        let mut data = Array2::<f64>::zeros((15, 7));
        for i in 0..15 {
            for j in 0..7 {
                data[[i, j]] =
                    ((i * 13 + j * 29 + 5) as f64 * 0.0713).sin() * ((j + 1) as f64).ln_1p();
            }
        }
        let x = matrix(data);
        let model = EmbeddingModel::fit(&x, Normalization::None).unwrap();
        let mut previous = f64::INFINITY;
        for r in 1..=model.rank_full() {
            let err = model.low_rank_error(&x, r).unwrap();
            let tail: f64 = model.singular_values().iter().skip(r).map(|s| s * s).sum();
            let tail = tail.sqrt();
            assert!(
                (err - tail).abs() <= 1e-9 * tail.max(1.0),
                "r={r}: {err} vs tail {tail}"
            );
            assert!(err <= previous + 1e-12);
            previous = err;
        }
    }

    #[test]
    fn scree_estimate_matches_hand_computed_optimal_coordinates() {
        // Squared spectrum: 100, 90.25, 0.01, 0.0081, 0.0064.
        // i=1: line through (2, 90.25) and (5, 0.0064) predicts 120.3312
        //      at x=1; 100 < 120.3312, not counted.
        // i=2: line through (3, 0.01) and (5, 0.0064) predicts 0.0118;
        //      90.25 >= 0.0118, counted.
        // i=3: line through (4, 0.0081) and (5, 0.0064) predicts 0.0098;
        //      0.01 >= 0.0098, counted.
        assert_eq!(cattell_scree(&[10.0, 9.5, 0.1, 0.09, 0.08]).unwrap(), 2);
    }

    #[test]
    fn scree_estimate_edge_cases() {
        assert!(matches!(
            cattell_scree(&[1.0, 0.5]),
            Err(Error::InvalidArgument(_))
        ));
        assert_eq!(cattell_scree(&[2.0, 2.0, 2.0, 2.0]).unwrap(), 1);
        let geometric: Vec<f64> = (0..20).map(|k| 0.8f64.powi(k)).collect();
        let est = cattell_scree(&geometric).unwrap();
        assert!((1..=20).contains(&est));
        assert_eq!(est, cattell_scree(&geometric).unwrap());
    }

    #[test]
    fn serialization_round_trips() {
        let mut data = Array2::<f64>::zeros((5, 4));
        for i in 0..5 {
            for j in 0..4 {
                data[[i, j]] = ((i * 7 + j * 3) as f64).sin() * (j as f64 + 1.0) + i as f64 * 0.1;
            }
        }
        let x = matrix(data);
        let model = EmbeddingModel::fit(&x, Normalization::MinMax).unwrap();
        let dir = tempdir().unwrap();
        let p1 = dir.path().join("model.json");
        let p2 = dir.path().join("model2.json");
        model.save(&p1).unwrap();
        let back = EmbeddingModel::load(&p1).unwrap();
        back.save(&p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());

        let a = model.embed_row(x.row(1), 3, "t").unwrap();
        let b = back.embed_row(x.row(1), 3, "t").unwrap();
        assert_eq!(a.values(), b.values());
    }
}
