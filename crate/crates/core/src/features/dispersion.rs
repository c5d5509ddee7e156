//! Dispersion features: how tightly the best points cluster compared to
//! the whole design, measured through pairwise distances.

use crate::error::{Error, Result};
use crate::sampling::Sample;

use super::stats::{euclidean, mean, median};

/// Fitness quantiles defining the "best points" subsets.
pub const QUANTILES: [f64; 4] = [0.02, 0.05, 0.10, 0.25];

/// Mean- and median-based distance ratios and differences, one entry per
/// quantile in [`QUANTILES`] order: subset statistic over (ratio) or minus
/// (difference) the full-design statistic.
#[derive(Debug, Clone, Copy)]
pub struct DispersionFeatures {
    pub ratio_mean: [f64; 4],
    pub ratio_median: [f64; 4],
    pub diff_mean: [f64; 4],
    pub diff_median: [f64; 4],
}

impl DispersionFeatures {
    pub fn flatten(&self) -> [f64; 16] {
        let mut out = [0.0; 16];
        out[0..4].copy_from_slice(&self.ratio_mean);
        out[4..8].copy_from_slice(&self.ratio_median);
        out[8..12].copy_from_slice(&self.diff_mean);
        out[12..16].copy_from_slice(&self.diff_median);
        out
    }
}

fn pairwise_distances(points: ndarray::ArrayView2<'_, f64>, indices: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(indices.len() * (indices.len() - 1) / 2);
    for (a, &i) in indices.iter().enumerate() {
        for &j in indices.iter().skip(a + 1) {
            out.push(euclidean(points.row(i), points.row(j)));
        }
    }
    out
}

/// Compute the 16 dispersion features of a sample of at least 100 points.
pub fn dispersion(sample: &Sample) -> Result<DispersionFeatures> {
    let n = sample.len();
    if n < 100 {
        return Err(Error::InvalidArgument(format!(
            "dispersion needs at least 100 points, got {n}"
        )));
    }

    let all: Vec<usize> = (0..n).collect();
    let global = pairwise_distances(sample.points(), &all);
    let global_mean = mean(&global);
    let global_median = median(&global);
    if global_mean == 0.0 || global_median == 0.0 {
        return Err(Error::DegenerateSample(
            "pairwise distances collapse to zero".into(),
        ));
    }

    // Points ordered best-first; ties broken by index for determinism.
    let mut order: Vec<usize> = (0..n).collect();
    let fitness = sample.fitness();
    order.sort_by(|&a, &b| {
        fitness[a]
            .partial_cmp(&fitness[b])
            .unwrap()
            .then(a.cmp(&b))
    });

    let mut features = DispersionFeatures {
        ratio_mean: [0.0; 4],
        ratio_median: [0.0; 4],
        diff_mean: [0.0; 4],
        diff_median: [0.0; 4],
    };
    for (qi, &q) in QUANTILES.iter().enumerate() {
        let k = (q * n as f64).ceil() as usize;
        if k < 2 {
            return Err(Error::DegenerateSample(format!(
                "quantile {q} selects {k} point(s); need at least 2"
            )));
        }
        let subset = pairwise_distances(sample.points(), &order[..k]);
        let sub_mean = mean(&subset);
        let sub_median = median(&subset);
        features.ratio_mean[qi] = sub_mean / global_mean;
        features.ratio_median[qi] = sub_median / global_median;
        features.diff_mean[qi] = sub_mean - global_mean;
        features.diff_median[qi] = sub_median - global_median;
    }
    Ok(features)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::InstanceLabel;
    use approx::assert_abs_diff_eq;
    use ndarray::{Array1, Array2};

    fn sample_from(points: Array2<f64>, fitness: Vec<f64>) -> Sample {
        Sample::new(
            points,
            Array1::from_vec(fitness),
            InstanceLabel::new(1, 1),
        )
        .unwrap()
    }

    /// Brute-force oracle: recompute one quantile's statistics with
    /// independent code (full distance matrix, separate sort).
    fn oracle_ratio_mean(sample: &Sample, q: f64) -> f64 {
        let n = sample.len();
        let mut dist = vec![vec![0.0; n]; n];
        for (i, row) in dist.iter_mut().enumerate() {
            for (j, slot) in row.iter_mut().enumerate() {
                let mut s = 0.0;
                for c in 0..sample.dimension() {
                    let d = sample.points()[[i, c]] - sample.points()[[j, c]];
                    s += d * d;
                }
                *slot = s.sqrt();
            }
        }
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| {
            sample.fitness()[a]
                .partial_cmp(&sample.fitness()[b])
                .unwrap()
                .then(a.cmp(&b))
        });
        let k = (q * n as f64).ceil() as usize;
        let collect = |ids: &[usize]| {
            let mut v = Vec::new();
            for x in 0..ids.len() {
                for y in x + 1..ids.len() {
                    v.push(dist[ids[x]][ids[y]]);
                }
            }
            v
        };
        let sub = collect(&idx[..k]);
        let all = collect(&idx);
        mean(&sub) / mean(&all)
    }

    #[test]
    fn regular_simplex_gives_unit_ratios_and_zero_differences() {
        // 101 unit vectors in 101 dimensions: all pairwise distances equal
        // sqrt(2) after scaling into the domain.
        let n = 101;
        let mut points = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            points[[i, i]] = 2.0;
        }
        let fitness: Vec<f64> = (0..n).map(|i| (i as f64) * 0.37 - 5.0).collect();
        let sample = sample_from(points, fitness);
        let f = dispersion(&sample).unwrap();
        for qi in 0..4 {
            assert_abs_diff_eq!(f.ratio_mean[qi], 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(f.ratio_median[qi], 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(f.diff_mean[qi], 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(f.diff_median[qi], 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn funnel_landscape_contracts_best_points() {
        // Sphere fitness on a Sobol design: the best points huddle around
        // the origin, so subset distances shrink.
        let inst = crate::problems::ProblemInstance::new(1, 1, 5).unwrap();
        let sample =
            crate::sampling::build_design(&inst, crate::sampling::Sampler::Sobol, 400, 0).unwrap();
        let f = dispersion(&sample).unwrap();
        for qi in 0..4 {
            assert!(f.ratio_mean[qi] < 1.0, "quantile {qi}");
            assert!(f.diff_mean[qi] < 0.0, "quantile {qi}");
        }
        // Tighter quantiles contract at least as much on this landscape.
        assert!(f.ratio_mean[0] < f.ratio_mean[3]);
    }

    #[test]
    fn matches_brute_force_oracle() {
        let inst = crate::problems::ProblemInstance::new(8, 2, 3).unwrap();
        let sample =
            crate::sampling::build_design(&inst, crate::sampling::Sampler::Uniform, 150, 4).unwrap();
        let f = dispersion(&sample).unwrap();
        for (qi, &q) in QUANTILES.iter().enumerate() {
            let expect = oracle_ratio_mean(&sample, q);
            assert_abs_diff_eq!(f.ratio_mean[qi], expect, epsilon = 1e-10);
        }
    }

    #[test]
    fn rejects_small_samples() {
        let points = Array2::<f64>::zeros((50, 2));
        let fitness: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let sample = sample_from(points, fitness);
        assert!(matches!(
            dispersion(&sample),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn rejects_collapsed_designs() {
        let points = Array2::<f64>::zeros((120, 2));
        let fitness: Vec<f64> = (0..120).map(|i| i as f64).collect();
        let sample = sample_from(points, fitness);
        assert!(matches!(
            dispersion(&sample),
            Err(Error::DegenerateSample(_))
        ));
    }
}
