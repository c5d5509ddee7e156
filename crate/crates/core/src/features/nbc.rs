//! Nearest-better clustering features: relations between each point's
//! nearest neighbor and its nearest strictly better neighbor.

use log::warn;

use crate::error::{Error, Result};
use crate::sampling::Sample;

use super::stats::{euclidean, mean, pearson_option, sample_sd};

#[derive(Debug, Clone, Copy)]
pub struct NbcFeatures {
    /// sd(nearest neighbor dists) / sd(nearest better dists), both over the
    /// points with a defined nearest better.
    pub sd_ratio: f64,
    /// mean(nearest neighbor dists) / mean(nearest better dists), same set.
    pub mean_ratio: f64,
    /// Correlation between the two distance vectors, same set.
    pub cor: f64,
    /// Coefficient of variation of the per-point nb/nn distance ratios.
    pub dist_coeff_var: f64,
    /// Correlation between fitness and nearest-better in-degree, over all
    /// points.
    pub fitness_cor: f64,
}

impl NbcFeatures {
    pub fn flatten(&self) -> [f64; 5] {
        [
            self.sd_ratio,
            self.mean_ratio,
            self.cor,
            self.dist_coeff_var,
            self.fitness_cor,
        ]
    }
}

/// Compute the five nearest-better clustering features of a sample of at
/// least 100 points.
pub fn nearest_better_clustering(sample: &Sample) -> Result<NbcFeatures> {
    let n = sample.len();
    if n < 100 {
        return Err(Error::InvalidArgument(format!(
            "nearest-better clustering needs at least 100 points, got {n}"
        )));
    }
    let points = sample.points();
    let fitness = sample.fitness();

    // For each point: distance to nearest neighbor, and distance plus
    // identity of the nearest strictly better point. Ties resolve to the
    // smallest index so results never depend on iteration order.
    let mut nn_dist = vec![f64::INFINITY; n];
    let mut nb_dist = vec![f64::INFINITY; n];
    let mut nb_target = vec![usize::MAX; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = euclidean(points.row(i), points.row(j));
            if d < nn_dist[i] {
                nn_dist[i] = d;
            }
            if fitness[j] < fitness[i] && d < nb_dist[i] {
                nb_dist[i] = d;
                nb_target[i] = j;
            }
        }
    }

    let defined: Vec<usize> = (0..n).filter(|&i| nb_target[i] != usize::MAX).collect();
    if defined.len() < 2 {
        return Err(Error::DegenerateSample(
            "fewer than two points have a nearest better neighbor".into(),
        ));
    }
    let nn: Vec<f64> = defined.iter().map(|&i| nn_dist[i]).collect();
    let nb: Vec<f64> = defined.iter().map(|&i| nb_dist[i]).collect();
    if nn.contains(&0.0) {
        return Err(Error::DegenerateSample(
            "duplicate points make distance ratios undefined".into(),
        ));
    }

    let sd_nb = sample_sd(&nb);
    let mean_nb = mean(&nb);
    if sd_nb == 0.0 || mean_nb == 0.0 {
        return Err(Error::DegenerateSample(
            "nearest-better distances are constant".into(),
        ));
    }

    let cor = pearson_option(&nn, &nb).unwrap_or_else(|| {
        warn!("nearest-better clustering: distance correlation undefined, using 0");
        0.0
    });

    let ratios: Vec<f64> = defined.iter().map(|&i| nb_dist[i] / nn_dist[i]).collect();
    let dist_coeff_var = sample_sd(&ratios) / mean(&ratios);

    let mut indegree = vec![0.0f64; n];
    for &i in &defined {
        indegree[nb_target[i]] += 1.0;
    }
    let fitness_vec: Vec<f64> = fitness.iter().cloned().collect();
    let fitness_cor = pearson_option(&fitness_vec, &indegree).unwrap_or_else(|| {
        warn!("nearest-better clustering: fitness/in-degree correlation undefined, using 0");
        0.0
    });

    Ok(NbcFeatures {
        sd_ratio: sample_sd(&nn) / sd_nb,
        mean_ratio: mean(&nn) / mean_nb,
        cor,
        dist_coeff_var,
        fitness_cor,
    })
}
