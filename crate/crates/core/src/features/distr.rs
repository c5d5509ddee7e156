//! Fitness distribution features: moments and modality of the sampled
//! fitness values, ignoring the search points entirely.

use crate::error::{Error, Result};
use crate::sampling::Sample;

/// Number of kernel density evaluation points.
const GRID_SIZE: usize = 512;
/// A density mode only counts as a peak when its segment carries more than
/// this share of the total mass.
const PEAK_MASS_THRESHOLD: f64 = 0.005;

#[derive(Debug, Clone, Copy)]
pub struct DistrFeatures {
    /// Third standardized moment, without bias correction.
    pub skewness: f64,
    /// Excess kurtosis (fourth standardized moment minus 3), without bias
    /// correction.
    pub kurtosis: f64,
    /// Number of substantial modes of a Gaussian kernel density estimate.
    pub number_of_peaks: f64,
}

impl DistrFeatures {
    pub fn flatten(&self) -> [f64; 3] {
        [self.skewness, self.kurtosis, self.number_of_peaks]
    }
}

fn quartiles(sorted: &[f64]) -> (f64, f64) {
    // Linear interpolation between order statistics, matching the common
    // "type 7" convention.
    let q = |p: f64| {
        let h = p * (sorted.len() - 1) as f64;
        let lo = h.floor() as usize;
        let hi = h.ceil() as usize;
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    };
    (q(0.25), q(0.75))
}

/// Count the substantial modes of a Gaussian KDE over the fitness values.
///
/// Bandwidth is Silverman's rule of thumb; the density is evaluated on a
/// 512-point grid padded by three bandwidths. Peaks are strict interior
/// maxima, and each peak's segment (bounded by the neighboring valleys or
/// the grid ends) must carry more than 0.5% of the total mass.
fn count_peaks(y: &[f64], sd: f64) -> Result<f64> {
    let n = y.len();
    let mut sorted = y.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let (q1, q3) = quartiles(&sorted);
    let iqr = q3 - q1;
    let h = 0.9 * sd.min(iqr / 1.34) * (n as f64).powf(-0.2);
    if h <= 0.0 {
        return Err(Error::DegenerateSample(
            "kernel bandwidth collapsed to zero".into(),
        ));
    }

    let lo = sorted[0] - 3.0 * h;
    let hi = sorted[n - 1] + 3.0 * h;
    let step = (hi - lo) / (GRID_SIZE - 1) as f64;
    let mut density = vec![0.0f64; GRID_SIZE];
    let norm = 1.0 / ((n as f64) * h * (2.0 * std::f64::consts::PI).sqrt());
    for (g, dens) in density.iter_mut().enumerate() {
        let x = lo + g as f64 * step;
        let mut acc = 0.0;
        for &v in y {
            let z = (x - v) / h;
            acc += (-0.5 * z * z).exp();
        }
        *dens = acc * norm;
    }

    let total: f64 = density.iter().sum();
    let maxima: Vec<usize> = (1..GRID_SIZE - 1)
        .filter(|&g| density[g] > density[g - 1] && density[g] > density[g + 1])
        .collect();

    // Segment boundaries: the lowest density point between consecutive
    // maxima, plus the grid ends.
    let mut boundaries = vec![0usize];
    for w in maxima.windows(2) {
        let valley = (w[0]..=w[1])
            .min_by(|&a, &b| density[a].partial_cmp(&density[b]).unwrap())
            .unwrap();
        boundaries.push(valley);
    }
    boundaries.push(GRID_SIZE - 1);

    let mut peaks = 0usize;
    for k in 0..maxima.len() {
        let start = boundaries[k];
        let end = boundaries[k + 1];
        let mass: f64 = density[start..=end].iter().sum::<f64>() / total;
        if mass > PEAK_MASS_THRESHOLD {
            peaks += 1;
        }
    }
    Ok(peaks as f64)
}

/// Compute the three distribution features of a sample of at least 30
/// points.
pub fn distribution(sample: &Sample) -> Result<DistrFeatures> {
    let n = sample.len();
    if n < 30 {
        return Err(Error::InvalidArgument(format!(
            "distribution features need at least 30 points, got {n}"
        )));
    }
    let y: Vec<f64> = sample.fitness().iter().cloned().collect();
    let nf = n as f64;
    let mean = y.iter().sum::<f64>() / nf;
    let mut m2 = 0.0;
    let mut m3 = 0.0;
    let mut m4 = 0.0;
    for &v in &y {
        let d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    if m2 == 0.0 {
        return Err(Error::DegenerateSample(
            "fitness has zero variance".into(),
        ));
    }
    let skewness = m3 / m2.powf(1.5);
    let kurtosis = m4 / (m2 * m2) - 3.0;
    let number_of_peaks = count_peaks(&y, m2.sqrt())?;

    Ok(DistrFeatures {
        skewness,
        kurtosis,
        number_of_peaks,
    })
}
