//! Benchmark problem suite: 24 standard noiseless functions plus HappyCat
//! and HGbat, each instantiated with deterministic translations, rotations
//! and target shifts derived from `(function_id, instance_id)`.
//!
//! Instances are self-contained: construction draws every random element
//! (shift vectors, rotation matrices, sign vectors, peak layouts) from
//! dedicated ChaCha8 streams, after which evaluation is pure.

mod transforms;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg;
use crate::InstanceLabel;
use transforms::{asy, boundary_penalty, lambda_diag, osz, osz_scalar, scale_by};

/// Search domain, identical for every function and coordinate.
pub const DOMAIN: (f64, f64) = (-5.0, 5.0);

/// Function ids of the 24-function core suite.
pub const CORE_FUNCTIONS: std::ops::RangeInclusive<u32> = 1..=24;

/// Function id of HappyCat.
pub const HAPPY_CAT: u32 = 25;
/// Function id of HGbat.
pub const HG_BAT: u32 = 26;

const FUNCTION_NAMES: [&str; 26] = [
    "sphere",
    "ellipsoid",
    "rastrigin",
    "bueche_rastrigin",
    "linear_slope",
    "attractive_sector",
    "step_ellipsoid",
    "rosenbrock",
    "rosenbrock_rotated",
    "ellipsoid_rotated",
    "discus",
    "bent_cigar",
    "sharp_ridge",
    "different_powers",
    "rastrigin_rotated",
    "weierstrass",
    "schaffers_f7",
    "schaffers_f7_ill",
    "griewank_rosenbrock",
    "schwefel",
    "gallagher_101",
    "gallagher_21",
    "katsuura",
    "lunacek_bi_rastrigin",
    "happy_cat",
    "hg_bat",
];

// Distinct RNG streams per instance, so adding or dropping one random
// element never perturbs the others.
const STREAM_X_SHIFT: u64 = 0;
const STREAM_F_SHIFT: u64 = 1;
const STREAM_ROTATION_R: u64 = 2;
const STREAM_ROTATION_Q: u64 = 3;
const STREAM_SIGNS: u64 = 4;
const STREAM_PEAKS: u64 = 5;

/// Half of twice the Schwefel optimum coordinate; `4.2096874633` is the
/// canonical `2 * |x_opt_i|` for the scaled Schwefel function.
const SCHWEFEL_MU: f64 = 4.2096874633;

fn derive_seed(function_id: u32, instance_id: u32, stream: u64) -> u64 {
    // SplitMix64 finalizer over a packed key keeps the streams for nearby
    // (function, instance) pairs statistically unrelated.
    let mut z = (function_id as u64)
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((instance_id as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9))
        .wrapping_add(stream.wrapping_mul(0x94D0_49BB_1331_11EB));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream_rng(function_id: u32, instance_id: u32, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(function_id, instance_id, stream))
}

/// Peak layout for the Gallagher functions.
#[derive(Debug, Clone)]
struct GallagherPeaks {
    /// Peak centers, one row per peak; row 0 is the global optimum.
    centers: Array2<f64>,
    /// Peak heights; `weights[0] = 10` marks the global peak.
    weights: Vec<f64>,
    /// Diagonal of each peak's conditioning matrix `Lambda^a / a^(1/4)`.
    cond_diags: Array2<f64>,
}

fn gallagher_peaks(
    function_id: u32,
    instance_id: u32,
    dim: usize,
    x_shift: &Array1<f64>,
    n_peaks: usize,
) -> GallagherPeaks {
    let mut rng = stream_rng(function_id, instance_id, STREAM_PEAKS);
    let denom = (n_peaks - 2) as f64;

    let mut centers = Array2::<f64>::zeros((n_peaks, dim));
    centers.row_mut(0).assign(x_shift);
    for p in 1..n_peaks {
        for j in 0..dim {
            centers[[p, j]] = rng.gen_range(-4.9..4.9);
        }
    }

    let mut weights = Vec::with_capacity(n_peaks);
    weights.push(10.0);
    for p in 1..n_peaks {
        weights.push(1.1 + 8.0 * (p - 1) as f64 / denom);
    }

    // Condition numbers for the local peaks: a random permutation of
    // 1000^(2j / (n_peaks - 2)); the global peak gets 1000^2.
    let mut alphas: Vec<f64> = (0..n_peaks - 1)
        .map(|j| 1000.0f64.powf(2.0 * j as f64 / denom))
        .collect();
    for i in (1..alphas.len()).rev() {
        let j = rng.gen_range(0..=i);
        alphas.swap(i, j);
    }

    let mut cond_diags = Array2::<f64>::zeros((n_peaks, dim));
    for p in 0..n_peaks {
        let alpha = if p == 0 { 1.0e6 } else { alphas[p - 1] };
        let diag = lambda_diag(alpha, dim);
        let scale = alpha.powf(-0.25);
        for j in 0..dim {
            cond_diags[[p, j]] = diag[j] * scale;
        }
    }

    GallagherPeaks {
        centers,
        weights,
        cond_diags,
    }
}

/// One concrete benchmark instance, ready to evaluate.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    label: InstanceLabel,
    dimension: usize,
    x_shift: Array1<f64>,
    f_shift: f64,
    rotation_seed: u64,
    rot_r: Option<Array2<f64>>,
    rot_q: Option<Array2<f64>>,
    signs: Option<Array1<f64>>,
    peaks: Option<GallagherPeaks>,
}

fn needs_r(function_id: u32) -> bool {
    matches!(function_id, 6 | 7 | 9..=19 | 21..=24)
}

fn needs_q(function_id: u32) -> bool {
    matches!(function_id, 6 | 7 | 13 | 15 | 16 | 17 | 18 | 23 | 24)
}

fn needs_signs(function_id: u32) -> bool {
    matches!(function_id, 5 | 20 | 24)
}

impl ProblemInstance {
    /// Build the instance for `(function_id, instance_id)` in the given
    /// dimension. Ids 1..=24 are the core suite, 25 is HappyCat and 26 is
    /// HGbat; instance ids are 1-based.
    pub fn new(function_id: u32, instance_id: u32, dimension: usize) -> Result<Self> {
        if !(1..=26).contains(&function_id) {
            return Err(Error::InvalidArgument(format!(
                "function id {function_id} is outside 1..=26"
            )));
        }
        if instance_id == 0 {
            return Err(Error::InvalidArgument(
                "instance ids are 1-based; got 0".into(),
            ));
        }
        if dimension < 2 {
            return Err(Error::InvalidArgument(format!(
                "dimension must be at least 2, got {dimension}"
            )));
        }

        let mut shift_rng = stream_rng(function_id, instance_id, STREAM_X_SHIFT);
        let x_shift =
            Array1::from_iter((0..dimension).map(|_| shift_rng.gen_range(-4.0..4.0)));

        let mut f_rng = stream_rng(function_id, instance_id, STREAM_F_SHIFT);
        let f_shift = (f_rng.gen_range(-100.0f64..100.0) * 100.0).round() / 100.0;

        let rotation_seed = derive_seed(function_id, instance_id, STREAM_ROTATION_R);
        let rot_r = needs_r(function_id).then(|| {
            let mut rng = stream_rng(function_id, instance_id, STREAM_ROTATION_R);
            linalg::random_orthogonal(dimension, &mut rng)
        });
        let rot_q = needs_q(function_id).then(|| {
            let mut rng = stream_rng(function_id, instance_id, STREAM_ROTATION_Q);
            linalg::random_orthogonal(dimension, &mut rng)
        });

        let signs = needs_signs(function_id).then(|| {
            let mut rng = stream_rng(function_id, instance_id, STREAM_SIGNS);
            Array1::from_iter(
                (0..dimension).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }),
            )
        });

        let peaks = match function_id {
            21 => Some(gallagher_peaks(function_id, instance_id, dimension, &x_shift, 101)),
            22 => Some(gallagher_peaks(function_id, instance_id, dimension, &x_shift, 21)),
            _ => None,
        };

        Ok(Self {
            label: InstanceLabel::new(function_id, instance_id),
            dimension,
            x_shift,
            f_shift,
            rotation_seed,
            rot_r,
            rot_q,
            signs,
            peaks,
        })
    }

    pub fn label(&self) -> InstanceLabel {
        self.label
    }

    pub fn function_id(&self) -> u32 {
        self.label.function_id
    }

    pub fn instance_id(&self) -> u32 {
        self.label.instance_id
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn x_shift(&self) -> ArrayView1<'_, f64> {
        self.x_shift.view()
    }

    pub fn f_shift(&self) -> f64 {
        self.f_shift
    }

    /// Seed of the RNG stream the rotation matrices were drawn from.
    pub fn rotation_seed(&self) -> u64 {
        self.rotation_seed
    }

    pub fn function_name(&self) -> &'static str {
        FUNCTION_NAMES[(self.label.function_id - 1) as usize]
    }

    /// Location and value of the global optimum.
    pub fn optimum(&self) -> (Array1<f64>, f64) {
        let x_opt = match self.label.function_id {
            5 => self.signs.as_ref().unwrap() * 5.0,
            20 => self.signs.as_ref().unwrap() * (SCHWEFEL_MU / 2.0),
            24 => self.signs.as_ref().unwrap() * 1.25,
            25 | 26 => &self.x_shift - 1.0,
            _ => self.x_shift.clone(),
        };
        (x_opt, self.f_shift)
    }

    /// Evaluate the instance at one point.
    pub fn evaluate(&self, x: ArrayView1<'_, f64>) -> Result<f64> {
        if x.len() != self.dimension {
            return Err(Error::InvalidArgument(format!(
                "point has {} coordinates, instance expects {}",
                x.len(),
                self.dimension
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "point contains non-finite coordinates".into(),
            ));
        }
        Ok(self.base_value(x) + self.f_shift)
    }

    /// Evaluate every row of a `points x dimension` matrix.
    pub fn evaluate_rows(&self, xs: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        let mut out = Array1::<f64>::zeros(xs.nrows());
        for (i, row) in xs.rows().into_iter().enumerate() {
            out[i] = self.evaluate(row)?;
        }
        Ok(out)
    }

    fn shifted(&self, x: ArrayView1<'_, f64>) -> Array1<f64> {
        &x - &self.x_shift
    }

    fn rot_r(&self, v: &Array1<f64>) -> Array1<f64> {
        self.rot_r.as_ref().unwrap().dot(v)
    }

    fn rot_q(&self, v: &Array1<f64>) -> Array1<f64> {
        self.rot_q.as_ref().unwrap().dot(v)
    }

    fn base_value(&self, x: ArrayView1<'_, f64>) -> f64 {
        let d = self.dimension;
        let df = d as f64;
        match self.label.function_id {
            // Sphere.
            1 => {
                let z = self.shifted(x);
                z.dot(&z)
            }
            // Separable ellipsoid with oscillation.
            2 => {
                let mut z = self.shifted(x);
                osz(&mut z);
                ellipsoid_sum(&z)
            }
            // Separable Rastrigin.
            3 => {
                let mut z = self.shifted(x);
                osz(&mut z);
                asy(&mut z, 0.2);
                scale_by(&mut z, &lambda_diag(10.0, d));
                rastrigin_sum(&z)
            }
            // Bueche-Rastrigin: odd coordinates of positive sign get an
            // extra factor 10 in the conditioning.
            4 => {
                let mut t = self.shifted(x);
                osz(&mut t);
                for (i, v) in t.iter_mut().enumerate() {
                    let mut s = 10.0f64.powf(0.5 * i as f64 / (df - 1.0));
                    if i % 2 == 0 && *v > 0.0 {
                        s *= 10.0;
                    }
                    *v *= s;
                }
                rastrigin_sum(&t) + 100.0 * boundary_penalty(x)
            }
            // Linear slope: optimum on the boundary corner picked by the
            // sign vector.
            5 => {
                let signs = self.signs.as_ref().unwrap();
                let mut total = 0.0;
                for i in 0..d {
                    let s = signs[i] * 10.0f64.powf(i as f64 / (df - 1.0));
                    let x_opt = 5.0 * signs[i];
                    let z = if x_opt * x[i] < 25.0 { x[i] } else { x_opt };
                    total += 5.0 * s.abs() - s * z;
                }
                total
            }
            // Attractive sector.
            6 => {
                let mut z = self.rot_r(&self.shifted(x));
                scale_by(&mut z, &lambda_diag(10.0, d));
                let z = self.rot_q(&z);
                let mut sum = 0.0;
                for i in 0..d {
                    let s = if z[i] * self.x_shift[i] > 0.0 { 100.0 } else { 1.0 };
                    sum += (s * z[i]).powi(2);
                }
                osz_scalar(sum).powf(0.9)
            }
            // Step ellipsoid.
            7 => {
                let mut zhat = self.rot_r(&self.shifted(x));
                scale_by(&mut zhat, &lambda_diag(10.0, d));
                let first = zhat[0].abs();
                let ztilde = Array1::from_iter(zhat.iter().map(|&v| {
                    if v.abs() > 0.5 {
                        (0.5 + v).floor()
                    } else {
                        (0.5 + 10.0 * v).floor() / 10.0
                    }
                }));
                let z = self.rot_q(&ztilde);
                let mut sum = 0.0;
                for i in 0..d {
                    sum += 10.0f64.powf(2.0 * i as f64 / (df - 1.0)) * z[i] * z[i];
                }
                0.1 * (first / 1.0e4).max(sum) + boundary_penalty(x)
            }
            // Rosenbrock, original and rotated.
            8 => {
                let c = (df.sqrt() / 8.0).max(1.0);
                let z = self.shifted(x).mapv(|v| c * v + 1.0);
                rosenbrock_sum(&z)
            }
            9 => {
                let c = (df.sqrt() / 8.0).max(1.0);
                let z = self.rot_r(&self.shifted(x)).mapv(|v| c * v + 1.0);
                rosenbrock_sum(&z)
            }
            // Rotated ellipsoid.
            10 => {
                let mut z = self.rot_r(&self.shifted(x));
                osz(&mut z);
                ellipsoid_sum(&z)
            }
            // Discus.
            11 => {
                let mut z = self.rot_r(&self.shifted(x));
                osz(&mut z);
                let mut sum = 1.0e6 * z[0] * z[0];
                for i in 1..d {
                    sum += z[i] * z[i];
                }
                sum
            }
            // Bent cigar.
            12 => {
                let mut z = self.rot_r(&self.shifted(x));
                asy(&mut z, 0.5);
                let z = self.rot_r(&z);
                let mut sum = z[0] * z[0];
                for i in 1..d {
                    sum += 1.0e6 * z[i] * z[i];
                }
                sum
            }
            // Sharp ridge.
            13 => {
                let mut z = self.rot_r(&self.shifted(x));
                scale_by(&mut z, &lambda_diag(10.0, d));
                let z = self.rot_q(&z);
                let tail: f64 = (1..d).map(|i| z[i] * z[i]).sum();
                z[0] * z[0] + 100.0 * tail.sqrt()
            }
            // Different powers.
            14 => {
                let z = self.rot_r(&self.shifted(x));
                let mut sum = 0.0;
                for i in 0..d {
                    sum += z[i].abs().powf(2.0 + 4.0 * i as f64 / (df - 1.0));
                }
                sum.sqrt()
            }
            // Rotated Rastrigin.
            15 => {
                let mut z = self.rot_r(&self.shifted(x));
                osz(&mut z);
                asy(&mut z, 0.2);
                let mut z = self.rot_q(&z);
                scale_by(&mut z, &lambda_diag(10.0, d));
                let z = self.rot_r(&z);
                rastrigin_sum(&z)
            }
            // Weierstrass.
            16 => {
                let mut z = self.rot_r(&self.shifted(x));
                osz(&mut z);
                let mut z = self.rot_q(&z);
                scale_by(&mut z, &lambda_diag(0.01, d));
                let z = self.rot_r(&z);
                let f0: f64 = (0..12)
                    .map(|k| 0.5f64.powi(k) * (std::f64::consts::PI * 3.0f64.powi(k)).cos())
                    .sum();
                let mut avg = 0.0;
                for i in 0..d {
                    for k in 0..12 {
                        avg += 0.5f64.powi(k)
                            * (2.0 * std::f64::consts::PI * 3.0f64.powi(k) * (z[i] + 0.5)).cos();
                    }
                }
                avg /= df;
                10.0 * (avg - f0).powi(3) + 10.0 / df * boundary_penalty(x)
            }
            // Schaffers F7, moderately and highly ill-conditioned.
            17 | 18 => {
                let alpha = if self.label.function_id == 17 { 10.0 } else { 1000.0 };
                let mut z = self.rot_r(&self.shifted(x));
                asy(&mut z, 0.5);
                let mut z = self.rot_q(&z);
                scale_by(&mut z, &lambda_diag(alpha, d));
                let mut sum = 0.0;
                for i in 0..d - 1 {
                    let s = (z[i] * z[i] + z[i + 1] * z[i + 1]).sqrt();
                    sum += s.sqrt() * (1.0 + (50.0 * s.powf(0.2)).sin().powi(2));
                }
                (sum / (df - 1.0)).powi(2) + 10.0 * boundary_penalty(x)
            }
            // Composite Griewank-Rosenbrock.
            19 => {
                let c = (df.sqrt() / 8.0).max(1.0);
                let z = self.rot_r(&self.shifted(x)).mapv(|v| c * v + 1.0);
                let mut sum = 0.0;
                for i in 0..d - 1 {
                    let s = 100.0 * (z[i] * z[i] - z[i + 1]).powi(2) + (z[i] - 1.0).powi(2);
                    sum += s / 4000.0 - s.cos();
                }
                10.0 * sum / (df - 1.0) + 10.0
            }
            // Schwefel.
            20 => {
                let signs = self.signs.as_ref().unwrap();
                let xhat = Array1::from_iter((0..d).map(|i| 2.0 * signs[i] * x[i]));
                let mut zhat = xhat.clone();
                for i in 1..d {
                    zhat[i] = xhat[i] + 0.25 * (xhat[i - 1] - SCHWEFEL_MU);
                }
                let diag = lambda_diag(10.0, d);
                let z = Array1::from_iter(
                    (0..d).map(|i| 100.0 * (diag[i] * (zhat[i] - SCHWEFEL_MU) + SCHWEFEL_MU)),
                );
                let mut sum = 0.0;
                for i in 0..d {
                    sum += z[i] * z[i].abs().sqrt().sin();
                }
                -sum / (100.0 * df)
                    + 4.189828872724339
                    + 100.0 * boundary_penalty(z.mapv(|v| v / 100.0).view())
            }
            // Gallagher peak functions.
            21 | 22 => {
                let peaks = self.peaks.as_ref().unwrap();
                let mut best = f64::NEG_INFINITY;
                for p in 0..peaks.weights.len() {
                    let diff = Array1::from_iter((0..d).map(|j| x[j] - peaks.centers[[p, j]]));
                    let r = self.rot_r(&diff);
                    let mut quad = 0.0;
                    for j in 0..d {
                        quad += peaks.cond_diags[[p, j]] * r[j] * r[j];
                    }
                    let value = peaks.weights[p] * (-quad / (2.0 * df)).exp();
                    if value > best {
                        best = value;
                    }
                }
                osz_scalar(10.0 - best).powi(2) + boundary_penalty(x)
            }
            // Katsuura.
            23 => {
                let mut z = self.rot_r(&self.shifted(x));
                scale_by(&mut z, &lambda_diag(100.0, d));
                let z = self.rot_q(&z);
                let expo = 10.0 / df.powf(1.2);
                let mut product = 1.0;
                for i in 0..d {
                    let mut inner = 0.0;
                    for j in 1..=32 {
                        let pow = 2.0f64.powi(j);
                        let v = pow * z[i];
                        inner += (v - v.round()).abs() / pow;
                    }
                    product *= (1.0 + (i + 1) as f64 * inner).powf(expo);
                }
                10.0 / (df * df) * product - 10.0 / (df * df) + boundary_penalty(x)
            }
            // Lunacek bi-Rastrigin.
            24 => {
                let signs = self.signs.as_ref().unwrap();
                let mu0 = 2.5;
                let s = 1.0 - 1.0 / (2.0 * (df + 20.0).sqrt() - 8.2);
                let mu1 = -((mu0 * mu0 - 1.0) / s).sqrt();
                let xhat = Array1::from_iter((0..d).map(|i| 2.0 * signs[i] * x[i]));
                let mut z = self.rot_r(&xhat.mapv(|v| v - mu0));
                scale_by(&mut z, &lambda_diag(100.0, d));
                let z = self.rot_q(&z);
                let sum0: f64 = xhat.iter().map(|&v| (v - mu0) * (v - mu0)).sum();
                let sum1: f64 = xhat.iter().map(|&v| (v - mu1) * (v - mu1)).sum();
                let cos_sum: f64 = z
                    .iter()
                    .map(|&v| (2.0 * std::f64::consts::PI * v).cos())
                    .sum();
                sum0.min(df + s * sum1) + 10.0 * (df - cos_sum) + 1.0e4 * boundary_penalty(x)
            }
            // HappyCat.
            25 => {
                let z = self.shifted(x);
                let r2 = z.dot(&z);
                let sum = z.sum();
                ((r2 - df) * (r2 - df)).powf(0.125) + (0.5 * r2 + sum) / df + 0.5
            }
            // HGbat.
            26 => {
                let z = self.shifted(x);
                let r2 = z.dot(&z);
                let sum = z.sum();
                (r2 * r2 - sum * sum).abs().sqrt() + (0.5 * r2 + sum) / df + 0.5
            }
            _ => unreachable!("function id validated in new()"),
        }
    }
}

fn ellipsoid_sum(z: &Array1<f64>) -> f64 {
    let d = z.len() as f64;
    z.iter()
        .enumerate()
        .map(|(i, &v)| 10.0f64.powf(6.0 * i as f64 / (d - 1.0)) * v * v)
        .sum()
}

fn rastrigin_sum(z: &Array1<f64>) -> f64 {
    let d = z.len() as f64;
    let cos_sum: f64 = z.iter().map(|&v| (2.0 * std::f64::consts::PI * v).cos()).sum();
    10.0 * (d - cos_sum) + z.dot(z)
}

fn rosenbrock_sum(z: &Array1<f64>) -> f64 {
    let mut sum = 0.0;
    for i in 0..z.len() - 1 {
        sum += 100.0 * (z[i] * z[i] - z[i + 1]).powi(2) + (z[i] - 1.0).powi(2);
    }
    sum
}

/// Build an ordered suite: functions in the given order, instances nested
/// within each function.
pub fn suite(functions: &[u32], instances: &[u32], dimension: usize) -> Result<Vec<ProblemInstance>> {
    let mut out = Vec::with_capacity(functions.len() * instances.len());
    for &f in functions {
        for &i in instances {
            out.push(ProblemInstance::new(f, i, dimension)?);
        }
    }
    Ok(out)
}

/// The core suite: functions 1..=24, instances 1..=5.
pub fn default_suite(dimension: usize) -> Result<Vec<ProblemInstance>> {
    let functions: Vec<u32> = CORE_FUNCTIONS.collect();
    let instances: Vec<u32> = (1..=5).collect();
    suite(&functions, &instances, dimension)
}
