//! Design generation: Sobol and uniform samplers on the unit cube, plus
//! evaluated designs (`Sample`) on problem instances.

mod sobol;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::{ProblemInstance, DOMAIN};
use crate::InstanceLabel;
pub use sobol::{SobolSequence, MAX_DIMENSION};

/// Which low-level point generator to use for designs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampler {
    Sobol,
    Uniform,
}

impl std::str::FromStr for Sampler {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sobol" => Ok(Sampler::Sobol),
            "uniform" => Ok(Sampler::Uniform),
            other => Err(Error::Usage(format!(
                "unknown sampler '{other}' (expected 'sobol' or 'uniform')"
            ))),
        }
    }
}

impl std::fmt::Display for Sampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Sampler::Sobol => write!(f, "sobol"),
            Sampler::Uniform => write!(f, "uniform"),
        }
    }
}

fn check_design_shape(dimension: usize, count: usize) -> Result<()> {
    if !(2..=MAX_DIMENSION).contains(&dimension) {
        return Err(Error::UnsupportedDimension(format!(
            "designs support dimensions 2..={MAX_DIMENSION}, got {dimension}"
        )));
    }
    if count == 0 {
        return Err(Error::InvalidArgument("design needs at least one point".into()));
    }
    Ok(())
}

/// `count` Sobol points in `[0, 1)^dimension`, starting at sequence index
/// `seed` (the seed acts as a skip offset, so disjoint seed ranges give
/// disjoint stretches of one common sequence).
pub fn sobol_points(dimension: usize, count: usize, seed: u64) -> Result<Array2<f64>> {
    check_design_shape(dimension, count)?;
    let last = seed.checked_add(count as u64 - 1).ok_or_else(|| {
        Error::InvalidArgument("sobol index overflows the sequence".into())
    })?;
    if last > u32::MAX as u64 {
        return Err(Error::InvalidArgument(format!(
            "sobol sequence index {last} exceeds the 2^32 point supply"
        )));
    }
    let seq = SobolSequence::new(dimension)?;
    let mut out = Array2::<f64>::zeros((count, dimension));
    for i in 0..count {
        let p = seq.point((seed + i as u64) as u32);
        for (j, v) in p.into_iter().enumerate() {
            out[[i, j]] = v;
        }
    }
    Ok(out)
}

/// `count` independent uniform points in `[0, 1)^dimension` from a ChaCha8
/// stream seeded with `seed`.
pub fn uniform_points(dimension: usize, count: usize, seed: u64) -> Result<Array2<f64>> {
    check_design_shape(dimension, count)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Array2::<f64>::zeros((count, dimension));
    for i in 0..count {
        for j in 0..dimension {
            out[[i, j]] = rng.gen_range(0.0..1.0);
        }
    }
    Ok(out)
}

/// One evaluated design: points inside the problem domain together with
/// their fitness values and the owning instance's label.
#[derive(Debug, Clone)]
pub struct Sample {
    points: Array2<f64>,
    fitness: Array1<f64>,
    label: InstanceLabel,
}

impl Sample {
    /// Wrap a raw design. Points must lie inside the search domain and all
    /// fitness values must be finite.
    pub fn new(points: Array2<f64>, fitness: Array1<f64>, label: InstanceLabel) -> Result<Self> {
        if points.nrows() != fitness.len() {
            return Err(Error::InvalidArgument(format!(
                "{} points but {} fitness values",
                points.nrows(),
                fitness.len()
            )));
        }
        if points.nrows() == 0 {
            return Err(Error::InvalidArgument("sample is empty".into()));
        }
        if points.iter().any(|v| !(DOMAIN.0..=DOMAIN.1).contains(v)) {
            return Err(Error::InvalidArgument(
                "sample points leave the search domain".into(),
            ));
        }
        if fitness.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "sample contains non-finite fitness values".into(),
            ));
        }
        Ok(Self {
            points,
            fitness,
            label,
        })
    }

    pub fn points(&self) -> ArrayView2<'_, f64> {
        self.points.view()
    }

    pub fn fitness(&self) -> ArrayView1<'_, f64> {
        self.fitness.view()
    }

    pub fn label(&self) -> InstanceLabel {
        self.label
    }

    pub fn len(&self) -> usize {
        self.fitness.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fitness.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.points.ncols()
    }
}

/// Draw a design with the given sampler, scale it into the search domain
/// and evaluate it on the instance.
pub fn build_design(
    instance: &ProblemInstance,
    sampler: Sampler,
    count: usize,
    seed: u64,
) -> Result<Sample> {
    let dim = instance.dimension();
    let unit = match sampler {
        Sampler::Sobol => sobol_points(dim, count, seed)?,
        Sampler::Uniform => uniform_points(dim, count, seed)?,
    };
    let span = DOMAIN.1 - DOMAIN.0;
    let points = unit.mapv(|u| DOMAIN.0 + span * u);
    let fitness = instance.evaluate_rows(points.view())?;
    Sample::new(points, fitness, instance.label())
}
