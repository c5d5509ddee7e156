//! Information content features: entropy of fitness change symbols along a
//! nearest-neighbor tour through the design, swept over a sensitivity
//! threshold.

use log::warn;

use crate::error::{Error, Result};
use crate::sampling::Sample;

use super::stats::euclidean;

/// Threshold below which the entropy curve counts as settled.
const SETTLE_LEVEL: f64 = 0.05;
/// Fraction of the initial partial information defining the sensitivity
/// half-life.
const RATIO_LEVEL: f64 = 0.5;

#[derive(Debug, Clone, Copy)]
pub struct IcFeatures {
    /// Maximum of the symbol-pair entropy over the threshold grid.
    pub h_max: f64,
    /// Smallest grid threshold from which the entropy stays below 0.05.
    pub eps_s: f64,
    /// Threshold at which the entropy attains its maximum.
    pub eps_max: f64,
    /// Largest threshold retaining more than half the initial partial
    /// information.
    pub eps_ratio: f64,
    /// Partial information at threshold zero.
    pub m0: f64,
}

impl IcFeatures {
    pub fn flatten(&self) -> [f64; 5] {
        [self.h_max, self.eps_s, self.eps_max, self.eps_ratio, self.m0]
    }
}

/// Threshold grid: zero plus 100 logarithmically spaced values covering
/// 1e-5 to 1e15.
fn threshold_grid() -> Vec<f64> {
    let mut grid = Vec::with_capacity(101);
    grid.push(0.0);
    for k in 0..100 {
        let exp = -5.0 + 20.0 * k as f64 / 99.0;
        grid.push(10.0f64.powf(exp));
    }
    grid
}

/// Greedy nearest-neighbor tour starting at the first point; distance ties
/// go to the smallest index.
fn nearest_neighbor_tour(sample: &Sample) -> Vec<usize> {
    let n = sample.len();
    let points = sample.points();
    let mut visited = vec![false; n];
    let mut tour = Vec::with_capacity(n);
    let mut current = 0usize;
    visited[0] = true;
    tour.push(0);
    for _ in 1..n {
        let mut best = usize::MAX;
        let mut best_dist = f64::INFINITY;
        for (j, &seen) in visited.iter().enumerate() {
            if seen {
                continue;
            }
            let d = euclidean(points.row(current), points.row(j));
            if d < best_dist {
                best_dist = d;
                best = j;
            }
        }
        visited[best] = true;
        tour.push(best);
        current = best;
    }
    tour
}

/// Fitness slope along each tour step; steps between coincident points are
/// dropped because their slope is undefined.
fn tour_slopes(sample: &Sample, tour: &[usize]) -> Vec<f64> {
    let points = sample.points();
    let fitness = sample.fitness();
    let mut slopes = Vec::with_capacity(tour.len() - 1);
    let mut skipped = 0usize;
    for w in tour.windows(2) {
        let d = euclidean(points.row(w[0]), points.row(w[1]));
        if d == 0.0 {
            skipped += 1;
            continue;
        }
        slopes.push((fitness[w[1]] - fitness[w[0]]) / d);
    }
    if skipped > 0 {
        warn!("information content: skipped {skipped} zero-length tour step(s)");
    }
    slopes
}

fn symbolize(slopes: &[f64], eps: f64) -> Vec<i8> {
    slopes
        .iter()
        .map(|&s| {
            if s > eps {
                1
            } else if s < -eps {
                -1
            } else {
                0
            }
        })
        .collect()
}

/// Entropy of unequal consecutive symbol pairs, in base 6 (the number of
/// ordered unequal pairs over three symbols).
fn pair_entropy(symbols: &[i8]) -> f64 {
    if symbols.len() < 2 {
        return 0.0;
    }
    let mut counts = [[0usize; 3]; 3];
    for w in symbols.windows(2) {
        counts[(w[0] + 1) as usize][(w[1] + 1) as usize] += 1;
    }
    let total = (symbols.len() - 1) as f64;
    let mut h = 0.0;
    for (a, row) in counts.iter().enumerate() {
        for (b, &count) in row.iter().enumerate() {
            if a == b {
                continue;
            }
            let p = count as f64 / total;
            if p > 0.0 {
                h -= p * p.log(6.0);
            }
        }
    }
    h
}

/// Partial information: the number of alternating sign blocks left after
/// dropping zeros, relative to the number of design steps.
fn partial_information(symbols: &[i8], steps: usize) -> f64 {
    let mut blocks = 0usize;
    let mut last = 0i8;
    for &s in symbols {
        if s == 0 {
            continue;
        }
        if s != last {
            blocks += 1;
            last = s;
        }
    }
    blocks as f64 / steps as f64
}

/// Compute the five information content features of a sample of at least
/// 100 points.
pub fn information_content(sample: &Sample) -> Result<IcFeatures> {
    let n = sample.len();
    if n < 100 {
        return Err(Error::InvalidArgument(format!(
            "information content needs at least 100 points, got {n}"
        )));
    }
    let tour = nearest_neighbor_tour(sample);
    let slopes = tour_slopes(sample, &tour);
    if slopes.len() < 2 {
        return Err(Error::DegenerateSample(
            "tour has too few usable steps for symbol statistics".into(),
        ));
    }

    let grid = threshold_grid();
    let steps = n - 1;
    let mut entropies = Vec::with_capacity(grid.len());
    let mut partials = Vec::with_capacity(grid.len());
    for &eps in &grid {
        let symbols = symbolize(&slopes, eps);
        entropies.push(pair_entropy(&symbols));
        partials.push(partial_information(&symbols, steps));
    }

    let mut h_max = 0.0;
    let mut eps_max = grid[0];
    for (i, &h) in entropies.iter().enumerate() {
        if h > h_max {
            h_max = h;
            eps_max = grid[i];
        }
    }

    // Scan from the top: the settling threshold is the first grid point
    // after which the entropy never rises back above the level.
    let mut eps_s = grid[grid.len() - 1];
    for i in (0..grid.len()).rev() {
        if entropies[i] < SETTLE_LEVEL {
            eps_s = grid[i];
        } else {
            break;
        }
    }
    if entropies[grid.len() - 1] >= SETTLE_LEVEL {
        warn!("information content: entropy never settles below {SETTLE_LEVEL}");
    }

    let m0 = partials[0];
    let mut eps_ratio = 0.0;
    if m0 > 0.0 {
        for (i, &m) in partials.iter().enumerate() {
            if m > RATIO_LEVEL * m0 {
                eps_ratio = grid[i];
            }
        }
    } else {
        warn!("information content: zero initial partial information");
    }

    Ok(IcFeatures {
        h_max,
        eps_s,
        eps_max,
        eps_ratio,
        m0,
    })
}
