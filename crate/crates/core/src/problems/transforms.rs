//! Shared coordinate transformations for the benchmark functions.

use ndarray::{Array1, ArrayView1};

/// Oscillation transform: introduces irregularity while keeping the sign
/// and rough magnitude of each coordinate.
pub fn osz_scalar(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let xhat = x.abs().ln();
    let (c1, c2) = if x > 0.0 { (10.0, 7.9) } else { (5.5, 3.1) };
    x.signum() * (xhat + 0.049 * ((c1 * xhat).sin() + (c2 * xhat).sin())).exp()
}

pub fn osz(x: &mut Array1<f64>) {
    x.mapv_inplace(osz_scalar);
}

/// Asymmetry transform: raises positive coordinates to an index-dependent
/// power greater than one, leaving negative coordinates untouched.
pub fn asy(x: &mut Array1<f64>, beta: f64) {
    let d = x.len();
    for (i, v) in x.iter_mut().enumerate() {
        if *v > 0.0 {
            let expo = 1.0 + beta * (i as f64 / (d - 1) as f64) * v.sqrt();
            *v = v.powf(expo);
        }
    }
}

/// Diagonal of the conditioning matrix `Lambda^alpha`:
/// entry i is `alpha^(0.5 * i / (d-1))` for 0-based i.
pub fn lambda_diag(alpha: f64, dim: usize) -> Array1<f64> {
    Array1::from_iter((0..dim).map(|i| alpha.powf(0.5 * i as f64 / (dim - 1) as f64)))
}

pub fn scale_by(x: &mut Array1<f64>, diag: &Array1<f64>) {
    for (v, s) in x.iter_mut().zip(diag.iter()) {
        *v *= s;
    }
}

/// Boundary penalty: quadratic growth outside the box `[-5, 5]^d`.
pub fn boundary_penalty(x: ArrayView1<'_, f64>) -> f64 {
    x.iter()
        .map(|&v| {
            let excess = (v.abs() - 5.0).max(0.0);
            excess * excess
        })
        .sum()
}
