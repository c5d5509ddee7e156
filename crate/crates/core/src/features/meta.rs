//! Meta-model features: adjusted fits of linear and quadratic regression
//! models to the sampled fitness surface.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::linalg;
use crate::sampling::Sample;

#[derive(Debug, Clone, Copy)]
pub struct MetaFeatures {
    pub lin_adj_r2: f64,
    pub lin_intercept: f64,
    pub lin_coef_min: f64,
    pub lin_coef_max: f64,
    pub lin_coef_max_by_min: f64,
    pub lin_interact_adj_r2: f64,
    pub quad_adj_r2: f64,
    pub quad_cond: f64,
    pub quad_interact_adj_r2: f64,
}

impl MetaFeatures {
    pub fn flatten(&self) -> [f64; 9] {
        [
            self.lin_adj_r2,
            self.lin_intercept,
            self.lin_coef_min,
            self.lin_coef_max,
            self.lin_coef_max_by_min,
            self.lin_interact_adj_r2,
            self.quad_adj_r2,
            self.quad_cond,
            self.quad_interact_adj_r2,
        ]
    }
}

enum Model {
    Linear,
    LinearInteractions,
    Quadratic,
    QuadraticInteractions,
}

fn model_name(model: &Model) -> &'static str {
    match model {
        Model::Linear => "linear",
        Model::LinearInteractions => "linear with interactions",
        Model::Quadratic => "quadratic",
        Model::QuadraticInteractions => "quadratic with interactions",
    }
}

fn design_matrix(points: ndarray::ArrayView2<'_, f64>, model: &Model) -> Array2<f64> {
    let (n, d) = (points.nrows(), points.ncols());
    let p = match model {
        Model::Linear => 1 + d,
        Model::LinearInteractions => 1 + d + d * (d - 1) / 2,
        Model::Quadratic => 1 + 2 * d,
        Model::QuadraticInteractions => 1 + 2 * d + d * (d - 1) / 2,
    };
    let mut x = Array2::<f64>::zeros((n, p));
    for r in 0..n {
        let mut c = 0;
        x[[r, c]] = 1.0;
        c += 1;
        for j in 0..d {
            x[[r, c]] = points[[r, j]];
            c += 1;
        }
        if matches!(model, Model::Quadratic | Model::QuadraticInteractions) {
            for j in 0..d {
                x[[r, c]] = points[[r, j]] * points[[r, j]];
                c += 1;
            }
        }
        if matches!(model, Model::LinearInteractions | Model::QuadraticInteractions) {
            for j in 0..d {
                for k in j + 1..d {
                    x[[r, c]] = points[[r, j]] * points[[r, k]];
                    c += 1;
                }
            }
        }
    }
    x
}

struct Fit {
    coefficients: Array1<f64>,
    adj_r2: f64,
}

fn fit_model(sample: &Sample, model: Model) -> Result<Fit> {
    let x = design_matrix(sample.points(), &model);
    let (n, p) = (x.nrows(), x.ncols());
    if n <= p {
        return Err(Error::InvalidArgument(format!(
            "{} model needs more than {p} points, got {n}",
            model_name(&model)
        )));
    }
    let y = sample.fitness();
    let y_mean = y.sum() / n as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - y_mean) * (v - y_mean)).sum();
    if ss_tot == 0.0 {
        return Err(Error::DegenerateSample(
            "constant fitness leaves model fit undefined".into(),
        ));
    }
    let beta = linalg::lstsq(x.view(), y).map_err(|err| match err {
        Error::RankDeficient(_) => Error::RankDeficient(format!(
            "{} model design matrix is rank deficient",
            model_name(&model)
        )),
        other => other,
    })?;
    let fitted = x.dot(&beta);
    let ss_res: f64 = y
        .iter()
        .zip(fitted.iter())
        .map(|(yi, fi)| (yi - fi) * (yi - fi))
        .sum();
    let r2 = 1.0 - ss_res / ss_tot;
    // The intercept does not count as a predictor.
    let predictors = (p - 1) as f64;
    let adj_r2 = 1.0 - (1.0 - r2) * (n as f64 - 1.0) / (n as f64 - predictors - 1.0);
    Ok(Fit {
        coefficients: beta,
        adj_r2,
    })
}

fn abs_min_max(values: ArrayView1<'_, f64>) -> (f64, f64) {
    let mut min = f64::INFINITY;
    let mut max: f64 = 0.0;
    for &v in values.iter() {
        let a = v.abs();
        min = min.min(a);
        max = max.max(a);
    }
    (min, max)
}

/// Compute the nine meta-model features. The sample must contain more
/// points than the largest model has coefficients.
pub fn meta_model(sample: &Sample) -> Result<MetaFeatures> {
    let d = sample.dimension();

    let lin = fit_model(sample, Model::Linear)?;
    let slopes = lin.coefficients.slice(ndarray::s![1..=d]);
    let (coef_min, coef_max) = abs_min_max(slopes);

    let lin_int = fit_model(sample, Model::LinearInteractions)?;
    let quad = fit_model(sample, Model::Quadratic)?;
    let quad_coefs = quad.coefficients.slice(ndarray::s![1 + d..=2 * d]);
    let (q_min, q_max) = abs_min_max(quad_coefs);
    if q_min == 0.0 {
        return Err(Error::DegenerateSample(
            "quadratic model has an exactly zero curvature coefficient".into(),
        ));
    }
    let quad_int = fit_model(sample, Model::QuadraticInteractions)?;

    Ok(MetaFeatures {
        lin_adj_r2: lin.adj_r2,
        lin_intercept: lin.coefficients[0],
        lin_coef_min: coef_min,
        lin_coef_max: coef_max,
        lin_coef_max_by_min: coef_max / coef_min,
        lin_interact_adj_r2: lin_int.adj_r2,
        quad_adj_r2: quad.adj_r2,
        quad_cond: q_max / q_min,
        quad_interact_adj_r2: quad_int.adj_r2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{build_design, Sampler};
    use crate::InstanceLabel;
    use approx::assert_abs_diff_eq;
    use ndarray::Array1;

    fn synthetic_sample(d: usize, n: usize, f: impl Fn(ArrayView1<'_, f64>) -> f64) -> Sample {
        let unit = crate::sampling::uniform_points(d, n, 17).unwrap();
        let points = unit.mapv(|u| -5.0 + 10.0 * u);
        let fitness = Array1::from_iter(points.rows().into_iter().map(f));
        Sample::new(points, fitness, InstanceLabel::new(1, 1)).unwrap()
    }

    #[test]
    fn exact_linear_function_is_recovered() {
        let sample = synthetic_sample(3, 200, |x| 3.0 + 2.0 * x[0] - 0.5 * x[1] + 0.25 * x[2]);
        let f = meta_model(&sample).unwrap();
        assert_abs_diff_eq!(f.lin_adj_r2, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(f.lin_intercept, 3.0, epsilon = 1e-8);
        assert_abs_diff_eq!(f.lin_coef_max, 2.0, epsilon = 1e-8);
        assert_abs_diff_eq!(f.lin_coef_min, 0.25, epsilon = 1e-8);
        assert_abs_diff_eq!(f.lin_coef_max_by_min, 8.0, epsilon = 1e-6);
    }

    #[test]
    fn quadratic_condition_measures_axis_scaling() {
        let sample = synthetic_sample(2, 150, |x| x[0] * x[0] + 10.0 * x[1] * x[1]);
        let f = meta_model(&sample).unwrap();
        assert_abs_diff_eq!(f.quad_adj_r2, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(f.quad_cond, 10.0, epsilon = 1e-6);
        // The purely quadratic surface is badly explained by a plane.
        assert!(f.lin_adj_r2 < 0.5);
    }

    #[test]
    fn interaction_terms_capture_cross_products() {
        let sample = synthetic_sample(2, 150, |x| 1.0 + x[0] * x[1]);
        let f = meta_model(&sample).unwrap();
        assert!(f.lin_adj_r2 < 0.5);
        assert_abs_diff_eq!(f.lin_interact_adj_r2, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(f.quad_interact_adj_r2, 1.0, epsilon = 1e-10);
    }

    /// Adjusted R-squared oracle computed with an independent normal
    /// equations solve on a one-dimensional regression embedded in 2-d.
    #[test]
    fn adjusted_r2_matches_normal_equations_oracle() {
        let sample = synthetic_sample(2, 120, |x| 2.0 * x[0] + 0.3 * x[1] * x[1].sin());
        let f = meta_model(&sample).unwrap();

        let n = sample.len() as f64;
        let pts = sample.points();
        let y = sample.fitness();
        // Solve the 3-coefficient system [1, x1, x2] via Cramer's rule on
        // the normal equations.
        let mut a = [[0.0f64; 3]; 3];
        let mut b = [0.0f64; 3];
        for i in 0..sample.len() {
            let row = [1.0, pts[[i, 0]], pts[[i, 1]]];
            for r in 0..3 {
                for c in 0..3 {
                    a[r][c] += row[r] * row[c];
                }
                b[r] += row[r] * y[i];
            }
        }
        let det3 = |m: &[[f64; 3]; 3]| {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        };
        let d0 = det3(&a);
        let mut beta = [0.0f64; 3];
        for k in 0..3 {
            let mut ak = a;
            for r in 0..3 {
                ak[r][k] = b[r];
            }
            beta[k] = det3(&ak) / d0;
        }
        let y_mean = y.sum() / n;
        let mut ss_res = 0.0;
        let mut ss_tot = 0.0;
        for i in 0..sample.len() {
            let fit = beta[0] + beta[1] * pts[[i, 0]] + beta[2] * pts[[i, 1]];
            ss_res += (y[i] - fit) * (y[i] - fit);
            ss_tot += (y[i] - y_mean) * (y[i] - y_mean);
        }
        let r2 = 1.0 - ss_res / ss_tot;
        let expect = 1.0 - (1.0 - r2) * (n - 1.0) / (n - 2.0 - 1.0);
        assert_abs_diff_eq!(f.lin_adj_r2, expect, epsilon = 1e-9);
    }

    #[test]
    fn works_on_benchmark_designs() {
        let inst = crate::problems::ProblemInstance::new(2, 1, 5).unwrap();
        let sample = build_design(&inst, Sampler::Sobol, 250, 0).unwrap();
        let f = meta_model(&sample).unwrap();
        for v in f.flatten() {
            assert!(v.is_finite());
        }
        // An ellipsoid is close to quadratic; the quadratic model should
        // explain far more variance than the linear one.
        assert!(f.quad_adj_r2 > f.lin_adj_r2);
    }

    #[test]
    fn rejects_undersized_samples() {
        let unit = crate::sampling::uniform_points(5, 20, 3).unwrap();
        let points = unit.mapv(|u| -5.0 + 10.0 * u);
        let fitness = Array1::from_iter((0..20).map(|i| i as f64));
        let sample = Sample::new(points, fitness, InstanceLabel::new(1, 1)).unwrap();
        assert!(matches!(meta_model(&sample), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn constant_fitness_is_degenerate() {
        let unit = crate::sampling::uniform_points(2, 100, 3).unwrap();
        let points = unit.mapv(|u| -5.0 + 10.0 * u);
        let fitness = Array1::from_elem(100, 1.0);
        let sample = Sample::new(points, fitness, InstanceLabel::new(1, 1)).unwrap();
        assert!(matches!(
            meta_model(&sample),
            Err(Error::DegenerateSample(_))
        ));
    }
}
