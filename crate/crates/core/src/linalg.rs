//! Dense linear algebra kernels used across the crate.
//!
//! Everything here is written against `ndarray` with plain `f64` loops; the
//! matrices involved are small (at most a few thousand rows and a few dozen
//! columns), so clarity and determinism win over blocked performance tricks.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// Result of a thin singular value decomposition `X = U diag(s) V^T`.
///
/// `u` has the shape `rows x r` and `v` the shape `cols x r`, where
/// `r = min(rows, cols)`. Singular values are sorted in descending order,
/// and each column of `v` is oriented so that its largest-magnitude entry
/// is positive (ties broken by the first such entry).
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Array2<f64>,
    pub singular_values: Array1<f64>,
    pub v: Array2<f64>,
}

const JACOBI_EPS: f64 = 1e-14;
const MAX_SWEEPS: usize = 60;

/// Thin SVD via one-sided Jacobi rotations.
///
/// Columns of a working copy of `X` are rotated pairwise until all pairs are
/// numerically orthogonal; the rotations accumulate into `V`, the column
/// norms become the singular values and the normalized columns become `U`.
/// Matrices with more columns than rows are handled by decomposing the
/// transpose and swapping the factors.
pub fn svd(x: ArrayView2<'_, f64>) -> Result<Svd> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::InvalidArgument(
            "svd requires a non-empty matrix".into(),
        ));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "svd requires finite matrix entries".into(),
        ));
    }
    let mut out = if x.nrows() >= x.ncols() {
        svd_tall(x)?
    } else {
        let t = svd_tall(x.t())?;
        Svd {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        }
    };
    fix_signs(&mut out.u, &mut out.v);
    Ok(out)
}

fn svd_tall(x: ArrayView2<'_, f64>) -> Result<Svd> {
    let (m, n) = (x.nrows(), x.ncols());
    let mut a = x.to_owned();
    let mut v = Array2::<f64>::eye(n);

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for i in 0..m {
                    let ap = a[[i, p]];
                    let aq = a[[i, q]];
                    alpha += ap * ap;
                    beta += aq * aq;
                    gamma += ap * aq;
                }
                if gamma.abs() <= JACOBI_EPS * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let ap = a[[i, p]];
                    let aq = a[[i, q]];
                    a[[i, p]] = c * ap - s * aq;
                    a[[i, q]] = s * ap + c * aq;
                }
                for i in 0..n {
                    let vp = v[[i, p]];
                    let vq = v[[i, q]];
                    v[[i, p]] = c * vp - s * vq;
                    v[[i, q]] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numerical(format!(
            "jacobi svd did not converge within {MAX_SWEEPS} sweeps"
        )));
    }

    let norms: Vec<f64> = (0..n)
        .map(|j| a.column(j).iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap().then(i.cmp(&j)));

    let mut u = Array2::<f64>::zeros((m, n));
    let mut v_sorted = Array2::<f64>::zeros((n, n));
    let mut sigma = Array1::<f64>::zeros(n);
    for (dst, &src) in order.iter().enumerate() {
        sigma[dst] = norms[src];
        if norms[src] > 0.0 {
            let inv = 1.0 / norms[src];
            for i in 0..m {
                u[[i, dst]] = a[[i, src]] * inv;
            }
        }
        for i in 0..n {
            v_sorted[[i, dst]] = v[[i, src]];
        }
    }
    complete_zero_columns(&mut u, &sigma);

    Ok(Svd {
        u,
        singular_values: sigma,
        v: v_sorted,
    })
}

/// Replace exactly-zero columns of `u` (those whose singular value is 0)
/// with unit vectors orthogonal to all other columns, so `U` always has
/// orthonormal columns. Candidates are taken from the standard basis in
/// index order, which keeps the completion deterministic.
fn complete_zero_columns(u: &mut Array2<f64>, sigma: &Array1<f64>) {
    let (m, n) = (u.nrows(), u.ncols());
    for j in 0..n {
        if sigma[j] > 0.0 {
            continue;
        }
        let mut chosen: Option<Array1<f64>> = None;
        for cand in 0..m {
            let mut w = Array1::<f64>::zeros(m);
            w[cand] = 1.0;
            // Two Gram-Schmidt passes keep the result orthogonal to working
            // precision even when the candidate is nearly in the span.
            for _ in 0..2 {
                for k in 0..n {
                    if k == j {
                        continue;
                    }
                    let col = u.column(k);
                    let dot = w.dot(&col);
                    for i in 0..m {
                        w[i] -= dot * col[i];
                    }
                }
            }
            let norm = w.dot(&w).sqrt();
            if norm > 0.5 {
                chosen = Some(w / norm);
                break;
            }
        }
        if let Some(w) = chosen {
            for i in 0..m {
                u[[i, j]] = w[i];
            }
        }
    }
}

/// Orient each right singular vector so its largest-magnitude entry is
/// positive, negating the matching left vector to keep the product intact.
fn fix_signs(u: &mut Array2<f64>, v: &mut Array2<f64>) {
    for j in 0..v.ncols() {
        let mut best = 0usize;
        let mut best_abs = -1.0;
        for i in 0..v.nrows() {
            let a = v[[i, j]].abs();
            if a > best_abs {
                best_abs = a;
                best = i;
            }
        }
        if v[[best, j]] < 0.0 {
            for i in 0..v.nrows() {
                v[[i, j]] = -v[[i, j]];
            }
            for i in 0..u.nrows() {
                u[[i, j]] = -u[[i, j]];
            }
        }
    }
}

/// Least-squares solution of `A b = y` via Householder QR with column
/// pivoting disabled (designs here are well scaled). Returns the coefficient
/// vector; a numerically singular `R` is reported as rank deficiency.
pub fn lstsq(a: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
    let (m, n) = (a.nrows(), a.ncols());
    if y.len() != m {
        return Err(Error::InvalidArgument(format!(
            "lstsq shape mismatch: {m} rows vs {} responses",
            y.len()
        )));
    }
    if m < n {
        return Err(Error::InvalidArgument(format!(
            "lstsq is underdetermined: {m} rows for {n} coefficients"
        )));
    }
    let mut r = a.to_owned();
    let mut rhs = y.to_owned();

    for k in 0..n {
        // Householder reflector for column k.
        let mut norm = 0.0;
        for i in k..m {
            norm += r[[i, k]] * r[[i, k]];
        }
        norm = norm.sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if r[[k, k]] > 0.0 { -norm } else { norm };
        let mut v = Array1::<f64>::zeros(m - k);
        for i in k..m {
            v[i - k] = r[[i, k]];
        }
        v[0] -= alpha;
        let vnorm2 = v.dot(&v);
        if vnorm2 == 0.0 {
            continue;
        }
        for j in k..n {
            let mut dot = 0.0;
            for i in k..m {
                dot += v[i - k] * r[[i, j]];
            }
            let scale = 2.0 * dot / vnorm2;
            for i in k..m {
                r[[i, j]] -= scale * v[i - k];
            }
        }
        let mut dot = 0.0;
        for i in k..m {
            dot += v[i - k] * rhs[i];
        }
        let scale = 2.0 * dot / vnorm2;
        for i in k..m {
            rhs[i] -= scale * v[i - k];
        }
    }

    let max_diag = (0..n).map(|k| r[[k, k]].abs()).fold(0.0, f64::max);
    let tol = max_diag * (m as f64) * f64::EPSILON;
    let mut beta = Array1::<f64>::zeros(n);
    for k in (0..n).rev() {
        if r[[k, k]].abs() <= tol {
            return Err(Error::RankDeficient(format!(
                "design matrix is rank deficient at column {k}"
            )));
        }
        let mut sum = rhs[k];
        for j in k + 1..n {
            sum -= r[[k, j]] * beta[j];
        }
        beta[k] = sum / r[[k, k]];
    }
    Ok(beta)
}

/// Draw a random orthogonal matrix by QR-factorizing a square matrix of
/// standard normal draws. Modified Gram-Schmidt yields the unique Q whose R
/// factor has a nonnegative diagonal, so the result is Haar-distributed over
/// the orthogonal group and fully determined by the RNG stream.
pub fn random_orthogonal<R: rand::Rng>(dim: usize, rng: &mut R) -> Array2<f64> {
    use rand_distr::{Distribution, StandardNormal};
    let mut g = Array2::<f64>::zeros((dim, dim));
    for i in 0..dim {
        for j in 0..dim {
            g[[i, j]] = StandardNormal.sample(rng);
        }
    }
    qr_q(&g)
}

/// Q factor of a square matrix via modified Gram-Schmidt. Degenerate columns
/// (norm 0 after projection) fall back to standard basis completion, which
/// cannot occur for Gaussian input but keeps the function total.
fn qr_q(g: &Array2<f64>) -> Array2<f64> {
    let dim = g.nrows();
    let mut q = g.clone();
    let mut col_norms = vec![0.0; dim];
    for j in 0..dim {
        for k in 0..j {
            let col_k = q.column(k).to_owned();
            let dot = q.column(j).dot(&col_k);
            for i in 0..dim {
                q[[i, j]] -= dot * col_k[i];
            }
        }
        let norm = q.column(j).dot(&q.column(j)).sqrt();
        col_norms[j] = norm;
        if norm > 0.0 {
            for i in 0..dim {
                q[[i, j]] /= norm;
            }
        }
    }
    if col_norms.contains(&0.0) {
        let sigma = Array1::from_iter(col_norms.iter().cloned());
        complete_zero_columns(&mut q, &sigma);
    }
    q
}

/// Frobenius norm of a matrix.
#[cfg(test)]
pub fn frobenius_norm(x: ArrayView2<'_, f64>) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Maximum absolute deviation of `Q^T Q` from the identity.
#[cfg(test)]
pub fn orthogonality_defect(q: ArrayView2<'_, f64>) -> f64 {
    let gram = q.t().dot(&q);
    let mut worst = 0.0f64;
    for i in 0..gram.nrows() {
        for j in 0..gram.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[[i, j]] - target).abs());
        }
    }
    worst
}
