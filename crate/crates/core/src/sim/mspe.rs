use crate::error::Result;
use crate::regress::{householder_lstsq, ForwardPath};

fn mean_response(columns: &[Vec<f64>], beta: &[f64]) -> Vec<f64> {
    let n = columns.first().map_or(0, Vec::len);
    let mut mu = vec![0.0; n];
    for (col, &b) in columns.iter().zip(beta) {
        if b != 0.0 {
            mu.iter_mut().zip(col).for_each(|(acc, &x)| *acc += b * x);
        }
    }
    mu
}

/// `σ² k + ‖(I - H₁) X β‖²`, with `H₁` the projection on the `subset`
/// columns (plus the constant column when `intercept`) and `k` the number of
/// fitted parameters.
pub fn theoretical_mspe(columns: &[Vec<f64>], beta: &[f64], subset: &[usize], sigma2: f64, intercept: bool) -> Result<f64> {
    let mu = mean_response(columns, beta);
    let mut fitted: Vec<Vec<f64>> = Vec::with_capacity(subset.len() + 1);
    if intercept {
        fitted.push(vec![1.0; mu.len()]);
    }
    fitted.extend(subset.iter().map(|&j| columns[j].clone()));
    let (_, bias) = householder_lstsq(&fitted, &mu)?;
    Ok(sigma2 * fitted.len() as f64 + bias)
}

/// Theoretical MSPE of every prefix `0..=K` of `path`, for the true mean
/// `mu = Xβ`. Uses the path's orthonormal basis, so the whole curve costs
/// O(nK).
pub fn mspe_along_path(path: &ForwardPath<f64>, mu: &[f64], sigma2: f64) -> Vec<f64> {
    let mut r: Vec<f64> = if path.intercept {
        let m = mu.iter().sum::<f64>() / mu.len() as f64;
        mu.iter().map(|v| v - m).collect()
    } else {
        mu.to_vec()
    };
    let base = usize::from(path.intercept) as f64;
    let mut bias: f64 = r.iter().map(|v| v * v).sum();
    let mut out = Vec::with_capacity(path.len() + 1);
    out.push(sigma2 * base + bias);
    for (k, q) in path.basis.iter().enumerate() {
        let c: f64 = q.iter().zip(&r).map(|(a, b)| a * b).sum();
        r.iter_mut().zip(q).for_each(|(v, &qi)| *v -= c * qi);
        bias = r.iter().map(|v| v * v).sum::<f64>().min(bias);
        out.push(sigma2 * (base + (k + 1) as f64) + bias);
    }
    out
}

/// Position of the smallest value, first on ties.
pub(crate) fn argmin(values: &[f64]) -> (usize, f64) {
    values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bk, bv), (k, &v)| if v < bv { (k, v) } else { (bk, bv) })
}

/// The random oracle: the prefix of `path` with the smallest theoretical
/// MSPE, returned as (number of entered variables, MSPE).
pub fn random_oracle(path: &ForwardPath<f64>, columns: &[Vec<f64>], beta: &[f64], sigma2: f64) -> (usize, f64) {
    argmin(&mspe_along_path(path, &mean_response(columns, beta), sigma2))
}
