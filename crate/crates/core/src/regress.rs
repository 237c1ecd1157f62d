//! Least-squares machinery: datasets, standardization, the greedy forward
//! path and exact reference solvers.

use log::warn;

use crate::error::{Error, Result};
use crate::scalar::{axpy_sub, dot, mean, norm_sq, Scalar};

/// Response plus named candidate columns (stored column-major).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    y: Vec<T>,
    columns: Vec<Vec<T>>,
    names: Vec<String>,
    intercept: bool,
    standardized: bool,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(y: Vec<T>, columns: Vec<Vec<T>>, names: Vec<String>, intercept: bool) -> Result<Self> {
        let n = y.len();
        if n < 2 {
            return Err(Error::InvalidDataset(format!("need at least 2 observations, got {n}")));
        }
        if columns.is_empty() {
            return Err(Error::InvalidDataset("no candidate columns".into()));
        }
        if names.len() != columns.len() {
            return Err(Error::InvalidDataset(format!(
                "{} names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset("response has non-finite values".into()));
        }
        for (col, name) in columns.iter().zip(&names) {
            if col.len() != n {
                return Err(Error::InvalidDataset(format!(
                    "column `{name}` has {} rows, response has {n}",
                    col.len()
                )));
            }
            if col.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidDataset(format!("column `{name}` has non-finite values")));
            }
            if col.iter().all(|v| v.is_zero()) {
                return Err(Error::InvalidDataset(format!("column `{name}` is identically zero")));
            }
        }
        Ok(Self { y, columns, names, intercept, standardized: false })
    }

    /// Same as [`Dataset::new`] with generated names `x1..xm`.
    pub fn unnamed(y: Vec<T>, columns: Vec<Vec<T>>, intercept: bool) -> Result<Self> {
        let names = (1..=columns.len()).map(|j| format!("x{j}")).collect();
        Self::new(y, columns, names, intercept)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn m(&self) -> usize {
        self.columns.len()
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    pub fn column(&self, j: usize) -> &[T] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<T>] {
        &self.columns
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn intercept(&self) -> bool {
        self.intercept
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    pub fn with_intercept(mut self, intercept: bool) -> Self {
        self.intercept = intercept;
        self
    }

    pub fn with_response(&self, y: Vec<T>) -> Result<Self> {
        if y.len() != self.n() {
            return Err(Error::InvalidDataset(format!(
                "response has {} rows, design has {}",
                y.len(),
                self.n()
            )));
        }
        let mut out = self.clone();
        out.y = y;
        out.standardized = false;
        Ok(out)
    }

    /// Columns centred to mean 0 and scaled to unit Euclidean length; the
    /// response is centred.
    pub fn standardize(&self) -> Result<Self> {
        let mut columns = Vec::with_capacity(self.m());
        for (col, name) in self.columns.iter().zip(&self.names) {
            let mu = mean(col);
            let centred: Vec<T> = col.iter().map(|&v| v - mu).collect();
            let len = norm_sq(&centred).sqrt();
            let scale = col.iter().fold(T::zero(), |a, v| a.max(v.abs()));
            let n = T::from_usize_exact(col.len());
            if len <= T::epsilon() * T::c(64.0) * scale * n.sqrt() {
                return Err(Error::DegenerateColumn(name.clone()));
            }
            columns.push(centred.into_iter().map(|v| v / len).collect());
        }
        let mu = mean(&self.y);
        Ok(Self {
            y: self.y.iter().map(|&v| v - mu).collect(),
            columns,
            names: self.names.clone(),
            intercept: self.intercept,
            standardized: true,
        })
    }

    /// Largest admissible forward-path length: `min(m, n - 1 - [intercept])`.
    pub fn max_path_len(&self) -> usize {
        self.m().min(self.n().saturating_sub(1 + usize::from(self.intercept)))
    }
}

/// How σ² enters the standardized coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sigma2Mode<T> {
    Known(T),
    /// `RSS_full / (n - m - [intercept])`.
    FullModel,
}

/// Greedy forward-selection path.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardPath<T> {
    /// Column indices in entry order.
    pub entered: Vec<usize>,
    /// `RSS_0 ..= RSS_K`.
    pub rss: Vec<T>,
    /// `t²_k = (RSS_{k-1} - RSS_k) / σ²` for `k = 1..=K`.
    pub tsq: Vec<T>,
    pub sigma2: T,
    pub sigma2_source: Sigma2Mode<T>,
    pub intercept: bool,
    /// Candidate pool size of the dataset the path was built from.
    pub m: usize,
    /// Orthonormal basis: entry `k` spans column `entered[k]` after removing
    /// the intercept and all earlier entries.
    pub basis: Vec<Vec<T>>,
}

impl<T: Scalar> ForwardPath<T> {
    pub fn len(&self) -> usize {
        self.entered.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entered.is_empty()
    }
}

/// Build the forward path: each step enters the column with the largest RSS
/// reduction given the current model (ties to the lowest index).
///
/// Candidates are kept residualized against the model, so a step costs
/// O(n·m). The path stops early once no candidate reduces RSS by more than
/// `1e-12·RSS_0`.
pub fn forward_path<T: Scalar>(ds: &Dataset<T>, sigma2: Sigma2Mode<T>, kmax: usize) -> Result<ForwardPath<T>> {
    if !(ds.is_standardized() || ds.intercept()) {
        return Err(Error::InvalidDataset(
            "forward path needs a standardized or intercept-forced dataset".into(),
        ));
    }
    let limit = ds.max_path_len();
    if kmax == 0 || kmax > limit {
        return Err(Error::KmaxOutOfRange { kmax, limit });
    }
    let sigma2_value = match sigma2 {
        Sigma2Mode::Known(v) => v,
        Sigma2Mode::FullModel => estimate_sigma2(ds)?,
    };
    if !(sigma2_value > T::zero()) || !sigma2_value.is_finite() {
        return Err(Error::InvalidDataset(format!("σ² must be positive, got {sigma2_value}")));
    }

    let centre = |v: &[T]| -> Vec<T> {
        if ds.intercept() {
            let mu = mean(v);
            v.iter().map(|&x| x - mu).collect()
        } else {
            v.to_vec()
        }
    };
    let mut resid = centre(ds.y());
    let mut cand: Vec<Vec<T>> = ds.columns().iter().map(|c| centre(c)).collect();
    let base_norm: Vec<T> = cand.iter().map(|c| norm_sq(c)).collect();
    let mut active = vec![true; ds.m()];

    let rss0 = norm_sq(&resid);
    let floor = T::c(1e-12) * rss0;
    let collinear = T::c(1e-10);
    let mut path = ForwardPath {
        entered: Vec::with_capacity(kmax),
        rss: vec![rss0],
        tsq: Vec::with_capacity(kmax),
        sigma2: sigma2_value,
        sigma2_source: sigma2,
        intercept: ds.intercept(),
        m: ds.m(),
        basis: Vec::with_capacity(kmax),
    };

    while path.len() < kmax {
        let mut best: Option<(usize, T)> = None;
        for j in 0..cand.len() {
            if !active[j] {
                continue;
            }
            let nn = norm_sq(&cand[j]);
            if nn <= collinear * base_norm[j] {
                continue;
            }
            let c = dot(&cand[j], &resid);
            let drop = c * c / nn;
            if best.is_none_or(|(_, b)| drop > b) {
                best = Some((j, drop));
            }
        }
        let Some((j, drop)) = best else { break };
        if drop <= floor {
            break;
        }
        let mut q = std::mem::take(&mut cand[j]);
        active[j] = false;
        for b in &path.basis {
            let c = dot(b, &q);
            axpy_sub(&mut q, c, b);
        }
        let len = norm_sq(&q).sqrt();
        q.iter_mut().for_each(|v| *v = *v / len);

        let c = dot(&q, &resid);
        axpy_sub(&mut resid, c, &q);
        for (k, col) in cand.iter_mut().enumerate() {
            if active[k] {
                let c = dot(&q, col);
                axpy_sub(col, c, &q);
            }
        }
        let prev = *path.rss.last().unwrap();
        let rss = norm_sq(&resid).min(prev);
        path.tsq.push((prev - rss) / sigma2_value);
        path.rss.push(rss);
        path.entered.push(j);
        path.basis.push(q);
    }
    Ok(path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquaresFit<T> {
    pub intercept: Option<T>,
    /// One coefficient per requested column, in request order.
    pub coefficients: Vec<T>,
    pub rss: T,
}

/// Exact least-squares fit on `subset` (plus the intercept when forced),
/// by Householder QR.
pub fn least_squares<T: Scalar>(ds: &Dataset<T>, subset: &[usize]) -> Result<LeastSquaresFit<T>> {
    let mut design: Vec<Vec<T>> = Vec::with_capacity(subset.len() + 1);
    if ds.intercept() {
        design.push(vec![T::one(); ds.n()]);
    }
    for &j in subset {
        if j >= ds.m() {
            return Err(Error::UnknownColumn(format!("index {j}")));
        }
        design.push(ds.column(j).to_vec());
    }
    if design.len() >= ds.n() {
        return Err(Error::InsufficientDf { n: ds.n(), params: design.len() });
    }
    let (mut coef, rss) = householder_lstsq(&design, ds.y())?;
    let intercept = if ds.intercept() { Some(coef.remove(0)) } else { None };
    Ok(LeastSquaresFit { intercept, coefficients: coef, rss })
}

/// `σ̂² = RSS_full / (n - m - [intercept])`.
pub fn estimate_sigma2<T: Scalar>(ds: &Dataset<T>) -> Result<T> {
    let params = ds.m() + usize::from(ds.intercept());
    if ds.n() <= params {
        return Err(Error::InsufficientDf { n: ds.n(), params });
    }
    let all: Vec<usize> = (0..ds.m()).collect();
    let fit = least_squares(ds, &all)?;
    let df = T::from_usize_exact(ds.n() - params);
    let s2 = fit.rss / df;
    let scale = norm_sq(ds.y());
    if fit.rss <= T::epsilon() * T::c(1e3) * scale {
        warn!("full model fits the response exactly; σ² estimate is {s2}");
    }
    Ok(s2)
}

/// Least squares of `y` on the given columns: returns coefficients and RSS.
/// Fails with [`Error::Singular`] on (numerical) rank deficiency.
pub(crate) fn householder_lstsq<T: Scalar>(columns: &[Vec<T>], y: &[T]) -> Result<(Vec<T>, T)> {
    let p = columns.len();
    let mut a: Vec<Vec<T>> = columns.to_vec();
    let mut b = y.to_vec();
    if p == 0 {
        return Ok((Vec::new(), norm_sq(&b)));
    }
    let n = b.len();
    let scale = a.iter().map(|c| norm_sq(c).sqrt()).fold(T::zero(), T::max);
    let tol = T::c(1e-10) * scale;
    let mut diag = vec![T::zero(); p];
    for k in 0..p {
        let tail = norm_sq(&a[k][k..]).sqrt();
        if tail <= tol {
            return Err(Error::Singular);
        }
        let alpha = if a[k][k] > T::zero() { -tail } else { tail };
        // v = x - alpha e1, stored in a[k][k..]
        a[k][k] = a[k][k] - alpha;
        let vnorm = norm_sq(&a[k][k..]);
        diag[k] = alpha;
        let (head, rest) = a.split_at_mut(k + 1);
        let v = &head[k][k..];
        for col in rest.iter_mut() {
            let f = T::c(2.0) * dot(v, &col[k..]) / vnorm;
            axpy_sub(&mut col[k..], f, v);
        }
        let f = T::c(2.0) * dot(v, &b[k..]) / vnorm;
        axpy_sub(&mut b[k..], f, v);
    }
    let mut coef = vec![T::zero(); p];
    for k in (0..p).rev() {
        let mut s = b[k];
        for j in k + 1..p {
            s = s - a[j][k] * coef[j];
        }
        coef[k] = s / diag[k];
    }
    let rss = if n > p { norm_sq(&b[p..]) } else { T::zero() };
    Ok((coef, rss))
}
