//! Brute-force cross-checks on small instances.
//!
//! Every check here recomputes a quantity along an independent route: the
//! testing procedures work on sorted p-values, the path check refits every
//! candidate subset from scratch, and the MSPE check builds the hat matrix
//! explicitly.

use std::fmt;

use rand::Rng;

use crate::error::Result;
use crate::penalty::PenaltySpec;
use crate::regress::{forward_path, least_squares, Dataset, ForwardPath, Sigma2Mode};
use crate::select::{msfdr_iterative_size, select_size, stop, PreparedMethod, StopRule};
use crate::sim::{random_oracle, theoretical_mspe};
use crate::stats::{upper_quantile, RandomSource};

/// The p-value grid of the exhaustive orthogonal suite.
pub const P_GRID: [f64; 5] = [0.001, 0.01, 0.04, 0.2, 0.6];

fn le(p: f64, alpha: f64) -> bool {
    p <= alpha * (1.0 + 1e-9)
}

fn sorted(p: &[f64]) -> Vec<f64> {
    let mut s = p.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// Multiple-stage step-down: reject `p_(1), p_(2), ...` while
/// `p_(i) ≤ iq/(m + 1 - i(1 - q))`.
pub fn step_down_msfdr(p: &[f64], q: f64) -> usize {
    let m = p.len() as f64;
    sorted(p)
        .iter()
        .enumerate()
        .take_while(|(i, &pi)| {
            let i = (*i + 1) as f64;
            le(pi, i * q / (m + 1.0 - i * (1.0 - q)))
        })
        .count()
}

fn linear_step(p: &[f64], slope: f64, step_up: bool) -> usize {
    let s = sorted(p);
    let ok = |i: usize| le(s[i], ((i + 1) as f64 * slope).min(1.0));
    if step_up {
        (0..s.len()).rev().find(|&i| ok(i)).map_or(0, |i| i + 1)
    } else {
        (0..s.len()).take_while(|&i| ok(i)).count()
    }
}

/// `max{i : p_(i) ≤ iq/m}`, or 0.
pub fn bh_step_up(p: &[f64], q: f64) -> usize {
    linear_step(p, q / p.len() as f64, true)
}

/// The two-stage procedure on p-values: a linear pass at `q' = q/(1+q)`
/// gives `r₁`; unless `r₁ ∈ {0, m}` a second pass uses slope `q'/(m - r₁)`.
pub fn two_stage(p: &[f64], q: f64, step_up: bool) -> usize {
    let m = p.len();
    let qp = q / (1.0 + q);
    let r1 = linear_step(p, qp / m as f64, step_up);
    if r1 == 0 || r1 == m {
        return r1;
    }
    linear_step(p, qp / (m - r1) as f64, step_up)
}

/// Orthonormal columns orthogonal to the constant vector: Helmert contrasts.
pub fn helmert_columns(n: usize, m: usize) -> Vec<Vec<f64>> {
    (1..=m)
        .map(|k| {
            let norm = ((k * (k + 1)) as f64).sqrt();
            (0..n)
                .map(|i| match i.cmp(&k) {
                    std::cmp::Ordering::Less => 1.0 / norm,
                    std::cmp::Ordering::Equal => -(k as f64) / norm,
                    std::cmp::Ordering::Greater => 0.0,
                })
                .collect()
        })
        .collect()
}

/// Orthonormal design (with forced intercept) whose two-sided p-values at
/// `σ² = 1` are exactly `p`.
pub fn orthogonal_instance(p: &[f64]) -> Result<Dataset<f64>> {
    let m = p.len();
    let n = m + 3;
    let cols = helmert_columns(n, m + 1);
    let mut y = vec![5.0; n];
    for (col, &pi) in cols.iter().zip(p) {
        let t = upper_quantile::<f64>(pi / 2.0)?;
        y.iter_mut().zip(col).for_each(|(v, &c)| *v += t * c);
    }
    // one unit of pure error in the spare direction
    y.iter_mut().zip(&cols[m]).for_each(|(v, &c)| *v += c);
    Dataset::unnamed(y, cols[..m].to_vec(), true)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EquivalenceReport {
    pub cases: usize,
    pub msfdr_mismatches: usize,
    pub bh_mismatches: usize,
    pub tsfdr_step_up_mismatches: usize,
    pub tsfdr_step_down_mismatches: usize,
    /// First few disagreements, for diagnostics.
    pub examples: Vec<String>,
}

impl EquivalenceReport {
    pub fn mismatches(&self) -> usize {
        self.msfdr_mismatches + self.bh_mismatches + self.tsfdr_step_up_mismatches + self.tsfdr_step_down_mismatches
    }
}

/// Every pattern of `grid` values for every `m` in `1..=max_m`: the penalized
/// selectors must agree exactly with the testing procedures.
pub fn orthogonal_equivalence(max_m: usize, grid: &[f64], q: f64) -> Result<EquivalenceReport> {
    let mut rep = EquivalenceReport::default();
    for m in 1..=max_m {
        let methods = [
            PreparedMethod::<f64>::new(PenaltySpec::msfdr(q), StopRule::FirstLocalMin, m)?,
            PreparedMethod::new(PenaltySpec::Bh { q }, StopRule::LastCrossing, m)?,
            PreparedMethod::new(PenaltySpec::Tsfdr { q }, StopRule::LastCrossing, m)?,
            PreparedMethod::new(PenaltySpec::Tsfdr { q }, StopRule::FirstLocalMin, m)?,
        ];
        let total = grid.len().pow(m as u32);
        for code in 0..total {
            let mut c = code;
            let p: Vec<f64> = (0..m)
                .map(|_| {
                    let v = grid[c % grid.len()];
                    c /= grid.len();
                    v
                })
                .collect();
            let ds = orthogonal_instance(&p)?;
            let path = forward_path(&ds, Sigma2Mode::Known(1.0), m)?;
            let got = methods.iter().map(|x| x.size(&path)).collect::<Result<Vec<_>>>()?;
            let want = [step_down_msfdr(&p, q), bh_step_up(&p, q), two_stage(&p, q, true), two_stage(&p, q, false)];
            let counters = [
                &mut rep.msfdr_mismatches,
                &mut rep.bh_mismatches,
                &mut rep.tsfdr_step_up_mismatches,
                &mut rep.tsfdr_step_down_mismatches,
            ];
            for (idx, counter) in counters.into_iter().enumerate() {
                if got[idx] != want[idx] {
                    *counter += 1;
                    if rep.examples.len() < 10 {
                        rep.examples.push(format!("check {idx}, p = {p:?}: selector {} vs procedure {}", got[idx], want[idx]));
                    }
                }
            }
            rep.cases += 1;
        }
    }
    Ok(rep)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AgreementReport {
    pub instances: usize,
    pub agree: usize,
    /// `(p-values, iterative size, step-down size)` for the disagreements.
    pub discrepancies: Vec<(Vec<f64>, usize, usize)>,
}

impl AgreementReport {
    pub fn rate(&self) -> f64 {
        self.agree as f64 / self.instances.max(1) as f64
    }
}

/// Compare the iterative p-to-enter computation with the first-local-minimum
/// stop on random orthogonal instances (p-values log-uniform on `[1e-5, 1]`).
pub fn iterative_agreement(instances: usize, m: usize, q: f64, source: RandomSource) -> Result<AgreementReport> {
    let mut rng = source.rng();
    let mut rep = AgreementReport::default();
    for _ in 0..instances {
        let p: Vec<f64> = (0..m).map(|_| 10f64.powf(-5.0 * rng.random::<f64>())).collect();
        let ds = orthogonal_instance(&p)?;
        let path = forward_path(&ds, Sigma2Mode::Known(1.0), m)?;
        let (iter, _) = msfdr_iterative_size(&path, q)?;
        let down = select_size(&path, &PenaltySpec::msfdr(q), StopRule::FirstLocalMin, m)?;
        rep.instances += 1;
        if iter == down {
            rep.agree += 1;
        } else {
            rep.discrepancies.push((p, iter, down));
        }
    }
    Ok(rep)
}

/// Largest relative gap between the path's RSS and the best exhaustive
/// one-column extension at every step; also fails if the path's choice is
/// not (within that gap) the exhaustive argmin.
pub fn path_refit_discrepancy(ds: &Dataset<f64>, path: &ForwardPath<f64>) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 0..path.len() {
        let prefix = &path.entered[..k];
        let mut best = f64::INFINITY;
        for j in (0..ds.m()).filter(|j| !prefix.contains(j)) {
            let mut s = prefix.to_vec();
            s.push(j);
            if let Ok(fit) = least_squares(ds, &s) {
                best = best.min(fit.rss);
            }
        }
        let mut chosen = prefix.to_vec();
        chosen.push(path.entered[k]);
        let rss_chosen = least_squares(ds, &chosen)?.rss;
        let scale = path.rss[0].max(f64::MIN_POSITIVE);
        worst = worst.max((rss_chosen - best).abs() / scale).max((path.rss[k + 1] - rss_chosen).abs() / scale);
    }
    Ok(worst)
}

/// Solve `A x = b` by Gauss-Jordan elimination with partial pivoting.
fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// `σ² k + μ'(I - X₁(X₁'X₁)⁻¹X₁')μ` with the hat matrix formed explicitly.
pub fn explicit_projection_mspe(columns: &[Vec<f64>], beta: &[f64], subset: &[usize], sigma2: f64, intercept: bool) -> Option<f64> {
    let n = columns[0].len();
    let mu: Vec<f64> = (0..n).map(|i| columns.iter().zip(beta).map(|(c, b)| c[i] * b).sum()).collect();
    let mut x1: Vec<Vec<f64>> = Vec::new();
    if intercept {
        x1.push(vec![1.0; n]);
    }
    x1.extend(subset.iter().map(|&j| columns[j].clone()));
    let k = x1.len();
    if k == 0 {
        return Some(mu.iter().map(|v| v * v).sum());
    }
    let gram: Vec<Vec<f64>> = (0..k).map(|a| (0..k).map(|b| x1[a].iter().zip(&x1[b]).map(|(u, v)| u * v).sum()).collect()).collect();
    // columns of G⁻¹
    let mut ginv = vec![vec![0.0; k]; k];
    for j in 0..k {
        let mut e = vec![0.0; k];
        e[j] = 1.0;
        let col = gauss_solve(gram.clone(), e)?;
        for i in 0..k {
            ginv[i][j] = col[i];
        }
    }
    let mut bias = 0.0;
    for r in 0..n {
        let mut hmu = 0.0;
        for c in 0..n {
            let mut h = 0.0;
            for a in 0..k {
                let mut t = 0.0;
                for b in 0..k {
                    t += ginv[a][b] * x1[b][c];
                }
                h += x1[a][r] * t;
            }
            hmu += h * mu[c];
        }
        let d = mu[r] - hmu;
        bias += d * mu[r];
    }
    Some(sigma2 * k as f64 + bias)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelftestReport {
    pub checks: Vec<CheckResult>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// A random small regression instance: `m ≤ 8`, AR(1) design, sparse signal.
pub struct SmallInstance {
    pub dataset: Dataset<f64>,
    pub columns: Vec<Vec<f64>>,
    pub beta: Vec<f64>,
}

pub fn small_instance(source: RandomSource, max_m: usize) -> Result<SmallInstance> {
    let mut rng = source.rng();
    let mut normals = source.substream(1).normals();
    let m = rng.random_range(2..=max_m);
    let n = rng.random_range(m + 3..=3 * m + 4);
    let rho: f64 = rng.random_range(-0.6..0.6);
    let cols_raw = crate::sim::gen_design(m, n, rho, source.substream(2))?;
    let beta: Vec<f64> = (0..m)
        .map(|_| if rng.random::<f64>() < 0.5 { 0.0 } else { rng.random_range(0.2..2.0) * if rng.random() { 1.0 } else { -1.0 } })
        .collect();
    let y: Vec<f64> = (0..n)
        .map(|i| 1.0 + cols_raw.iter().zip(&beta).map(|(c, b)| c[i] * b).sum::<f64>() + normals.next().unwrap())
        .collect();
    let dataset = Dataset::unnamed(y, cols_raw.clone(), true)?;
    Ok(SmallInstance { dataset, columns: cols_raw, beta })
}

/// The full suite: `instances` random problems with `m ≤ 8` plus the
/// exhaustive orthogonal grid for `m ≤ 6`.
pub fn run_selftest(instances: usize, seed: u64) -> Result<SelftestReport> {
    let root = RandomSource::new(seed, 0x5e1f);
    let (mut path_err, mut mspe_err, mut oracle_miss, mut order_miss) = (0.0f64, 0.0f64, 0usize, 0usize);
    let rules = [StopRule::FirstLocalMin, StopRule::GlobalMin, StopRule::LastCrossing];
    for i in 0..instances {
        let inst = small_instance(root.substream(i as u64), 8)?;
        let ds = &inst.dataset;
        let path = forward_path(ds, Sigma2Mode::Known(1.0), ds.max_path_len())?;
        path_err = path_err.max(path_refit_discrepancy(ds, &path)?);

        let mut explicit = Vec::with_capacity(path.len() + 1);
        for k in 0..=path.len() {
            let sub = &path.entered[..k];
            let fast = theoretical_mspe(&inst.columns, &inst.beta, sub, 1.0, true)?;
            let slow = explicit_projection_mspe(&inst.columns, &inst.beta, sub, 1.0, true).unwrap_or(f64::NAN);
            mspe_err = mspe_err.max((fast - slow).abs() / slow.abs().max(1.0));
            explicit.push(slow);
        }
        let brute = explicit.iter().enumerate().fold((0, f64::INFINITY), |b, (k, &v)| if v < b.1 { (k, v) } else { b });
        if random_oracle(&path, &inst.columns, &inst.beta, 1.0).0 != brute.0 {
            oracle_miss += 1;
        }
        for spec in [PenaltySpec::msfdr(0.05), PenaltySpec::Bh { q: 0.1 }, PenaltySpec::Aic, PenaltySpec::Tk] {
            let trace = PreparedMethod::<f64>::new(spec, StopRule::GlobalMin, ds.m())?.trace(&path)?;
            let k: Vec<usize> = rules.iter().map(|&r| stop(&trace, r)).collect();
            if !(k[0] <= k[1] && k[1] <= k[2]) {
                order_miss += 1;
            }
        }
    }
    let eq = orthogonal_equivalence(6, &P_GRID, 0.05)?;
    let agree = iterative_agreement(500, 10, 0.05, root.substream(u64::MAX))?;
    let checks = vec![
        CheckResult {
            name: "forward path matches exhaustive refit".into(),
            passed: path_err <= 1e-8,
            detail: format!("max relative RSS gap {path_err:.3e} over {instances} instances"),
        },
        CheckResult {
            name: "theoretical MSPE matches explicit projection".into(),
            passed: mspe_err <= 1e-9,
            detail: format!("max relative error {mspe_err:.3e}"),
        },
        CheckResult {
            name: "random oracle matches exhaustive prefix minimum".into(),
            passed: oracle_miss == 0,
            detail: format!("{oracle_miss} mismatches"),
        },
        CheckResult {
            name: "stop-rule ordering first <= global <= last".into(),
            passed: order_miss == 0,
            detail: format!("{order_miss} violations"),
        },
        CheckResult {
            name: "orthogonal equivalence with testing procedures".into(),
            passed: eq.mismatches() == 0,
            detail: format!("{} patterns, {} mismatches", eq.cases, eq.mismatches()),
        },
        CheckResult {
            name: "iterative p-to-enter vs step-down (informational)".into(),
            passed: true,
            detail: format!("agreement {:.1}% over {} orthogonal instances", 100.0 * agree.rate(), agree.instances),
        },
    ];
    Ok(SelftestReport { checks })
}
