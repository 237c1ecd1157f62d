//! From a forward path and a penalty to a selected model.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::penalty::{linear_alpha_costs, penalty_table, PenaltySpec, PenaltyTable};
use crate::regress::{forward_path, least_squares, Dataset, ForwardPath, Sigma2Mode};
use crate::scalar::Scalar;
use crate::stats::two_sided_critical_sq;

/// Where to stop along a penalized trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StopRule {
    /// First (leftmost) local minimum; step-down analogue.
    FirstLocalMin,
    GlobalMin,
    /// Last size whose entry did not increase the trace; step-up analogue.
    LastCrossing,
}

impl StopRule {
    pub const ALL: [StopRule; 3] = [StopRule::FirstLocalMin, StopRule::GlobalMin, StopRule::LastCrossing];
}

impl fmt::Display for StopRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopRule::FirstLocalMin => "first",
            StopRule::GlobalMin => "global",
            StopRule::LastCrossing => "last",
        })
    }
}

impl FromStr for StopRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "first" | "first-local-min" | "firstlocalmin" | "step-down" => Ok(StopRule::FirstLocalMin),
            "global" | "global-min" | "globalmin" => Ok(StopRule::GlobalMin),
            "last" | "last-crossing" | "lastcrossing" | "step-up" => Ok(StopRule::LastCrossing),
            _ => Err(Error::Parse(format!("unknown stopping rule `{s}`"))),
        }
    }
}

/// Stopping rule used when none is given: the step-down rule for MSFDR and
/// TSFDR, the step-up analogue for BH and the global minimum of the
/// penalized criterion for every other penalty.
pub fn default_rule(spec: &PenaltySpec) -> StopRule {
    match spec {
        PenaltySpec::Msfdr { .. } | PenaltySpec::Tsfdr { .. } => StopRule::FirstLocalMin,
        PenaltySpec::Bh { .. } => StopRule::LastCrossing,
        _ => StopRule::GlobalMin,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult<T> {
    /// Selected size, not counting the intercept.
    pub k_selected: usize,
    pub intercept: bool,
    /// Selected columns in entry order (a prefix of the path).
    pub selected: Vec<usize>,
    /// Least-squares refit on the selected prefix.
    pub coefficients: Vec<T>,
    pub intercept_coef: Option<T>,
    pub rss: T,
    /// Penalized RSS for `k = 0..=K`.
    pub trace: Vec<T>,
    pub rule: StopRule,
    pub method: PenaltySpec,
    pub sigma2: T,
    pub sigma2_source: Sigma2Mode<T>,
    /// Number of passes of the iterative p-to-enter algorithm.
    pub iterations: Option<usize>,
    /// Model sizes (intercept counted) produced by each pass.
    pub size_history: Vec<usize>,
}

impl<T> SelectionResult<T> {
    pub fn k_with_intercept(&self) -> usize {
        self.k_selected + usize::from(self.intercept)
    }
}

fn trace_from_table<T: Scalar>(path: &ForwardPath<T>, table: &PenaltyTable<T>) -> Vec<T> {
    let mut trace = Vec::with_capacity(path.len() + 1);
    trace.push(path.rss[0]);
    for k in 1..=path.len() {
        let penalty = path.sigma2 * T::from_usize_exact(k) * table.lambda[k - 1];
        trace.push(path.rss[k] + penalty);
    }
    trace
}

fn trace_from_costs<T: Scalar>(path: &ForwardPath<T>, costs: &[T]) -> Vec<T> {
    let mut trace = Vec::with_capacity(path.len() + 1);
    trace.push(path.rss[0]);
    let mut acc = T::zero();
    for k in 1..=path.len() {
        acc = acc + costs[k - 1];
        trace.push(path.rss[k] + path.sigma2 * acc);
    }
    trace
}

/// `trace(k) = RSS_k + σ² k λ_{k,m}` for `k = 0..=K`.
pub fn penalized_trace<T: Scalar>(path: &ForwardPath<T>, spec: &PenaltySpec, m: usize) -> Result<Vec<T>> {
    if path.is_empty() {
        return Ok(vec![path.rss[0]]);
    }
    if path.len() > m {
        return Err(Error::SizeOutOfRange { k: path.len(), m });
    }
    let table = penalty_table(spec, m, path.len())?;
    Ok(trace_from_table(path, &table))
}

fn tie_tolerance<T: Scalar>(trace: &[T]) -> T {
    T::c(1e-12) * trace.iter().fold(T::zero(), |a, v| a.max(v.abs()))
}

/// Apply a stopping rule. Equal consecutive values count as "entering did
/// not hurt" (a p-value equal to its critical constant is rejected).
pub fn stop<T: Scalar>(trace: &[T], rule: StopRule) -> usize {
    assert!(!trace.is_empty(), "trace must hold at least trace(0)");
    let kmax = trace.len() - 1;
    let tol = tie_tolerance(trace);
    match rule {
        StopRule::FirstLocalMin => (0..kmax).find(|&k| trace[k + 1] > trace[k] + tol).unwrap_or(kmax),
        StopRule::GlobalMin => {
            let min = trace.iter().copied().fold(T::infinity(), T::min);
            trace.iter().position(|&v| v <= min + tol).unwrap_or(0)
        }
        StopRule::LastCrossing => (1..=kmax).rev().find(|&k| trace[k] <= trace[k - 1] + tol).unwrap_or(0),
    }
}

/// Model size chosen by `spec` under `rule` along `path`, for pool size `m`.
///
/// Prefer [`PreparedMethod`] when the same method is applied to many paths.
pub fn select_size<T: Scalar>(path: &ForwardPath<T>, spec: &PenaltySpec, rule: StopRule, m: usize) -> Result<usize> {
    PreparedMethod::new(*spec, rule, m)?.size(path)
}

/// A method with its penalty table precomputed for one pool size.
#[derive(Debug, Clone)]
pub struct PreparedMethod<T> {
    pub spec: PenaltySpec,
    pub rule: StopRule,
    pub m: usize,
    table: Option<PenaltyTable<T>>,
    stage1: Option<PenaltyTable<T>>,
}

impl<T: Scalar> PreparedMethod<T> {
    pub fn new(spec: PenaltySpec, rule: StopRule, m: usize) -> Result<Self> {
        spec.validate()?;
        let (table, stage1) = match spec {
            PenaltySpec::Tsfdr { q } => (None, Some(penalty_table(&PenaltySpec::Bh { q: q / (1.0 + q) }, m, m)?)),
            _ => (Some(penalty_table(&spec, m, m)?), None),
        };
        Ok(Self { spec, rule, m, table, stage1 })
    }

    pub fn trace(&self, path: &ForwardPath<T>) -> Result<Vec<T>> {
        self.check(path)?;
        match (&self.table, &self.stage1) {
            (Some(table), _) => Ok(trace_from_table(path, table)),
            (None, Some(_)) => {
                let (_, costs) = self.tsfdr_stage2(path)?;
                Ok(trace_from_costs(path, &costs))
            }
            _ => unreachable!(),
        }
    }

    pub fn size(&self, path: &ForwardPath<T>) -> Result<usize> {
        self.check(path)?;
        match (&self.table, &self.stage1) {
            (Some(table), _) => Ok(stop(&trace_from_table(path, table), self.rule)),
            (None, Some(_)) => {
                let (r1, costs) = self.tsfdr_stage2(path)?;
                if r1 == 0 || r1 == self.m {
                    return Ok(r1);
                }
                Ok(stop(&trace_from_costs(path, &costs), self.rule))
            }
            _ => unreachable!(),
        }
    }

    /// Stage-1 size and the stage-2 step costs `z²` at `α_i = i q' / (m - r₁)`.
    fn tsfdr_stage2(&self, path: &ForwardPath<T>) -> Result<(usize, Vec<T>)> {
        let (Some(stage1), PenaltySpec::Tsfdr { q }) = (&self.stage1, self.spec) else {
            unreachable!()
        };
        let r1 = stop(&trace_from_table(path, stage1), self.rule);
        let qp = q / (1.0 + q);
        let costs = if r1 == 0 || r1 == self.m {
            stage1.step_cost[..path.len()].to_vec()
        } else {
            linear_alpha_costs(qp, self.m - r1, path.len())?
        };
        Ok((r1, costs))
    }

    fn check(&self, path: &ForwardPath<T>) -> Result<()> {
        if path.len() > self.m {
            Err(Error::SizeOutOfRange { k: path.len(), m: self.m })
        } else {
            Ok(())
        }
    }
}

fn finish<T: Scalar>(
    ds: &Dataset<T>,
    path: &ForwardPath<T>,
    k: usize,
    trace: Vec<T>,
    spec: PenaltySpec,
    rule: StopRule,
) -> Result<SelectionResult<T>> {
    let selected = path.entered[..k].to_vec();
    let fit = least_squares(ds, &selected)?;
    Ok(SelectionResult {
        k_selected: k,
        intercept: ds.intercept(),
        selected,
        coefficients: fit.coefficients,
        intercept_coef: fit.intercept,
        rss: fit.rss,
        trace,
        rule,
        method: spec,
        sigma2: path.sigma2,
        sigma2_source: path.sigma2_source,
        iterations: None,
        size_history: Vec::new(),
    })
}

/// Select along an already computed path.
pub fn select_on_path<T: Scalar>(
    ds: &Dataset<T>,
    path: &ForwardPath<T>,
    spec: &PenaltySpec,
    rule: StopRule,
) -> Result<SelectionResult<T>> {
    let method = PreparedMethod::new(*spec, rule, ds.m())?;
    let k = method.size(path)?;
    let trace = method.trace(path)?;
    finish(ds, path, k, trace, *spec, rule)
}

/// Forward path, penalized trace and stop, then a refit on the chosen prefix.
pub fn select<T: Scalar>(
    ds: &Dataset<T>,
    spec: &PenaltySpec,
    rule: StopRule,
    sigma2: Sigma2Mode<T>,
) -> Result<SelectionResult<T>> {
    let path = forward_path(ds, sigma2, ds.max_path_len())?;
    select_on_path(ds, &path, spec, rule)
}

/// Two-stage FDR selection: BH at `q' = q/(1+q)` gives `r₁`; unless `r₁` is
/// 0 or `m`, a second BH-type pass uses `α_i = i q' / (m - r₁)`.
pub fn tsfdr_select<T: Scalar>(
    ds: &Dataset<T>,
    q: f64,
    rule: StopRule,
    sigma2: Sigma2Mode<T>,
) -> Result<SelectionResult<T>> {
    select(ds, &PenaltySpec::Tsfdr { q }, rule, sigma2)
}

/// Number of path entries a forward run with constant p-to-enter `alpha`
/// admits: entry continues while the entering `t²` reaches `z²_{α/2}`.
pub fn constant_alpha_run<T: Scalar>(path: &ForwardPath<T>, alpha: T) -> Result<usize> {
    let crit = two_sided_critical_sq(alpha.min(T::one()))?;
    let slack = crit * T::c(1e-12);
    Ok(path.tsq.iter().take_while(|&&t| t + slack >= crit).count())
}

/// The iterative p-to-enter computation of the multiple-stage procedure:
/// start at `i = 1`, run forward selection at `α_i = iq/(m + 1 - i(1 - q))`,
/// set `i` to the resulting size and repeat until it no longer changes.
///
/// Sizes count the intercept when the dataset forces one; `m` counts
/// candidate predictors only.
pub fn msfdr_iterative<T: Scalar>(ds: &Dataset<T>, q: f64, sigma2: Sigma2Mode<T>) -> Result<SelectionResult<T>> {
    let path = forward_path(ds, sigma2, ds.max_path_len())?;
    msfdr_iterative_on_path(ds, &path, q)
}

pub fn msfdr_iterative_size<T: Scalar>(path: &ForwardPath<T>, q: f64) -> Result<(usize, Vec<usize>)> {
    let spec = PenaltySpec::msfdr(q);
    spec.validate()?;
    let m = path.m;
    let offset = usize::from(path.intercept);
    let qq = T::c(q);
    let mut i = 1usize;
    let mut history = Vec::new();
    let mut count = 0;
    for _ in 0..m + 2 {
        let i_ = T::from_usize_exact(i);
        let m_ = T::from_usize_exact(m);
        let alpha = i_ * qq / (m_ + T::one() - i_ * (T::one() - qq));
        count = constant_alpha_run(path, alpha)?;
        let next = count + offset;
        history.push(next);
        if next == i || next == 0 {
            break;
        }
        i = next;
    }
    Ok((count, history))
}

pub fn msfdr_iterative_on_path<T: Scalar>(ds: &Dataset<T>, path: &ForwardPath<T>, q: f64) -> Result<SelectionResult<T>> {
    let spec = PenaltySpec::msfdr(q);
    let (k, history) = msfdr_iterative_size(path, q)?;
    let trace = penalized_trace(path, &spec, ds.m())?;
    let mut out = finish(ds, path, k, trace, spec, StopRule::FirstLocalMin)?;
    out.iterations = Some(history.len());
    out.size_history = history;
    Ok(out)
}
