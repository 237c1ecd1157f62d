//! Penalty families: per-step critical constants `α_i`, averaged penalty
//! factors `λ_{k,m}` and marginal step costs `c_k = kλ_k - (k-1)λ_{k-1}`.
//!
//! All logarithms are natural.

use std::fmt;
use std::str::FromStr;

use log::warn;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::stats::upper_quantile;

/// How the optional MSFDR cap `C` is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CapReading {
    /// Quantile subscript `min(α_i/2, C)`.
    #[default]
    Subscript,
    /// Two-sided level `min(α_i, C)`, i.e. subscript `min(α_i, C)/2`.
    PValue,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cap {
    pub level: f64,
    pub reading: CapReading,
}

/// One of the ten penalty families with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PenaltySpec {
    /// Benjamini–Hochberg linear constants `iq/m`.
    Bh { q: f64 },
    /// Multiple-stage step-down constants `iq/(m + 1 - i(1 - q))`.
    Msfdr { q: f64, cap: Option<Cap> },
    /// Two-stage adaptive procedure; composed by the selector.
    Tsfdr { q: f64 },
    /// Forward selection with a fixed p-to-enter.
    FixedAlpha { p: f64 },
    /// AIC / Mallows' Cp, `λ = 2`.
    Aic,
    /// Universal threshold, `λ = 2 ln m`.
    Dj,
    /// Foster–Stine, `(1/k) Σ 2 ln(m/i)`.
    Fs,
    /// Tibshirani–Knight, `(2/k) Σ 2 ln(m/i)`.
    Tk,
    /// Birgé–Massart, `2 ln(C m / k)`.
    Bm { c: f64 },
    /// George–Foster, per-step cost `2 ln((m + 1 - k)/k)`.
    Gf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PenaltyFamily {
    Bh,
    Msfdr,
    Tsfdr,
    FixedAlpha,
    Aic,
    Dj,
    Fs,
    Tk,
    Bm,
    Gf,
}

pub const DEFAULT_BM_CONSTANT: f64 = 2.0;

impl PenaltySpec {
    pub fn family(&self) -> PenaltyFamily {
        match self {
            PenaltySpec::Bh { .. } => PenaltyFamily::Bh,
            PenaltySpec::Msfdr { .. } => PenaltyFamily::Msfdr,
            PenaltySpec::Tsfdr { .. } => PenaltyFamily::Tsfdr,
            PenaltySpec::FixedAlpha { .. } => PenaltyFamily::FixedAlpha,
            PenaltySpec::Aic => PenaltyFamily::Aic,
            PenaltySpec::Dj => PenaltyFamily::Dj,
            PenaltySpec::Fs => PenaltyFamily::Fs,
            PenaltySpec::Tk => PenaltyFamily::Tk,
            PenaltySpec::Bm { .. } => PenaltyFamily::Bm,
            PenaltySpec::Gf => PenaltyFamily::Gf,
        }
    }

    pub fn msfdr(q: f64) -> Self {
        PenaltySpec::Msfdr { q, cap: None }
    }

    pub fn bm() -> Self {
        PenaltySpec::Bm { c: DEFAULT_BM_CONSTANT }
    }

    /// The FDR level or p-to-enter, for families that carry one.
    pub fn level(&self) -> Option<f64> {
        match *self {
            PenaltySpec::Bh { q } | PenaltySpec::Msfdr { q, .. } | PenaltySpec::Tsfdr { q } => Some(q),
            PenaltySpec::FixedAlpha { p } => Some(p),
            _ => None,
        }
    }

    /// Families whose `λ_{k,m}` is the running mean of a nonincreasing
    /// step-cost sequence.
    pub fn is_cumulative_average(&self) -> bool {
        matches!(
            self.family(),
            PenaltyFamily::Bh | PenaltyFamily::Msfdr | PenaltyFamily::Fs | PenaltyFamily::Tk | PenaltyFamily::Gf
        )
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidPenalty(format!("{name} = {v} must lie in (0, 1)")))
            }
        };
        match *self {
            PenaltySpec::Bh { q } | PenaltySpec::Tsfdr { q } => unit("q", q),
            PenaltySpec::Msfdr { q, cap } => {
                unit("q", q)?;
                if q >= 0.5 {
                    warn!("MSFDR with q = {q} >= 0.5 forfeits asymptotic minimaxity");
                }
                match cap {
                    Some(c) => unit("cap", c.level),
                    None => Ok(()),
                }
            }
            PenaltySpec::FixedAlpha { p } => unit("p", p),
            PenaltySpec::Bm { c } if !(c > 0.0 && c.is_finite()) => {
                Err(Error::InvalidPenalty(format!("BM constant {c} must be positive")))
            }
            _ => Ok(()),
        }
    }

    /// Short label used in tables, e.g. `MSFDR 0.05`, `Cp`, `FWD 0.05`.
    pub fn label(&self) -> String {
        match *self {
            PenaltySpec::Bh { q } => format!("BH {q}"),
            PenaltySpec::Msfdr { q, cap: None } => format!("MSFDR {q}"),
            PenaltySpec::Msfdr { q, cap: Some(c) } => format!("MSFDR {q} cap {}", c.level),
            PenaltySpec::Tsfdr { q } => format!("TSFDR {q}"),
            PenaltySpec::FixedAlpha { p } => format!("FWD {p}"),
            PenaltySpec::Aic => "Cp".into(),
            PenaltySpec::Dj => "DJ".into(),
            PenaltySpec::Fs => "FS".into(),
            PenaltySpec::Tk => "TK".into(),
            PenaltySpec::Bm { c } if c == DEFAULT_BM_CONSTANT => "BM".into(),
            PenaltySpec::Bm { c } => format!("BM {c}"),
            PenaltySpec::Gf => "GF".into(),
        }
    }
}

impl fmt::Display for PenaltySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            PenaltySpec::Bh { q } => write!(f, "bh:{q}"),
            PenaltySpec::Msfdr { q, cap: None } => write!(f, "msfdr:{q}"),
            PenaltySpec::Msfdr { q, cap: Some(c) } => {
                let tag = match c.reading {
                    CapReading::Subscript => "cap",
                    CapReading::PValue => "pcap",
                };
                write!(f, "msfdr:{q}:{tag}={}", c.level)
            }
            PenaltySpec::Tsfdr { q } => write!(f, "tsfdr:{q}"),
            PenaltySpec::FixedAlpha { p } => write!(f, "fwd:{p}"),
            PenaltySpec::Aic => write!(f, "aic"),
            PenaltySpec::Dj => write!(f, "dj"),
            PenaltySpec::Fs => write!(f, "fs"),
            PenaltySpec::Tk => write!(f, "tk"),
            PenaltySpec::Bm { c } => write!(f, "bm:{c}"),
            PenaltySpec::Gf => write!(f, "gf"),
        }
    }
}

impl FromStr for PenaltySpec {
    type Err = Error;

    /// Parses `name[:level][:cap=C|:pcap=C]`, e.g. `msfdr:0.05`, `bm:2`, `cp`.
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.trim().split(':');
        let name = parts.next().unwrap_or_default().to_ascii_lowercase();
        let rest: Vec<&str> = parts.collect();
        let num = |v: &str| -> Result<f64> {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidPenalty(format!("bad number `{v}` in `{s}`")))
        };
        let level = |default: Option<f64>| -> Result<f64> {
            match rest.first() {
                Some(v) => num(v),
                None => default.ok_or_else(|| Error::InvalidPenalty(format!("`{s}` needs a level, e.g. `{name}:0.05`"))),
            }
        };
        let no_extra = |allowed: usize| -> Result<()> {
            if rest.len() > allowed {
                Err(Error::InvalidPenalty(format!("unexpected parameters in `{s}`")))
            } else {
                Ok(())
            }
        };
        let spec = match name.as_str() {
            "bh" | "fdr" => {
                no_extra(1)?;
                PenaltySpec::Bh { q: level(None)? }
            }
            "msfdr" | "ms" => {
                no_extra(2)?;
                let q = level(None)?;
                let cap = match rest.get(1) {
                    None => None,
                    Some(extra) => {
                        let (tag, v) = extra
                            .split_once('=')
                            .ok_or_else(|| Error::InvalidPenalty(format!("bad cap `{extra}`")))?;
                        let reading = match tag {
                            "cap" => CapReading::Subscript,
                            "pcap" => CapReading::PValue,
                            _ => return Err(Error::InvalidPenalty(format!("bad cap `{extra}`"))),
                        };
                        Some(Cap { level: num(v)?, reading })
                    }
                };
                PenaltySpec::Msfdr { q, cap }
            }
            "tsfdr" | "ts" => {
                no_extra(1)?;
                PenaltySpec::Tsfdr { q: level(None)? }
            }
            "fwd" | "fixed" | "fixedalpha" => {
                no_extra(1)?;
                PenaltySpec::FixedAlpha { p: level(None)? }
            }
            "aic" | "cp" => {
                no_extra(0)?;
                PenaltySpec::Aic
            }
            "dj" => {
                no_extra(0)?;
                PenaltySpec::Dj
            }
            "fs" => {
                no_extra(0)?;
                PenaltySpec::Fs
            }
            "tk" => {
                no_extra(0)?;
                PenaltySpec::Tk
            }
            "bm" => {
                no_extra(1)?;
                PenaltySpec::Bm { c: level(Some(DEFAULT_BM_CONSTANT))? }
            }
            "gf" => {
                no_extra(0)?;
                PenaltySpec::Gf
            }
            _ => return Err(Error::InvalidPenalty(format!("unknown method `{s}`"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn check_range(k: usize, m: usize) -> Result<()> {
    if k == 0 || k > m {
        Err(Error::SizeOutOfRange { k, m })
    } else {
        Ok(())
    }
}

/// Critical constant `α_i` of the FDR-type families.
pub fn step_alpha<T: Scalar>(spec: &PenaltySpec, i: usize, m: usize) -> Result<T> {
    check_range(i, m)?;
    let i_ = T::from_usize_exact(i);
    let m_ = T::from_usize_exact(m);
    match *spec {
        PenaltySpec::Bh { q } => Ok(i_ * T::c(q) / m_),
        PenaltySpec::Msfdr { q, .. } => {
            let q = T::c(q);
            Ok(i_ * q / (m_ + T::one() - i_ * (T::one() - q)))
        }
        PenaltySpec::FixedAlpha { p } => Ok(T::c(p)),
        other => Err(Error::UnsupportedFamily(other.label())),
    }
}

/// `z²` at upper-tail probability `tail`.
fn quantile_sq<T: Scalar>(tail: T) -> Result<T> {
    let z = upper_quantile(tail)?;
    Ok(z * z)
}

/// Marginal cost `c_k` of the `k`-th entry.
pub fn step_cost<T: Scalar>(spec: &PenaltySpec, k: usize, m: usize) -> Result<T> {
    check_range(k, m)?;
    let two = T::c(2.0);
    let k_ = T::from_usize_exact(k);
    let m_ = T::from_usize_exact(m);
    match *spec {
        PenaltySpec::Bh { .. } | PenaltySpec::FixedAlpha { .. } => quantile_sq(step_alpha::<T>(spec, k, m)? / two),
        PenaltySpec::Msfdr { cap, .. } => {
            let alpha = step_alpha::<T>(spec, k, m)?;
            let tail = match cap {
                None => alpha / two,
                Some(Cap { level, reading: CapReading::Subscript }) => (alpha / two).min(T::c(level)),
                Some(Cap { level, reading: CapReading::PValue }) => alpha.min(T::c(level)) / two,
            };
            quantile_sq(tail)
        }
        PenaltySpec::Aic => Ok(two),
        PenaltySpec::Dj => Ok(two * m_.ln()),
        PenaltySpec::Fs => Ok(two * (m_ / k_).ln()),
        PenaltySpec::Tk => Ok(T::c(4.0) * (m_ / k_).ln()),
        PenaltySpec::Gf => Ok(two * ((m_ + T::one() - k_) / k_).ln()),
        PenaltySpec::Bm { c } => {
            let total = |j: usize| -> T {
                if j == 0 {
                    T::zero()
                } else {
                    let j_ = T::from_usize_exact(j);
                    j_ * two * (T::c(c) * m_ / j_).ln()
                }
            };
            Ok(total(k) - total(k - 1))
        }
        PenaltySpec::Tsfdr { .. } => Err(Error::UnsupportedFamily(spec.label())),
    }
}

/// Averaged penalty factor `λ_{k,m}`.
pub fn penalty_factor<T: Scalar>(spec: &PenaltySpec, k: usize, m: usize) -> Result<T> {
    check_range(k, m)?;
    let k_ = T::from_usize_exact(k);
    let m_ = T::from_usize_exact(m);
    match *spec {
        PenaltySpec::Aic | PenaltySpec::Dj | PenaltySpec::FixedAlpha { .. } => step_cost(spec, 1, m),
        PenaltySpec::Bm { c } => Ok(T::c(2.0) * (T::c(c) * m_ / k_).ln()),
        PenaltySpec::Tsfdr { .. } => Err(Error::UnsupportedFamily(spec.label())),
        _ => {
            let mut sum = T::zero();
            for i in 1..=k {
                sum = sum + step_cost::<T>(spec, i, m)?;
            }
            Ok(sum / k_)
        }
    }
}

/// Penalty quantities for `k = 1..=kmax` at pool size `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyTable<T> {
    pub spec: PenaltySpec,
    pub m: usize,
    pub kmax: usize,
    /// `α_k` for the FDR-type families.
    pub alpha: Option<Vec<T>>,
    pub lambda: Vec<T>,
    pub step_cost: Vec<T>,
}

pub fn penalty_table<T: Scalar>(spec: &PenaltySpec, m: usize, kmax: usize) -> Result<PenaltyTable<T>> {
    if kmax > m || m == 0 {
        return Err(Error::SizeOutOfRange { k: kmax, m });
    }
    spec.validate()?;
    let costs = (1..=kmax).map(|k| step_cost::<T>(spec, k, m)).collect::<Result<Vec<T>>>()?;
    let alpha = match spec.family() {
        PenaltyFamily::Bh | PenaltyFamily::Msfdr | PenaltyFamily::FixedAlpha => {
            Some((1..=kmax).map(|i| step_alpha::<T>(spec, i, m)).collect::<Result<Vec<T>>>()?)
        }
        _ => None,
    };
    let lambda = if spec.is_cumulative_average() {
        let mut acc = T::zero();
        costs
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                acc = acc + c;
                acc / T::from_usize_exact(i + 1)
            })
            .collect()
    } else {
        (1..=kmax).map(|k| penalty_factor::<T>(spec, k, m)).collect::<Result<Vec<T>>>()?
    };
    Ok(PenaltyTable { spec: *spec, m, kmax, alpha, lambda, step_cost: costs })
}

/// Step costs for BH-type constants `α_i = i·q / denom`, clamped to a
/// two-sided level of at most 1 (cost 0).
pub(crate) fn linear_alpha_costs<T: Scalar>(q: f64, denom: usize, kmax: usize) -> Result<Vec<T>> {
    let d = T::from_usize_exact(denom.max(1));
    (1..=kmax)
        .map(|i| {
            let alpha = (T::from_usize_exact(i) * T::c(q) / d).min(T::one());
            quantile_sq(alpha / T::c(2.0))
        })
        .collect()
}
