use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::penalty::PenaltySpec;
use crate::select::{default_rule, StopRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BetaType {
    /// `c · 1/√i`
    InverseSqrt,
    /// `c · p/(m i)`; uniform on `c·(1/m, 1)` in the sparsest case.
    Harmonic,
    /// Constant `c(p)` fixing the theoretical R².
    Constant,
}

impl BetaType {
    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            1 => Ok(BetaType::InverseSqrt),
            2 => Ok(BetaType::Harmonic),
            3 => Ok(BetaType::Constant),
            _ => Err(Error::InvalidConfig(format!("beta type {i} (expected 1, 2 or 3)"))),
        }
    }

    pub fn index(self) -> u8 {
        match self {
            BetaType::InverseSqrt => 1,
            BetaType::Harmonic => 2,
            BetaType::Constant => 3,
        }
    }
}

/// Scale of the coefficient vector for beta types 1 and 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CScale {
    /// `c` such that the smallest `β_i / SE(β̂_i)` in the true model equals the target.
    Auto { effect_target: f64 },
    Fixed(f64),
}

impl Default for CScale {
    fn default() -> Self {
        CScale::Auto { effect_target: 3.0 }
    }
}

/// One cell of the simulation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub m: usize,
    pub n: usize,
    pub rho: f64,
    /// 1..=6 for `p ∈ {√m, m/4, m/3, m/2, 3m/4, m}`.
    pub p_index: u8,
    pub beta_type: BetaType,
    pub sigma: f64,
    pub beta0: f64,
    pub c_scale: CScale,
    pub r2: f64,
    pub replications: usize,
    pub seed: u64,
    /// Known σ² (the default) or re-estimated from the full model per replication.
    pub sigma2_known: bool,
}

impl SimConfig {
    pub fn new(m: usize, rho: f64, p_index: u8, beta_type: BetaType, replications: usize, seed: u64) -> Self {
        Self {
            m,
            n: 2 * m,
            rho,
            p_index,
            beta_type,
            sigma: 1.0,
            beta0: 10.0,
            c_scale: CScale::default(),
            r2: 0.75,
            replications,
            seed,
            sigma2_known: true,
        }
    }

    /// Number of nonzero coefficients, rounded to the nearest integer (at least 1).
    pub fn p(&self) -> usize {
        p_for_index(self.m, self.p_index)
    }

    pub fn id(&self) -> String {
        format!("m{}_n{}_rho{}_b{}_p{}", self.m, self.n, self.rho, self.beta_type.index(), self.p_index)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |s: String| Err(Error::InvalidConfig(s));
        if self.m == 0 {
            return bad("m must be positive".into());
        }
        if !(1..=6).contains(&self.p_index) {
            return bad(format!("p index {} (expected 1..=6)", self.p_index));
        }
        if self.n <= self.m + 1 {
            return bad(format!("n = {} must exceed m + 1 = {}", self.n, self.m + 1));
        }
        if !(self.rho.abs() < 1.0) {
            return bad(format!("|rho| = {} must be < 1", self.rho.abs()));
        }
        if !(self.sigma > 0.0) {
            return bad("sigma must be positive".into());
        }
        if !(self.r2 > 0.0 && self.r2 < 1.0) {
            return bad(format!("R² target {} must lie in (0, 1)", self.r2));
        }
        match self.c_scale {
            CScale::Auto { effect_target } if !(effect_target > 0.0) => bad("effect target must be positive".into()),
            CScale::Fixed(c) if !(c > 0.0) => bad("c scale must be positive".into()),
            _ if self.replications == 0 => bad("replications must be positive".into()),
            _ => Ok(()),
        }
    }
}

pub fn p_for_index(m: usize, index: u8) -> usize {
    let mf = m as f64;
    let p = match index {
        1 => mf.sqrt(),
        2 => mf / 4.0,
        3 => mf / 3.0,
        4 => mf / 2.0,
        5 => 3.0 * mf / 4.0,
        _ => mf,
    };
    (p.round() as usize).clamp(1, m)
}

/// A procedure evaluated by the simulation: a penalty with its stopping rule,
/// or the random oracle itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimMethod {
    Penalized { spec: PenaltySpec, rule: StopRule },
    Oracle,
}

impl SimMethod {
    pub fn with_default_rule(spec: PenaltySpec) -> Self {
        SimMethod::Penalized { spec, rule: default_rule(&spec) }
    }

    pub fn label(&self) -> String {
        match self {
            SimMethod::Penalized { spec, .. } => spec.label(),
            SimMethod::Oracle => "Oracle".into(),
        }
    }

    pub fn spec(&self) -> Option<PenaltySpec> {
        match self {
            SimMethod::Penalized { spec, .. } => Some(*spec),
            SimMethod::Oracle => None,
        }
    }

    /// The procedures of the comparison: BH, TSFDR, MSFDR and fixed
    /// p-to-enter at four levels each, plus FS, TK, BM, GF, DJ and Cp.
    pub fn standard_set() -> Vec<SimMethod> {
        let mut out = Vec::new();
        for q in [0.05, 0.1, 0.25, 0.5] {
            out.push(PenaltySpec::Bh { q });
            out.push(PenaltySpec::Tsfdr { q });
            out.push(PenaltySpec::Msfdr { q, cap: None });
            out.push(PenaltySpec::FixedAlpha { p: q });
        }
        out.extend([PenaltySpec::Fs, PenaltySpec::Tk, PenaltySpec::bm(), PenaltySpec::Gf, PenaltySpec::Dj, PenaltySpec::Aic]);
        out.into_iter().map(SimMethod::with_default_rule).collect()
    }
}

impl fmt::Display for SimMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimMethod::Penalized { spec, rule } => write!(f, "{spec}@{rule}"),
            SimMethod::Oracle => f.write_str("oracle"),
        }
    }
}

impl FromStr for SimMethod {
    type Err = Error;

    /// `oracle`, `msfdr:0.05` (default rule) or `tk@first`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("oracle") {
            return Ok(SimMethod::Oracle);
        }
        match s.split_once('@') {
            Some((spec, rule)) => Ok(SimMethod::Penalized { spec: spec.parse()?, rule: rule.parse()? }),
            None => Ok(SimMethod::with_default_rule(s.parse()?)),
        }
    }
}
