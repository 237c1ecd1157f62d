use rayon::prelude::*;

use crate::error::Result;
use crate::regress::{forward_path, Dataset, Sigma2Mode};
use crate::select::PreparedMethod;
use crate::stats::RandomSource;

use super::config::{SimConfig, SimMethod};
use super::design::{gen_beta, gen_design, Design};
use super::mspe::{argmin, mspe_along_path};
use super::stream_key;

/// Per-replication results, one entry per method in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRecord {
    pub replication: usize,
    pub oracle_k: usize,
    pub oracle_mspe: f64,
    pub sizes: Vec<usize>,
    pub mspe: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodOutcome {
    /// Round-trippable method string (`msfdr:0.05@first`).
    pub method: String,
    pub label: String,
    pub mean_mspe: f64,
    pub mean_oracle: f64,
    pub relative_loss: f64,
    pub se: f64,
    pub mean_size: f64,
    /// Replications where the method beat the oracle; zero by construction.
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigOutcome {
    pub id: String,
    pub m: usize,
    pub n: usize,
    pub rho: f64,
    pub beta_type: u8,
    pub p_index: u8,
    pub p: usize,
    pub c: f64,
    pub replications: usize,
    pub methods: Vec<MethodOutcome>,
    /// Empty when the outcome was read back from a file.
    pub records: Vec<ReplicationRecord>,
}

impl ConfigOutcome {
    pub fn method(&self, method: &str) -> Option<&MethodOutcome> {
        self.methods.iter().find(|o| o.method == method || o.label == method)
    }
}

/// Stream of the design shared by every configuration with the same `(m, n, ρ)`.
pub fn design_source(config: &SimConfig) -> RandomSource {
    RandomSource::new(config.seed, stream_key(&format!("design/m{}/n{}/rho{}", config.m, config.n, config.rho)))
}

pub fn beta_source(config: &SimConfig) -> RandomSource {
    RandomSource::new(config.seed, stream_key(&format!("beta/{}", config.id())))
}

pub fn noise_source(config: &SimConfig, replication: usize) -> RandomSource {
    RandomSource::new(config.seed, stream_key(&format!("noise/{}", config.id()))).substream(replication as u64)
}

pub fn config_design(config: &SimConfig) -> Result<Design> {
    Ok(Design::new(gen_design(config.m, config.n, config.rho, design_source(config))?))
}

/// Ratio of means `ȳ/x̄` and its standard error
/// `√((s_y² + R² s_x² - 2R s_xy) / (r x̄²))`; zero with fewer than two draws.
pub fn ratio_estimate(num: &[f64], den: &[f64]) -> (f64, f64) {
    let r = num.len() as f64;
    let my = num.iter().sum::<f64>() / r;
    let mx = den.iter().sum::<f64>() / r;
    let ratio = my / mx;
    if num.len() < 2 {
        return (ratio, 0.0);
    }
    let (mut syy, mut sxx, mut sxy) = (0.0, 0.0, 0.0);
    for (y, x) in num.iter().zip(den) {
        let (dy, dx) = (y - my, x - mx);
        syy += dy * dy;
        sxx += dx * dx;
        sxy += dx * dy;
    }
    let d = r - 1.0;
    let var = (syy / d + ratio * ratio * sxx / d - 2.0 * ratio * sxy / d) / (r * mx * mx);
    (ratio, var.max(0.0).sqrt())
}

/// Run one configuration, building its design from the configuration seed.
pub fn run_config(config: &SimConfig, methods: &[SimMethod]) -> Result<ConfigOutcome> {
    let design = config_design(config)?;
    run_config_with_design(config, &design, methods)
}

/// Run one configuration on a given design (shared across the `(m, n, ρ)`
/// cell). Replications run in parallel and are folded in index order.
pub fn run_config_with_design(config: &SimConfig, design: &Design, methods: &[SimMethod]) -> Result<ConfigOutcome> {
    config.validate()?;
    let (beta, c) = gen_beta(config.beta_type, design, config.p_index, config.c_scale, config.r2, beta_source(config))?;
    let prepared = methods
        .iter()
        .map(|m| match m {
            SimMethod::Penalized { spec, rule } => PreparedMethod::new(*spec, *rule, config.m).map(Some),
            SimMethod::Oracle => Ok(None),
        })
        .collect::<Result<Vec<_>>>()?;
    let mu = design.mean_response(&beta);
    let sigma2 = config.sigma * config.sigma;
    let mode = if config.sigma2_known { Sigma2Mode::Known(sigma2) } else { Sigma2Mode::FullModel };

    let replicate = |rep: usize| -> Result<ReplicationRecord> {
        let mut noise = noise_source(config, rep).normals();
        let y: Vec<f64> = mu.iter().map(|&v| config.beta0 + v + config.sigma * noise.next().unwrap()).collect();
        let ds = Dataset::unnamed(y, design.columns.clone(), true)?;
        let path = forward_path(&ds, mode, ds.max_path_len())?;
        let curve = mspe_along_path(&path, &mu, sigma2);
        let (oracle_k, oracle_mspe) = argmin(&curve);
        let mut sizes = Vec::with_capacity(prepared.len());
        let mut mspe = Vec::with_capacity(prepared.len());
        for p in &prepared {
            let k = match p {
                Some(method) => method.size(&path)?,
                None => oracle_k,
            };
            sizes.push(k);
            mspe.push(curve[k]);
        }
        Ok(ReplicationRecord { replication: rep, oracle_k, oracle_mspe, sizes, mspe })
    };
    let records = (0..config.replications).into_par_iter().map(replicate).collect::<Result<Vec<_>>>()?;

    let oracle: Vec<f64> = records.iter().map(|r| r.oracle_mspe).collect();
    let mean_oracle = oracle.iter().sum::<f64>() / oracle.len() as f64;
    let outcomes = methods
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let vals: Vec<f64> = records.iter().map(|r| r.mspe[i]).collect();
            let (relative_loss, se) = ratio_estimate(&vals, &oracle);
            let violations = records.iter().filter(|r| r.mspe[i] < r.oracle_mspe).count();
            MethodOutcome {
                method: m.to_string(),
                label: m.label(),
                mean_mspe: vals.iter().sum::<f64>() / vals.len() as f64,
                mean_oracle,
                relative_loss,
                se,
                mean_size: records.iter().map(|r| r.sizes[i] as f64).sum::<f64>() / records.len() as f64,
                violations,
            }
        })
        .collect();
    Ok(ConfigOutcome {
        id: config.id(),
        m: config.m,
        n: config.n,
        rho: config.rho,
        beta_type: config.beta_type.index(),
        p_index: config.p_index,
        p: config.p(),
        c,
        replications: config.replications,
        methods: outcomes,
        records,
    })
}
