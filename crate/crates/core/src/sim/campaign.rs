use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{Error, Result};

use super::config::{BetaType, CScale, SimConfig, SimMethod};
use super::design::Design;
use super::run::{config_design, run_config_with_design, ConfigOutcome};
use super::summary::{best_q_tsv, least_favourable_table, parse_outcomes, worst_case_table, outcome_tsv, Grouping, WorstK};

/// Environment variable consulted for the default worker count.
pub const WORKERS_ENV: &str = "FDRSEL_WORKERS";

fn default_rho() -> Vec<f64> {
    vec![-0.5, 0.0, 0.5]
}
fn default_beta_types() -> Vec<u8> {
    vec![1, 2, 3]
}
fn default_p_indices() -> Vec<u8> {
    (1..=6).collect()
}
fn default_c_scale() -> CScaleSetting {
    CScaleSetting::Name("auto".into())
}
fn default_effect_target() -> f64 {
    3.0
}
fn default_r2() -> f64 {
    0.75
}
fn default_methods() -> MethodsSetting {
    MethodsSetting::Name("standard".into())
}
fn default_sigma2() -> String {
    "known".into()
}
fn default_output() -> PathBuf {
    PathBuf::from("campaign-output")
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum CScaleSetting {
    Name(String),
    Value(f64),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum MethodsSetting {
    Name(String),
    List(Vec<String>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCampaign {
    seed: u64,
    replications: usize,
    #[serde(default = "default_output")]
    output: PathBuf,
    workers: Option<usize>,
    #[serde(default = "default_sigma2")]
    sigma2: String,
    #[serde(default = "default_methods")]
    methods: MethodsSetting,
    grid: RawGrid,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    m: Vec<usize>,
    #[serde(default = "default_rho")]
    rho: Vec<f64>,
    #[serde(default = "default_beta_types")]
    beta_type: Vec<u8>,
    #[serde(default = "default_p_indices")]
    p_index: Vec<u8>,
    /// Observations per configuration; `2m` when absent.
    n_factor: Option<usize>,
    #[serde(default = "default_c_scale")]
    c_scale: CScaleSetting,
    #[serde(default = "default_effect_target")]
    effect_target: f64,
    #[serde(default = "default_r2")]
    r2: f64,
}

/// A simulation campaign: the configuration grid, the methods and where
/// results go.
///
/// The file format is TOML:
///
/// ```toml
/// seed = 2009
/// replications = 1000
/// output = "results/m20"      # default "campaign-output"
/// workers = 4                 # optional
/// sigma2 = "known"            # or "full-model"
/// methods = "standard"        # or a list such as ["msfdr:0.05", "tk", "aic@global"]
///
/// [grid]
/// m = [20, 40]
/// rho = [-0.5, 0.0, 0.5]      # default
/// beta_type = [1, 2, 3]       # default
/// p_index = [1, 2, 3, 4, 5, 6]  # default
/// c_scale = "auto"            # or a positive number
/// effect_target = 3.0         # smallest β/SE under "auto"
/// r2 = 0.75                   # theoretical R² for beta type 3
/// ```
#[derive(Debug, Clone)]
pub struct CampaignConfig {
    pub configs: Vec<SimConfig>,
    pub methods: Vec<SimMethod>,
    pub output: PathBuf,
    pub workers: Option<usize>,
}

impl CampaignConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawCampaign = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.message().to_string()))?;
        let sigma2_known = match raw.sigma2.as_str() {
            "known" => true,
            "full-model" => false,
            other => return Err(Error::InvalidConfig(format!("sigma2 {other:?} (expected known or full-model)"))),
        };
        let c_scale = match raw.grid.c_scale {
            CScaleSetting::Name(s) if s == "auto" => CScale::Auto { effect_target: raw.grid.effect_target },
            CScaleSetting::Name(s) => return Err(Error::InvalidConfig(format!("c_scale {s:?}"))),
            CScaleSetting::Value(v) => CScale::Fixed(v),
        };
        let methods = match raw.methods {
            MethodsSetting::Name(s) if s == "standard" => SimMethod::standard_set(),
            MethodsSetting::Name(s) => vec![s.parse()?],
            MethodsSetting::List(v) => v.iter().map(|s| s.parse()).collect::<Result<_>>()?,
        };
        if methods.is_empty() {
            return Err(Error::InvalidConfig("method list is empty".into()));
        }
        let mut configs = Vec::new();
        for &m in &raw.grid.m {
            for &rho in &raw.grid.rho {
                for &bt in &raw.grid.beta_type {
                    for &pi in &raw.grid.p_index {
                        let mut c = SimConfig::new(m, rho, pi, BetaType::from_index(bt)?, raw.replications, raw.seed);
                        if let Some(f) = raw.grid.n_factor {
                            c.n = f * m;
                        }
                        c.c_scale = c_scale;
                        c.r2 = raw.grid.r2;
                        c.sigma2_known = sigma2_known;
                        c.validate()?;
                        configs.push(c);
                    }
                }
            }
        }
        if configs.is_empty() {
            return Err(Error::InvalidConfig("configuration grid is empty".into()));
        }
        Ok(Self { configs, methods, output: raw.output, workers: raw.workers })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides the file and the environment.
    pub workers: Option<usize>,
    /// Recompute configurations whose result file already exists.
    pub force: bool,
}

#[derive(Debug, Clone)]
pub struct CampaignReport {
    pub outcomes: Vec<ConfigOutcome>,
    pub computed: Vec<String>,
    pub reused: Vec<String>,
    pub summary_files: Vec<PathBuf>,
}

pub fn resolve_workers(flag: Option<usize>, file: Option<usize>) -> Result<usize> {
    let env = match std::env::var(WORKERS_ENV) {
        Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| Error::InvalidConfig(format!("{WORKERS_ENV}={v:?}")))?),
        Err(_) => None,
    };
    let n = flag
        .or(env)
        .or(file)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if n == 0 {
        return Err(Error::InvalidConfig("worker count must be positive".into()));
    }
    Ok(n)
}

fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn configs_dir(output: &Path) -> PathBuf {
    output.join("configs")
}

/// Run every configuration (reusing existing result files unless forced),
/// then write the summary tables.
pub fn run_campaign(campaign: &CampaignConfig, opts: &RunOptions) -> Result<CampaignReport> {
    let workers = resolve_workers(opts.workers, campaign.workers)?;
    let dir = configs_dir(&campaign.output);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
    info!("{} configurations, {} methods, {workers} workers", campaign.configs.len(), campaign.methods.len());

    let mut designs: Vec<((usize, usize, u64), Design)> = Vec::new();
    let mut plan = Vec::new();
    for c in &campaign.configs {
        let file = dir.join(format!("{}.tsv", c.id()));
        if !opts.force && file.exists() {
            let text = fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?;
            let mut parsed = parse_outcomes(&text)?;
            let expected: Vec<String> = campaign.methods.iter().map(|m| m.to_string()).collect();
            if parsed.len() == 1
                && parsed[0].replications == c.replications
                && parsed[0].methods.iter().map(|m| m.method.clone()).collect::<Vec<_>>() == expected
            {
                plan.push((c, file, Some(parsed.remove(0))));
                continue;
            }
            info!("{} is stale, recomputing", file.display());
        }
        let key = (c.m, c.n, c.rho.to_bits());
        if !designs.iter().any(|(k, _)| *k == key) {
            designs.push((key, config_design(c)?));
        }
        plan.push((c, file, None));
    }

    let results = pool.install(|| {
        plan.par_iter()
            .map(|(c, file, existing)| -> Result<(ConfigOutcome, bool)> {
                if let Some(o) = existing {
                    return Ok((o.clone(), false));
                }
                let key = (c.m, c.n, c.rho.to_bits());
                let design = &designs.iter().find(|(k, _)| *k == key).unwrap().1;
                let mut o = run_config_with_design(c, design, &campaign.methods)?;
                write_atomic(file, &outcome_tsv(&o))?;
                info!("{} done", o.id);
                o.records.clear();
                o.records.shrink_to_fit();
                Ok((o, true))
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut report = CampaignReport { outcomes: Vec::new(), computed: Vec::new(), reused: Vec::new(), summary_files: Vec::new() };
    for (o, fresh) in results {
        if fresh { &mut report.computed } else { &mut report.reused }.push(o.id.clone());
        report.outcomes.push(o);
    }
    report.summary_files = write_summaries(&campaign.output, &report.outcomes)?;
    Ok(report)
}

/// Read every per-configuration result below `dir` (its `configs/`
/// subdirectory when present).
pub fn load_outcomes(dir: &Path) -> Result<Vec<ConfigOutcome>> {
    let sub = configs_dir(dir);
    let root = if sub.is_dir() { sub } else { dir.to_path_buf() };
    let entries = fs::read_dir(&root).map_err(|e| Error::io(&root, e))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "tsv"))
        .collect();
    files.sort();
    let mut out = Vec::new();
    for f in files {
        let text = fs::read_to_string(&f).map_err(|e| Error::io(&f, e))?;
        if text.starts_with("config\t") {
            out.extend(parse_outcomes(&text)?);
        }
    }
    if out.is_empty() {
        return Err(Error::Empty(format!("no configuration results in {}", root.display())));
    }
    Ok(out)
}

/// Write the summary tables into `dir` and return their paths.
pub fn write_summaries(dir: &Path, outcomes: &[ConfigOutcome]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let ks = [WorstK::Count(2), WorstK::Count(3), WorstK::All];
    let tables = [
        ("best_q.tsv", best_q_tsv(outcomes)?),
        ("worst_case_by_m.tsv", worst_case_table(outcomes, Grouping::ByM)?),
        ("worst_case_by_m_rho.tsv", worst_case_table(outcomes, Grouping::ByMRho)?),
        ("least_favourable_by_m.tsv", least_favourable_table(outcomes, Grouping::ByM, &ks)?),
        ("least_favourable_by_m_rho.tsv", least_favourable_table(outcomes, Grouping::ByMRho, &ks)?),
    ];
    let mut paths = Vec::new();
    for (name, text) in tables {
        let p = dir.join(name);
        write_atomic(&p, &text)?;
        paths.push(p);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_expansion_and_defaults() {
        let c = CampaignConfig::from_toml("seed = 1\nreplications = 5\n[grid]\nm = [20, 40]\n").unwrap();
        assert_eq!(c.configs.len(), 2 * 3 * 3 * 6);
        assert_eq!(c.methods.len(), 22);
        assert_eq!(c.configs[0].n, 40);
        let c = CampaignConfig::from_toml(
            "seed = 1\nreplications = 5\nmethods = [\"tk\", \"oracle\"]\nsigma2 = \"full-model\"\n[grid]\nm = [8]\nrho = [0.0]\nbeta_type = [3]\np_index = [6]\nc_scale = 2.5\n",
        )
        .unwrap();
        assert_eq!(c.configs.len(), 1);
        assert_eq!(c.configs[0].c_scale, CScale::Fixed(2.5));
        assert!(!c.configs[0].sigma2_known);
        assert!(CampaignConfig::from_toml("seed = 1\nreplications = 5\n[grid]\nm = [8]\nrho = [1.0]\n").is_err());
        assert!(CampaignConfig::from_toml("seed = 1\nreplications = 5\nbogus = 3\n[grid]\nm = [8]\n").is_err());
    }
}
