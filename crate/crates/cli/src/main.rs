use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fdrsel::data::{expand, ingest, penalty_table_csv, selection_report, ExpansionSpec, IngestOptions};
use fdrsel::penalty::{penalty_table, Cap};
use fdrsel::regress::forward_path;
use fdrsel::select::{default_rule, msfdr_iterative_on_path, select_on_path};
use fdrsel::sim::campaign::{load_outcomes, run_campaign, write_summaries, CampaignConfig, RunOptions, WORKERS_ENV};
use fdrsel::sim::summary::{best_q_tsv, least_favourable_table, worst_case_table};
use fdrsel::sim::{Grouping, WorstK};
use fdrsel::{CapReading, Dataset64, PenaltySpec, Sigma2Mode, StopRule};

#[derive(Parser)]
#[command(name = "fdrsel", version, about = "Penalized forward selection with FDR-based penalties")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select a model on a delimited data file and print the report.
    Select(SelectArgs),
    /// Dump α_k, λ_k and the step costs of a penalty.
    PenaltyTable(TableArgs),
    /// Run a simulation campaign described by a TOML file.
    Simulate(SimulateArgs),
    /// Summarize the per-configuration results of a campaign.
    Summarize(SummarizeArgs),
    /// Run the brute-force cross-checks on small random instances.
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct MethodArgs {
    /// Penalty family (msfdr, bh, tsfdr, fwd, aic/cp, dj, fs, tk, bm, gf)
    /// or a full spec such as `msfdr:0.05:cap=0.1`.
    #[arg(long)]
    method: String,
    /// FDR level q (p-to-enter for `fwd`).
    #[arg(long)]
    q: Option<f64>,
    /// Constant of the Birgé–Massart penalty.
    #[arg(long)]
    bm_constant: Option<f64>,
    /// Cap on the MSFDR critical constants.
    #[arg(long)]
    cap: Option<f64>,
    #[arg(long, value_enum, default_value_t = CapArg::Subscript)]
    cap_reading: CapArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum CapArg {
    /// min(α_i/2, C) inside the quantile
    Subscript,
    /// min(α_i, C)/2
    Pvalue,
}

impl MethodArgs {
    fn spec(&self) -> Result<PenaltySpec> {
        let name = self.method.trim().to_ascii_lowercase();
        let needs_level = matches!(name.as_str(), "msfdr" | "bh" | "tsfdr" | "fwd");
        let text = if needs_level {
            format!("{name}:{}", self.q.unwrap_or(0.05))
        } else if name == "bm" {
            self.bm_constant.map_or(name.clone(), |c| format!("bm:{c}"))
        } else {
            if self.q.is_some() && !name.contains(':') {
                log::warn!("--q has no effect on {name}");
            }
            name.clone()
        };
        let mut spec: PenaltySpec = text.parse().with_context(|| format!("method {:?}", self.method))?;
        if let Some(level) = self.cap {
            let PenaltySpec::Msfdr { q, .. } = spec else { bail!("--cap applies to msfdr only") };
            let reading = match self.cap_reading {
                CapArg::Subscript => CapReading::Subscript,
                CapArg::Pvalue => CapReading::PValue,
            };
            spec = PenaltySpec::Msfdr { q, cap: Some(Cap { level, reading }) };
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Args)]
struct SelectArgs {
    /// Comma- or tab-delimited file with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Name of the response column.
    #[arg(long)]
    response: String,
    #[command(flatten)]
    method: MethodArgs,
    /// Stopping rule: first, global or last (default depends on the method).
    #[arg(long)]
    rule: Option<StopRule>,
    /// `known:V` or `full-model`.
    #[arg(long, default_value = "full-model")]
    sigma2: String,
    /// Append pairwise interactions and squares before selecting.
    #[arg(long)]
    expand: bool,
    /// Columns whose square is left out (comma separated).
    #[arg(long, value_delimiter = ',')]
    exclude_square: Vec<String>,
    /// Restrict the expansion to these main effects (comma separated).
    #[arg(long, value_delimiter = ',')]
    main_effects: Vec<String>,
    /// Expand with squares only.
    #[arg(long)]
    no_interactions: bool,
    /// Keep the raw column scale.
    #[arg(long)]
    no_standardize: bool,
    /// Use the iterative p-to-enter computation (msfdr only).
    #[arg(long)]
    iterative: bool,
    /// Also write the report to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TableArgs {
    #[command(flatten)]
    method: MethodArgs,
    /// Candidate pool size.
    #[arg(long)]
    m: usize,
    /// Largest model size (default m).
    #[arg(long)]
    kmax: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the file).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, env = WORKERS_ENV)]
    workers: Option<usize>,
    /// Recompute configurations that already have result files.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct SummarizeArgs {
    /// Campaign output directory.
    #[arg(long = "in")]
    input: PathBuf,
    /// 1, 2, 3, ... or ALL.
    #[arg(long, default_value = "1")]
    worst_k: WorstK,
    #[arg(long, value_enum, default_value_t = GroupArg::M)]
    group: GroupArg,
    /// Rewrite the summary files into this directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum GroupArg {
    M,
    MRho,
    All,
}

#[derive(Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = 500)]
    instances: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn parse_sigma2(s: &str) -> Result<Sigma2Mode<f64>> {
    if s == "full-model" {
        return Ok(Sigma2Mode::FullModel);
    }
    let Some(v) = s.strip_prefix("known:") else { bail!("--sigma2 {s:?}: expected known:V or full-model") };
    let v: f64 = v.parse().with_context(|| format!("--sigma2 value {v:?}"))?;
    if !(v > 0.0 && v.is_finite()) {
        bail!("--sigma2 must be positive, got {v}");
    }
    Ok(Sigma2Mode::Known(v))
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    print!("{text}");
    if let Some(p) = out {
        fs::write(p, text).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn cmd_select(a: SelectArgs) -> Result<()> {
    let spec = a.method.spec()?;
    let rule = a.rule.unwrap_or_else(|| default_rule(&spec));
    let sigma2 = parse_sigma2(&a.sigma2)?;
    let opts = IngestOptions { standardize: !a.no_standardize, ..IngestOptions::default() };
    let mut ds: Dataset64 = ingest(&a.data, &a.response, opts)?;
    if a.expand {
        let es = ExpansionSpec {
            main_effects: a.main_effects.clone(),
            square_excluded: a.exclude_square.clone(),
            include_interactions: !a.no_interactions,
        };
        ds = expand(&ds, &es)?;
    }
    let path = forward_path(&ds, sigma2, ds.max_path_len())?;
    let result = if a.iterative {
        let PenaltySpec::Msfdr { q, cap: None } = spec else { bail!("--iterative needs an uncapped msfdr method") };
        msfdr_iterative_on_path(&ds, &path, q)?
    } else {
        select_on_path(&ds, &path, &spec, rule)?
    };
    emit(&selection_report(&ds, &path, &result, None), a.out.as_deref())
}

fn cmd_table(a: TableArgs) -> Result<()> {
    let spec = a.method.spec()?;
    let table = penalty_table::<f64>(&spec, a.m, a.kmax.unwrap_or(a.m))?;
    emit(&penalty_table_csv(&table), a.out.as_deref())
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let mut campaign = CampaignConfig::load(&a.config)?;
    if let Some(out) = a.out {
        campaign.output = out;
    }
    let report = run_campaign(&campaign, &RunOptions { workers: a.workers, force: a.force })?;
    println!(
        "{} configurations ({} computed, {} reused) -> {}",
        report.outcomes.len(),
        report.computed.len(),
        report.reused.len(),
        campaign.output.display()
    );
    for f in &report.summary_files {
        println!("{}", f.display());
    }
    Ok(())
}

fn cmd_summarize(a: SummarizeArgs) -> Result<()> {
    let outcomes = load_outcomes(&a.input)?;
    let grouping = match a.group {
        GroupArg::M => Grouping::ByM,
        GroupArg::MRho => Grouping::ByMRho,
        GroupArg::All => Grouping::Overall,
    };
    let table = match a.worst_k {
        WorstK::Count(1) => worst_case_table(&outcomes, grouping)?,
        k => least_favourable_table(&outcomes, grouping, &[k])?,
    };
    print!("{table}\n{}", best_q_tsv(&outcomes)?);
    if let Some(dir) = a.out {
        for f in write_summaries(&dir, &outcomes)? {
            log::info!("wrote {}", f.display());
        }
    }
    Ok(())
}

fn cmd_selftest(a: SelftestArgs) -> Result<()> {
    let report = fdrsel::selftest::run_selftest(a.instances, a.seed)?;
    for c in &report.checks {
        println!("{c}");
    }
    if !report.passed() {
        bail!("selftest failed");
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Select(a) => cmd_select(a),
        Command::PenaltyTable(a) => cmd_table(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Summarize(a) => cmd_summarize(a),
        Command::Selftest(a) => cmd_selftest(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("fdrsel: {msg}");
            ExitCode::FAILURE
        }
    }
}
