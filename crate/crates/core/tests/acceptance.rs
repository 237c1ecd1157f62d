//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! The binary always exits successfully once every check has run. A FAIL line
//! is a reported result, not a crash.

use std::time::Instant;

use fdrsel::data::{expand, ingest, ExpansionSpec, IngestOptions};
use fdrsel::penalty::{penalty_factor, penalty_table, step_alpha};
use fdrsel::regress::{forward_path, Dataset};
use fdrsel::select::{default_rule, msfdr_iterative, select_on_path, select_size};
use fdrsel::selftest::{orthogonal_equivalence, small_instance, P_GRID};
use fdrsel::sim::campaign::{run_campaign, CampaignConfig, RunOptions};
use fdrsel::sim::{minimax_summary, random_oracle, theoretical_mspe, ConfigOutcome, Grouping, SimMethod, WorstK};
use fdrsel::stats::inverse_normal_cdf;
use fdrsel::{Dataset64, PenaltySpec, RandomSource, Sigma2Mode, StopRule};
use nalgebra::{DMatrix, DVector};

struct Report {
    passed: usize,
    failed: usize,
}

impl Report {
    fn line(&mut self, criterion: &str, ok: bool, detail: String) {
        if ok {
            self.passed += 1;
        } else {
            self.failed += 1;
        }
        println!("{} criterion {criterion}: {detail}", if ok { "PASS" } else { "FAIL" });
    }
}

fn diabetes() -> Dataset64 {
    ingest(concat!(env!("CARGO_MANIFEST_DIR"), "/data/diabetes.csv"), "Y", IngestOptions::default()).unwrap()
}

fn sizes(ds: &Dataset64, specs: &[(&str, usize)]) -> (bool, Vec<String>) {
    let path = forward_path(ds, Sigma2Mode::FullModel, ds.max_path_len()).unwrap();
    let mut all = true;
    let mut parts = Vec::new();
    for &(text, want) in specs {
        let spec: PenaltySpec = text.parse().unwrap();
        let got = select_on_path(ds, &path, &spec, default_rule(&spec)).unwrap().k_selected;
        all &= got == want;
        parts.push(if got == want { format!("{text}={got}") } else { format!("{text}={got} (want {want})") });
    }
    (all, parts)
}

fn c1(r: &mut Report) {
    let spec = PenaltySpec::msfdr(0.05);
    let got: Vec<String> = [(1, 2), (5, 2), (8, 2)]
        .iter()
        .map(|&(i, sig)| {
            let a: f64 = step_alpha(&spec, i, 64).unwrap();
            let digits = sig - 1 - a.log10().floor() as i32;
            format!("{a:.*}", digits.max(0) as usize)
        })
        .collect();
    let ok = got == ["0.00078", "0.0041", "0.0070"];
    r.line("1 (alpha walkthrough, m=64)", ok, format!("alpha_1,5,8 = {}", got.join(", ")));
}

fn c2(r: &mut Report) {
    let ds = diabetes();
    let path = forward_path(&ds, Sigma2Mode::FullModel, 10).unwrap();
    let order: Vec<&str> = path.entered.iter().map(|&j| ds.names()[j].as_str()).collect();
    let want = ["BMI", "S5", "BP", "S1", "SEX", "S2", "S4", "S6", "S3", "AGE"];
    let specs = [
        ("msfdr:0.05", 6),
        ("msfdr:0.1", 6),
        ("bh:0.05", 6),
        ("bh:0.1", 6),
        ("aic", 6),
        ("dj", 6),
        ("fwd:0.05", 6),
        ("tk", 8),
        ("bm", 3),
        ("fs", 10),
    ];
    let (ok, parts) = sizes(&ds, &specs);
    let order_ok = order == want;
    r.line(
        "2 (diabetes main effects)",
        ok && order_ok,
        format!("entry order {}; {}", if order_ok { "matches" } else { "differs" }, parts.join(" ")),
    );
}

fn c3(r: &mut Report) {
    let ds = expand(&diabetes(), &ExpansionSpec::full_quadratic(&["SEX"])).unwrap();
    let ms = fdrsel::select::select(&ds, &PenaltySpec::msfdr(0.05), StopRule::FirstLocalMin, Sigma2Mode::FullModel).unwrap();
    let names: Vec<&str> = ms.selected.iter().map(|&j| ds.names()[j].as_str()).collect();
    let inter = names.iter().filter(|n| n.contains('*')).count();
    let main = names.iter().filter(|n| !n.contains('*') && !n.contains('^')).count();
    let it = msfdr_iterative(&ds, 0.05, Sigma2Mode::FullModel).unwrap();
    let ms_ok = ds.m() == 64 && ms.k_selected == 7 && main == 5 && inter == 2 && it.size_history == [5, 8, 8];
    let specs = [("dj", 7), ("tk", 7), ("aic", 16), ("fwd:0.05", 13), ("fs", 13), ("bm", 2)];
    let (ok, parts) = sizes(&ds, &specs);
    r.line(
        "3 (diabetes quadratic pool)",
        ms_ok && ok,
        format!(
            "m={} msfdr:0.05={} ({main} main + {inter} interactions) iterative sizes {:?}; {}",
            ds.m(),
            ms.k_selected,
            it.size_history,
            parts.join(" ")
        ),
    );
}

fn campaign(m: usize, methods: &[&str]) -> Vec<ConfigOutcome> {
    let dir = tempfile::tempdir().unwrap();
    let list: Vec<String> = methods.iter().map(|s| format!("{s:?}")).collect();
    let text = format!(
        "seed = 2009\nreplications = 1000\noutput = {:?}\nsigma2 = \"known\"\nmethods = [{}]\n[grid]\nm = [{m}]\n",
        dir.path().display().to_string(),
        list.join(", ")
    );
    let cfg = CampaignConfig::from_toml(&text).unwrap();
    run_campaign(&cfg, &RunOptions::default()).unwrap().outcomes
}

fn method_names(specs: &[&str]) -> Vec<String> {
    specs
        .iter()
        .map(|s| match s.parse::<SimMethod>().unwrap() {
            SimMethod::Penalized { spec, .. } if !s.contains('@') => SimMethod::with_default_rule(spec).to_string(),
            other => other.to_string(),
        })
        .collect()
}

fn worst1(outcomes: &[ConfigOutcome], method: &str) -> (f64, f64) {
    let rows = minimax_summary(outcomes, WorstK::Count(1), Grouping::Overall).unwrap();
    let row = rows.iter().find(|r| r.method == method).unwrap();
    (row.value, row.se.unwrap_or(f64::NAN))
}

fn violations(outcomes: &[ConfigOutcome]) -> (usize, usize) {
    let v = outcomes.iter().flat_map(|o| &o.methods).map(|m| m.violations).sum();
    (v, outcomes.iter().map(|o| o.replications).sum())
}

fn c4_c5_c6(r: &mut Report) {
    let t = Instant::now();
    let specs = ["oracle", "msfdr:0.05", "tk", "fwd:0.05", "dj", "fs", "bm", "aic"];
    let names = method_names(&specs);
    let m20 = campaign(20, &names.iter().map(String::as_str).collect::<Vec<_>>());
    let w: Vec<(f64, f64)> = names.iter().map(|n| worst1(&m20, n)).collect();
    let (ms, tk, fwd, dj, fs, bm, cp) = (w[1].0, w[2].0, w[3].0, w[4].0, w[5].0, w[6].0, w[7].0);
    let ordering = ms <= tk && tk < fwd.min(dj) && fwd.max(dj) < fs.min(bm).min(cp);
    let bands = (1.32..=1.62).contains(&ms) && (1.51..=1.81).contains(&tk) && cp > 3.5;
    let listing: Vec<String> = specs[1..].iter().zip(&w[1..]).map(|(s, (v, se))| format!("{s}={v:.3}({se:.3})")).collect();
    r.line(
        "4 (m=20 worst-case relative loss, 54 configs x 1000 reps)",
        bands && ordering,
        format!(
            "{}; bands msfdr [1.32,1.62] tk [1.51,1.81] cp>3.5 {}; ordering {} ({:.1}s)",
            listing.join(" "),
            if bands { "met" } else { "missed" },
            if ordering { "holds" } else { "violated" },
            t.elapsed().as_secs_f64()
        ),
    );
    if let Some(o) = m20.iter().find(|o| o.id == "m20_n40_rho0_b3_p6") {
        let cp = o.method(&names[7]).unwrap().relative_loss;
        let msl = o.method(&names[1]).unwrap().relative_loss;
        r.line(
            "4b (m=20 rho=0 type 3 p6: Cp loses more than MSFDR)",
            cp > msl,
            format!("Cp {cp:.3} vs MSFDR {msl:.3}"),
        );
    }

    let t = Instant::now();
    let specs40 = ["oracle", "msfdr:0.05", "tk", "aic"];
    let names40 = method_names(&specs40);
    let m40 = campaign(40, &names40.iter().map(String::as_str).collect::<Vec<_>>());
    let (ms40, se40) = worst1(&m40, &names40[1]);
    let (tk40, _) = worst1(&m40, &names40[2]);
    let (cp40, _) = worst1(&m40, &names40[3]);
    r.line(
        "5 (m=40 MSFDR worst case in [1.57,1.87])",
        (1.57..=1.87).contains(&ms40),
        format!("msfdr:0.05={ms40:.3}({se40:.3}) tk={tk40:.3} aic={cp40:.3} ({:.1}s)", t.elapsed().as_secs_f64()),
    );

    let (v20, n20) = violations(&m20);
    let (v40, n40) = violations(&m40);
    r.line(
        "6 (no method beats the random oracle)",
        v20 + v40 == 0,
        format!("{} violations over {} replications", v20 + v40, n20 + n40),
    );
}

fn c7(r: &mut Report) {
    let e = orthogonal_equivalence(6, &P_GRID, 0.05).unwrap();
    r.line(
        "7 (orthogonal equivalence, m<=6)",
        e.msfdr_mismatches == 0 && e.bh_mismatches == 0,
        format!("{} patterns; msfdr/step-down {} mismatches, bh/step-up {} mismatches", e.cases, e.msfdr_mismatches, e.bh_mismatches),
    );
}

fn design(cols: &[Vec<f64>], subset: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(cols[0].len(), subset.len() + 1, |i, j| if j == 0 { 1.0 } else { cols[subset[j - 1]][i] })
}

fn hat_residual(x: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    let g = (x.transpose() * x).try_inverse().unwrap();
    v - x * (g * (x.transpose() * v))
}

fn c8(r: &mut Report) {
    let (mut step_gap, mut mspe_gap, mut oracle_miss) = (0.0f64, 0.0f64, 0usize);
    for seed in 0..500u64 {
        let inst = small_instance(RandomSource::new(seed, 0xacce), 8).unwrap();
        let ds: &Dataset<f64> = &inst.dataset;
        let path = forward_path(ds, Sigma2Mode::Known(1.0), ds.max_path_len()).unwrap();
        let y = DVector::from_column_slice(ds.y());
        for k in 0..path.len() {
            let prefix = &path.entered[..k];
            let rss_with = |j: usize| {
                let mut s = prefix.to_vec();
                s.push(j);
                hat_residual(&design(ds.columns(), &s), &y).norm_squared()
            };
            let best = (0..ds.m()).filter(|j| !prefix.contains(j)).map(rss_with).fold(f64::INFINITY, f64::min);
            let chosen = rss_with(path.entered[k]);
            step_gap = step_gap.max((chosen - best).abs().max((path.rss[k + 1] - chosen).abs()) / path.rss[0]);
        }
        let all: Vec<usize> = (0..ds.m()).collect();
        let mu = DMatrix::from_fn(ds.n(), ds.m(), |i, j| inst.columns[all[j]][i]) * DVector::from_column_slice(&inst.beta);
        let mut curve = Vec::new();
        for k in 0..=path.len() {
            let want = (k + 1) as f64 + hat_residual(&design(&inst.columns, &path.entered[..k]), &mu).norm_squared();
            let got = theoretical_mspe(&inst.columns, &inst.beta, &path.entered[..k], 1.0, true).unwrap();
            mspe_gap = mspe_gap.max((got - want).abs() / want.max(1.0));
            curve.push(want);
        }
        let brute = curve.iter().enumerate().fold((0, f64::INFINITY), |b, (k, &v)| if v < b.1 { (k, v) } else { b }).0;
        oracle_miss += usize::from(random_oracle(&path, &inst.columns, &inst.beta, 1.0).0 != brute);
    }
    r.line(
        "8 (brute force, 500 instances m<=8)",
        step_gap <= 1e-8 && mspe_gap <= 1e-9 && oracle_miss == 0,
        format!("step refit gap {step_gap:.2e}, MSPE gap {mspe_gap:.2e}, oracle mismatches {oracle_miss}"),
    );
}

fn sign_changes(a: &[f64], b: &[f64]) -> usize {
    let s: Vec<bool> = a.iter().zip(b).map(|(x, y)| x > y).collect();
    s.windows(2).filter(|w| w[0] != w[1]).count()
}

fn c9(r: &mut Report) {
    let mut tk_fs = 0.0f64;
    for m in [2, 10, 64, 160, 1000] {
        for k in 1..=m {
            let fs: f64 = penalty_factor(&PenaltySpec::Fs, k, m).unwrap();
            let tk: f64 = penalty_factor(&PenaltySpec::Tk, k, m).unwrap();
            tk_fs = tk_fs.max((tk - 2.0 * fs).abs() / tk.abs().max(1.0));
        }
    }
    let crossings: Vec<usize> = [20, 80, 160]
        .iter()
        .map(|&m| {
            let bh = penalty_table::<f64>(&PenaltySpec::Bh { q: 0.05 }, m, m).unwrap();
            let ms = penalty_table::<f64>(&PenaltySpec::msfdr(0.05), m, m).unwrap();
            sign_changes(&bh.step_cost, &ms.step_cost)
        })
        .collect();
    let ms = penalty_table::<f64>(&PenaltySpec::msfdr(0.05), 160, 160).unwrap();
    let tk = penalty_table::<f64>(&PenaltySpec::Tk, 160, 160).unwrap();
    let cross = (0..160).find(|&k| ms.step_cost[k] > tk.step_cost[k]).map_or(0, |k| k + 1);
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/normal_quantile_ref.csv")).unwrap();
    let (mut points, mut qerr) = (0usize, 0.0f64);
    for line in text.lines().skip(1) {
        let (p, z) = line.split_once(',').unwrap();
        let (p, z): (f64, f64) = (p.parse().unwrap(), z.parse().unwrap());
        qerr = qerr.max((inverse_normal_cdf::<f64>(p).unwrap() - z).abs() / z.abs().max(1.0));
        points += 1;
    }
    let ok = tk_fs <= 1e-12 && crossings == [1, 1, 1] && (20..=36).contains(&cross) && points == 10_000 && qerr <= 1e-9;
    r.line(
        "9 (penalty algebra)",
        ok,
        format!(
            "|tk-2fs| {tk_fs:.1e}; bh/msfdr crossings {crossings:?} for m=20,80,160; msfdr/tk step-cost crossing at k={cross} (m=160); quantile error {qerr:.1e} on {points} points"
        ),
    );
}

fn c10(r: &mut Report) {
    let (m, n) = (10, 40);
    let mut s = RandomSource::new(5, 5).normals();
    let cols: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| s.next().unwrap()).collect()).collect();
    let y: Vec<f64> = (0..n).map(|i| (0..6).map(|j| 3.0 * cols[j][i]).sum::<f64>() + s.next().unwrap()).collect();
    let ds = Dataset::unnamed(y, cols, true).unwrap();
    let path = forward_path(&ds, Sigma2Mode::Known(1.0), m).unwrap();
    let got: Vec<usize> = StopRule::ALL.iter().map(|&rule| select_size(&path, &PenaltySpec::Gf, rule, m).unwrap()).collect();
    r.line(
        "10 (GF degeneracy)",
        got.iter().all(|&k| k == m),
        format!("m={m}, 6 strong effects; GF sizes under first/global/last = {got:?}"),
    );
}

fn main() {
    let mut r = Report { passed: 0, failed: 0 };
    c1(&mut r);
    c2(&mut r);
    c3(&mut r);
    c4_c5_c6(&mut r);
    c7(&mut r);
    c8(&mut r);
    c9(&mut r);
    c10(&mut r);
    println!("acceptance: {} passed, {} failed", r.passed, r.failed);
}
