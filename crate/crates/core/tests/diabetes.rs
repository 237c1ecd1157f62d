use fdrsel::data::{expand, ingest, ExpansionSpec, IngestOptions};
use fdrsel::regress::{estimate_sigma2, forward_path};
use fdrsel::select::{default_rule, msfdr_iterative, penalized_trace, select, select_on_path, stop};
use fdrsel::{Dataset64, PenaltySpec, Sigma2Mode, StopRule};

fn diabetes() -> Dataset64 {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/diabetes.csv");
    ingest(path, "Y", IngestOptions::default()).unwrap()
}

fn quadratic() -> Dataset64 {
    expand(&diabetes(), &ExpansionSpec::full_quadratic(&["SEX"])).unwrap()
}

fn names(ds: &Dataset64, idx: &[usize]) -> Vec<String> {
    idx.iter().map(|&j| ds.names()[j].clone()).collect()
}

#[test]
fn bundled_file_is_standardized() {
    let ds = diabetes();
    assert_eq!((ds.n(), ds.m()), (442, 10));
    for col in ds.columns() {
        let mean: f64 = col.iter().sum::<f64>() / 442.0;
        let len: f64 = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(mean.abs() <= 1e-12);
        assert!((len - 1.0).abs() <= 1e-12);
    }
    assert!(ds.y().iter().sum::<f64>().abs() < 1e-9);
}

#[test]
fn main_effect_entry_order() {
    let ds = diabetes();
    let path = forward_path(&ds, Sigma2Mode::FullModel, 10).unwrap();
    assert_eq!(
        names(&ds, &path.entered),
        ["BMI", "S5", "BP", "S1", "SEX", "S2", "S4", "S6", "S3", "AGE"]
    );
}

#[test]
fn msfdr_main_effects() {
    let ds = diabetes();
    for q in [0.05, 0.10] {
        let r = select(&ds, &PenaltySpec::msfdr(q), StopRule::FirstLocalMin, Sigma2Mode::FullModel).unwrap();
        assert_eq!(names(&ds, &r.selected), ["BMI", "S5", "BP", "S1", "SEX", "S2"]);
    }
}

#[test]
fn quadratic_pool_and_iterative_walkthrough() {
    let ds = quadratic();
    assert_eq!(ds.m(), 64);
    let r = select(&ds, &PenaltySpec::msfdr(0.05), StopRule::FirstLocalMin, Sigma2Mode::FullModel).unwrap();
    let sel = names(&ds, &r.selected);
    assert_eq!(r.k_selected, 7);
    assert_eq!(r.k_with_intercept(), 8);
    assert_eq!(sel.iter().filter(|n| n.contains('*')).count(), 2);
    assert_eq!(sel.iter().filter(|n| !n.contains('*') && !n.contains('^')).count(), 5);

    let it = msfdr_iterative(&ds, 0.05, Sigma2Mode::FullModel).unwrap();
    assert_eq!(it.size_history, vec![5, 8, 8]);
    assert_eq!(it.selected, r.selected);
    assert_eq!(it.iterations, Some(3));
}

#[test]
fn trace_differences_match_recomputation() {
    let ds = quadratic();
    let path = forward_path(&ds, Sigma2Mode::FullModel, ds.max_path_len()).unwrap();
    let trace = penalized_trace(&path, &PenaltySpec::msfdr(0.05), 64).unwrap();
    let s2 = estimate_sigma2(&ds).unwrap();
    for k in 1..trace.len() {
        let a = k as f64 * 0.05 / (65.0 - k as f64 * 0.95);
        let z = -statrs::function::erf::erfc_inv(a) * std::f64::consts::SQRT_2;
        let expect = s2 * (z * z - path.tsq[k - 1]);
        let got = trace[k] - trace[k - 1];
        assert!((got - expect).abs() <= 1e-8 * trace[0], "k = {k}: {got} vs {expect}");
    }
}

#[test]
fn competitor_sizes_report() {
    for (label, ds) in [("main", diabetes()), ("quad", quadratic())] {
        let path = forward_path(&ds, Sigma2Mode::FullModel, ds.max_path_len()).unwrap();
        for spec in ["bh:0.05", "bh:0.1", "msfdr:0.05", "msfdr:0.1", "tsfdr:0.05", "fwd:0.05", "aic", "dj", "fs", "tk", "bm", "gf"] {
            let spec: PenaltySpec = spec.parse().unwrap();
            let sizes: Vec<usize> = StopRule::ALL
                .iter()
                .map(|&rule| select_on_path(&ds, &path, &spec, rule).unwrap().k_selected)
                .collect();
            let d = select_on_path(&ds, &path, &spec, default_rule(&spec)).unwrap().k_selected;
            println!("{label} {:<12} first/global/last = {:?} default = {d}", spec.label(), sizes);
            let tr = penalized_trace(&path, &PenaltySpec::Aic, ds.m()).unwrap();
            assert!(stop(&tr, StopRule::FirstLocalMin) <= stop(&tr, StopRule::GlobalMin));
        }
    }
}
