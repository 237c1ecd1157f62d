use fdrsel::regress::{forward_path, Dataset, Sigma2Mode};
use fdrsel::select::{msfdr_iterative, select, select_size, stop, PreparedMethod};
use fdrsel::selftest::{orthogonal_equivalence, small_instance, P_GRID};
use fdrsel::sim::{random_oracle, theoretical_mspe};
use fdrsel::{PenaltySpec, RandomSource, StopRule};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn design(cols: &[Vec<f64>], subset: &[usize], intercept: bool) -> DMatrix<f64> {
    let n = cols[0].len();
    let k = subset.len() + usize::from(intercept);
    DMatrix::from_fn(n, k, |i, j| match (intercept, j) {
        (true, 0) => 1.0,
        (true, j) => cols[subset[j - 1]][i],
        (false, j) => cols[subset[j]][i],
    })
}

/// Residual of `v` after projecting on the columns of `x`, via SVD.
fn residual(x: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    if x.ncols() == 0 {
        return v.clone();
    }
    let coef = x.clone().svd(true, true).solve(v, 1e-12).unwrap();
    v - x * coef
}

fn rss(cols: &[Vec<f64>], y: &[f64], subset: &[usize], intercept: bool) -> f64 {
    residual(&design(cols, subset, intercept), &DVector::from_column_slice(y)).norm_squared()
}

#[test]
fn forward_steps_match_exhaustive_refit() {
    for seed in 0..500u64 {
        let inst = small_instance(RandomSource::new(seed, 77), 8).unwrap();
        let ds = &inst.dataset;
        let path = forward_path(ds, Sigma2Mode::Known(1.0), ds.max_path_len()).unwrap();
        let scale = path.rss[0];
        for k in 0..path.len() {
            let prefix = &path.entered[..k];
            let (best_j, best) = (0..ds.m())
                .filter(|j| !prefix.contains(j))
                .map(|j| {
                    let mut s = prefix.to_vec();
                    s.push(j);
                    (j, rss(ds.columns(), ds.y(), &s, true))
                })
                .fold((usize::MAX, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
            let mut s = prefix.to_vec();
            s.push(path.entered[k]);
            let chosen = rss(ds.columns(), ds.y(), &s, true);
            assert!((chosen - best).abs() <= 1e-8 * scale, "seed {seed} step {k}: {} vs {best_j}", path.entered[k]);
            assert!((path.rss[k + 1] - chosen).abs() <= 1e-8 * scale);
        }
    }
}

#[test]
fn theoretical_mspe_matches_explicit_hat_matrix() {
    for seed in 0..500u64 {
        let inst = small_instance(RandomSource::new(seed, 78), 8).unwrap();
        let ds = &inst.dataset;
        let path = forward_path(ds, Sigma2Mode::Known(1.0), ds.max_path_len()).unwrap();
        let mu = design(&inst.columns, &(0..ds.m()).collect::<Vec<_>>(), false) * DVector::from_column_slice(&inst.beta);
        let mut explicit = Vec::new();
        for k in 0..=path.len() {
            let x1 = design(&inst.columns, &path.entered[..k], true);
            let g = (x1.transpose() * &x1).try_inverse().unwrap();
            let h = &x1 * g * x1.transpose();
            let i_minus_h = DMatrix::<f64>::identity(ds.n(), ds.n()) - h;
            let bias = (mu.transpose() * i_minus_h * &mu)[(0, 0)];
            let want = (k + 1) as f64 + bias;
            let got = theoretical_mspe(&inst.columns, &inst.beta, &path.entered[..k], 1.0, true).unwrap();
            assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0), "seed {seed} k {k}: {got} vs {want}");
            explicit.push(want);
        }
        let brute = explicit.iter().enumerate().fold((0, f64::INFINITY), |b, (k, &v)| if v < b.1 { (k, v) } else { b }).0;
        assert_eq!(random_oracle(&path, &inst.columns, &inst.beta, 1.0).0, brute, "seed {seed}");
    }
}

#[test]
fn superset_of_support_is_unbiased() {
    let inst = small_instance(RandomSource::new(3, 3), 8).unwrap();
    let support: Vec<usize> = (0..inst.beta.len()).filter(|&j| inst.beta[j] != 0.0).collect();
    let mut superset = support.clone();
    superset.extend((0..inst.beta.len()).filter(|j| !support.contains(j)).take(1));
    for s in [&support, &superset] {
        let v = theoretical_mspe(&inst.columns, &inst.beta, s, 2.0, true).unwrap();
        assert!((v - 2.0 * (s.len() + 1) as f64).abs() < 1e-9);
    }
}

#[test]
fn orthonormal_path_reduces_to_sorted_projections() {
    let cols = fdrsel::selftest::helmert_columns(9, 6);
    let mut s = RandomSource::new(1, 1).normals();
    let y: Vec<f64> = (0..9).map(|_| 3.0 * s.next().unwrap()).collect();
    let ds = Dataset::unnamed(y.clone(), cols.clone(), true).unwrap();
    let path = forward_path(&ds, Sigma2Mode::Known(2.0), 6).unwrap();
    let mut proj: Vec<(usize, f64)> = cols.iter().enumerate().map(|(j, c)| (j, c.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>().powi(2))).collect();
    proj.sort_by(|a, b| b.1.total_cmp(&a.1));
    assert_eq!(path.entered, proj.iter().map(|p| p.0).collect::<Vec<_>>());
    for (t, p) in path.tsq.iter().zip(&proj) {
        assert!((t - p.1 / 2.0).abs() < 1e-10);
    }
}

#[test]
fn exhaustive_orthogonal_equivalence() {
    for q in [0.05, 0.1] {
        let r = orthogonal_equivalence(6, &P_GRID, q).unwrap();
        assert_eq!(r.cases, (1..=6).map(|m| 5usize.pow(m)).sum::<usize>());
        assert_eq!(r.mismatches(), 0, "q = {q}: {:?}", r.examples);
    }
}

#[test]
fn null_response_with_strict_entry_is_empty() {
    let inst = small_instance(RandomSource::new(11, 0), 8).unwrap();
    let mut s = RandomSource::new(12, 0).normals();
    let y: Vec<f64> = (0..inst.dataset.n()).map(|_| s.next().unwrap()).collect();
    let ds = inst.dataset.with_response(y).unwrap();
    let r = select(&ds, &PenaltySpec::FixedAlpha { p: 0.0001 }, StopRule::FirstLocalMin, Sigma2Mode::Known(1.0)).unwrap();
    assert_eq!(r.k_selected, 0);
    assert!(r.selected.is_empty());
}

#[test]
fn iterative_on_pure_noise_stops_after_one_pass() {
    let cols = fdrsel::selftest::helmert_columns(8, 5);
    let mut y = vec![1.0; 8];
    for (j, c) in cols.iter().enumerate() {
        y.iter_mut().zip(c).for_each(|(v, x)| *v += 0.1 * (j + 1) as f64 * x);
    }
    let ds = Dataset::unnamed(y, cols, true).unwrap();
    let r = msfdr_iterative(&ds, 0.05, Sigma2Mode::Known(1.0)).unwrap();
    assert_eq!(r.k_selected, 0);
    assert_eq!(r.iterations, Some(1));
}

#[test]
fn gf_takes_everything_once_half_the_pool_enters() {
    // m = 10, six strong effects: once past m/2 the GF step cost is negative
    let m = 10;
    let n = 40;
    let mut s = RandomSource::new(5, 5).normals();
    let cols: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| s.next().unwrap()).collect()).collect();
    let y: Vec<f64> = (0..n).map(|i| (0..6).map(|j| 3.0 * cols[j][i]).sum::<f64>() + s.next().unwrap()).collect();
    let ds = Dataset::unnamed(y, cols, true).unwrap();
    let path = forward_path(&ds, Sigma2Mode::Known(1.0), m).unwrap();
    let trace = PreparedMethod::<f64>::new(PenaltySpec::Gf, StopRule::GlobalMin, m).unwrap().trace(&path).unwrap();
    assert!(stop(&trace, StopRule::FirstLocalMin) > m / 2);
    for rule in StopRule::ALL {
        assert_eq!(select_size(&path, &PenaltySpec::Gf, rule, m).unwrap(), m, "{rule}");
    }
}

fn random_dataset(seed: u64, m: usize, n: usize) -> Dataset<f64> {
    let mut s = RandomSource::new(seed, 9).normals();
    let cols: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| s.next().unwrap()).collect()).collect();
    let y: Vec<f64> = (0..n).map(|i| 2.0 * cols[0][i] - cols[m - 1][i] + 0.5 * cols[1][i] + s.next().unwrap()).collect();
    let names = (0..m).map(|j| format!("x{j}")).collect();
    Dataset::new(y, cols, names, true).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rules_are_ordered(vals in proptest::collection::vec(-5.0f64..5.0, 1..30)) {
        let mut trace = vec![100.0];
        for v in vals {
            let last = *trace.last().unwrap();
            trace.push(last + v);
        }
        let a = stop(&trace, StopRule::FirstLocalMin);
        let b = stop(&trace, StopRule::GlobalMin);
        let c = stop(&trace, StopRule::LastCrossing);
        prop_assert!(a <= b && b <= c, "{a} {b} {c}");
    }

    #[test]
    fn column_order_does_not_change_the_selection(seed in 0u64..1000, shift in 1usize..6) {
        let ds = random_dataset(seed, 6, 30);
        let perm: Vec<usize> = (0..6).map(|j| (j + shift) % 6).collect();
        let cols: Vec<Vec<f64>> = perm.iter().map(|&j| ds.column(j).to_vec()).collect();
        let names: Vec<String> = perm.iter().map(|&j| ds.names()[j].clone()).collect();
        let permuted = Dataset::new(ds.y().to_vec(), cols, names, true).unwrap();
        for spec in [PenaltySpec::msfdr(0.05), PenaltySpec::Aic, PenaltySpec::Tk] {
            let a = select(&ds, &spec, StopRule::FirstLocalMin, Sigma2Mode::Known(1.0)).unwrap();
            let b = select(&permuted, &spec, StopRule::FirstLocalMin, Sigma2Mode::Known(1.0)).unwrap();
            let na: Vec<&String> = a.selected.iter().map(|&j| &ds.names()[j]).collect();
            let nb: Vec<&String> = b.selected.iter().map(|&j| &permuted.names()[j]).collect();
            prop_assert_eq!(na, nb);
        }
    }

    #[test]
    fn scaling_response_and_sigma_together_is_invisible(seed in 0u64..1000, scale in 0.01f64..100.0) {
        let ds = random_dataset(seed, 7, 25);
        let scaled = ds.with_response(ds.y().iter().map(|v| v * scale).collect()).unwrap();
        for spec in [PenaltySpec::msfdr(0.1), PenaltySpec::Bh { q: 0.05 }, PenaltySpec::Dj] {
            let a = select(&ds, &spec, StopRule::GlobalMin, Sigma2Mode::Known(1.0)).unwrap();
            let b = select(&scaled, &spec, StopRule::GlobalMin, Sigma2Mode::Known(scale * scale)).unwrap();
            prop_assert_eq!(a.selected, b.selected);
        }
    }

    #[test]
    fn single_precision_follows_double(seed in 0u64..200) {
        let ds = random_dataset(seed, 5, 40);
        let cols32: Vec<Vec<f32>> = ds.columns().iter().map(|c| c.iter().map(|&v| v as f32).collect()).collect();
        let y32: Vec<f32> = ds.y().iter().map(|&v| v as f32).collect();
        let ds32 = fdrsel::Dataset32::unnamed(y32, cols32, true).unwrap();
        let p64 = forward_path(&ds, Sigma2Mode::Known(1.0), 3).unwrap();
        let p32 = forward_path(&ds32, Sigma2Mode::Known(1.0f32), 3).unwrap();
        for (a, b) in p64.rss.iter().zip(&p32.rss) {
            prop_assert!((a - f64::from(*b)).abs() <= 1e-3 * a.max(1.0));
        }
    }
}
