use lsep::empirical_process::{long_run_covariance, CovarianceMc, CovarianceSpec};
use lsep::estimators::{edf_reference, kernel_regression, local_edf};
use lsep::function_class::Base;
use lsep::innovation::Innovation;
use lsep::kernel::Kernel;
use lsep::poly::Poly;
use lsep::process_models::{simulate_path, simulate_path_rep, ProcessModel, RecursiveModel};

fn tvar() -> ProcessModel {
    RecursiveModel::tvar(Poly::linear(0.1, 0.6), 1.0, Innovation::Normal).into()
}

#[test]
fn regression_recovers_a_trend_under_dependent_noise() {
    let n = 20_000;
    let noise = simulate_path(&RecursiveModel::ar1(0.5).into(), n, 4, None).unwrap();
    let g = |u: f64| (2.0 * std::f64::consts::PI * u).sin();
    let y: Vec<f64> = (1..=n).map(|i| g(i as f64 / n as f64) + noise.value(i)).collect();
    let grid: Vec<f64> = (1..20).map(|k| k as f64 / 20.0).collect();
    let r = kernel_regression(&y, &Kernel::Epanechnikov, 0.1, &grid, Some(&g)).unwrap();
    assert!(r.sup_error().unwrap() < 0.15, "{:?}", r.sup_error());
    // the reference is the kernel-smoothed trend, close to the trend itself
    for (v, m) in r.v.iter().zip(r.reference.as_ref().unwrap()) {
        assert!((g(*v) - m).abs() < 0.1);
    }
}

#[test]
fn local_edf_tracks_the_frozen_law() {
    let model = tvar();
    let xs = [-1.5, -0.5, 0.0, 0.5, 1.5];
    let truth = edf_reference(&model, &xs, 0.5, 200_000, 9).unwrap();
    let reps = 50;
    let mut avg = [0.0; 5];
    for r in 0..reps {
        let p = simulate_path_rep(&model, 4000, 3, r, None).unwrap();
        let e = local_edf(&p.values, &Kernel::Epanechnikov, 0.2, &xs, 0.5).unwrap();
        for (a, v) in avg.iter_mut().zip(&e.values) {
            *a += v / reps as f64;
        }
    }
    for (a, t) in avg.iter().zip(&truth) {
        assert!((a - t).abs() < 0.02, "{a} vs {t}");
    }
}

#[test]
fn global_long_run_variance_of_ar1() {
    // sum_j Cov(X_0, X_j) = 1 / (1 - a)^2 for unit innovations
    let m: ProcessModel = RecursiveModel::ar1(0.5).into();
    let rec = long_run_covariance(
        &Base::Identity,
        &Base::Identity,
        &m,
        &CovarianceSpec::global(),
        CovarianceMc { reps: 100, length: 4000 },
        8,
    )
    .unwrap();
    assert!((rec.sigma - 4.0).abs() < 4.0 * rec.mc_se.max(0.05), "{} +- {}", rec.sigma, rec.mc_se);
    assert!(!rec.tail_flag);
}
