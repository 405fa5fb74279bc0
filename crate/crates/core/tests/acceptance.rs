//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;

use lsep::dependence::{analytic_decay_bound, estimate_delta_mc, DecayProfile};
use lsep::harness::{run_experiment, ExperimentConfig, ExperimentReport};
use lsep::innovation::Innovation;
use lsep::poly::Poly;
use lsep::process_models::{LinearModel, ProcessModel, RecursiveModel, Template};
use lsep::rng;
use lsep::seminorm::{truncate, v_closed_form, v_norm};
use rand::Rng;

struct Line {
    id: u32,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn load(name: &str) -> ExperimentConfig {
    let path = format!("{}/../../configs/{name}.toml", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    ExperimentConfig::from_toml(&text).unwrap_or_else(|e| panic!("{path}: {e}"))
}

fn primary_ok(r: &ExperimentReport) -> bool {
    let prim: Vec<_> = r.verdicts.iter().filter(|v| !v.control).collect();
    !prim.is_empty() && prim.iter().all(|v| v.pass)
}

fn failed_checks(r: &ExperimentReport) -> String {
    let bad: Vec<String> = r
        .verdicts
        .iter()
        .filter(|v| !v.control && !v.pass)
        .map(|v| format!("[{}: {:.4} vs {:.4}]", v.criterion, v.statistic, v.threshold))
        .collect();
    if bad.is_empty() {
        String::new()
    } else {
        format!(" failing {}", bad.join(" "))
    }
}

fn row_value(r: &ExperimentReport, group: &str, key: &str) -> Option<f64> {
    r.rows.iter().find(|row| row.group == group).and_then(|row| row.get(key))
}

fn criterion_1() -> Line {
    let ar: ProcessModel = RecursiveModel::ar1(0.5).into();
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for k in 1..=8usize {
        let est = estimate_delta_mc(&ar, 200, k, 2.0, 20_000, None, 1).expect("delta estimate");
        let exact = 0.5f64.powi(k as i32) * 2f64.sqrt();
        let z = (est.value - exact).abs() / est.mc_se;
        worst = worst.max(z);
        ok &= z <= 4.0;
    }
    let models: Vec<ProcessModel> = vec![
        RecursiveModel::ar1(0.5).into(),
        RecursiveModel::tvar(Poly::linear(0.1, 0.6), 1.0, Innovation::StudentT { df: 8.0 }).into(),
        LinearModel::new(
            Poly::constant(1.0),
            Poly::linear(0.5, 0.5),
            Template::Geometric { scale: 1.0, rho: 0.6 },
            Innovation::Normal,
        )
        .into(),
        LinearModel {
            truncation: Some(400),
            ..LinearModel::new(
                Poly::constant(1.0),
                Poly::linear(1.0, -0.5),
                Template::Polynomial { scale: 1.0, alpha: 2.5 },
                Innovation::Uniform { half_width: 1.0 },
            )
        }
        .into(),
    ];
    let mut dominated = true;
    for (mi, m) in models.iter().enumerate() {
        let bound = analytic_decay_bound(m, 1.0).expect("decay bound");
        for k in 1..=6usize {
            let est = estimate_delta_mc(m, 400, k, 2.0, 2000, None, 10 + mi as u64).expect("delta estimate");
            dominated &= est.value <= bound.delta(k as u64);
        }
    }
    Line {
        id: 1,
        title: "dependence-measure oracle and analytic domination",
        pass: ok && dominated,
        detail: format!("max |z| = {worst:.2} (<= 4), domination on recursive and linear models: {dominated}"),
    }
}

fn criterion_2() -> Line {
    let profiles = [
        DecayProfile::Geometric { c: 1.0, rho: 0.5 },
        DecayProfile::Geometric { c: 5.0, rho: 0.9 },
        DecayProfile::Geometric { c: 0.05, rho: 0.2 },
        DecayProfile::Polynomial { c: 1.0, alpha: 2.0 },
        DecayProfile::Polynomial { c: 0.2, alpha: 1.5 },
        DecayProfile::Polynomial { c: 20.0, alpha: 3.0 },
    ];
    let mut bad = Vec::new();
    for p in &profiles {
        for i in 0..40 {
            let x = 10f64.powf(-4.0 + 4.0 * i as f64 / 39.0);
            // linear scan for q*
            let mut q = 1u64;
            while p.beta(q) > q as f64 * x {
                q += 1;
            }
            if q != p.q_star(x) || !p.q_star_closed_form(x).contains(q as f64) {
                bad.push(format!("q* {p:?} x={x:.2e}"));
            }
            // r(delta) as the largest delta/Q with Q the first beta(Q) <= delta
            let mut qq = 1u64;
            while p.beta(qq) > x {
                qq += 1;
            }
            let r = x / qq as f64;
            if (r - p.r_of_delta(x)).abs() > 1e-15 * r || !p.r_closed_form(x).contains(r) {
                bad.push(format!("r {p:?} delta={x:.2e}"));
            }
            for d in [0.5, 1.0, 3.0] {
                let mut v = x;
                let mut k = 1u64;
                while d * p.delta(k) > x {
                    v += x;
                    k += 1;
                }
                v += d * p.beta(k);
                let lib = v_norm(x, d, p);
                if (v - lib).abs() > 1e-12 * v || !v_closed_form(x, d, p).contains(v) {
                    bad.push(format!("V {p:?} f={x:.2e} d={d}"));
                }
            }
        }
    }
    let half = DecayProfile::Geometric { c: 1.0, rho: 0.5 };
    let mut geo_exact = true;
    for q in 1..=60u64 {
        let direct: f64 = (q..q + 1100).map(|j| 0.5f64.powi(j as i32)).sum();
        geo_exact &= half.beta(q) == direct;
    }
    let g9 = DecayProfile::Geometric { c: 2.0, rho: 0.9 };
    let mut geo_rel: f64 = 0.0;
    for q in 1..=50u64 {
        let direct: f64 = (q..q + 2000).rev().map(|j| 2.0 * 0.9f64.powi(j as i32)).sum();
        geo_rel = geo_rel.max((g9.beta(q) - direct).abs() / direct);
    }
    let zeta2 = (DecayProfile::Polynomial { c: 1.0, alpha: 2.0 }.beta(1) - PI * PI / 6.0).abs();
    let pass = bad.is_empty() && geo_exact && geo_rel < 1e-14 && zeta2 <= 1e-9;
    Line {
        id: 2,
        title: "calculus closed forms",
        pass,
        detail: format!(
            "{} sandwich/search mismatches, geometric beta exact: {geo_exact}, rel err {geo_rel:.1e}, |beta(1) - pi^2/6| = {zeta2:.1e}{}",
            bad.len(),
            bad.first().map(|b| format!(" first: {b}")).unwrap_or_default()
        ),
    }
}

fn criterion_3() -> Line {
    // dyadic inputs: every sum below is exact in binary floating point
    let dy = |k: i64| k as f64 / 1_048_576.0;
    let mut r = rng::stream(2024, rng::DRAWS, 0);
    let mut viol_i = 0usize;
    for _ in 0..100_000 {
        let mk: i64 = r.random_range(1..8 << 20);
        let m = dy(mk);
        let k1: i64 = r.random_range(-mk..=mk);
        let rest = mk - k1.abs();
        let x1 = dy(k1);
        let x2 = dy(r.random_range(-rest..=rest));
        let x3 = dy(r.random_range(-(40i64 << 20)..=(40 << 20)));
        let lhs = (truncate(x1 + x2 + x3, m).0 - truncate(x1, m).0 - truncate(x2, m).0).abs();
        if lhs > x3.abs().min(2.0 * m) {
            viol_i += 1;
        }
    }
    let mut viol_ii = 0usize;
    for _ in 0..100_000 {
        let m = dy(r.random_range(1..8 << 20));
        let x = dy(r.random_range(-(40i64 << 20)..=(40 << 20)));
        let y = x.abs() + dy(r.random_range(0..10 << 20));
        let (t, v) = truncate(x, m);
        let bound = if y > m { y } else { 0.0 };
        if v.abs() > bound || t + v != x {
            viol_ii += 1;
        }
    }
    Line {
        id: 3,
        title: "truncation inequalities on random triples and pairs",
        pass: viol_i == 0 && viol_ii == 0,
        detail: format!("violations on 1e5 triples: {viol_i}, on 1e5 pairs: {viol_ii}"),
    }
}

fn report_line(id: u32, title: &'static str, r: &ExperimentReport) -> Line {
    Line { id, title, pass: primary_ok(r), detail: format!("{}{}", r.name.as_deref().unwrap_or(&r.kind), failed_checks(r)) }
}

/// Long-run variance of |X| for a centered Gaussian AR(1) with coefficient a
/// and unit innovations, times int K^2.
fn mad_oracle(a: f64, k_sq: f64) -> f64 {
    let s2 = 1.0 / (1.0 - a * a);
    let cov = |r: f64| 2.0 * s2 / PI * ((1.0 - r * r).sqrt() + r * r.asin() - 1.0);
    let mut sum = cov(1.0);
    for j in 1..200 {
        sum += 2.0 * cov(a.powi(j));
    }
    sum * k_sq
}

fn main() -> ExitCode {
    let started = std::time::Instant::now();
    let mut lines = vec![criterion_1(), criterion_2(), criterion_3()];

    let names = [
        "variance_suite",
        "rate_regression",
        "rate_density",
        "negative_control_rate",
        "clt_iid",
        "clt_ar1",
        "clt_mad",
        "clt_edf",
        "tail_ar1",
        "bahadur_tvar",
        "bracket_tvar",
    ];
    let reports: Vec<(&str, ExperimentReport)> = names
        .iter()
        .map(|n| (*n, run_experiment(&load(n)).unwrap_or_else(|e| panic!("{n}: {e}"))))
        .collect();
    let get = |n: &str| &reports.iter().find(|(k, _)| *k == n).expect("report").1;

    lines.push(report_line(4, "variance bound on the built-in suite", get("variance_suite")));

    let neg = get("negative_control_rate");
    let rate_ok = primary_ok(get("rate_regression")) && primary_ok(get("rate_density"));
    lines.push(Line {
        id: 5,
        title: "rate property with 1/n control",
        pass: rate_ok && !neg.passed(),
        detail: format!(
            "regression and density stable: {rate_ok}, 1/n control fails: {}{}{}",
            !neg.passed(),
            failed_checks(get("rate_regression")),
            failed_checks(get("rate_density"))
        ),
    });

    let k_sq = lsep::kernel::Kernel::Epanechnikov.integral_sq();
    let ar_var = row_value(get("clt_ar1"), "clt", "variance").unwrap_or(f64::NAN);
    let ar_rel = (ar_var - 4.8).abs() / 4.8;
    let mad_sigma = mad_oracle(0.1 + 0.6 * 0.5, k_sq);
    let mad_var = row_value(get("clt_mad"), "clt", "variance").unwrap_or(f64::NAN);
    let mad_rel = (mad_var - mad_sigma).abs() / mad_sigma;
    let clt_ok = ["clt_iid", "clt_ar1", "clt_mad", "clt_edf"].iter().all(|n| primary_ok(get(n)));
    lines.push(Line {
        id: 6,
        title: "central limit theorem",
        pass: clt_ok && ar_rel <= 0.15 && mad_rel <= 0.15,
        detail: format!(
            "four cases pass: {clt_ok}, AR(1) variance {ar_var:.3} vs 4.8 ({:.1}%), MAD variance {mad_var:.3} vs arcsin oracle {mad_sigma:.3} ({:.1}%){}{}{}{}",
            100.0 * ar_rel,
            100.0 * mad_rel,
            failed_checks(get("clt_iid")),
            failed_checks(get("clt_ar1")),
            failed_checks(get("clt_mad")),
            failed_checks(get("clt_edf"))
        ),
    });

    lines.push(report_line(7, "Bernstein envelope", get("tail_ar1")));
    lines.push(report_line(8, "Bahadur representation", get("bahadur_tvar")));
    lines.push(report_line(9, "EDF brackets", get("bracket_tvar")));

    let mut replay_bad = Vec::new();
    let mut controls = 0usize;
    let mut controls_bad = Vec::new();
    for (n, r) in &reports {
        let again = r.replay().unwrap_or_else(|e| panic!("replay {n}: {e}"));
        if again.to_json().expect("json") != r.to_json().expect("json") {
            replay_bad.push(*n);
        }
        for v in r.verdicts.iter().filter(|v| v.control) {
            controls += 1;
            if !v.pass {
                controls_bad.push(format!("{n}: {}", v.criterion));
            }
        }
    }
    lines.push(Line {
        id: 10,
        title: "determinism and self-falsification",
        pass: replay_bad.is_empty() && controls_bad.is_empty() && controls > 0 && !neg.passed(),
        detail: format!(
            "{} reports replayed, differing: {:?}; {controls} negative controls, not failing: {:?}",
            reports.len(),
            replay_bad,
            controls_bad
        ),
    });

    let mut all = true;
    for l in &lines {
        all &= l.pass;
        println!("{} {:>2} {}: {}", if l.pass { "PASS" } else { "FAIL" }, l.id, l.title, l.detail);
    }
    println!("acceptance finished in {:.0}s", started.elapsed().as_secs_f64());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
