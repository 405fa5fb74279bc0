use super::config::ExperimentConfig;
use super::report::{Row, Verdict};
use super::{path_seed, Outcome};
use crate::dependence::DecayProfile;
use crate::empirical_process::{variance_bound_batch, VarianceReport};
use crate::error::Result;
use crate::function_class::{class_profile, Base, Factor, FunctionClass};
use crate::innovation::Innovation;
use crate::kernel::Kernel;
use crate::poly::Poly;
use crate::process_models::{ProcessModel, RecursiveModel};

/// Models of the built-in variance suite.
pub fn builtin_models() -> Vec<(&'static str, ProcessModel)> {
    vec![
        ("iid", RecursiveModel::ar1(0.0).into()),
        ("ar1", RecursiveModel::ar1(0.5).into()),
        ("tvar", RecursiveModel::tvar(Poly::linear(0.1, 0.6), 1.0, Innovation::Normal).into()),
        ("tvar_t8", RecursiveModel::tvar(Poly::linear(0.2, 0.4), 1.0, Innovation::StudentT { df: 8.0 }).into()),
    ]
}

/// Classes of the built-in variance suite.
pub fn builtin_classes() -> Vec<(&'static str, FunctionClass)> {
    let local = || Factor::local(0.5, 0.2, Kernel::Epanechnikov);
    vec![
        ("identity", FunctionClass::new(Base::Identity, Factor::global())),
        ("indicator", FunctionClass::new(Base::Indicator { x: 0.3 }, Factor::global())),
        ("abs_deviation", FunctionClass::new(Base::AbsDeviation { theta: 0.2 }, Factor::global())),
        ("local_identity", FunctionClass::new(Base::Identity, local())),
        ("local_indicator", FunctionClass::new(Base::Indicator { x: 0.0 }, local())),
        (
            "local_kernel_density",
            FunctionClass::new(Base::KernelDensity { x: 0.0, bandwidth: 0.5, kernel: Kernel::Epanechnikov }, local()),
        ),
    ]
}

/// Control threshold scale: V/10.
const CONTROL_SCALE: f64 = 0.1;

fn case_rows(label: &str, n: usize, r: &VarianceReport, ctrl_threshold: f64) -> Row {
    Row::new(label, Some(n))
        .with("var_hat", r.var_hat)
        .with("f2n", r.f2n)
        .with("d_n", r.d_n)
        .with("v", r.v)
        .with("threshold", r.threshold)
        .with("control_threshold", ctrl_threshold)
}

pub(super) fn run(cfg: &ExperimentConfig, builtin: bool, classes: &[FunctionClass]) -> Result<Outcome> {
    let mut out = Outcome::default();
    let n = cfg.n_list[0];
    let models: Vec<(String, ProcessModel)> = if builtin {
        builtin_models().into_iter().map(|(l, m)| (l.to_string(), m)).collect()
    } else {
        vec![(cfg.model.tag(), cfg.model.clone())]
    };
    let named: Vec<(String, FunctionClass)> = if builtin {
        builtin_classes().into_iter().map(|(l, c)| (l.to_string(), c)).collect()
    } else {
        classes.iter().enumerate().map(|(k, c)| (format!("class{k}"), c.clone())).collect()
    };
    let mut any_control_failed = false;
    let mut control_stat = 0.0f64;
    for (mi, (mlabel, model)) in models.iter().enumerate() {
        // delta_2 profiles, so s = 1
        let profiles: Vec<DecayProfile> =
            named.iter().map(|(_, c)| class_profile(model, &c.base, 1.0)).collect::<Result<_>>()?;
        let fs: Vec<FunctionClass> = named.iter().map(|(_, c)| c.clone()).collect();
        let seed = crate::rng::derive_seed(path_seed(cfg, n), mi as u64);
        let reports = variance_bound_batch(&fs, model, &profiles, n, cfg.replications, seed, 1.0)?;
        for ((clabel, _), r) in named.iter().zip(&reports) {
            let label = format!("{mlabel}/{clabel}");
            let ctrl_threshold = r.threshold * CONTROL_SCALE * CONTROL_SCALE;
            out.rows.push(case_rows(&label, n, r, ctrl_threshold));
            let ratio_ctrl = r.var_hat / ctrl_threshold;
            if ratio_ctrl > 1.0 {
                any_control_failed = true;
            }
            control_stat = control_stat.max(ratio_ctrl);
            if cfg.negative_control {
                out.verdicts.push(Verdict::le(format!("{label}: Var(G_n) <= (V/10)^2 (1 + 4 se)"), r.var_hat, ctrl_threshold));
            } else {
                out.verdicts.push(Verdict::le(format!("{label}: Var(G_n) <= V^2 (1 + 4 se)"), r.var_hat, r.threshold));
            }
        }
    }
    if !cfg.negative_control {
        out.verdicts.push(Verdict::control(
            "negative control: V/10 must be violated on some case",
            control_stat,
            1.0,
            any_control_failed,
        ));
    }
    Ok(out)
}
