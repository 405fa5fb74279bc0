use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::de::DeserializeOwned;
use serde::Serialize;

use lsep::estimators::{
    edf_reference, interior_grid, kernel_density, kernel_regression, local_edf, local_mad, m_estimate, mad_reference,
    EstimatorResult, MObjective, Truth,
};
use lsep::harness::{depmeasure_table, run_experiment, sha256_hex, write_depmeasure_csv, ExperimentConfig};
use lsep::process_models::{simulate_path, simulate_stationary};
use lsep::LsepError;

use crate::configs::{DepmeasureConfig, EstimateConfig, EstimatorSpec, SimulateConfig};
use crate::Common;

pub const EXIT_PASS: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{module}: {source}")]
    Lib { module: &'static str, source: LsepError },
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Lib { source, .. } if source.is_numerical() => EXIT_NUMERICAL,
            CliError::Lib { source, .. } => match source {
                LsepError::Config(_)
                | LsepError::InvalidArgument(_)
                | LsepError::Contraction { .. }
                | LsepError::NotSummable(_)
                | LsepError::Unsupported(_) => EXIT_USAGE,
                _ => EXIT_NUMERICAL,
            },
        }
    }
}

fn lib(module: &'static str) -> impl Fn(LsepError) -> CliError {
    move |source| CliError::Lib { module, source }
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Usage(format!("{}: {e}", path.display()))
}

#[derive(Serialize)]
struct Manifest<'a> {
    subcommand: &'a str,
    config_path: String,
    config_hash: String,
    version: &'static str,
    seed: Option<u64>,
    threads: Option<usize>,
    timestamp_unix: u64,
    outputs: Vec<String>,
    exit_code: u8,
    message: Option<String>,
}

/// Parse TOML with line-anchored messages.
fn parse<T: DeserializeOwned>(path: &Path, text: &str) -> Result<T, CliError> {
    toml::from_str(text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

struct Run {
    outputs: Vec<PathBuf>,
    code: u8,
    seed: Option<u64>,
}

pub fn dispatch(name: &str, common: &Common) -> u8 {
    let text = fs::read_to_string(&common.config);
    let hash = text.as_ref().map(|t| sha256_hex(t.as_bytes())).unwrap_or_default();
    let result = text.map_err(io(&common.config)).and_then(|text| {
        if let Some(t) = common.threads {
            if t == 0 {
                return Err(CliError::Usage("--threads must be positive".into()));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build_global()
                .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
        }
        fs::create_dir_all(&common.output_dir).map_err(io(&common.output_dir))?;
        match name {
            "simulate" => simulate(common, &text),
            "depmeasure" => depmeasure(common, &text),
            "estimate" => estimate(common, &text),
            _ => verify(common, &text),
        }
    });
    let (code, outputs, message, seed) = match result {
        Ok(run) => (run.code, run.outputs, None, run.seed),
        Err(e) => {
            eprintln!("lsep {name}: {e}");
            (e.code(), Vec::new(), Some(e.to_string()), common.seed)
        }
    };
    let manifest = Manifest {
        subcommand: name,
        config_path: common.config.display().to_string(),
        config_hash: hash,
        version: env!("CARGO_PKG_VERSION"),
        seed,
        threads: common.threads,
        timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        exit_code: code,
        message,
    };
    if fs::create_dir_all(&common.output_dir).is_ok() {
        let path = common.output_dir.join("manifest.json");
        if let Ok(json) = serde_json::to_string_pretty(&manifest) {
            if let Err(e) = fs::write(&path, json + "\n") {
                eprintln!("lsep: could not write {}: {e}", path.display());
            }
        }
    }
    code
}

fn write(path: PathBuf, bytes: Vec<u8>) -> Result<PathBuf, CliError> {
    fs::write(&path, bytes).map_err(io(&path))?;
    Ok(path)
}

fn simulate(common: &Common, text: &str) -> Result<Run, CliError> {
    let mut cfg: SimulateConfig = parse(&common.config, text)?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    let path = match cfg.stationary_u {
        Some(u) => simulate_stationary(&cfg.model, u, cfg.n, cfg.seed, cfg.burn_in),
        None => simulate_path(&cfg.model, cfg.n, cfg.seed, cfg.burn_in),
    }
    .map_err(lib("process_models"))?;
    let mut buf = Vec::new();
    path.write_csv(&mut buf).map_err(lib("process_models"))?;
    let out = write(common.output_dir.join("path.csv"), buf)?;
    Ok(Run { outputs: vec![out], code: EXIT_PASS, seed: Some(cfg.seed) })
}

fn depmeasure(common: &Common, text: &str) -> Result<Run, CliError> {
    let mut cfg: DepmeasureConfig = parse(&common.config, text)?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    let rows = depmeasure_table(&cfg.model, cfg.n, &cfg.k, cfg.nu, cfg.replications, cfg.seed).map_err(lib("dependence"))?;
    let mut buf = Vec::new();
    write_depmeasure_csv(&rows, &mut buf).map_err(lib("dependence"))?;
    let out = write(common.output_dir.join("depmeasure.csv"), buf)?;
    Ok(Run { outputs: vec![out], code: EXIT_PASS, seed: Some(cfg.seed) })
}

fn single_v(cfg: &EstimateConfig) -> Result<f64, CliError> {
    match cfg.v.as_deref() {
        Some([v]) => Ok(*v),
        None => Ok(0.5),
        Some(_) => Err(CliError::Usage("this estimator takes a single v".into())),
    }
}

fn estimate(common: &Common, text: &str) -> Result<Run, CliError> {
    let mut cfg: EstimateConfig = parse(&common.config, text)?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    let m = lib("estimators");
    let path = simulate_path(&cfg.model, cfg.n, cfg.seed, None).map_err(lib("process_models"))?;
    let h = cfg.bandwidth;
    let v_grid = match &cfg.v {
        Some(v) => v.clone(),
        None => interior_grid(h, cfg.grid_points).map_err(&m)?,
    };
    let draws = 100_000;
    let result: EstimatorResult = match &cfg.estimator {
        EstimatorSpec::KernelRegression { trend } => {
            let y: Vec<f64> = (1..=cfg.n).map(|i| trend.eval(path.u(i)) + path.value(i)).collect();
            let g = |u: f64| trend.eval(u);
            kernel_regression(&y, &cfg.kernel, h, &v_grid, Some(&g)).map_err(&m)?
        }
        EstimatorSpec::KernelDensity { bandwidth_x, x } => {
            kernel_density(&path.values, &cfg.kernel, &cfg.kernel, h, *bandwidth_x, x, &v_grid).map_err(&m)?
        }
        EstimatorSpec::LocalEdf { x } => {
            let v = single_v(&cfg)?;
            let mut r = local_edf(&path.values, &cfg.kernel, h, x, v).map_err(&m)?;
            r.reference = Some(edf_reference(&cfg.model, x, v, draws, cfg.seed).map_err(&m)?);
            r
        }
        EstimatorSpec::LocalMad => {
            let v = single_v(&cfg)?;
            let value = local_mad(&path.values, &cfg.kernel, h, v).map_err(&m)?;
            let (_, reference) = mad_reference(&cfg.model, v, draws, cfg.seed).map_err(&m)?;
            EstimatorResult {
                estimator: "local_mad".into(),
                v: vec![v],
                x: None,
                values: vec![value],
                reference: Some(vec![reference]),
                bandwidths: vec![h],
            }
        }
        EstimatorSpec::MEstimate { theta0, theta_box } => {
            let obj = MObjective::ar(theta_box[0], theta_box[1]);
            let t0 = theta0.clone();
            let f = move |u: f64| vec![t0.as_ref().map(|p| p.eval(u)).unwrap_or(0.0)];
            let truth = Truth { theta0: &f, model: &cfg.model, draws: 20_000, seed: cfg.seed };
            let est = m_estimate(&path, &obj, &cfg.kernel, h, &v_grid, theta0.as_ref().map(|_| &truth)).map_err(&m)?;
            let mut outputs = Vec::new();
            if let Some(b) = &est.bahadur {
                let json = serde_json::to_string_pretty(&serde_json::json!({
                    "first_order": est.first_order,
                    "bahadur": b,
                    "sup_first_order": est.sup_first_order(),
                    "sup_bahadur": est.sup_bahadur(),
                }))
                .map_err(|e| lib("estimators")(e.into()))?;
                outputs.push(write(common.output_dir.join("bahadur.json"), json.into_bytes())?);
            }
            return finish(common, est.result, outputs, cfg.seed);
        }
    };
    finish(common, result, Vec::new(), cfg.seed)
}

fn finish(common: &Common, result: EstimatorResult, mut outputs: Vec<PathBuf>, seed: u64) -> Result<Run, CliError> {
    let m = lib("estimators");
    let mut buf = Vec::new();
    result.write_csv(&mut buf).map_err(&m)?;
    outputs.push(write(common.output_dir.join("estimate.csv"), buf)?);
    outputs.push(write(common.output_dir.join("estimate.json"), (result.to_json().map_err(&m)? + "\n").into_bytes())?);
    Ok(Run { outputs, code: EXIT_PASS, seed: Some(seed) })
}

fn verify(common: &Common, text: &str) -> Result<Run, CliError> {
    let mut cfg: ExperimentConfig = parse(&common.config, text)?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    cfg.validate().map_err(|e| CliError::Usage(format!("{}: {e}", common.config.display())))?;
    let m = lib("harness");
    let report = run_experiment(&cfg).map_err(&m)?;
    let mut outputs = vec![write(common.output_dir.join("report.json"), (report.to_json().map_err(&m)? + "\n").into_bytes())?];
    let mut buf = Vec::new();
    report.write_csv(&mut buf).map_err(&m)?;
    outputs.push(write(common.output_dir.join("report.csv"), buf)?);
    if !report.plot.is_empty() {
        let mut buf = Vec::new();
        report.write_plot_csv(&mut buf).map_err(&m)?;
        outputs.push(write(common.output_dir.join("plot.csv"), buf)?);
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for v in &report.verdicts {
        println!("{} {}", if v.pass { "PASS" } else { "FAIL" }, v.criterion);
    }
    let code = if report.passed() { EXIT_PASS } else { EXIT_FAIL };
    Ok(Run { outputs, code, seed: Some(cfg.seed) })
}
