use lsep::harness::{run_experiment, ExperimentConfig, ExperimentReport};
use lsep::LsepError;

const SMALL_RATE: &str = r#"
name = "small rate"
seed = 5
replications = 20
n_list = [200, 400]
bandwidth = { rule = "power", c = 1.0, exponent = 0.2 }

[experiment]
kind = "rate"
estimator = "kernel_regression"
trend = [0.0, 1.0]
grid_points = 10

[model]
family = "recursive"
innovation = { kind = "normal" }
mean = { kind = "affine", a = [0.5] }
scale = { kind = "affine", c0 = [1.0] }
"#;

fn configs_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn shipped_configs_round_trip() {
    let mut seen = 0;
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        // only experiment configs carry an [experiment] table
        if !text.contains("[experiment]") {
            continue;
        }
        let cfg = ExperimentConfig::from_toml(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let again = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg.to_toml().unwrap(), again.to_toml().unwrap(), "{}", path.display());
        seen += 1;
    }
    assert!(seen >= 10);
}

#[test]
fn replay_is_bit_identical() {
    let cfg = ExperimentConfig::from_toml(SMALL_RATE).unwrap();
    let a = run_experiment(&cfg).unwrap();
    let b = a.replay().unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    let parsed = ExperimentReport::from_json(&a.to_json().unwrap()).unwrap();
    assert_eq!(parsed, a);
}

#[test]
fn thread_count_does_not_change_results() {
    let cfg = ExperimentConfig::from_toml(SMALL_RATE).unwrap();
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| run_experiment(&cfg).unwrap().to_json().unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn seed_changes_results() {
    let a = run_experiment(&ExperimentConfig::from_toml(SMALL_RATE).unwrap()).unwrap();
    let b = run_experiment(&ExperimentConfig::from_toml(&SMALL_RATE.replace("seed = 5", "seed = 6")).unwrap()).unwrap();
    assert_ne!(a.rows, b.rows);
    assert_ne!(a.provenance.config_hash, b.provenance.config_hash);
}

#[test]
fn negative_control_flips_the_verdicts() {
    // a wide n range, so that 1/n scaling is visibly wrong
    let text = SMALL_RATE
        .replace("seed = 5", "seed = 5\nnegative_control = true")
        .replace("n_list = [200, 400]", "n_list = [200, 3200]");
    let r = run_experiment(&ExperimentConfig::from_toml(&text).unwrap()).unwrap();
    assert!(r.negative_control);
    assert!(!r.passed());
}

#[test]
fn csv_output_has_header_and_verdicts() {
    let r = run_experiment(&ExperimentConfig::from_toml(SMALL_RATE).unwrap()).unwrap();
    let mut buf = Vec::new();
    r.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("group,n,metric,value"));
    assert!(text.contains("verdict"));
}

#[test]
fn invalid_configs_are_rejected() {
    let cases = [
        SMALL_RATE.replace("n_list = [200, 400]", "n_list = [400, 200]"),
        SMALL_RATE.replace("n_list = [200, 400]", "n_list = [400]"),
        SMALL_RATE.replace("a = [0.5]", "a = [1.5]"),
        SMALL_RATE.replace("replications = 20", "replications = 2"),
        SMALL_RATE.replace("exponent = 0.2", "exponent = 1.5"),
    ];
    for text in &cases {
        let err = ExperimentConfig::from_toml(text).and_then(|c| c.validate());
        assert!(matches!(err, Err(LsepError::Config(_))), "{text}: {err:?}");
    }
    assert!(ExperimentConfig::from_toml("seed = ").is_err());
    assert!(ExperimentConfig::from_toml(&SMALL_RATE.replace("kind = \"rate\"", "kind = \"nope\"")).is_err());
}

#[test]
fn clt_needs_enough_replications() {
    let text = r#"
seed = 1
replications = 50
n_list = [4000]
bandwidth = { rule = "fixed", h = 0.1 }

[experiment]
kind = "clt"
statistic = "local_mean"
v = 0.5

[model]
family = "recursive"
innovation = { kind = "normal" }
mean = { kind = "affine", a = [0.5] }
scale = { kind = "affine", c0 = [1.0] }
"#;
    let err = ExperimentConfig::from_toml(text).and_then(|c| c.validate());
    assert!(matches!(err, Err(LsepError::Config(_))));
}
