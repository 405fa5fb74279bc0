use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use crate::error::Result;

/// One pass/fail decision. For negative controls `pass` means the control
/// failed as it must.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub criterion: String,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
    #[serde(default)]
    pub control: bool,
}

impl Verdict {
    pub fn le(criterion: impl Into<String>, statistic: f64, threshold: f64) -> Self {
        Verdict { criterion: criterion.into(), statistic, threshold, pass: statistic <= threshold, control: false }
    }

    pub fn lt(criterion: impl Into<String>, statistic: f64, threshold: f64) -> Self {
        Verdict { criterion: criterion.into(), statistic, threshold, pass: statistic < threshold, control: false }
    }

    /// The control must fail: pass when `failed` holds.
    pub fn control(criterion: impl Into<String>, statistic: f64, threshold: f64, failed: bool) -> Self {
        Verdict { criterion: criterion.into(), statistic, threshold, pass: failed, control: true }
    }
}

/// Summary values for one group (typically one n or one case).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub group: String,
    pub n: Option<usize>,
    pub values: BTreeMap<String, f64>,
}

impl Row {
    pub fn new(group: impl Into<String>, n: Option<usize>) -> Self {
        Row { group: group.into(), n, values: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, v: f64) -> Self {
        self.values.insert(key.to_string(), v);
        self
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.values.get(key).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotPoint {
    pub series: String,
    pub x: f64,
    pub empirical: f64,
    pub envelope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    /// canonical TOML of the config that produced the report
    pub config: String,
}

impl Provenance {
    pub fn of(cfg: &ExperimentConfig) -> Result<Self> {
        let config = cfg.to_toml()?;
        Ok(Provenance {
            config_hash: sha256_hex(config.as_bytes()),
            seed: cfg.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
        })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub kind: String,
    pub name: Option<String>,
    pub negative_control: bool,
    pub rows: Vec<Row>,
    pub verdicts: Vec<Verdict>,
    #[serde(default)]
    pub warnings: Vec<String>,
    #[serde(default)]
    pub plot: Vec<PlotPoint>,
    pub provenance: Provenance,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        !self.verdicts.is_empty() && self.verdicts.iter().all(|v| v.pass)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Long format: group, n, metric, value; verdicts follow as
    /// group "verdict".
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["group", "n", "metric", "value"])?;
        for r in &self.rows {
            let n = r.n.map(|n| n.to_string()).unwrap_or_default();
            for (k, v) in &r.values {
                out.write_record([r.group.as_str(), n.as_str(), k.as_str(), &v.to_string()])?;
            }
        }
        for v in &self.verdicts {
            let tag = if v.control { "control" } else { "verdict" };
            out.write_record([tag, "", v.criterion.as_str(), if v.pass { "PASS" } else { "FAIL" }])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_plot_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["series", "x", "empirical", "envelope"])?;
        for p in &self.plot {
            out.write_record([p.series.clone(), p.x.to_string(), p.empirical.to_string(), p.envelope.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Re-run the embedded config.
    pub fn replay(&self) -> Result<ExperimentReport> {
        let cfg = ExperimentConfig::from_toml(&self.provenance.config)?;
        super::run_experiment(&cfg)
    }
}
