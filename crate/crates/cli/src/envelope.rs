//! Report envelopes: every run that exits 0 or 1 writes one JSON document
//! identifying the toolkit version, the fully resolved run configuration,
//! the checksums of all inputs and a payload matching the subcommand.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use pedattr_core::io::file_sha256;
use pedattr_core::metrics::{LeakageAudit, MetricsReport, StratifiedReports};
use pedattr_core::split::{CriteriaReport, SplitCounts, Thresholds};
use pedattr_core::synth::{LeakageDemo, SynthConfig};
use pedattr_core::weights::WeightTable;

#[derive(Debug, Serialize)]
pub struct ReportEnvelope {
    pub toolkit: &'static str,
    pub version: &'static str,
    /// The only non-deterministic field; determinism checks mask it.
    pub timestamp: String,
    pub command: &'static str,
    pub run_config: serde_json::Value,
    pub input_checksums: BTreeMap<String, String>,
    pub payload: Payload,
}

#[derive(Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    Split {
        versions: Vec<SplitVersionSummary>,
        /// Present when some version ran out of trials; carries the most
        /// promising rejected trial for threshold tuning.
        exhausted: Option<SearchFailure>,
    },
    Criteria {
        strict: bool,
        report: CriteriaReport,
    },
    Metrics {
        covered: usize,
        missing: usize,
        report: MetricsReport,
    },
    StratifiedMetrics {
        covered: usize,
        missing: usize,
        reports: StratifiedReports,
    },
    Audit {
        report: LeakageAudit,
    },
    Weights {
        attributes: Vec<String>,
        table: WeightTable,
        out: PathBuf,
    },
    Synth {
        config: SynthConfig,
        n_samples: usize,
        n_identities: usize,
        dataset_sha256: String,
        dataset_path: PathBuf,
        features_path: PathBuf,
    },
    LeakageDemo {
        demo: LeakageDemo,
    },
}

#[derive(Debug, Serialize)]
pub struct SplitVersionSummary {
    pub version: usize,
    pub seed: u64,
    pub trial_index: u64,
    pub counts: SplitCounts,
    pub criteria: CriteriaReport,
    pub path: PathBuf,
}

#[derive(Debug, Serialize)]
pub struct SearchFailure {
    pub version: usize,
    pub seed: u64,
    pub trials: u64,
    pub thresholds: Thresholds,
    pub best: CriteriaReport,
}

impl ReportEnvelope {
    pub fn new(
        command: &'static str,
        run_config: serde_json::Value,
        inputs: &[&Path],
        payload: Payload,
    ) -> Result<Self> {
        let mut input_checksums = BTreeMap::new();
        for path in inputs {
            let digest = file_sha256(path)
                .with_context(|| format!("hashing input {}", path.display()))?;
            input_checksums.insert(path.display().to_string(), digest);
        }
        Ok(Self {
            toolkit: "pedattr",
            version: env!("CARGO_PKG_VERSION"),
            timestamp: chrono::Utc::now().to_rfc3339(),
            command,
            run_config,
            input_checksums,
            payload,
        })
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).context("serializing report")?;
        text.push('\n');
        std::fs::write(path, text)
            .with_context(|| format!("writing report {}", path.display()))?;
        log::info!("report written to {}", path.display());
        Ok(())
    }
}
