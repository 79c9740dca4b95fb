//! File formats and the command implementations behind the `opeval` CLI.
//!
//! * episode logs: JSON lines ([`log`])
//! * Q-tables: JSON ([`qtable`])
//! * results: CSV with 17 significant digits ([`tables`])
//! * run manifests: JSON ([`RunManifest`])

pub mod log;
pub mod qtable;
pub mod tables;

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::env::TreeEnv;
use crate::error::{Error, Result};
use crate::harness::{self, ExperimentConfig, ExperimentResult, QDistribution};
use crate::metrics::{evaluate, MetricName, MetricOptions};
use crate::types::{annotate, Dataset};

pub use log::{read_log, write_log, EpisodeRecord, LogCheck, StepRecord};
pub use qtable::{read_qtable, write_qtable, QTableFile};
pub use tables::{fmt_f64, ScoreRow};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// How a command finished when it did not fail outright.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// Output was written, but every classification score is degenerate.
    DegenerateOnly,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_DEGENERATE: i32 = 2;
pub const EXIT_IO: i32 = 3;

pub fn exit_code(result: &Result<Outcome>) -> i32 {
    match result {
        Ok(Outcome::Success) => EXIT_OK,
        Ok(Outcome::DegenerateOnly) | Err(Error::Degenerate { .. }) => EXIT_DEGENERATE,
        Err(Error::Io { .. }) => EXIT_IO,
        Err(_) => EXIT_VALIDATION,
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Everything needed to rerun a command and get the same files back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub master_seed: u64,
    pub config: ExperimentConfig,
    /// Input path to sha256 of its contents.
    pub inputs: BTreeMap<String, String>,
    /// Output file name to sha256 of its contents.
    pub outputs: BTreeMap<String, String>,
    pub created_unix: u64,
}

/// A loaded config plus the provenance recorded in manifests.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub config: ExperimentConfig,
    pub inputs: BTreeMap<String, String>,
    pub created_unix: u64,
}

impl RunContext {
    /// Reads and validates a TOML config (defaults when `path` is `None`);
    /// `seed` overrides `master_seed`.
    pub fn load(path: Option<&Path>, seed: Option<u64>, created_unix: u64) -> Result<Self> {
        let mut inputs = BTreeMap::new();
        let mut config = match path {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                inputs.insert(p.display().to_string(), sha256_hex(text.as_bytes()));
                ExperimentConfig::from_toml(&text)?
            }
            None => ExperimentConfig::default(),
        };
        if let Some(s) = seed {
            config.master_seed = s;
        }
        Ok(RunContext {
            config,
            inputs,
            created_unix,
        })
    }

    pub fn from_config(config: ExperimentConfig, created_unix: u64) -> Self {
        RunContext {
            config,
            inputs: BTreeMap::new(),
            created_unix,
        }
    }
}

/// Collects output files and writes them together with a manifest.
struct OutputDir {
    dir: PathBuf,
    hashes: BTreeMap<String, String>,
}

impl OutputDir {
    fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(OutputDir {
            dir: dir.to_path_buf(),
            hashes: BTreeMap::new(),
        })
    }

    fn write(&mut self, name: &str, fill: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        fill(&mut buf)?;
        let path = self.dir.join(name);
        fs::write(&path, &buf).map_err(|e| Error::io(&path, e))?;
        self.hashes.insert(name.to_string(), sha256_hex(&buf));
        Ok(())
    }

    fn finish(self, command: &str, ctx: &RunContext) -> Result<()> {
        let manifest = RunManifest {
            tool: "opeval".into(),
            version: VERSION.into(),
            command: command.into(),
            master_seed: ctx.config.master_seed,
            config: ctx.config.clone(),
            inputs: ctx.inputs.clone(),
            outputs: self.hashes,
            created_unix: ctx.created_unix,
        };
        let path = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serialises") + "\n";
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })
}

fn classification_only_degenerate(summaries: &[&harness::CorrelationSummary]) -> bool {
    let proposed: Vec<_> = summaries
        .iter()
        .filter(|s| matches!(s.metric, MetricName::Opc | MetricName::SoftOpc))
        .collect();
    !proposed.is_empty() && proposed.iter().all(|s| s.n_models == 0)
}

fn tree_check(env: &TreeEnv) -> LogCheck {
    LogCheck {
        binary: true,
        state_count: Some(env.node_count()),
        action_count: Some(2),
    }
}

/// Rolls out the configured behavior policy and writes an unannotated log.
pub fn cmd_collect(ctx: &RunContext, out: &Path) -> Result<Dataset> {
    ctx.config.validate()?;
    let env = ctx.config.env.build()?;
    let d = harness::validation_dataset(&ctx.config, &env)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    write_log(out, &d)?;
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreOptions {
    pub prior: f64,
    pub gamma: f64,
    /// Add an ExtOPC row.
    pub extended_opc: bool,
    /// Require binary rewards in the log.
    pub binary_strict: bool,
}

impl Default for ScoreOptions {
    fn default() -> Self {
        ScoreOptions {
            prior: 1.0,
            gamma: 1.0,
            extended_opc: false,
            binary_strict: false,
        }
    }
}

/// Scores a dataset with every metric. Annotations come from `qtable` when
/// given, otherwise they must already be present.
pub fn score_dataset(d: &Dataset, qtable: Option<&crate::types::QTable>, opts: &ScoreOptions) -> Result<Vec<ScoreRow>> {
    d.validate(opts.binary_strict)?;
    let annotated = match qtable {
        Some(q) => annotate(d, q)?,
        None if d.is_annotated() => d.clone(),
        None => {
            return Err(Error::invalid(
                "log has no Q annotations and no Q-table was given",
            ))
        }
    };
    let metric_opts = MetricOptions {
        prior: opts.prior,
        gamma: opts.gamma,
        ..MetricOptions::default()
    };
    metric_opts.validate()?;
    let mut metrics = MetricName::EXPERIMENT.to_vec();
    if opts.extended_opc {
        metrics.push(MetricName::ExtOpc);
    }
    metrics
        .into_iter()
        .map(|m| match evaluate(m, &annotated, &metric_opts) {
            Ok(s) => Ok(ScoreRow {
                metric: m,
                value: s.value,
                degenerate: false,
            }),
            Err(Error::Degenerate { value, .. }) => Ok(ScoreRow {
                metric: m,
                value,
                degenerate: true,
            }),
            Err(e) => Err(e),
        })
        .collect()
}

/// Reads a log (and optionally a Q-table file), writes the scores CSV to `w`.
pub fn cmd_score<W: Write>(log: &Path, qtable: Option<&Path>, opts: &ScoreOptions, w: W) -> Result<Outcome> {
    let check = LogCheck {
        binary: opts.binary_strict,
        ..LogCheck::default()
    };
    let d = read_log(log, &check)?;
    let q = qtable.map(read_qtable).transpose()?;
    let rows = score_dataset(&d, q.as_ref(), opts)?;
    tables::write_scores(w, &rows)?;
    let classification: Vec<_> = rows
        .iter()
        .filter(|r| matches!(r.metric, MetricName::Opc | MetricName::SoftOpc | MetricName::ExtOpc))
        .collect();
    Ok(if classification.iter().all(|r| r.degenerate) {
        Outcome::DegenerateOnly
    } else {
        Outcome::Success
    })
}

fn write_experiment(out: &mut OutputDir, suffix: &str, res: &ExperimentResult) -> Result<()> {
    out.write(&format!("reports{suffix}.csv"), |b| {
        tables::write_reports(b, &res.reports, &MetricName::EXPERIMENT)
    })?;
    out.write(&format!("summary{suffix}.csv"), |b| tables::write_summary(b, &res.summaries))
}

/// Runs the correlation experiment and writes reports.csv, summary.csv and
/// manifest.json into `out_dir`.
pub fn cmd_correlate(ctx: &RunContext, out_dir: &Path) -> Result<Outcome> {
    let res = harness::run_correlation_experiment(&ctx.config)?;
    let mut out = OutputDir::create(out_dir)?;
    write_experiment(&mut out, "", &res)?;
    out.finish("correlate", ctx)?;
    let summaries: Vec<_> = res.summaries.iter().collect();
    Ok(if classification_only_degenerate(&summaries) {
        Outcome::DegenerateOnly
    } else {
        Outcome::Success
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    Prior,
    Stochastic,
    Magnitude,
}

impl std::str::FromStr for SweepKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "prior" => Ok(SweepKind::Prior),
            "stochastic" => Ok(SweepKind::Stochastic),
            "magnitude" => Ok(SweepKind::Magnitude),
            _ => Err(Error::Config(format!("unknown sweep kind {s:?} (prior, stochastic, magnitude)"))),
        }
    }
}

impl SweepKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepKind::Prior => "prior",
            SweepKind::Stochastic => "stochastic",
            SweepKind::Magnitude => "magnitude",
        }
    }
}

/// File-name label of a magnitude regime.
pub fn regime_label(d: &QDistribution) -> String {
    match d {
        QDistribution::Uniform { max } => format!("uniform_{max}"),
        QDistribution::PerIndex => "per_index".to_string(),
    }
}

/// Runs a sweep and writes one combined CSV plus per-point summaries.
pub fn cmd_sweep(kind: SweepKind, ctx: &RunContext, out_dir: &Path) -> Result<Outcome> {
    let mut out = OutputDir::create(out_dir)?;
    let mut all = Vec::new();
    match kind {
        SweepKind::Prior => {
            let sweep = harness::prior_sweep(&ctx.config)?;
            out.write("prior_sweep.csv", |b| tables::write_prior_sweep(b, &sweep))?;
            for p in &sweep.points {
                let mut rows = sweep.baselines.clone();
                rows.push(p.opc.clone());
                rows.push(p.soft_opc.clone());
                out.write(&format!("summary_prior_{:.2}.csv", p.prior), |b| tables::write_summary(b, &rows))?;
                all.push(p.opc.clone());
                all.push(p.soft_opc.clone());
            }
        }
        SweepKind::Stochastic => {
            let points = harness::stochastic_sweep(&ctx.config)?;
            let mut blocks = Vec::new();
            for (slip, res) in &points {
                write_experiment(&mut out, &format!("_slip{slip}"), res)?;
                blocks.push((format!("{slip}"), res.summaries.clone()));
                all.extend(res.summaries.iter().cloned());
            }
            out.write("stochastic_sweep.csv", |b| tables::write_grid_summary(b, "slip", &blocks))?;
        }
        SweepKind::Magnitude => {
            let points = harness::magnitude_sweep(&ctx.config)?;
            let mut blocks = Vec::new();
            for (dist, res) in &points {
                let label = regime_label(dist);
                write_experiment(&mut out, &format!("_{label}"), res)?;
                blocks.push((label, res.summaries.clone()));
                all.extend(res.summaries.iter().cloned());
            }
            out.write("magnitude_sweep.csv", |b| tables::write_grid_summary(b, "regime", &blocks))?;
        }
    }
    out.finish(&format!("sweep {}", kind.as_str()), ctx)?;
    let refs: Vec<_> = all.iter().collect();
    Ok(if classification_only_degenerate(&refs) {
        Outcome::DegenerateOnly
    } else {
        Outcome::Success
    })
}

/// Checks a config (`.toml`), Q-table (`.json`) or episode log (anything
/// else) and describes what was found.
pub fn cmd_validate(path: &Path, binary_strict: bool) -> Result<String> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("toml") => {
            let ctx = RunContext::load(Some(path), None, 0)?;
            Ok(format!(
                "config ok: {} Q-functions, {} episodes on {}",
                ctx.config.n_qfunctions,
                ctx.config.n_validation_episodes,
                ctx.config.env.env_id()
            ))
        }
        Some("json") => {
            let q = read_qtable(path)?;
            Ok(format!("q-table ok: {} ({} states x {} actions)", q.id, q.state_count(), q.action_count()))
        }
        _ => {
            let check = LogCheck {
                binary: binary_strict,
                ..LogCheck::default()
            };
            let d = read_log(path, &check)?;
            Ok(format!(
                "log ok: {} episodes, {} transitions, {}",
                d.episodes.len(),
                d.transition_count(),
                if d.is_annotated() { "annotated" } else { "unannotated" }
            ))
        }
    }
}

/// Reads a tree log with range checks for `env`.
pub fn read_tree_log(path: &Path, env: &TreeEnv) -> Result<Dataset> {
    read_log(path, &tree_check(env))
}

/// Writes `text` to `path` through a buffered file.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(text.as_bytes()).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Ok(Outcome::Success)), 0);
        assert_eq!(exit_code(&Err(Error::Config("x".into()))), 1);
        assert_eq!(exit_code(&Ok(Outcome::DegenerateOnly)), 2);
        let io = Error::Io {
            path: "p".into(),
            source: std::io::Error::other("x"),
        };
        assert_eq!(exit_code(&Err(io)), 3);
    }

    #[test]
    fn sweep_kinds_parse() {
        assert_eq!("Prior".parse::<SweepKind>().unwrap(), SweepKind::Prior);
        assert!("other".parse::<SweepKind>().is_err());
    }

    #[test]
    fn sha256_known_value() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
