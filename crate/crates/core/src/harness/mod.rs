//! Correlation experiments: a suite of random Q-tables is scored on one
//! shared validation dataset and each metric is correlated with the exact
//! return of the tables' argmax policies.

mod config;

pub use config::{default_prior_grid, BehaviorConfig, EnvConfig, ExperimentConfig, QDistribution};

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::env::{rollout, TreeEnv};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, MetricName, MetricOptions};
use crate::stats::{r_squared, spearman};
use crate::types::{annotate, Dataset, Policy, QTable};

/// Independent random streams derived from the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Dataset = 1,
    QTable = 2,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for item `index` of `stream`. Depends only on its arguments, so
/// work can be split across threads in any order.
pub fn child_seed(master: u64, stream: Stream, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ splitmix64(stream as u64)) ^ index)
}

pub fn stream_rng(master: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(child_seed(master, stream, index))
}

/// Random table for the tree with i.i.d. entries; `index` is 0-based.
pub fn generate_random_q(env: &TreeEnv, distribution: &QDistribution, index: usize, master_seed: u64) -> QTable {
    let mut rng = stream_rng(master_seed, Stream::QTable, index as u64);
    let scale = distribution.scale(index);
    let values: Vec<f64> = (0..env.node_count() * 2)
        .map(|_| scale * rng.random::<f64>())
        .collect();
    QTable::new(format!("q{index:04}"), env.node_count(), 2, values).expect("finite random values")
}

/// `n_episodes` rollouts of `behavior`, without Q annotations.
pub fn collect_dataset<R: Rng + ?Sized>(
    env: &TreeEnv,
    behavior: &Policy<'_>,
    n_episodes: usize,
    env_id: &str,
    seed: u64,
    rng: &mut R,
) -> Result<Dataset> {
    if n_episodes == 0 {
        return Err(Error::domain("need at least one episode"));
    }
    let episodes = (0..n_episodes)
        .map(|i| rollout(env, behavior, format!("ep{i:05}"), rng))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(episodes, env_id, behavior.describe(), seed)
}

/// The validation dataset an experiment config describes.
pub fn validation_dataset(cfg: &ExperimentConfig, env: &TreeEnv) -> Result<Dataset> {
    let optimal = env.optimal_qtable();
    let behavior = match cfg.behavior {
        BehaviorConfig::Uniform => Policy::Uniform { action_count: 2 },
        BehaviorConfig::EpsilonOptimal { epsilon } => Policy::epsilon_greedy(&optimal, epsilon)?,
    };
    let mut rng = stream_rng(cfg.master_seed, Stream::Dataset, 0);
    let mut d = collect_dataset(
        env,
        &behavior,
        cfg.n_validation_episodes,
        &cfg.env.env_id(),
        cfg.master_seed,
        &mut rng,
    )?;
    d.behavior = cfg.behavior.describe();
    Ok(d)
}

/// Scores and true return for one Q-table.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub q_id: String,
    pub true_return: f64,
    pub scores: BTreeMap<MetricName, f64>,
    pub degenerate: BTreeSet<MetricName>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSummary {
    pub metric: MetricName,
    pub r_squared: Option<f64>,
    pub spearman: Option<f64>,
    /// Rows that entered the correlation.
    pub n_models: usize,
    /// Rows dropped because the metric was degenerate for them.
    pub n_excluded: usize,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub reports: Vec<MetricReport>,
    pub summaries: Vec<CorrelationSummary>,
}

impl ExperimentResult {
    pub fn summary(&self, metric: MetricName) -> Option<&CorrelationSummary> {
        self.summaries.iter().find(|s| s.metric == metric)
    }
}

/// Scores one table on `d` for each metric in `metrics`.
pub fn evaluate_table(
    env: &TreeEnv,
    d: &Dataset,
    q: &QTable,
    metrics: &[MetricName],
    opts: &MetricOptions,
) -> Result<MetricReport> {
    let annotated = annotate(d, q)?;
    let mut scores = BTreeMap::new();
    let mut degenerate = BTreeSet::new();
    for &m in metrics {
        match evaluate(m, &annotated, opts) {
            Ok(s) => {
                scores.insert(m, s.value);
            }
            Err(Error::Degenerate { value, .. }) => {
                scores.insert(m, value);
                degenerate.insert(m);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(MetricReport {
        q_id: q.id.clone(),
        true_return: env.exact_return(&Policy::Argmax(q))?,
        scores,
        degenerate,
    })
}

/// Evaluates all tables in parallel; output order follows `tables`.
pub fn evaluate_suite(
    env: &TreeEnv,
    d: &Dataset,
    tables: &[QTable],
    metrics: &[MetricName],
    opts: &MetricOptions,
) -> Result<Vec<MetricReport>> {
    tables
        .par_iter()
        .map(|q| evaluate_table(env, d, q, metrics, opts))
        .collect()
}

/// Correlates one metric with true return over its non-degenerate rows.
pub fn summarize_metric(reports: &[MetricReport], metric: MetricName) -> CorrelationSummary {
    let rows: Vec<&MetricReport> = reports
        .iter()
        .filter(|r| r.scores.contains_key(&metric) && !r.degenerate.contains(&metric))
        .collect();
    let xs: Vec<f64> = rows.iter().map(|r| r.scores[&metric]).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.true_return).collect();
    let mut notes = Vec::new();
    let xi = spearman(&xs, &ys).map_err(|e| notes.push(format!("spearman: {e}"))).ok();
    let r2 = r_squared(&xs, &ys).map_err(|e| notes.push(format!("r_squared: {e}"))).ok();
    CorrelationSummary {
        metric,
        r_squared: r2,
        spearman: xi,
        n_models: rows.len(),
        n_excluded: reports.len() - rows.len(),
        note: (!notes.is_empty()).then(|| notes.join("; ")),
    }
}

pub fn summarize(reports: &[MetricReport], metrics: &[MetricName]) -> Vec<CorrelationSummary> {
    metrics.iter().map(|&m| summarize_metric(reports, m)).collect()
}

pub fn generate_suite(cfg: &ExperimentConfig, env: &TreeEnv) -> Vec<QTable> {
    (0..cfg.n_qfunctions)
        .into_par_iter()
        .map(|k| generate_random_q(env, &cfg.q_distribution, k, cfg.master_seed))
        .collect()
}

fn run_on_env(cfg: &ExperimentConfig, env: &TreeEnv) -> Result<ExperimentResult> {
    let d = validation_dataset(cfg, env)?;
    let tables = generate_suite(cfg, env);
    let reports = evaluate_suite(env, &d, &tables, &MetricName::EXPERIMENT, &cfg.metrics)?;
    let summaries = summarize(&reports, &MetricName::EXPERIMENT);
    Ok(ExperimentResult { reports, summaries })
}

/// Scores every generated table with all five metrics and correlates each
/// metric with the exact argmax-policy return.
pub fn run_correlation_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let env = cfg.env.build()?;
    run_on_env(cfg, &env)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriorPoint {
    pub prior: f64,
    pub opc: CorrelationSummary,
    pub soft_opc: CorrelationSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriorSweep {
    pub points: Vec<PriorPoint>,
    /// Prior-independent metrics, computed once.
    pub baselines: Vec<CorrelationSummary>,
}

/// OPC and SoftOPC correlations at each prior of `cfg.prior_grid`.
pub fn prior_sweep(cfg: &ExperimentConfig) -> Result<PriorSweep> {
    cfg.validate()?;
    let env = cfg.env.build()?;
    let d = validation_dataset(cfg, &env)?;
    let tables = generate_suite(cfg, &env);
    let baseline_metrics = [MetricName::TdErr, MetricName::SumAdv, MetricName::MccErr];
    let base = evaluate_suite(&env, &d, &tables, &baseline_metrics, &cfg.metrics)?;
    let baselines = summarize(&base, &baseline_metrics);

    // Annotate each table once and score it at every prior.
    let per_table: Vec<Vec<MetricReport>> = tables
        .par_iter()
        .zip(base.par_iter())
        .map(|(q, b)| {
            let annotated = annotate(&d, q)?;
            cfg.prior_grid
                .iter()
                .map(|&prior| {
                    let opts = MetricOptions { prior, ..cfg.metrics };
                    let mut scores = BTreeMap::new();
                    let mut degenerate = BTreeSet::new();
                    for m in [MetricName::Opc, MetricName::SoftOpc] {
                        match evaluate(m, &annotated, &opts) {
                            Ok(s) => {
                                scores.insert(m, s.value);
                            }
                            Err(Error::Degenerate { value, .. }) => {
                                scores.insert(m, value);
                                degenerate.insert(m);
                            }
                            Err(e) => return Err(e),
                        }
                    }
                    Ok(MetricReport {
                        q_id: q.id.clone(),
                        true_return: b.true_return,
                        scores,
                        degenerate,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let points = cfg
        .prior_grid
        .iter()
        .enumerate()
        .map(|(i, &prior)| {
            let rows: Vec<MetricReport> = per_table.iter().map(|r| r[i].clone()).collect();
            PriorPoint {
                prior,
                opc: summarize_metric(&rows, MetricName::Opc),
                soft_opc: summarize_metric(&rows, MetricName::SoftOpc),
            }
        })
        .collect();
    Ok(PriorSweep { points, baselines })
}

/// One experiment per slip level, with the same Q-table suite.
pub fn stochastic_sweep(cfg: &ExperimentConfig) -> Result<Vec<(f64, ExperimentResult)>> {
    cfg.validate()?;
    let base = cfg.env.build()?;
    cfg.slip_grid
        .iter()
        .map(|&slip| {
            let env = base.with_slip(slip)?;
            let mut c = cfg.clone();
            c.env.slip = slip;
            Ok((slip, run_on_env(&c, &env)?))
        })
        .collect()
}

/// The three Q-magnitude regimes compared by the magnitude study.
pub const MAGNITUDE_REGIMES: [QDistribution; 3] = [
    QDistribution::Uniform { max: 1.0 },
    QDistribution::PerIndex,
    QDistribution::Uniform { max: 1000.0 },
];

/// One experiment per Q-magnitude regime on the shared validation dataset.
pub fn magnitude_sweep(cfg: &ExperimentConfig) -> Result<Vec<(QDistribution, ExperimentResult)>> {
    cfg.validate()?;
    let env = cfg.env.build()?;
    MAGNITUDE_REGIMES
        .iter()
        .map(|&dist| {
            let c = ExperimentConfig {
                q_distribution: dist,
                ..cfg.clone()
            };
            Ok((dist, run_on_env(&c, &env)?))
        })
        .collect()
}

/// Runs `f` on a dedicated pool of `threads` workers (`None`: rayon's default).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}
