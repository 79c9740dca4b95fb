use serde::{Deserialize, Serialize};

use crate::env::TreeEnv;
use crate::error::{Error, Result};
use crate::metrics::MetricOptions;

/// Binary tree layout. Give exactly one of `success_leaves` / `failure_leaves`
/// (leaf ordinals, 0 = leftmost); with neither, leaf 0 is the only success.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub depth: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub success_leaves: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure_leaves: Option<Vec<usize>>,
    pub slip: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            depth: 6,
            success_leaves: None,
            failure_leaves: None,
            slip: 0.0,
        }
    }
}

impl EnvConfig {
    pub fn build(&self) -> Result<TreeEnv> {
        match (&self.success_leaves, &self.failure_leaves) {
            (Some(_), Some(_)) => Err(Error::Config(
                "env: give success_leaves or failure_leaves, not both".into(),
            )),
            (Some(s), None) => TreeEnv::from_leaf_ordinals(self.depth, s, self.slip),
            (None, Some(f)) => TreeEnv::with_failure_ordinals(self.depth, f, self.slip),
            (None, None) => TreeEnv::from_leaf_ordinals(self.depth, &[0], self.slip),
        }
        .map_err(|e| Error::Config(format!("env: {e}")))
    }

    /// Short identifier used in datasets and manifests.
    pub fn env_id(&self) -> String {
        let layout = match (&self.success_leaves, &self.failure_leaves) {
            (_, Some(f)) => format!("fail{f:?}"),
            (Some(s), None) => format!("succ{s:?}"),
            (None, None) => "succ[0]".to_string(),
        };
        format!("tree-d{}-{}-slip{}", self.depth, layout.replace(' ', ""), self.slip)
    }
}

/// Law of the entries of generated Q-tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum QDistribution {
    /// Every table draws from U[0, max].
    Uniform { max: f64 },
    /// The k-th table (1-based) draws from U[0, k].
    PerIndex,
}

impl Default for QDistribution {
    fn default() -> Self {
        QDistribution::Uniform { max: 1.0 }
    }
}

impl QDistribution {
    /// Scale applied to a U[0, 1) draw for table `index` (0-based).
    pub fn scale(&self, index: usize) -> f64 {
        match *self {
            QDistribution::Uniform { max } => max,
            QDistribution::PerIndex => (index + 1) as f64,
        }
    }

    pub fn label(&self) -> String {
        match self {
            QDistribution::Uniform { max } => format!("uniform(0,{max})"),
            QDistribution::PerIndex => "per_index(0,k)".to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BehaviorConfig {
    #[default]
    Uniform,
    /// Epsilon-greedy around the optimal Q-table of the environment.
    EpsilonOptimal { epsilon: f64 },
}

impl BehaviorConfig {
    pub fn describe(&self) -> String {
        match self {
            BehaviorConfig::Uniform => "uniform-random".to_string(),
            BehaviorConfig::EpsilonOptimal { epsilon } => format!("epsilon-optimal({epsilon})"),
        }
    }
}

pub fn default_prior_grid() -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 20.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub n_qfunctions: usize,
    pub n_validation_episodes: usize,
    pub q_distribution: QDistribution,
    pub prior_grid: Vec<f64>,
    pub slip_grid: Vec<f64>,
    pub env: EnvConfig,
    pub behavior: BehaviorConfig,
    pub metrics: MetricOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            master_seed: 0,
            n_qfunctions: 1000,
            n_validation_episodes: 1000,
            q_distribution: QDistribution::default(),
            prior_grid: default_prior_grid(),
            slip_grid: vec![0.4, 0.6, 0.8],
            env: EnvConfig::default(),
            behavior: BehaviorConfig::default(),
            metrics: MetricOptions::default(),
        }
    }
}

impl ExperimentConfig {
    /// Collects every schema violation instead of stopping at the first.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.n_qfunctions < 2 {
            problems.push(format!("n_qfunctions = {} (need at least 2)", self.n_qfunctions));
        }
        if self.n_validation_episodes == 0 {
            problems.push("n_validation_episodes must be positive".to_string());
        }
        if self.prior_grid.is_empty() {
            problems.push("prior_grid is empty".to_string());
        }
        if let Some(p) = self.prior_grid.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            problems.push(format!("prior_grid value {p} outside [0, 1]"));
        }
        if self.slip_grid.is_empty() {
            problems.push("slip_grid is empty".to_string());
        }
        if let Some(s) = self.slip_grid.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            problems.push(format!("slip_grid value {s} outside [0, 1]"));
        }
        if let QDistribution::Uniform { max } = self.q_distribution {
            if !(max > 0.0 && max.is_finite()) {
                problems.push(format!("q_distribution.max = {max} must be positive"));
            }
        }
        if let BehaviorConfig::EpsilonOptimal { epsilon } = self.behavior {
            if !(0.0..=1.0).contains(&epsilon) {
                problems.push(format!("behavior.epsilon = {epsilon} outside [0, 1]"));
            }
        }
        if let Err(e) = self.metrics.validate() {
            problems.push(format!("metrics: {e}"));
        }
        if let Err(e) = self.env.build() {
            problems.push(e.to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_tree_protocol() {
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.n_qfunctions, 1000);
        assert_eq!(cfg.n_validation_episodes, 1000);
        assert_eq!(cfg.prior_grid.len(), 21);
        let env = cfg.env.build().unwrap();
        assert_eq!(env.depth(), 6);
        assert_eq!(env.success_leaves().len(), 1);
        cfg.validate().unwrap();
    }

    #[test]
    fn toml_round_trip_and_unknown_keys() {
        let cfg = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        let err = ExperimentConfig::from_toml("bogus = 1").unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
        let err = ExperimentConfig::from_toml("[env]\ndepth = 6\ncolour = 1").unwrap_err();
        assert!(err.to_string().contains("colour"), "{err}");
    }

    #[test]
    fn violations_are_enumerated() {
        let text = "n_qfunctions = 1\nslip_grid = []\n[q_distribution]\nkind = \"uniform\"\nmax = -1.0\n";
        let msg = ExperimentConfig::from_toml(text).unwrap_err().to_string();
        assert!(msg.contains("n_qfunctions") && msg.contains("slip_grid") && msg.contains("max"), "{msg}");
    }

    #[test]
    fn failure_layout() {
        let text = "[env]\ndepth = 4\nfailure_leaves = [2]\n";
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.env.build().unwrap().success_leaves().len(), 7);
        let both = "[env]\nsuccess_leaves = [0]\nfailure_leaves = [2]\n";
        assert!(ExperimentConfig::from_toml(both).is_err());
    }

    #[test]
    fn distribution_scales() {
        assert_eq!(QDistribution::PerIndex.scale(0), 1.0);
        assert_eq!(QDistribution::PerIndex.scale(999), 1000.0);
        assert_eq!(QDistribution::Uniform { max: 1000.0 }.scale(5), 1000.0);
    }
}
