use super::{Outcome, TabularMdp};
use crate::error::{Error, Result};
use crate::types::{ActionId, StateId};

pub const ADVANCE: ActionId = ActionId(0);
pub const STALL: ActionId = ActionId(1);

/// Deterministic chain with dense rewards. Position `p` advances to `p + 1`
/// collecting `rewards[p]`, or stalls in place collecting `stall_reward`.
/// The last position is terminal; episodes are cut at `horizon` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseChainEnv {
    rewards: Vec<f64>,
    stall_reward: f64,
    horizon: usize,
}

impl Default for DenseChainEnv {
    /// Three links paying 1, 0, 1 with four steps: achievable returns {0, 1, 2}.
    fn default() -> Self {
        DenseChainEnv {
            rewards: vec![1.0, 0.0, 1.0],
            stall_reward: 0.0,
            horizon: 4,
        }
    }
}

impl DenseChainEnv {
    pub fn new(rewards: Vec<f64>, stall_reward: f64, horizon: usize) -> Result<Self> {
        if rewards.is_empty() {
            return Err(Error::domain("chain needs at least one link"));
        }
        if horizon == 0 {
            return Err(Error::domain("chain horizon must be positive"));
        }
        if rewards.iter().chain([&stall_reward]).any(|r| !r.is_finite()) {
            return Err(Error::domain("chain rewards must be finite"));
        }
        Ok(DenseChainEnv {
            rewards,
            stall_reward,
            horizon,
        })
    }

    pub fn length(&self) -> usize {
        self.rewards.len()
    }
}

impl TabularMdp for DenseChainEnv {
    fn state_count(&self) -> usize {
        self.rewards.len() + 1
    }

    fn action_count(&self) -> usize {
        2
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn initial_distribution(&self) -> Vec<(StateId, f64)> {
        vec![(StateId(0), 1.0)]
    }

    fn is_terminal(&self, s: StateId) -> bool {
        s.0 >= self.rewards.len()
    }

    fn outcomes(&self, s: StateId, a: ActionId) -> Result<Vec<Outcome>> {
        if self.is_terminal(s) {
            return Err(Error::domain(format!("no transitions from terminal position {}", s.0)));
        }
        let o = match a {
            ADVANCE => Outcome {
                next: StateId(s.0 + 1),
                prob: 1.0,
                reward: self.rewards[s.0],
            },
            STALL => Outcome {
                next: s,
                prob: 1.0,
                reward: self.stall_reward,
            },
            _ => return Err(Error::domain(format!("chain action {} not in {{0, 1}}", a.0))),
        };
        Ok(vec![o])
    }
}
