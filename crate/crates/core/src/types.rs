//! Shared vocabulary: states, actions, transitions, episodes, datasets,
//! tabular Q-functions and policies.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionId(pub usize);

impl StateId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl ActionId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// The three Q-function values a transition needs for every metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QAnnotation {
    /// Q(s_t, a_t).
    pub q_sa: f64,
    /// max_a Q(s_t, a).
    pub q_greedy_s: f64,
    /// max_a Q(s_{t+1}, a); `None` on the last step of the episode.
    pub q_greedy_next: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    /// 1-based step index.
    pub t: usize,
    pub state: StateId,
    pub action: ActionId,
    pub reward: f64,
    pub q: Option<QAnnotation>,
}

impl Transition {
    pub fn annotation(&self, episode: &str) -> Result<&QAnnotation> {
        self.q.as_ref().ok_or_else(|| Error::MissingAnnotation {
            episode: episode.to_string(),
            t: self.t,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub id: String,
    pub transitions: Vec<Transition>,
    pub final_reward: f64,
}

impl Episode {
    /// Builds an episode and checks its structural invariants.
    pub fn new(id: impl Into<String>, transitions: Vec<Transition>) -> Result<Self> {
        let id = id.into();
        let final_reward = transitions
            .last()
            .map(|tr| tr.reward)
            .ok_or_else(|| Error::invalid(format!("episode {id} has no transitions")))?;
        let episode = Episode {
            id,
            transitions,
            final_reward,
        };
        episode.validate(false)?;
        Ok(episode)
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn is_success(&self) -> bool {
        self.final_reward == 1.0
    }

    /// Undiscounted sum of all rewards.
    pub fn total_return(&self) -> f64 {
        self.transitions.iter().map(|tr| tr.reward).sum()
    }

    pub fn is_annotated(&self) -> bool {
        self.transitions.iter().all(|tr| tr.q.is_some())
    }

    /// Checks the episode invariants. With `binary` set, rewards must follow
    /// the binary-reward convention: zero everywhere except a terminal 0/1.
    pub fn validate(&self, binary: bool) -> Result<()> {
        let id = &self.id;
        let n = self.transitions.len();
        if n == 0 {
            return Err(Error::invalid(format!("episode {id} has no transitions")));
        }
        for (i, tr) in self.transitions.iter().enumerate() {
            if tr.t != i + 1 {
                return Err(Error::invalid(format!(
                    "episode {id}: step {} has t={}, expected {}",
                    i + 1,
                    tr.t,
                    i + 1
                )));
            }
            if !tr.reward.is_finite() {
                return Err(Error::invalid(format!("episode {id} step {}: non-finite reward", tr.t)));
            }
            if let Some(q) = &tr.q {
                if !(q.q_sa.is_finite() && q.q_greedy_s.is_finite()) {
                    return Err(Error::invalid(format!("episode {id} step {}: non-finite Q value", tr.t)));
                }
                if q.q_greedy_s < q.q_sa {
                    return Err(Error::invalid(format!(
                        "episode {id} step {}: q_greedy_s {} is below q_sa {}",
                        tr.t, q.q_greedy_s, q.q_sa
                    )));
                }
                let last = i + 1 == n;
                match (last, q.q_greedy_next) {
                    (true, Some(_)) => {
                        return Err(Error::invalid(format!(
                            "episode {id}: q_greedy_next must be null on the last step"
                        )))
                    }
                    (false, None) => {
                        return Err(Error::invalid(format!(
                            "episode {id} step {}: q_greedy_next missing on a non-terminal step",
                            tr.t
                        )))
                    }
                    (false, Some(v)) if !v.is_finite() => {
                        return Err(Error::invalid(format!(
                            "episode {id} step {}: non-finite q_greedy_next",
                            tr.t
                        )))
                    }
                    _ => {}
                }
            }
        }
        let last_reward = self.transitions[n - 1].reward;
        if self.final_reward != last_reward {
            return Err(Error::invalid(format!(
                "episode {id}: final_reward {} differs from last step reward {}",
                self.final_reward, last_reward
            )));
        }
        if binary {
            if self.final_reward != 0.0 && self.final_reward != 1.0 {
                return Err(Error::invalid(format!(
                    "episode {id}: final reward {} is not binary",
                    self.final_reward
                )));
            }
            if let Some(tr) = self.transitions[..n - 1].iter().find(|tr| tr.reward != 0.0) {
                return Err(Error::invalid(format!(
                    "episode {id} step {}: intermediate reward {} in binary mode",
                    tr.t, tr.reward
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub episodes: Vec<Episode>,
    pub env_id: String,
    pub behavior: String,
    pub seed: u64,
}

/// Positive/unlabeled split of a dataset's transitions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labeling {
    /// One entry per episode, one flag per transition.
    pub labels: Vec<Vec<bool>>,
    pub n: usize,
    pub n_positive: usize,
}

impl Labeling {
    pub fn n_unlabeled(&self) -> usize {
        self.n - self.n_positive
    }
}

impl Dataset {
    pub fn new(
        episodes: Vec<Episode>,
        env_id: impl Into<String>,
        behavior: impl Into<String>,
        seed: u64,
    ) -> Result<Self> {
        let d = Dataset {
            episodes,
            env_id: env_id.into(),
            behavior: behavior.into(),
            seed,
        };
        d.validate(false)?;
        Ok(d)
    }

    pub fn validate(&self, binary: bool) -> Result<()> {
        if self.episodes.is_empty() {
            return Err(Error::domain("dataset has no episodes"));
        }
        self.episodes.iter().try_for_each(|ep| ep.validate(binary))
    }

    pub fn transition_count(&self) -> usize {
        self.episodes.iter().map(Episode::len).sum()
    }

    pub fn is_annotated(&self) -> bool {
        self.episodes.iter().all(Episode::is_annotated)
    }

    pub fn transitions(&self) -> impl Iterator<Item = (&Episode, &Transition)> {
        self.episodes
            .iter()
            .flat_map(|ep| ep.transitions.iter().map(move |tr| (ep, tr)))
    }

    /// Copy of the dataset with every Q annotation removed.
    pub fn without_annotations(&self) -> Dataset {
        let mut d = self.clone();
        for ep in &mut d.episodes {
            for tr in &mut ep.transitions {
                tr.q = None;
            }
        }
        d
    }
}

/// Labels each transition positive iff its episode succeeded.
pub fn label_positives(d: &Dataset) -> Labeling {
    let labels: Vec<Vec<bool>> = d
        .episodes
        .iter()
        .map(|ep| vec![ep.is_success(); ep.len()])
        .collect();
    let n = d.transition_count();
    let n_positive = d
        .episodes
        .iter()
        .filter(|ep| ep.is_success())
        .map(Episode::len)
        .sum();
    Labeling {
        labels,
        n,
        n_positive,
    }
}

/// Dense state x action value table.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    pub id: String,
    state_count: usize,
    action_count: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn new(
        id: impl Into<String>,
        state_count: usize,
        action_count: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        if state_count == 0 || action_count == 0 {
            return Err(Error::domain("Q-table needs at least one state and one action"));
        }
        if values.len() != state_count * action_count {
            return Err(Error::domain(format!(
                "Q-table has {} values, expected {}x{}",
                values.len(),
                state_count,
                action_count
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!(
                "Q-table entry ({}, {}) is not finite",
                i / action_count,
                i % action_count
            )));
        }
        Ok(QTable {
            id: id.into(),
            state_count,
            action_count,
            values,
        })
    }

    pub fn from_rows(id: impl Into<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let action_count = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != action_count) {
            return Err(Error::domain("Q-table rows have unequal lengths"));
        }
        QTable::new(id, rows.len(), action_count, rows.concat())
    }

    pub fn state_count(&self) -> usize {
        self.state_count
    }

    pub fn action_count(&self) -> usize {
        self.action_count
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, s: StateId) -> Result<&[f64]> {
        if s.0 >= self.state_count {
            return Err(Error::domain(format!(
                "state {} out of range for Q-table with {} states",
                s.0, self.state_count
            )));
        }
        let start = s.0 * self.action_count;
        Ok(&self.values[start..start + self.action_count])
    }

    pub fn get(&self, s: StateId, a: ActionId) -> Result<f64> {
        let row = self.row(s)?;
        row.get(a.0).copied().ok_or_else(|| {
            Error::domain(format!(
                "action {} out of range for Q-table with {} actions",
                a.0, self.action_count
            ))
        })
    }

    pub fn max_value(&self, s: StateId) -> Result<f64> {
        let a = argmax_action(self, s)?;
        self.get(s, a)
    }

    /// Applies `f` to every entry, keeping the id.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<QTable> {
        QTable::new(
            self.id.clone(),
            self.state_count,
            self.action_count,
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values
            .chunks(self.action_count)
            .map(<[f64]>::to_vec)
            .collect()
    }
}

/// Greedy action at `s`; ties go to the lowest action index.
pub fn argmax_action(q: &QTable, s: StateId) -> Result<ActionId> {
    let row = q.row(s)?;
    let mut best = 0;
    for (a, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = a;
        }
    }
    Ok(ActionId(best))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Policy<'a> {
    Argmax(&'a QTable),
    Uniform { action_count: usize },
    EpsilonGreedy { table: &'a QTable, epsilon: f64 },
}

impl<'a> Policy<'a> {
    pub fn epsilon_greedy(table: &'a QTable, epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::domain(format!("epsilon {epsilon} outside [0, 1]")));
        }
        Ok(Policy::EpsilonGreedy { table, epsilon })
    }

    pub fn action_count(&self) -> usize {
        match self {
            Policy::Argmax(q) | Policy::EpsilonGreedy { table: q, .. } => q.action_count(),
            Policy::Uniform { action_count } => *action_count,
        }
    }

    /// pi(. | s) as a probability vector over actions.
    pub fn action_probs(&self, s: StateId) -> Result<Vec<f64>> {
        match *self {
            Policy::Argmax(q) => {
                let a = argmax_action(q, s)?;
                let mut p = vec![0.0; q.action_count()];
                p[a.0] = 1.0;
                Ok(p)
            }
            Policy::Uniform { action_count } => {
                if action_count == 0 {
                    return Err(Error::domain("uniform policy over zero actions"));
                }
                Ok(vec![1.0 / action_count as f64; action_count])
            }
            Policy::EpsilonGreedy { table, epsilon } => {
                let a = argmax_action(table, s)?;
                let n = table.action_count();
                let mut p = vec![epsilon / n as f64; n];
                p[a.0] += 1.0 - epsilon;
                Ok(p)
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Policy::Argmax(q) => format!("argmax({})", q.id),
            Policy::Uniform { .. } => "uniform-random".to_string(),
            Policy::EpsilonGreedy { table, epsilon } => {
                format!("epsilon-greedy({}, {epsilon})", table.id)
            }
        }
    }
}

/// Draws an action from `policy` at `s`. The argmax kind never touches `rng`.
pub fn sample_action<R: Rng + ?Sized>(policy: &Policy<'_>, s: StateId, rng: &mut R) -> Result<ActionId> {
    match *policy {
        Policy::Argmax(q) => argmax_action(q, s),
        Policy::Uniform { action_count } => {
            if action_count == 0 {
                return Err(Error::domain("uniform policy over zero actions"));
            }
            Ok(ActionId(rng.random_range(0..action_count)))
        }
        Policy::EpsilonGreedy { table, epsilon } => {
            let greedy = argmax_action(table, s)?;
            if epsilon > 0.0 && rng.random::<f64>() < epsilon {
                Ok(ActionId(rng.random_range(0..table.action_count())))
            } else {
                Ok(greedy)
            }
        }
    }
}

/// Checks that the Q annotations of `d` are exactly those `q` produces.
pub fn validate_annotations(d: &Dataset, q: &QTable) -> Result<()> {
    for ep in &d.episodes {
        for (i, tr) in ep.transitions.iter().enumerate() {
            let ann = tr.annotation(&ep.id)?;
            let q_sa = q.get(tr.state, tr.action)?;
            let q_greedy_s = q.max_value(tr.state)?;
            let q_greedy_next = match ep.transitions.get(i + 1) {
                Some(next) => Some(q.max_value(next.state)?),
                None => None,
            };
            if ann.q_sa != q_sa || ann.q_greedy_s != q_greedy_s || ann.q_greedy_next != q_greedy_next {
                return Err(Error::invalid(format!(
                    "episode {} step {}: annotation does not match Q-table {}",
                    ep.id, tr.t, q.id
                )));
            }
        }
    }
    Ok(())
}

/// Fills the Q annotations of every transition from `q`. The input is left untouched.
pub fn annotate(d: &Dataset, q: &QTable) -> Result<Dataset> {
    let mut out = d.clone();
    for ep in &mut out.episodes {
        let states: Vec<StateId> = ep.transitions.iter().map(|tr| tr.state).collect();
        for (i, tr) in ep.transitions.iter_mut().enumerate() {
            let q_greedy_next = match states.get(i + 1) {
                Some(&next) => Some(q.max_value(next)?),
                None => None,
            };
            tr.q = Some(QAnnotation {
                q_sa: q.get(tr.state, tr.action)?,
                q_greedy_s: q.max_value(tr.state)?,
                q_greedy_next,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn table(rows: &[Vec<f64>]) -> QTable {
        QTable::from_rows("q", rows).unwrap()
    }

    fn tr(t: usize, s: usize, a: usize, r: f64) -> Transition {
        Transition {
            t,
            state: StateId(s),
            action: ActionId(a),
            reward: r,
            q: None,
        }
    }

    fn episode(id: &str, len: usize, success: bool) -> Episode {
        let transitions = (1..=len)
            .map(|t| tr(t, t - 1, 0, if t == len && success { 1.0 } else { 0.0 }))
            .collect();
        Episode::new(id, transitions).unwrap()
    }

    #[test]
    fn argmax_examples() {
        let q = table(&[vec![0.1, 0.9], vec![0.5, 0.5], vec![0.3, 0.7]]);
        assert_eq!(argmax_action(&q, StateId(0)).unwrap(), ActionId(1));
        assert_eq!(argmax_action(&q, StateId(1)).unwrap(), ActionId(0));
        let q3 = table(&[vec![0.3, 0.7, 0.7]]);
        assert_eq!(argmax_action(&q3, StateId(0)).unwrap(), ActionId(1));
        assert!(matches!(argmax_action(&q, StateId(3)), Err(Error::Domain(_))));
    }

    #[test]
    fn labeling_counts() {
        let d = Dataset::new(vec![episode("a", 3, true), episode("b", 2, false)], "e", "b", 0).unwrap();
        let l = label_positives(&d);
        assert_eq!((l.n, l.n_positive), (5, 3));
        assert_eq!(l.labels, vec![vec![true; 3], vec![false; 2]]);

        let fail = Dataset::new(vec![episode("a", 3, false), episode("b", 2, false)], "e", "b", 0).unwrap();
        assert_eq!(label_positives(&fail).n_positive, 0);
        let ok = Dataset::new(vec![episode("a", 3, true), episode("b", 2, true)], "e", "b", 0).unwrap();
        let l = label_positives(&ok);
        assert_eq!(l.n_positive, l.n);
        assert_eq!(l.n_unlabeled(), 0);
    }

    #[test]
    fn binary_validation_flags_dense_rewards() {
        let ep = Episode::new("x", vec![tr(1, 0, 0, 0.5), tr(2, 1, 0, 1.0)]).unwrap();
        assert!(ep.validate(false).is_ok());
        assert!(ep.validate(true).is_err());
        let ep = Episode::new("y", vec![tr(1, 0, 0, 2.0)]).unwrap();
        assert!(ep.validate(true).is_err());
    }

    #[test]
    fn step_indices_must_be_sequential() {
        assert!(Episode::new("x", vec![tr(1, 0, 0, 0.0), tr(3, 1, 0, 1.0)]).is_err());
        assert!(Episode::new("x", vec![]).is_err());
        assert!(Dataset::new(vec![], "e", "b", 0).is_err());
    }

    #[test]
    fn qtable_rejects_non_finite() {
        assert!(QTable::new("q", 1, 2, vec![0.0, f64::NAN]).is_err());
        assert!(QTable::new("q", 1, 2, vec![0.0]).is_err());
    }

    #[test]
    fn sampling_boundaries() {
        let q = table(&[vec![0.2, 0.8], vec![0.9, 0.1]]);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let greedy0 = Policy::epsilon_greedy(&q, 0.0).unwrap();
        for _ in 0..100 {
            for s in 0..2 {
                let s = StateId(s);
                let a = sample_action(&greedy0, s, &mut rng).unwrap();
                assert_eq!(a, argmax_action(&q, s).unwrap());
                assert_eq!(sample_action(&Policy::Argmax(&q), s, &mut rng).unwrap(), a);
            }
        }
        let greedy1 = Policy::epsilon_greedy(&q, 1.0).unwrap();
        let n = 20_000;
        let ones = (0..n)
            .filter(|_| sample_action(&greedy1, StateId(0), &mut rng).unwrap() == ActionId(1))
            .count();
        // Binomial(n, 1/2): 4 sigma is about 283.
        assert!((ones as i64 - n as i64 / 2).abs() < 300, "{ones}");
        assert!(Policy::epsilon_greedy(&q, 1.5).is_err());
        assert_eq!(greedy1.action_probs(StateId(0)).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn annotate_then_validate() {
        let q = table(&[vec![0.1, 0.9], vec![0.4, 0.3], vec![0.0, 0.0]]);
        let d = Dataset::new(
            vec![Episode::new("e", vec![tr(1, 0, 0, 0.0), tr(2, 1, 1, 1.0)]).unwrap()],
            "e",
            "b",
            0,
        )
        .unwrap();
        let annotated = annotate(&d, &q).unwrap();
        assert!(!d.is_annotated());
        validate_annotations(&annotated, &q).unwrap();
        let steps = &annotated.episodes[0].transitions;
        assert_eq!(
            steps[0].q.unwrap(),
            QAnnotation {
                q_sa: 0.1,
                q_greedy_s: 0.9,
                q_greedy_next: Some(0.4)
            }
        );
        assert_eq!(steps[1].q.unwrap().q_greedy_next, None);

        let other = q.map(|v| v * 2.0).unwrap();
        let re = annotate(&annotated, &other).unwrap();
        assert_eq!(re.without_annotations(), d);
        assert!(validate_annotations(&re, &q).is_err());

        let small = table(&[vec![0.0, 0.0]]);
        assert!(annotate(&d, &small).is_err());
    }
}
