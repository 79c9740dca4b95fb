//! JSON-lines episode logs: one episode object per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::types::{ActionId, Dataset, Episode, QAnnotation, StateId, Transition};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepRecord {
    pub t: usize,
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_sa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_greedy_s: Option<f64>,
    /// Absent: unannotated. `Some(None)`: annotated last step (JSON null).
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        deserialize_with = "present"
    )]
    pub q_greedy_next: Option<Option<f64>>,
}

fn present<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Option<f64>>, D::Error> {
    Option::<f64>::deserialize(d).map(Some)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpisodeRecord {
    pub episode_id: String,
    pub steps: Vec<StepRecord>,
    pub final_reward: f64,
}

impl From<&Episode> for EpisodeRecord {
    fn from(ep: &Episode) -> Self {
        let steps = ep
            .transitions
            .iter()
            .map(|tr| StepRecord {
                t: tr.t,
                state: tr.state.0,
                action: tr.action.0,
                reward: tr.reward,
                q_sa: tr.q.map(|q| q.q_sa),
                q_greedy_s: tr.q.map(|q| q.q_greedy_s),
                q_greedy_next: tr.q.map(|q| q.q_greedy_next),
            })
            .collect();
        EpisodeRecord {
            episode_id: ep.id.clone(),
            steps,
            final_reward: ep.final_reward,
        }
    }
}

impl EpisodeRecord {
    pub fn into_episode(self) -> Result<Episode> {
        let id = self.episode_id;
        let transitions = self
            .steps
            .into_iter()
            .map(|s| {
                let q = match (s.q_sa, s.q_greedy_s, s.q_greedy_next) {
                    (None, None, None) => None,
                    (Some(q_sa), Some(q_greedy_s), Some(q_greedy_next)) => Some(QAnnotation {
                        q_sa,
                        q_greedy_s,
                        q_greedy_next,
                    }),
                    _ => {
                        return Err(Error::invalid(format!(
                            "episode {id} step {}: q_sa, q_greedy_s and q_greedy_next must appear together",
                            s.t
                        )))
                    }
                };
                Ok(Transition {
                    t: s.t,
                    state: StateId(s.state),
                    action: ActionId(s.action),
                    reward: s.reward,
                    q,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if transitions.is_empty() {
            return Err(Error::invalid(format!("episode {id} has no steps")));
        }
        let episode = Episode {
            id,
            transitions,
            final_reward: self.final_reward,
        };
        episode.validate(false)?;
        Ok(episode)
    }
}

/// Checks applied while reading a log.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LogCheck {
    /// Enforce the binary-reward convention.
    pub binary: bool,
    pub state_count: Option<usize>,
    pub action_count: Option<usize>,
}

impl LogCheck {
    fn check(&self, ep: &Episode) -> Result<()> {
        ep.validate(self.binary)?;
        for tr in &ep.transitions {
            if let Some(n) = self.action_count.filter(|&n| tr.action.0 >= n) {
                return Err(Error::invalid(format!(
                    "episode {} step {}: action {} out of range (action count {n})",
                    ep.id, tr.t, tr.action.0
                )));
            }
            if let Some(n) = self.state_count.filter(|&n| tr.state.0 >= n) {
                return Err(Error::invalid(format!(
                    "episode {} step {}: state {} out of range (state count {n})",
                    ep.id, tr.t, tr.state.0
                )));
            }
        }
        Ok(())
    }
}

pub fn episode_to_line(ep: &Episode) -> String {
    serde_json::to_string(&EpisodeRecord::from(ep)).expect("episode serialises")
}

pub fn write_episodes<W: Write>(mut w: W, episodes: &[Episode]) -> std::io::Result<()> {
    for ep in episodes {
        w.write_all(episode_to_line(ep).as_bytes())?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn write_log(path: &Path, d: &Dataset) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_episodes(BufWriter::new(file), &d.episodes).map_err(|e| Error::io(path, e))
}

/// Parses episodes from JSON lines. Blank lines are skipped; every error
/// names its 1-based line number.
pub fn read_episodes<R: BufRead>(r: R, check: &LogCheck) -> Result<Vec<Episode>> {
    let mut episodes = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let at = |e: Error| Error::Parse {
            line: line_no,
            message: e.to_string(),
        };
        let record: EpisodeRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let ep = record.into_episode().map_err(at)?;
        check.check(&ep).map_err(at)?;
        episodes.push(ep);
    }
    if episodes.is_empty() {
        return Err(Error::invalid("log contains no episodes"));
    }
    Ok(episodes)
}

/// Reads a log file into a dataset labelled with the file name.
pub fn read_log(path: &Path, check: &LogCheck) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let episodes = read_episodes(BufReader::new(file), check)?;
    let name = path.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
    Dataset::new(episodes, format!("log:{name}"), "logged", 0)
}
