//! Q-table files: `{"id": .., "state_count": .., "action_count": .., "values": [[..], ..]}`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::QTable;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QTableFile {
    pub id: String,
    pub state_count: usize,
    pub action_count: usize,
    pub values: Vec<Vec<f64>>,
}

impl From<&QTable> for QTableFile {
    fn from(q: &QTable) -> Self {
        QTableFile {
            id: q.id.clone(),
            state_count: q.state_count(),
            action_count: q.action_count(),
            values: q.rows(),
        }
    }
}

impl QTableFile {
    pub fn into_table(self) -> Result<QTable> {
        if self.values.len() != self.state_count {
            return Err(Error::invalid(format!(
                "Q-table {} lists {} rows for state_count {}",
                self.id,
                self.values.len(),
                self.state_count
            )));
        }
        if let Some(s) = self.values.iter().position(|r| r.len() != self.action_count) {
            return Err(Error::invalid(format!(
                "Q-table {} row {s} has {} entries, expected {}",
                self.id,
                self.values[s].len(),
                self.action_count
            )));
        }
        QTable::new(self.id, self.state_count, self.action_count, self.values.concat())
    }
}

pub fn qtable_to_json(q: &QTable) -> String {
    serde_json::to_string(&QTableFile::from(q)).expect("table serialises")
}

pub fn qtable_from_json(text: &str) -> Result<QTable> {
    let file: QTableFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    file.into_table()
}

pub fn read_qtable(path: &Path) -> Result<QTable> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    qtable_from_json(&text)
}

pub fn write_qtable(path: &Path, q: &QTable) -> Result<()> {
    std::fs::write(path, qtable_to_json(q) + "\n").map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let q = QTable::from_rows("q7", &[vec![0.1, 1.0 / 3.0], vec![2.5e-300, 7.0]]).unwrap();
        assert_eq!(qtable_from_json(&qtable_to_json(&q)).unwrap(), q);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let bad = r#"{"id":"q","state_count":2,"action_count":2,"values":[[0.1,0.2]]}"#;
        assert!(qtable_from_json(bad).is_err());
        let ragged = r#"{"id":"q","state_count":2,"action_count":2,"values":[[0.1,0.2],[0.3]]}"#;
        assert!(qtable_from_json(ragged).unwrap_err().to_string().contains("row 1"));
    }
}
