//! Append-only JSONL vote log and rating snapshots.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ArenaError, EloConfig, RatingTable, Vote};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteRecord {
    pub seq: u64,
    pub battle_id: String,
    pub agent_a: String,
    pub agent_b: String,
    pub vote: Vote,
}

/// Writer half of the log. Each record is flushed before `append` returns.
#[derive(Debug)]
pub struct BattleLog {
    path: PathBuf,
    file: File,
}

impl BattleLog {
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, ArenaError> {
        let path = path.into();
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(Self { path, file })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, record: &VoteRecord) -> Result<(), ArenaError> {
        let mut line = serde_json::to_string(record).expect("vote records serialize");
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.flush()?;
        Ok(())
    }
}

pub fn read_log(path: &Path) -> Result<Vec<VoteRecord>, ArenaError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| ArenaError::Log { line: i + 1, source })?);
    }
    Ok(out)
}

/// Rebuilds a table by applying the records in order.
pub fn replay(config: EloConfig, records: &[VoteRecord]) -> Result<RatingTable, ArenaError> {
    let mut table = RatingTable::new(config);
    for r in records {
        table.record(&r.agent_a, &r.agent_b, r.vote)?;
    }
    Ok(table)
}

/// Writes the table as JSON through a sibling temp file and a rename.
pub fn write_snapshot(table: &RatingTable, path: &Path) -> Result<(), ArenaError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, serde_json::to_vec_pretty(table).expect("tables serialize"))?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}
