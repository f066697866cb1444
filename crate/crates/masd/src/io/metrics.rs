//! Metrics stream: one JSON object per line, flushed per record so a
//! crashed run leaves a valid prefix. Records are refused before a NaN
//! can reach the file.

use crate::maddpg::MetricsRecord;
use crate::{Error, Result};
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

pub struct MetricsWriter {
    file: std::io::BufWriter<std::fs::File>,
    path: PathBuf,
}

impl MetricsWriter {
    /// Starts a fresh metrics file.
    pub fn create(path: &Path) -> Result<Self> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        Ok(Self {
            file: std::io::BufWriter::new(std::fs::File::create(path)?),
            path: path.to_path_buf(),
        })
    }

    /// Opens an existing file for appending (resumed runs).
    pub fn append_to(path: &Path) -> Result<Self> {
        Ok(Self {
            file: std::io::BufWriter::new(
                std::fs::OpenOptions::new().create(true).append(true).open(path)?,
            ),
            path: path.to_path_buf(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, record: &MetricsRecord) -> Result<()> {
        if !record.is_finite() {
            return Err(Error::NonFinite(format!(
                "refusing to write non-finite metrics at episode {}",
                record.episode
            )));
        }
        serde_json::to_writer(&mut self.file, record)?;
        self.file.write_all(b"\n")?;
        self.file.flush()?;
        Ok(())
    }
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRecord>> {
    let file = std::fs::File::open(path)?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: MetricsRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Data(format!("{}:{}: {e}", path.display(), i + 1)))?;
        out.push(record);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(episode: u64, mi: bool) -> MetricsRecord {
        MetricsRecord {
            episode,
            active_k: 3,
            mean_global_lp: -0.5,
            mean_local_lp: vec![-1.0, -1.1],
            pseudo_reward_mean: 0.4,
            td_loss: 0.01,
            disc_losses: vec![0.5, 0.9, 0.8],
            mi_global: mi.then_some(0.93),
            mi_local: mi.then_some(vec![0.02, 0.05]),
            extrinsic_reward: (!mi).then_some(0.0),
            weak_signal_mean: None,
        }
    }

    #[test]
    fn lines_parse_independently_and_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("metrics.jsonl");
        let mut w = MetricsWriter::create(&path).unwrap();
        let records = vec![record(10, true), record(20, true)];
        for r in &records {
            w.append(r).unwrap();
        }
        drop(w);
        let text = std::fs::read_to_string(&path).unwrap();
        for line in text.lines() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            assert!(v.get("episode").is_some());
        }
        assert_eq!(read_metrics(&path).unwrap(), records);
    }

    #[test]
    fn optional_fields_follow_task_schema() {
        let xor = serde_json::to_string(&record(1, true)).unwrap();
        assert!(xor.contains("mi_global") && !xor.contains("extrinsic_reward"));
        let particle = serde_json::to_string(&record(1, false)).unwrap();
        assert!(!particle.contains("mi_global") && particle.contains("extrinsic_reward"));
    }

    #[test]
    fn nan_refused_before_write() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("metrics.jsonl");
        let mut w = MetricsWriter::create(&path).unwrap();
        let mut bad = record(5, false);
        bad.td_loss = f64::NAN;
        assert!(w.append(&bad).is_err());
        drop(w);
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "");
    }

    #[test]
    fn append_mode_keeps_prefix() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("metrics.jsonl");
        let mut w = MetricsWriter::create(&path).unwrap();
        w.append(&record(10, false)).unwrap();
        drop(w);
        let mut w = MetricsWriter::append_to(&path).unwrap();
        w.append(&record(20, false)).unwrap();
        drop(w);
        let all = read_metrics(&path).unwrap();
        assert_eq!(all.len(), 2);
        assert_eq!(all[0].episode, 10);
        assert_eq!(all[1].episode, 20);
    }
}
