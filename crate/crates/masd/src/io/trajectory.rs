//! Trajectory persistence.
//!
//! CSV schema: `run_id,skill,agent,step,x,y,init_id,seed`, one row per
//! agent per step. Floats are rendered with the shortest decimal that
//! parses back to the identical bits, so analyses recomputed from files
//! match in-memory results exactly.
//!
//! Initial-condition snapshots reuse the same schema with step 0 and the
//! `agent` column indexing entities: agents first, then landmarks, then
//! the prey when present.

use crate::analysis::TrajectoryRecord;
use crate::envs::InitSnapshot;
use crate::{Error, Result};
use std::io::{BufRead, Write};
use std::path::Path;

const HEADER: &str = "run_id,skill,agent,step,x,y,init_id,seed";

pub fn write_trajectories(path: &Path, records: &[TrajectoryRecord]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "{HEADER}")?;
    for r in records {
        for (agent, path_points) in r.positions.iter().enumerate() {
            for (step, p) in path_points.iter().enumerate() {
                writeln!(
                    f,
                    "{},{},{},{},{},{},{},{}",
                    r.run_id, r.skill, agent, step, p[0], p[1], r.init_id, r.seed
                )?;
            }
        }
    }
    f.flush()?;
    Ok(())
}

struct Row {
    run_id: u64,
    skill: usize,
    agent: usize,
    step: usize,
    x: f64,
    y: f64,
    init_id: usize,
    seed: u64,
}

fn parse_row(line: &str, lineno: usize, path: &Path) -> Result<Row> {
    let err = |msg: String| Error::Data(format!("{}:{lineno}: {msg}", path.display()));
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 8 {
        return Err(err(format!("expected 8 fields, got {}", fields.len())));
    }
    Ok(Row {
        run_id: fields[0].parse().map_err(|e| err(format!("run_id: {e}")))?,
        skill: fields[1].parse().map_err(|e| err(format!("skill: {e}")))?,
        agent: fields[2].parse().map_err(|e| err(format!("agent: {e}")))?,
        step: fields[3].parse().map_err(|e| err(format!("step: {e}")))?,
        x: fields[4].parse().map_err(|e| err(format!("x: {e}")))?,
        y: fields[5].parse().map_err(|e| err(format!("y: {e}")))?,
        init_id: fields[6].parse().map_err(|e| err(format!("init_id: {e}")))?,
        seed: fields[7].parse().map_err(|e| err(format!("seed: {e}")))?,
    })
}

/// Reads records back, grouped by (run_id, skill, init_id, seed) in file
/// order. Rows must arrive agent-major, step-ordered, as written.
pub fn read_trajectories(path: &Path) -> Result<Vec<TrajectoryRecord>> {
    let file = std::fs::File::open(path)?;
    let mut records: Vec<TrajectoryRecord> = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if i == 0 {
            if line.trim() != HEADER {
                return Err(Error::Data(format!(
                    "{}: bad header '{line}'",
                    path.display()
                )));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let row = parse_row(&line, i + 1, path)?;
        let matches_current = records.last().is_some_and(|r: &TrajectoryRecord| {
            r.run_id == row.run_id
                && r.skill == row.skill
                && r.init_id == row.init_id
                && r.seed == row.seed
        });
        if !matches_current {
            records.push(TrajectoryRecord {
                run_id: row.run_id,
                skill: row.skill,
                init_id: row.init_id,
                seed: row.seed,
                positions: Vec::new(),
            });
        }
        let rec = records.last_mut().unwrap();
        if row.agent == rec.positions.len() && row.step == 0 {
            rec.positions.push(Vec::new());
        }
        let agent_path = rec.positions.get_mut(row.agent).ok_or_else(|| {
            Error::Data(format!(
                "{}:{}: agent {} out of order",
                path.display(),
                i + 1,
                row.agent
            ))
        })?;
        if row.step != agent_path.len() {
            return Err(Error::Data(format!(
                "{}:{}: step {} out of order",
                path.display(),
                i + 1,
                row.step
            )));
        }
        agent_path.push([row.x, row.y]);
    }
    Ok(records)
}

/// Writes an initial condition in the trajectory schema (step 0 rows,
/// entity index in the agent column).
pub fn write_snapshot(path: &Path, snapshot: &InitSnapshot) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "{HEADER}")?;
    let mut entity = 0usize;
    for p in snapshot
        .agent_pos
        .iter()
        .chain(snapshot.landmark_pos.iter())
        .chain(snapshot.prey_pos.iter())
    {
        writeln!(f, "0,0,{entity},0,{},{},0,0", p[0], p[1])?;
        entity += 1;
    }
    f.flush()?;
    Ok(())
}

pub fn read_snapshot(
    path: &Path,
    num_agents: usize,
    num_landmarks: usize,
    has_prey: bool,
) -> Result<InitSnapshot> {
    let file = std::fs::File::open(path)?;
    let mut coords: Vec<[f64; 2]> = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if i == 0 {
            if line.trim() != HEADER {
                return Err(Error::Data(format!(
                    "{}: bad header '{line}'",
                    path.display()
                )));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let row = parse_row(&line, i + 1, path)?;
        if row.agent != coords.len() || row.step != 0 {
            return Err(Error::Data(format!(
                "{}:{}: snapshot rows must be one step-0 row per entity",
                path.display(),
                i + 1
            )));
        }
        coords.push([row.x, row.y]);
    }
    let expected = num_agents + num_landmarks + usize::from(has_prey);
    if coords.len() != expected {
        return Err(Error::Data(format!(
            "{}: snapshot has {} entities, task expects {expected}",
            path.display(),
            coords.len()
        )));
    }
    Ok(InitSnapshot {
        agent_pos: coords[..num_agents].to_vec(),
        landmark_pos: coords[num_agents..num_agents + num_landmarks].to_vec(),
        prey_pos: has_prey.then(|| coords[expected - 1]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;

    #[test]
    fn csv_roundtrip_bit_exact() {
        let mut rng = RngStream::seed_from(5);
        let records: Vec<TrajectoryRecord> = (0..4)
            .map(|k| TrajectoryRecord {
                run_id: 3,
                skill: k,
                init_id: k % 2,
                seed: 17,
                positions: (0..3)
                    .map(|_| {
                        (0..6)
                            .map(|_| [rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)])
                            .collect()
                    })
                    .collect(),
            })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traj.csv");
        write_trajectories(&path, &records).unwrap();
        let back = read_trajectories(&path).unwrap();
        assert_eq!(records, back, "positions must round-trip bit-exactly");
    }

    #[test]
    fn malformed_rows_are_located() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traj.csv");
        std::fs::write(&path, format!("{HEADER}\n1,0,0,0,zero,0.0,0,1\n")).unwrap();
        let err = read_trajectories(&path).unwrap_err();
        assert!(err.to_string().contains(":2:"), "{err}");

        std::fs::write(&path, "bogus,header\n").unwrap();
        assert!(read_trajectories(&path).is_err());
    }

    #[test]
    fn snapshot_roundtrip() {
        let snap = InitSnapshot {
            agent_pos: vec![[0.1, 0.2], [0.3, 0.4], [-0.5, 0.6]],
            landmark_pos: vec![[0.7, -0.8]],
            prey_pos: Some([0.9, -0.95]),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snap.csv");
        write_snapshot(&path, &snap).unwrap();
        let back = read_snapshot(&path, 3, 1, true).unwrap();
        assert_eq!(snap, back);

        assert!(read_snapshot(&path, 3, 1, false).is_err());
        assert!(read_snapshot(&path, 2, 1, true).is_err());
    }
}
