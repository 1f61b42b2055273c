//! Table file layout, little endian throughout:
//!
//! ```text
//! b"AGQT"  u32 version  u32 header_len  header (JSON, header_len bytes)
//! for each agent, for each table (reward, then risk if present):
//!     states * actions f64 values, row-major by state
//!     states * actions u32 visit counts
//! ```
//!
//! The header carries the state-space dimensions, the hyperparameters and the
//! risk weight.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::num::Real;
use crate::scenario::Scenario;

use super::learner::{AbsAgent, OffloadLearner};
use super::table::QTable;
use super::{AgentError, AgentParams, StateSpace};

const MAGIC: &[u8; 4] = b"AGQT";
pub const TABLE_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    space: StateSpace,
    params: AgentParams,
    zeta: f64,
    agents: usize,
}

pub fn save_tables<T: Real>(learner: &OffloadLearner<T>, path: impl AsRef<Path>) -> Result<(), AgentError> {
    let header = serde_json::to_vec(&Header {
        space: learner.space,
        params: learner.params.clone(),
        zeta: learner.zeta.as_f64(),
        agents: learner.agents.len(),
    })
    .expect("header serializes");
    let mut out = BufWriter::new(fs::File::create(path)?);
    out.write_all(MAGIC)?;
    out.write_all(&TABLE_FORMAT_VERSION.to_le_bytes())?;
    out.write_all(&(header.len() as u32).to_le_bytes())?;
    out.write_all(&header)?;
    for ag in &learner.agents {
        for table in std::iter::once(&ag.reward).chain(ag.risk.as_ref()) {
            for v in table.values() {
                out.write_all(&v.as_f64().to_le_bytes())?;
            }
            for n in table.visits() {
                out.write_all(&n.to_le_bytes())?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], AgentError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| AgentError::Malformed("file is truncated".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, AgentError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn load_tables<T: Real>(path: impl AsRef<Path>) -> Result<OffloadLearner<T>, AgentError> {
    let bytes = fs::read(path)?;
    let mut r = Reader { buf: &bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(AgentError::Malformed("not a table file".into()));
    }
    let version = r.u32()?;
    if version != TABLE_FORMAT_VERSION {
        return Err(AgentError::VersionMismatch(format!(
            "file has format version {version}, this build reads {TABLE_FORMAT_VERSION}"
        )));
    }
    let header_len = r.u32()? as usize;
    let header: Header =
        serde_json::from_slice(r.take(header_len)?).map_err(|e| AgentError::Malformed(format!("header: {e}")))?;
    header.params.validate()?;
    if header.space.with_prev_action != header.params.kind.is_dual() {
        return Err(AgentError::Malformed("state space does not fit the learner kind".into()));
    }
    let (n, a) = (header.space.state_count(), header.space.action_count());
    let read_table = |r: &mut Reader| -> Result<QTable<T>, AgentError> {
        let values = r.take(n * a * 8)?.chunks_exact(8).map(|c| T::lit(f64::from_le_bytes(c.try_into().unwrap())));
        let values: Vec<T> = values.collect();
        let visits = r.take(n * a * 4)?.chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(QTable::from_parts(n, a, values, visits))
    };
    let mut agents = Vec::with_capacity(header.agents);
    for _ in 0..header.agents {
        let reward = read_table(&mut r)?;
        let risk = if header.params.kind.is_dual() { Some(read_table(&mut r)?) } else { None };
        agents.push(AbsAgent { reward, risk });
    }
    if r.pos != bytes.len() {
        return Err(AgentError::Malformed("trailing bytes after the tables".into()));
    }
    Ok(OffloadLearner::from_parts(header.space, header.params, agents, T::lit(header.zeta)))
}

/// Loads tables and checks they fit `scenario`'s state space.
pub fn load_tables_for<T: Real>(path: impl AsRef<Path>, scenario: &Scenario<T>) -> Result<OffloadLearner<T>, AgentError> {
    let learner = load_tables::<T>(path)?;
    let expected = StateSpace::new(
        scenario.task_types().len(),
        scenario.resource_count(),
        scenario.abs_count(),
        learner.kind().is_dual(),
    );
    if learner.space != expected || learner.agents.len() != scenario.abs_count() {
        return Err(AgentError::VersionMismatch(format!(
            "tables were trained for {:?}, the scenario needs {:?}",
            learner.space, expected
        )));
    }
    Ok(learner)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::AgentKind;
    use crate::scenario::{generate_trace, ScenarioConfig};

    fn small_world(abs: usize) -> Scenario<f64> {
        let cfg = ScenarioConfig { horizon_s: 2.0, abs_count: abs, ..ScenarioConfig::default() };
        cfg.build().unwrap()
    }

    #[test]
    fn trained_tables_round_trip() {
        let s = small_world(2);
        let traces = vec![generate_trace(&s, 1)];
        for kind in [AgentKind::QLearning, AgentKind::RiskSensitive] {
            let mut l = OffloadLearner::new(&s, AgentParams { episodes: 5, update_every: 1, ..AgentParams::new(kind) }).unwrap();
            l.train(&s, &traces).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("t.agqt");
            save_tables(&l, &p).unwrap();
            let back = load_tables_for(&p, &s).unwrap();
            assert!(back == l);
        }
    }

    #[test]
    fn fresh_tables_stay_fresh() {
        let s = small_world(2);
        let l = OffloadLearner::new(&s, AgentParams::new(AgentKind::RiskSensitive)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.agqt");
        save_tables(&l, &p).unwrap();
        let back: OffloadLearner<f64> = load_tables(&p).unwrap();
        assert!(back.reward_table(0).is_fresh() && back.risk_table(1).unwrap().is_fresh());
    }

    #[test]
    fn mismatched_world_is_a_version_mismatch() {
        let s = small_world(2);
        let l = OffloadLearner::new(&s, AgentParams::new(AgentKind::QLearning)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.agqt");
        save_tables(&l, &p).unwrap();
        assert!(matches!(load_tables_for(&p, &small_world(3)), Err(AgentError::VersionMismatch(_))));
    }

    #[test]
    fn other_format_version_is_rejected() {
        let s = small_world(1);
        let l = OffloadLearner::new(&s, AgentParams::new(AgentKind::QLearning)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.agqt");
        save_tables(&l, &p).unwrap();
        let mut bytes = fs::read(&p).unwrap();
        bytes[4..8].copy_from_slice(&99u32.to_le_bytes());
        fs::write(&p, &bytes).unwrap();
        assert!(matches!(load_tables::<f64>(&p), Err(AgentError::VersionMismatch(_))));
        bytes.truncate(40);
        fs::write(&p, &bytes).unwrap();
        assert!(load_tables::<f64>(&p).is_err());
    }

    #[test]
    fn missing_file_is_io() {
        assert!(matches!(load_tables::<f64>("/nonexistent/t.agqt"), Err(AgentError::Io(_))));
    }
}
