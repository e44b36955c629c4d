//! JSON-lines encoding of traces: one snapshot or one event per line.
//!
//! Snapshot lines carry `t` and per-level `level`/`hash`/`dim`/`repr`/`causal`;
//! event lines carry `event` and `exo`. Events follow the snapshot whose time
//! they start from.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::state::{FunctionalState, RuleFingerprint};
use super::trace::{Trace, TraceEvent};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct LevelLine {
    level: usize,
    hash: String,
    dim: usize,
    repr: bool,
    causal: bool,
}

#[derive(Serialize, Deserialize)]
struct SnapshotLine {
    t: u64,
    levels: Vec<LevelLine>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Line {
    Event(TraceEvent),
    Snapshot(SnapshotLine),
}

fn snapshot_line(s: &FunctionalState) -> SnapshotLine {
    SnapshotLine {
        t: s.t,
        levels: s
            .levels
            .iter()
            .enumerate()
            .map(|(i, fp)| LevelLine {
                level: fp.level,
                hash: fp.payload_hash.clone(),
                dim: fp.payload_dim,
                repr: s.repr_mask[i],
                causal: s.causal_mask[i],
            })
            .collect(),
    }
}

pub fn write_trace<W: Write>(trace: &Trace, mut out: W) -> Result<()> {
    let mut order: Vec<&TraceEvent> = trace.events.iter().collect();
    order.sort_by_key(|e| e.op.timestep);
    let mut next = order.into_iter().peekable();
    for s in &trace.snapshots {
        serde_json::to_writer(&mut out, &snapshot_line(s))?;
        out.write_all(b"\n")?;
        while let Some(e) = next.next_if(|e| e.op.timestep == s.t) {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

pub fn trace_to_string(trace: &Trace) -> Result<String> {
    let mut buf = Vec::new();
    write_trace(trace, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::InvalidInput(e.to_string()))
}

pub fn read_trace<R: BufRead>(input: R) -> Result<Trace> {
    let mut snapshots = Vec::new();
    let mut events = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: Line = serde_json::from_str(&line)
            .map_err(|e| Error::MalformedTrace(format!("line {}: {e}", n + 1)))?;
        match parsed {
            Line::Event(e) => events.push(e),
            Line::Snapshot(s) => {
                let mut levels = Vec::with_capacity(s.levels.len());
                let mut repr = Vec::with_capacity(s.levels.len());
                let mut causal = Vec::with_capacity(s.levels.len());
                for l in s.levels {
                    levels.push(RuleFingerprint {
                        level: l.level,
                        payload_hash: l.hash,
                        payload_dim: l.dim,
                    });
                    repr.push(l.repr);
                    causal.push(l.causal);
                }
                snapshots.push(FunctionalState {
                    t: s.t,
                    levels,
                    repr_mask: repr,
                    causal_mask: causal,
                });
            }
        }
    }
    Trace::new(snapshots, events)
}

pub fn trace_from_str(s: &str) -> Result<Trace> {
    read_trace(s.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::{LocalOperation, TraceRecorder};
    use proptest::prelude::*;

    fn build(masks: &[(bool, bool)], changes: &[(usize, bool)]) -> Trace {
        let n = masks.len();
        let init = FunctionalState::new(
            0,
            (0..n)
                .map(|i| RuleFingerprint::symbolic(i, &format!("r{i}")))
                .collect(),
            masks.iter().map(|m| m.0).collect(),
            masks.iter().map(|m| m.1).collect(),
        )
        .unwrap();
        let mut rec = TraceRecorder::new(init).unwrap();
        for (step, &(level, exo)) in changes.iter().enumerate() {
            let level = level % n;
            let op = if level == n - 1 {
                LocalOperation::norm_revision(level)
            } else {
                LocalOperation::new(level, n - 1).with_repr_triple(step % 2 == 0)
            };
            rec.tick(
                vec![RuleFingerprint::symbolic(level, &format!("r{level}s{step}"))],
                vec![(op, exo)],
            )
            .unwrap();
        }
        rec.finish().unwrap()
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(
            masks in prop::collection::vec((any::<bool>(), any::<bool>()), 2..6),
            changes in prop::collection::vec((0usize..6, any::<bool>()), 0..8),
        ) {
            let trace = build(&masks, &changes);
            let text = trace_to_string(&trace).unwrap();
            let back = trace_from_str(&text).unwrap();
            prop_assert_eq!(&back, &trace);
            prop_assert_eq!(trace_to_string(&back).unwrap(), text);
        }
    }

    #[test]
    fn field_names_are_fixed() {
        let text = trace_to_string(&build(&[(true, false), (false, true)], &[(0, false)])).unwrap();
        let first = text.lines().next().unwrap();
        for key in ["\"t\"", "\"level\"", "\"hash\"", "\"repr\"", "\"causal\""] {
            assert!(first.contains(key), "{key} missing in {first}");
        }
        let event = text.lines().nth(1).unwrap();
        assert!(event.contains("\"event\"") && event.contains("\"exo\""));
    }

    #[test]
    fn garbage_line_is_malformed() {
        assert!(matches!(
            trace_from_str("{\"nope\":1}\n"),
            Err(Error::MalformedTrace(_))
        ));
    }
}
