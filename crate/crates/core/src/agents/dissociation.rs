use std::io::Write;

use serde::Serialize;

use super::rescorla_wagner::{run_blocking_experiment, BlockingOutcome, RwState};
use super::wcst::{run_session, Criterion, Schedule, Session, WcstAgent, DEFAULT_SCHEDULE};
use crate::rng::derive_seed;
use crate::Result;

pub const PERSEVERATION_WINDOW: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    Intact,
    Lesioned,
}

impl Arm {
    pub fn lesioned(self) -> bool {
        self == Arm::Lesioned
    }
}

/// One simulated subject: a WCST agent and an associative conditioner.
///
/// The lesion flag is handed to the WCST agent only.
pub struct Subject {
    pub arm: Arm,
    pub wcst: WcstAgent,
    pub rw: RwState,
}

impl Subject {
    pub fn new(arm: Arm, seed: u64, threshold: u32, rw: RwState) -> Self {
        Self {
            arm,
            wcst: WcstAgent::new(Criterion::Color, threshold, arm.lesioned(), seed),
            rw,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DissociationRow {
    pub arm: Arm,
    pub seed: u64,
    pub perseveration_rate: f64,
    pub trials_to_reacquire: Option<usize>,
    #[serde(rename = "rw_final_V_A")]
    pub rw_final_v_a: f64,
    #[serde(rename = "rw_final_V_B")]
    pub rw_final_v_b: f64,
}

#[derive(Debug, Clone)]
pub struct SeedResult {
    pub seed: u64,
    pub intact: Session,
    pub lesioned: Session,
    pub rw_intact: BlockingOutcome,
    pub rw_lesioned: BlockingOutcome,
}

impl SeedResult {
    /// Bitwise comparison of the conditioning trajectories of both arms.
    pub fn rw_identical(&self) -> bool {
        let bits = |o: &BlockingOutcome| -> Vec<u64> {
            o.blocked_trajectory
                .iter()
                .chain(&o.control_trajectory)
                .flat_map(|&(a, b)| [a.to_bits(), b.to_bits()])
                .collect()
        };
        bits(&self.rw_intact) == bits(&self.rw_lesioned)
    }
}

#[derive(Debug, Clone)]
pub struct DissociationReport {
    pub threshold: u32,
    pub seeds: Vec<SeedResult>,
}

impl DissociationReport {
    pub fn rows(&self) -> Vec<DissociationRow> {
        let mut rows = Vec::with_capacity(2 * self.seeds.len());
        for s in &self.seeds {
            for (arm, session, rw) in [
                (Arm::Intact, &s.intact, &s.rw_intact),
                (Arm::Lesioned, &s.lesioned, &s.rw_lesioned),
            ] {
                let &(va, vb) = rw.blocked_trajectory.last().unwrap_or(&(0.0, 0.0));
                rows.push(DissociationRow {
                    arm,
                    seed: s.seed,
                    perseveration_rate: session.perseveration_rate(PERSEVERATION_WINDOW),
                    trials_to_reacquire: session.trials_to_reacquire(),
                    rw_final_v_a: va,
                    rw_final_v_b: vb,
                });
            }
        }
        rows
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in self.rows() {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Schedule for one seed: the post-shift criterion is one of the two others.
pub fn schedule_for(seed: u64) -> Schedule {
    let shifted = if derive_seed(seed, &[0x5C4E]) % 2 == 0 {
        Criterion::Shape
    } else {
        Criterion::Number
    };
    Schedule {
        shifted,
        ..DEFAULT_SCHEDULE
    }
}

/// Intact vs lesioned subjects on the same WCST schedule and the same conditioning run.
pub fn run_dissociation(seeds: usize) -> Result<DissociationReport> {
    let threshold = 3;
    let rw = RwState::new(0.5, 1.0, 1.0)?;
    let mut out = Vec::with_capacity(seeds);
    for seed in 0..seeds as u64 {
        let schedule = schedule_for(seed);
        let mut arms = Vec::with_capacity(2);
        for arm in [Arm::Intact, Arm::Lesioned] {
            let subject = Subject::new(arm, seed, threshold, rw.clone());
            let session = run_session(subject.wcst, schedule, seed)?;
            let conditioning = run_blocking_experiment(&subject.rw, 10, 10)?;
            arms.push((session, conditioning));
        }
        let (lesioned, rw_lesioned) = arms.pop().expect("two arms");
        let (intact, rw_intact) = arms.pop().expect("two arms");
        out.push(SeedResult {
            seed,
            intact,
            lesioned,
            rw_intact,
            rw_lesioned,
        });
    }
    Ok(DissociationReport {
        threshold,
        seeds: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arms_dissociate_on_every_seed() {
        let report = run_dissociation(6).unwrap();
        for s in &report.seeds {
            assert!(s.rw_identical());
            let intact = s.intact.perseveration_rate(PERSEVERATION_WINDOW);
            let lesioned = s.lesioned.perseveration_rate(PERSEVERATION_WINDOW);
            assert!(intact < 0.2 && lesioned >= 0.9 && lesioned > intact);
        }
    }

    #[test]
    fn csv_has_the_documented_columns() {
        let mut buf = Vec::new();
        run_dissociation(1).unwrap().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "arm,seed,perseveration_rate,trials_to_reacquire,rw_final_V_A,rw_final_V_B"
        );
        assert_eq!(text.lines().count(), 3);
    }
}
