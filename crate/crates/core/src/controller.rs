//! Heralding logic: turns the herald stream into n-photon triggers.
//!
//! A trigger fires when `n` consecutive slots carry an effective herald.
//! Runs are claimed greedily from the left and never overlap: once a slot
//! belongs to a trigger it cannot start or join another one, since the
//! router is busy converting that run.

use crate::model::{SlotRecord, TriggerEvent};

/// Streaming run finder. Feed records in increasing slot order; gaps in
/// `slot_index` count as slots without a herald, so sparse streams work.
#[derive(Debug, Clone)]
pub struct RunDetector {
    n: usize,
    run: usize,
    last_slot: Option<u64>,
}

impl RunDetector {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "run length must be at least 1");
        RunDetector {
            n,
            run: 0,
            last_slot: None,
        }
    }

    pub fn run_length(&self) -> usize {
        self.n
    }

    pub fn push(&mut self, rec: &SlotRecord) -> Option<TriggerEvent> {
        let contiguous = self.last_slot.is_some_and(|s| s + 1 == rec.slot_index);
        self.last_slot = Some(rec.slot_index);
        if !rec.herald_effective() {
            self.run = 0;
            return None;
        }
        self.run = if contiguous { self.run + 1 } else { 1 };
        if self.run == self.n {
            self.run = 0;
            return Some(TriggerEvent {
                start_slot: rec.slot_index + 1 - self.n as u64,
                run_length: self.n,
            });
        }
        None
    }
}

/// All non-overlapping runs of `n` consecutive effective heralds.
pub fn detect_runs(slots: &[SlotRecord], n: usize) -> Vec<TriggerEvent> {
    let mut det = RunDetector::new(n);
    slots.iter().filter_map(|r| det.push(r)).collect()
}

/// Router drive for one trigger: photon `j` goes to port `j`, switched at
/// slot `start_slot + j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DriveSchedule {
    pub assignments: Vec<usize>,
    pub switch_slots: Vec<u64>,
}

impl DriveSchedule {
    pub fn port_for(&self, photon: usize) -> usize {
        self.assignments[photon]
    }
}

pub fn drive_schedule(trigger: &TriggerEvent) -> DriveSchedule {
    DriveSchedule {
        assignments: (0..trigger.run_length).collect(),
        switch_slots: trigger.slots().collect(),
    }
}
