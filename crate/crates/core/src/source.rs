//! Slot-indexed photon stream of a pulsed heralded single-photon source.
//!
//! Each pump pulse emits a pair with probability `pair_prob`. The idler is
//! sent to heralding detector A or B by a passive splitter and registered
//! with the detector efficiency, unless that detector is still blind from
//! its previous detection (non-paralyzable deadtime counted in slots).
//!
//! [`SlotGenerator`] skips directly from one emission to the next with a
//! geometric gap, so its cost scales with the number of pairs rather than
//! the number of slots. [`generate_slots`] expands the same stream into a
//! dense per-slot vector.

use crate::model::{SlotRecord, SourceParams};
use rand::Rng;

/// Per-slot probability of an idler detection, ignoring deadtime.
pub fn herald_probability(params: &SourceParams) -> f64 {
    params.pair_prob() * params.herald_det_efficiency()
}

/// Number of empty slots before the next pair, by inversion. Much faster
/// than block sampling when the pair probability is small.
#[derive(Debug, Clone, Copy)]
struct GapSampler {
    ln_miss: f64,
}

impl GapSampler {
    fn new(p: f64) -> Option<Self> {
        (p > 0.0).then(|| GapSampler { ln_miss: (-p).ln_1p() })
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        // u in (0, 1]
        let u = 1.0 - rng.random::<f64>();
        (u.ln() / self.ln_miss).floor() as u64
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Detector {
    last_fire: Option<u64>,
}

impl Detector {
    fn alive_at(&self, slot: u64, deadtime: u32) -> bool {
        self.last_fire
            .is_none_or(|k| slot > k + u64::from(deadtime))
    }
}

/// Generator state for the sparse stream of every slot in `0..n_slots` that
/// holds a pair; the caller supplies the random source on each step.
///
/// Slots not yielded are empty: no signal photon and no herald.
#[derive(Debug, Clone)]
pub struct SlotSource {
    params: SourceParams,
    gap: Option<GapSampler>,
    next_slot: u64,
    end: u64,
    det_a: Detector,
    det_b: Detector,
}

impl SlotSource {
    pub fn new(params: SourceParams, n_slots: u64) -> Self {
        SlotSource {
            params,
            gap: GapSampler::new(params.pair_prob()),
            next_slot: 0,
            end: n_slots,
            det_a: Detector::default(),
            det_b: Detector::default(),
        }
    }

    pub fn params(&self) -> &SourceParams {
        &self.params
    }

    pub fn next_with<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<SlotRecord> {
        if self.next_slot >= self.end {
            return None;
        }
        let Some(gap) = self.gap else {
            self.next_slot = self.end;
            return None;
        };
        let skip = gap.sample(rng);
        let slot = match self.next_slot.checked_add(skip) {
            Some(s) if s < self.end => s,
            _ => {
                self.next_slot = self.end;
                return None;
            }
        };
        self.next_slot = slot + 1;
        Some(self.emit(slot, rng))
    }

    fn emit<R: Rng + ?Sized>(&mut self, slot: u64, rng: &mut R) -> SlotRecord {
        let p = &self.params;
        let mut photons = 1u8;
        if p.multi_pair_enabled() && rng.random_bool(p.pair_prob()) {
            photons = 2;
        }
        let (mut hit_a, mut hit_b) = (false, false);
        for _ in 0..photons {
            let to_a = rng.random_bool(p.herald_splitter_ratio());
            if rng.random_bool(p.herald_det_efficiency()) {
                if to_a {
                    hit_a = true;
                } else {
                    hit_b = true;
                }
            }
        }
        let dead = p.herald_deadtime_slots();
        let fire_a = hit_a && self.det_a.alive_at(slot, dead);
        let fire_b = hit_b && self.det_b.alive_at(slot, dead);
        if fire_a {
            self.det_a.last_fire = Some(slot);
        }
        if fire_b {
            self.det_b.last_fire = Some(slot);
        }
        SlotRecord {
            slot_index: slot,
            signal_photons: photons,
            herald_a_fired: fire_a,
            herald_b_fired: fire_b,
        }
    }
}

/// [`SlotSource`] bundled with its own random source.
pub struct SlotGenerator<R> {
    source: SlotSource,
    rng: R,
}

impl<R: Rng> SlotGenerator<R> {
    pub fn new(params: SourceParams, n_slots: u64, rng: R) -> Self {
        SlotGenerator {
            source: SlotSource::new(params, n_slots),
            rng,
        }
    }
}

impl<R: Rng> Iterator for SlotGenerator<R> {
    type Item = SlotRecord;

    fn next(&mut self) -> Option<SlotRecord> {
        self.source.next_with(&mut self.rng)
    }
}

/// Dense stream: one record per slot in `0..n_slots`.
pub fn generate_slots<R: Rng>(params: &SourceParams, n_slots: u64, rng: R) -> Vec<SlotRecord> {
    let mut out = Vec::with_capacity(n_slots as usize);
    for rec in SlotGenerator::new(*params, n_slots, rng) {
        while (out.len() as u64) < rec.slot_index {
            out.push(SlotRecord::empty(out.len() as u64));
        }
        out.push(rec);
    }
    while (out.len() as u64) < n_slots {
        out.push(SlotRecord::empty(out.len() as u64));
    }
    out
}
