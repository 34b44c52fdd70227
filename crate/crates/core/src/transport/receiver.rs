use std::collections::BTreeMap;

use super::{DataChunk, SackChunk, Tsn, TransportParams};
use crate::netsim::PathId;

/// What the receiver wants done after an arrival.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RxOutput {
    /// SACK to send back along the given path.
    pub sack: Option<(SackChunk, PathId)>,
    /// Arm the delayed-ack timer `delay` seconds from now with this
    /// generation.
    pub arm_timer: Option<(f64, u64)>,
    /// User bytes handed to the application by this arrival.
    pub delivered: u64,
}

/// Receiving endpoint: reorders chunks, delivers them in TSN order exactly
/// once, and generates SACKs.
#[derive(Debug, Clone)]
pub struct Receiver {
    params: TransportParams,
    cum_tsn: Tsn,
    above: BTreeMap<Tsn, u32>,
    /// Offsets of buffered chunks, for the in-order delivery check.
    offsets: BTreeMap<Tsn, u64>,
    delivered_bytes: u64,
    delivered_chunks: u64,
    order_violations: u64,
    duplicates: u64,
    unacked_arrivals: u32,
    timer_gen: u64,
    timer_armed: bool,
    last_path: PathId,
    sacks_sent: u64,
}

impl Receiver {
    pub fn new(params: TransportParams) -> Self {
        Receiver {
            params,
            cum_tsn: 0,
            above: BTreeMap::new(),
            offsets: BTreeMap::new(),
            delivered_bytes: 0,
            delivered_chunks: 0,
            order_violations: 0,
            duplicates: 0,
            unacked_arrivals: 0,
            timer_gen: 0,
            timer_armed: false,
            last_path: 0,
            sacks_sent: 0,
        }
    }

    pub fn cum_tsn(&self) -> Tsn {
        self.cum_tsn
    }

    pub fn delivered_bytes(&self) -> u64 {
        self.delivered_bytes
    }

    pub fn delivered_chunks(&self) -> u64 {
        self.delivered_chunks
    }

    /// Chunks delivered at an unexpected stream offset. Always zero unless
    /// the transport is broken.
    pub fn order_violations(&self) -> u64 {
        self.order_violations
    }

    pub fn duplicates(&self) -> u64 {
        self.duplicates
    }

    pub fn sacks_sent(&self) -> u64 {
        self.sacks_sent
    }

    pub fn on_data(&mut self, chunk: &DataChunk, path: PathId) -> RxOutput {
        self.last_path = path;
        let mut out = RxOutput::default();
        let tsn = chunk.tsn;
        if tsn <= self.cum_tsn || self.above.contains_key(&tsn) {
            self.duplicates += 1;
            out.sack = Some((self.take_sack(), path));
            return out;
        }
        let had_gaps = !self.above.is_empty();
        let in_order = tsn == self.cum_tsn + 1;
        self.above.insert(tsn, chunk.bytes);
        self.offsets.insert(tsn, chunk.offset);
        while let Some((&next, &bytes)) = self.above.first_key_value() {
            if next != self.cum_tsn + 1 {
                break;
            }
            self.above.remove(&next);
            let offset = self.offsets.remove(&next).expect("offset recorded with chunk");
            if offset != self.delivered_bytes {
                self.order_violations += 1;
            }
            self.cum_tsn = next;
            self.delivered_bytes += u64::from(bytes);
            self.delivered_chunks += 1;
            out.delivered += u64::from(bytes);
        }

        if !in_order || had_gaps {
            out.sack = Some((self.take_sack(), path));
            return out;
        }
        self.unacked_arrivals += 1;
        if self.unacked_arrivals >= self.params.delayed_ack_factor {
            out.sack = Some((self.take_sack(), path));
        } else if !self.timer_armed {
            self.timer_gen += 1;
            self.timer_armed = true;
            out.arm_timer = Some((self.params.delayed_ack_timeout, self.timer_gen));
        }
        out
    }

    /// Delayed-ack timer expiry.
    pub fn on_timer(&mut self, gen: u64) -> Option<(SackChunk, PathId)> {
        if !self.timer_armed || gen != self.timer_gen {
            return None;
        }
        Some((self.take_sack(), self.last_path))
    }

    /// Current acknowledgement state without side effects.
    pub fn build_sack(&self) -> SackChunk {
        let mut gap_blocks: Vec<(Tsn, Tsn)> = Vec::new();
        for &tsn in self.above.keys() {
            match gap_blocks.last_mut() {
                Some(last) if last.1 + 1 == tsn => last.1 = tsn,
                _ => gap_blocks.push((tsn, tsn)),
            }
        }
        let buffered: u64 = self.above.values().map(|b| u64::from(*b)).sum();
        SackChunk {
            cum_tsn: self.cum_tsn,
            gap_blocks,
            rwnd: self.params.rwnd.saturating_sub(buffered),
        }
    }

    fn take_sack(&mut self) -> SackChunk {
        self.unacked_arrivals = 0;
        self.timer_armed = false;
        self.timer_gen += 1;
        self.sacks_sent += 1;
        self.build_sack()
    }
}
