use std::collections::{BTreeMap, BTreeSet};

use super::{DataChunk, RtxPolicy, RttEstimator, SackChunk, TransportParams, Tsn};
use crate::congestion::{CongestionControl, Decrease};
use crate::engine::SimTime;
use crate::netsim::PathId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimerCmd {
    /// Arm the retransmission timer of `path` to fire at `at`. Firings with
    /// an older generation must be ignored.
    ArmRto { path: PathId, at: SimTime, gen: u64 },
}

/// Work produced by one sender call.
#[derive(Debug, Default)]
pub struct Outbox {
    pub packets: Vec<(PathId, DataChunk)>,
    pub timers: Vec<TimerCmd>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PathStats {
    pub chunks_sent: u64,
    pub chunks_retransmitted: u64,
    /// Fast-retransmit window reductions.
    pub fast_rtx: u64,
    pub timeouts: u64,
    pub rtt_samples: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SenderStats {
    pub bytes_acked: u64,
    pub stale_sacks: u64,
    pub karn_skipped: u64,
    pub paths: Vec<PathStats>,
}

#[derive(Debug, Clone)]
struct Chunk {
    bytes: u32,
    offset: u64,
    tx_path: PathId,
    tx_time: SimTime,
    /// Per-path transmission sequence, used for missing-report ordering.
    tx_seq: u64,
    transmissions: u32,
    missing_reports: u32,
    fast_retransmitted: bool,
    /// Counted in the path's outstanding bytes (false while queued for
    /// retransmission).
    in_flight: bool,
}

#[derive(Debug, Clone)]
struct PathState {
    rtt: RttEstimator,
    outstanding: u64,
    probe: Option<Tsn>,
    next_tx_seq: u64,
    /// While set, the path is in fast recovery until a transmission with a
    /// later sequence is acknowledged.
    recovery_until: Option<u64>,
    timer: Option<u64>,
    timer_gen: u64,
}

/// Sending endpoint of a multipath association carrying a fixed-size file.
pub struct Sender {
    params: TransportParams,
    cc: Box<dyn CongestionControl>,
    paths: Vec<PathState>,
    next_tsn: Tsn,
    next_offset: u64,
    bytes_unsent: u64,
    outstanding: BTreeMap<Tsn, Chunk>,
    rtx_queue: BTreeSet<Tsn>,
    cum_ack: Tsn,
    peer_rwnd: u64,
    rr_cursor: usize,
    stats: SenderStats,
    decreases: Vec<(SimTime, Decrease)>,
    /// First transmission that overshot the window by more than the slack.
    window_violation: Option<String>,
}

impl Sender {
    pub fn new(params: TransportParams, cc: Box<dyn CongestionControl>, file_size: u64) -> Self {
        let n = cc.paths();
        assert!(n >= 1);
        let path = PathState {
            rtt: RttEstimator::new(params.rto_initial, params.rto_min, params.rto_max),
            outstanding: 0,
            probe: None,
            next_tx_seq: 0,
            recovery_until: None,
            timer: None,
            timer_gen: 0,
        };
        Sender {
            peer_rwnd: params.rwnd,
            params,
            cc,
            paths: vec![path; n],
            next_tsn: 1,
            next_offset: 0,
            bytes_unsent: file_size,
            outstanding: BTreeMap::new(),
            rtx_queue: BTreeSet::new(),
            cum_ack: 0,
            rr_cursor: 0,
            stats: SenderStats {
                paths: vec![PathStats::default(); n],
                ..SenderStats::default()
            },
            decreases: Vec::new(),
            window_violation: None,
        }
    }

    pub fn cc(&self) -> &dyn CongestionControl {
        self.cc.as_ref()
    }

    pub fn path_count(&self) -> usize {
        self.paths.len()
    }

    pub fn stats(&self) -> &SenderStats {
        &self.stats
    }

    /// Every window reduction with the time it happened.
    pub fn decreases(&self) -> &[(SimTime, Decrease)] {
        &self.decreases
    }

    pub fn path_outstanding(&self, path: PathId) -> u64 {
        self.paths[path].outstanding
    }

    pub fn srtt(&self, path: PathId) -> Option<f64> {
        self.paths[path].rtt.srtt()
    }

    pub fn rto(&self, path: PathId) -> f64 {
        self.paths[path].rtt.rto()
    }

    pub fn in_fast_recovery(&self, path: PathId) -> bool {
        self.paths[path].recovery_until.is_some()
    }

    pub fn cum_ack(&self) -> Tsn {
        self.cum_ack
    }

    pub fn next_tsn(&self) -> Tsn {
        self.next_tsn
    }

    pub fn bytes_unsent(&self) -> u64 {
        self.bytes_unsent
    }

    /// TSNs sent but not yet acknowledged, with their last transmission path.
    pub fn outstanding_tsns(&self) -> Vec<(Tsn, PathId)> {
        self.outstanding.iter().map(|(t, c)| (*t, c.tx_path)).collect()
    }

    pub fn queued_for_retransmission(&self) -> Vec<Tsn> {
        self.rtx_queue.iter().copied().collect()
    }

    pub fn is_complete(&self) -> bool {
        self.bytes_unsent == 0 && self.outstanding.is_empty()
    }

    /// Checks the bookkeeping invariants; returns a description of the first
    /// violation.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut per_path = vec![0u64; self.paths.len()];
        for (tsn, c) in &self.outstanding {
            if *tsn <= self.cum_ack || *tsn >= self.next_tsn {
                return Err(format!("TSN {tsn} outside ({}, {})", self.cum_ack, self.next_tsn));
            }
            if c.in_flight == self.rtx_queue.contains(tsn) {
                return Err(format!("TSN {tsn} both in flight and queued, or neither"));
            }
            if c.in_flight {
                per_path[c.tx_path] += u64::from(c.bytes);
            }
        }
        for (i, (p, expect)) in self.paths.iter().zip(&per_path).enumerate() {
            if p.outstanding != *expect {
                return Err(format!("path {i} outstanding {} != {}", p.outstanding, expect));
            }
            let w = self.cc.cwnd(i);
            if w < f64::from(self.params.mtu()) {
                return Err(format!("path {i} cwnd {w} below one MTU"));
            }
        }
        // A window cut leaves data in flight above the new cwnd, so the
        // bound is checked when chunks are sent rather than here.
        if let Some(v) = &self.window_violation {
            return Err(v.clone());
        }
        if self.rtx_queue.iter().any(|t| !self.outstanding.contains_key(t)) {
            return Err("retransmission queue holds an acknowledged TSN".into());
        }
        Ok(())
    }

    fn total_outstanding(&self) -> u64 {
        self.paths.iter().map(|p| p.outstanding).sum()
    }

    /// With nothing in flight one chunk may go out whatever the advertised
    /// window; otherwise a lost hole-filling chunk could deadlock a full
    /// receive buffer.
    fn can_send(&self, path: PathId, bytes: u32) -> bool {
        let total = self.total_outstanding();
        (self.paths[path].outstanding as f64) < self.cc.cwnd(path)
            && (total == 0 || total + u64::from(bytes) <= self.peer_rwnd)
    }

    fn rtx_destination(&self, chunk: &Chunk) -> PathId {
        match self.params.rtx_policy {
            RtxPolicy::Same => chunk.tx_path,
            RtxPolicy::Ssthresh => {
                let mut best = 0;
                for p in 1..self.paths.len() {
                    if self.cc.ssthresh(p) > self.cc.ssthresh(best) {
                        best = p;
                    }
                }
                best
            }
        }
    }

    fn arm_timer(&mut self, path: PathId, now: SimTime, out: &mut Outbox) {
        let p = &mut self.paths[path];
        p.timer_gen += 1;
        p.timer = Some(p.timer_gen);
        out.timers.push(TimerCmd::ArmRto {
            path,
            at: now + p.rtt.rto(),
            gen: p.timer_gen,
        });
    }

    fn stop_timer(&mut self, path: PathId) {
        let p = &mut self.paths[path];
        p.timer = None;
        p.timer_gen += 1;
    }

    /// `forced` marks the immediate first retransmission of a loss episode,
    /// which is exempt from the window.
    fn transmit(&mut self, tsn: Tsn, path: PathId, now: SimTime, forced: bool, out: &mut Outbox) {
        let p = &mut self.paths[path];
        let seq = p.next_tx_seq;
        p.next_tx_seq += 1;
        let c = self.outstanding.get_mut(&tsn).expect("transmitting unknown TSN");
        debug_assert!(!c.in_flight);
        c.tx_path = path;
        c.tx_time = now;
        c.tx_seq = seq;
        c.transmissions += 1;
        c.missing_reports = 0;
        c.in_flight = true;
        let retransmit = c.transmissions > 1;
        p.outstanding += u64::from(c.bytes);
        let slack = f64::from(self.params.chunk_size);
        if !forced && self.window_violation.is_none() && p.outstanding as f64 > self.cc.cwnd(path) + slack {
            self.window_violation = Some(format!(
                "path {path}: sending TSN {tsn} raised outstanding to {} over cwnd {}",
                p.outstanding,
                self.cc.cwnd(path)
            ));
        }
        if !retransmit && p.probe.is_none() {
            p.probe = Some(tsn);
        }
        let stats = &mut self.stats.paths[path];
        stats.chunks_sent += 1;
        if retransmit {
            stats.chunks_retransmitted += 1;
        }
        out.packets.push((
            path,
            DataChunk {
                tsn,
                bytes: c.bytes,
                offset: c.offset,
                retransmit,
                tx_path: path,
                tx_time: now,
            },
        ));
        if self.paths[path].timer.is_none() {
            self.arm_timer(path, now, out);
        }
    }

    /// Removes a chunk from flight and queues it for retransmission.
    fn mark_for_rtx(&mut self, tsn: Tsn) {
        let c = self.outstanding.get_mut(&tsn).expect("marking unknown TSN");
        if !c.in_flight {
            return;
        }
        c.in_flight = false;
        let p = &mut self.paths[c.tx_path];
        p.outstanding -= u64::from(c.bytes);
        if p.probe == Some(tsn) {
            p.probe = None;
        }
        self.rtx_queue.insert(tsn);
    }

    /// Sends queued retransmissions, then new data, as windows allow.
    /// Returns the number of chunks transmitted.
    pub fn try_send(&mut self, now: SimTime, out: &mut Outbox) -> usize {
        let mut sent = 0;
        let queued: Vec<Tsn> = self.rtx_queue.iter().copied().collect();
        for tsn in queued {
            let c = &self.outstanding[&tsn];
            let dest = self.rtx_destination(c);
            if self.can_send(dest, c.bytes) {
                self.rtx_queue.remove(&tsn);
                self.transmit(tsn, dest, now, false, out);
                sent += 1;
            }
        }

        let n = self.paths.len();
        while self.bytes_unsent > 0 {
            let bytes = self.bytes_unsent.min(u64::from(self.params.chunk_size)) as u32;
            let Some(path) = (0..n)
                .map(|k| (self.rr_cursor + k) % n)
                .find(|&p| self.can_send(p, bytes))
            else {
                break;
            };
            self.rr_cursor = (path + 1) % n;
            let tsn = self.next_tsn;
            self.next_tsn += 1;
            self.outstanding.insert(
                tsn,
                Chunk {
                    bytes,
                    offset: self.next_offset,
                    tx_path: path,
                    tx_time: now,
                    tx_seq: 0,
                    transmissions: 0,
                    missing_reports: 0,
                    fast_retransmitted: false,
                    in_flight: false,
                },
            );
            self.next_offset += u64::from(bytes);
            self.bytes_unsent -= u64::from(bytes);
            self.transmit(tsn, path, now, false, out);
            sent += 1;
        }
        sent
    }

    pub fn on_sack(&mut self, sack: &SackChunk, now: SimTime, out: &mut Outbox) {
        if sack.cum_tsn < self.cum_ack {
            self.stats.stale_sacks += 1;
            return;
        }
        let n = self.paths.len();
        let cwnd_full: Vec<bool> = (0..n)
            .map(|i| self.paths[i].outstanding as f64 >= self.cc.cwnd(i))
            .collect();
        self.cum_ack = sack.cum_tsn;
        self.peer_rwnd = sack.rwnd;

        let mut acked: Vec<Tsn> = self.outstanding.range(..=sack.cum_tsn).map(|(t, _)| *t).collect();
        for &(start, end) in &sack.gap_blocks {
            if end > sack.cum_tsn {
                let lo = start.max(sack.cum_tsn + 1);
                acked.extend(self.outstanding.range(lo..=end).map(|(t, _)| *t));
            }
        }

        let mut newly = vec![0u64; n];
        let mut highest_seq: Vec<Option<u64>> = vec![None; n];
        for tsn in acked {
            let c = self.outstanding.remove(&tsn).expect("collected from map");
            let path = c.tx_path;
            newly[path] += u64::from(c.bytes);
            if c.in_flight {
                self.paths[path].outstanding -= u64::from(c.bytes);
                highest_seq[path] = Some(highest_seq[path].map_or(c.tx_seq, |h| h.max(c.tx_seq)));
            } else {
                self.rtx_queue.remove(&tsn);
            }
            let p = &mut self.paths[path];
            if p.probe == Some(tsn) {
                p.probe = None;
                if c.transmissions == 1 {
                    p.rtt.update(now - c.tx_time);
                    self.stats.paths[path].rtt_samples += 1;
                    let srtt = p.rtt.srtt().expect("just updated");
                    self.cc.on_rtt_update(path, srtt);
                } else {
                    self.stats.karn_skipped += 1;
                }
            }
        }
        self.stats.bytes_acked += newly.iter().sum::<u64>();

        for (p, h) in self.paths.iter_mut().zip(&highest_seq) {
            if let (Some(until), Some(h)) = (p.recovery_until, h) {
                if *h > until {
                    p.recovery_until = None;
                }
            }
        }

        // Missing reports, counted only from later transmissions on the
        // same path.
        let mut lost: Vec<Tsn> = Vec::new();
        for (tsn, c) in self.outstanding.iter_mut() {
            if !c.in_flight || c.fast_retransmitted {
                continue;
            }
            if matches!(highest_seq[c.tx_path], Some(h) if c.tx_seq < h) {
                c.missing_reports += 1;
                if c.missing_reports >= self.params.dupthresh {
                    c.fast_retransmitted = true;
                    lost.push(*tsn);
                }
            }
        }
        let mut lost_paths: Vec<PathId> = lost.iter().map(|t| self.outstanding[t].tx_path).collect();
        lost_paths.sort_unstable();
        lost_paths.dedup();
        let first_lost: Vec<(PathId, Tsn)> = lost_paths
            .iter()
            .map(|&p| {
                let t = *lost
                    .iter()
                    .find(|t| self.outstanding[t].tx_path == p)
                    .expect("path has a lost TSN");
                (p, t)
            })
            .collect();
        for &tsn in &lost {
            self.mark_for_rtx(tsn);
        }

        for (i, &d) in newly.iter().enumerate() {
            self.cc.on_bytes_acked(i, d, now);
            if self.paths[i].recovery_until.is_none() {
                self.cc.on_increase_check(i, d, cwnd_full[i]);
            }
        }

        let mut entered_recovery = Vec::new();
        for &(path, tsn) in &first_lost {
            if self.paths[path].recovery_until.is_some() {
                continue;
            }
            let d = self.cc.on_fast_rtx(path);
            self.decreases.push((now, d));
            self.stats.paths[path].fast_rtx += 1;
            let p = &mut self.paths[path];
            p.recovery_until = Some(p.next_tx_seq.saturating_sub(1));
            entered_recovery.push(tsn);
        }

        for (i, &d) in newly.iter().enumerate() {
            if self.paths[i].outstanding == 0 {
                self.stop_timer(i);
            } else if d > 0 {
                self.arm_timer(i, now, out);
            }
        }

        // The first chunk of each new loss episode goes out immediately,
        // regardless of window.
        for tsn in entered_recovery {
            if self.rtx_queue.remove(&tsn) {
                let dest = self.rtx_destination(&self.outstanding[&tsn]);
                self.transmit(tsn, dest, now, true, out);
            }
        }
        self.try_send(now, out);
    }

    /// Retransmission timer of `path` fired.
    pub fn on_rto(&mut self, path: PathId, gen: u64, now: SimTime, out: &mut Outbox) {
        if self.paths[path].timer != Some(gen) {
            return;
        }
        self.paths[path].timer = None;
        if self.paths[path].outstanding == 0 {
            return;
        }
        self.paths[path].rtt.back_off();
        let d = self.cc.on_timeout(path);
        self.decreases.push((now, d));
        self.stats.paths[path].timeouts += 1;
        let expired: Vec<Tsn> = self
            .outstanding
            .iter()
            .filter(|(_, c)| c.in_flight && c.tx_path == path)
            .map(|(t, _)| *t)
            .collect();
        for tsn in expired {
            self.mark_for_rtx(tsn);
        }
        let p = &mut self.paths[path];
        p.probe = None;
        p.recovery_until = None;
        self.try_send(now, out);
    }
}
