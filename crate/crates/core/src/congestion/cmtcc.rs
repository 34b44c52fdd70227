use super::{
    pooled_threshold, slow_start_increase, Algo, BweState, CcParams, CcSnapshot, CongestionControl, Decrease,
    DecreaseKind, PathWindow,
};
use crate::engine::SimTime;
use crate::netsim::PathId;

/// Baseline CMT congestion control: every path runs its own SCTP window.
///
/// Bandwidth estimates are maintained for tracing only.
#[derive(Debug, Clone)]
pub struct CmtCc {
    params: CcParams,
    paths: Vec<PathWindow>,
    bwe: Vec<BweState>,
}

impl CmtCc {
    pub fn new(params: CcParams, start: SimTime) -> Self {
        let paths = vec![PathWindow::new(&params); params.paths];
        let bwe = vec![BweState::new(start); params.paths];
        CmtCc { params, paths, bwe }
    }

    fn decrease(&mut self, path: PathId, kind: DecreaseKind) -> Decrease {
        let floor = self.params.ssthresh_floor();
        let mtu = self.params.mtu;
        let w = &mut self.paths[path];
        let before = w.cwnd;
        w.ssthresh = (before / 2.0).max(floor);
        w.cwnd = match kind {
            DecreaseKind::FastRetransmit => w.ssthresh,
            DecreaseKind::Timeout => mtu,
        };
        w.pa = 0.0;
        debug_assert_eq!(w.ssthresh, pooled_threshold(before, 0.5, floor));
        Decrease {
            kind,
            path,
            cwnd_before: before,
            beta: 0.5,
            ssthresh: w.ssthresh,
            cwnd: w.cwnd,
        }
    }
}

impl CongestionControl for CmtCc {
    fn algo(&self) -> Algo {
        Algo::CmtCc
    }

    fn paths(&self) -> usize {
        self.paths.len()
    }

    fn cwnd(&self, path: PathId) -> f64 {
        self.paths[path].cwnd
    }

    fn ssthresh(&self, path: PathId) -> f64 {
        self.paths[path].ssthresh
    }

    fn partial_bytes_acked(&self, path: PathId) -> f64 {
        self.paths[path].pa
    }

    fn on_rtt_update(&mut self, _path: PathId, _srtt: f64) {}

    fn on_bytes_acked(&mut self, path: PathId, acked: u64, now: SimTime) {
        self.bwe[path].on_ack(acked, now, self.params.filter_gain);
        let w = &mut self.paths[path];
        if acked > 0 && !w.in_slow_start() {
            w.pa += acked as f64;
        }
    }

    fn on_increase_check(&mut self, path: PathId, acked: u64, cwnd_full: bool) {
        let mtu = self.params.mtu;
        let w = &mut self.paths[path];
        if acked == 0 || !cwnd_full {
            return;
        }
        if w.in_slow_start() {
            w.cwnd += slow_start_increase(acked, mtu);
        } else if w.pa >= w.cwnd {
            let before = w.cwnd;
            w.cwnd += mtu;
            w.pa = (w.pa - before).max(0.0);
        }
    }

    fn on_fast_rtx(&mut self, path: PathId) -> Decrease {
        self.decrease(path, DecreaseKind::FastRetransmit)
    }

    fn on_timeout(&mut self, path: PathId) -> Decrease {
        self.decrease(path, DecreaseKind::Timeout)
    }

    fn snapshot(&self, path: PathId) -> CcSnapshot {
        let w = &self.paths[path];
        CcSnapshot {
            cwnd: w.cwnd,
            ssthresh: w.ssthresh,
            bwe: self.bwe[path].estimate(),
            alpha: None,
            beta: 0.5,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cc() -> CmtCc {
        CmtCc::new(CcParams::new(2), SimTime::ZERO)
    }

    #[test]
    fn fast_rtx_halves() {
        let mut c = cc();
        c.paths[0].cwnd = 20_000.0;
        let d = c.on_fast_rtx(0);
        assert_eq!((d.ssthresh, d.cwnd), (10_000.0, 10_000.0));
    }

    #[test]
    fn fast_rtx_floor() {
        let mut c = cc();
        c.paths[0].cwnd = 7000.0;
        assert_eq!(c.on_fast_rtx(0).cwnd, 6000.0);
    }

    #[test]
    fn timeout_resets_to_one_mtu() {
        let mut c = cc();
        c.paths[1].cwnd = 40_000.0;
        let d = c.on_timeout(1);
        assert_eq!((d.ssthresh, d.cwnd), (20_000.0, 1500.0));
        assert_eq!(c.partial_bytes_acked(1), 0.0);
    }

    #[test]
    fn congestion_avoidance_adds_one_mtu() {
        let mut c = cc();
        c.paths[0].cwnd = 15_000.0;
        c.paths[0].ssthresh = 15_000.0;
        let t = SimTime::from_secs(0.1);
        c.on_bytes_acked(0, 14_520, t);
        c.on_increase_check(0, 14_520, true);
        assert_eq!(c.cwnd(0), 15_000.0);
        c.on_bytes_acked(0, 1452, t + 0.01);
        c.on_increase_check(0, 1452, true);
        assert_eq!(c.cwnd(0), 16_500.0);
        assert_eq!(c.partial_bytes_acked(0), 15_972.0 - 15_000.0);
    }

    #[test]
    fn slow_start_needs_full_window() {
        let mut c = cc();
        c.on_bytes_acked(0, 2904, SimTime::from_secs(0.1));
        c.on_increase_check(0, 2904, false);
        assert_eq!(c.cwnd(0), 3000.0);
        c.on_increase_check(0, 2904, true);
        assert_eq!(c.cwnd(0), 4500.0);
        assert_eq!(c.partial_bytes_acked(0), 0.0);
    }
}
