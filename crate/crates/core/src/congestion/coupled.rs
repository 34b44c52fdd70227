use super::{
    compute_alpha, compute_beta, coupled_increase, pooled_threshold, slow_start_increase, Algo, BweState, BweUpdate,
    CcParams, CcSnapshot, CongestionControl, Decrease, DecreaseKind, PaScope, PathWindow,
};
use crate::engine::SimTime;
use crate::netsim::PathId;

/// How the per-path loss share is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coupling {
    /// Share of the pooled bandwidth estimate.
    BandwidthPooled,
    /// Every share pinned to 0.5.
    FixedHalf,
}

/// Coupled controller with pooled loss response.
///
/// Alpha and the shares are recomputed on every SACK that acknowledges
/// data for some path, from the current windows, smoothed RTTs and
/// bandwidth estimates of all paths.
#[derive(Debug, Clone)]
pub struct Coupled {
    coupling: Coupling,
    params: CcParams,
    paths: Vec<PathWindow>,
    bwe: Vec<BweState>,
    srtt: Vec<f64>,
    beta: Vec<f64>,
    alpha: f64,
    shared_pa: f64,
}

impl Coupled {
    pub fn new(coupling: Coupling, params: CcParams, start: SimTime) -> Self {
        let n = params.paths;
        assert!(n >= 1);
        let paths = vec![PathWindow::new(&params); n];
        let srtt = vec![params.initial_srtt; n];
        let beta = match coupling {
            Coupling::BandwidthPooled => vec![1.0 / n as f64; n],
            Coupling::FixedHalf => vec![0.5; n],
        };
        let cwnd: Vec<f64> = paths.iter().map(|p| p.cwnd).collect();
        let alpha = compute_alpha(&cwnd, &srtt, &beta);
        Coupled {
            coupling,
            params,
            paths,
            bwe: vec![BweState::new(start); n],
            srtt,
            beta,
            alpha,
            shared_pa: 0.0,
        }
    }

    /// Overrides the window and bandwidth share of one path. Lets the loss
    /// rules be checked from arbitrary states.
    pub fn set_path_state(&mut self, path: PathId, cwnd: f64, beta: f64) {
        assert!(cwnd >= self.params.mtu && (0.0..=1.0).contains(&beta));
        self.paths[path].cwnd = cwnd;
        self.beta[path] = beta;
    }

    pub fn coupling(&self) -> Coupling {
        self.coupling
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn bwe(&self, path: PathId) -> &BweState {
        &self.bwe[path]
    }

    pub fn total_cwnd(&self) -> f64 {
        self.paths.iter().map(|p| p.cwnd).sum()
    }

    fn pa_mut(&mut self, path: PathId) -> &mut f64 {
        match self.params.pa_scope {
            PaScope::PerPath => &mut self.paths[path].pa,
            PaScope::Global => &mut self.shared_pa,
        }
    }

    fn pa(&self, path: PathId) -> f64 {
        match self.params.pa_scope {
            PaScope::PerPath => self.paths[path].pa,
            PaScope::Global => self.shared_pa,
        }
    }

    fn recompute(&mut self) {
        if self.coupling == Coupling::BandwidthPooled {
            let est: Vec<f64> = self.bwe.iter().map(BweState::estimate).collect();
            self.beta = compute_beta(&est);
        }
        let cwnd: Vec<f64> = self.paths.iter().map(|p| p.cwnd).collect();
        self.alpha = compute_alpha(&cwnd, &self.srtt, &self.beta);
    }

    fn decrease(&mut self, path: PathId, kind: DecreaseKind) -> Decrease {
        let floor = self.params.ssthresh_floor();
        let mtu = self.params.mtu;
        let beta = self.beta[path];
        let w = &mut self.paths[path];
        let before = w.cwnd;
        w.ssthresh = pooled_threshold(before, beta, floor);
        w.cwnd = match kind {
            DecreaseKind::FastRetransmit => w.ssthresh,
            DecreaseKind::Timeout => mtu,
        };
        let after = w.cwnd;
        let ssthresh = w.ssthresh;
        *self.pa_mut(path) = 0.0;
        Decrease {
            kind,
            path,
            cwnd_before: before,
            beta,
            ssthresh,
            cwnd: after,
        }
    }
}

impl CongestionControl for Coupled {
    fn algo(&self) -> Algo {
        match self.coupling {
            Coupling::BandwidthPooled => Algo::CmtBerp,
            Coupling::FixedHalf => Algo::MptcpCoupled,
        }
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
        self.pa(path)
    }

    fn on_rtt_update(&mut self, path: PathId, srtt: f64) {
        assert!(srtt > 0.0);
        self.srtt[path] = srtt;
    }

    fn on_bytes_acked(&mut self, path: PathId, acked: u64, now: SimTime) {
        if acked == 0 {
            return;
        }
        if let BweUpdate::Sampled { .. } = self.bwe[path].on_ack(acked, now, self.params.filter_gain) {
            self.recompute();
        } else {
            // windows may have moved since the last sample
            let cwnd: Vec<f64> = self.paths.iter().map(|p| p.cwnd).collect();
            self.alpha = compute_alpha(&cwnd, &self.srtt, &self.beta);
        }
        if !self.paths[path].in_slow_start() {
            *self.pa_mut(path) += acked as f64;
        }
    }

    fn on_increase_check(&mut self, path: PathId, acked: u64, cwnd_full: bool) {
        if acked == 0 || !cwnd_full {
            return;
        }
        let mtu = self.params.mtu;
        if self.paths[path].in_slow_start() {
            self.paths[path].cwnd += slow_start_increase(acked, mtu);
            return;
        }
        let pa = self.pa(path);
        let before = self.paths[path].cwnd;
        if pa < before {
            return;
        }
        let total = self.total_cwnd();
        self.paths[path].cwnd += coupled_increase(self.alpha, pa, mtu, total, before);
        *self.pa_mut(path) = (pa - before).max(0.0);
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
            alpha: Some(self.alpha),
            beta: self.beta[path],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: f64) -> SimTime {
        SimTime::from_secs(s)
    }

    fn berp(n: usize) -> Coupled {
        Coupled::new(Coupling::BandwidthPooled, CcParams::new(n), SimTime::ZERO)
    }

    fn set(c: &mut Coupled, path: PathId, cwnd: f64, beta: f64) {
        c.paths[path].cwnd = cwnd;
        c.beta[path] = beta;
    }

    #[test]
    fn bootstrap_shares_are_uniform() {
        let c = berp(2);
        assert_eq!(c.beta(), &[0.5, 0.5]);
        let c = berp(4);
        assert_eq!(c.beta(), &[0.25; 4]);
    }

    #[test]
    fn fast_rtx_rule_table() {
        let cases = [
            (100_000.0, 0.25, 75_000.0),
            (5000.0, 0.9, 6000.0),
            (20_000.0, 0.5, 10_000.0),
        ];
        for (w, beta, s) in cases {
            let mut c = berp(2);
            set(&mut c, 0, w, beta);
            let d = c.on_fast_rtx(0);
            assert_eq!((d.ssthresh, d.cwnd, d.beta), (s, s, beta));
            assert_eq!(c.partial_bytes_acked(0), 0.0);
        }
    }

    #[test]
    fn timeout_rule_table() {
        for (w, beta, s) in [(100_000.0, 0.25, 75_000.0), (4000.0, 0.5, 6000.0)] {
            let mut c = berp(2);
            set(&mut c, 0, w, beta);
            let d = c.on_timeout(0);
            assert_eq!((d.ssthresh, d.cwnd), (s, 1500.0));
        }
    }

    #[test]
    fn consecutive_timeouts_hit_floor() {
        let mut c = berp(2);
        set(&mut c, 0, 100_000.0, 0.25);
        let first = c.on_timeout(0);
        assert_eq!((first.ssthresh, first.cwnd), (75_000.0, 1500.0));
        let second = c.on_timeout(0);
        assert_eq!((second.ssthresh, second.cwnd), (6000.0, 1500.0));
    }

    #[test]
    fn first_sack_initializes_estimate() {
        let mut c = berp(2);
        c.on_bytes_acked(0, 1452, t(0.01));
        assert_eq!(c.bwe(0).estimate(), 145_200.0);
        // only path 0 has an estimate
        assert_eq!(c.beta(), &[1.0, 0.0]);
        c.on_bytes_acked(0, 1452, t(0.02));
        assert!((c.bwe(0).estimate() - 145_200.0).abs() < 1e-6);
    }

    #[test]
    fn zero_byte_hook_is_a_no_op() {
        let mut c = berp(2);
        c.on_bytes_acked(0, 1452, t(0.01));
        let before = c.bwe(1).clone();
        c.on_bytes_acked(1, 0, t(0.05));
        c.on_increase_check(1, 0, true);
        assert_eq!(c.bwe(1), &before);
        assert_eq!(c.cwnd(1), 3000.0);
    }

    #[test]
    fn single_path_increase_is_one_mtu_per_window() {
        let mut c = Coupled::new(Coupling::FixedHalf, CcParams::new(1), SimTime::ZERO);
        c.paths[0].cwnd = 30_000.0;
        c.paths[0].ssthresh = 30_000.0;
        c.on_rtt_update(0, 0.1);
        c.on_bytes_acked(0, 30_000, t(0.1));
        assert!((c.alpha() - 1.0).abs() < 1e-12);
        c.on_increase_check(0, 30_000, true);
        assert!((c.cwnd(0) - 31_500.0).abs() < 1e-9);
        assert_eq!(c.partial_bytes_acked(0), 0.0);
    }

    #[test]
    fn symmetric_two_path_increase_is_quarter_mtu() {
        let mut c = Coupled::new(Coupling::FixedHalf, CcParams::new(2), SimTime::ZERO);
        for p in 0..2 {
            c.paths[p].cwnd = 30_000.0;
            c.paths[p].ssthresh = 30_000.0;
            c.on_rtt_update(p, 0.1);
        }
        c.on_bytes_acked(0, 30_000, t(0.1));
        assert!((c.alpha() - 0.5).abs() < 1e-12);
        c.on_increase_check(0, 30_000, true);
        assert!((c.cwnd(0) - 30_375.0).abs() < 1e-9);
    }

    #[test]
    fn partial_window_gives_no_increase() {
        let mut c = berp(2);
        c.paths[0].cwnd = 30_000.0;
        c.paths[0].ssthresh = 30_000.0;
        c.on_bytes_acked(0, 10_000, t(0.1));
        c.on_increase_check(0, 10_000, true);
        assert_eq!(c.cwnd(0), 30_000.0);
        assert_eq!(c.partial_bytes_acked(0), 10_000.0);
    }

    #[test]
    fn fixed_half_ignores_estimates() {
        let mut c = Coupled::new(Coupling::FixedHalf, CcParams::new(2), SimTime::ZERO);
        c.on_bytes_acked(0, 100_000, t(0.1));
        c.on_bytes_acked(1, 1_000, t(0.1));
        assert_eq!(c.beta(), &[0.5, 0.5]);
        assert!(c.bwe(0).estimate() > c.bwe(1).estimate());
    }

    #[test]
    fn alpha_equal_when_estimates_equal() {
        let mut a = berp(2);
        let mut b = Coupled::new(Coupling::FixedHalf, CcParams::new(2), SimTime::ZERO);
        for c in [&mut a, &mut b] {
            c.on_rtt_update(0, 0.05);
            c.on_rtt_update(1, 0.12);
            c.paths[1].cwnd = 9000.0;
            c.on_bytes_acked(0, 1452, t(0.1));
            c.on_bytes_acked(1, 1452, t(0.1));
        }
        assert_eq!(a.beta(), &[0.5, 0.5]);
        assert_eq!(a.alpha(), b.alpha());
    }

    #[test]
    fn global_pa_is_shared() {
        let mut params = CcParams::new(2);
        params.pa_scope = PaScope::Global;
        let mut c = Coupled::new(Coupling::BandwidthPooled, params, SimTime::ZERO);
        for p in 0..2 {
            c.paths[p].cwnd = 10_000.0;
            c.paths[p].ssthresh = 10_000.0;
        }
        c.on_bytes_acked(0, 6000, t(0.1));
        c.on_bytes_acked(1, 6000, t(0.1));
        assert_eq!(c.partial_bytes_acked(0), 12_000.0);
        c.on_increase_check(1, 6000, true);
        assert!(c.cwnd(1) > 10_000.0);
        assert_eq!(c.partial_bytes_acked(0), 2000.0);
    }
}
