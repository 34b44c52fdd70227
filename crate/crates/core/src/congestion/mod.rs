//! Congestion control for a multipath association.
//!
//! The transport drives a [`CongestionControl`] implementation through four
//! hooks and reads back per-path windows. Three controllers are provided:
//!
//! * [`Algo::CmtCc`]: independent per-path SCTP/TCP-style windows.
//! * [`Algo::CmtBerp`]: coupled increase with an aggressiveness factor, and a
//!   loss response that removes only the path's share of the pooled
//!   bandwidth estimate.
//! * [`Algo::MptcpCoupled`]: the same coupled code path with every share
//!   pinned to one half, which reduces to the linked-increase algorithm with
//!   ordinary halving on loss.

mod bwe;
mod cmtcc;
mod coupled;
mod pooling;

use std::fmt;
use std::str::FromStr;

pub use bwe::{bwe_filter, bwe_sample, BweState, BweUpdate, DEFAULT_FILTER_GAIN};
pub use cmtcc::CmtCc;
pub use coupled::{Coupled, Coupling};
pub use pooling::{compute_alpha, compute_beta, coupled_increase, pooled_threshold, slow_start_increase};

use crate::engine::SimTime;
use crate::netsim::PathId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algo {
    CmtCc,
    CmtBerp,
    MptcpCoupled,
}

impl Algo {
    pub const ALL: [Algo; 3] = [Algo::CmtCc, Algo::CmtBerp, Algo::MptcpCoupled];

    pub fn as_str(self) -> &'static str {
        match self {
            Algo::CmtCc => "cmt-cc",
            Algo::CmtBerp => "cmt-berp",
            Algo::MptcpCoupled => "mptcp-coupled",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algo {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algo::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| format!("unknown algorithm `{s}` (expected cmt-cc, cmt-berp or mptcp-coupled)"))
    }
}

/// Whether the partial-bytes-acked accumulator is kept per path or shared.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaScope {
    PerPath,
    Global,
}

impl FromStr for PaScope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "per-path" => Ok(PaScope::PerPath),
            "global" => Ok(PaScope::Global),
            _ => Err(format!("unknown P_a scope `{s}` (expected per-path or global)")),
        }
    }
}

impl fmt::Display for PaScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PaScope::PerPath => "per-path",
            PaScope::Global => "global",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CcParams {
    pub paths: usize,
    /// bytes
    pub mtu: f64,
    pub filter_gain: f64,
    pub initial_cwnd: f64,
    pub initial_ssthresh: f64,
    /// Stand-in srtt for paths that have no RTT sample yet.
    pub initial_srtt: f64,
    /// Minimum ssthresh after a loss, in MTUs.
    pub ssthresh_floor_mtus: f64,
    pub pa_scope: PaScope,
}

impl CcParams {
    pub fn new(paths: usize) -> Self {
        CcParams {
            paths,
            mtu: 1500.0,
            filter_gain: DEFAULT_FILTER_GAIN,
            initial_cwnd: 3000.0,
            initial_ssthresh: 16.0 * 1024.0 * 1024.0,
            initial_srtt: 1.0,
            ssthresh_floor_mtus: 4.0,
            pa_scope: PaScope::PerPath,
        }
    }

    pub fn ssthresh_floor(&self) -> f64 {
        self.ssthresh_floor_mtus * self.mtu
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecreaseKind {
    FastRetransmit,
    Timeout,
}

impl DecreaseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DecreaseKind::FastRetransmit => "fast_rtx",
            DecreaseKind::Timeout => "timeout",
        }
    }
}

/// Record of one window reduction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decrease {
    pub kind: DecreaseKind,
    pub path: PathId,
    pub cwnd_before: f64,
    /// Fraction of the window removed.
    pub beta: f64,
    pub ssthresh: f64,
    pub cwnd: f64,
}

/// Per-path view for tracing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CcSnapshot {
    pub cwnd: f64,
    pub ssthresh: f64,
    /// bytes per second
    pub bwe: f64,
    /// `None` for uncoupled controllers.
    pub alpha: Option<f64>,
    pub beta: f64,
}

/// Hooks through which the transport drives congestion state.
pub trait CongestionControl {
    fn algo(&self) -> Algo;

    fn paths(&self) -> usize;

    fn cwnd(&self, path: PathId) -> f64;

    fn ssthresh(&self, path: PathId) -> f64;

    fn partial_bytes_acked(&self, path: PathId) -> f64;

    /// New smoothed RTT for a path.
    fn on_rtt_update(&mut self, path: PathId, srtt: f64);

    /// A SACK newly acknowledged `acked` user bytes last sent on `path`.
    fn on_bytes_acked(&mut self, path: PathId, acked: u64, now: SimTime);

    /// Window growth check after [`on_bytes_acked`](Self::on_bytes_acked).
    /// `cwnd_full` is whether the path had at least cwnd bytes outstanding
    /// before the SACK arrived.
    fn on_increase_check(&mut self, path: PathId, acked: u64, cwnd_full: bool);

    fn on_fast_rtx(&mut self, path: PathId) -> Decrease;

    fn on_timeout(&mut self, path: PathId) -> Decrease;

    fn snapshot(&self, path: PathId) -> CcSnapshot;
}

pub fn build(algo: Algo, params: CcParams, start: SimTime) -> Box<dyn CongestionControl> {
    match algo {
        Algo::CmtCc => Box::new(CmtCc::new(params, start)),
        Algo::CmtBerp => Box::new(Coupled::new(Coupling::BandwidthPooled, params, start)),
        Algo::MptcpCoupled => Box::new(Coupled::new(Coupling::FixedHalf, params, start)),
    }
}

/// Window, threshold and partial-bytes-acked of one path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct PathWindow {
    pub cwnd: f64,
    pub ssthresh: f64,
    pub pa: f64,
}

impl PathWindow {
    pub fn new(params: &CcParams) -> Self {
        PathWindow {
            cwnd: params.initial_cwnd,
            ssthresh: params.initial_ssthresh,
            pa: 0.0,
        }
    }

    pub fn in_slow_start(&self) -> bool {
        self.cwnd < self.ssthresh
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algo_names_round_trip() {
        for a in Algo::ALL {
            assert_eq!(a.as_str().parse::<Algo>().unwrap(), a);
        }
        assert!("cmt".parse::<Algo>().is_err());
        assert_eq!("global".parse::<PaScope>().unwrap(), PaScope::Global);
    }
}
