//! CMT-style reliable transport: one association striped over several paths.
//!
//! The sender keeps SCTP per-destination state (outstanding bytes, RTT
//! estimator, retransmission timer, fast-recovery marker) for every path and
//! delegates window arithmetic to a [`CongestionControl`](crate::congestion::CongestionControl).
//! Missing reports are counted split-fast-retransmit style: a chunk is only
//! reported missing by SACKs that newly acknowledge later transmissions on
//! the same path.
//!
//! Both endpoints are sans-IO: they return the packets and timers they want
//! and the simulation wires them to the network.

mod receiver;
mod rtt;
mod sender;

use std::fmt;
use std::str::FromStr;

pub use receiver::{Receiver, RxOutput};
pub use rtt::RttEstimator;
pub use sender::{Outbox, PathStats, Sender, SenderStats, TimerCmd};

use crate::engine::SimTime;
use crate::netsim::PathId;

pub type Tsn = u64;

/// One DATA chunk as carried in a packet.
#[derive(Debug, Clone, PartialEq)]
pub struct DataChunk {
    pub tsn: Tsn,
    /// User bytes.
    pub bytes: u32,
    /// Position of the first byte in the application stream.
    pub offset: u64,
    pub retransmit: bool,
    pub tx_path: PathId,
    pub tx_time: SimTime,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SackChunk {
    pub cum_tsn: Tsn,
    /// Inclusive TSN ranges received above `cum_tsn`, sorted and disjoint.
    pub gap_blocks: Vec<(Tsn, Tsn)>,
    pub rwnd: u64,
}

/// Which path carries a retransmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RtxPolicy {
    /// Path with the largest ssthresh, lowest id on ties.
    Ssthresh,
    /// Path the chunk was last sent on.
    Same,
}

impl FromStr for RtxPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rtx-ssthresh" => Ok(RtxPolicy::Ssthresh),
            "rtx-same" => Ok(RtxPolicy::Same),
            _ => Err(format!("unknown retransmission policy `{s}` (expected rtx-ssthresh or rtx-same)")),
        }
    }
}

impl fmt::Display for RtxPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RtxPolicy::Ssthresh => "rtx-ssthresh",
            RtxPolicy::Same => "rtx-same",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportParams {
    /// Missing reports that trigger fast retransmit.
    pub dupthresh: u32,
    pub rto_initial: f64,
    pub rto_min: f64,
    pub rto_max: f64,
    pub rtx_policy: RtxPolicy,
    pub delayed_ack_factor: u32,
    pub delayed_ack_timeout: f64,
    /// Receiver window in bytes.
    pub rwnd: u64,
    /// User bytes per DATA chunk.
    pub chunk_size: u32,
    /// IP + SCTP common header + DATA chunk header.
    pub data_overhead: u32,
    pub sack_base: u32,
    pub sack_per_gap: u32,
}

impl Default for TransportParams {
    fn default() -> Self {
        TransportParams {
            dupthresh: 4,
            rto_initial: 1.0,
            rto_min: 1.0,
            rto_max: 60.0,
            rtx_policy: RtxPolicy::Ssthresh,
            delayed_ack_factor: 2,
            delayed_ack_timeout: 0.2,
            rwnd: 16 * 1024 * 1024,
            chunk_size: 1452,
            data_overhead: 48,
            sack_base: 60,
            sack_per_gap: 4,
        }
    }
}

impl TransportParams {
    pub fn mtu(&self) -> u32 {
        self.chunk_size + self.data_overhead
    }

    pub fn data_packet_size(&self, chunk: &DataChunk) -> u32 {
        chunk.bytes + self.data_overhead
    }

    pub fn sack_packet_size(&self, sack: &SackChunk) -> u32 {
        self.sack_base + self.sack_per_gap * sack.gap_blocks.len() as u32
    }
}
