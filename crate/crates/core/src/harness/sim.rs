//! One simulation instance: network, association endpoints, cross traffic
//! and optional tracing, driven by a single event queue.

use crate::congestion::Decrease;
use crate::engine::{EventQueue, SimTime};
use crate::netsim::{Direction, NetEvent, Network, Packet, PathId, Payload, RouteId};
use crate::transport::{Outbox, Receiver, Sender, TimerCmd, TransportParams};

/// Flow id of the multipath association.
pub const ASSOC_FLOW: usize = 0;

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Net(NetEvent),
    Rto { path: PathId, gen: u64 },
    DelayedAck { gen: u64 },
    Cbr(usize),
    Sample(u64),
}

impl From<NetEvent> for Action {
    fn from(ev: NetEvent) -> Self {
        Action::Net(ev)
    }
}

/// Constant-bit-rate UDP source.
#[derive(Debug, Clone)]
pub struct CbrSource {
    pub route: RouteId,
    pub flow: usize,
    /// Wire bytes per packet.
    pub size: u32,
    /// Seconds between packets.
    pub interval: f64,
    /// First emission time.
    pub start: f64,
    pub sent: u64,
}

/// One row of a window trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CwndTraceSample {
    pub time: f64,
    pub path: PathId,
    pub cwnd: f64,
    pub ssthresh: f64,
    pub srtt: Option<f64>,
    /// bytes per second
    pub bwe: f64,
    pub alpha: Option<f64>,
    pub beta: f64,
}

/// Outcome of [`Simulation::run`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOutcome {
    /// Time the last byte reached the application, if it did.
    pub completed_at: Option<SimTime>,
    pub end_time: SimTime,
    pub events: u64,
}

pub struct Simulation {
    queue: EventQueue<Action>,
    world: World,
}

struct World {
    net: Network,
    sender: Sender,
    receiver: Receiver,
    transport: TransportParams,
    data_routes: Vec<RouteId>,
    cbr: Vec<CbrSource>,
    file_size: u64,
    completed_at: Option<SimTime>,
    trace_interval: Option<f64>,
    trace: Vec<CwndTraceSample>,
    udp_delivered: u64,
}

impl Simulation {
    /// `data_routes[i]` is the route of path `i`; its reverse hops carry SACKs.
    pub fn new(
        net: Network,
        sender: Sender,
        receiver: Receiver,
        transport: TransportParams,
        data_routes: Vec<RouteId>,
        cbr: Vec<CbrSource>,
        file_size: u64,
    ) -> Self {
        assert_eq!(data_routes.len(), sender.path_count());
        for &r in &data_routes {
            assert!(!net.route(r).reverse.is_empty(), "data route without a SACK path");
        }
        Simulation {
            queue: EventQueue::new(),
            world: World {
                net,
                sender,
                receiver,
                transport,
                data_routes,
                cbr,
                file_size,
                completed_at: None,
                trace_interval: None,
                trace: Vec::new(),
                udp_delivered: 0,
            },
        }
    }

    /// Samples per-path congestion state every `interval` seconds.
    pub fn enable_trace(&mut self, interval: f64) {
        assert!(interval > 0.0);
        self.world.trace_interval = Some(interval);
    }

    pub fn network(&self) -> &Network {
        &self.world.net
    }

    pub fn sender(&self) -> &Sender {
        &self.world.sender
    }

    pub fn receiver(&self) -> &Receiver {
        &self.world.receiver
    }

    pub fn cbr_sources(&self) -> &[CbrSource] {
        &self.world.cbr
    }

    pub fn udp_delivered(&self) -> u64 {
        self.world.udp_delivered
    }

    pub fn trace(&self) -> &[CwndTraceSample] {
        &self.world.trace
    }

    pub fn decreases(&self) -> &[(SimTime, Decrease)] {
        self.world.sender.decreases()
    }

    pub fn data_routes(&self) -> &[RouteId] {
        &self.world.data_routes
    }

    pub fn now(&self) -> SimTime {
        self.queue.now()
    }

    /// Runs until the whole file is delivered or `time_cap` is reached.
    pub fn run(&mut self, time_cap: f64) -> RunOutcome {
        self.run_checked(time_cap, |_| {})
    }

    /// Like [`run`](Self::run), calling `check` after every event.
    pub fn run_checked<F: FnMut(&Simulation)>(&mut self, time_cap: f64, mut check: F) -> RunOutcome {
        let cap = SimTime::from_secs(time_cap);
        if self.queue.dispatched() == 0 && self.queue.is_empty() {
            self.start();
        }
        while self.world.completed_at.is_none() {
            let Some((now, action)) = self.queue.pop_due(cap) else {
                break;
            };
            self.world.handle(&mut self.queue, now, action);
            check(self);
        }
        RunOutcome {
            completed_at: self.world.completed_at,
            end_time: self.world.completed_at.unwrap_or(cap),
            events: self.queue.dispatched(),
        }
    }

    fn start(&mut self) {
        let w = &mut self.world;
        let q = &mut self.queue;
        for (i, src) in w.cbr.iter().enumerate() {
            q.schedule(SimTime::from_secs(src.start), Action::Cbr(i));
        }
        if w.trace_interval.is_some() {
            q.schedule(SimTime::ZERO, Action::Sample(0));
        }
        let mut out = Outbox::default();
        w.sender.try_send(SimTime::ZERO, &mut out);
        w.apply(q, out);
        if w.file_size == 0 {
            w.completed_at = Some(SimTime::ZERO);
        }
    }
}

impl World {
    fn handle(&mut self, q: &mut EventQueue<Action>, now: SimTime, action: Action) {
        match action {
            Action::Net(ev) => {
                if let Some(p) = self.net.handle(q, ev) {
                    self.at_endpoint(q, now, p);
                }
            }
            Action::Rto { path, gen } => {
                let mut out = Outbox::default();
                self.sender.on_rto(path, gen, now, &mut out);
                self.apply(q, out);
            }
            Action::DelayedAck { gen } => {
                if let Some((sack, path)) = self.receiver.on_timer(gen) {
                    self.send_sack(q, sack, path);
                }
            }
            Action::Cbr(i) => {
                let src = &mut self.cbr[i];
                src.sent += 1;
                let p = Packet::new(src.size, src.flow, 0, src.route, Direction::Forward, Payload::Udp);
                let next = src.start + src.sent as f64 * src.interval;
                self.net.send(q, p);
                q.schedule(SimTime::from_secs(next), Action::Cbr(i));
            }
            Action::Sample(k) => {
                let interval = self.trace_interval.expect("sampling only when tracing");
                let time = k as f64 * interval;
                let cc = self.sender.cc();
                for path in 0..cc.paths() {
                    let s = cc.snapshot(path);
                    self.trace.push(CwndTraceSample {
                        time,
                        path,
                        cwnd: s.cwnd,
                        ssthresh: s.ssthresh,
                        srtt: self.sender.srtt(path),
                        bwe: s.bwe,
                        alpha: s.alpha,
                        beta: s.beta,
                    });
                }
                q.schedule(SimTime::from_secs((k + 1) as f64 * interval), Action::Sample(k + 1));
            }
        }
    }

    fn at_endpoint(&mut self, q: &mut EventQueue<Action>, now: SimTime, p: Packet) {
        match p.payload {
            Payload::Data(chunk) => {
                let rx = self.receiver.on_data(&chunk, p.path);
                if let Some((sack, path)) = rx.sack {
                    self.send_sack(q, sack, path);
                }
                if let Some((delay, gen)) = rx.arm_timer {
                    q.schedule_in(delay, Action::DelayedAck { gen });
                }
                if self.completed_at.is_none() && self.receiver.delivered_bytes() >= self.file_size {
                    self.completed_at = Some(now);
                }
            }
            Payload::Sack(sack) => {
                let mut out = Outbox::default();
                self.sender.on_sack(&sack, now, &mut out);
                self.apply(q, out);
            }
            Payload::Udp => self.udp_delivered += 1,
        }
    }

    fn send_sack(&mut self, q: &mut EventQueue<Action>, sack: crate::transport::SackChunk, path: PathId) {
        let size = self.transport.sack_packet_size(&sack);
        let p = Packet::new(size, ASSOC_FLOW, path, self.data_routes[path], Direction::Reverse, Payload::Sack(sack));
        self.net.send(q, p);
    }

    fn apply(&mut self, q: &mut EventQueue<Action>, out: Outbox) {
        for (path, chunk) in out.packets {
            let size = self.transport.data_packet_size(&chunk);
            let p = Packet::new(size, ASSOC_FLOW, path, self.data_routes[path], Direction::Forward, Payload::Data(chunk));
            self.net.send(q, p);
        }
        for t in out.timers {
            match t {
                TimerCmd::ArmRto { path, at, gen } => {
                    q.schedule(at, Action::Rto { path, gen });
                }
            }
        }
    }
}
