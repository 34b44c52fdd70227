//! Links, packets and static routes.
//!
//! A link serializes packets at its capacity, holds at most `queue_capacity`
//! packets (including the one on the wire) and drops arrivals beyond that.
//! Error loss is decided when a packet reaches the far end, after it has
//! consumed link capacity.

use std::collections::VecDeque;
use std::rc::Rc;

use crate::engine::{EventQueue, RngStream};
use crate::transport::{DataChunk, SackChunk};

pub type LinkId = usize;
pub type RouteId = usize;
pub type PathId = usize;
pub type FlowId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PacketKind {
    Data,
    Sack,
    Udp,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Data(DataChunk),
    Sack(SackChunk),
    Udp,
}

/// Direction along a route: data travels forward, SACKs travel back.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Reverse,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    /// Bytes on the wire, headers included.
    pub size: u32,
    pub flow: FlowId,
    pub path: PathId,
    pub route: RouteId,
    pub dir: Direction,
    pub hop: usize,
    pub payload: Payload,
}

impl Packet {
    pub fn new(size: u32, flow: FlowId, path: PathId, route: RouteId, dir: Direction, payload: Payload) -> Self {
        assert!(size > 0, "zero-sized packet");
        Packet {
            size,
            flow,
            path,
            route,
            dir,
            hop: 0,
            payload,
        }
    }

    pub fn kind(&self) -> PacketKind {
        match self.payload {
            Payload::Data(_) => PacketKind::Data,
            Payload::Sack(_) => PacketKind::Sack,
            Payload::Udp => PacketKind::Udp,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkParams {
    pub from: String,
    pub to: String,
    /// bits per second
    pub capacity: f64,
    /// seconds
    pub prop_delay: f64,
    pub loss_prob: f64,
    /// packets, including the one being serialized
    pub queue_capacity: usize,
}

impl LinkParams {
    pub fn new(from: &str, to: &str, capacity: f64, prop_delay: f64, loss_prob: f64, queue_capacity: usize) -> Self {
        LinkParams {
            from: from.to_owned(),
            to: to.to_owned(),
            capacity,
            prop_delay,
            loss_prob,
            queue_capacity,
        }
    }

    fn validate(&self) {
        assert!(self.capacity > 0.0 && self.capacity.is_finite(), "link capacity must be positive");
        assert!(self.prop_delay >= 0.0 && self.prop_delay.is_finite(), "negative propagation delay");
        assert!((0.0..=1.0).contains(&self.loss_prob), "loss probability out of range");
        assert!(self.queue_capacity >= 1, "queue capacity must be at least one packet");
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LinkCounters {
    /// Packets offered to the link.
    pub enqueued: u64,
    pub delivered: u64,
    pub error_dropped: u64,
    pub queue_dropped: u64,
}

impl LinkCounters {
    pub fn add(&mut self, other: &LinkCounters) {
        self.enqueued += other.enqueued;
        self.delivered += other.delivered;
        self.error_dropped += other.error_dropped;
        self.queue_dropped += other.queue_dropped;
    }
}

/// Result of offering a packet to a link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Enqueue {
    /// Link was idle; serialization finishes after the returned delay.
    Started(f64),
    Queued,
    Dropped,
}

#[derive(Debug)]
pub struct Link {
    pub id: LinkId,
    pub params: LinkParams,
    queue: VecDeque<Packet>,
    in_propagation: u64,
    counters: LinkCounters,
    rng: RngStream,
}

impl Link {
    pub fn new(id: LinkId, params: LinkParams, master_seed: u64) -> Self {
        params.validate();
        Link {
            id,
            params,
            queue: VecDeque::new(),
            in_propagation: 0,
            counters: LinkCounters::default(),
            rng: RngStream::new(master_seed, &format!("loss.link.{id}")),
        }
    }

    pub fn counters(&self) -> LinkCounters {
        self.counters
    }

    /// Packets queued or on the wire.
    pub fn occupancy(&self) -> usize {
        self.queue.len()
    }

    pub fn in_flight_or_queued(&self) -> u64 {
        self.queue.len() as u64 + self.in_propagation
    }

    pub fn serialization_delay(&self, size: u32) -> f64 {
        f64::from(size) * 8.0 / self.params.capacity
    }

    /// Drop-tail admission.
    pub fn enqueue(&mut self, p: Packet) -> Enqueue {
        self.counters.enqueued += 1;
        if self.queue.len() >= self.params.queue_capacity {
            self.counters.queue_dropped += 1;
            return Enqueue::Dropped;
        }
        let delay = self.serialization_delay(p.size);
        self.queue.push_back(p);
        if self.queue.len() == 1 {
            Enqueue::Started(delay)
        } else {
            Enqueue::Queued
        }
    }

    /// Head-of-line packet finished serialization. Returns it (now
    /// propagating) and the serialization delay of the next packet, if any.
    pub fn finish_transmission(&mut self) -> (Packet, Option<f64>) {
        let p = self.queue.pop_front().expect("transmission finished on idle link");
        self.in_propagation += 1;
        let next = self.queue.front().map(|n| self.serialization_delay(n.size));
        (p, next)
    }

    /// Packet reached the far end; applies the Bernoulli error model.
    pub fn deliver(&mut self) -> bool {
        debug_assert!(self.in_propagation > 0);
        self.in_propagation -= 1;
        let u = self.rng.draw_uniform();
        if u < self.params.loss_prob {
            self.counters.error_dropped += 1;
            false
        } else {
            self.counters.delivered += 1;
            true
        }
    }

    pub fn conservation_holds(&self) -> bool {
        let c = &self.counters;
        c.enqueued == c.delivered + c.error_dropped + c.queue_dropped + self.in_flight_or_queued()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Route {
    pub flow: FlowId,
    pub path: PathId,
    pub forward: Rc<[LinkId]>,
    /// Empty for one-way flows.
    pub reverse: Rc<[LinkId]>,
}

impl Route {
    pub fn hops(&self, dir: Direction) -> &[LinkId] {
        match dir {
            Direction::Forward => &self.forward,
            Direction::Reverse => &self.reverse,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NetEvent {
    TxDone(LinkId),
    Arrive(LinkId, Packet),
}

/// All links and routes of one simulation instance.
#[derive(Debug, Default)]
pub struct Network {
    links: Vec<Link>,
    routes: Vec<Route>,
    master_seed: u64,
}

impl Network {
    pub fn new(master_seed: u64) -> Self {
        Network {
            links: Vec::new(),
            routes: Vec::new(),
            master_seed,
        }
    }

    pub fn add_link(&mut self, params: LinkParams) -> LinkId {
        let id = self.links.len();
        self.links.push(Link::new(id, params, self.master_seed));
        id
    }

    /// Registers a route. Hops must form a connected chain; a broken chain
    /// is a configuration fault and panics at build time.
    pub fn add_route(&mut self, flow: FlowId, path: PathId, forward: &[LinkId], reverse: &[LinkId]) -> RouteId {
        for hops in [forward, reverse] {
            for &l in hops {
                assert!(l < self.links.len(), "route references unknown link {l}");
            }
            for w in hops.windows(2) {
                assert_eq!(
                    self.links[w[0]].params.to, self.links[w[1]].params.from,
                    "route hops {} and {} are not connected",
                    w[0], w[1]
                );
            }
        }
        assert!(!forward.is_empty(), "route without forward hops");
        let id = self.routes.len();
        self.routes.push(Route {
            flow,
            path,
            forward: forward.into(),
            reverse: reverse.into(),
        });
        id
    }

    pub fn route(&self, id: RouteId) -> &Route {
        &self.routes[id]
    }

    pub fn routes(&self) -> &[Route] {
        &self.routes
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id]
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    /// Injects a packet at the first hop of its route.
    pub fn send<A: From<NetEvent>>(&mut self, q: &mut EventQueue<A>, mut p: Packet) -> bool {
        p.hop = 0;
        self.forward(q, p)
    }

    fn forward<A: From<NetEvent>>(&mut self, q: &mut EventQueue<A>, p: Packet) -> bool {
        let link_id = self.routes[p.route].hops(p.dir)[p.hop];
        match self.links[link_id].enqueue(p) {
            Enqueue::Started(delay) => {
                q.schedule_in(delay, NetEvent::TxDone(link_id).into());
                true
            }
            Enqueue::Queued => true,
            Enqueue::Dropped => false,
        }
    }

    /// Advances link state. Returns a packet that has reached the end of
    /// its route.
    pub fn handle<A: From<NetEvent>>(&mut self, q: &mut EventQueue<A>, ev: NetEvent) -> Option<Packet> {
        match ev {
            NetEvent::TxDone(id) => {
                let link = &mut self.links[id];
                let prop = link.params.prop_delay;
                let (p, next) = link.finish_transmission();
                q.schedule_in(prop, NetEvent::Arrive(id, p).into());
                if let Some(d) = next {
                    q.schedule_in(d, NetEvent::TxDone(id).into());
                }
                None
            }
            NetEvent::Arrive(id, mut p) => {
                if !self.links[id].deliver() {
                    return None;
                }
                p.hop += 1;
                if p.hop == self.routes[p.route].hops(p.dir).len() {
                    Some(p)
                } else {
                    self.forward(q, p);
                    None
                }
            }
        }
    }

    pub fn total_counters(&self) -> LinkCounters {
        let mut total = LinkCounters::default();
        for l in &self.links {
            total.add(&l.counters());
        }
        total
    }

    pub fn conservation_holds(&self) -> bool {
        self.links.iter().all(Link::conservation_holds)
    }
}

/// One-way latency of an unloaded path for a packet of `size` bytes.
pub fn unloaded_latency(net: &Network, hops: &[LinkId], size: u32) -> f64 {
    hops.iter()
        .map(|&l| {
            let link = net.link(l);
            link.serialization_delay(size) + link.params.prop_delay
        })
        .sum()
}
