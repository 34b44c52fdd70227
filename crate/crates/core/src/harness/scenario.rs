//! Topologies for the three experiment templates.
//!
//! Node names: `S.if1`/`S.if2` are the two source interfaces, `D.if1`/`D.if2`
//! the destination interfaces, `N1`..`N4` routers, `U1`/`U2` CBR sources and
//! `U3`/`U4` CBR sinks. Every forward link has a lossless reverse twin at
//! `link.reverse_capacity`, used only by SACKs.

use crate::config::{Config, Template};
use crate::congestion::{self, Algo};
use crate::engine::{derive_seed, RngStream, SimTime};
use crate::netsim::{LinkId, LinkParams, Network};
use crate::transport::{Receiver, Sender};

use super::sim::{CbrSource, Simulation};

/// Wire size of CBR packets.
pub const CBR_PACKET_SIZE: u32 = 512;

/// Master seed of one run, shared by every algorithm at the same seed so
/// that link loss streams line up across controllers.
pub fn run_seed(master_seed: u64, seed: u64) -> u64 {
    derive_seed(master_seed, &format!("run.{seed}"))
}

/// Forward/reverse link pair description: (from, to, capacity, loss).
type Hop<'a> = (&'a str, &'a str, f64, f64);

struct Builder<'a> {
    cfg: &'a Config,
    net: Network,
}

impl<'a> Builder<'a> {
    fn new(cfg: &'a Config, seed: u64) -> Self {
        Builder {
            cfg,
            net: Network::new(seed),
        }
    }

    fn link(&mut self, from: &str, to: &str, capacity: f64, loss: f64) -> LinkId {
        let l = &self.cfg.link;
        self.net
            .add_link(LinkParams::new(from, to, capacity, l.prop_delay, loss, l.queue_capacity))
    }

    fn chain(&mut self, hops: &[Hop<'_>]) -> Vec<LinkId> {
        hops.iter().map(|&(f, t, c, p)| self.link(f, t, c, p)).collect()
    }

    /// Lossless reverse links for a chain of forward hops.
    fn reverse(&mut self, hops: &[Hop<'_>]) -> Vec<LinkId> {
        let cap = self.cfg.link.reverse_capacity;
        hops.iter().rev().map(|&(f, t, _, _)| self.link(t, f, cap, 0.0)).collect()
    }
}

fn assemble(cfg: &Config, algo: Algo, net: Network, routes: Vec<usize>, cbr: Vec<CbrSource>) -> Simulation {
    let transport = cfg.transport_params();
    let cc = congestion::build(algo, cfg.cc_params(routes.len()), SimTime::ZERO);
    let sender = Sender::new(transport.clone(), cc, cfg.scenario.file_size);
    let receiver = Receiver::new(transport.clone());
    Simulation::new(net, sender, receiver, transport, routes, cbr, cfg.scenario.file_size)
}

/// Two disjoint paths S -> N1 -> N3 -> D and S -> N2 -> N4 -> D. Access
/// links carry `link.edge_loss`, the middle links `loss_mid`.
pub fn build_scenario_a(cfg: &Config, loss_mid: f64, algo: Algo, seed: u64) -> Simulation {
    assert!((0.0..=1.0).contains(&loss_mid));
    let l = &cfg.link;
    disjoint(cfg, algo, seed, l.edge_loss, loss_mid, &[])
}

/// Both paths enter N1 and cross the shared N1 -> N2 bottleneck before
/// splitting towards N3 and N4.
pub fn build_scenario_b(cfg: &Config, loss_shared: f64, algo: Algo, seed: u64) -> Simulation {
    assert!((0.0..=1.0).contains(&loss_shared));
    let l = &cfg.link;
    let (edge, mid, e) = (l.edge_capacity, l.bottleneck_capacity, l.edge_loss);
    let mut b = Builder::new(cfg, run_seed(cfg.master_seed, seed));
    let a1 = b.link("S.if1", "N1", edge, e);
    let a2 = b.link("S.if2", "N1", edge, e);
    let shared = b.link("N1", "N2", mid, loss_shared);
    let m1 = b.link("N2", "N3", edge, 0.0);
    let m2 = b.link("N2", "N4", edge, 0.0);
    let d1 = b.link("N3", "D.if1", edge, e);
    let d2 = b.link("N4", "D.if2", edge, e);
    let rcap = l.reverse_capacity;
    let r_d1 = b.link("D.if1", "N3", rcap, 0.0);
    let r_d2 = b.link("D.if2", "N4", rcap, 0.0);
    let r_m1 = b.link("N3", "N2", rcap, 0.0);
    let r_m2 = b.link("N4", "N2", rcap, 0.0);
    let r_shared = b.link("N2", "N1", rcap, 0.0);
    let r_a1 = b.link("N1", "S.if1", rcap, 0.0);
    let r_a2 = b.link("N1", "S.if2", rcap, 0.0);
    let mut net = b.net;
    let p1 = net.add_route(0, 0, &[a1, shared, m1, d1], &[r_d1, r_m1, r_shared, r_a1]);
    let p2 = net.add_route(0, 1, &[a2, shared, m2, d2], &[r_d2, r_m2, r_shared, r_a2]);
    assemble(cfg, algo, net, vec![p1, p2], Vec::new())
}

/// Scenario A topology without random loss, plus one CBR flow on each
/// middle link at `load` times the bottleneck capacity.
pub fn build_scenario_c(cfg: &Config, load: f64, algo: Algo, seed: u64) -> Simulation {
    assert!(load > 0.0 && load <= 1.0, "load must be in (0, 1]");
    let loss = cfg.scenario.c_edge_loss;
    let rate = load * cfg.link.bottleneck_capacity;
    disjoint(cfg, algo, seed, loss, loss, &[rate, rate])
}

fn disjoint(cfg: &Config, algo: Algo, seed: u64, edge_loss: f64, mid_loss: f64, cbr_rates: &[f64]) -> Simulation {
    let l = &cfg.link;
    let (edge, mid) = (l.edge_capacity, l.bottleneck_capacity);
    let master = run_seed(cfg.master_seed, seed);
    let mut b = Builder::new(cfg, master);
    let hops1: [Hop; 3] = [
        ("S.if1", "N1", edge, edge_loss),
        ("N1", "N3", mid, mid_loss),
        ("N3", "D.if1", edge, edge_loss),
    ];
    let hops2: [Hop; 3] = [
        ("S.if2", "N2", edge, edge_loss),
        ("N2", "N4", mid, mid_loss),
        ("N4", "D.if2", edge, edge_loss),
    ];
    let f1 = b.chain(&hops1);
    let r1 = b.reverse(&hops1);
    let f2 = b.chain(&hops2);
    let r2 = b.reverse(&hops2);

    let mut cbr_links = Vec::new();
    for (i, (src, dst, via)) in [("U1", "U3", ("N1", "N3")), ("U2", "U4", ("N2", "N4"))]
        .into_iter()
        .enumerate()
        .take(cbr_rates.len())
    {
        let access = b.link(src, via.0, edge, edge_loss);
        let exit = b.link(via.1, dst, edge, edge_loss);
        let middle = if i == 0 { f1[1] } else { f2[1] };
        cbr_links.push([access, middle, exit]);
    }

    let mut net = b.net;
    let p1 = net.add_route(0, 0, &f1, &r1);
    let p2 = net.add_route(0, 1, &f2, &r2);
    let mut cbr = Vec::new();
    for (i, (links, &rate)) in cbr_links.iter().zip(cbr_rates).enumerate() {
        let flow = i + 1;
        let route = net.add_route(flow, 0, links, &[]);
        let interval = f64::from(CBR_PACKET_SIZE) * 8.0 / rate;
        let mut jitter = RngStream::new(master, &format!("app.cbr.{flow}"));
        cbr.push(CbrSource {
            route,
            flow,
            size: CBR_PACKET_SIZE,
            interval,
            start: jitter.draw_uniform() * interval,
            sent: 0,
        });
    }
    assemble(cfg, algo, net, vec![p1, p2], cbr)
}

/// Builds the instance for one experiment point.
pub fn build(cfg: &Config, template: Template, variable: f64, algo: Algo, seed: u64) -> Simulation {
    match template {
        Template::A => build_scenario_a(cfg, variable, algo, seed),
        Template::B => build_scenario_b(cfg, variable, algo, seed),
        Template::C => build_scenario_c(cfg, variable, algo, seed),
    }
}
