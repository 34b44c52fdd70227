//! Whole-simulation checks on shortened transfers.

use proptest::prelude::*;

use cmtsim::config::{Config, Template};
use cmtsim::harness::{build, run_experiment};
use cmtsim::Algo;

fn short(file_size: u64) -> Config {
    let mut cfg = Config::default();
    cfg.scenario.file_size = file_size;
    cfg
}

#[test]
fn invariants_hold_after_every_event() {
    let cfg = short(400_000);
    for (template, x) in [(Template::A, 0.08), (Template::B, 0.08), (Template::C, 0.9)] {
        for algo in Algo::ALL {
            let mut sim = build(&cfg, template, x, algo, 4);
            let mut events = 0u64;
            let out = sim.run_checked(cfg.scenario.time_cap, |s| {
                events += 1;
                if let Err(e) = s.sender().check_invariants() {
                    panic!("{template} {algo}: {e}");
                }
                if events.is_multiple_of(97) {
                    assert!(s.network().conservation_holds());
                }
            });
            assert!(out.completed_at.is_some(), "{template} {algo} did not finish");
            assert_eq!(sim.receiver().delivered_bytes(), 400_000);
            assert_eq!(sim.receiver().order_violations(), 0);
            assert!(sim.network().conservation_holds());
        }
    }
}

#[test]
fn same_inputs_same_record() {
    let cfg = short(300_000);
    let a = run_experiment(&cfg, Template::A, 0.1, Algo::CmtBerp, 9, Some(0.1));
    let b = run_experiment(&cfg, Template::A, 0.1, Algo::CmtBerp, 9, Some(0.1));
    assert_eq!(a.record, b.record);
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.decreases, b.decreases);
}

#[test]
fn different_seeds_differ() {
    let cfg = short(300_000);
    let a = run_experiment(&cfg, Template::A, 0.1, Algo::CmtCc, 1, None).record;
    let b = run_experiment(&cfg, Template::A, 0.1, Algo::CmtCc, 2, None).record;
    assert_ne!(a.transfer_time, b.transfer_time);
}

#[test]
fn lossless_shared_bottleneck_respects_capacity() {
    let mut cfg = short(2_000_000);
    cfg.link.edge_loss = 0.0;
    let r = run_experiment(&cfg, Template::B, 0.0, Algo::CmtBerp, 1, None).record;
    assert!(!r.timed_out);
    assert!(r.goodput <= 1e6, "goodput {} above the shared 1 Mbit/s", r.goodput);
    assert!(r.goodput > 0.8e6, "goodput {}", r.goodput);
}

#[test]
fn light_cross_traffic_causes_no_queue_loss() {
    // with load 0.2 each middle link has 0.8 Mbit/s left; the bound below is
    // 60% of the 1.6 Mbit/s residual
    let cfg = short(3_000_000);
    for algo in [Algo::CmtCc, Algo::CmtBerp] {
        let r = run_experiment(&cfg, Template::C, 0.2, algo, 2, None).record;
        assert!(!r.timed_out);
        assert!(r.goodput > 0.6 * 2.0 * (1.0 - 0.2) * 1e6, "{algo}: {}", r.goodput);
        assert!(r.goodput <= 2e6);
    }
}

#[test]
fn trace_samples_on_fixed_grid() {
    let cfg = short(500_000);
    let r = run_experiment(&cfg, Template::A, 0.1, Algo::CmtBerp, 3, Some(0.1));
    let path0: Vec<f64> = r.trace.iter().filter(|s| s.path == 0).map(|s| s.time).collect();
    assert!(path0.len() > 10);
    for (k, t) in path0.iter().enumerate() {
        assert!((t - k as f64 * 0.1).abs() < 1e-9);
    }
    assert!(r.trace.iter().all(|s| s.cwnd >= 1500.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn any_seed_delivers_exactly_once(seed in 0u64..1000, loss in 0.0f64..0.12, pick in 0usize..3) {
        let cfg = short(150_000);
        let algo = Algo::ALL[pick];
        let r = run_experiment(&cfg, Template::A, loss, algo, seed, None);
        prop_assert!(!r.record.timed_out);
        prop_assert_eq!(r.record.delivered_bytes, 150_000);
        prop_assert_eq!(r.record.order_violations, 0);
        prop_assert!(r.conservation_ok);
        prop_assert!(r.record.goodput <= 2e6);
    }
}
