//! Running single experiment points and whole grids.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::config::{Config, Template};
use crate::congestion::{Algo, Decrease};
use crate::engine::SimTime;

use super::metrics::{MetricsRecord, SummaryRow};
use super::scenario;
use super::sim::CwndTraceSample;

/// Everything one run produces.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub record: MetricsRecord,
    pub trace: Vec<CwndTraceSample>,
    pub decreases: Vec<(SimTime, Decrease)>,
    /// Every link satisfied the packet conservation identity at the end.
    pub conservation_ok: bool,
    /// Chunks the receiver saw more than once.
    pub duplicates: u64,
}

/// Builds and runs one (template, variable, algo, seed) point. With
/// `trace_interval` set, the window trace is recorded as well.
pub fn run_experiment(
    cfg: &Config,
    template: Template,
    variable: f64,
    algo: Algo,
    seed: u64,
    trace_interval: Option<f64>,
) -> RunResult {
    let mut sim = scenario::build(cfg, template, variable, algo, seed);
    if let Some(iv) = trace_interval {
        sim.enable_trace(iv);
    }
    let outcome = sim.run(cfg.scenario.time_cap);
    let file_size = cfg.scenario.file_size;
    let (transfer_time, timed_out) = match outcome.completed_at {
        Some(t) => (t.as_secs(), false),
        None => (cfg.scenario.time_cap, true),
    };
    let delivered = sim.receiver().delivered_bytes();
    let goodput = if timed_out {
        delivered as f64 * 8.0 / transfer_time
    } else {
        file_size as f64 * 8.0 / transfer_time
    };
    let record = MetricsRecord {
        scenario: template,
        algo,
        seed,
        variable,
        transfer_time,
        goodput,
        delivered_bytes: delivered,
        paths: sim.sender().stats().paths.clone(),
        links: sim.network().links().iter().map(|l| l.counters()).collect(),
        timed_out,
        order_violations: sim.receiver().order_violations(),
    };
    RunResult {
        record,
        trace: sim.trace().to_vec(),
        decreases: sim.decreases().to_vec(),
        conservation_ok: sim.network().conservation_holds(),
        duplicates: sim.receiver().duplicates(),
    }
}

/// One point of a sweep grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Job {
    pub algo: Algo,
    pub variable: f64,
    pub seed: u64,
}

/// All grid points of the configured sweep, in output order.
pub fn jobs(cfg: &Config) -> Vec<Job> {
    let mut out = Vec::new();
    for &algo in &cfg.scenario.algos {
        for variable in cfg.scenario.grid() {
            for &seed in &cfg.scenario.seeds {
                out.push(Job { algo, variable, seed });
            }
        }
    }
    out
}

fn sort_records(records: &mut [MetricsRecord]) {
    records.sort_by(|a, b| {
        (a.scenario, a.algo as u8)
            .cmp(&(b.scenario, b.algo as u8))
            .then(a.variable.total_cmp(&b.variable))
            .then(a.seed.cmp(&b.seed))
    });
}

/// Runs `work` on up to `workers` threads; results come back in job order.
pub fn run_jobs(cfg: &Config, work: &[Job], workers: usize) -> Vec<RunResult> {
    let template = cfg.scenario.template;
    let next = AtomicUsize::new(0);
    let results = Mutex::new(Vec::with_capacity(work.len()));
    let workers = workers.clamp(1, work.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = work.get(i) else { break };
                let r = run_experiment(cfg, template, job.variable, job.algo, job.seed, None);
                results.lock().expect("worker panicked").push((i, r));
            });
        }
    });
    let mut results = results.into_inner().expect("worker panicked");
    results.sort_by_key(|(i, _)| *i);
    results.into_iter().map(|(_, r)| r).collect()
}

/// Runs every grid point on `jobs_count` worker threads. The returned
/// records are sorted by (scenario, algo, variable, seed) whatever the
/// worker count.
pub fn sweep(cfg: &Config, jobs_count: usize) -> Vec<MetricsRecord> {
    let mut records: Vec<MetricsRecord> = run_jobs(cfg, &jobs(cfg), jobs_count)
        .into_iter()
        .map(|r| r.record)
        .collect();
    sort_records(&mut records);
    records
}

/// Mean and standard deviation per (algo, variable), in record order.
pub fn summarize(records: &[MetricsRecord]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(Template, u8, u64), Vec<&MetricsRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.scenario, r.algo as u8, ordered_bits(r.variable)))
            .or_default()
            .push(r);
    }
    groups.values().map(|g| SummaryRow::from_records(g)).collect()
}

/// Maps a non-negative float to integers with the same ordering.
fn ordered_bits(x: f64) -> u64 {
    let b = x.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}
