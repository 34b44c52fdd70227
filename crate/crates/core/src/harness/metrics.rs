//! Per-run metrics and the CSV/gnuplot artifacts built from them.

use std::fmt::Write as _;

use crate::config::Template;
use crate::congestion::{Algo, Decrease};
use crate::engine::SimTime;
use crate::netsim::LinkCounters;
use crate::transport::PathStats;

use super::sim::CwndTraceSample;

pub const RESULTS_HEADER: &str =
    "scenario,algo,seed,variable,transfer_time_s,goodput_bps,fast_rtx,timeouts,err_drops,queue_drops,timed_out";

pub const SUMMARY_HEADER: &str =
    "scenario,algo,variable,runs,completed,mean_transfer_time_s,stdev_transfer_time_s,mean_goodput_bps,stdev_goodput_bps";

pub const TRACE_HEADER: &str = "time,path,cwnd,ssthresh,srtt,bwe,alpha,beta";

pub const EVENTS_HEADER: &str = "time,path,event,cwnd_before,beta,ssthresh,cwnd";

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub scenario: Template,
    pub algo: Algo,
    pub seed: u64,
    pub variable: f64,
    /// Completion time, or the time cap for timed-out runs.
    pub transfer_time: f64,
    /// Application bits per second.
    pub goodput: f64,
    pub delivered_bytes: u64,
    pub paths: Vec<PathStats>,
    pub links: Vec<LinkCounters>,
    pub timed_out: bool,
    pub order_violations: u64,
}

impl MetricsRecord {
    pub fn fast_rtx(&self) -> u64 {
        self.paths.iter().map(|p| p.fast_rtx).sum()
    }

    pub fn timeouts(&self) -> u64 {
        self.paths.iter().map(|p| p.timeouts).sum()
    }

    pub fn totals(&self) -> LinkCounters {
        let mut t = LinkCounters::default();
        for l in &self.links {
            t.add(l);
        }
        t
    }

    pub fn csv_row(&self) -> String {
        let t = self.totals();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.scenario,
            self.algo,
            self.seed,
            self.variable,
            self.transfer_time,
            self.goodput,
            self.fast_rtx(),
            self.timeouts(),
            t.error_dropped,
            t.queue_dropped,
            self.timed_out
        )
    }
}

/// Mean and sample standard deviation.
pub fn mean_stdev(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Aggregate over the seeds of one grid point. Timed-out runs are counted
/// but excluded from the statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scenario: Template,
    pub algo: Algo,
    pub variable: f64,
    pub runs: usize,
    pub completed: usize,
    pub mean_time: f64,
    pub stdev_time: f64,
    pub mean_goodput: f64,
    pub stdev_goodput: f64,
}

impl SummaryRow {
    pub fn from_records(records: &[&MetricsRecord]) -> SummaryRow {
        let first = records.first().expect("summary of no records");
        let done: Vec<&&MetricsRecord> = records.iter().filter(|r| !r.timed_out).collect();
        let times: Vec<f64> = done.iter().map(|r| r.transfer_time).collect();
        let goodputs: Vec<f64> = done.iter().map(|r| r.goodput).collect();
        let (mean_time, stdev_time) = mean_stdev(&times);
        let (mean_goodput, stdev_goodput) = mean_stdev(&goodputs);
        SummaryRow {
            scenario: first.scenario,
            algo: first.algo,
            variable: first.variable,
            runs: records.len(),
            completed: done.len(),
            mean_time,
            stdev_time,
            mean_goodput,
            stdev_goodput,
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.scenario,
            self.algo,
            self.variable,
            self.runs,
            self.completed,
            self.mean_time,
            self.stdev_time,
            self.mean_goodput,
            self.stdev_goodput
        )
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn results_csv(records: &[MetricsRecord]) -> String {
    let mut s = String::from(RESULTS_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut s = String::from(SUMMARY_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

/// Trace CSV. Path numbers are 1-based; rates are bytes per second.
pub fn trace_csv(samples: &[CwndTraceSample]) -> String {
    let mut s = String::from(TRACE_HEADER);
    s.push('\n');
    for x in samples {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            x.time,
            x.path + 1,
            x.cwnd,
            x.ssthresh,
            opt(x.srtt),
            x.bwe,
            opt(x.alpha),
            x.beta
        );
    }
    s
}

/// Window reductions, one per row.
pub fn events_csv(events: &[(SimTime, Decrease)]) -> String {
    let mut s = String::from(EVENTS_HEADER);
    s.push('\n');
    for (t, d) in events {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            t.as_secs(),
            d.path + 1,
            d.kind.as_str(),
            d.cwnd_before,
            d.beta,
            d.ssthresh,
            d.cwnd
        );
    }
    s
}

/// Gnuplot script plotting per-path cwnd from a trace CSV.
pub fn trace_gnuplot(csv_name: &str, title: &str, paths: usize) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set title '{title}'");
    let _ = writeln!(s, "set xlabel 'time (s)'");
    let _ = writeln!(s, "set ylabel 'cwnd (bytes)'");
    let _ = writeln!(s, "set key outside");
    let plots: Vec<String> = (1..=paths)
        .map(|p| format!("'{csv_name}' every ::1 using ($2=={p}?$1:1/0):3 with lines title 'path {p}'"))
        .collect();
    let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
    s
}

/// Gnuplot script for a figure CSV with one column per algorithm.
pub fn figure_gnuplot(csv_name: &str, title: &str, xlabel: &str, ylabel: &str, algos: &[Algo]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set title '{title}'");
    let _ = writeln!(s, "set xlabel '{xlabel}'");
    let _ = writeln!(s, "set ylabel '{ylabel}'");
    let plots: Vec<String> = algos
        .iter()
        .enumerate()
        .map(|(i, a)| format!("'{csv_name}' every ::1 using 1:{} with linespoints title '{a}'", i + 2))
        .collect();
    let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
    s
}
