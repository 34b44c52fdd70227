//! Flat `key = value` experiment configuration.
//!
//! One setting per line, `#` starts a comment. Every key has a default; an
//! unknown key or a malformed value is rejected with the key and line
//! number. Command-line overrides use the same keys.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::congestion::{Algo, CcParams, PaScope, DEFAULT_FILTER_GAIN};
use crate::transport::TransportParams;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}: {message}", location(.line, .key))]
pub struct ConfigError {
    /// 1-based line, `None` for command-line overrides and validation.
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

fn location(line: &Option<usize>, key: &Option<String>) -> String {
    match (line, key) {
        (Some(l), Some(k)) => format!("line {l}: key `{k}`"),
        (Some(l), None) => format!("line {l}"),
        (None, Some(k)) => format!("key `{k}`"),
        (None, None) => "config".to_owned(),
    }
}

impl ConfigError {
    fn new(line: Option<usize>, key: Option<&str>, message: impl Into<String>) -> Self {
        ConfigError {
            line,
            key: key.map(str::to_owned),
            message: message.into(),
        }
    }
}

/// Topology template.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Template {
    /// Two disjoint three-hop paths with random loss.
    A,
    /// Both paths cross one shared bottleneck.
    B,
    /// Disjoint paths with CBR cross-traffic and no random loss.
    C,
}

impl Template {
    pub fn as_str(self) -> &'static str {
        match self {
            Template::A => "a",
            Template::B => "b",
            Template::C => "c",
        }
    }

    /// Default sweep grid: loss probabilities for A/B, loads for C.
    pub fn default_grid(self) -> Vec<f64> {
        (1..=10)
            .map(|k| match self {
                Template::A | Template::B => f64::from(k) / 100.0,
                Template::C => f64::from(k) / 10.0,
            })
            .collect()
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Template {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "a" => Ok(Template::A),
            "b" => Ok(Template::B),
            "c" => Ok(Template::C),
            _ => Err(format!("unknown scenario template `{s}` (expected a, b or c)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkSettings {
    pub prop_delay: f64,
    pub queue_capacity: usize,
    /// Source/destination access links, bits per second.
    pub edge_capacity: f64,
    /// Middle (bottleneck) links, bits per second.
    pub bottleneck_capacity: f64,
    /// SACK-direction links, bits per second.
    pub reverse_capacity: f64,
    /// Random loss on access links in scenarios A and B.
    pub edge_loss: f64,
    pub mtu: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CcSettings {
    pub algo: Algo,
    pub filter_gain: f64,
    pub pa_scope: PaScope,
    pub initial_cwnd_mtus: f64,
    pub ssthresh_floor_mtus: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSettings {
    pub template: Template,
    /// Middle-link (A) or shared-link (B) loss for single runs.
    pub loss: f64,
    /// CBR load for single runs of C.
    pub load: f64,
    /// Sweep grid; template default when `None`.
    pub grid: Option<Vec<f64>>,
    pub seeds: Vec<u64>,
    pub file_size: u64,
    pub algos: Vec<Algo>,
    /// Simulated-time cap in seconds.
    pub time_cap: f64,
    /// Random loss on all links of scenario C.
    pub c_edge_loss: f64,
}

impl ScenarioSettings {
    pub fn grid(&self) -> Vec<f64> {
        self.grid.clone().unwrap_or_else(|| self.template.default_grid())
    }

    /// The swept variable for single runs.
    pub fn point(&self) -> f64 {
        match self.template {
            Template::A | Template::B => self.loss,
            Template::C => self.load,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSettings {
    pub results_path: String,
    pub summary_path: String,
    pub trace_path: String,
    pub trace_interval: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub master_seed: u64,
    pub link: LinkSettings,
    pub transport: TransportParams,
    pub cc: CcSettings,
    pub scenario: ScenarioSettings,
    pub output: OutputSettings,
}

impl Default for Config {
    fn default() -> Self {
        let transport = TransportParams::default();
        Config {
            master_seed: 1,
            link: LinkSettings {
                prop_delay: 0.01,
                queue_capacity: 50,
                edge_capacity: 10e6,
                bottleneck_capacity: 1e6,
                reverse_capacity: 10e6,
                edge_loss: 0.01,
                mtu: transport.mtu(),
            },
            transport,
            cc: CcSettings {
                algo: Algo::CmtBerp,
                filter_gain: DEFAULT_FILTER_GAIN,
                pa_scope: PaScope::PerPath,
                initial_cwnd_mtus: 2.0,
                ssthresh_floor_mtus: 4.0,
            },
            scenario: ScenarioSettings {
                template: Template::A,
                loss: 0.10,
                load: 0.9,
                grid: None,
                seeds: (1..=10).collect(),
                file_size: 60_000_000,
                algos: vec![Algo::CmtCc, Algo::CmtBerp],
                time_cap: 1e4,
                c_edge_loss: 0.0,
            },
            output: OutputSettings {
                results_path: "results.csv".into(),
                summary_path: "summary.csv".into(),
                trace_path: "trace.csv".into(),
                trace_interval: 0.1,
            },
        }
    }
}

/// Every recognised key with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("engine.master_seed", "master seed for all random streams (u64)"),
    ("link.prop_delay", "propagation delay of every link, seconds"),
    ("link.queue_capacity", "drop-tail queue size in packets"),
    ("link.edge_capacity", "access link capacity, bit/s"),
    ("link.bottleneck_capacity", "middle/shared link capacity, bit/s"),
    ("link.reverse_capacity", "SACK-direction link capacity, bit/s"),
    ("link.edge_loss", "access link loss probability (scenarios a, b)"),
    ("link.mtu", "path MTU in bytes"),
    ("link.data_overhead", "per-DATA-packet header bytes"),
    ("link.sack_size", "SACK packet size without gap blocks"),
    ("link.sack_gap_size", "bytes per SACK gap block"),
    ("transport.dupthresh", "missing reports that trigger fast retransmit"),
    ("transport.rto_initial", "initial RTO, seconds"),
    ("transport.rto_min", "minimum RTO, seconds"),
    ("transport.rto_max", "maximum RTO, seconds"),
    ("transport.rtx_policy", "rtx-ssthresh | rtx-same"),
    ("transport.delayed_ack_factor", "packets per delayed SACK"),
    ("transport.delayed_ack_timeout", "delayed SACK timer, seconds"),
    ("transport.rwnd", "receiver window, bytes"),
    ("cc.algo", "cmt-cc | cmt-berp | mptcp-coupled"),
    ("cc.p", "bandwidth filter constant in [0,1)"),
    ("cc.pa_scope", "per-path | global partial-bytes-acked"),
    ("cc.initial_cwnd", "initial window in MTUs"),
    ("cc.ssthresh_floor", "post-loss ssthresh floor in MTUs"),
    ("scenario.template", "a | b | c"),
    ("scenario.loss", "loss probability of the varied link (a, b)"),
    ("scenario.load", "CBR load as a fraction of the bottleneck (c)"),
    ("scenario.grid", "comma-separated sweep values"),
    ("scenario.seeds", "comma-separated seeds or ranges like 1-10"),
    ("scenario.file_size", "transfer size in bytes"),
    ("scenario.algos", "comma-separated algorithms for sweeps"),
    ("scenario.time_cap", "simulated-time cap, seconds"),
    ("scenario_c.edge_loss", "random loss on every link of scenario c"),
    ("output.results_path", "results CSV"),
    ("output.summary_path", "sweep summary CSV"),
    ("output.trace_path", "trace CSV"),
    ("output.trace_interval", "trace sampling interval, seconds"),
];

fn parse_num<T: FromStr>(v: &str) -> Result<T, String> {
    v.parse::<T>().map_err(|_| format!("invalid number `{v}`"))
}

fn parse_prob(v: &str) -> Result<f64, String> {
    let x: f64 = parse_num(v)?;
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err(format!("{x} is not a probability"))
    }
}

fn parse_positive(v: &str) -> Result<f64, String> {
    let x: f64 = parse_num(v)?;
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(format!("{v} must be positive"))
    }
}

fn parse_list<T, F>(v: &str, f: F) -> Result<Vec<T>, String>
where
    F: Fn(&str) -> Result<T, String>,
{
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(f).collect()
}

fn parse_seeds(v: &str) -> Result<Vec<u64>, String> {
    let mut out = Vec::new();
    for part in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some((a, b)) = part.split_once('-') {
            let (a, b): (u64, u64) = (parse_num(a.trim())?, parse_num(b.trim())?);
            if a > b {
                return Err(format!("empty seed range `{part}`"));
            }
            out.extend(a..=b);
        } else {
            out.push(parse_num(part)?);
        }
    }
    Ok(out)
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        let mut cfg = Config::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    /// Applies the settings in `text` on top of the current values.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((k, v)) = content.split_once('=') else {
                return Err(ConfigError::new(Some(line), None, format!("expected `key = value`, got `{content}`")));
            };
            let key = k.trim();
            self.set(key, v.trim())
                .map_err(|m| ConfigError::new(Some(line), Some(key), m))?;
        }
        self.validate()
    }

    /// Applies one `key=value` override.
    pub fn apply_override(&mut self, kv: &str) -> Result<(), ConfigError> {
        let Some((k, v)) = kv.split_once('=') else {
            return Err(ConfigError::new(None, None, format!("override `{kv}` is not key=value")));
        };
        let key = k.trim();
        self.set(key, v.trim()).map_err(|m| ConfigError::new(None, Some(key), m))?;
        self.validate()
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        match key {
            "engine.master_seed" => self.master_seed = parse_num(v)?,
            "link.prop_delay" => {
                let d: f64 = parse_num(v)?;
                if !(d >= 0.0 && d.is_finite()) {
                    return Err(format!("{v} must be non-negative"));
                }
                self.link.prop_delay = d;
            }
            "link.queue_capacity" => {
                let q: usize = parse_num(v)?;
                if q == 0 {
                    return Err("queue capacity must be at least 1".into());
                }
                self.link.queue_capacity = q;
            }
            "link.edge_capacity" => self.link.edge_capacity = parse_positive(v)?,
            "link.bottleneck_capacity" => self.link.bottleneck_capacity = parse_positive(v)?,
            "link.reverse_capacity" => self.link.reverse_capacity = parse_positive(v)?,
            "link.edge_loss" => self.link.edge_loss = parse_prob(v)?,
            "link.mtu" => self.link.mtu = parse_num(v)?,
            "link.data_overhead" => self.transport.data_overhead = parse_num(v)?,
            "link.sack_size" => self.transport.sack_base = parse_num(v)?,
            "link.sack_gap_size" => self.transport.sack_per_gap = parse_num(v)?,
            "transport.dupthresh" => self.transport.dupthresh = parse_num(v)?,
            "transport.rto_initial" => self.transport.rto_initial = parse_positive(v)?,
            "transport.rto_min" => self.transport.rto_min = parse_positive(v)?,
            "transport.rto_max" => self.transport.rto_max = parse_positive(v)?,
            "transport.rtx_policy" => self.transport.rtx_policy = v.parse()?,
            "transport.delayed_ack_factor" => self.transport.delayed_ack_factor = parse_num(v)?,
            "transport.delayed_ack_timeout" => self.transport.delayed_ack_timeout = parse_positive(v)?,
            "transport.rwnd" => self.transport.rwnd = parse_num(v)?,
            "cc.algo" => self.cc.algo = v.parse()?,
            "cc.p" => {
                let p: f64 = parse_num(v)?;
                if !(0.0..1.0).contains(&p) {
                    return Err(format!("{p} outside [0, 1)"));
                }
                self.cc.filter_gain = p;
            }
            "cc.pa_scope" => self.cc.pa_scope = v.parse()?,
            "cc.initial_cwnd" => self.cc.initial_cwnd_mtus = parse_positive(v)?,
            "cc.ssthresh_floor" => self.cc.ssthresh_floor_mtus = parse_positive(v)?,
            "scenario.template" => self.scenario.template = v.parse()?,
            "scenario.loss" => self.scenario.loss = parse_prob(v)?,
            "scenario.load" => self.scenario.load = parse_prob(v)?,
            "scenario.grid" => {
                let g = parse_list(v, parse_num::<f64>)?;
                self.scenario.grid = if g.is_empty() { None } else { Some(g) };
            }
            "scenario.seeds" => self.scenario.seeds = parse_seeds(v)?,
            "scenario.file_size" => self.scenario.file_size = parse_num(v)?,
            "scenario.algos" => self.scenario.algos = parse_list(v, str::parse::<Algo>)?,
            "scenario.time_cap" => self.scenario.time_cap = parse_positive(v)?,
            "scenario_c.edge_loss" => self.scenario.c_edge_loss = parse_prob(v)?,
            "output.results_path" => self.output.results_path = v.to_owned(),
            "output.summary_path" => self.output.summary_path = v.to_owned(),
            "output.trace_path" => self.output.trace_path = v.to_owned(),
            "output.trace_interval" => self.output.trace_interval = parse_positive(v)?,
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    /// Cross-field checks.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |key: &str, m: String| Err(ConfigError::new(None, Some(key), m));
        let t = &self.transport;
        if self.link.mtu <= t.data_overhead {
            return err("link.mtu", format!("MTU {} leaves no room for payload", self.link.mtu));
        }
        if t.rto_min > t.rto_max {
            return err("transport.rto_min", "rto_min exceeds rto_max".into());
        }
        if t.dupthresh == 0 {
            return err("transport.dupthresh", "must be at least 1".into());
        }
        if t.delayed_ack_factor == 0 {
            return err("transport.delayed_ack_factor", "must be at least 1".into());
        }
        if self.scenario.seeds.is_empty() {
            return err("scenario.seeds", "seed list is empty".into());
        }
        if self.scenario.algos.is_empty() {
            return err("scenario.algos", "algorithm list is empty".into());
        }
        if self.scenario.file_size == 0 {
            return err("scenario.file_size", "must be positive".into());
        }
        if self.scenario.template == Template::C && self.scenario.load <= 0.0 {
            return err("scenario.load", "load must be in (0, 1]".into());
        }
        if let Some(grid) = &self.scenario.grid {
            for &x in grid {
                let ok = match self.scenario.template {
                    Template::A | Template::B => (0.0..=1.0).contains(&x),
                    Template::C => x > 0.0 && x <= 1.0,
                };
                if !ok {
                    return err("scenario.grid", format!("grid value {x} out of range"));
                }
            }
        }
        Ok(())
    }

    /// Transport parameters with the chunk size derived from the MTU.
    pub fn transport_params(&self) -> TransportParams {
        let mut t = self.transport.clone();
        t.chunk_size = self.link.mtu - t.data_overhead;
        t
    }

    pub fn cc_params(&self, paths: usize) -> CcParams {
        let t = self.transport_params();
        let mtu = f64::from(t.mtu());
        CcParams {
            paths,
            mtu,
            filter_gain: self.cc.filter_gain,
            initial_cwnd: self.cc.initial_cwnd_mtus * mtu,
            initial_ssthresh: t.rwnd as f64,
            initial_srtt: t.rto_initial,
            ssthresh_floor_mtus: self.cc.ssthresh_floor_mtus,
            pa_scope: self.cc.pa_scope,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse_from_empty() {
        let c = Config::parse("# nothing\n\n").unwrap();
        assert_eq!(c, Config::default());
        assert_eq!(c.transport_params().chunk_size, 1452);
        assert_eq!(c.cc_params(2).initial_cwnd, 3000.0);
    }

    #[test]
    fn keys_table_matches_setter() {
        let mut c = Config::default();
        for (k, _) in KEYS {
            assert_ne!(c.set(k, "").err().as_deref(), Some("unknown key"), "{k}");
        }
    }

    #[test]
    fn full_document() {
        let text = "\
engine.master_seed = 7
cc.algo = mptcp-coupled   # coupled
scenario.template = b
scenario.grid = 0.05, 0.1
scenario.seeds = 1-3, 9
transport.rtx_policy = rtx-same
cc.pa_scope = global
";
        let c = Config::parse(text).unwrap();
        assert_eq!(c.master_seed, 7);
        assert_eq!(c.cc.algo, Algo::MptcpCoupled);
        assert_eq!(c.scenario.template, Template::B);
        assert_eq!(c.scenario.grid(), vec![0.05, 0.1]);
        assert_eq!(c.scenario.seeds, vec![1, 2, 3, 9]);
        assert_eq!(c.transport.rtx_policy, crate::transport::RtxPolicy::Same);
        assert_eq!(c.cc.pa_scope, PaScope::Global);
    }

    #[test]
    fn unknown_key_names_key_and_line() {
        let e = Config::parse("cc.algo = cmt-cc\ncc.algoz = cmt-berp\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        assert_eq!(e.key.as_deref(), Some("cc.algoz"));
        assert!(e.to_string().contains("cc.algoz"));
    }

    #[test]
    fn bad_values_rejected() {
        assert!(Config::parse("scenario.loss = 1.5").is_err());
        assert!(Config::parse("cc.p = 1").is_err());
        assert!(Config::parse("cc.algo = reno").is_err());
        assert!(Config::parse("just words").is_err());
        assert!(Config::parse("scenario.seeds = ").is_err());
        assert!(Config::parse("scenario.template = c\nscenario.grid = 0, 0.5").is_err());
    }

    #[test]
    fn override_applies() {
        let mut c = Config::default();
        c.apply_override("scenario.loss=0.05").unwrap();
        assert_eq!(c.scenario.loss, 0.05);
        let e = c.apply_override("nope=1").unwrap_err();
        assert_eq!(e.key.as_deref(), Some("nope"));
        assert!(c.apply_override("novalue").is_err());
    }
}
