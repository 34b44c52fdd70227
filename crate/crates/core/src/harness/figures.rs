//! Canned configurations for the six reproduced figures.

use std::fmt::Write as _;

use crate::config::{Config, ConfigError, Template};
use crate::congestion::Algo;

use super::metrics::{figure_gnuplot, SummaryRow};

/// Whether a figure is a grid sweep or a single-run window trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureKind {
    Sweep,
    Trace,
}

/// Which summary column a sweep figure plots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    TransferTime,
    Goodput,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Figure {
    pub number: u32,
    pub kind: FigureKind,
    pub title: &'static str,
    pub metric: Metric,
    /// Flat config lines applied on top of the defaults.
    pub overrides: &'static [&'static str],
}

pub const FIGURES: [Figure; 6] = [
    Figure {
        number: 2,
        kind: FigureKind::Sweep,
        title: "Average transfer time, disjoint paths",
        metric: Metric::TransferTime,
        overrides: &["scenario.template=a"],
    },
    Figure {
        number: 3,
        kind: FigureKind::Trace,
        title: "Congestion window, disjoint paths, 10% loss",
        metric: Metric::TransferTime,
        overrides: &["scenario.template=a", "scenario.loss=0.10", "cc.algo=cmt-berp"],
    },
    Figure {
        number: 5,
        kind: FigureKind::Sweep,
        title: "Average transfer time, shared bottleneck",
        metric: Metric::TransferTime,
        overrides: &["scenario.template=b"],
    },
    Figure {
        number: 6,
        kind: FigureKind::Trace,
        title: "Congestion window, shared bottleneck, 10% loss",
        metric: Metric::TransferTime,
        overrides: &["scenario.template=b", "scenario.loss=0.10", "cc.algo=cmt-berp"],
    },
    Figure {
        number: 8,
        kind: FigureKind::Sweep,
        title: "Average throughput with CBR cross traffic",
        metric: Metric::Goodput,
        overrides: &["scenario.template=c"],
    },
    Figure {
        number: 9,
        kind: FigureKind::Trace,
        title: "Congestion window with CBR cross traffic",
        metric: Metric::TransferTime,
        overrides: &["scenario.template=c", "scenario.load=0.9", "cc.algo=cmt-berp"],
    },
];

pub fn figure(number: u32) -> Option<&'static Figure> {
    FIGURES.iter().find(|f| f.number == number)
}

impl Figure {
    /// Applies the preset to `cfg`.
    pub fn apply(&self, cfg: &mut Config) -> Result<(), ConfigError> {
        for o in self.overrides {
            cfg.apply_override(o)?;
        }
        Ok(())
    }

    pub fn x_label(&self, template: Template) -> &'static str {
        match template {
            Template::A | Template::B => "loss probability",
            Template::C => "offered CBR load",
        }
    }

    pub fn y_label(&self) -> &'static str {
        match self.metric {
            Metric::TransferTime => "mean transfer time (s)",
            Metric::Goodput => "mean throughput (bit/s)",
        }
    }

    fn column(&self) -> &'static str {
        match self.metric {
            Metric::TransferTime => "mean_transfer_time_s",
            Metric::Goodput => "mean_goodput_bps",
        }
    }

    /// Figure data: one row per grid value, one column per algorithm.
    pub fn csv(&self, algos: &[Algo], rows: &[SummaryRow]) -> String {
        let mut s = String::from("variable");
        for a in algos {
            let _ = write!(s, ",{}_{}", a, self.column());
        }
        s.push('\n');
        let mut xs: Vec<f64> = rows.iter().map(|r| r.variable).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        for x in xs {
            let _ = write!(s, "{x}");
            for a in algos {
                let v = rows.iter().find(|r| r.algo == *a && r.variable == x).map(|r| match self.metric {
                    Metric::TransferTime => r.mean_time,
                    Metric::Goodput => r.mean_goodput,
                });
                match v {
                    Some(v) => {
                        let _ = write!(s, ",{v}");
                    }
                    None => s.push(','),
                }
            }
            s.push('\n');
        }
        s
    }

    pub fn gnuplot(&self, csv_name: &str, template: Template, algos: &[Algo]) -> String {
        figure_gnuplot(csv_name, self.title, self.x_label(template), self.y_label(), algos)
    }
}
