//! Experiment configuration: a TOML or JSON file, overridden field by field
//! from the command line.

use std::path::{Path, PathBuf};

use dioph_core::manifold::ChartSpec;
use dioph_core::{AxisBox, ManifoldChart};
use serde::{Deserialize, Serialize};

use crate::Failure;

/// `ε` as a function of `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum EpsSchedule {
    Fixed(f64),
    /// `ε = e^{-ct}`.
    Exp(f64),
}

impl EpsSchedule {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            EpsSchedule::Fixed(e) => e,
            EpsSchedule::Exp(c) => (-c * t).exp(),
        }
    }
}

/// A chart given either as shorthand (`veronese:3`, `circle:1`, `mixed:2,4`)
/// or as a full table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChartField {
    Short(String),
    Spec(ChartSpec),
}

impl ChartField {
    pub fn build(&self) -> Result<ManifoldChart, Failure> {
        match self {
            ChartField::Spec(s) => Ok(s.build()?),
            ChartField::Short(s) => parse_chart(s),
        }
    }
}

pub fn parse_chart(s: &str) -> Result<ManifoldChart, Failure> {
    let bad = || Failure::config(format!("cannot read chart {s:?}; try veronese:3, circle:1 or mixed:2,4"));
    let (kind, args) = s.split_once(':').ok_or_else(bad)?;
    let nums: Vec<&str> = args.split(',').map(str::trim).collect();
    let int = |v: &str| v.parse::<usize>().map_err(|_| bad());
    let chart = match (kind.trim(), nums.as_slice()) {
        ("veronese", [n]) => ManifoldChart::veronese(int(n)?)?,
        ("circle", [r]) => ManifoldChart::circle(r.parse().map_err(|_| bad())?, 0.1)?,
        ("circle", [r, margin]) => {
            ManifoldChart::circle(r.parse().map_err(|_| bad())?, margin.parse().map_err(|_| bad())?)?
        }
        ("mixed", [d, n]) => ManifoldChart::mixed(int(d)?, int(n)?)?,
        _ => return Err(bad()),
    };
    Ok(chart)
}

/// `lo,hi` per axis, axes separated by `;`.
pub fn parse_box(s: &str) -> Result<Vec<[f64; 2]>, Failure> {
    s.split(';')
        .map(|axis| {
            let v: Vec<f64> = axis
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| Failure::config(format!("cannot read box {s:?}; expected lo,hi[;lo,hi…]")))?;
            match v.as_slice() {
                [a, b] => Ok([*a, *b]),
                _ => Err(Failure::config(format!("box axis {axis:?} needs exactly lo,hi"))),
            }
        })
        .collect()
}

/// Everything a run may read. Unset fields fall back to per-command defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub chart: Option<ChartField>,
    #[serde(rename = "box")]
    pub bbox: Option<Vec<[f64; 2]>>,
    pub eps: Option<EpsSchedule>,
    pub t: Option<Vec<f64>>,
    /// Grid spacing is `εe^{-t/2} / spacing_div`.
    pub spacing_div: Option<f64>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub n: Option<usize>,
    pub d: Option<usize>,
    pub l: Option<usize>,
    pub tau: Option<f64>,
    pub beta: Option<f64>,
    pub c: Option<f64>,
    pub kind: Option<String>,
    pub s: Option<f64>,
    pub alpha: Option<f64>,
    pub x: Option<String>,
    pub q_max: Option<u64>,
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
        let parsed = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|e| Failure::config(format!("{}: {e}", path.display())))
    }

    /// Fields set in `other` win.
    pub fn overlay(mut self, other: ExperimentConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(chart, bbox, eps, t, spacing_div, seed, samples, n, d, l, tau, beta, c, kind, s, alpha, x, q_max, out_dir);
        self
    }

    pub fn chart(&self) -> Result<ManifoldChart, Failure> {
        self.chart
            .as_ref()
            .ok_or_else(|| Failure::config("no chart given (--chart or `chart` in the config)"))?
            .build()
    }

    /// The configured box, or the whole chart domain.
    pub fn bbox(&self, chart: &ManifoldChart) -> Result<AxisBox, Failure> {
        match &self.bbox {
            Some(b) => Ok(AxisBox::new(b.clone())?),
            None => Ok(chart.domain().clone()),
        }
    }

    pub fn eps(&self) -> Result<EpsSchedule, Failure> {
        self.eps.ok_or_else(|| Failure::config("no ε given (--eps, --eps-exp or `eps` in the config)"))
    }

    pub fn times(&self) -> Result<Vec<f64>, Failure> {
        match &self.t {
            Some(t) if !t.is_empty() => Ok(t.clone()),
            _ => Err(Failure::config("no t given (--t or `t` in the config)")),
        }
    }
}

/// `x` as a number, `sqrt(k)` or `liouville`.
pub fn parse_real(s: &str) -> Result<f64, Failure> {
    let s = s.trim();
    if s == "liouville" {
        return Ok(dioph_core::theory::liouville_constant());
    }
    if let Some(inner) = s.strip_prefix("sqrt(").and_then(|r| r.strip_suffix(')')) {
        if let Ok(v) = inner.trim().parse::<f64>() {
            return Ok(v.sqrt());
        }
    }
    s.parse()
        .map_err(|_| Failure::config(format!("cannot read x = {s:?}; expected a number, sqrt(k) or liouville")))
}
