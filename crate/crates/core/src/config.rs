//! Run configuration: a flat `key = value` format grouped under
//! `[section]` headers, with `#` comments.
//!
//! ```text
//! [experiment]
//! circuit = noon4
//! scenarios = four_x_one, two_x_two
//! patterns = ABCD, all-two-fold
//!
//! [source]
//! sigma = 140
//!
//! [scan]
//! min = -2000
//! max = 2000
//! step = 200
//!
//! [analysis]
//! combine_eq4 = true
//! ```

use std::path::PathBuf;

use crate::circuits::{build_preset, Circuit, Preset};
use crate::error::{Error, Result};
use crate::experiment::{DelayUnit, SixFoldMode, DEFAULT_R0};
use crate::source::{ScenarioKind, DEFAULT_ETA, WELL_SEPARATED};

pub const DEFAULT_SIGMA: f64 = 140.0;

#[derive(Debug, Clone, PartialEq)]
pub enum PatternSpec {
    Explicit(String),
    AllTwoFold,
    AllFourFold,
    /// Every detector of the circuit at once.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayGrid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl DelayGrid {
    /// Grid points `min + k·step`; values within `1e-9·step` of zero snap
    /// to exactly zero.
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.max - self.min) / self.step + 1e-9).floor() as usize;
        (0..=n)
            .map(|k| {
                let d = self.min + k as f64 * self.step;
                if d.abs() < 1e-9 * self.step {
                    0.0
                } else {
                    d
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub circuit: Preset,
    pub scenarios: Vec<ScenarioKind>,
    pub pair_times: Option<Vec<f64>>,
    pub sigma: f64,
    pub separation: f64,
    pub eta: f64,
    pub r0: f64,
    pub grid: DelayGrid,
    pub unit: DelayUnit,
    pub patterns: Vec<PatternSpec>,
    pub combine_eq4: bool,
    pub combine_eq6: Vec<SixFoldMode>,
    /// Pick the six-fold combination from each scenario's pair layout.
    pub eq6_auto: bool,
    pub background: f64,
    pub fit: bool,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn circuit(&self) -> Circuit {
        build_preset(self.circuit)
    }

    /// Concrete detector patterns, in configuration order without repeats.
    pub fn expand_patterns(&self) -> Result<Vec<String>> {
        let circuit = self.circuit();
        let labels: Vec<char> = circuit.labels().chars().collect();
        let mut out: Vec<String> = Vec::new();
        let mut push = |p: String| {
            if !out.contains(&p) {
                out.push(p);
            }
        };
        for spec in &self.patterns {
            match spec {
                PatternSpec::Explicit(p) => {
                    circuit.pattern_modes(p)?;
                    push(p.clone());
                }
                PatternSpec::AllTwoFold => combinations(&labels, 2).into_iter().for_each(&mut push),
                PatternSpec::AllFourFold => combinations(&labels, 4).into_iter().for_each(&mut push),
                PatternSpec::Full => push(labels.iter().collect()),
            }
        }
        Ok(out)
    }
}

/// All `k`-subsets of `labels` as strings, in lexicographic order.
pub fn combinations(labels: &[char], k: usize) -> Vec<String> {
    fn rec(labels: &[char], k: usize, start: usize, cur: &mut String, out: &mut Vec<String>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..labels.len() {
            cur.push(labels[i]);
            rec(labels, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(labels, k, 0, &mut String::new(), &mut out);
    out
}

fn config_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse(format!("config line {line}: {}", msg.into()))
}

fn parse_f64(line: usize, key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| config_err(line, format!("key '{key}': expected a number, got '{value}'")))
}

fn parse_bool(line: usize, key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "on" => Ok(true),
        "false" | "no" | "off" => Ok(false),
        _ => Err(config_err(line, format!("key '{key}': expected true/false, got '{value}'"))),
    }
}

fn list(value: &str) -> Vec<&str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut circuit: Option<(usize, Preset)> = None;
    let mut scenarios = None;
    let mut pair_times = None;
    let mut sigma = DEFAULT_SIGMA;
    let mut separation = None;
    let mut eta = DEFAULT_ETA;
    let mut r0 = DEFAULT_R0;
    let (mut min, mut max, mut step) = (-2000.0, 2000.0, 200.0);
    let mut unit = DelayUnit::Fs;
    let mut patterns = None;
    let mut combine_eq4 = false;
    let mut combine_eq6 = Vec::new();
    let mut eq6_auto = false;
    let mut background = 0.0;
    let mut fit = true;
    let mut output = None;
    let mut pattern_line = 0;

    let mut section = String::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| config_err(line, format!("malformed section header '{content}'")))?;
            let name = name.trim();
            if !["experiment", "source", "scan", "analysis"].contains(&name) {
                return Err(config_err(line, format!("unknown section '[{name}]'")));
            }
            section = name.to_string();
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| config_err(line, format!("expected 'key = value', got '{content}'")))?;
        if section.is_empty() {
            return Err(config_err(line, format!("key '{key}' appears before any section header")));
        }
        match (section.as_str(), key) {
            ("experiment", "circuit") => {
                let p = value
                    .parse::<Preset>()
                    .map_err(|e| config_err(line, format!("key 'circuit': {e}")))?;
                circuit = Some((line, p));
            }
            ("experiment", "scenarios") => {
                let kinds = list(value)
                    .into_iter()
                    .map(|s| s.parse::<ScenarioKind>())
                    .collect::<Result<Vec<_>>>()
                    .map_err(|e| config_err(line, format!("key 'scenarios': {e}")))?;
                if kinds.is_empty() {
                    return Err(config_err(line, "key 'scenarios': empty list"));
                }
                scenarios = Some(kinds);
            }
            ("experiment", "patterns") => {
                let specs: Vec<PatternSpec> = list(value)
                    .into_iter()
                    .map(|p| match p {
                        "all-two-fold" => PatternSpec::AllTwoFold,
                        "all-four-fold" => PatternSpec::AllFourFold,
                        "six-fold" | "four-fold-full" | "full" => PatternSpec::Full,
                        other => PatternSpec::Explicit(other.to_string()),
                    })
                    .collect();
                if specs.is_empty() {
                    return Err(config_err(line, "key 'patterns': empty list"));
                }
                patterns = Some(specs);
                pattern_line = line;
            }
            ("experiment", "output") => output = Some(PathBuf::from(value)),
            ("source", "sigma") => sigma = parse_f64(line, key, value)?,
            ("source", "separation") => separation = Some(parse_f64(line, key, value)?),
            ("source", "eta") => eta = parse_f64(line, key, value)?,
            ("source", "r0") => r0 = parse_f64(line, key, value)?,
            ("source", "pair_times") => {
                let times = list(value)
                    .into_iter()
                    .map(|v| parse_f64(line, key, v))
                    .collect::<Result<Vec<_>>>()?;
                pair_times = Some(times);
            }
            ("scan", "min") => min = parse_f64(line, key, value)?,
            ("scan", "max") => max = parse_f64(line, key, value)?,
            ("scan", "step") => step = parse_f64(line, key, value)?,
            ("scan", "unit") => {
                unit = value.parse().map_err(|e| config_err(line, format!("key 'unit': {e}")))?
            }
            ("analysis", "combine_eq4") => combine_eq4 = parse_bool(line, key, value)?,
            ("analysis", "combine_eq6") => {
                for v in list(value) {
                    match v {
                        "none" => {}
                        "auto" => eq6_auto = true,
                        other => combine_eq6.push(
                            other
                                .parse::<SixFoldMode>()
                                .map_err(|e| config_err(line, format!("key 'combine_eq6': {e}")))?,
                        ),
                    }
                }
            }
            ("analysis", "background") => background = parse_f64(line, key, value)?,
            ("analysis", "fit") => fit = parse_bool(line, key, value)?,
            (s, k) => return Err(config_err(line, format!("unknown key '{k}' in section [{s}]"))),
        }
    }

    let (_, circuit) = circuit.ok_or_else(|| Error::Parse("config: missing required key 'circuit' in [experiment]".into()))?;
    let scenarios = scenarios.unwrap_or_else(|| vec![ScenarioKind::FourXOne]);
    if scenarios.contains(&ScenarioKind::Custom) && pair_times.is_none() {
        return Err(Error::Parse("config: scenario 'custom' needs 'pair_times' in [source]".into()));
    }
    if !(sigma > 0.0) {
        return Err(Error::Parse(format!("config: key 'sigma' must be positive, got {sigma}")));
    }
    if !(r0 > 0.0) {
        return Err(Error::Parse(format!("config: key 'r0' must be positive, got {r0}")));
    }
    if !(background >= 0.0) {
        return Err(Error::Parse(format!("config: key 'background' must be >= 0, got {background}")));
    }
    if !(step > 0.0) || max < min {
        return Err(Error::Parse(format!("config: empty delay grid (min {min}, max {max}, step {step})")));
    }
    // separated pairs must stay apart even at the largest delay
    let separation = separation.unwrap_or(WELL_SEPARATED * sigma + 2.0 * min.abs().max(max.abs()));
    if separation < 0.0 {
        return Err(Error::Parse(format!("config: key 'separation' must be >= 0, got {separation}")));
    }
    let cfg = RunConfig {
        circuit,
        scenarios,
        pair_times,
        sigma,
        separation,
        eta,
        r0,
        grid: DelayGrid { min, max, step },
        unit,
        patterns: patterns.unwrap_or_else(|| vec![PatternSpec::Full]),
        combine_eq4,
        combine_eq6,
        eq6_auto,
        background,
        fit,
        output,
    };
    cfg.expand_patterns()
        .map_err(|e| config_err(pattern_line, format!("key 'patterns': {e}")))?;
    Ok(cfg)
}
