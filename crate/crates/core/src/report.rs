//! Batch runs: scans every configured scenario and pattern, applies the
//! accidental-coincidence combinations, and writes CSV scans plus a
//! `report.csv` table and a `summary.txt` against the ideal values.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::circuits::{Circuit, Preset};
use crate::config::{combinations, RunConfig};
use crate::error::{Error, Result};
use crate::experiment::{
    combine_accidental_six, combine_four_from_pairs, delay_scan, ea_from_baseline_ratio, ea_from_v4,
    subtract_background, EaEstimate, ScanResult, SixFoldMode,
};
use crate::fit::{fit_gaussian_dip, visibility_model_free, FitResult};
use crate::source::{scenario_build, Scenario, ScenarioKind};

/// Tolerance for the summary's PASS/FAIL column.
pub const SUMMARY_TOL: f64 = 1e-4;

pub const REPORT_HEADER: &str = "scenario,pattern,method,visibility,fit_visibility,baseline,width,center,ea_estimates";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    Direct,
    Eq4,
    Eq6FourPlusTwo,
    Eq6TwoByThree,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::Eq4 => "eq4",
            Method::Eq6FourPlusTwo => "eq6-4+2",
            Method::Eq6TwoByThree => "eq6-2x3",
        }
    }

    fn from_mode(mode: SixFoldMode) -> Self {
        match mode {
            SixFoldMode::FourPlusTwo => Method::Eq6FourPlusTwo,
            SixFoldMode::TwoByThree => Method::Eq6TwoByThree,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub scenario: String,
    pub pattern: String,
    pub method: Method,
    /// Model-free visibility.
    pub visibility: f64,
    pub fit: Option<FitResult>,
    pub baseline: f64,
    pub ea: Vec<EaEstimate>,
    pub ideal: Option<f64>,
    pub file: PathBuf,
}

impl ReportRow {
    pub fn to_csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let ea = self
            .ea
            .iter()
            .map(|e| format!("{}={}", e.method.name(), e.value))
            .collect::<Vec<_>>()
            .join(";");
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.scenario,
            self.pattern,
            self.method.name(),
            self.visibility,
            opt(self.fit.map(|f| f.visibility)),
            self.baseline,
            opt(self.fit.map(|f| f.width)),
            opt(self.fit.map(|f| f.center)),
            ea
        )
    }

    pub fn passes(&self) -> Option<bool> {
        self.ideal.map(|v| (self.visibility - v).abs() <= SUMMARY_TOL)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub rows: Vec<ReportRow>,
    pub notes: Vec<String>,
}

impl RunSummary {
    pub fn report_csv(&self) -> String {
        let mut s = String::from(REPORT_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.to_csv_row());
            s.push('\n');
        }
        s
    }

    pub fn summary_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<22} {:<8} {:<8} {:>12} {:>12} {:>10}  status",
            "scenario", "pattern", "method", "visibility", "ideal", "delta"
        );
        for r in &self.rows {
            let (ideal, delta, status) = match r.ideal {
                Some(v) => (
                    format!("{v:.6}"),
                    format!("{:.2e}", (r.visibility - v).abs()),
                    if r.passes() == Some(true) { "PASS" } else { "FAIL" },
                ),
                None => ("-".into(), "-".into(), "n/a"),
            };
            let _ = writeln!(
                s,
                "{:<22} {:<8} {:<8} {:>12.6} {:>12} {:>10}  {}",
                r.scenario,
                r.pattern,
                r.method.name(),
                r.visibility,
                ideal,
                delta,
                status
            );
        }
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        s
    }

    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.passes() != Some(false))
    }
}

#[derive(Debug)]
pub enum RunError {
    Io(PathBuf, std::io::Error),
    Sim(Error),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Io(p, e) => write!(f, "{}: {e}", p.display()),
            RunError::Sim(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Sim(e)
    }
}

fn first_two_coincident(scenario: &Scenario) -> bool {
    let t = scenario.pair_times();
    t.len() >= 2 && (t[1] - t[0]).abs() < 1e-9
}

fn two_fold_ideal(circuit: Preset, pattern: &str) -> Option<f64> {
    match circuit {
        Preset::Hom => Some(1.0),
        Preset::Noon4 => Some(if ["AB", "CD"].contains(&pattern) { 1.0 } else { 0.0 }),
        Preset::Noon6 => {
            if ["AB", "CD", "EF"].contains(&pattern) {
                Some(1.0)
            } else if ["AC", "AE", "BD", "BF", "CE", "DF"].contains(&pattern) {
                Some(0.5)
            } else {
                Some(-0.5)
            }
        }
    }
}

fn four_fold_ideal_coincident(circuit: Preset, pattern: &str) -> Option<f64> {
    match circuit {
        Preset::Hom => None,
        Preset::Noon4 => Some(1.0),
        Preset::Noon6 => {
            if ["ABCE", "ABDF", "BCDF", "ACDE", "BDEF", "ACEF"].contains(&pattern) {
                Some(1.0)
            } else if ["ABCF", "ABDE", "BCDE", "ACDF", "BCEF", "ADEF"].contains(&pattern) {
                Some(1.0 / 3.0)
            } else {
                Some(5.0 / 6.0)
            }
        }
    }
}

/// Ideal visibility for identical, transform-limited packets, where known.
pub fn ideal_visibility(circuit: Preset, kind: ScenarioKind, method: Method, pattern: &str) -> Option<f64> {
    use ScenarioKind::*;
    let coincident_first_two = matches!(kind, FourXOne | SixXOne | FourXOnePlusTwo);
    match (method, pattern.len()) {
        (_, _) if kind == Custom => None,
        (Method::Direct, 2) => two_fold_ideal(circuit, pattern),
        (Method::Direct, 4) if coincident_first_two => four_fold_ideal_coincident(circuit, pattern),
        (Method::Direct, 4) if circuit == Preset::Noon4 => Some(1.0 / 3.0),
        (Method::Eq4, 4) if circuit == Preset::Noon4 => Some(1.0 / 3.0),
        (Method::Direct, 6) => match kind {
            SixXOne => Some(1.0),
            FourXOnePlusTwo => Some(3.0 / 5.0),
            TwoXThree => Some(2.0 / 5.0),
            _ => None,
        },
        (Method::Eq6FourPlusTwo, 6) if coincident_first_two => Some(3.0 / 5.0),
        (Method::Eq6TwoByThree, 6) => Some(2.0 / 5.0),
        _ => None,
    }
}

fn build_scenario(cfg: &RunConfig, kind: ScenarioKind) -> Result<Scenario> {
    match kind {
        ScenarioKind::Custom => {
            let times = cfg.pair_times.clone().ok_or_else(|| Error::InvalidParameter("custom scenario needs pair_times".into()))?;
            Scenario::custom(times, cfg.sigma, cfg.eta)
        }
        k => scenario_build(k, cfg.sigma, cfg.separation)?.with_eta(cfg.eta),
    }
}

/// Scans for one scenario, cached by pattern. Rates are in counts per
/// second (per-pulse probability times the repetition rate).
struct ScanCache<'a> {
    scenario: &'a Scenario,
    circuit: &'a Circuit,
    delays: Vec<f64>,
    r0: f64,
    scans: BTreeMap<String, ScanResult>,
}

impl ScanCache<'_> {
    fn get(&mut self, pattern: &str) -> Result<ScanResult> {
        if let Some(s) = self.scans.get(pattern) {
            return Ok(s.clone());
        }
        let scan = delay_scan(self.scenario, self.circuit, pattern, &self.delays)?.scaled(self.r0);
        self.scans.insert(pattern.to_string(), scan.clone());
        Ok(scan)
    }

    fn all(&mut self, patterns: &[String]) -> Result<BTreeMap<String, ScanResult>> {
        patterns.iter().map(|p| Ok((p.clone(), self.get(p)?))).collect()
    }
}

fn write_file(path: &Path, text: &str) -> std::result::Result<(), RunError> {
    fs::write(path, text).map_err(|e| RunError::Io(path.to_path_buf(), e))
}

/// Runs every scan the configuration asks for and writes the results into
/// `out_dir`.
pub fn run(cfg: &RunConfig, out_dir: &Path) -> std::result::Result<RunSummary, RunError> {
    let circuit = cfg.circuit();
    let patterns = cfg.expand_patterns()?;
    let labels: Vec<char> = circuit.labels().chars().collect();
    let delays = cfg.grid.points();
    fs::create_dir_all(out_dir).map_err(|e| RunError::Io(out_dir.to_path_buf(), e))?;

    let mut rows = Vec::new();
    let mut notes = Vec::new();
    for &kind in &cfg.scenarios {
        let scenario = build_scenario(cfg, kind)?;
        let mut cache = ScanCache { scenario: &scenario, circuit: &circuit, delays: delays.clone(), r0: cfg.r0, scans: BTreeMap::new() };
        let emit = |method: Method, pattern: &str, scan: ScanResult, ea: Vec<EaEstimate>| -> std::result::Result<ReportRow, RunError> {
            let scan = ScanResult { label: pattern.to_string(), ..scan }.in_unit(cfg.unit);
            let file = out_dir.join(format!("{}_{}_{}.csv", kind.name(), method.name(), pattern));
            write_file(&file, &scan.to_csv())?;
            let fit = if cfg.fit { fit_gaussian_dip(&scan, None).ok() } else { None };
            Ok(ReportRow {
                scenario: kind.name().to_string(),
                pattern: pattern.to_string(),
                method,
                visibility: visibility_model_free(&scan)?,
                fit,
                baseline: scan.baseline().unwrap_or(0.0),
                ea,
                ideal: ideal_visibility(cfg.circuit, kind, method, pattern),
                file,
            })
        };

        for pattern in &patterns {
            let order = pattern.len() / 2;
            if order > scenario.pair_count() {
                notes.push(format!("{}: skipped {pattern}, needs {order} pairs", kind.name()));
                continue;
            }
            let mut direct = cache.get(pattern)?;
            if cfg.background > 0.0 {
                let sub = subtract_background(&direct, cfg.background)?;
                if !sub.clipped.is_empty() {
                    notes.push(format!("{}: {pattern} clipped {} negative points", kind.name(), sub.clipped.len()));
                }
                direct = sub.scan;
            }

            let mut eq4_row = None;
            let mut ea = Vec::new();
            if cfg.combine_eq4 && pattern.len() == 4 {
                let pairs = cache.all(&combinations(&pattern.chars().collect::<Vec<_>>(), 2))?;
                let combined = combine_four_from_pairs(&pairs, pattern, cfg.r0)?;
                let v4 = visibility_model_free(&direct)?;
                let v2 = pairs.values().map(visibility_model_free).collect::<Result<Vec<_>>>()?.into_iter().fold(f64::MIN, f64::max);
                if let Ok(e) = ea_from_v4(v4, v2) {
                    ea.push(e);
                }
                if let (Some(d), Some(c)) = (direct.baseline(), combined.baseline()) {
                    if let Ok(e) = ea_from_baseline_ratio(d, c) {
                        ea.push(e);
                    }
                }
                eq4_row = Some(combined);
            }
            rows.push(emit(Method::Direct, pattern, direct, ea)?);
            if let Some(c) = eq4_row {
                rows.push(emit(Method::Eq4, pattern, c, Vec::new())?);
            }
        }

        let mut modes = cfg.combine_eq6.clone();
        if cfg.eq6_auto && scenario.pair_count() >= 3 {
            modes.push(if first_two_coincident(&scenario) { SixFoldMode::FourPlusTwo } else { SixFoldMode::TwoByThree });
        }
        modes.dedup();
        if !modes.is_empty() && labels.len() != 6 {
            notes.push(format!("{}: six-fold combination needs six detectors", kind.name()));
            modes.clear();
        }
        for mode in modes {
            if mode == SixFoldMode::FourPlusTwo && scenario.pair_count() < 2 {
                notes.push(format!("{}: {} needs two pairs", kind.name(), mode.name()));
                continue;
            }
            let two = cache.all(&combinations(&labels, 2))?;
            let four = match mode {
                SixFoldMode::FourPlusTwo => cache.all(&combinations(&labels, 4))?,
                SixFoldMode::TwoByThree => BTreeMap::new(),
            };
            let six = combine_accidental_six(&two, &four, cfg.r0, mode)?;
            let full: String = labels.iter().collect();
            rows.push(emit(Method::from_mode(mode), &full, six, Vec::new())?);
        }
    }

    let summary = RunSummary { rows, notes };
    write_file(&out_dir.join("report.csv"), &summary.report_csv())?;
    write_file(&out_dir.join("summary.txt"), &summary.summary_text())?;
    Ok(summary)
}

/// Detector patterns sharing one ideal visibility.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternClass {
    pub photons: usize,
    pub visibility: f64,
    pub patterns: Vec<String>,
}

/// Groups every even-size detector pattern of `circuit` by its visibility
/// for coincident, identical pairs.
pub fn list_patterns(circuit: &Circuit, sigma: f64) -> Result<Vec<PatternClass>> {
    let labels: Vec<char> = circuit.labels().chars().collect();
    let far = 40.0 * sigma;
    let mut classes: Vec<PatternClass> = Vec::new();
    for k in (2..=labels.len()).step_by(2) {
        let scenario = Scenario::custom(vec![0.0; k / 2], sigma, 1.0)?;
        let start = classes.len();
        for pattern in combinations(&labels, k) {
            let scan = delay_scan(&scenario, circuit, &pattern, &[-far, 0.0, far])?;
            let v = visibility_model_free(&scan)?;
            match classes[start..].iter_mut().find(|c| (c.visibility - v).abs() < 1e-9) {
                Some(c) => c.patterns.push(pattern),
                None => classes.push(PatternClass { photons: k, visibility: v, patterns: vec![pattern] }),
            }
        }
        classes[start..].sort_by(|a, b| b.visibility.total_cmp(&a.visibility));
    }
    Ok(classes)
}
