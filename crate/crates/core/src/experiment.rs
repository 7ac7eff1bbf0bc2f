//! Delay scans and the data-analysis formulas: accidental-coincidence
//! reconstruction from lower-order rates, exchange-ratio estimators, and
//! background subtraction.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::circuits::Circuit;
use crate::error::{Error, Result};
use crate::fock::{coincidence_probability, evolve_post_selected};
use crate::source::{pdc_state, Scenario};

/// Pulse repetition rate of the reference setup, Hz.
pub const DEFAULT_R0: f64 = 76e6;

/// Speed of light in μm/fs.
pub const C_UM_PER_FS: f64 = 0.2998;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DelayUnit {
    #[default]
    Fs,
    Um,
}

impl DelayUnit {
    pub fn name(&self) -> &'static str {
        match self {
            DelayUnit::Fs => "fs",
            DelayUnit::Um => "um",
        }
    }
}

impl FromStr for DelayUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fs" => Ok(DelayUnit::Fs),
            "um" => Ok(DelayUnit::Um),
            other => Err(Error::Parse(format!("unknown delay unit '{other}'"))),
        }
    }
}

impl fmt::Display for DelayUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Coincidence rate versus relative H/V delay for one detector pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub delays: Vec<f64>,
    pub rates: Vec<f64>,
    pub label: String,
    pub unit: DelayUnit,
}

impl ScanResult {
    pub fn new(label: impl Into<String>, delays: Vec<f64>, rates: Vec<f64>, unit: DelayUnit) -> Result<Self> {
        if delays.len() != rates.len() {
            return Err(Error::DimensionMismatch { expected: delays.len(), found: rates.len() });
        }
        if let Some(r) = rates.iter().find(|r| !(**r >= 0.0)) {
            return Err(Error::InvalidParameter(format!("negative or undefined rate {r}")));
        }
        Ok(Self { delays, rates, label: label.into(), unit })
    }

    pub fn len(&self) -> usize {
        self.delays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delays.is_empty()
    }

    /// Mean rate at the largest `|delay|` in the scan.
    pub fn baseline(&self) -> Option<f64> {
        let far = self.delays.iter().map(|d| d.abs()).fold(f64::NEG_INFINITY, f64::max);
        let picked: Vec<f64> = self
            .delays
            .iter()
            .zip(&self.rates)
            .filter(|(d, _)| d.abs() == far)
            .map(|(_, r)| *r)
            .collect();
        (!picked.is_empty()).then(|| picked.iter().sum::<f64>() / picked.len() as f64)
    }

    /// Rate at zero delay, if the grid contains it.
    pub fn rate_at_zero(&self) -> Option<f64> {
        self.delays.iter().position(|d| *d == 0.0).map(|i| self.rates[i])
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { rates: self.rates.iter().map(|r| r * factor).collect(), ..self.clone() }
    }

    /// Converts the delay axis between fs and μm of path difference.
    pub fn in_unit(&self, unit: DelayUnit) -> Self {
        let factor = match (self.unit, unit) {
            (DelayUnit::Fs, DelayUnit::Um) => C_UM_PER_FS,
            (DelayUnit::Um, DelayUnit::Fs) => 1.0 / C_UM_PER_FS,
            _ => 1.0,
        };
        Self { delays: self.delays.iter().map(|d| d * factor).collect(), unit, ..self.clone() }
    }

    fn check_grid(&self, other: &ScanResult) -> Result<()> {
        if self.delays != other.delays || self.unit != other.unit {
            return Err(Error::GridMismatch(self.label.clone(), other.label.clone()));
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("# label={} unit={}\n", self.label, self.unit);
        for (d, r) in self.delays.iter().zip(&self.rates) {
            out.push_str(&format!("{d},{r}\n"));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::Parse("empty scan file".into()))?;
        let header = header
            .strip_prefix('#')
            .ok_or_else(|| Error::Parse("line 1: missing '# label=... unit=...' header".into()))?;
        let mut label = None;
        let mut unit = None;
        for field in header.split_whitespace() {
            match field.split_once('=') {
                Some(("label", v)) => label = Some(v.to_string()),
                Some(("unit", v)) => unit = Some(v.parse()?),
                _ => return Err(Error::Parse(format!("line 1: unexpected header field '{field}'"))),
            }
        }
        let label = label.ok_or_else(|| Error::Parse("line 1: header lacks label".into()))?;
        let unit = unit.ok_or_else(|| Error::Parse("line 1: header lacks unit".into()))?;
        let mut delays = Vec::new();
        let mut rates = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))
            };
            let (d, r) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("line {}: expected 'delay,rate'", i + 1)))?;
            delays.push(parse(d)?);
            rates.push(parse(r)?);
        }
        Self::new(label, delays, rates, unit)
    }
}

/// Canonical (sorted) form of a detector pattern.
pub fn canonical_pattern(pattern: &str) -> String {
    let mut chars: Vec<char> = pattern.chars().collect();
    chars.sort_unstable();
    chars.into_iter().collect()
}

/// Coincidence rate of `pattern` versus H/V delay (fs). Each point builds
/// the source at the minimal pair order, propagates it through the circuit
/// and post-selects one photon per detector.
pub fn delay_scan(scenario: &Scenario, circuit: &Circuit, pattern: &str, delays: &[f64]) -> Result<ScanResult> {
    if delays.is_empty() {
        return Err(Error::InvalidParameter("empty delay grid".into()));
    }
    let detectors = circuit.pattern_modes(pattern)?;
    let n = detectors.len();
    if n % 2 != 0 {
        return Err(Error::InvalidPhotonCount(n));
    }
    let order = n / 2;
    if order > scenario.pair_count() {
        return Err(Error::OrderExceedsPairs { order, pairs: scenario.pair_count() });
    }
    let map = circuit.compile()?;
    let rates = delays
        .par_iter()
        .map(|&dt| {
            let src = pdc_state(scenario, order, dt)?.state.with_paths(circuit.n_paths())?;
            let out = evolve_post_selected(&map, &src, &detectors)?;
            coincidence_probability(&out, &detectors)
        })
        .collect::<Result<Vec<f64>>>()?;
    ScanResult::new(pattern, delays.to_vec(), rates, DelayUnit::Fs)
}

/// Four-fold rate from two independent pairs:
/// `[R(AB)R(CD) + R(AC)R(BD) + R(AD)R(BC)] / R0`.
pub fn combine_accidental_four(
    ab: &ScanResult,
    cd: &ScanResult,
    ac: &ScanResult,
    bd: &ScanResult,
    ad: &ScanResult,
    bc: &ScanResult,
    r0: f64,
) -> Result<ScanResult> {
    if !(r0 > 0.0) {
        return Err(Error::InvalidParameter(format!("repetition rate must be positive, got {r0}")));
    }
    for s in [cd, ac, bd, ad, bc] {
        ab.check_grid(s)?;
    }
    let rates = (0..ab.len())
        .map(|i| (ab.rates[i] * cd.rates[i] + ac.rates[i] * bd.rates[i] + ad.rates[i] * bc.rates[i]) / r0)
        .collect();
    let mut label: Vec<char> = ab.label.chars().chain(cd.label.chars()).collect();
    label.sort_unstable();
    label.dedup();
    ScanResult::new(label.into_iter().collect::<String>(), ab.delays.clone(), rates, ab.unit)
}

fn lookup<'a>(scans: &'a BTreeMap<String, ScanResult>, pattern: &str) -> Result<&'a ScanResult> {
    let key = canonical_pattern(pattern);
    scans
        .iter()
        .find(|(k, _)| canonical_pattern(k) == key)
        .map(|(_, v)| v)
        .ok_or(Error::MissingPattern(key))
}

/// Four-fold rate of `quad` rebuilt from two-fold scans over its three
/// pairings.
pub fn combine_four_from_pairs(two_fold: &BTreeMap<String, ScanResult>, quad: &str, r0: f64) -> Result<ScanResult> {
    let q: Vec<char> = canonical_pattern(quad).chars().collect();
    if q.len() != 4 {
        return Err(Error::InvalidPhotonCount(q.len()));
    }
    let p = |i: usize, j: usize| lookup(two_fold, &format!("{}{}", q[i], q[j]));
    combine_accidental_four(p(0, 1)?, p(2, 3)?, p(0, 2)?, p(1, 3)?, p(0, 3)?, p(1, 2)?, r0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SixFoldMode {
    /// Four-fold inputs are directly simulated scans.
    FourPlusTwo,
    /// Four-fold inputs are rebuilt from two-fold scans first.
    TwoByThree,
}

impl SixFoldMode {
    pub fn name(&self) -> &'static str {
        match self {
            SixFoldMode::FourPlusTwo => "four_plus_two",
            SixFoldMode::TwoByThree => "two_by_three",
        }
    }
}

impl FromStr for SixFoldMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "four_plus_two" => Ok(SixFoldMode::FourPlusTwo),
            "two_by_three" => Ok(SixFoldMode::TwoByThree),
            other => Err(Error::Parse(format!("unknown six-fold mode '{other}'"))),
        }
    }
}

/// `R6 = Σ_P R2(P) R4(complement of P) / R0` over the 15 detector pairs `P`.
pub fn combine_accidental_six(
    two_fold: &BTreeMap<String, ScanResult>,
    four_fold: &BTreeMap<String, ScanResult>,
    r0: f64,
    mode: SixFoldMode,
) -> Result<ScanResult> {
    if !(r0 > 0.0) {
        return Err(Error::InvalidParameter(format!("repetition rate must be positive, got {r0}")));
    }
    let mut letters: Vec<char> = two_fold.keys().flat_map(|k| k.chars()).collect();
    letters.sort_unstable();
    letters.dedup();
    if letters.len() != 6 {
        return Err(Error::InvalidParameter(format!(
            "six-fold combination needs two-fold scans over six detectors, found {}",
            letters.len()
        )));
    }
    let mut total: Option<ScanResult> = None;
    for i in 0..6 {
        for j in (i + 1)..6 {
            let pair = format!("{}{}", letters[i], letters[j]);
            let rest: String = letters.iter().filter(|c| **c != letters[i] && **c != letters[j]).collect();
            let r2 = lookup(two_fold, &pair)?;
            let r4 = match mode {
                SixFoldMode::FourPlusTwo => lookup(four_fold, &rest)?.clone(),
                SixFoldMode::TwoByThree => combine_four_from_pairs(two_fold, &rest, r0)?,
            };
            r2.check_grid(&r4)?;
            let term: Vec<f64> = r2.rates.iter().zip(&r4.rates).map(|(a, b)| a * b / r0).collect();
            match total.as_mut() {
                None => total = Some(ScanResult::new(letters.iter().collect::<String>(), r2.delays.clone(), term, r2.unit)?),
                Some(t) => {
                    t.check_grid(r2)?;
                    t.rates.iter_mut().zip(term).for_each(|(acc, x)| *acc += x);
                }
            }
        }
    }
    Ok(total.expect("fifteen pairs were combined"))
}

/// Four-fold visibility with imperfect two-photon visibility `v2` and
/// exchange ratio `ea = E/A`:
/// `[2 v2 (A + 3E) − v2² (A + E)] / [3 (A + E)]`.
pub fn v4_from_ea(v2: f64, ea: f64) -> f64 {
    (2.0 * v2 * (1.0 + 3.0 * ea) - v2 * v2 * (1.0 + ea)) / (3.0 * (1.0 + ea))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EaMethod {
    FromVisibility,
    FromBaselineRatio,
    FromPackets,
}

impl EaMethod {
    pub fn name(&self) -> &'static str {
        match self {
            EaMethod::FromVisibility => "from_visibility",
            EaMethod::FromBaselineRatio => "from_baseline_ratio",
            EaMethod::FromPackets => "from_packets",
        }
    }
}

/// Exchange-ratio estimate. `value` is clamped to [0, 1]; `raw` is not.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EaEstimate {
    pub value: f64,
    pub raw: f64,
    pub method: EaMethod,
    pub in_range: bool,
}

impl EaEstimate {
    pub fn new(raw: f64, method: EaMethod) -> Self {
        let in_range = (0.0..=1.0).contains(&raw);
        Self { value: raw.clamp(0.0, 1.0), raw, method, in_range }
    }
}

/// Inverts [`v4_from_ea`] for `ea`.
pub fn ea_from_v4(v4: f64, v2: f64) -> Result<EaEstimate> {
    if !(v2 > 0.0 && v2 <= 1.0) {
        return Err(Error::InvalidParameter(format!("two-photon visibility {v2} outside (0, 1]")));
    }
    let num = 3.0 * v4 - v2 * (2.0 - v2);
    let den = 6.0 * v2 - v2 * v2 - 3.0 * v4;
    if den.abs() < 1e-15 {
        return Err(Error::ZeroDenominator(format!(
            "v4 = {v4} sits on the asymptote v2(6 - v2)/3 for v2 = {v2}"
        )));
    }
    Ok(EaEstimate::new(num / den, EaMethod::FromVisibility))
}

/// `E/A` from the ratio of the direct four-fold baseline to the baseline
/// rebuilt from two-fold rates, which equals `1 + E/A`.
pub fn ea_from_baseline_ratio(direct_baseline: f64, combined_baseline: f64) -> Result<EaEstimate> {
    if !(combined_baseline > 0.0) {
        return Err(Error::ZeroDenominator(format!("combined baseline {combined_baseline}")));
    }
    Ok(EaEstimate::new(direct_baseline / combined_baseline - 1.0, EaMethod::FromBaselineRatio))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Subtracted {
    pub scan: ScanResult,
    /// Indices of points that went negative and were clipped to zero.
    pub clipped: Vec<usize>,
}

pub fn subtract_background(scan: &ScanResult, background: f64) -> Result<Subtracted> {
    if !(background >= 0.0) {
        return Err(Error::InvalidParameter(format!("background must be >= 0, got {background}")));
    }
    let mut clipped = Vec::new();
    let rates = scan
        .rates
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let x = r - background;
            if x < 0.0 {
                clipped.push(i);
            }
            x.max(0.0)
        })
        .collect();
    Ok(Subtracted { scan: ScanResult { rates, ..scan.clone() }, clipped })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(label: &str, r: f64) -> ScanResult {
        ScanResult::new(label, vec![-1.0, 0.0, 1.0], vec![r; 3], DelayUnit::Fs).unwrap()
    }

    #[test]
    fn four_fold_constant_inputs() {
        let r = 3.0;
        let s = |l| constant(l, r);
        let out = combine_accidental_four(&s("AB"), &s("CD"), &s("AC"), &s("BD"), &s("AD"), &s("BC"), 2.0).unwrap();
        assert_eq!(out.label, "ABCD");
        assert!(out.rates.iter().all(|x| (x - 3.0 * r * r / 2.0).abs() < 1e-12));
    }

    #[test]
    fn four_fold_zero_term_vanishes() {
        let s = |l| constant(l, 2.0);
        let out = combine_accidental_four(
            &constant("AB", 0.0), &s("CD"), &s("AC"), &s("BD"), &s("AD"), &s("BC"), 1.0,
        )
        .unwrap();
        assert!(out.rates.iter().all(|x| (x - 8.0).abs() < 1e-12));
    }

    #[test]
    fn grid_mismatch_rejected() {
        let s = |l| constant(l, 1.0);
        let other = ScanResult::new("CD", vec![-2.0, 0.0, 2.0], vec![1.0; 3], DelayUnit::Fs).unwrap();
        assert!(matches!(
            combine_accidental_four(&s("AB"), &other, &s("AC"), &s("BD"), &s("AD"), &s("BC"), 1.0),
            Err(Error::GridMismatch(..))
        ));
    }

    fn all_pairs(letters: &str) -> Vec<String> {
        let l: Vec<char> = letters.chars().collect();
        let mut out = Vec::new();
        for i in 0..l.len() {
            for j in (i + 1)..l.len() {
                out.push(format!("{}{}", l[i], l[j]));
            }
        }
        out
    }

    #[test]
    fn six_fold_constant_inputs() {
        let (r, q, r0) = (2.0, 5.0, 4.0);
        let two: BTreeMap<_, _> = all_pairs("ABCDEF").into_iter().map(|p| (p.clone(), constant(&p, r))).collect();
        let mut four = BTreeMap::new();
        for p in all_pairs("ABCDEF") {
            let rest: String = "ABCDEF".chars().filter(|c| !p.contains(*c)).collect();
            four.insert(rest.clone(), constant(&rest, q));
        }
        let out = combine_accidental_six(&two, &four, r0, SixFoldMode::FourPlusTwo).unwrap();
        assert_eq!(out.label, "ABCDEF");
        assert!(out.rates.iter().all(|x| (x - 15.0 * r * q / r0).abs() < 1e-12));
        let out = combine_accidental_six(&two, &BTreeMap::new(), r0, SixFoldMode::TwoByThree).unwrap();
        let r4 = 3.0 * r * r / r0;
        assert!(out.rates.iter().all(|x| (x - 15.0 * r * r4 / r0).abs() < 1e-12));
    }

    #[test]
    fn six_fold_missing_pattern() {
        let mut two: BTreeMap<_, _> = all_pairs("ABCDEF").into_iter().map(|p| (p.clone(), constant(&p, 1.0))).collect();
        let out = combine_accidental_six(&two, &BTreeMap::new(), 1.0, SixFoldMode::FourPlusTwo);
        assert!(matches!(out, Err(Error::MissingPattern(_))));
        two.remove("CE");
        let out = combine_accidental_six(&two, &BTreeMap::new(), 1.0, SixFoldMode::TwoByThree);
        assert_eq!(out, Err(Error::MissingPattern("CE".into())));
    }

    #[test]
    fn v4_formula_values() {
        assert_eq!(v4_from_ea(1.0, 1.0), 1.0);
        assert!((v4_from_ea(1.0, 0.0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((v4_from_ea(0.89, 0.9265) - 0.900).abs() < 5e-5);
    }

    #[test]
    fn ea_inversion_values() {
        assert!(ea_from_v4(1.0 / 3.0, 1.0).unwrap().raw.abs() < 1e-15);
        assert!((ea_from_v4(1.0, 1.0).unwrap().raw - 1.0).abs() < 1e-15);
        let e = ea_from_v4(0.90, 0.89).unwrap();
        assert!((e.raw - 0.9265).abs() < 5e-5, "{}", e.raw);
        assert!((v4_from_ea(0.89, e.raw) - 0.90).abs() < 1e-12);
        assert!(ea_from_v4(0.5, 0.0).is_err());
        assert!(ea_from_v4(0.5, 1.2).is_err());
        // v4 on the asymptote v2(6 - v2)/3
        assert!(matches!(ea_from_v4(5.0 / 3.0, 1.0), Err(Error::ZeroDenominator(_))));
    }

    #[test]
    fn ea_out_of_range_flagged() {
        let e = ea_from_v4(0.2, 1.0).unwrap();
        assert!(e.raw < 0.0);
        assert!(!e.in_range);
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn baseline_ratio_estimator() {
        assert_eq!(ea_from_baseline_ratio(2.0, 1.0).unwrap().value, 1.0);
        assert_eq!(ea_from_baseline_ratio(1.0, 1.0).unwrap().value, 0.0);
        assert!((ea_from_baseline_ratio(1.92, 1.0).unwrap().value - 0.92).abs() < 1e-12);
        assert!(ea_from_baseline_ratio(1.0, 0.0).is_err());
        assert_eq!(ea_from_baseline_ratio(1.0, 1.0).unwrap().method, EaMethod::FromBaselineRatio);
    }

    #[test]
    fn background_subtraction() {
        let s = ScanResult::new("AB", vec![-1.0, 0.0, 1.0], vec![5.0, 2.0, 5.0], DelayUnit::Fs).unwrap();
        assert_eq!(subtract_background(&s, 0.0).unwrap().scan, s);
        let c = constant("AB", 4.0);
        let out = subtract_background(&c, 4.0).unwrap();
        assert!(out.scan.rates.iter().all(|r| *r == 0.0));
        assert!(out.clipped.is_empty());
        let shifted = ScanResult { rates: s.rates.iter().map(|r| r + 0.37).collect(), ..s.clone() };
        let back = subtract_background(&shifted, 0.37).unwrap().scan;
        for (a, b) in back.rates.iter().zip(&s.rates) {
            assert!((a - b).abs() < 1e-12);
        }
        let out = subtract_background(&s, 3.0).unwrap();
        assert_eq!(out.clipped, vec![1]);
        assert_eq!(out.scan.rates, vec![2.0, 0.0, 2.0]);
        assert!(subtract_background(&s, -1.0).is_err());
    }

    #[test]
    fn csv_round_trip_and_units() {
        let s = ScanResult::new("ABCD", vec![-200.0, 0.0, 200.0], vec![0.1, 1.0 / 3.0, 0.25], DelayUnit::Fs).unwrap();
        let text = s.to_csv();
        assert!(text.starts_with("# label=ABCD unit=fs\n"));
        assert_eq!(ScanResult::from_csv(&text).unwrap(), s);
        let um = s.in_unit(DelayUnit::Um);
        assert!((um.delays[2] - 200.0 * C_UM_PER_FS).abs() < 1e-12);
        assert!(um.to_csv().starts_with("# label=ABCD unit=um\n"));
        assert!(ScanResult::from_csv("0,1\n").is_err());
        assert!(ScanResult::from_csv("# label=AB unit=fs\n0;1\n").is_err());
    }

    #[test]
    fn scan_validation() {
        assert!(ScanResult::new("AB", vec![0.0], vec![], DelayUnit::Fs).is_err());
        assert!(ScanResult::new("AB", vec![0.0], vec![-1.0], DelayUnit::Fs).is_err());
        let s = ScanResult::new("AB", vec![-3.0, 0.0, 3.0], vec![1.0, 0.0, 3.0], DelayUnit::Fs).unwrap();
        assert_eq!(s.baseline(), Some(2.0));
        assert_eq!(s.rate_at_zero(), Some(0.0));
    }

    proptest::proptest! {
        #[test]
        fn ea_round_trip(v2 in 0.01..=1.0f64, ea in 0.0..=1.0f64) {
            let back = ea_from_v4(v4_from_ea(v2, ea), v2).unwrap();
            proptest::prop_assert!((back.raw - ea).abs() < 1e-12);
        }

        #[test]
        fn combined_rates_non_negative(rates in proptest::collection::vec(0.0..10.0f64, 18)) {
            let names = ["AB", "CD", "AC", "BD", "AD", "BC"];
            let scans: Vec<_> = names.iter().enumerate()
                .map(|(k, n)| ScanResult::new(*n, vec![-1.0, 0.0, 1.0], rates[3 * k..3 * k + 3].to_vec(), DelayUnit::Fs).unwrap())
                .collect();
            let out = combine_accidental_four(&scans[0], &scans[1], &scans[2], &scans[3], &scans[4], &scans[5], 1.0).unwrap();
            proptest::prop_assert!(out.rates.iter().all(|r| *r >= 0.0));
        }
    }
}
