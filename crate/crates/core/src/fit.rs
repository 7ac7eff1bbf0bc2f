//! Gaussian dip/bump fits and model-free visibility.
//!
//! Model: `R(τ) = B · (1 − V · exp(−(τ − μ)² / (2 w²)))`. Positive `V` is a
//! dip, negative `V` a bump.

use crate::error::{Error, Result};
use crate::experiment::ScanResult;
use crate::simplex::{minimize, SimplexOptions};

/// Fits need at least this many points.
pub const MIN_POINTS: usize = 8;

/// `|V|` beyond this is flagged as implausible.
pub const VISIBILITY_SOFT_BOUND: f64 = 1.05;

/// Outer fraction of the `|delay|` range treated as baseline region.
const BASELINE_REGION: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub baseline: f64,
    pub visibility: f64,
    pub width: f64,
    pub center: f64,
    pub rms: f64,
    pub converged: bool,
    /// Flat data: no feature to fit.
    pub degenerate: bool,
    pub iterations: usize,
}

impl FitResult {
    pub fn out_of_bounds(&self) -> bool {
        self.visibility.abs() > VISIBILITY_SOFT_BOUND
    }

    pub fn model(&self, delay: f64) -> f64 {
        let x = (delay - self.center) / self.width;
        self.baseline * (1.0 - self.visibility * (-0.5 * x * x).exp())
    }

    pub const CSV_HEADER: &'static str = "baseline,visibility,width,center,rms,converged,degenerate";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.baseline, self.visibility, self.width, self.center, self.rms, self.converged, self.degenerate
        )
    }
}

struct Init {
    baseline: f64,
    visibility: f64,
    width: f64,
    center: f64,
}

fn sorted_points(scan: &ScanResult) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = scan.delays.iter().copied().zip(scan.rates.iter().copied()).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts
}

fn initial_guess(pts: &[(f64, f64)]) -> Init {
    let n = pts.len();
    let q = (n / 4).max(1);
    let outer: Vec<f64> = pts[..q].iter().chain(&pts[n - q..]).map(|p| p.1).collect();
    let baseline = outer.iter().sum::<f64>() / outer.len() as f64;

    let (ext, _) = pts
        .iter()
        .enumerate()
        .max_by(|a, b| (a.1 .1 - baseline).abs().total_cmp(&(b.1 .1 - baseline).abs()))
        .expect("non-empty scan");
    let depth = baseline - pts[ext].1;
    let visibility = if baseline != 0.0 { depth / baseline } else { 0.0 };

    // contiguous run around the extremum deeper than half the feature
    let half = depth.abs() / 2.0;
    let deep = |i: usize| (baseline - pts[i].1).abs() >= half && (baseline - pts[i].1).signum() == depth.signum();
    let (mut lo, mut hi) = (ext, ext);
    while lo > 0 && deep(lo - 1) {
        lo -= 1;
    }
    while hi + 1 < n && deep(hi + 1) {
        hi += 1;
    }
    let spacing = (pts[n - 1].0 - pts[0].0) / (n - 1) as f64;
    let fwhm = (pts[hi].0 - pts[lo].0 + spacing).max(spacing);
    let width = fwhm / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt());
    Init { baseline, visibility, width, center: pts[ext].0 }
}

/// Least-squares Gaussian fit by simplex descent; restarts once from a
/// perturbed start when the first run does not converge.
pub fn fit_gaussian_dip(scan: &ScanResult, init: Option<FitResult>) -> Result<FitResult> {
    if scan.len() < MIN_POINTS {
        return Err(Error::InvalidParameter(format!(
            "fit needs at least {MIN_POINTS} points, got {}",
            scan.len()
        )));
    }
    let pts = sorted_points(scan);
    let guess = match init {
        Some(f) => Init { baseline: f.baseline, visibility: f.visibility, width: f.width, center: f.center },
        None => initial_guess(&pts),
    };
    let scale = if guess.baseline.abs() > 0.0 { guess.baseline.abs() } else { 1.0 };

    if guess.visibility.abs() < 1e-9 {
        let rms = (pts.iter().map(|p| (p.1 - guess.baseline).powi(2)).sum::<f64>() / pts.len() as f64).sqrt();
        return Ok(FitResult {
            baseline: guess.baseline,
            visibility: 0.0,
            width: guess.width,
            center: guess.center,
            rms,
            converged: true,
            degenerate: true,
            iterations: 0,
        });
    }

    // coordinates: [B / scale, V, w / w0, (μ − μ0) / w0]
    let w0 = guess.width;
    let mu0 = guess.center;
    let objective = |p: &[f64]| -> f64 {
        let (b, v, w) = (p[0], p[1], p[2].abs() * w0);
        let mu = mu0 + p[3] * w0;
        pts.iter()
            .map(|&(d, r)| {
                let x = (d - mu) / w;
                let model = b * (1.0 - v * (-0.5 * x * x).exp());
                (model - r / scale).powi(2)
            })
            .sum()
    };

    let opts = SimplexOptions::default();
    let start = [guess.baseline / scale, guess.visibility, 1.0, 0.0];
    let steps = [0.05, 0.1, 0.2, 0.2];
    let mut result = minimize(objective, &start, &steps, opts);
    let mut iterations = result.iterations;
    if !result.converged {
        let perturbed: Vec<f64> = result.x.iter().zip(&steps).map(|(x, s)| x + 0.5 * s).collect();
        result = minimize(objective, &perturbed, &steps, opts);
        iterations += result.iterations;
    }
    // polish from the optimum with a fresh simplex
    let polished = minimize(objective, &result.x, &[1e-4, 1e-4, 1e-4, 1e-4], opts);
    iterations += polished.iterations;
    let converged = result.converged && polished.converged;
    let best = if polished.fmin <= result.fmin { polished } else { result };

    let p = &best.x;
    Ok(FitResult {
        baseline: p[0] * scale,
        visibility: p[1],
        width: p[2].abs() * w0,
        center: mu0 + p[3] * w0,
        rms: (best.fmin / pts.len() as f64).sqrt() * scale,
        converged,
        degenerate: false,
        iterations,
    })
}

/// `(B − R(0)) / B` with `B` the mean over the outer quarter of the delay
/// range.
pub fn visibility_model_free(scan: &ScanResult) -> Result<f64> {
    let at_zero = scan
        .rate_at_zero()
        .ok_or_else(|| Error::InvalidParameter(format!("scan '{}' has no zero-delay point", scan.label)))?;
    let far = scan.delays.iter().map(|d| d.abs()).fold(0.0, f64::max);
    if far == 0.0 {
        return Err(Error::InvalidParameter(format!("scan '{}' has an empty baseline region", scan.label)));
    }
    let region: Vec<f64> = scan
        .delays
        .iter()
        .zip(&scan.rates)
        .filter(|(d, _)| d.abs() >= BASELINE_REGION * far)
        .map(|(_, r)| *r)
        .collect();
    let baseline = region.iter().sum::<f64>() / region.len() as f64;
    if baseline == 0.0 {
        return Err(Error::ZeroDenominator(format!("scan '{}' has zero baseline", scan.label)));
    }
    Ok((baseline - at_zero) / baseline)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::DelayUnit;

    fn synthetic(b: f64, v: f64, w: f64, mu: f64, n: usize, span: f64) -> ScanResult {
        let delays: Vec<f64> = (0..n).map(|i| -span + 2.0 * span * i as f64 / (n - 1) as f64).collect();
        let rates = delays.iter().map(|d| b * (1.0 - v * (-(d - mu).powi(2) / (2.0 * w * w)).exp())).collect();
        ScanResult::new("SYN", delays, rates, DelayUnit::Fs).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn recovers_dip() {
        let scan = synthetic(100.0, 0.9, 60.0, 0.0, 41, 400.0);
        let f = fit_gaussian_dip(&scan, None).unwrap();
        assert!(f.converged);
        assert!(rel(f.baseline, 100.0) < 1e-6);
        assert!(rel(f.visibility, 0.9) < 1e-6);
        assert!(rel(f.width, 60.0) < 1e-6);
        assert!(f.center.abs() < 1e-6 * 60.0);
    }

    #[test]
    fn recovers_bump() {
        let scan = synthetic(10.0, -0.5, 80.0, 0.0, 41, 600.0);
        let f = fit_gaussian_dip(&scan, None).unwrap();
        assert!(f.visibility < 0.0);
        assert!((f.visibility + 0.5).abs() < 1e-6);
    }

    #[test]
    fn constant_scan_degenerate() {
        let scan = synthetic(5.0, 0.0, 60.0, 0.0, 21, 400.0);
        let f = fit_gaussian_dip(&scan, None).unwrap();
        assert!(f.degenerate);
        assert_eq!(f.visibility, 0.0);
        assert_eq!(f.baseline, 5.0);
    }

    #[test]
    fn too_few_points() {
        let scan = synthetic(5.0, 0.5, 60.0, 0.0, 7, 400.0);
        assert!(fit_gaussian_dip(&scan, None).is_err());
    }

    #[test]
    fn model_free_values() {
        let scan = synthetic(100.0, 1.0, 60.0, 0.0, 41, 1000.0);
        assert!((visibility_model_free(&scan).unwrap() - 1.0).abs() < 1e-12);
        let bump = synthetic(4.0, -0.5, 60.0, 0.0, 41, 1000.0);
        assert!((visibility_model_free(&bump).unwrap() + 0.5).abs() < 1e-12);
        let no_zero = synthetic(4.0, 0.5, 60.0, 0.0, 40, 1000.0);
        assert!(visibility_model_free(&no_zero).is_err());
    }

    #[test]
    fn csv_row() {
        let scan = synthetic(100.0, 0.9, 60.0, 0.0, 41, 400.0);
        let f = fit_gaussian_dip(&scan, None).unwrap();
        let row = f.to_csv_row();
        assert_eq!(row.split(',').count(), FitResult::CSV_HEADER.split(',').count());
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]

        #[test]
        fn scale_equivariant(c in 0.01..100.0f64) {
            let scan = synthetic(7.0, 0.6, 50.0, 10.0, 41, 500.0);
            let a = fit_gaussian_dip(&scan, None).unwrap();
            let b = fit_gaussian_dip(&scan.scaled(c), None).unwrap();
            proptest::prop_assert!(rel(b.baseline, c * a.baseline) < 1e-9);
            proptest::prop_assert!((b.visibility - a.visibility).abs() < 1e-9);
            proptest::prop_assert!(rel(b.width, a.width) < 1e-9);
            proptest::prop_assert!((b.center - a.center).abs() < 1e-9 * a.width);
        }

        #[test]
        fn shift_equivariant(shift in -300.0..300.0f64) {
            let scan = synthetic(7.0, 0.6, 50.0, 0.0, 41, 500.0);
            let moved = ScanResult { delays: scan.delays.iter().map(|d| d + shift).collect(), ..scan.clone() };
            let a = fit_gaussian_dip(&scan, None).unwrap();
            let b = fit_gaussian_dip(&moved, None).unwrap();
            proptest::prop_assert!((b.center - a.center - shift).abs() < 1e-6 * a.width);
            proptest::prop_assert!((b.visibility - a.visibility).abs() < 1e-9);
            proptest::prop_assert!(rel(b.width, a.width) < 1e-9);
        }
    }
}
