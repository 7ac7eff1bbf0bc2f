//! Photon-pair source: multi-pair down-conversion states with temporal
//! dressing, for the pair-timing scenarios the projection measurement can
//! tell apart.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{DressedMode, ExternalMode, ModeSpace, Monomial, StateVector, PRUNE_TOL};
use crate::temporal::{GaussianPacket, InternalBasis, RANK_TOL};

/// Pair amplitude used when a configuration does not set one.
pub const DEFAULT_ETA: f64 = 0.1;

/// Separation, in units of the packet width, treated as "well separated".
pub const WELL_SEPARATED: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScenarioKind {
    /// Two pairs created together: four photons in one temporal mode.
    FourXOne,
    /// Two pairs far apart in time.
    TwoXTwo,
    /// Three pairs created together.
    SixXOne,
    /// Two coincident pairs plus a third far away.
    FourXOnePlusTwo,
    /// Three mutually separated pairs.
    TwoXThree,
    /// Explicit pair times.
    Custom,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 6] = [
        ScenarioKind::FourXOne,
        ScenarioKind::TwoXTwo,
        ScenarioKind::SixXOne,
        ScenarioKind::FourXOnePlusTwo,
        ScenarioKind::TwoXThree,
        ScenarioKind::Custom,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::FourXOne => "four_x_one",
            ScenarioKind::TwoXTwo => "two_x_two",
            ScenarioKind::SixXOne => "six_x_one",
            ScenarioKind::FourXOnePlusTwo => "four_x_one_plus_two",
            ScenarioKind::TwoXThree => "two_x_three",
            ScenarioKind::Custom => "custom",
        }
    }

    /// Number of pairs the kind describes; `None` for custom.
    pub fn pair_count(&self) -> Option<usize> {
        match self {
            ScenarioKind::FourXOne | ScenarioKind::TwoXTwo => Some(2),
            ScenarioKind::SixXOne | ScenarioKind::FourXOnePlusTwo | ScenarioKind::TwoXThree => Some(3),
            ScenarioKind::Custom => None,
        }
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownScenario(s.to_string()))
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    kind: ScenarioKind,
    pair_times: Vec<f64>,
    sigma: f64,
    eta: f64,
}

impl Scenario {
    pub fn new(kind: ScenarioKind, pair_times: Vec<f64>, sigma: f64, eta: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
        }
        if !eta.is_finite() || eta == 0.0 {
            return Err(Error::InvalidParameter(format!("pair amplitude must be non-zero, got {eta}")));
        }
        if pair_times.is_empty() {
            return Err(Error::InvalidParameter("scenario needs at least one pair".into()));
        }
        if let Some(n) = kind.pair_count() {
            if n != pair_times.len() {
                return Err(Error::InvalidParameter(format!(
                    "{kind} needs {n} pairs, got {}",
                    pair_times.len()
                )));
            }
        }
        Ok(Self { kind, pair_times, sigma, eta })
    }

    pub fn custom(pair_times: Vec<f64>, sigma: f64, eta: f64) -> Result<Self> {
        Self::new(ScenarioKind::Custom, pair_times, sigma, eta)
    }

    pub fn kind(&self) -> ScenarioKind {
        self.kind
    }

    pub fn pair_times(&self) -> &[f64] {
        &self.pair_times
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn pair_count(&self) -> usize {
        self.pair_times.len()
    }

    pub fn with_eta(mut self, eta: f64) -> Result<Self> {
        if !eta.is_finite() || eta == 0.0 {
            return Err(Error::InvalidParameter(format!("pair amplitude must be non-zero, got {eta}")));
        }
        self.eta = eta;
        Ok(self)
    }

    /// Same pairs with the pair times permuted.
    pub fn with_pair_times(&self, pair_times: Vec<f64>) -> Result<Self> {
        Self::new(self.kind, pair_times, self.sigma, self.eta)
    }
}

/// Pair times for a named kind; separated pairs sit `separation` fs apart.
pub fn scenario_build(kind: ScenarioKind, sigma: f64, separation: f64) -> Result<Scenario> {
    if !(separation >= 0.0) {
        return Err(Error::InvalidParameter(format!("separation must be >= 0, got {separation}")));
    }
    let s = separation;
    let times = match kind {
        ScenarioKind::FourXOne => vec![0.0, 0.0],
        ScenarioKind::TwoXTwo => vec![0.0, s],
        ScenarioKind::SixXOne => vec![0.0, 0.0, 0.0],
        ScenarioKind::FourXOnePlusTwo => vec![0.0, 0.0, s],
        ScenarioKind::TwoXThree => vec![0.0, s, 2.0 * s],
        ScenarioKind::Custom => {
            return Err(Error::InvalidParameter("custom scenarios need explicit pair times".into()))
        }
    };
    Scenario::new(kind, times, sigma, DEFAULT_ETA)
}

/// Down-conversion state on path 0 together with its temporal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceState {
    pub state: StateVector,
    pub basis: InternalBasis,
    pub order: usize,
}

/// Expands `Σ_{k≤order} η^k/√(k!) ∏_{i<k} a†_H(g_i) a†_V(g_i shifted by dT)`
/// acting on the vacuum. In the identical-packet limit the k-pair term is
/// `√(k!) η^k |k⟩_H|k⟩_V`.
pub fn pdc_state(scenario: &Scenario, order: usize, delay: f64) -> Result<SourceState> {
    if order > scenario.pair_count() {
        return Err(Error::OrderExceedsPairs { order, pairs: scenario.pair_count() });
    }
    let pairs = order.max(1);
    let mut packets = Vec::with_capacity(2 * pairs);
    for &t in &scenario.pair_times[..pairs] {
        let h = GaussianPacket::new(t, scenario.sigma)?;
        packets.push(h);
        packets.push(h.shifted(delay));
    }
    let basis = InternalBasis::build(&packets, RANK_TOL)?;
    let space = ModeSpace::new(1, basis.dim());

    let mut state = StateVector::vacuum(space);
    // running product of pair operators, as (modes, amplitude) branches
    let mut branches: Vec<(Vec<DressedMode>, f64)> = vec![(Vec::new(), 1.0)];
    let mut factorial = 1.0;
    for k in 1..=order {
        factorial *= k as f64;
        for (photon, ext) in [(2 * (k - 1), ExternalMode::h(0)), (2 * k - 1, ExternalMode::v(0))] {
            let coords = basis.expansion(photon);
            let mut next = Vec::with_capacity(branches.len() * coords.len());
            for (modes, amp) in &branches {
                for (internal, &x) in coords.iter().enumerate() {
                    let a = amp * x;
                    if a.abs() < PRUNE_TOL {
                        continue;
                    }
                    let mut m = modes.clone();
                    m.push(DressedMode::new(ext, internal));
                    next.push((m, a));
                }
            }
            branches = next;
        }
        let prefactor = scenario.eta.powi(k as i32) / factorial.sqrt();
        for (modes, amp) in &branches {
            state.add_term(Monomial::new(modes.clone()), Complex64::new(prefactor * amp, 0.0))?;
        }
    }
    state.prune(PRUNE_TOL);
    Ok(SourceState { state, basis, order })
}
