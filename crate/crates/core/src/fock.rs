//! Few-photon state algebra over dressed modes.
//!
//! A [`StateVector`] is a polynomial in bosonic creation operators acting on
//! the vacuum. Each operator creates a photon in a [`DressedMode`]: an
//! external (path, polarization) mode paired with an index into the
//! orthonormal temporal basis. Coefficients are stored per operator product,
//! so a monomial with occupation numbers `n_m` has squared norm `∏ n_m!`.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Amplitudes below this magnitude are dropped after every expansion step.
pub const PRUNE_TOL: f64 = 1e-14;

/// Unitarity tolerance enforced by [`apply_linear_map`].
pub const UNITARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarization {
    H,
    V,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExternalMode {
    pub path: usize,
    pub pol: Polarization,
}

impl ExternalMode {
    pub const fn new(path: usize, pol: Polarization) -> Self {
        Self { path, pol }
    }

    pub const fn h(path: usize) -> Self {
        Self::new(path, Polarization::H)
    }

    pub const fn v(path: usize) -> Self {
        Self::new(path, Polarization::V)
    }

    /// Row/column of this mode in a [`LinearMap`].
    pub fn index(&self) -> usize {
        2 * self.path + self.pol as usize
    }

    pub fn from_index(index: usize) -> Self {
        let pol = if index.is_multiple_of(2) { Polarization::H } else { Polarization::V };
        Self::new(index / 2, pol)
    }
}

impl fmt::Display for ExternalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:?}", self.path, self.pol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DressedMode {
    pub external: ExternalMode,
    pub internal: usize,
}

impl DressedMode {
    pub const fn new(external: ExternalMode, internal: usize) -> Self {
        Self { external, internal }
    }
}

/// Canonically sorted multiset of dressed modes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Monomial(Vec<DressedMode>);

impl Monomial {
    pub fn new(mut modes: Vec<DressedMode>) -> Self {
        modes.sort_unstable();
        Self(modes)
    }

    pub fn vacuum() -> Self {
        Self(Vec::new())
    }

    pub fn modes(&self) -> &[DressedMode] {
        &self.0
    }

    pub fn photon_count(&self) -> usize {
        self.0.len()
    }

    /// `∏ n_m!` over the occupation numbers of this monomial.
    pub fn norm_factor(&self) -> f64 {
        let mut factor = 1.0;
        let mut run = 0usize;
        for (i, m) in self.0.iter().enumerate() {
            if i > 0 && self.0[i - 1] == *m {
                run += 1;
                factor *= run as f64;
            } else {
                run = 1;
            }
        }
        factor
    }

    /// External modes of the photons, in canonical order.
    pub fn external_modes(&self) -> Vec<ExternalMode> {
        let mut ext: Vec<_> = self.0.iter().map(|m| m.external).collect();
        ext.sort_unstable();
        ext
    }
}

/// Dimensions of the dressed-mode space a state lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeSpace {
    pub n_paths: usize,
    pub internal_dim: usize,
}

impl ModeSpace {
    pub const fn new(n_paths: usize, internal_dim: usize) -> Self {
        Self { n_paths, internal_dim }
    }

    pub fn external_dim(&self) -> usize {
        2 * self.n_paths
    }

    fn check(&self, mode: &DressedMode) -> Result<()> {
        if mode.external.path >= self.n_paths {
            return Err(Error::PathOutOfRange { path: mode.external.path, n_paths: self.n_paths });
        }
        if mode.internal >= self.internal_dim {
            return Err(Error::BasisMismatch { left: mode.internal + 1, right: self.internal_dim });
        }
        Ok(())
    }

    fn compatible(&self, other: &ModeSpace) -> Result<()> {
        if self.n_paths != other.n_paths {
            return Err(Error::DimensionMismatch {
                expected: self.external_dim(),
                found: other.external_dim(),
            });
        }
        if self.internal_dim != other.internal_dim {
            return Err(Error::BasisMismatch { left: self.internal_dim, right: other.internal_dim });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    space: ModeSpace,
    terms: BTreeMap<Monomial, Complex64>,
}

impl StateVector {
    pub fn zero(space: ModeSpace) -> Self {
        Self { space, terms: BTreeMap::new() }
    }

    pub fn vacuum(space: ModeSpace) -> Self {
        let mut s = Self::zero(space);
        s.terms.insert(Monomial::vacuum(), Complex64::new(1.0, 0.0));
        s
    }

    /// Normalized Fock ket with the given occupations, all photons in
    /// temporal mode 0.
    pub fn fock(space: ModeSpace, occupations: &[(ExternalMode, usize)]) -> Result<Self> {
        let mut modes = Vec::new();
        for &(ext, n) in occupations {
            modes.extend(std::iter::repeat_n(DressedMode::new(ext, 0), n));
        }
        let mono = Monomial::new(modes);
        let amp = 1.0 / mono.norm_factor().sqrt();
        let mut s = Self::zero(space);
        s.add_term(mono, Complex64::new(amp, 0.0))?;
        Ok(s)
    }

    pub fn space(&self) -> ModeSpace {
        self.space
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, Complex64> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn amplitude(&self, mono: &Monomial) -> Complex64 {
        self.terms.get(mono).copied().unwrap_or_default()
    }

    /// Adds `amp` to the coefficient of `mono`.
    pub fn add_term(&mut self, mono: Monomial, amp: Complex64) -> Result<()> {
        for m in mono.modes() {
            self.space.check(m)?;
        }
        *self.terms.entry(mono).or_default() += amp;
        Ok(())
    }

    pub fn prune(&mut self, tol: f64) {
        self.terms.retain(|_, a| a.norm() >= tol);
    }

    /// Same state in a space with `n_paths` paths; the added paths are empty.
    pub fn with_paths(&self, n_paths: usize) -> Result<Self> {
        if n_paths < self.space.n_paths {
            return Err(Error::DimensionMismatch { expected: 2 * self.space.n_paths, found: 2 * n_paths });
        }
        Ok(Self { space: ModeSpace::new(n_paths, self.space.internal_dim), terms: self.terms.clone() })
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let terms = self.terms.iter().map(|(m, a)| (m.clone(), a * factor)).collect();
        Self { space: self.space, terms }
    }

    /// Restriction to the `n`-photon sector.
    pub fn sector(&self, n: usize) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|(m, _)| m.photon_count() == n)
            .map(|(m, a)| (m.clone(), *a))
            .collect();
        Self { space: self.space, terms }
    }

    pub fn photon_numbers(&self) -> Vec<usize> {
        let mut ns: Vec<_> = self.terms.keys().map(Monomial::photon_count).collect();
        ns.sort_unstable();
        ns.dedup();
        ns
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.iter().map(|(m, a)| a.norm_sqr() * m.norm_factor()).sum()
    }
}

/// Bosonic inner product `⟨a|b⟩`.
pub fn inner_product(a: &StateVector, b: &StateVector) -> Result<Complex64> {
    a.space.compatible(&b.space)?;
    let (small, large, conj_small) = if a.len() <= b.len() { (a, b, true) } else { (b, a, false) };
    let mut acc = Complex64::default();
    for (mono, amp) in &small.terms {
        if let Some(other) = large.terms.get(mono) {
            let term = if conj_small { amp.conj() * other } else { other.conj() * amp };
            acc += term * mono.norm_factor();
        }
    }
    Ok(acc)
}

/// Square complex matrix over external modes, indexed `[output, input]`
/// with mode index `2·path + pol`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    matrix: DMatrix<Complex64>,
    lossy: bool,
}

impl LinearMap {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), found: matrix.ncols() });
        }
        if !matrix.nrows().is_multiple_of(2) {
            return Err(Error::DimensionMismatch { expected: matrix.nrows() + 1, found: matrix.nrows() });
        }
        Ok(Self { matrix, lossy: false })
    }

    /// A map that [`apply_linear_map`] accepts without the unitarity check.
    pub fn lossy(matrix: DMatrix<Complex64>) -> Result<Self> {
        let mut m = Self::new(matrix)?;
        m.lossy = true;
        Ok(m)
    }

    pub fn identity(n_paths: usize) -> Self {
        Self { matrix: DMatrix::identity(2 * n_paths, 2 * n_paths), lossy: false }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_paths(&self) -> usize {
        self.dim() / 2
    }

    pub fn is_lossy(&self) -> bool {
        self.lossy
    }

    /// Largest entry of `|M†M − I|`.
    pub fn unitarity_residual(&self) -> f64 {
        let n = self.dim();
        let prod = self.matrix.adjoint() * &self.matrix;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((prod[(i, j)] - Complex64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    /// Matrix product `self · first`: apply `first`, then `self`.
    pub fn after(&self, first: &LinearMap) -> Result<LinearMap> {
        if self.dim() != first.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: first.dim() });
        }
        Ok(LinearMap { matrix: &self.matrix * &first.matrix, lossy: self.lossy || first.lossy })
    }

    fn validate_for(&self, space: &ModeSpace) -> Result<()> {
        if self.dim() != space.external_dim() {
            return Err(Error::DimensionMismatch { expected: space.external_dim(), found: self.dim() });
        }
        if !self.lossy {
            let residual = self.unitarity_residual();
            if residual > UNITARY_TOL {
                return Err(Error::NonUnitary { residual });
            }
        }
        Ok(())
    }
}

/// Per-input-mode list of `(output mode index, amplitude)` with zeros removed.
fn column_table(map: &LinearMap) -> Vec<Vec<(usize, Complex64)>> {
    let m = map.matrix();
    (0..map.dim())
        .map(|col| {
            (0..map.dim())
                .filter_map(|row| {
                    let a = m[(row, col)];
                    (a.norm() > 0.0).then_some((row, a))
                })
                .collect()
        })
        .collect()
}

fn insert_sorted(modes: &[DressedMode], new: DressedMode) -> Vec<DressedMode> {
    let pos = modes.partition_point(|m| *m <= new);
    let mut out = Vec::with_capacity(modes.len() + 1);
    out.extend_from_slice(&modes[..pos]);
    out.push(new);
    out.extend_from_slice(&modes[pos..]);
    out
}

/// Expands one monomial through the map. When `allowed` is given, only
/// branches that put at most one photon in each allowed external mode (and
/// none elsewhere) are kept.
fn expand_monomial(
    table: &[Vec<(usize, Complex64)>],
    mono: &Monomial,
    amp: Complex64,
    allowed: Option<&[bool]>,
) -> BTreeMap<Vec<DressedMode>, Complex64> {
    let mut partial: BTreeMap<Vec<DressedMode>, Complex64> = BTreeMap::new();
    partial.insert(Vec::new(), amp);
    for photon in mono.modes() {
        let mut next: BTreeMap<Vec<DressedMode>, Complex64> = BTreeMap::new();
        for (modes, a) in &partial {
            for &(row, m) in &table[photon.external.index()] {
                if let Some(mask) = allowed {
                    if !mask[row] || modes.iter().any(|d| d.external.index() == row) {
                        continue;
                    }
                }
                let out = DressedMode::new(ExternalMode::from_index(row), photon.internal);
                *next.entry(insert_sorted(modes, out)).or_default() += a * m;
            }
        }
        next.retain(|_, a| a.norm() >= PRUNE_TOL);
        partial = next;
    }
    partial
}

fn evolve(map: &LinearMap, s: &StateVector, allowed: Option<&[bool]>, sector: Option<usize>) -> Result<StateVector> {
    map.validate_for(&s.space)?;
    let table = column_table(map);
    let mut acc: BTreeMap<Vec<DressedMode>, Complex64> = BTreeMap::new();
    for (mono, amp) in &s.terms {
        if sector.is_some_and(|n| mono.photon_count() != n) {
            continue;
        }
        for (modes, a) in expand_monomial(&table, mono, *amp, allowed) {
            *acc.entry(modes).or_default() += a;
        }
    }
    let terms = acc
        .into_iter()
        .filter(|(_, a)| a.norm() >= PRUNE_TOL)
        .map(|(modes, a)| (Monomial(modes), a))
        .collect();
    Ok(StateVector { space: s.space, terms })
}

/// Substitutes every creation operator `a†(k, internal)` by
/// `Σ_j M[j,k] a†(j, internal)` and recollects terms.
pub fn apply_linear_map(map: &LinearMap, s: &StateVector) -> Result<StateVector> {
    evolve(map, s, None, None)
}

fn validate_detectors(space: &ModeSpace, detectors: &[ExternalMode]) -> Result<()> {
    if detectors.is_empty() {
        return Err(Error::EmptyDetectors);
    }
    for (i, d) in detectors.iter().enumerate() {
        if d.path >= space.n_paths {
            return Err(Error::PathOutOfRange { path: d.path, n_paths: space.n_paths });
        }
        if detectors[..i].contains(d) {
            return Err(Error::DuplicateDetector(d.to_string()));
        }
    }
    Ok(())
}

/// Evolves only the branches of the `len(detectors)`-photon sector that can
/// end in a one-photon-per-detector event. The coincidence probability of
/// the result equals that of the full [`apply_linear_map`] output.
pub fn evolve_post_selected(map: &LinearMap, s: &StateVector, detectors: &[ExternalMode]) -> Result<StateVector> {
    validate_detectors(&s.space, detectors)?;
    let mut mask = vec![false; s.space.external_dim()];
    for d in detectors {
        mask[d.index()] = true;
    }
    evolve(map, s, Some(&mask), Some(detectors.len()))
}

/// Probability that each listed detector mode holds exactly one photon and
/// every other external mode is empty, summed over temporal configurations.
/// Only the sector with `len(detectors)` photons contributes.
pub fn coincidence_probability(s: &StateVector, detectors: &[ExternalMode]) -> Result<f64> {
    validate_detectors(&s.space, detectors)?;
    let mut target = detectors.to_vec();
    target.sort_unstable();
    let n = detectors.len();
    Ok(s.terms
        .iter()
        .filter(|(m, _)| m.photon_count() == n && m.external_modes() == target)
        .map(|(m, a)| a.norm_sqr() * m.norm_factor())
        .sum())
}

/// Probability of every external occupation pattern in the `n`-photon
/// sector, keyed by the sorted multiset of occupied external modes.
pub fn external_outcomes(s: &StateVector, n: usize) -> BTreeMap<Vec<ExternalMode>, f64> {
    let mut out = BTreeMap::new();
    for (m, a) in s.terms.iter().filter(|(m, _)| m.photon_count() == n) {
        *out.entry(m.external_modes()).or_insert(0.0) += a.norm_sqr() * m.norm_factor();
    }
    out
}

/// `|⟨NOON_n|s⟩|²` with the NOON state `(|n,0⟩ − |0,n⟩)/√2` on the H and V
/// modes of path 0. Requires a single temporal mode.
pub fn noon_overlap(s: &StateVector, n: usize) -> Result<f64> {
    if s.space.internal_dim != 1 {
        return Err(Error::MultiModeInput(s.space.internal_dim));
    }
    if n < 2 {
        return Err(Error::InvalidPhotonCount(n));
    }
    let noon = noon_state(s.space, n)?;
    Ok(inner_product(&noon, s)?.norm_sqr())
}

/// Normalized `(|n,0⟩ − |0,n⟩)/√2` on path 0, temporal mode 0.
pub fn noon_state(space: ModeSpace, n: usize) -> Result<StateVector> {
    let factorial: f64 = (1..=n).map(|k| k as f64).product();
    let amp = 1.0 / (2.0 * factorial).sqrt();
    let mut s = StateVector::zero(space);
    let h = DressedMode::new(ExternalMode::h(0), 0);
    let v = DressedMode::new(ExternalMode::v(0), 0);
    s.add_term(Monomial::new(vec![h; n]), Complex64::new(amp, 0.0))?;
    s.add_term(Monomial::new(vec![v; n]), Complex64::new(-amp, 0.0))?;
    Ok(s)
}
