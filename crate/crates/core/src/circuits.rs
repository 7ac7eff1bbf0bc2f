//! Optical elements, their compilation to linear maps, and the preset
//! interferometers: a Hong-Ou-Mandel reference and the four- and six-photon
//! NOON-state projection arrangements.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{ExternalMode, LinearMap, Polarization};

/// Phase convention for beam-splitter reflection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplitterConvention {
    /// `a† → √T a† + i√(1−T) b†`, `b† → i√(1−T) a† + √T b†`.
    #[default]
    Symmetric,
    /// `a† → √T a† + √(1−T) b†`, `b† → −√(1−T) a† + √T b†`.
    Real,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    BeamSplitter { path_a: usize, path_b: usize, transmissivity: f64 },
    /// Multiplies the V component of `path` by `e^{iθ}`.
    PolPhaseShifter { path: usize, theta: f64 },
    /// `H → cos·H + sin·V`, `V → −sin·H + cos·V`.
    Rotator { path: usize, angle: f64 },
    /// Routes H of `path_in` to `path_h_out` and V to `path_v_out`.
    PolarizingSplitter { path_in: usize, path_h_out: usize, path_v_out: usize },
}

impl Element {
    fn paths(&self) -> Vec<usize> {
        match *self {
            Element::BeamSplitter { path_a, path_b, .. } => vec![path_a, path_b],
            Element::PolPhaseShifter { path, .. } | Element::Rotator { path, .. } => vec![path],
            Element::PolarizingSplitter { path_in, path_h_out, path_v_out } => {
                vec![path_in, path_h_out, path_v_out]
            }
        }
    }

    fn validate(&self, n_paths: usize) -> Result<()> {
        for path in self.paths() {
            if path >= n_paths {
                return Err(Error::PathOutOfRange { path, n_paths });
            }
        }
        match *self {
            Element::BeamSplitter { path_a, path_b, transmissivity } => {
                if path_a == path_b {
                    return Err(Error::InvalidParameter("beam splitter needs two distinct paths".into()));
                }
                if !(transmissivity > 0.0 && transmissivity < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "transmissivity {transmissivity} outside (0, 1)"
                    )));
                }
            }
            Element::PolarizingSplitter { path_h_out, path_v_out, .. } if path_h_out == path_v_out => {
                return Err(Error::InvalidParameter("polarizing splitter outputs must differ".into()));
            }
            _ => {}
        }
        Ok(())
    }

    fn matrix(&self, n_paths: usize, convention: SplitterConvention) -> DMatrix<Complex64> {
        let dim = 2 * n_paths;
        let mut m = DMatrix::<Complex64>::identity(dim, dim);
        let idx = |path: usize, pol: Polarization| ExternalMode::new(path, pol).index();
        match *self {
            Element::BeamSplitter { path_a, path_b, transmissivity } => {
                let t = Complex64::new(transmissivity.sqrt(), 0.0);
                let r = (1.0 - transmissivity).sqrt();
                let (r_ab, r_ba) = match convention {
                    SplitterConvention::Symmetric => (Complex64::new(0.0, r), Complex64::new(0.0, r)),
                    SplitterConvention::Real => (Complex64::new(r, 0.0), Complex64::new(-r, 0.0)),
                };
                for pol in [Polarization::H, Polarization::V] {
                    let (a, b) = (idx(path_a, pol), idx(path_b, pol));
                    m[(a, a)] = t;
                    m[(b, b)] = t;
                    m[(b, a)] = r_ab;
                    m[(a, b)] = r_ba;
                }
            }
            Element::PolPhaseShifter { path, theta } => {
                let v = idx(path, Polarization::V);
                m[(v, v)] = Complex64::from_polar(1.0, theta);
            }
            Element::Rotator { path, angle } => {
                let (h, v) = (idx(path, Polarization::H), idx(path, Polarization::V));
                let (s, c) = angle.sin_cos();
                m[(h, h)] = Complex64::new(c, 0.0);
                m[(v, h)] = Complex64::new(s, 0.0);
                m[(h, v)] = Complex64::new(-s, 0.0);
                m[(v, v)] = Complex64::new(c, 0.0);
            }
            Element::PolarizingSplitter { path_in, path_h_out, path_v_out } => {
                let swap = |m: &mut DMatrix<Complex64>, a: usize, b: usize| {
                    if a != b {
                        m.swap_columns(a, b);
                    }
                };
                swap(&mut m, idx(path_in, Polarization::H), idx(path_h_out, Polarization::H));
                swap(&mut m, idx(path_in, Polarization::V), idx(path_v_out, Polarization::V));
            }
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Hom,
    Noon4,
    Noon6,
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Hom => "hom",
            Preset::Noon4 => "noon4",
            Preset::Noon6 => "noon6",
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hom" => Ok(Preset::Hom),
            "noon4" => Ok(Preset::Noon4),
            "noon6" => Ok(Preset::Noon6),
            other => Err(Error::UnknownPreset(other.to_string())),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    name: String,
    n_paths: usize,
    elements: Vec<Element>,
    detectors: Vec<(char, ExternalMode)>,
}

impl Circuit {
    pub fn new(
        name: impl Into<String>,
        n_paths: usize,
        elements: Vec<Element>,
        detectors: Vec<(char, ExternalMode)>,
    ) -> Result<Self> {
        for e in &elements {
            e.validate(n_paths)?;
        }
        for (i, (label, mode)) in detectors.iter().enumerate() {
            if mode.path >= n_paths {
                return Err(Error::PathOutOfRange { path: mode.path, n_paths });
            }
            if detectors[..i].iter().any(|(l, m)| l == label || m == mode) {
                return Err(Error::DuplicateDetector(label.to_string()));
            }
        }
        Ok(Self { name: name.into(), n_paths, elements, detectors })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn detectors(&self) -> &[(char, ExternalMode)] {
        &self.detectors
    }

    /// Detector labels in declaration order, e.g. `"ABCD"`.
    pub fn labels(&self) -> String {
        self.detectors.iter().map(|(l, _)| *l).collect()
    }

    pub fn detector(&self, label: char) -> Result<ExternalMode> {
        self.detectors
            .iter()
            .find(|(l, _)| *l == label)
            .map(|(_, m)| *m)
            .ok_or(Error::UnknownDetector(label))
    }

    /// Resolves a pattern string such as `"ABCD"` to external modes.
    pub fn pattern_modes(&self, pattern: &str) -> Result<Vec<ExternalMode>> {
        let modes: Vec<_> = pattern.chars().map(|c| self.detector(c)).collect::<Result<_>>()?;
        if modes.is_empty() {
            return Err(Error::EmptyDetectors);
        }
        for (i, m) in modes.iter().enumerate() {
            if modes[..i].contains(m) {
                return Err(Error::DuplicateDetector(m.to_string()));
            }
        }
        Ok(modes)
    }

    pub fn compile(&self) -> Result<LinearMap> {
        self.compile_with(SplitterConvention::default())
    }

    pub fn compile_with(&self, convention: SplitterConvention) -> Result<LinearMap> {
        let dim = 2 * self.n_paths;
        let mut total = DMatrix::<Complex64>::identity(dim, dim);
        for e in &self.elements {
            e.validate(self.n_paths)?;
            total = e.matrix(self.n_paths, convention) * total;
        }
        LinearMap::new(total)
    }
}

pub fn compile(c: &Circuit) -> Result<LinearMap> {
    c.compile()
}

/// Outcome of [`check_unitary`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitaryCheck {
    pub pass: bool,
    pub residual: f64,
}

pub fn check_unitary(m: &LinearMap, tol: f64) -> UnitaryCheck {
    let residual = m.unitarity_residual();
    UnitaryCheck { pass: residual <= tol, residual }
}

/// Rotator followed by a polarizing splitter on each arm; arm `k` keeps H on
/// path `k` and sends V to path `arms + k`. Labels run pairwise per arm.
fn analyzers(arms: usize) -> (Vec<Element>, Vec<(char, ExternalMode)>) {
    let mut elements = Vec::new();
    let mut labels = Vec::new();
    let mut letter = b'A';
    for arm in 0..arms {
        elements.push(Element::Rotator { path: arm, angle: FRAC_PI_4 });
        elements.push(Element::PolarizingSplitter { path_in: arm, path_h_out: arm, path_v_out: arms + arm });
        labels.push((letter as char, ExternalMode::h(arm)));
        labels.push(((letter + 1) as char, ExternalMode::v(arms + arm)));
        letter += 2;
    }
    (elements, labels)
}

pub fn preset(name: &str) -> Result<Circuit> {
    Ok(build_preset(name.parse()?))
}

pub fn build_preset(p: Preset) -> Circuit {
    let circuit = match p {
        Preset::Hom => {
            // split H/V of the source onto two ports, turn V into H, then interfere
            let elements = vec![
                Element::PolarizingSplitter { path_in: 0, path_h_out: 0, path_v_out: 1 },
                Element::Rotator { path: 1, angle: FRAC_PI_2 },
                Element::BeamSplitter { path_a: 0, path_b: 1, transmissivity: 0.5 },
            ];
            Circuit::new("hom", 2, elements, vec![('A', ExternalMode::h(0)), ('B', ExternalMode::h(1))])
        }
        Preset::Noon4 => {
            let mut elements = vec![
                Element::BeamSplitter { path_a: 0, path_b: 1, transmissivity: 0.5 },
                Element::PolPhaseShifter { path: 1, theta: FRAC_PI_2 },
            ];
            let (analysis, labels) = analyzers(2);
            elements.extend(analysis);
            Circuit::new("noon4", 4, elements, labels)
        }
        Preset::Noon6 => {
            let mut elements = vec![
                Element::BeamSplitter { path_a: 0, path_b: 1, transmissivity: 2.0 / 3.0 },
                Element::BeamSplitter { path_a: 0, path_b: 2, transmissivity: 0.5 },
                Element::PolPhaseShifter { path: 1, theta: 2.0 * PI / 3.0 },
                Element::PolPhaseShifter { path: 2, theta: 4.0 * PI / 3.0 },
            ];
            let (analysis, labels) = analyzers(3);
            elements.extend(analysis);
            Circuit::new("noon6", 6, elements, labels)
        }
    };
    circuit.expect("preset circuits are well formed")
}
