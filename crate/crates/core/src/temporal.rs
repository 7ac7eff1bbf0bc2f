//! Temporal wavepackets and the orthonormal internal basis that spans them.
//!
//! Every photon carries a real, chirp-free Gaussian amplitude profile
//! `g(t) = (2πσ²)^(-1/4) exp(-(t - t0)² / (4σ²))`. Photons whose packets
//! overlap interfere; orthogonal packets make them distinguishable.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Default rank tolerance for [`InternalBasis::build`].
pub const RANK_TOL: f64 = 1e-9;

/// A normalized Gaussian single-photon wavepacket (times in fs).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPacket {
    t0: f64,
    sigma: f64,
}

impl GaussianPacket {
    pub fn new(t0: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "packet width must be positive, got {sigma}"
            )));
        }
        if !t0.is_finite() {
            return Err(Error::InvalidParameter(format!("packet center {t0} is not finite")));
        }
        Ok(Self { t0, sigma })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Amplitude profile at time `t`.
    pub fn amplitude(&self, t: f64) -> f64 {
        let norm = (2.0 * std::f64::consts::PI * self.sigma * self.sigma).powf(-0.25);
        let x = t - self.t0;
        norm * (-x * x / (4.0 * self.sigma * self.sigma)).exp()
    }

    /// Same packet moved by `dt` fs.
    pub fn shifted(&self, dt: f64) -> Self {
        Self { t0: self.t0 + dt, sigma: self.sigma }
    }
}

fn check_widths(a: &GaussianPacket, b: &GaussianPacket) -> Result<()> {
    if a.sigma != b.sigma {
        return Err(Error::UnequalWidths(a.sigma, b.sigma));
    }
    Ok(())
}

/// Analytic overlap `exp(-(Δt)² / (8σ²))` of two equal-width packets.
pub fn packet_overlap(a: &GaussianPacket, b: &GaussianPacket) -> Result<f64> {
    check_widths(a, b)?;
    let dt = a.t0 - b.t0;
    Ok((-dt * dt / (8.0 * a.sigma * a.sigma)).exp())
}

pub fn shift_packet(g: &GaussianPacket, dt: f64) -> GaussianPacket {
    g.shifted(dt)
}

/// Pair-exchange weight for two photon pairs whose packets are `a` and `b`:
/// both the H and the V photon must swap, each contributing `|overlap|²`.
pub fn exchange_ratio(a: &GaussianPacket, b: &GaussianPacket) -> Result<f64> {
    Ok(packet_overlap(a, b)?.powi(4))
}

/// Orthonormal basis for the span of a list of packets.
///
/// `transform` has one column per packet holding that packet's coordinates
/// in the orthonormal basis, so `transformᵀ · transform` reproduces the Gram
/// matrix. The basis is built by pivoted Cholesky in input order: a packet
/// only opens a new dimension when its residual norm² exceeds the rank
/// tolerance, so duplicate packets collapse onto one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct InternalBasis {
    packets: Vec<GaussianPacket>,
    gram: DMatrix<f64>,
    transform: DMatrix<f64>,
}

impl InternalBasis {
    pub fn build(packets: &[GaussianPacket], rank_tol: f64) -> Result<Self> {
        if packets.is_empty() {
            return Err(Error::InvalidParameter("empty packet list".into()));
        }
        let n = packets.len();
        let mut gram = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                gram[(i, j)] = packet_overlap(&packets[i], &packets[j])?;
            }
        }

        // rows[k] = coordinates of all packets along basis vector k
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for j in 0..n {
            let proj: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            let resid = gram[(j, j)] - proj.iter().map(|c| c * c).sum::<f64>();
            if resid <= rank_tol {
                continue;
            }
            let pivot = resid.sqrt();
            let mut row = vec![0.0; n];
            row[j] = pivot;
            for i in (j + 1)..n {
                let dot: f64 = rows.iter().map(|r| r[j] * r[i]).sum();
                row[i] = (gram[(j, i)] - dot) / pivot;
            }
            rows.push(row);
        }

        let dim = rows.len();
        let transform = DMatrix::from_fn(dim, n, |k, j| rows[k][j]);
        Ok(Self { packets: packets.to_vec(), gram, transform })
    }

    pub fn dim(&self) -> usize {
        self.transform.nrows()
    }

    pub fn packets(&self) -> &[GaussianPacket] {
        &self.packets
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn transform(&self) -> &DMatrix<f64> {
        &self.transform
    }

    /// Coordinates of packet `j` in the orthonormal basis.
    pub fn expansion(&self, j: usize) -> Vec<f64> {
        self.transform.column(j).iter().copied().collect()
    }

    /// Largest entry of `|transformᵀ · transform − gram|`.
    pub fn reconstruction_residual(&self) -> f64 {
        let rebuilt = self.transform.transpose() * &self.transform;
        (rebuilt - &self.gram).amax()
    }
}

pub fn build_internal_basis(packets: &[GaussianPacket], rank_tol: f64) -> Result<InternalBasis> {
    InternalBasis::build(packets, rank_tol)
}
