//! Geometric multipath channels between the relay and the two mobile stations.
//!
//! Every node uses a half-wavelength ULA. Each path has its own complex gain,
//! departure/arrival spatial frequency and an integer tap delay; the
//! per-subcarrier response is the DFT of the resulting tap-delay line.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, ComplexVector, C64};

/// Array response of an `m`-element half-wavelength ULA at spatial frequency `f`.
pub fn steering_vector(m: usize, f: f64) -> ComplexVector {
    ComplexVector::from_fn(m, |i, _| C64::from_polar(1.0, PI * i as f64 * f))
}

/// Draws from a circularly-symmetric complex Gaussian with the given variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let s = libm::sqrt(variance / 2.0);
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub gains: Vec<C64>,
    /// Spatial frequency at the relay array, in `[-1, 1)`.
    pub aod: Vec<f64>,
    /// Spatial frequency at the mobile-station array, in `[-1, 1)`.
    pub aoa: Vec<f64>,
    pub delays: Vec<usize>,
}

impl PathSet {
    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }
}

/// Rayleigh path gains with variance `1/L`, uniform angles and uniform delays in `0..taps`.
pub fn generate_paths<R: Rng + ?Sized>(rng: &mut R, paths: usize, taps: usize) -> Result<PathSet> {
    if paths == 0 {
        return Err(Error::InvalidParameter { name: "paths", reason: "must be at least 1".into() });
    }
    if taps == 0 {
        return Err(Error::InvalidParameter { name: "delay_taps", reason: "must be at least 1".into() });
    }
    let var = 1.0 / paths as f64;
    let mut set = PathSet {
        gains: Vec::with_capacity(paths),
        aod: Vec::with_capacity(paths),
        aoa: Vec::with_capacity(paths),
        delays: Vec::with_capacity(paths),
    };
    for _ in 0..paths {
        set.gains.push(complex_gaussian(rng, var));
        set.aod.push(rng.random_range(-1.0..1.0));
        set.aoa.push(rng.random_range(-1.0..1.0));
        set.delays.push(rng.random_range(0..taps));
    }
    Ok(set)
}

/// Channel matrix (`m_rx x m_tx`) on subcarrier `k` of `subcarriers`.
///
/// `H_k = sum_i g_i exp(-j 2 pi k d_i / K) a_rx(aod_i) a_tx(aoa_i)^T`. With unit-modulus
/// steering vectors and gains of variance `1/L` this gives `E ||H_k||_F^2 = m_rx m_tx`.
pub fn frequency_response(
    p: &PathSet,
    m_rx: usize,
    m_tx: usize,
    k: usize,
    subcarriers: usize,
) -> Result<ComplexMatrix> {
    if k >= subcarriers {
        return Err(Error::InvalidParameter {
            name: "subcarrier",
            reason: format!("index {k} out of range for {subcarriers} subcarriers"),
        });
    }
    let mut h = ComplexMatrix::zeros(m_rx, m_tx);
    for i in 0..p.len() {
        let phase = -2.0 * PI * (k * p.delays[i]) as f64 / subcarriers as f64;
        let coef = p.gains[i] * C64::from_polar(1.0, phase);
        let a_rx = steering_vector(m_rx, p.aod[i]);
        let a_tx = steering_vector(m_tx, p.aoa[i]);
        h.ger(coef, &a_rx, &a_tx, C64::new(1.0, 0.0));
    }
    Ok(h)
}

/// Dimensions of one channel ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub relay_antennas: usize,
    pub ms_antennas: [usize; 2],
    pub paths: usize,
    pub delay_taps: usize,
    pub subcarriers: usize,
}

/// One Monte Carlo realization: uplink channels `h[l][k]` (`M_RS x M_l`) and noise levels.
///
/// Only the uplink matrices are stored; the downlink is always their plain transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub h: [Vec<ComplexMatrix>; 2],
    pub sigma2_rs: f64,
    pub sigma2_ue: f64,
}

impl ChannelSet {
    /// Draws both links. Delays are capped at the subcarrier count so every tap is resolvable.
    pub fn generate<R: Rng + ?Sized>(
        rng: &mut R,
        params: &ChannelParams,
        sigma2_rs: f64,
        sigma2_ue: f64,
    ) -> Result<Self> {
        if params.subcarriers == 0 {
            return Err(Error::InvalidParameter { name: "subcarriers", reason: "must be at least 1".into() });
        }
        let taps = params.delay_taps.min(params.subcarriers);
        let mut draw = |m_ms: usize| -> Result<Vec<ComplexMatrix>> {
            let p = generate_paths(rng, params.paths, taps)?;
            (0..params.subcarriers)
                .map(|k| frequency_response(&p, params.relay_antennas, m_ms, k, params.subcarriers))
                .collect()
        };
        let h1 = draw(params.ms_antennas[0])?;
        let h2 = draw(params.ms_antennas[1])?;
        Ok(Self { h: [h1, h2], sigma2_rs, sigma2_ue })
    }

    pub fn with_noise(&self, sigma2_rs: f64, sigma2_ue: f64) -> Self {
        Self { h: self.h.clone(), sigma2_rs, sigma2_ue }
    }

    pub fn subcarriers(&self) -> usize {
        self.h[0].len()
    }

    pub fn relay_antennas(&self) -> usize {
        self.h[0][0].nrows()
    }

    pub fn uplink(&self, ms: usize, k: usize) -> &ComplexMatrix {
        &self.h[ms][k]
    }

    pub fn downlink(&self, ms: usize, k: usize) -> ComplexMatrix {
        self.h[ms][k].transpose()
    }
}
