//! Two-phase exchange through the relay and the resulting spectral efficiency.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::channel::{complex_gaussian, ChannelSet};
use crate::error::{dim_err, Error, Result};
use crate::linalg::{ComplexMatrix, ComplexVector};
use crate::terminal::LinkBeams;

/// What one mobile station sees on one subcarrier.
#[derive(Debug, Clone)]
pub struct ReceivedSignals {
    /// Decoder output before self-interference removal.
    pub y: ComplexVector,
    /// The station's own signal echoed back by the relay.
    pub y_si: ComplexVector,
    /// Desired signal from the other station.
    pub y_ds: ComplexVector,
    /// Filtered noise `W^H (H^T G n_RS + n)`.
    pub noise: ComplexVector,
    /// `y - y_si`.
    pub z: ComplexVector,
}

fn draw(rng: &mut (impl Rng + ?Sized), n: usize, variance: f64) -> ComplexVector {
    ComplexVector::from_fn(n, |_, _| complex_gaussian(rng, variance))
}

/// Simulates both phases on subcarrier `k`: the stations transmit to the relay,
/// the relay forwards `G x`, and each station removes its own echo.
pub fn simulate_two_phase<R: Rng + ?Sized>(
    ch: &ChannelSet,
    g: &ComplexMatrix,
    beams: &[LinkBeams; 2],
    k: usize,
    rng: &mut R,
) -> Result<[ReceivedSignals; 2]> {
    let m_rs = ch.relay_antennas();
    if g.shape() != (m_rs, m_rs) {
        return Err(dim_err("simulate_two_phase", format!("relay matrix {:?}, M_RS = {m_rs}", g.shape())));
    }
    // Precoder of MS l lives on the link into the other station.
    let f = [&beams[1].precoder, &beams[0].precoder];
    let s: Vec<ComplexVector> = (0..2).map(|ms| draw(rng, f[ms].ncols(), 1.0)).collect();
    let n_rs = draw(rng, m_rs, ch.sigma2_rs);
    let n_ms: Vec<ComplexVector> = (0..2).map(|ms| draw(rng, ch.uplink(ms, k).ncols(), ch.sigma2_ue)).collect();

    let tx: Vec<ComplexVector> = (0..2).map(|ms| ch.uplink(ms, k) * (f[ms] * &s[ms])).collect();
    let x = &tx[0] + &tx[1] + &n_rs;
    let relay_out = g * &x;

    let rx = |ms: usize| -> ReceivedSignals {
        let other = 1 - ms;
        let h_t = ch.downlink(ms, k);
        let w_h = beams[ms].decoder.adjoint();
        let y = &w_h * (&h_t * &relay_out + &n_ms[ms]);
        let y_si = &w_h * (&h_t * g * &tx[ms]);
        let y_ds = &w_h * (&h_t * g * &tx[other]);
        let noise = &w_h * (&h_t * g * &n_rs + &n_ms[ms]);
        let z = &y - &y_si;
        ReceivedSignals { y, y_si, y_ds, noise, z }
    };
    Ok([rx(0), rx(1)])
}

/// `1/2 log2 det(I + (W^H Phi W)^{-1} W^H H F F^H H^H W)`, through Cholesky factors.
pub fn spectral_efficiency_general(
    h_bar: &ComplexMatrix,
    f: &ComplexMatrix,
    w: &ComplexMatrix,
    phi: &ComplexMatrix,
) -> Result<f64> {
    if w.nrows() != h_bar.nrows() || f.nrows() != h_bar.ncols() || phi.shape() != (w.nrows(), w.nrows()) {
        return Err(dim_err(
            "spectral_efficiency_general",
            format!("H {:?}, F {:?}, W {:?}, Phi {:?}", h_bar.shape(), f.shape(), w.shape(), phi.shape()),
        ));
    }
    let noise = w.adjoint() * phi * w;
    let chol = noise.cholesky().ok_or(Error::Degenerate("W^H Phi W is singular"))?;
    let l = chol.l();
    let signal = w.adjoint() * h_bar * f;
    let m = l
        .solve_lower_triangular(&signal)
        .ok_or(Error::Degenerate("W^H Phi W is singular"))?;
    let n = m.nrows();
    let gram = ComplexMatrix::identity(n, n) + &m * m.adjoint();
    let lg = gram.cholesky().ok_or(Error::Degenerate("I + M M^H lost definiteness"))?;
    let log_det: f64 = lg.l().diagonal().iter().map(|d| 2.0 * libm::log2(d.re)).sum();
    Ok(0.5 * log_det.max(0.0))
}

/// `1/2 sum log2(1 + lambda_i^2 p_i)`.
pub fn spectral_efficiency_closed(lambda_eff: &[f64], powers: &[f64]) -> f64 {
    0.5 * lambda_eff
        .iter()
        .zip(powers)
        .map(|(l, p)| libm::log2(1.0 + l * l * p))
        .sum::<f64>()
}
