//! Mobile-station processing for a fixed relay matrix.
//!
//! With the self-interference removed each direction of the exchange is a
//! point-to-point MIMO link `H_bar = H_rx^T G H_tx` with coloured noise `Phi`.
//! The receiver whitens, both ends use the singular vectors of the whitened
//! channel and the transmitter water-fills its power over the streams.

use alloc::format;
use alloc::vec::Vec;

use crate::channel::ChannelSet;
use crate::error::{dim_err, Error, Result};
use crate::linalg::{hermitian_eigen, svd, ComplexMatrix, C64};
use crate::waterfill;

/// Which floor the stream water-filling uses.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum WaterFillRule {
    /// `p_i = max(1/mu - 1/lambda_i^2, 0)`, the capacity-achieving allocation.
    #[default]
    Capacity,
    /// `p_i = max(1/mu - 1/lambda_i, 0)`.
    Literal,
}

/// `H_rx^T G H_tx`.
pub fn effective_channel(h_rx: &ComplexMatrix, g: &ComplexMatrix, h_tx: &ComplexMatrix) -> Result<ComplexMatrix> {
    if h_rx.nrows() != g.nrows() || g.ncols() != h_tx.nrows() {
        return Err(dim_err(
            "effective_channel",
            format!("H_rx {:?}, G {:?}, H_tx {:?}", h_rx.shape(), g.shape(), h_tx.shape()),
        ));
    }
    Ok(h_rx.transpose() * g * h_tx)
}

/// Covariance of the noise reaching a mobile station: `s_rs H^T G G^H H^* + s_ue I`.
pub fn noise_covariance(h: &ComplexMatrix, g: &ComplexMatrix, sigma2_rs: f64, sigma2_ue: f64) -> ComplexMatrix {
    let hg = h.transpose() * g;
    let m = h.ncols();
    &hg * hg.adjoint() * C64::from(sigma2_rs) + ComplexMatrix::identity(m, m) * C64::from(sigma2_ue)
}

/// `Phi^{-1/2}` via the eigendecomposition.
pub fn whitener(phi: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (vals, vecs) = hermitian_eigen(phi)?;
    let largest = vals.first().copied().unwrap_or(0.0);
    let smallest = vals.last().copied().unwrap_or(0.0);
    if !(largest > 0.0) || smallest <= 1e-12 * largest {
        return Err(Error::NotPositiveDefinite { eigenvalue: smallest, largest });
    }
    let mut scaled = vecs.clone();
    for (j, &v) in vals.iter().enumerate() {
        scaled.column_mut(j).scale_mut(1.0 / libm::sqrt(v));
    }
    Ok(scaled * vecs.adjoint())
}

/// Capacity water-filling over channel gains; returns the powers and `mu`.
pub fn water_fill(gains: &[f64], budget: f64) -> Result<(Vec<f64>, f64)> {
    water_fill_with(gains, budget, WaterFillRule::Capacity)
}

pub fn water_fill_with(gains: &[f64], budget: f64, rule: WaterFillRule) -> Result<(Vec<f64>, f64)> {
    let floors: Vec<f64> = gains
        .iter()
        .map(|&g| {
            if g > 0.0 {
                match rule {
                    WaterFillRule::Capacity => 1.0 / (g * g),
                    WaterFillRule::Literal => 1.0 / g,
                }
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let wf = waterfill::fill(&floors, budget)?;
    let mu = wf.mu();
    Ok((wf.allocation, mu))
}

/// Precoder of the transmitting MS and decoder of the receiving MS for one link.
#[derive(Debug, Clone)]
pub struct LinkBeams {
    /// `M_tx x Ns`, columns scaled by the stream amplitudes.
    pub precoder: ComplexMatrix,
    /// `M_rx x Ns`, whitener folded in so that `W^H Phi W = I`.
    pub decoder: ComplexMatrix,
    pub powers: Vec<f64>,
    /// Leading singular values of the whitened effective channel.
    pub lambda_eff: Vec<f64>,
}

pub fn design_beams(
    h_bar: &ComplexMatrix,
    phi: &ComplexMatrix,
    streams: usize,
    p_ue: f64,
    rule: WaterFillRule,
) -> Result<LinkBeams> {
    let max_streams = h_bar.nrows().min(h_bar.ncols());
    if streams == 0 || streams > max_streams {
        return Err(Error::InvalidParameter {
            name: "streams",
            reason: format!("need 1 <= Ns <= {max_streams}, got {streams}"),
        });
    }
    if phi.shape() != (h_bar.nrows(), h_bar.nrows()) {
        return Err(dim_err("design_beams", format!("Phi {:?} vs H_bar {:?}", phi.shape(), h_bar.shape())));
    }
    let q = whitener(phi)?;
    let d = svd(&(&q * h_bar));
    let lambda_eff = d.s[..streams].to_vec();
    let (powers, _) = water_fill_with(&lambda_eff, p_ue, rule)?;

    let mut precoder = d.v.columns(0, streams).into_owned();
    for (j, &p) in powers.iter().enumerate() {
        precoder.column_mut(j).scale_mut(libm::sqrt(p));
    }
    let decoder = &q * d.u.columns(0, streams);
    Ok(LinkBeams { precoder, decoder, powers, lambda_eff })
}

/// Beams on every subcarrier. `links[k][l]` serves the link into MS `l`, so it
/// holds the decoder of MS `l` and the precoder of the other MS.
#[derive(Debug, Clone)]
pub struct TerminalBeams {
    pub links: Vec<[LinkBeams; 2]>,
}

impl TerminalBeams {
    /// Precoder used by MS `ms` on subcarrier `k`.
    pub fn precoder(&self, ms: usize, k: usize) -> &ComplexMatrix {
        &self.links[k][1 - ms].precoder
    }

    pub fn decoder(&self, ms: usize, k: usize) -> &ComplexMatrix {
        &self.links[k][ms].decoder
    }
}

/// Beams for both links on subcarrier `k` given relay matrix `g`.
pub fn design_link_pair(
    ch: &ChannelSet,
    g: &ComplexMatrix,
    k: usize,
    streams: usize,
    p_ue: f64,
    rule: WaterFillRule,
) -> Result<[LinkBeams; 2]> {
    let link = |rx: usize| -> Result<LinkBeams> {
        let h_rx = ch.uplink(rx, k);
        let h_bar = effective_channel(h_rx, g, ch.uplink(1 - rx, k))?;
        let phi = noise_covariance(h_rx, g, ch.sigma2_rs, ch.sigma2_ue);
        design_beams(&h_bar, &phi, streams, p_ue, rule)
    };
    Ok([link(0)?, link(1)?])
}

pub fn design_terminal_beams(
    ch: &ChannelSet,
    relay: &[ComplexMatrix],
    streams: usize,
    p_ue: f64,
    rule: WaterFillRule,
) -> Result<TerminalBeams> {
    let links = relay
        .iter()
        .enumerate()
        .map(|(k, g)| design_link_pair(ch, g, k, streams, p_ue, rule))
        .collect::<Result<Vec<_>>>()?;
    Ok(TerminalBeams { links })
}
