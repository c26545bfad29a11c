//! One Monte Carlo trial: draw a channel, design every requested relay, fix the
//! relay power with two normalization passes, design the terminal beams and
//! evaluate the sum spectral efficiency.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{ChannelParams, ChannelSet};
use crate::error::{Error, Result};
use crate::fd_relay::{isotropic_relay_covariance, normalize_relay_gain, relay_covariance, FdMethod, NormMaxBasis};
use crate::had_relay::{design_had, stack_fd_tensor, AltMaxOptions, HadMethod};
use crate::link::spectral_efficiency_general;
use crate::linalg::{trace_re, ComplexMatrix};
use crate::terminal::{design_link_pair, effective_channel, noise_covariance, LinkBeams, WaterFillRule};

/// Fully-digital design a hybrid relay approximates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HadTarget {
    RrAnomax,
    ErrAnomax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Anomax,
    RrAnomax,
    ErrAnomax,
    Had { method: HadMethod, target: HadTarget },
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Anomax,
        Method::RrAnomax,
        Method::ErrAnomax,
        Method::Had { method: HadMethod::Hosvd, target: HadTarget::ErrAnomax },
        Method::Had { method: HadMethod::AltMax, target: HadTarget::ErrAnomax },
        Method::Had { method: HadMethod::Hosvd, target: HadTarget::RrAnomax },
        Method::Had { method: HadMethod::AltMax, target: HadTarget::RrAnomax },
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            Method::Anomax => "anomax",
            Method::RrAnomax => "rr",
            Method::ErrAnomax => "err",
            Method::Had { method: HadMethod::Hosvd, target: HadTarget::ErrAnomax } => "had_hosvd",
            Method::Had { method: HadMethod::AltMax, target: HadTarget::ErrAnomax } => "had_altmax",
            Method::Had { method: HadMethod::Hosvd, target: HadTarget::RrAnomax } => "rr_had_hosvd",
            Method::Had { method: HadMethod::AltMax, target: HadTarget::RrAnomax } => "rr_had_altmax",
        }
    }

    pub fn is_hybrid(&self) -> bool {
        matches!(self, Method::Had { .. })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.tag() == s)
            .ok_or_else(|| Error::InvalidParameter { name: "methods", reason: format!("unknown method `{s}`") })
    }
}

/// Scenario parameters shared by every method in a trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub relay_antennas: usize,
    pub ms_antennas: [usize; 2],
    pub subcarriers: usize,
    pub streams: usize,
    pub rf_chains: usize,
    pub paths: usize,
    pub delay_taps: usize,
    /// Singular vectors combined by ERR-ANOMAX.
    pub r: usize,
    pub p_rs: f64,
    pub p_ue: f64,
    /// Keep the 1/2 pre-log of two-phase relaying.
    pub half_prelog: bool,
    pub waterfill: WaterFillRule,
    pub altmax: AltMaxOptions,
    /// Relay normalization passes; the first uses isotropic terminal signals,
    /// each later one the precoders designed for the previous scaling.
    pub norm_passes: usize,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            relay_antennas: 64,
            ms_antennas: [4, 4],
            subcarriers: 32,
            streams: 4,
            rf_chains: 8,
            paths: 6,
            delay_taps: 8,
            r: 2,
            p_rs: 1.0,
            p_ue: 1.0,
            half_prelog: true,
            waterfill: WaterFillRule::Capacity,
            altmax: AltMaxOptions::default(),
            norm_passes: 2,
        }
    }
}

fn invalid(name: &'static str, reason: alloc::string::String) -> Error {
    Error::InvalidParameter { name, reason }
}

impl TrialConfig {
    /// Checks the scenario; the error names the offending parameter.
    pub fn validate(&self) -> Result<()> {
        let [m1, m2] = self.ms_antennas;
        for (name, v) in [
            ("m_rs", self.relay_antennas),
            ("m1", m1),
            ("m2", m2),
            ("k", self.subcarriers),
            ("ns", self.streams),
            ("nrs", self.rf_chains),
            ("l", self.paths),
            ("d", self.delay_taps),
            ("r", self.r),
            ("norm_passes", self.norm_passes),
        ] {
            if v == 0 {
                return Err(invalid(name, "must be at least 1".into()));
            }
        }
        if self.streams > m1.min(m2) {
            return Err(invalid("ns", format!("{} streams exceed min(m1, m2) = {}", self.streams, m1.min(m2))));
        }
        if 2 * self.streams > self.relay_antennas {
            return Err(invalid("ns", format!("2*ns = {} exceeds m_rs = {}", 2 * self.streams, self.relay_antennas)));
        }
        if self.rf_chains > self.relay_antennas {
            return Err(invalid("nrs", format!("{} RF chains exceed m_rs = {}", self.rf_chains, self.relay_antennas)));
        }
        for (name, v) in [("p_rs", self.p_rs), ("p_ue", self.p_ue)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }

    pub fn channel_params(&self) -> ChannelParams {
        ChannelParams {
            relay_antennas: self.relay_antennas,
            ms_antennas: self.ms_antennas,
            paths: self.paths,
            delay_taps: self.delay_taps,
            subcarriers: self.subcarriers,
        }
    }
}

/// `10^(-snr/10)`, the noise variance at every node for unit transmit powers.
pub fn noise_variance(snr_db: f64) -> f64 {
    libm::pow(10.0, -snr_db / 10.0)
}

/// Result of evaluating one set of relay matrices.
#[derive(Debug, Clone)]
pub struct Evaluation {
    /// Sum over both stations of the subcarrier-averaged SE.
    pub se: f64,
    /// Largest `|beta - 1|` one more normalization pass would apply.
    pub beta_drift: f64,
    /// Relay matrices after both normalization passes.
    pub relay: Vec<ComplexMatrix>,
}

/// Scales each `g` to the relay budget assuming isotropic terminal signalling.
pub fn first_pass(ch: &ChannelSet, relay: &[ComplexMatrix], p_rs: f64, p_ue: f64) -> Result<Vec<ComplexMatrix>> {
    relay
        .iter()
        .enumerate()
        .map(|(k, g)| Ok(normalize_relay_gain(g, &isotropic_relay_covariance(ch, k, p_ue), p_rs)?.0))
        .collect()
}

fn precoders(beams: &[LinkBeams; 2]) -> [&ComplexMatrix; 2] {
    [&beams[1].precoder, &beams[0].precoder]
}

/// Relay normalization, beam design and SE for arbitrarily scaled relay matrices.
pub fn evaluate_relay(cfg: &TrialConfig, ch: &ChannelSet, relay: &[ComplexMatrix]) -> Result<Evaluation> {
    if relay.len() != ch.subcarriers() {
        return Err(crate::error::dim_err(
            "evaluate_relay",
            format!("{} relay matrices for {} subcarriers", relay.len(), ch.subcarriers()),
        ));
    }
    let pass1 = first_pass(ch, relay, cfg.p_rs, cfg.p_ue)?;
    let mut sums = [0.0f64; 2];
    let mut drift = 0.0f64;
    let mut finals = Vec::with_capacity(relay.len());
    for (k, g1) in pass1.into_iter().enumerate() {
        let mut g2 = g1;
        let mut beams2 = design_link_pair(ch, &g2, k, cfg.streams, cfg.p_ue, cfg.waterfill)?;
        for _ in 1..cfg.norm_passes {
            g2 = normalize_relay_gain(&g2, &relay_covariance(ch, k, precoders(&beams2)), cfg.p_rs)?.0;
            beams2 = design_link_pair(ch, &g2, k, cfg.streams, cfg.p_ue, cfg.waterfill)?;
        }

        let cx = relay_covariance(ch, k, precoders(&beams2));
        let power = trace_re(&(&g2 * cx * g2.adjoint()));
        drift = drift.max(libm::fabs(libm::sqrt(cfg.p_rs / power) - 1.0));

        for (rx, sum) in sums.iter_mut().enumerate() {
            let h_rx = ch.uplink(rx, k);
            let h_bar = effective_channel(h_rx, &g2, ch.uplink(1 - rx, k))?;
            let phi = noise_covariance(h_rx, &g2, ch.sigma2_rs, ch.sigma2_ue);
            let b = &beams2[rx];
            *sum += spectral_efficiency_general(&h_bar, &b.precoder, &b.decoder, &phi)?;
        }
        finals.push(g2);
    }
    let prelog = if cfg.half_prelog { 1.0 } else { 2.0 };
    let se = prelog * (sums[0] + sums[1]) / relay.len() as f64;
    Ok(Evaluation { se, beta_drift: drift, relay: finals })
}

#[derive(Debug, Clone)]
pub struct MethodOutcome {
    pub method: Method,
    pub snr_db: f64,
    pub result: Result<Evaluation>,
}

impl MethodOutcome {
    /// SE, or NaN when the method failed.
    pub fn se(&self) -> f64 {
        self.result.as_ref().map_or(f64::NAN, |e| e.se)
    }
}

/// Fully-digital directions per subcarrier, computed on first use.
struct DirectionCache<'a> {
    bases: &'a [Result<NormMaxBasis>],
    cfg: &'a TrialConfig,
    slots: [Option<Result<Vec<ComplexMatrix>>>; 3],
}

impl<'a> DirectionCache<'a> {
    fn get(&mut self, method: FdMethod) -> Result<&Vec<ComplexMatrix>> {
        let slot = match method {
            FdMethod::Anomax => 0,
            FdMethod::RrAnomax { .. } => 1,
            FdMethod::ErrAnomax { .. } => 2,
        };
        let bases = self.bases;
        let entry = self.slots[slot].get_or_insert_with(|| {
            bases
                .iter()
                .map(|b| b.as_ref().map_err(Clone::clone)?.design(method))
                .collect::<Result<Vec<_>>>()
        });
        entry.as_ref().map_err(Clone::clone)
    }

    fn fd(&mut self, target: Method) -> Result<&Vec<ComplexMatrix>> {
        let m = match target {
            Method::Anomax => FdMethod::Anomax,
            Method::RrAnomax | Method::Had { target: HadTarget::RrAnomax, .. } => {
                FdMethod::RrAnomax { streams: self.cfg.streams }
            }
            Method::ErrAnomax | Method::Had { target: HadTarget::ErrAnomax, .. } => {
                FdMethod::ErrAnomax { r: self.cfg.r }
            }
        };
        self.get(m)
    }
}

fn hybrid_relay(
    cfg: &TrialConfig,
    ch: &ChannelSet,
    method: HadMethod,
    target: &[ComplexMatrix],
) -> Result<Vec<ComplexMatrix>> {
    let gt = stack_fd_tensor(&first_pass(ch, target, cfg.p_rs, cfg.p_ue)?)?;
    let had = design_had(&gt, cfg.rf_chains, method, &cfg.altmax)?;
    Ok((0..had.subcarriers()).map(|k| had.compose_unscaled(k)).collect())
}

/// Runs every method at every SNR on one channel drawn from `seed`.
///
/// Relay directions depend only on the channel and are shared across SNR
/// points. Outcomes are ordered SNR-major, then by `methods`.
pub fn run_trial(cfg: &TrialConfig, methods: &[Method], snrs_db: &[f64], seed: u64) -> Result<Vec<MethodOutcome>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = ChannelSet::generate(&mut rng, &cfg.channel_params(), 1.0, 1.0)?;
    let bases: Vec<Result<NormMaxBasis>> =
        (0..cfg.subcarriers).map(|k| NormMaxBasis::new(base.uplink(0, k), base.uplink(1, k))).collect();
    let mut cache = DirectionCache { bases: &bases, cfg, slots: [None, None, None] };

    let mut out = Vec::with_capacity(methods.len() * snrs_db.len());
    for &snr_db in snrs_db {
        let sigma2 = noise_variance(snr_db);
        let ch = base.with_noise(sigma2, sigma2);
        for &method in methods {
            let result = cache.fd(method).and_then(|dirs| match method {
                Method::Had { method: had, .. } => evaluate_relay(cfg, &ch, &hybrid_relay(cfg, &ch, had, dirs)?),
                _ => evaluate_relay(cfg, &ch, dirs),
            });
            if let Err(e) = &result {
                log::warn!("seed {seed}, {method} at {snr_db} dB failed: {e}");
            }
            out.push(MethodOutcome { method, snr_db, result });
        }
    }
    Ok(out)
}
