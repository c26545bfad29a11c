//! Seeded Monte Carlo sweeps over the configured grid.

use rayon::prelude::*;
use thiserror::Error;
use twr_core::trial::run_trial;

use crate::config::{ExperimentConfig, GridPoint};

/// One aggregated CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub method: String,
    pub snr_db: f64,
    pub ns: usize,
    pub nrs: usize,
    pub k: usize,
    pub r: usize,
    pub se_mean: f64,
    pub se_std: f64,
    /// Trials that produced a finite SE.
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("TWR_THREADS must be a positive integer, got `{0}`")]
    BadThreadCount(String),
    #[error("cannot start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

/// Worker cap from `TWR_THREADS`, if set.
pub fn threads_from_env() -> Result<Option<usize>, SweepError> {
    match std::env::var("TWR_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(SweepError::BadThreadCount(v)),
        },
        Err(_) => Ok(None),
    }
}

/// Sample mean and standard deviation of the finite entries.
pub fn mean_std(values: &[f64]) -> (f64, f64, usize) {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let n = finite.len();
    if n == 0 {
        return (f64::NAN, f64::NAN, 0);
    }
    let mean = finite.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0, 1);
    }
    let var = finite.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt(), n)
}

/// SE of every (snr, method) pair for one trial, SNR-major; NaN marks failures.
fn trial_values(cfg: &ExperimentConfig, point: GridPoint, seed: u64) -> Vec<f64> {
    let width = cfg.snr_db.len() * cfg.methods.len();
    match run_trial(&cfg.trial_config(point), &cfg.methods, &cfg.snr_db, seed) {
        Ok(outcomes) => outcomes.iter().map(|o| o.se()).collect(),
        Err(e) => {
            log::warn!("trial with seed {seed} at {point:?} failed: {e}");
            vec![f64::NAN; width]
        }
    }
}

/// Runs the sweep; results do not depend on the worker count.
pub fn run_sweep(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<Vec<SweepRow>, SweepError> {
    let points = cfg.points();
    let jobs: Vec<(usize, u64)> = (0..points.len())
        .flat_map(|p| (0..cfg.trials as u64).map(move |t| (p, t)))
        .collect();

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build()?;
    let values: Vec<Vec<f64>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(p, t)| trial_values(cfg, points[p], cfg.seed.wrapping_add(t)))
            .collect()
    });

    let mut rows = Vec::new();
    for (p, point) in points.iter().enumerate() {
        let block = &values[p * cfg.trials..(p + 1) * cfg.trials];
        for (s, &snr_db) in cfg.snr_db.iter().enumerate() {
            for (m, method) in cfg.methods.iter().enumerate() {
                let col = s * cfg.methods.len() + m;
                let samples: Vec<f64> = block.iter().map(|v| v[col]).collect();
                let (se_mean, se_std, ok) = mean_std(&samples);
                if ok < cfg.trials {
                    log::warn!("{method} at {snr_db} dB, {point:?}: {} of {} trials failed", cfg.trials - ok, cfg.trials);
                }
                rows.push(SweepRow {
                    method: method.tag().to_string(),
                    snr_db,
                    ns: point.ns,
                    nrs: point.nrs,
                    k: point.k,
                    r: point.r,
                    se_mean,
                    se_std,
                    trials: ok,
                    seed: cfg.seed,
                });
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_std_skips_nan() {
        let (m, s, n) = mean_std(&[1.0, f64::NAN, 3.0]);
        assert_eq!((m, n), (2.0, 2));
        assert!((s - 2f64.sqrt()).abs() < 1e-15);
        let (m, _, n) = mean_std(&[f64::NAN]);
        assert!(m.is_nan() && n == 0);
        assert_eq!(mean_std(&[4.0]), (4.0, 0.0, 1));
    }
}
