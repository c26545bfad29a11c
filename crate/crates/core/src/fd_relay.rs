//! Fully-digital relay amplification matrices, designed independently per subcarrier.
//!
//! All three designs start from the stacked Kronecker matrix `K` whose squared
//! norm `||K vec(G)||^2` equals the summed squared Frobenius norms of the two
//! effective channels `H_1^T G H_2` and `H_2^T G H_1`.

use alloc::format;
use alloc::vec::Vec;

use crate::channel::ChannelSet;
use crate::error::{dim_err, Error, Result};
use crate::linalg::{khatri_rao, kron, svd, trace_re, unvec, ComplexMatrix, Svd, C64};
use crate::waterfill;

/// `K = [(H2 ⊗ H1), (H1 ⊗ H2)]^T`, of size `2 M1 M2 x M_RS^2`.
pub fn build_k(h1: &ComplexMatrix, h2: &ComplexMatrix) -> Result<ComplexMatrix> {
    if h1.nrows() != h2.nrows() {
        return Err(dim_err(
            "build_k",
            format!("relay dimension differs ({} vs {})", h1.nrows(), h2.nrows()),
        ));
    }
    let a = kron(h2, h1).transpose();
    let b = kron(h1, h2).transpose();
    let mut k = ComplexMatrix::zeros(a.nrows() + b.nrows(), a.ncols());
    k.rows_mut(0, a.nrows()).copy_from(&a);
    k.rows_mut(a.nrows(), b.nrows()).copy_from(&b);
    Ok(k)
}

/// `K` together with its SVD, shared by the three designs on one subcarrier.
#[derive(Debug, Clone)]
pub struct NormMaxBasis {
    pub k: ComplexMatrix,
    pub svd: Svd,
    relay_antennas: usize,
}

impl NormMaxBasis {
    pub fn new(h1: &ComplexMatrix, h2: &ComplexMatrix) -> Result<Self> {
        let k = build_k(h1, h2)?;
        let svd = svd(&k);
        if svd.s.first().copied().unwrap_or(0.0) == 0.0 {
            return Err(Error::Degenerate("K is all zero, channels carry no energy"));
        }
        Ok(Self { k, svd, relay_antennas: h1.nrows() })
    }

    /// Number of right singular vectors available for combination.
    pub fn available_directions(&self) -> usize {
        self.svd.s.len()
    }

    fn unvec(&self, g: &crate::linalg::ComplexVector) -> ComplexMatrix {
        unvec(g, self.relay_antennas, self.relay_antennas).expect("K has M_RS^2 columns")
    }

    /// `unvec` of the dominant right singular vector of `K`; unit Frobenius norm.
    pub fn anomax(&self) -> ComplexMatrix {
        self.unvec(&self.svd.v.column(0).into_owned())
    }

    /// Keeps the singular subspaces of the ANOMAX matrix and spreads its energy
    /// evenly over the first `2 * streams` singular directions.
    pub fn rr_anomax(&self, streams: usize) -> Result<ComplexMatrix> {
        let width = 2 * streams;
        if streams == 0 || width > self.relay_antennas {
            return Err(Error::InvalidParameter {
                name: "streams",
                reason: format!("need 1 <= 2*Ns <= M_RS, got Ns = {streams}, M_RS = {}", self.relay_antennas),
            });
        }
        let d = svd(&self.anomax());
        let flat = 1.0 / libm::sqrt(width as f64);
        let mut us = d.u.columns(0, width).into_owned();
        us.scale_mut(flat);
        Ok(us * d.v.columns(0, width).adjoint())
    }

    pub fn err_anomax(&self, r: usize) -> Result<ErrAnomax> {
        let avail = self.available_directions();
        if r == 0 || r > avail {
            return Err(Error::InvalidParameter {
                name: "r",
                reason: format!("need 1 <= R <= {avail}, got {r}"),
            });
        }
        let g_e = self.svd.v.columns(0, r).column_sum();
        let gd = svd(&self.unvec(&g_e));
        let (u_g, v_g) = (gd.u, gd.v);

        let k_tilde = &self.k * khatri_rao(&v_g.conjugate(), &u_g)?;
        let lambda_kt = svd(&k_tilde).s;
        if lambda_kt.iter().all(|&l| l == 0.0) {
            return Err(Error::Degenerate("reduced matrix K~ is all zero"));
        }

        let floors: Vec<f64> = lambda_kt
            .iter()
            .map(|&l| if l > 0.0 { 1.0 / l } else { f64::INFINITY })
            .collect();
        let wf = waterfill::fill(&floors, 1.0)?;

        let n = u_g.ncols();
        let mut lambda_star = alloc::vec![0.0; n];
        for (dst, &p) in lambda_star.iter_mut().zip(&wf.allocation) {
            *dst = p;
        }
        let mut us = u_g.clone();
        for (j, &l) in lambda_star.iter().enumerate() {
            us.column_mut(j).scale_mut(l);
        }
        let g = us * v_g.adjoint();
        Ok(ErrAnomax {
            g,
            u_g,
            v_g,
            lambda_g: gd.s,
            lambda_kt,
            lambda_star,
            water_level: wf.level,
        })
    }

    pub fn design(&self, method: FdMethod) -> Result<ComplexMatrix> {
        match method {
            FdMethod::Anomax => Ok(self.anomax()),
            FdMethod::RrAnomax { streams } => self.rr_anomax(streams),
            FdMethod::ErrAnomax { r } => Ok(self.err_anomax(r)?.g),
        }
    }
}

/// Intermediate quantities of an ERR-ANOMAX design.
#[derive(Debug, Clone)]
pub struct ErrAnomax {
    /// `U_G diag(lambda_star) V_G^H`; its Frobenius norm is `||lambda_star||_2`.
    pub g: ComplexMatrix,
    pub u_g: ComplexMatrix,
    pub v_g: ComplexMatrix,
    /// Singular values of the combined matrix `unvec(sum of the first R right singular vectors)`.
    pub lambda_g: Vec<f64>,
    /// Singular values of `K (V_G^* ⋄ U_G)`.
    pub lambda_kt: Vec<f64>,
    /// Water-filled singular values; they sum to one.
    pub lambda_star: Vec<f64>,
    /// Water level `1/mu`.
    pub water_level: f64,
}

pub fn anomax(h1: &ComplexMatrix, h2: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(NormMaxBasis::new(h1, h2)?.anomax())
}

pub fn rr_anomax(h1: &ComplexMatrix, h2: &ComplexMatrix, streams: usize) -> Result<ComplexMatrix> {
    NormMaxBasis::new(h1, h2)?.rr_anomax(streams)
}

pub fn err_anomax(h1: &ComplexMatrix, h2: &ComplexMatrix, r: usize) -> Result<ComplexMatrix> {
    Ok(NormMaxBasis::new(h1, h2)?.err_anomax(r)?.g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FdMethod {
    Anomax,
    RrAnomax { streams: usize },
    ErrAnomax { r: usize },
}

/// Per-subcarrier fully-digital design; `beta[k]` is the power scaling already applied to `g[k]`.
#[derive(Debug, Clone)]
pub struct FdRelayDesign {
    pub method: FdMethod,
    pub g: Vec<ComplexMatrix>,
    pub beta: Vec<f64>,
}

impl FdRelayDesign {
    /// Unnormalized designs for every subcarrier of `ch`.
    pub fn design(ch: &ChannelSet, method: FdMethod) -> Result<Self> {
        let g = (0..ch.subcarriers())
            .map(|k| NormMaxBasis::new(ch.uplink(0, k), ch.uplink(1, k))?.design(method))
            .collect::<Result<Vec<_>>>()?;
        let beta = alloc::vec![1.0; g.len()];
        Ok(Self { method, g, beta })
    }
}

/// Scales `g` so that `trace(g cx g^H) = p_rs`; returns the scaled matrix and the factor.
pub fn normalize_relay_gain(g: &ComplexMatrix, cx: &ComplexMatrix, p_rs: f64) -> Result<(ComplexMatrix, f64)> {
    if cx.shape() != (g.ncols(), g.ncols()) {
        return Err(dim_err(
            "normalize_relay_gain",
            format!("covariance is {:?}, relay matrix is {:?}", cx.shape(), g.shape()),
        ));
    }
    let power = trace_re(&(g * cx * g.adjoint()));
    if !(power > 0.0) {
        return Err(Error::ZeroPower);
    }
    let beta = libm::sqrt(p_rs / power);
    Ok((g * C64::from(beta), beta))
}

/// Relay receive covariance when each MS spreads `p_ue` evenly over its antennas.
pub fn isotropic_relay_covariance(ch: &ChannelSet, k: usize, p_ue: f64) -> ComplexMatrix {
    let m = ch.relay_antennas();
    let mut cx = ComplexMatrix::identity(m, m) * C64::from(ch.sigma2_rs);
    for ms in 0..2 {
        let h = ch.uplink(ms, k);
        cx += h * h.adjoint() * C64::from(p_ue / h.ncols() as f64);
    }
    cx
}

/// Relay receive covariance `sum_l H_l F_l F_l^H H_l^H + sigma_RS^2 I` for given precoders.
pub fn relay_covariance(ch: &ChannelSet, k: usize, precoders: [&ComplexMatrix; 2]) -> ComplexMatrix {
    let m = ch.relay_antennas();
    let mut cx = ComplexMatrix::identity(m, m) * C64::from(ch.sigma2_rs);
    for (ms, f) in precoders.iter().enumerate() {
        let hf = ch.uplink(ms, k) * *f;
        cx += &hf * hf.adjoint();
    }
    cx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::complex_gaussian;
    use crate::linalg::{numerical_rank, vectorize, ComplexVector};
    use crate::testutil::{rand_hpd, rand_matrix, rel_err};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn objective(h1: &ComplexMatrix, h2: &ComplexMatrix, g: &ComplexMatrix) -> f64 {
        (h1.transpose() * g * h2).norm_squared() + (h2.transpose() * g * h1).norm_squared()
    }

    /// Orthogonal projector onto the column span of `a`.
    fn projector(a: &ComplexMatrix) -> ComplexMatrix {
        let q = svd(a);
        let r = q.rank(1e-10);
        let u = q.u.columns(0, r);
        &u * u.adjoint()
    }

    #[test]
    fn k_for_scalars() {
        let h1 = ComplexMatrix::from_element(1, 1, C64::new(1.0, 2.0));
        let h2 = ComplexMatrix::from_element(1, 1, C64::new(-0.5, 0.3));
        let k = build_k(&h1, &h2).unwrap();
        let p = h1[(0, 0)] * h2[(0, 0)];
        assert_eq!(k.shape(), (2, 1));
        assert!((k[(0, 0)] - p).norm() < 1e-15 && (k[(1, 0)] - p).norm() < 1e-15);
    }

    #[test]
    fn k_norm_equals_effective_channel_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let h1 = rand_matrix(&mut rng, 3, 2);
        let h2 = rand_matrix(&mut rng, 3, 2);
        let g = rand_matrix(&mut rng, 3, 3);
        let k = build_k(&h1, &h2).unwrap();
        assert_eq!(k.shape(), (8, 9));
        let lhs = (&k * vectorize(&g)).norm_squared();
        let rhs = objective(&h1, &h2, &g);
        assert!((lhs - rhs).abs() <= 1e-12 * rhs);
    }

    #[test]
    fn k_degenerate_and_mismatched() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let h2 = rand_matrix(&mut rng, 3, 2);
        let k = build_k(&ComplexMatrix::zeros(3, 2), &h2).unwrap();
        assert_eq!(k.norm(), 0.0);
        assert!(anomax(&ComplexMatrix::zeros(3, 2), &h2).is_err());
        assert!(build_k(&rand_matrix(&mut rng, 4, 2), &h2).is_err());
    }

    #[test]
    fn anomax_scalar() {
        let h1 = ComplexMatrix::from_element(1, 1, C64::new(1.0, 2.0));
        let h2 = ComplexMatrix::from_element(1, 1, C64::new(-0.5, 0.3));
        let g = anomax(&h1, &h2).unwrap();
        assert!((g[(0, 0)].norm() - 1.0).abs() < 1e-14);
        let expect = 2.0 * (h1[(0, 0)] * h2[(0, 0)]).norm_sqr();
        assert!((objective(&h1, &h2, &g) - expect).abs() < 1e-12);
    }

    #[test]
    fn anomax_attains_top_singular_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..10 {
            let h1 = rand_matrix(&mut rng, 6, 3);
            let h2 = rand_matrix(&mut rng, 6, 2);
            let b = NormMaxBasis::new(&h1, &h2).unwrap();
            let g = b.anomax();
            assert!((g.norm() - 1.0).abs() < 1e-12);
            let obj = (&b.k * vectorize(&g)).norm_squared();
            let s1 = b.svd.s[0] * b.svd.s[0];
            assert!((obj - s1).abs() <= 1e-10 * s1);
        }
    }

    #[test]
    fn anomax_beats_random_designs() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let h1 = rand_matrix(&mut rng, 4, 2);
        let h2 = rand_matrix(&mut rng, 4, 2);
        let k = build_k(&h1, &h2).unwrap();
        let best = (&k * vectorize(&anomax(&h1, &h2).unwrap())).norm();
        for _ in 0..1000 {
            let g = rand_matrix(&mut rng, 4, 4);
            let g = &g / C64::from(g.norm());
            assert!((&k * vectorize(&g)).norm() <= best * (1.0 + 1e-12));
        }
    }

    #[test]
    fn anomax_on_rank_one_channels() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let u1 = rand_matrix(&mut rng, 6, 1);
        let u2 = rand_matrix(&mut rng, 6, 1);
        let v1 = rand_matrix(&mut rng, 2, 1);
        let v2 = rand_matrix(&mut rng, 2, 1);
        // Distinct relay-side directions: the optimum mixes u1* u2^H and u2* u1^H.
        let g = anomax(&(&u1 * v1.transpose()), &(&u2 * v2.transpose())).unwrap();
        assert_eq!(numerical_rank(&g, 1e-8), 2);
        // Shared relay-side direction collapses it to rank one.
        let g = anomax(&(&u1 * v1.transpose()), &(&u1 * v2.transpose())).unwrap();
        assert_eq!(numerical_rank(&g, 1e-8), 1);
    }

    #[test]
    fn rr_flat_profile_when_full_width() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let h1 = rand_matrix(&mut rng, 2, 2);
        let h2 = rand_matrix(&mut rng, 2, 2);
        let g = rr_anomax(&h1, &h2, 1).unwrap();
        let s = svd(&g).s;
        assert!(s.iter().all(|&x| (x - 1.0 / libm::sqrt(2.0)).abs() < 1e-12));
        assert!(rr_anomax(&h1, &h2, 2).is_err());
        assert!(rr_anomax(&h1, &h2, 0).is_err());
    }

    #[test]
    fn rr_preserves_anomax_subspaces() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        for ns in 1..=4 {
            let h1 = rand_matrix(&mut rng, 12, 4);
            let h2 = rand_matrix(&mut rng, 12, 4);
            let b = NormMaxBasis::new(&h1, &h2).unwrap();
            let g = b.rr_anomax(ns).unwrap();
            assert!((g.norm() - 1.0).abs() < 1e-12);
            assert_eq!(numerical_rank(&g, 1e-8), 2 * ns);
            let d = svd(&b.anomax());
            let left = d.u.columns(0, 2 * ns).into_owned();
            let right = d.v.columns(0, 2 * ns).into_owned();
            assert!((projector(&g) - projector(&left)).norm() < 1e-8);
            assert!((projector(&g.adjoint()) - projector(&right)).norm() < 1e-8);
        }
    }

    #[test]
    fn err_scalar_matches_anomax() {
        let h1 = ComplexMatrix::from_element(1, 1, C64::new(0.2, -1.0));
        let h2 = ComplexMatrix::from_element(1, 1, C64::new(1.5, 0.4));
        let e = err_anomax(&h1, &h2, 1).unwrap();
        let a = anomax(&h1, &h2).unwrap();
        assert!((e[(0, 0)].norm() - a[(0, 0)].norm()).abs() < 1e-12);
    }

    #[test]
    fn err_keeps_singular_vectors_and_water_fills() {
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        for _ in 0..5 {
            let h1 = rand_matrix(&mut rng, 4, 2);
            let h2 = rand_matrix(&mut rng, 4, 2);
            let b = NormMaxBasis::new(&h1, &h2).unwrap();
            let e = b.err_anomax(2).unwrap();

            // U_G^H G V_G = diag(lambda_star): singular vectors are the fixed U_G, V_G.
            let core = e.u_g.adjoint() * &e.g * &e.v_g;
            let diag = ComplexMatrix::from_diagonal(&ComplexVector::from_iterator(
                e.lambda_star.len(),
                e.lambda_star.iter().map(|&x| C64::from(x)),
            ));
            assert!((core - diag).norm() < 1e-10);

            let total: f64 = e.lambda_star.iter().sum();
            assert!((total - 1.0).abs() <= 1e-9);
            for (j, &l) in e.lambda_star.iter().enumerate() {
                let floor = e.lambda_kt.get(j).map_or(f64::INFINITY, |&x| 1.0 / x);
                if l > 0.0 {
                    assert!(e.water_level > floor);
                    assert!((l - (e.water_level - floor)).abs() < 1e-12);
                } else {
                    assert!(e.water_level <= floor + 1e-12);
                }
            }
            let frob: f64 = libm::sqrt(e.lambda_star.iter().map(|x| x * x).sum::<f64>());
            assert!((e.g.norm() - frob).abs() < 1e-12);
        }
    }

    #[test]
    fn err_combination_uses_unweighted_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(28);
        let h1 = rand_matrix(&mut rng, 4, 2);
        let h2 = rand_matrix(&mut rng, 4, 2);
        let b = NormMaxBasis::new(&h1, &h2).unwrap();
        let e = b.err_anomax(3).unwrap();
        let g_e = b.svd.v.column(0) + b.svd.v.column(1) + b.svd.v.column(2);
        let s = svd(&unvec(&g_e, 4, 4).unwrap()).s;
        for (a, x) in s.iter().zip(&e.lambda_g) {
            assert!((a - x).abs() < 1e-12);
        }
        assert!(b.err_anomax(0).is_err());
        assert!(b.err_anomax(b.available_directions() + 1).is_err());
    }

    #[test]
    fn err_rank_not_below_anomax() {
        // ANOMAX's trailing singular values sit between 1e-8 and 1e-2 of the
        // largest, so the comparison uses an effective-rank threshold.
        let params = crate::channel::ChannelParams { relay_antennas: 16, ms_antennas: [4, 4], paths: 6, delay_taps: 1, subcarriers: 1 };
        for seed in 0..50 {
            let ch = ChannelSet::generate(&mut ChaCha8Rng::seed_from_u64(seed), &params, 0.1, 0.1).unwrap();
            let b = NormMaxBasis::new(ch.uplink(0, 0), ch.uplink(1, 0)).unwrap();
            let ra = numerical_rank(&b.anomax(), 1e-2);
            let re = numerical_rank(&b.err_anomax(2).unwrap().g, 1e-2);
            assert!(re >= ra, "seed {seed}: ERR rank {re} < ANOMAX rank {ra}");
        }
    }

    #[test]
    fn direction_invariant_under_channel_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let h1 = rand_matrix(&mut rng, 6, 2);
        let h2 = rand_matrix(&mut rng, 6, 2);
        let c = C64::from(3.7);
        let cx = ComplexMatrix::identity(6, 6);
        for method in [FdMethod::Anomax, FdMethod::RrAnomax { streams: 2 }] {
            let a = NormMaxBasis::new(&h1, &h2).unwrap().design(method).unwrap();
            let b = NormMaxBasis::new(&(&h1 * c), &(&h2 * c)).unwrap().design(method).unwrap();
            let (a, _) = normalize_relay_gain(&a, &cx, 1.0).unwrap();
            let (b, _) = normalize_relay_gain(&b, &cx, 1.0).unwrap();
            assert!(rel_err(&a, &b) < 1e-8, "{method:?}");
        }
    }

    #[test]
    fn normalization_examples() {
        let (g, beta) = normalize_relay_gain(&ComplexMatrix::identity(2, 2), &ComplexMatrix::identity(2, 2), 1.0).unwrap();
        assert!((beta - 1.0 / libm::sqrt(2.0)).abs() < 1e-15);
        assert!((trace_re(&(&g * g.adjoint())) - 1.0).abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let cx = rand_hpd(&mut rng, 4);
        let (g, _) = normalize_relay_gain(&rand_matrix(&mut rng, 4, 4), &cx, 2.5).unwrap();
        assert!((trace_re(&(&g * &cx * g.adjoint())) - 2.5).abs() < 1e-9 * 2.5);
        let (_, again) = normalize_relay_gain(&g, &cx, 2.5).unwrap();
        assert!((again - 1.0).abs() < 1e-12);

        assert_eq!(normalize_relay_gain(&ComplexMatrix::zeros(2, 2), &ComplexMatrix::identity(2, 2), 1.0), Err(Error::ZeroPower));
    }

    #[test]
    fn normalized_power_by_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let cx = rand_hpd(&mut rng, 3);
        let (g, _) = normalize_relay_gain(&rand_matrix(&mut rng, 3, 3), &cx, 1.0).unwrap();
        let l = cx.clone().cholesky().unwrap().unpack();
        let n = 10_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let z = ComplexVector::from_fn(3, |_, _| complex_gaussian(&mut rng, 1.0));
            acc += (&g * (&l * z)).norm_squared();
        }
        assert!((acc / n as f64 - 1.0).abs() < 0.03);
    }

    #[test]
    fn relay_covariances() {
        let params = crate::channel::ChannelParams { relay_antennas: 6, ms_antennas: [2, 2], paths: 3, delay_taps: 1, subcarriers: 1 };
        let ch = ChannelSet::generate(&mut ChaCha8Rng::seed_from_u64(33), &params, 0.5, 0.5).unwrap();
        let iso = isotropic_relay_covariance(&ch, 0, 1.0);
        let f = ComplexMatrix::identity(2, 2) * C64::from(libm::sqrt(0.5));
        let same = relay_covariance(&ch, 0, [&f, &f]);
        assert!(rel_err(&iso, &same) < 1e-14);
    }
}
