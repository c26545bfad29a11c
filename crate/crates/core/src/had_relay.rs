//! Hybrid analog-digital relay: `G_k = A_tx B_k A_rx^T` with unit-modulus analog
//! matrices shared by all subcarriers and small per-subcarrier baseband matrices.
//!
//! The fully-digital designs are stacked into a tensor (slice `k` = `G_k`) and
//! factored as a Tucker2 model with unit-modulus factors on modes 1 and 2.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{dim_err, Error, Result};
use crate::linalg::{hermitian_asymmetry, numerical_rank, pinv, svd, trace_re, ComplexMatrix, ComplexVector, C64};
use crate::tensor::ComplexTensor3;

/// Refinement passes run when [`AltMaxOptions::outer_refine`] is set.
const OUTER_PASSES: usize = 3;

/// Stacks per-subcarrier `M_RS x M_RS` matrices along the third mode.
pub fn stack_fd_tensor(g: &[ComplexMatrix]) -> Result<ComplexTensor3> {
    if let Some(s) = g.iter().find(|s| !s.is_square()) {
        return Err(dim_err("stack_fd_tensor", format!("slice is {:?}, expected square", s.shape())));
    }
    ComplexTensor3::from_slices(g.to_vec())
}

/// Entry-wise `u / |u|`; exact zeros map to `1`.
pub fn unit_modulus_project(m: &ComplexMatrix) -> ComplexMatrix {
    m.map(|z| {
        let r = z.norm();
        if r == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            z / r
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HadMethod {
    Hosvd,
    AltMax,
}

#[derive(Debug, Clone)]
pub struct HadRelayDesign {
    pub method: HadMethod,
    pub a_tx: ComplexMatrix,
    pub a_rx: ComplexMatrix,
    pub b: Vec<ComplexMatrix>,
    /// Per-subcarrier power scaling, `1.0` until normalized.
    pub beta: Vec<f64>,
}

impl HadRelayDesign {
    pub fn rf_chains(&self) -> usize {
        self.a_tx.ncols()
    }

    pub fn subcarriers(&self) -> usize {
        self.b.len()
    }

    /// `A_tx B_k A_rx^T`, without the power scaling.
    pub fn compose_unscaled(&self, k: usize) -> ComplexMatrix {
        &self.a_tx * &self.b[k] * self.a_rx.transpose()
    }

    /// `beta_k A_tx B_k A_rx^T`.
    pub fn compose(&self, k: usize) -> ComplexMatrix {
        self.compose_unscaled(k) * C64::from(self.beta[k])
    }

    pub fn reconstruct(&self) -> ComplexTensor3 {
        ComplexTensor3::from_slices((0..self.subcarriers()).map(|k| self.compose_unscaled(k)).collect())
            .expect("consistent slices")
    }

    /// Relative Frobenius error of the unscaled reconstruction after the best common
    /// complex rescaling, `min_c ||G - c G_hat|| / ||G||`. Always in `[0, 1]`.
    pub fn reconstruction_error(&self, target: &ComplexTensor3) -> f64 {
        scale_free_error(target, &self.reconstruct())
    }
}

pub(crate) fn scale_free_error(target: &ComplexTensor3, approx: &ComplexTensor3) -> f64 {
    let tt: f64 = target.slices().iter().map(|s| s.norm_squared()).sum();
    let aa: f64 = approx.slices().iter().map(|s| s.norm_squared()).sum();
    if tt == 0.0 {
        return 0.0;
    }
    if aa == 0.0 {
        return 1.0;
    }
    let cross: C64 = target
        .slices()
        .iter()
        .zip(approx.slices())
        .map(|(t, a)| a.dotc(t))
        .sum();
    let c = cross / aa;
    let resid: f64 = target
        .slices()
        .iter()
        .zip(approx.slices())
        .map(|(t, a)| (t - a * c).norm_squared())
        .sum();
    libm::sqrt(resid / tt).min(1.0)
}

fn check_rf_chains(gt: &ComplexTensor3, rf_chains: usize) -> Result<()> {
    let (m, _, _) = gt.dims();
    if rf_chains == 0 || rf_chains > m {
        return Err(Error::InvalidParameter {
            name: "rf_chains",
            reason: format!("need 1 <= N_RS <= M_RS = {m}, got {rf_chains}"),
        });
    }
    Ok(())
}

/// Tucker2 truncation from the HOSVD factors. With `project` the analog
/// matrices are the unit-modulus projections of the leading singular vectors;
/// without it the orthonormal factors are kept (unconstrained Tucker2).
///
/// The baseband matrices are the Tucker2 core `U1^H G_k conj(U2)` truncated
/// to the leading `rf_chains` rows and columns.
pub fn tucker2_hosvd(gt: &ComplexTensor3, rf_chains: usize, project: bool) -> Result<HadRelayDesign> {
    check_rf_chains(gt, rf_chains)?;
    let u1 = svd(&gt.mode_unfold(1)?).u.columns(0, rf_chains).into_owned();
    let u2 = svd(&gt.mode_unfold(2)?).u.columns(0, rf_chains).into_owned();
    let b: Vec<ComplexMatrix> = gt.slices().iter().map(|g| u1.adjoint() * g * u2.conjugate()).collect();
    let (a_tx, a_rx) = if project {
        (unit_modulus_project(&u1), unit_modulus_project(&u2))
    } else {
        (u1, u2)
    };
    let beta = alloc::vec![1.0; b.len()];
    Ok(HadRelayDesign { method: HadMethod::Hosvd, a_tx, a_rx, b, beta })
}

/// One-shot HOSVD-based hybrid design.
pub fn had_hosvd(gt: &ComplexTensor3, rf_chains: usize) -> Result<HadRelayDesign> {
    tucker2_hosvd(gt, rf_chains, true)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AltMaxInit {
    /// Unit-modulus projection of the leading HOSVD factor columns.
    Hosvd,
    /// Uniform random phases drawn from the given seed.
    RandomPhase { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AltMaxOptions {
    /// Relative objective change that ends a column's iterations.
    pub tol: f64,
    pub max_iter: usize,
    /// Project each column's quadratic form away from the columns fixed before it.
    pub deflation: bool,
    /// Re-solve the analog matrices against the projection onto the other factor.
    pub outer_refine: bool,
    pub init: AltMaxInit,
}

impl Default for AltMaxOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 200, deflation: true, outer_refine: false, init: AltMaxInit::Hosvd }
    }
}

#[derive(Debug, Clone)]
pub struct AnalogSolution {
    pub a: ComplexMatrix,
    /// Undeflated `trace(A^H Q A)`.
    pub objective: f64,
    /// Power iterations summed over all columns.
    pub iterations: usize,
}

/// Column-wise ascent of `trace(A^H Q A)` over unit-modulus `A`, starting from `init`.
///
/// Column `j` iterates `a <- Pi(Q_j a)`, where `Q_j = P_j Q P_j` and `P_j` projects
/// onto the orthogonal complement of the columns already fixed (or `Q_j = Q`
/// without deflation).
pub fn altmax_analog(q: &ComplexMatrix, init: &ComplexMatrix, opts: &AltMaxOptions) -> Result<AnalogSolution> {
    if !q.is_square() || init.nrows() != q.nrows() {
        return Err(dim_err(
            "altmax_analog",
            format!("Q is {:?}, initial analog matrix is {:?}", q.shape(), init.shape()),
        ));
    }
    let asym = hermitian_asymmetry(q);
    if asym > 1e-8 {
        return Err(Error::NotHermitian { asymmetry: asym });
    }
    let m = q.nrows();
    let mut a = unit_modulus_project(init);
    // Orthonormal basis of the columns fixed so far.
    let mut basis: Vec<ComplexVector> = Vec::new();
    let mut iterations = 0;

    for j in 0..a.ncols() {
        let qj = if opts.deflation && !basis.is_empty() {
            let mut p = ComplexMatrix::identity(m, m);
            for e in &basis {
                p -= e * e.adjoint();
            }
            &p * q * &p
        } else {
            q.clone()
        };
        let mut col = a.column(j).into_owned();
        let mut obj = quad_form(&qj, &col);
        for _ in 0..opts.max_iter {
            iterations += 1;
            let next = unit_modulus_vec(&(&qj * &col));
            let next_obj = quad_form(&qj, &next);
            col = next;
            let done = (next_obj - obj).abs() <= opts.tol * next_obj.abs().max(f64::MIN_POSITIVE);
            obj = next_obj;
            if done {
                break;
            }
        }
        a.set_column(j, &col);

        if opts.deflation {
            let mut r = col.clone();
            for e in &basis {
                let c = e.dotc(&r);
                r -= e * c;
            }
            let n = r.norm();
            if n > 1e-10 * col.norm() {
                basis.push(r / C64::from(n));
            }
        }
    }
    let objective = trace_re(&(a.adjoint() * q * &a));
    Ok(AnalogSolution { a, objective, iterations })
}

fn quad_form(q: &ComplexMatrix, a: &ComplexVector) -> f64 {
    a.dotc(&(q * a)).re
}

fn unit_modulus_vec(v: &ComplexVector) -> ComplexVector {
    v.map(|z| {
        let r = z.norm();
        if r == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            z / r
        }
    })
}

/// Least-squares baseband matrices for fixed analog factors:
/// `B_k = A_tx^+ G_k (A_rx^T)^+`, the minimizer of `sum_k ||G_k - A_tx B_k A_rx^T||_F^2`.
pub fn baseband_ls(gt: &ComplexTensor3, a_tx: &ComplexMatrix, a_rx: &ComplexMatrix) -> Result<Vec<ComplexMatrix>> {
    let (i, j, _) = gt.dims();
    if a_tx.nrows() != i || a_rx.nrows() != j {
        return Err(dim_err(
            "baseband_ls",
            format!("analog factors {:?}/{:?} do not match slices {i}x{j}", a_tx.shape(), a_rx.shape()),
        ));
    }
    let r_tx = numerical_rank(a_tx, 1e-12);
    let r_rx = numerical_rank(a_rx, 1e-12);
    if r_tx * r_rx < a_tx.ncols() * a_rx.ncols() {
        log::warn!(
            "analog factors are rank deficient ({r_tx}x{r_rx} < {}x{}); baseband solution is minimum-norm",
            a_tx.ncols(),
            a_rx.ncols()
        );
    }
    let left = pinv(a_tx);
    let right = pinv(&a_rx.transpose());
    Ok(gt.slices().iter().map(|g| &left * g * &right).collect())
}

fn leading_projected(unfolding: &ComplexMatrix, width: usize) -> ComplexMatrix {
    unit_modulus_project(&svd(unfolding).u.columns(0, width).into_owned())
}

fn random_phases(rows: usize, cols: usize, seed: u64) -> ComplexMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        C64::from_polar(1.0, rng.random_range(0.0..core::f64::consts::TAU))
    })
}

/// Orthogonal projector onto the column span of `a`.
fn span_projector(a: &ComplexMatrix) -> ComplexMatrix {
    let d = svd(a);
    let r = d.rank(1e-12);
    let u = d.u.columns(0, r);
    u.clone() * u.adjoint()
}

/// AltMax hybrid design: each analog matrix maximizes the energy it captures
/// from the matching unfolding, then the baseband follows by least squares.
pub fn had_altmax(gt: &ComplexTensor3, rf_chains: usize, opts: &AltMaxOptions) -> Result<HadRelayDesign> {
    check_rf_chains(gt, rf_chains)?;
    let g1 = gt.mode_unfold(1)?;
    let g2 = gt.mode_unfold(2)?;
    let (init_tx, init_rx) = match opts.init {
        AltMaxInit::Hosvd => (leading_projected(&g1, rf_chains), leading_projected(&g2, rf_chains)),
        AltMaxInit::RandomPhase { seed } => (
            random_phases(g1.nrows(), rf_chains, seed),
            random_phases(g2.nrows(), rf_chains, seed.wrapping_add(1)),
        ),
    };
    let q1 = &g1 * g1.adjoint();
    let q2 = &g2 * g2.adjoint();
    let mut a_tx = altmax_analog(&q1, &init_tx, opts)?.a;
    let mut a_rx = altmax_analog(&q2, &init_rx, opts)?.a;

    if opts.outer_refine {
        for _ in 0..OUTER_PASSES {
            let p_rx = span_projector(&a_rx).conjugate();
            let q1: ComplexMatrix = gt
                .slices()
                .iter()
                .map(|g| g * &p_rx * g.adjoint())
                .fold(ComplexMatrix::zeros(a_tx.nrows(), a_tx.nrows()), |acc, x| acc + x);
            a_tx = altmax_analog(&hermitian_part(&q1), &a_tx, opts)?.a;

            let p_tx = span_projector(&a_tx).conjugate();
            let q2: ComplexMatrix = gt
                .slices()
                .iter()
                .map(|g| g.transpose() * &p_tx * g.conjugate())
                .fold(ComplexMatrix::zeros(a_rx.nrows(), a_rx.nrows()), |acc, x| acc + x);
            a_rx = altmax_analog(&hermitian_part(&q2), &a_rx, opts)?.a;
        }
    }

    let b = baseband_ls(gt, &a_tx, &a_rx)?;
    let beta = alloc::vec![1.0; b.len()];
    Ok(HadRelayDesign { method: HadMethod::AltMax, a_tx, a_rx, b, beta })
}

fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()) * C64::from(0.5)
}

/// Builds the design selected by `method` on the stacked target tensor.
pub fn design_had(gt: &ComplexTensor3, rf_chains: usize, method: HadMethod, opts: &AltMaxOptions) -> Result<HadRelayDesign> {
    match method {
        HadMethod::Hosvd => had_hosvd(gt, rf_chains),
        HadMethod::AltMax => had_altmax(gt, rf_chains, opts),
    }
}
