//! Linear combiners at the fusion center and exact SINR evaluation.
//!
//! Three banks are supported: maximum-ratio combining (`v_j = w_j`),
//! zero-forcing (`V = W (W^H W)^{-1}`, nulling every other object and
//! clutter), and the linear MMSE solution
//! `v_j = (sum_i delta_i Q_i w_i w_i^H + Sigma_n)^{-1} w_j`, which is
//! SINR-optimal among linear receivers. The SINR of object `j` is the ratio
//! of the desired quadratic form to interference plus the two noise terms;
//! for MRC the generic quadratic forms are cross-validated against the
//! per-sensor closed-form sums on every call.

use nalgebra::linalg::SymmetricEigen;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::vmaci::VmaciModel;

/// Relative gate below which singular values of `W` count as zero.
const RANK_GATE: f64 = 1e-12;
/// Relative agreement required between the quadratic-form and closed-form
/// MRC evaluations.
const MRC_CROSS_CHECK: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum ReceiverError {
    #[error("zero-forcing needs KR >= N; got KR = {kr}, N = {n}")]
    TooFewDimensions { kr: usize, n: usize },
    #[error("equivalent channel matrix is rank deficient: rank {rank} of {n} columns")]
    RankDeficient { rank: usize, n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombinerKind {
    Mrc,
    Zf,
    Mmse,
}

/// One combining vector per target, stacked as columns.
#[derive(Debug, Clone)]
pub struct CombinerBank {
    pub v: DMatrix<Complex64>,
    pub kind: CombinerKind,
}

/// Variance decomposition of one target's post-combining output.
#[derive(Debug, Clone, Copy)]
pub struct SinrComponents {
    pub desired: f64,
    pub interference: f64,
    pub sensor_noise: f64,
    pub fc_noise: f64,
}

impl SinrComponents {
    pub fn sinr(&self) -> f64 {
        self.desired / (self.interference + self.sensor_noise + self.fc_noise)
    }

    /// Mutual information `log2(1 + sinr)` of the extraction link.
    pub fn mutual_information(&self) -> f64 {
        (1.0 + self.sinr()).log2()
    }
}

/// Per-target SINR report.
#[derive(Debug, Clone)]
pub struct SinrReport {
    pub per_target: Vec<SinrComponents>,
}

impl SinrReport {
    pub fn sinr_values(&self) -> Vec<f64> {
        self.per_target.iter().map(|c| c.sinr()).collect()
    }
}

/// Maximum-ratio combining: the combiner is the equivalent channel itself.
pub fn mrc(model: &VmaciModel) -> CombinerBank {
    let v = DMatrix::from_fn(model.w.nrows(), model.n_targets, |r, c| model.w[(r, c)]);
    CombinerBank {
        v,
        kind: CombinerKind::Mrc,
    }
}

/// Zero-forcing over all N columns: `V = W (W^H W)^{-1}`, restricted to the
/// target columns. Fails when `W` is rank deficient under the singular-value
/// gate.
pub fn zf(model: &VmaciModel) -> Result<CombinerBank, ReceiverError> {
    let n = model.n_objects();
    let kr = model.w.nrows();
    if kr < n {
        return Err(ReceiverError::TooFewDimensions { kr, n });
    }
    let gram = model.w.adjoint() * &model.w;
    let eig = SymmetricEigen::new(gram.clone());
    let max_ev = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let gate = (RANK_GATE * max_ev.sqrt()).powi(2);
    let rank = eig.eigenvalues.iter().filter(|ev| **ev > gate).count();
    if rank < n {
        return Err(ReceiverError::RankDeficient { rank, n });
    }
    let inv = gram
        .cholesky()
        .ok_or(ReceiverError::RankDeficient { rank, n })?
        .inverse();
    let v_full = &model.w * inv;
    let v = DMatrix::from_fn(kr, model.n_targets, |r, c| v_full[(r, c)]);
    Ok(CombinerBank {
        v,
        kind: CombinerKind::Zf,
    })
}

/// Linear MMSE bank; the covariance is strictly positive definite because the
/// fusion-center noise floor is positive, so the solve cannot fail.
pub fn mmse(model: &VmaciModel) -> CombinerBank {
    let kr = model.w.nrows();
    let mut phi = model.noise_cov.clone();
    for i in 0..model.n_objects() {
        let scale = model.delta.0[i] * model.moments[i];
        if scale > 0.0 {
            let wi = model.w.column(i);
            for p in 0..kr {
                for q in 0..kr {
                    phi[(p, q)] += Complex64::new(scale, 0.0) * wi[p] * wi[q].conj();
                }
            }
        }
    }
    let chol = phi
        .cholesky()
        .expect("MMSE covariance is positive definite by construction");
    let mut v = DMatrix::zeros(kr, model.n_targets);
    for j in 0..model.n_targets {
        let col = chol.solve(&DVector::from_column_slice(model.w.column(j).as_slice()));
        v.set_column(j, &col);
    }
    CombinerBank {
        v,
        kind: CombinerKind::Mmse,
    }
}

/// Evaluates the exact SINR decomposition of every target under the given
/// bank. For MRC banks, the quadratic forms are additionally checked against
/// the closed-form per-sensor sums.
pub fn sinr(model: &VmaciModel, bank: &CombinerBank) -> SinrReport {
    assert_eq!(bank.v.nrows(), model.w.nrows(), "combiner length");
    assert_eq!(bank.v.ncols(), model.n_targets, "one combiner per target");
    let sigma2 = model.noise_variance;
    let mut per_target = Vec::with_capacity(model.n_targets);
    for j in 0..model.n_targets {
        let v = bank.v.column(j);
        let mut desired = 0.0;
        let mut interference = 0.0;
        for i in 0..model.n_objects() {
            let quad = v.dotc(&model.w.column(i)).norm_sqr();
            let power = model.delta.0[i] * model.moments[i] * quad;
            if i == j {
                desired = power;
            } else {
                interference += power;
            }
        }
        let total_noise = (v.adjoint() * &model.noise_cov * v)[(0, 0)].re;
        let fc_noise = sigma2 * v.norm_squared();
        let sensor_noise = (total_noise - fc_noise).max(0.0);
        let components = SinrComponents {
            desired,
            interference,
            sensor_noise,
            fc_noise,
        };
        if bank.kind == CombinerKind::Mrc {
            cross_check_mrc(model, j, &components);
        }
        per_target.push(components);
    }
    SinrReport { per_target }
}

/// Closed-form MRC variance terms computed from the constituent channels,
/// independent of the stacked `w` representation.
pub fn mrc_closed_forms(model: &VmaciModel, target: usize) -> SinrComponents {
    let k = model.n_sensors();
    let alpha = model.alpha.as_slice();
    let sigma2 = model.noise_variance;
    let g = &model.channels.g;
    let f_norm_sq: Vec<f64> = model.channels.f.iter().map(|f| f.norm_squared()).collect();

    let s1: f64 = (0..k)
        .map(|kk| alpha[kk] * g[(target, kk)].norm_sqr() * f_norm_sq[kk])
        .sum();
    let desired = model.delta.0[target] * model.moments[target] * s1 * s1;

    let mut interference = 0.0;
    for i in 0..model.n_objects() {
        if i == target {
            continue;
        }
        let inner: Complex64 = (0..k)
            .map(|kk| {
                Complex64::new(alpha[kk] * f_norm_sq[kk], 0.0)
                    * g[(target, kk)].conj()
                    * g[(i, kk)]
            })
            .sum();
        interference += model.delta.0[i] * model.moments[i] * inner.norm_sqr();
    }

    let sensor_noise: f64 = (0..k)
        .map(|kk| {
            sigma2 * alpha[kk] * alpha[kk] * g[(target, kk)].norm_sqr() * f_norm_sq[kk] * f_norm_sq[kk]
        })
        .sum();
    let fc_noise = sigma2 * s1;

    SinrComponents {
        desired,
        interference,
        sensor_noise,
        fc_noise,
    }
}

fn cross_check_mrc(model: &VmaciModel, target: usize, quad: &SinrComponents) {
    let closed = mrc_closed_forms(model, target);
    let check = |name: &str, a: f64, b: f64| {
        let scale = a.abs().max(b.abs());
        assert!(
            (a - b).abs() <= MRC_CROSS_CHECK * scale.max(1e-300),
            "MRC {name} mismatch for target {target}: quadratic {a:e} vs closed form {b:e}"
        );
    };
    check("desired", quad.desired, closed.desired);
    check("interference", quad.interference, closed.interference);
    check("sensor noise", quad.sensor_noise, closed.sensor_noise);
    check("fc noise", quad.fc_noise, closed.fc_noise);
}
