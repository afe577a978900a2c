//! Virtual multiple-access channel assembly.
//!
//! The K amplify-and-forward sensors transmit in separate time slots, so the
//! fusion center's R antennas observe K stacked snapshots: a virtual array of
//! `K*R` antennas over a single instant. Object `i` arrives over the stacked
//! equivalent channel whose k-th block is `sqrt(alpha_k) * g_ik * f_k`, and
//! the equivalent noise covariance is block-diagonal,
//! `alpha_k * sigma^2 * f_k f_k^H + sigma_fc^2 * I_R` per block. No time
//! index survives in the data model.

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::scene::ChannelSet;
use crate::txmodel::DeltaProfile;

#[derive(Debug, Error)]
pub enum VmaciError {
    #[error("amplification {index} must be positive, got {value}")]
    NonPositiveAmplification { index: usize, value: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("column {0} of the equivalent channel matrix is zero")]
    ZeroColumn(usize),
    #[error("coherence needs at least two columns")]
    TooFewColumns,
}

/// Sensor amplification factors, all strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplificationVector(Vec<f64>);

impl AmplificationVector {
    pub fn new(alpha: Vec<f64>) -> Result<Self, VmaciError> {
        for (index, &value) in alpha.iter().enumerate() {
            if value <= 0.0 || !value.is_finite() {
                return Err(VmaciError::NonPositiveAmplification { index, value });
            }
        }
        Ok(Self(alpha))
    }

    pub fn uniform(value: f64, k: usize) -> Self {
        Self::new(vec![value; k]).expect("uniform amplification must be positive")
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Assembled virtual channel: stacked equivalent channels, equivalent noise
/// covariance, and the power/moment data every receiver and optimizer needs.
/// The constituent channels and amplifications are kept so the closed-form
/// maximum-ratio expressions can be evaluated independently of `w`.
#[derive(Debug, Clone)]
pub struct VmaciModel {
    pub w: DMatrix<Complex64>,
    pub noise_cov: DMatrix<Complex64>,
    pub delta: DeltaProfile,
    pub moments: Vec<f64>,
    pub alpha: AmplificationVector,
    pub channels: ChannelSet,
    pub noise_variance: f64,
    pub n_targets: usize,
}

impl VmaciModel {
    pub fn n_objects(&self) -> usize {
        self.w.ncols()
    }

    pub fn n_sensors(&self) -> usize {
        self.alpha.as_slice().len()
    }

    pub fn fusion_antennas(&self) -> usize {
        self.w.nrows() / self.n_sensors()
    }

    /// `b_jk = |g_jk|^2 ||f_k||^2`, the per-sensor gain products used by the
    /// closed-form SINR terms.
    pub fn gain_product(&self, object: usize, sensor: usize) -> f64 {
        self.channels.g[(object, sensor)].norm_sqr() * self.channels.f[sensor].norm_squared()
    }
}

/// Stacks the equivalent channel matrix and noise covariance for given
/// amplifications, delta profile and second moments.
pub fn assemble(
    channels: &ChannelSet,
    alpha: &AmplificationVector,
    delta: &DeltaProfile,
    moments: &[f64],
    noise_variance: f64,
    n_targets: usize,
) -> Result<VmaciModel, VmaciError> {
    let n = channels.n_objects();
    let k = channels.n_sensors();
    if alpha.as_slice().len() != k {
        return Err(VmaciError::Dimension(format!(
            "{} amplifications for {} sensors",
            alpha.as_slice().len(),
            k
        )));
    }
    if delta.0.len() != n || moments.len() != n {
        return Err(VmaciError::Dimension(format!(
            "delta/moments length {}/{} for {} objects",
            delta.0.len(),
            moments.len(),
            n
        )));
    }
    if n_targets == 0 || n_targets > n {
        return Err(VmaciError::Dimension(format!(
            "n_targets {n_targets} out of range for {n} objects"
        )));
    }
    let r = channels.f.first().map(|f| f.len()).unwrap_or(0);
    if channels.f.iter().any(|f| f.len() != r) || r == 0 {
        return Err(VmaciError::Dimension(
            "fusion channels must share a positive length".into(),
        ));
    }

    let mut w = DMatrix::zeros(k * r, n);
    for i in 0..n {
        for kk in 0..k {
            let scale = alpha.as_slice()[kk].sqrt() * channels.g[(i, kk)];
            for rr in 0..r {
                w[(kk * r + rr, i)] = scale * channels.f[kk][rr];
            }
        }
    }

    let mut noise_cov = DMatrix::zeros(k * r, k * r);
    for kk in 0..k {
        let f = &channels.f[kk];
        let a = alpha.as_slice()[kk];
        for p in 0..r {
            for q in 0..r {
                noise_cov[(kk * r + p, kk * r + q)] =
                    a * noise_variance * f[p] * f[q].conj();
            }
        }
        for p in 0..r {
            noise_cov[(kk * r + p, kk * r + p)] += Complex64::new(noise_variance, 0.0);
        }
    }

    Ok(VmaciModel {
        w,
        noise_cov,
        delta: delta.clone(),
        moments: moments.to_vec(),
        alpha: alpha.clone(),
        channels: channels.clone(),
        noise_variance,
        n_targets,
    })
}

/// Largest normalized inner product between distinct columns of `w`.
pub fn coherence(w: &DMatrix<Complex64>) -> Result<f64, VmaciError> {
    let n = w.ncols();
    if n < 2 {
        return Err(VmaciError::TooFewColumns);
    }
    let norms: Vec<f64> = (0..n).map(|i| w.column(i).norm()).collect();
    for (i, nm) in norms.iter().enumerate() {
        if *nm == 0.0 {
            return Err(VmaciError::ZeroColumn(i));
        }
    }
    let mut mu: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let ip = w.column(i).dotc(&w.column(j)).norm();
            mu = mu.max(ip / (norms[i] * norms[j]));
        }
    }
    Ok(mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn scalar_channels(g: &[[f64; 2]], f: f64, n: usize, k: usize) -> ChannelSet {
        let gm = DMatrix::from_fn(n, k, |i, j| Complex64::new(g[i][j], 0.0));
        ChannelSet {
            g: gm,
            f: (0..k)
                .map(|_| DVector::from_vec(vec![Complex64::new(f, 0.0)]))
                .collect(),
        }
    }

    #[test]
    fn scalar_assembly() {
        // K=1, R=1, alpha=1, g=1, f=1 -> w = [1], noise_cov = [2 sigma^2]
        let channels = ChannelSet {
            g: DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0)),
            f: vec![DVector::from_element(1, Complex64::new(1.0, 0.0))],
        };
        let model = assemble(
            &channels,
            &AmplificationVector::uniform(1.0, 1),
            &DeltaProfile(vec![1.0]),
            &[1.0],
            0.5,
            1,
        )
        .unwrap();
        assert!((model.w[(0, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((model.noise_cov[(0, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn doubling_alpha_scales_blocks() {
        let channels = scalar_channels(&[[1.0, 2.0], [0.5, -1.0]], 1.0, 2, 2);
        let delta = DeltaProfile(vec![1.0, 1.0]);
        let m1 = assemble(
            &channels,
            &AmplificationVector::new(vec![1.0, 1.0]).unwrap(),
            &delta,
            &[1.0, 1.0],
            0.5,
            1,
        )
        .unwrap();
        let m2 = assemble(
            &channels,
            &AmplificationVector::new(vec![2.0, 1.0]).unwrap(),
            &delta,
            &[1.0, 1.0],
            0.5,
            1,
        )
        .unwrap();
        // block 0 of every column scales by sqrt(2)
        for i in 0..2 {
            assert!(
                (m2.w[(0, i)] - m1.w[(0, i)] * Complex64::new(2.0f64.sqrt(), 0.0)).norm() < 1e-12
            );
            assert!((m2.w[(1, i)] - m1.w[(1, i)]).norm() < 1e-15);
        }
        // sensor part of noise block 0 doubles: 2*a*sigma^2 + sigma^2
        assert!((m2.noise_cov[(0, 0)].re - (2.0 * 0.5 + 0.5)).abs() < 1e-12);
        assert!((m1.noise_cov[(0, 0)].re - (0.5 + 0.5)).abs() < 1e-12);
    }

    #[test]
    fn vanishing_alpha_leaves_white_noise() {
        let channels = scalar_channels(&[[1.0, 1.0], [1.0, 1.0]], 1.0, 2, 2);
        let model = assemble(
            &channels,
            &AmplificationVector::new(vec![1e-12, 1e-12]).unwrap(),
            &DeltaProfile(vec![1.0, 1.0]),
            &[1.0, 1.0],
            0.5,
            1,
        )
        .unwrap();
        for i in 0..2 {
            assert!((model.noise_cov[(i, i)].re - 0.5).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_alpha_rejected() {
        assert!(matches!(
            AmplificationVector::new(vec![1.0, 0.0]),
            Err(VmaciError::NonPositiveAmplification { index: 1, .. })
        ));
    }

    #[test]
    fn column_norm_identity() {
        // ||w_i||^2 = sum_k alpha_k |g_ik|^2 ||f_k||^2
        let channels = scalar_channels(&[[1.0, 2.0], [0.5, -1.0]], 3.0, 2, 2);
        let alpha = AmplificationVector::new(vec![0.7, 1.9]).unwrap();
        let model = assemble(
            &channels,
            &alpha,
            &DeltaProfile(vec![1.0, 1.0]),
            &[1.0, 1.0],
            0.5,
            1,
        )
        .unwrap();
        for i in 0..2 {
            let direct: f64 = (0..2)
                .map(|k| alpha.as_slice()[k] * model.gain_product(i, k))
                .sum();
            assert!((model.w.column(i).norm_squared() - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn coherence_extremes() {
        let orth = DMatrix::from_fn(4, 2, |r, c| {
            if r == c {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        assert!(coherence(&orth).unwrap() < 1e-15);

        let mut same = DMatrix::zeros(3, 2);
        for r in 0..3 {
            same[(r, 0)] = Complex64::new(1.0, r as f64);
            same[(r, 1)] = same[(r, 0)] * Complex64::new(0.0, 2.0);
        }
        assert!((coherence(&same).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coherence_degenerate_inputs() {
        let single = DMatrix::from_element(3, 1, Complex64::new(1.0, 0.0));
        assert!(matches!(coherence(&single), Err(VmaciError::TooFewColumns)));
        let mut with_zero = DMatrix::from_element(3, 2, Complex64::new(1.0, 0.0));
        with_zero.column_mut(1).fill(Complex64::new(0.0, 0.0));
        assert!(matches!(
            coherence(&with_zero),
            Err(VmaciError::ZeroColumn(1))
        ));
    }

    #[test]
    fn noise_cov_is_hermitian_psd() {
        let channels = ChannelSet {
            g: DMatrix::from_fn(2, 2, |i, j| Complex64::new(1.0 + i as f64, j as f64)),
            f: vec![
                DVector::from_vec(vec![Complex64::new(1.0, 0.5), Complex64::new(-0.3, 0.1)]),
                DVector::from_vec(vec![Complex64::new(0.2, -1.0), Complex64::new(1.1, 0.0)]),
            ],
        };
        let model = assemble(
            &channels,
            &AmplificationVector::new(vec![0.4, 1.3]).unwrap(),
            &DeltaProfile(vec![1.0, 1.0]),
            &[1.0, 1.0],
            0.5,
            1,
        )
        .unwrap();
        let diff = (&model.noise_cov - model.noise_cov.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0f64, f64::max);
        assert!(diff < 1e-14);
        // eigenvalues of the Hermitian covariance are >= sigma^2
        let eig = model.noise_cov.clone().symmetric_eigenvalues();
        for ev in eig.iter() {
            assert!(*ev >= 0.5 - 1e-10, "eigenvalue {ev}");
        }
    }
}
