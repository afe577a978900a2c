//! Recursive second-moment acquisition: alternate resource optimization with
//! Monte-Carlo estimation of the targets' reflection moments from fusion
//! center outputs.
//!
//! Each round optimizes `(p, alpha)` under the current moment estimates,
//! simulates post-combining snapshots with the true physics, and re-estimates
//! every target moment by variance matching: the analytic interference and
//! noise variance is subtracted from the sample variance and the remainder is
//! scaled by the desired-signal coefficient. The estimator is unbiased given
//! exact side information and floors at a small positive value. Channels stay
//! fixed across rounds and snapshots; only the reflections and receiver noise
//! are redrawn.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::optimizers::{
    mmse_alternating, mrc_joint, zf_alternating, OptStatus, OptimizerError, OptimizerOptions,
};
use crate::receivers::{self, CombinerBank};
use crate::scene::{complex_gaussian, ChannelSet, Scenario};
use crate::txmodel::PowerAllocation;
use crate::vmaci::{AmplificationVector, VmaciModel};

/// Positive floor applied to every moment estimate.
pub const MOMENT_FLOOR: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum CharError {
    #[error("moment estimation needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("resource optimization infeasible in round {round}")]
    OptimizerInfeasible { round: usize },
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
}

/// Which allocation procedure runs inside each round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundOptimizer {
    MrcJoint,
    MmseAlternating,
    ZfAlternating,
}

#[derive(Debug, Clone, Copy)]
pub struct CharacterizationOptions {
    pub snapshots: usize,
    /// Relative moment-change threshold that ends the recursion.
    pub q_tol: f64,
    pub max_rounds: usize,
    pub optimizer: RoundOptimizer,
    pub opt_opts: OptimizerOptions,
    pub seed: u64,
}

impl Default for CharacterizationOptions {
    fn default() -> Self {
        Self {
            snapshots: 10_000,
            q_tol: 0.05,
            max_rounds: 10,
            optimizer: RoundOptimizer::MmseAlternating,
            opt_opts: OptimizerOptions::default(),
            seed: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CharacterizationRound {
    pub q_estimates: Vec<f64>,
    pub p: PowerAllocation,
    pub alpha: AmplificationVector,
    pub snapshots_used: usize,
}

#[derive(Debug, Clone)]
pub struct CharacterizationTrace {
    pub rounds: Vec<CharacterizationRound>,
    pub converged: bool,
}

impl CharacterizationTrace {
    pub fn final_estimates(&self) -> Option<&[f64]> {
        self.rounds.last().map(|r| r.q_estimates.as_slice())
    }
}

/// Draws `count` post-combining snapshots `z_j = v_j^H (sum_i sqrt(delta_i)
/// l_i w_i + n')` for every target, with `l_i ~ CN(0, Q_i)` from the model's
/// moments and fresh sensor and fusion noise per snapshot. Deterministic for
/// a fixed seed.
pub fn simulate_snapshots(
    model: &VmaciModel,
    bank: &CombinerBank,
    count: usize,
    seed: u64,
) -> Vec<Vec<Complex64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = model.n_objects();
    let k = model.n_sensors();
    let r = model.fusion_antennas();
    let n_targets = model.n_targets;
    let sigma = model.noise_variance.sqrt();

    // per-target projections: onto each object channel, each sensor noise
    // path, and the raw fusion antennas
    let vw: Vec<Vec<Complex64>> = (0..n_targets)
        .map(|j| {
            (0..n)
                .map(|i| bank.v.column(j).dotc(&model.w.column(i)))
                .collect()
        })
        .collect();
    let vf: Vec<Vec<Complex64>> = (0..n_targets)
        .map(|j| {
            (0..k)
                .map(|kk| {
                    let col = bank.v.column(j);
                    col.rows(kk * r, r).dotc(&model.channels.f[kk])
                })
                .collect()
        })
        .collect();

    let sqrt_delta: Vec<f64> = model.delta.0.iter().map(|d| d.max(0.0).sqrt()).collect();
    let sqrt_alpha: Vec<f64> = model.alpha.as_slice().iter().map(|a| a.sqrt()).collect();
    let sqrt_q: Vec<f64> = model.moments.iter().map(|q| q.sqrt()).collect();

    let mut out = vec![Vec::with_capacity(count); n_targets];
    let mut n_fc = vec![Complex64::new(0.0, 0.0); k * r];
    for _ in 0..count {
        // one physical snapshot, observed through every combiner
        let l: Vec<Complex64> = (0..n)
            .map(|i| complex_gaussian(&mut rng) * sqrt_q[i])
            .collect();
        let n_s: Vec<Complex64> = (0..k).map(|_| complex_gaussian(&mut rng)).collect();
        for e in n_fc.iter_mut() {
            *e = complex_gaussian(&mut rng) * sigma;
        }
        for j in 0..n_targets {
            let mut z = Complex64::new(0.0, 0.0);
            for i in 0..n {
                z += vw[j][i] * l[i] * sqrt_delta[i];
            }
            for kk in 0..k {
                z += vf[j][kk] * n_s[kk] * (sigma * sqrt_alpha[kk]);
            }
            for (idx, e) in n_fc.iter().enumerate() {
                z += bank.v[(idx, j)].conj() * e;
            }
            out[j].push(z);
        }
    }
    out
}

/// Variance moment matching: `Q_j = (var(z_j) - side_j) / (delta_j |v_j^H
/// w_j|^2)` floored at [`MOMENT_FLOOR`], where `side_j` is the analytic
/// interference-plus-noise variance computed from the model's moments (the
/// side information available at the fusion center).
pub fn estimate_moments(
    samples: &[Vec<Complex64>],
    model: &VmaciModel,
    bank: &CombinerBank,
) -> Result<Vec<f64>, CharError> {
    let report = receivers::sinr(model, bank);
    let mut q = Vec::with_capacity(model.n_targets);
    for (j, z) in samples.iter().enumerate() {
        if z.len() < 2 {
            return Err(CharError::TooFewSamples(z.len()));
        }
        let var_hat: f64 = z.iter().map(|v| v.norm_sqr()).sum::<f64>() / z.len() as f64;
        let c = &report.per_target[j];
        let side = c.interference + c.sensor_noise + c.fc_noise;
        // desired coefficient without the moment itself
        let coeff = c.desired / model.moments[j];
        q.push(((var_hat - side) / coeff).max(MOMENT_FLOOR));
    }
    Ok(q)
}

/// Runs the recursion: moments start at one, each round optimizes resources
/// under the current estimates, simulates snapshots against the true
/// scenario moments, and re-estimates until the largest relative change
/// drops below `q_tol` or the round cap is reached.
pub fn recursive_characterization(
    scenario: &Scenario,
    channels: &ChannelSet,
    opts: &CharacterizationOptions,
) -> Result<CharacterizationTrace, CharError> {
    let n_targets = scenario.n_targets();
    let mut q_est = vec![1.0; n_targets];
    let mut rounds = Vec::new();
    let mut converged = false;

    for round in 0..opts.max_rounds {
        // the optimizer sees the estimated moments
        let mut believed = scenario.clone();
        for (obj, q) in believed.objects.iter_mut().zip(&q_est) {
            obj.second_moment = *q;
        }
        let result = match opts.optimizer {
            RoundOptimizer::MrcJoint => mrc_joint(&believed, channels, &opts.opt_opts)?,
            RoundOptimizer::MmseAlternating => {
                mmse_alternating(&believed, channels, &opts.opt_opts)?
            }
            RoundOptimizer::ZfAlternating => zf_alternating(&believed, channels, &opts.opt_opts)?,
        };
        if result.status == OptStatus::Infeasible {
            return Err(CharError::OptimizerInfeasible { round });
        }

        let believed_ctx = crate::optimizers::ProblemContext::new(&believed, channels)?;
        let physics_ctx = crate::optimizers::ProblemContext::new(scenario, channels)?;
        let believed_model = believed_ctx.model(&result.p, &result.alpha);
        let physics_model = physics_ctx.model(&result.p, &result.alpha);
        // the fusion center combines with what it believes
        let bank = match opts.optimizer {
            RoundOptimizer::MrcJoint => receivers::mrc(&believed_model),
            RoundOptimizer::MmseAlternating => receivers::mmse(&believed_model),
            RoundOptimizer::ZfAlternating => {
                receivers::zf(&believed_model).map_err(OptimizerError::from)?
            }
        };
        let samples = simulate_snapshots(
            &physics_model,
            &bank,
            opts.snapshots,
            opts.seed.wrapping_add(round as u64),
        );
        let new_q = estimate_moments(&samples, &believed_model, &bank)?;

        let max_rel_change = new_q
            .iter()
            .zip(&q_est)
            .map(|(new, old)| (new - old).abs() / old.abs().max(MOMENT_FLOOR))
            .fold(0.0f64, f64::max);
        q_est = new_q;
        rounds.push(CharacterizationRound {
            q_estimates: q_est.clone(),
            p: result.p.clone(),
            alpha: result.alpha.clone(),
            snapshots_used: opts.snapshots,
        });
        if max_rel_change < opts.q_tol {
            converged = true;
            break;
        }
    }
    Ok(CharacterizationTrace { rounds, converged })
}
