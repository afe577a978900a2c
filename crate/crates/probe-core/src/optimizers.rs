//! Resource-allocation procedures: joint signomial optimization under MRC,
//! alternating LP/SP optimization under MMSE or ZF, the maximum-amplification
//! baseline, and the large-sensor-count power program.
//!
//! All of them minimize the sum of transmit powers plus sensor amplifications
//! subject to per-target SINR demands, a transmit sum-power cap and per-sensor
//! amplification caps. The signomial pieces are solved by successive
//! condensation: the subtracted posynomial of each constraint is replaced by
//! its AM-GM monomial lower bound at the current iterate, the resulting GP is
//! solved, and the expansion point moves to the solution. Because the bound
//! under-approximates the denominator everywhere, every GP-feasible point is
//! feasible for the original signomial constraint, and re-expanding at the
//! solution keeps the objective non-increasing.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::posyalg::{
    alpha_var, build_mrc_constraint, condense, power_var, solve_gp_with, Assignment, ExprError,
    GpError, GpOptions, GpProblem, LpConstraint, LpError, Monomial, Posynomial, Signomial,
    SinrRatio, solve_lp, VAR_FLOOR,
};
use crate::receivers::{self, CombinerBank, ReceiverError};
use crate::scene::{ChannelSet, Scenario, SceneError};
use crate::txmodel::{
    delta_coupling_matrix, mrt_filters, DeltaCoupling, PowerAllocation, TxError,
};
use crate::vmaci::{assemble, AmplificationVector, VmaciModel, VmaciError};

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Tx(#[from] TxError),
    #[error(transparent)]
    Vmaci(#[from] VmaciError),
    #[error(transparent)]
    Receiver(#[from] ReceiverError),
    #[error("geometric subproblem failed: {0}")]
    Gp(GpError),
    #[error("expression evaluation failed: {0}")]
    Expr(#[from] ExprError),
    #[error("linear subproblem failed: {0}")]
    Lp(LpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptStatus {
    Converged,
    Infeasible,
    IterationCap,
}

/// Final allocations, the per-iteration objective values (linear scale), the
/// SINRs re-evaluated through the numeric model, and how the run ended.
#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub p: PowerAllocation,
    pub alpha: AmplificationVector,
    pub objective_trace: Vec<f64>,
    pub achieved_sinr: Vec<f64>,
    pub status: OptStatus,
    pub iterations: usize,
}

impl OptimizationResult {
    pub fn objective(&self) -> f64 {
        self.p.sum() + self.alpha.sum()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OptimizerOptions {
    /// Relative objective-change threshold of the outer loop.
    pub tol: f64,
    /// Outer iteration cap.
    pub max_outer: usize,
    /// Duality-gap tolerance of each inner GP solve.
    pub gp_tol: f64,
    /// Newton-iteration cap of each inner GP solve.
    pub max_gp_newton: usize,
    /// Random feasible-box probes tried when the standard start is
    /// infeasible.
    pub feasibility_probes: usize,
    /// Seed of the probe generator (kept fixed so runs are reproducible).
    pub probe_seed: u64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            max_outer: 100,
            gp_tol: 1e-9,
            max_gp_newton: 200,
            feasibility_probes: 16,
            probe_seed: 0x5eed,
        }
    }
}

/// Receiver choice for the maximum-amplification baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineReceiver {
    Mrc,
    Zf,
    Mmse,
}

/// Precomputed scenario pieces shared by every optimizer.
pub(crate) struct ProblemContext<'a> {
    pub scenario: &'a Scenario,
    pub channels: &'a ChannelSet,
    pub coupling: DeltaCoupling,
    pub moments: Vec<f64>,
}

impl<'a> ProblemContext<'a> {
    pub fn new(
        scenario: &'a Scenario,
        channels: &'a ChannelSet,
    ) -> Result<Self, OptimizerError> {
        scenario.validate()?;
        let steering = scenario.steering_vectors();
        let filters = mrt_filters(&steering[..scenario.n_targets()])?;
        let coupling = delta_coupling_matrix(scenario, &steering, &filters);
        let moments = scenario.objects.iter().map(|o| o.second_moment).collect();
        Ok(Self {
            scenario,
            channels,
            coupling,
            moments,
        })
    }

    pub fn model(&self, p: &PowerAllocation, alpha: &AmplificationVector) -> VmaciModel {
        let delta = self.coupling.profile(p);
        assemble(
            self.channels,
            alpha,
            &delta,
            &self.moments,
            self.scenario.noise_variance,
            self.scenario.n_targets(),
        )
        .expect("context dimensions are consistent by construction")
    }

    pub fn mrc_sinr(&self, p: &PowerAllocation, alpha: &AmplificationVector) -> Vec<f64> {
        let model = self.model(p, alpha);
        receivers::sinr(&model, &receivers::mrc(&model)).sinr_values()
    }

    fn mrc_feasible(&self, p: &PowerAllocation, alpha: &AmplificationVector) -> bool {
        self.mrc_sinr(p, alpha)
            .iter()
            .zip(&self.scenario.sinr_demands)
            .all(|(rho, psi)| *rho >= *psi * (1.0 - 1e-9))
    }
}

fn assignment_of(p: &PowerAllocation, alpha: &AmplificationVector) -> Assignment {
    let mut a = Assignment::new();
    for (j, v) in p.0.iter().enumerate() {
        a.insert(power_var(j), v.max(VAR_FLOOR));
    }
    for (k, v) in alpha.as_slice().iter().enumerate() {
        a.insert(alpha_var(k), v.max(VAR_FLOOR));
    }
    a
}

fn split_assignment(point: &Assignment, n_targets: usize, k: usize) -> (PowerAllocation, AmplificationVector) {
    let p = PowerAllocation(
        (0..n_targets)
            .map(|j| point.get(&power_var(j)).copied().unwrap_or(VAR_FLOOR))
            .collect(),
    );
    let alpha = AmplificationVector::new(
        (0..k)
            .map(|kk| {
                point
                    .get(&alpha_var(kk))
                    .copied()
                    .unwrap_or(VAR_FLOOR)
                    .max(VAR_FLOOR)
            })
            .collect(),
    )
    .expect("floored amplifications are positive");
    (p, alpha)
}

/// Outcome of the shared condensation loop.
struct SpOutcome {
    point: Assignment,
    trace: Vec<f64>,
    status: OptStatus,
    iterations: usize,
}

/// Successive-condensation loop shared by the joint MRC problem, the
/// amp-opt subproblem and the maximum-amplification baseline: condense each
/// ratio's denominator at the current point, solve the GP, repeat until the
/// relative objective change of the two last completed iterates drops below
/// `opts.tol`.
fn solve_signomial_program(
    objective: &Posynomial,
    ratios: &[SinrRatio],
    extra_constraints: &[Posynomial],
    upper_bounds: &BTreeMap<String, f64>,
    start: Assignment,
    opts: &OptimizerOptions,
) -> Result<SpOutcome, OptimizerError> {
    if ratios.iter().any(|r| r.denominator.is_empty()) {
        // demand with an identically-zero desired side cannot be met
        return Ok(SpOutcome {
            point: start,
            trace: Vec::new(),
            status: OptStatus::Infeasible,
            iterations: 0,
        });
    }
    let mut point = start;
    let mut e_hist = vec![0.0, objective.evaluate(&point)?];
    let mut trace = Vec::new();
    let mut iterations = 0usize;
    let status;
    loop {
        let last = e_hist[e_hist.len() - 1];
        let prev = e_hist[e_hist.len() - 2];
        if (last - prev).abs() < opts.tol * last.abs().max(1e-30) {
            status = OptStatus::Converged;
            break;
        }
        if iterations >= opts.max_outer {
            status = OptStatus::IterationCap;
            break;
        }
        let feasible_now = point_feasible(&point, ratios, extra_constraints)?;
        let mut gp_constraints = Vec::with_capacity(ratios.len() + extra_constraints.len());
        for ratio in ratios {
            let condensed = condense(&ratio.denominator, &point)?;
            gp_constraints.push(ratio.numerator.mul_monomial(&condensed.inverse()));
        }
        gp_constraints.extend_from_slice(extra_constraints);
        let problem = GpProblem {
            objective: objective.clone(),
            constraints: gp_constraints,
            upper_bounds: upper_bounds.clone(),
        };
        let gp_opts = GpOptions {
            tol: opts.gp_tol,
            max_newton: opts.max_gp_newton,
        };
        match solve_gp_with(&problem, &point, gp_opts) {
            Ok(next) => {
                let e = objective.evaluate(&next)?;
                if !feasible_now || e <= last + 1e-9 * last.abs().max(1.0) {
                    point = next;
                    trace.push(e);
                    e_hist.push(e);
                } else {
                    // solver noise produced no improvement; settle here
                    trace.push(last);
                    e_hist.push(last);
                }
                iterations += 1;
            }
            Err(GpError::Infeasible { .. }) => {
                // condensation under-approximates, so an infeasible GP does
                // not prove the signomial problem infeasible; report it as
                // such only when no feasible point was ever reached
                status = if feasible_now {
                    OptStatus::Converged
                } else {
                    OptStatus::Infeasible
                };
                break;
            }
            Err(e) => return Err(OptimizerError::Gp(e)),
        }
    }
    Ok(SpOutcome {
        point,
        trace,
        status,
        iterations,
    })
}

fn point_feasible(
    point: &Assignment,
    ratios: &[SinrRatio],
    extra: &[Posynomial],
) -> Result<bool, OptimizerError> {
    for r in ratios {
        let num = r.numerator.evaluate(point)?;
        let den = r.denominator.evaluate(point)?;
        if num > den * (1.0 + 1e-9) {
            return Ok(false);
        }
    }
    for c in extra {
        if c.evaluate(point)? > 1.0 + 1e-9 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Sum of all power and amplification variables as a posynomial.
fn sum_objective(n_targets: usize, k: usize) -> Posynomial {
    Posynomial::new(
        (0..n_targets)
            .map(|j| Monomial::single(1.0, &power_var(j), 1.0))
            .chain((0..k).map(|kk| Monomial::single(1.0, &alpha_var(kk), 1.0))),
    )
}

fn power_cap_constraint(n_targets: usize, p_max: f64) -> Posynomial {
    Posynomial::new((0..n_targets).map(|j| Monomial::single(1.0 / p_max, &power_var(j), 1.0)))
}

/// Joint optimization of powers and amplifications under MRT/MRC by
/// successive condensation of the per-target SINR constraints.
pub fn mrc_joint(
    scenario: &Scenario,
    channels: &ChannelSet,
    opts: &OptimizerOptions,
) -> Result<OptimizationResult, OptimizerError> {
    let ctx = ProblemContext::new(scenario, channels)?;
    let n_targets = scenario.n_targets();
    let k = scenario.sensor_count;

    let start = match find_feasible_start(&ctx, opts) {
        Some(pa) => pa,
        None => {
            let p = PowerAllocation::uniform(scenario.p_max, n_targets);
            let alpha = AmplificationVector::uniform(scenario.alpha_max, k);
            let achieved = ctx.mrc_sinr(&p, &alpha);
            return Ok(OptimizationResult {
                p,
                alpha,
                objective_trace: Vec::new(),
                achieved_sinr: achieved,
                status: OptStatus::Infeasible,
                iterations: 0,
            });
        }
    };

    let ratios: Vec<SinrRatio> = (0..n_targets)
        .map(|j| build_mrc_constraint(scenario, channels, j))
        .collect();
    let objective = sum_objective(n_targets, k);
    let extra = vec![power_cap_constraint(n_targets, scenario.p_max)];
    let mut bounds = BTreeMap::new();
    for kk in 0..k {
        bounds.insert(alpha_var(kk), scenario.alpha_max);
    }
    for j in 0..n_targets {
        bounds.insert(power_var(j), scenario.p_max);
    }

    let outcome = solve_signomial_program(
        &objective,
        &ratios,
        &extra,
        &bounds,
        assignment_of(&start.0, &start.1),
        opts,
    )?;
    let (p, alpha) = split_assignment(&outcome.point, n_targets, k);
    let achieved = ctx.mrc_sinr(&p, &alpha);
    Ok(OptimizationResult {
        p,
        alpha,
        objective_trace: outcome.trace,
        achieved_sinr: achieved,
        status: outcome.status,
        iterations: outcome.iterations,
    })
}

/// Tries the nominal start (uniform power split, maximal amplification) and
/// then a fixed number of random box points; the MRC SINRs are not maximal at
/// the nominal point in general, so the probes cheaply guard against a false
/// infeasibility call.
fn find_feasible_start(
    ctx: &ProblemContext,
    opts: &OptimizerOptions,
) -> Option<(PowerAllocation, AmplificationVector)> {
    let scenario = ctx.scenario;
    let n_targets = scenario.n_targets();
    let k = scenario.sensor_count;
    let nominal_p = PowerAllocation::uniform(scenario.p_max, n_targets);
    let nominal_a = AmplificationVector::uniform(scenario.alpha_max, k);
    if ctx.mrc_feasible(&nominal_p, &nominal_a) {
        return Some((nominal_p, nominal_a));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.probe_seed);
    for _ in 0..opts.feasibility_probes {
        let p = PowerAllocation(
            (0..n_targets)
                .map(|_| rng.gen_range(0.05..1.0) * scenario.p_max / n_targets as f64)
                .collect(),
        );
        let a = AmplificationVector::new(
            (0..k)
                .map(|_| rng.gen_range(0.05..1.0) * scenario.alpha_max)
                .collect(),
        )
        .expect("probe amplifications positive");
        if ctx.mrc_feasible(&p, &a) {
            return Some((p, a));
        }
    }
    None
}

fn make_bank(kind: BaselineReceiver, model: &VmaciModel) -> Result<CombinerBank, OptimizerError> {
    Ok(match kind {
        BaselineReceiver::Mrc => receivers::mrc(model),
        BaselineReceiver::Zf => receivers::zf(model)?,
        BaselineReceiver::Mmse => receivers::mmse(model),
    })
}

/// Power-minimization LP at fixed amplifications and combiner bank. The SINR
/// demands are linear in `p` because every variance term is either linear in
/// the delta profile or independent of it.
fn power_opt_lp(
    ctx: &ProblemContext,
    model: &VmaciModel,
    bank: &CombinerBank,
) -> Result<PowerAllocation, LpError> {
    let scenario = ctx.scenario;
    let n_targets = scenario.n_targets();
    let n = scenario.n_objects();
    let mut constraints = Vec::with_capacity(n_targets + 1);
    for j in 0..n_targets {
        let v = bank.v.column(j);
        // tiny demand margin: keeps the amp-opt feasible set from collapsing
        // to a measure-zero slab when the LP lands exactly on the boundary
        let psi = scenario.sinr_demands[j] * (1.0 + 1e-6);
        let quad: Vec<f64> = (0..n)
            .map(|i| v.dotc(&model.w.column(i)).norm_sqr())
            .collect();
        let mut coeffs = vec![0.0; n_targets];
        for m in 0..n_targets {
            let mut c = ctx.moments[j] * quad[j] * ctx.coupling.entry(j, m);
            for i in 0..n {
                if i != j {
                    c -= psi * ctx.moments[i] * quad[i] * ctx.coupling.entry(i, m);
                }
            }
            coeffs[m] = c;
        }
        let total_noise = (v.adjoint() * &model.noise_cov * v)[(0, 0)].re;
        constraints.push(LpConstraint::ge(coeffs, psi * total_noise));
    }
    constraints.push(LpConstraint::le(vec![1.0; n_targets], scenario.p_max));
    let objective = vec![1.0; n_targets];
    let p = solve_lp(&objective, &constraints, &vec![None; n_targets])?;
    Ok(PowerAllocation(p))
}

/// Amplification-minimization signomial program at fixed powers and combiner
/// bank. With a general bank the desired and interference powers contain
/// `sqrt(alpha_k alpha_l)` cross terms of either sign, so the constraint is a
/// signomial handled by the same condensation loop as the joint problem.
fn amp_opt_sp(
    ctx: &ProblemContext,
    p: &PowerAllocation,
    bank: &CombinerBank,
    alpha_start: &AmplificationVector,
    opts: &OptimizerOptions,
) -> Result<(AmplificationVector, OptStatus), OptimizerError> {
    let scenario = ctx.scenario;
    let k = scenario.sensor_count;
    let r = scenario.fusion_antennas;
    let n = scenario.n_objects();
    let sigma2 = scenario.noise_variance;
    let delta = ctx.coupling.profile(p);

    let mut ratios = Vec::with_capacity(scenario.n_targets());
    for j in 0..scenario.n_targets() {
        let v = bank.v.column(j);
        let psi = scenario.sinr_demands[j];
        // d_k = v_jk^H f_k, per-sensor projection of the bank onto the link
        let d: Vec<num_complex::Complex64> = (0..k)
            .map(|kk| {
                let block = v.rows(kk * r, r);
                block.dotc(&ctx.channels.f[kk])
            })
            .collect();
        let mut terms: Vec<Monomial> = Vec::new();
        for i in 0..n {
            // sign of the whole group: desired enters negated
            let weight = if i == j {
                -delta.0[i] * ctx.moments[i]
            } else {
                psi * delta.0[i] * ctx.moments[i]
            };
            if weight == 0.0 {
                continue;
            }
            let c: Vec<num_complex::Complex64> = (0..k)
                .map(|kk| ctx.channels.g[(i, kk)] * d[kk])
                .collect();
            for kk in 0..k {
                let diag = weight * c[kk].norm_sqr();
                if diag != 0.0 {
                    terms.push(Monomial::single(diag, &alpha_var(kk), 1.0));
                }
                for ll in (kk + 1)..k {
                    let cross = weight * 2.0 * (c[kk] * c[ll].conj()).re;
                    if cross != 0.0 {
                        terms.push(Monomial::new(
                            cross,
                            [(alpha_var(kk), 0.5), (alpha_var(ll), 0.5)],
                        ));
                    }
                }
            }
        }
        for kk in 0..k {
            let coeff = psi * sigma2 * d[kk].norm_sqr();
            if coeff != 0.0 {
                terms.push(Monomial::single(coeff, &alpha_var(kk), 1.0));
            }
        }
        terms.push(Monomial::constant(psi * sigma2 * v.norm_squared()));
        let signomial = Signomial::from_monomials(terms);
        ratios.push(SinrRatio {
            numerator: signomial.plus().clone(),
            denominator: signomial.minus().clone(),
        });
    }

    let objective = Posynomial::new((0..k).map(|kk| Monomial::single(1.0, &alpha_var(kk), 1.0)));
    let mut bounds = BTreeMap::new();
    for kk in 0..k {
        bounds.insert(alpha_var(kk), scenario.alpha_max);
    }
    let start: Assignment = (0..k)
        .map(|kk| (alpha_var(kk), alpha_start.as_slice()[kk].max(VAR_FLOOR)))
        .collect();
    let outcome = solve_signomial_program(&objective, &ratios, &[], &bounds, start, opts)?;
    let alpha = AmplificationVector::new(
        (0..k)
            .map(|kk| {
                outcome
                    .point
                    .get(&alpha_var(kk))
                    .copied()
                    .unwrap_or(VAR_FLOOR)
                    .max(VAR_FLOOR)
            })
            .collect(),
    )
    .expect("floored amplifications are positive");
    Ok((alpha, outcome.status))
}

/// Alternating separate optimization (amp-opt SP, bank update, power-opt LP
/// per round) for the MMSE or ZF fusion center.
fn alternating(
    scenario: &Scenario,
    channels: &ChannelSet,
    kind: BaselineReceiver,
    opts: &OptimizerOptions,
) -> Result<OptimizationResult, OptimizerError> {
    assert!(kind != BaselineReceiver::Mrc, "use mrc_joint for MRC");
    let ctx = ProblemContext::new(scenario, channels)?;
    let n_targets = scenario.n_targets();
    let k = scenario.sensor_count;

    let mut p = PowerAllocation::uniform(scenario.p_max, n_targets);
    let mut alpha = AmplificationVector::uniform(scenario.alpha_max, k);
    let mut model = ctx.model(&p, &alpha);
    let mut bank = make_bank(kind, &model)?;

    let mut e_hist = vec![0.0, p.sum() + alpha.sum()];
    let mut trace = Vec::new();
    let mut iterations = 0usize;
    let mut status;
    loop {
        let last = e_hist[e_hist.len() - 1];
        let prev = e_hist[e_hist.len() - 2];
        if (last - prev).abs() < opts.tol * last.abs().max(1e-30) {
            status = OptStatus::Converged;
            break;
        }
        if iterations >= opts.max_outer {
            status = OptStatus::IterationCap;
            break;
        }
        let snapshot = (p.clone(), alpha.clone(), bank.clone());

        // (i) power minimization, exact for the current bank
        match power_opt_lp(&ctx, &model, &bank) {
            Ok(new_p) => p = new_p,
            Err(LpError::Infeasible { .. }) => {
                status = OptStatus::Infeasible;
                break;
            }
            Err(e) => return Err(OptimizerError::Lp(e)),
        }
        // (ii) bank update with the new powers (the ZF bank depends on the
        // amplifications alone, so it is still current)
        model = ctx.model(&p, &alpha);
        if kind == BaselineReceiver::Mmse {
            bank = make_bank(kind, &model)?;
        }
        // (iii) amplification minimization at fixed powers and bank
        let (new_alpha, sp_status) = amp_opt_sp(&ctx, &p, &bank, &alpha, opts)?;
        if sp_status == OptStatus::Infeasible {
            status = OptStatus::Infeasible;
            break;
        }
        alpha = new_alpha;
        model = ctx.model(&p, &alpha);
        if kind == BaselineReceiver::Zf {
            // re-null at the new amplifications and re-certify the powers so
            // the round ends on a state that is exact for its own bank
            bank = make_bank(kind, &model)?;
            match power_opt_lp(&ctx, &model, &bank) {
                Ok(new_p) => p = new_p,
                Err(LpError::Infeasible { .. }) => {
                    status = OptStatus::Infeasible;
                    break;
                }
                Err(e) => return Err(OptimizerError::Lp(e)),
            }
            model = ctx.model(&p, &alpha);
        }

        let e = p.sum() + alpha.sum();
        if e > last + 1e-9 * last.abs().max(1.0) {
            // the bank refresh cost more than the subproblems gained; settle
            // on the previous consistent point
            let (sp, sa, sb) = snapshot;
            p = sp;
            alpha = sa;
            bank = sb;
            status = OptStatus::Converged;
            break;
        }
        trace.push(e);
        e_hist.push(e);
        iterations += 1;
    }

    // MMSE is refreshed once more for reporting: it can only raise the SINR.
    // The ZF bank depends on the amplifications alone, so it is already
    // consistent with the final point.
    model = ctx.model(&p, &alpha);
    if kind == BaselineReceiver::Mmse {
        bank = make_bank(kind, &model)?;
    }
    let achieved = receivers::sinr(&model, &bank).sinr_values();
    if status == OptStatus::Converged && iterations == 0 {
        let feasible = achieved
            .iter()
            .zip(&scenario.sinr_demands)
            .all(|(rho, psi)| *rho >= *psi * (1.0 - 1e-9));
        if !feasible {
            status = OptStatus::Infeasible;
        }
    }
    Ok(OptimizationResult {
        p,
        alpha,
        objective_trace: trace,
        achieved_sinr: achieved,
        status,
        iterations,
    })
}

/// Separate optimization with the MMSE fusion center.
pub fn mmse_alternating(
    scenario: &Scenario,
    channels: &ChannelSet,
    opts: &OptimizerOptions,
) -> Result<OptimizationResult, OptimizerError> {
    alternating(scenario, channels, BaselineReceiver::Mmse, opts)
}

/// Separate optimization with the ZF fusion center; the demands are exactly
/// linear in `p` because the interference is nulled.
pub fn zf_alternating(
    scenario: &Scenario,
    channels: &ChannelSet,
    opts: &OptimizerOptions,
) -> Result<OptimizationResult, OptimizerError> {
    alternating(scenario, channels, BaselineReceiver::Zf, opts)
}

/// Fixes every amplification at its cap and minimizes transmit power only:
/// a condensation SP for MRC, an LP with bank re-updates for ZF/MMSE. The
/// reported objective includes the fixed amplification sum.
pub fn max_amp_baseline(
    scenario: &Scenario,
    channels: &ChannelSet,
    receiver: BaselineReceiver,
    opts: &OptimizerOptions,
) -> Result<OptimizationResult, OptimizerError> {
    let ctx = ProblemContext::new(scenario, channels)?;
    let n_targets = scenario.n_targets();
    let k = scenario.sensor_count;
    let alpha = AmplificationVector::uniform(scenario.alpha_max, k);
    let alpha_sum = alpha.sum();

    match receiver {
        BaselineReceiver::Mrc => {
            let alpha_fix: Assignment = (0..k)
                .map(|kk| (alpha_var(kk), scenario.alpha_max))
                .collect();
            let start_p = match find_feasible_power(&ctx, &alpha, opts) {
                Some(p) => p,
                None => {
                    let p = PowerAllocation::uniform(scenario.p_max, n_targets);
                    let achieved = ctx.mrc_sinr(&p, &alpha);
                    return Ok(OptimizationResult {
                        p,
                        alpha,
                        objective_trace: Vec::new(),
                        achieved_sinr: achieved,
                        status: OptStatus::Infeasible,
                        iterations: 0,
                    });
                }
            };
            let ratios: Vec<SinrRatio> = (0..n_targets)
                .map(|j| {
                    let r = build_mrc_constraint(scenario, channels, j);
                    SinrRatio {
                        numerator: r.numerator.substitute(&alpha_fix),
                        denominator: r.denominator.substitute(&alpha_fix),
                    }
                })
                .collect();
            let objective = Posynomial::new(
                (0..n_targets)
                    .map(|j| Monomial::single(1.0, &power_var(j), 1.0))
                    .chain([Monomial::constant(alpha_sum)]),
            );
            let extra = vec![power_cap_constraint(n_targets, scenario.p_max)];
            let mut bounds = BTreeMap::new();
            for j in 0..n_targets {
                bounds.insert(power_var(j), scenario.p_max);
            }
            let start: Assignment = (0..n_targets)
                .map(|j| (power_var(j), start_p.0[j].max(VAR_FLOOR)))
                .collect();
            let outcome =
                solve_signomial_program(&objective, &ratios, &extra, &bounds, start, opts)?;
            let p = PowerAllocation(
                (0..n_targets)
                    .map(|j| outcome.point.get(&power_var(j)).copied().unwrap_or(VAR_FLOOR))
                    .collect(),
            );
            let achieved = ctx.mrc_sinr(&p, &alpha);
            Ok(OptimizationResult {
                p,
                alpha,
                objective_trace: outcome.trace,
                achieved_sinr: achieved,
                status: outcome.status,
                iterations: outcome.iterations,
            })
        }
        BaselineReceiver::Zf | BaselineReceiver::Mmse => {
            let mut p = PowerAllocation::uniform(scenario.p_max, n_targets);
            let mut model = ctx.model(&p, &alpha);
            let mut bank = make_bank(receiver, &model)?;
            let mut e_hist = vec![0.0, p.sum() + alpha_sum];
            let mut trace = Vec::new();
            let mut iterations = 0usize;
            let mut status = OptStatus::Converged;
            loop {
                let last = e_hist[e_hist.len() - 1];
                let prev = e_hist[e_hist.len() - 2];
                if (last - prev).abs() < opts.tol * last.abs().max(1e-30) {
                    break;
                }
                if iterations >= opts.max_outer {
                    status = OptStatus::IterationCap;
                    break;
                }
                match power_opt_lp(&ctx, &model, &bank) {
                    Ok(new_p) => p = new_p,
                    Err(LpError::Infeasible { .. }) => {
                        status = OptStatus::Infeasible;
                        break;
                    }
                    Err(e) => return Err(OptimizerError::Lp(e)),
                }
                model = ctx.model(&p, &alpha);
                bank = make_bank(receiver, &model)?;
                let e = p.sum() + alpha_sum;
                trace.push(e);
                e_hist.push(e);
                iterations += 1;
            }
            let achieved = receivers::sinr(&model, &bank).sinr_values();
            if status == OptStatus::Converged {
                let feasible = achieved
                    .iter()
                    .zip(&scenario.sinr_demands)
                    .all(|(rho, psi)| *rho >= *psi * (1.0 - 1e-6));
                if !feasible {
                    status = OptStatus::Infeasible;
                }
            }
            Ok(OptimizationResult {
                p,
                alpha,
                objective_trace: trace,
                achieved_sinr: achieved,
                status,
                iterations,
            })
        }
    }
}

fn find_feasible_power(
    ctx: &ProblemContext,
    alpha: &AmplificationVector,
    opts: &OptimizerOptions,
) -> Option<PowerAllocation> {
    let scenario = ctx.scenario;
    let n_targets = scenario.n_targets();
    let nominal = PowerAllocation::uniform(scenario.p_max, n_targets);
    if ctx.mrc_feasible(&nominal, alpha) {
        return Some(nominal);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.probe_seed);
    for _ in 0..opts.feasibility_probes {
        let p = PowerAllocation(
            (0..n_targets)
                .map(|_| rng.gen_range(0.05..1.0) * scenario.p_max / n_targets as f64)
                .collect(),
        );
        if ctx.mrc_feasible(&p, alpha) {
            return Some(p);
        }
    }
    None
}

/// Large-sensor-count power program: amplifications pinned at the cap,
/// interference dropped, and the per-target SNR demands solved as an LP. The
/// achieved values reported are the interference-free SNRs.
pub fn asymptotic_power_opt(
    scenario: &Scenario,
    channels: &ChannelSet,
) -> Result<OptimizationResult, OptimizerError> {
    let ctx = ProblemContext::new(scenario, channels)?;
    let n_targets = scenario.n_targets();
    let k = scenario.sensor_count;
    let alpha = AmplificationVector::uniform(scenario.alpha_max, k);
    let sigma2 = scenario.noise_variance;
    let f_norm_sq: Vec<f64> = channels.f.iter().map(|f| f.norm_squared()).collect();

    let mut constraints = Vec::with_capacity(n_targets + 1);
    let mut thresholds = Vec::with_capacity(n_targets);
    for j in 0..n_targets {
        let b: Vec<f64> = (0..k)
            .map(|kk| channels.g[(j, kk)].norm_sqr() * f_norm_sq[kk])
            .collect();
        let s1: f64 = b.iter().map(|bk| scenario.alpha_max * bk).sum();
        let s2: f64 = b
            .iter()
            .zip(&f_norm_sq)
            .map(|(bk, fk)| scenario.alpha_max * scenario.alpha_max * bk * fk)
            .sum();
        // SNR_j = delta_j Q_j s1^2 / (sigma^2 (s2 + s1)) >= psi_j
        let tau = scenario.sinr_demands[j] * sigma2 * (s2 + s1)
            / (ctx.moments[j] * s1 * s1);
        thresholds.push(tau);
        let coeffs: Vec<f64> = (0..n_targets).map(|m| ctx.coupling.entry(j, m)).collect();
        constraints.push(LpConstraint::ge(coeffs, tau));
    }
    constraints.push(LpConstraint::le(vec![1.0; n_targets], scenario.p_max));

    match solve_lp(&vec![1.0; n_targets], &constraints, &vec![None; n_targets]) {
        Ok(p_vec) => {
            let p = PowerAllocation(p_vec);
            let delta = ctx.coupling.profile(&p);
            // achieved SNR_j = psi_j * delta_j / tau_j by the threshold scaling
            let achieved: Vec<f64> = (0..n_targets)
                .map(|j| scenario.sinr_demands[j] * delta.0[j] / thresholds[j])
                .collect();
            let e = p.sum() + alpha.sum();
            Ok(OptimizationResult {
                p,
                alpha,
                objective_trace: vec![e],
                achieved_sinr: achieved,
                status: OptStatus::Converged,
                iterations: 1,
            })
        }
        Err(LpError::Infeasible { .. }) => {
            let p = PowerAllocation::uniform(scenario.p_max, n_targets);
            Ok(OptimizationResult {
                p,
                alpha,
                objective_trace: Vec::new(),
                achieved_sinr: vec![0.0; n_targets],
                status: OptStatus::Infeasible,
                iterations: 0,
            })
        }
        Err(e) => Err(OptimizerError::Lp(e)),
    }
}

/// Interference-free SNR pieces of the large-sensor analysis, expressed in
/// the per-sensor gain products `b_k = |g_jk|^2 ||f_k||^2`.
pub mod asymptotic {
    /// `ln SNR` up to the additive constant `ln(delta_j Q_j / sigma^2)`;
    /// derivatives and finite differences are unaffected by the constant.
    pub fn ln_snr(b: &[f64], f_norm_sq: &[f64], alpha: &[f64]) -> f64 {
        let s1: f64 = alpha.iter().zip(b).map(|(a, bk)| a * bk).sum();
        let s2: f64 = alpha
            .iter()
            .zip(b)
            .zip(f_norm_sq)
            .map(|((a, bk), fk)| a * a * bk * fk)
            .sum();
        2.0 * s1.ln() - (s2 + s1).ln()
    }

    /// Analytic `d ln SNR / d alpha_k` in common-denominator form.
    pub fn ln_snr_derivative(b: &[f64], f_norm_sq: &[f64], alpha: &[f64], k: usize) -> f64 {
        let s1: f64 = alpha.iter().zip(b).map(|(a, bk)| a * bk).sum();
        let s2: f64 = alpha
            .iter()
            .zip(b)
            .zip(f_norm_sq)
            .map(|((a, bk), fk)| a * a * bk * fk)
            .sum();
        let num = 2.0 * b[k] * (s2 + s1) - (2.0 * alpha[k] * b[k] * f_norm_sq[k] + b[k]) * s1;
        num / (s1 * (s2 + s1))
    }

    /// The bound term `zeta(alpha)` of the monotonicity argument:
    /// `b_k * sum_l alpha_l^2 b_l ||f_l||^2 - alpha_k b_k ||f_k||^2 * sum_l alpha_l b_l`.
    pub fn zeta(b: &[f64], f_norm_sq: &[f64], alpha: &[f64], k: usize) -> f64 {
        let s1: f64 = alpha.iter().zip(b).map(|(a, bk)| a * bk).sum();
        let s2: f64 = alpha
            .iter()
            .zip(b)
            .zip(f_norm_sq)
            .map(|((a, bk), fk)| a * a * bk * fk)
            .sum();
        b[k] * s2 - alpha[k] * b[k] * f_norm_sq[k] * s1
    }
}
