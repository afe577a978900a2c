// debug: why does the amp-opt SP stay at the start on a tight constraint?
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use probe_core::optimizers::{mmse_alternating, OptimizerOptions};
use probe_core::posyalg::{alpha_var, condense, solve_gp_with, Assignment, GpOptions, GpProblem, Monomial, Posynomial};
use probe_core::receivers;
use probe_core::scene::{ArrayGeometry, ChannelSet, ChannelSpec, ObjectKind, SceneObject, Scenario};
use probe_core::txmodel::{delta_coupling_matrix, mrt_filters, PowerAllocation};
use probe_core::vmaci::{assemble, AmplificationVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn object(az: f64, el: f64, r: f64, kind: ObjectKind, q: f64) -> SceneObject {
    SceneObject { azimuth_deg: az, elevation_deg: el, range_m: r, kind, second_moment: q }
}

fn main() {
    let scenario = Scenario {
        array: ArrayGeometry { m_count: 2, mprime_count: 2, element_spacing_wavelengths: 0.5 },
        objects: vec![
            object(20.0, 40.0, 1.0, ObjectKind::Target, 1.0),
            object(45.0, 30.0, 1.0, ObjectKind::Target, 1.0),
        ],
        sensor_count: 2,
        fusion_antennas: 4,
        pathloss_exponent: 2.0,
        noise_variance: 0.5,
        p_max: 15.0,
        alpha_max: 2.0,
        sinr_demands: vec![0.8, 0.8],
        channel_spec: ChannelSpec::Rayleigh,
        rng_seed: 33,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let mut draw = || {
        let re: f64 = rng.gen_range(-1.0..1.0);
        let im: f64 = rng.gen_range(-1.0..1.0);
        Complex64::new(re, im)
    };
    let g = DMatrix::from_fn(2, 2, |i, k| if i == k { draw() + Complex64::new(1.5, 0.0) } else { Complex64::new(0.0, 0.0) });
    let f: Vec<DVector<Complex64>> = (0..2).map(|_| DVector::from_fn(4, |_, _| draw())).collect();
    let channels = ChannelSet { g, f };

    // state after round-1 LP: p = [0.0867, 0], alpha = [2, 2]
    let p = PowerAllocation(vec![0.08674523828060195, 1e-12]);
    let alpha = AmplificationVector::new(vec![2.0, 2.0]).unwrap();
    let steering = scenario.steering_vectors();
    let filters = mrt_filters(&steering[..2]).unwrap();
    let coupling = delta_coupling_matrix(&scenario, &steering, &filters);
    let delta = coupling.profile(&p);
    let moments: Vec<f64> = scenario.objects.iter().map(|o| o.second_moment).collect();
    let model = assemble(&channels, &alpha, &delta, &moments, 0.5, 2).unwrap();
    let bank = receivers::mmse(&model);
    let report = receivers::sinr(&model, &bank);
    println!("sinr at start: {:?}", report.sinr_values());

    // reproduce the amp-opt ratios manually via the public pieces:
    // objective sum alpha, constraint tight for target 1
    // => check what a single condensation+GP step does
    let n = 2usize; let k = 2usize; let r = 4usize;
    let sigma2 = 0.5;
    for j in 0..2 {
        let v = bank.v.column(j);
        let psi = 0.8;
        let d: Vec<Complex64> = (0..k).map(|kk| {
            let col = bank.v.column(j);
            col.rows(kk * r, r).dotc(&channels.f[kk])
        }).collect();
        let mut terms: Vec<Monomial> = Vec::new();
        for i in 0..n {
            let weight = if i == j { -delta.0[i] * moments[i] } else { psi * delta.0[i] * moments[i] };
            if weight == 0.0 { continue; }
            let c: Vec<Complex64> = (0..k).map(|kk| channels.g[(i, kk)] * d[kk]).collect();
            for kk in 0..k {
                let diag = weight * c[kk].norm_sqr();
                if diag != 0.0 { terms.push(Monomial::single(diag, &alpha_var(kk), 1.0)); }
                for ll in (kk + 1)..k {
                    let cross = weight * 2.0 * (c[kk] * c[ll].conj()).re;
                    if cross != 0.0 {
                        terms.push(Monomial::new(cross, [(alpha_var(kk), 0.5), (alpha_var(ll), 0.5)]));
                    }
                }
            }
        }
        for kk in 0..k {
            let coeff = psi * sigma2 * d[kk].norm_sqr();
            if coeff != 0.0 { terms.push(Monomial::single(coeff, &alpha_var(kk), 1.0)); }
        }
        terms.push(Monomial::constant(psi * sigma2 * v.norm_squared()));
        let s = probe_core::posyalg::Signomial::from_monomials(terms);
        let point: Assignment = (0..k).map(|kk| (alpha_var(kk), 2.0)).collect();
        let num = s.plus().evaluate(&point).unwrap();
        let den = s.minus().evaluate(&point).unwrap();
        println!("target {j}: num {num} den {den} ratio {}", num / den);
        let condensed = condense(s.minus(), &point).unwrap();
        let constraint = s.plus().mul_monomial(&condensed.inverse());
        let problem = GpProblem {
            objective: Posynomial::new((0..k).map(|kk| Monomial::single(1.0, &alpha_var(kk), 1.0))),
            constraints: vec![constraint],
            upper_bounds: (0..k).map(|kk| (alpha_var(kk), 2.0)).collect(),
        };
        match solve_gp_with(&problem, &point, GpOptions { tol: 1e-9, max_newton: 200 }) {
            Ok(sol) => println!("  single-constraint GP sol: {:?}", sol),
            Err(e) => println!("  single-constraint GP error: {e}"),
        }
    }

    // combined GP with both condensed constraints
    let mut all_constraints = Vec::new();
    for j in 0..2 {
        let v = bank.v.column(j);
        let psi = 0.8;
        let d: Vec<Complex64> = (0..k).map(|kk| {
            let col = bank.v.column(j);
            col.rows(kk * r, r).dotc(&channels.f[kk])
        }).collect();
        let mut terms: Vec<Monomial> = Vec::new();
        for i in 0..n {
            let weight = if i == j { -delta.0[i] * moments[i] } else { psi * delta.0[i] * moments[i] };
            if weight == 0.0 { continue; }
            let c: Vec<Complex64> = (0..k).map(|kk| channels.g[(i, kk)] * d[kk]).collect();
            for kk in 0..k {
                let diag = weight * c[kk].norm_sqr();
                if diag != 0.0 { terms.push(Monomial::single(diag, &alpha_var(kk), 1.0)); }
                for ll in (kk + 1)..k {
                    let cross = weight * 2.0 * (c[kk] * c[ll].conj()).re;
                    if cross != 0.0 {
                        terms.push(Monomial::new(cross, [(alpha_var(kk), 0.5), (alpha_var(ll), 0.5)]));
                    }
                }
            }
        }
        for kk in 0..k {
            let coeff = psi * sigma2 * d[kk].norm_sqr();
            if coeff != 0.0 { terms.push(Monomial::single(coeff, &alpha_var(kk), 1.0)); }
        }
        terms.push(Monomial::constant(psi * sigma2 * v.norm_squared()));
        let s = probe_core::posyalg::Signomial::from_monomials(terms);
        let point: Assignment = (0..k).map(|kk| (alpha_var(kk), 2.0)).collect();
        let condensed = condense(s.minus(), &point).unwrap();
        all_constraints.push(s.plus().mul_monomial(&condensed.inverse()));
    }
    let point: Assignment = (0..k).map(|kk| (alpha_var(kk), 2.0)).collect();
    let problem = GpProblem {
        objective: Posynomial::new((0..k).map(|kk| Monomial::single(1.0, &alpha_var(kk), 1.0))),
        constraints: all_constraints,
        upper_bounds: (0..k).map(|kk| (alpha_var(kk), 2.0)).collect(),
    };
    match solve_gp_with(&problem, &point, GpOptions { tol: 1e-9, max_newton: 200 }) {
        Ok(sol) => {
            println!("combined GP sol: {:?}", sol);
        }
        Err(e) => println!("combined GP error: {e}"),
    }

    let alt = mmse_alternating(&scenario, &channels, &OptimizerOptions::default()).unwrap();
    println!("alt: obj {} status {:?} alpha {:?}", alt.objective(), alt.status, alt.alpha);
}
