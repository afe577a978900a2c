//! Maximum-ratio transmission and the received-power coupling at the object
//! surfaces.
//!
//! With MRT filters `u_j = a_j / ||a_j||` the power delivered to object `j`
//! is `delta_j(p) = sum_i |a_j^H u_i|^2 p_i`, a fixed non-negative linear map
//! of the power allocation. For a target the own-beam entry is exactly
//! `nu_j * M * M'` (the array gain times path loss); cross entries capture
//! beam overlap. The map is exposed as a precomputed matrix because every
//! optimizer iteration evaluates `delta(p)`, and its linearity in `p` is what
//! keeps the MRC constraints posynomial in `(p, alpha)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::scene::{ObjectKind, Scenario};

#[derive(Debug, Error)]
pub enum TxError {
    #[error("steering vector {index} has zero norm")]
    DegenerateSteering { index: usize },
}

/// Per-target transmit powers `p_j >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation(pub Vec<f64>);

impl PowerAllocation {
    pub fn uniform(total: f64, n_targets: usize) -> Self {
        Self(vec![total / n_targets as f64; n_targets])
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Received signal power at each object and clutter surface, scenario order.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaProfile(pub Vec<f64>);

/// The linear map `p -> delta`; rows are objects (targets then clutters),
/// columns are targets.
#[derive(Debug, Clone)]
pub struct DeltaCoupling {
    matrix: DMatrix<f64>,
}

impl DeltaCoupling {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `delta = G * p`.
    pub fn profile(&self, p: &PowerAllocation) -> DeltaProfile {
        assert_eq!(p.0.len(), self.matrix.ncols(), "power vector length");
        let p_vec = DVector::from_column_slice(&p.0);
        DeltaProfile((&self.matrix * p_vec).iter().copied().collect())
    }

    pub fn entry(&self, object: usize, target: usize) -> f64 {
        self.matrix[(object, target)]
    }
}

/// Unit-norm MRT beamformers, one per target steering vector.
pub fn mrt_filters(steering: &[DVector<Complex64>]) -> Result<Vec<DVector<Complex64>>, TxError> {
    steering
        .iter()
        .enumerate()
        .map(|(index, a)| {
            let norm = a.norm();
            if norm == 0.0 {
                Err(TxError::DegenerateSteering { index })
            } else {
                Ok(a / Complex64::new(norm, 0.0))
            }
        })
        .collect()
}

/// Builds the `N x N^t` coupling matrix with entries `|a_j^H u_i|^2`.
///
/// `steering` holds all `N` object steering vectors (targets first), while
/// `filters` holds the `N^t` unit-norm MRT beams. Entries are invariant to
/// global phase rotations of any steering vector, and the target diagonal
/// reduces to `nu_j * M * M'`.
pub fn delta_coupling_matrix(
    scenario: &Scenario,
    steering: &[DVector<Complex64>],
    filters: &[DVector<Complex64>],
) -> DeltaCoupling {
    let n = scenario.n_objects();
    let n_targets = scenario.n_targets();
    assert_eq!(steering.len(), n, "one steering vector per object");
    assert_eq!(filters.len(), n_targets, "one MRT filter per target");
    debug_assert!(scenario
        .objects
        .iter()
        .take(n_targets)
        .all(|o| o.kind == ObjectKind::Target));

    let matrix = DMatrix::from_fn(n, n_targets, |j, i| {
        steering[j].dotc(&filters[i]).norm_sqr()
    });
    DeltaCoupling { matrix }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{steering_vector, ArrayGeometry, ChannelSpec, SceneObject};

    fn scenario_with(objects: Vec<SceneObject>) -> Scenario {
        let n_targets = objects
            .iter()
            .filter(|o| o.kind == ObjectKind::Target)
            .count();
        Scenario {
            array: ArrayGeometry {
                m_count: 2,
                mprime_count: 2,
                element_spacing_wavelengths: 0.5,
            },
            objects,
            sensor_count: 2,
            fusion_antennas: 2,
            pathloss_exponent: 2.0,
            noise_variance: 0.5,
            p_max: 10.0,
            alpha_max: 2.0,
            sinr_demands: vec![1.0; n_targets],
            channel_spec: ChannelSpec::Rayleigh,
            rng_seed: 1,
        }
    }

    fn object(az: f64, el: f64, r: f64, kind: ObjectKind) -> SceneObject {
        SceneObject {
            azimuth_deg: az,
            elevation_deg: el,
            range_m: r,
            kind,
            second_moment: 1.0,
        }
    }

    #[test]
    fn mrt_normalizes() {
        let a = DVector::from_vec(vec![Complex64::new(2.0, 0.0), Complex64::new(0.0, 0.0)]);
        let u = mrt_filters(&[a]).unwrap();
        assert!((u[0][0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(u[0][1].norm() < 1e-15);
    }

    #[test]
    fn mrt_unit_norm_independent_of_pathloss() {
        let array = ArrayGeometry {
            m_count: 2,
            mprime_count: 2,
            element_spacing_wavelengths: 0.5,
        };
        for r in [0.5, 1.0, 2.0] {
            let a = steering_vector(&array, &object(31.0, 64.0, r, ObjectKind::Target), 2.0);
            let u = mrt_filters(std::slice::from_ref(&a)).unwrap();
            assert!((u[0].norm() - 1.0).abs() < 1e-12);
            // u = a / sqrt(M M' nu): direction has no nu left in it
            let expected = &a / Complex64::new((4.0 * r.powf(-2.0)).sqrt(), 0.0);
            assert!((&u[0] - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn mrt_rejects_zero_vector() {
        let a = DVector::from_vec(vec![Complex64::new(0.0, 0.0)]);
        assert!(matches!(
            mrt_filters(&[a]),
            Err(TxError::DegenerateSteering { index: 0 })
        ));
    }

    #[test]
    fn lone_target_gets_array_gain() {
        // single target, nu=1, M=M'=2, p=1 -> delta = 4
        let sc = scenario_with(vec![object(20.0, 40.0, 1.0, ObjectKind::Target)]);
        let steering = sc.steering_vectors();
        let filters = mrt_filters(&steering).unwrap();
        let coupling = delta_coupling_matrix(&sc, &steering, &filters);
        let delta = coupling.profile(&PowerAllocation(vec![1.0]));
        assert!((delta.0[0] - 4.0).abs() < 1e-12, "delta {}", delta.0[0]);
    }

    #[test]
    fn orthogonal_targets_decouple() {
        // steering vectors built to be orthogonal: hand two orthogonal vectors
        // through the coupling and check zero off-diagonals
        let sc = scenario_with(vec![
            object(0.0, 0.0, 1.0, ObjectKind::Target),
            object(0.0, 0.0, 1.0, ObjectKind::Target),
        ]);
        let e1 = DVector::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
        ]);
        let e2 = DVector::from_vec(vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
        ]);
        let steering = vec![e1, e2];
        let filters = mrt_filters(&steering).unwrap();
        let coupling = delta_coupling_matrix(&sc, &steering, &filters);
        assert!(coupling.entry(0, 1).abs() < 1e-15);
        assert!(coupling.entry(1, 0).abs() < 1e-15);
        assert!((coupling.entry(0, 0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn colocated_clutter_row_matches_target_row() {
        // clutter at the same angles and unit range as target 1: its coupling
        // row equals the target row, with the array gain appearing as
        // |a^H u|^2 = M M' nu
        let sc = scenario_with(vec![
            object(20.0, 40.0, 1.0, ObjectKind::Target),
            object(45.0, 30.0, 1.0, ObjectKind::Target),
            object(20.0, 40.0, 1.0, ObjectKind::Clutter),
        ]);
        let steering = sc.steering_vectors();
        let filters = mrt_filters(&steering[..2]).unwrap();
        let coupling = delta_coupling_matrix(&sc, &steering, &filters);
        for i in 0..2 {
            assert!(
                (coupling.entry(2, i) - coupling.entry(0, i)).abs() < 1e-12,
                "column {i}"
            );
        }
        assert!((coupling.entry(2, 0) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn delta_is_linear_and_homogeneous_in_power() {
        let sc = scenario_with(vec![
            object(20.0, 40.0, 1.0, ObjectKind::Target),
            object(45.0, 30.0, 1.0, ObjectKind::Target),
            object(70.0, 85.0, 0.5, ObjectKind::Clutter),
        ]);
        let steering = sc.steering_vectors();
        let filters = mrt_filters(&steering[..2]).unwrap();
        let coupling = delta_coupling_matrix(&sc, &steering, &filters);
        let p = PowerAllocation(vec![0.7, 1.9]);
        let d1 = coupling.profile(&p);
        let d2 = coupling.profile(&PowerAllocation(vec![1.4, 3.8]));
        for (a, b) in d1.0.iter().zip(&d2.0) {
            assert!(*a >= 0.0);
            assert!((2.0 * a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn coupling_invariant_to_global_phase() {
        let sc = scenario_with(vec![
            object(20.0, 40.0, 1.0, ObjectKind::Target),
            object(45.0, 30.0, 1.0, ObjectKind::Target),
        ]);
        let steering = sc.steering_vectors();
        let filters = mrt_filters(&steering).unwrap();
        let rotated: Vec<_> = steering
            .iter()
            .map(|a| a * Complex64::from_polar(1.0, 1.234))
            .collect();
        let c0 = delta_coupling_matrix(&sc, &steering, &filters);
        let c1 = delta_coupling_matrix(&sc, &rotated, &filters);
        assert!((c0.matrix() - c1.matrix()).amax() < 1e-12);
    }
}
