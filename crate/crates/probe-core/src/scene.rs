//! Scenario geometry and physical-layer synthesis: planar-array steering
//! vectors with distance path loss, and the two random channel stages
//! (objects to sensors, sensors to fusion center).
//!
//! The transmitter is an `M x M'` uniform planar array with half-wavelength
//! spacing. The steering vector toward an object at azimuth `theta`,
//! elevation `phi` and range `r` is
//!
//! ```text
//! a[(m, m')] = sqrt(nu) * exp(j*pi*(m sin(theta) sin(phi) + m' cos(phi)))
//! ```
//!
//! with path loss `nu = r^-gamma`. Elements are laid out `m'`-fastest
//! (row-major over the planar grid); every downstream module inherits this
//! ordering. Angles cross the API boundary in degrees and are converted to
//! radians internally.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("scenario invalid: {0}")]
    Invalid(String),
    #[error("line-of-sight channel spec needs {expected} sensor positions, got {got}")]
    SensorPositions { expected: usize, got: usize },
    #[error("sensor {sensor} coincides with object {object}; line-of-sight distance is zero")]
    CoincidentSensor { sensor: usize, object: usize },
}

/// Uniform planar transmit array, `m_count` horizontal by `mprime_count`
/// vertical elements.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub m_count: usize,
    pub mprime_count: usize,
    #[serde(default = "default_spacing")]
    pub element_spacing_wavelengths: f64,
}

fn default_spacing() -> f64 {
    0.5
}

impl ArrayGeometry {
    pub fn total_elements(&self) -> usize {
        self.m_count * self.mprime_count
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectKind {
    Target,
    Clutter,
}

/// Passive reflector in the scene. Targets are the objects whose second
/// moment is of interest; clutters only contribute interference.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneObject {
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    pub range_m: f64,
    pub kind: ObjectKind,
    pub second_moment: f64,
}

/// How the object-to-sensor gains are produced.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum ChannelSpec {
    /// i.i.d. circularly-symmetric complex Gaussian, unit variance.
    Rayleigh,
    /// Deterministic line-of-sight: unit-magnitude phase from geometry with
    /// `1/distance` amplitude. Requires one Cartesian position per sensor.
    Los { sensor_positions: Vec<[f64; 3]> },
}

/// Full physical description of a probing scenario. Targets must precede
/// clutters in `objects`; `sinr_demands` has one entry per target.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub array: ArrayGeometry,
    pub objects: Vec<SceneObject>,
    pub sensor_count: usize,
    pub fusion_antennas: usize,
    pub pathloss_exponent: f64,
    pub noise_variance: f64,
    pub p_max: f64,
    pub alpha_max: f64,
    pub sinr_demands: Vec<f64>,
    pub channel_spec: ChannelSpec,
    pub rng_seed: i64,
}

impl Scenario {
    pub fn n_targets(&self) -> usize {
        self.objects
            .iter()
            .filter(|o| o.kind == ObjectKind::Target)
            .count()
    }

    pub fn n_clutters(&self) -> usize {
        self.objects.len() - self.n_targets()
    }

    pub fn n_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let fail = |msg: &str| Err(SceneError::Invalid(msg.to_string()));
        if self.array.m_count == 0 || self.array.mprime_count == 0 {
            return fail("array must have at least one element per dimension");
        }
        if self.objects.is_empty() {
            return fail("scenario needs at least one object");
        }
        if self.sensor_count == 0 || self.fusion_antennas == 0 {
            return fail("sensor_count and fusion_antennas must be positive");
        }
        let n_targets = self.n_targets();
        if n_targets == 0 {
            return fail("scenario needs at least one target");
        }
        // index convention: targets occupy the leading positions
        if self
            .objects
            .iter()
            .take(n_targets)
            .any(|o| o.kind != ObjectKind::Target)
        {
            return fail("targets must precede clutters in `objects`");
        }
        if self.sinr_demands.len() != n_targets {
            return fail("sinr_demands must have one entry per target");
        }
        if self.sinr_demands.iter().any(|d| *d <= 0.0) {
            return fail("sinr_demands must be positive");
        }
        if self.objects.iter().any(|o| o.range_m <= 0.0) {
            return fail("object ranges must be positive");
        }
        if self.objects.iter().any(|o| o.second_moment <= 0.0) {
            return fail("object second moments must be positive");
        }
        if self.pathloss_exponent <= 0.0
            || self.noise_variance <= 0.0
            || self.p_max <= 0.0
            || self.alpha_max <= 0.0
        {
            return fail("pathloss_exponent, noise_variance, p_max and alpha_max must be positive");
        }
        if let ChannelSpec::Los { sensor_positions } = &self.channel_spec {
            if sensor_positions.len() != self.sensor_count {
                return Err(SceneError::SensorPositions {
                    expected: self.sensor_count,
                    got: sensor_positions.len(),
                });
            }
        }
        Ok(())
    }

    /// Steering vectors of every object, in scenario order.
    pub fn steering_vectors(&self) -> Vec<DVector<Complex64>> {
        self.objects
            .iter()
            .map(|o| steering_vector(&self.array, o, self.pathloss_exponent))
            .collect()
    }
}

/// Channel realizations: `g[(i, k)]` from object `i` to sensor `k`, and per
/// sensor the vector `f_k` to the `R` fusion-center antennas.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    pub g: DMatrix<Complex64>,
    pub f: Vec<DVector<Complex64>>,
}

impl ChannelSet {
    pub fn n_objects(&self) -> usize {
        self.g.nrows()
    }

    pub fn n_sensors(&self) -> usize {
        self.g.ncols()
    }
}

/// Steering vector (including path loss) for one object; see the module
/// docs for the element layout.
pub fn steering_vector(array: &ArrayGeometry, object: &SceneObject, gamma: f64) -> DVector<Complex64> {
    let theta = object.azimuth_deg.to_radians();
    let phi = object.elevation_deg.to_radians();
    let nu = object.range_m.powf(-gamma);
    let amp = nu.sqrt();
    let horiz = theta.sin() * phi.sin();
    let vert = phi.cos();
    let mm = array.m_count * array.mprime_count;
    let mut a = DVector::zeros(mm);
    for m in 0..array.m_count {
        for mp in 0..array.mprime_count {
            let phase = std::f64::consts::PI * (m as f64 * horiz + mp as f64 * vert);
            a[m * array.mprime_count + mp] = Complex64::from_polar(amp, phase);
        }
    }
    a
}

/// Draws the channel realizations for a scenario. The result is a pure
/// function of `(scenario, rng_seed)`: the fusion links `f_k` are always
/// i.i.d. unit-variance complex Gaussian, and the object-to-sensor gains
/// follow the scenario's [`ChannelSpec`].
pub fn synthesize_channels(scenario: &Scenario) -> Result<ChannelSet, SceneError> {
    scenario.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.rng_seed as u64);
    let n = scenario.n_objects();
    let k = scenario.sensor_count;
    let r = scenario.fusion_antennas;

    let g = match &scenario.channel_spec {
        ChannelSpec::Rayleigh => {
            DMatrix::from_fn(n, k, |_, _| complex_gaussian(&mut rng))
        }
        ChannelSpec::Los { sensor_positions } => {
            let mut g = DMatrix::zeros(n, k);
            for (i, obj) in scenario.objects.iter().enumerate() {
                let pos = object_position(obj);
                for (kk, s) in sensor_positions.iter().enumerate() {
                    let d = ((pos[0] - s[0]).powi(2)
                        + (pos[1] - s[1]).powi(2)
                        + (pos[2] - s[2]).powi(2))
                    .sqrt();
                    if d == 0.0 {
                        return Err(SceneError::CoincidentSensor {
                            sensor: kk,
                            object: i,
                        });
                    }
                    g[(i, kk)] =
                        Complex64::from_polar(1.0 / d, 2.0 * std::f64::consts::PI * d);
                }
            }
            g
        }
    };
    let f = (0..k)
        .map(|_| DVector::from_fn(r, |_, _| complex_gaussian(&mut rng)))
        .collect();
    Ok(ChannelSet { g, f })
}

/// Cartesian position of an object from its spherical scenario coordinates
/// (azimuth from x toward y, elevation measured from the vertical axis).
fn object_position(obj: &SceneObject) -> [f64; 3] {
    let theta = obj.azimuth_deg.to_radians();
    let phi = obj.elevation_deg.to_radians();
    let r = obj.range_m;
    [
        r * phi.sin() * theta.cos(),
        r * phi.sin() * theta.sin(),
        r * phi.cos(),
    ]
}

/// One draw of a circularly-symmetric complex Gaussian with `E|x|^2 = 1`.
pub(crate) fn complex_gaussian<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}
