//! Per-link propagation following the 3GPP TR 38.901 indoor-factory profile
//! for dense clutter and low antennas (InF-DL): distance-dependent
//! line-of-sight probability, LOS/NLOS path loss, and log-normal shadowing,
//! composed with i.i.d. Rayleigh small-scale fading into channel vectors
//! `h = sqrt(beta) * g`.
//!
//! Large-scale quantities are drawn once per drop and held fixed; small-scale
//! vectors are redrawn per fading realization.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::SimConfig;
use crate::error::SimError;
use crate::topology::{Position3D, Topology};

/// Large-scale state of one sensor-to-AP link.
#[derive(Debug, Clone, Copy)]
pub struct LargeScaleGain {
    /// Linear power gain, `10^(-(pathloss_db + shadow_db)/10)`.
    pub beta: f64,
    pub los: bool,
    pub pathloss_db: f64,
    pub shadow_db: f64,
}

impl LargeScaleGain {
    pub fn compose(los: bool, pathloss_db: f64, shadow_db: f64) -> Self {
        LargeScaleGain {
            beta: 10f64.powf(-(pathloss_db + shadow_db) / 10.0),
            los,
            pathloss_db,
            shadow_db,
        }
    }
}

/// Line-of-sight probability at 2D distance `d_2d_m`, `exp(-d/k)` with
/// `k = -clutter_size / ln(1 - clutter_density)`.
pub fn los_probability(
    d_2d_m: f64,
    clutter_size_m: f64,
    clutter_density: f64,
) -> Result<f64, SimError> {
    if !(clutter_density > 0.0 && clutter_density < 1.0) {
        return Err(SimError::Domain(format!(
            "clutter density must be in (0, 1), got {clutter_density}"
        )));
    }
    if clutter_size_m <= 0.0 || clutter_size_m.is_nan() {
        return Err(SimError::Domain(format!(
            "clutter size must be positive, got {clutter_size_m}"
        )));
    }
    if d_2d_m < 0.0 {
        return Err(SimError::Domain(format!(
            "distance must be non-negative, got {d_2d_m}"
        )));
    }
    let k = -clutter_size_m / (1.0 - clutter_density).ln();
    Ok((-d_2d_m / k).exp())
}

/// Path loss in dB for the dense-clutter low-antenna indoor factory profile.
///
/// LOS: `31.84 + 21.5 log10(d) + 19 log10(f)`. NLOS takes the maximum of the
/// dense-clutter formula `18.6 + 35.7 log10(d) + 20 log10(f)`, the LOS value,
/// and the sparse-clutter formula `33 + 25.5 log10(d) + 20 log10(f)`.
/// Distances are clamped to 1 m to keep the log-distance law in range.
pub fn pathloss_db(d_3d_m: f64, carrier_ghz: f64, los: bool) -> Result<f64, SimError> {
    if d_3d_m <= 0.0 || d_3d_m.is_nan() {
        return Err(SimError::Domain(format!(
            "3D distance must be positive, got {d_3d_m}"
        )));
    }
    if carrier_ghz <= 0.0 || carrier_ghz.is_nan() {
        return Err(SimError::Domain(format!(
            "carrier frequency must be positive, got {carrier_ghz}"
        )));
    }
    let d = d_3d_m.max(1.0);
    let log_d = d.log10();
    let log_f = carrier_ghz.log10();
    let pl_los = 31.84 + 21.5 * log_d + 19.0 * log_f;
    if los {
        Ok(pl_los)
    } else {
        let pl_dense = 18.6 + 35.7 * log_d + 20.0 * log_f;
        let pl_sparse = 33.0 + 25.5 * log_d + 20.0 * log_f;
        Ok(pl_dense.max(pl_los).max(pl_sparse))
    }
}

/// Zero-mean log-normal shadowing draw in dB for the given link state.
pub fn shadowing_db<R: Rng>(los: bool, cfg: &SimConfig, rng: &mut R) -> f64 {
    let sigma = if los {
        cfg.shadow_sigma_los_db
    } else {
        cfg.shadow_sigma_nlos_db
    };
    let z: f64 = rng.sample(StandardNormal);
    sigma * z
}

/// Draw the full large-scale state of one link: Bernoulli LOS at the 2D
/// distance, path loss at the 3D distance, shadowing, composed into `beta`.
pub fn large_scale_beta<R: Rng>(
    sensor_pos: &Position3D,
    ap_pos: &Position3D,
    cfg: &SimConfig,
    rng: &mut R,
) -> LargeScaleGain {
    let d_2d = sensor_pos.horizontal_distance(ap_pos);
    let d_3d = sensor_pos.distance(ap_pos);
    let p_los =
        los_probability(d_2d, cfg.clutter_size_m, cfg.clutter_density).expect("validated config");
    let los = rng.random::<f64>() < p_los;
    let pl = pathloss_db(d_3d.max(f64::MIN_POSITIVE), cfg.carrier_freq_ghz, los)
        .expect("validated config");
    let shadow = shadowing_db(los, cfg, rng);
    LargeScaleGain::compose(los, pl, shadow)
}

/// Unit-variance complex Gaussian vector of length `m` (real and imaginary
/// parts independent with variance 1/2 each).
pub fn small_scale_vector<R: Rng>(m: usize, rng: &mut R) -> Vec<Complex64> {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    (0..m)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re * scale, im * scale)
        })
        .collect()
}

/// Dimensions shared by the channel containers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChannelDims {
    pub num_subnetworks: usize,
    pub sensors_per_subnetwork: usize,
    pub aps_per_subnetwork: usize,
    pub antennas_per_ap: usize,
}

impl ChannelDims {
    pub fn from_config(cfg: &SimConfig) -> Self {
        ChannelDims {
            num_subnetworks: cfg.num_subnetworks,
            sensors_per_subnetwork: cfg.sensors_per_subnetwork,
            aps_per_subnetwork: cfg.aps_per_subnetwork,
            antennas_per_ap: cfg.antennas_per_ap(),
        }
    }

    pub fn total_sensors(&self) -> usize {
        self.num_subnetworks * self.sensors_per_subnetwork
    }

    pub fn total_aps(&self) -> usize {
        self.num_subnetworks * self.aps_per_subnetwork
    }

    /// Stacked channel length per sub-network, `M = A_b * M_a`.
    pub fn total_antennas(&self) -> usize {
        self.aps_per_subnetwork * self.antennas_per_ap
    }

    pub fn subnetwork_of_sensor(&self, sensor: usize) -> usize {
        sensor / self.sensors_per_subnetwork
    }

    pub fn subnetwork_of_ap(&self, ap: usize) -> usize {
        ap / self.aps_per_subnetwork
    }
}

/// Large-scale gains for every sensor-to-AP link, fixed within a drop.
#[derive(Debug, Clone)]
pub struct LargeScaleState {
    dims: ChannelDims,
    gains: Vec<LargeScaleGain>,
}

impl LargeScaleState {
    /// Draw gains for all `O x A` links in deterministic link order.
    pub fn sample<R: Rng>(topology: &Topology, cfg: &SimConfig, rng: &mut R) -> Self {
        let dims = ChannelDims::from_config(cfg);
        let num_aps = dims.total_aps();
        let mut gains = Vec::with_capacity(dims.total_sensors() * num_aps);
        for sensor in 0..dims.total_sensors() {
            let sensor_pos = topology.sensor_position(sensor);
            for ap in 0..num_aps {
                let ap_pos = topology.ap_position(ap);
                gains.push(large_scale_beta(&sensor_pos, &ap_pos, cfg, rng));
            }
        }
        LargeScaleState { dims, gains }
    }

    /// Uniform-gain state for tests and calibration.
    #[cfg(test)]
    pub(crate) fn uniform(dims: ChannelDims, beta: f64) -> Self {
        let gains = vec![
            LargeScaleGain {
                beta,
                los: true,
                pathloss_db: 0.0,
                shadow_db: 0.0,
            };
            dims.total_sensors() * dims.total_aps()
        ];
        LargeScaleState { dims, gains }
    }

    pub fn dims(&self) -> ChannelDims {
        self.dims
    }

    pub fn gain(&self, sensor: usize, ap: usize) -> &LargeScaleGain {
        &self.gains[sensor * self.dims.total_aps() + ap]
    }
}

/// One fading realization of every link: `h_{o,a} = sqrt(beta_{o,a}) g_{o,a}`,
/// stored flat per link with per-link squared norms precomputed.
#[derive(Debug, Clone)]
pub struct ChannelState {
    dims: ChannelDims,
    coeffs: Vec<Complex64>,
    norm_sq: Vec<f64>,
}

impl ChannelState {
    /// Draw small-scale fading and compose with the given large-scale state.
    pub fn realize<R: Rng>(large: &LargeScaleState, rng: &mut R) -> Self {
        let dims = large.dims;
        let m = dims.antennas_per_ap;
        let links = dims.total_sensors() * dims.total_aps();
        let mut coeffs = Vec::with_capacity(links * m);
        let mut norm_sq = Vec::with_capacity(links);
        let scale_unit = std::f64::consts::FRAC_1_SQRT_2;
        for link in 0..links {
            let amp = large.gains[link].beta.sqrt() * scale_unit;
            let mut sum = 0.0;
            for _ in 0..m {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                let c = Complex64::new(re * amp, im * amp);
                sum += c.norm_sqr();
                coeffs.push(c);
            }
            norm_sq.push(sum);
        }
        ChannelState {
            dims,
            coeffs,
            norm_sq,
        }
    }

    /// Build a channel state directly from explicit link vectors, in
    /// `(sensor, ap)` row-major link order. Intended for tests and tools.
    pub fn from_links(dims: ChannelDims, links: Vec<Vec<Complex64>>) -> Self {
        assert_eq!(links.len(), dims.total_sensors() * dims.total_aps());
        let mut coeffs = Vec::with_capacity(links.len() * dims.antennas_per_ap);
        let mut norm_sq = Vec::with_capacity(links.len());
        for link in links {
            assert_eq!(link.len(), dims.antennas_per_ap);
            norm_sq.push(link.iter().map(|c| c.norm_sqr()).sum());
            coeffs.extend(link);
        }
        ChannelState {
            dims,
            coeffs,
            norm_sq,
        }
    }

    pub fn dims(&self) -> ChannelDims {
        self.dims
    }

    /// Channel vector of the (sensor, AP) link, length `M_a`.
    pub fn link(&self, sensor: usize, ap: usize) -> &[Complex64] {
        let m = self.dims.antennas_per_ap;
        let idx = (sensor * self.dims.total_aps() + ap) * m;
        &self.coeffs[idx..idx + m]
    }

    /// Squared Euclidean norm of the (sensor, AP) link vector.
    pub fn link_norm_sq(&self, sensor: usize, ap: usize) -> f64 {
        self.norm_sq[sensor * self.dims.total_aps() + ap]
    }

    /// Stacked channel vector of `sensor` toward sub-network `b`'s APs, in
    /// AP-index order; length `M`.
    pub fn stacked(&self, sensor: usize, b: usize) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.dims.total_antennas());
        for local in 0..self.dims.aps_per_subnetwork {
            let ap = b * self.dims.aps_per_subnetwork + local;
            out.extend_from_slice(self.link(sensor, ap));
        }
        out
    }
}

/// Draw a complete channel state for one (drop, realization) pair: large
/// scale first, then small scale.
pub fn build_channel_state<R: Rng>(
    topology: &Topology,
    cfg: &SimConfig,
    rng: &mut R,
) -> ChannelState {
    let large = LargeScaleState::sample(topology, cfg, rng);
    ChannelState::realize(&large, rng)
}
