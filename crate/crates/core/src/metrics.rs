//! Per-sensor uplink metrics at the control unit: desired signal power,
//! controlled (intra-sub-network) and uncontrolled (inter-sub-network)
//! interference powers, SINR, and the finite-blocklength achievable rate
//! (Shannon capacity minus the channel-dispersion penalty).

use num_complex::Complex64;

use crate::beamforming::ZfBeamformer;
use crate::channel::ChannelState;
use crate::config::SimConfig;
use crate::error::SimError;
use crate::linalg::norm_sq;
use crate::mac::{DeferralDecision, PowerAllocation};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

/// Receiver noise power over the configured bandwidth, including the noise
/// figure.
#[derive(Debug, Clone, Copy)]
pub struct NoiseBudget {
    pub sigma_n_sq_w: f64,
}

/// Computed uplink metrics of one sensor for one fading realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorMetrics {
    /// Desired received signal power, W.
    pub p_signal_w: f64,
    /// Controlled (intra-sub-network) interference power, W.
    pub p_ci_w: f64,
    /// Uncontrolled (inter-sub-network) interference power, W.
    pub p_ui_w: f64,
    /// Linear signal-to-interference-plus-noise ratio.
    pub sinr: f64,
    /// Finite-blocklength uplink rate, bit/s (zero when deferred).
    pub rate_bps: f64,
    pub deferred: bool,
}

impl SensorMetrics {
    fn deferred() -> Self {
        SensorMetrics {
            p_signal_w: 0.0,
            p_ci_w: 0.0,
            p_ui_w: 0.0,
            sinr: 0.0,
            rate_bps: 0.0,
            deferred: true,
        }
    }
}

/// Noise power `sigma_n^2` from the PSD, bandwidth, and noise figure:
/// `10^((psd_dbm_hz + 10 log10(W) + nf_db - 30)/10)` watts.
pub fn noise_power(cfg: &SimConfig) -> NoiseBudget {
    let dbm = cfg.noise_psd_dbm_hz + 10.0 * cfg.bandwidth_hz.log10() + cfg.noise_figure_db;
    NoiseBudget {
        sigma_n_sq_w: 10f64.powf((dbm - 30.0) / 10.0),
    }
}

/// Combined response of beamformer column `o` of sub-network `b` to sensor
/// `l`'s stacked channel toward `b`'s APs, without materializing the stack.
fn response_to_sensor(
    beam: &ZfBeamformer,
    state: &ChannelState,
    b: usize,
    o_local: usize,
    sensor: usize,
) -> Complex64 {
    let dims = state.dims();
    let m = dims.antennas_per_ap;
    let column = beam.column(o_local);
    let mut acc = Complex64::new(0.0, 0.0);
    for local_ap in 0..dims.aps_per_subnetwork {
        let ap = b * dims.aps_per_subnetwork + local_ap;
        let block = &column[local_ap * m..(local_ap + 1) * m];
        for (w, h) in block.iter().zip(state.link(sensor, ap)) {
            acc += w.conj() * h;
        }
    }
    acc
}

/// Desired, controlled-interference, and uncontrolled-interference powers for
/// sensor `o_local` of sub-network `b`. Sensors with zero allocated power
/// (muted deferred sub-networks) contribute nothing.
pub fn sensor_powers(
    beam: &ZfBeamformer,
    state: &ChannelState,
    powers: &PowerAllocation,
    b: usize,
    o_local: usize,
) -> (f64, f64, f64) {
    let dims = state.dims();
    let own_start = b * dims.sensors_per_subnetwork;
    let own_end = own_start + dims.sensors_per_subnetwork;
    let self_global = own_start + o_local;

    let mut p_signal = 0.0;
    let mut p_ci = 0.0;
    let mut p_ui = 0.0;
    for sensor in 0..dims.total_sensors() {
        let mu = powers.mu_w(sensor);
        if mu <= 0.0 {
            continue;
        }
        let gain = response_to_sensor(beam, state, b, o_local, sensor).norm_sqr();
        let contribution = mu * gain;
        if sensor == self_global {
            p_signal = contribution;
        } else if sensor >= own_start && sensor < own_end {
            p_ci += contribution;
        } else {
            p_ui += contribution;
        }
    }
    (p_signal, p_ci, p_ui)
}

/// Linear SINR: `p_signal / (p_ci + p_ui + sigma_n^2 ||f_o||^2)`.
pub fn sinr(
    p_signal_w: f64,
    p_ci_w: f64,
    p_ui_w: f64,
    beam_column: &[Complex64],
    noise: &NoiseBudget,
) -> f64 {
    if p_signal_w == 0.0 {
        return 0.0;
    }
    p_signal_w / (p_ci_w + p_ui_w + noise.sigma_n_sq_w * norm_sq(beam_column))
}

/// Inverse of the standard Gaussian tail function: `x` such that
/// `P(X > x) = p`. Rational initial guess refined by Newton steps on the
/// complementary error function; absolute accuracy well below 1e-9 across
/// (0, 1).
pub fn q_inv(p: f64) -> Result<f64, SimError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(SimError::Domain(format!(
            "tail probability must be in (0, 1), got {p}"
        )));
    }
    // Mirror the upper half onto the small-tail side, where erfc keeps full
    // relative precision (1 - p is exact for p >= 0.5).
    if p > 0.5 {
        return Ok(-q_inv(1.0 - p)?);
    }
    let mut x = -gaussian_quantile_estimate(p);
    for _ in 0..3 {
        let tail = 0.5 * libm::erfc(x / SQRT_2);
        let density = (-0.5 * x * x).exp() / SQRT_2PI;
        if density == 0.0 {
            break;
        }
        x += (tail - p) / density;
    }
    Ok(x)
}

/// Rational approximation of the standard normal quantile (Acklam's
/// coefficients), good to ~1e-9 before refinement.
fn gaussian_quantile_estimate(p: f64) -> f64 {
    const A: [f64; 6] = [
        -39.696_830_286_653_76,
        220.946_098_424_520_9,
        -275.928_510_446_968_74,
        138.357_751_867_269_18,
        -30.664_798_066_147_16,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -54.476_098_798_224_06,
        161.585_836_858_040_94,
        -155.698_979_859_886_66,
        66.801_311_887_719_72,
        -13.280_681_552_885_72,
    ];
    const C: [f64; 6] = [
        -0.007_784_894_002_430_293,
        -0.322_396_458_041_136_4,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        0.007_784_695_709_041_462,
        0.322_467_129_070_039_8,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const LOW: f64 = 0.02425;

    if p < LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Finite-blocklength uplink rate in bit/s for a linear SINR:
/// `tau_up * W * (log2(1+G) - sqrt(1 - (1+G)^-2) * Qinv(zeta)/sqrt(D W) * log2 e)`,
/// clamped below at zero. The dispersion penalty vanishes as `D W` grows,
/// leaving the Shannon term.
pub fn fbl_rate(gamma: f64, cfg: &SimConfig) -> f64 {
    if gamma <= 0.0 {
        return 0.0;
    }
    let one_plus = 1.0 + gamma;
    let shannon = one_plus.log2();
    let dispersion = (1.0 - 1.0 / (one_plus * one_plus)).sqrt();
    let quantile = q_inv(cfg.packet_error_rate).expect("validated config");
    let blocklength = cfg.packet_duration_s * cfg.bandwidth_hz;
    let penalty = dispersion * quantile / blocklength.sqrt() * std::f64::consts::LOG2_E;
    (cfg.uplink_fraction * cfg.bandwidth_hz * (shannon - penalty)).max(0.0)
}

/// Metrics for every sensor in the system. Sensors of deferred sub-networks
/// get zero rate with the deferred flag set; unless configured otherwise they
/// are muted as interferers toward the surviving sub-networks.
pub fn evaluate_all_sensors(
    state: &ChannelState,
    beamformers: &[Option<ZfBeamformer>],
    powers: &PowerAllocation,
    noise: &NoiseBudget,
    deferral: &DeferralDecision,
    cfg: &SimConfig,
) -> Vec<SensorMetrics> {
    let dims = state.dims();
    assert_eq!(beamformers.len(), dims.num_subnetworks);
    let effective = if cfg.include_deferred_interference {
        powers.clone()
    } else {
        powers.silenced(&deferral.deferred, dims.sensors_per_subnetwork)
    };

    let mut out = Vec::with_capacity(dims.total_sensors());
    for (b, beamformer) in beamformers.iter().enumerate() {
        if deferral.is_deferred(b) {
            out.extend(std::iter::repeat_n(
                SensorMetrics::deferred(),
                dims.sensors_per_subnetwork,
            ));
            continue;
        }
        let beam = beamformer
            .as_ref()
            .expect("surviving sub-network must carry a beamformer");
        for o_local in 0..dims.sensors_per_subnetwork {
            let (p_signal, p_ci, p_ui) = sensor_powers(beam, state, &effective, b, o_local);
            let gamma = sinr(p_signal, p_ci, p_ui, beam.column(o_local), noise);
            out.push(SensorMetrics {
                p_signal_w: p_signal,
                p_ci_w: p_ci,
                p_ui_w: p_ui,
                sinr: gamma,
                rate_bps: fbl_rate(gamma, cfg),
                deferred: false,
            });
        }
    }
    out
}
