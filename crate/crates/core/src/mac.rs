//! Channel-access decisions: per-AP sensed interference, the listen-before-
//! talk deferral rule, and the genie-aided adaptive power reduction loop that
//! steps every sensor's power down until no AP anywhere senses above the
//! threshold.

use std::collections::BTreeSet;

use crate::channel::ChannelState;
use crate::config::{PowerMode, SimConfig};
use crate::error::SimError;
use crate::units::{dbm_to_watts, ratio_to_db, watts_to_dbm};

/// Per-sensor transmit powers plus the adaptive-scheme bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    mu_w: Vec<f64>,
    /// The single shared level when the adaptive scheme chose one.
    pub common_power_dbm: Option<f64>,
    /// Number of reduction steps the adaptive scheme applied.
    pub apr_steps_applied: u32,
}

impl PowerAllocation {
    /// Every sensor at the same level.
    pub fn uniform_dbm(power_dbm: f64, num_sensors: usize) -> Self {
        PowerAllocation {
            mu_w: vec![dbm_to_watts(power_dbm); num_sensors],
            common_power_dbm: Some(power_dbm),
            apr_steps_applied: 0,
        }
    }

    /// Arbitrary per-sensor powers in watts.
    pub fn from_watts(mu_w: Vec<f64>) -> Self {
        PowerAllocation {
            mu_w,
            common_power_dbm: None,
            apr_steps_applied: 0,
        }
    }

    pub fn num_sensors(&self) -> usize {
        self.mu_w.len()
    }

    /// Transmit power of one sensor in watts.
    pub fn mu_w(&self, sensor: usize) -> f64 {
        self.mu_w[sensor]
    }

    /// Transmit power of one sensor in dBm.
    pub fn tx_power_dbm(&self, sensor: usize) -> f64 {
        match self.common_power_dbm {
            Some(p) => p,
            None => watts_to_dbm(self.mu_w[sensor]),
        }
    }

    /// Copy with the sensors of the given sub-networks muted (zero power), so
    /// they stop contributing as interferers.
    pub fn silenced(&self, deferred: &BTreeSet<usize>, sensors_per_subnetwork: usize) -> Self {
        let mut out = self.clone();
        for &b in deferred {
            let start = b * sensors_per_subnetwork;
            for mu in &mut out.mu_w[start..start + sensors_per_subnetwork] {
                *mu = 0.0;
            }
        }
        out
    }

    /// Copy with every power scaled by a linear factor.
    pub fn scaled(&self, factor: f64) -> Self {
        PowerAllocation {
            mu_w: self.mu_w.iter().map(|m| m * factor).collect(),
            common_power_dbm: None,
            apr_steps_applied: self.apr_steps_applied,
        }
    }
}

/// Outcome of one sensing pass.
#[derive(Debug, Clone)]
pub struct DeferralDecision {
    /// Sub-networks whose transmissions are suspended this opportunity.
    pub deferred: BTreeSet<usize>,
    /// Sensed average per-antenna uncontrolled interference at each AP, in
    /// watts, in global AP order.
    pub per_ap_interference_w: Vec<f64>,
}

impl DeferralDecision {
    pub fn is_deferred(&self, b: usize) -> bool {
        self.deferred.contains(&b)
    }

    /// Largest sensed per-antenna interference across all APs, in dBm.
    pub fn max_interference_dbm(&self) -> f64 {
        let max_w = self
            .per_ap_interference_w
            .iter()
            .fold(0.0f64, |a, &b| a.max(b));
        watts_to_dbm(max_w)
    }
}

/// Average per-antenna uncontrolled interference sensed at one AP:
/// `(1/M_a) * sum over out-of-sub-network sensors of mu_l * ||h_{l,a}||^2`,
/// using the current fading realization.
pub fn ap_uncontrolled_interference(
    state: &ChannelState,
    powers: &PowerAllocation,
    ap: usize,
) -> f64 {
    let dims = state.dims();
    let own = dims.subnetwork_of_ap(ap);
    let mut sum = 0.0;
    for sensor in 0..dims.total_sensors() {
        if dims.subnetwork_of_sensor(sensor) == own {
            continue;
        }
        let mu = powers.mu_w(sensor);
        if mu > 0.0 {
            sum += mu * state.link_norm_sq(sensor, ap);
        }
    }
    sum / dims.antennas_per_ap as f64
}

/// All-AP variant of [`ap_uncontrolled_interference`], summed sensor-major so
/// the result is identical term-for-term to the per-AP function.
fn per_ap_interference(state: &ChannelState, powers: &PowerAllocation) -> Vec<f64> {
    let dims = state.dims();
    let num_aps = dims.total_aps();
    let aps_per = dims.aps_per_subnetwork;
    let mut acc = vec![0.0f64; num_aps];
    for sensor in 0..dims.total_sensors() {
        let mu = powers.mu_w(sensor);
        if mu <= 0.0 {
            continue;
        }
        let own_start = dims.subnetwork_of_sensor(sensor) * aps_per;
        for (ap, slot) in acc.iter_mut().enumerate().take(own_start) {
            *slot += mu * state.link_norm_sq(sensor, ap);
        }
        for (ap, slot) in acc
            .iter_mut()
            .enumerate()
            .take(num_aps)
            .skip(own_start + aps_per)
        {
            *slot += mu * state.link_norm_sq(sensor, ap);
        }
    }
    let per_antenna = 1.0 / dims.antennas_per_ap as f64;
    for slot in &mut acc {
        *slot *= per_antenna;
    }
    acc
}

/// One-shot listen-before-talk decision with every sensor assumed
/// transmitting during sensing: a sub-network defers when the sensed
/// interference at any of its APs exceeds the threshold (strictly).
pub fn lbt_deferral_set(
    state: &ChannelState,
    powers: &PowerAllocation,
    threshold_dbm: f64,
) -> DeferralDecision {
    let dims = state.dims();
    let per_ap = per_ap_interference(state, powers);
    let threshold_w = dbm_to_watts(threshold_dbm);
    let mut deferred = BTreeSet::new();
    for (ap, &interference) in per_ap.iter().enumerate() {
        if interference > threshold_w {
            deferred.insert(dims.subnetwork_of_ap(ap));
        }
    }
    DeferralDecision {
        deferred,
        per_ap_interference_w: per_ap,
    }
}

/// Genie-aided adaptive power reduction: the largest level
/// `start - k * step` at which the sensed interference at every AP in every
/// sub-network is strictly below the threshold. The common level applies to
/// all sensors, so no sub-network defers.
pub fn apr_power(state: &ChannelState, cfg: &SimConfig) -> Result<PowerAllocation, SimError> {
    let PowerMode::Apr {
        start_dbm,
        step_db,
        floor_dbm,
    } = cfg.power_mode
    else {
        return Err(SimError::Domain(
            "apr_power requires power_mode = apr".into(),
        ));
    };
    let dims = state.dims();
    let num_sensors = dims.total_sensors();

    // Unit-power sensing profile: interference scales linearly with the
    // common level, so each 1 dB step lowers it by exactly 1 dB.
    let unit = PowerAllocation::from_watts(vec![1.0; num_sensors]);
    let unit_per_ap = per_ap_interference(state, &unit);
    let max_unit = unit_per_ap.iter().fold(0.0f64, |a, &b| a.max(b));

    let mut k = 0u32;
    if max_unit > 0.0 {
        let offset_db = ratio_to_db(max_unit);
        loop {
            let power_dbm = start_dbm - k as f64 * step_db;
            if power_dbm < floor_dbm {
                return Err(SimError::AprFloorReached { floor_dbm });
            }
            if power_dbm + offset_db < cfg.lbt_threshold_dbm {
                break;
            }
            k += 1;
        }
    }

    // Guard against log/linear rounding skew at the threshold boundary:
    // accept only when the sensing-path computation agrees, stepping further
    // down if it does not.
    loop {
        let power_dbm = start_dbm - k as f64 * step_db;
        if power_dbm < floor_dbm {
            return Err(SimError::AprFloorReached { floor_dbm });
        }
        let mut powers = PowerAllocation::uniform_dbm(power_dbm, num_sensors);
        powers.apr_steps_applied = k;
        let sensed = per_ap_interference(state, &powers);
        let max_dbm = watts_to_dbm(sensed.iter().fold(0.0f64, |a, &b| a.max(b)));
        if max_dbm < cfg.lbt_threshold_dbm {
            return Ok(powers);
        }
        k += 1;
    }
}

/// Apply the configured power policy to one fading realization.
///
/// Fixed mode keeps the configured level and runs the deferral rule; the
/// adaptive mode returns the reduced common level with an empty deferral set.
pub fn resolve_power_mode(
    cfg: &SimConfig,
    state: &ChannelState,
) -> Result<(PowerAllocation, DeferralDecision), SimError> {
    match cfg.power_mode {
        PowerMode::Fixed { power_dbm } => {
            let powers = PowerAllocation::uniform_dbm(power_dbm, state.dims().total_sensors());
            let decision = lbt_deferral_set(state, &powers, cfg.lbt_threshold_dbm);
            Ok((powers, decision))
        }
        PowerMode::Apr { .. } => {
            let powers = apr_power(state, cfg)?;
            let decision = lbt_deferral_set(state, &powers, cfg.lbt_threshold_dbm);
            assert!(
                decision.deferred.is_empty(),
                "adaptive power reduction must clear every AP"
            );
            Ok((powers, decision))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{build_channel_state, ChannelDims, ChannelState};
    use crate::topology::build_topology;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn rng(seed: u64) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(seed)
    }

    /// Two single-sensor, single-AP sub-networks with unit antennas; the
    /// cross-link squared norms are set explicitly, own links are 1.
    fn two_cell_state(cross_01: f64, cross_10: f64) -> ChannelState {
        let dims = ChannelDims {
            num_subnetworks: 2,
            sensors_per_subnetwork: 1,
            aps_per_subnetwork: 1,
            antennas_per_ap: 1,
        };
        let links = vec![
            vec![Complex64::new(1.0, 0.0)],             // sensor 0 -> ap 0 (own)
            vec![Complex64::new(cross_01.sqrt(), 0.0)], // sensor 0 -> ap 1
            vec![Complex64::new(cross_10.sqrt(), 0.0)], // sensor 1 -> ap 0
            vec![Complex64::new(1.0, 0.0)],             // sensor 1 -> ap 1 (own)
        ];
        ChannelState::from_links(dims, links)
    }

    #[test]
    fn single_subnetwork_senses_nothing() {
        let cfg = SimConfig::scenario(1, 2);
        let topo = build_topology(&cfg, &mut rng(83)).unwrap();
        let state = build_channel_state(&topo, &cfg, &mut rng(84));
        let powers = PowerAllocation::uniform_dbm(-15.0, 5);
        for ap in 0..2 {
            assert_eq!(ap_uncontrolled_interference(&state, &powers, ap), 0.0);
        }
        let decision = lbt_deferral_set(&state, &powers, -72.0);
        assert!(decision.deferred.is_empty());
    }

    #[test]
    fn single_interferer_hand_value() {
        // One external sensor at 1 mW through a squared norm of 2e-7 into a
        // single-antenna AP: 2e-10 W, i.e. about -66.99 dBm.
        let state = two_cell_state(1.0, 2e-7);
        let powers = PowerAllocation::uniform_dbm(0.0, 2);
        let sensed = ap_uncontrolled_interference(&state, &powers, 0);
        assert!((sensed - 2e-10).abs() / 2e-10 < 1e-12, "{sensed}");
        assert!((watts_to_dbm(sensed) - (-66.98970004336019)).abs() < 1e-9);
    }

    #[test]
    fn interference_is_linear_in_power() {
        let cfg = SimConfig::scenario(3, 2);
        let topo = build_topology(&cfg, &mut rng(89)).unwrap();
        let state = build_channel_state(&topo, &cfg, &mut rng(90));
        let powers = PowerAllocation::uniform_dbm(-20.0, 15);
        let scaled = powers.scaled(10.0);
        for ap in 0..6 {
            let base = ap_uncontrolled_interference(&state, &powers, ap);
            let boosted = ap_uncontrolled_interference(&state, &scaled, ap);
            assert!((boosted - 10.0 * base).abs() <= 1e-12 * boosted.abs().max(1e-300));
        }
        // Linearity in a single sensor's power: the delta from tripling one
        // external sensor equals twice that sensor's solo contribution.
        let mut mu: Vec<f64> = (0..15).map(|s| powers.mu_w(s)).collect();
        let mut solo = vec![0.0; 15];
        solo[10] = mu[10];
        let solo_term = ap_uncontrolled_interference(&state, &PowerAllocation::from_watts(solo), 0);
        assert!(solo_term > 0.0);
        mu[10] *= 3.0;
        let tripled = ap_uncontrolled_interference(&state, &PowerAllocation::from_watts(mu), 0);
        let base = ap_uncontrolled_interference(&state, &powers, 0);
        assert!(
            (tripled - base - 2.0 * solo_term).abs() <= 1e-12 * tripled,
            "{tripled} vs {base} + 2*{solo_term}"
        );
    }

    #[test]
    fn unreachable_threshold_never_defers() {
        let cfg = SimConfig::scenario(4, 1);
        let topo = build_topology(&cfg, &mut rng(91)).unwrap();
        let state = build_channel_state(&topo, &cfg, &mut rng(92));
        let powers = PowerAllocation::uniform_dbm(-10.0, 20);
        assert!(lbt_deferral_set(&state, &powers, f64::INFINITY)
            .deferred
            .is_empty());
    }

    #[test]
    fn always_exceeded_threshold_defers_everyone() {
        let cfg = SimConfig::scenario(4, 1);
        let topo = build_topology(&cfg, &mut rng(93)).unwrap();
        let state = build_channel_state(&topo, &cfg, &mut rng(94));
        let powers = PowerAllocation::uniform_dbm(-10.0, 20);
        let decision = lbt_deferral_set(&state, &powers, -1000.0);
        assert_eq!(decision.deferred.len(), 4);
    }

    #[test]
    fn apr_keeps_start_power_when_already_compliant() {
        // Cross norm 1e-6.5 at the -15 dBm start puts the worst AP at
        // -80 dBm, already below the -72 dBm threshold: zero steps.
        let state = two_cell_state(10f64.powf(-6.5), 10f64.powf(-6.5));
        let mut cfg = SimConfig::scenario(2, 1);
        cfg.sensors_per_subnetwork = 1;
        let powers = apr_power(&state, &cfg).unwrap();
        assert_eq!(powers.apr_steps_applied, 0);
        assert_eq!(powers.common_power_dbm, Some(-15.0));
    }

    #[test]
    fn apr_steps_past_exact_threshold_hits() {
        // Cross norm 1e-5 at a -15 dBm start puts the worst AP at -65 dBm.
        // Clearing a -72 dBm threshold strictly needs 8 one-dB steps: after
        // seven the level sits exactly on the threshold, which is not below.
        let state = two_cell_state(1e-5, 1e-5);
        let mut cfg = SimConfig::scenario(2, 1);
        cfg.sensors_per_subnetwork = 1;
        let powers = apr_power(&state, &cfg).unwrap();
        assert_eq!(powers.apr_steps_applied, 8);
        assert_eq!(powers.common_power_dbm, Some(-23.0));
        let decision = lbt_deferral_set(&state, &powers, cfg.lbt_threshold_dbm);
        assert!(decision.deferred.is_empty());
    }

    #[test]
    fn apr_single_subnetwork_never_steps() {
        let cfg = SimConfig::scenario(1, 4);
        let topo = build_topology(&cfg, &mut rng(97)).unwrap();
        let state = build_channel_state(&topo, &cfg, &mut rng(98));
        let powers = apr_power(&state, &cfg).unwrap();
        assert_eq!(powers.apr_steps_applied, 0);
        assert_eq!(powers.common_power_dbm, Some(-15.0));
    }

    #[test]
    fn apr_floor_error_on_pathological_draw() {
        // Enormous cross gain: even the floor cannot satisfy the threshold.
        let state = two_cell_state(1e20, 1e20);
        let mut cfg = SimConfig::scenario(2, 1);
        cfg.sensors_per_subnetwork = 1;
        let err = apr_power(&state, &cfg).unwrap_err();
        assert!(matches!(err, SimError::AprFloorReached { .. }));
    }

    #[test]
    fn apr_is_step_optimal() {
        let mut cfg = SimConfig::scenario(8, 2);
        cfg.power_mode = PowerMode::Apr {
            start_dbm: -10.0,
            step_db: 1.0,
            floor_dbm: -60.0,
        };
        let topo = build_topology(&cfg, &mut rng(101)).unwrap();
        let state = build_channel_state(&topo, &cfg, &mut rng(102));
        let powers = apr_power(&state, &cfg).unwrap();
        let chosen = powers.common_power_dbm.unwrap();
        let decision = lbt_deferral_set(&state, &powers, cfg.lbt_threshold_dbm);
        assert!(decision.deferred.is_empty());
        if powers.apr_steps_applied > 0 {
            // One step back up must fail the strictly-below condition.
            let bumped = PowerAllocation::uniform_dbm(chosen + 1.0, state.dims().total_sensors());
            let sensed = lbt_deferral_set(&state, &bumped, cfg.lbt_threshold_dbm);
            let max_dbm = sensed.max_interference_dbm();
            assert!(
                max_dbm >= cfg.lbt_threshold_dbm - 1e-9,
                "bumped interference {max_dbm} clears the threshold"
            );
        }
    }

    #[test]
    fn deferral_monotone_in_power() {
        let cfg = SimConfig::scenario(6, 2);
        let topo = build_topology(&cfg, &mut rng(103)).unwrap();
        let state = build_channel_state(&topo, &cfg, &mut rng(104));
        let mut previous: BTreeSet<usize> = BTreeSet::new();
        for power in [-40.0, -30.0, -20.0, -10.0, 0.0] {
            let powers = PowerAllocation::uniform_dbm(power, 30);
            let decision = lbt_deferral_set(&state, &powers, -72.0);
            assert!(
                previous.is_subset(&decision.deferred),
                "deferred set shrank when raising power to {power} dBm"
            );
            previous = decision.deferred;
        }
    }

    #[test]
    fn resolve_fixed_mode_runs_lbt() {
        let mut cfg = SimConfig::scenario(2, 1);
        cfg.power_mode = PowerMode::Fixed { power_dbm: -15.0 };
        cfg.sensors_per_subnetwork = 1;
        let state = two_cell_state(1e-4, 1e-9);
        let (powers, decision) = resolve_power_mode(&cfg, &state).unwrap();
        assert_eq!(powers.tx_power_dbm(0), -15.0);
        // Sensor 0 drives AP 1 to -15 - 40 = -55 dBm > -72: sub-network 1 defers.
        assert!(decision.is_deferred(1));
        assert!(!decision.is_deferred(0));
    }

    #[test]
    fn resolve_apr_mode_clears_all_aps() {
        let cfg = SimConfig::scenario(5, 2);
        let topo = build_topology(&cfg, &mut rng(107)).unwrap();
        let state = build_channel_state(&topo, &cfg, &mut rng(108));
        let (powers, decision) = resolve_power_mode(&cfg, &state).unwrap();
        assert!(decision.deferred.is_empty());
        assert!(powers.common_power_dbm.unwrap() <= -15.0);
    }

    #[test]
    fn silenced_allocation_mutes_whole_subnetworks() {
        let powers = PowerAllocation::uniform_dbm(-20.0, 6);
        let mut deferred = BTreeSet::new();
        deferred.insert(1usize);
        let silenced = powers.silenced(&deferred, 2);
        assert!(silenced.mu_w(0) > 0.0);
        assert_eq!(silenced.mu_w(2), 0.0);
        assert_eq!(silenced.mu_w(3), 0.0);
        assert!(silenced.mu_w(4) > 0.0);
    }
}
