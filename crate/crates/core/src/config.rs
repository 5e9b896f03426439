//! Scenario configuration: a flat `key = value` document with `#` comments.
//!
//! Unknown keys are rejected, defaults are applied for absent optional keys,
//! and `to_document` emits a canonical form that re-parses to an identical
//! configuration.

use crate::error::ConfigError;

/// Sensor transmit-power policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PowerMode {
    /// Every sensor transmits at a fixed level; sub-networks that sense
    /// above-threshold interference defer.
    Fixed { power_dbm: f64 },
    /// Genie-aided scheme: one common level, stepped down from `start_dbm`
    /// until no access point anywhere senses above the threshold.
    Apr {
        start_dbm: f64,
        step_db: f64,
        floor_dbm: f64,
    },
}

/// Full scenario configuration for a simulation campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub hall_side_m: f64,
    pub hall_height_m: f64,
    pub num_subnetworks: usize,
    pub subnetwork_radius_m: f64,
    pub min_center_separation_m: f64,
    pub sensors_per_subnetwork: usize,
    pub total_antennas: usize,
    pub aps_per_subnetwork: usize,
    pub ap_height_m: f64,
    pub sensor_height_m: f64,
    pub carrier_freq_ghz: f64,
    pub bandwidth_hz: f64,
    pub packet_duration_s: f64,
    pub packet_error_rate: f64,
    pub uplink_fraction: f64,
    pub noise_psd_dbm_hz: f64,
    pub noise_figure_db: f64,
    pub lbt_threshold_dbm: f64,
    pub power_mode: PowerMode,
    pub clutter_size_m: f64,
    pub clutter_density: f64,
    pub effective_clutter_height_m: f64,
    pub shadow_sigma_los_db: f64,
    pub shadow_sigma_nlos_db: f64,
    /// Keep deferred sub-networks' sensors as interferers toward survivors.
    /// Off by default: a silent sub-network radiates nothing.
    pub include_deferred_interference: bool,
    pub num_drops: u64,
    pub fading_realizations_per_drop: u32,
    pub master_seed: u64,
}

impl SimConfig {
    /// Configuration with every optional key at its default, for a scenario
    /// defined by the number of sub-networks and APs per sub-network.
    pub fn scenario(num_subnetworks: usize, aps_per_subnetwork: usize) -> Self {
        SimConfig {
            hall_side_m: 100.0,
            hall_height_m: 15.0,
            num_subnetworks,
            subnetwork_radius_m: 5.0,
            min_center_separation_m: 10.0,
            sensors_per_subnetwork: 5,
            total_antennas: 20,
            aps_per_subnetwork,
            ap_height_m: 5.0,
            sensor_height_m: 1.5,
            carrier_freq_ghz: 6.0,
            bandwidth_hz: 1e8,
            packet_duration_s: 50e-6,
            packet_error_rate: 1e-6,
            uplink_fraction: 0.4,
            noise_psd_dbm_hz: -174.0,
            noise_figure_db: 9.0,
            lbt_threshold_dbm: -72.0,
            power_mode: PowerMode::Apr {
                start_dbm: -15.0,
                step_db: 1.0,
                floor_dbm: -60.0,
            },
            clutter_size_m: 2.0,
            clutter_density: 0.6,
            effective_clutter_height_m: 10.0,
            shadow_sigma_los_db: 4.3,
            shadow_sigma_nlos_db: 7.2,
            include_deferred_interference: false,
            num_drops: 1000,
            fading_realizations_per_drop: 1,
            master_seed: 0,
        }
    }

    /// Antennas per AP, `M / A_b`.
    pub fn antennas_per_ap(&self) -> usize {
        self.total_antennas / self.aps_per_subnetwork
    }

    /// Total sensor count across all sub-networks.
    pub fn total_sensors(&self) -> usize {
        self.num_subnetworks * self.sensors_per_subnetwork
    }

    /// Total AP count across all sub-networks.
    pub fn total_aps(&self) -> usize {
        self.num_subnetworks * self.aps_per_subnetwork
    }

    /// Parse a flat key-value document, applying defaults for absent keys.
    pub fn parse(text: &str) -> Result<SimConfig, ConfigError> {
        let mut doc = Document::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let stripped = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let stripped = stripped.trim();
            if stripped.is_empty() {
                continue;
            }
            let (key, value) = stripped.split_once('=').ok_or_else(|| ConfigError::Parse {
                line,
                message: format!("expected `key = value`, got `{stripped}`"),
            })?;
            doc.set(key.trim(), value.trim(), line)?;
        }
        doc.build()
    }

    /// Canonical serialization; `parse(to_document())` round-trips exactly.
    pub fn to_document(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        kv("hall_side_m", self.hall_side_m.to_string());
        kv("hall_height_m", self.hall_height_m.to_string());
        kv("num_subnetworks", self.num_subnetworks.to_string());
        kv("subnetwork_radius_m", self.subnetwork_radius_m.to_string());
        kv(
            "min_center_separation_m",
            self.min_center_separation_m.to_string(),
        );
        kv(
            "sensors_per_subnetwork",
            self.sensors_per_subnetwork.to_string(),
        );
        kv("total_antennas", self.total_antennas.to_string());
        kv("aps_per_subnetwork", self.aps_per_subnetwork.to_string());
        kv("ap_height_m", self.ap_height_m.to_string());
        kv("sensor_height_m", self.sensor_height_m.to_string());
        kv("carrier_freq_ghz", self.carrier_freq_ghz.to_string());
        kv("bandwidth_hz", self.bandwidth_hz.to_string());
        kv("packet_duration_s", self.packet_duration_s.to_string());
        kv("packet_error_rate", self.packet_error_rate.to_string());
        kv("uplink_fraction", self.uplink_fraction.to_string());
        kv("noise_psd_dbm_hz", self.noise_psd_dbm_hz.to_string());
        kv("noise_figure_db", self.noise_figure_db.to_string());
        kv("lbt_threshold_dbm", self.lbt_threshold_dbm.to_string());
        match self.power_mode {
            PowerMode::Fixed { power_dbm } => {
                kv("power_mode", "fixed".to_string());
                kv("fixed_power_dbm", power_dbm.to_string());
            }
            PowerMode::Apr {
                start_dbm,
                step_db,
                floor_dbm,
            } => {
                kv("power_mode", "apr".to_string());
                kv("apr_start_dbm", start_dbm.to_string());
                kv("apr_step_db", step_db.to_string());
                kv("apr_floor_dbm", floor_dbm.to_string());
            }
        }
        kv("clutter_size_m", self.clutter_size_m.to_string());
        kv("clutter_density", self.clutter_density.to_string());
        kv(
            "effective_clutter_height_m",
            self.effective_clutter_height_m.to_string(),
        );
        kv("shadow_sigma_los_db", self.shadow_sigma_los_db.to_string());
        kv(
            "shadow_sigma_nlos_db",
            self.shadow_sigma_nlos_db.to_string(),
        );
        kv(
            "include_deferred_interference",
            self.include_deferred_interference.to_string(),
        );
        kv("num_drops", self.num_drops.to_string());
        kv(
            "fading_realizations_per_drop",
            self.fading_realizations_per_drop.to_string(),
        );
        kv("master_seed", self.master_seed.to_string());
        out
    }

    /// Check every configuration invariant, naming the violated one on error.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |msg: String| Err(ConfigError::Validation(msg));
        let positive = [
            ("hall_side_m", self.hall_side_m),
            ("hall_height_m", self.hall_height_m),
            ("subnetwork_radius_m", self.subnetwork_radius_m),
            ("min_center_separation_m", self.min_center_separation_m),
            ("ap_height_m", self.ap_height_m),
            ("sensor_height_m", self.sensor_height_m),
            ("carrier_freq_ghz", self.carrier_freq_ghz),
            ("bandwidth_hz", self.bandwidth_hz),
            ("packet_duration_s", self.packet_duration_s),
            ("clutter_size_m", self.clutter_size_m),
            (
                "effective_clutter_height_m",
                self.effective_clutter_height_m,
            ),
        ];
        for (name, value) in positive {
            if value <= 0.0 || !value.is_finite() {
                return err(format!("{name} must be positive, got {value}"));
            }
        }
        if self.num_subnetworks == 0 {
            return err("num_subnetworks must be at least 1".into());
        }
        if self.sensors_per_subnetwork == 0 {
            return err("sensors_per_subnetwork must be at least 1".into());
        }
        if self.aps_per_subnetwork == 0 {
            return err("aps_per_subnetwork must be at least 1".into());
        }
        if self.total_antennas == 0 {
            return err("total_antennas must be at least 1".into());
        }
        if self.total_antennas % self.aps_per_subnetwork != 0 {
            return err(format!(
                "total_antennas ({}) must be divisible by aps_per_subnetwork ({})",
                self.total_antennas, self.aps_per_subnetwork
            ));
        }
        if self.total_antennas < self.sensors_per_subnetwork {
            return err(format!(
                "zero-forcing needs total_antennas ({}) >= sensors_per_subnetwork ({})",
                self.total_antennas, self.sensors_per_subnetwork
            ));
        }
        if self.hall_side_m < 2.0 * self.subnetwork_radius_m {
            return err(format!(
                "hall_side_m ({}) too small for sub-network radius {}",
                self.hall_side_m, self.subnetwork_radius_m
            ));
        }
        if self.ap_height_m > self.hall_height_m || self.sensor_height_m > self.hall_height_m {
            return err("AP and sensor heights must not exceed hall_height_m".into());
        }
        if !(self.uplink_fraction > 0.0 && self.uplink_fraction <= 1.0) {
            return err(format!(
                "uplink_fraction must be in (0, 1], got {}",
                self.uplink_fraction
            ));
        }
        if !(self.packet_error_rate > 0.0 && self.packet_error_rate < 0.5) {
            return err(format!(
                "packet_error_rate must be in (0, 0.5), got {}",
                self.packet_error_rate
            ));
        }
        if !(self.clutter_density > 0.0 && self.clutter_density < 1.0) {
            return err(format!(
                "clutter_density must be in (0, 1), got {}",
                self.clutter_density
            ));
        }
        if self.shadow_sigma_los_db < 0.0 || self.shadow_sigma_nlos_db < 0.0 {
            return err("shadowing standard deviations must be non-negative".into());
        }
        if self.noise_figure_db < 0.0 {
            return err("noise_figure_db must be non-negative".into());
        }
        if let PowerMode::Apr {
            start_dbm,
            step_db,
            floor_dbm,
        } = self.power_mode
        {
            if step_db <= 0.0 || step_db.is_nan() {
                return err(format!("apr_step_db must be positive, got {step_db}"));
            }
            if floor_dbm > start_dbm {
                return err(format!(
                    "apr_floor_dbm ({floor_dbm}) must not exceed apr_start_dbm ({start_dbm})"
                ));
            }
        }
        if self.num_drops == 0 {
            return err("num_drops must be at least 1".into());
        }
        if self.fading_realizations_per_drop == 0 {
            return err("fading_realizations_per_drop must be at least 1".into());
        }
        Ok(())
    }
}

/// Accumulates raw key/value assignments before defaults and validation.
#[derive(Default)]
struct Document {
    entries: Vec<(String, String, usize)>,
}

const KNOWN_KEYS: &[&str] = &[
    "hall_side_m",
    "hall_height_m",
    "num_subnetworks",
    "subnetwork_radius_m",
    "min_center_separation_m",
    "sensors_per_subnetwork",
    "total_antennas",
    "aps_per_subnetwork",
    "ap_height_m",
    "sensor_height_m",
    "carrier_freq_ghz",
    "bandwidth_hz",
    "packet_duration_s",
    "packet_error_rate",
    "uplink_fraction",
    "noise_psd_dbm_hz",
    "noise_figure_db",
    "lbt_threshold_dbm",
    "power_mode",
    "fixed_power_dbm",
    "apr_start_dbm",
    "apr_step_db",
    "apr_floor_dbm",
    "clutter_size_m",
    "clutter_density",
    "effective_clutter_height_m",
    "shadow_sigma_los_db",
    "shadow_sigma_nlos_db",
    "include_deferred_interference",
    "num_drops",
    "fading_realizations_per_drop",
    "master_seed",
];

impl Document {
    fn set(&mut self, key: &str, value: &str, line: usize) -> Result<(), ConfigError> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(ConfigError::Parse {
                line,
                message: format!("unknown key `{key}`"),
            });
        }
        if let Some((_, _, first)) = self.entries.iter().find(|(k, _, _)| k == key) {
            return Err(ConfigError::Parse {
                line,
                message: format!("duplicate key `{key}` (first set at line {first})"),
            });
        }
        self.entries
            .push((key.to_string(), value.to_string(), line));
        Ok(())
    }

    fn get(&self, key: &str) -> Option<(&str, usize)> {
        self.entries
            .iter()
            .find(|(k, _, _)| k == key)
            .map(|(_, v, line)| (v.as_str(), *line))
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some((v, line)) => v.parse::<f64>().map_err(|_| ConfigError::Parse {
                line,
                message: format!("key `{key}`: expected a number, got `{v}`"),
            }),
        }
    }

    fn usize_required(&self, key: &str) -> Result<usize, ConfigError> {
        match self.get(key) {
            None => Err(ConfigError::Validation(format!(
                "missing required key `{key}`"
            ))),
            Some((v, line)) => v.parse::<usize>().map_err(|_| ConfigError::Parse {
                line,
                message: format!("key `{key}`: expected a positive integer, got `{v}`"),
            }),
        }
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some((v, line)) => v.parse::<usize>().map_err(|_| ConfigError::Parse {
                line,
                message: format!("key `{key}`: expected a non-negative integer, got `{v}`"),
            }),
        }
    }

    fn u64_or(&self, key: &str, default: u64) -> Result<u64, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some((v, line)) => v.parse::<u64>().map_err(|_| ConfigError::Parse {
                line,
                message: format!("key `{key}`: expected an unsigned 64-bit integer, got `{v}`"),
            }),
        }
    }

    fn bool_or(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some((v, line)) => v.parse::<bool>().map_err(|_| ConfigError::Parse {
                line,
                message: format!("key `{key}`: expected true or false, got `{v}`"),
            }),
        }
    }

    fn build(&self) -> Result<SimConfig, ConfigError> {
        let num_subnetworks = self.usize_required("num_subnetworks")?;
        let aps_per_subnetwork = self.usize_required("aps_per_subnetwork")?;
        let defaults = SimConfig::scenario(num_subnetworks, aps_per_subnetwork);

        let power_mode = match self.get("power_mode") {
            None | Some(("apr", _)) => {
                if let Some((_, line)) = self.get("fixed_power_dbm") {
                    return Err(ConfigError::Parse {
                        line,
                        message: "fixed_power_dbm requires power_mode = fixed".into(),
                    });
                }
                PowerMode::Apr {
                    start_dbm: self.f64_or("apr_start_dbm", -15.0)?,
                    step_db: self.f64_or("apr_step_db", 1.0)?,
                    floor_dbm: self.f64_or("apr_floor_dbm", -60.0)?,
                }
            }
            Some(("fixed", _)) => {
                for key in ["apr_start_dbm", "apr_step_db", "apr_floor_dbm"] {
                    if let Some((_, line)) = self.get(key) {
                        return Err(ConfigError::Parse {
                            line,
                            message: format!("{key} requires power_mode = apr"),
                        });
                    }
                }
                match self.get("fixed_power_dbm") {
                    None => {
                        return Err(ConfigError::Validation(
                            "power_mode = fixed requires fixed_power_dbm".into(),
                        ))
                    }
                    Some((v, line)) => PowerMode::Fixed {
                        power_dbm: v.parse::<f64>().map_err(|_| ConfigError::Parse {
                            line,
                            message: format!("key `fixed_power_dbm`: expected a number, got `{v}`"),
                        })?,
                    },
                }
            }
            Some((other, line)) => {
                return Err(ConfigError::Parse {
                    line,
                    message: format!("power_mode must be `fixed` or `apr`, got `{other}`"),
                })
            }
        };

        let cfg = SimConfig {
            hall_side_m: self.f64_or("hall_side_m", defaults.hall_side_m)?,
            hall_height_m: self.f64_or("hall_height_m", defaults.hall_height_m)?,
            num_subnetworks,
            subnetwork_radius_m: self
                .f64_or("subnetwork_radius_m", defaults.subnetwork_radius_m)?,
            min_center_separation_m: self
                .f64_or("min_center_separation_m", defaults.min_center_separation_m)?,
            sensors_per_subnetwork: self
                .usize_or("sensors_per_subnetwork", defaults.sensors_per_subnetwork)?,
            total_antennas: self.usize_or("total_antennas", defaults.total_antennas)?,
            aps_per_subnetwork,
            ap_height_m: self.f64_or("ap_height_m", defaults.ap_height_m)?,
            sensor_height_m: self.f64_or("sensor_height_m", defaults.sensor_height_m)?,
            carrier_freq_ghz: self.f64_or("carrier_freq_ghz", defaults.carrier_freq_ghz)?,
            bandwidth_hz: self.f64_or("bandwidth_hz", defaults.bandwidth_hz)?,
            packet_duration_s: self.f64_or("packet_duration_s", defaults.packet_duration_s)?,
            packet_error_rate: self.f64_or("packet_error_rate", defaults.packet_error_rate)?,
            uplink_fraction: self.f64_or("uplink_fraction", defaults.uplink_fraction)?,
            noise_psd_dbm_hz: self.f64_or("noise_psd_dbm_hz", defaults.noise_psd_dbm_hz)?,
            noise_figure_db: self.f64_or("noise_figure_db", defaults.noise_figure_db)?,
            lbt_threshold_dbm: self.f64_or("lbt_threshold_dbm", defaults.lbt_threshold_dbm)?,
            power_mode,
            clutter_size_m: self.f64_or("clutter_size_m", defaults.clutter_size_m)?,
            clutter_density: self.f64_or("clutter_density", defaults.clutter_density)?,
            effective_clutter_height_m: self.f64_or(
                "effective_clutter_height_m",
                defaults.effective_clutter_height_m,
            )?,
            shadow_sigma_los_db: self
                .f64_or("shadow_sigma_los_db", defaults.shadow_sigma_los_db)?,
            shadow_sigma_nlos_db: self
                .f64_or("shadow_sigma_nlos_db", defaults.shadow_sigma_nlos_db)?,
            include_deferred_interference: self.bool_or(
                "include_deferred_interference",
                defaults.include_deferred_interference,
            )?,
            num_drops: self.u64_or("num_drops", defaults.num_drops)?,
            fading_realizations_per_drop: self
                .u64_or(
                    "fading_realizations_per_drop",
                    defaults.fading_realizations_per_drop as u64,
                )?
                .try_into()
                .map_err(|_| {
                    ConfigError::Validation("fading_realizations_per_drop too large".into())
                })?,
            master_seed: self.u64_or("master_seed", defaults.master_seed)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
