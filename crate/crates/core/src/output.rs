//! Result serialization: the per-sensor sample CSV, the ECDF CSV, the text
//! summary, an optional SVG chart of the rate CDF, and the topology dump.
//!
//! Formatting is deterministic: `.` decimal separator, no grouping, shortest
//! round-trip float representation. Identical campaigns produce byte-identical
//! files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::campaign::{CampaignResult, Ecdf};
use crate::config::PowerMode;
use crate::error::SimError;
use crate::topology::Topology;
use crate::units::ratio_to_db;

/// Paths written by [`write_campaign_outputs`].
#[derive(Debug, Clone)]
pub struct FileManifest {
    pub files: Vec<PathBuf>,
}

fn write_file(path: &Path, contents: &str) -> Result<(), SimError> {
    fs::write(path, contents).map_err(|e| SimError::io(path, e))
}

/// Render the per-sensor sample CSV.
fn rates_csv(result: &CampaignResult) -> String {
    let mut out = String::new();
    out.push_str("drop,subnetwork,sensor,tx_power_dbm,deferred,sinr_db,rate_bps\n");
    for s in &result.samples {
        let sinr_db = ratio_to_db(s.sinr);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            s.drop_index,
            s.subnetwork,
            s.sensor,
            s.tx_power_dbm,
            u8::from(s.deferred),
            sinr_db,
            s.rate_bps
        );
    }
    out
}

/// Render the rows of one metric's ECDF, `metric,value,cumulative_probability`.
fn ecdf_csv_lines(metric: &str, e: &Ecdf) -> String {
    let mut out = String::new();
    for (value, probability) in e.points() {
        let _ = writeln!(out, "{metric},{value},{probability}");
    }
    out
}

fn cdf_csv(result: &CampaignResult) -> String {
    let mut out = String::from("metric,value,cumulative_probability\n");
    out.push_str(&ecdf_csv_lines("rate_bps", &result.rate_ecdf));
    out.push_str(&ecdf_csv_lines("tx_power_dbm", &result.power_ecdf));
    out
}

fn summary_text(result: &CampaignResult) -> String {
    let cfg = &result.config;
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k}: {v}");
    };
    kv("num_subnetworks", cfg.num_subnetworks.to_string());
    kv("aps_per_subnetwork", cfg.aps_per_subnetwork.to_string());
    kv("antennas_per_ap", cfg.antennas_per_ap().to_string());
    kv(
        "sensors_per_subnetwork",
        cfg.sensors_per_subnetwork.to_string(),
    );
    match cfg.power_mode {
        PowerMode::Fixed { power_dbm } => {
            kv("power_mode", "fixed".into());
            kv("fixed_power_dbm", power_dbm.to_string());
        }
        PowerMode::Apr {
            start_dbm,
            step_db,
            floor_dbm,
        } => {
            kv("power_mode", "apr".into());
            kv("apr_start_dbm", start_dbm.to_string());
            kv("apr_step_db", step_db.to_string());
            kv("apr_floor_dbm", floor_dbm.to_string());
        }
    }
    kv("lbt_threshold_dbm", cfg.lbt_threshold_dbm.to_string());
    kv("clutter_density", cfg.clutter_density.to_string());
    kv("shadow_sigma_los_db", cfg.shadow_sigma_los_db.to_string());
    kv("shadow_sigma_nlos_db", cfg.shadow_sigma_nlos_db.to_string());
    kv("num_drops", cfg.num_drops.to_string());
    kv(
        "fading_realizations_per_drop",
        cfg.fading_realizations_per_drop.to_string(),
    );
    kv("master_seed", cfg.master_seed.to_string());
    kv("samples", result.samples.len().to_string());
    for &(level, rate) in &result.rate_quantiles {
        kv(&format!("rate_cdf_{level}_bps"), rate.to_string());
        if !result.rate_ecdf.supports(level) {
            kv(
                &format!("rate_cdf_{level}_warning"),
                format!(
                    "sample size {} is insufficient for level {level}",
                    result.rate_ecdf.len()
                ),
            );
        }
    }
    kv(
        "tx_power_cdf_0.01_dbm",
        result.power_ecdf.quantile(0.01).to_string(),
    );
    kv("zero_rate_fraction", result.zero_rate_fraction.to_string());
    kv("deferral_fraction", result.deferral_fraction.to_string());
    kv(
        "aborted_realizations",
        result.aborted_realizations.to_string(),
    );
    kv("failed_drops", result.failed_drops.to_string());
    out
}

/// Write the standard result files into `dir` (created if missing):
/// `rates.csv`, `cdf.csv`, and `summary.txt`.
pub fn write_campaign_outputs(
    result: &CampaignResult,
    dir: &Path,
) -> Result<FileManifest, SimError> {
    fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
    let rates_path = dir.join("rates.csv");
    let cdf_path = dir.join("cdf.csv");
    let summary_path = dir.join("summary.txt");
    write_file(&rates_path, &rates_csv(result))?;
    write_file(&cdf_path, &cdf_csv(result))?;
    write_file(&summary_path, &summary_text(result))?;
    Ok(FileManifest {
        files: vec![rates_path, cdf_path, summary_path],
    })
}

/// Write a minimal static SVG chart of the rate CDF.
pub fn write_rate_cdf_svg(result: &CampaignResult, path: &Path) -> Result<(), SimError> {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const MARGIN: f64 = 50.0;
    let e = &result.rate_ecdf;
    let (min_v, max_v) = (e.min(), e.max());
    let span = (max_v - min_v).max(1.0);
    let x = |v: f64| MARGIN + (v - min_v) / span * (W - 2.0 * MARGIN);
    let y = |p: f64| H - MARGIN - p * (H - 2.0 * MARGIN);

    let mut points = String::new();
    let mut last_px = f64::NEG_INFINITY;
    for (v, p) in e.points() {
        let px = x(v);
        // Thin dense sample sets to sub-pixel resolution.
        if px - last_px < 0.25 && p < 1.0 {
            continue;
        }
        last_px = px;
        let _ = write!(points, "{:.2},{:.2} ", px, y(p));
    }

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">"
    );
    let _ = writeln!(svg, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    let _ = writeln!(
        svg,
        "<line x1=\"{MARGIN}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        H - MARGIN,
        W - MARGIN,
        H - MARGIN
    );
    let _ = writeln!(
        svg,
        "<line x1=\"{MARGIN}\" y1=\"{MARGIN}\" x2=\"{MARGIN}\" y2=\"{}\" stroke=\"black\"/>",
        H - MARGIN
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">uplink rate [bit/s]</text>",
        W / 2.0,
        H - 12.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"14\" y=\"{}\" font-size=\"12\" transform=\"rotate(-90 14 {})\" text-anchor=\"middle\">CDF</text>",
        H / 2.0,
        H / 2.0
    );
    let _ = writeln!(
        svg,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\"/>",
        points.trim_end()
    );
    let _ = writeln!(svg, "</svg>");
    write_file(path, &svg)
}

/// Dump every entity position: `entity,global_index,subnetwork,x,y,z`.
pub fn write_topology_csv(topology: &Topology, path: &Path) -> Result<(), SimError> {
    let mut out = String::from("entity,global_index,subnetwork,x,y,z\n");
    for (b, layout) in topology.subnetworks.iter().enumerate() {
        let _ = writeln!(
            out,
            "center,{b},{b},{},{},{}",
            layout.center.x, layout.center.y, layout.center.z
        );
    }
    for ap in 0..topology.total_aps() {
        let (b, _) = topology.ap_location(ap);
        let p = topology.ap_position(ap);
        let _ = writeln!(out, "ap,{ap},{b},{},{},{}", p.x, p.y, p.z);
    }
    for sensor in 0..topology.total_sensors() {
        let (b, _) = topology.sensor_location(sensor);
        let p = topology.sensor_position(sensor);
        let _ = writeln!(out, "sensor,{sensor},{b},{},{},{}", p.x, p.y, p.z);
    }
    write_file(path, &out)
}
