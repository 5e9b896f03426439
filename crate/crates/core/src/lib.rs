//! System-level Monte-Carlo simulator for the uplink of multiple coexisting
//! short-range in-X sub-networks sharing an unlicensed 6 GHz channel.
//!
//! Each sub-network serves its sensors through a set of access points wired
//! to one control unit that stacks all AP signals and applies zero-forcing
//! receive beamforming. Coexistence follows a listen-before-talk rule with an
//! optional adaptive power reduction scheme that steps every sensor's
//! transmit power down until no AP anywhere senses above the threshold.
//!
//! The crate is organized along the simulation pipeline:
//!
//! - [`config`]: scenario configuration (flat key-value documents).
//! - [`topology`]: factory-hall deployment sampling and index bookkeeping.
//! - [`channel`]: indoor-factory path loss, shadowing, Rayleigh fading.
//! - [`beamforming`]: stacked channel matrices and zero-forcing combiners.
//! - [`mac`]: per-AP sensed interference, deferral rule, power reduction.
//! - [`metrics`]: per-sensor powers, SINR, finite-blocklength rate.
//! - [`campaign`]: drop driver, deterministic seeding, pooled statistics.
//! - [`output`]: CSV/summary/SVG serialization.

pub mod beamforming;
pub mod campaign;
pub mod channel;
pub mod config;
pub mod error;
pub mod linalg;
pub mod mac;
pub mod metrics;
pub mod output;
pub mod topology;
pub mod units;

pub use campaign::{
    run_campaign, run_campaign_with, run_campaign_with_threads, CampaignResult, Ecdf,
};
pub use config::{PowerMode, SimConfig};
pub use error::{ConfigError, SimError};
