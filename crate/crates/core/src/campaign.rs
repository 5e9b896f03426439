//! Monte-Carlo campaign driver: independent drops (each resampling topology,
//! shadowing, and fading), deterministic per-drop random substreams, pooling
//! of per-sensor samples, empirical CDFs, and low-quantile summaries.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::beamforming::{stack_subnetwork_channel, zf_matrix, ZfBeamformer};
use crate::channel::{ChannelState, LargeScaleState};
use crate::config::SimConfig;
use crate::error::SimError;
use crate::mac::resolve_power_mode;
use crate::metrics::{evaluate_all_sensors, noise_power, SensorMetrics};
use crate::topology::{build_topology, Topology};

/// Environment variable capping worker parallelism.
pub const THREADS_ENV_VAR: &str = "SUBNETSIM_THREADS";

/// Quantile levels reported in every campaign summary.
pub const REPORTED_QUANTILES: [f64; 2] = [0.001, 0.01];

/// Derive the random substream seed of one drop from the campaign master
/// seed. SplitMix64-style mixing; never shares state between drops.
pub fn derive_drop_seed(master_seed: u64, drop_index: u64) -> u64 {
    let mut z = master_seed
        .wrapping_add(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(drop_index.wrapping_mul(0xbf58_476d_1ce4_e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Outcome of one fading realization within a drop.
#[derive(Debug, Clone)]
pub struct RealizationRecord {
    /// Metrics in global sensor order.
    pub metrics: Vec<SensorMetrics>,
    /// Nominal transmit level per sensor, dBm.
    pub tx_power_dbm: Vec<f64>,
    pub deferred_subnetworks: usize,
    pub apr_steps: u32,
    /// Largest sensed per-antenna interference across all APs at the applied
    /// power, dBm.
    pub max_ap_interference_dbm: f64,
}

/// Everything produced by one drop.
#[derive(Debug, Clone)]
pub struct DropResult {
    pub drop_index: u64,
    /// Order-sensitive digest of every node position, for reproducibility
    /// checks.
    pub topology_hash: u64,
    pub realizations: Vec<RealizationRecord>,
    pub aborted_realizations: u32,
}

/// One pooled per-sensor sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleRecord {
    pub drop_index: u64,
    pub subnetwork: u32,
    pub sensor: u32,
    pub tx_power_dbm: f64,
    pub deferred: bool,
    pub sinr: f64,
    pub rate_bps: f64,
}

/// Per-realization diagnostics retained alongside the pooled samples.
#[derive(Debug, Clone, Copy)]
pub struct RealizationDiagnostics {
    pub drop_index: u64,
    pub deferred_subnetworks: usize,
    pub apr_steps: u32,
    pub tx_power_dbm: f64,
    pub max_ap_interference_dbm: f64,
}

/// Empirical CDF: sorted samples with cumulative probabilities `i/n`.
#[derive(Debug, Clone)]
pub struct Ecdf {
    values: Vec<f64>,
}

impl Ecdf {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sorted `(value, cumulative_probability)` pairs.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let n = self.values.len() as f64;
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (v, (i + 1) as f64 / n))
    }

    /// Lower empirical quantile: the smallest sorted value whose cumulative
    /// probability reaches `p`.
    pub fn quantile(&self, p: f64) -> f64 {
        assert!(p > 0.0 && p <= 1.0, "quantile level must be in (0, 1]");
        let n = self.values.len();
        let mut k = (n as f64 * p).ceil() as usize;
        k = k.clamp(1, n);
        self.values[k - 1]
    }

    /// Whether the sample size supports reading level `p` (`n * p >= 1`).
    pub fn supports(&self, p: f64) -> bool {
        self.values.len() as f64 * p >= 1.0
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().unwrap()
    }
}

/// Build an empirical CDF from raw samples.
pub fn ecdf(samples: &[f64]) -> Result<Ecdf, SimError> {
    if samples.is_empty() {
        return Err(SimError::EmptySamples);
    }
    let mut values = samples.to_vec();
    values.sort_by(|a, b| a.partial_cmp(b).expect("samples must not be NaN"));
    Ok(Ecdf { values })
}

/// Lower empirical quantile of a prebuilt CDF (see [`Ecdf::quantile`]).
pub fn quantile(e: &Ecdf, p: f64) -> f64 {
    e.quantile(p)
}

/// Pooled result of a whole campaign.
#[derive(Debug, Clone)]
pub struct CampaignResult {
    pub config: SimConfig,
    /// Per-sensor samples in (drop, realization, sensor) order.
    pub samples: Vec<SampleRecord>,
    pub rate_ecdf: Ecdf,
    pub power_ecdf: Ecdf,
    /// `(level, rate)` pairs at the reported quantile levels.
    pub rate_quantiles: Vec<(f64, f64)>,
    pub zero_rate_fraction: f64,
    pub deferral_fraction: f64,
    pub aborted_realizations: u64,
    pub failed_drops: u64,
    pub diagnostics: Vec<RealizationDiagnostics>,
}

impl CampaignResult {
    pub fn rate_quantile(&self, p: f64) -> f64 {
        self.rate_ecdf.quantile(p)
    }
}

fn topology_hash(topology: &Topology) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |v: f64| {
        h ^= v.to_bits();
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    };
    for layout in &topology.subnetworks {
        for p in std::iter::once(&layout.center)
            .chain(&layout.ap_positions)
            .chain(&layout.sensor_positions)
        {
            eat(p.x);
            eat(p.y);
            eat(p.z);
        }
    }
    h
}

fn run_realization(
    cfg: &SimConfig,
    state: &ChannelState,
    noise: &crate::metrics::NoiseBudget,
) -> Result<RealizationRecord, SimError> {
    let (powers, deferral) = resolve_power_mode(cfg, state)?;
    let dims = state.dims();
    let mut beamformers: Vec<Option<ZfBeamformer>> = Vec::with_capacity(dims.num_subnetworks);
    for b in 0..dims.num_subnetworks {
        if deferral.is_deferred(b) {
            beamformers.push(None);
        } else {
            beamformers.push(Some(zf_matrix(&stack_subnetwork_channel(state, b))?));
        }
    }
    let metrics = evaluate_all_sensors(state, &beamformers, &powers, noise, &deferral, cfg);
    let tx_power_dbm = (0..dims.total_sensors())
        .map(|s| powers.tx_power_dbm(s))
        .collect();
    Ok(RealizationRecord {
        metrics,
        tx_power_dbm,
        deferred_subnetworks: deferral.deferred.len(),
        apr_steps: powers.apr_steps_applied,
        max_ap_interference_dbm: deferral.max_interference_dbm(),
    })
}

/// Run one drop: sample a topology and large-scale state, then evaluate the
/// configured number of fading realizations. A deterministic function of
/// `(cfg, drop_index, master_seed)`.
///
/// Rank-deficient channel draws and adaptive-power floor hits abort the
/// affected realization only; the drop fails only when every realization
/// aborted.
pub fn run_drop(
    cfg: &SimConfig,
    drop_index: u64,
    master_seed: u64,
) -> Result<DropResult, SimError> {
    let mut rng = ChaCha12Rng::seed_from_u64(derive_drop_seed(master_seed, drop_index));
    let topology = build_topology(cfg, &mut rng)?;
    let large = LargeScaleState::sample(&topology, cfg, &mut rng);
    let noise = noise_power(cfg);

    let mut realizations = Vec::with_capacity(cfg.fading_realizations_per_drop as usize);
    let mut aborted = 0u32;
    for _ in 0..cfg.fading_realizations_per_drop {
        let state = ChannelState::realize(&large, &mut rng);
        match run_realization(cfg, &state, &noise) {
            Ok(record) => realizations.push(record),
            Err(SimError::RankDeficient { .. }) | Err(SimError::AprFloorReached { .. }) => {
                aborted += 1;
            }
            Err(other) => return Err(other),
        }
    }
    if realizations.is_empty() {
        return Err(SimError::DropAborted { drop_index });
    }
    Ok(DropResult {
        drop_index,
        topology_hash: topology_hash(&topology),
        realizations,
        aborted_realizations: aborted,
    })
}

/// Rebuild the topology a given drop samples, without running the drop.
pub fn drop_topology(
    cfg: &SimConfig,
    drop_index: u64,
    master_seed: u64,
) -> Result<Topology, SimError> {
    let mut rng = ChaCha12Rng::seed_from_u64(derive_drop_seed(master_seed, drop_index));
    build_topology(cfg, &mut rng)
}

/// Worker-thread cap from the environment, if set to a positive integer.
pub fn worker_threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV_VAR)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Run a campaign honoring the `SUBNETSIM_THREADS` cap.
pub fn run_campaign(cfg: &SimConfig) -> Result<CampaignResult, SimError> {
    run_campaign_with(cfg, worker_threads_from_env(), None)
}

/// Run a campaign with an explicit worker-thread count.
pub fn run_campaign_with_threads(
    cfg: &SimConfig,
    threads: Option<usize>,
) -> Result<CampaignResult, SimError> {
    run_campaign_with(cfg, threads, None)
}

/// Full-control campaign entry point. Drops execute in parallel but pool in
/// drop-index order, so the output is independent of the worker count.
/// `progress` is invoked with the number of completed drops.
pub fn run_campaign_with(
    cfg: &SimConfig,
    threads: Option<usize>,
    progress: Option<&(dyn Fn(u64, u64) + Sync)>,
) -> Result<CampaignResult, SimError> {
    cfg.validate()?;
    let total = cfg.num_drops;
    let completed = std::sync::atomic::AtomicU64::new(0);
    let run_all = || -> Vec<Result<DropResult, SimError>> {
        (0..total)
            .into_par_iter()
            .map(|drop_index| {
                let result = run_drop(cfg, drop_index, cfg.master_seed);
                if let Some(cb) = progress {
                    let done = completed.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
                    cb(done, total);
                }
                result
            })
            .collect()
    };
    let results = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("failed to build worker pool")
            .install(run_all),
        None => run_all(),
    };
    pool_results(cfg, results)
}

fn pool_results(
    cfg: &SimConfig,
    results: Vec<Result<DropResult, SimError>>,
) -> Result<CampaignResult, SimError> {
    let sensors_per = cfg.sensors_per_subnetwork;
    let mut samples = Vec::new();
    let mut diagnostics = Vec::new();
    let mut aborted_realizations = 0u64;
    let mut failed_drops = 0u64;
    let mut first_failure: Option<String> = None;

    for result in results {
        let drop = match result {
            Ok(drop) => drop,
            Err(err) => {
                failed_drops += 1;
                if first_failure.is_none() {
                    first_failure = Some(err.to_string());
                }
                continue;
            }
        };
        aborted_realizations += drop.aborted_realizations as u64;
        for realization in &drop.realizations {
            diagnostics.push(RealizationDiagnostics {
                drop_index: drop.drop_index,
                deferred_subnetworks: realization.deferred_subnetworks,
                apr_steps: realization.apr_steps,
                tx_power_dbm: realization.tx_power_dbm[0],
                max_ap_interference_dbm: realization.max_ap_interference_dbm,
            });
            for (global, metric) in realization.metrics.iter().enumerate() {
                samples.push(SampleRecord {
                    drop_index: drop.drop_index,
                    subnetwork: (global / sensors_per) as u32,
                    sensor: (global % sensors_per) as u32,
                    tx_power_dbm: realization.tx_power_dbm[global],
                    deferred: metric.deferred,
                    sinr: metric.sinr,
                    rate_bps: metric.rate_bps,
                });
            }
        }
    }

    if samples.is_empty() {
        return Err(SimError::CampaignFailed {
            first: first_failure.unwrap_or_else(|| "no drops executed".into()),
        });
    }

    let rates: Vec<f64> = samples.iter().map(|s| s.rate_bps).collect();
    let powers: Vec<f64> = samples.iter().map(|s| s.tx_power_dbm).collect();
    let rate_ecdf = ecdf(&rates)?;
    let power_ecdf = ecdf(&powers)?;
    let rate_quantiles = REPORTED_QUANTILES
        .iter()
        .map(|&p| (p, rate_ecdf.quantile(p)))
        .collect();
    let n = samples.len() as f64;
    let zero_rate_fraction = samples.iter().filter(|s| s.rate_bps == 0.0).count() as f64 / n;
    let deferral_fraction = samples.iter().filter(|s| s.deferred).count() as f64 / n;

    Ok(CampaignResult {
        config: cfg.clone(),
        samples,
        rate_ecdf,
        power_ecdf,
        rate_quantiles,
        zero_rate_fraction,
        deferral_fraction,
        aborted_realizations,
        failed_drops,
        diagnostics,
    })
}
