//! Factory-hall deployment sampling: sub-network centers under a minimum
//! separation constraint, AP placement (first AP co-located with the control
//! unit at the center), sensor placement, and global index bookkeeping.

use rand::Rng;

use crate::config::SimConfig;
use crate::error::SimError;

/// Cap on total rejection-sampling attempts before falling back to the grid.
const MAX_REJECTION_ATTEMPTS: u64 = 1_000_000;

/// A point inside the hall, in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position3D {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Position3D { x, y, z }
    }

    /// Distance ignoring the vertical component.
    pub fn horizontal_distance(&self, other: &Position3D) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx * dx + dy * dy).sqrt()
    }

    /// Full 3D distance.
    pub fn distance(&self, other: &Position3D) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// One sub-network's node positions.
#[derive(Debug, Clone)]
pub struct SubnetworkLayout {
    /// Control-unit location at AP height; `ap_positions[0]` coincides with it.
    pub center: Position3D,
    pub ap_positions: Vec<Position3D>,
    pub sensor_positions: Vec<Position3D>,
}

/// A full deployment: every sub-network plus the index bookkeeping that maps
/// (sub-network, local index) pairs to system-wide sensor/AP indices.
#[derive(Debug, Clone)]
pub struct Topology {
    pub hall_side_m: f64,
    pub hall_height_m: f64,
    pub subnetworks: Vec<SubnetworkLayout>,
    sensors_per_subnetwork: usize,
    aps_per_subnetwork: usize,
}

impl Topology {
    pub fn num_subnetworks(&self) -> usize {
        self.subnetworks.len()
    }

    pub fn sensors_per_subnetwork(&self) -> usize {
        self.sensors_per_subnetwork
    }

    pub fn aps_per_subnetwork(&self) -> usize {
        self.aps_per_subnetwork
    }

    pub fn total_sensors(&self) -> usize {
        self.subnetworks.len() * self.sensors_per_subnetwork
    }

    pub fn total_aps(&self) -> usize {
        self.subnetworks.len() * self.aps_per_subnetwork
    }

    /// System-wide sensor index for local sensor `local` of sub-network `b`.
    /// Indices are 0-based and partition into consecutive per-sub-network blocks.
    pub fn global_sensor_index(&self, b: usize, local: usize) -> usize {
        debug_assert!(local < self.sensors_per_subnetwork);
        b * self.sensors_per_subnetwork + local
    }

    /// System-wide AP index for local AP `local` of sub-network `b`.
    pub fn global_ap_index(&self, b: usize, local: usize) -> usize {
        debug_assert!(local < self.aps_per_subnetwork);
        b * self.aps_per_subnetwork + local
    }

    /// Inverse of [`Topology::global_sensor_index`]: (sub-network, local).
    pub fn sensor_location(&self, global: usize) -> (usize, usize) {
        (
            global / self.sensors_per_subnetwork,
            global % self.sensors_per_subnetwork,
        )
    }

    /// Inverse of [`Topology::global_ap_index`]: (sub-network, local).
    pub fn ap_location(&self, global: usize) -> (usize, usize) {
        (
            global / self.aps_per_subnetwork,
            global % self.aps_per_subnetwork,
        )
    }

    pub fn sensor_position(&self, global: usize) -> Position3D {
        let (b, local) = self.sensor_location(global);
        self.subnetworks[b].sensor_positions[local]
    }

    pub fn ap_position(&self, global: usize) -> Position3D {
        let (b, local) = self.ap_location(global);
        self.subnetworks[b].ap_positions[local]
    }
}

/// Uniform sample in the horizontal disk of `radius` around `center`, at
/// height `z`. Radius is drawn as `r*sqrt(u)` so the law is area-uniform.
fn sample_in_disk<R: Rng>(center: &Position3D, radius: f64, z: f64, rng: &mut R) -> Position3D {
    let u: f64 = rng.random();
    let v: f64 = rng.random();
    let rho = radius * u.sqrt();
    let theta = 2.0 * std::f64::consts::PI * v;
    Position3D::new(
        center.x + rho * theta.cos(),
        center.y + rho * theta.sin(),
        z,
    )
}

/// Sample sub-network center locations, uniform over the hall subject to the
/// pairwise minimum-separation constraint. Centers keep one sub-network
/// radius of clearance from the walls so the whole disk fits inside.
///
/// Rejection sampling is tried first; near the packing limit it falls back to
/// a jittered square grid with pitch equal to the minimum separation,
/// subsampled to the requested count.
pub fn sample_subnetwork_centers<R: Rng>(
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<Vec<Position3D>, SimError> {
    let count = cfg.num_subnetworks;
    let margin = cfg.subnetwork_radius_m;
    let lo = margin;
    let hi = cfg.hall_side_m - margin;
    let min_sep = cfg.min_center_separation_m;

    if hi < lo {
        return Err(SimError::PlacementInfeasible(format!(
            "hall side {} m leaves no room for sub-network radius {} m",
            cfg.hall_side_m, margin
        )));
    }

    let mut centers: Vec<Position3D> = Vec::with_capacity(count);
    let mut attempts = 0u64;
    while centers.len() < count {
        if attempts >= MAX_REJECTION_ATTEMPTS {
            return grid_fallback(cfg, rng);
        }
        attempts += 1;
        let candidate = Position3D::new(
            lo + (hi - lo) * rng.random::<f64>(),
            lo + (hi - lo) * rng.random::<f64>(),
            cfg.ap_height_m,
        );
        let ok = centers
            .iter()
            .all(|c| c.horizontal_distance(&candidate) >= min_sep);
        if ok {
            centers.push(candidate);
        }
    }
    Ok(centers)
}

/// Square-grid fallback: pitch = minimum separation, cells jittered by up to
/// half the slack between pitch and the separation constraint (zero at the
/// packing limit), randomly subsampled to the requested count.
fn grid_fallback<R: Rng>(cfg: &SimConfig, rng: &mut R) -> Result<Vec<Position3D>, SimError> {
    let count = cfg.num_subnetworks;
    let margin = cfg.subnetwork_radius_m;
    let span = cfg.hall_side_m - 2.0 * margin;
    let pitch = cfg.min_center_separation_m;

    let per_axis = (span / pitch).floor() as usize + 1;
    if per_axis * per_axis < count {
        return Err(SimError::PlacementInfeasible(format!(
            "cannot place {count} sub-network centers with separation {pitch} m \
             in a {span} m usable span ({per_axis}x{per_axis} grid cells available)",
        )));
    }

    // Center the grid in the usable square.
    let used = (per_axis - 1) as f64 * pitch;
    let origin = margin + (span - used) / 2.0;
    let jitter = (pitch - cfg.min_center_separation_m) / 2.0;

    let mut cells: Vec<Position3D> = Vec::with_capacity(per_axis * per_axis);
    for i in 0..per_axis {
        for j in 0..per_axis {
            let jx = if jitter > 0.0 {
                jitter * (2.0 * rng.random::<f64>() - 1.0)
            } else {
                0.0
            };
            let jy = if jitter > 0.0 {
                jitter * (2.0 * rng.random::<f64>() - 1.0)
            } else {
                0.0
            };
            cells.push(Position3D::new(
                origin + i as f64 * pitch + jx,
                origin + j as f64 * pitch + jy,
                cfg.ap_height_m,
            ));
        }
    }

    // Fisher-Yates subsample to `count` cells.
    for i in 0..count {
        let pick = i + rng.random_range(0..cells.len() - i);
        cells.swap(i, pick);
    }
    cells.truncate(count);
    Ok(cells)
}

/// Place the APs of one sub-network: the first at the center (control unit),
/// the rest uniform in the sub-network disk at AP height.
pub fn place_aps<R: Rng>(center: &Position3D, cfg: &SimConfig, rng: &mut R) -> Vec<Position3D> {
    let mut positions = Vec::with_capacity(cfg.aps_per_subnetwork);
    positions.push(Position3D::new(center.x, center.y, cfg.ap_height_m));
    for _ in 1..cfg.aps_per_subnetwork {
        positions.push(sample_in_disk(
            center,
            cfg.subnetwork_radius_m,
            cfg.ap_height_m,
            rng,
        ));
    }
    positions
}

/// Place the sensors of one sub-network, uniform in the disk at sensor height.
pub fn place_sensors<R: Rng>(center: &Position3D, cfg: &SimConfig, rng: &mut R) -> Vec<Position3D> {
    (0..cfg.sensors_per_subnetwork)
        .map(|_| sample_in_disk(center, cfg.subnetwork_radius_m, cfg.sensor_height_m, rng))
        .collect()
}

/// Sample a complete deployment for one drop.
pub fn build_topology<R: Rng>(cfg: &SimConfig, rng: &mut R) -> Result<Topology, SimError> {
    let centers = sample_subnetwork_centers(cfg, rng)?;
    let subnetworks = centers
        .iter()
        .map(|center| SubnetworkLayout {
            center: *center,
            ap_positions: place_aps(center, cfg, rng),
            sensor_positions: place_sensors(center, cfg, rng),
        })
        .collect();
    Ok(Topology {
        hall_side_m: cfg.hall_side_m,
        hall_height_m: cfg.hall_height_m,
        subnetworks,
        sensors_per_subnetwork: cfg.sensors_per_subnetwork,
        aps_per_subnetwork: cfg.aps_per_subnetwork,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn rng(seed: u64) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(seed)
    }

    #[test]
    fn single_center_is_trivially_separated() {
        let cfg = SimConfig::scenario(1, 1);
        let centers = sample_subnetwork_centers(&cfg, &mut rng(1)).unwrap();
        assert_eq!(centers.len(), 1);
        assert!(centers[0].x >= 5.0 && centers[0].x <= 95.0);
        assert!(centers[0].y >= 5.0 && centers[0].y <= 95.0);
    }

    #[test]
    fn pairwise_separation_holds_over_many_draws() {
        let cfg = SimConfig::scenario(2, 1);
        let mut r = rng(42);
        for _ in 0..10_000 {
            let centers = sample_subnetwork_centers(&cfg, &mut r).unwrap();
            let d = centers[0].horizontal_distance(&centers[1]);
            assert!(d >= 10.0, "violated separation: {d}");
        }
    }

    #[test]
    fn hundred_subnetworks_use_grid_packing() {
        let cfg = SimConfig::scenario(100, 1);
        let centers = sample_subnetwork_centers(&cfg, &mut rng(7)).unwrap();
        assert_eq!(centers.len(), 100);
        for i in 0..100 {
            for j in (i + 1)..100 {
                let d = centers[i].horizontal_distance(&centers[j]);
                assert!(d >= 10.0 - 1e-9, "violated separation: {d}");
            }
            assert!(centers[i].x >= 5.0 - 1e-9 && centers[i].x <= 95.0 + 1e-9);
            assert!(centers[i].y >= 5.0 - 1e-9 && centers[i].y <= 95.0 + 1e-9);
        }
    }

    #[test]
    fn overpacked_hall_is_rejected() {
        let mut cfg = SimConfig::scenario(101, 1);
        cfg.num_subnetworks = 101;
        let err = sample_subnetwork_centers(&cfg, &mut rng(3)).unwrap_err();
        assert!(matches!(err, SimError::PlacementInfeasible(_)));
    }

    #[test]
    fn single_ap_sits_at_center() {
        let cfg = SimConfig::scenario(1, 1);
        let center = Position3D::new(50.0, 40.0, 5.0);
        let aps = place_aps(&center, &cfg, &mut rng(5));
        assert_eq!(aps.len(), 1);
        assert_eq!(aps[0], Position3D::new(50.0, 40.0, 5.0));
    }

    #[test]
    fn distributed_aps_have_disk_uniform_spread() {
        // Mean squared horizontal distance of a uniform disk sample is r^2/2.
        let cfg = SimConfig::scenario(1, 20);
        let center = Position3D::new(50.0, 50.0, 5.0);
        let mut r = rng(11);
        let mut sum_sq = 0.0;
        let mut n = 0u64;
        while n < 100_000 {
            let aps = place_aps(&center, &cfg, &mut r);
            assert_eq!(aps[0], Position3D::new(50.0, 50.0, 5.0));
            for ap in &aps[1..] {
                assert_eq!(ap.z, 5.0);
                let d = ap.horizontal_distance(&center);
                assert!(d <= 5.0);
                sum_sq += d * d;
                n += 1;
            }
        }
        let mean_sq = sum_sq / n as f64;
        assert!(
            (mean_sq - 12.5).abs() < 0.15,
            "mean squared distance {mean_sq} != 12.5"
        );
    }

    #[test]
    fn sensor_radial_law_matches_disk_uniform_cdf() {
        // Kolmogorov-Smirnov distance between the empirical radial CDF and
        // (rho/r)^2 over 1e5 samples.
        let cfg = SimConfig::scenario(1, 1);
        let center = Position3D::new(50.0, 50.0, 5.0);
        let mut r = rng(13);
        let mut radii: Vec<f64> = Vec::with_capacity(100_000);
        while radii.len() < 100_000 {
            for s in place_sensors(&center, &cfg, &mut r) {
                assert_eq!(s.z, 1.5);
                radii.push(s.horizontal_distance(&center));
            }
        }
        radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = radii.len() as f64;
        let mut ks: f64 = 0.0;
        for (i, rho) in radii.iter().enumerate() {
            let model = (rho / 5.0).powi(2);
            let hi = (i + 1) as f64 / n;
            let lo = i as f64 / n;
            ks = ks.max((model - lo).abs()).max((model - hi).abs());
        }
        assert!(ks < 0.01, "KS statistic {ks}");
    }

    #[test]
    fn full_topology_counts_and_index_maps() {
        let cfg = SimConfig::scenario(30, 20);
        let topo = build_topology(&cfg, &mut rng(17)).unwrap();
        assert_eq!(topo.total_sensors(), 150);
        assert_eq!(topo.total_aps(), 600);
        // Third sensor of the second sub-network (0-based (1, 2)) has global
        // index 5 + 2 = 7.
        assert_eq!(topo.global_sensor_index(1, 2), 7);
        assert_eq!(topo.sensor_location(7), (1, 2));
        assert_eq!(topo.global_ap_index(2, 0), 40);
        assert_eq!(topo.ap_location(40), (2, 0));
        for layout in &topo.subnetworks {
            assert_eq!(layout.ap_positions[0], layout.center);
            for ap in &layout.ap_positions {
                assert!(ap.horizontal_distance(&layout.center) <= cfg.subnetwork_radius_m);
                assert_eq!(ap.z, cfg.ap_height_m);
            }
            for s in &layout.sensor_positions {
                assert!(s.horizontal_distance(&layout.center) <= cfg.subnetwork_radius_m);
                assert_eq!(s.z, cfg.sensor_height_m);
            }
        }
    }

    #[test]
    fn fully_centralized_case_has_all_antennas_at_center() {
        let cfg = SimConfig::scenario(1, 1);
        assert_eq!(cfg.antennas_per_ap(), 20);
        let topo = build_topology(&cfg, &mut rng(19)).unwrap();
        assert_eq!(topo.subnetworks[0].ap_positions.len(), 1);
        assert_eq!(
            topo.subnetworks[0].ap_positions[0],
            topo.subnetworks[0].center
        );
    }

    #[test]
    fn same_seed_reproduces_topology() {
        let cfg = SimConfig::scenario(10, 4);
        let a = build_topology(&cfg, &mut rng(23)).unwrap();
        let b = build_topology(&cfg, &mut rng(23)).unwrap();
        for (la, lb) in a.subnetworks.iter().zip(&b.subnetworks) {
            assert_eq!(la.center, lb.center);
            assert_eq!(la.ap_positions, lb.ap_positions);
            assert_eq!(la.sensor_positions, lb.sensor_positions);
        }
    }
}
