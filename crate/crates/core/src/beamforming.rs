//! Per-sub-network stacked channel matrices and zero-forcing receive
//! beamformers computed at the control unit: `F = H (H^H H)^{-1}`, so that
//! `F^H H` is the identity and intra-sub-network interference is nulled.

use num_complex::Complex64;

use crate::channel::ChannelState;
use crate::error::SimError;
use crate::linalg::{conj_dot, hermitian_inverse};

/// Stacked uplink channel of one sub-network: column `o` concatenates the
/// link vectors from the sub-network's own sensor `o` over its APs in
/// AP-index order (`M` rows, `O_b` columns).
#[derive(Debug, Clone)]
pub struct StackedChannel {
    columns: Vec<Vec<Complex64>>,
}

impl StackedChannel {
    /// Build from explicit columns; all columns must share one length.
    pub fn from_columns(columns: Vec<Vec<Complex64>>) -> Self {
        assert!(
            !columns.is_empty(),
            "stacked channel needs at least one column"
        );
        let rows = columns[0].len();
        assert!(columns.iter().all(|c| c.len() == rows));
        StackedChannel { columns }
    }

    pub fn num_antennas(&self) -> usize {
        self.columns[0].len()
    }

    pub fn num_sensors(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, o: usize) -> &[Complex64] {
        &self.columns[o]
    }
}

/// Zero-forcing receive beamformer of one sub-network; column `o` is the
/// combining vector for the sub-network's sensor `o` (length `M`).
#[derive(Debug, Clone)]
pub struct ZfBeamformer {
    columns: Vec<Vec<Complex64>>,
    gram_condition: f64,
}

impl ZfBeamformer {
    pub fn num_sensors(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, o: usize) -> &[Complex64] {
        &self.columns[o]
    }

    /// Combined response `f_o^H v` of beamformer column `o` to a stacked
    /// channel vector `v`.
    pub fn response(&self, o: usize, stacked: &[Complex64]) -> Complex64 {
        conj_dot(&self.columns[o], stacked)
    }

    /// 1-norm condition number of the Gram matrix behind this beamformer.
    pub fn gram_condition(&self) -> f64 {
        self.gram_condition
    }
}

/// Assemble the stacked channel matrix of sub-network `b` from the channel
/// state, rows grouped per AP in AP-index order.
pub fn stack_subnetwork_channel(state: &ChannelState, b: usize) -> StackedChannel {
    let dims = state.dims();
    let columns = (0..dims.sensors_per_subnetwork)
        .map(|local| {
            let sensor = b * dims.sensors_per_subnetwork + local;
            state.stacked(sensor, b)
        })
        .collect();
    StackedChannel::from_columns(columns)
}

/// Compute the zero-forcing beamformer `F = H (H^H H)^{-1}`.
///
/// Fails with [`SimError::RankDeficient`] when the Gram matrix is numerically
/// singular or its condition number exceeds the limit; the caller should
/// abort the fading realization and count the event.
pub fn zf_matrix(stacked: &StackedChannel) -> Result<ZfBeamformer, SimError> {
    let m = stacked.num_antennas();
    let n = stacked.num_sensors();
    assert!(
        m >= n,
        "zero-forcing needs at least as many antennas as sensors"
    );

    let mut gram = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            gram[i * n + j] = conj_dot(stacked.column(i), stacked.column(j));
        }
    }
    let (gram_inv, cond) = hermitian_inverse(&gram, n)?;

    // Column o of F is H * (column o of the Gram inverse).
    let mut columns = vec![vec![Complex64::new(0.0, 0.0); m]; n];
    for (o, col) in columns.iter_mut().enumerate() {
        for k in 0..n {
            let w = gram_inv[k * n + o];
            for (dst, src) in col.iter_mut().zip(stacked.column(k)) {
                *dst += src * w;
            }
        }
    }
    Ok(ZfBeamformer {
        columns,
        gram_condition: cond,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{ChannelDims, ChannelState};
    use crate::linalg::norm_sq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(m: usize, n: usize, seed: u64) -> StackedChannel {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let columns = (0..n)
            .map(|_| {
                (0..m)
                    .map(|_| {
                        c(
                            rng.random::<f64>() * 2.0 - 1.0,
                            rng.random::<f64>() * 2.0 - 1.0,
                        )
                    })
                    .collect()
            })
            .collect();
        StackedChannel::from_columns(columns)
    }

    /// Independent oracle: Gauss-Jordan inverse with partial pivoting.
    fn gauss_jordan_inverse(a: &[Vec<Complex64>]) -> Option<Vec<Vec<Complex64>>> {
        let n = a.len();
        let mut aug: Vec<Vec<Complex64>> = a
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let mut r = row.clone();
                r.extend((0..n).map(|j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) }));
                r
            })
            .collect();
        for col in 0..n {
            let pivot_row = (col..n)
                .max_by(|&i, &j| aug[i][col].norm().partial_cmp(&aug[j][col].norm()).unwrap())?;
            if aug[pivot_row][col].norm() < 1e-200 {
                return None;
            }
            aug.swap(col, pivot_row);
            let pivot = aug[col][col];
            for x in aug[col].iter_mut() {
                *x /= pivot;
            }
            for row in 0..n {
                if row == col {
                    continue;
                }
                let factor = aug[row][col];
                for j in 0..2 * n {
                    let t = factor * aug[col][j];
                    aug[row][j] -= t;
                }
            }
        }
        Some(aug.into_iter().map(|row| row[n..].to_vec()).collect())
    }

    /// Oracle ZF: F = H * inv(H^H H) with the Gauss-Jordan route.
    fn zf_oracle(stacked: &StackedChannel) -> Vec<Vec<Complex64>> {
        let m = stacked.num_antennas();
        let n = stacked.num_sensors();
        let mut gram = vec![vec![c(0.0, 0.0); n]; n];
        for i in 0..n {
            for j in 0..n {
                gram[i][j] = conj_dot(stacked.column(i), stacked.column(j));
            }
        }
        let inv = gauss_jordan_inverse(&gram).expect("oracle matrix invertible");
        let mut cols = vec![vec![c(0.0, 0.0); m]; n];
        for o in 0..n {
            for k in 0..n {
                for r in 0..m {
                    cols[o][r] += stacked.column(k)[r] * inv[k][o];
                }
            }
        }
        cols
    }

    fn max_residual_from_identity(f: &ZfBeamformer, h: &StackedChannel) -> f64 {
        let n = h.num_sensors();
        let mut max = 0.0f64;
        for o in 0..n {
            for i in 0..n {
                let want = if o == i { c(1.0, 0.0) } else { c(0.0, 0.0) };
                max = max.max((f.response(o, h.column(i)) - want).norm());
            }
        }
        max
    }

    #[test]
    fn identity_channel_gives_identity_beamformer() {
        let n = 4;
        let columns = (0..n)
            .map(|j| {
                (0..n)
                    .map(|i| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) })
                    .collect()
            })
            .collect();
        let h = StackedChannel::from_columns(columns);
        let f = zf_matrix(&h).unwrap();
        for o in 0..n {
            for r in 0..n {
                let want = if o == r { c(1.0, 0.0) } else { c(0.0, 0.0) };
                assert!((f.column(o)[r] - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn scalar_channel_inverts() {
        let h = StackedChannel::from_columns(vec![vec![c(2.0, 0.0)]]);
        let f = zf_matrix(&h).unwrap();
        assert!((f.column(0)[0] - c(0.5, 0.0)).norm() < 1e-15);
        assert!((f.response(0, h.column(0)) - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn random_channel_matches_oracle_and_nulls() {
        let h = random_matrix(20, 5, 61);
        let f = zf_matrix(&h).unwrap();
        assert!(max_residual_from_identity(&f, &h) < 1e-9);
        let oracle = zf_oracle(&h);
        for o in 0..5 {
            for r in 0..20 {
                assert!(
                    (f.column(o)[r] - oracle[o][r]).norm() < 1e-9,
                    "column {o} row {r}"
                );
            }
        }
    }

    #[test]
    fn nulling_is_relative_to_vector_scales() {
        let h = random_matrix(20, 5, 67);
        let f = zf_matrix(&h).unwrap();
        for o in 0..5 {
            for i in 0..5 {
                if i == o {
                    continue;
                }
                let cross = f.response(o, h.column(i)).norm();
                let scale = norm_sq(f.column(o)).sqrt() * norm_sq(h.column(i)).sqrt();
                assert!(cross / scale < 1e-9);
            }
            assert!((f.response(o, h.column(o)) - c(1.0, 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn scaling_channel_inversely_scales_beamformer() {
        let h = random_matrix(12, 3, 71);
        let scale = 3.5f64;
        let scaled = StackedChannel::from_columns(
            (0..3)
                .map(|o| h.column(o).iter().map(|x| x * scale).collect())
                .collect(),
        );
        let f = zf_matrix(&h).unwrap();
        let f_scaled = zf_matrix(&scaled).unwrap();
        for o in 0..3 {
            for r in 0..12 {
                assert!((f_scaled.column(o)[r] * scale - f.column(o)[r]).norm() < 1e-12);
            }
        }
        assert!(max_residual_from_identity(&f_scaled, &scaled) < 1e-9);
    }

    #[test]
    fn permuting_ap_rows_leaves_responses_invariant() {
        // Permuting the AP blocks permutes rows of both the stacked channel
        // and the beamformer, so every combined response is unchanged.
        let m = 20;
        let h = random_matrix(m, 5, 73);
        let probe = random_matrix(m, 1, 74);
        let mut perm: Vec<usize> = (0..m).collect();
        perm.reverse();
        perm.swap(3, 11);

        let permute = |v: &[Complex64]| -> Vec<Complex64> { perm.iter().map(|&i| v[i]).collect() };
        let h_perm = StackedChannel::from_columns((0..5).map(|o| permute(h.column(o))).collect());
        let f = zf_matrix(&h).unwrap();
        let f_perm = zf_matrix(&h_perm).unwrap();
        for o in 0..5 {
            let direct = f.response(o, probe.column(0));
            let permuted = f_perm.response(o, &permute(probe.column(0)));
            assert!((direct - permuted).norm() < 1e-10);
        }
    }

    #[test]
    fn duplicate_sensors_are_rank_deficient() {
        let mut rng = ChaCha12Rng::seed_from_u64(79);
        let col: Vec<Complex64> = (0..8).map(|_| c(rng.random(), rng.random())).collect();
        let h = StackedChannel::from_columns(vec![col.clone(), col]);
        assert!(matches!(zf_matrix(&h), Err(SimError::RankDeficient { .. })));
    }

    #[test]
    fn stacking_follows_global_orders() {
        let dims = ChannelDims {
            num_subnetworks: 2,
            sensors_per_subnetwork: 2,
            aps_per_subnetwork: 2,
            antennas_per_ap: 1,
        };
        // Link (sensor, ap) carries the value sensor + 10*ap.
        let links = (0..dims.total_sensors())
            .flat_map(|s| {
                (0..dims.total_aps()).map(move |a| vec![c(s as f64 + 10.0 * a as f64, 0.0)])
            })
            .collect();
        let state = ChannelState::from_links(dims, links);
        let stacked = stack_subnetwork_channel(&state, 1);
        assert_eq!(stacked.num_antennas(), 2);
        assert_eq!(stacked.num_sensors(), 2);
        // Sub-network 1 owns sensors 2,3 and APs 2,3.
        assert_eq!(stacked.column(0), &[c(22.0, 0.0), c(32.0, 0.0)]);
        assert_eq!(stacked.column(1), &[c(23.0, 0.0), c(33.0, 0.0)]);
    }
}
