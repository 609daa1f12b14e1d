//! Offline phase: angular-delay power spectrum.
//!
//! A path-level radio map is folded into a 2-D power map over the
//! (sin-AoA, delay) plane. Each path contributes the product of its power,
//! the squared array-response correlation along the angle axis, and the
//! squared Dirichlet kernel along the delay axis. Dominant peaks of the map
//! are extracted with 3x3 non-maximum suppression, refined to sub-bin
//! accuracy with three-point parabolic interpolation, and optionally
//! clipped back to within half a bin of the detected node (the trust
//! region), which bounds the worst-case angle error under map bias.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::channel::{steering_from_sin, MultipathSet, SystemConfig};
use crate::error::{CharmError, Result};
use crate::linalg::cdot;

/// Peak threshold relative to the global maximum, in dB.
pub const PEAK_THRESHOLD_DB: f64 = 10.0;

/// Flat-parabola guard: denominators below this fraction of the center
/// value yield a zero offset.
const FLAT_DENOM_REL: f64 = 1e-12;

/// Real nonnegative power map over (sin-AoA, delay) with axis metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct AdpsGrid {
    pub g_theta: usize,
    pub g_tau: usize,
    /// AoA grid spacing in the sin domain, `2 / g_theta`.
    pub du: f64,
    /// Delay grid spacing `1/(K df)` in seconds.
    pub dtau: f64,
    power: Vec<f64>,
}

impl AdpsGrid {
    fn zeros(cfg: &SystemConfig) -> Self {
        AdpsGrid {
            g_theta: cfg.g_theta,
            g_tau: cfg.g_tau,
            du: cfg.du(),
            dtau: cfg.delay_resolution(),
            power: vec![0.0; cfg.g_theta * cfg.g_tau],
        }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.power[i * self.g_tau + j]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.power[i * self.g_tau + j]
    }

    /// Sin-domain coordinate of AoA row `i`.
    pub fn u_at(&self, i: usize) -> f64 {
        -1.0 + self.du * i as f64
    }

    /// Delay of column `j`.
    pub fn tau_at(&self, j: usize) -> f64 {
        self.dtau * j as f64
    }

    pub fn global_max(&self) -> f64 {
        self.power.iter().cloned().fold(0.0f64, f64::max)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.power
    }
}

/// One extracted ADPS peak: grid node, refined position, and the final
/// (possibly trust-clipped) sin-AoA/delay estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakRecord {
    /// AoA grid index.
    pub i: usize,
    /// Delay grid index.
    pub j: usize,
    /// AoA of the grid node, radians.
    pub theta_grid: f64,
    /// Sin-domain node coordinate.
    pub u_grid: f64,
    /// Delay node, seconds.
    pub tau_grid: f64,
    /// Refined sin-AoA (equals `u_grid` when refinement is off).
    pub u_ref: f64,
    /// Refined delay (equals `tau_grid` when refinement is off).
    pub tau_ref: f64,
    /// Final sin-AoA after the optional trust clip.
    pub u_hat: f64,
    /// Final delay after the optional trust clip.
    pub tau_hat: f64,
    /// ADPS power at the node.
    pub power: f64,
}

/// Extracted multipath support, strongest peak first.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSupport {
    records: Vec<PeakRecord>,
    pub refined: bool,
    pub trust_clipped: bool,
}

impl PathSupport {
    pub fn records(&self) -> &[PeakRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Rebuild a support from raw records (used by the file loader and the
    /// FFI layer). Records are re-sorted by descending power.
    pub fn from_records(mut records: Vec<PeakRecord>, refined: bool, trust_clipped: bool) -> Result<Self> {
        if records.is_empty() {
            return Err(CharmError::EmptySupport);
        }
        records.sort_by(|a, b| {
            b.power
                .partial_cmp(&a.power)
                .unwrap()
                .then(a.i.cmp(&b.i))
                .then(a.j.cmp(&b.j))
        });
        Ok(PathSupport {
            records,
            refined,
            trust_clipped,
        })
    }
}

/// Support extraction switches: `refine = false` reproduces the
/// no-refinement ablation, `trust = true` enables the trust-region clip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportOptions {
    pub refine: bool,
    pub trust: bool,
}

impl Default for SupportOptions {
    fn default() -> Self {
        SupportOptions {
            refine: true,
            trust: false,
        }
    }
}

/// Normalized K-point Dirichlet kernel magnitude,
/// `|sum_k exp(-j 2 pi k df tau)| / K`, with `D_K(0) = 1`.
///
/// Periodic in `tau` with period `1/df`; zero at nonzero integer multiples
/// of the delay resolution within one period.
pub fn dirichlet_k(cfg: &SystemConfig, tau: f64) -> f64 {
    let k = cfg.n_subcarriers as f64;
    let x = cfg.subcarrier_spacing * tau; // cycles per subcarrier step
    let r = x - x.round();
    if r.abs() < 1e-12 {
        return 1.0;
    }
    let num = (PI * k * r).sin().abs();
    let den = k * (PI * r).sin().abs();
    (num / den).min(1.0)
}

/// Build the ADPS from a path-level radio map:
/// `P(u_i, tau_j) = sum_l |alpha_l|^2 |a_r(u_i)^H a_r(u_l)|^2 D_K^2(tau_j - tau_l)`.
///
/// Unit-norm steering vectors make the spatial factor equal 1 on the node
/// matching the path, so a lone path peaks at exactly `|alpha|^2`.
pub fn build_adps(cfg: &SystemConfig, radio_map: &MultipathSet) -> Result<AdpsGrid> {
    cfg.validate()?;
    radio_map.validate(cfg)?;
    let mut grid = AdpsGrid::zeros(cfg);

    // node steering vectors, computed once
    let nodes: Vec<Vec<Complex64>> = (0..cfg.g_theta)
        .map(|i| steering_from_sin(cfg.n_rx, grid.u_at(i)))
        .collect();

    let mut spatial = vec![0.0f64; cfg.g_theta];
    let mut delay = vec![0.0f64; cfg.g_tau];
    for p in radio_map.paths() {
        let a_path = steering_from_sin(cfg.n_rx, p.aoa.sin());
        for (i, node) in nodes.iter().enumerate() {
            spatial[i] = cdot(node, &a_path).norm_sqr();
        }
        for (j, d) in delay.iter_mut().enumerate() {
            let dk = dirichlet_k(cfg, grid.tau_at(j) - p.delay);
            *d = dk * dk;
        }
        let pw = p.gain.norm_sqr();
        for i in 0..cfg.g_theta {
            let w = pw * spatial[i];
            if w == 0.0 {
                continue;
            }
            let row = &mut grid.power[i * cfg.g_tau..(i + 1) * cfg.g_tau];
            for (o, &d) in row.iter_mut().zip(&delay) {
                *o += w * d;
            }
        }
    }
    Ok(grid)
}

/// 3x3 non-maximum suppression with a dynamic threshold relative to the
/// global maximum. Ties count as dominance; the window is truncated at the
/// grid edges; results are sorted by power descending with (i, j) as the
/// tie-break and truncated to the `l_max` strongest.
pub fn extract_peaks(grid: &AdpsGrid, threshold_db: f64, l_max: usize) -> Result<PathSupport> {
    let max = grid.global_max();
    if !(max > 0.0) {
        return Err(CharmError::DegenerateGrid(
            "all-zero power map has no peaks".into(),
        ));
    }
    let threshold = max * 10f64.powf(-threshold_db / 10.0);
    let mut records = Vec::new();
    for i in 0..grid.g_theta {
        for j in 0..grid.g_tau {
            let v = grid.at(i, j);
            if v <= threshold {
                continue;
            }
            let mut dominant = true;
            'window: for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let ni = i as i64 + di;
                    let nj = j as i64 + dj;
                    if ni < 0 || nj < 0 || ni >= grid.g_theta as i64 || nj >= grid.g_tau as i64 {
                        continue;
                    }
                    if grid.at(ni as usize, nj as usize) > v {
                        dominant = false;
                        break 'window;
                    }
                }
            }
            if !dominant {
                continue;
            }
            let u = grid.u_at(i);
            let tau = grid.tau_at(j);
            records.push(PeakRecord {
                i,
                j,
                theta_grid: u.asin(),
                u_grid: u,
                tau_grid: tau,
                u_ref: u,
                tau_ref: tau,
                u_hat: u,
                tau_hat: tau,
                power: v,
            });
        }
    }
    if records.is_empty() {
        return Err(CharmError::EmptySupport);
    }
    records.sort_by(|a, b| {
        b.power
            .partial_cmp(&a.power)
            .unwrap()
            .then(a.i.cmp(&b.i))
            .then(a.j.cmp(&b.j))
    });
    records.truncate(l_max);
    Ok(PathSupport {
        records,
        refined: false,
        trust_clipped: false,
    })
}

/// Three-point parabolic vertex offset
/// `delta = 1/2 (P_prev - P_next) / (P_prev - 2 P_center + P_next) * spacing`.
///
/// Requires the center to dominate both neighbors; a flat triple (tiny
/// denominator) yields zero. The result always satisfies `|delta| <= spacing/2`.
pub fn parabolic_refine(p_prev: f64, p_center: f64, p_next: f64, spacing: f64) -> Result<f64> {
    if !(p_center >= p_prev && p_center >= p_next) {
        return Err(CharmError::PeakPrecondition(format!(
            "center {p_center} does not dominate neighbors ({p_prev}, {p_next})"
        )));
    }
    let denom = p_prev - 2.0 * p_center + p_next;
    if denom.abs() < FLAT_DENOM_REL * p_center.abs() {
        return Ok(0.0);
    }
    Ok(0.5 * (p_prev - p_next) / denom * spacing)
}

/// Clip refined estimates to within half a grid bin of the detected node.
/// Idempotent.
pub fn trust_clip(
    u_ref: f64,
    tau_ref: f64,
    u_grid: f64,
    tau_grid: f64,
    du: f64,
    dtau: f64,
) -> (f64, f64) {
    let u = u_ref.clamp(u_grid - du / 2.0, u_grid + du / 2.0);
    let tau = tau_ref.clamp(tau_grid - dtau / 2.0, tau_grid + dtau / 2.0);
    (u, tau)
}

/// Full offline pipeline: ADPS construction, peak extraction, optional
/// per-axis parabolic refinement, optional trust clip.
pub fn extract_support(
    cfg: &SystemConfig,
    radio_map: &MultipathSet,
    options: SupportOptions,
) -> Result<PathSupport> {
    let grid = build_adps(cfg, radio_map)?;
    let mut support = extract_peaks(&grid, PEAK_THRESHOLD_DB, cfg.support_cap())?;

    if options.refine {
        for rec in support.records.iter_mut() {
            // edge peaks skip refinement on the clipped axis
            if rec.i > 0 && rec.i + 1 < grid.g_theta {
                let d = parabolic_refine(
                    grid.at(rec.i - 1, rec.j),
                    rec.power,
                    grid.at(rec.i + 1, rec.j),
                    grid.du,
                )?;
                rec.u_ref = rec.u_grid + d;
            }
            if rec.j > 0 && rec.j + 1 < grid.g_tau {
                let d = parabolic_refine(
                    grid.at(rec.i, rec.j - 1),
                    rec.power,
                    grid.at(rec.i, rec.j + 1),
                    grid.dtau,
                )?;
                rec.tau_ref = rec.tau_grid + d;
            }
            rec.u_hat = rec.u_ref;
            rec.tau_hat = rec.tau_ref;
        }
        support.refined = true;
    }

    if options.trust {
        for rec in support.records.iter_mut() {
            let (u, tau) = trust_clip(
                rec.u_ref,
                rec.tau_ref,
                rec.u_grid,
                rec.tau_grid,
                grid.du,
                grid.dtau,
            );
            rec.u_hat = u;
            rec.tau_hat = tau;
        }
        support.trust_clipped = true;
    }

    Ok(support)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Path;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn cfg_16() -> SystemConfig {
        SystemConfig::new(8, 4, 16, 120e3) // g_theta 16, g_tau 16
    }

    fn single_path_map(_cfg: &SystemConfig, u: f64, tau: f64, gain: Complex64) -> MultipathSet {
        MultipathSet::new(vec![Path {
            gain,
            aoa: u.asin(),
            aod: 0.1,
            delay: tau,
        }])
        .unwrap()
    }

    #[test]
    fn dirichlet_unity_at_zero_and_period() {
        let cfg = cfg_16();
        assert_eq!(dirichlet_k(&cfg, 0.0), 1.0);
        assert_eq!(dirichlet_k(&cfg, cfg.delay_period()), 1.0);
    }

    #[test]
    fn dirichlet_nulls_at_nonzero_bins() {
        let cfg = cfg_16();
        for m in [1usize, 2, 7, 15] {
            let d = dirichlet_k(&cfg, m as f64 * cfg.delay_resolution());
            assert!(d < 1e-10, "bin {m} gave {d}");
        }
    }

    #[test]
    fn dirichlet_stays_in_unit_interval() {
        let cfg = SystemConfig::default();
        for i in 0..500 {
            let tau = i as f64 * 3.7e-9;
            let d = dirichlet_k(&cfg, tau);
            assert!((0.0..=1.0).contains(&d));
        }
    }

    /// Naive implementation of the ADPS definition: explicit steering inner
    /// products and an explicit K-term phase sum for the delay kernel.
    fn adps_oracle(cfg: &SystemConfig, map: &MultipathSet) -> Vec<f64> {
        let mut out = vec![0.0; cfg.g_theta * cfg.g_tau];
        for i in 0..cfg.g_theta {
            let u_i = -1.0 + 2.0 * i as f64 / cfg.g_theta as f64;
            let node = steering_from_sin(cfg.n_rx, u_i);
            for j in 0..cfg.g_tau {
                let tau_j = j as f64 * cfg.delay_resolution();
                let mut acc = 0.0;
                for p in map.paths() {
                    let a = steering_from_sin(cfg.n_rx, p.aoa.sin());
                    let spatial = cdot(&node, &a).norm_sqr();
                    let mut s = c(0.0, 0.0);
                    for k in 0..cfg.n_subcarriers {
                        let phase =
                            -2.0 * PI * k as f64 * cfg.subcarrier_spacing * (tau_j - p.delay);
                        s += c(phase.cos(), phase.sin());
                    }
                    let dk = s.norm() / cfg.n_subcarriers as f64;
                    acc += p.gain.norm_sqr() * spatial * dk * dk;
                }
                out[i * cfg.g_tau + j] = acc;
            }
        }
        out
    }

    #[test]
    fn adps_on_grid_path_peaks_at_gain_power() {
        let cfg = cfg_16();
        let i_star = 5;
        let j_star = 3;
        let u = -1.0 + 2.0 * i_star as f64 / cfg.g_theta as f64;
        let tau = j_star as f64 * cfg.delay_resolution();
        let map = single_path_map(&cfg, u, tau, c(0.6, 0.8)); // |alpha|^2 = 1
        let grid = build_adps(&cfg, &map).unwrap();
        assert!((grid.at(i_star, j_star) - 1.0).abs() < 1e-12);
        assert!((grid.global_max() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn adps_powers_add() {
        let cfg = cfg_16();
        let u = -1.0 + 2.0 * 7.0 / cfg.g_theta as f64;
        let tau = 2.0 * cfg.delay_resolution();
        let single = single_path_map(&cfg, u, tau, c(0.5, 0.1));
        let double = MultipathSet::new(vec![
            single.paths()[0],
            single.paths()[0],
        ])
        .unwrap();
        let g1 = build_adps(&cfg, &single).unwrap();
        let g2 = build_adps(&cfg, &double).unwrap();
        for (a, b) in g1.as_slice().iter().zip(g2.as_slice()) {
            assert!((2.0 * a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn adps_entries_nonnegative() {
        let cfg = cfg_16();
        let map = MultipathSet::new(vec![
            Path { gain: c(0.3, -0.9), aoa: 0.7, aod: 0.0, delay: 1.9e-7 },
            Path { gain: c(-0.6, 0.2), aoa: -0.9, aod: 0.0, delay: 6.4e-7 },
        ])
        .unwrap();
        let grid = build_adps(&cfg, &map).unwrap();
        assert!(grid.as_slice().iter().all(|&v| v >= 0.0 && v.is_finite()));
    }

    #[test]
    fn adps_matches_naive_oracle() {
        // grids up to 32x32, relative tolerance 1e-10 against the grid scale
        let cfg = SystemConfig::new(8, 8, 32, 120e3); // g_theta 32, g_tau 32
        let map = MultipathSet::new(vec![
            Path { gain: c(0.7, 0.1), aoa: 0.35, aod: 0.0, delay: 3.3e-7 },
            Path { gain: c(-0.2, 0.5), aoa: -0.8, aod: 0.0, delay: 1.1e-6 },
            Path { gain: c(0.1, -0.3), aoa: 1.2, aod: 0.0, delay: 0.0 },
        ])
        .unwrap();
        let grid = build_adps(&cfg, &map).unwrap();
        let oracle = adps_oracle(&cfg, &map);
        let scale = grid.global_max();
        for (idx, (a, b)) in grid.as_slice().iter().zip(&oracle).enumerate() {
            assert!(
                (a - b).abs() <= 1e-10 * scale,
                "entry {idx}: {a} vs oracle {b}"
            );
        }
    }

    #[test]
    fn single_on_grid_path_gives_one_peak() {
        let cfg = cfg_16();
        let u = -1.0 + 2.0 * 9.0 / cfg.g_theta as f64;
        let tau = 4.0 * cfg.delay_resolution();
        let map = single_path_map(&cfg, u, tau, c(1.0, 0.0));
        let grid = build_adps(&cfg, &map).unwrap();
        let support = extract_peaks(&grid, PEAK_THRESHOLD_DB, cfg.support_cap()).unwrap();
        assert_eq!(support.len(), 1);
        assert_eq!((support.records()[0].i, support.records()[0].j), (9, 4));
    }

    #[test]
    fn two_separated_paths_give_two_peaks() {
        let cfg = cfg_16();
        let du = 2.0 / cfg.g_theta as f64;
        let dtau = cfg.delay_resolution();
        let map = MultipathSet::new(vec![
            Path { gain: c(0.6, 0.0), aoa: (-1.0 + 4.0 * du).asin(), aod: 0.0, delay: 2.0 * dtau },
            Path { gain: c(0.0, 0.6), aoa: (-1.0 + 12.0 * du).asin(), aod: 0.0, delay: 9.0 * dtau },
        ])
        .unwrap();
        let grid = build_adps(&cfg, &map).unwrap();
        let support = extract_peaks(&grid, PEAK_THRESHOLD_DB, cfg.support_cap()).unwrap();
        assert_eq!(support.len(), 2);
    }

    #[test]
    fn threshold_drops_weak_path() {
        let cfg = cfg_16();
        let du = 2.0 / cfg.g_theta as f64;
        let dtau = cfg.delay_resolution();
        // second path 15 dB below the first
        let weak = 10f64.powf(-15.0 / 20.0);
        let map = MultipathSet::new(vec![
            Path { gain: c(1.0, 0.0), aoa: (-1.0 + 4.0 * du).asin(), aod: 0.0, delay: 2.0 * dtau },
            Path { gain: c(weak, 0.0), aoa: (-1.0 + 12.0 * du).asin(), aod: 0.0, delay: 9.0 * dtau },
        ])
        .unwrap();
        let grid = build_adps(&cfg, &map).unwrap();
        let support = extract_peaks(&grid, PEAK_THRESHOLD_DB, cfg.support_cap()).unwrap();
        assert_eq!(support.len(), 1);
    }

    #[test]
    fn all_zero_grid_is_an_error() {
        let cfg = cfg_16();
        let map = single_path_map(&cfg, 0.25, 2e-7, c(0.0, 0.0));
        let grid = build_adps(&cfg, &map).unwrap();
        assert!(matches!(
            extract_peaks(&grid, PEAK_THRESHOLD_DB, 4),
            Err(CharmError::DegenerateGrid(_))
        ));
    }

    #[test]
    fn peaks_satisfy_predicates_post_hoc() {
        let cfg = SystemConfig::new(8, 8, 32, 120e3);
        let map = MultipathSet::new(vec![
            Path { gain: c(0.9, 0.1), aoa: 0.31, aod: 0.0, delay: 4.1e-7 },
            Path { gain: c(0.4, -0.6), aoa: -0.52, aod: 0.0, delay: 1.3e-6 },
            Path { gain: c(0.5, 0.5), aoa: 0.9, aod: 0.0, delay: 8.8e-7 },
        ])
        .unwrap();
        let grid = build_adps(&cfg, &map).unwrap();
        let support = extract_peaks(&grid, PEAK_THRESHOLD_DB, cfg.support_cap()).unwrap();
        let thr = grid.global_max() * 10f64.powf(-PEAK_THRESHOLD_DB / 10.0);
        assert!(support.len() <= cfg.support_cap());
        for rec in support.records() {
            assert!(rec.power > thr);
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    let ni = rec.i as i64 + di;
                    let nj = rec.j as i64 + dj;
                    if ni < 0 || nj < 0 || ni >= grid.g_theta as i64 || nj >= grid.g_tau as i64 {
                        continue;
                    }
                    assert!(rec.power >= grid.at(ni as usize, nj as usize));
                }
            }
        }
        // sorted by power descending
        for w in support.records().windows(2) {
            assert!(w[0].power >= w[1].power);
        }
    }

    #[test]
    fn parabolic_symmetric_is_zero() {
        assert_eq!(parabolic_refine(2.0, 5.0, 2.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn parabolic_spec_values() {
        let d = parabolic_refine(1.0, 4.0, 3.0, 1.0).unwrap();
        assert!((d - 0.25).abs() < 1e-15);
        let d = parabolic_refine(3.0, 4.0, 1.0, 1.0).unwrap();
        assert!((d + 0.25).abs() < 1e-15);
    }

    #[test]
    fn parabolic_rejects_non_peak() {
        assert!(parabolic_refine(5.0, 4.0, 3.0, 1.0).is_err());
        assert!(parabolic_refine(3.0, 4.0, 5.0, 1.0).is_err());
    }

    #[test]
    fn parabolic_flat_triple_is_zero() {
        assert_eq!(parabolic_refine(4.0, 4.0, 4.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn trust_clip_identity_inside() {
        let (u, tau) = trust_clip(0.501, 1e-7, 0.5, 1e-7, 0.015625, 1e-8);
        assert_eq!(u, 0.501);
        assert_eq!(tau, 1e-7);
    }

    #[test]
    fn trust_clip_spec_arithmetic() {
        // u_grid 0.5, du = 2/128, u_ref 0.53 -> clipped to 0.5078125
        let (u, _) = trust_clip(0.53, 0.0, 0.5, 0.0, 2.0 / 128.0, 1.0);
        assert_eq!(u, 0.5078125);
    }

    #[test]
    fn trust_clip_is_idempotent() {
        let (u1, t1) = trust_clip(0.9, 5e-7, 0.5, 1e-7, 0.015625, 1e-8);
        let (u2, t2) = trust_clip(u1, t1, 0.5, 1e-7, 0.015625, 1e-8);
        assert_eq!((u1, t1), (u2, t2));
    }

    #[test]
    fn trust_clip_worst_case_error_bound() {
        // with |u_grid - u_true| = 0.2 and du = 2/128 the clipped estimate
        // can never be farther than 0.2078125 from the truth
        let du = 2.0 / 128.0;
        let mut worst = 0.0f64;
        for t in 0..2000 {
            let u_true = -0.9 + 1.8 * (t as f64 / 1999.0);
            let u_grid = u_true + if t % 2 == 0 { 0.2 } else { -0.2 };
            for s in 0..50 {
                let u_ref = u_grid - 0.5 + (s as f64 / 49.0);
                let (u_hat, _) = trust_clip(u_ref, 0.0, u_grid, 0.0, du, 1.0);
                worst = worst.max((u_hat - u_true).abs());
            }
        }
        assert!(worst <= 0.2078125 + 1e-12, "worst-case error {worst}");
    }

    #[test]
    fn support_on_grid_refinement_is_exact() {
        let cfg = cfg_16();
        let u = -1.0 + 2.0 * 6.0 / cfg.g_theta as f64;
        let tau = 3.0 * cfg.delay_resolution();
        let map = single_path_map(&cfg, u, tau, c(1.0, 0.0));
        let support = extract_support(&cfg, &map, SupportOptions::default()).unwrap();
        assert_eq!(support.len(), 1);
        let rec = &support.records()[0];
        assert!((rec.u_hat - u).abs() < 1e-12);
        assert!((rec.tau_hat - tau).abs() < 1e-12 * cfg.delay_resolution());
    }

    #[test]
    fn refinement_reduces_off_grid_error() {
        let cfg = SystemConfig::new(8, 8, 32, 120e3);
        let du = 2.0 / cfg.g_theta as f64;
        let u_grid = -1.0 + 14.0 * du;
        let u_true = u_grid + 0.3 * du;
        let map = single_path_map(&cfg, u_true, 5.0 * cfg.delay_resolution(), c(1.0, 0.0));
        let unrefined = extract_support(&cfg, &map, SupportOptions { refine: false, trust: false }).unwrap();
        let refined = extract_support(&cfg, &map, SupportOptions::default()).unwrap();
        let e0 = (unrefined.records()[0].u_hat - u_true).abs();
        let e1 = (refined.records()[0].u_hat - u_true).abs();
        assert!(e1 < e0, "refinement should help: {e1} !< {e0}");
    }

    #[test]
    fn trust_without_bias_is_bitwise_identical() {
        let cfg = SystemConfig::new(8, 8, 32, 120e3);
        let map = MultipathSet::new(vec![
            Path { gain: c(0.8, 0.2), aoa: 0.41, aod: 0.0, delay: 6.3e-7 },
            Path { gain: c(-0.3, 0.4), aoa: -0.77, aod: 0.0, delay: 1.4e-6 },
        ])
        .unwrap();
        let plain = extract_support(&cfg, &map, SupportOptions { refine: true, trust: false }).unwrap();
        let trusted = extract_support(&cfg, &map, SupportOptions { refine: true, trust: true }).unwrap();
        assert_eq!(plain.records().len(), trusted.records().len());
        for (a, b) in plain.records().iter().zip(trusted.records()) {
            assert_eq!(a.u_hat.to_bits(), b.u_hat.to_bits());
            assert_eq!(a.tau_hat.to_bits(), b.tau_hat.to_bits());
        }
    }

    #[test]
    fn support_length_respects_cap() {
        let cfg = SystemConfig::new(8, 2, 32, 120e3); // cap = min(2, 16) = 2
        let dtau = cfg.delay_resolution();
        let map = MultipathSet::new(
            (0..5)
                .map(|i| Path {
                    gain: c(1.0, 0.0),
                    aoa: (-0.9 + i as f64 * 0.4).asin(),
                    aod: 0.0,
                    delay: (2 + 5 * i) as f64 * dtau,
                })
                .collect(),
        )
        .unwrap();
        let support = extract_support(&cfg, &map, SupportOptions::default()).unwrap();
        assert!(support.len() <= 2);
    }

    proptest! {
        /// Eq-7 offsets never leave half a bin when the peak condition holds.
        #[test]
        fn refinement_offset_bounded(
            a in 0.0f64..1000.0,
            b in 0.0f64..1000.0,
            peak_lift in 1e-9f64..1000.0,
            spacing in 1e-9f64..10.0,
        ) {
            let center = a.max(b) + peak_lift;
            let d = parabolic_refine(a, center, b, spacing).unwrap();
            prop_assert!(d.abs() <= spacing / 2.0 + 1e-15);
        }

        #[test]
        fn dirichlet_bounded(tau_ns in 0.0f64..10_000.0) {
            let cfg = SystemConfig::new(8, 8, 32, 120e3);
            let d = dirichlet_k(&cfg, tau_ns * 1e-9);
            prop_assert!((0.0..=1.0).contains(&d));
        }
    }
}
