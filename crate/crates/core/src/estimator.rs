//! Online phase of the radio-map-aided estimator.
//!
//! Given the extracted AoA/delay support, the receiver separates the paths
//! with a spatial projection, coherently averages each path over the
//! subcarriers after delay compensation, and runs a one-dimensional AoD
//! search per path. The channel is reconstructed with the same rank-one
//! kernel used by the simulator. Only this phase is timed as "online";
//! support extraction belongs to the offline phase.

use num_complex::Complex64;
use std::f64::consts::PI;
use std::time::Instant;

use crate::adps::{extract_support, PathSupport, SupportOptions};
use crate::channel::{
    steering_from_sin, synth_rank_one_sum, ChannelTensor, MultipathSet, PilotMatrix,
    RxObservations, SystemConfig,
};
use crate::error::{CharmError, Result};
use crate::linalg::{norm_sq, CMat};

/// Online estimator knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    /// Tikhonov weight applied as `lambda * diag(1/P_l)` when the steering
    /// Gram is ill-conditioned.
    pub tikhonov_lambda: f64,
    /// Condition-number threshold that switches on regularization.
    pub condition_threshold: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            tikhonov_lambda: 1e-2,
            condition_threshold: 100.0,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tikhonov_lambda > 0.0) {
            return Err(CharmError::Config("tikhonov_lambda must be > 0".into()));
        }
        if !(self.condition_threshold > 1.0) {
            return Err(CharmError::Config("condition_threshold must be > 1".into()));
        }
        Ok(())
    }
}

/// Receive-side projection `W` with its conditioning diagnostics.
#[derive(Debug, Clone)]
pub struct ProjectionMatrix {
    /// `L x n_rx`; row `l` isolates path `l`.
    pub w: CMat,
    pub kappa: f64,
    pub regularized: bool,
}

/// Per-path online estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathEstimate {
    /// Selected AoD dictionary index.
    pub aod_index: usize,
    /// AoD angle in radians.
    pub aod: f64,
    /// Estimated complex gain.
    pub gain: Complex64,
    /// Sin-AoA inherited from the support.
    pub u_hat: f64,
    /// Delay inherited from the support.
    pub tau_hat: f64,
}

/// Estimator diagnostics carried into the benchmark records.
#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    pub kappa: Option<f64>,
    pub regularized: Option<bool>,
    pub support_size: usize,
    /// Post-projection noise variance per path, `||w_l||^2 sigma^2`.
    pub sigma_z_sq: Vec<f64>,
}

/// Full estimator output.
#[derive(Debug, Clone)]
pub struct EstimateResult {
    pub h_hat: ChannelTensor,
    pub paths: Vec<PathEstimate>,
    /// Online wall time in milliseconds (projection through reconstruction).
    pub online_ms: f64,
    /// Offline wall time in milliseconds (support extraction); zero for
    /// estimators without an offline phase.
    pub offline_ms: f64,
    pub diagnostics: Diagnostics,
}

/// Build the spatial projection from the support AoAs. The unregularized
/// pseudo-inverse is used while the Gram stays well-conditioned
/// (`W A_r = I`); otherwise Tikhonov regularization weighted by inverse
/// peak power takes over.
pub fn build_projection(
    cfg: &SystemConfig,
    support: &PathSupport,
    ecfg: &EstimatorConfig,
) -> Result<ProjectionMatrix> {
    ecfg.validate()?;
    let l = support.len();
    if l == 0 {
        return Err(CharmError::EmptySupport);
    }
    if l > cfg.n_rx {
        return Err(CharmError::SupportTooLarge { len: l, n_rx: cfg.n_rx });
    }

    // A_r: n_rx x L, columns are steering vectors at the support AoAs.
    let columns: Vec<Vec<Complex64>> = support
        .records()
        .iter()
        .map(|rec| steering_from_sin(cfg.n_rx, rec.u_hat))
        .collect();
    let a_r = CMat::from_fn(cfg.n_rx, l, |r, c| columns[c][r]);
    let a_r_h = a_r.hermitian();
    let gram = a_r_h.mul(&a_r);

    let kappa = gram.hermitian_condition_number();
    let regularized = !(kappa <= ecfg.condition_threshold);

    let system = if regularized {
        let mut g = gram.clone();
        for (idx, rec) in support.records().iter().enumerate() {
            *g.at_mut(idx, idx) += Complex64::new(ecfg.tikhonov_lambda / rec.power, 0.0);
        }
        g
    } else {
        gram
    };

    let inv = system
        .inverse()
        .ok_or(CharmError::SingularProjection { kappa })?;
    Ok(ProjectionMatrix {
        w: inv.mul(&a_r_h),
        kappa,
        regularized,
    })
}

/// Spatial projection followed by delay compensation and subcarrier
/// averaging: `zbar_l[t] = (1/K) sum_k w_l^H y[t,k] e^{+j 2 pi k df tau_l}`.
/// Returns the `L x T` pilot-domain matrix.
pub fn project_and_compensate(
    cfg: &SystemConfig,
    y: &RxObservations,
    w: &ProjectionMatrix,
    support: &PathSupport,
) -> Result<CMat> {
    if y.n_rx != cfg.n_rx || y.n_subcarriers != cfg.n_subcarriers {
        return Err(CharmError::Dimension(
            "observations do not match the system configuration".into(),
        ));
    }
    let l = support.len();
    if w.w.nrows != l || w.w.ncols != cfg.n_rx {
        return Err(CharmError::Dimension("projection shape mismatch".into()));
    }
    let k_sub = cfg.n_subcarriers;
    let t_slots = y.n_slots;
    let df = cfg.subcarrier_spacing;

    // per-path compensation phasors e^{+j 2 pi k df tau_l}
    let comp: Vec<Vec<Complex64>> = support
        .records()
        .iter()
        .map(|rec| {
            (0..k_sub)
                .map(|k| {
                    let phase = 2.0 * PI * k as f64 * df * rec.tau_hat;
                    Complex64::new(phase.cos(), phase.sin())
                })
                .collect()
        })
        .collect();

    let mut zbar = CMat::zeros(l, t_slots);
    let scale = 1.0 / k_sub as f64;
    for li in 0..l {
        let w_row = w.w.row(li);
        let comp_row = &comp[li];
        for t in 0..t_slots {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..k_sub {
                let yv = y.at(t, k);
                // rows of W are already the conjugated projectors w_l^H
                let mut z = Complex64::new(0.0, 0.0);
                for (&wv, &yy) in w_row.iter().zip(yv) {
                    z += wv * yy;
                }
                acc += z * comp_row[k];
            }
            *zbar.at_mut(li, t) = acc * scale;
        }
    }
    Ok(zbar)
}

/// Transmit-side dictionary responses for the whole sin-domain AoD grid,
/// with squared norms.
///
/// With the channel written as `H = sum alpha e a_r a_t^H`, the pilot-side
/// scalar that survives projection and delay compensation is
/// `a_t(phi)^H x_t`, so that is the response the search correlates against.
/// Its norm matches `|x_t^H a_t|` entrywise, so scores are unchanged by the
/// convention; getting the conjugation right is what makes the argmax land
/// on the true atom and the gain fit come out exact.
pub(crate) struct AodDictionary {
    pub responses: CMat, // g_phi x T, entry = a_t(phi_g)^H x_t
    pub norms_sq: Vec<f64>,
    pub nodes: Vec<f64>,
}

impl AodDictionary {
    pub fn build(cfg: &SystemConfig, pilots: &PilotMatrix) -> Self {
        let t_slots = pilots.n_slots;
        let mut responses = CMat::zeros(cfg.g_phi, t_slots);
        let mut nodes = Vec::with_capacity(cfg.g_phi);
        for g in 0..cfg.g_phi {
            let u = cfg.aod_node(g);
            nodes.push(u);
            let atom = steering_from_sin(cfg.n_tx, u);
            for t in 0..t_slots {
                *responses.at_mut(g, t) = crate::linalg::cdot(&atom, pilots.col(t));
            }
        }
        let norms_sq = (0..cfg.g_phi).map(|g| norm_sq(responses.row(g))).collect();
        AodDictionary {
            responses,
            norms_sq,
            nodes,
        }
    }
}

/// Atoms whose pilot response carries less energy than this are invisible
/// to the search and get excluded.
const ATOM_NORM_FLOOR: f64 = 1e-12;

fn search_dictionary(
    dict: &AodDictionary,
    zbar_row: &[Complex64],
) -> Result<(usize, Complex64)> {
    let mut best: Option<(usize, f64, Complex64)> = None;
    for g in 0..dict.norms_sq.len() {
        let n2 = dict.norms_sq[g];
        if n2 < ATOM_NORM_FLOOR {
            continue;
        }
        let corr = crate::linalg::cdot(dict.responses.row(g), zbar_row);
        let score = corr.norm_sqr() / n2;
        let better = match &best {
            None => true,
            Some((_, s, _)) => score > *s,
        };
        if better {
            best = Some((g, score, corr / n2));
        }
    }
    match best {
        Some((g, _, gain)) => Ok((g, gain)),
        None => Err(CharmError::NoUsableAtoms),
    }
}

/// One-dimensional AoD search for a single path: maximize
/// `|u_g^H zbar|^2 / ||u_g||^2` over the AoD grid, ties broken by the
/// lowest index; the gain estimate is the least-squares fit on the winner.
pub fn aod_search(
    cfg: &SystemConfig,
    zbar_row: &[Complex64],
    pilots: &PilotMatrix,
    _ecfg: &EstimatorConfig,
) -> Result<PathEstimate> {
    let dict = AodDictionary::build(cfg, pilots);
    let (g, gain) = search_dictionary(&dict, zbar_row)?;
    Ok(PathEstimate {
        aod_index: g,
        aod: dict.nodes[g].asin(),
        gain,
        u_hat: 0.0,
        tau_hat: 0.0,
    })
}

/// Rebuild the channel tensor from per-path estimates with the same
/// rank-one kernel as the forward model.
pub fn reconstruct(cfg: &SystemConfig, estimates: &[PathEstimate]) -> Result<ChannelTensor> {
    if estimates.is_empty() {
        return Err(CharmError::EmptySupport);
    }
    let components: Vec<(Complex64, f64, f64, f64)> = estimates
        .iter()
        .map(|e| (e.gain, e.u_hat, e.aod.sin(), e.tau_hat))
        .collect();
    Ok(synth_rank_one_sum(cfg, &components))
}

/// End-to-end estimator: offline support extraction from the radio map,
/// then projection, delay compensation, per-path AoD search and
/// reconstruction on the received pilots.
pub fn charm_estimate(
    cfg: &SystemConfig,
    ecfg: &EstimatorConfig,
    radio_map: &MultipathSet,
    y: &RxObservations,
    pilots: &PilotMatrix,
    options: SupportOptions,
) -> Result<EstimateResult> {
    let offline_start = Instant::now();
    let support = extract_support(cfg, radio_map, options)?;
    let offline_ms = offline_start.elapsed().as_secs_f64() * 1e3;

    charm_estimate_with_support(cfg, ecfg, &support, y, pilots, offline_ms)
}

/// Online phase only, for callers that persist the support separately.
pub fn charm_estimate_with_support(
    cfg: &SystemConfig,
    ecfg: &EstimatorConfig,
    support: &PathSupport,
    y: &RxObservations,
    pilots: &PilotMatrix,
    offline_ms: f64,
) -> Result<EstimateResult> {
    if pilots.n_slots != y.n_slots {
        return Err(CharmError::Dimension(
            "pilot slots do not match observations".into(),
        ));
    }
    if pilots.n_tx != cfg.n_tx {
        return Err(CharmError::Dimension("pilot rows do not match n_tx".into()));
    }
    let online_start = Instant::now();

    let proj = build_projection(cfg, support, ecfg)?;
    let zbar = project_and_compensate(cfg, y, &proj, support)?;
    let dict = AodDictionary::build(cfg, pilots);

    let mut paths = Vec::with_capacity(support.len());
    for (li, rec) in support.records().iter().enumerate() {
        let (g, gain) = search_dictionary(&dict, zbar.row(li))?;
        paths.push(PathEstimate {
            aod_index: g,
            aod: dict.nodes[g].asin(),
            gain,
            u_hat: rec.u_hat,
            tau_hat: rec.tau_hat,
        });
    }
    let h_hat = reconstruct(cfg, &paths)?;
    let online_ms = online_start.elapsed().as_secs_f64() * 1e3;

    let sigma_z_sq = (0..support.len())
        .map(|li| norm_sq(proj.w.row(li)) * y.noise_variance)
        .collect();

    Ok(EstimateResult {
        h_hat,
        paths,
        online_ms,
        offline_ms,
        diagnostics: Diagnostics {
            kappa: Some(proj.kappa),
            regularized: Some(proj.regularized),
            support_size: support.len(),
            sigma_z_sq,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{dft_pilots, nmse, simulate_rx, synthesize_channel, Path, PilotMode};
    use crate::linalg::cdot;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Support with explicit node positions, bypassing the ADPS.
    fn support_at(_cfg: &SystemConfig, entries: &[(f64, f64, f64)]) -> PathSupport {
        let records = entries
            .iter()
            .map(|&(u, tau, power)| crate::adps::PeakRecord {
                i: 0,
                j: 0,
                theta_grid: u.asin(),
                u_grid: u,
                tau_grid: tau,
                u_ref: u,
                tau_ref: tau,
                u_hat: u,
                tau_hat: tau,
                power,
            })
            .collect();
        PathSupport::from_records(records, false, false).unwrap()
    }

    #[test]
    fn single_path_projection_is_matched_filter() {
        let cfg = SystemConfig::new(8, 8, 16, 120e3);
        let u = 0.25;
        let support = support_at(&cfg, &[(u, 0.0, 1.0)]);
        let proj = build_projection(&cfg, &support, &EstimatorConfig::default()).unwrap();
        assert!(!proj.regularized);
        assert!((proj.kappa - 1.0).abs() < 1e-9);
        let a = steering_from_sin(cfg.n_rx, u);
        for (got, want) in proj.w.row(0).iter().zip(&a) {
            assert!((got - want.conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn orthogonal_support_gives_identity_product() {
        let cfg = SystemConfig::new(8, 8, 16, 120e3);
        // sin spacing 2/n_rx puts the steering vectors on orthogonal DFT beams
        let support = support_at(&cfg, &[(0.0, 0.0, 1.0), (2.0 / 8.0, 1e-7, 1.0)]);
        let proj = build_projection(&cfg, &support, &EstimatorConfig::default()).unwrap();
        assert!((proj.kappa - 1.0).abs() < 1e-9, "kappa = {}", proj.kappa);
        assert!(!proj.regularized);
        let a_r = CMat::from_fn(cfg.n_rx, 2, |r, col| {
            steering_from_sin(cfg.n_rx, support.records()[col].u_hat)[r]
        });
        let prod = proj.w.mul(&a_r);
        for r in 0..2 {
            for cc in 0..2 {
                let want = if r == cc { 1.0 } else { 0.0 };
                assert!((prod.at(r, cc) - c(want, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn near_collinear_support_takes_regularized_branch() {
        let cfg = SystemConfig::new(8, 8, 16, 120e3);
        let support = support_at(&cfg, &[(0.30, 0.0, 1.0), (0.3001, 1e-7, 0.5)]);
        let proj = build_projection(&cfg, &support, &EstimatorConfig::default()).unwrap();
        assert!(proj.kappa > 100.0);
        assert!(proj.regularized);
        // regularization keeps the projection bounded
        assert!(proj.w.frob_norm_sq().is_finite());
        assert!(proj.w.frob_norm_sq() < 1e6);
    }

    #[test]
    fn oversized_support_is_rejected() {
        let cfg = SystemConfig::new(8, 2, 16, 120e3);
        let support = support_at(&cfg, &[(0.0, 0.0, 1.0), (0.4, 0.0, 1.0), (0.8, 0.0, 1.0)]);
        assert!(matches!(
            build_projection(&cfg, &support, &EstimatorConfig::default()),
            Err(CharmError::SupportTooLarge { .. })
        ));
    }

    #[test]
    fn noiseless_single_path_compensation_is_exact() {
        // exact (theta, tau) support: zbar[t] = alpha * x_t^H a_t(phi)
        let cfg = SystemConfig::new(8, 8, 32, 120e3);
        let u_rx = 0.25f64;
        let u_tx = -0.375f64;
        let tau = 5.0 * cfg.delay_resolution() + 1.1e-8; // off-grid on purpose
        let gain = c(0.7, -0.4);
        let paths = MultipathSet::new(vec![Path {
            gain,
            aoa: u_rx.asin(),
            aod: u_tx.asin(),
            delay: tau,
        }])
        .unwrap();
        let h = synthesize_channel(&cfg, &paths).unwrap();
        let pilots = dft_pilots(&cfg, 4, PilotMode::EvenlySpaced).unwrap();
        let y = simulate_rx(&cfg, &h, &pilots, f64::INFINITY, 0).unwrap();
        let support = support_at(&cfg, &[(u_rx, tau, 1.0)]);
        let proj = build_projection(&cfg, &support, &EstimatorConfig::default()).unwrap();
        let zbar = project_and_compensate(&cfg, &y, &proj, &support).unwrap();
        let a_t = steering_from_sin(cfg.n_tx, u_tx);
        for t in 0..4 {
            let want = gain * cdot(&a_t, pilots.col(t));
            assert!(
                (zbar.at(0, t) - want).norm() < 1e-10,
                "slot {t}: {} vs {}",
                zbar.at(0, t),
                want
            );
        }
    }

    #[test]
    fn delay_error_of_one_bin_nulls_the_average() {
        let cfg = SystemConfig::new(8, 8, 32, 120e3);
        let u_rx = 0.25f64;
        let tau = 5.0 * cfg.delay_resolution();
        let paths = MultipathSet::new(vec![Path {
            gain: c(1.0, 0.0),
            aoa: u_rx.asin(),
            aod: 0.2,
            delay: tau,
        }])
        .unwrap();
        let h = synthesize_channel(&cfg, &paths).unwrap();
        let pilots = dft_pilots(&cfg, 2, PilotMode::EvenlySpaced).unwrap();
        let y = simulate_rx(&cfg, &h, &pilots, f64::INFINITY, 0).unwrap();
        // support delayed by exactly one bin: Dirichlet null kills zbar
        let support = support_at(&cfg, &[(u_rx, tau + cfg.delay_resolution(), 1.0)]);
        let proj = build_projection(&cfg, &support, &EstimatorConfig::default()).unwrap();
        let zbar = project_and_compensate(&cfg, &y, &proj, &support).unwrap();
        for t in 0..2 {
            assert!(zbar.at(0, t).norm() < 1e-12, "expected null, got {}", zbar.at(0, t));
        }
    }

    #[test]
    fn projected_noise_variance_shrinks_by_k() {
        // Monte-Carlo check of the 1/K averaging gain on pure noise.
        let cfg = SystemConfig::new(4, 4, 16, 120e3);
        let support = support_at(&cfg, &[(0.25, 3.0 * cfg.delay_resolution(), 1.0)]);
        let proj = build_projection(&cfg, &support, &EstimatorConfig::default()).unwrap();
        let sigma_sq = 0.5;
        let w_norm_sq = norm_sq(proj.w.row(0));
        let sigma_z_sq = w_norm_sq * sigma_sq;

        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(31);
        let scale = (sigma_sq / 2.0f64).sqrt();
        let reps = 2500; // 2500 * 4 slots = 1e4 samples
        let mut acc = 0.0;
        let mut count = 0usize;
        for _ in 0..reps {
            let n = cfg.n_rx * cfg.n_subcarriers * 4;
            let data: Vec<Complex64> = (0..n)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    c(re * scale, im * scale)
                })
                .collect();
            let y = RxObservations::from_parts(4, cfg.n_subcarriers, cfg.n_rx, sigma_sq, data)
                .unwrap();
            let zbar = project_and_compensate(&cfg, &y, &proj, &support).unwrap();
            for t in 0..4 {
                acc += zbar.at(0, t).norm_sqr();
                count += 1;
            }
        }
        let var = acc / count as f64;
        let expected = sigma_z_sq / cfg.n_subcarriers as f64;
        let ratio = var / expected;
        assert!(
            (0.8..=1.2).contains(&ratio),
            "projected noise ratio {ratio} (var {var}, expected {expected})"
        );
    }

    #[test]
    fn aod_search_matches_brute_force() {
        let cfg = SystemConfig::new(16, 8, 16, 120e3);
        let pilots = dft_pilots(&cfg, 2, PilotMode::EvenlySpaced).unwrap();
        // on-grid AoD, avoid indices aligned with pilot beam nulls
        let g_true = 13;
        let u_tx = cfg.aod_node(g_true);
        let gain = c(0.9, 0.3);
        let a_t = steering_from_sin(cfg.n_tx, u_tx);
        let zbar: Vec<Complex64> = (0..2).map(|t| gain * cdot(&a_t, pilots.col(t))).collect();

        let est = aod_search(&cfg, &zbar, &pilots, &EstimatorConfig::default()).unwrap();

        // independent brute-force evaluation of the selection metric
        let mut best = (0usize, -1.0f64);
        for g in 0..cfg.g_phi {
            let atom = steering_from_sin(cfg.n_tx, cfg.aod_node(g));
            let resp: Vec<Complex64> = (0..2).map(|t| cdot(&atom, pilots.col(t))).collect();
            let n2 = norm_sq(&resp);
            if n2 < 1e-12 {
                continue;
            }
            let score = cdot(&resp, &zbar).norm_sqr() / n2;
            if score > best.1 {
                best = (g, score);
            }
        }
        assert_eq!(est.aod_index, best.0);
        assert_eq!(est.aod_index, g_true);
        assert!((est.gain - gain).norm() < 1e-10, "gain {} vs {}", est.gain, gain);
    }

    #[test]
    fn aod_search_full_pilots_exact() {
        let cfg = SystemConfig::new(8, 4, 16, 120e3);
        let pilots = dft_pilots(&cfg, 8, PilotMode::EvenlySpaced).unwrap();
        let g_true = 9;
        let u_tx = cfg.aod_node(g_true);
        let gain = c(-0.2, 1.1);
        let a_t = steering_from_sin(cfg.n_tx, u_tx);
        let zbar: Vec<Complex64> = (0..8).map(|t| gain * cdot(&a_t, pilots.col(t))).collect();
        let est = aod_search(&cfg, &zbar, &pilots, &EstimatorConfig::default()).unwrap();
        assert_eq!(est.aod_index, g_true);
        assert!((est.gain - gain).norm() < 1e-10);
    }

    #[test]
    fn zero_input_gives_zero_gain_first_atom() {
        let cfg = SystemConfig::new(8, 4, 16, 120e3);
        let pilots = dft_pilots(&cfg, 2, PilotMode::EvenlySpaced).unwrap();
        let zbar = vec![c(0.0, 0.0); 2];
        let est = aod_search(&cfg, &zbar, &pilots, &EstimatorConfig::default()).unwrap();
        assert_eq!(est.gain, c(0.0, 0.0));
        // first atom that is not excluded by the norm floor
        let dict = AodDictionary::build(&cfg, &pilots);
        let first = (0..cfg.g_phi).find(|&g| dict.norms_sq[g] >= 1e-12).unwrap();
        assert_eq!(est.aod_index, first);
    }

    #[test]
    fn reconstruct_exact_parameters_reproduces_channel() {
        let cfg = SystemConfig::new(8, 8, 32, 120e3);
        let u_rx = 0.25f64;
        let u_tx = cfg.aod_node(17);
        let tau = 4.0 * cfg.delay_resolution();
        let gain = c(0.5, 0.8);
        let truth = MultipathSet::new(vec![Path {
            gain,
            aoa: u_rx.asin(),
            aod: u_tx.asin(),
            delay: tau,
        }])
        .unwrap();
        let h = synthesize_channel(&cfg, &truth).unwrap();
        let est = vec![PathEstimate {
            aod_index: 17,
            aod: u_tx.asin(),
            gain,
            u_hat: u_rx,
            tau_hat: tau,
        }];
        let h_hat = reconstruct(&cfg, &est).unwrap();
        let m = nmse(&h_hat, &h).unwrap();
        assert!(m.linear < 1e-10, "NMSE {}", m.linear);
    }

    #[test]
    fn doubled_gain_gives_zero_db() {
        let cfg = SystemConfig::new(8, 8, 16, 120e3);
        let u_rx = 0.25f64;
        let u_tx = 0.5f64;
        let tau = 2.0 * cfg.delay_resolution();
        let gain = c(0.6, -0.1);
        let truth = MultipathSet::new(vec![Path {
            gain,
            aoa: u_rx.asin(),
            aod: u_tx.asin(),
            delay: tau,
        }])
        .unwrap();
        let h = synthesize_channel(&cfg, &truth).unwrap();
        let est = vec![PathEstimate {
            aod_index: 0,
            aod: u_tx.asin(),
            gain: gain * 2.0,
            u_hat: u_rx,
            tau_hat: tau,
        }];
        let h_hat = reconstruct(&cfg, &est).unwrap();
        let m = nmse(&h_hat, &h).unwrap();
        assert!((m.linear - 1.0).abs() < 1e-10);
        assert!(m.db.abs() < 1e-6);
    }

    #[test]
    fn end_to_end_exact_recovery_on_grid() {
        // all parameters on their grids, unbiased map, noiseless, T = 4
        let cfg = SystemConfig::new(16, 8, 32, 120e3);
        let du = cfg.du();
        let dtau = cfg.delay_resolution();
        let truth = MultipathSet::new(vec![
            Path {
                gain: c(0.8, 0.1),
                aoa: (-1.0 + 10.0 * du).asin(),
                aod: cfg.aod_node(21).asin(),
                delay: 3.0 * dtau,
            },
            Path {
                gain: c(-0.4, 0.5),
                aoa: (-1.0 + 22.0 * du).asin(),
                aod: cfg.aod_node(41).asin(),
                delay: 7.0 * dtau,
            },
        ])
        .unwrap();
        let h = synthesize_channel(&cfg, &truth).unwrap();
        let pilots = dft_pilots(&cfg, 4, PilotMode::EvenlySpaced).unwrap();
        let y = simulate_rx(&cfg, &h, &pilots, f64::INFINITY, 0).unwrap();
        let result = charm_estimate(
            &cfg,
            &EstimatorConfig::default(),
            &truth,
            &y,
            &pilots,
            SupportOptions::default(),
        )
        .unwrap();
        let m = nmse(&result.h_hat, &h).unwrap();
        assert!(m.db < -100.0, "expected exact recovery, got {} dB", m.db);
        assert_eq!(result.diagnostics.support_size, 2);
    }
}
