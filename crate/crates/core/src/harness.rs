//! Synthetic scenario generation and the Monte-Carlo experiment engine.
//!
//! The generator stands in for a ray tracer: each receiver location gets a
//! random path list (uniform angles and delays, exponentially decaying
//! Rayleigh gains, unit total power) that serves both as ground truth and,
//! untouched or bias-injected, as the radio map handed to the offline
//! phase. Sweeps run a full factorial over condition x location x trial
//! with all methods consuming identical observations inside a trial, so
//! method comparisons are paired.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adps::SupportOptions;
use crate::baselines::{
    joint_omp_3d, kron_omp, lmmse_kron, CovarianceSource, KroneckerCovariance, LmmseConfig,
    Omp3dConfig,
};
use crate::channel::{
    dft_pilots, nmse, simulate_rx, synthesize_channel, ChannelTensor, MultipathSet, Path,
    PilotMatrix, PilotMode, SystemConfig,
};
use crate::error::{CharmError, Result};
use crate::estimator::{charm_estimate, EstimateResult, EstimatorConfig};

/// Order-sensitive seed derivation (splitmix64 absorption per part).
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    let mut state = master ^ 0x9E37_79B9_7F4A_7C15;
    let mut mix = |v: u64, s: u64| -> u64 {
        let mut z = s.wrapping_add(v).wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    };
    state = mix(0, state);
    for &p in parts {
        state = mix(p, state);
    }
    state
}

/// Scenario statistics: trial geometry plus the synthetic path model.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub n_locations: usize,
    pub trials_per_location: usize,
    pub path_count_min: usize,
    pub path_count_max: usize,
    /// Angles drawn uniformly in `[-angle_range, angle_range]` radians
    /// (both AoA and AoD).
    pub angle_range: f64,
    pub delay_min: f64,
    pub delay_max: f64,
    /// Exponential power-decay constant for gains,
    /// `|alpha| ~ CN * exp(-delay / (2 tau_rms))`.
    pub tau_rms: f64,
    /// Snap all angles and delays to the dictionary grids.
    pub on_grid: bool,
    pub master_seed: u64,
}

impl ScenarioConfig {
    /// Defaults tied to the system's delay resolution: 24 locations of
    /// 8 trials, 4-12 paths, +-60 degrees, delays in the first quarter of
    /// the ambiguity period.
    pub fn default_for(cfg: &SystemConfig) -> Self {
        let period = cfg.delay_period();
        ScenarioConfig {
            n_locations: 24,
            trials_per_location: 8,
            path_count_min: 4,
            path_count_max: 12,
            angle_range: std::f64::consts::PI / 3.0,
            delay_min: 0.0,
            delay_max: period / 4.0,
            tau_rms: period / 16.0,
            on_grid: false,
            master_seed: 1,
        }
    }

    pub fn validate(&self, cfg: &SystemConfig) -> Result<()> {
        if self.n_locations < 1 || self.trials_per_location < 1 {
            return Err(CharmError::Config(
                "need at least one location and one trial".into(),
            ));
        }
        if self.path_count_min < 1 || self.path_count_max < self.path_count_min {
            return Err(CharmError::Config("invalid path count range".into()));
        }
        if !(self.angle_range > 0.0) || self.angle_range >= std::f64::consts::PI / 2.0 {
            return Err(CharmError::Config(
                "angle_range must lie in (0, pi/2)".into(),
            ));
        }
        if !(self.delay_min >= 0.0)
            || self.delay_max <= self.delay_min
            || self.delay_max >= cfg.delay_period()
        {
            return Err(CharmError::Config("invalid delay range".into()));
        }
        if !(self.tau_rms > 0.0) {
            return Err(CharmError::Config("tau_rms must be positive".into()));
        }
        Ok(())
    }
}

/// Radio-map mismatch model: per-path Gaussian perturbation of sin(AoA).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MismatchConfig {
    pub bias_std: f64,
}

/// One receiver location: ground truth and its path-level radio map.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub location: usize,
    pub seed: u64,
    pub ground_truth: MultipathSet,
    pub radio_map: MultipathSet,
}

const LOCATION_TAG: u64 = 0x10C;
const COVARIANCE_TAG: u64 = 0xC0F;

/// Draw a path list from the generator statistics.
fn gen_paths(cfg: &SystemConfig, scfg: &ScenarioConfig, seed: u64) -> MultipathSet {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let count = rng.gen_range(scfg.path_count_min..=scfg.path_count_max);
    let mut paths = Vec::with_capacity(count);
    for _ in 0..count {
        let aoa = rng.gen_range(-scfg.angle_range..=scfg.angle_range);
        let aod = rng.gen_range(-scfg.angle_range..=scfg.angle_range);
        let delay = rng.gen_range(scfg.delay_min..=scfg.delay_max);
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        let decay = (-delay / (2.0 * scfg.tau_rms)).exp();
        paths.push(Path {
            gain: crate::Complex64::new(re, im) * decay * std::f64::consts::FRAC_1_SQRT_2,
            aoa,
            aod,
            delay,
        });
    }
    if scfg.on_grid {
        for p in paths.iter_mut() {
            let ui = ((p.aoa.sin() + 1.0) / cfg.du()).round() as i64;
            let ui = ui.clamp(0, cfg.g_theta as i64 - 1) as usize;
            p.aoa = cfg.u_node(ui).asin();
            let dv = 2.0 / cfg.g_phi as f64;
            let gi = ((p.aod.sin() + 1.0) / dv).round() as i64;
            let gi = gi.clamp(0, cfg.g_phi as i64 - 1) as usize;
            p.aod = cfg.aod_node(gi).asin();
            let j = (p.delay / cfg.delay_resolution()).round() as i64;
            let j = j.clamp(0, cfg.g_tau as i64 - 1) as usize;
            p.delay = cfg.tau_node(j);
        }
    }
    // unit total power
    let total: f64 = paths.iter().map(|p| p.gain.norm_sqr()).sum();
    if total > 0.0 {
        let scale = 1.0 / total.sqrt();
        for p in paths.iter_mut() {
            p.gain *= scale;
        }
    }
    MultipathSet::new(paths).expect("generator always yields 1..=max paths")
}

/// Deterministically generate one location. The radio map starts as an
/// exact copy of the ground truth; bias is injected separately per trial.
pub fn generate_location(cfg: &SystemConfig, scfg: &ScenarioConfig, location: usize) -> Scenario {
    let seed = derive_seed(scfg.master_seed, &[LOCATION_TAG, location as u64]);
    let ground_truth = gen_paths(cfg, scfg, seed);
    Scenario {
        location,
        seed,
        radio_map: ground_truth.clone(),
        ground_truth,
    }
}

/// Perturb each path's sin-AoA by `N(0, bias_std^2)`, clipped away from
/// the endfire singularities. AoD, delay and gain are untouched;
/// `bias_std = 0` returns the map unchanged.
pub fn inject_bias(map: &MultipathSet, mcfg: &MismatchConfig, seed: u64) -> MultipathSet {
    if mcfg.bias_std == 0.0 {
        return map.clone();
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut out = map.clone();
    for p in out.paths_mut() {
        let g: f64 = StandardNormal.sample(&mut rng);
        let u = (p.aoa.sin() + g * mcfg.bias_std).clamp(-1.0 + 1e-6, 1.0 - 1e-6);
        p.aoa = u.asin();
    }
    out
}

/// Estimation methods the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Charm,
    CharmTrust,
    CharmNoRefine,
    Omp3d,
    LmmseKron,
    KronOmp,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Charm,
        Method::CharmTrust,
        Method::CharmNoRefine,
        Method::Omp3d,
        Method::LmmseKron,
        Method::KronOmp,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Charm => "charm",
            Method::CharmTrust => "charm-trust",
            Method::CharmNoRefine => "charm-norefine",
            Method::Omp3d => "omp3d",
            Method::LmmseKron => "lmmse-kron",
            Method::KronOmp => "kron-omp",
        }
    }

    pub fn parse(name: &str) -> Result<Method> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.name() == name)
            .ok_or_else(|| {
                let valid: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
                CharmError::Config(format!(
                    "unknown method '{name}'; valid methods: {}",
                    valid.join(", ")
                ))
            })
    }

    fn support_options(&self) -> Option<SupportOptions> {
        match self {
            Method::Charm => Some(SupportOptions { refine: true, trust: false }),
            Method::CharmTrust => Some(SupportOptions { refine: true, trust: true }),
            Method::CharmNoRefine => Some(SupportOptions { refine: false, trust: false }),
            _ => None,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = CharmError;
    fn from_str(s: &str) -> Result<Method> {
        Method::parse(s)
    }
}

/// Which parameter a sweep walks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    T,
    Snr,
    Bias,
}

/// The fixed operating point; the swept axis overrides one field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub t: usize,
    pub snr_db: f64,
    pub bias_std: f64,
}

impl Default for OperatingPoint {
    fn default() -> Self {
        OperatingPoint {
            t: 4,
            snr_db: 20.0,
            bias_std: 0.0,
        }
    }
}

impl OperatingPoint {
    fn with_axis(&self, axis: SweepAxis, value: f64) -> OperatingPoint {
        let mut p = *self;
        match axis {
            SweepAxis::T => p.t = value as usize,
            SweepAxis::Snr => p.snr_db = value,
            SweepAxis::Bias => p.bias_std = value,
        }
        p
    }

    fn axis_value(&self, axis: SweepAxis) -> f64 {
        match axis {
            SweepAxis::T => self.t as f64,
            SweepAxis::Snr => self.snr_db,
            SweepAxis::Bias => self.bias_std,
        }
    }
}

/// A sweep: one axis, its values, and the fixed point for the others.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub base: OperatingPoint,
}

impl SweepSpec {
    pub fn validate(&self, cfg: &SystemConfig) -> Result<()> {
        if self.values.is_empty() {
            return Err(CharmError::Config("sweep needs at least one value".into()));
        }
        for &v in &self.values {
            match self.axis {
                SweepAxis::T => {
                    if v.fract() != 0.0 || v < 1.0 || v > cfg.n_tx as f64 {
                        return Err(CharmError::Config(format!(
                            "pilot length {v} must be an integer in [1, {}]",
                            cfg.n_tx
                        )));
                    }
                }
                SweepAxis::Bias => {
                    if v < 0.0 {
                        return Err(CharmError::Config("bias_std must be >= 0".into()));
                    }
                }
                SweepAxis::Snr => {
                    if !v.is_finite() {
                        return Err(CharmError::Config("snr values must be finite".into()));
                    }
                }
            }
        }
        if self.base.t < 1 || self.base.t > cfg.n_tx {
            return Err(CharmError::Config("base pilot length out of range".into()));
        }
        Ok(())
    }
}

/// One benchmark measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub method: String,
    #[serde(rename = "T")]
    pub t: usize,
    pub snr_db: f64,
    pub bias_std: f64,
    pub location: usize,
    pub trial: usize,
    pub seed: u64,
    pub nmse_db: f64,
    pub runtime_ms: f64,
    pub kappa: Option<f64>,
    pub regularized: Option<bool>,
    pub support_size: usize,
}

impl TrialRecord {
    /// Flagged records mark method failures without aborting the sweep.
    pub fn is_failed(&self) -> bool {
        self.nmse_db.is_nan()
    }

    /// Equality for determinism checks: everything except wall-clock times.
    pub fn same_outcome(&self, other: &TrialRecord) -> bool {
        self.method == other.method
            && self.t == other.t
            && self.snr_db == other.snr_db
            && self.bias_std == other.bias_std
            && self.location == other.location
            && self.trial == other.trial
            && self.seed == other.seed
            && self.nmse_db.to_bits() == other.nmse_db.to_bits()
            && self.kappa.map(f64::to_bits) == other.kappa.map(f64::to_bits)
            && self.regularized == other.regularized
            && self.support_size == other.support_size
    }
}

/// Everything a sweep needs besides the sweep spec itself.
#[derive(Debug, Clone)]
pub struct SweepContext {
    pub cfg: SystemConfig,
    pub ecfg: EstimatorConfig,
    pub ocfg: Omp3dConfig,
    pub lcfg: LmmseConfig,
    pub scfg: ScenarioConfig,
}

impl SweepContext {
    pub fn new(cfg: SystemConfig) -> Self {
        let scfg = ScenarioConfig::default_for(&cfg);
        SweepContext {
            cfg,
            ecfg: EstimatorConfig::default(),
            ocfg: Omp3dConfig::default(),
            lcfg: LmmseConfig::default(),
            scfg,
        }
    }
}

/// Sample spatial covariances over `lcfg.training_set_size` generator
/// draws, with exact subcarrier averaging in closed form.
pub fn sample_covariance(ctx: &SweepContext) -> KroneckerCovariance {
    let n = ctx.lcfg.training_set_size;
    let seed = derive_seed(ctx.scfg.master_seed, &[COVARIANCE_TAG]);
    let mut cov = KroneckerCovariance {
        r_tx: crate::linalg::CMat::zeros(ctx.cfg.n_tx, ctx.cfg.n_tx),
        r_rx: crate::linalg::CMat::zeros(ctx.cfg.n_rx, ctx.cfg.n_rx),
    };
    for d in 0..n {
        let paths = gen_paths(&ctx.cfg, &ctx.scfg, derive_seed(seed, &[d as u64]));
        KroneckerCovariance::accumulate_draw(&ctx.cfg, &paths, &mut cov.r_tx, &mut cov.r_rx);
    }
    let scale = crate::Complex64::new(1.0 / n as f64, 0.0);
    for v in cov.r_tx.data.iter_mut() {
        *v *= scale;
    }
    for v in cov.r_rx.data.iter_mut() {
        *v *= scale;
    }
    cov.symmetrize();
    cov
}

fn run_method(
    ctx: &SweepContext,
    method: Method,
    map: &MultipathSet,
    y: &crate::channel::RxObservations,
    pilots: &PilotMatrix,
    cov: Option<&KroneckerCovariance>,
) -> Result<EstimateResult> {
    match method {
        Method::Charm | Method::CharmTrust | Method::CharmNoRefine => charm_estimate(
            &ctx.cfg,
            &ctx.ecfg,
            map,
            y,
            pilots,
            method.support_options().unwrap(),
        ),
        Method::Omp3d => joint_omp_3d(&ctx.cfg, y, pilots, &ctx.ocfg),
        Method::KronOmp => kron_omp(&ctx.cfg, y, pilots, &ctx.ocfg),
        Method::LmmseKron => {
            let cov = cov.ok_or_else(|| {
                CharmError::Config("lmmse-kron requires a covariance estimate".into())
            })?;
            lmmse_kron(&ctx.cfg, y, pilots, cov)
        }
    }
}

/// Run the full factorial `condition x location x trial x method`.
///
/// Within a trial every method consumes the same observations, pilots and
/// (biased) radio map; trials parallelize over a worker pool and the
/// returned records are in deterministic `(condition, location, trial,
/// method)` order. Method errors become flagged records (NaN NMSE).
pub fn run_sweep(
    ctx: &SweepContext,
    sweep: &SweepSpec,
    methods: &[Method],
) -> Result<Vec<TrialRecord>> {
    ctx.cfg.validate()?;
    ctx.ecfg.validate()?;
    ctx.scfg.validate(&ctx.cfg)?;
    sweep.validate(&ctx.cfg)?;
    ctx.lcfg.validate(&ctx.cfg)?;
    if methods.is_empty() {
        return Err(CharmError::Config("need at least one method".into()));
    }

    // shared inputs
    let scenarios: Vec<Scenario> = (0..ctx.scfg.n_locations)
        .map(|loc| generate_location(&ctx.cfg, &ctx.scfg, loc))
        .collect();
    run_sweep_on(ctx, sweep, methods, &scenarios)
}

/// Same as [`run_sweep`] but on pre-generated scenarios (e.g. loaded from
/// disk).
pub fn run_sweep_on(
    ctx: &SweepContext,
    sweep: &SweepSpec,
    methods: &[Method],
    scenarios: &[Scenario],
) -> Result<Vec<TrialRecord>> {
    if scenarios.is_empty() {
        return Err(CharmError::Config("no scenarios to run".into()));
    }
    for s in scenarios {
        s.ground_truth.validate(&ctx.cfg)?;
        s.radio_map.validate(&ctx.cfg)?;
    }

    let channels: Vec<ChannelTensor> = scenarios
        .par_iter()
        .map(|s| synthesize_channel(&ctx.cfg, &s.ground_truth))
        .collect::<Result<_>>()?;

    let conditions: Vec<OperatingPoint> = sweep
        .values
        .iter()
        .map(|&v| sweep.base.with_axis(sweep.axis, v))
        .collect();
    let pilot_sets: Vec<PilotMatrix> = conditions
        .iter()
        .map(|c| dft_pilots(&ctx.cfg, c.t, PilotMode::EvenlySpaced))
        .collect::<Result<_>>()?;

    let needs_lmmse = methods.contains(&Method::LmmseKron);
    let sample_cov: Option<KroneckerCovariance> = (needs_lmmse
        && ctx.lcfg.covariance == CovarianceSource::Sample)
        .then(|| sample_covariance(ctx));
    let oracle_covs: Vec<KroneckerCovariance> =
        if needs_lmmse && ctx.lcfg.covariance == CovarianceSource::Oracle {
            scenarios
                .iter()
                .map(|s| KroneckerCovariance::oracle_from_paths(&ctx.cfg, &s.ground_truth))
                .collect()
        } else {
            Vec::new()
        };

    let trials_per_loc = ctx.scfg.trials_per_location;
    let tasks: Vec<(usize, usize, usize)> = (0..conditions.len())
        .flat_map(|ci| {
            (0..scenarios.len())
                .flat_map(move |loc| (0..trials_per_loc).map(move |trial| (ci, loc, trial)))
        })
        .collect();

    let records: Vec<Vec<TrialRecord>> = tasks
        .par_iter()
        .map(|&(ci, loc_idx, trial)| {
            let cond = conditions[ci];
            let scenario = &scenarios[loc_idx];
            let pilots = &pilot_sets[ci];
            let trial_seed = derive_seed(
                ctx.scfg.master_seed,
                &[3, ci as u64, scenario.location as u64, trial as u64],
            );
            let bias_seed = derive_seed(trial_seed, &[1]);
            let noise_seed = derive_seed(trial_seed, &[2]);
            let map = inject_bias(
                &scenario.radio_map,
                &MismatchConfig { bias_std: cond.bias_std },
                bias_seed,
            );
            let h_true = &channels[loc_idx];
            let y = match simulate_rx(&ctx.cfg, h_true, pilots, cond.snr_db, noise_seed) {
                Ok(y) => y,
                Err(_) => {
                    return methods
                        .iter()
                        .map(|m| failed_record(m, &cond, scenario.location, trial, trial_seed))
                        .collect();
                }
            };
            let cov_for_trial = match ctx.lcfg.covariance {
                CovarianceSource::Sample => sample_cov.as_ref(),
                CovarianceSource::Oracle => oracle_covs.get(loc_idx),
            };
            methods
                .iter()
                .map(|&method| {
                    match run_method(ctx, method, &map, &y, pilots, cov_for_trial) {
                        Ok(result) => {
                            let m = nmse(&result.h_hat, h_true);
                            match m {
                                Ok(m) => TrialRecord {
                                    method: method.name().to_string(),
                                    t: cond.t,
                                    snr_db: cond.snr_db,
                                    bias_std: cond.bias_std,
                                    location: scenario.location,
                                    trial,
                                    seed: trial_seed,
                                    nmse_db: m.db,
                                    runtime_ms: result.online_ms,
                                    kappa: result.diagnostics.kappa,
                                    regularized: result.diagnostics.regularized,
                                    support_size: result.diagnostics.support_size,
                                },
                                Err(_) => failed_record(
                                    &method,
                                    &cond,
                                    scenario.location,
                                    trial,
                                    trial_seed,
                                ),
                            }
                        }
                        Err(_) => {
                            failed_record(&method, &cond, scenario.location, trial, trial_seed)
                        }
                    }
                })
                .collect()
        })
        .collect();

    Ok(records.into_iter().flatten().collect())
}

fn failed_record(
    method: &Method,
    cond: &OperatingPoint,
    location: usize,
    trial: usize,
    seed: u64,
) -> TrialRecord {
    TrialRecord {
        method: method.name().to_string(),
        t: cond.t,
        snr_db: cond.snr_db,
        bias_std: cond.bias_std,
        location,
        trial,
        seed,
        nmse_db: f64::NAN,
        runtime_ms: f64::NAN,
        kappa: None,
        regularized: None,
        support_size: 0,
    }
}

/// Aggregated view of one (method, condition) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionSummary {
    pub method: String,
    pub value: f64,
    /// dB of the mean linear NMSE (energy-consistent aggregate).
    pub mean_nmse_db: f64,
    /// Mean of the per-trial dB values (emitted for transparency).
    pub mean_of_db: f64,
    pub median_runtime_ms: f64,
    pub n_trials: usize,
    pub n_failed: usize,
}

/// Group records by (method, swept value). The NMSE aggregate is computed
/// in the linear domain and then converted to dB; runtime uses the median.
pub fn aggregate(records: &[TrialRecord], axis: SweepAxis) -> Vec<ConditionSummary> {
    let mut order: Vec<(String, u64)> = Vec::new();
    let mut groups: std::collections::HashMap<(String, u64), Vec<&TrialRecord>> =
        std::collections::HashMap::new();
    for r in records {
        let value = match axis {
            SweepAxis::T => r.t as f64,
            SweepAxis::Snr => r.snr_db,
            SweepAxis::Bias => r.bias_std,
        };
        let key = (r.method.clone(), value.to_bits());
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let rs = &groups[&key];
            let ok: Vec<&&TrialRecord> = rs.iter().filter(|r| !r.is_failed()).collect();
            let n_failed = rs.len() - ok.len();
            let mean_lin = if ok.is_empty() {
                f64::NAN
            } else {
                ok.iter().map(|r| 10f64.powf(r.nmse_db / 10.0)).sum::<f64>() / ok.len() as f64
            };
            let mean_of_db = if ok.is_empty() {
                f64::NAN
            } else {
                ok.iter().map(|r| r.nmse_db).sum::<f64>() / ok.len() as f64
            };
            let mut times: Vec<f64> = ok.iter().map(|r| r.runtime_ms).collect();
            times.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let median = if times.is_empty() {
                f64::NAN
            } else if times.len() % 2 == 1 {
                times[times.len() / 2]
            } else {
                0.5 * (times[times.len() / 2 - 1] + times[times.len() / 2])
            };
            ConditionSummary {
                method: key.0,
                value: f64::from_bits(key.1),
                mean_nmse_db: 10.0 * mean_lin.max(crate::channel::NMSE_DB_FLOOR).log10(),
                mean_of_db,
                median_runtime_ms: median,
                n_trials: rs.len(),
                n_failed,
            }
        })
        .collect()
}
