//! Run configuration file.
//!
//! One TOML file covers the whole pipeline: system geometry, estimator and
//! baseline knobs, scenario statistics, the sweep, the method roster and
//! output paths. Every key has a default; unknown keys are rejected. See
//! `config.example.toml` in the repository root for a commented example.

use serde::{Deserialize, Serialize};

use crate::baselines::{CovarianceSource, LmmseConfig, Omp3dConfig};
use crate::error::{CharmError, Result};
use crate::estimator::EstimatorConfig;
use crate::harness::{
    Method, OperatingPoint, ScenarioConfig, SweepAxis, SweepContext, SweepSpec,
};
use crate::channel::SystemConfig;

fn d_n_tx() -> usize { 64 }
fn d_n_rx() -> usize { 32 }
fn d_k() -> usize { 128 }
fn d_df() -> f64 { 120e3 }
fn d_fc() -> f64 { 2.0e9 }

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemSection {
    pub n_tx: usize,
    pub n_rx: usize,
    pub n_subcarriers: usize,
    pub subcarrier_spacing: f64,
    pub carrier_freq: f64,
    /// Defaults to `4 * n_rx` when omitted.
    pub g_theta: Option<usize>,
    /// Defaults to `4 * n_tx` when omitted.
    pub g_phi: Option<usize>,
    /// Defaults to `n_subcarriers` when omitted.
    pub g_tau: Option<usize>,
}

impl Default for SystemSection {
    fn default() -> Self {
        SystemSection {
            n_tx: d_n_tx(),
            n_rx: d_n_rx(),
            n_subcarriers: d_k(),
            subcarrier_spacing: d_df(),
            carrier_freq: d_fc(),
            g_theta: None,
            g_phi: None,
            g_tau: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorSection {
    pub tikhonov_lambda: f64,
    pub condition_threshold: f64,
}

impl Default for EstimatorSection {
    fn default() -> Self {
        let e = EstimatorConfig::default();
        EstimatorSection {
            tikhonov_lambda: e.tikhonov_lambda,
            condition_threshold: e.condition_threshold,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OmpSection {
    /// Defaults to `min(n_rx, 16)` when omitted.
    pub max_iterations: Option<usize>,
    pub noise_floor_factor: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LmmseSection {
    pub training_set_size: usize,
    /// `sample` or `oracle`.
    pub covariance: String,
}

impl Default for LmmseSection {
    fn default() -> Self {
        LmmseSection {
            training_set_size: 500,
            covariance: "sample".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSection {
    pub n_locations: usize,
    pub trials_per_location: usize,
    pub path_count_range: [usize; 2],
    pub angle_range: f64,
    /// Defaults to `[0, 1/(4 df)]` seconds when omitted.
    pub delay_range: Option<[f64; 2]>,
    /// Defaults to `1/(16 df)` seconds when omitted.
    pub tau_rms: Option<f64>,
    pub on_grid: bool,
    pub master_seed: u64,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        ScenarioSection {
            n_locations: 24,
            trials_per_location: 8,
            path_count_range: [4, 12],
            angle_range: std::f64::consts::PI / 3.0,
            delay_range: None,
            tau_rms: None,
            on_grid: false,
            master_seed: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// `t`, `snr` or `bias`; a single-point run when omitted.
    pub axis: Option<SweepAxis>,
    pub values: Option<Vec<f64>>,
    pub t: usize,
    pub snr_db: f64,
    pub bias_std: f64,
    /// Method roster; all methods when empty.
    pub methods: Vec<String>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            axis: None,
            values: None,
            t: 4,
            snr_db: 20.0,
            bias_std: 0.0,
            methods: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub results: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            results: "results.csv".into(),
        }
    }
}

/// The whole config file.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub system: SystemSection,
    pub estimator: EstimatorSection,
    pub omp: OmpSection,
    pub lmmse: LmmseSection,
    pub scenario: ScenarioSection,
    pub sweep: SweepSection,
    pub output: OutputSection,
}

/// A config resolved into the core types.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub ctx: SweepContext,
    pub sweep: SweepSpec,
    pub methods: Vec<Method>,
    pub results_path: String,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig> {
        toml::from_str(text).map_err(|e| CharmError::Config(format!("config: {e}")))
    }

    pub fn load(path: &std::path::Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        RunConfig::from_toml(&text)
    }

    pub fn resolve(&self) -> Result<ResolvedConfig> {
        let s = &self.system;
        let mut cfg = SystemConfig::new(s.n_tx, s.n_rx, s.n_subcarriers, s.subcarrier_spacing);
        cfg.carrier_freq = s.carrier_freq;
        if let Some(g) = s.g_theta {
            cfg.g_theta = g;
        }
        if let Some(g) = s.g_phi {
            cfg.g_phi = g;
        }
        if let Some(g) = s.g_tau {
            cfg.g_tau = g;
        }
        cfg.validate()?;

        let mut scfg = ScenarioConfig::default_for(&cfg);
        scfg.n_locations = self.scenario.n_locations;
        scfg.trials_per_location = self.scenario.trials_per_location;
        scfg.path_count_min = self.scenario.path_count_range[0];
        scfg.path_count_max = self.scenario.path_count_range[1];
        scfg.angle_range = self.scenario.angle_range;
        if let Some([lo, hi]) = self.scenario.delay_range {
            scfg.delay_min = lo;
            scfg.delay_max = hi;
        }
        if let Some(rms) = self.scenario.tau_rms {
            scfg.tau_rms = rms;
        }
        scfg.on_grid = self.scenario.on_grid;
        scfg.master_seed = self.scenario.master_seed;
        scfg.validate(&cfg)?;

        let covariance = match self.lmmse.covariance.as_str() {
            "sample" => CovarianceSource::Sample,
            "oracle" => CovarianceSource::Oracle,
            other => {
                return Err(CharmError::Config(format!(
                    "lmmse.covariance must be 'sample' or 'oracle', got '{other}'"
                )))
            }
        };

        let ctx = SweepContext {
            cfg,
            ecfg: EstimatorConfig {
                tikhonov_lambda: self.estimator.tikhonov_lambda,
                condition_threshold: self.estimator.condition_threshold,
            },
            ocfg: Omp3dConfig {
                max_iterations: self.omp.max_iterations,
                noise_floor_factor: if self.omp.noise_floor_factor > 0.0 {
                    self.omp.noise_floor_factor
                } else {
                    1.0
                },
            },
            lcfg: LmmseConfig {
                training_set_size: self.lmmse.training_set_size,
                covariance,
            },
            scfg,
        };
        ctx.ecfg.validate()?;

        let base = OperatingPoint {
            t: self.sweep.t,
            snr_db: self.sweep.snr_db,
            bias_std: self.sweep.bias_std,
        };
        let sweep = match (&self.sweep.axis, &self.sweep.values) {
            (Some(axis), Some(values)) => SweepSpec {
                axis: *axis,
                values: values.clone(),
                base,
            },
            (None, None) => SweepSpec {
                axis: SweepAxis::T,
                values: vec![base.t as f64],
                base,
            },
            _ => {
                return Err(CharmError::Config(
                    "sweep.axis and sweep.values must be given together".into(),
                ))
            }
        };
        sweep.validate(&ctx.cfg)?;

        let methods: Vec<Method> = if self.sweep.methods.is_empty() {
            Method::ALL.to_vec()
        } else {
            self.sweep
                .methods
                .iter()
                .map(|m| Method::parse(m))
                .collect::<Result<_>>()?
        };

        Ok(ResolvedConfig {
            ctx,
            sweep,
            methods,
            results_path: self.output.results.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_resolves_to_defaults() {
        let rc = RunConfig::from_toml("").unwrap();
        let r = rc.resolve().unwrap();
        assert_eq!(r.ctx.cfg.n_tx, 64);
        assert_eq!(r.ctx.cfg.g_theta, 128);
        assert_eq!(r.ctx.scfg.n_locations, 24);
        assert_eq!(r.methods.len(), Method::ALL.len());
        assert_eq!(r.sweep.values, vec![4.0]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::from_toml("[system]\nn_tx = 8\nbogus = 1\n").unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
        let err = RunConfig::from_toml("[nonsense]\nx = 1\n").unwrap_err();
        assert!(err.to_string().contains("nonsense"), "{err}");
    }

    #[test]
    fn sweep_section_round_trip() {
        let text = r#"
[system]
n_tx = 8
n_rx = 4
n_subcarriers = 16

[sweep]
axis = "t"
values = [2.0, 3.0]
snr_db = 10.0
methods = ["charm", "omp3d"]

[scenario]
n_locations = 2
trials_per_location = 2
path_count_range = [2, 4]
"#;
        let rc = RunConfig::from_toml(text).unwrap();
        let r = rc.resolve().unwrap();
        assert_eq!(r.ctx.cfg.g_phi, 32);
        assert_eq!(r.sweep.values, vec![2.0, 3.0]);
        assert_eq!(r.sweep.base.snr_db, 10.0);
        assert_eq!(r.methods, vec![Method::Charm, Method::Omp3d]);
    }

    #[test]
    fn bad_method_name_lists_valid() {
        let rc = RunConfig::from_toml("[sweep]\nmethods = [\"carm\"]\n").unwrap();
        let err = rc.resolve().unwrap_err().to_string();
        assert!(err.contains("valid methods"), "{err}");
    }

    #[test]
    fn axis_without_values_is_rejected() {
        let rc = RunConfig::from_toml("[sweep]\naxis = \"snr\"\n").unwrap();
        assert!(rc.resolve().is_err());
    }
}
