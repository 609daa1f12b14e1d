//! On-disk formats.
//!
//! Scenario and path-support files are TOML with an explicit `schema`
//! field; benchmark results are a flat CSV with the fixed header
//! `method,T,snr_db,bias_std,location,trial,seed,nmse_db,runtime_ms,kappa,regularized,support_size`.
//! Loading inverts writing exactly; a corrupted CSV row fails with its
//! line number.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::Path as FsPath;

use crate::adps::{PathSupport, PeakRecord};
use crate::channel::{MultipathSet, Path};
use crate::error::{CharmError, Result};
use crate::harness::{Scenario, TrialRecord};

pub const SCENARIO_SCHEMA: &str = "charm-scenario/1";
pub const MANIFEST_SCHEMA: &str = "charm-scenario-manifest/1";
pub const SUPPORT_SCHEMA: &str = "charm-support/1";

#[derive(Debug, Serialize, Deserialize)]
struct PathRow {
    gain_re: f64,
    gain_im: f64,
    aoa_rad: f64,
    aod_rad: f64,
    delay_s: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ScenarioFile {
    schema: String,
    location: usize,
    seed: u64,
    /// Ground-truth paths; the radio map is the same list (bias, when any,
    /// is injected at run time).
    paths: Vec<PathRow>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ScenarioManifest {
    pub schema: String,
    pub master_seed: u64,
    pub n_locations: usize,
    pub files: Vec<String>,
}

fn toml_parse_error(path: &FsPath, err: impl std::fmt::Display) -> CharmError {
    CharmError::Parse {
        line: 0,
        msg: format!("{}: {err}", path.display()),
    }
}

/// Write one scenario per file plus a manifest; returns the file names.
pub fn write_scenarios(dir: &FsPath, master_seed: u64, scenarios: &[Scenario]) -> Result<Vec<String>> {
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::with_capacity(scenarios.len());
    for s in scenarios {
        let rows: Vec<PathRow> = s
            .ground_truth
            .paths()
            .iter()
            .map(|p| PathRow {
                gain_re: p.gain.re,
                gain_im: p.gain.im,
                aoa_rad: p.aoa,
                aod_rad: p.aod,
                delay_s: p.delay,
            })
            .collect();
        let file = ScenarioFile {
            schema: SCENARIO_SCHEMA.into(),
            location: s.location,
            seed: s.seed,
            paths: rows,
        };
        let name = format!("loc_{:03}.toml", s.location);
        let body = toml::to_string_pretty(&file)
            .map_err(|e| CharmError::Config(format!("scenario serialization: {e}")))?;
        std::fs::write(dir.join(&name), body)?;
        files.push(name);
    }
    let manifest = ScenarioManifest {
        schema: MANIFEST_SCHEMA.into(),
        master_seed,
        n_locations: scenarios.len(),
        files: files.clone(),
    };
    let body = toml::to_string_pretty(&manifest)
        .map_err(|e| CharmError::Config(format!("manifest serialization: {e}")))?;
    std::fs::write(dir.join("manifest.toml"), body)?;
    Ok(files)
}

/// Load a scenario directory written by [`write_scenarios`].
pub fn load_scenarios(dir: &FsPath) -> Result<Vec<Scenario>> {
    let manifest_path = dir.join("manifest.toml");
    let body = std::fs::read_to_string(&manifest_path)?;
    let manifest: ScenarioManifest =
        toml::from_str(&body).map_err(|e| toml_parse_error(&manifest_path, e))?;
    if manifest.schema != MANIFEST_SCHEMA {
        return Err(CharmError::Parse {
            line: 0,
            msg: format!(
                "unsupported manifest schema '{}', expected '{MANIFEST_SCHEMA}'",
                manifest.schema
            ),
        });
    }
    let mut scenarios = Vec::with_capacity(manifest.files.len());
    for name in &manifest.files {
        let path = dir.join(name);
        let body = std::fs::read_to_string(&path)?;
        let file: ScenarioFile = toml::from_str(&body).map_err(|e| toml_parse_error(&path, e))?;
        if file.schema != SCENARIO_SCHEMA {
            return Err(CharmError::Parse {
                line: 0,
                msg: format!(
                    "{}: unsupported scenario schema '{}', expected '{SCENARIO_SCHEMA}'",
                    path.display(),
                    file.schema
                ),
            });
        }
        let paths: Vec<Path> = file
            .paths
            .iter()
            .map(|r| Path {
                gain: Complex64::new(r.gain_re, r.gain_im),
                aoa: r.aoa_rad,
                aod: r.aod_rad,
                delay: r.delay_s,
            })
            .collect();
        let ground_truth = MultipathSet::new(paths)?;
        scenarios.push(Scenario {
            location: file.location,
            seed: file.seed,
            radio_map: ground_truth.clone(),
            ground_truth,
        });
    }
    Ok(scenarios)
}

#[derive(Debug, Serialize, Deserialize)]
struct SupportRow {
    u_hat: f64,
    tau_hat_s: f64,
    power: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct SupportFile {
    schema: String,
    refined: bool,
    trust_clipped: bool,
    records: Vec<SupportRow>,
}

/// Persist the online contract of a support: final sin-AoA, delay and peak
/// power per path (what the online phase needs for projection weights).
pub fn write_support(path: &FsPath, support: &PathSupport) -> Result<()> {
    let file = SupportFile {
        schema: SUPPORT_SCHEMA.into(),
        refined: support.refined,
        trust_clipped: support.trust_clipped,
        records: support
            .records()
            .iter()
            .map(|r| SupportRow {
                u_hat: r.u_hat,
                tau_hat_s: r.tau_hat,
                power: r.power,
            })
            .collect(),
    };
    let body = toml::to_string_pretty(&file)
        .map_err(|e| CharmError::Config(format!("support serialization: {e}")))?;
    std::fs::write(path, body)?;
    Ok(())
}

/// Load a support file. Grid fields are set to the stored final values;
/// the file carries only what the online phase consumes.
pub fn load_support(path: &FsPath) -> Result<PathSupport> {
    let body = std::fs::read_to_string(path)?;
    let file: SupportFile = toml::from_str(&body).map_err(|e| toml_parse_error(path, e))?;
    if file.schema != SUPPORT_SCHEMA {
        return Err(CharmError::Parse {
            line: 0,
            msg: format!(
                "unsupported support schema '{}', expected '{SUPPORT_SCHEMA}'",
                file.schema
            ),
        });
    }
    let records: Vec<PeakRecord> = file
        .records
        .iter()
        .map(|r| PeakRecord {
            i: 0,
            j: 0,
            theta_grid: r.u_hat.asin(),
            u_grid: r.u_hat,
            tau_grid: r.tau_hat_s,
            u_ref: r.u_hat,
            tau_ref: r.tau_hat_s,
            u_hat: r.u_hat,
            tau_hat: r.tau_hat_s,
            power: r.power,
        })
        .collect();
    PathSupport::from_records(records, file.refined, file.trust_clipped)
}

fn csv_err(e: csv::Error) -> CharmError {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CharmError::Io(io),
        other => CharmError::Parse {
            line,
            msg: format!("{other:?}"),
        },
    }
}

pub const RESULTS_HEADER: [&str; 12] = [
    "method",
    "T",
    "snr_db",
    "bias_std",
    "location",
    "trial",
    "seed",
    "nmse_db",
    "runtime_ms",
    "kappa",
    "regularized",
    "support_size",
];

/// Write trial records as CSV with the fixed header (header-only when the
/// record list is empty).
pub fn write_records(path: &FsPath, records: &[TrialRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    if records.is_empty() {
        w.write_record(RESULTS_HEADER).map_err(csv_err)?;
    }
    for r in records {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Read trial records back; a malformed row reports its line number.
pub fn load_records(path: &FsPath) -> Result<Vec<TrialRecord>> {
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err)?;
    let mut out = Vec::new();
    for result in rdr.deserialize::<TrialRecord>() {
        match result {
            Ok(r) => out.push(r),
            Err(e) => {
                let line = e
                    .position()
                    .map(|p| p.line() as usize)
                    .unwrap_or(0);
                return Err(CharmError::Parse {
                    line,
                    msg: format!("malformed results row: {e}"),
                });
            }
        }
    }
    Ok(out)
}
