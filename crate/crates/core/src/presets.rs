//! Named experiment presets.
//!
//! Each preset pins one sweep axis, its values, the fixed operating point
//! (T = 4, SNR = 20 dB, zero bias unless swept) and the method roster, so
//! a whole comparison figure regenerates from a single command.

use crate::error::{CharmError, Result};
use crate::harness::{Method, OperatingPoint, SweepAxis, SweepSpec};

pub const PRESET_NAMES: [&str; 5] = ["fig2", "fig3", "fig4", "fig5", "table1"];

/// Resolve a preset name into its sweep and method list.
pub fn preset(name: &str) -> Result<(SweepSpec, Vec<Method>)> {
    let base = OperatingPoint::default();
    match name {
        // accuracy vs pilot length, all methods
        "fig2" => Ok((
            SweepSpec {
                axis: SweepAxis::T,
                values: (2..=8).map(|t| t as f64).collect(),
                base,
            },
            Method::ALL.to_vec(),
        )),
        // accuracy vs SNR at T = 4, all methods
        "fig3" => Ok((
            SweepSpec {
                axis: SweepAxis::Snr,
                values: (0..=9).map(|i| -15.0 + 5.0 * i as f64).collect(),
                base,
            },
            Method::ALL.to_vec(),
        )),
        // robustness vs radio-map bias
        "fig4" => Ok((
            SweepSpec {
                axis: SweepAxis::Bias,
                values: (0..=10).map(|i| 0.02 * i as f64).collect(),
                base,
            },
            vec![
                Method::Charm,
                Method::CharmTrust,
                Method::CharmNoRefine,
                Method::Omp3d,
            ],
        )),
        // runtime vs pilot length
        "fig5" => Ok((
            SweepSpec {
                axis: SweepAxis::T,
                values: (2..=8).map(|t| t as f64).collect(),
                base,
            },
            vec![
                Method::Charm,
                Method::CharmNoRefine,
                Method::Omp3d,
                Method::KronOmp,
            ],
        )),
        // single-point comparison table
        "table1" => Ok((
            SweepSpec {
                axis: SweepAxis::T,
                values: vec![4.0],
                base,
            },
            Method::ALL.to_vec(),
        )),
        other => Err(CharmError::Config(format!(
            "unknown preset '{other}'; valid presets: {}",
            PRESET_NAMES.join(", ")
        ))),
    }
}
