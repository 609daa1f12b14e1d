//! Per-subcarrier OMP over the angle-only dictionary.
//!
//! Every subcarrier is treated as an independent narrowband problem over
//! the `{a_r(theta_i) a_t(phi_g)^H}` atoms: no delay axis and no coherence
//! across subcarriers, which is precisely why this baseline suffers noise
//! enhancement compared to the joint search.

use num_complex::Complex64;
use std::time::Instant;

use crate::channel::{steering_from_sin, ChannelTensor, PilotMatrix, RxObservations, SystemConfig};
use crate::error::{CharmError, Result};
use crate::estimator::{Diagnostics, EstimateResult};
use crate::linalg::{cdot, norm_sq, CMat};

use super::omp3d::Omp3dConfig;

/// Per-subcarrier angle-only OMP; shares the iteration cap and noise-floor
/// rule with the joint baseline (the floor is `T * n_rx * sigma^2` per
/// subcarrier).
pub fn kron_omp(
    cfg: &SystemConfig,
    y: &RxObservations,
    pilots: &PilotMatrix,
    ocfg: &Omp3dConfig,
) -> Result<EstimateResult> {
    cfg.validate()?;
    if y.n_rx != cfg.n_rx || y.n_subcarriers != cfg.n_subcarriers {
        return Err(CharmError::Dimension(
            "observations do not match the system configuration".into(),
        ));
    }
    if pilots.n_tx != cfg.n_tx || pilots.n_slots != y.n_slots {
        return Err(CharmError::Dimension("pilot shape mismatch".into()));
    }
    let start = Instant::now();
    let t_slots = y.n_slots;
    let n_rx = cfg.n_rx;

    let rx_atoms = CMat::from_fn(cfg.g_theta, n_rx, |i, rx| {
        steering_from_sin(n_rx, cfg.u_node(i))[rx]
    });
    let mut tx_resp = CMat::zeros(cfg.g_phi, t_slots);
    for g in 0..cfg.g_phi {
        let atom = steering_from_sin(cfg.n_tx, cfg.aod_node(g));
        for t in 0..t_slots {
            *tx_resp.at_mut(g, t) = cdot(&atom, pilots.col(t));
        }
    }
    let tx_norms_sq: Vec<f64> = (0..cfg.g_phi).map(|g| norm_sq(tx_resp.row(g))).collect();
    let tx_atoms: Vec<Vec<Complex64>> = (0..cfg.g_phi)
        .map(|g| steering_from_sin(cfg.n_tx, cfg.aod_node(g)))
        .collect();

    let noise_floor = ocfg.noise_floor_factor * (t_slots * n_rx) as f64 * y.noise_variance;
    let max_iter = ocfg.iterations(cfg);

    let mut h_hat = ChannelTensor::zeros(cfg);
    let mut total_atoms = 0usize;

    // per-subcarrier observation buffer [t][rx]
    let mut obs = vec![Complex64::new(0.0, 0.0); t_slots * n_rx];
    for k in 0..cfg.n_subcarriers {
        for t in 0..t_slots {
            obs[t * n_rx..(t + 1) * n_rx].copy_from_slice(y.at(t, k));
        }
        let initial = obs.clone();
        let initial_energy = norm_sq(&initial);
        let stop_energy = noise_floor + 1e-12 * initial_energy;

        let mut residual = initial.clone();
        let mut selected: Vec<(usize, usize)> = Vec::new();
        let mut rhs: Vec<Complex64> = Vec::new();
        let mut gains: Vec<Complex64> = Vec::new();

        for _ in 0..max_iter {
            if norm_sq(&residual) <= stop_energy {
                break;
            }
            // score every (i, g) atom: c[i][t] = a_ri^H r[t]
            let mut best: Option<(usize, usize, f64)> = None;
            let mut c_it = vec![Complex64::new(0.0, 0.0); cfg.g_theta * t_slots];
            for i in 0..cfg.g_theta {
                let a = rx_atoms.row(i);
                for t in 0..t_slots {
                    c_it[i * t_slots + t] = cdot(a, &residual[t * n_rx..(t + 1) * n_rx]);
                }
            }
            for i in 0..cfg.g_theta {
                let crow = &c_it[i * t_slots..(i + 1) * t_slots];
                for g in 0..cfg.g_phi {
                    let n2 = tx_norms_sq[g];
                    if n2 < 1e-12 {
                        continue;
                    }
                    let num = cdot(tx_resp.row(g), crow);
                    let score = num.norm_sqr() / n2;
                    let better = match best {
                        None => true,
                        Some((_, _, s)) => score > s,
                    };
                    if better {
                        best = Some((i, g, score));
                    }
                }
            }
            let Some((i, g, score)) = best else { break };
            if !(score > 0.0) {
                break;
            }
            selected.push((i, g));
            // <psi, y> with psi[t] = u_g[t] a_ri
            rhs.push({
                let a = rx_atoms.row(i);
                let mut acc = Complex64::new(0.0, 0.0);
                for t in 0..t_slots {
                    let spatial = cdot(a, &initial[t * n_rx..(t + 1) * n_rx]);
                    acc += tx_resp.at(g, t).conj() * spatial;
                }
                acc
            });

            let m = selected.len();
            let gram = CMat::from_fn(m, m, |a, b| {
                let (ia, ga) = selected[a];
                let (ib, gb) = selected[b];
                cdot(tx_resp.row(ga), tx_resp.row(gb)) * cdot(rx_atoms.row(ia), rx_atoms.row(ib))
            });
            match gram.inverse() {
                Some(ginv) => gains = ginv.mul_vec(&rhs),
                None => {
                    selected.pop();
                    rhs.pop();
                    break;
                }
            }
            residual.copy_from_slice(&initial);
            for (&(i, g), &gain) in selected.iter().zip(&gains) {
                let a = rx_atoms.row(i);
                for t in 0..t_slots {
                    let coef = gain * tx_resp.at(g, t);
                    for (o, &ar) in residual[t * n_rx..(t + 1) * n_rx].iter_mut().zip(a) {
                        *o -= coef * ar;
                    }
                }
            }
        }

        // assemble H[k] = sum_m gain_m a_r a_t^H
        for (&(i, g), &gain) in selected.iter().zip(&gains) {
            let a_r = rx_atoms.row(i);
            let a_t = &tx_atoms[g];
            for rx in 0..n_rx {
                let w = gain * a_r[rx];
                for tx in 0..cfg.n_tx {
                    *h_hat.at_mut(k, rx, tx) += w * a_t[tx].conj();
                }
            }
        }
        total_atoms += selected.len();
    }

    let online_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(EstimateResult {
        h_hat,
        paths: Vec::new(),
        online_ms,
        offline_ms: 0.0,
        diagnostics: Diagnostics {
            kappa: None,
            regularized: None,
            // mean atoms per subcarrier, rounded
            support_size: (total_atoms as f64 / cfg.n_subcarriers as f64).round() as usize,
            sigma_z_sq: Vec::new(),
        },
    })
}
