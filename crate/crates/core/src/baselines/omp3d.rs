//! Joint orthogonal matching pursuit over the 3-D (AoA, AoD, delay)
//! dictionary.
//!
//! Each iteration scores every atom by normalized correlation with the
//! residual, selects the argmax, refits all selected gains jointly by least
//! squares against the original observations, and rebuilds the residual.
//! Scoring is computed through the separable factorization (receive-side
//! correlations, delay transform, pilot-side contraction), which is what
//! makes the full dictionary tractable; it is algebraically identical to
//! scoring each atom naively and the tests pin that equivalence.

use num_complex::Complex64;
use std::f64::consts::PI;
use std::time::Instant;

use crate::channel::{
    steering_from_sin, ChannelTensor, PilotMatrix, RxObservations, SystemConfig,
};
use crate::error::{CharmError, Result};
use crate::estimator::{reconstruct, Diagnostics, EstimateResult, PathEstimate};
use crate::linalg::{cdot, norm_sq, CMat};

/// Greedy-loop knobs. The default iteration budget matches the support cap
/// `min(n_rx, 16)`; the stop rule compares residual energy against
/// `noise_floor_factor * T * K * n_rx * sigma^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Omp3dConfig {
    pub max_iterations: Option<usize>,
    pub noise_floor_factor: f64,
}

impl Default for Omp3dConfig {
    fn default() -> Self {
        Omp3dConfig {
            max_iterations: None,
            noise_floor_factor: 1.0,
        }
    }
}

impl Omp3dConfig {
    pub fn iterations(&self, cfg: &SystemConfig) -> usize {
        self.max_iterations.unwrap_or_else(|| cfg.support_cap()).max(1)
    }
}

/// Residual fraction of the initial energy below which the loop stops even
/// in noiseless runs.
const RELATIVE_ENERGY_STOP: f64 = 1e-12;

pub(crate) struct Omp3dWorkspace {
    pub g_theta: usize,
    pub g_phi: usize,
    pub g_tau: usize,
    pub n_rx: usize,
    pub t_slots: usize,
    pub k_sub: usize,
    /// Receive dictionary, `g_theta x n_rx`.
    pub rx_atoms: CMat,
    /// Pilot-side responses `a_t(phi_g)^H x_t`, `g_phi x T`.
    pub tx_resp: CMat,
    pub tx_norms_sq: Vec<f64>,
    /// Delay compensation table `e^{+j 2 pi k df tau_j}`, `g_tau x K`.
    pub comp: CMat,
}

impl Omp3dWorkspace {
    pub fn build(cfg: &SystemConfig, pilots: &PilotMatrix) -> Self {
        let rx_atoms = CMat::from_fn(cfg.g_theta, cfg.n_rx, |i, rx| {
            steering_from_sin(cfg.n_rx, cfg.u_node(i))[rx]
        });
        let mut tx_resp = CMat::zeros(cfg.g_phi, pilots.n_slots);
        for g in 0..cfg.g_phi {
            let atom = steering_from_sin(cfg.n_tx, cfg.aod_node(g));
            for t in 0..pilots.n_slots {
                *tx_resp.at_mut(g, t) = cdot(&atom, pilots.col(t));
            }
        }
        let tx_norms_sq: Vec<f64> = (0..cfg.g_phi).map(|g| norm_sq(tx_resp.row(g))).collect();
        let comp = CMat::from_fn(cfg.g_tau, cfg.n_subcarriers, |j, k| {
            let phase = 2.0 * PI * k as f64 * cfg.subcarrier_spacing * cfg.tau_node(j);
            Complex64::new(phase.cos(), phase.sin())
        });
        Omp3dWorkspace {
            g_theta: cfg.g_theta,
            g_phi: cfg.g_phi,
            g_tau: cfg.g_tau,
            n_rx: cfg.n_rx,
            t_slots: pilots.n_slots,
            k_sub: cfg.n_subcarriers,
            rx_atoms,
            tx_resp,
            tx_norms_sq,
            comp,
        }
    }

    /// Delay phasor of atom `(.., j)` at subcarrier `k` in the signal
    /// direction, `e^{-j 2 pi k df tau_j}` (conjugate of the scoring table).
    #[inline]
    fn delay_phasor(&self, j: usize, k: usize) -> Complex64 {
        self.comp.at(j, k).conj()
    }

    /// Argmax of `|<atom response, residual>|^2 / ||atom response||^2` over
    /// the whole dictionary via the separable factorization. When
    /// `all_scores` is given, every atom's score is appended in
    /// `(i, g, j)` lexicographic order (test hook).
    pub fn select_best(
        &self,
        residual: &[Complex64], // [t][k][rx]
        mut all_scores: Option<&mut Vec<f64>>,
        skip_excluded: f64,
    ) -> Option<(usize, usize, usize, f64)> {
        let (t_slots, k_sub, n_rx) = (self.t_slots, self.k_sub, self.n_rx);
        // receive-side correlations c[i][t][k]
        let mut c = vec![Complex64::new(0.0, 0.0); self.g_theta * t_slots * k_sub];
        for i in 0..self.g_theta {
            let atom = self.rx_atoms.row(i);
            for t in 0..t_slots {
                for k in 0..k_sub {
                    let y = &residual[(t * k_sub + k) * n_rx..(t * k_sub + k + 1) * n_rx];
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (a, &yy) in atom.iter().zip(y) {
                        acc += a.conj() * yy;
                    }
                    c[(i * t_slots + t) * k_sub + k] = acc;
                }
            }
        }

        let mut best: Option<(usize, usize, usize, f64)> = None;
        let mut d_jt = vec![Complex64::new(0.0, 0.0); self.g_tau * t_slots];
        for i in 0..self.g_theta {
            // delay transform d[j][t] = sum_k c[i][t][k] e^{+j 2 pi k df tau_j}
            for j in 0..self.g_tau {
                let comp_row = self.comp.row(j);
                for t in 0..t_slots {
                    let crow = &c[(i * t_slots + t) * k_sub..(i * t_slots + t + 1) * k_sub];
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (&cv, &ev) in crow.iter().zip(comp_row) {
                        acc += cv * ev;
                    }
                    d_jt[j * t_slots + t] = acc;
                }
            }
            for j in 0..self.g_tau {
                let dvec = &d_jt[j * t_slots..(j + 1) * t_slots];
                for g in 0..self.g_phi {
                    let n2 = self.tx_norms_sq[g];
                    if n2 < skip_excluded {
                        if let Some(v) = all_scores.as_deref_mut() {
                            v.push(0.0);
                        }
                        continue;
                    }
                    let urow = self.tx_resp.row(g);
                    let mut num = Complex64::new(0.0, 0.0);
                    for (u, &d) in urow.iter().zip(dvec) {
                        num += u.conj() * d;
                    }
                    let score = num.norm_sqr() / (self.k_sub as f64 * n2);
                    if let Some(v) = all_scores.as_deref_mut() {
                        v.push(score);
                    }
                    let better = match best {
                        None => true,
                        Some((_, _, _, s)) => score > s,
                    };
                    if better {
                        best = Some((i, g, j, score));
                    }
                }
            }
        }
        best
    }

    /// `<psi_a, psi_b>` from the separable factors.
    fn atom_inner(&self, a: (usize, usize, usize), b: (usize, usize, usize)) -> Complex64 {
        let pilot = cdot(self.tx_resp.row(a.1), self.tx_resp.row(b.1));
        let spatial = cdot(self.rx_atoms.row(a.0), self.rx_atoms.row(b.0));
        let mut delay = Complex64::new(0.0, 0.0);
        for k in 0..self.k_sub {
            delay += self.delay_phasor(a.2, k).conj() * self.delay_phasor(b.2, k);
        }
        pilot * spatial * delay
    }

    /// `<psi_m, y>` against arbitrary observations.
    fn atom_obs_inner(&self, atom: (usize, usize, usize), obs: &[Complex64]) -> Complex64 {
        let (i, g, j) = atom;
        let rx = self.rx_atoms.row(i);
        let mut total = Complex64::new(0.0, 0.0);
        for t in 0..self.t_slots {
            let u = self.tx_resp.at(g, t);
            let mut per_t = Complex64::new(0.0, 0.0);
            for k in 0..self.k_sub {
                let y = &obs[(t * self.k_sub + k) * self.n_rx..(t * self.k_sub + k + 1) * self.n_rx];
                let mut spatial = Complex64::new(0.0, 0.0);
                for (a, &yy) in rx.iter().zip(y) {
                    spatial += a.conj() * yy;
                }
                per_t += spatial * self.delay_phasor(j, k).conj();
            }
            total += u.conj() * per_t;
        }
        total
    }

    /// Subtract `gain * psi_atom` from the buffer.
    fn subtract_atom(&self, buf: &mut [Complex64], atom: (usize, usize, usize), gain: Complex64) {
        let (i, g, j) = atom;
        let rx = self.rx_atoms.row(i);
        for t in 0..self.t_slots {
            let u = self.tx_resp.at(g, t);
            for k in 0..self.k_sub {
                let coef = gain * u * self.delay_phasor(j, k);
                let y = &mut buf
                    [(t * self.k_sub + k) * self.n_rx..(t * self.k_sub + k + 1) * self.n_rx];
                for (o, &a) in y.iter_mut().zip(rx) {
                    *o -= coef * a;
                }
            }
        }
    }
}

/// Joint 3-D OMP baseline.
pub fn joint_omp_3d(
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
    let ws = Omp3dWorkspace::build(cfg, pilots);

    let initial: Vec<Complex64> = y.as_slice().to_vec();
    let initial_energy = norm_sq(&initial);
    let noise_floor = ocfg.noise_floor_factor
        * (y.n_slots * cfg.n_subcarriers * cfg.n_rx) as f64
        * y.noise_variance;
    let stop_energy = noise_floor + RELATIVE_ENERGY_STOP * initial_energy;

    let mut residual = initial.clone();
    let mut selected: Vec<(usize, usize, usize)> = Vec::new();
    let mut rhs: Vec<Complex64> = Vec::new();
    let mut gains: Vec<Complex64> = Vec::new();

    for _iter in 0..ocfg.iterations(cfg) {
        if norm_sq(&residual) <= stop_energy {
            break;
        }
        let Some((i, g, j, score)) = ws.select_best(&residual, None, 1e-12) else {
            break;
        };
        if !(score > 0.0) {
            break;
        }
        selected.push((i, g, j));
        rhs.push(ws.atom_obs_inner((i, g, j), &initial));

        // joint least-squares refit over all selected atoms
        let m = selected.len();
        let gram = CMat::from_fn(m, m, |a, b| ws.atom_inner(selected[a], selected[b]));
        match gram.inverse() {
            Some(ginv) => {
                gains = ginv.mul_vec(&rhs);
            }
            None => {
                // Gram went singular: drop the newest atom and stop.
                selected.pop();
                rhs.pop();
                break;
            }
        }

        residual.copy_from_slice(&initial);
        for (atom, &gain) in selected.iter().zip(&gains) {
            ws.subtract_atom(&mut residual, *atom, gain);
        }
    }

    let paths: Vec<PathEstimate> = selected
        .iter()
        .zip(&gains)
        .map(|(&(i, g, j), &gain)| PathEstimate {
            aod_index: g,
            aod: cfg.aod_node(g).asin(),
            gain,
            u_hat: cfg.u_node(i),
            tau_hat: cfg.tau_node(j),
        })
        .collect();

    let h_hat = if paths.is_empty() {
        ChannelTensor::zeros(cfg)
    } else {
        reconstruct(cfg, &paths)?
    };
    let online_ms = start.elapsed().as_secs_f64() * 1e3;

    Ok(EstimateResult {
        h_hat,
        paths,
        online_ms,
        offline_ms: 0.0,
        diagnostics: Diagnostics {
            kappa: None,
            regularized: None,
            support_size: selected.len(),
            sigma_z_sq: Vec::new(),
        },
    })
}
