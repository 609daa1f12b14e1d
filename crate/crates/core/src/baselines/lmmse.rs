//! Kronecker-structured LMMSE channel estimation.
//!
//! The channel covariance is approximated as `C_h = R_t^T (x) R_r` from
//! transmit/receive spatial covariances. Per subcarrier, with
//! `h = vec(H[k])` and the stacked model `y = (X^T (x) I) h + n`, the
//! classic LMMSE solution reduces through the Kronecker identities to one
//! `(T n_rx) x (T n_rx)` factorization shared by all subcarriers.

use num_complex::Complex64;
use std::time::Instant;

use crate::channel::{
    steering_from_sin, ChannelTensor, MultipathSet, PilotMatrix, RxObservations, SystemConfig,
};
use crate::error::{CharmError, Result};
use crate::estimator::{Diagnostics, EstimateResult};
use crate::linalg::CMat;

/// Where the covariances come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceSource {
    /// Sample spatial covariances over a training set drawn from the
    /// scenario generator.
    Sample,
    /// Closed-form covariances from a known path list.
    Oracle,
}

/// LMMSE configuration: training-set size for sample covariances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LmmseConfig {
    pub training_set_size: usize,
    pub covariance: CovarianceSource,
}

impl Default for LmmseConfig {
    fn default() -> Self {
        LmmseConfig {
            training_set_size: 500,
            covariance: CovarianceSource::Sample,
        }
    }
}

impl LmmseConfig {
    pub fn validate(&self, cfg: &SystemConfig) -> Result<()> {
        if self.training_set_size < cfg.n_tx + cfg.n_rx {
            return Err(CharmError::Config(format!(
                "training_set_size {} must be >= n_tx + n_rx = {}",
                self.training_set_size,
                cfg.n_tx + cfg.n_rx
            )));
        }
        Ok(())
    }
}

/// Transmit/receive spatial covariance pair.
#[derive(Debug, Clone)]
pub struct KroneckerCovariance {
    pub r_tx: CMat,
    pub r_rx: CMat,
}

impl KroneckerCovariance {
    /// Closed-form covariances for a known path list, treating path phases
    /// as independent: `R = sum_l |alpha_l|^2 a(angle_l) a(angle_l)^H`.
    pub fn oracle_from_paths(cfg: &SystemConfig, paths: &MultipathSet) -> Self {
        let mut r_tx = CMat::zeros(cfg.n_tx, cfg.n_tx);
        let mut r_rx = CMat::zeros(cfg.n_rx, cfg.n_rx);
        for p in paths.paths() {
            let w = p.gain.norm_sqr();
            let a_t = steering_from_sin(cfg.n_tx, p.aod.sin());
            let a_r = steering_from_sin(cfg.n_rx, p.aoa.sin());
            for r in 0..cfg.n_tx {
                for c in 0..cfg.n_tx {
                    *r_tx.at_mut(r, c) += a_t[r] * a_t[c].conj() * w;
                }
            }
            for r in 0..cfg.n_rx {
                for c in 0..cfg.n_rx {
                    *r_rx.at_mut(r, c) += a_r[r] * a_r[c].conj() * w;
                }
            }
        }
        KroneckerCovariance { r_tx, r_rx }
    }

    /// Accumulate one channel draw into running covariance sums using the
    /// closed-form subcarrier average
    /// `(1/K) sum_k H[k] H[k]^H = A_r M A_r^H` (and its transmit-side
    /// analog), where `M` combines gains, delay-difference phase sums and
    /// cross-array correlations.
    pub(crate) fn accumulate_draw(cfg: &SystemConfig, paths: &MultipathSet, r_tx: &mut CMat, r_rx: &mut CMat) {
        let l = paths.len();
        let a_t: Vec<Vec<Complex64>> = paths
            .paths()
            .iter()
            .map(|p| steering_from_sin(cfg.n_tx, p.aod.sin()))
            .collect();
        let a_r: Vec<Vec<Complex64>> = paths
            .paths()
            .iter()
            .map(|p| steering_from_sin(cfg.n_rx, p.aoa.sin()))
            .collect();

        // g(dt) = (1/K) sum_k e^{-j 2 pi k df dt}
        let g_fn = |dt: f64| -> Complex64 {
            let k = cfg.n_subcarriers as f64;
            let w = -2.0 * std::f64::consts::PI * cfg.subcarrier_spacing * dt;
            let r = Complex64::new(w.cos(), w.sin());
            if (r - Complex64::new(1.0, 0.0)).norm() < 1e-12 {
                return Complex64::new(1.0, 0.0);
            }
            let wk = w * k;
            let rk = Complex64::new(wk.cos(), wk.sin());
            (Complex64::new(1.0, 0.0) - rk) / ((Complex64::new(1.0, 0.0) - r) * k)
        };

        let ps = paths.paths();
        for a in 0..l {
            for b in 0..l {
                let g = g_fn(ps[a].delay - ps[b].delay);
                let ct = crate::linalg::cdot(&a_t[a], &a_t[b]); // a_t,a^H a_t,b
                let cr = crate::linalg::cdot(&a_r[a], &a_r[b]); // a_r,a^H a_r,b
                let m_rx = ps[a].gain * ps[b].gain.conj() * g * ct;
                let m_tx = ps[a].gain.conj() * ps[b].gain * g.conj() * cr;
                // R_r += m_rx * a_r,a a_r,b^H ; R_t += m_tx * a_t,a a_t,b^H
                for r in 0..cfg.n_rx {
                    let lhs = m_rx * a_r[a][r];
                    for c in 0..cfg.n_rx {
                        *r_rx.at_mut(r, c) += lhs * a_r[b][c].conj();
                    }
                }
                for r in 0..cfg.n_tx {
                    let lhs = m_tx * a_t[a][r];
                    for c in 0..cfg.n_tx {
                        *r_tx.at_mut(r, c) += lhs * a_t[b][c].conj();
                    }
                }
            }
        }
    }

    /// Hermitian symmetrization (cheap fp cleanup after accumulation).
    pub(crate) fn symmetrize(&mut self) {
        for m in [&mut self.r_tx, &mut self.r_rx] {
            let n = m.nrows;
            for r in 0..n {
                for c in r..n {
                    let avg = (m.at(r, c) + m.at(c, r).conj()) * 0.5;
                    *m.at_mut(r, c) = avg;
                    *m.at_mut(c, r) = avg.conj();
                }
            }
        }
    }

    /// PSD check: Hermitian with eigenvalues not meaningfully negative.
    pub fn validate_psd(&self) -> Result<()> {
        for m in [&self.r_tx, &self.r_rx] {
            let eig = m.hermitian_eigenvalues();
            let max = eig.last().copied().unwrap_or(0.0);
            let min = eig.first().copied().unwrap_or(0.0);
            if min < -1e-8 * max.abs().max(1e-300) {
                return Err(CharmError::NonPsdCovariance { min_eig: min });
            }
        }
        Ok(())
    }

    fn trace(m: &CMat) -> f64 {
        (0..m.nrows).map(|i| m.at(i, i).re).sum()
    }
}

/// LMMSE estimate with Kronecker-structured covariance.
pub fn lmmse_kron(
    cfg: &SystemConfig,
    y: &RxObservations,
    pilots: &PilotMatrix,
    cov: &KroneckerCovariance,
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
    if cov.r_tx.nrows != cfg.n_tx || cov.r_rx.nrows != cfg.n_rx {
        return Err(CharmError::Dimension("covariance shape mismatch".into()));
    }
    cov.validate_psd()?;

    let start = Instant::now();
    let t_slots = y.n_slots;
    let n_rx = cfg.n_rx;
    let n_tx = cfg.n_tx;
    let sigma_sq = y.noise_variance;

    // Normalize the transmit factor so that tr(C_h) = tr(R_r); the receive
    // factor carries the absolute power scale.
    let tr_t = KroneckerCovariance::trace(&cov.r_tx);
    if !(tr_t > 0.0) {
        return Err(CharmError::NonPsdCovariance { min_eig: tr_t });
    }

    // B = R_t^T conj(X) * (1/tr_t), size n_tx x T
    let b = CMat::from_fn(n_tx, t_slots, |n, t| {
        let mut acc = Complex64::new(0.0, 0.0);
        for m in 0..n_tx {
            // (R_t^T)[n][m] = R_t[m][n]
            acc += cov.r_tx.at(m, n) * pilots.col(t)[m].conj();
        }
        acc / tr_t
    });
    // M_small = X^T B, size T x T
    let m_small = CMat::from_fn(t_slots, t_slots, |t, s| {
        let mut acc = Complex64::new(0.0, 0.0);
        for n in 0..n_tx {
            acc += pilots.col(t)[n] * b.at(n, s);
        }
        acc
    });

    // S = M_small (x) R_r + sigma^2 I
    let dim = t_slots * n_rx;
    let mut s = CMat::zeros(dim, dim);
    for t in 0..t_slots {
        for ss in 0..t_slots {
            let m = m_small.at(t, ss);
            for r in 0..n_rx {
                for c in 0..n_rx {
                    *s.at_mut(t * n_rx + r, ss * n_rx + c) = m * cov.r_rx.at(r, c);
                }
            }
        }
    }
    for d in 0..dim {
        *s.at_mut(d, d) += Complex64::new(sigma_sq, 0.0);
    }
    let lu = s.lu().ok_or(CharmError::SingularProjection { kappa: f64::INFINITY })?;

    // B^T, used in the reconstruction H[k] = R_r V_k B^T
    let b_t = CMat::from_fn(t_slots, n_tx, |t, n| b.at(n, t));

    let mut h_hat = ChannelTensor::zeros(cfg);
    let mut rhs = vec![Complex64::new(0.0, 0.0); dim];
    for k in 0..cfg.n_subcarriers {
        for t in 0..t_slots {
            rhs[t * n_rx..(t + 1) * n_rx].copy_from_slice(y.at(t, k));
        }
        lu.solve_in_place(&mut rhs);
        // V: n_rx x T with V[r][t] = rhs[t n_rx + r]
        let v = CMat::from_fn(n_rx, t_slots, |r, t| rhs[t * n_rx + r]);
        let h_k = cov.r_rx.mul(&v).mul(&b_t);
        let stride = n_rx * n_tx;
        h_hat.as_mut_slice()[k * stride..(k + 1) * stride].copy_from_slice(&h_k.data);
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
            support_size: 0,
            sigma_z_sq: Vec::new(),
        },
    })
}
