//! Physical-layer primitives for the MIMO-OFDM simulator.
//!
//! Everything downstream is built on the geometric multipath model: a
//! frequency-domain channel `H[k]` that is a sum of rank-one terms, one per
//! propagation path, each parameterized by a complex gain, an angle of
//! arrival, an angle of departure and a delay. This module owns the system
//! configuration, steering vectors, channel and observation synthesis, the
//! NMSE metric, and DFT pilot construction.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;

use crate::error::{CharmError, Result};

/// Largest multipath set accepted by the simulator.
pub const MAX_PATHS: usize = 64;

/// Linear NMSE floor applied before dB conversion so that perfect-recovery
/// cases stay finite and plottable.
pub const NMSE_DB_FLOOR: f64 = 1e-15;

/// Array, subcarrier-grid and dictionary geometry. Single source of the
/// physical constants used everywhere else.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Transmit antennas (ULA, half-wavelength spacing).
    pub n_tx: usize,
    /// Receive antennas (ULA, half-wavelength spacing).
    pub n_rx: usize,
    /// OFDM subcarriers K.
    pub n_subcarriers: usize,
    /// Subcarrier spacing in Hz.
    pub subcarrier_spacing: f64,
    /// Carrier frequency in Hz (informational; the ULA is wavelength-relative).
    pub carrier_freq: f64,
    /// AoA dictionary size, uniform in sin(theta) over [-1, 1).
    pub g_theta: usize,
    /// AoD dictionary size, uniform in sin(phi) over [-1, 1).
    pub g_phi: usize,
    /// Delay dictionary size, bins of width 1/(K df).
    pub g_tau: usize,
}

impl Default for SystemConfig {
    /// The reference system: 64x32 arrays, 128 subcarriers at 120 kHz,
    /// 4x oversampled angle dictionaries.
    fn default() -> Self {
        SystemConfig::new(64, 32, 128, 120e3)
    }
}

impl SystemConfig {
    /// Build a config with the conventional dictionary sizes
    /// `g_theta = 4 n_rx`, `g_phi = 4 n_tx`, `g_tau = K`.
    pub fn new(n_tx: usize, n_rx: usize, n_subcarriers: usize, subcarrier_spacing: f64) -> Self {
        SystemConfig {
            n_tx,
            n_rx,
            n_subcarriers,
            subcarrier_spacing,
            carrier_freq: 2.0e9,
            g_theta: 4 * n_rx,
            g_phi: 4 * n_tx,
            g_tau: n_subcarriers,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_tx < 1 || self.n_rx < 1 || self.n_subcarriers < 1 {
            return Err(CharmError::Config(
                "antenna and subcarrier counts must be >= 1".into(),
            ));
        }
        if self.g_theta < 2 || self.g_phi < 2 || self.g_tau < 2 {
            return Err(CharmError::Config("dictionary sizes must be >= 2".into()));
        }
        if !(self.subcarrier_spacing > 0.0) || !(self.carrier_freq > 0.0) {
            return Err(CharmError::Config(
                "subcarrier spacing and carrier frequency must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Delay-bin width `1/(K df)`; also the delay dictionary resolution.
    pub fn delay_resolution(&self) -> f64 {
        1.0 / (self.n_subcarriers as f64 * self.subcarrier_spacing)
    }

    /// Total bandwidth `K df`.
    pub fn bandwidth(&self) -> f64 {
        self.n_subcarriers as f64 * self.subcarrier_spacing
    }

    /// One OFDM delay ambiguity period `1/df`.
    pub fn delay_period(&self) -> f64 {
        1.0 / self.subcarrier_spacing
    }

    /// AoA grid spacing in the sin domain.
    pub fn du(&self) -> f64 {
        2.0 / self.g_theta as f64
    }

    /// AoA grid node `u_i = -1 + 2 i / g_theta`.
    pub fn u_node(&self, i: usize) -> f64 {
        -1.0 + 2.0 * i as f64 / self.g_theta as f64
    }

    /// AoD grid node in the sin domain, same convention as the AoA grid.
    pub fn aod_node(&self, g: usize) -> f64 {
        -1.0 + 2.0 * g as f64 / self.g_phi as f64
    }

    /// Delay grid node `tau_j = j/(K df)`.
    pub fn tau_node(&self, j: usize) -> f64 {
        j as f64 * self.delay_resolution()
    }

    /// Peak budget for support extraction: `min(n_rx, 16)`.
    pub fn support_cap(&self) -> usize {
        self.n_rx.min(16)
    }
}

/// One propagation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Path {
    /// Complex gain.
    pub gain: Complex64,
    /// Angle of arrival, radians in (-pi/2, pi/2).
    pub aoa: f64,
    /// Angle of departure, radians in (-pi/2, pi/2).
    pub aod: f64,
    /// Propagation delay in seconds, within one ambiguity period.
    pub delay: f64,
}

/// An ordered list of paths. Serves both as ground truth and as the
/// path-level radio map handed to the offline phase.
#[derive(Debug, Clone, PartialEq)]
pub struct MultipathSet {
    paths: Vec<Path>,
}

impl MultipathSet {
    pub fn new(paths: Vec<Path>) -> Result<Self> {
        if paths.is_empty() {
            return Err(CharmError::Config("multipath set must be non-empty".into()));
        }
        if paths.len() > MAX_PATHS {
            return Err(CharmError::Config(format!(
                "multipath set of {} paths exceeds the cap of {MAX_PATHS}",
                paths.len()
            )));
        }
        Ok(MultipathSet { paths })
    }

    /// Validate angles and delays against a system configuration.
    pub fn validate(&self, cfg: &SystemConfig) -> Result<()> {
        let period = cfg.delay_period();
        for (idx, p) in self.paths.iter().enumerate() {
            if !p.gain.re.is_finite() || !p.gain.im.is_finite() {
                return Err(CharmError::Config(format!("path {idx}: non-finite gain")));
            }
            if !(p.aoa.abs() < PI / 2.0) || !(p.aod.abs() < PI / 2.0) {
                return Err(CharmError::Config(format!(
                    "path {idx}: angles must lie in (-pi/2, pi/2)"
                )));
            }
            if !(p.delay >= 0.0) || p.delay >= period {
                return Err(CharmError::Config(format!(
                    "path {idx}: delay must lie in [0, 1/df)"
                )));
            }
        }
        Ok(())
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Total path power `sum |alpha_l|^2`.
    pub fn total_power(&self) -> f64 {
        self.paths.iter().map(|p| p.gain.norm_sqr()).sum()
    }

    pub(crate) fn paths_mut(&mut self) -> &mut [Path] {
        &mut self.paths
    }
}

/// Frequency-domain channel, one `n_rx x n_tx` matrix per subcarrier,
/// stored contiguously as `[k][rx][tx]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTensor {
    pub n_rx: usize,
    pub n_tx: usize,
    pub n_subcarriers: usize,
    data: Vec<Complex64>,
}

impl ChannelTensor {
    pub fn zeros(cfg: &SystemConfig) -> Self {
        ChannelTensor {
            n_rx: cfg.n_rx,
            n_tx: cfg.n_tx,
            n_subcarriers: cfg.n_subcarriers,
            data: vec![Complex64::new(0.0, 0.0); cfg.n_rx * cfg.n_tx * cfg.n_subcarriers],
        }
    }

    #[inline]
    pub fn at(&self, k: usize, rx: usize, tx: usize) -> Complex64 {
        self.data[(k * self.n_rx + rx) * self.n_tx + tx]
    }

    #[inline]
    pub fn at_mut(&mut self, k: usize, rx: usize, tx: usize) -> &mut Complex64 {
        &mut self.data[(k * self.n_rx + rx) * self.n_tx + tx]
    }

    /// The `n_rx x n_tx` slice for subcarrier `k`, row-major over rx.
    #[inline]
    pub fn subcarrier(&self, k: usize) -> &[Complex64] {
        let stride = self.n_rx * self.n_tx;
        &self.data[k * stride..(k + 1) * stride]
    }

    pub fn same_shape(&self, other: &ChannelTensor) -> bool {
        self.n_rx == other.n_rx
            && self.n_tx == other.n_tx
            && self.n_subcarriers == other.n_subcarriers
    }

    /// Total energy `sum_k ||H[k]||_F^2`.
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }
}

/// Unit-norm pilot beamforming vectors, one column per pilot slot,
/// stored column-contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotMatrix {
    pub n_tx: usize,
    pub n_slots: usize,
    data: Vec<Complex64>,
}

impl PilotMatrix {
    pub fn new(n_tx: usize, columns: Vec<Vec<Complex64>>) -> Result<Self> {
        if columns.is_empty() {
            return Err(CharmError::Config("pilot matrix needs at least one column".into()));
        }
        let mut data = Vec::with_capacity(n_tx * columns.len());
        for (t, col) in columns.iter().enumerate() {
            if col.len() != n_tx {
                return Err(CharmError::Dimension(format!(
                    "pilot column {t} has length {} but n_tx = {n_tx}",
                    col.len()
                )));
            }
            let norm = crate::linalg::norm_sq(col);
            if (norm - 1.0).abs() > 1e-6 {
                return Err(CharmError::Config(format!(
                    "pilot column {t} has squared norm {norm}, expected 1"
                )));
            }
            data.extend_from_slice(col);
        }
        Ok(PilotMatrix {
            n_tx,
            n_slots: columns.len(),
            data,
        })
    }

    #[inline]
    pub fn col(&self, t: usize) -> &[Complex64] {
        &self.data[t * self.n_tx..(t + 1) * self.n_tx]
    }
}

/// How pilot columns are drawn from the DFT matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PilotMode {
    /// Column indices `floor(i n_tx / T)`, deterministic.
    EvenlySpaced,
    /// T distinct column indices drawn from a seeded RNG.
    SeededRandom(u64),
}

/// Received pilot observations `y[t][k]` (each an n_rx vector) together with
/// the per-element complex noise variance used to generate them.
#[derive(Debug, Clone, PartialEq)]
pub struct RxObservations {
    pub n_slots: usize,
    pub n_subcarriers: usize,
    pub n_rx: usize,
    pub noise_variance: f64,
    data: Vec<Complex64>,
}

impl RxObservations {
    /// Assemble observations from a raw `[t][k][rx]` sample buffer.
    pub fn from_parts(
        n_slots: usize,
        n_subcarriers: usize,
        n_rx: usize,
        noise_variance: f64,
        data: Vec<Complex64>,
    ) -> Result<Self> {
        if data.len() != n_slots * n_subcarriers * n_rx {
            return Err(CharmError::Dimension(format!(
                "observation buffer has {} samples, expected {}",
                data.len(),
                n_slots * n_subcarriers * n_rx
            )));
        }
        if !(noise_variance >= 0.0) {
            return Err(CharmError::Config("noise variance must be >= 0".into()));
        }
        Ok(RxObservations {
            n_slots,
            n_subcarriers,
            n_rx,
            noise_variance,
            data,
        })
    }

    #[inline]
    pub fn at(&self, t: usize, k: usize) -> &[Complex64] {
        let base = (t * self.n_subcarriers + k) * self.n_rx;
        &self.data[base..base + self.n_rx]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    /// FNV-1a hash over the raw sample bits; used to verify that paired
    /// methods consume identical observations.
    pub fn content_hash(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        let mut eat = |v: u64| {
            h ^= v;
            h = h.wrapping_mul(0x100000001b3);
        };
        eat(self.n_slots as u64);
        eat(self.n_subcarriers as u64);
        eat(self.n_rx as u64);
        eat(self.noise_variance.to_bits());
        for z in &self.data {
            eat(z.re.to_bits());
            eat(z.im.to_bits());
        }
        h
    }
}

/// ULA steering vector from the sin-domain coordinate `u = sin(angle)`:
/// element `m` is `exp(j pi m u) / sqrt(n)`.
pub fn steering_from_sin(n: usize, u: f64) -> Vec<Complex64> {
    let scale = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|m| {
            let phase = PI * m as f64 * u;
            Complex64::new(phase.cos() * scale, phase.sin() * scale)
        })
        .collect()
}

/// ULA steering vector for a half-wavelength array at `angle` radians.
pub fn steering_vector(n: usize, angle: f64) -> Result<Vec<Complex64>> {
    if n < 1 {
        return Err(CharmError::Config("steering vector needs n >= 1".into()));
    }
    if !angle.is_finite() {
        return Err(CharmError::Config("steering angle must be finite".into()));
    }
    Ok(steering_from_sin(n, angle.sin()))
}

/// Rank-one synthesis kernel shared by the channel model and the estimator
/// reconstruction: `H[k] = sum_l gain_l e^{-j 2 pi k df tau_l} a_r(u_rx) a_t(u_tx)^H`.
pub(crate) fn synth_rank_one_sum(
    cfg: &SystemConfig,
    components: &[(Complex64, f64, f64, f64)], // (gain, u_rx, u_tx, delay)
) -> ChannelTensor {
    let mut h = ChannelTensor::zeros(cfg);
    let df = cfg.subcarrier_spacing;
    for &(gain, u_rx, u_tx, delay) in components {
        if gain == Complex64::new(0.0, 0.0) {
            continue;
        }
        let a_r = steering_from_sin(cfg.n_rx, u_rx);
        let a_t = steering_from_sin(cfg.n_tx, u_tx);
        let a_t_conj: Vec<Complex64> = a_t.iter().map(|z| z.conj()).collect();
        for k in 0..cfg.n_subcarriers {
            let phase = -2.0 * PI * k as f64 * df * delay;
            let w = gain * Complex64::new(phase.cos(), phase.sin());
            let stride = cfg.n_rx * cfg.n_tx;
            let block = &mut h.as_mut_slice()[k * stride..(k + 1) * stride];
            for (rx, &ar) in a_r.iter().enumerate() {
                let row_gain = w * ar;
                let row = &mut block[rx * cfg.n_tx..(rx + 1) * cfg.n_tx];
                for (o, &at) in row.iter_mut().zip(&a_t_conj) {
                    *o += row_gain * at;
                }
            }
        }
    }
    h
}

/// Geometric channel synthesis: the sum of per-path rank-one outer products
/// with per-subcarrier delay phase rotation.
pub fn synthesize_channel(cfg: &SystemConfig, paths: &MultipathSet) -> Result<ChannelTensor> {
    cfg.validate()?;
    paths.validate(cfg)?;
    let components: Vec<(Complex64, f64, f64, f64)> = paths
        .paths()
        .iter()
        .map(|p| (p.gain, p.aoa.sin(), p.aod.sin(), p.delay))
        .collect();
    Ok(synth_rank_one_sum(cfg, &components))
}

/// Simulate the pilot phase: `y[t,k] = H[k] x_t + n[t,k]`.
///
/// The noise variance is calibrated so that the mean received signal power
/// per element (over all slots, subcarriers and antennas) divided by the
/// per-element noise variance equals `10^(snr_db/10)`. Pass
/// `snr_db = f64::INFINITY` for a noiseless run. Deterministic per seed.
pub fn simulate_rx(
    cfg: &SystemConfig,
    h: &ChannelTensor,
    pilots: &PilotMatrix,
    snr_db: f64,
    rng_seed: u64,
) -> Result<RxObservations> {
    if h.n_rx != cfg.n_rx || h.n_tx != cfg.n_tx || h.n_subcarriers != cfg.n_subcarriers {
        return Err(CharmError::Dimension(
            "channel tensor does not match the system configuration".into(),
        ));
    }
    if pilots.n_tx != cfg.n_tx {
        return Err(CharmError::Dimension("pilot rows do not match n_tx".into()));
    }
    let t_slots = pilots.n_slots;
    let k_sub = cfg.n_subcarriers;
    let n_rx = cfg.n_rx;

    // Noiseless signal and its mean per-element power.
    let mut data = vec![Complex64::new(0.0, 0.0); t_slots * k_sub * n_rx];
    let mut sig_energy = 0.0f64;
    for t in 0..t_slots {
        let x = pilots.col(t);
        for k in 0..k_sub {
            let block = h.subcarrier(k);
            let out = &mut data[(t * k_sub + k) * n_rx..(t * k_sub + k + 1) * n_rx];
            for (rx, o) in out.iter_mut().enumerate() {
                let row = &block[rx * cfg.n_tx..(rx + 1) * cfg.n_tx];
                let mut acc = Complex64::new(0.0, 0.0);
                for (a, b) in row.iter().zip(x) {
                    acc += a * b;
                }
                *o = acc;
                sig_energy += acc.norm_sqr();
            }
        }
    }

    let noise_variance = if snr_db.is_infinite() && snr_db > 0.0 {
        0.0
    } else {
        if !snr_db.is_finite() {
            return Err(CharmError::Config("snr_db must be finite or +inf".into()));
        }
        let mean_power = sig_energy / (t_slots * k_sub * n_rx) as f64;
        if mean_power <= 0.0 {
            return Err(CharmError::ZeroChannel);
        }
        mean_power / 10f64.powf(snr_db / 10.0)
    };

    if noise_variance > 0.0 {
        let mut rng = ChaCha12Rng::seed_from_u64(rng_seed);
        let scale = (noise_variance / 2.0).sqrt();
        for z in data.iter_mut() {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *z += Complex64::new(re * scale, im * scale);
        }
    }

    Ok(RxObservations {
        n_slots: t_slots,
        n_subcarriers: k_sub,
        n_rx,
        noise_variance,
        data,
    })
}

/// NMSE value in linear and dB form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nmse {
    pub linear: f64,
    pub db: f64,
}

/// Normalized mean squared error over all subcarriers in Frobenius norm.
/// The dB value is floored at [`NMSE_DB_FLOOR`] linear.
pub fn nmse(h_hat: &ChannelTensor, h_ref: &ChannelTensor) -> Result<Nmse> {
    if !h_hat.same_shape(h_ref) {
        return Err(CharmError::Dimension("NMSE operands differ in shape".into()));
    }
    let denom = h_ref.energy();
    if !(denom > 0.0) {
        return Err(CharmError::ZeroNorm);
    }
    let num: f64 = h_hat
        .as_slice()
        .iter()
        .zip(h_ref.as_slice())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    let linear = num / denom;
    Ok(Nmse {
        linear,
        db: 10.0 * linear.max(NMSE_DB_FLOOR).log10(),
    })
}

/// Draw `t` distinct unit-norm columns of the `n_tx`-point DFT matrix.
pub fn dft_pilots(cfg: &SystemConfig, t: usize, mode: PilotMode) -> Result<PilotMatrix> {
    if t < 1 || t > cfg.n_tx {
        return Err(CharmError::Config(format!(
            "pilot length {t} must satisfy 1 <= T <= n_tx = {}",
            cfg.n_tx
        )));
    }
    let indices: Vec<usize> = match mode {
        PilotMode::EvenlySpaced => (0..t).map(|i| i * cfg.n_tx / t).collect(),
        PilotMode::SeededRandom(seed) => {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let mut pool: Vec<usize> = (0..cfg.n_tx).collect();
            // partial Fisher-Yates: first t entries are a distinct sample
            for i in 0..t {
                let j = i + (rand::Rng::gen_range(&mut rng, 0..(cfg.n_tx - i) as u64) as usize);
                pool.swap(i, j);
            }
            pool.truncate(t);
            pool
        }
    };
    let scale = 1.0 / (cfg.n_tx as f64).sqrt();
    let columns: Vec<Vec<Complex64>> = indices
        .iter()
        .map(|&m| {
            (0..cfg.n_tx)
                .map(|n| {
                    let phase = -2.0 * PI * (n * m) as f64 / cfg.n_tx as f64;
                    Complex64::new(phase.cos() * scale, phase.sin() * scale)
                })
                .collect()
        })
        .collect();
    PilotMatrix::new(cfg.n_tx, columns)
}
