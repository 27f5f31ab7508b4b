//! Rician block-fading channel model.
//!
//! The base station uses transmit/receive beamforming over `N_t` antennas,
//! so the effective scalar power gain is the squared Euclidean norm of the
//! antenna vector. With channel reciprocity one gain serves both the power
//! transfer and the offloading direction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("invalid channel parameter: {0}")]
    InvalidParameter(String),
}

/// Rician vector-fading parameters.
///
/// The antenna vector is `sqrt(Omega K/(1+K)) * 1 + sqrt(Omega/(1+K)) * w`
/// with `w` i.i.d. circularly-symmetric complex standard normal, so the
/// effective gain has mean `n_antennas * avg_power` for any `K`.
#[derive(Debug, Clone, Copy)]
pub struct RicianParams {
    pub n_antennas: u32,
    pub rician_k: f64,
    pub avg_power: f64,
    pub seed: u64,
}

impl RicianParams {
    pub fn new(n_antennas: u32, rician_k: f64, avg_power: f64, seed: u64) -> Result<Self, ChannelError> {
        if n_antennas < 1 {
            return Err(ChannelError::InvalidParameter("n_antennas < 1".into()));
        }
        if !(rician_k >= 0.0 && rician_k.is_finite()) {
            return Err(ChannelError::InvalidParameter(format!(
                "rician_k = {rician_k}"
            )));
        }
        if !(avg_power > 0.0 && avg_power.is_finite()) {
            return Err(ChannelError::InvalidParameter(format!(
                "avg_power = {avg_power}"
            )));
        }
        Ok(RicianParams {
            n_antennas,
            rician_k,
            avg_power,
            seed,
        })
    }

    /// An independent RNG stream derived from `(seed, stream_id)`.
    ///
    /// ChaCha keeps streams with the same key but different stream numbers
    /// statistically independent, so Monte-Carlo trial `t` can use stream
    /// `t` and reproduce bit-identically on any worker layout.
    pub fn stream(&self, stream_id: u64) -> ChaCha8Rng {
        stream_rng(self.seed, stream_id)
    }
}

/// An independent ChaCha stream for `(seed, stream_id)`.
pub fn stream_rng(seed: u64, stream_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// Effective gains of `M` i.i.d. fading blocks spanning one deadline.
#[derive(Debug, Clone)]
pub struct BlockGains {
    gains: Vec<f64>,
    block_duration: f64,
}

impl BlockGains {
    /// Wrap explicit per-block gains (used by the CLI and tests).
    pub fn from_gains(gains: Vec<f64>, block_duration: f64) -> Result<Self, ChannelError> {
        if gains.is_empty() {
            return Err(ChannelError::InvalidParameter("no blocks".into()));
        }
        if !(block_duration > 0.0) {
            return Err(ChannelError::InvalidParameter(format!(
                "block_duration = {block_duration}"
            )));
        }
        if gains.iter().any(|g| !(*g >= 0.0)) {
            return Err(ChannelError::InvalidParameter(
                "negative or NaN gain".into(),
            ));
        }
        Ok(BlockGains {
            gains,
            block_duration,
        })
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    /// Block duration `T_c`; the deadline is `len() * T_c`.
    pub fn block_duration(&self) -> f64 {
        self.block_duration
    }
}

/// Draw one effective channel power gain `h = ||h_vec||^2`.
///
/// Each complex entry is the line-of-sight mean plus a scattered part whose
/// real and imaginary components are `N(0, 1/2)` scaled normals.
pub fn sample_gain<R: Rng + ?Sized>(params: &RicianParams, rng: &mut R) -> f64 {
    let los = (params.avg_power * params.rician_k / (1.0 + params.rician_k)).sqrt();
    let scatter = (params.avg_power / (1.0 + params.rician_k)).sqrt();
    let comp = std::f64::consts::FRAC_1_SQRT_2;
    let mut h = 0.0;
    for _ in 0..params.n_antennas {
        let wr: f64 = rng.sample(StandardNormal);
        let wi: f64 = rng.sample(StandardNormal);
        let re = los + scatter * comp * wr;
        let im = scatter * comp * wi;
        h += re * re + im * im;
    }
    h
}

/// Draw `m` independent block gains with block duration `t_c`.
pub fn sample_block_gains<R: Rng + ?Sized>(
    params: &RicianParams,
    m: usize,
    t_c: f64,
    rng: &mut R,
) -> BlockGains {
    assert!(m >= 1, "need at least one block");
    assert!(t_c > 0.0, "block duration must be positive");
    let gains = (0..m).map(|_| sample_gain(params, rng)).collect();
    BlockGains {
        gains,
        block_duration: t_c,
    }
}
