//! Optimal time division between microwave power transfer and computation
//! offloading.
//!
//! The deadline is split into an MPT phase and a fixed-rate transmission
//! phase. The mobile energy savings (harvested minus spent) is concave in
//! the offloading duration `t`; the maximizer is proportional to the data
//! size, `t* = rho(h) * L`, with the per-bit duration `rho` expressed through
//! the Lambert W function. Feasibility reduces to a threshold `a''` on
//! `P_b h^2`. The per-fading-block variant adds a residual-energy budget `R`
//! which can make it optimal to spend the whole block transmitting.

use crate::numerics::lambert_w0;

/// Parameters of the offloading link and energy model.
#[derive(Debug, Clone, Copy)]
pub struct OffloadConfig {
    /// Channel bandwidth (Hz).
    pub bandwidth: f64,
    /// Complex noise variance (W).
    pub noise_var: f64,
    /// Energy conversion efficiency in (0, 1].
    pub upsilon: f64,
    /// Base-station transmission power (W).
    pub bs_power: f64,
    /// Deadline (s); the block duration for per-block solves.
    pub deadline: f64,
}

/// Which case of the time-division policy applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OffloadRegime {
    Infeasible,
    /// Interior optimum `t* = rho(h) * bits`.
    Interior,
    /// Residual-funded transmission filling the whole block, `t* = T_c`.
    FullBlock,
}

/// Outcome of an offloading solve. MPT occupies `deadline - duration`.
#[derive(Debug, Clone, Copy)]
pub struct OffloadPolicy {
    pub feasible: bool,
    /// Offloading duration `t*` (s).
    pub duration: f64,
    /// Energy savings (J); for per-block solves this may be negative, but
    /// never below the residual budget.
    pub savings: f64,
    pub regime: OffloadRegime,
}

impl OffloadPolicy {
    fn infeasible() -> Self {
        OffloadPolicy {
            feasible: false,
            duration: 0.0,
            savings: f64::NEG_INFINITY,
            regime: OffloadRegime::Infeasible,
        }
    }
}

const LN2: f64 = std::f64::consts::LN_2;

/// Transmission energy for sending `bits` over duration `t`:
/// `(2^(bits/(B t)) - 1) (sigma^2 / h) t`. Zero bits cost nothing.
pub fn offload_energy(cfg: &OffloadConfig, h: f64, bits: f64, duration: f64) -> f64 {
    if bits == 0.0 {
        return 0.0;
    }
    assert!(duration > 0.0, "positive bits need positive duration");
    let rate_exp = (bits * LN2 / (cfg.bandwidth * duration)).exp() - 1.0;
    rate_exp * cfg.noise_var / h * duration
}

/// Energy savings when offloading for `t` out of the deadline:
/// harvested `upsilon P_b h (T - t)` minus the transmission energy.
pub fn savings_objective(cfg: &OffloadConfig, h: f64, bits: f64, t: f64) -> f64 {
    cfg.upsilon * cfg.bs_power * h * (cfg.deadline - t) - offload_energy(cfg, h, bits, t)
}

/// Lambert argument shared by `rho` and `y`:
/// `upsilon P_b h^2 / (sigma^2 e) - 1/e`, always at least `-1/e`.
#[inline]
fn w_of_gain(cfg: &OffloadConfig, h: f64) -> f64 {
    let e = std::f64::consts::E;
    let arg = cfg.upsilon * cfg.bs_power * h * h / (cfg.noise_var * e) - 1.0 / e;
    lambert_w0(arg).expect("argument >= -1/e by construction")
}

/// Optimal offloading time per bit (s/bit):
/// `rho(h) = ln 2 / (B [1 + W(upsilon P_b h^2/(sigma^2 e) - 1/e)])`.
pub fn rho(cfg: &OffloadConfig, h: f64) -> f64 {
    LN2 / (cfg.bandwidth * (1.0 + w_of_gain(cfg, h)))
}

/// Marginal offloading cost per bit net of the forgone harvesting (J/bit):
/// `y(h) = (sigma^2 ln 2 / (B h)) exp(W(.) + 1)`.
pub fn y_of_h(cfg: &OffloadConfig, h: f64) -> f64 {
    cfg.noise_var * LN2 / (cfg.bandwidth * h) * (w_of_gain(cfg, h) + 1.0).exp()
}

/// Feasibility threshold on `P_b h^2` for offloading `bits` by the deadline.
pub fn threshold_a2(cfg: &OffloadConfig, bits: f64) -> f64 {
    let d = bits * LN2 / (cfg.bandwidth * cfg.deadline);
    let w = lambert_w0(-(-1.0 - d).exp()).expect("argument in [-1/e, 0)");
    cfg.noise_var / cfg.upsilon * (1.0 + (d + w) * (d + w + 1.0).exp())
}

/// Largest data size with an interior optimum in one block:
/// `c = T_c B [1 + W(.)] / ln 2` (equivalently `deadline / rho(h)`).
pub fn interior_data_cap(cfg: &OffloadConfig, h: f64) -> f64 {
    cfg.deadline * cfg.bandwidth * (1.0 + w_of_gain(cfg, h)) / LN2
}

/// Largest data size a residual budget can push through a full block:
/// `c' = B T_c log2(1 + R h / (sigma^2 T_c))`.
pub fn full_block_data_cap(cfg: &OffloadConfig, h: f64, residual: f64) -> f64 {
    cfg.bandwidth * cfg.deadline * (1.0 + residual * h / (cfg.noise_var * cfg.deadline)).log2()
}

/// Optimal static-channel policy: infeasible iff `P_b h^2 < a''`, otherwise
/// `t* = rho(h) * bits` with savings `upsilon P_b h T - y(h) * bits`.
pub fn static_policy(cfg: &OffloadConfig, h: f64, bits: f64) -> OffloadPolicy {
    let harvest = cfg.upsilon * cfg.bs_power * h * cfg.deadline;
    if bits == 0.0 {
        return OffloadPolicy {
            feasible: true,
            duration: 0.0,
            savings: harvest,
            regime: OffloadRegime::Interior,
        };
    }
    // the exact boundary P_b h^2 = a'' is feasible with zero savings
    if cfg.bs_power * h * h < threshold_a2(cfg, bits) * (1.0 - 1e-12) {
        return OffloadPolicy::infeasible();
    }
    OffloadPolicy {
        feasible: true,
        duration: rho(cfg, h) * bits,
        savings: harvest - y_of_h(cfg, h) * bits,
        regime: OffloadRegime::Interior,
    }
}

/// Per-fading-block policy with residual energy `R >= 0`.
///
/// Below a residual threshold the energy budget caps the data at
/// `(upsilon P_b h T_c + R)/y(h)` with the interior time division; above it,
/// sizes up to `interior_data_cap` stay interior and sizes up to
/// `full_block_data_cap` spend the entire block transmitting at a net energy
/// cost bounded by the residual. `R = 0` reduces to [`static_policy`].
pub fn slave_policy(cfg: &OffloadConfig, h: f64, bits: f64, residual: f64) -> OffloadPolicy {
    let t_c = cfg.deadline;
    let harvest = cfg.upsilon * cfg.bs_power * h * t_c;
    if bits == 0.0 {
        return OffloadPolicy {
            feasible: true,
            duration: 0.0,
            savings: harvest,
            regime: OffloadRegime::Interior,
        };
    }
    let y = y_of_h(cfg, h);
    let residual_threshold = cfg.bandwidth * t_c * y / LN2 - cfg.noise_var * t_c / h;
    let interior = |savings: f64| OffloadPolicy {
        feasible: true,
        duration: rho(cfg, h) * bits,
        savings,
        regime: OffloadRegime::Interior,
    };
    if residual <= residual_threshold {
        if bits <= (harvest + residual) / y {
            interior(harvest - y * bits)
        } else {
            OffloadPolicy::infeasible()
        }
    } else if bits < interior_data_cap(cfg, h) {
        interior(harvest - y * bits)
    } else if bits <= full_block_data_cap(cfg, h, residual) {
        OffloadPolicy {
            feasible: true,
            duration: t_c,
            savings: -offload_energy(cfg, h, bits, t_c),
            regime: OffloadRegime::FullBlock,
        }
    } else {
        OffloadPolicy::infeasible()
    }
}
