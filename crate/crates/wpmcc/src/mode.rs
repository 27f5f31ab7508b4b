//! Mobile operation mode selection: local computing versus offloading.
//!
//! If only one mode is feasible it wins by default. When both are feasible
//! the mode with the larger energy savings is chosen, ties going to
//! offloading: the decision rule is exactly `delta_savings >= 0` where
//! `delta_savings = S_off - S_loc` is computed from the realized savings of
//! the two policies.

use crate::local::LocalPolicy;
use crate::offload::OffloadPolicy;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Local,
    Offload,
    Infeasible,
}

/// A mode decision together with the two sub-policies it compared.
#[derive(Debug, Clone)]
pub struct ModeDecision {
    pub mode: Mode,
    /// `S_off - S_loc`; only defined when both modes are feasible.
    pub delta_savings: Option<f64>,
    pub local: LocalPolicy,
    pub offload: OffloadPolicy,
}

/// Select the operation mode from two policies computed for the same
/// `(h, L, T, P_b)` instance.
pub fn select(local: LocalPolicy, offload: OffloadPolicy) -> ModeDecision {
    let (mode, delta) = match (local.feasible, offload.feasible) {
        (false, false) => (Mode::Infeasible, None),
        (true, false) => (Mode::Local, None),
        (false, true) => (Mode::Offload, None),
        (true, true) => {
            let delta = offload.savings - local.savings;
            let mode = if delta >= 0.0 { Mode::Offload } else { Mode::Local };
            (mode, Some(delta))
        }
    };
    ModeDecision {
        mode,
        delta_savings: delta,
        local,
        offload,
    }
}

/// Diagnostic form of the base-station power threshold below which
/// offloading is preferred: `sigma^2/(upsilon h^2) (1 + e a''' ln a''')`
/// with `a''' = B h gamma theta / (e T^2 sigma^2 L ln 2)` and `theta` the
/// realized cubic energy coefficient `E_loc T^2 / gamma`.
///
/// This characterizes the trend of the decision in `P_b`; decisions
/// themselves always come from the exact savings comparison in [`select`].
pub fn bs_power_preference_diagnostic(
    h: f64,
    bits: f64,
    deadline: f64,
    gamma: f64,
    upsilon: f64,
    noise_var: f64,
    bandwidth: f64,
    local_avg_energy: f64,
) -> f64 {
    let e = std::f64::consts::E;
    let theta = local_avg_energy * deadline * deadline / gamma;
    let a3 = bandwidth * h * gamma * theta
        / (e * deadline * deadline * noise_var * bits * std::f64::consts::LN_2);
    noise_var / (upsilon * h * h) * (1.0 + e * a3 * a3.ln())
}
