//! Energy-minimal CPU-cycle scheduling for local computing.
//!
//! Minimizes the average computing energy `sum_k gamma p_k f_k^2` over the
//! cycle frequencies, subject to the deadline and to the energy-harvesting
//! prefix constraints (cumulative consumption can never exceed cumulative
//! harvested energy). The optimum has a water-filling-like closed form:
//! `f_k` proportional to `(p_k + lambda)^(-1/3)`, where the multiplier
//! `lambda` is zero above a received-power threshold `a'`, positive between
//! the feasibility threshold `a` and `a'`, and the problem is infeasible
//! below `a`. The same solver handles the per-fading-block variant where a
//! residual energy `R` carried in from earlier blocks relaxes the harvesting
//! constraint.

use thiserror::Error;

use crate::cci::{CciModel, ExecutionProbabilities};
use crate::numerics::KahanSum;

/// Fixed parameters of the local-computing energy model.
#[derive(Debug, Clone, Copy)]
pub struct LocalConfig {
    /// Switched-capacitance constant (J s^2): energy per cycle is
    /// `gamma * f^2`.
    pub gamma: f64,
    /// Energy conversion efficiency in (0, 1].
    pub upsilon: f64,
    /// Base-station transmission power (W).
    pub bs_power: f64,
    /// Computation deadline (s); the block duration for per-block solves.
    pub deadline: f64,
}

impl LocalConfig {
    /// Harvested power for effective channel gain `h`.
    #[inline]
    pub fn harvested_power(&self, h: f64) -> f64 {
        self.upsilon * self.bs_power * h
    }
}

/// Which case of the closed-form policy applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalRegime {
    /// Received power below `a`: no schedule meets the deadline.
    Infeasible,
    /// `a <= P_b h < a'`: the harvesting constraint is active, `lambda > 0`.
    HarvestLimited,
    /// `P_b h >= a'`: frequencies independent of the received power.
    HarvestUnconstrained,
}

/// Outcome of a local-computing solve.
#[derive(Debug, Clone)]
pub struct LocalPolicy {
    pub feasible: bool,
    /// Optimal per-cycle frequencies (Hz), empty when infeasible.
    pub frequencies: Vec<f64>,
    /// Harvesting multiplier: `Some(0.0)` when unconstrained, `Some(l > 0)`
    /// when harvest-limited, and `None` either when infeasible or at the
    /// exact boundary `P_b h = a` where the multiplier diverges (the
    /// schedule there is the single feasible point `f_k = N/T`).
    pub lambda: Option<f64>,
    /// Minimum average energy (J); infinite when infeasible.
    pub avg_energy: f64,
    /// `upsilon P_b h T - avg_energy` (J); negative infinity when infeasible.
    pub savings: f64,
    pub regime: LocalRegime,
}

#[derive(Debug, Error)]
pub enum LocalError {
    #[error("received power {received_power} outside the harvest-limited regime [{a}, {a_prime})")]
    OutsideLambdaRegime {
        received_power: f64,
        a: f64,
        a_prime: f64,
    },
    #[error("multiplier solve did not reach the residual tolerance")]
    NoConvergence,
}

/// Relative residual demanded of the multiplier equation.
const LAMBDA_TOL: f64 = 1e-9;
/// Targets within this relative distance of `N^3` are treated as the exact
/// feasibility boundary, where the only schedule is `f_k = N/T`.
const BOUNDARY_TOL: f64 = 1e-12;

/// Power sums over the execution probabilities shifted by `lambda`.
struct PowerSums {
    /// `sum (p_k + lambda)^(1/3)`
    u: f64,
    /// `sum (p_k + lambda)^(-2/3)`
    v: f64,
    /// `sum (p_k + lambda)^(-5/3)` (for the Newton derivative)
    w: f64,
    /// `sum p_k (p_k + lambda)^(-2/3)` (for the energy)
    e: f64,
}

fn power_sums(probs: &[f64], lambda: f64) -> PowerSums {
    let (mut u, mut v, mut w, mut e) = (
        KahanSum::new(),
        KahanSum::new(),
        KahanSum::new(),
        KahanSum::new(),
    );
    for &p in probs {
        let t = p + lambda;
        let c = t.cbrt();
        let inv23 = 1.0 / (c * c);
        u.add(c);
        v.add(inv23);
        w.add(inv23 / t);
        e.add(p * inv23);
    }
    PowerSums {
        u: u.value(),
        v: v.value(),
        w: w.value(),
        e: e.value(),
    }
}

/// Left side of the multiplier equation,
/// `g(lambda) = (sum (p+lambda)^(1/3))^2 * (sum (p+lambda)^(-2/3))`,
/// strictly decreasing from `g(0)` to `N^3`.
#[inline]
fn g_value(s: &PowerSums) -> f64 {
    s.u * s.u * s.v
}

/// Feasibility thresholds `(a, a')` on the received power `P_b h`.
///
/// `a = gamma N^3 / (upsilon T^3)` separates infeasible from feasible;
/// `a' = gamma (sum p^(1/3))^2 (sum p^(-2/3)) / (upsilon T^3)` separates the
/// harvest-limited regime from the one where frequencies no longer depend
/// on the received power.
pub fn thresholds(probs: &ExecutionProbabilities, cfg: &LocalConfig) -> (f64, f64) {
    let n = probs.len() as f64;
    let t3 = cfg.deadline.powi(3);
    let s = power_sums(probs.as_slice(), 0.0);
    let a = cfg.gamma * n * n * n / (cfg.upsilon * t3);
    let a_prime = cfg.gamma * g_value(&s) / (cfg.upsilon * t3);
    (a, a_prime)
}

/// Solve the multiplier equation `g(lambda) = upsilon P_b h T^3 / gamma`
/// for the harvest-limited regime `a <= received_power < a'`.
///
/// Newton iteration (the derivative comes from the same pass over the
/// probabilities) safeguarded by a shrinking bracket; meets a 1e-9 relative
/// residual.
pub fn solve_lambda(
    probs: &ExecutionProbabilities,
    cfg: &LocalConfig,
    received_power: f64,
) -> Result<f64, LocalError> {
    let (a, a_prime) = thresholds(probs, cfg);
    if !(received_power >= a && received_power < a_prime) {
        return Err(LocalError::OutsideLambdaRegime {
            received_power,
            a,
            a_prime,
        });
    }
    let target = cfg.upsilon * received_power * cfg.deadline.powi(3) / cfg.gamma;
    solve_lambda_for_target(probs.as_slice(), target)
}

fn solve_lambda_for_target(probs: &[f64], target: f64) -> Result<f64, LocalError> {
    // Large-lambda expansion g = N^3 + N(N sum p^2 - (sum p)^2)/(3 lambda^2)
    // gives a cheap seed; it is exact enough near the feasibility boundary
    // where the multiplier blows up and still lands within an order of
    // magnitude mid-regime.
    let n = probs.len() as f64;
    let (mut s1, mut s2) = (KahanSum::new(), KahanSum::new());
    for &p in probs {
        s1.add(p);
        s2.add(p * p);
    }
    let spread = n * (n * s2.value() - s1.value() * s1.value()).max(f64::MIN_POSITIVE) / 3.0;
    let seed = (spread / (target - n * n * n)).sqrt().max(1e-12);

    // validated bracket around the seed: g is decreasing, so grow each end
    // until it straddles the target
    let mut lo = seed;
    while g_value(&power_sums(probs, lo)) < target {
        lo /= 16.0;
        if lo < 1e-300 {
            lo = 0.0;
            break;
        }
    }
    let mut hi = (lo * 16.0).max(seed);
    while g_value(&power_sums(probs, hi)) > target {
        hi *= 16.0;
        if hi > 1e30 {
            return Err(LocalError::NoConvergence);
        }
    }

    let mut lambda = seed.clamp(lo.max(1e-300), hi);
    for _ in 0..200 {
        let s = power_sums(probs, lambda);
        let g = g_value(&s);
        if (g - target).abs() <= LAMBDA_TOL * target {
            return Ok(lambda);
        }
        if g > target {
            lo = lambda;
        } else {
            hi = lambda;
        }
        // dg/dlambda = (2/3) (u v^2 - u^2 w) < 0
        let dg = 2.0 / 3.0 * (s.u * s.v * s.v - s.u * s.u * s.w);
        let mut next = lambda - (g - target) / dg;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - lambda).abs() <= f64::EPSILON * lambda.abs() {
            // bracket exhausted at float resolution; accept the best point
            return Ok(lambda);
        }
        lambda = next;
    }
    Err(LocalError::NoConvergence)
}

/// Optimal static-channel policy for effective gain `h`.
pub fn static_policy(probs: &ExecutionProbabilities, cfg: &LocalConfig, h: f64) -> LocalPolicy {
    let target = cfg.upsilon * cfg.bs_power * h * cfg.deadline.powi(3) / cfg.gamma;
    policy_for_target(probs, cfg, h, target)
}

/// Per-fading-block policy with residual energy `R >= 0` carried in from the
/// preceding block. `bits = 0` returns the trivial all-MPT policy; setting
/// `R = 0` reduces to [`static_policy`] with the block duration as deadline.
pub fn slave_policy(
    model: &CciModel,
    cfg: &LocalConfig,
    h: f64,
    bits: f64,
    residual: f64,
) -> LocalPolicy {
    let t = cfg.deadline;
    if bits <= 0.0 {
        return LocalPolicy {
            feasible: true,
            frequencies: Vec::new(),
            lambda: None,
            avg_energy: 0.0,
            savings: cfg.harvested_power(h) * t,
            regime: LocalRegime::HarvestUnconstrained,
        };
    }
    let probs = model
        .execution_probabilities(bits)
        .expect("slave block within sequence cap");
    let target =
        (cfg.upsilon * cfg.bs_power * h * t.powi(3) + residual * t * t) / cfg.gamma;
    policy_for_target(&probs, cfg, h, target)
}

/// Minimum average energy of a per-block solve, without materializing the
/// frequency schedule. `None` when the block is infeasible.
pub fn slave_energy(
    model: &CciModel,
    cfg: &LocalConfig,
    h: f64,
    bits: f64,
    residual: f64,
) -> Option<f64> {
    let t = cfg.deadline;
    if bits <= 0.0 {
        return Some(0.0);
    }
    let probs = model
        .execution_probabilities(bits)
        .expect("slave block within sequence cap");
    let p = probs.as_slice();
    let n = p.len() as f64;
    let target = (cfg.upsilon * cfg.bs_power * h * t.powi(3) + residual * t * t) / cfg.gamma;
    let n3 = n * n * n;
    if target < n3 * (1.0 - BOUNDARY_TOL) {
        return None;
    }
    let t2 = t * t;
    let s0 = power_sums(p, 0.0);
    if target >= g_value(&s0) {
        return Some(cfg.gamma / t2 * s0.u * s0.u * s0.u);
    }
    if target <= n3 * (1.0 + BOUNDARY_TOL) {
        let sum_p = crate::numerics::kahan_sum(p.iter().copied());
        return Some(cfg.gamma * n * n * sum_p / t2);
    }
    let lambda = solve_lambda_for_target(p, target).ok()?;
    let s = power_sums(p, lambda);
    Some(cfg.gamma / t2 * s.u * s.u * s.e)
}

fn policy_for_target(
    probs: &ExecutionProbabilities,
    cfg: &LocalConfig,
    h: f64,
    target: f64,
) -> LocalPolicy {
    let p = probs.as_slice();
    let t = cfg.deadline;
    let harvest = cfg.harvested_power(h) * t;
    if p.is_empty() {
        return LocalPolicy {
            feasible: true,
            frequencies: Vec::new(),
            lambda: None,
            avg_energy: 0.0,
            savings: harvest,
            regime: LocalRegime::HarvestUnconstrained,
        };
    }
    let n = p.len() as f64;
    let n3 = n * n * n;
    if target < n3 * (1.0 - BOUNDARY_TOL) {
        return LocalPolicy {
            feasible: false,
            frequencies: Vec::new(),
            lambda: None,
            avg_energy: f64::INFINITY,
            savings: f64::NEG_INFINITY,
            regime: LocalRegime::Infeasible,
        };
    }

    let t2 = t * t;
    let s0 = power_sums(p, 0.0);
    if target >= g_value(&s0) {
        // harvesting inactive: f_k = (1/T) (sum p^(1/3)) p_k^(-1/3)
        let (freqs, _) = materialize_frequencies(p, 0.0, t);
        return LocalPolicy {
            feasible: true,
            frequencies: freqs,
            lambda: Some(0.0),
            avg_energy: cfg.gamma / t2 * s0.u * s0.u * s0.u,
            savings: harvest - cfg.gamma / t2 * s0.u * s0.u * s0.u,
            regime: LocalRegime::HarvestUnconstrained,
        };
    }

    if target <= n3 * (1.0 + BOUNDARY_TOL) {
        // the single feasible schedule at the boundary: every cycle at N/T
        let f = n / t;
        let sum_p: f64 = crate::numerics::kahan_sum(p.iter().copied());
        let energy = cfg.gamma * n * n * sum_p / t2;
        return LocalPolicy {
            feasible: true,
            frequencies: vec![f; p.len()],
            lambda: None,
            avg_energy: energy,
            savings: harvest - energy,
            regime: LocalRegime::HarvestLimited,
        };
    }

    let lambda = solve_lambda_for_target(p, target)
        .expect("target strictly inside (N^3, g(0)) must bracket a multiplier");
    let (freqs, sums) = materialize_frequencies(p, lambda, t);
    let energy = cfg.gamma / t2 * sums.u * sums.u * sums.e;
    LocalPolicy {
        feasible: true,
        frequencies: freqs,
        lambda: Some(lambda),
        avg_energy: energy,
        savings: harvest - energy,
        regime: LocalRegime::HarvestLimited,
    }
}

/// `f_k = (U / T) (p_k + lambda)^(-1/3)` in one cube-root pass.
fn materialize_frequencies(probs: &[f64], lambda: f64, t: f64) -> (Vec<f64>, PowerSums) {
    let mut freqs = Vec::with_capacity(probs.len());
    let (mut u, mut v, mut w, mut e) = (
        KahanSum::new(),
        KahanSum::new(),
        KahanSum::new(),
        KahanSum::new(),
    );
    for &p in probs {
        let tt = p + lambda;
        let c = tt.cbrt();
        let inv23 = 1.0 / (c * c);
        u.add(c);
        v.add(inv23);
        w.add(inv23 / tt);
        e.add(p * inv23);
        freqs.push(c);
    }
    let factor = u.value() / t;
    for f in &mut freqs {
        *f = factor / *f;
    }
    (
        freqs,
        PowerSums {
            u: u.value(),
            v: v.value(),
            w: w.value(),
            e: e.value(),
        },
    )
}

/// Precomputed map from received power to minimum average energy for a fixed
/// probability sequence.
///
/// The multiplier equation depends on the deadline and gain only through the
/// dimensionless target `upsilon P_b h T^3 / gamma`, so one table serves a
/// whole parameter sweep. Interior values are log-log interpolated between
/// exact anchor evaluations; worst-case interpolation error is well below
/// 1e-4 relative, which is plenty for Monte-Carlo savings columns (exact
/// solves stay available through [`static_policy`]).
#[derive(Debug, Clone)]
pub struct LocalEnergyTable {
    n3: f64,
    g0: f64,
    /// dimensionless energy `A` such that `E = gamma A / T^2`
    a0: f64,
    a_inf: f64,
    g_vals: Vec<f64>,
    /// energy deficits `a_inf - A`, which vanish like `sqrt(g - N^3)` at the
    /// feasibility boundary
    d_vals: Vec<f64>,
}

impl LocalEnergyTable {
    pub fn build(probs: &ExecutionProbabilities) -> Self {
        const POINTS: usize = 240;
        let p = probs.as_slice();
        let n = p.len() as f64;
        let s0 = power_sums(p, 0.0);
        let sum_p: f64 = crate::numerics::kahan_sum(p.iter().copied());

        use rayon::prelude::*;
        let (lo, hi) = (1e-6f64, 1e8f64);
        let ratio = (hi / lo).ln();
        let mut pairs: Vec<(f64, f64)> = (0..POINTS)
            .into_par_iter()
            .map(|i| {
                let lambda = lo * (ratio * i as f64 / (POINTS - 1) as f64).exp();
                let s = power_sums(p, lambda);
                (g_value(&s), s.u * s.u * s.e)
            })
            .collect();
        // g decreases with lambda; store ascending in g
        pairs.reverse();
        let a_inf = n * n * sum_p;
        let (g_vals, d_vals) = pairs
            .into_iter()
            .map(|(g, a)| (g, (a_inf - a).max(0.0)))
            .unzip();
        LocalEnergyTable {
            n3: n * n * n,
            g0: g_value(&s0),
            a0: s0.u * s0.u * s0.u,
            a_inf,
            g_vals,
            d_vals,
        }
    }

    /// Minimum average energy at gain `h`, or `None` if infeasible.
    pub fn min_avg_energy(&self, cfg: &LocalConfig, h: f64) -> Option<f64> {
        let t = cfg.deadline;
        let target = cfg.upsilon * cfg.bs_power * h * t.powi(3) / cfg.gamma;
        let a = self.dimensionless_energy(target)?;
        Some(cfg.gamma * a / (t * t))
    }

    /// Maximum energy savings at gain `h`, or `None` if infeasible.
    pub fn savings(&self, cfg: &LocalConfig, h: f64) -> Option<f64> {
        let e = self.min_avg_energy(cfg, h)?;
        Some(cfg.harvested_power(h) * cfg.deadline - e)
    }

    fn dimensionless_energy(&self, target: f64) -> Option<f64> {
        if target < self.n3 * (1.0 - 1e-12) {
            return None;
        }
        if target >= self.g0 {
            return Some(self.a0);
        }
        let excess = (target - self.n3).max(0.0);
        let idx = self.g_vals.partition_point(|&g| g < target);
        let deficit = if idx == 0 {
            // below the lowest anchor the deficit follows its asymptotic
            // square-root law exactly
            self.d_vals[0] * (excess / (self.g_vals[0] - self.n3)).sqrt()
        } else {
            let (g_lo, d_lo, g_hi, d_hi) = if idx == self.g_vals.len() {
                (
                    self.g_vals[idx - 1],
                    self.d_vals[idx - 1],
                    self.g0,
                    self.a_inf - self.a0,
                )
            } else {
                (
                    self.g_vals[idx - 1],
                    self.d_vals[idx - 1],
                    self.g_vals[idx],
                    self.d_vals[idx],
                )
            };
            if g_hi <= g_lo || d_lo <= 0.0 || d_hi <= 0.0 {
                d_lo.max(d_hi)
            } else {
                // log-log interpolation of the deficit against the excess
                let x_lo = (g_lo - self.n3).ln();
                let x_hi = (g_hi - self.n3).ln();
                let t = (excess.ln() - x_lo) / (x_hi - x_lo);
                (d_lo.ln() + t * (d_hi.ln() - d_lo.ln())).exp()
            }
        };
        Some((self.a_inf - deficit).clamp(self.a0, self.a_inf))
    }
}
