//! Multi-block data allocation under non-causal channel knowledge.
//!
//! With the deadline split into `M` i.i.d. fading blocks, a master problem
//! divides the input bits across blocks while per-block slave policies do
//! the actual scheduling. For local computing the master is a separable
//! convex program over an approximate per-block energy `ghat` built from the
//! cubic scaling factors and a conservative residual-energy recursion; a
//! water-filling-style multiplier search solves it. For offloading the
//! residual-free relaxation has a linear objective solved greedily in
//! ascending order of the per-bit cost `y(h)`, and a discretized backward
//! dynamic program over the residual-coupled problem serves as the
//! reference baseline.

use serde::{Deserialize, Serialize};

use crate::cci::ScalingFactors;
use crate::channel::BlockGains;
use crate::local::LocalConfig;
use crate::numerics::{bisect_monotone, Direction, RootBracket};
use crate::offload::{self, OffloadConfig, OffloadPolicy};

/// Discretization of the offloading dynamic program.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DpGrid {
    /// Residual-energy levels spanning `[0, sum upsilon P_b h_n T_c]`.
    pub energy_levels: usize,
    /// Per-block allocation levels spanning `[0, L]`.
    pub data_levels: usize,
}

impl Default for DpGrid {
    fn default() -> Self {
        DpGrid {
            energy_levels: 200,
            data_levels: 100,
        }
    }
}

/// Per-block outcomes carried by an [`AllocationPlan`].
#[derive(Debug, Clone)]
pub enum PerBlock {
    /// Approximate minimum energies `ghat(l_n, rhat_n, h_n)` per block.
    /// Exact per-block schedules can be recovered on demand with
    /// [`crate::local::slave_policy`].
    LocalEnergies(Vec<f64>),
    /// Exact per-block time-division policies.
    Offload(Vec<OffloadPolicy>),
}

/// A multi-block data allocation with its per-block outcomes.
#[derive(Debug, Clone)]
pub struct AllocationPlan {
    /// Bits per block; sums to the input size when feasible.
    pub allocations: Vec<f64>,
    /// Residual energies used in deriving the plan: the conservative
    /// lower-bound recursion for local plans, zeros for the greedy offload
    /// relaxation, and the realized path residuals for the DP.
    pub residual_estimates: Vec<f64>,
    pub per_block: PerBlock,
    /// Total approximate energy (local plans) or total savings (offload).
    pub total_objective: f64,
    pub feasible: bool,
}

impl AllocationPlan {
    fn infeasible_local(m: usize, residuals: Vec<f64>) -> Self {
        AllocationPlan {
            allocations: vec![0.0; m],
            residual_estimates: residuals,
            per_block: PerBlock::LocalEnergies(vec![f64::INFINITY; m]),
            total_objective: f64::INFINITY,
            feasible: false,
        }
    }

    fn infeasible_offload(m: usize) -> Self {
        AllocationPlan {
            allocations: vec![0.0; m],
            residual_estimates: vec![0.0; m],
            per_block: PerBlock::Offload(vec![
                OffloadPolicy {
                    feasible: false,
                    duration: 0.0,
                    savings: f64::NEG_INFINITY,
                    regime: offload::OffloadRegime::Infeasible,
                };
                m
            ]),
            total_objective: f64::NEG_INFINITY,
            feasible: false,
        }
    }
}

/// Conservative residual-energy estimates `rhat_1 = 0`,
/// `rhat_n = phi_bar (upsilon P_b h_{n-1} T_c + rhat_{n-1})`, the lower end
/// of the bracket the true residuals provably live in.
pub fn residual_estimates_local(
    gains: &BlockGains,
    cfg: &LocalConfig,
    factors: &ScalingFactors,
) -> Vec<f64> {
    let phi_bar = factors.phi_bar();
    let t_c = gains.block_duration();
    let mut out = Vec::with_capacity(gains.len());
    let mut r = 0.0;
    out.push(r);
    for &h in &gains.gains()[..gains.len() - 1] {
        r = phi_bar * (cfg.upsilon * cfg.bs_power * h * t_c + r);
        out.push(r);
    }
    out
}

/// Per-block data thresholds `(bhat, bhat')`: below `bhat` the harvesting
/// constraint is slack, above `bhat'` the block is infeasible.
pub fn data_caps(h: f64, r_hat: f64, t_c: f64, cfg: &LocalConfig, factors: &ScalingFactors) -> (f64, f64) {
    let budget = cfg.upsilon * cfg.bs_power * h * t_c.powi(3) + r_hat * t_c * t_c;
    (
        (budget / (cfg.gamma * factors.theta0)).cbrt(),
        (budget / (cfg.gamma * factors.theta1)).cbrt(),
    )
}

/// Closed-form approximate minimum energy for computing `bits` in one block:
/// the cubic envelope `gamma phi0 l^3 / T_c^2` while harvesting is slack and
/// a quartic bridge up to the infeasibility cap, continuous at both ends.
/// `None` past the cap.
pub fn ghat_loc(
    bits: f64,
    r_hat: f64,
    h: f64,
    t_c: f64,
    cfg: &LocalConfig,
    factors: &ScalingFactors,
) -> Option<f64> {
    let (bhat, bhat_prime) = data_caps(h, r_hat, t_c, cfg, factors);
    if bits > bhat_prime {
        return None;
    }
    Some(ghat_given_caps(bits, bhat, bhat_prime, t_c, cfg, factors))
}

fn ghat_given_caps(
    bits: f64,
    bhat: f64,
    bhat_prime: f64,
    t_c: f64,
    cfg: &LocalConfig,
    factors: &ScalingFactors,
) -> f64 {
    let cube = bits * bits * bits;
    if bits <= bhat || bhat_prime - bhat <= f64::EPSILON * bhat_prime {
        return cfg.gamma * factors.phi0 * cube / (t_c * t_c);
    }
    let s = (bits - bhat) / (bhat_prime - bhat);
    let phi = factors.phi0 + (factors.phi1 - factors.phi0) * s * s * s * s;
    cfg.gamma * phi * cube / (t_c * t_c)
}

/// Derivative of [`ghat_loc`] in the data size at given caps; increasing,
/// since the approximation is convex.
fn ghat_deriv(
    bits: f64,
    bhat: f64,
    bhat_prime: f64,
    t_c: f64,
    cfg: &LocalConfig,
    factors: &ScalingFactors,
) -> f64 {
    let t2 = t_c * t_c;
    if bits <= bhat || bhat_prime - bhat <= f64::EPSILON * bhat_prime {
        return 3.0 * cfg.gamma * factors.phi0 * bits * bits / t2;
    }
    let span = bhat_prime - bhat;
    let s = (bits - bhat) / span;
    let dphi = factors.phi1 - factors.phi0;
    let phi = factors.phi0 + dphi * s * s * s * s;
    cfg.gamma / t2
        * (3.0 * bits * bits * phi + 4.0 * bits * bits * bits * dphi * s * s * s / span)
}

/// Marginal approximate energy `d ghat / d l` at `bits`; the quantity the
/// allocator equalizes across interior blocks.
pub fn ghat_loc_deriv(
    bits: f64,
    r_hat: f64,
    h: f64,
    t_c: f64,
    cfg: &LocalConfig,
    factors: &ScalingFactors,
) -> f64 {
    let (bhat, bhat_prime) = data_caps(h, r_hat, t_c, cfg, factors);
    ghat_deriv(bits, bhat, bhat_prime, t_c, cfg, factors)
}

/// Water-filling-style allocation for local computing: equalize the marginal
/// approximate energy `d ghat / d l` at a common multiplier, capping blocks
/// at their infeasibility thresholds. Feasible iff the input fits under the
/// summed caps; every block then gets a strictly positive share.
pub fn allocate_local(
    total_bits: f64,
    gains: &BlockGains,
    cfg: &LocalConfig,
    factors: &ScalingFactors,
) -> AllocationPlan {
    let t_c = gains.block_duration();
    let m = gains.len();
    let residuals = residual_estimates_local(gains, cfg, factors);
    let caps: Vec<(f64, f64)> = gains
        .gains()
        .iter()
        .zip(&residuals)
        .map(|(&h, &r)| data_caps(h, r, t_c, cfg, factors))
        .collect();
    // allocation bounds rounded down to the per-block cycle grid, so that
    // every allocation the plan hands out stays feasible for the
    // cycle-exact per-block solver (which schedules ceil(l * N0) cycles)
    let n0 = factors.theta1.cbrt().round().max(1.0);
    let bounds: Vec<f64> = caps
        .iter()
        .map(|&(_, bp)| (bp * n0).floor().max(0.0) / n0)
        .collect();
    let cap_sum: f64 = bounds.iter().sum();
    if total_bits > cap_sum * (1.0 + 1e-12) {
        return AllocationPlan::infeasible_local(m, residuals);
    }

    let mut allocations = vec![0.0; m];
    if total_bits > 0.0 {
        let invert = |xi: f64, (bhat, bhat_prime): (f64, f64), bound: f64| -> f64 {
            if xi >= ghat_deriv(bound, bhat, bhat_prime, t_c, cfg, factors) {
                return bound;
            }
            let bracket = RootBracket::new(0.0, bound)
                .with_tolerances(1e-15 * bound.max(1.0), 1e-14);
            bisect_monotone(
                |l| ghat_deriv(l, bhat, bhat_prime, t_c, cfg, factors) - xi,
                &bracket,
                Direction::Increasing,
            )
            .unwrap_or(bound)
        };
        let total_at = |xi: f64| -> f64 {
            caps.iter()
                .zip(&bounds)
                .map(|(&c, &b)| invert(xi, c, b))
                .sum()
        };

        let xi_max = caps
            .iter()
            .zip(&bounds)
            .map(|(&(b, bp), &bound)| ghat_deriv(bound, b, bp, t_c, cfg, factors))
            .fold(0.0f64, f64::max);
        let (mut lo, mut hi) = (0.0f64, xi_max);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if total_at(mid) < total_bits {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let xi = 0.5 * (lo + hi);
        for ((a, &c), &b) in allocations.iter_mut().zip(&caps).zip(&bounds) {
            *a = invert(xi, c, b);
        }
        // land the conservation constraint exactly on the block with the
        // most cap slack
        let mismatch = total_bits - allocations.iter().sum::<f64>();
        if mismatch != 0.0 {
            let (idx, _) = bounds
                .iter()
                .zip(&allocations)
                .map(|(&bound, &a)| bound - a)
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, slack)| {
                    if slack > best.1 {
                        (i, slack)
                    } else {
                        best
                    }
                });
            allocations[idx] = (allocations[idx] + mismatch).clamp(0.0, bounds[idx]);
        }
    }

    let energies: Vec<f64> = allocations
        .iter()
        .zip(&caps)
        .map(|(&l, &(b, bp))| ghat_given_caps(l, b, bp, t_c, cfg, factors))
        .collect();
    AllocationPlan {
        total_objective: energies.iter().sum(),
        allocations,
        residual_estimates: residuals,
        per_block: PerBlock::LocalEnergies(energies),
        feasible: true,
    }
}

/// Evaluate a fixed local allocation (for instance an equal split) through
/// the same approximate machinery as [`allocate_local`].
pub fn allocate_local_fixed(
    allocations: &[f64],
    gains: &BlockGains,
    cfg: &LocalConfig,
    factors: &ScalingFactors,
) -> AllocationPlan {
    assert_eq!(allocations.len(), gains.len());
    let t_c = gains.block_duration();
    let residuals = residual_estimates_local(gains, cfg, factors);
    let mut energies = Vec::with_capacity(allocations.len());
    for ((&l, &h), &r) in allocations.iter().zip(gains.gains()).zip(&residuals) {
        match ghat_loc(l, r, h, t_c, cfg, factors) {
            Some(e) => energies.push(e),
            None => return AllocationPlan::infeasible_local(gains.len(), residuals),
        }
    }
    AllocationPlan {
        allocations: allocations.to_vec(),
        residual_estimates: residuals,
        total_objective: energies.iter().sum(),
        per_block: PerBlock::LocalEnergies(energies),
        feasible: true,
    }
}

/// Greedy offload allocation: with residuals pinned at their zero lower
/// bound the objective is linear, so blocks are filled to their caps
/// `upsilon P_b h T_c / y(h)` in ascending order of the per-bit cost
/// `y(h)`, ties broken stably by block index.
pub fn allocate_offload_greedy(
    total_bits: f64,
    gains: &BlockGains,
    cfg: &OffloadConfig,
) -> AllocationPlan {
    let m = gains.len();
    let block_cfg = block_config(cfg, gains);
    let ys: Vec<f64> = gains
        .gains()
        .iter()
        .map(|&h| offload::y_of_h(&block_cfg, h))
        .collect();
    let caps: Vec<f64> = gains
        .gains()
        .iter()
        .zip(&ys)
        .map(|(&h, &y)| block_cfg.upsilon * block_cfg.bs_power * h * block_cfg.deadline / y)
        .collect();
    if total_bits > caps.iter().sum::<f64>() * (1.0 + 1e-12) {
        return AllocationPlan::infeasible_offload(m);
    }

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| ys[i].partial_cmp(&ys[j]).unwrap());
    let mut allocations = vec![0.0; m];
    let mut remaining = total_bits;
    for &i in &order {
        if remaining <= 0.0 {
            break;
        }
        let take = caps[i].min(remaining);
        allocations[i] = take;
        remaining -= take;
    }

    let policies: Vec<OffloadPolicy> = allocations
        .iter()
        .zip(gains.gains())
        .map(|(&l, &h)| offload::slave_policy(&block_cfg, h, l, 0.0))
        .collect();
    AllocationPlan {
        total_objective: policies.iter().map(|p| p.savings).sum(),
        allocations,
        residual_estimates: vec![0.0; m],
        per_block: PerBlock::Offload(policies),
        feasible: true,
    }
}

/// Evaluate a fixed offload allocation with exact sequential residual
/// tracking through the per-block policies.
pub fn allocate_offload_fixed(
    allocations: &[f64],
    gains: &BlockGains,
    cfg: &OffloadConfig,
) -> AllocationPlan {
    assert_eq!(allocations.len(), gains.len());
    let block_cfg = block_config(cfg, gains);
    let mut policies = Vec::with_capacity(allocations.len());
    let mut residuals = Vec::with_capacity(allocations.len());
    let mut r = 0.0;
    for (&l, &h) in allocations.iter().zip(gains.gains()) {
        residuals.push(r);
        let p = offload::slave_policy(&block_cfg, h, l, r);
        if !p.feasible {
            return AllocationPlan::infeasible_offload(gains.len());
        }
        r += p.savings;
        policies.push(p);
    }
    AllocationPlan {
        allocations: allocations.to_vec(),
        residual_estimates: residuals,
        total_objective: policies.iter().map(|p| p.savings).sum(),
        per_block: PerBlock::Offload(policies),
        feasible: true,
    }
}

/// Reference offload allocation by backward induction on the discretized
/// `(remaining bits, residual energy)` state space. Residual transitions
/// snap downward onto the grid, so reported feasibility and value are
/// conservative; the extracted allocation is re-evaluated exactly.
pub fn allocate_offload_dp(
    total_bits: f64,
    gains: &BlockGains,
    cfg: &OffloadConfig,
    grid: &DpGrid,
) -> AllocationPlan {
    assert!(grid.energy_levels >= 2 && grid.data_levels >= 2, "degenerate grid");
    let m = gains.len();
    let block_cfg = block_config(cfg, gains);
    let t_c = block_cfg.deadline;
    let (n_d, n_e) = (grid.data_levels, grid.energy_levels);
    let d_step = total_bits / (n_d - 1) as f64;
    let e_max: f64 = gains
        .gains()
        .iter()
        .map(|&h| block_cfg.upsilon * block_cfg.bs_power * h * t_c)
        .sum();
    let e_step = e_max / (n_e - 1) as f64;

    // per-block constants for the closed-form reward
    struct Block {
        h: f64,
        y: f64,
        harvest: f64,
        residual_threshold: f64,
        interior_cap: f64,
    }
    let blocks: Vec<Block> = gains
        .gains()
        .iter()
        .map(|&h| {
            let y = offload::y_of_h(&block_cfg, h);
            Block {
                h,
                y,
                harvest: block_cfg.upsilon * block_cfg.bs_power * h * t_c,
                residual_threshold: block_cfg.bandwidth * t_c * y / std::f64::consts::LN_2
                    - block_cfg.noise_var * t_c / h,
                interior_cap: offload::interior_data_cap(&block_cfg, h),
            }
        })
        .collect();
    let reward = |blk: &Block, bits: f64, r: f64| -> Option<f64> {
        if bits == 0.0 {
            return Some(blk.harvest);
        }
        if r <= blk.residual_threshold {
            (bits <= (blk.harvest + r) / blk.y).then(|| blk.harvest - blk.y * bits)
        } else if bits < blk.interior_cap {
            Some(blk.harvest - blk.y * bits)
        } else if bits <= offload::full_block_data_cap(&block_cfg, blk.h, r) {
            Some(-offload::offload_energy(&block_cfg, blk.h, bits, t_c))
        } else {
            None
        }
    };

    const NEG: f64 = f64::NEG_INFINITY;
    // terminal: all bits must have been allocated
    let mut value = vec![NEG; n_d * n_e];
    for e in 0..n_e {
        value[e] = 0.0; // data index 0
    }
    let mut actions: Vec<Vec<u32>> = Vec::with_capacity(m);
    for blk in blocks.iter().rev() {
        let mut next_value = vec![NEG; n_d * n_e];
        let mut act = vec![u32::MAX; n_d * n_e];
        for b in 0..n_d {
            for e in 0..n_e {
                let r = e as f64 * e_step;
                let (mut best, mut best_a) = (NEG, u32::MAX);
                for a in 0..=b {
                    let Some(g) = reward(blk, a as f64 * d_step, r) else {
                        continue;
                    };
                    let r_next = r + g;
                    if r_next < 0.0 {
                        continue;
                    }
                    let e_next = ((r_next / e_step) as usize).min(n_e - 1);
                    let v = value[(b - a) * n_e + e_next];
                    if v == NEG {
                        continue;
                    }
                    if g + v > best {
                        best = g + v;
                        best_a = a as u32;
                    }
                }
                next_value[b * n_e + e] = best;
                act[b * n_e + e] = best_a;
            }
        }
        value = next_value;
        actions.push(act);
    }
    actions.reverse();

    if value[(n_d - 1) * n_e] == NEG {
        return AllocationPlan::infeasible_offload(m);
    }

    // forward pass along the grid path, then exact re-evaluation
    let mut allocations = Vec::with_capacity(m);
    let (mut b, mut e) = (n_d - 1, 0usize);
    for (n, blk) in blocks.iter().enumerate() {
        let a = actions[n][b * n_e + e] as usize;
        let bits = a as f64 * d_step;
        allocations.push(bits);
        let g = reward(blk, bits, e as f64 * e_step).expect("action was admissible");
        let r_next = (e as f64 * e_step + g).max(0.0);
        e = ((r_next / e_step) as usize).min(n_e - 1);
        b -= a;
    }
    allocate_offload_fixed(&allocations, gains, cfg)
}

/// Equal split of the input across `m` blocks.
pub fn allocate_equal(total_bits: f64, m: usize) -> Vec<f64> {
    assert!(m >= 1);
    vec![total_bits / m as f64; m]
}

fn block_config(cfg: &OffloadConfig, gains: &BlockGains) -> OffloadConfig {
    let mut c = *cfg;
    c.deadline = gains.block_duration();
    c
}
